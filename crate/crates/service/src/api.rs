//! Request bodies and response views of the `/v1` API.
//!
//! Field names follow the CLI flags (`layers`, `hidden`, `ffn`, `expert_ffn`,
//! `size`, `act`, `tokens`, `gamma`). Sizes are billions of parameters and
//! token counts are trillions.

use serde::{Deserialize, Serialize};

use perflaw::calibration::{ContaminationFlag, FitSample, HealthStatus};
use perflaw::law::{mmlu_to_mmlu_pro, Architecture, DenseArch, MoeArch, PredictionResult};
use perflaw::planner::{ExpansionResult, GridRange, MoeSearch, SearchHit, SplitBudget, SweepPoint, SweepVariable};
use perflaw::{Result, TrainingSpec};

fn one() -> f64 {
    1.0
}

fn default_top_k() -> usize {
    10
}

fn default_split_grid() -> usize {
    41
}

fn default_recovery() -> f64 {
    perflaw::planner::DEFAULT_RECOVERY_SCALE
}

fn default_healthy() -> f64 {
    perflaw::calibration::DEFAULT_HEALTHY_GAMMA
}

fn default_threshold() -> f64 {
    perflaw::calibration::DEFAULT_CONTAMINATION_THRESHOLD
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DenseShape {
    pub layers: u32,
    pub hidden: u32,
    pub ffn: u32,
    pub size: f64,
    #[serde(default = "one")]
    pub gamma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MoeShape {
    pub layers: u32,
    pub hidden: u32,
    pub ffn: u32,
    pub expert_ffn: u32,
    pub size: f64,
    pub act: f64,
    #[serde(default = "one")]
    pub gamma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ArchShape {
    Dense(DenseShape),
    Moe(MoeShape),
}

impl DenseShape {
    pub fn arch(&self) -> Result<DenseArch> {
        let a = DenseArch::new(self.layers, self.hidden, self.ffn, self.size)?.with_gamma(self.gamma);
        a.validate()?;
        Ok(a)
    }
}

impl MoeShape {
    pub fn arch(&self) -> Result<MoeArch> {
        let a = MoeArch::new(self.layers, self.hidden, self.ffn, self.expert_ffn, self.size, self.act)?
            .with_gamma(self.gamma);
        a.validate()?;
        Ok(a)
    }
}

impl ArchShape {
    pub fn arch(&self) -> Result<Architecture> {
        Ok(match self {
            ArchShape::Dense(s) => Architecture::Dense(s.arch()?),
            ArchShape::Moe(s) => Architecture::Moe(s.arch()?),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PredictDenseRequest {
    pub layers: u32,
    pub hidden: u32,
    pub ffn: u32,
    pub size: f64,
    pub tokens: f64,
    #[serde(default = "one")]
    pub gamma: f64,
}

impl PredictDenseRequest {
    pub fn shape(&self) -> DenseShape {
        DenseShape {
            layers: self.layers,
            hidden: self.hidden,
            ffn: self.ffn,
            size: self.size,
            gamma: self.gamma,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PredictMoeRequest {
    pub layers: u32,
    pub hidden: u32,
    pub ffn: u32,
    pub expert_ffn: u32,
    pub size: f64,
    pub act: f64,
    pub tokens: f64,
    #[serde(default = "one")]
    pub gamma: f64,
}

impl PredictMoeRequest {
    pub fn shape(&self) -> MoeShape {
        MoeShape {
            layers: self.layers,
            hidden: self.hidden,
            ffn: self.ffn,
            expert_ffn: self.expert_ffn,
            size: self.size,
            act: self.act,
            gamma: self.gamma,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepRequest {
    pub variable: SweepVariable,
    pub min: f64,
    pub max: f64,
    pub steps: usize,
    pub arch: ArchShape,
    pub tokens: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchRequest {
    pub max_params: f64,
    pub tokens: f64,
    #[serde(default = "one")]
    pub gamma: f64,
    pub layers: GridRange,
    pub hidden: GridRange,
    pub ffn: GridRange,
    #[serde(default)]
    pub vocab_size: Option<u64>,
    #[serde(default)]
    pub moe: Option<MoeSearch>,
    #[serde(default = "default_top_k")]
    pub top_k: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExpandPredictRequest {
    pub small: DenseShape,
    pub large: DenseShape,
    pub small_tokens: f64,
    pub large_tokens: f64,
    #[serde(default = "default_recovery")]
    pub recovery_scale: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExpandOptimizeRequest {
    pub small: DenseShape,
    pub large: DenseShape,
    pub total_tokens: f64,
    #[serde(default = "default_split_grid")]
    pub grid: usize,
    #[serde(default)]
    pub budget: SplitBudget,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitObservation {
    pub arch: ArchShape,
    pub tokens: f64,
    pub observed: f64,
    #[serde(default = "one")]
    pub weight: f64,
}

/// Either observations to featurize or ready-made feature rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitRequest {
    #[serde(default)]
    pub observations: Vec<FitObservation>,
    #[serde(default)]
    pub samples: Vec<FitSample>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GammaRequest {
    pub layers: u32,
    pub hidden: u32,
    pub ffn: u32,
    pub size: f64,
    pub tokens: f64,
    pub observed: f64,
    #[serde(default = "default_healthy")]
    pub healthy_max: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContaminationRequest {
    pub predicted: f64,
    pub observed: f64,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PredictionView {
    pub raw: f64,
    pub adjusted: f64,
    pub effective_tokens: f64,
    pub discount: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expansion_factor: Option<f64>,
    pub token_clipped: bool,
    /// Present only when the adjusted score is above 70.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mmlu_pro: Option<f64>,
}

impl From<PredictionResult> for PredictionView {
    fn from(p: PredictionResult) -> Self {
        PredictionView {
            raw: p.raw_score,
            adjusted: p.adjusted_score,
            effective_tokens: p.effective_tokens,
            discount: p.discount,
            expansion_factor: p.expansion_factor,
            token_clipped: p.token_clipped,
            mmlu_pro: mmlu_to_mmlu_pro(p.adjusted_score).ok(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepView {
    pub variable: SweepVariable,
    pub points: Vec<SweepPoint>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchHitView {
    pub arch: Architecture,
    pub estimated_params: f64,
    pub prediction: PredictionView,
}

impl From<SearchHit> for SearchHitView {
    fn from(h: SearchHit) -> Self {
        SearchHitView {
            arch: h.arch,
            estimated_params: h.estimated_params,
            prediction: h.prediction.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpansionView {
    pub ratio: f64,
    pub layers: f64,
    pub hidden: f64,
    pub ffn: f64,
    pub prediction: PredictionView,
}

impl From<ExpansionResult> for ExpansionView {
    fn from(r: ExpansionResult) -> Self {
        ExpansionView {
            ratio: r.ratio,
            layers: r.n_layers,
            hidden: r.hidden_size,
            ffn: r.ffn_size,
            prediction: r.prediction.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaView {
    pub gamma: Option<f64>,
    pub feasible: bool,
    pub health: HealthStatus,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContaminationView {
    /// `observed - predicted`.
    pub gap: f64,
    pub flag: ContaminationFlag,
}

pub fn training(tokens: f64) -> Result<TrainingSpec> {
    TrainingSpec::new(tokens)
}
