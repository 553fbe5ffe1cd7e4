//! Planning on top of the law: sweeps, architecture search and expansion
//! (upcycling) schedules.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{ensure, LawError, Result};
use crate::law::{
    adjust_high_score, dense_from_shape, discount_for, estimate_param_count, log_linear,
    moe_from_shape, predict_moe, Architecture, DenseArch, MoeArch, PredictionResult,
    RegressionWeights, TrainingSpec,
};
use crate::par::{self, Execution};

/// Denominator of the recovery term in the expansion interpolation.
pub const DEFAULT_RECOVERY_SCALE: f64 = 0.1;

/// Hardware-friendly granularity for hidden and FFN grids.
pub const DEFAULT_DIM_STEP: u32 = 128;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVariable {
    Gamma,
    Tokens,
    NLayers,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub variable: SweepVariable,
    pub min: f64,
    pub max: f64,
    pub steps: usize,
    pub base: Architecture,
    pub train: TrainingSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub x: f64,
    pub raw_score: f64,
    pub adjusted_score: f64,
}

impl SweepVariable {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "gamma" => Some(SweepVariable::Gamma),
            "tokens" => Some(SweepVariable::Tokens),
            "n_layers" | "layers" => Some(SweepVariable::NLayers),
            _ => None,
        }
    }
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        self.base.validate()?;
        self.train.validate()?;
        ensure(self.min.is_finite() && self.max.is_finite() && self.min < self.max, || {
            format!("sweep range must satisfy min < max, got [{}, {}]", self.min, self.max)
        })?;
        ensure(self.steps >= 2, || format!("sweep needs at least 2 steps, got {}", self.steps))?;
        match self.variable {
            SweepVariable::Gamma => ensure(self.min >= 0.0, || "gamma sweep must start at >= 0".into()),
            SweepVariable::Tokens => ensure(self.min > 0.0, || "token sweep must start above 0".into()),
            SweepVariable::NLayers => ensure(self.min > 0.0, || "layer sweep must start above 0".into()),
        }
    }

    /// Evenly spaced grid; the endpoints are hit exactly.
    pub fn grid(&self) -> Vec<f64> {
        let last = (self.steps - 1) as f64;
        (0..self.steps)
            .map(|i| {
                if i + 1 == self.steps {
                    self.max
                } else {
                    self.min + (self.max - self.min) * (i as f64 / last)
                }
            })
            .collect()
    }
}

pub fn sweep(spec: &SweepSpec, weights: &RegressionWeights) -> Result<Vec<SweepPoint>> {
    sweep_with(spec, weights, Execution::default())
}

pub fn sweep_with(spec: &SweepSpec, weights: &RegressionWeights, exec: Execution) -> Result<Vec<SweepPoint>> {
    spec.validate()?;
    weights.validate()?;
    let grid = spec.grid();
    par::map(exec, &grid, |&x| {
        let p = evaluate_at(spec, x, weights)?;
        Ok(SweepPoint {
            x,
            raw_score: p.raw_score,
            adjusted_score: p.adjusted_score,
        })
    })
    .into_iter()
    .collect()
}

fn evaluate_at(spec: &SweepSpec, x: f64, weights: &RegressionWeights) -> Result<PredictionResult> {
    match spec.variable {
        SweepVariable::Gamma => spec.base.with_gamma(x).predict(&spec.train, weights),
        SweepVariable::Tokens => spec.base.predict(&TrainingSpec { tokens: x }, weights),
        // Depth is evaluated at the real grid point.
        SweepVariable::NLayers => match &spec.base {
            Architecture::Dense(a) => dense_from_shape(
                x,
                a.hidden_size as f64,
                a.ffn_size as f64,
                a.param_count,
                a.gamma,
                spec.train.tokens,
                weights,
            ),
            Architecture::Moe(a) => moe_from_shape(a, x, spec.train.tokens, weights),
        },
    }
}

/// The giant MoE thought experiment: 125T total / 22T active parameters,
/// 1300 layers, hidden 51200, FFN 65536, gamma 1.9, 100T tokens.
pub fn giant_scenario() -> (MoeArch, TrainingSpec) {
    (
        MoeArch {
            n_layers: 1300,
            hidden_size: 51200,
            ffn_size: 65536,
            expert_ffn_size: 65536,
            total_params: 125_000.0,
            active_params: 22_000.0,
            gamma: 1.9,
        },
        TrainingSpec { tokens: 100.0 },
    )
}

pub fn giant_projection(weights: &RegressionWeights) -> Result<PredictionResult> {
    let (arch, train) = giant_scenario();
    predict_moe(&arch, &train, weights)
}

/// Inclusive integer range `min, min + step, ..., <= max`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridRange {
    pub min: u32,
    pub max: u32,
    pub step: u32,
}

impl GridRange {
    pub fn new(min: u32, max: u32, step: u32) -> Self {
        GridRange { min, max, step }
    }

    pub fn single(v: u32) -> Self {
        GridRange { min: v, max: v, step: 1 }
    }

    /// Width range with the default 128 granularity.
    pub fn dims(min: u32, max: u32) -> Self {
        GridRange {
            min,
            max,
            step: DEFAULT_DIM_STEP,
        }
    }

    pub fn validate(&self, name: &str) -> Result<()> {
        ensure(self.min >= 1 && self.min <= self.max && self.step >= 1, || {
            format!(
                "{name} range must satisfy 1 <= min <= max and step >= 1, got {}..={} step {}",
                self.min, self.max, self.step
            )
        })
    }

    pub fn values(&self) -> Vec<u32> {
        (self.min..=self.max).step_by(self.step.max(1) as usize).collect()
    }
}

/// Activation-ratio grid for MoE candidates (`A = ratio * S`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MoeSearch {
    pub min_ratio: f64,
    pub max_ratio: f64,
    pub steps: usize,
}

impl MoeSearch {
    fn validate(&self) -> Result<()> {
        ensure(
            self.min_ratio > 0.0 && self.max_ratio <= 1.0 && self.min_ratio <= self.max_ratio && self.steps >= 1,
            || {
                format!(
                    "activation ratios must satisfy 0 < min <= max <= 1 with steps >= 1, got [{}, {}] x {}",
                    self.min_ratio, self.max_ratio, self.steps
                )
            },
        )
    }

    fn values(&self) -> Vec<f64> {
        if self.steps == 1 || self.min_ratio == self.max_ratio {
            return vec![self.min_ratio];
        }
        let last = (self.steps - 1) as f64;
        (0..self.steps)
            .map(|i| {
                if i + 1 == self.steps {
                    self.max_ratio
                } else {
                    self.min_ratio + (self.max_ratio - self.min_ratio) * (i as f64 / last)
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchConstraints {
    /// Upper bound on the estimated parameter count, in billions.
    pub max_params: f64,
    /// Trillions of training tokens.
    pub token_budget: f64,
    pub gamma: f64,
    pub layers: GridRange,
    pub hidden: GridRange,
    pub ffn: GridRange,
    /// Vocabulary used by the parameter estimate; `None` means the default.
    pub vocab_size: Option<u64>,
    pub moe: Option<MoeSearch>,
}

impl SearchConstraints {
    pub fn validate(&self) -> Result<()> {
        ensure(self.max_params.is_finite() && self.max_params > 0.0, || {
            format!("max_params must be positive, got {}", self.max_params)
        })?;
        ensure(self.token_budget.is_finite() && self.token_budget > 0.0, || {
            format!("token_budget must be positive, got {}", self.token_budget)
        })?;
        ensure(self.gamma.is_finite() && self.gamma >= 0.0, || {
            format!("gamma must be non-negative, got {}", self.gamma)
        })?;
        self.layers.validate("layers")?;
        self.hidden.validate("hidden")?;
        self.ffn.validate("ffn")?;
        if let Some(m) = &self.moe {
            m.validate()?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchHit {
    pub arch: Architecture,
    pub estimated_params: f64,
    pub prediction: PredictionResult,
}

pub fn search_architectures(
    constraints: &SearchConstraints,
    weights: &RegressionWeights,
    top_k: usize,
) -> Result<Vec<SearchHit>> {
    search_architectures_with(constraints, weights, top_k, Execution::default())
}

/// Exhaustive grid search ranked by adjusted score (descending). Ties go to
/// fewer estimated parameters, then fewer layers, then smaller
/// `(hidden, ffn, activation ratio)`.
pub fn search_architectures_with(
    constraints: &SearchConstraints,
    weights: &RegressionWeights,
    top_k: usize,
    exec: Execution,
) -> Result<Vec<SearchHit>> {
    constraints.validate()?;
    weights.validate()?;
    let layers = constraints.layers.values();
    let hidden = constraints.hidden.values();
    let ffn = constraints.ffn.values();
    let ratios = constraints.moe.map(|m| m.values()).unwrap_or_else(|| vec![1.0]);
    let train = TrainingSpec {
        tokens: constraints.token_budget,
    };

    let (nl, nh, nf, nr) = (layers.len(), hidden.len(), ffn.len(), ratios.len());
    let total = nl * nh * nf * nr;
    let mut hits = par::filter_map_range(exec, total, |idx| {
        let r = idx % nr;
        let f = (idx / nr) % nf;
        let h = (idx / (nr * nf)) % nh;
        let l = idx / (nr * nf * nh);
        let (n, hs, fs) = (layers[l], hidden[h], ffn[f]);
        let est = estimate_param_count(n, hs, fs, constraints.vocab_size).ok()?;
        if est > constraints.max_params {
            return None;
        }
        let arch = match constraints.moe {
            None => Architecture::Dense(DenseArch {
                n_layers: n,
                hidden_size: hs,
                ffn_size: fs,
                param_count: est,
                gamma: constraints.gamma,
            }),
            Some(_) => Architecture::Moe(MoeArch {
                n_layers: n,
                hidden_size: hs,
                ffn_size: fs,
                expert_ffn_size: fs,
                total_params: est,
                active_params: est * ratios[r],
                gamma: constraints.gamma,
            }),
        };
        let prediction = arch.predict(&train, weights).ok()?;
        Some(SearchHit {
            arch,
            estimated_params: est,
            prediction,
        })
    });
    if hits.is_empty() {
        return Err(LawError::NoSolution);
    }
    hits.sort_by(rank_order);
    hits.truncate(top_k);
    Ok(hits)
}

fn arch_key(a: &Architecture) -> (u32, u32, u32, f64) {
    match a {
        Architecture::Dense(d) => (d.n_layers, d.hidden_size, d.ffn_size, 1.0),
        Architecture::Moe(m) => (
            m.n_layers,
            m.hidden_size,
            m.ffn_size,
            m.active_params / m.total_params,
        ),
    }
}

fn rank_order(a: &SearchHit, b: &SearchHit) -> Ordering {
    let (ka, kb) = (arch_key(&a.arch), arch_key(&b.arch));
    b.prediction
        .adjusted_score
        .total_cmp(&a.prediction.adjusted_score)
        .then(a.estimated_params.total_cmp(&b.estimated_params))
        .then(ka.0.cmp(&kb.0))
        .then(ka.1.cmp(&kb.1))
        .then(ka.2.cmp(&kb.2))
        .then(ka.3.total_cmp(&kb.3))
}

/// A small dense model trained on `small_tokens`, then grown into `large` and
/// trained for `large_tokens` more.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpansionPlan {
    pub small: DenseArch,
    pub small_tokens: f64,
    pub large: DenseArch,
    pub large_tokens: f64,
    #[serde(default = "default_recovery")]
    pub recovery_scale: f64,
}

fn default_recovery() -> f64 {
    DEFAULT_RECOVERY_SCALE
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpansionResult {
    /// Interpolation weight between the small (0) and large (1) shapes.
    pub ratio: f64,
    pub n_layers: f64,
    pub hidden_size: f64,
    pub ffn_size: f64,
    pub prediction: PredictionResult,
}

impl ExpansionPlan {
    pub fn new(small: DenseArch, small_tokens: f64, large: DenseArch, large_tokens: f64) -> Result<Self> {
        let plan = ExpansionPlan {
            small,
            small_tokens,
            large,
            large_tokens,
            recovery_scale: DEFAULT_RECOVERY_SCALE,
        };
        plan.validate()?;
        Ok(plan)
    }

    pub fn validate(&self) -> Result<()> {
        self.small.validate()?;
        self.large.validate()?;
        for (name, v) in [
            ("small_tokens", self.small_tokens),
            ("large_tokens", self.large_tokens),
            ("recovery_scale", self.recovery_scale),
        ] {
            ensure(v.is_finite() && v > 0.0, || format!("{name} must be positive, got {v}"))?;
        }
        let (s, l) = (&self.small, &self.large);
        ensure(
            l.n_layers >= s.n_layers
                && l.hidden_size >= s.hidden_size
                && l.ffn_size >= s.ffn_size
                && l.param_count >= s.param_count,
            || "the large model must be at least as big as the small one in every dimension".into(),
        )
    }

    /// `(S1 T1 + S2 T2) / ((T1 + T2) S2) - T1 S1 / (S2 (1 + exp(T2 / scale)))`
    ///
    /// The first term is the token-weighted share of the large model; the
    /// second is the damage of the expansion not yet recovered by training.
    pub fn ratio(&self) -> f64 {
        let (s1, t1) = (self.small.param_count, self.small_tokens);
        let (s2, t2) = (self.large.param_count, self.large_tokens);
        ((s1 * t1) + (s2 * t2)) / (t1 + t2) / s2 - t1 * s1 / s2 / (1.0 + (t2 / self.recovery_scale).exp())
    }
}

/// Score after expansion. No saturation clip is applied to the total token
/// count `T1 + T2`; the precision coefficient comes from the large model.
pub fn predict_expanded(plan: &ExpansionPlan, weights: &RegressionWeights) -> Result<ExpansionResult> {
    plan.validate()?;
    weights.validate()?;
    let ratio = plan.ratio();
    let lerp = |a: u32, b: u32| a as f64 + (b as f64 - a as f64) * ratio;
    let n = lerp(plan.small.n_layers, plan.large.n_layers);
    let h = lerp(plan.small.hidden_size, plan.large.hidden_size);
    let d = lerp(plan.small.ffn_size, plan.large.ffn_size);
    for (term, v) in [("layers", n), ("hidden", h), ("ffn", d)] {
        if v.is_nan() || v <= 0.0 {
            return Err(LawError::NegativeLog { term, value: v });
        }
    }
    let tokens = plan.small_tokens + plan.large_tokens;
    let u = discount_for(n, h, d, plan.large.gamma);
    let raw = log_linear(weights, u, n, h, d, tokens)?;
    Ok(ExpansionResult {
        ratio,
        n_layers: n,
        hidden_size: h,
        ffn_size: d,
        prediction: PredictionResult {
            raw_score: raw,
            adjusted_score: adjust_high_score(raw),
            effective_tokens: tokens,
            discount: u,
            expansion_factor: None,
            token_clipped: false,
        },
    })
}

/// How a fixed budget is shared between the two training phases.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitBudget {
    /// `T1 + T2 = total`.
    Tokens,
    /// `S1 T1 + S2 T2 = S2 total`: the budget is compute, counted in tokens
    /// of the large model, so a small-model token costs `S1 / S2` of one.
    #[default]
    Compute,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitPoint {
    pub small_tokens: f64,
    pub large_tokens: f64,
    /// `None` when the plan is infeasible (non-positive interpolated dims).
    pub score: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitOptimum {
    pub small_tokens: f64,
    pub large_tokens: f64,
    pub score: f64,
    pub index: usize,
    pub evaluated: Vec<SplitPoint>,
}

pub fn optimize_expansion_split(
    small: &DenseArch,
    large: &DenseArch,
    total_tokens: f64,
    weights: &RegressionWeights,
    grid: usize,
    budget: SplitBudget,
) -> Result<SplitOptimum> {
    optimize_expansion_split_with(small, large, total_tokens, weights, grid, budget, Execution::default())
}

/// Evaluates `grid` interior splits of the budget and returns the best one.
/// The small-model share runs over `total * i / (grid + 1)` for
/// `i = 1..=grid` (scaled by `S2 / S1` under a compute budget). Ties keep the
/// earlier split.
pub fn optimize_expansion_split_with(
    small: &DenseArch,
    large: &DenseArch,
    total_tokens: f64,
    weights: &RegressionWeights,
    grid: usize,
    budget: SplitBudget,
    exec: Execution,
) -> Result<SplitOptimum> {
    ensure(total_tokens.is_finite() && total_tokens > 0.0, || {
        format!("total_tokens must be positive, got {total_tokens}")
    })?;
    ensure(grid >= 3, || format!("split grid needs at least 3 points, got {grid}"))?;
    small.validate()?;
    large.validate()?;
    // Validates the size ordering once up front.
    ExpansionPlan::new(*small, total_tokens / 2.0, *large, total_tokens / 2.0)?;

    let cost = small.param_count / large.param_count;
    let span = match budget {
        SplitBudget::Tokens => total_tokens,
        SplitBudget::Compute => total_tokens / cost,
    };
    let evaluated = par::map_range(exec, grid, |i| {
        let t1 = span * (i + 1) as f64 / (grid + 1) as f64;
        let t2 = match budget {
            SplitBudget::Tokens => total_tokens - t1,
            SplitBudget::Compute => total_tokens - t1 * cost,
        };
        let score = ExpansionPlan {
            small: *small,
            small_tokens: t1,
            large: *large,
            large_tokens: t2,
            recovery_scale: DEFAULT_RECOVERY_SCALE,
        };
        let score = predict_expanded(&score, weights)
            .ok()
            .map(|r| r.prediction.adjusted_score);
        SplitPoint {
            small_tokens: t1,
            large_tokens: t2,
            score,
        }
    });

    let mut best: Option<(usize, f64)> = None;
    for (i, p) in evaluated.iter().enumerate() {
        if let Some(s) = p.score {
            if best.is_none_or(|(_, b)| s > b) {
                best = Some((i, s));
            }
        }
    }
    let (index, score) = best.ok_or(LawError::NoSolution)?;
    Ok(SplitOptimum {
        small_tokens: evaluated[index].small_tokens,
        large_tokens: evaluated[index].large_tokens,
        score,
        index,
        evaluated,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::law::predict_dense;

    fn w() -> RegressionWeights {
        RegressionWeights::PUBLISHED
    }

    fn seven_b() -> DenseArch {
        DenseArch::new(32, 4096, 14336, 7.0).unwrap()
    }

    fn seventy_b() -> DenseArch {
        DenseArch::new(80, 8192, 28672, 70.0).unwrap()
    }

    fn gamma_sweep(n: u32) -> SweepSpec {
        SweepSpec {
            variable: SweepVariable::Gamma,
            min: 1.0,
            max: 3.0,
            steps: 21,
            base: DenseArch::new(n, 8192, 28672, 70.0).unwrap().into(),
            train: TrainingSpec { tokens: 15.0 },
        }
    }

    #[test]
    fn gamma_sweep_decays_for_every_depth() {
        for n in [40, 60, 80, 100, 120, 140] {
            let pts = sweep(&gamma_sweep(n), &w()).unwrap();
            assert_eq!(pts.len(), 21);
            for pair in pts.windows(2) {
                assert!(pair[1].adjusted_score < pair[0].adjusted_score, "depth {n}");
            }
        }
    }

    #[test]
    fn token_sweep_increases_below_clip() {
        let spec = SweepSpec {
            variable: SweepVariable::Tokens,
            min: 0.1,
            max: 7.0,
            steps: 30,
            base: seven_b().into(),
            train: TrainingSpec { tokens: 1.0 },
        };
        let pts = sweep(&spec, &w()).unwrap();
        for pair in pts.windows(2) {
            assert!(pair[1].raw_score > pair[0].raw_score);
        }
    }

    #[test]
    fn two_steps_are_the_endpoints() {
        let mut spec = gamma_sweep(80);
        spec.steps = 2;
        let xs: Vec<f64> = sweep(&spec, &w()).unwrap().iter().map(|p| p.x).collect();
        assert_eq!(xs, vec![1.0, 3.0]);
    }

    #[test]
    fn sweep_rejects_bad_ranges() {
        let mut spec = gamma_sweep(80);
        spec.min = 3.0;
        assert!(sweep(&spec, &w()).is_err());
        let mut spec = gamma_sweep(80);
        spec.steps = 1;
        assert!(sweep(&spec, &w()).is_err());
        let mut spec = gamma_sweep(80);
        spec.variable = SweepVariable::Tokens;
        spec.min = 0.0;
        assert!(sweep(&spec, &w()).is_err());
    }

    #[test]
    fn layer_sweep_matches_integer_predictions() {
        let spec = SweepSpec {
            variable: SweepVariable::NLayers,
            min: 20.0,
            max: 120.0,
            steps: 11,
            base: seventy_b().into(),
            train: TrainingSpec { tokens: 15.0 },
        };
        for p in sweep(&spec, &w()).unwrap() {
            let arch = DenseArch {
                n_layers: p.x as u32,
                ..seventy_b()
            };
            let direct = predict_dense(&arch, &spec.train, &w()).unwrap();
            assert_eq!(p.raw_score, direct.raw_score);
        }
    }

    #[test]
    fn giant_projection_and_gamma_ordering() {
        let p = giant_projection(&w()).unwrap();
        assert!(p.raw_score > 90.0);
        assert!((p.adjusted_score - 94.77).abs() < 0.5);
        let (arch, train) = giant_scenario();
        let at = |g: f64| predict_moe(&arch.with_gamma(g), &train, &w()).unwrap().adjusted_score;
        assert!(at(1.0) > p.adjusted_score);
        assert!(at(3.0) < p.adjusted_score);
    }

    fn constraints() -> SearchConstraints {
        SearchConstraints {
            max_params: 8.0,
            token_budget: 15.0,
            gamma: 1.0,
            layers: GridRange::new(24, 40, 4),
            hidden: GridRange::dims(3584, 4608),
            ffn: GridRange::new(12288, 16384, 1024),
            vocab_size: Some(0),
            moe: None,
        }
    }

    #[test]
    fn singleton_grid_returns_that_arch() {
        let c = SearchConstraints {
            layers: GridRange::single(32),
            hidden: GridRange::single(4096),
            ffn: GridRange::single(14336),
            ..constraints()
        };
        let hits = search_architectures(&c, &w(), 5).unwrap();
        assert_eq!(hits.len(), 1);
        match hits[0].arch {
            Architecture::Dense(a) => assert_eq!((a.n_layers, a.hidden_size, a.ffn_size), (32, 4096, 14336)),
            _ => panic!("expected dense"),
        }
    }

    #[test]
    fn top_k_truncates_to_grid() {
        let c = SearchConstraints {
            layers: GridRange::new(30, 32, 2),
            hidden: GridRange::single(4096),
            ffn: GridRange::single(14336),
            ..constraints()
        };
        assert_eq!(search_architectures(&c, &w(), 3).unwrap().len(), 2);
    }

    #[test]
    fn search_beats_reference_shape_in_grid() {
        let c = constraints();
        let hits = search_architectures(&c, &w(), 10).unwrap();
        let est = estimate_param_count(32, 4096, 14336, Some(0)).unwrap();
        assert!(est <= c.max_params);
        let reference = DenseArch::new(32, 4096, 14336, est).unwrap();
        let floor = predict_dense(&reference, &TrainingSpec { tokens: 15.0 }, &w()).unwrap();
        assert!(hits[0].prediction.adjusted_score >= floor.adjusted_score);
        for h in &hits {
            assert!(h.estimated_params <= c.max_params);
        }
        for pair in hits.windows(2) {
            assert!(pair[0].prediction.adjusted_score >= pair[1].prediction.adjusted_score);
        }
    }

    #[test]
    fn infeasible_budget_is_no_solution() {
        let c = SearchConstraints {
            max_params: 0.001,
            ..constraints()
        };
        assert_eq!(search_architectures(&c, &w(), 3).unwrap_err(), LawError::NoSolution);
    }

    #[test]
    fn moe_search_uses_ratio_grid() {
        let c = SearchConstraints {
            moe: Some(MoeSearch {
                min_ratio: 0.1,
                max_ratio: 0.5,
                steps: 5,
            }),
            max_params: 60.0,
            layers: GridRange::single(32),
            hidden: GridRange::single(4096),
            ffn: GridRange::single(14336),
            ..constraints()
        };
        let hits = search_architectures(&c, &w(), 10).unwrap();
        assert_eq!(hits.len(), 5);
        assert!(hits.iter().all(|h| matches!(h.arch, Architecture::Moe(_))));
    }

    #[test]
    fn expansion_listing() {
        let plan = ExpansionPlan::new(seven_b(), 3.0, seventy_b(), 1.0).unwrap();
        let r = predict_expanded(&plan, &w()).unwrap();
        assert_eq!(r.prediction.raw_score, 67.00187378584985);
    }

    #[test]
    fn expansion_limits() {
        // Long second phase: ratio -> weighted mean, recovery -> 0.
        let plan = ExpansionPlan::new(seven_b(), 3.0, seventy_b(), 1e6).unwrap();
        let mean = (7.0 * 3.0 + 70.0 * 1e6) / ((3.0 + 1e6) * 70.0);
        assert!((plan.ratio() - mean).abs() < 1e-15);

        // Tiny second phase: recovery penalty is T1 S1 / (2 S2).
        let plan = ExpansionPlan::new(seven_b(), 3.0, seventy_b(), 1e-9).unwrap();
        let first = (7.0 * 3.0 + 70.0 * 1e-9) / ((3.0 + 1e-9) * 70.0);
        assert!((first - plan.ratio() - 3.0 * 7.0 / 140.0).abs() < 1e-8);
    }

    #[test]
    fn same_size_expansion_converges_to_dense() {
        let plan = ExpansionPlan::new(seventy_b(), 2.0, seventy_b(), 5.0).unwrap();
        let r = predict_expanded(&plan, &w()).unwrap();
        let d = predict_dense(&seventy_b(), &TrainingSpec { tokens: 7.0 }, &w()).unwrap();
        assert!((r.prediction.raw_score - d.raw_score).abs() < 1e-6);
    }

    #[test]
    fn expansion_rejects_shrinking() {
        assert!(ExpansionPlan::new(seventy_b(), 1.0, seven_b(), 1.0).is_err());
    }

    #[test]
    fn negative_interpolation_is_domain_error() {
        // Huge first phase on a comparatively big small model drives the
        // ratio far below zero before any recovery happens.
        let small = DenseArch::new(2, 64, 64, 60.0).unwrap();
        let large = DenseArch::new(80, 8192, 28672, 70.0).unwrap();
        let plan = ExpansionPlan::new(small, 100.0, large, 0.01).unwrap();
        assert!(plan.ratio() < 0.0);
        assert_eq!(predict_expanded(&plan, &w()).unwrap_err().code(), "DOMAIN_NEGATIVE_LOG");
    }

    #[test]
    fn split_grid_sizes_and_token_budget_behaviour() {
        let opt = optimize_expansion_split(&seven_b(), &seventy_b(), 4.0, &w(), 3, SplitBudget::Tokens).unwrap();
        assert_eq!(opt.evaluated.len(), 3);
        let t1: Vec<f64> = opt.evaluated.iter().map(|p| p.small_tokens).collect();
        assert_eq!(t1, vec![1.0, 2.0, 3.0]);
        // 3T + 1T is exactly the reference listing.
        assert_eq!(opt.evaluated[2].score, Some(67.00187378584985));

        let tiny = optimize_expansion_split(&seven_b(), &seventy_b(), 0.2, &w(), 41, SplitBudget::Tokens).unwrap();
        assert_eq!(tiny.index, 0);
    }

    #[test]
    fn compute_budget_has_interior_optimum() {
        let opt = optimize_expansion_split(&seven_b(), &seventy_b(), 4.0, &w(), 41, SplitBudget::Compute).unwrap();
        assert!(opt.index > 0 && opt.index < 40, "{}", opt.index);
        for p in &opt.evaluated {
            let spent = 7.0 * p.small_tokens + 70.0 * p.large_tokens;
            assert!((spent - 280.0).abs() < 1e-9);
        }
    }

    #[test]
    fn split_preconditions() {
        let w = w();
        assert!(optimize_expansion_split(&seven_b(), &seventy_b(), 0.0, &w, 5, SplitBudget::Tokens).is_err());
        assert!(optimize_expansion_split(&seven_b(), &seventy_b(), 4.0, &w, 2, SplitBudget::Tokens).is_err());
    }
}
