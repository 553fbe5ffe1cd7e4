//! Closed-form score law for dense and mixture-of-experts Transformers.
//!
//! A dense model is described by its depth `N`, hidden width `h`, FFN width
//! `d`, parameter count `S` (billions) and a precision coefficient `gamma`.
//! Training data `T` is given in trillions of tokens. The predicted MMLU is
//!
//! ```text
//! u     = exp(-[(10/d + 20/h) * gamma * N]^2)
//! T'    = min(T, S)
//! MMLU  = w1 ln(uN) + w2 ln(uh) + w3 ln(ud) + w4 ln(uT') + b
//! ```
//!
//! Note the saturation clip compares trillions of tokens against billions of
//! parameters as bare numbers. That is intentional and matches the published
//! reference numbers.
//!
//! MoE models scale depth and width by an expansion factor `g` computed from
//! total (`S`) and activated (`A`) parameters, use the widest activated expert
//! FFN `d'` inside the discount, and clip tokens at `sqrt(A * S)`.

use serde::{Deserialize, Serialize};

use crate::error::{ensure, LawError, Result};

/// Scores above this are squashed towards 100.
pub const HIGH_SCORE_KNEE: f64 = 90.0;

/// Default vocabulary size for [`estimate_param_count`].
pub const DEFAULT_VOCAB_SIZE: u64 = 128_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DenseArch {
    pub n_layers: u32,
    pub hidden_size: u32,
    pub ffn_size: u32,
    /// Billions of parameters.
    pub param_count: f64,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MoeArch {
    pub n_layers: u32,
    pub hidden_size: u32,
    /// Dense (or compressed) FFN width; feeds the `ln(u'd)` term.
    pub ffn_size: u32,
    /// Widest FFN among the activated experts; feeds the discount.
    pub expert_ffn_size: u32,
    /// Billions of parameters in total.
    pub total_params: f64,
    /// Billions of parameters activated per token.
    pub active_params: f64,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainingSpec {
    /// Trillions of training tokens.
    pub tokens: f64,
}

/// Coefficients of the log-linear law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegressionWeights {
    pub w1: f64,
    pub w2: f64,
    pub w3: f64,
    pub w4: f64,
    pub b: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PredictionResult {
    pub raw_score: f64,
    pub adjusted_score: f64,
    /// Tokens after the saturation clip, in trillions.
    pub effective_tokens: f64,
    /// Unstable discount `u` (or `u'` for MoE).
    pub discount: f64,
    /// MoE expansion factor `g`; absent for dense models.
    pub expansion_factor: Option<f64>,
    pub token_clipped: bool,
}

/// Either kind of architecture, tagged by `kind` when serialized.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Architecture {
    Dense(DenseArch),
    Moe(MoeArch),
}

fn default_gamma() -> f64 {
    1.0
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    ensure(v.is_finite() && v > 0.0, || format!("{name} must be positive and finite, got {v}"))
}

fn check_gamma(gamma: f64) -> Result<()> {
    ensure(gamma.is_finite() && gamma >= 0.0, || {
        format!("gamma must be non-negative and finite, got {gamma}")
    })
}

fn check_count(name: &str, v: u32) -> Result<()> {
    ensure(v >= 1, || format!("{name} must be at least 1"))
}

impl DenseArch {
    pub fn new(n_layers: u32, hidden_size: u32, ffn_size: u32, param_count: f64) -> Result<Self> {
        let arch = DenseArch {
            n_layers,
            hidden_size,
            ffn_size,
            param_count,
            gamma: 1.0,
        };
        arch.validate()?;
        Ok(arch)
    }

    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.gamma = gamma;
        self
    }

    pub fn validate(&self) -> Result<()> {
        check_count("n_layers", self.n_layers)?;
        check_count("hidden_size", self.hidden_size)?;
        check_count("ffn_size", self.ffn_size)?;
        check_positive("param_count", self.param_count)?;
        check_gamma(self.gamma)
    }
}

impl MoeArch {
    pub fn new(
        n_layers: u32,
        hidden_size: u32,
        ffn_size: u32,
        expert_ffn_size: u32,
        total_params: f64,
        active_params: f64,
    ) -> Result<Self> {
        let arch = MoeArch {
            n_layers,
            hidden_size,
            ffn_size,
            expert_ffn_size,
            total_params,
            active_params,
            gamma: 1.0,
        };
        arch.validate()?;
        Ok(arch)
    }

    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.gamma = gamma;
        self
    }

    pub fn validate(&self) -> Result<()> {
        check_count("n_layers", self.n_layers)?;
        check_count("hidden_size", self.hidden_size)?;
        check_count("ffn_size", self.ffn_size)?;
        check_count("expert_ffn_size", self.expert_ffn_size)?;
        check_positive("total_params", self.total_params)?;
        check_positive("active_params", self.active_params)?;
        ensure(self.active_params <= self.total_params, || {
            format!(
                "active_params ({}) must not exceed total_params ({})",
                self.active_params, self.total_params
            )
        })?;
        check_gamma(self.gamma)
    }

    /// Dense-equivalent capacity `sqrt(A * S)`, used for the token clip.
    pub fn capacity(&self) -> f64 {
        (self.active_params * self.total_params).sqrt()
    }
}

impl TrainingSpec {
    pub fn new(tokens: f64) -> Result<Self> {
        let t = TrainingSpec { tokens };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        check_positive("tokens", self.tokens)
    }
}

impl RegressionWeights {
    /// The published coefficients.
    pub const PUBLISHED: RegressionWeights = RegressionWeights {
        w1: 13.95018,
        w2: 0.23072,
        w3: -0.48523,
        w4: 5.39802,
        b: 9.19541,
    };

    pub fn slopes(&self) -> [f64; 4] {
        [self.w1, self.w2, self.w3, self.w4]
    }

    pub fn slope_sum(&self) -> f64 {
        self.w1 + self.w2 + self.w3 + self.w4
    }

    pub fn from_slopes(slopes: [f64; 4], b: f64) -> Self {
        RegressionWeights {
            w1: slopes[0],
            w2: slopes[1],
            w3: slopes[2],
            w4: slopes[3],
            b,
        }
    }

    pub fn validate(&self) -> Result<()> {
        ensure(self.slopes().iter().chain([&self.b]).all(|v| v.is_finite()), || {
            "regression weights must be finite".to_string()
        })
    }
}

impl Default for RegressionWeights {
    fn default() -> Self {
        Self::PUBLISHED
    }
}

impl Architecture {
    pub fn gamma(&self) -> f64 {
        match self {
            Architecture::Dense(a) => a.gamma,
            Architecture::Moe(a) => a.gamma,
        }
    }

    pub fn with_gamma(self, gamma: f64) -> Self {
        match self {
            Architecture::Dense(a) => Architecture::Dense(a.with_gamma(gamma)),
            Architecture::Moe(a) => Architecture::Moe(a.with_gamma(gamma)),
        }
    }

    pub fn n_layers(&self) -> u32 {
        match self {
            Architecture::Dense(a) => a.n_layers,
            Architecture::Moe(a) => a.n_layers,
        }
    }

    /// Token count beyond which more data no longer helps.
    pub fn token_capacity(&self) -> f64 {
        match self {
            Architecture::Dense(a) => a.param_count,
            Architecture::Moe(a) => a.capacity(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Architecture::Dense(a) => a.validate(),
            Architecture::Moe(a) => a.validate(),
        }
    }

    pub fn predict(&self, train: &TrainingSpec, weights: &RegressionWeights) -> Result<PredictionResult> {
        match self {
            Architecture::Dense(a) => predict_dense(a, train, weights),
            Architecture::Moe(a) => predict_moe(a, train, weights),
        }
    }
}

impl From<DenseArch> for Architecture {
    fn from(a: DenseArch) -> Self {
        Architecture::Dense(a)
    }
}

impl From<MoeArch> for Architecture {
    fn from(a: MoeArch) -> Self {
        Architecture::Moe(a)
    }
}

/// Saturation clip `min(tokens, capacity)`. The boolean is true when the clip
/// was active.
pub fn effective_tokens(tokens: f64, capacity: f64) -> Result<(f64, bool)> {
    check_positive("tokens", tokens)?;
    check_positive("capacity", capacity)?;
    if capacity < tokens {
        Ok((capacity, true))
    } else {
        Ok((tokens, false))
    }
}

/// `exp(-[(10/ffn + 20/hidden) * gamma * layers]^2)` on real-valued dims.
pub(crate) fn discount_for(layers: f64, hidden: f64, ffn: f64, gamma: f64) -> f64 {
    let x = (10.0 / ffn + 20.0 / hidden) * gamma * layers;
    (-(x * x)).exp()
}

pub fn unstable_discount(arch: &DenseArch) -> Result<f64> {
    arch.validate()?;
    Ok(discount_for(
        arch.n_layers as f64,
        arch.hidden_size as f64,
        arch.ffn_size as f64,
        arch.gamma,
    ))
}

/// `w1 ln(u N) + w2 ln(u h) + w3 ln(u d) + w4 ln(u T) + b`.
pub(crate) fn log_linear(
    weights: &RegressionWeights,
    discount: f64,
    layers: f64,
    hidden: f64,
    ffn: f64,
    tokens: f64,
) -> Result<f64> {
    let features = log_features(discount, layers, hidden, ffn, tokens)?;
    let mut sum = 0.0;
    for (w, f) in weights.slopes().iter().zip(features) {
        sum += w * f;
    }
    Ok(sum + weights.b)
}

pub(crate) fn log_features(
    discount: f64,
    layers: f64,
    hidden: f64,
    ffn: f64,
    tokens: f64,
) -> Result<[f64; 4]> {
    const TERMS: [&str; 4] = ["layers", "hidden", "ffn", "tokens"];
    let args = [discount * layers, discount * hidden, discount * ffn, discount * tokens];
    let mut out = [0.0; 4];
    for (i, arg) in args.into_iter().enumerate() {
        if !arg.is_finite() || arg <= 0.0 {
            return Err(LawError::NegativeLog {
                term: TERMS[i],
                value: arg,
            });
        }
        out[i] = arg.ln();
    }
    Ok(out)
}

pub fn predict_dense(
    arch: &DenseArch,
    train: &TrainingSpec,
    weights: &RegressionWeights,
) -> Result<PredictionResult> {
    arch.validate()?;
    train.validate()?;
    weights.validate()?;
    dense_from_shape(
        arch.n_layers as f64,
        arch.hidden_size as f64,
        arch.ffn_size as f64,
        arch.param_count,
        arch.gamma,
        train.tokens,
        weights,
    )
}

/// Dense prediction on real-valued dims. Callers validate.
pub(crate) fn dense_from_shape(
    n: f64,
    h: f64,
    d: f64,
    size: f64,
    gamma: f64,
    tokens: f64,
    weights: &RegressionWeights,
) -> Result<PredictionResult> {
    let (tokens, clipped) = effective_tokens(tokens, size)?;
    let u = discount_for(n, h, d, gamma);
    let raw = log_linear(weights, u, n, h, d, tokens)?;
    Ok(PredictionResult {
        raw_score: raw,
        adjusted_score: adjust_high_score(raw),
        effective_tokens: tokens,
        discount: u,
        expansion_factor: None,
        token_clipped: clipped,
    })
}

/// Expansion factor `g` applied to MoE depth and width.
pub fn moe_expansion_factor(moe: &MoeArch) -> Result<f64> {
    moe.validate()?;
    Ok(expansion_factor(moe.total_params, moe.active_params))
}

pub(crate) fn expansion_factor(total: f64, active: f64) -> f64 {
    // (1 + sqrt(4A/S)) / 2 == 0.5 + sqrt(A/S); this grouping keeps the
    // reference outputs bit-identical.
    let side = ((active * total).sqrt() / active).powf(1.0 / 3.0);
    let activation = (1.0 + (4.0 * active / total).sqrt()) / 2.0;
    side * activation * (1.0 / (1.0 + (-active / 4.0).exp()))
}

/// MoE prediction. Depth and width are scaled by `g` before the discount is
/// taken, the discount uses the expert width `d'`, and the `ln(u'd)` term uses
/// the dense FFN width `d`.
pub fn predict_moe(
    moe: &MoeArch,
    train: &TrainingSpec,
    weights: &RegressionWeights,
) -> Result<PredictionResult> {
    moe.validate()?;
    train.validate()?;
    weights.validate()?;
    moe_from_shape(moe, moe.n_layers as f64, train.tokens, weights)
}

/// MoE prediction with a real-valued (unscaled) depth. Callers validate.
pub(crate) fn moe_from_shape(
    moe: &MoeArch,
    n_layers: f64,
    tokens: f64,
    weights: &RegressionWeights,
) -> Result<PredictionResult> {
    let g = expansion_factor(moe.total_params, moe.active_params);
    let n = n_layers * g;
    let h = moe.hidden_size as f64 * g;
    let (tokens, clipped) = effective_tokens(tokens, moe.capacity())?;
    let u = discount_for(n, h, moe.expert_ffn_size as f64, moe.gamma);
    let raw = log_linear(weights, u, n, h, moe.ffn_size as f64, tokens)?;
    Ok(PredictionResult {
        raw_score: raw,
        adjusted_score: adjust_high_score(raw),
        effective_tokens: tokens,
        discount: u,
        expansion_factor: Some(g),
        token_clipped: clipped,
    })
}

/// Identity up to 90, then `90 + 10 tanh(0.1 x - 9)`, which stays below 100.
pub fn adjust_high_score(raw: f64) -> f64 {
    if raw <= HIGH_SCORE_KNEE {
        raw
    } else {
        HIGH_SCORE_KNEE + 10.0 * (0.1 * raw - 9.0).tanh()
    }
}

/// Linear MMLU to MMLU-Pro map, only meaningful for strong models.
pub fn mmlu_to_mmlu_pro(mmlu: f64) -> Result<f64> {
    if !mmlu.is_finite() || mmlu <= 70.0 {
        return Err(LawError::OutOfScope(mmlu));
    }
    Ok(2.33 * mmlu - 133.0)
}

/// Rough parameter count in billions: `N (4h^2 + 3hd) + 2Vh`.
///
/// Attention (four `h x h` projections) plus a gated FFN (three `h x d`
/// matrices) per layer, plus untied input and output embeddings. Treat it
/// as an approximation; a known `S` should always win.
pub fn estimate_param_count(
    n_layers: u32,
    hidden_size: u32,
    ffn_size: u32,
    vocab_size: Option<u64>,
) -> Result<f64> {
    check_count("n_layers", n_layers)?;
    check_count("hidden_size", hidden_size)?;
    check_count("ffn_size", ffn_size)?;
    let v = vocab_size.unwrap_or(DEFAULT_VOCAB_SIZE) as f64;
    let (n, h, d) = (n_layers as f64, hidden_size as f64, ffn_size as f64);
    Ok((n * (4.0 * h * h + 3.0 * h * d) + 2.0 * v * h) / 1e9)
}
