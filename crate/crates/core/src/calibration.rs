//! Fitting the law's coefficients and solving its inverse problems.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{ensure, LawError, Result};
use crate::law::{
    discount_for, effective_tokens, expansion_factor, log_features, predict_dense, Architecture,
    DenseArch, RegressionWeights, TrainingSpec, HIGH_SCORE_KNEE,
};

/// Default gap (MMLU points) between prediction and observation that raises a
/// contamination or underperformance flag.
pub const DEFAULT_CONTAMINATION_THRESHOLD: f64 = 10.0;

/// Inferred precision coefficients above this are reported as unhealthy.
pub const DEFAULT_HEALTHY_GAMMA: f64 = 2.0;

pub const MIN_SAMPLES: usize = 5;

const COLUMN_NAMES: [&str; 5] = ["ln(uN)", "ln(uh)", "ln(ud)", "ln(uT')", "intercept"];

// Relative singular value below which a column direction counts as absent.
const RANK_TOL: f64 = 1e-10;
// Scaled condition number above which the normal equations are abandoned for
// an SVD pseudo-inverse.
const NEAR_SINGULAR_COND: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitSample {
    /// `[ln(uN), ln(uh), ln(ud), ln(uT')]`
    pub features: [f64; 4],
    pub target: f64,
    #[serde(default = "one")]
    pub weight: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub weights: RegressionWeights,
    pub residuals: Vec<f64>,
    pub mae: f64,
    pub pearson_r: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaEstimate {
    pub gamma: Option<f64>,
    pub feasible: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum HealthStatus {
    Healthy,
    Unhealthy,
    /// The observation beats even a perfect-precision run.
    Infeasible,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ContaminationFlag {
    Ok,
    ContaminationSuspect,
    Underperformance,
}

impl GammaEstimate {
    pub fn health(&self, healthy_max: f64) -> HealthStatus {
        match self.gamma {
            Some(g) if self.feasible && g <= healthy_max => HealthStatus::Healthy,
            Some(_) if self.feasible => HealthStatus::Unhealthy,
            _ => HealthStatus::Infeasible,
        }
    }
}

impl FitSample {
    pub fn predict(&self, weights: &RegressionWeights) -> f64 {
        let mut sum = 0.0;
        for (w, f) in weights.slopes().iter().zip(self.features) {
            sum += w * f;
        }
        sum + weights.b
    }
}

/// Regression sample whose features are exactly the log arguments the matching
/// predictor would use.
pub fn build_sample(
    arch: &Architecture,
    train: &TrainingSpec,
    observed: f64,
    weight: f64,
) -> Result<FitSample> {
    arch.validate()?;
    train.validate()?;
    ensure(observed > 0.0 && observed < 100.0, || {
        format!("observed score must lie in (0, 100), got {observed}")
    })?;
    ensure(weight.is_finite() && weight > 0.0, || {
        format!("sample weight must be positive, got {weight}")
    })?;
    let features = match arch {
        Architecture::Dense(a) => {
            let (t, _) = effective_tokens(train.tokens, a.param_count)?;
            let (n, h, d) = (a.n_layers as f64, a.hidden_size as f64, a.ffn_size as f64);
            log_features(discount_for(n, h, d, a.gamma), n, h, d, t)?
        }
        Architecture::Moe(a) => {
            let g = expansion_factor(a.total_params, a.active_params);
            let (n, h) = (a.n_layers as f64 * g, a.hidden_size as f64 * g);
            let (t, _) = effective_tokens(train.tokens, a.capacity())?;
            let u = discount_for(n, h, a.expert_ffn_size as f64, a.gamma);
            log_features(u, n, h, a.ffn_size as f64, t)?
        }
    };
    Ok(FitSample {
        features,
        target: observed,
        weight,
    })
}

/// Weighted least squares over the four log features plus an intercept.
pub fn fit(samples: &[FitSample]) -> Result<FitReport> {
    if samples.len() < MIN_SAMPLES {
        return Err(LawError::TooFewSamples {
            required: MIN_SAMPLES,
            got: samples.len(),
        });
    }
    for (i, s) in samples.iter().enumerate() {
        ensure(s.weight.is_finite() && s.weight > 0.0, || {
            format!("sample {i}: weight must be positive, got {}", s.weight)
        })?;
        ensure(s.features.iter().all(|f| f.is_finite()) && s.target.is_finite(), || {
            format!("sample {i}: features and target must be finite")
        })?;
    }

    let n = samples.len();
    let design = DMatrix::from_fn(n, 5, |i, j| {
        if j < 4 {
            samples[i].features[j]
        } else {
            1.0
        }
    });
    let target = DVector::from_iterator(n, samples.iter().map(|s| s.target));
    let sqrt_w = DVector::from_iterator(n, samples.iter().map(|s| s.weight.sqrt()));

    let mut xw = design.clone();
    for (mut row, sw) in xw.row_iter_mut().zip(sqrt_w.iter()) {
        row *= *sw;
    }
    let yw = target.component_mul(&sqrt_w);

    let cond = check_rank(&xw)?;

    let beta = if cond > NEAR_SINGULAR_COND {
        log::warn!("weighted design is near-singular (scaled condition {cond:.3e}); using pseudo-inverse");
        pinv_solve(&xw, &yw)?
    } else {
        let gram = xw.transpose() * &xw;
        let rhs = xw.transpose() * &yw;
        match gram.clone().cholesky() {
            Some(chol) => chol.solve(&rhs),
            None => {
                log::warn!("normal equations not positive definite; using pseudo-inverse");
                pinv_solve(&xw, &yw)?
            }
        }
    };

    let weights = RegressionWeights::from_slopes([beta[0], beta[1], beta[2], beta[3]], beta[4]);
    let predictions: Vec<f64> = samples.iter().map(|s| s.predict(&weights)).collect();
    let residuals: Vec<f64> = samples
        .iter()
        .zip(&predictions)
        .map(|(s, p)| s.target - p)
        .collect();
    let mae = residuals.iter().map(|r| r.abs()).sum::<f64>() / n as f64;
    let targets: Vec<f64> = samples.iter().map(|s| s.target).collect();
    Ok(FitReport {
        weights,
        residuals,
        mae,
        pearson_r: pearson(&predictions, &targets),
    })
}

/// Returns the condition number of the column-normalised design, or an error
/// naming the columns that take part in a null direction.
fn check_rank(xw: &DMatrix<f64>) -> Result<f64> {
    let mut scaled = xw.clone();
    let mut zero_cols = Vec::new();
    for (j, mut col) in scaled.column_iter_mut().enumerate() {
        let norm = col.norm();
        if norm == 0.0 {
            zero_cols.push(COLUMN_NAMES[j].to_string());
        } else {
            col /= norm;
        }
    }
    if !zero_cols.is_empty() {
        return Err(LawError::RankDeficient { columns: zero_cols });
    }
    let svd = scaled.svd(false, true);
    let v_t = svd.v_t.as_ref().expect("requested V^T");
    let sigma_max = svd.singular_values.max();
    let mut involved = [false; 5];
    let mut sigma_min = f64::INFINITY;
    for (k, &s) in svd.singular_values.iter().enumerate() {
        sigma_min = sigma_min.min(s);
        if s <= RANK_TOL * sigma_max {
            for (j, flag) in involved.iter_mut().enumerate() {
                if v_t[(k, j)].abs() > 1e-6 {
                    *flag = true;
                }
            }
        }
    }
    if involved.iter().any(|&f| f) {
        let columns = COLUMN_NAMES
            .iter()
            .zip(involved)
            .filter(|(_, f)| *f)
            .map(|(c, _)| c.to_string())
            .collect();
        return Err(LawError::RankDeficient { columns });
    }
    Ok(sigma_max / sigma_min)
}

fn pinv_solve(xw: &DMatrix<f64>, yw: &DVector<f64>) -> Result<DVector<f64>> {
    let svd = xw.clone().svd(true, true);
    let eps = RANK_TOL * svd.singular_values.max();
    svd.solve(yw, eps)
        .map_err(|e| LawError::InvalidInput(format!("pseudo-inverse failed: {e}")))
}

/// Pearson correlation; 0 when either side has no variance.
pub fn pearson(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len().min(ys.len());
    if n == 0 {
        return 0.0;
    }
    let mx = xs[..n].iter().sum::<f64>() / n as f64;
    let my = ys[..n].iter().sum::<f64>() / n as f64;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return 0.0;
    }
    (sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0)
}

/// Inverse of [`crate::law::adjust_high_score`] on `[0, 100)`.
fn unadjust(score: f64) -> f64 {
    if score <= HIGH_SCORE_KNEE {
        score
    } else {
        (((score - HIGH_SCORE_KNEE) / 10.0).atanh() + 9.0) / 0.1
    }
}

/// Precision coefficient implied by an observed score.
///
/// The raw score is affine in `gamma^2`:
/// `score(gamma) = score(0) - (w1 + w2 + w3 + w4) (c N)^2 gamma^2` with
/// `c = 10/d + 20/h`, so the inverse is closed form. Observations above 90 are
/// mapped back through the high-score adjustment first.
pub fn infer_gamma(
    arch: &DenseArch,
    train: &TrainingSpec,
    weights: &RegressionWeights,
    observed: f64,
) -> Result<GammaEstimate> {
    ensure(observed.is_finite() && observed < 100.0, || {
        format!("observed score must be finite and below 100, got {observed}")
    })?;
    let slope_sum = weights.slope_sum();
    if slope_sum.is_nan() || slope_sum <= 0.0 {
        return Err(LawError::UnsupportedWeights(slope_sum));
    }
    let base = predict_dense(&arch.with_gamma(0.0), train, weights)?.raw_score;
    let observed_raw = unadjust(observed);
    if observed_raw > base {
        return Ok(GammaEstimate {
            gamma: None,
            feasible: false,
        });
    }
    let c = 10.0 / arch.ffn_size as f64 + 20.0 / arch.hidden_size as f64;
    let cn = c * arch.n_layers as f64;
    let gamma = ((base - observed_raw) / (slope_sum * cn * cn)).sqrt();
    Ok(GammaEstimate {
        gamma: Some(gamma),
        feasible: true,
    })
}

pub fn contamination_check(predicted: f64, observed: f64, threshold: f64) -> ContaminationFlag {
    let gap = observed - predicted;
    if gap > threshold {
        ContaminationFlag::ContaminationSuspect
    } else if -gap > threshold {
        ContaminationFlag::Underperformance
    } else {
        ContaminationFlag::Ok
    }
}
