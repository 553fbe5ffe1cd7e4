//! Predict a language model's MMLU score from a handful of architecture
//! hyperparameters and the size of its training set, then use that predictor
//! to calibrate, audit and plan training runs.
//!
//! * [`law`] evaluates the closed-form predictor for dense and MoE models.
//! * [`calibration`] fits coefficients, infers the precision coefficient from
//!   an observed score and flags suspicious gaps.
//! * [`zoo`] loads the bundled reference models and reproduces their scores.
//! * [`planner`] sweeps, searches and schedules on top of the law.
//!
//! ```
//! use perflaw::law::{predict_dense, DenseArch, RegressionWeights, TrainingSpec};
//!
//! let arch = DenseArch::new(32, 4096, 14336, 7.0).unwrap();
//! let p = predict_dense(&arch, &TrainingSpec::new(3.0).unwrap(), &RegressionWeights::PUBLISHED).unwrap();
//! assert_eq!(p.raw_score, 60.13969302998589);
//! ```

pub mod calibration;
pub mod error;
pub mod law;
pub mod par;
pub mod planner;
pub mod zoo;

pub use error::{LawError, Result};
pub use law::{
    adjust_high_score, effective_tokens, estimate_param_count, mmlu_to_mmlu_pro,
    moe_expansion_factor, predict_dense, predict_moe, unstable_discount, Architecture, DenseArch,
    MoeArch, PredictionResult, RegressionWeights, TrainingSpec,
};
pub use par::Execution;
