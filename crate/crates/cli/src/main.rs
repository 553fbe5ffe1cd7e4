//! `perflaw` command-line front end.
//!
//! Exit status is 0 on success, 2 on a usage error and 1 when the law rejects
//! the input.

mod args;
mod output;

use std::fs;
use std::path::Path;
use std::process::ExitCode;

use clap::Parser;

use perflaw::calibration::{build_sample, fit, infer_gamma, FitSample};
use perflaw::planner::{
    optimize_expansion_split, predict_expanded, search_architectures, sweep, ExpansionPlan,
    SearchConstraints, SweepSpec,
};
use perflaw::zoo::{builtin_zoo, evaluate_zoo, export_scatter, load_zoo, ModelRecord};
use perflaw::{predict_dense, predict_moe, LawError, RegressionWeights, Result, TrainingSpec};
use perflaw_service::AppState;

use args::{Cli, Command, ExpandCommand, GammaCommand, PredictCommand, ZooCommand};
use output::Printer;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).init();

    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.code());
            ExitCode::from(1)
        }
    }
}

fn load_weights(path: Option<&Path>) -> Result<RegressionWeights> {
    let Some(path) = path else {
        return Ok(RegressionWeights::PUBLISHED);
    };
    let text = fs::read_to_string(path).map_err(|e| LawError::Io(format!("{}: {e}", path.display())))?;
    let w: RegressionWeights = serde_json::from_str(&text)
        .map_err(|e| LawError::Schema(format!("{}: {e}", path.display())))?;
    w.validate()?;
    log::info!("weights loaded from {}", path.display());
    Ok(w)
}

fn load_data(path: Option<&Path>) -> Result<Vec<ModelRecord>> {
    match path {
        Some(p) => load_zoo(p),
        None => Ok(builtin_zoo()),
    }
}

fn run(cli: Cli) -> Result<()> {
    let weights = load_weights(cli.weights.as_deref())?;
    let data = cli.data.as_deref();
    let out = Printer::new(cli.format);

    match cli.command {
        Command::Predict(PredictCommand::Dense(a)) => {
            let p = predict_dense(&a.arch.shape().arch()?, &TrainingSpec::new(a.tokens)?, &weights)?;
            out.prediction(&p.into())
        }
        Command::Predict(PredictCommand::Moe(a)) => {
            let p = predict_moe(&a.arch.shape().arch()?, &TrainingSpec::new(a.tokens)?, &weights)?;
            out.prediction(&p.into())
        }
        Command::Zoo(ZooCommand::Eval) => out.zoo_report(&evaluate_zoo(&load_data(data)?, &weights)?),
        Command::Zoo(ZooCommand::Scatter { subset }) => {
            let report = evaluate_zoo(&load_data(data)?, &weights)?;
            out.scatter(&export_scatter(&report, subset.into())?)
        }
        Command::Fit(a) => {
            let samples: Vec<FitSample> = load_data(data)?
                .iter()
                .filter(|r| !(a.exclude_guessed && r.guessed_config))
                .map(|r| build_sample(&r.architecture(), &r.training(), r.reported_mmlu, 1.0))
                .collect::<Result<_>>()?;
            let report = fit(&samples)?;
            if let Some(path) = &a.save {
                let json = serde_json::to_string_pretty(&report.weights).expect("weights serialize");
                fs::write(path, json + "\n").map_err(|e| LawError::Io(format!("{}: {e}", path.display())))?;
            }
            out.fit(&report)
        }
        Command::Gamma(GammaCommand::Infer(a)) => {
            let arch = a.arch.shape().arch()?;
            let est = infer_gamma(&arch, &TrainingSpec::new(a.tokens)?, &weights, a.observed)?;
            out.gamma(&est, a.healthy_max)
        }
        Command::Sweep(a) => {
            let spec = SweepSpec {
                variable: a.variable.into(),
                min: a.min,
                max: a.max,
                steps: a.steps,
                base: a.arch.shape().arch()?,
                train: TrainingSpec::new(a.tokens)?,
            };
            out.sweep(a.variable.name(), &sweep(&spec, &weights)?)
        }
        Command::Search(a) => {
            let constraints = SearchConstraints {
                max_params: a.max_params,
                token_budget: a.tokens,
                gamma: a.gamma,
                layers: a.layers.grid(1),
                hidden: a.hidden.grid(perflaw::planner::DEFAULT_DIM_STEP),
                ffn: a.ffn.grid(perflaw::planner::DEFAULT_DIM_STEP),
                vocab_size: a.vocab,
                moe: a.moe_ratios.map(|r| r.search()),
            };
            out.search(&search_architectures(&constraints, &weights, a.top_k)?)
        }
        Command::Expand(ExpandCommand::Predict(a)) => {
            let mut plan = ExpansionPlan::new(
                a.pair.small.arch()?,
                a.small_tokens,
                a.pair.large()?,
                a.large_tokens,
            )?;
            plan.recovery_scale = a.recovery_scale;
            out.expansion(&predict_expanded(&plan, &weights)?)
        }
        Command::Expand(ExpandCommand::Optimize(a)) => {
            let best = optimize_expansion_split(
                &a.pair.small.arch()?,
                &a.pair.large()?,
                a.total_tokens,
                &weights,
                a.grid,
                a.budget.into(),
            )?;
            out.split(&best)
        }
        Command::Serve(a) => {
            let state = AppState::new(weights, load_data(data)?)?;
            let rt = tokio::runtime::Runtime::new().map_err(|e| LawError::Io(e.to_string()))?;
            eprintln!("serving on http://{}", a.bind);
            rt.block_on(perflaw_service::serve(a.bind, state, a.cors))
                .map_err(|e| LawError::Io(format!("{}: {e}", a.bind)))
        }
    }
}
