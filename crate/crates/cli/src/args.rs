use std::net::SocketAddr;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use perflaw::planner::{GridRange, MoeSearch, SplitBudget, SweepVariable};
use perflaw::zoo::Subset;
use perflaw::Result;
use perflaw_service::api::{ArchShape, DenseShape, MoeShape};

#[derive(Debug, Parser)]
#[command(name = "perflaw", version, about = "Predict MMLU scores from LLM architecture and training tokens")]
pub struct Cli {
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Table)]
    pub format: Format,

    /// JSON file with coefficients {w1, w2, w3, w4, b}; defaults to the published fit.
    #[arg(long, global = true, env = "PERFLAW_WEIGHTS")]
    pub weights: Option<PathBuf>,

    /// Reference model CSV; defaults to the bundled table.
    #[arg(long, global = true)]
    pub data: Option<PathBuf>,

    /// Log more (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Table,
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Score a single architecture.
    #[command(subcommand)]
    Predict(PredictCommand),
    /// Evaluate the reference models.
    #[command(subcommand)]
    Zoo(ZooCommand),
    /// Refit the coefficients on the reference models.
    Fit(FitArgs),
    /// Precision coefficient diagnostics.
    #[command(subcommand)]
    Gamma(GammaCommand),
    /// Score series over one varying input.
    Sweep(SweepArgs),
    /// Exhaustive architecture search under a parameter budget.
    Search(SearchArgs),
    /// Small-to-large model expansion.
    #[command(subcommand)]
    Expand(ExpandCommand),
    /// Run the JSON HTTP API.
    Serve(ServeArgs),
}

#[derive(Debug, Subcommand)]
pub enum PredictCommand {
    Dense(PredictDenseArgs),
    Moe(PredictMoeArgs),
}

#[derive(Debug, Subcommand)]
pub enum ZooCommand {
    /// Predicted vs reported score for every model, with MAE and Pearson r.
    Eval,
    /// (predicted, reported) pairs for plotting.
    Scatter {
        #[arg(long, value_enum, default_value_t = SubsetArg::All)]
        subset: SubsetArg,
    },
}

#[derive(Debug, Subcommand)]
pub enum GammaCommand {
    /// Solve for gamma given an observed score.
    Infer(GammaArgs),
}

#[derive(Debug, Subcommand)]
pub enum ExpandCommand {
    /// Score after growing the small model and training on.
    Predict(ExpandPredictArgs),
    /// Best split of a budget between the two phases.
    Optimize(ExpandOptimizeArgs),
}

#[derive(Debug, Clone, Copy, Args)]
pub struct DenseFlags {
    /// Number of layers N.
    #[arg(long)]
    pub layers: u32,
    /// Hidden size h.
    #[arg(long)]
    pub hidden: u32,
    /// FFN intermediate size d.
    #[arg(long)]
    pub ffn: u32,
    /// Parameter count S, in billions.
    #[arg(long)]
    pub size: f64,
    /// Precision coefficient.
    #[arg(long, default_value_t = 1.0)]
    pub gamma: f64,
}

impl DenseFlags {
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

#[derive(Debug, Clone, Copy, Args)]
pub struct MoeFlags {
    #[command(flatten)]
    pub dense: DenseFlags,
    /// Widest activated expert FFN d'.
    #[arg(long)]
    pub expert_ffn: u32,
    /// Activated parameters A, in billions.
    #[arg(long)]
    pub act: f64,
}

impl MoeFlags {
    pub fn shape(&self) -> MoeShape {
        let d = self.dense;
        MoeShape {
            layers: d.layers,
            hidden: d.hidden,
            ffn: d.ffn,
            expert_ffn: self.expert_ffn,
            size: d.size,
            act: self.act,
            gamma: d.gamma,
        }
    }
}

/// Dense flags plus optional MoE flags; giving `--act` makes it a MoE.
#[derive(Debug, Clone, Copy, Args)]
pub struct AnyArchFlags {
    #[command(flatten)]
    pub dense: DenseFlags,
    #[arg(long, requires = "act")]
    pub expert_ffn: Option<u32>,
    #[arg(long, requires = "expert_ffn")]
    pub act: Option<f64>,
}

impl AnyArchFlags {
    pub fn shape(&self) -> ArchShape {
        match (self.expert_ffn, self.act) {
            (Some(expert_ffn), Some(act)) => ArchShape::Moe(
                MoeFlags {
                    dense: self.dense,
                    expert_ffn,
                    act,
                }
                .shape(),
            ),
            _ => ArchShape::Dense(self.dense.shape()),
        }
    }
}

#[derive(Debug, Args)]
pub struct PredictDenseArgs {
    #[command(flatten)]
    pub arch: DenseFlags,
    /// Training tokens T, in trillions.
    #[arg(long)]
    pub tokens: f64,
}

#[derive(Debug, Args)]
pub struct PredictMoeArgs {
    #[command(flatten)]
    pub arch: MoeFlags,
    /// Training tokens T, in trillions.
    #[arg(long)]
    pub tokens: f64,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Leave out rows whose configuration is partly guessed.
    #[arg(long)]
    pub exclude_guessed: bool,
    /// Write the fitted coefficients as a weights file.
    #[arg(long)]
    pub save: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GammaArgs {
    #[command(flatten)]
    pub arch: DenseFlags,
    #[arg(long)]
    pub tokens: f64,
    /// Observed MMLU score.
    #[arg(long)]
    pub observed: f64,
    /// Largest gamma still reported as healthy.
    #[arg(long, default_value_t = perflaw::calibration::DEFAULT_HEALTHY_GAMMA)]
    pub healthy_max: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VariableArg {
    Gamma,
    Tokens,
    Layers,
}

impl VariableArg {
    pub fn name(self) -> &'static str {
        match self {
            VariableArg::Gamma => "gamma",
            VariableArg::Tokens => "tokens",
            VariableArg::Layers => "layers",
        }
    }
}

impl From<VariableArg> for SweepVariable {
    fn from(v: VariableArg) -> Self {
        match v {
            VariableArg::Gamma => SweepVariable::Gamma,
            VariableArg::Tokens => SweepVariable::Tokens,
            VariableArg::Layers => SweepVariable::NLayers,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SubsetArg {
    All,
    EnglishExLlama1,
}

impl From<SubsetArg> for Subset {
    fn from(s: SubsetArg) -> Self {
        match s {
            SubsetArg::All => Subset::All,
            SubsetArg::EnglishExLlama1 => Subset::EnglishExLlama1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BudgetArg {
    Tokens,
    Compute,
}

impl From<BudgetArg> for SplitBudget {
    fn from(b: BudgetArg) -> Self {
        match b {
            BudgetArg::Tokens => SplitBudget::Tokens,
            BudgetArg::Compute => SplitBudget::Compute,
        }
    }
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long, value_enum)]
    pub variable: VariableArg,
    #[arg(long)]
    pub min: f64,
    #[arg(long)]
    pub max: f64,
    #[arg(long, default_value_t = 21)]
    pub steps: usize,
    #[command(flatten)]
    pub arch: AnyArchFlags,
    /// Training tokens; ignored when sweeping tokens.
    #[arg(long)]
    pub tokens: f64,
}

/// `min:max[:step]` or a single value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RangeArg {
    pub min: u32,
    pub max: u32,
    pub step: Option<u32>,
}

impl RangeArg {
    pub fn grid(&self, default_step: u32) -> GridRange {
        GridRange::new(self.min, self.max, self.step.unwrap_or(default_step))
    }
}

fn parse_range(s: &str) -> std::result::Result<RangeArg, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let num = |p: &str| p.trim().parse::<u32>().map_err(|e| format!("`{p}`: {e}"));
    match parts.as_slice() {
        [v] => {
            let v = num(v)?;
            Ok(RangeArg { min: v, max: v, step: Some(1) })
        }
        [lo, hi] => Ok(RangeArg { min: num(lo)?, max: num(hi)?, step: None }),
        [lo, hi, st] => Ok(RangeArg { min: num(lo)?, max: num(hi)?, step: Some(num(st)?) }),
        _ => Err("expected VALUE, MIN:MAX or MIN:MAX:STEP".into()),
    }
}

/// `min:max:steps` over activation ratios.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatioArg(MoeSearch);

impl RatioArg {
    pub fn search(self) -> MoeSearch {
        self.0
    }
}

fn parse_ratios(s: &str) -> std::result::Result<RatioArg, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let [lo, hi, n] = parts.as_slice() else {
        return Err("expected MIN:MAX:STEPS".into());
    };
    let f = |p: &str| p.trim().parse::<f64>().map_err(|e| format!("`{p}`: {e}"));
    Ok(RatioArg(MoeSearch {
        min_ratio: f(lo)?,
        max_ratio: f(hi)?,
        steps: n.trim().parse().map_err(|e| format!("`{n}`: {e}"))?,
    }))
}

#[derive(Debug, Args)]
pub struct SearchArgs {
    /// Parameter budget, in billions.
    #[arg(long)]
    pub max_params: f64,
    /// Training tokens, in trillions.
    #[arg(long)]
    pub tokens: f64,
    #[arg(long, default_value_t = 1.0)]
    pub gamma: f64,
    /// Layer range MIN:MAX[:STEP] (step 1 by default).
    #[arg(long, value_parser = parse_range)]
    pub layers: RangeArg,
    /// Hidden range MIN:MAX[:STEP] (step 128 by default).
    #[arg(long, value_parser = parse_range)]
    pub hidden: RangeArg,
    /// FFN range MIN:MAX[:STEP] (step 128 by default).
    #[arg(long, value_parser = parse_range)]
    pub ffn: RangeArg,
    /// Vocabulary size for the parameter estimate.
    #[arg(long)]
    pub vocab: Option<u64>,
    /// Search MoE candidates over activation ratios MIN:MAX:STEPS.
    #[arg(long, value_parser = parse_ratios)]
    pub moe_ratios: Option<RatioArg>,
    #[arg(long, default_value_t = 10)]
    pub top_k: usize,
}

/// `layers,hidden,ffn,size`.
fn parse_shape(s: &str) -> std::result::Result<DenseShape, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let [n, h, d, size] = parts.as_slice() else {
        return Err("expected LAYERS,HIDDEN,FFN,SIZE".into());
    };
    let int = |p: &str| p.parse::<u32>().map_err(|e| format!("`{p}`: {e}"));
    Ok(DenseShape {
        layers: int(n)?,
        hidden: int(h)?,
        ffn: int(d)?,
        size: size.parse().map_err(|e| format!("`{size}`: {e}"))?,
        gamma: 1.0,
    })
}

#[derive(Debug, Clone, Copy, Args)]
pub struct ExpandPair {
    /// Small model as LAYERS,HIDDEN,FFN,SIZE.
    #[arg(long, value_parser = parse_shape)]
    pub small: DenseShape,
    /// Large model as LAYERS,HIDDEN,FFN,SIZE.
    #[arg(long, value_parser = parse_shape)]
    pub large: DenseShape,
    /// Precision coefficient of the large model.
    #[arg(long, default_value_t = 1.0)]
    pub gamma: f64,
}

impl ExpandPair {
    pub fn large(&self) -> Result<perflaw::DenseArch> {
        DenseShape {
            gamma: self.gamma,
            ..self.large
        }
        .arch()
    }
}

#[derive(Debug, Args)]
pub struct ExpandPredictArgs {
    #[command(flatten)]
    pub pair: ExpandPair,
    #[arg(long)]
    pub small_tokens: f64,
    #[arg(long)]
    pub large_tokens: f64,
    #[arg(long, default_value_t = perflaw::planner::DEFAULT_RECOVERY_SCALE)]
    pub recovery_scale: f64,
}

#[derive(Debug, Args)]
pub struct ExpandOptimizeArgs {
    #[command(flatten)]
    pub pair: ExpandPair,
    /// Budget in trillions of tokens (large-model tokens under a compute budget).
    #[arg(long)]
    pub total_tokens: f64,
    #[arg(long, default_value_t = 41)]
    pub grid: usize,
    #[arg(long, value_enum, default_value_t = BudgetArg::Compute)]
    pub budget: BudgetArg,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, default_value = "127.0.0.1:8080")]
    pub bind: SocketAddr,
    /// Allow cross-origin requests (for the browser planner).
    #[arg(long)]
    pub cors: bool,
}
