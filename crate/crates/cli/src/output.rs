//! Rendering for the three output formats.
//!
//! `csv` and `json` print every number with Rust's shortest round-trip
//! formatting, so they parse back to the exact library value. `table` is for
//! people: single predictions keep 9 decimals and listings round scores to 2.

use std::io::{self, Write};

use serde::Serialize;

use perflaw::calibration::{FitReport, GammaEstimate};
use perflaw::planner::{ExpansionResult, SearchHit, SplitOptimum, SweepPoint};
use perflaw::zoo::{write_report_csv, write_scatter_csv, ScatterPoint, ZooReport};
use perflaw::{Architecture, Result};
use perflaw_service::api::{ExpansionView, GammaView, PredictionView, SearchHitView};

use crate::args::Format;

pub struct Printer {
    format: Format,
}

fn cell(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn json<T: Serialize + ?Sized>(value: &T) -> Result<()> {
    let mut out = io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value).expect("result types serialize");
    writeln!(out)?;
    Ok(())
}

impl Printer {
    pub fn new(format: Format) -> Self {
        Printer { format }
    }

    pub fn prediction(&self, p: &PredictionView) -> Result<()> {
        let mut out = io::stdout().lock();
        match self.format {
            Format::Json => return json(p),
            Format::Csv => {
                writeln!(out, "raw,adjusted,effective_tokens,discount,expansion_factor,token_clipped,mmlu_pro")?;
                writeln!(
                    out,
                    "{},{},{},{},{},{},{}",
                    p.raw,
                    p.adjusted,
                    p.effective_tokens,
                    p.discount,
                    cell(p.expansion_factor),
                    p.token_clipped,
                    cell(p.mmlu_pro)
                )?;
            }
            Format::Table => {
                writeln!(out, "{:<18}{:.9}", "raw_score", p.raw)?;
                writeln!(out, "{:<18}{:.9}", "adjusted_score", p.adjusted)?;
                writeln!(out, "{:<18}{:.9}", "effective_tokens", p.effective_tokens)?;
                writeln!(out, "{:<18}{:.9}", "discount", p.discount)?;
                if let Some(g) = p.expansion_factor {
                    writeln!(out, "{:<18}{:.9}", "expansion_factor", g)?;
                }
                writeln!(out, "{:<18}{}", "token_clipped", p.token_clipped)?;
                if let Some(pro) = p.mmlu_pro {
                    writeln!(out, "{:<18}{:.9}", "mmlu_pro", pro)?;
                }
            }
        }
        Ok(())
    }

    pub fn zoo_report(&self, r: &ZooReport) -> Result<()> {
        match self.format {
            Format::Json => json(r),
            Format::Csv => write_report_csv(r, io::stdout().lock()),
            Format::Table => {
                let mut out = io::stdout().lock();
                writeln!(out, "{:<30} {:<5} {:>8} {:>9} {:>7}", "name", "kind", "reported", "predicted", "diff")?;
                for row in &r.rows {
                    let name = if row.guessed_config {
                        format!("{}*", row.name)
                    } else {
                        row.name.clone()
                    };
                    let kind = serde_json::to_value(row.kind).expect("kind serializes");
                    writeln!(
                        out,
                        "{:<30} {:<5} {:>8.2} {:>9.2} {:>7.2}",
                        name,
                        kind.as_str().unwrap_or_default(),
                        row.reported,
                        row.predicted,
                        row.diff
                    )?;
                }
                writeln!(out)?;
                writeln!(out, "all models        n={:<3} MAE {:.2}  r {:.4}", r.rows.len(), r.mae, r.pearson_r)?;
                let en = &r.english_ex_llama1;
                writeln!(out, "english-ex-llama1 n={:<3} MAE {:.2}  r {:.4}", en.count, en.mae, en.pearson_r)?;
                writeln!(out, "* configuration partly guessed")?;
                Ok(())
            }
        }
    }

    pub fn scatter(&self, points: &[ScatterPoint]) -> Result<()> {
        match self.format {
            Format::Json => json(points),
            Format::Csv => write_scatter_csv(points, io::stdout().lock()),
            Format::Table => {
                let mut out = io::stdout().lock();
                writeln!(out, "{:>9} {:>8}  {:<30} tags", "predicted", "reported", "name")?;
                for p in points {
                    writeln!(out, "{:>9.2} {:>8.2}  {:<30} {}", p.predicted, p.reported, p.name, p.tags.join(";"))?;
                }
                Ok(())
            }
        }
    }

    pub fn fit(&self, r: &FitReport) -> Result<()> {
        let w = &r.weights;
        let mut out = io::stdout().lock();
        match self.format {
            Format::Json => return json(r),
            Format::Csv => {
                writeln!(out, "w1,w2,w3,w4,b,mae,pearson_r,n")?;
                writeln!(
                    out,
                    "{},{},{},{},{},{},{},{}",
                    w.w1,
                    w.w2,
                    w.w3,
                    w.w4,
                    w.b,
                    r.mae,
                    r.pearson_r,
                    r.residuals.len()
                )?;
            }
            Format::Table => {
                for (name, v) in [("w1", w.w1), ("w2", w.w2), ("w3", w.w3), ("w4", w.w4), ("b", w.b)] {
                    writeln!(out, "{name:<10}{v:.5}")?;
                }
                writeln!(out, "{:<10}{}", "n", r.residuals.len())?;
                writeln!(out, "{:<10}{:.2}", "MAE", r.mae)?;
                writeln!(out, "{:<10}{:.4}", "r", r.pearson_r)?;
            }
        }
        Ok(())
    }

    pub fn gamma(&self, est: &GammaEstimate, healthy_max: f64) -> Result<()> {
        let view = GammaView {
            gamma: est.gamma,
            feasible: est.feasible,
            health: est.health(healthy_max),
        };
        let health = serde_json::to_value(view.health).expect("health serializes");
        let health = health.as_str().unwrap_or_default();
        let mut out = io::stdout().lock();
        match self.format {
            Format::Json => return json(&view),
            Format::Csv => {
                writeln!(out, "gamma,feasible,health")?;
                writeln!(out, "{},{},{}", cell(view.gamma), view.feasible, health)?;
            }
            Format::Table => {
                let g = view.gamma.map(|g| format!("{g:.9}")).unwrap_or_else(|| "-".into());
                writeln!(out, "{:<10}{}", "gamma", g)?;
                writeln!(out, "{:<10}{}", "feasible", view.feasible)?;
                writeln!(out, "{:<10}{}", "health", health)?;
            }
        }
        Ok(())
    }

    pub fn sweep(&self, variable: &str, points: &[SweepPoint]) -> Result<()> {
        let mut out = io::stdout().lock();
        match self.format {
            Format::Json => return json(points),
            Format::Csv => {
                writeln!(out, "{variable},raw,adjusted")?;
                for p in points {
                    writeln!(out, "{},{},{}", p.x, p.raw_score, p.adjusted_score)?;
                }
            }
            Format::Table => {
                writeln!(out, "{:>12} {:>8} {:>8}", variable, "raw", "adjusted")?;
                for p in points {
                    writeln!(out, "{:>12.4} {:>8.2} {:>8.2}", p.x, p.raw_score, p.adjusted_score)?;
                }
            }
        }
        Ok(())
    }

    pub fn search(&self, hits: &[SearchHit]) -> Result<()> {
        let mut out = io::stdout().lock();
        match self.format {
            Format::Json => {
                let views: Vec<SearchHitView> = hits.iter().map(|&h| h.into()).collect();
                return json(&views);
            }
            Format::Csv => {
                writeln!(
                    out,
                    "rank,kind,layers,hidden,ffn,expert_ffn,total_params,active_params,estimated_params,raw,adjusted"
                )?;
                for (i, h) in hits.iter().enumerate() {
                    let (kind, n, hid, d, dx, total, act) = shape_cells(&h.arch);
                    writeln!(
                        out,
                        "{},{kind},{n},{hid},{d},{dx},{total},{act},{},{},{}",
                        i + 1,
                        h.estimated_params,
                        h.prediction.raw_score,
                        h.prediction.adjusted_score
                    )?;
                }
            }
            Format::Table => {
                writeln!(
                    out,
                    "{:>4} {:<5} {:>6} {:>7} {:>7} {:>9} {:>8} {:>8}",
                    "rank", "kind", "layers", "hidden", "ffn", "params_B", "active_B", "score"
                )?;
                for (i, h) in hits.iter().enumerate() {
                    let (kind, n, hid, d, _, _, act) = shape_cells(&h.arch);
                    let act: String = act.parse::<f64>().map(|a| format!("{a:.2}")).unwrap_or_else(|_| "-".into());
                    writeln!(
                        out,
                        "{:>4} {:<5} {:>6} {:>7} {:>7} {:>9.2} {:>8} {:>8.2}",
                        i + 1,
                        kind,
                        n,
                        hid,
                        d,
                        h.estimated_params,
                        act,
                        h.prediction.adjusted_score
                    )?;
                }
            }
        }
        Ok(())
    }

    pub fn expansion(&self, r: &ExpansionResult) -> Result<()> {
        let view: ExpansionView = (*r).into();
        let mut out = io::stdout().lock();
        match self.format {
            Format::Json => return json(&view),
            Format::Csv => {
                writeln!(out, "ratio,layers,hidden,ffn,raw,adjusted")?;
                writeln!(
                    out,
                    "{},{},{},{},{},{}",
                    view.ratio, view.layers, view.hidden, view.ffn, view.prediction.raw, view.prediction.adjusted
                )?;
            }
            Format::Table => {
                writeln!(out, "{:<16}{:.9}", "ratio", view.ratio)?;
                writeln!(out, "{:<16}{:.4}", "layers", view.layers)?;
                writeln!(out, "{:<16}{:.4}", "hidden", view.hidden)?;
                writeln!(out, "{:<16}{:.4}", "ffn", view.ffn)?;
                writeln!(out, "{:<16}{:.9}", "raw_score", view.prediction.raw)?;
                writeln!(out, "{:<16}{:.9}", "adjusted_score", view.prediction.adjusted)?;
            }
        }
        Ok(())
    }

    pub fn split(&self, best: &SplitOptimum) -> Result<()> {
        let mut out = io::stdout().lock();
        match self.format {
            Format::Json => return json(best),
            Format::Csv => {
                writeln!(out, "small_tokens,large_tokens,score,best")?;
                for (i, p) in best.evaluated.iter().enumerate() {
                    writeln!(out, "{},{},{},{}", p.small_tokens, p.large_tokens, cell(p.score), i == best.index)?;
                }
            }
            Format::Table => {
                writeln!(out, "{:>12} {:>12} {:>8}", "small_T", "large_T", "score")?;
                for (i, p) in best.evaluated.iter().enumerate() {
                    let score = p.score.map(|s| format!("{s:.2}")).unwrap_or_else(|| "-".into());
                    let mark = if i == best.index { "  <- best" } else { "" };
                    writeln!(out, "{:>12.4} {:>12.4} {:>8}{mark}", p.small_tokens, p.large_tokens, score)?;
                }
            }
        }
        Ok(())
    }
}

type ShapeCells = (&'static str, u32, u32, u32, String, f64, String);

fn shape_cells(arch: &Architecture) -> ShapeCells {
    match arch {
        Architecture::Dense(a) => ("dense", a.n_layers, a.hidden_size, a.ffn_size, String::new(), a.param_count, String::new()),
        Architecture::Moe(a) => (
            "moe",
            a.n_layers,
            a.hidden_size,
            a.ffn_size,
            a.expert_ffn_size.to_string(),
            a.total_params,
            a.active_params.to_string(),
        ),
    }
}
