use std::path::PathBuf;
use std::process::{Command, Output};

use perflaw::planner::{optimize_expansion_split, SplitBudget};
use perflaw::zoo::{builtin_zoo, evaluate_zoo};
use perflaw::{predict_dense, predict_moe, DenseArch, MoeArch, RegressionWeights, TrainingSpec};

const W: RegressionWeights = RegressionWeights::PUBLISHED;
const DENSE: [&str; 12] = [
    "predict", "dense", "--layers", "32", "--hidden", "4096", "--ffn", "14336", "--tokens", "3", "--size", "7",
];

fn perflaw(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_perflaw"))
        .args(args)
        .env_remove("PERFLAW_WEIGHTS")
        .output()
        .unwrap()
}

fn stdout(args: &[&str]) -> String {
    let out = perflaw(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn golden(name: &str) -> String {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name);
    std::fs::read_to_string(path).unwrap()
}

fn with(base: &[&str], extra: &[&'static str]) -> Vec<String> {
    base.iter().chain(extra).map(|s| s.to_string()).collect()
}

fn run_owned(args: &[String]) -> String {
    stdout(&args.iter().map(String::as_str).collect::<Vec<_>>())
}

#[test]
fn dense_table_prints_nine_decimals() {
    let text = stdout(&DENSE);
    assert!(text.lines().next().unwrap().ends_with("60.139693030"));
    assert_eq!(text, golden("predict_dense.txt"));
}

#[test]
fn dense_csv_is_bit_exact() {
    let text = run_owned(&with(&DENSE, &["--format", "csv"]));
    assert_eq!(text, golden("predict_dense.csv"));
    let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    let arch = DenseArch::new(32, 4096, 14336, 7.0).unwrap();
    let lib = predict_dense(&arch, &TrainingSpec::new(3.0).unwrap(), &W).unwrap();
    assert_eq!(row[0].parse::<f64>().unwrap(), lib.raw_score);
    assert_eq!(row[3].parse::<f64>().unwrap(), lib.discount);
}

#[test]
fn moe_json_is_bit_exact() {
    let text = stdout(&[
        "predict", "moe", "--layers", "56", "--hidden", "6144", "--ffn", "16384", "--expert-ffn", "16384",
        "--tokens", "10", "--size", "141", "--act", "39", "--format", "json",
    ]);
    assert_eq!(text, golden("predict_moe.json"));
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    let arch = MoeArch::new(56, 6144, 16384, 16384, 141.0, 39.0).unwrap();
    let lib = predict_moe(&arch, &TrainingSpec::new(10.0).unwrap(), &W).unwrap();
    assert_eq!(v["raw"].as_f64().unwrap(), lib.raw_score);
    assert_eq!(v["raw"].as_f64().unwrap(), 77.50985935370231);
    assert_eq!(v["expansion_factor"].as_f64(), lib.expansion_factor);
}

#[test]
fn missing_flag_is_usage_error() {
    let out = perflaw(&DENSE[..10]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--size"));
    assert!(out.stdout.is_empty());

    let out = perflaw(&["predict", "dense", "--bogus"]);
    assert_eq!(out.status.code(), Some(2));
    let out = perflaw(&with(&DENSE, &["--format", "xml"]).iter().map(String::as_str).collect::<Vec<_>>());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn domain_error_exits_one_with_code() {
    let mut args = DENSE.to_vec();
    args[9] = "0";
    let out = perflaw(&args);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("INVALID_INPUT"));
}

#[test]
fn zoo_eval_table_has_all_rows_and_summary() {
    let text = stdout(&["zoo", "eval", "--data", concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/table1.csv")]);
    let rows = text.lines().skip(1).take_while(|l| !l.is_empty()).count();
    assert_eq!(rows, 55);
    assert!(text.contains("Mistral 7B"));
    assert!(text.contains("   60.14"));
    let report = evaluate_zoo(&builtin_zoo(), &W).unwrap();
    assert!(text.contains(&format!("MAE {:.2}  r {:.4}", report.mae, report.pearson_r)));
}

#[test]
fn machine_formats_match_golden_files() {
    assert_eq!(stdout(&["zoo", "eval", "--format", "csv"]), golden("zoo_eval.csv"));
    assert_eq!(
        stdout(&["zoo", "scatter", "--subset", "english-ex-llama1", "--format", "csv"]),
        golden("scatter_english.csv")
    );
    assert_eq!(
        stdout(&[
            "sweep", "--variable", "gamma", "--min", "0", "--max", "2", "--steps", "5", "--layers", "80",
            "--hidden", "8192", "--ffn", "28672", "--size", "70", "--tokens", "15", "--format", "csv",
        ]),
        golden("sweep_gamma.csv")
    );
    assert_eq!(
        stdout(&[
            "expand", "optimize", "--small", "32,4096,14336,7", "--large", "80,8192,28672,70",
            "--total-tokens", "4", "--format", "csv",
        ]),
        golden("expand_optimize.csv")
    );
}

#[test]
fn expand_optimize_marks_library_optimum() {
    let small = DenseArch::new(32, 4096, 14336, 7.0).unwrap();
    let large = DenseArch::new(80, 8192, 28672, 70.0).unwrap();
    let best = optimize_expansion_split(&small, &large, 4.0, &W, 41, SplitBudget::Compute).unwrap();
    let text = golden("expand_optimize.csv");
    let marked: Vec<&str> = text.lines().filter(|l| l.ends_with(",true")).collect();
    assert_eq!(marked.len(), 1);
    assert_eq!(marked[0], format!("{},{},{},true", best.small_tokens, best.large_tokens, best.score));
}

#[test]
fn weights_file_from_env_and_flag() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("w.json");
    let saved = stdout(&["fit", "--save", path.to_str().unwrap(), "--format", "csv"]);
    let fitted: Vec<f64> = saved.lines().nth(1).unwrap().split(',').take(5).map(|c| c.parse().unwrap()).collect();

    let with_env = Command::new(env!("CARGO_BIN_EXE_perflaw"))
        .args(["--format", "json"])
        .args(DENSE)
        .env("PERFLAW_WEIGHTS", &path)
        .output()
        .unwrap();
    assert!(with_env.status.success());
    let v: serde_json::Value = serde_json::from_slice(&with_env.stdout).unwrap();
    let w = RegressionWeights::from_slopes([fitted[0], fitted[1], fitted[2], fitted[3]], fitted[4]);
    let arch = DenseArch::new(32, 4096, 14336, 7.0).unwrap();
    let lib = predict_dense(&arch, &TrainingSpec::new(3.0).unwrap(), &w).unwrap();
    assert_eq!(v["raw"].as_f64().unwrap(), lib.raw_score);

    let via_flag = run_owned(&with(&DENSE, &["--format", "json", "--weights"]).into_iter()
        .chain([path.to_str().unwrap().to_string()]).collect::<Vec<_>>());
    assert_eq!(via_flag.as_bytes(), with_env.stdout.as_slice());

    let out = perflaw(&with(&DENSE, &["--weights", "/nonexistent.json"]).iter().map(String::as_str).collect::<Vec<_>>());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("IO_ERROR"));
}

#[test]
fn search_and_gamma_run() {
    let text = stdout(&[
        "search", "--max-params", "8", "--tokens", "3", "--layers", "16:48:8", "--hidden", "2048:4096:512",
        "--ffn", "8192:16384:2048", "--top-k", "3", "--format", "csv",
    ]);
    assert_eq!(text.lines().count(), 4);
    for line in text.lines().skip(1) {
        let est: f64 = line.split(',').nth(8).unwrap().parse().unwrap();
        assert!(est <= 8.0);
    }

    let text = stdout(&[
        "gamma", "infer", "--layers", "32", "--hidden", "4096", "--ffn", "14336", "--tokens", "3", "--size", "7",
        "--observed", "60.13969302998589", "--format", "json",
    ]);
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert!((v["gamma"].as_f64().unwrap() - 1.0).abs() < 1e-9);
    assert_eq!(v["health"], "HEALTHY");

    let out = perflaw(&["search", "--max-params", "8", "--tokens", "3", "--layers", "16:x", "--hidden", "2048",
        "--ffn", "8192"]);
    assert_eq!(out.status.code(), Some(2));
}
