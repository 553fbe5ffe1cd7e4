use perflaw::law::{Architecture, DenseArch, RegressionWeights, TrainingSpec};
use perflaw::planner::{
    optimize_expansion_split_with, search_architectures_with, sweep_with, GridRange, SearchConstraints,
    SplitBudget, SweepSpec, SweepVariable,
};
use perflaw::zoo::{builtin_zoo, evaluate_zoo_with};
use perflaw::Execution::{Parallel, Sequential};

const W: RegressionWeights = RegressionWeights::PUBLISHED;

#[test]
fn zoo_report_is_identical() {
    let zoo = builtin_zoo();
    assert_eq!(
        evaluate_zoo_with(&zoo, &W, Sequential).unwrap(),
        evaluate_zoo_with(&zoo, &W, Parallel).unwrap()
    );
}

#[test]
fn search_ranking_is_identical() {
    let c = SearchConstraints {
        max_params: 30.0,
        token_budget: 8.0,
        gamma: 1.0,
        layers: GridRange::new(8, 64, 4),
        hidden: GridRange::dims(1024, 6144),
        ffn: GridRange::new(2048, 16384, 1024),
        vocab_size: None,
        moe: None,
    };
    let a = search_architectures_with(&c, &W, 50, Sequential).unwrap();
    let b = search_architectures_with(&c, &W, 50, Parallel).unwrap();
    assert_eq!(a.len(), 50);
    assert_eq!(a, b);
}

#[test]
fn sweep_and_split_are_identical() {
    let base = DenseArch::new(80, 8192, 28672, 70.0).unwrap();
    let spec = SweepSpec {
        variable: SweepVariable::NLayers,
        min: 10.0,
        max: 200.0,
        steps: 500,
        base: Architecture::Dense(base),
        train: TrainingSpec::new(15.0).unwrap(),
    };
    assert_eq!(sweep_with(&spec, &W, Sequential).unwrap(), sweep_with(&spec, &W, Parallel).unwrap());

    let small = DenseArch::new(32, 4096, 14336, 7.0).unwrap();
    let seq = optimize_expansion_split_with(&small, &base, 4.0, &W, 41, SplitBudget::Compute, Sequential);
    let par = optimize_expansion_split_with(&small, &base, 4.0, &W, 41, SplitBudget::Compute, Parallel);
    assert_eq!(seq.unwrap(), par.unwrap());
}
