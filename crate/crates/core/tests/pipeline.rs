use banditlab::algorithms::{lucbpp_complexity_bound, symmetrize_with, Algo, RunSpec};
use banditlab::confidence::ConfidenceSchedule;
use banditlab::harness::{
    load, persist, run_trials, run_trials_with, ExperimentConfig, InstanceSource, SummaryTable,
};
use banditlab::model::{apply_permutation, Instance, Permutation};
use banditlab::rng::{Purpose, RngStream};
use banditlab::simlab::Transcript;

fn table1_cfg(n: usize, algos: Vec<Algo>, trials: u64) -> ExperimentConfig {
    ExperimentConfig::new(InstanceSource::Table1 { n }, algos, 0.1, trials, 42)
}

#[test]
fn run_persist_load_summarize() {
    let cfg = table1_cfg(10, vec![Algo::LucbPlusPlus, Algo::Uniform], 12);
    let records = run_trials(&cfg).unwrap();
    assert_eq!(records.len(), 24);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("runs.jsonl");
    persist(&records, &path).unwrap();
    let back = load(&path).unwrap();
    assert_eq!(back, records);

    let table = SummaryTable::from_records(&back).unwrap();
    assert_eq!(table.n, 10);
    let base = table.row(Algo::LucbPlusPlus).unwrap();
    let uni = table.row(Algo::Uniform).unwrap();
    assert_eq!(base.ratio, Some(1.0));
    assert_eq!(base.trials, 12);
    let ratio = uni.ratio.unwrap();
    assert!((ratio - uni.mean_t / base.mean_t).abs() < 1e-12);
    assert!(table.to_csv().lines().count() == 3);
}

#[test]
fn reruns_and_thread_counts_agree() {
    let mut cfg = table1_cfg(12, vec![Algo::LucbPlusPlus, Algo::Lucb, Algo::Oracle], 16);
    cfg.permute_each_trial = true;
    let a = run_trials_with(&cfg, true).unwrap();
    let b = run_trials_with(&cfg, false).unwrap();
    let c = run_trials(&cfg).unwrap();
    assert_eq!(a, b);
    assert_eq!(a, c);
}

#[test]
fn seeds_and_algorithms_use_separate_streams() {
    let one = run_trials(&table1_cfg(10, vec![Algo::LucbPlusPlus], 4)).unwrap();
    let mut cfg = table1_cfg(10, vec![Algo::LucbPlusPlus], 4);
    cfg.seed = 43;
    let other = run_trials(&cfg).unwrap();
    assert_ne!(
        one.iter().map(|r| r.total_pulls).collect::<Vec<_>>(),
        other.iter().map(|r| r.total_pulls).collect::<Vec<_>>()
    );
}

#[test]
fn lucbpp_stops_after_whole_rounds() {
    let records = run_trials(&table1_cfg(20, vec![Algo::LucbPlusPlus], 20)).unwrap();
    for r in records.iter().filter(|r| !r.truncated) {
        assert_eq!((r.total_pulls - r.n as u64) % 2, 0, "{r:?}");
        assert!(r.pulls.iter().all(|&p| p >= 1));
    }
}

#[test]
fn symmetrized_correctness_matches_relabeled_run() {
    let inst = Instance::table1(10).unwrap();
    let sched = ConfidenceSchedule::default();
    for trial in 0..20 {
        let mut rng = RngStream::new(5, Purpose::SYMMETRIZE, trial, 0).sequential();
        let sigma = Permutation::random(inst.n(), &mut rng);
        let tr = Transcript::seeded(&inst, 5, trial);
        let sym = symmetrize_with(Algo::LucbPlusPlus, &inst, 0.1, &sched, &tr, 10_000_000, &sigma)
            .unwrap();
        let relabeled = apply_permutation(&inst, &sigma).unwrap();
        let plain = RunSpec::new(Algo::LucbPlusPlus, 0.1, 10_000_000)
            .run(&relabeled, &banditlab::algorithms::PermutedSource::new(&tr, &sigma))
            .unwrap();
        assert_eq!(sym.total_pulls, plain.total_pulls);
        assert_eq!(sym.output == inst.top_k(), plain.output == relabeled.top_k());
    }
}

fn complexity_ratios() -> Vec<f64> {
    [10, 20, 40]
        .into_iter()
        .map(|n| {
            let records = run_trials(&table1_cfg(n, vec![Algo::LucbPlusPlus], 40)).unwrap();
            let mean = records.iter().map(|r| r.total_pulls as f64).sum::<f64>() / 40.0;
            mean / lucbpp_complexity_bound(&Instance::table1(n).unwrap(), 0.1).unwrap()
        })
        .collect()
}

#[test]
fn complexity_ratio_does_not_grow_with_n() {
    let ratios = complexity_ratios();
    assert!(ratios[2] <= ratios[0] * 1.25, "{ratios:?}");
}

#[test]
fn complexity_ratio_at_most_ten() {
    let ratios = complexity_ratios();
    assert!(ratios.iter().all(|&r| r <= 10.0), "{ratios:?}");
}

#[test]
fn truncated_runs_are_flagged_not_dropped() {
    let mut cfg = table1_cfg(10, vec![Algo::Uniform], 3);
    cfg.max_pulls = 50;
    let records = run_trials(&cfg).unwrap();
    assert!(records.iter().all(|r| r.truncated && r.total_pulls <= 50));
    let table = SummaryTable::from_records(&records).unwrap();
    assert_eq!(table.rows[0].truncated_rate, 1.0);
}
