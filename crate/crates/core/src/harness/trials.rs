use rayon::prelude::*;

use super::ExperimentConfig;
use crate::algorithms::{Algo, RunRecord, RunSpec};
use crate::error::Result;
use crate::model::{apply_permutation, Instance, Permutation};
use crate::rng::{Purpose, RngStream};
use crate::simlab::Transcript;

/// One trial of `algo`. With `permute`, the instance is relabeled by a
/// uniform permutation and pulls and output are mapped back, so index `a`
/// of the record always refers to distribution `ν_a`.
pub fn run_trial(
    spec: &RunSpec,
    inst: &Instance,
    seed: u64,
    trial: u64,
    permute: bool,
) -> Result<RunRecord> {
    let purpose = Purpose::transcript_for(spec.algo.name());
    let outcome = if permute {
        let mut rng = RngStream::new(seed, Purpose::PERMUTATION, trial, 0).sequential();
        let pi = Permutation::random(inst.n(), &mut rng);
        let permuted = apply_permutation(inst, &pi)?;
        let mut out = spec.run(&permuted, &Transcript::new(&permuted, seed, purpose, trial))?;
        let inverse = pi.inverse();
        out.pulls = (0..inst.n()).map(|a| out.pulls[pi.apply(a)]).collect();
        out.output = out.output.iter().map(|&i| inverse.apply(i)).collect();
        out.output.sort_unstable();
        out
    } else {
        spec.run(inst, &Transcript::new(inst, seed, purpose, trial))?
    };
    Ok(RunRecord::new(spec.algo, inst, spec.delta, seed, trial, outcome))
}

/// `trials × algos` records, grouped by algorithm in configuration order
/// and by trial index within each group.
pub fn run_trials(cfg: &ExperimentConfig) -> Result<Vec<RunRecord>> {
    run_trials_with(cfg, true)
}

pub fn run_trials_with(cfg: &ExperimentConfig, parallel: bool) -> Result<Vec<RunRecord>> {
    cfg.validate()?;
    let inst = cfg.instance()?;
    let mut records = Vec::with_capacity(cfg.algos.len() * cfg.trials as usize);
    for &algo in &cfg.algos {
        records.extend(run_algo_trials(cfg, &inst, algo, parallel)?);
    }
    Ok(records)
}

fn run_algo_trials(cfg: &ExperimentConfig, inst: &Instance, algo: Algo, parallel: bool) -> Result<Vec<RunRecord>> {
    let spec = RunSpec {
        algo,
        delta: cfg.delta,
        sched: cfg.sched,
        max_pulls: cfg.max_pulls,
    };
    let one = |t: u64| run_trial(&spec, inst, cfg.seed, t, cfg.permute_each_trial);
    if parallel {
        (0..cfg.trials).into_par_iter().map(one).collect()
    } else {
        (0..cfg.trials).map(one).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::InstanceSource;

    #[test]
    fn budget_of_n_truncates() {
        let mut cfg = ExperimentConfig::new(
            InstanceSource::Table1 { n: 10 },
            vec![Algo::LucbPlusPlus, Algo::Lucb, Algo::Oracle, Algo::Uniform],
            0.1,
            1,
            3,
        );
        cfg.max_pulls = 10;
        let records = run_trials(&cfg).unwrap();
        assert_eq!(records.len(), 4);
        assert!(records.iter().all(|r| r.truncated && r.total_pulls == 10));
    }

    #[test]
    fn parallel_and_serial_agree() {
        let mut cfg = ExperimentConfig::new(
            InstanceSource::BestArm { n: 6, gap: 0.5 },
            vec![Algo::LucbPlusPlus, Algo::Staged],
            0.1,
            12,
            9,
        );
        cfg.permute_each_trial = true;
        assert_eq!(run_trials_with(&cfg, true).unwrap(), run_trials_with(&cfg, false).unwrap());
    }

    #[test]
    fn permutation_maps_back_to_distribution_identity() {
        let mut cfg = ExperimentConfig::new(
            InstanceSource::BestArm { n: 6, gap: 1.0 },
            vec![Algo::LucbPlusPlus],
            0.05,
            40,
            1,
        );
        cfg.permute_each_trial = true;
        let records = run_trials(&cfg).unwrap();
        let correct = records.iter().filter(|r| r.output == vec![0]).count();
        assert!(correct >= 36);
        // The best distribution is pulled most on average.
        let mean = |a: usize| records.iter().map(|r| r.pulls[a] as f64).sum::<f64>();
        assert!((1..6).all(|a| mean(0) > mean(a)));
    }

    #[test]
    fn symmetric_instance_has_equal_position_means() {
        // Two-valued with k = 1: the five suboptimal distributions are
        // exchangeable, so their mean pull counts agree within noise.
        let mut cfg = ExperimentConfig::new(
            InstanceSource::BestArm { n: 6, gap: 0.5 },
            vec![Algo::LucbPlusPlus],
            0.1,
            300,
            5,
        );
        cfg.permute_each_trial = true;
        let records = run_trials(&cfg).unwrap();
        let n = records.len() as f64;
        let stats: Vec<(f64, f64)> = (1..6)
            .map(|a| {
                let xs: Vec<f64> = records.iter().map(|r| r.pulls[a] as f64).collect();
                let m = xs.iter().sum::<f64>() / n;
                let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
                (m, (v / n).sqrt())
            })
            .collect();
        for &(ma, sa) in &stats {
            for &(mb, sb) in &stats {
                assert!((ma - mb).abs() <= 3.0 * (sa * sa + sb * sb).sqrt() + 1e-9);
            }
        }
    }
}
