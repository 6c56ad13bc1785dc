//! δ-correct sequential sampling algorithms.
//!
//! Every algorithm reads samples through a [`SampleSource`], strictly in
//! per-arm index order: the `s`-th pull of arm `a` observes `read(a, s)`.
//! The same code therefore runs unchanged on a plain transcript, on a
//! simulator that rewrites part of it, or on a relabeled view.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::confidence::ConfidenceSchedule;
use crate::error::{Error, Result};
use crate::model::{Instance, Permutation};

mod lucb;
mod staged;
mod symmetrize;

pub use lucb::{
    lucb_select, lucbpp_complexity_bound, lucbpp_select, oracle_weights, run_lucb, run_lucbpp,
    run_oracle, run_uniform, Decision,
};
pub use staged::{run_staged_known_means, StagedConfig};
pub use symmetrize::{symmetrize, symmetrize_with, PermutedSource};

/// Random-access view of the samples an algorithm may observe.
pub trait SampleSource: Sync {
    fn n_arms(&self) -> usize;

    /// The `s`-th sample of `arm`, `s >= 1`.
    fn read(&self, arm: usize, s: u64) -> f64;
}

impl<S: SampleSource + ?Sized> SampleSource for &S {
    fn n_arms(&self) -> usize {
        (**self).n_arms()
    }

    fn read(&self, arm: usize, s: u64) -> f64 {
        (**self).read(arm, s)
    }
}

/// Running statistics of the current sampling phase.
#[derive(Clone, Debug, PartialEq)]
pub struct PullState {
    pub counts: Vec<u64>,
    pub sums: Vec<f64>,
    pub t: u64,
}

impl PullState {
    pub fn new(n: usize) -> Self {
        PullState {
            counts: vec![0; n],
            sums: vec![0.0; n],
            t: 0,
        }
    }

    pub fn n(&self) -> usize {
        self.counts.len()
    }

    pub fn record(&mut self, arm: usize, x: f64) {
        self.counts[arm] += 1;
        self.sums[arm] += x;
        self.t += 1;
    }

    pub fn mean(&self, arm: usize) -> Option<f64> {
        (self.counts[arm] > 0).then(|| self.sums[arm] / self.counts[arm] as f64)
    }
}

/// Budget-aware cursor over a sample source. The per-arm cursors persist
/// across phases, so a restarted subroutine always sees fresh samples.
pub struct Puller<'a> {
    source: &'a dyn SampleSource,
    pulls: Vec<u64>,
    total: u64,
    max_pulls: u64,
}

impl<'a> Puller<'a> {
    pub fn new(source: &'a dyn SampleSource, max_pulls: u64) -> Self {
        Puller {
            source,
            pulls: vec![0; source.n_arms()],
            total: 0,
            max_pulls,
        }
    }

    pub fn pull(&mut self, arm: usize) -> f64 {
        debug_assert!(self.total < self.max_pulls, "pull past the budget");
        self.pulls[arm] += 1;
        self.total += 1;
        self.source.read(arm, self.pulls[arm])
    }

    pub fn remaining(&self) -> u64 {
        self.max_pulls.saturating_sub(self.total)
    }

    pub fn n_arms(&self) -> usize {
        self.pulls.len()
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn into_outcome(self, mut output: Vec<usize>, truncated: bool, stages: u32) -> RunOutcome {
        output.sort_unstable();
        RunOutcome {
            total_pulls: self.total,
            pulls: self.pulls,
            output,
            truncated,
            stages,
        }
    }
}

/// What a single run produced, before it is stamped with trial metadata.
#[derive(Clone, Debug, PartialEq)]
pub struct RunOutcome {
    pub total_pulls: u64,
    pub pulls: Vec<u64>,
    pub output: Vec<usize>,
    pub truncated: bool,
    /// Number of stages for the staged algorithm, 1 otherwise.
    pub stages: u32,
}

/// One trial's result. Arm indices are zero-based.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub algo: String,
    pub n: usize,
    pub k: usize,
    pub delta: f64,
    pub seed: u64,
    pub trial: u64,
    pub total_pulls: u64,
    pub pulls: Vec<u64>,
    pub output: Vec<usize>,
    pub correct: bool,
    pub truncated: bool,
}

impl RunRecord {
    pub fn new(
        algo: Algo,
        inst: &Instance,
        delta: f64,
        seed: u64,
        trial: u64,
        outcome: RunOutcome,
    ) -> Self {
        let correct = outcome.output == inst.top_k();
        RunRecord {
            algo: algo.name().to_string(),
            n: inst.n(),
            k: inst.k(),
            delta,
            seed,
            trial,
            total_pulls: outcome.total_pulls,
            pulls: outcome.pulls,
            output: outcome.output,
            correct,
            truncated: outcome.truncated,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Algo {
    #[serde(rename = "lucbpp")]
    LucbPlusPlus,
    #[serde(rename = "lucb")]
    Lucb,
    #[serde(rename = "oracle")]
    Oracle,
    #[serde(rename = "uniform")]
    Uniform,
    #[serde(rename = "staged")]
    Staged,
}

impl Algo {
    pub const ALL: [Algo; 5] = [
        Algo::LucbPlusPlus,
        Algo::Lucb,
        Algo::Oracle,
        Algo::Uniform,
        Algo::Staged,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algo::LucbPlusPlus => "lucbpp",
            Algo::Lucb => "lucb",
            Algo::Oracle => "oracle",
            Algo::Uniform => "uniform",
            Algo::Staged => "staged",
        }
    }
}

impl fmt::Display for Algo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algo {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "lucbpp" | "lucb++" => Ok(Algo::LucbPlusPlus),
            "lucb" => Ok(Algo::Lucb),
            "oracle" => Ok(Algo::Oracle),
            "uniform" => Ok(Algo::Uniform),
            "staged" => Ok(Algo::Staged),
            other => Err(Error::invalid(format!("unknown algorithm {other:?}"))),
        }
    }
}

pub(crate) fn check_run_args(inst: &Instance, source: &dyn SampleSource, delta: f64, max_pulls: u64) -> Result<()> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::invalid(format!("delta must lie in (0, 1), got {delta}")));
    }
    if source.n_arms() != inst.n() {
        return Err(Error::invalid(format!(
            "sample source has {} arms but the instance has {}",
            source.n_arms(),
            inst.n()
        )));
    }
    if max_pulls < inst.n() as u64 {
        return Err(Error::invalid(format!(
            "max_pulls = {max_pulls} cannot cover one pull of each of {} arms",
            inst.n()
        )));
    }
    Ok(())
}

/// Run `algo` with its default configuration. The staged algorithm is given
/// the instance's true top two means.
pub fn run_algorithm(
    algo: Algo,
    inst: &Instance,
    delta: f64,
    sched: &ConfidenceSchedule,
    source: &dyn SampleSource,
    max_pulls: u64,
) -> Result<RunOutcome> {
    match algo {
        Algo::LucbPlusPlus => run_lucbpp(inst, delta, sched, source, max_pulls),
        Algo::Lucb => run_lucb(inst, delta, sched, source, max_pulls),
        Algo::Oracle => run_oracle(inst, delta, sched, source, max_pulls),
        Algo::Uniform => run_uniform(inst, delta, sched, source, max_pulls),
        Algo::Staged => {
            let cfg = StagedConfig::known_means(inst)?;
            run_staged_known_means(inst, delta, &cfg, sched, source, max_pulls)
        }
    }
}

/// An algorithm together with everything it needs besides the instance and
/// the samples.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RunSpec {
    pub algo: Algo,
    pub delta: f64,
    pub sched: ConfidenceSchedule,
    pub max_pulls: u64,
}

impl RunSpec {
    pub fn new(algo: Algo, delta: f64, max_pulls: u64) -> Self {
        RunSpec {
            algo,
            delta,
            sched: ConfidenceSchedule::default(),
            max_pulls,
        }
    }

    pub fn run(&self, inst: &Instance, source: &dyn SampleSource) -> Result<RunOutcome> {
        run_algorithm(self.algo, inst, self.delta, &self.sched, source, self.max_pulls)
    }

    pub fn symmetrized(
        &self,
        inst: &Instance,
        source: &dyn SampleSource,
        sigma: &Permutation,
    ) -> Result<RunOutcome> {
        symmetrize_with(self.algo, inst, self.delta, &self.sched, source, self.max_pulls, sigma)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn algo_names_round_trip() {
        for a in Algo::ALL {
            assert_eq!(a.name().parse::<Algo>().unwrap(), a);
        }
        assert_eq!("LUCB++".parse::<Algo>().unwrap(), Algo::LucbPlusPlus);
        assert!("elimination".parse::<Algo>().is_err());
    }

    #[test]
    fn pull_state_means() {
        let mut s = PullState::new(2);
        assert_eq!(s.mean(0), None);
        s.record(0, 1.0);
        s.record(0, 2.0);
        s.record(1, -1.0);
        assert_eq!(s.mean(0), Some(1.5));
        assert_eq!(s.t, 3);
        assert_eq!(s.counts.iter().sum::<u64>(), s.t);
    }
}
