use std::path::PathBuf;

use crate::algorithms::Algo;
use crate::confidence::ConfidenceSchedule;
use crate::error::{Error, Result};
use crate::model::{parse_means, Instance};

/// Where the instance of an experiment comes from.
#[derive(Clone, Debug, PartialEq)]
pub enum InstanceSource {
    /// `k = 5`, means 0.75 on the first five arms and 0.25 elsewhere.
    Table1 { n: usize },
    /// One arm at `gap`, the other `n − 1` at 0.
    BestArm { n: usize, gap: f64 },
    Means(Vec<f64>),
    MeansFile(PathBuf),
}

impl InstanceSource {
    /// Build the instance. `k` overrides the preset's own value.
    pub fn build(&self, k: Option<usize>) -> Result<Instance> {
        match self {
            InstanceSource::Table1 { n } => Instance::two_valued(*n, k.unwrap_or(5), 0.75, 0.25),
            InstanceSource::BestArm { n, gap } => Instance::two_valued(*n, k.unwrap_or(1), *gap, 0.0),
            InstanceSource::Means(means) => Instance::gaussian(means, k.unwrap_or(1)),
            InstanceSource::MeansFile(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
                Instance::new(parse_means(&text)?, k.unwrap_or(1))
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub source: InstanceSource,
    pub k: Option<usize>,
    pub algos: Vec<Algo>,
    pub delta: f64,
    pub trials: u64,
    pub seed: u64,
    pub max_pulls: u64,
    pub permute_each_trial: bool,
    pub sched: ConfidenceSchedule,
    pub out: Option<PathBuf>,
}

/// LUCB-style rules never stop once an early outlier strands an arm on
/// the wrong side, so every run carries a finite budget.
pub const DEFAULT_MAX_PULLS: u64 = 10_000_000;

impl ExperimentConfig {
    pub fn new(source: InstanceSource, algos: Vec<Algo>, delta: f64, trials: u64, seed: u64) -> Self {
        ExperimentConfig {
            source,
            k: None,
            algos,
            delta,
            trials,
            seed,
            max_pulls: DEFAULT_MAX_PULLS,
            permute_each_trial: false,
            sched: ConfidenceSchedule::default(),
            out: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::invalid("trials must be at least 1"));
        }
        if self.algos.is_empty() {
            return Err(Error::invalid("no algorithm selected"));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::invalid(format!("delta must lie in (0, 1), got {}", self.delta)));
        }
        Ok(())
    }

    pub fn instance(&self) -> Result<Instance> {
        self.source.build(self.k)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets() {
        let inst = InstanceSource::Table1 { n: 20 }.build(None).unwrap();
        assert_eq!(inst.k(), 5);
        assert_eq!(inst.top_k(), vec![0, 1, 2, 3, 4]);
        assert_eq!(inst.means()[7], 0.25);
        let inst = InstanceSource::BestArm { n: 10, gap: 0.5 }.build(None).unwrap();
        assert_eq!(inst.k(), 1);
        assert_eq!(inst.means()[0], 0.5);
    }

    #[test]
    fn means_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.txt");
        std::fs::write(&path, "# two arms\n1.0\n0.5\n").unwrap();
        let inst = InstanceSource::MeansFile(path).build(None).unwrap();
        assert_eq!(inst.means(), vec![1.0, 0.5]);
        let missing = InstanceSource::MeansFile(dir.path().join("none.txt")).build(None);
        assert!(missing.unwrap_err().is_io());
    }

    #[test]
    fn validation() {
        let mut cfg = ExperimentConfig::new(InstanceSource::Table1 { n: 10 }, vec![Algo::Lucb], 0.1, 1, 0);
        assert!(cfg.validate().is_ok());
        cfg.trials = 0;
        assert!(cfg.validate().is_err());
    }
}
