//! Best-arm identification with known top-two means.
//!
//! Stage `r` runs a best-arm subroutine at confidence `10^-r`, then spends
//! `⌈(c1/Δ₂²)·log(c2·r²/δ)⌉` fresh pulls on its answer and accepts it when
//! the verification mean clears `μ₁ − Δ₂/2`. The exploration cost of a
//! stage does not depend on `δ`; only the verification term does.

use serde::{Deserialize, Serialize};

use super::lucb::{lucb_phase, lucbpp_levels};
use super::{check_run_args, Algo, Puller, RunOutcome, SampleSource};
use crate::confidence::ConfidenceSchedule;
use crate::error::{Error, Result};
use crate::model::Instance;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StagedConfig {
    pub mu1: f64,
    pub mu2: f64,
    pub c1: f64,
    pub c2: f64,
    pub subroutine: Algo,
}

impl StagedConfig {
    pub fn new(mu1: f64, mu2: f64) -> Result<Self> {
        let cfg = StagedConfig {
            mu1,
            mu2,
            c1: 8.0,
            c2: 4.0,
            subroutine: Algo::LucbPlusPlus,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Read the top two means off the instance.
    pub fn known_means(inst: &Instance) -> Result<Self> {
        let mut means = inst.means();
        means.sort_by(|a, b| b.total_cmp(a));
        Self::new(means[0], means[1])
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mu1 > self.mu2) {
            return Err(Error::Config(format!(
                "staged: mu1 = {} must exceed mu2 = {}",
                self.mu1, self.mu2
            )));
        }
        if !(self.c1 > 0.0 && self.c2 > 0.0) {
            return Err(Error::Config("staged: c1 and c2 must be positive".to_string()));
        }
        if !matches!(self.subroutine, Algo::LucbPlusPlus | Algo::Lucb) {
            return Err(Error::Config(format!(
                "staged: {} cannot serve as the best-arm subroutine",
                self.subroutine
            )));
        }
        Ok(())
    }

    pub fn gap(&self) -> f64 {
        self.mu1 - self.mu2
    }

    /// Verification pulls spent in stage `r` (1-based).
    pub fn verification_pulls(&self, stage: u32, delta: f64) -> u64 {
        let r = f64::from(stage);
        (self.c1 / self.gap().powi(2) * (self.c2 * r * r / delta).ln()).ceil() as u64
    }
}

pub fn run_staged_known_means(
    inst: &Instance,
    delta: f64,
    cfg: &StagedConfig,
    sched: &ConfidenceSchedule,
    source: &dyn SampleSource,
    max_pulls: u64,
) -> Result<RunOutcome> {
    check_run_args(inst, source, delta, max_pulls)?;
    cfg.validate()?;
    if inst.k() != 1 {
        return Err(Error::Config(format!(
            "staged: best-arm problems only, got k = {}",
            inst.k()
        )));
    }
    let known = StagedConfig::known_means(inst)?;
    const TOL: f64 = 1e-9;
    if (known.mu1 - cfg.mu1).abs() > TOL || (known.mu2 - cfg.mu2).abs() > TOL {
        return Err(Error::Config(format!(
            "staged: configured means ({}, {}) disagree with the instance's top two ({}, {})",
            cfg.mu1, cfg.mu2, known.mu1, known.mu2
        )));
    }

    let n = inst.n();
    let threshold = cfg.mu1 - cfg.gap() / 2.0;
    let mut puller = Puller::new(source, max_pulls);
    let mut stage = 0u32;
    loop {
        stage += 1;
        let stage_delta = 10f64.powi(-(stage as i32));
        if stage_delta <= f64::MIN_POSITIVE || puller.remaining() < n as u64 {
            return Ok(puller.into_outcome(vec![0], true, stage - 1));
        }
        let (top, bottom) = match cfg.subroutine {
            Algo::Lucb => {
                let l = (n as f64 / stage_delta).ln();
                (l, l)
            }
            _ => lucbpp_levels(n, 1, stage_delta),
        };
        let (candidate, truncated) = lucb_phase(&mut puller, 1, top, bottom, sched);
        let candidate = candidate[0];
        if truncated {
            return Ok(puller.into_outcome(vec![candidate], true, stage));
        }
        let m = cfg.verification_pulls(stage, delta);
        if puller.remaining() < m {
            return Ok(puller.into_outcome(vec![candidate], true, stage));
        }
        let sum: f64 = (0..m).map(|_| puller.pull(candidate)).sum();
        if sum / m as f64 > threshold {
            return Ok(puller.into_outcome(vec![candidate], false, stage));
        }
    }
}
