use crate::algorithms::{RunRecord, RunSpec, SampleSource};
use crate::error::{Error, Result};
use crate::model::{draw_sample, Instance};
use crate::rng::{Purpose, RngStream};

/// The infinite table `Tr[a, s]` of i.i.d. samples, computed on demand.
#[derive(Clone, Debug)]
pub struct Transcript {
    instance: Instance,
    streams: Vec<RngStream>,
}

impl Transcript {
    pub fn new(instance: &Instance, seed: u64, purpose: Purpose, trial: u64) -> Self {
        let base = RngStream::new(seed, purpose, trial, 0);
        let streams = (0..instance.n() as u64).map(|a| base.for_arm(a)).collect();
        Transcript {
            instance: instance.clone(),
            streams,
        }
    }

    /// Transcript on the default `TRANSCRIPT` purpose.
    pub fn seeded(instance: &Instance, seed: u64, trial: u64) -> Self {
        Self::new(instance, seed, Purpose::TRANSCRIPT, trial)
    }

    pub fn instance(&self) -> &Instance {
        &self.instance
    }
}

impl SampleSource for Transcript {
    fn n_arms(&self) -> usize {
        self.instance.n()
    }

    fn read(&self, arm: usize, s: u64) -> f64 {
        draw_sample(self.instance.arm(arm), &self.streams[arm], s)
    }
}

/// One-arm swap simulator: arms `a*` and `b` keep their first `τ` samples;
/// every later sample of either is a fresh draw from `ν_{a*}`.
#[derive(Clone, Debug)]
pub struct SwapSimulator {
    base: Transcript,
    a_star: usize,
    b: usize,
    tau: u64,
    tail: RngStream,
}

impl SwapSimulator {
    pub fn new(base: Transcript, a_star: usize, b: usize, tau: u64, seed: u64, trial: u64) -> Result<Self> {
        let n = base.instance.n();
        if a_star >= n || b >= n || a_star == b {
            return Err(Error::invalid(format!(
                "swap arms must be two distinct indices below {n}, got ({a_star}, {b})"
            )));
        }
        Ok(SwapSimulator {
            base,
            a_star,
            b,
            tau,
            tail: RngStream::new(seed, Purpose::SIMULATOR_TAIL, trial, 0),
        })
    }

    pub fn tau(&self) -> u64 {
        self.tau
    }

    /// Whether a run with these pull counts stayed on the truthful event,
    /// i.e. never read a replaced sample.
    pub fn truthful(&self, pulls: &[u64]) -> bool {
        pulls[self.a_star] <= self.tau && pulls[self.b] <= self.tau
    }
}

impl SampleSource for SwapSimulator {
    fn n_arms(&self) -> usize {
        self.base.n_arms()
    }

    fn read(&self, arm: usize, s: u64) -> f64 {
        if (arm == self.a_star || arm == self.b) && s > self.tau {
            let stream = self.tail.for_arm(arm as u64);
            draw_sample(self.base.instance.arm(self.a_star), &stream, s)
        } else {
            self.base.read(arm, s)
        }
    }
}

/// Run `spec` against an arbitrary sample source; correctness is judged
/// against `inst`.
pub fn run_on_source(
    spec: &RunSpec,
    inst: &Instance,
    source: &dyn SampleSource,
    seed: u64,
    trial: u64,
) -> Result<RunRecord> {
    let outcome = spec.run(inst, source)?;
    Ok(RunRecord::new(spec.algo, inst, spec.delta, seed, trial, outcome))
}
