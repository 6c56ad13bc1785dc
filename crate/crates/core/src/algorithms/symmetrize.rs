//! Algorithm symmetrization: run on a uniformly relabeled problem and map
//! the answer back, which makes any algorithm permutation-equivariant.

use super::{run_algorithm, Algo, RunOutcome, SampleSource};
use crate::confidence::ConfidenceSchedule;
use crate::error::Result;
use crate::model::{apply_permutation, Instance, Permutation};
use crate::rng::{Purpose, RngStream};

/// View of `inner` under relabeling `σ`: arm `σ(a)` of the view is arm `a`
/// of `inner`.
pub struct PermutedSource<'a> {
    inner: &'a dyn SampleSource,
    inverse: Permutation,
}

impl<'a> PermutedSource<'a> {
    pub fn new(inner: &'a dyn SampleSource, sigma: &Permutation) -> Self {
        PermutedSource {
            inner,
            inverse: sigma.inverse(),
        }
    }
}

impl SampleSource for PermutedSource<'_> {
    fn n_arms(&self) -> usize {
        self.inner.n_arms()
    }

    fn read(&self, arm: usize, s: u64) -> f64 {
        self.inner.read(self.inverse.apply(arm), s)
    }
}

/// Run `algo` on `σ(ν)` with the σ-relabeled samples and express pulls and
/// output in the original labels.
#[allow(clippy::too_many_arguments)]
pub fn symmetrize_with(
    algo: Algo,
    inst: &Instance,
    delta: f64,
    sched: &ConfidenceSchedule,
    source: &dyn SampleSource,
    max_pulls: u64,
    sigma: &Permutation,
) -> Result<RunOutcome> {
    let relabeled = apply_permutation(inst, sigma)?;
    let view = PermutedSource::new(source, sigma);
    let out = run_algorithm(algo, &relabeled, delta, sched, &view, max_pulls)?;
    let inverse = sigma.inverse();
    let pulls = (0..inst.n()).map(|a| out.pulls[sigma.apply(a)]).collect();
    let mut output: Vec<usize> = out.output.iter().map(|&i| inverse.apply(i)).collect();
    output.sort_unstable();
    Ok(RunOutcome {
        pulls,
        output,
        ..out
    })
}

/// Symmetrize with `σ` drawn uniformly from the `SYMMETRIZE` stream of
/// `(seed, trial)`.
#[allow(clippy::too_many_arguments)]
pub fn symmetrize(
    algo: Algo,
    inst: &Instance,
    delta: f64,
    sched: &ConfidenceSchedule,
    source: &dyn SampleSource,
    max_pulls: u64,
    seed: u64,
    trial: u64,
) -> Result<(RunOutcome, Permutation)> {
    let mut rng = RngStream::new(seed, Purpose::SYMMETRIZE, trial, 0).sequential();
    let sigma = Permutation::random(inst.n(), &mut rng);
    let out = symmetrize_with(algo, inst, delta, sched, source, max_pulls, &sigma)?;
    Ok((out, sigma))
}
