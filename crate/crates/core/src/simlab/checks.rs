use rayon::prelude::*;
use serde::Serialize;

use super::Transcript;
use crate::algorithms::{RunOutcome, RunSpec};
use crate::bounds::{best_arm_subset_bound, permutation_tail_bound};
use crate::error::{Error, Result};
use crate::model::{apply_permutation, kl_divergence, Instance, Permutation};
use crate::rng::{Purpose, RngStream};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LeCamReport {
    pub b: usize,
    pub eta: f64,
    pub delta: f64,
    pub trials: u64,
    /// `τ(η)`
    pub threshold: f64,
    /// `Pr_ν[N_b(T) > τ]`
    pub p_base: f64,
    /// `Pr_{ν^{(b,a*)}}[N_{a*}(T) > τ]`
    pub p_swapped: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub stderr: f64,
    pub holds: bool,
}

fn symmetrized_run(spec: &RunSpec, inst: &Instance, tr: &Transcript, seed: u64, trial: u64) -> Result<RunOutcome> {
    let mut rng = RngStream::new(seed, Purpose::SYMMETRIZE, trial, 0).sequential();
    let sigma = Permutation::random(inst.n(), &mut rng);
    spec.symmetrized(inst, tr, &sigma)
}

/// Monte Carlo estimate of both tail probabilities of the two-point Le Cam
/// bound, running the symmetrized algorithm on `ν` and on `ν` with arms
/// `a*` and `b` exchanged.
pub fn lecam_check(
    inst: &Instance,
    b: usize,
    eta: f64,
    spec: &RunSpec,
    trials: u64,
    seed: u64,
) -> Result<LeCamReport> {
    if trials == 0 {
        return Err(Error::invalid("trials must be positive"));
    }
    let tail = permutation_tail_bound(inst, b, eta, spec.delta)?;
    let a_star = inst.best_arm()?;
    let swapped = apply_permutation(inst, &Permutation::swap(inst.n(), a_star, b)?)?;
    let hits: Vec<(bool, bool)> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let base = symmetrized_run(spec, inst, &Transcript::seeded(inst, seed, t), seed, t)?;
            let tr = Transcript::new(&swapped, seed, Purpose::SWAPPED_TRANSCRIPT, t);
            let other = symmetrized_run(spec, &swapped, &tr, seed, t)?;
            Ok((
                base.pulls[b] as f64 > tail.threshold,
                other.pulls[a_star] as f64 > tail.threshold,
            ))
        })
        .collect::<Result<_>>()?;
    let rate = |f: fn(&(bool, bool)) -> bool| hits.iter().filter(|h| f(h)).count() as f64 / trials as f64;
    let p_base = rate(|h| h.0);
    let p_swapped = rate(|h| h.1);
    let n = trials as f64;
    let stderr = 0.5 * (p_base * (1.0 - p_base) / n + p_swapped * (1.0 - p_swapped) / n).sqrt();
    let lhs = 0.5 * (p_base + p_swapped);
    Ok(LeCamReport {
        b,
        eta,
        delta: spec.delta,
        trials,
        threshold: tail.threshold,
        p_base,
        p_swapped,
        lhs,
        rhs: tail.probability,
        stderr,
        holds: lhs >= tail.probability - 3.0 * stderr,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FanoReport {
    pub m: usize,
    pub beta: f64,
    pub delta: f64,
    pub trials: u64,
    /// Pull threshold defining `S_{m,β}`.
    pub threshold: f64,
    pub empirical: f64,
    pub stderr: f64,
    /// `1 − 2β − δ`
    pub bound: f64,
    pub holds: bool,
}

/// Indices of the top arm and of the common suboptimal distribution, or an
/// error when `inst` is not one best arm plus `n − 1` identical arms.
fn two_valued_split(inst: &Instance) -> Result<usize> {
    let best = inst.best_arm()?;
    let other = inst.arm(inst.ranking()[1]);
    let uniform_rest = (0..inst.n())
        .filter(|&a| a != best)
        .all(|a| inst.arm(a) == other);
    if uniform_rest {
        Ok(best)
    } else {
        Err(Error::invalid(
            "fano_event_check needs one best arm and n - 1 identical suboptimal arms",
        ))
    }
}

/// Empirical rate of `{π(1) ∈ S} ∧ {|S| ≥ m}` over uniformly permuted
/// copies of a two-valued instance, with `S = {a : N_a(T) > threshold}`.
pub fn fano_event_check(
    inst: &Instance,
    m: usize,
    beta: f64,
    spec: &RunSpec,
    trials: u64,
    seed: u64,
) -> Result<FanoReport> {
    if trials == 0 {
        return Err(Error::invalid("trials must be positive"));
    }
    let best = two_valued_split(inst)?;
    let second = inst.ranking()[1];
    let kl_sum = kl_divergence(inst.arm(best), inst.arm(second))?
        + kl_divergence(inst.arm(second), inst.arm(best))?;
    let bound = best_arm_subset_bound(inst.n(), kl_sum, m, beta, spec.delta)?;
    let hits: Vec<bool> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = RngStream::new(seed, Purpose::PERMUTATION, t, 0).sequential();
            let pi = Permutation::random(inst.n(), &mut rng);
            let permuted = apply_permutation(inst, &pi)?;
            let out = spec.run(&permuted, &Transcript::seeded(&permuted, seed, t))?;
            let in_s = |a: usize| out.pulls[a] as f64 > bound.threshold;
            let size = (0..inst.n()).filter(|&a| in_s(a)).count();
            Ok(in_s(pi.apply(best)) && size >= m)
        })
        .collect::<Result<_>>()?;
    let n = trials as f64;
    let empirical = hits.iter().filter(|&&h| h).count() as f64 / n;
    let stderr = (empirical * (1.0 - empirical) / n).sqrt();
    Ok(FanoReport {
        m,
        beta,
        delta: spec.delta,
        trials,
        threshold: bound.threshold,
        empirical,
        stderr,
        bound: bound.probability,
        holds: empirical >= bound.probability - 3.0 * stderr,
    })
}
