//! LUCB-style top-k identification: LUCB++, LUCB and the fixed-allocation
//! oracle and uniform samplers that share LUCB's stopping rule.

use std::cmp::Reverse;
use std::collections::BTreeSet;

use ordered_float::OrderedFloat;

use super::{check_run_args, PullState, Puller, RunOutcome, SampleSource};
use crate::confidence::ConfidenceSchedule;
use crate::error::{Error, Result};
use crate::model::{gap_profile, GapKind, Instance};

type F = OrderedFloat<f64>;
/// Ranking key: larger mean first, then lower index.
type RankKey = (Reverse<F>, usize);

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Decision {
    Stop(Vec<usize>),
    Pull(usize, usize),
}

/// Confidence levels of the two sides of the LUCB stopping rule.
#[derive(Clone, Copy, Debug)]
struct Sides {
    log_top: f64,
    log_bottom: f64,
}

impl Sides {
    fn lucbpp(n: usize, k: usize, delta: f64) -> Self {
        Sides {
            log_top: (2.0 * (n - k) as f64 / delta).ln(),
            log_bottom: (2.0 * k as f64 / delta).ln(),
        }
    }

    fn union(n: usize, delta: f64) -> Self {
        let l = (n as f64 / delta).ln();
        Sides {
            log_top: l,
            log_bottom: l,
        }
    }
}

/// One LUCB step on an explicit state. `delta_top` is the confidence used
/// for lower bounds inside the empirical top-k, `delta_bottom` for upper
/// bounds outside it.
pub fn lucb_select(
    state: &PullState,
    k: usize,
    delta_top: f64,
    delta_bottom: f64,
    sched: &ConfidenceSchedule,
) -> Result<Decision> {
    let n = state.n();
    if k == 0 || k >= n {
        return Err(Error::invalid(format!("k must satisfy 1 <= k < n, got k={k}, n={n}")));
    }
    for d in [delta_top, delta_bottom] {
        if !(d > 0.0 && d < 1.0) {
            return Err(Error::invalid(format!("confidence level {d} outside (0, 1)")));
        }
    }
    if let Some(a) = state.counts.iter().position(|&c| c == 0) {
        return Err(Error::Precondition(format!("arm {a} has not been pulled")));
    }
    let means: Vec<f64> = (0..n).map(|a| state.sums[a] / state.counts[a] as f64).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| means[b].total_cmp(&means[a]).then(a.cmp(&b)));
    let (top, rest) = order.split_at(k);

    let sides = Sides {
        log_top: (1.0 / delta_top).ln(),
        log_bottom: (1.0 / delta_bottom).ln(),
    };
    let lcb = |a: usize| means[a] - sched.anytime_radius(state.counts[a], sides.log_top);
    let ucb = |a: usize| means[a] + sched.anytime_radius(state.counts[a], sides.log_bottom);

    // Both slices are in ranking order: ties on h go to the weakest-ranked
    // top arm, ties on l to the strongest-ranked challenger.
    let mut h = top[0];
    for &a in &top[1..] {
        if lcb(a) <= lcb(h) {
            h = a;
        }
    }
    let mut l = rest[0];
    for &a in &rest[1..] {
        if ucb(a) > ucb(l) {
            l = a;
        }
    }
    if lcb(h) > ucb(l) {
        let mut out = top.to_vec();
        out.sort_unstable();
        Ok(Decision::Stop(out))
    } else {
        Ok(Decision::Pull(h, l))
    }
}

/// The LUCB++ step: lower bounds at `δ/(2(n-k))`, upper bounds at `δ/(2k)`.
pub fn lucbpp_select(
    state: &PullState,
    k: usize,
    delta: f64,
    sched: &ConfidenceSchedule,
) -> Result<Decision> {
    let n = state.n();
    if k == 0 || k >= n {
        return Err(Error::invalid(format!("k must satisfy 1 <= k < n, got k={k}, n={n}")));
    }
    lucb_select(
        state,
        k,
        delta / (2.0 * (n - k) as f64),
        delta / (2.0 * k as f64),
        sched,
    )
}

/// Incremental bookkeeping for the LUCB stopping rule: the empirical top-k
/// split plus ordered lower/upper confidence bounds on each side, so each
/// update and query is logarithmic in `n`.
struct BoundTracker<'s> {
    k: usize,
    sched: &'s ConfidenceSchedule,
    sides: Sides,
    means: Vec<f64>,
    lcb: Vec<f64>,
    ucb: Vec<f64>,
    in_top: Vec<bool>,
    top: BTreeSet<RankKey>,
    rest: BTreeSet<RankKey>,
    top_lcb: BTreeSet<(F, Reverse<RankKey>)>,
    rest_ucb: BTreeSet<(Reverse<F>, RankKey)>,
}

impl<'s> BoundTracker<'s> {
    fn new(state: &PullState, k: usize, sides: Sides, sched: &'s ConfidenceSchedule) -> Self {
        let n = state.n();
        let mut t = BoundTracker {
            k,
            sched,
            sides,
            means: vec![0.0; n],
            lcb: vec![0.0; n],
            ucb: vec![0.0; n],
            in_top: vec![false; n],
            top: BTreeSet::new(),
            rest: BTreeSet::new(),
            top_lcb: BTreeSet::new(),
            rest_ucb: BTreeSet::new(),
        };
        for a in 0..n {
            t.refresh(state, a);
            t.rest.insert(t.key(a));
            t.rest_ucb.insert(t.ucb_key(a));
        }
        while t.top.len() < k {
            let first = *t.rest.first().expect("k < n");
            t.promote(first.1);
        }
        t
    }

    fn key(&self, a: usize) -> RankKey {
        (Reverse(F::from(self.means[a])), a)
    }

    fn lcb_key(&self, a: usize) -> (F, Reverse<RankKey>) {
        (F::from(self.lcb[a]), Reverse(self.key(a)))
    }

    fn ucb_key(&self, a: usize) -> (Reverse<F>, RankKey) {
        (Reverse(F::from(self.ucb[a])), self.key(a))
    }

    fn refresh(&mut self, state: &PullState, a: usize) {
        let c = state.counts[a];
        let m = state.sums[a] / c as f64;
        self.means[a] = m;
        self.lcb[a] = m - self.sched.anytime_radius(c, self.sides.log_top);
        self.ucb[a] = m + self.sched.anytime_radius(c, self.sides.log_bottom);
    }

    fn promote(&mut self, a: usize) {
        self.rest.remove(&self.key(a));
        self.rest_ucb.remove(&self.ucb_key(a));
        self.top.insert(self.key(a));
        self.top_lcb.insert(self.lcb_key(a));
        self.in_top[a] = true;
    }

    fn demote(&mut self, a: usize) {
        self.top.remove(&self.key(a));
        self.top_lcb.remove(&self.lcb_key(a));
        self.rest.insert(self.key(a));
        self.rest_ucb.insert(self.ucb_key(a));
        self.in_top[a] = false;
    }

    /// Re-read arm `a` from `state` after it was pulled.
    fn update(&mut self, state: &PullState, a: usize) {
        if self.in_top[a] {
            self.demote(a);
        }
        self.rest.remove(&self.key(a));
        self.rest_ucb.remove(&self.ucb_key(a));
        self.refresh(state, a);
        self.rest.insert(self.key(a));
        self.rest_ucb.insert(self.ucb_key(a));

        if self.top.len() < self.k {
            let best = self.rest.first().expect("k < n").1;
            self.promote(best);
        } else {
            let challenger = *self.rest.first().expect("k < n");
            let weakest = *self.top.last().expect("k >= 1");
            if challenger < weakest {
                self.demote(weakest.1);
                self.promote(challenger.1);
            }
        }
    }

    fn decision(&self) -> Decision {
        let &(lcb, Reverse((_, h))) = self.top_lcb.first().expect("k >= 1");
        let &(Reverse(ucb), (_, l)) = self.rest_ucb.first().expect("k < n");
        if lcb > ucb {
            Decision::Stop(self.top_set())
        } else {
            Decision::Pull(h, l)
        }
    }

    fn top_set(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.top.iter().map(|&(_, a)| a).collect();
        v.sort_unstable();
        v
    }
}

fn initial_round(puller: &mut Puller<'_>) -> PullState {
    let n = puller.n_arms();
    let mut state = PullState::new(n);
    for a in 0..n {
        let x = puller.pull(a);
        state.record(a, x);
    }
    state
}

/// Pull `h` and `l` each round until the stopping rule fires or the budget
/// cannot cover another round. Returns the output set and whether the budget
/// cut the run short.
pub(crate) fn lucb_phase(
    puller: &mut Puller<'_>,
    k: usize,
    sides_top: f64,
    sides_bottom: f64,
    sched: &ConfidenceSchedule,
) -> (Vec<usize>, bool) {
    let sides = Sides {
        log_top: sides_top,
        log_bottom: sides_bottom,
    };
    let mut state = initial_round(puller);
    let mut tracker = BoundTracker::new(&state, k, sides, sched);
    loop {
        match tracker.decision() {
            Decision::Stop(set) => return (set, false),
            Decision::Pull(h, l) => {
                if puller.remaining() < 2 {
                    return (tracker.top_set(), true);
                }
                for a in [h, l] {
                    let x = puller.pull(a);
                    state.record(a, x);
                    tracker.update(&state, a);
                }
            }
        }
    }
}

/// LUCB++ log-confidence levels for an `n`-arm top-`k` problem.
pub(crate) fn lucbpp_levels(n: usize, k: usize, delta: f64) -> (f64, f64) {
    let s = Sides::lucbpp(n, k, delta);
    (s.log_top, s.log_bottom)
}

pub fn run_lucbpp(
    inst: &Instance,
    delta: f64,
    sched: &ConfidenceSchedule,
    source: &dyn SampleSource,
    max_pulls: u64,
) -> Result<RunOutcome> {
    check_run_args(inst, source, delta, max_pulls)?;
    let mut puller = Puller::new(source, max_pulls);
    let (top, bottom) = lucbpp_levels(inst.n(), inst.k(), delta);
    let (out, truncated) = lucb_phase(&mut puller, inst.k(), top, bottom, sched);
    Ok(puller.into_outcome(out, truncated, 1))
}

/// LUCB with a union bound over all arms on both sides.
pub fn run_lucb(
    inst: &Instance,
    delta: f64,
    sched: &ConfidenceSchedule,
    source: &dyn SampleSource,
    max_pulls: u64,
) -> Result<RunOutcome> {
    check_run_args(inst, source, delta, max_pulls)?;
    let mut puller = Puller::new(source, max_pulls);
    let s = Sides::union(inst.n(), delta);
    let (out, truncated) = lucb_phase(&mut puller, inst.k(), s.log_top, s.log_bottom, sched);
    Ok(puller.into_outcome(out, truncated, 1))
}

/// Fixed sampling proportions for the symmetric two-level top-k instance:
/// `(√(n/k − 1) − 1)/(n − 2k)` on each of the first `k` arms and the
/// remaining mass spread evenly over the other `n − k`. Uniform when
/// `n = 2k`.
pub fn oracle_weights(n: usize, k: usize) -> Result<Vec<f64>> {
    if k == 0 || n <= k {
        return Err(Error::invalid(format!("oracle weights need n > k >= 1, got n={n}, k={k}")));
    }
    if n == 2 * k {
        return Ok(vec![1.0 / n as f64; n]);
    }
    let (nf, kf) = (n as f64, k as f64);
    let w_top = ((nf / kf - 1.0).sqrt() - 1.0) / (nf - 2.0 * kf);
    let w_bottom = (1.0 - kf * w_top) / (nf - kf);
    if !(w_top > 0.0 && w_bottom > 0.0) {
        return Err(Error::invalid(format!(
            "oracle weights are not positive for n={n}, k={k}"
        )));
    }
    Ok((0..n).map(|i| if i < k { w_top } else { w_bottom }).collect())
}

/// Track fixed proportions `w` (pull `argmin N_a / w_a`, lowest index on
/// ties) under the union-bound LUCB stopping rule, one pull per round.
fn tracking_run(
    inst: &Instance,
    delta: f64,
    sched: &ConfidenceSchedule,
    source: &dyn SampleSource,
    max_pulls: u64,
    weights: &[f64],
) -> Result<RunOutcome> {
    check_run_args(inst, source, delta, max_pulls)?;
    let mut puller = Puller::new(source, max_pulls);
    let sides = Sides::union(inst.n(), delta);
    let mut state = initial_round(&mut puller);
    let mut tracker = BoundTracker::new(&state, inst.k(), sides, sched);
    let mut queue: BTreeSet<(F, usize)> = (0..inst.n())
        .map(|a| (F::from(state.counts[a] as f64 / weights[a]), a))
        .collect();
    loop {
        if let Decision::Stop(set) = tracker.decision() {
            return Ok(puller.into_outcome(set, false, 1));
        }
        if puller.remaining() < 1 {
            let set = tracker.top_set();
            return Ok(puller.into_outcome(set, true, 1));
        }
        let (_, a) = queue.pop_first().expect("n >= 2");
        let x = puller.pull(a);
        state.record(a, x);
        tracker.update(&state, a);
        queue.insert((F::from(state.counts[a] as f64 / weights[a]), a));
    }
}

/// The oracle sampler: knows which arms form the true top-k and tracks the
/// oracle proportions accordingly.
pub fn run_oracle(
    inst: &Instance,
    delta: f64,
    sched: &ConfidenceSchedule,
    source: &dyn SampleSource,
    max_pulls: u64,
) -> Result<RunOutcome> {
    let base = oracle_weights(inst.n(), inst.k())?;
    let (w_top, w_bottom) = (base[0], base[inst.n() - 1]);
    let mut weights = vec![w_bottom; inst.n()];
    for a in inst.top_k() {
        weights[a] = w_top;
    }
    tracking_run(inst, delta, sched, source, max_pulls, &weights)
}

pub fn run_uniform(
    inst: &Instance,
    delta: f64,
    sched: &ConfidenceSchedule,
    source: &dyn SampleSource,
    max_pulls: u64,
) -> Result<RunOutcome> {
    let weights = vec![1.0 / inst.n() as f64; inst.n()];
    tracking_run(inst, delta, sched, source, max_pulls, &weights)
}

/// The LUCB++ sample-complexity expression with unit constant:
///
/// `Σ_{i ≤ k} Δ_i⁻² log((n−k)·log(Δ_i⁻²)/δ) + Σ_{j > k} Δ_j⁻² log(k·log(Δ_j⁻²)/δ)`
///
/// where the argument of the inner log is clamped below at `e`.
pub fn lucbpp_complexity_bound(inst: &Instance, delta: f64) -> Result<f64> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::invalid(format!("delta must lie in (0, 1), got {delta}")));
    }
    let profile = gap_profile(inst, GapKind::TopK)?;
    let (n, k) = (inst.n() as f64, inst.k() as f64);
    let top = inst.top_k();
    let total = profile
        .gaps
        .iter()
        .enumerate()
        .map(|(a, &gap)| {
            let inv2 = gap.powi(-2);
            let inner = inv2.max(std::f64::consts::E).ln();
            let other_side = if top.binary_search(&a).is_ok() { n - k } else { k };
            inv2 * (other_side * inner / delta).ln()
        })
        .sum();
    Ok(total)
}
