//! Closed-form sample-complexity lower bounds.
//!
//! Every expression is evaluated with its universal constant set to 1, so
//! comparisons against empirical pull counts are one-sided: an empirical
//! value falling below a raw expression is a red flag, staying above it is
//! necessary but not sufficient. Suprema over `η` and `κ` are taken on a
//! dense grid.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::algorithms::lucbpp_complexity_bound;
use crate::error::{Error, Result};
use crate::model::{gap_profile, kl_divergence, ExpFamily, GapKind, Instance};

/// Grid step for the suprema over `η` and `κ`.
pub const GRID_STEP: f64 = 1e-4;

/// Maximize `f` over `lo, lo + step, …, hi` (the endpoint `hi` included).
/// Returns `(argmax, max)`.
pub fn grid_sup(f: impl Fn(f64) -> f64, lo: f64, hi: f64, step: f64) -> (f64, f64) {
    let steps = ((hi - lo) / step).floor() as u64;
    let mut best = (lo, f(lo));
    for i in 1..=steps {
        let x = lo + i as f64 * step;
        let v = f(x);
        if v > best.1 {
            best = (x, v);
        }
    }
    let v = f(hi);
    if v > best.1 {
        best = (hi, v);
    }
    best
}

fn check_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta < 1.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("delta must lie in (0, 1), got {delta}")))
    }
}

/// Expected-pull scale `1/(KL(ν_{a*}, ν_b) + KL(ν_b, ν_{a*}))` for each
/// suboptimal arm `b`; `None` at the best arm.
fn swap_scales(inst: &Instance) -> Result<Vec<Option<f64>>> {
    let best = inst.best_arm()?;
    let top = inst.arm(best);
    (0..inst.n())
        .map(|b| {
            if b == best {
                return Ok(None);
            }
            let sum = kl_divergence(top, inst.arm(b))? + kl_divergence(inst.arm(b), top)?;
            Ok(Some(1.0 / sum))
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TailBound {
    /// `τ_b`, the inverse symmetric KL.
    pub scale: f64,
    /// `τ_b · log(1/(4η))`.
    pub threshold: f64,
    /// `max(η − δ, 0)`.
    pub probability: f64,
}

/// Tail form of the permutation bound for arm `b`: averaged over relabelings,
/// `N_b(T)` exceeds `threshold` with probability at least `probability`.
pub fn permutation_tail_bound(inst: &Instance, b: usize, eta: f64, delta: f64) -> Result<TailBound> {
    check_delta(delta)?;
    if !(eta > delta && eta <= 0.25) {
        return Err(Error::invalid(format!("eta must lie in (delta, 1/4], got {eta}")));
    }
    if b >= inst.n() {
        return Err(Error::invalid(format!("arm {b} out of range")));
    }
    let scale = swap_scales(inst)?[b]
        .ok_or_else(|| Error::invalid(format!("arm {b} is the best arm")))?;
    Ok(TailBound {
        scale,
        threshold: (scale * (1.0 / (4.0 * eta)).ln()).max(0.0),
        probability: (eta - delta).max(0.0),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PermutationTotal {
    pub value: f64,
    /// `Σ_{b ≠ a*} τ_b`.
    pub scale_sum: f64,
    /// `sup_η (η − δ) log(1/(4η))` and its maximizer.
    pub sup_factor: f64,
    pub eta_star: f64,
    /// Set when `δ ≥ 1/4`: the η-range is empty and the bound is 0.
    pub vacuous: bool,
}

/// `sup_{η ∈ [δ, 1/4]} (η − δ) log(1/(4η)) · Σ_{b ≠ a*} τ_b`.
pub fn permutation_total_bound(inst: &Instance, delta: f64) -> Result<PermutationTotal> {
    check_delta(delta)?;
    let scale_sum: f64 = swap_scales(inst)?.into_iter().flatten().sum();
    if delta >= 0.25 {
        return Ok(PermutationTotal {
            value: 0.0,
            scale_sum,
            sup_factor: 0.0,
            eta_star: 0.25,
            vacuous: true,
        });
    }
    let (eta_star, sup_factor) = grid_sup(
        |eta| (eta - delta) * (1.0 / (4.0 * eta)).ln(),
        delta,
        0.25,
        GRID_STEP,
    );
    Ok(PermutationTotal {
        value: sup_factor * scale_sum,
        scale_sum,
        sup_factor,
        eta_star,
        vacuous: false,
    })
}

fn require_unit_gaussian(inst: &Instance, what: &str) -> Result<()> {
    if inst.unit_gaussian() {
        Ok(())
    } else {
        Err(Error::Unsupported(format!("{what} needs unit-variance Gaussian arms")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CombinedBound {
    pub value: f64,
    /// `max_{b ≠ a*} Δ_b⁻² log(1/δ)`
    pub verification: f64,
    /// `Σ_{b ≠ a*} Δ_b⁻²`
    pub exploration: f64,
}

pub fn combined_bound(inst: &Instance, delta: f64) -> Result<CombinedBound> {
    check_delta(delta)?;
    require_unit_gaussian(inst, "combined_bound")?;
    let best = inst.best_arm()?;
    let gaps = gap_profile(inst, GapKind::BestArm)?.gaps;
    let inv: Vec<f64> = gaps
        .iter()
        .enumerate()
        .filter(|&(b, _)| b != best)
        .map(|(_, g)| g.powi(-2))
        .collect();
    let verification = inv.iter().cloned().fold(0.0, f64::max) * (1.0 / delta).ln();
    let exploration = inv.iter().sum();
    Ok(CombinedBound {
        value: f64::max(verification, exploration),
        verification,
        exploration,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PerArmBound {
    pub value: f64,
    /// 1-based rank at which the maximum is attained.
    pub argmax_rank: usize,
    /// False when `δ > 1/16`, outside the regime the bound is stated for.
    pub in_regime: bool,
}

/// `max_{2 ≤ m ≤ n} Δ_m⁻² log(m/δ)` with `Δ_m = μ_(1) − μ_(m)`: the number
/// of pulls the best arm needs.
pub fn gaussian_mab_per_arm_bound(inst: &Instance, delta: f64) -> Result<PerArmBound> {
    check_delta(delta)?;
    require_unit_gaussian(inst, "gaussian_mab_per_arm_bound")?;
    inst.best_arm()?;
    let sorted = gap_profile(inst, GapKind::BestArm)?.sorted_means;
    let mut best = PerArmBound {
        value: f64::NEG_INFINITY,
        argmax_rank: 2,
        in_regime: delta <= 1.0 / 16.0,
    };
    for (i, &mu) in sorted.iter().enumerate().skip(1) {
        let m = (i + 1) as f64;
        let v = (sorted[0] - mu).powi(-2) * (m / delta).ln();
        if v > best.value {
            best.value = v;
            best.argmax_rank = i + 1;
        }
    }
    Ok(best)
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct BoundParams {
    pub delta: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
}

/// Per-arm lower bounds and their aggregate. Tail-form bounds fill
/// `thresholds` with `(pull threshold, probability)` pairs.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LowerBoundReport {
    pub per_arm: BTreeMap<usize, f64>,
    pub total: f64,
    pub thresholds: BTreeMap<usize, (f64, f64)>,
    pub params: BoundParams,
}

/// Per-arm top-k bounds: for an arm `j` in the top-k,
/// `max_{m > k} (μ_j − μ_(m))⁻² log((m − k + 1)/δ)`; for an arm outside,
/// `max_{m ≤ k} (μ_(m) − μ_j)⁻² log((k + 2 − m)/δ)`.
pub fn topk_per_arm_bounds(inst: &Instance, delta: f64) -> Result<LowerBoundReport> {
    check_delta(delta)?;
    require_unit_gaussian(inst, "topk_per_arm_bounds")?;
    let sorted = gap_profile(inst, GapKind::TopK)?.sorted_means;
    let k = inst.k();
    let means = inst.means();
    let mut per_arm = BTreeMap::new();
    for (rank, &j) in inst.ranking().iter().enumerate() {
        let mu = means[j];
        let v = if rank < k {
            (k..sorted.len())
                .map(|m| (mu - sorted[m]).powi(-2) * (((m + 1 - k + 1) as f64) / delta).ln())
                .fold(f64::NEG_INFINITY, f64::max)
        } else {
            (0..k)
                .map(|m| (sorted[m] - mu).powi(-2) * (((k + 2 - (m + 1)) as f64) / delta).ln())
                .fold(f64::NEG_INFINITY, f64::max)
        };
        per_arm.insert(j, v);
    }
    Ok(LowerBoundReport {
        total: per_arm.values().sum(),
        per_arm,
        thresholds: BTreeMap::new(),
        params: BoundParams {
            delta,
            ..Default::default()
        },
    })
}

/// Permutation bounds in report form: `per_arm` holds `τ_b`, `thresholds`
/// the tail pairs at `eta`, `total` the supremum over `η`.
pub fn permutation_report(inst: &Instance, eta: f64, delta: f64) -> Result<LowerBoundReport> {
    let best = inst.best_arm()?;
    let total = permutation_total_bound(inst, delta)?;
    let mut per_arm = BTreeMap::new();
    let mut thresholds = BTreeMap::new();
    for b in (0..inst.n()).filter(|&b| b != best) {
        let tail = permutation_tail_bound(inst, b, eta, delta)?;
        per_arm.insert(b, tail.scale);
        thresholds.insert(b, (tail.threshold, tail.probability));
    }
    Ok(LowerBoundReport {
        per_arm,
        total: total.value,
        thresholds,
        params: BoundParams {
            delta,
            eta: Some(eta),
            ..Default::default()
        },
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SubsetBound {
    /// `max(0, Δ⁻²(β log(n/m) − log 2))`
    pub threshold: f64,
    /// `max(0, 1 − 2β − δ)`
    pub probability: f64,
    /// `max(0, Δ⁻²(β log n − log 2))`, for the best arm alone.
    pub top_threshold: f64,
    /// `max(0, 1 − β − δ)`
    pub top_probability: f64,
}

/// Subset form of the Fano bound. `kl_sum` is `Δ² = KL(ν₁,ν₂) + KL(ν₂,ν₁)`.
/// With probability at least `probability`, at least `m` arms (the best one
/// included) are each pulled more than `threshold` times.
pub fn best_arm_subset_bound(n: usize, kl_sum: f64, m: usize, beta: f64, delta: f64) -> Result<SubsetBound> {
    if m == 0 || m >= n {
        return Err(Error::invalid(format!("subset size must satisfy 1 <= m < n, got m={m}, n={n}")));
    }
    if !(kl_sum > 0.0 && kl_sum.is_finite()) {
        return Err(Error::invalid(format!("KL sum must be positive, got {kl_sum}")));
    }
    if !(beta > 0.0) {
        return Err(Error::invalid(format!("beta must be positive, got {beta}")));
    }
    if !(0.0..1.0).contains(&delta) {
        return Err(Error::invalid(format!("delta must lie in [0, 1), got {delta}")));
    }
    let ln2 = std::f64::consts::LN_2;
    let (nf, mf) = (n as f64, m as f64);
    Ok(SubsetBound {
        threshold: ((beta * (nf / mf).ln() - ln2) / kl_sum).max(0.0),
        probability: (1.0 - 2.0 * beta - delta).max(0.0),
        top_threshold: ((beta * nf.ln() - ln2) / kl_sum).max(0.0),
        top_probability: (1.0 - beta - delta).max(0.0),
    })
}

/// `clamp(1 − (τΔ² + log 2)/log(n/m), 0, 1)`.
pub fn fano_rhs(n: usize, m: usize, tau: f64, kl_sum: f64) -> Result<f64> {
    if m == 0 || m >= n {
        return Err(Error::invalid(format!("fano_rhs needs 1 <= m < n, got m={m}, n={n}")));
    }
    if !(tau >= 0.0 && kl_sum >= 0.0) {
        return Err(Error::invalid("fano_rhs needs tau >= 0 and kl_sum >= 0"));
    }
    let v = 1.0 - (tau * kl_sum + std::f64::consts::LN_2) / (n as f64 / m as f64).ln();
    Ok(v.clamp(0.0, 1.0))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BigMainBound {
    /// Effective squared gap `kl(θ₁,θ_j) + kl(2θ₁ − θ_j, θ_j)`, maximized
    /// over `j` (or the order statistic selected by `m`).
    pub delta_eff2: f64,
    /// `max_j (θ₁ − θ_j)²`, reported next to `delta_eff2` for comparison.
    pub max_squared_gap: f64,
    pub threshold: f64,
    pub probability: f64,
    pub kappa_star: f64,
}

/// Exponential-family tilting bound. `thetas` are the arms' natural
/// parameters; the largest must be unique. With `m = Some(m)`, the effective
/// gap is the `(m − 1)`-th smallest per-arm value and the log factor becomes
/// `log(m/α)`; otherwise the maximum over arms and `log(n/α)`.
pub fn big_main_bound(
    thetas: &[f64],
    family: ExpFamily,
    alpha: f64,
    delta: f64,
    m: Option<usize>,
) -> Result<BigMainBound> {
    let n = thetas.len();
    if n < 2 {
        return Err(Error::invalid("need at least two arms"));
    }
    if !(alpha > 0.0) {
        return Err(Error::invalid(format!("alpha must be positive, got {alpha}")));
    }
    if !(0.0..1.0).contains(&delta) {
        return Err(Error::invalid(format!("delta must lie in [0, 1), got {delta}")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| thetas[b].total_cmp(&thetas[a]));
    let theta1 = thetas[order[0]];
    if thetas[order[1]] >= theta1 {
        return Err(Error::DegenerateInstance("the largest natural parameter is not unique".into()));
    }
    let mut values = Vec::with_capacity(n - 1);
    let mut max_squared_gap: f64 = 0.0;
    for &j in &order[1..] {
        let tj = thetas[j];
        let mirrored = 2.0 * theta1 - tj;
        if !(family.contains(tj) && family.contains(mirrored)) {
            return Err(Error::Domain(format!(
                "[θ_j, 2θ₁ − θ_j] = [{tj}, {mirrored}] is not inside the parameter space"
            )));
        }
        values.push(family.kl(theta1, tj) + family.kl(mirrored, tj));
        max_squared_gap = max_squared_gap.max((theta1 - tj).powi(2));
    }
    values.sort_by(f64::total_cmp);
    let (delta_eff2, count) = match m {
        None => (*values.last().expect("n >= 2"), n),
        Some(m) => {
            if m < 2 || m > n {
                return Err(Error::invalid(format!("m must satisfy 2 <= m <= n, got {m}")));
            }
            (values[m - 2], m)
        }
    };
    let (kappa_star, sup) = grid_sup(
        |kappa| 0.5 * (1.0 - (-alpha * kappa * (1.0 - kappa)).exp()) * (1.0 - 2.0 * kappa),
        0.0,
        1.0,
        GRID_STEP,
    );
    Ok(BigMainBound {
        delta_eff2,
        max_squared_gap,
        threshold: ((count as f64 / alpha).ln() / delta_eff2).max(0.0),
        probability: (sup - delta).max(0.0),
        kappa_star,
    })
}

/// `Q(β) = min{1 − e^{−β}/2, √(β/2)}`.
pub fn q_of_beta(beta: f64) -> Result<f64> {
    if !(beta >= 0.0) {
        return Err(Error::invalid(format!("beta must be non-negative, got {beta}")));
    }
    Ok(f64::min(1.0 - 0.5 * (-beta).exp(), (beta / 2.0).sqrt()))
}

/// Parameters for [`bounds_report`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReportOptions {
    pub delta: f64,
    pub eta: f64,
    pub alpha: f64,
    pub beta: f64,
    pub m: usize,
}

impl ReportOptions {
    pub fn new(delta: f64) -> Self {
        ReportOptions {
            delta,
            eta: 0.125,
            alpha: 10.0,
            beta: 1.0 / 16.0,
            m: 2,
        }
    }
}

/// Every bound evaluated on one instance. Bounds that do not apply to the
/// instance (wrong family, ties at the top) are omitted rather than failing
/// the whole report.
#[derive(Clone, Debug, Serialize)]
pub struct BoundsReport {
    pub n: usize,
    pub k: usize,
    pub means: Vec<f64>,
    pub params: BoundParams,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub permutation: Option<LowerBoundReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub permutation_total: Option<PermutationTotal>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub combined: Option<CombinedBound>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gaussian_mab_per_arm: Option<PerArmBound>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub topk_per_arm: Option<LowerBoundReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lucbpp_complexity: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub best_arm_subset: Option<SubsetBound>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fano_rhs_at_threshold: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub big_main: Option<BigMainBound>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub big_main_m: Option<BigMainBound>,
    pub notes: Vec<String>,
}

pub fn bounds_report(inst: &Instance, opts: &ReportOptions) -> Result<BoundsReport> {
    check_delta(opts.delta)?;
    let mut notes = Vec::new();
    fn keep_in<T>(notes: &mut Vec<String>, label: &str, r: Result<T>) -> Option<T> {
        r.map_err(|e| notes.push(format!("{label}: {e}"))).ok()
    }
    macro_rules! keep {
        ($label:expr, $r:expr $(,)?) => {
            keep_in(&mut notes, $label, $r)
        };
    }
    let permutation = keep!("permutation", permutation_report(inst, opts.eta, opts.delta));
    let permutation_total = keep!("permutation_total", permutation_total_bound(inst, opts.delta));
    let combined = keep!("combined", combined_bound(inst, opts.delta));
    let gaussian_mab_per_arm = keep!(
        "gaussian_mab_per_arm",
        gaussian_mab_per_arm_bound(inst, opts.delta),
    );
    let topk_per_arm = keep!("topk_per_arm", topk_per_arm_bounds(inst, opts.delta));
    let lucbpp_complexity = keep!("lucbpp_complexity", lucbpp_complexity_bound(inst, opts.delta));

    let kl_sum = inst.best_arm().and_then(|best| {
        let second = inst.ranking()[1];
        Ok(kl_divergence(inst.arm(best), inst.arm(second))?
            + kl_divergence(inst.arm(second), inst.arm(best))?)
    });
    let subset = kl_sum
        .and_then(|s| best_arm_subset_bound(inst.n(), s, opts.m.min(inst.n() - 1), opts.beta, opts.delta).map(|b| (s, b)));
    let (best_arm_subset, fano_rhs_at_threshold) = match keep!("best_arm_subset", subset) {
        Some((s, b)) => (
            Some(b),
            keep!("fano_rhs", fano_rhs(inst.n(), opts.m.min(inst.n() - 1), b.threshold, s)),
        ),
        None => (None, None),
    };

    let thetas = inst.means();
    let family = ExpFamily::GaussianUnitVariance;
    let tilting = |m: Option<usize>| {
        require_unit_gaussian(inst, "big_main_bound")?;
        big_main_bound(&thetas, family, opts.alpha, opts.delta, m)
    };
    let big_main = keep!("big_main", tilting(None));
    let big_main_m = keep!("big_main_m", tilting(Some(opts.m.clamp(2, inst.n()))));
    if let Some(b) = &big_main {
        notes.push(format!(
            "effective squared gap {:.6} vs largest squared mean gap {:.6} (ratio {:.3})",
            b.delta_eff2,
            b.max_squared_gap,
            b.delta_eff2 / b.max_squared_gap
        ));
    }
    Ok(BoundsReport {
        n: inst.n(),
        k: inst.k(),
        means: inst.means(),
        params: BoundParams {
            delta: opts.delta,
            eta: Some(opts.eta),
            alpha: Some(opts.alpha),
            beta: Some(opts.beta),
            m: Some(opts.m),
        },
        permutation,
        permutation_total,
        combined,
        gaussian_mab_per_arm,
        topk_per_arm,
        lucbpp_complexity,
        best_arm_subset,
        fano_rhs_at_threshold,
        big_main,
        big_main_m,
        notes,
    })
}
