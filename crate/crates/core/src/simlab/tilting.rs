//! Censored tilting of a sample mean.
//!
//! `X̄_j` is the mean of `τ` draws at natural parameter `θ_j`. Accepting it
//! with probability `K(X̄_j) = e^{τ d X̄_j}/c · 1{e^{τ d X̄_j} ≤ c}`, where
//! `d = θ₁ − θ_j`, makes the accepted law equal to the law of `X̄₁`
//! conditioned on the cap. For Gaussian arms the sample mean is drawn
//! directly from `N(θ_j, 1/τ)`.

use rand::RngCore;
use rayon::prelude::*;
use serde::Serialize;
use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::model::ExpFamily;
use crate::rng::{self, Purpose, RngStream};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TiltingKernel {
    pub theta1: f64,
    pub thetaj: f64,
    pub tau: u64,
    pub kappa: f64,
    pub family: ExpFamily,
    /// `ln c`; `c` itself overflows for large `τ`.
    pub log_c: f64,
}

impl TiltingKernel {
    pub fn new(theta1: f64, thetaj: f64, tau: u64, kappa: f64, family: ExpFamily) -> Result<Self> {
        if !(kappa > 0.0 && kappa < 1.0) {
            return Err(Error::invalid(format!("kappa must lie in (0, 1), got {kappa}")));
        }
        if !(theta1 >= thetaj) {
            return Err(Error::invalid(format!("need theta1 >= thetaj, got {theta1} < {thetaj}")));
        }
        let mirrored = 2.0 * theta1 - thetaj;
        if !(family.contains(thetaj) && family.contains(mirrored)) {
            return Err(Error::Domain(format!(
                "[θ_j, 2θ₁ − θ_j] = [{thetaj}, {mirrored}] is not inside the parameter space"
            )));
        }
        let log_c = -kappa.ln()
            + tau as f64 * (family.log_partition(mirrored) - family.log_partition(theta1));
        Ok(TiltingKernel {
            theta1,
            thetaj,
            tau,
            kappa,
            family,
            log_c,
        })
    }

    pub fn c(&self) -> f64 {
        self.log_c.exp()
    }

    fn exponent(&self, x: f64) -> f64 {
        let d = self.theta1 - self.thetaj;
        if d == 0.0 || self.tau == 0 {
            0.0
        } else {
            self.tau as f64 * d * x
        }
    }

    /// `ln K(x)`, `-inf` where the kernel censors.
    pub fn log_weight(&self, x: f64) -> f64 {
        let e = self.exponent(x);
        if e > self.log_c {
            f64::NEG_INFINITY
        } else {
            e - self.log_c
        }
    }

    /// `K(x) ∈ [0, 1]`.
    pub fn weight(&self, x: f64) -> f64 {
        self.log_weight(x).exp()
    }

    /// Whether the kernel is constant (`θ_j = θ₁` or `τ = 0`).
    pub fn degenerate(&self) -> bool {
        self.theta1 == self.thetaj || self.tau == 0
    }

    /// The cap `x_c` with `K(x) > 0` iff `x ≤ x_c`.
    fn cap(&self) -> f64 {
        self.log_c / (self.tau as f64 * (self.theta1 - self.thetaj))
    }

    fn require_gaussian(&self, what: &str) -> Result<()> {
        match self.family {
            ExpFamily::GaussianUnitVariance => Ok(()),
            ExpFamily::Bernoulli => Err(Error::Unsupported(format!(
                "{what} has no closed form for Bernoulli arms"
            ))),
        }
    }

    /// `Q = Pr(e^{τ d X̄₁} > c)` with `X̄₁ ~ N(θ₁, 1/τ)`.
    fn censored_mass(&self) -> f64 {
        if self.degenerate() {
            return if self.log_c < 0.0 { 1.0 } else { 0.0 };
        }
        let z = (self.cap() - self.theta1) * (self.tau as f64).sqrt();
        upper_tail(z)
    }

    /// `P(E) = (1 − Q)·e^{τ(A(θ₁) − A(θ_j))}/c`.
    pub fn analytic_event_probability(&self) -> Result<f64> {
        self.require_gaussian("analytic_event_probability")?;
        if self.degenerate() {
            return Ok(self.kappa);
        }
        let a = self.family;
        let log_tilt = self.tau as f64 * (a.log_partition(self.theta1) - a.log_partition(self.thetaj));
        Ok((1.0 - self.censored_mass()) * (log_tilt - self.log_c).exp())
    }

    /// `TV(law of X̄₁, law of X̄_j given E) = Q`.
    pub fn analytic_tv(&self) -> Result<f64> {
        self.require_gaussian("analytic_tv")?;
        Ok(self.censored_mass())
    }

    /// `kl(θ₁, θ_j) + kl(2θ₁ − θ_j, θ_j)`.
    pub fn kl_sum(&self) -> f64 {
        let a = self.family;
        a.kl(self.theta1, self.thetaj) + a.kl(2.0 * self.theta1 - self.thetaj, self.thetaj)
    }

    /// `κ(1 − κ) e^{−τ·kl_sum}`.
    pub fn event_lower_bound(&self) -> f64 {
        self.kappa * (1.0 - self.kappa) * (-(self.tau as f64) * self.kl_sum()).exp()
    }
}

/// `Pr(Z > z)` for standard normal `Z`.
fn upper_tail(z: f64) -> f64 {
    0.5 * erfc(z / std::f64::consts::SQRT_2)
}

/// Draw `X̄_j` and a uniform `ξ`; the event is `ξ < K(X̄_j)`.
pub fn sample_measuring_event<R: RngCore + ?Sized>(kernel: &TiltingKernel, rng: &mut R) -> (f64, bool) {
    let x_bar = sample_mean(kernel.family, kernel.thetaj, kernel.tau, rng);
    let xi = rng::uniform(rng);
    (x_bar, xi < kernel.weight(x_bar))
}

/// Mean of `τ` draws at natural parameter `θ`; `A'(θ)` when `τ = 0`.
fn sample_mean<R: RngCore + ?Sized>(family: ExpFamily, theta: f64, tau: u64, rng: &mut R) -> f64 {
    if tau == 0 {
        return family.mean(theta);
    }
    match family {
        ExpFamily::GaussianUnitVariance => theta + rng::standard_normal(rng) / (tau as f64).sqrt(),
        ExpFamily::Bernoulli => {
            let p = family.mean(theta);
            let heads = (0..tau).filter(|_| rng::uniform(rng) < p).count();
            heads as f64 / tau as f64
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TiltingReport {
    pub theta1: f64,
    pub thetaj: f64,
    pub tau: u64,
    pub kappa: f64,
    pub family: ExpFamily,
    pub log_c: f64,
    pub kl_sum: f64,
    pub mc_samples: u64,
    pub p_event_analytic: Option<f64>,
    pub p_event_mc: f64,
    pub p_event_mc_stderr: f64,
    pub p_event_lower_bound: f64,
    pub tv_analytic: Option<f64>,
    pub tv_mc: Option<f64>,
    pub tv_mc_stderr: Option<f64>,
    pub tv_binning_error: Option<f64>,
    /// `P(E) ≥ κ(1 − κ)e^{−τ·kl_sum}`; judged on the MC estimate plus three
    /// standard errors when no closed form exists.
    pub event_bound_holds: bool,
    pub tv_bound_holds: Option<bool>,
    pub event_mc_agrees: Option<bool>,
    pub tv_mc_agrees: Option<bool>,
}

impl TiltingReport {
    pub fn passed(&self) -> bool {
        self.event_bound_holds
            && [self.tv_bound_holds, self.event_mc_agrees, self.tv_mc_agrees]
                .iter()
                .all(|f| f.unwrap_or(true))
    }
}

const CHUNK: u64 = 1 << 16;
const BIN_WIDTH: f64 = 0.02;
const HALF_RANGE: f64 = 8.0;

fn chunks(samples: u64) -> Vec<(u64, u64)> {
    (0..samples.div_ceil(CHUNK))
        .map(|i| (i, CHUNK.min(samples - i * CHUNK)))
        .collect()
}

/// Monte Carlo event rate over `samples` draws, in parallel chunks.
fn mc_event_rate(kernel: &TiltingKernel, samples: u64, seed: u64) -> f64 {
    let hits: u64 = chunks(samples)
        .into_par_iter()
        .map(|(i, len)| {
            let mut rng = RngStream::new(seed, Purpose::MEASURING, i, 0).sequential();
            (0..len)
                .filter(|_| sample_measuring_event(kernel, &mut rng).1)
                .count() as u64
        })
        .collect::<Vec<_>>()
        .into_iter()
        .sum();
    hits as f64 / samples as f64
}

/// Histogram over `θ₁ ± 8/√τ` in bins of `0.02/√τ`, plus one overflow bin on
/// each side.
struct Bins {
    lo: f64,
    width: f64,
    count: usize,
}

impl Bins {
    fn new(center: f64, tau: u64) -> Self {
        let scale = 1.0 / (tau as f64).sqrt();
        let count = (2.0 * HALF_RANGE / BIN_WIDTH).round() as usize + 2;
        Bins {
            lo: center - HALF_RANGE * scale,
            width: BIN_WIDTH * scale,
            count,
        }
    }

    fn index(&self, x: f64) -> usize {
        let i = ((x - self.lo) / self.width).floor();
        if i < 0.0 {
            0
        } else {
            ((i as usize) + 1).min(self.count - 1)
        }
    }
}

/// Two-sample binned TV between `X̄₁` and `X̄_j | E`. The conditional law is
/// reached by importance sampling from `N(θ₁, 1/τ)` with self-normalized
/// weights `p_j(x)K(x)/g(x)`. Returns `(tv, stderr, binning error)`.
fn mc_tv(kernel: &TiltingKernel, samples: u64, seed: u64) -> (f64, f64, f64) {
    let tau = kernel.tau as f64;
    let (t1, tj) = (kernel.theta1, kernel.thetaj);
    let a = kernel.family;
    let bins = Bins::new(t1, kernel.tau);
    let sd = 1.0 / tau.sqrt();
    // log p_j(x) − log g(x) for X̄ ~ N(θ, 1/τ)
    let log_ratio = |x: f64| tau * ((tj - t1) * x - (a.log_partition(tj) - a.log_partition(t1)));

    struct Acc {
        plain: Vec<f64>,
        w: Vec<f64>,
        w2: Vec<f64>,
        w_total: f64,
        w2_total: f64,
    }
    // Weights are constant on the accepted region; dividing that constant
    // out keeps them O(1) and leaves the normalized weights unchanged.
    let shift = tau * (a.log_partition(t1) - a.log_partition(tj)) - kernel.log_c;
    let chunk_acc = |(i, len): (u64, u64)| {
        let mut acc = Acc {
            plain: vec![0.0; bins.count],
            w: vec![0.0; bins.count],
            w2: vec![0.0; bins.count],
            w_total: 0.0,
            w2_total: 0.0,
        };
        let mut first = RngStream::new(seed, Purpose::MONTE_CARLO, i, 0).sequential();
        let mut second = RngStream::new(seed, Purpose::MONTE_CARLO, i, 1).sequential();
        for _ in 0..len {
            let x1 = t1 + sd * rng::standard_normal(&mut first);
            acc.plain[bins.index(x1)] += 1.0;
            let y = t1 + sd * rng::standard_normal(&mut second);
            let w = (log_ratio(y) + kernel.log_weight(y) - shift).exp();
            let b = bins.index(y);
            acc.w[b] += w;
            acc.w2[b] += w * w;
            acc.w_total += w;
            acc.w2_total += w * w;
        }
        acc
    };
    let parts: Vec<Acc> = chunks(samples).into_par_iter().map(chunk_acc).collect();
    let mut total = Acc {
        plain: vec![0.0; bins.count],
        w: vec![0.0; bins.count],
        w2: vec![0.0; bins.count],
        w_total: 0.0,
        w2_total: 0.0,
    };
    for p in parts {
        for b in 0..bins.count {
            total.plain[b] += p.plain[b];
            total.w[b] += p.w[b];
            total.w2[b] += p.w2[b];
        }
        total.w_total += p.w_total;
        total.w2_total += p.w2_total;
    }
    let n = samples as f64;
    let mut tv = 0.0;
    let mut spread = 0.0;
    for b in 0..bins.count {
        let pa = total.plain[b] / n;
        let pb = total.w[b] / total.w_total;
        let var_a = pa * (1.0 - pa) / n;
        let var_b = (total.w2[b] * (1.0 - 2.0 * pb) + pb * pb * total.w2_total) / total.w_total.powi(2);
        tv += (pa - pb).abs();
        spread += (var_a + var_b.max(0.0)).sqrt();
    }
    // The bin straddling the cap mixes censored and kept mass: its
    // contribution can be off by at most the mass X̄₁ puts on it.
    let cap = kernel.cap();
    let b = bins.index(cap);
    let edge_lo = bins.lo + (b as f64 - 1.0) * bins.width;
    let z = |x: f64| (x - t1) / sd;
    let straddle = if b == 0 || b == bins.count - 1 {
        0.0
    } else {
        upper_tail(z(edge_lo)) - upper_tail(z(edge_lo + bins.width))
    };
    let q = kernel.censored_mass();
    let binning = straddle * (1.0 + 1.0 / (1.0 - q).max(f64::MIN_POSITIVE));
    (0.5 * tv, 0.5 * spread, binning)
}

/// Check both inequalities of the balance lemma at one parameter point,
/// analytically where a closed form exists and by Monte Carlo.
pub fn verify_balance(
    theta1: f64,
    thetaj: f64,
    tau: u64,
    kappa: f64,
    family: ExpFamily,
    mc_samples: u64,
    seed: u64,
) -> Result<TiltingReport> {
    if mc_samples == 0 {
        return Err(Error::invalid("mc_samples must be positive"));
    }
    let kernel = TiltingKernel::new(theta1, thetaj, tau, kappa, family)?;
    let lower = kernel.event_lower_bound();
    let p_event_mc = mc_event_rate(&kernel, mc_samples, seed);
    let analytic = kernel.analytic_event_probability().ok();
    let p_ref = analytic.unwrap_or(p_event_mc);
    let stderr = (p_ref * (1.0 - p_ref) / mc_samples as f64).sqrt();
    let tv_analytic = kernel.analytic_tv().ok();
    let tv = match (tv_analytic, kernel.degenerate()) {
        (Some(_), false) => Some(mc_tv(&kernel, mc_samples, seed)),
        _ => None,
    };
    let event_bound_holds = match analytic {
        Some(p) => p >= lower,
        None => p_event_mc + 3.0 * stderr >= lower,
    };
    Ok(TiltingReport {
        theta1,
        thetaj,
        tau,
        kappa,
        family,
        log_c: kernel.log_c,
        kl_sum: kernel.kl_sum(),
        mc_samples,
        p_event_analytic: analytic,
        p_event_mc,
        p_event_mc_stderr: stderr,
        p_event_lower_bound: lower,
        tv_analytic,
        tv_mc: tv.map(|t| t.0),
        tv_mc_stderr: tv.map(|t| t.1),
        tv_binning_error: tv.map(|t| t.2),
        event_bound_holds,
        tv_bound_holds: tv_analytic.map(|t| t <= kappa),
        event_mc_agrees: analytic.map(|p| (p_event_mc - p).abs() <= 3.0 * stderr),
        tv_mc_agrees: match (tv_analytic, tv) {
            (Some(exact), Some((est, se, bin))) => Some((est - exact).abs() <= bin + 3.0 * se),
            _ => None,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const G: ExpFamily = ExpFamily::GaussianUnitVariance;

    #[test]
    fn c_example() {
        let k = TiltingKernel::new(0.5, 0.0, 10, 0.1, G).unwrap();
        let expected = 10.0 * 3.75f64.exp();
        assert!((k.c() - expected).abs() < 1e-9);
        assert!((k.c() - 425.21).abs() < 0.01);
        let p = k.analytic_event_probability().unwrap();
        assert!(p > 0.0 && p < 1.0);
        assert!(p >= k.event_lower_bound());
        assert!(k.analytic_tv().unwrap() <= 0.1);
    }

    #[test]
    fn gaussian_event_probability_closed_form() {
        // P(E) = κ(1 − Q)e^{−τd²} for unit Gaussians.
        let k = TiltingKernel::new(1.0, 0.25, 8, 0.1, G).unwrap();
        let q = k.analytic_tv().unwrap();
        let expected = 0.1 * (1.0 - q) * (-8.0 * 0.75f64 * 0.75).exp();
        assert!((k.analytic_event_probability().unwrap() - expected).abs() < 1e-15);
    }

    #[test]
    fn degenerate_kernel_is_constant() {
        for k in [
            TiltingKernel::new(0.3, 0.3, 10, 0.2, G).unwrap(),
            TiltingKernel::new(0.5, 0.0, 0, 0.2, G).unwrap(),
        ] {
            assert!(k.degenerate());
            for x in [-3.0, 0.0, 0.4, 7.0] {
                assert!((k.weight(x) - 0.2).abs() < 1e-15);
            }
            assert_eq!(k.analytic_event_probability().unwrap(), 0.2);
            assert_eq!(k.analytic_tv().unwrap(), 0.0);
        }
    }

    #[test]
    fn weights_lie_in_unit_interval() {
        let k = TiltingKernel::new(0.5, 0.0, 10, 0.1, G).unwrap();
        let mut rng = RngStream::new(1, Purpose::MONTE_CARLO, 0, 0).sequential();
        for _ in 0..100_000 {
            let x = 40.0 * (rng::uniform(&mut rng) - 0.5);
            let w = k.weight(x);
            assert!((0.0..=1.0).contains(&w));
        }
    }

    #[test]
    fn constant_kernel_event_rate() {
        let k = TiltingKernel::new(0.3, 0.3, 4, 0.25, G).unwrap();
        let p = mc_event_rate(&k, 100_000, 2);
        assert!((p - 0.25).abs() < 3.0 * (0.25 * 0.75 / 1e5f64).sqrt());
    }

    #[test]
    fn accepted_means_shift_upwards() {
        let k = TiltingKernel::new(0.5, 0.0, 10, 0.1, G).unwrap();
        let mut rng = RngStream::new(4, Purpose::MEASURING, 0, 0).sequential();
        let (mut sum, mut count) = (0.0, 0u64);
        while count < 100_000 {
            let (x, hit) = sample_measuring_event(&k, &mut rng);
            if hit {
                sum += x;
                count += 1;
            }
        }
        let mean = sum / count as f64;
        // Accepted law ≈ N(θ₁, 1/τ) truncated at a cap far above θ₁.
        assert!(mean > 0.4, "mean {mean}");
    }

    #[test]
    fn balance_example() {
        let tau = (100f64.ln() / (2.5 * 0.25)).ceil() as u64;
        assert_eq!(tau, 8);
        let k = TiltingKernel::new(0.5, 0.0, tau, 0.1, G).unwrap();
        let lb = k.event_lower_bound();
        assert!((lb - 0.09 * (-5.0f64).exp()).abs() < 1e-15);
        assert!((lb - 6.06e-4).abs() < 1e-6);
        assert!(k.analytic_event_probability().unwrap() >= lb);
        let half = TiltingKernel::new(0.5, 0.0, 0, 0.5, G).unwrap();
        assert_eq!(half.event_lower_bound(), 0.25);
    }

    #[test]
    fn verify_balance_small() {
        let r = verify_balance(0.5, 0.0, 8, 0.1, G, 200_000, 9).unwrap();
        assert!(r.passed(), "{r:?}");
        let tv = r.tv_mc.unwrap();
        assert!((0.0..=1.0).contains(&tv));
        let r = verify_balance(0.5, 0.0, 0, 0.1, G, 10_000, 9).unwrap();
        assert!(r.passed());
        assert!(r.tv_mc.is_none());
    }

    #[test]
    fn bernoulli_is_monte_carlo_only() {
        let k = TiltingKernel::new(0.5, -0.5, 6, 0.2, ExpFamily::Bernoulli).unwrap();
        assert!(matches!(k.analytic_tv(), Err(Error::Unsupported(_))));
        let r = verify_balance(0.5, -0.5, 6, 0.2, ExpFamily::Bernoulli, 50_000, 3).unwrap();
        assert!(r.p_event_analytic.is_none());
        assert!(r.event_bound_holds);
    }

    #[test]
    fn invalid_kernels() {
        assert!(TiltingKernel::new(0.0, 0.5, 1, 0.1, G).is_err());
        assert!(TiltingKernel::new(0.5, 0.0, 1, 1.0, G).is_err());
        assert!(matches!(
            TiltingKernel::new(f64::INFINITY, 0.0, 1, 0.1, G),
            Err(Error::Domain(_))
        ));
    }
}
