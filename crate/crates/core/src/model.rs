//! Arm distributions, instances, divergences, gaps and permutations.

use std::cmp::Ordering;

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RngStream;

/// Reward distribution of a single arm.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ArmDistribution {
    Gaussian {
        mean: f64,
        #[serde(default = "unit_variance")]
        variance: f64,
    },
    Bernoulli {
        p: f64,
    },
}

fn unit_variance() -> f64 {
    1.0
}

impl ArmDistribution {
    pub fn gaussian(mean: f64, variance: f64) -> Result<Self> {
        if !mean.is_finite() {
            return Err(Error::invalid(format!("gaussian mean must be finite, got {mean}")));
        }
        if !(variance > 0.0 && variance.is_finite()) {
            return Err(Error::invalid(format!(
                "gaussian variance must be positive, got {variance}"
            )));
        }
        Ok(ArmDistribution::Gaussian { mean, variance })
    }

    pub fn unit_gaussian(mean: f64) -> Result<Self> {
        Self::gaussian(mean, 1.0)
    }

    pub fn bernoulli(p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::invalid(format!("bernoulli p must lie in [0, 1], got {p}")));
        }
        Ok(ArmDistribution::Bernoulli { p })
    }

    /// Re-check the parameter invariants, e.g. after deserialization.
    pub fn validate(self) -> Result<Self> {
        match self {
            ArmDistribution::Gaussian { mean, variance } => Self::gaussian(mean, variance),
            ArmDistribution::Bernoulli { p } => Self::bernoulli(p),
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            ArmDistribution::Gaussian { mean, .. } => mean,
            ArmDistribution::Bernoulli { p } => p,
        }
    }

    pub fn variance(&self) -> f64 {
        match *self {
            ArmDistribution::Gaussian { variance, .. } => variance,
            ArmDistribution::Bernoulli { p } => p * (1.0 - p),
        }
    }

    pub fn is_gaussian(&self) -> bool {
        matches!(self, ArmDistribution::Gaussian { .. })
    }

    /// Same family and same nuisance parameters; only the mean differs.
    pub fn same_family(&self, other: &ArmDistribution) -> bool {
        match (self, other) {
            (
                ArmDistribution::Gaussian { variance: v1, .. },
                ArmDistribution::Gaussian { variance: v2, .. },
            ) => v1 == v2,
            (ArmDistribution::Bernoulli { .. }, ArmDistribution::Bernoulli { .. }) => true,
            _ => false,
        }
    }

    /// Transform a pair of uniforms on `[0, 1)` into a draw from this arm.
    pub fn from_uniforms(&self, u1: f64, u2: f64) -> f64 {
        match *self {
            ArmDistribution::Gaussian { mean, variance } => {
                mean + variance.sqrt() * crate::rng::box_muller(u1, u2)
            }
            ArmDistribution::Bernoulli { p } => {
                if u1 < p {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    pub fn sample<R: RngCore + ?Sized>(&self, rng: &mut R) -> f64 {
        let u1 = crate::rng::uniform(rng);
        let u2 = crate::rng::uniform(rng);
        self.from_uniforms(u1, u2)
    }
}

/// The `s`-th draw of `arm` from `stream`; a pure function of `(stream, s)`.
pub fn draw_sample(arm: &ArmDistribution, stream: &RngStream, s: u64) -> f64 {
    let (u1, u2) = stream.uniform_pair(s);
    arm.from_uniforms(u1, u2)
}

/// `KL(a || b)`. Bernoulli divergences towards a point mass at a different
/// parameter are `+inf`.
pub fn kl_divergence(a: &ArmDistribution, b: &ArmDistribution) -> Result<f64> {
    match (*a, *b) {
        (
            ArmDistribution::Gaussian {
                mean: m1,
                variance: v1,
            },
            ArmDistribution::Gaussian {
                mean: m2,
                variance: v2,
            },
        ) => {
            if v1 != v2 {
                return Err(Error::invalid(format!(
                    "gaussian KL needs equal variances, got {v1} and {v2}"
                )));
            }
            Ok((m1 - m2).powi(2) / (2.0 * v1))
        }
        (ArmDistribution::Bernoulli { p }, ArmDistribution::Bernoulli { p: q }) => {
            Ok(bernoulli_kl(p, q))
        }
        _ => Err(Error::invalid("KL between different distribution families")),
    }
}

fn xlogx_over(x: f64, y: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else if y == 0.0 {
        f64::INFINITY
    } else {
        x * (x / y).ln()
    }
}

fn bernoulli_kl(p: f64, q: f64) -> f64 {
    if p == q {
        return 0.0;
    }
    xlogx_over(p, q) + xlogx_over(1.0 - p, 1.0 - q)
}

/// Binary relative entropy `kl(p, q)` for `p, q` in the open unit interval.
pub fn binary_kl(p: f64, q: f64) -> Result<f64> {
    for (name, v) in [("p", p), ("q", q)] {
        if !(v > 0.0 && v < 1.0) {
            return Err(Error::invalid(format!("binary_kl: {name} = {v} is outside (0, 1)")));
        }
    }
    Ok(p * (p / q).ln() + (1.0 - p) * ((1.0 - p) / (1.0 - q)).ln())
}

/// Single-parameter natural exponential families, `p_θ(x) = exp(θx − A(θ))`
/// against a base measure. A unit-variance Gaussian's natural parameter is
/// its mean; a Bernoulli's is the log-odds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExpFamily {
    GaussianUnitVariance,
    Bernoulli,
}

impl ExpFamily {
    /// Log-partition `A(θ)`.
    pub fn log_partition(self, theta: f64) -> f64 {
        match self {
            ExpFamily::GaussianUnitVariance => theta * theta / 2.0,
            // softplus, stable for large |θ|
            ExpFamily::Bernoulli => theta.max(0.0) + (-theta.abs()).exp().ln_1p(),
        }
    }

    /// Mean parameter `A'(θ)`.
    pub fn mean(self, theta: f64) -> f64 {
        match self {
            ExpFamily::GaussianUnitVariance => theta,
            ExpFamily::Bernoulli => 1.0 / (1.0 + (-theta).exp()),
        }
    }

    /// Whether `θ` lies in the natural parameter space (all of ℝ for both
    /// families).
    pub fn contains(self, theta: f64) -> bool {
        theta.is_finite()
    }

    /// `KL(p_a || p_b) = A(b) − A(a) − (b − a)·A'(a)`.
    pub fn kl(self, a: f64, b: f64) -> f64 {
        self.log_partition(b) - self.log_partition(a) - (b - a) * self.mean(a)
    }
}

/// An ordered list of arms together with the target set size `k`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Instance {
    arms: Vec<ArmDistribution>,
    k: usize,
}

impl Instance {
    pub fn new(arms: Vec<ArmDistribution>, k: usize) -> Result<Self> {
        let n = arms.len();
        if n < 2 {
            return Err(Error::invalid(format!("an instance needs at least 2 arms, got {n}")));
        }
        if k == 0 || k >= n {
            return Err(Error::invalid(format!("k must satisfy 1 <= k < n, got k={k}, n={n}")));
        }
        let arms = arms
            .into_iter()
            .map(ArmDistribution::validate)
            .collect::<Result<Vec<_>>>()?;
        let sorted = sorted_desc(&arms.iter().map(|a| a.mean()).collect::<Vec<_>>());
        if sorted[k - 1] <= sorted[k] {
            return Err(Error::DegenerateInstance(format!(
                "the {k}-th and {}-th largest means are tied at {}",
                k + 1,
                sorted[k]
            )));
        }
        Ok(Instance { arms, k })
    }

    /// Unit-variance Gaussian arms with the given means.
    pub fn gaussian(means: &[f64], k: usize) -> Result<Self> {
        let arms = means
            .iter()
            .map(|&m| ArmDistribution::unit_gaussian(m))
            .collect::<Result<Vec<_>>>()?;
        Self::new(arms, k)
    }

    /// `k` unit Gaussian arms at `high` followed by `n - k` at `low`.
    pub fn two_valued(n: usize, k: usize, high: f64, low: f64) -> Result<Self> {
        if k >= n {
            return Err(Error::invalid(format!("k must be below n, got k={k}, n={n}")));
        }
        let means: Vec<f64> = (0..n).map(|i| if i < k { high } else { low }).collect();
        Self::gaussian(&means, k)
    }

    /// The benchmark instance: k = 5, means 0.75 on the first five arms and
    /// 0.25 elsewhere, unit-variance Gaussian.
    pub fn table1(n: usize) -> Result<Self> {
        Self::two_valued(n, 5, 0.75, 0.25)
    }

    pub fn n(&self) -> usize {
        self.arms.len()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn arms(&self) -> &[ArmDistribution] {
        &self.arms
    }

    pub fn arm(&self, a: usize) -> &ArmDistribution {
        &self.arms[a]
    }

    pub fn means(&self) -> Vec<f64> {
        self.arms.iter().map(|a| a.mean()).collect()
    }

    /// The same arms with a different target size.
    pub fn with_k(&self, k: usize) -> Result<Self> {
        Self::new(self.arms.clone(), k)
    }

    pub fn all_gaussian(&self) -> bool {
        self.arms.iter().all(|a| a.is_gaussian())
    }

    pub fn unit_gaussian(&self) -> bool {
        self.arms
            .iter()
            .all(|a| matches!(a, ArmDistribution::Gaussian { variance, .. } if *variance == 1.0))
    }

    /// Arm indices ordered by decreasing mean, ties broken by lower index.
    pub fn ranking(&self) -> Vec<usize> {
        let means = self.means();
        let mut idx: Vec<usize> = (0..self.n()).collect();
        idx.sort_by(|&a, &b| means[b].total_cmp(&means[a]).then(a.cmp(&b)));
        idx
    }

    /// The true top-k set, sorted by arm index.
    pub fn top_k(&self) -> Vec<usize> {
        let mut top: Vec<usize> = self.ranking().into_iter().take(self.k).collect();
        top.sort_unstable();
        top
    }

    /// The unique best arm, if there is one.
    pub fn best_arm(&self) -> Result<usize> {
        let r = self.ranking();
        let means = self.means();
        if means[r[0]] <= means[r[1]] {
            return Err(Error::DegenerateInstance(
                "the best arm is not unique".to_string(),
            ));
        }
        Ok(r[0])
    }
}

fn sorted_desc(values: &[f64]) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_by(|a, b| b.total_cmp(a));
    v
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum GapKind {
    BestArm,
    TopK,
}

/// Per-arm gaps (indexed by original arm id) and the sorted mean vector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapProfile {
    pub sorted_means: Vec<f64>,
    pub gaps: Vec<f64>,
    pub kind: GapKind,
}

pub fn gap_profile(inst: &Instance, kind: GapKind) -> Result<GapProfile> {
    let means = inst.means();
    let sorted_means = sorted_desc(&means);
    let k = match kind {
        GapKind::BestArm => 1,
        GapKind::TopK => inst.k(),
    };
    let kth = sorted_means[k - 1];
    let next = sorted_means[k];
    if kth <= next {
        return Err(Error::DegenerateInstance(format!(
            "boundary means tied at {kth} for k = {k}"
        )));
    }
    let in_top: Vec<bool> = {
        let mut flags = vec![false; inst.n()];
        for a in inst.ranking().into_iter().take(k) {
            flags[a] = true;
        }
        flags
    };
    let gaps = means
        .iter()
        .zip(&in_top)
        .map(|(&m, &top)| if top { m - next } else { kth - m })
        .collect();
    Ok(GapProfile {
        sorted_means,
        gaps,
        kind,
    })
}

/// A bijection on `0..n`; `apply(i)` is the image of `i`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct Permutation {
    mapping: Vec<usize>,
}

impl Permutation {
    pub fn new(mapping: Vec<usize>) -> Result<Self> {
        let n = mapping.len();
        let mut seen = vec![false; n];
        for &m in &mapping {
            if m >= n || seen[m] {
                return Err(Error::invalid(format!("{mapping:?} is not a permutation of 0..{n}")));
            }
            seen[m] = true;
        }
        Ok(Permutation { mapping })
    }

    pub fn identity(n: usize) -> Self {
        Permutation {
            mapping: (0..n).collect(),
        }
    }

    /// The transposition exchanging `a` and `b`.
    pub fn swap(n: usize, a: usize, b: usize) -> Result<Self> {
        if a >= n || b >= n {
            return Err(Error::invalid(format!("swap ({a}, {b}) out of range for n = {n}")));
        }
        let mut mapping: Vec<usize> = (0..n).collect();
        mapping.swap(a, b);
        Ok(Permutation { mapping })
    }

    /// Uniform draw from the symmetric group (Fisher-Yates).
    pub fn random<R: RngCore + ?Sized>(n: usize, rng: &mut R) -> Self {
        let mut mapping: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            let j = (crate::rng::uniform(rng) * (i + 1) as f64) as usize;
            mapping.swap(i, j.min(i));
        }
        Permutation { mapping }
    }

    pub fn len(&self) -> usize {
        self.mapping.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mapping.is_empty()
    }

    pub fn apply(&self, i: usize) -> usize {
        self.mapping[i]
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.mapping
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.len()];
        for (i, &m) in self.mapping.iter().enumerate() {
            inv[m] = i;
        }
        Permutation { mapping: inv }
    }

    /// `self ∘ other`: first `other`, then `self`.
    pub fn compose(&self, other: &Permutation) -> Result<Self> {
        if self.len() != other.len() {
            return Err(Error::invalid("composing permutations of different sizes"));
        }
        Ok(Permutation {
            mapping: other.mapping.iter().map(|&i| self.mapping[i]).collect(),
        })
    }

    pub fn is_identity(&self) -> bool {
        self.mapping.iter().enumerate().all(|(i, &m)| i == m)
    }

    /// Reindex per-arm values: `out[π(a)] = values[a]`.
    pub fn push_forward<T: Clone>(&self, values: &[T]) -> Vec<T> {
        let mut out = values.to_vec();
        for (a, v) in values.iter().enumerate() {
            out[self.mapping[a]] = v.clone();
        }
        out
    }
}

/// The relabeled instance whose arm at position `π(a)` is `ν_a`.
pub fn apply_permutation(inst: &Instance, perm: &Permutation) -> Result<Instance> {
    if perm.len() != inst.n() {
        return Err(Error::invalid(format!(
            "permutation over {} elements applied to {} arms",
            perm.len(),
            inst.n()
        )));
    }
    Ok(Instance {
        arms: perm.push_forward(&inst.arms),
        k: inst.k,
    })
}

/// Parse a means file.
///
/// Two layouts are accepted: one decimal mean per line (unit-variance
/// Gaussian), or structured arms as JSON objects such as
/// `{"kind": "bernoulli", "p": 0.3}`, either one object per line or a single
/// JSON array. Blank lines and `#` comments are ignored in the line layout.
pub fn parse_means(text: &str) -> Result<Vec<ArmDistribution>> {
    let trimmed = text.trim_start();
    if trimmed.starts_with('[') {
        let arms: Vec<ArmDistribution> = serde_json::from_str(trimmed).map_err(|e| Error::Parse {
            line: e.line(),
            message: e.to_string(),
        })?;
        return arms.into_iter().map(ArmDistribution::validate).collect();
    }
    let mut arms = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let arm = if line.starts_with('{') {
            serde_json::from_str::<ArmDistribution>(line).map_err(|e| Error::Parse {
                line: i + 1,
                message: e.to_string(),
            })?
        } else {
            let mean: f64 = line.parse().map_err(|_| Error::Parse {
                line: i + 1,
                message: format!("expected a decimal mean, found {line:?}"),
            })?;
            ArmDistribution::Gaussian {
                mean,
                variance: 1.0,
            }
        };
        arms.push(arm.validate().map_err(|e| Error::Parse {
            line: i + 1,
            message: e.to_string(),
        })?);
    }
    Ok(arms)
}

/// Total order on arm indices by (mean descending, index ascending).
pub fn better_arm(means: &[f64], a: usize, b: usize) -> Ordering {
    means[b].total_cmp(&means[a]).then(a.cmp(&b))
}
