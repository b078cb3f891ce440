//! Escort ("independent-equals") distributions and moments.
//!
//! The escort of order `q` reweights a distribution by `p^q`. Zero-probability
//! states stay excluded for every `q`, including `q = 0`.

use std::sync::LazyLock;

use crate::algebra::CouplingContext;
use crate::distributions::{integrate_density, CoupledDistribution, Density, DensityKey};
use crate::error::{ensure, Error, Result};
use crate::quadrature::{Node, Support};
use crate::util::{neumaier_sum, OnceCache};

const SUM_TOLERANCE: f64 = 1e-12;

/// Probability vector over flattened states with a dimension count for the
/// `1 + d k` exponents.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteDist {
    p: Vec<f64>,
    dim: u32,
}

impl DiscreteDist {
    pub fn new(p: Vec<f64>, dim: u32) -> Result<Self> {
        ensure!(!p.is_empty(), Domain, "distribution needs at least one state");
        ensure!(dim >= 1, Domain, "dimension must be at least 1");
        ensure!(
            p.iter().all(|&v| v.is_finite() && v >= 0.0),
            Domain,
            "probabilities must be finite and non-negative"
        );
        let total = neumaier_sum(p.iter().copied());
        ensure!(
            (total - 1.0).abs() <= SUM_TOLERANCE * (p.len() as f64).sqrt().max(1.0),
            Domain,
            "probabilities sum to {total}, not 1"
        );
        Ok(Self { p, dim })
    }

    /// Normalizes non-negative weights into a distribution.
    pub fn from_weights(weights: Vec<f64>, dim: u32) -> Result<Self> {
        ensure!(
            weights.iter().all(|&v| v.is_finite() && v >= 0.0),
            Domain,
            "weights must be finite and non-negative"
        );
        let total = neumaier_sum(weights.iter().copied());
        if total <= 0.0 {
            return Err(Error::Degenerate("all weights are zero".into()));
        }
        Self::new(weights.into_iter().map(|w| w / total).collect(), dim)
    }

    pub fn uniform(w: usize, dim: u32) -> Result<Self> {
        ensure!(w >= 1, Domain, "distribution needs at least one state");
        Self::new(vec![1.0 / w as f64; w], dim)
    }

    pub fn probs(&self) -> &[f64] {
        &self.p
    }

    pub fn dim(&self) -> u32 {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p.is_empty()
    }

    /// Outer product `p (x) r` with dimension 1.
    pub fn product(&self, other: &DiscreteDist) -> Result<Self> {
        let p = self.p.iter().flat_map(|&a| other.p.iter().map(move |&b| a * b)).collect();
        Self::from_weights(p, 1)
    }

    /// `sum p_i^q` over states with `p_i > 0`.
    pub fn power_sum(&self, q: f64) -> f64 {
        neumaier_sum(self.p.iter().filter(|&&v| v > 0.0).map(|&v| v.powf(q)))
    }
}

/// Escort `p^q / sum p^q`, with `0^q = 0` for every `q >= 0`.
pub fn escort_discrete(dist: &DiscreteDist, q: f64) -> Result<DiscreteDist> {
    ensure!(q.is_finite() && q >= 0.0, Domain, "escort order must be non-negative, got {q}");
    if q == 1.0 {
        return Ok(dist.clone());
    }
    let ln_max = dist.p.iter().copied().fold(0.0f64, f64::max).ln();
    let powered: Vec<f64> = dist
        .p
        .iter()
        .map(|&v| if v > 0.0 { (q * (v.ln() - ln_max)).exp() } else { 0.0 })
        .collect();
    let total = neumaier_sum(powered.iter().copied());
    if !(total > 0.0) {
        return Err(Error::Degenerate("escort weights are all zero".into()));
    }
    let p = powered.into_iter().map(|w| w / total).collect();
    Ok(DiscreteDist { p, dim: dist.dim })
}

/// Escort-weighted mean of `values`.
pub fn escort_mean(dist: &DiscreteDist, values: &[f64], q: f64) -> Result<f64> {
    if values.len() != dist.len() {
        return Err(Error::LengthMismatch(values.len(), dist.len()));
    }
    let e = escort_discrete(dist, q)?;
    Ok(neumaier_sum(e.p.iter().zip(values).map(|(w, v)| w * v)))
}

/// Escort exponent of the `m`-th independent-equals moment, `1 + m k/(1 + k)`.
pub fn ie_exponent(m: u32, kappa: f64) -> f64 {
    1.0 + f64::from(m) * kappa / (1.0 + kappa)
}

/// Dimension-aware form `1 + m k/(1 + d k)`; equals [`ie_exponent`] at `d = 1`.
pub fn ie_exponent_ctx(m: u32, ctx: &CouplingContext) -> f64 {
    1.0 + f64::from(m) * ctx.kappa / ctx.one_plus_dk()
}

static ESCORT_NORMALIZERS: LazyLock<OnceCache<([u64; 5], u64)>> = LazyLock::new(OnceCache::new);

/// Continuous escort density `p^q / int p^q`.
pub struct EscortDensity<'a, D: Density + ?Sized> {
    base: &'a D,
    q: f64,
    ln_norm: f64,
}

impl<D: Density + ?Sized> EscortDensity<'_, D> {
    pub fn order(&self) -> f64 {
        self.q
    }

    /// `int p^q` over the support.
    pub fn normalizer(&self) -> f64 {
        self.ln_norm.exp()
    }
}

fn escort_normalizer_uncached<D: Density + ?Sized>(base: &D, q: f64) -> Result<f64> {
    let est = integrate_density(base, |n, lp| if lp == f64::NEG_INFINITY { 0.0 } else { n.weight(q * lp) })?;
    if !est.value.is_finite() {
        return Err(Error::Divergent(format!("integral of p^{q} is infinite")));
    }
    if est.value <= 0.0 {
        return Err(Error::Degenerate(format!("integral of p^{q} vanishes")));
    }
    Ok(est.value)
}

/// `int p^q` for `base`, cached per (density, q) when the density has a key.
pub fn escort_normalizer<D: Density + ?Sized>(base: &D, q: f64) -> Result<f64> {
    ensure!(q.is_finite() && q >= 0.0, Domain, "escort order must be non-negative, got {q}");
    match base.cache_key() {
        Some(key) => {
            let key: (DensityKey, u64) = (key, q.to_bits());
            ESCORT_NORMALIZERS.get_or_compute(&key, || escort_normalizer_uncached(base, q))
        }
        None => escort_normalizer_uncached(base, q),
    }
}

/// Builds the escort of order `q` of a continuous density.
pub fn escort_density<D: Density + ?Sized>(base: &D, q: f64) -> Result<EscortDensity<'_, D>> {
    let norm = escort_normalizer(base, q)?;
    Ok(EscortDensity { base, q, ln_norm: norm.ln() })
}

impl<D: Density + ?Sized> Density for EscortDensity<'_, D> {
    fn support(&self) -> Support {
        self.base.support()
    }

    fn ln_pdf(&self, x: f64) -> f64 {
        let lp = self.base.ln_pdf(x);
        if lp == f64::NEG_INFINITY {
            lp
        } else {
            self.q * lp - self.ln_norm
        }
    }

    fn ln_pdf_node(&self, node: &Node) -> f64 {
        let lp = self.base.ln_pdf_node(node);
        if lp == f64::NEG_INFINITY {
            lp
        } else {
            self.q * lp - self.ln_norm
        }
    }
}

/// `int x^m P(x) dx` for a density `P`, evaluated in log space.
pub fn moment_of<D: Density + ?Sized>(density: &D, m: u32) -> Result<f64> {
    let est = integrate_density(density, |n, lp| {
        if lp == f64::NEG_INFINITY {
            return 0.0;
        }
        n.sign_x().powi(m as i32) * n.weight(lp + f64::from(m) * n.ln_abs_x())
    })?;
    Ok(est.value)
}

/// `m`-th independent-equals moment: the `m`-th moment under the escort of
/// order `1 + m k/(1 + k)`.
pub fn ie_moment(dist: &CoupledDistribution, m: u32) -> Result<f64> {
    ensure!(m >= 1, Domain, "moment order must be at least 1");
    let q = ie_exponent(m, dist.kappa());
    moment_of(&escort_density(dist, q)?, m)
}

/// Self-normalized importance estimate of the `m`-th independent-equals
/// moment from draws of the base density. Weights are `p(x_i)^(q-1)`.
pub fn ie_moment_empirical<D: Density + ?Sized>(
    samples: &[f64],
    density: &D,
    m: u32,
    ctx: &CouplingContext,
) -> Result<f64> {
    ensure!(m >= 1, Domain, "moment order must be at least 1");
    ensure!(!samples.is_empty(), Domain, "no samples");
    let q = ie_exponent_ctx(m, ctx);
    let ln_w: Vec<f64> = samples.iter().map(|&x| (q - 1.0) * density.ln_pdf(x)).collect();
    ensure!(ln_w.iter().all(|l| !l.is_nan()), Domain, "density evaluator returned NaN");
    let ln_max = ln_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !ln_max.is_finite() {
        return Err(Error::Degenerate("importance weights are all zero or infinite".into()));
    }
    let w: Vec<f64> = ln_w.iter().map(|l| (l - ln_max).exp()).collect();
    let total = neumaier_sum(w.iter().copied());
    if !(total > 0.0) {
        return Err(Error::Degenerate("importance weights sum to zero".into()));
    }
    let num = neumaier_sum(w.iter().zip(samples).map(|(wi, &x)| wi * x.powi(m as i32)));
    Ok(num / total)
}
