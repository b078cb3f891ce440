//! The coupled exponential family: density, survival, quantile and sampling.
//!
//! With `z = (x - mu) / sigma`, every member is built from the deformed
//! power `(1 + k z^a)^(-c / (a k))`:
//!
//! | family      | support            | density (unnormalized)                    |
//! |-------------|--------------------|-------------------------------------------|
//! | exponential | `[mu, x_max)`      | `(1 + k z)^(-(1+k)/k)`                    |
//! | Weibull     | `[mu, x_max)`      | `z (1 + k z^2)^(-(1+2k)/(2k))`            |
//! | Gaussian    | real line          | `(1 + k z^2)^(-(1+k)/(2k))` (Student-t)   |
//! | stretched   | `[mu, inf)`        | `(1 + k z^a)^(-(1+k)/(a k))`              |
//!
//! `x_max = mu + sigma (-1/k)^(1/a)` when `k < 0`, otherwise infinite.

use std::f64::consts::PI;
use std::sync::LazyLock;

use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use statrs::function::beta::{beta_reg, inv_beta_reg};
use statrs::function::gamma::{gamma_ur, ln_gamma};

use crate::algebra::{coupled_log_of_ln, SERIES_THRESHOLD};
use crate::error::{ensure, Error, Result};
use crate::quadrature::{integrate_over, integrate_support, Estimate, Node, Support, Tolerance};
use crate::util::{softplus, substream, OnceCache};

/// Key identifying a density for normalizer caches.
pub type DensityKey = [u64; 5];

/// A probability density that the quadrature engine can integrate.
pub trait Density: Sync {
    fn support(&self) -> Support;

    /// Natural log of the density; `-inf` outside the support.
    fn ln_pdf(&self, x: f64) -> f64;

    /// Log density at a quadrature node. Implementations override this when
    /// they can stay finite where `node.x` itself has overflowed.
    fn ln_pdf_node(&self, node: &Node) -> f64 {
        self.ln_pdf(node.x)
    }

    fn pdf(&self, x: f64) -> f64 {
        self.ln_pdf(x).exp()
    }

    /// Stable identity for caching derived quantities, if the density has one.
    fn cache_key(&self) -> Option<DensityKey> {
        None
    }
}

/// Integrates `integrand(node, ln_pdf)` over the support of `density`.
///
/// The integrand is responsible for the Jacobian, usually via [`Node::weight`].
pub fn integrate_density<D, F>(density: &D, integrand: F) -> Result<Estimate>
where
    D: Density + ?Sized,
    F: Fn(&Node, f64) -> f64,
{
    integrate_support(&density.support(), |n| integrand(n, density.ln_pdf_node(n)), Tolerance::default())
}

/// A density given by a log-density closure.
pub struct FnDensity<F> {
    support: Support,
    ln_pdf: F,
}

impl<F: Fn(f64) -> f64 + Sync> FnDensity<F> {
    pub fn new(support: Support, ln_pdf: F) -> Self {
        Self { support, ln_pdf }
    }
}

impl<F: Fn(f64) -> f64 + Sync> Density for FnDensity<F> {
    fn support(&self) -> Support {
        self.support
    }
    fn ln_pdf(&self, x: f64) -> f64 {
        if self.support.contains(x) {
            (self.ln_pdf)(x)
        } else {
            f64::NEG_INFINITY
        }
    }
}

/// Member of the coupled exponential family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Family {
    /// Generalized Pareto; near-location shape 1.
    Exponential,
    /// Survival `(1 + k z^2)^(-1/(2k))`.
    Weibull,
    /// Two-sided Student-t with `nu = 1/k`.
    Gaussian,
    /// One-sided stretched form with arbitrary shape.
    Stretched { alpha: f64 },
}

impl Family {
    pub fn alpha(&self) -> f64 {
        match *self {
            Family::Exponential => 1.0,
            Family::Weibull | Family::Gaussian => 2.0,
            Family::Stretched { alpha } => alpha,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Family::Exponential => "exponential",
            Family::Weibull => "weibull",
            Family::Gaussian => "gaussian",
            Family::Stretched { .. } => "stretched",
        }
    }

    fn tag(&self) -> u64 {
        match self {
            Family::Exponential => 1,
            Family::Weibull => 2,
            Family::Gaussian => 3,
            Family::Stretched { .. } => 4,
        }
    }
}

/// Location-scale-shape distribution from the coupled exponential family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoupledDistribution {
    family: Family,
    mu: f64,
    sigma: f64,
    kappa: f64,
    ln_norm: f64,
}

static STRETCHED_NORMALIZERS: LazyLock<OnceCache<(u64, u64)>> = LazyLock::new(OnceCache::new);

/// `ln(1 + k w) / k` for `w = e^ln_w`, or `None` where `1 + k w <= 0`.
fn deformed_ln(ln_w: f64, kappa: f64) -> Option<f64> {
    if ln_w == f64::NEG_INFINITY {
        return Some(0.0);
    }
    if kappa == 0.0 {
        return Some(ln_w.exp());
    }
    let t = kappa.abs().ln() + ln_w;
    if t < SERIES_THRESHOLD.ln() {
        let w = ln_w.exp();
        let kw = kappa * w;
        return Some(w * (1.0 - kw / 2.0 + kw * kw / 3.0));
    }
    if kappa > 0.0 {
        Some(softplus(t) / kappa)
    } else if t < 0.0 {
        Some((-t.exp()).ln_1p() / kappa)
    } else {
        None
    }
}

impl CoupledDistribution {
    pub fn new(family: Family, mu: f64, sigma: f64, kappa: f64) -> Result<Self> {
        ensure!(mu.is_finite(), Domain, "location must be finite, got {mu}");
        ensure!(sigma.is_finite() && sigma > 0.0, Domain, "scale must be positive, got {sigma}");
        ensure!(kappa.is_finite(), Domain, "coupling must be finite, got {kappa}");
        let ln_norm = match family {
            Family::Exponential | Family::Weibull => {
                ensure!(kappa > -1.0, Domain, "coupling must exceed -1, got {kappa}");
                sigma.ln()
            }
            Family::Gaussian => {
                ensure!(
                    kappa >= 0.0,
                    Unsupported,
                    "coupled Gaussian needs kappa >= 0, got {kappa}"
                );
                ln_gaussian_normalizer(sigma, kappa)
            }
            Family::Stretched { alpha } => {
                ensure!(alpha.is_finite() && alpha > 0.0, Domain, "shape must be positive, got {alpha}");
                ensure!(
                    kappa >= 0.0,
                    Unsupported,
                    "coupled stretched exponential needs kappa >= 0, got {kappa}"
                );
                sigma.ln() + stretched_unit_normalizer(kappa, alpha)?.ln()
            }
        };
        Ok(Self { family, mu, sigma, kappa, ln_norm })
    }

    pub fn exponential(mu: f64, sigma: f64, kappa: f64) -> Result<Self> {
        Self::new(Family::Exponential, mu, sigma, kappa)
    }

    pub fn weibull(mu: f64, sigma: f64, kappa: f64) -> Result<Self> {
        Self::new(Family::Weibull, mu, sigma, kappa)
    }

    pub fn gaussian(mu: f64, sigma: f64, kappa: f64) -> Result<Self> {
        Self::new(Family::Gaussian, mu, sigma, kappa)
    }

    pub fn stretched(mu: f64, sigma: f64, kappa: f64, alpha: f64) -> Result<Self> {
        Self::new(Family::Stretched { alpha }, mu, sigma, kappa)
    }

    pub fn family(&self) -> Family {
        self.family
    }
    pub fn mu(&self) -> f64 {
        self.mu
    }
    pub fn sigma(&self) -> f64 {
        self.sigma
    }
    pub fn kappa(&self) -> f64 {
        self.kappa
    }
    pub fn alpha(&self) -> f64 {
        self.family.alpha()
    }

    /// Same family and coupling with a different location and scale.
    pub fn with_location_scale(&self, mu: f64, sigma: f64) -> Result<Self> {
        Self::new(self.family, mu, sigma, self.kappa)
    }

    /// Normalizing constant `Z` (including the scale) of the density.
    pub fn normalizer(&self) -> f64 {
        self.ln_norm.exp()
    }

    /// Upper support endpoint; infinite unless `k < 0`.
    pub fn upper_endpoint(&self) -> f64 {
        if self.kappa < 0.0 {
            self.mu + self.sigma * (-1.0 / self.kappa).powf(1.0 / self.alpha())
        } else {
            f64::INFINITY
        }
    }

    fn lower_endpoint(&self) -> f64 {
        match self.family {
            Family::Gaussian => f64::NEG_INFINITY,
            _ => self.mu,
        }
    }

    /// `(ln|z|, sign z)` at a node, preferring the node's exact offset.
    fn ln_abs_z(&self, node: &Node) -> (f64, f64) {
        let ln_sigma = self.sigma.ln();
        if node.anchor == self.mu || !node.x.is_finite() {
            return (node.ln_r - ln_sigma, node.side);
        }
        let d = node.x - self.mu;
        if d == 0.0 {
            (f64::NEG_INFINITY, 1.0)
        } else {
            (d.abs().ln() - ln_sigma, d.signum())
        }
    }

    fn ln_pdf_z(&self, ln_z: f64, sign: f64) -> f64 {
        let k = self.kappa;
        match self.family {
            Family::Exponential => {
                if sign < 0.0 {
                    return f64::NEG_INFINITY;
                }
                match deformed_ln(ln_z, k) {
                    Some(l) => -(1.0 + k) * l - self.ln_norm,
                    None => f64::NEG_INFINITY,
                }
            }
            Family::Weibull => {
                if sign < 0.0 || ln_z == f64::NEG_INFINITY {
                    return f64::NEG_INFINITY;
                }
                match deformed_ln(2.0 * ln_z, k) {
                    Some(l) => ln_z - 0.5 * (1.0 + 2.0 * k) * l - self.ln_norm,
                    None => f64::NEG_INFINITY,
                }
            }
            Family::Gaussian => {
                let l = deformed_ln(2.0 * ln_z, k).unwrap_or(f64::INFINITY);
                -0.5 * (1.0 + k) * l - self.ln_norm
            }
            Family::Stretched { alpha } => {
                if sign < 0.0 {
                    return f64::NEG_INFINITY;
                }
                let l = deformed_ln(alpha * ln_z, k).unwrap_or(f64::INFINITY);
                -(1.0 + k) / alpha * l - self.ln_norm
            }
        }
    }

    /// Probability density at `x`.
    pub fn density(&self, x: f64) -> f64 {
        self.ln_pdf(x).exp()
    }

    /// `d/dx ln f(x)` for the coupled exponential, inside its support.
    pub fn score(&self, x: f64) -> Result<f64> {
        ensure!(
            self.family == Family::Exponential,
            Unsupported,
            "score is provided for the coupled exponential only"
        );
        let z = (x - self.mu) / self.sigma;
        ensure!(z >= 0.0 && x < self.upper_endpoint(), Domain, "x = {x} lies outside the support");
        Ok(-(1.0 + self.kappa) / (self.sigma * (1.0 + self.kappa * z)))
    }

    /// Survival probability `P(X > x)`.
    pub fn survival(&self, x: f64) -> Result<f64> {
        ensure!(!x.is_nan(), Domain, "survival at NaN");
        if x <= self.lower_endpoint() {
            return Ok(1.0);
        }
        if x >= self.upper_endpoint() {
            return Ok(0.0);
        }
        let z = (x - self.mu) / self.sigma;
        let k = self.kappa;
        let s = match self.family {
            Family::Exponential => (-deformed_ln(z.ln(), k).unwrap_or(f64::INFINITY)).exp(),
            Family::Weibull => (-0.5 * deformed_ln(2.0 * z.ln(), k).unwrap_or(f64::INFINITY)).exp(),
            Family::Stretched { alpha } => {
                let w = z.powf(alpha);
                if k == 0.0 {
                    gamma_ur(1.0 / alpha, w / alpha)
                } else {
                    // Incomplete-beta form of the tail integral.
                    beta_reg(1.0 / (alpha * k), 1.0 / alpha, 1.0 / (1.0 + k * w))
                }
            }
            Family::Gaussian => {
                if x == self.mu {
                    0.5
                } else if x > self.mu {
                    self.upper_tail_by_quadrature(x)?
                } else {
                    1.0 - self.upper_tail_by_quadrature(2.0 * self.mu - x)?
                }
            }
        };
        Ok(s.clamp(0.0, 1.0))
    }

    fn upper_tail_by_quadrature(&self, from: f64) -> Result<f64> {
        let est = integrate_over(&self.support(), from, |n| n.weight(self.ln_pdf_node(n)), Tolerance::default())?;
        Ok(est.value)
    }

    /// Cumulative distribution `P(X <= x)`.
    pub fn cdf(&self, x: f64) -> Result<f64> {
        Ok(1.0 - self.survival(x)?)
    }

    /// Inverse survival: the `x` with `survival(x) = u`, for `u` in `(0, 1]`.
    pub fn quantile(&self, u: f64) -> Result<f64> {
        ensure!(u > 0.0 && u <= 1.0, Domain, "survival level must lie in (0, 1], got {u}");
        if u == 1.0 {
            return Ok(self.lower_endpoint());
        }
        let k = self.kappa;
        let neg_ln_u = -u.ln();
        match self.family {
            Family::Exponential => Ok(self.mu + self.sigma * coupled_log_of_ln(neg_ln_u, k)),
            Family::Weibull => {
                let z2 = 2.0 * coupled_log_of_ln(neg_ln_u, 2.0 * k);
                Ok(self.mu + self.sigma * z2.max(0.0).sqrt())
            }
            Family::Stretched { alpha } => {
                let guess = if k == 0.0 {
                    self.mu + self.sigma * (alpha * neg_ln_u).powf(1.0 / alpha)
                } else {
                    let y = inv_beta_reg(1.0 / (alpha * k), 1.0 / alpha, u);
                    let w = ((1.0 / y) - 1.0) / k;
                    self.mu + self.sigma * w.max(0.0).powf(1.0 / alpha)
                };
                self.invert_survival(u, self.mu, guess)
            }
            Family::Gaussian => {
                if u == 0.5 {
                    return Ok(self.mu);
                }
                if u > 0.5 {
                    let mirrored = self.quantile(1.0 - u)?;
                    return Ok(2.0 * self.mu - mirrored);
                }
                let guess = self.mu + self.sigma * (2.0 * neg_ln_u).sqrt();
                self.invert_survival(u, self.mu, guess)
            }
        }
    }

    /// Safeguarded Newton iteration on the survival function over `[lo, inf)`.
    fn invert_survival(&self, u: f64, lo: f64, guess: f64) -> Result<f64> {
        let mut lo = lo;
        let mut hi = f64::INFINITY;
        let mut x = if guess.is_finite() && guess > lo { guess } else { lo + self.sigma };
        for _ in 0..200 {
            let s = self.survival(x)?;
            let resid = s - u;
            if resid.abs() <= 1e-13 * u + 1e-300 {
                return Ok(x);
            }
            if resid > 0.0 {
                lo = x;
            } else {
                hi = x;
            }
            let pdf = self.density(x);
            let mut next = if pdf > 0.0 { x + resid / pdf } else { f64::NAN };
            if !(next > lo && next < hi) {
                next = if hi.is_finite() { 0.5 * (lo + hi) } else { lo + 2.0 * (lo - self.mu).max(self.sigma) };
            }
            if next == x || (hi - lo) <= 4.0 * f64::EPSILON * x.abs().max(self.sigma) {
                return Ok(next);
            }
            x = next;
        }
        Err(Error::Quadrature(format!("quantile iteration did not converge for u = {u}")))
    }

    /// `n` draws, deterministic in `seed`; draw `i` uses its own substream.
    pub fn sample(&self, n: usize, seed: u64) -> Result<Vec<f64>> {
        ensure!(n >= 1, Domain, "sample size must be at least 1");
        let student = if self.family == Family::Gaussian && self.kappa > 0.0 {
            let nu = 1.0 / self.kappa;
            Some((nu, Gamma::new(0.5 * nu, 2.0).map_err(|e| Error::Domain(e.to_string()))?))
        } else {
            None
        };
        (0..n)
            .map(|i| {
                let mut rng = substream(seed, i as u64);
                match self.family {
                    Family::Gaussian => {
                        let z: f64 = StandardNormal.sample(&mut rng);
                        let t = match &student {
                            Some((nu, chi2)) => z / (chi2.sample(&mut rng) / nu).sqrt(),
                            None => z,
                        };
                        Ok(self.mu + self.sigma * t)
                    }
                    _ => {
                        let u = 1.0 - rng.random::<f64>();
                        self.quantile(u)
                    }
                }
            })
            .collect()
    }

    /// Raw moment `E[X^m]`; divergent when `k >= 1/m`.
    pub fn raw_moment(&self, m: u32) -> Result<f64> {
        ensure!(m >= 1, Domain, "moment order must be at least 1");
        if self.kappa > 0.0 && self.kappa * f64::from(m) >= 1.0 {
            return Err(Error::Divergent(format!(
                "raw moment {m} is infinite for kappa = {} >= 1/{m}",
                self.kappa
            )));
        }
        let est = integrate_density(self, |n, lp| {
            if lp == f64::NEG_INFINITY {
                return 0.0;
            }
            let ln_abs = n.ln_abs_x();
            let sign = n.sign_x().powi(m as i32);
            sign * n.weight(lp + f64::from(m) * ln_abs)
        })?;
        Ok(est.value)
    }
}

impl Density for CoupledDistribution {
    fn support(&self) -> Support {
        Support::new(self.lower_endpoint(), self.upper_endpoint(), self.mu, self.sigma)
    }

    fn ln_pdf(&self, x: f64) -> f64 {
        if x.is_nan() {
            return f64::NAN;
        }
        let d = x - self.mu;
        let (ln_z, sign) = if d == 0.0 {
            (f64::NEG_INFINITY, 1.0)
        } else {
            ((d.abs() / self.sigma).ln(), d.signum())
        };
        if x > self.upper_endpoint() {
            return f64::NEG_INFINITY;
        }
        self.ln_pdf_z(ln_z, sign)
    }

    fn ln_pdf_node(&self, node: &Node) -> f64 {
        let (ln_z, sign) = self.ln_abs_z(node);
        self.ln_pdf_z(ln_z, sign)
    }

    fn cache_key(&self) -> Option<DensityKey> {
        let alpha = match self.family {
            Family::Stretched { alpha } => alpha.to_bits(),
            _ => 0,
        };
        Some([self.family.tag(), self.mu.to_bits(), self.sigma.to_bits(), self.kappa.to_bits(), alpha])
    }
}

fn ln_gaussian_normalizer(sigma: f64, kappa: f64) -> f64 {
    if kappa == 0.0 {
        return sigma.ln() + 0.5 * (2.0 * PI).ln();
    }
    sigma.ln() + 0.5 * (PI / kappa).ln() + ln_gamma(1.0 / (2.0 * kappa)) - ln_gamma((1.0 + kappa) / (2.0 * kappa))
}

/// `Z = sigma sqrt(pi/k) Gamma(1/(2k)) / Gamma((1+k)/(2k))` for the coupled Gaussian.
pub fn gaussian_normalizer(sigma: f64, kappa: f64) -> Result<f64> {
    ensure!(sigma > 0.0, Domain, "scale must be positive, got {sigma}");
    ensure!(
        kappa > 0.0,
        Unsupported,
        "closed-form normalizer needs kappa > 0, got {kappa}"
    );
    Ok(ln_gaussian_normalizer(sigma, kappa).exp())
}

/// Normalizer of the unit-scale stretched form `(1 + k z^a)^(-(1+k)/(a k))`
/// on `[0, inf)`, computed once per `(k, a)` by quadrature.
pub fn stretched_unit_normalizer(kappa: f64, alpha: f64) -> Result<f64> {
    ensure!(kappa >= 0.0, Unsupported, "stretched normalizer needs kappa >= 0, got {kappa}");
    ensure!(alpha > 0.0, Domain, "shape must be positive, got {alpha}");
    STRETCHED_NORMALIZERS.get_or_compute(&(kappa.to_bits(), alpha.to_bits()), || {
        let support = Support::new(0.0, f64::INFINITY, 0.0, 1.0);
        let est = integrate_support(
            &support,
            |n| {
                let l = deformed_ln(alpha * n.ln_r, kappa).unwrap_or(f64::INFINITY);
                n.weight(-(1.0 + kappa) / alpha * l)
            },
            Tolerance::default(),
        )?;
        Ok(est.value)
    })
}

/// Score at `x = mu + sigma` of the coupled exponential; equals `-1/sigma`.
pub fn score_at_scale(dist: &CoupledDistribution) -> Result<f64> {
    dist.score(dist.mu + dist.sigma)
}

/// Scale and coupling of the coupled exponential raised to the power
/// `(1+2k)/(1+k)` and renormalized: `(sigma/(1+k), k/(1+k))`.
pub fn ie_power_transform(sigma: f64, kappa: f64) -> Result<(f64, f64)> {
    ensure!(sigma > 0.0, Domain, "scale must be positive, got {sigma}");
    ensure!(kappa > -1.0, Domain, "coupling must exceed -1, got {kappa}");
    Ok((sigma / (1.0 + kappa), kappa / (1.0 + kappa)))
}
