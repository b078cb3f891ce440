//! Coupled (deformed) exponential and logarithm, coupled arithmetic, and the
//! conversions between the shape/scale parameterization and the `q`-statistics
//! parameterization.
//!
//! ```text
//! exp_k(x) = (1 + k x)_+^(1/k)        ln_k(x) = (x^k - 1) / k
//! x (+)_k y = x + y + k x y           x (-)_k y = (x - y) / (1 + k y)
//! ```
//!
//! Both deformations reduce to `exp`/`ln` as `k -> 0`. Near that limit the
//! functions switch to a second-order series so that no cancellation occurs.

use crate::error::{ensure, Error, Result};

/// Below this value of `|k * x|` (or `|k * ln x|`) the series branch is used.
pub const SERIES_THRESHOLD: f64 = 1e-8;

/// Coupling `k`, near-location shape `alpha` and dimension `d`.
///
/// The triple fixes the escort exponent `q = 1 + alpha k / (1 + d k)` and the
/// information relative risk aversion `r = alpha k / (1 + d k)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplingContext {
    pub kappa: f64,
    pub alpha: f64,
    pub dim: u32,
}

impl CouplingContext {
    pub fn new(kappa: f64, alpha: f64, dim: u32) -> Result<Self> {
        ensure!(kappa.is_finite(), Domain, "kappa must be finite, got {kappa}");
        ensure!(alpha.is_finite() && alpha > 0.0, Domain, "alpha must be positive, got {alpha}");
        ensure!(dim >= 1, Domain, "dimension must be at least 1");
        let ctx = Self { kappa, alpha, dim };
        ensure!(
            ctx.one_plus_dk() != 0.0,
            Singular,
            "1 + d*kappa = 0 at kappa = {kappa}, d = {dim}"
        );
        Ok(ctx)
    }

    /// One-dimensional, `alpha = 1` context (the generalized Pareto case).
    pub fn gpd(kappa: f64) -> Result<Self> {
        Self::new(kappa, 1.0, 1)
    }

    /// `1 + d k`.
    pub fn one_plus_dk(&self) -> f64 {
        1.0 + f64::from(self.dim) * self.kappa
    }

    /// Rejects couplings at or below `-1/d`, where the escort exponents lose meaning.
    pub fn require_escort_range(&self) -> Result<()> {
        ensure!(
            self.one_plus_dk() > 0.0,
            Domain,
            "kappa = {} must exceed -1/d = {}",
            self.kappa,
            -1.0 / f64::from(self.dim)
        );
        Ok(())
    }

    /// Escort exponent used by the Type I coupled entropy: `1 + k / (1 + d k)`.
    pub fn type_one_exponent(&self) -> f64 {
        1.0 + self.kappa / self.one_plus_dk()
    }
}

/// `exp_k(x) = (1 + k x)_+^(1/k)`.
///
/// At the support edge (`1 + k x <= 0`) the result saturates: `0` when
/// `k > 0` and `+inf` when `k < 0`.
pub fn coupled_exp(x: f64, kappa: f64) -> f64 {
    coupled_exp_power(x, kappa, 1.0)
}

/// `(1 + k x)_+^(a/k)`, the `a`-th power of the coupled exponential.
pub fn coupled_exp_power(x: f64, kappa: f64, a: f64) -> f64 {
    ln_coupled_exp_power(x, kappa, a).exp()
}

/// Natural log of [`coupled_exp_power`]; `-inf`/`+inf` at the clamp.
pub fn ln_coupled_exp_power(x: f64, kappa: f64, a: f64) -> f64 {
    if kappa == 0.0 {
        return a * x;
    }
    let kx = kappa * x;
    if kx.abs() < SERIES_THRESHOLD {
        // ln(1 + kx)/k = x - k x^2/2 + k^2 x^3/3 - ...
        return a * x * (1.0 - kx / 2.0 + kx * kx / 3.0);
    }
    let base = 1.0 + kx;
    if base <= 0.0 {
        let exponent = a / kappa;
        return if exponent > 0.0 {
            f64::NEG_INFINITY
        } else if exponent < 0.0 {
            f64::INFINITY
        } else {
            0.0
        };
    }
    a * kx.ln_1p() / kappa
}

/// `ln_k(x) = (x^k - 1) / k` for `x > 0`.
pub fn coupled_log(x: f64, kappa: f64) -> Result<f64> {
    ensure!(x > 0.0, Domain, "coupled log requires x > 0, got {x}");
    Ok(coupled_log_of_ln(x.ln(), kappa))
}

/// `ln_k(e^l)`, i.e. the coupled log of a value given through its natural log.
///
/// Working from `l` avoids overflow for arguments such as `p^(-1/(1+dk))` with
/// tiny `p`.
pub fn coupled_log_of_ln(l: f64, kappa: f64) -> f64 {
    let kl = kappa * l;
    if kl.abs() < SERIES_THRESHOLD {
        // (e^{kl} - 1)/k = l (1 + kl/2 + (kl)^2/6)
        return l * (1.0 + kl / 2.0 + kl * kl / 6.0);
    }
    kl.exp_m1() / kappa
}

/// Coupled sum `x + y + k x y`.
pub fn coupled_sum(x: f64, y: f64, kappa: f64) -> f64 {
    x + y + kappa * x * y
}

/// Coupled difference `(x - y) / (1 + k y)`, the inverse of [`coupled_sum`]
/// in its second argument.
pub fn coupled_diff(x: f64, y: f64, kappa: f64) -> Result<f64> {
    let denom = 1.0 + kappa * y;
    ensure!(denom != 0.0, Singular, "coupled difference with 1 + k*y = 0 (k = {kappa}, y = {y})");
    Ok((x - y) / denom)
}

/// `q = 1 + alpha k / (1 + d k)`.
pub fn q_of(ctx: &CouplingContext) -> f64 {
    1.0 + risk_aversion_unchecked(ctx)
}

/// Inverse of `q = 1 + k/(1+k)` (the `alpha = 1, d = 1` case): `k = (q-1)/(2-q)`.
pub fn kappa_of_q(q: f64) -> Result<f64> {
    ensure!(q != 2.0, Singular, "q = 2 maps to infinite coupling");
    Ok((q - 1.0) / (2.0 - q))
}

/// `beta_q = (1 + k) / sigma`.
pub fn beta_q_of(sigma: f64, kappa: f64) -> Result<f64> {
    ensure!(sigma > 0.0, Domain, "scale must be positive, got {sigma}");
    Ok((1.0 + kappa) / sigma)
}

/// `sigma = (beta_q (2 - q))^-1` with `q = 1 + k/(1+k)`, which equals `(1+k)/beta_q`.
pub fn sigma_of_beta_q(beta_q: f64, kappa: f64) -> Result<f64> {
    ensure!(beta_q > 0.0, Domain, "beta_q must be positive, got {beta_q}");
    ensure!(kappa > -1.0, Domain, "kappa must exceed -1, got {kappa}");
    Ok((1.0 + kappa) / beta_q)
}

/// Information relative risk aversion `r = alpha k / (1 + d k)`.
pub fn risk_aversion(ctx: &CouplingContext) -> Result<f64> {
    if ctx.one_plus_dk() == 0.0 {
        return Err(Error::Singular(format!("1 + d*kappa = 0 at kappa = {}", ctx.kappa)));
    }
    Ok(risk_aversion_unchecked(ctx))
}

fn risk_aversion_unchecked(ctx: &CouplingContext) -> f64 {
    ctx.alpha * ctx.kappa / ctx.one_plus_dk()
}
