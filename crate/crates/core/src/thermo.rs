//! Coupled Boltzmann-Gibbs ensemble.
//!
//! State weights are `exp_k^(-(1+k))(beta E_i) = (1 + k beta E_i)^(-(1+k)/k)`;
//! the internal energy is the escort mean of the energies at order
//! `1 + k/(1+k)`.

use crate::algebra::{coupled_log_of_ln, coupled_sum, ln_coupled_exp_power, CouplingContext};
use crate::entropy::coupled_entropy_i;
use crate::error::{ensure, Error, Result};
use crate::escort::{escort_mean, ie_exponent, DiscreteDist};
use crate::util::neumaier_sum;

/// Energy levels at inverse temperature `beta` with coupling `kappa`.
#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    energies: Vec<f64>,
    beta: f64,
    kappa: f64,
}

impl Ensemble {
    pub fn new(energies: Vec<f64>, beta: f64, kappa: f64) -> Result<Self> {
        ensure!(!energies.is_empty(), Domain, "ensemble needs at least one energy level");
        ensure!(energies.iter().all(|e| e.is_finite()), Domain, "energies must be finite");
        ensure!(beta.is_finite() && beta > 0.0, Domain, "beta must be positive, got {beta}");
        ensure!(kappa.is_finite() && kappa >= 0.0, Domain, "kappa must be non-negative, got {kappa}");
        ensure!(
            energies.iter().all(|&e| 1.0 + kappa * beta * e > 0.0),
            Domain,
            "some level has 1 + k beta E <= 0"
        );
        Ok(Self { energies, beta, kappa })
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }
    pub fn beta(&self) -> f64 {
        self.beta
    }
    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    fn weights(&self) -> Vec<f64> {
        self.energies
            .iter()
            .map(|&e| ln_coupled_exp_power(self.beta * e, self.kappa, -(1.0 + self.kappa)).exp())
            .collect()
    }
}

fn sorted_sum(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    neumaier_sum(v)
}

/// `Z = sum_i exp_k^(-(1+k))(beta E_i)`.
pub fn partition_function(e: &Ensemble) -> Result<f64> {
    let z = sorted_sum(&e.weights());
    if !(z > 0.0) {
        return Err(Error::Degenerate("every Boltzmann weight underflows to zero".into()));
    }
    Ok(z)
}

/// State probabilities `exp_k^(-(1+k))(beta E_i) / Z`, in input order.
pub fn bg_probabilities(e: &Ensemble) -> Result<DiscreteDist> {
    let z = partition_function(e)?;
    DiscreteDist::from_weights(e.weights().into_iter().map(|w| w / z).collect(), 1)
}

/// Escort-weighted energy `U = sum P_i E_i` at order `1 + k/(1+k)`.
pub fn internal_energy(e: &Ensemble) -> Result<f64> {
    let p = bg_probabilities(e)?;
    escort_mean(&p, &e.energies, ie_exponent(1, e.kappa))
}

/// `|H(p) - (ln_k Z^(1/(1+k)) (+)_k beta U)|` for the ensemble's probabilities.
pub fn entropy_identity_check(e: &Ensemble) -> Result<f64> {
    let p = bg_probabilities(e)?;
    let ctx = CouplingContext::gpd(e.kappa)?;
    let lhs = coupled_entropy_i(&p, &ctx)?;
    let z = partition_function(e)?;
    let ln_term = coupled_log_of_ln(z.ln() / (1.0 + e.kappa), e.kappa);
    let rhs = coupled_sum(ln_term, e.beta * internal_energy(e)?, e.kappa);
    Ok((lhs - rhs).abs())
}

/// Escort tail level used by [`default_e_max`].
pub const CONTINUUM_TAIL: f64 = 1e-6;

/// Energy cut-off where the escort tail `(1 + k beta E)^(-(1+k)/k)` of the
/// continuous ensemble falls to [`CONTINUUM_TAIL`].
pub fn default_e_max(beta: f64, kappa: f64) -> f64 {
    let r = kappa / (1.0 + kappa);
    coupled_log_of_ln(-CONTINUUM_TAIL.ln(), r) / ((1.0 + kappa) * beta)
}

/// `|beta U - 1|` for `w` evenly spaced levels (cell midpoints) on
/// `[0, e_max]`. Errors when the escort tail beyond `e_max` is `1e-4` or more.
pub fn continuum_limit_check(beta: f64, kappa: f64, w: usize, e_max: Option<f64>) -> Result<f64> {
    ensure!(w >= 2, Domain, "need at least two levels, got {w}");
    let e_max = e_max.unwrap_or_else(|| default_e_max(beta, kappa));
    ensure!(e_max.is_finite() && e_max > 0.0, Domain, "e_max must be positive, got {e_max}");
    let tail = ln_coupled_exp_power(beta * e_max, kappa, -(1.0 + kappa)).exp();
    if tail >= 1e-4 {
        return Err(Error::Coverage(format!(
            "escort tail {tail:.3e} beyond e_max = {e_max} is not below 1e-4"
        )));
    }
    let h = e_max / w as f64;
    let levels = (0..w).map(|i| (i as f64 + 0.5) * h).collect();
    let u = internal_energy(&Ensemble::new(levels, beta, kappa)?)?;
    Ok((beta * u - 1.0).abs())
}

/// Generalized temperature `sigma / k_B`.
pub fn generalized_temperature(sigma: f64, k_b: f64) -> Result<f64> {
    ensure!(sigma > 0.0, Domain, "scale must be positive, got {sigma}");
    ensure!(k_b > 0.0, Domain, "Boltzmann constant must be positive, got {k_b}");
    Ok(sigma / k_b)
}

/// The q-statistics temperature `1/(k_B beta_q) = sigma / ((1+k) k_B)`, which
/// depends on the coupling.
pub fn q_temperature(sigma: f64, kappa: f64, k_b: f64) -> Result<f64> {
    ensure!(k_b > 0.0, Domain, "Boltzmann constant must be positive, got {k_b}");
    Ok(1.0 / (k_b * crate::algebra::beta_q_of(sigma, kappa)?))
}
