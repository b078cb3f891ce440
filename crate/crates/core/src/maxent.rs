//! Numerical check that the coupled exponential maximizes the Type I coupled
//! entropy under normalization and independent-equals mean constraints.

use rand::Rng;
use rayon::prelude::*;

use crate::algebra::CouplingContext;
use crate::distributions::{CoupledDistribution, Density, Family};
use crate::entropy::coupled_entropy_i;
use crate::error::{ensure, Error, Result};
use crate::escort::{escort_density, escort_mean, ie_exponent, moment_of, DiscreteDist};
use crate::quadrature::{integrate_over, Tolerance};
use crate::util::{neumaier_sum, substream};

/// Escort normalizer `Z_P = int p^((1+2k)/(1+k))` and first-moment numerator
/// `N_P = int x p^((1+2k)/(1+k))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstraintStats {
    pub z_p: f64,
    pub n_p: f64,
}

/// Lagrange multipliers of the normalization (`lambda0`) and the
/// independent-equals mean (`lambda1`) constraints.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MultiplierPair {
    pub lambda0: f64,
    pub lambda1: f64,
}

/// Closed-form constraint statistics of the coupled exponential at `mu = 0`.
pub fn constraint_stats(sigma: f64, kappa: f64) -> Result<ConstraintStats> {
    ensure!(sigma > 0.0, Domain, "scale must be positive, got {sigma}");
    ensure!(kappa > -1.0, Domain, "coupling must exceed -1, got {kappa}");
    let r = kappa / (1.0 + kappa);
    Ok(ConstraintStats {
        z_p: sigma.powf(-r) / (1.0 + kappa),
        n_p: sigma.powf(1.0 / (1.0 + kappa)) / (1.0 + kappa),
    })
}

/// Constraint statistics of the coupled exponential by quadrature.
pub fn constraint_stats_quadrature(sigma: f64, kappa: f64) -> Result<ConstraintStats> {
    let d = CoupledDistribution::exponential(0.0, sigma, kappa)?;
    let escort = escort_density(&d, ie_exponent(1, kappa))?;
    let z_p = escort.normalizer();
    Ok(ConstraintStats { z_p, n_p: z_p * moment_of(&escort, 1)? })
}

/// Multipliers that make the coupled exponential stationary.
pub fn multipliers(sigma: f64, kappa: f64) -> Result<MultiplierPair> {
    ensure!(sigma > 0.0, Domain, "scale must be positive, got {sigma}");
    ensure!(kappa > 0.0, Domain, "multipliers are defined for kappa > 0, got {kappa}");
    Ok(MultiplierPair {
        lambda0: -((1.0 + 2.0 * kappa) / kappa) * sigma.powf(kappa / (1.0 + kappa)),
        lambda1: sigma.powf(-1.0 / (1.0 + kappa)),
    })
}

/// Sup-norm over `grid` of the functional derivative of the Lagrangian,
/// evaluated at the coupled exponential with closed-form `Z_P`, `N_P` and
/// multipliers. Zero up to rounding.
pub fn stationarity_residual(sigma: f64, kappa: f64, grid: &[f64]) -> Result<f64> {
    let stats = constraint_stats(sigma, kappa)?;
    let m = multipliers(sigma, kappa)?;
    let d = CoupledDistribution::exponential(0.0, sigma, kappa)?;
    let c = (1.0 + 2.0 * kappa) / (1.0 + kappa);
    let r = kappa / (1.0 + kappa);
    let z2 = stats.z_p * stats.z_p;
    let mut worst = 0.0f64;
    for &y in grid {
        ensure!(y >= 0.0, Domain, "grid point {y} lies outside the support");
        let pr = (r * d.ln_pdf(y)).exp();
        let entropy_term = -(c / kappa) * pr / z2;
        let mean_term = -m.lambda1 * c * pr * (y * stats.z_p - stats.n_p) / z2;
        worst = worst.max((entropy_term - m.lambda0 + mean_term).abs());
    }
    Ok(worst)
}

/// A distribution discretized on uniform cells.
#[derive(Debug, Clone, PartialEq)]
pub struct Discretization {
    pub dist: DiscreteDist,
    /// Representative point of each cell.
    pub grid: Vec<f64>,
    /// Cell boundaries (`grid.len() + 1` values).
    pub edges: Vec<f64>,
    /// Base probability beyond the last edge, before renormalization.
    pub tail_mass: f64,
}

fn representative_point(dist: &CoupledDistribution, a: f64, b: f64, cell_mass: f64) -> f64 {
    let mid = 0.5 * (a + b);
    if dist.family() != Family::Exponential || !(cell_mass > 0.0) {
        return mid;
    }
    // Point where the density equals its cell average.
    let k = dist.kappa();
    let ln_sf = (dist.sigma() * cell_mass / (b - a)).ln();
    let z = crate::algebra::coupled_log_of_ln(-ln_sf, k / (1.0 + k)) / (1.0 + k);
    let x = dist.mu() + dist.sigma() * z;
    if x.is_finite() && x >= a && x <= b {
        x
    } else {
        mid
    }
}

/// Discretizes `dist` on `n_points` uniform cells over `[lo, hi]`.
pub fn discretize_range(dist: &CoupledDistribution, lo: f64, hi: f64, n_points: usize) -> Result<Discretization> {
    ensure!(n_points >= 16, Domain, "need at least 16 cells, got {n_points}");
    ensure!(lo.is_finite() && hi.is_finite() && hi > lo, Domain, "invalid range [{lo}, {hi}]");
    let h = (hi - lo) / n_points as f64;
    let edges: Vec<f64> = (0..=n_points).map(|i| lo + h * i as f64).collect();
    let surv: Vec<f64> = edges.iter().map(|&e| dist.survival(e)).collect::<Result<_>>()?;
    let raw: Vec<f64> = surv.windows(2).map(|w| (w[0] - w[1]).max(0.0)).collect();
    let grid = edges
        .windows(2)
        .zip(&raw)
        .map(|(w, &m)| representative_point(dist, w[0], w[1], m))
        .collect();
    let tail_mass = surv[n_points];
    let dist = DiscreteDist::from_weights(raw, 1)?;
    Ok(Discretization { dist, grid, edges, tail_mass })
}

/// Discretizes a one-sided member of the family from its location up to the
/// survival level `1 - coverage`, checking that the independent-equals
/// escort leaves less than `1 - coverage` beyond the grid.
pub fn discretize(dist: &CoupledDistribution, n_points: usize, coverage: f64) -> Result<Discretization> {
    ensure!(coverage > 0.0 && coverage < 1.0, Domain, "coverage must lie in (0, 1), got {coverage}");
    ensure!(
        dist.family() != Family::Gaussian,
        Unsupported,
        "discretization is provided for one-sided families"
    );
    // Aim slightly past the required level so equal tails still fall short.
    let level = 0.99 * (1.0 - coverage);
    let level = if dist.family() == Family::Exponential {
        // The escort survival of the coupled exponential is S^(1+k).
        level.min(level.powf(1.0 / (1.0 + dist.kappa())))
    } else {
        level
    };
    let end = dist.quantile(level)?;
    if !(end.is_finite() && end > dist.mu()) {
        return Err(Error::Coverage(format!("no finite grid end reaches coverage {coverage}")));
    }
    let q = ie_exponent(1, dist.kappa());
    let escort_tail = if dist.family() == Family::Exponential {
        dist.survival(end)?.powf(1.0 + dist.kappa())
    } else {
        let escort = escort_density(dist, q)?;
        integrate_over(&escort.support(), end, |n| n.weight(escort.ln_pdf_node(n)), Tolerance::default())?.value
    };
    if escort_tail >= 1.0 - coverage {
        return Err(Error::Coverage(format!(
            "escort mass {escort_tail:.3e} beyond x = {end} exceeds {:.3e}",
            1.0 - coverage
        )));
    }
    discretize_range(dist, dist.mu(), end, n_points)
}

/// Escort mean of order `1 + k/(1+k)` over `grid`.
pub fn ie_mean(p: &DiscreteDist, grid: &[f64], kappa: f64) -> Result<f64> {
    escort_mean(p, grid, ie_exponent(1, kappa))
}

fn tilted(p: &[f64], grid: &[f64], t: f64) -> Vec<f64> {
    let ln_w: Vec<f64> = p
        .iter()
        .zip(grid)
        .map(|(&pi, &x)| if pi > 0.0 { pi.ln() + t * x } else { f64::NEG_INFINITY })
        .collect();
    let max = ln_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = ln_w.iter().map(|&l| (l - max).exp()).collect();
    let total = neumaier_sum(w.iter().copied());
    w.into_iter().map(|v| v / total).collect()
}

/// Random feasible neighbour of `p`: a multiplicative perturbation of
/// total-variation size about `magnitude`, followed by the exponential tilt
/// that restores the independent-equals mean `target`.
pub fn feasible_perturbation(
    p: &DiscreteDist,
    grid: &[f64],
    target: f64,
    magnitude: f64,
    kappa: f64,
    seed: u64,
) -> Result<DiscreteDist> {
    if grid.len() != p.len() {
        return Err(Error::LengthMismatch(grid.len(), p.len()));
    }
    ensure!((0.0..=0.1).contains(&magnitude), Domain, "magnitude must lie in [0, 0.1], got {magnitude}");
    if magnitude == 0.0 {
        return Ok(p.clone());
    }
    let q = ie_exponent(1, kappa);
    let mut rng = substream(seed, 0);
    let v: Vec<f64> = (0..p.len()).map(|_| rng.random_range(-1.0..=1.0)).collect();
    let spread = 0.5 * neumaier_sum(p.probs().iter().zip(&v).map(|(pi, vi)| pi * vi.abs()));
    let eps = (magnitude / spread.max(f64::MIN_POSITIVE)).min(0.5);
    let base: Vec<f64> = p.probs().iter().zip(&v).map(|(pi, vi)| pi * (1.0 + eps * vi)).collect();
    let base = DiscreteDist::from_weights(base, p.dim())?;

    let mean_at = |t: f64| -> Result<f64> {
        let d = DiscreteDist::new(tilted(base.probs(), grid, t), p.dim())?;
        escort_mean(&d, grid, q)
    };
    let span = grid.iter().copied().fold(0.0f64, |a, x| a.max(x.abs())).max(f64::MIN_POSITIVE);
    let (mut lo, mut hi) = (-1e-3 / span, 1e-3 / span);
    let mut iterations = 0;
    while mean_at(lo)? > target {
        lo *= 2.0;
        iterations += 1;
        if iterations > 100 {
            return Err(Error::Projection("could not bracket the tilt from below".into()));
        }
    }
    while mean_at(hi)? < target {
        hi *= 2.0;
        iterations += 1;
        if iterations > 100 {
            return Err(Error::Projection("could not bracket the tilt from above".into()));
        }
    }
    let mut iterations = 0;
    loop {
        let mid = 0.5 * (lo + hi);
        let m = mean_at(mid)?;
        if (m - target).abs() <= 1e-14 * target.abs().max(1.0) || mid == lo || mid == hi {
            return DiscreteDist::new(tilted(base.probs(), grid, mid), p.dim());
        }
        if m < target {
            lo = mid;
        } else {
            hi = mid;
        }
        iterations += 1;
        if iterations >= 100 {
            return Err(Error::Projection(format!("tilt did not converge; residual {:.3e}", m - target)));
        }
    }
}

/// `H(p') - H(p)` for the Type I coupled entropy, evaluated from per-state
/// ratios so that tiny differences keep their precision.
pub fn coupled_entropy_delta(p: &DiscreteDist, p_new: &DiscreteDist, kappa: f64) -> Result<f64> {
    if p.len() != p_new.len() {
        return Err(Error::LengthMismatch(p.len(), p_new.len()));
    }
    if kappa == 0.0 {
        let terms = p.probs().iter().zip(p_new.probs()).map(|(&a, &b)| {
            let ha = if a > 0.0 { a * a.ln() } else { 0.0 };
            let hb = if b > 0.0 { b * b.ln() } else { 0.0 };
            ha - hb
        });
        return Ok(neumaier_sum(terms));
    }
    let q = ie_exponent(1, kappa);
    let s = p.power_sum(q);
    let s_new = p_new.power_sum(q);
    let ds = neumaier_sum(p.probs().iter().zip(p_new.probs()).map(|(&a, &b)| {
        if a > 0.0 && b > 0.0 {
            a.powf(q) * (q * (b / a).ln()).exp_m1()
        } else {
            b.powf(q) - a.powf(q)
        }
    }));
    Ok(-ds / (kappa * s * s_new))
}

/// Outcome of a batch of perturbation trials.
#[derive(Debug, Clone, PartialEq)]
pub struct MaxentReport {
    pub sigma: f64,
    pub kappa: f64,
    pub trials: usize,
    /// Trials that moved the entropy the wrong way by more than the tolerance:
    /// up for `k >= 0`, down for `k < 0`.
    pub violations: usize,
    pub max_delta_h: f64,
    pub min_delta_h: f64,
    pub max_constraint_error: f64,
    pub stationarity_residual: Option<f64>,
    pub entropy: f64,
}

/// Entropy tolerance for counting a violation.
pub const VIOLATION_TOLERANCE: f64 = 1e-9;

/// Settings of [`maxent_check_with`].
#[derive(Debug, Clone, Copy)]
pub struct MaxentSettings {
    pub n_points: usize,
    pub coverage: f64,
    pub min_magnitude: f64,
    pub max_magnitude: f64,
}

impl Default for MaxentSettings {
    fn default() -> Self {
        Self { n_points: 2000, coverage: 0.9999, min_magnitude: 1e-6, max_magnitude: 1e-3 }
    }
}

/// Perturbs the discretized coupled exponential `n_trials` times and counts
/// entropy changes that contradict maximality (minimality for `k < 0`).
pub fn maxent_check(sigma: f64, kappa: f64, n_trials: usize, seed: u64) -> Result<MaxentReport> {
    maxent_check_with(sigma, kappa, n_trials, seed, MaxentSettings::default())
}

pub fn maxent_check_with(
    sigma: f64,
    kappa: f64,
    n_trials: usize,
    seed: u64,
    settings: MaxentSettings,
) -> Result<MaxentReport> {
    ensure!(n_trials >= 1, Domain, "need at least one trial");
    ensure!(
        settings.min_magnitude > 0.0 && settings.min_magnitude <= settings.max_magnitude,
        Domain,
        "invalid magnitude range"
    );
    let base = CoupledDistribution::exponential(0.0, sigma, kappa)?;
    let disc = discretize(&base, settings.n_points, settings.coverage)?;
    let target = ie_mean(&disc.dist, &disc.grid, kappa)?;
    let ctx = CouplingContext::gpd(kappa)?;
    let entropy = coupled_entropy_i(&disc.dist, &ctx)?;
    let (ln_lo, ln_hi) = (settings.min_magnitude.ln(), settings.max_magnitude.ln());

    let outcomes: Vec<(f64, f64)> = (0..n_trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = substream(seed, u64::MAX - trial as u64);
            let magnitude = (ln_lo + (ln_hi - ln_lo) * rng.random::<f64>()).exp();
            let trial_seed = rng.random::<u64>();
            let p_new = feasible_perturbation(&disc.dist, &disc.grid, target, magnitude, kappa, trial_seed)?;
            let err = (ie_mean(&p_new, &disc.grid, kappa)? - target).abs();
            Ok((coupled_entropy_delta(&disc.dist, &p_new, kappa)?, err))
        })
        .collect::<Result<_>>()?;

    let violates = |dh: f64| if kappa >= 0.0 { dh > VIOLATION_TOLERANCE } else { dh < -VIOLATION_TOLERANCE };
    let stationarity_residual = if kappa > 0.0 { Some(stationarity_residual(sigma, kappa, &disc.grid)?) } else { None };
    Ok(MaxentReport {
        sigma,
        kappa,
        trials: n_trials,
        violations: outcomes.iter().filter(|(dh, _)| violates(*dh)).count(),
        max_delta_h: outcomes.iter().map(|o| o.0).fold(f64::NEG_INFINITY, f64::max),
        min_delta_h: outcomes.iter().map(|o| o.0).fold(f64::INFINITY, f64::min),
        max_constraint_error: outcomes.iter().map(|o| o.1).fold(0.0, f64::max),
        stationarity_residual,
        entropy,
    })
}
