//! Additive plus multiplicative noise process
//!
//! ```text
//! dX = f(X) dt + A o dW_a + g(X) M o dW_m,     f = -tau g g'
//! ```
//!
//! integrated in the Stratonovich sense with a Heun predictor-corrector. For
//! `g(x) = x` the stationary law is a coupled Gaussian with
//! `k = M^2/(2 tau)` and `sigma^2 = A^2/(2 tau)`.

use std::fmt;
use std::sync::Arc;

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::distributions::CoupledDistribution;
use crate::error::{ensure, Error, Result};
use crate::util::substream;

/// Beyond this magnitude a path is declared unstable.
pub const OVERFLOW_GUARD: f64 = 1e12;

/// Function returning `(g(x), g'(x))`.
pub type CouplerFn = Arc<dyn Fn(f64) -> (f64, f64) + Send + Sync>;

/// Multiplicative coupling function `g`.
#[derive(Clone, Default)]
pub enum Coupler {
    #[default]
    Identity,
    Custom(CouplerFn),
}

impl Coupler {
    fn eval(&self, x: f64) -> (f64, f64) {
        match self {
            Coupler::Identity => (x, 1.0),
            Coupler::Custom(f) => f(x),
        }
    }
}

impl fmt::Debug for Coupler {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Coupler::Identity => f.write_str("Identity"),
            Coupler::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

/// Simulation settings. `n_steps` counts the steps kept after burn-in on
/// each path; every `thin`-th of them is retained.
#[derive(Debug, Clone)]
pub struct SdeConfig {
    pub a: f64,
    pub m: f64,
    pub tau: f64,
    pub coupler: Coupler,
    pub dt: f64,
    pub n_steps: u64,
    pub n_paths: u64,
    pub burn_in: u64,
    pub thin: u64,
    pub seed: u64,
}

/// Stationary coupled-Gaussian parameters predicted for a configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TheoryParams {
    pub kappa: f64,
    pub sigma: f64,
}

impl SdeConfig {
    /// Configuration with `g(x) = x`, burn-in `10 ceil(1/(tau dt))` and
    /// thinning `ceil(1/(tau dt))`.
    pub fn new(a: f64, m: f64, tau: f64, dt: f64, n_steps: u64, n_paths: u64, seed: u64) -> Result<Self> {
        ensure!(tau.is_finite() && tau > 0.0, Domain, "tau must be positive, got {tau}");
        ensure!(dt.is_finite() && dt > 0.0, Domain, "dt must be positive, got {dt}");
        let relax = (1.0 / (tau * dt)).ceil() as u64;
        let cfg = Self {
            a,
            m,
            tau,
            coupler: Coupler::Identity,
            dt,
            n_steps,
            n_paths,
            burn_in: 10 * relax,
            thin: relax.max(1),
            seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_burn_in(mut self, burn_in: u64) -> Self {
        self.burn_in = burn_in;
        self
    }

    pub fn with_thin(mut self, thin: u64) -> Self {
        self.thin = thin;
        self
    }

    pub fn with_coupler(mut self, coupler: Coupler) -> Self {
        self.coupler = coupler;
        self
    }

    pub fn validate(&self) -> Result<()> {
        ensure!(self.a.is_finite() && self.a > 0.0, Domain, "additive amplitude must be positive, got {}", self.a);
        ensure!(
            self.m.is_finite() && self.m >= 0.0,
            Domain,
            "multiplicative amplitude must be non-negative, got {}",
            self.m
        );
        ensure!(self.tau.is_finite() && self.tau > 0.0, Domain, "tau must be positive");
        ensure!(self.dt.is_finite() && self.dt > 0.0, Domain, "dt must be positive");
        ensure!(self.n_steps >= 1 && self.n_paths >= 1, Domain, "need at least one step and one path");
        ensure!(self.thin >= 1, Domain, "thin must be at least 1");
        ensure!(
            self.dt * (self.tau + self.m * self.m) <= 0.1,
            Unstable,
            "dt (tau + M^2) = {} exceeds 0.1",
            self.dt * (self.tau + self.m * self.m)
        );
        Ok(())
    }

    /// Retained samples per path.
    pub fn retained_per_path(&self) -> u64 {
        self.n_steps / self.thin
    }
}

/// `k = M^2/(2 tau)`, `sigma = sqrt(A^2/(2 tau))`.
pub fn theoretical_params(cfg: &SdeConfig) -> TheoryParams {
    TheoryParams {
        kappa: cfg.m * cfg.m / (2.0 * cfg.tau),
        sigma: (cfg.a * cfg.a / (2.0 * cfg.tau)).sqrt(),
    }
}

/// Stationary coupled Gaussian predicted for `cfg`.
pub fn theoretical_distribution(cfg: &SdeConfig) -> Result<CoupledDistribution> {
    let t = theoretical_params(cfg);
    CoupledDistribution::gaussian(0.0, t.sigma, t.kappa)
}

/// One Stratonovich Heun step from `x` with Brownian increments `dw_a`, `dw_m`.
pub fn heun_step(cfg: &SdeConfig, x: f64, dw_a: f64, dw_m: f64) -> f64 {
    let (g0, dg0) = cfg.coupler.eval(x);
    let f0 = -cfg.tau * g0 * dg0;
    let noise = cfg.a * dw_a;
    let pred = x + f0 * cfg.dt + noise + cfg.m * g0 * dw_m;
    let (g1, dg1) = cfg.coupler.eval(pred);
    let f1 = -cfg.tau * g1 * dg1;
    x + 0.5 * (f0 + f1) * cfg.dt + noise + 0.5 * cfg.m * (g0 + g1) * dw_m
}

/// Retained states of path `index`, started at 0 and driven by its own
/// random stream.
pub fn simulate_path(cfg: &SdeConfig, index: u64) -> Result<Vec<f64>> {
    cfg.validate()?;
    let mut rng = substream(cfg.seed, index);
    let sqrt_dt = cfg.dt.sqrt();
    let mut x = 0.0f64;
    let mut out = Vec::with_capacity(cfg.retained_per_path() as usize);
    let total = cfg.burn_in + cfg.n_steps;
    for step in 1..=total {
        let za: f64 = StandardNormal.sample(&mut rng);
        let zm: f64 = StandardNormal.sample(&mut rng);
        x = heun_step(cfg, x, sqrt_dt * za, sqrt_dt * zm);
        if !(x.abs() <= OVERFLOW_GUARD) {
            return Err(Error::Unstable(format!("path {index} left |x| <= {OVERFLOW_GUARD:e} at step {step}")));
        }
        if step > cfg.burn_in && (step - cfg.burn_in).is_multiple_of(cfg.thin) {
            out.push(x);
        }
    }
    Ok(out)
}

/// Retained states of all paths, concatenated in path order.
pub fn simulate(cfg: &SdeConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    let paths: Vec<Vec<f64>> = (0..cfg.n_paths).into_par_iter().map(|i| simulate_path(cfg, i)).collect::<Result<_>>()?;
    Ok(paths.concat())
}

/// Histogram on bins uniform in `asinh(x / s)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub centers: Vec<f64>,
    pub densities: Vec<f64>,
    pub counts: Vec<u64>,
}

fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let idx = ((sorted.len() - 1) as f64 * p).round() as usize;
    sorted[idx]
}

/// Density histogram of `samples` between the `lo` and `hi` sample quantiles,
/// with `bins` cells equally spaced in `asinh(x / s)`.
pub fn histogram(samples: &[f64], s: f64, bins: usize, lo: f64, hi: f64) -> Result<Histogram> {
    ensure!(samples.len() >= 2, Domain, "need at least two samples");
    ensure!(bins >= 1, Domain, "need at least one bin");
    ensure!(s > 0.0, Domain, "bin scale must be positive");
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let (u_lo, u_hi) = ((quantile_sorted(&sorted, lo) / s).asinh(), (quantile_sorted(&sorted, hi) / s).asinh());
    ensure!(u_hi > u_lo, Degenerate, "samples have no spread");
    let width = (u_hi - u_lo) / bins as f64;
    let mut counts = vec![0u64; bins];
    for &x in samples {
        let u = (x / s).asinh();
        if u >= u_lo && u < u_hi {
            let b = (((u - u_lo) / width) as usize).min(bins - 1);
            counts[b] += 1;
        }
    }
    let n = samples.len() as f64;
    let mut centers = Vec::with_capacity(bins);
    let mut densities = Vec::with_capacity(bins);
    for (b, &c) in counts.iter().enumerate() {
        let (a, e) = (u_lo + width * b as f64, u_lo + width * (b + 1) as f64);
        centers.push(s * (0.5 * (a + e)).sinh());
        densities.push(c as f64 / (n * s * (e.sinh() - a.sinh())));
    }
    Ok(Histogram { centers, densities, counts })
}

/// Least-squares fit of `ln p(x)` against `ln(A^2 + M^2 x^2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlopeFit {
    pub slope: f64,
    pub std_err: f64,
    pub bins_used: usize,
}

/// Minimum count for a bin to enter the slope fit.
pub const MIN_BIN_COUNT: u64 = 20;
/// Minimum number of usable bins.
pub const MIN_OCCUPIED_BINS: usize = 50;

/// Slope of the log histogram density against `ln(A^2 + M^2 g(x)^2)`;
/// theory gives `-(2 tau + M^2)/(2 M^2)`.
pub fn stationary_log_density_slope(samples: &[f64], cfg: &SdeConfig) -> Result<SlopeFit> {
    ensure!(cfg.m > 0.0, Domain, "slope fit needs M > 0");
    let h = histogram(samples, cfg.a / cfg.m, 100, 0.005, 0.995)?;
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for ((&c, &d), &n) in h.centers.iter().zip(&h.densities).zip(&h.counts) {
        if n >= MIN_BIN_COUNT {
            let g = cfg.coupler.eval(c).0;
            xs.push((cfg.a * cfg.a + cfg.m * cfg.m * g * g).ln());
            ys.push(d.ln());
        }
    }
    if xs.len() < MIN_OCCUPIED_BINS {
        return Err(Error::Coverage(format!(
            "only {} bins hold at least {MIN_BIN_COUNT} samples; need {MIN_OCCUPIED_BINS}",
            xs.len()
        )));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    ensure!(sxx > 0.0, Degenerate, "histogram abscissae do not vary");
    let slope = sxy / sxx;
    let icept = my - slope * mx;
    let ssr: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - icept - slope * x).powi(2)).sum();
    Ok(SlopeFit { slope, std_err: (ssr / (n - 2.0) / sxx).sqrt(), bins_used: xs.len() })
}

/// Theoretical slope `-(2 tau + M^2)/(2 M^2)`.
pub fn theoretical_slope(cfg: &SdeConfig) -> f64 {
    -(2.0 * cfg.tau + cfg.m * cfg.m) / (2.0 * cfg.m * cfg.m)
}

/// Largest relative deviation of `histogram / theory` from its mean over the
/// central `1 - 2 trim` of the samples.
pub fn density_ratio_spread(samples: &[f64], cfg: &SdeConfig, trim: f64) -> Result<f64> {
    let theory = theoretical_distribution(cfg)?;
    let s = if cfg.m > 0.0 { cfg.a / cfg.m } else { theoretical_params(cfg).sigma };
    let h = histogram(samples, s, 40, trim, 1.0 - trim)?;
    let ratios: Vec<f64> = h.centers.iter().zip(&h.densities).map(|(&c, &d)| d / theory.density(c)).collect();
    let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
    Ok(ratios.iter().map(|r| (r / mean - 1.0).abs()).fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn theory_examples() {
        let s2 = 2f64.sqrt();
        let cfg = |a, m, tau| SdeConfig::new(a, m, tau, 1e-3, 10, 1, 0).unwrap();
        let t = theoretical_params(&cfg(s2, s2, 1.0));
        assert!((t.kappa - 1.0).abs() < 1e-15 && (t.sigma - 1.0).abs() < 1e-15);
        let t = theoretical_params(&cfg(s2, 0.0, 1.0));
        assert!(t.kappa == 0.0 && (t.sigma - 1.0).abs() < 1e-15);
        let t = theoretical_params(&cfg(2.0, 1.0, 2.0));
        assert!((t.kappa - 0.25).abs() < 1e-15 && (t.sigma - 1.0).abs() < 1e-15);
    }

    #[test]
    fn invalid_configs() {
        assert!(matches!(SdeConfig::new(0.0, 1.0, 1.0, 1e-3, 10, 1, 0), Err(Error::Domain(_))));
        assert!(matches!(SdeConfig::new(1.0, 1.0, 1.0, 0.2, 10, 1, 0), Err(Error::Unstable(_))));
    }

    #[test]
    fn defaults_follow_relaxation_time() {
        let cfg = SdeConfig::new(1.0, 0.5, 2.0, 1e-3, 10, 1, 0).unwrap();
        assert_eq!(cfg.thin, 500);
        assert_eq!(cfg.burn_in, 5000);
    }

    #[test]
    fn deterministic_and_guarded() {
        let cfg = SdeConfig::new(1.0, 1.0, 1.0, 1e-2, 2000, 3, 5).unwrap().with_thin(10);
        let a = simulate(&cfg).unwrap();
        assert_eq!(a, simulate(&cfg).unwrap());
        assert_eq!(a.len(), 600);
        let wild = SdeConfig::new(1.0, 0.0, 1.0, 1e-2, 10, 1, 0)
            .unwrap()
            .with_coupler(Coupler::Custom(Arc::new(|x: f64| (x * x, -1e13))));
        assert!(matches!(simulate(&wild), Err(Error::Unstable(_))));
    }
}
