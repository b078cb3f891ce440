use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde::Serialize;

use coupled_entropy::algebra::{coupled_exp, coupled_log, kappa_of_q, q_of, risk_aversion, CouplingContext};
use coupled_entropy::distributions::{CoupledDistribution, Family};
use coupled_entropy::entropy::{closed_form_entropies_gpd, entropy_report_continuous, EntropyReport};
use coupled_entropy::escort::{ie_moment, ie_moment_empirical};
use coupled_entropy::maxent::maxent_check;
use coupled_entropy::sde::{
    histogram, simulate, stationary_log_density_slope, theoretical_distribution, theoretical_params, theoretical_slope,
    SdeConfig,
};

use crate::output::{sig12, to_csv, to_json, Outputs, SCHEMA_VERSION};
use crate::{CliError, Result};

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn cell(v: f64) -> String {
    format!("{v}")
}

#[derive(Debug, Args, Serialize)]
pub struct EntropyTableArgs {
    #[arg(long, default_value_t = 0.0)]
    pub kappa_min: f64,
    #[arg(long, default_value_t = 5.0)]
    pub kappa_max: f64,
    #[arg(long, default_value_t = 51)]
    pub steps: usize,
    #[arg(long, default_value_t = 2.0)]
    pub sigma: f64,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn entropy_table(a: &EntropyTableArgs) -> Result<()> {
    if !(a.kappa_min >= 0.0 && a.kappa_min < a.kappa_max) {
        return Err(usage("need 0 <= kappa-min < kappa-max"));
    }
    if a.steps < 2 {
        return Err(usage("need at least two steps"));
    }
    let mut rows = Vec::with_capacity(a.steps);
    for i in 0..a.steps {
        let k = if i + 1 == a.steps {
            a.kappa_max
        } else {
            a.kappa_min + (a.kappa_max - a.kappa_min) * i as f64 / (a.steps - 1) as f64
        };
        let closed = closed_form_entropies_gpd(a.sigma, k)?;
        let dist = CoupledDistribution::exponential(0.0, a.sigma, k)?;
        let numeric = entropy_report_continuous(&dist, &CouplingContext::gpd(k)?)?;
        let cells = |r: &EntropyReport| [r.shannon, r.tsallis, r.normalized_tsallis, r.coupled].map(cell);
        let mut row = vec![cell(k)];
        row.extend(cells(&closed));
        row.extend(cells(&numeric));
        rows.push(row);
    }
    let header = [
        "kappa",
        "shannon",
        "tsallis",
        "normalized_tsallis",
        "coupled",
        "shannon_numeric",
        "tsallis_numeric",
        "normalized_tsallis_numeric",
        "coupled_numeric",
    ];
    let mut out = Outputs::new();
    out.add(&a.out, to_csv(&header, &rows)?);
    out.write("entropy-table", a, None)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CurveFamily {
    /// Coupled exponential with scale sigma
    Gpd,
    /// q-exponential with rate beta_q = 1/scale
    Qexp,
}

#[derive(Debug, Args, Serialize)]
pub struct ScaleFamilyArgs {
    #[arg(long, value_enum, default_value_t = CurveFamily::Gpd)]
    pub family: CurveFamily,
    #[arg(long, value_delimiter = ',', default_values_t = vec![0.5, 1.0, 2.0])]
    pub scales: Vec<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub kappa: f64,
    #[arg(long, default_value_t = 0.0)]
    pub mu: f64,
    #[arg(long, default_value_t = 201)]
    pub points: usize,
    /// Largest normalized abscissa
    #[arg(long, default_value_t = 10.0)]
    pub z_max: f64,
    #[arg(long)]
    pub out: PathBuf,
}

/// Curve for one listed scale `s`. For `gpd` the density is the coupled
/// exponential with scale `s`; for `qexp` it is the q-exponential with
/// `beta_q = 1/s`, i.e. the coupled exponential with scale `(1+k) s`.
/// Either way the curve is normalized by `s`.
fn curve_distribution(family: CurveFamily, mu: f64, s: f64, kappa: f64) -> Result<CoupledDistribution> {
    let sigma = match family {
        CurveFamily::Gpd => s,
        CurveFamily::Qexp => (1.0 + kappa) * s,
    };
    Ok(CoupledDistribution::exponential(mu, sigma, kappa)?)
}

pub fn scale_family(a: &ScaleFamilyArgs) -> Result<()> {
    if a.scales.is_empty() || a.scales.iter().any(|&s| !(s > 0.0 && s.is_finite())) {
        return Err(usage("scales must be positive"));
    }
    if a.points < 2 || !(a.z_max > 0.0) {
        return Err(usage("need at least two points and a positive z-max"));
    }
    let family_name = match a.family {
        CurveFamily::Gpd => "gpd",
        CurveFamily::Qexp => "qexp",
    };
    let s_max = a.scales.iter().copied().fold(0.0, f64::max);
    let mut rows = Vec::new();
    for &s in &a.scales {
        let d = curve_distribution(a.family, a.mu, s, a.kappa)?;
        for i in 0..a.points {
            let t = i as f64 / (a.points - 1) as f64;
            let x = a.mu + t * a.z_max * s_max;
            let z = t * a.z_max;
            let xz = a.mu + s * z;
            let score = if xz < d.upper_endpoint() { -s * d.score(xz)? } else { f64::NAN };
            rows.push(vec![
                family_name.to_string(),
                cell(a.kappa),
                cell(s),
                cell(x),
                cell(d.density(x)),
                cell(z),
                cell(s * d.density(xz)),
                cell(score),
            ]);
        }
    }
    let header = ["family", "kappa", "scale", "x", "pdf", "z", "scaled_pdf", "scaled_score"];
    let mut out = Outputs::new();
    out.add(&a.out, to_csv(&header, &rows)?);
    out.write("scale-family", a, None)
}

#[derive(Debug, Args, Serialize)]
pub struct SdeRunArgs {
    /// Additive noise amplitude
    #[arg(long, default_value_t = std::f64::consts::SQRT_2)]
    pub a: f64,
    /// Multiplicative noise amplitude
    #[arg(long, default_value_t = std::f64::consts::SQRT_2)]
    pub m: f64,
    #[arg(long, default_value_t = 1.0)]
    pub tau: f64,
    #[arg(long, default_value_t = 1e-3)]
    pub dt: f64,
    /// Steps per path after burn-in
    #[arg(long, default_value_t = 5_000_000)]
    pub steps: u64,
    #[arg(long, default_value_t = 16)]
    pub paths: u64,
    /// Defaults to ten relaxation times
    #[arg(long)]
    pub burn_in: Option<u64>,
    /// Defaults to one relaxation time
    #[arg(long)]
    pub thin: Option<u64>,
    #[arg(long, default_value_t = 100)]
    pub bins: usize,
    #[arg(long, env = "COUPLED_SEED", default_value_t = 42)]
    pub seed: u64,
    /// Histogram CSV; the JSON report goes next to it with extension `.json`
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Serialize)]
struct SlopeReport {
    slope: f64,
    std_err: f64,
    expected: f64,
    bins_used: usize,
}

#[derive(Debug, Serialize)]
struct IeErrors {
    first_moment: f64,
    second_moment_relative: f64,
}

#[derive(Debug, Serialize)]
struct SdeReport {
    schema: u32,
    kappa_theory: f64,
    sigma_theory: f64,
    samples: usize,
    sample_variance: f64,
    slope_fit: Option<SlopeReport>,
    ie_moment_errors: IeErrors,
}

fn report_path(out: &Path) -> PathBuf {
    out.with_extension("json")
}

pub fn sde_run(a: &SdeRunArgs) -> Result<()> {
    if a.bins < 2 {
        return Err(usage("need at least two bins"));
    }
    let mut cfg = SdeConfig::new(a.a, a.m, a.tau, a.dt, a.steps, a.paths, a.seed)?;
    if let Some(b) = a.burn_in {
        cfg = cfg.with_burn_in(b);
    }
    if let Some(t) = a.thin {
        cfg = cfg.with_thin(t);
    }
    cfg.validate()?;
    let xs = simulate(&cfg)?;
    let theory = theoretical_params(&cfg);
    let limit = theoretical_distribution(&cfg)?;
    let bin_scale = if cfg.m > 0.0 { cfg.a / cfg.m } else { theory.sigma };
    let h = histogram(&xs, bin_scale, a.bins, 0.005, 0.995)?;
    let rows: Vec<Vec<String>> = h
        .centers
        .iter()
        .zip(&h.densities)
        .map(|(&c, &d)| vec![cell(c), cell(d), cell(limit.density(c))])
        .collect();

    let slope_fit = if cfg.m > 0.0 {
        let fit = stationary_log_density_slope(&xs, &cfg)?;
        Some(SlopeReport { slope: fit.slope, std_err: fit.std_err, expected: theoretical_slope(&cfg), bins_used: fit.bins_used })
    } else {
        None
    };
    let ctx = CouplingContext::new(theory.kappa, 2.0, 1)?;
    let ie1 = ie_moment_empirical(&xs, &limit, 1, &ctx)?;
    let ie2 = ie_moment_empirical(&xs, &limit, 2, &ctx)?;
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let report = SdeReport {
        schema: SCHEMA_VERSION,
        kappa_theory: theory.kappa,
        sigma_theory: theory.sigma,
        samples: xs.len(),
        sample_variance: xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n,
        slope_fit,
        ie_moment_errors: IeErrors {
            first_moment: ie1.abs(),
            second_moment_relative: (ie2 / (theory.sigma * theory.sigma) - 1.0).abs(),
        },
    };
    let mut out = Outputs::new();
    out.add(&a.out, to_csv(&["bin_center", "density", "theory_density"], &rows)?);
    out.add(&report_path(&a.out), to_json(&report)?);
    out.write("sde-run", a, Some(a.seed))
}

#[derive(Debug, Args, Serialize)]
pub struct MaxentArgs {
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    #[arg(long, default_value_t = 0.5)]
    pub kappa: f64,
    #[arg(long, default_value_t = 500)]
    pub trials: usize,
    #[arg(long, env = "COUPLED_SEED", default_value_t = 42)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Serialize)]
struct MaxentJson {
    schema: u32,
    sigma: f64,
    kappa: f64,
    trials: usize,
    violations: usize,
    #[serde(rename = "max_delta_H")]
    max_delta_h: f64,
    #[serde(rename = "min_delta_H")]
    min_delta_h: f64,
    max_constraint_error: f64,
    stationarity_residual: Option<f64>,
    entropy: f64,
}

pub fn maxent_verify(a: &MaxentArgs) -> Result<()> {
    let r = maxent_check(a.sigma, a.kappa, a.trials, a.seed)?;
    let json = MaxentJson {
        schema: SCHEMA_VERSION,
        sigma: r.sigma,
        kappa: r.kappa,
        trials: r.trials,
        violations: r.violations,
        max_delta_h: r.max_delta_h,
        min_delta_h: r.min_delta_h,
        max_constraint_error: r.max_constraint_error,
        stationarity_residual: r.stationarity_residual,
        entropy: r.entropy,
    };
    let mut out = Outputs::new();
    out.add(&a.out, to_json(&json)?);
    out.write("maxent-verify", a, Some(a.seed))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Quantity {
    Density,
    Survival,
    Cdf,
    Quantile,
    Score,
    IeMoment,
    Shannon,
    Tsallis,
    NormalizedTsallis,
    CoupledEntropy,
    QOf,
    KappaOfQ,
    RiskAversion,
    CoupledExp,
    CoupledLog,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EvalFamily {
    Gpd,
    Weibull,
    Gaussian,
    Stretched,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    pub quantity: Quantity,
    #[arg(long, value_enum, default_value_t = EvalFamily::Gpd)]
    pub family: EvalFamily,
    #[arg(long, default_value_t = 0.0)]
    pub mu: f64,
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    #[arg(long, default_value_t = 0.0)]
    pub kappa: f64,
    /// Shape; also used by q-of and risk-aversion
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long, default_value_t = 1)]
    pub dim: u32,
    /// Point of evaluation, or the argument of coupled-exp / coupled-log
    #[arg(long)]
    pub x: Option<f64>,
    /// Survival level for quantile
    #[arg(long)]
    pub u: Option<f64>,
    #[arg(long)]
    pub q: Option<f64>,
    /// Moment order for ie-moment
    #[arg(long, default_value_t = 1)]
    pub order: u32,
}

fn need(v: Option<f64>, flag: &str) -> Result<f64> {
    v.ok_or_else(|| usage(format!("this quantity needs --{flag}")))
}

fn eval_distribution(a: &EvalArgs) -> Result<CoupledDistribution> {
    let family = match a.family {
        EvalFamily::Gpd => Family::Exponential,
        EvalFamily::Weibull => Family::Weibull,
        EvalFamily::Gaussian => Family::Gaussian,
        EvalFamily::Stretched => Family::Stretched { alpha: need(a.alpha, "alpha")? },
    };
    Ok(CoupledDistribution::new(family, a.mu, a.sigma, a.kappa)?)
}

fn eval_entropies(a: &EvalArgs) -> Result<EntropyReport> {
    if a.family == EvalFamily::Gpd && a.dim == 1 && a.alpha.unwrap_or(1.0) == 1.0 {
        return Ok(closed_form_entropies_gpd(a.sigma, a.kappa)?);
    }
    let d = eval_distribution(a)?;
    let ctx = CouplingContext::new(a.kappa, a.alpha.unwrap_or(d.alpha()), a.dim)?;
    Ok(entropy_report_continuous(&d, &ctx)?)
}

pub fn eval(a: &EvalArgs) -> Result<()> {
    let value = match a.quantity {
        Quantity::Density => eval_distribution(a)?.density(need(a.x, "x")?),
        Quantity::Survival => eval_distribution(a)?.survival(need(a.x, "x")?)?,
        Quantity::Cdf => eval_distribution(a)?.cdf(need(a.x, "x")?)?,
        Quantity::Quantile => eval_distribution(a)?.quantile(need(a.u, "u")?)?,
        Quantity::Score => eval_distribution(a)?.score(need(a.x, "x")?)?,
        Quantity::IeMoment => ie_moment(&eval_distribution(a)?, a.order)?,
        Quantity::Shannon => eval_entropies(a)?.shannon,
        Quantity::Tsallis => eval_entropies(a)?.tsallis,
        Quantity::NormalizedTsallis => eval_entropies(a)?.normalized_tsallis,
        Quantity::CoupledEntropy => eval_entropies(a)?.coupled,
        Quantity::QOf => q_of(&CouplingContext::new(a.kappa, a.alpha.unwrap_or(1.0), a.dim)?),
        Quantity::KappaOfQ => kappa_of_q(need(a.q, "q")?)?,
        Quantity::RiskAversion => risk_aversion(&CouplingContext::new(a.kappa, a.alpha.unwrap_or(1.0), a.dim)?)?,
        Quantity::CoupledExp => coupled_exp(need(a.x, "x")?, a.kappa),
        Quantity::CoupledLog => coupled_log(need(a.x, "x")?, a.kappa)?,
    };
    println!("{}", sig12(value));
    Ok(())
}
