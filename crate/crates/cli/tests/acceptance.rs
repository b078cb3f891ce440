//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Criteria listed in `EXPECTED_FAILURES` make claims that the computation
//! contradicts. They are evaluated as stated and reported as FAIL; only an
//! unexpected failure makes this target exit non-zero.

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use coupled_entropy::algebra::{coupled_sum, CouplingContext};
use coupled_entropy::distributions::{gaussian_normalizer, integrate_density, score_at_scale, CoupledDistribution, FnDensity};
use coupled_entropy::entropy::{
    closed_form_entropies_gpd, coupled_entropy_i, entropy_report_continuous, extensivity_curve, normalized_tsallis, tsallis,
    EntropyReport,
};
use coupled_entropy::escort::{ie_moment, ie_moment_empirical, DiscreteDist};
use coupled_entropy::maxent::maxent_check;
use coupled_entropy::quadrature::Support;
use coupled_entropy::sde::{simulate, stationary_log_density_slope, theoretical_distribution, theoretical_slope, SdeConfig};
use coupled_entropy::thermo::{continuum_limit_check, entropy_identity_check, Ensemble};
use coupled_entropy::util::substream;
use rand::Rng;
use statrs::distribution::{Continuous, StudentsT};

const EXPECTED_FAILURES: [u32; 2] = [8, 11];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn fields(r: &EntropyReport) -> [f64; 4] {
    [r.shannon, r.tsallis, r.normalized_tsallis, r.coupled]
}

fn random_weights(rng: &mut impl Rng, len: usize) -> Vec<f64> {
    (0..len).map(|_| rng.random::<f64>() + 1e-9).collect()
}

fn closed_form_vs_quadrature() -> Outcome {
    let start = Instant::now();
    let mut worst = 0.0f64;
    for k in [0.0, 0.25, 0.5, 1.0, 2.0, 5.0] {
        for sigma in [0.5, 1.0, 2.0, std::f64::consts::E] {
            let closed = closed_form_entropies_gpd(sigma, k).unwrap();
            let d = CoupledDistribution::exponential(0.0, sigma, k).unwrap();
            let numeric = entropy_report_continuous(&d, &CouplingContext::gpd(k).unwrap()).unwrap();
            for (a, b) in fields(&closed).iter().zip(fields(&numeric)) {
                worst = worst.max((a - b).abs());
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(worst <= 1e-6 && secs < 10.0, format!("max |closed - quadrature| = {worst:.2e}, {secs:.2} s"))
}

fn chain_identity() -> Outcome {
    let mut rng = substream(2, 0);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let len = rng.random_range(2..=64);
        let w = random_weights(&mut rng, len);
        for k in [0.1, 0.5, 1.0, 3.0] {
            for d in 1..=3 {
                let ctx = CouplingContext::new(k, 1.0, d).unwrap();
                let p = DiscreteDist::from_weights(w.clone(), d).unwrap();
                let h = coupled_entropy_i(&p, &ctx).unwrap();
                let opdk = ctx.one_plus_dk();
                let via_nt = normalized_tsallis(&p, &ctx).unwrap() / opdk;
                let via_t = tsallis(&p, &ctx).unwrap() / (opdk * p.power_sum(1.0 + k / opdk));
                worst = worst.max((h - via_nt).abs()).max((h - via_t).abs());
            }
        }
    }
    outcome(worst <= 1e-12, format!("max residual {worst:.2e} over 200 distributions x 12 contexts"))
}

fn cold_hot_just_right() -> Outcome {
    let d = CoupledDistribution::exponential(0.0, 2.0, 100.0).unwrap();
    let numeric = entropy_report_continuous(&d, &CouplingContext::gpd(100.0).unwrap()).unwrap();
    let closed = closed_form_entropies_gpd(2.0, 100.0).unwrap();
    let hot_cold = [closed, numeric]
        .iter()
        .all(|r| (r.tsallis - 1.0).abs() <= 0.01 && r.normalized_tsallis >= 100.0 && (r.coupled - 2.0).abs() <= 0.01);
    let bgs = 1.0 + 2f64.ln();
    let d0 = CoupledDistribution::exponential(0.0, 2.0, 0.0).unwrap();
    let zero = [closed_form_entropies_gpd(2.0, 0.0).unwrap(), entropy_report_continuous(&d0, &CouplingContext::gpd(0.0).unwrap()).unwrap()];
    let zero_err = zero.iter().flat_map(fields).map(|v| (v - bgs).abs()).fold(0.0, f64::max);
    outcome(
        hot_cold && zero_err <= 1e-12,
        format!(
            "k=100: tsallis {:.5}, normalized {:.2}, coupled {:.5}; k=0 max |H - (1 + ln 2)| = {zero_err:.1e}",
            numeric.tsallis, numeric.normalized_tsallis, numeric.coupled
        ),
    )
}

fn scale_properties() -> Outcome {
    let mut collapse = 0.0f64;
    let families: [fn(f64, f64, f64) -> CoupledDistribution; 4] = [
        |m, s, k| CoupledDistribution::exponential(m, s, k).unwrap(),
        |m, s, k| CoupledDistribution::weibull(m, s, k).unwrap(),
        |m, s, k| CoupledDistribution::gaussian(m, s, k.max(0.0)).unwrap(),
        |m, s, k| CoupledDistribution::stretched(m, s, k.max(0.0), 1.5).unwrap(),
    ];
    for make in families {
        for k in [-0.5, 0.0, 0.5, 1.0, 3.0] {
            let reference = make(0.7, 1.0, k);
            for sigma in [0.5, 2.0, 4.0] {
                let d = make(0.7, sigma, k);
                for i in 0..50 {
                    let z = -2.0 + 0.25 * f64::from(i);
                    collapse = collapse.max((sigma * d.density(0.7 + sigma * z) - reference.density(0.7 + z)).abs());
                }
            }
        }
    }
    let mut rng = substream(4, 0);
    let mut score_err = 0.0f64;
    for _ in 0..20 {
        let sigma = 10f64.powf(rng.random_range(-1.0..1.0));
        let k = rng.random_range(-0.5..5.0);
        let d = CoupledDistribution::exponential(0.0, sigma, k).unwrap();
        score_err = score_err.max((score_at_scale(&d).unwrap() + 1.0 / sigma).abs());
    }
    outcome(
        collapse <= 1e-12 && score_err <= 1e-12,
        format!("collapse gap {collapse:.1e}, score error {score_err:.1e}"),
    )
}

fn gaussian_normalizer_checks() -> Outcome {
    let mut quad_err = 0.0f64;
    for k in [0.1, 0.5, 1.0, 2.0] {
        let kernel = FnDensity::new(Support::new(f64::NEG_INFINITY, f64::INFINITY, 0.0, 1.0), move |z: f64| {
            -(1.0 + k) / (2.0 * k) * (k * z * z).ln_1p()
        });
        let z = integrate_density(&kernel, |n, lp| n.weight(lp)).unwrap().value;
        quad_err = quad_err.max((gaussian_normalizer(1.0, k).unwrap() - z).abs() / z);
    }
    let pi_err = (gaussian_normalizer(1.0, 1.0).unwrap() - std::f64::consts::PI).abs();
    let mut t_err = 0.0f64;
    for nu in [1.0, 2.0, 4.0, 10.0] {
        let g = CoupledDistribution::gaussian(0.0, 1.0, 1.0 / nu).unwrap();
        let t = StudentsT::new(0.0, 1.0, nu).unwrap();
        for i in 0..100 {
            let x = -10.0 + 20.0 * f64::from(i) / 99.0;
            t_err = t_err.max((g.density(x) - t.pdf(x)).abs());
        }
    }
    outcome(
        quad_err <= 1e-8 && pi_err <= 1e-12 && t_err <= 1e-10,
        format!("closed vs quadrature {quad_err:.1e}, |Z - pi| {pi_err:.1e}, Student-t gap {t_err:.1e}"),
    )
}

fn ie_moments() -> Outcome {
    let mut mean_err = 0.0f64;
    let mut second_err = 0.0f64;
    for sigma in [0.5, 1.0, 2.0] {
        for k in [0.1, 0.5, 1.0, 2.0, 5.0, 10.0] {
            let d = CoupledDistribution::exponential(0.0, sigma, k).unwrap();
            mean_err = mean_err.max((ie_moment(&d, 1).unwrap() - sigma).abs());
        }
        for k in [0.1, 0.5, 1.0, 2.0] {
            let g = CoupledDistribution::gaussian(0.0, sigma, k).unwrap();
            second_err = second_err.max((ie_moment(&g, 2).unwrap() - sigma * sigma).abs());
        }
    }
    outcome(
        mean_err <= 1e-6 && second_err <= 1e-6,
        format!("exponential IE mean error {mean_err:.1e}, Gaussian IE second moment error {second_err:.1e}"),
    )
}

fn ks_statistic(samples: &mut [f64], d: &CoupledDistribution) -> f64 {
    samples.sort_by(f64::total_cmp);
    let n = samples.len() as f64;
    samples
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = d.cdf(x).unwrap();
            f64::max((i as f64 + 1.0) / n - f, f - i as f64 / n)
        })
        .fold(0.0, f64::max)
}

fn sampling() -> Outcome {
    let start = Instant::now();
    let cases = [
        (CoupledDistribution::exponential(0.0, 1.0, 0.5).unwrap(), 1.0, 11),
        (CoupledDistribution::weibull(0.0, 1.0, 0.3).unwrap(), 2.0, 12),
    ];
    let (mut ks, mut ie_rel) = (0.0f64, 0.0f64);
    for (d, alpha, seed) in &cases {
        let mut xs = d.sample(100_000, *seed).unwrap();
        let ctx = CouplingContext::new(d.kappa(), *alpha, 1).unwrap();
        for m in [1, 2] {
            let exact = ie_moment(d, m).unwrap();
            ie_rel = ie_rel.max((ie_moment_empirical(&xs, d, m, &ctx).unwrap() / exact - 1.0).abs());
        }
        ks = ks.max(ks_statistic(&mut xs, d));
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        ks <= 0.01 && ie_rel <= 0.05 && secs < 5.0,
        format!("max KS {ks:.4}, max IE moment relative error {ie_rel:.4}, {secs:.2} s"),
    )
}

fn maxent() -> Outcome {
    let mut parts = Vec::new();
    let mut positive_ok = true;
    for k in [0.25, 0.5, 1.0] {
        let r = maxent_check(1.0, k, 500, 7).unwrap();
        let res = r.stationarity_residual.unwrap_or(f64::INFINITY);
        positive_ok &= r.violations == 0 && res <= 1e-6;
        parts.push(format!("k={k}: {} increases, residual {res:.1e}", r.violations));
    }
    let r = maxent_check(1.0, -0.25, 500, 7).unwrap();
    let reversed = r.violations == 0;
    parts.push(format!(
        "k=-0.25: largest dH is {:.1e} < 0 and {}/{} decreases exceed the tolerance, so the density is still a maximum",
        r.max_delta_h, r.violations, r.trials
    ));
    outcome(positive_ok && reversed, parts.join("; "))
}

fn coupled_bg() -> Outcome {
    let mut rng = substream(9, 0);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let w = rng.random_range(2..=32);
        let energies: Vec<f64> = (0..w).map(|_| rng.random_range(0.0..10.0)).collect();
        let e = Ensemble::new(energies, rng.random_range(0.2..3.0), rng.random_range(0.0..3.0)).unwrap();
        worst = worst.max(entropy_identity_check(&e).unwrap());
    }
    let mut cont = Vec::new();
    for k in [0.0, 0.5, 2.0] {
        cont.push(continuum_limit_check(1.0, k, 100_000, None).unwrap());
    }
    let cont_max = cont.iter().copied().fold(0.0, f64::max);
    outcome(
        worst <= 1e-10 && cont_max <= 0.02,
        format!("identity residual {worst:.1e}; |beta U - 1| at W=1e5: {:.1e}, {:.1e}, {:.1e}", cont[0], cont[1], cont[2]),
    )
}

fn sde() -> Outcome {
    let start = Instant::now();
    let s2 = std::f64::consts::SQRT_2;
    let cfg = SdeConfig::new(s2, s2, 1.0, 1e-3, 20_000_000, 10, 42).unwrap().with_thin(200);
    let xs = simulate(&cfg).unwrap();
    let fit = stationary_log_density_slope(&xs, &cfg).unwrap();
    let expected = theoretical_slope(&cfg);
    let slope_rel = (fit.slope / expected - 1.0).abs();
    let limit = theoretical_distribution(&cfg).unwrap();
    let ctx = CouplingContext::new(limit.kappa(), 2.0, 1).unwrap();
    let ie2 = ie_moment_empirical(&xs, &limit, 2, &ctx).unwrap();
    let ie_rel = (ie2 / (limit.sigma() * limit.sigma()) - 1.0).abs();

    let control = SdeConfig::new(s2, 0.0, 1.0, 1e-3, 20_000_000, 10, 43).unwrap().with_thin(200);
    let ys = simulate(&control).unwrap();
    let n = ys.len() as f64;
    let mean = ys.iter().sum::<f64>() / n;
    let var = ys.iter().map(|y| (y - mean).powi(2)).sum::<f64>() / n;
    let var_rel = (var - 1.0).abs();
    let secs = start.elapsed().as_secs_f64();
    outcome(
        xs.len() >= 1_000_000 && slope_rel <= 0.1 && ie_rel <= 0.05 && var_rel <= 0.02 && secs < 60.0,
        format!(
            "{} samples; slope {:.4} vs {expected:.4}; IE second moment {ie2:.4}; control variance {var:.4}; {secs:.1} s",
            xs.len(),
            fit.slope
        ),
    )
}

fn uniform_extremes(k: f64, rng: &mut impl Rng) -> (usize, usize) {
    let ctx = CouplingContext::new(k, 1.0, 1).unwrap();
    let hu = coupled_entropy_i(&DiscreteDist::uniform(12, 1).unwrap(), &ctx).unwrap();
    let (mut above, mut below) = (0, 0);
    for _ in 0..1000 {
        let h = coupled_entropy_i(&DiscreteDist::from_weights(random_weights(rng, 12), 1).unwrap(), &ctx).unwrap();
        above += usize::from(h > hu);
        below += usize::from(h < hu);
    }
    (above, below)
}

fn property_suites() -> Outcome {
    let mut rng = substream(11, 0);
    let mut additivity = 0.0f64;
    for _ in 0..200 {
        let (a, b) = (rng.random_range(2..=8), rng.random_range(2..=8));
        let p = DiscreteDist::from_weights(random_weights(&mut rng, a), 1).unwrap();
        let r = DiscreteDist::from_weights(random_weights(&mut rng, b), 1).unwrap();
        for k in [0.5, 1.0, 2.0] {
            let ctx = CouplingContext::gpd(k).unwrap();
            let joint = coupled_entropy_i(&p.product(&r).unwrap(), &ctx).unwrap();
            let sum = coupled_sum(coupled_entropy_i(&p, &ctx).unwrap(), coupled_entropy_i(&r, &ctx).unwrap(), k);
            additivity = additivity.max((joint - sum).abs());
        }
    }
    let mut parts = vec![format!("additivity {additivity:.1e}")];
    let mut max_ok = true;
    for k in [0.0, 0.5, 1.0, 3.0] {
        max_ok &= uniform_extremes(k, &mut rng).0 == 0;
    }
    parts.push(format!("maximality for k >= 0 {}", if max_ok { "holds" } else { "broken" }));
    let mut min_ok = true;
    for k in [-0.25, -0.75] {
        let (_, below) = uniform_extremes(k, &mut rng);
        min_ok &= below == 0;
        parts.push(format!("k={k}: {below}/1000 comparators below uniform"));
    }
    let mut expand_ok = true;
    for _ in 0..100 {
        let p = DiscreteDist::from_weights(random_weights(&mut rng, 6), 1).unwrap();
        let mut padded = vec![0.0];
        padded.extend_from_slice(p.probs());
        let p0 = DiscreteDist::new(padded, 1).unwrap();
        for k in [0.0, 0.5, 2.0] {
            let ctx = CouplingContext::gpd(k).unwrap();
            expand_ok &= coupled_entropy_i(&p, &ctx).unwrap() == coupled_entropy_i(&p0, &ctx).unwrap();
        }
    }
    parts.push(format!("expandability {}", if expand_ok { "exact" } else { "broken" }));
    let ctx = CouplingContext::gpd(1.0).unwrap();
    let ext = [2u64, 4, 8, 16, 32]
        .iter()
        .map(|&n| (extensivity_curve(n, 2.0, &ctx).unwrap() - (n as f64 - 1.0)).abs())
        .fold(0.0, f64::max);
    parts.push(format!("extensivity {ext:.1e}"));
    outcome(additivity <= 1e-12 && max_ok && min_ok && expand_ok && ext <= 1e-9, parts.join("; "))
}

fn run_cli(dir: &Path, args: &[&str]) -> Vec<u8> {
    let out = Command::new(env!("CARGO_BIN_EXE_coupled"))
        .current_dir(dir)
        .args(args)
        .env_remove("COUPLED_SEED")
        .output()
        .unwrap();
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    out.stdout
}

fn snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort();
    files
}

/// Number, title and check of one acceptance criterion.
type Criterion = (u32, &'static str, fn() -> Outcome);

/// stdout of each command, then every written file by name.
type RunCapture = (Vec<Vec<u8>>, Vec<(String, Vec<u8>)>);

fn determinism() -> Outcome {
    let commands: [&[&str]; 7] = [
        &["entropy-table", "--kappa-max", "10", "--steps", "11", "--out", "table.csv"],
        &["scale-family", "--family", "gpd", "--out", "gpd.csv"],
        &["scale-family", "--family", "qexp", "--out", "qexp.csv"],
        &["sde-run", "--steps", "400000", "--paths", "4", "--thin", "20", "--out", "sde.csv"],
        &["maxent-verify", "--trials", "100", "--seed", "7", "--out", "maxent.json"],
        &["eval", "survival", "--family", "gaussian", "--kappa", "0.5", "--x", "1.3"],
        &["eval", "coupled-entropy", "--family", "weibull", "--sigma", "1.5", "--kappa", "0.4"],
    ];
    let runs: Vec<RunCapture> = (0..2)
        .map(|_| {
            let dir = tempfile::tempdir().unwrap();
            let stdout = commands.iter().map(|c| run_cli(dir.path(), c)).collect();
            (stdout, snapshot(dir.path()))
        })
        .collect();
    let same = runs[0] == runs[1];
    outcome(same, format!("{} commands, {} files compared byte for byte", commands.len(), runs[0].1.len()))
}

fn main() {
    let criteria: [Criterion; 12] = [
        (1, "closed-form entropies match quadrature", closed_form_vs_quadrature),
        (2, "entropy chain identity", chain_identity),
        (3, "too cold, too hot, just right", cold_hot_just_right),
        (4, "scale collapse and score at the scale", scale_properties),
        (5, "coupled Gaussian normalizer", gaussian_normalizer_checks),
        (6, "independent-equals moments", ie_moments),
        (7, "sampling", sampling),
        (8, "maximum entropy perturbations", maxent),
        (9, "coupled Boltzmann-Gibbs ensemble", coupled_bg),
        (10, "multiplicative-noise process", sde),
        (11, "property suites", property_suites),
        (12, "CLI determinism", determinism),
    ];
    let mut unexpected = Vec::new();
    for (id, title, check) in criteria {
        let o = check();
        let verdict = if o.pass { "PASS" } else { "FAIL" };
        println!("criterion {id:>2}: {verdict}  {title}: {}", o.detail);
        if !o.pass && !EXPECTED_FAILURES.contains(&id) {
            unexpected.push(id);
        }
    }
    if !unexpected.is_empty() {
        eprintln!("unexpected failures: {unexpected:?}");
        std::process::exit(1);
    }
}
