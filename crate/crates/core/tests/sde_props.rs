use coupled_entropy::algebra::CouplingContext;
use coupled_entropy::escort::ie_moment_empirical;
use coupled_entropy::sde::*;
use coupled_entropy::util::substream;
use rand_distr::{Distribution, StandardNormal};

const SQRT2: f64 = std::f64::consts::SQRT_2;

#[test]
fn additive_only_process_is_gaussian() {
    let cfg = SdeConfig::new(SQRT2, 0.0, 1.0, 1e-3, 10_000_000, 10, 21).unwrap().with_thin(100);
    let xs = simulate(&cfg).unwrap();
    assert_eq!(xs.len(), 1_000_000);
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let m2 = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    let m4 = xs.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / n;
    let excess = m4 / (m2 * m2) - 3.0;
    assert!(excess.abs() <= 0.1, "excess kurtosis {excess}");
}

#[test]
fn ie_mean_of_symmetric_process_is_zero() {
    let cfg = SdeConfig::new(SQRT2, SQRT2, 1.0, 1e-3, 1_000_000, 50, 8).unwrap().with_thin(100);
    let theory = theoretical_distribution(&cfg).unwrap();
    let ctx = CouplingContext::new(theoretical_params(&cfg).kappa, 2.0, 1).unwrap();
    // independent paths give independent estimates, so their spread yields an honest standard error
    let per_path: Vec<f64> = (0..cfg.n_paths)
        .map(|i| ie_moment_empirical(&simulate_path(&cfg, i).unwrap(), &theory, 1, &ctx).unwrap())
        .collect();
    let n = per_path.len() as f64;
    let mean = per_path.iter().sum::<f64>() / n;
    let se = (per_path.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0) / n).sqrt();
    assert!(mean.abs() <= 3.0 * se, "mean {mean} se {se}");
}

/// Runs the fine grid at `dt/2` and the coarse grid at `dt` on the same
/// Brownian paths.
fn paired_runs(dt: f64, retained: usize, paths: u64, thin_coarse: usize, seed: u64) -> (Vec<f64>, Vec<f64>) {
    let coarse_cfg = SdeConfig::new(SQRT2, SQRT2, 1.0, dt, 1, 1, seed).unwrap();
    let fine_cfg = SdeConfig::new(SQRT2, SQRT2, 1.0, dt / 2.0, 1, 1, seed).unwrap();
    let burn = 10 * (1.0 / dt).ceil() as usize;
    let h = (dt / 2.0).sqrt();
    let (mut coarse, mut fine) = (Vec::new(), Vec::new());
    for p in 0..paths {
        let mut rng = substream(seed, p);
        let (mut xc, mut xf) = (0.0, 0.0);
        for step in 1..=(burn + retained * thin_coarse) {
            let mut dw = [0.0; 4];
            for v in &mut dw {
                let z: f64 = StandardNormal.sample(&mut rng);
                *v = h * z;
            }
            xf = heun_step(&fine_cfg, xf, dw[0], dw[1]);
            xf = heun_step(&fine_cfg, xf, dw[2], dw[3]);
            xc = heun_step(&coarse_cfg, xc, dw[0] + dw[2], dw[1] + dw[3]);
            if step > burn && (step - burn).is_multiple_of(thin_coarse) {
                coarse.push(xc);
                fine.push(xf);
            }
        }
    }
    (coarse, fine)
}

#[test]
fn halving_the_step_keeps_the_slope() {
    let (coarse, fine) = paired_runs(2e-3, 50_000, 10, 50, 99);
    let cfg = SdeConfig::new(SQRT2, SQRT2, 1.0, 2e-3, 1, 1, 0).unwrap();
    let a = stationary_log_density_slope(&coarse, &cfg).unwrap();
    let b = stationary_log_density_slope(&fine, &cfg).unwrap();
    assert!((a.slope - b.slope).abs() < b.std_err, "{a:?} vs {b:?}");
}

#[test]
fn pooled_samples_ignore_path_order() {
    let cfg = SdeConfig::new(1.0, 0.8, 1.5, 1e-2, 5_000, 6, 4).unwrap().with_thin(10);
    let mut forward = simulate(&cfg).unwrap();
    let mut reversed: Vec<f64> = (0..cfg.n_paths).rev().flat_map(|i| simulate_path(&cfg, i).unwrap()).collect();
    assert_ne!(forward, reversed);
    forward.sort_by(f64::total_cmp);
    reversed.sort_by(f64::total_cmp);
    assert_eq!(forward, reversed);
}

#[test]
fn sparse_histogram_is_rejected() {
    let cfg = SdeConfig::new(SQRT2, SQRT2, 1.0, 1e-3, 1, 1, 0).unwrap();
    let few: Vec<f64> = (0..500).map(|i| f64::from(i) / 100.0 - 2.5).collect();
    assert!(matches!(stationary_log_density_slope(&few, &cfg), Err(coupled_entropy::Error::Coverage(_))));
}
