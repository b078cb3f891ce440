//! Shannon, Tsallis, normalized Tsallis and coupled entropies, with cross
//! entropy, divergences and the coupled free energy.
//!
//! All generalized entropies are evaluated through two quantities,
//! `T_r = -sum p ln_r(p)` and `S_r = sum p^(1+r)`, where `r = a k/(1 + d k)`:
//!
//! ```text
//! Tsallis            = T_r
//! normalized Tsallis = T_r / S_r
//! coupled (I, III)   = T_r / ((1 + d k) S_r)
//! ```
//!
//! `ln_r(p)` is evaluated as `expm1(r ln p)/r`, which is free of cancellation
//! and tends to `ln p` as `r -> 0`.

use crate::algebra::{coupled_log_of_ln, CouplingContext};
use crate::distributions::{integrate_density, Density};
use crate::error::{ensure, Error, Result};
use crate::escort::{escort_discrete, DiscreteDist};
use crate::util::neumaier_sum;

/// Four entropies of one distribution, in nats.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntropyReport {
    pub shannon: f64,
    pub tsallis: f64,
    pub normalized_tsallis: f64,
    pub coupled: f64,
}

/// Divergence variant: difference of entropies or coupled difference.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DivergenceForm {
    I,
    II,
}

fn check_dims(dist: &DiscreteDist, ctx: &CouplingContext) -> Result<()> {
    ensure!(
        dist.dim() == ctx.dim,
        Domain,
        "distribution dimension {} differs from context dimension {}",
        dist.dim(),
        ctx.dim
    );
    ctx.require_escort_range()
}

/// `(T_r, S_r)` for a discrete distribution.
fn discrete_parts(dist: &DiscreteDist, r: f64) -> (f64, f64) {
    let nz = || dist.probs().iter().copied().filter(|&p| p > 0.0);
    let t = -neumaier_sum(nz().map(|p| p * coupled_log_of_ln(p.ln(), r)));
    let s = neumaier_sum(nz().map(|p| (p.ln() * (1.0 + r)).exp()));
    (t, s)
}

/// `-sum p ln p`.
pub fn shannon(dist: &DiscreteDist) -> f64 {
    -neumaier_sum(dist.probs().iter().filter(|&&p| p > 0.0).map(|&p| p * p.ln()))
}

/// Tsallis entropy `((1 + d k)/(a k)) (1 - sum p^q)` with `q = 1 + a k/(1 + d k)`.
pub fn tsallis(dist: &DiscreteDist, ctx: &CouplingContext) -> Result<f64> {
    check_dims(dist, ctx)?;
    Ok(discrete_parts(dist, crate::algebra::risk_aversion(ctx)?).0)
}

/// Tsallis entropy divided by `sum p^q`.
pub fn normalized_tsallis(dist: &DiscreteDist, ctx: &CouplingContext) -> Result<f64> {
    check_dims(dist, ctx)?;
    let (t, s) = discrete_parts(dist, crate::algebra::risk_aversion(ctx)?);
    Ok(t / s)
}

/// Type I coupled entropy `(1/k)(1/sum p^(1 + k/(1+dk)) - 1)`. The shape in
/// `ctx` is ignored; Type I always uses `a = 1`.
pub fn coupled_entropy_i(dist: &DiscreteDist, ctx: &CouplingContext) -> Result<f64> {
    check_dims(dist, ctx)?;
    let (t, s) = discrete_parts(dist, ctx.kappa / ctx.one_plus_dk());
    Ok(t / (ctx.one_plus_dk() * s))
}

/// Type II coupled entropy: escort mean (order `1 + k/(1+dk)`) of
/// `(ln_k p^(-a/(1+dk)))^(1/a)`. Defined for `k >= 0`.
pub fn coupled_entropy_ii(dist: &DiscreteDist, ctx: &CouplingContext) -> Result<f64> {
    check_dims(dist, ctx)?;
    ensure!(ctx.kappa >= 0.0, Unsupported, "Type II coupled entropy needs kappa >= 0");
    let escort = escort_discrete(dist, ctx.type_one_exponent())?;
    let inner = |p: f64| coupled_log_of_ln(-ctx.alpha * p.ln() / ctx.one_plus_dk(), ctx.kappa).max(0.0);
    Ok(neumaier_sum(
        dist.probs()
            .iter()
            .zip(escort.probs())
            .filter(|(&p, _)| p > 0.0)
            .map(|(&p, &w)| w * inner(p).powf(1.0 / ctx.alpha)),
    ))
}

/// Type III coupled entropy `(1/(a k))(1/sum p^(1 + a k/(1+dk)) - 1)`.
pub fn coupled_entropy_iii(dist: &DiscreteDist, ctx: &CouplingContext) -> Result<f64> {
    check_dims(dist, ctx)?;
    let (t, s) = discrete_parts(dist, crate::algebra::risk_aversion(ctx)?);
    Ok(t / (ctx.one_plus_dk() * s))
}

/// All four entropies of a discrete distribution; `coupled` is Type III
/// (Type I when `a = 1`).
pub fn entropy_report(dist: &DiscreteDist, ctx: &CouplingContext) -> Result<EntropyReport> {
    check_dims(dist, ctx)?;
    let (t, s) = discrete_parts(dist, crate::algebra::risk_aversion(ctx)?);
    Ok(EntropyReport {
        shannon: shannon(dist),
        tsallis: t,
        normalized_tsallis: t / s,
        coupled: t / (ctx.one_plus_dk() * s),
    })
}

fn escort_against<F: Fn(usize) -> Result<f64>>(p: &DiscreteDist, ctx: &CouplingContext, term: F) -> Result<f64> {
    let escort = escort_discrete(p, ctx.type_one_exponent())?;
    let mut terms = Vec::with_capacity(p.len());
    for (i, &w) in escort.probs().iter().enumerate() {
        if w > 0.0 {
            terms.push(w * term(i)?);
        }
    }
    Ok(neumaier_sum(terms))
}

fn check_pair(p: &DiscreteDist, r: &DiscreteDist, ctx: &CouplingContext) -> Result<()> {
    if p.len() != r.len() {
        return Err(Error::LengthMismatch(p.len(), r.len()));
    }
    check_dims(p, ctx)
}

/// Coupled cross-entropy: escort of `p` averaging `ln_k r^(-1/(1+dk))`.
pub fn coupled_cross_entropy(p: &DiscreteDist, r: &DiscreteDist, ctx: &CouplingContext) -> Result<f64> {
    check_pair(p, r, ctx)?;
    let scale = ctx.one_plus_dk();
    escort_against(p, ctx, |i| {
        let ri = r.probs()[i];
        if ri <= 0.0 {
            return Err(Error::Divergent(format!("reference assigns zero probability to state {i}")));
        }
        Ok(coupled_log_of_ln(-ri.ln() / scale, ctx.kappa))
    })
}

/// Coupled divergence between `p` and `r`.
///
/// Form I is `H(p) - H(p||r)`. Form II is the escort mean of
/// `ln_k (p/r)^(1/(1+dk))`, which tends to the Kullback-Leibler divergence as
/// `k -> 0`.
pub fn coupled_divergence(
    p: &DiscreteDist,
    r: &DiscreteDist,
    ctx: &CouplingContext,
    form: DivergenceForm,
) -> Result<f64> {
    check_pair(p, r, ctx)?;
    match form {
        DivergenceForm::I => Ok(coupled_entropy_i(p, ctx)? - coupled_cross_entropy(p, r, ctx)?),
        DivergenceForm::II => {
            let scale = ctx.one_plus_dk();
            escort_against(p, ctx, |i| {
                let (pi, ri) = (p.probs()[i], r.probs()[i]);
                if ri <= 0.0 {
                    return Err(Error::Divergent(format!("reference assigns zero probability to state {i}")));
                }
                Ok(coupled_log_of_ln((pi.ln() - ri.ln()) / scale, ctx.kappa))
            })
        }
    }
}

/// Differential Shannon entropy `-int p ln p`.
pub fn shannon_continuous<D: Density + ?Sized>(density: &D) -> Result<f64> {
    let est = integrate_density(density, |n, lp| {
        if lp == f64::NEG_INFINITY {
            0.0
        } else {
            -lp * n.weight(lp)
        }
    })?;
    Ok(est.value)
}

/// `(T_r, S_r)` for a density.
fn continuous_parts<D: Density + ?Sized>(density: &D, r: f64) -> Result<(f64, f64)> {
    let t = integrate_density(density, |n, lp| {
        if lp == f64::NEG_INFINITY {
            0.0
        } else {
            -n.weight(lp) * coupled_log_of_ln(lp, r)
        }
    })?;
    let s = integrate_density(density, |n, lp| {
        if lp == f64::NEG_INFINITY {
            0.0
        } else {
            n.weight((1.0 + r) * lp)
        }
    })?;
    if !(s.value.is_finite() && s.value > 0.0) {
        return Err(Error::Divergent(format!("integral of p^(1+{r}) is not finite and positive")));
    }
    Ok((t.value, s.value))
}

/// Continuous Tsallis entropy.
pub fn tsallis_continuous<D: Density + ?Sized>(density: &D, ctx: &CouplingContext) -> Result<f64> {
    ctx.require_escort_range()?;
    Ok(continuous_parts(density, crate::algebra::risk_aversion(ctx)?)?.0)
}

/// Continuous normalized Tsallis entropy.
pub fn normalized_tsallis_continuous<D: Density + ?Sized>(density: &D, ctx: &CouplingContext) -> Result<f64> {
    ctx.require_escort_range()?;
    let (t, s) = continuous_parts(density, crate::algebra::risk_aversion(ctx)?)?;
    Ok(t / s)
}

/// Continuous Type I coupled entropy (shape ignored).
pub fn coupled_entropy_i_continuous<D: Density + ?Sized>(density: &D, ctx: &CouplingContext) -> Result<f64> {
    ctx.require_escort_range()?;
    let (t, s) = continuous_parts(density, ctx.kappa / ctx.one_plus_dk())?;
    Ok(t / (ctx.one_plus_dk() * s))
}

/// Continuous Type III coupled entropy.
pub fn coupled_entropy_iii_continuous<D: Density + ?Sized>(density: &D, ctx: &CouplingContext) -> Result<f64> {
    ctx.require_escort_range()?;
    let (t, s) = continuous_parts(density, crate::algebra::risk_aversion(ctx)?)?;
    Ok(t / (ctx.one_plus_dk() * s))
}

/// All four entropies of a density by quadrature; `coupled` is Type III.
pub fn entropy_report_continuous<D: Density + ?Sized>(density: &D, ctx: &CouplingContext) -> Result<EntropyReport> {
    ctx.require_escort_range()?;
    let (t, s) = continuous_parts(density, crate::algebra::risk_aversion(ctx)?)?;
    Ok(EntropyReport {
        shannon: shannon_continuous(density)?,
        tsallis: t,
        normalized_tsallis: t / s,
        coupled: t / (ctx.one_plus_dk() * s),
    })
}

/// Closed-form entropies of the coupled exponential with scale `sigma`:
///
/// ```text
/// shannon  = 1 + k + ln sigma
/// coupled  = 1 + ln_r sigma                       r = k/(1+k)
/// NT       = (1 + k)(1 + ln_r sigma)
/// Tsallis  = 1 - ln_r(1/sigma) / (1 + k)
/// ```
pub fn closed_form_entropies_gpd(sigma: f64, kappa: f64) -> Result<EntropyReport> {
    ensure!(sigma > 0.0, Domain, "scale must be positive, got {sigma}");
    ensure!(kappa > -1.0, Domain, "coupling must exceed -1, got {kappa}");
    let r = kappa / (1.0 + kappa);
    let ln_sigma = sigma.ln();
    let coupled = 1.0 + coupled_log_of_ln(ln_sigma, r);
    Ok(EntropyReport {
        shannon: 1.0 + kappa + ln_sigma,
        tsallis: 1.0 - coupled_log_of_ln(-ln_sigma, r) / (1.0 + kappa),
        normalized_tsallis: (1.0 + kappa) * coupled,
        coupled,
    })
}

/// Coupled entropy of `N` equiprobable states scaled as `N^rho`:
/// `ln_(a k) N^(rho/(1+dk))`.
pub fn extensivity_curve(n: u64, rho: f64, ctx: &CouplingContext) -> Result<f64> {
    ensure!(n >= 1, Domain, "N must be at least 1");
    ensure!(rho > 0.0, Domain, "rho must be positive, got {rho}");
    Ok(coupled_log_of_ln(rho * (n as f64).ln() / ctx.one_plus_dk(), ctx.alpha * ctx.kappa))
}

/// One free-energy term from a log density value `l`:
/// `ln_(2k) v^(-1/(1+dk))` with `v = e^l`, which tends to `-l` as `k -> 0`.
fn free_energy_term(l: f64, ctx: &CouplingContext) -> f64 {
    coupled_log_of_ln(-l / ctx.one_plus_dk(), 2.0 * ctx.kappa)
}

/// Monte-Carlo coupled free energy
/// `F = 1/2 E[ln_(2k) q(z)^(-1/(1+dk)) + ln_(2k) p(x|z)^(-1/(1+dk))]`
/// over latent draws `z` from the escort latent distribution.
pub fn coupled_free_energy_mc<Q, L>(latent: &[f64], ln_prior: Q, ln_likelihood: L, ctx: &CouplingContext) -> Result<f64>
where
    Q: Fn(f64) -> f64,
    L: Fn(f64) -> f64,
{
    ensure!(!latent.is_empty(), Domain, "no latent samples");
    let mut terms = Vec::with_capacity(latent.len());
    for &z in latent {
        let (lq, lp) = (ln_prior(z), ln_likelihood(z));
        ensure!(
            lq.is_finite() && lp.is_finite(),
            Domain,
            "log-density evaluator returned a non-finite value at z = {z}"
        );
        terms.push(free_energy_term(lq, ctx) + free_energy_term(lp, ctx));
    }
    Ok(0.5 * neumaier_sum(terms) / latent.len() as f64)
}

/// The same free energy as an integral against a latent density.
pub fn coupled_free_energy_quadrature<D, Q, L>(
    latent: &D,
    ln_prior: Q,
    ln_likelihood: L,
    ctx: &CouplingContext,
) -> Result<f64>
where
    D: Density + ?Sized,
    Q: Fn(f64) -> f64,
    L: Fn(f64) -> f64,
{
    let est = integrate_density(latent, |n, lp| {
        if lp == f64::NEG_INFINITY {
            return 0.0;
        }
        let bracket = free_energy_term(ln_prior(n.x), ctx) + free_energy_term(ln_likelihood(n.x), ctx);
        bracket * n.weight(lp)
    })?;
    Ok(0.5 * est.value)
}

/// Scale and coupling of the escort of order `1 + a k/(1+k)` of a stretched
/// coupled density `(1 + k |z|^a)^(-(1+k)/(a k))`:
/// `(sigma (1 + a k)^(-1/a), k/(1 + a k))`.
///
/// For the coupled Gaussian (`a = 2`) this is the latent sampling law used by
/// the coupled free energy.
pub fn escort_latent_params(sigma: f64, kappa: f64, alpha: f64) -> Result<(f64, f64)> {
    ensure!(sigma > 0.0, Domain, "scale must be positive, got {sigma}");
    ensure!(alpha > 0.0, Domain, "shape must be positive, got {alpha}");
    ensure!(kappa >= 0.0, Unsupported, "latent escort needs kappa >= 0, got {kappa}");
    let shrink = 1.0 + alpha * kappa;
    Ok((sigma * shrink.powf(-1.0 / alpha), kappa / shrink))
}
