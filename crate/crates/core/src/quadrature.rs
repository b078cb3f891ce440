//! Adaptive Gauss-Kronrod quadrature over finite, semi-infinite and infinite
//! ranges.
//!
//! Infinite ranges are mapped through `x = anchor ± scale * e^y`. The
//! integrand receives a [`Node`] that carries `ln|x - anchor|` next to `x`, so
//! densities whose tails extend past `f64::MAX` (heavy power laws) can still be
//! evaluated in log space. The `y` range is truncated by scanning outward until
//! the transformed integrand is negligible relative to its peak; failure to
//! decay is reported as [`Error::Divergent`].

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

// 21-point Kronrod abscissae and weights with the embedded 10-point Gauss rule.
const XGK: [f64; 11] = [
    0.995_657_163_025_808_1,
    0.973_906_528_517_171_7,
    0.930_157_491_355_708_2,
    0.865_063_366_688_984_5,
    0.780_817_726_586_416_9,
    0.679_409_568_299_024_4,
    0.562_757_134_668_604_7,
    0.433_395_394_129_247_2,
    0.294_392_862_701_460_2,
    0.148_874_338_981_631_2,
    0.0,
];
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874,
    0.032_558_162_307_964_73,
    0.054_755_896_574_351_996,
    0.075_039_674_810_919_95,
    0.093_125_454_583_697_6,
    0.109_387_158_802_297_64,
    0.123_491_976_262_065_85,
    0.134_709_217_311_473_33,
    0.142_775_938_577_060_08,
    0.147_739_104_901_338_49,
    0.149_445_554_002_916_9,
];
const WG: [f64; 5] = [
    0.066_671_344_308_688_14,
    0.149_451_349_150_580_6,
    0.219_086_362_515_982_04,
    0.269_266_719_309_996_36,
    0.295_524_224_714_752_87,
];

/// Tolerances for the adaptive driver.
#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    pub max_intervals: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self { abs: 1e-11, rel: 1e-11, max_intervals: 4000 }
    }
}

/// Result of an integration.
#[derive(Debug, Clone, Copy)]
pub struct Estimate {
    pub value: f64,
    pub abs_err: f64,
    pub evaluations: usize,
}

/// Evaluation point handed to integrands over a density's support.
#[derive(Debug, Clone, Copy)]
pub struct Node {
    /// Abscissa; may be infinite far out in a tail.
    pub x: f64,
    /// Reference point of the mapping (the support end or the location).
    pub anchor: f64,
    /// `ln|x - anchor|`, finite even when `x` overflows.
    pub ln_r: f64,
    /// `+1` right of the anchor, `-1` left of it.
    pub side: f64,
    /// `ln(dx/dt)` of the mapping; `0` on plain finite intervals.
    pub ln_jac: f64,
}

impl Node {
    /// `ln|x|`, falling back on the offset from the anchor once `x` overflows.
    pub fn ln_abs_x(&self) -> f64 {
        if self.x.is_finite() {
            self.x.abs().ln()
        } else {
            self.ln_r
        }
    }

    /// Sign of `x`.
    pub fn sign_x(&self) -> f64 {
        if self.x.is_finite() {
            self.x.signum()
        } else {
            self.side
        }
    }

    /// `exp(ln_value + ln_jac)`: a log-space integrand value times the Jacobian.
    pub fn weight(&self, ln_value: f64) -> f64 {
        (ln_value + self.ln_jac).exp()
    }
}

/// Description of an integration domain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Support {
    pub lower: f64,
    pub upper: f64,
    /// Centre of the tail mapping when both ends are infinite.
    pub anchor: f64,
    /// Length scale of the tail mapping.
    pub scale: f64,
}

impl Support {
    pub fn new(lower: f64, upper: f64, anchor: f64, scale: f64) -> Self {
        Self { lower, upper, anchor, scale }
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lower && x <= self.upper
    }
}

fn gauss_kronrod<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64, f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut res_k = fc * WGK[10];
    let mut res_g = 0.0;
    let mut res_abs = res_k.abs();
    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];
    for j in 0..10 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        res_k += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_g += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = res_k * 0.5;
    let mut res_asc = WGK[10] * (fc - mean).abs();
    for j in 0..10 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let abs_half = half.abs();
    let result = res_k * half;
    res_abs *= abs_half;
    res_asc *= abs_half;
    let mut err = ((res_k - res_g) * half).abs();
    if res_asc != 0.0 && err != 0.0 {
        err = res_asc * (200.0 * err / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * res_abs);
    }
    (result, err, res_abs, res_asc)
}

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    err: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.total_cmp(&other.err)
    }
}

/// Globally adaptive integration of `f` over `[a, b]`, starting from the
/// subdivision given by `breaks` (sorted, inside `[a, b]`).
pub fn adaptive<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    breaks: &[f64],
    tol: Tolerance,
) -> Result<Estimate> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::Domain(format!("adaptive quadrature needs a finite range, got [{a}, {b}]")));
    }
    if a == b {
        return Ok(Estimate { value: 0.0, abs_err: 0.0, evaluations: 0 });
    }
    let mut evaluations = 0usize;
    let mut nan_seen = false;
    let mut inf_seen = false;
    let mut g = |x: f64| {
        evaluations += 1;
        let v = f(x);
        if v.is_nan() {
            nan_seen = true;
            0.0
        } else if v.is_infinite() {
            inf_seen = true;
            0.0
        } else {
            v
        }
    };

    let mut points = Vec::with_capacity(breaks.len() + 2);
    points.push(a);
    points.extend(breaks.iter().copied().filter(|&p| p > a && p < b));
    points.push(b);

    let mut heap = BinaryHeap::new();
    let mut total = 0.0;
    let mut total_err = 0.0;
    for w in points.windows(2) {
        let (value, err, _, _) = gauss_kronrod(&mut g, w[0], w[1]);
        total += value;
        total_err += err;
        heap.push(Segment { a: w[0], b: w[1], value, err });
    }

    let mut settled_err = 0.0;
    while total_err > tol.abs.max(tol.rel * total.abs()) && heap.len() < tol.max_intervals {
        let Some(worst) = heap.pop() else { break };
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b || (worst.b - worst.a) < 1e-14 * mid.abs().max(1e-300) {
            // Cannot be split further; keep its contribution but stop refining it.
            settled_err += worst.err;
            total_err -= worst.err;
            total_err += 0.0;
            if heap.is_empty() {
                break;
            }
            continue;
        }
        let (v1, e1, _, _) = gauss_kronrod(&mut g, worst.a, mid);
        let (v2, e2, _, _) = gauss_kronrod(&mut g, mid, worst.b);
        total += v1 + v2 - worst.value;
        total_err += e1 + e2 - worst.err;
        heap.push(Segment { a: worst.a, b: mid, value: v1, err: e1 });
        heap.push(Segment { a: mid, b: worst.b, value: v2, err: e2 });
    }
    // Re-sum to shed the drift accumulated by incremental updates.
    let value: f64 = heap.iter().map(|s| s.value).sum::<f64>();
    let abs_err: f64 = heap.iter().map(|s| s.err).sum::<f64>() + settled_err;

    if nan_seen {
        return Err(Error::Quadrature("integrand returned NaN".into()));
    }
    if inf_seen {
        return Err(Error::Divergent("integrand is infinite inside the range".into()));
    }
    let target = tol.abs.max(tol.rel * value.abs());
    if abs_err > target && abs_err > 1e-7 * value.abs().max(1.0) {
        return Err(Error::Quadrature(format!(
            "error estimate {abs_err:.3e} exceeds tolerance {target:.3e} after {} intervals",
            heap.len()
        )));
    }
    Ok(Estimate { value, abs_err, evaluations })
}

const TAIL_NEGLIGIBLE: f64 = 1e-18;
const TAIL_Y_MIN: f64 = -740.0;
const TAIL_Y_MAX: f64 = 3.0e4;

/// Integrates a transformed tail integrand `g(y)` over the whole real `y`
/// line, locating the effective range by an outward scan.
pub fn integrate_tail_transformed<G: FnMut(f64) -> f64>(mut g: G, tol: Tolerance) -> Result<Estimate> {
    let mut peak = 0.0f64;
    let mut probe = |y: f64, peak: &mut f64| -> Result<f64> {
        let v = g(y);
        if v.is_nan() {
            return Err(Error::Quadrature(format!("integrand is NaN at y = {y}")));
        }
        if v.is_infinite() {
            return Err(Error::Divergent(format!("integrand is infinite at y = {y}")));
        }
        *peak = peak.max(v.abs());
        Ok(v)
    };

    let mut breaks = vec![0.0];
    probe(0.0, &mut peak)?;

    // Upward scan.
    let mut y = 0.0;
    let mut step = 0.5f64;
    let mut quiet = 0;
    let y_hi = loop {
        y += step;
        step = (step * 1.3).min(48.0);
        let v = probe(y, &mut peak)?;
        breaks.push(y);
        if v.abs() <= TAIL_NEGLIGIBLE * peak {
            quiet += 1;
            if quiet >= 2 {
                break y;
            }
        } else {
            quiet = 0;
        }
        if y > TAIL_Y_MAX {
            return Err(Error::Divergent("integrand does not decay in the upper tail".into()));
        }
    };

    // Downward scan.
    let mut y = 0.0;
    let mut step = 0.5f64;
    let mut quiet = 0;
    let y_lo = loop {
        y -= step;
        step = (step * 1.3).min(8.0);
        let v = probe(y, &mut peak)?;
        breaks.push(y);
        if v.abs() <= TAIL_NEGLIGIBLE * peak {
            quiet += 1;
            if quiet >= 2 {
                break y;
            }
        } else {
            quiet = 0;
        }
        if y < TAIL_Y_MIN {
            if v.abs() <= 1e-12 * peak {
                break y;
            }
            return Err(Error::Divergent("integrand does not decay toward the anchor".into()));
        }
    };
    if peak == 0.0 {
        return Ok(Estimate { value: 0.0, abs_err: 0.0, evaluations: breaks.len() });
    }
    breaks.sort_by(f64::total_cmp);
    adaptive(g, y_lo, y_hi, &breaks, tol)
}

fn tail_node(anchor: f64, scale: f64, side: f64, y: f64) -> Node {
    let ln_r = scale.ln() + y;
    Node { x: anchor + side * ln_r.exp(), anchor, ln_r, side, ln_jac: ln_r }
}

/// Integrates `integrand(node)` over `[from, support.upper]`.
///
/// The integrand must already include the Jacobian, typically through
/// [`Node::weight`].
pub fn integrate_over<F>(support: &Support, from: f64, integrand: F, tol: Tolerance) -> Result<Estimate>
where
    F: Fn(&Node) -> f64,
{
    let lower = from.max(support.lower);
    if lower >= support.upper {
        return Ok(Estimate { value: 0.0, abs_err: 0.0, evaluations: 0 });
    }
    let scale = support.scale;
    if lower.is_finite() && support.upper.is_finite() {
        let f = |x: f64| {
            let r = x - lower;
            integrand(&Node { x, anchor: lower, ln_r: r.ln(), side: 1.0, ln_jac: 0.0 })
        };
        let width = support.upper - lower;
        let breaks: Vec<f64> = (1..8).map(|i| lower + width * f64::from(i) / 8.0).collect();
        return adaptive(f, lower, support.upper, &breaks, tol);
    }
    if lower.is_finite() {
        return integrate_tail_transformed(|y| integrand(&tail_node(lower, scale, 1.0, y)), tol);
    }
    if support.upper.is_finite() {
        return integrate_tail_transformed(|y| integrand(&tail_node(support.upper, scale, -1.0, y)), tol);
    }
    let anchor = support.anchor;
    let right = integrate_tail_transformed(|y| integrand(&tail_node(anchor, scale, 1.0, y)), tol)?;
    let left = integrate_tail_transformed(|y| integrand(&tail_node(anchor, scale, -1.0, y)), tol)?;
    Ok(Estimate {
        value: left.value + right.value,
        abs_err: left.abs_err + right.abs_err,
        evaluations: left.evaluations + right.evaluations,
    })
}

/// Integrates over the whole support.
pub fn integrate_support<F>(support: &Support, integrand: F, tol: Tolerance) -> Result<Estimate>
where
    F: Fn(&Node) -> f64,
{
    integrate_over(support, support.lower, integrand, tol)
}
