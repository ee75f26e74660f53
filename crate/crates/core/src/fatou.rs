//! Coordinates near the parabolic point: the gate chart `u_ε`, its
//! normalizations `w_ε`, the Fatou coordinates of F_0, the almost-Fatou
//! coordinates of F_ε, the outgoing parametrization on the invariant line,
//! and the telescoping products used in the convergence argument.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::mapfamily::{PolyMap2, TailCorrection};
use crate::point::{ComplexPoint, C64, I};
use crate::regions::{self, RegionConfig};
use crate::sum::NeumaierSum;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Incoming,
    Outgoing,
}

/// `(1/(2iε))·log((iε − x)/(iε + x))`, the principal branch of `arctan(x/ε)/ε`.
pub fn u_eps(eps: C64, x: C64) -> Result<C64> {
    if eps.norm() == 0.0 {
        return Err(Error::ZeroEpsilon);
    }
    let ie = I * eps;
    let (num, den) = (ie - x, ie + x);
    if num.norm() == 0.0 || den.norm() == 0.0 {
        return Err(Error::PoleAtGate);
    }
    Ok((num / den).ln() / (2.0 * ie))
}

/// `ε·tan(εw)` for `w` strictly inside the strip `|Re((ε/|ε|)w)| < π/(2|ε|)`.
pub fn u_eps_inverse(eps: C64, w: C64) -> Result<C64> {
    if eps.norm() == 0.0 {
        return Err(Error::ZeroEpsilon);
    }
    let m = eps.norm();
    if !((eps / m * w).re.abs() < PI / (2.0 * m)) {
        return Err(Error::OutsideStrip);
    }
    Ok(eps * (eps * w).tan())
}

/// The chart of F_0: `−1/x − q·log(∓x)` (minus sign for incoming).
pub fn w_zero(q: C64, x: C64, mode: Mode) -> C64 {
    let lx = match mode {
        Mode::Incoming => (-x).ln(),
        Mode::Outgoing => x.ln(),
    };
    -1.0 / x - q * lx
}

/// `u_ε(x) − (q/2)·log(ε² + x²) ± π/(2ε)`; at ε = 0 this is the limit chart
/// [`w_zero`].
pub fn w_eps(map: &PolyMap2, eps: C64, p: ComplexPoint, mode: Mode) -> Result<C64> {
    let q = map.q();
    if eps.norm() == 0.0 {
        return Ok(w_zero(q, p.x, mode));
    }
    let u = u_eps(eps, p.x)?;
    let shift = PI / (2.0 * eps);
    let base = u - q * 0.5 * (eps * eps + p.x * p.x).ln();
    Ok(match mode {
        Mode::Incoming => base + shift,
        Mode::Outgoing => base - shift,
    })
}

/// A Fatou coordinate value with a bound on the discarded series tail.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FatouValue {
    pub value: C64,
    pub truncation_error: f64,
    pub terms: usize,
}

/// Largest number of orbit steps a Fatou series may take.
pub const MAX_SERIES_TERMS: usize = 4_000_000;
const MIN_SERIES_TERMS: usize = 32;
const CALIBRATION_TERMS: usize = 10;

/// Cone in which the asymptotic expansion of an orbit is trusted.
fn settled(p: ComplexPoint) -> bool {
    p.x.re < 0.0 && p.x.im.abs() <= -p.x.re && p.x.norm() < 0.05 && p.y.norm() <= p.x.norm()
}

fn majorant(p: ComplexPoint) -> f64 {
    let (ax, ay) = (p.x.norm(), p.y.norm());
    ax * ax * ax + ax * ay + ay * ay
}

/// Sums `w(p) + Σ_{n<N} (w(p_{n+1}) − w(p_n) − 1)` for an orbit of `step`.
///
/// The partial sum telescopes to `w(p_N) − N`, which is what is evaluated;
/// the correction `h(p_N)` then removes the O(1/N) part of the tail so the
/// remainder decays like `N·|x_N|³ + N·|x_N y_N| + …`. The constant in
/// front of that majorant is calibrated on the first terms of the orbit.
fn fatou_series<S>(mut step: S, corr: TailCorrection, p: ComplexPoint, tol: f64, max_terms: usize) -> Result<FatouValue>
where
    S: FnMut(ComplexPoint) -> Result<ComplexPoint>,
{
    let w = |z: ComplexPoint| w_zero(corr.q, z.x, Mode::Incoming) + corr.eval(z);
    let mut z = p;
    let mut wz = w(z);
    let mut calib: f64 = 1.0;
    let mut calibrated = 0;
    for n in 0..max_terms {
        if !(z.norm() < 2.0) || z.x.norm() == 0.0 {
            return Err(Error::NotInBasin);
        }
        let is_settled = settled(z);
        if is_settled && n >= MIN_SERIES_TERMS && calibrated >= CALIBRATION_TERMS {
            let bound = 2.0 * calib * n as f64 * majorant(z);
            if bound < tol {
                return Ok(FatouValue { value: wz - n as f64, truncation_error: bound, terms: n });
            }
        }
        // A failed step means the orbit left the region where the map (or
        // its inverse branch) is defined, so the point is not in the basin.
        let next = step(z).map_err(|_| Error::NotInBasin)?;
        let wn = w(next);
        if is_settled && calibrated < CALIBRATION_TERMS {
            let b = (wn - wz - 1.0).norm();
            calib = calib.max(b / majorant(z));
            calibrated += 1;
        }
        z = next;
        wz = wn;
    }
    Err(Error::NotInBasin)
}

fn fixed_length_series<S>(mut step: S, corr: TailCorrection, p: ComplexPoint, n: usize) -> Result<C64>
where
    S: FnMut(ComplexPoint) -> Result<ComplexPoint>,
{
    let mut z = p;
    for _ in 0..n {
        z = step(z)?;
    }
    Ok(w_zero(corr.q, z.x, Mode::Incoming) + corr.eval(z) - n as f64)
}

fn h_step(map: &PolyMap2) -> impl FnMut(ComplexPoint) -> Result<ComplexPoint> + '_ {
    move |z| map.eval_h(C64::default(), z, 1e-13 * z.norm().min(1.0))
}

/// Incoming Fatou coordinate of F_0, normalized so that
/// `φ^ι(p) − w^ι_0(p) → 0` along the orbit. Accepts any point whose orbit
/// settles into the attracting cone along the negative real x-axis.
pub fn phi_iota(map: &PolyMap2, p: ComplexPoint, tol: f64) -> Result<FatouValue> {
    let zero = C64::default();
    fatou_series(|z| map.eval_f(zero, z), map.tail_correction(false), p, tol, MAX_SERIES_TERMS)
}

/// Outgoing Fatou coordinate `φ^o(p) = −φ^ι_H(σp)`.
pub fn phi_o(map: &PolyMap2, p: ComplexPoint, tol: f64) -> Result<FatouValue> {
    let v = fatou_series(h_step(map), map.tail_correction(true), p.mirror(), tol, MAX_SERIES_TERMS)
        .map_err(|e| if e == Error::NotInBasin { Error::NotInRepellingBasin } else { e })?;
    Ok(FatouValue { value: -v.value, ..v })
}

/// The accelerated series for φ^ι cut after exactly `n` terms.
pub fn phi_iota_truncated(map: &PolyMap2, p: ComplexPoint, n: usize) -> Result<C64> {
    let zero = C64::default();
    fixed_length_series(|z| map.eval_f(zero, z), map.tail_correction(false), p, n)
}

/// The accelerated series for φ^o cut after exactly `n` terms.
pub fn phi_o_truncated(map: &PolyMap2, p: ComplexPoint, n: usize) -> Result<C64> {
    fixed_length_series(h_step(map), map.tail_correction(true), p.mirror(), n).map(|v| -v)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlmostFatouParams {
    pub eps: C64,
    pub n: usize,
    pub mode: Mode,
}

/// `w^ι_ε(F_ε^n p) − n` (incoming) or `w^o_ε(F_ε^{−n} p) + n` (outgoing).
/// When `cfg` is given the orbit must stay in C̃_ε ∪ D̃_ε (for the outgoing
/// mode, the mirrored backward orbit is tested, i.e. the H_ε-orbit of σp).
pub fn phi_almost(map: &PolyMap2, cfg: Option<&RegionConfig>, params: AlmostFatouParams, p: ComplexPoint) -> Result<C64> {
    phi_almost_sweep(map, cfg, params.eps, params.mode, p, &[params.n]).map(|v| v[0])
}

/// [`phi_almost`] for several `n` along one cached orbit; `ns` need not be
/// sorted.
pub fn phi_almost_sweep(
    map: &PolyMap2,
    cfg: Option<&RegionConfig>,
    eps: C64,
    mode: Mode,
    p: ComplexPoint,
    ns: &[usize],
) -> Result<Vec<C64>> {
    if let Some(cfg) = cfg {
        regions::check_sector(cfg, eps)?;
    }
    let n_max = ns.iter().copied().max().unwrap_or(0);
    // Work with the mirrored orbit for the outgoing mode so that the
    // domain test is the same as for the incoming one.
    let start = match mode {
        Mode::Incoming => p,
        Mode::Outgoing => p.mirror(),
    };
    let mut orbit = Vec::with_capacity(n_max + 1);
    orbit.push(start);
    let mut z = start;
    for j in 1..=n_max {
        z = match mode {
            Mode::Incoming => map.eval_f(eps, z).map_err(|_| Error::OrbitLeftDomain(j))?,
            Mode::Outgoing => map.eval_h(eps, z, 1e-13 * z.norm().min(1.0)).map_err(|_| Error::OrbitLeftDomain(j))?,
        };
        if let Some(cfg) = cfg {
            let inside = regions::in_c_eps(cfg, eps, z)? || regions::in_d_eps(cfg, eps, z)?;
            if !inside {
                return Err(Error::OrbitLeftDomain(j));
            }
        }
        orbit.push(z);
    }
    ns.iter()
        .map(|&n| {
            let q = orbit[n];
            match mode {
                Mode::Incoming => Ok(w_eps(map, eps, q, Mode::Incoming)? - n as f64),
                Mode::Outgoing => Ok(w_eps(map, eps, q.mirror(), Mode::Outgoing)? + n as f64),
            }
        })
        .collect()
}

/// Bounded-type ladder `ε = π/(2(m + 3))` paired with `m`.
pub fn bounded_type_ladder(ms: &[usize]) -> Vec<(C64, usize)> {
    ms.iter().map(|&m| (C64::new(PI / (2.0 * (m as f64 + 3.0)), 0.0), m)).collect()
}

/// One row of a convergence protocol.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceRow {
    pub eps: C64,
    pub n: usize,
    pub point_index: usize,
    pub error: f64,
}

/// `|φ_{ε,m}(p) − φ(p)|` for every ladder entry and window point.
/// Incoming windows live in C̃_0, outgoing ones in −C̃_0.
pub fn almost_fatou_errors(
    map: &PolyMap2,
    cfg: &RegionConfig,
    points: &[ComplexPoint],
    ladder: &[(C64, usize)],
    mode: Mode,
    tol: f64,
) -> Result<Vec<ConvergenceRow>> {
    let per_point: Vec<Result<Vec<ConvergenceRow>>> = points
        .par_iter()
        .enumerate()
        .map(|(k, &p)| {
            let exact = match mode {
                Mode::Incoming => phi_iota(map, p, tol)?.value,
                Mode::Outgoing => phi_o(map, p, tol)?.value,
            };
            ladder
                .iter()
                .map(|&(eps, m)| {
                    let v = phi_almost(map, Some(cfg), AlmostFatouParams { eps, n: m, mode }, p)?;
                    Ok(ConvergenceRow { eps, n: m, point_index: k, error: (v - exact).norm() })
                })
                .collect()
        })
        .collect();
    let mut rows = Vec::new();
    for r in per_point {
        rows.extend(r?);
    }
    rows.sort_by_key(|r| (r.n, r.point_index));
    Ok(rows)
}

/// Worst error over the window for each ladder step, in ladder order.
pub fn sup_errors(rows: &[ConvergenceRow], ladder: &[(C64, usize)]) -> Vec<f64> {
    ladder
        .iter()
        .map(|&(_, m)| rows.iter().filter(|r| r.n == m).map(|r| r.error).fold(0.0, f64::max))
        .collect()
}

/// The point `ψ^o(z)` of the invariant line with `φ^o(ψ^o(z), 0) = z`.
///
/// Solves `φ^o(x) = z − n` deep in the repelling petal by a secant
/// iteration and pushes the solution forward by `F_0^n`.
pub fn psi_o_line(map: &PolyMap2, z: C64, tol: f64) -> Result<C64> {
    const MAX_ITER: usize = 40;
    let n = (z.re.ceil() + 50.0).max(0.0) as usize;
    let t = z - n as f64;
    let inner = (tol * 0.1).clamp(1e-10, 1e-8);
    let q = map.q();
    let f = |x: C64| phi_o(map, ComplexPoint::new(x, C64::default()), inner).map(|v| v.value - t);
    let chart_slope = |x: C64| 1.0 / (x * x) - q / x;
    // Seed from the chart alone: −1/x − q·log x = t.
    let mut x0 = -1.0 / t;
    for _ in 0..20 {
        x0 -= (w_zero(q, x0, Mode::Outgoing) - t) / chart_slope(x0);
    }
    let mut f0 = f(x0)?;
    let mut x1 = x0 - f0 / chart_slope(x0);
    let mut solution = None;
    for _ in 0..MAX_ITER {
        let f1 = f(x1)?;
        if f1.norm() < 0.5 * tol {
            solution = Some(x1);
            break;
        }
        let slope = (f1 - f0) / (x1 - x0);
        let x2 = x1 - f1 / slope;
        // Below the noise floor of the series the secant stalls; accept
        // the iterate if its residual is still within tolerance.
        if !x2.is_finite() || (x2 - x1).norm() <= 1e-14 * x1.norm() {
            if f1.norm() < tol {
                solution = Some(x1);
            }
            break;
        }
        (x0, f0, x1) = (x1, f1, x2);
    }
    let Some(x) = solution else {
        return Err(Error::NoConvergence { iterations: MAX_ITER });
    };
    let zero = C64::default();
    let mut p = ComplexPoint::new(x, zero);
    for _ in 0..n {
        p = map.eval_f(zero, p).map_err(|_| Error::NoConvergence { iterations: n })?;
    }
    Ok(p.x)
}

/// `P_j = Π_{l=l0}^{j} (1 − a/l)`.
pub fn telescoping_product(a: f64, l0: usize, j: usize) -> Result<f64> {
    let mut prod = 1.0;
    for l in l0..=j {
        prod *= telescoping_factor(a, l)?;
    }
    Ok(prod)
}

fn telescoping_factor(a: f64, l: usize) -> Result<f64> {
    let f = 1.0 - a / l as f64;
    if f > 0.0 && f < 1.0 {
        Ok(f)
    } else {
        Err(Error::DomainViolation(l))
    }
}

/// `Σ_{j=l0}^{big_j} P_j` with compensated summation.
pub fn telescoping_partial_sum(a: f64, l0: usize, big_j: usize) -> Result<f64> {
    let mut acc = NeumaierSum::new();
    let mut prod = 1.0;
    for j in l0..=big_j {
        prod *= telescoping_factor(a, j)?;
        acc.add(prod);
    }
    Ok(acc.value())
}

/// Local decay exponent `log(P_{2j}/P_j)/log 2`, which tends to −a.
pub fn telescoping_exponent(a: f64, l0: usize, j: usize) -> Result<f64> {
    let mut acc = NeumaierSum::new();
    for l in l0.max(j + 1)..=2 * j {
        telescoping_factor(a, l)?;
        acc.add((-a / l as f64).ln_1p());
    }
    Ok(acc.value() / 2f64.ln())
}

/// `log P_j / log j`; converges to −a only like `1/log j`.
pub fn telescoping_log_ratio(a: f64, l0: usize, j: usize) -> Result<f64> {
    let mut acc = NeumaierSum::new();
    for l in l0..=j {
        acc.add((telescoping_factor(a, l)?).ln());
    }
    Ok(acc.value() / (j as f64).ln())
}

/// Vertical orbit sums along a bounded-type traversal:
/// `Σ_{j=1}^{n̄} (|y(F_ε^j p)| + |y(F_0^j p)|)` and
/// `Σ_{j=n_p+1}^{n̄} |y(F_ε^j p)|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerticalSums {
    pub total: f64,
    pub after_entry: f64,
    pub entry: usize,
}

pub fn vertical_sums(map: &PolyMap2, cfg: &RegionConfig, eps: C64, p: ComplexPoint, n_bar: usize) -> Result<VerticalSums> {
    let zero = C64::default();
    let mut total = NeumaierSum::new();
    let mut after = NeumaierSum::new();
    let (mut ze, mut z0) = (p, p);
    let mut entry = None;
    if regions::in_d_eps(cfg, eps, p)? {
        entry = Some(0);
    }
    for j in 1..=n_bar {
        ze = map.eval_f(eps, ze)?;
        z0 = map.eval_f(zero, z0)?;
        total.add(ze.y.norm() + z0.y.norm());
        if entry.is_none() && regions::in_d_eps(cfg, eps, ze)? {
            entry = Some(j);
        }
        if entry.is_some_and(|e| j > e) {
            after.add(ze.y.norm());
        }
    }
    Ok(VerticalSums { total: total.value(), after_entry: after.value(), entry: entry.unwrap_or(n_bar) })
}
