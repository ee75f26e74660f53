//! The cone C̃_0(γ, R, s), its rotated copies C̃_ε, the gate D̃_ε, entry and
//! exit times, and numerical checks of the orbit estimates that hold while
//! an orbit crosses the gate.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fatou::u_eps;
use crate::mapfamily::PolyMap2;
use crate::point::{c, ComplexPoint, C64};
use crate::sum::ols_slope;

/// Free parameters of the regions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegionParams {
    pub gamma: f64,
    pub gamma_prime: f64,
    pub r: f64,
    pub s: f64,
    pub rho_prime: f64,
    pub rho_dblprime: f64,
    /// Sector constant: admissible ε satisfy |Im ε| < c_eps·|ε|².
    pub c_eps: f64,
}

impl Default for RegionParams {
    fn default() -> Self {
        Self { gamma: 0.02, gamma_prime: 0.05, r: 0.1, s: 0.01, rho_prime: 1.5, rho_dblprime: 1.05, c_eps: 1.0 }
    }
}

/// Validated region parameters together with the derived constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegionConfig {
    pub params: RegionParams,
    pub rho: f64,
    /// K = 2π(ρ″ − 1)
    pub k: f64,
    /// τ = |tan(−π/2 + K/2)|
    pub tau: f64,
    /// e^{4πρτ}
    pub y_gate: f64,
}

impl RegionConfig {
    /// `rho` is the map's ρ.
    pub fn new(params: RegionParams, rho: f64) -> Result<Self> {
        let p = params;
        let bad = |msg: &str| Err(Error::InvalidRegion(msg.to_string()));
        let all = [p.gamma, p.gamma_prime, p.r, p.s, p.rho_prime, p.rho_dblprime, p.c_eps, rho];
        if !all.iter().all(|v| v.is_finite()) {
            return bad("non-finite parameter");
        }
        if !(0.0 < p.gamma && p.gamma < p.gamma_prime && p.gamma_prime < 1.0) {
            return bad("need 0 < gamma < gamma_prime < 1");
        }
        if !(p.r > 0.0 && p.s > 0.0 && p.c_eps > 0.0) {
            return bad("R, s and c_eps must be positive");
        }
        if !(1.0 < p.rho_prime && p.rho_prime < rho) {
            return bad("need 1 < rho_prime < rho");
        }
        if !(1.0 < p.rho_dblprime && p.rho_dblprime < 1.25) {
            return bad("need 1 < rho_dblprime < 5/4");
        }
        let k = 2.0 * PI * (p.rho_dblprime - 1.0);
        let tau = (-PI / 2.0 + k / 2.0).tan().abs();
        if k > PI / 4.0 {
            return bad("K = 2π(rho_dblprime − 1) exceeds π/4");
        }
        if !((2.0 * k / (2.0 * k).tan()).abs() > 1.0 / p.rho_prime) {
            return bad("|4π(ρ″−1)/tan(4π(ρ″−1))| must exceed 1/ρ′");
        }
        let gp = p.gamma_prime;
        if !(p.rho_prime < rho * (1.0 - gp) / (1.0 + gp * gp).sqrt()) {
            return bad("rho_prime too large for gamma_prime");
        }
        if !(4.0 * tau * p.s < 1.0) {
            return bad("need 4·tau·s < 1");
        }
        Ok(Self { params, rho, k, tau, y_gate: (4.0 * PI * rho * tau).exp() })
    }

    pub fn for_map(params: RegionParams, map: &PolyMap2) -> Result<Self> {
        Self::new(params, map.rho())
    }
}

/// `|Im x| ≤ −γ·Re x`, `|x| ≤ R`, `|y| ≤ s|x|`, with γ′ when flagged.
pub fn in_c0(cfg: &RegionConfig, p: ComplexPoint, use_gamma_prime: bool) -> bool {
    let g = if use_gamma_prime { cfg.params.gamma_prime } else { cfg.params.gamma };
    in_cone(g, cfg.params.r, cfg.params.s, p)
}

fn in_cone(gamma: f64, r: f64, s: f64, p: ComplexPoint) -> bool {
    let ax = p.x.norm();
    p.x.im.abs() <= -gamma * p.x.re && ax <= r && p.y.norm() <= s * ax
}

/// Rejects ε outside `Re ε > 0, |Im ε| < c|ε|²`.
pub fn check_sector(cfg: &RegionConfig, eps: C64) -> Result<()> {
    if eps.re > 0.0 && eps.im.abs() < cfg.params.c_eps * eps.norm_sqr() {
        Ok(())
    } else {
        Err(Error::EpsOutsideSector)
    }
}

/// `Re((ε/|ε|)·u_ε(x)) + π/(2|ε|)`, the distance travelled into the gate.
pub fn gate_depth(eps: C64, x: C64) -> Result<f64> {
    let m = eps.norm();
    Ok((eps / m * u_eps(eps, x)?).re + PI / (2.0 * m))
}

/// Membership in the gate D̃_ε.
pub fn in_d_eps(cfg: &RegionConfig, eps: C64, p: ComplexPoint) -> Result<bool> {
    check_sector(cfg, eps)?;
    let m = eps.norm();
    let v = match gate_depth(eps, p.x) {
        Ok(v) => v,
        // x = ±iε are the split fixed points inside the gate.
        Err(Error::PoleAtGate) => return Ok(p.y.norm() < 2.0 * cfg.y_gate * m),
        Err(e) => return Err(e),
    };
    let lo = cfg.k / m;
    let hi = PI / m - cfg.k / (2.0 * m);
    Ok(lo < v && v < hi && p.y.norm() < 2.0 * cfg.y_gate * m)
}

/// Membership in C̃_ε = ((ε/|ε|)·C̃_0) ∖ D̃_ε; at ε = 0 this is C̃_0.
pub fn in_c_eps(cfg: &RegionConfig, eps: C64, p: ComplexPoint) -> Result<bool> {
    if eps.norm() == 0.0 {
        return Ok(in_c0(cfg, p, false));
    }
    let rot = eps.conj() / eps.norm();
    let turned = ComplexPoint::new(p.x * rot, p.y);
    Ok(in_c0(cfg, turned, false) && !in_d_eps(cfg, eps, p)?)
}

/// Sample points of C̃_0 with constants bracketing their gate depth.
#[derive(Debug, Clone, PartialEq)]
pub struct CompactWindow {
    pub points: Vec<ComplexPoint>,
    pub m_minus: i64,
    pub m_plus: i64,
}

impl CompactWindow {
    /// Computes M⁻ = ⌊0.9·min⌋ and M⁺ = ⌈1.1·max⌉ of the gate depth at the
    /// smallest |ε| and checks that every ε in `eps_list` respects them.
    pub fn new(cfg: &RegionConfig, points: Vec<ComplexPoint>, eps_list: &[C64]) -> Result<Self> {
        if points.is_empty() || eps_list.is_empty() {
            return Err(Error::InvalidInput("window needs points and parameters".into()));
        }
        if let Some(k) = points.iter().position(|&p| !in_c0(cfg, p, false)) {
            return Err(Error::InvalidInput(format!("window point {k} is outside the cone")));
        }
        let smallest = eps_list.iter().copied().min_by(|a, b| a.norm().total_cmp(&b.norm())).unwrap();
        let depths: Vec<f64> = points.iter().map(|p| gate_depth(smallest, p.x)).collect::<Result<_>>()?;
        let lo = depths.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = depths.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let m_minus = (0.9 * lo).floor() as i64;
        let m_plus = (1.1 * hi).ceil() as i64;
        if m_minus < 1 {
            return Err(Error::InvalidInput("window reaches too close to the origin".into()));
        }
        for &eps in eps_list {
            check_sector(cfg, eps)?;
            for p in &points {
                let v = gate_depth(eps, p.x)?;
                if !(m_minus as f64 <= v && v <= m_plus as f64) {
                    return Err(Error::InvalidInput(format!("gate depth {v} of a window point leaves [M-, M+] at eps = {eps}")));
                }
            }
        }
        Ok(Self { points, m_minus, m_plus })
    }
}

/// Deterministic sample of `count` points well inside C̃_0: |x| between
/// `0.6R` and `0.95R`, argument within 0.9γ of π, and |y| ≤ 0.9·s|x|.
/// With `on_line` the points have y = 0.
pub fn sample_window_points(cfg: &RegionConfig, count: usize, seed: u64, on_line: bool) -> Vec<ComplexPoint> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = cfg.params;
    (0..count)
        .map(|_| {
            let t = rng.gen_range(0.6 * p.r..0.95 * p.r);
            let slope = rng.gen_range(-0.9 * p.gamma..0.9 * p.gamma);
            let x = c(-t, slope * t) / (1.0 + slope * slope).sqrt();
            let y = if on_line {
                C64::default()
            } else {
                let rad = 0.9 * p.s * x.norm() * rng.gen_range(0.1f64..1.0).sqrt();
                C64::from_polar(rad, rng.gen_range(0.0..2.0 * PI))
            };
            ComplexPoint::new(x, y)
        })
        .collect()
}

/// Entry time into D̃_ε and exit time from C̃_ε ∪ D̃_ε.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EntryExit {
    pub n_p: usize,
    pub n_prime_p: usize,
    /// The orbit visited C̃_ε again after the exit time (within the budget).
    pub reentered: bool,
}

/// Simulates the orbit of `p` under F_ε. A point that starts in the gate
/// has entry time 0.
pub fn entry_exit_times(map: &PolyMap2, cfg: &RegionConfig, eps: C64, p: ComplexPoint, budget: usize) -> Result<EntryExit> {
    check_sector(cfg, eps)?;
    let mut z = p;
    let mut entry = None;
    let mut exit = None;
    let mut reentered = false;
    for j in 0..=budget {
        let in_d = in_d_eps(cfg, eps, z)?;
        let in_c = in_c_eps(cfg, eps, z)?;
        match exit {
            None => {
                if entry.is_none() && in_d {
                    entry = Some(j);
                }
                if !in_c && !in_d {
                    exit = Some(j);
                }
            }
            Some(_) => {
                if in_c {
                    reentered = true;
                    break;
                }
            }
        }
        if j == budget || !(z.norm() < 10.0) {
            break;
        }
        z = map.step(eps, z);
    }
    let Some(n_prime_p) = exit else {
        return Err(Error::BudgetExceeded { budget });
    };
    Ok(EntryExit { n_p: entry.unwrap_or(n_prime_p), n_prime_p, reentered })
}

/// Bracket `[K/(ρ″|ε|) − M⁺/ρ″, K/((2−ρ″)|ε|) − M⁻/(2−ρ″)]` for the entry time.
pub fn entry_bracket(cfg: &RegionConfig, window: &CompactWindow, eps: C64) -> (f64, f64) {
    time_bracket(cfg, window, eps, cfg.k)
}

/// Bracket for the exit time, with π − K/2 in place of K.
pub fn exit_bracket(cfg: &RegionConfig, window: &CompactWindow, eps: C64) -> (f64, f64) {
    time_bracket(cfg, window, eps, PI - cfg.k / 2.0)
}

fn time_bracket(cfg: &RegionConfig, window: &CompactWindow, eps: C64, depth: f64) -> (f64, f64) {
    let r2 = cfg.params.rho_dblprime;
    let m = eps.norm();
    (
        depth / (r2 * m) - window.m_plus as f64 / r2,
        depth / ((2.0 - r2) * m) - window.m_minus as f64 / (2.0 - r2),
    )
}

/// Outcome of [`check_invariance`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InvarianceReport {
    pub checked: usize,
    pub violations: usize,
}

impl InvarianceReport {
    pub fn holds(&self) -> bool {
        self.violations == 0
    }
}

fn sample_cone(rng: &mut ChaCha8Rng, gamma: f64, r: f64, s: f64) -> ComplexPoint {
    // Log-uniform radius so that the neighbourhood of the origin is probed.
    let t = r * (rng.gen_range((1e-4f64).ln()..0.0)).exp();
    let slope = rng.gen_range(-gamma..gamma);
    let x = c(-t, slope * t) / (1.0 + slope * slope).sqrt();
    let rad = s * x.norm() * rng.gen_range(0.0f64..1.0).sqrt();
    ComplexPoint::new(x, C64::from_polar(rad, rng.gen_range(0.0..2.0 * PI)))
}

/// For ε ≠ 0: images of sampled points of C̃_ε stay in C̃_ε ∪ D̃_ε.
/// For ε = 0: images of sampled points of C̃_0(γ′) lie in C̃_0(γ).
pub fn check_invariance(map: &PolyMap2, cfg: &RegionConfig, eps: C64, sample: usize, seed: u64) -> Result<InvarianceReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = cfg.params;
    let mut report = InvarianceReport { checked: 0, violations: 0 };
    if eps.norm() == 0.0 {
        for _ in 0..sample {
            let z = sample_cone(&mut rng, p.gamma_prime, p.r, p.s);
            report.checked += 1;
            if !in_c0(cfg, map.step(eps, z), false) {
                report.violations += 1;
            }
        }
        return Ok(report);
    }
    check_sector(cfg, eps)?;
    let rot = eps / eps.norm();
    let mut attempts = 0;
    while report.checked < sample && attempts < 100 * sample {
        attempts += 1;
        let z0 = sample_cone(&mut rng, p.gamma, p.r, p.s);
        let z = ComplexPoint::new(z0.x * rot, z0.y);
        if !in_c_eps(cfg, eps, z)? {
            continue;
        }
        report.checked += 1;
        let img = map.step(eps, z);
        if !(in_c_eps(cfg, eps, img)? || in_d_eps(cfg, eps, img)?) {
            report.violations += 1;
        }
    }
    Ok(report)
}

/// F_0(C̃_0(γ)) ⊂ C̃_0(γ) on samples.
pub fn check_self_invariance_unperturbed(map: &PolyMap2, cfg: &RegionConfig, sample: usize, seed: u64) -> InvarianceReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = cfg.params;
    let mut violations = 0;
    for _ in 0..sample {
        let z = sample_cone(&mut rng, p.gamma, p.r, p.s);
        if !in_c0(cfg, map.step(C64::default(), z), false) {
            violations += 1;
        }
    }
    InvarianceReport { checked: sample, violations }
}

/// The five orbit estimates checked by [`verify_orbit_estimates`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EstimateId {
    /// |x_j| ≤ 2/(j + M⁻) before the entry time.
    UpperX,
    /// |x_j| ≥ (1/ρ′ − C_ε)/(M⁺ + j) − C(1 + log(M⁻ + j))/(M⁻ + j)².
    LowerX,
    /// |y_J| ≤ c₁|y_0|·Π_{l=M⁺}^{M⁺+J−1}(1 − ρ̃/l).
    VerticalContraction,
    /// |y_j| ≤ e^{4πρτ}|ε| inside the gate.
    GateY,
    /// |y_n||x_n|^{−a−1} is non-increasing along unperturbed orbits.
    HakimMonotone,
}

impl EstimateId {
    pub const ALL: [EstimateId; 5] =
        [Self::UpperX, Self::LowerX, Self::VerticalContraction, Self::GateY, Self::HakimMonotone];

    pub fn label(&self) -> &'static str {
        match self {
            Self::UpperX => "a",
            Self::LowerX => "b",
            Self::VerticalContraction => "c",
            Self::GateY => "d",
            Self::HakimMonotone => "e",
        }
    }
}

/// Worst relative margin `(bound − value)/bound` for one estimate, point
/// and parameter; negative margins are violations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimateRow {
    pub id: EstimateId,
    pub point_index: usize,
    pub eps: C64,
    pub worst_j: usize,
    pub margin: f64,
}

impl EstimateRow {
    pub fn passed(&self) -> bool {
        self.margin >= 0.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimateReport {
    pub rows: Vec<EstimateRow>,
    /// Constant C of the comparison with the model orbit.
    pub c_compare: f64,
    /// Largest C_ε over the tested parameters.
    pub c_eps_max: f64,
    /// Constant c₁ of the vertical contraction.
    pub c1: f64,
    /// Measured vertical decay exponent.
    pub rho_tilde: f64,
}

impl EstimateReport {
    pub fn violations(&self, id: EstimateId) -> usize {
        self.rows.iter().filter(|r| r.id == id && !r.passed()).count()
    }

    pub fn all_passed(&self) -> bool {
        self.rows.iter().all(EstimateRow::passed) && self.rho_tilde > 1.0
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("estimate,point_index,eps_re,eps_im,worst_j,margin\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{:e},{:e},{},{:e}\n",
                r.id.label(),
                r.point_index,
                r.eps.re,
                r.eps.im,
                r.worst_j,
                r.margin
            ));
        }
        out
    }
}

/// Orbit length used for the unperturbed fits.
const FIT_HORIZON: usize = 10_000;
const FIT_START: usize = 100;

struct Track {
    worst_j: usize,
    margin: f64,
}

impl Track {
    fn new() -> Self {
        Self { worst_j: 0, margin: f64::INFINITY }
    }

    fn see(&mut self, j: usize, bound: f64, value: f64) {
        let m = if bound > 0.0 { (bound - value) / bound } else { bound - value };
        if m < self.margin {
            self.margin = m;
            self.worst_j = j;
        }
    }
}

/// Runs the orbit estimates on every (point, ε) pair of the window.
///
/// Fitted quantities: ρ̃ is the log-log slope of |y_J| over
/// J ∈ [100, 10⁴] on unperturbed orbits; c₁ is calibrated on the same
/// unperturbed orbits and then tested on the perturbed ones; C is the
/// envelope of the distance to the model orbit ε·tan(ε(u_ε(x_0) + j)), and
/// C_ε the shortfall of that model orbit below 1/(ρ′(M⁺ + j)).
pub fn verify_orbit_estimates(map: &PolyMap2, cfg: &RegionConfig, window: &CompactWindow, eps_list: &[C64]) -> Result<EstimateReport> {
    let zero = C64::default();
    let (mm, mp) = (window.m_minus as f64, window.m_plus as f64);
    let hakim_a = (map.rho() - 1.0) / 2.0;

    // Unperturbed orbits: decay exponent fit and Hakim monotonicity.
    let unperturbed: Vec<Vec<ComplexPoint>> = window
        .points
        .par_iter()
        .map(|&p| {
            let mut orbit = Vec::with_capacity(FIT_HORIZON + 1);
            let mut z = p;
            orbit.push(z);
            for _ in 0..FIT_HORIZON {
                z = map.step(zero, z);
                orbit.push(z);
            }
            orbit
        })
        .collect();
    let slopes: Vec<f64> = unperturbed
        .iter()
        .filter(|o| o[0].y.norm() > 0.0)
        .map(|o| {
            let (xs, ys): (Vec<f64>, Vec<f64>) = (FIT_START..=FIT_HORIZON)
                .step_by(10)
                .map(|j| ((j as f64).ln(), (o[j].y.norm() / o[0].y.norm()).ln()))
                .unzip();
            ols_slope(&xs, &ys)
        })
        .collect();
    let rho_tilde = if slopes.is_empty() { f64::NAN } else { -slopes.iter().sum::<f64>() / slopes.len() as f64 };

    // Vertical contraction reference Π_{l=M⁺}^{M⁺+J−1}(1 − ρ̃/l).
    let horizon = FIT_HORIZON.max(window_budget(cfg, eps_list));
    let mut reference = Vec::with_capacity(horizon + 1);
    let mut prod = 1.0;
    reference.push(prod);
    for jj in 0..horizon {
        prod *= 1.0 - rho_tilde / (window.m_plus as usize + jj) as f64;
        reference.push(prod);
    }
    let c1 = unperturbed
        .iter()
        .filter(|o| o[0].y.norm() > 0.0)
        .flat_map(|o| (0..=FIT_HORIZON).map(|j| o[j].y.norm() / (o[0].y.norm() * reference[j])))
        .fold(0.0, f64::max);

    let mut rows = Vec::new();
    for (k, o) in unperturbed.iter().enumerate() {
        let mut t = Track::new();
        let q0 = o[0].y.norm() * o[0].x.norm().powf(-hakim_a - 1.0);
        let mut prev = q0;
        for (j, z) in o.iter().enumerate() {
            let qn = z.y.norm() * z.x.norm().powf(-hakim_a - 1.0);
            // Non-increasing up to rounding.
            t.see(j, prev * (1.0 + 1e-12) + f64::MIN_POSITIVE, qn);
            prev = qn;
        }
        rows.push(EstimateRow { id: EstimateId::HakimMonotone, point_index: k, eps: zero, worst_j: t.worst_j, margin: t.margin });
    }

    // Perturbed orbits up to the exit time.
    struct Traced {
        k: usize,
        eps: C64,
        ee: EntryExit,
        orbit: Vec<ComplexPoint>,
        model: Vec<C64>,
    }
    let pairs: Vec<(usize, C64)> = (0..window.points.len()).flat_map(|k| eps_list.iter().map(move |&e| (k, e))).collect();
    let traced: Vec<Traced> = pairs
        .par_iter()
        .map(|&(k, eps)| {
            let p = window.points[k];
            let ee = entry_exit_times(map, cfg, eps, p, 4 * window_budget(cfg, &[eps]))?;
            let mut orbit = Vec::with_capacity(ee.n_prime_p + 1);
            let mut z = p;
            orbit.push(z);
            for _ in 0..ee.n_prime_p {
                z = map.step(eps, z);
                orbit.push(z);
            }
            let u0 = u_eps(eps, p.x)?;
            let model = (0..=ee.n_p).map(|j| eps * (eps * (u0 + j as f64)).tan()).collect();
            Ok(Traced { k, eps, ee, orbit, model })
        })
        .collect::<Result<_>>()?;

    let log_term = |j: usize| (1.0 + (mm + j as f64).ln()) / (mm + j as f64).powi(2);
    let c_compare = traced
        .iter()
        .flat_map(|t| (0..=t.ee.n_p).map(move |j| (t.orbit[j].x - t.model[j]).norm() / log_term(j)))
        .fold(0.0, f64::max);
    let c_eps_of = |t: &Traced| {
        (0..=t.ee.n_p)
            .map(|j| 1.0 / cfg.params.rho_prime - t.model[j].norm() * (mp + j as f64))
            .fold(0.0, f64::max)
    };
    let mut c_eps_max: f64 = 0.0;

    for t in &traced {
        let n_p = t.ee.n_p;
        let mut a = Track::new();
        let mut b = Track::new();
        let mut cc = Track::new();
        let c_eps = if t.eps.im == 0.0 { 0.0 } else { c_eps_of(t) };
        c_eps_max = c_eps_max.max(c_eps);
        let y0 = t.orbit[0].y.norm();
        for j in 0..=n_p {
            let ax = t.orbit[j].x.norm();
            let jf = j as f64;
            a.see(j, 2.0 / (jf + mm), ax);
            let lower = (1.0 / cfg.params.rho_prime - c_eps) / (mp + jf) - c_compare * log_term(j);
            // A lower bound: the margin is how far the value sits above it.
            let m = (ax - lower) / ax;
            if m < b.margin {
                b.margin = m;
                b.worst_j = j;
            }
            if y0 > 0.0 {
                cc.see(j, c1 * y0 * reference[j], t.orbit[j].y.norm());
            }
        }
        if y0 == 0.0 {
            cc.margin = 1.0;
        }
        let mut d = Track::new();
        for j in n_p + 1..=t.ee.n_prime_p {
            d.see(j, cfg.y_gate * t.eps.norm(), t.orbit[j].y.norm());
        }
        if t.ee.n_prime_p <= n_p {
            d.margin = 1.0;
        }
        for (id, tr) in [
            (EstimateId::UpperX, a),
            (EstimateId::LowerX, b),
            (EstimateId::VerticalContraction, cc),
            (EstimateId::GateY, d),
        ] {
            rows.push(EstimateRow { id, point_index: t.k, eps: t.eps, worst_j: tr.worst_j, margin: tr.margin });
        }
    }
    rows.sort_by(|x, y| {
        (x.id, x.point_index).cmp(&(y.id, y.point_index)).then(x.eps.norm().total_cmp(&y.eps.norm()).reverse())
    });
    Ok(EstimateReport { rows, c_compare, c_eps_max, c1, rho_tilde })
}

/// A generous orbit budget for crossing the gate: 2π/|ε| steps.
fn window_budget(_cfg: &RegionConfig, eps_list: &[C64]) -> usize {
    eps_list.iter().map(|e| (2.0 * PI / e.norm()).ceil() as usize).max().unwrap_or(0)
}
