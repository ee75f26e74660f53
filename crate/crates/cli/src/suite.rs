//! The numbered property checks run by `verify` and the acceptance tests.
//! Each check returns its verdict together with the CSV artifacts it
//! produced; nothing here touches the file system.

use std::f64::consts::PI;
use std::fmt::Write as _;

use rayon::prelude::*;

use implab::fatou::{
    almost_fatou_errors, bounded_type_ladder, phi_iota, phi_o, sup_errors, telescoping_exponent, telescoping_partial_sum,
    ConvergenceRow, Mode,
};
use implab::julia::{
    boundary_slice, discontinuity_report, raster_meta_text, raster_to_ppm, render_k_slice, DiscontinuityParams,
    DiscontinuityReport, mask_to_ppm,
};
use implab::lavaurs::{
    alpha_for_target, lavaurs_1d, lavaurs_2d_estimate_seq, semiconjugacy_residuals, AlphaSequence, TransferWindow,
};
use implab::regions::{entry_bracket, entry_exit_times, exit_bracket, sample_window_points, verify_orbit_estimates, CompactWindow};
use implab::{c, ComplexPoint, Error, C64};

use crate::config::RunConfig;

/// A named file produced by a check.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Artifact {
    pub name: String,
    pub bytes: Vec<u8>,
}

impl Artifact {
    fn text(name: impl Into<String>, text: String) -> Self {
        Self { name: name.into(), bytes: text.into_bytes() }
    }
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub id: usize,
    pub title: &'static str,
    pub passed: bool,
    pub detail: String,
    pub artifacts: Vec<Artifact>,
}

impl Outcome {
    fn new(id: usize, title: &'static str, passed: bool, detail: String, artifacts: Vec<Artifact>) -> Self {
        Self { id, title, passed, detail, artifacts }
    }

    fn error(id: usize, title: &'static str, e: impl std::fmt::Display) -> Self {
        Self::new(id, title, false, format!("error: {e}"), Vec::new())
    }

    /// `PASS [n] title: detail` or `FAIL ...`.
    pub fn line(&self) -> String {
        format!("{} [{}] {}: {}", if self.passed { "PASS" } else { "FAIL" }, self.id, self.title, self.detail)
    }
}

const FATOU_EQUATION_TOL: f64 = 1e-8;
const ALMOST_FATOU_FINAL: f64 = 1e-3;
const LAVAURS_1D_FINAL: f64 = 1e-2;
const SEMICONJUGACY_FINAL: f64 = 1e-2;
const TELESCOPING_SUM_TOL: f64 = 1e-3;
const TELESCOPING_EXPONENT_TOL: f64 = 0.05;
const LINE_POINTS: usize = 5;
const TRANSFER_POINTS: usize = 5;

fn eps_list(cfg: &RunConfig) -> Vec<C64> {
    cfg.run.estimate_eps.iter().map(|&k| c(PI / k as f64, 0.0)).collect()
}

fn window_points(cfg: &RunConfig) -> Vec<ComplexPoint> {
    sample_window_points(&cfg.region, cfg.run.window_points, cfg.run.seed, false)
}

/// 1: `φ(F_0 p) = φ(p) + 1` for both Fatou coordinates.
pub fn fatou_equation(cfg: &RunConfig) -> Outcome {
    const TITLE: &str = "Fatou functional equation";
    let m = &cfg.map;
    let zero = C64::default();
    let tol = cfg.lavaurs.tol;
    let pts = sample_window_points(&cfg.region, cfg.run.fatou_points, cfg.run.seed, false);
    let rows: Result<Vec<(f64, f64)>, Error> = pts
        .par_iter()
        .map(|&p| {
            let e_in = (phi_iota(m, m.eval_f(zero, p)?, tol)?.value - phi_iota(m, p, tol)?.value - 1.0).norm();
            let q = p.mirror();
            let e_out = (phi_o(m, m.eval_f(zero, q)?, tol)?.value - phi_o(m, q, tol)?.value - 1.0).norm();
            Ok((e_in, e_out))
        })
        .collect();
    let rows = match rows {
        Ok(r) => r,
        Err(e) => return Outcome::error(1, TITLE, e),
    };
    let mut csv = String::from("index,x_re,x_im,y_re,y_im,err_incoming,err_outgoing\n");
    for (k, (p, (a, b))) in pts.iter().zip(&rows).enumerate() {
        let _ = writeln!(csv, "{k},{:e},{:e},{:e},{:e},{a:e},{b:e}", p.x.re, p.x.im, p.y.re, p.y.im);
    }
    let worst_in = rows.iter().map(|r| r.0).fold(0.0, f64::max);
    let worst_out = rows.iter().map(|r| r.1).fold(0.0, f64::max);
    let passed = worst_in < FATOU_EQUATION_TOL && worst_out < FATOU_EQUATION_TOL;
    let detail = format!("{} points, max error incoming {worst_in:.2e}, outgoing {worst_out:.2e} (< {FATOU_EQUATION_TOL:e})", pts.len());
    Outcome::new(1, TITLE, passed, detail, vec![Artifact::text("fatou_equation.csv", csv)])
}

/// 2: almost-Fatou coordinates converge along the bounded-type ladder.
pub fn almost_fatou(cfg: &RunConfig) -> Outcome {
    const TITLE: &str = "almost-Fatou convergence";
    let ladder = bounded_type_ladder(&cfg.run.ladder);
    let pts = window_points(cfg);
    let mirrored: Vec<ComplexPoint> = pts.iter().map(|p| p.mirror()).collect();
    let mut csv = String::from("mode,m,eps_re,eps_im,point_index,error\n");
    let mut verdicts = Vec::new();
    for (mode, name, points) in [(Mode::Incoming, "incoming", &pts), (Mode::Outgoing, "outgoing", &mirrored)] {
        let rows: Vec<ConvergenceRow> = match almost_fatou_errors(&cfg.map, &cfg.region, points, &ladder, mode, cfg.lavaurs.tol) {
            Ok(r) => r,
            Err(e) => return Outcome::error(2, TITLE, format!("{name}: {e}")),
        };
        for r in &rows {
            let _ = writeln!(csv, "{name},{},{:e},{:e},{},{:e}", r.n, r.eps.re, r.eps.im, r.point_index, r.error);
        }
        let sup = sup_errors(&rows, &ladder);
        let decreasing = sup.windows(2).all(|w| w[1] < w[0]);
        let last = *sup.last().unwrap_or(&f64::INFINITY);
        verdicts.push((name, decreasing && last < ALMOST_FATOU_FINAL, decreasing, sup));
    }
    let passed = verdicts.iter().all(|v| v.1);
    let detail = verdicts
        .iter()
        .map(|(name, _, dec, sup)| {
            let s: Vec<String> = sup.iter().map(|e| format!("{e:.2e}")).collect();
            format!("{name} sup [{}] decreasing={dec}", s.join(" "))
        })
        .collect::<Vec<_>>()
        .join("; ");
    Outcome::new(2, TITLE, passed, format!("{detail} (final < {ALMOST_FATOU_FINAL:e})"), vec![Artifact::text("almost_fatou.csv", csv)])
}

/// Evenly spaced points of [−0.1, −0.06] on the invariant line.
fn line_points() -> Vec<f64> {
    (0..LINE_POINTS).map(|k| -0.1 + 0.04 * k as f64 / (LINE_POINTS - 1) as f64).collect()
}

/// 3: `f_{ε_ν}^{n_ν} → L_α` on the invariant line.
pub fn lavaurs_line(cfg: &RunConfig) -> Outcome {
    const TITLE: &str = "1-D Lavaurs limit";
    let seq = match cfg.sequence() {
        Ok(s) => s,
        Err(e) => return Outcome::error(3, TITLE, e),
    };
    let zero = C64::default();
    let xs = line_points();
    let rows: Result<Vec<(C64, Vec<f64>)>, Error> = xs
        .par_iter()
        .map(|&x| {
            let l = lavaurs_1d(&cfg.map, seq.alpha, c(x, 0.0), cfg.lavaurs.tol)?;
            let est = lavaurs_2d_estimate_seq(&cfg.map, &seq, ComplexPoint::new(c(x, 0.0), zero))?;
            Ok((l, est.values.iter().map(|v| (v.x - l).norm()).collect()))
        })
        .collect();
    let rows = match rows {
        Ok(r) => r,
        Err(e) => return Outcome::error(3, TITLE, e),
    };
    let mut csv = String::from("x,n,eps_re,eps_im,lavaurs_re,lavaurs_im,gap\n");
    let mut passed = true;
    let mut worst_final: f64 = 0.0;
    for (&x, (l, gaps)) in xs.iter().zip(&rows) {
        for (&(eps, n), g) in seq.entries.iter().zip(gaps) {
            let _ = writeln!(csv, "{x:e},{n},{:e},{:e},{:e},{:e},{g:e}", eps.re, eps.im, l.re, l.im);
        }
        let last = *gaps.last().unwrap();
        worst_final = worst_final.max(last);
        passed &= gaps.windows(2).all(|w| w[1] < w[0]) && last < LAVAURS_1D_FINAL;
    }
    let detail = format!("{} line points, alpha = {}, worst final gap {worst_final:.2e} (< {LAVAURS_1D_FINAL:e}), monotone={passed}", xs.len(), seq.alpha);
    Outcome::new(3, TITLE, passed, detail, vec![Artifact::text("lavaurs_1d.csv", csv)])
}

/// 4: Cauchy gaps of the 2-D estimate and the semiconjugacy residual.
pub fn lavaurs_plane(cfg: &RunConfig) -> Outcome {
    const TITLE: &str = "2-D Lavaurs limit";
    let seq = match cfg.sequence() {
        Ok(s) => s,
        Err(e) => return Outcome::error(4, TITLE, e),
    };
    let window = match TransferWindow::new(&cfg.map, &cfg.region, seq.alpha, cfg.lavaurs.p0, cfg.lavaurs.tol) {
        Ok(w) => w,
        Err(e) => return Outcome::error(4, TITLE, format!("window: {e}")),
    };
    let pts = window.points(TRANSFER_POINTS);
    let rows: Result<Vec<_>, Error> = pts
        .par_iter()
        .map(|&p| {
            let est = lavaurs_2d_estimate_seq(&cfg.map, &seq, p)?;
            let res = semiconjugacy_residuals(&cfg.map, &est, cfg.lavaurs.tol)?;
            Ok((est, res))
        })
        .collect();
    let rows = match rows {
        Ok(r) => r,
        Err(e) => return Outcome::error(4, TITLE, e),
    };
    let mut csv = String::new();
    let mut passed = true;
    let (mut worst_res, mut worst_gap): (f64, f64) = (0.0, 0.0);
    for (k, (est, res)) in rows.iter().enumerate() {
        let part = est.to_csv(Some(res));
        if k == 0 {
            csv.push_str(&part);
        } else {
            csv.extend(part.lines().skip(1).map(|l| format!("{l}\n")));
        }
        let rises = est.gaps.windows(2).filter(|g| g[1] >= g[0]).count();
        let last = *res.last().unwrap();
        worst_res = worst_res.max(last);
        worst_gap = worst_gap.max(est.cauchy_gap);
        passed &= rises <= 1 && last < SEMICONJUGACY_FINAL;
    }
    let detail = format!(
        "{} window points (radius {:.2e}), worst final cauchy gap {worst_gap:.2e}, worst residual {worst_res:.2e} (< {SEMICONJUGACY_FINAL:e})",
        pts.len(),
        window.radius
    );
    Outcome::new(4, TITLE, passed, detail, vec![Artifact::text("lavaurs_2d.csv", csv)])
}

/// 5: the orbit estimates (a)–(e) and the vertical decay exponent.
pub fn orbit_estimates(cfg: &RunConfig) -> Outcome {
    const TITLE: &str = "orbit estimates";
    let eps = eps_list(cfg);
    let run = || -> Result<_, Error> {
        let window = CompactWindow::new(&cfg.region, window_points(cfg), &eps)?;
        verify_orbit_estimates(&cfg.map, &cfg.region, &window, &eps)
    };
    let report = match run() {
        Ok(r) => r,
        Err(e) => return Outcome::error(5, TITLE, e),
    };
    let violations: usize = report.rows.iter().filter(|r| !r.passed()).count();
    let detail = format!(
        "{} rows, {violations} violations, rho_tilde = {:.3}, C = {:.3e}, C_eps = {:.3e}, c1 = {:.3e}",
        report.rows.len(),
        report.rho_tilde,
        report.c_compare,
        report.c_eps_max,
        report.c1
    );
    Outcome::new(5, TITLE, report.all_passed(), detail, vec![Artifact::text("orbit_estimates.csv", report.to_csv())])
}

/// 6: partial sums and decay exponent of the telescoping products.
pub fn telescoping(_cfg: &RunConfig) -> Outcome {
    const TITLE: &str = "telescoping products";
    let mut csv = String::from("quantity,a,l0,j,value,target\n");
    let sum = match telescoping_partial_sum(2.0, 3, 10_000) {
        Ok(s) => s,
        Err(e) => return Outcome::error(6, TITLE, e),
    };
    let _ = writeln!(csv, "partial_sum,2,3,10000,{sum:e},1");
    let mut passed = (sum - 1.0).abs() < TELESCOPING_SUM_TOL;
    let mut worst: f64 = 0.0;
    for a in [1.5, 2.0, 3.0] {
        let l0 = a as usize + 1;
        match telescoping_exponent(a, l0, 10_000) {
            Ok(e) => {
                let _ = writeln!(csv, "exponent,{a},{l0},10000,{e:e},{:e}", -a);
                worst = worst.max((e + a).abs());
            }
            Err(e) => return Outcome::error(6, TITLE, e),
        }
    }
    passed &= worst < TELESCOPING_EXPONENT_TOL;
    let detail = format!("sum at J=1e4 is {sum:.6} (|1 - sum| < {TELESCOPING_SUM_TOL:e}), worst exponent error {worst:.2e} (< 0.05)");
    Outcome::new(6, TITLE, passed, detail, vec![Artifact::text("telescoping.csv", csv)])
}

/// 7: entry and exit times inside their brackets.
pub fn entry_exit(cfg: &RunConfig) -> Outcome {
    const TITLE: &str = "entry/exit bounds";
    let eps = eps_list(cfg);
    let window = match CompactWindow::new(&cfg.region, window_points(cfg), &eps) {
        Ok(w) => w,
        Err(e) => return Outcome::error(7, TITLE, e),
    };
    let pairs: Vec<(usize, C64)> = (0..window.points.len()).flat_map(|k| eps.iter().map(move |&e| (k, e))).collect();
    let rows: Result<Vec<_>, Error> = pairs
        .par_iter()
        .map(|&(k, e)| {
            let budget = (4.0 * PI / e.norm()).ceil() as usize;
            let ee = entry_exit_times(&cfg.map, &cfg.region, e, window.points[k], budget)?;
            Ok((k, e, ee, entry_bracket(&cfg.region, &window, e), exit_bracket(&cfg.region, &window, e)))
        })
        .collect();
    let rows = match rows {
        Ok(r) => r,
        Err(e) => return Outcome::error(7, TITLE, e),
    };
    let mut csv = String::from("point_index,eps_re,eps_im,n_p,entry_lo,entry_hi,n_prime_p,exit_lo,exit_hi,inside\n");
    let mut outside = 0;
    for (k, e, ee, (a, b), (x, y)) in &rows {
        let (np, npp) = (ee.n_p as f64, ee.n_prime_p as f64);
        let inside = *a <= np && np <= *b && *x <= npp && npp <= *y;
        outside += usize::from(!inside);
        let _ = writeln!(csv, "{k},{:e},{:e},{},{a:e},{b:e},{},{x:e},{y:e},{inside}", e.re, e.im, ee.n_p, ee.n_prime_p);
    }
    let detail = format!("{} (point, eps) pairs, {outside} outside their brackets (M- = {}, M+ = {})", rows.len(), window.m_minus, window.m_plus);
    Outcome::new(7, TITLE, outside == 0, detail, vec![Artifact::text("entry_exit.csv", csv)])
}

/// Criteria 1–7 in order.
pub fn verification_suite(cfg: &RunConfig) -> Vec<Outcome> {
    vec![
        fatou_equation(cfg),
        almost_fatou(cfg),
        lavaurs_line(cfg),
        lavaurs_plane(cfg),
        orbit_estimates(cfg),
        telescoping(cfg),
        entry_exit(cfg),
    ]
}

/// The phase of the implosion scene: explicit, or chosen so that the
/// transfer map sends `p0` to the configured point of the line.
pub fn implode_alpha(cfg: &RunConfig) -> Result<C64, Error> {
    match cfg.lavaurs.implode_alpha {
        Some(a) => Ok(a),
        None => {
            let target = ComplexPoint::new(c(cfg.lavaurs.implode_target, 0.0), C64::default());
            alpha_for_target(&cfg.map, cfg.lavaurs.p0, target, cfg.lavaurs.tol)
        }
    }
}

fn eps_tag(eps: C64) -> String {
    format!("{:.6e}_{:.6e}", eps.re, eps.im)
}

/// Files for one rendered slice: the K raster with its boundary drawn
/// on top, the boundary alone, and the metadata sidecar.
pub fn render_artifacts(cfg: &RunConfig, eps: C64) -> Result<Vec<Artifact>, Error> {
    let raster = render_k_slice(&cfg.map, eps, &cfg.grid)?;
    let boundary = boundary_slice(&raster);
    let stem = format!("k_eps_{}_{}", eps_tag(eps), cfg.grid.hash());
    Ok(vec![
        Artifact { name: format!("{stem}.ppm"), bytes: raster_to_ppm(&raster, Some(&boundary)) },
        Artifact { name: format!("{stem}_boundary.ppm"), bytes: mask_to_ppm(&boundary) },
        Artifact::text(format!("{stem}.txt"), raster_meta_text(&raster)),
    ])
}

/// Runs the discontinuity scene and collects its files.
pub fn implode(cfg: &RunConfig) -> Result<(DiscontinuityReport, Vec<Artifact>), Error> {
    let alpha = implode_alpha(cfg)?;
    let seq = AlphaSequence::new(&cfg.region, alpha, &cfg.lavaurs.n_list)?;
    let params = DiscontinuityParams { m_max: cfg.lavaurs.m_max, candidate_cap: cfg.lavaurs.candidate_cap, ..Default::default() };
    let rep = discontinuity_report(&cfg.map, &seq, &cfg.grid, params)?;
    let mut out = vec![
        Artifact { name: "k0.ppm".into(), bytes: raster_to_ppm(&rep.k0, Some(&boundary_slice(&rep.k0))) },
        Artifact::text("k0.txt", raster_meta_text(&rep.k0)),
    ];
    for (k, r) in rep.k_nu.iter().enumerate() {
        out.push(Artifact { name: format!("k_nu{k}.ppm"), bytes: raster_to_ppm(r, None) });
        out.push(Artifact::text(format!("k_nu{k}.txt"), raster_meta_text(r)));
    }
    out.push(Artifact { name: "limsup.ppm".into(), bytes: mask_to_ppm(&rep.limsup) });
    out.push(Artifact::text("witnesses.csv", rep.witnesses_csv()));
    out.push(Artifact::text("hausdorff.csv", rep.hausdorff_csv()));
    out.push(Artifact::text("implode_summary.txt", rep.summary()));
    Ok((rep, out))
}

/// 8 as a verdict on an implosion report.
pub fn discontinuity_outcome(rep: &DiscontinuityReport, artifacts: Vec<Artifact>) -> Outcome {
    let best = rep.witnesses.iter().map(|w| w.jump_lower_bound).fold(0.0, f64::max);
    let passed = !rep.witnesses.is_empty() && rep.consistent();
    let detail = format!(
        "{} witnesses (largest jump >= {best:.3e}), {} certified of {} candidates, limsup/certified overlap {}, semicontinuity violations {}",
        rep.witnesses.len(),
        rep.certified.len(),
        rep.candidates,
        rep.overlap.len(),
        rep.usc_violations.len()
    );
    Outcome::new(8, "discontinuity witnesses", passed, detail, artifacts)
}

/// Runs `f` on a dedicated pool of `threads` workers.
pub fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new().num_threads(threads).build().expect("thread pool").install(f)
}
