//! α-sequences and the Lavaurs transfer map, in one dimension on the
//! invariant line and in two dimensions as a high-iterate limit.

use std::f64::consts::PI;
use std::fmt::Write as _;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fatou::{phi_iota, phi_o, psi_o_line};
use crate::mapfamily::PolyMap2;
use crate::point::{ComplexPoint, C64};
use crate::regions::{self, RegionConfig};

/// Orbits leaving this ball while estimating `T_α` count as escaped.
pub const ESCAPE_BALL: f64 = 10.0;

/// Pairs `(ε_ν, n_ν)` with `n_ν − π/ε_ν = α`.
#[derive(Debug, Clone, PartialEq)]
pub struct AlphaSequence {
    pub alpha: C64,
    pub entries: Vec<(C64, usize)>,
}

impl AlphaSequence {
    /// Builds `ε_ν = π/(n_ν − α)`. Every entry must lie in the admissible
    /// sector of `cfg`; offending indices are reported together.
    pub fn new(cfg: &RegionConfig, alpha: C64, n_list: &[usize]) -> Result<Self> {
        if !alpha.is_finite() {
            return Err(Error::InvalidInput("alpha must be finite".into()));
        }
        if n_list.is_empty() {
            return Err(Error::InvalidInput("empty n list".into()));
        }
        if n_list.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidInput("n list must be strictly increasing".into()));
        }
        if let Some(&n) = n_list.iter().find(|&&n| n as f64 <= alpha.norm() + 1.0) {
            return Err(Error::InvalidInput(format!("n = {n} does not exceed |alpha| + 1")));
        }
        let entries: Vec<(C64, usize)> = n_list.iter().map(|&n| (PI / (n as f64 - alpha), n)).collect();
        let bad: Vec<usize> = entries
            .iter()
            .enumerate()
            .filter(|(_, (eps, _))| regions::check_sector(cfg, *eps).is_err())
            .map(|(k, _)| k)
            .collect();
        if !bad.is_empty() {
            return Err(Error::SectorViolation(bad));
        }
        Ok(Self { alpha, entries })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// The half-length sequence `(ε_ν, ⌊n_ν/2⌋)`, which is of bounded type.
    pub fn halved(&self) -> Vec<(C64, usize)> {
        self.entries.iter().map(|&(eps, n)| (eps, n / 2)).collect()
    }
}

/// `L_α = ψ^o ∘ (α + ·) ∘ φ^ι` on the invariant line.
pub fn lavaurs_1d(map: &PolyMap2, alpha: C64, x: C64, tol: f64) -> Result<C64> {
    let p = ComplexPoint::new(x, C64::default());
    let z = phi_iota(map, p, tol * 0.1)?.value;
    psi_o_line(map, alpha + z, tol)
}

/// The phase `α = φ^o(target) − φ^ι(p)` for which `T_α(p) = target`.
pub fn alpha_for_target(map: &PolyMap2, p: ComplexPoint, target: ComplexPoint, tol: f64) -> Result<C64> {
    Ok(phi_o(map, target, tol)?.value - phi_iota(map, p, tol)?.value)
}

/// Point-wise estimates `F_{ε_ν}^{n_ν}(p)` of `T_α(p)` along a sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct LavaursEstimate {
    pub alpha: C64,
    pub source: AlphaSequence,
    pub point: ComplexPoint,
    /// One image per entry of `source`, in sequence order.
    pub values: Vec<ComplexPoint>,
    /// `gaps[k] = ‖values[k+1] − values[k]‖`.
    pub gaps: Vec<f64>,
    /// Distance between the last two images; zero for one-entry sequences.
    pub cauchy_gap: f64,
}

impl LavaursEstimate {
    pub fn image(&self) -> ComplexPoint {
        *self.values.last().expect("sequences are non-empty")
    }

    /// CSV rows `alpha, nu, eps, n, p, image, gap, residual`, the gap being
    /// the distance to the previous image and the residual optional.
    pub fn to_csv(&self, residuals: Option<&[f64]>) -> String {
        let mut out = String::from(
            "alpha_re,alpha_im,nu,eps_re,eps_im,n,px_re,px_im,py_re,py_im,tx_re,tx_im,ty_re,ty_im,cauchy_gap,residual\n",
        );
        for (k, (&(eps, n), v)) in self.source.entries.iter().zip(&self.values).enumerate() {
            let gap = if k == 0 { f64::NAN } else { self.gaps[k - 1] };
            let res = residuals.and_then(|r| r.get(k)).copied().unwrap_or(f64::NAN);
            let p = self.point;
            let _ = writeln!(
                out,
                "{:e},{:e},{k},{:e},{:e},{n},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e}",
                self.alpha.re, self.alpha.im, eps.re, eps.im, p.x.re, p.x.im, p.y.re, p.y.im, v.x.re, v.x.im, v.y.re, v.y.im, gap, res
            );
        }
        out
    }
}

fn iterate_in_ball(map: &PolyMap2, eps: C64, p: ComplexPoint, n: usize) -> Option<ComplexPoint> {
    let mut z = p;
    for _ in 0..n {
        z = map.step(eps, z);
        if !(z.norm() <= ESCAPE_BALL) {
            return None;
        }
    }
    Some(z)
}

/// Estimates `T_α(p)` by `F_{ε_ν}^{n_ν}(p)` for every entry of `seq`.
pub fn lavaurs_2d_estimate_seq(map: &PolyMap2, seq: &AlphaSequence, p: ComplexPoint) -> Result<LavaursEstimate> {
    let images: Vec<Option<ComplexPoint>> = seq.entries.par_iter().map(|&(eps, n)| iterate_in_ball(map, eps, p, n)).collect();
    let mut values = Vec::with_capacity(images.len());
    for (k, v) in images.into_iter().enumerate() {
        values.push(v.ok_or(Error::OrbitEscaped(k))?);
    }
    let gaps: Vec<f64> = values.windows(2).map(|w| w[1].dist(&w[0])).collect();
    let cauchy_gap = gaps.last().copied().unwrap_or(0.0);
    Ok(LavaursEstimate { alpha: seq.alpha, source: seq.clone(), point: p, values, gaps, cauchy_gap })
}

/// [`lavaurs_2d_estimate_seq`] for the sequence built from `alpha` and `n_list`.
pub fn lavaurs_2d_estimate(map: &PolyMap2, cfg: &RegionConfig, alpha: C64, p: ComplexPoint, n_list: &[usize]) -> Result<LavaursEstimate> {
    let seq = AlphaSequence::new(cfg, alpha, n_list)?;
    lavaurs_2d_estimate_seq(map, &seq, p)
}

/// `|φ^o(T̂) − α − φ^ι(p)|` for every image of `est`.
pub fn semiconjugacy_residuals(map: &PolyMap2, est: &LavaursEstimate, tol: f64) -> Result<Vec<f64>> {
    let base = est.alpha + phi_iota(map, est.point, tol)?.value;
    est.values
        .iter()
        .map(|&t| match phi_o(map, t, tol) {
            Ok(v) => Ok((v.value - base).norm()),
            Err(Error::NotInRepellingBasin) => Err(Error::ImageNotInRepellingBasin),
            Err(e) => Err(e),
        })
        .collect()
}

/// The residual of `φ^o ∘ T_α = α + φ^ι` at the last image of the sequence.
pub fn semiconjugacy_residual(map: &PolyMap2, cfg: &RegionConfig, alpha: C64, p: ComplexPoint, n_list: &[usize], tol: f64) -> Result<f64> {
    let est = lavaurs_2d_estimate(map, cfg, alpha, p, n_list)?;
    let base = alpha + phi_iota(map, p, tol)?.value;
    match phi_o(map, est.image(), tol) {
        Ok(v) => Ok((v.value - base).norm()),
        Err(Error::NotInRepellingBasin) => Err(Error::ImageNotInRepellingBasin),
        Err(e) => Err(e),
    }
}

/// Distance from `p` to the boundary of C̃_0 (zero outside), measured in
/// the Euclidean metric of C².
pub fn distance_to_cone_boundary(cfg: &RegionConfig, p: ComplexPoint) -> f64 {
    if !regions::in_c0(cfg, p, false) {
        return 0.0;
    }
    let (g, r, s) = (cfg.params.gamma, cfg.params.r, cfg.params.s);
    let ax = p.x.norm();
    let d_angle = (-g * p.x.re - p.x.im.abs()) / (1.0 + g * g).sqrt();
    let d_radius = r - ax;
    let d_vertical = (s * ax - p.y.norm()) / (1.0 + s * s).sqrt();
    d_angle.min(d_radius).min(d_vertical).max(0.0)
}

/// Ball around a basin point `p0` where the transfer map is estimated:
/// radius `0.3·dist(p0, ∂C̃_0)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransferWindow {
    pub center: ComplexPoint,
    pub radius: f64,
}

impl TransferWindow {
    /// Requires `p0 ∈ C̃_0` and `L_α(p0)` (on the line through `p0.x`)
    /// inside −C̃_0.
    pub fn new(map: &PolyMap2, cfg: &RegionConfig, alpha: C64, p0: ComplexPoint, tol: f64) -> Result<Self> {
        let radius = 0.3 * distance_to_cone_boundary(cfg, p0);
        if radius <= 0.0 {
            return Err(Error::InvalidInput("window centre is not inside the incoming cone".into()));
        }
        let image = lavaurs_1d(map, alpha, p0.x, tol)?;
        if !regions::in_c0(cfg, ComplexPoint::new(-image, C64::default()), false) {
            return Err(Error::ImageNotInRepellingBasin);
        }
        Ok(Self { center: p0, radius })
    }

    /// `count` deterministic points: the centre, then points on the
    /// boundary sphere at evenly spread angles mixing both coordinates.
    pub fn points(&self, count: usize) -> Vec<ComplexPoint> {
        let mut out = Vec::with_capacity(count);
        if count == 0 {
            return out;
        }
        out.push(self.center);
        let r = 0.9 * self.radius;
        for k in 1..count {
            let t = 2.0 * PI * (k - 1) as f64 / (count - 1) as f64;
            let (cs, sn) = (t.cos(), t.sin());
            let scale = r / (cs * cs + 1.09 * sn * sn).sqrt();
            let dx = C64::new(cs, 0.3 * sn) * scale;
            let dy = C64::new(0.0, sn) * scale;
            out.push(ComplexPoint::new(self.center.x + dx, self.center.y + dy));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::point::c;
    use crate::regions::RegionParams;
    use proptest::prelude::*;

    const ZERO: C64 = C64::new(0.0, 0.0);
    const LADDER: [usize; 4] = [200, 400, 800, 1600];

    fn map() -> PolyMap2 {
        PolyMap2::default_regular()
    }

    fn cfg() -> RegionConfig {
        RegionConfig::for_map(RegionParams::default(), &map()).unwrap()
    }

    fn line(x: f64) -> ComplexPoint {
        ComplexPoint::new(c(x, 0.0), ZERO)
    }

    #[test]
    fn real_alpha_gives_real_eps() {
        let s = AlphaSequence::new(&cfg(), ZERO, &[100]).unwrap();
        let (eps, n) = s.entries[0];
        assert_eq!(n, 100);
        assert!((eps.re - 0.031_415_926_5).abs() < 1e-10 && eps.im == 0.0);
    }

    #[test]
    fn imaginary_alpha_stays_in_sector() {
        let s = AlphaSequence::new(&cfg(), c(0.0, 1.0), &[100]).unwrap();
        let eps = s.entries[0].0;
        // π/(100 − i) = π(100 + i)/10001.
        assert!((eps - PI * c(100.0, 1.0) / 10001.0).norm() < 1e-16);
        assert!(eps.im.abs() <= eps.norm_sqr());
    }

    #[test]
    fn sector_violations_are_listed() {
        let mut params = RegionParams::default();
        params.c_eps = 0.1;
        let narrow = RegionConfig::for_map(params, &map()).unwrap();
        assert_eq!(AlphaSequence::new(&narrow, c(0.0, 1.0), &[100, 200]), Err(Error::SectorViolation(vec![0, 1])));
    }

    #[test]
    fn malformed_lists_are_rejected() {
        assert!(AlphaSequence::new(&cfg(), ZERO, &[]).is_err());
        assert!(AlphaSequence::new(&cfg(), ZERO, &[200, 100]).is_err());
        assert!(AlphaSequence::new(&cfg(), c(-25.0, 0.0), &[20, 200]).is_err());
    }

    #[test]
    fn equivariance_and_translation_tower() {
        let m = map();
        let alpha = c(-25.0, 0.0);
        let zero = ZERO;
        for x in [-0.09, -0.07] {
            let l = lavaurs_1d(&m, alpha, c(x, 0.0), 1e-10).unwrap();
            let fx = m.eval_f(zero, line(x)).unwrap().x;
            let lf = lavaurs_1d(&m, alpha, fx, 1e-10).unwrap();
            let fl = m.eval_f(zero, ComplexPoint::new(l, zero)).unwrap().x;
            assert!((lf - fl).norm() < 1e-6);
            let shifted = lavaurs_1d(&m, alpha + 1.0, c(x, 0.0), 1e-10).unwrap();
            assert!((shifted - fl).norm() < 1e-6);
        }
    }

    #[test]
    fn one_dimensional_limit() {
        let m = map();
        let alpha = c(-25.0, 0.0);
        let seq = AlphaSequence::new(&cfg(), alpha, &LADDER).unwrap();
        for x in [-0.1, -0.08, -0.06] {
            let l = lavaurs_1d(&m, alpha, c(x, 0.0), 1e-10).unwrap();
            let est = lavaurs_2d_estimate_seq(&m, &seq, line(x)).unwrap();
            let gaps: Vec<f64> = est.values.iter().map(|v| (v.x - l).norm()).collect();
            assert!(gaps.windows(2).all(|w| w[1] < w[0]), "{gaps:?}");
            assert!(gaps[3] < 1e-2);
        }
    }

    #[test]
    fn line_estimates_stay_on_the_line_and_match_1d() {
        let m = map();
        let alpha = c(-25.0, 0.0);
        let est = lavaurs_2d_estimate(&m, &cfg(), alpha, line(-0.08), &LADDER).unwrap();
        assert!(est.values.iter().all(|v| v.y == ZERO));
        let l = lavaurs_1d(&m, alpha, c(-0.08, 0.0), 1e-10).unwrap();
        assert!((est.image().x - l).norm() < est.cauchy_gap + 1e-3);
    }

    #[test]
    fn small_vertical_offsets_move_the_estimate_a_little() {
        let m = map();
        let alpha = c(-25.0, 0.0);
        let a = lavaurs_2d_estimate(&m, &cfg(), alpha, line(-0.08), &LADDER).unwrap();
        let b = lavaurs_2d_estimate(&m, &cfg(), alpha, ComplexPoint::new(c(-0.08, 0.0), c(1e-4, 0.0)), &LADDER).unwrap();
        let d = a.image().dist(&b.image());
        assert!(d > 0.0 && d < 5e-3, "{d}");
    }

    #[test]
    fn cauchy_gaps_shrink_in_the_window() {
        let m = map();
        let c0 = cfg();
        let alpha = c(-25.0, 0.0);
        let w = TransferWindow::new(&m, &c0, alpha, line(-0.08), 1e-10).unwrap();
        for p in w.points(5) {
            let est = lavaurs_2d_estimate(&m, &c0, alpha, p, &LADDER).unwrap();
            let rises = est.gaps.windows(2).filter(|g| g[1] >= g[0]).count();
            assert!(rises <= 1, "{:?}", est.gaps);
        }
    }

    #[test]
    fn semiconjugacy_residual_is_small_and_decreasing() {
        let m = map();
        let alpha = c(-25.0, 0.0);
        let p = line(-0.08);
        let r = semiconjugacy_residual(&m, &cfg(), alpha, p, &LADDER, 1e-10).unwrap();
        assert!(r < 1e-2, "{r}");
        let est = lavaurs_2d_estimate(&m, &cfg(), alpha, p, &LADDER).unwrap();
        let rs = semiconjugacy_residuals(&m, &est, 1e-10).unwrap();
        assert!(rs[3] < rs[2] && rs[2] < rs[1], "{rs:?}");
        assert_eq!(rs[3], r);
    }

    #[test]
    fn shifting_alpha_by_one_applies_the_map_once_more() {
        let m = map();
        let c0 = cfg();
        let alpha = c(-25.0, 0.0);
        let p = line(-0.08);
        let r0 = semiconjugacy_residual(&m, &c0, alpha, p, &LADDER, 1e-10).unwrap();
        let r1 = semiconjugacy_residual(&m, &c0, alpha + 1.0, p, &LADDER, 1e-10).unwrap();
        let t0 = lavaurs_2d_estimate(&m, &c0, alpha, p, &LADDER).unwrap().image();
        let t1 = lavaurs_2d_estimate(&m, &c0, alpha + 1.0, p, &LADDER).unwrap().image();
        let ft0 = m.eval_f(ZERO, t0).unwrap();
        let phi = |q| phi_o(&m, q, 1e-10).unwrap().value;
        let d = (phi(t1) - phi(ft0)).norm();
        assert!(d < 2.0 * (r0 + r1), "{d} {r0} {r1}");
    }

    #[test]
    fn escaping_images_are_reported() {
        let m = map();
        // α chosen so that T_α(−0.08) sits at x = 0.4, well outside the
        // repelling petal; a larger phase pushes the orbit out of the ball.
        assert!(matches!(lavaurs_2d_estimate(&m, &cfg(), c(-10.0, 0.0), line(-0.08), &LADDER), Err(Error::OrbitEscaped(_))));
    }

    #[test]
    fn images_outside_the_repelling_basin_are_rejected() {
        let m = map();
        // T_α(−0.08) ≈ F_0(0.4) ≈ 0.65 lies beyond the inverse branch, so
        // no backward orbit towards the origin exists.
        let r = semiconjugacy_residual(&m, &cfg(), c(-13.96, 0.0), line(-0.08), &LADDER, 1e-10);
        assert_eq!(r, Err(Error::ImageNotInRepellingBasin));
    }

    #[test]
    fn alpha_for_target_hits_the_target() {
        let m = map();
        let p = line(-0.08);
        let alpha = alpha_for_target(&m, p, line(0.4), 1e-11).unwrap();
        let l = lavaurs_1d(&m, alpha, p.x, 1e-10).unwrap();
        assert!((l - 0.4).norm() < 1e-7);
    }

    #[test]
    fn window_is_a_fraction_of_the_cone_margin() {
        let c0 = cfg();
        let p0 = line(-0.08);
        let w = TransferWindow::new(&map(), &c0, c(-25.0, 0.0), p0, 1e-10).unwrap();
        assert!((w.radius - 0.3 * 0.0008 / (1.0f64 + 1e-4).sqrt()).abs() < 1e-12);
        for p in w.points(7) {
            assert!(p.dist(&p0) <= w.radius);
            assert!(regions::in_c0(&c0, p, false));
        }
    }

    proptest! {
        #[test]
        fn constructor_identity(ar in -30.0f64..30.0, ai in -2.0f64..2.0, base in 100usize..400) {
            let alpha = c(ar, ai);
            let ns = [base, 2 * base, 4 * base];
            let s = AlphaSequence::new(&cfg(), alpha, &ns).unwrap();
            for &(eps, n) in &s.entries {
                let back = n as f64 - PI / eps;
                prop_assert!((back - alpha).norm() <= 4.0 * f64::EPSILON * n as f64);
            }
            for (eps, half) in s.halved() {
                prop_assert!((PI / (2.0 * eps) - half as f64).norm() <= alpha.norm() / 2.0 + 1.0);
            }
        }
    }
}
