//! Filled Julia sets on affine slices of C², their boundaries, grid
//! Hausdorff distances, and membership in the Lavaurs-enlarged complement.

use std::f64::consts::PI;
use std::fmt::Write as _;

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::lavaurs::{lavaurs_2d_estimate_seq, AlphaSequence};
use crate::mapfamily::{OrbitResult, PolyMap2};
use crate::point::{ComplexPoint, C64};

/// Affine embedding `(s, t) ↦ origin + s·u + t·v` of `[0,1]²` into C².
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SliceGeometry {
    pub origin: ComplexPoint,
    pub u: ComplexPoint,
    pub v: ComplexPoint,
}

impl SliceGeometry {
    /// The complex x-line `y = y0` over the rectangle with corners
    /// `x_min` (bottom left) and `x_max` (top right). Rows run top to bottom.
    pub fn x_plane(x_min: C64, x_max: C64, y0: C64) -> Self {
        let zero = C64::default();
        Self {
            origin: ComplexPoint::new(C64::new(x_min.re, x_max.im), y0),
            u: ComplexPoint::new(C64::new(x_max.re - x_min.re, 0.0), zero),
            v: ComplexPoint::new(C64::new(0.0, x_min.im - x_max.im), zero),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub slice: SliceGeometry,
    pub nx: usize,
    pub ny: usize,
    pub escape_radius: f64,
    pub max_iter: usize,
}

impl GridSpec {
    pub fn new(slice: SliceGeometry, nx: usize, ny: usize, escape_radius: f64, max_iter: usize) -> Result<Self> {
        if nx < 2 || ny < 2 {
            return Err(Error::InvalidGrid(format!("resolution {nx}x{ny} is below 2x2")));
        }
        let finite = slice.origin.is_finite() && slice.u.is_finite() && slice.v.is_finite();
        if !finite || slice.u.norm() == 0.0 || slice.v.norm() == 0.0 {
            return Err(Error::InvalidGrid("slice axes must be finite and non-zero".into()));
        }
        if !(escape_radius.is_finite() && escape_radius > 0.0) {
            return Err(Error::InvalidGrid("escape radius must be positive".into()));
        }
        if max_iter == 0 {
            return Err(Error::InvalidGrid("max_iter must be positive".into()));
        }
        Ok(Self { slice, nx, ny, escape_radius, max_iter })
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn point(&self, i: usize, j: usize) -> ComplexPoint {
        let s = i as f64 / (self.nx - 1) as f64;
        let t = j as f64 / (self.ny - 1) as f64;
        self.slice.origin + self.slice.u * s + self.slice.v * t
    }

    /// Distance in C² between horizontally and vertically adjacent pixels.
    pub fn pitch(&self) -> (f64, f64) {
        (self.slice.u.norm() / (self.nx - 1) as f64, self.slice.v.norm() / (self.ny - 1) as f64)
    }

    pub fn same_geometry(&self, other: &Self) -> bool {
        self.slice == other.slice && self.nx == other.nx && self.ny == other.ny
    }

    /// Real slice coordinates `(i, j)` of the orthogonal projection of `p`
    /// and the distance from `p` to the slice plane.
    pub fn project(&self, p: ComplexPoint) -> (f64, f64, f64) {
        let d = p - self.slice.origin;
        let (u, v) = (self.slice.u, self.slice.v);
        let dot = |a: ComplexPoint, b: ComplexPoint| (a.x.conj() * b.x + a.y.conj() * b.y).re;
        let (uu, uv, vv) = (dot(u, u), dot(u, v), dot(v, v));
        let (du, dv) = (dot(u, d), dot(v, d));
        let det = uu * vv - uv * uv;
        let s = (du * vv - dv * uv) / det;
        let t = (dv * uu - du * uv) / det;
        let off = d - (u * s + v * t);
        (s * (self.nx - 1) as f64, t * (self.ny - 1) as f64, off.norm())
    }

    /// Short hex digest of the geometry and escape parameters.
    pub fn hash(&self) -> String {
        short_hash(&format!("{self:?}"))
    }
}

fn short_hash(text: &str) -> String {
    let digest = Sha256::digest(text.as_bytes());
    digest.iter().take(8).fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

/// Hex digest identifying the map's coefficients.
pub fn map_hash(map: &PolyMap2) -> String {
    short_hash(&format!("{:?}", map.parts()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cell {
    Bounded,
    EscapedAt(usize),
}

impl Cell {
    pub fn is_bounded(self) -> bool {
        self == Cell::Bounded
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RasterMeta {
    pub map_hash: String,
    pub eps: C64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Raster {
    pub grid: GridSpec,
    /// Row-major, `cells[j·nx + i]`.
    pub cells: Vec<Cell>,
    pub meta: RasterMeta,
}

/// A binary raster.
#[derive(Debug, Clone, PartialEq)]
pub struct Mask {
    pub grid: GridSpec,
    pub bits: Vec<bool>,
}

impl Mask {
    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }
}

impl Raster {
    pub fn bounded_mask(&self) -> Mask {
        Mask { grid: self.grid, bits: self.cells.iter().map(|c| c.is_bounded()).collect() }
    }
}

/// Smallest `R` with `‖F_ε(p)‖ ≥ 2‖p‖` whenever `‖p‖ ≥ R`, doubled for
/// safety. The minimum of the top forms over the unit sphere is taken on
/// a grid, then the lower-degree parts are bounded coefficient-wise.
pub fn escape_bound(map: &PolyMap2, eps: C64) -> Result<f64> {
    let reg = map.check_regularity(eps);
    let d = reg.common_degree().filter(|_| reg.regular()).ok_or(Error::NotRegular)?;
    let (f1, f2) = map.components(eps);
    let (t1, t2) = (f1.top_form(), f2.top_form());
    // Up to a common phase, unit vectors are (cos θ, sin θ·e^{iφ}).
    const STEPS_THETA: usize = 200;
    const STEPS_PHI: usize = 400;
    let mut m = f64::INFINITY;
    for a in 0..=STEPS_THETA {
        let th = 0.5 * PI * a as f64 / STEPS_THETA as f64;
        for b in 0..STEPS_PHI {
            let ph = 2.0 * PI * b as f64 / STEPS_PHI as f64;
            let x = C64::new(th.cos(), 0.0);
            let y = C64::from_polar(th.sin(), ph);
            let v = (t1.eval(x, y).norm_sqr() + t2.eval(x, y).norm_sqr()).sqrt();
            m = m.min(v);
        }
    }
    let lower: Vec<f64> = (0..d)
        .map(|k| {
            let s1: f64 = f1.homogeneous_part(k).terms().map(|(_, _, c)| c.norm()).sum();
            let s2: f64 = f2.homogeneous_part(k).terms().map(|(_, _, c)| c.norm()).sum();
            (s1 * s1 + s2 * s2).sqrt()
        })
        .collect();
    // h(R) = m − Σ B_k R^{k−d} − 2R^{1−d} increases with R.
    let h = |r: f64| {
        let mut v = m - 2.0 * r.powi(1 - d as i32);
        for (k, b) in lower.iter().enumerate() {
            v -= b * r.powi(k as i32 - d as i32);
        }
        v
    };
    let mut hi = 1.0;
    while h(hi) < 0.0 {
        hi *= 2.0;
    }
    let mut lo = hi / 2.0;
    if h(lo) >= 0.0 {
        return Ok(2.0 * lo.max(1.0));
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if h(mid) >= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(2.0 * hi)
}

/// Escape-time classifier for one `(map, ε)`; the regularity check and the
/// escape bound are computed once.
#[derive(Debug, Clone)]
pub struct EscapeClassifier<'a> {
    map: &'a PolyMap2,
    eps: C64,
    radius: f64,
    max_iter: usize,
    bound: f64,
}

impl<'a> EscapeClassifier<'a> {
    pub fn new(map: &'a PolyMap2, eps: C64, radius: f64, max_iter: usize) -> Result<Self> {
        let bound = escape_bound(map, eps)?;
        if !(radius >= bound) {
            return Err(Error::InvalidGrid(format!("escape radius {radius} is below the escape bound {bound:.3}")));
        }
        Ok(Self { map, eps, radius, max_iter, bound })
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }

    pub fn classify(&self, p: ComplexPoint) -> Cell {
        match self.map.iterate(self.eps, p, self.max_iter, self.radius) {
            OrbitResult::EscapedAt(k) => Cell::EscapedAt(k),
            OrbitResult::Point(_) => Cell::Bounded,
        }
    }
}

pub fn escape_classify(map: &PolyMap2, eps: C64, p: ComplexPoint, escape_radius: f64, max_iter: usize) -> Result<Cell> {
    Ok(EscapeClassifier::new(map, eps, escape_radius, max_iter)?.classify(p))
}

/// Classifies every pixel of the slice; rows are computed in parallel and
/// assembled in order.
pub fn render_k_slice(map: &PolyMap2, eps: C64, grid: &GridSpec) -> Result<Raster> {
    let cls = EscapeClassifier::new(map, eps, grid.escape_radius, grid.max_iter)?;
    let rows: Vec<Vec<Cell>> = (0..grid.ny)
        .into_par_iter()
        .map(|j| (0..grid.nx).map(|i| cls.classify(grid.point(i, j))).collect())
        .collect();
    Ok(Raster { grid: *grid, cells: rows.concat(), meta: RasterMeta { map_hash: map_hash(map), eps } })
}

/// Bounded pixels with an escaping 4-neighbour.
pub fn boundary_slice(raster: &Raster) -> Mask {
    let (nx, ny) = (raster.grid.nx, raster.grid.ny);
    let cell = |i: usize, j: usize| raster.cells[j * nx + i];
    let mut bits = vec![false; nx * ny];
    for j in 0..ny {
        for i in 0..nx {
            if !cell(i, j).is_bounded() {
                continue;
            }
            let escaped = |a: usize, b: usize| !cell(a, b).is_bounded();
            bits[j * nx + i] = (i > 0 && escaped(i - 1, j))
                || (i + 1 < nx && escaped(i + 1, j))
                || (j > 0 && escaped(i, j - 1))
                || (j + 1 < ny && escaped(i, j + 1));
        }
    }
    Mask { grid: raster.grid, bits }
}

/// Squared distance transform of one line: `d(p) = min_q (h(p − q))² + f(q)`.
fn edt_line(f: &[f64], h: f64, out: &mut [f64]) {
    let n = f.len();
    let mut v = vec![0usize; n];
    let mut z = vec![0.0f64; n + 1];
    let mut k: isize = -1;
    let key = |q: usize| f[q] + (q as f64 * h).powi(2);
    for q in 0..n {
        if !f[q].is_finite() {
            continue;
        }
        loop {
            if k < 0 {
                k = 0;
                v[0] = q;
                z[0] = f64::NEG_INFINITY;
                z[1] = f64::INFINITY;
                break;
            }
            let r = v[k as usize];
            let s = (key(q) - key(r)) / (2.0 * h * (q - r) as f64);
            if s <= z[k as usize] {
                k -= 1;
            } else {
                k += 1;
                v[k as usize] = q;
                z[k as usize] = s;
                z[k as usize + 1] = f64::INFINITY;
                break;
            }
        }
    }
    if k < 0 {
        out.iter_mut().for_each(|o| *o = f64::INFINITY);
        return;
    }
    let mut k = 0usize;
    for (p, o) in out.iter_mut().enumerate() {
        let x = p as f64 * h;
        while z[k + 1] < x {
            k += 1;
        }
        let r = v[k];
        *o = (h * (p as f64 - r as f64)).powi(2) + f[r];
    }
}

/// Euclidean distance from every pixel to the nearest set pixel of `mask`,
/// with pixel spacing `pitch = (horizontal, vertical)`.
pub fn distance_transform(mask: &Mask, pitch: (f64, f64)) -> Vec<f64> {
    let (nx, ny) = (mask.grid.nx, mask.grid.ny);
    let mut g: Vec<f64> = mask.bits.iter().map(|&b| if b { 0.0 } else { f64::INFINITY }).collect();
    let mut buf = vec![0.0; nx.max(ny)];
    for j in 0..ny {
        let row = &mut g[j * nx..(j + 1) * nx];
        edt_line(row, pitch.0, &mut buf[..nx]);
        row.copy_from_slice(&buf[..nx]);
    }
    let mut col = vec![0.0; ny];
    for i in 0..nx {
        for j in 0..ny {
            col[j] = g[j * nx + i];
        }
        edt_line(&col, pitch.1, &mut buf[..ny]);
        for j in 0..ny {
            g[j * nx + i] = buf[j];
        }
    }
    g.iter().map(|d| d.sqrt()).collect()
}

/// Directed distances `(sup_{a} d(a, B), sup_{b} d(b, A))` between the set
/// pixels, in the metric of the slice. An empty source set has distance 0;
/// a non-empty one to an empty target has distance ∞.
pub fn hausdorff_grid(a: &Mask, b: &Mask) -> Result<(f64, f64)> {
    if !a.grid.same_geometry(&b.grid) {
        return Err(Error::GridMismatch);
    }
    let pitch = a.grid.pitch();
    Ok((directed(a, &distance_transform(b, pitch)), directed(b, &distance_transform(a, pitch))))
}

fn directed(src: &Mask, dist_to_target: &[f64]) -> f64 {
    src.bits.iter().zip(dist_to_target).filter(|(&s, _)| s).map(|(_, &d)| d).fold(0.0, f64::max)
}

/// Pixels within `radius_px` (in pixel units, Euclidean) of a set pixel.
pub fn dilate(mask: &Mask, radius_px: f64) -> Mask {
    let d = distance_transform(mask, (1.0, 1.0));
    Mask { grid: mask.grid, bits: d.iter().map(|&v| v <= radius_px).collect() }
}

pub const COLOR_BOUNDED: [u8; 3] = [0x1b, 0x1f, 0x3a];
pub const COLOR_ESCAPED: [u8; 3] = [0xf5, 0xf5, 0xf0];
pub const COLOR_BOUNDARY: [u8; 3] = [0xd6, 0x27, 0x28];

/// Binary PPM with the Bounded / Escaped palette, boundary pixels drawn on
/// top when given.
pub fn raster_to_ppm(raster: &Raster, boundary: Option<&Mask>) -> Vec<u8> {
    let g = raster.grid;
    let mut out = format!("P6\n{} {}\n255\n", g.nx, g.ny).into_bytes();
    out.reserve(3 * g.len());
    for (k, cell) in raster.cells.iter().enumerate() {
        let color = if boundary.is_some_and(|b| b.bits[k]) {
            COLOR_BOUNDARY
        } else if cell.is_bounded() {
            COLOR_BOUNDED
        } else {
            COLOR_ESCAPED
        };
        out.extend_from_slice(&color);
    }
    out
}

/// Set pixels in the boundary colour on the escaped background.
pub fn mask_to_ppm(mask: &Mask) -> Vec<u8> {
    let g = mask.grid;
    let mut out = format!("P6\n{} {}\n255\n", g.nx, g.ny).into_bytes();
    for &b in &mask.bits {
        out.extend_from_slice(if b { &COLOR_BOUNDARY } else { &COLOR_ESCAPED });
    }
    out
}

/// Sidecar text describing how a raster was produced.
pub fn raster_meta_text(raster: &Raster) -> String {
    let g = raster.grid;
    let s = g.slice;
    format!(
        "map_hash = {}\neps = {:e} {:e}\nnx = {}\nny = {}\nescape_radius = {:e}\nmax_iter = {}\norigin = {:e} {:e} {:e} {:e}\nu = {:e} {:e} {:e} {:e}\nv = {:e} {:e} {:e} {:e}\nbounded = {}\npalette = bounded {:02x?} escaped {:02x?} boundary {:02x?}\n",
        raster.meta.map_hash,
        raster.meta.eps.re,
        raster.meta.eps.im,
        g.nx,
        g.ny,
        g.escape_radius,
        g.max_iter,
        s.origin.x.re,
        s.origin.x.im,
        s.origin.y.re,
        s.origin.y.im,
        s.u.x.re,
        s.u.x.im,
        s.u.y.re,
        s.u.y.im,
        s.v.x.re,
        s.v.x.im,
        s.v.y.re,
        s.v.y.im,
        raster.cells.iter().filter(|c| c.is_bounded()).count(),
        COLOR_BOUNDED,
        COLOR_ESCAPED,
        COLOR_BOUNDARY,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Membership {
    /// Every tested image of the transfer map stays bounded under F_0.
    InK,
    /// The `m`-th image escapes under F_0, beyond its error bar.
    NotInK(usize),
    /// The `m`-th image lies within its error bar of the boundary proxy.
    InJ1Certificate(usize),
    Undetermined,
}

/// Inputs shared by many membership queries.
#[derive(Debug, Clone, Copy)]
pub struct MembershipParams<'a> {
    pub seq: &'a AlphaSequence,
    /// Escape-time classifier of F_0.
    pub classifier: &'a EscapeClassifier<'a>,
    pub m_max: usize,
    /// Boundary proxy of K(F_0) on a slice, for J¹ certificates.
    pub boundary: Option<&'a Mask>,
}

/// Offsets of size `gap` along the four real axes of C², both signs.
fn error_bar_probes(t: ComplexPoint, gap: f64) -> [ComplexPoint; 9] {
    let z = C64::default();
    let dirs = [
        ComplexPoint::new(C64::new(1.0, 0.0), z),
        ComplexPoint::new(C64::new(0.0, 1.0), z),
        ComplexPoint::new(z, C64::new(1.0, 0.0)),
        ComplexPoint::new(z, C64::new(0.0, 1.0)),
    ];
    let mut out = [t; 9];
    for (k, d) in dirs.iter().enumerate() {
        out[1 + 2 * k] = t + *d * gap;
        out[2 + 2 * k] = t - *d * gap;
    }
    out
}

fn near_boundary(mask: &Mask, t: ComplexPoint, gap: f64) -> bool {
    let g = mask.grid;
    let (fi, fj, off) = g.project(t);
    let (px, py) = g.pitch();
    let pitch = px.max(py);
    if off > gap + pitch {
        return false;
    }
    let reach = ((gap / px.min(py)).ceil() as isize).max(1);
    let (ci, cj) = (fi.round() as isize, fj.round() as isize);
    for dj in -reach..=reach {
        for di in -reach..=reach {
            let (i, j) = (ci + di, cj + dj);
            if i < 0 || j < 0 || i >= g.nx as isize || j >= g.ny as isize {
                continue;
            }
            if mask.bits[j as usize * g.nx + i as usize] {
                return true;
            }
        }
    }
    false
}

/// Decides whether `p ∉ K(F_0, T_α)` by iterating the transfer-map
/// estimate. The final Cauchy gap of each estimate is a hard error bar:
/// an image is only classified when it and all its probes agree.
pub fn lavaurs_membership(map: &PolyMap2, params: &MembershipParams<'_>, p: ComplexPoint) -> Membership {
    let cls = params.classifier;
    if !cls.classify(p).is_bounded() {
        return Membership::NotInK(0);
    }
    let mut q = p;
    for m in 1..=params.m_max {
        let Ok(est) = lavaurs_2d_estimate_seq(map, params.seq, q) else {
            return Membership::Undetermined;
        };
        let t = est.image();
        let gap = est.cauchy_gap.max(1e-12);
        let probes = error_bar_probes(t, gap);
        let bounded = probes.iter().filter(|&&z| cls.classify(z).is_bounded()).count();
        if bounded == 0 {
            return Membership::NotInK(m);
        }
        if bounded < probes.len() {
            return match params.boundary {
                Some(b) if near_boundary(b, t, gap) => Membership::InJ1Certificate(m),
                _ => Membership::Undetermined,
            };
        }
        q = t;
    }
    Membership::InK
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscontinuityParams {
    pub m_max: usize,
    /// Upper limit on the number of membership queries.
    pub candidate_cap: usize,
    /// Dilation of K(F_0) in the semicontinuity check, in pixels.
    pub dilation_px: f64,
}

impl Default for DiscontinuityParams {
    fn default() -> Self {
        Self { m_max: 3, candidate_cap: 2048, dilation_px: 2.0 }
    }
}

/// A pixel that is in K(F_0), certified outside K(F_0, T_α), and escapes
/// for every tested ε_ν.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Witness {
    pub pixel: (usize, usize),
    pub point: ComplexPoint,
    pub m: usize,
    /// Smallest distance, over ν, from the pixel to K(F_{ε_ν}).
    pub jump_lower_bound: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscontinuityReport {
    pub alpha: C64,
    pub ladder: Vec<(C64, usize)>,
    pub k0: Raster,
    pub k_nu: Vec<Raster>,
    /// Pixels bounded for every tested ε_ν.
    pub limsup: Mask,
    pub candidates: usize,
    pub certified: Vec<usize>,
    pub in_k: usize,
    pub j1_certificates: usize,
    pub undetermined: usize,
    /// Certified pixels that are also in the limsup proxy.
    pub overlap: Vec<usize>,
    /// Limsup pixels outside the dilated K(F_0).
    pub usc_violations: Vec<usize>,
    /// Per ν: (d(K_ν → K_0), d(K_0 → K_ν)).
    pub hausdorff: Vec<(f64, f64)>,
    pub witnesses: Vec<Witness>,
}

impl DiscontinuityReport {
    /// Both grid-scale inclusions hold.
    pub fn consistent(&self) -> bool {
        self.overlap.is_empty() && self.usc_violations.is_empty()
    }

    pub fn witnesses_csv(&self) -> String {
        let mut out = String::from("i,j,x_re,x_im,y_re,y_im,m,jump_lower_bound\n");
        for w in &self.witnesses {
            let p = w.point;
            let _ = writeln!(
                out,
                "{},{},{:e},{:e},{:e},{:e},{},{:e}",
                w.pixel.0, w.pixel.1, p.x.re, p.x.im, p.y.re, p.y.im, w.m, w.jump_lower_bound
            );
        }
        out
    }

    pub fn hausdorff_csv(&self) -> String {
        let mut out = String::from("nu,eps_re,eps_im,n,bounded,d_eps_to_zero,d_zero_to_eps\n");
        for (k, ((&(eps, n), r), &(a, b))) in self.ladder.iter().zip(&self.k_nu).zip(&self.hausdorff).enumerate() {
            let bounded = r.cells.iter().filter(|c| c.is_bounded()).count();
            let _ = writeln!(out, "{k},{:e},{:e},{n},{bounded},{a:e},{b:e}", eps.re, eps.im);
        }
        out
    }

    pub fn summary(&self) -> String {
        let best = self.witnesses.iter().map(|w| w.jump_lower_bound).fold(0.0, f64::max);
        format!(
            "alpha = {:e} {:e}\nladder = {}\nk0_bounded = {}\nlimsup_bounded = {}\ncandidates = {}\ncertified_not_in_k = {}\nin_k = {}\nj1_certificates = {}\nundetermined = {}\nlimsup_certified_overlap = {}\nusc_violations = {}\nwitnesses = {}\nlargest_jump_lower_bound = {:e}\n",
            self.alpha.re,
            self.alpha.im,
            self.ladder.iter().map(|(_, n)| n.to_string()).collect::<Vec<_>>().join(" "),
            self.k0.cells.iter().filter(|c| c.is_bounded()).count(),
            self.limsup.count(),
            self.candidates,
            self.certified.len(),
            self.in_k,
            self.j1_certificates,
            self.undetermined,
            self.overlap.len(),
            self.usc_violations.len(),
            self.witnesses.len(),
            best,
        )
    }
}

/// Compares K(F_{ε_ν}) along `seq` with K(F_0) and the Lavaurs set
/// K(F_0, T_α) on one slice.
pub fn discontinuity_report(map: &PolyMap2, seq: &AlphaSequence, grid: &GridSpec, params: DiscontinuityParams) -> Result<DiscontinuityReport> {
    let zero = C64::default();
    let k0 = render_k_slice(map, zero, grid)?;
    let k_nu: Vec<Raster> = seq.entries.iter().map(|&(eps, _)| render_k_slice(map, eps, grid)).collect::<Result<_>>()?;
    let n = grid.len();
    let limsup = Mask { grid: *grid, bits: (0..n).map(|k| k_nu.iter().all(|r| r.cells[k].is_bounded())).collect() };
    let k0_mask = k0.bounded_mask();
    let dilated = dilate(&k0_mask, params.dilation_px);
    let usc_violations: Vec<usize> = (0..n).filter(|&k| limsup.bits[k] && !dilated.bits[k]).collect();
    let nu_masks: Vec<Mask> = k_nu.iter().map(Raster::bounded_mask).collect();
    let hausdorff: Vec<(f64, f64)> = nu_masks.iter().map(|m| hausdorff_grid(m, &k0_mask)).collect::<Result<_>>()?;

    let bounded: Vec<usize> = (0..n).filter(|&k| k0_mask.bits[k]).collect();
    let stride = bounded.len().div_ceil(params.candidate_cap.max(1)).max(1);
    let candidates: Vec<usize> = bounded.iter().copied().step_by(stride).collect();
    let classifier = EscapeClassifier::new(map, zero, grid.escape_radius, grid.max_iter)?;
    let boundary = boundary_slice(&k0);
    let mp = MembershipParams { seq, classifier: &classifier, m_max: params.m_max, boundary: Some(&boundary) };
    let point_of = |k: usize| grid.point(k % grid.nx, k / grid.nx);
    let verdicts: Vec<Membership> = candidates.par_iter().map(|&k| lavaurs_membership(map, &mp, point_of(k))).collect();

    let mut certified = Vec::new();
    let (mut in_k, mut j1, mut undetermined) = (0, 0, 0);
    let mut depth = Vec::new();
    for (&k, v) in candidates.iter().zip(&verdicts) {
        match *v {
            Membership::NotInK(m) => {
                certified.push(k);
                depth.push(m);
            }
            Membership::InK => in_k += 1,
            Membership::InJ1Certificate(_) => j1 += 1,
            Membership::Undetermined => undetermined += 1,
        }
    }
    let overlap: Vec<usize> = certified.iter().copied().filter(|&k| limsup.bits[k]).collect();
    let nu_dist: Vec<Vec<f64>> = nu_masks.iter().map(|m| distance_transform(m, grid.pitch())).collect();
    let witnesses: Vec<Witness> = certified
        .iter()
        .zip(&depth)
        .filter(|(&k, _)| k_nu.iter().all(|r| !r.cells[k].is_bounded()))
        .map(|(&k, &m)| Witness {
            pixel: (k % grid.nx, k / grid.nx),
            point: point_of(k),
            m,
            jump_lower_bound: nu_dist.iter().map(|d| d[k]).fold(f64::INFINITY, f64::min),
        })
        .collect();
    if witnesses.is_empty() {
        let why = if candidates.is_empty() {
            "no pixel of the slice is bounded under F_0".to_string()
        } else {
            format!("none of {} candidates is a certified jump witness ({} undetermined)", candidates.len(), undetermined)
        };
        return Err(Error::InconclusiveScene(why));
    }
    Ok(DiscontinuityReport {
        alpha: seq.alpha,
        ladder: seq.entries.clone(),
        k0,
        k_nu,
        limsup,
        candidates: candidates.len(),
        certified,
        in_k,
        j1_certificates: j1,
        undetermined,
        overlap,
        usc_violations,
        hausdorff,
        witnesses,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lavaurs::alpha_for_target;
    use crate::mapfamily::MapParts;
    use crate::point::c;
    use crate::regions::{RegionConfig, RegionParams};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const ZERO: C64 = C64::new(0.0, 0.0);

    fn map() -> PolyMap2 {
        PolyMap2::default_regular()
    }

    fn line(x: f64) -> ComplexPoint {
        ComplexPoint::new(c(x, 0.0), ZERO)
    }

    fn grid(n: usize, max_iter: usize) -> GridSpec {
        GridSpec::new(SliceGeometry::x_plane(c(-1.6, -1.0), c(0.6, 1.0), ZERO), n, n, 50.0, max_iter).unwrap()
    }

    fn synthetic(nx: usize, ny: usize, f: impl Fn(usize, usize) -> bool) -> Raster {
        let g = GridSpec::new(SliceGeometry::x_plane(c(0.0, 0.0), c(1.0, 1.0), ZERO), nx, ny, 50.0, 10).unwrap();
        let cells = (0..nx * ny).map(|k| if f(k % nx, k / nx) { Cell::Bounded } else { Cell::EscapedAt(1) }).collect();
        Raster { grid: g, cells, meta: RasterMeta { map_hash: String::new(), eps: ZERO } }
    }

    fn mask_of(nx: usize, ny: usize, f: impl Fn(usize, usize) -> bool) -> Mask {
        synthetic(nx, ny, f).bounded_mask()
    }

    #[test]
    fn escape_bound_is_moderate_and_sound() {
        let m = map();
        let r = escape_bound(&m, ZERO).unwrap();
        assert!(r > 1.0 && r < 50.0, "{r}");
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10_000 {
            let v: [f64; 4] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
            let p = ComplexPoint::new(c(v[0], v[1]), c(v[2], v[3]));
            let p = p * (rng.gen_range(1.0..10.0) * r / p.norm());
            assert!(m.step(ZERO, p).norm() > p.norm());
        }
    }

    #[test]
    fn classifier_examples() {
        let m = map();
        assert_eq!(escape_classify(&m, ZERO, line(100.0), 50.0, 100).unwrap(), Cell::EscapedAt(0));
        assert_eq!(escape_classify(&m, ZERO, ComplexPoint::ORIGIN, 50.0, 100).unwrap(), Cell::Bounded);
        assert_eq!(escape_classify(&m, ZERO, line(-0.1), 50.0, 5000).unwrap(), Cell::Bounded);
        assert!(matches!(escape_classify(&m, ZERO, line(0.1), 50.0, 5000).unwrap(), Cell::EscapedAt(_)));
        assert!(matches!(escape_classify(&m, ZERO, line(100.0), 5.0, 10), Err(Error::InvalidGrid(_))));
    }

    #[test]
    fn irregular_maps_are_refused() {
        let model = PolyMap2::new(MapParts::quadratic_model(c(0.0, 0.0), c(1.0, 0.0), 2.0)).unwrap();
        assert_eq!(escape_classify(&model, ZERO, line(1.0), 50.0, 10), Err(Error::NotRegular));
    }

    #[test]
    fn grids_are_validated() {
        let s = SliceGeometry::x_plane(c(-1.0, -1.0), c(1.0, 1.0), ZERO);
        assert!(GridSpec::new(s, 1, 5, 50.0, 10).is_err());
        assert!(GridSpec::new(s, 5, 5, -1.0, 10).is_err());
        let flat = SliceGeometry { u: ComplexPoint::ORIGIN, ..s };
        assert!(GridSpec::new(flat, 5, 5, 50.0, 10).is_err());
        let g = GridSpec::new(s, 2, 2, 50.0, 10).unwrap();
        assert_eq!(g.point(0, 0).x, c(-1.0, 1.0));
        assert_eq!(g.point(1, 1).x, c(1.0, -1.0));
        let (i, j, off) = g.project(ComplexPoint::new(c(0.0, 0.0), c(0.0, 0.5)));
        assert!((i - 0.5).abs() < 1e-15 && (j - 0.5).abs() < 1e-15 && (off - 0.5).abs() < 1e-15);
    }

    #[test]
    fn more_iterations_only_remove_bounded_pixels() {
        let m = map();
        let eps = c(PI / 400.0, 0.0);
        let a = render_k_slice(&m, eps, &grid(48, 500)).unwrap();
        let b = render_k_slice(&m, eps, &grid(48, 2000)).unwrap();
        for (x, y) in a.cells.iter().zip(&b.cells) {
            assert!(!y.is_bounded() || x.is_bounded());
        }
    }

    #[test]
    fn line_slice_matches_a_one_dimensional_renderer() {
        // On y = 0 the default map restricts to x + x²(1 + x + x²).
        let g = grid(96, 600);
        let r = render_k_slice(&map(), ZERO, &g).unwrap();
        let oracle = |x: C64| {
            let mut z = x;
            for _ in 0..600 {
                if z.norm() > 50.0 {
                    return false;
                }
                z += z * z * (1.0 + z + z * z);
            }
            true
        };
        let ref_raster = Raster {
            grid: g,
            cells: (0..g.len()).map(|k| if oracle(g.point(k % g.nx, k / g.nx).x) { Cell::Bounded } else { Cell::EscapedAt(1) }).collect(),
            meta: r.meta.clone(),
        };
        let band = dilate(&boundary_slice(&ref_raster), 1.0);
        let (mut agree, mut total) = (0, 0);
        for k in 0..g.len() {
            if band.bits[k] {
                continue;
            }
            total += 1;
            agree += usize::from(r.cells[k].is_bounded() == ref_raster.cells[k].is_bounded());
        }
        assert!(agree as f64 >= 0.99 * total as f64, "{agree}/{total}");
    }

    #[test]
    fn perturbed_set_lies_near_the_unperturbed_one() {
        let m = map();
        let g = grid(64, 1500);
        let k0 = render_k_slice(&m, ZERO, &g).unwrap().bounded_mask();
        let ke = render_k_slice(&m, c(PI / 400.0, 0.0), &g).unwrap().bounded_mask();
        let wide = dilate(&k0, 2.0);
        assert!(ke.bits.iter().zip(&wide.bits).all(|(&e, &w)| !e || w));
        assert_ne!(k0, ke);
    }

    #[test]
    fn boundary_examples() {
        assert_eq!(boundary_slice(&synthetic(6, 5, |_, _| true)).count(), 0);
        let b = boundary_slice(&synthetic(6, 5, |i, _| i < 3));
        for j in 0..5 {
            for i in 0..6 {
                assert_eq!(b.bits[j * 6 + i], i == 2);
            }
        }
    }

    #[test]
    fn boundary_is_stable_under_doubling_the_budget() {
        let m = map();
        let a = boundary_slice(&render_k_slice(&m, ZERO, &grid(96, 800)).unwrap()).count() as f64;
        let b = boundary_slice(&render_k_slice(&m, ZERO, &grid(96, 1600)).unwrap()).count() as f64;
        assert!((a - b).abs() <= 0.05 * a, "{a} {b}");
    }

    #[test]
    fn hausdorff_examples() {
        let a = mask_of(8, 6, |_, _| true);
        assert_eq!(hausdorff_grid(&a, &a).unwrap(), (0.0, 0.0));
        let p = mask_of(8, 6, |i, j| (i, j) == (1, 1));
        let q = mask_of(8, 6, |i, j| (i, j) == (5, 4));
        let (px, py) = p.grid.pitch();
        let expect = ((4.0 * px).powi(2) + (3.0 * py).powi(2)).sqrt();
        let (d1, d2) = hausdorff_grid(&p, &q).unwrap();
        assert!((d1 - expect).abs() < 1e-12 && (d2 - expect).abs() < 1e-12);
        let other = mask_of(9, 6, |_, _| true);
        assert_eq!(hausdorff_grid(&a, &other), Err(Error::GridMismatch));
    }

    #[test]
    fn distance_transform_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let bits: Vec<bool> = (0..13 * 9).map(|_| rng.gen_bool(0.1)).collect();
        let m = mask_of(13, 9, |i, j| bits[j * 13 + i]);
        let pitch = (0.3, 0.7);
        let d = distance_transform(&m, pitch);
        for k in 0..m.bits.len() {
            let (i, j) = ((k % 13) as f64, (k / 13) as f64);
            let brute = (0..m.bits.len())
                .filter(|&l| m.bits[l])
                .map(|l| (((l % 13) as f64 - i) * pitch.0).hypot(((l / 13) as f64 - j) * pitch.1))
                .fold(f64::INFINITY, f64::min);
            assert!((d[k] - brute).abs() < 1e-12 || (d[k].is_infinite() && brute.is_infinite()));
        }
    }

    #[test]
    fn ppm_layout() {
        let r = synthetic(2, 2, |i, j| i == j);
        let ppm = raster_to_ppm(&r, None);
        assert!(ppm.starts_with(b"P6\n2 2\n255\n"));
        assert_eq!(ppm.len(), 11 + 12);
        assert_eq!(&ppm[11..14], &COLOR_BOUNDED);
        assert_eq!(&ppm[14..17], &COLOR_ESCAPED);
    }

    fn lavaurs_setup(alpha: C64) -> (RegionConfig, AlphaSequence) {
        let mut params = RegionParams::default();
        params.c_eps = 2.0;
        let cfg = RegionConfig::for_map(params, &map()).unwrap();
        let seq = AlphaSequence::new(&cfg, alpha, &[200, 400, 800, 1600]).unwrap();
        (cfg, seq)
    }

    #[test]
    fn membership_examples() {
        let m = map();
        let cls = EscapeClassifier::new(&m, ZERO, 50.0, 4000).unwrap();
        // T_α(−0.08) = 0.4, which escapes under F_0.
        let alpha = alpha_for_target(&m, line(-0.08), line(0.4), 1e-10).unwrap();
        let (_, seq) = lavaurs_setup(alpha);
        let mp = MembershipParams { seq: &seq, classifier: &cls, m_max: 3, boundary: None };
        assert_eq!(lavaurs_membership(&m, &mp, line(-0.08)), Membership::NotInK(1));
        assert_eq!(lavaurs_membership(&m, &mp, line(2.0)), Membership::NotInK(0));
        // With α = 0 the transfer map fixes points high in the overlap of the
        // two petals, so their orbit under T_α never leaves K(F_0).
        let (_, seq0) = lavaurs_setup(ZERO);
        let mp0 = MembershipParams { seq: &seq0, classifier: &cls, m_max: 3, boundary: None };
        assert_eq!(lavaurs_membership(&m, &mp0, ComplexPoint::new(c(0.0, 0.05), ZERO)), Membership::InK);
    }

    #[test]
    fn discontinuity_on_a_coarse_grid() {
        let m = map();
        let alpha = alpha_for_target(&m, line(-0.08), line(0.4), 1e-10).unwrap();
        let (_, seq) = lavaurs_setup(alpha);
        let g = GridSpec::new(SliceGeometry::x_plane(c(-0.3, -0.15), c(0.1, 0.15), ZERO), 40, 30, 50.0, 3000).unwrap();
        let rep = discontinuity_report(&m, &seq, &g, DiscontinuityParams { candidate_cap: 200, ..Default::default() }).unwrap();
        assert!(!rep.witnesses.is_empty());
        assert!(rep.consistent(), "{}", rep.summary());
        assert!(rep.witnesses.iter().all(|w| w.jump_lower_bound > 0.0));
        assert!(rep.hausdorff.iter().all(|&(_, d)| d > 0.0));
    }

    #[test]
    fn empty_scenes_are_inconclusive() {
        let m = map();
        let (_, seq) = lavaurs_setup(c(-15.0, 0.0));
        let g = GridSpec::new(SliceGeometry::x_plane(c(3.0, -0.1), c(3.2, 0.1), ZERO), 4, 4, 50.0, 100).unwrap();
        assert!(matches!(discontinuity_report(&m, &seq, &g, DiscontinuityParams::default()), Err(Error::InconclusiveScene(_))));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn hausdorff_triangle_inequality(seed in 0u64..1_000_000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut pick = || { let t: f64 = rng.gen_range(0.05..0.5); let v: Vec<bool> = (0..100).map(|_| rng.gen_bool(t)).collect(); v };
            let (va, vb, vc) = (pick(), pick(), pick());
            let a = mask_of(10, 10, |i, j| va[j * 10 + i]);
            let b = mask_of(10, 10, |i, j| vb[j * 10 + i]);
            let cc = mask_of(10, 10, |i, j| vc[j * 10 + i]);
            prop_assume!(a.count() > 0 && b.count() > 0 && cc.count() > 0);
            let h = |x: &Mask, y: &Mask| { let (p, q) = hausdorff_grid(x, y).unwrap(); p.max(q) };
            let px = a.grid.pitch().0.max(a.grid.pitch().1);
            prop_assert!(h(&a, &cc) <= h(&a, &b) + h(&b, &cc) + px);
        }
    }
}
