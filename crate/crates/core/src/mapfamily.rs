//! The perturbed family
//!
//! ```text
//! F_ε(x, y) = (x + (x² + ε²)·α_ε(x, y), y·(1 + ρx + β_ε(x, y)))
//! α_ε = 1 + (q+1)x + ry + Σ alpha_extra + eps2_alpha·ε²
//! β_ε = Σ beta_extra + eps2_beta·ε²
//! ```
//!
//! together with its local inverse, the conjugate family H_ε = σ∘F_ε⁻¹∘σ,
//! and the invariants of the quadratic part at the origin.

use nalgebra::{Matrix3, Schur};

use crate::error::{Error, Result};
use crate::point::{c, ComplexPoint, C64};
use crate::poly::{forms_coprime, Poly2};

/// One term `coeff·x^i·y^j`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Monomial {
    pub i: u32,
    pub j: u32,
    pub coeff: C64,
}

impl Monomial {
    pub fn new(i: u32, j: u32, coeff: C64) -> Self {
        Self { i, j, coeff }
    }

    #[inline]
    fn eval(&self, x: C64, y: C64) -> C64 {
        self.coeff * x.powu(self.i) * y.powu(self.j)
    }

    /// Partial derivatives (∂x, ∂y).
    #[inline]
    fn grad(&self, x: C64, y: C64) -> (C64, C64) {
        let dx = if self.i == 0 {
            C64::default()
        } else {
            self.coeff * f64::from(self.i) * x.powu(self.i - 1) * y.powu(self.j)
        };
        let dy = if self.j == 0 {
            C64::default()
        } else {
            self.coeff * f64::from(self.j) * x.powu(self.i) * y.powu(self.j - 1)
        };
        (dx, dy)
    }
}

/// Unvalidated coefficient set. `Default` is the regular representative
/// `α = 1 + x + y + x² + y²`, `β = y³`, `ρ = 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct MapParts {
    pub q: C64,
    pub r: C64,
    pub rho: f64,
    pub alpha_extra: Vec<Monomial>,
    pub beta_extra: Vec<Monomial>,
    pub eps2_alpha: C64,
    pub eps2_beta: C64,
    /// Radius of the ball on which the local inverse is trusted.
    pub inverse_radius: f64,
}

impl Default for MapParts {
    fn default() -> Self {
        Self {
            alpha_extra: vec![Monomial::new(2, 0, c(1.0, 0.0)), Monomial::new(0, 2, c(1.0, 0.0))],
            beta_extra: vec![Monomial::new(0, 3, c(1.0, 0.0))],
            ..Self::quadratic_model(c(0.0, 0.0), c(1.0, 0.0), 2.0)
        }
    }
}

impl MapParts {
    /// The normal form with no higher-order terms.
    pub fn quadratic_model(q: C64, r: C64, rho: f64) -> Self {
        Self {
            q,
            r,
            rho,
            alpha_extra: Vec::new(),
            beta_extra: Vec::new(),
            eps2_alpha: C64::default(),
            eps2_beta: C64::default(),
            inverse_radius: 0.5,
        }
    }
}

/// A validated member of the family.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyMap2 {
    parts: MapParts,
}

/// Terminal state of a forward orbit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OrbitResult {
    Point(ComplexPoint),
    EscapedAt(usize),
}

impl PolyMap2 {
    pub fn new(parts: MapParts) -> Result<Self> {
        if !(parts.rho.is_finite() && parts.rho > 1.0) {
            return Err(Error::InvalidMap(format!("rho must be real and > 1, got {}", parts.rho)));
        }
        let all = parts.alpha_extra.iter().chain(&parts.beta_extra);
        if let Some(m) = all.clone().find(|m| m.i + m.j < 2) {
            return Err(Error::InvalidMap(format!("monomial x^{} y^{} has degree below 2", m.i, m.j)));
        }
        let scalars = [parts.q, parts.r, parts.eps2_alpha, parts.eps2_beta];
        if !scalars.iter().chain(all.map(|m| &m.coeff)).all(|z| z.is_finite()) {
            return Err(Error::InvalidMap("non-finite coefficient".into()));
        }
        if !(parts.inverse_radius > 0.0 && parts.inverse_radius.is_finite()) {
            return Err(Error::InvalidMap("inverse_radius must be positive".into()));
        }
        Ok(Self { parts })
    }

    pub fn default_regular() -> Self {
        Self::new(MapParts::default()).expect("default coefficients are valid")
    }

    pub fn parts(&self) -> &MapParts {
        &self.parts
    }

    pub fn q(&self) -> C64 {
        self.parts.q
    }

    pub fn r(&self) -> C64 {
        self.parts.r
    }

    pub fn rho(&self) -> f64 {
        self.parts.rho
    }

    pub fn inverse_radius(&self) -> f64 {
        self.parts.inverse_radius
    }

    /// α_ε − 1, evaluated without forming 1 + (small).
    #[inline]
    pub fn alpha_minus_one(&self, eps2: C64, x: C64, y: C64) -> C64 {
        let p = &self.parts;
        let mut s = (p.q + 1.0) * x + p.r * y + p.eps2_alpha * eps2;
        for m in &p.alpha_extra {
            s += m.eval(x, y);
        }
        s
    }

    /// ρx + β_ε, the multiplier of y minus one.
    #[inline]
    pub fn y_multiplier_minus_one(&self, eps2: C64, x: C64, y: C64) -> C64 {
        let p = &self.parts;
        let mut s = p.rho * x + p.eps2_beta * eps2;
        for m in &p.beta_extra {
            s += m.eval(x, y);
        }
        s
    }

    /// F_ε(p) without a finiteness check.
    #[inline]
    pub fn step(&self, eps: C64, p: ComplexPoint) -> ComplexPoint {
        let eps2 = eps * eps;
        let alpha = 1.0 + self.alpha_minus_one(eps2, p.x, p.y);
        let m = self.y_multiplier_minus_one(eps2, p.x, p.y);
        ComplexPoint::new(p.x + (p.x * p.x + eps2) * alpha, p.y + p.y * m)
    }

    pub fn eval_f(&self, eps: C64, p: ComplexPoint) -> Result<ComplexPoint> {
        let out = self.step(eps, p);
        if out.is_finite() {
            Ok(out)
        } else {
            Err(Error::Escaped)
        }
    }

    /// DF_ε(p) as rows `[[∂F1/∂x, ∂F1/∂y], [∂F2/∂x, ∂F2/∂y]]`.
    pub fn jacobian(&self, eps: C64, p: ComplexPoint) -> [[C64; 2]; 2] {
        let eps2 = eps * eps;
        let pp = &self.parts;
        let (x, y) = (p.x, p.y);
        let alpha = 1.0 + self.alpha_minus_one(eps2, x, y);
        let (mut ax, mut ay) = (pp.q + 1.0, pp.r);
        for m in &pp.alpha_extra {
            let (dx, dy) = m.grad(x, y);
            ax += dx;
            ay += dy;
        }
        let beta = self.y_multiplier_minus_one(eps2, x, y) - pp.rho * x;
        let (mut bx, mut by) = (C64::default(), C64::default());
        for m in &pp.beta_extra {
            let (dx, dy) = m.grad(x, y);
            bx += dx;
            by += dy;
        }
        let s = x * x + eps2;
        [
            [1.0 + 2.0 * x * alpha + s * ax, s * ay],
            [y * (pp.rho + bx), 1.0 + pp.rho * x + beta + y * by],
        ]
    }

    /// Local inverse F_ε⁻¹(p), returned together with the displacement
    /// δ = p − F_ε⁻¹(p). Newton runs on δ itself so that δ keeps full
    /// relative precision even when it is much smaller than p.
    pub fn inverse_with_displacement(
        &self,
        eps: C64,
        p: ComplexPoint,
        tol: f64,
    ) -> Result<(ComplexPoint, ComplexPoint)> {
        const MAX_ITER: usize = 60;
        let norm = p.norm();
        let radius = self.parts.inverse_radius;
        if !(norm <= radius) {
            return Err(Error::OutsideInvertibleRegion { norm, radius });
        }
        let eps2 = eps * eps;
        let (x, y) = (p.x, p.y);
        let residual = |d: ComplexPoint| {
            let z = p - d;
            let alpha = 1.0 + self.alpha_minus_one(eps2, z.x, z.y);
            let m = self.y_multiplier_minus_one(eps2, z.x, z.y);
            ComplexPoint::new(-d.x + (z.x * z.x + eps2) * alpha, -d.y + z.y * m)
        };
        // Second-order expansion of the inverse.
        let mut d = ComplexPoint::new(
            (x * x + eps2) * (1.0 + (self.parts.q - 1.0) * x + self.parts.r * y),
            y * self.parts.rho * x,
        );
        let mut res = residual(d);
        for _ in 0..MAX_ITER {
            let j = self.jacobian(eps, p - d);
            let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
            if det.norm() == 0.0 || !det.is_finite() {
                break;
            }
            let step = ComplexPoint::new(
                (j[1][1] * res.x - j[0][1] * res.y) / det,
                (j[0][0] * res.y - j[1][0] * res.x) / det,
            );
            // Damping: halve until the residual does not grow.
            let mut lambda = 1.0;
            let (mut cand, mut cand_res);
            loop {
                cand = d + step * lambda;
                cand_res = residual(cand);
                if cand_res.norm() <= res.norm() || lambda < 1e-3 {
                    break;
                }
                lambda *= 0.5;
            }
            let small = |s: C64, v: C64| s.norm() <= 8.0 * f64::EPSILON * v.norm() || s.norm() == 0.0;
            let converged = small(step.x * lambda, cand.x) && small(step.y * lambda, cand.y);
            d = cand;
            res = cand_res;
            if converged || res.norm() == 0.0 {
                break;
            }
        }
        if d.is_finite() && res.norm() <= tol {
            Ok((p - d, d))
        } else {
            Err(Error::NoConvergence { iterations: MAX_ITER })
        }
    }

    pub fn eval_f_inverse(&self, eps: C64, p: ComplexPoint, tol: f64) -> Result<ComplexPoint> {
        self.inverse_with_displacement(eps, p, tol).map(|(z, _)| z)
    }

    /// H_ε(p) = σ(F_ε⁻¹(σ(p))).
    pub fn eval_h(&self, eps: C64, p: ComplexPoint, tol: f64) -> Result<ComplexPoint> {
        let (_, d) = self.inverse_with_displacement(eps, p.mirror(), tol)?;
        Ok(ComplexPoint::new(p.x + d.x, p.y - d.y))
    }

    pub fn iterate(&self, eps: C64, p: ComplexPoint, n: usize, escape_radius: f64) -> OrbitResult {
        let mut z = p;
        for k in 0..=n {
            if !(z.norm() <= escape_radius) {
                return OrbitResult::EscapedAt(k);
            }
            if k < n {
                z = self.step(eps, z);
            }
        }
        OrbitResult::Point(z)
    }

    /// Like [`iterate`](Self::iterate) but also returns every visited point,
    /// starting with `p` and ending with the last point inside the ball.
    pub fn iterate_traced(
        &self,
        eps: C64,
        p: ComplexPoint,
        n: usize,
        escape_radius: f64,
    ) -> (OrbitResult, Vec<ComplexPoint>) {
        let mut trace = Vec::with_capacity(n + 1);
        let mut z = p;
        for k in 0..=n {
            if !(z.norm() <= escape_radius) {
                return (OrbitResult::EscapedAt(k), trace);
            }
            trace.push(z);
            if k < n {
                z = self.step(eps, z);
            }
        }
        (OrbitResult::Point(z), trace)
    }

    /// Both components of F_ε as explicit polynomials.
    pub fn components(&self, eps: C64) -> (Poly2, Poly2) {
        let pp = &self.parts;
        let eps2 = eps * eps;
        let one = c(1.0, 0.0);
        let mut alpha = Poly2::constant(one + pp.eps2_alpha * eps2);
        alpha.add_term(1, 0, pp.q + 1.0);
        alpha.add_term(0, 1, pp.r);
        for m in &pp.alpha_extra {
            alpha.add_term(m.i, m.j, m.coeff);
        }
        let mut s = Poly2::monomial(2, 0, one);
        s.add_term(0, 0, eps2);
        let f1 = Poly2::monomial(1, 0, one).add(&s.mul(&alpha));
        let mut mult = Poly2::constant(one + pp.eps2_beta * eps2);
        mult.add_term(1, 0, c(pp.rho, 0.0));
        for m in &pp.beta_extra {
            mult.add_term(m.i, m.j, m.coeff);
        }
        let f2 = Poly2::monomial(0, 1, one).mul(&mult);
        (f1, f2)
    }

    pub fn check_regularity(&self, eps: C64) -> Regularity {
        let (f1, f2) = self.components(eps);
        let d1 = f1.total_degree().unwrap_or(0);
        let d2 = f2.total_degree().unwrap_or(0);
        let coprime = forms_coprime(&f1.top_form(), &f2.top_form());
        Regularity { degrees: (d1, d2), top_forms_coprime: coprime }
    }

    /// The quadratic part of F_0 − id, which is always (x², ρxy).
    pub fn quadratic_part(&self) -> HomogeneousPair {
        let z = C64::default();
        HomogeneousPair::new([c(1.0, 0.0), z, z], [z, c(self.parts.rho, 0.0), z])
            .expect("x² is nonzero")
    }

    /// Coefficients of the tail correction used to accelerate the Fatou
    /// coordinate series, for F_0 (`outgoing = false`) or for H_0.
    pub fn tail_correction(&self, outgoing: bool) -> TailCorrection {
        let pp = &self.parts;
        let a20: C64 = pp.alpha_extra.iter().filter(|m| m.i == 2 && m.j == 0).map(|m| m.coeff).sum();
        // Reversing x + x² + b x³ + a20 x⁴ turns (q, a20) into (−q, 5 − 5b + a20).
        let (q, a20) = if outgoing { (-pp.q, 5.0 - 5.0 * (pp.q + 1.0) + a20) } else { (pp.q, a20) };
        TailCorrection {
            q,
            cxx: a20 - q * q - 2.5 * q - 1.0,
            cy: -pp.r / (pp.rho - 1.0),
        }
    }
}

/// Result of [`PolyMap2::check_regularity`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Regularity {
    pub degrees: (u32, u32),
    pub top_forms_coprime: bool,
}

impl Regularity {
    pub fn regular(&self) -> bool {
        self.degrees.0 == self.degrees.1 && self.degrees.0 >= 2 && self.top_forms_coprime
    }

    pub fn common_degree(&self) -> Option<u32> {
        (self.degrees.0 == self.degrees.1).then_some(self.degrees.0)
    }
}

/// Normal-form data of a map on the invariant line, used to cancel the
/// slowest-decaying part of the Fatou series tail.
///
/// Along an orbit in the attracting cone the increment of the chart
/// `−1/x − q·log(−x)` is `1 + cxx·x² + r·y + …`, so adding
/// `−cxx·x + cy·y/x` at the truncation point removes the O(1/N) tail.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailCorrection {
    pub q: C64,
    pub cxx: C64,
    pub cy: C64,
}

impl TailCorrection {
    #[inline]
    pub fn eval(&self, p: ComplexPoint) -> C64 {
        -self.cxx * p.x + self.cy * p.y / p.x
    }
}

/// A pair of quadratic forms given by their (x², xy, y²) coefficients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HomogeneousPair {
    p: [C64; 3],
    q: [C64; 3],
}

/// A point of P¹.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Direction {
    /// `[1 : u]`
    Affine(C64),
    /// `[0 : 1]`
    Vertical,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CharacteristicDirection {
    pub direction: Direction,
    pub degenerate: bool,
}

impl HomogeneousPair {
    pub fn new(p: [C64; 3], q: [C64; 3]) -> Result<Self> {
        if p.iter().all(|z| z.norm() == 0.0) {
            return Err(Error::DegenerateInput);
        }
        Ok(Self { p, q })
    }

    pub fn scaled(&self, s: C64) -> Self {
        Self { p: self.p.map(|z| z * s), q: self.q.map(|z| z * s) }
    }

    fn p1(&self, u: C64) -> C64 {
        self.p[0] + self.p[1] * u + self.p[2] * u * u
    }

    /// Coefficients of r(u) = Q(1,u) − u·P(1,u), constant term first.
    fn r_coeffs(&self) -> [C64; 4] {
        let (p, q) = (self.p, self.q);
        [q[0], q[1] - p[0], q[2] - p[1], -p[2]]
    }

    fn r_prime(&self, u: C64) -> C64 {
        let r = self.r_coeffs();
        r[1] + 2.0 * r[2] * u + 3.0 * r[3] * u * u
    }

    pub fn characteristic_directions(&self) -> Result<Vec<CharacteristicDirection>> {
        let r = self.r_coeffs();
        let scale = r.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if scale == 0.0 {
            return Err(Error::Dicritical);
        }
        let trimmed: Vec<C64> = r.iter().map(|&z| if z.norm() <= 1e-14 * scale { C64::default() } else { z }).collect();
        let mut out = Vec::new();
        for u in polynomial_roots(&trimmed) {
            let u = snap(u);
            if out.iter().any(|d: &CharacteristicDirection| matches!(d.direction, Direction::Affine(v) if (v - u).norm() < 1e-8)) {
                continue;
            }
            let degenerate = self.p1(u).norm() <= 1e-12 * (1.0 + u.norm_sqr());
            out.push(CharacteristicDirection { direction: Direction::Affine(u), degenerate });
        }
        if self.p[2].norm() == 0.0 {
            out.push(CharacteristicDirection { direction: Direction::Vertical, degenerate: self.q[2].norm() == 0.0 });
        }
        Ok(out)
    }

    /// r′(u0)/P(1,u0) for the direction [1:u0].
    pub fn director(&self, u0: C64) -> Result<C64> {
        let p = self.p1(u0);
        if p.norm() == 0.0 {
            return Err(Error::DegenerateDirection);
        }
        Ok(self.r_prime(u0) / p)
    }
}

/// Clean up eigenvalue noise on exactly representable roots.
fn snap(u: C64) -> C64 {
    let round = |v: f64| if (v - v.round()).abs() < 1e-12 { v.round() } else { v };
    C64::new(round(u.re), round(u.im))
}

/// Roots of `Σ a_k t^k` (constant first, trailing zeros allowed) via the
/// eigenvalues of the companion matrix.
fn polynomial_roots(a: &[C64]) -> Vec<C64> {
    let Some(deg) = a.iter().rposition(|z| z.norm() != 0.0) else {
        return Vec::new();
    };
    match deg {
        0 => Vec::new(),
        1 => vec![-a[0] / a[1]],
        _ => {
            let lead = a[deg];
            let mut m = Matrix3::<C64>::zeros();
            // Pad degree-2 input to a 3×3 companion with an extra root at 0
            // and drop it afterwards.
            let coeffs: Vec<C64> = if deg == 3 {
                a[..3].iter().map(|z| z / lead).collect()
            } else {
                vec![C64::default(), a[0] / lead, a[1] / lead]
            };
            for k in 0..3 {
                m[(k, 2)] = -coeffs[k];
                if k > 0 {
                    m[(k, k - 1)] = c(1.0, 0.0);
                }
            }
            let eig = Schur::new(m).eigenvalues().map(|v| v.iter().copied().collect::<Vec<_>>()).unwrap_or_default();
            let mut roots: Vec<C64> = eig.into_iter().map(|r| newton_polish(a, deg, r)).collect();
            if deg == 2 {
                // Remove the padding root closest to 0.
                if let Some(k) = (0..roots.len()).min_by(|&i, &j| roots[i].norm().total_cmp(&roots[j].norm())) {
                    roots.remove(k);
                }
            }
            roots
        }
    }
}

fn newton_polish(a: &[C64], deg: usize, mut t: C64) -> C64 {
    for _ in 0..3 {
        let (mut v, mut dv) = (C64::default(), C64::default());
        for k in (0..=deg).rev() {
            dv = dv * t + v;
            v = v * t + a[k];
        }
        if dv.norm() == 0.0 {
            break;
        }
        t -= v / dv;
    }
    t
}
