//! Dense bivariate polynomials with complex coefficients.

use std::collections::BTreeMap;

use nalgebra::DMatrix;

use crate::point::C64;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Poly2 {
    terms: BTreeMap<(u32, u32), C64>,
}

impl Poly2 {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: C64) -> Self {
        Self::monomial(0, 0, c)
    }

    pub fn monomial(i: u32, j: u32, c: C64) -> Self {
        let mut p = Self::zero();
        p.add_term(i, j, c);
        p
    }

    pub fn add_term(&mut self, i: u32, j: u32, c: C64) {
        let e = self.terms.entry((i, j)).or_default();
        *e += c;
        if *e == C64::new(0.0, 0.0) {
            self.terms.remove(&(i, j));
        }
    }

    pub fn coeff(&self, i: u32, j: u32) -> C64 {
        self.terms.get(&(i, j)).copied().unwrap_or_default()
    }

    pub fn terms(&self) -> impl Iterator<Item = (u32, u32, C64)> + '_ {
        self.terms.iter().map(|(&(i, j), &c)| (i, j, c))
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn total_degree(&self) -> Option<u32> {
        self.terms.keys().map(|&(i, j)| i + j).max()
    }

    /// The homogeneous part of the given degree.
    pub fn homogeneous_part(&self, d: u32) -> Self {
        let mut out = Self::zero();
        for (i, j, c) in self.terms() {
            if i + j == d {
                out.add_term(i, j, c);
            }
        }
        out
    }

    pub fn top_form(&self) -> Self {
        match self.total_degree() {
            Some(d) => self.homogeneous_part(d),
            None => Self::zero(),
        }
    }

    pub fn eval(&self, x: C64, y: C64) -> C64 {
        self.terms().map(|(i, j, c)| c * x.powu(i) * y.powu(j)).sum()
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (i, j, c) in other.terms() {
            out.add_term(i, j, c);
        }
        out
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Self::zero();
        for (i, j, a) in self.terms() {
            for (k, l, b) in other.terms() {
                out.add_term(i + k, j + l, a * b);
            }
        }
        out
    }

    pub fn scale(&self, s: C64) -> Self {
        let mut out = Self::zero();
        for (i, j, c) in self.terms() {
            out.add_term(i, j, c * s);
        }
        out
    }

    fn max_abs_coeff(&self) -> f64 {
        self.terms.values().map(|c| c.norm()).fold(0.0, f64::max)
    }
}

/// Coefficients (constant term first) of a degree-`d` form restricted to
/// the chart `y = 1` (`x_chart = false`) or `x = 1` (`x_chart = true`).
fn dehomogenize(form: &Poly2, d: u32, x_chart: bool) -> Vec<C64> {
    let mut out = vec![C64::default(); d as usize + 1];
    for (i, j, c) in form.terms() {
        let k = if x_chart { j } else { i };
        out[k as usize] += c;
    }
    out
}

/// Sylvester resultant of two univariate polynomials taken at their formal
/// degrees, so that a vanishing leading pair also gives a zero resultant.
pub fn sylvester_resultant(a: &[C64], b: &[C64]) -> C64 {
    let m = a.len() - 1;
    let n = b.len() - 1;
    let size = m + n;
    if size == 0 {
        return C64::new(1.0, 0.0);
    }
    let mut s = DMatrix::<C64>::zeros(size, size);
    for row in 0..n {
        for (k, &c) in a.iter().rev().enumerate() {
            s[(row, row + k)] = c;
        }
    }
    for row in 0..m {
        for (k, &c) in b.iter().rev().enumerate() {
            s[(n + row, row + k)] = c;
        }
    }
    s.determinant()
}

/// True when two homogeneous forms share no zero other than the origin.
/// Checks the normalized resultant on both affine charts of P¹.
pub fn forms_coprime(a: &Poly2, b: &Poly2) -> bool {
    let (Some(da), Some(db)) = (a.total_degree(), b.total_degree()) else {
        return false;
    };
    if da == 0 || db == 0 {
        return true;
    }
    let na = a.max_abs_coeff();
    let nb = b.max_abs_coeff();
    let an = a.scale(C64::new(1.0 / na, 0.0));
    let bn = b.scale(C64::new(1.0 / nb, 0.0));
    [false, true].iter().all(|&x_chart| {
        let ra = dehomogenize(&an, da, x_chart);
        let rb = dehomogenize(&bn, db, x_chart);
        sylvester_resultant(&ra, &rb).norm() > 1e-10
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::point::c;

    fn x() -> Poly2 {
        Poly2::monomial(1, 0, c(1.0, 0.0))
    }
    fn y() -> Poly2 {
        Poly2::monomial(0, 1, c(1.0, 0.0))
    }

    #[test]
    fn product_and_top_form() {
        let p = x().add(&Poly2::constant(c(1.0, 0.0))).mul(&x().add(&y()));
        assert_eq!(p.total_degree(), Some(2));
        let top = p.top_form();
        assert_eq!(top.coeff(2, 0), c(1.0, 0.0));
        assert_eq!(top.coeff(1, 1), c(1.0, 0.0));
        assert_eq!(top.coeff(1, 0), c(0.0, 0.0));
    }

    #[test]
    fn resultant_of_linear_factors() {
        // (t − 2) and (t − 5): resultant is 2 − 5 up to sign.
        let r = sylvester_resultant(&[c(-2.0, 0.0), c(1.0, 0.0)], &[c(-5.0, 0.0), c(1.0, 0.0)]);
        assert!((r.norm() - 3.0).abs() < 1e-12);
        let r = sylvester_resultant(&[c(-2.0, 0.0), c(1.0, 0.0)], &[c(4.0, 0.0), c(-4.0, 0.0), c(1.0, 0.0)]);
        assert!(r.norm() < 1e-12);
    }

    #[test]
    fn coprimality_of_forms() {
        let x2 = x().mul(&x());
        let y2 = y().mul(&y());
        let xy = x().mul(&y());
        assert!(forms_coprime(&x2, &y2));
        assert!(!forms_coprime(&x2, &xy));
        let a = x2.mul(&x2.add(&y2));
        let b = y2.mul(&y2);
        assert!(forms_coprime(&a, &b));
        // Both vanish at [1:0]: caught only through the formal leading pair.
        assert!(!forms_coprime(&xy, &y2));
    }
}
