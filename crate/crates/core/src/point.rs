use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;

pub type C64 = Complex64;

pub const I: C64 = C64::new(0.0, 1.0);

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// A point `(x, y)` of C².
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ComplexPoint {
    pub x: C64,
    pub y: C64,
}

impl ComplexPoint {
    pub const ORIGIN: Self = Self { x: C64::new(0.0, 0.0), y: C64::new(0.0, 0.0) };

    #[inline]
    pub fn new(x: C64, y: C64) -> Self {
        Self { x, y }
    }

    #[inline]
    pub fn real(x: f64, y: f64) -> Self {
        Self::new(c(x, 0.0), c(y, 0.0))
    }

    /// Euclidean norm in C² = R⁴.
    #[inline]
    pub fn norm(&self) -> f64 {
        self.x.norm().hypot(self.y.norm())
    }

    #[inline]
    pub fn dist(&self, other: &Self) -> f64 {
        (*self - *other).norm()
    }

    #[inline]
    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    /// The reflection σ(x, y) = (−x, y).
    #[inline]
    pub fn mirror(&self) -> Self {
        Self::new(-self.x, self.y)
    }

    #[inline]
    pub fn conj(&self) -> Self {
        Self::new(self.x.conj(), self.y.conj())
    }
}

impl Add for ComplexPoint {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for ComplexPoint {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Neg for ComplexPoint {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y)
    }
}

impl Mul<f64> for ComplexPoint {
    type Output = Self;
    fn mul(self, rhs: f64) -> Self {
        Self::new(self.x * rhs, self.y * rhs)
    }
}

impl Mul<C64> for ComplexPoint {
    type Output = Self;
    fn mul(self, rhs: C64) -> Self {
        Self::new(self.x * rhs, self.y * rhs)
    }
}

/// log(1 + z) without the cancellation of forming 1 + z for small z.
pub fn ln_1p(z: C64) -> C64 {
    if z.norm() < 1e-4 {
        // Alternating series; four terms reach full precision below 1e-4.
        let z2 = z * z;
        z - z2 * 0.5 + z2 * z / 3.0 - z2 * z2 * 0.25
    } else {
        (C64::new(1.0, 0.0) + z).ln()
    }
}
