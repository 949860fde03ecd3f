//! Quaternion scalars `a0 + a1 i + a2 j + a3 k`.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

/// A real quaternion with Hamilton multiplication (`i² = j² = k² = ijk = −1`).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Quaternion {
    pub a0: f64,
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
}

impl Quaternion {
    pub const ZERO: Self = Self::new(0.0, 0.0, 0.0, 0.0);
    pub const ONE: Self = Self::new(1.0, 0.0, 0.0, 0.0);
    pub const I: Self = Self::new(0.0, 1.0, 0.0, 0.0);
    pub const J: Self = Self::new(0.0, 0.0, 1.0, 0.0);
    pub const K: Self = Self::new(0.0, 0.0, 0.0, 1.0);

    pub const fn new(a0: f64, a1: f64, a2: f64, a3: f64) -> Self {
        Self { a0, a1, a2, a3 }
    }

    pub const fn real(a0: f64) -> Self {
        Self::new(a0, 0.0, 0.0, 0.0)
    }

    /// Pure quaternion `a1 i + a2 j + a3 k`.
    pub const fn pure(a1: f64, a2: f64, a3: f64) -> Self {
        Self::new(0.0, a1, a2, a3)
    }

    pub fn conj(self) -> Self {
        Self::new(self.a0, -self.a1, -self.a2, -self.a3)
    }

    pub fn norm_sqr(self) -> f64 {
        self.a0 * self.a0 + self.a1 * self.a1 + self.a2 * self.a2 + self.a3 * self.a3
    }

    /// Euclidean length of `(a0, a1, a2, a3)`.
    pub fn modulus(self) -> f64 {
        self.a0.hypot(self.a1).hypot(self.a2.hypot(self.a3))
    }

    pub fn is_pure(self) -> bool {
        self.a0 == 0.0
    }

    pub fn scale(self, s: f64) -> Self {
        Self::new(self.a0 * s, self.a1 * s, self.a2 * s, self.a3 * s)
    }

    /// Multiplicative inverse, `conj(q) / |q|²`. Returns `None` for zero.
    pub fn inverse(self) -> Option<Self> {
        let n = self.norm_sqr();
        (n > 0.0).then(|| self.conj().scale(1.0 / n))
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.a0, self.a1, self.a2, self.a3]
    }

    pub fn from_array(a: [f64; 4]) -> Self {
        Self::new(a[0], a[1], a[2], a[3])
    }
}

impl Mul for Quaternion {
    type Output = Self;

    fn mul(self, b: Self) -> Self {
        let a = self;
        Self::new(
            a.a0 * b.a0 - a.a1 * b.a1 - a.a2 * b.a2 - a.a3 * b.a3,
            a.a0 * b.a1 + a.a1 * b.a0 + a.a2 * b.a3 - a.a3 * b.a2,
            a.a0 * b.a2 - a.a1 * b.a3 + a.a2 * b.a0 + a.a3 * b.a1,
            a.a0 * b.a3 + a.a1 * b.a2 - a.a2 * b.a1 + a.a3 * b.a0,
        )
    }
}

impl Add for Quaternion {
    type Output = Self;

    fn add(self, b: Self) -> Self {
        Self::new(self.a0 + b.a0, self.a1 + b.a1, self.a2 + b.a2, self.a3 + b.a3)
    }
}

impl Sub for Quaternion {
    type Output = Self;

    fn sub(self, b: Self) -> Self {
        Self::new(self.a0 - b.a0, self.a1 - b.a1, self.a2 - b.a2, self.a3 - b.a3)
    }
}

impl Neg for Quaternion {
    type Output = Self;

    fn neg(self) -> Self {
        Self::new(-self.a0, -self.a1, -self.a2, -self.a3)
    }
}

impl fmt::Display for Quaternion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.a0)?;
        for (c, unit) in [(self.a1, 'i'), (self.a2, 'j'), (self.a3, 'k')] {
            if c.is_sign_negative() {
                write!(f, " - {}{unit}", -c)?;
            } else {
                write!(f, " + {c}{unit}")?;
            }
        }
        Ok(())
    }
}

/// Hamilton product.
pub fn quat_multiply(a: Quaternion, b: Quaternion) -> Quaternion {
    a * b
}

pub fn quat_conjugate(a: Quaternion) -> Quaternion {
    a.conj()
}

pub fn quat_modulus(a: Quaternion) -> f64 {
    a.modulus()
}
