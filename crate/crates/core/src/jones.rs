//! Two-component complex field amplitudes (H and V polarization).

use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Jones vector of a single beam, in vacuum-fluctuation units.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct JonesVector {
    pub h: Complex64,
    pub v: Complex64,
}

impl JonesVector {
    pub const ZERO: JonesVector = JonesVector {
        h: Complex64::new(0.0, 0.0),
        v: Complex64::new(0.0, 0.0),
    };

    pub const fn new(h: Complex64, v: Complex64) -> Self {
        Self { h, v }
    }

    /// Vector with real components, mostly useful in tests.
    pub fn real(h: f64, v: f64) -> Self {
        Self::new(Complex64::new(h, 0.0), Complex64::new(v, 0.0))
    }

    pub fn conj(self) -> Self {
        Self::new(self.h.conj(), self.v.conj())
    }

    /// |h|² + |v|²
    pub fn norm_sqr(self) -> f64 {
        self.h.norm_sqr() + self.v.norm_sqr()
    }

    pub fn norm(self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn is_finite(self) -> bool {
        self.h.is_finite() && self.v.is_finite()
    }
}

impl Add for JonesVector {
    type Output = JonesVector;

    fn add(self, rhs: JonesVector) -> JonesVector {
        JonesVector::new(self.h + rhs.h, self.v + rhs.v)
    }
}

impl Sub for JonesVector {
    type Output = JonesVector;

    fn sub(self, rhs: JonesVector) -> JonesVector {
        JonesVector::new(self.h - rhs.h, self.v - rhs.v)
    }
}

impl Neg for JonesVector {
    type Output = JonesVector;

    fn neg(self) -> JonesVector {
        JonesVector::new(-self.h, -self.v)
    }
}

impl Mul<f64> for JonesVector {
    type Output = JonesVector;

    fn mul(self, rhs: f64) -> JonesVector {
        JonesVector::new(self.h * rhs, self.v * rhs)
    }
}

impl Mul<Complex64> for JonesVector {
    type Output = JonesVector;

    fn mul(self, rhs: Complex64) -> JonesVector {
        JonesVector::new(self.h * rhs, self.v * rhs)
    }
}
