//! 2×2 complex Jones algebra.
//!
//! Entries are stored row-major as `[[h_xx, h_xy], [h_yx, h_yy]]`, so the
//! first column is the response to an X-polarized launch and the second
//! column the response to a Y-polarized launch.

use std::fmt;
use std::ops::Mul;

use num_complex::Complex64;

use crate::error::{Error, Result};

pub type Complex = Complex64;

const ZERO: Complex = Complex::new(0.0, 0.0);
const ONE: Complex = Complex::new(1.0, 0.0);

#[derive(Clone, Copy, PartialEq)]
pub struct JonesMatrix {
    a: Complex,
    b: Complex,
    c: Complex,
    d: Complex,
}

impl fmt::Debug for JonesMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[[{}, {}], [{}, {}]]",
            self.a, self.b, self.c, self.d
        )
    }
}

fn finite(z: Complex) -> bool {
    z.re.is_finite() && z.im.is_finite()
}

impl JonesMatrix {
    pub const IDENTITY: JonesMatrix = JonesMatrix::from_raw(ONE, ZERO, ZERO, ONE);
    pub const ZERO: JonesMatrix = JonesMatrix::from_raw(ZERO, ZERO, ZERO, ZERO);

    /// Builds `[[a, b], [c, d]]`, rejecting non-finite entries.
    pub fn new(a: Complex, b: Complex, c: Complex, d: Complex) -> Result<Self> {
        if [a, b, c, d].into_iter().all(finite) {
            Ok(Self::from_raw(a, b, c, d))
        } else {
            Err(Error::invalid("Jones matrix entries must be finite"))
        }
    }

    pub(crate) const fn from_raw(a: Complex, b: Complex, c: Complex, d: Complex) -> Self {
        JonesMatrix { a, b, c, d }
    }

    pub fn diagonal(a: Complex, d: Complex) -> Result<Self> {
        Self::new(a, ZERO, ZERO, d)
    }

    /// Real rotation `[[cos θ, −sin θ], [sin θ, cos θ]]`.
    pub fn rotation(theta: f64) -> Result<Self> {
        if !theta.is_finite() {
            return Err(Error::invalid(format!("rotation angle {theta} is not finite")));
        }
        let (s, c) = theta.sin_cos();
        Ok(Self::from_raw(
            Complex::new(c, 0.0),
            Complex::new(-s, 0.0),
            Complex::new(s, 0.0),
            Complex::new(c, 0.0),
        ))
    }

    /// Linear phase retarder `diag(e^{jδ}, e^{−jδ})`.
    pub fn retarder(delta: f64) -> Result<Self> {
        if !delta.is_finite() {
            return Err(Error::invalid(format!("retardance {delta} is not finite")));
        }
        let e = Complex::from_polar(1.0, delta);
        Ok(Self::from_raw(e, ZERO, ZERO, e.conj()))
    }

    /// Lossless reflection `diag(1, −1)`.
    pub fn mirror() -> Self {
        Self::from_raw(ONE, ZERO, ZERO, -ONE)
    }

    pub fn xx(&self) -> Complex {
        self.a
    }

    pub fn xy(&self) -> Complex {
        self.b
    }

    pub fn yx(&self) -> Complex {
        self.c
    }

    pub fn yy(&self) -> Complex {
        self.d
    }

    /// Row-major entries.
    pub fn entries(&self) -> [Complex; 4] {
        [self.a, self.b, self.c, self.d]
    }

    /// Column `k` (0 = X launch, 1 = Y launch) as `[x, y]`.
    pub fn column(&self, k: usize) -> [Complex; 2] {
        match k {
            0 => [self.a, self.c],
            1 => [self.b, self.d],
            _ => panic!("Jones matrix has two columns, got index {k}"),
        }
    }

    pub fn determinant(&self) -> Complex {
        self.a * self.d - self.b * self.c
    }

    pub fn matmul(&self, rhs: &JonesMatrix) -> JonesMatrix {
        Self::from_raw(
            self.a * rhs.a + self.b * rhs.c,
            self.a * rhs.b + self.b * rhs.d,
            self.c * rhs.a + self.d * rhs.c,
            self.c * rhs.b + self.d * rhs.d,
        )
    }

    /// Plain transpose, no conjugation.
    pub fn transpose(&self) -> JonesMatrix {
        Self::from_raw(self.a, self.c, self.b, self.d)
    }

    /// Entrywise complex conjugate.
    pub fn conj(&self) -> JonesMatrix {
        Self::from_raw(self.a.conj(), self.b.conj(), self.c.conj(), self.d.conj())
    }

    pub fn scale(&self, s: Complex) -> JonesMatrix {
        Self::from_raw(self.a * s, self.b * s, self.c * s, self.d * s)
    }

    pub fn add(&self, rhs: &JonesMatrix) -> JonesMatrix {
        Self::from_raw(self.a + rhs.a, self.b + rhs.b, self.c + rhs.c, self.d + rhs.d)
    }

    /// Largest entrywise modulus of `self − other`.
    pub fn max_abs_diff(&self, other: &JonesMatrix) -> f64 {
        self.entries()
            .iter()
            .zip(other.entries().iter())
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max)
    }

    /// Sum of squared entry moduli.
    pub fn frobenius_sq(&self) -> f64 {
        self.entries().iter().map(|z| z.norm_sqr()).sum()
    }
}

impl Mul for JonesMatrix {
    type Output = JonesMatrix;

    fn mul(self, rhs: JonesMatrix) -> JonesMatrix {
        self.matmul(&rhs)
    }
}

impl Mul<&JonesMatrix> for &JonesMatrix {
    type Output = JonesMatrix;

    fn mul(self, rhs: &JonesMatrix) -> JonesMatrix {
        self.matmul(rhs)
    }
}
