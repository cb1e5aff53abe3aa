use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Orthonormal single-qubit measurement basis `{b0, b1}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QubitBasis<T: Scalar = f64> {
    b0: [Complex<T>; 2],
    b1: [Complex<T>; 2],
    angles: Option<BasisAngles<T>>,
}

/// Bloch-sphere angles of the `b0` vector, in radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct BasisAngles<T: Scalar = f64> {
    pub polar: T,
    pub azimuthal: T,
}

impl<T: Scalar> BasisAngles<T> {
    pub fn new(polar: T, azimuthal: T) -> Self {
        Self { polar, azimuthal }
    }

    /// Representative with `polar ∈ [0, π]` and `azimuthal ∈ [0, 2π)`.
    /// `(θ, φ)` and `(2π − θ, φ + π)` describe the same basis up to phases.
    pub fn canonical(self) -> Self {
        let tau = T::TAU();
        let mut polar = crate::scalar::wrap_angle(self.polar);
        let mut azimuthal = self.azimuthal;
        if polar > T::PI() {
            polar = tau - polar;
            azimuthal = azimuthal + T::PI();
        }
        Self {
            polar,
            azimuthal: crate::scalar::wrap_angle(azimuthal),
        }
    }
}

fn c<T: Scalar>(re: f64, im: f64) -> Complex<T> {
    Complex::new(T::lit(re), T::lit(im))
}

impl<T: Scalar> QubitBasis<T> {
    /// Builds a basis from two vectors, checking orthonormality.
    pub fn from_vectors(b0: [Complex<T>; 2], b1: [Complex<T>; 2]) -> Result<Self> {
        let tol = T::TOLERANCE;
        let n0 = b0[0].norm_sqr() + b0[1].norm_sqr();
        let n1 = b1[0].norm_sqr() + b1[1].norm_sqr();
        let overlap = b0[0].conj() * b1[0] + b0[1].conj() * b1[1];
        if (n0 - T::one()).abs() > tol || (n1 - T::one()).abs() > tol {
            return Err(Error::InvalidBasis(format!(
                "basis vectors not normalized ({n0}, {n1})"
            )));
        }
        if overlap.norm() > tol {
            return Err(Error::InvalidBasis(format!(
                "basis vectors not orthogonal (overlap {})",
                overlap.norm()
            )));
        }
        Ok(Self {
            b0,
            b1,
            angles: None,
        })
    }

    /// `b0 = (cos θ/2, e^{iφ} sin θ/2)`, `b1 = (−e^{−iφ} sin θ/2, cos θ/2)`.
    pub fn from_angles(polar: T, azimuthal: T) -> Self {
        let half = polar * T::lit(0.5);
        let (s, co) = half.sin_cos();
        let zero = T::zero();
        let b0 = [Complex::new(co, zero), Complex::from_polar(s, azimuthal)];
        let b1 = [-Complex::from_polar(s, -azimuthal), Complex::new(co, zero)];
        Self {
            b0,
            b1,
            angles: Some(BasisAngles::new(polar, azimuthal)),
        }
    }

    /// `{|0>, |1>}`.
    pub fn computational() -> Self {
        Self::from_angles(T::zero(), T::zero())
    }

    /// `{|+>, |->}`. The preparation basis of the GHZ family: outcome strings
    /// of even parity leave `(|00> + |11>)/√2` behind.
    pub fn x_basis() -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        Self {
            b0: [c(h, 0.), c(h, 0.)],
            b1: [c(h, 0.), c(-h, 0.)],
            angles: Some(BasisAngles::new(T::FRAC_PI_2(), T::zero())),
        }
    }

    /// `{|->, |+>}`: the x basis with its outcome labels swapped.
    pub fn minus_plus() -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        Self {
            b0: [c(h, 0.), c(-h, 0.)],
            b1: [c(h, 0.), c(h, 0.)],
            angles: None,
        }
    }

    /// `{(|0> + i|1>)/√2, (|0> − i|1>)/√2}`.
    pub fn y_basis() -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        Self {
            b0: [c(h, 0.), c(0., h)],
            b1: [c(h, 0.), c(0., -h)],
            angles: None,
        }
    }

    #[inline]
    pub fn vector(&self, outcome: u8) -> [Complex<T>; 2] {
        if outcome == 0 {
            self.b0
        } else {
            self.b1
        }
    }

    pub fn angles(&self) -> Option<BasisAngles<T>> {
        self.angles
    }

    /// Bloch angles of `b0`, read from the vectors and canonicalized.
    pub fn bloch_angles(&self) -> BasisAngles<T> {
        let (a, b) = (self.b0[0], self.b0[1]);
        let polar = T::lit(2.0) * b.norm().atan2(a.norm());
        let azimuthal = if b.norm() > T::TOLERANCE && a.norm() > T::TOLERANCE {
            b.arg() - a.arg()
        } else {
            T::zero()
        };
        BasisAngles::new(polar, azimuthal).canonical()
    }

    /// Same basis with each vector multiplied by a phase.
    pub fn with_phases(&self, delta0: T, delta1: T) -> Self {
        let p0 = Complex::from_polar(T::one(), delta0);
        let p1 = Complex::from_polar(T::one(), delta1);
        Self {
            b0: [self.b0[0] * p0, self.b0[1] * p0],
            b1: [self.b1[0] * p1, self.b1[1] * p1],
            angles: self.angles,
        }
    }

    /// Largest deviation from orthonormality.
    pub fn orthonormality_defect(&self) -> T {
        let n0 = self.b0[0].norm_sqr() + self.b0[1].norm_sqr();
        let n1 = self.b1[0].norm_sqr() + self.b1[1].norm_sqr();
        let overlap = self.b0[0].conj() * self.b1[0] + self.b0[1].conj() * self.b1[1];
        (n0 - T::one()).abs().max((n1 - T::one()).abs()).max(overlap.norm())
    }
}

#[derive(Serialize, Deserialize)]
struct BasisRepr {
    b0: [[f64; 2]; 2],
    b1: [[f64; 2]; 2],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    angles: Option<[f64; 2]>,
}

impl<T: Scalar> Serialize for QubitBasis<T> {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let pair = |v: [Complex<T>; 2]| {
            [
                [v[0].re.as_f64(), v[0].im.as_f64()],
                [v[1].re.as_f64(), v[1].im.as_f64()],
            ]
        };
        BasisRepr {
            b0: pair(self.b0),
            b1: pair(self.b1),
            angles: self
                .angles
                .map(|a| [a.polar.as_f64(), a.azimuthal.as_f64()]),
        }
        .serialize(serializer)
    }
}

impl<'de, T: Scalar> Deserialize<'de> for QubitBasis<T> {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let repr = BasisRepr::deserialize(deserializer)?;
        let vec = |v: [[f64; 2]; 2]| [c::<T>(v[0][0], v[0][1]), c::<T>(v[1][0], v[1][1])];
        let mut basis = Self::from_vectors(vec(repr.b0), vec(repr.b1))
            .map_err(serde::de::Error::custom)?;
        basis.angles = repr
            .angles
            .map(|[p, a]| BasisAngles::new(T::lit(p), T::lit(a)));
        Ok(basis)
    }
}
