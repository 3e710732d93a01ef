//! Physical parameters, relativistic kinematics and critical charges.
//!
//! Everything downstream is expressed through [`PhysicalParams`]. The
//! defaults are natural units `m = c = ħ = 1`, so energies come out in
//! units of `mc²` and momenta in units of `mc`.

use std::f64::consts::PI;
use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// CODATA 2018 fine-structure constant.
pub const FINE_STRUCTURE: f64 = 7.297_352_569_3e-3;

/// Dimensionless critical coupling `αZ_c = 2 / (π/2 + 2/π)`.
pub fn critical_nu() -> f64 {
    2.0 / (PI / 2.0 + 2.0 / PI)
}

/// Dimensionless coupling `αZ_c' = 3/4` below which no channel has
/// eigenvalues at or above `mc²`.
pub const CRITICAL_NU_PRIME: f64 = 0.75;

/// Critical nuclear charge `Z_c = 2 / ((π/2 + 2/π) α)`.
pub fn critical_z(alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    Ok(critical_nu() / alpha)
}

/// Self-adjointness threshold `Z_c' = 3 / (4α)`.
pub fn critical_z_prime(alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    Ok(CRITICAL_NU_PRIME / alpha)
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(invalid("alpha", format!("must be positive and finite, got {alpha}")));
    }
    Ok(())
}

/// Masses, charges and fundamental constants of one run.
///
/// Derived couplings are always recomputed from the stored fields.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalParams {
    mass: f64,
    light_speed: f64,
    planck_reduced: f64,
    fine_structure: f64,
    nuclear_charge: f64,
}

impl PhysicalParams {
    pub fn new(
        mass: f64,
        light_speed: f64,
        planck_reduced: f64,
        fine_structure: f64,
        nuclear_charge: f64,
    ) -> Result<Self> {
        let finite = [mass, light_speed, planck_reduced, fine_structure, nuclear_charge]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::NonFinite("physical parameters"));
        }
        if mass < 0.0 {
            return Err(invalid("mass", format!("must be >= 0, got {mass}")));
        }
        if light_speed <= 0.0 {
            return Err(invalid("light_speed", format!("must be > 0, got {light_speed}")));
        }
        if planck_reduced <= 0.0 {
            return Err(invalid("planck_reduced", format!("must be > 0, got {planck_reduced}")));
        }
        if fine_structure <= 0.0 {
            return Err(invalid("fine_structure", format!("must be > 0, got {fine_structure}")));
        }
        if nuclear_charge < 0.0 {
            return Err(invalid("nuclear_charge", format!("must be >= 0, got {nuclear_charge}")));
        }
        Ok(Self {
            mass,
            light_speed,
            planck_reduced,
            fine_structure,
            nuclear_charge,
        })
    }

    /// Natural units with the physical `α` and `Z = ν/α`.
    pub fn natural(nu: f64) -> Result<Self> {
        if !(nu.is_finite() && nu >= 0.0) {
            return Err(invalid("nu", format!("must be >= 0, got {nu}")));
        }
        Self::new(1.0, 1.0, 1.0, FINE_STRUCTURE, nu / FINE_STRUCTURE)
    }

    /// Natural units with an explicit `(α, Z)` pair.
    pub fn from_alpha_z(alpha: f64, z: f64) -> Result<Self> {
        Self::new(1.0, 1.0, 1.0, alpha, z)
    }

    pub fn with_mass(self, mass: f64) -> Result<Self> {
        Self::new(
            mass,
            self.light_speed,
            self.planck_reduced,
            self.fine_structure,
            self.nuclear_charge,
        )
    }

    pub fn with_light_speed(self, c: f64) -> Result<Self> {
        Self::new(
            self.mass,
            c,
            self.planck_reduced,
            self.fine_structure,
            self.nuclear_charge,
        )
    }

    pub fn with_nuclear_charge(self, z: f64) -> Result<Self> {
        Self::new(self.mass, self.light_speed, self.planck_reduced, self.fine_structure, z)
    }

    /// Keeps `α` and sets `Z = ν/α`.
    pub fn with_nu(self, nu: f64) -> Result<Self> {
        self.with_nuclear_charge(nu / self.fine_structure)
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn light_speed(&self) -> f64 {
        self.light_speed
    }

    pub fn planck_reduced(&self) -> f64 {
        self.planck_reduced
    }

    pub fn fine_structure(&self) -> f64 {
        self.fine_structure
    }

    pub fn nuclear_charge(&self) -> f64 {
        self.nuclear_charge
    }

    /// Dimensionless coupling `ν = αZ`.
    pub fn nu(&self) -> f64 {
        self.fine_structure * self.nuclear_charge
    }

    /// `γ = αcZ / (2π²)`.
    pub fn coupling_gamma(&self) -> f64 {
        self.fine_structure * self.light_speed * self.nuclear_charge / (2.0 * PI * PI)
    }

    /// Coefficient `αcZ/π = 2πγ` in front of the partial-wave kernel.
    pub fn channel_coupling(&self) -> f64 {
        self.fine_structure * self.light_speed * self.nuclear_charge / PI
    }

    /// `Z / Z_c`.
    pub fn charge_ratio(&self) -> f64 {
        self.nu() / critical_nu()
    }

    pub fn critical_z(&self) -> f64 {
        critical_nu() / self.fine_structure
    }

    pub fn critical_z_prime(&self) -> f64 {
        CRITICAL_NU_PRIME / self.fine_structure
    }

    /// `mc²`, also `e(0)`.
    pub fn rest_energy(&self) -> f64 {
        self.mass * self.light_speed * self.light_speed
    }

    /// `e(p) = sqrt(c²p² + m²c⁴)`.
    pub fn energy(&self, p: f64) -> Result<f64> {
        check_momentum(p)?;
        Ok(self.energy_unchecked(p))
    }

    /// `n(p) = sqrt(2 e(p) (e(p) + e(0)))`.
    pub fn normalizer(&self, p: f64) -> Result<f64> {
        check_momentum(p)?;
        Ok(self.normalizer_unchecked(p))
    }

    #[inline]
    pub(crate) fn energy_unchecked(&self, p: f64) -> f64 {
        (self.light_speed * p).hypot(self.rest_energy())
    }

    #[inline]
    pub(crate) fn normalizer_unchecked(&self, p: f64) -> f64 {
        let e = self.energy_unchecked(p);
        (2.0 * e * (e + self.rest_energy())).sqrt()
    }
}

fn check_momentum(p: f64) -> Result<()> {
    if p.is_nan() || p < 0.0 {
        return Err(Error::NegativeMomentum(p));
    }
    Ok(())
}

pub fn energy(p: f64, params: &PhysicalParams) -> Result<f64> {
    params.energy(p)
}

pub fn normalizer(p: f64, params: &PhysicalParams) -> Result<f64> {
    params.normalizer(p)
}

pub fn coupling_gamma(params: &PhysicalParams) -> f64 {
    params.coupling_gamma()
}

/// Dense complex 2×2 matrix acting on Pauli spinors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat2(pub [[Complex64; 2]; 2]);

impl Mat2 {
    pub fn zero() -> Self {
        Mat2([[Complex64::new(0.0, 0.0); 2]; 2])
    }

    pub fn identity() -> Self {
        Self::scalar(1.0)
    }

    pub fn scalar(s: f64) -> Self {
        let z = Complex64::new(0.0, 0.0);
        let d = Complex64::new(s, 0.0);
        Mat2([[d, z], [z, d]])
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.0[row][col]
    }

    pub fn adjoint(&self) -> Self {
        let m = &self.0;
        Mat2([[m[0][0].conj(), m[1][0].conj()], [m[0][1].conj(), m[1][1].conj()]])
    }

    pub fn trace(&self) -> Complex64 {
        self.0[0][0] + self.0[1][1]
    }

    pub fn determinant(&self) -> Complex64 {
        self.0[0][0] * self.0[1][1] - self.0[0][1] * self.0[1][0]
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut out = *self;
        for row in out.0.iter_mut() {
            for v in row.iter_mut() {
                *v *= s;
            }
        }
        out
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.0.iter().flatten().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Spectral norm, from the eigenvalues of `M†M`.
    pub fn operator_norm(&self) -> f64 {
        let h = self.adjoint() * *self;
        let a = h.0[0][0].re;
        let d = h.0[1][1].re;
        let b = h.0[0][1].norm();
        let half_gap = (0.25 * (a - d) * (a - d) + b * b).sqrt();
        (0.5 * (a + d) + half_gap).max(0.0).sqrt()
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        (*self - self.adjoint()).max_abs() <= tol
    }
}

impl Add for Mat2 {
    type Output = Mat2;
    fn add(self, rhs: Mat2) -> Mat2 {
        let mut out = self;
        for i in 0..2 {
            for j in 0..2 {
                out.0[i][j] += rhs.0[i][j];
            }
        }
        out
    }
}

impl Sub for Mat2 {
    type Output = Mat2;
    fn sub(self, rhs: Mat2) -> Mat2 {
        self + rhs.scale(-1.0)
    }
}

impl Mul for Mat2 {
    type Output = Mat2;
    fn mul(self, rhs: Mat2) -> Mat2 {
        let mut out = Mat2::zero();
        for i in 0..2 {
            for j in 0..2 {
                out.0[i][j] = self.0[i][0] * rhs.0[0][j] + self.0[i][1] * rhs.0[1][j];
            }
        }
        out
    }
}

/// The contraction `p·σ = p₁σ₁ + p₂σ₂ + p₃σ₃`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PauliContraction(Mat2);

impl PauliContraction {
    pub fn matrix(&self) -> &Mat2 {
        &self.0
    }

    pub fn into_matrix(self) -> Mat2 {
        self.0
    }
}

pub fn pauli_dot(p: [f64; 3]) -> PauliContraction {
    let [x, y, z] = p;
    PauliContraction(Mat2([
        [Complex64::new(z, 0.0), Complex64::new(x, -y)],
        [Complex64::new(x, y), Complex64::new(-z, 0.0)],
    ]))
}
