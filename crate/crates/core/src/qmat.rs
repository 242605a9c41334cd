//! Exact 2×2 complex linear algebra for a single qubit.
//!
//! [`DensityMatrix`] and [`Unitary2`] validate their invariants on
//! construction and never renormalize. Everything here is immutable.
//!
//! Indices are 0-based: entry `(0, 0)` is the probability of measuring `|0⟩`.

use std::fmt;
use std::ops::{Add, Mul};

use num_complex::Complex64;

use crate::error::{Error, Result};

pub type Complex = Complex64;

/// Tolerance used for every matrix invariant.
pub const TOL: f64 = 1e-12;

const ZERO: Complex = Complex::new(0.0, 0.0);
const ONE: Complex = Complex::new(1.0, 0.0);

/// A 2×2 complex matrix, row-major.
#[derive(Clone, Copy, PartialEq)]
pub struct Mat2(pub [[Complex; 2]; 2]);

impl Mat2 {
    pub const IDENTITY: Mat2 = Mat2([[ONE, ZERO], [ZERO, ONE]]);
    pub const ZERO: Mat2 = Mat2([[ZERO, ZERO], [ZERO, ZERO]]);

    pub const fn new(a: Complex, b: Complex, c: Complex, d: Complex) -> Self {
        Mat2([[a, b], [c, d]])
    }

    pub fn from_real(m: [[f64; 2]; 2]) -> Self {
        Mat2([
            [Complex::new(m[0][0], 0.0), Complex::new(m[0][1], 0.0)],
            [Complex::new(m[1][0], 0.0), Complex::new(m[1][1], 0.0)],
        ])
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> Complex {
        self.0[row][col]
    }

    /// Hermitian conjugate: `(i, j)` of the result is `conj(self(j, i))`.
    #[inline]
    pub fn dagger(&self) -> Mat2 {
        let m = &self.0;
        Mat2([[m[0][0].conj(), m[1][0].conj()], [m[0][1].conj(), m[1][1].conj()]])
    }

    #[inline]
    pub fn trace(&self) -> Complex {
        self.0[0][0] + self.0[1][1]
    }

    #[inline]
    pub fn det(&self) -> Complex {
        self.0[0][0] * self.0[1][1] - self.0[0][1] * self.0[1][0]
    }

    #[inline]
    pub fn scale(&self, k: f64) -> Mat2 {
        let m = &self.0;
        Mat2([[m[0][0] * k, m[0][1] * k], [m[1][0] * k, m[1][1] * k]])
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().flatten().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Largest elementwise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Mat2) -> f64 {
        self.0
            .iter()
            .flatten()
            .zip(other.0.iter().flatten())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

impl Mul for Mat2 {
    type Output = Mat2;

    #[inline]
    fn mul(self, rhs: Mat2) -> Mat2 {
        let (a, b) = (&self.0, &rhs.0);
        Mat2([
            [
                a[0][0] * b[0][0] + a[0][1] * b[1][0],
                a[0][0] * b[0][1] + a[0][1] * b[1][1],
            ],
            [
                a[1][0] * b[0][0] + a[1][1] * b[1][0],
                a[1][0] * b[0][1] + a[1][1] * b[1][1],
            ],
        ])
    }
}

impl Add for Mat2 {
    type Output = Mat2;

    #[inline]
    fn add(self, rhs: Mat2) -> Mat2 {
        let (a, b) = (&self.0, &rhs.0);
        Mat2([
            [a[0][0] + b[0][0], a[0][1] + b[0][1]],
            [a[1][0] + b[1][0], a[1][1] + b[1][1]],
        ])
    }
}

impl fmt::Debug for Mat2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let m = &self.0;
        write!(
            f,
            "[[{}, {}], [{}, {}]]",
            m[0][0], m[0][1], m[1][0], m[1][1]
        )
    }
}

/// Standard complex matrix product.
pub fn mat_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    *a * *b
}

pub fn conjugate_transpose(a: &Mat2) -> Mat2 {
    a.dagger()
}

/// The Pauli matrices X, Y, Z in their standard complex form.
pub fn pauli_x() -> Mat2 {
    Mat2::from_real([[0.0, 1.0], [1.0, 0.0]])
}

pub fn pauli_y() -> Mat2 {
    Mat2::new(ZERO, Complex::new(0.0, -1.0), Complex::new(0.0, 1.0), ZERO)
}

pub fn pauli_z() -> Mat2 {
    Mat2::from_real([[1.0, 0.0], [0.0, -1.0]])
}

/// Hermitian, unit-trace, positive semidefinite 2×2 matrix.
#[derive(Clone, Copy, PartialEq)]
pub struct DensityMatrix(Mat2);

impl DensityMatrix {
    pub fn new(m: Mat2) -> Result<Self> {
        if !m.is_finite() {
            return Err(Error::NonFinite);
        }
        let herm = m.max_abs_diff(&m.dagger());
        if herm > TOL {
            return Err(Error::InvalidDensityMatrix(format!(
                "not Hermitian (deviation {herm:e})"
            )));
        }
        let tr = m.trace();
        if (tr - ONE).norm() > TOL {
            return Err(Error::InvalidDensityMatrix(format!("trace {tr} != 1")));
        }
        for i in 0..2 {
            let d = m.get(i, i).re;
            if !(-TOL..=1.0 + TOL).contains(&d) {
                return Err(Error::InvalidDensityMatrix(format!(
                    "diagonal entry ({i},{i}) = {d} outside [0,1]"
                )));
            }
        }
        let det = m.det().re;
        if det < -TOL {
            return Err(Error::InvalidDensityMatrix(format!(
                "negative determinant {det:e}"
            )));
        }
        Ok(DensityMatrix(m))
    }

    /// `|0⟩⟨0|`, the head-up penny.
    pub fn ground() -> Self {
        DensityMatrix(Mat2::from_real([[1.0, 0.0], [0.0, 0.0]]))
    }

    /// `|1⟩⟨1|`.
    pub fn excited() -> Self {
        DensityMatrix(Mat2::from_real([[0.0, 0.0], [0.0, 1.0]]))
    }

    /// `diag(½, ½)`: no classical or U(θ,φ) move changes it.
    pub fn maximally_mixed() -> Self {
        DensityMatrix(Mat2::from_real([[0.5, 0.0], [0.0, 0.5]]))
    }

    /// `diag(s, 1-s)`.
    pub fn classical(s: f64) -> Result<Self> {
        Self::new(Mat2::from_real([[s, 0.0], [0.0, 1.0 - s]]))
    }

    /// `½ [[1, a], [conj(a), 1]]`.
    pub fn equator(a: Complex) -> Result<Self> {
        Self::new(Mat2::new(
            Complex::new(0.5, 0.0),
            a * 0.5,
            a.conj() * 0.5,
            Complex::new(0.5, 0.0),
        ))
    }

    /// Builds a density matrix from Bloch coordinates `(x, y, z)`.
    pub fn from_bloch(r: [f64; 3]) -> Result<Self> {
        let [x, y, z] = r;
        Self::new(Mat2::new(
            Complex::new(0.5 * (1.0 + z), 0.0),
            Complex::new(0.5 * x, -0.5 * y),
            Complex::new(0.5 * x, 0.5 * y),
            Complex::new(0.5 * (1.0 - z), 0.0),
        ))
    }

    pub fn matrix(&self) -> &Mat2 {
        &self.0
    }

    /// Bloch coordinates `(Tr ρX, Tr ρY, Tr ρZ)`.
    pub fn bloch(&self) -> [f64; 3] {
        let m = &self.0;
        [
            2.0 * m.get(0, 1).re,
            -2.0 * m.get(0, 1).im,
            m.get(0, 0).re - m.get(1, 1).re,
        ]
    }

    pub fn max_abs_diff(&self, other: &DensityMatrix) -> f64 {
        self.0.max_abs_diff(&other.0)
    }
}

impl fmt::Debug for DensityMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "DensityMatrix{:?}", self.0)
    }
}

/// A 2×2 unitary operator.
#[derive(Clone, Copy, PartialEq)]
pub struct Unitary2(Mat2);

impl Unitary2 {
    pub fn new(m: Mat2) -> Result<Self> {
        if !m.is_finite() {
            return Err(Error::NonFinite);
        }
        let dev = (m * m.dagger()).max_abs_diff(&Mat2::IDENTITY);
        if dev > TOL {
            return Err(Error::NotUnitary(dev));
        }
        Ok(Unitary2(m))
    }

    pub fn identity() -> Self {
        Unitary2(Mat2::IDENTITY)
    }

    pub fn matrix(&self) -> &Mat2 {
        &self.0
    }

    pub fn dagger(&self) -> Unitary2 {
        Unitary2(self.0.dagger())
    }

    /// The 3×3 real rotation `R` with `bloch(UρU†) = R · bloch(ρ)`.
    ///
    /// `R[a][b] = ½ Tr(σ_a U σ_b U†)`.
    pub fn bloch_rotation(&self) -> [[f64; 3]; 3] {
        let paulis = [pauli_x(), pauli_y(), pauli_z()];
        let u = self.0;
        let ud = u.dagger();
        let mut r = [[0.0; 3]; 3];
        for (b, sb) in paulis.iter().enumerate() {
            let conj = u * *sb * ud;
            for (a, sa) in paulis.iter().enumerate() {
                r[a][b] = 0.5 * (*sa * conj).trace().re;
            }
        }
        r
    }
}

impl fmt::Debug for Unitary2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Unitary2{:?}", self.0)
    }
}

/// `U ρ U†`.
pub fn evolve_pure(rho: &DensityMatrix, u: &Unitary2) -> DensityMatrix {
    DensityMatrix(u.0 * rho.0 * u.0.dagger())
}

/// `Σ p_j U_j ρ U_j†`.
pub fn evolve_mixed(rho: &DensityMatrix, branches: &[(f64, Unitary2)]) -> Result<DensityMatrix> {
    check_branch_probabilities(branches.iter().map(|(p, _)| *p))?;
    let m = branches
        .iter()
        .fold(Mat2::ZERO, |acc, (p, u)| acc + evolve_pure(rho, u).0.scale(*p));
    Ok(DensityMatrix(m))
}

pub(crate) fn check_branch_probabilities(probs: impl Iterator<Item = f64>) -> Result<()> {
    let mut sum = 0.0;
    for p in probs {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::ProbabilitySum(p));
        }
        sum += p;
    }
    if (sum - 1.0).abs() > TOL {
        return Err(Error::ProbabilitySum(sum));
    }
    Ok(())
}

/// Probabilities of measuring `|0⟩` and `|1⟩`.
pub fn measure_probs(rho: &DensityMatrix) -> (f64, f64) {
    (rho.0.get(0, 0).re, rho.0.get(1, 1).re)
}

/// Real 3×3 matrix acting on Bloch vectors.
pub type Transfer = [[f64; 3]; 3];

pub fn transfer_apply(t: &Transfer, r: &[f64; 3]) -> [f64; 3] {
    [
        t[0][0] * r[0] + t[0][1] * r[1] + t[0][2] * r[2],
        t[1][0] * r[0] + t[1][1] * r[1] + t[1][2] * r[2],
        t[2][0] * r[0] + t[2][1] * r[1] + t[2][2] * r[2],
    ]
}

/// Bloch transfer matrix of the mixed-unitary channel `Σ p_j U_j · U_j†`.
pub fn mixture_transfer(branches: &[(f64, Unitary2)]) -> Transfer {
    let mut t = [[0.0; 3]; 3];
    for (p, u) in branches {
        let r = u.bloch_rotation();
        for a in 0..3 {
            for b in 0..3 {
                t[a][b] += p * r[a][b];
            }
        }
    }
    t
}
