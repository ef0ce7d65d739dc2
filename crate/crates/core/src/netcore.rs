//! Four-mode transfer-matrix algebra.
//!
//! A [`TransferMatrix4`] relates the left-hand mode vector
//! `(a1_out, a1_in, a3_out, a3_in)` to the right-hand mode vector
//! `(a4_in, a4_out, a2_in, a2_out)`. Circuits are built by multiplying
//! component matrices in the order they appear from left to right, and the
//! measurable S-parameters follow from solving the port relation with no
//! signal entering ports 1 and 3.

use std::ops::Mul;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Complex mode amplitude.
pub type Complex = Complex64;

const ZERO: Complex = Complex::new(0.0, 0.0);
const ONE: Complex = Complex::new(1.0, 0.0);

/// Condition number (1-norm) above which the port system is rejected.
pub const MAX_CONDITION: f64 = 1e12;

/// Dense row-major 4×4 complex transfer matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransferMatrix4 {
    m: [[Complex; 4]; 4],
}

impl TransferMatrix4 {
    pub fn identity() -> Self {
        let mut m = [[ZERO; 4]; 4];
        for (i, row) in m.iter_mut().enumerate() {
            row[i] = ONE;
        }
        Self { m }
    }

    /// Builds a matrix from rows, rejecting NaN or infinite entries.
    pub fn from_rows(m: [[Complex; 4]; 4]) -> Result<Self> {
        let mat = Self { m };
        if mat.is_finite() {
            Ok(mat)
        } else {
            Err(Error::NonFinite("transfer matrix"))
        }
    }

    pub fn diagonal(d: [Complex; 4]) -> Result<Self> {
        let mut m = [[ZERO; 4]; 4];
        for i in 0..4 {
            m[i][i] = d[i];
        }
        Self::from_rows(m)
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> Complex {
        self.m[row][col]
    }

    pub fn rows(&self) -> &[[Complex; 4]; 4] {
        &self.m
    }

    pub fn is_finite(&self) -> bool {
        self.m.iter().flatten().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Largest elementwise modulus difference, scaled by the larger matrix norm.
    pub fn max_rel_diff(&self, other: &Self) -> f64 {
        let scale = self.max_abs().max(other.max_abs()).max(f64::MIN_POSITIVE);
        self.m
            .iter()
            .flatten()
            .zip(other.m.iter().flatten())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
            / scale
    }

    fn max_abs(&self) -> f64 {
        self.m.iter().flatten().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

impl Mul for TransferMatrix4 {
    type Output = TransferMatrix4;

    fn mul(self, rhs: TransferMatrix4) -> TransferMatrix4 {
        &self * &rhs
    }
}

impl Mul for &TransferMatrix4 {
    type Output = TransferMatrix4;

    fn mul(self, rhs: &TransferMatrix4) -> TransferMatrix4 {
        let mut m = [[ZERO; 4]; 4];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, out) in row.iter_mut().enumerate() {
                *out = (0..4).map(|k| self.m[i][k] * rhs.m[k][j]).sum();
            }
        }
        TransferMatrix4 { m }
    }
}

/// Ordered product of the given matrices, leftmost factor first.
pub fn cascade(ms: &[TransferMatrix4]) -> Result<TransferMatrix4> {
    let (first, rest) = ms.split_first().ok_or(Error::EmptyCascade)?;
    if !ms.iter().all(TransferMatrix4::is_finite) {
        return Err(Error::NonFinite("cascade input"));
    }
    let total = rest.iter().fold(*first, |acc, m| &acc * m);
    if total.is_finite() {
        Ok(total)
    } else {
        Err(Error::NonFinite("cascade product"))
    }
}

/// Full set of port amplitudes on both sides of a circuit.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PortVector {
    pub a1_out: Complex,
    pub a1_in: Complex,
    pub a3_out: Complex,
    pub a3_in: Complex,
    pub a4_in: Complex,
    pub a4_out: Complex,
    pub a2_in: Complex,
    pub a2_out: Complex,
}

impl PortVector {
    /// `(a1_out, a1_in, a3_out, a3_in)`
    pub fn left(&self) -> [Complex; 4] {
        [self.a1_out, self.a1_in, self.a3_out, self.a3_in]
    }

    /// `(a4_in, a4_out, a2_in, a2_out)`
    pub fn right(&self) -> [Complex; 4] {
        [self.a4_in, self.a4_out, self.a2_in, self.a2_out]
    }
}

/// S-parameters for unit drive at port 2 and, separately, at port 4.
///
/// `sij` is the output amplitude at port `i` per unit drive at port `j`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScatterSolution {
    pub s12: Complex,
    pub s32: Complex,
    pub s34: Complex,
    pub s14: Complex,
    pub s22: Complex,
    pub s42: Complex,
    pub s44: Complex,
    pub s24: Complex,
}

impl ScatterSolution {
    pub fn from_total(total: &TransferMatrix4) -> Result<Self> {
        let sys = PortSystem::factor(total)?;
        let p2 = sys.solve(ONE, ZERO);
        let p4 = sys.solve(ZERO, ONE);
        Ok(Self {
            s12: p2.a1_out,
            s32: p2.a3_out,
            s22: p2.a2_out,
            s42: p2.a4_out,
            s34: p4.a3_out,
            s14: p4.a1_out,
            s44: p4.a4_out,
            s24: p4.a2_out,
        })
    }

    /// Total output power for unit drive at port 2.
    pub fn column_power_port2(&self) -> f64 {
        [self.s12, self.s32, self.s22, self.s42]
            .iter()
            .map(|z| z.norm_sqr())
            .sum()
    }

    /// Total output power for unit drive at port 4.
    pub fn column_power_port4(&self) -> f64 {
        [self.s34, self.s14, self.s44, self.s24]
            .iter()
            .map(|z| z.norm_sqr())
            .sum()
    }
}

/// Solves the port relation of `total` with `a1_in = a3_in = 0`.
pub fn solve_ports(total: &TransferMatrix4, a2_in: Complex, a4_in: Complex) -> Result<PortVector> {
    if !(a2_in.is_finite() && a4_in.is_finite()) {
        return Err(Error::NonFinite("port drive"));
    }
    if a2_in == ZERO && a4_in == ZERO {
        return Err(Error::InvalidParameter(
            "at least one of a2_in, a4_in must be nonzero".into(),
        ));
    }
    Ok(PortSystem::factor(total)?.solve(a2_in, a4_in))
}

/// LU-factored port system for a fixed total matrix.
///
/// Unknowns are ordered `(a1_out, a3_out, a4_out, a2_out)`. Row `k` of the
/// transfer relation reads `left_k = Σ_j M_kj right_j`; the unknown
/// right-hand outputs are moved to the left side.
struct PortSystem {
    total: TransferMatrix4,
    lu: [[Complex; 4]; 4],
    perm: [usize; 4],
}

impl PortSystem {
    fn factor(total: &TransferMatrix4) -> Result<Self> {
        if !total.is_finite() {
            return Err(Error::NonFinite("total transfer matrix"));
        }
        let m = total.rows();
        // columns: a1_out, a3_out, a4_out, a2_out
        let mut a = [[ZERO; 4]; 4];
        for k in 0..4 {
            a[k][0] = if k == 0 { ONE } else { ZERO };
            a[k][1] = if k == 2 { ONE } else { ZERO };
            a[k][2] = -m[k][1];
            a[k][3] = -m[k][3];
        }
        let (lu, perm) = lu_factor(a).ok_or(Error::SingularSystem {
            condition: f64::INFINITY,
        })?;
        let condition = norm1(&a) * norm1(&lu_inverse(&lu, &perm));
        if !condition.is_finite() || condition > MAX_CONDITION {
            return Err(Error::SingularSystem { condition });
        }
        Ok(Self {
            total: *total,
            lu,
            perm,
        })
    }

    fn solve(&self, a2_in: Complex, a4_in: Complex) -> PortVector {
        let m = self.total.rows();
        let mut b = [ZERO; 4];
        for (k, bk) in b.iter_mut().enumerate() {
            *bk = m[k][0] * a4_in + m[k][2] * a2_in;
        }
        let x = lu_solve(&self.lu, &self.perm, b);
        PortVector {
            a1_out: x[0],
            a1_in: ZERO,
            a3_out: x[1],
            a3_in: ZERO,
            a4_in,
            a4_out: x[2],
            a2_in,
            a2_out: x[3],
        }
    }
}

/// In-place LU with partial pivoting. Returns `None` on an exactly zero pivot.
fn lu_factor(mut a: [[Complex; 4]; 4]) -> Option<([[Complex; 4]; 4], [usize; 4])> {
    let mut perm = [0, 1, 2, 3];
    for col in 0..4 {
        let pivot = (col..4)
            .max_by(|&i, &j| a[i][col].norm().total_cmp(&a[j][col].norm()))
            .unwrap();
        if a[pivot][col].norm() == 0.0 {
            return None;
        }
        a.swap(col, pivot);
        perm.swap(col, pivot);
        for row in col + 1..4 {
            let f = a[row][col] / a[col][col];
            a[row][col] = f;
            for k in col + 1..4 {
                let u = a[col][k];
                a[row][k] -= f * u;
            }
        }
    }
    Some((a, perm))
}

fn lu_solve(lu: &[[Complex; 4]; 4], perm: &[usize; 4], b: [Complex; 4]) -> [Complex; 4] {
    let mut y = [ZERO; 4];
    for i in 0..4 {
        y[i] = b[perm[i]] - (0..i).map(|k| lu[i][k] * y[k]).sum::<Complex>();
    }
    let mut x = [ZERO; 4];
    for i in (0..4).rev() {
        x[i] = (y[i] - (i + 1..4).map(|k| lu[i][k] * x[k]).sum::<Complex>()) / lu[i][i];
    }
    x
}

fn lu_inverse(lu: &[[Complex; 4]; 4], perm: &[usize; 4]) -> [[Complex; 4]; 4] {
    let mut inv = [[ZERO; 4]; 4];
    for j in 0..4 {
        let mut e = [ZERO; 4];
        e[j] = ONE;
        let col = lu_solve(lu, perm, e);
        for i in 0..4 {
            inv[i][j] = col[i];
        }
    }
    inv
}

fn norm1(a: &[[Complex; 4]; 4]) -> f64 {
    (0..4)
        .map(|j| (0..4).map(|i| a[i][j].norm()).sum::<f64>())
        .fold(0.0, f64::max)
}
