//! Dense materialization of block operators and an independent
//! Moore–Penrose inverse.
//!
//! The pseudoinverse is built from a full-rank factorization `A = C F`
//! (pivot columns of `A` times the nonzero rows of its reduced row echelon
//! form), so that `A† = F† C†` with `C† = R_C^{-1} Q_Cᵀ` and
//! `F† = Q_F R_F^{-ᵀ}` from thin QR factorizations. Nothing here refers to
//! the shift structure of the operators it is used to validate.

use nalgebra::DMatrix;

use super::BlockLinearOp;
use crate::error::{Error, Result};
use crate::linalg::ProductPoint;

pub type DenseMatrix = DMatrix<f64>;

/// Largest `m·d` that [`as_matrix`] will materialize.
pub const MATERIALIZE_LIMIT: usize = 10_000;
/// Relative threshold on pivots and triangular-factor diagonals.
pub const RANK_THRESHOLD: f64 = 1e-10;

/// Column-by-column materialization over the block-major basis: column
/// `j` is the flattened image of the `j`-th basis vector. `L` is
/// materialized through its polynomial, i.e. extended to all of `X^m`.
pub fn as_matrix(op: &BlockLinearOp) -> Result<DenseMatrix> {
    let n = op.m() * op.d();
    if n > MATERIALIZE_LIMIT {
        return Err(Error::SizeGuard {
            size: n,
            limit: MATERIALIZE_LIMIT,
        });
    }
    let mut out = DenseMatrix::zeros(n, n);
    let mut basis = vec![0.0; n];
    for j in 0..n {
        basis[j] = 1.0;
        let e = ProductPoint::from_flat(op.m(), op.d(), &basis)?;
        let image = op.apply_extended(&e).flatten();
        out.set_column(j, &nalgebra::DVector::from_vec(image));
        basis[j] = 0.0;
    }
    Ok(out)
}

/// `A = C F` with `C` the pivot columns of `A` and `F` the nonzero rows of
/// its reduced row echelon form.
#[derive(Clone, Debug)]
pub struct RankFactorization {
    pub pivots: Vec<usize>,
    pub c: DenseMatrix,
    pub f: DenseMatrix,
}

impl RankFactorization {
    pub fn rank(&self) -> usize {
        self.pivots.len()
    }
}

/// Gauss–Jordan elimination with partial pivoting. Columns whose best
/// pivot is below `RANK_THRESHOLD · max|a_ij|` are treated as dependent.
pub fn rank_factorization(a: &DenseMatrix) -> Result<RankFactorization> {
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("matrix has non-finite entries".into()));
    }
    let (rows, cols) = a.shape();
    let scale = a.amax();
    let mut r = a.clone();
    let mut pivots = Vec::new();
    let mut row = 0;
    if scale > 0.0 {
        for col in 0..cols {
            if row == rows {
                break;
            }
            let (best, best_abs) = (row..rows)
                .map(|i| (i, r[(i, col)].abs()))
                .fold((row, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
            if best_abs <= RANK_THRESHOLD * scale {
                continue;
            }
            r.swap_rows(row, best);
            let pivot = r[(row, col)];
            for j in 0..cols {
                r[(row, j)] /= pivot;
            }
            for i in 0..rows {
                if i != row {
                    let factor = r[(i, col)];
                    if factor != 0.0 {
                        for j in 0..cols {
                            let v = r[(row, j)];
                            r[(i, j)] -= factor * v;
                        }
                    }
                }
            }
            pivots.push(col);
            row += 1;
        }
    }
    let k = pivots.len();
    let c = DenseMatrix::from_fn(rows, k, |i, j| a[(i, pivots[j])]);
    let f = r.rows(0, k).into_owned();
    Ok(RankFactorization { pivots, c, f })
}

/// Left inverse `(XᵀX)^{-1}Xᵀ` of a full-column-rank `x`, via thin QR.
fn left_inverse(x: &DenseMatrix) -> Result<DenseMatrix> {
    let qr = x.clone().qr();
    let (q, r) = (qr.q(), qr.r());
    let scale = x.amax();
    for i in 0..r.nrows() {
        let diag = r[(i, i)];
        if diag.abs() <= RANK_THRESHOLD * scale {
            return Err(Error::RankDetection { diagonal: diag });
        }
    }
    let r_inv = r
        .solve_upper_triangular(&DenseMatrix::identity(r.nrows(), r.nrows()))
        .ok_or(Error::RankDetection { diagonal: 0.0 })?;
    Ok(r_inv * q.transpose())
}

/// Moore–Penrose inverse computed from a rank factorization.
pub fn pseudoinverse_oracle(a: &DenseMatrix) -> Result<DenseMatrix> {
    let (rows, cols) = a.shape();
    let fac = rank_factorization(a)?;
    if fac.rank() == 0 {
        return Ok(DenseMatrix::zeros(cols, rows));
    }
    let c_pinv = left_inverse(&fac.c)?;
    let f_pinv = left_inverse(&fac.f.transpose())?.transpose();
    Ok(f_pinv * c_pinv)
}

/// Max-entry residuals of the four Penrose identities, in the order
/// `AXA = A`, `XAX = X`, `(AX)ᵀ = AX`, `(XA)ᵀ = XA`.
pub fn penrose_residuals(a: &DenseMatrix, x: &DenseMatrix) -> [f64; 4] {
    let ax = a * x;
    let xa = x * a;
    [
        (&ax * a - a).amax(),
        (&xa * x - x).amax(),
        (ax.transpose() - &ax).amax(),
        (xa.transpose() - &xa).amax(),
    ]
}
