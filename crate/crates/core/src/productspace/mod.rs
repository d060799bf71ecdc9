//! Linear operators on `X^m`.
//!
//! All maps act block-wise on [`ProductPoint`]s. Block indices wrap around
//! modulo `m`, so `(R p)_i = p_{i−1}` with `p_0 = p_m`.
//!
//! - `R`: cyclic right shift `(x_1, …, x_m) ↦ (x_m, x_1, …, x_{m−1})`.
//! - `M = Id − R`, with kernel the diagonal `Δ` and range `Δ⊥`.
//! - `L y = Σ_{i=1}^{m−1} ((m−i)/m) R^{i−1} y` on `Δ⊥`, a right inverse of
//!   `M` with range `Δ⊥`.
//! - `M† = Σ_{k=1}^{m} ((m−(2k−1))/(2m)) R^{k−1}`.
//!
//! Only `L`'s polynomial form is provided. The other right inverse of `M`,
//! the partial-sum map `(y_1, y_1+y_2, …)`, differs from `L` by a diagonal
//! component and is not exposed.

mod dense;
mod weighted;

use crate::error::{Error, Result};
use crate::linalg::{block_sum, ProductPoint, Weights, MONTE_CARLO_TOL};

pub use dense::{
    as_matrix, penrose_residuals, pseudoinverse_oracle, rank_factorization, DenseMatrix,
    RankFactorization, MATERIALIZE_LIMIT, RANK_THRESHOLD,
};
pub use weighted::{
    apply_q, check_q_firmly_nonexpansive_in_y, check_q_nonexpansive_in_x,
    check_q_nonexpansive_in_x_sampled, ProductOperator, QVerdict, QWitness,
};

/// Which block operator a [`BlockLinearOp`] stands for.
#[derive(Clone, Debug, PartialEq)]
pub enum BlockOpKind {
    Shift,
    M,
    L,
    MDagger,
    PDelta,
    PDeltaPerp,
    Q(Weights),
}

/// A named linear map on `X^m` with its shape.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockLinearOp {
    kind: BlockOpKind,
    m: usize,
    d: usize,
}

impl BlockLinearOp {
    pub fn new(kind: BlockOpKind, m: usize, d: usize) -> Result<Self> {
        if m < 2 {
            return Err(Error::TooFewBlocks(m));
        }
        if d == 0 {
            return Err(Error::EmptyPoint);
        }
        if let BlockOpKind::Q(w) = &kind {
            if w.len() != m {
                return Err(Error::BlockCountMismatch {
                    expected: m,
                    found: w.len(),
                });
            }
        }
        Ok(BlockLinearOp { kind, m, d })
    }

    pub fn kind(&self) -> &BlockOpKind {
        &self.kind
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            BlockOpKind::Shift => "R",
            BlockOpKind::M => "M",
            BlockOpKind::L => "L",
            BlockOpKind::MDagger => "Mdagger",
            BlockOpKind::PDelta => "PDelta",
            BlockOpKind::PDeltaPerp => "PDeltaPerp",
            BlockOpKind::Q(_) => "Q",
        }
    }

    fn check_shape(&self, p: &ProductPoint) -> Result<()> {
        if p.m() != self.m {
            return Err(Error::BlockCountMismatch {
                expected: self.m,
                found: p.m(),
            });
        }
        p.block(0).ensure_dim(self.d)
    }

    /// Applies the operator. `L` rejects inputs outside `Δ⊥`.
    pub fn apply(&self, p: &ProductPoint) -> Result<ProductPoint> {
        self.check_shape(p)?;
        match &self.kind {
            BlockOpKind::L => apply_l(p),
            _ => Ok(self.apply_extended(p)),
        }
    }

    /// Like [`apply`](Self::apply), but evaluates `L` through its polynomial
    /// in `R` on all of `X^m`. Used to materialize matrices.
    pub(crate) fn apply_extended(&self, p: &ProductPoint) -> ProductPoint {
        match &self.kind {
            BlockOpKind::Shift => shift_r(p),
            BlockOpKind::M => apply_m(p),
            BlockOpKind::L => apply_l_polynomial(p),
            BlockOpKind::MDagger => apply_m_dagger(p),
            BlockOpKind::PDelta => project_diagonal(p),
            BlockOpKind::PDeltaPerp => project_diagonal_perp(p),
            BlockOpKind::Q(w) => weighted::average_blocks(p, w),
        }
    }
}

/// `R^k p`: block `i` of the result is `p_{i−k mod m}`.
pub fn shift_power(p: &ProductPoint, k: usize) -> ProductPoint {
    let m = p.m();
    let k = k % m;
    p.map_blocks(|i, _| p.block((i + m - k) % m).clone())
}

/// Cyclic right shift `(x_1, …, x_m) ↦ (x_m, x_1, …, x_{m−1})`.
pub fn shift_r(p: &ProductPoint) -> ProductPoint {
    shift_power(p, 1)
}

/// `M p = p − R p`.
pub fn apply_m(p: &ProductPoint) -> ProductPoint {
    let m = p.m();
    p.map_blocks(|i, b| b - p.block((i + m - 1) % m))
}

/// `Σ_k c_k R^k p`.
fn shift_polynomial(p: &ProductPoint, coeffs: &[f64]) -> ProductPoint {
    let m = p.m();
    p.map_blocks(|i, b| {
        let mut acc = b.scale(0.0);
        for (k, &c) in coeffs.iter().enumerate() {
            if c != 0.0 {
                acc = acc.axpy(c, p.block((i + m - k % m) % m));
            }
        }
        acc
    })
}

/// Coefficients of `L` in powers `R^0, …, R^{m−2}`: `(m−i)/m` for
/// `i = 1, …, m−1`.
pub fn l_coefficients(m: usize) -> Vec<f64> {
    (1..m).map(|i| (m - i) as f64 / m as f64).collect()
}

/// Coefficients of `M†` in powers `R^0, …, R^{m−1}`:
/// `(m − (2k − 1)) / (2m)` for `k = 1, …, m`.
pub fn m_dagger_coefficients(m: usize) -> Vec<f64> {
    (1..=m)
        .map(|k| (m as f64 - (2 * k - 1) as f64) / (2 * m) as f64)
        .collect()
}

/// `‖Σ_i p_i‖ / ‖p‖`, zero for `p = 0`.
pub fn diagonal_complement_residual(p: &ProductPoint) -> f64 {
    let s = block_sum(p).norm();
    if s == 0.0 {
        0.0
    } else {
        s / p.norm_x()
    }
}

/// Scale-free membership test for `Δ⊥`.
pub fn in_diagonal_complement(p: &ProductPoint, tol: f64) -> bool {
    diagonal_complement_residual(p) <= tol
}

/// `L y` for `y ∈ Δ⊥` (relative block-sum tolerance `1e−9`).
pub fn apply_l(y: &ProductPoint) -> Result<ProductPoint> {
    let residual = diagonal_complement_residual(y);
    if residual > MONTE_CARLO_TOL {
        return Err(Error::NotInDiagonalComplement { residual });
    }
    Ok(apply_l_polynomial(y))
}

/// The polynomial defining `L`, evaluated without the `Δ⊥` check.
pub fn apply_l_polynomial(y: &ProductPoint) -> ProductPoint {
    shift_polynomial(y, &l_coefficients(y.m()))
}

/// Closed-form Moore–Penrose inverse of `M` as a polynomial in `R`.
pub fn apply_m_dagger(p: &ProductPoint) -> ProductPoint {
    shift_polynomial(p, &m_dagger_coefficients(p.m()))
}

/// Projector onto `Δ` in the unweighted space: every block becomes the plain
/// average. Summation order matches [`apply_q`] so that uniform weights give
/// bit-identical results.
pub fn project_diagonal(p: &ProductPoint) -> ProductPoint {
    let w = Weights::uniform(p.m()).expect("product points have m >= 2");
    weighted::average_blocks(p, &w)
}

/// `p − P_Δ p`.
pub fn project_diagonal_perp(p: &ProductPoint) -> ProductPoint {
    p - &project_diagonal(p)
}
