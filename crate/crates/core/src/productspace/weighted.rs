//! The weighted averaging map `Q`, the product operator `T = T_1 × ⋯ × T_m`,
//! and checks of `Q` in the weighted and unweighted geometries.

use crate::error::{Error, Result};
use crate::linalg::{diagonal_embed, inner_y, Point, ProductPoint, Weights};
use crate::operators::{CheckReport, OperatorSpec, Sampler, Violation};

/// Tolerance on `m Σλ_i² − 1` below which weights count as uniform.
const UNIFORM_RATIO_TOL: f64 = 1e-12;

/// `x̄ = Σ λ_i x_i`, accumulated in block order from zero (the same order a
/// convex combination of operators uses).
pub(crate) fn weighted_mean(p: &ProductPoint, w: &Weights) -> Point {
    let mut acc = Point::zeros(p.dim());
    for (b, l) in p.blocks().iter().zip(w.as_slice()) {
        acc = acc.axpy(*l, b);
    }
    acc
}

pub(crate) fn average_blocks(p: &ProductPoint, w: &Weights) -> ProductPoint {
    diagonal_embed(&weighted_mean(p, w), p.m()).expect("product points have m >= 2")
}

/// `Q x = (x̄, …, x̄)` with `x̄ = Σ λ_i x_i`.
pub fn apply_q(p: &ProductPoint, w: &Weights) -> Result<ProductPoint> {
    if w.len() != p.m() {
        return Err(Error::BlockCountMismatch {
            expected: p.m(),
            found: w.len(),
        });
    }
    Ok(average_blocks(p, w))
}

/// The expansion witness `x = (λ_i e)` for non-uniform weights.
#[derive(Clone, Debug, PartialEq)]
pub struct QWitness {
    pub x: ProductPoint,
    pub qx: ProductPoint,
    /// `‖x‖²_X`, predicted to be `Σλ_i²`.
    pub norm_sq_x: f64,
    /// `‖Qx‖²_X`, predicted to be `m (Σλ_i²)²`.
    pub norm_sq_qx: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct QVerdict {
    /// `m Σλ_i²`; at least one by Cauchy–Schwarz, with equality exactly for
    /// uniform weights.
    pub ratio: f64,
    pub nonexpansive: bool,
    pub witness: Option<QWitness>,
}

/// Decides whether `Q` is nonexpansive in the unweighted space `X^m`.
///
/// `Q` is nonexpansive there only for uniform weights. Otherwise the
/// tuple `x = (λ_i e)` for a unit vector `e` has
/// `‖Qx‖² = m(Σλ²)² > Σλ² = ‖x‖²`, and the returned witness carries both
/// norms as evaluated.
pub fn check_q_nonexpansive_in_x(w: &Weights, d: usize) -> Result<QVerdict> {
    if d == 0 {
        return Err(Error::EmptyPoint);
    }
    let m = w.len();
    let ratio = m as f64 * w.sum_of_squares();
    if ratio <= 1.0 + UNIFORM_RATIO_TOL {
        return Ok(QVerdict {
            ratio,
            nonexpansive: true,
            witness: None,
        });
    }
    let e = Point::unit(d, 0);
    let x = ProductPoint::new(w.as_slice().iter().map(|l| e.scale(*l)).collect())?;
    let qx = apply_q(&x, w)?;
    let norm_sq_x = x.norm_x().powi(2);
    let norm_sq_qx = qx.norm_x().powi(2);
    let expands = norm_sq_qx > norm_sq_x;
    Ok(QVerdict {
        ratio,
        nonexpansive: !expands,
        witness: expands.then_some(QWitness {
            x,
            qx,
            norm_sq_x,
            norm_sq_qx,
        }),
    })
}

fn random_product_point(sampler: &mut Sampler, m: usize, d: usize) -> ProductPoint {
    ProductPoint::from_blocks_unchecked((0..m).map(|_| sampler.point(d)).collect())
}

/// Samples `n` pairs and records `‖Qx − Qy‖_X − ‖x − y‖_X > tol`.
pub fn check_q_nonexpansive_in_x_sampled(
    w: &Weights,
    d: usize,
    sampler: &mut Sampler,
    n: usize,
    tol: f64,
) -> CheckReport<ProductPoint> {
    let m = w.len();
    let mut violations = Vec::new();
    for _ in 0..n {
        let x = random_product_point(sampler, m, d);
        let y = random_product_point(sampler, m, d);
        let gap = (&average_blocks(&x, w) - &average_blocks(&y, w)).norm_x() - (&x - &y).norm_x();
        if gap > tol {
            violations.push(Violation { x, y, gap });
        }
    }
    CheckReport {
        samples: n,
        violations,
    }
}

/// Firm nonexpansiveness of `Q` measured with the weighted inner product:
/// records `‖Qx − Qy‖²_Y − ⟨x − y, Qx − Qy⟩_Y > tol · max(1, ‖x − y‖²_Y)`.
pub fn check_q_firmly_nonexpansive_in_y(
    w: &Weights,
    d: usize,
    sampler: &mut Sampler,
    n: usize,
    tol: f64,
) -> CheckReport<ProductPoint> {
    let m = w.len();
    let mut violations = Vec::new();
    for _ in 0..n {
        let x = random_product_point(sampler, m, d);
        let y = random_product_point(sampler, m, d);
        let dx = &x - &y;
        let dq = &average_blocks(&x, w) - &average_blocks(&y, w);
        let gap = dq.norm_y(w).powi(2) - inner_y(&dx, &dq, w).expect("conformant by construction");
        if gap > tol * dx.norm_y(w).powi(2).max(1.0) {
            violations.push(Violation { x, y, gap });
        }
    }
    CheckReport {
        samples: n,
        violations,
    }
}

/// The Cartesian product `T = T_1 × ⋯ × T_m` acting block-wise on `X^m`.
#[derive(Clone, Debug, PartialEq)]
pub struct ProductOperator {
    ops: Vec<OperatorSpec>,
}

impl ProductOperator {
    pub fn new(ops: Vec<OperatorSpec>) -> Result<Self> {
        if ops.len() < 2 {
            return Err(Error::TooFewBlocks(ops.len()));
        }
        // reuse the combinator's dimension check
        OperatorSpec::compose(ops.clone())?;
        Ok(ProductOperator { ops })
    }

    pub fn m(&self) -> usize {
        self.ops.len()
    }

    pub fn ops(&self) -> &[OperatorSpec] {
        &self.ops
    }

    pub fn apply(&self, p: &ProductPoint) -> Result<ProductPoint> {
        if p.m() != self.m() {
            return Err(Error::BlockCountMismatch {
                expected: self.m(),
                found: p.m(),
            });
        }
        let blocks = self
            .ops
            .iter()
            .zip(p.blocks())
            .map(|(op, b)| op.apply(b))
            .collect::<Result<Vec<_>>>()?;
        ProductPoint::new(blocks)
    }

    /// `(Q ∘ T) p`.
    pub fn apply_averaged(&self, p: &ProductPoint, w: &Weights) -> Result<ProductPoint> {
        apply_q(&self.apply(p)?, w)
    }
}
