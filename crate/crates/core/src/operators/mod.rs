//! The operator zoo: projectors, resolvents, translations, their
//! compositions and convex combinations, and a negative control.
//!
//! An [`OperatorSpec`] is validated when built (or parsed), so evaluation
//! only has to check the dimension of its argument.
//!
//! The two resolvent families besides projectors are a free choice:
//! `ProxAbs` is the soft-threshold map `J_{s·∂|·|}` applied coordinate-wise,
//! and `ProxQuadratic` is `(Id + A)^{-1}` for a symmetric positive
//! semidefinite matrix `A`.

mod check;
mod serial;
mod sets;
pub mod zoo;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{Point, Weights, ALGEBRAIC_TOL};

pub use check::{
    check_firmly_nonexpansive, check_nonexpansive, check_projector_idempotent,
    minty_graph_sample, CheckReport, MintyGraphSample, Sampler, Violation, DEFAULT_SAMPLE_BOX,
};
pub use sets::{
    epi_exp_stationarity, project_epi_exp, SetSpec, EPI_EXP_MAX_ITER, EPI_EXP_RESIDUAL_TOL,
};

use serial::RawOperatorSpec;

/// A validated operator description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawOperatorSpec", into = "RawOperatorSpec")]
pub struct OperatorSpec {
    kind: OperatorKind,
    dim: Option<usize>,
    claim_override: Option<bool>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum OperatorKind {
    Projector(SetSpec),
    ProxAbs { scale: f64 },
    ProxQuadratic(ProxQuadratic),
    Translation(Point),
    /// Applied first-to-last: `[T_1, …, T_m]` evaluates `T_m ∘ ⋯ ∘ T_1`.
    Composition(Vec<OperatorSpec>),
    ConvexCombination(Weights, Vec<OperatorSpec>),
    /// `x ↦ −x`: nonexpansive, not firmly nonexpansive.
    NegationControl,
}

/// Resolvent `(Id + A)^{-1}` of a symmetric positive semidefinite `A`,
/// stored with the Cholesky factor of `Id + A`.
#[derive(Clone, Debug, PartialEq)]
pub struct ProxQuadratic {
    matrix: DMatrix<f64>,
    factor: DMatrix<f64>,
}

impl ProxQuadratic {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let d = rows.len();
        if d == 0 {
            return Err(Error::InvalidOperator("empty matrix".into()));
        }
        if let Some(r) = rows.iter().find(|r| r.len() != d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: r.len(),
            });
        }
        if rows.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidOperator("matrix has non-finite entries".into()));
        }
        let matrix = DMatrix::from_fn(d, d, |i, j| rows[i][j]);
        let scale = matrix.amax().max(1.0);
        if (&matrix - matrix.transpose()).amax() > ALGEBRAIC_TOL * scale {
            return Err(Error::InvalidOperator("matrix is not symmetric".into()));
        }
        let min_eig = matrix.clone().symmetric_eigenvalues().min();
        if min_eig < -ALGEBRAIC_TOL * scale {
            return Err(Error::InvalidOperator(format!(
                "matrix is not positive semidefinite (eigenvalue {min_eig:e})"
            )));
        }
        let shifted = DMatrix::identity(d, d) + &matrix;
        let factor = shifted
            .cholesky()
            .ok_or_else(|| Error::InvalidOperator("Id + A is not positive definite".into()))?
            .unpack();
        Ok(ProxQuadratic { matrix, factor })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.matrix.row_iter().map(|r| r.iter().copied().collect()).collect()
    }

    fn solve(&self, x: &Point) -> Point {
        let rhs = DVector::from_column_slice(x.coords());
        let y = self
            .factor
            .solve_lower_triangular(&rhs)
            .expect("Cholesky factor has a positive diagonal");
        let u = self
            .factor
            .tr_solve_lower_triangular(&y)
            .expect("Cholesky factor has a positive diagonal");
        Point::from_raw(u.iter().copied().collect())
    }
}

impl OperatorSpec {
    fn from_kind(kind: OperatorKind) -> Result<Self> {
        let dim = match &kind {
            OperatorKind::Projector(set) => Some(set.validate()?),
            OperatorKind::ProxAbs { scale } => {
                if !(scale.is_finite() && *scale > 0.0) {
                    return Err(Error::InvalidOperator(format!(
                        "prox scale {scale} must be positive"
                    )));
                }
                None
            }
            OperatorKind::ProxQuadratic(q) => Some(q.dim()),
            OperatorKind::Translation(v) => Some(v.dim()),
            OperatorKind::Composition(ops) => common_dim(ops)?,
            OperatorKind::ConvexCombination(w, ops) => {
                if w.len() != ops.len() {
                    return Err(Error::BlockCountMismatch {
                        expected: ops.len(),
                        found: w.len(),
                    });
                }
                common_dim(ops)?
            }
            OperatorKind::NegationControl => None,
        };
        Ok(OperatorSpec {
            kind,
            dim,
            claim_override: None,
        })
    }

    pub fn projector(set: SetSpec) -> Result<Self> {
        Self::from_kind(OperatorKind::Projector(set))
    }

    pub fn prox_abs(scale: f64) -> Result<Self> {
        Self::from_kind(OperatorKind::ProxAbs { scale })
    }

    pub fn prox_quadratic(rows: Vec<Vec<f64>>) -> Result<Self> {
        Self::from_kind(OperatorKind::ProxQuadratic(ProxQuadratic::new(rows)?))
    }

    pub fn translation(v: Point) -> Self {
        let dim = Some(v.dim());
        OperatorSpec {
            kind: OperatorKind::Translation(v),
            dim,
            claim_override: None,
        }
    }

    pub fn negation() -> Self {
        OperatorSpec {
            kind: OperatorKind::NegationControl,
            dim: None,
            claim_override: None,
        }
    }

    /// The identity on `R^d`, as the projector onto the unbounded box.
    pub fn identity(d: usize) -> Self {
        Self::projector(SetSpec::Box {
            lower: vec![f64::NEG_INFINITY; d],
            upper: vec![f64::INFINITY; d],
        })
        .expect("unbounded box is valid")
    }

    /// `T_m ∘ ⋯ ∘ T_1` for `ops = [T_1, …, T_m]`.
    pub fn compose(ops: Vec<OperatorSpec>) -> Result<Self> {
        Self::from_kind(OperatorKind::Composition(ops))
    }

    /// `Σ λ_i T_i`.
    pub fn convex_combine(weights: Weights, ops: Vec<OperatorSpec>) -> Result<Self> {
        Self::from_kind(OperatorKind::ConvexCombination(weights, ops))
    }

    /// Overrides the firm-nonexpansiveness claim, e.g. to inject a
    /// deliberately false claim into a verification run.
    pub fn with_claim(mut self, firmly_nonexpansive: bool) -> Self {
        self.claim_override = Some(firmly_nonexpansive);
        self
    }

    pub fn kind(&self) -> &OperatorKind {
        &self.kind
    }

    /// Intrinsic dimension, if the operator has one. Coordinate-wise maps
    /// (`ProxAbs`, `NegationControl`) act on any `R^d`.
    pub fn dim(&self) -> Option<usize> {
        self.dim
    }

    pub(crate) fn claim_override(&self) -> Option<bool> {
        self.claim_override
    }

    /// Whether the operator is claimed to be firmly nonexpansive.
    ///
    /// Unless overridden: projectors, resolvents and translations are;
    /// convex combinations are when all members are; compositions of more
    /// than one map are not (they need not be); the negation control is not.
    pub fn claimed_firmly_nonexpansive(&self) -> bool {
        if let Some(claim) = self.claim_override {
            return claim;
        }
        match &self.kind {
            OperatorKind::Projector(_)
            | OperatorKind::ProxAbs { .. }
            | OperatorKind::ProxQuadratic(_)
            | OperatorKind::Translation(_) => true,
            OperatorKind::Composition(ops) => {
                ops.len() == 1 && ops[0].claimed_firmly_nonexpansive()
            }
            OperatorKind::ConvexCombination(_, ops) => {
                ops.iter().all(OperatorSpec::claimed_firmly_nonexpansive)
            }
            OperatorKind::NegationControl => false,
        }
    }

    /// Short human-readable label.
    pub fn label(&self) -> String {
        match &self.kind {
            OperatorKind::Projector(set) => {
                let name = match set {
                    SetSpec::Halfspace { .. } => "halfspace",
                    SetSpec::Hyperplane { .. } => "hyperplane",
                    SetSpec::Ball { .. } => "ball",
                    SetSpec::Box { .. } => "box",
                    SetSpec::AffineSubspace { .. } => "affine",
                    SetSpec::CoordinateAxis => "axis",
                    SetSpec::EpiExp => "epi-exp",
                };
                format!("P[{name}]")
            }
            OperatorKind::ProxAbs { scale } => format!("prox-abs[{scale}]"),
            OperatorKind::ProxQuadratic(q) => format!("prox-quad[{}]", q.dim()),
            OperatorKind::Translation(v) => format!("shift{v}"),
            OperatorKind::Composition(ops) => {
                let inner: Vec<_> = ops.iter().rev().map(OperatorSpec::label).collect();
                inner.join(" o ")
            }
            OperatorKind::ConvexCombination(w, ops) => {
                let inner: Vec<_> = w
                    .as_slice()
                    .iter()
                    .zip(ops)
                    .map(|(l, op)| format!("{l}*{}", op.label()))
                    .collect();
                format!("({})", inner.join(" + "))
            }
            OperatorKind::NegationControl => "negation".into(),
        }
    }

    pub fn ensure_accepts(&self, x: &Point) -> Result<()> {
        match self.dim {
            Some(d) => x.ensure_dim(d),
            None => Ok(()),
        }
    }

    /// Evaluates `Tx`.
    pub fn apply(&self, x: &Point) -> Result<Point> {
        self.ensure_accepts(x)?;
        self.apply_unchecked(x)
    }

    fn apply_unchecked(&self, x: &Point) -> Result<Point> {
        match &self.kind {
            OperatorKind::Projector(set) => set.project_unchecked(x),
            OperatorKind::ProxAbs { scale } => Ok(Point::from_raw(
                x.coords()
                    .iter()
                    .map(|v| v.signum() * (v.abs() - scale).max(0.0))
                    .collect(),
            )),
            OperatorKind::ProxQuadratic(q) => Ok(q.solve(x)),
            OperatorKind::Translation(v) => Ok(x + v),
            OperatorKind::Composition(ops) => {
                let mut y = x.clone();
                for op in ops {
                    y = op.apply_unchecked(&y)?;
                }
                Ok(y)
            }
            OperatorKind::ConvexCombination(w, ops) => {
                let mut acc = Point::zeros(x.dim());
                for (l, op) in w.as_slice().iter().zip(ops) {
                    acc = acc.axpy(*l, &op.apply_unchecked(x)?);
                }
                Ok(acc)
            }
            OperatorKind::NegationControl => Ok(-x),
        }
    }
}

fn common_dim(ops: &[OperatorSpec]) -> Result<Option<usize>> {
    if ops.is_empty() {
        return Err(Error::EmptyOperatorList);
    }
    let mut dim = None;
    for op in ops {
        match (dim, op.dim) {
            (Some(d), Some(e)) if d != e => {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: e,
                })
            }
            (None, Some(e)) => dim = Some(e),
            _ => {}
        }
    }
    Ok(dim)
}

/// `T_m ∘ ⋯ ∘ T_1` for `ops = [T_1, …, T_m]`.
pub fn compose(ops: Vec<OperatorSpec>) -> Result<OperatorSpec> {
    OperatorSpec::compose(ops)
}

/// `Σ λ_i T_i`.
pub fn convex_combine(weights: Weights, ops: Vec<OperatorSpec>) -> Result<OperatorSpec> {
    OperatorSpec::convex_combine(weights, ops)
}

/// Evaluates `Tx`.
pub fn apply(op: &OperatorSpec, x: &Point) -> Result<Point> {
    op.apply(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(v: &[f64]) -> Point {
        Point::new(v.to_vec()).unwrap()
    }

    #[test]
    fn apply_examples() {
        let ball = OperatorSpec::projector(SetSpec::Ball { center: pt(&[0.0, 0.0]), radius: 1.0 })
            .unwrap();
        assert_eq!(ball.apply(&pt(&[2.0, 0.0])).unwrap(), pt(&[1.0, 0.0]));

        let shift = OperatorSpec::translation(pt(&[1.0]));
        assert_eq!(shift.apply(&pt(&[3.0])).unwrap(), pt(&[4.0]));

        let v = pt(&[1.5, -0.25]);
        let cancel = compose(vec![
            OperatorSpec::translation(v.clone()),
            OperatorSpec::translation(-&v),
        ])
        .unwrap();
        for x in [pt(&[3.0, -2.0]), pt(&[0.5, 8.0])] {
            assert_eq!(cancel.apply(&x).unwrap(), x);
        }
    }

    #[test]
    fn composition_applies_first_to_last() {
        let axis = OperatorSpec::projector(SetSpec::CoordinateAxis).unwrap();
        let shift = OperatorSpec::translation(pt(&[0.0, 1.0]));
        // shift then project lands on the axis; project then shift does not.
        let s = compose(vec![shift.clone(), axis.clone()]).unwrap();
        assert_eq!(s.apply(&pt(&[2.0, 5.0])).unwrap(), pt(&[2.0, 0.0]));
        let s = compose(vec![axis, shift]).unwrap();
        assert_eq!(s.apply(&pt(&[2.0, 5.0])).unwrap(), pt(&[2.0, 1.0]));
    }

    #[test]
    fn combinator_examples() {
        let ball = OperatorSpec::projector(SetSpec::Ball { center: pt(&[1.0, 1.0]), radius: 0.5 })
            .unwrap();
        let single = compose(vec![ball.clone()]).unwrap();
        assert!(single.claimed_firmly_nonexpansive());
        for x in [pt(&[4.0, -1.0]), pt(&[1.1, 0.9])] {
            assert_eq!(single.apply(&x).unwrap(), ball.apply(&x).unwrap());
        }

        let half = Weights::new(vec![0.5, 0.5]).unwrap();
        let id = convex_combine(half.clone(), vec![OperatorSpec::identity(2), OperatorSpec::identity(2)])
            .unwrap();
        let v = pt(&[0.75, -2.0]);
        let avg = convex_combine(
            half,
            vec![OperatorSpec::translation(v.clone()), OperatorSpec::translation(-&v)],
        )
        .unwrap();
        for x in [pt(&[4.0, -1.0]), pt(&[-3.25, 0.5])] {
            assert_eq!(id.apply(&x).unwrap(), x);
            assert_eq!(avg.apply(&x).unwrap(), x);
        }
    }

    #[test]
    fn combinator_errors() {
        assert!(matches!(compose(vec![]), Err(Error::EmptyOperatorList)));
        let a = OperatorSpec::translation(pt(&[1.0]));
        let b = OperatorSpec::translation(pt(&[1.0, 2.0]));
        assert!(matches!(
            compose(vec![a.clone(), b.clone()]),
            Err(Error::DimensionMismatch { .. })
        ));
        let w = Weights::uniform(3).unwrap();
        assert!(matches!(
            convex_combine(w, vec![a.clone(), a.clone()]),
            Err(Error::BlockCountMismatch { .. })
        ));
        assert!(matches!(
            a.apply(&pt(&[1.0, 2.0])),
            Err(Error::DimensionMismatch { .. })
        ));
        // dimension-free members adopt the dimension of their siblings
        let mixed = compose(vec![OperatorSpec::negation(), b]).unwrap();
        assert_eq!(mixed.dim(), Some(2));
    }

    #[test]
    fn prox_maps() {
        let soft = OperatorSpec::prox_abs(1.0).unwrap();
        assert_eq!(soft.apply(&pt(&[3.0, -0.5, -2.0])).unwrap(), pt(&[2.0, 0.0, -1.0]));
        assert!(OperatorSpec::prox_abs(0.0).is_err());

        // (Id + diag(1, 3))^{-1}
        let q = OperatorSpec::prox_quadratic(vec![vec![1.0, 0.0], vec![0.0, 3.0]]).unwrap();
        let y = q.apply(&pt(&[2.0, 8.0])).unwrap();
        assert!((y.coords()[0] - 1.0).abs() < 1e-15);
        assert!((y.coords()[1] - 2.0).abs() < 1e-15);

        assert!(OperatorSpec::prox_quadratic(vec![vec![1.0, 2.0], vec![0.0, 1.0]]).is_err());
        assert!(OperatorSpec::prox_quadratic(vec![vec![-1.0, 0.0], vec![0.0, 1.0]]).is_err());
        assert!(OperatorSpec::prox_quadratic(vec![vec![1.0, 0.0]]).is_err());
    }

    #[test]
    fn claims() {
        let p = OperatorSpec::projector(SetSpec::EpiExp).unwrap();
        assert!(p.claimed_firmly_nonexpansive());
        assert!(!OperatorSpec::negation().claimed_firmly_nonexpansive());
        assert!(OperatorSpec::negation().with_claim(true).claimed_firmly_nonexpansive());
        let axis = OperatorSpec::projector(SetSpec::CoordinateAxis).unwrap();
        assert!(!compose(vec![p.clone(), axis.clone()]).unwrap().claimed_firmly_nonexpansive());
        let w = Weights::uniform(2).unwrap();
        assert!(convex_combine(w.clone(), vec![p.clone(), axis]).unwrap().claimed_firmly_nonexpansive());
        assert!(!convex_combine(w, vec![p, OperatorSpec::negation()])
            .unwrap()
            .claimed_firmly_nonexpansive());
    }
}
