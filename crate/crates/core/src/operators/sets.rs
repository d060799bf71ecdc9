//! Closed convex sets with closed-form (or one-dimensional root-finding)
//! projectors.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{Point, ALGEBRAIC_TOL};

/// Stationarity residual at which the epi exp projection stops.
pub const EPI_EXP_RESIDUAL_TOL: f64 = 1e-12;
/// Iteration cap for the safeguarded Newton/bisection solver.
pub const EPI_EXP_MAX_ITER: usize = 200;

/// A nonempty closed convex subset of `R^d`.
///
/// `Halfspace` is `{x : ⟨normal, x⟩ <= offset}` and `Hyperplane` is
/// `{x : ⟨normal, x⟩ = offset}`. `Box` bounds may be infinite, so
/// `Box { lower: [0], upper: [inf] }` is the nonnegative half-line.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SetSpec {
    Halfspace { normal: Point, offset: f64 },
    Hyperplane { normal: Point, offset: f64 },
    Ball { center: Point, radius: f64 },
    Box { lower: Vec<f64>, upper: Vec<f64> },
    AffineSubspace { basis: Vec<Point>, anchor: Point },
    /// `R × {0}` in `R^2`.
    CoordinateAxis,
    /// `{(x, y) : y >= e^x}` in `R^2`.
    EpiExp,
}

impl SetSpec {
    /// Checks the set's invariants and returns its ambient dimension.
    pub fn validate(&self) -> Result<usize> {
        match self {
            SetSpec::Halfspace { normal, offset } | SetSpec::Hyperplane { normal, offset } => {
                if normal.norm_sq() == 0.0 {
                    return Err(Error::InvalidSet("normal vector is zero".into()));
                }
                if !offset.is_finite() {
                    return Err(Error::InvalidSet(format!("offset {offset} is not finite")));
                }
                Ok(normal.dim())
            }
            SetSpec::Ball { center, radius } => {
                if !(radius.is_finite() && *radius > 0.0) {
                    return Err(Error::InvalidSet(format!("radius {radius} must be positive")));
                }
                Ok(center.dim())
            }
            SetSpec::Box { lower, upper } => {
                if lower.is_empty() {
                    return Err(Error::InvalidSet("box has dimension 0".into()));
                }
                if lower.len() != upper.len() {
                    return Err(Error::DimensionMismatch {
                        expected: lower.len(),
                        found: upper.len(),
                    });
                }
                for (i, (lo, hi)) in lower.iter().zip(upper).enumerate() {
                    if lo.is_nan() || hi.is_nan() || lo > hi {
                        return Err(Error::InvalidSet(format!(
                            "box bounds [{lo}, {hi}] at coordinate {i} are not ordered"
                        )));
                    }
                    if *lo == f64::INFINITY || *hi == f64::NEG_INFINITY {
                        return Err(Error::InvalidSet(format!(
                            "box is empty at coordinate {i}"
                        )));
                    }
                }
                Ok(lower.len())
            }
            SetSpec::AffineSubspace { basis, anchor } => {
                let d = anchor.dim();
                if basis.len() > d {
                    return Err(Error::InvalidSet(format!(
                        "{} directions cannot be orthonormal in dimension {d}",
                        basis.len()
                    )));
                }
                for (i, u) in basis.iter().enumerate() {
                    u.ensure_dim(d)?;
                    for (j, v) in basis.iter().enumerate().skip(i) {
                        let target = if i == j { 1.0 } else { 0.0 };
                        if (u.dot(v) - target).abs() > ALGEBRAIC_TOL {
                            return Err(Error::InvalidSet(format!(
                                "basis is not orthonormal: <u{i}, u{j}> = {}",
                                u.dot(v)
                            )));
                        }
                    }
                }
                Ok(d)
            }
            SetSpec::CoordinateAxis | SetSpec::EpiExp => Ok(2),
        }
    }

    /// Membership test with absolute slack `tol`.
    pub fn contains(&self, x: &Point, tol: f64) -> bool {
        let c = x.coords();
        match self {
            SetSpec::Halfspace { normal, offset } => normal.dot(x) <= offset + tol,
            SetSpec::Hyperplane { normal, offset } => (normal.dot(x) - offset).abs() <= tol,
            SetSpec::Ball { center, radius } => x.distance(center) <= radius + tol,
            SetSpec::Box { lower, upper } => c
                .iter()
                .zip(lower.iter().zip(upper))
                .all(|(v, (lo, hi))| *v >= lo - tol && *v <= hi + tol),
            SetSpec::AffineSubspace { .. } => {
                let p = self.project_unchecked(x).expect("affine projection is closed form");
                p.distance(x) <= tol
            }
            SetSpec::CoordinateAxis => c[1].abs() <= tol,
            SetSpec::EpiExp => c[1] >= c[0].exp() - tol,
        }
    }

    /// Nearest point of the set. The caller guarantees `x` has the set's
    /// dimension.
    pub(crate) fn project_unchecked(&self, x: &Point) -> Result<Point> {
        Ok(match self {
            SetSpec::Halfspace { normal, offset } => {
                let excess = normal.dot(x) - offset;
                if excess > 0.0 {
                    x.axpy(-excess / normal.norm_sq(), normal)
                } else {
                    x.clone()
                }
            }
            SetSpec::Hyperplane { normal, offset } => {
                let excess = normal.dot(x) - offset;
                if excess == 0.0 {
                    x.clone()
                } else {
                    x.axpy(-excess / normal.norm_sq(), normal)
                }
            }
            SetSpec::Ball { center, radius } => {
                let offset = x - center;
                let dist = offset.norm();
                if dist <= *radius {
                    x.clone()
                } else {
                    center.axpy(radius / dist, &offset)
                }
            }
            SetSpec::Box { lower, upper } => Point::from_raw(
                x.coords()
                    .iter()
                    .zip(lower.iter().zip(upper))
                    .map(|(v, (lo, hi))| v.clamp(*lo, *hi))
                    .collect(),
            ),
            SetSpec::AffineSubspace { basis, anchor } => {
                let rel = x - anchor;
                basis
                    .iter()
                    .fold(anchor.clone(), |acc, u| acc.axpy(rel.dot(u), u))
            }
            SetSpec::CoordinateAxis => Point::from_raw(vec![x.coords()[0], 0.0]),
            SetSpec::EpiExp => project_epi_exp(x)?,
        })
    }
}

/// Left side of the stationarity equation for projecting `(a, b)` onto the
/// graph of `exp`: `(x − a) + e^x (e^x − b)`.
pub fn epi_exp_stationarity(x: f64, a: f64, b: f64) -> f64 {
    let ex = x.exp();
    (x - a) + ex * (ex - b)
}

fn epi_exp_stationarity_derivative(x: f64, b: f64) -> f64 {
    let ex = x.exp();
    1.0 + ex * (2.0 * ex - b)
}

/// Projector onto `epi exp = {(x, y) : y >= e^x}`.
///
/// Points below the graph are mapped to `(x*, e^{x*})` where `x*` is the
/// unique root of [`epi_exp_stationarity`]. The root lies in `(−∞, a)`:
/// the residual is positive at `a` and a left endpoint is found by doubling
/// the step. Newton steps are taken when they stay inside the bracket,
/// otherwise the bracket is bisected.
pub fn project_epi_exp(p: &Point) -> Result<Point> {
    p.ensure_dim(2)?;
    let (a, b) = (p.coords()[0], p.coords()[1]);
    if b >= a.exp() {
        return Ok(p.clone());
    }

    let mut hi = a;
    let mut step = 1.0;
    let mut lo = a - step;
    while epi_exp_stationarity(lo, a, b) > 0.0 {
        hi = lo;
        step *= 2.0;
        lo = a - step;
        if !lo.is_finite() || step > 1e300 {
            return Err(Error::RootBracket { a, b });
        }
    }

    let mut x = 0.5 * (lo + hi);
    for _ in 0..EPI_EXP_MAX_ITER {
        let g = epi_exp_stationarity(x, a, b);
        if g.abs() <= EPI_EXP_RESIDUAL_TOL {
            // one more Newton step takes the residual to round-off
            let polished = x - g / epi_exp_stationarity_derivative(x, b);
            if polished.is_finite() && epi_exp_stationarity(polished, a, b).abs() < g.abs() {
                x = polished;
            }
            break;
        }
        if g > 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        let dg = epi_exp_stationarity_derivative(x, b);
        let newton = x - g / dg;
        let next = if dg > 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if next == x {
            // Bracket collapsed to adjacent floats.
            break;
        }
        x = next;
    }
    if !x.is_finite() {
        return Err(Error::RootBracket { a, b });
    }
    Ok(Point::from_raw(vec![x, x.exp()]))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(v: &[f64]) -> Point {
        Point::new(v.to_vec()).unwrap()
    }

    #[test]
    fn epi_exp_inside_is_fixed() {
        assert_eq!(project_epi_exp(&pt(&[0.0, 1.0])).unwrap(), pt(&[0.0, 1.0]));
        assert_eq!(project_epi_exp(&pt(&[-3.0, 5.0])).unwrap(), pt(&[-3.0, 5.0]));
    }

    // Frozen from a 40-digit root solve of the stationarity equation; the
    // grid-search oracle in tests/epi_exp_oracle.rs agrees.
    #[test]
    fn epi_exp_frozen_values() {
        let q = project_epi_exp(&pt(&[0.0, 0.0])).unwrap();
        assert!((q.coords()[0] - (-0.4263)).abs() < 1e-3);
        assert!((q.coords()[1] - 0.6529).abs() < 1e-3);
        assert!((q.coords()[0] - (-0.426_302_751_006_862_7)).abs() < 1e-12);
        assert!((q.coords()[1] - 0.652_918_640_419_204_7).abs() < 1e-12);

        let q = project_epi_exp(&pt(&[-5.0, 0.0])).unwrap();
        assert!((q.coords()[0] - (-5.000_045_395_808_017)).abs() < 1e-12);
        assert!((q.coords()[1] - 0.006_737_641_131_479_677).abs() < 1e-12);
    }

    #[test]
    fn epi_exp_residual_is_tiny() {
        for &(a, b) in &[(0.0, 0.0), (10.0, -10.0), (10.0, 10.0), (-10.0, -10.0), (3.0, 19.0)] {
            let q = project_epi_exp(&pt(&[a, b])).unwrap();
            let r = epi_exp_stationarity(q.coords()[0], a, b);
            assert!(r.abs() <= EPI_EXP_RESIDUAL_TOL, "({a}, {b}) residual {r}");
        }
    }

    #[test]
    fn epi_exp_rejects_wrong_dimension() {
        assert!(matches!(
            project_epi_exp(&pt(&[1.0])),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn closed_form_projections() {
        let ball = SetSpec::Ball { center: pt(&[0.0, 0.0]), radius: 1.0 };
        assert_eq!(ball.project_unchecked(&pt(&[2.0, 0.0])).unwrap(), pt(&[1.0, 0.0]));

        let half = SetSpec::Halfspace { normal: pt(&[0.0, 2.0]), offset: 2.0 };
        assert_eq!(half.project_unchecked(&pt(&[3.0, 5.0])).unwrap(), pt(&[3.0, 1.0]));
        assert_eq!(half.project_unchecked(&pt(&[3.0, -5.0])).unwrap(), pt(&[3.0, -5.0]));

        let plane = SetSpec::Hyperplane { normal: pt(&[1.0, 1.0]), offset: 0.0 };
        assert_eq!(plane.project_unchecked(&pt(&[1.0, 1.0])).unwrap(), pt(&[0.0, 0.0]));

        let nonneg = SetSpec::Box { lower: vec![0.0], upper: vec![f64::INFINITY] };
        assert_eq!(nonneg.project_unchecked(&pt(&[-1.0])).unwrap(), pt(&[0.0]));
        assert_eq!(nonneg.project_unchecked(&pt(&[1.0])).unwrap(), pt(&[1.0]));

        let line = SetSpec::AffineSubspace { basis: vec![pt(&[1.0, 0.0])], anchor: pt(&[0.0, 1.0]) };
        assert_eq!(line.project_unchecked(&pt(&[4.0, -3.0])).unwrap(), pt(&[4.0, 1.0]));

        assert_eq!(
            SetSpec::CoordinateAxis.project_unchecked(&pt(&[4.0, -3.0])).unwrap(),
            pt(&[4.0, 0.0])
        );
    }

    #[test]
    fn invalid_sets() {
        assert!(SetSpec::Halfspace { normal: pt(&[0.0]), offset: 1.0 }.validate().is_err());
        assert!(SetSpec::Ball { center: pt(&[0.0]), radius: 0.0 }.validate().is_err());
        assert!(SetSpec::Box { lower: vec![1.0], upper: vec![0.0] }.validate().is_err());
        assert!(SetSpec::Box { lower: vec![0.0, 0.0], upper: vec![1.0] }.validate().is_err());
        assert!(SetSpec::Box { lower: vec![f64::INFINITY], upper: vec![f64::INFINITY] }
            .validate()
            .is_err());
        assert!(SetSpec::AffineSubspace {
            basis: vec![pt(&[1.0, 1.0])],
            anchor: pt(&[0.0, 0.0])
        }
        .validate()
        .is_err());
        assert_eq!(SetSpec::EpiExp.validate().unwrap(), 2);
    }
}
