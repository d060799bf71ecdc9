//! Reference operators used by the verification suite, and random
//! generators for firmly nonexpansive maps.

use super::{OperatorSpec, Sampler, SetSpec};
use crate::linalg::{Point, Weights};

#[derive(Clone, Debug)]
pub struct ZooEntry {
    pub name: &'static str,
    pub op: OperatorSpec,
    /// Dimension the entry is sampled in.
    pub dim: usize,
}

fn pt(v: &[f64]) -> Point {
    Point::new(v.to_vec()).expect("zoo constants are finite")
}

fn entry(name: &'static str, op: OperatorSpec, dim: usize) -> ZooEntry {
    ZooEntry { name, op, dim }
}

/// Every operator kind with fixed parameters, including the negation
/// control (which is not claimed firmly nonexpansive).
pub fn reference_zoo() -> Vec<ZooEntry> {
    let p = |set| OperatorSpec::projector(set).expect("zoo sets are valid");
    let ball = p(SetSpec::Ball { center: pt(&[1.0, -2.0]), radius: 3.0 });
    let epi = p(SetSpec::EpiExp);
    let axis = p(SetSpec::CoordinateAxis);
    let soft = OperatorSpec::prox_abs(0.5).unwrap();
    let quad = OperatorSpec::prox_quadratic(vec![vec![2.0, 1.0], vec![1.0, 1.0]]).unwrap();
    vec![
        entry("halfspace", p(SetSpec::Halfspace { normal: pt(&[1.0, 2.0]), offset: 1.0 }), 2),
        entry("hyperplane", p(SetSpec::Hyperplane { normal: pt(&[1.0, -1.0]), offset: 0.5 }), 2),
        entry("ball", ball.clone(), 2),
        entry("box", p(SetSpec::Box { lower: vec![-1.0, 0.0], upper: vec![2.0, 5.0] }), 2),
        entry(
            "half-plane-box",
            p(SetSpec::Box {
                lower: vec![0.0, f64::NEG_INFINITY],
                upper: vec![f64::INFINITY, f64::INFINITY],
            }),
            2,
        ),
        entry(
            "affine-line",
            p(SetSpec::AffineSubspace { basis: vec![pt(&[0.6, 0.8])], anchor: pt(&[1.0, 1.0]) }),
            2,
        ),
        entry("affine-point", p(SetSpec::AffineSubspace { basis: vec![], anchor: pt(&[2.0, -1.0]) }), 2),
        entry("axis", axis.clone(), 2),
        entry("epi-exp", epi.clone(), 2),
        entry("identity", OperatorSpec::identity(2), 2),
        entry("prox-abs", soft.clone(), 2),
        entry("prox-quadratic", quad.clone(), 2),
        entry(
            "prox-quadratic-singular",
            OperatorSpec::prox_quadratic(vec![vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap(),
            2,
        ),
        entry("translation", OperatorSpec::translation(pt(&[1.5, -0.25])), 2),
        entry(
            "average-ball-epi",
            OperatorSpec::convex_combine(Weights::new(vec![0.3, 0.7]).unwrap(), vec![ball, epi.clone()])
                .unwrap(),
            2,
        ),
        entry(
            "average-three",
            OperatorSpec::convex_combine(
                Weights::new(vec![0.2, 0.5, 0.3]).unwrap(),
                vec![axis, quad, soft],
            )
            .unwrap(),
            2,
        ),
        entry("ball-3d", p(SetSpec::Ball { center: pt(&[0.0, 1.0, -1.0]), radius: 2.0 }), 3),
        entry(
            "box-3d",
            p(SetSpec::Box { lower: vec![-1.0, -2.0, -3.0], upper: vec![1.0, 2.0, 3.0] }),
            3,
        ),
        entry("prox-abs-3d", OperatorSpec::prox_abs(2.0).unwrap(), 3),
        entry("negation-control", OperatorSpec::negation(), 2),
    ]
}

/// An orthonormal family of `k` vectors in `R^d` (Gram–Schmidt on random
/// draws).
pub fn random_orthonormal(sampler: &mut Sampler, d: usize, k: usize) -> Vec<Point> {
    assert!(k <= d);
    let mut basis: Vec<Point> = Vec::with_capacity(k);
    while basis.len() < k {
        let mut v = sampler.point(d);
        // two passes keep the family orthonormal to round-off
        for _ in 0..2 {
            for u in &basis {
                v = v.axpy(-v.dot(u), u);
            }
        }
        let n = v.norm();
        if n > 1e-3 {
            basis.push(v.scale(1.0 / n));
        }
    }
    basis
}

/// A random projector onto a halfspace, hyperplane, ball, box or affine
/// subspace of `R^d`.
pub fn random_projector(sampler: &mut Sampler, d: usize) -> OperatorSpec {
    let set = match sampler.index(5) {
        0 | 1 => {
            let normal = loop {
                let n = sampler.point(d);
                if n.norm() > 1e-3 {
                    break n;
                }
            };
            let offset = sampler.uniform(-5.0, 5.0);
            if sampler.index(2) == 0 {
                SetSpec::Halfspace { normal, offset }
            } else {
                SetSpec::Hyperplane { normal, offset }
            }
        }
        2 => SetSpec::Ball {
            center: sampler.point(d).scale(0.5),
            radius: sampler.uniform(0.5, 4.0),
        },
        3 => {
            let c = sampler.point(d).scale(0.5);
            let w: Vec<f64> = (0..d).map(|_| sampler.uniform(0.1, 3.0)).collect();
            SetSpec::Box {
                lower: c.coords().iter().zip(&w).map(|(c, w)| c - w).collect(),
                upper: c.coords().iter().zip(&w).map(|(c, w)| c + w).collect(),
            }
        }
        _ => {
            let k = sampler.index(d);
            SetSpec::AffineSubspace {
                basis: random_orthonormal(sampler, d, k),
                anchor: sampler.point(d).scale(0.5),
            }
        }
    };
    OperatorSpec::projector(set).expect("random sets are valid by construction")
}

/// A random resolvent: soft thresholding or `(Id + BBᵀ)^{-1}`.
pub fn random_prox(sampler: &mut Sampler, d: usize) -> OperatorSpec {
    if sampler.index(2) == 0 {
        OperatorSpec::prox_abs(sampler.uniform(0.2, 2.0)).expect("positive scale")
    } else {
        let k = 1 + sampler.index(d);
        let b: Vec<Vec<f64>> = (0..d)
            .map(|_| (0..k).map(|_| sampler.uniform(-1.0, 1.0)).collect())
            .collect();
        let a = (0..d)
            .map(|i| (0..d).map(|j| (0..k).map(|l| b[i][l] * b[j][l]).sum()).collect())
            .collect();
        OperatorSpec::prox_quadratic(a).expect("Gram matrices are symmetric PSD")
    }
}

/// A random projector (two times in three) or resolvent.
pub fn random_firmly_nonexpansive(sampler: &mut Sampler, d: usize) -> OperatorSpec {
    if sampler.index(3) < 2 {
        random_projector(sampler, d)
    } else {
        random_prox(sampler, d)
    }
}

/// Random strictly positive weights summing to one.
pub fn random_weights(sampler: &mut Sampler, m: usize) -> Weights {
    let raw: Vec<f64> = (0..m).map(|_| sampler.uniform(0.05, 1.0)).collect();
    let total: f64 = raw.iter().sum();
    let mut lambdas: Vec<f64> = raw.iter().map(|v| v / total).collect();
    // absorb the rounding error of the normalization into the last weight
    let head: f64 = lambdas[..m - 1].iter().sum();
    lambdas[m - 1] = 1.0 - head;
    Weights::new(lambdas).expect("normalized positive weights")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zoo_entries_are_dimensionally_consistent() {
        for e in reference_zoo() {
            if let Some(d) = e.op.dim() {
                assert_eq!(d, e.dim, "{}", e.name);
            }
        }
    }

    #[test]
    fn random_generators_produce_valid_specs() {
        let mut s = Sampler::seeded(11);
        for d in 1..=4 {
            for _ in 0..50 {
                let op = random_firmly_nonexpansive(&mut s, d);
                assert!(op.claimed_firmly_nonexpansive());
                assert!(op.dim().is_none_or(|e| e == d));
            }
            let w = random_weights(&mut s, d + 1);
            assert_eq!(w.len(), d + 1);
        }
    }
}
