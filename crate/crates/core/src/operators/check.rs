//! Monte Carlo verification of firm nonexpansiveness and Minty monotonicity.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{OperatorKind, OperatorSpec};
use crate::error::{Error, Result};
use crate::linalg::{Point, ALGEBRAIC_TOL};

/// Coordinates are drawn uniformly from this interval unless overridden.
pub const DEFAULT_SAMPLE_BOX: (f64, f64) = (-10.0, 10.0);

/// Seeded source of random points.
#[derive(Clone, Debug)]
pub struct Sampler {
    rng: ChaCha8Rng,
    low: f64,
    high: f64,
}

impl Sampler {
    pub fn seeded(seed: u64) -> Self {
        Sampler {
            rng: ChaCha8Rng::seed_from_u64(seed),
            low: DEFAULT_SAMPLE_BOX.0,
            high: DEFAULT_SAMPLE_BOX.1,
        }
    }

    pub fn with_range(mut self, low: f64, high: f64) -> Self {
        assert!(low < high, "empty sampling interval");
        self.low = low;
        self.high = high;
        self
    }

    pub fn range(&self) -> (f64, f64) {
        (self.low, self.high)
    }

    pub fn point(&mut self, d: usize) -> Point {
        let (low, high) = (self.low, self.high);
        Point::from_raw((0..d).map(|_| self.rng.random_range(low..high)).collect())
    }

    pub fn uniform(&mut self, low: f64, high: f64) -> f64 {
        self.rng.random_range(low..high)
    }

    pub fn index(&mut self, n: usize) -> usize {
        self.rng.random_range(0..n)
    }

    pub fn rng_mut(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }
}

/// A sampled pair on which an inequality failed, with its excess `gap`.
#[derive(Clone, Debug, PartialEq)]
pub struct Violation<P = Point> {
    pub x: P,
    pub y: P,
    pub gap: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CheckReport<P = Point> {
    pub samples: usize,
    pub violations: Vec<Violation<P>>,
}

impl<P> CheckReport<P> {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn worst(&self) -> Option<&Violation<P>> {
        self.violations
            .iter()
            .max_by(|a, b| a.gap.total_cmp(&b.gap))
    }
}

fn sample_dim(op: &OperatorSpec, d: usize) -> Result<usize> {
    match op.dim() {
        Some(e) if e != d => Err(Error::DimensionMismatch {
            expected: e,
            found: d,
        }),
        _ => Ok(d),
    }
}

/// Draws `n` pairs `(x, y)` and records each one with
/// `‖Tx − Ty‖² − ⟨x − y, Tx − Ty⟩ > tol · max(1, ‖x − y‖²)`.
pub fn check_firmly_nonexpansive(
    op: &OperatorSpec,
    d: usize,
    sampler: &mut Sampler,
    n: usize,
    tol: f64,
) -> Result<CheckReport> {
    let d = sample_dim(op, d)?;
    let mut violations = Vec::new();
    for _ in 0..n {
        let x = sampler.point(d);
        let y = sampler.point(d);
        let dx = &x - &y;
        let dt = &op.apply(&x)? - &op.apply(&y)?;
        let gap = dt.norm_sq() - dx.dot(&dt);
        if gap > tol * dx.norm_sq().max(1.0) {
            violations.push(Violation { x, y, gap });
        }
    }
    Ok(CheckReport {
        samples: n,
        violations,
    })
}

/// Draws `n` pairs and records each one with `‖Sx − Sy‖ − ‖x − y‖ > tol`.
pub fn check_nonexpansive(
    op: &OperatorSpec,
    d: usize,
    sampler: &mut Sampler,
    n: usize,
    tol: f64,
) -> Result<CheckReport> {
    let d = sample_dim(op, d)?;
    let mut violations = Vec::new();
    for _ in 0..n {
        let x = sampler.point(d);
        let y = sampler.point(d);
        let gap = op.apply(&x)?.distance(&op.apply(&y)?) - x.distance(&y);
        if gap > tol {
            violations.push(Violation { x, y, gap });
        }
    }
    Ok(CheckReport {
        samples: n,
        violations,
    })
}

/// Records samples with `‖P(Px) − Px‖ > tol`. Only projectors are accepted.
pub fn check_projector_idempotent(
    op: &OperatorSpec,
    d: usize,
    sampler: &mut Sampler,
    n: usize,
    tol: f64,
) -> Result<CheckReport> {
    if !matches!(op.kind(), OperatorKind::Projector(_)) {
        return Err(Error::InvalidArgument(format!("{} is not a projector", op.label())));
    }
    let d = sample_dim(op, d)?;
    let mut violations = Vec::new();
    for _ in 0..n {
        let x = sampler.point(d);
        let px = op.apply(&x)?;
        let ppx = op.apply(&px)?;
        let gap = ppx.distance(&px);
        if gap > tol {
            violations.push(Violation { x, y: px, gap });
        }
    }
    Ok(CheckReport {
        samples: n,
        violations,
    })
}

/// Points `(Tx, x − Tx)` of the graph of `A = T^{-1} − Id`.
#[derive(Clone, Debug, PartialEq)]
pub struct MintyGraphSample {
    pub points: Vec<Point>,
    pub pairs: Vec<(Point, Point)>,
}

impl MintyGraphSample {
    /// Smallest cross-pair value `⟨u₁ − u₂, w₁ − w₂⟩` with the indices
    /// attaining it. `None` with fewer than two pairs.
    pub fn min_cross_product(&self) -> Option<(usize, usize, f64)> {
        let mut best: Option<(usize, usize, f64)> = None;
        for i in 0..self.pairs.len() {
            for j in (i + 1)..self.pairs.len() {
                let v = cross(&self.pairs[i], &self.pairs[j]);
                if best.is_none_or(|(_, _, b)| v < b) {
                    best = Some((i, j, v));
                }
            }
        }
        best
    }
}

fn cross(a: &(Point, Point), b: &(Point, Point)) -> f64 {
    (&a.0 - &b.0).dot(&(&a.1 - &b.1))
}

/// Builds the Minty sample for a claimed firmly nonexpansive `op` and checks
/// monotonicity of every cross pair: `⟨u₁ − u₂, w₁ − w₂⟩ >= −1e−12` scaled
/// by `max(1, ‖u₁ − u₂‖ ‖w₁ − w₂‖)`.
pub fn minty_graph_sample(op: &OperatorSpec, points: &[Point]) -> Result<MintyGraphSample> {
    if !op.claimed_firmly_nonexpansive() {
        return Err(Error::NotFirmlyNonexpansive);
    }
    let pairs = points
        .iter()
        .map(|x| {
            let u = op.apply(x)?;
            let w = x - &u;
            Ok((u, w))
        })
        .collect::<Result<Vec<_>>>()?;
    for i in 0..pairs.len() {
        for j in (i + 1)..pairs.len() {
            let du = &pairs[i].0 - &pairs[j].0;
            let dw = &pairs[i].1 - &pairs[j].1;
            let value = du.dot(&dw);
            if value < -ALGEBRAIC_TOL * (du.norm() * dw.norm()).max(1.0) {
                return Err(Error::MonotonicityViolation {
                    first: i,
                    second: j,
                    value,
                });
            }
        }
    }
    Ok(MintyGraphSample {
        points: points.to_vec(),
        pairs,
    })
}
