//! Finite-dimensional Hilbert-space primitives.
//!
//! A [`Point`] is an element of `X = R^d`. A [`ProductPoint`] is an `m`-tuple
//! of points, an element of `X^m`, which carries two inner products: the
//! standard one (`inner_x`) and the weighted one (`inner_y`) induced by a set
//! of [`Weights`].

use std::fmt;
use std::ops::{Add, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default tolerance for exact algebraic identities.
pub const ALGEBRAIC_TOL: f64 = 1e-12;
/// Default tolerance for Monte Carlo inequality checks.
pub const MONTE_CARLO_TOL: f64 = 1e-9;

/// A point of `R^d` with finite coordinates.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Point(Vec<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::EmptyPoint);
        }
        if let Some((index, &value)) = coords.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite { index, value });
        }
        Ok(Point(coords))
    }

    /// Wraps coordinates produced by arithmetic on valid points. Finiteness
    /// is not re-checked; see [`Point::is_finite`].
    pub(crate) fn from_raw(coords: Vec<f64>) -> Self {
        debug_assert!(!coords.is_empty());
        Point(coords)
    }

    pub fn zeros(dim: usize) -> Self {
        assert!(dim >= 1, "dimension must be at least 1");
        Point(vec![0.0; dim])
    }

    /// The `index`-th standard basis vector of `R^dim`.
    pub fn unit(dim: usize, index: usize) -> Self {
        let mut p = Self::zeros(dim);
        p.0[index] = 1.0;
        p
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.0
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    pub fn dot(&self, other: &Point) -> f64 {
        debug_assert_eq!(self.dim(), other.dim());
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }

    pub fn norm_sq(&self) -> f64 {
        self.dot(self)
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (self - other).norm()
    }

    pub fn scale(&self, alpha: f64) -> Point {
        Point(self.0.iter().map(|v| alpha * v).collect())
    }

    /// `self + alpha * other`.
    pub fn axpy(&self, alpha: f64, other: &Point) -> Point {
        debug_assert_eq!(self.dim(), other.dim());
        Point(self.0.iter().zip(&other.0).map(|(a, b)| a + alpha * b).collect())
    }

    pub fn ensure_dim(&self, expected: usize) -> Result<()> {
        if self.dim() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                found: self.dim(),
            });
        }
        Ok(())
    }
}

impl TryFrom<Vec<f64>> for Point {
    type Error = Error;

    fn try_from(coords: Vec<f64>) -> Result<Self> {
        Point::new(coords)
    }
}

impl From<Point> for Vec<f64> {
    fn from(p: Point) -> Self {
        p.0
    }
}

impl fmt::Debug for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Point{:?}", self.0)
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{v}")?;
        }
        write!(f, ")")
    }
}

impl Add for &Point {
    type Output = Point;

    fn add(self, rhs: &Point) -> Point {
        debug_assert_eq!(self.dim(), rhs.dim());
        Point(self.0.iter().zip(&rhs.0).map(|(a, b)| a + b).collect())
    }
}

impl Sub for &Point {
    type Output = Point;

    fn sub(self, rhs: &Point) -> Point {
        debug_assert_eq!(self.dim(), rhs.dim());
        Point(self.0.iter().zip(&rhs.0).map(|(a, b)| a - b).collect())
    }
}

impl Neg for &Point {
    type Output = Point;

    fn neg(self) -> Point {
        Point(self.0.iter().map(|v| -v).collect())
    }
}

/// Strictly positive convex coefficients `(λ_1, …, λ_m)`.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Weights(Vec<f64>);

impl Weights {
    pub fn new(lambdas: Vec<f64>) -> Result<Self> {
        if lambdas.len() < 2 {
            return Err(Error::TooFewBlocks(lambdas.len()));
        }
        for (i, &l) in lambdas.iter().enumerate() {
            if !(l > 0.0 && l < 1.0) {
                return Err(Error::InvalidWeights(format!(
                    "lambda[{i}] = {l} is not in the open interval (0, 1)"
                )));
            }
        }
        let total: f64 = lambdas.iter().sum();
        if (total - 1.0).abs() > ALGEBRAIC_TOL {
            return Err(Error::InvalidWeights(format!(
                "weights sum to {total}, not 1"
            )));
        }
        Ok(Weights(lambdas))
    }

    pub fn uniform(m: usize) -> Result<Self> {
        if m < 2 {
            return Err(Error::TooFewBlocks(m));
        }
        Ok(Weights(vec![1.0 / m as f64; m]))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn sum_of_squares(&self) -> f64 {
        self.0.iter().map(|l| l * l).sum()
    }

    /// Whether every weight equals `1/m` within `tol`.
    pub fn is_uniform(&self, tol: f64) -> bool {
        let target = 1.0 / self.len() as f64;
        self.0.iter().all(|l| (l - target).abs() <= tol)
    }
}

impl TryFrom<Vec<f64>> for Weights {
    type Error = Error;

    fn try_from(lambdas: Vec<f64>) -> Result<Self> {
        Weights::new(lambdas)
    }
}

impl From<Weights> for Vec<f64> {
    fn from(w: Weights) -> Self {
        w.0
    }
}

impl fmt::Debug for Weights {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Weights{:?}", self.0)
    }
}

/// An element `(x_1, …, x_m)` of the product space `X^m`, `m >= 2`.
#[derive(Clone, PartialEq, Debug)]
pub struct ProductPoint {
    blocks: Vec<Point>,
}

impl ProductPoint {
    pub fn new(blocks: Vec<Point>) -> Result<Self> {
        if blocks.len() < 2 {
            return Err(Error::TooFewBlocks(blocks.len()));
        }
        let d = blocks[0].dim();
        for b in &blocks[1..] {
            b.ensure_dim(d)?;
        }
        Ok(ProductPoint { blocks })
    }

    pub(crate) fn from_blocks_unchecked(blocks: Vec<Point>) -> Self {
        debug_assert!(blocks.len() >= 2);
        ProductPoint { blocks }
    }

    pub fn zeros(m: usize, d: usize) -> Result<Self> {
        if m < 2 {
            return Err(Error::TooFewBlocks(m));
        }
        Ok(ProductPoint {
            blocks: vec![Point::zeros(d); m],
        })
    }

    /// Rebuilds a product point from block-major coordinates: block `i`,
    /// coordinate `j` sits at index `i * d + j`.
    pub fn from_flat(m: usize, d: usize, flat: &[f64]) -> Result<Self> {
        if m < 2 {
            return Err(Error::TooFewBlocks(m));
        }
        if flat.len() != m * d {
            return Err(Error::DimensionMismatch {
                expected: m * d,
                found: flat.len(),
            });
        }
        let blocks = flat
            .chunks(d)
            .map(|c| Point::new(c.to_vec()))
            .collect::<Result<Vec<_>>>()?;
        Ok(ProductPoint { blocks })
    }

    pub fn flatten(&self) -> Vec<f64> {
        self.blocks.iter().flat_map(|b| b.coords().iter().copied()).collect()
    }

    pub fn m(&self) -> usize {
        self.blocks.len()
    }

    pub fn dim(&self) -> usize {
        self.blocks[0].dim()
    }

    pub fn blocks(&self) -> &[Point] {
        &self.blocks
    }

    pub fn block(&self, i: usize) -> &Point {
        &self.blocks[i]
    }

    pub fn into_blocks(self) -> Vec<Point> {
        self.blocks
    }

    pub fn is_finite(&self) -> bool {
        self.blocks.iter().all(Point::is_finite)
    }

    pub fn ensure_conformant(&self, other: &ProductPoint) -> Result<()> {
        if self.m() != other.m() {
            return Err(Error::BlockCountMismatch {
                expected: self.m(),
                found: other.m(),
            });
        }
        other.blocks[0].ensure_dim(self.dim())
    }

    pub fn map_blocks(&self, mut f: impl FnMut(usize, &Point) -> Point) -> ProductPoint {
        ProductPoint {
            blocks: self.blocks.iter().enumerate().map(|(i, b)| f(i, b)).collect(),
        }
    }

    pub fn scale(&self, alpha: f64) -> ProductPoint {
        self.map_blocks(|_, b| b.scale(alpha))
    }

    /// `self + alpha * other`; shapes must agree.
    pub fn axpy(&self, alpha: f64, other: &ProductPoint) -> ProductPoint {
        debug_assert_eq!(self.m(), other.m());
        self.map_blocks(|i, b| b.axpy(alpha, &other.blocks[i]))
    }

    pub fn norm_x(&self) -> f64 {
        self.blocks.iter().map(Point::norm_sq).sum::<f64>().sqrt()
    }

    pub fn norm_y(&self, w: &Weights) -> f64 {
        debug_assert_eq!(self.m(), w.len());
        self.blocks
            .iter()
            .zip(w.as_slice())
            .map(|(b, l)| l * b.norm_sq())
            .sum::<f64>()
            .sqrt()
    }

    /// Largest block-to-block distance from the first block; zero exactly on
    /// the diagonal.
    pub fn diagonal_spread(&self) -> f64 {
        let first = &self.blocks[0];
        self.blocks[1..]
            .iter()
            .map(|b| b.distance(first))
            .fold(0.0, f64::max)
    }
}

impl Add for &ProductPoint {
    type Output = ProductPoint;

    fn add(self, rhs: &ProductPoint) -> ProductPoint {
        self.axpy(1.0, rhs)
    }
}

impl Sub for &ProductPoint {
    type Output = ProductPoint;

    fn sub(self, rhs: &ProductPoint) -> ProductPoint {
        self.axpy(-1.0, rhs)
    }
}

/// Standard inner product of `X^m`: `Σ_i ⟨a_i, b_i⟩`.
pub fn inner_x(a: &ProductPoint, b: &ProductPoint) -> Result<f64> {
    a.ensure_conformant(b)?;
    Ok(a.blocks.iter().zip(&b.blocks).map(|(x, y)| x.dot(y)).sum())
}

/// Weighted inner product: `Σ_i λ_i ⟨a_i, b_i⟩`.
pub fn inner_y(a: &ProductPoint, b: &ProductPoint, w: &Weights) -> Result<f64> {
    a.ensure_conformant(b)?;
    if w.len() != a.m() {
        return Err(Error::BlockCountMismatch {
            expected: a.m(),
            found: w.len(),
        });
    }
    Ok(a.blocks
        .iter()
        .zip(&b.blocks)
        .zip(w.as_slice())
        .map(|((x, y), l)| l * x.dot(y))
        .sum())
}

/// The constant tuple `(x, …, x)` in the diagonal subspace.
pub fn diagonal_embed(x: &Point, m: usize) -> Result<ProductPoint> {
    if m < 2 {
        return Err(Error::TooFewBlocks(m));
    }
    Ok(ProductPoint {
        blocks: vec![x.clone(); m],
    })
}

/// Coordinate-wise sum of the blocks. Zero exactly on the orthogonal
/// complement of the diagonal.
pub fn block_sum(p: &ProductPoint) -> Point {
    let mut acc = vec![0.0; p.dim()];
    for b in &p.blocks {
        for (a, v) in acc.iter_mut().zip(b.coords()) {
            *a += v;
        }
    }
    Point::from_raw(acc)
}
