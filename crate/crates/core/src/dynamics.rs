//! Orbits `x_{n+1} = S x_n` and finite-horizon asymptotic-regularity
//! diagnostics.
//!
//! A trace records every displacement `d_n = ‖x_n − x_{n+1}‖` and norm
//! `‖x_n‖`, but only every `stride`-th iterate (plus the last one). Cyclic
//! traces apply `T_1, T_2, …, T_m, T_1, …` one operator per step, so that
//! `x_{km}` is the orbit of `T_m ⋯ T_1` sampled at sweep boundaries.

use std::collections::VecDeque;
use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{diagonal_embed, Point, ProductPoint, Weights, ALGEBRAIC_TOL};
use crate::operators::OperatorSpec;
use crate::productspace::ProductOperator;

pub const DEFAULT_HORIZON: usize = 100_000;
pub const DEFAULT_STRIDE: usize = 100;
/// Two consecutive drift estimates closer than this mark convergence.
pub const DRIFT_CONVERGENCE_TOL: f64 = 1e-8;
/// Fraction of the horizon examined by [`classify`].
pub const FINAL_WINDOW_FRACTION: f64 = 0.1;
/// Combination checks give the combined operator this many times the budget of
/// its components.
pub const COMBINED_HORIZON_FACTOR: usize = 10;

#[derive(Clone, Debug, PartialEq)]
pub struct IterationTrace {
    ops: Vec<OperatorSpec>,
    x0: Point,
    points: Vec<(usize, Point)>,
    displacements: Vec<f64>,
    norms: Vec<f64>,
    tail: VecDeque<Point>,
    stride: usize,
    truncated: bool,
}

impl IterationTrace {
    /// Operators applied cyclically; a single entry for a plain orbit.
    pub fn operators(&self) -> &[OperatorSpec] {
        &self.ops
    }

    pub fn period(&self) -> usize {
        self.ops.len()
    }

    pub fn start(&self) -> &Point {
        &self.x0
    }

    /// Stored iterates `(n, x_n)`: every multiple of the stride and `x_N`.
    pub fn points(&self) -> &[(usize, Point)] {
        &self.points
    }

    pub fn displacements(&self) -> &[f64] {
        &self.displacements
    }

    pub fn norms(&self) -> &[f64] {
        &self.norms
    }

    pub fn stride(&self) -> usize {
        self.stride
    }

    /// Number of steps taken.
    pub fn len(&self) -> usize {
        self.displacements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.displacements.is_empty()
    }

    /// Set when an iterate became non-finite; the trace ends just before it.
    pub fn truncated(&self) -> bool {
        self.truncated
    }

    pub fn final_point(&self) -> &Point {
        self.tail.back().expect("the tail always holds x_N")
    }

    /// The last up to `period + 2` iterates, oldest first.
    pub fn tail(&self) -> impl Iterator<Item = &Point> {
        self.tail.iter()
    }

    pub fn dim(&self) -> usize {
        self.x0.dim()
    }
}

/// Orbit of `op` from `x0` for at most `max_n` steps, stopping early once a
/// displacement is `≤ stop_tol` (a negative value disables early stopping).
pub fn iterate(op: &OperatorSpec, x0: &Point, max_n: usize, stop_tol: f64) -> Result<IterationTrace> {
    iterate_strided(std::slice::from_ref(op), x0, max_n, stop_tol, DEFAULT_STRIDE)
}

/// Cyclic orbit for `sweeps` full sweeps. Early stopping happens only at a
/// sweep boundary, when all `m` displacements of that sweep are `≤ stop_tol`.
pub fn iterate_cyclic(
    ops: &[OperatorSpec],
    x0: &Point,
    sweeps: usize,
    stop_tol: f64,
) -> Result<IterationTrace> {
    let steps = sweeps
        .checked_mul(ops.len())
        .ok_or_else(|| Error::InvalidArgument("horizon overflows".into()))?;
    iterate_strided(ops, x0, steps, stop_tol, DEFAULT_STRIDE)
}

pub fn iterate_strided(
    ops: &[OperatorSpec],
    x0: &Point,
    max_n: usize,
    stop_tol: f64,
    stride: usize,
) -> Result<IterationTrace> {
    if ops.is_empty() {
        return Err(Error::EmptyOperatorList);
    }
    if max_n == 0 {
        return Err(Error::InvalidArgument("max_n must be at least 1".into()));
    }
    if stride == 0 {
        return Err(Error::InvalidArgument("stride must be at least 1".into()));
    }
    for op in ops {
        op.ensure_accepts(x0)?;
    }
    let period = ops.len();
    let keep = period + 2;
    let mut points = vec![(0, x0.clone())];
    let mut displacements = Vec::with_capacity(max_n.min(1 << 24));
    let mut norms = Vec::with_capacity(max_n.min(1 << 24) + 1);
    norms.push(x0.norm());
    let mut tail = VecDeque::with_capacity(keep);
    tail.push_back(x0.clone());
    let mut truncated = false;
    let mut quiet_run = 0usize;

    let mut x = x0.clone();
    for n in 0..max_n {
        let next = ops[n % period].apply(&x)?;
        if !next.is_finite() {
            truncated = true;
            break;
        }
        let d = x.distance(&next);
        if !d.is_finite() {
            truncated = true;
            break;
        }
        displacements.push(d);
        norms.push(next.norm());
        let step = n + 1;
        if step % stride == 0 {
            points.push((step, next.clone()));
        }
        if tail.len() == keep {
            tail.pop_front();
        }
        tail.push_back(next.clone());
        x = next;

        quiet_run = if d <= stop_tol { quiet_run + 1 } else { 0 };
        if step % period == 0 && quiet_run >= period {
            break;
        }
    }
    let n_final = displacements.len();
    if points.last().map(|(n, _)| *n) != Some(n_final) {
        points.push((n_final, x));
    }
    Ok(IterationTrace {
        ops: ops.to_vec(),
        x0: x0.clone(),
        points,
        displacements,
        norms,
        tail,
        stride,
        truncated,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct DriftEstimate {
    /// `x_{N−1} − x_N`.
    pub vector: Point,
    /// The same difference one period earlier, when the trace is long enough.
    pub previous: Option<Point>,
    pub converged: bool,
}

impl DriftEstimate {
    pub fn norm(&self) -> f64 {
        self.vector.norm()
    }
}

/// Final displacement vector `x_{N−1} − x_N`.
///
/// For a cyclic trace the previous estimate is taken one full period
/// earlier, so that it was produced by the same operator.
pub fn drift_vector(trace: &IterationTrace) -> Result<DriftEstimate> {
    let tail: Vec<&Point> = trace.tail.iter().collect();
    if tail.len() < 2 {
        return Err(Error::TraceTooShort(tail.len()));
    }
    let k = tail.len();
    let vector = tail[k - 2] - tail[k - 1];
    let p = trace.period();
    let previous = (k >= p + 2).then(|| tail[k - 2 - p] - tail[k - 1 - p]);
    let converged = previous
        .as_ref()
        .is_some_and(|prev| prev.distance(&vector) <= DRIFT_CONVERGENCE_TOL);
    Ok(DriftEstimate {
        vector,
        previous,
        converged,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegularityThresholds {
    pub tol_reg: f64,
    pub tol_floor: f64,
    pub slope_eps: f64,
}

impl Default for RegularityThresholds {
    fn default() -> Self {
        RegularityThresholds {
            tol_reg: 1e-3,
            tol_floor: 1e-6,
            slope_eps: 1e-3,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    Regular,
    Nonregular,
    Inconclusive,
}

impl std::fmt::Display for Classification {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Classification::Regular => "regular",
            Classification::Nonregular => "nonregular",
            Classification::Inconclusive => "inconclusive",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RegularityReport {
    pub final_displacement: f64,
    /// Smallest displacement over the final window.
    pub window_floor: f64,
    /// Least-squares slope of `ln d_n` against `ln(n + 1)` over the final
    /// window; `−∞` when displacements reached zero.
    pub displacement_slope: f64,
    pub drift_estimate: Point,
    pub drift_converged: bool,
    /// `‖x_N‖ − ‖x_0‖`.
    pub iterate_norm_growth: f64,
    pub unbounded_norms: bool,
    pub classification: Classification,
    pub horizon: usize,
    pub truncated: bool,
    pub thresholds: RegularityThresholds,
}

fn window_len(n: usize) -> usize {
    ((n as f64 * FINAL_WINDOW_FRACTION).ceil() as usize).clamp(1, n.max(1))
}

fn log_log_slope(start: usize, window: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = window
        .iter()
        .enumerate()
        .filter(|(_, d)| **d > 0.0)
        .map(|(k, d)| (((start + k + 1) as f64).ln(), d.ln()))
        .collect();
    if pts.len() < 2 {
        return if pts.len() < window.len() { f64::NEG_INFINITY } else { 0.0 };
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        0.0
    } else {
        sxy / sxx
    }
}

/// Finite-horizon classification of a trace.
///
/// Regular when the final displacement is `≤ tol_reg`; nonregular when the
/// final window stays `≥ tol_floor` with slope `≥ −slope_eps`. If both or
/// neither test fires the verdict is inconclusive.
pub fn classify(trace: &IterationTrace, th: &RegularityThresholds) -> RegularityReport {
    let n = trace.len();
    let drift = drift_vector(trace).ok();
    let (drift_estimate, drift_converged) = match drift {
        Some(d) => (d.vector, d.converged),
        None => (Point::zeros(trace.dim()), false),
    };
    let iterate_norm_growth = trace.norms[n] - trace.norms[0];
    if n == 0 {
        return RegularityReport {
            final_displacement: f64::NAN,
            window_floor: f64::NAN,
            displacement_slope: f64::NAN,
            drift_estimate,
            drift_converged,
            iterate_norm_growth,
            unbounded_norms: false,
            classification: Classification::Inconclusive,
            horizon: 0,
            truncated: trace.truncated,
            thresholds: *th,
        };
    }
    let w = window_len(n);
    let start = n - w;
    let window = &trace.displacements[start..];
    let final_displacement = window[w - 1];
    let window_floor = window.iter().copied().fold(f64::INFINITY, f64::min);
    let displacement_slope = log_log_slope(start, window);

    let norms = &trace.norms[start..];
    let norms_rising = norms
        .windows(2)
        .all(|p| p[1] >= p[0] - ALGEBRAIC_TOL * p[0].max(1.0));
    let shrinking = window.windows(2).all(|p| p[1] <= p[0] + ALGEBRAIC_TOL);
    let unbounded_norms = norms_rising
        && norms[norms.len() - 1] - norms[0] > th.tol_floor
        && iterate_norm_growth > 0.0
        && shrinking;

    let regular = final_displacement <= th.tol_reg;
    let nonregular = window_floor >= th.tol_floor && displacement_slope >= -th.slope_eps;
    let classification = match (regular, nonregular) {
        (true, false) => Classification::Regular,
        (false, true) => Classification::Nonregular,
        _ => Classification::Inconclusive,
    };
    RegularityReport {
        final_displacement,
        window_floor,
        displacement_slope,
        drift_estimate,
        drift_converged,
        iterate_norm_growth,
        unbounded_norms,
        classification,
        horizon: n,
        truncated: trace.truncated,
        thresholds: *th,
    }
}

/// `‖x − Sx‖`.
pub fn approx_fixed_point_residual(op: &OperatorSpec, x: &Point) -> Result<f64> {
    Ok(x.distance(&op.apply(x)?))
}

/// One cyclic sweep through `T_1, …, T_m` measured against a tuple
/// `(x_1, …, x_m)`, with `x_0 = x_m`:
///
/// - `z_0 = x_m`, `z_i = T_i z_{i−1}`;
/// - `c_i = x_i − T_i x_{i−1}`, `ε̂ = max ‖c_i‖`;
/// - `e_i = z_{i−1} − z_i − x_{i−1} + x_i`, which telescope to
///   `x_m − T_m ⋯ T_1 x_m` and satisfy `‖e_i‖ ≤ (2i − 1) ε̂`.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepResiduals {
    pub start: ProductPoint,
    /// `T_m ⋯ T_1 x_m`.
    pub end: Point,
    pub e: Vec<Point>,
    pub c: Vec<Point>,
    pub eps_hat: f64,
    /// `(2i − 1) ε̂` for `i = 1, …, m`.
    pub bound_profile: Vec<f64>,
    /// `x_m − T_m ⋯ T_1 x_m`.
    pub composite_residual: Point,
    /// `‖Σ e_i − (x_m − T_m ⋯ T_1 x_m)‖`.
    pub telescoping_error: f64,
    pub sum_e_norms: f64,
}

impl SweepResiduals {
    pub fn m(&self) -> usize {
        self.e.len()
    }

    /// `‖x − T_m ⋯ T_1 x‖ ≤ Σ ‖e_i‖`, up to round-off.
    pub fn triangle_ok(&self) -> bool {
        self.composite_residual.norm() <= self.sum_e_norms + ALGEBRAIC_TOL * self.sum_e_norms.max(1.0)
    }

    /// `‖e_i‖ ≤ (2i − 1) ε̂` for every step, up to round-off.
    pub fn profile_ok(&self) -> bool {
        self.e
            .iter()
            .zip(&self.bound_profile)
            .all(|(e, b)| e.norm() <= b + ALGEBRAIC_TOL * b.max(1.0))
    }

    /// `‖x − T_m ⋯ T_1 x‖ ≤ m² ε̂`, up to round-off.
    pub fn m2_bound_ok(&self) -> bool {
        let bound = (self.m() * self.m()) as f64 * self.eps_hat;
        self.composite_residual.norm() <= bound + ALGEBRAIC_TOL * bound.max(1.0)
    }
}

pub fn cyclic_sweep(ops: &[OperatorSpec], start: &ProductPoint) -> Result<SweepResiduals> {
    let m = start.m();
    if ops.len() != m {
        return Err(Error::BlockCountMismatch {
            expected: m,
            found: ops.len(),
        });
    }
    let x = start.blocks();
    let x_prev = |i: usize| if i == 0 { &x[m - 1] } else { &x[i - 1] };
    let mut z = x[m - 1].clone();
    let mut e = Vec::with_capacity(m);
    let mut c = Vec::with_capacity(m);
    for (i, op) in ops.iter().enumerate() {
        let z_next = op.apply(&z)?;
        e.push(&(&(&z - &z_next) - x_prev(i)) + &x[i]);
        c.push(&x[i] - &op.apply(x_prev(i))?);
        z = z_next;
    }
    let eps_hat = c.iter().map(Point::norm).fold(0.0, f64::max);
    let bound_profile = (1..=m).map(|i| (2 * i - 1) as f64 * eps_hat).collect();
    let composite_residual = &x[m - 1] - &z;
    let sum_e = e.iter().fold(Point::zeros(start.dim()), |acc, v| &acc + v);
    let telescoping_error = sum_e.distance(&composite_residual);
    let sum_e_norms = e.iter().map(Point::norm).sum();
    Ok(SweepResiduals {
        start: start.clone(),
        end: z,
        e,
        c,
        eps_hat,
        bound_profile,
        composite_residual,
        telescoping_error,
        sum_e_norms,
    })
}

/// Orbit of `Q ∘ T` in the weighted product space from the diagonal start
/// `(x_0, …, x_0)`, compared step by step with the orbit of `Σ λ_i T_i`.
#[derive(Clone, Debug, PartialEq)]
pub struct LiftComparison {
    pub steps: usize,
    /// `‖y_n − y_{n+1}‖_Y`.
    pub y_displacements: Vec<f64>,
    /// `‖x_n − x_{n+1}‖` for the averaged map.
    pub x_displacements: Vec<f64>,
    /// Largest `max_i ‖(y_n)_i − (y_n)_1‖` seen.
    pub max_spread: f64,
    /// Largest `max_i ‖(y_n)_i − x_n‖` seen.
    pub max_block_deviation: f64,
    /// Largest `|‖y_n − y_{n+1}‖_Y − ‖x_n − x_{n+1}‖|`.
    pub max_displacement_gap: f64,
}

pub fn lift_comparison(
    ops: &[OperatorSpec],
    weights: &Weights,
    x0: &Point,
    steps: usize,
) -> Result<LiftComparison> {
    if weights.len() != ops.len() {
        return Err(Error::BlockCountMismatch {
            expected: ops.len(),
            found: weights.len(),
        });
    }
    let product = ProductOperator::new(ops.to_vec())?;
    let averaged = OperatorSpec::convex_combine(weights.clone(), ops.to_vec())?;
    let mut y = diagonal_embed(x0, ops.len())?;
    let mut x = x0.clone();
    let mut out = LiftComparison {
        steps,
        y_displacements: Vec::with_capacity(steps),
        x_displacements: Vec::with_capacity(steps),
        max_spread: 0.0,
        max_block_deviation: 0.0,
        max_displacement_gap: 0.0,
    };
    for _ in 0..steps {
        let y_next = product.apply_averaged(&y, weights)?;
        let x_next = averaged.apply(&x)?;
        let dy = (&y - &y_next).norm_y(weights);
        let dx = x.distance(&x_next);
        out.max_spread = out.max_spread.max(y_next.diagonal_spread());
        let dev = y_next
            .blocks()
            .iter()
            .map(|b| b.distance(&x_next))
            .fold(0.0, f64::max);
        out.max_block_deviation = out.max_block_deviation.max(dev);
        out.max_displacement_gap = out.max_displacement_gap.max((dy - dx).abs());
        out.y_displacements.push(dy);
        out.x_displacements.push(dx);
        y = y_next;
        x = x_next;
    }
    Ok(out)
}

/// Verdicts for a combination of operators and for each component.
#[derive(Clone, Debug, PartialEq)]
pub struct CombinationCheck {
    pub components: Vec<RegularityReport>,
    pub combined: RegularityReport,
}

impl CombinationCheck {
    pub fn components_regular(&self) -> bool {
        self.components
            .iter()
            .all(|r| r.classification == Classification::Regular)
    }

    /// The implication "all components regular ⇒ combination regular".
    pub fn holds(&self) -> bool {
        !self.components_regular() || self.combined.classification == Classification::Regular
    }
}

fn combination_check(
    ops: &[OperatorSpec],
    combined: &OperatorSpec,
    x0: &Point,
    horizon: usize,
    th: &RegularityThresholds,
) -> Result<CombinationCheck> {
    let components = ops
        .iter()
        .map(|op| Ok(classify(&iterate(op, x0, horizon, 0.0)?, th)))
        .collect::<Result<Vec<_>>>()?;
    let long = horizon.saturating_mul(COMBINED_HORIZON_FACTOR);
    let combined = classify(&iterate(combined, x0, long, 0.0)?, th);
    Ok(CombinationCheck {
        components,
        combined,
    })
}

/// Classifies each `T_i` at `horizon` and `T_m ⋯ T_1` at ten times that.
pub fn composition_check(
    ops: &[OperatorSpec],
    x0: &Point,
    horizon: usize,
    th: &RegularityThresholds,
) -> Result<CombinationCheck> {
    let combined = OperatorSpec::compose(ops.to_vec())?;
    combination_check(ops, &combined, x0, horizon, th)
}

/// Classifies each `T_i` at `horizon` and `Σ λ_i T_i` at ten times that.
pub fn convex_combination_check(
    ops: &[OperatorSpec],
    weights: &Weights,
    x0: &Point,
    horizon: usize,
    th: &RegularityThresholds,
) -> Result<CombinationCheck> {
    let combined = OperatorSpec::convex_combine(weights.clone(), ops.to_vec())?;
    combination_check(ops, &combined, x0, horizon, th)
}

/// Writes `n,displacement,norm,x1,…,xd`, one row per step. Coordinates
/// appear only on stored rows and the displacement is empty on the last
/// row. Reals use 17 significant digits.
pub fn write_csv<W: Write>(trace: &IterationTrace, mut out: W) -> io::Result<()> {
    let d = trace.dim();
    write!(out, "n,displacement,norm")?;
    for j in 1..=d {
        write!(out, ",x{j}")?;
    }
    writeln!(out)?;
    let mut stored = trace.points.iter().peekable();
    for n in 0..=trace.len() {
        write!(out, "{n},")?;
        if let Some(v) = trace.displacements.get(n) {
            write!(out, "{v:.16e}")?;
        }
        write!(out, ",{:.16e}", trace.norms[n])?;
        match stored.peek() {
            Some((k, p)) if *k == n => {
                for v in p.coords() {
                    write!(out, ",{v:.16e}")?;
                }
                stored.next();
            }
            _ => {
                for _ in 0..d {
                    write!(out, ",")?;
                }
            }
        }
        writeln!(out)?;
    }
    Ok(())
}
