//! Projection onto `{(x, y) : y ≥ eˣ}` checked against brute-force
//! minimization of the squared distance to the graph.

use firmlab_core::operators::{epi_exp_stationarity, project_epi_exp, Sampler};
use firmlab_core::Point;

const GRID: usize = 20_000;

/// Nearest graph point to `(a, b)` by dense grid search over
/// `[a − (eᵃ − b), a]` (the vertical drop to the graph bounds the distance),
/// then ternary search around the best cell.
fn grid_oracle(a: f64, b: f64) -> (f64, f64) {
    if b >= a.exp() {
        return (a, b);
    }
    let f = |x: f64| (x - a).powi(2) + (x.exp() - b).powi(2);
    let lo = a - (a.exp() - b);
    let h = (a - lo) / GRID as f64;
    let best = (0..=GRID)
        .min_by(|i, j| f(lo + *i as f64 * h).total_cmp(&f(lo + *j as f64 * h)))
        .unwrap();
    let (mut l, mut r) = (lo + (best as f64 - 1.0) * h, lo + (best as f64 + 1.0) * h);
    for _ in 0..200 {
        let m1 = l + (r - l) / 3.0;
        let m2 = r - (r - l) / 3.0;
        if f(m1) < f(m2) {
            r = m2;
        } else {
            l = m1;
        }
    }
    let x = 0.5 * (l + r);
    (x, x.exp())
}

#[test]
fn matches_grid_search() {
    let mut s = Sampler::seeded(404).with_range(-5.0, 5.0);
    let mut outside = 0;
    for _ in 0..100 {
        let p = s.point(2);
        let (a, b) = (p.coords()[0], p.coords()[1]);
        let q = project_epi_exp(&p).unwrap();
        let (ox, oy) = grid_oracle(a, b);
        assert!((q.coords()[0] - ox).abs() <= 1e-6, "x at ({a}, {b})");
        assert!((q.coords()[1] - oy).abs() <= 1e-6, "y at ({a}, {b})");
        if b < a.exp() {
            outside += 1;
        }
    }
    assert!(outside > 30);
}

#[test]
fn frozen_reference_points_agree_with_oracle() {
    for (a, b) in [(0.0, 0.0), (-5.0, 0.0), (2.0, -3.0), (4.5, 10.0)] {
        let q = project_epi_exp(&Point::new(vec![a, b]).unwrap()).unwrap();
        let (ox, _) = grid_oracle(a, b);
        assert!((q.coords()[0] - ox).abs() <= 1e-6);
        assert!(epi_exp_stationarity(q.coords()[0], a, b).abs() <= 1e-12);
    }
}
