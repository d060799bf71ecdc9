//! Acceptance suite: one PASS/FAIL line per criterion, each with a
//! wall-clock budget. Exits non-zero if any criterion fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use firmlab::config::ScenarioConfig;
use firmlab::{run_scenario, Scenario};
use firmlab_core::dynamics::{
    classify, composition_check, convex_combination_check, cyclic_sweep, drift_vector, iterate,
    iterate_cyclic, lift_comparison, Classification, RegularityThresholds,
};
use firmlab_core::linalg::block_sum;
use firmlab_core::operators::zoo::{random_firmly_nonexpansive, random_weights, reference_zoo};
use firmlab_core::operators::{
    check_firmly_nonexpansive, epi_exp_stationarity, project_epi_exp, Sampler,
};
use firmlab_core::productspace::{
    apply_l, apply_m, as_matrix, check_q_nonexpansive_in_x, check_q_nonexpansive_in_x_sampled,
    penrose_residuals, project_diagonal_perp, pseudoinverse_oracle, BlockLinearOp, BlockOpKind,
};
use firmlab_core::{OperatorSpec, Point, ProductPoint, SetSpec, Weights};

const MS: [usize; 5] = [2, 3, 4, 5, 6];
const DS: [usize; 3] = [1, 2, 3];

type Criterion = (&'static str, u64, fn() -> Outcome);

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome { passed, detail: detail.into() }
}

fn pt(v: &[f64]) -> Point {
    Point::new(v.to_vec()).unwrap()
}

fn random_product(s: &mut Sampler, m: usize, d: usize) -> ProductPoint {
    ProductPoint::new((0..m).map(|_| s.point(d)).collect()).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn mdagger_vs_oracle() -> Outcome {
    let (mut diff, mut penrose) = (0.0f64, 0.0f64);
    for m in MS {
        for d in DS {
            let a = as_matrix(&BlockLinearOp::new(BlockOpKind::M, m, d).unwrap()).unwrap();
            let closed = as_matrix(&BlockLinearOp::new(BlockOpKind::MDagger, m, d).unwrap()).unwrap();
            let oracle = pseudoinverse_oracle(&a).unwrap();
            diff = diff.max((&closed - &oracle).amax());
            penrose = penrose_residuals(&a, &closed).into_iter().fold(penrose, f64::max);
        }
    }
    outcome(
        diff <= 1e-10 && penrose <= 1e-9,
        format!("max entry difference {diff:.2e} (tol 1e-10), Penrose residual {penrose:.2e} (tol 1e-9)"),
    )
}

fn section_identity() -> Outcome {
    let mut s = Sampler::seeded(2);
    let (mut section, mut sum) = (0.0f64, 0.0f64);
    for m in MS {
        for d in DS {
            for _ in 0..100 {
                let y = project_diagonal_perp(&random_product(&mut s, m, d));
                let ly = apply_l(&y).unwrap();
                section = section.max((&apply_m(&ly) - &y).norm_x());
                sum = sum.max(block_sum(&ly).norm());
            }
        }
    }
    outcome(
        section <= 1e-12 && sum <= 1e-12,
        format!("max |M L y - y| {section:.2e}, max |block sum of L y| {sum:.2e} (tol 1e-12)"),
    )
}

fn zoo_firmness() -> Outcome {
    let mut s = Sampler::seeded(3);
    let (mut claimed, mut failed, mut control) = (0, Vec::new(), None);
    for e in reference_zoo() {
        let r = check_firmly_nonexpansive(&e.op, e.dim, &mut s, 10_000, 1e-9).unwrap();
        if e.op.claimed_firmly_nonexpansive() {
            claimed += 1;
            if !r.passed() {
                failed.push(e.name);
            }
        } else if matches!(e.op.kind(), firmlab_core::operators::OperatorKind::NegationControl) {
            control = r.worst().map(|v| format!("witness x = {}, y = {}, excess {:.3e}", v.x, v.y, v.gap));
        }
    }
    let passed = failed.is_empty() && control.is_some();
    outcome(
        passed,
        format!(
            "{claimed} claimed operators x 1e4 pairs, failures {failed:?}; negation control {}",
            control.unwrap_or_else(|| "passed (no witness)".into())
        ),
    )
}

/// Nearest point of the graph of exp to `(a, b)` by dense grid search
/// followed by golden-section refinement.
fn epi_grid_oracle(a: f64, b: f64) -> (f64, f64) {
    if b >= a.exp() {
        return (a, b);
    }
    let f = |x: f64| (x - a).powi(2) + (x.exp() - b).powi(2);
    let lo = a - (a.exp() - b);
    let n = 20_000;
    let h = (a - lo) / n as f64;
    let best = (0..=n).min_by(|i, j| f(lo + *i as f64 * h).total_cmp(&f(lo + *j as f64 * h))).unwrap();
    let (mut l, mut r) = (lo + (best as f64 - 1.0) * h, lo + (best as f64 + 1.0) * h);
    let g = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..200 {
        let (m1, m2) = (r - g * (r - l), l + g * (r - l));
        if f(m1) < f(m2) {
            r = m2;
        } else {
            l = m1;
        }
    }
    let x = 0.5 * (l + r);
    (x, x.exp())
}

fn epi_exp_projector() -> Outcome {
    let mut s = Sampler::seeded(4);
    let (mut stat, mut outside, mut below) = (0.0f64, 0, 0);
    for _ in 0..1000 {
        let p = s.point(2);
        let (a, b) = (p.coords()[0], p.coords()[1]);
        let q = project_epi_exp(&p).unwrap();
        if b < a.exp() {
            below += 1;
            stat = stat.max(epi_exp_stationarity(q.coords()[0], a, b).abs());
        }
        if !SetSpec::EpiExp.contains(&q, 0.0) {
            outside += 1;
        }
    }
    let mut oracle = 0.0f64;
    for _ in 0..100 {
        let p = s.point(2);
        let q = project_epi_exp(&p).unwrap();
        let (ox, oy) = epi_grid_oracle(p.coords()[0], p.coords()[1]);
        oracle = oracle.max((q.coords()[0] - ox).abs()).max((q.coords()[1] - oy).abs());
    }
    outcome(
        stat <= 1e-12 && outside == 0 && oracle <= 1e-6,
        format!(
            "stationarity {stat:.2e} over {below} projected inputs, {outside} outside the set, \
             grid oracle gap {oracle:.2e}"
        ),
    )
}

fn translations_cancel() -> Outcome {
    let run = run_scenario(&ScenarioConfig::default_for(Scenario::TranslationsCancel)).unwrap();
    let v = pt(&[1.5, -0.25]);
    let x0 = pt(&[3.0, -2.0]);
    let th = RegularityThresholds::default();
    let mut ok = run.summary.passed();
    for op in [OperatorSpec::translation(v.clone()), OperatorSpec::translation(-&v)] {
        let t = iterate(&op, &x0, 1000, 0.0).unwrap();
        ok &= t.displacements().iter().all(|d| *d == v.norm());
        ok &= classify(&t, &th).classification == Classification::Nonregular;
    }
    let both = OperatorSpec::compose(vec![OperatorSpec::translation(v.clone()), OperatorSpec::translation(-&v)]).unwrap();
    let t = iterate(&both, &x0, 1000, -1.0).unwrap();
    ok &= t.displacements().iter().all(|d| *d == 0.0);
    ok &= classify(&t, &th).classification == Classification::Regular;
    outcome(ok, format!("components displace by exactly {}, composition by exactly 0", v.norm()))
}

/// The orbit `u_{n+1} = root of u + e^{2u} = u_n`, `u_0 = 0`, of the first
/// coordinate, by bisection.
fn epi_line_oracle(n: usize) -> Vec<f64> {
    let mut u = vec![0.0f64];
    for _ in 0..n {
        let a = *u.last().unwrap();
        let g = |x: f64| x + (2.0 * x).exp() - a;
        let (mut lo, mut hi) = (a - (2.0 * a).exp(), a);
        while g(lo) > 0.0 {
            lo -= hi - lo;
        }
        loop {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if g(mid) > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        u.push(if g(hi).abs() < g(lo).abs() { hi } else { lo });
    }
    u
}

fn epi_exp_line() -> Outcome {
    let n = 100_000;
    let run = run_scenario(&ScenarioConfig::default_for(Scenario::EpiExpLine)).unwrap();
    let t = &run.traces.iter().find(|t| t.label == "composition").unwrap().trace;
    let rise = t.displacements().windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max);
    let last = *t.displacements().last().unwrap();
    let x_n = t.final_point().coords()[0];
    let decade: Vec<f64> = t.points().iter().filter(|(k, _)| *k >= n / 10).map(|(_, p)| p.coords()[0]).collect();
    let decreasing = decade.windows(2).all(|w| w[1] < w[0]);

    let u = epi_line_oracle(n);
    let oracle_decreasing = u[n / 10..].windows(2).all(|w| w[1] < w[0]);
    let oracle_gap = t.points().iter().map(|(k, p)| (p.coords()[0] - u[*k]).abs()).fold(0.0, f64::max);
    let oracle_final_disp = {
        let (a, b) = (u[n - 1], u[n]);
        ((a - b).powi(2) + (a.exp() - b.exp()).powi(2)).sqrt()
    };
    let passed = t.len() == n
        && rise <= 1e-12
        && last <= 1e-2
        && x_n <= -2.0
        && decreasing
        && oracle_decreasing
        && u[n] <= -2.0
        && oracle_gap <= 1e-9
        && rel(last, oracle_final_disp) <= 1e-6
        && run.summary.classification == Some(Classification::Regular);
    outcome(
        passed,
        format!(
            "N = {}, max rise {rise:.2e}, final displacement {last:.3e}, x_N = {x_n:.4} (oracle {:.4}), \
             oracle gap {oracle_gap:.1e}, {} stored points in the last decade",
            t.len(),
            u[n],
            decade.len()
        ),
    )
}

fn regular_compositions() -> Outcome {
    let th = RegularityThresholds::default();
    let mut s = Sampler::seeded(7);
    let (mut qualified, mut drawn, mut failures) = (0, 0, Vec::new());
    while qualified < 20 && drawn < 200 {
        drawn += 1;
        let d = 1 + s.index(3);
        let k = 2 + s.index(3);
        let ops: Vec<_> = (0..k).map(|_| random_firmly_nonexpansive(&mut s, d)).collect();
        let x0 = s.point(d);
        let check = composition_check(&ops, &x0, 1000, &th).unwrap();
        if !check.components_regular() {
            continue;
        }
        qualified += 1;
        if check.combined.classification != Classification::Regular {
            failures.push(format!("#{drawn}: {} ({:.2e})", check.combined.classification, check.combined.final_displacement));
        }
    }
    outcome(
        qualified == 20 && failures.is_empty(),
        format!("{qualified} scenarios with regular components ({drawn} drawn), composition not regular in {failures:?}"),
    )
}

fn convex_combinations_and_lift() -> Outcome {
    let th = RegularityThresholds::default();
    let mut s = Sampler::seeded(8);
    let (mut gap, mut broken, mut both_regular) = (0.0f64, 0, 0);
    for _ in 0..10 {
        let d = 1 + s.index(3);
        let k = 2 + s.index(3);
        let ops: Vec<_> = (0..k).map(|_| random_firmly_nonexpansive(&mut s, d)).collect();
        let w = random_weights(&mut s, k);
        let x0 = s.point(d);
        let lift = lift_comparison(&ops, &w, &x0, 1000).unwrap();
        gap = gap.max(lift.max_displacement_gap);
        let check = convex_combination_check(&ops, &w, &x0, 1000, &th).unwrap();
        if !check.holds() {
            broken += 1;
        } else if check.components_regular() {
            both_regular += 1;
        }
    }
    outcome(
        gap <= 1e-12 && broken == 0,
        format!(
            "max displacement gap {gap:.2e} over 1000 steps; implication fails in {broken} of 10 \
             ({both_regular} with all components regular)"
        ),
    )
}

fn q_dichotomy() -> Outcome {
    let mut s = Sampler::seeded(9);
    let (mut witnesses, mut err) = (0, 0.0f64);
    for _ in 0..50 {
        let m = 2 + s.index(5);
        let d = 1 + s.index(3);
        let w = random_weights(&mut s, m);
        assert!(!w.is_uniform(1e-12));
        let v = check_q_nonexpansive_in_x(&w, d).unwrap();
        let Some(wit) = v.witness.filter(|_| !v.nonexpansive) else { continue };
        let sl = w.sum_of_squares();
        // recompute Qx from the witness blocks
        let mean = wit.x.blocks().iter().zip(w.as_slice()).fold(Point::zeros(d), |acc, (b, l)| acc.axpy(*l, b));
        let qx_sq = m as f64 * mean.norm_sq();
        let x_sq: f64 = wit.x.blocks().iter().map(Point::norm_sq).sum();
        err = err
            .max(rel(qx_sq, m as f64 * sl * sl))
            .max(rel(wit.norm_sq_qx, m as f64 * sl * sl))
            .max(rel(x_sq, sl))
            .max(rel(wit.norm_sq_qx / wit.norm_sq_x, m as f64 * sl));
        if qx_sq > x_sq {
            witnesses += 1;
        }
    }
    let mut violations = 0;
    for m in MS {
        let d = 1 + m % 3;
        let r = check_q_nonexpansive_in_x_sampled(&Weights::uniform(m).unwrap(), d, &mut s, 10_000, 1e-12);
        violations += r.violations.len();
    }
    outcome(
        witnesses == 50 && err <= 1e-12 && violations == 0,
        format!(
            "{witnesses} of 50 expansion witnesses, max relative error {err:.2e}; \
             uniform weights: {violations} violations over 5 x 1e4 pairs"
        ),
    )
}

fn telescoping() -> Outcome {
    let mut s = Sampler::seeded(10);
    let (mut tele, mut triangle) = (0.0f64, 0);
    for _ in 0..1000 {
        let m = 2 + s.index(5);
        let d = 1 + s.index(3);
        let ops: Vec<_> = (0..m).map(|_| random_firmly_nonexpansive(&mut s, d)).collect();
        let sweep = cyclic_sweep(&ops, &random_product(&mut s, m, d)).unwrap();
        tele = tele.max(sweep.telescoping_error);
        // round-off slack of 1e-12 relative, for collinear residuals
        if !sweep.triangle_ok() {
            triangle += 1;
        }
    }
    outcome(
        tele <= 1e-12 && triangle == 0,
        format!("max telescoping error {tele:.2e}, triangle bound violated {triangle} times"),
    )
}

fn parallel_hyperplanes() -> Outcome {
    let g = 0.7;
    let run = run_scenario(&ScenarioConfig::default_for(Scenario::ParallelHyperplanes)).unwrap();
    let normal = pt(&[3.0, 4.0]);
    let ops = [
        OperatorSpec::projector(SetSpec::Hyperplane { normal: normal.clone(), offset: 0.0 }).unwrap(),
        OperatorSpec::projector(SetSpec::Hyperplane { normal, offset: 5.0 * g }).unwrap(),
    ];
    let mut norms = Vec::new();
    let mut converged = true;
    for start in [pt(&[5.0, 1.0]), pt(&[-40.0, 17.0])] {
        let drift = drift_vector(&iterate_cyclic(&ops, &start, 1000, -1.0).unwrap()).unwrap();
        converged &= drift.converged;
        norms.push(drift.norm());
    }
    let worst = norms.iter().map(|n| (n - g).abs()).fold(0.0, f64::max);
    outcome(
        run.summary.passed() && converged && worst <= 1e-6,
        format!("drift norms {norms:?} from two starts, max distance to {g} is {worst:.1e}"),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 11] = [
        ("M-dagger closed form matches the pseudoinverse oracle", 5, mdagger_vs_oracle),
        ("L is a section of M on the diagonal complement", 1, section_identity),
        ("zoo operators firmly nonexpansive, negation fails", 5, zoo_firmness),
        ("epi exp projector", 2, epi_exp_projector),
        ("translations cancel", 1, translations_cancel),
        ("epi exp line", 10, epi_exp_line),
        ("compositions of regular maps are regular", 60, regular_compositions),
        ("convex combinations and lift consistency", 30, convex_combinations_and_lift),
        ("Q expansion dichotomy", 5, q_dichotomy),
        ("sweep residuals telescope", 5, telescoping),
        ("drift norm equals the hyperplane gap", 5, parallel_hyperplanes),
    ];
    let mut failed = 0;
    for (i, (name, budget, run)) in criteria.iter().enumerate() {
        let started = Instant::now();
        let out = run();
        let elapsed = started.elapsed();
        let in_budget = elapsed <= Duration::from_secs(*budget);
        let passed = out.passed && in_budget;
        if !passed {
            failed += 1;
        }
        println!(
            "{} {:>2} {name}: {} [{:.2}s of {budget}s]",
            if passed { "PASS" } else { "FAIL" },
            i + 1,
            out.detail,
            elapsed.as_secs_f64(),
        );
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
