//! The invariant suite behind `firmlab verify`.

use std::path::Path;

use firmlab_core::dynamics::{
    composition_check, convex_combination_check, cyclic_sweep, drift_vector, iterate, lift_comparison,
    write_csv, RegularityThresholds,
};
use firmlab_core::linalg::{block_sum, diagonal_embed, inner_x, inner_y};
use firmlab_core::operators::zoo::{
    random_firmly_nonexpansive, random_projector, random_weights, reference_zoo,
};
use firmlab_core::operators::{
    check_firmly_nonexpansive, check_nonexpansive, check_projector_idempotent, epi_exp_stationarity,
    minty_graph_sample, project_epi_exp, CheckReport, OperatorKind, Sampler, SetSpec,
};
use firmlab_core::productspace::{
    apply_m, check_q_firmly_nonexpansive_in_y, check_q_nonexpansive_in_x,
};
use firmlab_core::{OperatorSpec, Point, ProductPoint, Weights};
use rayon::prelude::*;
use serde::Deserialize;

use crate::config::ScenarioConfig;
use crate::scenarios::{mdagger_grid, run_scenario, Scenario};
use crate::CliError;

/// An operator added to the suite from a file.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExtraOperator {
    pub name: String,
    pub dim: usize,
    pub op: OperatorSpec,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ExtraFile {
    #[serde(default)]
    extra: Vec<ExtraOperator>,
}

/// Reads `[[extra]]` tables with `name`, `dim` and an inline `op`:
///
/// ```toml
/// [[extra]]
/// name = "negation-claimed"
/// dim = 2
/// op = { kind = "negation_control", claimed_firmly_nonexpansive = true }
/// ```
pub fn load_extras(path: &Path) -> Result<Vec<ExtraOperator>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    parse_extras(&text).map_err(|e| match e {
        CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn parse_extras(text: &str) -> Result<Vec<ExtraOperator>, CliError> {
    let file: ExtraFile = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
    for e in &file.extra {
        if e.dim == 0 || e.op.dim().is_some_and(|d| d != e.dim) {
            return Err(CliError::Config(format!("extra operator {}: bad dimension {}", e.name, e.dim)));
        }
    }
    Ok(file.extra)
}

#[derive(Clone, Debug)]
pub struct VerifyOptions {
    pub seed: u64,
    /// Random pairs per firm-nonexpansiveness check.
    pub samples: usize,
    pub monte_carlo_tol: f64,
    pub algebraic_tol: f64,
    pub extra: Vec<ExtraOperator>,
    /// Also run every built-in scenario with its default config.
    pub scenarios: bool,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            seed: 2024,
            samples: 10_000,
            monte_carlo_tol: 1e-9,
            algebraic_tol: 1e-12,
            extra: Vec::new(),
            scenarios: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct VerifyRow {
    pub module: &'static str,
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct VerifyReport {
    pub rows: Vec<VerifyRow>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &VerifyRow> {
        self.rows.iter().filter(|r| !r.passed)
    }

    pub fn render(&self) -> String {
        let width = self.rows.iter().map(|r| r.name.chars().count()).max().unwrap_or(0);
        let mut out = String::new();
        for r in &self.rows {
            let tag = if r.passed { "PASS" } else { "FAIL" };
            let pad = width - r.name.chars().count();
            out.push_str(&format!(
                "{tag}  {:<12} {}{}  {}\n",
                r.module,
                r.name,
                " ".repeat(pad),
                r.detail
            ));
        }
        let failed = self.failures().count();
        out.push_str(&format!("{} checks, {} failed\n", self.rows.len(), failed));
        out
    }
}

fn row(module: &'static str, name: impl Into<String>, passed: bool, detail: impl Into<String>) -> VerifyRow {
    VerifyRow { module, name: name.into(), passed, detail: detail.into() }
}

fn report_detail(r: &CheckReport) -> String {
    match r.worst() {
        None => format!("{} pairs", r.samples),
        Some(v) => format!(
            "{} of {} pairs violate; witness x = {}, y = {}, excess {:.3e}",
            r.violations.len(),
            r.samples,
            v.x,
            v.y,
            v.gap
        ),
    }
}

fn random_product(s: &mut Sampler, m: usize, d: usize) -> ProductPoint {
    ProductPoint::new((0..m).map(|_| s.point(d)).collect()).expect("m >= 2")
}

type Job<'a> = Box<dyn Fn() -> Vec<VerifyRow> + Send + Sync + 'a>;

/// Runs the whole suite. Rows come back in a fixed order; independent
/// groups run concurrently, each with its own seeded sampler.
pub fn verify_all(opts: &VerifyOptions) -> VerifyReport {
    let jobs: Vec<Job> = vec![
        Box::new(|| linalg_rows(opts)),
        Box::new(|| firm_rows(opts)),
        Box::new(|| operator_rows(opts)),
        Box::new(|| productspace_rows(opts)),
        Box::new(|| dynamics_rows(opts)),
        Box::new(|| scenario_rows(opts)),
    ];
    let rows = jobs.par_iter().map(|job| job()).collect::<Vec<_>>().concat();
    VerifyReport { rows }
}

fn linalg_rows(opts: &VerifyOptions) -> Vec<VerifyRow> {
    let mut s = Sampler::seeded(opts.seed);
    let (mut cs, mut adj, mut uni) = (0.0f64, 0.0f64, 0.0f64);
    for k in 0..1000 {
        let (m, d) = (2 + k % 5, 1 + k % 4);
        let (a, b) = (random_product(&mut s, m, d), random_product(&mut s, m, d));
        let w = random_weights(&mut s, m);
        let ix = inner_x(&a, &b).expect("conformant");
        let iy = inner_y(&a, &b, &w).expect("conformant");
        cs = cs
            .max(ix.abs() - a.norm_x() * b.norm_x())
            .max(iy.abs() - a.norm_y(&w) * b.norm_y(&w));
        let x = s.point(d);
        let lhs = inner_x(&diagonal_embed(&x, m).expect("m >= 2"), &a).expect("conformant");
        adj = adj.max((lhs - x.dot(&block_sum(&a))).abs() / lhs.abs().max(1.0));
        let u = Weights::uniform(m).expect("m >= 2");
        let scale: f64 = a.blocks().iter().zip(b.blocks()).map(|(p, q)| p.norm() * q.norm()).sum::<f64>() / m as f64;
        let iu = inner_y(&a, &b, &u).expect("conformant");
        uni = uni.max((iu - ix / m as f64).abs() / scale.max(f64::MIN_POSITIVE));
    }
    vec![
        row("linalg", "Cauchy-Schwarz in both inner products", cs <= opts.algebraic_tol, format!("max excess {cs:.3e}")),
        row("linalg", "diagonal embedding adjoint to block sum", adj <= opts.algebraic_tol, format!("max error {adj:.3e}")),
        row("linalg", "uniform weighted inner product is scaled", uni <= 1e-15, format!("max relative error {uni:.3e}")),
    ]
}

fn firm_rows(opts: &VerifyOptions) -> Vec<VerifyRow> {
    let mut s = Sampler::seeded(opts.seed + 1);
    let mut rows = Vec::new();
    for e in reference_zoo() {
        let r = check_firmly_nonexpansive(&e.op, e.dim, &mut s, opts.samples, opts.monte_carlo_tol)
            .expect("zoo dimensions are consistent");
        if e.op.claimed_firmly_nonexpansive() {
            rows.push(row("operators", format!("firmly nonexpansive: {}", e.name), r.passed(), report_detail(&r)));
        } else {
            rows.push(row(
                "operators",
                format!("control fails: {}", e.name),
                !r.passed(),
                report_detail(&r),
            ));
        }
    }
    for e in &opts.extra {
        if !e.op.claimed_firmly_nonexpansive() {
            rows.push(row("operators", format!("extra {}", e.name), true, "not claimed firmly nonexpansive"));
            continue;
        }
        let (passed, detail) = match check_firmly_nonexpansive(&e.op, e.dim, &mut s, opts.samples, opts.monte_carlo_tol) {
            Ok(r) => (r.passed(), report_detail(&r)),
            Err(err) => (false, err.to_string()),
        };
        rows.push(row("operators", format!("firmly nonexpansive: extra {}", e.name), passed, detail));
        let pts: Vec<Point> = (0..50).map(|_| s.point(e.dim)).collect();
        let (passed, detail) = match minty_graph_sample(&e.op, &pts) {
            Ok(m) => (true, format!("min cross product {:.3e}", m.min_cross_product().map_or(0.0, |c| c.2))),
            Err(err) => (false, format!("{err}; points {} and {}", witness_points(&err, &pts).0, witness_points(&err, &pts).1)),
        };
        rows.push(row("operators", format!("Minty monotone: extra {}", e.name), passed, detail));
    }
    rows
}

fn witness_points(err: &firmlab_core::Error, pts: &[Point]) -> (String, String) {
    match err {
        firmlab_core::Error::MonotonicityViolation { first, second, .. } => {
            (pts[*first].to_string(), pts[*second].to_string())
        }
        _ => ("-".into(), "-".into()),
    }
}

fn operator_rows(opts: &VerifyOptions) -> Vec<VerifyRow> {
    let mut s = Sampler::seeded(opts.seed + 2);
    let mut rows = Vec::new();

    let mut idem = 0.0f64;
    for e in reference_zoo() {
        if matches!(e.op.kind(), OperatorKind::Projector(_)) {
            let r = check_projector_idempotent(&e.op, e.dim, &mut s, 1000, 1e-10).expect("projector");
            idem = idem.max(r.worst().map_or(0.0, |v| v.gap));
        }
    }
    for _ in 0..50 {
        let d = 1 + s.index(4);
        let op = random_projector(&mut s, d);
        let r = check_projector_idempotent(&op, d, &mut s, 100, 1e-10).expect("projector");
        idem = idem.max(r.worst().map_or(0.0, |v| v.gap));
    }
    rows.push(row("operators", "projectors idempotent", idem == 0.0, format!("violations up to {idem:.3e} (tol 1e-10)")));

    let (mut comp_bad, mut conv_bad) = (0, 0);
    for _ in 0..50 {
        let d = 1 + s.index(4);
        let k = 2 + s.index(3);
        let ops: Vec<_> = (0..k).map(|_| random_firmly_nonexpansive(&mut s, d)).collect();
        let comp = OperatorSpec::compose(ops.clone()).expect("same dimension");
        if !check_nonexpansive(&comp, d, &mut s, 200, opts.monte_carlo_tol).expect("dims").passed() {
            comp_bad += 1;
        }
        let conv = OperatorSpec::convex_combine(random_weights(&mut s, k), ops).expect("same dimension");
        if !check_firmly_nonexpansive(&conv, d, &mut s, 200, opts.monte_carlo_tol).expect("dims").passed() {
            conv_bad += 1;
        }
    }
    rows.push(row("operators", "compositions nonexpansive", comp_bad == 0, format!("{comp_bad} of 50 random compositions fail")));
    rows.push(row("operators", "convex combinations firmly nonexpansive", conv_bad == 0, format!("{conv_bad} of 50 fail")));

    let mut worst = f64::INFINITY;
    let mut failure = None;
    for e in reference_zoo().into_iter().filter(|e| e.op.claimed_firmly_nonexpansive()) {
        let pts: Vec<Point> = (0..50).map(|_| s.point(e.dim)).collect();
        match minty_graph_sample(&e.op, &pts) {
            Ok(m) => worst = worst.min(m.min_cross_product().map_or(0.0, |c| c.2)),
            Err(err) => failure = Some(format!("{}: {err}", e.name)),
        }
    }
    rows.push(row(
        "operators",
        "Minty pairs monotone",
        failure.is_none(),
        failure.unwrap_or_else(|| format!("min cross product {worst:.3e}")),
    ));
    rows
}

fn productspace_rows(opts: &VerifyOptions) -> Vec<VerifyRow> {
    let mut s = Sampler::seeded(opts.seed + 3);
    let mut rows = Vec::new();
    match mdagger_grid(&[2, 3, 4, 5, 6], &[1, 2, 3], 100, &mut s) {
        Ok(r) => {
            let t = opts.algebraic_tol;
            rows.push(row("productspace", "M L = Id on Δ⊥", r.section <= t, format!("max error {:.3e}", r.section)));
            rows.push(row("productspace", "range of L in Δ⊥", r.section_block_sum <= t, format!("max block sum {:.3e}", r.section_block_sum)));
            rows.push(row("productspace", "closed-form M† matches oracle", r.closed_vs_oracle <= 1e-10, format!("max entry difference {:.3e}", r.closed_vs_oracle)));
            rows.push(row("productspace", "Penrose identities", r.penrose <= 1e-9, format!("max residual {:.3e}", r.penrose)));
            rows.push(row("productspace", "M†M = MM† = P_Δ⊥", r.projection <= 1e-10, format!("max error {:.3e}", r.projection)));
            rows.push(row("productspace", "M† = L P_Δ⊥", r.via_l <= 1e-10, format!("max error {:.3e}", r.via_l)));
            rows.push(row("productspace", "rank of M is (m-1)d", r.rank_mismatches == 0, format!("{} mismatches", r.rank_mismatches)));
        }
        Err(e) => rows.push(row("productspace", "M† grid", false, e.to_string())),
    }

    let mut diag = 0.0f64;
    for _ in 0..100 {
        let (m, d) = (2 + s.index(5), 1 + s.index(3));
        diag = diag.max(apply_m(&diagonal_embed(&s.point(d), m).expect("m >= 2")).norm_x());
    }
    rows.push(row("productspace", "M annihilates the diagonal", diag == 0.0, format!("max norm {diag:.3e}")));

    let (mut firm_bad, mut dich_bad) = (0, 0);
    for _ in 0..50 {
        let (m, d) = (2 + s.index(5), 1 + s.index(3));
        let w = random_weights(&mut s, m);
        if !check_q_firmly_nonexpansive_in_y(&w, d, &mut s, 200, opts.monte_carlo_tol).passed() {
            firm_bad += 1;
        }
        let v = check_q_nonexpansive_in_x(&w, d).expect("d >= 1");
        let u = check_q_nonexpansive_in_x(&Weights::uniform(m).expect("m >= 2"), d).expect("d >= 1");
        if v.nonexpansive != w.is_uniform(1e-12) || !u.nonexpansive {
            dich_bad += 1;
        }
    }
    rows.push(row("productspace", "Q firmly nonexpansive in the weighted space", firm_bad == 0, format!("{firm_bad} of 50 weight vectors fail")));
    rows.push(row("productspace", "Q nonexpansive in X iff weights uniform", dich_bad == 0, format!("{dich_bad} of 50 misclassified")));
    rows
}

fn dynamics_rows(opts: &VerifyOptions) -> Vec<VerifyRow> {
    let mut s = Sampler::seeded(opts.seed + 4);
    let th = RegularityThresholds::default();
    let mut rows = Vec::new();
    let random_ops = |s: &mut Sampler, d: usize, k: usize| -> Vec<OperatorSpec> {
        (0..k).map(|_| random_firmly_nonexpansive(s, d)).collect()
    };

    let mut rise = f64::NEG_INFINITY;
    for _ in 0..20 {
        let d = 1 + s.index(3);
        let k = 1 + s.index(3);
        let op = OperatorSpec::compose(random_ops(&mut s, d, k)).expect("dims");
        let t = iterate(&op, &s.point(d), 500, -1.0).expect("valid");
        rise = t.displacements().windows(2).map(|w| w[1] - w[0]).fold(rise, f64::max);
    }
    rows.push(row("dynamics", "displacements nonincreasing", rise <= opts.algebraic_tol, format!("largest increase {rise:.3e}")));

    let mut spread = 0.0f64;
    let mut pairs = 0;
    for _ in 0..10 {
        let d = 1 + s.index(3);
        let op = OperatorSpec::compose(vec![random_projector(&mut s, d), random_projector(&mut s, d)]).expect("dims");
        let a = drift_vector(&iterate(&op, &s.point(d), 5000, -1.0).expect("valid")).expect("long");
        let b = drift_vector(&iterate(&op, &s.point(d), 5000, -1.0).expect("valid")).expect("long");
        if a.converged && b.converged {
            spread = spread.max(a.vector.distance(&b.vector));
            pairs += 1;
        }
    }
    rows.push(row("dynamics", "drift independent of start", spread <= 1e-6, format!("max difference {spread:.3e} over {pairs} converged pairs")));

    let (mut comp_bad, mut conv_bad) = (0, 0);
    for _ in 0..20 {
        let d = 1 + s.index(3);
        let k = 2 + s.index(3);
        let ops = random_ops(&mut s, d, k);
        let x0 = s.point(d);
        if !composition_check(&ops, &x0, 1000, &th).expect("valid").holds() {
            comp_bad += 1;
        }
        let w = random_weights(&mut s, k);
        if !convex_combination_check(&ops, &w, &x0, 1000, &th).expect("valid").holds() {
            conv_bad += 1;
        }
    }
    rows.push(row("dynamics", "composition of regular maps regular", comp_bad == 0, format!("{comp_bad} of 20 fail")));
    rows.push(row("dynamics", "convex combination of regular maps regular", conv_bad == 0, format!("{conv_bad} of 20 fail")));

    let mut gap = 0.0f64;
    for _ in 0..10 {
        let d = 1 + s.index(3);
        let k = 2 + s.index(3);
        let ops = random_ops(&mut s, d, k);
        let w = random_weights(&mut s, k);
        let l = lift_comparison(&ops, &w, &s.point(d), 200).expect("valid");
        gap = gap.max(l.max_displacement_gap).max(l.max_spread).max(l.max_block_deviation);
    }
    rows.push(row("dynamics", "lift consistent with averaged orbit", gap <= opts.algebraic_tol, format!("max deviation {gap:.3e}")));

    let (mut tele, mut tri_bad) = (0.0f64, 0);
    for _ in 0..1000 {
        let d = 1 + s.index(3);
        let m = 2 + s.index(4);
        let ops = random_ops(&mut s, d, m);
        let sweep = cyclic_sweep(&ops, &random_product(&mut s, m, d)).expect("shapes");
        tele = tele.max(sweep.telescoping_error);
        if !(sweep.triangle_ok() && sweep.profile_ok() && sweep.m2_bound_ok()) {
            tri_bad += 1;
        }
    }
    rows.push(row("dynamics", "sweep residuals telescope", tele <= opts.algebraic_tol, format!("max error {tele:.3e}")));
    rows.push(row("dynamics", "sweep residual bounds", tri_bad == 0, format!("{tri_bad} of 1000 sweeps violate")));

    let mut s2 = Sampler::seeded(opts.seed + 5).with_range(-20.0, 20.0);
    let (mut stat, mut outside) = (0.0f64, 0);
    for _ in 0..1000 {
        let p = s2.point(2);
        let q = project_epi_exp(&p).expect("finite input");
        let (a, b) = (p.coords()[0], p.coords()[1]);
        if b < a.exp() {
            stat = stat.max(epi_exp_stationarity(q.coords()[0], a, b).abs());
        }
        if !SetSpec::EpiExp.contains(&q, 1e-12) {
            outside += 1;
        }
    }
    rows.push(row(
        "operators",
        "epi exp projection stationary and feasible",
        stat <= opts.algebraic_tol && outside == 0,
        format!("max residual {stat:.3e}, {outside} outside"),
    ));
    rows
}

fn scenario_rows(opts: &VerifyOptions) -> Vec<VerifyRow> {
    let mut rows = Vec::new();
    if !opts.scenarios {
        return rows;
    }
    for sc in Scenario::ALL {
        let cfg = ScenarioConfig::default_for(sc);
        match run_scenario(&cfg) {
            Ok(run) => {
                let s = &run.summary;
                let detail = match s.checks.iter().find(|c| !c.passed) {
                    None => format!("{} checks", s.checks.len()),
                    Some(c) => format!("{}: {}", c.name, c.detail),
                };
                rows.push(row("cli", format!("scenario {sc}"), s.passed(), detail));
            }
            Err(e) => rows.push(row("cli", format!("scenario {sc}"), false, e.to_string())),
        }
    }
    let csv = || -> Result<Vec<u8>, CliError> {
        let run = run_scenario(&ScenarioConfig::default_for(Scenario::LiftConsistency))?;
        let mut buf = Vec::new();
        for t in &run.traces {
            write_csv(&t.trace, &mut buf).map_err(|e| CliError::Runtime(e.to_string()))?;
        }
        Ok(buf)
    };
    let same = matches!((csv(), csv()), (Ok(a), Ok(b)) if a == b);
    rows.push(row("cli", "same config gives identical CSV", same, "lift-consistency run twice"));
    rows
}
