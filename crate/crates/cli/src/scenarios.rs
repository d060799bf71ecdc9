//! Built-in scenarios.

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use firmlab_core::dynamics::{
    approx_fixed_point_residual, classify, cyclic_sweep, drift_vector, iterate_strided,
    lift_comparison, Classification, IterationTrace, RegularityReport, COMBINED_HORIZON_FACTOR,
};
use firmlab_core::linalg::block_sum;
use firmlab_core::operators::{OperatorKind, Sampler};
use firmlab_core::productspace::{
    apply_l, apply_m, apply_m_dagger, apply_q, as_matrix, check_q_firmly_nonexpansive_in_y,
    check_q_nonexpansive_in_x, check_q_nonexpansive_in_x_sampled, penrose_residuals,
    project_diagonal, project_diagonal_perp, pseudoinverse_oracle, rank_factorization,
    BlockLinearOp, BlockOpKind,
};
use firmlab_core::{OperatorSpec, Point, ProductPoint, SetSpec, Weights};

use crate::config::ScenarioConfig;
use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Scenario {
    TranslationsCancel,
    EpiExpLine,
    CyclicProjections,
    AveragedProjections,
    QExpansionWitness,
    MDaggerVerify,
    LiftConsistency,
    ParallelHyperplanes,
}

impl Scenario {
    pub const ALL: [Scenario; 8] = [
        Scenario::TranslationsCancel,
        Scenario::EpiExpLine,
        Scenario::CyclicProjections,
        Scenario::AveragedProjections,
        Scenario::QExpansionWitness,
        Scenario::MDaggerVerify,
        Scenario::LiftConsistency,
        Scenario::ParallelHyperplanes,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::TranslationsCancel => "translations-cancel",
            Scenario::EpiExpLine => "epi-exp-line",
            Scenario::CyclicProjections => "cyclic-projections",
            Scenario::AveragedProjections => "averaged-projections",
            Scenario::QExpansionWitness => "q-expansion-witness",
            Scenario::MDaggerVerify => "mdagger-verify",
            Scenario::LiftConsistency => "lift-consistency",
            Scenario::ParallelHyperplanes => "parallel-hyperplanes",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            Scenario::TranslationsCancel => {
                "two translations, each nonregular, whose composition is the identity"
            }
            Scenario::EpiExpLine => {
                "alternating projections between the x-axis and the epigraph of exp: regular, unbounded"
            }
            Scenario::CyclicProjections => {
                "composition of projectors onto intersecting sets, with a near-fixed-point sweep"
            }
            Scenario::AveragedProjections => {
                "convex combination of projectors onto inconsistent sets, with its product-space lift"
            }
            Scenario::QExpansionWitness => {
                "weighted averaging map: expansion witness in the unweighted product space"
            }
            Scenario::MDaggerVerify => "closed-form M† against a pseudoinverse oracle over m, d grids",
            Scenario::LiftConsistency => {
                "orbit of Q∘T from a diagonal start against the orbit of the averaged map"
            }
            Scenario::ParallelHyperplanes => {
                "alternating projections between parallel hyperplanes: drift norm equals the gap"
            }
        }
    }

    pub fn uses_operators(self) -> bool {
        !matches!(self, Scenario::QExpansionWitness | Scenario::MDaggerVerify)
    }

    pub fn uses_weights(self) -> bool {
        matches!(
            self,
            Scenario::AveragedProjections | Scenario::QExpansionWitness | Scenario::LiftConsistency
        )
    }

    pub fn uses_start(self) -> bool {
        self.uses_operators()
    }

    pub fn default_operators(self) -> Vec<OperatorSpec> {
        let p = |set| OperatorSpec::projector(set).expect("built-in sets are valid");
        match self {
            Scenario::TranslationsCancel => {
                let v = pt(&[1.5, -0.25]);
                vec![OperatorSpec::translation(v.clone()), OperatorSpec::translation(-&v)]
            }
            Scenario::EpiExpLine => vec![p(SetSpec::CoordinateAxis), p(SetSpec::EpiExp)],
            Scenario::CyclicProjections => vec![
                p(SetSpec::Ball { center: pt(&[0.0, 0.0]), radius: 2.0 }),
                p(SetSpec::Halfspace { normal: pt(&[1.0, 1.0]), offset: 1.0 }),
                p(SetSpec::Hyperplane { normal: pt(&[1.0, -1.0]), offset: 0.5 }),
            ],
            Scenario::AveragedProjections => vec![
                p(SetSpec::Ball { center: pt(&[3.0, 0.0]), radius: 1.0 }),
                p(SetSpec::Halfspace { normal: pt(&[1.0, 0.0]), offset: 1.0 }),
                p(SetSpec::CoordinateAxis),
            ],
            Scenario::LiftConsistency => vec![
                OperatorSpec::prox_abs(0.5).expect("positive scale"),
                OperatorSpec::prox_quadratic(vec![vec![2.0, 1.0], vec![1.0, 1.0]]).expect("PSD"),
                p(SetSpec::EpiExp),
            ],
            Scenario::ParallelHyperplanes => vec![
                p(SetSpec::Hyperplane { normal: pt(&[3.0, 4.0]), offset: 0.0 }),
                p(SetSpec::Hyperplane { normal: pt(&[3.0, 4.0]), offset: 3.5 }),
            ],
            Scenario::QExpansionWitness | Scenario::MDaggerVerify => Vec::new(),
        }
    }

    pub fn default_weights(self) -> Option<Weights> {
        let w = |l: &[f64]| Some(Weights::new(l.to_vec()).expect("built-in weights are valid"));
        match self {
            Scenario::AveragedProjections => w(&[0.2, 0.5, 0.3]),
            Scenario::QExpansionWitness => w(&[0.25, 0.75]),
            Scenario::LiftConsistency => w(&[0.5, 0.3, 0.2]),
            _ => None,
        }
    }

    pub fn default_x0(self) -> Point {
        match self {
            Scenario::TranslationsCancel => pt(&[3.0, -2.0]),
            Scenario::EpiExpLine => pt(&[0.0, 1.0]),
            Scenario::CyclicProjections => pt(&[6.0, 5.0]),
            Scenario::AveragedProjections => pt(&[-4.0, 6.0]),
            Scenario::LiftConsistency => pt(&[4.0, -3.0]),
            Scenario::ParallelHyperplanes => pt(&[5.0, 1.0]),
            Scenario::QExpansionWitness | Scenario::MDaggerVerify => pt(&[0.0]),
        }
    }

    pub fn default_horizon(self) -> usize {
        match self {
            Scenario::EpiExpLine => 100_000,
            Scenario::CyclicProjections | Scenario::AveragedProjections => 10_000,
            Scenario::QExpansionWitness => 10_000,
            _ => 1000,
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scenario {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        Scenario::ALL
            .into_iter()
            .find(|sc| sc.name() == s)
            .ok_or_else(|| CliError::Config(format!("unknown scenario {s:?}")))
    }
}

fn pt(v: &[f64]) -> Point {
    Point::new(v.to_vec()).expect("built-in points are finite")
}

#[derive(Clone, Debug, PartialEq)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

/// Scenario-level results. Everything except `wall_time` is a pure
/// function of the config.
#[derive(Clone, Debug, PartialEq)]
pub struct RunSummary {
    pub scenario: Scenario,
    pub classification: Option<Classification>,
    pub final_displacement: Option<f64>,
    pub drift_norm: Option<f64>,
    pub norm_growth: Option<f64>,
    pub checks: Vec<CheckOutcome>,
    pub wall_time: Duration,
}

impl RunSummary {
    pub fn checks_passed(&self) -> usize {
        self.checks.iter().filter(|c| c.passed).count()
    }

    pub fn checks_failed(&self) -> usize {
        self.checks.len() - self.checks_passed()
    }

    pub fn passed(&self) -> bool {
        self.checks_failed() == 0
    }
}

/// A trace to export, with the label used in its file name.
#[derive(Clone, Debug)]
pub struct NamedTrace {
    pub label: String,
    pub trace: IterationTrace,
}

#[derive(Clone, Debug)]
pub struct ScenarioRun {
    pub summary: RunSummary,
    pub traces: Vec<NamedTrace>,
}

struct Recorder {
    checks: Vec<CheckOutcome>,
    traces: Vec<NamedTrace>,
    primary: Option<RegularityReport>,
    drift_norm: Option<f64>,
}

impl Recorder {
    fn new() -> Self {
        Recorder { checks: Vec::new(), traces: Vec::new(), primary: None, drift_norm: None }
    }

    fn check(&mut self, name: impl Into<String>, passed: bool, detail: impl Into<String>) {
        self.checks.push(CheckOutcome { name: name.into(), passed, detail: detail.into() });
    }

    fn trace(&mut self, label: impl Into<String>, trace: IterationTrace) {
        self.traces.push(NamedTrace { label: label.into(), trace });
    }
}

fn runtime(e: firmlab_core::Error) -> CliError {
    CliError::Runtime(e.to_string())
}

fn orbit(cfg: &ScenarioConfig, op: &OperatorSpec, horizon: usize) -> Result<IterationTrace, CliError> {
    iterate_strided(std::slice::from_ref(op), &cfg.x0, horizon, cfg.stop_tol, cfg.stride).map_err(runtime)
}

fn weights(cfg: &ScenarioConfig) -> Result<&Weights, CliError> {
    cfg.weights
        .as_ref()
        .ok_or_else(|| CliError::Config(format!("scenario {} needs weights", cfg.scenario)))
}

/// Executes the scenario. Output files are written separately, see
/// [`crate::output::write_run`].
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<ScenarioRun, CliError> {
    let started = Instant::now();
    let mut rec = Recorder::new();
    match cfg.scenario {
        Scenario::TranslationsCancel => translations_cancel(cfg, &mut rec)?,
        Scenario::EpiExpLine => epi_exp_line(cfg, &mut rec)?,
        Scenario::CyclicProjections => cyclic_projections(cfg, &mut rec)?,
        Scenario::AveragedProjections => averaged_projections(cfg, &mut rec)?,
        Scenario::QExpansionWitness => q_expansion_witness(cfg, &mut rec)?,
        Scenario::MDaggerVerify => mdagger_verify(cfg, &mut rec)?,
        Scenario::LiftConsistency => lift_consistency(cfg, &mut rec)?,
        Scenario::ParallelHyperplanes => parallel_hyperplanes(cfg, &mut rec)?,
    }
    let p = rec.primary.as_ref();
    let summary = RunSummary {
        scenario: cfg.scenario,
        classification: p.map(|r| r.classification),
        final_displacement: p.map(|r| r.final_displacement),
        drift_norm: rec.drift_norm.or(p.map(|r| r.drift_estimate.norm())),
        norm_growth: p.map(|r| r.iterate_norm_growth),
        checks: rec.checks,
        wall_time: started.elapsed(),
    };
    Ok(ScenarioRun { summary, traces: rec.traces })
}

fn verdict(r: &RegularityReport) -> String {
    format!(
        "{} (final displacement {:.3e}, slope {:.3}, horizon {})",
        r.classification, r.final_displacement, r.displacement_slope, r.horizon
    )
}

/// Classifies every component at the configured horizon and the combined
/// operator at ten times that, recording the traces.
fn components_and_combined(
    cfg: &ScenarioConfig,
    combined: &OperatorSpec,
    rec: &mut Recorder,
) -> Result<(Vec<RegularityReport>, RegularityReport, IterationTrace), CliError> {
    let mut reports = Vec::new();
    for (i, op) in cfg.operators.iter().enumerate() {
        let t = orbit(cfg, op, cfg.horizon)?;
        reports.push(classify(&t, &cfg.thresholds));
        rec.trace(format!("component-{}", i + 1), t);
    }
    let t = orbit(cfg, combined, cfg.horizon.saturating_mul(COMBINED_HORIZON_FACTOR))?;
    let report = classify(&t, &cfg.thresholds);
    Ok((reports, report, t))
}

fn translations_cancel(cfg: &ScenarioConfig, rec: &mut Recorder) -> Result<(), CliError> {
    let composition = OperatorSpec::compose(cfg.operators.clone()).map_err(runtime)?;
    let (reports, report, trace) = components_and_combined(cfg, &composition, rec)?;
    for (i, (r, t)) in reports.iter().zip(&rec.traces).enumerate() {
        let k = i + 1;
        rec.checks.push(CheckOutcome {
            name: format!("component {k} nonregular"),
            passed: r.classification == Classification::Nonregular,
            detail: verdict(r),
        });
        let d0 = t.trace.displacements()[0];
        let constant = t.trace.displacements().iter().all(|d| *d == d0);
        let mut detail = format!("every displacement equals {d0:.17e}");
        let mut exact = constant;
        if let OperatorKind::Translation(v) = cfg.operators[i].kind() {
            exact &= d0 == v.norm();
            detail.push_str(&format!(", ‖v‖ = {:.17e}", v.norm()));
        }
        rec.checks.push(CheckOutcome {
            name: format!("component {k} displacement constant"),
            passed: exact,
            detail,
        });
    }
    rec.check("composition regular", report.classification == Classification::Regular, verdict(&report));
    let zero = trace.displacements().iter().all(|d| *d == 0.0);
    rec.check(
        "composition displacement exactly zero",
        zero,
        format!("max displacement {:.3e}", trace.displacements().iter().copied().fold(0.0, f64::max)),
    );
    rec.trace("composition", trace);
    rec.primary = Some(report);
    Ok(())
}

fn epi_exp_line(cfg: &ScenarioConfig, rec: &mut Recorder) -> Result<(), CliError> {
    let s = OperatorSpec::compose(cfg.operators.clone()).map_err(runtime)?;
    let t = orbit(cfg, &s, cfg.horizon)?;
    let r = classify(&t, &cfg.thresholds);
    let worst_rise = t
        .displacements()
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::NEG_INFINITY, f64::max);
    rec.check(
        "displacements nonincreasing",
        worst_rise <= 1e-12,
        format!("largest increase {worst_rise:.3e} (slack 1e-12)"),
    );
    rec.check(
        "final displacement at most 1e-2",
        r.final_displacement <= 1e-2,
        format!("{:.6e}", r.final_displacement),
    );
    rec.check("regular", r.classification == Classification::Regular, verdict(&r));
    rec.check(
        "norms unbounded",
        r.unbounded_norms,
        format!("‖x_N‖ − ‖x_0‖ = {:.6e}", r.iterate_norm_growth),
    );
    let x_n = t.final_point().coords()[0];
    rec.check("first coordinate at most -2", x_n <= -2.0, format!("x_N = {x_n:.6e}"));
    let from = t.len() / 10;
    let tail: Vec<f64> = t
        .points()
        .iter()
        .filter(|(n, _)| *n >= from)
        .map(|(_, p)| p.coords()[0])
        .collect();
    rec.check(
        "first coordinate strictly decreasing over the last decade",
        tail.len() >= 2 && tail.windows(2).all(|w| w[1] < w[0]),
        format!("{} stored iterates from n = {from}", tail.len()),
    );
    let residual = approx_fixed_point_residual(&s, t.final_point()).map_err(runtime)?;
    rec.check(
        "zero residual not attained",
        residual > 0.0,
        format!("‖x_N − S x_N‖ = {residual:.6e}"),
    );
    rec.trace("composition", t);
    rec.primary = Some(r);
    Ok(())
}

fn cyclic_projections(cfg: &ScenarioConfig, rec: &mut Recorder) -> Result<(), CliError> {
    let s = OperatorSpec::compose(cfg.operators.clone()).map_err(runtime)?;
    let (reports, report, trace) = components_and_combined(cfg, &s, rec)?;
    let all_regular = reports.iter().all(|r| r.classification == Classification::Regular);
    rec.check("components regular", all_regular, format!("{} components", reports.len()));
    rec.check("composition regular", report.classification == Classification::Regular, verdict(&report));
    rec.check(
        "composition norms bounded",
        !report.unbounded_norms,
        format!("‖x_N‖ − ‖x_0‖ = {:.6e}", report.iterate_norm_growth),
    );
    let residual = approx_fixed_point_residual(&s, trace.final_point()).map_err(runtime)?;
    rec.check(
        "residual vanishes",
        residual <= cfg.thresholds.tol_reg,
        format!("‖x_N − S x_N‖ = {residual:.3e}"),
    );
    rec.trace("composition", trace);

    // the last sweep of the cyclic scheme as an approximate solution tuple
    let m = cfg.operators.len();
    let cyc = iterate_strided(&cfg.operators, &cfg.x0, cfg.horizon * m, cfg.stop_tol, cfg.stride)
        .map_err(runtime)?;
    let tail: Vec<Point> = cyc.tail().cloned().collect();
    if tail.len() > m {
        let tuple = ProductPoint::new(tail[tail.len() - m..].to_vec()).map_err(runtime)?;
        let sweep = cyclic_sweep(&cfg.operators, &tuple).map_err(runtime)?;
        rec.check(
            "sweep telescoping identity",
            sweep.telescoping_error <= 1e-12,
            format!("error {:.3e}", sweep.telescoping_error),
        );
        rec.check("sweep triangle inequality", sweep.triangle_ok(), format!("Σ‖e_i‖ = {:.3e}", sweep.sum_e_norms));
        rec.check(
            "sweep residual within m²ε",
            sweep.m2_bound_ok(),
            format!(
                "‖x − T_m⋯T_1 x‖ = {:.3e}, ε = {:.3e}",
                sweep.composite_residual.norm(),
                sweep.eps_hat
            ),
        );
    } else {
        rec.check("sweep available", false, "cyclic trace shorter than one sweep");
    }
    rec.trace("cyclic", cyc);
    rec.primary = Some(report);
    Ok(())
}

fn averaged_projections(cfg: &ScenarioConfig, rec: &mut Recorder) -> Result<(), CliError> {
    let w = weights(cfg)?;
    let avg = OperatorSpec::convex_combine(w.clone(), cfg.operators.clone()).map_err(runtime)?;
    let (reports, report, trace) = components_and_combined(cfg, &avg, rec)?;
    let all_regular = reports.iter().all(|r| r.classification == Classification::Regular);
    rec.check("components regular", all_regular, format!("{} components", reports.len()));
    rec.check("combination regular", report.classification == Classification::Regular, verdict(&report));
    rec.trace("combination", trace);
    lift_checks(cfg, w, cfg.horizon.min(1000), rec)?;
    rec.primary = Some(report);
    Ok(())
}

fn lift_checks(cfg: &ScenarioConfig, w: &Weights, steps: usize, rec: &mut Recorder) -> Result<(), CliError> {
    let lift = lift_comparison(&cfg.operators, w, &cfg.x0, steps).map_err(runtime)?;
    rec.check(
        "lift displacement matches averaged map",
        lift.max_displacement_gap <= 1e-12,
        format!("max gap {:.3e} over {steps} steps", lift.max_displacement_gap),
    );
    rec.check(
        "lift stays diagonal",
        lift.max_spread <= 1e-12,
        format!("max spread {:.3e}", lift.max_spread),
    );
    rec.check(
        "lift blocks equal the averaged orbit",
        lift.max_block_deviation <= 1e-12,
        format!("max deviation {:.3e}", lift.max_block_deviation),
    );
    Ok(())
}

fn lift_consistency(cfg: &ScenarioConfig, rec: &mut Recorder) -> Result<(), CliError> {
    let w = weights(cfg)?;
    lift_checks(cfg, w, cfg.horizon, rec)?;
    let avg = OperatorSpec::convex_combine(w.clone(), cfg.operators.clone()).map_err(runtime)?;
    let t = orbit(cfg, &avg, cfg.horizon)?;
    rec.primary = Some(classify(&t, &cfg.thresholds));
    rec.trace("combination", t);
    Ok(())
}

fn q_expansion_witness(cfg: &ScenarioConfig, rec: &mut Recorder) -> Result<(), CliError> {
    let w = weights(cfg)?;
    let d = cfg.dim();
    let m = w.len();
    let mut sampler = Sampler::seeded(cfg.seed);
    let verdict = check_q_nonexpansive_in_x(w, d).map_err(runtime)?;
    let ss = w.sum_of_squares();
    if w.is_uniform(1e-12) {
        rec.check("uniform weights: Q nonexpansive", verdict.nonexpansive, format!("m Σλ² = {:.17}", verdict.ratio));
    } else {
        match &verdict.witness {
            Some(wit) => {
                let pred_qx = m as f64 * ss * ss;
                let err_qx = (wit.norm_sq_qx - pred_qx).abs() / pred_qx;
                let err_x = (wit.norm_sq_x - ss).abs() / ss;
                let ratio = wit.norm_sq_qx / wit.norm_sq_x;
                let err_ratio = (ratio - m as f64 * ss).abs() / (m as f64 * ss);
                rec.check(
                    "expansion witness",
                    !verdict.nonexpansive && wit.norm_sq_qx > wit.norm_sq_x,
                    format!("‖Qx‖² = {:.17e} > ‖x‖² = {:.17e}", wit.norm_sq_qx, wit.norm_sq_x),
                );
                rec.check(
                    "witness matches m(Σλ²)²",
                    err_qx.max(err_x).max(err_ratio) <= 1e-12,
                    format!("relative errors {err_qx:.2e}, {err_x:.2e}, ratio {err_ratio:.2e}"),
                );
            }
            None => rec.check("expansion witness", false, "no witness for non-uniform weights"),
        }
    }
    let uniform = Weights::uniform(m).map_err(runtime)?;
    let n = cfg.horizon;
    let report = check_q_nonexpansive_in_x_sampled(&uniform, d, &mut sampler, n, 1e-9);
    rec.check(
        "uniform weights: sampled pairs nonexpansive",
        report.passed(),
        format!("{} pairs, {} violations", report.samples, report.violations.len()),
    );
    let report = check_q_firmly_nonexpansive_in_y(w, d, &mut sampler, n, 1e-9);
    rec.check(
        "Q firmly nonexpansive in the weighted space",
        report.passed(),
        format!("{} pairs, {} violations", report.samples, report.violations.len()),
    );
    let mut mismatch = 0;
    for _ in 0..100 {
        let p = ProductPoint::new((0..m).map(|_| sampler.point(d)).collect()).map_err(runtime)?;
        if apply_q(&p, &uniform).map_err(runtime)? != project_diagonal(&p) {
            mismatch += 1;
        }
    }
    rec.check("uniform Q equals P_Δ", mismatch == 0, format!("{mismatch} of 100 samples differ"));
    Ok(())
}

/// Worst values of the M-related identities over an `(m, d)` grid.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct MDaggerReport {
    pub pairs: usize,
    pub closed_vs_oracle: f64,
    pub penrose: f64,
    pub rank_mismatches: usize,
    pub section: f64,
    pub section_block_sum: f64,
    pub projection: f64,
    pub via_l: f64,
}

/// Checks the closed-form M† and the right inverse `L` on every `(m, d)`
/// pair, with `samples` random points per pair.
pub fn mdagger_grid(
    ms: &[usize],
    ds: &[usize],
    samples: usize,
    sampler: &mut Sampler,
) -> Result<MDaggerReport, CliError> {
    let mut out = MDaggerReport::default();
    for &m in ms {
        for &d in ds {
            let op = |k| BlockLinearOp::new(k, m, d).map_err(runtime);
            let a = as_matrix(&op(BlockOpKind::M)?).map_err(runtime)?;
            let closed = as_matrix(&op(BlockOpKind::MDagger)?).map_err(runtime)?;
            let oracle = pseudoinverse_oracle(&a).map_err(runtime)?;
            out.closed_vs_oracle = out.closed_vs_oracle.max((&closed - &oracle).amax());
            let pen = penrose_residuals(&a, &closed);
            out.penrose = pen.iter().copied().fold(out.penrose, f64::max);
            if rank_factorization(&a).map_err(runtime)?.rank() != (m - 1) * d {
                out.rank_mismatches += 1;
            }
            for _ in 0..samples {
                let p = ProductPoint::new((0..m).map(|_| sampler.point(d)).collect()).map_err(runtime)?;
                let y = project_diagonal_perp(&p);
                let ly = apply_l(&y).map_err(runtime)?;
                out.section = out.section.max((&apply_m(&ly) - &y).norm_x());
                out.section_block_sum = out.section_block_sum.max(block_sum(&ly).norm());
                let md = apply_m_dagger(&p);
                let left = (&apply_m_dagger(&apply_m(&p)) - &y).norm_x();
                let right = (&apply_m(&md) - &y).norm_x();
                out.projection = out.projection.max(left).max(right);
                out.via_l = out.via_l.max((&md - &ly).norm_x());
            }
            out.pairs += 1;
        }
    }
    Ok(out)
}

fn mdagger_verify(cfg: &ScenarioConfig, rec: &mut Recorder) -> Result<(), CliError> {
    let ms: Vec<usize> = match cfg.m {
        Some(m) => vec![m],
        None => (2..=6).collect(),
    };
    let ds: Vec<usize> = match cfg.d {
        Some(d) => vec![d],
        None => (1..=3).collect(),
    };
    let mut sampler = Sampler::seeded(cfg.seed);
    let r = mdagger_grid(&ms, &ds, 100, &mut sampler)?;
    let grid = format!("{} (m, d) pairs", r.pairs);
    rec.check(
        "closed form matches oracle",
        r.closed_vs_oracle <= 1e-10,
        format!("max entry difference {:.3e} over {grid}", r.closed_vs_oracle),
    );
    rec.check("Penrose identities", r.penrose <= 1e-9, format!("max residual {:.3e}", r.penrose));
    rec.check("rank of M is (m-1)d", r.rank_mismatches == 0, format!("{} mismatches", r.rank_mismatches));
    rec.check("M L = Id on Δ⊥", r.section <= 1e-12, format!("max error {:.3e}", r.section));
    rec.check(
        "range of L in Δ⊥",
        r.section_block_sum <= 1e-12,
        format!("max block sum {:.3e}", r.section_block_sum),
    );
    rec.check(
        "M†M = MM† = P_Δ⊥",
        r.projection <= 1e-10,
        format!("max error {:.3e}", r.projection),
    );
    rec.check("M† = L P_Δ⊥", r.via_l <= 1e-10, format!("max error {:.3e}", r.via_l));
    Ok(())
}

/// Gap between two parallel hyperplanes, if both operators are projectors
/// onto such.
fn hyperplane_gap(ops: &[OperatorSpec]) -> Option<f64> {
    let unit = |op: &OperatorSpec| match op.kind() {
        OperatorKind::Projector(SetSpec::Hyperplane { normal, offset }) => {
            let n = normal.norm();
            Some((normal.scale(1.0 / n), offset / n))
        }
        _ => None,
    };
    let [a, b] = ops else { return None };
    let ((u1, c1), (u2, c2)) = (unit(a)?, unit(b)?);
    let cos = u1.dot(&u2);
    if (cos.abs() - 1.0).abs() > 1e-12 {
        return None;
    }
    Some((c2 - cos.signum() * c1).abs())
}

fn parallel_hyperplanes(cfg: &ScenarioConfig, rec: &mut Recorder) -> Result<(), CliError> {
    let gap = hyperplane_gap(&cfg.operators).ok_or_else(|| {
        CliError::Config("parallel-hyperplanes needs two projectors onto parallel hyperplanes".into())
    })?;
    let mut sampler = Sampler::seeded(cfg.seed);
    let second = sampler.point(cfg.dim());
    let m = cfg.operators.len();
    let mut drifts = Vec::new();
    for (label, x0) in [("cyclic-start-1", cfg.x0.clone()), ("cyclic-start-2", second)] {
        let t = iterate_strided(&cfg.operators, &x0, cfg.horizon * m, cfg.stop_tol, cfg.stride)
            .map_err(runtime)?;
        let drift = drift_vector(&t).map_err(runtime)?;
        rec.check(
            format!("{label}: drift norm equals gap"),
            (drift.norm() - gap).abs() <= 1e-6 && drift.converged,
            format!("‖drift‖ = {:.17e}, gap = {gap:.17e}, converged = {}", drift.norm(), drift.converged),
        );
        drifts.push(drift.vector);
        rec.trace(label, t);
    }
    let spread = drifts[0].distance(&drifts[1]);
    rec.check("drift independent of start", spread <= 2e-6, format!("difference {spread:.3e}"));
    rec.drift_norm = Some(drifts[0].norm());

    let s = OperatorSpec::compose(cfg.operators.clone()).map_err(runtime)?;
    let t = orbit(cfg, &s, cfg.horizon)?;
    let r = classify(&t, &cfg.thresholds);
    rec.check(
        "composition regular with zero drift",
        r.classification == Classification::Regular && r.drift_estimate.norm() <= 1e-12,
        format!("{}, ‖drift‖ = {:.3e}", verdict(&r), r.drift_estimate.norm()),
    );
    rec.trace("composition", t);
    rec.primary = Some(r);
    Ok(())
}
