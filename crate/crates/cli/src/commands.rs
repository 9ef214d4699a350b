//! One function per subcommand. Each returns its records plus any invariant
//! violations found along the way; the caller prints the records first.

use qcoin::bounds::{
    bias_from_report, loss_sweep, merit_from_params_with, optimize_alpha, reference_values,
    AbortScaling, AliceBoundForm, MeritReport,
};
use qcoin::classical::{
    audit_random_trees, eval_lemma2, eval_tree, make_correct_spec, make_saturating_spec,
    verify_tj_monotone, ClassicalReport, ProtocolTree,
};
use qcoin::montecarlo::{run_batch, BatchResult, Target};
use qcoin::optics::{
    alice_cheat_bound, alice_cheat_bound_tight, bob_cheat_bound, derive_intensities,
    homodyne_success, overlap_sq,
};
use qcoin::protocol::{predict, AliceKind, BobKind};
use qcoin::{Bit, ExperimentParams, Outcome};

use crate::config::{ClassicalSection, FormName, RunConfig};
use crate::record::Record;
use crate::CliError;

const MERIT_TOL: f64 = 1e-12;

#[derive(Debug, Default)]
pub struct Output {
    pub records: Vec<Record>,
    pub warnings: Vec<String>,
    pub violations: Vec<String>,
}

impl Output {
    fn push(&mut self, record: Record) {
        self.records.push(record);
    }
}

fn symbol(o: Outcome) -> &'static str {
    match o {
        Outcome::Zero => "0",
        Outcome::One => "1",
        Outcome::Abort => "abort",
    }
}

fn params_record(params: &ExperimentParams, measured_abort: Option<f64>) -> Record {
    let r = Record::new("params")
        .with("alpha_sq", params.alpha_sq)
        .with("att_transmission_db", params.att_transmission_db)
        .with("att_bob_db", params.att_bob_db)
        .with("detector_efficiency", params.detector_efficiency)
        .with("qber_per_photon", params.qber_per_photon)
        .with("dark_count_prob", params.dark_count_prob);
    match measured_abort {
        Some(m) => r.with("measured_abort", m),
        None => r,
    }
}

fn merit_record(form: AliceBoundForm, report: &MeritReport) -> Record {
    let bias = bias_from_report(report);
    Record::new("merit")
        .with("alice_bound", form.name())
        .with("p_star_0", report.p_star_0)
        .with("p_star_1", report.p_star_1)
        .with("p_0_star", report.p_0_star)
        .with("p_1_star", report.p_1_star)
        .with("p_abort", report.p_abort_honest)
        .with("merit", report.merit)
        .with("eps_alice", bias.eps_alice)
        .with("eps_bob", bias.eps_bob)
}

fn check_report(out: &mut Output, context: &str, report: &MeritReport) {
    let ceiling = reference_values().quantum_merit_ceiling;
    if !report.is_consistent() {
        out.violations
            .push(format!("{context}: inconsistent merit report {report:?}"));
    }
    if report.merit > ceiling + MERIT_TOL {
        out.violations.push(format!(
            "{context}: merit {} exceeds the quantum ceiling {ceiling}",
            report.merit
        ));
    }
}

pub fn bounds(config: &RunConfig) -> Result<Output, CliError> {
    let params = config.params()?;
    let measured = config.measured_abort();
    let mut out = Output::default();
    out.push(params_record(&params, measured));

    let d = derive_intensities(&params);
    let overlap = overlap_sq(params.alpha_sq);
    out.push(
        Record::new("optics")
            .with("overlap_sq", overlap)
            .with("overlap", overlap.sqrt())
            .with("mu_at_detector", d.mu_at_detector)
            .with("mu_leak", d.mu_leak)
            .with("effective_intensity", d.effective_intensity)
            .with("visibility", params.visibility()),
    );
    out.push(
        Record::new("cheat_bounds")
            .with("alice_published", alice_cheat_bound(&params))
            .with("alice_tight", alice_cheat_bound_tight(&params))
            .with("bob_helstrom", bob_cheat_bound(params.alpha_sq))
            .with("bob_homodyne", homodyne_success(params.alpha_sq)),
    );
    let model = predict::honest_abort(&params);
    out.push(
        Record::new("abort")
            .with("p_abort_model", model)
            .with("p_abort_used", measured.unwrap_or(model))
            .with(
                "source",
                if measured.is_some() {
                    "measured"
                } else {
                    "model"
                },
            ),
    );
    for form in [AliceBoundForm::Published, AliceBoundForm::Tight] {
        let report = merit_from_params_with(&params, measured, form)?;
        check_report(&mut out, form.name(), &report);
        out.push(merit_record(form, &report));
    }
    let refs = reference_values();
    out.push(
        Record::new("reference")
            .with("quantum_merit_ceiling", refs.quantum_merit_ceiling)
            .with("ambainis_merit", refs.ambainis_merit)
            .with("pure_pair_merit_ceiling", refs.pure_pair_merit_ceiling)
            .with("kitaev_product", refs.kitaev_product)
            .with("kitaev_cheat_probability", refs.kitaev_cheat_probability)
            .with("kitaev_bias", refs.kitaev_bias)
            .with("pure_pair_bias_sq_sum", refs.pure_pair_bias_sq_sum),
    );
    if params.alpha_sq == 0.0 {
        out.warnings
            .push("degenerate: alpha_sq = 0 sends vacuum, so Alice always wins (bound 1.0)".into());
        out.push(
            Record::new("warning")
                .with("kind", "degenerate")
                .with("reason", "zero-signal-intensity"),
        );
    }
    Ok(out)
}

fn target_bit(value: u8) -> Result<Bit, CliError> {
    match value {
        0 => Ok(Bit::Zero),
        1 => Ok(Bit::One),
        other => Err(CliError::Config(format!(
            "[simulate]: target_bit = {other}, expected 0 or 1"
        ))),
    }
}

fn batch_records(out: &mut Output, batch: &BatchResult) {
    for x in Outcome::ALL {
        for y in Outcome::ALL {
            out.push(
                Record::new("cell")
                    .with("alice", symbol(x))
                    .with("bob", symbol(y))
                    .with("count", batch.count(x, y)),
            );
        }
    }
    out.push(
        Record::new("outputs")
            .with("alice_0", batch.alice_count(Outcome::Zero))
            .with("alice_1", batch.alice_count(Outcome::One))
            .with("alice_abort", batch.alice_count(Outcome::Abort))
            .with("bob_0", batch.bob_count(Outcome::Zero))
            .with("bob_1", batch.bob_count(Outcome::One))
            .with("bob_abort", batch.bob_count(Outcome::Abort))
            .with("clicks", batch.clicks),
    );
    let e = &batch.estimate;
    out.push(
        Record::new("estimate")
            .with("target", batch.target.label())
            .with("successes", e.successes)
            .with("trials", e.trials)
            .with("estimate", e.estimate)
            .with("std_error", e.std_error)
            .with("ci95_lower", e.ci95.0)
            .with("ci95_upper", e.ci95.1),
    );
}

pub fn simulate(config: &RunConfig, seed: u64) -> Result<Output, CliError> {
    let params = config.params()?;
    let sim = config.section("simulate", &config.simulate)?;
    if sim.sessions == 0 {
        return Err(CliError::Config(
            "[simulate]: sessions must be at least 1".into(),
        ));
    }
    let target = target_bit(sim.target_bit)?;
    let alice = AliceKind::parse(&sim.alice, target)
        .map_err(|e| CliError::Config(format!("[simulate]: {e}")))?;
    let bob = BobKind::parse(&sim.bob, target)
        .map_err(|e| CliError::Config(format!("[simulate]: {e}")))?;
    let goal = Outcome::from(target);
    let event = if !alice.is_honest() {
        Target::BobOutputs(goal)
    } else if !bob.is_honest() {
        Target::AliceOutputs(goal)
    } else {
        Target::BothAbort
    };

    let mut out = Output::default();
    out.push(params_record(&params, None));
    out.push(
        Record::new("simulate")
            .with("alice", alice.name())
            .with("bob", bob.name())
            .with("target_bit", u64::from(sim.target_bit))
            .with("sessions", sim.sessions)
            .with("seed", seed),
    );
    let batch = run_batch(&alice, &bob, &params, sim.sessions, seed, event)?;
    batch_records(&mut out, &batch);

    let closed_form = match (&alice, &bob) {
        (AliceKind::Honest(_), BobKind::Honest(_)) => Some(predict::honest_abort(&params)),
        (AliceKind::FixedPlus(_), BobKind::Honest(_)) => Some(predict::fixed_plus_success(&params)),
        (AliceKind::Honest(_), BobKind::FixedPhase(_)) => {
            Some(predict::fixed_phase_success(&params))
        }
        (AliceKind::Honest(_), BobKind::Homodyne(_)) => {
            Some(predict::homodyne_bob_success(&params))
        }
        _ => None,
    };
    if let Some(p) = closed_form {
        out.push(
            Record::new("prediction")
                .with("closed_form", p)
                .with("z_score", batch.estimate.z_score(p)),
        );
    }
    let bound = if !alice.is_honest() && bob.is_honest() {
        Some(("alice_published", alice_cheat_bound(&params)))
    } else if alice.is_honest() && !bob.is_honest() {
        Some(("bob_helstrom", bob_cheat_bound(params.alpha_sq)))
    } else {
        None
    };
    if let Some((name, value)) = bound {
        let limit = value + 4.0 * batch.estimate.std_error;
        out.push(
            Record::new("bound_check")
                .with("bound", name)
                .with("value", value)
                .with("limit_4sigma", limit)
                .with("respected", batch.estimate.estimate <= limit),
        );
    }
    Ok(out)
}

pub fn sweep_loss(config: &RunConfig) -> Result<Output, CliError> {
    let params = config.params()?;
    let sweep = config.section("sweep", &config.sweep)?;
    let grid = sweep.grid()?;
    let scaling: AbortScaling = sweep.scaling.into();
    let result = loss_sweep(&params, &grid, scaling, config.measured_abort())?;

    let mut out = Output::default();
    out.push(params_record(&params, config.measured_abort()));
    out.push(
        Record::new("sweep")
            .with("scaling", scaling.name())
            .with("alice_bound", AliceBoundForm::Published.name())
            .with("baseline_abort", result.baseline_abort)
            .with("points", result.rows.len()),
    );
    for row in &result.rows {
        check_report(&mut out, "sweep row", &row.report);
        out.push(
            Record::new("row")
                .with("att_transmission_db", row.att_transmission_db)
                .with("p_abort", row.report.p_abort_honest)
                .with("p_star_c", row.report.p_star_0)
                .with("p_c_star", row.report.p_0_star)
                .with("merit", row.report.merit),
        );
    }
    out.push(match result.threshold_db {
        Some(db) => Record::new("threshold").with("found", true).with("db", db),
        None => Record::new("threshold").with("found", false),
    });
    Ok(out)
}

pub fn optimize(config: &RunConfig) -> Result<Output, CliError> {
    let params = config.params()?;
    let (lower, upper, forms) = match &config.optimize {
        Some(o) => (
            o.lower,
            o.upper,
            o.alice_bound
                .clone()
                .unwrap_or_else(|| vec![FormName::Tight, FormName::Published]),
        ),
        None => (0.01, 2.0, vec![FormName::Tight, FormName::Published]),
    };
    let mut out = Output::default();
    out.push(params_record(&params, None));
    for name in forms {
        let form: AliceBoundForm = name.into();
        let opt = optimize_alpha(&params, lower, upper, form)
            .map_err(|e| CliError::Config(format!("[optimize]: {e}")))?;
        let report = merit_from_params_with(&params.with_alpha_sq(opt.alpha_sq), None, form)?;
        check_report(&mut out, "optimum", &report);
        out.push(
            Record::new("optimum")
                .with("alice_bound", form.name())
                .with("lower", lower)
                .with("upper", upper)
                .with("alpha_sq", opt.alpha_sq)
                .with("merit", opt.merit)
                .with("p_star_c", report.p_star_0)
                .with("p_c_star", report.p_0_star)
                .with("p_abort", report.p_abort_honest),
        );
    }
    if params == ExperimentParams::ideal(params.alpha_sq) {
        // Lossless, noiseless: the tight optimum has a closed form.
        out.push(
            Record::new("ideal_closed_form")
                .with("alpha_sq", std::f64::consts::LN_2 / 4.0)
                .with("merit", reference_values().pure_pair_merit_ceiling),
        );
    }
    Ok(out)
}

fn classical_records(
    out: &mut Output,
    source: &str,
    report: &ClassicalReport,
    tree: &ProtocolTree,
) {
    let merit = report.merit().unwrap_or(f64::NAN);
    let correct = report.is_correct(1e-9);
    out.push(
        Record::new("classical")
            .with("source", source)
            .with("correct", correct)
            .with("p00", report.p00)
            .with("p11", report.p11)
            .with("p_perp_perp", report.p_perp_perp)
            .with("p_star_0", report.p_star_0)
            .with("p_star_1", report.p_star_1)
            .with("p_0_star", report.p_0_star)
            .with("p_1_star", report.p_1_star)
            .with("merit", merit),
    );
    let (margin_a, margin_b) = report.lemma1_margins();
    let mut lemma = Record::new("lemma1")
        .with("lhs_a", report.lemma1_lhs_a)
        .with("lhs_b", report.lemma1_lhs_b)
        .with("p_perp_perp", report.p_perp_perp)
        .with("margin_a", margin_a)
        .with("margin_b", margin_b);
    if report.p_perp_perp > 0.0 {
        lemma = lemma
            .with(
                "lhs_a_over_p_perp",
                report.lemma1_lhs_a / report.p_perp_perp,
            )
            .with(
                "lhs_b_over_p_perp",
                report.lemma1_lhs_b / report.p_perp_perp,
            );
    }
    out.push(lemma.with("holds", report.satisfies_lemma1(MERIT_TOL)));

    for (x, y) in [(Outcome::Zero, Outcome::One), (Outcome::One, Outcome::Zero)] {
        let seq = verify_tj_monotone(tree, x, y);
        let mut r = Record::new("tj")
            .with("x", symbol(x))
            .with("y", symbol(y))
            .with("rounds", seq.values.len())
            .with("nondecreasing", seq.is_nondecreasing());
        for (j, v) in seq.values.iter().enumerate() {
            r = r.with(format!("t_{j}"), *v);
        }
        out.push(r);
        if !seq.is_nondecreasing() {
            out.violations.push(format!(
                "T_j for ({}, {}) decreases: {:?}",
                symbol(x),
                symbol(y),
                seq.values
            ));
        }
    }

    // Both classical facts are claims about correct protocols only.
    if correct {
        if !report.satisfies_lemma1(MERIT_TOL) {
            out.violations.push(format!(
                "classical inequality violated: margins {margin_a}, {margin_b}"
            ));
        }
        if merit.is_nan() || merit > MERIT_TOL {
            out.violations
                .push(format!("classical protocol has merit {merit} > 0"));
        }
    } else {
        out.warnings
            .push("protocol is not correct (p00 != p11 or honest outputs disagree)".into());
    }
}

pub fn classical(config: &RunConfig, seed: u64) -> Result<Output, CliError> {
    let section = config.section("classical", &config.classical)?;
    let bad = |e: qcoin::TreeError| CliError::Config(format!("[classical]: {e}"));
    let mut out = Output::default();
    let (source, spec) = match section {
        ClassicalSection::Spec { spec } => ("spec", *spec),
        ClassicalSection::CorrectFamily { t, s } => {
            ("correct-family", make_correct_spec(*t, *s).map_err(bad)?)
        }
        ClassicalSection::SaturatingFamily { inequality, q01, s } => (
            "saturating-family",
            make_saturating_spec((*inequality).into(), *q01, *s).map_err(bad)?,
        ),
        ClassicalSection::Tree { tree } => {
            let tree: ProtocolTree = tree.parse().map_err(bad)?;
            let report = eval_tree(&tree);
            classical_records(&mut out, "tree", &report, &tree);
            return Ok(out);
        }
        ClassicalSection::Audit {
            trees,
            max_depth,
            max_branch,
        } => {
            if *trees == 0 || *max_depth == 0 || *max_branch == 0 {
                return Err(CliError::Config(
                    "[classical]: trees, max_depth and max_branch must be at least 1".into(),
                ));
            }
            let s = audit_random_trees(*trees, seed, *max_depth, *max_branch);
            out.push(
                Record::new("audit")
                    .with("trees", s.trees)
                    .with("seed", seed)
                    .with("max_depth", *max_depth)
                    .with("max_branch", *max_branch)
                    .with("incorrect_trees", s.incorrect_trees)
                    .with("lemma1_violations", s.lemma1_violations)
                    .with("tj_violations", s.tj_violations)
                    .with("tj_endpoint_mismatches", s.tj_endpoint_mismatches)
                    .with("merit_violations", s.merit_violations)
                    .with("spec_tree_mismatches", s.spec_tree_mismatches)
                    .with("min_lemma1_margin", s.min_lemma1_margin)
                    .with("max_merit", s.max_merit)
                    .with("violations", s.violations()),
            );
            if s.violations() > 0 {
                out.violations
                    .push(format!("audit found {} violations", s.violations()));
            }
            return Ok(out);
        }
    };
    let report = eval_lemma2(&spec).map_err(bad)?;
    out.push(
        Record::new("spec")
            .with("q01", spec.q01)
            .with("q0perp", spec.q0perp)
            .with("q1perp", spec.q1perp)
            .with("q0_given_01", spec.q0_given_01)
            .with("q0_given_0perp", spec.q0_given_0perp)
            .with("q1_given_1perp", spec.q1_given_1perp),
    );
    let tree = spec.to_tree().map_err(bad)?;
    classical_records(&mut out, source, &report, &tree);
    Ok(out)
}
