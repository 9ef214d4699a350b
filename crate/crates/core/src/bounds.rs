//! Merit function, bias, reference constants, optimisation of the signal
//! intensity and transmission-loss sweeps.
//!
//! The merit of a coin-tossing implementation is
//!
//! ```text
//! M = (1 - p*0)(1 - p1*)/2 + (1 - p*1)(1 - p0*)/2 - p⊥⊥
//! ```
//!
//! It lies in [-1, 1], never exceeds 0 for a classical protocol and is capped
//! at (1 - 1/√2)² for any quantum one.

use serde::Serialize;

use crate::error::ParamError;
use crate::optics::{
    alice_cheat_bound, alice_cheat_bound_tight, bob_cheat_bound, db_to_linear, ExperimentParams,
};
use crate::protocol::predict;

/// Cheating bounds, honest abort rate and the resulting merit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeritReport {
    /// Dishonest Alice forcing Bob to output 0.
    pub p_star_0: f64,
    /// Dishonest Alice forcing Bob to output 1.
    pub p_star_1: f64,
    /// Dishonest Bob forcing Alice to output 0.
    pub p_0_star: f64,
    /// Dishonest Bob forcing Alice to output 1.
    pub p_1_star: f64,
    pub p_abort_honest: f64,
    pub merit: f64,
}

impl MeritReport {
    pub fn new(
        p_star_0: f64,
        p_star_1: f64,
        p_0_star: f64,
        p_1_star: f64,
        p_abort_honest: f64,
    ) -> Result<Self, ParamError> {
        let merit = merit(p_star_0, p_star_1, p_0_star, p_1_star, p_abort_honest)?;
        Ok(Self {
            p_star_0,
            p_star_1,
            p_0_star,
            p_1_star,
            p_abort_honest,
            merit,
        })
    }

    /// Recomputes the merit and checks it against the stored value.
    pub fn is_consistent(&self) -> bool {
        merit(
            self.p_star_0,
            self.p_star_1,
            self.p_0_star,
            self.p_1_star,
            self.p_abort_honest,
        )
        .map(|m| (m - self.merit).abs() <= 1e-12 && (-1.0..=1.0).contains(&self.merit))
        .unwrap_or(false)
    }
}

/// Biases ε_A = max_y p*y - ½ and ε_B = max_x px* - ½.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BiasPair {
    pub eps_alice: f64,
    pub eps_bob: f64,
}

fn probability(name: &'static str, value: f64) -> Result<f64, ParamError> {
    if !value.is_finite() {
        return Err(ParamError::NotFinite { name, value });
    }
    if !(0.0..=1.0).contains(&value) {
        return Err(ParamError::OutOfRange {
            name,
            value,
            expected: "[0, 1]",
        });
    }
    Ok(value)
}

pub fn merit(
    p_star_0: f64,
    p_star_1: f64,
    p_0_star: f64,
    p_1_star: f64,
    p_abort: f64,
) -> Result<f64, ParamError> {
    let p_star_0 = probability("p_star_0", p_star_0)?;
    let p_star_1 = probability("p_star_1", p_star_1)?;
    let p_0_star = probability("p_0_star", p_0_star)?;
    let p_1_star = probability("p_1_star", p_1_star)?;
    let p_abort = probability("p_abort", p_abort)?;
    Ok(
        (1.0 - p_star_0) * (1.0 - p_1_star) / 2.0 + (1.0 - p_star_1) * (1.0 - p_0_star) / 2.0
            - p_abort,
    )
}

/// Which closed form bounds a cheating Alice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub enum AliceBoundForm {
    /// ½ + ½·exp(-I_eff), the form the lab figures are quoted in.
    #[default]
    Published,
    /// ½ + ½·exp(-2·I_eff), exact for pure coherent states.
    Tight,
}

impl AliceBoundForm {
    pub fn bound(self, params: &ExperimentParams) -> f64 {
        match self {
            AliceBoundForm::Published => alice_cheat_bound(params),
            AliceBoundForm::Tight => alice_cheat_bound_tight(params),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            AliceBoundForm::Published => "published",
            AliceBoundForm::Tight => "tight",
        }
    }
}

impl std::str::FromStr for AliceBoundForm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "published" => Ok(AliceBoundForm::Published),
            "tight" => Ok(AliceBoundForm::Tight),
            other => Err(format!(
                "unknown Alice bound form `{other}` (expected published | tight)"
            )),
        }
    }
}

/// Analytic report for a parameter set with the published Alice bound.
/// Without an override, p⊥⊥ comes from the click model (leak plus dark
/// counts).
pub fn merit_from_params(
    params: &ExperimentParams,
    p_abort_override: Option<f64>,
) -> Result<MeritReport, ParamError> {
    merit_from_params_with(params, p_abort_override, AliceBoundForm::Published)
}

pub fn merit_from_params_with(
    params: &ExperimentParams,
    p_abort_override: Option<f64>,
    form: AliceBoundForm,
) -> Result<MeritReport, ParamError> {
    params.validate()?;
    let p_abort = match p_abort_override {
        Some(p) => probability("p_abort_override", p)?,
        None => predict::honest_abort(params),
    };
    let alice = form.bound(params);
    let bob = bob_cheat_bound(params.alpha_sq);
    MeritReport::new(alice, alice, bob, bob, p_abort)
}

pub fn bias_from_report(report: &MeritReport) -> BiasPair {
    BiasPair {
        eps_alice: report.p_star_0.max(report.p_star_1) - 0.5,
        eps_bob: report.p_0_star.max(report.p_1_star) - 0.5,
    }
}

/// Literature constants the measured merit is compared against.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReferenceValues {
    /// (1 - 1/√2)²: no quantum protocol does better.
    pub quantum_merit_ceiling: f64,
    /// Merit of Ambainis's protocol, biases ¼ on both sides.
    pub ambainis_merit: f64,
    /// (1 - 1/√2)²/4: best merit when both committed states are pure.
    pub pure_pair_merit_ceiling: f64,
    /// Kitaev: p*c · pc* ≥ ½.
    pub kitaev_product: f64,
    /// One of the two cheaters reaches at least 1/√2.
    pub kitaev_cheat_probability: f64,
    /// Same bound as a bias, 1/√2 - ½.
    pub kitaev_bias: f64,
    /// Pure-pair protocols satisfy ε_A² + ε_B² ≥ ¼.
    pub pure_pair_bias_sq_sum: f64,
}

pub fn reference_values() -> ReferenceValues {
    let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
    let gap = (1.0 - inv_sqrt2) * (1.0 - inv_sqrt2);
    ReferenceValues {
        quantum_merit_ceiling: gap,
        ambainis_merit: 1.0 / 16.0,
        pure_pair_merit_ceiling: gap / 4.0,
        kitaev_product: 0.5,
        kitaev_cheat_probability: inv_sqrt2,
        kitaev_bias: inv_sqrt2 - 0.5,
        pure_pair_bias_sq_sum: 0.25,
    }
}

/// Best |α|² and the merit it reaches.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AlphaOptimum {
    pub alpha_sq: f64,
    pub merit: f64,
}

const GOLDEN: f64 = 0.618_033_988_749_894_8;
const SCAN_POINTS: usize = 400;

/// Maximises the analytic merit over |α|² ∈ [lower, upper] ⊂ (0, 5].
///
/// A coarse scan picks the best bracket, golden-section search refines it.
pub fn optimize_alpha(
    params: &ExperimentParams,
    lower: f64,
    upper: f64,
    form: AliceBoundForm,
) -> Result<AlphaOptimum, ParamError> {
    if !(lower.is_finite() && upper.is_finite() && lower > 0.0 && upper <= 5.0 && lower < upper) {
        return Err(ParamError::InvalidInterval { lower, upper });
    }
    params.validate()?;
    let objective = |alpha_sq: f64| -> f64 {
        merit_from_params_with(&params.with_alpha_sq(alpha_sq), None, form)
            .map(|r| r.merit)
            .unwrap_or(f64::NEG_INFINITY)
    };

    let step = (upper - lower) / SCAN_POINTS as f64;
    let grid = |i: usize| (lower + step * i as f64).min(upper);
    let best = (0..=SCAN_POINTS)
        .map(|i| (i, objective(grid(i))))
        .fold(
            (0, f64::NEG_INFINITY),
            |acc, x| if x.1 > acc.1 { x } else { acc },
        )
        .0;

    let mut a = grid(best.saturating_sub(1));
    let mut b = grid((best + 1).min(SCAN_POINTS));
    let mut c = b - GOLDEN * (b - a);
    let mut d = a + GOLDEN * (b - a);
    let (mut fc, mut fd) = (objective(c), objective(d));
    while b - a > 1e-9 {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - GOLDEN * (b - a);
            fc = objective(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + GOLDEN * (b - a);
            fd = objective(d);
        }
    }
    let refined = 0.5 * (a + b);
    // The search never lands exactly on a bracket end, so keep the scan
    // point when the maximum sits on the interval boundary.
    let (alpha_sq, merit) = [
        (refined, objective(refined)),
        (grid(best), objective(grid(best))),
    ]
    .into_iter()
    .fold((refined, f64::NEG_INFINITY), |acc, x| {
        if x.1 > acc.1 {
            x
        } else {
            acc
        }
    });
    Ok(AlphaOptimum { alpha_sq, merit })
}

/// How p⊥⊥ responds to extra transmission loss in a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub enum AbortScaling {
    /// p⊥⊥ stays at its baseline value.
    FixedMeasured,
    /// The optical part (baseline minus dark counts) scales with the
    /// transmitted intensity; dark counts stay.
    #[default]
    ModelScaled,
}

impl AbortScaling {
    pub fn name(self) -> &'static str {
        match self {
            AbortScaling::FixedMeasured => "fixed",
            AbortScaling::ModelScaled => "model-scaled",
        }
    }
}

impl std::str::FromStr for AbortScaling {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "fixed" | "fixed-measured" => Ok(AbortScaling::FixedMeasured),
            "model-scaled" | "scaled" => Ok(AbortScaling::ModelScaled),
            other => Err(format!(
                "unknown abort scaling `{other}` (expected fixed | model-scaled)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub att_transmission_db: f64,
    pub report: MeritReport,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LossSweep {
    pub scaling: AbortScaling,
    /// p⊥⊥ at the parameter set's own transmission loss.
    pub baseline_abort: f64,
    pub rows: Vec<SweepRow>,
    /// Loss at which the merit changes sign, if the grid brackets one.
    pub threshold_db: Option<f64>,
}

/// Evaluates the merit on a grid of transmission losses (absolute dB,
/// replacing the parameter set's own value). The baseline p⊥⊥ is the
/// override if given, the click model otherwise.
pub fn loss_sweep(
    params: &ExperimentParams,
    grid_db: &[f64],
    scaling: AbortScaling,
    p_abort_override: Option<f64>,
) -> Result<LossSweep, ParamError> {
    params.validate()?;
    if grid_db.is_empty() {
        return Err(ParamError::Invalid("loss grid is empty".into()));
    }
    for &db in grid_db {
        db_to_linear(db)?;
    }
    let baseline_abort = match p_abort_override {
        Some(p) => probability("p_abort_override", p)?,
        None => predict::honest_abort(params),
    };
    let dark = params.dark_count_prob;
    let optical = (baseline_abort - dark).max(0.0);
    let reference_db = params.att_transmission_db;

    let report_at = |db: f64| -> Result<MeritReport, ParamError> {
        let p_abort = match scaling {
            AbortScaling::FixedMeasured => baseline_abort,
            AbortScaling::ModelScaled => {
                (dark + optical * 10f64.powf(-(db - reference_db) / 10.0)).min(1.0)
            }
        };
        merit_from_params(&params.with_transmission_db(db), Some(p_abort))
    };

    let rows = grid_db
        .iter()
        .map(|&db| {
            Ok(SweepRow {
                att_transmission_db: db,
                report: report_at(db)?,
            })
        })
        .collect::<Result<Vec<_>, ParamError>>()?;

    let mut sorted: Vec<(f64, f64)> = rows
        .iter()
        .map(|r| (r.att_transmission_db, r.report.merit))
        .collect();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut threshold_db = None;
    for pair in sorted.windows(2) {
        let ((lo, m_lo), (hi, m_hi)) = (pair[0], pair[1]);
        if m_lo == 0.0 {
            threshold_db = Some(lo);
            break;
        }
        if m_lo.signum() != m_hi.signum() {
            threshold_db = Some(bisect(
                |db| report_at(db).map(|r| r.merit).unwrap_or(f64::NAN),
                lo,
                hi,
                1e-7,
            ));
            break;
        }
    }
    if threshold_db.is_none() {
        if let Some(&(db, m)) = sorted.last() {
            if m == 0.0 {
                threshold_db = Some(db);
            }
        }
    }

    Ok(LossSweep {
        scaling,
        baseline_abort,
        rows,
        threshold_db,
    })
}

fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let positive_at_lo = f(lo) > 0.0;
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if (f(mid) > 0.0) == positive_at_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}
