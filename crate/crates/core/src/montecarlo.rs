//! Seeded batch runner with binomial estimators.
//!
//! Session `i` of a batch draws all its randomness from streams derived
//! from `(master_seed, i)`, and sessions are tallied into integer counts,
//! so a batch gives the same result for any number of worker threads.

use rayon::prelude::*;
use serde::Serialize;

use crate::bounds::{merit_from_params, MeritReport};
use crate::error::{ParamError, ProtocolError};
use crate::optics::ExperimentParams;
use crate::protocol::{
    cheat_alice_fixed_plus, cheat_bob_fixed_phase, cheat_bob_homodyne, honest_alice, honest_bob,
    run_on_layer, AliceStrategy, Bit, BobStrategy, Outcome, PhysicalLayer, SessionStreams,
};

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

const CHUNK: u64 = 4096;

/// The event whose probability a batch estimates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Target {
    /// Both parties output ⊥.
    BothAbort,
    /// Bob outputs the given value (what a cheating Alice wants).
    BobOutputs(Outcome),
    /// Alice outputs the given value (what a cheating Bob wants).
    AliceOutputs(Outcome),
    Joint(Outcome, Outcome),
}

impl Target {
    pub fn hits(&self, alice: Outcome, bob: Outcome) -> bool {
        match *self {
            Target::BothAbort => alice == Outcome::Abort && bob == Outcome::Abort,
            Target::BobOutputs(y) => bob == y,
            Target::AliceOutputs(x) => alice == x,
            Target::Joint(x, y) => alice == x && bob == y,
        }
    }

    pub fn label(&self) -> String {
        match self {
            Target::BothAbort => "p_abort_abort".into(),
            Target::BobOutputs(y) => format!("p_star_{}", label_symbol(*y)),
            Target::AliceOutputs(x) => format!("p_{}_star", label_symbol(*x)),
            Target::Joint(x, y) => format!("p_{}{}", label_symbol(*x), label_symbol(*y)),
        }
    }
}

fn label_symbol(o: Outcome) -> &'static str {
    match o {
        Outcome::Zero => "0",
        Outcome::One => "1",
        Outcome::Abort => "abort",
    }
}

/// Binomial point estimate with standard error and Wilson interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub successes: u64,
    pub trials: u64,
    pub estimate: f64,
    pub std_error: f64,
    pub ci95: (f64, f64),
}

impl Estimate {
    pub fn from_counts(successes: u64, trials: u64) -> Self {
        assert!(trials > 0 && successes <= trials);
        let n = trials as f64;
        let p = successes as f64 / n;
        Self {
            successes,
            trials,
            estimate: p,
            std_error: (p * (1.0 - p) / n).sqrt(),
            ci95: wilson_interval(successes, trials, Z95),
        }
    }

    /// How many standard errors `value` sits from the estimate, using the
    /// standard error implied by `value` itself (finite when p̂ is 0 or 1).
    pub fn z_score(&self, value: f64) -> f64 {
        let se = (value * (1.0 - value) / self.trials as f64).sqrt();
        (self.estimate - value) / se
    }
}

/// Wilson score interval for `successes` out of `trials`.
pub fn wilson_interval(successes: u64, trials: u64, z: f64) -> (f64, f64) {
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    let lower = if successes == 0 {
        0.0
    } else {
        (center - half).max(0.0)
    };
    let upper = if successes == trials {
        1.0
    } else {
        (center + half).min(1.0)
    };
    (lower, upper)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BatchResult {
    pub n_sessions: u64,
    /// `counts[x][y]`: sessions where Alice output x and Bob output y,
    /// indexed by [`Outcome::index`].
    pub counts: [[u64; 3]; 3],
    /// Sessions in which Bob's detector fired.
    pub clicks: u64,
    pub target: Target,
    pub estimate: Estimate,
}

impl BatchResult {
    pub fn count(&self, alice: Outcome, bob: Outcome) -> u64 {
        self.counts[alice.index()][bob.index()]
    }

    pub fn bob_count(&self, bob: Outcome) -> u64 {
        (0..3).map(|x| self.counts[x][bob.index()]).sum()
    }

    pub fn alice_count(&self, alice: Outcome) -> u64 {
        self.counts[alice.index()].iter().sum()
    }
}

#[derive(Clone, Copy)]
struct Tally {
    counts: [[u64; 3]; 3],
    clicks: u64,
}

impl Tally {
    const ZERO: Tally = Tally {
        counts: [[0; 3]; 3],
        clicks: 0,
    };

    fn add(mut self, other: Tally) -> Tally {
        for x in 0..3 {
            for y in 0..3 {
                self.counts[x][y] += other.counts[x][y];
            }
        }
        self.clicks += other.clicks;
        self
    }
}

fn run_chunk<A, B>(
    alice: &A,
    bob: &B,
    layer: &PhysicalLayer,
    master_seed: u64,
    range: std::ops::Range<u64>,
) -> Result<Tally, ProtocolError>
where
    A: AliceStrategy + Clone,
    B: BobStrategy + Clone,
{
    let mut tally = Tally::ZERO;
    for index in range {
        let mut streams = SessionStreams::derive(master_seed, index);
        let t = run_on_layer(&mut alice.clone(), &mut bob.clone(), layer, &mut streams)?;
        tally.counts[t.alice_output.index()][t.bob_output.index()] += 1;
        tally.clicks += u64::from(t.detector_clicked);
    }
    Ok(tally)
}

fn collect<A, B>(
    alice: &A,
    bob: &B,
    params: &ExperimentParams,
    n: u64,
    master_seed: u64,
    target: Target,
) -> Result<BatchResult, ProtocolError>
where
    A: AliceStrategy + Clone + Sync,
    B: BobStrategy + Clone + Sync,
{
    if n == 0 {
        return Err(ParamError::Invalid("a batch needs at least one session".into()).into());
    }
    let layer = PhysicalLayer::new(params)?;
    let chunks = n.div_ceil(CHUNK);
    let tally = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let start = c * CHUNK;
            run_chunk(
                alice,
                bob,
                &layer,
                master_seed,
                start..(start + CHUNK).min(n),
            )
        })
        .try_reduce(|| Tally::ZERO, |a, b| Ok(a.add(b)))?;

    let successes = Outcome::ALL
        .iter()
        .flat_map(|&x| Outcome::ALL.iter().map(move |&y| (x, y)))
        .filter(|&(x, y)| target.hits(x, y))
        .map(|(x, y)| tally.counts[x.index()][y.index()])
        .sum();
    Ok(BatchResult {
        n_sessions: n,
        counts: tally.counts,
        clicks: tally.clicks,
        target,
        estimate: Estimate::from_counts(successes, n),
    })
}

/// Runs `n` independent sessions on the global thread pool.
pub fn run_batch<A, B>(
    alice: &A,
    bob: &B,
    params: &ExperimentParams,
    n: u64,
    master_seed: u64,
    target: Target,
) -> Result<BatchResult, ProtocolError>
where
    A: AliceStrategy + Clone + Sync,
    B: BobStrategy + Clone + Sync,
{
    collect(alice, bob, params, n, master_seed, target)
}

/// Like [`run_batch`] on a dedicated pool of `workers` threads.
pub fn run_batch_with_workers<A, B>(
    alice: &A,
    bob: &B,
    params: &ExperimentParams,
    n: u64,
    master_seed: u64,
    target: Target,
    workers: usize,
) -> Result<BatchResult, ProtocolError>
where
    A: AliceStrategy + Clone + Sync + Send,
    B: BobStrategy + Clone + Sync + Send,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| ParamError::Invalid(format!("cannot start worker pool: {e}")))?;
    pool.install(|| collect(alice, bob, params, n, master_seed, target))
}

/// Merit from a simulated honest abort rate and the analytic cheating
/// bounds, with the simple cheating strategies simulated alongside.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeritEstimate {
    pub report: MeritReport,
    pub honest: BatchResult,
    pub alice_fixed_plus: BatchResult,
    pub bob_fixed_phase: BatchResult,
    pub bob_homodyne: BatchResult,
}

fn sub_seed(master_seed: u64, lane: u64) -> u64 {
    master_seed ^ lane.wrapping_mul(0xD1B5_4A32_D192_ED03)
}

/// p⊥⊥ comes from `n_honest` honest sessions unless overridden; the
/// cheating fields are the analytic bounds.
pub fn estimate_merit(
    params: &ExperimentParams,
    n_honest: u64,
    n_cheat: u64,
    master_seed: u64,
    p_abort_override: Option<f64>,
) -> Result<MeritEstimate, ProtocolError> {
    let honest = run_batch(
        &honest_alice(),
        &honest_bob(),
        params,
        n_honest,
        sub_seed(master_seed, 1),
        Target::BothAbort,
    )?;
    let alice_fixed_plus = run_batch(
        &cheat_alice_fixed_plus(Bit::One),
        &honest_bob(),
        params,
        n_cheat,
        sub_seed(master_seed, 2),
        Target::BobOutputs(Outcome::One),
    )?;
    let bob_fixed_phase = run_batch(
        &honest_alice(),
        &cheat_bob_fixed_phase(Bit::One),
        params,
        n_cheat,
        sub_seed(master_seed, 3),
        Target::AliceOutputs(Outcome::One),
    )?;
    let bob_homodyne = run_batch(
        &honest_alice(),
        &cheat_bob_homodyne(Bit::One),
        params,
        n_cheat,
        sub_seed(master_seed, 4),
        Target::AliceOutputs(Outcome::One),
    )?;
    let p_abort = p_abort_override.unwrap_or(honest.estimate.estimate);
    let report = merit_from_params(params, Some(p_abort))?;
    Ok(MeritEstimate {
        report,
        honest,
        alice_fixed_plus,
        bob_fixed_phase,
        bob_homodyne,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn wilson_contains_estimate_and_handles_zero() {
        let (lo, hi) = wilson_interval(0, 1000, Z95);
        assert_eq!(lo, 0.0);
        assert!(hi > 0.0 && hi < 0.01);
        let e = Estimate::from_counts(37, 100);
        assert!(e.ci95.0 <= e.estimate && e.estimate <= e.ci95.1);
        assert_abs_diff_eq!(
            e.std_error,
            (0.37f64 * 0.63 / 100.0).sqrt(),
            epsilon = 1e-15
        );
        // Reference: statsmodels proportion_confint(37, 100, method="wilson").
        assert_abs_diff_eq!(e.ci95.0, 0.281_823_605_343_245, epsilon = 1e-12);
        assert_abs_diff_eq!(e.ci95.1, 0.467_794_704_190_571, epsilon = 1e-12);
    }

    #[test]
    fn zero_sessions_rejected() {
        let err = run_batch(
            &honest_alice(),
            &honest_bob(),
            &ExperimentParams::lab_operating_point(),
            0,
            1,
            Target::BothAbort,
        );
        assert!(err.is_err());
    }

    #[test]
    fn counts_sum_to_sessions() {
        let r = run_batch(
            &cheat_alice_fixed_plus(Bit::Zero),
            &honest_bob(),
            &ExperimentParams::lab_operating_point(),
            10_001,
            3,
            Target::BobOutputs(Outcome::Zero),
        )
        .unwrap();
        let total: u64 = r.counts.iter().flatten().sum();
        assert_eq!(total, 10_001);
        assert_eq!(r.estimate.successes, r.bob_count(Outcome::Zero));
        assert!(
            r.estimate.ci95.0 <= r.estimate.estimate && r.estimate.estimate <= r.estimate.ci95.1
        );
    }

    #[test]
    fn single_session_edge_case() {
        let e = estimate_merit(&ExperimentParams::ideal(0.2), 1, 1, 5, None).unwrap();
        assert_eq!(e.honest.n_sessions, 1);
        assert!(e.report.merit.is_finite());
        assert!(e.honest.estimate.ci95.1 - e.honest.estimate.ci95.0 > 0.5);
    }

    #[test]
    fn labels() {
        assert_eq!(Target::BothAbort.label(), "p_abort_abort");
        assert_eq!(Target::BobOutputs(Outcome::One).label(), "p_star_1");
        assert_eq!(Target::AliceOutputs(Outcome::Zero).label(), "p_0_star");
    }
}
