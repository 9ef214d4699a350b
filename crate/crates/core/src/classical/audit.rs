//! Random correct protocols and the audit campaign run over them.

use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use rayon::prelude::*;
use serde::Serialize;

use super::lemma2::{eval_lemma2, ClassicalProtocolSpec};
use super::tree::{eval_tree, verify_tj_monotone, Node, Party, ProtocolTree};
use crate::protocol::Outcome;

const LEMMA_TOL: f64 = 1e-12;

fn random_distribution<R: Rng + ?Sized>(rng: &mut R, n: usize, allow_zero: bool) -> Vec<f64> {
    let mut weights: Vec<f64> = (0..n).map(|_| rng.random::<f64>() + 1e-3).collect();
    if allow_zero && n > 1 && rng.random_bool(0.25) {
        let i = rng.random_range(0..n);
        weights[i] = 0.0;
    }
    let total: f64 = weights.iter().sum();
    let mut probs: Vec<f64> = weights.iter().map(|w| w / total).collect();
    // Put the rounding residue on the largest entry so the sum is 1 to ~1 ulp.
    let residue = 1.0 - probs.iter().sum::<f64>();
    let largest = probs
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap_or(0);
    probs[largest] += residue;
    probs
}

fn random_outcome<R: Rng + ?Sized>(rng: &mut R) -> Outcome {
    Outcome::ALL[rng.random_range(0..3)]
}

fn random_node<R: Rng + ?Sized>(
    rng: &mut R,
    depth_left: usize,
    max_branch: usize,
    reachable: bool,
) -> Node {
    if depth_left == 0 || rng.random_bool(0.25) {
        return if reachable {
            Node::agreed(random_outcome(rng))
        } else {
            // Off the honest path the outputs need not agree.
            Node::leaf(random_outcome(rng), random_outcome(rng))
        };
    }
    let party = if rng.random_bool(0.5) {
        Party::Alice
    } else {
        Party::Bob
    };
    let n = rng.random_range(1..=max_branch.max(1));
    let probs = random_distribution(rng, n, true);
    Node::moves(
        party,
        probs
            .into_iter()
            .map(|p| {
                let child = random_node(rng, depth_left - 1, max_branch, reachable && p > 0.0);
                (p, child)
            })
            .collect::<Vec<_>>(),
    )
}

/// A random correct protocol of depth at most `max_depth` (≥ 1) with at
/// most `max_branch` messages per node. A base tree of depth `max_depth - 1`
/// is drawn and then symmetrized under 0 ↔ 1 by a fair opening move.
pub fn random_correct_tree<R: Rng + ?Sized>(
    rng: &mut R,
    max_depth: usize,
    max_branch: usize,
) -> ProtocolTree {
    let base = random_node(rng, max_depth.saturating_sub(1), max_branch, true);
    let party = if rng.random_bool(0.5) {
        Party::Alice
    } else {
        Party::Bob
    };
    ProtocolTree::new(base)
        .expect("generated distributions are normalized")
        .symmetrized(party)
}

/// A random valid two-round trit protocol (not necessarily correct).
pub fn random_spec<R: Rng + ?Sized>(rng: &mut R) -> ClassicalProtocolSpec {
    let first = random_distribution(rng, 3, true);
    ClassicalProtocolSpec {
        q01: first[0],
        q0perp: first[1],
        q1perp: first[2],
        q0_given_01: rng.random(),
        q0_given_0perp: rng.random(),
        q1_given_1perp: rng.random(),
    }
}

/// Outcome of checking many random correct protocols.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AuditSummary {
    pub trees: usize,
    pub incorrect_trees: usize,
    pub lemma1_violations: usize,
    pub tj_violations: usize,
    pub tj_endpoint_mismatches: usize,
    pub merit_violations: usize,
    pub spec_tree_mismatches: usize,
    /// Smallest margin of the two classical inequalities over all trees.
    pub min_lemma1_margin: f64,
    pub max_merit: f64,
}

impl AuditSummary {
    pub fn violations(&self) -> usize {
        self.incorrect_trees
            + self.lemma1_violations
            + self.tj_violations
            + self.tj_endpoint_mismatches
            + self.merit_violations
            + self.spec_tree_mismatches
    }
}

#[derive(Default)]
struct Tally {
    incorrect: usize,
    lemma1: usize,
    tj: usize,
    endpoints: usize,
    merit: usize,
    spec: usize,
    min_margin: f64,
    max_merit: f64,
}

impl Tally {
    fn merge(self, other: Tally) -> Tally {
        Tally {
            incorrect: self.incorrect + other.incorrect,
            lemma1: self.lemma1 + other.lemma1,
            tj: self.tj + other.tj,
            endpoints: self.endpoints + other.endpoints,
            merit: self.merit + other.merit,
            spec: self.spec + other.spec,
            min_margin: self.min_margin.min(other.min_margin),
            max_merit: self.max_merit.max(other.max_merit),
        }
    }

    fn empty() -> Tally {
        Tally {
            min_margin: f64::INFINITY,
            max_merit: f64::NEG_INFINITY,
            ..Tally::default()
        }
    }
}

fn audit_one(seed: u64, index: u64, max_depth: usize, max_branch: usize) -> Tally {
    let mut rng =
        Xoshiro256PlusPlus::seed_from_u64(seed ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    rng.jump();
    let tree = random_correct_tree(&mut rng, max_depth, max_branch);
    let report = eval_tree(&tree);
    let mut t = Tally::empty();

    if !report.is_correct(1e-9) {
        t.incorrect += 1;
    }
    if !report.satisfies_lemma1(LEMMA_TOL) {
        t.lemma1 += 1;
    }
    let (a, b) = report.lemma1_margins();
    t.min_margin = a.min(b);

    for (x, y, lhs) in [
        (Outcome::Zero, Outcome::One, report.lemma1_lhs_a),
        (Outcome::One, Outcome::Zero, report.lemma1_lhs_b),
    ] {
        let seq = verify_tj_monotone(&tree, x, y);
        if !seq.is_nondecreasing() {
            t.tj += 1;
        }
        if (seq.first() - lhs).abs() > LEMMA_TOL
            || (seq.last() - report.p_perp_perp).abs() > LEMMA_TOL
        {
            t.endpoints += 1;
        }
    }

    match report.merit() {
        Ok(m) => {
            t.max_merit = m;
            if m > LEMMA_TOL {
                t.merit += 1;
            }
        }
        Err(_) => t.merit += 1,
    }

    // Also cross-check the closed form against the tree evaluator.
    let spec = random_spec(&mut rng);
    let closed = eval_lemma2(&spec).expect("random spec is valid");
    let via_tree = eval_tree(&spec.to_tree().expect("random spec is valid"));
    if !reports_agree(&closed, &via_tree, LEMMA_TOL) {
        t.spec += 1;
    }
    t
}

pub(crate) fn reports_agree(
    a: &super::ClassicalReport,
    b: &super::ClassicalReport,
    tol: f64,
) -> bool {
    let fa = [
        a.p00,
        a.p11,
        a.p_perp_perp,
        a.p_star_0,
        a.p_star_1,
        a.p_0_star,
        a.p_1_star,
        a.lemma1_lhs_a,
        a.lemma1_lhs_b,
    ];
    let fb = [
        b.p00,
        b.p11,
        b.p_perp_perp,
        b.p_star_0,
        b.p_star_1,
        b.p_0_star,
        b.p_1_star,
        b.lemma1_lhs_a,
        b.lemma1_lhs_b,
    ];
    fa.iter().zip(fb.iter()).all(|(x, y)| (x - y).abs() <= tol)
}

/// Checks `trees` random correct protocols: correctness, both classical
/// inequalities, monotonicity and endpoints of T_j for (0,1) and (1,0),
/// non-positive merit, and closed form vs tree on a random trit spec.
/// Tree `i` depends only on (`seed`, `i`), so the summary does not depend
/// on how the work is scheduled.
pub fn audit_random_trees(
    trees: usize,
    seed: u64,
    max_depth: usize,
    max_branch: usize,
) -> AuditSummary {
    let tally = (0..trees as u64)
        .into_par_iter()
        .map(|i| audit_one(seed, i, max_depth, max_branch))
        .reduce(Tally::empty, Tally::merge);
    AuditSummary {
        trees,
        incorrect_trees: tally.incorrect,
        lemma1_violations: tally.lemma1,
        tj_violations: tally.tj,
        tj_endpoint_mismatches: tally.endpoints,
        merit_violations: tally.merit,
        spec_tree_mismatches: tally.spec,
        min_lemma1_margin: tally.min_margin,
        max_merit: tally.max_merit,
    }
}
