//! Two-round trit protocol: Alice excludes one of {0, 1, ⊥}, then Bob picks
//! one of the two remaining outcomes.

use serde::{Deserialize, Serialize};

use super::tree::{Node, Party, ProtocolTree};
use super::ClassicalReport;
use crate::error::TreeError;
use crate::protocol::Outcome;

const SUM_TOL: f64 = 1e-12;

/// Honest move probabilities. Alice's round-1 choice is one of the pairs
/// {0,1}, {0,⊥}, {1,⊥}; Bob's round-2 conditionals have implied complements.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassicalProtocolSpec {
    pub q01: f64,
    pub q0perp: f64,
    pub q1perp: f64,
    /// P(Bob picks 0 | {0,1}); he picks 1 otherwise.
    pub q0_given_01: f64,
    /// P(Bob picks 0 | {0,⊥}); he picks ⊥ otherwise.
    pub q0_given_0perp: f64,
    /// P(Bob picks 1 | {1,⊥}); he picks ⊥ otherwise.
    pub q1_given_1perp: f64,
}

impl ClassicalProtocolSpec {
    pub fn validate(&self) -> Result<(), TreeError> {
        let fields = [
            ("q01", self.q01),
            ("q0perp", self.q0perp),
            ("q1perp", self.q1perp),
            ("q0_given_01", self.q0_given_01),
            ("q0_given_0perp", self.q0_given_0perp),
            ("q1_given_1perp", self.q1_given_1perp),
        ];
        for (name, value) in fields {
            if !(value.is_finite() && (0.0..=1.0).contains(&value)) {
                return Err(TreeError::Spec(format!(
                    "{name} = {value} is outside [0, 1]"
                )));
            }
        }
        let sum = self.q01 + self.q0perp + self.q1perp;
        if (sum - 1.0).abs() > SUM_TOL {
            return Err(TreeError::Spec(format!(
                "q01 + q0perp + q1perp = {sum}, expected 1"
            )));
        }
        Ok(())
    }

    /// The same protocol as a depth-2 tree.
    pub fn to_tree(&self) -> Result<ProtocolTree, TreeError> {
        self.validate()?;
        let (z, o, a) = (Outcome::Zero, Outcome::One, Outcome::Abort);
        let bob = |p: f64, first: Outcome, second: Outcome| {
            Node::moves(
                Party::Bob,
                [(p, Node::agreed(first)), (1.0 - p, Node::agreed(second))],
            )
        };
        ProtocolTree::new(Node::moves(
            Party::Alice,
            [
                (self.q01, bob(self.q0_given_01, z, o)),
                (self.q0perp, bob(self.q0_given_0perp, z, a)),
                (self.q1perp, bob(self.q1_given_1perp, o, a)),
            ],
        ))
    }
}

/// Closed-form honest and cheating probabilities.
pub fn eval_lemma2(spec: &ClassicalProtocolSpec) -> Result<ClassicalReport, TreeError> {
    spec.validate()?;
    let s = spec;
    let p00 = s.q0_given_01 * s.q01 + s.q0_given_0perp * s.q0perp;
    let p11 = (1.0 - s.q0_given_01) * s.q01 + s.q1_given_1perp * s.q1perp;
    let p_perp_perp = (1.0 - s.q0_given_0perp) * s.q0perp + (1.0 - s.q1_given_1perp) * s.q1perp;
    Ok(ClassicalReport::from_parts(
        p00,
        p11,
        p_perp_perp,
        s.q0_given_01.max(s.q0_given_0perp),
        (1.0 - s.q0_given_01).max(s.q1_given_1perp),
        s.q01 + s.q0perp,
        s.q01 + s.q1perp,
    ))
}

/// Symmetric family q0⊥ = q1⊥ = t, q0|01 = ½, q0|0⊥ = q1|1⊥ = s. It is
/// correct and both inequalities sit at exactly half of p⊥⊥.
pub fn make_correct_spec(t: f64, s: f64) -> Result<ClassicalProtocolSpec, TreeError> {
    if !(t.is_finite() && (0.0..=0.5).contains(&t)) {
        return Err(TreeError::Spec(format!("t = {t} is outside [0, 1/2]")));
    }
    if !(s.is_finite() && (0.5..=1.0).contains(&s)) {
        return Err(TreeError::Spec(format!("s = {s} is outside [1/2, 1]")));
    }
    let spec = ClassicalProtocolSpec {
        q01: 1.0 - 2.0 * t,
        q0perp: t,
        q1perp: t,
        q0_given_01: 0.5,
        q0_given_0perp: s,
        q1_given_1perp: s,
    };
    spec.validate()?;
    Ok(spec)
}

/// Which of the two classical inequalities to saturate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Lemma1Inequality {
    /// (1 - p0*)(1 - p*1) ≤ p⊥⊥
    First,
    /// (1 - p1*)(1 - p*0) ≤ p⊥⊥
    Second,
}

/// Correct protocol saturating one inequality exactly.
///
/// For [`Lemma1Inequality::First`], Alice never excludes 1 (q0⊥ = 0),
/// q1⊥ = 1 - q01 and Bob keeps 1 with probability `s` after {1,⊥}. The
/// remaining freedom q0|01 is fixed by p00 = p11:
/// `q0|01 = ½ + s·q1⊥ / (2·q01)`. The second case mirrors 0 and 1.
///
/// Requires `s ≥ ½` and `s·(1 - q01) ≤ q01` so that the conditional stays
/// a probability.
pub fn make_saturating_spec(
    which: Lemma1Inequality,
    q01: f64,
    s: f64,
) -> Result<ClassicalProtocolSpec, TreeError> {
    if !(q01.is_finite() && q01 > 0.0 && q01 <= 1.0) {
        return Err(TreeError::Spec(format!("q01 = {q01} is outside (0, 1]")));
    }
    if !(s.is_finite() && (0.5..=1.0).contains(&s)) {
        return Err(TreeError::Spec(format!("s = {s} is outside [1/2, 1]")));
    }
    let excluded = 1.0 - q01;
    if s * excluded > q01 {
        return Err(TreeError::Spec(format!(
            "s·(1 - q01) = {} exceeds q01 = {q01}; no balancing choice exists",
            s * excluded
        )));
    }
    let tilt = s * excluded / (2.0 * q01);
    let spec = match which {
        Lemma1Inequality::First => ClassicalProtocolSpec {
            q01,
            q0perp: 0.0,
            q1perp: excluded,
            q0_given_01: 0.5 + tilt,
            q0_given_0perp: 0.5,
            q1_given_1perp: s,
        },
        Lemma1Inequality::Second => ClassicalProtocolSpec {
            q01,
            q0perp: excluded,
            q1perp: 0.0,
            q0_given_01: 0.5 - tilt,
            q0_given_0perp: s,
            q1_given_1perp: 0.5,
        },
    };
    spec.validate()?;
    Ok(spec)
}
