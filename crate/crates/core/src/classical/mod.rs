//! Classical coin tossing with an abort outcome.
//!
//! A correct classical protocol (honest parties agree, and 0 and 1 are
//! equally likely) always satisfies
//!
//! ```text
//! (1 - p0*)(1 - p*1) ≤ p⊥⊥      (1 - p1*)(1 - p*0) ≤ p⊥⊥
//! ```
//!
//! so its merit is never positive. This module evaluates the two-round
//! "exclude one outcome" trit protocol in closed form, evaluates arbitrary
//! protocol trees by backward induction and tracks the round-indexed
//! monotone whose growth proves the inequalities.

use serde::Serialize;

use crate::bounds::merit;
use crate::error::ParamError;

pub mod audit;
pub mod lemma2;
pub mod tree;

pub use audit::{audit_random_trees, random_correct_tree, random_spec, AuditSummary};
pub use lemma2::{
    eval_lemma2, make_correct_spec, make_saturating_spec, ClassicalProtocolSpec, Lemma1Inequality,
};
pub use tree::{
    alice_forces, bob_forces, eval_tree, verify_tj_monotone, Branch, Node, Party, ProtocolTree,
    TjSequence,
};

/// Honest statistics and optimal cheating probabilities of a classical protocol.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClassicalReport {
    pub p00: f64,
    pub p11: f64,
    pub p_perp_perp: f64,
    pub p_star_0: f64,
    pub p_star_1: f64,
    pub p_0_star: f64,
    pub p_1_star: f64,
    /// (1 - p0*)(1 - p*1)
    pub lemma1_lhs_a: f64,
    /// (1 - p1*)(1 - p*0)
    pub lemma1_lhs_b: f64,
}

impl ClassicalReport {
    pub(crate) fn from_parts(
        p00: f64,
        p11: f64,
        p_perp_perp: f64,
        p_star_0: f64,
        p_star_1: f64,
        p_0_star: f64,
        p_1_star: f64,
    ) -> Self {
        Self {
            p00,
            p11,
            p_perp_perp,
            p_star_0,
            p_star_1,
            p_0_star,
            p_1_star,
            lemma1_lhs_a: (1.0 - p_0_star) * (1.0 - p_star_1),
            lemma1_lhs_b: (1.0 - p_1_star) * (1.0 - p_star_0),
        }
    }

    /// p⊥⊥ minus each left-hand side; both are ≥ 0 for a correct protocol.
    pub fn lemma1_margins(&self) -> (f64, f64) {
        (
            self.p_perp_perp - self.lemma1_lhs_a,
            self.p_perp_perp - self.lemma1_lhs_b,
        )
    }

    pub fn satisfies_lemma1(&self, tol: f64) -> bool {
        let (a, b) = self.lemma1_margins();
        a >= -tol && b >= -tol
    }

    /// Honest parties always agree and p00 = p11.
    pub fn is_correct(&self, tol: f64) -> bool {
        (self.p00 - self.p11).abs() <= tol
            && (self.p00 + self.p11 + self.p_perp_perp - 1.0).abs() <= tol
    }

    pub fn merit(&self) -> Result<f64, ParamError> {
        let clamp = |p: f64| p.clamp(0.0, 1.0);
        merit(
            clamp(self.p_star_0),
            clamp(self.p_star_1),
            clamp(self.p_0_star),
            clamp(self.p_1_star),
            clamp(self.p_perp_perp),
        )
    }
}
