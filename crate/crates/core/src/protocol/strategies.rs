use std::str::FromStr;

use rand::RngCore;

use super::{AliceStrategy, AliceView, Bit, BobLab, BobStrategy, Outcome};
use crate::error::ProtocolError;

/// Picks `a` uniformly and sends `|±α⟩`.
#[derive(Debug, Clone, Copy, Default)]
pub struct HonestAlice {
    bit: Option<Bit>,
}

impl AliceStrategy for HonestAlice {
    fn prepare(&mut self, alpha_sq: f64, rng: &mut dyn RngCore) -> f64 {
        let a = Bit::random(rng);
        self.bit = Some(a);
        a.sign() * alpha_sq.sqrt()
    }

    fn announce(&mut self, _bob_bit: Bit, _rng: &mut dyn RngCore) -> Bit {
        self.bit.expect("announce called before prepare")
    }
}

/// Always sends `|+α⟩` and announces whichever `a` makes the coin `target`.
#[derive(Debug, Clone, Copy)]
pub struct FixedPlusAlice {
    pub target: Bit,
}

impl AliceStrategy for FixedPlusAlice {
    fn prepare(&mut self, alpha_sq: f64, _rng: &mut dyn RngCore) -> f64 {
        alpha_sq.sqrt()
    }

    fn announce(&mut self, bob_bit: Bit, _rng: &mut dyn RngCore) -> Bit {
        self.target ^ bob_bit
    }

    fn output(&mut self, _view: &AliceView) -> Outcome {
        Outcome::from(self.target)
    }
}

/// Picks `b` uniformly; aborts if the displaced pulse makes the detector click.
#[derive(Debug, Clone, Copy, Default)]
pub struct HonestBob {
    bit: Option<Bit>,
}

impl BobStrategy for HonestBob {
    fn choose_bit(
        &mut self,
        _lab: &mut BobLab<'_>,
        rng: &mut dyn RngCore,
    ) -> Result<Bit, ProtocolError> {
        let b = Bit::random(rng);
        self.bit = Some(b);
        Ok(b)
    }

    fn verdict(
        &mut self,
        alice_bit: Bit,
        lab: &mut BobLab<'_>,
        _rng: &mut dyn RngCore,
    ) -> Result<Outcome, ProtocolError> {
        let b = self.bit.expect("verdict called before choose_bit");
        if lab.displace_and_detect(alice_bit)? {
            Ok(Outcome::Abort)
        } else {
            Ok(Outcome::from(alice_bit ^ b))
        }
    }
}

/// Measures before step 2 with the `a = 0` displacement: a click means
/// `a = 1`. Sends `b = guess ⊕ target` and never aborts.
#[derive(Debug, Clone, Copy)]
pub struct FixedPhaseBob {
    pub target: Bit,
    bit: Option<Bit>,
}

impl BobStrategy for FixedPhaseBob {
    fn choose_bit(
        &mut self,
        lab: &mut BobLab<'_>,
        _rng: &mut dyn RngCore,
    ) -> Result<Bit, ProtocolError> {
        let guess = Bit::from(lab.displace_and_detect(Bit::Zero)?);
        let b = guess ^ self.target;
        self.bit = Some(b);
        Ok(b)
    }

    fn verdict(
        &mut self,
        alice_bit: Bit,
        _lab: &mut BobLab<'_>,
        _rng: &mut dyn RngCore,
    ) -> Result<Outcome, ProtocolError> {
        let b = self.bit.expect("verdict called before choose_bit");
        Ok(Outcome::from(alice_bit ^ b))
    }
}

/// Intercepts the pulse at Alice's door, guesses `a` from the sign of the
/// quadrature and sends `b = guess ⊕ target`. Never aborts.
#[derive(Debug, Clone, Copy)]
pub struct HomodyneBob {
    pub target: Bit,
    bit: Option<Bit>,
}

impl BobStrategy for HomodyneBob {
    fn choose_bit(
        &mut self,
        lab: &mut BobLab<'_>,
        _rng: &mut dyn RngCore,
    ) -> Result<Bit, ProtocolError> {
        let quadrature = lab.homodyne()?;
        let guess = Bit::from(quadrature < 0.0);
        let b = guess ^ self.target;
        self.bit = Some(b);
        Ok(b)
    }

    fn verdict(
        &mut self,
        alice_bit: Bit,
        _lab: &mut BobLab<'_>,
        _rng: &mut dyn RngCore,
    ) -> Result<Outcome, ProtocolError> {
        let b = self.bit.expect("verdict called before choose_bit");
        Ok(Outcome::from(alice_bit ^ b))
    }
}

pub fn honest_alice() -> HonestAlice {
    HonestAlice::default()
}

pub fn honest_bob() -> HonestBob {
    HonestBob::default()
}

pub fn cheat_alice_fixed_plus(target: Bit) -> FixedPlusAlice {
    FixedPlusAlice { target }
}

pub fn cheat_bob_fixed_phase(target: Bit) -> FixedPhaseBob {
    FixedPhaseBob { target, bit: None }
}

pub fn cheat_bob_homodyne(target: Bit) -> HomodyneBob {
    HomodyneBob { target, bit: None }
}

/// Alice strategies selectable by name.
#[derive(Debug, Clone, Copy)]
pub enum AliceKind {
    Honest(HonestAlice),
    FixedPlus(FixedPlusAlice),
}

impl AliceKind {
    pub fn parse(name: &str, target: Bit) -> Result<Self, String> {
        match name {
            "honest" => Ok(AliceKind::Honest(honest_alice())),
            "fixed-plus" => Ok(AliceKind::FixedPlus(cheat_alice_fixed_plus(target))),
            other => Err(format!(
                "unknown Alice strategy `{other}` (expected honest | fixed-plus)"
            )),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            AliceKind::Honest(_) => "honest",
            AliceKind::FixedPlus(_) => "fixed-plus",
        }
    }

    pub fn is_honest(&self) -> bool {
        matches!(self, AliceKind::Honest(_))
    }
}

impl AliceStrategy for AliceKind {
    fn prepare(&mut self, alpha_sq: f64, rng: &mut dyn RngCore) -> f64 {
        match self {
            AliceKind::Honest(s) => s.prepare(alpha_sq, rng),
            AliceKind::FixedPlus(s) => s.prepare(alpha_sq, rng),
        }
    }

    fn announce(&mut self, bob_bit: Bit, rng: &mut dyn RngCore) -> Bit {
        match self {
            AliceKind::Honest(s) => s.announce(bob_bit, rng),
            AliceKind::FixedPlus(s) => s.announce(bob_bit, rng),
        }
    }

    fn output(&mut self, view: &AliceView) -> Outcome {
        match self {
            AliceKind::Honest(s) => s.output(view),
            AliceKind::FixedPlus(s) => s.output(view),
        }
    }
}

/// Bob strategies selectable by name.
#[derive(Debug, Clone, Copy)]
pub enum BobKind {
    Honest(HonestBob),
    FixedPhase(FixedPhaseBob),
    Homodyne(HomodyneBob),
}

impl BobKind {
    pub fn parse(name: &str, target: Bit) -> Result<Self, String> {
        match name {
            "honest" => Ok(BobKind::Honest(honest_bob())),
            "fixed-phase" => Ok(BobKind::FixedPhase(cheat_bob_fixed_phase(target))),
            "homodyne" => Ok(BobKind::Homodyne(cheat_bob_homodyne(target))),
            other => Err(format!(
                "unknown Bob strategy `{other}` (expected honest | fixed-phase | homodyne)"
            )),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            BobKind::Honest(_) => "honest",
            BobKind::FixedPhase(_) => "fixed-phase",
            BobKind::Homodyne(_) => "homodyne",
        }
    }

    pub fn is_honest(&self) -> bool {
        matches!(self, BobKind::Honest(_))
    }
}

impl BobStrategy for BobKind {
    fn choose_bit(
        &mut self,
        lab: &mut BobLab<'_>,
        rng: &mut dyn RngCore,
    ) -> Result<Bit, ProtocolError> {
        match self {
            BobKind::Honest(s) => s.choose_bit(lab, rng),
            BobKind::FixedPhase(s) => s.choose_bit(lab, rng),
            BobKind::Homodyne(s) => s.choose_bit(lab, rng),
        }
    }

    fn verdict(
        &mut self,
        alice_bit: Bit,
        lab: &mut BobLab<'_>,
        rng: &mut dyn RngCore,
    ) -> Result<Outcome, ProtocolError> {
        match self {
            BobKind::Honest(s) => s.verdict(alice_bit, lab, rng),
            BobKind::FixedPhase(s) => s.verdict(alice_bit, lab, rng),
            BobKind::Homodyne(s) => s.verdict(alice_bit, lab, rng),
        }
    }
}

impl FromStr for Bit {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "0" => Ok(Bit::Zero),
            "1" => Ok(Bit::One),
            other => Err(format!("`{other}` is not a bit (expected 0 or 1)")),
        }
    }
}
