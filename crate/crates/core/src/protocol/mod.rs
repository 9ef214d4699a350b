//! The four-message coin-tossing protocol.
//!
//! 1. Alice sends a coherent pulse `|±α⟩` (or whatever amplitude a cheating
//!    Alice prefers, within the agreed intensity).
//! 2. Bob announces a bit `b`.
//! 3. Alice announces `a`.
//! 4. Bob displaces the pulse by the honest amplitude for `a` and watches his
//!    detector. A click aborts; otherwise the coin is `a ⊕ b`.
//!
//! The pulse is modelled semiclassically as one real amplitude. Bob never
//! sees it: he can only run one measurement on it through [`BobLab`].

use std::fmt;
use std::ops::BitXor;

use rand::{Rng, RngCore, SeedableRng};
use rand_distr::StandardNormal;
use rand_xoshiro::Xoshiro256PlusPlus;
use serde::{Deserialize, Serialize};

use crate::error::ProtocolError;
use crate::optics::{click_probability, derive_intensities, ExperimentParams};

pub mod predict;
mod strategies;

pub use strategies::{
    cheat_alice_fixed_plus, cheat_bob_fixed_phase, cheat_bob_homodyne, honest_alice, honest_bob,
    AliceKind, BobKind, FixedPhaseBob, FixedPlusAlice, HomodyneBob, HonestAlice, HonestBob,
};

/// A classical bit exchanged in steps 2 and 3.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Bit {
    Zero,
    One,
}

impl Bit {
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        Bit::from(rng.random_bool(0.5))
    }

    /// +1 for 0, -1 for 1: the sign of the honest amplitude.
    pub fn sign(self) -> f64 {
        match self {
            Bit::Zero => 1.0,
            Bit::One => -1.0,
        }
    }
}

impl From<bool> for Bit {
    fn from(value: bool) -> Self {
        if value {
            Bit::One
        } else {
            Bit::Zero
        }
    }
}

impl BitXor for Bit {
    type Output = Bit;

    fn bitxor(self, rhs: Bit) -> Bit {
        Bit::from(self != rhs)
    }
}

/// A party's output: a coin value or abort (⊥).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Outcome {
    Zero,
    One,
    Abort,
}

impl Outcome {
    pub const ALL: [Outcome; 3] = [Outcome::Zero, Outcome::One, Outcome::Abort];

    pub fn index(self) -> usize {
        match self {
            Outcome::Zero => 0,
            Outcome::One => 1,
            Outcome::Abort => 2,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Outcome::Zero => "0",
            Outcome::One => "1",
            Outcome::Abort => "⊥",
        }
    }

    /// 0 ↔ 1, ⊥ fixed.
    pub fn flipped(self) -> Outcome {
        match self {
            Outcome::Zero => Outcome::One,
            Outcome::One => Outcome::Zero,
            Outcome::Abort => Outcome::Abort,
        }
    }
}

impl From<Bit> for Outcome {
    fn from(bit: Bit) -> Self {
        match bit {
            Bit::Zero => Outcome::Zero,
            Bit::One => Outcome::One,
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

/// Record of one protocol run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Transcript {
    /// Signed amplitude leaving Alice's lab in step 1.
    pub signal_amplitude: f64,
    pub bob_bit: Bit,
    pub alice_bit: Bit,
    /// Whether Bob's photon counter fired during the session.
    pub detector_clicked: bool,
    pub alice_output: Outcome,
    pub bob_output: Outcome,
}

/// What Alice knows when she settles on her output.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AliceView {
    pub alice_bit: Bit,
    pub bob_bit: Bit,
    pub bob_aborted: bool,
}

impl AliceView {
    /// Honest rule: ⊥ if Bob aborted, `a ⊕ b` otherwise.
    pub fn honest_output(&self) -> Outcome {
        if self.bob_aborted {
            Outcome::Abort
        } else {
            Outcome::from(self.alice_bit ^ self.bob_bit)
        }
    }
}

/// Alice's side of the protocol. Callbacks run in step order and each gets
/// only Alice's private randomness.
pub trait AliceStrategy {
    /// Step 1: the signed amplitude to send. Must satisfy `s² ≤ alpha_sq`.
    fn prepare(&mut self, alpha_sq: f64, rng: &mut dyn RngCore) -> f64;

    /// Step 3: the bit `a` announced after hearing `b`.
    fn announce(&mut self, bob_bit: Bit, rng: &mut dyn RngCore) -> Bit;

    fn output(&mut self, view: &AliceView) -> Outcome {
        view.honest_output()
    }
}

/// Bob's side of the protocol. The pulse is reachable only through the
/// [`BobLab`], which allows a single measurement per session.
pub trait BobStrategy {
    /// Step 2: the bit `b`. A cheating Bob may measure the pulse first.
    fn choose_bit(
        &mut self,
        lab: &mut BobLab<'_>,
        rng: &mut dyn RngCore,
    ) -> Result<Bit, ProtocolError>;

    /// Step 4: Bob's output after hearing `a`; [`Outcome::Abort`] is
    /// announced to Alice.
    fn verdict(
        &mut self,
        alice_bit: Bit,
        lab: &mut BobLab<'_>,
        rng: &mut dyn RngCore,
    ) -> Result<Outcome, ProtocolError>;
}

/// Precomputed physical layer for one parameter set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalLayer {
    alpha_sq: f64,
    /// √(A_T · A_B · η): amplitude transmission from Alice's output to the detector.
    amplitude_transmission: f64,
    honest_amplitude_at_detector: f64,
    mu_leak: f64,
    dark_count_prob: f64,
}

impl PhysicalLayer {
    pub fn new(params: &ExperimentParams) -> Result<Self, ProtocolError> {
        params.validate()?;
        let derived = derive_intensities(params);
        Ok(Self {
            alpha_sq: params.alpha_sq,
            amplitude_transmission: params.total_transmittance().sqrt(),
            honest_amplitude_at_detector: derived.mu_at_detector.sqrt(),
            mu_leak: derived.mu_leak,
            dark_count_prob: params.dark_count_prob,
        })
    }

    pub fn alpha_sq(&self) -> f64 {
        self.alpha_sq
    }

    /// Mean photon number reaching the detector when a pulse of amplitude
    /// `amplitude` (at Alice's output) is displaced for reference bit `reference`.
    pub fn residual_photons(&self, amplitude: f64, reference: Bit) -> f64 {
        let sent = amplitude * self.amplitude_transmission;
        let displacement = reference.sign() * self.honest_amplitude_at_detector;
        (sent - displacement).powi(2) + self.mu_leak
    }

    pub fn click_probability(&self, amplitude: f64, reference: Bit) -> f64 {
        click_probability(
            self.residual_photons(amplitude, reference),
            self.dark_count_prob,
        )
    }
}

/// Bob's access to the pulse.
pub struct BobLab<'a> {
    layer: &'a PhysicalLayer,
    amplitude: f64,
    consumed: bool,
    clicked: bool,
    nature: &'a mut dyn RngCore,
}

impl<'a> BobLab<'a> {
    fn new(layer: &'a PhysicalLayer, amplitude: f64, nature: &'a mut dyn RngCore) -> Self {
        Self {
            layer,
            amplitude,
            consumed: false,
            clicked: false,
            nature,
        }
    }

    fn take(&mut self) -> Result<(), ProtocolError> {
        if self.consumed {
            return Err(ProtocolError::SignalConsumed);
        }
        self.consumed = true;
        Ok(())
    }

    /// The agreed intensity |α|².
    pub fn alpha_sq(&self) -> f64 {
        self.layer.alpha_sq
    }

    pub fn is_consumed(&self) -> bool {
        self.consumed
    }

    /// Displace by the honest amplitude for `reference` and read the photon
    /// counter through Bob's own losses. Returns whether it clicked.
    pub fn displace_and_detect(&mut self, reference: Bit) -> Result<bool, ProtocolError> {
        self.take()?;
        let p = self.layer.click_probability(self.amplitude, reference);
        let click = self.nature.random::<f64>() < p;
        self.clicked |= click;
        Ok(click)
    }

    /// Ideal homodyne measurement of the amplitude quadrature right at
    /// Alice's output: a sample of N(2s, 1).
    pub fn homodyne(&mut self) -> Result<f64, ProtocolError> {
        self.take()?;
        let noise: f64 = self.nature.sample(StandardNormal);
        Ok(2.0 * self.amplitude + noise)
    }
}

/// Independent randomness for one session: one stream per party and one
/// for measurement outcomes.
#[derive(Debug, Clone)]
pub struct SessionStreams {
    pub alice: Xoshiro256PlusPlus,
    pub bob: Xoshiro256PlusPlus,
    pub nature: Xoshiro256PlusPlus,
}

const LANE_ALICE: u64 = 0;
const LANE_BOB: u64 = 1;
const LANE_NATURE: u64 = 2;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn lane_seed(master_seed: u64, index: u64, lane: u64) -> u64 {
    splitmix64(splitmix64(master_seed) ^ splitmix64(index.wrapping_mul(4).wrapping_add(lane)))
}

impl SessionStreams {
    /// Streams for session `index` of a campaign seeded with `master_seed`.
    pub fn derive(master_seed: u64, index: u64) -> Self {
        Self {
            alice: Xoshiro256PlusPlus::seed_from_u64(lane_seed(master_seed, index, LANE_ALICE)),
            bob: Xoshiro256PlusPlus::seed_from_u64(lane_seed(master_seed, index, LANE_BOB)),
            nature: Xoshiro256PlusPlus::seed_from_u64(lane_seed(master_seed, index, LANE_NATURE)),
        }
    }
}

/// Runs one session over a prepared physical layer.
pub fn run_on_layer<A, B>(
    alice: &mut A,
    bob: &mut B,
    layer: &PhysicalLayer,
    streams: &mut SessionStreams,
) -> Result<Transcript, ProtocolError>
where
    A: AliceStrategy + ?Sized,
    B: BobStrategy + ?Sized,
{
    let alpha_sq = layer.alpha_sq;
    let amplitude = alice.prepare(alpha_sq, &mut streams.alice);
    if !amplitude.is_finite() || amplitude * amplitude > alpha_sq * (1.0 + 1e-12) {
        return Err(ProtocolError::IntensityExceeded {
            amplitude,
            alpha_sq,
        });
    }

    let mut lab = BobLab::new(layer, amplitude, &mut streams.nature);
    let bob_bit = bob.choose_bit(&mut lab, &mut streams.bob)?;
    let alice_bit = alice.announce(bob_bit, &mut streams.alice);
    let bob_output = bob.verdict(alice_bit, &mut lab, &mut streams.bob)?;
    let detector_clicked = lab.clicked;

    let alice_output = alice.output(&AliceView {
        alice_bit,
        bob_bit,
        bob_aborted: bob_output == Outcome::Abort,
    });

    Ok(Transcript {
        signal_amplitude: amplitude,
        bob_bit,
        alice_bit,
        detector_clicked,
        alice_output,
        bob_output,
    })
}

/// Runs one session for `params` with the given randomness.
pub fn run_session<A, B>(
    alice: &mut A,
    bob: &mut B,
    params: &ExperimentParams,
    mut streams: SessionStreams,
) -> Result<Transcript, ProtocolError>
where
    A: AliceStrategy + ?Sized,
    B: BobStrategy + ?Sized,
{
    let layer = PhysicalLayer::new(params)?;
    run_on_layer(alice, bob, &layer, &mut streams)
}
