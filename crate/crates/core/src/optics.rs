//! Coherent-state kernel: overlaps, discrimination bounds, the imperfection
//! model and the threshold-detector click model.
//!
//! Everything here is a pure function of its arguments. Losses are stored as
//! positive dB values and converted with `10^(-dB/10)`.

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::ParamError;

/// Physical-layer parameters of one coin-tossing setup.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentParams {
    /// Mean photon number |α|² of the signal at Alice's output.
    pub alpha_sq: f64,
    /// Loss between Alice and Bob, positive dB.
    pub att_transmission_db: f64,
    /// Loss inside Bob's apparatus, positive dB.
    pub att_bob_db: f64,
    /// Quantum efficiency of Bob's detector.
    pub detector_efficiency: f64,
    /// Per-photon error rate q, related to the visibility by V = 1 - 2q.
    pub qber_per_photon: f64,
    /// Dark-count probability per detection gate.
    pub dark_count_prob: f64,
}

impl ExperimentParams {
    pub fn new(
        alpha_sq: f64,
        att_transmission_db: f64,
        att_bob_db: f64,
        detector_efficiency: f64,
        qber_per_photon: f64,
        dark_count_prob: f64,
    ) -> Result<Self, ParamError> {
        let params = Self {
            alpha_sq,
            att_transmission_db,
            att_bob_db,
            detector_efficiency,
            qber_per_photon,
            dark_count_prob,
        };
        params.validate()?;
        Ok(params)
    }

    /// The fiber setup operated at |α|² = 0.27: no transmission loss, 6 dB
    /// inside Bob's lab, a 10% efficient gated detector with 4.7e-5 dark
    /// counts per gate and 99% visibility.
    pub fn lab_operating_point() -> Self {
        Self {
            alpha_sq: 0.27,
            att_transmission_db: 0.0,
            att_bob_db: 6.0,
            detector_efficiency: 0.1,
            qber_per_photon: 0.005,
            dark_count_prob: 4.7e-5,
        }
    }

    /// Lossless, unit-efficiency, perfectly visible and noiseless.
    pub fn ideal(alpha_sq: f64) -> Self {
        Self {
            alpha_sq,
            att_transmission_db: 0.0,
            att_bob_db: 0.0,
            detector_efficiency: 1.0,
            qber_per_photon: 0.0,
            dark_count_prob: 0.0,
        }
    }

    pub fn with_alpha_sq(self, alpha_sq: f64) -> Self {
        Self { alpha_sq, ..self }
    }

    pub fn with_transmission_db(self, att_transmission_db: f64) -> Self {
        Self {
            att_transmission_db,
            ..self
        }
    }

    pub fn validate(&self) -> Result<(), ParamError> {
        fn finite(name: &'static str, value: f64) -> Result<(), ParamError> {
            if value.is_finite() {
                Ok(())
            } else {
                Err(ParamError::NotFinite { name, value })
            }
        }
        fn unit(name: &'static str, value: f64) -> Result<(), ParamError> {
            finite(name, value)?;
            if (0.0..=1.0).contains(&value) {
                Ok(())
            } else {
                Err(ParamError::OutOfRange {
                    name,
                    value,
                    expected: "[0, 1]",
                })
            }
        }
        fn non_negative(name: &'static str, value: f64) -> Result<(), ParamError> {
            finite(name, value)?;
            if value >= 0.0 {
                Ok(())
            } else {
                Err(ParamError::OutOfRange {
                    name,
                    value,
                    expected: ">= 0",
                })
            }
        }

        non_negative("alpha_sq", self.alpha_sq)?;
        non_negative("att_transmission_db", self.att_transmission_db)?;
        non_negative("att_bob_db", self.att_bob_db)?;
        unit("detector_efficiency", self.detector_efficiency)?;
        unit("qber_per_photon", self.qber_per_photon)?;
        unit("dark_count_prob", self.dark_count_prob)?;
        if self.dark_count_prob >= 1.0 {
            return Err(ParamError::OutOfRange {
                name: "dark_count_prob",
                value: self.dark_count_prob,
                expected: "[0, 1)",
            });
        }
        Ok(())
    }

    /// Interference visibility V = 1 - 2q.
    pub fn visibility(&self) -> f64 {
        1.0 - 2.0 * self.qber_per_photon
    }

    /// Per-photon error rate from a visibility, q = (1 - V) / 2.
    pub fn qber_from_visibility(visibility: f64) -> f64 {
        (1.0 - visibility) / 2.0
    }

    /// Linear transmittance A_T · A_B · η from Alice's output to a click.
    pub fn total_transmittance(&self) -> f64 {
        transmittance(self.att_transmission_db)
            * transmittance(self.att_bob_db)
            * self.detector_efficiency
    }
}

/// Mean photon numbers derived from [`ExperimentParams`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DerivedIntensities {
    /// Honest signal referred to the detector, α² · A_T · A_B · η.
    pub mu_at_detector: f64,
    /// Residual left after an honest displacement, q · μ_B.
    pub mu_leak: f64,
    /// Intensity that bounds a cheating Alice, A_T · A_B · η · (1 - 2√q) · α².
    pub effective_intensity: f64,
}

fn transmittance(db: f64) -> f64 {
    10f64.powf(-db / 10.0)
}

/// Converts a positive loss in dB into a linear transmittance.
pub fn db_to_linear(db: f64) -> Result<f64, ParamError> {
    if !db.is_finite() {
        return Err(ParamError::NotFinite {
            name: "db",
            value: db,
        });
    }
    if db < 0.0 {
        return Err(ParamError::OutOfRange {
            name: "db",
            value: db,
            expected: ">= 0",
        });
    }
    Ok(transmittance(db))
}

/// Inverse of [`db_to_linear`] on (0, 1].
pub fn linear_to_db(linear: f64) -> Result<f64, ParamError> {
    if !(linear > 0.0 && linear <= 1.0) {
        return Err(ParamError::OutOfRange {
            name: "linear",
            value: linear,
            expected: "(0, 1]",
        });
    }
    Ok(-10.0 * linear.log10())
}

/// |⟨-α|+α⟩|² = e^(-4α²).
pub fn overlap_sq(alpha_sq: f64) -> f64 {
    (-4.0 * alpha_sq).exp()
}

/// Optimal (Helstrom) probability of telling two pure states apart.
pub fn helstrom_success(overlap_sq: f64) -> f64 {
    0.5 + 0.5 * (1.0 - overlap_sq).max(0.0).sqrt()
}

/// Best success of a sender who commits to one fixed state and then picks
/// the announced bit: ½ + ½ |⟨ψ₁|ψ₀⟩|.
pub fn fixed_state_cheat_success(overlap: f64) -> f64 {
    0.5 + 0.5 * overlap
}

/// Upper bound on p_*c under losses, detector efficiency and finite
/// visibility, in its published form ½ + ½·exp(-I_eff). The losses are
/// handed to Alice (a lossless fictitious Bob) and the visibility shrinks
/// the distance between Bob's projectors.
///
/// This form is looser than [`alice_cheat_bound_tight`] by a factor of two
/// in the exponent; it is the one the reported lab figures are computed with.
pub fn alice_cheat_bound(params: &ExperimentParams) -> f64 {
    let effective = derive_intensities(params).effective_intensity;
    0.5 + 0.5 * (-effective).exp()
}

/// Same argument carried through with the coherent-state overlap
/// e^(-|β-γ|²/2): ½ + ½·exp(-2·I_eff). Reduces to the pure-state value
/// ½ + ½·e^(-2α²) without imperfections.
pub fn alice_cheat_bound_tight(params: &ExperimentParams) -> f64 {
    let effective = derive_intensities(params).effective_intensity;
    fixed_state_cheat_success((-2.0 * effective).exp())
}

/// Upper bound on p_c*: Helstrom discrimination of two coherent states of
/// intensity α² whose overlap is at least e^(-2α²). Independent of Bob's
/// losses since he may intercept at Alice's door.
pub fn bob_cheat_bound(alpha_sq: f64) -> f64 {
    helstrom_success(overlap_sq(alpha_sq))
}

/// Threshold-detector click probability for a coherent input of mean photon
/// number `mean_photons` with independent dark counts.
pub fn click_probability(mean_photons: f64, dark_count_prob: f64) -> f64 {
    1.0 - (1.0 - dark_count_prob) * (-mean_photons).exp()
}

pub fn derive_intensities(params: &ExperimentParams) -> DerivedIntensities {
    let mu_at_detector = params.alpha_sq * params.total_transmittance();
    let mu_leak = params.qber_per_photon * mu_at_detector;
    // For q > 1/4 the distance bound is vacuous; clamp at zero intensity.
    let shrink = (1.0 - 2.0 * params.qber_per_photon.sqrt()).max(0.0);
    DerivedIntensities {
        mu_at_detector,
        mu_leak,
        effective_intensity: mu_at_detector * shrink,
    }
}

/// Standard normal CDF.
pub fn standard_normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Sign-of-quadrature discrimination of |±α⟩. The quadrature is Gaussian
/// with mean ±2α and unit (vacuum) variance, so success is Φ(2α).
pub fn homodyne_success(alpha_sq: f64) -> f64 {
    standard_normal_cdf(2.0 * alpha_sq.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::LN_2;

    const TOL: f64 = 1e-9;

    #[test]
    fn db_conversion() {
        assert_eq!(db_to_linear(0.0).unwrap(), 1.0);
        assert_abs_diff_eq!(
            db_to_linear(6.0).unwrap(),
            0.251_188_643_150_958,
            epsilon = TOL
        );
        assert_abs_diff_eq!(db_to_linear(10.0).unwrap(), 0.1, epsilon = 1e-15);
        assert!(db_to_linear(-1.0).is_err());
        assert!(db_to_linear(f64::NAN).is_err());
        assert!(linear_to_db(0.0).is_err());
        assert!(linear_to_db(1.5).is_err());
    }

    #[test]
    fn overlap_values() {
        assert_eq!(overlap_sq(0.0), 1.0);
        assert_abs_diff_eq!(overlap_sq(0.27), (-1.08f64).exp(), epsilon = TOL);
        assert_abs_diff_eq!(overlap_sq(0.27), 0.339_595_525_644_939, epsilon = TOL);
        assert_abs_diff_eq!(overlap_sq(LN_2 / 4.0), 0.5, epsilon = TOL);
    }

    #[test]
    fn helstrom_values() {
        assert_abs_diff_eq!(helstrom_success(overlap_sq(0.27)), 0.906, epsilon = 5e-4);
        assert_eq!(helstrom_success(1.0), 0.5);
        assert_abs_diff_eq!(
            helstrom_success(0.5),
            0.5 + 0.5 * 0.5f64.sqrt(),
            epsilon = TOL
        );
        assert_abs_diff_eq!(
            helstrom_success(0.5),
            0.853_553_390_593_273_7,
            epsilon = TOL
        );
    }

    #[test]
    fn fixed_state_values() {
        assert_eq!(fixed_state_cheat_success(1.0), 1.0);
        assert_abs_diff_eq!(
            fixed_state_cheat_success((-0.54f64).exp()),
            0.791_374_126_186_995,
            epsilon = 1e-9
        );
        assert_abs_diff_eq!(
            fixed_state_cheat_success(0.5f64.sqrt()),
            0.853_553_390_593_273_7,
            epsilon = TOL
        );
    }

    #[test]
    fn alice_bound_values() {
        let lab = ExperimentParams::lab_operating_point();
        assert_abs_diff_eq!(alice_cheat_bound(&lab), 0.9971, epsilon = 1e-4);
        let ideal = ExperimentParams::ideal(LN_2 / 4.0);
        assert_abs_diff_eq!(
            alice_cheat_bound_tight(&ideal),
            0.853_553_390_593_273_7,
            epsilon = TOL
        );
        assert_abs_diff_eq!(
            alice_cheat_bound_tight(&ideal),
            fixed_state_cheat_success(overlap_sq(LN_2 / 4.0).sqrt()),
            epsilon = 1e-15
        );
        // Published form: ½ + ½·e^(-ln2/4).
        assert_abs_diff_eq!(
            alice_cheat_bound(&ideal),
            0.920_448_207_626_857,
            epsilon = TOL
        );
        assert_abs_diff_eq!(
            alice_cheat_bound_tight(&lab),
            0.994_210_815_102_757,
            epsilon = 1e-12
        );
        assert_eq!(alice_cheat_bound(&lab.with_alpha_sq(0.0)), 1.0);
        assert_eq!(alice_cheat_bound_tight(&lab.with_alpha_sq(0.0)), 1.0);
    }

    #[test]
    fn bob_bound_values() {
        assert_abs_diff_eq!(bob_cheat_bound(0.27), 0.906, epsilon = 5e-4);
        assert_eq!(bob_cheat_bound(0.0), 0.5);
        assert_abs_diff_eq!(
            bob_cheat_bound(LN_2 / 4.0),
            0.853_553_390_593_273_7,
            epsilon = TOL
        );
    }

    #[test]
    fn click_values() {
        assert_eq!(click_probability(0.0, 0.0), 0.0);
        assert_abs_diff_eq!(click_probability(0.0, 4.7e-5), 4.7e-5, epsilon = 1e-15);
        let p = click_probability(3.391e-5, 4.7e-5);
        assert_abs_diff_eq!(p, 8.09e-5, epsilon = 5e-8);
    }

    #[test]
    fn intensities() {
        let d = derive_intensities(&ExperimentParams::lab_operating_point());
        assert_abs_diff_eq!(d.mu_at_detector, 6.782e-3, epsilon = 1e-6);
        assert_abs_diff_eq!(d.mu_leak, 3.391e-5, epsilon = 1e-8);
        assert_abs_diff_eq!(d.effective_intensity, 5.823e-3, epsilon = 1e-6);

        let d = derive_intensities(&ExperimentParams::ideal(0.4));
        assert_eq!(d.mu_at_detector, 0.4);
        assert_eq!(d.effective_intensity, 0.4);
        assert_eq!(d.mu_leak, 0.0);

        let blind = ExperimentParams {
            detector_efficiency: 0.0,
            ..ExperimentParams::lab_operating_point()
        };
        let d = derive_intensities(&blind);
        assert_eq!(
            (d.mu_at_detector, d.mu_leak, d.effective_intensity),
            (0.0, 0.0, 0.0)
        );
    }

    #[test]
    fn vacuous_visibility_clamps() {
        let p = ExperimentParams {
            qber_per_photon: 0.4,
            ..ExperimentParams::lab_operating_point()
        };
        assert_eq!(derive_intensities(&p).effective_intensity, 0.0);
        assert_eq!(alice_cheat_bound(&p), 1.0);
    }

    #[test]
    fn homodyne_matches_quadrature_integral() {
        // P(X > 0) for X ~ N(2α, 1), integrated with Simpson's rule.
        let alpha = 0.27f64.sqrt();
        let mean = 2.0 * alpha;
        let density =
            |x: f64| (-(x - mean).powi(2) / 2.0).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let (a, b, n) = (0.0, mean + 12.0, 20_000);
        let h = (b - a) / n as f64;
        let mut sum = density(a) + density(b);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            sum += w * density(a + i as f64 * h);
        }
        let integral = sum * h / 3.0;
        assert_abs_diff_eq!(homodyne_success(0.27), integral, epsilon = 1e-9);
        assert_abs_diff_eq!(homodyne_success(0.27), 0.8506, epsilon = 1e-4);
        assert_eq!(homodyne_success(0.0), 0.5);
    }

    #[test]
    fn params_validation() {
        assert!(ExperimentParams::lab_operating_point().validate().is_ok());
        assert!(ExperimentParams::new(-0.1, 0.0, 0.0, 1.0, 0.0, 0.0).is_err());
        assert!(ExperimentParams::new(0.1, -3.0, 0.0, 1.0, 0.0, 0.0).is_err());
        assert!(ExperimentParams::new(0.1, 0.0, 0.0, 1.2, 0.0, 0.0).is_err());
        assert!(ExperimentParams::new(0.1, 0.0, 0.0, 1.0, 0.0, 1.0).is_err());
        assert!(ExperimentParams::new(f64::INFINITY, 0.0, 0.0, 1.0, 0.0, 0.0).is_err());
        let p = ExperimentParams::lab_operating_point();
        assert_abs_diff_eq!(p.visibility(), 0.99, epsilon = 1e-15);
        assert_abs_diff_eq!(
            ExperimentParams::qber_from_visibility(0.99),
            0.005,
            epsilon = 1e-15
        );
    }
}
