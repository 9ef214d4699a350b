//! Closed-form success probabilities of the simulated strategies under the
//! click model. These are what the Monte Carlo estimates converge to.

use crate::optics::{click_probability, derive_intensities, homodyne_success, ExperimentParams};

/// p_⊥⊥ for honest parties: leak plus dark counts.
pub fn honest_abort(params: &ExperimentParams) -> f64 {
    click_probability(derive_intensities(params).mu_leak, params.dark_count_prob)
}

/// Success of [`super::FixedPlusAlice`] against an honest Bob. Half the time
/// the announced bit matches the `+α` pulse; otherwise the residual is
/// 4μ_B + μ_leak and Bob must fail to see it.
pub fn fixed_plus_success(params: &ExperimentParams) -> f64 {
    let d = derive_intensities(params);
    let pass_matched = 1.0 - click_probability(d.mu_leak, params.dark_count_prob);
    let pass_mismatched =
        1.0 - click_probability(4.0 * d.mu_at_detector + d.mu_leak, params.dark_count_prob);
    0.5 * pass_matched + 0.5 * pass_mismatched
}

/// Success of [`super::FixedPhaseBob`] against an honest Alice.
pub fn fixed_phase_success(params: &ExperimentParams) -> f64 {
    let d = derive_intensities(params);
    0.5 * (1.0 - click_probability(d.mu_leak, params.dark_count_prob))
        + 0.5 * click_probability(4.0 * d.mu_at_detector + d.mu_leak, params.dark_count_prob)
}

/// Success of [`super::HomodyneBob`] against an honest Alice.
pub fn homodyne_bob_success(params: &ExperimentParams) -> f64 {
    homodyne_success(params.alpha_sq)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn operating_point_predictions() {
        let p = ExperimentParams::lab_operating_point();
        assert_abs_diff_eq!(honest_abort(&p), 8.090_829_81e-5, epsilon = 1e-12);
        assert_abs_diff_eq!(fixed_plus_success(&p), 0.986_538_322, epsilon = 1e-8);
        assert_abs_diff_eq!(fixed_phase_success(&p), 0.513_380_769, epsilon = 1e-8);
        assert_abs_diff_eq!(homodyne_bob_success(&p), 0.850_651_222, epsilon = 1e-8);
    }

    #[test]
    fn degenerate_limits() {
        let dark = ExperimentParams {
            detector_efficiency: 0.0,
            dark_count_prob: 0.0,
            ..ExperimentParams::lab_operating_point()
        };
        assert_eq!(fixed_phase_success(&dark), 0.5);
        let loud = ExperimentParams::ideal(50.0);
        assert_abs_diff_eq!(fixed_plus_success(&loud), 0.5, epsilon = 1e-12);
    }
}
