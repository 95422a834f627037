//! Receiver noise: load thermal noise, preamplifier excess noise, laser RIN
//! and background-light shot noise, combined root-sum-square.

use crate::error::{Error, Result};
use crate::scenario::ReceiverParams;

/// Boltzmann constant, J/K (exact SI value).
pub const BOLTZMANN: f64 = 1.380_649e-23;
/// Elementary charge, C (exact SI value).
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;

/// Noise variances in A² and the total standard deviation in A.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct NoiseBreakdown {
    pub thermal_var: f64,
    pub preamp_var: f64,
    pub rin_var: f64,
    pub background_shot_var: f64,
    /// Optional signal shot noise, zero unless enabled.
    pub signal_shot_var: f64,
    pub total_std: f64,
}

impl NoiseBreakdown {
    pub fn total_var(&self) -> f64 {
        self.thermal_var + self.preamp_var + self.rin_var + self.background_shot_var + self.signal_shot_var
    }
}

/// Computes the noise terms for one user's link.
///
/// - thermal: `4 k_B T B / R_L`
/// - preamp: `(F - 1) 4 k_B T B / R_L`, `F = 10^(NF/10)`
/// - RIN: `10^(RIN/10) i_sig² B` (`rin_db_per_hz = None` disables it)
/// - background shot: `2 q I_bg B`
pub fn noise_components(
    receiver: &ReceiverParams,
    bandwidth: f64,
    rin_db_per_hz: Option<f64>,
    signal_photocurrent: f64,
) -> Result<NoiseBreakdown> {
    if !(bandwidth >= 0.0 && bandwidth.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "bandwidth must be ≥ 0, got {bandwidth}"
        )));
    }
    if !(signal_photocurrent >= 0.0) {
        return Err(Error::InvalidInput(format!(
            "signal photocurrent must be ≥ 0, got {signal_photocurrent}"
        )));
    }
    if !(receiver.background_current >= 0.0) {
        return Err(Error::InvalidInput("background current must be ≥ 0".into()));
    }
    let thermal_var = 4.0 * BOLTZMANN * receiver.temperature_k * bandwidth / receiver.load_resistance;
    let f = 10f64.powf(receiver.tia_noise_figure_db / 10.0);
    let preamp_var = (f - 1.0) * thermal_var;
    let rin_var = rin_db_per_hz
        .map(|rin| 10f64.powf(rin / 10.0) * signal_photocurrent * signal_photocurrent * bandwidth)
        .unwrap_or(0.0);
    let background_shot_var = 2.0 * ELEMENTARY_CHARGE * receiver.background_current * bandwidth;
    let mut n = NoiseBreakdown {
        thermal_var,
        preamp_var,
        rin_var,
        background_shot_var,
        signal_shot_var: 0.0,
        total_std: 0.0,
    };
    n.total_std = n.total_var().sqrt();
    Ok(n)
}

/// Adds signal shot noise `2 q i_sig B` to an existing breakdown.
pub fn with_signal_shot(mut n: NoiseBreakdown, signal_photocurrent: f64, bandwidth: f64) -> NoiseBreakdown {
    n.signal_shot_var = 2.0 * ELEMENTARY_CHARGE * signal_photocurrent * bandwidth;
    n.total_std = n.total_var().sqrt();
    n
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rx(t: f64, rl: f64, nf: f64, ibg: f64) -> ReceiverParams {
        ReceiverParams {
            temperature_k: t,
            load_resistance: rl,
            tia_noise_figure_db: nf,
            background_current: ibg,
            ..Default::default()
        }
    }

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn reference_values() {
        let r = rx(300.0, 50.0, 5.0, 10e-6);
        let n = noise_components(&r, 1.5e9, Some(-155.0), 1e-3).unwrap();
        assert!(rel(n.thermal_var, 4.970e-13) < 1e-3, "{}", n.thermal_var);
        assert!(rel(n.preamp_var, 1.0746e-12) < 1e-3, "{}", n.preamp_var);
        assert!(rel(n.rin_var, 4.743e-13) < 1e-3, "{}", n.rin_var);
        assert!(
            rel(n.background_shot_var, 4.807e-15) < 1e-3,
            "{}",
            n.background_shot_var
        );
        let rss = (n.thermal_var + n.preamp_var + n.rin_var + n.background_shot_var).sqrt();
        assert!(rel(n.total_std, rss) <= f64::EPSILON);
    }

    #[test]
    fn led_has_no_rin() {
        let n = noise_components(&rx(300.0, 50.0, 5.0, 10e-6), 20e6, None, 1e-3).unwrap();
        assert_eq!(n.rin_var, 0.0);
    }

    #[test]
    fn zero_bandwidth_is_silent() {
        let n = noise_components(&rx(300.0, 50.0, 5.0, 10e-6), 0.0, Some(-155.0), 1e-3).unwrap();
        assert_eq!(n.total_var(), 0.0);
    }

    #[test]
    fn rejects_negative_inputs() {
        let r = rx(300.0, 50.0, 5.0, 10e-6);
        assert!(noise_components(&r, -1.0, None, 0.0).is_err());
        assert!(noise_components(&r, 1.0, None, -1e-3).is_err());
        assert!(noise_components(&rx(300.0, 50.0, 5.0, -1.0), 1.0, None, 0.0).is_err());
    }

    #[test]
    fn signal_shot_adds_variance() {
        let r = rx(300.0, 50.0, 5.0, 10e-6);
        let base = noise_components(&r, 1e9, None, 1e-3).unwrap();
        let n = with_signal_shot(base, 1e-3, 1e9);
        assert!(rel(n.signal_shot_var, 2.0 * ELEMENTARY_CHARGE * 1e-3 * 1e9) < 1e-15);
        assert!(n.total_std > base.total_std);
    }

    proptest! {
        #[test]
        fn linear_in_bandwidth(b in 1e3f64..1e10, k in 1.5f64..10.0, i in 0.0f64..1e-2) {
            let r = rx(300.0, 50.0, 5.0, 10e-6);
            let a = noise_components(&r, b, Some(-150.0), i).unwrap();
            let c = noise_components(&r, k * b, Some(-150.0), i).unwrap();
            for (x, y) in [(a.thermal_var, c.thermal_var), (a.preamp_var, c.preamp_var),
                           (a.background_shot_var, c.background_shot_var)] {
                prop_assert!((y - k * x).abs() <= 1e-12 * y);
            }
            prop_assert!((c.rin_var - k * a.rin_var).abs() <= 1e-12 * c.rin_var.max(1e-300));
        }

        #[test]
        fn rin_quadratic_in_photocurrent(i in 1e-9f64..1e-1) {
            let r = rx(300.0, 50.0, 5.0, 10e-6);
            let a = noise_components(&r, 1e9, Some(-155.0), i).unwrap();
            let b = noise_components(&r, 1e9, Some(-155.0), 2.0 * i).unwrap();
            prop_assert!((b.rin_var - 4.0 * a.rin_var).abs() <= 4.0 * f64::EPSILON * b.rin_var);
        }

        #[test]
        fn root_sum_square(b in 1e3f64..1e10, i in 0.0f64..1e-2, t in 1.0f64..400.0) {
            let n = noise_components(&rx(t, 50.0, 5.0, 1e-6), b, Some(-140.0), i).unwrap();
            let sum = n.thermal_var + n.preamp_var + n.rin_var + n.background_shot_var;
            prop_assert!(((n.total_std * n.total_std) - sum).abs() <= 4.0 * f64::EPSILON * sum);
        }

        #[test]
        fn no_rin_means_signal_independent(i in 0.0f64..1.0) {
            let r = rx(300.0, 50.0, 5.0, 10e-6);
            let a = noise_components(&r, 1e7, None, 0.0).unwrap();
            let b = noise_components(&r, 1e7, None, i).unwrap();
            prop_assert_eq!(a.total_std, b.total_std);
        }
    }
}
