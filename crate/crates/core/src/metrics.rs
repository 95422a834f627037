//! Achievable rate, sum rate and consumption factor.

use std::f64::consts::SQRT_2;

use crate::error::{Error, Result};
use crate::scenario::{RateModel, Scenario, SystemKind};

/// Gaussian tail probability `Q(x) = ½ erfc(x / √2)`.
pub fn q_function(x: f64) -> f64 {
    0.5 * libm::erfc(x / SQRT_2)
}

/// Smallest SINR whose OOK bit error rate `Q(√sinr)` meets `fec_ber_limit`.
pub fn ook_threshold_sinr(fec_ber_limit: f64) -> f64 {
    // Q is decreasing; bisect on x = √sinr over [0, 40].
    let (mut lo, mut hi) = (0.0f64, 40.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if q_function(mid) <= fec_ber_limit {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi * hi
}

/// Achievable rate in bits/s for one user.
///
/// `Shannon`: `B log₂(1 + sinr)`. `OokFec`: `B` when the OOK bit error rate
/// `Q(√sinr)` is within the FEC limit, otherwise 0.
pub fn rate_per_user(sinr: f64, bandwidth: f64, model: RateModel, fec_ber_limit: f64) -> Result<f64> {
    if !(sinr >= 0.0) {
        return Err(Error::InvalidInput(format!("sinr must be ≥ 0, got {sinr}")));
    }
    if !(bandwidth > 0.0) {
        return Err(Error::InvalidInput(format!(
            "bandwidth must be positive, got {bandwidth}"
        )));
    }
    Ok(match model {
        RateModel::Shannon => bandwidth * sinr.ln_1p() / std::f64::consts::LN_2,
        RateModel::OokFec => {
            if sinr > 0.0 && q_function(sinr.sqrt()) <= fec_ber_limit {
                bandwidth
            } else {
                0.0
            }
        }
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateReport {
    /// Duty-scaled per-user rate, bits/s.
    pub per_user_rate: Vec<f64>,
    pub sum_rate: f64,
    pub duty_factors: Vec<f64>,
}

impl RateReport {
    /// Scales raw rates by their duty factors and sums them.
    pub fn from_raw(raw_rates: &[f64], duty_factors: &[f64]) -> Self {
        let per_user_rate: Vec<f64> = raw_rates.iter().zip(duty_factors).map(|(r, d)| r * d).collect();
        let sum_rate = per_user_rate.iter().sum();
        Self {
            per_user_rate,
            sum_rate,
            duty_factors: duty_factors.to_vec(),
        }
    }
}

/// Transmitter electrical power of all APs, which are always on.
pub fn consumed_power(scenario: &Scenario, system: SystemKind) -> Result<f64> {
    if scenario.aps.is_empty() {
        return Err(Error::config("system.n_aps", "at least one AP is required"));
    }
    let per_ap = match system {
        SystemKind::Vcsel => scenario.vcsel.n_elements as f64 * scenario.vcsel.electrical_power_per_element,
        SystemKind::Led => scenario.led.n_emitters as f64 * scenario.led.electrical_power_per_emitter,
    };
    Ok(scenario.aps.len() as f64 * per_ap)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyReport {
    pub consumed_power: f64,
    /// bits/J
    pub consumption_factor: f64,
    pub consumption_factor_gb_per_mj: f64,
}

/// Delivered bits per joule of transmitter electrical energy.
pub fn consumption_factor(sum_rate: f64, consumed_power: f64) -> Result<EnergyReport> {
    if !(consumed_power > 0.0) {
        return Err(Error::InvalidInput(format!(
            "consumed power must be positive, got {consumed_power}"
        )));
    }
    let cf = sum_rate / consumed_power;
    Ok(EnergyReport {
        consumed_power,
        consumption_factor: cf,
        consumption_factor_gb_per_mj: cf * 1e-12,
    })
}
