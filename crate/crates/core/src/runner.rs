//! Monte Carlo drops and user-count sweeps.
//!
//! A drop places users with a seed derived from `(base_seed, n_users,
//! drop_index)` only, so both systems serve exactly the same users. Drops are
//! independent and may run concurrently; results are always merged in
//! `(system, n_users, drop)` order.

use rayon::prelude::*;

use crate::channel::{build_channel_matrix, ChannelMatrix};
use crate::error::{Error, Result};
use crate::metrics::{consumed_power, consumption_factor, rate_per_user, RateReport};
use crate::noise::{noise_components, with_signal_shot, NoiseBreakdown};
use crate::precoding::{
    allocate_power, effective_gains, schedule_groups, signal_photocurrents, sinr_per_user, zf_precoder_with,
};
use crate::rng::drop_seed;
use crate::scenario::{place_users, RinMode, Scenario, SystemKind, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    #[default]
    Parallel,
    Sequential,
}

/// Noise terms of one drop. Thermal, preamp and background terms are the
/// same for every user; RIN depends on each user's signal.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct NoiseSummary {
    pub thermal_var: f64,
    pub preamp_var: f64,
    pub rin_var_mean: f64,
    pub bg_shot_var: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DropMetrics {
    /// Linear SINR per user (from the user's scheduling group).
    pub per_user_sinr: Vec<f64>,
    /// Duty-scaled rate per user, bits/s.
    pub per_user_rate: Vec<f64>,
    pub duty_factors: Vec<f64>,
    pub sum_rate: f64,
    pub consumed_power: f64,
    pub cf_bits_per_joule: f64,
    pub noise: NoiseSummary,
    /// Users left without a precoder column by a truncated inverse.
    pub unserved_users: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DropResult {
    pub system: SystemKind,
    pub n_users: usize,
    pub drop_index: usize,
    pub seed: u64,
    pub users: Vec<Vec3>,
    /// Metrics, or the reason the drop failed.
    pub outcome: std::result::Result<DropMetrics, String>,
}

impl DropResult {
    pub fn failed(&self) -> bool {
        self.outcome.is_err()
    }

    pub fn metrics(&self) -> Option<&DropMetrics> {
        self.outcome.as_ref().ok()
    }
}

fn drop_users(scenario: &Scenario, n_users: usize, seed: u64) -> Result<Vec<Vec3>> {
    if n_users == 0 {
        return Err(Error::InvalidInput("n_users must be ≥ 1".into()));
    }
    if scenario.users.is_empty() {
        place_users(&scenario.room, n_users, seed)
    } else if scenario.users.len() >= n_users {
        Ok(scenario.users[..n_users].to_vec())
    } else {
        Err(Error::config(
            "system.users",
            format!(
                "{} users requested but only {} positions are configured",
                n_users,
                scenario.users.len()
            ),
        ))
    }
}

/// Channel matrix of one drop, as seen by [`run_drop`].
pub fn drop_channel(
    scenario: &Scenario,
    system: SystemKind,
    n_users: usize,
    drop_index: usize,
    base_seed: u64,
) -> Result<ChannelMatrix> {
    let seed = drop_seed(base_seed, n_users, drop_index);
    let users = drop_users(scenario, n_users, seed)?;
    build_channel_matrix(&scenario.with_users(users), system)
}

/// Simulates one drop.
///
/// Errors are configuration problems. A channel the precoder cannot invert
/// under the scenario's rank policy gives `Ok` with a failed outcome.
pub fn run_drop(
    scenario: &Scenario,
    system: SystemKind,
    n_users: usize,
    drop_index: usize,
    base_seed: u64,
) -> Result<DropResult> {
    let seed = drop_seed(base_seed, n_users, drop_index);
    let users = drop_users(scenario, n_users, seed)?;
    let h = build_channel_matrix(&scenario.with_users(users.clone()), system)?;
    let outcome = evaluate(scenario, system, &h)?;
    Ok(DropResult {
        system,
        n_users,
        drop_index,
        seed,
        users,
        outcome,
    })
}

fn evaluate(
    scenario: &Scenario,
    system: SystemKind,
    h: &ChannelMatrix,
) -> Result<std::result::Result<DropMetrics, String>> {
    let n_users = h.n_users();
    let (bandwidth, rin) = match system {
        SystemKind::Vcsel => (scenario.vcsel.bandwidth_hz, Some(scenario.vcsel.rin_db_per_hz)),
        SystemKind::Led => (scenario.led.bandwidth_hz, None),
    };
    // Independent per-element fluctuations average down over the array.
    let rin = match (rin, scenario.noise.rin_mode) {
        (Some(r), RinMode::PerElement) => Some(r - 10.0 * (scenario.vcsel.n_elements as f64).log10()),
        (r, _) => r,
    };
    let responsivity = scenario.receiver.responsivity(system);

    let mut sinr = vec![0.0; n_users];
    let mut raw_rate = vec![0.0; n_users];
    let mut duty = vec![0.0; n_users];
    let mut rin_vars = vec![0.0; n_users];
    let mut unserved_users = Vec::new();
    let mut common = NoiseBreakdown::default();

    for group in schedule_groups(n_users, scenario.aps.len())? {
        let hg = h.select_users(&group.users);
        let g = match zf_precoder_with(&hg, scenario.rank_policy) {
            Ok(g) => g,
            Err(Error::RankDeficient { users }) => {
                let users: Vec<String> = users.iter().map(|&k| group.users[k].to_string()).collect();
                return Ok(Err(format!(
                    "rank-deficient group channel, near-dependent users [{}]",
                    users.join(" ")
                )));
            }
            Err(Error::Numerical(msg)) => return Ok(Err(msg)),
            Err(e) => return Err(e),
        };
        unserved_users.extend(g.unserved.iter().map(|&k| group.users[k]));
        let gains = effective_gains(&hg, &g)?;
        let power = allocate_power(scenario, system, group.users.len())?;
        let signal = signal_photocurrents(&gains, &power, responsivity);

        let mut noise_std = Vec::with_capacity(signal.len());
        for (k, &i_sig) in signal.iter().enumerate() {
            let i_sig = i_sig.max(0.0);
            let mut n = noise_components(&scenario.receiver, bandwidth, rin, i_sig)?;
            if scenario.noise.include_signal_shot {
                n = with_signal_shot(n, i_sig, bandwidth);
            }
            rin_vars[group.users[k]] = n.rin_var;
            common = n;
            noise_std.push(n.total_std);
        }
        let report = sinr_per_user(&gains, &power, responsivity, &noise_std)?;
        for (k, &u) in group.users.iter().enumerate() {
            sinr[u] = report.per_user_sinr[k];
            raw_rate[u] = rate_per_user(sinr[u], bandwidth, scenario.rate_model, scenario.fec_ber_limit)?;
            duty[u] = group.duty;
        }
    }

    let rates = RateReport::from_raw(&raw_rate, &duty);
    let power = consumed_power(scenario, system)?;
    let energy = consumption_factor(rates.sum_rate, power)?;
    unserved_users.sort_unstable();
    Ok(Ok(DropMetrics {
        per_user_sinr: sinr,
        per_user_rate: rates.per_user_rate,
        duty_factors: rates.duty_factors,
        sum_rate: rates.sum_rate,
        consumed_power: power,
        cf_bits_per_joule: energy.consumption_factor,
        noise: NoiseSummary {
            thermal_var: common.thermal_var,
            preamp_var: common.preamp_var,
            rin_var_mean: rin_vars.iter().sum::<f64>() / n_users as f64,
            bg_shot_var: common.background_shot_var,
        },
        unserved_users,
    }))
}

/// Aggregate of one `(system, n_users)` cell over its successful drops.
#[derive(Debug, Clone, PartialEq)]
pub struct CellSummary {
    pub system: SystemKind,
    pub n_users: usize,
    pub n_drops: usize,
    pub n_failed: usize,
    pub sum_rate_mean: f64,
    pub sum_rate_std: f64,
    pub cf_mean: f64,
    pub cf_std: f64,
    pub consumed_power: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub records: Vec<DropResult>,
    pub cells: Vec<CellSummary>,
}

impl SweepResult {
    pub fn cell(&self, system: SystemKind, n_users: usize) -> Option<&CellSummary> {
        self.cells
            .iter()
            .find(|c| c.system == system && c.n_users == n_users)
    }
}

/// Mean and sample standard deviation (zero for fewer than two values, NaN
/// mean for none).
fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, var.sqrt())
}

/// Groups consecutive records of the same `(system, n_users)` and
/// aggregates them, excluding failed drops.
pub fn summarize(records: &[DropResult]) -> Vec<CellSummary> {
    let mut cells = Vec::new();
    let mut start = 0;
    while start < records.len() {
        let key = (records[start].system, records[start].n_users);
        let end = records[start..]
            .iter()
            .position(|r| (r.system, r.n_users) != key)
            .map_or(records.len(), |p| start + p);
        let chunk = &records[start..end];
        let ok: Vec<&DropMetrics> = chunk.iter().filter_map(DropResult::metrics).collect();
        let rates: Vec<f64> = ok.iter().map(|m| m.sum_rate).collect();
        let cfs: Vec<f64> = ok.iter().map(|m| m.cf_bits_per_joule).collect();
        let (sum_rate_mean, sum_rate_std) = mean_std(&rates);
        let (cf_mean, cf_std) = mean_std(&cfs);
        cells.push(CellSummary {
            system: key.0,
            n_users: key.1,
            n_drops: chunk.len(),
            n_failed: chunk.len() - ok.len(),
            sum_rate_mean,
            sum_rate_std,
            cf_mean,
            cf_std,
            consumed_power: ok.first().map_or(f64::NAN, |m| m.consumed_power),
        });
        start = end;
    }
    cells
}

/// Runs every `(system, n_users, drop)` combination.
///
/// Systems are visited in name order and user counts in ascending order;
/// the result does not depend on `execution`.
pub fn sweep_users(
    scenario: &Scenario,
    systems: &[SystemKind],
    user_counts: &[usize],
    n_drops: usize,
    base_seed: u64,
    execution: Execution,
) -> Result<SweepResult> {
    scenario.validate()?;
    if systems.is_empty() {
        return Err(Error::config("run.systems", "no system selected"));
    }
    if user_counts.is_empty() || user_counts.contains(&0) {
        return Err(Error::config(
            "run.user_counts",
            "user counts must be non-empty and ≥ 1",
        ));
    }
    if n_drops == 0 {
        return Err(Error::config("run.n_drops", "n_drops must be ≥ 1"));
    }
    let mut systems = systems.to_vec();
    systems.sort();
    systems.dedup();
    let mut counts = user_counts.to_vec();
    counts.sort_unstable();
    counts.dedup();
    if !scenario.users.is_empty() {
        let max = *counts.last().expect("non-empty");
        drop_users(scenario, max, 0)?;
    }

    let jobs: Vec<(SystemKind, usize, usize)> = systems
        .iter()
        .flat_map(|&s| {
            counts
                .iter()
                .flat_map(move |&n| (0..n_drops).map(move |d| (s, n, d)))
        })
        .collect();
    let run = |&(s, n, d): &(SystemKind, usize, usize)| run_drop(scenario, s, n, d, base_seed);
    let records: Vec<DropResult> = match execution {
        Execution::Parallel => jobs.par_iter().map(run).collect::<Result<_>>()?,
        Execution::Sequential => jobs.iter().map(run).collect::<Result<_>>()?,
    };
    let cells = summarize(&records);
    Ok(SweepResult { records, cells })
}
