//! Zero-forcing precoding, power allocation, user scheduling and SINR.
//!
//! All APs cooperate in one centralized precoder. The precoder is the right
//! pseudo-inverse `G = Hᵀ(HHᵀ)⁻¹` of the channel, computed through an SVD,
//! with each column scaled to unit Euclidean norm.

use nalgebra::{DMatrix, SVD};

use crate::channel::ChannelMatrix;
use crate::error::{Error, Result};
use crate::scenario::{RankPolicy, Scenario, SystemKind};

/// Singular values at or below `RANK_TOL * σ_max` count as zero.
pub const RANK_TOL: f64 = 1e-10;

/// Relative bound on the off-diagonal couplings of `H·G` for a full-rank
/// channel.
pub const ZF_NULL_TOL: f64 = 1e-9;

/// Channel entries below this fraction of the largest entry are treated as
/// zero before the SVD.
const FLUSH_TOL: f64 = 1e-30;

/// Precoder of shape `N_aps x N_users`.
#[derive(Debug, Clone, PartialEq)]
pub struct PrecoderMatrix {
    pub entries: DMatrix<f64>,
    /// Euclidean norm of each pseudo-inverse column before normalization.
    /// Zero for users left unserved by a truncated inverse.
    pub column_norms: Vec<f64>,
    /// Users whose singular directions were discarded (truncated policy only).
    pub unserved: Vec<usize>,
}

/// Strict zero-forcing precoder: errors when `H` is not of full row rank.
pub fn zf_precoder(h: &ChannelMatrix) -> Result<PrecoderMatrix> {
    zf_precoder_with(h, RankPolicy::Strict)
}

/// Zero-forcing precoder under the given rank policy.
///
/// With [`RankPolicy::Truncated`] only singular directions above the rank
/// tolerance are inverted. A user is served when at least half of its unit
/// row weight lies in the retained left-singular subspace; other users get a
/// zero column. For a full-rank channel both policies give the same result.
pub fn zf_precoder_with(h: &ChannelMatrix, policy: RankPolicy) -> Result<PrecoderMatrix> {
    let (n_u, n_a) = h.entries.shape();
    if n_u == 0 {
        return Err(Error::InvalidInput("channel matrix has no users".into()));
    }
    if n_u > n_a {
        return Err(Error::InvalidInput(format!(
            "zero forcing needs N_users ≤ N_aps, got {n_u} users and {n_a} APs"
        )));
    }
    if h.entries.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput(
            "channel matrix has non-finite entries".into(),
        ));
    }

    // Gaussian beam tails leave entries spanning hundreds of decades, down to
    // subnormals, which the SVD iteration cannot handle. Scale to unit peak
    // and flush entries far below any rank tolerance.
    let peak = h.entries.amax();
    let scaled = if peak > 0.0 {
        h.entries.map(|v| {
            let x = v / peak;
            if x.abs() < FLUSH_TOL {
                0.0
            } else {
                x
            }
        })
    } else {
        h.entries.clone()
    };
    let svd = SVD::try_new_unordered(scaled, true, true, 5.0 * f64::EPSILON, 10_000)
        .filter(|svd| svd.singular_values.iter().all(|s| s.is_finite()))
        .ok_or_else(|| Error::Numerical("SVD of the channel matrix did not converge".into()))?;
    let u = svd.u.expect("left singular vectors requested");
    let v_t = svd.v_t.expect("right singular vectors requested");
    let sigma = &svd.singular_values;
    let sigma_max = sigma.max();
    let tol = RANK_TOL * sigma_max;
    let kept: Vec<usize> = (0..sigma.len())
        .filter(|&k| sigma[k] > tol && sigma[k] > 0.0)
        .collect();

    if kept.len() < n_u && policy == RankPolicy::Strict {
        let dropped: Vec<usize> = (0..sigma.len()).filter(|k| !kept.contains(k)).collect();
        let users = (0..n_u)
            .filter(|&r| dropped.iter().map(|&k| u[(r, k)].powi(2)).sum::<f64>() > 1e-12)
            .collect();
        return Err(Error::RankDeficient { users });
    }

    let mut g = DMatrix::<f64>::zeros(n_a, n_u);
    for &k in &kept {
        let inv = 1.0 / sigma[k];
        for col in 0..n_u {
            let c = u[(col, k)] * inv;
            if c == 0.0 {
                continue;
            }
            for a in 0..n_a {
                g[(a, col)] += v_t[(k, a)] * c;
            }
        }
    }

    let mut unserved = Vec::new();
    if kept.len() < n_u {
        for r in 0..n_u {
            let leverage: f64 = kept.iter().map(|&k| u[(r, k)].powi(2)).sum();
            if leverage < 0.5 {
                unserved.push(r);
                g.column_mut(r).fill(0.0);
            }
        }
    }

    let mut column_norms = Vec::with_capacity(n_u);
    for mut col in g.column_iter_mut() {
        let n = col.norm();
        let n_unscaled = if peak > 0.0 { n / peak } else { n };
        if n > 0.0 {
            col /= n;
        }
        column_norms.push(n_unscaled);
    }
    Ok(PrecoderMatrix {
        entries: g,
        column_norms,
        unserved,
    })
}

/// `H·G`: diagonal entries are per-user effective gains, off-diagonals the
/// residual interference couplings.
pub fn effective_gains(h: &ChannelMatrix, g: &PrecoderMatrix) -> Result<DMatrix<f64>> {
    if h.entries.ncols() != g.entries.nrows() {
        return Err(Error::InvalidInput(format!(
            "shape mismatch: H is {:?}, G is {:?}",
            h.entries.shape(),
            g.entries.shape()
        )));
    }
    Ok(&h.entries * &g.entries)
}

/// Equal split of one AP's total optical output over the active users.
pub fn allocate_power(scenario: &Scenario, system: SystemKind, n_active_users: usize) -> Result<Vec<f64>> {
    if n_active_users == 0 {
        return Err(Error::InvalidInput("n_active_users must be ≥ 1".into()));
    }
    let total = match system {
        SystemKind::Vcsel => scenario.vcsel.total_optical_power(),
        SystemKind::Led => scenario.led.total_optical_power(),
    };
    Ok(vec![total / n_active_users as f64; n_active_users])
}

/// Signal photocurrent `R P_u g_uu` of every user.
pub fn signal_photocurrents(gains: &DMatrix<f64>, power: &[f64], responsivity: f64) -> Vec<f64> {
    (0..gains.nrows())
        .map(|u| responsivity * power[u] * gains[(u, u)])
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SinrReport {
    /// Linear SINR.
    pub per_user_sinr: Vec<f64>,
    pub signal_photocurrent: Vec<f64>,
    /// Sum of squared interference photocurrents, A².
    pub residual_interference_power: Vec<f64>,
    /// Total noise standard deviation seen by each user, A.
    pub noise_std: Vec<f64>,
}

/// Electrical SINR `i_u² / (Σ_{j≠u} i_{u←j}² + σ_u²)` with
/// `i_u = R P_u g_uu` and `i_{u←j} = R P_j g_uj`.
pub fn sinr_per_user(
    gains: &DMatrix<f64>,
    power: &[f64],
    responsivity: f64,
    noise_std: &[f64],
) -> Result<SinrReport> {
    let n = gains.nrows();
    if gains.ncols() != n || power.len() != n || noise_std.len() != n {
        return Err(Error::InvalidInput("sinr_per_user: inconsistent lengths".into()));
    }
    if noise_std.iter().any(|s| !(*s > 0.0)) {
        return Err(Error::InvalidInput("noise_std must be positive".into()));
    }
    let signal = signal_photocurrents(gains, power, responsivity);
    let mut sinr = Vec::with_capacity(n);
    let mut interference = Vec::with_capacity(n);
    for u in 0..n {
        let i_int: f64 = (0..n)
            .filter(|&j| j != u)
            .map(|j| (responsivity * power[j] * gains[(u, j)]).powi(2))
            .sum();
        sinr.push(signal[u].powi(2) / (i_int + noise_std[u].powi(2)));
        interference.push(i_int);
    }
    Ok(SinrReport {
        per_user_sinr: sinr,
        signal_photocurrent: signal,
        residual_interference_power: interference,
        noise_std: noise_std.to_vec(),
    })
}

/// A set of users served simultaneously, and the fraction of time it is
/// active.
#[derive(Debug, Clone, PartialEq)]
pub struct UserGroup {
    pub users: Vec<usize>,
    pub duty: f64,
}

/// Round-robin time sharing: users in index order, chunks of at most
/// `n_aps`, equal duty per chunk.
pub fn schedule_groups(n_users: usize, n_aps: usize) -> Result<Vec<UserGroup>> {
    if n_users == 0 || n_aps == 0 {
        return Err(Error::InvalidInput(
            "schedule_groups needs n_users ≥ 1 and n_aps ≥ 1".into(),
        ));
    }
    let n_groups = n_users.div_ceil(n_aps);
    let duty = 1.0 / n_groups as f64;
    Ok((0..n_users)
        .collect::<Vec<_>>()
        .chunks(n_aps)
        .map(|c| UserGroup {
            users: c.to_vec(),
            duty,
        })
        .collect())
}
