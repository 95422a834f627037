//! Acceptance suite. Prints one `[PASS]`/`[FAIL]` line per criterion and
//! exits non-zero when any criterion fails.

use std::f64::consts::PI;
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use owcsim::channel::ChannelMatrix;
use owcsim::metrics::{consumed_power, ook_threshold_sinr, rate_per_user};
use owcsim::noise::noise_components;
use owcsim::optics::{beam_radius, collect_power_square_aperture, rayleigh_range, BeamState, OpticalElement};
use owcsim::precoding::{effective_gains, zf_precoder};
use owcsim::rng::SplitMix64;
use owcsim::runner::{sweep_users, Execution, SweepResult};
use owcsim::scenario::{RateModel, ReceiverParams, Scenario, SystemKind};

const USER_COUNTS: [usize; 6] = [2, 4, 6, 8, 10, 12];
const SEED: u64 = 42;
const DROPS: usize = 100;

type Check = std::result::Result<String, String>;
type Criterion<'a> = (&'static str, Box<dyn Fn() -> Check + 'a>);

fn ensure(cond: bool, msg: impl Into<String>) -> std::result::Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn within_time(start: Instant, limit: Duration, what: &str) -> std::result::Result<(), String> {
    let t = start.elapsed();
    ensure(t < limit, format!("{what} took {t:?}, limit {limit:?}"))
}

// 1. Zero forcing nulls interference on random full-rank channels.
fn ac1_zf_null() -> Check {
    let start = Instant::now();
    let mut rng = SplitMix64::new(0x5eed_0001);
    let mut worst = 0.0f64;
    for case in 0..200 {
        let n_a = 2 + (rng.next_u64() % 7) as usize;
        let n_u = 2 + (rng.next_u64() % (n_a as u64 - 1)) as usize;
        let h = DMatrix::from_fn(n_u, n_a, |_, _| rng.uniform(0.0, 1.0));
        let h = ChannelMatrix {
            entries: h,
            system: SystemKind::Vcsel,
        };
        let g = zf_precoder(&h).map_err(|e| format!("case {case}: {e}"))?;
        let e = effective_gains(&h, &g).map_err(|e| e.to_string())?;
        let min_diag = (0..n_u).map(|i| e[(i, i)].abs()).fold(f64::INFINITY, f64::min);
        let max_off = (0..n_u)
            .flat_map(|i| (0..n_u).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| e[(i, j)].abs())
            .fold(0.0, f64::max);
        let ratio = max_off / min_diag;
        ensure(
            ratio <= 1e-9,
            format!("case {case} ({n_u}x{n_a}): off/diag = {ratio:e}"),
        )?;
        worst = worst.max(ratio);
    }
    within_time(start, Duration::from_secs(5), "ZF suite")?;
    Ok(format!("200 channels, worst off/diag {worst:.2e}"))
}

/// 2-D composite Gauss-Legendre integral of a Gaussian beam's irradiance
/// `2P/(πW²) exp(-2r²/W²)` over the square `[-a, a]²`.
fn quadrature_aperture(x0: f64, y0: f64, w: f64, p: f64, a: f64) -> f64 {
    const NODES: [(f64, f64); 5] = [
        (0.0, 0.568_888_888_888_888_9),
        (-0.538_469_310_105_683, 0.478_628_670_499_366_5),
        (0.538_469_310_105_683, 0.478_628_670_499_366_5),
        (-0.906_179_845_938_664, 0.236_926_885_056_189_08),
        (0.906_179_845_938_664, 0.236_926_885_056_189_08),
    ];
    // The integrand is separable, so integrate each axis once.
    let axis = |c: f64| -> f64 {
        let lo = (-a).max(c - 9.0 * w);
        let hi = a.min(c + 9.0 * w);
        if lo >= hi {
            return 0.0;
        }
        let panels = 400;
        let h = (hi - lo) / panels as f64;
        let mut s = 0.0;
        for k in 0..panels {
            let mid = lo + (k as f64 + 0.5) * h;
            for (t, wt) in NODES {
                let x = mid + 0.5 * h * t;
                s += 0.5 * h * wt * (-2.0 * (x - c).powi(2) / (w * w)).exp();
            }
        }
        s
    };
    2.0 * p / (PI * w * w) * axis(x0) * axis(y0)
}

// 2. Optics oracles.
fn ac2_optics() -> Check {
    let start = Instant::now();
    let (w0, lambda) = (5e-6, 1550e-9);
    let z_r = rayleigh_range(w0, lambda).map_err(|e| e.to_string())?;
    ensure((z_r - 50.67e-6).abs() <= 0.01e-6, format!("z_R = {z_r:e}"))?;

    let mut rng = SplitMix64::new(0x5eed_0002);
    let mut worst_ap = 0.0f64;
    for case in 0..100 {
        let w = rng.uniform(1e-3, 0.5);
        let a = rng.uniform(1e-3, 0.1);
        let x0 = rng.uniform(-2.0, 2.0) * w;
        let y0 = rng.uniform(-2.0, 2.0) * w;
        let p = rng.uniform(1e-3, 1.0);
        let closed = collect_power_square_aperture((x0, y0), w, p, a);
        let brute = quadrature_aperture(x0, y0, w, p, a);
        let rel = ((closed - brute) / brute).abs();
        ensure(rel <= 1e-6, format!("aperture case {case}: rel {rel:e}"))?;
        worst_ap = worst_ap.max(rel);
    }

    let mut worst_w = 0.0f64;
    let beam = BeamState::at_waist(w0, lambda, 1.0).map_err(|e| e.to_string())?;
    for k in 0..200 {
        let z = 10f64.powf(-7.0 + 7.0 * k as f64 / 199.0);
        let out = beam
            .transform(OpticalElement::FreeSpace(z))
            .map_err(|e| e.to_string())?;
        let expected = w0 * (1.0 + (z / z_r).powi(2)).sqrt();
        let rel = ((beam_radius(&out) - expected) / expected).abs();
        ensure(rel <= 1e-12, format!("beam radius at z = {z:e}: rel {rel:e}"))?;
        worst_w = worst_w.max(rel);
    }
    within_time(start, Duration::from_secs(30), "optics suite")?;
    Ok(format!(
        "z_R = {:.4} um, aperture worst rel {worst_ap:.1e}, radius worst rel {worst_w:.1e}",
        z_r * 1e6
    ))
}

// 3. Noise reference values.
fn ac3_noise() -> Check {
    let rx = ReceiverParams {
        temperature_k: 300.0,
        load_resistance: 50.0,
        tia_noise_figure_db: 5.0,
        background_current: 10e-6,
        ..Default::default()
    };
    let n = noise_components(&rx, 1.5e9, Some(-155.0), 1e-3).map_err(|e| e.to_string())?;
    let checks = [
        ("thermal", n.thermal_var, 4.970e-13),
        ("preamp", n.preamp_var, 1.0746e-12),
        ("rin", n.rin_var, 4.743e-13),
        ("background shot", n.background_shot_var, 4.807e-15),
    ];
    for (name, got, want) in checks {
        let rel = ((got - want) / want).abs();
        ensure(rel <= 1e-3, format!("{name}: {got:e} vs {want:e}"))?;
    }
    let sum = n.thermal_var + n.preamp_var + n.rin_var + n.background_shot_var;
    let rss_err = ((n.total_std * n.total_std - sum) / sum).abs();
    ensure(
        rss_err <= 4.0 * f64::EPSILON,
        format!("root-sum-square error {rss_err:e}"),
    )?;
    Ok(format!(
        "thermal {:.4e}, preamp {:.4e}, rin {:.4e}, bg {:.4e} A^2",
        n.thermal_var, n.preamp_var, n.rin_var, n.background_shot_var
    ))
}

fn default_sweep() -> (SweepResult, Duration) {
    let start = Instant::now();
    let scenario = Scenario {
        rate_model: RateModel::Shannon,
        ..Scenario::default()
    };
    let sweep = sweep_users(
        &scenario,
        &[SystemKind::Vcsel, SystemKind::Led],
        &USER_COUNTS,
        DROPS,
        SEED,
        Execution::Parallel,
    )
    .expect("default sweep runs");
    (sweep, start.elapsed())
}

fn cells(sweep: &SweepResult, n: usize) -> std::result::Result<(f64, f64, f64, f64), String> {
    let v = sweep
        .cell(SystemKind::Vcsel, n)
        .ok_or(format!("no vcsel cell for {n}"))?;
    let l = sweep
        .cell(SystemKind::Led, n)
        .ok_or(format!("no led cell for {n}"))?;
    Ok((v.sum_rate_mean, l.sum_rate_mean, v.cf_mean, l.cf_mean))
}

// 4. VCSEL sum rate above LED sum rate at every user count.
fn ac4_sum_rate(sweep: &SweepResult, elapsed: Duration) -> Check {
    ensure(
        elapsed < Duration::from_secs(60),
        format!("sweep took {elapsed:?}"),
    )?;
    let mut parts = Vec::new();
    for n in USER_COUNTS {
        let (v, l, _, _) = cells(sweep, n)?;
        ensure(v > l, format!("{n} users: vcsel {v:e} <= led {l:e} b/s"))?;
        parts.push(format!("{n}:{:.2}/{:.3}", v * 1e-9, l * 1e-9));
    }
    Ok(format!("vcsel/led Gb/s {}", parts.join(" ")))
}

// 5. Consumption factor ordering, monotonicity and consumed powers.
fn ac5_consumption_factor(sweep: &SweepResult) -> Check {
    let s = Scenario::default();
    let pv = consumed_power(&s, SystemKind::Vcsel).map_err(|e| e.to_string())?;
    let pl = consumed_power(&s, SystemKind::Led).map_err(|e| e.to_string())?;
    ensure(
        (pv - 10.0).abs() <= 1e-12 && (pl - 96.0).abs() <= 1e-12,
        format!("powers {pv} W, {pl} W"),
    )?;
    for c in &sweep.cells {
        let want = if c.system == SystemKind::Vcsel { pv } else { pl };
        ensure(
            c.consumed_power == want,
            format!("cell power {} W", c.consumed_power),
        )?;
    }

    let mut cf = Vec::new();
    for n in USER_COUNTS {
        let (_, _, v, l) = cells(sweep, n)?;
        ensure(v > l, format!("{n} users: vcsel CF {v:e} <= led CF {l:e} b/J"))?;
        cf.push(v);
    }
    let listing: Vec<String> = USER_COUNTS
        .iter()
        .zip(&cf)
        .map(|(n, v)| format!("{n}:{:.3}", v * 1e-9))
        .collect();
    for (k, w) in cf.windows(2).enumerate() {
        ensure(
            w[1] >= w[0],
            format!(
                "vcsel CF decreases from {} to {} users; CF Gb/J {}",
                USER_COUNTS[k],
                USER_COUNTS[k + 1],
                listing.join(" ")
            ),
        )?;
    }
    Ok(format!("powers 10 W / 96 W, vcsel CF Gb/J {}", listing.join(" ")))
}

// 6. OOK-with-FEC rate switches at the Q-function threshold.
fn ac6_ook_threshold() -> Check {
    // Root of ½ erfc(√(s/2)) = 1e-3, evaluated to 12 digits offline.
    let oracle = 9.549_535_706_f64;
    let s = ook_threshold_sinr(1e-3);
    let rel = ((s - oracle) / oracle).abs();
    ensure(rel <= 1e-3, format!("threshold {s} vs {oracle}"))?;
    let b = 1.5e9;
    let below = rate_per_user(oracle * 0.999, b, RateModel::OokFec, 1e-3).map_err(|e| e.to_string())?;
    let above = rate_per_user(oracle * 1.001, b, RateModel::OokFec, 1e-3).map_err(|e| e.to_string())?;
    ensure(
        below == 0.0 && above == b,
        format!("rate below {below}, above {above}"),
    )?;
    Ok(format!("sinr* = {s:.6}"))
}

const E2E_FLAGS: [&str; 8] = [
    "--users", "2:12:2", "--drops", "20", "--seed", "42", "--system", "both",
];

fn run_cli(out: &Path, args: &[&str]) -> std::result::Result<std::process::Output, String> {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_owcsim"));
    cmd.args(args).arg("--out").arg(out).env_remove("OWCSIM_OUT");
    let output = cmd.output().map_err(|e| e.to_string())?;
    ensure(
        output.status.success(),
        format!(
            "exit {:?}: {}",
            output.status.code(),
            String::from_utf8_lossy(&output.stderr)
        ),
    )?;
    Ok(output)
}

fn read(p: &Path) -> std::result::Result<Vec<u8>, String> {
    fs::read(p).map_err(|e| format!("{}: {e}", p.display()))
}

// 7. End-to-end determinism, including parallel against sequential.
fn ac7_determinism() -> Check {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let dirs = ["a", "b", "seq"].map(|d| tmp.path().join(d));
    let mut sequential = E2E_FLAGS.to_vec();
    sequential.push("--sequential");
    run_cli(&dirs[0], &E2E_FLAGS)?;
    run_cli(&dirs[1], &E2E_FLAGS)?;
    run_cli(&dirs[2], &sequential)?;
    for file in ["drops.csv", "summary.csv"] {
        let a = read(&dirs[0].join(file))?;
        ensure(!a.is_empty(), format!("{file} is empty"))?;
        ensure(
            a == read(&dirs[1].join(file))?,
            format!("{file} differs between reruns"),
        )?;
        ensure(
            a == read(&dirs[2].join(file))?,
            format!("{file} differs parallel vs sequential"),
        )?;
    }
    Ok("drops.csv and summary.csv byte-identical across reruns and execution modes".into())
}

// 8. Spot-size diagnostic is emitted and positive.
fn ac8_spot_diagnostic() -> Check {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let out = run_cli(tmp.path(), &["--drops", "1", "--users", "2"])?;
    let stderr = String::from_utf8_lossy(&out.stderr);
    ensure(stderr.contains("spot area"), "no spot-area line on stderr")?;
    let text = fs::read_to_string(tmp.path().join("diagnostics.txt")).map_err(|e| e.to_string())?;
    let value = |key: &str| -> std::result::Result<f64, String> {
        text.lines()
            .find_map(|l| l.strip_prefix(key)?.trim().strip_prefix('=')?.trim().parse().ok())
            .ok_or(format!("{key} missing from diagnostics.txt"))
    };
    let area = value("vcsel_array_spot_area_m2")?;
    let nominal = value("nominal_spot_area_m2")?;
    ensure(area.is_finite() && area > 0.0, format!("area {area}"))?;
    Ok(format!("computed {area:.4e} m^2 next to nominal {nominal} m^2"))
}

fn main() {
    let (sweep, elapsed) = default_sweep();
    let criteria: Vec<Criterion> = vec![
        ("AC1 zero-forcing null suite", Box::new(ac1_zf_null)),
        ("AC2 optics oracle suite", Box::new(ac2_optics)),
        ("AC3 noise unit checks", Box::new(ac3_noise)),
        (
            "AC4 vcsel sum rate exceeds led",
            Box::new(|| ac4_sum_rate(&sweep, elapsed)),
        ),
        (
            "AC5 consumption factor claims",
            Box::new(|| ac5_consumption_factor(&sweep)),
        ),
        ("AC6 ook threshold", Box::new(ac6_ook_threshold)),
        ("AC7 determinism", Box::new(ac7_determinism)),
        ("AC8 spot-size diagnostic", Box::new(ac8_spot_diagnostic)),
    ];
    let mut failed = 0;
    for (name, check) in &criteria {
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|_| Err("panicked".into()));
        match result {
            Ok(detail) => println!("[PASS] {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("[FAIL] {name}: {detail}");
            }
        }
    }
    println!(
        "{} of {} acceptance criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
