//! Command-line entry point: resolves flags and config into a run, executes
//! the sweep and writes its artifacts.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::Parser;

use crate::error::{Error, Result};
use crate::io::config::{parse_config, to_config_text, RawConfig, Value};
use crate::io::{csv, plot};
use crate::optics;
use crate::runner::{self, Execution, SweepResult};
use crate::scenario::{validate_config, RateModel, Scenario, SystemKind};

pub const DEFAULT_USERS: &str = "2:12:2";
pub const DEFAULT_DROPS: usize = 100;
pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_OUT: &str = "out";
pub const OUT_ENV: &str = "OWCSIM_OUT";
/// Spot size on the receive plane listed with the nominal parameter set, m².
pub const NOMINAL_SPOT_AREA: f64 = 1.5;

#[derive(Debug, Clone, Default, Parser)]
#[command(
    name = "owcsim",
    version,
    about = "Monte Carlo comparison of VCSEL and LED access points under zero-forcing precoding"
)]
pub struct Args {
    /// Config file (sectioned key = value text).
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// vcsel, led or both.
    #[arg(long, value_name = "SYSTEM")]
    pub system: Option<String>,
    /// User counts as A:B:STEP (inclusive), A:B or a single count.
    #[arg(long, value_name = "A:B:STEP")]
    pub users: Option<String>,
    /// Drops per (system, user count).
    #[arg(long, value_name = "N")]
    pub drops: Option<u64>,
    /// Base seed.
    #[arg(long, value_name = "S")]
    pub seed: Option<u64>,
    /// shannon or ook.
    #[arg(long = "rate-model", value_name = "MODEL")]
    pub rate_model: Option<String>,
    /// Output directory (default: $OWCSIM_OUT, else ./out).
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Write SVG plots of sum rate and consumption factor.
    #[arg(long)]
    pub plots: bool,
    /// Write the channel matrix of drop 0 of every cell.
    #[arg(long = "dump-channel")]
    pub dump_channel: bool,
    /// Run drops on one thread.
    #[arg(long)]
    pub sequential: bool,
}

/// Resolved run settings.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub config_path: Option<PathBuf>,
    pub systems: Vec<SystemKind>,
    pub user_counts: Vec<usize>,
    pub n_drops: usize,
    pub base_seed: u64,
    pub rate_model: RateModel,
    pub output_dir: PathBuf,
    pub emit_plots: bool,
    pub dump_channel: bool,
    pub execution: Execution,
}

/// Parses `A:B:STEP`, `A:B` (step 1), a single count, or a comma list.
pub fn parse_user_range(s: &str) -> Result<Vec<usize>> {
    let key = "run.user_counts";
    let bad = || Error::config(key, format!("cannot parse user range '{s}'"));
    let int = |t: &str| t.trim().parse::<usize>().map_err(|_| bad());

    let counts: Vec<usize> = if s.contains(':') {
        let parts: Vec<&str> = s.split(':').collect();
        let (a, b, step) = match parts.as_slice() {
            [a, b] => (int(a)?, int(b)?, 1),
            [a, b, st] => (int(a)?, int(b)?, int(st)?),
            _ => return Err(bad()),
        };
        if step == 0 {
            return Err(Error::config(key, "user range step must be ≥ 1"));
        }
        if a > b {
            return Err(Error::config(key, format!("empty user range '{s}'")));
        }
        (a..=b).step_by(step).collect()
    } else {
        s.split(',').map(int).collect::<Result<_>>()?
    };
    if counts.is_empty() {
        return Err(Error::config(key, format!("empty user range '{s}'")));
    }
    if counts.contains(&0) {
        return Err(Error::config(key, "user counts must be ≥ 1"));
    }
    if counts.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::config(
            key,
            format!("user counts must be ascending, got '{s}'"),
        ));
    }
    Ok(counts)
}

/// Parses `vcsel`, `led`, `both`, or a comma list of system names.
pub fn parse_systems(s: &str) -> Result<Vec<SystemKind>> {
    let mut out = Vec::new();
    for name in s.split(',').map(str::trim) {
        match name {
            "both" => out.extend([SystemKind::Led, SystemKind::Vcsel]),
            _ => out.push(SystemKind::parse(name).ok_or_else(|| {
                Error::config(
                    "run.systems",
                    format!("unknown system '{name}' (expected vcsel, led or both)"),
                )
            })?),
        }
    }
    out.sort();
    out.dedup();
    Ok(out)
}

fn systems_text(systems: &[SystemKind]) -> String {
    systems.iter().map(|s| s.name()).collect::<Vec<_>>().join(",")
}

fn counts_text(counts: &[usize]) -> String {
    counts.iter().map(usize::to_string).collect::<Vec<_>>().join(",")
}

impl RunConfig {
    /// Reads the `run` section. `env_out` is the value of `OWCSIM_OUT`, used
    /// when `run.output_dir` is absent.
    pub fn from_raw(raw: &RawConfig, scenario: &Scenario, env_out: Option<&str>) -> Result<Self> {
        let systems = parse_systems(raw.text("run.systems").unwrap_or("both"))?;
        let user_counts = parse_user_range(raw.text("run.user_counts").unwrap_or(DEFAULT_USERS))?;
        let n_drops = raw.integer("run.n_drops").map_or(DEFAULT_DROPS, |n| n as usize);
        if n_drops == 0 {
            return Err(Error::config("run.n_drops", "n_drops must be ≥ 1"));
        }
        let output_dir = raw
            .text("run.output_dir")
            .or(env_out.filter(|s| !s.is_empty()))
            .unwrap_or(DEFAULT_OUT);
        Ok(RunConfig {
            config_path: None,
            systems,
            user_counts,
            n_drops,
            base_seed: raw.integer("run.base_seed").unwrap_or(DEFAULT_SEED),
            rate_model: scenario.rate_model,
            output_dir: PathBuf::from(output_dir),
            emit_plots: raw.boolean("run.emit_plots").unwrap_or(false),
            dump_channel: raw.boolean("run.dump_channel").unwrap_or(false),
            execution: if raw.boolean("run.parallel").unwrap_or(true) {
                Execution::Parallel
            } else {
                Execution::Sequential
            },
        })
    }

    /// Writes the `run` section into `raw`.
    pub fn write_raw(&self, raw: &mut RawConfig) {
        let mut put = |k: &str, v: Value| raw.set(k, v).expect("schema key");
        put("run.systems", Value::Text(systems_text(&self.systems)));
        put("run.user_counts", Value::Text(counts_text(&self.user_counts)));
        put("run.n_drops", Value::Integer(self.n_drops as u64));
        put("run.base_seed", Value::Integer(self.base_seed));
        put(
            "run.output_dir",
            Value::Text(self.output_dir.to_string_lossy().into_owned()),
        );
        put("run.emit_plots", Value::Bool(self.emit_plots));
        put("run.dump_channel", Value::Bool(self.dump_channel));
        put("run.parallel", Value::Bool(self.execution == Execution::Parallel));
    }
}

/// Fully resolved inputs of one invocation.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub scenario: Scenario,
    pub run: RunConfig,
    /// Keys that were not given in the config file or on the command line.
    pub defaulted: Vec<String>,
}

impl Resolved {
    /// Every effective setting as config text; parsing it back and resolving
    /// without flags reproduces this run.
    pub fn effective_config(&self) -> String {
        let mut raw = self.scenario.to_raw();
        self.run.write_raw(&mut raw);
        to_config_text(&raw)
    }
}

fn apply_flags(raw: &mut RawConfig, args: &Args) -> Result<()> {
    if let Some(s) = &args.system {
        parse_systems(s)?;
        raw.set("run.systems", Value::Text(s.clone()))?;
    }
    if let Some(u) = &args.users {
        parse_user_range(u)?;
        raw.set("run.user_counts", Value::Text(u.clone()))?;
    }
    if let Some(n) = args.drops {
        raw.set("run.n_drops", Value::Integer(n))?;
    }
    if let Some(s) = args.seed {
        raw.set("run.base_seed", Value::Integer(s))?;
    }
    if let Some(m) = &args.rate_model {
        raw.set("system.rate_model", Value::Text(m.clone()))?;
    }
    if let Some(o) = &args.out {
        raw.set("run.output_dir", Value::Text(o.to_string_lossy().into_owned()))?;
    }
    if args.plots {
        raw.set("run.emit_plots", Value::Bool(true))?;
    }
    if args.dump_channel {
        raw.set("run.dump_channel", Value::Bool(true))?;
    }
    if args.sequential {
        raw.set("run.parallel", Value::Bool(false))?;
    }
    Ok(())
}

/// Applies flag > config file > environment > default precedence.
pub fn resolve(args: &Args, env_out: Option<&str>) -> Result<Resolved> {
    let mut raw = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| Error::config("--config", format!("{}: {e}", path.display())))?;
            parse_config(&text)?
        }
        None => RawConfig::default(),
    };
    apply_flags(&mut raw, args)?;
    let defaulted = crate::scenario::defaulted_keys(&raw);
    let scenario = validate_config(&raw)?;
    let mut run = RunConfig::from_raw(&raw, &scenario, env_out)?;
    run.config_path = args.config.clone();
    if !scenario.users.is_empty() {
        let max = *run.user_counts.last().expect("non-empty");
        if max > scenario.users.len() {
            return Err(Error::config(
                "system.users",
                format!(
                    "{max} users requested but only {} positions are configured",
                    scenario.users.len()
                ),
            ));
        }
    }
    Ok(Resolved {
        scenario,
        run,
        defaulted,
    })
}

/// Spot-size diagnostic text for the VCSEL array.
pub fn spot_diagnostic(scenario: &Scenario) -> Result<String> {
    let d = scenario.room.link_distance();
    let radius = optics::vcsel_spot_radius(&scenario.vcsel, d)?;
    let area = optics::array_spot_area(&scenario.vcsel, d)?;
    let mut s = String::new();
    let _ = writeln!(s, "link_distance_m = {d:.16e}");
    let _ = writeln!(s, "vcsel_element_spot_radius_m = {radius:.16e}");
    let _ = writeln!(s, "vcsel_array_spot_area_m2 = {area:.16e}");
    let _ = writeln!(s, "nominal_spot_area_m2 = {NOMINAL_SPOT_AREA:.16e}");
    let _ = writeln!(s, "ratio = {:.16e}", area / NOMINAL_SPOT_AREA);
    Ok(s)
}

fn print_summary(sweep: &SweepResult) {
    println!(
        "{:<6} {:>7} {:>7} {:>7} {:>14} {:>14} {:>14}",
        "system", "users", "drops", "failed", "sum rate Gb/s", "std Gb/s", "CF Gb/mJ"
    );
    for c in &sweep.cells {
        println!(
            "{:<6} {:>7} {:>7} {:>7} {:>14.4} {:>14.4} {:>14.6}",
            c.system.name(),
            c.n_users,
            c.n_drops,
            c.n_failed,
            c.sum_rate_mean * 1e-9,
            c.sum_rate_std * 1e-9,
            c.cf_mean * 1e-12
        );
    }
}

fn write_channels(r: &Resolved, dir: &Path) -> Result<()> {
    let dir = dir.join("channels");
    fs::create_dir_all(&dir)?;
    for &system in &r.run.systems {
        for &n in &r.run.user_counts {
            let h = runner::drop_channel(&r.scenario, system, n, 0, r.run.base_seed)?;
            fs::write(
                dir.join(format!("{}_{}users_drop0.csv", system.name(), n)),
                h.to_csv(),
            )?;
        }
    }
    Ok(())
}

/// Executes a resolved run and writes every artifact.
pub fn execute(r: &Resolved) -> Result<SweepResult> {
    let out = &r.run.output_dir;
    fs::create_dir_all(out)?;
    fs::write(out.join("effective_config.ini"), r.effective_config())?;

    let diag = spot_diagnostic(&r.scenario)?;
    fs::write(out.join("diagnostics.txt"), &diag)?;
    let area = optics::array_spot_area(&r.scenario.vcsel, r.scenario.room.link_distance())?;
    eprintln!("vcsel array spot area {area:.4e} m² (nominal {NOMINAL_SPOT_AREA} m²)");

    let sweep = runner::sweep_users(
        &r.scenario,
        &r.run.systems,
        &r.run.user_counts,
        r.run.n_drops,
        r.run.base_seed,
        r.run.execution,
    )?;
    csv::write_csv(&sweep, out)?;
    if r.run.emit_plots {
        plot::render_plots(&sweep.cells, out)?;
    }
    if r.run.dump_channel {
        write_channels(r, out)?;
    }
    Ok(sweep)
}

/// Runs the tool and returns the process exit code: 0 success, 1
/// configuration error, 2 runtime failure.
pub fn main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args = match Args::try_parse_from(argv) {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let env_out = std::env::var(OUT_ENV).ok();
    let resolved = match resolve(&args, env_out.as_deref()) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return 1;
        }
    };
    if !resolved.defaulted.is_empty() {
        eprintln!("{} scenario keys use defaults", resolved.defaulted.len());
    }
    match execute(&resolved) {
        Ok(sweep) => {
            print_summary(&sweep);
            println!("results written to {}", resolved.run.output_dir.display());
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_config() {
                1
            } else {
                2
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn args(list: &[&str]) -> Args {
        Args::try_parse_from(std::iter::once("owcsim").chain(list.iter().copied())).unwrap()
    }

    #[test]
    fn user_ranges() {
        assert_eq!(parse_user_range("2:12:2").unwrap(), vec![2, 4, 6, 8, 10, 12]);
        assert_eq!(parse_user_range("1:3").unwrap(), vec![1, 2, 3]);
        assert_eq!(parse_user_range("5").unwrap(), vec![5]);
        assert_eq!(parse_user_range("2,4,8").unwrap(), vec![2, 4, 8]);
        let e = parse_user_range("12:2:2").unwrap_err();
        assert!(e.is_config() && e.to_string().contains("empty user range"));
        assert!(parse_user_range("0:4:2").is_err());
        assert!(parse_user_range("2:4:0").is_err());
        assert!(parse_user_range("4,2").is_err());
        assert!(parse_user_range("a:b").is_err());
    }

    #[test]
    fn systems() {
        assert_eq!(
            parse_systems("both").unwrap(),
            vec![SystemKind::Led, SystemKind::Vcsel]
        );
        assert_eq!(parse_systems("vcsel").unwrap(), vec![SystemKind::Vcsel]);
        assert!(parse_systems("laser").is_err());
    }

    #[test]
    fn defaults_without_flags() {
        let r = resolve(&args(&[]), None).unwrap();
        assert_eq!(r.run.user_counts, vec![2, 4, 6, 8, 10, 12]);
        assert_eq!(r.run.n_drops, 100);
        assert_eq!(r.run.base_seed, 42);
        assert_eq!(r.run.systems, vec![SystemKind::Led, SystemKind::Vcsel]);
        assert_eq!(r.run.output_dir, PathBuf::from("out"));
        assert_eq!(r.scenario, Scenario::default());
    }

    #[test]
    fn env_sets_default_output_but_flag_wins() {
        let r = resolve(&args(&[]), Some("/tmp/envdir")).unwrap();
        assert_eq!(r.run.output_dir, PathBuf::from("/tmp/envdir"));
        let r = resolve(&args(&["--out", "flagdir"]), Some("/tmp/envdir")).unwrap();
        assert_eq!(r.run.output_dir, PathBuf::from("flagdir"));
    }

    #[test]
    fn effective_config_round_trips() {
        let r = resolve(
            &args(&["--users", "1:5:2", "--rate-model", "ook", "--seed", "9"]),
            None,
        )
        .unwrap();
        let raw = parse_config(&r.effective_config()).unwrap();
        let scenario = validate_config(&raw).unwrap();
        assert_eq!(scenario, r.scenario);
        assert_eq!(RunConfig::from_raw(&raw, &scenario, None).unwrap(), r.run);
        assert_eq!(r.run.rate_model, RateModel::OokFec);
    }

    #[test]
    fn diagnostic_mentions_both_areas() {
        let d = spot_diagnostic(&Scenario::default()).unwrap();
        assert!(d.contains("vcsel_array_spot_area_m2") && d.contains("nominal_spot_area_m2"));
    }
}
