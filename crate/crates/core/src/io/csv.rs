//! CSV output: one row per drop and one row per (system, n_users) cell.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::Result;
use crate::runner::{CellSummary, DropResult, SweepResult};

pub const DROPS_HEADER: &str = "system,n_users,drop,seed,sum_rate_bps,consumed_power_w,cf_bits_per_joule,\
min_sinr_db,max_sinr_db,failed,thermal_var,preamp_var,rin_var_mean,bg_shot_var";

pub const SUMMARY_HEADER: &str = "system,n_users,n_drops,n_failed,sum_rate_mean_bps,sum_rate_std_bps,\
cf_mean_bits_per_joule,cf_std_bits_per_joule,consumed_power_w";

// NaN (e.g. a cell where every drop failed) becomes an empty field.
fn num(x: f64) -> String {
    if x.is_nan() {
        String::new()
    } else {
        format!("{x:.16e}")
    }
}

fn db(x: f64) -> String {
    num(10.0 * x.log10())
}

fn drop_row(out: &mut String, r: &DropResult) {
    let _ = write!(
        out,
        "{},{},{},{},",
        r.system.name(),
        r.n_users,
        r.drop_index,
        r.seed
    );
    match &r.outcome {
        Ok(m) => {
            let min = m.per_user_sinr.iter().copied().fold(f64::INFINITY, f64::min);
            let max = m.per_user_sinr.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let _ = writeln!(
                out,
                "{},{},{},{},{},0,{},{},{},{}",
                num(m.sum_rate),
                num(m.consumed_power),
                num(m.cf_bits_per_joule),
                db(min),
                db(max),
                num(m.noise.thermal_var),
                num(m.noise.preamp_var),
                num(m.noise.rin_var_mean),
                num(m.noise.bg_shot_var),
            );
        }
        Err(_) => out.push_str(",,,,,1,,,,\n"),
    }
}

pub fn drops_csv(records: &[DropResult]) -> String {
    let mut out = String::from(DROPS_HEADER);
    out.push('\n');
    for r in records {
        drop_row(&mut out, r);
    }
    out
}

pub fn summary_csv(cells: &[CellSummary]) -> String {
    let mut out = String::from(SUMMARY_HEADER);
    out.push('\n');
    for c in cells {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            c.system.name(),
            c.n_users,
            c.n_drops,
            c.n_failed,
            num(c.sum_rate_mean),
            num(c.sum_rate_std),
            num(c.cf_mean),
            num(c.cf_std),
            num(c.consumed_power),
        );
    }
    out
}

/// Writes `drops.csv` and `summary.csv` into `dir`, creating it if needed.
pub fn write_csv(sweep: &SweepResult, dir: &Path) -> Result<(PathBuf, PathBuf)> {
    fs::create_dir_all(dir)?;
    let drops = dir.join("drops.csv");
    let summary = dir.join("summary.csv");
    fs::write(&drops, drops_csv(&sweep.records))?;
    fs::write(&summary, summary_csv(&sweep.cells))?;
    Ok((drops, summary))
}
