//! Sectioned `key = value` configuration text.
//!
//! ```text
//! # comment
//! [vcsel]
//! beam_waist_w0 = 5e-6
//! [system]
//! users = 1.0, 2.0, 1.0; 4.0, 4.0, 1.0
//! ```
//!
//! Keys are the field names of the scenario types; values are SI base units
//! except keys suffixed `_db` / `_db_per_hz`. Unknown sections and keys are
//! rejected with the offending line number.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Kind {
    Number,
    Integer,
    Bool,
    Text,
    Points,
}

pub(crate) const SCHEMA: &[(&str, &[(&str, Kind)])] = &[
    (
        "system",
        &[
            ("n_aps", Kind::Integer),
            ("ap_positions", Kind::Points),
            ("users", Kind::Points),
            ("fec_ber_limit", Kind::Number),
            ("rate_model", Kind::Text),
            ("rank_policy", Kind::Text),
        ],
    ),
    (
        "room",
        &[
            ("width", Kind::Number),
            ("depth", Kind::Number),
            ("height", Kind::Number),
            ("receive_plane_height", Kind::Number),
        ],
    ),
    (
        "vcsel",
        &[
            ("n_elements", Kind::Integer),
            ("pitch", Kind::Number),
            ("beam_waist_w0", Kind::Number),
            ("wavelength", Kind::Number),
            ("lens_focal_length", Kind::Number),
            ("vcsel_to_lens", Kind::Number),
            ("lens_refractive_index", Kind::Number),
            ("optical_power_per_element", Kind::Number),
            ("electrical_power_per_element", Kind::Number),
            ("bandwidth_hz", Kind::Number),
            ("rin_db_per_hz", Kind::Number),
        ],
    ),
    (
        "led",
        &[
            ("n_emitters", Kind::Integer),
            ("lambertian_order_m", Kind::Number),
            ("optical_power_per_emitter", Kind::Number),
            ("electrical_power_per_emitter", Kind::Number),
            ("bandwidth_hz", Kind::Number),
        ],
    ),
    (
        "receiver",
        &[
            ("detector_area", Kind::Number),
            ("fov_half_angle", Kind::Number),
            ("responsivity_vcsel", Kind::Number),
            ("responsivity_led", Kind::Number),
            ("load_resistance", Kind::Number),
            ("tia_noise_figure_db", Kind::Number),
            ("temperature_k", Kind::Number),
            ("background_current", Kind::Number),
        ],
    ),
    (
        "noise",
        &[("rin_mode", Kind::Text), ("include_signal_shot", Kind::Bool)],
    ),
    (
        "run",
        &[
            ("systems", Kind::Text),
            ("user_counts", Kind::Text),
            ("n_drops", Kind::Integer),
            ("base_seed", Kind::Integer),
            ("output_dir", Kind::Text),
            ("emit_plots", Kind::Bool),
            ("dump_channel", Kind::Bool),
            ("parallel", Kind::Bool),
        ],
    ),
];

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Number(f64),
    Integer(u64),
    Bool(bool),
    Text(String),
    Points(Vec<[f64; 3]>),
}

/// A parsed config entry and the line it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub value: Value,
    pub line: usize,
}

/// Parsed configuration, keyed by `section.key`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawConfig {
    entries: BTreeMap<String, Entry>,
}

impl RawConfig {
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn get(&self, key: &str) -> Option<&Value> {
        self.entries.get(key).map(|e| &e.value)
    }

    pub fn entry(&self, key: &str) -> Option<&Entry> {
        self.entries.get(key)
    }

    /// Inserts or replaces a value; used for command-line overrides. The key
    /// must exist in the schema with a matching value kind.
    pub fn set(&mut self, key: &str, value: Value) -> Result<()> {
        let kind = schema_kind(key).ok_or_else(|| Error::config(key, "unknown key"))?;
        if value_kind(&value) != kind {
            return Err(Error::config(key, "value has the wrong type"));
        }
        self.entries.insert(key.to_string(), Entry { value, line: 0 });
        Ok(())
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub(crate) fn number(&self, key: &str) -> Option<f64> {
        match self.get(key) {
            Some(Value::Number(v)) => Some(*v),
            _ => None,
        }
    }

    pub(crate) fn integer(&self, key: &str) -> Option<u64> {
        match self.get(key) {
            Some(Value::Integer(v)) => Some(*v),
            _ => None,
        }
    }

    pub(crate) fn boolean(&self, key: &str) -> Option<bool> {
        match self.get(key) {
            Some(Value::Bool(v)) => Some(*v),
            _ => None,
        }
    }

    pub(crate) fn text(&self, key: &str) -> Option<&str> {
        match self.get(key) {
            Some(Value::Text(v)) => Some(v.as_str()),
            _ => None,
        }
    }

    pub(crate) fn points(&self, key: &str) -> Option<&[[f64; 3]]> {
        match self.get(key) {
            Some(Value::Points(v)) => Some(v.as_slice()),
            _ => None,
        }
    }
}

fn schema_kind(key: &str) -> Option<Kind> {
    let (section, field) = key.split_once('.')?;
    SCHEMA
        .iter()
        .find(|(s, _)| *s == section)?
        .1
        .iter()
        .find(|(k, _)| *k == field)
        .map(|(_, kind)| *kind)
}

fn value_kind(v: &Value) -> Kind {
    match v {
        Value::Number(_) => Kind::Number,
        Value::Integer(_) => Kind::Integer,
        Value::Bool(_) => Kind::Bool,
        Value::Text(_) => Kind::Text,
        Value::Points(_) => Kind::Points,
    }
}

fn parse_number(s: &str, line: usize) -> Result<f64> {
    let v: f64 = s.parse().map_err(|_| Error::Parse {
        line,
        msg: format!("unparseable number '{s}'"),
    })?;
    if !v.is_finite() {
        return Err(Error::Parse {
            line,
            msg: format!("non-finite number '{s}'"),
        });
    }
    Ok(v)
}

fn parse_points(s: &str, line: usize) -> Result<Vec<[f64; 3]>> {
    let mut out = Vec::new();
    for chunk in s.split(';').map(str::trim).filter(|c| !c.is_empty()) {
        let parts: Vec<&str> = chunk
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|p| !p.is_empty())
            .collect();
        if parts.len() != 3 {
            return Err(Error::Parse {
                line,
                msg: format!("expected 'x, y, z' triple, got '{chunk}'"),
            });
        }
        out.push([
            parse_number(parts[0], line)?,
            parse_number(parts[1], line)?,
            parse_number(parts[2], line)?,
        ]);
    }
    Ok(out)
}

fn parse_value(kind: Kind, s: &str, line: usize) -> Result<Value> {
    Ok(match kind {
        Kind::Number => Value::Number(parse_number(s, line)?),
        Kind::Integer => Value::Integer(s.parse().map_err(|_| Error::Parse {
            line,
            msg: format!("unparseable integer '{s}'"),
        })?),
        Kind::Bool => match s {
            "true" | "1" | "yes" => Value::Bool(true),
            "false" | "0" | "no" => Value::Bool(false),
            _ => {
                return Err(Error::Parse {
                    line,
                    msg: format!("unparseable boolean '{s}'"),
                })
            }
        },
        Kind::Text => Value::Text(s.to_string()),
        Kind::Points => Value::Points(parse_points(s, line)?),
    })
}

/// Parses config text into a [`RawConfig`].
pub fn parse_config(text: &str) -> Result<RawConfig> {
    let mut cfg = RawConfig::default();
    let mut section: Option<&str> = None;

    for (idx, raw_line) in text.lines().enumerate() {
        let line = idx + 1;
        let content = match raw_line.find('#') {
            Some(pos) => &raw_line[..pos],
            None => raw_line,
        }
        .trim();
        if content.is_empty() {
            continue;
        }

        if let Some(rest) = content.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| Error::Parse {
                    line,
                    msg: format!("malformed section header '{content}'"),
                })?
                .trim();
            let known = SCHEMA
                .iter()
                .find(|(s, _)| *s == name)
                .ok_or_else(|| Error::Parse {
                    line,
                    msg: format!("unknown section '{name}'"),
                })?;
            section = Some(known.0);
            continue;
        }

        let (key, value) = content.split_once('=').ok_or_else(|| Error::Parse {
            line,
            msg: format!("malformed line, expected 'key = value': '{content}'"),
        })?;
        let key = key.trim();
        let value = value.trim();
        let section = section.ok_or_else(|| Error::Parse {
            line,
            msg: format!("key '{key}' outside of any section"),
        })?;
        let full = format!("{section}.{key}");
        let kind = schema_kind(&full).ok_or_else(|| Error::Parse {
            line,
            msg: format!("unknown key '{key}'"),
        })?;
        if cfg.entries.contains_key(&full) {
            return Err(Error::Parse {
                line,
                msg: format!("duplicate key '{key}'"),
            });
        }
        let value = parse_value(kind, value, line)?;
        cfg.entries.insert(full, Entry { value, line });
    }
    Ok(cfg)
}

fn format_value(v: &Value) -> String {
    match v {
        Value::Number(x) => format!("{x:?}"),
        Value::Integer(x) => x.to_string(),
        Value::Bool(x) => x.to_string(),
        Value::Text(x) => x.clone(),
        Value::Points(ps) => ps
            .iter()
            .map(|p| format!("{:?}, {:?}, {:?}", p[0], p[1], p[2]))
            .collect::<Vec<_>>()
            .join("; "),
    }
}

/// Serializes a config in schema order. `parse_config` of the output yields
/// the same values.
pub fn to_config_text(cfg: &RawConfig) -> String {
    let mut out = String::new();
    for (section, fields) in SCHEMA {
        let present: Vec<_> = fields
            .iter()
            .filter_map(|(k, _)| {
                let full = format!("{section}.{k}");
                cfg.get(&full).map(|v| (*k, v))
            })
            .collect();
        if present.is_empty() {
            continue;
        }
        if !out.is_empty() {
            out.push('\n');
        }
        let _ = writeln!(out, "[{section}]");
        for (k, v) in present {
            let _ = writeln!(out, "{k} = {}", format_value(v));
        }
    }
    out
}
