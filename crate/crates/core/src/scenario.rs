//! Room geometry, access-point layout, user placement and the physical
//! parameter set of one simulated configuration.

use std::f64::consts::FRAC_PI_2;
use std::fmt;

use crate::error::{Error, Result};
use crate::io::config::{RawConfig, Value};
use crate::rng::SplitMix64;

/// Tolerance used when checking that a point lies on a given plane.
const PLANE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn norm(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }
}

impl fmt::Display for Vec3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.x, self.y, self.z)
    }
}

impl From<[f64; 3]> for Vec3 {
    fn from(p: [f64; 3]) -> Self {
        Self::new(p[0], p[1], p[2])
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Room {
    pub width: f64,
    pub depth: f64,
    pub height: f64,
    pub receive_plane_height: f64,
}

impl Default for Room {
    /// 5 m x 5 m x 4 m with the receive plane 1 m above the floor, leaving a
    /// 3 m ceiling-to-plane link distance.
    fn default() -> Self {
        Self {
            width: 5.0,
            depth: 5.0,
            height: 4.0,
            receive_plane_height: 1.0,
        }
    }
}

impl Room {
    pub fn contains_footprint(&self, p: &Vec3) -> bool {
        (0.0..=self.width).contains(&p.x) && (0.0..=self.depth).contains(&p.y)
    }

    /// Ceiling to receive-plane distance.
    pub fn link_distance(&self) -> f64 {
        self.height - self.receive_plane_height
    }

    fn validate(&self) -> Result<()> {
        for (key, v) in [
            ("room.width", self.width),
            ("room.depth", self.depth),
            ("room.height", self.height),
            ("room.receive_plane_height", self.receive_plane_height),
        ] {
            positive(key, v)?;
        }
        if self.receive_plane_height >= self.height {
            return Err(Error::config(
                "room.receive_plane_height",
                "receive_plane_height must be below the ceiling height",
            ));
        }
        Ok(())
    }
}

/// A ceiling-mounted access point. All APs point straight down.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ApSpec {
    pub position: Vec3,
    pub orientation: Vec3,
}

impl ApSpec {
    pub fn downward(position: Vec3) -> Self {
        Self {
            position,
            orientation: Vec3::new(0.0, 0.0, -1.0),
        }
    }
}

/// Parameters of one VCSEL micro-lens array transmitter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VcselArrayParams {
    pub n_elements: usize,
    pub pitch: f64,
    pub beam_waist_w0: f64,
    pub wavelength: f64,
    pub lens_focal_length: f64,
    pub vcsel_to_lens: f64,
    /// Carried as metadata; the thin-lens model uses the focal length only.
    pub lens_refractive_index: f64,
    pub optical_power_per_element: f64,
    pub electrical_power_per_element: f64,
    pub bandwidth_hz: f64,
    pub rin_db_per_hz: f64,
}

impl Default for VcselArrayParams {
    fn default() -> Self {
        Self {
            n_elements: 25,
            pitch: 10e-6,
            beam_waist_w0: 5e-6,
            wavelength: 1550e-9,
            lens_focal_length: 0.127e-3,
            vcsel_to_lens: 0.133e-3,
            lens_refractive_index: 1.5,
            optical_power_per_element: 10e-3,
            electrical_power_per_element: 50e-3,
            bandwidth_hz: 1.5e9,
            rin_db_per_hz: -155.0,
        }
    }
}

impl VcselArrayParams {
    /// Side length of the square sub-array.
    pub fn side(&self) -> usize {
        (self.n_elements as f64).sqrt().round() as usize
    }

    /// Lateral (x, y) offsets of every element from the array center, row
    /// major.
    pub fn element_offsets(&self) -> Vec<(f64, f64)> {
        let k = self.side();
        let half = (k as f64 - 1.0) / 2.0;
        let mut out = Vec::with_capacity(k * k);
        for i in 0..k {
            for j in 0..k {
                out.push(((i as f64 - half) * self.pitch, (j as f64 - half) * self.pitch));
            }
        }
        out
    }

    pub fn total_optical_power(&self) -> f64 {
        self.n_elements as f64 * self.optical_power_per_element
    }

    fn validate(&self) -> Result<()> {
        let k = self.side();
        if self.n_elements == 0 || k * k != self.n_elements {
            return Err(Error::config(
                "vcsel.n_elements",
                format!(
                    "n_elements must be a non-zero perfect square, got {}",
                    self.n_elements
                ),
            ));
        }
        positive("vcsel.beam_waist_w0", self.beam_waist_w0)?;
        positive("vcsel.wavelength", self.wavelength)?;
        positive("vcsel.lens_focal_length", self.lens_focal_length)?;
        positive("vcsel.vcsel_to_lens", self.vcsel_to_lens)?;
        positive("vcsel.lens_refractive_index", self.lens_refractive_index)?;
        positive("vcsel.optical_power_per_element", self.optical_power_per_element)?;
        positive(
            "vcsel.electrical_power_per_element",
            self.electrical_power_per_element,
        )?;
        positive("vcsel.bandwidth_hz", self.bandwidth_hz)?;
        if !(self.pitch.is_finite() && self.pitch >= 0.0) {
            return Err(Error::config("vcsel.pitch", "pitch must be non-negative"));
        }
        if !(self.rin_db_per_hz.is_finite() && self.rin_db_per_hz < 0.0) {
            return Err(Error::config(
                "vcsel.rin_db_per_hz",
                "rin_db_per_hz must be negative",
            ));
        }
        Ok(())
    }
}

/// Parameters of one LED access point (a cluster of co-located emitters).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LedUnitParams {
    pub n_emitters: usize,
    pub lambertian_order_m: f64,
    pub optical_power_per_emitter: f64,
    pub electrical_power_per_emitter: f64,
    pub bandwidth_hz: f64,
}

impl Default for LedUnitParams {
    fn default() -> Self {
        Self {
            n_emitters: 4,
            // 60 degree half-power semi-angle.
            lambertian_order_m: 1.0,
            optical_power_per_emitter: 1.0,
            electrical_power_per_emitter: 3.0,
            bandwidth_hz: 20e6,
        }
    }
}

impl LedUnitParams {
    pub fn total_optical_power(&self) -> f64 {
        self.n_emitters as f64 * self.optical_power_per_emitter
    }

    fn validate(&self) -> Result<()> {
        if self.n_emitters == 0 {
            return Err(Error::config("led.n_emitters", "n_emitters must be at least 1"));
        }
        if !(self.lambertian_order_m.is_finite() && self.lambertian_order_m >= 1.0) {
            return Err(Error::config(
                "led.lambertian_order_m",
                "lambertian_order_m must be at least 1",
            ));
        }
        positive("led.optical_power_per_emitter", self.optical_power_per_emitter)?;
        positive(
            "led.electrical_power_per_emitter",
            self.electrical_power_per_emitter,
        )?;
        positive("led.bandwidth_hz", self.bandwidth_hz)
    }
}

/// Photodetector and front end shared by all users.
///
/// The two systems operate at different wavelengths (1550 nm infrared and
/// visible light), so the responsivity is kept per system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReceiverParams {
    pub detector_area: f64,
    pub fov_half_angle: f64,
    pub responsivity_vcsel: f64,
    pub responsivity_led: f64,
    pub load_resistance: f64,
    pub tia_noise_figure_db: f64,
    pub temperature_k: f64,
    pub background_current: f64,
}

impl Default for ReceiverParams {
    fn default() -> Self {
        Self {
            detector_area: 1e-4,
            fov_half_angle: 60f64.to_radians(),
            responsivity_vcsel: 0.9,
            responsivity_led: 0.4,
            load_resistance: 50.0,
            tia_noise_figure_db: 5.0,
            temperature_k: 300.0,
            background_current: 10e-6,
        }
    }
}

impl ReceiverParams {
    pub fn responsivity(&self, system: SystemKind) -> f64 {
        match system {
            SystemKind::Vcsel => self.responsivity_vcsel,
            SystemKind::Led => self.responsivity_led,
        }
    }

    /// Half side of the square detector aperture.
    pub fn aperture_half_side(&self) -> f64 {
        self.detector_area.sqrt() / 2.0
    }

    fn validate(&self) -> Result<()> {
        positive("receiver.detector_area", self.detector_area)?;
        positive("receiver.fov_half_angle", self.fov_half_angle)?;
        if self.fov_half_angle > FRAC_PI_2 {
            return Err(Error::config(
                "receiver.fov_half_angle",
                "fov_half_angle exceeds π/2",
            ));
        }
        positive("receiver.responsivity_vcsel", self.responsivity_vcsel)?;
        positive("receiver.responsivity_led", self.responsivity_led)?;
        positive("receiver.load_resistance", self.load_resistance)?;
        positive("receiver.temperature_k", self.temperature_k)?;
        if !self.tia_noise_figure_db.is_finite() || self.tia_noise_figure_db < 0.0 {
            return Err(Error::config(
                "receiver.tia_noise_figure_db",
                "tia_noise_figure_db must be non-negative",
            ));
        }
        if !(self.background_current.is_finite() && self.background_current >= 0.0) {
            return Err(Error::config(
                "receiver.background_current",
                "background_current must be non-negative",
            ));
        }
        Ok(())
    }
}

/// How laser relative intensity noise is applied to a user's photocurrent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RinMode {
    /// RIN of the aggregate received signal photocurrent.
    #[default]
    Aggregate,
    /// Each array element fluctuates independently; the aggregate RIN
    /// variance is divided by the element count.
    PerElement,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct NoiseOptions {
    pub rin_mode: RinMode,
    /// Adds signal shot noise `2 q i_sig B`. Off by default.
    pub include_signal_shot: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SystemKind {
    Led,
    Vcsel,
}

impl SystemKind {
    pub fn name(self) -> &'static str {
        match self {
            SystemKind::Led => "led",
            SystemKind::Vcsel => "vcsel",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "vcsel" => Some(SystemKind::Vcsel),
            "led" => Some(SystemKind::Led),
            _ => None,
        }
    }
}

impl fmt::Display for SystemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RateModel {
    #[default]
    Shannon,
    OokFec,
}

impl RateModel {
    pub fn name(self) -> &'static str {
        match self {
            RateModel::Shannon => "shannon",
            RateModel::OokFec => "ook",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "shannon" => Some(RateModel::Shannon),
            "ook" | "ookfec" => Some(RateModel::OokFec),
            _ => None,
        }
    }
}

/// What the runner does with a group channel that is numerically
/// rank deficient.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RankPolicy {
    /// Invert only the singular directions above the rank tolerance; users
    /// confined to the discarded directions share them and see the residual
    /// interference.
    #[default]
    Truncated,
    /// Record the drop as failed.
    Strict,
}

impl RankPolicy {
    pub fn name(self) -> &'static str {
        match self {
            RankPolicy::Truncated => "truncated",
            RankPolicy::Strict => "strict",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "truncated" => Some(RankPolicy::Truncated),
            "strict" => Some(RankPolicy::Strict),
            _ => None,
        }
    }
}

/// One fully specified simulation configuration.
///
/// `users` may be empty, in which case the runner draws users for every
/// drop with [`place_users`]. When it is not empty the runner serves the
/// first `n_users` of the listed positions in every drop.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub room: Room,
    pub aps: Vec<ApSpec>,
    pub vcsel: VcselArrayParams,
    pub led: LedUnitParams,
    pub receiver: ReceiverParams,
    pub noise: NoiseOptions,
    pub users: Vec<Vec3>,
    pub fec_ber_limit: f64,
    pub rate_model: RateModel,
    pub rank_policy: RankPolicy,
}

pub const DEFAULT_N_APS: usize = 8;
pub const DEFAULT_FEC_BER_LIMIT: f64 = 1e-3;

impl Default for Scenario {
    fn default() -> Self {
        let room = Room::default();
        Self {
            aps: default_ap_grid(&room, DEFAULT_N_APS).expect("default grid"),
            room,
            vcsel: VcselArrayParams::default(),
            led: LedUnitParams::default(),
            receiver: ReceiverParams::default(),
            noise: NoiseOptions::default(),
            users: Vec::new(),
            fec_ber_limit: DEFAULT_FEC_BER_LIMIT,
            rate_model: RateModel::default(),
            rank_policy: RankPolicy::default(),
        }
    }
}

impl Scenario {
    /// Checks every invariant of the configuration.
    pub fn validate(&self) -> Result<()> {
        self.room.validate()?;
        self.vcsel.validate()?;
        self.led.validate()?;
        self.receiver.validate()?;
        if self.aps.is_empty() {
            return Err(Error::config("system.n_aps", "at least one AP is required"));
        }
        for (i, ap) in self.aps.iter().enumerate() {
            let p = ap.position;
            if !p.is_finite() || !self.room.contains_footprint(&p) {
                return Err(Error::config(
                    format!("system.ap_positions[{i}]"),
                    format!("AP {i} at {p} is outside the room footprint"),
                ));
            }
            if (p.z - self.room.height).abs() > PLANE_TOL {
                return Err(Error::config(
                    format!("system.ap_positions[{i}]"),
                    format!("AP {i} at {p} is not on the ceiling (z = {})", self.room.height),
                ));
            }
            let o = ap.orientation;
            if (o.norm() - 1.0).abs() > 1e-12 || o.z >= 0.0 {
                return Err(Error::config(
                    format!("system.ap_positions[{i}]"),
                    "AP orientation must be a unit vector pointing down",
                ));
            }
        }
        for (i, u) in self.users.iter().enumerate() {
            if !u.is_finite() || !self.room.contains_footprint(u) {
                return Err(Error::config(
                    format!("system.users[{i}]"),
                    format!("user {i} at {u} is outside the room footprint"),
                ));
            }
            if (u.z - self.room.receive_plane_height).abs() > PLANE_TOL {
                return Err(Error::config(
                    format!("system.users[{i}]"),
                    format!(
                        "user {i} at {u} is not on the receive plane (z = {})",
                        self.room.receive_plane_height
                    ),
                ));
            }
        }
        if !(self.fec_ber_limit > 0.0 && self.fec_ber_limit < 0.5) {
            return Err(Error::config(
                "system.fec_ber_limit",
                "fec_ber_limit must lie in (0, 0.5)",
            ));
        }
        Ok(())
    }

    /// Same scenario with an explicit user list.
    pub fn with_users(&self, users: Vec<Vec3>) -> Scenario {
        Scenario {
            users,
            ..self.clone()
        }
    }

    /// Every scenario value as config entries. Feeding the result back to
    /// [`validate_config`] reproduces `self`.
    pub fn to_raw(&self) -> RawConfig {
        let mut raw = RawConfig::default();
        let mut put = |k: &str, v: Value| raw.set(k, v).expect("schema key");
        let n = |x: f64| Value::Number(x);
        let i = |x: usize| Value::Integer(x as u64);
        let t = |x: &str| Value::Text(x.to_string());
        let pts = |v: &[Vec3]| Value::Points(v.iter().map(|p| [p.x, p.y, p.z]).collect());

        put("system.n_aps", i(self.aps.len()));
        put(
            "system.ap_positions",
            pts(&self.aps.iter().map(|a| a.position).collect::<Vec<_>>()),
        );
        if !self.users.is_empty() {
            put("system.users", pts(&self.users));
        }
        put("system.fec_ber_limit", n(self.fec_ber_limit));
        put("system.rate_model", t(self.rate_model.name()));
        put("system.rank_policy", t(self.rank_policy.name()));

        put("room.width", n(self.room.width));
        put("room.depth", n(self.room.depth));
        put("room.height", n(self.room.height));
        put("room.receive_plane_height", n(self.room.receive_plane_height));

        let v = &self.vcsel;
        put("vcsel.n_elements", i(v.n_elements));
        put("vcsel.pitch", n(v.pitch));
        put("vcsel.beam_waist_w0", n(v.beam_waist_w0));
        put("vcsel.wavelength", n(v.wavelength));
        put("vcsel.lens_focal_length", n(v.lens_focal_length));
        put("vcsel.vcsel_to_lens", n(v.vcsel_to_lens));
        put("vcsel.lens_refractive_index", n(v.lens_refractive_index));
        put("vcsel.optical_power_per_element", n(v.optical_power_per_element));
        put(
            "vcsel.electrical_power_per_element",
            n(v.electrical_power_per_element),
        );
        put("vcsel.bandwidth_hz", n(v.bandwidth_hz));
        put("vcsel.rin_db_per_hz", n(v.rin_db_per_hz));

        let l = &self.led;
        put("led.n_emitters", i(l.n_emitters));
        put("led.lambertian_order_m", n(l.lambertian_order_m));
        put("led.optical_power_per_emitter", n(l.optical_power_per_emitter));
        put(
            "led.electrical_power_per_emitter",
            n(l.electrical_power_per_emitter),
        );
        put("led.bandwidth_hz", n(l.bandwidth_hz));

        let r = &self.receiver;
        put("receiver.detector_area", n(r.detector_area));
        put("receiver.fov_half_angle", n(r.fov_half_angle));
        put("receiver.responsivity_vcsel", n(r.responsivity_vcsel));
        put("receiver.responsivity_led", n(r.responsivity_led));
        put("receiver.load_resistance", n(r.load_resistance));
        put("receiver.tia_noise_figure_db", n(r.tia_noise_figure_db));
        put("receiver.temperature_k", n(r.temperature_k));
        put("receiver.background_current", n(r.background_current));

        put(
            "noise.rin_mode",
            t(match self.noise.rin_mode {
                RinMode::Aggregate => "aggregate",
                RinMode::PerElement => "per_element",
            }),
        );
        put(
            "noise.include_signal_shot",
            Value::Bool(self.noise.include_signal_shot),
        );
        raw
    }
}

fn positive(key: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        let field = key.rsplit('.').next().unwrap_or(key);
        Err(Error::config(key, format!("{field} must be positive, got {v}")))
    }
}

/// Scenario keys (`section.field`) absent from `raw`, i.e. the ones that
/// [`validate_config`] fills with defaults.
pub fn defaulted_keys(raw: &RawConfig) -> Vec<String> {
    let full = Scenario::default().to_raw();
    full.keys()
        .filter(|k| *k != "system.ap_positions")
        .filter(|k| raw.get(k).is_none())
        .map(str::to_string)
        .collect()
}

/// Builds a validated [`Scenario`] from parsed config entries. Missing keys
/// take their defaults; the `run` section is ignored here.
pub fn validate_config(raw: &RawConfig) -> Result<Scenario> {
    let d = Scenario::default();
    let num = |k: &str, dv: f64| raw.number(k).unwrap_or(dv);
    let count = |k: &str, dv: usize| raw.integer(k).map(|v| v as usize).unwrap_or(dv);

    let room = Room {
        width: num("room.width", d.room.width),
        depth: num("room.depth", d.room.depth),
        height: num("room.height", d.room.height),
        receive_plane_height: num("room.receive_plane_height", d.room.receive_plane_height),
    };
    room.validate()?;

    let aps = match raw.points("system.ap_positions") {
        Some(pts) => {
            if let Some(n) = raw.integer("system.n_aps") {
                if n as usize != pts.len() {
                    return Err(Error::config(
                        "system.n_aps",
                        format!("n_aps = {n} but {} ap_positions are listed", pts.len()),
                    ));
                }
            }
            pts.iter().map(|p| ApSpec::downward(Vec3::from(*p))).collect()
        }
        None => {
            let n = count("system.n_aps", DEFAULT_N_APS);
            if n == 0 {
                return Err(Error::config("system.n_aps", "at least one AP is required"));
            }
            default_ap_grid(&room, n)?
        }
    };

    let vcsel = VcselArrayParams {
        n_elements: count("vcsel.n_elements", d.vcsel.n_elements),
        pitch: num("vcsel.pitch", d.vcsel.pitch),
        beam_waist_w0: num("vcsel.beam_waist_w0", d.vcsel.beam_waist_w0),
        wavelength: num("vcsel.wavelength", d.vcsel.wavelength),
        lens_focal_length: num("vcsel.lens_focal_length", d.vcsel.lens_focal_length),
        vcsel_to_lens: num("vcsel.vcsel_to_lens", d.vcsel.vcsel_to_lens),
        lens_refractive_index: num("vcsel.lens_refractive_index", d.vcsel.lens_refractive_index),
        optical_power_per_element: num(
            "vcsel.optical_power_per_element",
            d.vcsel.optical_power_per_element,
        ),
        electrical_power_per_element: num(
            "vcsel.electrical_power_per_element",
            d.vcsel.electrical_power_per_element,
        ),
        bandwidth_hz: num("vcsel.bandwidth_hz", d.vcsel.bandwidth_hz),
        rin_db_per_hz: num("vcsel.rin_db_per_hz", d.vcsel.rin_db_per_hz),
    };

    let led = LedUnitParams {
        n_emitters: count("led.n_emitters", d.led.n_emitters),
        lambertian_order_m: num("led.lambertian_order_m", d.led.lambertian_order_m),
        optical_power_per_emitter: num("led.optical_power_per_emitter", d.led.optical_power_per_emitter),
        electrical_power_per_emitter: num(
            "led.electrical_power_per_emitter",
            d.led.electrical_power_per_emitter,
        ),
        bandwidth_hz: num("led.bandwidth_hz", d.led.bandwidth_hz),
    };

    let r = d.receiver;
    let receiver = ReceiverParams {
        detector_area: num("receiver.detector_area", r.detector_area),
        fov_half_angle: num("receiver.fov_half_angle", r.fov_half_angle),
        responsivity_vcsel: num("receiver.responsivity_vcsel", r.responsivity_vcsel),
        responsivity_led: num("receiver.responsivity_led", r.responsivity_led),
        load_resistance: num("receiver.load_resistance", r.load_resistance),
        tia_noise_figure_db: num("receiver.tia_noise_figure_db", r.tia_noise_figure_db),
        temperature_k: num("receiver.temperature_k", r.temperature_k),
        background_current: num("receiver.background_current", r.background_current),
    };

    let rin_mode = match raw.text("noise.rin_mode") {
        None | Some("aggregate") => RinMode::Aggregate,
        Some("per_element") => RinMode::PerElement,
        Some(other) => {
            return Err(Error::config(
                "noise.rin_mode",
                format!("expected 'aggregate' or 'per_element', got '{other}'"),
            ))
        }
    };
    let noise = NoiseOptions {
        rin_mode,
        include_signal_shot: raw.boolean("noise.include_signal_shot").unwrap_or(false),
    };

    let rate_model = match raw.text("system.rate_model") {
        None => d.rate_model,
        Some(s) => RateModel::parse(s).ok_or_else(|| {
            Error::config(
                "system.rate_model",
                format!("expected 'shannon' or 'ook', got '{s}'"),
            )
        })?,
    };
    let rank_policy = match raw.text("system.rank_policy") {
        None => d.rank_policy,
        Some(s) => RankPolicy::parse(s).ok_or_else(|| {
            Error::config(
                "system.rank_policy",
                format!("expected 'truncated' or 'strict', got '{s}'"),
            )
        })?,
    };

    let users = raw
        .points("system.users")
        .map(|pts| pts.iter().map(|p| Vec3::from(*p)).collect())
        .unwrap_or_default();

    let scenario = Scenario {
        room,
        aps,
        vcsel,
        led,
        receiver,
        noise,
        users,
        fec_ber_limit: num("system.fec_ber_limit", d.fec_ber_limit),
        rate_model,
        rank_policy,
    };
    scenario.validate()?;
    Ok(scenario)
}

/// Factors `n` as `rows * cols` with `rows <= cols` and `cols - rows`
/// minimal.
fn near_square_factors(n: usize) -> (usize, usize) {
    let mut r = (n as f64).sqrt().floor() as usize;
    while r > 1 && !n.is_multiple_of(r) {
        r -= 1;
    }
    let r = r.max(1);
    (r, n / r)
}

/// Cell-centred `r x c` grid of downward-facing APs on the ceiling. The
/// larger factor runs along the longer room side (along `y` for square
/// rooms).
pub fn default_ap_grid(room: &Room, n_aps: usize) -> Result<Vec<ApSpec>> {
    if n_aps == 0 {
        return Err(Error::InvalidInput("n_aps must be ≥ 1".into()));
    }
    let (small, large) = near_square_factors(n_aps);
    let (nx, ny) = if room.width > room.depth {
        (large, small)
    } else {
        (small, large)
    };
    let mut aps = Vec::with_capacity(n_aps);
    for ix in 0..nx {
        for iy in 0..ny {
            let x = (ix as f64 + 0.5) * room.width / nx as f64;
            let y = (iy as f64 + 0.5) * room.depth / ny as f64;
            aps.push(ApSpec::downward(Vec3::new(x, y, room.height)));
        }
    }
    Ok(aps)
}

/// Draws `n_users` positions uniformly over the room footprint on the
/// receive plane. Each user consumes two draws (x then y) from a
/// [`SplitMix64`] seeded with `seed`, so the first `n` positions do not
/// depend on how many more users follow.
pub fn place_users(room: &Room, n_users: usize, seed: u64) -> Result<Vec<Vec3>> {
    if n_users == 0 {
        return Err(Error::InvalidInput("n_users must be ≥ 1".into()));
    }
    let mut rng = SplitMix64::new(seed);
    Ok((0..n_users)
        .map(|_| {
            let x = rng.uniform(0.0, room.width);
            let y = rng.uniform(0.0, room.depth);
            Vec3::new(x, y, room.receive_plane_height)
        })
        .collect())
}
