//! Gaussian beam propagation through the VCSEL micro-lens chain, aperture
//! collection of Gaussian spots, and the Lambertian LED emission model.
//!
//! Beams are described by the complex beam parameter `q = z + i z_R`
//! measured from the embedded waist. Elements act through the ABCD rule
//! `q' = (A q + B) / (C q + D)`, which for the two elements used here
//! reduces to `q' = q + d` (free space) and `1/q' = 1/q - 1/f` (thin lens).

use std::f64::consts::{PI, SQRT_2};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::scenario::VcselArrayParams;

/// Rayleigh range `π w0² / λ` of a beam with waist radius `w0`.
pub fn rayleigh_range(w0: f64, wavelength: f64) -> Result<f64> {
    if !(w0 > 0.0 && wavelength > 0.0) {
        return Err(Error::InvalidInput(format!(
            "rayleigh_range needs positive waist and wavelength, got w0 = {w0}, λ = {wavelength}"
        )));
    }
    Ok(PI * w0 * w0 / wavelength)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OpticalElement {
    FreeSpace(f64),
    ThinLens(f64),
}

impl OpticalElement {
    fn validate(&self) -> Result<()> {
        match *self {
            OpticalElement::FreeSpace(d) if !(d >= 0.0 && d.is_finite()) => Err(Error::InvalidInput(
                format!("free-space distance must be ≥ 0, got {d}"),
            )),
            OpticalElement::ThinLens(f) if f == 0.0 || !f.is_finite() => Err(Error::InvalidInput(format!(
                "thin-lens focal length must be non-zero, got {f}"
            ))),
            _ => Ok(()),
        }
    }
}

/// A TEM00 beam at some plane along its axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamState {
    q: Complex64,
    wavelength: f64,
    total_power: f64,
}

impl BeamState {
    /// Beam at its waist: `q = i z_R`.
    pub fn at_waist(w0: f64, wavelength: f64, total_power: f64) -> Result<Self> {
        let z_r = rayleigh_range(w0, wavelength)?;
        Self::new(Complex64::new(0.0, z_r), wavelength, total_power)
    }

    pub fn new(q: Complex64, wavelength: f64, total_power: f64) -> Result<Self> {
        if !(q.im > 0.0) || !q.re.is_finite() {
            return Err(Error::InvalidInput(format!(
                "beam parameter needs Im(q) > 0, got {q}"
            )));
        }
        if !(wavelength > 0.0) {
            return Err(Error::InvalidInput("wavelength must be positive".into()));
        }
        if !(total_power > 0.0) {
            return Err(Error::InvalidInput("beam power must be positive".into()));
        }
        Ok(Self {
            q,
            wavelength,
            total_power,
        })
    }

    pub fn q(&self) -> Complex64 {
        self.q
    }

    pub fn wavelength(&self) -> f64 {
        self.wavelength
    }

    pub fn total_power(&self) -> f64 {
        self.total_power
    }

    /// Rayleigh range of the embedded waist.
    pub fn rayleigh_range(&self) -> f64 {
        self.q.im
    }

    /// Signed distance from the embedded waist to the current plane.
    pub fn distance_from_waist(&self) -> f64 {
        self.q.re
    }

    /// Radius of the embedded waist.
    pub fn waist_radius(&self) -> f64 {
        (self.q.im * self.wavelength / PI).sqrt()
    }

    /// Propagates the beam through one element.
    pub fn transform(&self, element: OpticalElement) -> Result<Self> {
        element.validate()?;
        let q = match element {
            OpticalElement::FreeSpace(d) => self.q + d,
            OpticalElement::ThinLens(f) => 1.0 / (1.0 / self.q - 1.0 / f),
        };
        // Im(q) > 0 is preserved by both elements for physical input.
        assert!(q.im > 0.0, "ABCD transform produced non-physical q = {q}");
        Ok(Self { q, ..*self })
    }

    pub fn propagate(&self, elements: &[OpticalElement]) -> Result<Self> {
        elements.iter().try_fold(*self, |b, e| b.transform(*e))
    }
}

/// Free-standing form of [`BeamState::transform`].
pub fn transform_beam(beam: &BeamState, element: OpticalElement) -> Result<BeamState> {
    beam.transform(element)
}

/// 1/e² intensity radius at the beam's current plane,
/// `W² = -λ / (π Im(1/q))`.
pub fn beam_radius(beam: &BeamState) -> f64 {
    let inv = 1.0 / beam.q;
    (-beam.wavelength / (PI * inv.im)).sqrt()
}

/// Irradiance `(2P / πW²) exp(-2r² / W²)` of a circular Gaussian beam.
pub fn gaussian_irradiance(power: f64, radius_w: f64, r_offaxis: f64) -> f64 {
    let w2 = radius_w * radius_w;
    2.0 * power / (PI * w2) * (-2.0 * r_offaxis * r_offaxis / w2).exp()
}

/// Fraction of a 1-D Gaussian marginal (standard deviation `W/2`) that lies
/// in `[lo, hi]` where both bounds are already scaled by `√2 / W`.
///
/// Equals `½ (erf(hi) - erf(lo))`, evaluated through `erfc` when both bounds
/// sit on the same side so far tails do not cancel to zero.
fn erf_interval(lo: f64, hi: f64) -> f64 {
    let v = if lo >= 0.0 {
        0.5 * (libm::erfc(lo) - libm::erfc(hi))
    } else if hi <= 0.0 {
        0.5 * (libm::erfc(-hi) - libm::erfc(-lo))
    } else {
        0.5 * (libm::erf(hi) - libm::erf(lo))
    };
    v.max(0.0)
}

/// Power of a Gaussian beam collected by a square aperture of half side
/// `half_side_a` whose centre is displaced by `beam_center_offset` from the
/// beam axis.
///
/// Closed form: `P/4 [erf(√2(a-x₀)/W) + erf(√2(a+x₀)/W)] [same in y]`.
pub fn collect_power_square_aperture(
    beam_center_offset: (f64, f64),
    radius_w: f64,
    power: f64,
    half_side_a: f64,
) -> f64 {
    let s = SQRT_2 / radius_w;
    let (x0, y0) = beam_center_offset;
    let fx = erf_interval(-s * (half_side_a + x0), s * (half_side_a - x0));
    let fy = erf_interval(-s * (half_side_a + y0), s * (half_side_a - y0));
    (power * fx * fy).clamp(0.0, power)
}

/// LOS DC gain of a Lambertian emitter of order `m` onto a detector of area
/// `A` at distance `d`: `(m+1) A / (2π d²) cosᵐφ cosψ`, and zero when the
/// incidence angle ψ exceeds the field of view.
pub fn lambertian_los_gain(
    order_m: f64,
    detector_area: f64,
    distance: f64,
    cos_emit: f64,
    cos_incid: f64,
    fov_half_angle: f64,
) -> f64 {
    let cos_incid = cos_incid.clamp(0.0, 1.0);
    let cos_emit = cos_emit.clamp(0.0, 1.0);
    if cos_incid.acos() > fov_half_angle {
        return 0.0;
    }
    (order_m + 1.0) * detector_area / (2.0 * PI * distance * distance) * cos_emit.powf(order_m) * cos_incid
}

/// Beam of one VCSEL element just after its micro-lens.
pub fn vcsel_beam_after_lens(vcsel: &VcselArrayParams) -> Result<BeamState> {
    BeamState::at_waist(
        vcsel.beam_waist_w0,
        vcsel.wavelength,
        vcsel.optical_power_per_element,
    )?
    .propagate(&[
        OpticalElement::FreeSpace(vcsel.vcsel_to_lens),
        OpticalElement::ThinLens(vcsel.lens_focal_length),
    ])
}

/// Single-element 1/e² radius after the lens chain and `link_distance` of
/// free space.
pub fn vcsel_spot_radius(vcsel: &VcselArrayParams, link_distance: f64) -> Result<f64> {
    let beam = vcsel_beam_after_lens(vcsel)?.transform(OpticalElement::FreeSpace(link_distance))?;
    Ok(beam_radius(&beam))
}

/// Area of the 1/e² footprint of the whole array at `link_distance`: the
/// single-beam radius grown by the half extent of the element grid.
pub fn array_spot_area(vcsel: &VcselArrayParams, link_distance: f64) -> Result<f64> {
    if !(link_distance > 0.0) {
        return Err(Error::InvalidInput(format!(
            "link distance must be positive, got {link_distance}"
        )));
    }
    let w = vcsel_spot_radius(vcsel, link_distance)?;
    let half_extent = vcsel.pitch * (vcsel.side() as f64 - 1.0) / 2.0;
    Ok(PI * (w + half_extent).powi(2))
}
