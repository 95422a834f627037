//! Line-of-sight channel matrix between users and access points.
//!
//! Only the direct path is evaluated; there are no reflections. Entries are
//! the fraction of an AP's total optical output that reaches the detector.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::optics::{self, OpticalElement};
use crate::scenario::{ApSpec, LedUnitParams, ReceiverParams, Scenario, SystemKind, VcselArrayParams, Vec3};

/// `N_users x N_aps` matrix of LOS power fractions.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelMatrix {
    pub entries: DMatrix<f64>,
    pub system: SystemKind,
}

impl ChannelMatrix {
    pub fn n_users(&self) -> usize {
        self.entries.nrows()
    }

    pub fn n_aps(&self) -> usize {
        self.entries.ncols()
    }

    /// Sub-matrix holding the listed user rows, in the given order.
    pub fn select_users(&self, users: &[usize]) -> ChannelMatrix {
        ChannelMatrix {
            entries: self.entries.select_rows(users),
            system: self.system,
        }
    }

    /// CSV rendering: one row per user, one column per AP, 17 significant
    /// digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let header: Vec<String> = (0..self.n_aps()).map(|a| format!("ap{a}")).collect();
        out.push_str("user,");
        out.push_str(&header.join(","));
        out.push('\n');
        for u in 0..self.n_users() {
            out.push_str(&u.to_string());
            for a in 0..self.n_aps() {
                out.push(',');
                out.push_str(&format!("{:.16e}", self.entries[(u, a)]));
            }
            out.push('\n');
        }
        out
    }
}

/// Geometry of one AP-to-user link: horizontal offset of the user from the
/// AP axis, vertical separation and incidence cosine.
struct Link {
    dx: f64,
    dy: f64,
    vertical: f64,
    distance: f64,
    cos_incid: f64,
}

fn link(ap: &ApSpec, user: &Vec3) -> Result<Link> {
    let vertical = ap.position.z - user.z;
    if !(vertical > 0.0) {
        return Err(Error::InvalidInput(format!(
            "user at {user} is not below the AP plane (z = {})",
            ap.position.z
        )));
    }
    let dx = user.x - ap.position.x;
    let dy = user.y - ap.position.y;
    let distance = (dx * dx + dy * dy + vertical * vertical).sqrt();
    Ok(Link {
        dx,
        dy,
        vertical,
        distance,
        cos_incid: vertical / distance,
    })
}

fn outside_fov(cos_incid: f64, fov_half_angle: f64) -> bool {
    cos_incid.clamp(-1.0, 1.0).acos() > fov_half_angle
}

/// Fraction of a VCSEL array's optical output collected by a user's square
/// detector. Each element's beam goes through the lens chain and the
/// vertical free-space gap; element powers add incoherently.
pub fn vcsel_channel_gain(
    ap: &ApSpec,
    vcsel: &VcselArrayParams,
    receiver: &ReceiverParams,
    user_pos: &Vec3,
) -> Result<f64> {
    let l = link(ap, user_pos)?;
    if outside_fov(l.cos_incid, receiver.fov_half_angle) {
        return Ok(0.0);
    }
    let beam = optics::vcsel_beam_after_lens(vcsel)?.transform(OpticalElement::FreeSpace(l.vertical))?;
    let w = optics::beam_radius(&beam);
    let a = receiver.aperture_half_side();
    let p = vcsel.optical_power_per_element;
    let collected: f64 = vcsel
        .element_offsets()
        .iter()
        .map(|(ex, ey)| optics::collect_power_square_aperture((ex - l.dx, ey - l.dy), w, p, a))
        .sum();
    Ok(collected * l.cos_incid / vcsel.total_optical_power())
}

/// Fraction of an LED unit's optical output collected by a user. The
/// unit's emitters are co-located, so this equals the single-emitter
/// Lambertian gain.
pub fn led_channel_gain(
    ap: &ApSpec,
    led: &LedUnitParams,
    receiver: &ReceiverParams,
    user_pos: &Vec3,
) -> Result<f64> {
    let l = link(ap, user_pos)?;
    // The AP faces straight down, so emission and incidence angles coincide.
    Ok(optics::lambertian_los_gain(
        led.lambertian_order_m,
        receiver.detector_area,
        l.distance,
        l.cos_incid,
        l.cos_incid,
        receiver.fov_half_angle,
    ))
}

fn pair_gain(scenario: &Scenario, system: SystemKind, ap: &ApSpec, user: &Vec3) -> Result<f64> {
    match system {
        SystemKind::Vcsel => vcsel_channel_gain(ap, &scenario.vcsel, &scenario.receiver, user),
        SystemKind::Led => led_channel_gain(ap, &scenario.led, &scenario.receiver, user),
    }
}

/// Channel matrix for the scenario's users. Rows follow user order and
/// columns AP order; pairs are evaluated in parallel.
pub fn build_channel_matrix(scenario: &Scenario, system: SystemKind) -> Result<ChannelMatrix> {
    let n_u = scenario.users.len();
    let n_a = scenario.aps.len();
    let gains: Vec<f64> = (0..n_u * n_a)
        .into_par_iter()
        .map(|k| {
            let (u, a) = (k / n_a, k % n_a);
            pair_gain(scenario, system, &scenario.aps[a], &scenario.users[u]).map_err(|e| Error::Pair {
                user: u,
                ap: a,
                source: Box::new(e),
            })
        })
        .collect::<Result<_>>()?;
    Ok(ChannelMatrix {
        entries: DMatrix::from_row_slice(n_u, n_a, &gains),
        system,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{place_users, Room};
    use std::f64::consts::PI;

    fn ap_at(x: f64, y: f64) -> ApSpec {
        ApSpec::downward(Vec3::new(x, y, 4.0))
    }

    #[test]
    fn vcsel_full_capture_under_ap() {
        let receiver = ReceiverParams {
            detector_area: 0.5 * 0.5,
            ..Default::default()
        };
        let g = vcsel_channel_gain(
            &ap_at(2.5, 2.5),
            &VcselArrayParams::default(),
            &receiver,
            &Vec3::new(2.5, 2.5, 1.0),
        )
        .unwrap();
        assert!((g - 1.0).abs() < 1e-3, "{g}");
    }

    #[test]
    fn vcsel_tail_is_negligible() {
        let g = vcsel_channel_gain(
            &ap_at(1.0, 1.0),
            &VcselArrayParams::default(),
            &ReceiverParams::default(),
            &Vec3::new(3.0, 2.0, 1.0),
        )
        .unwrap();
        assert!(g < 1e-12, "{g}");
    }

    #[test]
    fn vcsel_default_chain_on_axis_matches_optics_oracle() {
        // Composition of the optics oracles: waist -> 0.133 mm -> f = 0.127 mm
        // -> 3 m, radius from q, closed-form square-aperture capture per
        // element, summed over the 5x5 grid of 10 μm pitch.
        let v = VcselArrayParams::default();
        let r = ReceiverParams::default();
        let w0 = 5e-6;
        let lambda = 1550e-9;
        let z_r = PI * w0 * w0 / lambda;
        let q0 = num_complex::Complex64::new(0.133e-3, z_r);
        let q1 = 1.0 / (1.0 / q0 - 1.0 / 0.127e-3);
        let q2 = q1 + 3.0;
        let w = (-lambda / (PI * (1.0 / q2).im)).sqrt();
        let a = 0.005;
        let mut frac = 0.0;
        for i in -2..=2 {
            for j in -2..=2 {
                let x0 = i as f64 * 10e-6;
                let y0 = j as f64 * 10e-6;
                let fx =
                    0.5 * (libm::erf(2f64.sqrt() * (a - x0) / w) + libm::erf(2f64.sqrt() * (a + x0) / w));
                let fy =
                    0.5 * (libm::erf(2f64.sqrt() * (a - y0) / w) + libm::erf(2f64.sqrt() * (a + y0) / w));
                frac += fx * fy / 25.0;
            }
        }
        let g = vcsel_channel_gain(&ap_at(2.5, 2.5), &v, &r, &Vec3::new(2.5, 2.5, 1.0)).unwrap();
        assert!(((g - frac) / frac).abs() < 1e-9, "{g} vs {frac}");
    }

    #[test]
    fn led_on_axis_closed_form() {
        let g = led_channel_gain(
            &ap_at(2.5, 2.5),
            &LedUnitParams::default(),
            &ReceiverParams::default(),
            &Vec3::new(2.5, 2.5, 1.0),
        )
        .unwrap();
        // (m+1) A / (2π d²) with m = 1, A = 1 cm², d = 3 m.
        assert!((g - 3.537e-6).abs() < 1e-9);
        // Received power of the whole 4 x 1 W unit.
        let led = LedUnitParams::default();
        assert!((g * led.total_optical_power() - 1.415e-5).abs() < 1e-8);
    }

    #[test]
    fn led_inverse_square_on_axis() {
        let led = LedUnitParams::default();
        let r = ReceiverParams::default();
        let ap = ApSpec::downward(Vec3::new(1.0, 1.0, 7.0));
        let g1 = led_channel_gain(&ap, &led, &r, &Vec3::new(1.0, 1.0, 4.0)).unwrap();
        let g2 = led_channel_gain(&ap, &led, &r, &Vec3::new(1.0, 1.0, 1.0)).unwrap();
        assert!(((g2 - g1 / 4.0) / g2).abs() < 1e-14);
    }

    #[test]
    fn fov_cutoff_zeroes_both_systems() {
        let r = ReceiverParams {
            fov_half_angle: 0.3,
            ..Default::default()
        };
        // tan(0.3) * 3 ≈ 0.928 m, so a user 1.5 m away is outside.
        let user = Vec3::new(4.0, 2.5, 1.0);
        let ap = ap_at(2.5, 2.5);
        assert_eq!(
            led_channel_gain(&ap, &LedUnitParams::default(), &r, &user).unwrap(),
            0.0
        );
        assert_eq!(
            vcsel_channel_gain(&ap, &VcselArrayParams::default(), &r, &user).unwrap(),
            0.0
        );
    }

    #[test]
    fn user_above_ap_rejected() {
        let ap = ap_at(1.0, 1.0);
        let r = ReceiverParams::default();
        assert!(led_channel_gain(&ap, &LedUnitParams::default(), &r, &Vec3::new(1.0, 1.0, 4.0)).is_err());
        assert!(
            vcsel_channel_gain(&ap, &VcselArrayParams::default(), &r, &Vec3::new(1.0, 1.0, 5.0)).is_err()
        );
    }

    #[test]
    fn matrix_single_pair_and_errors() {
        let s = Scenario {
            aps: vec![ap_at(2.5, 2.5)],
            users: vec![Vec3::new(2.6, 2.4, 1.0)],
            ..Default::default()
        };
        for sys in [SystemKind::Vcsel, SystemKind::Led] {
            let h = build_channel_matrix(&s, sys).unwrap();
            assert_eq!((h.n_users(), h.n_aps()), (1, 1));
            let direct = pair_gain(&s, sys, &s.aps[0], &s.users[0]).unwrap();
            assert_eq!(h.entries[(0, 0)], direct);
        }
        let bad = Scenario {
            users: vec![Vec3::new(1.0, 1.0, 1.0), Vec3::new(1.0, 1.0, 4.5)],
            ..Default::default()
        };
        match build_channel_matrix(&bad, SystemKind::Led) {
            Err(Error::Pair { user: 1, .. }) => {}
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn matrix_rows_permute_with_users() {
        let base = Scenario::default();
        let users = place_users(&base.room, 5, 3).unwrap();
        let mut rev = users.clone();
        rev.reverse();
        for sys in [SystemKind::Vcsel, SystemKind::Led] {
            let h = build_channel_matrix(&base.with_users(users.clone()), sys).unwrap();
            let hr = build_channel_matrix(&base.with_users(rev.clone()), sys).unwrap();
            for u in 0..5 {
                assert_eq!(h.entries.row(u), hr.entries.row(4 - u));
            }
        }
    }

    #[test]
    fn all_users_outside_fov_gives_zero_matrix() {
        let mut s = Scenario::default();
        s.receiver.fov_half_angle = 1e-3;
        s.users = vec![Vec3::new(0.1, 0.1, 1.0), Vec3::new(4.9, 2.5, 1.0)];
        for sys in [SystemKind::Vcsel, SystemKind::Led] {
            let h = build_channel_matrix(&s, sys).unwrap();
            assert!(h.entries.iter().all(|&g| g == 0.0));
        }
    }

    #[test]
    fn entries_bounded_and_symmetric() {
        let s = Scenario::default();
        let users = place_users(&s.room, 50, 11).unwrap();
        for sys in [SystemKind::Vcsel, SystemKind::Led] {
            let h = build_channel_matrix(&s.with_users(users.clone()), sys).unwrap();
            assert!(h.entries.iter().all(|g| (0.0..=1.0).contains(g)));
            for row in h.entries.row_iter() {
                assert!(row.sum() <= h.n_aps() as f64);
            }
        }
        // Mirror images about the AP axis see the same gain.
        let ap = ap_at(2.5, 2.5);
        let r = ReceiverParams::default();
        let v = VcselArrayParams::default();
        for (dx, dy) in [(0.07, 0.0), (0.05, -0.12), (0.3, 0.2)] {
            let a = vcsel_channel_gain(&ap, &v, &r, &Vec3::new(2.5 + dx, 2.5 + dy, 1.0)).unwrap();
            let b = vcsel_channel_gain(&ap, &v, &r, &Vec3::new(2.5 - dx, 2.5 - dy, 1.0)).unwrap();
            assert!((a - b).abs() <= 1e-12 * a.max(b) + 1e-300, "{a} {b}");
        }
    }

    #[test]
    fn vcsel_gain_non_increasing_radially() {
        let ap = ap_at(2.5, 2.5);
        let r = ReceiverParams::default();
        let v = VcselArrayParams::default();
        let mut prev = f64::INFINITY;
        for k in 0..200 {
            let d = k as f64 * 0.005;
            let g = vcsel_channel_gain(&ap, &v, &r, &Vec3::new(2.5 + d * 0.6, 2.5 + d * 0.8, 1.0)).unwrap();
            assert!(g <= prev, "step {k}: {g} > {prev}");
            prev = g;
        }
    }

    #[test]
    fn csv_dump_shape() {
        let s = Scenario::default().with_users(place_users(&Room::default(), 3, 1).unwrap());
        let h = build_channel_matrix(&s, SystemKind::Led).unwrap();
        let csv = h.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 4);
        assert_eq!(lines[0].split(',').count(), 9);
        let v: f64 = lines[1].split(',').nth(1).unwrap().parse().unwrap();
        assert_eq!(v, h.entries[(0, 0)]);
    }
}
