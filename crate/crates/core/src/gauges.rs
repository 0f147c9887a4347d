//! The free propagator and the gauge maps linking the equation forms.
//!
//! All maps here act mode by mode on the moduli-preserving phases:
//!
//! * the free flow multiplies mode `n` by `exp(-i t mu_n)` with
//!   `mu_n = n^3 - beta n^2`,
//! * the mass gauge multiplies everything by `exp(2 i t mass)`,
//! * the modulus gauge multiplies mode `n` by `exp(-i t |c_n|^2)`,
//! * the interaction map undoes the free flow at the state's own time.
//!
//! Each inverse is the phase with the opposite sign; since the moduli never
//! change, forward-then-inverse is exact to roundoff.

use num_complex::Complex64;

use crate::error::Result;
use crate::params::Beta;
use crate::state::{Representation, SpectralState};

/// Linear dispersion symbol `mu_n = n^3 - beta n^2`.
pub fn dispersion_symbol(n: i64, beta: &Beta) -> f64 {
    let nf = n as f64;
    nf * nf * nf - beta.value() * nf * nf
}

fn phase(angle: f64) -> Complex64 {
    Complex64::new(angle.cos(), angle.sin())
}

/// Free flow `S(t)`: multiplies mode `n` by `exp(-i t mu_n)` and advances the
/// time tag by `t`. `S(t1) . S(t2) = S(t1 + t2)` and `S(0) = Id`.
pub fn linear_propagator(state: &SpectralState, t: f64, beta: &Beta) -> SpectralState {
    state
        .map_coeffs(|n, c| c * phase(-t * dispersion_symbol(n, beta)))
        .with_time(state.time() + t)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GaugeDirection {
    Forward,
    Inverse,
}

/// Mass gauge at time `t`: `Physical -> Gauged` multiplies every coefficient
/// by `exp(2 i t mass)`; the inverse flips the sign. The time tag is kept.
pub fn gauge_g(state: &SpectralState, t: f64, dir: GaugeDirection) -> Result<SpectralState> {
    let (from, to, sign) = match dir {
        GaugeDirection::Forward => (Representation::Physical, Representation::Gauged, 1.0),
        GaugeDirection::Inverse => (Representation::Gauged, Representation::Physical, -1.0),
    };
    state.expect_rep(from)?;
    let rot = phase(sign * 2.0 * t * state.mass());
    Ok(state.map_coeffs(|_, c| c * rot).retag(to))
}

/// Modulus gauge at time `t`: `Gauged -> GaugedJ` multiplies mode `n` by
/// `exp(-i t |c_n|^2)`. The per-mode modulus is exactly preserved, so the
/// inverse phase is computed from the same moduli.
pub fn gauge_j(state: &SpectralState, t: f64, dir: GaugeDirection) -> Result<SpectralState> {
    let (from, to, sign) = match dir {
        GaugeDirection::Forward => (Representation::Gauged, Representation::GaugedJ, -1.0),
        GaugeDirection::Inverse => (Representation::GaugedJ, Representation::Gauged, 1.0),
    };
    state.expect_rep(from)?;
    Ok(state
        .map_coeffs(|_, c| c * phase(sign * t * c.norm_sqr()))
        .retag(to))
}

/// Interaction picture at the state's own time tag `t`: forward maps
/// `Gauged -> VForm` (and `GaugedJ -> WForm`) by multiplying mode `n` with
/// `exp(+ i t mu_n)`, i.e. applying `S(-t)` without touching the tag.
pub fn interaction_map(
    state: &SpectralState,
    beta: &Beta,
    dir: GaugeDirection,
) -> Result<SpectralState> {
    let t = state.time();
    let (to, sign) = match (state.rep(), dir) {
        (Representation::Gauged, GaugeDirection::Forward) => (Representation::VForm, 1.0),
        (Representation::GaugedJ, GaugeDirection::Forward) => (Representation::WForm, 1.0),
        (Representation::VForm, GaugeDirection::Inverse) => (Representation::Gauged, -1.0),
        (Representation::WForm, GaugeDirection::Inverse) => (Representation::GaugedJ, -1.0),
        (rep, GaugeDirection::Forward) => {
            return Err(crate::error::Error::RepresentationMismatch {
                expected: "ug or ugj",
                got: rep.token(),
            })
        }
        (rep, GaugeDirection::Inverse) => {
            return Err(crate::error::Error::RepresentationMismatch {
                expected: "v or w",
                got: rep.token(),
            })
        }
    };
    Ok(state
        .map_coeffs(|n, c| c * phase(sign * t * dispersion_symbol(n, beta)))
        .retag(to))
}

/// Full chain `Physical -> VForm` at the state's own time.
pub fn physical_to_v(state: &SpectralState, beta: &Beta) -> Result<SpectralState> {
    let g = gauge_g(state, state.time(), GaugeDirection::Forward)?;
    interaction_map(&g, beta, GaugeDirection::Forward)
}

/// Full chain `Physical -> WForm` at the state's own time.
pub fn physical_to_w(state: &SpectralState, beta: &Beta) -> Result<SpectralState> {
    let g = gauge_g(state, state.time(), GaugeDirection::Forward)?;
    let j = gauge_j(&g, state.time(), GaugeDirection::Forward)?;
    interaction_map(&j, beta, GaugeDirection::Forward)
}

/// Full chain `VForm -> Physical` at the state's own time.
pub fn v_to_physical(state: &SpectralState, beta: &Beta) -> Result<SpectralState> {
    let g = interaction_map(state, beta, GaugeDirection::Inverse)?;
    gauge_g(&g, state.time(), GaugeDirection::Inverse)
}

/// Full chain `WForm -> Physical` at the state's own time.
pub fn w_to_physical(state: &SpectralState, beta: &Beta) -> Result<SpectralState> {
    let j = interaction_map(state, beta, GaugeDirection::Inverse)?;
    let g = gauge_j(&j, state.time(), GaugeDirection::Inverse)?;
    gauge_g(&g, state.time(), GaugeDirection::Inverse)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::Representation;

    fn beta() -> Beta {
        Beta::rational(1, 1).unwrap()
    }

    fn sample(rep: Representation, t: f64) -> SpectralState {
        SpectralState::from_modes(
            3,
            rep,
            t,
            &[
                (-2, Complex64::new(0.3, -0.1)),
                (0, Complex64::new(1.0, 0.5)),
                (1, Complex64::new(-0.2, 0.8)),
                (3, Complex64::new(0.05, 0.0)),
            ],
        )
        .unwrap()
    }

    #[test]
    fn symbol_values() {
        let b = Beta::rational(3, 2).unwrap();
        assert_eq!(dispersion_symbol(0, &b), 0.0);
        assert_eq!(dispersion_symbol(1, &b), 1.0 - 1.5);
        assert_eq!(dispersion_symbol(-2, &b), -8.0 - 6.0);
        assert_eq!(dispersion_symbol(3, &b), 27.0 - 13.5);
    }

    #[test]
    fn propagator_composes_and_inverts() {
        let u = sample(Representation::Physical, 0.0);
        let b = beta();
        let ab = linear_propagator(&linear_propagator(&u, 0.3, &b), 0.45, &b);
        let once = linear_propagator(&u, 0.75, &b);
        assert!(ab.l2_distance(&once).unwrap() < 1e-14);
        assert!((ab.time() - 0.75).abs() < 1e-15);

        let back = linear_propagator(&once, -0.75, &b);
        assert!(back.l2_distance(&u).unwrap() < 1e-14);
    }

    #[test]
    fn propagator_preserves_moduli_and_mass() {
        let u = sample(Representation::Physical, 0.0);
        let moved = linear_propagator(&u, 1.7, &beta());
        assert!((moved.mass() - u.mass()).abs() < 1e-14);
        for ((_, a), (_, b)) in u.iter_modes().zip(moved.iter_modes()) {
            assert!((a.norm() - b.norm()).abs() < 1e-14);
        }
    }

    #[test]
    fn mass_gauge_round_trip_and_tags() {
        let u = sample(Representation::Physical, 0.4);
        let g = gauge_g(&u, 0.4, GaugeDirection::Forward).unwrap();
        assert_eq!(g.rep(), Representation::Gauged);
        let back = gauge_g(&g, 0.4, GaugeDirection::Inverse).unwrap();
        assert!(back.l2_distance(&u).unwrap() < 1e-14);
        assert!(gauge_g(&g, 0.4, GaugeDirection::Forward).is_err());
    }

    #[test]
    fn mass_gauge_constant_function() {
        // f = c: one mode at n = 0, mass |c|^2, output e^{2it|c|^2} c.
        let c = Complex64::new(0.8, 0.6);
        let u = SpectralState::from_modes(1, Representation::Physical, 0.0, &[(0, c)]).unwrap();
        let t = 0.9;
        let g = gauge_g(&u, t, GaugeDirection::Forward).unwrap();
        let want = c * phase(2.0 * t * c.norm_sqr());
        assert!((g.coeff(0).unwrap() - want).norm() < 1e-15);
    }

    #[test]
    fn modulus_gauge_half_turn() {
        // One unit-modulus mode held for t = pi picks up the factor -1.
        let u = SpectralState::from_modes(
            1,
            Representation::Gauged,
            0.0,
            &[(0, Complex64::new(1.0, 0.0))],
        )
        .unwrap();
        let j = gauge_j(&u, std::f64::consts::PI, GaugeDirection::Forward).unwrap();
        assert!((j.coeff(0).unwrap() - Complex64::new(-1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn modulus_gauge_single_mode_closed_form() {
        // One mode of modulus r: the phase is exp(-i t r^2).
        let a = Complex64::new(0.6, -0.8);
        let u =
            SpectralState::from_modes(2, Representation::Gauged, 0.0, &[(1, a)]).unwrap();
        let t = 0.37;
        let j = gauge_j(&u, t, GaugeDirection::Forward).unwrap();
        let want = a * phase(-t * a.norm_sqr());
        assert!((j.coeff(1).unwrap() - want).norm() < 1e-15);

        let back = gauge_j(&j, t, GaugeDirection::Inverse).unwrap();
        assert!(back.l2_distance(&u).unwrap() < 1e-15);
    }

    #[test]
    fn interaction_map_round_trips_both_sides() {
        let b = beta();
        let g = sample(Representation::Gauged, 0.9);
        let v = interaction_map(&g, &b, GaugeDirection::Forward).unwrap();
        assert_eq!(v.rep(), Representation::VForm);
        assert!((v.time() - 0.9).abs() == 0.0);
        let back = interaction_map(&v, &b, GaugeDirection::Inverse).unwrap();
        assert!(back.l2_distance(&g).unwrap() < 1e-14);

        let j = sample(Representation::GaugedJ, 0.9);
        let w = interaction_map(&j, &b, GaugeDirection::Forward).unwrap();
        assert_eq!(w.rep(), Representation::WForm);
        let back = interaction_map(&w, &b, GaugeDirection::Inverse).unwrap();
        assert!(back.l2_distance(&j).unwrap() < 1e-14);
    }

    #[test]
    fn chains_are_identity_at_time_zero() {
        let u = sample(Representation::Physical, 0.0);
        let b = beta();
        let v = physical_to_v(&u, &b).unwrap();
        assert!(v.l2_distance(&u.retag(Representation::VForm)).unwrap() < 1e-15);
        let w = physical_to_w(&u, &b).unwrap();
        assert!(w.l2_distance(&u.retag(Representation::WForm)).unwrap() < 1e-15);
    }

    #[test]
    fn chains_invert_at_positive_time() {
        let u = sample(Representation::Physical, 0.62);
        let b = beta();
        let v = physical_to_v(&u, &b).unwrap();
        let back = v_to_physical(&v, &b).unwrap();
        assert!(back.l2_distance(&u).unwrap() < 1e-13);

        let w = physical_to_w(&u, &b).unwrap();
        let back = w_to_physical(&w, &b).unwrap();
        assert!(back.l2_distance(&u).unwrap() < 1e-13);
    }
}
