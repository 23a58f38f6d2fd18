//! Diffraction of the fundamental Gaussian mode between the two ends of
//! the link, and the resulting transfer loss.
//!
//! A beam of wavelength `lambda` leaving a telescope with divergence
//! half-angle `phi` has waist radius `w0 = lambda / (pi phi)` and, after
//! propagating a distance `L`, spot radius
//! `w(L)^2 = lambda^2 / (pi^2 phi^2) + phi^2 L^2`. A circular receiver of
//! area `S_s` then captures the fraction
//!
//! ```text
//! delta = 1 - exp(-2 S_s / (lambda^2 / (pi phi^2) + pi phi^2 L^2))
//! ```
//!
//! of the incident power, which is the one-way link loss factor used by
//! every downstream module.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::units::Ratio;

// ---------------------------------------------------------------------------
// Geometry
// ---------------------------------------------------------------------------

/// Geometry of one transmitter-to-receiver pass.
#[derive(Debug, Clone, Copy)]
pub struct BeamGeometry {
    wavelength: f64,
    divergence: f64,
    distance: f64,
    receiver_area: f64,
}

impl BeamGeometry {
    /// Builds a link geometry.
    ///
    /// `wavelength` [m] and `divergence` [rad] must be strictly positive,
    /// `distance` [m] non-negative and `receiver_area` [m^2] strictly
    /// positive; all must be finite.
    pub fn new(wavelength: f64, divergence: f64, distance: f64, receiver_area: f64) -> Result<Self> {
        for (quantity, value, positive) in [
            ("wavelength [m]", wavelength, true),
            ("divergence half-angle [rad]", divergence, true),
            ("link distance [m]", distance, false),
            ("receiver area [m^2]", receiver_area, true),
        ] {
            if !value.is_finite() {
                return Err(Error::InvalidInput { quantity, value, reason: "must be finite" });
            }
            if value < 0.0 || (positive && value == 0.0) {
                return Err(Error::InvalidInput {
                    quantity,
                    value,
                    reason: if positive { "must be strictly positive" } else { "must be non-negative" },
                });
            }
        }
        Ok(BeamGeometry { wavelength, divergence, distance, receiver_area })
    }

    /// Wavelength in metres.
    pub fn wavelength(&self) -> f64 {
        self.wavelength
    }

    /// Divergence half-angle in radians.
    pub fn divergence(&self) -> f64 {
        self.divergence
    }

    /// One-way propagation distance in metres.
    pub fn distance(&self) -> f64 {
        self.distance
    }

    /// Receiver capture area in square metres.
    pub fn receiver_area(&self) -> f64 {
        self.receiver_area
    }

    /// A copy of this geometry at a different propagation distance.
    pub fn with_distance(&self, distance: f64) -> Result<Self> {
        BeamGeometry::new(self.wavelength, self.divergence, distance, self.receiver_area)
    }

    // -- Derived beam quantities --------------------------------------------

    /// Beam waist radius `w0 = lambda / (pi phi)` in metres.
    pub fn waist_radius(&self) -> f64 {
        self.wavelength / (PI * self.divergence)
    }

    /// Squared spot radius after propagation,
    /// `w(L)^2 = lambda^2 / (pi^2 phi^2) + phi^2 L^2`, in m^2.
    pub fn spot_radius_sq(&self) -> f64 {
        let w0 = self.waist_radius();
        w0 * w0 + self.divergence * self.divergence * self.distance * self.distance
    }

    /// One-way transfer factor of the receiver aperture,
    /// `delta = 1 - exp(-2 S_s / (lambda^2/(pi phi^2) + pi phi^2 L^2))`.
    pub fn link_loss(&self) -> Ratio {
        let lam2 = self.wavelength * self.wavelength;
        let phi2 = self.divergence * self.divergence;
        let denom = lam2 / (PI * phi2) + PI * phi2 * self.distance * self.distance;
        let delta = 1.0 - (-2.0 * self.receiver_area / denom).exp();
        Ratio::new(delta).expect("transfer factor of a valid geometry lies in (0, 1)")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn reference(divergence: f64, distance: f64) -> BeamGeometry {
        BeamGeometry::new(1064e-9, divergence, distance, PI * 9e-6).unwrap()
    }

    #[test]
    fn waist_radius_matches_reference_telescopes() {
        let w0_02 = reference(0.2e-3, 15.0).waist_radius();
        assert!(
            (w0_02 - 1.6934085944977665e-3).abs() / 1.6934085944977665e-3 < 1e-12,
            "waist at 0.2 mrad: got {w0_02}"
        );
        let w0_03 = reference(0.3e-3, 15.0).waist_radius();
        assert!(
            (w0_03 - 1.1289390629985112e-3).abs() / 1.1289390629985112e-3 < 1e-12,
            "waist at 0.3 mrad: got {w0_03}"
        );
        // lambda = pi um with unit divergence collapses the waist to 1 um.
        let contrived = BeamGeometry::new(PI * 1e-6, 1.0, 0.0, 1.0).unwrap();
        assert!((contrived.waist_radius() - 1e-6).abs() < 1e-20);
    }

    #[test]
    fn spot_radius_grows_from_the_waist() {
        let at_waist = reference(0.2e-3, 0.0);
        let w0 = at_waist.waist_radius();
        assert!(
            (at_waist.spot_radius_sq() - w0 * w0).abs() < 1e-18,
            "at L = 0 the spot is the waist"
        );
        let far = reference(0.2e-3, 15.0).spot_radius_sq();
        assert!(
            (far - 1.1867632667918902e-5).abs() / 1.1867632667918902e-5 < 1e-12,
            "spot at 15 m: got {far}"
        );
        // The divergence term scales with L^2: doubling L quadruples it.
        let g1 = reference(0.2e-3, 10.0);
        let g2 = reference(0.2e-3, 20.0);
        let d1 = g1.spot_radius_sq() - w0 * w0;
        let d2 = g2.spot_radius_sq() - w0 * w0;
        assert!((d2 / d1 - 4.0).abs() < 1e-12, "far-field term ratio {}", d2 / d1);
    }

    #[test]
    fn link_loss_at_five_metres_is_nearly_lossless() {
        let delta = reference(0.2e-3, 5.0).link_loss().value();
        assert!(
            (delta - 0.990476660579976).abs() < 1e-12,
            "delta at 5 m: got {delta}"
        );
        let db = 10.0 * delta.log10();
        assert!(db.abs() < 0.05, "capture loss {db} dB should be under 0.05 dB");
    }

    #[test]
    fn link_loss_agrees_with_the_spot_area_form() {
        // Same quantity through the spot radius: delta = 1 - exp(-2 S_s / (pi w^2)).
        for (phi, dist) in [(0.2e-3, 5.0), (0.2e-3, 15.0), (0.3e-3, 15.0), (0.3e-3, 30.0)] {
            let g = reference(phi, dist);
            let via_spot = 1.0 - (-2.0 * g.receiver_area() / (PI * g.spot_radius_sq())).exp();
            let direct = g.link_loss().value();
            assert!(
                (direct - via_spot).abs() < 1e-12,
                "two algebraic routes disagree at phi = {phi}, L = {dist}: {direct} vs {via_spot}"
            );
        }
    }

    #[test]
    fn an_enormous_receiver_captures_everything() {
        let g = BeamGeometry::new(1064e-9, 0.2e-3, 15.0, 1e3).unwrap();
        assert!(g.link_loss().value() > 1.0 - 1e-12, "huge aperture drives delta to 1");
    }

    #[test]
    fn construction_rejects_bad_inputs() {
        assert!(BeamGeometry::new(0.0, 0.2e-3, 15.0, 1e-5).is_err(), "zero wavelength");
        assert!(BeamGeometry::new(1064e-9, -0.2e-3, 15.0, 1e-5).is_err(), "negative divergence");
        assert!(BeamGeometry::new(1064e-9, 0.2e-3, -1.0, 1e-5).is_err(), "negative distance");
        assert!(BeamGeometry::new(1064e-9, 0.2e-3, 15.0, 0.0).is_err(), "zero aperture");
        assert!(BeamGeometry::new(f64::NAN, 0.2e-3, 15.0, 1e-5).is_err(), "NaN wavelength");
    }

    proptest! {
        #[test]
        fn link_loss_stays_inside_the_unit_interval(
            phi in 1e-5f64..1e-2,
            dist in 0.0f64..100.0,
            area in 1e-8f64..1e-2,
        ) {
            let g = BeamGeometry::new(1064e-9, phi, dist, area).unwrap();
            let delta = g.link_loss().value();
            prop_assert!(delta > 0.0 && delta <= 1.0, "delta = {delta}");
        }

        #[test]
        fn link_loss_decreases_with_distance(
            phi in 1e-4f64..1e-3,
            d1 in 0.0f64..50.0,
            step in 0.1f64..50.0,
        ) {
            let near = BeamGeometry::new(1064e-9, phi, d1, PI * 9e-6).unwrap();
            let far = near.with_distance(d1 + step).unwrap();
            prop_assert!(far.link_loss().value() < near.link_loss().value());
        }

        #[test]
        fn link_loss_increases_with_receiver_area(
            // keep the capture exponent well below saturation so that the
            // increase stays resolvable in f64
            area in 1e-6f64..1e-5,
            factor in 1.01f64..10.0,
        ) {
            let small = BeamGeometry::new(1064e-9, 0.2e-3, 15.0, area).unwrap();
            let large = BeamGeometry::new(1064e-9, 0.2e-3, 15.0, area * factor).unwrap();
            prop_assert!(large.link_loss().value() > small.link_loss().value());
        }
    }
}
