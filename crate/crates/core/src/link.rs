//! Round-trip link gain of the echo channel.
//!
//! One round trip of a beam of amplitude `x` leaving the transmitter
//! medium: a share `1 - alpha` of the received power passes the receiver's
//! splitter into its own medium (the rest feeds the detector), each
//! crossing of the free-space gap keeps the fraction `delta`, and both
//! media amplify with the saturated gain of [`crate::gain`]. The returned
//! power is
//!
//! ```text
//! h(x) = G(i_T_in) * i_T_in * S_0,
//!     i_T_in = delta * G(i_R_in) * i_R_in,
//!     i_R_in = (1 - alpha) * delta * x^2 / S_0
//! ```
//!
//! `h` is strictly increasing, and `h(x)/x^2` strictly decreasing with
//! supremum `(1 - alpha) delta^2 exp(2 g0)` as `x -> 0`, which makes both
//! the fixed-point equation of [`crate::resonance`] and the inversion at
//! the end of this module bisection-friendly.

use crate::error::{Error, Result};
use crate::gain::GainMedium;
use crate::solver::bisect;
use crate::units::{Amplitude, IntensityWm2, PowerW};

/// Relative accuracy demanded of the amplitude returned by the inversion.
const INVERT_TOL: f64 = 1e-8;

// ---------------------------------------------------------------------------
// Channel description
// ---------------------------------------------------------------------------

/// Static physics of one echo channel: both media (assumed identical), the
/// pump power, the receiver splitting ratio `alpha` and the one-way link
/// loss `delta`.
#[derive(Debug, Clone, Copy)]
pub struct ChannelPhysics {
    medium: GainMedium,
    pump: PowerW,
    alpha: f64,
    delta: f64,
}

impl ChannelPhysics {
    /// Builds a channel. Both `alpha` and `delta` must lie strictly inside
    /// (0, 1): a splitter that passes nothing (or everything) and a link
    /// that loses everything (or nothing) are degenerate.
    pub fn new(medium: GainMedium, pump: PowerW, alpha: f64, delta: f64) -> Result<Self> {
        for (quantity, value) in [("splitting ratio", alpha), ("link loss factor", delta)] {
            if !value.is_finite() || value <= 0.0 || value >= 1.0 {
                return Err(Error::InvalidInput {
                    quantity,
                    value,
                    reason: "must lie strictly inside (0, 1)",
                });
            }
        }
        Ok(ChannelPhysics { medium, pump, alpha, delta })
    }

    /// The shared gain medium.
    pub fn medium(&self) -> &GainMedium {
        &self.medium
    }

    /// Pump power driving both media.
    pub fn pump(&self) -> PowerW {
        self.pump
    }

    /// Receiver splitting ratio `alpha` (detector share).
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// One-way link loss factor `delta`.
    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// A copy of this channel with a different splitting ratio.
    pub fn with_alpha(&self, alpha: f64) -> Result<Self> {
        ChannelPhysics::new(self.medium, self.pump, alpha, self.delta)
    }

    // -- Round trip -----------------------------------------------------------

    /// Power returned to the transmitter after one round trip of an
    /// outgoing amplitude `x` (must be strictly positive).
    pub fn link_gain(&self, x: Amplitude) -> Result<PowerW> {
        if x.value() <= 0.0 {
            return Err(Error::InvalidInput {
                quantity: "beam amplitude [sqrt(W)]",
                value: x.value(),
                reason: "must be strictly positive",
            });
        }
        let s0 = self.medium.cross_section();
        let i_r_in = (1.0 - self.alpha) * self.delta * x.value() * x.value() / s0;
        let g_r = self.medium.power_gain(self.pump, IntensityWm2::new(i_r_in)?)?;
        let i_t_in = self.delta * g_r * i_r_in;
        let g_t = self.medium.power_gain(self.pump, IntensityWm2::new(i_t_in)?)?;
        PowerW::new(g_t * i_t_in * s0)
    }

    /// Round-trip power amplification `h(x) / x^2`.
    ///
    /// Strictly decreasing in `x`; at the stable circulating power it
    /// crosses 1, and for `x -> 0` it approaches
    /// `(1 - alpha) delta^2 exp(2 g0)` from below.
    pub fn gain_ratio(&self, x: Amplitude) -> Result<f64> {
        Ok(self.link_gain(x)?.watts() / (x.value() * x.value()))
    }

    /// Supremum of [`Self::gain_ratio`], the unsaturated round-trip gain.
    pub fn gain_ratio_limit(&self) -> f64 {
        let g0 = self.medium.gain_exponent(self.pump);
        (1.0 - self.alpha) * self.delta * self.delta * (2.0 * g0).exp()
    }

    // -- Inversion --------------------------------------------------------------

    /// Finds the amplitude whose round trip returns the target amplitude:
    /// the `x` with `sqrt(h(x)) = target`.
    ///
    /// `stable` must be the stable circulating power of this channel; the
    /// target has to lie in the range of `x -> sqrt(h(x))` over
    /// `(0, sqrt(stable)]`, otherwise the call reports the violated
    /// interval. Bisection over a bracket hugging that domain converges
    /// unconditionally because `h` is strictly increasing.
    pub fn invert_link_gain(&self, target: Amplitude, stable: PowerW) -> Result<Amplitude> {
        if stable.watts() <= 0.0 {
            return Err(Error::InvalidInput {
                quantity: "stable circulating power [W]",
                value: stable.watts(),
                reason: "must be strictly positive",
            });
        }
        let sqrt_pt = stable.watts().sqrt();
        let lo = 1e-12 * sqrt_pt;
        let hi = sqrt_pt * (1.0 + 1e-9);
        let goal = target.value() * target.value();
        let lo_val = self.link_gain(Amplitude::new(lo)?)?.watts();
        let hi_val = self.link_gain(Amplitude::new(hi)?)?.watts();
        if goal < lo_val || goal > hi_val {
            return Err(Error::OutOfRange {
                quantity: "target amplitude [sqrt(W)]",
                value: target.value(),
                lo: lo_val.sqrt(),
                hi: hi_val.sqrt(),
            });
        }

        let f = |x: f64| {
            self.link_gain(Amplitude::new(x).expect("bracket is positive"))
                .map(|p| p.watts() - goal)
                .unwrap_or(f64::NAN)
        };
        let sol = bisect(f, lo, hi, 0.0, 200)?;
        let achieved = self.link_gain(Amplitude::new(sol.root)?)?.watts().sqrt();
        let residual = (achieved - target.value()).abs() / target.value();
        if residual > INVERT_TOL {
            return Err(Error::NoConvergence {
                iterations: sol.iterations,
                lo: sol.lo,
                hi: sol.hi,
                residual,
            });
        }
        Amplitude::new(sol.root)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::IntensityWm2;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    // Stable circulating power of the reference channel at 200 W, solved
    // independently with a damped fixed-point iteration offline.
    const P_T_200: f64 = 43.002722235724676;

    fn channel(pump: f64) -> ChannelPhysics {
        let medium = GainMedium::new(1.2e7, 0.7, 3e-3).unwrap();
        ChannelPhysics::new(medium, PowerW::new(pump).unwrap(), 0.01, 0.5).unwrap()
    }

    fn amp(x: f64) -> Amplitude {
        Amplitude::new(x).unwrap()
    }

    #[test]
    fn link_gain_matches_the_independent_solver() {
        // Frozen from an offline solve of the same physics with an
        // unrelated root finder.
        let cases = [
            (150.0, 0.5, 0.21310487673591344),
            (170.0, 0.5, 0.2512757267511726),
            (200.0, 0.5, 0.3216980578953277),
            (150.0, 2.0, 3.3501789236708306),
            (170.0, 2.0, 3.9342424834173966),
            (200.0, 2.0, 5.000383093609179),
        ];
        for (pump, x, expected) in cases {
            let h = channel(pump).link_gain(amp(x)).unwrap().watts();
            assert!(
                (h - expected).abs() / expected < 1e-9,
                "h({x}) at {pump} W: got {h}, expected {expected}"
            );
        }
    }

    #[test]
    fn link_gain_is_strictly_increasing() {
        let c = channel(200.0);
        let mut prev = 0.0;
        for k in 1..=200 {
            let x = P_T_200.sqrt() * k as f64 / 200.0;
            let h = c.link_gain(amp(x)).unwrap().watts();
            assert!(h > prev, "h must grow: h({x}) = {h} <= {prev}");
            prev = h;
        }
    }

    #[test]
    fn gain_ratio_decreases_and_stays_in_its_interval() {
        let c = channel(200.0);
        let bound = c.gain_ratio_limit();
        let mut prev = f64::INFINITY;
        for k in 1..=200 {
            // stay a hair inside the stable amplitude so the ratio is >= 1
            let x = 0.9999 * P_T_200.sqrt() * k as f64 / 200.0;
            let ratio = c.gain_ratio(amp(x)).unwrap();
            assert!(ratio < prev, "ratio must fall: {ratio} !< {prev} at x = {x}");
            assert!(
                (1.0..bound).contains(&ratio),
                "ratio {ratio} outside [1, {bound}) at x = {x}"
            );
            prev = ratio;
        }
    }

    #[test]
    fn gain_ratio_approaches_its_unsaturated_limit() {
        let c = channel(200.0);
        let limit = c.gain_ratio_limit();
        assert!(
            (limit - 1.2893664957249544).abs() < 1e-12,
            "unsaturated round-trip gain: got {limit}"
        );
        let ratio = c.gain_ratio(amp(1e-3 * P_T_200.sqrt())).unwrap();
        assert!(
            (limit - ratio) / limit < 1e-5 && ratio < limit,
            "ratio {ratio} should approach {limit} from below"
        );
    }

    #[test]
    fn pump_power_orders_the_link_gain_pointwise() {
        for x in [0.1, 0.5, 2.0, 6.5] {
            let h150 = channel(150.0).link_gain(amp(x)).unwrap().watts();
            let h170 = channel(170.0).link_gain(amp(x)).unwrap().watts();
            let h200 = channel(200.0).link_gain(amp(x)).unwrap().watts();
            assert!(
                h150 < h170 && h170 < h200,
                "pump ordering broken at x = {x}: {h150}, {h170}, {h200}"
            );
        }
    }

    #[test]
    fn below_threshold_every_round_trip_loses_power() {
        // At 150 W the unsaturated round-trip gain is under 1: no
        // circulating power can sustain itself.
        let c = channel(150.0);
        assert!(c.gain_ratio_limit() < 1.0, "limit {}", c.gain_ratio_limit());
        for x in [1e-3, 0.1, 1.0, 5.0] {
            let ratio = c.gain_ratio(amp(x)).unwrap();
            assert!(ratio < 1.0, "ratio {ratio} at x = {x} should be lossy");
        }
    }

    #[test]
    fn chain_and_product_forms_agree() {
        // h can also be written (1-alpha) delta^2 G_T G_R x^2; same gains,
        // different arithmetic order.
        let c = channel(200.0);
        let s0 = c.medium().cross_section();
        for k in 1..=50 {
            let x = P_T_200.sqrt() * k as f64 / 50.0;
            let i_r_in = (1.0 - c.alpha()) * c.delta() * x * x / s0;
            let g_r = c.medium().power_gain(c.pump(), IntensityWm2::new(i_r_in).unwrap()).unwrap();
            let i_t_in = c.delta() * g_r * i_r_in;
            let g_t = c.medium().power_gain(c.pump(), IntensityWm2::new(i_t_in).unwrap()).unwrap();
            let product = (1.0 - c.alpha()) * c.delta() * c.delta() * g_r * g_t * x * x;
            let chain = c.link_gain(amp(x)).unwrap().watts();
            assert!(
                (product - chain).abs() / chain < 1e-10,
                "forms disagree at x = {x}: {chain} vs {product}"
            );
        }
    }

    #[test]
    fn inversion_round_trips_through_the_forward_map() {
        let c = channel(200.0);
        let stable = PowerW::new(P_T_200).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let x0 = rng.gen_range(1e-3..1.0) * P_T_200.sqrt();
            let a = c.link_gain(amp(x0)).unwrap().watts().sqrt();
            let back = c.invert_link_gain(amp(a), stable).unwrap().value();
            assert!(
                (back - x0).abs() / x0 < 1e-8,
                "round trip drifted: {x0} -> {a} -> {back}"
            );
        }
    }

    #[test]
    fn inversion_rejects_targets_outside_the_range() {
        let c = channel(200.0);
        let stable = PowerW::new(P_T_200).unwrap();
        let too_big = amp(2.0 * P_T_200.sqrt());
        assert!(
            matches!(c.invert_link_gain(too_big, stable), Err(Error::OutOfRange { .. })),
            "an amplitude above sqrt(h(sqrt(P_t))) is unreachable"
        );
        let too_small = amp(1e-14);
        assert!(
            matches!(c.invert_link_gain(too_small, stable), Err(Error::OutOfRange { .. })),
            "an amplitude below sqrt(h) of the bracket floor is unreachable"
        );
    }

    #[test]
    fn zero_amplitude_is_rejected() {
        let err = channel(200.0).link_gain(amp(0.0)).unwrap_err();
        assert!(matches!(err, Error::InvalidInput { .. }), "got {err:?}");
    }

    #[test]
    fn degenerate_splitting_or_loss_is_rejected() {
        let medium = GainMedium::new(1.2e7, 0.7, 3e-3).unwrap();
        let pump = PowerW::new(200.0).unwrap();
        assert!(ChannelPhysics::new(medium, pump, 0.0, 0.5).is_err(), "alpha = 0");
        assert!(ChannelPhysics::new(medium, pump, 1.0, 0.5).is_err(), "alpha = 1");
        assert!(ChannelPhysics::new(medium, pump, 0.01, 0.0).is_err(), "delta = 0");
        assert!(ChannelPhysics::new(medium, pump, 0.01, 1.0).is_err(), "delta = 1");
    }
}
