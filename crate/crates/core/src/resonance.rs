//! Feasibility of resonance and the stable circulating power.
//!
//! A circulating beam sustains itself when one round trip reproduces its
//! power: `h(sqrt(P)) = P`. Because `h(x)/x^2` decreases strictly, the
//! fixed point is unique whenever the unsaturated round-trip gain
//! `(1 - alpha) delta^2 exp(2 g0)` exceeds 1, which translates into a pump
//! threshold and an upper bound on the splitting ratio:
//!
//! ```text
//! P_th = -I_s S_0 ln(delta) / (2 eta)
//! alpha < 1 - delta^-2 exp(-4 eta P_in / (I_s S_0))
//! ```
//!
//! The fixed point itself is pinned inside an analytic bracket obtained by
//! bounding the saturated gains of the two media between their values at
//! balance, and then located by bisection.

use crate::error::{Error, Result};
use crate::gain::GainMedium;
use crate::link::ChannelPhysics;
use crate::solver::bisect;
use crate::units::{Amplitude, PowerW, Ratio};

/// Width tolerance of the fixed-point bisection, relative to the bracket's
/// upper bound.
const WIDTH_TOL: f64 = 1e-9;

/// Acceptable magnitude of `h(sqrt(P_t))/P_t - 1` at the returned point.
const RESIDUAL_TOL: f64 = 1e-8;

/// Iteration budget of the fixed-point bisection.
const MAX_ITER: u32 = 200;

// ---------------------------------------------------------------------------
// Feasibility
// ---------------------------------------------------------------------------

/// Minimum pump power at which a loss `delta` can resonate at all (in the
/// limit of a vanishing splitting ratio): `P_th = -I_s S_0 ln(delta) / (2 eta)`.
///
/// `delta` must be strictly positive; a lossless link (`delta = 1`) has a
/// zero threshold.
pub fn threshold_power(medium: &GainMedium, delta: Ratio) -> Result<PowerW> {
    if delta.value() == 0.0 {
        return Err(Error::InvalidInput {
            quantity: "link loss factor",
            value: 0.0,
            reason: "a link that loses everything cannot resonate",
        });
    }
    let is_s0 = medium.saturation_intensity() * medium.cross_section();
    PowerW::new(-is_s0 * delta.value().ln() / (2.0 * medium.efficiency()))
}

/// Largest splitting ratio that still allows resonance at the given pump:
/// `u = 1 - delta^-2 exp(-4 eta P_in / (I_s S_0))`.
///
/// A value `<= 0` means the pump is at or below [`threshold_power`] and no
/// splitting ratio works.
pub fn alpha_upper_bound(medium: &GainMedium, pump: PowerW, delta: Ratio) -> Result<f64> {
    if delta.value() == 0.0 {
        return Err(Error::InvalidInput {
            quantity: "link loss factor",
            value: 0.0,
            reason: "a link that loses everything cannot resonate",
        });
    }
    let d = delta.value();
    let g0 = medium.gain_exponent(pump);
    Ok(1.0 - (-2.0 * g0).exp() / (d * d))
}

// ---------------------------------------------------------------------------
// Stable point
// ---------------------------------------------------------------------------

/// Analytic bracket around the stable circulating power.
///
/// Sandwiching both saturated gains between `1/delta` (their value at
/// balance) and the unsaturated limit yields
///
/// ```text
/// lower = max{0, (2 eta P_in + (ln delta + ln(1 - alpha)) I_s S_0)
///                 / (2 (1 - (1 - alpha) delta))}
/// upper = (2 eta P_in + I_s S_0 ln delta) / (2 (1 - delta))
/// ```
///
/// Fails with an infeasibility error when the channel cannot resonate.
pub fn stable_power_bounds(channel: &ChannelPhysics) -> Result<(PowerW, PowerW)> {
    ensure_feasible(channel)?;
    let medium = channel.medium();
    let is_s0 = medium.saturation_intensity() * medium.cross_section();
    let drive = 2.0 * medium.efficiency() * channel.pump().watts();
    let delta = channel.delta();
    let pass = 1.0 - channel.alpha();

    let lower = (drive + (delta.ln() + pass.ln()) * is_s0) / (2.0 * (1.0 - pass * delta));
    let upper = (drive + is_s0 * delta.ln()) / (2.0 * (1.0 - delta));
    Ok((PowerW::new(lower.max(0.0))?, PowerW::new(upper)?))
}

/// A located fixed point of the round trip.
#[derive(Debug, Clone, Copy)]
pub struct StablePoint {
    /// The stable circulating power `P_t` with `h(sqrt(P_t)) = P_t`.
    pub power: PowerW,
    /// Analytic bracket the bisection ran inside.
    pub bracket: (f64, f64),
    /// `|h(sqrt(P_t))/P_t - 1|` at the returned point.
    pub residual: f64,
    /// Bisection iterations spent.
    pub iterations: u32,
}

/// Locates the stable circulating power of a feasible channel.
///
/// Bisects `g(P) = h(sqrt(P))/P - 1`, which decreases strictly across its
/// single zero, over the bracket of [`stable_power_bounds`]. A zero lower
/// endpoint is replaced by `1e-9 * upper` (where `g` is positive because
/// the unsaturated gain exceeds 1), and an endpoint that fails its expected
/// sign is nudged outward by 1% at most ten times before giving up.
pub fn stable_power(channel: &ChannelPhysics) -> Result<StablePoint> {
    let (lower, upper) = stable_power_bounds(channel)?;
    let upper = upper.watts();
    let mut lo = lower.watts().max(WIDTH_TOL * upper);
    let mut hi = upper;

    let g = |p: f64| match channel.link_gain(Amplitude::new(p.sqrt()).expect("positive bracket")) {
        Ok(h) => h.watts() / p - 1.0,
        Err(_) => f64::NAN,
    };

    // The analytic bracket is exact in exact arithmetic; allow a few
    // percent-sized nudges outward in case rounding puts a root on the
    // wrong side of an endpoint.
    let mut tries = 0;
    while g(lo) <= 0.0 && tries < 10 {
        lo *= 0.99;
        tries += 1;
    }
    tries = 0;
    while g(hi) >= 0.0 && tries < 10 {
        hi *= 1.01;
        tries += 1;
    }

    let mut sol = bisect(g, lo, hi, WIDTH_TOL * upper, MAX_ITER)?;
    let mut iterations = sol.iterations;
    // The width tolerance scales with the analytic upper bound, which sits
    // far above the root when delta approaches 1; when that leaves the
    // residual above its certificate, keep halving around the located
    // root with a root-scaled width target instead.
    let mut refinements = 0;
    while sol.f_root.abs() > RESIDUAL_TOL && refinements < 4 && sol.lo < sol.hi {
        sol = bisect(g, sol.lo, sol.hi, WIDTH_TOL * sol.root, MAX_ITER)?;
        iterations += sol.iterations;
        refinements += 1;
    }
    let residual = sol.f_root.abs();
    if residual > RESIDUAL_TOL {
        return Err(Error::NoConvergence { iterations, lo: sol.lo, hi: sol.hi, residual });
    }
    Ok(StablePoint {
        power: PowerW::new(sol.root)?,
        bracket: (lo, hi),
        residual,
        iterations,
    })
}

fn ensure_feasible(channel: &ChannelPhysics) -> Result<()> {
    if channel.gain_ratio_limit() <= 1.0 {
        let medium = channel.medium();
        let delta = Ratio::new(channel.delta())?;
        let u = alpha_upper_bound(medium, channel.pump(), delta)?;
        let p_th = threshold_power(medium, delta)?.watts();
        return Err(Error::Infeasible {
            reason: format!(
                "no self-sustaining circulating power: the unsaturated round-trip gain \
                 (1 - alpha) delta^2 exp(4 eta P_in / (I_s S_0)) = {:.6} does not exceed 1 \
                 (pump {} W vs threshold {:.3} W, splitting ratio {} vs bound {:.6})",
                channel.gain_ratio_limit(),
                channel.pump().watts(),
                p_th,
                channel.alpha(),
                u,
            ),
        });
    }
    Ok(())
}
