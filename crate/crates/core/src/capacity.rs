//! Capacity bounds for the peak-amplitude-limited Gaussian channel seen by
//! the receiver after amplitude compensation.
//!
//! The compensated echo channel delivers `y = A·s + n` with the symbol `s`
//! confined to `[mu1, 1]` and `n` zero-mean Gaussian, so the information
//! carrying part of the received waveform is bounded in amplitude rather
//! than in average power.  Its capacity is not known in closed form; this
//! module computes the standard sandwich:
//!
//! * an upper bound that follows the Shannon formula `log2(1 + snr)/2` at
//!   low peak-to-noise ratio and switches to a sphere-packing form
//!   `log2(1 + sqrt(2·snr/(pi·e)))` once the peak constraint binds
//!   (the switch point [`branch_snr`] is where the two expressions cross),
//! * a constructive lower bound: the rate achieved by an equiprobable,
//!   equally spaced constellation whose size grows with the peak-to-noise
//!   ratio, evaluated as the exact differential entropy of the noisy
//!   constellation output minus the noise entropy.
//!
//! The lower-bound entropy is an adaptive quadrature over the Gaussian
//! mixture density. Very large constellations (the joint parameter search
//! routinely lands on sizes above ten million) are handled by the
//! continuous limit of the mixture, a uniform density convolved with the
//! noise, which the mixture approaches with error `O(1/M²)` in nats.

use std::f64::consts::{E, LN_2, PI};

use crate::error::{Error, Result};
use crate::units::{Amplitude, PowerW};

/// Constellations up to this size are integrated as exact Gaussian
/// mixtures; larger ones use the continuous uniform-input limit, which at
/// the boundary agrees with the exact mixture to about 5e-5 nats.
const M_EXACT_LIMIT: u64 = 20_000;

/// Above this peak-to-noise ratio the uniform-limit entropy is replaced by
/// its asymptotic expansion; the neglected terms are `O((sigma/A)^2)`,
/// i.e. below 1e-10 nats here.
const SNR_CLOSED_FORM: f64 = 1e10;

/// First-order edge term of the uniform-limit entropy,
/// `H = ln(2A) + c·sigma/A + O((sigma/A)^2)`, measured against the
/// quadrature over four decades of `A/sigma` (stable to the digits shown).
const UNIFORM_EDGE_NATS: f64 = 0.903_197_3;

/// Relative tolerance of the entropy quadrature.
const QUAD_REL_TOL: f64 = 1e-8;

/// Mixture components farther than this many noise deviations from the
/// evaluation point are dropped; exp(-14²/2) ≈ 3e-43 is far below the
/// double-precision resolution of any retained term.
const WINDOW_SIGMAS: f64 = 14.0;

/// Integration extends this many noise deviations past the outermost
/// constellation point; the tail mass beyond is < 1e-23 per component.
const TAIL_SIGMAS: f64 = 10.0;

/// Cap on the number of quadrature panels (reached only for peak-to-noise
/// ratios close to [`SNR_CLOSED_FORM`], where panels stay thinner than the
/// noise deviation, the natural structure scale of the integrand).
const MAX_PANELS: usize = 1_000_000;

/// Recursion limit of the per-panel Simpson refinement.
const MAX_DEPTH: u32 = 28;

/// Peak electrical power of the information-bearing signal component,
/// `(1 - mu1)²·alpha·delta·a²/4` in W, for target amplitude `a` (the top
/// of the modulated range), modulation floor `mu1`, power-split fraction
/// `alpha` and one-way diffraction transmittance `delta`.
///
/// The floor `mu1` is the fraction of the amplitude swing reserved to keep
/// the resonator above threshold; only the remaining swing carries
/// information, and only the fraction `alpha·delta` of it reaches the
/// receiver photodetector.
pub fn peak_power(a: Amplitude, mu1: f64, alpha: f64, delta: f64) -> Result<PowerW> {
    if !(0.0..=1.0).contains(&mu1) {
        return Err(Error::InvalidInput {
            quantity: "modulation floor mu1",
            value: mu1,
            reason: "must lie in [0, 1]",
        });
    }
    for (quantity, value) in [("power split alpha", alpha), ("transmittance delta", delta)] {
        if !(value > 0.0 && value < 1.0) {
            return Err(Error::InvalidInput {
                quantity,
                value,
                reason: "must lie strictly inside (0, 1)",
            });
        }
    }
    let swing = 1.0 - mu1;
    PowerW::new(0.25 * swing * swing * alpha * delta * a.value() * a.value())
}

/// Peak-to-noise ratio at which the two upper-bound branches cross,
/// `8 / (pi·e·(1 - 2/(pi·e))²)` ≈ 1.5974.
///
/// Below this ratio the Shannon bound is the tighter of the two; above it
/// the sphere-packing form is. The piecewise bound is continuous here.
pub fn branch_snr() -> f64 {
    let pe = PI * E;
    8.0 / (pe * (1.0 - 2.0 / pe).powi(2))
}

/// Capacity upper bound in bits per channel use for peak electrical power
/// `p_peak` and noise power `noise` (both W).
pub fn capacity_upper(p_peak: PowerW, noise: PowerW) -> Result<f64> {
    let sigma2 = positive_noise(noise)?;
    let snr = p_peak.watts() / sigma2;
    if snr == 0.0 {
        return Ok(0.0);
    }
    Ok(if snr > branch_snr() {
        (1.0 + (2.0 * snr / (PI * E)).sqrt()).log2()
    } else {
        0.5 * (1.0 + snr).log2()
    })
}

/// Size of the equiprobable constellation used by the lower bound: 2 points
/// up to a peak-to-noise ratio of 2, then 3 up to 3.5, then `ceil(snr)`.
pub fn constellation_size(snr: f64) -> Result<u64> {
    if !snr.is_finite() || snr < 0.0 {
        return Err(Error::InvalidInput {
            quantity: "peak-to-noise ratio",
            value: snr,
            reason: "must be finite and non-negative",
        });
    }
    Ok(if snr < 2.0 {
        2
    } else if snr < 3.5 {
        3
    } else {
        snr.ceil() as u64
    })
}

/// Differential entropy of the noise alone, `ln(2·pi·e·sigma²)/2` in nats.
pub fn noise_entropy_nats(noise: PowerW) -> Result<f64> {
    let sigma2 = positive_noise(noise)?;
    Ok(0.5 * (2.0 * PI * E * sigma2).ln())
}

/// Differential entropy in nats of the channel output when the input is
/// drawn uniformly from `m` equally spaced amplitudes spanning
/// `[-sqrt(p_peak), +sqrt(p_peak)]` and the noise power is `noise`.
///
/// `m = 1` (or a zero peak) degenerates to the noise entropy; sizes above
/// [`M_EXACT_LIMIT`] are evaluated in the uniform-input limit.
pub fn output_entropy_nats(m: u64, p_peak: PowerW, noise: PowerW) -> Result<f64> {
    let sigma2 = positive_noise(noise)?;
    if m == 0 {
        return Err(Error::InvalidInput {
            quantity: "constellation size",
            value: 0.0,
            reason: "at least one point is required",
        });
    }
    let sigma = sigma2.sqrt();
    // Work with the standardized output Y/sigma and add ln(sigma) at the
    // end: the quadrature then sees identical numbers for identical
    // peak-to-noise ratios, making the entropy exactly scale covariant.
    let a = p_peak.watts().sqrt() / sigma;
    if m > M_EXACT_LIMIT && a * a >= SNR_CLOSED_FORM {
        return Ok((2.0 * a).ln() + UNIFORM_EDGE_NATS / a + sigma.ln());
    }
    let density = OutputDensity::new(m, a, 1.0);
    let standardized = integrate_adaptive(
        &|y| {
            let f = density.eval(y);
            if f > 0.0 {
                -f * f.ln()
            } else {
                0.0
            }
        },
        -a - TAIL_SIGMAS,
        a + TAIL_SIGMAS,
        1.0,
    );
    Ok(standardized + sigma.ln())
}

/// Capacity lower bound in bits per channel use: the mutual information of
/// the equiprobable constellation chosen by [`constellation_size`], clamped
/// at zero.
pub fn capacity_lower(p_peak: PowerW, noise: PowerW) -> Result<f64> {
    let sigma2 = positive_noise(noise)?;
    if p_peak.watts() == 0.0 {
        return Ok(0.0);
    }
    let m = constellation_size(p_peak.watts() / sigma2)?;
    let h_out = output_entropy_nats(m, p_peak, noise)?;
    let h_noise = noise_entropy_nats(noise)?;
    Ok(((h_out - h_noise) / LN_2).max(0.0))
}

/// The two capacity bounds and the constellation size behind the lower one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CapacityBounds {
    /// Upper bound in bits per channel use.
    pub upper_bits: f64,
    /// Constructive lower bound in bits per channel use.
    pub lower_bits: f64,
    /// Number of constellation points achieving `lower_bits`.
    pub constellation: u64,
}

/// Evaluates both bounds at one operating point.
pub fn capacity_bounds(p_peak: PowerW, noise: PowerW) -> Result<CapacityBounds> {
    let upper_bits = capacity_upper(p_peak, noise)?;
    let lower_bits = capacity_lower(p_peak, noise)?;
    let constellation = constellation_size(p_peak.watts() / noise.watts())?;
    debug_assert!(
        lower_bits <= upper_bits + 1e-6,
        "bounds crossed: lower {lower_bits} > upper {upper_bits}"
    );
    Ok(CapacityBounds { upper_bits, lower_bits, constellation })
}

fn positive_noise(noise: PowerW) -> Result<f64> {
    if noise.watts() == 0.0 {
        return Err(Error::InvalidInput {
            quantity: "noise power",
            value: 0.0,
            reason: "must be positive",
        });
    }
    Ok(noise.watts())
}

/// Probability density of the constellation output `a·s + n`, shared by the
/// entropy quadrature and the simulator's information estimate.
pub(crate) struct OutputDensity {
    m: u64,
    /// Peak amplitude in sqrt(W).
    a: f64,
    /// Noise standard deviation in sqrt(W).
    sigma: f64,
    /// Component spacing (only meaningful for 2 ≤ m ≤ [`M_EXACT_LIMIT`]).
    spacing: f64,
    /// Half-width of the component window in index units.
    window: i64,
    /// `1/(m·sigma·sqrt(2·pi))`.
    norm: f64,
}

impl OutputDensity {
    /// A density for `m` points spanning `[-a, a]` under noise deviation
    /// `sigma`; `m = 1` or `a = 0` degenerate to a single Gaussian at zero.
    pub(crate) fn new(m: u64, a: f64, sigma: f64) -> Self {
        let m = if a == 0.0 { 1 } else { m };
        let spacing = if m >= 2 { 2.0 * a / (m as f64 - 1.0) } else { 0.0 };
        let window = if (2..=M_EXACT_LIMIT).contains(&m) {
            (WINDOW_SIGMAS * sigma / spacing).ceil() as i64 + 1
        } else {
            0
        };
        let norm = 1.0 / (m as f64 * sigma * (2.0 * PI).sqrt());
        OutputDensity { m, a, sigma, spacing, window, norm }
    }

    pub(crate) fn eval(&self, y: f64) -> f64 {
        if self.m == 1 {
            let z = y / self.sigma;
            return if z.abs() < WINDOW_SIGMAS {
                (-0.5 * z * z).exp() * self.norm
            } else {
                0.0
            };
        }
        if self.m > M_EXACT_LIMIT {
            // Uniform-input limit: the box [-a, a] convolved with the noise.
            let s = self.sigma * std::f64::consts::SQRT_2;
            let mass = 0.5 * (libm::erf((y + self.a) / s) - libm::erf((y - self.a) / s));
            return (mass / (2.0 * self.a)).max(0.0);
        }
        let nearest = ((y + self.a) / self.spacing).round() as i64;
        let first = (nearest - self.window).max(0);
        let last = (nearest + self.window).min(self.m as i64 - 1);
        let mut sum = 0.0;
        for j in first..=last {
            let z = (y - (-self.a + j as f64 * self.spacing)) / self.sigma;
            if z.abs() < WINDOW_SIGMAS {
                sum += (-0.5 * z * z).exp();
            }
        }
        sum * self.norm
    }
}

/// Integrates `g` over `[lo, hi]` by composite adaptive Simpson: panels no
/// wider than half the structure scale fix a rough estimate, then each
/// panel is refined to its share of [`QUAD_REL_TOL`] of the total.
fn integrate_adaptive<F: Fn(f64) -> f64>(g: &F, lo: f64, hi: f64, scale: f64) -> f64 {
    let n = (((hi - lo) / (0.5 * scale)).ceil() as usize).clamp(64, MAX_PANELS);
    let h = (hi - lo) / n as f64;
    let x = |i: usize| lo + i as f64 * h;
    let f_edge: Vec<f64> = (0..=n).map(|i| g(x(i))).collect();
    let f_mid: Vec<f64> = (0..n).map(|i| g(x(i) + 0.5 * h)).collect();
    let rough = |i: usize| h / 6.0 * (f_edge[i] + 4.0 * f_mid[i] + f_edge[i + 1]);
    let total_rough: f64 = (0..n).map(rough).sum();
    let tol = QUAD_REL_TOL * total_rough.abs().max(1.0) / n as f64;
    (0..n)
        .map(|i| {
            simpson_refine(
                g,
                x(i),
                f_edge[i],
                x(i) + 0.5 * h,
                f_mid[i],
                x(i + 1),
                f_edge[i + 1],
                rough(i),
                tol,
                MAX_DEPTH,
            )
        })
        .sum()
}

/// One step of adaptive Simpson with Richardson correction: accept the
/// half-panel pair when it moves the estimate by less than `15·tol`,
/// otherwise recurse on both halves with half the budget each.
#[allow(clippy::too_many_arguments)]
fn simpson_refine<F: Fn(f64) -> f64>(
    g: &F,
    a: f64,
    f_a: f64,
    mid: f64,
    f_mid: f64,
    b: f64,
    f_b: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let lm = 0.5 * (a + mid);
    let rm = 0.5 * (mid + b);
    let f_lm = g(lm);
    let f_rm = g(rm);
    let left = (mid - a) / 6.0 * (f_a + 4.0 * f_lm + f_mid);
    let right = (b - mid) / 6.0 * (f_mid + 4.0 * f_rm + f_b);
    let correction = left + right - whole;
    if depth == 0 || correction.abs() <= 15.0 * tol {
        left + right + correction / 15.0
    } else {
        simpson_refine(g, a, f_a, lm, f_lm, mid, f_mid, left, 0.5 * tol, depth - 1)
            + simpson_refine(g, mid, f_mid, rm, f_rm, b, f_b, right, 0.5 * tol, depth - 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p(w: f64) -> PowerW {
        PowerW::new(w).unwrap()
    }

    fn c_up(snr: f64) -> f64 {
        capacity_upper(p(snr), p(1.0)).unwrap()
    }

    fn c_low(snr: f64) -> f64 {
        capacity_lower(p(snr), p(1.0)).unwrap()
    }

    #[test]
    fn branch_point_joins_the_two_upper_bounds_continuously() {
        let thr = branch_snr();
        assert!((thr - 1.5974017064).abs() < 1e-9, "branch snr: got {thr}");
        let shannon = 0.5 * (1.0 + thr).log2();
        let packing = (1.0 + (2.0 * thr / (PI * E)).sqrt()).log2();
        assert!(
            (shannon - packing).abs() < 1e-12,
            "branches disagree at the switch: {shannon} vs {packing}"
        );
    }

    #[test]
    fn upper_bound_reference_value() {
        let c = c_up(100.0);
        assert!((c - 2.5458237194).abs() < 1e-9, "upper bound at snr 100: got {c}");
    }

    #[test]
    fn upper_bound_is_scale_invariant() {
        let s2 = 3.9810717055349695e-12;
        let scaled = capacity_upper(p(100.0 * s2), p(s2)).unwrap();
        assert!(
            (scaled - c_up(100.0)).abs() < 1e-12,
            "same snr must give the same bound: {scaled}"
        );
    }

    #[test]
    fn upper_bound_strictly_increases_across_the_branch() {
        let mut snr = 1e-6;
        let mut prev = c_up(snr);
        while snr < 1e10 {
            snr *= 1.2;
            let c = c_up(snr);
            assert!(c > prev, "bound not increasing at snr {snr}: {c} vs {prev}");
            prev = c;
        }
    }

    #[test]
    fn upper_bound_of_zero_peak_is_zero() {
        assert_eq!(c_up(0.0), 0.0);
    }

    #[test]
    fn constellation_size_follows_the_three_regimes() {
        for (snr, m) in [
            (0.0, 2),
            (1.999, 2),
            (2.0, 3),
            (3.4999, 3),
            (3.5, 4),
            (10.2, 11),
            (1e6, 1_000_000),
        ] {
            assert_eq!(constellation_size(snr).unwrap(), m, "at snr {snr}");
        }
        assert!(constellation_size(-1.0).is_err());
        assert!(constellation_size(f64::NAN).is_err());
    }

    #[test]
    fn noise_entropy_reference_value() {
        let h = noise_entropy_nats(p(1.0)).unwrap();
        assert!((h - 0.5 * (2.0 * PI * E).ln()).abs() < 1e-15, "unit noise entropy: got {h}");
        assert!((h - 1.4189385332046727).abs() < 1e-12);
    }

    #[test]
    fn single_point_entropy_matches_the_noise_entropy() {
        // Degenerate one-point constellation: the quadrature must reproduce
        // the Gaussian closed form, validating the integration machinery.
        let h = output_entropy_nats(1, p(1.0), p(1.0)).unwrap();
        let exact = noise_entropy_nats(p(1.0)).unwrap();
        assert!((h - exact).abs() < 1e-8, "quadrature vs closed form: {h} vs {exact}");
    }

    #[test]
    fn well_separated_two_point_constellation_carries_one_bit() {
        // At snr 1e6 the two components are 2000 deviations apart, so the
        // mixture entropy exceeds the noise entropy by exactly ln 2.
        let h = output_entropy_nats(2, p(1e6), p(1.0)).unwrap();
        let bits = (h - noise_entropy_nats(p(1.0)).unwrap()) / LN_2;
        assert!((bits - 1.0).abs() < 1e-6, "two far points carry one bit: got {bits}");
    }

    #[test]
    fn lower_bound_reference_values() {
        for (snr, expect) in [(0.5, 0.2904801134), (2.0, 0.5987779477), (100.0, 2.4181133287)] {
            let c = c_low(snr);
            assert!((c - expect).abs() < 5e-7, "lower bound at snr {snr}: got {c}");
        }
    }

    #[test]
    fn lower_bound_is_scale_invariant() {
        let s2 = 3.9810717055349695e-12;
        let scaled = capacity_lower(p(100.0 * s2), p(s2)).unwrap();
        assert!(
            (scaled - c_low(100.0)).abs() < 1e-9,
            "same snr must give the same rate: {scaled}"
        );
    }

    #[test]
    fn lower_bound_of_zero_peak_is_zero() {
        assert_eq!(c_low(0.0), 0.0);
    }

    #[test]
    fn output_density_normalizes_to_one() {
        let cases: [(u64, f64); 4] = [(2, 1e6), (7, 35.0), (10_000, 1e4), (30_000_000, 1e7)];
        for (m, snr) in cases {
            let sigma = 1.0;
            let a = snr.sqrt();
            let density = OutputDensity::new(m, a, sigma);
            let mass = integrate_adaptive(
                &|y| density.eval(y),
                -a - TAIL_SIGMAS * sigma,
                a + TAIL_SIGMAS * sigma,
                sigma,
            );
            assert!((mass - 1.0).abs() < 1e-8, "mass for m = {m}, snr = {snr}: got {mass}");
        }
    }

    #[test]
    fn exact_mixture_matches_uniform_limit_at_the_crossover() {
        // m = 10000 sits below the switch, so this runs the windowed mixture;
        // the uniform limit evaluated at the same geometry must agree to the
        // mixture's O(1/m²) discretization error.
        let exact = output_entropy_nats(10_000, p(1e4), p(1.0)).unwrap();
        let limit_density = OutputDensity::new(M_EXACT_LIMIT + 1, 100.0, 1.0);
        let limit = integrate_adaptive(
            &|y| {
                let f = limit_density.eval(y);
                if f > 0.0 {
                    -f * f.ln()
                } else {
                    0.0
                }
            },
            -100.0 - TAIL_SIGMAS,
            100.0 + TAIL_SIGMAS,
            1.0,
        );
        assert!(
            (exact - limit).abs() < 3e-4,
            "mixture vs uniform limit: {exact} vs {limit}"
        );
    }

    #[test]
    fn closed_form_matches_the_uniform_limit_quadrature() {
        // Just below the closed-form switch the quadrature is still exact;
        // the asymptotic expansion must agree to its O((sigma/A)²) error.
        let snr = 1e10 - 1.0;
        let via_quadrature = output_entropy_nats(M_EXACT_LIMIT + 1, p(snr), p(1.0)).unwrap();
        let a = snr.sqrt();
        let closed = (2.0 * a).ln() + UNIFORM_EDGE_NATS / a;
        assert!(
            (via_quadrature - closed).abs() < 1e-6,
            "quadrature vs expansion: {via_quadrature} vs {closed}"
        );
    }

    #[test]
    fn bounds_stay_ordered_with_bounded_gap() {
        let mut snr = 0.01;
        while snr < 1e4 {
            let up = c_up(snr);
            let low = c_low(snr);
            assert!(low >= 0.0 && low <= up + 1e-9, "crossed at snr {snr}: {low} vs {up}");
            assert!(up - low < 0.6, "gap too wide at snr {snr}: {}", up - low);
            snr *= 1.9;
        }
    }

    #[test]
    fn lower_bound_increases_with_peak_power() {
        let rates: Vec<f64> = [0.5, 5.0, 50.0, 500.0, 5000.0].iter().map(|&s| c_low(s)).collect();
        for w in rates.windows(2) {
            assert!(w[1] > w[0], "rate must grow with peak power: {rates:?}");
        }
    }

    #[test]
    fn entropy_increases_with_spread_at_fixed_constellation() {
        let entropies: Vec<f64> = [1.0, 4.0, 16.0, 64.0]
            .iter()
            .map(|&pp| output_entropy_nats(8, p(pp), p(1.0)).unwrap())
            .collect();
        for w in entropies.windows(2) {
            assert!(w[1] > w[0], "spreading points must add entropy: {entropies:?}");
        }
    }

    #[test]
    fn peak_power_reference_value_and_validation() {
        let a_hat = Amplitude::new(2.0).unwrap();
        let pp = peak_power(a_hat, 0.5, 0.01, 0.990476660579976).unwrap();
        assert!(
            (pp.watts() - 2.47619165144994e-3).abs() < 1e-17,
            "peak power: got {}",
            pp.watts()
        );
        let full = peak_power(a_hat, 1.0, 0.01, 0.5).unwrap();
        assert_eq!(full.watts(), 0.0, "no swing left at mu1 = 1");
        assert!(peak_power(a_hat, 1.1, 0.01, 0.5).is_err());
        assert!(peak_power(a_hat, 0.5, 0.0, 0.5).is_err());
        assert!(peak_power(a_hat, 0.5, 0.01, 1.0).is_err());
    }

    #[test]
    fn zero_noise_power_is_rejected_everywhere() {
        assert!(capacity_upper(p(1.0), p(0.0)).is_err());
        assert!(capacity_lower(p(1.0), p(0.0)).is_err());
        assert!(output_entropy_nats(2, p(1.0), p(0.0)).is_err());
        assert!(noise_entropy_nats(p(0.0)).is_err());
        assert!(output_entropy_nats(0, p(1.0), p(1.0)).is_err());
    }

    #[test]
    fn bundle_agrees_with_individual_bounds() {
        let b = capacity_bounds(p(100.0), p(1.0)).unwrap();
        assert_eq!(b.upper_bits, c_up(100.0));
        assert_eq!(b.lower_bits, c_low(100.0));
        assert_eq!(b.constellation, 100);
    }

    proptest! {
        #[test]
        fn upper_bound_scale_invariance(
            peak in 1e-9f64..1e3,
            sigma2 in 1e-12f64..1.0,
            k in 0.5f64..2.0,
        ) {
            let base = capacity_upper(p(peak), p(sigma2)).unwrap();
            let scaled = capacity_upper(p(peak * k), p(sigma2 * k)).unwrap();
            prop_assert!((base - scaled).abs() <= 1e-9 * (1.0 + base));
        }

        #[test]
        fn constellation_size_is_monotone(a in 0.0f64..1e6, b in 0.0f64..1e6) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(constellation_size(lo)? <= constellation_size(hi)?);
        }
    }
}
