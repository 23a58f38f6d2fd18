//! Frame-level Monte-Carlo simulation of the echo channel and its
//! amplitude-compensation scheme.
//!
//! The raw channel is a Markov chain: the amplitude transmitted at frame
//! `k` is the echo of the previous frame's amplitude, rescaled by the new
//! modulated symbol, `x_k = sqrt(h(x_{k-1}))·m_k`.  The compensation
//! scheme chooses each `m_k` so that the state dependence cancels: a
//! constant target amplitude `A` and a floor `mu1 >= a_hat/A` guarantee
//! the per-frame weight `A/sqrt(h(A·s_{k-1}))` never exceeds one, and the
//! transmitted amplitude collapses to `x_k = A·s_k` — a memoryless
//! amplitude-constrained AWGN channel.  The simulator runs the *raw*
//! recursion and verifies that collapse rather than assuming it.
//!
//! Slots within a frame carry independent symbol streams.  Each slot draws
//! from its own counter-mode stream of the seeded generator, so a trace is
//! reproducible bit for bit regardless of how the slots are scheduled.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::capacity::OutputDensity;
use crate::error::{Error, Result};
use crate::link::ChannelPhysics;
use crate::units::{Amplitude, PowerW, Ratio};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Identifier of the noise/symbol generator stored in trace metadata.
pub const RNG_ALGORITHM: &str = "chacha8";

/// Compensation weights may exceed one by this relative amount before the
/// scheme is declared infeasible; below it the excess is rounding noise
/// from the link-gain solve and the modulated symbol is clamped to one.
const SCHEME_TOL: f64 = 1e-9;

/// Slack on amplitude-versus-stable-power comparisons, covering the
/// stable-power solver's certified residual.
const STABLE_SLACK: f64 = 1e-7;

/// The per-frame modulation scheme: target amplitude, floor, stable power,
/// slot count, and the equally spaced constellation on `[mu1, 1]`.
///
/// The constellation is stored parametrically (size plus endpoints) because
/// optimized schemes routinely use tens of millions of points; `symbol(i)`
/// reconstructs any point exactly.
#[derive(Debug, Clone, Copy)]
pub struct FrameScheme {
    a: Amplitude,
    mu1: Ratio,
    p_t: PowerW,
    n_symbols: u32,
    m_points: u64,
}

impl FrameScheme {
    /// Validates a scheme: target amplitude within the stable amplitude,
    /// a positive floor, at least one slot and two constellation points.
    pub fn new(
        a: Amplitude,
        mu1: Ratio,
        p_t: PowerW,
        n_symbols: u32,
        m_points: u64,
    ) -> Result<Self> {
        if a.value() <= 0.0 {
            return Err(Error::InvalidInput {
                quantity: "target amplitude",
                value: a.value(),
                reason: "must be positive",
            });
        }
        if a.value() > p_t.watts().sqrt() * (1.0 + STABLE_SLACK) {
            return Err(Error::OutOfRange {
                quantity: "target amplitude",
                value: a.value(),
                lo: 0.0,
                hi: p_t.watts().sqrt(),
            });
        }
        if mu1.value() <= 0.0 {
            return Err(Error::InvalidInput {
                quantity: "modulation floor",
                value: mu1.value(),
                reason: "must be positive so every symbol keeps the beam alive",
            });
        }
        if n_symbols == 0 {
            return Err(Error::InvalidInput {
                quantity: "slots per frame",
                value: 0.0,
                reason: "at least one data slot is required",
            });
        }
        if m_points < 2 {
            return Err(Error::InvalidInput {
                quantity: "constellation size",
                value: m_points as f64,
                reason: "at least two points are required",
            });
        }
        Ok(FrameScheme { a, mu1, p_t, n_symbols, m_points })
    }

    /// Builds the scheme for a search winner: the winning amplitude and
    /// floor, with the constellation sized for the winner's peak power
    /// against the given noise power.
    pub fn from_optimum(
        opt: &crate::optimizer::Optimum,
        noise: PowerW,
        n_symbols: u32,
    ) -> Result<Self> {
        let (a, mu1, p_t) = crate::optimizer::modulation_parameters(opt)?;
        let m = crate::capacity::constellation_size(opt.p_peak_star.watts() / noise.watts())?;
        FrameScheme::new(a, mu1, p_t, n_symbols, m)
    }

    /// Constant target amplitude `A`, sqrt(W).
    pub fn a(&self) -> Amplitude {
        self.a
    }

    /// Modulation floor `mu1`.
    pub fn mu1(&self) -> Ratio {
        self.mu1
    }

    /// Stable circulating power, W.
    pub fn p_t(&self) -> PowerW {
        self.p_t
    }

    /// Data slots per frame.
    pub fn n_symbols(&self) -> u32 {
        self.n_symbols
    }

    /// Number of constellation points.
    pub fn constellation_points(&self) -> u64 {
        self.m_points
    }

    /// The `i`-th constellation point: `m_points` equally spaced values
    /// from `mu1` (index 0) to 1 (index `m_points - 1`).
    pub fn symbol(&self, index: u64) -> f64 {
        debug_assert!(index < self.m_points);
        let mu1 = self.mu1.value();
        mu1 + (1.0 - mu1) * (index as f64 / (self.m_points as f64 - 1.0))
    }
}

/// A completed simulation: per-(frame, slot) ground-truth symbols,
/// modulated symbols, transmitted amplitudes, and received samples, stored
/// frame-major, plus the metadata needed to reproduce the run.
#[derive(Debug, Clone)]
pub struct FrameTrace {
    k_frames: u64,
    n_symbols: u32,
    seed: u64,
    s: Vec<f64>,
    m: Vec<f64>,
    x: Vec<f64>,
    y: Vec<f64>,
}

impl FrameTrace {
    /// Frames simulated.
    pub fn k_frames(&self) -> u64 {
        self.k_frames
    }

    /// Slots per frame.
    pub fn n_symbols(&self) -> u32 {
        self.n_symbols
    }

    /// Seed the generator was started from.
    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Identifier of the generator algorithm (see [`RNG_ALGORITHM`]).
    pub fn rng_algorithm(&self) -> &'static str {
        RNG_ALGORITHM
    }

    /// Total samples, `k_frames * n_symbols`.
    pub fn len(&self) -> usize {
        self.s.len()
    }

    /// True for a trace with no samples (never produced by `simulate`).
    pub fn is_empty(&self) -> bool {
        self.s.is_empty()
    }

    /// Row index of frame `k` (0-based), slot `n`.
    pub fn index(&self, k: u64, n: u32) -> usize {
        (k * self.n_symbols as u64 + n as u64) as usize
    }

    /// Ground-truth information symbols, frame-major.
    pub fn s(&self) -> &[f64] {
        &self.s
    }

    /// Modulated symbols, frame-major.
    pub fn m(&self) -> &[f64] {
        &self.m
    }

    /// Transmitted amplitudes, frame-major, sqrt(W).
    pub fn x(&self) -> &[f64] {
        &self.x
    }

    /// Received samples, frame-major, sqrt(W).
    pub fn y(&self) -> &[f64] {
        &self.y
    }

    /// Writes the trace as CSV with columns `frame,slot,s,m,x,y`; frames
    /// are 1-based. Values use scientific notation at full precision (the
    /// shortest representation that parses back to the same double).
    pub fn to_csv<W: std::io::Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "frame,slot,s,m,x,y")?;
        for k in 0..self.k_frames {
            for n in 0..self.n_symbols {
                let i = self.index(k, n);
                writeln!(
                    out,
                    "{},{},{:e},{:e},{:e},{:e}",
                    k + 1,
                    n,
                    self.s[i],
                    self.m[i],
                    self.x[i],
                    self.y[i]
                )?;
            }
        }
        Ok(())
    }
}

/// One step of the raw Markov recursion: the transmitted amplitude is the
/// echo of the previous frame's amplitude scaled by the modulated symbol,
/// `sqrt(h(x_prev))·m`; the first frame (no predecessor) starts from the
/// stable amplitude, `sqrt(p_t)·m`.
pub fn raw_markov_step(
    channel: &ChannelPhysics,
    x_prev: Option<Amplitude>,
    m: Ratio,
    p_t: PowerW,
) -> Result<Amplitude> {
    if m.value() == 0.0 {
        return Err(Error::InvalidInput {
            quantity: "modulated symbol",
            value: 0.0,
            reason: "must be positive to keep the beam alive",
        });
    }
    let base = match x_prev {
        None => p_t.watts().sqrt(),
        Some(x) => channel.link_gain(x)?.watts().sqrt(),
    };
    Amplitude::new(base * m.value())
}

/// The modulated symbol that compensates the echo: `A·s_k` divided by what
/// the channel will actually deliver, `sqrt(h(A·s_prev))` (or `sqrt(p_t)`
/// at the first frame).
///
/// When the floor invariant `mu1 >= a_hat/A` holds, the weight
/// `A/sqrt(h(A·s_prev))` stays at or below one and the result lies in
/// `(0, 1]`. A weight above `1 + 1e-9` proves the invariant is violated
/// and raises the infeasibility signal (with the frame number unknown at
/// this level, reported as 0; `simulate` fills it in).
pub fn compensated_modulated_symbol(
    scheme: &FrameScheme,
    channel: &ChannelPhysics,
    s_k: Ratio,
    s_prev: Option<Ratio>,
) -> Result<Ratio> {
    for (name, value) in [("current symbol", Some(s_k)), ("previous symbol", s_prev)] {
        if let Some(s) = value {
            if s.value() < scheme.mu1.value() * (1.0 - 1e-12) {
                return Err(Error::OutOfRange {
                    quantity: name,
                    value: s.value(),
                    lo: scheme.mu1.value(),
                    hi: 1.0,
                });
            }
        }
    }
    let a = scheme.a.value();
    let weight = match s_prev {
        None => a / scheme.p_t.watts().sqrt(),
        Some(s) => {
            let drive = Amplitude::new(a * s.value())?;
            a / channel.link_gain(drive)?.watts().sqrt()
        }
    };
    if weight > 1.0 + SCHEME_TOL {
        return Err(Error::SchemeInfeasible { frame: 0, weight });
    }
    Ratio::new((weight * s_k.value()).min(1.0))
}

/// Runs the simulation with the crate's default execution strategy
/// (slots in parallel when the `parallel` feature is enabled).
pub fn simulate(
    scheme: &FrameScheme,
    channel: &ChannelPhysics,
    alpha: Ratio,
    delta: Ratio,
    sigma2: PowerW,
    k_frames: u64,
    seed: u64,
) -> Result<FrameTrace> {
    #[cfg(feature = "parallel")]
    {
        simulate_par(scheme, channel, alpha, delta, sigma2, k_frames, seed)
    }
    #[cfg(not(feature = "parallel"))]
    {
        simulate_seq(scheme, channel, alpha, delta, sigma2, k_frames, seed)
    }
}

/// Runs every slot on the calling thread.
pub fn simulate_seq(
    scheme: &FrameScheme,
    channel: &ChannelPhysics,
    alpha: Ratio,
    delta: Ratio,
    sigma2: PowerW,
    k_frames: u64,
    seed: u64,
) -> Result<FrameTrace> {
    let slots = (0..scheme.n_symbols)
        .map(|slot| simulate_slot(scheme, channel, alpha, delta, sigma2, k_frames, seed, slot))
        .collect::<Result<Vec<_>>>()?;
    Ok(assemble(scheme, k_frames, seed, slots))
}

/// Runs the slots on the rayon pool. Each slot draws from its own
/// counter-mode stream of the generator, so the trace is bit-identical to
/// the sequential one.
#[cfg(feature = "parallel")]
pub fn simulate_par(
    scheme: &FrameScheme,
    channel: &ChannelPhysics,
    alpha: Ratio,
    delta: Ratio,
    sigma2: PowerW,
    k_frames: u64,
    seed: u64,
) -> Result<FrameTrace> {
    let slots = (0..scheme.n_symbols)
        .into_par_iter()
        .map(|slot| simulate_slot(scheme, channel, alpha, delta, sigma2, k_frames, seed, slot))
        .collect::<Result<Vec<_>>>()?;
    Ok(assemble(scheme, k_frames, seed, slots))
}

/// Plug-in estimate of the mutual information between the information
/// symbol and the received sample, in bits per channel use.
///
/// Uses the known channel law: the conditional density of `y` given `s` is
/// Gaussian around `sqrt(alpha*delta)·A·s`, and the marginal is the
/// equally spaced mixture over the constellation. With zero noise the
/// channel is lossless and the estimate is `log2(M)` exactly.
pub fn empirical_mutual_information(
    trace: &FrameTrace,
    scheme: &FrameScheme,
    alpha: Ratio,
    delta: Ratio,
    sigma2: PowerW,
) -> Result<f64> {
    let m = scheme.m_points;
    if sigma2.watts() == 0.0 {
        return Ok((m as f64).log2());
    }
    let sigma = sigma2.watts().sqrt();
    let tap = (alpha.value() * delta.value()).sqrt();
    let a = scheme.a.value();
    let mu1 = scheme.mu1.value();
    // Received constellation spans [tap*A*mu1, tap*A]; the mixture density
    // is its centered version shifted by the midpoint.
    let center = 0.5 * tap * a * (1.0 + mu1);
    let half_width = 0.5 * tap * a * (1.0 - mu1);
    let density = OutputDensity::new(m, half_width, sigma);
    let log_norm = -(sigma * (2.0 * std::f64::consts::PI).sqrt()).ln();
    let mut sum = 0.0;
    for (s, y) in trace.s.iter().zip(&trace.y) {
        let r = (y - tap * a * s) / sigma;
        let log_cond = log_norm - 0.5 * r * r;
        // The marginal underflows only for noise excursions beyond the
        // 14-sigma component window, which a trace cannot realistically
        // contain; the clamp keeps the estimator finite if one occurs.
        let marginal = density.eval(y - center).max(f64::MIN_POSITIVE);
        sum += log_cond - marginal.ln();
    }
    Ok(sum / trace.len() as f64 / std::f64::consts::LN_2)
}

/// Per-slot series, later interleaved into the frame-major trace.
struct SlotSeries {
    s: Vec<f64>,
    m: Vec<f64>,
    x: Vec<f64>,
    y: Vec<f64>,
}

#[allow(clippy::too_many_arguments)]
fn simulate_slot(
    scheme: &FrameScheme,
    channel: &ChannelPhysics,
    alpha: Ratio,
    delta: Ratio,
    sigma2: PowerW,
    k_frames: u64,
    seed: u64,
    slot: u32,
) -> Result<SlotSeries> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(slot as u64);
    let tap = (alpha.value() * delta.value()).sqrt();
    let sigma = sigma2.watts().sqrt();
    let n = k_frames as usize;
    let mut series = SlotSeries {
        s: Vec::with_capacity(n),
        m: Vec::with_capacity(n),
        x: Vec::with_capacity(n),
        y: Vec::with_capacity(n),
    };
    let mut s_prev: Option<Ratio> = None;
    let mut x_prev: Option<Amplitude> = None;
    for k in 0..k_frames {
        let s = Ratio::new(scheme.symbol(rng.gen_range(0..scheme.m_points)))?;
        let m = compensated_modulated_symbol(scheme, channel, s, s_prev).map_err(|e| match e {
            Error::SchemeInfeasible { weight, .. } => {
                Error::SchemeInfeasible { frame: k + 1, weight }
            }
            other => other.in_context(format!("at frame {}, slot {slot}", k + 1)),
        })?;
        let x = raw_markov_step(channel, x_prev, m, scheme.p_t)
            .map_err(|e| e.in_context(format!("at frame {}, slot {slot}", k + 1)))?;
        let noise: f64 = rng.sample(StandardNormal);
        series.s.push(s.value());
        series.m.push(m.value());
        series.x.push(x.value());
        series.y.push(tap * x.value() + sigma * noise);
        s_prev = Some(s);
        x_prev = Some(x);
    }
    Ok(series)
}

fn assemble(scheme: &FrameScheme, k_frames: u64, seed: u64, slots: Vec<SlotSeries>) -> FrameTrace {
    let n_symbols = scheme.n_symbols;
    let total = k_frames as usize * n_symbols as usize;
    let mut trace = FrameTrace {
        k_frames,
        n_symbols,
        seed,
        s: vec![0.0; total],
        m: vec![0.0; total],
        x: vec![0.0; total],
        y: vec![0.0; total],
    };
    for (slot, series) in slots.into_iter().enumerate() {
        for k in 0..k_frames as usize {
            let i = k * n_symbols as usize + slot;
            trace.s[i] = series.s[k];
            trace.m[i] = series.m[k];
            trace.x[i] = series.x[k];
            trace.y[i] = series.y[k];
        }
    }
    trace
}
