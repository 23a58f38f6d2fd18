//! Joint grid search for the power split and keying amplitude that maximize
//! the capacity bounds of the compensated echo channel.
//!
//! For every candidate split `alpha` on an evenly spaced grid inside the
//! feasible interval, the resonator's stable circulating power is located by
//! bisection; the keying amplitude `a_hat` is then gridded over the
//! amplitude budget allowed by that power and by the receiver's peak-power
//! rating, and each surviving cell is scored by the capacity upper bound of
//! its peak received power.  Because the upper bound increases strictly
//! with peak power, the winning cell also maximizes the peak power itself
//! (the search asserts this), and the more expensive lower bound is
//! evaluated once, at the winner.
//!
//! The `alpha` iterations are independent; with the `parallel` feature they
//! run on the rayon pool and are reduced with a deterministic tie-break
//! (lowest `alpha` index, then lowest amplitude index), so the result never
//! depends on the schedule.

use crate::beam::BeamGeometry;
use crate::capacity::{capacity_bounds, capacity_upper, CapacityBounds};
use crate::error::{Error, Result};
use crate::gain::GainMedium;
use crate::link::ChannelPhysics;
use crate::resonance::{alpha_upper_bound, stable_power, threshold_power};
use crate::units::{Amplitude, PowerW, Ratio};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Grid resolution used when none is specified.
pub const DEFAULT_GRID: u32 = 1000;

/// Tolerance factor applied to the receiver peak-power rejection so that
/// cells sitting exactly on the budget boundary survive rounding.
const BUDGET_SLACK: f64 = 1e-12;

/// Slack for the `h(a_hat) <= p_t` half of the cell budget. For amplitudes
/// inside the stable point the inequality holds analytically (the link
/// gain increases and equals `p_t` at the fixed point), so it can only be
/// violated by the stable-power solver's certified residual (1e-8).
const STABLE_RESIDUAL_SLACK: f64 = 1e-7;

/// Everything the search needs: the physics basis, the noise and receiver
/// ratings, and the two grid resolutions.
#[derive(Debug, Clone, Copy)]
pub struct OptimizerConfig {
    medium: GainMedium,
    geometry: BeamGeometry,
    pump: PowerW,
    noise: PowerW,
    receiver_max: PowerW,
    alpha_steps: u32,
    amplitude_steps: u32,
}

impl OptimizerConfig {
    /// Validates and stores a search configuration.
    ///
    /// `noise` is the receiver noise power (W), `receiver_max` the largest
    /// admissible received peak power (W); `alpha_steps` and
    /// `amplitude_steps` are the grid counts for the split and the keying
    /// amplitude (at least 2 each; the grids use the interior points
    /// `1..steps`).
    pub fn new(
        medium: GainMedium,
        geometry: BeamGeometry,
        pump: PowerW,
        noise: PowerW,
        receiver_max: PowerW,
        alpha_steps: u32,
        amplitude_steps: u32,
    ) -> Result<Self> {
        for (quantity, value) in
            [("noise power", noise.watts()), ("receiver power rating", receiver_max.watts())]
        {
            if value <= 0.0 {
                return Err(Error::InvalidInput {
                    quantity,
                    value,
                    reason: "must be positive",
                });
            }
        }
        for (quantity, value) in
            [("alpha grid count", alpha_steps), ("amplitude grid count", amplitude_steps)]
        {
            if value < 2 {
                return Err(Error::InvalidInput {
                    quantity,
                    value: value as f64,
                    reason: "at least 2 grid steps are required",
                });
            }
        }
        Ok(OptimizerConfig {
            medium,
            geometry,
            pump,
            noise,
            receiver_max,
            alpha_steps,
            amplitude_steps,
        })
    }

    /// The amplifying medium at both cavity ends.
    pub fn medium(&self) -> &GainMedium {
        &self.medium
    }

    /// The beam path between the cavity ends.
    pub fn geometry(&self) -> &BeamGeometry {
        &self.geometry
    }

    /// Pump power driving each gain element, W.
    pub fn pump(&self) -> PowerW {
        self.pump
    }

    /// Receiver noise power, W.
    pub fn noise(&self) -> PowerW {
        self.noise
    }

    /// Largest admissible received peak power, W.
    pub fn receiver_max(&self) -> PowerW {
        self.receiver_max
    }

    /// Grid count for the power split.
    pub fn alpha_steps(&self) -> u32 {
        self.alpha_steps
    }

    /// Grid count for the keying amplitude.
    pub fn amplitude_steps(&self) -> u32 {
        self.amplitude_steps
    }
}

/// The winning operating point of the search.
///
/// A pump at or below the lasing threshold supports no resonant beam and
/// yields the all-zero record.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Optimum {
    /// Capacity upper bound at the winner, bits per channel use.
    pub c_up_star: f64,
    /// Capacity lower bound at the winner, bits per channel use.
    pub c_low_star: f64,
    /// Winning power split.
    pub alpha_star: Ratio,
    /// Winning keying amplitude (the floor of the modulation swing), sqrt(W).
    pub a_hat_star: Amplitude,
    /// Stable modulated amplitude `sqrt(h(a_hat_star))`, sqrt(W).
    pub a_star: Amplitude,
    /// Modulation floor `a_hat_star / a_star`.
    pub mu1_star: Ratio,
    /// Stable circulating power at the winning split, W.
    pub p_t_star: PowerW,
    /// Peak received electrical power at the winner, W.
    pub p_peak_star: PowerW,
}

impl Optimum {
    fn zero() -> Self {
        let zero_amp = Amplitude::new(0.0).expect("zero is a valid amplitude");
        let zero_ratio = Ratio::new(0.0).expect("zero is a valid ratio");
        Optimum {
            c_up_star: 0.0,
            c_low_star: 0.0,
            alpha_star: zero_ratio,
            a_hat_star: zero_amp,
            a_star: zero_amp,
            mu1_star: zero_ratio,
            p_t_star: PowerW::new(0.0).expect("zero is a valid power"),
            p_peak_star: PowerW::new(0.0).expect("zero is a valid power"),
        }
    }

    /// True when the pump could not sustain a resonant beam.
    pub fn is_zero(&self) -> bool {
        self.c_up_star == 0.0 && self.a_hat_star.value() == 0.0
    }
}

/// Scores one `(alpha, a_hat)` cell: its peak received power and the
/// capacity bounds that power supports.
///
/// `p_t` must be the stable circulating power at `alpha` (as produced by
/// the resonance solver); the keying amplitude must satisfy
/// `0 < a_hat <= sqrt(p_t)` and its echo must respect the receiver rating,
/// `h(a_hat) <= receiver_max/(alpha*delta)`. A violated budget is reported
/// as an infeasibility, which the search treats as "skip this cell".
pub fn evaluate_candidate(
    cfg: &OptimizerConfig,
    alpha: Ratio,
    a_hat: Amplitude,
    p_t: PowerW,
) -> Result<(PowerW, CapacityBounds)> {
    let delta = cfg.geometry.link_loss();
    let channel = ChannelPhysics::new(cfg.medium, cfg.pump, alpha.value(), delta.value())?;
    if a_hat.value() == 0.0 || a_hat.value() > p_t.watts().sqrt() * (1.0 + BUDGET_SLACK) {
        return Err(Error::OutOfRange {
            quantity: "keying amplitude",
            value: a_hat.value(),
            lo: 0.0,
            hi: p_t.watts().sqrt(),
        });
    }
    let echo = channel.link_gain(a_hat)?.watts();
    let cap = receiver_cap(cfg, alpha.value(), delta.value());
    if echo > cap * (1.0 + BUDGET_SLACK) {
        return Err(Error::Infeasible {
            reason: format!(
                "echo power h(a_hat) = {echo} W exceeds the receiver budget \
                 P_r_max/(alpha*delta) = {cap} W"
            ),
        });
    }
    if echo > p_t.watts() * (1.0 + STABLE_RESIDUAL_SLACK) {
        return Err(Error::Infeasible {
            reason: format!(
                "echo power h(a_hat) = {echo} W exceeds the stable circulating power {} W",
                p_t.watts()
            ),
        });
    }
    let peak = peak_from_echo(echo, a_hat.value(), alpha.value(), delta.value());
    let bounds = capacity_bounds(peak, cfg.noise)?;
    Ok((peak, bounds))
}

/// Exports the modulation triple the frame simulator consumes: the stable
/// amplitude, the modulation floor, and the stable circulating power.
pub fn modulation_parameters(opt: &Optimum) -> Result<(Amplitude, Ratio, PowerW)> {
    if opt.is_zero() {
        return Err(Error::Infeasible {
            reason: "the all-zero optimum has no modulation scheme \
                     (pump at or below the lasing threshold)"
                .into(),
        });
    }
    Ok((opt.a_star, opt.mu1_star, opt.p_t_star))
}

/// Runs the search with the crate's default execution strategy (parallel
/// over the split grid when the `parallel` feature is enabled).
pub fn optimize(cfg: &OptimizerConfig) -> Result<Optimum> {
    #[cfg(feature = "parallel")]
    {
        optimize_par(cfg)
    }
    #[cfg(not(feature = "parallel"))]
    {
        optimize_seq(cfg)
    }
}

/// Runs the search on the calling thread.
pub fn optimize_seq(cfg: &OptimizerConfig) -> Result<Optimum> {
    let Some(setup) = Setup::prepare(cfg)? else {
        return Ok(Optimum::zero());
    };
    let cells = (1..cfg.alpha_steps)
        .map(|k1| best_cell_for_alpha(cfg, &setup, k1))
        .collect::<Result<Vec<_>>>()?;
    finish(cfg, cells)
}

/// Runs the search with the split grid distributed over the rayon pool.
///
/// Produces bit-identical results to [`optimize_seq`]: the reduction order
/// is fixed by the deterministic cell comparison, not by the schedule.
#[cfg(feature = "parallel")]
pub fn optimize_par(cfg: &OptimizerConfig) -> Result<Optimum> {
    let Some(setup) = Setup::prepare(cfg)? else {
        return Ok(Optimum::zero());
    };
    let cells = (1..cfg.alpha_steps)
        .into_par_iter()
        .map(|k1| best_cell_for_alpha(cfg, &setup, k1))
        .collect::<Result<Vec<_>>>()?;
    finish(cfg, cells)
}

/// Quantities shared by every grid cell.
struct Setup {
    delta: f64,
    alpha_bound: f64,
}

impl Setup {
    /// Computes the link loss and the feasible-split interval; `None` means
    /// the pump cannot sustain a beam and the optimum is the zero record.
    fn prepare(cfg: &OptimizerConfig) -> Result<Option<Self>> {
        let delta = cfg.geometry.link_loss();
        let threshold = threshold_power(&cfg.medium, delta)?;
        if cfg.pump.watts() <= threshold.watts() {
            return Ok(None);
        }
        let alpha_bound = alpha_upper_bound(&cfg.medium, cfg.pump, delta)?;
        if alpha_bound <= 0.0 {
            return Ok(None);
        }
        Ok(Some(Setup { delta: delta.value(), alpha_bound }))
    }
}

/// One scored grid cell. Ordering on `(k1, k2)` backs the deterministic
/// tie-break.
#[derive(Debug, Clone, Copy)]
struct Cell {
    upper_bits: f64,
    peak: f64,
    alpha: f64,
    a_hat: f64,
    echo: f64,
    p_t: f64,
    k1: u32,
    k2: u32,
}

/// True when `b` beats `a`: strictly larger upper bound, or the same bound
/// at an earlier grid cell (lowest split index, then lowest amplitude
/// index). A total order, so any reduction schedule yields the same winner.
fn beats(b: &Cell, a: &Cell) -> bool {
    b.upper_bits > a.upper_bits
        || (b.upper_bits == a.upper_bits && (b.k1, b.k2) < (a.k1, a.k2))
}

fn receiver_cap(cfg: &OptimizerConfig, alpha: f64, delta: f64) -> f64 {
    cfg.receiver_max.watts() / (alpha * delta)
}

/// Peak received electrical power of a cell: the echo amplitude swing
/// `sqrt(h(a_hat)) - a_hat`, clamped at zero against rounding at the
/// fixed-point endpoint, scaled by the receiver tap `alpha*delta/4`.
fn peak_from_echo(echo: f64, a_hat: f64, alpha: f64, delta: f64) -> PowerW {
    let swing = (echo.sqrt() - a_hat).max(0.0);
    PowerW::new(0.25 * swing * swing * alpha * delta).expect("finite swing")
}

/// Scores every amplitude cell at one split grid point and keeps the best.
fn best_cell_for_alpha(cfg: &OptimizerConfig, setup: &Setup, k1: u32) -> Result<Option<Cell>> {
    let alpha = k1 as f64 / cfg.alpha_steps as f64 * setup.alpha_bound;
    let attach = |e: Error| e.in_context(format!("at split alpha = {alpha:e}"));
    let channel =
        ChannelPhysics::new(cfg.medium, cfg.pump, alpha, setup.delta).map_err(attach)?;
    let stable = stable_power(&channel).map_err(attach)?;
    let p_t = stable.power.watts();
    let cap = receiver_cap(cfg, alpha, setup.delta);
    let budget = p_t.min(cap);
    let sqrt_budget = budget.sqrt();

    let mut best: Option<Cell> = None;
    for k2 in 1..cfg.amplitude_steps {
        let a_hat = k2 as f64 / cfg.amplitude_steps as f64 * sqrt_budget;
        let amplitude = Amplitude::new(a_hat).map_err(attach)?;
        let echo = channel
            .link_gain(amplitude)
            .map_err(|e| e.in_context(format!("at alpha = {alpha:e}, a_hat = {a_hat:e}")))?
            .watts();
        if echo > cap * (1.0 + BUDGET_SLACK) {
            continue;
        }
        let peak = peak_from_echo(echo, a_hat, alpha, setup.delta).watts();
        let upper_bits = capacity_upper(
            PowerW::new(peak).expect("peak power is finite"),
            cfg.noise,
        )
        .map_err(attach)?;
        let cell = Cell { upper_bits, peak, alpha, a_hat, echo, p_t, k1, k2 };
        if best.is_none_or(|b| beats(&cell, &b)) {
            best = Some(cell);
        }
    }
    Ok(best)
}

/// Reduces the per-split winners, evaluates the lower bound at the global
/// winner, and assembles the result record.
fn finish(cfg: &OptimizerConfig, cells: Vec<Option<Cell>>) -> Result<Optimum> {
    let mut winner: Option<Cell> = None;
    let mut peak_winner: Option<Cell> = None;
    for cell in cells.into_iter().flatten() {
        if winner.is_none_or(|w| beats(&cell, &w)) {
            winner = Some(cell);
        }
        let peak_beats = |b: &Cell, a: &Cell| {
            b.peak > a.peak || (b.peak == a.peak && (b.k1, b.k2) < (a.k1, a.k2))
        };
        if peak_winner.is_none_or(|w| peak_beats(&cell, &w)) {
            peak_winner = Some(cell);
        }
    }
    let Some(cell) = winner else {
        return Ok(Optimum::zero());
    };
    let peak_cell = peak_winner.expect("peak winner exists whenever a bound winner does");
    assert_eq!(
        (cell.k1, cell.k2),
        (peak_cell.k1, peak_cell.k2),
        "maximizing the upper bound and maximizing peak power must select the same cell"
    );

    let peak = PowerW::new(cell.peak).expect("stored peak is finite");
    let c_low_star = crate::capacity::capacity_lower(peak, cfg.noise)
        .map_err(|e| e.in_context(format!("at winning cell ({}, {})", cell.k1, cell.k2)))?;
    let a_star_value = cell.echo.sqrt();
    Ok(Optimum {
        c_up_star: cell.upper_bits,
        c_low_star,
        alpha_star: Ratio::new(cell.alpha)?,
        a_hat_star: Amplitude::new(cell.a_hat)?,
        a_star: Amplitude::new(a_star_value)?,
        mu1_star: Ratio::new(cell.a_hat / a_star_value)?,
        p_t_star: PowerW::new(cell.p_t)?,
        p_peak_star: peak,
        // The winner sits strictly inside the grid, so a_hat < sqrt(budget)
        // and the swing is strictly positive: mu1_star lands in (0, 1).
    })
}
