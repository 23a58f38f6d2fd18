//! Implementations of the subcommands: each builds its result as CSV text
//! plus a one-line summary, leaving stream/file routing to `main`.
//!
//! Every CSV starts with a `# rbcom <version>` line and a header row whose
//! column names carry units; numeric cells use scientific notation at full
//! precision (the shortest form that parses back to the same double), so a
//! run is reproducible byte for byte apart from the version line.

use rbcom_core::capacity::{capacity_upper, constellation_size, noise_entropy_nats, output_entropy_nats};
use rbcom_core::link::ChannelPhysics;
use rbcom_core::optimizer::{modulation_parameters, optimize, Optimum, OptimizerConfig};
use rbcom_core::resonance::{alpha_upper_bound, stable_power, threshold_power};
use rbcom_core::sim::{empirical_mutual_information, simulate, FrameScheme, RNG_ALGORITHM};
use rbcom_core::units::Ratio;

use crate::config::RunConfig;
use crate::CliError;

const VERSION: &str = env!("CARGO_PKG_VERSION");

/// A finished command: the CSV document and the one-line summary.
pub struct Output {
    pub csv: String,
    pub summary: String,
}

fn header(columns: &str) -> String {
    format!("# rbcom {VERSION}\n{columns}\n")
}

/// One-way diffraction transmittance of the configured geometry.
pub fn link_loss(cfg: &RunConfig) -> Result<Output, CliError> {
    let geometry = cfg.geometry()?;
    let delta = geometry.link_loss().value();
    let db = 10.0 * delta.log10();
    let mut csv = header("L_m,r0_m,phi_rad,lambda_m,delta,delta_dB");
    csv.push_str(&format!(
        "{:e},{:e},{:e},{:e},{:e},{:e}\n",
        cfg.distance, cfg.r0, cfg.phi, cfg.lambda, delta, db
    ));
    Ok(Output {
        csv,
        summary: format!(
            "link loss delta = {delta:e} ({db:.4} dB) over L = {} m at phi = {} rad",
            cfg.distance, cfg.phi
        ),
    })
}

/// Threshold pumping power below which the cavity cannot resonate.
pub fn threshold(cfg: &RunConfig) -> Result<Output, CliError> {
    let medium = cfg.medium()?;
    let delta = cfg.geometry()?.link_loss();
    let pth = threshold_power(&medium, delta)?.watts();
    let mut csv = header("L_m,r0_m,phi_rad,delta,pth_W");
    csv.push_str(&format!(
        "{:e},{:e},{:e},{:e},{:e}\n",
        cfg.distance, cfg.r0, cfg.phi,
        delta.value(),
        pth
    ));
    Ok(Output {
        csv,
        summary: format!(
            "threshold pumping power P_th = {pth:e} W at L = {} m (delta = {:e})",
            cfg.distance,
            delta.value()
        ),
    })
}

/// Stable circulating power at the configured splitting ratio.
pub fn stable(cfg: &RunConfig) -> Result<Output, CliError> {
    let medium = cfg.medium()?;
    let delta = cfg.geometry()?.link_loss();
    let pump = cfg.pump()?;
    let pth = threshold_power(&medium, delta)?.watts();
    let alpha_max = alpha_upper_bound(&medium, pump, delta)?;
    let channel = ChannelPhysics::new(medium, pump, cfg.alpha, delta.value())?;
    let point = stable_power(&channel)?;
    let mut csv = header(
        "alpha,delta,P_in_W,pth_W,alpha_max,bracket_lo_W,bracket_hi_W,pt_W,residual_rel,iterations",
    );
    csv.push_str(&format!(
        "{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{}\n",
        cfg.alpha,
        delta.value(),
        cfg.p_in,
        pth,
        alpha_max,
        point.bracket.0,
        point.bracket.1,
        point.power.watts(),
        point.residual,
        point.iterations
    ));
    Ok(Output {
        csv,
        summary: format!(
            "stable circulating power P_t = {:e} W at alpha = {:e} (P_in = {} W, {} bisection steps)",
            point.power.watts(),
            cfg.alpha,
            cfg.p_in,
            point.iterations
        ),
    })
}

/// Runs the joint grid search and returns the winner with the
/// constellation size its peak power supports (0 for the zero optimum).
fn optimum_for(cfg: &RunConfig) -> Result<(Optimum, u64), CliError> {
    let noise = cfg.noise_power()?;
    let ocfg = OptimizerConfig::new(
        cfg.medium()?,
        cfg.geometry()?,
        cfg.pump()?,
        noise,
        cfg.receiver_max()?,
        cfg.k1,
        cfg.k2,
    )?;
    let opt = optimize(&ocfg)?;
    let m = if opt.is_zero() {
        0
    } else {
        constellation_size(opt.p_peak_star.watts() / noise.watts())?
    };
    Ok((opt, m))
}

const OPTIMUM_COLUMNS: &str = "P_in_W,pth_W,alpha_star,a_hat_star_sqrtW,a_star_sqrtW,\
                               mu1_star,pt_star_W,ppeak_star_W,cup_bits_per_use,\
                               clow_bits_per_use,m_points";

fn optimum_row(cfg: &RunConfig, pth: f64, opt: &Optimum, m: u64) -> String {
    format!(
        "{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{}\n",
        cfg.p_in,
        pth,
        opt.alpha_star.value(),
        opt.a_hat_star.value(),
        opt.a_star.value(),
        opt.mu1_star.value(),
        opt.p_t_star.watts(),
        opt.p_peak_star.watts(),
        opt.c_up_star,
        opt.c_low_star,
        m
    )
}

/// Joint grid search over splitting ratio and keying amplitude.
pub fn optimize_cmd(cfg: &RunConfig) -> Result<Output, CliError> {
    let pth = threshold_power(&cfg.medium()?, cfg.geometry()?.link_loss())?.watts();
    let (opt, m) = optimum_for(cfg)?;
    let mut csv = header(OPTIMUM_COLUMNS);
    csv.push_str(&optimum_row(cfg, pth, &opt, m));
    let summary = if opt.is_zero() {
        format!(
            "pump P_in = {} W is at or below the threshold {pth:e} W: optimum is zero",
            cfg.p_in
        )
    } else {
        format!(
            "optimum C_up = {:e} bits/use at alpha* = {:e}, P_peak* = {:e} W \
             (P_in = {} W, K1 = {}, K2 = {})",
            opt.c_up_star,
            opt.alpha_star.value(),
            opt.p_peak_star.watts(),
            cfg.p_in,
            cfg.k1,
            cfg.k2
        )
    };
    Ok(Output { csv, summary })
}

/// The variable a sweep ranges over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum SweepVar {
    /// Transmitter-receiver distance L, m.
    #[value(name = "L")]
    Distance,
    /// Pumping power P_in, W.
    #[value(name = "P_in")]
    Pump,
    /// Beam divergence half-angle phi, rad.
    #[value(name = "phi")]
    Phi,
    /// Gain-medium and receiver radius r0, m.
    #[value(name = "r0")]
    R0,
}

impl SweepVar {
    fn column(self) -> &'static str {
        match self {
            SweepVar::Distance => "L_m",
            SweepVar::Pump => "P_in_W",
            SweepVar::Phi => "phi_rad",
            SweepVar::R0 => "r0_m",
        }
    }

    fn apply(self, cfg: &mut RunConfig, value: f64) {
        match self {
            SweepVar::Distance => cfg.distance = value,
            SweepVar::Pump => cfg.p_in = value,
            SweepVar::Phi => cfg.phi = value,
            SweepVar::R0 => cfg.r0 = value,
        }
    }
}

/// A quantity a sweep can emit per grid point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum EmitToken {
    Delta,
    Pth,
    AlphaMax,
    AlphaStar,
    Ppeak,
    Cup,
    Clow,
    Ahat,
    Astar,
    Mu1,
    Pt,
}

impl EmitToken {
    fn parse(token: &str) -> Result<Self, CliError> {
        Ok(match token {
            "delta" => EmitToken::Delta,
            "pth" => EmitToken::Pth,
            "u" => EmitToken::AlphaMax,
            "alpha" => EmitToken::AlphaStar,
            "ppeak" => EmitToken::Ppeak,
            "cup" => EmitToken::Cup,
            "clow" => EmitToken::Clow,
            "ahat" => EmitToken::Ahat,
            "astar" => EmitToken::Astar,
            "mu1" => EmitToken::Mu1,
            "pt" => EmitToken::Pt,
            other => {
                return Err(CliError::Config(format!(
                    "unknown emit token `{other}` (known: delta, pth, u, alpha, ppeak, cup, \
                     clow, ahat, astar, mu1, pt)"
                )))
            }
        })
    }

    fn column(self) -> &'static str {
        match self {
            EmitToken::Delta => "delta",
            EmitToken::Pth => "pth_W",
            EmitToken::AlphaMax => "alpha_max",
            EmitToken::AlphaStar => "alpha_star",
            EmitToken::Ppeak => "ppeak_star_W",
            EmitToken::Cup => "cup_bits_per_use",
            EmitToken::Clow => "clow_bits_per_use",
            EmitToken::Ahat => "a_hat_star_sqrtW",
            EmitToken::Astar => "a_star_sqrtW",
            EmitToken::Mu1 => "mu1_star",
            EmitToken::Pt => "pt_star_W",
        }
    }

    /// True when the token requires running the joint search at the point.
    fn needs_optimizer(self) -> bool {
        !matches!(self, EmitToken::Delta | EmitToken::Pth | EmitToken::AlphaMax)
    }
}

fn parse_emit(emit: &str) -> Result<Vec<EmitToken>, CliError> {
    let tokens: Vec<EmitToken> = emit
        .split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(EmitToken::parse)
        .collect::<Result<_, _>>()?;
    if tokens.is_empty() {
        return Err(CliError::Config("--emit lists no quantities".into()));
    }
    Ok(tokens)
}

/// The sweep grid: `count` points from `from` to `to`, linear or
/// geometric.
fn grid(from: f64, to: f64, count: u32, log: bool) -> Result<Vec<f64>, CliError> {
    if count < 2 {
        return Err(CliError::Config(format!("--count {count} must be at least 2")));
    }
    if !(from.is_finite() && to.is_finite() && from < to) {
        return Err(CliError::Config(format!(
            "sweep bounds must satisfy from < to, got [{from}, {to}]"
        )));
    }
    if log && from <= 0.0 {
        return Err(CliError::Config(format!(
            "a geometric grid needs positive bounds, got from = {from}"
        )));
    }
    let n = count as usize;
    Ok((0..n)
        .map(|i| {
            let t = i as f64 / (n - 1) as f64;
            if log {
                from * (to / from).powf(t)
            } else {
                from + (to - from) * t
            }
        })
        .collect())
}

/// Sweeps one variable, emitting the selected quantities per grid point.
pub fn sweep(
    cfg: &RunConfig,
    var: SweepVar,
    from: f64,
    to: f64,
    count: u32,
    log: bool,
    emit: &str,
) -> Result<Output, CliError> {
    let tokens = parse_emit(emit)?;
    let points = grid(from, to, count, log)?;
    let needs_opt = tokens.iter().any(|t| t.needs_optimizer());

    let mut columns = var.column().to_string();
    for t in &tokens {
        columns.push(',');
        columns.push_str(t.column());
    }
    let mut csv = header(&columns);

    for &value in &points {
        let mut point_cfg = cfg.clone();
        var.apply(&mut point_cfg, value);
        let attach = |e: CliError| match e {
            CliError::Config(msg) => {
                CliError::Config(format!("at {} = {value:e}: {msg}", var.column()))
            }
            CliError::Numerical(e) => {
                CliError::Numerical(e.in_context(format!("at {} = {value:e}", var.column())))
            }
            other => other,
        };
        let medium = point_cfg.medium().map_err(attach)?;
        let delta = point_cfg.geometry().map_err(attach)?.link_loss();
        let pump = point_cfg.pump().map_err(attach)?;
        let optimum = if needs_opt {
            Some(optimum_for(&point_cfg).map_err(attach)?)
        } else {
            None
        };
        csv.push_str(&format!("{value:e}"));
        for t in &tokens {
            let cell = match t {
                EmitToken::Delta => delta.value(),
                EmitToken::Pth => {
                    threshold_power(&medium, delta).map_err(CliError::from).map_err(attach)?.watts()
                }
                EmitToken::AlphaMax => {
                    alpha_upper_bound(&medium, pump, delta).map_err(CliError::from).map_err(attach)?
                }
                opt_token => {
                    let (opt, _) = optimum.as_ref().expect("optimizer tokens force a search");
                    match opt_token {
                        EmitToken::AlphaStar => opt.alpha_star.value(),
                        EmitToken::Ppeak => opt.p_peak_star.watts(),
                        EmitToken::Cup => opt.c_up_star,
                        EmitToken::Clow => opt.c_low_star,
                        EmitToken::Ahat => opt.a_hat_star.value(),
                        EmitToken::Astar => opt.a_star.value(),
                        EmitToken::Mu1 => opt.mu1_star.value(),
                        EmitToken::Pt => opt.p_t_star.watts(),
                        _ => unreachable!("cheap tokens handled above"),
                    }
                }
            };
            csv.push_str(&format!(",{cell:e}"));
        }
        csv.push('\n');
    }

    let spacing = if log { "geometric" } else { "linear" };
    let mut summary = format!(
        "swept {} over [{from}, {to}] at {count} {spacing} points (emit: {emit})",
        var.column()
    );
    if needs_opt {
        summary.push_str(&format!("; search grid K1 = {}, K2 = {}", cfg.k1, cfg.k2));
    }
    Ok(Output { csv, summary })
}

/// Builds the modulation scheme and channel at the configured optimum.
fn scheme_at_optimum(
    cfg: &RunConfig,
) -> Result<(FrameScheme, ChannelPhysics, Optimum, Ratio), CliError> {
    let (opt, m_derived) = optimum_for(cfg)?;
    let m = if cfg.m_points > 0 { cfg.m_points } else { m_derived };
    let (a, mu1, p_t) = modulation_parameters(&opt)?;
    let scheme = FrameScheme::new(a, mu1, p_t, cfg.slots, m)?;
    let delta = cfg.geometry()?.link_loss();
    let channel =
        ChannelPhysics::new(cfg.medium()?, cfg.pump()?, opt.alpha_star.value(), delta.value())?;
    Ok((scheme, channel, opt, delta))
}

/// Frame-level Monte-Carlo run of the compensated echo channel.
pub fn simulate_cmd(cfg: &RunConfig) -> Result<Output, CliError> {
    let (scheme, channel, opt, delta) = scheme_at_optimum(cfg)?;
    let noise = cfg.noise_power()?;
    let trace =
        simulate(&scheme, &channel, opt.alpha_star, delta, noise, cfg.frames, cfg.seed)?;

    let mut csv = format!(
        "# rbcom {VERSION}\n\
         # rng = {RNG_ALGORITHM}, seed = {}\n\
         # scheme: A_sqrtW = {:e}, mu1 = {:e}, M = {}, pt_W = {:e}, alpha = {:e}, \
         delta = {:e}, sigma2_W = {:e}\n\
         # units: s 1, m 1, x sqrt(W), y sqrt(W)\n",
        cfg.seed,
        scheme.a().value(),
        scheme.mu1().value(),
        scheme.constellation_points(),
        scheme.p_t().watts(),
        opt.alpha_star.value(),
        delta.value(),
        noise.watts()
    );
    let mut body = Vec::new();
    trace.to_csv(&mut body)?;
    csv.push_str(std::str::from_utf8(&body).expect("trace CSV is ASCII"));

    let a = scheme.a().value();
    let worst = trace
        .s()
        .iter()
        .zip(trace.x())
        .map(|(s, x)| (x - a * s).abs() / a)
        .fold(0.0, f64::max);
    Ok(Output {
        csv,
        summary: format!(
            "simulated {} frames x {} slots (seed {}, {RNG_ALGORITHM}): \
             max |x - A s|/A = {worst:e}",
            cfg.frames, cfg.slots, cfg.seed
        ),
    })
}

/// Empirical mutual information of a simulated trace against the capacity
/// bounds and the quadrature value at the same constellation.
pub fn mi_check(cfg: &RunConfig) -> Result<Output, CliError> {
    let (scheme, channel, opt, delta) = scheme_at_optimum(cfg)?;
    let noise = cfg.noise_power()?;
    let trace =
        simulate(&scheme, &channel, opt.alpha_star, delta, noise, cfg.frames, cfg.seed)?;
    let mi = empirical_mutual_information(&trace, &scheme, opt.alpha_star, delta, noise)?;
    let quadrature = (output_entropy_nats(scheme.constellation_points(), opt.p_peak_star, noise)?
        - noise_entropy_nats(noise)?)
        / std::f64::consts::LN_2;
    let cup = capacity_upper(opt.p_peak_star, noise)?;

    let mut csv = header(
        "frames,samples,m_points,sigma2_W,mi_bits_per_use,mi_quadrature_bits_per_use,\
         cup_bits_per_use,clow_bits_per_use",
    );
    csv.push_str(&format!(
        "{},{},{},{:e},{:e},{:e},{:e},{:e}\n",
        cfg.frames,
        trace.len(),
        scheme.constellation_points(),
        noise.watts(),
        mi,
        quadrature,
        cup,
        opt.c_low_star
    ));
    Ok(Output {
        csv,
        summary: format!(
            "empirical MI = {mi:e} bits/use over {} samples \
             (quadrature {quadrature:e}, bounds [{:e}, {cup:e}])",
            trace.len(),
            opt.c_low_star
        ),
    })
}
