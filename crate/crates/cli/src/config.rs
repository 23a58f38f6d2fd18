//! Run configuration: physical parameters, grid sizes, and simulation
//! controls, assembled from defaults, an optional flat key-value file, and
//! command-line flag overrides (flags win).
//!
//! The file format is one `key = value` per line with `#` comments and
//! blank lines allowed. Unknown keys are rejected so typos cannot silently
//! fall back to defaults. All quantities are SI except the two receiver
//! figures quoted in dBm, matching how the hardware is specified.

use rbcom_core::beam::BeamGeometry;
use rbcom_core::gain::GainMedium;
use rbcom_core::units::{dbm_to_watts, PowerW};

use crate::CliError;

/// Complete run configuration after defaults, file, and flags are merged.
#[derive(Debug, Clone)]
pub struct RunConfig {
    /// Beam wavelength, m.
    pub lambda: f64,
    /// External divergence half-angle of the beam, rad.
    pub phi: f64,
    /// Transmitter-receiver distance, m.
    pub distance: f64,
    /// Gain-medium (and receiver aperture) radius, m.
    pub r0: f64,
    /// Saturation intensity of the gain medium, W/m².
    pub i_s: f64,
    /// Pumping efficiency, dimensionless.
    pub eta: f64,
    /// Pumping power, W.
    pub p_in: f64,
    /// Channel bandwidth, Hz.
    pub bandwidth: f64,
    /// Noise power spectral density, dBm/Hz.
    pub n_0_dbm_hz: f64,
    /// Photodetector power rating, dBm.
    pub p_r_max_dbm: f64,
    /// Power splitting ratio for the single-point commands, dimensionless.
    pub alpha: f64,
    /// Grid steps over the splitting ratio in the joint search.
    pub k1: u32,
    /// Grid steps over the keying amplitude in the joint search.
    pub k2: u32,
    /// Seed of the simulation generator.
    pub seed: u64,
    /// Frames per simulation run.
    pub frames: u64,
    /// Data slots per frame.
    pub slots: u32,
    /// Constellation size override for simulations; 0 derives it from the
    /// optimized peak power and the noise floor.
    pub m_points: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            lambda: 1064e-9,
            phi: 0.3e-3,
            distance: 15.0,
            r0: 3e-3,
            i_s: 1.2e7,
            eta: 0.7,
            p_in: 200.0,
            bandwidth: 1e9,
            n_0_dbm_hz: -174.0,
            p_r_max_dbm: 10.0,
            alpha: 0.01,
            k1: 1000,
            k2: 1000,
            seed: 42,
            frames: 10_000,
            slots: 1,
            m_points: 0,
        }
    }
}

impl RunConfig {
    /// Applies the `key = value` lines of a config file on top of `self`.
    pub fn apply_file(&mut self, path: &str) -> Result<(), CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {path}: {e}")))?;
        self.apply_text(&text)
    }

    /// Parses flat `key = value` text (comments and blank lines allowed).
    pub fn apply_text(&mut self, text: &str) -> Result<(), CliError> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::Config(format!("config line {}: expected `key = value`, got `{raw}`", lineno + 1))
            })?;
            self.set(key.trim(), value.trim()).map_err(|e| match e {
                CliError::Config(msg) => CliError::Config(format!("config line {}: {msg}", lineno + 1)),
                other => other,
            })?;
        }
        Ok(())
    }

    /// Sets one configuration key from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        fn num(key: &str, value: &str) -> Result<f64, CliError> {
            value.parse().map_err(|_| {
                CliError::Config(format!("key `{key}`: `{value}` is not a number"))
            })
        }
        fn int(key: &str, value: &str) -> Result<u64, CliError> {
            value.parse().map_err(|_| {
                CliError::Config(format!("key `{key}`: `{value}` is not a non-negative integer"))
            })
        }
        match key {
            "lambda" => self.lambda = num(key, value)?,
            "phi" => self.phi = num(key, value)?,
            "L" => self.distance = num(key, value)?,
            "r0" => self.r0 = num(key, value)?,
            "I_s" => self.i_s = num(key, value)?,
            "eta" => self.eta = num(key, value)?,
            "P_in" => self.p_in = num(key, value)?,
            "B" => self.bandwidth = num(key, value)?,
            "N_0" => self.n_0_dbm_hz = num(key, value)?,
            "P_r_max" => self.p_r_max_dbm = num(key, value)?,
            "alpha" => self.alpha = num(key, value)?,
            "K1" => self.k1 = int(key, value)? as u32,
            "K2" => self.k2 = int(key, value)? as u32,
            "seed" => self.seed = int(key, value)?,
            "frames" => self.frames = int(key, value)?,
            "slots" => self.slots = int(key, value)? as u32,
            "m_points" => self.m_points = int(key, value)?,
            other => {
                return Err(CliError::Config(format!(
                    "unknown config key `{other}` (known keys: lambda, phi, L, r0, I_s, eta, \
                     P_in, B, N_0, P_r_max, alpha, K1, K2, seed, frames, slots, m_points)"
                )))
            }
        }
        Ok(())
    }

    /// The gain medium described by this configuration.
    pub fn medium(&self) -> Result<GainMedium, CliError> {
        GainMedium::new(self.i_s, self.eta, self.r0).map_err(CliError::from)
    }

    /// The beam geometry described by this configuration; the receiving
    /// surface always matches the gain-medium cross-section.
    pub fn geometry(&self) -> Result<BeamGeometry, CliError> {
        let area = std::f64::consts::PI * self.r0 * self.r0;
        BeamGeometry::new(self.lambda, self.phi, self.distance, area).map_err(CliError::from)
    }

    /// Pumping power as a typed quantity.
    pub fn pump(&self) -> Result<PowerW, CliError> {
        PowerW::new(self.p_in).map_err(CliError::from)
    }

    /// Noise power `sigma² = N_0·B` in W, derived — never set directly —
    /// so the (N_0, B, sigma²) triple cannot be inconsistent.
    pub fn noise_power(&self) -> Result<PowerW, CliError> {
        let density = dbm_to_watts(self.n_0_dbm_hz)?;
        if !(self.bandwidth > 0.0 && self.bandwidth.is_finite()) {
            return Err(CliError::Config(format!(
                "bandwidth B = {} Hz must be positive and finite",
                self.bandwidth
            )));
        }
        PowerW::new(density.watts() * self.bandwidth).map_err(CliError::from)
    }

    /// Photodetector power rating in W.
    pub fn receiver_max(&self) -> Result<PowerW, CliError> {
        dbm_to_watts(self.p_r_max_dbm).map_err(CliError::from)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_describe_the_reference_configuration() {
        let cfg = RunConfig::default();
        assert_eq!(cfg.lambda, 1064e-9);
        assert_eq!(cfg.p_in, 200.0);
        let sigma2 = cfg.noise_power().unwrap().watts();
        assert!(
            (sigma2 / 3.9810717055349695e-12 - 1.0).abs() < 1e-13,
            "sigma² = N_0·B = -84 dBm: got {sigma2:e}"
        );
        assert!((cfg.receiver_max().unwrap().watts() - 0.01).abs() < 1e-18);
        let delta = cfg.geometry().unwrap().link_loss().value();
        assert!((delta - 0.5666702210375807).abs() < 1e-15, "default link loss {delta}");
    }

    #[test]
    fn file_text_overrides_and_comments_parse() {
        let mut cfg = RunConfig::default();
        cfg.apply_text("# comment\n\nr0 = 5e-3  # inline comment\nP_in=150\nseed = 7\n")
            .unwrap();
        assert_eq!(cfg.r0, 5e-3);
        assert_eq!(cfg.p_in, 150.0);
        assert_eq!(cfg.seed, 7);
        let area = cfg.geometry().unwrap().receiver_area();
        assert!((area - 7.853981633974483e-5).abs() < 1e-18, "S_0 = pi r0²: {area:e}");
    }

    #[test]
    fn unknown_keys_and_malformed_lines_are_rejected() {
        let mut cfg = RunConfig::default();
        let err = cfg.apply_text("bogus = 3\n").unwrap_err();
        assert!(err.to_string().contains("bogus"), "message must name the key: {err}");
        assert!(cfg.apply_text("lambda 1064e-9\n").is_err(), "missing equals sign");
        assert!(cfg.apply_text("eta = fast\n").is_err(), "non-numeric value");
    }

    #[test]
    fn invalid_physics_surfaces_as_config_errors() {
        let mut cfg = RunConfig::default();
        cfg.apply_text("eta = -0.5\n").unwrap();
        let err = cfg.medium().unwrap_err();
        assert_eq!(err.exit_code(), 1, "domain violations are config errors: {err}");
    }
}
