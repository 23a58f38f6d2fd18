//! Validated scalar quantities used throughout the crate.
//!
//! Every physical scalar is wrapped in a newtype that rejects NaN,
//! infinities and negative magnitudes at construction, so the numerical
//! modules can assume well-formed inputs. Amplitudes are measured in
//! sqrt-watts: the square of a beam amplitude is a beam power.

use crate::error::{Error, Result};

// ---------------------------------------------------------------------------
// Newtypes
// ---------------------------------------------------------------------------

/// A non-negative power in watts.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct PowerW(f64);

impl PowerW {
    /// Wraps a power value, rejecting NaN, infinities and negatives.
    pub fn new(watts: f64) -> Result<Self> {
        check_non_negative("power [W]", watts)?;
        Ok(PowerW(watts))
    }

    /// The raw value in watts.
    pub fn watts(self) -> f64 {
        self.0
    }
}

/// A non-negative beam amplitude in sqrt-watts.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Amplitude(f64);

impl Amplitude {
    /// Wraps an amplitude value, rejecting NaN, infinities and negatives.
    pub fn new(sqrt_watts: f64) -> Result<Self> {
        check_non_negative("amplitude [sqrt(W)]", sqrt_watts)?;
        Ok(Amplitude(sqrt_watts))
    }

    /// The raw value in sqrt-watts.
    pub fn value(self) -> f64 {
        self.0
    }

    /// The carried power `x^2` in watts.
    pub fn to_power(self) -> PowerW {
        PowerW(self.0 * self.0)
    }
}

/// A non-negative optical intensity in watts per square metre.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct IntensityWm2(f64);

impl IntensityWm2 {
    /// Wraps an intensity value, rejecting NaN, infinities and negatives.
    pub fn new(w_per_m2: f64) -> Result<Self> {
        check_non_negative("intensity [W/m^2]", w_per_m2)?;
        Ok(IntensityWm2(w_per_m2))
    }

    /// The raw value in W/m^2.
    pub fn value(self) -> f64 {
        self.0
    }
}

/// A dimensionless ratio confined to [0, 1].
///
/// Used for the link loss, the splitting ratio, the conversion efficiency,
/// modulation symbols and normalized amplitudes.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Ratio(f64);

impl Ratio {
    /// Wraps a ratio, rejecting NaN and anything outside [0, 1].
    pub fn new(value: f64) -> Result<Self> {
        check_non_negative("ratio", value)?;
        if value > 1.0 {
            return Err(Error::InvalidInput {
                quantity: "ratio",
                value,
                reason: "must not exceed 1",
            });
        }
        Ok(Ratio(value))
    }

    /// The raw dimensionless value.
    pub fn value(self) -> f64 {
        self.0
    }
}

fn check_non_negative(quantity: &'static str, value: f64) -> Result<()> {
    if !value.is_finite() {
        return Err(Error::InvalidInput { quantity, value, reason: "must be finite" });
    }
    if value < 0.0 {
        return Err(Error::InvalidInput { quantity, value, reason: "must be non-negative" });
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// dBm conversions
// ---------------------------------------------------------------------------

/// Converts a power level in dBm to watts: `P = 10^((dbm - 30)/10)`.
pub fn dbm_to_watts(dbm: f64) -> Result<PowerW> {
    if !dbm.is_finite() {
        return Err(Error::InvalidInput {
            quantity: "power level [dBm]",
            value: dbm,
            reason: "must be finite",
        });
    }
    PowerW::new(10f64.powf((dbm - 30.0) / 10.0))
}

/// Converts a strictly positive power in watts to dBm: `10 log10(P) + 30`.
pub fn watts_to_dbm(power: PowerW) -> Result<f64> {
    if power.watts() <= 0.0 {
        return Err(Error::InvalidInput {
            quantity: "power [W]",
            value: power.watts(),
            reason: "must be strictly positive for a dBm level",
        });
    }
    Ok(10.0 * power.watts().log10() + 30.0)
}
