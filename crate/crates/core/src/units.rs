//! Unit-carrying newtypes and physical constants.
//!
//! Frequencies are stored in GHz everywhere. The only place that converts
//! to Hz is [`crate::pathloss::fspl_1m`].

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Band over which the catalog parameters are stated to hold, GHz.
pub const CATALOG_BAND_GHZ: (f64, f64) = (0.5, 100.0);

#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Frequency(f64);

impl Frequency {
    pub fn from_ghz(ghz: f64) -> Result<Self> {
        if ghz.is_finite() && ghz > 0.0 {
            Ok(Frequency(ghz))
        } else {
            Err(Error::invalid(format!("frequency must be positive and finite, got {ghz} GHz")))
        }
    }

    pub fn ghz(self) -> f64 {
        self.0
    }

    pub fn hz(self) -> f64 {
        self.0 * 1e9
    }

    pub fn in_catalog_band(self) -> bool {
        self.0 >= CATALOG_BAND_GHZ.0 && self.0 <= CATALOG_BAND_GHZ.1
    }

    /// A warning when the frequency lies outside the band the catalog covers.
    /// Evaluation still proceeds; the formulas are defined for any f > 0.
    pub fn band_warning(self) -> Option<Warning> {
        if self.in_catalog_band() {
            None
        } else {
            Some(Warning::FrequencyOutOfBand { ghz: self.0 })
        }
    }
}

impl TryFrom<f64> for Frequency {
    type Error = Error;
    fn try_from(v: f64) -> Result<Self> {
        Frequency::from_ghz(v)
    }
}

impl From<Frequency> for f64 {
    fn from(f: Frequency) -> f64 {
        f.0
    }
}

impl fmt::Display for Frequency {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} GHz", self.0)
    }
}

/// Horizontal (2D) distance in meters, strictly positive.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Distance2D(f64);

impl Distance2D {
    pub fn from_m(m: f64) -> Result<Self> {
        if m.is_finite() && m > 0.0 {
            Ok(Distance2D(m))
        } else {
            Err(Error::invalid(format!("distance must be positive and finite, got {m} m")))
        }
    }

    pub fn m(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for Distance2D {
    type Error = Error;
    fn try_from(v: f64) -> Result<Self> {
        Distance2D::from_m(v)
    }
}

impl From<Distance2D> for f64 {
    fn from(d: Distance2D) -> f64 {
        d.0
    }
}

impl fmt::Display for Distance2D {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} m", self.0)
    }
}

/// Non-fatal diagnostics attached to results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Warning {
    FrequencyOutOfBand { ghz: f64 },
    /// CIF fit on single-frequency data; the slope b is fixed at zero.
    CifSingleFrequency { ghz: f64 },
    /// LOS-probability fit on data with no variation (all LOS or all NLOS).
    DegenerateLosData { los_fraction: f64 },
}

impl fmt::Display for Warning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Warning::FrequencyOutOfBand { ghz } => write!(
                f,
                "frequency {ghz} GHz is outside the {}-{} GHz band covered by the catalog",
                CATALOG_BAND_GHZ.0, CATALOG_BAND_GHZ.1
            ),
            Warning::CifSingleFrequency { ghz } => {
                write!(f, "all samples at {ghz} GHz: CIF reduces to CI (b = 0)")
            }
            Warning::DegenerateLosData { los_fraction } => {
                write!(f, "LOS data has no variation (LOS fraction {los_fraction}); fit is degenerate")
            }
        }
    }
}
