//! Multi-frequency path-loss models: close-in free-space reference (CI),
//! CI with frequency-weighted exponent (CIF), and alpha-beta-gamma (ABG).
//!
//! All functions return the mean path loss in dB; shadow fading is added by
//! the drop simulator.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units::{Distance2D, Frequency, SPEED_OF_LIGHT};

/// Smallest distance accepted by the ABG model, which has no close-in anchor.
pub const ABG_MIN_DISTANCE_M: f64 = 0.01;

/// Free-space path loss at 1 m, 20·log10(4π f / c) with f in Hz.
pub fn fspl_1m(f: Frequency) -> f64 {
    20.0 * (4.0 * PI * f.hz() / SPEED_OF_LIGHT).log10()
}

/// Offset of the ABG model that makes it coincide with CI when alpha = n and gamma = 2.
pub fn fspl_1m_at_1ghz() -> f64 {
    20.0 * (4.0 * PI * 1e9 / SPEED_OF_LIGHT).log10()
}

fn anchored_log_distance(d: Distance2D) -> Result<f64> {
    if d.m() < 1.0 {
        return Err(Error::invalid(format!(
            "distance {} m is below the 1 m close-in reference",
            d.m()
        )));
    }
    Ok(d.m().log10())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CiModel {
    /// Path loss exponent.
    pub n: f64,
}

impl CiModel {
    pub fn new(n: f64) -> Result<Self> {
        if n.is_finite() && n > 0.0 {
            Ok(CiModel { n })
        } else {
            Err(Error::invalid(format!("path loss exponent must be positive, got {n}")))
        }
    }

    pub fn eval(&self, f: Frequency, d: Distance2D) -> Result<f64> {
        ci_pl(self, f, d)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CifModel {
    pub n: f64,
    /// Linear slope of the exponent around `f0_ghz`.
    pub b: f64,
    pub f0_ghz: f64,
}

impl CifModel {
    pub fn new(n: f64, b: f64, f0: Frequency) -> Result<Self> {
        if !(n.is_finite() && n > 0.0) {
            return Err(Error::invalid(format!("path loss exponent must be positive, got {n}")));
        }
        if !b.is_finite() {
            return Err(Error::invalid("CIF slope b must be finite"));
        }
        Ok(CifModel { n, b, f0_ghz: f0.ghz() })
    }

    pub fn eval(&self, f: Frequency, d: Distance2D) -> Result<f64> {
        cif_pl(self, f, d)
    }

    /// Effective exponent at frequency `f`.
    pub fn exponent_at(&self, f: Frequency) -> f64 {
        self.n * (1.0 + self.b * (f.ghz() - self.f0_ghz) / self.f0_ghz)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AbgModel {
    pub alpha: f64,
    /// Floating offset, dB.
    pub beta: f64,
    pub gamma: f64,
}

impl AbgModel {
    pub fn new(alpha: f64, beta: f64, gamma: f64) -> Result<Self> {
        if [alpha, beta, gamma].iter().all(|v| v.is_finite()) {
            Ok(AbgModel { alpha, beta, gamma })
        } else {
            Err(Error::invalid("ABG parameters must be finite"))
        }
    }

    pub fn eval(&self, f: Frequency, d: Distance2D) -> Result<f64> {
        abg_pl(self, f, d)
    }
}

pub fn ci_pl(m: &CiModel, f: Frequency, d: Distance2D) -> Result<f64> {
    let log_d = anchored_log_distance(d)?;
    Ok(fspl_1m(f) + 10.0 * m.n * log_d)
}

pub fn cif_pl(m: &CifModel, f: Frequency, d: Distance2D) -> Result<f64> {
    if !(m.f0_ghz.is_finite() && m.f0_ghz > 0.0) {
        return Err(Error::invalid(format!("CIF reference frequency must be positive, got {}", m.f0_ghz)));
    }
    let log_d = anchored_log_distance(d)?;
    Ok(fspl_1m(f) + 10.0 * m.exponent_at(f) * log_d)
}

pub fn abg_pl(m: &AbgModel, f: Frequency, d: Distance2D) -> Result<f64> {
    if d.m() < ABG_MIN_DISTANCE_M {
        return Err(Error::invalid(format!(
            "distance {} m is below the ABG evaluation floor of {ABG_MIN_DISTANCE_M} m",
            d.m()
        )));
    }
    Ok(10.0 * m.alpha * d.m().log10() + m.beta + 10.0 * m.gamma * f.ghz().log10())
}

/// Weighted centroid of the modeled frequencies: Σ f_k N_k / Σ N_k.
///
/// Counts may be fractional so that per-sample weights pool the same way.
pub fn centroid_frequency(points: &[(Frequency, f64)]) -> Result<Frequency> {
    if points.is_empty() {
        return Err(Error::invalid("centroid frequency of an empty set"));
    }
    let mut num = 0.0;
    let mut den = 0.0;
    for &(f, count) in points {
        if !(count.is_finite() && count > 0.0) {
            return Err(Error::invalid(format!("frequency count must be positive, got {count}")));
        }
        num += f.ghz() * count;
        den += count;
    }
    Frequency::from_ghz(num / den)
}

/// Path-loss model selector with its parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "lowercase")]
pub enum PathLossModel {
    Ci(CiModel),
    Cif(CifModel),
    Abg(AbgModel),
}

impl PathLossModel {
    pub fn eval(&self, f: Frequency, d: Distance2D) -> Result<f64> {
        match self {
            PathLossModel::Ci(m) => ci_pl(m, f, d),
            PathLossModel::Cif(m) => cif_pl(m, f, d),
            PathLossModel::Abg(m) => abg_pl(m, f, d),
        }
    }
}
