//! Outdoor-to-indoor loss.
//!
//! The facade loss is the parabolic fit 10·log10(A + B·f²) with f in GHz.
//! Two add-ons are not fitted models but configurable surcharges:
//!
//! - oblique incidence: `incidence_surcharge_max_db · (1 − cos θ)`, zero at
//!   normal incidence and reaching the maximum at grazing. Only the magnitude
//!   (up to 15-20 dB) is measured; the cosine shape is this crate's choice.
//! - indoor depth: a constant dB/m rate, frequency independent, within the
//!   observed 0.2-2 dB/m range.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units::Frequency;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BplClass {
    LowLoss,
    HighLoss,
}

impl BplClass {
    /// (A, B) coefficients.
    pub fn coefficients(self) -> (f64, f64) {
        match self {
            BplClass::LowLoss => (5.0, 0.03),
            BplClass::HighLoss => (10.0, 5.0),
        }
    }
}

pub const DEPTH_LOSS_RANGE_DB_PER_M: (f64, f64) = (0.2, 2.0);
pub const INCIDENCE_SURCHARGE_RANGE_DB: (f64, f64) = (0.0, 20.0);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct O2iConfig {
    pub incidence_surcharge_max_db: f64,
    pub depth_loss_db_per_m: f64,
}

impl Default for O2iConfig {
    fn default() -> Self {
        O2iConfig { incidence_surcharge_max_db: 20.0, depth_loss_db_per_m: 0.5 }
    }
}

impl O2iConfig {
    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = DEPTH_LOSS_RANGE_DB_PER_M;
        if !(lo..=hi).contains(&self.depth_loss_db_per_m) {
            return Err(Error::config(format!(
                "depth_loss_db_per_m must be within [{lo}, {hi}], got {}",
                self.depth_loss_db_per_m
            )));
        }
        let (lo, hi) = INCIDENCE_SURCHARGE_RANGE_DB;
        if !(lo..=hi).contains(&self.incidence_surcharge_max_db) {
            return Err(Error::config(format!(
                "incidence_surcharge_max_db must be within [{lo}, {hi}], got {}",
                self.incidence_surcharge_max_db
            )));
        }
        Ok(())
    }
}

/// Building penetration loss through the external facade at normal incidence, dB.
pub fn bpl(class: BplClass, f: Frequency) -> f64 {
    let (a, b) = class.coefficients();
    let f = f.ghz();
    10.0 * (a + b * f * f).log10()
}

/// Facade loss plus incidence surcharge plus indoor depth loss, dB.
pub fn o2i_loss(
    class: BplClass,
    f: Frequency,
    depth_m: f64,
    incidence_deg: f64,
    cfg: &O2iConfig,
) -> Result<f64> {
    cfg.validate()?;
    if !(depth_m.is_finite() && depth_m >= 0.0) {
        return Err(Error::invalid(format!("indoor depth must be non-negative, got {depth_m} m")));
    }
    if !(incidence_deg.is_finite() && (0.0..90.0).contains(&incidence_deg)) {
        return Err(Error::invalid(format!(
            "incidence angle must be in [0, 90) degrees, got {incidence_deg}"
        )));
    }
    let surcharge = cfg.incidence_surcharge_max_db * (1.0 - incidence_deg.to_radians().cos());
    Ok(bpl(class, f) + surcharge + cfg.depth_loss_db_per_m * depth_m)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ghz(v: f64) -> Frequency {
        Frequency::from_ghz(v).unwrap()
    }

    #[test]
    fn bpl_golden() {
        assert!((bpl(BplClass::LowLoss, ghz(28.0)) - 14.551).abs() < 0.01);
        assert!((bpl(BplClass::HighLoss, ghz(28.0)) - 35.944).abs() < 0.01);
        assert!((bpl(BplClass::LowLoss, ghz(1e-6)) - 6.990).abs() < 1e-3);
        assert!((bpl(BplClass::LowLoss, ghz(28.0)) - 10.0 * 28.52f64.log10()).abs() < 1e-12);
    }

    #[test]
    fn o2i_examples() {
        let cfg = O2iConfig::default();
        let f = ghz(28.0);
        assert_eq!(o2i_loss(BplClass::HighLoss, f, 0.0, 0.0, &cfg).unwrap(), bpl(BplClass::HighLoss, f));
        let v = o2i_loss(BplClass::LowLoss, f, 10.0, 0.0, &cfg).unwrap();
        assert!((v - 19.551).abs() < 0.01);
        let add_on = o2i_loss(BplClass::LowLoss, f, 0.0, 80.0, &cfg).unwrap() - bpl(BplClass::LowLoss, f);
        assert!((add_on - 16.53).abs() < 0.01);
    }

    #[test]
    fn o2i_domain_errors() {
        let cfg = O2iConfig::default();
        let f = ghz(28.0);
        assert!(o2i_loss(BplClass::LowLoss, f, 0.0, 90.0, &cfg).is_err());
        assert!(o2i_loss(BplClass::LowLoss, f, -1.0, 0.0, &cfg).is_err());
        let bad = O2iConfig { depth_loss_db_per_m: 3.0, ..cfg };
        assert!(o2i_loss(BplClass::LowLoss, f, 1.0, 0.0, &bad).is_err());
        let bad = O2iConfig { incidence_surcharge_max_db: 25.0, ..cfg };
        assert!(bad.validate().is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn bpl_increasing_and_ordered(f in 0.01f64..100.0, df in 0.01f64..10.0) {
                for c in [BplClass::LowLoss, BplClass::HighLoss] {
                    prop_assert!(bpl(c, ghz(f + df)) > bpl(c, ghz(f)));
                }
                prop_assert!(bpl(BplClass::HighLoss, ghz(f)) >= bpl(BplClass::LowLoss, ghz(f)));
            }

            #[test]
            fn o2i_monotone(f in 0.5f64..100.0, depth in 0.0f64..50.0, dd in 0.0f64..10.0,
                            ang in 0.0f64..80.0, da in 0.0f64..9.9, rate in 0.2f64..2.0, smax in 0.0f64..20.0) {
                let cfg = O2iConfig { incidence_surcharge_max_db: smax, depth_loss_db_per_m: rate };
                let base = o2i_loss(BplClass::LowLoss, ghz(f), depth, ang, &cfg).unwrap();
                prop_assert!(o2i_loss(BplClass::LowLoss, ghz(f), depth + dd, ang, &cfg).unwrap() >= base);
                prop_assert!(o2i_loss(BplClass::LowLoss, ghz(f), depth, ang + da, &cfg).unwrap() >= base);
            }
        }
    }
}
