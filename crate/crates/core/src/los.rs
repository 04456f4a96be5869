//! LOS-probability models as functions of 2D distance (and UE height for UMa).
//!
//! For indoor UEs every model is evaluated at the 2D distance to the outer
//! wall rather than the full AP-UE distance; see [`indoor_effective_distance`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units::Distance2D;

/// Highest UE height covered by the UMa height correction, m.
pub const UMA_MAX_UE_HEIGHT_M: f64 = 23.0;
const UMA_HEIGHT_BREAK_M: f64 = 13.0;
const UMA_PARAMS: D1D2Params = D1D2Params { d1: 18.0, d2: 63.0 };

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct D1D2Params {
    pub d1: f64,
    pub d2: f64,
}

impl D1D2Params {
    pub fn new(d1: f64, d2: f64) -> Result<Self> {
        let p = D1D2Params { d1, d2 };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.d1.is_finite() && self.d1 > 0.0 && self.d2.is_finite() && self.d2 > 0.0 {
            Ok(())
        } else {
            Err(Error::invalid(format!(
                "d1 and d2 must be positive, got d1={} d2={}",
                self.d1, self.d2
            )))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct UeHeight(f64);

impl UeHeight {
    pub fn from_m(h: f64) -> Result<Self> {
        if h.is_finite() && h > 0.0 {
            Ok(UeHeight(h))
        } else {
            Err(Error::invalid(format!("UE height must be positive, got {h} m")))
        }
    }

    pub fn m(self) -> f64 {
        self.0
    }
}

impl Default for UeHeight {
    fn default() -> Self {
        UeHeight(1.5)
    }
}

impl TryFrom<f64> for UeHeight {
    type Error = Error;
    fn try_from(v: f64) -> Result<Self> {
        UeHeight::from_m(v)
    }
}

impl From<UeHeight> for f64 {
    fn from(h: UeHeight) -> f64 {
        h.0
    }
}

/// min(d1/d, 1)·(1 − e^(−d/d2)) + e^(−d/d2)
pub fn p_los_d1d2(p: &D1D2Params, d: Distance2D) -> f64 {
    let d = d.m();
    if d <= p.d1 {
        return 1.0;
    }
    let e = (-d / p.d2).exp();
    (p.d1 / d) * (1.0 - e) + e
}

/// Square of the d1/d2 model.
pub fn p_los_nyu_squared(p: &D1D2Params, d: Distance2D) -> f64 {
    let v = p_los_d1d2(p, d);
    v * v
}

/// Distance term of the UMa height correction; zero up to and including 18 m.
pub fn uma_g(d: f64) -> f64 {
    if d > 18.0 {
        1.25e-6 * d * d * (-d / 150.0).exp()
    } else {
        0.0
    }
}

/// Height correction C(d, h_UT).
pub fn uma_c(d: f64, h: UeHeight) -> Result<f64> {
    let h = h.m();
    if h > UMA_MAX_UE_HEIGHT_M {
        return Err(Error::OutOfDomain(format!(
            "UMa LOS probability is defined for UE heights up to {UMA_MAX_UE_HEIGHT_M} m, got {h} m"
        )));
    }
    if h < UMA_HEIGHT_BREAK_M {
        Ok(0.0)
    } else {
        Ok(((h - UMA_HEIGHT_BREAK_M) / 10.0).powf(1.5) * uma_g(d))
    }
}

/// 3GPP UMa model with UE-height correction, clamped to at most 1.
pub fn p_los_3gpp_uma(d: Distance2D, h: UeHeight) -> Result<f64> {
    let c = uma_c(d.m(), h)?;
    Ok((p_los_d1d2(&UMA_PARAMS, d) * (1.0 + c)).min(1.0))
}

/// Indoor UEs use the AP-to-outer-wall distance in place of the AP-UE distance.
pub fn indoor_effective_distance(d_outer_wall: Distance2D) -> Distance2D {
    d_outer_wall
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LosModelKind {
    D1d2,
    NyuSquared,
    #[serde(rename = "3gpp_uma")]
    ThreeGppUma,
}

/// A fully parameterized LOS-probability model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum LosModel {
    D1d2(D1D2Params),
    NyuSquared(D1D2Params),
    #[serde(rename = "3gpp_uma")]
    ThreeGppUma { h_ut: UeHeight },
}

impl LosModel {
    pub fn probability(&self, d: Distance2D) -> Result<f64> {
        match self {
            LosModel::D1d2(p) => Ok(p_los_d1d2(p, d)),
            LosModel::NyuSquared(p) => Ok(p_los_nyu_squared(p, d)),
            LosModel::ThreeGppUma { h_ut } => p_los_3gpp_uma(d, *h_ut),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            LosModel::D1d2(p) | LosModel::NyuSquared(p) => p.validate(),
            LosModel::ThreeGppUma { h_ut } => uma_c(100.0, *h_ut).map(|_| ()),
        }
    }
}
