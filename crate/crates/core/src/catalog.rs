//! Built-in scenario parameters for the outdoor UMa / UMi environments.
//!
//! Path-loss parameters are omnidirectional multi-frequency fits pooled across
//! bands. LOS-probability pairs are the 3GPP reference values: UMa (18, 63),
//! UMi (18, 36); both UMi sub-scenarios share the UMi pair.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::los::D1D2Params;
use crate::pathloss::{AbgModel, CiModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Environment {
    Uma,
    UmiStreetCanyon,
    UmiOpenSquare,
}

impl Environment {
    /// 3GPP LOS-probability parameters for the environment family.
    pub fn los_params(self) -> D1D2Params {
        match self {
            Environment::Uma => D1D2Params { d1: 18.0, d2: 63.0 },
            Environment::UmiStreetCanyon | Environment::UmiOpenSquare => {
                D1D2Params { d1: 18.0, d2: 36.0 }
            }
        }
    }

    pub fn scenario(self, los: bool) -> ScenarioId {
        use ScenarioId::*;
        match (self, los) {
            (Environment::Uma, true) => UmaLos,
            (Environment::Uma, false) => UmaNlos,
            (Environment::UmiStreetCanyon, true) => UmiStreetCanyonLos,
            (Environment::UmiStreetCanyon, false) => UmiStreetCanyonNlos,
            (Environment::UmiOpenSquare, true) => UmiOpenSquareLos,
            (Environment::UmiOpenSquare, false) => UmiOpenSquareNlos,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ScenarioId {
    #[serde(rename = "uma-los")]
    UmaLos,
    #[serde(rename = "uma-nlos")]
    UmaNlos,
    #[serde(rename = "umi-sc-los")]
    UmiStreetCanyonLos,
    #[serde(rename = "umi-sc-nlos")]
    UmiStreetCanyonNlos,
    #[serde(rename = "umi-os-los")]
    UmiOpenSquareLos,
    #[serde(rename = "umi-os-nlos")]
    UmiOpenSquareNlos,
}

impl ScenarioId {
    pub const ALL: [ScenarioId; 6] = [
        ScenarioId::UmaLos,
        ScenarioId::UmaNlos,
        ScenarioId::UmiStreetCanyonLos,
        ScenarioId::UmiStreetCanyonNlos,
        ScenarioId::UmiOpenSquareLos,
        ScenarioId::UmiOpenSquareNlos,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ScenarioId::UmaLos => "uma-los",
            ScenarioId::UmaNlos => "uma-nlos",
            ScenarioId::UmiStreetCanyonLos => "umi-sc-los",
            ScenarioId::UmiStreetCanyonNlos => "umi-sc-nlos",
            ScenarioId::UmiOpenSquareLos => "umi-os-los",
            ScenarioId::UmiOpenSquareNlos => "umi-os-nlos",
        }
    }

    pub fn is_los(self) -> bool {
        matches!(
            self,
            ScenarioId::UmaLos | ScenarioId::UmiStreetCanyonLos | ScenarioId::UmiOpenSquareLos
        )
    }

    pub fn environment(self) -> Environment {
        match self {
            ScenarioId::UmaLos | ScenarioId::UmaNlos => Environment::Uma,
            ScenarioId::UmiStreetCanyonLos | ScenarioId::UmiStreetCanyonNlos => {
                Environment::UmiStreetCanyon
            }
            ScenarioId::UmiOpenSquareLos | ScenarioId::UmiOpenSquareNlos => {
                Environment::UmiOpenSquare
            }
        }
    }

    pub fn params(self) -> ScenarioParams {
        catalog_lookup(self)
    }
}

impl fmt::Display for ScenarioId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ScenarioId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.to_ascii_lowercase().replace('_', "-");
        ScenarioId::ALL
            .into_iter()
            .find(|id| id.name() == key)
            .ok_or_else(|| {
                let names: Vec<_> = ScenarioId::ALL.iter().map(|id| id.name()).collect();
                Error::invalid(format!("unknown scenario '{s}', expected one of {}", names.join(", ")))
            })
    }
}

/// CI model parameters with the shadow-fading standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CiParams {
    pub n: f64,
    pub sigma_db: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AbgParams {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub sigma_db: f64,
}

/// One catalog row. `abg` is `None` for LOS rows, where no ABG fit exists.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioParams {
    pub scenario: ScenarioId,
    pub ci: CiParams,
    pub abg: Option<AbgParams>,
    pub los: D1D2Params,
}

impl ScenarioParams {
    pub fn abg_available(&self) -> bool {
        self.abg.is_some()
    }

    pub fn ci_model(&self) -> CiModel {
        CiModel { n: self.ci.n }
    }

    pub fn abg_model(&self) -> Result<AbgModel> {
        self.abg
            .map(|p| AbgModel { alpha: p.alpha, beta: p.beta, gamma: p.gamma })
            .ok_or_else(|| {
                Error::invalid(format!(
                    "ABG parameters are N/A for LOS scenario '{}'; use the CI model",
                    self.scenario
                ))
            })
    }
}

pub fn catalog_lookup(id: ScenarioId) -> ScenarioParams {
    let ci = |n, sigma_db| CiParams { n, sigma_db };
    let abg = |alpha, beta, gamma, sigma_db| Some(AbgParams { alpha, beta, gamma, sigma_db });
    let (ci, abg) = match id {
        ScenarioId::UmaLos => (ci(2.0, 4.1), None),
        ScenarioId::UmaNlos => (ci(3.0, 6.8), abg(3.4, 19.2, 2.3, 6.5)),
        ScenarioId::UmiStreetCanyonLos => (ci(1.98, 3.1), None),
        ScenarioId::UmiStreetCanyonNlos => (ci(3.19, 8.2), abg(3.48, 21.02, 2.34, 7.8)),
        ScenarioId::UmiOpenSquareLos => (ci(1.85, 4.2), None),
        ScenarioId::UmiOpenSquareNlos => (ci(2.89, 7.1), abg(4.14, 3.66, 2.43, 7.0)),
    };
    ScenarioParams { scenario: id, ci, abg, los: id.environment().los_params() }
}

/// All six rows in catalog order.
pub fn catalog() -> Vec<ScenarioParams> {
    ScenarioId::ALL.into_iter().map(catalog_lookup).collect()
}

pub fn catalog_json() -> serde_json::Value {
    serde_json::to_value(catalog()).expect("catalog serializes")
}
