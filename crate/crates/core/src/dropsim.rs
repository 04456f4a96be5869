//! Monte-Carlo drops: place UEs, resolve LOS, and compose path loss, shadow
//! fading and outdoor-to-indoor loss into coupling loss.
//!
//! Randomness comes from one master seed. Link `i` draws from ChaCha8 stream
//! `i` of that seed, so adding UEs never changes earlier links, and links can
//! be evaluated in parallel with bit-identical results. Correlated shadow
//! fading fields use the two top stream indices.
//!
//! Every model distance (path loss and LOS probability) is floored at 1 m.
//! Stochastic-mode indoor UEs evaluate the LOS probability at the distance to
//! the outer wall, taken as the link distance minus the drawn indoor depth.

use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::catalog::{Environment, ScenarioId};
use crate::error::{Error, Result};
use crate::geometry::{BuildingMap, Point};
use crate::los::{D1D2Params, LosModel, LosModelKind, UeHeight};
use crate::pathloss::PathLossModel;
use crate::penetration::{o2i_loss, BplClass, O2iConfig};
use crate::units::{Distance2D, Frequency, Warning};

pub const DEFAULT_MAX_DEPTH_M: f64 = 25.0;
pub const DEFAULT_BIN_WIDTH_M: f64 = 10.0;
/// Number of random Fourier components in a correlated shadow-fading field.
pub const SF_FIELD_COMPONENTS: usize = 1024;
/// Map-mode incidence angles are capped here; a link running exactly along
/// a wall would otherwise be undefined.
pub const MAX_INCIDENCE_DEG: f64 = 89.9;
const MIN_MODEL_DISTANCE_M: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioPair {
    pub los: ScenarioId,
    pub nlos: ScenarioId,
}

impl ScenarioPair {
    pub fn for_environment(env: Environment) -> Self {
        ScenarioPair { los: env.scenario(true), nlos: env.scenario(false) }
    }

    pub fn environment(&self) -> Environment {
        self.los.environment()
    }

    fn validate(&self) -> Result<()> {
        if !self.los.is_los() || self.nlos.is_los() {
            return Err(Error::config(format!(
                "scenario pair must be (LOS, NLOS), got ({}, {})",
                self.los, self.nlos
            )));
        }
        if self.los.environment() != self.nlos.environment() {
            return Err(Error::config(format!(
                "scenario pair mixes environments: {} and {}",
                self.los, self.nlos
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Placement {
    /// Uniform over the annulus min_distance_m ≤ r ≤ radius_m around `center`.
    UniformDisc {
        #[serde(default = "origin")]
        center: Point,
        radius_m: f64,
        #[serde(default = "default_min_distance")]
        min_distance_m: f64,
    },
    Explicit { positions: Vec<Point> },
}

fn origin() -> Point {
    Point::new(0.0, 0.0)
}

fn default_min_distance() -> f64 {
    10.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum LosMode {
    /// LOS from the building map; indoor status and depth from the map too.
    Map,
    /// Bernoulli draw from a LOS-probability model. `params` defaults to the
    /// environment's (d1, d2); the UMa model takes none.
    Stochastic {
        model: LosModelKind,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        params: Option<D1D2Params>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlModelChoice {
    /// CI for both states.
    #[default]
    Ci,
    /// ABG for NLOS links, CI for LOS links (no LOS ABG parameters exist).
    AbgNlos,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum SfMode {
    #[default]
    Iid,
    /// Exponentially correlated in space, exp(-Δ/decorrelation_m).
    ExpCorrelated { decorrelation_m: f64 },
    /// No shadow fading.
    Off,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DropConfig {
    pub scenario: ScenarioPair,
    pub frequency_ghz: Frequency,
    /// Required for disc placement; must match the list length if given with
    /// explicit placement.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ue_count: Option<usize>,
    pub placement: Placement,
    #[serde(default = "default_aps")]
    pub ap_positions: Vec<Point>,
    pub los_mode: LosMode,
    #[serde(default)]
    pub indoor_fraction: f64,
    #[serde(default)]
    pub high_loss_fraction: f64,
    #[serde(default)]
    pub o2i: O2iConfig,
    #[serde(default = "default_max_depth")]
    pub max_depth_m: f64,
    /// Stochastic mode only: draw the facade incidence angle uniformly in
    /// [0, 90) instead of using normal incidence.
    #[serde(default)]
    pub random_incidence: bool,
    #[serde(default)]
    pub pl_model: PlModelChoice,
    #[serde(default)]
    pub sf_mode: SfMode,
    #[serde(default)]
    pub ue_height_m: UeHeight,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rng_seed: Option<u64>,
    #[serde(default = "default_bin_width")]
    pub bin_width_m: f64,
}

fn default_aps() -> Vec<Point> {
    vec![origin()]
}

fn default_max_depth() -> f64 {
    DEFAULT_MAX_DEPTH_M
}

fn default_bin_width() -> f64 {
    DEFAULT_BIN_WIDTH_M
}

fn fraction(name: &str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::config(format!("{name} must be within [0, 1], got {v}")))
    }
}

impl DropConfig {
    /// A stochastic-LOS, outdoor-only disc drop around a single AP at the origin.
    pub fn disc(env: Environment, frequency: Frequency, ue_count: usize, radius_m: f64, seed: u64) -> Self {
        DropConfig {
            scenario: ScenarioPair::for_environment(env),
            frequency_ghz: frequency,
            ue_count: Some(ue_count),
            placement: Placement::UniformDisc { center: origin(), radius_m, min_distance_m: default_min_distance() },
            ap_positions: default_aps(),
            los_mode: LosMode::Stochastic { model: LosModelKind::D1d2, params: None },
            indoor_fraction: 0.0,
            high_loss_fraction: 0.0,
            o2i: O2iConfig::default(),
            max_depth_m: DEFAULT_MAX_DEPTH_M,
            random_incidence: false,
            pl_model: PlModelChoice::Ci,
            sf_mode: SfMode::Iid,
            ue_height_m: UeHeight::default(),
            rng_seed: Some(seed),
            bin_width_m: DEFAULT_BIN_WIDTH_M,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::config(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    /// SHA-256 of the compact JSON form, hex encoded.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_json().as_bytes()))
    }

    pub fn seed(&self) -> Result<u64> {
        self.rng_seed.ok_or_else(|| Error::config("rng_seed is not set"))
    }

    pub fn link_count(&self) -> usize {
        match &self.placement {
            Placement::UniformDisc { .. } => self.ue_count.unwrap_or(0),
            Placement::Explicit { positions } => positions.len(),
        }
    }

    /// Stochastic LOS model for this config, `None` in map mode.
    pub fn los_model(&self) -> Result<Option<LosModel>> {
        let LosMode::Stochastic { model, params } = self.los_mode else {
            return Ok(None);
        };
        let p = params.unwrap_or_else(|| self.scenario.environment().los_params());
        let m = match model {
            LosModelKind::D1d2 => LosModel::D1d2(p),
            LosModelKind::NyuSquared => LosModel::NyuSquared(p),
            LosModelKind::ThreeGppUma => {
                if params.is_some() {
                    return Err(Error::config("the 3gpp_uma LOS model takes no d1/d2 parameters"));
                }
                LosModel::ThreeGppUma { h_ut: self.ue_height_m }
            }
        };
        m.validate().map_err(|e| Error::config(e.to_string()))?;
        Ok(Some(m))
    }

    fn path_loss_models(&self) -> Result<(PathLossModel, PathLossModel)> {
        let los = self.scenario.los.params();
        let nlos = self.scenario.nlos.params();
        let nlos_model = match self.pl_model {
            PlModelChoice::Ci => PathLossModel::Ci(nlos.ci_model()),
            PlModelChoice::AbgNlos => PathLossModel::Abg(nlos.abg_model()?),
        };
        Ok((PathLossModel::Ci(los.ci_model()), nlos_model))
    }

    /// Checks everything that can be checked before sampling.
    pub fn validate(&self, map: Option<&BuildingMap>) -> Result<()> {
        self.scenario.validate()?;
        self.seed()?;
        fraction("indoor_fraction", self.indoor_fraction)?;
        fraction("high_loss_fraction", self.high_loss_fraction)?;
        self.o2i.validate()?;
        if !(self.max_depth_m.is_finite() && self.max_depth_m >= 0.0) {
            return Err(Error::config(format!("max_depth_m must be non-negative, got {}", self.max_depth_m)));
        }
        if !(self.bin_width_m.is_finite() && self.bin_width_m > 0.0) {
            return Err(Error::config(format!("bin_width_m must be positive, got {}", self.bin_width_m)));
        }
        if let SfMode::ExpCorrelated { decorrelation_m } = self.sf_mode {
            if !(decorrelation_m.is_finite() && decorrelation_m > 0.0) {
                return Err(Error::config(format!("decorrelation_m must be positive, got {decorrelation_m}")));
            }
        }
        if self.ap_positions.is_empty() {
            return Err(Error::config("at least one AP position is required"));
        }
        let finite = |p: &Point| p.x.is_finite() && p.y.is_finite();
        if !self.ap_positions.iter().all(finite) {
            return Err(Error::config("AP positions must be finite"));
        }
        match &self.placement {
            Placement::UniformDisc { center, radius_m, min_distance_m } => {
                if self.ue_count.is_none() {
                    return Err(Error::config("ue_count is required for uniform_disc placement"));
                }
                if !finite(center) {
                    return Err(Error::config("disc center must be finite"));
                }
                if !(min_distance_m.is_finite() && *min_distance_m >= 0.0 && radius_m.is_finite() && radius_m > min_distance_m) {
                    return Err(Error::config(format!(
                        "need 0 <= min_distance_m < radius_m, got {min_distance_m} and {radius_m}"
                    )));
                }
            }
            Placement::Explicit { positions } => {
                if let Some(n) = self.ue_count {
                    if n != positions.len() {
                        return Err(Error::config(format!(
                            "ue_count {n} does not match {} explicit positions",
                            positions.len()
                        )));
                    }
                }
                if !positions.iter().all(finite) {
                    return Err(Error::config("UE positions must be finite"));
                }
            }
        }
        self.los_model()?;
        self.path_loss_models().map_err(|e| Error::config(e.to_string()))?;
        match (self.los_mode, map) {
            (LosMode::Map, None) => return Err(Error::config("los_mode map needs a building map")),
            (LosMode::Stochastic { .. }, Some(_)) => {
                return Err(Error::config("a building map was given but los_mode is not map"))
            }
            (LosMode::Map, Some(m)) => {
                if self.indoor_fraction != 0.0 {
                    return Err(Error::config("indoor_fraction has no effect in map mode; indoor status comes from the map"));
                }
                if self.random_incidence {
                    return Err(Error::config("random_incidence has no effect in map mode"));
                }
                for (i, ap) in self.ap_positions.iter().enumerate() {
                    if m.is_indoor(*ap) {
                        return Err(Error::config(format!("AP {i} lies inside a building")));
                    }
                }
            }
            (LosMode::Stochastic { .. }, None) => {}
        }
        Ok(())
    }
}

/// Stationary Gaussian field with unit variance and exponential correlation,
/// approximated by random Fourier features.
#[derive(Debug, Clone)]
pub struct CorrelatedField {
    omega: Vec<(f64, f64)>,
    phase: Vec<f64>,
    amp: f64,
}

impl CorrelatedField {
    pub fn new(decorrelation_m: f64, components: usize, rng: &mut impl Rng) -> Self {
        let mut omega = Vec::with_capacity(components);
        let mut phase = Vec::with_capacity(components);
        for _ in 0..components {
            // radial law of the 2D spectral density of exp(-r/L)
            let u: f64 = rng.random();
            let k = ((1.0 / ((1.0 - u) * (1.0 - u))) - 1.0).sqrt() / decorrelation_m;
            let theta = rng.random::<f64>() * TAU;
            omega.push((k * theta.cos(), k * theta.sin()));
            phase.push(rng.random::<f64>() * TAU);
        }
        CorrelatedField { omega, phase, amp: (2.0 / components as f64).sqrt() }
    }

    pub fn sample(&self, p: Point) -> f64 {
        let s: f64 = self
            .omega
            .iter()
            .zip(&self.phase)
            .map(|(&(wx, wy), &ph)| (wx * p.x + wy * p.y + ph).cos())
            .sum();
        self.amp * s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkRecord {
    pub link_id: usize,
    pub ap: usize,
    pub position: Point,
    pub d2d_m: f64,
    pub indoor: bool,
    pub los: bool,
    /// LOS probability used for the draw (stochastic mode).
    pub p_los: Option<f64>,
    pub bpl_class: Option<BplClass>,
    pub depth_m: f64,
    pub incidence_deg: f64,
    pub pl_db: f64,
    pub sf_db: f64,
    pub o2i_db: f64,
    pub coupling_loss_db: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LosFractionBin {
    pub lo_m: f64,
    pub hi_m: f64,
    pub count: usize,
    pub los_count: usize,
    pub los_fraction: f64,
    /// Mean model LOS probability over the bin's links (stochastic mode).
    pub mean_p_los: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PercentilePoint {
    pub percentile: f64,
    pub coupling_loss_db: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StateSummary {
    pub count: usize,
    /// Population standard deviation of the shadow fading, dB.
    pub sf_std_db: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DropSummary {
    pub seed: u64,
    pub config_sha256: String,
    pub config: DropConfig,
    pub link_count: usize,
    pub indoor_count: usize,
    pub los_fraction: f64,
    pub los: StateSummary,
    pub nlos: StateSummary,
    pub los_fraction_bins: Vec<LosFractionBin>,
    pub coupling_loss_cdf: Vec<PercentilePoint>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<Warning>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DropResult {
    pub summary: DropSummary,
    pub links: Vec<LinkRecord>,
}

fn nearest_ap(aps: &[Point], p: Point) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (i, ap) in aps.iter().enumerate() {
        let d = ap.distance(p);
        if d < best.1 {
            best = (i, d);
        }
    }
    best
}

fn model_distance(d: f64) -> Distance2D {
    Distance2D::from_m(d.max(MIN_MODEL_DISTANCE_M)).expect("floored distance is positive")
}

struct Engine<'a> {
    cfg: &'a DropConfig,
    map: Option<&'a BuildingMap>,
    seed: u64,
    los_model: Option<LosModel>,
    pl: (PathLossModel, PathLossModel),
    sigma: (f64, f64),
    fields: Option<(CorrelatedField, CorrelatedField)>,
}

impl Engine<'_> {
    fn link(&self, i: usize) -> Result<LinkRecord> {
        let cfg = self.cfg;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(i as u64);
        let position = match &cfg.placement {
            Placement::UniformDisc { center, radius_m, min_distance_m } => {
                let (r0, r1) = (min_distance_m * min_distance_m, radius_m * radius_m);
                let r = (r0 + rng.random::<f64>() * (r1 - r0)).sqrt();
                let phi = rng.random::<f64>() * TAU - PI;
                Point::new(center.x + r * phi.cos(), center.y + r * phi.sin())
            }
            Placement::Explicit { positions } => positions[i],
        };
        let (ap, d2d) = nearest_ap(&cfg.ap_positions, position);
        let u_indoor: f64 = rng.random();
        let u_class: f64 = rng.random();
        let u_depth: f64 = rng.random();
        let u_angle: f64 = rng.random();
        let u_los: f64 = rng.random();
        let z: f64 = StandardNormal.sample(&mut rng);

        let (indoor, los, p_los, depth, incidence) = match self.map {
            Some(map) => {
                let ap_pos = cfg.ap_positions[ap];
                if map.is_indoor(position) {
                    let w = map.outer_wall_distance(ap_pos, position)?;
                    (true, false, None, w.depth_m, w.incidence_deg.min(MAX_INCIDENCE_DEG))
                } else {
                    (false, map.is_los(ap_pos, position)?, None, 0.0, 0.0)
                }
            }
            None => {
                let model = self.los_model.as_ref().expect("stochastic mode has a model");
                let indoor = u_indoor < cfg.indoor_fraction;
                let (depth, incidence, d_los) = if indoor {
                    let depth = u_depth * cfg.max_depth_m;
                    let incidence = if cfg.random_incidence { u_angle * 90.0 } else { 0.0 };
                    (depth, incidence, d2d - depth)
                } else {
                    (0.0, 0.0, d2d)
                };
                let p = model.probability(model_distance(d_los))?;
                (indoor, u_los < p, Some(p), depth, incidence)
            }
        };

        let d = model_distance(d2d);
        let (pl_db, sigma, field) = if los {
            (self.pl.0.eval(cfg.frequency_ghz, d)?, self.sigma.0, self.fields.as_ref().map(|f| &f.0))
        } else {
            (self.pl.1.eval(cfg.frequency_ghz, d)?, self.sigma.1, self.fields.as_ref().map(|f| &f.1))
        };
        let sf_db = match (cfg.sf_mode, field) {
            (SfMode::Off, _) => 0.0,
            (_, Some(f)) => sigma * f.sample(position),
            (_, None) => sigma * z,
        };
        let (bpl_class, o2i_db) = if indoor {
            let class = if u_class < cfg.high_loss_fraction { BplClass::HighLoss } else { BplClass::LowLoss };
            (Some(class), o2i_loss(class, cfg.frequency_ghz, depth, incidence, &cfg.o2i)?)
        } else {
            (None, 0.0)
        };
        Ok(LinkRecord {
            link_id: i,
            ap,
            position,
            d2d_m: d2d,
            indoor,
            los,
            p_los,
            bpl_class,
            depth_m: depth,
            incidence_deg: incidence,
            pl_db,
            sf_db,
            o2i_db,
            coupling_loss_db: pl_db + sf_db + o2i_db,
        })
    }
}

/// Runs a drop. `map` must be given exactly when `los_mode` is `map`.
pub fn run_drop(cfg: &DropConfig, map: Option<&BuildingMap>) -> Result<DropResult> {
    cfg.validate(map)?;
    let seed = cfg.seed()?;
    let n = cfg.link_count();
    if n == 0 {
        return Err(Error::config("drop has no UEs"));
    }
    let fields = match cfg.sf_mode {
        SfMode::ExpCorrelated { decorrelation_m } => {
            let field = |stream: u64| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(stream);
                CorrelatedField::new(decorrelation_m, SF_FIELD_COMPONENTS, &mut rng)
            };
            Some((field(u64::MAX), field(u64::MAX - 1)))
        }
        _ => None,
    };
    let engine = Engine {
        cfg,
        map,
        seed,
        los_model: cfg.los_model()?,
        pl: cfg.path_loss_models()?,
        sigma: (cfg.scenario.los.params().ci.sigma_db, sf_sigma_nlos(cfg)),
        fields,
    };
    let links: Vec<LinkRecord> = (0..n).into_par_iter().map(|i| engine.link(i)).collect::<Result<_>>()?;

    let mut warnings = Vec::new();
    if let Some(w) = cfg.frequency_ghz.band_warning() {
        warnings.push(w);
    }
    let state = |los: bool| {
        let sf: Vec<f64> = links.iter().filter(|l| l.los == los).map(|l| l.sf_db).collect();
        StateSummary { count: sf.len(), sf_std_db: population_std(&sf) }
    };
    let los_count = links.iter().filter(|l| l.los).count();
    let percentiles: Vec<f64> = (0..=100).map(f64::from).collect();
    let losses: Vec<f64> = links.iter().map(|l| l.coupling_loss_db).collect();
    let summary = DropSummary {
        seed,
        config_sha256: cfg.hash(),
        config: cfg.clone(),
        link_count: n,
        indoor_count: links.iter().filter(|l| l.indoor).count(),
        los_fraction: los_count as f64 / n as f64,
        los: state(true),
        nlos: state(false),
        los_fraction_bins: los_fraction_bins(&links, cfg.bin_width_m),
        coupling_loss_cdf: empirical_percentiles(&losses, &percentiles)?,
        warnings,
    };
    Ok(DropResult { summary, links })
}

fn sf_sigma_nlos(cfg: &DropConfig) -> f64 {
    let p = cfg.scenario.nlos.params();
    match (cfg.pl_model, p.abg) {
        (PlModelChoice::AbgNlos, Some(abg)) => abg.sigma_db,
        _ => p.ci.sigma_db,
    }
}

fn population_std(xs: &[f64]) -> Option<f64> {
    if xs.is_empty() {
        return None;
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    Some((xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n).sqrt())
}

/// Empirical LOS fraction in fixed-width bins of link distance; empty bins
/// are omitted.
pub fn los_fraction_bins(links: &[LinkRecord], bin_width_m: f64) -> Vec<LosFractionBin> {
    let mut acc: std::collections::BTreeMap<u64, (usize, usize, f64, bool)> = Default::default();
    for l in links {
        let e = acc.entry((l.d2d_m / bin_width_m).floor() as u64).or_insert((0, 0, 0.0, true));
        e.0 += 1;
        e.1 += usize::from(l.los);
        match l.p_los {
            Some(p) => e.2 += p,
            None => e.3 = false,
        }
    }
    acc.into_iter()
        .map(|(b, (count, los_count, p_sum, all_p))| LosFractionBin {
            lo_m: b as f64 * bin_width_m,
            hi_m: (b + 1) as f64 * bin_width_m,
            count,
            los_count,
            los_fraction: los_count as f64 / count as f64,
            mean_p_los: all_p.then(|| p_sum / count as f64),
        })
        .collect()
}

/// Nearest-rank percentiles: the value at rank ceil(p/100 · N), at least 1.
pub fn empirical_percentiles(values: &[f64], percentiles: &[f64]) -> Result<Vec<PercentilePoint>> {
    if values.is_empty() {
        return Err(Error::invalid("percentiles of an empty sample"));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    percentiles
        .iter()
        .map(|&p| {
            if !(0.0..=100.0).contains(&p) {
                return Err(Error::invalid(format!("percentile must be within [0, 100], got {p}")));
            }
            let rank = ((p / 100.0 * n as f64).ceil() as usize).clamp(1, n);
            Ok(PercentilePoint { percentile: p, coupling_loss_db: sorted[rank - 1] })
        })
        .collect()
}

pub fn coupling_loss_cdf(result: &DropResult, percentiles: &[f64]) -> Result<Vec<PercentilePoint>> {
    let losses: Vec<f64> = result.links.iter().map(|l| l.coupling_loss_db).collect();
    empirical_percentiles(&losses, percentiles)
}

pub const LINK_CSV_HEADER: [&str; 16] = [
    "link_id",
    "ap",
    "x_m",
    "y_m",
    "d2d_m",
    "indoor",
    "los",
    "p_los",
    "bpl_class",
    "depth_m",
    "incidence_deg",
    "pl_db",
    "sf_db",
    "o2i_db",
    "coupling_loss_db",
    "scenario",
];

impl DropResult {
    /// Per-link CSV, preceded by `#` lines carrying the seed and config hash.
    pub fn links_csv(&self) -> String {
        let mut out = format!("# seed={}\n# config_sha256={}\n", self.summary.seed, self.summary.config_sha256);
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(LINK_CSV_HEADER).expect("in-memory write");
        let pair = self.summary.config.scenario;
        for l in &self.links {
            let class = match l.bpl_class {
                Some(BplClass::LowLoss) => "low_loss",
                Some(BplClass::HighLoss) => "high_loss",
                None => "",
            };
            w.write_record([
                l.link_id.to_string(),
                l.ap.to_string(),
                l.position.x.to_string(),
                l.position.y.to_string(),
                l.d2d_m.to_string(),
                u8::from(l.indoor).to_string(),
                u8::from(l.los).to_string(),
                l.p_los.map(|p| p.to_string()).unwrap_or_default(),
                class.to_string(),
                l.depth_m.to_string(),
                l.incidence_deg.to_string(),
                l.pl_db.to_string(),
                l.sf_db.to_string(),
                l.o2i_db.to_string(),
                l.coupling_loss_db.to_string(),
                if l.los { pair.los } else { pair.nlos }.to_string(),
            ])
            .expect("in-memory write");
        }
        out.push_str(&String::from_utf8(w.into_inner().expect("flush")).expect("utf8"));
        out
    }

    pub fn summary_json(&self) -> String {
        serde_json::to_string_pretty(&self.summary).expect("summary serializes")
    }
}
