//! Power-weighted delay and angular spreads, and XPR summaries.
//!
//! Azimuth spreads are circular: the azimuth list is cut open at each ray in
//! turn and the smallest resulting weighted standard deviation is reported.
//! Because the linearized azimuths span less than 360°, a spread is always
//! below 180°. Elevation spreads are plain weighted standard deviations.
//!
//! XPR is averaged in dB, not in the linear domain.

use serde::{Deserialize, Serialize};

use crate::clustering::ClusterSet;
use crate::error::{Error, Result};
use crate::rays::RayRecord;

/// Upper bound on any azimuth spread from [`rms_angle_spread`], degrees.
pub const MAX_AZIMUTH_SPREAD_DEG: f64 = 180.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AngleKind {
    AodAz,
    AoaAz,
    AodEl,
    AoaEl,
}

impl AngleKind {
    fn get(self, r: &RayRecord) -> f64 {
        match self {
            AngleKind::AodAz => r.aod_az_deg,
            AngleKind::AoaAz => r.aoa_az_deg,
            AngleKind::AodEl => r.aod_el_deg,
            AngleKind::AoaEl => r.aoa_el_deg,
        }
    }

    fn is_azimuth(self) -> bool {
        matches!(self, AngleKind::AodAz | AngleKind::AoaAz)
    }
}

fn total_power(rays: &[RayRecord]) -> Result<f64> {
    let p: f64 = rays.iter().map(|r| r.power).sum();
    if rays.is_empty() || !(p > 0.0) {
        return Err(Error::invalid("spread needs at least one ray with positive total power"));
    }
    Ok(p)
}

/// Weighted standard deviation, two-pass.
fn weighted_std(values: impl Iterator<Item = (f64, f64)> + Clone, total: f64) -> f64 {
    let mean = values.clone().map(|(v, p)| p * v).sum::<f64>() / total;
    let var = values.map(|(v, p)| p * (v - mean) * (v - mean)).sum::<f64>() / total;
    var.max(0.0).sqrt()
}

pub fn rms_delay_spread(rays: &[RayRecord]) -> Result<f64> {
    let total = total_power(rays)?;
    Ok(weighted_std(rays.iter().map(|r| (r.delay_ns, r.power)), total))
}

pub fn rms_angle_spread(rays: &[RayRecord], which: AngleKind) -> Result<f64> {
    let total = total_power(rays)?;
    if !which.is_azimuth() {
        return Ok(weighted_std(rays.iter().map(|r| (which.get(r), r.power)), total));
    }
    let mut cuts: Vec<f64> = rays.iter().map(|r| which.get(r)).collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut best = f64::INFINITY;
    for &cut in &cuts {
        let unwrapped = rays.iter().map(|r| {
            let a = which.get(r);
            (if a < cut { a + 360.0 } else { a }, r.power)
        });
        best = best.min(weighted_std(unwrapped, total));
    }
    Ok(best)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct XprStats {
    pub mean_db: f64,
    /// Population standard deviation.
    pub std_db: f64,
    pub count: usize,
}

/// Mean and spread of per-ray XPR in dB; `None` when no ray carries XPR.
pub fn xpr_stats(rays: &[RayRecord]) -> Option<XprStats> {
    let xs: Vec<f64> = rays.iter().filter_map(|r| r.xpr_db).collect();
    if xs.is_empty() {
        return None;
    }
    let n = xs.len() as f64;
    let std = weighted_std(xs.iter().map(|&x| (x, 1.0)), n);
    let mean = xs.iter().sum::<f64>() / n;
    Some(XprStats { mean_db: mean, std_db: std, count: xs.len() })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spreads {
    pub ray_count: usize,
    pub total_power: f64,
    pub rms_delay_spread_ns: f64,
    pub asd_az_deg: f64,
    pub asa_az_deg: f64,
    pub asd_el_deg: f64,
    pub asa_el_deg: f64,
    pub xpr: Option<XprStats>,
}

impl Spreads {
    pub fn of(rays: &[RayRecord]) -> Result<Self> {
        Ok(Spreads {
            ray_count: rays.len(),
            total_power: total_power(rays)?,
            rms_delay_spread_ns: rms_delay_spread(rays)?,
            asd_az_deg: rms_angle_spread(rays, AngleKind::AodAz)?,
            asa_az_deg: rms_angle_spread(rays, AngleKind::AoaAz)?,
            asd_el_deg: rms_angle_spread(rays, AngleKind::AodEl)?,
            asa_el_deg: rms_angle_spread(rays, AngleKind::AoaEl)?,
            xpr: xpr_stats(rays),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterSpreads {
    pub cluster: usize,
    #[serde(flatten)]
    pub spreads: Spreads,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpreadReport {
    #[serde(flatten)]
    pub overall: Spreads,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub clusters: Vec<ClusterSpreads>,
}

/// Large-scale spreads over all rays, plus per-cluster spreads over the
/// unpruned members of each cluster when a clustering is supplied.
pub fn spread_report(rays: &[RayRecord], clusters: Option<&ClusterSet>) -> Result<SpreadReport> {
    let overall = Spreads::of(rays)?;
    let clusters = match clusters {
        None => Vec::new(),
        Some(cs) => {
            if cs.labels.len() != rays.len() {
                return Err(Error::invalid(format!(
                    "cluster assignment covers {} rays, ray list has {}",
                    cs.labels.len(),
                    rays.len()
                )));
            }
            (0..cs.clusters.len())
                .map(|c| {
                    let members: Vec<RayRecord> = cs.members(c).map(|i| rays[i]).collect();
                    Ok(ClusterSpreads { cluster: c, spreads: Spreads::of(&members)? })
                })
                .collect::<Result<_>>()?
        }
    };
    Ok(SpreadReport { overall, clusters })
}
