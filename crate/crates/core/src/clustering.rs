//! Multipath clustering with K-power-means, shape pruning and multi-restart
//! selection.
//!
//! Rays are compared with the multipath component distance (MCD)
//!
//! ```text
//! MCD(a, b) = sqrt( |Ω_tx(a) − Ω_tx(b)|²/4 + |Ω_rx(a) − Ω_rx(b)|²/4 + (ζ·|τa − τb| / τ_rms)² )
//! ```
//!
//! where Ω are unit direction vectors and τ_rms is the RMS delay spread of
//! the ray set being clustered. MCD is a Euclidean distance once each ray is
//! embedded as `(Ω_tx/2, Ω_rx/2, ζ·τ/τ_rms)`, so centroids are power-weighted
//! means in that space and the objective (power-weighted sum of squared MCD
//! to the assigned centroid) never increases between iterations.
//!
//! The number of clusters is picked per run by sweeping k and maximizing a
//! Caliński–Harabasz ratio; across restarts the run with the fewest clusters
//! is kept.

use std::cmp::Ordering;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chanstats::rms_delay_spread;
use crate::error::{Error, Result};
use crate::rays::RayRecord;

pub const MAX_ITERATIONS: usize = 100;

type Embedded = [f64; 7];

fn sq_dist(a: &Embedded, b: &Embedded) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Multipath component distance between two rays.
///
/// A non-positive `delay_norm_ns` drops the delay term.
pub fn mcd_distance(a: &RayRecord, b: &RayRecord, zeta: f64, delay_norm_ns: f64) -> f64 {
    let half_sq = |u: [f64; 3], v: [f64; 3]| {
        u.iter().zip(&v).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() / 4.0
    };
    let tx = half_sq(a.departure_unit(), b.departure_unit());
    let rx = half_sq(a.arrival_unit(), b.arrival_unit());
    let delay = if delay_norm_ns > 0.0 {
        let t = zeta * (a.delay_ns - b.delay_ns).abs() / delay_norm_ns;
        t * t
    } else {
        0.0
    };
    (tx + rx + delay).sqrt()
}

fn embed(r: &RayRecord, zeta: f64, delay_norm_ns: f64) -> Embedded {
    let tx = r.departure_unit();
    let rx = r.arrival_unit();
    let t = if delay_norm_ns > 0.0 { zeta * r.delay_ns / delay_norm_ns } else { 0.0 };
    [tx[0] / 2.0, tx[1] / 2.0, tx[2] / 2.0, rx[0] / 2.0, rx[1] / 2.0, rx[2] / 2.0, t]
}

/// Power-weighted cluster center. Direction vectors are mean (not
/// renormalized) unit vectors; the reported angles are their directions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Centroid {
    pub delay_ns: f64,
    pub aod_az_deg: f64,
    pub aod_el_deg: f64,
    pub aoa_az_deg: f64,
    pub aoa_el_deg: f64,
    #[serde(skip)]
    point: Embedded,
}

fn direction(v: [f64; 3]) -> (f64, f64) {
    let h = v[0].hypot(v[1]);
    (crate::rays::wrap_azimuth(v[1].atan2(v[0]).to_degrees()), v[2].atan2(h).to_degrees())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterInfo {
    pub centroid: Centroid,
    /// Unpruned members.
    pub ray_count: usize,
    pub pruned_count: usize,
    /// Linear power of unpruned members.
    pub power: f64,
}

/// Assignment of rays to clusters. Pruned rays keep their label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterSet {
    pub labels: Vec<usize>,
    pub pruned: Vec<bool>,
    pub clusters: Vec<ClusterInfo>,
    /// Power-weighted sum of squared MCD from each unpruned ray to its centroid.
    pub objective: f64,
    /// Objective after each centroid update of the K-power-means iteration.
    pub objective_history: Vec<f64>,
    pub iterations: usize,
    pub zeta: f64,
    pub delay_norm_ns: f64,
    #[serde(skip)]
    canonical: Vec<usize>,
}

impl ClusterSet {
    pub fn cluster_count(&self) -> usize {
        self.clusters.len()
    }

    /// Unpruned ray indices of cluster `c`, in input order.
    pub fn members(&self, c: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.labels.len()).filter(move |&i| self.labels[i] == c && !self.pruned[i])
    }

    /// Rebuilds a set from externally supplied labels (e.g. an assignment file).
    pub fn from_labels(rays: &[RayRecord], labels: Vec<usize>, pruned: Vec<bool>, zeta: f64) -> Result<Self> {
        if labels.len() != rays.len() || pruned.len() != rays.len() {
            return Err(Error::invalid("labels and pruned flags must match the ray count"));
        }
        let k = labels.iter().max().map_or(0, |m| m + 1);
        let canonical = canonical_order(rays);
        let mut cs = ClusterSet {
            labels,
            pruned,
            clusters: Vec::new(),
            objective: 0.0,
            objective_history: Vec::new(),
            iterations: 0,
            zeta,
            delay_norm_ns: canonical_delay_norm(rays, &canonical)?,
            canonical,
        };
        if (0..k).any(|c| cs.members(c).next().is_none()) {
            return Err(Error::invalid("cluster labels must be contiguous with no empty cluster"));
        }
        cs.refresh(rays, k);
        Ok(cs)
    }

    fn refresh(&mut self, rays: &[RayRecord], k: usize) {
        let points: Vec<Embedded> = rays.iter().map(|r| embed(r, self.zeta, self.delay_norm_ns)).collect();
        let mut sums = vec![([0.0; 7], 0.0, 0.0, 0usize, 0usize); k];
        for &i in &self.canonical {
            let s = &mut sums[self.labels[i]];
            if self.pruned[i] {
                s.4 += 1;
                continue;
            }
            let p = rays[i].power;
            for (acc, x) in s.0.iter_mut().zip(&points[i]) {
                *acc += p * x;
            }
            s.1 += p;
            s.2 += p * rays[i].delay_ns;
            s.3 += 1;
        }
        self.clusters = sums
            .into_iter()
            .map(|(acc, power, delay, count, pruned)| {
                let point = acc.map(|v| v / power);
                let (aod_az, aod_el) = direction([point[0], point[1], point[2]]);
                let (aoa_az, aoa_el) = direction([point[3], point[4], point[5]]);
                ClusterInfo {
                    centroid: Centroid {
                        delay_ns: delay / power,
                        aod_az_deg: aod_az,
                        aod_el_deg: aod_el,
                        aoa_az_deg: aoa_az,
                        aoa_el_deg: aoa_el,
                        point,
                    },
                    ray_count: count,
                    pruned_count: pruned,
                    power,
                }
            })
            .collect();
        self.objective = self
            .canonical
            .iter()
            .filter(|&&i| !self.pruned[i])
            .map(|&i| rays[i].power * sq_dist(&points[i], &self.clusters[self.labels[i]].centroid.point))
            .sum();
    }
}

fn canonical_order(rays: &[RayRecord]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..rays.len()).collect();
    idx.sort_by(|&a, &b| rays[a].canonical_cmp(&rays[b]));
    idx
}

// summed in canonical order so the value does not depend on input order
fn canonical_delay_norm(rays: &[RayRecord], canonical: &[usize]) -> Result<f64> {
    let sorted: Vec<RayRecord> = canonical.iter().map(|&i| rays[i]).collect();
    rms_delay_spread(&sorted)
}

fn weighted_mean(points: &[Embedded], powers: &[f64], members: impl Iterator<Item = usize>) -> Embedded {
    let mut acc = [0.0; 7];
    let mut w = 0.0;
    for i in members {
        for (a, x) in acc.iter_mut().zip(&points[i]) {
            *a += powers[i] * x;
        }
        w += powers[i];
    }
    acc.map(|v| v / w)
}

/// Power-weighted k-means++ seeding over canonically ordered points.
fn seed_centroids(points: &[Embedded], powers: &[f64], k: usize, rng: &mut ChaCha8Rng) -> Vec<Embedded> {
    let n = points.len();
    let mut chosen = vec![false; n];
    let mut centers: Vec<Embedded> = Vec::with_capacity(k);
    let mut d2 = vec![f64::INFINITY; n];
    for _ in 0..k {
        let weights: Vec<f64> = (0..n)
            .map(|i| if chosen[i] { 0.0 } else if centers.is_empty() { powers[i] } else { powers[i] * d2[i] })
            .collect();
        let total: f64 = weights.iter().sum();
        let pick = if total > 0.0 {
            let mut u = rng.random::<f64>() * total;
            let mut pick = None;
            for (i, &w) in weights.iter().enumerate() {
                if w > 0.0 {
                    pick = Some(i);
                    if u < w {
                        break;
                    }
                    u -= w;
                }
            }
            pick.expect("positive total weight")
        } else {
            // remaining points coincide with existing centers
            let free: Vec<usize> = (0..n).filter(|&i| !chosen[i]).collect();
            free[rng.random_range(0..free.len())]
        };
        chosen[pick] = true;
        centers.push(points[pick]);
        for i in 0..n {
            d2[i] = d2[i].min(sq_dist(&points[i], &points[pick]));
        }
    }
    centers
}

fn nearest(p: &Embedded, centers: &[Embedded]) -> usize {
    let mut best = (0, f64::INFINITY);
    for (c, center) in centers.iter().enumerate() {
        let d = sq_dist(p, center);
        if d < best.1 {
            best = (c, d);
        }
    }
    best.0
}

/// K-power-means: nearest-centroid assignment by MCD alternating with
/// power-weighted centroid updates, until assignments stop changing or
/// [`MAX_ITERATIONS`] is reached. Clusters that empty out are dropped.
pub fn kpower_means(rays: &[RayRecord], k: usize, seed: u64, zeta: f64) -> Result<ClusterSet> {
    if rays.is_empty() {
        return Err(Error::invalid("no rays to cluster"));
    }
    if k == 0 || k > rays.len() {
        return Err(Error::invalid(format!("k must be within [1, {}], got {k}", rays.len())));
    }
    if !(zeta.is_finite() && zeta >= 0.0) {
        return Err(Error::invalid(format!("delay weight zeta must be non-negative, got {zeta}")));
    }
    let canonical = canonical_order(rays);
    let delay_norm_ns = canonical_delay_norm(rays, &canonical)?;
    // work in canonical order so the result is independent of input order
    let points: Vec<Embedded> = canonical.iter().map(|&i| embed(&rays[i], zeta, delay_norm_ns)).collect();
    let powers: Vec<f64> = canonical.iter().map(|&i| rays[i].power).collect();
    let n = points.len();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centers = seed_centroids(&points, &powers, k, &mut rng);
    let mut labels = vec![usize::MAX; n];
    let mut history = Vec::new();
    let mut iterations = 0;
    while iterations < MAX_ITERATIONS {
        let next: Vec<usize> = points.iter().map(|p| nearest(p, &centers)).collect();
        if next == labels {
            break;
        }
        iterations += 1;
        labels = next;
        // drop empty clusters and compact labels
        let mut remap = vec![usize::MAX; centers.len()];
        let mut live = 0;
        for &l in &labels {
            if remap[l] == usize::MAX {
                remap[l] = 0;
            }
        }
        for slot in remap.iter_mut() {
            if *slot != usize::MAX {
                *slot = live;
                live += 1;
            }
        }
        for l in labels.iter_mut() {
            *l = remap[*l];
        }
        centers = (0..live)
            .map(|c| weighted_mean(&points, &powers, (0..n).filter(|&i| labels[i] == c)))
            .collect();
        let objective: f64 = (0..n).map(|i| powers[i] * sq_dist(&points[i], &centers[labels[i]])).sum();
        history.push(objective);
    }

    // label clusters by first appearance in canonical order
    let mut relabel = vec![usize::MAX; centers.len()];
    let mut next_label = 0;
    for &l in &labels {
        if relabel[l] == usize::MAX {
            relabel[l] = next_label;
            next_label += 1;
        }
    }
    let mut out_labels = vec![0; n];
    for (pos, &ray) in canonical.iter().enumerate() {
        out_labels[ray] = relabel[labels[pos]];
    }
    let mut cs = ClusterSet {
        labels: out_labels,
        pruned: vec![false; n],
        clusters: Vec::new(),
        objective: 0.0,
        objective_history: history,
        iterations,
        zeta,
        delay_norm_ns,
        canonical,
    };
    cs.refresh(rays, next_label);
    Ok(cs)
}

/// Removes each cluster's most distant rays (by MCD to the centroid) while
/// the cluster still keeps at least a fraction `p` of its rays and `s` of its
/// power. Every cluster keeps at least one ray. Pruned rays are flagged, not
/// reassigned; centroids are recomputed from the retained rays.
pub fn shape_prune(cs: &ClusterSet, rays: &[RayRecord], p: f64, s: f64) -> Result<ClusterSet> {
    if !(s > 0.0 && s <= p && p <= 1.0) {
        return Err(Error::invalid(format!("pruning fractions need 0 < s <= p <= 1, got p={p} s={s}")));
    }
    if rays.len() != cs.labels.len() {
        return Err(Error::invalid("ray list does not match the cluster set"));
    }
    const EPS: f64 = 1e-12;
    let rank: Vec<usize> = {
        let mut r = vec![0; rays.len()];
        for (pos, &i) in cs.canonical.iter().enumerate() {
            r[i] = pos;
        }
        r
    };
    let mut out = cs.clone();
    for (c, info) in cs.clusters.iter().enumerate() {
        let mut members: Vec<(usize, f64)> = cs
            .members(c)
            .map(|i| (i, sq_dist(&embed(&rays[i], cs.zeta, cs.delay_norm_ns), &info.centroid.point)))
            .collect();
        // farthest first; ties resolved by canonical position
        members.sort_by(|a, b| b.1.total_cmp(&a.1).then(rank[a.0].cmp(&rank[b.0])));
        let n = members.len() as f64;
        let total: f64 = members.iter().map(|&(i, _)| rays[i].power).sum();
        let mut kept = members.len();
        let mut kept_power = total;
        for &(i, _) in &members {
            let after_count = (kept - 1) as f64;
            let after_power = kept_power - rays[i].power;
            if kept == 1 || after_count < p * n - EPS * n || after_power < s * total - EPS * total {
                break;
            }
            out.pruned[i] = true;
            kept -= 1;
            kept_power = after_power;
        }
    }
    out.refresh(rays, cs.clusters.len());
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClusteringConfig {
    pub k_min: usize,
    pub k_max: usize,
    pub prune_p: f64,
    pub prune_s: f64,
    pub restarts: usize,
    /// Delay weight in the MCD.
    pub zeta: f64,
    pub seed: u64,
}

impl Default for ClusteringConfig {
    fn default() -> Self {
        ClusteringConfig { k_min: 2, k_max: 8, prune_p: 0.98, prune_s: 0.95, restarts: 50, zeta: 1.0, seed: 0 }
    }
}

impl ClusteringConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k_min == 0 || self.k_min > self.k_max {
            return Err(Error::config(format!("need 1 <= k_min <= k_max, got {}..{}", self.k_min, self.k_max)));
        }
        if !(self.prune_s > 0.0 && self.prune_s <= self.prune_p && self.prune_p <= 1.0) {
            return Err(Error::config(format!(
                "need 0 < prune_s <= prune_p <= 1, got p={} s={}",
                self.prune_p, self.prune_s
            )));
        }
        if self.restarts == 0 {
            return Err(Error::config("restarts must be at least 1"));
        }
        if !(self.zeta.is_finite() && self.zeta >= 0.0) {
            return Err(Error::config("zeta must be non-negative"));
        }
        Ok(())
    }

    pub fn restart_seed(&self, restart: usize) -> u64 {
        self.seed.wrapping_add(restart as u64)
    }
}

/// SplitMix64 finalizer, used to derive per-k seeds within a restart.
fn mix_seed(seed: u64, k: usize) -> u64 {
    let mut z = seed ^ (k as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Caliński–Harabasz ratio on the embedded points; `None` where undefined.
pub fn calinski_harabasz(cs: &ClusterSet, rays: &[RayRecord]) -> Option<f64> {
    let k = cs.cluster_count();
    let n = rays.len();
    if k < 2 || k >= n {
        return None;
    }
    let points: Vec<Embedded> = rays.iter().map(|r| embed(r, cs.zeta, cs.delay_norm_ns)).collect();
    let powers: Vec<f64> = rays.iter().map(|r| r.power).collect();
    let global = weighted_mean(&points, &powers, cs.canonical.iter().copied());
    let between: f64 = cs.clusters.iter().map(|c| c.power * sq_dist(&c.centroid.point, &global)).sum();
    let within = cs.objective;
    let ratio = (between / (k - 1) as f64) / (within / (n - k) as f64);
    (!ratio.is_nan()).then_some(ratio)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RestartSummary {
    pub restart: usize,
    pub seed: u64,
    pub selected_k: usize,
    pub cluster_count: usize,
    pub objective: f64,
    pub validity: Option<f64>,
    pub objective_history: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiRestartResult {
    pub best: ClusterSet,
    pub best_restart: usize,
    pub restarts: Vec<RestartSummary>,
}

/// One restart: sweep k, keep the best validity index, then shape-prune.
pub fn cluster_single_run(rays: &[RayRecord], cfg: &ClusteringConfig, seed: u64) -> Result<(ClusterSet, RestartSummary)> {
    cfg.validate()?;
    if rays.is_empty() {
        return Err(Error::invalid("no rays to cluster"));
    }
    let k_hi = cfg.k_max.min(rays.len());
    let k_lo = cfg.k_min.min(k_hi);
    let mut best: Option<(ClusterSet, Option<f64>, usize)> = None;
    for k in k_lo..=k_hi {
        let cs = kpower_means(rays, k, mix_seed(seed, k), cfg.zeta)?;
        let score = calinski_harabasz(&cs, rays);
        let better = match &best {
            None => true,
            Some((_, None, _)) => score.is_some(),
            Some((_, Some(b), _)) => score.is_some_and(|s| s > *b),
        };
        if better {
            best = Some((cs, score, k));
        }
    }
    let (cs, validity, k) = best.expect("k range is non-empty");
    let history = cs.objective_history.clone();
    let pruned = shape_prune(&cs, rays, cfg.prune_p, cfg.prune_s)?;
    let summary = RestartSummary {
        restart: 0,
        seed,
        selected_k: k,
        cluster_count: pruned.cluster_count(),
        objective: pruned.objective,
        validity,
        objective_history: history,
    };
    Ok((pruned, summary))
}

/// Runs `cfg.restarts` independently seeded runs (seed base + r for r = 1..=R)
/// and keeps the one with the fewest clusters; ties go to the lower
/// objective, then to the earlier restart.
pub fn cluster_multirestart(rays: &[RayRecord], cfg: &ClusteringConfig) -> Result<MultiRestartResult> {
    cfg.validate()?;
    let runs: Vec<(ClusterSet, RestartSummary)> = (1..=cfg.restarts)
        .into_par_iter()
        .map(|r| {
            let (cs, mut summary) = cluster_single_run(rays, cfg, cfg.restart_seed(r))?;
            summary.restart = r;
            Ok((cs, summary))
        })
        .collect::<Result<_>>()?;
    let mut best = 0;
    for (i, (_, s)) in runs.iter().enumerate().skip(1) {
        let b = &runs[best].1;
        let order = s
            .cluster_count
            .cmp(&b.cluster_count)
            .then(s.objective.total_cmp(&b.objective));
        if order == Ordering::Less {
            best = i;
        }
    }
    let restarts = runs.iter().map(|(_, s)| s.clone()).collect();
    let best_restart = runs[best].1.restart;
    let best = runs.into_iter().nth(best).map(|(cs, _)| cs).expect("at least one restart");
    Ok(MultiRestartResult { best, best_restart, restarts })
}
