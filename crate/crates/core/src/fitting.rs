//! Parameter estimation from pooled multi-frequency path-loss data, and
//! LOS-probability fitting against distance-binned empirical LOS fractions.
//!
//! Path-loss fits are weighted least squares with closed-form normal
//! equations. The reported shadow-fading sigma is the population (divide by
//! total weight) root-mean-square of the residuals, i.e. the standard
//! deviation of a zero-mean shadowing term; it is the quantity each fit
//! minimizes.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::los::{p_los_d1d2, p_los_nyu_squared, D1D2Params};
use crate::pathloss::{centroid_frequency, fspl_1m, AbgModel, CiModel, CifModel, PathLossModel};
use crate::units::{Distance2D, Frequency, Warning};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathLossSample {
    pub f: Frequency,
    pub d: Distance2D,
    pub pl_db: f64,
    pub los: bool,
    #[serde(default = "unit_weight")]
    pub weight: f64,
}

fn unit_weight() -> f64 {
    1.0
}

impl PathLossSample {
    pub fn new(f: Frequency, d: Distance2D, pl_db: f64, los: bool) -> Self {
        PathLossSample { f, d, pl_db, los, weight: 1.0 }
    }

    pub fn with_weight(mut self, weight: f64) -> Self {
        self.weight = weight;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FitModelKind {
    Ci,
    Cif,
    Abg,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitReport {
    pub model: PathLossModel,
    pub sf_sigma_db: f64,
    pub mse: f64,
    /// Weighted mean residual; zero for ABG, generally not for CI/CIF.
    pub residual_mean_db: f64,
    pub sample_count: usize,
    pub total_weight: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<Warning>,
}

impl FitReport {
    pub fn kind(&self) -> FitModelKind {
        match self.model {
            PathLossModel::Ci(_) => FitModelKind::Ci,
            PathLossModel::Cif(_) => FitModelKind::Cif,
            PathLossModel::Abg(_) => FitModelKind::Abg,
        }
    }

    /// Measured minus modeled path loss for each sample.
    pub fn residuals(&self, samples: &[PathLossSample]) -> Result<Vec<f64>> {
        samples.iter().map(|s| Ok(s.pl_db - self.model.eval(s.f, s.d)?)).collect()
    }
}

fn check_samples(samples: &[PathLossSample], min: usize, anchored: bool) -> Result<()> {
    if samples.len() < min {
        return Err(Error::invalid(format!("need at least {min} samples, got {}", samples.len())));
    }
    for (i, s) in samples.iter().enumerate() {
        if !s.pl_db.is_finite() {
            return Err(Error::invalid(format!("sample {i}: path loss is not finite")));
        }
        if !(s.weight.is_finite() && s.weight > 0.0) {
            return Err(Error::invalid(format!("sample {i}: weight must be positive, got {}", s.weight)));
        }
        if anchored && s.d.m() < 1.0 {
            return Err(Error::invalid(format!(
                "sample {i}: distance {} m is below the 1 m close-in reference",
                s.d.m()
            )));
        }
    }
    Ok(())
}

fn report(model: PathLossModel, samples: &[PathLossSample], warnings: Vec<Warning>) -> Result<FitReport> {
    let mut sw = 0.0;
    let mut swr = 0.0;
    let mut swr2 = 0.0;
    for s in samples {
        let r = s.pl_db - model.eval(s.f, s.d)?;
        sw += s.weight;
        swr += s.weight * r;
        swr2 += s.weight * r * r;
    }
    let mse = swr2 / sw;
    Ok(FitReport {
        model,
        sf_sigma_db: mse.sqrt(),
        mse,
        residual_mean_db: swr / sw,
        sample_count: samples.len(),
        total_weight: sw,
        warnings,
    })
}

/// Single-parameter CI fit: n = Σ w·a·b / Σ w·b², a = PL − FSPL(f, 1 m), b = 10·log10(d).
pub fn fit_ci(samples: &[PathLossSample]) -> Result<FitReport> {
    check_samples(samples, 2, true)?;
    let (mut sab, mut sbb) = (0.0, 0.0);
    for s in samples {
        let a = s.pl_db - fspl_1m(s.f);
        let b = 10.0 * s.d.m().log10();
        sab += s.weight * a * b;
        sbb += s.weight * b * b;
    }
    if sbb == 0.0 {
        return Err(Error::SingularFit("all samples at the 1 m reference distance; PLE is unidentifiable".into()));
    }
    report(PathLossModel::Ci(CiModel { n: sab / sbb }), samples, Vec::new())
}

/// Weighted count per distinct frequency, in first-seen order.
fn frequency_counts(samples: &[PathLossSample]) -> Vec<(Frequency, f64)> {
    let mut counts: Vec<(Frequency, f64)> = Vec::new();
    for s in samples {
        match counts.iter_mut().find(|(f, _)| *f == s.f) {
            Some((_, c)) => *c += s.weight,
            None => counts.push((s.f, s.weight)),
        }
    }
    counts
}

/// Two-parameter CIF fit with f0 fixed at the weighted frequency centroid.
///
/// The model is linear in (n, n·b) with regressors x1 = 10·log10(d) and
/// x2 = x1·(f − f0)/f0; the 2×2 normal equations are solved directly.
/// Single-frequency data reverts to the CI fit with b = 0.
pub fn fit_cif(samples: &[PathLossSample]) -> Result<FitReport> {
    check_samples(samples, 2, true)?;
    let counts = frequency_counts(samples);
    if counts.len() == 1 {
        let ci = fit_ci(samples)?;
        let PathLossModel::Ci(CiModel { n }) = ci.model else { unreachable!() };
        let f0 = counts[0].0;
        let model = PathLossModel::Cif(CifModel { n, b: 0.0, f0_ghz: f0.ghz() });
        return Ok(FitReport {
            model,
            warnings: vec![Warning::CifSingleFrequency { ghz: f0.ghz() }],
            ..ci
        });
    }
    let f0 = centroid_frequency(&counts)?.ghz();
    let (mut s11, mut s12, mut s22, mut r1, mut r2) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for s in samples {
        let y = s.pl_db - fspl_1m(s.f);
        let x1 = 10.0 * s.d.m().log10();
        let x2 = x1 * (s.f.ghz() - f0) / f0;
        let w = s.weight;
        s11 += w * x1 * x1;
        s12 += w * x1 * x2;
        s22 += w * x2 * x2;
        r1 += w * x1 * y;
        r2 += w * x2 * y;
    }
    let det = s11 * s22 - s12 * s12;
    if !(det > 1e-12 * s11 * s22) {
        return Err(Error::SingularFit(
            "distance and frequency-slope regressors are collinear; (n, b) unidentifiable".into(),
        ));
    }
    let n = (r1 * s22 - r2 * s12) / det;
    let nb = (s11 * r2 - s12 * r1) / det;
    if n == 0.0 {
        return Err(Error::SingularFit("fitted PLE is zero; slope b is undefined".into()));
    }
    report(PathLossModel::Cif(CifModel { n, b: nb / n, f0_ghz: f0 }), samples, Vec::new())
}

fn distinct_count(values: impl Iterator<Item = f64>) -> usize {
    let mut v: Vec<f64> = values.collect();
    v.sort_by(f64::total_cmp);
    v.dedup();
    v.len()
}

/// Three-parameter ABG fit by ordinary (weighted) least squares on the
/// regressors (10·log10 d, 1, 10·log10 f).
pub fn fit_abg(samples: &[PathLossSample]) -> Result<FitReport> {
    check_samples(samples, 3, false)?;
    if distinct_count(samples.iter().map(|s| s.f.ghz())) < 2 {
        return Err(Error::SingularFit("gamma unidentifiable: all samples at one frequency".into()));
    }
    if distinct_count(samples.iter().map(|s| s.d.m())) < 2 {
        return Err(Error::SingularFit("alpha unidentifiable: all samples at one distance".into()));
    }
    let xs: Vec<(f64, f64, f64, f64)> = samples
        .iter()
        .map(|s| (10.0 * s.d.m().log10(), 10.0 * s.f.ghz().log10(), s.pl_db, s.weight))
        .collect();
    let sw: f64 = xs.iter().map(|x| x.3).sum();
    let mean = |k: fn(&(f64, f64, f64, f64)) -> f64| xs.iter().map(|x| x.3 * k(x)).sum::<f64>() / sw;
    let (md, mf, my) = (mean(|x| x.0), mean(|x| x.1), mean(|x| x.2));
    let (mut sdd, mut sdf, mut sff, mut sdy, mut sfy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for &(xd, xf, y, w) in &xs {
        let (cd, cf, cy) = (xd - md, xf - mf, y - my);
        sdd += w * cd * cd;
        sdf += w * cd * cf;
        sff += w * cf * cf;
        sdy += w * cd * cy;
        sfy += w * cf * cy;
    }
    let det = sdd * sff - sdf * sdf;
    if !(det > 1e-10 * sdd * sff) {
        return Err(Error::SingularFit(
            "distance and frequency regressors are collinear; alpha and gamma unidentifiable".into(),
        ));
    }
    let alpha = (sdy * sff - sfy * sdf) / det;
    let gamma = (sdd * sfy - sdf * sdy) / det;
    let beta = my - alpha * md - gamma * mf;
    report(PathLossModel::Abg(AbgModel { alpha, beta, gamma }), samples, Vec::new())
}

pub fn fit(kind: FitModelKind, samples: &[PathLossSample]) -> Result<FitReport> {
    match kind {
        FitModelKind::Ci => fit_ci(samples),
        FitModelKind::Cif => fit_cif(samples),
        FitModelKind::Abg => fit_abg(samples),
    }
}

// ---------------------------------------------------------------------------
// LOS probability
// ---------------------------------------------------------------------------

/// Search grid for (d1, d2), integer meters.
pub const D1_GRID_M: (u32, u32) = (1, 100);
pub const D2_GRID_M: (u32, u32) = (1, 300);
pub const DEFAULT_LOS_BIN_M: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LosSample {
    pub d: Distance2D,
    pub los: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LosFitModel {
    D1d2,
    NyuSquared,
}

impl LosFitModel {
    pub fn eval(self, p: &D1D2Params, d: Distance2D) -> f64 {
        match self {
            LosFitModel::D1d2 => p_los_d1d2(p, d),
            LosFitModel::NyuSquared => p_los_nyu_squared(p, d),
        }
    }
}

/// Empirical LOS fraction in `[lo_m, hi_m)`, evaluated at the mean sample distance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LosBin {
    pub lo_m: f64,
    pub hi_m: f64,
    pub mean_distance_m: f64,
    pub count: usize,
    pub los_fraction: f64,
}

/// Bins samples by 2D distance. Samples are canonically sorted first so the
/// result does not depend on input order.
pub fn bin_los_samples(samples: &[LosSample], bin_width_m: f64) -> Result<Vec<LosBin>> {
    if !(bin_width_m.is_finite() && bin_width_m > 0.0) {
        return Err(Error::invalid(format!("bin width must be positive, got {bin_width_m}")));
    }
    let mut sorted: Vec<(f64, bool)> = samples.iter().map(|s| (s.d.m(), s.los)).collect();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut bins: Vec<LosBin> = Vec::new();
    let mut acc: Option<(u64, f64, usize, usize)> = None;
    let flush = |acc: (u64, f64, usize, usize), bins: &mut Vec<LosBin>| {
        let (idx, sum_d, n, n_los) = acc;
        bins.push(LosBin {
            lo_m: idx as f64 * bin_width_m,
            hi_m: (idx + 1) as f64 * bin_width_m,
            mean_distance_m: sum_d / n as f64,
            count: n,
            los_fraction: n_los as f64 / n as f64,
        });
    };
    for (d, los) in sorted {
        let idx = (d / bin_width_m).floor() as u64;
        match acc.as_mut() {
            Some(a) if a.0 == idx => {
                a.1 += d;
                a.2 += 1;
                a.3 += los as usize;
            }
            _ => {
                if let Some(a) = acc.take() {
                    flush(a, &mut bins);
                }
                acc = Some((idx, d, 1, los as usize));
            }
        }
    }
    if let Some(a) = acc {
        flush(a, &mut bins);
    }
    Ok(bins)
}

/// Mean squared error between a model and the binned fractions, each bin weighted equally.
pub fn los_mse(bins: &[LosBin], model: impl Fn(Distance2D) -> f64) -> f64 {
    let sum: f64 = bins
        .iter()
        .map(|b| {
            let d = Distance2D::from_m(b.mean_distance_m).expect("bin distances are positive");
            let e = model(d) - b.los_fraction;
            e * e
        })
        .sum();
    sum / bins.len() as f64
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LosFit {
    pub model: LosFitModel,
    pub params: D1D2Params,
    pub mse: f64,
    pub bin_width_m: f64,
    pub bins: Vec<LosBin>,
    pub degenerate: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<Warning>,
}

fn grid_search(model: LosFitModel, bins: &[LosBin]) -> (D1D2Params, f64) {
    let rows: Vec<(f64, u32, u32)> = (D1_GRID_M.0..=D1_GRID_M.1)
        .into_par_iter()
        .map(|d1| {
            let mut best = (f64::INFINITY, d1, 0);
            for d2 in D2_GRID_M.0..=D2_GRID_M.1 {
                let p = D1D2Params { d1: d1 as f64, d2: d2 as f64 };
                let mse = los_mse(bins, |d| model.eval(&p, d));
                if mse < best.0 {
                    best = (mse, d1, d2);
                }
            }
            best
        })
        .collect();
    // rows are in d1 order, so strict < keeps the smaller d1 on ties
    let mut best = rows[0];
    for r in &rows[1..] {
        if r.0 < best.0 {
            best = *r;
        }
    }
    (D1D2Params { d1: best.1 as f64, d2: best.2 as f64 }, best.0)
}

/// Exhaustive integer-meter grid search for (d1, d2) minimizing binned MSE.
///
/// All-LOS data has no finite optimum; it is reported at the grid maximum
/// and flagged as degenerate. All-NLOS data is fitted normally but flagged.
pub fn fit_los_probability(samples: &[LosSample], model: LosFitModel, bin_width_m: f64) -> Result<LosFit> {
    let bins = bin_los_samples(samples, bin_width_m)?;
    if bins.len() < 2 {
        return Err(Error::invalid(format!(
            "LOS fit needs at least 2 non-empty distance bins, got {}",
            bins.len()
        )));
    }
    let n_los: usize = samples.iter().filter(|s| s.los).count();
    let los_fraction = n_los as f64 / samples.len() as f64;
    let all_los = n_los == samples.len();
    let degenerate = all_los || n_los == 0;
    let (params, mse) = if all_los {
        let p = D1D2Params { d1: D1_GRID_M.1 as f64, d2: D2_GRID_M.1 as f64 };
        let mse = los_mse(&bins, |d| model.eval(&p, d));
        (p, mse)
    } else {
        grid_search(model, &bins)
    };
    let warnings = if degenerate { vec![Warning::DegenerateLosData { los_fraction }] } else { Vec::new() };
    Ok(LosFit { model, params, mse, bin_width_m, bins, degenerate, warnings })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LosComparisonRow {
    pub model: String,
    pub d1: f64,
    pub d2: f64,
    pub mse: f64,
}

/// Three-row comparison: fixed 3GPP reference, fitted d1/d2, fitted NYU squared.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LosComparison {
    pub rows: Vec<LosComparisonRow>,
    pub bin_width_m: f64,
    pub bin_count: usize,
    pub degenerate: bool,
}

impl LosComparison {
    pub fn to_table(&self) -> String {
        let mut out = format!("{:<16} {:>8} {:>8} {:>10}\n", "", "d1 (m)", "d2 (m)", "MSE");
        for r in &self.rows {
            out.push_str(&format!("{:<16} {:>8} {:>8} {:>10.4}\n", r.model, r.d1, r.d2, r.mse));
        }
        out.push_str(&format!("bin width {} m, {} bins\n", self.bin_width_m, self.bin_count));
        out
    }
}

pub fn compare_los_models(samples: &[LosSample], bin_width_m: f64, reference: D1D2Params) -> Result<LosComparison> {
    reference.validate()?;
    let d1d2 = fit_los_probability(samples, LosFitModel::D1d2, bin_width_m)?;
    let nyu = fit_los_probability(samples, LosFitModel::NyuSquared, bin_width_m)?;
    let ref_mse = los_mse(&d1d2.bins, |d| p_los_d1d2(&reference, d));
    let row = |model: &str, p: D1D2Params, mse| LosComparisonRow { model: model.into(), d1: p.d1, d2: p.d2, mse };
    Ok(LosComparison {
        rows: vec![
            row("3GPP", reference, ref_mse),
            row("d1/d2", d1d2.params, d1d2.mse),
            row("NYU-squared", nyu.params, nyu.mse),
        ],
        bin_width_m,
        bin_count: d1d2.bins.len(),
        degenerate: d1d2.degenerate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn ghz(v: f64) -> Frequency {
        Frequency::from_ghz(v).unwrap()
    }
    fn m(v: f64) -> Distance2D {
        Distance2D::from_m(v).unwrap()
    }

    fn synth(model: &PathLossModel, freqs: &[f64], n: usize, sigma: f64, seed: u64) -> Vec<PathLossSample> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let noise = Normal::new(0.0, sigma.max(1e-300)).unwrap();
        (0..n)
            .map(|i| {
                let f = ghz(freqs[i % freqs.len()]);
                let d = m(10f64.powf(rng.random_range(1.0..2.7)));
                let e = if sigma > 0.0 { noise.sample(&mut rng) } else { 0.0 };
                PathLossSample::new(f, d, model.eval(f, d).unwrap() + e, false)
            })
            .collect()
    }

    fn ci_n(r: &FitReport) -> f64 {
        match r.model {
            PathLossModel::Ci(m) => m.n,
            _ => panic!("not CI"),
        }
    }

    #[test]
    fn ci_two_point_hand_solution() {
        let f = ghz(28.0);
        let fs = fspl_1m(f);
        let s = [
            PathLossSample::new(f, m(10.0), fs + 20.0, true),
            PathLossSample::new(f, m(100.0), fs + 40.0, true),
        ];
        let r = fit_ci(&s).unwrap();
        assert!((ci_n(&r) - 2.0).abs() < 1e-12);
        assert!(r.sf_sigma_db < 1e-9);
    }

    #[test]
    fn ci_noise_free_recovery() {
        let s = synth(&PathLossModel::Ci(CiModel { n: 2.5 }), &[28.0, 73.5], 200, 0.0, 1);
        let r = fit_ci(&s).unwrap();
        assert!((ci_n(&r) - 2.5).abs() < 1e-9);
        assert!(r.sf_sigma_db < 1e-9);
    }

    #[test]
    fn ci_noisy_recovery() {
        let s = synth(&PathLossModel::Ci(CiModel { n: 3.0 }), &[28.0, 73.5], 1000, 4.1, 7);
        let r = fit_ci(&s).unwrap();
        assert!((ci_n(&r) - 3.0).abs() < 0.1);
        assert!((r.sf_sigma_db - 4.1).abs() < 0.41);
    }

    #[test]
    fn ci_errors() {
        let f = ghz(28.0);
        assert!(matches!(fit_ci(&[PathLossSample::new(f, m(10.0), 90.0, true)]), Err(Error::InvalidArgument(_))));
        let at_ref = [PathLossSample::new(f, m(1.0), 61.0, true), PathLossSample::new(f, m(1.0), 62.0, true)];
        assert!(matches!(fit_ci(&at_ref), Err(Error::SingularFit(_))));
        let sub = [PathLossSample::new(f, m(0.5), 61.0, true), PathLossSample::new(f, m(10.0), 82.0, true)];
        assert!(fit_ci(&sub).is_err());
    }

    #[test]
    fn weight_equals_duplication() {
        let s = synth(&PathLossModel::Ci(CiModel { n: 3.0 }), &[28.0, 39.3], 50, 5.0, 3);
        let mut dup = s.clone();
        dup.push(s[7]);
        let mut weighted = s.clone();
        weighted[7].weight = 2.0;
        for kind in [FitModelKind::Ci, FitModelKind::Cif, FitModelKind::Abg] {
            let a = fit(kind, &dup).unwrap();
            let b = fit(kind, &weighted).unwrap();
            assert!((a.sf_sigma_db - b.sf_sigma_db).abs() < 1e-9);
            let (ra, rb) = (a.residuals(&s).unwrap(), b.residuals(&s).unwrap());
            assert!(ra.iter().zip(&rb).all(|(x, y)| (x - y).abs() < 1e-9));
        }
    }

    #[test]
    fn cif_noise_free_recovery() {
        let counts = [(ghz(28.0), 100.0), (ghz(73.5), 100.0)];
        let f0 = centroid_frequency(&counts).unwrap().ghz();
        let truth = CifModel { n: 2.8, b: 0.05, f0_ghz: f0 };
        let s = synth(&PathLossModel::Cif(truth), &[28.0, 73.5], 200, 0.0, 2);
        let r = fit_cif(&s).unwrap();
        let PathLossModel::Cif(got) = r.model else { panic!() };
        assert!((got.n - 2.8).abs() < 1e-6 && (got.b - 0.05).abs() < 1e-6);
        assert_eq!(got.f0_ghz, f0);
    }

    #[test]
    fn cif_zero_slope_under_noise() {
        let s = synth(&PathLossModel::Ci(CiModel { n: 3.0 }), &[5.6, 28.0, 73.5], 3000, 1.0, 11);
        let r = fit_cif(&s).unwrap();
        let PathLossModel::Cif(got) = r.model else { panic!() };
        assert!(got.b.abs() < 0.01, "b = {}", got.b);
    }

    #[test]
    fn cif_single_frequency_equals_ci() {
        let s = synth(&PathLossModel::Ci(CiModel { n: 3.1 }), &[28.0], 100, 6.0, 5);
        let ci = fit_ci(&s).unwrap();
        let cif = fit_cif(&s).unwrap();
        let PathLossModel::Cif(got) = cif.model else { panic!() };
        assert_eq!(got.n, ci_n(&ci));
        assert_eq!(got.b, 0.0);
        assert_eq!(cif.sf_sigma_db, ci.sf_sigma_db);
        assert_eq!(cif.warnings, vec![Warning::CifSingleFrequency { ghz: 28.0 }]);
    }

    #[test]
    fn cif_sigma_never_worse_than_ci() {
        for seed in 0..10 {
            let s = synth(&PathLossModel::Ci(CiModel { n: 2.9 }), &[10.0, 28.0, 73.5], 300, 7.0, seed);
            assert!(fit_cif(&s).unwrap().sf_sigma_db <= fit_ci(&s).unwrap().sf_sigma_db + 1e-12);
        }
    }

    #[test]
    fn abg_exact_and_residual_mean() {
        let truth = AbgModel { alpha: 3.4, beta: 19.2, gamma: 2.3 };
        let s = synth(&PathLossModel::Abg(truth), &[5.6, 28.0, 73.5], 120, 0.0, 9);
        let r = fit_abg(&s).unwrap();
        let PathLossModel::Abg(got) = r.model else { panic!() };
        assert!((got.alpha - 3.4).abs() < 1e-9);
        assert!((got.beta - 19.2).abs() < 1e-9);
        assert!((got.gamma - 2.3).abs() < 1e-9);

        let noisy = synth(&PathLossModel::Abg(truth), &[28.0, 73.5], 2000, 6.5, 4);
        let r = fit_abg(&noisy).unwrap();
        let PathLossModel::Abg(got) = r.model else { panic!() };
        assert!((got.alpha - 3.4).abs() < 0.15);
        let max_pl = noisy.iter().map(|s| s.pl_db.abs()).fold(0.0, f64::max);
        assert!(r.residual_mean_db.abs() <= 1e-9 * max_pl);
    }

    #[test]
    fn abg_rank_errors() {
        let truth = AbgModel { alpha: 3.4, beta: 19.2, gamma: 2.3 };
        let single_f = synth(&PathLossModel::Abg(truth), &[28.0], 50, 1.0, 1);
        match fit_abg(&single_f) {
            Err(Error::SingularFit(msg)) => assert!(msg.contains("gamma")),
            other => panic!("{other:?}"),
        }
        let one_d: Vec<_> = [28.0, 39.3, 73.5]
            .iter()
            .map(|&f| PathLossSample::new(ghz(f), m(50.0), 100.0 + f, false))
            .collect();
        match fit_abg(&one_d) {
            Err(Error::SingularFit(msg)) => assert!(msg.contains("alpha")),
            other => panic!("{other:?}"),
        }
        // each frequency at its own distance with d ∝ f: collinear regressors
        let collinear: Vec<_> = [(10.0, 20.0), (20.0, 40.0), (40.0, 80.0)]
            .iter()
            .map(|&(f, d)| PathLossSample::new(ghz(f), m(d), 100.0, false))
            .collect();
        assert!(matches!(fit_abg(&collinear), Err(Error::SingularFit(_))));
    }

    fn los_synth(p: D1D2Params, squared: bool, n: usize, seed: u64) -> Vec<LosSample> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                let d = m(rng.random_range(1.0..400.0));
                let prob = if squared { p_los_nyu_squared(&p, d) } else { p_los_d1d2(&p, d) };
                LosSample { d, los: rng.random::<f64>() < prob }
            })
            .collect()
    }

    #[test]
    fn binning_basics() {
        let s = [
            LosSample { d: m(1.0), los: true },
            LosSample { d: m(3.0), los: false },
            LosSample { d: m(12.0), los: true },
        ];
        let bins = bin_los_samples(&s, 10.0).unwrap();
        assert_eq!(bins.len(), 2);
        assert_eq!((bins[0].count, bins[0].los_fraction, bins[0].mean_distance_m), (2, 0.5, 2.0));
        assert_eq!((bins[1].lo_m, bins[1].hi_m), (10.0, 20.0));
        assert!(bin_los_samples(&s, 0.0).is_err());
        assert!(fit_los_probability(&s[..2], LosFitModel::D1d2, 10.0).is_err());
    }

    #[test]
    fn los_fit_recovers_generating_params() {
        let s = los_synth(D1D2Params { d1: 20.0, d2: 66.0 }, false, 10_000, 42);
        let fit = fit_los_probability(&s, LosFitModel::D1d2, DEFAULT_LOS_BIN_M).unwrap();
        assert!((fit.params.d1 - 20.0).abs() <= 2.0, "{:?}", fit.params);
        assert!((fit.params.d2 - 66.0).abs() <= 8.0, "{:?}", fit.params);
        let reference = los_mse(&fit.bins, |d| p_los_d1d2(&D1D2Params { d1: 18.0, d2: 63.0 }, d));
        assert!(fit.mse <= reference);
        assert!(!fit.degenerate);
    }

    #[test]
    fn los_fit_all_los_is_degenerate() {
        let s: Vec<_> = (1..200).map(|i| LosSample { d: m(i as f64), los: true }).collect();
        let fit = fit_los_probability(&s, LosFitModel::D1d2, 10.0).unwrap();
        assert!(fit.degenerate);
        assert_eq!(fit.params.d1, D1_GRID_M.1 as f64);
        assert!(!fit.warnings.is_empty());
    }

    #[test]
    fn los_fit_order_invariant() {
        let s = los_synth(D1D2Params { d1: 20.0, d2: 160.0 }, true, 3000, 8);
        let mut rev = s.clone();
        rev.reverse();
        let a = fit_los_probability(&s, LosFitModel::NyuSquared, 10.0).unwrap();
        let b = fit_los_probability(&rev, LosFitModel::NyuSquared, 10.0).unwrap();
        assert_eq!(a.params, b.params);
        assert_eq!(a.mse.to_bits(), b.mse.to_bits());
    }

    #[test]
    fn comparison_table_shape_and_nyu_wins_on_nyu_data() {
        let s = los_synth(D1D2Params { d1: 20.0, d2: 160.0 }, true, 10_000, 21);
        let t = compare_los_models(&s, 10.0, D1D2Params { d1: 18.0, d2: 63.0 }).unwrap();
        let names: Vec<_> = t.rows.iter().map(|r| r.model.as_str()).collect();
        assert_eq!(names, ["3GPP", "d1/d2", "NYU-squared"]);
        assert!(t.rows[2].mse < t.rows[1].mse && t.rows[2].mse < t.rows[0].mse);
        let again = compare_los_models(&s, 10.0, D1D2Params { d1: 18.0, d2: 63.0 }).unwrap();
        assert_eq!(t.rows, again.rows);
        assert!(t.to_table().contains("NYU-squared"));
    }
}
