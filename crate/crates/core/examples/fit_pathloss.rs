//! Fits CI, CIF and ABG models to synthetic multi-frequency NLOS measurements.

use mmwave_channel::catalog::ScenarioId;
use mmwave_channel::fitting::{fit, FitModelKind, PathLossSample};
use mmwave_channel::pathloss::PathLossModel;
use mmwave_channel::units::{Distance2D, Frequency};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let truth = ScenarioId::UmiStreetCanyonNlos.params();
    let abg = truth.abg_model()?;
    let sigma = truth.abg.expect("NLOS rows carry ABG").sigma_db;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let noise = Normal::new(0.0, sigma)?;

    let mut samples = Vec::new();
    for &ghz in &[2.9, 28.0, 73.0] {
        let f = Frequency::from_ghz(ghz)?;
        for _ in 0..400 {
            let d = Distance2D::from_m(10f64.powf(rng.random_range(1.0..2.7)))?;
            samples.push(PathLossSample::new(f, d, abg.eval(f, d)? + noise.sample(&mut rng), false));
        }
    }
    println!("generated {} samples from ABG α={} β={} γ={} σ={sigma} dB", samples.len(), abg.alpha, abg.beta, abg.gamma);

    for kind in [FitModelKind::Ci, FitModelKind::Cif, FitModelKind::Abg] {
        let r = fit(kind, &samples)?;
        let params = match r.model {
            PathLossModel::Ci(m) => format!("n={:.3}", m.n),
            PathLossModel::Cif(m) => format!("n={:.3} b={:.4} f0={:.2} GHz", m.n, m.b, m.f0_ghz),
            PathLossModel::Abg(m) => format!("α={:.3} β={:.2} γ={:.3}", m.alpha, m.beta, m.gamma),
        };
        println!("{kind:?}: {params}, σ={:.3} dB, mean residual {:+.3} dB", r.sf_sigma_db, r.residual_mean_db);
    }
    Ok(())
}
