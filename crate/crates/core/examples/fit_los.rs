//! Fits d1/d2 and NYU-squared LOS models to Bernoulli samples and compares
//! them with the fixed 3GPP UMa parameters.

use mmwave_channel::catalog::Environment;
use mmwave_channel::fitting::{compare_los_models, LosSample, DEFAULT_LOS_BIN_M};
use mmwave_channel::los::{p_los_d1d2, D1D2Params};
use mmwave_channel::units::Distance2D;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let truth = D1D2Params::new(20.0, 66.0)?;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let samples: Vec<LosSample> = (0..10_000)
        .map(|_| {
            let d = Distance2D::from_m(rng.random_range(1.0..300.0)).expect("positive");
            LosSample { d, los: rng.random::<f64>() < p_los_d1d2(&truth, d) }
        })
        .collect();
    println!("10000 samples drawn from d1={} d2={}\n", truth.d1, truth.d2);
    let cmp = compare_los_models(&samples, DEFAULT_LOS_BIN_M, Environment::Uma.los_params())?;
    print!("{}", cmp.to_table());
    Ok(())
}
