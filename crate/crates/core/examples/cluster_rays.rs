//! Multi-restart K-power-means on three synthetic ray groups.

use mmwave_channel::clustering::{cluster_multirestart, ClusteringConfig};
use mmwave_channel::rays::RayRecord;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let jitter = Normal::new(0.0, 3.0)?;
    let mut rays = Vec::new();
    for (az, delay) in [(10.0, 20.0), (130.0, 250.0), (-100.0, 520.0)] {
        for _ in 0..15 {
            let a = az + jitter.sample(&mut rng);
            let aod = (a, jitter.sample(&mut rng));
            let aoa = (a + 180.0, jitter.sample(&mut rng));
            let t = delay + 2.0 * jitter.sample(&mut rng);
            rays.push(RayRecord::from_db(t, aod, aoa, rng.random_range(-25.0..0.0), None)?);
        }
    }

    let cfg = ClusteringConfig { restarts: 20, seed: 1, ..Default::default() };
    let res = cluster_multirestart(&rays, &cfg)?;
    let best = &res.best;
    println!("best restart {} of {}: {} clusters, objective {:.4}", res.best_restart, cfg.restarts, best.cluster_count(), best.objective);
    for (c, info) in best.clusters.iter().enumerate() {
        let m = &info.centroid;
        println!(
            "  cluster {c}: {:>2} rays ({} pruned), delay {:>6.1} ns, AoD {:>7.1}°, AoA {:>7.1}°",
            info.ray_count, info.pruned_count, m.delay_ns, m.aod_az_deg, m.aoa_az_deg
        );
    }
    let counts: Vec<usize> = res.restarts.iter().map(|r| r.cluster_count).collect();
    println!("cluster count per restart: {counts:?}");
    Ok(())
}
