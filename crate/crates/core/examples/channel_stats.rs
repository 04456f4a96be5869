//! Delay and angular spreads and XPR statistics, overall and per cluster.

use mmwave_channel::chanstats::spread_report;
use mmwave_channel::clustering::{cluster_multirestart, ClusteringConfig};
use mmwave_channel::rays::RayRecord;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // two arrival directions straddling the ±180° seam
    let rays = vec![
        RayRecord::from_db(0.0, (0.0, 0.0), (175.0, 2.0), 0.0, Some(14.0))?,
        RayRecord::from_db(4.0, (2.0, 1.0), (-178.0, 0.0), -2.0, Some(13.5))?,
        RayRecord::from_db(9.0, (-1.0, 0.0), (179.0, 1.0), -5.0, Some(12.0))?,
        RayRecord::from_db(180.0, (60.0, 3.0), (-120.0, 5.0), -8.0, Some(8.0))?,
        RayRecord::from_db(190.0, (62.0, 2.0), (-118.0, 4.0), -10.0, Some(7.5))?,
        RayRecord::from_db(195.0, (59.0, 2.0), (-121.0, 6.0), -12.0, Some(8.2))?,
    ];
    let cfg = ClusteringConfig { k_max: 4, restarts: 10, ..Default::default() };
    let clusters = cluster_multirestart(&rays, &cfg)?.best;
    let report = spread_report(&rays, Some(&clusters))?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}
