//! A UMi street-canyon drop with indoor users and correlated shadowing.

use mmwave_channel::catalog::Environment;
use mmwave_channel::dropsim::{run_drop, DropConfig, SfMode};
use mmwave_channel::units::Frequency;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut cfg = DropConfig::disc(Environment::UmiStreetCanyon, Frequency::from_ghz(28.0)?, 20_000, 250.0, 7);
    cfg.indoor_fraction = 0.3;
    cfg.high_loss_fraction = 0.5;
    cfg.random_incidence = true;
    cfg.sf_mode = SfMode::ExpCorrelated { decorrelation_m: 15.0 };

    let result = run_drop(&cfg, None)?;
    let s = &result.summary;
    println!("config sha256 {}", s.config_sha256);
    println!("{} links, {} indoor, LOS fraction {:.3}", s.link_count, s.indoor_count, s.los_fraction);
    println!("\n{:>10} {:>7} {:>9} {:>9}", "bin (m)", "links", "LOS", "model");
    for b in &s.los_fraction_bins {
        println!("{:>4}-{:<5} {:>7} {:>9.4} {:>9.4}", b.lo_m, b.hi_m, b.count, b.los_fraction, b.mean_p_los.unwrap_or(f64::NAN));
    }
    println!("\ncoupling loss percentiles:");
    for p in s.coupling_loss_cdf.iter().filter(|p| p.percentile as u32 % 10 == 5) {
        println!("  {:>3}%: {:.1} dB", p.percentile, p.coupling_loss_db);
    }
    Ok(())
}
