//! Facade loss for low- and high-loss buildings, and total outdoor-to-indoor
//! loss with depth and incidence angle.

use mmwave_channel::penetration::{bpl, o2i_loss, BplClass, O2iConfig};
use mmwave_channel::units::Frequency;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    println!("{:>8} {:>10} {:>10}", "f (GHz)", "low-loss", "high-loss");
    for g in [0.5, 2.9, 6.0, 28.0, 38.0, 60.0, 73.0, 100.0] {
        let f = Frequency::from_ghz(g)?;
        println!("{g:>8} {:>10.3} {:>10.3}", bpl(BplClass::LowLoss, f), bpl(BplClass::HighLoss, f));
    }

    let cfg = O2iConfig::default();
    let f = Frequency::from_ghz(28.0)?;
    println!("\nO2I at 28 GHz, low-loss facade ({} dB/m, up to {} dB surcharge):", cfg.depth_loss_db_per_m, cfg.incidence_surcharge_max_db);
    for (depth, angle) in [(0.0, 0.0), (5.0, 0.0), (5.0, 45.0), (20.0, 60.0)] {
        println!("  depth {depth:>4} m, incidence {angle:>4}°: {:.2} dB", o2i_loss(BplClass::LowLoss, f, depth, angle, &cfg)?);
    }
    Ok(())
}
