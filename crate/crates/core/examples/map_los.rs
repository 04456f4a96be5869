//! Map-based LOS: a Manhattan grid, blockage tests, facade crossing for an
//! indoor user, and a map-mode drop over a handful of positions.

use mmwave_channel::catalog::Environment;
use mmwave_channel::dropsim::{run_drop, DropConfig, LosMode, Placement};
use mmwave_channel::geometry::{BuildingMap, Point};
use mmwave_channel::units::Frequency;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // 4 × 4 blocks of 40 m with 20 m streets; the AP sits in a street
    let map = BuildingMap::manhattan(Point::new(0.0, 0.0), 4, 4, 40.0, 20.0)?;
    let ap = Point::new(50.0, 10.0);
    for ue in [Point::new(50.0, 200.0), Point::new(110.0, 110.0), Point::new(170.0, 10.0), Point::new(20.0, 20.0)] {
        print!("UE ({:>5}, {:>5}): ", ue.x, ue.y);
        if map.is_indoor(ue) {
            let w = map.outer_wall_distance(ap, ue)?;
            println!("indoor, wall at {:.1} m, depth {:.1} m, incidence {:.1}°", w.wall_distance_m, w.depth_m, w.incidence_deg);
        } else {
            println!("{}", if map.is_los(ap, ue)? { "LOS" } else { "blocked" });
        }
    }

    let mut cfg = DropConfig::disc(Environment::UmiStreetCanyon, Frequency::from_ghz(28.0)?, 0, 1.0, 5);
    cfg.ue_count = None;
    cfg.ap_positions = vec![ap];
    cfg.los_mode = LosMode::Map;
    cfg.placement = Placement::Explicit { positions: (0..12).map(|i| Point::new(5.0 + 20.0 * i as f64, 130.0)).collect() };
    let result = run_drop(&cfg, Some(&map))?;
    println!("\nmap-mode drop along y = 130 m:");
    for l in &result.links {
        println!(
            "  x={:>5}: {:<7} PL {:>6.1} dB, O2I {:>5.1} dB, coupling {:>6.1} dB",
            l.position.x,
            if l.indoor { "indoor" } else if l.los { "LOS" } else { "NLOS" },
            l.pl_db,
            l.o2i_db,
            l.coupling_loss_db
        );
    }
    Ok(())
}
