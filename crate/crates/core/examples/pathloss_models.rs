//! Path loss of the CI, CIF and ABG models for every catalog scenario.
//!
//! cargo run --example pathloss_models -- 28

use mmwave_channel::catalog::catalog;
use mmwave_channel::pathloss::{fspl_1m, CifModel};
use mmwave_channel::units::{Distance2D, Frequency};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let ghz: f64 = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(28.0);
    let f = Frequency::from_ghz(ghz)?;
    println!("FSPL at 1 m, {ghz} GHz: {:.3} dB\n", fspl_1m(f));

    let dists = [10.0, 50.0, 100.0, 200.0, 500.0];
    print!("{:<13} {:>5}", "scenario", "model");
    for d in dists {
        print!(" {:>8}", format!("{d} m"));
    }
    println!();
    for p in catalog() {
        let mut rows = vec![("CI", mmwave_channel::pathloss::PathLossModel::Ci(p.ci_model()))];
        if let Ok(abg) = p.abg_model() {
            rows.push(("ABG", mmwave_channel::pathloss::PathLossModel::Abg(abg)));
        }
        for (name, model) in rows {
            print!("{:<13} {name:>5}", p.scenario.name());
            for d in dists {
                print!(" {:>8.2}", model.eval(f, Distance2D::from_m(d)?)?);
            }
            println!();
        }
    }

    // a frequency-weighted exponent, centred at 24 GHz
    let cif = CifModel::new(3.0, 0.06, Frequency::from_ghz(24.0)?)?;
    println!("\nCIF n=3.0 b=0.06 f0=24 GHz:");
    for g in [2.9, 28.0, 73.0] {
        let f = Frequency::from_ghz(g)?;
        println!("  {g:>5} GHz: exponent {:.3}, PL(100 m) {:.2} dB", cif.exponent_at(f), cif.eval(f, Distance2D::from_m(100.0)?)?);
    }
    Ok(())
}
