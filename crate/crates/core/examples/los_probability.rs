//! LOS probability against distance for the d1/d2, NYU-squared and 3GPP UMa models.

use mmwave_channel::catalog::Environment;
use mmwave_channel::los::{p_los_3gpp_uma, p_los_d1d2, p_los_nyu_squared, UeHeight};
use mmwave_channel::units::Distance2D;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let umi = Environment::UmiStreetCanyon.los_params();
    let uma = Environment::Uma.los_params();
    println!("{:>6} {:>10} {:>10} {:>10} {:>14} {:>14}", "d (m)", "UMi d1d2", "UMi NYU²", "UMa d1d2", "UMa h=1.5 m", "UMa h=23 m");
    for d in [5.0, 18.0, 25.0, 50.0, 100.0, 150.0, 200.0, 300.0] {
        let dd = Distance2D::from_m(d)?;
        println!(
            "{d:>6} {:>10.4} {:>10.4} {:>10.4} {:>14.4} {:>14.4}",
            p_los_d1d2(&umi, dd),
            p_los_nyu_squared(&umi, dd),
            p_los_d1d2(&uma, dd),
            p_los_3gpp_uma(dd, UeHeight::from_m(1.5)?)?,
            p_los_3gpp_uma(dd, UeHeight::from_m(23.0)?)?,
        );
    }
    Ok(())
}
