//! Ray-level multipath components.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Wraps an azimuth into [-180, 180).
pub fn wrap_azimuth(deg: f64) -> f64 {
    let w = (deg + 180.0).rem_euclid(360.0) - 180.0;
    // rem_euclid can return 360.0 - tiny for inputs just below a multiple of 360
    if w >= 180.0 { w - 360.0 } else { w }
}

/// Unit direction vector for azimuth / elevation in degrees.
pub fn unit_vector(az_deg: f64, el_deg: f64) -> [f64; 3] {
    let (az, el) = (az_deg.to_radians(), el_deg.to_radians());
    [el.cos() * az.cos(), el.cos() * az.sin(), el.sin()]
}

/// One multipath component. Power is linear (relative); angles in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RayRecord {
    pub delay_ns: f64,
    pub aod_az_deg: f64,
    pub aod_el_deg: f64,
    pub aoa_az_deg: f64,
    pub aoa_el_deg: f64,
    pub power: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xpr_db: Option<f64>,
}

impl RayRecord {
    /// Validates and normalizes azimuths into [-180, 180).
    pub fn new(
        delay_ns: f64,
        aod: (f64, f64),
        aoa: (f64, f64),
        power: f64,
        xpr_db: Option<f64>,
    ) -> Result<Self> {
        if !delay_ns.is_finite() {
            return Err(Error::invalid("ray delay must be finite"));
        }
        if !(power.is_finite() && power > 0.0) {
            return Err(Error::invalid(format!("ray power must be positive, got {power}")));
        }
        for (name, el) in [("departure", aod.1), ("arrival", aoa.1)] {
            if !(el.is_finite() && (-90.0..=90.0).contains(&el)) {
                return Err(Error::invalid(format!("{name} elevation must be within [-90, 90], got {el}")));
            }
        }
        if !(aod.0.is_finite() && aoa.0.is_finite()) {
            return Err(Error::invalid("ray azimuth must be finite"));
        }
        if xpr_db.is_some_and(|x| !x.is_finite()) {
            return Err(Error::invalid("XPR must be finite"));
        }
        Ok(RayRecord {
            delay_ns,
            aod_az_deg: wrap_azimuth(aod.0),
            aod_el_deg: aod.1,
            aoa_az_deg: wrap_azimuth(aoa.0),
            aoa_el_deg: aoa.1,
            power,
            xpr_db,
        })
    }

    /// Same as [`RayRecord::new`] with power given in dB.
    pub fn from_db(
        delay_ns: f64,
        aod: (f64, f64),
        aoa: (f64, f64),
        power_db: f64,
        xpr_db: Option<f64>,
    ) -> Result<Self> {
        RayRecord::new(delay_ns, aod, aoa, 10f64.powf(power_db / 10.0), xpr_db)
    }

    pub fn power_db(&self) -> f64 {
        10.0 * self.power.log10()
    }

    pub fn departure_unit(&self) -> [f64; 3] {
        unit_vector(self.aod_az_deg, self.aod_el_deg)
    }

    pub fn arrival_unit(&self) -> [f64; 3] {
        unit_vector(self.aoa_az_deg, self.aoa_el_deg)
    }

    /// Total order used to canonicalize ray lists.
    pub(crate) fn canonical_cmp(&self, other: &Self) -> std::cmp::Ordering {
        let key = |r: &Self| {
            [
                r.delay_ns,
                r.aod_az_deg,
                r.aod_el_deg,
                r.aoa_az_deg,
                r.aoa_el_deg,
                r.power,
                r.xpr_db.unwrap_or(f64::NEG_INFINITY),
            ]
        };
        let (a, b) = (key(self), key(other));
        a.iter()
            .zip(&b)
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn azimuth_wrapping() {
        assert_eq!(wrap_azimuth(180.0), -180.0);
        assert_eq!(wrap_azimuth(-180.0), -180.0);
        assert_eq!(wrap_azimuth(190.0), -170.0);
        assert_eq!(wrap_azimuth(-190.0), 170.0);
        assert_eq!(wrap_azimuth(720.0 + 45.0), 45.0);
        let w = wrap_azimuth(-1e-15);
        assert!((-180.0..180.0).contains(&w));
    }

    #[test]
    fn validation() {
        assert!(RayRecord::new(0.0, (0.0, 0.0), (0.0, 0.0), 0.0, None).is_err());
        assert!(RayRecord::new(0.0, (0.0, 91.0), (0.0, 0.0), 1.0, None).is_err());
        assert!(RayRecord::new(f64::NAN, (0.0, 0.0), (0.0, 0.0), 1.0, None).is_err());
        let r = RayRecord::from_db(10.0, (270.0, 5.0), (0.0, -3.0), -10.0, Some(9.0)).unwrap();
        assert_eq!(r.aod_az_deg, -90.0);
        assert!((r.power - 0.1).abs() < 1e-15);
    }

    #[test]
    fn unit_vectors_are_unit() {
        for (az, el) in [(0.0, 0.0), (123.0, -45.0), (-179.0, 89.0)] {
            let v = unit_vector(az, el);
            let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
            assert!((n - 1.0).abs() < 1e-15);
        }
    }
}
