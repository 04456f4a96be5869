//! Independent oracles and data generators shared by the integration tests.
#![allow(dead_code)]

use mmwave_channel::geometry::{BuildingMap, Point, Polygon};
use mmwave_channel::rays::RayRecord;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

pub type P = (f64, f64);

fn orient(a: P, b: P, c: P) -> f64 {
    (b.0 - a.0) * (c.1 - a.1) - (b.1 - a.1) * (c.0 - a.0)
}

fn between(a: f64, b: f64, x: f64) -> bool {
    a.min(b) <= x && x <= a.max(b)
}

/// Closed segments share at least one point. Written from the parametric
/// form so it shares no code path with the library test.
pub fn oracle_segments_meet(p: P, q: P, a: P, b: P) -> bool {
    let r = (q.0 - p.0, q.1 - p.1);
    let s = (b.0 - a.0, b.1 - a.1);
    let denom = r.0 * s.1 - r.1 * s.0;
    let w = (a.0 - p.0, a.1 - p.1);
    if denom != 0.0 {
        let t_num = w.0 * s.1 - w.1 * s.0;
        let u_num = w.0 * r.1 - w.1 * r.0;
        // compare t, u against [0, 1] without dividing
        let within = |num: f64| if denom > 0.0 { 0.0 <= num && num <= denom } else { denom <= num && num <= 0.0 };
        return within(t_num) && within(u_num);
    }
    if orient(p, q, a) != 0.0 {
        return false;
    }
    // collinear: overlap of projections
    if p.0 != q.0 || a.0 != b.0 {
        between(p.0, q.0, a.0) || between(p.0, q.0, b.0) || between(a.0, b.0, p.0) || between(a.0, b.0, q.0)
    } else {
        between(p.1, q.1, a.1) || between(p.1, q.1, b.1) || between(a.1, b.1, p.1) || between(a.1, b.1, q.1)
    }
}

fn on_edge(a: P, b: P, x: P) -> bool {
    orient(a, b, x) == 0.0 && between(a.0, b.0, x.0) && between(a.1, b.1, x.1)
}

/// Crossing-number point-in-polygon; boundary counts as inside.
pub fn oracle_inside(poly: &[P], x: P) -> bool {
    let n = poly.len();
    let mut inside = false;
    for i in 0..n {
        let (a, b) = (poly[i], poly[(i + 1) % n]);
        if on_edge(a, b, x) {
            return true;
        }
        if (a.1 > x.1) != (b.1 > x.1) {
            let xc = a.0 + (x.1 - a.1) * (b.0 - a.0) / (b.1 - a.1);
            if x.0 < xc {
                inside = !inside;
            }
        }
    }
    inside
}

pub fn oracle_indoor(polys: &[Vec<P>], x: P) -> bool {
    polys.iter().any(|p| oracle_inside(p, x))
}

/// LOS iff the UE is outdoors and no polygon edge meets the closed segment.
pub fn oracle_los(polys: &[Vec<P>], ap: P, ue: P) -> bool {
    if oracle_indoor(polys, ue) {
        return false;
    }
    !polys.iter().any(|poly| {
        (0..poly.len()).any(|i| oracle_segments_meet(ap, ue, poly[i], poly[(i + 1) % poly.len()]))
    })
}

pub fn to_map(polys: &[Vec<P>]) -> BuildingMap {
    let polygons = polys
        .iter()
        .map(|p| Polygon::new(p.iter().map(|&(x, y)| Point::new(x, y)).collect()).expect("generated polygon is simple"))
        .collect();
    BuildingMap::new(polygons).expect("generated buildings are disjoint")
}

/// Star-shaped polygon with `k` vertices around `c`; always simple.
fn star(rng: &mut ChaCha8Rng, c: P, r_max: f64, k: usize) -> Vec<P> {
    let mut angles: Vec<f64> = (0..k).map(|_| rng.random::<f64>() * std::f64::consts::TAU).collect();
    angles.sort_by(f64::total_cmp);
    angles.dedup_by(|a, b| (*a - *b).abs() < 1e-3);
    let mut pts: Vec<P> = angles
        .iter()
        .map(|&t| {
            let r = r_max * (0.3 + 0.7 * rng.random::<f64>());
            (c.0 + r * t.cos(), c.1 + r * t.sin())
        })
        .collect();
    if pts.len() < 3 || !star_ok(&pts, c) {
        pts = vec![(c.0 - r_max * 0.5, c.1 - r_max * 0.5), (c.0 + r_max * 0.5, c.1 - r_max * 0.5), (c.0, c.1 + r_max * 0.5)];
    }
    pts
}

// centre strictly inside every edge's left half-plane wedge
fn star_ok(pts: &[P], c: P) -> bool {
    (0..pts.len()).all(|i| orient(pts[i], pts[(i + 1) % pts.len()], c) > 0.0)
}

/// Random map on a grid of `cells`×`cells` blocks of `block` m; each block
/// holds a building with probability 0.6, either a random star-shaped
/// polygon or an axis-aligned rectangle.
pub fn random_map(rng: &mut ChaCha8Rng, cells: usize, block: f64) -> Vec<Vec<P>> {
    let mut polys = Vec::new();
    for i in 0..cells {
        for j in 0..cells {
            if rng.random::<f64>() > 0.6 {
                continue;
            }
            let c = ((i as f64 + 0.5) * block, (j as f64 + 0.5) * block);
            let half = block * 0.4;
            if rng.random::<bool>() {
                let k = rng.random_range(3..9);
                polys.push(star(rng, c, half, k));
            } else {
                let w = half * (0.3 + 0.7 * rng.random::<f64>());
                let h = half * (0.3 + 0.7 * rng.random::<f64>());
                polys.push(vec![(c.0 - w, c.1 - h), (c.0 + w, c.1 - h), (c.0 + w, c.1 + h), (c.0 - w, c.1 + h)]);
            }
        }
    }
    polys
}

/// Integer-vertex map: rectangles and triangles inside 10×10 cells, so
/// integer AP/UE points often graze vertices and run along edges.
pub fn random_integer_map(rng: &mut ChaCha8Rng, cells: i32) -> Vec<Vec<P>> {
    let mut polys = Vec::new();
    for i in 0..cells {
        for j in 0..cells {
            if rng.random::<f64>() > 0.6 {
                continue;
            }
            let (x0, y0) = (i * 10 + 1, j * 10 + 1);
            let a = (x0 + rng.random_range(0..3), y0 + rng.random_range(0..3));
            let b = (x0 + rng.random_range(5..9), y0 + rng.random_range(5..9));
            let poly: Vec<(i32, i32)> = if rng.random::<bool>() {
                vec![(a.0, a.1), (b.0, a.1), (b.0, b.1), (a.0, b.1)]
            } else {
                vec![(a.0, a.1), (b.0, a.1), (a.0, b.1)]
            };
            polys.push(poly.into_iter().map(|(x, y)| (f64::from(x), f64::from(y))).collect());
        }
    }
    polys
}

/// Expected LOS fraction of UEs uniform over the annulus r_min..r_max that
/// fall in [lo, hi): ∫ p(r)·r dr / ∫ r dr over the overlap, Simpson's rule.
pub fn disc_bin_expectation(p: impl Fn(f64) -> f64, lo: f64, hi: f64, r_min: f64, r_max: f64) -> f64 {
    let (a, b) = (lo.max(r_min), hi.min(r_max));
    assert!(b > a, "bin outside the placement annulus");
    let n = 4000;
    let h = (b - a) / n as f64;
    let mut num = 0.0;
    for i in 0..=n {
        let r = a + i as f64 * h;
        let w = if i == 0 || i == n { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
        num += w * p(r) * r;
    }
    num *= h / 3.0;
    num / ((b * b - a * a) / 2.0)
}

/// Rays around each (azimuth, delay) center with Gaussian jitter; departure
/// and arrival azimuths are mirrored.
pub fn ray_groups(centers: &[(f64, f64)], per: usize, jitter_deg: f64, jitter_ns: f64, seed: u64) -> Vec<RayRecord> {
    use rand::SeedableRng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let na = Normal::new(0.0, jitter_deg).unwrap();
    let nd = Normal::new(0.0, jitter_ns).unwrap();
    let mut out = Vec::new();
    for &(az, delay) in centers {
        for _ in 0..per {
            let power_db = rng.random_range(-20.0..0.0);
            let a = az + na.sample(&mut rng);
            let el = na.sample(&mut rng);
            out.push(
                RayRecord::from_db((delay + nd.sample(&mut rng)).max(0.0), (a, el), (-a, -el), power_db, None).unwrap(),
            );
        }
    }
    out
}
