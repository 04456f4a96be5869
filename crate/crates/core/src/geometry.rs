//! Map-based LOS determination on a 2D building map.
//!
//! A link is LOS when the straight AP-UE segment touches no building edge and
//! the UE is outdoors. Touching a vertex or sliding along an edge counts as
//! blocked. Points on a building boundary are classified as indoor.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative slack on segment parameters when locating wall crossings.
const PARAM_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn distance(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }
}

impl From<[f64; 2]> for Point {
    fn from([x, y]: [f64; 2]) -> Self {
        Point { x, y }
    }
}

impl From<Point> for [f64; 2] {
    fn from(p: Point) -> Self {
        [p.x, p.y]
    }
}

fn cross(a: Point, b: Point) -> f64 {
    a.x * b.y - a.y * b.x
}

fn dot(a: Point, b: Point) -> f64 {
    a.x * b.x + a.y * b.y
}

/// Sign of the turn a → b → c: positive for counterclockwise.
fn orient(a: Point, b: Point, c: Point) -> f64 {
    cross(b.sub(a), c.sub(a))
}

fn within_box(a: Point, b: Point, p: Point) -> bool {
    p.x >= a.x.min(b.x) && p.x <= a.x.max(b.x) && p.y >= a.y.min(b.y) && p.y <= a.y.max(b.y)
}

fn on_segment(a: Point, b: Point, p: Point) -> bool {
    orient(a, b, p) == 0.0 && within_box(a, b, p)
}

/// Closed-segment intersection test, including touching and collinear overlap.
pub fn segments_intersect(p1: Point, p2: Point, q1: Point, q2: Point) -> bool {
    let d1 = orient(q1, q2, p1);
    let d2 = orient(q1, q2, p2);
    let d3 = orient(p1, p2, q1);
    let d4 = orient(p1, p2, q2);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    (d1 == 0.0 && within_box(q1, q2, p1))
        || (d2 == 0.0 && within_box(q1, q2, p2))
        || (d3 == 0.0 && within_box(p1, p2, q1))
        || (d4 == 0.0 && within_box(p1, p2, q2))
}

/// A simple polygon stored counterclockwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Point>", into = "Vec<Point>")]
pub struct Polygon {
    vertices: Vec<Point>,
}

impl Polygon {
    /// Validates vertex count and simplicity; clockwise input is reversed.
    pub fn new(mut vertices: Vec<Point>) -> Result<Self> {
        if vertices.len() > 3 && vertices.first() == vertices.last() {
            vertices.pop();
        }
        if vertices.len() < 3 {
            return Err(Error::Map(format!("polygon needs at least 3 vertices, got {}", vertices.len())));
        }
        if vertices.iter().any(|p| !(p.x.is_finite() && p.y.is_finite())) {
            return Err(Error::Map("polygon has a non-finite coordinate".into()));
        }
        let poly = Polygon { vertices };
        poly.check_simple()?;
        let mut poly = poly;
        if poly.signed_area() < 0.0 {
            poly.vertices.reverse();
        }
        Ok(poly)
    }

    /// Axis-aligned rectangle from two opposite corners.
    pub fn rectangle(min: Point, max: Point) -> Result<Self> {
        Polygon::new(vec![min, Point::new(max.x, min.y), max, Point::new(min.x, max.y)])
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn edges(&self) -> impl Iterator<Item = (Point, Point)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    pub fn signed_area(&self) -> f64 {
        0.5 * self.edges().map(|(a, b)| cross(a, b)).sum::<f64>()
    }

    fn check_simple(&self) -> Result<()> {
        let n = self.vertices.len();
        let edges: Vec<_> = self.edges().collect();
        for (i, &(a, b)) in edges.iter().enumerate() {
            if a == b {
                return Err(Error::Map(format!("polygon has a zero-length edge at vertex {i}")));
            }
        }
        for i in 0..n {
            for j in (i + 1)..n {
                let (a, b) = edges[i];
                let (c, d) = edges[j];
                let adjacent = j == i + 1 || (i == 0 && j == n - 1);
                if adjacent {
                    // Adjacent edges share one vertex; they must not fold back over each other.
                    let (shared, other_i, other_j) = if j == i + 1 { (b, a, d) } else { (a, b, c) };
                    if orient(other_i, shared, other_j) == 0.0
                        && dot(other_i.sub(shared), other_j.sub(shared)) > 0.0
                    {
                        return Err(Error::Map(format!("polygon edges {i} and {j} overlap")));
                    }
                } else if segments_intersect(a, b, c, d) {
                    return Err(Error::Map(format!("polygon is not simple: edges {i} and {j} intersect")));
                }
            }
        }
        Ok(())
    }

    pub fn on_boundary(&self, p: Point) -> bool {
        self.edges().any(|(a, b)| on_segment(a, b, p))
    }

    pub fn winding_number(&self, p: Point) -> i32 {
        let mut wn = 0;
        for (a, b) in self.edges() {
            if a.y <= p.y {
                if b.y > p.y && orient(a, b, p) > 0.0 {
                    wn += 1;
                }
            } else if b.y <= p.y && orient(a, b, p) < 0.0 {
                wn -= 1;
            }
        }
        wn
    }

    /// Inside or on the boundary.
    pub fn contains(&self, p: Point) -> bool {
        self.on_boundary(p) || self.winding_number(p) != 0
    }

    fn bbox(&self) -> (Point, Point) {
        let mut lo = self.vertices[0];
        let mut hi = self.vertices[0];
        for v in &self.vertices {
            lo = Point::new(lo.x.min(v.x), lo.y.min(v.y));
            hi = Point::new(hi.x.max(v.x), hi.y.max(v.y));
        }
        (lo, hi)
    }
}

impl TryFrom<Vec<Point>> for Polygon {
    type Error = Error;
    fn try_from(v: Vec<Point>) -> Result<Self> {
        Polygon::new(v)
    }
}

impl From<Polygon> for Vec<Point> {
    fn from(p: Polygon) -> Self {
        p.vertices
    }
}

/// Where the AP-UE segment first meets the UE's building.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WallCrossing {
    pub building: usize,
    pub wall_distance_m: f64,
    pub depth_m: f64,
    /// Angle between the link and the wall normal, degrees in [0, 90].
    pub incidence_deg: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Blockage {
    Los,
    GeometryBlocked,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct MapFile {
    polygons: Vec<Polygon>,
}

/// Non-overlapping simple building footprints.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MapFile", into = "MapFile")]
pub struct BuildingMap {
    polygons: Vec<Polygon>,
    #[serde(skip)]
    bboxes: Vec<(Point, Point)>,
}

impl TryFrom<MapFile> for BuildingMap {
    type Error = Error;
    fn try_from(f: MapFile) -> Result<Self> {
        BuildingMap::new(f.polygons)
    }
}

impl From<BuildingMap> for MapFile {
    fn from(m: BuildingMap) -> Self {
        MapFile { polygons: m.polygons }
    }
}

impl BuildingMap {
    /// Buildings may not intersect, touch, or contain one another.
    pub fn new(polygons: Vec<Polygon>) -> Result<Self> {
        for i in 0..polygons.len() {
            for j in (i + 1)..polygons.len() {
                let (a, b) = (&polygons[i], &polygons[j]);
                let touching = a
                    .edges()
                    .any(|(p, q)| b.edges().any(|(r, s)| segments_intersect(p, q, r, s)));
                if touching || a.contains(b.vertices[0]) || b.contains(a.vertices[0]) {
                    return Err(Error::Map(format!("buildings {i} and {j} overlap or touch")));
                }
            }
        }
        let bboxes = polygons.iter().map(Polygon::bbox).collect();
        Ok(BuildingMap { polygons, bboxes })
    }

    pub fn empty() -> Self {
        BuildingMap::default()
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Map(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("map serializes")
    }

    /// Regular Manhattan layout: `nx` × `ny` square blocks separated by streets.
    pub fn manhattan(origin: Point, nx: usize, ny: usize, block_m: f64, street_m: f64) -> Result<Self> {
        if !(block_m > 0.0 && street_m > 0.0) {
            return Err(Error::Map("block and street widths must be positive".into()));
        }
        let pitch = block_m + street_m;
        let mut polys = Vec::with_capacity(nx * ny);
        for i in 0..nx {
            for j in 0..ny {
                let lo = Point::new(origin.x + i as f64 * pitch, origin.y + j as f64 * pitch);
                let hi = Point::new(lo.x + block_m, lo.y + block_m);
                polys.push(Polygon::rectangle(lo, hi)?);
            }
        }
        BuildingMap::new(polys)
    }

    pub fn polygons(&self) -> &[Polygon] {
        &self.polygons
    }

    pub fn is_empty(&self) -> bool {
        self.polygons.is_empty()
    }

    /// Index of the building containing `p`, boundary included.
    pub fn locate(&self, p: Point) -> Option<usize> {
        self.polygons
            .iter()
            .zip(&self.bboxes)
            .position(|(poly, &(lo, hi))| within_box(lo, hi, p) && poly.contains(p))
    }

    pub fn is_indoor(&self, p: Point) -> bool {
        self.locate(p).is_some()
    }

    fn segment_blocked(&self, a: Point, b: Point) -> bool {
        let (lo, hi) = (Point::new(a.x.min(b.x), a.y.min(b.y)), Point::new(a.x.max(b.x), a.y.max(b.y)));
        self.polygons.iter().zip(&self.bboxes).any(|(poly, &(plo, phi))| {
            let overlaps = plo.x <= hi.x && phi.x >= lo.x && plo.y <= hi.y && phi.y >= lo.y;
            overlaps && poly.edges().any(|(p, q)| segments_intersect(a, b, p, q))
        })
    }

    fn require_outdoor_ap(&self, ap: Point) -> Result<()> {
        match self.locate(ap) {
            Some(i) => Err(Error::invalid(format!(
                "AP at ({}, {}) lies inside building {i}",
                ap.x, ap.y
            ))),
            None => Ok(()),
        }
    }

    pub fn is_los(&self, ap: Point, ue: Point) -> Result<bool> {
        self.require_outdoor_ap(ap)?;
        if self.is_indoor(ue) {
            return Ok(false);
        }
        Ok(!self.segment_blocked(ap, ue))
    }

    pub fn classify_blockage(&self, ap: Point, ue: Point) -> Result<Blockage> {
        Ok(if self.is_los(ap, ue)? { Blockage::Los } else { Blockage::GeometryBlocked })
    }

    /// Distance from the AP to where the link enters the UE's building, and the
    /// remaining indoor depth.
    pub fn outer_wall_distance(&self, ap: Point, ue: Point) -> Result<WallCrossing> {
        self.require_outdoor_ap(ap)?;
        let building = self
            .locate(ue)
            .ok_or_else(|| Error::invalid(format!("UE at ({}, {}) is not indoors", ue.x, ue.y)))?;
        let total = ap.distance(ue);
        let r = ue.sub(ap);
        let rr = dot(r, r);
        let mut best: Option<(f64, f64)> = None;
        for (e1, e2) in self.polygons[building].edges() {
            let s = e2.sub(e1);
            let denom = cross(r, s);
            let w = e1.sub(ap);
            let hit = if denom != 0.0 {
                let t = cross(w, s) / denom;
                let u = cross(w, r) / denom;
                let inside = |v: f64| (-PARAM_EPS..=1.0 + PARAM_EPS).contains(&v);
                (inside(t) && inside(u)).then(|| t.clamp(0.0, 1.0))
            } else if cross(w, r) == 0.0 {
                let t1 = dot(w, r) / rr;
                let t2 = dot(e2.sub(ap), r) / rr;
                let (lo, hi) = (t1.min(t2), t1.max(t2));
                (lo <= 1.0 && hi >= 0.0).then(|| lo.max(0.0))
            } else {
                None
            };
            if let Some(t) = hit {
                let cos_inc = (denom.abs() / (rr.sqrt() * dot(s, s).sqrt())).min(1.0);
                if best.is_none_or(|(bt, _)| t < bt) {
                    best = Some((t, cos_inc));
                }
            }
        }
        let (t, cos_inc) = best.ok_or_else(|| {
            Error::invalid("link does not cross the boundary of the UE building".to_string())
        })?;
        let wall = t * total;
        Ok(WallCrossing {
            building,
            wall_distance_m: wall,
            depth_m: total - wall,
            incidence_deg: cos_inc.acos().to_degrees(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(x: f64, y: f64) -> Point {
        Point::new(x, y)
    }

    fn one_building() -> BuildingMap {
        BuildingMap::new(vec![Polygon::rectangle(p(10.0, 10.0), p(20.0, 20.0)).unwrap()]).unwrap()
    }

    #[test]
    fn empty_map_always_los() {
        let m = BuildingMap::empty();
        assert!(m.is_los(p(0.0, 0.0), p(100.0, -3.0)).unwrap());
    }

    #[test]
    fn building_blocks_crossing_link() {
        let m = one_building();
        assert!(!m.is_los(p(0.0, 15.0), p(30.0, 15.0)).unwrap());
        assert!(m.is_los(p(0.0, 0.0), p(0.0, 30.0)).unwrap());
        assert_eq!(m.classify_blockage(p(0.0, 15.0), p(30.0, 15.0)).unwrap(), Blockage::GeometryBlocked);
        assert_eq!(m.classify_blockage(p(0.0, 0.0), p(0.0, 30.0)).unwrap(), Blockage::Los);
    }

    #[test]
    fn grazing_counts_as_blocked() {
        let m = one_building();
        // passes exactly through the corner (10, 10)
        assert!(!m.is_los(p(0.0, 0.0), p(30.0, 30.0)).unwrap());
        // runs along the bottom wall
        assert!(!m.is_los(p(0.0, 10.0), p(30.0, 10.0)).unwrap());
        // just below the wall
        assert!(m.is_los(p(0.0, 9.999), p(30.0, 9.999)).unwrap());
    }

    #[test]
    fn indoor_endpoints() {
        let m = one_building();
        assert!(!m.is_los(p(0.0, 0.0), p(15.0, 15.0)).unwrap());
        assert!(!m.is_los(p(0.0, 0.0), p(10.0, 12.0)).unwrap(), "boundary counts as indoor");
        assert!(matches!(m.is_los(p(15.0, 15.0), p(0.0, 0.0)), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn wall_distance_examples() {
        let m = one_building();
        let c = m.outer_wall_distance(p(0.0, 15.0), p(15.0, 15.0)).unwrap();
        assert!((c.wall_distance_m - 10.0).abs() < 1e-12);
        assert!((c.depth_m - 5.0).abs() < 1e-12);
        assert!(c.incidence_deg.abs() < 1e-9);
        let c = m.outer_wall_distance(p(0.0, 15.0), p(19.0, 15.0)).unwrap();
        assert!((c.wall_distance_m - 10.0).abs() < 1e-12);
        assert!((c.depth_m - 9.0).abs() < 1e-12);
        let c = m.outer_wall_distance(p(0.0, 15.0), p(10.0, 15.0)).unwrap();
        assert_eq!(c.depth_m, 0.0);
        assert!(m.outer_wall_distance(p(0.0, 15.0), p(30.0, 15.0)).is_err());
    }

    #[test]
    fn oblique_incidence() {
        let m = one_building();
        // enters the left wall at 45 degrees
        let c = m.outer_wall_distance(p(0.0, 5.0), p(12.0, 17.0)).unwrap();
        assert!((c.incidence_deg - 45.0).abs() < 1e-9);
        assert!((c.wall_distance_m - 10.0 * 2f64.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn rejects_bad_polygons() {
        assert!(Polygon::new(vec![p(0.0, 0.0), p(1.0, 0.0)]).is_err());
        // bow tie
        let bow = vec![p(0.0, 0.0), p(1.0, 1.0), p(1.0, 0.0), p(0.0, 1.0)];
        assert!(Polygon::new(bow).is_err());
        let dup = vec![p(0.0, 0.0), p(0.0, 0.0), p(1.0, 0.0), p(0.0, 1.0)];
        assert!(Polygon::new(dup).is_err());
        let spike = vec![p(0.0, 0.0), p(2.0, 0.0), p(1.0, 0.0), p(1.0, 1.0)];
        assert!(Polygon::new(spike).is_err());
    }

    #[test]
    fn clockwise_input_normalized() {
        let cw = Polygon::new(vec![p(0.0, 0.0), p(0.0, 1.0), p(1.0, 1.0), p(1.0, 0.0)]).unwrap();
        assert!(cw.signed_area() > 0.0);
    }

    #[test]
    fn rejects_overlapping_buildings() {
        let a = Polygon::rectangle(p(0.0, 0.0), p(10.0, 10.0)).unwrap();
        let b = Polygon::rectangle(p(5.0, 5.0), p(15.0, 15.0)).unwrap();
        let inner = Polygon::rectangle(p(2.0, 2.0), p(3.0, 3.0)).unwrap();
        assert!(BuildingMap::new(vec![a.clone(), b]).is_err());
        assert!(BuildingMap::new(vec![a, inner]).is_err());
    }

    #[test]
    fn json_round_trip() {
        let text = r#"{"polygons": [[[10,10],[20,10],[20,20],[10,20]]]}"#;
        let m = BuildingMap::from_json(text).unwrap();
        assert_eq!(m, one_building());
        let back = BuildingMap::from_json(&m.to_json()).unwrap();
        assert_eq!(back, m);
        assert!(BuildingMap::from_json(r#"{"polygons": [[[0,0],[1,1]]]}"#).is_err());
    }

    #[test]
    fn concave_building_first_crossing() {
        // U shape opening upward; link enters the left arm first
        let u = Polygon::new(vec![
            p(0.0, 0.0), p(30.0, 0.0), p(30.0, 30.0), p(20.0, 30.0),
            p(20.0, 10.0), p(10.0, 10.0), p(10.0, 30.0), p(0.0, 30.0),
        ])
        .unwrap();
        let m = BuildingMap::new(vec![u]).unwrap();
        let c = m.outer_wall_distance(p(-10.0, 20.0), p(25.0, 20.0)).unwrap();
        assert!((c.wall_distance_m - 10.0).abs() < 1e-12);
        assert!((c.depth_m - 25.0).abs() < 1e-12);
    }

    #[test]
    fn manhattan_layout() {
        let m = BuildingMap::manhattan(p(0.0, 0.0), 3, 2, 40.0, 20.0).unwrap();
        assert_eq!(m.polygons().len(), 6);
        assert!(m.is_indoor(p(20.0, 20.0)));
        assert!(!m.is_indoor(p(50.0, 20.0)));
        // straight down a street
        assert!(m.is_los(p(50.0, -10.0), p(50.0, 200.0)).unwrap());
    }
}
