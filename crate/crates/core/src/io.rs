//! CSV file schemas.
//!
//! | file | columns |
//! |---|---|
//! | path-loss samples | `freq_ghz,dist_m,pl_db,los[,weight]` |
//! | LOS samples | `dist_m,los` |
//! | rays | `link_id,delay_ns,aod_az_deg,aod_el_deg,aoa_az_deg,aoa_el_deg,power_db[,xpr_db]` |
//! | cluster assignments | `link_id,ray_index,cluster,pruned` |
//!
//! Columns are matched by header name. `los` and `pruned` are 0 or 1. Lines
//! starting with `#` are comments. Errors name the offending line.

use std::io::Read;

use csv::StringRecord;

use crate::error::{Error, Result};
use crate::fitting::{LosSample, PathLossSample};
use crate::rays::RayRecord;
use crate::units::{Distance2D, Frequency};

pub const PATHLOSS_COLUMNS: [&str; 5] = ["freq_ghz", "dist_m", "pl_db", "los", "weight"];
pub const LOS_COLUMNS: [&str; 2] = ["dist_m", "los"];
pub const RAY_COLUMNS: [&str; 8] =
    ["link_id", "delay_ns", "aod_az_deg", "aod_el_deg", "aoa_az_deg", "aoa_el_deg", "power_db", "xpr_db"];
pub const ASSIGNMENT_COLUMNS: [&str; 4] = ["link_id", "ray_index", "cluster", "pruned"];

struct Table {
    index: Vec<Option<usize>>,
    rows: Vec<(u64, StringRecord)>,
}

fn input_error(line: u64, msg: impl std::fmt::Display) -> Error {
    Error::invalid(format!("line {line}: {msg}"))
}

/// Reads a CSV with `columns`, of which the first `required` must be present.
fn read_table(input: impl Read, columns: &[&str], required: usize) -> Result<Table> {
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(input);
    let header = rdr.headers().map_err(|e| Error::invalid(format!("cannot read header: {e}")))?.clone();
    let header_line = rdr.position().line().max(1);
    for h in header.iter() {
        if !columns.contains(&h) {
            return Err(input_error(
                header_line,
                format!("unknown column `{h}`; expected {}", columns.join(",")),
            ));
        }
    }
    let index: Vec<Option<usize>> = columns.iter().map(|c| header.iter().position(|h| h == *c)).collect();
    if let Some(missing) = index[..required].iter().position(Option::is_none) {
        return Err(input_error(header_line, format!("missing column `{}`", columns[missing])));
    }
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            input_error(line, e)
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        rows.push((line, rec));
    }
    Ok(Table { index, rows })
}

impl Table {
    fn field<'a>(&self, rec: &'a StringRecord, col: usize) -> Option<&'a str> {
        self.index[col].and_then(|i| rec.get(i)).filter(|s| !s.is_empty())
    }

    fn num(&self, line: u64, rec: &StringRecord, col: usize, name: &str) -> Result<f64> {
        let s = self.field(rec, col).ok_or_else(|| input_error(line, format!("missing value for `{name}`")))?;
        let v: f64 = s.parse().map_err(|_| input_error(line, format!("`{name}` is not a number: `{s}`")))?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(input_error(line, format!("`{name}` is not finite")))
        }
    }

    fn opt_num(&self, line: u64, rec: &StringRecord, col: usize, name: &str) -> Result<Option<f64>> {
        match self.field(rec, col) {
            None => Ok(None),
            Some(_) => self.num(line, rec, col, name).map(Some),
        }
    }

    fn flag(&self, line: u64, rec: &StringRecord, col: usize, name: &str) -> Result<bool> {
        match self.field(rec, col) {
            Some("0") => Ok(false),
            Some("1") => Ok(true),
            other => Err(input_error(line, format!("`{name}` must be 0 or 1, got `{}`", other.unwrap_or("")))),
        }
    }

    fn int(&self, line: u64, rec: &StringRecord, col: usize, name: &str) -> Result<usize> {
        let s = self.field(rec, col).ok_or_else(|| input_error(line, format!("missing value for `{name}`")))?;
        s.parse().map_err(|_| input_error(line, format!("`{name}` must be a non-negative integer, got `{s}`")))
    }

    fn text(&self, line: u64, rec: &StringRecord, col: usize, name: &str) -> Result<String> {
        self.field(rec, col)
            .map(str::to_string)
            .ok_or_else(|| input_error(line, format!("missing value for `{name}`")))
    }
}

fn at_line<T>(line: u64, r: Result<T>) -> Result<T> {
    r.map_err(|e| input_error(line, e))
}

pub fn read_pathloss_csv(input: impl Read) -> Result<Vec<PathLossSample>> {
    let t = read_table(input, &PATHLOSS_COLUMNS, 4)?;
    t.rows
        .iter()
        .map(|(line, rec)| {
            let line = *line;
            let f = at_line(line, Frequency::from_ghz(t.num(line, rec, 0, "freq_ghz")?))?;
            let d = at_line(line, Distance2D::from_m(t.num(line, rec, 1, "dist_m")?))?;
            let pl = t.num(line, rec, 2, "pl_db")?;
            let los = t.flag(line, rec, 3, "los")?;
            let w = t.opt_num(line, rec, 4, "weight")?.unwrap_or(1.0);
            if w <= 0.0 {
                return Err(input_error(line, format!("weight must be positive, got {w}")));
            }
            Ok(PathLossSample::new(f, d, pl, los).with_weight(w))
        })
        .collect()
}

pub fn write_pathloss_csv(samples: &[PathLossSample], with_weight: bool) -> String {
    let mut out = String::from(if with_weight { "freq_ghz,dist_m,pl_db,los,weight\n" } else { "freq_ghz,dist_m,pl_db,los\n" });
    for s in samples {
        out.push_str(&format!("{},{},{},{}", s.f.ghz(), s.d.m(), s.pl_db, u8::from(s.los)));
        if with_weight {
            out.push_str(&format!(",{}", s.weight));
        }
        out.push('\n');
    }
    out
}

pub fn read_los_csv(input: impl Read) -> Result<Vec<LosSample>> {
    let t = read_table(input, &LOS_COLUMNS, 2)?;
    t.rows
        .iter()
        .map(|(line, rec)| {
            let line = *line;
            let d = at_line(line, Distance2D::from_m(t.num(line, rec, 0, "dist_m")?))?;
            Ok(LosSample { d, los: t.flag(line, rec, 1, "los")? })
        })
        .collect()
}

pub fn write_los_csv(samples: &[LosSample]) -> String {
    let mut out = String::from("dist_m,los\n");
    for s in samples {
        out.push_str(&format!("{},{}\n", s.d.m(), u8::from(s.los)));
    }
    out
}

/// Rays of one link, in file order.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkRays {
    pub link_id: String,
    pub rays: Vec<RayRecord>,
}

/// Reads a ray file, grouping rows by `link_id` in order of first appearance.
/// Power is given in dB and converted to linear.
pub fn read_rays_csv(input: impl Read) -> Result<Vec<LinkRays>> {
    let t = read_table(input, &RAY_COLUMNS, 7)?;
    let mut links: Vec<LinkRays> = Vec::new();
    for (line, rec) in &t.rows {
        let line = *line;
        let id = t.text(line, rec, 0, "link_id")?;
        let ray = at_line(
            line,
            RayRecord::from_db(
                t.num(line, rec, 1, "delay_ns")?,
                (t.num(line, rec, 2, "aod_az_deg")?, t.num(line, rec, 3, "aod_el_deg")?),
                (t.num(line, rec, 4, "aoa_az_deg")?, t.num(line, rec, 5, "aoa_el_deg")?),
                t.num(line, rec, 6, "power_db")?,
                t.opt_num(line, rec, 7, "xpr_db")?,
            ),
        )?;
        match links.iter_mut().find(|l| l.link_id == id) {
            Some(l) => l.rays.push(ray),
            None => links.push(LinkRays { link_id: id, rays: vec![ray] }),
        }
    }
    Ok(links)
}

pub fn write_rays_csv(links: &[LinkRays]) -> String {
    let with_xpr = links.iter().any(|l| l.rays.iter().any(|r| r.xpr_db.is_some()));
    let mut out = RAY_COLUMNS[..if with_xpr { 8 } else { 7 }].join(",");
    out.push('\n');
    for l in links {
        for r in &l.rays {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}",
                l.link_id,
                r.delay_ns,
                r.aod_az_deg,
                r.aod_el_deg,
                r.aoa_az_deg,
                r.aoa_el_deg,
                r.power_db()
            ));
            if with_xpr {
                out.push(',');
                if let Some(x) = r.xpr_db {
                    out.push_str(&x.to_string());
                }
            }
            out.push('\n');
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinkAssignment {
    pub link_id: String,
    pub labels: Vec<usize>,
    pub pruned: Vec<bool>,
}

/// Reads cluster assignments. Ray indices of each link must be 0..n in order.
pub fn read_assignments_csv(input: impl Read) -> Result<Vec<LinkAssignment>> {
    let t = read_table(input, &ASSIGNMENT_COLUMNS, 4)?;
    let mut links: Vec<LinkAssignment> = Vec::new();
    for (line, rec) in &t.rows {
        let line = *line;
        let id = t.text(line, rec, 0, "link_id")?;
        let idx = t.int(line, rec, 1, "ray_index")?;
        let cluster = t.int(line, rec, 2, "cluster")?;
        let pruned = t.flag(line, rec, 3, "pruned")?;
        let link = match links.iter().position(|l| l.link_id == id) {
            Some(i) => &mut links[i],
            None => {
                links.push(LinkAssignment { link_id: id, labels: Vec::new(), pruned: Vec::new() });
                links.last_mut().expect("just pushed")
            }
        };
        if idx != link.labels.len() {
            return Err(input_error(line, format!("expected ray_index {}, got {idx}", link.labels.len())));
        }
        link.labels.push(cluster);
        link.pruned.push(pruned);
    }
    Ok(links)
}

pub fn write_assignments_csv(links: &[LinkAssignment]) -> String {
    let mut out = ASSIGNMENT_COLUMNS.join(",");
    out.push('\n');
    for l in links {
        for (i, (c, p)) in l.labels.iter().zip(&l.pruned).enumerate() {
            out.push_str(&format!("{},{i},{c},{}\n", l.link_id, u8::from(*p)));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pathloss_round_trip() {
        let text = "# comment\nfreq_ghz,dist_m,pl_db,los,weight\n28,100,101.5,1,2\n73.5,250.5,130,0,\n";
        let s = read_pathloss_csv(text.as_bytes()).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s[0].weight, 2.0);
        assert_eq!(s[1].weight, 1.0);
        assert!(!s[1].los);
        let back = read_pathloss_csv(write_pathloss_csv(&s, true).as_bytes()).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn column_order_is_free() {
        let s = read_pathloss_csv("los,pl_db,dist_m,freq_ghz\n1,100,10,28\n".as_bytes()).unwrap();
        assert_eq!(s[0].d.m(), 10.0);
    }

    #[test]
    fn errors_name_the_line() {
        let text = "freq_ghz,dist_m,pl_db,los\n28,100,101.5,1\n28,abc,101.5,1\n";
        let e = read_pathloss_csv(text.as_bytes()).unwrap_err().to_string();
        assert!(e.contains("line 3"), "{e}");
        let e = read_pathloss_csv("freq_ghz,dist_m,pl_db,los\n28,100,1,2\n".as_bytes()).unwrap_err();
        assert!(e.to_string().contains("line 2"));
        let e = read_pathloss_csv("freq_ghz,dist_m,pl_db\n28,100,1\n".as_bytes()).unwrap_err();
        assert!(e.to_string().contains("missing column `los`"));
        let e = read_pathloss_csv("freq_ghz,dist_m,pl_db,los,wieght\n".as_bytes()).unwrap_err();
        assert!(e.to_string().contains("wieght"));
        let e = read_pathloss_csv("freq_ghz,dist_m,pl_db,los\n28,-1,1,0\n".as_bytes()).unwrap_err();
        assert!(e.to_string().contains("line 2"));
        let e = read_pathloss_csv("freq_ghz,dist_m,pl_db,los\n28,1,1\n".as_bytes()).unwrap_err();
        assert!(e.to_string().contains("line 2"), "{e}");
    }

    #[test]
    fn rays_grouped_by_link() {
        let text = "link_id,delay_ns,aod_az_deg,aod_el_deg,aoa_az_deg,aoa_el_deg,power_db,xpr_db\n\
                    a,0,10,0,190,0,0,12\nb,5,0,0,0,0,-3,\na,20,20,1,-20,2,-10,9\n";
        let links = read_rays_csv(text.as_bytes()).unwrap();
        assert_eq!(links.len(), 2);
        assert_eq!(links[0].rays.len(), 2);
        assert_eq!(links[0].rays[0].aoa_az_deg, -170.0);
        assert_eq!(links[1].rays[0].xpr_db, None);
        let back = read_rays_csv(write_rays_csv(&links).as_bytes()).unwrap();
        assert_eq!(back[0].rays[1].delay_ns, 20.0);
        assert!((back[0].rays[1].power - 0.1).abs() < 1e-15);
    }

    #[test]
    fn assignments_round_trip() {
        let a = vec![LinkAssignment { link_id: "x".into(), labels: vec![0, 1, 0], pruned: vec![false, true, false] }];
        assert_eq!(read_assignments_csv(write_assignments_csv(&a).as_bytes()).unwrap(), a);
        let bad = "link_id,ray_index,cluster,pruned\nx,1,0,0\n";
        assert!(read_assignments_csv(bad.as_bytes()).is_err());
    }

    #[test]
    fn los_samples() {
        let s = read_los_csv("dist_m,los\n10,1\n200,0\n".as_bytes()).unwrap();
        assert_eq!(read_los_csv(write_los_csv(&s).as_bytes()).unwrap(), s);
    }
}
