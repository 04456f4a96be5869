//! The `mmchan` command line.
//!
//! Subcommands: eval, losprob, bpl, fit, fit-los, cluster, stats, drop,
//! catalog. Global flags: `--seed`, `--config`, `--out`, `--format`.
//!
//! `--config` takes a JSON object whose keys are the subcommand's flag names
//! (`k_min` or `k-min`); flags given on the command line win. For `drop` the
//! file is the drop configuration itself.
//!
//! Exit codes: 0 success, 2 invalid input or configuration, 3 numerical
//! failure such as a singular fit.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use clap::parser::ValueSource;
use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{json, Value};

use crate::catalog::{catalog_lookup, Environment, ScenarioId};
use crate::chanstats::{spread_report, Spreads};
use crate::clustering::{cluster_multirestart, ClusterSet, ClusteringConfig};
use crate::dropsim::{run_drop, DropConfig};
use crate::error::{Error, Result};
use crate::fitting::{compare_los_models, fit, fit_los_probability, FitModelKind, LosFitModel};
use crate::geometry::BuildingMap;
use crate::io::{self, LinkAssignment};
use crate::los::{D1D2Params, LosModel, LosModelKind, UeHeight};
use crate::pathloss::{AbgModel, CiModel, CifModel, PathLossModel};
use crate::penetration::{bpl, o2i_loss, BplClass, O2iConfig};
use crate::units::{Distance2D, Frequency};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

fn named<T: DeserializeOwned>(s: &str) -> std::result::Result<T, String> {
    serde_json::from_value(Value::String(s.to_string())).map_err(|e| e.to_string())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    Table,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Spacing {
    Lin,
    Log,
}

#[derive(Debug, Parser)]
#[command(name = "mmchan", version, about = "Outdoor mmWave channel models: path loss, LOS probability, penetration, fitting, clustering, drops")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GlobalArgs {
    /// Seed for every random draw; generated and reported when absent.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// JSON file with flag values (drop: the drop configuration).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output file, or file prefix for commands writing several files.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate a path-loss model over frequencies and distances.
    Eval(EvalArgs),
    /// Tabulate LOS probability against distance.
    Losprob(LosprobArgs),
    /// Building penetration and outdoor-to-indoor loss.
    Bpl(BplArgs),
    /// Fit CI, CIF or ABG to a path-loss sample file.
    Fit(FitArgs),
    /// Fit d1/d2 LOS-probability models to LOS samples.
    FitLos(FitLosArgs),
    /// Cluster rays per link with multi-restart K-power-means.
    Cluster(ClusterArgs),
    /// Delay/angle spreads and XPR per link, optionally per cluster.
    Stats(StatsArgs),
    /// Run a Monte-Carlo drop.
    Drop(DropArgs),
    /// Print the scenario parameter catalog.
    Catalog(CatalogArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PlKind {
    Ci,
    Cif,
    Abg,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct EvalArgs {
    #[arg(long, value_enum)]
    pub model: PlKind,
    /// Catalog scenario (e.g. uma-nlos); excludes explicit parameters.
    #[arg(long, value_parser = named::<ScenarioId>)]
    pub scenario: Option<ScenarioId>,
    #[arg(long)]
    pub n: Option<f64>,
    #[arg(long)]
    pub b: Option<f64>,
    /// CIF centroid frequency, GHz.
    #[arg(long)]
    pub f0: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub beta: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub gamma: Option<f64>,
    /// Frequencies in GHz, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    pub freq: Vec<f64>,
    /// Distances in m, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub dist: Vec<f64>,
    /// lo:hi[:count]
    #[arg(long)]
    pub dist_range: Option<String>,
    #[arg(long, value_enum, default_value = "log")]
    pub spacing: Spacing,
    /// LOS flag written to the output rows when explicit parameters are used.
    #[arg(long)]
    pub los: bool,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct LosprobArgs {
    #[arg(long, value_delimiter = ',', value_parser = named::<LosModelKind>, default_value = "d1d2,nyu_squared,3gpp_uma")]
    pub model: Vec<LosModelKind>,
    /// Environment supplying default d1/d2.
    #[arg(long, value_parser = named::<Environment>, default_value = "uma")]
    pub env: Environment,
    #[arg(long)]
    pub d1: Option<f64>,
    #[arg(long)]
    pub d2: Option<f64>,
    #[arg(long, default_value_t = 1.5)]
    pub h_ut: f64,
    #[arg(long, value_delimiter = ',')]
    pub dist: Vec<f64>,
    #[arg(long)]
    pub dist_range: Option<String>,
    #[arg(long, value_enum, default_value = "lin")]
    pub spacing: Spacing,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct BplArgs {
    #[arg(long, value_delimiter = ',', value_parser = named::<BplClass>, default_value = "low_loss,high_loss")]
    pub class: Vec<BplClass>,
    #[arg(long, value_delimiter = ',')]
    pub freq: Vec<f64>,
    /// lo:hi[:count], GHz
    #[arg(long)]
    pub freq_range: Option<String>,
    #[arg(long, default_value_t = 0.0)]
    pub depth: f64,
    /// Incidence angle from the wall normal, degrees.
    #[arg(long, default_value_t = 0.0)]
    pub angle: f64,
    #[arg(long)]
    pub depth_loss: Option<f64>,
    #[arg(long)]
    pub surcharge_max: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum StateFilter {
    All,
    Los,
    Nlos,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct FitArgs {
    /// Sample CSV, `-` for stdin.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_parser = named::<FitModelKind>)]
    pub model: FitModelKind,
    #[arg(long, value_enum, default_value = "all")]
    pub state: StateFilter,
    /// Residual CSV path; defaults to `<out>.residuals.csv` when --out is set.
    #[arg(long)]
    pub residuals: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LosFitChoice {
    D1d2,
    NyuSquared,
    Compare,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct FitLosArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value = "compare")]
    pub model: LosFitChoice,
    #[arg(long, default_value_t = crate::fitting::DEFAULT_LOS_BIN_M)]
    pub bin_width: f64,
    /// Environment whose 3GPP d1/d2 is the comparison reference.
    #[arg(long, value_parser = named::<Environment>, default_value = "uma")]
    pub reference_env: Environment,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ClusterArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Only cluster this link.
    #[arg(long)]
    pub link: Option<String>,
    #[arg(long)]
    pub k_min: Option<usize>,
    #[arg(long)]
    pub k_max: Option<usize>,
    #[arg(long)]
    pub prune_p: Option<f64>,
    #[arg(long)]
    pub prune_s: Option<f64>,
    #[arg(long)]
    pub restarts: Option<usize>,
    #[arg(long)]
    pub zeta: Option<f64>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct StatsArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Cluster assignment CSV from `cluster`.
    #[arg(long)]
    pub assignments: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct DropArgs {
    /// Building map JSON; requires los_mode map.
    #[arg(long)]
    pub map: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CatalogArgs {
    #[arg(long, value_parser = named::<ScenarioId>)]
    pub scenario: Option<ScenarioId>,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Eval(_) => "eval",
            Command::Losprob(_) => "losprob",
            Command::Bpl(_) => "bpl",
            Command::Fit(_) => "fit",
            Command::FitLos(_) => "fit-los",
            Command::Cluster(_) => "cluster",
            Command::Stats(_) => "stats",
            Command::Drop(_) => "drop",
            Command::Catalog(_) => "catalog",
        }
    }

    fn default_format(&self) -> Format {
        match self {
            Command::Eval(_) | Command::Losprob(_) | Command::Bpl(_) => Format::Csv,
            Command::Catalog(_) => Format::Table,
            _ => Format::Json,
        }
    }

    fn args_json(&self) -> Value {
        let v = match self {
            Command::Eval(a) => serde_json::to_value(a),
            Command::Losprob(a) => serde_json::to_value(a),
            Command::Bpl(a) => serde_json::to_value(a),
            Command::Fit(a) => serde_json::to_value(a),
            Command::FitLos(a) => serde_json::to_value(a),
            Command::Cluster(a) => serde_json::to_value(a),
            Command::Stats(a) => serde_json::to_value(a),
            Command::Drop(a) => serde_json::to_value(a),
            Command::Catalog(a) => serde_json::to_value(a),
        };
        v.expect("arguments serialize")
    }
}

/// One output cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Text(String),
    Empty,
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}
impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as u64)
    }
}
impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Int(u64::from(v))
    }
}
impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}
impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}
impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(v: Option<T>) -> Self {
        v.map_or(Cell::Empty, Into::into)
    }
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Num(v) => v.to_string(),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }

    fn pretty(&self) -> String {
        match self {
            Cell::Num(v) => format!("{v:.4}"),
            other => other.csv(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Num(v) => json!(v),
            Cell::Int(v) => json!(v),
            Cell::Text(s) => json!(s),
            Cell::Empty => Value::Null,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    fn new(columns: &[&str]) -> Self {
        Table { columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns).expect("in-memory write");
        for r in &self.rows {
            w.write_record(r.iter().map(Cell::csv)).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf8")
    }

    pub fn to_json(&self) -> Value {
        Value::Array(
            self.rows
                .iter()
                .map(|r| Value::Object(self.columns.iter().cloned().zip(r.iter().map(Cell::json)).collect()))
                .collect(),
        )
    }

    pub fn to_pretty(&self) -> String {
        let cells: Vec<Vec<String>> = self.rows.iter().map(|r| r.iter().map(Cell::pretty).collect()).collect();
        let widths: Vec<usize> = (0..self.columns.len())
            .map(|c| cells.iter().map(|r| r[c].len()).chain([self.columns[c].len()]).max().unwrap_or(0))
            .collect();
        let mut out = String::new();
        let line = |vals: Vec<&str>, out: &mut String| {
            let parts: Vec<String> = vals.iter().zip(&widths).map(|(v, w)| format!("{v:>w$}")).collect();
            out.push_str(parts.join("  ").trim_end());
            out.push('\n');
        };
        line(self.columns.iter().map(String::as_str).collect(), &mut out);
        for r in &cells {
            line(r.iter().map(String::as_str).collect(), &mut out);
        }
        out
    }
}

/// Result of a subcommand before rendering.
struct Output {
    table: Table,
    json: Option<Value>,
    pretty: Option<String>,
}

impl Output {
    fn table(table: Table) -> Self {
        Output { table, json: None, pretty: None }
    }
}

struct Ctx<'a> {
    global: &'a GlobalArgs,
    seed: Option<u64>,
    stderr: &'a mut dyn Write,
}

impl Ctx<'_> {
    fn note(&mut self, msg: impl std::fmt::Display) {
        let _ = writeln!(self.stderr, "{msg}");
    }

    fn resolve_seed(&mut self, configured: Option<u64>) -> u64 {
        if let Some(s) = self.global.seed.or(configured) {
            self.seed = Some(s);
            return s;
        }
        let s: u64 = rand::random();
        self.note(format_args!("seed: {s} (generated)"));
        self.seed = Some(s);
        s
    }
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Io(format!("{}: {e}", path.display()))
}

fn read_text(path: &Path) -> Result<String> {
    if path == Path::new("-") {
        let mut s = String::new();
        std::io::stdin().read_to_string(&mut s).map_err(|e| io_err(path, e))?;
        return Ok(s);
    }
    std::fs::read_to_string(path).map_err(|e| io_err(path, e))
}

fn with_path<T>(path: &Path, r: Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        Error::InvalidArgument(m) => Error::InvalidArgument(format!("{}: {m}", path.display())),
        other => other,
    })
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| io_err(path, e))
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_os_string();
    s.push(suffix);
    PathBuf::from(s)
}

fn ghz(v: f64) -> Result<Frequency> {
    Frequency::from_ghz(v)
}

/// Parses `lo:hi[:count]` into `count` points (default `default_count`).
fn parse_range(spec: &str, spacing: Spacing, default_count: usize) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    let bad = || Error::invalid(format!("range must be lo:hi[:count], got `{spec}`"));
    if !(2..=3).contains(&parts.len()) {
        return Err(bad());
    }
    let lo: f64 = parts[0].trim().parse().map_err(|_| bad())?;
    let hi: f64 = parts[1].trim().parse().map_err(|_| bad())?;
    let count: usize = match parts.get(2) {
        Some(c) => c.trim().parse().map_err(|_| bad())?,
        None => default_count,
    };
    if !(lo.is_finite() && hi.is_finite() && lo > 0.0 && hi >= lo) || count == 0 {
        return Err(Error::invalid(format!("range needs 0 < lo <= hi and count >= 1, got `{spec}`")));
    }
    if count == 1 {
        return Ok(vec![lo]);
    }
    let step = |i: usize| i as f64 / (count - 1) as f64;
    Ok((0..count)
        .map(|i| match spacing {
            Spacing::Lin => lo + (hi - lo) * step(i),
            Spacing::Log => 10f64.powf(lo.log10() + (hi.log10() - lo.log10()) * step(i)),
        })
        .map(|v| v.clamp(lo, hi))
        .collect())
}

fn points(list: &[f64], range: Option<&str>, spacing: Spacing, what: &str, default: Option<&str>) -> Result<Vec<f64>> {
    match (list.is_empty(), range) {
        (false, Some(_)) => Err(Error::invalid(format!("give either a {what} list or a {what} range, not both"))),
        (false, None) => Ok(list.to_vec()),
        (true, Some(r)) => parse_range(r, spacing, 50),
        (true, None) => match default {
            Some(r) => parse_range(r, spacing, 50),
            None => Err(Error::invalid(format!("no {what} values given"))),
        },
    }
}

fn eval_cmd(a: &EvalArgs, ctx: &mut Ctx) -> Result<Output> {
    let explicit = [a.n, a.b, a.f0, a.alpha, a.beta, a.gamma].iter().any(Option::is_some);
    let need = |v: Option<f64>, name: &str| {
        v.ok_or_else(|| Error::invalid(format!("--{name} is required for the {:?} model", a.model)))
    };
    let unused = |names: &[(&str, Option<f64>)]| -> Result<()> {
        match names.iter().find(|(_, v)| v.is_some()) {
            Some((n, _)) => Err(Error::invalid(format!("--{n} does not apply to the {:?} model", a.model))),
            None => Ok(()),
        }
    };
    let (model, los) = match (a.scenario, explicit) {
        (Some(_), true) => return Err(Error::invalid("give either --scenario or explicit parameters, not both")),
        (Some(id), false) => {
            let p = catalog_lookup(id);
            let m = match a.model {
                PlKind::Ci => PathLossModel::Ci(p.ci_model()),
                PlKind::Abg => PathLossModel::Abg(p.abg_model()?),
                PlKind::Cif => {
                    return Err(Error::invalid("the catalog has no CIF parameters; give --n, --b and --f0"));
                }
            };
            (m, id.is_los())
        }
        (None, false) => return Err(Error::invalid("give --scenario or explicit model parameters")),
        (None, true) => {
            let m = match a.model {
                PlKind::Ci => {
                    unused(&[("b", a.b), ("f0", a.f0), ("alpha", a.alpha), ("beta", a.beta), ("gamma", a.gamma)])?;
                    PathLossModel::Ci(CiModel::new(need(a.n, "n")?)?)
                }
                PlKind::Cif => {
                    unused(&[("alpha", a.alpha), ("beta", a.beta), ("gamma", a.gamma)])?;
                    PathLossModel::Cif(CifModel::new(need(a.n, "n")?, need(a.b, "b")?, ghz(need(a.f0, "f0")?)?)?)
                }
                PlKind::Abg => {
                    unused(&[("n", a.n), ("b", a.b), ("f0", a.f0)])?;
                    PathLossModel::Abg(AbgModel::new(need(a.alpha, "alpha")?, need(a.beta, "beta")?, need(a.gamma, "gamma")?)?)
                }
            };
            (m, a.los)
        }
    };
    let dists = points(&a.dist, a.dist_range.as_deref(), a.spacing, "distance", None)?;
    let mut t = Table::new(&["freq_ghz", "dist_m", "pl_db", "los"]);
    for &f in &a.freq {
        let f = ghz(f)?;
        if let Some(w) = f.band_warning() {
            ctx.note(format_args!("warning: {w}"));
        }
        for &d in &dists {
            let pl = model.eval(f, Distance2D::from_m(d)?)?;
            t.push(vec![f.ghz().into(), d.into(), pl.into(), los.into()]);
        }
    }
    Ok(Output { json: None, pretty: None, table: t })
}

fn losprob_cmd(a: &LosprobArgs) -> Result<Output> {
    let env = a.env.los_params();
    let p = D1D2Params::new(a.d1.unwrap_or(env.d1), a.d2.unwrap_or(env.d2))?;
    let h = UeHeight::from_m(a.h_ut)?;
    let models: Vec<LosModel> = a
        .model
        .iter()
        .map(|k| match k {
            LosModelKind::D1d2 => LosModel::D1d2(p),
            LosModelKind::NyuSquared => LosModel::NyuSquared(p),
            LosModelKind::ThreeGppUma => LosModel::ThreeGppUma { h_ut: h },
        })
        .collect();
    let mut cols = vec!["dist_m".to_string()];
    cols.extend(a.model.iter().map(|k| format!("p_{}", named_str(k))));
    let mut t = Table { columns: cols, rows: Vec::new() };
    for d in points(&a.dist, a.dist_range.as_deref(), a.spacing, "distance", Some("1:500:500"))? {
        let dd = Distance2D::from_m(d)?;
        let mut row = vec![Cell::Num(d)];
        for m in &models {
            row.push(m.probability(dd)?.into());
        }
        t.push(row);
    }
    Ok(Output::table(t))
}

fn named_str<T: Serialize>(v: &T) -> String {
    match serde_json::to_value(v) {
        Ok(Value::String(s)) => s,
        _ => String::new(),
    }
}

fn bpl_cmd(a: &BplArgs) -> Result<Output> {
    let defaults = O2iConfig::default();
    let cfg = O2iConfig {
        incidence_surcharge_max_db: a.surcharge_max.unwrap_or(defaults.incidence_surcharge_max_db),
        depth_loss_db_per_m: a.depth_loss.unwrap_or(defaults.depth_loss_db_per_m),
    };
    cfg.validate()?;
    let freqs = points(&a.freq, a.freq_range.as_deref(), Spacing::Lin, "frequency", Some("0.5:100:200"))?;
    let mut t = Table::new(&["class", "freq_ghz", "bpl_db", "o2i_db"]);
    for &c in &a.class {
        for &f in &freqs {
            let f = ghz(f)?;
            t.push(vec![
                named_str(&c).into(),
                f.ghz().into(),
                bpl(c, f).into(),
                o2i_loss(c, f, a.depth, a.angle, &cfg)?.into(),
            ]);
        }
    }
    Ok(Output::table(t))
}

fn model_params(m: &PathLossModel) -> Vec<(&'static str, f64)> {
    match m {
        PathLossModel::Ci(c) => vec![("n", c.n)],
        PathLossModel::Cif(c) => vec![("n", c.n), ("b", c.b), ("f0_ghz", c.f0_ghz)],
        PathLossModel::Abg(c) => vec![("alpha", c.alpha), ("beta", c.beta), ("gamma", c.gamma)],
    }
}

fn fit_cmd(a: &FitArgs, ctx: &mut Ctx) -> Result<(Output, Option<(PathBuf, String)>)> {
    let text = read_text(&a.input)?;
    let all = with_path(&a.input, io::read_pathloss_csv(text.as_bytes()))?;
    let samples: Vec<_> = all
        .into_iter()
        .filter(|s| match a.state {
            StateFilter::All => true,
            StateFilter::Los => s.los,
            StateFilter::Nlos => !s.los,
        })
        .collect();
    let report = fit(a.model, &samples)?;
    for w in &report.warnings {
        ctx.note(format_args!("warning: {w}"));
    }
    let mut t = Table::new(&["parameter", "value"]);
    for (k, v) in model_params(&report.model) {
        t.push(vec![k.into(), v.into()]);
    }
    t.push(vec!["sf_sigma_db".into(), report.sf_sigma_db.into()]);
    t.push(vec!["mse".into(), report.mse.into()]);
    t.push(vec!["residual_mean_db".into(), report.residual_mean_db.into()]);
    t.push(vec!["sample_count".into(), report.sample_count.into()]);
    t.push(vec!["total_weight".into(), report.total_weight.into()]);

    let residual_path = a.residuals.clone().or_else(|| ctx.global.out.as_ref().map(|o| with_suffix(o, ".residuals.csv")));
    let residuals = match residual_path {
        None => None,
        Some(p) => {
            let r = report.residuals(&samples)?;
            let mut rt = Table::new(&["freq_ghz", "dist_m", "pl_db", "los", "weight", "fitted_db", "residual_db"]);
            for (s, r) in samples.iter().zip(r) {
                rt.push(vec![
                    s.f.ghz().into(),
                    s.d.m().into(),
                    s.pl_db.into(),
                    s.los.into(),
                    s.weight.into(),
                    (s.pl_db - r).into(),
                    r.into(),
                ]);
            }
            Some((p, rt.to_csv()))
        }
    };
    let json = serde_json::to_value(&report).expect("report serializes");
    Ok((Output { table: t, json: Some(json), pretty: None }, residuals))
}

fn fit_los_cmd(a: &FitLosArgs, ctx: &mut Ctx) -> Result<Output> {
    let text = read_text(&a.input)?;
    let samples = with_path(&a.input, io::read_los_csv(text.as_bytes()))?;
    let mut t = Table::new(&["model", "d1", "d2", "mse"]);
    let single = |m: LosFitModel, ctx: &mut Ctx| -> Result<Output> {
        let fit = fit_los_probability(&samples, m, a.bin_width)?;
        for w in &fit.warnings {
            ctx.note(format_args!("warning: {w}"));
        }
        let mut t = Table::new(&["model", "d1", "d2", "mse"]);
        t.push(vec![named_str(&m).into(), fit.params.d1.into(), fit.params.d2.into(), fit.mse.into()]);
        Ok(Output { table: t, json: Some(serde_json::to_value(&fit).expect("serializes")), pretty: None })
    };
    match a.model {
        LosFitChoice::D1d2 => single(LosFitModel::D1d2, ctx),
        LosFitChoice::NyuSquared => single(LosFitModel::NyuSquared, ctx),
        LosFitChoice::Compare => {
            let cmp = compare_los_models(&samples, a.bin_width, a.reference_env.los_params())?;
            if cmp.degenerate {
                ctx.note("warning: LOS samples are all LOS or all NLOS; fitted parameters are not identifiable");
            }
            for r in &cmp.rows {
                t.push(vec![r.model.clone().into(), r.d1.into(), r.d2.into(), r.mse.into()]);
            }
            Ok(Output {
                table: t,
                json: Some(serde_json::to_value(&cmp).expect("serializes")),
                pretty: Some(cmp.to_table()),
            })
        }
    }
}

fn clustering_config(a: &ClusterArgs, seed: u64) -> ClusteringConfig {
    let d = ClusteringConfig::default();
    ClusteringConfig {
        k_min: a.k_min.unwrap_or(d.k_min),
        k_max: a.k_max.unwrap_or(d.k_max),
        prune_p: a.prune_p.unwrap_or(d.prune_p),
        prune_s: a.prune_s.unwrap_or(d.prune_s),
        restarts: a.restarts.unwrap_or(d.restarts),
        zeta: a.zeta.unwrap_or(d.zeta),
        seed,
    }
}

fn cluster_cmd(a: &ClusterArgs, ctx: &mut Ctx) -> Result<(Output, String)> {
    let text = read_text(&a.input)?;
    let mut links = with_path(&a.input, io::read_rays_csv(text.as_bytes()))?;
    if let Some(id) = &a.link {
        links.retain(|l| &l.link_id == id);
        if links.is_empty() {
            return Err(Error::invalid(format!("link `{id}` not found in {}", a.input.display())));
        }
    }
    let seed = ctx.resolve_seed(None);
    let cfg = clustering_config(a, seed);
    cfg.validate()?;
    let mut assignments = Vec::new();
    let mut reports = Vec::new();
    let mut t = Table::new(&["link_id", "cluster", "ray_count", "pruned_count", "power", "delay_ns", "aod_az_deg", "aoa_az_deg"]);
    for l in &links {
        let res = cluster_multirestart(&l.rays, &cfg)?;
        let cs = &res.best;
        for (c, info) in cs.clusters.iter().enumerate() {
            t.push(vec![
                l.link_id.clone().into(),
                c.into(),
                info.ray_count.into(),
                info.pruned_count.into(),
                info.power.into(),
                info.centroid.delay_ns.into(),
                info.centroid.aod_az_deg.into(),
                info.centroid.aoa_az_deg.into(),
            ]);
        }
        assignments.push(LinkAssignment { link_id: l.link_id.clone(), labels: cs.labels.clone(), pruned: cs.pruned.clone() });
        reports.push(json!({
            "link_id": l.link_id,
            "cluster_count": cs.cluster_count(),
            "best_restart": res.best_restart,
            "objective": cs.objective,
            "delay_norm_ns": cs.delay_norm_ns,
            "clusters": cs.clusters,
            "restarts": res.restarts,
        }));
    }
    let json = json!({ "config": cfg, "links": reports });
    Ok((Output { table: t, json: Some(json), pretty: None }, io::write_assignments_csv(&assignments)))
}

fn stats_row(t: &mut Table, link: &str, cluster: Cell, s: &Spreads) {
    t.push(vec![
        link.into(),
        cluster,
        s.ray_count.into(),
        s.total_power.into(),
        s.rms_delay_spread_ns.into(),
        s.asd_az_deg.into(),
        s.asa_az_deg.into(),
        s.asd_el_deg.into(),
        s.asa_el_deg.into(),
        s.xpr.map(|x| x.mean_db).into(),
        s.xpr.map(|x| x.std_db).into(),
        s.xpr.map(|x| x.count).into(),
    ]);
}

fn stats_cmd(a: &StatsArgs) -> Result<Output> {
    let text = read_text(&a.input)?;
    let links = with_path(&a.input, io::read_rays_csv(text.as_bytes()))?;
    let assignments = match &a.assignments {
        None => None,
        Some(p) => Some(with_path(p, io::read_assignments_csv(read_text(p)?.as_bytes()))?),
    };
    let mut t = Table::new(&[
        "link_id",
        "cluster",
        "ray_count",
        "total_power",
        "rms_delay_spread_ns",
        "asd_az_deg",
        "asa_az_deg",
        "asd_el_deg",
        "asa_el_deg",
        "xpr_mean_db",
        "xpr_std_db",
        "xpr_count",
    ]);
    let mut reports = Vec::new();
    for l in &links {
        let cs = match &assignments {
            None => None,
            Some(all) => {
                let a = all
                    .iter()
                    .find(|x| x.link_id == l.link_id)
                    .ok_or_else(|| Error::invalid(format!("no cluster assignment for link `{}`", l.link_id)))?;
                Some(ClusterSet::from_labels(&l.rays, a.labels.clone(), a.pruned.clone(), 1.0)?)
            }
        };
        let report = spread_report(&l.rays, cs.as_ref())?;
        stats_row(&mut t, &l.link_id, "all".into(), &report.overall);
        for c in &report.clusters {
            stats_row(&mut t, &l.link_id, c.cluster.into(), &c.spreads);
        }
        reports.push(json!({ "link_id": l.link_id, "report": report }));
    }
    Ok(Output { table: t, json: Some(Value::Array(reports)), pretty: None })
}

fn drop_cmd(a: &DropArgs, ctx: &mut Ctx) -> Result<Output> {
    let path = ctx.global.config.clone().ok_or_else(|| Error::config("drop needs --config <drop.json>"))?;
    let mut cfg = with_path(&path, DropConfig::from_json(&read_text(&path)?))?;
    let seed = ctx.resolve_seed(cfg.rng_seed);
    cfg.rng_seed = Some(seed);
    let map = match &a.map {
        None => None,
        Some(p) => Some(BuildingMap::from_json(&read_text(p)?).map_err(|e| io_err(p, e))?),
    };
    let result = run_drop(&cfg, map.as_ref())?;
    for w in &result.summary.warnings {
        ctx.note(format_args!("warning: {w}"));
    }
    let prefix = ctx.global.out.clone().unwrap_or_else(|| PathBuf::from("drop"));
    let links_path = with_suffix(&prefix, ".links.csv");
    let summary_path = with_suffix(&prefix, ".summary.json");
    write_file(&links_path, &result.links_csv())?;
    write_file(&summary_path, &result.summary_json())?;
    ctx.note(format_args!("wrote {} and {}", links_path.display(), summary_path.display()));

    let s = &result.summary;
    let mut t = Table::new(&["lo_m", "hi_m", "count", "los_count", "los_fraction", "mean_p_los"]);
    for b in &s.los_fraction_bins {
        t.push(vec![b.lo_m.into(), b.hi_m.into(), b.count.into(), b.los_count.into(), b.los_fraction.into(), b.mean_p_los.into()]);
    }
    let mut pretty = format!(
        "links {}  indoor {}  LOS fraction {:.4}\n",
        s.link_count, s.indoor_count, s.los_fraction
    );
    for p in s.coupling_loss_cdf.iter().filter(|p| [5.0, 50.0, 95.0].contains(&p.percentile)) {
        let _ = writeln!(pretty, "coupling loss p{:<3} {:.2} dB", p.percentile, p.coupling_loss_db);
    }
    Ok(Output { table: t, json: Some(serde_json::to_value(s).expect("serializes")), pretty: Some(pretty) })
}

fn catalog_cmd(a: &CatalogArgs) -> Output {
    let ids: Vec<ScenarioId> = match a.scenario {
        Some(id) => vec![id],
        None => ScenarioId::ALL.to_vec(),
    };
    let mut t = Table::new(&[
        "scenario", "ci_n", "ci_sigma_db", "abg_alpha", "abg_beta", "abg_gamma", "abg_sigma_db", "los_d1_m", "los_d2_m",
    ]);
    let rows: Vec<_> = ids.into_iter().map(catalog_lookup).collect();
    for p in &rows {
        t.push(vec![
            p.scenario.name().into(),
            p.ci.n.into(),
            p.ci.sigma_db.into(),
            p.abg.map(|x| x.alpha).into(),
            p.abg.map(|x| x.beta).into(),
            p.abg.map(|x| x.gamma).into(),
            p.abg.map(|x| x.sigma_db).into(),
            p.los.d1.into(),
            p.los.d2.into(),
        ]);
    }
    Output { table: t, json: Some(serde_json::to_value(&rows).expect("serializes")), pretty: None }
}

fn metadata(cli: &Cli, seed: Option<u64>) -> Value {
    json!({
        "tool": "mmchan",
        "version": env!("CARGO_PKG_VERSION"),
        "command": cli.command.name(),
        "seed": seed,
        "config": cli.command.args_json(),
    })
}

fn render(out: &Output, format: Format, meta: &Value) -> String {
    match format {
        Format::Csv => {
            let mut s = String::new();
            let _ = writeln!(s, "# mmchan {} {}", meta["version"].as_str().unwrap_or(""), meta["command"].as_str().unwrap_or(""));
            if let Some(seed) = meta["seed"].as_u64() {
                let _ = writeln!(s, "# seed: {seed}");
            }
            let _ = writeln!(s, "# config: {}", meta["config"]);
            s.push_str(&out.table.to_csv());
            s
        }
        Format::Json => {
            let result = out.json.clone().unwrap_or_else(|| out.table.to_json());
            let mut s = serde_json::to_string_pretty(&json!({ "metadata": meta, "result": result })).expect("serializes");
            s.push('\n');
            s
        }
        Format::Table => out.pretty.clone().unwrap_or_else(|| out.table.to_pretty()),
    }
}

fn execute(cli: &Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<()> {
    let mut ctx = Ctx { global: &cli.global, seed: None, stderr };
    let format = cli.global.format.unwrap_or_else(|| cli.command.default_format());
    let mut extra: Vec<(PathBuf, String)> = Vec::new();
    let out = match &cli.command {
        Command::Eval(a) => eval_cmd(a, &mut ctx)?,
        Command::Losprob(a) => losprob_cmd(a)?,
        Command::Bpl(a) => bpl_cmd(a)?,
        Command::Fit(a) => {
            let (o, residuals) = fit_cmd(a, &mut ctx)?;
            extra.extend(residuals);
            o
        }
        Command::FitLos(a) => fit_los_cmd(a, &mut ctx)?,
        Command::Cluster(a) => {
            let (o, assignments) = cluster_cmd(a, &mut ctx)?;
            match &cli.global.out {
                Some(prefix) => {
                    let seed = ctx.seed.expect("cluster resolves a seed");
                    let text = format!("# seed: {seed}\n{assignments}");
                    extra.push((with_suffix(prefix, ".assignments.csv"), text));
                    let meta = metadata(cli, ctx.seed);
                    extra.push((with_suffix(prefix, ".clusters.json"), render(&o, Format::Json, &meta)));
                    for (p, text) in &extra {
                        write_file(p, text)?;
                    }
                    ctx.note(format_args!("wrote {} and {}", extra[0].0.display(), extra[1].0.display()));
                    return Ok(());
                }
                None if format == Format::Csv => {
                    let _ = write!(stdout, "# seed: {}\n{assignments}", ctx.seed.unwrap_or_default());
                    return Ok(());
                }
                None => o,
            }
        }
        Command::Stats(a) => stats_cmd(a)?,
        Command::Drop(a) => {
            let o = drop_cmd(a, &mut ctx)?;
            let meta = metadata(cli, ctx.seed);
            let _ = stdout.write_all(render(&o, format, &meta).as_bytes());
            return Ok(());
        }
        Command::Catalog(a) => catalog_cmd(a),
    };
    let meta = metadata(cli, ctx.seed);
    let text = render(&out, format, &meta);
    for (p, t) in &extra {
        write_file(p, t)?;
    }
    match &cli.global.out {
        Some(p) => write_file(p, &text),
        None => stdout.write_all(text.as_bytes()).map_err(|e| Error::Io(e.to_string())),
    }
}

/// Appends flags from the `--config` JSON that were not given on the command line.
fn merge_config(raw: Vec<OsString>) -> std::result::Result<Vec<OsString>, clap::Error> {
    let cmd = Cli::command();
    // required flags may come from the file, so the first pass ignores them
    let relaxed = cmd.clone().mut_subcommands(|s| s.mut_args(|a| a.required(false)));
    let matches = relaxed.try_get_matches_from(&raw)?;
    let Some((name, sub)) = matches.subcommand() else {
        return Ok(raw);
    };
    let Some(path) = sub.get_one::<PathBuf>("config") else {
        return Ok(raw);
    };
    if name == "drop" {
        return Ok(raw);
    }
    let fail = |msg: String| {
        let mut c = Cli::command();
        c.error(clap::error::ErrorKind::ValueValidation, msg)
    };
    let text = read_text(path).map_err(|e| fail(e.to_string()))?;
    let value: Value = serde_json::from_str(&text).map_err(|e| fail(format!("{}: {e}", path.display())))?;
    let Value::Object(obj) = value else {
        return Err(fail(format!("{}: config must be a JSON object", path.display())));
    };
    let sub_cmd = cmd.find_subcommand(name).expect("matched subcommand exists");
    let mut out = raw;
    for (key, v) in obj {
        let id = key.replace('-', "_");
        let arg = if id == "seed" {
            None
        } else {
            let a = sub_cmd
                .get_arguments()
                .find(|a| a.get_id().as_str() == id && !a.is_global_set())
                .ok_or_else(|| fail(format!("{}: unknown key `{key}` for {name}", path.display())))?;
            Some(a)
        };
        if sub.value_source(&id) == Some(ValueSource::CommandLine) {
            continue;
        }
        let long = arg.and_then(|a| a.get_long()).unwrap_or("seed");
        let takes_value = arg.is_none_or(|a| a.get_action().takes_values());
        let scalar = |v: &Value| match v {
            Value::String(s) => Ok(s.clone()),
            Value::Number(n) => Ok(n.to_string()),
            Value::Bool(b) => Ok(b.to_string()),
            other => Err(fail(format!("{}: unsupported value for `{key}`: {other}", path.display()))),
        };
        match (&v, takes_value) {
            (Value::Null, _) => {}
            (Value::Bool(true), false) => out.push(format!("--{long}").into()),
            (Value::Bool(false), false) => {}
            (_, false) => return Err(fail(format!("{}: `{key}` must be true or false", path.display()))),
            (Value::Array(items), true) => {
                let parts: Vec<String> = items.iter().map(scalar).collect::<std::result::Result<_, _>>()?;
                out.push(format!("--{long}").into());
                out.push(parts.join(",").into());
            }
            (v, true) => {
                out.push(format!("--{long}").into());
                out.push(scalar(v)?.into());
            }
        }
    }
    Ok(out)
}

/// Runs the CLI on `args` (including the program name) and returns the exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let raw: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let parsed = merge_config(raw).and_then(Cli::try_parse_from);
    let cli = match parsed {
        Ok(c) => c,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = stderr.write_all(text.as_bytes());
                EXIT_INVALID
            } else {
                let _ = stdout.write_all(text.as_bytes());
                EXIT_OK
            };
        }
    };
    match execute(&cli, stdout, stderr) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            if e.is_numeric() {
                EXIT_NUMERIC
            } else {
                EXIT_INVALID
            }
        }
    }
}
