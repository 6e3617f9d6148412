//! Run configuration, canonical JSON artifacts, manifests and CSV plot data.

use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::ser::{Formatter, PrettyFormatter};
use sha2::{Digest, Sha256};

use crate::asymptotics::{AnalysisConfig, GrowthReport, RatioReport, SupersolutionConfig, TipErrorCurve};
use crate::barriers::BarrierConfig;
use crate::error::{McfError, Result};
use crate::evolve::{snapshot_schedule, SolverConfig, Trajectory};
use crate::geometry::{curvatures, FlowParams};
use crate::soliton::DEFAULT_REL_TOL;
use crate::verify::VerifyConfig;

pub const SCHEMA_VERSION: u32 = 1;
pub const TOOL: &str = "mcflab";
const LOCK: &str = ".lock";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolitonConfig {
    pub w_max: f64,
    pub rel_tol: f64,
}

impl Default for SolitonConfig {
    fn default() -> Self {
        Self { w_max: 2000.0, rel_tol: DEFAULT_REL_TOL }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: PathBuf,
    /// Seed of every randomized sample; recorded in the manifest.
    pub seed: u64,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: PathBuf::from("out"), seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub params: FlowParams,
    pub solver: SolverConfig,
    pub barriers: BarrierConfig,
    pub soliton: SolitonConfig,
    pub analysis: AnalysisConfig,
    pub supersolution: SupersolutionConfig,
    pub verify: VerifyConfig,
    pub outputs: OutputConfig,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.params.validate().map_err(|e| prefix("params", e))?;
        self.solver.validate()?;
        self.barriers.validate()?;
        self.analysis.validate()?;
        self.supersolution.validate()?;
        self.verify.validate()?;
        let s = &self.soliton;
        if !(s.w_max > 1.0 && s.w_max.is_finite()) {
            return Err(McfError::Range { field: "soliton.w_max".into(), reason: format!("must exceed 1, got {}", s.w_max) });
        }
        if !(s.rel_tol > 0.0 && s.rel_tol < 1e-3) {
            return Err(McfError::Range {
                field: "soliton.rel_tol".into(),
                reason: format!("must lie in (0, 1e-3), got {}", s.rel_tol),
            });
        }
        Ok(())
    }

    /// Output times of a run starting at `start`, geometric in `2t+1`.
    pub fn schedule(&self, start: f64) -> Result<Vec<f64>> {
        let s = &self.solver;
        if s.tau_end <= start {
            return Err(McfError::Range {
                field: "solver.tau_end".into(),
                reason: format!("must exceed the start time {start}, got {}", s.tau_end),
            });
        }
        snapshot_schedule(start, s.tau_end, s.snapshots, s.chart.is_unscaled())
    }
}

fn prefix(section: &str, e: McfError) -> McfError {
    match e {
        McfError::Range { field, reason } if !field.contains('.') => {
            McfError::Range { field: format!("{section}.{field}"), reason }
        }
        e => e,
    }
}

/// Parse a config text and apply `section.key=value` overrides on top.
pub fn parse_config(text: &str, overrides: &[String]) -> Result<RunConfig> {
    let mut table: toml::Table = text.parse().map_err(|e: toml::de::Error| McfError::Config(e.to_string()))?;
    for o in overrides {
        apply_override(&mut table, o)?;
    }
    let cfg: RunConfig = toml::Value::Table(table).try_into().map_err(|e: toml::de::Error| McfError::Config(e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: &Path, overrides: &[String]) -> Result<RunConfig> {
    let text = fs::read_to_string(path)
        .map_err(|e| McfError::Config(format!("cannot read {}: {e}", path.display())))?;
    parse_config(&text, overrides)
}

pub fn config_to_string(cfg: &RunConfig) -> Result<String> {
    toml::to_string_pretty(cfg).map_err(|e| McfError::Config(e.to_string()))
}

pub fn save_config(cfg: &RunConfig, path: &Path) -> Result<()> {
    fs::write(path, config_to_string(cfg)?)?;
    Ok(())
}

/// `a.b=v`; `v` is read as a TOML literal and falls back to a bare string.
fn apply_override(table: &mut toml::Table, arg: &str) -> Result<()> {
    let (key, raw) = arg
        .split_once('=')
        .ok_or_else(|| McfError::Config(format!("override `{arg}` is not of the form key=value")))?;
    let raw = raw.trim();
    let value = format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    let path: Vec<&str> = key.trim().split('.').collect();
    let (last, parents) = path.split_last().expect("split yields at least one piece");
    let mut cur = table;
    for p in parents {
        let entry = cur.entry(p.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| McfError::Config(format!("override `{arg}`: `{p}` is not a section")))?;
    }
    cur.insert(last.to_string(), value);
    Ok(())
}

/// Pretty JSON with every float written as `{:.16e}` (17 significant digits).
struct CanonicalFormatter(PrettyFormatter<'static>);

macro_rules! delegate {
    ($($name:ident($($arg:ident: $ty:ty),*)),* $(,)?) => {
        $(fn $name<W: ?Sized + std::io::Write>(&mut self, w: &mut W $(, $arg: $ty)*) -> std::io::Result<()> {
            self.0.$name(w $(, $arg)*)
        })*
    };
}

impl Formatter for CanonicalFormatter {
    delegate!(
        begin_array(),
        end_array(),
        begin_array_value(first: bool),
        end_array_value(),
        begin_object(),
        end_object(),
        begin_object_key(first: bool),
        begin_object_value(),
        end_object_value(),
    );

    fn write_f64<W: ?Sized + std::io::Write>(&mut self, w: &mut W, value: f64) -> std::io::Result<()> {
        write!(w, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + std::io::Write>(&mut self, w: &mut W, value: f32) -> std::io::Result<()> {
        self.write_f64(w, value as f64)
    }
}

/// Canonical bytes of `value`: object keys sorted, fixed float format,
/// trailing newline.
pub fn to_canonical_json<T: Serialize + ?Sized>(value: &T) -> Result<Vec<u8>> {
    // routing through `Value` sorts every map by key
    let tree = serde_json::to_value(value)?;
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, CanonicalFormatter(PrettyFormatter::new()));
    tree.serialize(&mut ser)?;
    out.push(b'\n');
    Ok(out)
}

pub fn from_json<T: DeserializeOwned>(bytes: &[u8]) -> Result<T> {
    Ok(serde_json::from_slice(bytes)?)
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    fs::write(path, to_canonical_json(value)?)?;
    Ok(())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    from_json(&fs::read(path)?)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub schema_version: u32,
    pub tool: String,
    pub version: String,
    pub command: String,
    pub seed: u64,
    pub config: RunConfig,
    /// File name to SHA-256 of its bytes.
    pub artifacts: BTreeMap<String, String>,
    pub results: serde_json::Value,
}

impl Manifest {
    pub fn new(command: &str, config: &RunConfig) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            tool: TOOL.into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            seed: config.outputs.seed,
            config: config.clone(),
            artifacts: BTreeMap::new(),
            results: serde_json::Value::Null,
        }
    }
}

/// `<command>.manifest.json`, so commands can share an output directory.
pub fn manifest_name(command: &str) -> String {
    format!("{command}.manifest.json")
}

pub fn save_manifest(dir: &Path, manifest: &Manifest) -> Result<PathBuf> {
    let path = dir.join(manifest_name(&manifest.command));
    write_json(&path, manifest)?;
    Ok(path)
}

/// Exclusive writer for one output directory; the lock file is removed on drop.
#[derive(Debug)]
pub struct OutputDir {
    root: PathBuf,
    manifest: Manifest,
}

impl OutputDir {
    pub fn create(root: &Path, command: &str, config: &RunConfig) -> Result<Self> {
        fs::create_dir_all(root)?;
        let lock = root.join(LOCK);
        match OpenOptions::new().write(true).create_new(true).open(&lock) {
            Ok(mut f) => writeln!(f, "{}", std::process::id())?,
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => {
                return Err(McfError::Config(format!(
                    "{} is in use by another writer (remove {} if it is stale)",
                    root.display(),
                    lock.display()
                )))
            }
            Err(e) => return Err(e.into()),
        }
        Ok(Self { root: root.to_path_buf(), manifest: Manifest::new(command, config) })
    }

    pub fn path(&self) -> &Path {
        &self.root
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<PathBuf> {
        let path = self.root.join(name);
        fs::write(&path, bytes)?;
        self.manifest.artifacts.insert(name.into(), sha256_hex(bytes));
        Ok(path)
    }

    pub fn write_json<T: Serialize + ?Sized>(&mut self, name: &str, value: &T) -> Result<PathBuf> {
        self.write(name, &to_canonical_json(value)?)
    }

    /// Write whatever `fill` emits into an in-memory buffer, then to `name`.
    pub fn write_with<F>(&mut self, name: &str, fill: F) -> Result<PathBuf>
    where
        F: FnOnce(&mut Vec<u8>) -> Result<()>,
    {
        let mut buf = Vec::new();
        fill(&mut buf)?;
        self.write(name, &buf)
    }

    pub fn set_results<T: Serialize + ?Sized>(&mut self, results: &T) -> Result<()> {
        self.manifest.results = serde_json::to_value(results)?;
        Ok(())
    }

    pub fn finish(self) -> Result<PathBuf> {
        save_manifest(&self.root, &self.manifest)
    }

    pub fn manifest(&self) -> &Manifest {
        &self.manifest
    }
}

impl Drop for OutputDir {
    fn drop(&mut self) {
        let _ = fs::remove_file(self.root.join(LOCK));
    }
}

fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

fn csv_writer<W: Write>(out: W, header: &[&str]) -> Result<csv::Writer<W>> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header).map_err(csv_err)?;
    Ok(w)
}

fn csv_err(e: csv::Error) -> McfError {
    match e.into_kind() {
        csv::ErrorKind::Io(e) => McfError::Io(e),
        k => McfError::InvalidInput(format!("csv: {k:?}")),
    }
}

fn row<W: Write>(w: &mut csv::Writer<W>, fields: impl IntoIterator<Item = String>) -> Result<()> {
    w.write_record(fields.into_iter().collect::<Vec<_>>()).map_err(csv_err)
}

/// `tau,t,node,phi,value,kappa1,kappan,ratio`: one row per node and snapshot,
/// with `value` the decoded chart value.
pub fn write_snapshots_csv<W: Write>(traj: &Trajectory, out: W) -> Result<()> {
    let mut w = csv_writer(out, &["tau", "t", "node", "phi", "value", "kappa1", "kappan", "ratio"])?;
    for st in &traj.snapshots {
        let c = curvatures(st, &traj.params)?;
        let values = st.decoded();
        for (i, (&x, &v)) in st.nodes.iter().zip(&values).enumerate() {
            row(
                &mut w,
                [
                    fmt(st.time),
                    fmt(st.t()),
                    i.to_string(),
                    fmt(x),
                    fmt(v),
                    fmt(c.kappa1[i]),
                    fmt(c.kappan[i]),
                    fmt(c.kappan[i] / c.kappa1[i]),
                ],
            )?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Per-snapshot tip data, trap margins and the fitted far-field constant.
pub fn write_records_csv<W: Write>(traj: &Trajectory, out: W) -> Result<()> {
    let mut w = csv_writer(
        out,
        &[
            "tau",
            "t",
            "kappa1_tip",
            "kappan_tip",
            "sup_h",
            "argmax_node",
            "ratio_max",
            "nonconvex_nodes",
            "margin_upper",
            "margin_lower",
            "margin_relative",
            "trapped",
            "far_constant",
        ],
    )?;
    for (i, (st, r)) in traj.snapshots.iter().zip(&traj.records).enumerate() {
        let m = traj.margins.get(i);
        let opt = |f: &dyn Fn(&crate::evolve::TrapMargin) -> f64| m.map_or(String::new(), |m| fmt(f(m)));
        row(
            &mut w,
            [
                fmt(st.time),
                fmt(r.t),
                fmt(r.kappa1_tip),
                fmt(r.kappan_tip),
                fmt(r.sup_h),
                r.argmax_node.to_string(),
                fmt(r.ratio_max),
                r.nonconvex_nodes.to_string(),
                opt(&|m| m.upper),
                opt(&|m| m.lower),
                opt(&|m| m.relative),
                m.map_or(String::new(), |m| m.trapped.to_string()),
                traj.far_constants.get(i).map_or(String::new(), |c| fmt(*c)),
            ],
        )?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_tip_error_csv<W: Write>(curve: &TipErrorCurve, out: W) -> Result<()> {
    let mut w = csv_writer(out, &["tau", "error", "relative"])?;
    for &(tau, e) in &curve.points {
        row(&mut w, [fmt(tau), fmt(e), fmt(e / curve.target_sup)])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_growth_csv<W: Write>(growth: &GrowthReport, out: W) -> Result<()> {
    let mut w = csv_writer(out, &["tau", "c1_fit", "dispersion"])?;
    for p in &growth.points {
        row(&mut w, [fmt(p.tau), fmt(p.c1_fit), fmt(p.dispersion)])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_ratio_chain_csv<W: Write>(ratio: &RatioReport, out: W) -> Result<()> {
    let mut w = csv_writer(out, &["tau", "kappan_scaled", "chain_bound"])?;
    for p in &ratio.chain {
        row(&mut w, [fmt(p.tau), fmt(p.kappan_scaled), fmt(ratio.chain_bound)])?;
    }
    w.flush()?;
    Ok(())
}

/// Create `path`'s parent and write `bytes` there; used for single files
/// outside an [`OutputDir`].
pub fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    let mut f = File::create(path)?;
    f.write_all(bytes)?;
    Ok(())
}
