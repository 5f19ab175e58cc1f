//! Artifact writers: long-format CSV, TOML reports and the binary field file.

use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};

use asymdir_core::solver::ScalarField;
use toml::{Table, Value};

use crate::config::RunConfig;
use crate::RunError;

/// Output directory; every write goes through here so failures carry the path.
#[derive(Debug, Clone)]
pub struct OutDir {
    root: PathBuf,
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> RunError + '_ {
    move |source| RunError::Io {
        path: path.display().to_string(),
        source,
    }
}

impl OutDir {
    pub fn create(root: impl Into<PathBuf>) -> Result<Self, RunError> {
        let root = root.into();
        fs::create_dir_all(&root).map_err(io_err(&root))?;
        Ok(Self { root })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn csv<I>(&self, name: &str, header: &[&str], rows: I) -> Result<PathBuf, RunError>
    where
        I: IntoIterator<Item = Vec<String>>,
    {
        let path = self.path(name);
        let csv_err = |e: csv::Error| RunError::Io {
            path: path.display().to_string(),
            source: e.into(),
        };
        let mut w = csv::Writer::from_path(&path).map_err(csv_err)?;
        w.write_record(header).map_err(csv_err)?;
        for row in rows {
            w.write_record(&row).map_err(csv_err)?;
        }
        w.flush().map_err(io_err(&path))?;
        log::info!("wrote {}", path.display());
        Ok(path)
    }

    pub fn text(&self, name: &str, content: &str) -> Result<PathBuf, RunError> {
        self.bytes(name, content.as_bytes())
    }

    pub fn bytes(&self, name: &str, content: &[u8]) -> Result<PathBuf, RunError> {
        let path = self.path(name);
        fs::write(&path, content).map_err(io_err(&path))?;
        log::info!("wrote {}", path.display());
        Ok(path)
    }
}

/// Plain decimal in the comfortable range, exponent form outside it. Both are
/// shortest round-trip representations.
pub fn num(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || !v.is_finite() || (1e-4..1e15).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

pub fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

/// Structured text report. The `[run]` header embeds the config hash and tags;
/// `[config]` is the parsed configuration, metric definition included.
#[derive(Debug, Clone)]
pub struct Report {
    root: Table,
}

impl Report {
    pub fn new(cfg: &RunConfig, command: &str, tags: &[&str]) -> Self {
        let mut run = Table::new();
        run.insert("tool".into(), env!("CARGO_PKG_NAME").into());
        run.insert("version".into(), env!("CARGO_PKG_VERSION").into());
        run.insert("command".into(), command.into());
        run.insert("config_sha256".into(), cfg.hash().into());
        run.insert("metric".into(), cfg.metric.describe().into());
        run.insert(
            "tags".into(),
            Value::Array(tags.iter().map(|t| Value::from(*t)).collect()),
        );
        let mut root = Table::new();
        root.insert("run".into(), Value::Table(run));
        root.insert(
            "config".into(),
            Value::try_from(cfg).expect("run config serialises"),
        );
        Self { root }
    }

    pub fn section(&mut self, name: &str) -> Section<'_> {
        let t = self
            .root
            .entry(name)
            .or_insert_with(|| Value::Table(Table::new()));
        match t {
            Value::Table(t) => Section(t),
            _ => unreachable!("report sections are tables"),
        }
    }

    /// `[run]` first, then the remaining sections in key order.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let mut keys: Vec<&String> = self.root.keys().collect();
        keys.sort_by_key(|k| (k.as_str() != "run", k.as_str()));
        for k in keys {
            if let Value::Table(t) = &self.root[k.as_str()] {
                emit_table(&mut out, &toml_key(k), t);
            }
        }
        out
    }
}

fn toml_key(k: &str) -> String {
    if !k.is_empty()
        && k.chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
    {
        k.to_string()
    } else {
        Value::from(k).to_string()
    }
}

/// TOML float with the same shortest representation as the CSV tables.
fn toml_float(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let s = num(v);
    if s.contains(['.', 'e']) {
        s
    } else {
        s + ".0"
    }
}

fn toml_value(v: &Value) -> String {
    match v {
        Value::Float(f) => toml_float(*f),
        Value::Array(a) => {
            let items: Vec<String> = a.iter().map(toml_value).collect();
            format!("[{}]", items.join(", "))
        }
        other => other.to_string(),
    }
}

fn emit_table(out: &mut String, header: &str, t: &Table) {
    if !out.is_empty() {
        out.push('\n');
    }
    out.push_str(&format!("[{header}]\n"));
    for (k, v) in t {
        if !matches!(v, Value::Table(_)) {
            out.push_str(&format!("{} = {}\n", toml_key(k), toml_value(v)));
        }
    }
    for (k, v) in t {
        if let Value::Table(sub) = v {
            emit_table(out, &format!("{header}.{}", toml_key(k)), sub);
        }
    }
}

pub struct Section<'a>(&'a mut Table);

impl Section<'_> {
    pub fn set(&mut self, key: &str, v: impl Into<Value>) -> &mut Self {
        self.0.insert(key.into(), v.into());
        self
    }

    pub fn count(&mut self, key: &str, v: usize) -> &mut Self {
        self.set(key, v as i64)
    }

    pub fn maybe(&mut self, key: &str, v: Option<f64>) -> &mut Self {
        if let Some(v) = v {
            self.set(key, v);
        }
        self
    }

    pub fn floats(&mut self, key: &str, v: &[f64]) -> &mut Self {
        self.set(key, Value::Array(v.iter().map(|x| Value::from(*x)).collect()))
    }
}

pub const FIELD_MAGIC: [u8; 8] = *b"ADLB1\0\0\0";

/// Field read back from the binary format.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldFile {
    pub n: u32,
    pub r_max: f64,
    /// `Nr` node radii followed by `R_max`.
    pub radii: Vec<f64>,
    pub angles: Vec<f64>,
    /// Row-major in `r`, `(Nr + 1) × Nθ`, Dirichlet row last.
    pub values: Vec<f64>,
}

/// Layout, all little-endian:
///
/// ```text
/// magic    8 bytes  "ADLB1\0\0\0"
/// n        u32      manifold dimension
/// nr       u32      interior radial rows
/// n_theta  u32      angular nodes
/// r_max    f64
/// radii    (nr + 1) f64
/// angles   n_theta  f64
/// values   (nr + 1) * n_theta f64
/// ```
pub fn encode_field(field: &ScalarField) -> Vec<u8> {
    let g = field.grid();
    let (nr, nt) = (g.nr(), g.n_theta());
    let mut out = Vec::with_capacity(28 + 8 * ((nr + 1) * (nt + 1) + nt));
    out.extend_from_slice(&FIELD_MAGIC);
    for v in [g.n(), nr as u32, nt as u32] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out.extend_from_slice(&g.r_max().to_le_bytes());
    for r in g.radii() {
        out.extend_from_slice(&r.to_le_bytes());
    }
    for t in g.angles() {
        out.extend_from_slice(&t.to_le_bytes());
    }
    for i in 0..=nr {
        for j in 0..nt {
            out.extend_from_slice(&field.at(i, j).to_le_bytes());
        }
    }
    out
}

pub fn decode_field(mut bytes: &[u8]) -> io::Result<FieldFile> {
    let bad = |m: &str| io::Error::new(io::ErrorKind::InvalidData, m.to_string());
    let mut magic = [0u8; 8];
    bytes.read_exact(&mut magic)?;
    if magic != FIELD_MAGIC {
        return Err(bad("not an ADLB1 field file"));
    }
    let mut u32s = [0u32; 3];
    for v in &mut u32s {
        let mut b = [0u8; 4];
        bytes.read_exact(&mut b)?;
        *v = u32::from_le_bytes(b);
    }
    let [n, nr, nt] = u32s;
    let f64s = |count: usize, bytes: &mut &[u8]| -> io::Result<Vec<f64>> {
        let mut v = Vec::with_capacity(count);
        for _ in 0..count {
            let mut b = [0u8; 8];
            bytes.read_exact(&mut b)?;
            v.push(f64::from_le_bytes(b));
        }
        Ok(v)
    };
    let (nr, nt) = (nr as usize, nt as usize);
    let r_max = f64s(1, &mut bytes)?[0];
    let radii = f64s(nr + 1, &mut bytes)?;
    let angles = f64s(nt, &mut bytes)?;
    let values = f64s((nr + 1) * nt, &mut bytes)?;
    if !bytes.is_empty() {
        return Err(bad("trailing bytes after field data"));
    }
    Ok(FieldFile {
        n,
        r_max,
        radii,
        angles,
        values,
    })
}

pub fn write_diagnostics(dir: &Path, body: &str) -> io::Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let path = dir.join("diagnostics.txt");
    let mut f = fs::File::create(&path)?;
    f.write_all(body.as_bytes())?;
    Ok(path)
}
