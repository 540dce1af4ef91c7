//! Output headers and file helpers.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::Result;
use crate::model::ModelParams;

pub const ARTIFACT: &str = env!("CARGO_PKG_NAME");
pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Parameter stamp written at the top of every output file.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Stamp {
    pub kind: String,
    pub energy: Option<f64>,
    pub params: Option<ModelParams>,
    pub extra: Vec<(String, String)>,
}

impl Stamp {
    pub fn new(kind: &str) -> Self {
        Self { kind: kind.into(), ..Self::default() }
    }

    pub fn energy(mut self, e: f64) -> Self {
        self.energy = Some(e);
        self
    }

    pub fn params(mut self, p: &ModelParams) -> Self {
        self.params = Some(*p);
        self
    }

    pub fn with(mut self, key: &str, value: impl ToString) -> Self {
        self.extra.push((key.into(), value.to_string()));
        self
    }

    /// `#`-prefixed header lines.
    pub fn header(&self) -> String {
        let mut s = format!("# {ARTIFACT} {ARTIFACT_VERSION} {}\n", self.kind);
        let mut fields = Vec::new();
        if let Some(e) = self.energy {
            fields.push(format!("E={e}"));
        }
        if let Some(p) = &self.params {
            fields.push(format!("m={} a={} m_ch3={} I={} D_e={} r_e={} c1={} c2={} U_e={}", p.m, p.a, p.m_ch3, p.inertia, p.d_e, p.r_e, p.c1, p.c2, p.u_e));
        }
        for (k, v) in &self.extra {
            fields.push(format!("{k}={v}"));
        }
        if !fields.is_empty() {
            let _ = writeln!(s, "# {}", fields.join(" "));
        }
        s
    }
}

/// Creates `path` (and its directory) and writes the stamp header.
pub fn create_with_header(path: &Path, stamp: &Stamp) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(stamp.header().as_bytes())?;
    Ok(w)
}

/// Short decimal tag used in file names, e.g. 1.007825 -> "1.007825", 2 -> "2".
pub fn tag(x: f64) -> String {
    format!("{x}")
}
