//! Plain-text embedding files.
//!
//! The first line is a header such as `# model=lorentz dim=2`; each further
//! line is an id followed by tab-separated coordinates.
//!
//! Lorentz rows carry `dim + 1` coordinates (time first), Poincaré rows
//! `dim`. Values are written with 17 significant digits so they read back
//! bit-for-bit.

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fsio::{read_to_string, tsv_records, write_atomic};
use crate::geometry::{from_poincare, to_poincare, LorentzPoint, PoincarePoint};
use crate::optimizer::EmbeddingTable;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    Lorentz,
    Poincare,
}

impl Model {
    pub fn name(self) -> &'static str {
        match self {
            Model::Lorentz => "lorentz",
            Model::Poincare => "poincare",
        }
    }

    fn width(self, dim: usize) -> usize {
        match self {
            Model::Lorentz => dim + 1,
            Model::Poincare => dim,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingFile {
    pub model: Model,
    pub dim: usize,
    pub ids: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl EmbeddingFile {
    pub fn from_table(table: &EmbeddingTable) -> Self {
        EmbeddingFile {
            model: Model::Lorentz,
            dim: table.dim(),
            ids: table.ids().to_vec(),
            rows: table.rows().map(|(_, r)| r.to_vec()).collect(),
        }
    }

    /// Validates every row and returns hyperboloid coordinates.
    pub fn to_table(&self) -> Result<EmbeddingTable> {
        let points = self
            .rows
            .iter()
            .map(|r| match self.model {
                Model::Lorentz => LorentzPoint::new(r.clone()),
                Model::Poincare => from_poincare(&PoincarePoint::new(r.clone())?),
            })
            .collect::<Result<Vec<_>>>()?;
        EmbeddingTable::new(self.ids.clone(), points)
    }

    pub fn convert(&self, to: Model) -> Result<EmbeddingFile> {
        let rows = match (self.model, to) {
            (a, b) if a == b => {
                // validate even when nothing changes
                self.to_table()?;
                self.rows.clone()
            }
            (Model::Lorentz, Model::Poincare) => self
                .rows
                .iter()
                .map(|r| Ok(to_poincare(&LorentzPoint::new(r.clone())?).into_coords()))
                .collect::<Result<_>>()?,
            (Model::Poincare, Model::Lorentz) => self
                .rows
                .iter()
                .map(|r| Ok(from_poincare(&PoincarePoint::new(r.clone())?)?.into_coords()))
                .collect::<Result<_>>()?,
            _ => unreachable!(),
        };
        Ok(EmbeddingFile {
            model: to,
            dim: self.dim,
            ids: self.ids.clone(),
            rows,
        })
    }

    /// Poincaré-ball coordinates of every row.
    pub fn poincare_rows(&self) -> Result<Vec<Vec<f64>>> {
        Ok(self.convert(Model::Poincare)?.rows)
    }

    pub fn format(&self) -> String {
        let mut out = format!("# model={} dim={}\n", self.model.name(), self.dim);
        for (id, row) in self.ids.iter().zip(&self.rows) {
            out.push_str(id);
            for v in row {
                let _ = write!(out, "\t{v:.16e}");
            }
            out.push('\n');
        }
        out
    }

    pub fn parse(text: &str, source: &str) -> Result<Self> {
        let err = |line, msg: String| Error::Parse {
            path: source.to_string(),
            line,
            msg,
        };
        let (header_line, header) = text
            .lines()
            .enumerate()
            .find(|(_, l)| !l.trim().is_empty())
            .ok_or_else(|| err(1, "empty embedding file".into()))?;
        let (model, dim) = parse_header(header).ok_or_else(|| {
            err(
                header_line + 1,
                "expected header `# model=<lorentz|poincare> dim=<n>`".into(),
            )
        })?;
        let width = model.width(dim);
        let mut ids = Vec::new();
        let mut rows = Vec::new();
        for (line, fields) in tsv_records(text) {
            let (id, coords) = fields.split_first().expect("split yields one field");
            if coords.len() != width {
                return Err(err(
                    line,
                    format!("expected {width} coordinates, found {}", coords.len()),
                ));
            }
            let row = coords
                .iter()
                .map(|c| {
                    c.trim()
                        .parse::<f64>()
                        .map_err(|_| err(line, format!("invalid number `{c}`")))
                })
                .collect::<Result<Vec<_>>>()?;
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite(format!("{source}:{line}")));
            }
            ids.push(id.to_string());
            rows.push(row);
        }
        Ok(EmbeddingFile { model, dim, ids, rows })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&read_to_string(path)?, &path.display().to_string())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.format().as_bytes())
    }
}

fn parse_header(line: &str) -> Option<(Model, usize)> {
    let rest = line.strip_prefix('#')?;
    let mut model = None;
    let mut dim = None;
    for kv in rest.split_whitespace() {
        match kv.split_once('=')? {
            ("model", "lorentz") => model = Some(Model::Lorentz),
            ("model", "poincare") => model = Some(Model::Poincare),
            ("dim", n) => dim = n.parse().ok().filter(|&d| d >= 1),
            _ => return None,
        }
    }
    Some((model?, dim?))
}

/// Sidecar record written next to every trained embedding.
#[derive(Debug, Clone, Serialize)]
pub struct Metadata {
    pub model: Model,
    pub dim: usize,
    pub epoch: usize,
    pub seed: u64,
    pub config_hash: String,
    pub concepts: usize,
    pub final_loss: f64,
}

impl Metadata {
    pub fn sidecar_path(output: &Path) -> std::path::PathBuf {
        let mut name = output.as_os_str().to_owned();
        name.push(".meta.json");
        name.into()
    }

    pub fn save(&self, output: &Path) -> Result<()> {
        let mut json = serde_json::to_string_pretty(self).expect("metadata serializes");
        json.push('\n');
        write_atomic(&Self::sidecar_path(output), json.as_bytes())
    }
}
