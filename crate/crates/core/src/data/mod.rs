//! Ground-truth taxonomies, TSV loaders, and dataset construction.
//!
//! File formats (UTF-8, tab separated, `#` comments and blank lines skipped):
//!
//! | kind        | columns                           |
//! |-------------|-----------------------------------|
//! | taxonomy    | `child  parent  [weight]`         |
//! | similarity  | `id1  id2  score`                 |
//! | annotations | `entity  annotation_set_id`       |
//! | interactions| `id_a  id_b  weight`              |

mod closure;
mod dag;
mod interactions;

use std::path::Path;

use crate::error::{Error, Result};
use crate::fsio::{read_to_string, tsv_records, write_atomic};
use crate::objective::{SimilarityBuilder, SimilarityDataset};

pub use closure::{closure_dataset, transitive_closure};
pub use dag::{TaxonomyBuilder, TaxonomyDag};
pub use interactions::{aggregate_interactions, cognate_similarity, AnnotationTable, InteractionLog};

/// One line of an edge file.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeRecord {
    pub child: String,
    pub parent: String,
    pub weight: Option<f64>,
}

fn parse_error(source: &str, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        path: source.to_string(),
        line,
        msg: msg.into(),
    }
}

fn parse_number(source: &str, line: usize, field: &str, what: &str) -> Result<f64> {
    let v: f64 = field
        .trim()
        .parse()
        .map_err(|_| parse_error(source, line, format!("invalid {what} `{field}`")))?;
    if !(v.is_finite() && v >= 0.0) {
        return Err(parse_error(source, line, format!("{what} must be finite and >= 0, got {field}")));
    }
    Ok(v)
}

/// Parses edge-list text; `source` names the input in error messages.
pub fn parse_edges(text: &str, source: &str) -> Result<Vec<EdgeRecord>> {
    tsv_records(text)
        .map(|(line, f)| match f.as_slice() {
            [c, p] | [c, p, ""] => Ok(EdgeRecord {
                child: c.to_string(),
                parent: p.to_string(),
                weight: None,
            }),
            [c, p, w] => Ok(EdgeRecord {
                child: c.to_string(),
                parent: p.to_string(),
                weight: Some(parse_number(source, line, w, "weight")?),
            }),
            _ => Err(parse_error(
                source,
                line,
                format!("expected 2 or 3 tab-separated fields, found {}", f.len()),
            )),
        })
        .collect()
}

pub fn load_edges(path: &Path) -> Result<Vec<EdgeRecord>> {
    parse_edges(&read_to_string(path)?, &path.display().to_string())
}

/// Loads an edge file as a taxonomy, rejecting self-loops and cycles.
pub fn load_taxonomy(path: &Path) -> Result<TaxonomyDag> {
    let mut b = TaxonomyBuilder::new();
    for e in load_edges(path)? {
        b.add_edge(&e.child, &e.parent)?;
    }
    b.build()
}

/// Writes `child<TAB>parent` lines.
pub fn save_edges<S: AsRef<str>>(path: &Path, edges: &[(S, S)]) -> Result<()> {
    write_atomic(path, format_edges(edges).as_bytes())
}

pub fn format_edges<S: AsRef<str>>(edges: &[(S, S)]) -> String {
    let mut out = String::new();
    for (c, p) in edges {
        out.push_str(c.as_ref());
        out.push('\t');
        out.push_str(p.as_ref());
        out.push('\n');
    }
    out
}

pub fn parse_similarity(text: &str, source: &str) -> Result<SimilarityDataset> {
    let mut b = SimilarityBuilder::new();
    for (line, f) in tsv_records(text) {
        let [a, c, s] = f.as_slice() else {
            return Err(parse_error(source, line, format!("expected 3 fields, found {}", f.len())));
        };
        let score = parse_number(source, line, s, "score")?;
        b.add_score(a, c, score)
            .map_err(|e| parse_error(source, line, e.to_string()))?;
    }
    Ok(b.build())
}

pub fn load_similarity(path: &Path) -> Result<SimilarityDataset> {
    parse_similarity(&read_to_string(path)?, &path.display().to_string())
}

pub fn parse_annotations(text: &str, source: &str) -> Result<AnnotationTable> {
    let mut t = AnnotationTable::new();
    for (line, f) in tsv_records(text) {
        let [e, s] = f.as_slice() else {
            return Err(parse_error(source, line, format!("expected 2 fields, found {}", f.len())));
        };
        t.add(e, s);
    }
    Ok(t)
}

pub fn load_annotations(path: &Path) -> Result<AnnotationTable> {
    parse_annotations(&read_to_string(path)?, &path.display().to_string())
}

pub fn parse_interactions(text: &str, source: &str) -> Result<InteractionLog> {
    let mut log = InteractionLog::new();
    for (line, f) in tsv_records(text) {
        let [a, b, w] = f.as_slice() else {
            return Err(parse_error(source, line, format!("expected 3 fields, found {}", f.len())));
        };
        let w = parse_number(source, line, w, "weight")?;
        log.push(a, b, w)?;
    }
    Ok(log)
}

pub fn load_interactions(path: &Path) -> Result<InteractionLog> {
    parse_interactions(&read_to_string(path)?, &path.display().to_string())
}
