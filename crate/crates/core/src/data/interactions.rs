use std::collections::{BTreeSet, HashMap};

use crate::error::{Error, Result};
use crate::objective::{SimilarityBuilder, SimilarityDataset};

/// Weighted pairwise events, e.g. message counts between two users.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct InteractionLog {
    records: Vec<(String, String, f64)>,
}

impl InteractionLog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, a: &str, b: &str, weight: f64) -> Result<()> {
        if !(weight.is_finite() && weight >= 0.0) {
            return Err(Error::InvalidScore {
                a: a.to_string(),
                b: b.to_string(),
                score: weight,
            });
        }
        self.records.push((a.to_string(), b.to_string(), weight));
        Ok(())
    }

    pub fn records(&self) -> &[(String, String, f64)] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

/// `X_ij` = total weight over records for the unordered pair `{i, j}`.
/// Records from an id to itself register the id but add no score.
pub fn aggregate_interactions(log: &InteractionLog) -> Result<SimilarityDataset> {
    let mut b = SimilarityBuilder::new();
    for (a, c, w) in log.records() {
        if a == c {
            b.add_concept(a);
        } else {
            b.accumulate(a, c, *w)?;
        }
    }
    Ok(b.build())
}

/// Entity-to-annotation-set membership, e.g. languages and cognate sets.
#[derive(Debug, Clone, Default)]
pub struct AnnotationTable {
    entities: Vec<String>,
    index: HashMap<String, usize>,
    set_index: HashMap<String, usize>,
    /// Per entity: the annotation sets it belongs to.
    members: Vec<BTreeSet<usize>>,
}

impl AnnotationTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registers an entity without annotating it.
    pub fn add_entity(&mut self, entity: &str) -> usize {
        if let Some(&i) = self.index.get(entity) {
            return i;
        }
        let i = self.entities.len();
        self.entities.push(entity.to_string());
        self.index.insert(entity.to_string(), i);
        self.members.push(BTreeSet::new());
        i
    }

    /// Adds the row `(entity, set)`; repeated rows are stored once.
    pub fn add(&mut self, entity: &str, set: &str) {
        let e = self.add_entity(entity);
        let next = self.set_index.len();
        let s = *self.set_index.entry(set.to_string()).or_insert(next);
        self.members[e].insert(s);
    }

    pub fn len(&self) -> usize {
        self.entities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entities.is_empty()
    }

    pub fn entities(&self) -> &[String] {
        &self.entities
    }

    /// `a(l)`: number of annotations of entity `e`.
    pub fn annotation_count(&self, e: usize) -> usize {
        self.members[e].len()
    }

    /// `c(l1, l2)`: number of shared annotation sets.
    pub fn shared_count(&self, a: usize, b: usize) -> usize {
        self.members[a].intersection(&self.members[b]).count()
    }
}

/// `csim(l1, l2) = c(l1, l2) / min(a(l1), a(l2))`.
pub fn cognate_similarity(table: &AnnotationTable) -> Result<SimilarityDataset> {
    if let Some(e) = (0..table.len()).find(|&e| table.annotation_count(e) == 0) {
        return Err(Error::NoAnnotations(table.entities[e].clone()));
    }
    let mut by_set: HashMap<usize, Vec<usize>> = HashMap::new();
    for (e, sets) in table.members.iter().enumerate() {
        for &s in sets {
            by_set.entry(s).or_default().push(e);
        }
    }
    let mut shared: HashMap<(usize, usize), usize> = HashMap::new();
    for members in by_set.values() {
        for (x, &a) in members.iter().enumerate() {
            for &b in &members[x + 1..] {
                *shared.entry((a.min(b), a.max(b))).or_insert(0) += 1;
            }
        }
    }
    let mut pairs: Vec<_> = shared.into_iter().collect();
    pairs.sort_unstable();

    let mut b = SimilarityBuilder::new();
    for id in table.entities() {
        b.add_concept(id);
    }
    for ((x, y), c) in pairs {
        let denom = table.annotation_count(x).min(table.annotation_count(y));
        b.add_score(&table.entities[x], &table.entities[y], c as f64 / denom as f64)?;
    }
    Ok(b.build())
}
