use std::collections::{BTreeMap, HashMap};

use crate::error::{Error, Result};

/// Concepts plus a sparse, symmetric, nonnegative similarity matrix.
///
/// Only strictly positive scores are stored; an absent pair has similarity 0.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityDataset {
    concepts: Vec<String>,
    index: HashMap<String, usize>,
    /// Per concept: `(neighbor, score)` sorted by neighbor.
    rows: Vec<Vec<(usize, f64)>>,
    /// Per concept: `(score, neighbor)` sorted by score, then neighbor.
    by_score: Vec<Vec<(f64, usize)>>,
    /// Per concept: sorted scored neighbors plus the concept itself.
    excluded: Vec<Vec<usize>>,
    positives: Vec<(usize, usize)>,
}

impl SimilarityDataset {
    pub fn len(&self) -> usize {
        self.concepts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.concepts.is_empty()
    }

    pub fn concepts(&self) -> &[String] {
        &self.concepts
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    /// `X_ij`, zero for unscored pairs and for `i == j`.
    pub fn score(&self, i: usize, j: usize) -> f64 {
        let row = &self.rows[i];
        match row.binary_search_by_key(&j, |&(k, _)| k) {
            Ok(p) => row[p].1,
            Err(_) => 0.0,
        }
    }

    pub fn row(&self, i: usize) -> &[(usize, f64)] {
        &self.rows[i]
    }

    /// Unordered positive pairs `(i, j)`, `i < j`, `X_ij > 0`.
    pub fn positives(&self) -> &[(usize, usize)] {
        &self.positives
    }

    /// Scored entries `(i, j, X_ij)` with `i < j`.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.rows.iter().enumerate().flat_map(|(i, row)| {
            row.iter()
                .filter(move |&&(j, _)| j > i)
                .map(move |&(j, s)| (i, j, s))
        })
    }

    pub(crate) fn by_score(&self, i: usize) -> &[(f64, usize)] {
        &self.by_score[i]
    }

    pub(crate) fn excluded(&self, i: usize) -> &[usize] {
        &self.excluded[i]
    }
}

#[derive(Debug, Clone, Default)]
pub struct SimilarityBuilder {
    concepts: Vec<String>,
    index: HashMap<String, usize>,
    scores: BTreeMap<(usize, usize), f64>,
}

impl SimilarityBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registers a concept (idempotent) and returns its index.
    pub fn add_concept(&mut self, id: &str) -> usize {
        if let Some(&i) = self.index.get(id) {
            return i;
        }
        let i = self.concepts.len();
        self.concepts.push(id.to_string());
        self.index.insert(id.to_string(), i);
        i
    }

    fn key(&mut self, a: &str, b: &str, score: f64) -> Result<(usize, usize)> {
        if a == b {
            return Err(Error::SelfLoop(a.to_string()));
        }
        if !(score.is_finite() && score >= 0.0) {
            return Err(Error::InvalidScore {
                a: a.to_string(),
                b: b.to_string(),
                score,
            });
        }
        let i = self.add_concept(a);
        let j = self.add_concept(b);
        Ok((i.min(j), i.max(j)))
    }

    /// Sets `X_ab = X_ba = score`. Supplying a pair twice with different
    /// values is an asymmetry error.
    pub fn add_score(&mut self, a: &str, b: &str, score: f64) -> Result<()> {
        let key = self.key(a, b, score)?;
        match self.scores.get(&key) {
            Some(&old) if old != score => Err(Error::Asymmetric(a.to_string(), b.to_string())),
            _ => {
                self.scores.insert(key, score);
                Ok(())
            }
        }
    }

    /// Adds `weight` to the unordered pair `{a, b}`.
    pub fn accumulate(&mut self, a: &str, b: &str, weight: f64) -> Result<()> {
        let key = self.key(a, b, weight)?;
        *self.scores.entry(key).or_insert(0.0) += weight;
        Ok(())
    }

    pub fn build(self) -> SimilarityDataset {
        let m = self.concepts.len();
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); m];
        let mut positives = Vec::new();
        for (&(i, j), &s) in &self.scores {
            if s > 0.0 {
                rows[i].push((j, s));
                rows[j].push((i, s));
                positives.push((i, j));
            }
        }
        for row in rows.iter_mut() {
            row.sort_by_key(|&(k, _)| k);
        }
        let by_score = rows
            .iter()
            .map(|row| {
                let mut v: Vec<(f64, usize)> = row.iter().map(|&(k, s)| (s, k)).collect();
                v.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                v
            })
            .collect();
        let excluded = rows
            .iter()
            .enumerate()
            .map(|(i, row)| {
                let mut v: Vec<usize> = row.iter().map(|&(k, _)| k).collect();
                let p = v.partition_point(|&k| k < i);
                v.insert(p, i);
                v
            })
            .collect();
        SimilarityDataset {
            concepts: self.concepts,
            index: self.index,
            rows,
            by_score,
            excluded,
            positives,
        }
    }
}
