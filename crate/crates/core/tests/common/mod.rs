#![allow(dead_code)]

use lorentz_embed::data::TaxonomyDag;
use lorentz_embed::geometry::{lift, LorentzPoint};
use rand::Rng;

/// `child<TAB>parent` lines of a complete tree rooted at `n0`.
pub fn balanced_tree_tsv(branching: usize, depth: usize) -> String {
    let mut out = String::new();
    let mut frontier = vec![0usize];
    let mut next = 1;
    for _ in 0..depth {
        let mut level = Vec::new();
        for &p in &frontier {
            for _ in 0..branching {
                out.push_str(&format!("n{next}\tn{p}\n"));
                level.push(next);
                next += 1;
            }
        }
        frontier = level;
    }
    out
}

pub fn balanced_tree(branching: usize, depth: usize) -> TaxonomyDag {
    let text = balanced_tree_tsv(branching, depth);
    let edges: Vec<(&str, &str)> = text.lines().map(|l| l.split_once('\t').unwrap()).collect();
    TaxonomyDag::from_edges(&edges).unwrap()
}

/// Uniform direction, radius uniform in `[0, max_norm]`.
pub fn random_spatial<R: Rng>(rng: &mut R, dim: usize, max_norm: f64) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-3 && n <= 1.0 {
            let r = rng.random_range(0.0..=max_norm);
            return v.iter().map(|x| x * r / n).collect();
        }
    }
}

pub fn random_point<R: Rng>(rng: &mut R, dim: usize, max_norm: f64) -> LorentzPoint {
    lift(&random_spatial(rng, dim, max_norm))
}

/// Random DAG: edges only run from higher to lower index.
pub fn random_dag<R: Rng>(rng: &mut R, n: usize, p: f64) -> (TaxonomyDag, Vec<(usize, usize)>) {
    let mut b = lorentz_embed::data::TaxonomyBuilder::new();
    for v in 0..n {
        b.add_node(&format!("v{v}"));
    }
    let mut edges = Vec::new();
    for c in 1..n {
        for p_ in 0..c {
            if rng.random_bool(p) {
                b.add_edge(&format!("v{c}"), &format!("v{p_}")).unwrap();
                edges.push((c, p_));
            }
        }
    }
    (b.build().unwrap(), edges)
}
