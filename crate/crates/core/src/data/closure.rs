use super::TaxonomyDag;
use crate::exec::{map_slice, Execution};
use crate::objective::{SimilarityBuilder, SimilarityDataset};

/// All pairs `(u, v)` with a directed path `u -> .. -> v`, i.e. `v` is an
/// ancestor of `u`. Sorted by `u`, then `v`.
///
/// Ancestor sets are memoized and built level by level (a node's level is one
/// more than its deepest parent's), so each level can be processed in
/// parallel against the finished levels above it.
pub fn transitive_closure(dag: &TaxonomyDag, exec: Execution) -> Vec<(usize, usize)> {
    let n = dag.len();
    let mut level = vec![0usize; n];
    for &v in dag.topo_order() {
        level[v] = dag.parents(v).iter().map(|&p| level[p] + 1).max().unwrap_or(0);
    }
    let depth = level.iter().copied().max().map_or(0, |d| d + 1);
    let mut by_level: Vec<Vec<usize>> = vec![Vec::new(); depth];
    for v in 0..n {
        by_level[level[v]].push(v);
    }

    let mut ancestors: Vec<Vec<u32>> = vec![Vec::new(); n];
    for nodes in by_level.iter().skip(1) {
        let sets = map_slice(exec, nodes, |&v| {
            let mut set: Vec<u32> = Vec::new();
            for &p in dag.parents(v) {
                set.push(p as u32);
                set.extend_from_slice(&ancestors[p]);
            }
            set.sort_unstable();
            set.dedup();
            set
        });
        for (&v, set) in nodes.iter().zip(sets) {
            ancestors[v] = set;
        }
    }

    let mut out = Vec::with_capacity(ancestors.iter().map(Vec::len).sum());
    for (u, set) in ancestors.iter().enumerate() {
        out.extend(set.iter().map(|&v| (u, v as usize)));
    }
    out
}

/// Binary similarity over every DAG node: `X = 1` on closure pairs.
pub fn closure_dataset(dag: &TaxonomyDag, exec: Execution) -> SimilarityDataset {
    let mut b = SimilarityBuilder::new();
    for id in dag.nodes() {
        b.add_concept(id);
    }
    let nodes = dag.nodes();
    for (u, v) in transitive_closure(dag, exec) {
        b.add_score(&nodes[u], &nodes[v], 1.0)
            .expect("closure pairs are distinct and unit-scored");
    }
    b.build()
}
