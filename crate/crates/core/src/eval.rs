//! Reconstruction and hierarchy-recovery metrics.
//!
//! Every observed edge `(u, v)` is ranked by distance among the unobserved
//! candidates of `u`; ties count against the model. Average precision is
//! computed per source node over its candidates sorted by distance, with
//! non-neighbors placed first among equal distances, and averaged over nodes
//! with at least one edge.
//! MAP and Spearman's rho are fractions in `[0, 1]` and `[-1, 1]`.

use std::fmt::Write as _;

use crate::data::{transitive_closure, TaxonomyDag};
use crate::error::{Error, Result};
use crate::exec::{map_range, Execution};
use crate::geometry;
use crate::optimizer::EmbeddingTable;

/// Observed edge set as symmetric adjacency over table indices.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservedEdges {
    adj: Vec<Vec<usize>>,
}

impl ObservedEdges {
    /// Builds an undirected edge set over `m` nodes; self pairs are dropped.
    pub fn undirected(m: usize, pairs: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let mut adj = vec![Vec::new(); m];
        for (u, v) in pairs {
            if u != v {
                adj[u].push(v);
                adj[v].push(u);
            }
        }
        for a in adj.iter_mut() {
            a.sort_unstable();
            a.dedup();
        }
        ObservedEdges { adj }
    }

    pub fn node_count(&self) -> usize {
        self.adj.len()
    }

    pub fn neighbors(&self, u: usize) -> &[usize] {
        &self.adj[u]
    }

    pub fn contains(&self, u: usize, v: usize) -> bool {
        self.adj[u].binary_search(&v).is_ok()
    }

    /// Number of ordered pairs.
    pub fn len(&self) -> usize {
        self.adj.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Rank and precision statistics of one source node.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeRanking {
    /// Ranks of the node's neighbors, in index order.
    pub ranks: Vec<usize>,
    pub average_precision: f64,
}

/// Ranks every neighbor of `u`. Returns `None` when `u` has no neighbors.
fn rank_node(table: &EmbeddingTable, observed: &ObservedEdges, u: usize) -> Option<NodeRanking> {
    let nbrs = observed.neighbors(u);
    if nbrs.is_empty() {
        return None;
    }
    let x = table.row(u);
    let mut others = Vec::with_capacity(table.len().saturating_sub(nbrs.len() + 1));
    let mut near = Vec::with_capacity(nbrs.len());
    let mut next = 0;
    for v in 0..table.len() {
        if v == u {
            continue;
        }
        let d = geometry::distance(x, table.row(v));
        if next < nbrs.len() && nbrs[next] == v {
            near.push(d);
            next += 1;
        } else {
            others.push(d);
        }
    }
    others.sort_unstable_by(f64::total_cmp);
    let ranks: Vec<usize> = near
        .iter()
        .map(|&d| others.partition_point(|&o| o <= d) + 1)
        .collect();

    // The k-th closest neighbor sits at position k + (non-neighbors not
    // farther than it) in the sorted candidate list.
    near.sort_unstable_by(f64::total_cmp);
    let precision_sum: f64 = near
        .iter()
        .enumerate()
        .map(|(k, &d)| {
            let hits = k + 1;
            hits as f64 / (hits + others.partition_point(|&o| o <= d)) as f64
        })
        .sum();
    Some(NodeRanking {
        ranks,
        average_precision: precision_sum / near.len() as f64,
    })
}

/// Rank of the observed edge `(u, v)` among `u`'s unobserved candidates.
pub fn rank_edge(table: &EmbeddingTable, u: &str, v: &str, observed: &ObservedEdges) -> Result<usize> {
    let ui = table.index_of(u).ok_or_else(|| Error::UnknownId(u.to_string()))?;
    let vi = table.index_of(v).ok_or_else(|| Error::UnknownId(v.to_string()))?;
    if observed.node_count() != table.len() {
        return Err(Error::DimensionMismatch {
            expected: table.len(),
            actual: observed.node_count(),
        });
    }
    if !observed.contains(ui, vi) {
        return Err(Error::Invalid(format!("({u}, {v}) is not an observed edge")));
    }
    let d = geometry::distance(table.row(ui), table.row(vi));
    let worse = (0..table.len())
        .filter(|&w| w != ui && !observed.contains(ui, w))
        .filter(|&w| geometry::distance(table.row(ui), table.row(w)) <= d)
        .count();
    Ok(worse + 1)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Reconstruction {
    pub mean_rank: f64,
    pub map: f64,
    /// Per table row; `None` for rows without observed edges.
    pub per_node: Vec<Option<NodeRanking>>,
}

/// Mean rank over all observed (ordered) edges and mean average precision
/// over source nodes.
pub fn reconstruction_metrics(
    table: &EmbeddingTable,
    observed: &ObservedEdges,
    exec: Execution,
) -> Result<Reconstruction> {
    if observed.node_count() != table.len() {
        return Err(Error::DimensionMismatch {
            expected: table.len(),
            actual: observed.node_count(),
        });
    }
    if observed.is_empty() {
        return Err(Error::Invalid("no observed edges to rank".into()));
    }
    let per_node = map_range(exec, table.len(), |u| rank_node(table, observed, u));
    let (mut rank_sum, mut edges, mut ap_sum, mut sources) = (0usize, 0usize, 0.0, 0usize);
    for r in per_node.iter().flatten() {
        rank_sum += r.ranks.iter().sum::<usize>();
        edges += r.ranks.len();
        ap_sum += r.average_precision;
        sources += 1;
    }
    Ok(Reconstruction {
        mean_rank: rank_sum as f64 / edges as f64,
        map: ap_sum / sources as f64,
        per_node,
    })
}

/// `sp / (sp + lp)` for every node: `sp` is the shortest path from the
/// nearest root, `lp` the longest path down to a descendant. Roots
/// (including isolated nodes) get 0, leaves below a root get 1.
pub fn normalized_ranks(dag: &TaxonomyDag) -> Vec<f64> {
    let sp = dag.shortest_from_root();
    let lp = dag.longest_to_leaf();
    sp.iter()
        .zip(&lp)
        .map(|(&s, &l)| if s == 0 { 0.0 } else { s as f64 / (s + l) as f64 })
        .collect()
}

pub fn normalized_rank(dag: &TaxonomyDag, id: &str) -> Result<f64> {
    let v = dag.index_of(id).ok_or_else(|| Error::UnknownId(id.to_string()))?;
    Ok(normalized_ranks(dag)[v])
}

/// 1-based ranks with ties sharing their average rank.
pub fn average_ranks(xs: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut ranks = vec![0.0; xs.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && xs[order[end]] == xs[order[start]] {
            end += 1;
        }
        // positions start..end hold ranks start+1..=end
        let avg = (start + 1 + end) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = avg;
        }
        start = end;
    }
    ranks
}

/// Spearman's rank correlation: Pearson correlation of average ranks.
pub fn spearman_rho(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::DimensionMismatch {
            expected: xs.len(),
            actual: ys.len(),
        });
    }
    if xs.len() < 2 {
        return Err(Error::Invalid("correlation needs at least two observations".into()));
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("correlation input".into()));
    }
    let rx = average_ranks(xs);
    let ry = average_ranks(ys);
    let n = xs.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::ConstantInput);
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Norm of the concept's Poincaré-ball image, in `[0, 1)`.
pub fn generality_norm(table: &EmbeddingTable, id: &str) -> Result<f64> {
    let i = table.index_of(id).ok_or_else(|| Error::UnknownId(id.to_string()))?;
    Ok(row_generality(table.row(i)))
}

fn row_generality(x: &[f64]) -> f64 {
    geometry::euclidean_norm(&x[1..]) / (x[0] + 1.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodeDetail {
    pub id: String,
    pub norm: f64,
    pub normalized_rank: f64,
    pub mean_rank: Option<f64>,
    pub average_precision: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub mean_rank: f64,
    pub map: f64,
    pub spearman_rho: f64,
    pub nodes: Vec<NodeDetail>,
}

impl EvalReport {
    /// `metric<TAB>value` lines.
    pub fn key_values(&self) -> String {
        format!(
            "mean_rank\t{:?}\nmap\t{:?}\nspearman_rho\t{:?}\n",
            self.mean_rank, self.map, self.spearman_rho
        )
    }

    pub fn summary(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{} nodes: mean rank {:.3}, MAP {:.3}, rho(norm, rank) {:.3}",
            self.nodes.len(),
            self.mean_rank,
            self.map,
            self.spearman_rho
        );
        s
    }

    /// Per-node table: `id  norm  normalized_rank  mean_rank  ap`.
    pub fn node_table(&self) -> String {
        let mut s = String::from("# id\tnorm\tnormalized_rank\tmean_rank\taverage_precision\n");
        for n in &self.nodes {
            let opt = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |x| format!("{x:?}"));
            let _ = writeln!(
                s,
                "{}\t{:?}\t{:?}\t{}\t{}",
                n.id,
                n.norm,
                n.normalized_rank,
                opt(n.mean_rank),
                opt(n.average_precision)
            );
        }
        s
    }
}

/// Restricts `table` to the taxonomy's nodes, in DAG order.
fn restrict_to_dag(table: &EmbeddingTable, dag: &TaxonomyDag) -> Result<EmbeddingTable> {
    let missing: Vec<&String> = dag.nodes().iter().filter(|id| table.index_of(id).is_none()).collect();
    if !missing.is_empty() {
        return Err(Error::MissingIds {
            count: missing.len(),
            first: missing.iter().take(10).map(|s| s.to_string()).collect(),
        });
    }
    let mut data = Vec::with_capacity(dag.len() * table.width());
    for id in dag.nodes() {
        data.extend_from_slice(table.row(table.index_of(id).expect("checked above")));
    }
    EmbeddingTable::from_flat(dag.nodes().to_vec(), table.dim(), data)
}

/// Closure-edge reconstruction plus rank correlation between embedding norm
/// and normalized taxonomy rank. Candidates are restricted to DAG nodes.
pub fn evaluate(table: &EmbeddingTable, dag: &TaxonomyDag, exec: Execution) -> Result<EvalReport> {
    let sub = restrict_to_dag(table, dag)?;
    let observed = ObservedEdges::undirected(dag.len(), transitive_closure(dag, exec));
    let recon = reconstruction_metrics(&sub, &observed, exec)?;
    let ranks = normalized_ranks(dag);
    let norms: Vec<f64> = (0..sub.len()).map(|i| row_generality(sub.row(i))).collect();
    let rho = spearman_rho(&norms, &ranks)?;
    let nodes = dag
        .nodes()
        .iter()
        .enumerate()
        .map(|(i, id)| {
            let r = recon.per_node[i].as_ref();
            NodeDetail {
                id: id.clone(),
                norm: norms[i],
                normalized_rank: ranks[i],
                mean_rank: r.map(|r| r.ranks.iter().sum::<usize>() as f64 / r.ranks.len() as f64),
                average_precision: r.map(|r| r.average_precision),
            }
        })
        .collect();
    Ok(EvalReport {
        mean_rank: recon.mean_rank,
        map: recon.map,
        spearman_rho: rho,
        nodes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{lift, LorentzPoint};

    fn table_2d(points: &[(&str, [f64; 2])]) -> EmbeddingTable {
        EmbeddingTable::new(
            points.iter().map(|p| p.0.to_string()).collect(),
            points.iter().map(|p| lift(&p.1)).collect(),
        )
        .unwrap()
    }

    #[test]
    fn rank_extremes() {
        let t = table_2d(&[("u", [0.0, 0.0]), ("v", [0.1, 0.0]), ("a", [1.0, 0.0]), ("b", [0.0, 2.0])]);
        let obs = ObservedEdges::undirected(4, [(0, 1)]);
        assert_eq!(rank_edge(&t, "u", "v", &obs).unwrap(), 1);

        let t = table_2d(&[("u", [0.0, 0.0]), ("v", [5.0, 0.0]), ("a", [1.0, 0.0]), ("b", [0.0, 2.0])]);
        assert_eq!(rank_edge(&t, "u", "v", &obs).unwrap(), 3);
        assert!(matches!(rank_edge(&t, "u", "zz", &obs), Err(Error::UnknownId(_))));
        assert!(rank_edge(&t, "u", "a", &obs).is_err());
    }

    #[test]
    fn ties_count_against() {
        let t = table_2d(&[("u", [0.0, 0.0]), ("v", [1.0, 0.0]), ("w", [-1.0, 0.0])]);
        let obs = ObservedEdges::undirected(3, [(0, 1)]);
        assert_eq!(rank_edge(&t, "u", "v", &obs).unwrap(), 2);
    }

    #[test]
    fn perfect_reconstruction() {
        // two tight clusters far apart
        let t = table_2d(&[("a", [3.0, 0.0]), ("b", [3.1, 0.0]), ("c", [-3.0, 0.0]), ("d", [-3.1, 0.1])]);
        let obs = ObservedEdges::undirected(4, [(0, 1), (2, 3)]);
        let r = reconstruction_metrics(&t, &obs, Execution::Sequential).unwrap();
        assert_eq!(r.mean_rank, 1.0);
        assert_eq!(r.map, 1.0);
        assert!(reconstruction_metrics(&t, &ObservedEdges::undirected(4, []), Execution::Sequential).is_err());
    }

    #[test]
    fn normalized_rank_examples() {
        let dag = TaxonomyDag::from_edges(&[("a", "b"), ("b", "c")]).unwrap();
        // c is the root, a the leaf
        assert_eq!(normalized_rank(&dag, "c").unwrap(), 0.0);
        assert_eq!(normalized_rank(&dag, "b").unwrap(), 0.5);
        assert_eq!(normalized_rank(&dag, "a").unwrap(), 1.0);
        assert!(normalized_rank(&dag, "q").is_err());
    }

    #[test]
    fn spearman_examples() {
        let xs = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert!((spearman_rho(&xs, &[2.0, 4.0, 6.0, 8.0, 10.0]).unwrap() - 1.0).abs() < 1e-15);
        assert!((spearman_rho(&xs, &[5.0, 4.0, 3.0, 2.0, 1.0]).unwrap() + 1.0).abs() < 1e-15);
        assert!((spearman_rho(&xs, &[1.0, 3.0, 2.0, 5.0, 4.0]).unwrap() - 0.8).abs() < 1e-15);
        assert!(matches!(spearman_rho(&xs, &[1.0; 5]), Err(Error::ConstantInput)));
        assert!(spearman_rho(&xs, &[1.0]).is_err());
    }

    #[test]
    fn average_ranks_share_ties() {
        assert_eq!(average_ranks(&[10.0, 20.0, 10.0, 5.0]), vec![2.5, 4.0, 2.5, 1.0]);
    }

    #[test]
    fn generality_examples() {
        let t = EmbeddingTable::new(vec!["o".into()], vec![LorentzPoint::origin(3)]).unwrap();
        assert_eq!(generality_norm(&t, "o").unwrap(), 0.0);
        assert!(generality_norm(&t, "x").is_err());

        let dir = [0.6, -0.8];
        let mut prev = -1.0;
        for k in 0..50 {
            let r = k as f64 * 0.3;
            let t = table_2d(&[("p", [dir[0] * r, dir[1] * r])]);
            let g = generality_norm(&t, "p").unwrap();
            assert!(g > prev && g < 1.0);
            prev = g;
        }
    }

    #[test]
    fn evaluate_checks_coverage() {
        let dag = TaxonomyDag::from_edges(&[("a", "b"), ("c", "b")]).unwrap();
        let t = table_2d(&[("a", [1.0, 0.0])]);
        match evaluate(&t, &dag, Execution::Sequential) {
            Err(Error::MissingIds { count, first }) => {
                assert_eq!(count, 2);
                assert_eq!(first, vec!["b".to_string(), "c".to_string()]);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn evaluate_perfect_tiny() {
        // root b at the origin, leaves a and c on opposite sides
        let dag = TaxonomyDag::from_edges(&[("a", "b"), ("c", "b"), ("d", "e")]).unwrap();
        let t = table_2d(&[
            ("a", [0.5, 0.0]),
            ("b", [0.0, 0.0]),
            ("c", [-0.5, 0.0]),
            ("d", [0.0, 30.0]),
            ("e", [0.0, 29.0]),
        ]);
        let r = evaluate(&t, &dag, Execution::Sequential).unwrap();
        assert_eq!(r.mean_rank, 1.0);
        assert_eq!(r.map, 1.0);
        assert!(r.key_values().starts_with("mean_rank\t1.0\nmap\t1.0\n"));
        assert_eq!(r.nodes.len(), 5);
    }
}
