use std::collections::{HashMap, HashSet};

use crate::error::{Error, Result};

/// Directed acyclic ground-truth hierarchy. Edges point from the
/// subordinate (child) to the superior (parent).
#[derive(Debug, Clone)]
pub struct TaxonomyDag {
    nodes: Vec<String>,
    index: HashMap<String, usize>,
    parents: Vec<Vec<usize>>,
    children: Vec<Vec<usize>>,
    edges: Vec<(usize, usize)>,
    /// Parents precede their children.
    topo: Vec<usize>,
}

#[derive(Debug, Clone, Default)]
pub struct TaxonomyBuilder {
    nodes: Vec<String>,
    index: HashMap<String, usize>,
    edges: Vec<(usize, usize)>,
    seen: HashSet<(usize, usize)>,
}

impl TaxonomyBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_node(&mut self, id: &str) -> usize {
        if let Some(&i) = self.index.get(id) {
            return i;
        }
        let i = self.nodes.len();
        self.nodes.push(id.to_string());
        self.index.insert(id.to_string(), i);
        i
    }

    /// Adds `child -> parent`. Duplicate edges are ignored.
    pub fn add_edge(&mut self, child: &str, parent: &str) -> Result<()> {
        if child == parent {
            return Err(Error::SelfLoop(child.to_string()));
        }
        let c = self.add_node(child);
        let p = self.add_node(parent);
        if self.seen.insert((c, p)) {
            self.edges.push((c, p));
        }
        Ok(())
    }

    pub fn build(self) -> Result<TaxonomyDag> {
        let n = self.nodes.len();
        let mut parents = vec![Vec::new(); n];
        let mut children = vec![Vec::new(); n];
        for &(c, p) in &self.edges {
            parents[c].push(p);
            children[p].push(c);
        }

        // Kahn's algorithm, roots first
        let mut pending: Vec<usize> = parents.iter().map(Vec::len).collect();
        let mut topo: Vec<usize> = (0..n).filter(|&v| pending[v] == 0).collect();
        let mut head = 0;
        while head < topo.len() {
            let v = topo[head];
            head += 1;
            for &c in &children[v] {
                pending[c] -= 1;
                if pending[c] == 0 {
                    topo.push(c);
                }
            }
        }
        if topo.len() < n {
            let cycle = find_cycle(&parents, &pending);
            return Err(Error::Cycle(cycle.into_iter().map(|v| self.nodes[v].clone()).collect()));
        }

        Ok(TaxonomyDag {
            nodes: self.nodes,
            index: self.index,
            parents,
            children,
            edges: self.edges,
            topo,
        })
    }
}

/// Walks unfinished nodes along unfinished parents until a node repeats.
/// Every node left over by Kahn's algorithm has such a parent.
fn find_cycle(parents: &[Vec<usize>], pending: &[usize]) -> Vec<usize> {
    let start = (0..pending.len()).find(|&v| pending[v] > 0).expect("cycle exists");
    let mut path = vec![start];
    let mut pos: HashMap<usize, usize> = HashMap::from([(start, 0)]);
    let mut v = start;
    loop {
        v = *parents[v]
            .iter()
            .find(|&&p| pending[p] > 0)
            .expect("unfinished node has an unfinished parent");
        if let Some(&at) = pos.get(&v) {
            let mut cycle = path[at..].to_vec();
            cycle.push(v);
            return cycle;
        }
        pos.insert(v, path.len());
        path.push(v);
    }
}

impl TaxonomyDag {
    pub fn from_edges<S: AsRef<str>>(edges: &[(S, S)]) -> Result<Self> {
        let mut b = TaxonomyBuilder::new();
        for (c, p) in edges {
            b.add_edge(c.as_ref(), p.as_ref())?;
        }
        b.build()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn parents(&self, v: usize) -> &[usize] {
        &self.parents[v]
    }

    pub fn children(&self, v: usize) -> &[usize] {
        &self.children[v]
    }

    /// `(child, parent)` index pairs in insertion order.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edge_ids(&self) -> Vec<(&str, &str)> {
        self.edges
            .iter()
            .map(|&(c, p)| (self.nodes[c].as_str(), self.nodes[p].as_str()))
            .collect()
    }

    /// Topological order with parents before children.
    pub fn topo_order(&self) -> &[usize] {
        &self.topo
    }

    /// Nodes without parents.
    pub fn roots(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(|&v| self.parents[v].is_empty())
    }

    /// Shortest number of edges from any root down to each node.
    pub fn shortest_from_root(&self) -> Vec<usize> {
        let mut sp = vec![usize::MAX; self.len()];
        let mut queue: std::collections::VecDeque<usize> = self.roots().collect();
        for &r in &queue {
            sp[r] = 0;
        }
        while let Some(v) = queue.pop_front() {
            for &c in &self.children[v] {
                if sp[c] == usize::MAX {
                    sp[c] = sp[v] + 1;
                    queue.push_back(c);
                }
            }
        }
        sp
    }

    /// Longest number of edges from each node down to any descendant.
    pub fn longest_to_leaf(&self) -> Vec<usize> {
        let mut lp = vec![0usize; self.len()];
        for &v in self.topo.iter().rev() {
            lp[v] = self.children[v].iter().map(|&c| lp[c] + 1).max().unwrap_or(0);
        }
        lp
    }

    /// Longest root-to-leaf path, in edges.
    pub fn depth(&self) -> usize {
        self.longest_to_leaf().into_iter().max().unwrap_or(0)
    }
}
