//! Directed multigraphs, incidence matrices, and connectivity analysis.
//!
//! Vertices are `0..n`. Parallel edges between the same pair of vertices
//! are allowed, self-loops are not. Edge order is significant: it fixes
//! the column order of the incidence matrix, so identical inputs always
//! reproduce identical matrices.

use itertools::Itertools;
use nalgebra::DMatrix;

use crate::{Error, Result};

/// Largest vertex count accepted by [`DirectedGraph::spanning_trees_towards`].
pub const TREE_ORACLE_LIMIT: usize = 8;

/// A weighted directed edge. Indices are 0-based.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub tail: usize,
    pub head: usize,
    pub weight: f64,
}

impl Edge {
    pub fn new(tail: usize, head: usize, weight: f64) -> Self {
        Self { tail, head, weight }
    }
}

/// A directed multigraph with strictly positive edge weights.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectedGraph {
    n: usize,
    edges: Vec<Edge>,
}

impl DirectedGraph {
    /// Validates and builds a graph. Edge order is preserved.
    pub fn new(n: usize, edges: Vec<Edge>) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptyGraph);
        }
        for (j, e) in edges.iter().enumerate() {
            if e.tail >= n {
                return Err(Error::IndexOutOfRange { edge: j, vertex: e.tail, n });
            }
            if e.head >= n {
                return Err(Error::IndexOutOfRange { edge: j, vertex: e.head, n });
            }
            if e.tail == e.head {
                return Err(Error::SelfLoop { edge: j, vertex: e.tail });
            }
            if !(e.weight > 0.0) {
                return Err(Error::NonPositiveWeight { edge: j, weight: e.weight });
            }
        }
        Ok(Self { n, edges })
    }

    /// Convenience constructor from `(tail, head, weight)` triples.
    pub fn from_triples(n: usize, triples: &[(usize, usize, f64)]) -> Result<Self> {
        Self::new(
            n,
            triples.iter().map(|&(t, h, w)| Edge::new(t, h, w)).collect(),
        )
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// The graph with every edge direction flipped; weights kept.
    pub fn reversed(&self) -> Self {
        Self {
            n: self.n,
            edges: self
                .edges
                .iter()
                .map(|e| Edge::new(e.head, e.tail, e.weight))
                .collect(),
        }
    }

    /// The n×m incidence matrix: column j holds -1 at the tail and +1 at
    /// the head of edge j.
    pub fn incidence_matrix(&self) -> IncidenceMatrix {
        let mut d = DMatrix::<i64>::zeros(self.n, self.edges.len());
        for (j, e) in self.edges.iter().enumerate() {
            d[(e.tail, j)] = -1;
            d[(e.head, j)] = 1;
        }
        IncidenceMatrix { entries: d }
    }

    /// Partition of the vertices into weakly connected components
    /// (reachability over undirected edges). Components are sorted by
    /// their smallest vertex, vertices ascending inside each.
    pub fn connected_components(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n];
        for e in &self.edges {
            adj[e.tail].push(e.head);
            adj[e.head].push(e.tail);
        }
        let mut seen = vec![false; self.n];
        let mut components = Vec::new();
        for start in 0..self.n {
            if seen[start] {
                continue;
            }
            let mut stack = vec![start];
            let mut comp = Vec::new();
            seen[start] = true;
            while let Some(v) = stack.pop() {
                comp.push(v);
                for &w in &adj[v] {
                    if !seen[w] {
                        seen[w] = true;
                        stack.push(w);
                    }
                }
            }
            comp.sort_unstable();
            components.push(comp);
        }
        components
    }

    /// Partition into maximal strongly connected components, ordered by
    /// smallest contained vertex (Kosaraju's two-pass scheme).
    pub fn strongly_connected_components(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.n];
        let mut rin = vec![Vec::new(); self.n];
        for e in &self.edges {
            out[e.tail].push(e.head);
            rin[e.head].push(e.tail);
        }

        // First pass: vertices by decreasing finish time.
        let mut order = Vec::with_capacity(self.n);
        let mut seen = vec![false; self.n];
        for start in 0..self.n {
            if seen[start] {
                continue;
            }
            // Iterative DFS recording the postorder.
            let mut stack = vec![(start, 0usize)];
            seen[start] = true;
            while let Some(&mut (v, ref mut next)) = stack.last_mut() {
                if *next < out[v].len() {
                    let w = out[v][*next];
                    *next += 1;
                    if !seen[w] {
                        seen[w] = true;
                        stack.push((w, 0));
                    }
                } else {
                    order.push(v);
                    stack.pop();
                }
            }
        }

        // Second pass over the reversed graph.
        let mut assigned = vec![false; self.n];
        let mut components = Vec::new();
        for &start in order.iter().rev() {
            if assigned[start] {
                continue;
            }
            let mut stack = vec![start];
            assigned[start] = true;
            let mut comp = Vec::new();
            while let Some(v) = stack.pop() {
                comp.push(v);
                for &w in &rin[v] {
                    if !assigned[w] {
                        assigned[w] = true;
                        stack.push(w);
                    }
                }
            }
            comp.sort_unstable();
            components.push(comp);
        }
        components.sort_by_key(|c| c[0]);
        components
    }

    /// True when the whole graph is a single strongly connected component.
    pub fn is_strongly_connected(&self) -> bool {
        self.strongly_connected_components().len() == 1
    }

    /// Vertices from which every vertex can reach `root` along directed
    /// edges, i.e. whether a spanning tree towards `root` can exist.
    pub fn all_reach(&self, root: usize) -> bool {
        let mut rin = vec![Vec::new(); self.n];
        for e in &self.edges {
            rin[e.head].push(e.tail);
        }
        let mut seen = vec![false; self.n];
        let mut stack = vec![root];
        seen[root] = true;
        let mut count = 1;
        while let Some(v) = stack.pop() {
            for &w in &rin[v] {
                if !seen[w] {
                    seen[w] = true;
                    count += 1;
                    stack.push(w);
                }
            }
        }
        count == self.n
    }

    /// Exhaustively enumerates all spanning trees directed towards `root`:
    /// edge subsets of size n-1 in which every other vertex has a unique
    /// directed path to `root`. Subsets are lists of edge indices, returned
    /// in lexicographic order.
    ///
    /// This is a brute-force enumeration over all (n-1)-edge subsets and is
    /// capped at [`TREE_ORACLE_LIMIT`] vertices.
    pub fn spanning_trees_towards(&self, root: usize) -> Result<Vec<Vec<usize>>> {
        if self.n > TREE_ORACLE_LIMIT {
            return Err(Error::GraphTooLargeForOracle { n: self.n, limit: TREE_ORACLE_LIMIT });
        }
        if root >= self.n {
            return Err(Error::IndexOutOfRange { edge: 0, vertex: root, n: self.n });
        }
        if self.n == 1 {
            // The empty subset spans a single vertex.
            return Ok(vec![Vec::new()]);
        }
        let m = self.edges.len();
        let want = self.n - 1;
        if m < want {
            return Ok(Vec::new());
        }
        let mut trees = Vec::new();
        for subset in (0..m).combinations(want) {
            if self.is_tree_towards(&subset, root) {
                trees.push(subset);
            }
        }
        Ok(trees)
    }

    /// Sum over spanning trees towards `root` of the product of tree edge
    /// weights; zero when no such tree exists.
    pub fn tree_weight_sum_towards(&self, root: usize) -> Result<f64> {
        Ok(self
            .spanning_trees_towards(root)?
            .iter()
            .map(|t| t.iter().map(|&j| self.edges[j].weight).product::<f64>())
            .sum())
    }

    fn is_tree_towards(&self, subset: &[usize], root: usize) -> bool {
        // Out-degree: exactly one per non-root vertex, zero at the root.
        let mut out_deg = vec![0usize; self.n];
        for &j in subset {
            out_deg[self.edges[j].tail] += 1;
        }
        if out_deg[root] != 0 {
            return false;
        }
        if (0..self.n).any(|v| v != root && out_deg[v] != 1) {
            return false;
        }
        // Acyclic over the undirected skeleton: n-1 edges joining distinct
        // components form a spanning tree; the out-degree pattern then
        // orients every path towards the root.
        let mut parent: Vec<usize> = (0..self.n).collect();
        fn find(parent: &mut Vec<usize>, mut v: usize) -> usize {
            while parent[v] != v {
                parent[v] = parent[parent[v]];
                v = parent[v];
            }
            v
        }
        for &j in subset {
            let a = find(&mut parent, self.edges[j].tail);
            let b = find(&mut parent, self.edges[j].head);
            if a == b {
                return false;
            }
            parent[a] = b;
        }
        true
    }
}

/// Incidence matrix with exact integer entries in {-1, 0, +1}.
#[derive(Debug, Clone, PartialEq)]
pub struct IncidenceMatrix {
    entries: DMatrix<i64>,
}

impl IncidenceMatrix {
    pub fn entries(&self) -> &DMatrix<i64> {
        &self.entries
    }

    pub fn nrows(&self) -> usize {
        self.entries.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.entries.ncols()
    }

    pub fn to_f64(&self) -> DMatrix<f64> {
        self.entries.map(|v| v as f64)
    }

    /// Kronecker extension `D ⊗ I_d` for vector-valued vertex states.
    pub fn kron_extend(&self, d: usize) -> DMatrix<i64> {
        assert!(d >= 1, "spatial dimension must be at least 1");
        let eye = DMatrix::<i64>::identity(d, d);
        self.entries.kronecker(&eye)
    }
}
