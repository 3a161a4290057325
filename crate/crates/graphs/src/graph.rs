use std::collections::BTreeSet;

use crate::GraphError;

/// Simple undirected graph on `0..n` with sorted adjacency lists.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FiniteGraph {
    adj: Vec<Vec<usize>>,
}

impl FiniteGraph {
    pub fn empty(n: usize) -> Self {
        FiniteGraph { adj: vec![vec![]; n] }
    }

    /// Rejects self-loops, repeated edges and out-of-range endpoints.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self, GraphError> {
        let mut adj = vec![vec![]; n];
        for &(u, v) in edges {
            if u >= n || v >= n {
                return Err(GraphError::UnknownVertex(u.max(v)));
            }
            if u == v {
                return Err(GraphError::BadEdge(u, v));
            }
            adj[u].push(v);
            adj[v].push(u);
        }
        for (u, list) in adj.iter_mut().enumerate() {
            list.sort_unstable();
            if list.windows(2).any(|w| w[0] == w[1]) {
                let v = list.windows(2).find(|w| w[0] == w[1]).map(|w| w[0]).unwrap_or(u);
                return Err(GraphError::BadEdge(u.min(v), u.max(v)));
            }
        }
        Ok(FiniteGraph { adj })
    }

    /// Keeps the first copy of each edge and drops self-loops.
    pub(crate) fn from_edges_erased(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let mut adj = vec![vec![]; n];
        for (u, v) in edges {
            if u != v {
                adj[u].push(v);
                adj[v].push(u);
            }
        }
        for list in adj.iter_mut() {
            list.sort_unstable();
            list.dedup();
        }
        FiniteGraph { adj }
    }

    pub fn path(n: usize) -> Self {
        let e: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
        FiniteGraph::from_edges(n, &e).expect("path")
    }

    /// Cycle on `n ≥ 3` vertices.
    pub fn cycle(n: usize) -> Result<Self, GraphError> {
        if n < 3 {
            return Err(GraphError::Parameter(format!("a simple cycle needs 3 vertices, got {n}")));
        }
        let mut e: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
        e.push((n - 1, 0));
        FiniteGraph::from_edges(n, &e)
    }

    /// Center 0 joined to `leaves` vertices.
    pub fn star(leaves: usize) -> Self {
        let e: Vec<_> = (1..=leaves).map(|i| (0, i)).collect();
        FiniteGraph::from_edges(leaves + 1, &e).expect("star")
    }

    pub fn complete(n: usize) -> Self {
        let e: Vec<_> = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).collect();
        FiniteGraph::from_edges(n, &e).expect("complete")
    }

    pub fn n(&self) -> usize {
        self.adj.len()
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adj[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.adj.iter().map(|l| l.len()).collect()
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(|l| l.len()).sum::<usize>() / 2
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adj.get(u).is_some_and(|l| l.binary_search(&v).is_ok())
    }

    /// Edges `(u, v)` with `u < v`, sorted.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut e = vec![];
        for (u, l) in self.adj.iter().enumerate() {
            for &v in l {
                if u < v {
                    e.push((u, v));
                }
            }
        }
        e
    }

    /// Vertices within graph distance `r` of `v`, sorted.
    pub fn ball(&self, v: usize, r: usize) -> Vec<usize> {
        let mut seen = BTreeSet::from([v]);
        let mut frontier = vec![v];
        for _ in 0..r {
            let mut next = vec![];
            for &x in &frontier {
                for &y in &self.adj[x] {
                    if seen.insert(y) {
                        next.push(y);
                    }
                }
            }
            frontier = next;
        }
        seen.into_iter().collect()
    }

    /// One `u v` line per edge, sorted.
    pub fn to_edge_list(&self) -> String {
        self.edges().iter().map(|(u, v)| format!("{u} {v}\n")).collect()
    }

    /// Parse the edge-list format. Without `n`, the vertex count is one
    /// more than the largest id. Blank lines and `#` comments are skipped.
    pub fn parse_edge_list(text: &str, n: Option<usize>) -> Result<Self, GraphError> {
        let mut edges = vec![];
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let parts: Vec<&str> = line.split_whitespace().collect();
            let parse = |s: &str| {
                s.parse::<usize>().map_err(|e| GraphError::Parse { line: i + 1, msg: format!("{s:?}: {e}") })
            };
            if parts.len() != 2 {
                return Err(GraphError::Parse { line: i + 1, msg: "expected two vertex ids".into() });
            }
            edges.push((parse(parts[0])?, parse(parts[1])?));
        }
        let n = n.unwrap_or_else(|| edges.iter().map(|&(u, v)| u.max(v) + 1).max().unwrap_or(0));
        FiniteGraph::from_edges(n, &edges)
    }

    /// Induced subgraph on `keep` (relabelled by position).
    pub fn induced(&self, keep: &[usize]) -> FiniteGraph {
        let pos = |v: usize| keep.iter().position(|&x| x == v);
        let mut e = vec![];
        for (i, &u) in keep.iter().enumerate() {
            for &v in &self.adj[u] {
                if let Some(j) = pos(v) {
                    if i < j {
                        e.push((i, j));
                    }
                }
            }
        }
        FiniteGraph::from_edges(keep.len(), &e).expect("induced subgraph of a simple graph")
    }
}

/// `(∂A, ∂²A)` with `∂A` the neighbors of `A` outside `A` and
/// `∂²A = ∂A ∪ ∂(A ∪ ∂A)`.
pub fn boundary_sets(g: &FiniteGraph, a: &[usize]) -> Result<(BTreeSet<usize>, BTreeSet<usize>), GraphError> {
    if let Some(&v) = a.iter().find(|&&v| v >= g.n()) {
        return Err(GraphError::UnknownVertex(v));
    }
    let set: BTreeSet<usize> = a.iter().copied().collect();
    let boundary = |s: &BTreeSet<usize>| -> BTreeSet<usize> {
        s.iter().flat_map(|&v| g.neighbors(v).iter().copied()).filter(|u| !s.contains(u)).collect()
    };
    let d1 = boundary(&set);
    let closed: BTreeSet<usize> = set.union(&d1).copied().collect();
    let d2: BTreeSet<usize> = d1.union(&boundary(&closed)).copied().collect();
    Ok((d1, d2))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_edges() {
        assert!(FiniteGraph::from_edges(2, &[(0, 0)]).is_err());
        assert!(FiniteGraph::from_edges(2, &[(0, 1), (1, 0)]).is_err());
        assert!(FiniteGraph::from_edges(2, &[(0, 2)]).is_err());
    }

    #[test]
    fn boundaries_on_path() {
        let g = FiniteGraph::path(5);
        let (d1, d2) = boundary_sets(&g, &[0]).unwrap();
        assert_eq!(d1, BTreeSet::from([1]));
        assert_eq!(d2, BTreeSet::from([1, 2]));
        let (d1, d2) = boundary_sets(&g, &[2]).unwrap();
        assert_eq!(d1, BTreeSet::from([1, 3]));
        assert_eq!(d2, BTreeSet::from([0, 1, 3, 4]));
        let (d1, d2) = boundary_sets(&g, &[0, 1, 2, 3, 4]).unwrap();
        assert!(d1.is_empty() && d2.is_empty());
        assert!(boundary_sets(&g, &[7]).is_err());
    }

    #[test]
    fn edge_list_roundtrip() {
        let g = FiniteGraph::cycle(5).unwrap();
        let text = g.to_edge_list();
        assert_eq!(text.lines().next(), Some("0 1"));
        assert_eq!(FiniteGraph::parse_edge_list(&text, None).unwrap(), g);
        assert!(matches!(FiniteGraph::parse_edge_list("0 1\n1 x\n", None), Err(GraphError::Parse { line: 2, .. })));
    }

    #[test]
    fn balls() {
        let g = FiniteGraph::path(6);
        assert_eq!(g.ball(2, 1), vec![1, 2, 3]);
        assert_eq!(g.ball(0, 2), vec![0, 1, 2]);
        let h = g.induced(&[1, 2, 3]);
        assert_eq!(h.edges(), vec![(0, 1), (1, 2)]);
    }
}
