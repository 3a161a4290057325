use std::collections::HashMap;
use std::fmt;

use pca_core::{domains, mix64, NoiseSource, StreamId};

use crate::{FiniteGraph, GraphError, OffspringDistribution};

/// Ulam-Harris-Neveu label: the path of child indices (1-based) from the root.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct UhnLabel(pub Vec<u32>);

impl UhnLabel {
    pub fn root() -> Self {
        UhnLabel(vec![])
    }

    pub fn is_root(&self) -> bool {
        self.0.is_empty()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn parent(&self) -> Option<UhnLabel> {
        if self.0.is_empty() {
            None
        } else {
            Some(UhnLabel(self.0[..self.0.len() - 1].to_vec()))
        }
    }

    pub fn child(&self, j: u32) -> UhnLabel {
        let mut v = self.0.clone();
        v.push(j);
        UhnLabel(v)
    }

    pub fn concat(&self, other: &UhnLabel) -> UhnLabel {
        UhnLabel(self.0.iter().chain(&other.0).copied().collect())
    }

    /// `self ≤ other` in the ancestor order.
    pub fn is_prefix_of(&self, other: &UhnLabel) -> bool {
        other.0.starts_with(&self.0)
    }

    /// Stable 64-bit key, used to address per-vertex noise streams.
    pub fn key(&self) -> u64 {
        self.0.iter().fold(0x0123_4567_89AB_CDEF, |h, &x| mix64(h ^ (x as u64 + 1)))
    }

    pub fn parse(s: &str) -> Result<UhnLabel, String> {
        let s = s.trim();
        if s == "ø" || s.is_empty() {
            return Ok(UhnLabel::root());
        }
        s.split('.')
            .map(|p| match p.parse::<u32>() {
                Ok(0) => Err("labels are 1-based".to_string()),
                Ok(x) => Ok(x),
                Err(e) => Err(format!("{p:?}: {e}")),
            })
            .collect::<Result<Vec<_>, _>>()
            .map(UhnLabel)
    }
}

impl fmt::Display for UhnLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "ø");
        }
        let parts: Vec<String> = self.0.iter().map(|x| x.to_string()).collect();
        write!(f, "{}", parts.join("."))
    }
}

/// Finite rooted tree in breadth-first order (vertex 0 is the root, children
/// of a vertex are consecutive and ordered by label).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RootedTree {
    labels: Vec<UhnLabel>,
    parent: Vec<usize>,
    children: Vec<Vec<usize>>,
    index: HashMap<UhnLabel, usize>,
}

impl RootedTree {
    /// Breadth-first construction: `count(label)` children for each vertex of
    /// depth `< cap`.
    pub fn build(cap: usize, mut count: impl FnMut(&UhnLabel) -> usize) -> RootedTree {
        let mut t = RootedTree {
            labels: vec![UhnLabel::root()],
            parent: vec![usize::MAX],
            children: vec![vec![]],
            index: HashMap::from([(UhnLabel::root(), 0)]),
        };
        let mut start = 0;
        for _ in 0..cap {
            let end = t.labels.len();
            if start == end {
                break;
            }
            for p in start..end {
                let c = count(&t.labels[p]);
                for j in 1..=c {
                    let l = t.labels[p].child(j as u32);
                    let id = t.labels.len();
                    t.index.insert(l.clone(), id);
                    t.labels.push(l);
                    t.parent.push(p);
                    t.children.push(vec![]);
                    t.children[p].push(id);
                }
            }
            start = end;
        }
        t
    }

    /// From a label set; checks the tree axioms.
    pub fn from_labels(labels: &[UhnLabel]) -> Result<RootedTree, GraphError> {
        let set: HashMap<&UhnLabel, ()> = labels.iter().map(|l| (l, ())).collect();
        if !set.contains_key(&UhnLabel::root()) {
            return Err(GraphError::NotATree("root missing".into()));
        }
        for l in labels {
            if let Some(p) = l.parent() {
                if !set.contains_key(&p) {
                    return Err(GraphError::NotATree(format!("{l} present without its parent")));
                }
                let j = *l.0.last().expect("non-root");
                if j > 1 && !set.contains_key(&p.child(j - 1)) {
                    return Err(GraphError::NotATree(format!("{l} present without its elder sibling")));
                }
            }
        }
        let depth = labels.iter().map(|l| l.len()).max().unwrap_or(0);
        let t = RootedTree::build(depth, |l| {
            let mut c = 0;
            while set.contains_key(&l.child(c as u32 + 1)) {
                c += 1;
            }
            c
        });
        if t.len() != set.len() {
            return Err(GraphError::NotATree("duplicate labels".into()));
        }
        Ok(t)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn label(&self, v: usize) -> &UhnLabel {
        &self.labels[v]
    }

    pub fn labels(&self) -> &[UhnLabel] {
        &self.labels
    }

    pub fn find(&self, l: &UhnLabel) -> Option<usize> {
        self.index.get(l).copied()
    }

    pub fn parent(&self, v: usize) -> Option<usize> {
        (v != 0).then(|| self.parent[v])
    }

    pub fn children(&self, v: usize) -> &[usize] {
        &self.children[v]
    }

    pub fn depth_of(&self, v: usize) -> usize {
        self.labels[v].len()
    }

    pub fn depth(&self) -> usize {
        self.labels.last().map(|l| l.len()).unwrap_or(0)
    }

    /// Vertices of depth at most `d` (a prefix in breadth-first order).
    pub fn prefix_len(&self, d: usize) -> usize {
        self.labels.partition_point(|l| l.len() <= d)
    }

    /// Check the three tree axioms against the stored structure.
    pub fn audit(&self) -> Result<(), GraphError> {
        if self.labels.first() != Some(&UhnLabel::root()) {
            return Err(GraphError::NotATree("root is not vertex 0".into()));
        }
        for v in 1..self.len() {
            let p = self.parent[v];
            if Some(&self.labels[p]) != self.labels[v].parent().as_ref() {
                return Err(GraphError::NotATree(format!("{} has wrong parent", self.labels[v])));
            }
        }
        for v in 0..self.len() {
            for (i, &c) in self.children[v].iter().enumerate() {
                if self.labels[c] != self.labels[v].child(i as u32 + 1) {
                    return Err(GraphError::NotATree(format!("children of {} are not 1..c", self.labels[v])));
                }
            }
        }
        Ok(())
    }

    /// Undirected graph with the same vertex ids. Neighbor lists are sorted,
    /// so the parent comes first, then the children in label order.
    pub fn to_graph(&self) -> FiniteGraph {
        let e: Vec<(usize, usize)> = (1..self.len()).map(|v| (self.parent[v], v)).collect();
        FiniteGraph::from_edges(self.len(), &e).expect("tree edges are simple")
    }

    /// One label per line, `ø` for the root.
    pub fn to_text(&self) -> String {
        self.labels.iter().map(|l| format!("{l}\n")).collect()
    }

    pub fn parse_text(text: &str) -> Result<RootedTree, GraphError> {
        let mut labels = vec![];
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            labels.push(UhnLabel::parse(line).map_err(|msg| GraphError::Parse { line: i + 1, msg })?);
        }
        RootedTree::from_labels(&labels)
    }
}

/// Root with κ children, every other vertex with κ − 1, down to `depth`.
pub fn truncated_regular_tree(kappa: usize, depth: usize) -> Result<RootedTree, GraphError> {
    if kappa < 2 {
        return Err(GraphError::Parameter(format!("κ must be at least 2, got {kappa}")));
    }
    Ok(RootedTree::build(depth, |l| if l.is_root() { kappa } else { kappa - 1 }))
}

/// Galton-Watson tree capped at depth `cap`: the root draws from `root`,
/// every other vertex from `rest`. The draw of vertex `v` reads the uniform
/// at address `(replica, key(v), 0)` of the tree domain of `noise`.
pub fn sample_gw_tree(
    root: &OffspringDistribution,
    rest: &OffspringDistribution,
    cap: usize,
    noise: &NoiseSource,
    replica: u64,
) -> RootedTree {
    let src = noise.derive(domains::TREE);
    RootedTree::build(cap, |l| {
        let u = src.uniform(StreamId::new(replica, l.key(), 0));
        if l.is_root() {
            root.sample(u)
        } else {
            rest.sample(u)
        }
    })
}
