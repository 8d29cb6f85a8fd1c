//! Trees, their graph metric, generators and a planar layout.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{stream, Purpose};

/// A connected acyclic graph on nodes `0..n`, with an optional planar layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeInstance {
    n: usize,
    edges: Vec<(usize, usize)>,
    layout: Option<Vec<[f64; 2]>>,
}

impl TreeInstance {
    pub fn new(n: usize, edges: Vec<(usize, usize)>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidInput("tree needs at least one node".into()));
        }
        if edges.len() != n - 1 {
            return Err(Error::InvalidInput(format!(
                "{} edges for {n} nodes; a tree has n - 1",
                edges.len()
            )));
        }
        for &(a, b) in &edges {
            if a >= n || b >= n || a == b {
                return Err(Error::InvalidInput(format!("bad edge ({a}, {b})")));
            }
        }
        let t = Self {
            n,
            edges,
            layout: None,
        };
        if t.bfs(0).iter().any(|d| d.is_none()) {
            return Err(Error::InvalidInput("tree is not connected".into()));
        }
        Ok(t)
    }

    pub fn with_layout(mut self, layout: Vec<[f64; 2]>) -> Result<Self> {
        if layout.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: layout.len(),
            });
        }
        self.layout = Some(layout);
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn layout(&self) -> Option<&[[f64; 2]]> {
        self.layout.as_deref()
    }

    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n];
        for &(a, b) in &self.edges {
            adj[a].push(b);
            adj[b].push(a);
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        adj
    }

    fn bfs(&self, root: usize) -> Vec<Option<usize>> {
        let adj = self.adjacency();
        let mut dist = vec![None; self.n];
        dist[root] = Some(0);
        let mut queue = VecDeque::from([root]);
        while let Some(u) = queue.pop_front() {
            let du = dist[u].unwrap_or(0);
            for &v in &adj[u] {
                if dist[v].is_none() {
                    dist[v] = Some(du + 1);
                    queue.push_back(v);
                }
            }
        }
        dist
    }

    /// Parent of every node when rooted at `root`; `None` for the root.
    pub fn parents(&self, root: usize) -> Vec<Option<usize>> {
        let adj = self.adjacency();
        let mut parent = vec![None; self.n];
        let mut seen = vec![false; self.n];
        seen[root] = true;
        let mut queue = VecDeque::from([root]);
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    parent[v] = Some(u);
                    queue.push_back(v);
                }
            }
        }
        parent
    }
}

/// Symmetric table of pairwise distances with zero diagonal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceTable {
    n: usize,
    data: Vec<f64>,
}

impl DistanceTable {
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            for j in i + 1..n {
                let d = f(i, j);
                data[i * n + j] = d;
                data[j * n + i] = d;
            }
        }
        Self { n, data }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    /// Unordered distinct pairs `(i, j)` with `i < j`, row by row.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n).flat_map(move |i| (i + 1..self.n).map(move |j| (i, j)))
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(0.0, f64::max)
    }
}

/// All-pairs hop distances by breadth-first search from every node.
pub fn tree_metric(t: &TreeInstance) -> Result<DistanceTable> {
    let rows: Vec<Vec<Option<usize>>> = (0..t.len()).map(|r| t.bfs(r)).collect();
    if rows.iter().flatten().any(|d| d.is_none()) {
        return Err(Error::InvalidInput("tree is not connected".into()));
    }
    Ok(DistanceTable::from_fn(t.len(), |i, j| {
        rows[i][j].unwrap_or(0) as f64
    }))
}

/// Tree families used for embedding experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum TreeKind {
    /// `n` nodes in a line.
    Path { n: usize },
    /// One hub with `n − 1` leaves.
    Star { n: usize },
    /// Complete `branching`-ary tree of the given depth.
    Balanced { branching: usize, depth: usize },
    /// A spine of `spine` nodes, each carrying `legs` leaves.
    Caterpillar { spine: usize, legs: usize },
    /// Uniform attachment: node `i` joins a uniformly drawn earlier node.
    Random { n: usize },
}

impl fmt::Display for TreeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            TreeKind::Path { n } => write!(f, "path:{n}"),
            TreeKind::Star { n } => write!(f, "star:{n}"),
            TreeKind::Balanced { branching, depth } => write!(f, "balanced:{branching}:{depth}"),
            TreeKind::Caterpillar { spine, legs } => write!(f, "caterpillar:{spine}:{legs}"),
            TreeKind::Random { n } => write!(f, "random:{n}"),
        }
    }
}

impl FromStr for TreeKind {
    type Err = Error;

    /// Parses `path:10`, `star:8`, `balanced:2:3`, `caterpillar:10:2`, `random:50`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.trim().split(':').collect();
        let num = |i: usize| -> Result<usize> {
            parts
                .get(i)
                .ok_or_else(|| Error::Parse(format!("tree spec `{s}` is missing a field")))?
                .parse::<usize>()
                .map_err(|e| Error::Parse(format!("tree spec `{s}`: {e}")))
        };
        let arity = match parts[0] {
            "path" | "star" | "random" => 2,
            "balanced" | "caterpillar" => 3,
            other => return Err(Error::Parse(format!("unknown tree kind `{other}`"))),
        };
        if parts.len() != arity {
            return Err(Error::Parse(format!("tree spec `{s}` has the wrong number of fields")));
        }
        let kind = match parts[0] {
            "path" => TreeKind::Path { n: num(1)? },
            "star" => TreeKind::Star { n: num(1)? },
            "random" => TreeKind::Random { n: num(1)? },
            "balanced" => TreeKind::Balanced {
                branching: num(1)?,
                depth: num(2)?,
            },
            _ => TreeKind::Caterpillar {
                spine: num(1)?,
                legs: num(2)?,
            },
        };
        if kind.node_count() == 0 {
            return Err(Error::Parse(format!("tree spec `{s}` has no nodes")));
        }
        Ok(kind)
    }
}

impl TreeKind {
    pub fn node_count(&self) -> usize {
        match *self {
            TreeKind::Path { n } | TreeKind::Star { n } | TreeKind::Random { n } => n,
            TreeKind::Balanced { branching, depth } => (0..=depth).map(|d| branching.pow(d as u32)).sum(),
            TreeKind::Caterpillar { spine, legs } => spine * (1 + legs),
        }
    }
}

/// Builds a tree of `kind` with a normalized radial layout rooted at node 0.
pub fn generate_tree(kind: TreeKind, seed: u64) -> Result<TreeInstance> {
    let n = kind.node_count();
    if n == 0 {
        return Err(Error::InvalidInput("empty tree".into()));
    }
    let mut edges = Vec::with_capacity(n - 1);
    match kind {
        TreeKind::Path { n } => edges.extend((1..n).map(|i| (i - 1, i))),
        TreeKind::Star { n } => edges.extend((1..n).map(|i| (0, i))),
        TreeKind::Balanced { branching, .. } => {
            edges.extend((1..n).map(|i| ((i - 1) / branching, i)));
        }
        TreeKind::Caterpillar { spine, legs } => {
            edges.extend((1..spine).map(|i| (i - 1, i)));
            for s in 0..spine {
                for l in 0..legs {
                    edges.push((s, spine + s * legs + l));
                }
            }
        }
        TreeKind::Random { n } => {
            let mut rng = stream(seed, Purpose::Tree);
            edges.extend((1..n).map(|i| (rng.random_range(0..i), i)));
        }
    }
    let t = TreeInstance::new(n, edges)?;
    let layout = normalize_layout(&radial_layout(&t, 0));
    t.with_layout(layout)
}

/// Root at the origin, depth as radius, each subtree on an angular wedge
/// proportional to its leaf count.
pub fn radial_layout(t: &TreeInstance, root: usize) -> Vec<[f64; 2]> {
    let parent = t.parents(root);
    let mut children = vec![Vec::new(); t.len()];
    let mut order = Vec::with_capacity(t.len());
    {
        let adj = t.adjacency();
        let mut queue = VecDeque::from([root]);
        let mut seen = vec![false; t.len()];
        seen[root] = true;
        while let Some(u) = queue.pop_front() {
            order.push(u);
            for &v in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    children[u].push(v);
                    queue.push_back(v);
                }
            }
        }
    }
    let mut leaves = vec![0usize; t.len()];
    for &u in order.iter().rev() {
        leaves[u] = if children[u].is_empty() {
            1
        } else {
            children[u].iter().map(|&c| leaves[c]).sum()
        };
    }
    let mut depth = vec![0.0f64; t.len()];
    let mut wedge = vec![(0.0f64, std::f64::consts::TAU); t.len()];
    let mut out = vec![[0.0, 0.0]; t.len()];
    for &u in &order {
        if let Some(p) = parent[u] {
            depth[u] = depth[p] + 1.0;
            let (lo, hi) = wedge[u];
            let theta = 0.5 * (lo + hi);
            out[u] = [depth[u] * theta.cos(), depth[u] * theta.sin()];
        }
        let (lo, hi) = wedge[u];
        let total = leaves[u] as f64;
        let mut start = lo;
        for &c in &children[u] {
            let span = (hi - lo) * leaves[c] as f64 / total;
            wedge[c] = (start, start + span);
            start += span;
        }
    }
    out
}

/// Centers on the centroid and scales uniformly so every coordinate lies in `[−0.5, 0.5]`.
pub fn normalize_layout(coords: &[[f64; 2]]) -> Vec<[f64; 2]> {
    if coords.is_empty() {
        return Vec::new();
    }
    let n = coords.len() as f64;
    let cx = coords.iter().map(|c| c[0]).sum::<f64>() / n;
    let cy = coords.iter().map(|c| c[1]).sum::<f64>() / n;
    let centered: Vec<[f64; 2]> = coords.iter().map(|c| [c[0] - cx, c[1] - cy]).collect();
    let extent = centered
        .iter()
        .flat_map(|c| [c[0].abs(), c[1].abs()])
        .fold(0.0, f64::max);
    if extent == 0.0 {
        return vec![[0.0, 0.0]; coords.len()];
    }
    let s = 0.5 / extent;
    centered.iter().map(|c| [c[0] * s, c[1] * s]).collect()
}
