//! Classical communication topology.
//!
//! Nodes are 0-indexed internally and 1-indexed in every text format and
//! error message. The pair-selection law is the one induced by drawing a node
//! uniformly and then one of its neighbours uniformly:
//! `p_ij = (1/N) (1/deg i + 1/deg j)`. The consensus Laplacian has
//! off-diagonals `-p_ij / 2`, which makes one expected gossip step equal to
//! multiplication by `I - L`.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;
use std::path::Path;

use serde::Serialize;
use thiserror::Error;

use crate::error::{Error, Result};
use crate::tol;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("graph needs at least 2 nodes, got {0}")]
    TooFewNodes(usize),
    #[error("self-loop at node {0}")]
    SelfLoop(usize),
    #[error("duplicate edge {{{0},{1}}}")]
    DuplicateEdge(usize, usize),
    #[error("edge endpoint {node} out of range 1..={n}")]
    OutOfRange { node: usize, n: usize },
    #[error("graph is disconnected: node {0} unreachable from node 1")]
    Disconnected(usize),
    #[error("edge list line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("unknown graph spec '{0}' (expected complete:N, ring:N, path:N or a file)")]
    UnknownSpec(String),
}

/// Unordered edge `{a, b}` stored 0-indexed with `a < b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Edge(pub usize, pub usize);

impl Edge {
    pub fn new(a: usize, b: usize) -> Edge {
        if a < b {
            Edge(a, b)
        } else {
            Edge(b, a)
        }
    }

    pub fn contains(&self, v: usize) -> bool {
        self.0 == v || self.1 == v
    }
}

impl fmt::Display for Edge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{},{}}}", self.0 + 1, self.1 + 1)
    }
}

/// Validated, connected, simple undirected graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NetworkGraph {
    n: usize,
    edges: Vec<Edge>,
    neighbors: Vec<Vec<usize>>,
}

impl NetworkGraph {
    /// Builds a graph from 1-indexed endpoint pairs.
    pub fn from_edge_list(n: usize, edges: &[(usize, usize)]) -> std::result::Result<Self, GraphError> {
        if n < 2 {
            return Err(GraphError::TooFewNodes(n));
        }
        let mut seen = BTreeSet::new();
        for &(a, b) in edges {
            for v in [a, b] {
                if v == 0 || v > n {
                    return Err(GraphError::OutOfRange { node: v, n });
                }
            }
            if a == b {
                return Err(GraphError::SelfLoop(a));
            }
            if !seen.insert(Edge::new(a - 1, b - 1)) {
                return Err(GraphError::DuplicateEdge(a.min(b), a.max(b)));
            }
        }
        let edges: Vec<Edge> = seen.into_iter().collect();
        let mut neighbors = vec![Vec::new(); n];
        for e in &edges {
            neighbors[e.0].push(e.1);
            neighbors[e.1].push(e.0);
        }
        for nb in &mut neighbors {
            nb.sort_unstable();
        }

        let mut visited = vec![false; n];
        let mut queue = VecDeque::from([0]);
        visited[0] = true;
        while let Some(v) = queue.pop_front() {
            for &w in &neighbors[v] {
                if !visited[w] {
                    visited[w] = true;
                    queue.push_back(w);
                }
            }
        }
        if let Some(missing) = visited.iter().position(|&v| !v) {
            return Err(GraphError::Disconnected(missing + 1));
        }

        Ok(NetworkGraph { n, edges, neighbors })
    }

    pub fn complete(n: usize) -> std::result::Result<Self, GraphError> {
        let mut edges = Vec::new();
        for i in 1..=n {
            for j in i + 1..=n {
                edges.push((i, j));
            }
        }
        Self::from_edge_list(n, &edges)
    }

    pub fn ring(n: usize) -> std::result::Result<Self, GraphError> {
        if n < 3 {
            return Err(GraphError::TooFewNodes(n));
        }
        let edges: Vec<_> = (1..=n).map(|i| (i, i % n + 1)).collect();
        Self::from_edge_list(n, &edges)
    }

    pub fn path(n: usize) -> std::result::Result<Self, GraphError> {
        let edges: Vec<_> = (1..n).map(|i| (i, i + 1)).collect();
        Self::from_edge_list(n, &edges)
    }

    /// Parses the edge-list text format: a node count line followed by one
    /// 1-indexed `i j` pair per line. `#` starts a comment.
    pub fn parse_edge_list(text: &str) -> std::result::Result<Self, GraphError> {
        let mut n = None;
        let mut edges = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let fields: Vec<&str> = content.split_whitespace().collect();
            let parse = |s: &str| {
                s.parse::<usize>().map_err(|_| GraphError::Parse {
                    line,
                    msg: format!("expected a non-negative integer, got '{s}'"),
                })
            };
            match (n, fields.as_slice()) {
                (None, [count]) => n = Some(parse(count)?),
                (None, _) => {
                    return Err(GraphError::Parse {
                        line,
                        msg: "first line must hold the node count".into(),
                    })
                }
                (Some(_), [a, b]) => edges.push((parse(a)?, parse(b)?)),
                (Some(_), _) => {
                    return Err(GraphError::Parse {
                        line,
                        msg: format!("expected 'i j', got '{content}'"),
                    })
                }
            }
        }
        let n = n.ok_or(GraphError::Parse {
            line: 0,
            msg: "empty edge list".into(),
        })?;
        Self::from_edge_list(n, &edges)
    }

    /// Resolves `complete:N`, `ring:N`, `path:N` or an edge-list file path.
    pub fn from_spec(spec: &str) -> Result<Self> {
        let generated = spec.split_once(':').and_then(|(kind, n)| {
            let n: usize = n.trim().parse().ok()?;
            match kind.trim() {
                "complete" => Some(Self::complete(n)),
                "ring" => Some(Self::ring(n)),
                "path" => Some(Self::path(n)),
                _ => None,
            }
        });
        if let Some(g) = generated {
            return Ok(g?);
        }
        let path = Path::new(spec);
        if !path.exists() {
            return Err(GraphError::UnknownSpec(spec.to_string()).into());
        }
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(Self::parse_edge_list(&text)?)
    }

    /// Writes the edge-list text format.
    pub fn to_edge_list(&self) -> String {
        let mut out = format!("{}\n", self.n);
        for e in &self.edges {
            out.push_str(&format!("{} {}\n", e.0 + 1, e.1 + 1));
        }
        out
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    /// Edges in lexicographic order.
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.neighbors[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.neighbors[v].len()
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.neighbors[a].binary_search(&b).is_ok()
    }

    /// Graph with node `v` renamed to `perm[v]`.
    pub fn relabeled(&self, perm: &[usize]) -> NetworkGraph {
        let edges: Vec<_> = self
            .edges
            .iter()
            .map(|e| (perm[e.0] + 1, perm[e.1] + 1))
            .collect();
        NetworkGraph::from_edge_list(self.n, &edges).expect("relabeling preserves validity")
    }
}

/// Probability of each edge being the active pair in one gossip slot.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EdgeDistribution {
    entries: Vec<(Edge, f64)>,
}

impl EdgeDistribution {
    /// `(edge, p)` pairs aligned with [`NetworkGraph::edges`].
    pub fn entries(&self) -> &[(Edge, f64)] {
        &self.entries
    }

    pub fn prob(&self, e: Edge) -> Option<f64> {
        self.entries
            .binary_search_by(|(x, _)| x.cmp(&e))
            .ok()
            .map(|i| self.entries[i].1)
    }

    pub fn total(&self) -> f64 {
        self.entries.iter().map(|(_, p)| p).sum()
    }
}

pub fn pair_selection_distribution(g: &NetworkGraph) -> EdgeDistribution {
    let n = g.node_count() as f64;
    let entries = g
        .edges()
        .iter()
        .map(|&e| {
            let p = (1.0 / g.degree(e.0) as f64 + 1.0 / g.degree(e.1) as f64) / n;
            (e, p)
        })
        .collect();
    EdgeDistribution { entries }
}

/// Dense symmetric consensus Laplacian.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Laplacian {
    n: usize,
    data: Vec<f64>,
}

impl Laplacian {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    /// Row-major entries.
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.n).map(<[f64]>::to_vec).collect()
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    pub fn eigen(&self) -> Result<Eigen> {
        jacobi_eigen(&self.data, self.n)
    }
}

pub fn laplacian(g: &NetworkGraph) -> Laplacian {
    let n = g.node_count();
    let mut data = vec![0.0; n * n];
    for &(e, p) in pair_selection_distribution(g).entries() {
        let w = 0.5 * p;
        data[e.0 * n + e.1] = -w;
        data[e.1 * n + e.0] = -w;
        data[e.0 * n + e.0] += w;
        data[e.1 * n + e.1] += w;
    }
    Laplacian { n, data }
}

/// Second-smallest Laplacian eigenvalue (the spectral gap).
pub fn lambda2(l: &Laplacian) -> Result<f64> {
    let eig = l.eigen()?;
    if eig.values.len() < 2 {
        return Err(Error::Numerical("lambda2 needs at least two nodes".into()));
    }
    Ok(eig.values[1])
}

/// Full eigendecomposition of a symmetric matrix.
#[derive(Debug, Clone)]
pub struct Eigen {
    /// Eigenvalues, ascending.
    pub values: Vec<f64>,
    /// `vectors[k]` is the unit eigenvector for `values[k]`.
    pub vectors: Vec<Vec<f64>>,
    pub sweeps: usize,
}

/// Cyclic Jacobi rotations on a row-major symmetric `n x n` matrix.
pub fn jacobi_eigen(matrix: &[f64], n: usize) -> Result<Eigen> {
    if matrix.len() != n * n {
        return Err(Error::Dimension {
            expected: n * n,
            got: matrix.len(),
        });
    }
    let mut a = matrix.to_vec();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }

    let off_norm = |a: &[f64]| {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += a[i * n + j] * a[i * n + j];
                }
            }
        }
        s.sqrt()
    };

    let mut sweeps = 0;
    while off_norm(&a) >= tol::JACOBI_OFF_DIAG {
        if sweeps == tol::JACOBI_MAX_SWEEPS {
            return Err(Error::Numerical(format!(
                "Jacobi eigensolver did not converge in {sweeps} sweeps"
            )));
        }
        sweeps += 1;
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k * n + p], a[k * n + q]);
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p * n + k], a[q * n + k]);
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                a[p * n + q] = 0.0;
                a[q * n + p] = 0.0;
                for k in 0..n {
                    let (vkp, vkq) = (v[k * n + p], v[k * n + q]);
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[i * n + i].total_cmp(&a[j * n + j]));
    let values = order.iter().map(|&i| a[i * n + i]).collect();
    let vectors = order
        .iter()
        .map(|&col| (0..n).map(|k| v[k * n + col]).collect())
        .collect();
    Ok(Eigen {
        values,
        vectors,
        sweeps,
    })
}
