//! Weighted undirected MaxCut instances.
//!
//! Cut values follow the symmetric-weight convention: an assignment `x` scores
//! `Σ_{(i,j)∈E} W_ij (1 − x_i x_j)`, summed once per unordered edge, so every
//! cut edge contributes `2·W_ij`. Gset "best known" values count cut edges once
//! and therefore sit at half this scale.

use std::collections::HashSet;
use std::fmt::Write as _;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

/// Largest vertex count accepted by [`exact_maxcut`].
pub const EXACT_MAXCUT_LIMIT: usize = 26;

/// Ceiling on the random-cut ratio of an accepted random instance.
pub const POST_SELECTION_RATIO: f64 = 0.82;

/// Minimum mean degree of an accepted random instance.
pub const POST_SELECTION_MEAN_DEGREE: f64 = 3.0;

const POST_SELECTION_RETRIES: usize = 1000;
const PROXY_RESTARTS: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub w: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GraphFormat {
    Gset,
    WeightedList,
}

impl std::str::FromStr for GraphFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gset" => Ok(GraphFormat::Gset),
            "weighted-list" | "weighted" => Ok(GraphFormat::WeightedList),
            other => Err(Error::InvalidArgument(format!(
                "unknown graph format `{other}` (expected `gset` or `weighted-list`)"
            ))),
        }
    }
}

/// An undirected graph with nonzero edge weights and no self-loops.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    num_vertices: usize,
    edges: Vec<Edge>,
    adjacency: Vec<Vec<(usize, f64)>>,
}

impl Graph {
    /// Build a graph, validating that edges are in range, loop-free,
    /// nonzero-weighted and unique per unordered pair.
    pub fn new(num_vertices: usize, edges: Vec<Edge>) -> Result<Self> {
        if num_vertices == 0 {
            return Err(Error::InvalidArgument("graph needs at least one vertex".into()));
        }
        let mut seen = HashSet::with_capacity(edges.len());
        let mut adjacency = vec![Vec::new(); num_vertices];
        for (idx, e) in edges.iter().enumerate() {
            if e.u >= num_vertices || e.v >= num_vertices {
                return Err(Error::InvalidArgument(format!(
                    "edge {idx} ({}, {}) out of range for {num_vertices} vertices",
                    e.u, e.v
                )));
            }
            if e.u == e.v {
                return Err(Error::InvalidArgument(format!("edge {idx} is a self-loop on {}", e.u)));
            }
            if e.w == 0.0 || !e.w.is_finite() {
                return Err(Error::InvalidArgument(format!("edge {idx} has weight {}", e.w)));
            }
            if !seen.insert((e.u.min(e.v), e.u.max(e.v))) {
                return Err(Error::InvalidArgument(format!(
                    "duplicate edge ({}, {})",
                    e.u, e.v
                )));
            }
            adjacency[e.u].push((e.v, e.w));
            adjacency[e.v].push((e.u, e.w));
        }
        Ok(Graph {
            num_vertices,
            edges,
            adjacency,
        })
    }

    pub fn unweighted(num_vertices: usize, pairs: &[(usize, usize)]) -> Result<Self> {
        Graph::new(
            num_vertices,
            pairs.iter().map(|&(u, v)| Edge { u, v, w: 1.0 }).collect(),
        )
    }

    pub fn num_vertices(&self) -> usize {
        self.num_vertices
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Neighbours of `i` with the connecting edge weight.
    pub fn neighbors(&self, i: usize) -> &[(usize, f64)] {
        &self.adjacency[i]
    }

    /// Weighted degree `Σ_j |W_ij|`.
    pub fn degree(&self, i: usize) -> f64 {
        self.adjacency[i].iter().map(|(_, w)| w.abs()).sum()
    }

    pub fn max_degree(&self) -> usize {
        self.adjacency.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn mean_degree(&self) -> f64 {
        2.0 * self.edges.len() as f64 / self.num_vertices as f64
    }

    /// True when every edge weight is exactly one.
    pub fn is_unweighted(&self) -> bool {
        self.edges.iter().all(|e| e.w == 1.0)
    }

    pub fn total_weight(&self) -> f64 {
        self.edges.iter().map(|e| e.w).sum()
    }

    pub fn sum_squared_weights(&self) -> f64 {
        self.edges.iter().map(|e| e.w * e.w).sum()
    }

    pub fn is_connected(&self) -> bool {
        let mut seen = vec![false; self.num_vertices];
        let mut stack = vec![0usize];
        seen[0] = true;
        let mut count = 1;
        while let Some(u) = stack.pop() {
            for &(v, _) in &self.adjacency[u] {
                if !seen[v] {
                    seen[v] = true;
                    count += 1;
                    stack.push(v);
                }
            }
        }
        count == self.num_vertices
    }

    /// Serialize in Gset layout with 1-based indices.
    pub fn to_gset_string(&self) -> String {
        let mut out = String::with_capacity(16 * (self.edges.len() + 1));
        let _ = writeln!(out, "{} {}", self.num_vertices, self.edges.len());
        for e in &self.edges {
            let _ = writeln!(out, "{} {} {}", e.u + 1, e.v + 1, format_weight(e.w));
        }
        out
    }
}

fn format_weight(w: f64) -> String {
    if w.fract() == 0.0 && w.abs() < 1e15 {
        format!("{}", w as i64)
    } else {
        // shortest representation that round-trips
        format!("{w:?}")
    }
}

/// A ±1 assignment of every vertex.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<i8>", into = "Vec<i8>")]
pub struct Assignment(Vec<i8>);

impl TryFrom<Vec<i8>> for Assignment {
    type Error = Error;

    fn try_from(bits: Vec<i8>) -> Result<Self> {
        Assignment::new(bits)
    }
}

impl From<Assignment> for Vec<i8> {
    fn from(x: Assignment) -> Self {
        x.0
    }
}

impl Assignment {
    pub fn new(bits: Vec<i8>) -> Result<Self> {
        if let Some(pos) = bits.iter().position(|&b| b != 1 && b != -1) {
            return Err(Error::InvalidArgument(format!(
                "assignment entry {pos} is {}, expected ±1",
                bits[pos]
            )));
        }
        Ok(Assignment(bits))
    }

    pub fn all_plus(m: usize) -> Self {
        Assignment(vec![1; m])
    }

    pub fn random<R: rand::Rng + ?Sized>(m: usize, rng: &mut R) -> Self {
        Assignment((0..m).map(|_| if rng.random::<bool>() { 1 } else { -1 }).collect())
    }

    /// Decode the low `m` bits of `mask`: bit set ⇒ −1.
    pub fn from_mask(mask: u64, m: usize) -> Self {
        Assignment((0..m).map(|i| if mask >> i & 1 == 1 { -1 } else { 1 }).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[i8] {
        &self.0
    }

    pub fn get(&self, i: usize) -> i8 {
        self.0[i]
    }

    pub fn flip(&mut self, i: usize) {
        self.0[i] = -self.0[i];
    }

    pub fn negated(&self) -> Self {
        Assignment(self.0.iter().map(|b| -b).collect())
    }

    pub fn into_inner(self) -> Vec<i8> {
        self.0
    }
}

/// Parse a graph file. Indices in the text are 1-based.
pub fn parse_graph(text: &str, format: GraphFormat) -> Result<Graph> {
    // Both formats share the same layout; only the weight semantics differ downstream.
    let _ = format;
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty());

    let (header_line, header) = lines.next().ok_or(Error::Parse {
        line: 1,
        message: "missing header".into(),
    })?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 2 {
        return Err(Error::Parse {
            line: header_line,
            message: format!("header must be `m |E|`, found `{header}`"),
        });
    }
    let parse_count = |s: &str, what: &str| {
        s.parse::<usize>().map_err(|_| Error::Parse {
            line: header_line,
            message: format!("bad {what} `{s}`"),
        })
    };
    let m = parse_count(fields[0], "vertex count")?;
    let num_edges = parse_count(fields[1], "edge count")?;
    if m == 0 {
        return Err(Error::Parse {
            line: header_line,
            message: "vertex count must be positive".into(),
        });
    }

    let mut edges = Vec::with_capacity(num_edges);
    let mut seen = HashSet::with_capacity(num_edges);
    for (line, body) in lines {
        let fields: Vec<&str> = body.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(Error::Parse {
                line,
                message: format!("edge line must be `i j w`, found `{body}`"),
            });
        }
        let index = |s: &str| -> Result<usize> {
            let i = s.parse::<usize>().map_err(|_| Error::Parse {
                line,
                message: format!("bad vertex index `{s}`"),
            })?;
            if i == 0 || i > m {
                return Err(Error::Parse {
                    line,
                    message: format!("vertex index {i} out of range 1..={m}"),
                });
            }
            Ok(i - 1)
        };
        let u = index(fields[0])?;
        let v = index(fields[1])?;
        let w: f64 = fields[2].parse().map_err(|_| Error::Parse {
            line,
            message: format!("bad weight `{}`", fields[2]),
        })?;
        if u == v {
            return Err(Error::Parse {
                line,
                message: format!("self-loop on vertex {}", u + 1),
            });
        }
        if w == 0.0 || !w.is_finite() {
            return Err(Error::Parse {
                line,
                message: format!("invalid weight {w}"),
            });
        }
        if !seen.insert((u.min(v), u.max(v))) {
            return Err(Error::Parse {
                line,
                message: format!("duplicate edge ({}, {})", u + 1, v + 1),
            });
        }
        edges.push(Edge { u, v, w });
    }
    if edges.len() != num_edges {
        return Err(Error::Parse {
            line: header_line,
            message: format!("header declares {num_edges} edges but {} were read", edges.len()),
        });
    }
    Graph::new(m, edges)
}

pub fn cut_value(g: &Graph, x: &Assignment) -> Result<f64> {
    check_len(g, x)?;
    Ok(cut_value_unchecked(g, x.as_slice()))
}

pub(crate) fn cut_value_unchecked(g: &Graph, x: &[i8]) -> f64 {
    g.edges
        .iter()
        .map(|e| e.w * (1.0 - f64::from(x[e.u] * x[e.v])))
        .sum()
}

pub(crate) fn check_len(g: &Graph, x: &Assignment) -> Result<()> {
    if x.len() != g.num_vertices() {
        return Err(Error::LengthMismatch {
            expected: g.num_vertices(),
            actual: x.len(),
        });
    }
    Ok(())
}

/// Classical lower bound `ν` on the maximum cut, in cut-edge units.
///
/// Unweighted graphs use Edwards–Erdős `|E|/2 + (m−1)/4`; weighted graphs use
/// Poljak–Turzík `w(G)/2 + w(T_min)/4`, which needs a connected graph.
pub fn maxcut_lower_bound_nu(g: &Graph) -> Result<f64> {
    let m = g.num_vertices() as f64;
    if g.is_unweighted() {
        return Ok(g.num_edges() as f64 / 2.0 + (m - 1.0) / 4.0);
    }
    let tree = minimum_spanning_tree_weight(g)?;
    Ok(g.total_weight() / 2.0 + tree / 4.0)
}

/// Kruskal; ties broken by edge index.
pub fn minimum_spanning_tree_weight(g: &Graph) -> Result<f64> {
    let mut order: Vec<usize> = (0..g.num_edges()).collect();
    order.sort_by(|&a, &b| {
        g.edges[a]
            .w
            .total_cmp(&g.edges[b].w)
            .then(a.cmp(&b))
    });
    let mut dsu = DisjointSets::new(g.num_vertices());
    let mut total = 0.0;
    let mut joined = 0;
    for idx in order {
        let e = g.edges[idx];
        if dsu.union(e.u, e.v) {
            total += e.w;
            joined += 1;
        }
    }
    if joined + 1 != g.num_vertices() {
        return Err(Error::Disconnected);
    }
    Ok(total)
}

struct DisjointSets {
    parent: Vec<usize>,
    rank: Vec<u8>,
}

impl DisjointSets {
    fn new(n: usize) -> Self {
        DisjointSets {
            parent: (0..n).collect(),
            rank: vec![0; n],
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        match self.rank[ra].cmp(&self.rank[rb]) {
            std::cmp::Ordering::Less => self.parent[ra] = rb,
            std::cmp::Ordering::Greater => self.parent[rb] = ra,
            std::cmp::Ordering::Equal => {
                self.parent[rb] = ra;
                self.rank[ra] += 1;
            }
        }
        true
    }
}

/// Global optimum by Gray-code enumeration of the `2^(m−1)` assignments with `x_0 = +1`.
pub fn exact_maxcut(g: &Graph) -> Result<(f64, Assignment)> {
    let m = g.num_vertices();
    if m > EXACT_MAXCUT_LIMIT {
        return Err(Error::TooLarge {
            what: "exact MaxCut enumeration",
            size: m,
            limit: EXACT_MAXCUT_LIMIT,
            hint: "use a local-search proxy or supply a best-known value",
        });
    }
    let mut x = vec![1i8; m];
    let mut value = 0.0;
    let mut best = 0.0;
    let mut best_mask = 0u64;
    let mut mask = 0u64;
    let free = m - 1;
    for step in 1u64..(1u64 << free) {
        let vertex = step.trailing_zeros() as usize + 1;
        let xi = f64::from(x[vertex]);
        // flipping x_i changes each incident term W(1 − x_i x_j) by 2·W·x_i·x_j
        let delta: f64 = g
            .neighbors(vertex)
            .iter()
            .map(|&(j, w)| 2.0 * w * xi * f64::from(x[j]))
            .sum();
        x[vertex] = -x[vertex];
        mask ^= 1 << vertex;
        value += delta;
        if value > best + 1e-9 {
            best = value;
            best_mask = mask;
        }
    }
    let assignment = Assignment::from_mask(best_mask, m);
    // recompute to shed accumulated rounding
    let exact = cut_value_unchecked(g, assignment.as_slice());
    Ok((exact, assignment))
}

/// G(m, p) with `p = target_mean_degree/(m−1)`, resampled until the mean
/// degree reaches 3 and a uniformly random cut scores at most 0.82 of the
/// best cut found (exact for small `m`, best of 50 converged restarts otherwise).
pub fn generate_random_instance(m: usize, target_mean_degree: f64, seed: u64) -> Result<Graph> {
    if m < 4 {
        return Err(Error::InvalidArgument(format!("need m ≥ 4, got {m}")));
    }
    if !(target_mean_degree >= POST_SELECTION_MEAN_DEGREE) {
        return Err(Error::InvalidArgument(format!(
            "target mean degree must be ≥ 3, got {target_mean_degree}"
        )));
    }
    let p = (target_mean_degree / (m as f64 - 1.0)).min(1.0);
    let mut rng = rng::seeded(seed);
    for _ in 0..POST_SELECTION_RETRIES {
        let mut pairs = Vec::new();
        for i in 0..m {
            for j in (i + 1)..m {
                if rng.random::<f64>() < p {
                    pairs.push((i, j));
                }
            }
        }
        let g = Graph::unweighted(m, &pairs)?;
        if g.mean_degree() < POST_SELECTION_MEAN_DEGREE {
            continue;
        }
        let x = Assignment::random(m, &mut rng);
        let random_cut = cut_value_unchecked(&g, x.as_slice());
        let best = best_cut_proxy(&g, &mut rng)?;
        if best > 0.0 && random_cut / best <= POST_SELECTION_RATIO {
            return Ok(g);
        }
    }
    Err(Error::PostSelection {
        retries: POST_SELECTION_RETRIES,
    })
}

fn best_cut_proxy(g: &Graph, rng: &mut rng::Rng) -> Result<f64> {
    if g.num_vertices() <= EXACT_MAXCUT_LIMIT {
        return Ok(exact_maxcut(g)?.0);
    }
    let mut best = 0.0f64;
    for _ in 0..PROXY_RESTARTS {
        let x = Assignment::random(g.num_vertices(), rng);
        let x = crate::solver::local_search_to_convergence(g, &x)?;
        best = best.max(cut_value_unchecked(g, x.as_slice()));
    }
    Ok(best)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaselineSummary {
    pub trials: usize,
    pub mean: f64,
    pub stddev: f64,
    pub max: f64,
}

/// Cut values of uniformly random assignments after one local-search round.
pub fn random_cut_baseline(g: &Graph, trials: usize, seed: u64) -> Result<BaselineSummary> {
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be ≥ 1".into()));
    }
    let mut rng = rng::seeded(seed);
    let cuts: Vec<f64> = (0..trials)
        .map(|_| {
            let x = Assignment::random(g.num_vertices(), &mut rng);
            let x = crate::solver::local_search(g, &x)?;
            Ok(cut_value_unchecked(g, x.as_slice()))
        })
        .collect::<Result<_>>()?;
    let mean = cuts.iter().sum::<f64>() / trials as f64;
    let stddev = if trials > 1 {
        (cuts.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (trials - 1) as f64).sqrt()
    } else {
        0.0
    };
    let max = cuts.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(BaselineSummary {
        trials,
        mean,
        stddev,
        max,
    })
}
