//! The directed k-nearest-neighbour graph and its degree statistics.
//!
//! Each node carries an edge to each of its k nearest neighbours, so
//! out-degrees are exactly k while in-degrees vary between 0 and
//! `alpha_d * k`, where `alpha_d` is the packing constant from
//! [`crate::asymptotics::alpha`]. The number of nodes at each in-degree and
//! the counts of directed star subgraphs determine each other through an
//! inclusion-exclusion identity, which the experiment suites verify on every
//! instance; both tallies use exact integer arithmetic so the round trip is
//! bit-exact.

use crate::asymptotics::alpha;
use crate::error::{Error, Result};
use crate::geometry::{KnnIndex, PointSet};
use crate::stats::binomial;

/// Directed k-NN graph: per-node ordered out-neighbour lists (nearest
/// first) and the derived in-degrees. Immutable after construction.
#[derive(Debug, Clone)]
pub struct KnnGraph {
    k: usize,
    dim: usize,
    n: usize,
    out: Vec<u32>,
    in_degree: Vec<u32>,
}

/// Builds the graph for `ps` with parameter `k <= n-1`.
///
/// For d in {1,2,3} the in-degree bound `alpha_d * k` is enforced; exceeding
/// it means duplicate points or a tie pathology and surfaces as an error
/// rather than being clamped.
pub fn build_knn_graph(ps: &PointSet, k: usize) -> Result<KnnGraph> {
    let n = ps.len();
    if k == 0 || k >= n {
        return Err(Error::InvalidNeighbourCount { k, n });
    }
    let index = KnnIndex::build(ps);
    let mut out = Vec::with_capacity(n * k);
    let mut in_degree = vec![0u32; n];
    for i in 0..n {
        let nn = index.k_nearest(i, k)?;
        for &j in &nn {
            out.push(j as u32);
            in_degree[j] += 1;
        }
    }
    let graph = KnnGraph {
        k,
        dim: ps.dim(),
        n,
        out,
        in_degree,
    };
    if ps.dim() <= 3 {
        let bound = alpha(ps.dim())? * k;
        for (node, &deg) in graph.in_degree.iter().enumerate() {
            if deg as usize > bound {
                return Err(Error::InDegreeOverflow {
                    node,
                    in_degree: deg as usize,
                    bound,
                });
            }
        }
    }
    Ok(graph)
}

impl KnnGraph {
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Out-neighbours of `i`, ordered by increasing distance.
    pub fn out_neighbours(&self, i: usize) -> &[u32] {
        &self.out[i * self.k..(i + 1) * self.k]
    }

    pub fn in_degree(&self, i: usize) -> usize {
        self.in_degree[i] as usize
    }

    pub fn in_degrees(&self) -> &[u32] {
        &self.in_degree
    }

    pub fn max_in_degree(&self) -> usize {
        self.in_degree.iter().copied().max().unwrap_or(0) as usize
    }

    /// `alpha_d * k` for this graph's dimension.
    pub fn alpha_k(&self) -> Result<usize> {
        Ok(alpha(self.dim)? * self.k)
    }
}

/// `counts[j]` = number of nodes with in-degree exactly `j`, for
/// `j = 0..=alpha_k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DegreeCounts {
    pub counts: Vec<u64>,
}

impl DegreeCounts {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Fractions `counts[j] / n`.
    pub fn fractions(&self) -> Vec<f64> {
        let n = self.total() as f64;
        self.counts.iter().map(|&c| c as f64 / n).collect()
    }
}

/// `counts[m-1]` = number of directed star subgraphs with `m` leaves
/// pointing at a common head, for `m = 1..=alpha_k`. A node of in-degree D
/// heads `binomial(D, m)` such stars.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StarCounts {
    pub n_nodes: u64,
    pub counts: Vec<u64>,
}

impl StarCounts {
    /// For synthetic inputs in tests; `counts` indexed from m = 1.
    pub fn new(n_nodes: u64, counts: Vec<u64>) -> StarCounts {
        StarCounts { n_nodes, counts }
    }

    pub fn count(&self, m: usize) -> u64 {
        self.counts[m - 1]
    }
}

/// Exact tally of nodes per in-degree. Errors if any in-degree exceeds
/// `alpha_k`, which signals a mismatched bound or degenerate input.
pub fn in_degree_counts(g: &KnnGraph, alpha_k: usize) -> Result<DegreeCounts> {
    let mut counts = vec![0u64; alpha_k + 1];
    for (node, &deg) in g.in_degree.iter().enumerate() {
        let deg = deg as usize;
        if deg > alpha_k {
            return Err(Error::InDegreeOverflow {
                node,
                in_degree: deg,
                bound: alpha_k,
            });
        }
        counts[deg] += 1;
    }
    Ok(DegreeCounts { counts })
}

/// Star-subgraph tally: each node with in-degree D contributes
/// `binomial(D, m)` stars with m leaves.
pub fn star_counts(g: &KnnGraph, alpha_k: usize) -> StarCounts {
    let mut counts = vec![0u64; alpha_k];
    for &deg in &g.in_degree {
        for m in 1..=alpha_k.min(deg as usize) {
            counts[m - 1] += binomial(deg as u64, m as u64);
        }
    }
    StarCounts {
        n_nodes: g.n as u64,
        counts,
    }
}

/// Inverts star counts back to in-degree counts by inclusion-exclusion:
/// `Q_j = sum_{i=j..alpha_k} (-1)^(i-j) * binomial(i, j) * I_i` for j >= 1,
/// with `Q_0` recovered as `n - sum_{j>=1} Q_j`. Requires
/// `n > alpha_k + 1`; exact integers throughout.
pub fn counts_from_stars(s: &StarCounts, alpha_k: usize) -> Result<DegreeCounts> {
    if s.n_nodes <= (alpha_k + 1) as u64 {
        return Err(Error::TooFewNodes {
            n: s.n_nodes as usize,
            alpha_k,
        });
    }
    let mut counts = vec![0u64; alpha_k + 1];
    let mut assigned: i128 = 0;
    for j in 1..=alpha_k {
        let mut q: i128 = 0;
        for i in j..=alpha_k {
            let term = binomial(i as u64, j as u64) as i128 * s.count(i) as i128;
            if (i - j) % 2 == 0 {
                q += term;
            } else {
                q -= term;
            }
        }
        if q < 0 {
            return Err(Error::InconsistentStarCounts { j, value: q });
        }
        counts[j] = q as u64;
        assigned += q;
    }
    let q0 = s.n_nodes as i128 - assigned;
    if q0 < 0 {
        return Err(Error::InconsistentStarCounts { j: 0, value: q0 });
    }
    counts[0] = q0 as u64;
    Ok(DegreeCounts { counts })
}

/// All unordered pairs `{i, j}` that are mutual nearest neighbours.
/// Restricted to 1-NN graphs, where such 2-cycles are the only cycles.
pub fn mutual_pairs(g: &KnnGraph) -> Result<Vec<(usize, usize)>> {
    if g.k != 1 {
        return Err(Error::invalid(
            "k",
            format!("mutual pairs are defined on 1-NN graphs, got k={}", g.k),
        ));
    }
    let mut pairs = Vec::new();
    for i in 0..g.n {
        let j = g.out[i] as usize;
        if i < j && g.out[j] as usize == i {
            pairs.push((i, j));
        }
    }
    Ok(pairs)
}

/// Partition of the nodes into weakly connected components (directions
/// dropped). Components are sorted by their smallest member; members are
/// sorted ascending.
pub fn weak_components(g: &KnnGraph) -> Vec<Vec<usize>> {
    let mut uf = UnionFind::new(g.n);
    for i in 0..g.n {
        for &j in g.out_neighbours(i) {
            uf.union(i, j as usize);
        }
    }
    let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for i in 0..g.n {
        groups.entry(uf.find(i)).or_default().push(i);
    }
    let mut comps: Vec<Vec<usize>> = groups.into_values().collect();
    comps.sort_by_key(|c| c[0]);
    comps
}

struct UnionFind {
    parent: Vec<usize>,
    rank: Vec<u8>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
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

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        match self.rank[ra].cmp(&self.rank[rb]) {
            std::cmp::Ordering::Less => self.parent[ra] = rb,
            std::cmp::Ordering::Greater => self.parent[rb] = ra,
            std::cmp::Ordering::Equal => {
                self.parent[rb] = ra;
                self.rank[ra] += 1;
            }
        }
    }
}
