//! Server locations in the unit cube and exact k-nearest-neighbour queries.
//!
//! Distances are Euclidean on the plain cube `[0,1]^d`; there is no periodic
//! wrap-around, so boundary effects are real and intended. Exact distance
//! ties are broken towards the smaller node index, which makes every query
//! deterministic even on degenerate inputs.

use std::io::{BufRead, Write};

use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::{stream_rng, Stream};

/// An immutable set of `n` points in `[0,1]^d` plus the seed that produced
/// it. Index identity is stable: point `i` keeps its position in the list.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    dim: usize,
    coords: Vec<f64>,
    seed: u64,
}

impl PointSet {
    /// Draws `n` points with iid uniform coordinates. Deterministic in
    /// `seed`: the same `(n, d, seed)` reproduces bit-identical coordinates.
    pub fn sample(n: usize, d: usize, seed: u64) -> Result<PointSet> {
        if n == 0 {
            return Err(Error::invalid("n", "need at least one point"));
        }
        if d == 0 {
            return Err(Error::invalid("d", "dimension must be positive"));
        }
        let mut rng = stream_rng(seed, Stream::Points);
        let coords = (0..n * d).map(|_| rng.gen::<f64>()).collect();
        Ok(PointSet {
            dim: d,
            coords,
            seed,
        })
    }

    /// Wraps explicit coordinates (row-major, `n*dim` values). Used for hand
    /// instances and CSV fixtures; every coordinate must lie in `[0,1]`.
    pub fn from_coords(dim: usize, coords: Vec<f64>, seed: u64) -> Result<PointSet> {
        if dim == 0 {
            return Err(Error::invalid("d", "dimension must be positive"));
        }
        if coords.is_empty() || coords.len() % dim != 0 {
            return Err(Error::invalid(
                "coords",
                format!("length {} is not a positive multiple of dim {dim}", coords.len()),
            ));
        }
        if let Some(bad) = coords.iter().find(|c| !(0.0..=1.0).contains(*c)) {
            return Err(Error::invalid(
                "coords",
                format!("coordinate {bad} outside [0,1]"),
            ));
        }
        Ok(PointSet { dim, coords, seed })
    }

    /// Convenience for 1D hand instances.
    pub fn from_1d(xs: &[f64]) -> Result<PointSet> {
        PointSet::from_coords(1, xs.to_vec(), 0)
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn distance_sq(&self, i: usize, j: usize) -> f64 {
        let a = self.point(i);
        let b = self.point(j);
        let mut acc = 0.0;
        for t in 0..self.dim {
            let d = a[t] - b[t];
            acc += d * d;
        }
        acc
    }

    fn check_query(&self, i: usize, k: usize) -> Result<()> {
        let n = self.len();
        if i >= n {
            return Err(Error::NodeOutOfRange { index: i, n });
        }
        if k == 0 || k >= n {
            return Err(Error::InvalidNeighbourCount { k, n });
        }
        Ok(())
    }
}

/// Uniform-distribution draws; free-function spelling of [`PointSet::sample`].
pub fn sample_points(n: usize, d: usize, seed: u64) -> Result<PointSet> {
    PointSet::sample(n, d, seed)
}

/// `(distance^2, index)` with the tie-break ordering used everywhere:
/// smaller distance first, then smaller index.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Candidate {
    dist_sq: f64,
    index: usize,
}

impl Eq for Candidate {}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        // Coordinates live in [0,1], so dist_sq is finite and non-negative
        // and total_cmp agrees with the numeric order.
        self.dist_sq
            .total_cmp(&other.dist_sq)
            .then(self.index.cmp(&other.index))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

/// The `k` nearest neighbours of node `i`, ordered by increasing distance
/// (ties towards the smaller index). Exact, via a linear scan with an
/// O(n) selection; for whole-graph workloads prefer [`KnnIndex`].
pub fn k_nearest(ps: &PointSet, i: usize, k: usize) -> Result<Vec<usize>> {
    ps.check_query(i, k)?;
    let mut cands: Vec<Candidate> = (0..ps.len())
        .filter(|&j| j != i)
        .map(|j| Candidate {
            dist_sq: ps.distance_sq(i, j),
            index: j,
        })
        .collect();
    cands.select_nth_unstable(k - 1);
    cands.truncate(k);
    cands.sort_unstable();
    Ok(cands.into_iter().map(|c| c.index).collect())
}

/// Reference oracle: identical contract to [`k_nearest`], implemented as a
/// full sort of all distances. Every accelerated path is validated against
/// this.
pub fn brute_force_knn(ps: &PointSet, i: usize, k: usize) -> Result<Vec<usize>> {
    ps.check_query(i, k)?;
    let mut cands: Vec<Candidate> = (0..ps.len())
        .filter(|&j| j != i)
        .map(|j| Candidate {
            dist_sq: ps.distance_sq(i, j),
            index: j,
        })
        .collect();
    cands.sort_unstable();
    Ok(cands.into_iter().take(k).map(|c| c.index).collect())
}

/// Bucket-grid spatial index for repeated exact k-NN queries on one point
/// set. Cells are searched in growing Chebyshev rings until no unvisited
/// cell can hold a better neighbour, so results match [`brute_force_knn`]
/// bit for bit, tie-break included.
pub struct KnnIndex<'a> {
    ps: &'a PointSet,
    cells_per_dim: usize,
    cell_side: f64,
    buckets: Vec<Vec<u32>>,
}

impl<'a> KnnIndex<'a> {
    pub fn build(ps: &'a PointSet) -> KnnIndex<'a> {
        let n = ps.len();
        let d = ps.dim();
        // ~4 points per cell on average; never more cells than points.
        let mut cells_per_dim = ((n as f64 / 4.0).powf(1.0 / d as f64)).floor() as usize;
        cells_per_dim = cells_per_dim.max(1);
        let mut buckets = vec![Vec::new(); cells_per_dim.pow(d as u32)];
        for i in 0..n {
            let cell = Self::cell_id(ps.point(i), cells_per_dim, d);
            buckets[cell].push(i as u32);
        }
        KnnIndex {
            ps,
            cells_per_dim,
            cell_side: 1.0 / cells_per_dim as f64,
            buckets,
        }
    }

    fn cell_coord(x: f64, cells: usize) -> usize {
        ((x * cells as f64) as usize).min(cells - 1)
    }

    fn cell_id(point: &[f64], cells: usize, d: usize) -> usize {
        let mut id = 0;
        for t in (0..d).rev() {
            id = id * cells + Self::cell_coord(point[t], cells);
        }
        id
    }

    /// Walks all grid cells at Chebyshev ring `m` around `home`, invoking
    /// `visit` with each cell id. Rings partition the grid, so each cell is
    /// seen exactly once over m = 0, 1, 2, ...
    fn for_ring(&self, home: &[usize], m: usize, visit: &mut impl FnMut(usize)) {
        let d = self.ps.dim();
        let cells = self.cells_per_dim;
        let mut offset = vec![0i64; d];
        self.ring_axis(home, m, 0, false, &mut offset, cells, d, visit);
    }

    #[allow(clippy::too_many_arguments)]
    fn ring_axis(
        &self,
        home: &[usize],
        m: usize,
        axis: usize,
        maxed: bool,
        offset: &mut Vec<i64>,
        cells: usize,
        d: usize,
        visit: &mut impl FnMut(usize),
    ) {
        if axis == d {
            if maxed {
                let mut id = 0;
                for t in (0..d).rev() {
                    id = id * cells + (home[t] as i64 + offset[t]) as usize;
                }
                visit(id);
            }
            return;
        }
        let lo = -(home[axis] as i64);
        let hi = (cells - 1 - home[axis]) as i64;
        let mi = m as i64;
        for off in (-mi).max(lo)..=mi.min(hi) {
            offset[axis] = off;
            self.ring_axis(home, m, axis + 1, maxed || off.abs() == mi, offset, cells, d, visit);
        }
    }

    /// Exact k-NN query through the grid; same contract and tie-break as
    /// [`k_nearest`].
    pub fn k_nearest(&self, i: usize, k: usize) -> Result<Vec<usize>> {
        self.ps.check_query(i, k)?;
        let d = self.ps.dim();
        let cells = self.cells_per_dim;
        let home: Vec<usize> = (0..d)
            .map(|t| Self::cell_coord(self.ps.point(i)[t], cells))
            .collect();
        let max_ring = home
            .iter()
            .map(|&c| c.max(cells - 1 - c))
            .max()
            .unwrap_or(0);

        // Max-heap on (dist, index): the root is the current worst keeper.
        let mut heap: std::collections::BinaryHeap<Candidate> =
            std::collections::BinaryHeap::with_capacity(k + 1);
        for m in 0..=max_ring {
            if heap.len() == k {
                // Cells at ring >= m hold points at distance >= (m-1)*side.
                let lower = (m as f64 - 1.0).max(0.0) * self.cell_side;
                if heap.peek().unwrap().dist_sq < lower * lower {
                    break;
                }
            }
            self.for_ring(&home, m, &mut |cell| {
                for &j in &self.buckets[cell] {
                    let j = j as usize;
                    if j == i {
                        continue;
                    }
                    let cand = Candidate {
                        dist_sq: self.ps.distance_sq(i, j),
                        index: j,
                    };
                    if heap.len() < k {
                        heap.push(cand);
                    } else if cand < *heap.peek().unwrap() {
                        heap.pop();
                        heap.push(cand);
                    }
                }
            });
        }
        let mut keep = heap.into_vec();
        keep.sort_unstable();
        Ok(keep.into_iter().map(|c| c.index).collect())
    }
}

/// Writes the point set as CSV: one row per point `index,x1,..,xd`, with the
/// seed recorded in a leading comment. Floats carry 17 significant digits so
/// a round trip is bit-exact.
pub fn write_points_csv<W: Write>(ps: &PointSet, out: &mut W) -> Result<()> {
    writeln!(out, "# seed={}", ps.seed())?;
    let header: Vec<String> = (1..=ps.dim()).map(|t| format!("x{t}")).collect();
    writeln!(out, "index,{}", header.join(","))?;
    for i in 0..ps.len() {
        let coords: Vec<String> = ps.point(i).iter().map(|c| format!("{c:.16e}")).collect();
        writeln!(out, "{i},{}", coords.join(","))?;
    }
    Ok(())
}

/// Reads the CSV format produced by [`write_points_csv`]. Comment lines
/// (`#`) and the header are skipped; the dimension is inferred from the
/// first data row.
pub fn read_points_csv<R: BufRead>(input: R) -> Result<PointSet> {
    let mut coords = Vec::new();
    let mut dim = 0usize;
    let mut seed = 0u64;
    for line in input.lines() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            if let Some(s) = rest.trim().strip_prefix("seed=") {
                seed = s
                    .trim()
                    .parse()
                    .map_err(|_| Error::invalid("seed", format!("unparseable seed `{s}`")))?;
            }
            continue;
        }
        if line.starts_with("index") {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() < 2 {
            return Err(Error::invalid("points", format!("short row `{line}`")));
        }
        if dim == 0 {
            dim = fields.len() - 1;
        } else if fields.len() - 1 != dim {
            return Err(Error::invalid("points", format!("row width changed at `{line}`")));
        }
        for f in &fields[1..] {
            let v: f64 = f
                .trim()
                .parse()
                .map_err(|_| Error::invalid("points", format!("bad coordinate `{f}`")))?;
            coords.push(v);
        }
    }
    PointSet::from_coords(dim, coords, seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sample_rejects_degenerate_sizes() {
        assert!(PointSet::sample(0, 1, 1).is_err());
        assert!(PointSet::sample(4, 0, 1).is_err());
    }

    #[test]
    fn samples_lie_in_unit_cube() {
        let ps = PointSet::sample(4, 1, 42).unwrap();
        assert_eq!(ps.len(), 4);
        for i in 0..4 {
            assert!((0.0..=1.0).contains(&ps.point(i)[0]));
        }
    }

    #[test]
    fn sampling_is_deterministic_in_seed() {
        let a = PointSet::sample(1000, 2, 7).unwrap();
        let b = PointSet::sample(1000, 2, 7).unwrap();
        assert_eq!(a, b);
        let c = PointSet::sample(1000, 2, 8).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn coordinate_mean_matches_uniform_law() {
        let ps = PointSet::sample(100_000, 1, 1).unwrap();
        let mean: f64 = (0..ps.len()).map(|i| ps.point(i)[0]).sum::<f64>() / 1e5;
        // 5 standard errors of the mean of Unif[0,1]: 5 * (1/sqrt(12)) / sqrt(1e5).
        assert!((mean - 0.5).abs() < 4.5644e-3, "mean={mean}");
    }

    #[test]
    fn nearest_neighbour_hand_instances() {
        let ps = PointSet::from_1d(&[0.1, 0.2, 0.4, 0.8]).unwrap();
        assert_eq!(k_nearest(&ps, 0, 1).unwrap(), vec![1]);
        // distances from 0.8: 0.4 to index 2, 0.6 to index 1.
        assert_eq!(k_nearest(&ps, 3, 2).unwrap(), vec![2, 1]);
        assert_eq!(brute_force_knn(&ps, 2, 1).unwrap(), vec![1]);
    }

    #[test]
    fn exact_tie_goes_to_smaller_index() {
        let ps = PointSet::from_1d(&[0.0, 0.5, 1.0]).unwrap();
        assert_eq!(k_nearest(&ps, 1, 1).unwrap(), vec![0]);
        assert_eq!(brute_force_knn(&ps, 1, 1).unwrap(), vec![0]);
        let idx = KnnIndex::build(&ps);
        assert_eq!(idx.k_nearest(1, 1).unwrap(), vec![0]);
    }

    #[test]
    fn query_validation() {
        let ps = PointSet::from_1d(&[0.1, 0.9]).unwrap();
        assert!(k_nearest(&ps, 0, 2).is_err()); // k >= n
        assert!(k_nearest(&ps, 0, 0).is_err());
        assert!(k_nearest(&ps, 5, 1).is_err());
    }

    #[test]
    fn index_and_selection_match_brute_force() {
        for d in 1..=3 {
            for seed in 0..4 {
                let n = 50;
                let ps = PointSet::sample(n, d, 1000 + seed).unwrap();
                let idx = KnnIndex::build(&ps);
                for k in 1..=3 {
                    for i in 0..n {
                        let oracle = brute_force_knn(&ps, i, k).unwrap();
                        assert_eq!(k_nearest(&ps, i, k).unwrap(), oracle);
                        assert_eq!(idx.k_nearest(i, k).unwrap(), oracle);
                    }
                }
            }
        }
    }

    #[test]
    fn neighbour_distances_are_non_decreasing() {
        let ps = PointSet::sample(200, 2, 9).unwrap();
        for i in 0..ps.len() {
            let nn = k_nearest(&ps, i, 5).unwrap();
            for w in nn.windows(2) {
                assert!(ps.distance_sq(i, w[0]) <= ps.distance_sq(i, w[1]));
            }
        }
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let ps = PointSet::sample(17, 3, 99).unwrap();
        let mut buf = Vec::new();
        write_points_csv(&ps, &mut buf).unwrap();
        let back = read_points_csv(&buf[..]).unwrap();
        assert_eq!(ps, back);
    }
}
