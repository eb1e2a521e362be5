//! Exact minimum-cost perfect assignment on square cost matrices.
//!
//! Three solvers share one contract: the returned permutation minimizes the
//! total cost, up to floating-point rounding of the dual updates.
//!
//! * [`Backend::Hungarian`]: shortest augmenting paths with row and column
//!   potentials, O(n³).
//! * [`Backend::Lapjv`]: Jonker–Volgenant: column reduction, reduction
//!   transfer and augmenting row reduction before the same augmentation.
//! * [`Backend::SparseDijkstra`]: successive shortest paths with a binary
//!   heap over an explicit edge list; see [`solve_sparse`].

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense row-major square cost matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix {
    n: usize,
    data: Vec<f64>,
}

impl CostMatrix {
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(f(i, j));
            }
        }
        CostMatrix { n, data }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidParameter("cost matrix must be square".into()));
        }
        Ok(CostMatrix { n, data: rows.concat() })
    }

    #[inline]
    pub fn size(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn max_entry(&self) -> f64 {
        self.data.iter().copied().fold(0.0, f64::max)
    }

    /// Entrywise `cost / scale`.
    pub fn scaled(&self, scale: f64) -> CostMatrix {
        CostMatrix { n: self.n, data: self.data.iter().map(|c| c / scale).collect() }
    }

    /// Total cost of a permutation, summed in row order.
    pub fn cost_of(&self, row_to_col: &[usize]) -> f64 {
        row_to_col.iter().enumerate().map(|(i, &j)| self.get(i, j)).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Backend {
    #[default]
    Hungarian,
    Lapjv,
    SparseDijkstra,
}

impl Backend {
    pub const ALL: [Backend; 3] = [Backend::Hungarian, Backend::Lapjv, Backend::SparseDijkstra];

    pub fn name(self) -> &'static str {
        match self {
            Backend::Hungarian => "hungarian",
            Backend::Lapjv => "lapjv",
            Backend::SparseDijkstra => "sparse-dijkstra",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    /// `row_to_col[i]` is the column assigned to row `i`.
    pub row_to_col: Vec<usize>,
    pub cost: f64,
}

/// Solves the assignment problem on a dense matrix. Costs are normalized by
/// their largest entry before solving; the reported cost is summed from the
/// original entries.
pub fn solve(costs: &CostMatrix, backend: Backend) -> Result<Assignment> {
    if costs.data.iter().any(|c| !c.is_finite()) {
        return Err(Error::InvalidParameter("cost matrix has non-finite entries".into()));
    }
    let max = costs.max_entry();
    let normalized;
    let work = if max > 0.0 && (max > 1e12 || max < 1e-12) {
        normalized = costs.scaled(max);
        &normalized
    } else {
        costs
    };
    let row_to_col = match backend {
        Backend::Hungarian => hungarian(work),
        Backend::Lapjv => lapjv(work),
        Backend::SparseDijkstra => {
            let sparse = SparseCosts::from_dense(work);
            solve_sparse(&sparse)?.row_to_col
        }
    };
    let cost = costs.cost_of(&row_to_col);
    Ok(Assignment { row_to_col, cost })
}

fn hungarian(costs: &CostMatrix) -> Vec<usize> {
    let n = costs.size();
    if n == 0 {
        return Vec::new();
    }
    // 1-based potentials with a virtual column 0.
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    let mut minv = vec![0.0f64; n + 1];
    let mut used = vec![false; n + 1];

    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0usize;
        minv.fill(f64::INFINITY);
        used.fill(false);
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let row = costs.row(i0 - 1);
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = row[j - 1] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut row_to_col = vec![0usize; n];
    for j in 1..=n {
        row_to_col[p[j] - 1] = j - 1;
    }
    row_to_col
}

const UNASSIGNED: usize = usize::MAX;

fn lapjv(costs: &CostMatrix) -> Vec<usize> {
    let n = costs.size();
    if n == 0 {
        return Vec::new();
    }
    if n == 1 {
        return vec![0];
    }
    let mut rowsol = vec![UNASSIGNED; n];
    let mut colsol = vec![UNASSIGNED; n];
    let mut v = vec![0.0f64; n];
    let mut matches = vec![0usize; n];

    // Column reduction, scanning columns in reverse.
    for j in (0..n).rev() {
        let mut imin = 0;
        let mut min = costs.get(0, j);
        for i in 1..n {
            let c = costs.get(i, j);
            if c < min {
                min = c;
                imin = i;
            }
        }
        v[j] = min;
        matches[imin] += 1;
        if matches[imin] == 1 {
            rowsol[imin] = j;
            colsol[j] = imin;
        } else if v[j] < v[rowsol[imin]] {
            let j1 = rowsol[imin];
            rowsol[imin] = j;
            colsol[j] = imin;
            colsol[j1] = UNASSIGNED;
        } else {
            colsol[j] = UNASSIGNED;
        }
    }

    // Reduction transfer.
    let mut free = Vec::with_capacity(n);
    for i in 0..n {
        match matches[i] {
            0 => free.push(i),
            1 => {
                let j1 = rowsol[i];
                let row = costs.row(i);
                let min = (0..n)
                    .filter(|&j| j != j1)
                    .map(|j| row[j] - v[j])
                    .fold(f64::INFINITY, f64::min);
                v[j1] -= min;
            }
            _ => {}
        }
    }
    // Augmenting row reduction, two passes. Each pass is bounded so that
    // near-ties cannot ping-pong forever; leftovers go to augmentation.
    for _ in 0..2 {
        let mut k = 0usize;
        let prev_free = std::mem::take(&mut free);
        let mut queue = prev_free;
        let budget = n * n + 16;
        let mut steps = 0usize;
        while k < queue.len() {
            let i = queue[k];
            k += 1;
            steps += 1;
            if steps > budget {
                free.extend_from_slice(&queue[k - 1..]);
                break;
            }
            let row = costs.row(i);
            let (mut u1, mut j1) = (f64::INFINITY, 0usize);
            let (mut u2, mut j2) = (f64::INFINITY, 0usize);
            for j in 0..n {
                let h = row[j] - v[j];
                if h < u2 {
                    if h >= u1 {
                        u2 = h;
                        j2 = j;
                    } else {
                        u2 = u1;
                        j2 = j1;
                        u1 = h;
                        j1 = j;
                    }
                }
            }
            let mut i0 = colsol[j1];
            let strict = u1 < u2;
            if strict {
                v[j1] -= u2 - u1;
            } else if i0 != UNASSIGNED {
                j1 = j2;
                i0 = colsol[j2];
            }
            if i0 != UNASSIGNED {
                rowsol[i0] = UNASSIGNED;
            }
            rowsol[i] = j1;
            colsol[j1] = i;
            if i0 != UNASSIGNED {
                if strict {
                    // Retry the displaced row right away.
                    k -= 1;
                    queue[k] = i0;
                } else {
                    free.push(i0);
                }
            }
        }
    }

    // Augmentation by Dijkstra on reduced costs c[i][j] - v[j].
    let mut d = vec![0.0f64; n];
    let mut pred = vec![0usize; n];
    let mut collist: Vec<usize> = (0..n).collect();
    for &freerow in &free {
        for j in 0..n {
            d[j] = costs.get(freerow, j) - v[j];
            pred[j] = freerow;
            collist[j] = j;
        }
        let mut low = 0usize;
        let mut up = 0usize;
        // collist[..scanned] holds the columns whose rows were expanded.
        let mut scanned = 0usize;
        let mut min = 0.0f64;
        let endofpath;
        'search: loop {
            if up == low {
                scanned = low;
                min = d[collist[up]];
                up += 1;
                for k in up..n {
                    let j = collist[k];
                    let h = d[j];
                    if h <= min {
                        if h < min {
                            up = low;
                            min = h;
                        }
                        collist[k] = collist[up];
                        collist[up] = j;
                        up += 1;
                    }
                }
                for &j in &collist[low..up] {
                    if colsol[j] == UNASSIGNED {
                        endofpath = j;
                        break 'search;
                    }
                }
            }
            let j1 = collist[low];
            low += 1;
            let i = colsol[j1];
            let row = costs.row(i);
            let u1 = row[j1] - v[j1] - min;
            let mut k = up;
            while k < n {
                let j = collist[k];
                let h = row[j] - v[j] - u1;
                if h < d[j] {
                    pred[j] = i;
                    if h == min {
                        if colsol[j] == UNASSIGNED {
                            endofpath = j;
                            break 'search;
                        }
                        collist[k] = collist[up];
                        collist[up] = j;
                        up += 1;
                    }
                    d[j] = h;
                }
                k += 1;
            }
        }
        // Update column prices of scanned columns.
        for &j1 in &collist[..scanned] {
            v[j1] += d[j1] - min;
        }
        let mut j = endofpath;
        loop {
            let i = pred[j];
            colsol[j] = i;
            let next = rowsol[i];
            rowsol[i] = j;
            if i == freerow {
                break;
            }
            j = next;
        }
    }
    rowsol
}

/// Sparse square assignment instance: `edges[i]` lists `(column, cost)`.
#[derive(Debug, Clone, Default)]
pub struct SparseCosts {
    n: usize,
    edges: Vec<Vec<(usize, f64)>>,
}

impl SparseCosts {
    pub fn new(n: usize) -> Self {
        SparseCosts { n, edges: vec![Vec::new(); n] }
    }

    pub fn from_dense(costs: &CostMatrix) -> Self {
        let n = costs.size();
        let edges = (0..n).map(|i| costs.row(i).iter().copied().enumerate().collect()).collect();
        SparseCosts { n, edges }
    }

    pub fn add_edge(&mut self, row: usize, col: usize, cost: f64) {
        debug_assert!(row < self.n && col < self.n);
        self.edges[row].push((col, cost));
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.iter().map(Vec::len).sum()
    }

    pub fn cost(&self, row: usize, col: usize) -> Option<f64> {
        self.edges[row].iter().filter(|(c, _)| *c == col).map(|&(_, w)| w).reduce(f64::min)
    }
}

#[derive(Clone, Copy, PartialEq)]
struct HeapItem {
    dist: f64,
    col: usize,
}

impl Eq for HeapItem {}

impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        other.dist.total_cmp(&self.dist).then_with(|| other.col.cmp(&self.col))
    }
}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Successive shortest augmenting paths on a sparse instance. Optimal over
/// the supplied edges; fails with [`Error::Infeasible`] when they admit no
/// perfect matching.
pub fn solve_sparse(costs: &SparseCosts) -> Result<Assignment> {
    let n = costs.n;
    let mut u = vec![0.0f64; n];
    let mut v = vec![0.0f64; n];
    let mut row_of = vec![UNASSIGNED; n];
    let mut col_of = vec![UNASSIGNED; n];

    for (i, row) in costs.edges.iter().enumerate() {
        if row.iter().any(|(_, c)| !c.is_finite()) {
            return Err(Error::InvalidParameter("sparse costs must be finite".into()));
        }
        u[i] = row.iter().map(|&(_, c)| c).fold(f64::INFINITY, f64::min);
        if !u[i].is_finite() {
            return Err(Error::Infeasible);
        }
    }
    // Greedy start on tight edges.
    for (i, row) in costs.edges.iter().enumerate() {
        if let Some(&(j, _)) = row.iter().find(|&&(j, c)| row_of[j] == UNASSIGNED && c == u[i]) {
            row_of[j] = i;
            col_of[i] = j;
        }
    }

    let mut dist = vec![f64::INFINITY; n];
    let mut pred_row = vec![UNASSIGNED; n];
    let mut done = vec![false; n];
    let mut touched: Vec<usize> = Vec::new();
    let mut finalized: Vec<usize> = Vec::new();
    let mut heap = BinaryHeap::new();

    for start in 0..n {
        if col_of[start] != UNASSIGNED {
            continue;
        }
        for &j in &touched {
            dist[j] = f64::INFINITY;
            done[j] = false;
        }
        touched.clear();
        finalized.clear();
        heap.clear();

        let relax = |i: usize,
                     base: f64,
                     u: &[f64],
                     v: &[f64],
                     dist: &mut [f64],
                     pred_row: &mut [usize],
                     done: &[bool],
                     touched: &mut Vec<usize>,
                     heap: &mut BinaryHeap<HeapItem>| {
            for &(j, c) in &costs.edges[i] {
                if done[j] {
                    continue;
                }
                let reduced = (c - u[i] - v[j]).max(0.0);
                let nd = base + reduced;
                if nd < dist[j] {
                    if dist[j] == f64::INFINITY {
                        touched.push(j);
                    }
                    dist[j] = nd;
                    pred_row[j] = i;
                    heap.push(HeapItem { dist: nd, col: j });
                }
            }
        };

        relax(start, 0.0, &u, &v, &mut dist, &mut pred_row, &done, &mut touched, &mut heap);
        let (end, delta) = loop {
            let Some(HeapItem { dist: dj, col: j }) = heap.pop() else {
                return Err(Error::Infeasible);
            };
            if done[j] || dj > dist[j] {
                continue;
            }
            done[j] = true;
            if row_of[j] == UNASSIGNED {
                break (j, dj);
            }
            finalized.push(j);
            let i = row_of[j];
            relax(i, dj, &u, &v, &mut dist, &mut pred_row, &done, &mut touched, &mut heap);
        };

        // Dual update keeps reduced costs non-negative and tight on the matching.
        for &j in &finalized {
            let shift = delta - dist[j];
            u[row_of[j]] += shift;
            v[j] -= shift;
        }
        u[start] += delta;

        let mut j = end;
        loop {
            let i = pred_row[j];
            let next = col_of[i];
            row_of[j] = i;
            col_of[i] = j;
            if i == start {
                break;
            }
            j = next;
        }
    }

    let cost = col_of
        .iter()
        .enumerate()
        .map(|(i, &j)| costs.cost(i, j).expect("assigned edge exists"))
        .sum();
    Ok(Assignment { row_to_col: col_of, cost })
}

/// Exhaustive minimum over all permutations, for cross-checking solvers.
#[cfg(test)]
pub(crate) fn brute_force(costs: &CostMatrix) -> f64 {
    use itertools::Itertools;
    let n = costs.size();
    (0..n)
        .permutations(n)
        .map(|perm| costs.cost_of(&perm))
        .fold(f64::INFINITY, f64::min)
}
