//! Sparse weighted digraphs `w_ij` and their empirical graphons.
//!
//! Indices are 0-based throughout the Rust API. The text edge-list format
//! (see the `meanfield-lab` crate) is 1-based.
//!
//! The empirical graphon of `w` is the piecewise-constant kernel with value
//! `N * w_ij` on the cell `[i/N, (i+1)/N) x [j/N, (j+1)/N)`. Integrating it
//! against a cell function multiplies by the cell measure `1/N`, which
//! cancels the factor `N`: the operator action is therefore the raw sparse
//! matvec [`SparseWeights::kernel_apply`], with no extra scaling.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::{self, Purpose};
use crate::sum::neumaier_sum;

/// Sparse `N x N` weight matrix stored in compressed rows, with a column
/// index over the same entries.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseWeights {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
    col_ptr: Vec<usize>,
    /// For each column-ordered slot, the position of the entry in `cols`/`vals`.
    col_slots: Vec<usize>,
    col_rows: Vec<usize>,
}

/// Which index of `w_ij` is summed out by [`SparseWeights::kernel_apply`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// `out_i = sum_j w_ij phi_j`
    Row,
    /// `out_j = sum_i w_ij phi_i`
    Col,
}

/// Mean-field scaling diagnostics of a weight matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingReport {
    pub max_row_abs_sum: f64,
    pub max_col_abs_sum: f64,
    pub max_entry_abs: f64,
    /// Stored entries divided by `N^2`.
    pub density: f64,
}

/// How [`SparseWeights::from_graphon`] turns a kernel into weights.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GraphonSampling {
    /// `w_ij = g((i+1/2)/N, (j+1/2)/N) / N` for every pair.
    Midpoint,
    /// Edge `(i,j)` present with probability `g` at the cell midpoint
    /// (clamped to `[0,1]`), weight `1/N`.
    Bernoulli { seed: u64 },
}

impl SparseWeights {
    /// Builds weights from `(i, j, w)` triplets (0-based). Duplicate keys and
    /// out-of-range indices are rejected.
    pub fn from_triplets<I>(n: usize, triplets: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        if n == 0 {
            return Err(Error::invalid("n_agents", "must be at least 1"));
        }
        let mut t: Vec<(usize, usize, f64)> = triplets.into_iter().collect();
        for &(i, j, w) in &t {
            if i >= n {
                return Err(Error::OutOfRange {
                    context: "weights row",
                    index: i,
                    max: n - 1,
                });
            }
            if j >= n {
                return Err(Error::OutOfRange {
                    context: "weights column",
                    index: j,
                    max: n - 1,
                });
            }
            if !w.is_finite() {
                return Err(Error::invalid("weight", "entries must be finite"));
            }
        }
        t.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        if t.windows(2).any(|p| p[0].0 == p[1].0 && p[0].1 == p[1].1) {
            return Err(Error::invalid("weights", "duplicate (i,j) entry"));
        }
        let mut row_ptr = vec![0usize; n + 1];
        for &(i, _, _) in &t {
            row_ptr[i + 1] += 1;
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        let cols: Vec<usize> = t.iter().map(|e| e.1).collect();
        let vals: Vec<f64> = t.iter().map(|e| e.2).collect();
        Ok(Self::with_col_index(n, row_ptr, cols, vals))
    }

    fn with_col_index(n: usize, row_ptr: Vec<usize>, cols: Vec<usize>, vals: Vec<f64>) -> Self {
        let mut col_ptr = vec![0usize; n + 1];
        for &j in &cols {
            col_ptr[j + 1] += 1;
        }
        for j in 0..n {
            col_ptr[j + 1] += col_ptr[j];
        }
        let mut fill = col_ptr.clone();
        let mut col_slots = vec![0usize; cols.len()];
        let mut col_rows = vec![0usize; cols.len()];
        // Rows are visited in ascending order, so each column list is sorted by row.
        for i in 0..n {
            for k in row_ptr[i]..row_ptr[i + 1] {
                let j = cols[k];
                col_slots[fill[j]] = k;
                col_rows[fill[j]] = i;
                fill[j] += 1;
            }
        }
        SparseWeights {
            n,
            row_ptr,
            cols,
            vals,
            col_ptr,
            col_slots,
            col_rows,
        }
    }

    /// No stored entries.
    pub fn empty(n: usize) -> Result<Self> {
        Self::from_triplets(n, core::iter::empty())
    }

    /// Uniform weights `w_bar / n`; the diagonal is stored only on request.
    pub fn uniform(n: usize, w_bar: f64, include_diagonal: bool) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("n", "must be at least 1"));
        }
        let w = w_bar / n as f64;
        Self::from_triplets(
            n,
            (0..n).flat_map(move |i| {
                (0..n)
                    .filter(move |&j| include_diagonal || i != j)
                    .map(move |j| (i, j, w))
            }),
        )
    }

    /// Class-permutation graph: agents split into consecutive blocks of size
    /// `m`; block `k` connects to every agent of block `perm[k]` with weight
    /// `1/m`.
    pub fn class_permutation(n: usize, m: usize, perm: &[usize]) -> Result<Self> {
        if m == 0 || n == 0 || n % m != 0 {
            return Err(Error::invalid("m", "class size must divide the agent count"));
        }
        let classes = n / m;
        if perm.len() != classes {
            return Err(Error::DimensionMismatch {
                context: "class permutation",
                expected: classes,
                found: perm.len(),
            });
        }
        check_permutation(perm)?;
        let w = 1.0 / m as f64;
        Self::from_triplets(
            n,
            (0..n).flat_map(move |i| {
                let target = perm[i / m];
                (target * m..(target + 1) * m).map(move |j| (i, j, w))
            }),
        )
    }

    /// Discretizes a bounded kernel `g` on `[0,1]^2`.
    pub fn from_graphon<G>(n: usize, g: G, sampling: GraphonSampling) -> Result<Self>
    where
        G: Fn(f64, f64) -> f64,
    {
        if n == 0 {
            return Err(Error::invalid("n", "must be at least 1"));
        }
        let nf = n as f64;
        let mid = |i: usize| (i as f64 + 0.5) / nf;
        let mut t = Vec::new();
        match sampling {
            GraphonSampling::Midpoint => {
                for i in 0..n {
                    for j in 0..n {
                        t.push((i, j, g(mid(i), mid(j)) / nf));
                    }
                }
            }
            GraphonSampling::Bernoulli { seed } => {
                for i in 0..n {
                    let mut r = rng::stream(seed, Purpose::GraphSampling, i as u64, 0);
                    for j in 0..n {
                        let p = g(mid(i), mid(j)).clamp(0.0, 1.0);
                        let u: f64 = r.random();
                        if u < p {
                            t.push((i, j, 1.0 / nf));
                        }
                    }
                }
            }
        }
        Self::from_triplets(n, t)
    }

    pub fn n_agents(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// Stored entries of row `i` as `(j, w_ij)`, ascending in `j`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[r.clone()]
            .iter()
            .copied()
            .zip(self.vals[r].iter().copied())
    }

    /// Stored entries of column `j` as `(i, w_ij)`, ascending in `i`.
    pub fn col(&self, j: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.col_ptr[j]..self.col_ptr[j + 1];
        self.col_rows[r.clone()]
            .iter()
            .copied()
            .zip(self.col_slots[r].iter().map(move |&k| self.vals[k]))
    }

    /// All stored entries `(i, j, w_ij)` in row-major order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |i| self.row(i).map(move |(j, w)| (i, j, w)))
    }

    /// Entries reconstructed from the column index, in column-major order.
    pub fn entries_by_col(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |j| self.col(j).map(move |(i, w)| (i, j, w)))
    }

    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[r.clone()]
            .binary_search(&j)
            .ok()
            .map(|k| self.vals[r.start + k])
    }

    /// Dense row-major copy; intended for tests and small reference loops.
    pub fn to_dense(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.n * self.n];
        for (i, j, w) in self.entries() {
            d[i * self.n + j] = w;
        }
        d
    }

    pub fn check_scaling(&self) -> ScalingReport {
        let max_row_abs_sum = (0..self.n)
            .map(|i| neumaier_sum(self.row(i).map(|(_, w)| w.abs())))
            .fold(0.0, f64::max);
        let max_col_abs_sum = (0..self.n)
            .map(|j| neumaier_sum(self.col(j).map(|(_, w)| w.abs())))
            .fold(0.0, f64::max);
        let max_entry_abs = self.vals.iter().map(|w| w.abs()).fold(0.0, f64::max);
        let n2 = (self.n as f64) * (self.n as f64);
        ScalingReport {
            max_row_abs_sum,
            max_col_abs_sum,
            max_entry_abs,
            density: self.nnz() as f64 / n2,
        }
    }

    /// Discrete operator action of the kernel on a cell function.
    pub fn kernel_apply(&self, phi: &[f64], side: Side) -> Result<Vec<f64>> {
        if phi.len() != self.n {
            return Err(Error::DimensionMismatch {
                context: "kernel_apply",
                expected: self.n,
                found: phi.len(),
            });
        }
        Ok(match side {
            Side::Row => (0..self.n)
                .map(|i| self.row(i).fold(0.0, |acc, (j, w)| acc + w * phi[j]))
                .collect(),
            Side::Col => (0..self.n)
                .map(|j| self.col(j).fold(0.0, |acc, (i, w)| acc + w * phi[i]))
                .collect(),
        })
    }

    /// Row-side action on a block of `width` values per cell:
    /// `out[i*width + l] = sum_j w_ij input[j*width + l]`.
    pub fn apply_rows_block(&self, input: &[f64], width: usize) -> Result<Vec<f64>> {
        if input.len() != self.n * width {
            return Err(Error::DimensionMismatch {
                context: "apply_rows_block",
                expected: self.n * width,
                found: input.len(),
            });
        }
        let mut out = vec![0.0; self.n * width];
        crate::exec::for_each_chunk(&mut out, width, |i, dst| {
            for (j, w) in self.row(i) {
                let src = &input[j * width..(j + 1) * width];
                for (d, s) in dst.iter_mut().zip(src) {
                    *d += w * s;
                }
            }
        });
        Ok(out)
    }

    /// Relabeled weights `w~_ij = w_{perm[i], perm[j]}`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.n {
            return Err(Error::DimensionMismatch {
                context: "permutation",
                expected: self.n,
                found: perm.len(),
            });
        }
        check_permutation(perm)?;
        let mut inverse = vec![0usize; self.n];
        for (new, &old) in perm.iter().enumerate() {
            inverse[old] = new;
        }
        Self::from_triplets(
            self.n,
            self.entries().map(|(i, j, w)| (inverse[i], inverse[j], w)),
        )
    }

    pub fn graphon(&self) -> EmpiricalGraphon<'_> {
        EmpiricalGraphon { weights: self }
    }
}

/// Piecewise-constant kernel `w_N(xi, zeta) = N * w_ij` on cell `(i, j)`.
#[derive(Debug, Clone, Copy)]
pub struct EmpiricalGraphon<'a> {
    weights: &'a SparseWeights,
}

impl EmpiricalGraphon<'_> {
    pub fn n_cells(&self) -> usize {
        self.weights.n
    }

    /// Cell containing `xi`; `xi = 1` belongs to the last cell.
    pub fn cell_of(&self, xi: f64) -> usize {
        let n = self.weights.n;
        let c = (xi * n as f64).floor();
        if c < 0.0 {
            0
        } else {
            (c as usize).min(n - 1)
        }
    }

    pub fn value(&self, xi: f64, zeta: f64) -> f64 {
        let (i, j) = (self.cell_of(xi), self.cell_of(zeta));
        self.weights.get(i, j).unwrap_or(0.0) * self.weights.n as f64
    }
}

/// Fails unless `perm` is a bijection on `0..perm.len()`.
pub fn check_permutation(perm: &[usize]) -> Result<()> {
    let mut seen = vec![false; perm.len()];
    for &p in perm {
        if p >= perm.len() || seen[p] {
            return Err(Error::invalid("perm", "not a bijection"));
        }
        seen[p] = true;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec::Vec;

    #[test]
    fn uniform_off_diagonal() {
        let w = SparseWeights::uniform(4, 1.0, false).unwrap();
        assert_eq!(w.nnz(), 12);
        assert!(w.entries().all(|(i, j, v)| i != j && v == 0.25));
    }

    #[test]
    fn single_agent_has_no_pairs() {
        let w = SparseWeights::uniform(1, 2.0, false).unwrap();
        assert_eq!(w.nnz(), 0);
        assert!(SparseWeights::uniform(0, 1.0, false).is_err());
    }

    #[test]
    fn uniform_max_entry() {
        let r = SparseWeights::uniform(100, 1.0, false).unwrap().check_scaling();
        assert_eq!(r.max_entry_abs, 0.01);
    }

    #[test]
    fn empty_scaling_is_zero() {
        let r = SparseWeights::empty(10).unwrap().check_scaling();
        assert_eq!(r, ScalingReport { max_row_abs_sum: 0.0, max_col_abs_sum: 0.0, max_entry_abs: 0.0, density: 0.0 });
    }

    #[test]
    fn uniform_row_sums_by_direct_summation() {
        for diag in [false, true] {
            let w = SparseWeights::uniform(8, 1.0, diag).unwrap();
            let dense = w.to_dense();
            let brute = (0..8)
                .map(|i| (0..8).map(|j| dense[i * 8 + j].abs()).sum::<f64>())
                .fold(0.0, f64::max);
            let r = w.check_scaling();
            assert!((r.max_row_abs_sum - brute).abs() < 1e-15);
            let expected = if diag { 1.0 } else { 1.0 - 1.0 / 8.0 };
            assert!((r.max_row_abs_sum - expected).abs() < 1e-15);
        }
    }

    #[test]
    fn class_permutation_small_case() {
        let w = SparseWeights::class_permutation(4, 2, &[0, 1]).unwrap();
        let e: Vec<_> = w.entries().collect();
        let expected = [(0, 0), (0, 1), (1, 0), (1, 1), (2, 2), (2, 3), (3, 2), (3, 3)];
        assert_eq!(e.len(), 8);
        for ((i, j, v), (ei, ej)) in e.iter().zip(expected) {
            assert_eq!((*i, *j), (ei, ej));
            assert_eq!(*v, 0.5);
        }
    }

    #[test]
    fn class_permutation_paper_example() {
        let perm: Vec<usize> = (0..16).rev().collect();
        let r = SparseWeights::class_permutation(1024, 64, &perm).unwrap().check_scaling();
        assert_eq!(r.max_row_abs_sum, 1.0);
        assert_eq!(r.max_col_abs_sum, 1.0);
        assert_eq!(r.density, 1.0 / 16.0);
    }

    #[test]
    fn class_permutation_rejects_bad_input() {
        assert!(SparseWeights::class_permutation(10, 3, &[0, 1, 2]).is_err());
        assert!(SparseWeights::class_permutation(4, 2, &[0, 0]).is_err());
        assert!(SparseWeights::class_permutation(4, 2, &[0]).is_err());
    }

    #[test]
    fn graphon_midpoint_product() {
        let w = SparseWeights::from_graphon(2, |x, y| x * y, GraphonSampling::Midpoint).unwrap();
        assert_eq!(w.get(0, 0), Some(0.03125));
    }

    #[test]
    fn constant_graphon_matches_uniform_with_diagonal() {
        let a = SparseWeights::from_graphon(10, |_, _| 1.0, GraphonSampling::Midpoint).unwrap();
        let b = SparseWeights::uniform(10, 1.0, true).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn bernoulli_sampling_is_seeded() {
        let g = |x: f64, y: f64| 0.5 * (x + y);
        let a = SparseWeights::from_graphon(30, g, GraphonSampling::Bernoulli { seed: 3 }).unwrap();
        let b = SparseWeights::from_graphon(30, g, GraphonSampling::Bernoulli { seed: 3 }).unwrap();
        assert_eq!(a, b);
        assert!(a.nnz() > 0 && a.nnz() < 900);
    }

    #[test]
    fn graphon_row_sum_bounded_by_sup() {
        let g = |x: f64, y: f64| (3.0 * x - y).sin() * 2.0;
        for n in 1..=64 {
            let r = SparseWeights::from_graphon(n, g, GraphonSampling::Midpoint)
                .unwrap()
                .check_scaling();
            assert!(r.max_row_abs_sum <= 2.0 + 1e-12);
        }
    }

    #[test]
    fn kernel_apply_examples() {
        let w = SparseWeights::uniform(5, 1.0, false).unwrap();
        let out = w.kernel_apply(&[1.0; 5], Side::Row).unwrap();
        assert!(out.iter().all(|v| (v - 0.8).abs() < 1e-15));
        let cp = SparseWeights::class_permutation(6, 3, &[1, 0]).unwrap();
        let out = cp.kernel_apply(&[2.5; 6], Side::Col).unwrap();
        assert!(out.iter().all(|v| (v - 2.5).abs() < 1e-15));
        let z = cp.kernel_apply(&[0.0; 6], Side::Row).unwrap();
        assert!(z.iter().all(|v| *v == 0.0));
        assert!(cp.kernel_apply(&[0.0; 5], Side::Row).is_err());
    }

    #[test]
    fn triplet_validation() {
        assert!(SparseWeights::from_triplets(3, [(0, 3, 1.0)]).is_err());
        assert!(SparseWeights::from_triplets(3, [(0, 1, 1.0), (0, 1, 2.0)]).is_err());
        assert!(SparseWeights::from_triplets(3, [(0, 1, f64::NAN)]).is_err());
    }

    #[test]
    fn graphon_cells() {
        let w = SparseWeights::from_triplets(4, [(1, 2, 0.25)]).unwrap();
        let g = w.graphon();
        assert_eq!(g.value(0.3, 0.6), 1.0);
        assert_eq!(g.value(0.3, 0.4), 0.0);
        assert_eq!(g.cell_of(1.0), 3);
    }
}
