//! Hierarchical measure-preserving rearrangement of `P` uniform cells of
//! `[0, 1]` and its L¹ shift modulus.
//!
//! Level `k` partitions the cells into `n_k = 2^{k(k+1)/2}` pieces of equal
//! size. Going to level `k+1`, every piece is halved by rank of `g_1`, each
//! half by rank of `g_2`, and so on up to `g_{k+1}`; the `2^{k+1}` resulting
//! pieces are ordered lexicographically (low half first) and occupy
//! consecutive dyadic intervals.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::{check_permutation, SparseWeights};
use crate::pde::FiberedDensity;
use crate::rng::{self, Purpose};

/// Number of pieces at level `k`, `2^{k(k+1)/2}`.
pub fn pieces_at_level(k: usize) -> Result<u64> {
    let e = k * (k + 1) / 2;
    if e >= 63 {
        return Err(Error::invalid("n_funcs", "too many levels"));
    }
    Ok(1u64 << e)
}

/// `K` cell functions on `P` cells, `K x P` row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CellFunctions {
    n_funcs: usize,
    n_cells: usize,
    values: Vec<f64>,
}

impl CellFunctions {
    fn shape_check(n_funcs: usize, values: &[f64]) -> Result<usize> {
        if n_funcs == 0 {
            return Err(Error::invalid("n_funcs", "need at least one function"));
        }
        if values.is_empty() || values.len() % n_funcs != 0 {
            return Err(Error::invalid("values", "length must be a positive multiple of n_funcs"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("values", "entries must be finite"));
        }
        let p = values.len() / n_funcs;
        let n_k = pieces_at_level(n_funcs)?;
        if p as u64 % n_k != 0 {
            let lower = p as u64 / n_k * n_k;
            let nearest = if lower == 0 || p as u64 - lower > lower + n_k - p as u64 {
                lower + n_k
            } else {
                lower
            };
            return Err(Error::invalid(
                "n_cells",
                format!("{p} cells is not a multiple of {n_k}; nearest admissible count is {nearest}"),
            ));
        }
        Ok(p)
    }

    /// Requires `0 < g_m <= 2^{-m+1}` for `m = 1..K`.
    pub fn strict(n_funcs: usize, values: Vec<f64>) -> Result<Self> {
        let p = Self::shape_check(n_funcs, &values)?;
        for m in 0..n_funcs {
            let cap = 0.5f64.powi(m as i32);
            if values[m * p..(m + 1) * p].iter().any(|v| !(*v > 0.0 && *v <= cap)) {
                return Err(Error::invalid(
                    "values",
                    format!("function {} must take values in (0, {cap}]", m + 1),
                ));
            }
        }
        Ok(CellFunctions {
            n_funcs,
            n_cells: p,
            values,
        })
    }

    /// Accepts any bounded values and rescales
    /// `g~_m = (g_m + ||g_m||_inf) / (2^m ||g_m||_inf)` into `[0, 2^{-m+1}]`.
    /// A function that vanishes identically becomes the constant `2^{-m}`.
    pub fn general(n_funcs: usize, mut values: Vec<f64>) -> Result<Self> {
        let p = Self::shape_check(n_funcs, &values)?;
        for m in 0..n_funcs {
            let row = &mut values[m * p..(m + 1) * p];
            let sup = row.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            let scale = 2.0f64.powi(m as i32 + 1);
            for v in row.iter_mut() {
                *v = if sup > 0.0 { (*v + sup) / (scale * sup) } else { 1.0 / scale };
            }
        }
        Ok(CellFunctions {
            n_funcs,
            n_cells: p,
            values,
        })
    }

    /// I.i.d. uniform values in `(0, 2^{-m+1}]`.
    pub fn random_strict(n_funcs: usize, n_cells: usize, seed: u64, instance: u64) -> Result<Self> {
        let mut r = rng::stream(seed, Purpose::CellFunctions, instance, 0);
        let mut values = Vec::with_capacity(n_funcs * n_cells);
        for m in 0..n_funcs {
            let cap = 0.5f64.powi(m as i32);
            for _ in 0..n_cells {
                let u: f64 = r.random();
                values.push(cap * (1.0 - u));
            }
        }
        Self::strict(n_funcs, values)
    }

    pub fn n_funcs(&self) -> usize {
        self.n_funcs
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    /// Function `m` (0-based) on all cells.
    pub fn func(&self, m: usize) -> &[f64] {
        &self.values[m * self.n_cells..(m + 1) * self.n_cells]
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RearrangementMap {
    /// `perm[position]` is the original cell placed at that position.
    pub perm: Vec<usize>,
    pub levels: usize,
}

/// Splits `piece` into low and high halves by rank of `g`, ties by cell
/// index. Both halves keep ascending index order.
fn median_split(piece: &[usize], g: &[f64]) -> (Vec<usize>, Vec<usize>) {
    let mut ranked = piece.to_vec();
    ranked.sort_by(|&a, &b| g[a].total_cmp(&g[b]).then(a.cmp(&b)));
    let half = ranked.len() / 2;
    let mut low = ranked[..half].to_vec();
    let mut high = ranked[half..].to_vec();
    low.sort_unstable();
    high.sort_unstable();
    (low, high)
}

/// Pieces at every level `0..=K`, each level in dyadic order, each piece in
/// ascending cell order.
pub fn build_levels(g: &CellFunctions) -> Vec<Vec<Vec<usize>>> {
    let mut levels = vec![vec![(0..g.n_cells).collect::<Vec<_>>()]];
    for k in 0..g.n_funcs {
        let prev = levels.last().expect("level 0 exists");
        let refined: Vec<Vec<Vec<usize>>> = crate::exec::map_range(prev.len(), |i| {
            let mut parts = vec![prev[i].clone()];
            for m in 0..=k {
                let func = g.func(m);
                parts = parts
                    .iter()
                    .flat_map(|p| {
                        let (lo, hi) = median_split(p, func);
                        [lo, hi]
                    })
                    .collect();
            }
            parts
        });
        levels.push(refined.into_iter().flatten().collect());
    }
    levels
}

pub fn build_phi(g: &CellFunctions) -> RearrangementMap {
    let levels = build_levels(g);
    let perm = levels
        .last()
        .expect("at least one level")
        .iter()
        .flatten()
        .copied()
        .collect();
    RearrangementMap {
        perm,
        levels: g.n_funcs,
    }
}

/// One row of the modulus table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModulusRow {
    pub shift: usize,
    /// Shift as a fraction of `[0, 1]`.
    pub tau: f64,
    pub value: f64,
}

/// `M(h) = max_m (1/P) sum_xi |g_m(perm(xi)) - g_m(perm(xi + h))|`, zero
/// beyond the last cell.
pub fn modulus_at(g: &CellFunctions, phi: &RearrangementMap, shift: usize) -> f64 {
    let p = g.n_cells;
    (0..g.n_funcs)
        .map(|m| {
            let func = g.func(m);
            let arranged: Vec<f64> = phi.perm.iter().map(|&c| func[c]).collect();
            let total: f64 = (0..p)
                .map(|x| {
                    let next = if x + shift < p { arranged[x + shift] } else { 0.0 };
                    (arranged[x] - next).abs()
                })
                .sum();
            total / p as f64
        })
        .fold(0.0, f64::max)
}

pub fn modulus(g: &CellFunctions, phi: &RearrangementMap, shifts: &[usize]) -> Result<Vec<ModulusRow>> {
    if phi.perm.len() != g.n_cells {
        return Err(Error::DimensionMismatch {
            context: "rearrangement size",
            expected: g.n_cells,
            found: phi.perm.len(),
        });
    }
    Ok(shifts
        .iter()
        .map(|&h| ModulusRow {
            shift: h,
            tau: h as f64 / g.n_cells as f64,
            value: modulus_at(g, phi, h),
        })
        .collect())
}

/// Outcome of checking `M(tau) <= 3 * 2^{-k}` for all shifts
/// `tau <= 1/n_k^2` at one level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelBound {
    pub k: usize,
    pub max_shift: usize,
    /// Largest `M(h)` over the admissible shifts.
    pub worst: f64,
    pub bound: f64,
}

impl LevelBound {
    pub fn holds(&self) -> bool {
        self.worst <= self.bound
    }
}

/// Checks the explicit level bound for `k = 1..=K` over every admissible
/// shift.
pub fn level_bounds(g: &CellFunctions, phi: &RearrangementMap) -> Result<Vec<LevelBound>> {
    let p = g.n_cells;
    let mut out = Vec::with_capacity(g.n_funcs);
    let max_shift_all = (1..=g.n_funcs)
        .map(|k| pieces_at_level(k).map(|n| p as u64 / (n * n)))
        .collect::<Result<Vec<_>>>()?;
    let top = max_shift_all.iter().copied().max().unwrap_or(0) as usize;
    let shifts: Vec<usize> = (1..=top).collect();
    let values: Vec<f64> = crate::exec::map_range(shifts.len(), |i| modulus_at(g, phi, shifts[i]));
    for k in 1..=g.n_funcs {
        let max_shift = max_shift_all[k - 1] as usize;
        let worst = values[..max_shift].iter().copied().fold(0.0, f64::max);
        out.push(LevelBound {
            k,
            max_shift,
            worst,
            bound: 3.0 * 0.5f64.powi(k as i32),
        });
    }
    Ok(out)
}

/// Largest `C` with `M(h) <= 2^{-C sqrt(log2(1/h))}` on the table rows with
/// `0 < M(h) < 1` and `0 < h < 1/2`. Informational.
pub fn fitted_constant(table: &[ModulusRow]) -> Option<f64> {
    table
        .iter()
        .filter(|r| r.value > 0.0 && r.value < 1.0 && r.tau > 0.0 && r.tau < 0.5)
        .map(|r| -r.value.log2() / (-r.tau.log2()).sqrt())
        .reduce(f64::min)
}

/// Relabels weights and fibers simultaneously:
/// `w~_ij = w_{perm(i) perm(j)}`, fiber `i` of `f~` is fiber `perm(i)`.
pub fn rearrange_pair(
    w: &SparseWeights,
    f: &FiberedDensity,
    phi: &RearrangementMap,
) -> Result<(SparseWeights, FiberedDensity)> {
    if w.n_agents() != phi.perm.len() || f.n_fibers() != phi.perm.len() {
        return Err(Error::DimensionMismatch {
            context: "rearrangement size",
            expected: phi.perm.len(),
            found: if w.n_agents() != phi.perm.len() { w.n_agents() } else { f.n_fibers() },
        });
    }
    check_permutation(&phi.perm)?;
    Ok((w.permuted(&phi.perm)?, f.permuted(&phi.perm)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_split_puts_small_values_first() {
        let g = CellFunctions::strict(1, vec![0.9, 0.4]).unwrap();
        assert_eq!(build_phi(&g).perm, vec![1, 0]);
    }

    #[test]
    fn constant_functions_give_identity() {
        let g = CellFunctions::strict(2, vec![[0.7; 16], [0.25; 16]].concat()).unwrap();
        assert_eq!(build_phi(&g).perm, (0..16).collect::<Vec<_>>());
    }

    #[test]
    fn divisibility_error_suggests_count() {
        let err = CellFunctions::strict(2, vec![0.1; 2 * 10]).unwrap_err();
        let msg = alloc::format!("{err}");
        assert!(msg.contains("nearest admissible count is 8"), "{msg}");
    }

    #[test]
    fn strict_mode_rejects_out_of_range() {
        assert!(CellFunctions::strict(2, vec![0.5, 0.5, 0.6, 0.1]).is_err());
        assert!(CellFunctions::strict(1, vec![0.0, 0.5]).is_err());
    }

    #[test]
    fn general_mode_rescales() {
        let mut v = vec![0.0; 16];
        v[..8].copy_from_slice(&[-2.0, 2.0, 0.0, 1.0, -1.0, 0.0, 0.0, 0.0]);
        let g = CellFunctions::general(2, v).unwrap();
        assert_eq!(&g.func(0)[..4], &[0.0, 1.0, 0.5, 0.75]);
        assert_eq!(g.func(1), &[0.25; 8]);
    }

    #[test]
    fn zero_shift_has_zero_modulus() {
        let g = CellFunctions::random_strict(2, 64, 1, 0).unwrap();
        let phi = build_phi(&g);
        assert_eq!(modulus_at(&g, &phi, 0), 0.0);
    }
}
