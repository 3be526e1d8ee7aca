//! Tree-indexed observables
//!
//! `tau(T, w, f)(x_1..x_m) = (1/N) sum_{i_1..i_m} prod_{(k,l) in T} w_{i_k i_l} prod_k f_{i_k}(x_k)`,
//! their homomorphism densities, the transform algebra and the hierarchy
//! diagnostics.
//!
//! Cell measure and graphon scaling cancel: integrating over `xi` costs a
//! factor `1/N` and the empirical graphon is `N w_ij`, so the `Star`
//! operation is the plain sparse product `sum_j w_ij F_j`. Do not rescale
//! the weights.

use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::graph::SparseWeights;
use crate::kernel::Kernel;
use crate::pde::{self, ConvolutionMethod, Convolver, FiberedDensity, Grid1D, Topology};
use crate::trees::{enumerate_trees, LabeledTree};

/// Largest tree order for grid observables.
pub const MAX_GRID_ORDER: usize = 4;

/// Default cap on `n_fibers * G^order`.
pub const DEFAULT_BUDGET: u128 = 1 << 27;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum TransformExpr {
    Leaf,
    Tensor(Box<TransformExpr>, Box<TransformExpr>),
    Star(Box<TransformExpr>),
}

impl TransformExpr {
    pub fn tensor(a: TransformExpr, b: TransformExpr) -> Self {
        TransformExpr::Tensor(Box::new(a), Box::new(b))
    }

    pub fn star(a: TransformExpr) -> Self {
        TransformExpr::Star(Box::new(a))
    }

    pub fn rank(&self) -> usize {
        match self {
            TransformExpr::Leaf => 1,
            TransformExpr::Tensor(a, b) => a.rank() + b.rank(),
            TransformExpr::Star(a) => a.rank(),
        }
    }

    pub fn star_count(&self) -> usize {
        match self {
            TransformExpr::Leaf => 0,
            TransformExpr::Tensor(a, b) => a.star_count() + b.star_count(),
            TransformExpr::Star(a) => 1 + a.star_count(),
        }
    }
}

impl fmt::Display for TransformExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TransformExpr::Leaf => f.write_str("L"),
            TransformExpr::Tensor(a, b) => write!(f, "({a} x {b})"),
            TransformExpr::Star(a) => write!(f, "{a}*"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ChildOrder {
    #[default]
    Ascending,
    Descending,
}

/// A transform together with the tree vertex carried by each of its
/// variables, in the order the expression consumes them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreeTransform {
    pub expr: TransformExpr,
    pub vertices: Vec<usize>,
}

fn check_order(t: &LabeledTree, cap: usize) -> Result<()> {
    if t.order() > cap {
        return Err(Error::invalid(
            "tree",
            alloc::format!("order {} exceeds the cap {cap}", t.order()),
        ));
    }
    Ok(())
}

/// `F(v) = Leaf (x) Star(F(c_1)) (x) ... (x) Star(F(c_k))`, left-associated,
/// children visited in `order`.
pub fn tree_transform(t: &LabeledTree, order: ChildOrder) -> Result<TreeTransform> {
    check_order(t, MAX_GRID_ORDER)?;
    let children = t.child_lists();
    fn build(v: usize, children: &[Vec<usize>], order: ChildOrder, vars: &mut Vec<usize>) -> TransformExpr {
        vars.push(v);
        let mut expr = TransformExpr::Leaf;
        let mut kids = children[v - 1].clone();
        if order == ChildOrder::Descending {
            kids.reverse();
        }
        for c in kids {
            expr = TransformExpr::tensor(expr, TransformExpr::star(build(c, children, order, vars)));
        }
        expr
    }
    let mut vertices = Vec::with_capacity(t.order());
    let expr = build(1, &children, order, &mut vertices);
    Ok(TreeTransform { expr, vertices })
}

pub fn tree_to_transform(t: &LabeledTree) -> Result<TransformExpr> {
    Ok(tree_transform(t, ChildOrder::Ascending)?.expr)
}

fn check_pair(w: &SparseWeights, f: &FiberedDensity) -> Result<()> {
    if w.n_agents() != f.n_fibers() {
        return Err(Error::DimensionMismatch {
            context: "weights vs fibers",
            expected: f.n_fibers(),
            found: w.n_agents(),
        });
    }
    Ok(())
}

/// Evaluates `expr` per fiber with its variables at the grid cells
/// `cells` (in the order the expression consumes them).
pub fn eval_transform(
    expr: &TransformExpr,
    w: &SparseWeights,
    f: &FiberedDensity,
    cells: &[usize],
) -> Result<Vec<f64>> {
    check_pair(w, f)?;
    if cells.len() != expr.rank() {
        return Err(Error::DimensionMismatch {
            context: "transform rank",
            expected: expr.rank(),
            found: cells.len(),
        });
    }
    let g = f.grid().n_cells;
    if let Some(&c) = cells.iter().find(|&&c| c >= g) {
        return Err(Error::OutOfRange {
            context: "grid cell",
            index: c,
            max: g - 1,
        });
    }
    fn go(e: &TransformExpr, w: &SparseWeights, f: &FiberedDensity, cells: &[usize]) -> Vec<f64> {
        match e {
            TransformExpr::Leaf => (0..f.n_fibers()).map(|i| f.fiber(i)[cells[0]]).collect(),
            TransformExpr::Tensor(a, b) => {
                let ra = a.rank();
                let mut x = go(a, w, f, &cells[..ra]);
                let y = go(b, w, f, &cells[ra..]);
                for (p, q) in x.iter_mut().zip(y) {
                    *p *= q;
                }
                x
            }
            TransformExpr::Star(a) => {
                let inner = go(a, w, f, cells);
                w.apply_rows_block(&inner, 1).expect("sizes checked")
            }
        }
    }
    Ok(go(expr, w, f, cells))
}

/// `(1/N) sum_xi F(xi)` with the variables given in tree-label order.
pub fn integrate_transform(
    tt: &TreeTransform,
    w: &SparseWeights,
    f: &FiberedDensity,
    x_labels: &[usize],
) -> Result<f64> {
    if x_labels.len() != tt.vertices.len() {
        return Err(Error::DimensionMismatch {
            context: "point arity",
            expected: tt.vertices.len(),
            found: x_labels.len(),
        });
    }
    let cells: Vec<usize> = tt.vertices.iter().map(|&v| x_labels[v - 1]).collect();
    let per_fiber = eval_transform(&tt.expr, w, f, &cells)?;
    Ok(per_fiber.iter().sum::<f64>() / f.n_fibers() as f64)
}

/// `tau(T)` on the full lattice `G^m`, flattened with `x_1` most
/// significant.
#[derive(Debug, Clone, PartialEq)]
pub struct Observable {
    pub tree: LabeledTree,
    pub grid: Grid1D,
    pub values: Vec<f64>,
}

impl Observable {
    pub fn order(&self) -> usize {
        self.tree.order()
    }

    pub fn cell_measure(&self) -> f64 {
        self.grid.dx().powi(self.order() as i32)
    }

    /// Value at the cells `x` (label order).
    pub fn get(&self, x: &[usize]) -> f64 {
        let g = self.grid.n_cells;
        self.values[x.iter().fold(0, |acc, &c| acc * g + c)]
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn l1_norm(&self) -> f64 {
        crate::neumaier_sum(self.values.iter().map(|v| v.abs())) * self.cell_measure()
    }

    pub fn l2_norm(&self) -> f64 {
        (crate::neumaier_sum(self.values.iter().map(|v| v * v)) * self.cell_measure()).sqrt()
    }

    /// `sum tau dx^m`.
    pub fn integral(&self) -> f64 {
        crate::neumaier_sum(self.values.iter().copied()) * self.cell_measure()
    }
}

/// Kronecker product, `a` most significant.
fn kron(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(a.len() * b.len());
    for x in a {
        for y in b {
            out.push(x * y);
        }
    }
    out
}

/// Message passing from the leaves to the root. `leaf` holds the per-fiber
/// one-variable factor, `N x g`. Returns the lattice in preorder layout
/// together with the preorder.
fn message_passing(t: &LabeledTree, w: &SparseWeights, leaf: &[f64], g: usize) -> (Vec<f64>, Vec<usize>) {
    let n = w.n_agents();
    let children = t.child_lists();
    let pre = t.preorder();
    // Child-side messages B_c = W M_c, stored per vertex, N x g^{size}.
    let mut blocks: Vec<Option<(Vec<f64>, usize)>> = vec![None; t.order() + 1];
    for &v in pre.iter().rev() {
        if v == 1 {
            break;
        }
        let mut width = g;
        let mut m: Vec<f64> = leaf.to_vec();
        for &c in &children[v - 1] {
            let (b, bw) = blocks[c].take().expect("children are finished first");
            let mut next = Vec::with_capacity(n * width * bw);
            for xi in 0..n {
                next.extend(kron(&m[xi * width..(xi + 1) * width], &b[xi * bw..(xi + 1) * bw]));
            }
            m = next;
            width *= bw;
        }
        let b = w.apply_rows_block(&m, width).expect("sizes are consistent");
        blocks[v] = Some((b, width));
    }
    // Root: P_xi = (x)_c B_c(xi), then tau[c, rest] = (1/N) sum_xi f(c, xi) P_xi[rest].
    let mut p: Vec<f64> = vec![1.0; n];
    let mut pw = 1usize;
    for &c in &children[0] {
        let (b, bw) = blocks[c].take().expect("children are finished first");
        let mut next = Vec::with_capacity(n * pw * bw);
        for xi in 0..n {
            next.extend(kron(&p[xi * pw..(xi + 1) * pw], &b[xi * bw..(xi + 1) * bw]));
        }
        p = next;
        pw *= bw;
    }
    let inv_n = 1.0 / n as f64;
    let mut out = vec![0.0; g * pw];
    crate::exec::for_each_chunk(&mut out, pw, |c, slab| {
        for xi in 0..n {
            let a = leaf[xi * g + c];
            if a != 0.0 {
                for (s, q) in slab.iter_mut().zip(&p[xi * pw..(xi + 1) * pw]) {
                    *s += a * q;
                }
            }
        }
        for s in slab.iter_mut() {
            *s *= inv_n;
        }
    });
    (out, pre)
}

/// Reorders a lattice from preorder layout to label layout.
fn to_label_layout(values: Vec<f64>, pre: &[usize], g: usize) -> Vec<f64> {
    let m = pre.len();
    if pre.iter().enumerate().all(|(p, &v)| v == p + 1) {
        return values;
    }
    let stride: Vec<usize> = pre.iter().map(|&v| g.pow((m - v) as u32)).collect();
    let mut out = vec![0.0; values.len()];
    let mut idx = vec![0usize; m];
    for val in values {
        let target: usize = idx.iter().zip(&stride).map(|(c, s)| c * s).sum();
        out[target] = val;
        for p in (0..m).rev() {
            idx[p] += 1;
            if idx[p] < g {
                break;
            }
            idx[p] = 0;
        }
    }
    out
}

/// `tau(T, w, f)` on the full grid lattice, subject to `budget` on
/// `n_fibers * G^order`.
pub fn tau_with_budget(t: &LabeledTree, w: &SparseWeights, f: &FiberedDensity, budget: u128) -> Result<Observable> {
    check_order(t, MAX_GRID_ORDER)?;
    check_pair(w, f)?;
    let g = f.grid().n_cells;
    let required = f.n_fibers() as u128 * (g as u128).pow(t.order() as u32);
    if required > budget {
        return Err(Error::BudgetExceeded { required, budget });
    }
    let (values, pre) = message_passing(t, w, f.values(), g);
    Ok(Observable {
        tree: t.clone(),
        grid: *f.grid(),
        values: to_label_layout(values, &pre, g),
    })
}

pub fn tau(t: &LabeledTree, w: &SparseWeights, f: &FiberedDensity) -> Result<Observable> {
    tau_with_budget(t, w, f, DEFAULT_BUDGET)
}

/// Sample-point mode: `tau` at the cell tuples `points` (flat, `order`
/// cells per point, label order) without building the lattice.
pub fn tau_at_points(t: &LabeledTree, w: &SparseWeights, f: &FiberedDensity, points: &[usize]) -> Result<Vec<f64>> {
    let tt = tree_transform(t, ChildOrder::Ascending)?;
    let m = t.order();
    if points.len() % m != 0 {
        return Err(Error::invalid("points", "length must be a multiple of the tree order"));
    }
    points.chunks(m).map(|x| integrate_transform(&tt, w, f, x)).collect()
}

/// Homomorphism density `tau(T, w)`: message passing with `f = 1`.
pub fn tau_density(t: &LabeledTree, w: &SparseWeights) -> f64 {
    let ones = vec![1.0; w.n_agents()];
    message_passing(t, w, &ones, 1).0[0]
}

/// Observables for every tree of order `1..=n_max`.
#[derive(Debug, Clone)]
pub struct HierarchyState {
    pub lambda: f64,
    pub n_max: usize,
    pub entries: Vec<Observable>,
}

impl HierarchyState {
    pub fn get(&self, t: &LabeledTree) -> Option<&Observable> {
        self.entries.iter().find(|o| &o.tree == t)
    }
}

pub fn hierarchy(w: &SparseWeights, f: &FiberedDensity, n_max: usize, lambda: f64) -> Result<HierarchyState> {
    if n_max == 0 || n_max > MAX_GRID_ORDER {
        return Err(Error::invalid("n_max", "must be between 1 and 4"));
    }
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::invalid("lambda", "must be positive and finite"));
    }
    let mut entries = Vec::new();
    for n in 1..=n_max {
        for t in enumerate_trees(n)? {
            entries.push(tau(&t, w, f)?);
        }
    }
    Ok(HierarchyState {
        lambda,
        n_max,
        entries,
    })
}

/// `sup_T lambda^{|T|/2} ||h_T||_{L^2}` over the stored trees; a lower
/// bound for the untruncated norm.
pub fn hierarchy_norm(h: &HierarchyState) -> f64 {
    h.entries
        .iter()
        .map(|o| h.lambda.powf(o.order() as f64 / 2.0) * o.l2_norm())
        .fold(0.0, f64::max)
}

/// Inputs of the admissibility condition on `lambda` for comparing two
/// solutions `(w, f)` and `(w~, f~)` up to time `t_star`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LambdaInputs {
    /// Row norms `max_i sum_j |w_ij|` of the two kernels.
    pub w_norm: f64,
    pub w_tilde_norm: f64,
    pub t_star: f64,
    pub div_k_sup: f64,
    /// `sup_xi ||f0(., xi)||_{L^1}`.
    pub f0_sup_l1: f64,
    /// `sup_xi ||f0(., xi)||_{L^2}` and the same for `f~0`.
    pub f0_sup_l2: f64,
    pub f0_tilde_sup_l2: f64,
}

/// Right-hand side of `sqrt(lambda) < min{2/w_max, w_min/w_max}
/// exp(-t_star w_max ||div K|| ||f0||_{L1} / 4) / (||f0||_{L2} + ||f~0||_{L2})`.
pub fn lambda_threshold(p: &LambdaInputs) -> f64 {
    let w_max = p.w_norm.max(p.w_tilde_norm);
    let w_min = p.w_norm.min(p.w_tilde_norm);
    let a = (2.0 / w_max).min(w_min / w_max);
    a * (-0.25 * p.t_star * w_max * p.div_k_sup * p.f0_sup_l1).exp() / (p.f0_sup_l2 + p.f0_tilde_sup_l2)
}

pub fn lambda_admissible(lambda: f64, p: &LambdaInputs) -> bool {
    lambda.sqrt() < lambda_threshold(p)
}

/// `sup_xi ||f(., xi)||_{L^p}` for `p = 1, 2` or `inf` (`p <= 0`).
pub fn fiber_sup_norm(f: &FiberedDensity, p: f64) -> f64 {
    let dx = f.grid().dx();
    (0..f.n_fibers())
        .map(|i| {
            let fib = f.fiber(i);
            if p <= 0.0 {
                fib.iter().fold(0.0, |m, v| m.max(v.abs()))
            } else if p == 1.0 {
                fib.iter().map(|v| v.abs()).sum::<f64>() * dx
            } else {
                (fib.iter().map(|v| v.abs().powf(p)).sum::<f64>() * dx).powf(1.0 / p)
            }
        })
        .fold(0.0, f64::max)
}

/// Hierarchy residual at one snapshot, with the resolution used.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Residual {
    /// Discrete `L^1` norm of the residual.
    pub value: f64,
    pub time: f64,
    /// Snapshot spacing used for the time derivative.
    pub dt: f64,
    pub dx: f64,
}

/// Centered first derivative along `axis` of a `g^m` lattice (label
/// layout). Zero extension on the line, wrap-around on the torus.
fn d_axis(u: &[f64], g: usize, m: usize, axis: usize, dx: f64, torus: bool) -> Vec<f64> {
    stencil(u, g, m, axis, torus, |l, _, r| (r - l) / (2.0 * dx))
}

fn laplace_axis(u: &[f64], g: usize, m: usize, axis: usize, dx: f64, torus: bool) -> Vec<f64> {
    stencil(u, g, m, axis, torus, |l, c, r| (r - 2.0 * c + l) / (dx * dx))
}

fn stencil<F: Fn(f64, f64, f64) -> f64>(u: &[f64], g: usize, m: usize, axis: usize, torus: bool, op: F) -> Vec<f64> {
    let stride = g.pow((m - 1 - axis) as u32);
    let mut out = vec![0.0; u.len()];
    for (idx, o) in out.iter_mut().enumerate() {
        let c = (idx / stride) % g;
        let left = if c > 0 {
            u[idx - stride]
        } else if torus {
            u[idx + (g - 1) * stride]
        } else {
            0.0
        };
        let right = if c + 1 < g {
            u[idx + stride]
        } else if torus {
            u[idx - (g - 1) * stride]
        } else {
            0.0
        };
        *o = op(left, u[idx], right);
    }
    out
}

fn middle_triplet(series: &[FiberedDensity]) -> Result<(usize, f64)> {
    if series.len() < 3 {
        return Err(Error::invalid("f_series", "at least 3 snapshots are required"));
    }
    let mid = series.len() / 2;
    let span = series[mid + 1].time - series[mid - 1].time;
    if !(span > 0.0) {
        return Err(Error::invalid("f_series", "snapshot times must increase"));
    }
    let g0 = series[0].grid();
    if series.iter().any(|s| s.grid() != g0 || s.n_fibers() != series[0].n_fibers()) {
        return Err(Error::invalid("f_series", "snapshots must share grid and fiber count"));
    }
    Ok((mid, span))
}

/// Residual of the hierarchy equation
/// `d_t tau(T) + sum_i div_{x_i} int K(x_i - z) tau(T+i)(.., z) dz - nu sum_i Lap_{x_i} tau(T)`
/// at the middle snapshot of `series`: time derivative by centered
/// differences between neighbouring snapshots, space derivatives by
/// centered stencils, the `z` integral by midpoint quadrature.
pub fn hierarchy_residual(
    t: &LabeledTree,
    w: &SparseWeights,
    series: &[FiberedDensity],
    k: &Kernel,
    nu: f64,
) -> Result<Residual> {
    check_order(t, MAX_GRID_ORDER - 1)?;
    let (mid, span) = middle_triplet(series)?;
    let f = &series[mid];
    let grid = *f.grid();
    let g = grid.n_cells;
    let dx = grid.dx();
    let m = t.order();
    let torus = grid.topology == Topology::Torus;
    let conv = Convolver::new(&grid, k, ConvolutionMethod::Direct)?;

    let before = tau(t, w, &series[mid - 1])?.values;
    let after = tau(t, w, &series[mid + 1])?.values;
    let now = tau(t, w, f)?.values;
    let mut r: Vec<f64> = before.iter().zip(&after).map(|(a, b)| (b - a) / span).collect();

    let len = r.len();
    for i in 1..=m {
        let plus = tau(&t.add_leaf(i)?, w, f)?.values;
        let stride_i = g.pow((m - i) as u32);
        let q: Vec<f64> = crate::exec::map_range(len, |idx| {
            let ci = (idx / stride_i) % g;
            let row = &plus[idx * g..(idx + 1) * g];
            let mut acc = 0.0;
            for (z, v) in row.iter().enumerate() {
                acc += conv.tap(ci as isize - z as isize) * v;
            }
            acc * dx
        });
        for (a, b) in r.iter_mut().zip(d_axis(&q, g, m, i - 1, dx, torus)) {
            *a += b;
        }
        if nu > 0.0 {
            for (a, b) in r.iter_mut().zip(laplace_axis(&now, g, m, i - 1, dx, torus)) {
                *a -= nu * b;
            }
        }
    }
    Ok(Residual {
        value: crate::neumaier_sum(r.iter().map(|v| v.abs())) * dx.powi(m as i32),
        time: f.time,
        dt: span / 2.0,
        dx,
    })
}

/// Residual of the marginal equation
/// `d_t rho + d_x((1/N) sum_i f_i V_i) - nu Lap rho`, `rho = (1/N) sum_i f_i`,
/// coded directly from the velocity field with the same stencils.
pub fn marginal_residual(
    w: &SparseWeights,
    series: &[FiberedDensity],
    k: &Kernel,
    nu: f64,
) -> Result<Residual> {
    let (mid, span) = middle_triplet(series)?;
    let f = &series[mid];
    let grid = *f.grid();
    let g = grid.n_cells;
    let dx = grid.dx();
    let torus = grid.topology == Topology::Torus;
    let n = f.n_fibers();
    let transport = pde::Transport::with_method(&grid, w, k, nu, ConvolutionMethod::Direct)?;
    let v = transport.velocity(f)?;
    let mut flux = vec![0.0; g];
    for i in 0..n {
        for (c, fl) in flux.iter_mut().enumerate() {
            *fl += f.fiber(i)[c] * v.fiber(i)[c];
        }
    }
    for fl in &mut flux {
        *fl /= n as f64;
    }
    let rho0 = pde::marginal(&series[mid - 1]);
    let rho2 = pde::marginal(&series[mid + 1]);
    let rho = pde::marginal(f);
    let div = d_axis(&flux, g, 1, 0, dx, torus);
    let lap = laplace_axis(&rho, g, 1, 0, dx, torus);
    let value = (0..g)
        .map(|c| ((rho2[c] - rho0[c]) / span + div[c] - nu * lap[c]).abs())
        .sum::<f64>()
        * dx;
    Ok(Residual {
        value,
        time: f.time,
        dt: span / 2.0,
        dx,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tree(p: &[usize]) -> LabeledTree {
        LabeledTree::from_parents(p).unwrap()
    }

    #[test]
    fn transforms_of_small_trees() {
        assert_eq!(tree_to_transform(&LabeledTree::root()).unwrap(), TransformExpr::Leaf);
        let t2 = tree_to_transform(&tree(&[1])).unwrap();
        assert_eq!(
            t2,
            TransformExpr::tensor(TransformExpr::Leaf, TransformExpr::star(TransformExpr::Leaf))
        );
        let a = tree_to_transform(&tree(&[1, 1])).unwrap();
        let b = tree_to_transform(&tree(&[1, 2])).unwrap();
        assert_ne!(a, b);
        assert_eq!((a.rank(), a.star_count()), (3, 2));
        assert_eq!((b.rank(), b.star_count()), (3, 2));
        assert!(tree_to_transform(&tree(&[1, 1, 1, 1])).is_err());
    }

    #[test]
    fn label_layout_permutation() {
        // preorder [1, 3, 2]: value at (c1, c3, c2) moves to (c1, c2, c3)
        let g = 2;
        let values: Vec<f64> = (0..8).map(|v| v as f64).collect();
        let out = to_label_layout(values, &[1, 3, 2], g);
        // preorder index (0, 1, 0) = 2 holds x3 = 1, x2 = 0 -> label (0, 0, 1) = 1
        assert_eq!(out[1], 2.0);
        assert_eq!(out[2], 1.0);
    }

    #[test]
    fn first_tree_density_is_one() {
        let w = SparseWeights::from_triplets(3, [(0, 1, 0.5), (2, 0, -1.0)]).unwrap();
        assert_eq!(tau_density(&LabeledTree::root(), &w), 1.0);
    }

    #[test]
    fn norm_scales_with_lambda() {
        let grid = Grid1D::new(0.0, 1.0, 8, Topology::Torus).unwrap();
        let f = FiberedDensity::from_fn(grid, 1, |_, _| 1.0).unwrap();
        let w = SparseWeights::empty(1).unwrap();
        let mut h = hierarchy(&w, &f, 1, 4.0).unwrap();
        assert!((hierarchy_norm(&h) - 2.0).abs() < 1e-14);
        h.entries.clear();
        assert_eq!(hierarchy_norm(&h), 0.0);
    }

    #[test]
    fn stencils_on_linear_profile() {
        let u: Vec<f64> = (0..8).map(|c| c as f64).collect();
        let d = d_axis(&u, 8, 1, 0, 1.0, false);
        assert_eq!(&d[1..7], &[1.0; 6]);
        let l = laplace_axis(&u, 8, 1, 0, 1.0, true);
        assert_eq!(&l[1..7], &[0.0; 6]);
    }
}
