#![allow(dead_code)]

use meanfield_core::pde::{FiberedDensity, Grid1D, Topology};
use meanfield_core::rng::{self, Purpose};
use meanfield_core::trees::LabeledTree;
use meanfield_core::SparseWeights;
use rand::Rng;

/// Random sparse weights with roughly `density * n^2` entries in [-1, 1] / n.
pub fn random_weights(n: usize, density: f64, seed: u64, case: u64) -> SparseWeights {
    let mut r = rng::stream(seed, Purpose::Corpus, case, 0);
    let mut t = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if r.random::<f64>() < density {
                t.push((i, j, (2.0 * r.random::<f64>() - 1.0) / n as f64));
            }
        }
    }
    SparseWeights::from_triplets(n, t).unwrap()
}

/// Mass-one fibers with random bumps.
pub fn random_fibers(grid: Grid1D, n: usize, seed: u64, case: u64) -> FiberedDensity {
    let mut r = rng::stream(seed, Purpose::Corpus, case, 1);
    let params: Vec<(f64, f64, f64)> = (0..n)
        .map(|_| {
            let span = grid.x_max - grid.x_min;
            (
                grid.x_min + span * (0.3 + 0.4 * r.random::<f64>()),
                span * (0.05 + 0.1 * r.random::<f64>()),
                0.1 + r.random::<f64>(),
            )
        })
        .collect();
    let mut noise: Vec<f64> = (0..n * grid.n_cells).map(|_| r.random::<f64>()).collect();
    let f = FiberedDensity::from_fn(grid, n, |i, x| {
        let (m, s, a) = params[i];
        a * (-(x - m) * (x - m) / (2.0 * s * s)).exp()
    })
    .unwrap();
    // add a little cellwise noise so that no structure is accidentally symmetric
    for (v, z) in noise.iter_mut().zip(f.values()) {
        *v = z + 0.01 * *v;
    }
    FiberedDensity::new(grid, n, noise).unwrap().normalized()
}

pub fn gaussian_fibers(grid: Grid1D, n: usize, mean: f64, std: f64) -> FiberedDensity {
    FiberedDensity::from_fn(grid, n, |_, x| (-(x - mean) * (x - mean) / (2.0 * std * std)).exp())
        .unwrap()
        .normalized()
}

pub fn line_grid(a: f64, b: f64, g: usize) -> Grid1D {
    Grid1D::new(a, b, g, Topology::Line).unwrap()
}

pub fn torus_grid(a: f64, b: f64, g: usize) -> Grid1D {
    Grid1D::new(a, b, g, Topology::Torus).unwrap()
}

/// `tau(T)` by summing over all `N^m` index tuples, at every lattice point.
pub fn brute_tau(t: &LabeledTree, w: &SparseWeights, f: &FiberedDensity) -> Vec<f64> {
    let n = w.n_agents();
    let m = t.order();
    let g = f.grid().n_cells;
    let dense = w.to_dense();
    let edges = t.edges();
    let lattice = g.pow(m as u32);
    let mut out = vec![0.0; lattice];
    let mut idx = vec![0usize; m];
    let tuples = n.pow(m as u32);
    for code in 0..tuples {
        let mut c = code;
        for k in (0..m).rev() {
            idx[k] = c % n;
            c /= n;
        }
        let weight: f64 = edges
            .iter()
            .map(|&(p, v)| dense[idx[p - 1] * n + idx[v - 1]])
            .product();
        if weight == 0.0 {
            continue;
        }
        for (x, o) in out.iter_mut().enumerate() {
            let mut rest = x;
            let mut prod = weight;
            for k in (0..m).rev() {
                let cell = rest % g;
                rest /= g;
                prod *= f.fiber(idx[k])[cell];
            }
            *o += prod;
        }
    }
    for o in &mut out {
        *o /= n as f64;
    }
    out
}

/// Homomorphism density by brute force over index tuples.
pub fn brute_density(t: &LabeledTree, w: &SparseWeights) -> f64 {
    let n = w.n_agents();
    let m = t.order();
    let dense = w.to_dense();
    let edges = t.edges();
    let mut total = 0.0;
    let mut idx = vec![0usize; m];
    for code in 0..n.pow(m as u32) {
        let mut c = code;
        for k in (0..m).rev() {
            idx[k] = c % n;
            c /= n;
        }
        total += edges
            .iter()
            .map(|&(p, v)| dense[idx[p - 1] * n + idx[v - 1]])
            .product::<f64>();
    }
    total / n as f64
}
