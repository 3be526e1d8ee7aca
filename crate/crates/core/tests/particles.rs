mod common;

use common::*;
use meanfield_core::kernel::Kernel;
use meanfield_core::particles::*;
use meanfield_core::pde::FiberedDensity;
use meanfield_core::rng::{self, Purpose};
use meanfield_core::{Error, SparseWeights};
use proptest::prelude::*;
use rand::Rng;

fn state(p: &[f64]) -> ParticleState {
    ParticleState::new(p.to_vec(), 1).unwrap()
}

fn dense_drift(w: &SparseWeights, k: &Kernel, x: &ParticleState) -> Vec<f64> {
    let n = x.n_agents();
    let d = x.dim();
    let dense = w.to_dense();
    let mut out = vec![0.0; n * d];
    let mut diff = vec![0.0; d];
    let mut kv = vec![0.0; d];
    for i in 0..n {
        for j in 0..n {
            let wij = dense[i * n + j];
            if wij == 0.0 {
                continue;
            }
            for c in 0..d {
                diff[c] = k.domain.wrap_diff(x.position(i)[c] - x.position(j)[c]);
            }
            k.eval(&diff, &mut kv);
            for c in 0..d {
                out[i * d + c] += wij * kv[c];
            }
        }
    }
    out
}

#[test]
fn class_permutation_drift_matches_dense_loop() {
    let w = SparseWeights::class_permutation(4, 2, &[0, 1]).unwrap();
    let k = Kernel::linear(1, 1.0);
    let x = state(&[0.0, 1.0, 2.0, 3.0]);
    assert_eq!(drift(&w, &k, &x).unwrap(), dense_drift(&w, &k, &x));
}

#[test]
fn coincident_agents_do_not_move() {
    let w = random_weights(10, 0.5, 1, 0);
    for k in [Kernel::linear_attraction(1, 1.0), Kernel::kuramoto(2.0), Kernel::linear(1, 3.0)] {
        let x = state(&[0.4; 10]);
        assert!(drift(&w, &k, &x).unwrap().iter().all(|v| *v == 0.0));
        let y = step_deterministic(&w, &Dynamics::new(k), &x, 0.01, Method::Rk4).unwrap();
        assert_eq!(y.positions(), x.positions());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]
    #[test]
    fn sparse_drift_equals_dense_drift(n in 2usize..256, density in 0.01f64..1.0, seed in 0u64..1000, dim in 1usize..4) {
        let w = random_weights(n, density, seed, 0);
        let mut r = rng::stream(seed, Purpose::Corpus, 1, 0);
        let pos: Vec<f64> = (0..n * dim).map(|_| 4.0 * r.random::<f64>() - 2.0).collect();
        let x = ParticleState::new(pos, dim).unwrap();
        let k = Kernel::linear_attraction(dim, 1.3);
        let a = drift(&w, &k, &x).unwrap();
        let b = dense_drift(&w, &k, &x);
        let scale = b.iter().fold(1e-300f64, |m, v| m.max(v.abs()));
        for (p, q) in a.iter().zip(&b) {
            prop_assert!((p - q).abs() <= 1e-12 * scale);
        }
    }

    #[test]
    fn relabeling_commutes_with_stepping(n in 2usize..40, seed in 0u64..1000) {
        let w = SparseWeights::uniform(n, 1.0, false).unwrap();
        let dynamics = Dynamics::linear_attraction(1.0).with_sum_order(SumOrder::Canonical);
        let mut r = rng::stream(seed, Purpose::Corpus, 2, 0);
        let x = ParticleState::new((0..n).map(|_| r.random::<f64>() * 3.0).collect(), 1).unwrap();
        let mut perm: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            perm.swap(i, r.random_range(0..=i));
        }
        let mut a = x.clone();
        let mut b = x.permuted(&perm).unwrap();
        for _ in 0..5 {
            a = step_deterministic(&w, &dynamics, &a, 0.05, Method::Rk4).unwrap();
            b = step_deterministic(&w, &dynamics, &b, 0.05, Method::Rk4).unwrap();
        }
        let a = a.permuted(&perm).unwrap();
        prop_assert_eq!(a.positions(), b.positions());
    }
}

/// Two agents with uniform weights `w_bar / 2` and `K(x) = -x`: the gap
/// `x_0 - x_1` decays like `exp(-w_bar t)`, the mean is fixed.
fn linear_pair_exact(x0: [f64; 2], w_bar: f64, t: f64) -> [f64; 2] {
    let mean = 0.5 * (x0[0] + x0[1]);
    let half = 0.5 * (x0[0] - x0[1]) * (-w_bar * t).exp();
    [mean + half, mean - half]
}

#[test]
fn rk4_is_fourth_order_on_the_linear_pair() {
    let w_bar = 1.5;
    let w = SparseWeights::uniform(2, w_bar, false).unwrap();
    let dynamics = Dynamics::new(Kernel::linear(1, 1.0));
    let x0 = [1.0, -0.5];
    let error = |dt: f64| {
        let steps = (1.0 / dt).round() as usize;
        let mut x = state(&x0);
        for _ in 0..steps {
            x = step_deterministic(&w, &dynamics, &x, dt, Method::Rk4).unwrap();
        }
        let exact = linear_pair_exact(x0, w_bar, 1.0);
        (x.positions()[0] - exact[0]).abs().max((x.positions()[1] - exact[1]).abs())
    };
    let (e1, e2) = (error(0.1), error(0.05));
    assert!(e1 / e2 >= 8.0, "{e1} / {e2}");
    // single step local error is O(dt^5)
    let local = |dt: f64| {
        let one = step_deterministic(&w, &dynamics, &state(&x0), dt, Method::Rk4).unwrap();
        (one.positions()[0] - linear_pair_exact(x0, w_bar, dt)[0]).abs()
    };
    let z: f64 = w_bar * 0.1;
    assert!(local(0.1) <= 1.1 * z.powi(5) / 120.0 * 0.75);
    assert!(local(0.1) / local(0.05) >= 24.0);
}

#[test]
fn noiseless_stochastic_step_is_euler() {
    let w = random_weights(12, 0.5, 4, 0);
    let d = Dynamics::linear_attraction(1.0);
    let mut r = rng::stream(4, Purpose::Corpus, 0, 0);
    let x = state(&(0..12).map(|_| r.random::<f64>()).collect::<Vec<_>>());
    let a = step_stochastic(&w, &d, &x, 0.01, 0.0, 99).unwrap();
    let b = step_deterministic(&w, &d, &x, 0.01, Method::Euler).unwrap();
    assert_eq!(a, b);
}

#[test]
fn noise_increments_have_variance_dt() {
    let n = 100_000;
    let w = SparseWeights::empty(n).unwrap();
    let d = Dynamics::new(Kernel::linear(1, 0.0));
    let x = state(&vec![0.0; n]);
    let dt = 0.04;
    let y = step_stochastic(&w, &d, &x, dt, 1.0, 7).unwrap();
    let mean = y.positions().iter().sum::<f64>() / n as f64;
    let var = y.positions().iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n as f64 - 1.0);
    // standard error of a sample variance of gaussians: dt sqrt(2/(n-1))
    let se = dt * (2.0 / (n as f64 - 1.0)).sqrt();
    assert!((var - dt).abs() <= 3.0 * se, "{var}");
}

#[test]
fn seeded_runs_repeat_bit_for_bit() {
    let w = random_weights(30, 0.3, 5, 0);
    let d = Dynamics::linear_attraction(1.0);
    let x0 = state(&(0..30).map(|i| i as f64 * 0.1).collect::<Vec<_>>());
    let spec = RunSpec { dt: 0.01, method: Method::Euler, sigma: 0.3, seed: 11 };
    let a = run(&w, &d, &x0, &spec, &[0.5, 1.0]).unwrap();
    let b = run(&w, &d, &x0, &spec, &[0.5, 1.0]).unwrap();
    assert_eq!(a, b);
    let c = run(&w, &d, &x0, &RunSpec { seed: 12, ..spec }, &[0.5, 1.0]).unwrap();
    assert_ne!(a, c);
}

#[test]
fn run_lands_on_output_times() {
    let w = SparseWeights::uniform(3, 1.0, false).unwrap();
    let d = Dynamics::linear_attraction(1.0);
    let x0 = state(&[0.0, 0.5, 1.0]);
    let spec = RunSpec { dt: 0.03, method: Method::Rk4, sigma: 0.0, seed: 0 };
    let out = run(&w, &d, &x0, &spec, &[0.0, 0.1, 0.25]).unwrap();
    assert_eq!(out.iter().map(|s| s.time).collect::<Vec<_>>(), vec![0.0, 0.1, 0.25]);
    assert_eq!(out[0].positions(), x0.positions());
}

#[test]
fn mckean_drift_against_a_point_mass() {
    let grid = line_grid(-2.0, 2.0, 16);
    let w = random_weights(3, 1.0, 6, 0);
    let k = Kernel::linear_attraction(1, 1.0);
    let hot = 11;
    let dx = grid.dx();
    let laws = FiberedDensity::from_fn(grid, 3, |_, x| {
        if grid.cell_of(x) == Some(hot) { 1.0 / dx } else { 0.0 }
    })
    .unwrap();
    let x = state(&[-0.3, 0.2, 1.1]);
    let got = mckean_drift(&w, &k, &x, &laws).unwrap();
    for i in 0..3 {
        let row_sum: f64 = w.row(i).map(|(_, v)| v).sum();
        let expect = row_sum * k.eval1(x.positions()[i] - grid.center(hot));
        assert!((got[i] - expect).abs() < 1e-14);
    }
}

#[test]
fn mckean_drift_vanishes_for_symmetric_laws() {
    let grid = line_grid(-2.0, 2.0, 32);
    let laws = gaussian_fibers(grid, 2, 0.0, 0.5);
    let w = SparseWeights::uniform(2, 1.0, true).unwrap();
    let x = state(&[0.0, 0.0]);
    let d = mckean_drift(&w, &Kernel::linear_attraction(1, 1.0), &x, &laws).unwrap();
    assert!(d.iter().all(|v| v.abs() < 1e-15));
}

#[test]
fn mckean_drift_linear_moment_identity() {
    let grid = line_grid(-5.0, 5.0, 200);
    let w_bar = 1.2;
    let w = SparseWeights::uniform(2, w_bar, false).unwrap();
    let laws = gaussian_fibers(grid, 2, 0.7, 0.4);
    let mean: f64 = laws.fiber(0).iter().zip(grid.centers()).map(|(v, x)| v * x).sum::<f64>() * grid.dx();
    let x = state(&[-0.5, 1.5]);
    let d = mckean_drift(&w, &Kernel::linear(1, 1.0), &x, &laws).unwrap();
    // each agent has one neighbour with weight w_bar / 2
    for i in 0..2 {
        let expect = -(w_bar / 2.0) * (x.positions()[i] - mean);
        assert!((d[i] - expect).abs() < 1e-12);
    }
    let bad = ParticleState::new(vec![0.0; 4], 2).unwrap();
    assert!(mckean_drift(&w, &Kernel::linear(2, 1.0), &bad, &laws).is_err());
    let y = step_mckean(&w, &Dynamics::new(Kernel::linear(1, 1.0)), &x, &laws, 0.01, 0.0, 0).unwrap();
    assert!((y.positions()[0] - (x.positions()[0] + 0.01 * d[0])).abs() < 1e-15);
}

#[test]
fn empirical_measure_has_unit_mass() {
    let e = empirical(&state(&[2.0]));
    assert_eq!((e.n_atoms(), e.total_mass()), (1, 1.0));
    let e = empirical(&state(&[1.0, 1.0, 3.0]));
    assert!((e.total_mass() - 1.0).abs() < 1e-15);
}

#[test]
fn dimension_and_guard_errors() {
    let w = SparseWeights::uniform(3, 1.0, false).unwrap();
    let x = ParticleState::new(vec![0.0; 6], 2).unwrap();
    assert!(matches!(
        drift(&w, &Kernel::linear(1, 1.0), &x),
        Err(Error::DimensionMismatch { .. })
    ));
    let e = step_deterministic(&w, &Dynamics::new(Kernel::linear(2, 10.0)), &x, 0.1, Method::Rk4).unwrap_err();
    assert!(e.is_numeric_guard());
}

#[test]
fn neurons_fire_and_stay_bounded() {
    let mut p = HhParams::squid_axon();
    p.i_ext = 10.0;
    let d = Dynamics::hodgkin_huxley(p).unwrap();
    let n = 4;
    let w = SparseWeights::uniform(n, 0.5, false).unwrap();
    let mut s = Vec::new();
    for i in 0..n {
        s.extend_from_slice(&[i as f64, 0.32, 0.05, 0.6]);
    }
    let x0 = ParticleState::new(s, 4).unwrap();
    let spec = RunSpec { dt: 0.01, method: Method::Rk4, sigma: 0.0, seed: 0 };
    let times: Vec<f64> = (1..=300).map(|k| k as f64 * 0.1).collect();
    let out = run(&w, &d, &x0, &spec, &times).unwrap();
    let peak = out.iter().map(|s| s.position(0)[0]).fold(f64::MIN, f64::max);
    assert!(peak > 80.0, "no spike, peak {peak}");
    for st in &out {
        for i in 0..n {
            let v = st.position(i);
            assert!(v[0] > -30.0 && v[0] < 130.0);
            assert!(v[1..].iter().all(|g| (-1e-9..=1.0 + 1e-9).contains(g)));
        }
    }
    assert!(Dynamics::hodgkin_huxley(HhParams { capacitance: 0.0, ..p }).is_err());
}
