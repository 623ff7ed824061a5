mod common;

use common::*;
use nalgebra::{DMatrix, DVector};
use westervelt::analysis::assemble_a0;
use westervelt::experiments::{mms_convergence_study, MmsStudy};
use westervelt::model::{PhysicalParams, State};
use westervelt::stepper::{Problem, Scheme, StepperConfig};

/// One backward-Euler step of the linear problem, assembled densely.
fn dense_backward_euler(n: usize, p: &PhysicalParams, old: &State, dt: f64) -> Vec<f64> {
    let h = 1.0 / (n - 1) as f64;
    let (a, beta) = (p.inv_c2(), p.beta());
    let mut m = DMatrix::zeros(2 * n, 2 * n);
    let mut b = DVector::zeros(2 * n);
    for i in 0..n {
        m[(i, i)] = 1.0;
        m[(i, n + i)] = -dt;
        b[i] = old.u[i];
    }
    for i in 1..n - 1 {
        let row = n + i;
        m[(row, n + i)] = a;
        for (j, w) in [(i - 1, 1.0), (i, -2.0), (i + 1, 1.0)] {
            m[(row, j)] -= dt * w / (h * h);
            m[(row, n + j)] -= dt * beta * w / (h * h);
        }
        b[row] = a * old.v[i];
    }
    for (node, inward) in [(0usize, 1isize), (n - 1, -1)] {
        let row = n + node;
        for (k, w) in [(0isize, 1.5), (1, -2.0), (2, 0.5)] {
            let j = (node as isize + k * inward) as usize;
            m[(row, j)] += w / h;
            m[(row, n + j)] += beta * w / h;
        }
        m[(row, n + node)] += a.sqrt();
    }
    m.lu().solve(&b).expect("nonsingular").as_slice().to_vec()
}

#[test]
fn linear_backward_euler_step_matches_dense_solve() {
    let p = PhysicalParams::linear(1.3, 0.7).unwrap();
    let n = 17;
    let mut rng = rng(11);
    for _ in 0..5 {
        let old = State {
            u: uniform(&mut rng, n, 1.0),
            v: uniform(&mut rng, n, 1.0),
            t: 0.0,
        };
        let cfg = StepperConfig::new(0.05, Scheme::BackwardEuler).unwrap();
        let (new, _) = Problem::new(p, line(n)).step(&old, 0.05, &cfg).unwrap();
        let oracle = dense_backward_euler(n, &p, &old, 0.05);
        let err = sup_diff(&new.stacked(), &oracle);
        assert!(err < 1e-12 * (1.0 + sup(&oracle)), "step differs by {err:e}");
    }
}

#[test]
fn linear_run_follows_matrix_exponential() {
    let p = PhysicalParams::linear(1.0, 0.5).unwrap();
    let n = 17;
    let m = reduced_1d(n, 0.0, &p);
    let x: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
    let mut z: Vec<f64> = x.iter().map(|x| 0.1 * (-(x - 0.4).powi(2) / 0.02).exp()).collect();
    z.extend(x[1..n - 1].iter().map(|x| 0.2 * (3.0 * x).sin()));
    let (u, v) = lift_1d(n, 0.0, &p, &z);
    let t = 0.5;
    let exact = (m * t).exp() * DVector::from_column_slice(&z);

    let cfg = StepperConfig::new(5e-4, Scheme::TrBdf2).unwrap();
    let report = Problem::new(p, line(n)).simulate(&State { u, v, t: 0.0 }, t, &cfg, &mut []);
    let fin = report.final_state.unwrap();
    let err = sup_diff(&fin.u, &exact.as_slice()[..n]).max(sup_diff(&fin.v[1..n - 1], &exact.as_slice()[n..]));
    assert!(err < 1e-6, "deviation from exp(tA) is {err:e}");
}

#[test]
fn eigenvalues_reproduce_trace_invariants() {
    let p = params(1.0, 1.0, 0.5);
    for (grid, r) in [(line(24), 0.3), (square(7), -0.4)] {
        let op = assemble_a0(r, grid, &p).unwrap();
        let a = op.reduced_matrix().unwrap();
        let spec = op.spectrum().unwrap();
        let sum: f64 = spec.eigenvalues.iter().map(|z| z.re).sum();
        let imag: f64 = spec.eigenvalues.iter().map(|z| z.im).sum();
        let squares: f64 = spec.eigenvalues.iter().map(|z| (z * z).re).sum();
        let tr2 = (&a * &a).trace();
        assert!(
            (sum - a.trace()).abs() < 1e-9 * a.trace().abs(),
            "{sum} vs {}",
            a.trace()
        );
        assert!(imag.abs() < 1e-9 * spec.norm);
        assert!((squares - tr2).abs() < 1e-9 * tr2.abs(), "{squares} vs {tr2}");
    }
}

#[test]
fn reduced_matrix_matches_hand_built_linearization() {
    let p = params(1.2, 0.8, 0.4);
    for n in [5, 16] {
        let r = -0.3 * p.threshold();
        let lib = assemble_a0(r, line(n), &p).unwrap().reduced_matrix().unwrap();
        let oracle = reduced_1d(n, r, &p);
        let err = (&lib - &oracle).amax() / oracle.amax();
        assert!(err < 1e-13, "n = {n}: {err:e}");
    }
}

#[test]
fn linear_energy_never_increases() {
    let p = PhysicalParams::linear(1.0, 0.2).unwrap();
    for grid in [line(33), square(9)] {
        let mut rng = rng(5);
        let nodes = grid.node_count();
        let start = State {
            u: uniform(&mut rng, nodes, 0.5),
            v: uniform(&mut rng, nodes, 0.5),
            t: 0.0,
        };
        let problem = Problem::new(p, grid.clone());
        let cfg = StepperConfig::new(0.01, Scheme::BackwardEuler).unwrap();
        let (start, _) = problem.step(&start, 0.01, &cfg).unwrap();
        let report = problem.simulate(&start, 2.0, &cfg, &mut []);
        assert!(report.is_completed());
        for w in report.series.windows(2) {
            assert!(
                w[1].energy <= w[0].energy * (1.0 + 1e-12),
                "energy rose from {} to {} at t = {}",
                w[0].energy,
                w[1].energy,
                w[1].t
            );
        }
    }
}

#[test]
fn unit_damping_rate_hides_spatial_error() {
    let study = MmsStudy {
        params: params(1.0, 1.0, 0.5),
        dim: 1,
        eps: 0.01,
        rate: 1.0,
        t_end: 0.5,
        scheme: Scheme::TrBdf2,
        resolutions: vec![17, 33, 65],
        dt: 1e-3,
        dts: vec![],
        temporal_n: 9,
    };
    let orders = mms_convergence_study(&study).unwrap();
    for o in &orders.spatial_orders {
        assert!(o.abs() < 0.2, "spatial errors {:?}", orders.spatial_errors);
    }
}
