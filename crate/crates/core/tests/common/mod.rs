#![allow(dead_code)]

use std::sync::Arc;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use westervelt::grid::Grid;
use westervelt::model::PhysicalParams;

pub fn params(c: f64, beta: f64, gamma: f64) -> PhysicalParams {
    PhysicalParams::new(c, beta, gamma).expect("valid parameters")
}

pub fn line(n: usize) -> Arc<Grid> {
    Arc::new(Grid::interval(0.0, 1.0, n).expect("valid grid"))
}

pub fn square(n: usize) -> Arc<Grid> {
    Arc::new(Grid::rectangle((0.0, 1.0), (0.0, 1.0), n, n).expect("valid grid"))
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform(rng: &mut ChaCha8Rng, n: usize, half_width: f64) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-half_width..half_width)).collect()
}

pub fn sup(x: &[f64]) -> f64 {
    x.iter().fold(0.0, |m, v| m.max(v.abs()))
}

pub fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

/// Full `(u, v)` on `n` nodes of `[0, 1]` from `z = (u_0..u_{n-1}, v_1..v_{n-2})`,
/// with boundary velocities from `D_ν u + β D_ν v + c_r v = 0` and the
/// one-sided outward difference.
pub fn lift_1d(n: usize, r: f64, p: &PhysicalParams, z: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let h = 1.0 / (n - 1) as f64;
    let cr = (p.inv_c2() - 2.0 * p.gamma() * r).sqrt();
    let beta = p.beta();
    let u = z[..n].to_vec();
    let mut v = vec![0.0; n];
    v[1..n - 1].copy_from_slice(&z[n..]);
    let d = |f0: f64, f1: f64, f2: f64| (3.0 * f0 - 4.0 * f1 + f2) / (2.0 * h);
    let outward = 3.0 * beta / (2.0 * h) + cr;
    v[0] = -(d(u[0], u[1], u[2]) + beta * d(0.0, v[1], v[2])) / outward;
    v[n - 1] = -(d(u[n - 1], u[n - 2], u[n - 3]) + beta * d(0.0, v[n - 2], v[n - 3])) / outward;
    (u, v)
}

/// Linearization at `(r, 0)` written out by hand on the coordinates of
/// [`lift_1d`].
pub fn reduced_1d(n: usize, r: f64, p: &PhysicalParams) -> DMatrix<f64> {
    let h = 1.0 / (n - 1) as f64;
    let a = p.inv_c2() - 2.0 * p.gamma() * r;
    let beta = p.beta();
    let m = 2 * n - 2;
    let rhs = |z: &[f64]| -> Vec<f64> {
        let (u, v) = lift_1d(n, r, p, z);
        let lap = |f: &[f64], i: usize| (f[i - 1] - 2.0 * f[i] + f[i + 1]) / (h * h);
        let mut out = v.clone();
        for i in 1..n - 1 {
            out.push((lap(&u, i) + beta * lap(&v, i)) / a);
        }
        out
    };
    let mut mat = DMatrix::zeros(m, m);
    let mut e = vec![0.0; m];
    for j in 0..m {
        e[j] = 1.0;
        for (i, x) in rhs(&e).into_iter().enumerate() {
            mat[(i, j)] = x;
        }
        e[j] = 0.0;
    }
    mat
}
