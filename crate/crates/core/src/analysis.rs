//! Linearization `A_0` at an equilibrium `(r, 0)` and its spectral data.
//!
//! `A_0 (u, v) = (v, c_r^-2 (Δu + beta Δv))` acting on pairs that satisfy
//! `∂_ν u + beta ∂_ν v + c_r v = 0` on the boundary. Discretely the boundary
//! condition replaces the boundary `v`-rows, so the matrix is a
//! differential-algebraic pencil. For eigenvalues the boundary `v` unknowns
//! are eliminated through those rows, leaving a standard problem on
//! `(u, v_interior)`.
//!
//! The range of `A_0` is the kernel of `(g, h) ↦ c_r ∫h + ∫_∂Ω g`, and
//! `P(g, h) = (k, 0)` with `k` that functional divided by `|∂Ω|` projects
//! onto the kernel (the constants) along the range.

use std::sync::{Arc, OnceLock};

use nalgebra::{Complex, DMatrix, DVector, SVD};

use crate::error::{Error, Result};
use crate::grid::{dot, Grid};
use crate::model::{Equilibrium, PhysicalParams};
use crate::operator::DiscreteOperator;

/// Eigenvalues with `|λ| < ZERO_CLUSTER_REL · ‖A‖_∞` count as zero.
pub const ZERO_CLUSTER_REL: f64 = 1e-10;
/// Singular values below `RANK_REL · σ_max` count as zero.
pub const RANK_REL: f64 = 1e-10;
/// Relative least-squares residual below which `A_0 w = f` is solvable.
pub const TOL_RANGE: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct LinearizedOperator {
    equilibrium: Equilibrium,
    cr: f64,
    params: PhysicalParams,
    grid: Arc<Grid>,
    matrix: DiscreteOperator,
    reduced: OnceLock<Reduction>,
    full_svd: OnceLock<SVD<f64, nalgebra::Dyn, nalgebra::Dyn>>,
}

/// Elimination of the boundary `v` unknowns.
#[derive(Debug, Clone)]
struct Reduction {
    /// `w = lift · z`, `z = (u, v_interior)`
    lift: DMatrix<f64>,
    matrix: DMatrix<f64>,
}

pub fn assemble_a0(r: f64, grid: impl Into<Arc<Grid>>, params: &PhysicalParams) -> Result<LinearizedOperator> {
    let grid = grid.into();
    let equilibrium = Equilibrium::new(r, params).map_err(|_| Error::Degeneracy {
        node: None,
        t: None,
        coefficient: params.raw_coefficient(r),
        floor: 0.0,
    })?;
    let cr = params.cr(r)?;
    let n = grid.node_count();
    let beta = params.beta();
    let s = 1.0 / (cr * cr);
    let mut m = DiscreteOperator::zeros(2 * n, 2 * n);
    for k in 0..n {
        m.push(k, n + k, 1.0);
    }
    for row in grid.laplacian().rows() {
        m.push_stencil_row(n + row.node, 0, row, s);
        m.push_stencil_row(n + row.node, n, row, s * beta);
    }
    for row in grid.normal_derivative().rows() {
        m.push_stencil_row(n + row.node, 0, row, 1.0);
        m.push_stencil_row(n + row.node, n, row, beta);
        m.push(n + row.node, n + row.node, cr);
    }
    Ok(LinearizedOperator {
        equilibrium,
        cr,
        params: *params,
        grid,
        matrix: m,
        reduced: OnceLock::new(),
        full_svd: OnceLock::new(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    /// Sorted by real part descending, ties by imaginary part ascending.
    pub eigenvalues: Vec<Complex<f64>>,
    /// `‖A‖_∞` of the reduced matrix.
    pub norm: f64,
}

impl Spectrum {
    pub fn zero_tolerance(&self) -> f64 {
        ZERO_CLUSTER_REL * self.norm
    }

    pub fn is_zero(&self, z: &Complex<f64>) -> bool {
        z.norm() < self.zero_tolerance()
    }

    pub fn zero_cluster(&self) -> usize {
        self.eigenvalues.iter().filter(|z| self.is_zero(z)).count()
    }

    /// Largest real part outside the zero cluster.
    pub fn max_nonzero_re(&self) -> Option<f64> {
        self.eigenvalues
            .iter()
            .filter(|z| !self.is_zero(z))
            .map(|z| z.re)
            .reduce(f64::max)
    }

    /// `-max Re λ` over the nonzero spectrum.
    pub fn gap(&self) -> Option<f64> {
        self.max_nonzero_re().map(|m| -m)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KernelReport {
    pub kernel_dim: usize,
    pub zero_algebraic_multiplicity: usize,
    pub semisimple: bool,
    /// Relative least-squares residual of `A_0 w = (1, 0)`.
    pub jordan_probe_residual: f64,
    /// Distance (up to sign) of the recovered kernel vector from `(1, 0)/‖·‖`.
    pub kernel_vector_error: f64,
    pub singular_values_tail: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RangeSplit {
    pub k: f64,
    /// `P(g, h) = (k, 0)`
    pub kernel_part: (Vec<f64>, Vec<f64>),
    /// `(I - P)(g, h) = (g - k, h)`
    pub range_part: (Vec<f64>, Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RangeTest {
    pub solvable: bool,
    pub residual: f64,
    /// `c_r ∫h + ∫_∂Ω g`
    pub functional: f64,
    /// Scale for judging the functional: `c_r ∫|h| + ∫_∂Ω |g|`.
    pub scale: f64,
    pub solution: Vec<f64>,
}

impl LinearizedOperator {
    pub fn r(&self) -> f64 {
        self.equilibrium.r()
    }

    pub fn cr(&self) -> f64 {
        self.cr
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn params(&self) -> &PhysicalParams {
        &self.params
    }

    pub fn matrix(&self) -> &DiscreteOperator {
        &self.matrix
    }

    pub fn apply(&self, w: &[f64]) -> Vec<f64> {
        self.matrix.apply(w)
    }

    fn reduction(&self) -> Result<&Reduction> {
        if let Some(r) = self.reduced.get() {
            return Ok(r);
        }
        let red = self.build_reduction()?;
        Ok(self.reduced.get_or_init(|| red))
    }

    fn build_reduction(&self) -> Result<Reduction> {
        let n = self.grid.node_count();
        let interior = self.grid.interior();
        let boundary: Vec<usize> = self.grid.boundary().iter().map(|b| b.node).collect();
        let dense = self.matrix.to_dense();
        let m = n + interior.len();

        // z = (u_0..u_{n-1}, v_i for i in interior)
        let mut z_of_v = vec![None; n];
        for (j, &i) in interior.iter().enumerate() {
            z_of_v[i] = Some(n + j);
        }
        let mut bslot = vec![None; n];
        for (j, &b) in boundary.iter().enumerate() {
            bslot[b] = Some(j);
        }

        // boundary rows: C_bb v_b = -(C_u u + C_bi v_i)
        let nb = boundary.len();
        let mut cbb = DMatrix::zeros(nb, nb);
        let mut rhs = DMatrix::zeros(nb, m);
        for (bi, &b) in boundary.iter().enumerate() {
            let row = n + b;
            for col in 0..2 * n {
                let a = dense[(row, col)];
                if a == 0.0 {
                    continue;
                }
                if col < n {
                    rhs[(bi, col)] -= a;
                } else if let Some(bj) = bslot[col - n] {
                    cbb[(bi, bj)] += a;
                } else if let Some(zj) = z_of_v[col - n] {
                    rhs[(bi, zj)] -= a;
                }
            }
        }
        let vb = cbb
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::EigensolverFailure("boundary constraint block is singular".into()))?;

        let mut lift = DMatrix::zeros(2 * n, m);
        for k in 0..n {
            lift[(k, k)] = 1.0;
        }
        for (j, &i) in interior.iter().enumerate() {
            lift[(n + i, n + j)] = 1.0;
        }
        for (bi, &b) in boundary.iter().enumerate() {
            lift.row_mut(n + b).copy_from(&vb.row(bi));
        }

        let applied = &dense * &lift;
        let mut matrix = DMatrix::zeros(m, m);
        for k in 0..n {
            matrix.row_mut(k).copy_from(&applied.row(k));
        }
        for (j, &i) in interior.iter().enumerate() {
            matrix.row_mut(n + j).copy_from(&applied.row(n + i));
        }
        Ok(Reduction { lift, matrix })
    }

    /// The standard-form matrix on `(u, v_interior)`.
    pub fn reduced_matrix(&self) -> Result<DMatrix<f64>> {
        Ok(self.reduction()?.matrix.clone())
    }

    /// Maps reduced coordinates to the full stacked `(u, v)`.
    pub fn lift(&self, z: &[f64]) -> Result<Vec<f64>> {
        let red = self.reduction()?;
        Ok((&red.lift * DVector::from_column_slice(z)).as_slice().to_vec())
    }

    pub fn spectrum(&self) -> Result<Spectrum> {
        let red = self.reduction()?;
        let norm = red
            .matrix
            .row_iter()
            .map(|r| r.iter().map(|x| x.abs()).sum::<f64>())
            .fold(0.0, f64::max);
        let schur = red
            .matrix
            .clone()
            .try_schur(1e-14 * norm.max(1.0), 100_000)
            .ok_or_else(|| Error::EigensolverFailure("Schur iteration did not converge".into()))?;
        let mut eigenvalues: Vec<Complex<f64>> = schur.complex_eigenvalues().iter().copied().collect();
        if eigenvalues.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::EigensolverFailure("non-finite eigenvalue".into()));
        }
        // QR leaves an absolute error of order eps·‖A‖·κ; small real
        // eigenvalues get a two-sided Rayleigh quotient refinement.
        for z in eigenvalues.iter_mut() {
            if z.im == 0.0 && z.re.abs() < REFINE_REL * norm {
                if let Some(re) = refine_real_eigenvalue(&red.matrix, z.re) {
                    if (re - z.re).abs() < REFINE_REL * norm {
                        z.re = re;
                    }
                }
            }
        }
        sort_spectrum(&mut eigenvalues);
        Ok(Spectrum { eigenvalues, norm })
    }

    fn svd(&self) -> &SVD<f64, nalgebra::Dyn, nalgebra::Dyn> {
        self.full_svd
            .get_or_init(|| SVD::new(self.matrix.to_dense(), true, true))
    }

    fn least_squares(&self, f: &[f64]) -> Result<(Vec<f64>, f64)> {
        let svd = self.svd();
        let smax = svd.singular_values.max();
        let b = DVector::from_column_slice(f);
        let w = svd
            .solve(&b, RANK_REL * smax)
            .map_err(|e| Error::EigensolverFailure(e.to_string()))?;
        let res = self.matrix.to_dense() * &w - &b;
        let fnorm = b.norm();
        let rel = if fnorm > 0.0 { res.norm() / fnorm } else { res.norm() };
        Ok((w.as_slice().to_vec(), rel))
    }

    /// Kernel dimension, multiplicity of the zero eigenvalue and the Jordan
    /// chain probe `A_0 w = (1, 0)`.
    pub fn kernel_and_semisimplicity(&self) -> Result<KernelReport> {
        let red = self.reduction()?;
        let n = self.grid.node_count();
        let svd = SVD::new(red.matrix.clone(), false, true);
        let sv = &svd.singular_values;
        let smax = sv.max();
        let tol = RANK_REL * smax;
        if let Some(&s) = sv.iter().find(|&&s| s > tol / 10.0 && s < tol * 10.0) {
            return Err(Error::RankToleranceAmbiguous {
                sigma: s,
                tolerance: tol,
            });
        }
        let kernel_dim = sv.iter().filter(|&&s| s < tol).count();

        let (imin, _) = sv
            .iter()
            .enumerate()
            .fold((0, f64::INFINITY), |acc, (i, &s)| if s < acc.1 { (i, s) } else { acc });
        let v_t = svd.v_t.as_ref().expect("requested right singular vectors");
        let z: Vec<f64> = v_t.row(imin).iter().copied().collect();
        let w = self.lift(&z)?;
        let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        let e = 1.0 / (n as f64).sqrt();
        let (mut plus, mut minus) = (0.0_f64, 0.0_f64);
        for (k, wk) in w.iter().enumerate() {
            let target = if k < n { e } else { 0.0 };
            plus += (wk / norm - target).powi(2);
            minus += (wk / norm + target).powi(2);
        }
        let kernel_vector_error = plus.min(minus).sqrt();

        let spectrum = self.spectrum()?;
        let zero_algebraic_multiplicity = spectrum.zero_cluster();

        let mut f = vec![0.0; 2 * n];
        f[..n].fill(1.0);
        let (_, jordan_probe_residual) = self.least_squares(&f)?;

        let mut tail: Vec<f64> = sv.iter().copied().collect();
        tail.sort_by(|a, b| a.total_cmp(b));
        tail.truncate(3);
        Ok(KernelReport {
            kernel_dim,
            zero_algebraic_multiplicity,
            semisimple: kernel_dim == zero_algebraic_multiplicity,
            jordan_probe_residual,
            kernel_vector_error,
            singular_values_tail: tail,
        })
    }

    fn check_fields(&self, g: &[f64], h: &[f64]) -> Result<()> {
        let n = self.grid.node_count();
        for len in [g.len(), h.len()] {
            if len != n {
                return Err(Error::LengthMismatch { expected: n, got: len });
            }
        }
        Ok(())
    }

    /// `c_r ∫h + ∫_∂Ω g`, which vanishes exactly on the range of `A_0`.
    pub fn range_functional(&self, g: &[f64], h: &[f64]) -> Result<f64> {
        self.check_fields(g, h)?;
        Ok(self.cr * self.grid.interior_integral(h)? + self.grid.boundary_integral(g)?)
    }

    pub fn range_projection(&self, g: &[f64], h: &[f64]) -> Result<RangeSplit> {
        let k = self.range_functional(g, h)? / self.grid.boundary_measure();
        let n = g.len();
        Ok(RangeSplit {
            k,
            kernel_part: (vec![k; n], vec![0.0; n]),
            range_part: (g.iter().map(|x| x - k).collect(), h.to_vec()),
        })
    }

    /// Least-squares solve of `A_0 w = (g, h)`; boundary `v`-rows carry the
    /// homogeneous constraint so `h` is not used there.
    pub fn range_solvability_test(&self, g: &[f64], h: &[f64]) -> Result<RangeTest> {
        let functional = self.range_functional(g, h)?;
        let n = self.grid.node_count();
        let mut f = vec![0.0; 2 * n];
        f[..n].copy_from_slice(g);
        for &i in self.grid.interior() {
            f[n + i] = h[i];
        }
        let (solution, residual) = self.least_squares(&f)?;
        let abs_g: Vec<f64> = g.iter().map(|x| x.abs()).collect();
        let abs_h: Vec<f64> = h.iter().map(|x| x.abs()).collect();
        let scale = self.cr * dot(&self.grid.interior_weights(), &abs_h) + dot(&self.grid.boundary_weights(), &abs_g);
        Ok(RangeTest {
            solvable: residual < TOL_RANGE,
            residual,
            functional,
            scale,
            solution,
        })
    }
}

/// Real eigenvalues below `REFINE_REL · ‖A‖_∞` in magnitude are refined.
const REFINE_REL: f64 = 1e-6;

/// Inverse iteration for right and left eigenvectors at the shift `shift`,
/// followed by the two-sided Rayleigh quotient `yᵀAx / yᵀx`.
fn refine_real_eigenvalue(a: &DMatrix<f64>, shift: f64) -> Option<f64> {
    let n = a.nrows();
    let shifted = a - DMatrix::identity(n, n) * shift;
    let lu = shifted.clone().lu();
    let lu_t = shifted.transpose().lu();
    let start = DVector::from_fn(n, |i, _| 1.0 + 0.1 * ((i * 7919 % 13) as f64));
    let (mut x, mut y) = (start.clone(), start);
    for _ in 0..3 {
        x = lu.solve(&x)?;
        y = lu_t.solve(&y)?;
        let (nx, ny) = (x.norm(), y.norm());
        if !(nx.is_finite() && ny.is_finite() && nx > 0.0 && ny > 0.0) {
            return None;
        }
        x /= nx;
        y /= ny;
    }
    let denom = y.dot(&x);
    if denom.abs() < 1e-8 {
        return None;
    }
    let lambda = y.dot(&(a * &x)) / denom;
    lambda.is_finite().then_some(lambda)
}

pub fn sort_spectrum(eigs: &mut [Complex<f64>]) {
    eigs.sort_by(|a, b| b.re.total_cmp(&a.re).then(a.im.total_cmp(&b.im)));
}
