//! Implicit time stepping of the first-order system
//!
//! ```text
//! u_t = v                                        (all nodes)
//! (c^-2 - 2 gamma u) v_t = Δu + beta Δv + 2 gamma v^2 + f     (interior)
//! 0 = ∂_ν(u + beta v) + v sqrt(c^-2 - 2 gamma u) - g          (boundary)
//! ```
//!
//! Every implicit stage has the same algebraic shape
//!
//! ```text
//! (u - U)/τ - v = 0
//! a(u) (v - V)/τ - N(w, t) = 0        a(u) = c^-2 - 2 gamma u
//! B(w) - g(t) = 0
//! ```
//!
//! and is solved by Newton's method with the exact Jacobian. Backward Euler
//! is a single stage with `τ = dt`; TR-BDF2 chains a trapezoidal stage to
//! `t + γ dt` with a BDF2 stage to `t + dt`.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::{Grid, Stencil};
use crate::linalg::{interleave, BandedLu};
use crate::model::{PhysicalParams, State};
use crate::operator::DiscreteOperator;
use crate::report::{ExperimentReport, RunStatus, TimeSample};

/// Newton updates below `ROUNDOFF_STEP · (1 + ‖w‖_∞)` end the iteration.
const ROUNDOFF_STEP: f64 = 1e-14;

/// `2 - sqrt(2)`, the TR-BDF2 splitting that makes both stages share a Jacobian scale.
pub const TR_BDF2_GAMMA: f64 = 2.0 - std::f64::consts::SQRT_2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Scheme {
    BackwardEuler,
    #[default]
    TrBdf2,
}

impl Scheme {
    pub fn name(&self) -> &'static str {
        match self {
            Scheme::BackwardEuler => "backward-euler",
            Scheme::TrBdf2 => "tr-bdf2",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "backward-euler" | "be" => Some(Scheme::BackwardEuler),
            "tr-bdf2" | "trbdf2" => Some(Scheme::TrBdf2),
            _ => None,
        }
    }
}

/// Boundary relation imposed on the boundary `v`-rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BoundaryKind {
    /// `∂_ν(u + beta v) + v sqrt(c^-2 - 2 gamma u) = 0`
    #[default]
    Absorbing,
    /// `∂_ν(u + beta v) = 0`, a rigid wall.
    Neumann,
    /// `v = 0`
    DirichletV,
}

impl BoundaryKind {
    pub fn name(&self) -> &'static str {
        match self {
            BoundaryKind::Absorbing => "abc",
            BoundaryKind::Neumann => "neumann",
            BoundaryKind::DirichletV => "dirichlet-v",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "abc" | "absorbing" => Some(BoundaryKind::Absorbing),
            "neumann" => Some(BoundaryKind::Neumann),
            "dirichlet-v" => Some(BoundaryKind::DirichletV),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepperConfig {
    pub dt: f64,
    pub scheme: Scheme,
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    /// Degeneracy floor; `None` means `1e-6 c^-2`.
    pub eps_deg: Option<f64>,
}

impl Default for StepperConfig {
    fn default() -> Self {
        Self {
            dt: 1e-2,
            scheme: Scheme::TrBdf2,
            newton_tol: 1e-10,
            newton_max_iter: 25,
            eps_deg: None,
        }
    }
}

impl StepperConfig {
    pub fn new(dt: f64, scheme: Scheme) -> Result<Self> {
        let cfg = Self {
            dt,
            scheme,
            ..Self::default()
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if !(self.dt.is_finite() && self.dt > 0.0) {
            problems.push(format!("dt must be > 0 (got {})", self.dt));
        }
        if !(self.newton_tol.is_finite() && self.newton_tol > 0.0) {
            problems.push(format!("newton_tol must be > 0 (got {})", self.newton_tol));
        }
        if self.newton_max_iter < 1 {
            problems.push("newton_max_iter must be >= 1".to_string());
        }
        if let Some(e) = self.eps_deg {
            if !(e.is_finite() && e >= 0.0) {
                problems.push(format!("eps_deg must be >= 0 (got {e})"));
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(problems.join("; ")))
        }
    }

    pub fn floor(&self, params: &PhysicalParams) -> f64 {
        self.eps_deg.unwrap_or_else(|| params.default_floor())
    }
}

/// Additive forcing: `f` enters the interior momentum rows, `g` the
/// boundary rows (nodal vectors; the other entries are ignored).
#[derive(Debug, Clone, PartialEq)]
pub struct Forcing {
    pub interior: Vec<f64>,
    pub boundary: Vec<f64>,
}

/// Time-dependent forcing hook, used by manufactured-solution studies.
pub trait Source: Send + Sync {
    fn forcing(&self, grid: &Grid, params: &PhysicalParams, t: f64) -> Forcing;
}

/// Called after every accepted step (and once for the initial state).
pub trait Observer {
    fn observe(&mut self, problem: &Problem, state: &State);
}

/// Residual vector in stacked order: `u`-rows then `v`-rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Residual {
    pub values: Vec<f64>,
}

impl Residual {
    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, x| m.max(x.abs()))
    }
}

/// Data of one implicit stage (see module docs).
#[derive(Debug, Clone, PartialEq)]
pub struct Stage {
    pub tau: f64,
    pub u_star: Vec<f64>,
    pub v_star: Vec<f64>,
    pub t: f64,
}

impl Stage {
    /// The backward-Euler stage from `old` over `dt`.
    pub fn backward_euler(old: &State, dt: f64) -> Self {
        Self {
            tau: dt,
            u_star: old.u.clone(),
            v_star: old.v.clone(),
            t: old.t + dt,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct NewtonStats {
    /// Linear solves performed.
    pub iterations: usize,
    /// Residual sup-norms, starting with the initial guess.
    pub history: Vec<f64>,
}

/// The discretized problem: parameters, grid and assembled stencils.
#[derive(Clone)]
pub struct Problem {
    params: PhysicalParams,
    grid: Arc<Grid>,
    lap: Stencil,
    dnu: Stencil,
    boundary: BoundaryKind,
    source: Option<Arc<dyn Source>>,
    perm: Vec<usize>,
}

impl std::fmt::Debug for Problem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Problem")
            .field("params", &self.params)
            .field("nodes", &self.grid.node_count())
            .field("boundary", &self.boundary)
            .field("source", &self.source.is_some())
            .finish()
    }
}

impl Problem {
    pub fn new(params: PhysicalParams, grid: impl Into<Arc<Grid>>) -> Self {
        let grid = grid.into();
        Self {
            params,
            lap: grid.laplacian(),
            dnu: grid.normal_derivative(),
            perm: interleave(grid.node_count()),
            grid,
            boundary: BoundaryKind::Absorbing,
            source: None,
        }
    }

    pub fn with_boundary(mut self, kind: BoundaryKind) -> Self {
        self.boundary = kind;
        self
    }

    pub fn with_source(mut self, source: Arc<dyn Source>) -> Self {
        self.source = Some(source);
        self
    }

    pub fn params(&self) -> &PhysicalParams {
        &self.params
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn boundary_kind(&self) -> BoundaryKind {
        self.boundary
    }

    pub fn laplacian(&self) -> &Stencil {
        &self.lap
    }

    pub fn normal_derivative(&self) -> &Stencil {
        &self.dnu
    }

    fn forcing(&self, t: f64) -> Option<Forcing> {
        self.source.as_ref().map(|s| s.forcing(&self.grid, &self.params, t))
    }

    fn check_len(&self, w: &State) -> Result<()> {
        let n = self.grid.node_count();
        for len in [w.u.len(), w.v.len()] {
            if len != n {
                return Err(Error::LengthMismatch { expected: n, got: len });
            }
        }
        Ok(())
    }

    /// Coefficients `a(u)` at every node, checked against the floor.
    fn coefficients(&self, w: &State, floor: f64) -> Result<Vec<f64>> {
        w.u.iter()
            .enumerate()
            .map(|(k, &u)| {
                self.params.coefficient(u, floor).map_err(|e| match e {
                    Error::Degeneracy { coefficient, floor, .. } => Error::Degeneracy {
                        node: Some(k),
                        t: Some(w.t),
                        coefficient,
                        floor,
                    },
                    other => other,
                })
            })
            .collect()
    }

    /// `N(w, t) = Δu + beta Δv + 2 gamma v^2 + f` on interior nodes (0 elsewhere).
    pub fn momentum(&self, w: &State) -> Vec<f64> {
        let beta = self.params.beta();
        let gamma = self.params.gamma();
        let forcing = self.forcing(w.t);
        let mut out = vec![0.0; self.grid.node_count()];
        for row in self.lap.rows() {
            let k = row.node;
            let mut n = row.apply(&w.u) + beta * row.apply(&w.v) + 2.0 * gamma * w.v[k] * w.v[k];
            if let Some(f) = &forcing {
                n += f.interior[k];
            }
            out[k] = n;
        }
        out
    }

    /// Active boundary relation minus `g`, on boundary nodes (0 elsewhere).
    pub fn boundary_residual(&self, w: &State) -> Vec<f64> {
        let beta = self.params.beta();
        let forcing = self.forcing(w.t);
        let mut out = vec![0.0; self.grid.node_count()];
        for row in self.dnu.rows() {
            let k = row.node;
            let mut b = match self.boundary {
                BoundaryKind::Absorbing => {
                    row.apply(&w.u)
                        + beta * row.apply(&w.v)
                        + w.v[k] * self.params.raw_coefficient(w.u[k]).max(0.0).sqrt()
                }
                BoundaryKind::Neumann => row.apply(&w.u) + beta * row.apply(&w.v),
                BoundaryKind::DirichletV => w.v[k],
            };
            if let Some(f) = &forcing {
                b -= f.boundary[k];
            }
            out[k] = b;
        }
        out
    }

    /// Residual of one implicit stage at the candidate `w` (whose `t` is
    /// ignored in favour of `stage.t`).
    pub fn stage_residual(&self, w: &State, stage: &Stage, floor: f64) -> Result<Residual> {
        self.check_len(w)?;
        let n = self.grid.node_count();
        let w = State {
            u: w.u.clone(),
            v: w.v.clone(),
            t: stage.t,
        };
        let a = self.coefficients(&w, floor)?;
        let mut values = vec![0.0; 2 * n];
        for k in 0..n {
            values[k] = (w.u[k] - stage.u_star[k]) / stage.tau - w.v[k];
        }
        let momentum = self.momentum(&w);
        for &k in self.grid.interior() {
            values[n + k] = a[k] * (w.v[k] - stage.v_star[k]) / stage.tau - momentum[k];
        }
        let bc = self.boundary_residual(&w);
        for b in self.grid.boundary() {
            values[n + b.node] = bc[b.node];
        }
        Ok(Residual { values })
    }

    /// Exact Jacobian of [`Problem::stage_residual`] with respect to the
    /// stacked `(u, v)`.
    pub fn stage_jacobian(&self, w: &State, stage: &Stage, floor: f64) -> Result<DiscreteOperator> {
        self.check_len(w)?;
        let n = self.grid.node_count();
        let (beta, gamma) = (self.params.beta(), self.params.gamma());
        let a = self.coefficients(w, floor)?;
        let mut jac = DiscreteOperator::zeros(2 * n, 2 * n);
        for k in 0..n {
            jac.push(k, k, 1.0 / stage.tau);
            jac.push(k, n + k, -1.0);
        }
        for row in self.lap.rows() {
            let k = row.node;
            let r = n + k;
            jac.push_stencil_row(r, 0, row, -1.0);
            jac.push(r, k, -2.0 * gamma * (w.v[k] - stage.v_star[k]) / stage.tau);
            jac.push_stencil_row(r, n, row, -beta);
            jac.push(r, n + k, a[k] / stage.tau - 4.0 * gamma * w.v[k]);
        }
        for row in self.dnu.rows() {
            let k = row.node;
            let r = n + k;
            match self.boundary {
                BoundaryKind::Absorbing => {
                    let root = a[k].sqrt();
                    jac.push_stencil_row(r, 0, row, 1.0);
                    jac.push(r, k, -gamma * w.v[k] / root);
                    jac.push_stencil_row(r, n, row, beta);
                    jac.push(r, n + k, root);
                }
                BoundaryKind::Neumann => {
                    jac.push_stencil_row(r, 0, row, 1.0);
                    jac.push_stencil_row(r, n, row, beta);
                }
                BoundaryKind::DirichletV => jac.push(r, n + k, 1.0),
            }
        }
        Ok(jac)
    }

    /// Backward-Euler residual of `w_new` against `w_old` over `cfg.dt`.
    pub fn residual(&self, w_new: &State, w_old: &State, cfg: &StepperConfig) -> Result<Residual> {
        let stage = Stage::backward_euler(w_old, cfg.dt);
        self.stage_residual(w_new, &stage, cfg.floor(&self.params))
    }

    /// Backward-Euler Jacobian.
    pub fn jacobian(&self, w_new: &State, w_old: &State, cfg: &StepperConfig) -> Result<DiscreteOperator> {
        let stage = Stage::backward_euler(w_old, cfg.dt);
        self.stage_jacobian(w_new, &stage, cfg.floor(&self.params))
    }

    /// Newton iteration for one stage starting from `guess`.
    pub fn solve_stage(&self, guess: &State, stage: &Stage, cfg: &StepperConfig) -> Result<(State, NewtonStats)> {
        let floor = cfg.floor(&self.params);
        let n = self.grid.node_count();
        let mut w = State {
            u: guess.u.clone(),
            v: guess.v.clone(),
            t: stage.t,
        };
        w.check_floor(&self.params, floor)?;
        let mut stats = NewtonStats::default();
        let mut increases = 0;
        loop {
            let res = self.stage_residual(&w, stage, floor)?;
            let norm = res.sup_norm();
            if !norm.is_finite() {
                return Err(Error::NewtonDivergence {
                    t: stage.t,
                    reason: "non-finite residual".into(),
                    history: stats.history,
                });
            }
            if let Some(&prev) = stats.history.last() {
                increases = if norm > prev { increases + 1 } else { 0 };
            }
            stats.history.push(norm);
            if norm <= cfg.newton_tol {
                return Ok((w, stats));
            }
            if increases >= 2 {
                return Err(Error::NewtonDivergence {
                    t: stage.t,
                    reason: "residual increased twice in a row".into(),
                    history: stats.history,
                });
            }
            if stats.iterations >= cfg.newton_max_iter {
                return Err(Error::NewtonDivergence {
                    t: stage.t,
                    reason: format!("no convergence in {} iterations", cfg.newton_max_iter),
                    history: stats.history,
                });
            }
            let jac = self.stage_jacobian(&w, stage, floor)?;
            let lu = BandedLu::factor(&jac, Some(&self.perm)).map_err(|e| Error::NewtonDivergence {
                t: stage.t,
                reason: e.to_string(),
                history: stats.history.clone(),
            })?;
            let delta = lu.solve(&res.values);
            for k in 0..n {
                w.u[k] -= delta[k];
                w.v[k] -= delta[n + k];
            }
            stats.iterations += 1;
            w.check_floor(&self.params, floor)?;
            // Residuals of fine grids bottom out above newton_tol; an update
            // at roundoff level means the iterate cannot improve further.
            let size = 1.0 + w.max_abs_u().max(w.max_abs_v());
            let step = delta.iter().fold(0.0, |m: f64, d| m.max(d.abs()));
            if stats.iterations > 1 && step <= ROUNDOFF_STEP * size {
                let norm = self.stage_residual(&w, stage, floor)?.sup_norm();
                stats.history.push(norm);
                if norm.is_finite() {
                    return Ok((w, stats));
                }
            }
        }
    }

    /// Advances `old` by one step of `dt` with the configured scheme.
    pub fn step(&self, old: &State, dt: f64, cfg: &StepperConfig) -> Result<(State, NewtonStats)> {
        match cfg.scheme {
            Scheme::BackwardEuler => {
                let stage = Stage::backward_euler(old, dt);
                self.solve_stage(old, &stage, cfg)
            }
            Scheme::TrBdf2 => {
                let g = TR_BDF2_GAMMA;
                let floor = cfg.floor(&self.params);
                let a = self.coefficients(old, floor)?;
                let momentum = self.momentum(old);
                let tau1 = 0.5 * g * dt;
                let first = Stage {
                    tau: tau1,
                    u_star: old.u.iter().zip(&old.v).map(|(u, v)| u + tau1 * v).collect(),
                    v_star: (0..old.len()).map(|k| old.v[k] + tau1 * momentum[k] / a[k]).collect(),
                    t: old.t + g * dt,
                };
                let (mid, mut stats) = self.solve_stage(old, &first, cfg)?;

                let c_mid = 1.0 / (g * (2.0 - g));
                let c_old = (1.0 - g) * (1.0 - g) / (g * (2.0 - g));
                let second = Stage {
                    tau: (1.0 - g) / (2.0 - g) * dt,
                    u_star: mid.u.iter().zip(&old.u).map(|(m, o)| c_mid * m - c_old * o).collect(),
                    v_star: mid.v.iter().zip(&old.v).map(|(m, o)| c_mid * m - c_old * o).collect(),
                    t: old.t + dt,
                };
                let (new, stats2) = self.solve_stage(&mid, &second, cfg)?;
                stats.iterations += stats2.iterations;
                stats.history.extend(stats2.history);
                Ok((new, stats))
            }
        }
    }

    /// One step of size `cfg.dt` from `w_old`.
    pub fn newton_step_solve(&self, w_old: &State, cfg: &StepperConfig) -> Result<(State, NewtonStats)> {
        cfg.validate()?;
        self.step(w_old, cfg.dt, cfg)
    }

    /// Diagnostics of a state at its own time.
    pub fn sample(&self, w: &State) -> TimeSample {
        let (mut u_min, mut u_max) = (f64::INFINITY, f64::NEG_INFINITY);
        for &u in &w.u {
            u_min = u_min.min(u);
            u_max = u_max.max(u);
        }
        let trap = self.grid.trapezoid_weights();
        let kinetic: f64 = trap.iter().zip(&w.v).map(|(q, v)| q * v * v).sum();
        let bc = self.boundary_residual(w);
        TimeSample {
            t: w.t,
            u_min,
            u_max,
            u_mean: self.grid.mean(&w.u).unwrap_or(f64::NAN),
            sup_v: w.max_abs_v(),
            bc_residual: self
                .grid
                .boundary()
                .iter()
                .map(|b| bc[b.node].abs())
                .fold(0.0, f64::max),
            energy: self.params.inv_c2() * kinetic + self.grid.gradient_norm_sq(&w.u),
        }
    }

    /// Integrates from `initial` to `t_end` with uniform steps no larger than
    /// `cfg.dt`. Errors end the run and are recorded in the report, which
    /// keeps every sample taken so far.
    pub fn simulate(
        &self,
        initial: &State,
        t_end: f64,
        cfg: &StepperConfig,
        observers: &mut [&mut dyn Observer],
    ) -> ExperimentReport {
        let mut report = ExperimentReport {
            series: Vec::new(),
            reference: 0.0,
            final_state: None,
            status: RunStatus::Completed,
            steps: 0,
            newton_iterations: 0,
            max_abs_u: initial.max_abs_u(),
            fit: None,
        };
        let check = cfg
            .validate()
            .and_then(|_| self.check_len(initial))
            .and_then(|_| initial.check_floor(&self.params, cfg.floor(&self.params)));
        if let Err(e) = check {
            report.status = RunStatus::Failed(e);
            return report;
        }

        let mut state = initial.clone();
        report.series.push(self.sample(&state));
        for obs in observers.iter_mut() {
            obs.observe(self, &state);
        }
        let span = t_end - initial.t;
        let steps = if span > 0.0 {
            (span / cfg.dt * (1.0 - 1e-12)).ceil().max(1.0) as usize
        } else {
            0
        };
        let dt = if steps > 0 { span / steps as f64 } else { 0.0 };
        for k in 1..=steps {
            match self.step(&state, dt, cfg) {
                Ok((mut next, stats)) => {
                    next.t = initial.t + k as f64 * dt;
                    report.steps += 1;
                    report.newton_iterations += stats.iterations;
                    report.max_abs_u = report.max_abs_u.max(next.max_abs_u());
                    state = next;
                    report.series.push(self.sample(&state));
                    for obs in observers.iter_mut() {
                        obs.observe(self, &state);
                    }
                }
                Err(e) => {
                    report.status = RunStatus::Failed(e.with_time(state.t + dt));
                    break;
                }
            }
        }
        report.reference = self.grid.mean(&state.u).unwrap_or(f64::NAN);
        report.final_state = Some(state);
        report
    }
}
