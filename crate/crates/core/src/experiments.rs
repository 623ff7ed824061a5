//! Experiment drivers: initial-data recipes, boundary compatibility of the
//! data, decay-rate fitting, reflection measurements and manufactured
//! solutions.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::model::{PhysicalParams, State};
use crate::report::{DecayFit, ExperimentReport};
use crate::stepper::{BoundaryKind, Forcing, Observer, Problem, Scheme, Source, StepperConfig};

/// Data that has a compatibility residual below this is left alone.
pub const COMP_TOL: f64 = 1e-10;
/// Largest admissible RMS of the log-linear decay fit.
pub const FIT_TOL: f64 = 0.1;
/// Required drop of `sup |v|` from its peak before a fit is attempted.
pub const DECAY_FACTOR: f64 = 1e3;
/// Samples whose deviation fell below this fraction of the largest one are
/// at the solver noise level and are left out of the fit.
pub const NOISE_REL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct Provenance {
    pub recipe: String,
    pub parameters: Vec<(String, f64)>,
}

/// Nodal initial data `(u0, u1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialData {
    pub u0: Vec<f64>,
    pub u1: Vec<f64>,
    pub provenance: Provenance,
}

impl InitialData {
    pub fn new(
        u0: Vec<f64>,
        u1: Vec<f64>,
        provenance: Provenance,
        grid: &Grid,
        params: &PhysicalParams,
    ) -> Result<Self> {
        let n = grid.node_count();
        for len in [u0.len(), u1.len()] {
            if len != n {
                return Err(Error::LengthMismatch { expected: n, got: len });
            }
        }
        let data = Self { u0, u1, provenance };
        data.state(0.0).check_admissible(params, 0.0)?;
        Ok(data)
    }

    pub fn state(&self, t: f64) -> State {
        State {
            u: self.u0.clone(),
            v: self.u1.clone(),
            t,
        }
    }
}

/// Analytic initial-data recipes. Coordinates are taken relative to the
/// grid's lower corner and scaled by the extents where noted.
#[derive(Debug, Clone, PartialEq)]
pub enum Recipe {
    /// `(r, 0)`
    Equilibrium { r: f64 },
    /// `u0 = r + A Π cos(π x̂_i)`, `u1 = 0`, `x̂` scaled to `[0, 1]`.
    Cosine { r: f64, amplitude: f64 },
    /// Gaussian bump in `u0`; `u1 = -direction · c · ∂_x u0`.
    Gaussian {
        r: f64,
        amplitude: f64,
        center_x: f64,
        center_y: f64,
        width: f64,
        direction: f64,
    },
    /// `u0 = r`, `u1 = slope · x`.
    Ramp { r: f64, slope: f64 },
}

impl Recipe {
    pub const IDS: [&'static str; 4] = ["equilibrium", "cosine", "gaussian", "ramp"];

    /// The recipe `id` with default parameters.
    pub fn with_defaults(id: &str) -> Option<Self> {
        Some(match id {
            "equilibrium" => Recipe::Equilibrium { r: 0.0 },
            "cosine" => Recipe::Cosine {
                r: 0.0,
                amplitude: 0.01,
            },
            "gaussian" => Recipe::Gaussian {
                r: 0.0,
                amplitude: 0.01,
                center_x: 0.3,
                center_y: 0.5,
                width: 0.03,
                direction: 1.0,
            },
            "ramp" => Recipe::Ramp { r: 0.0, slope: 1.0 },
            _ => return None,
        })
    }

    pub fn id(&self) -> &'static str {
        match self {
            Recipe::Equilibrium { .. } => "equilibrium",
            Recipe::Cosine { .. } => "cosine",
            Recipe::Gaussian { .. } => "gaussian",
            Recipe::Ramp { .. } => "ramp",
        }
    }

    pub fn parameters(&self) -> Vec<(&'static str, f64)> {
        match *self {
            Recipe::Equilibrium { r } => vec![("r", r)],
            Recipe::Cosine { r, amplitude } => vec![("r", r), ("amplitude", amplitude)],
            Recipe::Gaussian {
                r,
                amplitude,
                center_x,
                center_y,
                width,
                direction,
            } => vec![
                ("r", r),
                ("amplitude", amplitude),
                ("center_x", center_x),
                ("center_y", center_y),
                ("width", width),
                ("direction", direction),
            ],
            Recipe::Ramp { r, slope } => vec![("r", r), ("slope", slope)],
        }
    }

    pub fn parameter_names(&self) -> Vec<&'static str> {
        self.parameters().into_iter().map(|(k, _)| k).collect()
    }

    /// Sets one parameter; unknown names and invalid values give a message.
    pub fn set(&mut self, key: &str, value: f64) -> std::result::Result<(), String> {
        if !value.is_finite() {
            return Err(format!("{key} must be finite"));
        }
        let slot = match (self, key) {
            (Recipe::Equilibrium { r }, "r")
            | (Recipe::Cosine { r, .. }, "r")
            | (Recipe::Gaussian { r, .. }, "r")
            | (Recipe::Ramp { r, .. }, "r") => r,
            (Recipe::Cosine { amplitude, .. }, "amplitude") | (Recipe::Gaussian { amplitude, .. }, "amplitude") => {
                amplitude
            }
            (Recipe::Gaussian { center_x, .. }, "center_x") => center_x,
            (Recipe::Gaussian { center_y, .. }, "center_y") => center_y,
            (Recipe::Gaussian { width, .. }, "width") => {
                if value <= 0.0 {
                    return Err("width must be > 0".into());
                }
                width
            }
            (Recipe::Gaussian { direction, .. }, "direction") => direction,
            (Recipe::Ramp { slope, .. }, "slope") => slope,
            (recipe, _) => {
                return Err(format!(
                    "recipe {} has no parameter {key} (expected one of: {})",
                    recipe.id(),
                    recipe.parameter_names().join(", ")
                ))
            }
        };
        *slot = value;
        Ok(())
    }

    pub fn build(&self, grid: &Grid, params: &PhysicalParams) -> Result<InitialData> {
        let axes = grid.axes();
        let scaled = |x: f64, k: usize| (x - axes[k].a) / axes[k].length();
        let (u0, u1) = match *self {
            Recipe::Equilibrium { r } => (vec![r; grid.node_count()], vec![0.0; grid.node_count()]),
            Recipe::Cosine { r, amplitude } => {
                let u0 = grid.sample(|x, y| {
                    let mut p = (PI * scaled(x, 0)).cos();
                    if grid.dim() == 2 {
                        p *= (PI * scaled(y, 1)).cos();
                    }
                    r + amplitude * p
                });
                (u0, vec![0.0; grid.node_count()])
            }
            Recipe::Gaussian {
                r,
                amplitude,
                center_x,
                center_y,
                width,
                direction,
            } => {
                let bump = |x: f64, y: f64| {
                    let dy = if grid.dim() == 2 { y - center_y } else { 0.0 };
                    let dx = x - center_x;
                    (-(dx * dx + dy * dy) / (2.0 * width * width)).exp()
                };
                let u0 = grid.sample(|x, y| r + amplitude * bump(x, y));
                let c = params.c();
                let u1 = grid.sample(|x, y| direction * c * amplitude * (x - center_x) / (width * width) * bump(x, y));
                (u0, u1)
            }
            Recipe::Ramp { r, slope } => (vec![r; grid.node_count()], grid.sample(|x, _| slope * x)),
        };
        let provenance = Provenance {
            recipe: self.id().to_string(),
            parameters: self.parameters().into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
        };
        InitialData::new(u0, u1, provenance, grid, params)
    }
}

/// `∂_ν(u0 + β u1) + u1 sqrt(c^-2 - 2γ u0)` at the boundary nodes, in the
/// order of [`Grid::boundary`].
pub fn compatibility_residual(data: &InitialData, params: &PhysicalParams, grid: &Grid) -> Result<Vec<f64>> {
    let n = grid.node_count();
    for len in [data.u0.len(), data.u1.len()] {
        if len != n {
            return Err(Error::LengthMismatch { expected: n, got: len });
        }
    }
    let floor = params.default_floor();
    grid.normal_derivative()
        .rows()
        .iter()
        .map(|row| {
            let k = row.node;
            let a = params.coefficient(data.u0[k], floor).map_err(|e| match e {
                Error::Degeneracy { coefficient, floor, .. } => Error::Degeneracy {
                    node: Some(k),
                    t: Some(0.0),
                    coefficient,
                    floor,
                },
                other => other,
            })?;
            Ok(row.apply(&data.u0) + params.beta() * row.apply(&data.u1) + data.u1[k] * a.sqrt())
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Enforcement {
    pub data: InitialData,
    /// `‖Δu1‖_2`
    pub correction_norm: f64,
    /// 2-norm condition number of the collar system (1 when nothing was solved).
    pub condition: f64,
    pub residual_before: f64,
    pub residual_after: f64,
}

fn sup(values: &[f64]) -> f64 {
    values.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Smallest `ℓ²` change of `u1` on the two outermost node layers that makes
/// the data compatible. `u0` is never touched.
pub fn enforce_compatibility(data: &InitialData, params: &PhysicalParams, grid: &Grid) -> Result<Enforcement> {
    let residual = compatibility_residual(data, params, grid)?;
    let before = sup(&residual);
    if before < COMP_TOL {
        return Ok(Enforcement {
            data: data.clone(),
            correction_norm: 0.0,
            condition: 1.0,
            residual_before: before,
            residual_after: before,
        });
    }

    // The residual is affine in u1: C(u1 + δ) = C(u1) + M δ with
    // M = β D_ν + diag(sqrt a(u0)).
    let collar: Vec<usize> = (0..grid.node_count()).filter(|&k| grid.depth(k) < 2).collect();
    let mut column = vec![usize::MAX; grid.node_count()];
    for (j, &k) in collar.iter().enumerate() {
        column[k] = j;
    }
    let rows = grid.normal_derivative();
    let floor = params.default_floor();
    let mut m = DMatrix::<f64>::zeros(rows.rows().len(), collar.len());
    for (i, row) in rows.rows().iter().enumerate() {
        let mut diag = 0.0;
        for &(j, w) in &row.terms {
            if column[j] != usize::MAX {
                m[(i, column[j])] += params.beta() * w;
            }
            diag -= params.beta() * w;
        }
        let a = params.coefficient(data.u0[row.node], floor)?;
        m[(i, column[row.node])] += diag + a.sqrt();
    }

    let gram = &m * m.transpose();
    let sv = gram.singular_values();
    let (smax, smin) = (sv.max(), sv.min());
    if !(smin > 1e-14 * smax && smin.is_finite()) {
        return Err(Error::EnforcementFailure(format!(
            "collar system is singular (sigma_min/sigma_max = {:e})",
            smin / smax
        )));
    }
    let condition = (smax / smin).sqrt();
    let lu = gram.clone().lu();
    let mut u1 = data.u1.clone();
    let mut correction = vec![0.0; collar.len()];
    let mut current = residual;
    for _ in 0..3 {
        let rhs = DVector::from_iterator(current.len(), current.iter().map(|c| -c));
        let y = lu
            .solve(&rhs)
            .ok_or_else(|| Error::EnforcementFailure("collar system could not be solved".into()))?;
        let delta = m.transpose() * y;
        for (j, &k) in collar.iter().enumerate() {
            u1[k] += delta[j];
            correction[j] += delta[j];
        }
        let trial = InitialData {
            u0: data.u0.clone(),
            u1: u1.clone(),
            provenance: data.provenance.clone(),
        };
        current = compatibility_residual(&trial, params, grid)?;
        if sup(&current) < 1e-2 * COMP_TOL {
            break;
        }
    }
    let after = sup(&current);
    if after >= COMP_TOL {
        return Err(Error::EnforcementFailure(format!(
            "residual {after:e} above tolerance after correction (condition {condition:e})"
        )));
    }
    Ok(Enforcement {
        data: InitialData {
            u0: data.u0.clone(),
            u1,
            provenance: data.provenance.clone(),
        },
        correction_norm: correction.iter().map(|d| d * d).sum::<f64>().sqrt(),
        condition,
        residual_before: before,
        residual_after: after,
    })
}

/// Fits `log(sup|u - r_inf| + sup|v|)` against `t` over the last decade of
/// decay; `r_inf` is the quadrature mean of the final `u`.
pub fn fit_equilibrium_convergence(report: &ExperimentReport, params: &PhysicalParams) -> Result<DecayFit> {
    let series = &report.series;
    let last = series
        .last()
        .ok_or_else(|| Error::FitUnreliable("empty series".into()))?;
    let r_inf = last.u_mean;
    if !(r_inf.abs() < params.threshold()) {
        return Err(Error::FitUnreliable(format!("r_inf = {r_inf} is not admissible")));
    }
    let peak = report.peak_sup_v();
    if peak == 0.0 {
        return Err(Error::FitUnreliable(
            "nothing decayed (sup|v| is identically zero)".into(),
        ));
    }
    if last.sup_v * DECAY_FACTOR > peak {
        return Err(Error::FitUnreliable(format!(
            "sup|v| dropped only by a factor {:.3e}",
            peak / last.sup_v
        )));
    }

    let mut q: Vec<f64> = series.iter().map(|s| s.sup_u_dev(r_inf) + s.sup_v).collect();
    let q_max = q.iter().copied().fold(0.0, f64::max);
    if let Some(cut) = q.iter().position(|&x| x < NOISE_REL * q_max) {
        q.truncate(cut);
    }
    let q_end = match q.last() {
        Some(&x) => x,
        None => return Err(Error::FitUnreliable("no samples above the noise level".into())),
    };
    if !(q_end > 0.0) {
        return Err(Error::FitUnreliable("deviation vanished exactly".into()));
    }
    let start = match q.iter().rposition(|&x| x > 10.0 * q_end) {
        Some(k) => k + 1,
        None => return Err(Error::FitUnreliable("no full decade of decay".into())),
    };
    let (ts, ys): (Vec<f64>, Vec<f64>) = series[start..q.len()]
        .iter()
        .zip(&q[start..])
        .map(|(s, x)| (s.t, x.ln()))
        .unzip();
    if ts.len() < 4 {
        return Err(Error::FitUnreliable(format!(
            "decay window has only {} samples",
            ts.len()
        )));
    }
    let m = ts.len() as f64;
    let (tm, ym) = (ts.iter().sum::<f64>() / m, ys.iter().sum::<f64>() / m);
    let stt: f64 = ts.iter().map(|t| (t - tm) * (t - tm)).sum();
    let sty: f64 = ts.iter().zip(&ys).map(|(t, y)| (t - tm) * (y - ym)).sum();
    let slope = sty / stt;
    let rms = (ts
        .iter()
        .zip(&ys)
        .map(|(t, y)| {
            let e = y - (ym + slope * (t - tm));
            e * e
        })
        .sum::<f64>()
        / m)
        .sqrt();
    if !(rms < FIT_TOL) {
        return Err(Error::FitUnreliable(format!(
            "fit residual {rms:.3e} exceeds {FIT_TOL}"
        )));
    }
    Ok(DecayFit {
        r_inf,
        omega: -slope,
        fit_residual: rms,
        window: (ts[0], ts[ts.len() - 1]),
        points: ts.len(),
    })
}

/// Gaussian pulse launched to the right in a 1D channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseConfig {
    pub amplitude: f64,
    pub center: f64,
    pub width: f64,
    pub probe: f64,
}

impl Default for PulseConfig {
    fn default() -> Self {
        Self {
            amplitude: 1e-3,
            center: 0.3,
            width: 0.03,
            probe: 0.6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReflectionSetup {
    pub params: PhysicalParams,
    pub length: f64,
    pub n: usize,
    pub dt: f64,
    pub scheme: Scheme,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReflectionResult {
    pub variant: BoundaryKind,
    pub incident_amp: f64,
    pub reflected_amp: f64,
    pub ratio: f64,
}

struct Probe {
    node: usize,
    trace: Vec<(f64, f64)>,
}

impl Observer for Probe {
    fn observe(&mut self, _: &Problem, state: &State) {
        self.trace.push((state.t, state.u[self.node]));
    }
}

/// Peak `|u|` at the probe before and after the pulse meets the right wall.
pub fn reflection_experiment(
    pulse: &PulseConfig,
    variant: BoundaryKind,
    setup: &ReflectionSetup,
) -> Result<ReflectionResult> {
    let c = setup.params.c();
    let len = setup.length;
    if !(0.0 < pulse.center && pulse.center < pulse.probe && pulse.probe < len) {
        return Err(Error::Config(format!(
            "need 0 < center < probe < length (got {}, {}, {len})",
            pulse.center, pulse.probe
        )));
    }
    let t_in = (pulse.probe - pulse.center) / c;
    let t_back = (2.0 * len - pulse.center - pulse.probe) / c;
    let spread = 8.0 * pulse.width / c;
    if t_back - t_in <= 2.0 * spread {
        return Err(Error::ProbeAmbiguous(format!(
            "incident and reflected pulses overlap at the probe (arrivals {t_in:.3} and {t_back:.3}, spread {spread:.3})"
        )));
    }
    let t_split = 0.5 * (t_in + t_back);
    let t_end = t_back + (t_back - t_split);

    let grid = Arc::new(Grid::interval(0.0, len, setup.n)?);
    let recipe = Recipe::Gaussian {
        r: 0.0,
        amplitude: pulse.amplitude,
        center_x: pulse.center,
        center_y: 0.0,
        width: pulse.width,
        direction: 1.0,
    };
    let data = recipe.build(&grid, &setup.params)?;
    let problem = Problem::new(setup.params, grid.clone()).with_boundary(variant);
    let cfg = StepperConfig::new(setup.dt, setup.scheme)?;
    let node = (pulse.probe / grid.axis(0).h).round() as usize;
    let mut probe = Probe {
        node,
        trace: Vec::new(),
    };
    let report = problem.simulate(&data.state(0.0), t_end, &cfg, &mut [&mut probe]);
    if let Some(e) = report.error() {
        return Err(e.clone());
    }

    let peak = |lo: f64, hi: f64| {
        probe
            .trace
            .iter()
            .filter(|(t, _)| *t >= lo && *t < hi)
            .fold(0.0, |m: f64, (_, u)| m.max(u.abs()))
    };
    let incident = peak(0.0, t_split);
    let reflected = peak(t_split, t_end + setup.dt);
    if !(incident > 0.0) {
        return Err(Error::ProbeAmbiguous("incident amplitude is zero".into()));
    }
    let at_split = probe
        .trace
        .iter()
        .filter(|(t, _)| (t - t_split).abs() <= 0.5 * pulse.width / c)
        .fold(0.0, |m: f64, (_, u)| m.max(u.abs()));
    if at_split > 0.05 * incident.max(reflected) {
        return Err(Error::ProbeAmbiguous(format!(
            "probe signal {at_split:e} between the two arrivals is not quiet"
        )));
    }
    Ok(ReflectionResult {
        variant,
        incident_amp: incident,
        reflected_amp: reflected,
        ratio: reflected / incident,
    })
}

/// Manufactured solution `u* = ε Π cos(π x̂_i) e^{-λt}` with `x̂` scaled to
/// `[0, 1]` on each axis. Its normal derivative vanishes on the boundary.
///
/// With `λ β = 1` the combination `Δu* + β Δu*_t` vanishes identically, and
/// so does the truncation error of the Laplacian: spatial errors are then
/// invisible.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CosineDecay {
    pub eps: f64,
    pub rate: f64,
}

impl CosineDecay {
    fn shape(grid: &Grid) -> (Vec<f64>, f64) {
        let axes = grid.axes();
        let phi = grid.sample(|x, y| {
            let mut p = (PI * (x - axes[0].a) / axes[0].length()).cos();
            if grid.dim() == 2 {
                p *= (PI * (y - axes[1].a) / axes[1].length()).cos();
            }
            p
        });
        let k: f64 = axes.iter().map(|ax| (PI / ax.length()).powi(2)).sum();
        (phi, k)
    }

    pub fn exact(&self, grid: &Grid, t: f64) -> State {
        let (phi, _) = Self::shape(grid);
        let u: Vec<f64> = phi.iter().map(|p| self.eps * p * (-self.rate * t).exp()).collect();
        let v = u.iter().map(|x| -self.rate * x).collect();
        State { u, v, t }
    }
}

impl Source for CosineDecay {
    fn forcing(&self, grid: &Grid, params: &PhysicalParams, t: f64) -> Forcing {
        let (phi, k) = Self::shape(grid);
        let (beta, gamma) = (params.beta(), params.gamma());
        let mut interior = vec![0.0; grid.node_count()];
        let mut boundary = vec![0.0; grid.node_count()];
        for (node, p) in phi.iter().enumerate() {
            // u_t = -λu, u_tt = λ²u, Δu = -k u, Δu_t = λk u
            let l = self.rate;
            let u = self.eps * p * (-l * t).exp();
            let a = params.raw_coefficient(u);
            interior[node] = a * l * l * u + k * u - beta * l * k * u - 2.0 * gamma * l * l * u * u;
            boundary[node] = -l * u * a.max(0.0).sqrt();
        }
        Forcing { interior, boundary }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MmsStudy {
    pub params: PhysicalParams,
    pub dim: usize,
    pub eps: f64,
    pub rate: f64,
    pub t_end: f64,
    pub scheme: Scheme,
    /// Nodes per axis for the spatial study.
    pub resolutions: Vec<usize>,
    /// Step used by the spatial study.
    pub dt: f64,
    /// Steps for the temporal self-convergence study.
    pub dts: Vec<f64>,
    /// Nodes per axis for the temporal study.
    pub temporal_n: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MmsOrders {
    /// `(n, sup |u - u*|)` at `t_end`
    pub spatial_errors: Vec<(usize, f64)>,
    pub spatial_orders: Vec<f64>,
    /// `(dt, sup |u_dt - u_{next dt}|)` at `t_end`
    pub temporal_differences: Vec<(f64, f64)>,
    pub temporal_orders: Vec<f64>,
}

impl MmsOrders {
    /// Order from the two finest resolutions.
    pub fn spatial_order(&self) -> Option<f64> {
        self.spatial_orders.last().copied()
    }

    /// Order from the two smallest step pairs.
    pub fn temporal_order(&self) -> Option<f64> {
        self.temporal_orders.last().copied()
    }
}

fn unit_grid(dim: usize, n: usize) -> Result<Grid> {
    match dim {
        1 => Grid::interval(0.0, 1.0, n),
        _ => Grid::rectangle((0.0, 1.0), (0.0, 1.0), n, n),
    }
}

fn mms_run(study: &MmsStudy, n: usize, dt: f64) -> Result<(Grid, State)> {
    let grid = unit_grid(study.dim, n)?;
    let recipe = CosineDecay {
        eps: study.eps,
        rate: study.rate,
    };
    let problem = Problem::new(study.params, grid.clone()).with_source(Arc::new(recipe));
    let mut cfg = StepperConfig::new(dt, study.scheme)?;
    cfg.newton_tol = 1e-13;
    let report = problem.simulate(&recipe.exact(&grid, 0.0), study.t_end, &cfg, &mut []);
    match report.status {
        crate::report::RunStatus::Completed => Ok((grid, report.final_state.expect("completed run keeps its state"))),
        crate::report::RunStatus::Failed(e) => Err(e),
    }
}

fn orders(pairs: &[(f64, f64)]) -> Vec<f64> {
    pairs
        .windows(2)
        .map(|w| (w[0].1 / w[1].1).ln() / (w[0].0 / w[1].0).ln())
        .collect()
}

pub fn mms_convergence_study(study: &MmsStudy) -> Result<MmsOrders> {
    let recipe = CosineDecay {
        eps: study.eps,
        rate: study.rate,
    };
    let mut spatial_errors = Vec::new();
    for &n in &study.resolutions {
        let (grid, state) = mms_run(study, n, study.dt)?;
        let exact = recipe.exact(&grid, state.t);
        let err = state
            .u
            .iter()
            .zip(&exact.u)
            .fold(0.0, |m: f64, (a, b)| m.max((a - b).abs()));
        spatial_errors.push((n, err));
    }
    let h: Vec<(f64, f64)> = spatial_errors.iter().map(|&(n, e)| (1.0 / (n - 1) as f64, e)).collect();

    let mut finals = Vec::new();
    for &dt in &study.dts {
        finals.push((dt, mms_run(study, study.temporal_n, dt)?.1));
    }
    let temporal_differences: Vec<(f64, f64)> = finals
        .windows(2)
        .map(|w| {
            let d = w[0]
                .1
                .u
                .iter()
                .zip(&w[1].1.u)
                .fold(0.0, |m: f64, (a, b)| m.max((a - b).abs()));
            (w[0].0, d)
        })
        .collect();
    Ok(MmsOrders {
        spatial_orders: orders(&h),
        spatial_errors,
        temporal_orders: orders(&temporal_differences),
        temporal_differences,
    })
}

/// Largest amplitude in `[lo, hi]` (to within `(hi - lo) 2^-iters`) for
/// which `survives` holds, assuming it holds at `lo` and survival is
/// monotone in the amplitude.
pub fn bisect_amplitude(mut survives: impl FnMut(f64) -> bool, lo: f64, hi: f64, iters: usize) -> f64 {
    if survives(hi) {
        return hi;
    }
    let (mut good, mut bad) = (lo, hi);
    for _ in 0..iters {
        let mid = 0.5 * (good + bad);
        if survives(mid) {
            good = mid;
        } else {
            bad = mid;
        }
    }
    good
}
