//! Physical parameters, the `(u, v)` state, equilibria and the pointwise
//! nonlinear terms of the Westervelt problem
//!
//! ```text
//! (c^-2 - 2 gamma u) u_tt - Δu - beta Δu_t = 2 gamma u_t^2        in Ω
//! ∂_ν(u + beta u_t) + u_t sqrt(c^-2 - 2 gamma u) = 0              on ∂Ω
//! ```
//!
//! The equation stays parabolic only while `|u| < 1 / (2 gamma c^2)`; every
//! evaluation that divides by or takes the root of the coefficient goes
//! through a floor check and reports [`Error::Degeneracy`] instead of
//! producing a non-finite number.

use crate::error::{Error, Result};

/// Sound speed `c`, diffusivity `beta` and nonlinearity `gamma`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalParams {
    c: f64,
    beta: f64,
    gamma: f64,
}

impl PhysicalParams {
    pub fn new(c: f64, beta: f64, gamma: f64) -> Result<Self> {
        let mut problems = Vec::new();
        for (name, value) in [("c", c), ("beta", beta), ("gamma", gamma)] {
            if !(value.is_finite() && value > 0.0) {
                problems.push(format!("{name} must be finite and > 0 (got {value})"));
            }
        }
        if !problems.is_empty() {
            return Err(Error::Config(problems.join("; ")));
        }
        Ok(Self { c, beta, gamma })
    }

    /// Same as [`PhysicalParams::new`] but admits `gamma = 0`, the linear
    /// strongly damped wave equation used as an oracle regime.
    pub fn linear(c: f64, beta: f64) -> Result<Self> {
        let p = Self::new(c, beta, 1.0)?;
        Ok(Self { gamma: 0.0, ..p })
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// `c^-2`
    pub fn inv_c2(&self) -> f64 {
        1.0 / (self.c * self.c)
    }

    /// Degeneracy threshold `1 / (2 gamma c^2)`; infinite in the linear regime.
    pub fn threshold(&self) -> f64 {
        1.0 / (2.0 * self.gamma * self.c * self.c)
    }

    /// Default degeneracy floor `1e-6 c^-2`.
    pub fn default_floor(&self) -> f64 {
        1e-6 * self.inv_c2()
    }

    /// Raw coefficient `c^-2 - 2 gamma u` without the floor check.
    #[inline]
    pub fn raw_coefficient(&self, u: f64) -> f64 {
        self.inv_c2() - 2.0 * self.gamma * u
    }

    /// Coefficient of `u_tt`, rejected when it is not above `floor`.
    pub fn coefficient(&self, u: f64, floor: f64) -> Result<f64> {
        let a = self.raw_coefficient(u);
        if a > floor {
            Ok(a)
        } else {
            Err(Error::Degeneracy {
                node: None,
                t: None,
                coefficient: a,
                floor,
            })
        }
    }

    /// Boundary impedance `c_r = sqrt(c^-2 - 2 gamma r)` at the level `r`.
    pub fn cr(&self, r: f64) -> Result<f64> {
        if !(r.abs() < self.threshold()) {
            return Err(Error::Degeneracy {
                node: None,
                t: None,
                coefficient: self.raw_coefficient(r),
                floor: 0.0,
            });
        }
        Ok(self.raw_coefficient(r).sqrt())
    }

    /// Second component of `F(w)`: `2 gamma v^2 / (c^-2 - 2 gamma u)`.
    pub fn rhs_nonlinearity(&self, v: f64, u: f64, floor: f64) -> Result<f64> {
        let a = self.coefficient(u, floor)?;
        Ok(2.0 * self.gamma * v * v / a)
    }
}

/// A constant state `(r, 0)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Equilibrium {
    r: f64,
}

impl Equilibrium {
    pub fn new(r: f64, params: &PhysicalParams) -> Result<Self> {
        if !(r.is_finite() && r.abs() < params.threshold()) {
            return Err(Error::Inadmissible {
                max_abs_u: r.abs(),
                threshold: params.threshold(),
            });
        }
        Ok(Self { r })
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn cr(&self, params: &PhysicalParams) -> f64 {
        params.raw_coefficient(self.r).sqrt()
    }

    pub fn state(&self, nodes: usize) -> State {
        State {
            u: vec![self.r; nodes],
            v: vec![0.0; nodes],
            t: 0.0,
        }
    }
}

/// First-order unknowns `w = (u, v)` with `v = u_t`, stored in grid node order.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub t: f64,
}

impl State {
    /// Builds a state and checks `max|u| < threshold - margin`.
    pub fn new(u: Vec<f64>, v: Vec<f64>, t: f64, params: &PhysicalParams, margin: f64) -> Result<Self> {
        if u.len() != v.len() {
            return Err(Error::LengthMismatch {
                expected: u.len(),
                got: v.len(),
            });
        }
        let state = Self { u, v, t };
        state.check_admissible(params, margin)?;
        Ok(state)
    }

    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }

    pub fn max_abs_u(&self) -> f64 {
        self.u.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
    }

    pub fn max_abs_v(&self) -> f64 {
        self.v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
    }

    pub fn check_admissible(&self, params: &PhysicalParams, margin: f64) -> Result<()> {
        let m = self.max_abs_u();
        let limit = params.threshold() - margin;
        let finite = self.u.iter().chain(&self.v).all(|x| x.is_finite());
        if finite && m < limit {
            Ok(())
        } else {
            Err(Error::Inadmissible {
                max_abs_u: m,
                threshold: params.threshold(),
            })
        }
    }

    /// Checks the degeneracy floor at every node.
    pub fn check_floor(&self, params: &PhysicalParams, floor: f64) -> Result<()> {
        for (node, &u) in self.u.iter().enumerate() {
            let a = params.raw_coefficient(u);
            if !(a > floor) || !u.is_finite() {
                return Err(Error::Degeneracy {
                    node: Some(node),
                    t: Some(self.t),
                    coefficient: a,
                    floor,
                });
            }
        }
        if let Some(node) = self.v.iter().position(|x| !x.is_finite()) {
            return Err(Error::Degeneracy {
                node: Some(node),
                t: Some(self.t),
                coefficient: f64::NAN,
                floor,
            });
        }
        Ok(())
    }

    /// Stacked vector, all `u` then all `v`.
    pub fn stacked(&self) -> Vec<f64> {
        let mut w = Vec::with_capacity(2 * self.len());
        w.extend_from_slice(&self.u);
        w.extend_from_slice(&self.v);
        w
    }

    pub fn from_stacked(w: &[f64], t: f64) -> Self {
        let n = w.len() / 2;
        Self {
            u: w[..n].to_vec(),
            v: w[n..].to_vec(),
            t,
        }
    }
}
