//! Simulation and analysis toolkit for the Westervelt equation of nonlinear
//! acoustics with order-zero absorbing boundary conditions.
//!
//! * [`model`]: parameters, states, equilibria and the pointwise nonlinear terms
//! * [`grid`]: interval/rectangle grids, stencils and quadrature
//! * [`stepper`]: implicit Newton time stepping (backward Euler, TR-BDF2)
//! * [`analysis`]: linearization at an equilibrium, spectrum, kernel/range
//! * [`experiments`]: compatibility, decay fits, reflection and MMS studies
//! * [`config`], [`io`], [`cli`]: run configuration, output files and the CLI

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod analysis;
pub mod cli;
pub mod config;
pub mod error;
pub mod experiments;
pub mod grid;
pub mod io;
pub mod linalg;
pub mod model;
pub mod operator;
pub mod report;
pub mod stepper;

pub use error::{Error, Result};
pub use grid::Grid;
pub use model::{Equilibrium, PhysicalParams, State};
pub use operator::DiscreteOperator;
pub use report::ExperimentReport;
pub use stepper::{BoundaryKind, Problem, Scheme, StepperConfig};
