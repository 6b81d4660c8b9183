//! Ising-model annealing by simulated coherent Ising machine dynamics.
//!
//! The crate provides problem instances ([`graph`]), three interchangeable
//! solvers behind the [`solver::Solver`] trait ([`simcim`], [`nmfa`],
//! [`cim_physics`]), a name-keyed [`solver::SolverRegistry`], and
//! diagnostics ([`analysis`]).
//!
//! ```
//! use simcim::graph::{generate_random, GraphGenSpec};
//! use simcim::simcim::{run_batch, SimCimParams};
//!
//! let problem = generate_random(&GraphGenSpec::gaussian(12, 7)).unwrap();
//! let params = SimCimParams { seed: 1, ..SimCimParams::default() };
//! let batch = run_batch(&problem, &params, 4).unwrap();
//! assert_eq!(batch.runs(), 4);
//! assert!(batch.stats.max >= batch.stats.mean);
//! ```

pub mod analysis;
pub mod cim_physics;
pub mod error;
mod kernel;
pub mod graph;
pub mod nmfa;
pub mod params;
pub mod schedule;
pub mod seed;
pub mod simcim;
pub mod solver;

pub use error::SolverError;
pub use graph::{IsingProblem, SpinConfig};
pub use params::ParamMap;
pub use solver::{Solver, SolverRegistry};
