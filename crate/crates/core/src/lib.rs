//! Worst-case error bounds for multivariate kernel regression under bounded
//! noise.
//!
//! Given measurements `y_i = c_i^T f(x_i) + w_i` of an unknown vector-valued
//! function with bounded RKHS norm, and noise constrained to an intersection
//! of ellipsoids, this crate computes certified bounds on `h^T f(x*)` for any
//! test input and direction:
//!
//! * [`dual::optimize_bound`] — the tight bound, found by minimizing a
//!   posterior-form certificate over surrogate noise scales;
//! * [`oracle`] — a finite-dimensional primal reference solver and a sampler
//!   of feasible functions, used to validate tightness and containment;
//! * [`baselines`] — published alternatives (norm-ball relaxation with an
//!   alternating solver, fixed-scale certificates, a mean/noise split bound)
//!   for comparison;
//! * [`scenarios`] — reproducible problem generators used by the benchmark
//!   harness and the examples.

pub mod baselines;
pub mod dual;
pub mod error;
pub mod gp;
pub mod kernels;
pub mod linalg;
pub mod noise;
pub mod oracle;
pub mod problem;
pub mod scenarios;

pub use error::{Error, Result};
pub use kernels::KernelSpec;
pub use noise::{NoiseKind, NoiseModel};
pub use problem::{BoundQuery, Problem};
