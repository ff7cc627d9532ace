//! Regression problem container shared by every solver: scalar measurements
//! `y_i = c_i^T f(x_i) + w_i` of an unknown vector-valued function `f` with
//! norm budget `||f|| < gamma_f`, plus a quadratic noise description for `w`.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::kernels::KernelSpec;
use crate::noise::NoiseModel;

#[derive(Debug, Clone)]
pub struct Problem {
    pub kernel: KernelSpec,
    pub inputs: Vec<DVector<f64>>,
    pub measurements: Vec<DVector<f64>>,
    pub y: DVector<f64>,
    pub noise: NoiseModel,
    pub gamma_f: f64,
}

impl Problem {
    pub fn new(
        kernel: KernelSpec,
        inputs: Vec<DVector<f64>>,
        measurements: Vec<DVector<f64>>,
        y: DVector<f64>,
        noise: NoiseModel,
        gamma_f: f64,
    ) -> Result<Self> {
        kernel.validate()?;
        let n = inputs.len();
        if measurements.len() != n {
            return Err(Error::InvalidProblem {
                reason: format!(
                    "{} inputs but {} measurement directions",
                    n,
                    measurements.len()
                ),
            });
        }
        if y.len() != n {
            return Err(Error::InvalidProblem {
                reason: format!("{} inputs but {} observations", n, y.len()),
            });
        }
        if noise.n() != n {
            return Err(Error::InvalidProblem {
                reason: format!(
                    "noise model covers {} measurements, problem has {}",
                    noise.n(),
                    n
                ),
            });
        }
        if gamma_f <= 0.0 || !gamma_f.is_finite() {
            return Err(Error::NonPositiveBound { value: gamma_f });
        }
        let n_f = kernel.n_f();
        for c in &measurements {
            if c.len() != n_f {
                return Err(Error::InvalidProblem {
                    reason: format!(
                        "measurement direction of length {}, kernel has {} outputs",
                        c.len(),
                        n_f
                    ),
                });
            }
        }
        if let Some(first) = inputs.first() {
            let n_x = first.len();
            if n_x == 0 {
                return Err(Error::InvalidProblem {
                    reason: "inputs must have at least one coordinate".into(),
                });
            }
            for x in &inputs {
                if x.len() != n_x {
                    return Err(Error::InvalidProblem {
                        reason: "inconsistent input dimensions".into(),
                    });
                }
            }
        }
        Ok(Problem {
            kernel,
            inputs,
            measurements,
            y,
            noise,
            gamma_f,
        })
    }

    pub fn n(&self) -> usize {
        self.inputs.len()
    }

    pub fn n_f(&self) -> usize {
        self.kernel.n_f()
    }

    pub fn n_x(&self) -> Option<usize> {
        self.inputs.first().map(|x| x.len())
    }

    pub fn n_con(&self) -> usize {
        self.noise.n_con()
    }
}

/// One bound query: a test input and a direction `h` in output space. The
/// quantity being bounded is `h^T f(x*)`.
#[derive(Debug, Clone)]
pub struct BoundQuery {
    pub x_star: DVector<f64>,
    pub direction: DVector<f64>,
}

impl BoundQuery {
    pub fn new(x_star: DVector<f64>, direction: DVector<f64>) -> Self {
        BoundQuery { x_star, direction }
    }

    /// Checks the query against a problem; optimization requires a nonzero
    /// direction while plain evaluation does not.
    pub fn validate(&self, problem: &Problem, require_nonzero: bool) -> Result<()> {
        if let Some(n_x) = problem.n_x() {
            if self.x_star.len() != n_x {
                return Err(Error::DimensionMismatch {
                    context: "query input",
                    expected: n_x,
                    got: self.x_star.len(),
                });
            }
        }
        if self.direction.len() != problem.n_f() {
            return Err(Error::DimensionMismatch {
                context: "query direction",
                expected: problem.n_f(),
                got: self.direction.len(),
            });
        }
        if require_nonzero && self.direction.norm() == 0.0 {
            return Err(Error::InvalidProblem {
                reason: "query direction must be nonzero".into(),
            });
        }
        Ok(())
    }
}
