//! JSON problem-file schema and serializable report types.
//!
//! A problem file carries `{kernel, inputs, measurements, y, noise, gamma_f}`
//! and round-trips losslessly through [`ProblemSchema::from_problem`] /
//! [`ProblemSchema::to_problem`].

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use rkhs_bounds::noise::NoiseKind;
use rkhs_bounds::{Error, KernelSpec, NoiseModel, Problem, Result};

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum KernelSchema {
    SquaredExponential { lengthscale: f64 },
    Periodic { lengthscale: f64, period: f64 },
    Monomials { degree: u32 },
    Diagonal { components: Vec<KernelSchema> },
}

impl KernelSchema {
    pub fn to_spec(&self) -> KernelSpec {
        match self {
            KernelSchema::SquaredExponential { lengthscale } => KernelSpec::SquaredExponential {
                lengthscale: *lengthscale,
            },
            KernelSchema::Periodic {
                lengthscale,
                period,
            } => KernelSpec::Periodic {
                lengthscale: *lengthscale,
                period: *period,
            },
            KernelSchema::Monomials { degree } => KernelSpec::Monomials { degree: *degree },
            KernelSchema::Diagonal { components } => KernelSpec::Diagonal {
                components: components.iter().map(KernelSchema::to_spec).collect(),
            },
        }
    }

    pub fn from_spec(spec: &KernelSpec) -> Self {
        match spec {
            KernelSpec::SquaredExponential { lengthscale } => KernelSchema::SquaredExponential {
                lengthscale: *lengthscale,
            },
            KernelSpec::Periodic {
                lengthscale,
                period,
            } => KernelSchema::Periodic {
                lengthscale: *lengthscale,
                period: *period,
            },
            KernelSpec::Monomials { degree } => KernelSchema::Monomials { degree: *degree },
            KernelSpec::Diagonal { components } => KernelSchema::Diagonal {
                components: components.iter().map(KernelSchema::from_spec).collect(),
            },
        }
    }
}

/// One quadratic noise constraint `w^T P w < gamma^2`, stored as the `P`
/// block restricted to the measurement indices it touches.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ConstraintSchema {
    pub support: Vec<usize>,
    pub block: Vec<Vec<f64>>,
    pub gamma: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum NoiseSchema {
    /// `|w_j| < bounds[j]` per measurement.
    Pointwise { bounds: Vec<f64> },
    /// Single constraint `w^T P w < gamma^2` with `P` positive definite.
    Energy { matrix: Vec<Vec<f64>>, gamma: f64 },
    /// Arbitrary list of PSD constraints whose matrices sum to a PD matrix.
    General { constraints: Vec<ConstraintSchema> },
}

fn to_dmatrix(rows: &[Vec<f64>], context: &'static str) -> Result<DMatrix<f64>> {
    let r = rows.len();
    let c = rows.first().map_or(0, Vec::len);
    for row in rows {
        if row.len() != c {
            return Err(Error::InvalidProblem {
                reason: format!("{context}: ragged matrix rows"),
            });
        }
    }
    Ok(DMatrix::from_fn(r, c, |i, j| rows[i][j]))
}

fn from_dmatrix(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

impl NoiseSchema {
    pub fn to_model(&self, n: usize) -> Result<NoiseModel> {
        match self {
            NoiseSchema::Pointwise { bounds } => NoiseModel::pointwise(bounds),
            NoiseSchema::Energy { matrix, gamma } => {
                NoiseModel::energy(to_dmatrix(matrix, "energy noise matrix")?, *gamma)
            }
            NoiseSchema::General { constraints } => {
                let mut parts = Vec::with_capacity(constraints.len());
                for c in constraints {
                    let k = c.support.len();
                    let block = to_dmatrix(&c.block, "noise constraint block")?;
                    if block.nrows() != k || block.ncols() != k {
                        return Err(Error::DimensionMismatch {
                            context: "noise constraint block",
                            expected: k,
                            got: block.nrows(),
                        });
                    }
                    let mut dense = DMatrix::zeros(n, n);
                    for (a, &i) in c.support.iter().enumerate() {
                        for (b, &j) in c.support.iter().enumerate() {
                            if i >= n || j >= n {
                                return Err(Error::InvalidProblem {
                                    reason: format!(
                                        "noise constraint support index {} out of range (N = {n})",
                                        i.max(j)
                                    ),
                                });
                            }
                            dense[(i, j)] = block[(a, b)];
                        }
                    }
                    parts.push((dense, c.gamma));
                }
                NoiseModel::general(n, parts)
            }
        }
    }

    pub fn from_model(model: &NoiseModel) -> Self {
        match model.kind() {
            NoiseKind::Pointwise => NoiseSchema::Pointwise {
                bounds: (0..model.n_con()).map(|j| model.gamma(j)).collect(),
            },
            NoiseKind::Energy => {
                let c = &model.constraints()[0];
                NoiseSchema::Energy {
                    matrix: from_dmatrix(&c.dense(model.n())),
                    gamma: c.gamma(),
                }
            }
            NoiseKind::General => NoiseSchema::General {
                constraints: model
                    .constraints()
                    .iter()
                    .map(|c| ConstraintSchema {
                        support: c.support().to_vec(),
                        block: from_dmatrix(c.block()),
                        gamma: c.gamma(),
                    })
                    .collect(),
            },
        }
    }
}

/// On-disk problem description.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ProblemSchema {
    pub kernel: KernelSchema,
    pub inputs: Vec<Vec<f64>>,
    pub measurements: Vec<Vec<f64>>,
    pub y: Vec<f64>,
    pub noise: NoiseSchema,
    pub gamma_f: f64,
}

impl ProblemSchema {
    pub fn to_problem(&self) -> Result<Problem> {
        let inputs: Vec<DVector<f64>> = self
            .inputs
            .iter()
            .map(|x| DVector::from_row_slice(x))
            .collect();
        let measurements: Vec<DVector<f64>> = self
            .measurements
            .iter()
            .map(|c| DVector::from_row_slice(c))
            .collect();
        let y = DVector::from_row_slice(&self.y);
        let noise = self.noise.to_model(inputs.len())?;
        Problem::new(
            self.kernel.to_spec(),
            inputs,
            measurements,
            y,
            noise,
            self.gamma_f,
        )
    }

    pub fn from_problem(problem: &Problem) -> Self {
        ProblemSchema {
            kernel: KernelSchema::from_spec(&problem.kernel),
            inputs: problem.inputs.iter().map(|x| x.iter().cloned().collect()).collect(),
            measurements: problem
                .measurements
                .iter()
                .map(|c| c.iter().cloned().collect())
                .collect(),
            y: problem.y.iter().cloned().collect(),
            noise: NoiseSchema::from_model(&problem.noise),
            gamma_f: problem.gamma_f,
        }
    }
}

/// `bound --json` output: everything the invoked method can report; fields
/// inapplicable to a method are omitted.
#[derive(Debug, Clone, Serialize)]
pub struct BoundReport {
    pub method: String,
    pub value: f64,
    pub prior: f64,
    pub converged: bool,
    pub status: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub iterations: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dir_variance: Option<f64>,
    /// Lower envelope edge, for methods that produce two-sided envelopes.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lower: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub upper: Option<f64>,
}
