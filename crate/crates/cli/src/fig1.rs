//! Plot data for the illustrative example: the optimized envelope over a
//! test grid, together with the dual curves at the scales that are optimal
//! for the anchor input `x* = 1.5`.
//!
//! The dual curves visualize weak duality: a certificate at any fixed scale
//! vector upper-bounds the optimized envelope everywhere, and touches it at
//! the input those scales were optimized for.

use nalgebra::DVector;

use rkhs_bounds::dual::{
    dual_value, optimize_bound_with_geometry, OptimizerOptions, QueryContext,
};
use rkhs_bounds::gp::ProblemGeometry;
use rkhs_bounds::scenarios::{gen_illustrative, ILLUSTRATIVE_ANCHOR};
use rkhs_bounds::BoundQuery;

use crate::CliError;

/// One grid point of the sweep.
#[derive(Debug, Clone)]
pub struct Fig1Row {
    pub x: f64,
    /// Optimized upper/lower envelope at this input.
    pub upper: f64,
    pub lower: f64,
    /// Certificates at the anchor-optimal scales (fixed across the grid).
    pub dual_upper: f64,
    pub dual_lower: f64,
    /// Generating latent function.
    pub truth: f64,
    /// Scales minimizing the upper/lower bound at this input.
    pub sigma_upper: Vec<f64>,
    pub sigma_lower: Vec<f64>,
}

/// Full sweep result plus the anchor scales the dual curves were frozen at.
#[derive(Debug, Clone)]
pub struct Fig1Data {
    pub rows: Vec<Fig1Row>,
    pub anchor_index: usize,
    pub anchor_sigma_upper: Vec<f64>,
    pub anchor_sigma_lower: Vec<f64>,
}

impl Fig1Data {
    /// Renders the plot-ready CSV. Scale vectors expand into numbered
    /// columns (`sigma_upper_1`, ...).
    pub fn csv(&self) -> String {
        let n_con = self
            .rows
            .first()
            .map(|r| r.sigma_upper.len())
            .unwrap_or(0);
        let mut out = String::from("x,upper,lower,dual_upper,dual_lower,truth");
        for j in 1..=n_con {
            out.push_str(&format!(",sigma_upper_{j}"));
        }
        for j in 1..=n_con {
            out.push_str(&format!(",sigma_lower_{j}"));
        }
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{}",
                r.x, r.upper, r.lower, r.dual_upper, r.dual_lower, r.truth
            ));
            for v in r.sigma_upper.iter().chain(r.sigma_lower.iter()) {
                out.push_str(&format!(",{v}"));
            }
            out.push('\n');
        }
        out
    }
}

/// Runs the illustrative sweep for a given scenario seed.
pub fn emit_fig1_data(seed: u64) -> Result<Fig1Data, CliError> {
    let scenario = gen_illustrative(seed)?;
    let problem = &scenario.generated.problem;
    let truth = &scenario.generated.truth;
    let geom = ProblemGeometry::new(problem)?;
    let opts = OptimizerOptions::default();
    let up = DVector::from_element(1, 1.0);
    let dn = DVector::from_element(1, -1.0);

    let anchor = DVector::from_element(1, ILLUSTRATIVE_ANCHOR);
    let anchor_up =
        optimize_bound_with_geometry(&geom, &BoundQuery::new(anchor.clone(), up.clone()), &opts)?;
    let anchor_dn =
        optimize_bound_with_geometry(&geom, &BoundQuery::new(anchor.clone(), dn.clone()), &opts)?;

    let mut rows = Vec::with_capacity(scenario.grid.len());
    for &x in &scenario.grid {
        let xv = DVector::from_element(1, x);
        let q_up = BoundQuery::new(xv.clone(), up.clone());
        let q_dn = BoundQuery::new(xv.clone(), dn.clone());
        let cert_up = optimize_bound_with_geometry(&geom, &q_up, &opts)?;
        let cert_dn = optimize_bound_with_geometry(&geom, &q_dn, &opts)?;
        let dual_upper = dual_value(&geom, &QueryContext::new(&geom, &q_up)?, &anchor_up.sigma)?;
        let dual_lower = -dual_value(&geom, &QueryContext::new(&geom, &q_dn)?, &anchor_dn.sigma)?;
        rows.push(Fig1Row {
            x,
            upper: cert_up.value,
            lower: -cert_dn.value,
            dual_upper,
            dual_lower,
            truth: truth.eval(&xv)?[0],
            sigma_upper: cert_up.sigma,
            sigma_lower: cert_dn.sigma,
        });
    }
    Ok(Fig1Data {
        rows,
        anchor_index: scenario.anchor_index,
        anchor_sigma_upper: anchor_up.sigma,
        anchor_sigma_lower: anchor_dn.sigma,
    })
}
