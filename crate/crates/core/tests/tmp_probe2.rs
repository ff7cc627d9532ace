use nalgebra::DVector;
use rkhs_bounds::dual::{optimize_bound, OptimizerOptions, QueryContext};
use rkhs_bounds::gp::ProblemGeometry;
use rkhs_bounds::oracle::{solve_primal, FeatureWorkspace, PrimalOptions};
use rkhs_bounds::scenarios::{gen_quadrotor, QuadrotorConfig};
use rkhs_bounds::BoundQuery;

#[test]
fn probe_audit_point() {
    let config = QuadrotorConfig {
        n_data: 100,
        seed: 2,
        ..QuadrotorConfig::default()
    };
    let generated = gen_quadrotor(&config).unwrap();
    let problem = &generated.problem;
    let angle = 2.0 * std::f64::consts::PI * 2.0 / 20.0;
    let x_star = DVector::from_element(1, angle);
    let mut h = DVector::zeros(2);
    h[0] = 1.0;
    let query = BoundQuery::new(x_star.clone(), h.clone());

    let geom = ProblemGeometry::new(problem).unwrap();
    let ctx = QueryContext::new(&geom, &query).unwrap();
    let prior = ctx.prior_bound(problem.gamma_f);

    let tight = optimize_bound(problem, &query, &OptimizerOptions::default()).unwrap();
    let adam = optimize_bound(problem, &query, &OptimizerOptions::fixed_budget()).unwrap();
    eprintln!(
        "prior {prior:.6}; optimized {:.9} ({:?}, {} iters); fixed-budget {:.9} ({:?})",
        tight.value, tight.status, tight.iterations, adam.value, adam.status
    );

    for (rank_tol, max_iters) in [(1e-10, 300usize), (1e-10, 3000), (0.0, 300), (1e-12, 3000)] {
        let ws = FeatureWorkspace::new(problem, &x_star, rank_tol).unwrap();
        let opts = PrimalOptions {
            max_iters,
            tol: 1e-10,
        };
        match solve_primal(&ws, &h, &opts) {
            Ok(sol) => eprintln!(
                "rank_tol {rank_tol:.0e} iters {max_iters} (r = {}): value {:.9} kkt {:.3e} took {} converged {}",
                ws.r(),
                sol.value,
                sol.kkt_residual,
                sol.iterations,
                sol.converged
            ),
            Err(e) => eprintln!("rank_tol {rank_tol:.0e} iters {max_iters}: error {e}"),
        }
    }
}
