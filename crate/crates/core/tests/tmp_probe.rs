use nalgebra::DVector;
use rkhs_bounds::oracle::{solve_primal, FeatureWorkspace, PrimalOptions};
use rkhs_bounds::scenarios::{gen_quadrotor, QuadrotorConfig};
use rkhs_bounds::{KernelSpec, NoiseModel, Problem};

#[test]
fn probe_slow_tail() {
    let config = QuadrotorConfig {
        n_data: 4,
        seed: 3,
        ..QuadrotorConfig::default()
    };
    let generated = gen_quadrotor(&config).unwrap();
    let x_star = DVector::from_element(1, 0.8);
    let mut h = DVector::zeros(2);
    h[0] = 1.0;
    for rank_tol in [0.0, 1e-14, 1e-12, 1e-10] {
        let ws = FeatureWorkspace::new(&generated.problem, &x_star, rank_tol).unwrap();
        let opts = PrimalOptions {
            max_iters: 300,
            tol: 1e-10,
        };
        let sol = solve_primal(&ws, &h, &opts).unwrap();
        eprintln!(
            "rank_tol {rank_tol:.0e} (r = {}): value {:.15} kkt {:.3e} took {} converged {}",
            ws.r(),
            sol.value,
            sol.kkt_residual,
            sol.iterations,
            sol.converged
        );
    }
}

#[test]
fn probe_infeasible_detection() {
    let problem = Problem::new(
        KernelSpec::SquaredExponential { lengthscale: 1.0 },
        vec![DVector::from_element(1, 0.0), DVector::from_element(1, 0.0)],
        vec![DVector::from_element(1, 1.0), DVector::from_element(1, 1.0)],
        DVector::from_vec(vec![1.0, -1.0]),
        NoiseModel::pointwise(&[0.1, 0.1]).unwrap(),
        0.5,
    )
    .unwrap();
    let h = DVector::from_element(1, 1.0);
    for rank_tol in [0.0, 1e-10] {
        let ws =
            FeatureWorkspace::new(&problem, &DVector::from_element(1, 0.0), rank_tol).unwrap();
        let opts = PrimalOptions {
            max_iters: 300,
            tol: 1e-10,
        };
        match solve_primal(&ws, &h, &opts) {
            Ok(sol) => eprintln!(
                "rank_tol {rank_tol:.0e} (r = {}): value {:.6} kkt {:.3e} took {} converged {} lambda {:?}",
                ws.r(),
                sol.value,
                sol.kkt_residual,
                sol.iterations,
                sol.converged,
                sol.lambda
            ),
            Err(e) => {
                eprintln!("rank_tol {rank_tol:.0e} (r = {}): error {e}", ws.r());
            }
        }
    }
}
