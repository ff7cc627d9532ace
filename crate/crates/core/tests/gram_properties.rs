//! Structural properties of kernel evaluations and Gram assembly.

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rkhs_bounds::kernels::{
    assemble_gram, assemble_training_gram, factorize_gram, KernelSpec,
};
use rkhs_bounds::linalg;

fn se_gram(points: &[f64], lengthscale: f64) -> DMatrix<f64> {
    let kernel = KernelSpec::SquaredExponential { lengthscale };
    let inputs: Vec<DVector<f64>> = points.iter().map(|&x| DVector::from_element(1, x)).collect();
    let ones = vec![DVector::from_element(1, 1.0); points.len()];
    assemble_training_gram(&kernel, &inputs, &ones).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn squared_exponential_grams_are_positive_semidefinite(
        points in proptest::collection::vec(-5.0f64..5.0, 1..7),
        lengthscale in 0.3f64..3.0,
    ) {
        let gram = se_gram(&points, lengthscale);
        let min = linalg::min_eigenvalue(&gram);
        prop_assert!(min >= -1e-9 * gram.trace().max(1.0), "min eigenvalue {min}");
    }

    #[test]
    fn gram_factor_reconstructs_the_matrix(
        points in proptest::collection::vec(-4.0f64..4.0, 1..6),
    ) {
        let kernel = KernelSpec::default_periodic();
        let inputs: Vec<DVector<f64>> = points
            .iter()
            .map(|&x| DVector::from_element(1, x))
            .collect();
        let ones = vec![DVector::from_element(1, 1.0); points.len()];
        let x_star = DVector::from_element(1, 0.25);
        let gram = assemble_gram(&kernel, &inputs, &ones, &x_star).unwrap();
        let features = factorize_gram(&gram, 1e-12).unwrap();
        let rebuilt = &features.phi * features.phi.transpose();
        let err = (&rebuilt - &gram.k_full).amax();
        prop_assert!(err <= 1e-8 * (1.0 + gram.k_full.amax()), "reconstruction error {err}");
    }
}

#[test]
fn kernel_blocks_are_symmetric_in_arguments() {
    let kernel = KernelSpec::Diagonal {
        components: vec![
            KernelSpec::SquaredExponential { lengthscale: 0.9 },
            KernelSpec::Periodic {
                lengthscale: 1.1,
                period: 3.0,
            },
        ],
    };
    let a = DVector::from_element(1, 0.4);
    let b = DVector::from_element(1, -1.3);
    let kab = kernel.eval(&a, &b).unwrap();
    let kba = kernel.eval(&b, &a).unwrap();
    assert!((kab - kba.transpose()).amax() <= 1e-14);
}

#[test]
fn monomial_feature_map_realizes_the_kernel() {
    let kernel = KernelSpec::Monomials { degree: 3 };
    let points = [
        DVector::from_row_slice(&[-1.0, 0.3]),
        DVector::from_row_slice(&[0.5, 2.0]),
        DVector::from_row_slice(&[1.2, -0.7]),
    ];
    for a in &points {
        for b in &points {
            let k = kernel.eval(a, b).unwrap()[(0, 0)];
            let pa = kernel.feature_map(a).unwrap();
            let pb = kernel.feature_map(b).unwrap();
            let via_features = (&pa * pb.transpose())[(0, 0)];
            let expected = (1.0 + a.dot(b)).powi(3);
            assert!((k - expected).abs() <= 1e-10 * (1.0 + expected.abs()));
            assert!((via_features - expected).abs() <= 1e-10 * (1.0 + expected.abs()));
        }
    }
}

#[test]
fn degenerate_grams_factor_with_reduced_rank() {
    // Duplicated inputs give a rank-deficient Gram; factorization must not
    // fail and the factor must still reconstruct it.
    let kernel = KernelSpec::default_se();
    let inputs = vec![
        DVector::from_element(1, 0.7),
        DVector::from_element(1, 0.7),
        DVector::from_element(1, -0.2),
    ];
    let ones = vec![DVector::from_element(1, 1.0); 3];
    let x_star = DVector::from_element(1, 0.0);
    let gram = assemble_gram(&kernel, &inputs, &ones, &x_star).unwrap();
    let features = factorize_gram(&gram, 1e-10).unwrap();
    assert!(features.r < gram.k_full.nrows());
    let rebuilt = &features.phi * features.phi.transpose();
    assert!((rebuilt - &gram.k_full).amax() <= 1e-8);
}
