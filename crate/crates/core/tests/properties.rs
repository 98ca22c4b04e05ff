use edmkit::decomp::ErrorAnalysis;
use edmkit::linalg::{edm_status, q_decompose, symmetric_eigen};
use edmkit::lower::{embed_projection, project_symmetric_onto_kappa};
use edmkit::{cmds, project_onto_kappa, SquaredDissimilarityMatrix};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn hollow(n: usize) -> impl Strategy<Value = SquaredDissimilarityMatrix<f64>> {
    prop::collection::vec(-5.0f64..10.0, n * n).prop_map(move |v| {
        let a = DMatrix::from_vec(n, n, v);
        let mut s = (&a + a.transpose()) * 0.5;
        s.fill_diagonal(0.0);
        SquaredDissimilarityMatrix::new(s).unwrap()
    })
}

fn hollow_with_rank() -> impl Strategy<Value = (SquaredDissimilarityMatrix<f64>, usize)> {
    (3usize..12).prop_flat_map(|n| (hollow(n), 1..n))
}

fn scale(d: &SquaredDissimilarityMatrix<f64>) -> f64 {
    1.0 + d.frobenius_norm().powi(2)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn decomposition_predicts_cmds_error((d, r) in hollow_with_rank()) {
        let predicted = ErrorAnalysis::new(&d).unwrap().at(r).unwrap().total;
        let measured = cmds(&d, r).unwrap().sstress(d.matrix());
        prop_assert!((predicted - measured).abs() <= 1e-7 * scale(&d));
    }

    #[test]
    fn projection_lands_in_kappa((d, r) in hollow_with_rank()) {
        let p = project_onto_kappa(&d, r).unwrap();
        prop_assert!(p.d_l.trace().abs() <= 1e-9 * scale(&d));
        let spec = symmetric_eigen(&q_decompose(&p.d_l).unwrap().d_hat).unwrap();
        let eps = 1e-8 * scale(&d).sqrt();
        prop_assert!(spec.eigenvalues.iter().all(|&l| l <= eps));
        prop_assert!(spec.eigenvalues.iter().filter(|&&l| l < -eps).count() <= r);
        prop_assert!(((&p.d_l - d.matrix()).norm_squared() - p.objective).abs() <= 1e-8 * scale(&d));
    }

    #[test]
    fn projection_is_idempotent((d, r) in hollow_with_rank()) {
        let p = project_onto_kappa(&d, r).unwrap();
        let again = project_symmetric_onto_kappa(&p.d_l, r).unwrap();
        prop_assert!((&again.d_l - &p.d_l).amax() <= 1e-8 * scale(&d).sqrt());
    }

    #[test]
    fn bound_below_both_embeddings((d, r) in hollow_with_rank()) {
        let p = project_onto_kappa(&d, r).unwrap();
        let lc = embed_projection(&p, r).unwrap();
        let c = cmds(&d, r).unwrap();
        let tol = 1e-8 * scale(&d);
        prop_assert!(p.objective <= c.sstress(d.matrix()) + tol);
        prop_assert!(p.objective <= lc.sstress(d.matrix()) + tol);
        prop_assert!(edm_status(&lc.d_cmds).unwrap().is_edm);
    }

    #[test]
    fn single_precision_tracks_double((d, r) in hollow_with_rank()) {
        let d32 = SquaredDissimilarityMatrix::new(d.matrix().map(|x| x as f32)).unwrap();
        let a = project_onto_kappa(&d, r).unwrap().objective;
        let b = project_onto_kappa(&d32, r).unwrap().objective as f64;
        prop_assert!((a - b).abs() <= 1e-3 * scale(&d));
    }
}
