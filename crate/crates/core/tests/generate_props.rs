mod common;

use common::{specs, unitary_defect};
use mpx_core::{
    generate, haar_unitary, projectors, structure_report_x, structure_report_y, svd, Error, Flavor, InstanceSpec,
    Tolerance,
};
use proptest::prelude::*;

fn cond(a: &mpx_core::CMatrix) -> f64 {
    svd(a, None).unwrap().condition()
}

fn tol() -> Tolerance {
    Tolerance::new(1e-10)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn generation_is_deterministic(spec in specs(Flavor::A1A2, 10, 1e3)) {
        prop_assert_eq!(generate(&spec).unwrap(), generate(&spec).unwrap());
    }

    #[test]
    fn a1a2_contract(spec in specs(Flavor::A1A2, 16, 1e3)) {
        let inst = generate(&spec).unwrap();
        let f = &inst.n_svd_true;
        prop_assert!((&f.reconstruct() - &inst.n_matrix).frobenius_norm() <= 1e-13);
        prop_assert!(cond(&inst.x) <= 1e4 && cond(&inst.y) <= 1e4);
        prop_assert!(structure_report_x(&inst.x, f, tol()).unwrap().satisfied);
        prop_assert!(structure_report_y(&inst.y, f, tol()).unwrap().satisfied);
        let s = svd(&inst.n_matrix, None).unwrap();
        for (a, b) in s.sigma.iter().zip(&f.sigma) {
            prop_assert!((a - b).abs() <= 1e-12);
        }
        if spec.r > 0 {
            prop_assert_eq!(f.sigma[0], 1.0);
        }
        if spec.r > 1 {
            prop_assert!((f.sigma[spec.r - 1] * spec.sigma_cond - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn violate_fails_only_the_target(spec in specs(Flavor::ViolateA2, 12, 1e2)) {
        match generate(&spec) {
            Ok(inst) => {
                let f = &inst.n_svd_true;
                let ry = structure_report_y(&inst.y, f, tol()).unwrap();
                prop_assert!(!ry.satisfied);
                prop_assert!(ry.off_block_norm >= 0.1 * inst.y.frobenius_norm());
                prop_assert!(structure_report_x(&inst.x, f, tol()).unwrap().satisfied);
            }
            Err(e) => {
                prop_assert!(matches!(e, Error::Infeasible(_)));
                prop_assert!(spec.r == 0 || spec.r == spec.n);
            }
        }
    }

    #[test]
    fn fixing_flavors_hold(spec in specs(Flavor::ProjectorFix, 12, 1e3)) {
        let inst = generate(&spec).unwrap();
        let p = projectors(&inst.n_svd_true);
        prop_assert!((&(&inst.x * &p.e_n) - &p.e_n).frobenius_norm() <= 1e-12);
        prop_assert!((&(&p.f_n * &inst.y) - &p.f_n).frobenius_norm() <= 1e-12);

        let h = generate(&InstanceSpec { flavor: Flavor::HermitianFix, ..spec }).unwrap();
        let p = projectors(&h.n_svd_true);
        prop_assert!((&h.x * &p.e_n).hermitian_defect().unwrap() <= 1e-12 * h.x.frobenius_norm());
        prop_assert!((&p.f_n * &h.y).hermitian_defect().unwrap() <= 1e-12 * h.y.frobenius_norm());
    }

    #[test]
    fn haar_is_unitary(dim in 1usize..=20, seed in any::<u64>()) {
        prop_assert!(unitary_defect(&haar_unitary(dim, seed)) <= 1e-12 * dim as f64);
    }
}
