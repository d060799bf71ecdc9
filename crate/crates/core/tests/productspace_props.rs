use firmlab_core::linalg::{block_sum, diagonal_embed};
use firmlab_core::operators::zoo::random_weights;
use firmlab_core::operators::Sampler;
use firmlab_core::productspace::{
    apply_l, apply_m, apply_m_dagger, as_matrix, check_q_firmly_nonexpansive_in_y,
    check_q_nonexpansive_in_x, penrose_residuals, project_diagonal_perp, pseudoinverse_oracle,
    rank_factorization, BlockLinearOp, BlockOpKind,
};
use firmlab_core::{Point, ProductPoint, Weights};
use proptest::prelude::*;

fn product(m: usize, d: usize) -> impl Strategy<Value = ProductPoint> {
    prop::collection::vec(-10.0..10.0f64, m * d)
        .prop_map(move |flat| ProductPoint::from_flat(m, d, &flat).unwrap())
}

fn any_product() -> impl Strategy<Value = ProductPoint> {
    (2usize..=6, 1usize..=3).prop_flat_map(|(m, d)| product(m, d))
}

fn dist(a: &ProductPoint, b: &ProductPoint) -> f64 {
    (a - b).norm_x()
}

proptest! {
    #[test]
    fn m_after_l_is_identity_on_diagonal_complement(p in any_product()) {
        let y = project_diagonal_perp(&p);
        let ly = apply_l(&y).unwrap();
        prop_assert!(dist(&apply_m(&ly), &y) <= 1e-12);
        prop_assert!(block_sum(&ly).norm() <= 1e-12);
    }

    #[test]
    fn m_dagger_m_is_projection_onto_diagonal_complement(p in any_product()) {
        let target = project_diagonal_perp(&p);
        prop_assert!(dist(&apply_m_dagger(&apply_m(&p)), &target) <= 1e-10);
        prop_assert!(dist(&apply_m(&apply_m_dagger(&p)), &target) <= 1e-10);
    }

    #[test]
    fn m_dagger_is_l_after_projection(p in any_product()) {
        let via_l = apply_l(&project_diagonal_perp(&p)).unwrap();
        prop_assert!(dist(&apply_m_dagger(&p), &via_l) <= 1e-10);
    }

    #[test]
    fn m_annihilates_the_diagonal(x in prop::collection::vec(-10.0..10.0f64, 1..=3), m in 2usize..=6) {
        let p = diagonal_embed(&Point::new(x).unwrap(), m).unwrap();
        prop_assert_eq!(apply_m(&p).norm_x(), 0.0);
    }

    #[test]
    fn q_is_firmly_nonexpansive_in_y(seed in any::<u64>(), m in 2usize..=6, d in 1usize..=3) {
        let mut s = Sampler::seeded(seed);
        let w = random_weights(&mut s, m);
        prop_assert!(check_q_firmly_nonexpansive_in_y(&w, d, &mut s, 200, 1e-9).passed());
    }

    #[test]
    fn q_is_nonexpansive_in_x_iff_uniform(seed in any::<u64>(), m in 2usize..=6, d in 1usize..=3) {
        let mut s = Sampler::seeded(seed);
        let w = random_weights(&mut s, m);
        let v = check_q_nonexpansive_in_x(&w, d).unwrap();
        prop_assert_eq!(v.nonexpansive, w.is_uniform(1e-12));
        prop_assert!(check_q_nonexpansive_in_x(&Weights::uniform(m).unwrap(), d).unwrap().nonexpansive);
    }
}

#[test]
fn closed_form_m_dagger_matches_oracle() {
    for m in 2..=6 {
        for d in 1..=3 {
            let a = as_matrix(&BlockLinearOp::new(BlockOpKind::M, m, d).unwrap()).unwrap();
            let closed = as_matrix(&BlockLinearOp::new(BlockOpKind::MDagger, m, d).unwrap()).unwrap();
            let oracle = pseudoinverse_oracle(&a).unwrap();
            assert!((&closed - &oracle).amax() <= 1e-10, "m={m} d={d}");
            assert!(penrose_residuals(&a, &closed).iter().all(|r| *r <= 1e-9), "m={m} d={d}");
            assert_eq!(rank_factorization(&a).unwrap().rank(), (m - 1) * d);

            // an SVD-based pseudoinverse as a second opinion on the oracle
            let svd = a.clone().pseudo_inverse(1e-10).unwrap();
            assert!((&svd - &oracle).amax() <= 1e-10, "m={m} d={d}");
        }
    }
}

#[test]
fn projector_matrices_are_symmetric_and_idempotent() {
    for m in 2..=5 {
        for kind in [BlockOpKind::PDelta, BlockOpKind::PDeltaPerp] {
            let p = as_matrix(&BlockLinearOp::new(kind, m, 2).unwrap()).unwrap();
            assert!((&p - p.transpose()).amax() <= 1e-15);
            assert!((&p * &p - &p).amax() <= 1e-14);
        }
    }
}
