use firmlab_core::operators::zoo::{random_firmly_nonexpansive, random_projector, random_weights, reference_zoo};
use firmlab_core::operators::{
    check_firmly_nonexpansive, check_nonexpansive, check_projector_idempotent, minty_graph_sample,
    OperatorKind, Sampler,
};
use firmlab_core::OperatorSpec;
use proptest::prelude::*;

fn random_ops(s: &mut Sampler, d: usize, count: usize) -> Vec<OperatorSpec> {
    (0..count).map(|_| random_firmly_nonexpansive(s, d)).collect()
}

#[test]
fn claimed_zoo_operators_are_firmly_nonexpansive() {
    let mut s = Sampler::seeded(100);
    for e in reference_zoo().into_iter().filter(|e| e.op.claimed_firmly_nonexpansive()) {
        let report = check_firmly_nonexpansive(&e.op, e.dim, &mut s, 10_000, 1e-9).unwrap();
        assert!(report.passed(), "{}: {:?}", e.name, report.worst());
    }
}

#[test]
fn zoo_projectors_are_idempotent() {
    let mut s = Sampler::seeded(101);
    for e in reference_zoo() {
        if matches!(e.op.kind(), OperatorKind::Projector(_)) {
            let report = check_projector_idempotent(&e.op, e.dim, &mut s, 1000, 1e-10).unwrap();
            assert!(report.passed(), "{}: {:?}", e.name, report.worst());
        }
    }
}

#[test]
fn zoo_minty_pairs_are_monotone() {
    let mut s = Sampler::seeded(102);
    for e in reference_zoo().into_iter().filter(|e| e.op.claimed_firmly_nonexpansive()) {
        let pts: Vec<_> = (0..60).map(|_| s.point(e.dim)).collect();
        let sample = minty_graph_sample(&e.op, &pts).unwrap_or_else(|err| panic!("{}: {err}", e.name));
        assert!(sample.min_cross_product().unwrap().2 >= -1e-9, "{}", e.name);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn random_operators_are_firmly_nonexpansive(seed in any::<u64>(), d in 1usize..=4) {
        let mut s = Sampler::seeded(seed);
        let op = random_firmly_nonexpansive(&mut s, d);
        let report = check_firmly_nonexpansive(&op, d, &mut s, 500, 1e-9).unwrap();
        prop_assert!(report.passed(), "{} {:?}", op.label(), report.worst());
    }

    #[test]
    fn random_projectors_are_idempotent(seed in any::<u64>(), d in 1usize..=4) {
        let mut s = Sampler::seeded(seed);
        let op = random_projector(&mut s, d);
        prop_assert!(check_projector_idempotent(&op, d, &mut s, 200, 1e-10).unwrap().passed());
    }

    #[test]
    fn compositions_are_nonexpansive(seed in any::<u64>(), d in 1usize..=4, k in 2usize..=4) {
        let mut s = Sampler::seeded(seed);
        let op = OperatorSpec::compose(random_ops(&mut s, d, k)).unwrap();
        prop_assert!(check_nonexpansive(&op, d, &mut s, 500, 1e-9).unwrap().passed());
    }

    #[test]
    fn convex_combinations_are_firmly_nonexpansive(seed in any::<u64>(), d in 1usize..=4, k in 2usize..=4) {
        let mut s = Sampler::seeded(seed);
        let ops = random_ops(&mut s, d, k);
        let op = OperatorSpec::convex_combine(random_weights(&mut s, k), ops).unwrap();
        prop_assert!(op.claimed_firmly_nonexpansive());
        prop_assert!(check_firmly_nonexpansive(&op, d, &mut s, 500, 1e-9).unwrap().passed());
    }

    #[test]
    fn minty_pairs_are_monotone(seed in any::<u64>(), d in 1usize..=4) {
        let mut s = Sampler::seeded(seed);
        let op = random_firmly_nonexpansive(&mut s, d);
        let pts: Vec<_> = (0..30).map(|_| s.point(d)).collect();
        prop_assert!(minty_graph_sample(&op, &pts).is_ok());
    }

    #[test]
    fn operator_specs_round_trip_through_toml(seed in any::<u64>(), d in 1usize..=3, k in 2usize..=3) {
        let mut s = Sampler::seeded(seed);
        let ops = random_ops(&mut s, d, k);
        let op = OperatorSpec::convex_combine(
            random_weights(&mut s, k),
            vec![OperatorSpec::compose(ops.clone()).unwrap(), ops[0].clone()]
                .into_iter()
                .chain(ops[2..].iter().cloned())
                .collect(),
        )
        .unwrap();
        let text = toml::to_string(&op).unwrap();
        let back: OperatorSpec = toml::from_str(&text).unwrap();
        prop_assert_eq!(back, op);
    }
}

#[test]
fn toml_round_trip_keeps_claim_overrides() {
    let op = OperatorSpec::negation().with_claim(true);
    let text = toml::to_string(&op).unwrap();
    assert!(text.contains("claimed_firmly_nonexpansive = true"));
    let back: OperatorSpec = toml::from_str(&text).unwrap();
    assert!(back.claimed_firmly_nonexpansive());
}

#[test]
fn toml_parsing_validates() {
    let bad = "kind = \"projector\"\nset = { kind = \"ball\", center = [0.0], radius = -1.0 }\n";
    assert!(toml::from_str::<OperatorSpec>(bad).is_err());
    let bad = "kind = \"composition\"\nops = []\n";
    assert!(toml::from_str::<OperatorSpec>(bad).is_err());
    let good = "kind = \"composition\"\n\n[[ops]]\nkind = \"projector\"\nset = { kind = \"epi_exp\" }\n\n\
                [[ops]]\nkind = \"projector\"\nset = { kind = \"coordinate_axis\" }\n";
    let op: OperatorSpec = toml::from_str(good).unwrap();
    assert_eq!(op.dim(), Some(2));
}
