use proptest::prelude::*;

use currentcoh::gradedbasis::{BlockKey, ComplexKind, Sector};
use currentcoh::koszul::{cohomology_table, dbar_squares_to_zero, Bounds};
use currentcoh::liealg::{build_algebra, AlgebraName};
use currentcoh::macdonald::{super_generators, GradedSeries};

fn kind_strategy() -> impl Strategy<Value = ComplexKind> {
    prop_oneof![
        Just(ComplexKind::SuperRelative),
        Just(ComplexKind::SuperAbsolute),
        (1usize..4).prop_map(ComplexKind::Truncated),
        Just(ComplexKind::Iwahori),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn differential_squares_to_zero(kind in kind_strategy(), d in 0usize..4, p in 0usize..3, w in 0usize..4, gl in any::<bool>()) {
        let name = if gl { AlgebraName::gl(2) } else { AlgebraName::sl(2) };
        let alg = build_algebra(name).unwrap();
        let p = if kind.has_sigma() { p } else { 0 };
        prop_assert!(dbar_squares_to_zero(&alg, kind, BlockKey::new(d, p, w), Sector::Full));
    }

    #[test]
    fn predicted_series_is_multiplicative(split in 0usize..10, max_d in 0usize..3, max_p in 0usize..4, max_w in 0usize..4) {
        let alg = build_algebra(AlgebraName::sl(2)).unwrap();
        let b = Bounds::new(max_d, max_p, max_w);
        let gens = super_generators(&alg, max_w);
        let (l, r) = gens.split_at(split.min(gens.len()));
        let whole = GradedSeries::from_generators(b, &gens).unwrap();
        let prod = GradedSeries::from_generators(b, l).unwrap().multiply(&GradedSeries::from_generators(b, r).unwrap());
        prop_assert_eq!(whole, prod);
    }
}

#[test]
fn tables_are_deterministic_and_euler_consistent() {
    let alg = build_algebra(AlgebraName::gl(2)).unwrap();
    let b = Bounds::new(3, 2, 3); // d <= w covers every nonzero cochain
    let t1 = cohomology_table(&alg, ComplexKind::SuperRelative, b);
    let t2 = cohomology_table(&alg, ComplexKind::SuperRelative, b);
    assert_eq!(t1, t2);
    assert!(t1.euler_consistent());
}
