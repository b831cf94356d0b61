use fedlab::problems::{
    delta_exact_quadratic, delta_sampled, dirichlet_assignment, gen_quadratic_problem,
    parse_libsvm, to_libsvm_string, QuadraticParams, SparseDataset, SparseRow, SpectrumSpec,
};
use fedlab::RandomStream;
use proptest::prelude::*;

fn spectrum() -> impl Strategy<Value = SpectrumSpec> {
    (10.0f64..100.0, 0.0f64..1.0, 0.0f64..1.0).prop_map(|(max_norm, lo, d)| SpectrumSpec {
        max_norm,
        min_eig: lo * max_norm / 4.0,
        target_delta: d * max_norm / 4.0,
    })
}

fn dataset() -> impl Strategy<Value = SparseDataset> {
    let row = (
        any::<bool>(),
        proptest::collection::btree_map(0usize..12, -1e3f64..1e3, 0..6),
    )
        .prop_map(|(positive, entries)| SparseRow {
            label: if positive { 1.0 } else { -1.0 },
            indices: entries.keys().copied().collect(),
            values: entries.values().copied().collect(),
        });
    proptest::collection::vec(row, 1..30).prop_map(|rows| {
        let dim = rows
            .iter()
            .filter_map(|r| r.indices.last())
            .max()
            .map_or(0, |j| j + 1);
        SparseDataset { rows, dim }
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn exact_delta_a_never_exceeds_the_norm_formula(
        s in spectrum(),
        n in 1usize..6,
        m in 1usize..4,
        seed in 0u64..10_000,
    ) {
        let inst = gen_quadratic_problem(&QuadraticParams::new(n, m, 12, s, 0.0), seed).unwrap();
        let q = inst.dissimilarity;
        prop_assert!(q.exact.delta_a <= q.paper_formula.delta_a + 1e-12 * (1.0 + q.paper_formula.delta_a));
        prop_assert!(q.exact.delta_a >= 0.0 && q.exact.delta_a <= q.exact.delta_b + 1e-12);
        let again = delta_exact_quadratic(&inst.specs).unwrap();
        prop_assert_eq!(again.exact, q.exact);
    }

    #[test]
    fn generated_eigenvalues_respect_the_declared_floor(
        s in spectrum(),
        seed in 0u64..10_000,
    ) {
        let inst = gen_quadratic_problem(&QuadraticParams::new(3, 3, 10, s, 0.0), seed).unwrap();
        for spec in &inst.specs {
            for a in &spec.matrices {
                let eig = a.eigenvalues();
                prop_assert!(eig.min() >= s.min_eig - 1e-12, "min eigenvalue {} < {}", eig.min(), s.min_eig);
                prop_assert!(eig.amax() <= s.max_norm + 1e-12);
            }
        }
    }

    #[test]
    fn sampled_delta_is_a_lower_estimate(
        s in spectrum(),
        seed in 0u64..10_000,
        pairs in 1usize..60,
    ) {
        let inst = gen_quadratic_problem(&QuadraticParams::new(4, 2, 8, s, 0.0), seed).unwrap();
        let est = delta_sampled(&inst.problem, pairs, &RandomStream::new(seed));
        let exact = inst.dissimilarity.exact;
        prop_assert!(est.delta_a <= exact.delta_a + 1e-9);
        prop_assert!(est.delta_b <= exact.delta_b + 1e-9);
    }

    #[test]
    fn dirichlet_parts_are_disjoint_and_cover(
        data in dataset(),
        n in 1usize..5,
        alpha in 0.05f64..5.0,
        seed in any::<u64>(),
    ) {
        prop_assume!(data.len() >= n);
        match dirichlet_assignment(&data, n, alpha, &RandomStream::new(seed)) {
            Ok(assignment) => {
                prop_assert_eq!(assignment.len(), data.len());
                prop_assert!(assignment.iter().all(|&c| c < n));
                for c in 0..n {
                    prop_assert!(assignment.contains(&c), "client {} is empty", c);
                }
            }
            Err(e) => prop_assert!(matches!(e, fedlab::Error::Config(_)), "{e}"),
        }
    }

    #[test]
    fn libsvm_serialization_round_trips(data in dataset()) {
        let text = to_libsvm_string(&data);
        let parsed = parse_libsvm(&text).unwrap();
        prop_assert_eq!(parsed.rows, data.rows);
    }
}
