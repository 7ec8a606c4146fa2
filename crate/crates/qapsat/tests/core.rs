mod common;

use common::*;
use proptest::prelude::*;
use qapsat::features::{flow_dominance, sparsity};
use qapsat::generator::rng_from_seed;
use qapsat::{
    clause_lower_bound, generate, ClauseSpec, Error, GeneratorConfig, Permutation, QapInstance, SquareMatrix,
};

#[test]
fn worked_example_identity_objective() {
    let qs = example_sat();
    let id = Permutation::identity(5);
    let (a, b) = (example_flow(), example_distance());
    // 1·B23 + 2·B25 + 2·B32 + 1·B35 + 3·B52 + 1·B53, 1-based.
    let by_hand = b.get(1, 2) + 2 * b.get(1, 4) + 2 * b.get(2, 1) + b.get(2, 4) + 3 * b.get(4, 1) + b.get(4, 2);
    assert_eq!(by_hand, 30);
    assert_eq!(naive_objective(&a, &b, id.as_slice()), 30);
    assert_eq!(qs.instance().evaluate(&id).unwrap(), 30);
}

#[test]
fn worked_example_features() {
    let a = example_flow();
    let vals: Vec<f64> = a.entries().iter().map(|&v| v as f64).collect();
    let mean = vals.iter().sum::<f64>() / 25.0;
    let sd = (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 25.0).sqrt();
    let expected = 100.0 * sd / mean;
    assert!((flow_dominance(&a) - expected).abs() < 1e-9);
    assert!((flow_dominance(&a) - 200.0).abs() < 1e-9);
    assert_eq!(sparsity(&a), 0.76);
}

#[test]
fn feature_edge_cases() {
    assert_eq!(flow_dominance(&SquareMatrix::zeros(4)), 0.0);
    assert_eq!(sparsity(&SquareMatrix::zeros(4)), 1.0);
    let c = SquareMatrix::constant_off_diagonal(2, 7).unwrap();
    assert!((flow_dominance(&c) - 100.0).abs() < 1e-12);
    let full = SquareMatrix::constant_off_diagonal(6, 3).unwrap();
    assert_eq!(sparsity(&full), 6.0 / 36.0);
}

#[test]
fn two_by_two_objective_and_delta() {
    let a = SquareMatrix::from_rows(&[[0, 1], [1, 0]]).unwrap();
    let b = SquareMatrix::from_rows(&[[0, 2], [3, 0]]).unwrap();
    let inst = QapInstance::new(a, b).unwrap();
    let id = Permutation::identity(2);
    assert_eq!(inst.evaluate(&id).unwrap(), 5);
    assert_eq!(inst.delta_swap(&id, 0, 1).unwrap(), 0);
    assert!(matches!(inst.delta_swap(&id, 1, 1), Err(Error::Contract(_))));
    assert!(matches!(
        inst.evaluate(&Permutation::identity(3)),
        Err(Error::Contract(_))
    ));
}

#[test]
fn zero_flow_gives_zero_everywhere() {
    let inst = QapInstance::new(
        SquareMatrix::zeros(6),
        SquareMatrix::constant_off_diagonal(6, 4).unwrap(),
    )
    .unwrap();
    let mut rng = rng_from_seed(1);
    for _ in 0..20 {
        let s = Permutation::random(6, &mut rng);
        assert_eq!(inst.evaluate(&s).unwrap(), 0);
        for r in 0..6 {
            for t in r + 1..6 {
                assert_eq!(inst.delta_swap(&s, r, t).unwrap(), 0);
            }
        }
    }
}

#[test]
fn clause_bounds() {
    let a3 = ClauseSpec::new(vec![0, 1, 2], SquareMatrix::from_rows(&A3_ROWS).unwrap()).unwrap();
    assert_eq!(clause_lower_bound(&a3, 1), 10);
    assert_eq!(clause_lower_bound(&a3, 2), 20);
    let ones = ClauseSpec::distance_clause(vec![3, 1, 4]).unwrap();
    assert_eq!(clause_lower_bound(&ones, 1), 6);
}

#[test]
fn satisfaction_predicate_examples() {
    assert!(qapsat::is_satisfied(40, 40).unwrap());
    assert!(!qapsat::is_satisfied(40, 41).unwrap());
    assert!(matches!(
        qapsat::is_satisfied(40, 39),
        Err(Error::LowerBoundViolated { .. })
    ));
}

#[test]
fn objective_never_below_clause_bound_exhaustive() {
    for seed in 0..6 {
        let qs = generate(&GeneratorConfig::new(7, 2 + seed as usize, 3, seed)).unwrap();
        let lb = qs.global_lower_bound();
        for p in all_permutations(7) {
            let sigma = Permutation::new(p).unwrap();
            assert!(qs.instance().evaluate(&sigma).unwrap() >= lb);
        }
    }
}

fn instance_strategy() -> impl Strategy<Value = (QapInstance, Vec<usize>, usize, usize)> {
    (2usize..9)
        .prop_flat_map(|n| {
            let entries = proptest::collection::vec(0i64..20, n * n);
            let entries_b = proptest::collection::vec(0i64..20, n * n);
            let perm = Just((0..n).collect::<Vec<_>>()).prop_shuffle();
            (Just(n), entries, entries_b, perm, 0..n, 0..n)
        })
        .prop_filter_map("distinct swap", |(n, mut a, mut b, p, r, s)| {
            if r == s {
                return None;
            }
            for i in 0..n {
                a[i * n + i] = 0;
                b[i * n + i] = 0;
            }
            let inst = QapInstance::new(SquareMatrix::new(n, a).ok()?, SquareMatrix::new(n, b).ok()?).ok()?;
            Some((inst, p, r, s))
        })
}

proptest! {
    #[test]
    fn delta_matches_recompute((inst, p, r, s) in instance_strategy()) {
        let sigma = Permutation::new(p).unwrap();
        let before = inst.evaluate(&sigma).unwrap();
        let after = inst.evaluate(&sigma.swapped(r, s)).unwrap();
        prop_assert_eq!(inst.delta_swap(&sigma, r, s).unwrap(), after - before);
        prop_assert!(before >= 0);
    }

    #[test]
    fn evaluate_matches_naive_sum((inst, p, _r, _s) in instance_strategy()) {
        let sigma = Permutation::new(p.clone()).unwrap();
        prop_assert_eq!(inst.evaluate(&sigma).unwrap(), naive_objective(inst.flow(), inst.distance(), &p));
    }
}
