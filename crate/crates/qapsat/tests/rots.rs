use qapsat::rots::{rots_run, rots_runs, run_seed, success_rate, RotsConfig, RotsSummary};
use qapsat::{branch_and_bound, generate, BnbOptions, GeneratorConfig, QapInstance, SquareMatrix};

fn certified(n: usize, m: usize, m1: usize, seed: u64) -> (QapInstance, i64) {
    let qs = generate(&GeneratorConfig::new(n, m, m1, seed)).unwrap();
    let out = branch_and_bound(qs.instance(), BnbOptions::default());
    assert!(out.proven);
    (qs.instance().clone(), out.minimum)
}

#[test]
fn degenerate_distance_succeeds_at_start() {
    let qs = generate(&GeneratorConfig::new(9, 5, 2, 4)).unwrap();
    let inst = QapInstance::new(
        qs.instance().flow().clone(),
        SquareMatrix::constant_off_diagonal(9, 1).unwrap(),
    )
    .unwrap();
    let config = RotsConfig::for_dimension(9, 1);
    for r in rots_runs(&inst, 50, &config) {
        assert!(r.success);
        assert_eq!(r.iterations_to_optimum, Some(0));
    }
}

#[test]
fn parameters_follow_dimension() {
    let c = RotsConfig::for_dimension(12, 3);
    assert_eq!(
        (c.tabu_duration_mean, c.aspiration, c.max_iterations, c.runs),
        (96, 720, 1000, 30)
    );
}

#[test]
fn single_clause_is_almost_always_found() {
    let mut total = 0.0;
    for seed in 0..5 {
        let (inst, opt) = certified(10, 1, 9, 300 + seed);
        total += success_rate(&inst, opt, &RotsConfig::for_dimension(10, seed));
    }
    assert!(total / 5.0 >= 0.9, "mean success {}", total / 5.0);
}

#[test]
fn runs_never_beat_the_optimum_and_are_reproducible() {
    for seed in 0..6 {
        let (inst, opt) = certified(9, 6 + 5 * seed as usize, 3 + seed as usize, seed);
        let config = RotsConfig {
            runs: 10,
            ..RotsConfig::for_dimension(9, 77 + seed)
        };
        let a = rots_runs(&inst, opt, &config);
        assert_eq!(a, rots_runs(&inst, opt, &config));
        for (k, r) in a.iter().enumerate() {
            assert!(r.best_value >= opt);
            assert_eq!(r.success, r.best_value == opt);
            assert_eq!(r.success, r.iterations_to_optimum.is_some());
            assert_eq!(*r, rots_run(&inst, opt, &config, run_seed(config.seed, k)));
        }
    }
}

#[test]
fn summary_of_all_successes() {
    let (inst, opt) = certified(8, 1, 6, 2);
    let config = RotsConfig::for_dimension(8, 5);
    let results = rots_runs(&inst, opt, &config);
    let s = RotsSummary::from_results(&results, config.max_iterations);
    assert_eq!(s.success_rate, 1.0);
    assert!(s.mean_iterations < config.max_iterations as f64);
}

#[test]
fn more_clauses_lower_the_success_rate() {
    for m1 in [3, 15] {
        let mean_at = |m: usize| {
            (0..20)
                .map(|r| {
                    let (inst, opt) = certified(8, m, m1, 10_000 + r);
                    success_rate(&inst, opt, &RotsConfig::for_dimension(8, r))
                })
                .sum::<f64>()
                / 20.0
        };
        let (low, high) = (mean_at(1), mean_at(40));
        assert!(low >= high, "m1={m1}: m=1 {low} < m=40 {high}");
    }
}
