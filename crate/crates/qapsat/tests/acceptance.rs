//! Acceptance run. Prints one PASS/FAIL line per criterion and exits non-zero
//! if any criterion fails.
//!
//! Criteria 4-8 work from ledgers under the cargo target tmp dir, which are
//! restartable: an interrupted run picks up where it stopped. The reduced
//! design behind criteria 6-8 takes hours from scratch, so it only runs when
//! its ledger is already complete or `QAPSAT_NIGHTLY=1` is set.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use qapsat::analysis::{
    analyze, linear_fit, logit_fit, power_model_fit, sigmoid, sigmoid_fit_grid, AnalysisReport, CellCurve, CellKey,
    CurvePoint, Orientation, SigmoidGrid,
};
use qapsat::exact::{branch_and_bound, enumerate_min, BnbOptions};
use qapsat::generator::{generate_suite, rng_from_seed};
use qapsat::harness::{read_ledger, run_experiment, ExperimentPlan, PlanFile, RunRecord};
use qapsat::{generate, GeneratorConfig, Permutation, QapInstance, SquareMatrix};
use rand::Rng;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn plan_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/plans").join(name)
}

fn ledger_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_TARGET_TMPDIR")).join("acceptance").join(name)
}

fn workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn expected_rows(plan: &PlanFile) -> usize {
    plan.grid().map_or(0, |g| g.cell_count()) * plan.instances_per_cell
}

/// Runs (or resumes) a plan into its cached ledger and reads it back.
fn sweep(plan_name: &str, ledger_name: &str) -> Result<Vec<RunRecord>, String> {
    let mut file = PlanFile::load(&plan_path(plan_name)).map_err(|e| e.to_string())?;
    file.workers = workers();
    let ledger = ledger_path(ledger_name);
    std::fs::create_dir_all(ledger.parent().unwrap()).map_err(|e| e.to_string())?;
    let plan = ExperimentPlan::from_file(&file, &ledger).map_err(|e| e.to_string())?;
    run_experiment(&plan).map_err(|e| e.to_string())?;
    read_ledger(&ledger).map_err(|e| e.to_string())
}

fn criterion_1() -> Outcome {
    let mut rng = rng_from_seed(1001);
    let mut agree = 0;
    let mut mismatches = Vec::new();
    for i in 0..200u64 {
        let n = 6 + (i as usize % 4);
        let m = rng.gen_range(1..=12);
        let m1 = [3, 6, 9][rng.gen_range(0..3)];
        let qs = generate(&GeneratorConfig::new(n, m, m1, 50_000 + i)).map_err(|e| e.to_string())?;
        let bnb = branch_and_bound(qs.instance(), BnbOptions::default());
        let en = enumerate_min(qs.instance(), 11).map_err(|e| e.to_string())?;
        if bnb.proven && bnb.minimum == en.minimum {
            agree += 1;
        } else {
            mismatches.push(format!("n={n} m={m} m1={m1}: {} vs {}", bnb.minimum, en.minimum));
        }
    }
    check(
        agree == 200,
        format!("{agree}/200 instances agree {}", mismatches.join("; ")),
    )
}

fn random_matrix<R: Rng>(rng: &mut R, n: usize) -> SquareMatrix {
    let mut data: Vec<i64> = (0..n * n).map(|_| rng.gen_range(0..100)).collect();
    for i in 0..n {
        data[i * n + i] = 0;
    }
    SquareMatrix::new(n, data).unwrap()
}

fn criterion_2() -> Outcome {
    let mut rng = rng_from_seed(2002);
    let mut bad = 0usize;
    let mut draws = 0usize;
    while draws < 100_000 {
        let n = rng.gen_range(2..=20);
        // Alternate generated and unstructured instances.
        let inst = if draws % 2000 < 1000 {
            let m = rng.gen_range(1..=3 * n);
            let m1 = rng.gen_range(1..=3 * n);
            generate(&GeneratorConfig::new(n.max(3), m, m1, rng.gen()))
                .map_err(|e| e.to_string())?
                .instance()
                .clone()
        } else {
            QapInstance::new(random_matrix(&mut rng, n), random_matrix(&mut rng, n)).unwrap()
        };
        let n = inst.n();
        for _ in 0..100 {
            let sigma = Permutation::random(n, &mut rng);
            let r = rng.gen_range(0..n);
            let s = (r + rng.gen_range(1..n)) % n;
            let full = inst.evaluate(&sigma.swapped(r, s)).unwrap() - inst.evaluate(&sigma).unwrap();
            if inst.delta_swap(&sigma, r, s).unwrap() != full {
                bad += 1;
            }
            draws += 1;
        }
    }
    check(bad == 0, format!("{draws} draws, {bad} mismatches"))
}

fn criterion_3() -> Outcome {
    let expected: BTreeMap<i64, usize> = [(1, 6), (2, 5), (3, 3), (4, 2), (5, 2), (6, 1), (7, 1)].into();
    let seeds = 2000u64;
    for seed in 0..seeds {
        let qs = generate(&GeneratorConfig::new(5, 1 + seed as usize % 5, 1, seed)).map_err(|e| e.to_string())?;
        let mut h = BTreeMap::new();
        for (_, _, v) in qs.instance().distance().off_diagonal() {
            *h.entry(v).or_insert(0usize) += 1;
        }
        if h != expected {
            return Err(format!("seed {seed}: {h:?}"));
        }
    }
    Ok(format!("{expected:?} on {seeds} seeds"))
}

fn satisfaction_sweep() -> Result<(Vec<RunRecord>, AnalysisReport), String> {
    let rows = sweep("satisfaction_n10.toml", "satisfaction_n10.csv")?;
    let report = analyze(&rows);
    Ok((rows, report))
}

fn criterion_4(rows: &[RunRecord], report: &AnalysisReport) -> Outcome {
    let mut ok = rows.len() == 2400;
    let mut parts = vec![format!("{} rows", rows.len())];
    for curve in &report.proportions {
        let at = |m: usize| curve.points.iter().find(|p| p.m == m).map_or(f64::NAN, |p| p.value);
        let (p1, p40) = (at(1), at(40));
        ok &= p1 >= 0.9 && p40 <= 0.1;
        parts.push(format!("m1={}: p(1)={p1:.2} p(40)={p40:.2}", curve.cell.m1));
    }
    for (m1, lo, hi) in [(9, 5.0, 11.0), (21, 12.0, 18.0)] {
        match report.logit.get(&CellKey { n: 10, m1 }) {
            Some(f) => {
                ok &= (lo..=hi).contains(&f.m_c);
                parts.push(format!("m_c({m1})={:.2} in [{lo}, {hi}]", f.m_c));
            }
            None => {
                ok = false;
                parts.push(format!("no logit fit for m1={m1}"));
            }
        }
    }
    check(ok && report.proportions.len() == 2, parts.join(", "))
}

fn criterion_5(report: &AnalysisReport) -> Outcome {
    let r2: Vec<String> = report
        .logit
        .iter()
        .map(|(k, f)| format!("R2(m1={})={:.3}", k.m1, f.r_squared))
        .collect();
    let ok = report.logit.len() == 2 && report.logit.values().all(|f| f.r_squared >= 0.8);
    check(ok, r2.join(", "))
}

enum Reduced {
    Ready(Box<AnalysisReport>),
    Pending(String),
    Failed(String),
}

fn reduced_design() -> Reduced {
    let plan = match PlanFile::load(&plan_path("reduced_design.toml")) {
        Ok(p) => p,
        Err(e) => return Reduced::Failed(e.to_string()),
    };
    let want = expected_rows(&plan);
    let ledger = ledger_path("reduced_design.csv");
    let have = read_ledger(&ledger).map_or(0, |r| r.len());
    let nightly = std::env::var("QAPSAT_NIGHTLY").is_ok_and(|v| v == "1");
    if have < want && !nightly {
        return Reduced::Pending(format!(
            "long-running: ledger has {have}/{want} rows, set QAPSAT_NIGHTLY=1 to run or resume it"
        ));
    }
    match sweep("reduced_design.toml", "reduced_design.csv") {
        Ok(rows) => Reduced::Ready(Box::new(analyze(&rows))),
        Err(e) => Reduced::Failed(e),
    }
}

fn criterion_6(report: &AnalysisReport) -> Outcome {
    let Some(p) = &report.power else {
        return Err(format!("no power fit over {} logit cells", report.logit.len()));
    };
    let ok = (0.7..=1.1).contains(&p.alpha2) && (-1.1..=-0.4).contains(&p.alpha1) && p.r_squared_log >= 0.85;
    check(
        ok,
        format!(
            "alpha1={:.4} alpha2={:.4} k={:.3} R2(log)={:.3} over {} cells ({} excluded)",
            p.alpha1,
            p.alpha2,
            p.k(),
            p.r_squared_log,
            p.rows_used,
            p.rows_excluded
        ),
    )
}

fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(|a, b| a.total_cmp(b));
    let h = v.len() / 2;
    if v.len() % 2 == 1 {
        v[h]
    } else {
        0.5 * (v[h - 1] + v[h])
    }
}

fn criterion_7(report: &AnalysisReport) -> Outcome {
    let med = median(report.effort_fits.values().map(|f| f.r_squared).collect());
    let rhos: Vec<String> = report
        .effort_correlation_by_n
        .iter()
        .map(|(n, c)| format!("n={n}:{:.3}", c.rho))
        .collect();
    let dims = report
        .effort
        .iter()
        .map(|c| c.cell.n)
        .collect::<std::collections::BTreeSet<_>>();
    let ok = med >= 0.85
        && !dims.is_empty()
        && dims
            .iter()
            .all(|n| report.effort_correlation_by_n.get(n).is_some_and(|c| c.rho >= 0.8));
    check(
        ok,
        format!(
            "median R2={med:.3} over {} cells, rho per n [{}]",
            report.effort_fits.len(),
            rhos.join(" ")
        ),
    )
}

fn criterion_8(report: &AnalysisReport) -> Outcome {
    let Some(c) = &report.success_correlation else {
        return Err(format!(
            "no correlation over {} success fits",
            report.success_fits.len()
        ));
    };
    let slope = c.line.beta1;
    check(
        c.rho >= 0.9 && (0.3..=0.8).contains(&slope),
        format!("rho={:.4} slope={slope:.3} over {} cells", c.rho, c.cells),
    )
}

fn criterion_9() -> Outcome {
    let started = Instant::now();
    let mut failures = Vec::new();
    let cell = CellKey { n: 10, m1: 9 };

    let pts: Vec<CurvePoint> = (1..=20)
        .map(|m| CurvePoint {
            m,
            value: 1.0 / (1.0 + (-(4.0 - 0.5 * m as f64)).exp()),
            samples: 30,
        })
        .collect();
    match logit_fit(&CellCurve { cell, points: pts }) {
        Ok(f) if (f.beta0 - 4.0).abs() <= 1e-9 && (f.beta1 + 0.5).abs() <= 1e-9 && (f.m_c - 8.0).abs() <= 1e-9 => {}
        other => failures.push(format!("logit {other:?}")),
    }

    let x: Vec<f64> = (1..=10).map(f64::from).collect();
    let y: Vec<f64> = x.iter().map(|v| 2.0 * v + 1.0).collect();
    match linear_fit(&x, &y) {
        Ok(f) if (f.beta0 - 1.0).abs() <= 1e-9 && (f.beta1 - 2.0).abs() <= 1e-9 => {}
        other => failures.push(format!("linear {other:?}")),
    }

    let grid = SigmoidGrid::default();
    let sig: Vec<(f64, f64)> = (1..=40)
        .map(|m| (m as f64, sigmoid(100.0, 1.0, 10.0, m as f64)))
        .collect();
    let l_step = (grid.l_scale.1 - grid.l_scale.0) * 100.0 / (grid.l_steps - 1) as f64;
    let r_step = grid.r_step;
    match sigmoid_fit_grid(&sig, &grid) {
        Ok(f)
            if (f.l - 100.0).abs() <= l_step + 1e-9
                && (f.r - 1.0).abs() <= r_step + 1e-9
                && (f.m_t - 10.0).abs() <= grid.m_t_refine + 1e-9 => {}
        other => failures.push(format!("sigmoid {other:?}")),
    }
    let dec: Vec<(f64, f64)> = (1..=40)
        .map(|m| (m as f64, sigmoid(1.0, -0.8, 15.0, m as f64)))
        .collect();
    match sigmoid_fit_grid(&dec, &SigmoidGrid::with_orientation(Orientation::Decreasing)) {
        Ok(f) if (f.r + 0.8).abs() <= r_step + 1e-9 && (f.m_t - 15.0).abs() <= grid.m_t_refine + 1e-9 => {}
        other => failures.push(format!("decreasing sigmoid {other:?}")),
    }

    let (lk, a1, a2) = (1.65453, -0.75999, 0.90365);
    let rows: Vec<(f64, f64, f64)> = (8..=19)
        .flat_map(|n| (3..=27).step_by(3).map(move |m1| (n as f64, m1 as f64)))
        .map(|(n, m1)| (n, m1, (lk + a1 * n.ln() + a2 * m1.ln()).exp()))
        .collect();
    match power_model_fit(&rows) {
        Ok(f) if (f.log_k - lk).abs() <= 1e-9 && (f.alpha1 - a1).abs() <= 1e-9 && (f.alpha2 - a2).abs() <= 1e-9 => {}
        other => failures.push(format!("power {other:?}")),
    }

    let secs = started.elapsed().as_secs_f64();
    if secs >= 5.0 {
        failures.push(format!("took {secs:.1}s"));
    }
    check(
        failures.is_empty(),
        if failures.is_empty() {
            format!("logit, linear, sigmoid (both orientations) and power recovered in {secs:.2}s")
        } else {
            failures.join("; ")
        },
    )
}

fn dir_bytes(dir: &Path) -> std::io::Result<BTreeMap<String, Vec<u8>>> {
    let mut out = BTreeMap::new();
    for entry in std::fs::read_dir(dir)? {
        let entry = entry?;
        out.insert(
            entry.file_name().to_string_lossy().into_owned(),
            std::fs::read(entry.path())?,
        );
    }
    Ok(out)
}

const REPRO_PLAN: &str = r#"
master_seed = 9090
instances_per_cell = 3
solvers = ["bnb", "rots"]

[grid]
n = [6, 8]
m1 = [3, 9]
m = { start = 1, end = 12, step = 2 }

[rots]
runs = 5
max_iterations = 300
"#;

fn criterion_10() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let file = PlanFile::parse(REPRO_PLAN).map_err(|e| e.to_string())?;
    let grid = file.grid().map_err(|e| e.to_string())?;
    let mut suites = Vec::new();
    let mut ledgers = Vec::new();
    for (run, workers) in [(0, 1), (1, 4)] {
        let dir = tmp.path().join(format!("suite{run}"));
        std::fs::create_dir_all(&dir).map_err(|e| e.to_string())?;
        generate_suite(&grid, file.instances_per_cell, file.master_seed, &dir).map_err(|e| e.to_string())?;
        suites.push(dir_bytes(&dir).map_err(|e| e.to_string())?);

        let ledger = tmp.path().join(format!("ledger{run}.csv"));
        let plan = ExperimentPlan::from_file(
            &PlanFile {
                workers,
                ..file.clone()
            },
            &ledger,
        )
        .map_err(|e| e.to_string())?;
        run_experiment(&plan).map_err(|e| e.to_string())?;
        ledgers.push(std::fs::read(&ledger).map_err(|e| e.to_string())?);
    }
    check(
        suites[0] == suites[1] && ledgers[0] == ledgers[1] && !suites[0].is_empty(),
        format!(
            "{} instance files and a {}-byte ledger identical across runs (1 vs 4 workers)",
            suites[0].len(),
            ledgers[0].len()
        ),
    )
}

fn main() -> ExitCode {
    let mut failed = 0;
    let mut report = |id: u32, name: &str, outcome: Outcome, started: Instant| {
        let secs = started.elapsed().as_secs_f64();
        match outcome {
            Ok(d) => println!("PASS  {id:>2} {name}: {d} ({secs:.1}s)"),
            Err(d) => {
                failed += 1;
                println!("FAIL  {id:>2} {name}: {d} ({secs:.1}s)");
            }
        }
    };

    let t = Instant::now();
    report(1, "oracle equivalence", criterion_1(), t);
    let t = Instant::now();
    report(2, "delta correctness", criterion_2(), t);
    let t = Instant::now();
    report(3, "generator distribution", criterion_3(), t);

    let t = Instant::now();
    match satisfaction_sweep() {
        Ok((rows, r)) => {
            report(4, "satisfaction plateau and cliff", criterion_4(&rows, &r), t);
            report(5, "logit fit quality", criterion_5(&r), Instant::now());
        }
        Err(e) => {
            report(4, "satisfaction plateau and cliff", Err(e.clone()), t);
            report(5, "logit fit quality", Err(e), Instant::now());
        }
    }

    let t = Instant::now();
    match reduced_design() {
        Reduced::Ready(r) => {
            report(6, "power model at reduced scale", criterion_6(&r), t);
            report(7, "effort sigmoid", criterion_7(&r), Instant::now());
            report(8, "ROTS correlation", criterion_8(&r), Instant::now());
        }
        Reduced::Pending(why) => {
            for (id, name) in [
                (6, "power model at reduced scale"),
                (7, "effort sigmoid"),
                (8, "ROTS correlation"),
            ] {
                println!("SKIP  {id:>2} {name}: {why}");
            }
        }
        Reduced::Failed(e) => {
            for (id, name) in [
                (6, "power model at reduced scale"),
                (7, "effort sigmoid"),
                (8, "ROTS correlation"),
            ] {
                report(id, name, Err(e.clone()), t);
            }
        }
    }

    let t = Instant::now();
    report(9, "fitter self-tests", criterion_9(), t);
    let t = Instant::now();
    report(10, "reproducibility", criterion_10(), t);

    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
