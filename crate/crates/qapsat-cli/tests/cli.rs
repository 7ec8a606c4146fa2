use std::path::Path;
use std::process::{Command, Output};

fn qapsat(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qapsat"))
        .args(args)
        .env("QAPSAT_LOG", "warn")
        .output()
        .expect("spawn qapsat")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn field<'a>(text: &'a str, key: &str) -> &'a str {
    text.lines()
        .find_map(|l| l.strip_prefix(key).and_then(|r| r.strip_prefix(": ")))
        .unwrap_or_else(|| panic!("no {key} in {text}"))
}

fn generate(dir: &Path, m: &str, seed: &str) -> String {
    let o = qapsat(&[
        "generate",
        "--n",
        "7",
        "--m",
        m,
        "--m1",
        "6",
        "--seed",
        seed,
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    let paths: Vec<&str> = out.lines().collect();
    assert_eq!(paths.len(), 2);
    assert!(Path::new(paths[0]).is_file() && Path::new(paths[1]).is_file());
    paths[0].to_string()
}

#[test]
fn generate_then_solve_and_rots() {
    let dir = tempfile::tempdir().unwrap();
    let dat = generate(dir.path(), "3", "17");
    assert!(dat.ends_with("qapsat_n7_m1-6_m3_s17.dat"), "{dat}");

    let bnb = stdout(&qapsat(&["solve", "--in", &dat]));
    let en = stdout(&qapsat(&["solve", "--in", &dat, "--method", "enum"]));
    assert_eq!(field(&bnb, "minimum"), field(&en, "minimum"));
    assert_eq!(field(&bnb, "proven"), "true");
    let perm: Vec<usize> = field(&bnb, "permutation")
        .split(' ')
        .map(|v| v.parse().unwrap())
        .collect();
    let mut sorted = perm.clone();
    sorted.sort();
    assert_eq!(sorted, (1..=7).collect::<Vec<_>>());
    // m=3 with m1=6 is deep in the satisfiable region for n=7
    assert_eq!(field(&bnb, "satisfied"), "true");
    assert_eq!(field(&bnb, "minimum"), field(&bnb, "global_lower_bound"));

    let auto = stdout(&qapsat(&["solve", "--in", &dat, "--target", "auto"]));
    assert_eq!(field(&auto, "minimum"), field(&bnb, "minimum"));

    let csv = stdout(&qapsat(&["solve", "--in", &dat, "--format", "csv"]));
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].starts_with("minimum,global_lower_bound,satisfied,proven,nodes"));

    let r = stdout(&qapsat(&["rots", "--in", &dat, "--runs", "5", "--seed", "3"]));
    assert_eq!(field(&r, "optimum"), field(&bnb, "minimum"));
    let rate: f64 = field(&r, "success_rate").parse().unwrap();
    assert!((0.0..=1.0).contains(&rate));
    assert_eq!(
        r,
        stdout(&qapsat(&["rots", "--in", &dat, "--runs", "5", "--seed", "3"]))
    );
}

#[test]
fn generation_is_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let pa = generate(a.path(), "9", "123");
    let pb = generate(b.path(), "9", "123");
    assert_eq!(std::fs::read(&pa).unwrap(), std::fs::read(&pb).unwrap());
    let pc = generate(b.path(), "9", "124");
    assert_ne!(std::fs::read(&pa).unwrap(), std::fs::read(pc).unwrap());
}

#[test]
fn exit_codes() {
    let o = qapsat(&["solve", "--bogus"]);
    assert_eq!(o.status.code(), Some(1));
    let o = qapsat(&[
        "generate", "--n", "x", "--m", "1", "--m1", "1", "--seed", "1", "--out", ".",
    ]);
    assert_eq!(o.status.code(), Some(1));
    let o = qapsat(&["solve", "--in", "/nonexistent/file.dat"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error: "));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.dat");
    std::fs::write(&bad, "3\n1 2\n").unwrap();
    assert_eq!(qapsat(&["solve", "--in", bad.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(qapsat(&["--help"]).status.code(), Some(0));
}

#[test]
fn help_lists_every_flag() {
    let cases: &[(&str, &[&str])] = &[
        ("generate", &["--n", "--k", "--m", "--m1", "--seed", "--out", "--name"]),
        ("suite", &["--plan", "--out", "--seed"]),
        (
            "solve",
            &[
                "--in",
                "--method",
                "--target",
                "--node-cap",
                "--enumeration-cap",
                "--format",
            ],
        ),
        (
            "rots",
            &["--in", "--optimum", "--runs", "--seed", "--max-iterations", "--format"],
        ),
        ("experiment", &["--plan", "--ledger", "--workers", "--solvers"]),
        ("analyze", &["--ledger", "--out"]),
        ("plot", &["--fits", "--out"]),
    ];
    for (cmd, flags) in cases {
        let o = qapsat(&[cmd, "--help"]);
        assert!(o.status.success());
        let text = stdout(&o);
        for f in *flags {
            assert!(text.contains(f), "{cmd} --help lacks {f}");
        }
    }
}

const PLAN: &str = r#"
master_seed = 77
instances_per_cell = 6
solvers = ["bnb", "rots"]
workers = 2

[grid]
n = [6, 7, 8]
m1 = [3, 6, 9]
m = { start = 1, end = 12 }

[rots]
runs = 4
max_iterations = 200
"#;

#[test]
fn experiment_analyze_plot_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let plan = dir.path().join("plan.toml");
    std::fs::write(&plan, PLAN).unwrap();
    let ledger = dir.path().join("runs.csv");
    let out = dir.path().join("analysis");
    let p = plan.to_str().unwrap();
    let l = ledger.to_str().unwrap();

    let o = qapsat(&["experiment", "--plan", p, "--ledger", l]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let first = std::fs::read(&ledger).unwrap();
    assert_eq!(String::from_utf8_lossy(&first).lines().count(), 1 + 3 * 3 * 12 * 6);

    // Rerunning with another worker count resumes to the same bytes.
    let o = qapsat(&["experiment", "--plan", p, "--ledger", l, "--workers", "1"]);
    assert!(o.status.success());
    assert_eq!(std::fs::read(&ledger).unwrap(), first);

    let o = qapsat(&["analyze", "--ledger", l, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(out.join("fits.csv").is_file() && out.join("curves.csv").is_file());
    assert!(out.join("fig2_proportions.svg").is_file());

    let replot = dir.path().join("replot");
    let o = qapsat(&[
        "plot",
        "--fits",
        out.to_str().unwrap(),
        "--out",
        replot.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    for path in stdout(&o).lines() {
        let name = Path::new(path).file_name().unwrap();
        assert_eq!(std::fs::read(path).unwrap(), std::fs::read(out.join(name)).unwrap());
    }

    let suite = dir.path().join("suite");
    let o = qapsat(&["suite", "--plan", p, "--out", suite.to_str().unwrap()]);
    assert!(o.status.success());
    assert!(std::fs::read_dir(&suite).unwrap().count() >= 2 * 3 * 3 * 12 * 6);
}
