//! Factorial experiment runner writing a restartable CSV ledger.

use std::collections::BTreeSet;
use std::fs::{self, File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::mpsc;
use std::time::Instant;

use log::{info, warn};
use serde::{Deserialize, Serialize};

use crate::error::{error_chain, Error, Result};
use crate::exact::{branch_and_bound, enumerate_min, BnbOptions, DEFAULT_ENUMERATION_CAP};
use crate::generator::{cell_seed, generate, instance_stem, splitmix64, FactorialGrid, GeneratorConfig};
use crate::instance::{is_satisfied, QapSatInstance};
use crate::io::{read_instance, InstanceFilePair};
use crate::rots::{rots_runs, RotsConfig, RotsSummary};

/// Solvers an experiment may run on each instance.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    Enum,
    Bnb,
    Rots,
}

impl std::str::FromStr for SolverKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "enum" => Ok(Self::Enum),
            "bnb" => Ok(Self::Bnb),
            "rots" => Ok(Self::Rots),
            other => Err(format!("unknown solver {other:?} (expected enum, bnb or rots)")),
        }
    }
}

/// Whether branch-and-bound stops at the clause lower bound.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BnbMode {
    /// Find and prove the minimum.
    #[default]
    Optimize,
    /// Stop once an incumbent reaches the clause lower bound.
    Decide,
}

/// Either an explicit list or an inclusive arithmetic range.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Axis {
    List(Vec<usize>),
    Range {
        start: usize,
        end: usize,
        #[serde(default = "one")]
        step: usize,
    },
}

fn one() -> usize {
    1
}

impl Axis {
    pub fn values(&self) -> Result<Vec<usize>> {
        match self {
            Axis::List(v) => Ok(v.clone()),
            Axis::Range { step: 0, .. } => Err(Error::Invalid {
                what: "plan",
                reason: "range step must be positive".into(),
            }),
            Axis::Range { start, end, step } => Ok((*start..=*end).step_by(*step).collect()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub n: Axis,
    pub m1: Axis,
    pub m: Axis,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RotsPlan {
    #[serde(default = "default_runs")]
    pub runs: usize,
    #[serde(default = "default_iterations")]
    pub max_iterations: u64,
    /// Tenure is `tenure_factor · n`.
    #[serde(default = "default_tenure_factor")]
    pub tenure_factor: usize,
    /// Aspiration is `aspiration_factor · n²`.
    #[serde(default = "default_aspiration_factor")]
    pub aspiration_factor: u64,
}

fn default_runs() -> usize {
    30
}
fn default_iterations() -> u64 {
    1000
}
fn default_tenure_factor() -> usize {
    8
}
fn default_aspiration_factor() -> u64 {
    5
}

impl Default for RotsPlan {
    fn default() -> Self {
        Self {
            runs: default_runs(),
            max_iterations: default_iterations(),
            tenure_factor: default_tenure_factor(),
            aspiration_factor: default_aspiration_factor(),
        }
    }
}

impl RotsPlan {
    pub fn config(&self, n: usize, seed: u64) -> RotsConfig {
        RotsConfig {
            tabu_duration_mean: self.tenure_factor * n,
            aspiration: self.aspiration_factor * (n as u64) * (n as u64),
            max_iterations: self.max_iterations,
            runs: self.runs,
            seed,
        }
    }
}

/// Plan file contents.
///
/// ```toml
/// master_seed = 7
/// instances_per_cell = 20
/// solvers = ["bnb", "rots"]
///
/// [grid]
/// n = [10]
/// m1 = [9, 21]
/// m = { start = 1, end = 40 }
/// ```
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanFile {
    pub master_seed: u64,
    pub instances_per_cell: usize,
    pub grid: GridSpec,
    #[serde(default = "default_solvers")]
    pub solvers: Vec<SolverKind>,
    #[serde(default)]
    pub bnb_mode: BnbMode,
    #[serde(default)]
    pub node_cap: Option<u64>,
    #[serde(default = "default_enum_cap")]
    pub enumeration_cap: usize,
    #[serde(default)]
    pub rots: RotsPlan,
    /// Fill the `bnb_seconds` column (makes the ledger machine-dependent).
    #[serde(default)]
    pub record_wall_time: bool,
    #[serde(default = "one")]
    pub workers: usize,
    /// Load instances from a suite directory instead of generating them.
    #[serde(default)]
    pub instances_dir: Option<PathBuf>,
}

fn default_solvers() -> Vec<SolverKind> {
    vec![SolverKind::Bnb]
}
fn default_enum_cap() -> usize {
    DEFAULT_ENUMERATION_CAP
}

impl PlanFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Invalid {
            what: "plan",
            reason: e.to_string(),
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        toml::from_str(&text).map_err(|e| Error::Validation {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })
    }

    pub fn grid(&self) -> Result<FactorialGrid> {
        Ok(FactorialGrid {
            n: self.grid.n.values()?,
            m1: self.grid.m1.values()?,
            m: self.grid.m.values()?,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("plan serializes")
    }
}

/// A validated plan bound to its ledger path.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExperimentPlan {
    pub grid: FactorialGrid,
    pub instances_per_cell: usize,
    pub solvers: BTreeSet<SolverKind>,
    pub master_seed: u64,
    pub ledger: PathBuf,
    pub workers: usize,
    pub bnb_mode: BnbMode,
    pub node_cap: Option<u64>,
    pub enumeration_cap: usize,
    pub rots: RotsPlan,
    pub record_wall_time: bool,
    pub instances_dir: Option<PathBuf>,
}

impl ExperimentPlan {
    pub fn from_file(plan: &PlanFile, ledger: impl Into<PathBuf>) -> Result<Self> {
        let p = Self {
            grid: plan.grid()?,
            instances_per_cell: plan.instances_per_cell,
            solvers: plan.solvers.iter().copied().collect(),
            master_seed: plan.master_seed,
            ledger: ledger.into(),
            workers: plan.workers,
            bnb_mode: plan.bnb_mode,
            node_cap: plan.node_cap,
            enumeration_cap: plan.enumeration_cap,
            rots: plan.rots.clone(),
            record_wall_time: plan.record_wall_time,
            instances_dir: plan.instances_dir.clone(),
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |reason: &str| {
            Err(Error::Invalid {
                what: "plan",
                reason: reason.into(),
            })
        };
        if self.grid.is_empty() {
            return bad("grid has an empty axis");
        }
        if self.instances_per_cell == 0 {
            return bad("instances_per_cell must be at least 1");
        }
        if !self.solvers.contains(&SolverKind::Bnb) && !self.solvers.contains(&SolverKind::Enum) {
            return bad("an exact solver (enum or bnb) is required");
        }
        if self.workers == 0 {
            return bad("workers must be at least 1");
        }
        if self.solvers.contains(&SolverKind::Rots) && (self.rots.runs == 0 || self.rots.max_iterations == 0) {
            return bad("rots runs and max_iterations must be positive");
        }
        Ok(())
    }

    fn tasks(&self) -> Vec<RecordKey> {
        self.grid
            .cells()
            .flat_map(|(n, m1, m)| (0..self.instances_per_cell).map(move |replicate| RecordKey { n, m1, m, replicate }))
            .collect()
    }
}

/// Ledger row key.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RecordKey {
    pub n: usize,
    pub m1: usize,
    pub m: usize,
    pub replicate: usize,
}

/// One instance's results. Empty CSV fields are `None`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub n: usize,
    pub k: usize,
    pub m: usize,
    pub m1: usize,
    pub replicate: usize,
    pub seed: u64,
    pub minimum: Option<i64>,
    pub global_lower_bound: Option<i64>,
    pub satisfied: Option<bool>,
    pub proven: bool,
    pub bnb_nodes: Option<u64>,
    pub bnb_lap_calls: Option<u64>,
    pub bnb_seconds: Option<f64>,
    pub rots_success_rate: Option<f64>,
    pub rots_mean_iterations: Option<f64>,
    pub error: Option<String>,
}

/// Column order of the ledger.
pub const LEDGER_HEADER: [&str; 16] = [
    "n",
    "k",
    "m",
    "m1",
    "replicate",
    "seed",
    "minimum",
    "global_lower_bound",
    "satisfied",
    "proven",
    "bnb_nodes",
    "bnb_lap_calls",
    "bnb_seconds",
    "rots_success_rate",
    "rots_mean_iterations",
    "error",
];

impl RunRecord {
    pub fn key(&self) -> RecordKey {
        RecordKey {
            n: self.n,
            m1: self.m1,
            m: self.m,
            replicate: self.replicate,
        }
    }

    /// Row usable by the analysis: proven minimum, no error.
    pub fn is_usable(&self) -> bool {
        self.proven && self.error.is_none() && self.satisfied.is_some()
    }

    fn failed(key: RecordKey, seed: u64, err: &Error) -> Self {
        Self {
            n: key.n,
            k: 3,
            m: key.m,
            m1: key.m1,
            replicate: key.replicate,
            seed,
            minimum: None,
            global_lower_bound: None,
            satisfied: None,
            proven: false,
            bnb_nodes: None,
            bnb_lap_calls: None,
            bnb_seconds: None,
            rots_success_rate: None,
            rots_mean_iterations: None,
            error: Some(error_chain(err)),
        }
    }
}

/// Seed of the tabu-search runs for an instance seed.
pub fn rots_seed(instance_seed: u64) -> u64 {
    splitmix64(instance_seed ^ 0x524F_5453)
}

/// Generates (or loads) and solves one instance.
pub fn run_one(plan: &ExperimentPlan, key: RecordKey) -> RunRecord {
    let seed = cell_seed(plan.master_seed, key.n, key.m1, key.m, key.replicate);
    match solve_record(plan, key, seed) {
        Ok(r) => r,
        Err(e) => RunRecord::failed(key, seed, &e),
    }
}

fn load_or_generate(plan: &ExperimentPlan, key: RecordKey, seed: u64) -> Result<QapSatInstance> {
    match &plan.instances_dir {
        None => generate(&GeneratorConfig::new(key.n, key.m, key.m1, seed)),
        Some(dir) => {
            let pair = InstanceFilePair::in_dir(dir, &instance_stem(key.n, key.m1, key.m, key.replicate));
            read_instance(&pair)?
                .as_sat()
                .cloned()
                .ok_or_else(|| Error::Validation {
                    path: pair.meta_path.clone(),
                    reason: "experiment instances need a sidecar".into(),
                })
        }
    }
}

fn solve_record(plan: &ExperimentPlan, key: RecordKey, seed: u64) -> Result<RunRecord> {
    let qs = load_or_generate(plan, key, seed)?;
    let inst = qs.instance();
    let lb = qs.global_lower_bound();
    let mut record = RunRecord {
        n: key.n,
        k: qs.k(),
        m: key.m,
        m1: key.m1,
        replicate: key.replicate,
        seed: qs.seed(),
        minimum: None,
        global_lower_bound: Some(lb),
        satisfied: None,
        proven: false,
        bnb_nodes: None,
        bnb_lap_calls: None,
        bnb_seconds: None,
        rots_success_rate: None,
        rots_mean_iterations: None,
        error: None,
    };

    let mut minimum = None;
    if plan.solvers.contains(&SolverKind::Bnb) {
        let target = match plan.bnb_mode {
            BnbMode::Optimize => None,
            BnbMode::Decide => Some(lb),
        };
        let out = branch_and_bound(
            inst,
            BnbOptions {
                target,
                node_cap: plan.node_cap,
            },
        );
        record.bnb_nodes = Some(out.nodes_expanded);
        record.bnb_lap_calls = Some(out.lap_calls);
        if plan.record_wall_time {
            record.bnb_seconds = Some(out.elapsed.as_secs_f64());
        }
        record.proven = out.proven;
        minimum = Some(out.minimum);
    }
    if plan.solvers.contains(&SolverKind::Enum) && key.n <= plan.enumeration_cap {
        let out = enumerate_min(inst, plan.enumeration_cap)?;
        if let (Some(b), true) = (minimum, record.proven) {
            if b != out.minimum {
                return Err(Error::Contract(format!(
                    "branch-and-bound minimum {b} differs from enumeration {}",
                    out.minimum
                )));
            }
        }
        minimum = Some(out.minimum);
        record.proven = true;
    }
    let Some(min) = minimum else {
        return Err(Error::Contract(format!("no exact solver applicable to n = {}", key.n)));
    };
    record.minimum = Some(min);
    if record.proven {
        record.satisfied = Some(is_satisfied(lb, min)?);
        if plan.solvers.contains(&SolverKind::Rots) {
            let config = plan.rots.config(key.n, rots_seed(qs.seed()));
            let runs = rots_runs(inst, min, &config);
            let summary = RotsSummary::from_results(&runs, config.max_iterations);
            record.rots_success_rate = Some(summary.success_rate);
            record.rots_mean_iterations = Some(summary.mean_iterations);
        }
    } else {
        warn!(
            "n={} m1={} m={} r={}: node cap reached, minimum unproven",
            key.n, key.m1, key.m, key.replicate
        );
    }
    Ok(record)
}

/// Reads a ledger, skipping rows that fail to parse (such as a line cut
/// short by an interrupted run).
pub fn read_ledger(path: &Path) -> Result<Vec<RunRecord>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_ledger_from(file, path)
}

pub fn read_ledger_from<R: std::io::Read>(reader: R, origin: &Path) -> Result<Vec<RunRecord>> {
    let mut rdr = csv::ReaderBuilder::new().flexible(false).from_reader(reader);
    let headers = rdr.headers()?.clone();
    if headers.iter().ne(LEDGER_HEADER.iter().copied()) {
        return Err(Error::Validation {
            path: origin.to_path_buf(),
            reason: format!("unexpected ledger header {:?}", headers.iter().collect::<Vec<_>>()),
        });
    }
    let mut rows = Vec::new();
    for (idx, row) in rdr.deserialize::<RunRecord>().enumerate() {
        match row {
            Ok(r) => rows.push(r),
            Err(e) => warn!("{}: dropping row {}: {e}", origin.display(), idx + 2),
        }
    }
    Ok(rows)
}

fn ledger_writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .has_headers(false)
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(w)
}

/// Writes rows sorted by key, replacing `path` atomically.
pub fn write_ledger(path: &Path, rows: &[RunRecord]) -> Result<()> {
    let mut sorted: Vec<&RunRecord> = rows.iter().collect();
    sorted.sort_by_key(|r| r.key());
    let tmp = path.with_extension("csv.tmp");
    {
        let file = File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
        // Explicit header: serde only emits one alongside the first row.
        let mut w = ledger_writer(file);
        w.write_record(LEDGER_HEADER)?;
        for r in sorted {
            w.serialize(r)?;
        }
        w.flush().map_err(|e| Error::io(&tmp, e))?;
    }
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

/// Outcome of [`run_experiment`].
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentSummary {
    pub ledger: PathBuf,
    pub total_rows: usize,
    pub new_rows: usize,
    pub failed_rows: usize,
}

/// Runs every missing `(n, m1, m, replicate)` of the plan and appends the
/// rows to the ledger, one flushed line each. When all tasks are done the
/// ledger is rewritten sorted by key, so its bytes depend only on the plan.
pub fn run_experiment(plan: &ExperimentPlan) -> Result<ExperimentSummary> {
    plan.validate()?;
    let mut existing = if plan.ledger.exists() {
        read_ledger(&plan.ledger)?
    } else {
        Vec::new()
    };
    // Drop duplicate keys left by an interrupted rewrite; first one wins.
    let mut seen = BTreeSet::new();
    existing.retain(|r| seen.insert(r.key()));

    let pending: Vec<RecordKey> = plan.tasks().into_iter().filter(|k| !seen.contains(k)).collect();
    info!(
        "{} rows present, {} to run with {} worker(s)",
        existing.len(),
        pending.len(),
        plan.workers
    );

    if let Some(dir) = plan.ledger.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    // Rewrite what survived so the append below starts from a clean file.
    write_ledger(&plan.ledger, &existing)?;

    let mut new_rows = Vec::with_capacity(pending.len());
    if !pending.is_empty() {
        let file = OpenOptions::new()
            .append(true)
            .open(&plan.ledger)
            .map_err(|e| Error::io(&plan.ledger, e))?;
        let mut writer = ledger_writer(file);
        let next = AtomicUsize::new(0);
        let start = Instant::now();
        let (tx, rx) = mpsc::channel::<RunRecord>();
        std::thread::scope(|scope| -> Result<()> {
            for _ in 0..plan.workers.min(pending.len()) {
                let tx = tx.clone();
                let (next, pending) = (&next, &pending);
                scope.spawn(move || loop {
                    let idx = next.fetch_add(1, Ordering::Relaxed);
                    let Some(&key) = pending.get(idx) else { break };
                    if tx.send(run_one(plan, key)).is_err() {
                        break;
                    }
                });
            }
            drop(tx);
            for record in rx {
                writer.serialize(&record)?;
                writer.flush().map_err(|e| Error::io(&plan.ledger, e))?;
                new_rows.push(record);
                let done = new_rows.len();
                if done % 100 == 0 || done == pending.len() {
                    info!(
                        "{done}/{} instances ({:.0}s elapsed)",
                        pending.len(),
                        start.elapsed().as_secs_f64()
                    );
                }
            }
            Ok(())
        })?;
    }

    let failed_rows = new_rows.iter().filter(|r| r.error.is_some()).count();
    let new_count = new_rows.len();
    existing.extend(new_rows);
    write_ledger(&plan.ledger, &existing)?;
    Ok(ExperimentSummary {
        ledger: plan.ledger.clone(),
        total_rows: existing.len(),
        new_rows: new_count,
        failed_rows,
    })
}
