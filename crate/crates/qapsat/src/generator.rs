//! Random QAP-k-SAT generator.
//!
//! Draw order for a given seed (ChaCha8 seeded with `seed_from_u64`):
//! 1. `m` flow clauses: 3 variables sampled without replacement, then a
//!    uniformly random reordering of the base submatrix.
//! 2. `m1` distance clauses: `k` variables sampled without replacement.
//! 3. One shuffle of the free off-diagonal positions of `B`, consumed in
//!    chunks of `n_2, n_3, …` by the geometric fill.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::instance::{clause_lower_bound, ClauseSpec, QapInstance, QapSatInstance};
use crate::io::{write_instance, InstanceFilePair};
use crate::matrix::SquareMatrix;

/// Base flow-clause submatrix.
pub const A3: [[i64; 3]; 3] = [[0, 1, 2], [2, 0, 1], [3, 1, 0]];

/// Parameters of one random instance.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GeneratorConfig {
    pub n: usize,
    pub k: usize,
    pub m: usize,
    pub m1: usize,
    pub seed: u64,
}

impl GeneratorConfig {
    pub fn new(n: usize, m: usize, m1: usize, seed: u64) -> Self {
        Self { n, k: 3, m, m1, seed }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |reason: String| {
            Err(Error::Invalid {
                what: "generator config",
                reason,
            })
        };
        if self.k != 3 {
            return bad(format!("only k = 3 flow clauses are available, got k = {}", self.k));
        }
        if self.n < self.k {
            return bad(format!("n = {} is smaller than k = {}", self.n, self.k));
        }
        if self.m == 0 || self.m1 == 0 {
            return bad("m and m1 must both be at least 1".into());
        }
        Ok(())
    }
}

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Flow clause on three distinct uniform variables carrying [`A3`] under a
/// uniformly random simultaneous row/column reordering.
pub fn gen_a_clause<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Result<ClauseSpec> {
    if n < 3 {
        return Err(Error::contract(format!("flow clauses need n >= 3, got {n}")));
    }
    let vars = index::sample(rng, n, 3).into_vec();
    let mut order = [0usize, 1, 2];
    order.shuffle(rng);
    ClauseSpec::new(vars, conjugate_a3(order))
}

/// `P · A3 · Pᵀ` for the reordering `order` (entry `(i, j)` is
/// `A3[order[i]][order[j]]`).
pub fn conjugate_a3(order: [usize; 3]) -> SquareMatrix {
    let rows: Vec<Vec<i64>> = (0..3)
        .map(|i| (0..3).map(|j| A3[order[i]][order[j]]).collect())
        .collect();
    SquareMatrix::from_rows(&rows).expect("A3 conjugate is a valid matrix")
}

pub fn gen_b_clause<R: Rng + ?Sized>(rng: &mut R, n: usize, k: usize) -> Result<ClauseSpec> {
    if n < k {
        return Err(Error::contract(format!("n = {n} < k = {k}")));
    }
    let mut vars = index::sample(rng, n, k).into_vec();
    // B^(k) is symmetric, so the variable order carries no information.
    vars.sort_unstable();
    ClauseSpec::distance_clause(vars)
}

/// Distance matrix of a single clause: 1 on the clause pairs, `max_distance`
/// elsewhere off the diagonal.
pub fn b_clause_matrix(n: usize, clause: &ClauseSpec, max_distance: i64) -> Result<SquareMatrix> {
    let mut b = SquareMatrix::constant_off_diagonal(n, max_distance)?;
    for (i, j, _) in clause.pairs() {
        if i >= n || j >= n {
            return Err(Error::contract("clause variable outside matrix"));
        }
        b.set(i, j, 1);
    }
    Ok(b)
}

/// `B₁ ⊙ … ⊙ B_{m1} ⊙ C`: 1 wherever some clause covers the pair, `C`
/// elsewhere.
pub fn compose_distance(b_clauses: &[ClauseSpec], complement: &SquareMatrix) -> Result<SquareMatrix> {
    let n = complement.n();
    let top = complement.max_entry().max(2);
    b_clauses.iter().try_fold(complement.clone(), |acc, c| {
        acc.min_compose(&b_clause_matrix(n, c, top)?)
    })
}

/// Counts `n_d` and the positions they occupy for the geometric complement.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GeometricFill {
    /// `(d, n_d)` for `d = 2, 3, …`.
    pub counts: Vec<(i64, usize)>,
    /// `(i, j, d)` placements on previously free off-diagonal positions.
    pub placements: Vec<(usize, usize, i64)>,
}

/// The value-count sequence for `n_1 = ones` already-placed unit distances:
/// `n_d = max(1, ⌈p₁ · remaining⌉)` capped at `remaining`, with
/// `p₁ = ones / (n(n−1))`, stopping when no position remains.
pub fn geometric_counts(n: usize, ones: usize) -> Result<Vec<(i64, usize)>> {
    let total = n * (n - 1);
    if ones == 0 {
        return Err(Error::Generation(
            "no distance clause placed: p1 = 0 leaves the recursion undefined".into(),
        ));
    }
    if ones > total {
        return Err(Error::contract(format!("{ones} unit entries exceed {total} positions")));
    }
    let mut counts = Vec::new();
    let mut remaining = total - ones;
    let mut d = 2i64;
    while remaining > 0 {
        // Integer ceiling of ones * remaining / total.
        let nd = (ones * remaining).div_ceil(total).max(1).min(remaining);
        counts.push((d, nd));
        remaining -= nd;
        d += 1;
    }
    Ok(counts)
}

/// Assigns geometric values to the off-diagonal positions not in `ones`.
pub fn fill_geometric<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    ones: &BTreeSet<(usize, usize)>,
) -> Result<GeometricFill> {
    let counts = geometric_counts(n, ones.len())?;
    let mut free: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .filter(|&(i, j)| i != j && !ones.contains(&(i, j)))
        .collect();
    free.shuffle(rng);
    let mut placements = Vec::with_capacity(free.len());
    let mut it = free.into_iter();
    for &(d, nd) in &counts {
        placements.extend(it.by_ref().take(nd).map(|(i, j)| (i, j, d)));
    }
    debug_assert!(it.next().is_none());
    Ok(GeometricFill { counts, placements })
}

/// Builds one random QAP-SAT instance; a pure function of `config`.
pub fn generate(config: &GeneratorConfig) -> Result<QapSatInstance> {
    config.validate()?;
    let n = config.n;
    let mut rng = rng_from_seed(config.seed);

    let a_clauses = (0..config.m)
        .map(|_| gen_a_clause(&mut rng, n))
        .collect::<Result<Vec<_>>>()?;
    let b_clauses = (0..config.m1)
        .map(|_| gen_b_clause(&mut rng, n, config.k))
        .collect::<Result<Vec<_>>>()?;

    let mut a = SquareMatrix::zeros(n);
    for c in &a_clauses {
        c.embed_into(&mut a)?;
    }

    let ones: BTreeSet<(usize, usize)> = b_clauses
        .iter()
        .flat_map(|c| c.pairs().map(|(i, j, _)| (i, j)).collect::<Vec<_>>())
        .collect();
    let fill = fill_geometric(&mut rng, n, &ones)?;
    let top = fill.counts.last().map_or(2, |&(d, _)| d);
    let mut complement = SquareMatrix::constant_off_diagonal(n, top)?;
    for &(i, j, d) in &fill.placements {
        complement.set(i, j, d);
    }
    let b = compose_distance(&b_clauses, &complement)?;

    let bound = a_clauses.iter().map(|c| clause_lower_bound(c, 1)).sum();
    QapSatInstance::new(QapInstance::new(a, b)?, a_clauses, b_clauses, config.seed, bound)
}

/// SplitMix64 finalizer.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of replicate `replicate` in cell `(n, m1, m)`: the master seed and
/// each coordinate are folded in turn through `h ← splitmix64(h ⊕ x)`.
pub fn cell_seed(master_seed: u64, n: usize, m1: usize, m: usize, replicate: usize) -> u64 {
    [n, m1, m, replicate]
        .iter()
        .fold(splitmix64(master_seed), |h, &x| splitmix64(h ^ x as u64))
}

/// Full factorial design over `(n, m1, m)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FactorialGrid {
    pub n: Vec<usize>,
    pub m1: Vec<usize>,
    pub m: Vec<usize>,
}

impl FactorialGrid {
    /// The standard sweep over the given dimensions: `m1 ∈ {3, 6, …, 27}`,
    /// `m ∈ {1, …, 40}`.
    pub fn standard_design(n: impl IntoIterator<Item = usize>) -> Self {
        Self {
            n: n.into_iter().collect(),
            m1: (3..=27).step_by(3).collect(),
            m: (1..=40).collect(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.n.is_empty() || self.m1.is_empty() || self.m.is_empty()
    }

    /// Cells in `n`, then `m1`, then `m` order.
    pub fn cells(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        self.n.iter().flat_map(move |&n| {
            self.m1
                .iter()
                .flat_map(move |&m1| self.m.iter().map(move |&m| (n, m1, m)))
        })
    }

    pub fn cell_count(&self) -> usize {
        self.n.len() * self.m1.len() * self.m.len()
    }
}

/// File stem of one replicate.
pub fn instance_stem(n: usize, m1: usize, m: usize, replicate: usize) -> String {
    format!("qapsat_n{n}_m1-{m1}_m{m}_r{replicate}")
}

/// One generated instance of a suite.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SuiteEntry {
    pub n: usize,
    pub m1: usize,
    pub m: usize,
    pub replicate: usize,
    pub seed: u64,
    pub files: InstanceFilePair,
}

pub const MANIFEST_FILE: &str = "manifest.csv";

/// Generates `instances_per_cell` instances for every grid cell under
/// `out_dir`, plus `manifest.csv` listing cells, seeds and paths (relative
/// to `out_dir`).
pub fn generate_suite(
    grid: &FactorialGrid,
    instances_per_cell: usize,
    master_seed: u64,
    out_dir: &Path,
) -> Result<Vec<SuiteEntry>> {
    if grid.is_empty() || instances_per_cell == 0 {
        return Err(Error::Invalid {
            what: "suite design",
            reason: "grid and replicate count must be non-empty".into(),
        });
    }
    let mut entries = Vec::with_capacity(grid.cell_count() * instances_per_cell);
    for (n, m1, m) in grid.cells() {
        for replicate in 0..instances_per_cell {
            let seed = cell_seed(master_seed, n, m1, m, replicate);
            let qs = generate(&GeneratorConfig::new(n, m, m1, seed))?;
            let files = InstanceFilePair::in_dir(out_dir, &instance_stem(n, m1, m, replicate));
            write_instance(&qs, &files)?;
            entries.push(SuiteEntry {
                n,
                m1,
                m,
                replicate,
                seed,
                files,
            });
        }
    }
    write_manifest(&entries, out_dir)?;
    Ok(entries)
}

fn write_manifest(entries: &[SuiteEntry], out_dir: &Path) -> Result<()> {
    let path = out_dir.join(MANIFEST_FILE);
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(&path)?;
    w.write_record(["n", "k", "m1", "m", "replicate", "seed", "data_path", "meta_path"])?;
    let rel = |p: &PathBuf| p.strip_prefix(out_dir).unwrap_or(p).to_string_lossy().into_owned();
    for e in entries {
        w.write_record([
            e.n.to_string(),
            "3".into(),
            e.m1.to_string(),
            e.m.to_string(),
            e.replicate.to_string(),
            e.seed.to_string(),
            rel(&e.files.data_path),
            rel(&e.files.meta_path),
        ])?;
    }
    w.flush().map_err(|e| Error::io(&path, e))
}
