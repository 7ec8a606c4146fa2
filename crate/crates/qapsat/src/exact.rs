//! Certified global minimization: full enumeration and depth-first
//! branch-and-bound with Gilmore-Lawler bounds.

use std::time::{Duration, Instant};

use crate::error::{Error, Result};
use crate::instance::QapInstance;
use crate::lap::LapSolver;
use crate::permutation::Permutation;

/// Default dimension cap for [`enumerate_min`].
pub const DEFAULT_ENUMERATION_CAP: usize = 11;

/// Result of an exact (or capped) minimization.
#[derive(Clone, Debug, PartialEq)]
pub struct SolveOutcome {
    pub minimum: i64,
    pub argmin: Permutation,
    /// Enumeration: permutations visited (`n!`). Branch-and-bound: search
    /// nodes whose children were generated.
    pub nodes_expanded: u64,
    /// Lower-bound evaluations (one linear assignment each).
    pub lap_calls: u64,
    /// Informational only; effort comparisons use the counters.
    pub elapsed: Duration,
    /// `minimum == global lower bound`, when a bound is known.
    pub satisfied: Option<bool>,
    /// False only when branch-and-bound stopped at its node cap.
    pub proven: bool,
}

impl SolveOutcome {
    /// Fills `satisfied` from a clause lower bound.
    pub fn with_lower_bound(mut self, global_lower_bound: i64) -> Result<Self> {
        self.satisfied = Some(crate::instance::is_satisfied(global_lower_bound, self.minimum)?);
        Ok(self)
    }
}

/// Exact minimum over all `n!` permutations, visited in Heap's order with
/// O(n) incremental swap evaluation.
pub fn enumerate_min(inst: &QapInstance, cap: usize) -> Result<SolveOutcome> {
    let n = inst.n();
    if n > cap {
        return Err(Error::EnumerationCap { n, cap });
    }
    let start = Instant::now();
    let mut p: Vec<usize> = (0..n).collect();
    let mut value = inst.evaluate_unchecked(&p);
    let mut best = value;
    let mut best_p = p.clone();
    let mut visited: u64 = 1;
    let mut c = vec![0usize; n];
    let mut i = 1;
    while i < n {
        if c[i] < i {
            let j = if i % 2 == 0 { 0 } else { c[i] };
            value += inst.delta_swap_unchecked(&p, j, i);
            p.swap(j, i);
            visited += 1;
            if value < best {
                best = value;
                best_p.copy_from_slice(&p);
            }
            c[i] += 1;
            i = 1;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    Ok(SolveOutcome {
        minimum: best,
        argmin: Permutation::new(best_p).expect("enumeration keeps a bijection"),
        nodes_expanded: visited,
        lap_calls: 0,
        elapsed: start.elapsed(),
        satisfied: None,
        proven: true,
    })
}

/// Partial injective facility → location map.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Assignment {
    mapping: Vec<Option<usize>>,
}

impl Assignment {
    pub fn empty(n: usize) -> Self {
        Self { mapping: vec![None; n] }
    }

    pub fn new(mapping: Vec<Option<usize>>) -> Result<Self> {
        let n = mapping.len();
        let mut used = vec![false; n];
        for loc in mapping.iter().flatten() {
            if *loc >= n || used[*loc] {
                return Err(Error::Invalid {
                    what: "assignment",
                    reason: format!("{mapping:?} is not injective into 0..{n}"),
                });
            }
            used[*loc] = true;
        }
        Ok(Self { mapping })
    }

    pub fn from_permutation(sigma: &Permutation) -> Self {
        Self {
            mapping: sigma.as_slice().iter().map(|&l| Some(l)).collect(),
        }
    }

    pub fn mapping(&self) -> &[Option<usize>] {
        &self.mapping
    }

    /// Objective contribution of the assigned facilities among themselves.
    pub fn cost(&self, inst: &QapInstance) -> i64 {
        let (a, b) = (inst.flow(), inst.distance());
        let mut total = 0;
        for (f, lf) in self.assigned() {
            for (g, lg) in self.assigned() {
                total += a.get(f, g) * b.get(lf, lg);
            }
        }
        total
    }

    fn assigned(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.mapping.iter().enumerate().filter_map(|(f, l)| l.map(|l| (f, l)))
    }
}

/// Minimal scalar product: the `len(a)` largest `a` values against the
/// smallest `b` values.
fn min_scalar_product(a_desc: &[i64], b_asc: &[i64]) -> i64 {
    a_desc.iter().zip(b_asc).map(|(x, y)| x * y).sum()
}

/// Gilmore-Lawler lower bound on every completion of `partial`.
///
/// Fixed-to-fixed cost, plus a linear assignment over free facility `i` and
/// free location `j` with cost `A[i][i]·B[j][j]` + interaction with the fixed
/// part + the minimal scalar product of `i`'s remaining flow row against
/// `j`'s remaining distance row.
pub fn gilmore_lawler_bound(inst: &QapInstance, partial: &Assignment) -> Result<i64> {
    let n = inst.n();
    if partial.mapping.len() != n {
        return Err(Error::contract("assignment dimension differs from instance"));
    }
    let (a, b) = (inst.flow(), inst.distance());
    let fixed: Vec<(usize, usize)> = partial.assigned().collect();
    let free_f: Vec<usize> = (0..n).filter(|&i| partial.mapping[i].is_none()).collect();
    let mut used = vec![false; n];
    for &(_, l) in &fixed {
        used[l] = true;
    }
    let free_l: Vec<usize> = (0..n).filter(|&j| !used[j]).collect();
    let r = free_f.len();
    let base = partial.cost(inst);
    if r == 0 {
        return Ok(base);
    }
    let mut cost = vec![0i64; r * r];
    for (ii, &i) in free_f.iter().enumerate() {
        let mut a_desc: Vec<i64> = free_f
            .iter()
            .filter(|&&h| h != i)
            .map(|&h| a.get(i, h))
            .filter(|&v| v != 0)
            .collect();
        a_desc.sort_unstable_by(|x, y| y.cmp(x));
        for (jj, &j) in free_l.iter().enumerate() {
            let mut b_asc: Vec<i64> = free_l.iter().filter(|&&l| l != j).map(|&l| b.get(j, l)).collect();
            b_asc.sort_unstable();
            let linear: i64 = fixed
                .iter()
                .map(|&(f, lf)| a.get(i, f) * b.get(j, lf) + a.get(f, i) * b.get(lf, j))
                .sum();
            cost[ii * r + jj] = a.get(i, i) * b.get(j, j) + linear + min_scalar_product(&a_desc, &b_asc);
        }
    }
    Ok(base + LapSolver::new().solve_value(r, &cost))
}

/// Options for [`branch_and_bound`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct BnbOptions {
    /// Known lower bound; the search stops as soon as an incumbent reaches
    /// it (decision mode).
    pub target: Option<i64>,
    /// Stop after this many node expansions, reporting `proven = false`.
    pub node_cap: Option<u64>,
}

/// Depth-first branch-and-bound.
///
/// Facilities are fixed in index order. Each expansion evaluates the bound
/// of every child (one per free location) and visits children by ascending
/// `(bound, location)`, pruning once a bound reaches the incumbent.
pub fn branch_and_bound(inst: &QapInstance, options: BnbOptions) -> SolveOutcome {
    let start = Instant::now();
    let mut search = Search::new(inst, options);
    search.run();
    let proven = !search.capped;
    let argmin = Permutation::new(search.best.clone()).expect("search yields a bijection");
    // A cap hit before the first leaf leaves no incumbent; report the
    // placeholder permutation's value instead.
    let minimum = if search.incumbent == i64::MAX {
        inst.evaluate_unchecked(argmin.as_slice())
    } else {
        search.incumbent
    };
    SolveOutcome {
        minimum,
        argmin,
        nodes_expanded: search.nodes,
        lap_calls: search.lap_calls,
        elapsed: start.elapsed(),
        satisfied: None,
        proven,
    }
}

struct Search<'a> {
    inst: &'a QapInstance,
    n: usize,
    options: BnbOptions,
    /// `a_desc[d][i - d]`: non-zero `A[i][h]`, `h ≥ d`, `h ≠ i`, descending.
    a_desc: Vec<Vec<Vec<i64>>>,
    /// `linear[i * n + j]`: cost between free facility `i` at location `j`
    /// and all fixed facilities.
    linear: Vec<i64>,
    placed: Vec<usize>,
    loc_used: Vec<bool>,
    incumbent: i64,
    best: Vec<usize>,
    nodes: u64,
    lap_calls: u64,
    capped: bool,
    done: bool,
    lap: LapSolver,
    cost_buf: Vec<i64>,
}

impl<'a> Search<'a> {
    fn new(inst: &'a QapInstance, options: BnbOptions) -> Self {
        let n = inst.n();
        let a = inst.flow();
        let a_desc = (0..n)
            .map(|d| {
                (d..n)
                    .map(|i| {
                        let mut v: Vec<i64> = (d..n)
                            .filter(|&h| h != i)
                            .map(|h| a.get(i, h))
                            .filter(|&x| x != 0)
                            .collect();
                        v.sort_unstable_by(|x, y| y.cmp(x));
                        v
                    })
                    .collect()
            })
            .collect();
        Self {
            inst,
            n,
            options,
            a_desc,
            linear: vec![0; n * n],
            placed: Vec::with_capacity(n),
            loc_used: vec![false; n],
            incumbent: i64::MAX,
            best: (0..n).collect(),
            nodes: 0,
            lap_calls: 0,
            capped: false,
            done: false,
            lap: LapSolver::new(),
            cost_buf: Vec::new(),
        }
    }

    fn run(&mut self) {
        if self.n == 1 {
            self.incumbent = 0;
            self.best = vec![0];
            return;
        }
        self.expand(0, 0, None);
    }

    /// Expands the node where facilities `0..depth` are placed with mutual
    /// cost `fixed`.
    fn expand(&mut self, depth: usize, fixed: i64, parent_bound: Option<i64>) {
        if let Some(cap) = self.options.node_cap {
            if self.nodes >= cap {
                self.capped = true;
                self.done = true;
                return;
            }
        }
        self.nodes += 1;
        let n = self.n;
        let (a, b) = (self.inst.flow(), self.inst.distance());
        let free: Vec<usize> = (0..n).filter(|&j| !self.loc_used[j]).collect();

        // For each free location j: distances to the other free locations,
        // ascending. A child removes one location from these lists.
        let sorted_rows: Vec<Vec<i64>> = free
            .iter()
            .map(|&j| {
                let mut v: Vec<i64> = free.iter().filter(|&&l| l != j).map(|&l| b.get(j, l)).collect();
                v.sort_unstable();
                v
            })
            .collect();

        let mut children: Vec<(i64, usize)> = Vec::with_capacity(free.len());
        for &l in &free {
            let child_fixed = fixed + a.get(depth, depth) * b.get(l, l) + self.linear[depth * n + l];
            let bound = if depth + 1 == n {
                child_fixed
            } else {
                child_fixed + self.child_lap(depth, l, &free, &sorted_rows)
            };
            if let Some(pb) = parent_bound {
                debug_assert!(bound >= pb, "bound decreased from {pb} to {bound}");
            }
            children.push((bound, l));
        }
        children.sort_unstable();

        for (bound, l) in children {
            if self.done || bound >= self.incumbent {
                break;
            }
            if depth + 2 >= n {
                // One facility left: its only completion is exact.
                self.placed.push(l);
                let complete = if depth + 1 == n {
                    self.placed.clone()
                } else {
                    let last = (0..n)
                        .find(|&j| !self.loc_used[j] && j != l)
                        .expect("one free location remains");
                    let mut p = self.placed.clone();
                    p.push(last);
                    p
                };
                self.placed.pop();
                debug_assert_eq!(self.inst.evaluate_unchecked(&complete), bound);
                self.incumbent = bound;
                self.best = complete;
                if self.options.target == Some(bound) {
                    self.done = true;
                }
                continue;
            }
            let child_fixed = fixed + a.get(depth, depth) * b.get(l, l) + self.linear[depth * n + l];
            self.place(depth, l, 1);
            self.expand(depth + 1, child_fixed, Some(bound));
            self.place(depth, l, -1);
        }
    }

    /// Adds (`sign = 1`) or removes (`sign = -1`) facility `f` at location
    /// `l` from the fixed part.
    fn place(&mut self, f: usize, l: usize, sign: i64) {
        let n = self.n;
        let (a, b) = (self.inst.flow(), self.inst.distance());
        for i in f + 1..n {
            let (out_f, in_f) = (a.get(i, f), a.get(f, i));
            if out_f == 0 && in_f == 0 {
                continue;
            }
            let row = &mut self.linear[i * n..(i + 1) * n];
            for (j, cell) in row.iter_mut().enumerate() {
                *cell += sign * (out_f * b.get(j, l) + in_f * b.get(l, j));
            }
        }
        if sign > 0 {
            self.placed.push(l);
            self.loc_used[l] = true;
        } else {
            self.placed.pop();
            self.loc_used[l] = false;
        }
    }

    /// Linear assignment part of the bound for placing facility `depth` at
    /// location `l`.
    fn child_lap(&mut self, depth: usize, l: usize, free: &[usize], sorted_rows: &[Vec<i64>]) -> i64 {
        self.lap_calls += 1;
        let n = self.n;
        let (a, b) = (self.inst.flow(), self.inst.distance());
        let r = n - depth - 1;
        self.cost_buf.clear();
        self.cost_buf.resize(r * r, 0);
        let a_rows = &self.a_desc[depth + 1];
        let mut trimmed: Vec<i64> = Vec::with_capacity(free.len());
        let mut jj = 0;
        for (col, &j) in free.iter().enumerate() {
            if j == l {
                continue;
            }
            trimmed.clear();
            let removed = b.get(j, l);
            let row = &sorted_rows[col];
            let pos = row
                .iter()
                .position(|&x| x == removed)
                .expect("distance present in sorted row");
            trimmed.extend_from_slice(&row[..pos]);
            trimmed.extend_from_slice(&row[pos + 1..]);
            let bjl = b.get(j, l);
            let blj = b.get(l, j);
            let bjj = b.get(j, j);
            for (ii, i) in (depth + 1..n).enumerate() {
                let c = self.linear[i * n + j]
                    + a.get(i, depth) * bjl
                    + a.get(depth, i) * blj
                    + a.get(i, i) * bjj
                    + min_scalar_product(&a_rows[ii], &trimmed);
                self.cost_buf[ii * r + jj] = c;
            }
            jj += 1;
        }
        self.lap.solve_value(r, &self.cost_buf)
    }
}
