//! Robust tabu search over the pairwise-swap neighbourhood.
//!
//! The full swap-delta matrix is kept and updated incrementally. Tabu state
//! is a facility × location matrix of expiry iterations with randomized
//! tenures. Aspiration accepts new-best moves and placements untouched for a
//! long time.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::generator::{rng_from_seed, splitmix64};
use crate::instance::QapInstance;
use crate::permutation::Permutation;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RotsConfig {
    /// Nominal tabu tenure; each move draws its tenure uniformly from
    /// `[⌊0.9·t⌋, ⌈1.1·t⌉]`.
    pub tabu_duration_mean: usize,
    pub aspiration: u64,
    pub max_iterations: u64,
    pub runs: usize,
    pub seed: u64,
}

impl RotsConfig {
    /// Tenure `8n`, aspiration `5n²`, 1000 iterations, 30 runs.
    pub fn for_dimension(n: usize, seed: u64) -> Self {
        Self {
            tabu_duration_mean: 8 * n,
            aspiration: 5 * (n as u64) * (n as u64),
            max_iterations: 1000,
            runs: 30,
            seed,
        }
    }

    fn tenure_range(&self) -> (i64, i64) {
        let t = self.tabu_duration_mean as i64;
        ((9 * t) / 10, (11 * t + 9) / 10)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RotsResult {
    pub success: bool,
    /// Iteration at which the optimum was first reached (0 = initial
    /// permutation).
    pub iterations_to_optimum: Option<u64>,
    pub best_value: i64,
}

/// One tabu search run from a random permutation drawn from `run_seed`,
/// stopping when `optimum` is reached or after `max_iterations` moves.
pub fn rots_run(inst: &QapInstance, optimum: i64, config: &RotsConfig, run_seed: u64) -> RotsResult {
    let mut rng = rng_from_seed(run_seed);
    let n = inst.n();
    let mut p = Permutation::random(n, &mut rng).as_slice().to_vec();
    let mut current = inst.evaluate_unchecked(&p);
    let mut best = current;
    if best <= optimum || n < 2 {
        return finish(best, optimum, Some(0));
    }

    let mut delta = vec![0i64; n * n];
    for i in 0..n {
        for j in i + 1..n {
            delta[i * n + j] = inst.delta_swap_unchecked(&p, i, j);
        }
    }
    // tabu[i * n + loc]: iteration until which facility i may not return
    // to location loc.
    let mut tabu: Vec<i64> = (0..n * n).map(|x| -(x as i64) - 1).collect();
    let (lo, hi) = config.tenure_range();
    let aspiration = config.aspiration as i64;

    for iter in 1..=config.max_iterations as i64 {
        let mut chosen: Option<(usize, usize)> = None;
        let mut chosen_aspired = false;
        let mut min_delta = i64::MAX;
        for i in 0..n - 1 {
            for j in i + 1..n {
                let d = delta[i * n + j];
                let t_i = tabu[i * n + p[j]];
                let t_j = tabu[j * n + p[i]];
                let authorized = t_i < iter || t_j < iter;
                let aspired = t_i < iter - aspiration || t_j < iter - aspiration || current + d < best;
                let take = (aspired && !chosen_aspired)
                    || (aspired && chosen_aspired && d < min_delta)
                    || (!aspired && !chosen_aspired && authorized && d < min_delta);
                if take {
                    chosen = Some((i, j));
                    min_delta = d;
                    chosen_aspired |= aspired;
                }
            }
        }
        // Every move tabu and none aspired: take the best move regardless.
        let (r, s) = chosen.unwrap_or_else(|| best_move(&delta, n));
        let d = delta[r * n + s];

        p.swap(r, s);
        current += d;
        tabu[r * n + p[s]] = iter + draw_tenure(&mut rng, lo, hi);
        tabu[s * n + p[r]] = iter + draw_tenure(&mut rng, lo, hi);
        debug_assert_eq!(current, inst.evaluate_unchecked(&p));

        if current < best {
            best = current;
            if best <= optimum {
                return finish(best, optimum, Some(iter as u64));
            }
        }
        update_deltas(inst, &p, &mut delta, r, s);
    }
    finish(best, optimum, None)
}

fn finish(best: i64, optimum: i64, reached: Option<u64>) -> RotsResult {
    let success = best == optimum;
    RotsResult {
        success,
        iterations_to_optimum: if success { reached } else { None },
        best_value: best,
    }
}

fn draw_tenure(rng: &mut ChaCha8Rng, lo: i64, hi: i64) -> i64 {
    rng.gen_range(lo..=hi)
}

fn best_move(delta: &[i64], n: usize) -> (usize, usize) {
    let mut best = (0, 1);
    for i in 0..n - 1 {
        for j in i + 1..n {
            if delta[i * n + j] < delta[best.0 * n + best.1] {
                best = (i, j);
            }
        }
    }
    best
}

/// Refreshes the delta matrix after facilities `r`, `s` were swapped in `p`:
/// O(n) recomputation for pairs touching `r` or `s`, O(1) correction for
/// the rest.
fn update_deltas(inst: &QapInstance, p: &[usize], delta: &mut [i64], r: usize, s: usize) {
    let n = p.len();
    let (a, b) = (inst.flow(), inst.distance());
    for i in 0..n - 1 {
        for j in i + 1..n {
            if i != r && i != s && j != r && j != s {
                let (pi, pj, pr, ps) = (p[i], p[j], p[r], p[s]);
                delta[i * n + j] += (a.get(r, i) - a.get(r, j) + a.get(s, j) - a.get(s, i))
                    * (b.get(ps, pi) - b.get(ps, pj) + b.get(pr, pj) - b.get(pr, pi))
                    + (a.get(i, r) - a.get(j, r) + a.get(j, s) - a.get(i, s))
                        * (b.get(pi, ps) - b.get(pj, ps) + b.get(pj, pr) - b.get(pi, pr));
            } else {
                delta[i * n + j] = inst.delta_swap_unchecked(p, i, j);
            }
        }
    }
}

/// Seed of run `index` under a base seed.
pub fn run_seed(base: u64, index: usize) -> u64 {
    splitmix64(splitmix64(base) ^ index as u64)
}

/// All `config.runs` runs, seeded from `config.seed`.
pub fn rots_runs(inst: &QapInstance, optimum: i64, config: &RotsConfig) -> Vec<RotsResult> {
    (0..config.runs)
        .map(|k| rots_run(inst, optimum, config, run_seed(config.seed, k)))
        .collect()
}

/// Aggregate over repeated runs.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RotsSummary {
    pub success_rate: f64,
    /// Mean iterations to the optimum, counting failed runs at the full
    /// iteration budget.
    pub mean_iterations: f64,
}

impl RotsSummary {
    pub fn from_results(results: &[RotsResult], max_iterations: u64) -> Self {
        let runs = results.len().max(1) as f64;
        let successes = results.iter().filter(|r| r.success).count() as f64;
        let iters: u64 = results
            .iter()
            .map(|r| r.iterations_to_optimum.unwrap_or(max_iterations))
            .sum();
        Self {
            success_rate: successes / runs,
            mean_iterations: iters as f64 / runs,
        }
    }
}

/// Fraction of runs reaching `optimum`.
pub fn success_rate(inst: &QapInstance, optimum: i64, config: &RotsConfig) -> f64 {
    RotsSummary::from_results(&rots_runs(inst, optimum, config), config.max_iterations).success_rate
}
