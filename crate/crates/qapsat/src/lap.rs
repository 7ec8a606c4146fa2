//! Dense linear assignment (Hungarian method with potentials, O(n³)).

/// Reusable workspace so repeated solves inside branch-and-bound do not
/// allocate.
#[derive(Debug, Default, Clone)]
pub struct LapSolver {
    u: Vec<i64>,
    v: Vec<i64>,
    p: Vec<usize>,
    way: Vec<usize>,
    minv: Vec<i64>,
    used: Vec<bool>,
}

const INF: i64 = i64::MAX / 4;

impl LapSolver {
    pub fn new() -> Self {
        Self::default()
    }

    /// Minimum-cost perfect matching value of the row-major `n × n` matrix
    /// `cost`.
    pub fn solve_value(&mut self, n: usize, cost: &[i64]) -> i64 {
        self.run(n, cost);
        // p[j] is the 1-based row matched to column j.
        (1..=n).map(|j| cost[(self.p[j] - 1) * n + (j - 1)]).sum()
    }

    /// Optimal `row → column` assignment and its value.
    pub fn solve(&mut self, n: usize, cost: &[i64]) -> (Vec<usize>, i64) {
        self.run(n, cost);
        let mut assignment = vec![0; n];
        let mut value = 0;
        for j in 1..=n {
            let i = self.p[j] - 1;
            assignment[i] = j - 1;
            value += cost[i * n + j - 1];
        }
        (assignment, value)
    }

    fn run(&mut self, n: usize, cost: &[i64]) {
        assert_eq!(cost.len(), n * n, "cost matrix must be square");
        self.u.clear();
        self.u.resize(n + 1, 0);
        self.v.clear();
        self.v.resize(n + 1, 0);
        self.p.clear();
        self.p.resize(n + 1, 0);
        self.way.clear();
        self.way.resize(n + 1, 0);
        for i in 1..=n {
            self.p[0] = i;
            let mut j0 = 0;
            self.minv.clear();
            self.minv.resize(n + 1, INF);
            self.used.clear();
            self.used.resize(n + 1, false);
            loop {
                self.used[j0] = true;
                let i0 = self.p[j0];
                let row = &cost[(i0 - 1) * n..i0 * n];
                let mut delta = INF;
                let mut j1 = 0;
                for j in 1..=n {
                    if self.used[j] {
                        continue;
                    }
                    let cur = row[j - 1] - self.u[i0] - self.v[j];
                    if cur < self.minv[j] {
                        self.minv[j] = cur;
                        self.way[j] = j0;
                    }
                    if self.minv[j] < delta {
                        delta = self.minv[j];
                        j1 = j;
                    }
                }
                for j in 0..=n {
                    if self.used[j] {
                        self.u[self.p[j]] += delta;
                        self.v[j] -= delta;
                    } else {
                        self.minv[j] -= delta;
                    }
                }
                j0 = j1;
                if self.p[j0] == 0 {
                    break;
                }
            }
            loop {
                let j1 = self.way[j0];
                self.p[j0] = self.p[j1];
                j0 = j1;
                if j0 == 0 {
                    break;
                }
            }
        }
    }
}

/// One-shot convenience wrapper over [`LapSolver::solve`].
pub fn lap_solve(n: usize, cost: &[i64]) -> (Vec<usize>, i64) {
    if n == 0 {
        return (Vec::new(), 0);
    }
    LapSolver::new().solve(n, cost)
}
