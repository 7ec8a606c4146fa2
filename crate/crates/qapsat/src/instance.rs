//! QAP instances, clause structure, and the objective.

use crate::error::{Error, Result};
use crate::matrix::SquareMatrix;
use crate::permutation::Permutation;

/// A QAP of dimension `n`: flow matrix `a` between facilities and distance
/// matrix `b` between locations.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QapInstance {
    a: SquareMatrix,
    b: SquareMatrix,
}

impl QapInstance {
    /// Rejects mismatched dimensions and instances whose objective could
    /// leave the i64 range (`n² · max A · max B`).
    pub fn new(a: SquareMatrix, b: SquareMatrix) -> Result<Self> {
        if a.n() != b.n() {
            return Err(Error::contract(format!(
                "flow matrix is {0}x{0} but distance matrix is {1}x{1}",
                a.n(),
                b.n()
            )));
        }
        let n = a.n();
        let (max_a, max_b) = (a.max_entry(), b.max_entry());
        let bound = (n as i128) * (n as i128) * (max_a as i128) * (max_b as i128);
        if bound > i64::MAX as i128 {
            return Err(Error::Overflow { n, max_a, max_b });
        }
        Ok(Self { a, b })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.a.n()
    }

    #[inline]
    pub fn flow(&self) -> &SquareMatrix {
        &self.a
    }

    #[inline]
    pub fn distance(&self) -> &SquareMatrix {
        &self.b
    }

    /// `Σᵢ Σⱼ A[i][j] · B[σ(i)][σ(j)]`.
    pub fn evaluate(&self, sigma: &Permutation) -> Result<i64> {
        self.check_perm(sigma)?;
        Ok(self.evaluate_unchecked(sigma.as_slice()))
    }

    pub(crate) fn evaluate_unchecked(&self, sigma: &[usize]) -> i64 {
        let mut total = 0;
        for (i, row) in self.a.rows().enumerate() {
            let brow = self.b.row(sigma[i]);
            for (j, &aij) in row.iter().enumerate() {
                if aij != 0 {
                    total += aij * brow[sigma[j]];
                }
            }
        }
        total
    }

    /// Change in objective when facilities `r` and `s` exchange locations,
    /// computed in O(n).
    pub fn delta_swap(&self, sigma: &Permutation, r: usize, s: usize) -> Result<i64> {
        self.check_perm(sigma)?;
        let n = self.n();
        if r == s || r >= n || s >= n {
            return Err(Error::contract(format!(
                "swap needs two distinct indices below {n}, got ({r}, {s})"
            )));
        }
        Ok(self.delta_swap_unchecked(sigma.as_slice(), r, s))
    }

    pub(crate) fn delta_swap_unchecked(&self, p: &[usize], r: usize, s: usize) -> i64 {
        let (a, b) = (&self.a, &self.b);
        let (pr, ps) = (p[r], p[s]);
        let mut d = (a.get(r, r) - a.get(s, s)) * (b.get(ps, ps) - b.get(pr, pr))
            + (a.get(r, s) - a.get(s, r)) * (b.get(ps, pr) - b.get(pr, ps));
        for (k, &pk) in p.iter().enumerate() {
            if k == r || k == s {
                continue;
            }
            d += (a.get(k, r) - a.get(k, s)) * (b.get(pk, ps) - b.get(pk, pr))
                + (a.get(r, k) - a.get(s, k)) * (b.get(ps, pk) - b.get(pr, pk));
        }
        d
    }

    fn check_perm(&self, sigma: &Permutation) -> Result<()> {
        if sigma.len() != self.n() {
            return Err(Error::contract(format!(
                "permutation of length {} for instance of dimension {}",
                sigma.len(),
                self.n()
            )));
        }
        Ok(())
    }
}

/// One clause: an ordered set of distinct variables and the `k × k`
/// submatrix placed on them.
///
/// Equality compares the placed entries, so listing the variables in another
/// order together with the matching conjugated submatrix is the same clause.
#[derive(Clone, Debug)]
pub struct ClauseSpec {
    variables: Vec<usize>,
    submatrix: SquareMatrix,
}

impl PartialEq for ClauseSpec {
    fn eq(&self, other: &Self) -> bool {
        let placed = |c: &ClauseSpec| {
            let mut v: Vec<(usize, usize, i64)> = (0..c.k())
                .flat_map(|i| (0..c.k()).map(move |j| (i, j)))
                .map(|(i, j)| (c.variables[i], c.variables[j], c.submatrix.get(i, j)))
                .collect();
            v.sort_unstable();
            v
        };
        self.k() == other.k() && placed(self) == placed(other)
    }
}

impl Eq for ClauseSpec {}

impl ClauseSpec {
    pub fn new(variables: Vec<usize>, submatrix: SquareMatrix) -> Result<Self> {
        if variables.len() != submatrix.n() {
            return Err(Error::Invalid {
                what: "clause",
                reason: format!(
                    "{} variables but a {}x{} submatrix",
                    variables.len(),
                    submatrix.n(),
                    submatrix.n()
                ),
            });
        }
        let mut sorted = variables.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Invalid {
                what: "clause",
                reason: format!("repeated variable in {variables:?}"),
            });
        }
        Ok(Self { variables, submatrix })
    }

    /// B-clause on `variables`: all off-diagonal submatrix entries equal 1.
    pub fn distance_clause(variables: Vec<usize>) -> Result<Self> {
        let k = variables.len();
        Self::new(variables, SquareMatrix::constant_off_diagonal(k, 1)?)
    }

    pub fn k(&self) -> usize {
        self.variables.len()
    }

    pub fn variables(&self) -> &[usize] {
        &self.variables
    }

    pub fn submatrix(&self) -> &SquareMatrix {
        &self.submatrix
    }

    /// True when every off-diagonal submatrix entry is positive.
    pub fn is_flow_clause(&self) -> bool {
        self.submatrix.off_diagonal().all(|(_, _, v)| v > 0)
    }

    /// Ordered variable pairs `(vᵢ, vⱼ)`, `i ≠ j`, with the submatrix entry.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize, i64)> + '_ {
        self.submatrix
            .off_diagonal()
            .map(|(i, j, v)| (self.variables[i], self.variables[j], v))
    }

    /// Adds this clause's submatrix into `target` at its variable positions.
    pub(crate) fn embed_into(&self, target: &mut SquareMatrix) -> Result<()> {
        for (i, j, v) in self.pairs() {
            if i >= target.n() || j >= target.n() {
                return Err(Error::Invalid {
                    what: "clause",
                    reason: format!("variable {} outside dimension {}", i.max(j) + 1, target.n()),
                });
            }
            let sum = target.get(i, j).checked_add(v).ok_or_else(|| Error::Overflow {
                n: target.n(),
                max_a: v,
                max_b: 0,
            })?;
            target.set(i, j, sum);
        }
        Ok(())
    }
}

/// `ell` times the sum of the clause's off-diagonal submatrix entries.
pub fn clause_lower_bound(clause: &ClauseSpec, ell: i64) -> i64 {
    ell * clause.submatrix().off_diagonal_sum()
}

/// A QAP together with the clauses it was built from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QapSatInstance {
    instance: QapInstance,
    a_clauses: Vec<ClauseSpec>,
    b_clauses: Vec<ClauseSpec>,
    seed: u64,
    global_lower_bound: i64,
}

impl QapSatInstance {
    /// Checks that `A` is exactly the sum of the embedded flow clauses, that
    /// every distance-clause pair has distance 1, and that the stated lower
    /// bound equals the sum of clause bounds.
    pub fn new(
        instance: QapInstance,
        a_clauses: Vec<ClauseSpec>,
        b_clauses: Vec<ClauseSpec>,
        seed: u64,
        global_lower_bound: i64,
    ) -> Result<Self> {
        let n = instance.n();
        let invalid = |reason: String| Error::Invalid {
            what: "QAP-SAT instance",
            reason,
        };
        let mut sum = SquareMatrix::zeros(n);
        for (idx, c) in a_clauses.iter().enumerate() {
            if !c.is_flow_clause() {
                return Err(invalid(format!(
                    "flow clause {} has a non-positive off-diagonal entry",
                    idx + 1
                )));
            }
            c.embed_into(&mut sum)?;
        }
        if &sum != instance.flow() {
            return Err(invalid(format!(
                "flow matrix is not the sum of its {} clauses",
                a_clauses.len()
            )));
        }
        for (idx, c) in b_clauses.iter().enumerate() {
            for (i, j, _) in c.pairs() {
                if i >= n || j >= n {
                    return Err(invalid(format!(
                        "distance clause {} references variable {}",
                        idx + 1,
                        i.max(j) + 1
                    )));
                }
                if instance.distance().get(i, j) != 1 {
                    return Err(invalid(format!(
                        "distance clause {} covers ({}, {}) but B there is {}",
                        idx + 1,
                        i + 1,
                        j + 1,
                        instance.distance().get(i, j)
                    )));
                }
            }
        }
        let expected: i64 = a_clauses.iter().map(|c| clause_lower_bound(c, 1)).sum();
        if expected != global_lower_bound {
            return Err(invalid(format!(
                "global lower bound {global_lower_bound} differs from clause sum {expected}"
            )));
        }
        Ok(Self {
            instance,
            a_clauses,
            b_clauses,
            seed,
            global_lower_bound,
        })
    }

    pub fn instance(&self) -> &QapInstance {
        &self.instance
    }

    pub fn n(&self) -> usize {
        self.instance.n()
    }

    /// Clause size, taken from the first clause (3 for generated instances).
    pub fn k(&self) -> usize {
        self.a_clauses
            .first()
            .or(self.b_clauses.first())
            .map_or(0, ClauseSpec::k)
    }

    pub fn a_clauses(&self) -> &[ClauseSpec] {
        &self.a_clauses
    }

    pub fn b_clauses(&self) -> &[ClauseSpec] {
        &self.b_clauses
    }

    pub fn m(&self) -> usize {
        self.a_clauses.len()
    }

    pub fn m1(&self) -> usize {
        self.b_clauses.len()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn global_lower_bound(&self) -> i64 {
        self.global_lower_bound
    }

    /// Whether a certified minimum reaches the clause lower bound.
    pub fn is_satisfied(&self, minimum: i64) -> Result<bool> {
        is_satisfied(self.global_lower_bound, minimum)
    }
}

/// `minimum == bound`; a minimum below the bound is reported as an error
/// because the bound is valid for every permutation.
pub fn is_satisfied(global_lower_bound: i64, minimum: i64) -> Result<bool> {
    match minimum.cmp(&global_lower_bound) {
        std::cmp::Ordering::Less => Err(Error::LowerBoundViolated {
            minimum,
            bound: global_lower_bound,
        }),
        std::cmp::Ordering::Equal => Ok(true),
        std::cmp::Ordering::Greater => Ok(false),
    }
}
