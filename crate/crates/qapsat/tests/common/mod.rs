//! Independent reference computations shared by the integration tests.

#![allow(dead_code)]

use qapsat::{ClauseSpec, QapInstance, QapSatInstance, SquareMatrix};

/// Direct double sum over all pairs.
pub fn naive_objective(a: &SquareMatrix, b: &SquareMatrix, sigma: &[usize]) -> i64 {
    let n = a.n();
    let mut total = 0;
    for i in 0..n {
        for j in 0..n {
            total += a.get(i, j) * b.get(sigma[i], sigma[j]);
        }
    }
    total
}

/// Every permutation of `0..n` in lexicographic order.
pub fn all_permutations(n: usize) -> Vec<Vec<usize>> {
    fn rec(prefix: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if prefix.len() == used.len() {
            out.push(prefix.clone());
            return;
        }
        for v in 0..used.len() {
            if !used[v] {
                used[v] = true;
                prefix.push(v);
                rec(prefix, used, out);
                prefix.pop();
                used[v] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), &mut vec![false; n], &mut out);
    out
}

pub fn brute_force_min(inst: &QapInstance) -> i64 {
    all_permutations(inst.n())
        .iter()
        .map(|p| naive_objective(inst.flow(), inst.distance(), p))
        .min()
        .unwrap()
}

pub const A3_ROWS: [[i64; 3]; 3] = [[0, 1, 2], [2, 0, 1], [3, 1, 0]];

/// Flow matrix of the worked n = 5 example: one clause on variables 2, 3, 5.
pub fn example_flow() -> SquareMatrix {
    SquareMatrix::from_rows(&[
        [0, 0, 0, 0, 0],
        [0, 0, 1, 0, 2],
        [0, 2, 0, 0, 1],
        [0, 0, 0, 0, 0],
        [0, 3, 1, 0, 0],
    ])
    .unwrap()
}

/// Distance matrix of the worked example: one clause on variables 1, 2, 5.
pub fn example_distance() -> SquareMatrix {
    SquareMatrix::from_rows(&[
        [0, 1, 2, 4, 1],
        [1, 0, 4, 2, 1],
        [3, 8, 0, 5, 3],
        [3, 6, 7, 0, 2],
        [1, 1, 2, 5, 0],
    ])
    .unwrap()
}

pub fn example_sat() -> QapSatInstance {
    let inst = QapInstance::new(example_flow(), example_distance()).unwrap();
    let a = ClauseSpec::new(vec![1, 2, 4], SquareMatrix::from_rows(&A3_ROWS).unwrap()).unwrap();
    let b = ClauseSpec::distance_clause(vec![0, 1, 4]).unwrap();
    QapSatInstance::new(inst, vec![a], vec![b], 0, 10).unwrap()
}
