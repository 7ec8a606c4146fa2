use std::fmt;

use crate::error::{Error, Result};

/// Dense `n × n` matrix of non-negative integers with a zero diagonal.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct SquareMatrix {
    n: usize,
    data: Vec<i64>,
}

impl SquareMatrix {
    /// Builds a matrix from row-major entries, checking the zero-diagonal and
    /// non-negativity invariants.
    pub fn new(n: usize, data: Vec<i64>) -> Result<Self> {
        if n == 0 {
            return Err(invalid("dimension must be positive"));
        }
        if data.len() != n * n {
            return Err(invalid(format!(
                "expected {} entries for n={n}, got {}",
                n * n,
                data.len()
            )));
        }
        for i in 0..n {
            for j in 0..n {
                let v = data[i * n + j];
                if v < 0 {
                    return Err(invalid(format!("negative entry {v} at ({}, {})", i + 1, j + 1)));
                }
                if i == j && v != 0 {
                    return Err(invalid(format!("non-zero diagonal entry {v} at row {}", i + 1)));
                }
            }
        }
        Ok(Self { n, data })
    }

    pub fn from_rows<R: AsRef<[i64]>>(rows: &[R]) -> Result<Self> {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != n {
                return Err(invalid(format!(
                    "row {} has {} entries, expected {n}",
                    i + 1,
                    row.len()
                )));
            }
            data.extend_from_slice(row);
        }
        Self::new(n, data)
    }

    pub fn zeros(n: usize) -> Self {
        assert!(n > 0, "dimension must be positive");
        Self {
            n,
            data: vec![0; n * n],
        }
    }

    /// Matrix with every off-diagonal entry equal to `value`.
    pub fn constant_off_diagonal(n: usize, value: i64) -> Result<Self> {
        let mut data = vec![value; n * n];
        for i in 0..n {
            data[i * n + i] = 0;
        }
        Self::new(n, data)
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> i64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub(crate) fn set(&mut self, i: usize, j: usize, v: i64) {
        debug_assert!(v >= 0 && (i != j || v == 0));
        self.data[i * self.n + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[i64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[i64]> {
        self.data.chunks_exact(self.n)
    }

    pub fn entries(&self) -> &[i64] {
        &self.data
    }

    pub fn max_entry(&self) -> i64 {
        self.data.iter().copied().max().unwrap_or(0)
    }

    /// Smallest strictly positive off-diagonal entry, if any.
    pub fn min_positive_off_diagonal(&self) -> Option<i64> {
        self.off_diagonal().filter(|&(_, _, v)| v > 0).map(|(_, _, v)| v).min()
    }

    pub fn off_diagonal(&self) -> impl Iterator<Item = (usize, usize, i64)> + '_ {
        let n = self.n;
        (0..n).flat_map(move |i| {
            (0..n)
                .filter(move |&j| j != i)
                .map(move |j| (i, j, self.data[i * n + j]))
        })
    }

    pub fn off_diagonal_sum(&self) -> i64 {
        self.data.iter().sum()
    }

    /// Element-wise minimum.
    pub fn min_compose(&self, other: &SquareMatrix) -> Result<SquareMatrix> {
        if self.n != other.n {
            return Err(Error::contract(format!(
                "cannot compose {}x{} with {}x{}",
                self.n, self.n, other.n, other.n
            )));
        }
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| a.min(b)).collect();
        Ok(SquareMatrix { n: self.n, data })
    }

    /// Element-wise sum, with overflow reported as an error.
    pub fn checked_add(&self, other: &SquareMatrix) -> Result<SquareMatrix> {
        if self.n != other.n {
            return Err(Error::contract("matrix dimensions differ"));
        }
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| a.checked_add(b).ok_or_else(|| invalid("entry overflow")))
            .collect::<Result<Vec<_>>>()?;
        Ok(SquareMatrix { n: self.n, data })
    }
}

impl fmt::Debug for SquareMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.rows()).finish()
    }
}

fn invalid(reason: impl Into<String>) -> Error {
    Error::Invalid {
        what: "matrix",
        reason: reason.into(),
    }
}
