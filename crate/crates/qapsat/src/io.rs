//! Instance files.
//!
//! Matrix file (QAPLIB layout, flow matrix first):
//!
//! ```text
//! n
//!
//! A row 1
//! ...
//! A row n
//!
//! B row 1
//! ...
//! B row n
//! ```
//!
//! ASCII decimal integers separated by single spaces, LF line endings. The
//! reader also skips lines starting with `#` and tolerates extra blank lines
//! and runs of whitespace.
//!
//! The sidecar (`<stem>.meta.toml`) carries the clause structure with
//! 1-based variable indices; see [`Sidecar`].

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::generator::conjugate_a3;
use crate::instance::{ClauseSpec, QapInstance, QapSatInstance};
use crate::matrix::SquareMatrix;

pub const SIDECAR_FORMAT_VERSION: u32 = 1;

/// Matrix file plus its optional metadata sidecar.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InstanceFilePair {
    pub data_path: PathBuf,
    pub meta_path: PathBuf,
}

impl InstanceFilePair {
    /// `dir/stem.dat` with sidecar `dir/stem.meta.toml`.
    pub fn in_dir(dir: &Path, stem: &str) -> Self {
        Self {
            data_path: dir.join(format!("{stem}.dat")),
            meta_path: dir.join(format!("{stem}.meta.toml")),
        }
    }

    /// Sidecar path derived from the matrix file path by replacing its
    /// extension with `meta.toml`.
    pub fn from_data_path(data_path: impl Into<PathBuf>) -> Self {
        let data_path = data_path.into();
        let meta_path = data_path.with_extension("meta.toml");
        Self { data_path, meta_path }
    }
}

/// Either a bare QAP (no sidecar) or one with its clause structure.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LoadedInstance {
    Bare(QapInstance),
    Sat(QapSatInstance),
}

impl LoadedInstance {
    pub fn instance(&self) -> &QapInstance {
        match self {
            LoadedInstance::Bare(i) => i,
            LoadedInstance::Sat(s) => s.instance(),
        }
    }

    pub fn as_sat(&self) -> Option<&QapSatInstance> {
        match self {
            LoadedInstance::Bare(_) => None,
            LoadedInstance::Sat(s) => Some(s),
        }
    }
}

/// Serialized clause: 1-based variables and, for flow clauses whose
/// submatrix is not the base one, the submatrix itself.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClauseRecord {
    pub variables: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub submatrix: Option<Vec<Vec<i64>>>,
}

/// Sidecar document.
///
/// `seed` is stored as a decimal string because TOML integers are signed
/// 64-bit. Flow clauses without an explicit `submatrix` carry the base
/// submatrix in the listed variable order; generated instances are always
/// written that way by reordering variables.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sidecar {
    pub format_version: u32,
    pub seed: String,
    pub n: usize,
    pub k: usize,
    pub m: usize,
    pub m1: usize,
    pub global_lower_bound: i64,
    #[serde(default)]
    pub a_clauses: Vec<ClauseRecord>,
    #[serde(default)]
    pub b_clauses: Vec<ClauseRecord>,
}

impl Sidecar {
    pub fn from_instance(qs: &QapSatInstance) -> Self {
        let base = conjugate_a3([0, 1, 2]);
        let a_clauses = qs.a_clauses().iter().map(|c| flow_clause_record(c, &base)).collect();
        let b_clauses = qs
            .b_clauses()
            .iter()
            .map(|c| ClauseRecord {
                variables: c.variables().iter().map(|v| v + 1).collect(),
                submatrix: None,
            })
            .collect();
        Self {
            format_version: SIDECAR_FORMAT_VERSION,
            seed: qs.seed().to_string(),
            n: qs.n(),
            k: qs.k(),
            m: qs.m(),
            m1: qs.m1(),
            global_lower_bound: qs.global_lower_bound(),
            a_clauses,
            b_clauses,
        }
    }

    /// Combines the sidecar with its matrices, re-checking every invariant.
    pub fn attach(&self, inst: QapInstance) -> std::result::Result<QapSatInstance, String> {
        if self.format_version != SIDECAR_FORMAT_VERSION {
            return Err(format!("unsupported format_version {}", self.format_version));
        }
        let seed: u64 = self
            .seed
            .parse()
            .map_err(|_| format!("seed {:?} is not an unsigned 64-bit integer", self.seed))?;
        if self.n != inst.n() {
            return Err(format!(
                "sidecar n = {} but matrices are {}x{}",
                self.n,
                inst.n(),
                inst.n()
            ));
        }
        if self.m != self.a_clauses.len() {
            return Err(format!(
                "m = {} but {} flow clauses listed",
                self.m,
                self.a_clauses.len()
            ));
        }
        if self.m1 != self.b_clauses.len() {
            return Err(format!(
                "m1 = {} but {} distance clauses listed",
                self.m1,
                self.b_clauses.len()
            ));
        }
        let to_zero_based = |rec: &ClauseRecord| -> std::result::Result<Vec<usize>, String> {
            if rec.variables.len() != self.k {
                return Err(format!(
                    "clause {:?} does not have k = {} variables",
                    rec.variables, self.k
                ));
            }
            rec.variables
                .iter()
                .map(|&v| {
                    if v == 0 || v > self.n {
                        Err(format!("variable {v} outside 1..={}", self.n))
                    } else {
                        Ok(v - 1)
                    }
                })
                .collect()
        };
        let mut a_clauses = Vec::with_capacity(self.a_clauses.len());
        for rec in &self.a_clauses {
            let vars = to_zero_based(rec)?;
            let sub = match &rec.submatrix {
                Some(rows) => SquareMatrix::from_rows(rows).map_err(|e| e.to_string())?,
                None if self.k == 3 => conjugate_a3([0, 1, 2]),
                None => return Err("flow clause without submatrix and k != 3".into()),
            };
            a_clauses.push(ClauseSpec::new(vars, sub).map_err(|e| e.to_string())?);
        }
        let mut b_clauses = Vec::with_capacity(self.b_clauses.len());
        for rec in &self.b_clauses {
            if rec.submatrix.is_some() {
                return Err("distance clauses carry no submatrix".into());
            }
            let vars = to_zero_based(rec)?;
            b_clauses.push(ClauseSpec::distance_clause(vars).map_err(|e| e.to_string())?);
        }
        QapSatInstance::new(inst, a_clauses, b_clauses, seed, self.global_lower_bound).map_err(|e| e.to_string())
    }
}

/// Writes a flow clause as base-submatrix variables when it is a reordering
/// of the base submatrix, otherwise with an explicit submatrix.
fn flow_clause_record(c: &ClauseSpec, base: &SquareMatrix) -> ClauseRecord {
    if c.k() == 3 {
        for order in PERMS3 {
            if conjugate_a3(order) == *c.submatrix() {
                // Entry (i, j) is A3[order[i]][order[j]], so variable
                // c.variables()[i] plays base role order[i].
                let mut vars = [0usize; 3];
                for (i, &role) in order.iter().enumerate() {
                    vars[role] = c.variables()[i] + 1;
                }
                debug_assert_eq!(*base, conjugate_a3([0, 1, 2]));
                return ClauseRecord {
                    variables: vars.to_vec(),
                    submatrix: None,
                };
            }
        }
    }
    ClauseRecord {
        variables: c.variables().iter().map(|v| v + 1).collect(),
        submatrix: Some(c.submatrix().rows().map(<[i64]>::to_vec).collect()),
    }
}

const PERMS3: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];

pub fn format_matrix_text(inst: &QapInstance) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{}", inst.n());
    for m in [inst.flow(), inst.distance()] {
        out.push('\n');
        for row in m.rows() {
            let line: Vec<String> = row.iter().map(i64::to_string).collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
    }
    out
}

/// Parses a matrix file; `origin` is only used in error messages.
pub fn parse_matrix_text(text: &str, origin: &Path) -> Result<QapInstance> {
    let parse_err = |line: usize, reason: String| Error::Parse {
        path: origin.to_path_buf(),
        line,
        reason,
    };
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    let (n_line, n_text) = lines
        .next()
        .ok_or_else(|| parse_err(1, "empty file: expected dimension".into()))?;
    let n: usize = n_text
        .parse()
        .map_err(|_| parse_err(n_line, format!("expected dimension, found {n_text:?}")))?;
    if n == 0 {
        return Err(parse_err(n_line, "dimension must be positive".into()));
    }
    // Keeps hostile headers from triggering huge allocations.
    if n.checked_mul(n).is_none_or(|sq| sq > text.len()) {
        return Err(parse_err(n_line, format!("dimension {n} exceeds file contents")));
    }

    let mut read_matrix = |name: &str| -> Result<SquareMatrix> {
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            let (line_no, row) = lines.next().ok_or_else(|| {
                parse_err(
                    text.lines().count().max(1),
                    format!("matrix {name}: missing row {} of {n}", i + 1),
                )
            })?;
            let mut count = 0;
            for (j, tok) in row.split_whitespace().enumerate() {
                let v: i64 = tok
                    .parse()
                    .map_err(|_| parse_err(line_no, format!("matrix {name}: bad integer {tok:?}")))?;
                if v < 0 {
                    return Err(parse_err(line_no, format!("matrix {name}: negative entry {v}")));
                }
                if j == i && v != 0 {
                    return Err(parse_err(
                        line_no,
                        format!("matrix {name}: non-zero diagonal entry {v}"),
                    ));
                }
                if j < n {
                    data.push(v);
                }
                count += 1;
            }
            if count != n {
                return Err(parse_err(
                    line_no,
                    format!("matrix {name}: row {} has {count} entries, expected {n}", i + 1),
                ));
            }
        }
        SquareMatrix::new(n, data)
    };
    let a = read_matrix("A")?;
    let b = read_matrix("B")?;
    if let Some((line_no, extra)) = lines.next() {
        return Err(parse_err(line_no, format!("unexpected trailing content {extra:?}")));
    }
    QapInstance::new(a, b).map_err(|e| parse_err(n_line, e.to_string()))
}

pub fn format_sidecar(qs: &QapSatInstance) -> String {
    toml::to_string(&Sidecar::from_instance(qs)).expect("sidecar serializes")
}

pub fn parse_sidecar(text: &str, origin: &Path) -> Result<Sidecar> {
    toml::from_str(text).map_err(|e| Error::Validation {
        path: origin.to_path_buf(),
        reason: e.to_string(),
    })
}

pub fn write_instance(qs: &QapSatInstance, pair: &InstanceFilePair) -> Result<()> {
    write_file(&pair.data_path, &format_matrix_text(qs.instance()))?;
    write_file(&pair.meta_path, &format_sidecar(qs))
}

/// Writes only the matrix file.
pub fn write_bare_instance(inst: &QapInstance, path: &Path) -> Result<()> {
    write_file(path, &format_matrix_text(inst))
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Loads the matrix file and, when present, validates and attaches the
/// sidecar.
pub fn read_instance(pair: &InstanceFilePair) -> Result<LoadedInstance> {
    let text = fs::read_to_string(&pair.data_path).map_err(|e| Error::io(&pair.data_path, e))?;
    let inst = parse_matrix_text(&text, &pair.data_path)?;
    match fs::read_to_string(&pair.meta_path) {
        Ok(meta) => {
            let sidecar = parse_sidecar(&meta, &pair.meta_path)?;
            sidecar
                .attach(inst)
                .map(LoadedInstance::Sat)
                .map_err(|reason| Error::Validation {
                    path: pair.meta_path.clone(),
                    reason,
                })
        }
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(LoadedInstance::Bare(inst)),
        Err(e) => Err(Error::io(&pair.meta_path, e)),
    }
}
