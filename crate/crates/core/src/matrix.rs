//! Dense matrices over GF(256): rank, Gauss-Jordan elimination, inversion
//! and solving against payload right-hand sides.
//!
//! Pivots are chosen as the first nonzero entry at or below the current
//! pivot row, scanning columns left to right. Inputs are never mutated;
//! elimination runs on a private copy.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::field::{self, Gf256};

/// A row-major `rows x cols` matrix.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct FieldMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<Gf256>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("dimension mismatch: {0}")]
pub struct DimensionError(pub String);

/// Outcome of an elimination that did not reach full rank.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SingularReport {
    pub rank: usize,
    pub pivot_columns: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SolveError {
    #[error("singular system: achieved rank {}", .0.rank)]
    Singular(SingularReport),
    #[error(transparent)]
    Dimension(#[from] DimensionError),
}

impl FieldMatrix {
    pub fn new(rows: usize, cols: usize, entries: Vec<Gf256>) -> Result<Self, DimensionError> {
        if entries.len() != rows * cols {
            return Err(DimensionError(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                entries.len()
            )));
        }
        Ok(FieldMatrix { rows, cols, entries })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        FieldMatrix {
            rows,
            cols,
            entries: vec![Gf256::ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Gf256::ONE;
        }
        m
    }

    pub fn diagonal(diag: &[Gf256]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    /// Builds a matrix from equal-length rows. An empty slice gives a 0x0 matrix.
    pub fn from_rows<R: AsRef<[Gf256]>>(rows: &[R]) -> Result<Self, DimensionError> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut entries = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(DimensionError(format!(
                    "row {i} has length {}, expected {cols}",
                    r.len()
                )));
            }
            entries.extend_from_slice(r);
        }
        Ok(FieldMatrix {
            rows: rows.len(),
            cols,
            entries,
        })
    }

    pub fn from_bytes(rows: usize, cols: usize, bytes: &[u8]) -> Result<Self, DimensionError> {
        Self::new(rows, cols, bytes.iter().copied().map(Gf256).collect())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn entries(&self) -> &[Gf256] {
        &self.entries
    }

    pub fn row(&self, i: usize) -> &[Gf256] {
        &self.entries[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [Gf256] {
        &mut self.entries[i * self.cols..(i + 1) * self.cols]
    }

    pub fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        let (lo, hi) = (a.min(b), a.max(b));
        let (head, tail) = self.entries.split_at_mut(hi * self.cols);
        head[lo * self.cols..(lo + 1) * self.cols].swap_with_slice(&mut tail[..self.cols]);
    }

    pub fn scale_row(&mut self, i: usize, c: Gf256) {
        field::scale(self.row_mut(i), c);
    }

    /// Matrix product `self * rhs`.
    pub fn mul(&self, rhs: &FieldMatrix) -> Result<FieldMatrix, DimensionError> {
        if self.cols != rhs.rows {
            return Err(DimensionError(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let mut out = FieldMatrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                let cols = rhs.cols;
                field::axpy(
                    &mut out.entries[i * cols..(i + 1) * cols],
                    a,
                    rhs.row(k),
                );
            }
        }
        Ok(out)
    }

    /// `self * x` where `x` holds one symbol vector per column of `self`.
    pub fn apply(&self, x: &[Vec<Gf256>]) -> Result<Vec<Vec<Gf256>>, DimensionError> {
        if x.len() != self.cols {
            return Err(DimensionError(format!(
                "matrix has {} columns but {} symbol vectors were supplied",
                self.cols,
                x.len()
            )));
        }
        let width = check_uniform_width(x)?;
        let mut out = vec![vec![Gf256::ZERO; width]; self.rows];
        for (i, out_row) in out.iter_mut().enumerate() {
            for (j, xj) in x.iter().enumerate() {
                field::axpy(out_row, self[(i, j)], xj);
            }
        }
        Ok(out)
    }

    pub fn rank(&self) -> usize {
        let mut work = self.clone();
        eliminate(&mut work, None).pivot_columns.len()
    }

    /// Solves `self * x = rhs` for square `self`.
    pub fn solve(&self, rhs: &[Vec<Gf256>]) -> Result<Vec<Vec<Gf256>>, SolveError> {
        if !self.is_square() {
            return Err(DimensionError(format!(
                "solve needs a square matrix, got {}x{}",
                self.rows, self.cols
            ))
            .into());
        }
        if rhs.len() != self.rows {
            return Err(DimensionError(format!(
                "{} right-hand sides for {} equations",
                rhs.len(),
                self.rows
            ))
            .into());
        }
        check_uniform_width(rhs)?;
        solve_full_column_rank(self, rhs)
    }

    pub fn invert(&self) -> Result<FieldMatrix, SolveError> {
        if !self.is_square() {
            return Err(DimensionError(format!(
                "invert needs a square matrix, got {}x{}",
                self.rows, self.cols
            ))
            .into());
        }
        let n = self.rows;
        let unit: Vec<Vec<Gf256>> = (0..n).map(|i| FieldMatrix::identity(n).row(i).to_vec()).collect();
        let cols = solve_full_column_rank(self, &unit)?;
        let flat = cols.into_iter().flatten().collect();
        Ok(FieldMatrix::new(n, n, flat).expect("inverse has n*n entries"))
    }
}

impl std::ops::Index<(usize, usize)> for FieldMatrix {
    type Output = Gf256;
    fn index(&self, (r, c): (usize, usize)) -> &Gf256 {
        &self.entries[r * self.cols + c]
    }
}

impl std::ops::IndexMut<(usize, usize)> for FieldMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut Gf256 {
        &mut self.entries[r * self.cols + c]
    }
}

fn check_uniform_width(x: &[Vec<Gf256>]) -> Result<usize, DimensionError> {
    let width = x.first().map_or(0, Vec::len);
    if let Some((i, v)) = x.iter().enumerate().find(|(_, v)| v.len() != width) {
        return Err(DimensionError(format!(
            "symbol vector {i} has length {}, expected {width}",
            v.len()
        )));
    }
    Ok(width)
}

/// Result of reducing a matrix to reduced row echelon form.
#[derive(Debug, Clone)]
pub struct Reduction {
    pub pivot_columns: Vec<usize>,
}

/// In-place Gauss-Jordan elimination of `m`, applying the same row
/// operations to `rhs` when given. After return, row `i` of `m` has its
/// leading one in `pivot_columns[i]`.
pub fn eliminate(m: &mut FieldMatrix, mut rhs: Option<&mut [Vec<Gf256>]>) -> Reduction {
    let (rows, cols) = (m.rows, m.cols);
    let mut pivot_columns = Vec::new();
    let mut pivot_row = 0;
    for col in 0..cols {
        if pivot_row == rows {
            break;
        }
        let Some(found) = (pivot_row..rows).find(|&r| !m[(r, col)].is_zero()) else {
            continue;
        };
        m.swap_rows(pivot_row, found);
        if let Some(rhs) = rhs.as_deref_mut() {
            rhs.swap(pivot_row, found);
        }
        let inv = m[(pivot_row, col)].inv().expect("pivot is nonzero");
        m.scale_row(pivot_row, inv);
        if let Some(rhs) = rhs.as_deref_mut() {
            field::scale(&mut rhs[pivot_row], inv);
        }
        let pivot: Vec<Gf256> = m.row(pivot_row)[col..].to_vec();
        let pivot_rhs = rhs.as_deref().map(|r| r[pivot_row].clone());
        for r in 0..rows {
            if r == pivot_row {
                continue;
            }
            let factor = m[(r, col)];
            if factor.is_zero() {
                continue;
            }
            field::axpy(&mut m.row_mut(r)[col..], factor, &pivot);
            if let (Some(rhs), Some(p)) = (rhs.as_deref_mut(), pivot_rhs.as_ref()) {
                field::axpy(&mut rhs[r], factor, p);
            }
        }
        pivot_columns.push(col);
        pivot_row += 1;
    }
    Reduction { pivot_columns }
}

/// Solves a (possibly overdetermined) system whose coefficient matrix must
/// have full column rank. Rows beyond the rank are ignored.
pub fn solve_full_column_rank(
    m: &FieldMatrix,
    rhs: &[Vec<Gf256>],
) -> Result<Vec<Vec<Gf256>>, SolveError> {
    if rhs.len() != m.rows {
        return Err(DimensionError(format!(
            "{} right-hand sides for {} equations",
            rhs.len(),
            m.rows
        ))
        .into());
    }
    check_uniform_width(rhs)?;
    let mut work = m.clone();
    let mut values = rhs.to_vec();
    let red = eliminate(&mut work, Some(&mut values));
    if red.pivot_columns.len() < m.cols {
        return Err(SolveError::Singular(SingularReport {
            rank: red.pivot_columns.len(),
            pivot_columns: red.pivot_columns,
        }));
    }
    values.truncate(m.cols);
    Ok(values)
}
