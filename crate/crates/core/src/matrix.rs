//! Dense matrices over GF(2^m) with exact Gaussian elimination.
//!
//! Elimination always pivots on the first nonzero entry in column order so
//! every routine is deterministic: the same inputs give the same bases,
//! inverses and solutions on every run.

use std::fmt;

use crate::error::{Error, Result};
use crate::gf::{Field, Gf};

#[derive(Clone, PartialEq, Eq)]
pub struct FieldMatrix {
    field: Field,
    rows: usize,
    cols: usize,
    data: Vec<Gf>,
}

impl fmt::Debug for FieldMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "FieldMatrix {}x{} over {:?}",
            self.rows, self.cols, self.field
        )?;
        for r in 0..self.rows {
            let row: Vec<String> = self.row(r).iter().map(|x| format!("{:x}", x.0)).collect();
            writeln!(f, "  [{}]", row.join(" "))?;
        }
        Ok(())
    }
}

impl FieldMatrix {
    pub fn zeros(field: &Field, rows: usize, cols: usize) -> FieldMatrix {
        FieldMatrix {
            field: field.clone(),
            rows,
            cols,
            data: vec![Gf::ZERO; rows * cols],
        }
    }

    pub fn identity(field: &Field, n: usize) -> FieldMatrix {
        let mut m = FieldMatrix::zeros(field, n, n);
        for i in 0..n {
            m.set(i, i, Gf::ONE);
        }
        m
    }

    pub fn from_rows(field: &Field, rows: &[Vec<Gf>]) -> Result<FieldMatrix> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::Dimension("ragged rows".into()));
        }
        let data: Vec<Gf> = rows.iter().flatten().copied().collect();
        FieldMatrix::from_vec(field, rows.len(), cols, data)
    }

    pub fn from_vec(field: &Field, rows: usize, cols: usize, data: Vec<Gf>) -> Result<FieldMatrix> {
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if let Some(bad) = data.iter().find(|x| !field.contains(**x)) {
            return Err(Error::Dimension(format!("entry {bad} outside {field:?}")));
        }
        Ok(FieldMatrix {
            field: field.clone(),
            rows,
            cols,
            data,
        })
    }

    /// Convenience constructor from raw integers.
    pub fn from_u16(field: &Field, rows: usize, cols: usize, data: &[u16]) -> Result<FieldMatrix> {
        FieldMatrix::from_vec(field, rows, cols, data.iter().map(|&x| Gf(x)).collect())
    }

    pub fn column(field: &Field, data: Vec<Gf>) -> FieldMatrix {
        let n = data.len();
        FieldMatrix {
            field: field.clone(),
            rows: n,
            cols: 1,
            data,
        }
    }

    pub fn field(&self) -> &Field {
        &self.field
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> Gf {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: Gf) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[Gf] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [Gf] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn col_vec(&self, c: usize) -> Vec<Gf> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    pub fn data(&self) -> &[Gf] {
        &self.data
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|x| x.is_zero())
    }

    /// Rows picked by index, in the given order.
    pub fn select_rows(&self, idx: &[usize]) -> FieldMatrix {
        let mut out = FieldMatrix::zeros(&self.field, idx.len(), self.cols);
        for (i, &r) in idx.iter().enumerate() {
            out.row_mut(i).copy_from_slice(self.row(r));
        }
        out
    }

    pub fn transpose(&self) -> FieldMatrix {
        let mut out = FieldMatrix::zeros(&self.field, self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.set(c, r, self.get(r, c));
            }
        }
        out
    }

    pub fn mul(&self, rhs: &FieldMatrix) -> Result<FieldMatrix> {
        if self.cols != rhs.rows {
            return Err(Error::Dimension(format!(
                "{}x{} times {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let mut out = FieldMatrix::zeros(&self.field, self.rows, rhs.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(r, k);
                if a.is_zero() {
                    continue;
                }
                let (f, rr) = (&self.field, rhs.row(k));
                f.mul_add_slice(&mut out.data[r * rhs.cols..(r + 1) * rhs.cols], rr, a);
            }
        }
        Ok(out)
    }

    /// Dot product of row `r` with a column vector given as a slice.
    pub fn row_dot(&self, r: usize, v: &[Gf]) -> Gf {
        let f = &self.field;
        self.row(r)
            .iter()
            .zip(v)
            .fold(Gf::ZERO, |acc, (&a, &b)| acc + f.mul(a, b))
    }

    /// Reduced row echelon form in place; returns pivot columns.
    fn rref(&mut self) -> Vec<usize> {
        let f = self.field.clone();
        let mut pivots = Vec::new();
        let mut prow = 0;
        for c in 0..self.cols {
            if prow == self.rows {
                break;
            }
            let Some(p) = (prow..self.rows).find(|&r| !self.get(r, c).is_zero()) else {
                continue;
            };
            self.swap_rows(p, prow);
            let inv = f.inv(self.get(prow, c)).expect("pivot is nonzero");
            f.scale_slice(self.row_mut(prow), inv);
            let pivot_row: Vec<Gf> = self.row(prow).to_vec();
            for r in 0..self.rows {
                if r == prow {
                    continue;
                }
                let factor = self.get(r, c);
                if !factor.is_zero() {
                    f.mul_add_slice(self.row_mut(r), &pivot_row, factor);
                }
            }
            pivots.push(c);
            prow += 1;
        }
        pivots
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for c in 0..self.cols {
            self.data.swap(a * self.cols + c, b * self.cols + c);
        }
    }

    pub fn rank(&self) -> usize {
        self.clone().rref().len()
    }

    /// Basis of the right kernel as the columns of a `cols x k` matrix.
    pub fn null_space(&self) -> FieldMatrix {
        let mut work = self.clone();
        let pivots = work.rref();
        let free: Vec<usize> = (0..self.cols).filter(|c| !pivots.contains(c)).collect();
        let mut basis = FieldMatrix::zeros(&self.field, self.cols, free.len());
        for (j, &fc) in free.iter().enumerate() {
            basis.set(fc, j, Gf::ONE);
            // characteristic 2: -x = x
            for (i, &pc) in pivots.iter().enumerate() {
                basis.set(pc, j, work.get(i, fc));
            }
        }
        basis
    }

    /// Solves `A X = B` for square `A`; `B` may have any number of columns.
    pub fn solve(&self, b: &FieldMatrix) -> Result<FieldMatrix> {
        if self.rows != self.cols {
            return Err(Error::Dimension(format!(
                "{}x{} is not square",
                self.rows, self.cols
            )));
        }
        if b.rows != self.rows {
            return Err(Error::Dimension(format!(
                "right-hand side has {} rows, expected {}",
                b.rows, self.rows
            )));
        }
        let n = self.rows;
        let f = self.field.clone();
        let mut a = self.clone();
        let mut x = b.clone();
        for c in 0..n {
            let p = (c..n)
                .find(|&r| !a.get(r, c).is_zero())
                .ok_or(Error::Singular)?;
            a.swap_rows(p, c);
            x.swap_rows(p, c);
            let inv = f.inv(a.get(c, c))?;
            f.scale_slice(a.row_mut(c), inv);
            f.scale_slice(x.row_mut(c), inv);
            let arow = a.row(c).to_vec();
            let xrow = x.row(c).to_vec();
            for r in 0..n {
                if r == c {
                    continue;
                }
                let factor = a.get(r, c);
                if !factor.is_zero() {
                    f.mul_add_slice(a.row_mut(r), &arow, factor);
                    f.mul_add_slice(x.row_mut(r), &xrow, factor);
                }
            }
        }
        Ok(x)
    }

    /// Solves a consistent `A X = B` where `A` is tall with full column rank.
    pub fn solve_full_column_rank(&self, b: &FieldMatrix) -> Result<FieldMatrix> {
        if b.rows != self.rows {
            return Err(Error::Dimension(format!(
                "right-hand side has {} rows, expected {}",
                b.rows, self.rows
            )));
        }
        let n = self.cols;
        let mut aug = FieldMatrix::zeros(&self.field, self.rows, n + b.cols);
        for r in 0..self.rows {
            aug.row_mut(r)[..n].copy_from_slice(self.row(r));
            aug.row_mut(r)[n..].copy_from_slice(b.row(r));
        }
        let pivots = aug.rref();
        // a pivot past column n means the equations contradict each other
        if pivots.len() != n || pivots.last().is_some_and(|&c| c >= n) {
            return Err(Error::Singular);
        }
        let mut x = FieldMatrix::zeros(&self.field, n, b.cols);
        for r in 0..n {
            x.row_mut(r).copy_from_slice(&aug.row(r)[n..]);
        }
        Ok(x)
    }

    pub fn inverse(&self) -> Result<FieldMatrix> {
        self.solve(&FieldMatrix::identity(&self.field, self.rows))
    }
}
