use std::fmt::Write as _;

use rayon::prelude::*;

use crate::error::{Error, Result};

/// Compressed sparse row matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Zero matrix with a prescribed pattern; each row of `rows` must be
    /// sorted and free of duplicates.
    pub fn from_pattern(nrows: usize, ncols: usize, rows: Vec<Vec<usize>>) -> Self {
        let mut indptr = Vec::with_capacity(nrows + 1);
        indptr.push(0);
        let nnz: usize = rows.iter().map(Vec::len).sum();
        let mut indices = Vec::with_capacity(nnz);
        for r in rows {
            indices.extend(r);
            indptr.push(indices.len());
        }
        CsrMatrix {
            nrows,
            ncols,
            indptr,
            indices,
            values: vec![0.0; nnz],
        }
    }

    /// Sums duplicate entries.
    pub fn from_triplets(nrows: usize, ncols: usize, mut triplets: Vec<(usize, usize, f64)>) -> Self {
        triplets.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut indptr = vec![0usize; nrows + 1];
        let mut indices = Vec::with_capacity(triplets.len());
        let mut values: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in triplets {
            assert!(i < nrows && j < ncols, "triplet ({i}, {j}) out of bounds");
            if last == Some((i, j)) {
                *values.last_mut().unwrap() += v;
            } else {
                indices.push(j);
                values.push(v);
                indptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..nrows {
            indptr[i + 1] += indptr[i];
        }
        CsrMatrix {
            nrows,
            ncols,
            indptr,
            indices,
            values,
        }
    }

    pub fn identity(n: usize) -> Self {
        CsrMatrix::from_triplets(n, n, (0..n).map(|i| (i, i, 1.0)).collect())
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.indptr[i]..self.indptr[i + 1];
        (&self.indices[r.clone()], &self.values[r])
    }

    pub(crate) fn row_mut(&mut self, i: usize) -> (&[usize], &mut [f64]) {
        let r = self.indptr[i]..self.indptr[i + 1];
        (&self.indices[r.clone()], &mut self.values[r])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        cols.binary_search(&j).map(|k| vals[k]).unwrap_or(0.0)
    }

    /// Adds to an entry that exists in the pattern.
    #[inline]
    pub fn add_to(&mut self, i: usize, j: usize, v: f64) {
        let (start, end) = (self.indptr[i], self.indptr[i + 1]);
        let k = self.indices[start..end]
            .binary_search(&j)
            .unwrap_or_else(|_| panic!("entry ({i}, {j}) not in sparsity pattern"));
        self.values[start + k] += v;
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.nrows).map(|i| self.get(i, i)).collect()
    }

    /// `y = A x`; rows are processed in parallel but each row sums in a fixed
    /// order, so the result does not depend on the thread count.
    pub fn mul_vec(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.ncols);
        assert_eq!(y.len(), self.nrows);
        y.par_iter_mut().with_min_len(1024).enumerate().for_each(|(i, yi)| {
            let (s, e) = (self.indptr[i], self.indptr[i + 1]);
            let mut acc = 0.0;
            for k in s..e {
                acc += self.values[k] * x[self.indices[k]];
            }
            *yi = acc;
        });
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.nrows];
        self.mul_vec(x, &mut y);
        y
    }

    pub fn transpose(&self) -> CsrMatrix {
        let mut t = Vec::with_capacity(self.nnz());
        for i in 0..self.nrows {
            let (c, v) = self.row(i);
            for (&j, &x) in c.iter().zip(v) {
                t.push((j, i, x));
            }
        }
        CsrMatrix::from_triplets(self.ncols, self.nrows, t)
    }

    /// Largest `|A_ij - A_ji|` relative to the largest `|A_ij|`.
    pub fn symmetry_defect(&self) -> f64 {
        if self.nrows != self.ncols {
            return f64::INFINITY;
        }
        let mut max_entry = 0.0f64;
        let mut max_diff = 0.0f64;
        for i in 0..self.nrows {
            let (c, v) = self.row(i);
            for (&j, &x) in c.iter().zip(v) {
                max_entry = max_entry.max(x.abs());
                max_diff = max_diff.max((x - self.get(j, i)).abs());
            }
        }
        if max_entry == 0.0 {
            0.0
        } else {
            max_diff / max_entry
        }
    }

    /// Assembles a matrix from a grid of optional blocks.
    pub fn from_blocks(blocks: &[Vec<Option<&CsrMatrix>>]) -> Result<CsrMatrix> {
        let nbr = blocks.len();
        let nbc = blocks.first().map_or(0, Vec::len);
        let mut row_sizes = vec![None; nbr];
        let mut col_sizes = vec![None; nbc];
        for (bi, row) in blocks.iter().enumerate() {
            if row.len() != nbc {
                return Err(Error::invalid("ragged block layout"));
            }
            for (bj, b) in row.iter().enumerate() {
                if let Some(m) = b {
                    for (slot, n) in [(&mut row_sizes[bi], m.nrows), (&mut col_sizes[bj], m.ncols)] {
                        match slot {
                            Some(s) if *s != n => return Err(Error::invalid("inconsistent block sizes")),
                            _ => *slot = Some(n),
                        }
                    }
                }
            }
        }
        let rs: Vec<usize> = row_sizes
            .iter()
            .map(|s| s.ok_or_else(|| Error::invalid("empty block row")))
            .collect::<Result<_>>()?;
        let cs: Vec<usize> = col_sizes
            .iter()
            .map(|s| s.ok_or_else(|| Error::invalid("empty block column")))
            .collect::<Result<_>>()?;
        let roff: Vec<usize> = rs.iter().scan(0, |a, &n| { let o = *a; *a += n; Some(o) }).collect();
        let coff: Vec<usize> = cs.iter().scan(0, |a, &n| { let o = *a; *a += n; Some(o) }).collect();
        let mut trip = Vec::new();
        for (bi, row) in blocks.iter().enumerate() {
            for (bj, b) in row.iter().enumerate() {
                if let Some(m) = b {
                    for i in 0..m.nrows {
                        let (c, v) = m.row(i);
                        for (&j, &x) in c.iter().zip(v) {
                            trip.push((roff[bi] + i, coff[bj] + j, x));
                        }
                    }
                }
            }
        }
        Ok(CsrMatrix::from_triplets(rs.iter().sum(), cs.iter().sum(), trip))
    }

    /// Matrix Market coordinate text.
    pub fn to_matrix_market(&self) -> String {
        let mut s = String::with_capacity(32 * self.nnz() + 64);
        s.push_str("%%MatrixMarket matrix coordinate real general\n");
        let _ = writeln!(s, "{} {} {}", self.nrows, self.ncols, self.nnz());
        for i in 0..self.nrows {
            let (c, v) = self.row(i);
            for (&j, &x) in c.iter().zip(v) {
                let _ = writeln!(s, "{} {} {:e}", i + 1, j + 1, x);
            }
        }
        s
    }

    pub fn from_matrix_market(text: &str) -> Result<CsrMatrix> {
        let perr = |m: &str| Error::Parse {
            context: "matrix market".into(),
            message: m.into(),
        };
        let mut lines = text.lines().filter(|l| !l.starts_with('%') && !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| perr("missing size line"))?;
        let dims: Vec<usize> = header
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| perr("bad size line")))
            .collect::<Result<_>>()?;
        if dims.len() != 3 {
            return Err(perr("size line needs three integers"));
        }
        let mut trip = Vec::with_capacity(dims[2]);
        for l in lines {
            let tok: Vec<&str> = l.split_whitespace().collect();
            if tok.len() != 3 {
                return Err(perr("entry line needs three fields"));
            }
            let i: usize = tok[0].parse().map_err(|_| perr("bad row index"))?;
            let j: usize = tok[1].parse().map_err(|_| perr("bad column index"))?;
            let v: f64 = tok[2].parse().map_err(|_| perr("bad value"))?;
            if i == 0 || j == 0 || i > dims[0] || j > dims[1] {
                return Err(perr("index out of range"));
            }
            trip.push((i - 1, j - 1, v));
        }
        Ok(CsrMatrix::from_triplets(dims[0], dims[1], trip))
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let mut m = nalgebra::DMatrix::zeros(self.nrows, self.ncols);
        for i in 0..self.nrows {
            let (c, v) = self.row(i);
            for (&j, &x) in c.iter().zip(v) {
                m[(i, j)] += x;
            }
        }
        m
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Symmetry {
    Spd,
    SymmetricIndefinite,
    General,
}

/// A square linear system together with its declared structure.
#[derive(Debug, Clone)]
pub struct SparseSystem {
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
    pub symmetry: Symmetry,
}

impl SparseSystem {
    /// Builds a system, verifying the declared symmetry to `1e-10`.
    pub fn new(matrix: CsrMatrix, rhs: Vec<f64>, symmetry: Symmetry) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() || matrix.nrows() != rhs.len() {
            return Err(Error::invalid(format!(
                "system shape mismatch: {}x{} matrix, rhs of length {}",
                matrix.nrows(),
                matrix.ncols(),
                rhs.len()
            )));
        }
        if symmetry != Symmetry::General {
            let defect = matrix.symmetry_defect();
            if defect > 1e-10 {
                return Err(Error::invalid(format!(
                    "matrix declared symmetric but relative asymmetry is {defect:.3e}"
                )));
            }
        }
        Ok(SparseSystem { matrix, rhs, symmetry })
    }

    pub fn len(&self) -> usize {
        self.rhs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rhs.is_empty()
    }

    pub fn residual_norm(&self, x: &[f64]) -> f64 {
        let ax = self.matrix.apply(x);
        ax.iter().zip(&self.rhs).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triplets_sum_duplicates() {
        let m = CsrMatrix::from_triplets(2, 2, vec![(0, 1, 1.0), (0, 1, 2.0), (1, 0, 4.0)]);
        assert_eq!(m.get(0, 1), 3.0);
        assert_eq!(m.nnz(), 2);
        assert_eq!(m.apply(&[1.0, 1.0]), vec![3.0, 4.0]);
    }

    #[test]
    fn matrix_market_round_trip() {
        let m = CsrMatrix::from_triplets(3, 2, vec![(0, 0, 1.5), (2, 1, -2.25e-7)]);
        let back = CsrMatrix::from_matrix_market(&m.to_matrix_market()).unwrap();
        assert_eq!(m, back);
    }

    #[test]
    fn asymmetric_matrix_cannot_be_declared_spd() {
        let m = CsrMatrix::from_triplets(2, 2, vec![(0, 0, 1.0), (0, 1, 1.0), (1, 1, 1.0)]);
        assert!(SparseSystem::new(m, vec![0.0; 2], Symmetry::Spd).is_err());
    }

    #[test]
    fn blocks_are_placed_at_offsets() {
        let a = CsrMatrix::identity(2);
        let b = CsrMatrix::from_triplets(2, 1, vec![(1, 0, 5.0)]);
        let bt = b.transpose();
        let m = CsrMatrix::from_blocks(&[vec![Some(&a), Some(&b)], vec![Some(&bt), None]]).unwrap();
        assert_eq!(m.nrows(), 3);
        assert_eq!(m.get(1, 2), 5.0);
        assert_eq!(m.get(2, 1), 5.0);
        assert_eq!(m.symmetry_defect(), 0.0);
    }
}
