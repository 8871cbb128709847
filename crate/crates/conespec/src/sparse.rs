//! Sparse symmetric matrices in compressed-row layout.
//!
//! Symmetry is structural: triplets are folded onto the upper triangle and
//! mirrored on access, so an asymmetric matrix cannot be represented. A full
//! CSR copy is kept alongside for row-parallel matvecs.

use std::io::Write;

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct SparseSymmetricMatrix {
    dim: usize,
    // upper triangle (i <= j), row-major
    upper_rows: Vec<usize>,
    upper_cols: Vec<usize>,
    upper_vals: Vec<f64>,
    // full pattern for matvec
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseSymmetricMatrix {
    /// Builds from (i, j, v) triplets. Entries are folded onto the upper
    /// triangle, duplicates are summed, and magnitudes at or below 1e-15 are
    /// dropped as explicit zeros.
    pub fn from_triplets(
        dim: usize,
        triplets: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Self {
        let mut map: std::collections::BTreeMap<(usize, usize), f64> =
            std::collections::BTreeMap::new();
        for (i, j, v) in triplets {
            assert!(i < dim && j < dim, "triplet index out of range");
            let key = if i <= j { (i, j) } else { (j, i) };
            *map.entry(key).or_insert(0.0) += v;
        }
        map.retain(|_, v| v.abs() > 1e-15);

        let mut upper_rows = Vec::with_capacity(map.len());
        let mut upper_cols = Vec::with_capacity(map.len());
        let mut upper_vals = Vec::with_capacity(map.len());
        for (&(i, j), &v) in &map {
            upper_rows.push(i);
            upper_cols.push(j);
            upper_vals.push(v);
        }

        // full CSR
        let mut counts = vec![0usize; dim + 1];
        for &(i, j) in map.keys() {
            counts[i + 1] += 1;
            if i != j {
                counts[j + 1] += 1;
            }
        }
        for r in 0..dim {
            counts[r + 1] += counts[r];
        }
        let nnz = counts[dim];
        let mut col_idx = vec![0usize; nnz];
        let mut values = vec![0.0; nnz];
        let mut cursor = counts.clone();
        for (&(i, j), &v) in &map {
            col_idx[cursor[i]] = j;
            values[cursor[i]] = v;
            cursor[i] += 1;
            if i != j {
                col_idx[cursor[j]] = i;
                values[cursor[j]] = v;
                cursor[j] += 1;
            }
        }

        SparseSymmetricMatrix {
            dim,
            upper_rows,
            upper_cols,
            upper_vals,
            row_ptr: counts,
            col_idx,
            values,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of stored (upper triangle) entries.
    pub fn stored_entries(&self) -> usize {
        self.upper_vals.len()
    }

    pub fn upper_triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.upper_rows
            .iter()
            .zip(&self.upper_cols)
            .zip(&self.upper_vals)
            .map(|((&i, &j), &v)| (i, j, v))
    }

    pub fn diagonal(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.dim];
        for ((&i, &j), &v) in self
            .upper_rows
            .iter()
            .zip(&self.upper_cols)
            .zip(&self.upper_vals)
        {
            if i == j {
                d[i] = v;
            }
        }
        d
    }

    pub fn row_entries(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let lo = self.row_ptr[i];
        let hi = self.row_ptr[i + 1];
        self.col_idx[lo..hi]
            .iter()
            .zip(&self.values[lo..hi])
            .map(|(&j, &v)| (j, v))
    }

    /// y = A x. Row-parallel when the matrix is large; each output entry is
    /// accumulated in a fixed order, so results are reproducible.
    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.dim);
        assert_eq!(y.len(), self.dim);
        let row = |i: usize| -> f64 {
            let lo = self.row_ptr[i];
            let hi = self.row_ptr[i + 1];
            let mut acc = 0.0;
            for k in lo..hi {
                acc += self.values[k] * x[self.col_idx[k]];
            }
            acc
        };
        if self.dim >= 20_000 {
            use rayon::prelude::*;
            y.par_iter_mut()
                .enumerate()
                .for_each(|(i, yi)| *yi = row(i));
        } else {
            for (i, yi) in y.iter_mut().enumerate() {
                *yi = row(i);
            }
        }
    }

    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        let mut y = vec![0.0; self.dim];
        self.matvec(x, &mut y);
        x.iter().zip(&y).map(|(a, b)| a * b).sum()
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let mut m = nalgebra::DMatrix::zeros(self.dim, self.dim);
        for (i, j, v) in self.upper_triplets() {
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
        m
    }

    /// Matrix Market coordinate format (symmetric, 1-based).
    pub fn write_matrix_market<W: Write>(&self, mut w: W) -> Result<()> {
        let emit = |w: &mut W| -> std::io::Result<()> {
            writeln!(w, "%%MatrixMarket matrix coordinate real symmetric")?;
            writeln!(w, "{} {} {}", self.dim, self.dim, self.upper_vals.len())?;
            // lower triangle convention: emit (j+1, i+1) with j >= i
            for (i, j, v) in self.upper_triplets() {
                writeln!(w, "{} {} {:.17e}", j + 1, i + 1, v)?;
            }
            Ok(())
        };
        emit(&mut w).map_err(|e| Error::io("<matrix market stream>", e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicate_triplets_are_summed_and_mirrored() {
        let m =
            SparseSymmetricMatrix::from_triplets(3, vec![(0, 1, 1.0), (1, 0, 2.0), (2, 2, 5.0)]);
        assert_eq!(m.stored_entries(), 2);
        let mut y = vec![0.0; 3];
        m.matvec(&[1.0, 1.0, 1.0], &mut y);
        assert_eq!(y, vec![3.0, 3.0, 5.0]);
    }

    #[test]
    fn explicit_zeros_are_dropped() {
        let m = SparseSymmetricMatrix::from_triplets(2, vec![(0, 1, 1e-16), (0, 0, 1.0)]);
        assert_eq!(m.stored_entries(), 1);
    }

    #[test]
    fn matrix_market_roundtrip_shape() {
        let m = SparseSymmetricMatrix::from_triplets(3, vec![(0, 0, 2.0), (0, 2, -1.0)]);
        let mut buf = Vec::new();
        m.write_matrix_market(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("%%MatrixMarket matrix coordinate real symmetric"));
        assert!(text.contains("3 3 2"));
    }
}
