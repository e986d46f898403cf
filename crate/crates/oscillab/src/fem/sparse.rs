//! Compressed-row storage for the symmetric matrices produced by P1 assembly.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SparseError {
    #[error("dimension mismatch: matrix is {n}x{n}, vector has length {len}")]
    DimensionMismatch { n: usize, len: usize },
    #[error("triplet index ({row}, {col}) out of bounds for dimension {n}")]
    IndexOutOfBounds { row: usize, col: usize, n: usize },
}

/// Sparse symmetric matrix in CSR form. The full pattern is stored (both
/// triangles); assembly guarantees a structurally symmetric pattern and
/// exact zeros are dropped when the triplets are compressed.
#[derive(Debug, Clone)]
pub struct SparseSym {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseSym {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let lo = self.row_ptr[i];
        let hi = self.row_ptr[i + 1];
        (&self.col_idx[lo..hi], &self.values[lo..hi])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        match cols.binary_search(&j) {
            Ok(k) => vals[k],
            Err(_) => 0.0,
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n);
        let mut y = vec![0.0; self.n];
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            let mut acc = 0.0;
            for (&j, &v) in cols.iter().zip(vals) {
                acc += v * x[j];
            }
            y[i] = acc;
        }
        y
    }

    /// x^T A y, accumulated in fixed row order.
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        assert_eq!(x.len(), self.n);
        assert_eq!(y.len(), self.n);
        let mut acc = 0.0;
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            let mut row_acc = 0.0;
            for (&j, &v) in cols.iter().zip(vals) {
                row_acc += v * y[j];
            }
            acc += x[i] * row_acc;
        }
        acc
    }

    /// Largest relative symmetry defect max |a_ij - a_ji| / max|a|.
    pub fn symmetry_defect(&self) -> f64 {
        let mut scale: f64 = 0.0;
        for &v in &self.values {
            scale = scale.max(v.abs());
        }
        if scale == 0.0 {
            return 0.0;
        }
        let mut defect: f64 = 0.0;
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                defect = defect.max((v - self.get(j, i)).abs());
            }
        }
        defect / scale
    }

    /// A + c*B on the union pattern.
    pub fn add_scaled(&self, other: &SparseSym, c: f64) -> SparseSym {
        assert_eq!(self.n, other.n);
        let mut b = TripletBuilder::new(self.n);
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                b.push(i, j, v);
            }
            let (cols, vals) = other.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                b.push(i, j, c * v);
            }
        }
        b.build()
    }

    pub fn scale(&self, c: f64) -> SparseSym {
        let mut out = self.clone();
        for v in &mut out.values {
            *v *= c;
        }
        out
    }

    /// Matrix-market style text dump (1-based triplets) for debugging.
    pub fn dump_triplets(&self, name: &str) -> String {
        let mut s = String::new();
        s.push_str(&format!("%% {name} symmetric coordinate real\n"));
        s.push_str(&format!("{} {} {}\n", self.n, self.n, self.nnz()));
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                s.push_str(&format!("{} {} {:.16e}\n", i + 1, j + 1, v));
            }
        }
        s
    }
}

/// Accumulates (row, col, value) contributions and compresses them into CSR,
/// merging duplicates and dropping exact zeros.
pub struct TripletBuilder {
    n: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl TripletBuilder {
    pub fn new(n: usize) -> Self {
        TripletBuilder {
            n,
            entries: Vec::new(),
        }
    }

    pub fn push(&mut self, row: usize, col: usize, value: f64) {
        debug_assert!(row < self.n && col < self.n);
        self.entries.push((row, col, value));
    }

    /// Symmetric rank contribution a_ij = a_ji = value.
    pub fn push_sym(&mut self, i: usize, j: usize, value: f64) {
        self.push(i, j, value);
        if i != j {
            self.push(j, i, value);
        }
    }

    pub fn build(mut self) -> SparseSym {
        self.entries
            .sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut row_ptr = vec![0usize; self.n + 1];
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        let mut k = 0;
        while k < self.entries.len() {
            let (r, c, mut v) = self.entries[k];
            k += 1;
            while k < self.entries.len() && self.entries[k].0 == r && self.entries[k].1 == c {
                v += self.entries[k].2;
                k += 1;
            }
            if v != 0.0 {
                row_ptr[r + 1] += 1;
                col_idx.push(c);
                values.push(v);
            }
        }
        for i in 0..self.n {
            row_ptr[i + 1] += row_ptr[i];
        }
        SparseSym {
            n: self.n,
            row_ptr,
            col_idx,
            values,
        }
    }
}

pub fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

pub fn norm2(x: &[f64]) -> f64 {
    dot(x, x).sqrt()
}

pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}
