//! Sparse symmetric solvers: incomplete-Cholesky preconditioned conjugate
//! gradients for SPD systems, and a profile (skyline) LDL^T factorization
//! after reverse Cuthill-McKee reordering for direct solves and for the
//! shifted, possibly indefinite matrices of the eigensolver.

use super::sparse::{axpy, dot, norm2, SparseSym};
use thiserror::Error;

/// Direct factorization is only attempted below this size.
pub const DIRECT_FALLBACK_LIMIT: usize = 50_000;

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("conjugate gradients stalled after {iters} iterations, residual {residual:.3e}")]
    CgNonConvergence {
        iters: usize,
        residual: f64,
        history: Vec<f64>,
    },
    #[error("factorization failed: pivot {pivot:.3e} at row {row}")]
    FactorizationFailure { row: usize, pivot: f64 },
    #[error("matrix dimension {n} exceeds direct-solver limit {limit}")]
    TooLargeForDirect { n: usize, limit: usize },
}

/// Solve an SPD system to relative residual 1e-10. Preconditioned CG is the
/// primary path; on CG stagnation or IC(0) breakdown the system is handed to
/// the direct profile factorization (below `DIRECT_FALLBACK_LIMIT` unknowns).
pub fn solve_spd(a: &SparseSym, b: &[f64]) -> Result<Vec<f64>, SolveError> {
    solve_spd_tol(a, b, 1e-10)
}

pub fn solve_spd_tol(a: &SparseSym, b: &[f64], tol: f64) -> Result<Vec<f64>, SolveError> {
    let pcg_result = match IncompleteCholesky::new(a) {
        Ok(ic) => pcg(a, b, &ic, tol, 10 * a.dim().max(100)),
        Err(e) => Err(e),
    };
    match pcg_result {
        Ok(x) => Ok(x),
        Err(err) => {
            if a.dim() < DIRECT_FALLBACK_LIMIT {
                let f = SkylineLdl::factor(a)?;
                Ok(f.solve(b))
            } else {
                Err(err)
            }
        }
    }
}

/// Preconditioned conjugate gradients with a relative-residual stop.
pub fn pcg(
    a: &SparseSym,
    b: &[f64],
    prec: &IncompleteCholesky,
    tol: f64,
    max_iter: usize,
) -> Result<Vec<f64>, SolveError> {
    let n = a.dim();
    let norm_b = norm2(b);
    if norm_b == 0.0 {
        return Ok(vec![0.0; n]);
    }
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut z = prec.apply(&r);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut history = Vec::new();
    for iter in 0..max_iter {
        let ap = a.matvec(&p);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            return Err(SolveError::CgNonConvergence {
                iters: iter,
                residual: norm2(&r) / norm_b,
                history,
            });
        }
        let alpha = rz / pap;
        axpy(alpha, &p, &mut x);
        axpy(-alpha, &ap, &mut r);
        let res = norm2(&r) / norm_b;
        history.push(res);
        if res <= tol {
            return Ok(x);
        }
        z = prec.apply(&r);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(SolveError::CgNonConvergence {
        iters: max_iter,
        residual: *history.last().unwrap_or(&f64::INFINITY),
        history,
    })
}

/// Zero-fill incomplete Cholesky preconditioner on the lower triangle.
pub struct IncompleteCholesky {
    n: usize,
    // lower triangle in CSR, diagonal last in each row
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl IncompleteCholesky {
    pub fn new(a: &SparseSym) -> Result<Self, SolveError> {
        let n = a.dim();
        let mut row_ptr = vec![0usize; n + 1];
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        for i in 0..n {
            let (cols, vals) = a.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                if j <= i {
                    col_idx.push(j);
                    values.push(v);
                }
            }
            row_ptr[i + 1] = col_idx.len();
        }
        // in-place IC(0): L L^T restricted to the pattern
        for i in 0..n {
            let (lo, hi) = (row_ptr[i], row_ptr[i + 1]);
            debug_assert_eq!(col_idx[hi - 1], i);
            for kk in lo..hi {
                let k = col_idx[kk];
                // subtract sum over common columns < k of L[i,:]*L[k,:]
                let mut sum = values[kk];
                let (klo, khi) = (row_ptr[k], row_ptr[k + 1]);
                let mut pi = lo;
                let mut pk = klo;
                while pi < kk && pk + 1 < khi {
                    let ci = col_idx[pi];
                    let ck = col_idx[pk];
                    if ci == ck {
                        sum -= values[pi] * values[pk];
                        pi += 1;
                        pk += 1;
                    } else if ci < ck {
                        pi += 1;
                    } else {
                        pk += 1;
                    }
                }
                if k == i {
                    if sum <= 0.0 {
                        return Err(SolveError::FactorizationFailure { row: i, pivot: sum });
                    }
                    values[kk] = sum.sqrt();
                } else {
                    let dk = values[khi - 1];
                    values[kk] = sum / dk;
                }
            }
        }
        Ok(IncompleteCholesky {
            n,
            row_ptr,
            col_idx,
            values,
        })
    }

    /// Apply (L L^T)^{-1}.
    pub fn apply(&self, r: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut y = vec![0.0; n];
        // forward solve L y = r
        for i in 0..n {
            let (lo, hi) = (self.row_ptr[i], self.row_ptr[i + 1]);
            let mut sum = r[i];
            for k in lo..hi - 1 {
                sum -= self.values[k] * y[self.col_idx[k]];
            }
            y[i] = sum / self.values[hi - 1];
        }
        // backward solve L^T x = y
        let mut x = y;
        for i in (0..n).rev() {
            let (lo, hi) = (self.row_ptr[i], self.row_ptr[i + 1]);
            x[i] /= self.values[hi - 1];
            let xi = x[i];
            for k in lo..hi - 1 {
                x[self.col_idx[k]] -= self.values[k] * xi;
            }
        }
        x
    }
}

/// Reverse Cuthill-McKee ordering to keep the factorization profile narrow.
pub fn reverse_cuthill_mckee(a: &SparseSym) -> Vec<usize> {
    let n = a.dim();
    let degree: Vec<usize> = (0..n).map(|i| a.row(i).0.len()).collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut queue = std::collections::VecDeque::new();
    loop {
        // lowest-degree unvisited start node
        let start = match (0..n)
            .filter(|&i| !visited[i])
            .min_by_key(|&i| (degree[i], i))
        {
            Some(s) => s,
            None => break,
        };
        visited[start] = true;
        queue.push_back(start);
        while let Some(u) = queue.pop_front() {
            order.push(u);
            let mut nbrs: Vec<usize> = a.row(u).0.iter().copied().filter(|&v| !visited[v]).collect();
            nbrs.sort_by_key(|&v| (degree[v], v));
            for v in nbrs {
                visited[v] = true;
                queue.push_back(v);
            }
        }
    }
    order.reverse();
    order
}

/// Profile (skyline) LDL^T factorization with a symmetric permutation.
/// Handles symmetric indefinite matrices; pivots are not permuted, so a
/// near-zero pivot reports `FactorizationFailure`.
#[derive(Debug)]
pub struct SkylineLdl {
    n: usize,
    perm: Vec<usize>, // new -> old
    col_start: Vec<usize>,
    // rows of L (unit diagonal implicit), stored dense from col_start[i] to i-1
    data: Vec<f64>,
    row_ptr: Vec<usize>,
    diag: Vec<f64>,
    negative_pivots: usize,
}

impl SkylineLdl {
    pub fn factor(a: &SparseSym) -> Result<Self, SolveError> {
        let n = a.dim();
        if n >= DIRECT_FALLBACK_LIMIT {
            return Err(SolveError::TooLargeForDirect {
                n,
                limit: DIRECT_FALLBACK_LIMIT,
            });
        }
        let perm = reverse_cuthill_mckee(a);
        let mut inv_perm = vec![0usize; n];
        for (new, &old) in perm.iter().enumerate() {
            inv_perm[old] = new;
        }
        // column start of each permuted row's profile
        let mut col_start = vec![0usize; n];
        for new_i in 0..n {
            let old_i = perm[new_i];
            let mut lo = new_i;
            for &old_j in a.row(old_i).0 {
                lo = lo.min(inv_perm[old_j]);
            }
            col_start[new_i] = lo;
        }
        let mut row_ptr = vec![0usize; n + 1];
        for i in 0..n {
            row_ptr[i + 1] = row_ptr[i] + (i - col_start[i]);
        }
        let mut data = vec![0.0; row_ptr[n]];
        let mut diag = vec![0.0; n];
        // scatter permuted A into the profile
        for new_i in 0..n {
            let old_i = perm[new_i];
            let (cols, vals) = a.row(old_i);
            for (&old_j, &v) in cols.iter().zip(vals) {
                let new_j = inv_perm[old_j];
                if new_j < new_i {
                    data[row_ptr[new_i] + (new_j - col_start[new_i])] = v;
                } else if new_j == new_i {
                    diag[new_i] = v;
                }
            }
        }
        // scale reference for the pivot test
        let scale = diag
            .iter()
            .fold(0.0_f64, |m, &d| m.max(d.abs()))
            .max(1e-300);
        let mut negative_pivots = 0;
        // row-oriented LDL^T restricted to the profile
        for i in 0..n {
            let ci = col_start[i];
            for j in ci..i {
                let cj = col_start[j];
                let lo = ci.max(cj);
                let mut sum = data[row_ptr[i] + (j - ci)];
                for k in lo..j {
                    sum -= data[row_ptr[i] + (k - ci)]
                        * data[row_ptr[j] + (k - cj)]
                        * diag[k];
                }
                data[row_ptr[i] + (j - ci)] = sum / diag[j];
            }
            let mut d = diag[i];
            for k in ci..i {
                let lik = data[row_ptr[i] + (k - ci)];
                d -= lik * lik * diag[k];
            }
            if d.abs() < 1e-14 * scale {
                return Err(SolveError::FactorizationFailure { row: i, pivot: d });
            }
            if d < 0.0 {
                negative_pivots += 1;
            }
            diag[i] = d;
        }
        Ok(SkylineLdl {
            n,
            perm,
            col_start,
            data,
            row_ptr,
            diag,
            negative_pivots,
        })
    }

    /// Number of negative pivots = number of eigenvalues below the shift,
    /// by Sylvester's law of inertia.
    pub fn negative_pivots(&self) -> usize {
        self.negative_pivots
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.n);
        let n = self.n;
        let mut y = vec![0.0; n];
        for i in 0..n {
            y[i] = b[self.perm[i]];
        }
        // L y
        for i in 0..n {
            let ci = self.col_start[i];
            let mut sum = y[i];
            for k in ci..i {
                sum -= self.data[self.row_ptr[i] + (k - ci)] * y[k];
            }
            y[i] = sum;
        }
        // D
        for i in 0..n {
            y[i] /= self.diag[i];
        }
        // L^T
        for i in (0..n).rev() {
            let ci = self.col_start[i];
            let yi = y[i];
            for k in ci..i {
                y[k] -= self.data[self.row_ptr[i] + (k - ci)] * yi;
            }
        }
        let mut x = vec![0.0; n];
        for i in 0..n {
            x[self.perm[i]] = y[i];
        }
        x
    }
}
