//! Small dense linear algebra: row-major matrices, Householder QR, and the
//! solves needed by the sieve regression and Markov long-run variance code.
//!
//! Problem sizes here are tiny (square systems up to ~10 unknowns, tall
//! thin QR with a handful of columns), so a compact implementation is used
//! instead of an external linear algebra crate.

use crate::error::{CoreError, Result};

/// Dense row-major matrix of `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    pub rows: usize,
    pub cols: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        if rows.is_empty() {
            return Err(CoreError::InvalidArgument("matrix needs at least one row".into()));
        }
        let cols = rows[0].len();
        if rows.iter().any(|r| r.len() != cols) {
            return Err(CoreError::InvalidArgument("ragged rows".into()));
        }
        Ok(Mat { rows: rows.len(), cols, data: rows.concat() })
    }

    pub fn matmul(&self, other: &Mat) -> Mat {
        assert_eq!(self.cols, other.rows);
        let mut out = Mat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, v.len());
        let mut out = vec![0.0; self.rows];
        for i in 0..self.rows {
            let mut acc = 0.0;
            for j in 0..self.cols {
                acc += self[(i, j)] * v[j];
            }
            out[i] = acc;
        }
        out
    }

    pub fn transpose(&self) -> Mat {
        let mut out = Mat::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)];
            }
        }
        out
    }

    /// Max absolute entry difference, for tests.
    pub fn max_abs_diff(&self, other: &Mat) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

impl std::ops::Index<(usize, usize)> for Mat {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Mat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Thin Householder QR of an `n x k` matrix with `n >= k`.
///
/// Stores `Q` explicitly (`n x k`, orthonormal columns) and the upper
/// triangular `R` (`k x k`). The ratio of extreme `|R|` diagonal entries
/// estimates the condition number of the input.
#[derive(Debug, Clone)]
pub struct ThinQr {
    pub q: Mat,
    pub r: Mat,
}

impl ThinQr {
    pub fn new(a: &Mat) -> Result<Self> {
        let (n, k) = (a.rows, a.cols);
        if n < k {
            return Err(CoreError::InvalidArgument(format!(
                "QR needs rows >= cols, got {n} x {k}"
            )));
        }
        // Householder factorization on a working copy; accumulate Q by
        // applying the reflectors to the first k columns of the identity.
        let mut work = a.clone();
        let mut vs: Vec<Vec<f64>> = Vec::with_capacity(k);
        for j in 0..k {
            let mut v = vec![0.0; n - j];
            let mut norm2 = 0.0;
            for i in j..n {
                v[i - j] = work[(i, j)];
                norm2 += work[(i, j)] * work[(i, j)];
            }
            let norm = norm2.sqrt();
            if norm == 0.0 {
                vs.push(vec![0.0; n - j]);
                continue;
            }
            let alpha = if v[0] >= 0.0 { -norm } else { norm };
            v[0] -= alpha;
            let vnorm2: f64 = v.iter().map(|x| x * x).sum();
            if vnorm2 > 0.0 {
                // Apply (I - 2 v v'/v'v) to remaining columns.
                for c in j..k {
                    let mut dot = 0.0;
                    for i in j..n {
                        dot += v[i - j] * work[(i, c)];
                    }
                    let scale = 2.0 * dot / vnorm2;
                    for i in j..n {
                        work[(i, c)] -= scale * v[i - j];
                    }
                }
            }
            vs.push(v);
        }
        let mut r = Mat::zeros(k, k);
        for i in 0..k {
            for j in i..k {
                r[(i, j)] = work[(i, j)];
            }
        }
        // Build Q = H_0 ... H_{k-1} applied to the first k identity columns.
        let mut q = Mat::zeros(n, k);
        for c in 0..k {
            q[(c, c)] = 1.0;
        }
        for j in (0..k).rev() {
            let v = &vs[j];
            let vnorm2: f64 = v.iter().map(|x| x * x).sum();
            if vnorm2 == 0.0 {
                continue;
            }
            for c in 0..k {
                let mut dot = 0.0;
                for i in j..n {
                    dot += v[i - j] * q[(i, c)];
                }
                let scale = 2.0 * dot / vnorm2;
                for i in j..n {
                    q[(i, c)] -= scale * v[i - j];
                }
            }
        }
        Ok(ThinQr { q, r })
    }

    /// Condition number estimate from the extreme `|R|` diagonal entries.
    pub fn cond_estimate(&self) -> f64 {
        let k = self.r.cols;
        let mut lo = f64::INFINITY;
        let mut hi: f64 = 0.0;
        for i in 0..k {
            let d = self.r[(i, i)].abs();
            lo = lo.min(d);
            hi = hi.max(d);
        }
        if lo == 0.0 {
            f64::INFINITY
        } else {
            hi / lo
        }
    }

    /// Least squares solve `min ||A x - b||` via `R x = Q' b`.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let k = self.r.cols;
        let qt_b: Vec<f64> = (0..k)
            .map(|j| (0..self.q.rows).map(|i| self.q[(i, j)] * b[i]).sum())
            .collect();
        back_substitute(&self.r, &qt_b)
    }

    /// Projection of `b` onto the column space: `Q Q' b`.
    pub fn project(&self, b: &[f64]) -> Vec<f64> {
        let k = self.r.cols;
        let qt_b: Vec<f64> = (0..k)
            .map(|j| (0..self.q.rows).map(|i| self.q[(i, j)] * b[i]).sum())
            .collect();
        let mut out = vec![0.0; self.q.rows];
        for i in 0..self.q.rows {
            let mut acc = 0.0;
            for j in 0..k {
                acc += self.q[(i, j)] * qt_b[j];
            }
            out[i] = acc;
        }
        out
    }
}

fn back_substitute(r: &Mat, b: &[f64]) -> Result<Vec<f64>> {
    let k = r.cols;
    let mut x = vec![0.0; k];
    for i in (0..k).rev() {
        let mut acc = b[i];
        for j in i + 1..k {
            acc -= r[(i, j)] * x[j];
        }
        if r[(i, i)] == 0.0 {
            return Err(CoreError::InvalidArgument("singular triangular factor".into()));
        }
        x[i] = acc / r[(i, i)];
    }
    Ok(x)
}

/// Solve a square system `A x = b` via QR.
pub fn solve_square(a: &Mat, b: &[f64]) -> Result<Vec<f64>> {
    if a.rows != a.cols || a.rows != b.len() {
        return Err(CoreError::InvalidArgument("solve_square shape mismatch".into()));
    }
    ThinQr::new(a)?.solve(b)
}

/// Inverse of a symmetric 2x2 matrix.
pub fn inv2(m: [[f64; 2]; 2]) -> Result<[[f64; 2]; 2]> {
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    if det == 0.0 || !det.is_finite() {
        return Err(CoreError::DegenerateVariance("singular 2x2 matrix".into()));
    }
    Ok([
        [m[1][1] / det, -m[0][1] / det],
        [-m[1][0] / det, m[0][0] / det],
    ])
}
