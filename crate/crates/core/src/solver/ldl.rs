//! Dense symmetric indefinite factorization `P A P^T = L D L^T` with
//! Bunch-Kaufman partial pivoting. `D` is block diagonal with 1x1 and 2x2
//! blocks, which gives the inertia of `A` directly.

use nalgebra::DMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Inertia {
    pub positive: usize,
    pub negative: usize,
    pub zero: usize,
}

#[derive(Debug, Clone, Copy)]
enum Block {
    One(usize),
    Two(usize),
}

#[derive(Debug, Clone)]
pub struct Ldlt {
    n: usize,
    /// Row-major factors: unit `L` strictly below the block diagonal, `D` on it.
    a: Vec<f64>,
    perm: Vec<usize>,
    blocks: Vec<Block>,
    singular: bool,
}

impl Ldlt {
    /// Factors the symmetric matrix `m` (only the lower triangle is read).
    pub fn factor(m: &DMatrix<f64>) -> Self {
        let n = m.nrows();
        assert_eq!(n, m.ncols(), "matrix must be square");
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let v = m[(i, j)];
                a[i * n + j] = v;
                a[j * n + i] = v;
            }
        }
        let mut perm: Vec<usize> = (0..n).collect();
        let mut blocks = Vec::with_capacity(n);
        let mut singular = false;
        let alpha = (1.0 + 17f64.sqrt()) / 8.0;
        let mut c1 = vec![0.0; n];
        let mut c2 = vec![0.0; n];

        let mut k = 0;
        while k < n {
            let absakk = a[k * n + k].abs();
            let (mut imax, mut colmax) = (k, 0.0);
            for i in k + 1..n {
                let v = a[i * n + k].abs();
                if v > colmax {
                    colmax = v;
                    imax = i;
                }
            }
            if absakk.max(colmax) == 0.0 {
                singular = true;
                blocks.push(Block::One(k));
                k += 1;
                continue;
            }
            let (kp, step) = if absakk >= alpha * colmax {
                (k, 1)
            } else {
                let rowmax = (k..n).filter(|&j| j != imax).map(|j| a[imax * n + j].abs()).fold(0.0, f64::max);
                if absakk * rowmax >= alpha * colmax * colmax {
                    (k, 1)
                } else if a[imax * n + imax].abs() >= alpha * rowmax {
                    (imax, 1)
                } else {
                    (imax, 2)
                }
            };
            let kk = k + step - 1;
            if kp != kk {
                for j in 0..n {
                    a.swap(kk * n + j, kp * n + j);
                }
                for i in 0..n {
                    a.swap(i * n + kk, i * n + kp);
                }
                perm.swap(kk, kp);
            }

            if step == 1 {
                let d = a[k * n + k];
                for i in k + 1..n {
                    c1[i] = a[i * n + k];
                }
                for i in k + 1..n {
                    let li = c1[i] / d;
                    if li != 0.0 {
                        for j in k + 1..n {
                            a[i * n + j] -= li * c1[j];
                        }
                    }
                    a[i * n + k] = li;
                }
                blocks.push(Block::One(k));
            } else {
                let d11 = a[k * n + k];
                let d21 = a[(k + 1) * n + k];
                let d22 = a[(k + 1) * n + k + 1];
                let det = d11 * d22 - d21 * d21;
                for i in k + 2..n {
                    c1[i] = a[i * n + k];
                    c2[i] = a[i * n + k + 1];
                }
                for i in k + 2..n {
                    let w1 = (d22 * c1[i] - d21 * c2[i]) / det;
                    let w2 = (d11 * c2[i] - d21 * c1[i]) / det;
                    for j in k + 2..n {
                        a[i * n + j] -= w1 * c1[j] + w2 * c2[j];
                    }
                    a[i * n + k] = w1;
                    a[i * n + k + 1] = w2;
                }
                blocks.push(Block::Two(k));
            }
            k += step;
        }
        Self { n, a, perm, blocks, singular }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Eigenvalue sign counts of the factored matrix. Pivots with magnitude
    /// at most `zero_tol` count as zero.
    pub fn inertia(&self, zero_tol: f64) -> Inertia {
        let n = self.n;
        let mut out = Inertia::default();
        let mut count = |v: f64| {
            if v.abs() <= zero_tol {
                out.zero += 1;
            } else if v > 0.0 {
                out.positive += 1;
            } else {
                out.negative += 1;
            }
        };
        for b in &self.blocks {
            match *b {
                Block::One(k) => count(self.a[k * n + k]),
                Block::Two(k) => {
                    let d11 = self.a[k * n + k];
                    let d21 = self.a[(k + 1) * n + k];
                    let d22 = self.a[(k + 1) * n + k + 1];
                    // Eigenvalues of the symmetric 2x2 block.
                    let mid = 0.5 * (d11 + d22);
                    let rad = (0.25 * (d11 - d22).powi(2) + d21 * d21).sqrt();
                    count(mid + rad);
                    count(mid - rad);
                }
            }
        }
        out
    }

    /// Solves `A x = b`. Returns `None` if a pivot is exactly zero.
    pub fn solve(&self, b: &[f64]) -> Option<Vec<f64>> {
        let n = self.n;
        assert_eq!(b.len(), n);
        if self.singular {
            return None;
        }
        let a = &self.a;
        let mut y: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();

        for blk in &self.blocks {
            match *blk {
                Block::One(k) => {
                    let yk = y[k];
                    for i in k + 1..n {
                        y[i] -= a[i * n + k] * yk;
                    }
                }
                Block::Two(k) => {
                    let (y1, y2) = (y[k], y[k + 1]);
                    for i in k + 2..n {
                        y[i] -= a[i * n + k] * y1 + a[i * n + k + 1] * y2;
                    }
                }
            }
        }
        for blk in &self.blocks {
            match *blk {
                Block::One(k) => {
                    let d = a[k * n + k];
                    if d == 0.0 {
                        return None;
                    }
                    y[k] /= d;
                }
                Block::Two(k) => {
                    let d11 = a[k * n + k];
                    let d21 = a[(k + 1) * n + k];
                    let d22 = a[(k + 1) * n + k + 1];
                    let det = d11 * d22 - d21 * d21;
                    if det == 0.0 {
                        return None;
                    }
                    let (y1, y2) = (y[k], y[k + 1]);
                    y[k] = (d22 * y1 - d21 * y2) / det;
                    y[k + 1] = (d11 * y2 - d21 * y1) / det;
                }
            }
        }
        for blk in self.blocks.iter().rev() {
            match *blk {
                Block::One(k) => {
                    let s: f64 = (k + 1..n).map(|i| a[i * n + k] * y[i]).sum();
                    y[k] -= s;
                }
                Block::Two(k) => {
                    let s1: f64 = (k + 2..n).map(|i| a[i * n + k] * y[i]).sum();
                    let s2: f64 = (k + 2..n).map(|i| a[i * n + k + 1] * y[i]).sum();
                    y[k] -= s1;
                    y[k + 1] -= s2;
                }
            }
        }
        let mut x = vec![0.0; n];
        for (i, &p) in self.perm.iter().enumerate() {
            x[p] = y[i];
        }
        if x.iter().all(|v| v.is_finite()) {
            Some(x)
        } else {
            None
        }
    }
}
