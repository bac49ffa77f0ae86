//! Small dense-free linear algebra: symmetric tridiagonal solves and a
//! GMRES iteration with a caller-supplied inner product.

/// LDLᵀ factorization of a symmetric tridiagonal matrix.
#[derive(Debug, Clone)]
pub struct Tridiagonal {
    diag: Vec<f64>,
    off: Vec<f64>,
    pivots: Vec<f64>,
    lower: Vec<f64>,
}

impl Tridiagonal {
    /// Returns `None` when a pivot is not strictly positive (the matrix is
    /// not positive definite to working precision).
    pub fn factor(diag: Vec<f64>, off: Vec<f64>) -> Option<Self> {
        let n = diag.len();
        assert_eq!(off.len(), n.saturating_sub(1));
        let mut pivots = vec![0.0; n];
        let mut lower = vec![0.0; n.saturating_sub(1)];
        for i in 0..n {
            let mut p = diag[i];
            if i > 0 {
                p -= lower[i - 1] * off[i - 1];
            }
            if !(p.is_finite() && p > 0.0) {
                return None;
            }
            pivots[i] = p;
            if i + 1 < n {
                lower[i] = off[i] / p;
            }
        }
        Some(Self {
            diag,
            off,
            pivots,
            lower,
        })
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = self.len();
        let mut y = vec![0.0; n];
        for i in 0..n {
            let mut v = self.diag[i] * x[i];
            if i > 0 {
                v += self.off[i - 1] * x[i - 1];
            }
            if i + 1 < n {
                v += self.off[i] * x[i + 1];
            }
            y[i] = v;
        }
        y
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.len();
        let mut y = b.to_vec();
        for i in 1..n {
            y[i] -= self.lower[i - 1] * y[i - 1];
        }
        for (yi, p) in y.iter_mut().zip(&self.pivots) {
            *yi /= p;
        }
        for i in (0..n.saturating_sub(1)).rev() {
            y[i] -= self.lower[i] * y[i + 1];
        }
        y
    }
}

/// Outcome of a [`gmres`] solve.
#[derive(Debug, Clone)]
pub struct KrylovOutcome {
    pub solution: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
}

/// Unrestarted GMRES for `A x = b` with zero initial guess, orthogonalizing
/// in the inner product `dot`. Stops when the residual norm drops below
/// `rel_tol·‖b‖` or after `max_iter` steps.
pub fn gmres<A, D>(apply: A, dot: D, b: &[f64], rel_tol: f64, max_iter: usize) -> KrylovOutcome
where
    A: Fn(&[f64]) -> Vec<f64>,
    D: Fn(&[f64], &[f64]) -> f64,
{
    let n = b.len();
    let beta = dot(b, b).max(0.0).sqrt();
    if beta == 0.0 {
        return KrylovOutcome {
            solution: vec![0.0; n],
            residual: 0.0,
            iterations: 0,
        };
    }
    let target = rel_tol * beta;
    let mut basis: Vec<Vec<f64>> = vec![b.iter().map(|v| v / beta).collect()];
    // Hessenberg columns after Givens rotation.
    let mut hess: Vec<Vec<f64>> = Vec::new();
    let mut cs: Vec<f64> = Vec::new();
    let mut sn: Vec<f64> = Vec::new();
    let mut g = vec![beta];
    let mut residual = beta;
    let mut k = 0;
    while k < max_iter {
        let mut w = apply(&basis[k]);
        let mut col = vec![0.0; k + 2];
        // Modified Gram-Schmidt, twice for stability.
        for _ in 0..2 {
            for (j, vj) in basis.iter().enumerate() {
                let hij = dot(&w, vj);
                col[j] += hij;
                for (wi, vi) in w.iter_mut().zip(vj) {
                    *wi -= hij * vi;
                }
            }
        }
        let hnext = dot(&w, &w).max(0.0).sqrt();
        col[k + 1] = hnext;
        for j in 0..k {
            let t = cs[j] * col[j] + sn[j] * col[j + 1];
            col[j + 1] = -sn[j] * col[j] + cs[j] * col[j + 1];
            col[j] = t;
        }
        let denom = col[k].hypot(col[k + 1]);
        let (c, s) = if denom == 0.0 {
            (1.0, 0.0)
        } else {
            (col[k] / denom, col[k + 1] / denom)
        };
        col[k] = denom;
        col[k + 1] = 0.0;
        cs.push(c);
        sn.push(s);
        g.push(-s * g[k]);
        g[k] *= c;
        residual = g[k + 1].abs();
        hess.push(col);
        k += 1;
        if residual <= target || hnext <= f64::EPSILON * beta {
            break;
        }
        basis.push(w.iter().map(|v| v / hnext).collect());
    }
    // Back substitution on the triangular system.
    let mut y = vec![0.0; k];
    for i in (0..k).rev() {
        let mut acc = g[i];
        for j in i + 1..k {
            acc -= hess[j][i] * y[j];
        }
        y[i] = if hess[i][i] != 0.0 {
            acc / hess[i][i]
        } else {
            0.0
        };
    }
    let mut solution = vec![0.0; n];
    for (yj, vj) in y.iter().zip(&basis) {
        for (si, vi) in solution.iter_mut().zip(vj) {
            *si += yj * vi;
        }
    }
    KrylovOutcome {
        solution,
        residual,
        iterations: k,
    }
}
