use super::sparse::{dissection_order, lu_factor, CscMatrix};
use crate::{Error, Result};
use nalgebra::DVector;

/// How linear systems inside Newton iterations are solved.
#[derive(Debug, Clone, PartialEq)]
pub enum LinearMethod {
    /// Sparse LU with a geometric fill-reducing ordering.
    Direct,
    /// Restarted GMRES preconditioned with ILU(0).
    Gmres { restart: usize, max_iters: usize },
}

impl Default for LinearMethod {
    fn default() -> Self {
        LinearMethod::Direct
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearConfig {
    pub method: LinearMethod,
    /// Relative residual the solution must reach.
    pub tolerance: f64,
}

impl Default for LinearConfig {
    fn default() -> Self {
        LinearConfig {
            method: LinearMethod::Direct,
            tolerance: 1e-8,
        }
    }
}

/// Reusable solver: the fill-reducing order is computed once per pattern.
pub struct LinearSolver {
    pub config: LinearConfig,
    order: Option<Vec<u32>>,
}

impl LinearSolver {
    pub fn new(config: LinearConfig) -> Self {
        LinearSolver {
            config,
            order: None,
        }
    }

    /// Solve A x = b. `pos` gives one spatial point per unknown for the
    /// geometric ordering; it is only read on the first direct solve.
    pub fn solve(
        &mut self,
        a: &CscMatrix,
        b: &DVector<f64>,
        pos: &[[f64; 3]],
    ) -> Result<DVector<f64>> {
        let b_norm = b.norm();
        if b_norm == 0.0 {
            return Ok(DVector::zeros(a.n));
        }
        match self.config.method {
            LinearMethod::Direct => {
                if self.order.is_none() {
                    self.order = Some(dissection_order(a, pos));
                }
                let factors = lu_factor(a, self.order.as_ref().unwrap(), 0.1)?;
                let mut x = factors.solve(b);
                // Iterative refinement guards against pivot growth.
                for _ in 0..3 {
                    let r = b - a.mul_vec(&x);
                    if r.norm() <= self.config.tolerance * b_norm {
                        return Ok(x);
                    }
                    x += factors.solve(&r);
                }
                let rel = (b - a.mul_vec(&x)).norm() / b_norm;
                if rel <= self.config.tolerance {
                    Ok(x)
                } else {
                    Err(Error::Solver {
                        iterations: 3,
                        detail: format!("direct solve stalled at relative residual {rel:.3e}"),
                    })
                }
            }
            LinearMethod::Gmres { restart, max_iters } => {
                gmres_ilu0(a, b, restart, max_iters, self.config.tolerance)
            }
        }
    }
}

/// Compressed sparse row copy of a CSC matrix.
struct CsrMatrix {
    row_ptr: Vec<usize>,
    col_idx: Vec<u32>,
    values: Vec<f64>,
}

fn csc_to_csr(a: &CscMatrix) -> CsrMatrix {
    let n = a.n;
    let mut counts = vec![0usize; n + 1];
    for &r in &a.row_idx {
        counts[r as usize + 1] += 1;
    }
    for i in 0..n {
        counts[i + 1] += counts[i];
    }
    let row_ptr = counts.clone();
    let mut col_idx = vec![0u32; a.nnz()];
    let mut values = vec![0.0f64; a.nnz()];
    let mut next = counts;
    for j in 0..n {
        for k in a.col_ptr[j]..a.col_ptr[j + 1] {
            let r = a.row_idx[k] as usize;
            let dst = next[r];
            next[r] += 1;
            col_idx[dst] = j as u32;
            values[dst] = a.values[k];
        }
    }
    // Columns within each row come out sorted because CSC columns are
    // visited in ascending order.
    CsrMatrix {
        row_ptr,
        col_idx,
        values,
    }
}

/// ILU(0): incomplete LU on the existing pattern, stored in-place in CSR.
struct Ilu0 {
    csr: CsrMatrix,
    diag: Vec<usize>,
    n: usize,
}

fn ilu0(a: &CscMatrix) -> Ilu0 {
    let n = a.n;
    let mut csr = csc_to_csr(a);
    let mut diag = vec![usize::MAX; n];
    for i in 0..n {
        for k in csr.row_ptr[i]..csr.row_ptr[i + 1] {
            if csr.col_idx[k] as usize == i {
                diag[i] = k;
            }
        }
    }
    let mut colmap = vec![usize::MAX; n];
    for i in 0..n {
        let (lo, hi) = (csr.row_ptr[i], csr.row_ptr[i + 1]);
        for k in lo..hi {
            colmap[csr.col_idx[k] as usize] = k;
        }
        for k in lo..hi {
            let j = csr.col_idx[k] as usize;
            if j >= i {
                break;
            }
            let dj = diag[j];
            if dj == usize::MAX || csr.values[dj] == 0.0 {
                continue;
            }
            let factor = csr.values[k] / csr.values[dj];
            csr.values[k] = factor;
            for kk in dj + 1..csr.row_ptr[j + 1] {
                let dst = colmap[csr.col_idx[kk] as usize];
                if dst != usize::MAX {
                    csr.values[dst] -= factor * csr.values[kk];
                }
            }
        }
        for k in lo..hi {
            colmap[csr.col_idx[k] as usize] = usize::MAX;
        }
        // A vanishing pivot only weakens the preconditioner; replace it so
        // the triangular solves stay finite.
        let d = diag[i];
        if d == usize::MAX {
            diag[i] = usize::MAX;
        } else if csr.values[d].abs() < 1e-300 {
            csr.values[d] = 1e-8;
        }
    }
    Ilu0 { csr, diag, n }
}

impl Ilu0 {
    /// z = (L U)^{-1} r on the incomplete factors.
    fn apply(&self, r: &DVector<f64>, z: &mut DVector<f64>) {
        z.copy_from(r);
        for i in 0..self.n {
            let d = self.diag[i];
            if d == usize::MAX {
                continue;
            }
            let mut s = z[i];
            for k in self.csr.row_ptr[i]..d {
                s -= self.csr.values[k] * z[self.csr.col_idx[k] as usize];
            }
            z[i] = s;
        }
        for i in (0..self.n).rev() {
            let d = self.diag[i];
            if d == usize::MAX {
                continue;
            }
            let mut s = z[i];
            for k in d + 1..self.csr.row_ptr[i + 1] {
                s -= self.csr.values[k] * z[self.csr.col_idx[k] as usize];
            }
            z[i] = s / self.csr.values[d];
        }
    }
}

/// Right-preconditioned restarted GMRES with modified Gram-Schmidt and
/// Givens rotations. Deterministic for a fixed matrix and right-hand side.
fn gmres_ilu0(
    a: &CscMatrix,
    b: &DVector<f64>,
    restart: usize,
    max_iters: usize,
    tol: f64,
) -> Result<DVector<f64>> {
    let n = a.n;
    let m = restart.max(1);
    let prec = ilu0(a);
    let b_norm = b.norm();
    let mut x = DVector::zeros(n);
    let mut total = 0usize;
    let mut z = DVector::zeros(n);
    let mut w = DVector::zeros(n);

    while total < max_iters {
        let r = b - a.mul_vec(&x);
        let beta = r.norm();
        if beta <= tol * b_norm {
            return Ok(x);
        }
        let mut v: Vec<DVector<f64>> = Vec::with_capacity(m + 1);
        v.push(r / beta);
        let mut h = vec![vec![0.0f64; m]; m + 1];
        let mut cs = vec![0.0f64; m];
        let mut sn = vec![0.0f64; m];
        let mut g = vec![0.0f64; m + 1];
        g[0] = beta;
        let mut k_used = 0;

        for k in 0..m {
            if total >= max_iters {
                break;
            }
            total += 1;
            prec.apply(&v[k], &mut z);
            a.mul_vec_into(&z, &mut w);
            for (i, vi) in v.iter().enumerate() {
                let hik = w.dot(vi);
                h[i][k] = hik;
                w.axpy(-hik, vi, 1.0);
            }
            let hk1 = w.norm();
            h[k + 1][k] = hk1;
            // Apply the accumulated rotations to the new column.
            for i in 0..k {
                let tmp = cs[i] * h[i][k] + sn[i] * h[i + 1][k];
                h[i + 1][k] = -sn[i] * h[i][k] + cs[i] * h[i + 1][k];
                h[i][k] = tmp;
            }
            let denom = (h[k][k] * h[k][k] + hk1 * hk1).sqrt();
            if denom == 0.0 {
                k_used = k;
                break;
            }
            cs[k] = h[k][k] / denom;
            sn[k] = h[k + 1][k] / denom;
            h[k][k] = denom;
            h[k + 1][k] = 0.0;
            g[k + 1] = -sn[k] * g[k];
            g[k] *= cs[k];
            k_used = k + 1;
            if g[k + 1].abs() <= tol * b_norm {
                break;
            }
            if hk1 == 0.0 {
                break;
            }
            v.push(&w / hk1);
        }

        if k_used == 0 {
            break;
        }
        // Back-substitute the triangularized Hessenberg system.
        let mut y = vec![0.0f64; k_used];
        for i in (0..k_used).rev() {
            let mut s = g[i];
            for j in i + 1..k_used {
                s -= h[i][j] * y[j];
            }
            y[i] = s / h[i][i];
        }
        let mut update = DVector::zeros(n);
        for (k, &yk) in y.iter().enumerate() {
            update.axpy(yk, &v[k], 1.0);
        }
        prec.apply(&update, &mut z);
        x += &z;
    }

    let rel = (b - a.mul_vec(&x)).norm() / b_norm;
    if rel <= tol {
        Ok(x)
    } else {
        Err(Error::Solver {
            iterations: total,
            detail: format!("gmres stalled at relative residual {rel:.3e}"),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;
    use rand::{Rng, SeedableRng};

    fn random_system(n: usize, seed: u64) -> (CscMatrix, DVector<f64>, DMatrix<f64>) {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let dense = DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                5.0 + rng.random_range(0.0..1.0)
            } else if rng.random_range(0.0..1.0) < 0.12 {
                rng.random_range(-1.0..1.0)
            } else {
                0.0
            }
        });
        let b = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
        (CscMatrix::from_dense(&dense), b, dense)
    }

    fn positions(n: usize) -> Vec<[f64; 3]> {
        (0..n).map(|i| [i as f64, 0.0, 0.0]).collect()
    }

    #[test]
    fn direct_solves_random_system() {
        let (a, b, dense) = random_system(80, 5);
        let mut solver = LinearSolver::new(LinearConfig::default());
        let x = solver.solve(&a, &b, &positions(80)).unwrap();
        let want = dense.lu().solve(&b).unwrap();
        assert!((&x - &want).norm() < 1e-8 * want.norm());
    }

    #[test]
    fn gmres_matches_direct() {
        let (a, b, _) = random_system(120, 6);
        let mut direct = LinearSolver::new(LinearConfig::default());
        let mut krylov = LinearSolver::new(LinearConfig {
            method: LinearMethod::Gmres {
                restart: 40,
                max_iters: 300,
            },
            tolerance: 1e-10,
        });
        let xd = direct.solve(&a, &b, &positions(120)).unwrap();
        let xk = krylov.solve(&a, &b, &positions(120)).unwrap();
        assert!((&xd - &xk).norm() < 1e-7 * xd.norm().max(1.0));
    }

    #[test]
    fn zero_rhs_gives_zero_solution() {
        let (a, _, _) = random_system(30, 7);
        let b = DVector::zeros(30);
        let mut solver = LinearSolver::new(LinearConfig::default());
        let x = solver.solve(&a, &b, &positions(30)).unwrap();
        assert_eq!(x, b);
    }

    #[test]
    fn gmres_converges_on_unsymmetric_advection_diffusion() {
        // 1D advection-diffusion stencil, strongly nonsymmetric.
        let n = 200;
        let mut dense = DMatrix::zeros(n, n);
        for i in 0..n {
            dense[(i, i)] = 2.5;
            if i > 0 {
                dense[(i, i - 1)] = -2.0;
            }
            if i + 1 < n {
                dense[(i, i + 1)] = -0.5;
            }
        }
        let a = CscMatrix::from_dense(&dense);
        let b = DVector::from_element(n, 1.0);
        let mut solver = LinearSolver::new(LinearConfig {
            method: LinearMethod::Gmres {
                restart: 60,
                max_iters: 600,
            },
            tolerance: 1e-9,
        });
        let x = solver.solve(&a, &b, &positions(n)).unwrap();
        assert!((a.mul_vec(&x) - &b).norm() < 1e-8 * b.norm());
    }
}
