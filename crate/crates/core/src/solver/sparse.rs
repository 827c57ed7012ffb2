use crate::{Error, Result};
use nalgebra::{DMatrix, DVector};

/// Compressed sparse column matrix with a fixed pattern, sorted rows per
/// column.
#[derive(Debug, Clone)]
pub struct CscMatrix {
    pub n: usize,
    pub col_ptr: Vec<usize>,
    pub row_idx: Vec<u32>,
    pub values: Vec<f64>,
}

impl CscMatrix {
    /// Build from per-column row lists (sorted, deduplicated), values zero.
    pub fn from_columns(n: usize, cols: Vec<Vec<u32>>) -> Self {
        assert_eq!(cols.len(), n);
        let mut col_ptr = Vec::with_capacity(n + 1);
        col_ptr.push(0);
        let nnz: usize = cols.iter().map(|c| c.len()).sum();
        let mut row_idx = Vec::with_capacity(nnz);
        for col in &cols {
            debug_assert!(col.windows(2).all(|w| w[0] < w[1]));
            row_idx.extend_from_slice(col);
            col_ptr.push(row_idx.len());
        }
        let values = vec![0.0; nnz];
        CscMatrix {
            n,
            col_ptr,
            row_idx,
            values,
        }
    }

    pub fn from_dense(a: &DMatrix<f64>) -> Self {
        let n = a.ncols();
        let cols = (0..n)
            .map(|j| {
                (0..a.nrows())
                    .filter(|&i| a[(i, j)] != 0.0)
                    .map(|i| i as u32)
                    .collect()
            })
            .collect();
        let mut m = CscMatrix::from_columns(n, cols);
        for j in 0..n {
            for k in m.col_ptr[j]..m.col_ptr[j + 1] {
                m.values[k] = a[(m.row_idx[k] as usize, j)];
            }
        }
        m
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut a = DMatrix::zeros(self.n, self.n);
        for j in 0..self.n {
            for k in self.col_ptr[j]..self.col_ptr[j + 1] {
                a[(self.row_idx[k] as usize, j)] = self.values[k];
            }
        }
        a
    }

    pub fn nnz(&self) -> usize {
        self.row_idx.len()
    }

    pub fn zero_values(&mut self) {
        self.values.fill(0.0);
    }

    /// Add into an entry that must exist in the pattern.
    pub fn add(&mut self, row: usize, col: usize, v: f64) {
        let lo = self.col_ptr[col];
        let hi = self.col_ptr[col + 1];
        let pos = self.row_idx[lo..hi]
            .binary_search(&(row as u32))
            .expect("entry outside the sparsity pattern");
        self.values[lo + pos] += v;
    }

    /// y = A x
    pub fn mul_vec_into(&self, x: &DVector<f64>, y: &mut DVector<f64>) {
        y.fill(0.0);
        for j in 0..self.n {
            let xj = x[j];
            if xj == 0.0 {
                continue;
            }
            for k in self.col_ptr[j]..self.col_ptr[j + 1] {
                y[self.row_idx[k] as usize] += self.values[k] * xj;
            }
        }
    }

    pub fn mul_vec(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut y = DVector::zeros(self.n);
        self.mul_vec_into(x, &mut y);
        y
    }
}

/// Fill-reducing column order by recursive geometric bisection: each region
/// is split at the median of its widest coordinate, the vertices of the
/// lower half adjacent to the upper half form the separator and are ordered
/// last. Positions give one point per unknown.
pub fn dissection_order(a: &CscMatrix, pos: &[[f64; 3]]) -> Vec<u32> {
    assert_eq!(pos.len(), a.n);
    let mut order = Vec::with_capacity(a.n);
    let mut in_upper = vec![false; a.n];
    let all: Vec<u32> = (0..a.n as u32).collect();
    split(a, pos, all, &mut in_upper, &mut order);
    debug_assert_eq!(order.len(), a.n);
    order
}

fn split(
    a: &CscMatrix,
    pos: &[[f64; 3]],
    mut set: Vec<u32>,
    in_upper: &mut [bool],
    out: &mut Vec<u32>,
) {
    const LEAF: usize = 48;
    if set.len() <= LEAF {
        out.extend_from_slice(&set);
        return;
    }
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for &i in &set {
        for d in 0..3 {
            lo[d] = lo[d].min(pos[i as usize][d]);
            hi[d] = hi[d].max(pos[i as usize][d]);
        }
    }
    let dim = (0..3)
        .max_by(|&x, &y| (hi[x] - lo[x]).partial_cmp(&(hi[y] - lo[y])).unwrap())
        .unwrap();
    set.sort_unstable_by(|&x, &y| {
        pos[x as usize][dim]
            .partial_cmp(&pos[y as usize][dim])
            .unwrap()
    });
    let mid = set.len() / 2;
    let (lower, upper) = set.split_at(mid);
    if lower.is_empty() || upper.is_empty() {
        out.extend_from_slice(&set);
        return;
    }
    for &i in upper {
        in_upper[i as usize] = true;
    }
    let mut interior = Vec::with_capacity(lower.len());
    let mut separator = Vec::new();
    for &i in lower {
        let cols = a.col_ptr[i as usize]..a.col_ptr[i as usize + 1];
        if a.row_idx[cols].iter().any(|&r| in_upper[r as usize]) {
            separator.push(i);
        } else {
            interior.push(i);
        }
    }
    let upper: Vec<u32> = upper.to_vec();
    for &i in &upper {
        in_upper[i as usize] = false;
    }
    if interior.is_empty() {
        // The halves are fully coupled at this granularity.
        out.extend_from_slice(&upper);
        out.extend_from_slice(&separator);
        return;
    }
    split(a, pos, interior, in_upper, out);
    split(a, pos, upper, in_upper, out);
    out.extend_from_slice(&separator);
}

/// Sparse LU factors of A with column order and threshold partial pivoting.
/// Row indices of both factors are in pivot order.
pub struct LuFactors {
    n: usize,
    l_colptr: Vec<usize>,
    l_rows: Vec<u32>,
    l_vals: Vec<f64>,
    u_colptr: Vec<usize>,
    u_rows: Vec<u32>,
    u_vals: Vec<f64>,
    /// Pivot row (original index) of each elimination step.
    pivot_rows: Vec<u32>,
    /// Original column handled at each elimination step.
    col_order: Vec<u32>,
}

/// Left-looking sparse LU with threshold partial pivoting. The column order
/// is fixed up front (identity or fill-reducing); rows are chosen per column,
/// preferring the natural diagonal when it is within `threshold` of the
/// largest candidate.
pub fn lu_factor(a: &CscMatrix, col_order: &[u32], threshold: f64) -> Result<LuFactors> {
    let n = a.n;
    assert_eq!(col_order.len(), n);
    let mut l_colptr = Vec::with_capacity(n + 1);
    let mut u_colptr = Vec::with_capacity(n + 1);
    l_colptr.push(0);
    u_colptr.push(0);
    let mut l_rows: Vec<u32> = Vec::with_capacity(4 * a.nnz());
    let mut l_vals: Vec<f64> = Vec::with_capacity(4 * a.nnz());
    let mut u_rows: Vec<u32> = Vec::with_capacity(4 * a.nnz());
    let mut u_vals: Vec<f64> = Vec::with_capacity(4 * a.nnz());

    // pinv[original row] = elimination step that pivoted on it, or -1.
    let mut pinv = vec![-1i64; n];
    let mut x = vec![0.0f64; n];
    // DFS scratch: reach holds the pattern in topological order.
    let mut reach: Vec<u32> = Vec::with_capacity(n);
    let mut dfs_stack: Vec<(u32, usize)> = Vec::new();
    let mut visited = vec![u32::MAX; n];

    for (k, &col) in col_order.iter().enumerate() {
        let k_u = k as u32;
        // Pattern of x = L \ A(:, col) by depth-first search through the
        // columns of L that already have pivots.
        reach.clear();
        for t in a.col_ptr[col as usize]..a.col_ptr[col as usize + 1] {
            let start = a.row_idx[t];
            if visited[start as usize] == k_u {
                continue;
            }
            dfs_stack.push((start, 0));
            visited[start as usize] = k_u;
            while let Some(&(node, next)) = dfs_stack.last() {
                let step = pinv[node as usize];
                if step < 0 {
                    reach.push(node);
                    dfs_stack.pop();
                    continue;
                }
                let lo = l_colptr[step as usize];
                let hi = l_colptr[step as usize + 1];
                let mut advanced = false;
                let mut t = next;
                while lo + t < hi {
                    let child = l_rows[lo + t];
                    t += 1;
                    if visited[child as usize] != k_u {
                        visited[child as usize] = k_u;
                        dfs_stack.last_mut().unwrap().1 = t;
                        dfs_stack.push((child, 0));
                        advanced = true;
                        break;
                    }
                }
                if !advanced {
                    reach.push(node);
                    dfs_stack.pop();
                }
            }
        }
        // reach is in topological postorder: dependencies of a node appear
        // after it, so iterate in reverse for the numeric solve.
        for &i in &reach {
            x[i as usize] = 0.0;
        }
        for t in a.col_ptr[col as usize]..a.col_ptr[col as usize + 1] {
            x[a.row_idx[t] as usize] = a.values[t];
        }
        for idx in (0..reach.len()).rev() {
            let i = reach[idx];
            let step = pinv[i as usize];
            if step < 0 {
                continue;
            }
            let xi = x[i as usize];
            if xi == 0.0 {
                continue;
            }
            let lo = l_colptr[step as usize];
            let hi = l_colptr[step as usize + 1];
            for t in lo..hi {
                x[l_rows[t] as usize] -= l_vals[t] * xi;
            }
        }

        // Split into the U part (already pivoted rows) and pivot candidates.
        let mut pivot_row = u32::MAX;
        let mut pivot_abs = 0.0f64;
        let mut diag_ok = false;
        for &i in &reach {
            if pinv[i as usize] >= 0 {
                continue;
            }
            let v = x[i as usize].abs();
            if v > pivot_abs {
                pivot_abs = v;
                pivot_row = i;
            }
            if i == col {
                diag_ok = true;
            }
        }
        if pivot_abs == 0.0 || !pivot_abs.is_finite() {
            return Err(Error::Singular(format!(
                "no usable pivot in column {col} (step {k})"
            )));
        }
        if diag_ok && x[col as usize].abs() >= threshold * pivot_abs {
            pivot_row = col;
        }
        let pivot = x[pivot_row as usize];

        for &i in &reach {
            let step = pinv[i as usize];
            let v = x[i as usize];
            if step >= 0 {
                u_rows.push(step as u32);
                u_vals.push(v);
            } else if i != pivot_row && v != 0.0 {
                l_rows.push(i);
                l_vals.push(v / pivot);
            }
        }
        u_rows.push(k_u);
        u_vals.push(pivot);
        u_colptr.push(u_rows.len());
        l_colptr.push(l_rows.len());
        pinv[pivot_row as usize] = k as i64;
    }

    // Rewrite L row indices into pivot order now that every row has one.
    for r in &mut l_rows {
        *r = pinv[*r as usize] as u32;
    }
    let mut pivot_rows = vec![0u32; n];
    for (orig, &step) in pinv.iter().enumerate() {
        pivot_rows[step as usize] = orig as u32;
    }

    Ok(LuFactors {
        n,
        l_colptr,
        l_rows,
        l_vals,
        u_colptr,
        u_rows,
        u_vals,
        pivot_rows,
        col_order: col_order.to_vec(),
    })
}

impl LuFactors {
    pub fn fill_nnz(&self) -> usize {
        self.l_rows.len() + self.u_rows.len()
    }

    /// Solve A x = b using the factors.
    pub fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        let n = self.n;
        let mut y = DVector::zeros(n);
        for k in 0..n {
            y[k] = b[self.pivot_rows[k] as usize];
        }
        // Forward: unit lower triangular, entries strictly below the step.
        for k in 0..n {
            let yk = y[k];
            if yk == 0.0 {
                continue;
            }
            for t in self.l_colptr[k]..self.l_colptr[k + 1] {
                y[self.l_rows[t] as usize] -= self.l_vals[t] * yk;
            }
        }
        // Backward: the diagonal is the last entry of each U column.
        for k in (0..n).rev() {
            let hi = self.u_colptr[k + 1];
            let lo = self.u_colptr[k];
            let xk = y[k] / self.u_vals[hi - 1];
            y[k] = xk;
            if xk == 0.0 {
                continue;
            }
            for t in lo..hi - 1 {
                y[self.u_rows[t] as usize] -= self.u_vals[t] * xk;
            }
        }
        let mut x = DVector::zeros(n);
        for k in 0..n {
            x[self.col_order[k] as usize] = y[k];
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn random_matrix(n: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                4.0 + rng.random_range(0.0..1.0)
            } else if rng.random_range(0.0..1.0) < 0.15 {
                rng.random_range(-1.0..1.0)
            } else {
                0.0
            }
        })
    }

    #[test]
    fn matvec_matches_dense() {
        let a = random_matrix(40, 1);
        let sp = CscMatrix::from_dense(&a);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        let x = DVector::from_fn(40, |_, _| rng.random_range(-1.0..1.0));
        let diff = (&a * &x - sp.mul_vec(&x)).norm();
        assert!(diff < 1e-13);
    }

    #[test]
    fn add_hits_pattern_entries() {
        let a = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]);
        let mut sp = CscMatrix::from_dense(&a);
        sp.zero_values();
        sp.add(0, 0, 2.0);
        sp.add(1, 0, 1.0);
        sp.add(0, 1, 1.0);
        sp.add(1, 1, 2.0);
        assert_eq!(sp.to_dense(), a);
    }

    #[test]
    fn identity_solve_is_identity() {
        let a = CscMatrix::from_dense(&DMatrix::identity(7, 7));
        let order: Vec<u32> = (0..7).collect();
        let f = lu_factor(&a, &order, 0.1).unwrap();
        let b = DVector::from_fn(7, |i, _| i as f64 + 1.0);
        assert_eq!(f.solve(&b), b);
    }

    #[test]
    fn hand_solved_two_by_two() {
        let a = CscMatrix::from_dense(&DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]));
        let f = lu_factor(&a, &[0, 1], 0.1).unwrap();
        let x = f.solve(&DVector::from_row_slice(&[1.0, 1.0]));
        assert!((x[0] - 1.0 / 3.0).abs() < 1e-14);
        assert!((x[1] - 1.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn random_sparse_solve_matches_dense() {
        for seed in 0..4 {
            let n = 120;
            let dense = random_matrix(n, 10 + seed);
            let a = CscMatrix::from_dense(&dense);
            let order: Vec<u32> = (0..n as u32).collect();
            let f = lu_factor(&a, &order, 0.1).unwrap();
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(99 + seed);
            let b = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
            let x = f.solve(&b);
            let want = dense.lu().solve(&b).unwrap();
            assert!((&x - &want).norm() < 1e-10 * want.norm().max(1.0));
        }
    }

    #[test]
    fn pivoting_handles_zero_diagonal() {
        // Natural order would divide by zero at the first column.
        let dense = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let a = CscMatrix::from_dense(&dense);
        let f = lu_factor(&a, &[0, 1], 0.1).unwrap();
        let x = f.solve(&DVector::from_row_slice(&[3.0, 5.0]));
        assert!((x[0] - 5.0).abs() < 1e-14);
        assert!((x[1] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn singular_matrix_reported() {
        let mut dense = random_matrix(10, 3);
        for i in 0..10 {
            dense[(i, 4)] = 0.0;
        }
        let a = CscMatrix::from_dense(&dense);
        let order: Vec<u32> = (0..10).collect();
        assert!(matches!(
            lu_factor(&a, &order, 0.1),
            Err(Error::Singular(_))
        ));
    }

    fn grid_laplacian(nx: usize, ny: usize) -> (CscMatrix, Vec<[f64; 3]>) {
        let n = nx * ny;
        let mut dense = DMatrix::zeros(n, n);
        let idx = |i: usize, j: usize| j * nx + i;
        for j in 0..ny {
            for i in 0..nx {
                let c = idx(i, j);
                dense[(c, c)] = 4.0;
                if i > 0 {
                    dense[(c, idx(i - 1, j))] = -1.0;
                }
                if i + 1 < nx {
                    dense[(c, idx(i + 1, j))] = -1.0;
                }
                if j > 0 {
                    dense[(c, idx(i, j - 1))] = -1.0;
                }
                if j + 1 < ny {
                    dense[(c, idx(i, j + 1))] = -1.0;
                }
            }
        }
        let pos = (0..n)
            .map(|c| [(c % nx) as f64, (c / nx) as f64, 0.0])
            .collect();
        (CscMatrix::from_dense(&dense), pos)
    }

    #[test]
    fn dissection_order_is_a_permutation_and_solves() {
        let (a, pos) = grid_laplacian(20, 20);
        let order = dissection_order(&a, &pos);
        let mut sorted: Vec<u32> = order.clone();
        sorted.sort_unstable();
        assert!(sorted.iter().enumerate().all(|(i, &v)| i as u32 == v));

        let f = lu_factor(&a, &order, 0.1).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(8);
        let b = DVector::from_fn(a.n, |_, _| rng.random_range(-1.0..1.0));
        let x = f.solve(&b);
        assert!((a.mul_vec(&x) - &b).norm() < 1e-10 * b.norm());
    }

    #[test]
    fn dissection_reduces_fill_against_natural_order() {
        let (a, pos) = grid_laplacian(24, 24);
        let natural: Vec<u32> = (0..a.n as u32).collect();
        let f_nat = lu_factor(&a, &natural, 0.1).unwrap();
        let f_nd = lu_factor(&a, &dissection_order(&a, &pos), 0.1).unwrap();
        assert!(
            (f_nd.fill_nnz() as f64) < 0.9 * f_nat.fill_nnz() as f64,
            "nd {} nat {}",
            f_nd.fill_nnz(),
            f_nat.fill_nnz()
        );
    }
}
