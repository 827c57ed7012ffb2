use super::{eval_basis_ders, BasisEval, KnotVector};
use crate::{Error, Result};
use nalgebra::DMatrix;

/// Tensor-product NURBS patch of arbitrary parametric dimension.
///
/// Control points are stored in homogeneous form `(w*x_1, ..., w*x_m, w)` in
/// lexicographic order with direction 0 running fastest.
#[derive(Debug, Clone)]
pub struct NurbsPatch {
    pub kvs: Vec<KnotVector>,
    pub n: Vec<usize>,
    pub dim_phys: usize,
    cps: Vec<f64>,
}

/// Geometry evaluation result: point, Jacobian and (optionally) second
/// parametric derivatives per physical component.
#[derive(Debug, Clone)]
pub struct GeomEval {
    pub x: Vec<f64>,
    /// dim_phys x pdim matrix d x / d xi.
    pub jac: DMatrix<f64>,
    /// One pdim x pdim matrix per physical component; empty unless second
    /// derivatives were requested.
    pub hess: Vec<DMatrix<f64>>,
}

impl NurbsPatch {
    pub fn new(kvs: Vec<KnotVector>, dim_phys: usize, cps: Vec<f64>) -> Result<Self> {
        let n: Vec<usize> = kvs.iter().map(|k| k.n_basis()).collect();
        let total: usize = n.iter().product();
        let ncomp = dim_phys + 1;
        if cps.len() != total * ncomp {
            return Err(Error::Argument(format!(
                "control net size {} does not match basis counts {:?} x {}",
                cps.len(),
                n,
                ncomp
            )));
        }
        for i in 0..total {
            let w = cps[i * ncomp + dim_phys];
            if !(w > 0.0) {
                return Err(Error::Argument(format!(
                    "non-positive weight {w} at control point {i}"
                )));
            }
        }
        Ok(Self {
            kvs,
            n,
            dim_phys,
            cps,
        })
    }

    /// Patch from plain (non-rational) control point coordinates, weight 1.
    pub fn from_bspline(kvs: Vec<KnotVector>, dim_phys: usize, points: &[f64]) -> Result<Self> {
        let total: usize = kvs.iter().map(|k| k.n_basis()).product();
        if points.len() != total * dim_phys {
            return Err(Error::Argument(format!(
                "expected {} coordinates, got {}",
                total * dim_phys,
                points.len()
            )));
        }
        let mut cps = Vec::with_capacity(total * (dim_phys + 1));
        for i in 0..total {
            cps.extend_from_slice(&points[i * dim_phys..(i + 1) * dim_phys]);
            cps.push(1.0);
        }
        Self::new(kvs, dim_phys, cps)
    }

    pub fn pdim(&self) -> usize {
        self.kvs.len()
    }

    pub fn ncomp(&self) -> usize {
        self.dim_phys + 1
    }

    pub fn ncp(&self) -> usize {
        self.n.iter().product()
    }

    /// Flat index of a control point from its per-direction indices.
    pub fn grid_index(&self, idx: &[usize]) -> usize {
        let mut flat = 0;
        let mut stride = 1;
        for (d, &i) in idx.iter().enumerate() {
            debug_assert!(i < self.n[d]);
            flat += i * stride;
            stride *= self.n[d];
        }
        flat
    }

    /// Per-direction indices from a flat control point index.
    pub fn grid_multi_index(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.pdim()];
        for d in 0..self.pdim() {
            idx[d] = flat % self.n[d];
            flat /= self.n[d];
        }
        idx
    }

    /// Homogeneous components of control point `flat`.
    pub fn cp(&self, flat: usize) -> &[f64] {
        let c = self.ncomp();
        &self.cps[flat * c..(flat + 1) * c]
    }

    pub fn cp_mut(&mut self, flat: usize) -> &mut [f64] {
        let c = self.ncomp();
        &mut self.cps[flat * c..(flat + 1) * c]
    }

    pub fn weight(&self, flat: usize) -> f64 {
        self.cp(flat)[self.dim_phys]
    }

    /// Physical coordinates of control point `flat`.
    pub fn physical_point(&self, flat: usize) -> Vec<f64> {
        let cp = self.cp(flat);
        let w = cp[self.dim_phys];
        cp[..self.dim_phys].iter().map(|&v| v / w).collect()
    }

    pub fn set_physical_point(&mut self, flat: usize, x: &[f64]) {
        let d = self.dim_phys;
        let cp = self.cp_mut(flat);
        let w = cp[d];
        for c in 0..d {
            cp[c] = w * x[c];
        }
    }

    /// Point and Jacobian of the rational map.
    pub fn eval_geometry(&self, xi: &[f64]) -> Result<(Vec<f64>, DMatrix<f64>)> {
        let g = self.eval_geometry_full(xi, 1)?;
        Ok((g.x, g.jac))
    }

    /// Point, Jacobian, and optionally second derivatives (order = 2).
    pub fn eval_geometry_full(&self, xi: &[f64], order: usize) -> Result<GeomEval> {
        let pdim = self.pdim();
        if xi.len() != pdim {
            return Err(Error::Argument(format!(
                "expected {pdim} parametric coordinates, got {}",
                xi.len()
            )));
        }
        let order = order.min(2);
        let evals: Vec<BasisEval> = self
            .kvs
            .iter()
            .zip(xi)
            .map(|(kv, &x)| eval_basis_ders(kv, x, order.min(kv.p)))
            .collect::<Result<_>>()?;
        // Degree-1 directions cannot supply second derivatives; they are zero.
        let der_of = |d: usize, k: usize, j: usize| -> f64 {
            if k >= evals[d].ders.len() {
                0.0
            } else {
                evals[d].ders[k][j]
            }
        };

        let ncomp = self.ncomp();
        let m = self.dim_phys;
        let mut a0 = vec![0.0; ncomp];
        let mut a1 = vec![vec![0.0; ncomp]; pdim];
        let mut a2 = vec![vec![vec![0.0; ncomp]; pdim]; pdim];

        let psz: Vec<usize> = self.kvs.iter().map(|k| k.p + 1).collect();
        let nloc: usize = psz.iter().product();
        let mut jloc = vec![0usize; pdim];
        for local in 0..nloc {
            let mut rem = local;
            for d in 0..pdim {
                jloc[d] = rem % psz[d];
                rem /= psz[d];
            }
            let mut gidx = vec![0usize; pdim];
            for d in 0..pdim {
                gidx[d] = evals[d].span - self.kvs[d].p + jloc[d];
            }
            let cp = self.cp(self.grid_index(&gidx));

            let mut b = 1.0;
            for d in 0..pdim {
                b *= der_of(d, 0, jloc[d]);
            }
            for c in 0..ncomp {
                a0[c] += b * cp[c];
            }
            if order >= 1 {
                for i in 0..pdim {
                    let mut bi = 1.0;
                    for d in 0..pdim {
                        bi *= der_of(d, usize::from(d == i), jloc[d]);
                    }
                    for c in 0..ncomp {
                        a1[i][c] += bi * cp[c];
                    }
                }
            }
            if order >= 2 {
                for i in 0..pdim {
                    for j in i..pdim {
                        let mut bij = 1.0;
                        for d in 0..pdim {
                            let k = usize::from(d == i) + usize::from(d == j);
                            bij *= der_of(d, k, jloc[d]);
                        }
                        for c in 0..ncomp {
                            a2[i][j][c] += bij * cp[c];
                        }
                    }
                }
            }
        }

        let w = a0[m];
        if !(w > 0.0) {
            return Err(Error::Argument(format!(
                "non-positive rational weight {w} at {xi:?}"
            )));
        }
        let x: Vec<f64> = (0..m).map(|c| a0[c] / w).collect();
        let mut jac = DMatrix::zeros(m, pdim);
        if order >= 1 {
            for i in 0..pdim {
                let wi = a1[i][m];
                for c in 0..m {
                    jac[(c, i)] = (a1[i][c] - x[c] * wi) / w;
                }
            }
        }
        let mut hess = Vec::new();
        if order >= 2 {
            for c in 0..m {
                let mut h = DMatrix::zeros(pdim, pdim);
                for i in 0..pdim {
                    for j in i..pdim {
                        let wij = a2[i][j][m];
                        let v = (a2[i][j][c]
                            - jac[(c, i)] * a1[j][m]
                            - jac[(c, j)] * a1[i][m]
                            - x[c] * wij)
                            / w;
                        h[(i, j)] = v;
                        h[(j, i)] = v;
                    }
                }
                hess.push(h);
            }
        }
        Ok(GeomEval { x, jac, hess })
    }

    /// Insert knots along one parametric direction; the mapped geometry is
    /// unchanged.
    pub fn refine_knots(&self, dir: usize, new_knots: &[f64]) -> Result<NurbsPatch> {
        if dir >= self.pdim() {
            return Err(Error::Argument(format!(
                "direction {dir} out of range for {}-d patch",
                self.pdim()
            )));
        }
        if new_knots.is_empty() {
            return Ok(self.clone());
        }
        let (lo, hi) = self.kvs[dir].domain();
        for &u in new_knots {
            if !(u > lo && u < hi) {
                return Err(Error::Argument(format!(
                    "knot {u} outside open domain ({lo}, {hi})"
                )));
            }
        }
        let mut sorted = new_knots.to_vec();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());

        let mut out = self.clone();
        for &u in &sorted {
            out = out.insert_single_knot(dir, u)?;
        }
        Ok(out)
    }

    fn insert_single_knot(&self, dir: usize, u: f64) -> Result<NurbsPatch> {
        let kv = &self.kvs[dir];
        let p = kv.p;
        let k = kv.find_span(u)?;
        let nb = kv.n_basis();
        let ncomp = self.ncomp();

        let mult = kv.knots.iter().filter(|&&t| t == u).count();
        if mult >= p {
            return Err(Error::Argument(format!(
                "knot {u} already has multiplicity {mult}; inserting again would break continuity"
            )));
        }

        let mut alphas = vec![0.0; nb + 1];
        for i in (k + 1 - p)..=k {
            alphas[i] = (u - kv.knots[i]) / (kv.knots[i + p] - kv.knots[i]);
        }

        let mut new_knots = kv.knots.clone();
        new_knots.insert(k + 1, u);
        let new_kv = KnotVector::new(p, new_knots)?;

        let mut new_n = self.n.clone();
        new_n[dir] = nb + 1;
        let new_total: usize = new_n.iter().product();
        let mut new_cps = vec![0.0; new_total * ncomp];

        // Strides of the new grid.
        let mut idx = vec![0usize; self.pdim()];
        for flat_new in 0..new_total {
            let mut rem = flat_new;
            for d in 0..self.pdim() {
                idx[d] = rem % new_n[d];
                rem /= new_n[d];
            }
            let i = idx[dir];
            let dst = &mut new_cps[flat_new * ncomp..(flat_new + 1) * ncomp];
            if i + p <= k {
                // Q[i] = P[i]
                let mut src_idx = idx.clone();
                src_idx[dir] = i;
                let src = self.cp(self.grid_index(&src_idx));
                dst.copy_from_slice(src);
            } else if i >= k + 1 {
                // Q[i] = P[i-1]
                let mut src_idx = idx.clone();
                src_idx[dir] = i - 1;
                let src = self.cp(self.grid_index(&src_idx));
                dst.copy_from_slice(src);
            } else {
                let a = alphas[i];
                let mut hi_idx = idx.clone();
                hi_idx[dir] = i;
                let mut lo_idx = idx.clone();
                lo_idx[dir] = i - 1;
                let src_hi = self.cp(self.grid_index(&hi_idx));
                let src_lo = self.cp(self.grid_index(&lo_idx));
                for c in 0..ncomp {
                    dst[c] = a * src_hi[c] + (1.0 - a) * src_lo[c];
                }
            }
        }

        let mut kvs = self.kvs.clone();
        kvs[dir] = new_kv;
        NurbsPatch::new(kvs, self.dim_phys, new_cps)
    }

    /// Bisect every nonempty span along the given direction.
    pub fn bisect_direction(&self, dir: usize) -> Result<NurbsPatch> {
        let mids = self.kvs[dir].span_midpoints();
        self.refine_knots(dir, &mids)
    }

    /// Patch traversed in the opposite direction along `dir`; geometry is the
    /// same with xi_dir replaced by (lo + hi - xi_dir).
    pub fn reversed(&self, dir: usize) -> NurbsPatch {
        let kv = &self.kvs[dir];
        let (lo, hi) = (kv.knots[0], *kv.knots.last().unwrap());
        let mut knots: Vec<f64> = kv.knots.iter().rev().map(|&t| lo + hi - t).collect();
        // Guard against -0.0 artifacts.
        for t in &mut knots {
            if *t == 0.0 {
                *t = 0.0;
            }
        }
        let new_kv = KnotVector::new(kv.p, knots).expect("reversal keeps validity");

        let ncomp = self.ncomp();
        let total = self.ncp();
        let mut new_cps = vec![0.0; total * ncomp];
        let mut idx = vec![0usize; self.pdim()];
        for flat in 0..total {
            let mut rem = flat;
            for d in 0..self.pdim() {
                idx[d] = rem % self.n[d];
                rem /= self.n[d];
            }
            let mut src_idx = idx.clone();
            src_idx[dir] = self.n[dir] - 1 - idx[dir];
            let src = self.cp(self.grid_index(&src_idx));
            new_cps[flat * ncomp..(flat + 1) * ncomp].copy_from_slice(src);
        }
        let mut kvs = self.kvs.clone();
        kvs[dir] = new_kv;
        NurbsPatch::new(kvs, self.dim_phys, new_cps).expect("reversal keeps validity")
    }
}
