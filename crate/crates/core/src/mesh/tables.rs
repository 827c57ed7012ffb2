use crate::nurbs::{eval_basis_ders, KnotVector, NurbsPatch};
use crate::quadrature::gauss_legendre;
use crate::Result;

/// Basis values at the quadrature points of one knot span. Derivatives are
/// with respect to the global parameter; layout is `q * (p + 1) + j`.
#[derive(Debug, Clone)]
pub struct SpanQuad {
    pub span: usize,
    /// First global basis index with support on this span.
    pub first: usize,
    /// Global parametric coordinates of the quadrature points.
    pub xi: Vec<f64>,
    /// Quadrature weight times the span width.
    pub wdx: Vec<f64>,
    pub width: f64,
    pub val: Vec<f64>,
    pub d1: Vec<f64>,
    pub d2: Vec<f64>,
}

/// Per-direction table of span quadrature data.
#[derive(Debug, Clone)]
pub struct DirTable {
    pub p: usize,
    pub nq: usize,
    pub spans: Vec<SpanQuad>,
}

pub fn build_dir_table(kv: &KnotVector, nq: usize) -> Result<DirTable> {
    let rule = gauss_legendre(nq);
    let p = kv.p;
    let nders = 2.min(p);
    let mut spans = Vec::new();
    for (span, a, b) in kv.spans() {
        let width = b - a;
        let mut xi = Vec::with_capacity(nq);
        let mut wdx = Vec::with_capacity(nq);
        let mut val = Vec::with_capacity(nq * (p + 1));
        let mut d1 = Vec::with_capacity(nq * (p + 1));
        let mut d2 = Vec::with_capacity(nq * (p + 1));
        for (&node, &w) in rule.nodes.iter().zip(&rule.weights) {
            let x = a + node * width;
            let basis = eval_basis_ders(kv, x, nders)?;
            debug_assert_eq!(basis.span, span);
            xi.push(x);
            wdx.push(w * width);
            for j in 0..=p {
                val.push(basis.ders[0][j]);
                d1.push(basis.ders[1][j]);
                d2.push(if nders >= 2 { basis.ders[2][j] } else { 0.0 });
            }
        }
        spans.push(SpanQuad {
            span,
            first: span - p,
            xi,
            wdx,
            width,
            val,
            d1,
            d2,
        });
    }
    Ok(DirTable { p, nq, spans })
}

impl DirTable {
    /// Span table by span index (spans are stored in knot order).
    pub fn by_span(&self, span: usize) -> &SpanQuad {
        let first = self.spans[0].span;
        &self.spans[span - first]
    }
}

/// Basis values at one end of the parametric domain (for boundary faces).
#[derive(Debug, Clone)]
pub struct BoundaryBasis {
    pub first: usize,
    pub val: Vec<f64>,
    pub d1: Vec<f64>,
    pub d2: Vec<f64>,
}

pub fn dir_boundary(kv: &KnotVector, end: usize) -> Result<BoundaryBasis> {
    let (lo, hi) = kv.domain();
    let x = if end == 0 { lo } else { hi };
    let nders = 2.min(kv.p);
    let basis = eval_basis_ders(kv, x, nders)?;
    let p = kv.p;
    Ok(BoundaryBasis {
        first: basis.span - p,
        val: basis.ders[0].clone(),
        d1: basis.ders[1].clone(),
        d2: if nders >= 2 {
            basis.ders[2].clone()
        } else {
            vec![0.0; p + 1]
        },
    })
}

/// All per-direction tables of one patch.
#[derive(Debug, Clone)]
pub struct PatchTables {
    pub dirs: Vec<DirTable>,
    pub bounds: Vec<[BoundaryBasis; 2]>,
}

/// Build tables with p + 1 quadrature points per direction (plus extra).
pub fn build_patch_tables(patch: &NurbsPatch, extra_q: usize) -> Result<PatchTables> {
    let mut dirs = Vec::with_capacity(patch.kvs.len());
    let mut bounds = Vec::with_capacity(patch.kvs.len());
    for kv in &patch.kvs {
        dirs.push(build_dir_table(kv, kv.p + 1 + extra_q)?);
        bounds.push([dir_boundary(kv, 0)?, dir_boundary(kv, 1)?]);
    }
    Ok(PatchTables { dirs, bounds })
}

/// Tensor-product Gauss rule on the unit cube of the given dimension.
#[derive(Debug, Clone)]
pub struct TensorRule {
    pub points: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

pub fn tensor_rule(pts: &[usize]) -> TensorRule {
    let rules: Vec<_> = pts.iter().map(|&n| gauss_legendre(n)).collect();
    let total: usize = pts.iter().product();
    let mut points = Vec::with_capacity(total);
    let mut weights = Vec::with_capacity(total);
    let dim = pts.len();
    let mut idx = vec![0usize; dim];
    for _ in 0..total {
        let mut pt = Vec::with_capacity(dim);
        let mut w = 1.0;
        for d in 0..dim {
            pt.push(rules[d].nodes[idx[d]]);
            w *= rules[d].weights[idx[d]];
        }
        points.push(pt);
        weights.push(w);
        for d in 0..dim {
            idx[d] += 1;
            if idx[d] < pts[d] {
                break;
            }
            idx[d] = 0;
        }
    }
    TensorRule { points, weights }
}
