use super::KnotVector;
use crate::{Error, Result};

/// Nonzero B-spline basis values and parametric derivatives at one parameter.
///
/// `ders[k][j]` is the k-th derivative of basis function `span - p + j`.
/// `ders[0]` are the values themselves.
#[derive(Debug, Clone)]
pub struct BasisEval {
    pub span: usize,
    pub ders: Vec<Vec<f64>>,
}

impl BasisEval {
    pub fn values(&self) -> &[f64] {
        &self.ders[0]
    }

    /// Global index of local basis function j.
    pub fn global_index(&self, p: usize, j: usize) -> usize {
        self.span - p + j
    }
}

/// Values and derivatives up to order `nders` of the p+1 basis functions that
/// are nonzero at `xi`.
pub fn eval_basis_ders(kv: &KnotVector, xi: f64, nders: usize) -> Result<BasisEval> {
    let p = kv.p;
    if nders > p {
        return Err(Error::Argument(format!(
            "derivative order {nders} exceeds degree {p}"
        )));
    }
    let span = kv.find_span(xi)?;
    let (lo, hi) = kv.domain();
    let xi = xi.clamp(lo, hi);
    let u = &kv.knots;

    // Basis-function triangle with knot differences kept for derivatives.
    let mut ndu = vec![vec![0.0; p + 1]; p + 1];
    let mut left = vec![0.0; p + 1];
    let mut right = vec![0.0; p + 1];
    ndu[0][0] = 1.0;
    for j in 1..=p {
        left[j] = xi - u[span + 1 - j];
        right[j] = u[span + j] - xi;
        let mut saved = 0.0;
        for r in 0..j {
            ndu[j][r] = right[r + 1] + left[j - r];
            let temp = ndu[r][j - 1] / ndu[j][r];
            ndu[r][j] = saved + right[r + 1] * temp;
            saved = left[j - r] * temp;
        }
        ndu[j][j] = saved;
    }

    let mut ders = vec![vec![0.0; p + 1]; nders + 1];
    for j in 0..=p {
        ders[0][j] = ndu[j][p];
    }

    let mut a = vec![vec![0.0; p + 1]; 2];
    for r in 0..=p {
        let mut s1 = 0usize;
        let mut s2 = 1usize;
        a[0][0] = 1.0;
        for k in 1..=nders {
            let mut d = 0.0;
            let rk = r as isize - k as isize;
            let pk = p - k;
            if r >= k {
                a[s2][0] = a[s1][0] / ndu[pk + 1][rk as usize];
                d = a[s2][0] * ndu[rk as usize][pk];
            }
            let j1 = if rk >= -1 { 1 } else { (-rk) as usize };
            let j2 = if r as isize - 1 <= pk as isize {
                k - 1
            } else {
                p - r
            };
            for j in j1..=j2 {
                a[s2][j] =
                    (a[s1][j] - a[s1][j - 1]) / ndu[pk + 1][(rk + j as isize) as usize];
                d += a[s2][j] * ndu[(rk + j as isize) as usize][pk];
            }
            if r <= pk {
                a[s2][k] = -a[s1][k - 1] / ndu[pk + 1][r];
                d += a[s2][k] * ndu[r][pk];
            }
            ders[k][r] = d;
            std::mem::swap(&mut s1, &mut s2);
        }
    }

    let mut factor = p as f64;
    for k in 1..=nders {
        for j in 0..=p {
            ders[k][j] *= factor;
        }
        factor *= (p - k) as f64;
    }

    Ok(BasisEval { span, ders })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_bernstein_at_midpoint() {
        let kv = KnotVector::new(2, vec![0., 0., 0., 1., 1., 1.]).unwrap();
        let b = eval_basis_ders(&kv, 0.5, 0).unwrap();
        let expect = [0.25, 0.5, 0.25];
        for (v, e) in b.values().iter().zip(expect.iter()) {
            assert!((v - e).abs() < 1e-15);
        }
    }

    #[test]
    fn linear_hats() {
        let kv = KnotVector::new(1, vec![0., 0., 1., 1.]).unwrap();
        let b = eval_basis_ders(&kv, 0.3, 1).unwrap();
        assert!((b.ders[0][0] - 0.7).abs() < 1e-15);
        assert!((b.ders[0][1] - 0.3).abs() < 1e-15);
        assert!((b.ders[1][0] + 1.0).abs() < 1e-15);
        assert!((b.ders[1][1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_order_above_degree() {
        let kv = KnotVector::new(2, vec![0., 0., 0., 1., 1., 1.]).unwrap();
        assert!(eval_basis_ders(&kv, 0.5, 3).is_err());
    }

    #[test]
    fn second_derivatives_of_single_span_quadratic() {
        // Bernstein: N = [(1-x)^2, 2x(1-x), x^2] so N'' = [2, -4, 2].
        let kv = KnotVector::new(2, vec![0., 0., 0., 1., 1., 1.]).unwrap();
        let b = eval_basis_ders(&kv, 0.37, 2).unwrap();
        let expect = [2.0, -4.0, 2.0];
        for (v, e) in b.ders[2].iter().zip(expect.iter()) {
            assert!((v - e).abs() < 1e-12);
        }
    }

    #[test]
    fn partition_of_unity_and_derivative_sums() {
        let kv = KnotVector::uniform_open(3, 7).unwrap();
        for i in 0..=1000 {
            let xi = i as f64 / 1000.0;
            let b = eval_basis_ders(&kv, xi, 2).unwrap();
            let s0: f64 = b.ders[0].iter().sum();
            let s1: f64 = b.ders[1].iter().sum();
            let s2: f64 = b.ders[2].iter().sum();
            assert!((s0 - 1.0).abs() < 1e-12);
            assert!(s1.abs() < 1e-10);
            assert!(s2.abs() < 1e-8);
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let kv = KnotVector::uniform_open(2, 5).unwrap();
        let h = 1e-6;
        for &xi in &[0.13, 0.45, 0.63, 0.9] {
            let b = eval_basis_ders(&kv, xi, 1).unwrap();
            let bp = eval_basis_ders(&kv, xi + h, 0).unwrap();
            let bm = eval_basis_ders(&kv, xi - h, 0).unwrap();
            assert_eq!(bp.span, bm.span);
            assert_eq!(bp.span, b.span);
            for j in 0..=2 {
                let fd = (bp.ders[0][j] - bm.ders[0][j]) / (2.0 * h);
                assert!((b.ders[1][j] - fd).abs() < 1e-6);
            }
        }
    }
}
