use super::{eval_basis_ders, KnotVector, NurbsPatch};
use crate::{Error, Result};
use nalgebra::DMatrix;

/// Interpolating B-spline curve on a prescribed knot vector: solves the
/// collocation system N(params) * c = points.
///
/// The number of parameters must equal the number of basis functions of `kv`.
pub fn interpolate_with_kv(
    kv: &KnotVector,
    params: &[f64],
    points: &[Vec<f64>],
) -> Result<NurbsPatch> {
    let n = kv.n_basis();
    if params.len() != n || points.len() != n {
        return Err(Error::Argument(format!(
            "need exactly {n} parameters and points, got {} and {}",
            params.len(),
            points.len()
        )));
    }
    if params.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Argument("parameters must be strictly increasing".into()));
    }
    let dim = points[0].len();
    if points.iter().any(|p| p.len() != dim) {
        return Err(Error::Argument("points must share one dimension".into()));
    }

    let mut a = DMatrix::zeros(n, n);
    for (row, &t) in params.iter().enumerate() {
        let b = eval_basis_ders(kv, t, 0)?;
        for (j, &v) in b.values().iter().enumerate() {
            a[(row, b.global_index(kv.p, j))] = v;
        }
    }
    let mut rhs = DMatrix::zeros(n, dim);
    for (i, p) in points.iter().enumerate() {
        for c in 0..dim {
            rhs[(i, c)] = p[c];
        }
    }
    let lu = a.clone().lu();
    let sol = lu
        .solve(&rhs)
        .ok_or_else(|| Error::Singular("degenerate curve parametrization".into()))?;

    // Residual check guards against near-singular collocation systems that LU
    // still factored.
    let resid = (&a * &sol) - &rhs;
    let scale = rhs.iter().fold(1.0_f64, |m, &v| m.max(v.abs()));
    if resid.iter().any(|&r| r.abs() > 1e-9 * scale) {
        return Err(Error::Singular(
            "curve interpolation residual exceeds tolerance".into(),
        ));
    }

    let mut coords = Vec::with_capacity(n * dim);
    for i in 0..n {
        for c in 0..dim {
            coords.push(sol[(i, c)]);
        }
    }
    NurbsPatch::from_bspline(vec![kv.clone()], dim, &coords)
}

/// Interpolating curve through `points` at `params` with degree `p`.
///
/// The knot vector follows the standard averaging rule; when `params` is
/// None, chord-length parameters are used.
pub fn interpolate_curve(
    points: &[Vec<f64>],
    params: Option<&[f64]>,
    p: usize,
) -> Result<NurbsPatch> {
    let n = points.len();
    if n < p + 1 {
        return Err(Error::Argument(format!(
            "need at least {} points for degree {p}, got {n}",
            p + 1
        )));
    }
    let params: Vec<f64> = match params {
        Some(t) => {
            if t.len() != n {
                return Err(Error::Argument(
                    "parameter count must match point count".into(),
                ));
            }
            t.to_vec()
        }
        None => chord_length_params(points)?,
    };

    // Averaged interior knots keep the collocation matrix well conditioned.
    let mut knots = vec![params[0]; p + 1];
    for j in 1..n - p {
        let avg: f64 = params[j..j + p].iter().sum::<f64>() / p as f64;
        knots.push(avg);
    }
    knots.extend(std::iter::repeat(params[n - 1]).take(p + 1));
    let kv = KnotVector::new(p, knots)?;
    interpolate_with_kv(&kv, &params, points)
}

fn chord_length_params(points: &[Vec<f64>]) -> Result<Vec<f64>> {
    let mut t = vec![0.0; points.len()];
    for i in 1..points.len() {
        let d: f64 = points[i]
            .iter()
            .zip(&points[i - 1])
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt();
        t[i] = t[i - 1] + d;
    }
    let total = t[points.len() - 1];
    if total <= 0.0 {
        return Err(Error::Singular(
            "coincident points give a degenerate parametrization".into(),
        ));
    }
    for v in &mut t {
        *v /= total;
    }
    Ok(t)
}
