use crate::{Error, Result};
use nalgebra::{Matrix2, Matrix3, Vector3};

/// Element metric tensors used by the stabilization parameters.
#[derive(Debug, Clone)]
pub struct MetricPair {
    /// Space-time inverse metric on element-local coordinates, with the
    /// temporal direction weighted by the velocity scale s.
    pub g_hat: Matrix3<f64>,
    /// Spatial inverse metric (fixed-time slice).
    pub g_sp: Matrix2<f64>,
    pub tr_g: f64,
    /// Double contraction G : G.
    pub g_dd: f64,
    /// Determinant of the global-parameter space-time Jacobian, for the
    /// quadrature measure.
    pub det_jst: f64,
}

/// Metrics from the space-time Jacobian (columns: global parametric
/// directions; third physical coordinate tau = s * t). `dxi` holds the knot
/// span widths that rescale global parameters to the element-local [0,1]^3.
pub fn compute_metrics(
    jst: &Matrix3<f64>,
    dxi: [f64; 3],
    s: f64,
    element: usize,
) -> Result<MetricPair> {
    let mut jloc = *jst;
    for c in 0..3 {
        for r in 0..3 {
            jloc[(r, c)] *= dxi[c];
        }
    }
    let det_jst = jst.determinant();
    let scale = jst.abs().max().powi(3).max(f64::MIN_POSITIVE);
    if det_jst.abs() < 1e-13 * scale {
        return Err(Error::Geometry {
            element,
            detail: format!("singular space-time Jacobian, det {det_jst:e}"),
        });
    }
    let jinv = jloc.try_inverse().ok_or(Error::Geometry {
        element,
        detail: "space-time Jacobian not invertible".into(),
    })?;

    // Rows of D are gradients of the local parameters with respect to
    // physical (x, y, t); the tau column converts by d tau = s dt.
    let mut d = jinv;
    for k in 0..3 {
        d[(k, 2)] *= s;
    }
    let gs = Vector3::new(1.0, 1.0, s * s);
    let mut g_hat = Matrix3::zeros();
    for i in 0..3 {
        for j in 0..3 {
            let mut v = 0.0;
            for k in 0..3 {
                v += gs[k] * d[(k, i)] * d[(k, j)];
            }
            g_hat[(i, j)] = v;
        }
    }

    let ksp = Matrix2::new(jloc[(0, 0)], jloc[(0, 1)], jloc[(1, 0)], jloc[(1, 1)]);
    let kinv = ksp.try_inverse().ok_or(Error::Geometry {
        element,
        detail: "singular spatial slice of the Jacobian".into(),
    })?;
    let g_sp = kinv.transpose() * kinv;
    let tr_g = g_sp.trace();
    let g_dd = g_sp.iter().map(|v| v * v).sum();

    Ok(MetricPair {
        g_hat,
        g_sp,
        tr_g,
        g_dd,
        det_jst,
    })
}

/// Geometry of one boundary face point: spatial unit normal, normal velocity
/// of the boundary, and the measure factor that turns the local quadrature
/// weight into surface area x time.
#[derive(Debug, Clone)]
pub struct BoundaryNormal {
    /// Unit outward spatial normal.
    pub n_sp: [f64; 2],
    /// Normal velocity of the boundary itself (moving wall speed).
    pub v_n: f64,
    /// d(Gamma) dt per unit global parametric face area.
    pub gamma_dt: f64,
    /// Raw outward cofactor normal of the space-time surface.
    pub n_cof: [f64; 3],
}

/// Outward cofactor normal for the face xi_dir = end of an element with
/// positively oriented Jacobian.
pub fn boundary_normal(jst: &Matrix3<f64>, dir: usize, end: usize, s: f64) -> Result<BoundaryNormal> {
    if dir > 2 {
        return Err(Error::Argument(format!("face direction {dir} out of range")));
    }
    // Cofactor column: cross product of the two other Jacobian columns in
    // cyclic order, so that jst_col(dir) . cof = det(jst) > 0.
    let a = jst.column((dir + 1) % 3).into_owned();
    let b = jst.column((dir + 2) % 3).into_owned();
    let mut n = a.cross(&b);
    if end == 0 {
        n = -n;
    }
    let n_xy = (n[0] * n[0] + n[1] * n[1]).sqrt();
    let norm = n.norm();
    if norm == 0.0 {
        return Err(Error::Geometry {
            element: 0,
            detail: "degenerate boundary face".into(),
        });
    }
    if n_xy < 1e-12 * norm {
        return Err(Error::Structure(
            "purely temporal face has no spatial normal".into(),
        ));
    }
    Ok(BoundaryNormal {
        n_sp: [n[0] / n_xy, n[1] / n_xy],
        v_n: -s * n[2] / n_xy,
        gamma_dt: n_xy / s,
        n_cof: [n[0], n[1], n[2]],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn axis_aligned_box_metrics() {
        // One element spanning h x h x dt.
        let h = 0.25;
        let dt = 0.1;
        let jst = Matrix3::from_diagonal(&Vector3::new(h, h, dt));
        let m = compute_metrics(&jst, [1.0, 1.0, 1.0], 1.0, 0).unwrap();
        assert_relative_eq!(m.g_sp[(0, 0)], 1.0 / (h * h), epsilon = 1e-14);
        assert_relative_eq!(m.g_sp[(1, 1)], 1.0 / (h * h), epsilon = 1e-14);
        assert_eq!(m.g_sp[(0, 1)], 0.0);
        assert_relative_eq!(m.tr_g, 2.0 / (h * h), epsilon = 1e-12);
        assert_relative_eq!(m.g_dd, 2.0 / (h * h * h * h), epsilon = 1e-9);
        assert_relative_eq!(m.g_hat[(0, 0)], 1.0 / (h * h), epsilon = 1e-12);
        assert_relative_eq!(m.g_hat[(2, 2)], 1.0 / (dt * dt), epsilon = 1e-12);
        for (i, j) in [(0, 1), (0, 2), (1, 2)] {
            assert!(m.g_hat[(i, j)].abs() < 1e-14);
        }
    }

    #[test]
    fn span_widths_refine_the_metric() {
        // Global map is the identity box, but the element covers half a span
        // in each direction; the metric must see the smaller element.
        let jst = Matrix3::identity();
        let m = compute_metrics(&jst, [0.5, 0.25, 0.5], 1.0, 0).unwrap();
        assert_relative_eq!(m.g_sp[(0, 0)], 4.0, epsilon = 1e-14);
        assert_relative_eq!(m.g_sp[(1, 1)], 16.0, epsilon = 1e-14);
        assert_relative_eq!(m.g_hat[(2, 2)], 4.0, epsilon = 1e-14);
    }

    #[test]
    fn rigid_slab_reduces_to_spatial_metric_plus_time() {
        // Extruded Jacobian with spatial shear and zero mesh motion.
        let jst = Matrix3::new(0.3, 0.05, 0.0, 0.02, 0.4, 0.0, 0.0, 0.0, 0.2);
        let s = 1.0;
        let m = compute_metrics(&jst, [1.0, 1.0, 1.0], s, 0).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert_relative_eq!(m.g_hat[(i, j)], m.g_sp[(i, j)], epsilon = 1e-12);
            }
            assert!(m.g_hat[(i, 2)].abs() < 1e-13);
        }
        assert_relative_eq!(m.g_hat[(2, 2)], 1.0 / (0.2 * 0.2), epsilon = 1e-12);
    }

    #[test]
    fn scaled_time_rigid_reduction() {
        // tau = s t over a rigid extrusion: the spatial block equals the
        // fixed-time metric, cross terms vanish, and the temporal entry
        // carries the s^2 weight.
        let s = 3.0;
        let dt = 0.2;
        let jst = Matrix3::new(0.3, 0.05, 0.0, 0.02, 0.4, 0.0, 0.0, 0.0, s * dt);
        let m = compute_metrics(&jst, [1.0, 1.0, 1.0], s, 0).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert_relative_eq!(m.g_hat[(i, j)], m.g_sp[(i, j)], epsilon = 1e-12);
            }
            assert!(m.g_hat[(i, 2)].abs() < 1e-13);
        }
        assert_relative_eq!(m.g_hat[(2, 2)], s * s / (dt * dt), epsilon = 1e-10);
    }

    #[test]
    fn sheared_metric_matches_reference_algebra() {
        // Independent route: build A = d(xi)/d(x, y, t) by inverting the
        // plain-time Jacobian, then G_hat = A^T diag(1, 1, s^2) A.
        let s = 2.0;
        let jst = Matrix3::new(0.31, 0.07, 0.12, -0.04, 0.44, 0.3, 0.0, 0.0, 0.5 * s);
        let dxi = [0.5, 0.5, 0.25];
        let m = compute_metrics(&jst, dxi, s, 0).unwrap();

        let mut jt = jst;
        for c in 0..3 {
            for r in 0..3 {
                jt[(r, c)] *= dxi[c];
            }
            jt[(2, c)] /= s; // physical time row
        }
        let a = jt.try_inverse().unwrap();
        let w = Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, s * s));
        let reference = a.transpose() * w * a;
        for i in 0..3 {
            for j in 0..3 {
                assert_relative_eq!(m.g_hat[(i, j)], reference[(i, j)], epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn singular_jacobian_reports_element() {
        let jst = Matrix3::new(1.0, 2.0, 0.0, 2.0, 4.0, 0.0, 0.0, 0.0, 1.0);
        match compute_metrics(&jst, [1.0, 1.0, 1.0], 1.0, 7) {
            Err(Error::Geometry { element, .. }) => assert_eq!(element, 7),
            other => panic!("expected geometry error, got {other:?}"),
        }
    }

    #[test]
    fn stationary_face_normal() {
        let jst = Matrix3::from_diagonal(&Vector3::new(0.5, 0.5, 2.0));
        let n = boundary_normal(&jst, 0, 1, 1.0).unwrap();
        assert_relative_eq!(n.n_sp[0], 1.0, epsilon = 1e-14);
        assert_relative_eq!(n.n_sp[1], 0.0, epsilon = 1e-14);
        assert_relative_eq!(n.v_n, 0.0, epsilon = 1e-14);
        assert_relative_eq!(n.gamma_dt, 1.0, epsilon = 1e-14);
        let n0 = boundary_normal(&jst, 0, 0, 1.0).unwrap();
        assert_relative_eq!(n0.n_sp[0], -1.0, epsilon = 1e-14);
    }

    #[test]
    fn heaving_face_normal_velocity() {
        // Bottom face of a box heaving upward at rate hdot: x = xi0,
        // y = xi1 + h(t), tau = T xi2 with s = 1.
        let t_ext = 8.0;
        let hdot = 0.3;
        let jst = Matrix3::new(1.0, 0.0, 0.0, 0.0, 1.0, hdot * t_ext, 0.0, 0.0, t_ext);
        let n = boundary_normal(&jst, 1, 0, 1.0).unwrap();
        assert_relative_eq!(n.n_sp[0], 0.0, epsilon = 1e-14);
        assert_relative_eq!(n.n_sp[1], -1.0, epsilon = 1e-14);
        // Upward wall motion means the lower boundary recedes: v_n = -hdot.
        assert_relative_eq!(n.v_n, -hdot, epsilon = 1e-13);
        assert_relative_eq!(n.gamma_dt, t_ext, epsilon = 1e-13);
        // Top face advances: v_n = +hdot against n = (0, 1).
        let top = boundary_normal(&jst, 1, 1, 1.0).unwrap();
        assert_relative_eq!(top.n_sp[1], 1.0, epsilon = 1e-14);
        assert_relative_eq!(top.v_n, hdot, epsilon = 1e-13);
    }

    #[test]
    fn scaled_time_normal_velocity() {
        // Same heave but tau = s t: v_n must stay the physical rate.
        let s = 2.0;
        let t_ext = 8.0;
        let hdot = 0.3;
        let jst = Matrix3::new(
            1.0,
            0.0,
            0.0,
            0.0,
            1.0,
            hdot * t_ext,
            0.0,
            0.0,
            s * t_ext,
        );
        let n = boundary_normal(&jst, 1, 1, s).unwrap();
        assert_relative_eq!(n.v_n, hdot, epsilon = 1e-13);
        assert_relative_eq!(n.gamma_dt, t_ext, epsilon = 1e-13);
    }

    #[test]
    fn temporal_cap_has_no_spatial_normal() {
        let jst = Matrix3::identity();
        match boundary_normal(&jst, 2, 1, 1.0) {
            Err(Error::Structure(_)) => {}
            other => panic!("expected structure error, got {other:?}"),
        }
    }
}
