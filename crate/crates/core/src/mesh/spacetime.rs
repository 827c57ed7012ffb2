use super::{SideTag, SpatialMesh};
use crate::nurbs::{interpolate_with_kv, KnotVector, NurbsPatch};
use crate::{Error, Result};
use std::collections::HashMap;

/// Rigid-body motion applied to the whole spatial mesh, one transform per
/// temporal control level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MotionKind {
    Stationary,
    /// Vertical translation h(t) = amplitude * sin(2 pi t / period).
    Heave,
    /// Rotation about the pitch axis by alpha(t) = amplitude * sin(2 pi t /
    /// period), positive nose-up.
    Pitch,
}

#[derive(Debug, Clone, Copy)]
pub struct MotionSpec {
    pub kind: MotionKind,
    /// Heave amplitude (length) or pitch amplitude (radians).
    pub amplitude: f64,
    /// Motion period; also the temporal extent of the space-time mesh.
    pub period: f64,
    /// Static angle of attack in radians. Tilts the free stream, not the
    /// mesh; carried here so a case is fully described by mesh + motion.
    pub alpha_static: f64,
}

impl MotionSpec {
    pub fn stationary(period: f64) -> Self {
        MotionSpec {
            kind: MotionKind::Stationary,
            amplitude: 0.0,
            period,
            alpha_static: 0.0,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.period > 0.0 && self.period.is_finite()) {
            return Err(Error::Argument(format!(
                "period must be positive and finite, got {}",
                self.period
            )));
        }
        if !self.amplitude.is_finite() {
            return Err(Error::Argument("motion amplitude must be finite".into()));
        }
        Ok(())
    }
}

/// Boundary-face role in the space-time mesh.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FaceTag {
    /// Moving interior boundary (foil surface x time).
    Wall,
    /// Far-field inflow: velocity prescribed strongly.
    DirichletExterior,
    /// Far-field outflow: traction-free with backflow stabilization.
    NeumannExterior,
    /// Far-field face not yet split into inflow/outflow.
    UnclassifiedExterior,
    /// Bottom temporal cap (t = 0).
    TimeStart,
    /// Top temporal cap (t = T).
    TimeEnd,
}

/// One element of the space-time mesh: a knot-span box of one patch.
#[derive(Debug, Clone)]
pub struct Element {
    pub patch: usize,
    pub spans: [usize; 3],
    pub ranges: [(f64, f64); 3],
}

/// One boundary face of an element (parametric direction + end).
#[derive(Debug, Clone)]
pub struct BoundaryFace {
    pub element: usize,
    pub dir: usize,
    pub end: usize,
    pub tag: FaceTag,
}

/// Periodic space-time mesh: the spatial mesh extruded along time under the
/// prescribed motion. The third physical coordinate is tau = s * t.
#[derive(Debug, Clone)]
pub struct SpaceTimeMesh {
    pub patches: Vec<NurbsPatch>,
    pub spatial: SpatialMesh,
    /// Per patch: local flat control point index -> global space-time index.
    pub cp_map: Vec<Vec<usize>>,
    pub n_global: usize,
    pub n_levels: usize,
    pub kv_t: KnotVector,
    pub s: f64,
    pub period: f64,
    pub motion: MotionSpec,
    pub elements: Vec<Element>,
    pub faces: Vec<BoundaryFace>,
    /// (follower, leader): control point at t=T identified with its t=0 copy.
    pub periodic_pairs: Vec<(usize, usize)>,
}

impl SpaceTimeMesh {
    /// Global space-time control point id from spatial id and temporal level.
    pub fn st_global(&self, spatial_global: usize, level: usize) -> usize {
        level * self.spatial.n_global + spatial_global
    }
}

fn level_transforms(motion: &MotionSpec, kv_t: &KnotVector) -> Result<Vec<[f64; 3]>> {
    // Each transform is (translation y, rotation angle, unused) encoded as
    // [ty, angle, 0]; both channels are spline coefficients interpolating the
    // analytic motion at the Greville abscissae, which keeps the boundary
    // trajectory accurate to the full order of the temporal basis.
    let grev = kv_t.greville_all();
    let n = grev.len();
    let two_pi = 2.0 * std::f64::consts::PI;
    let coeffs = |f: &dyn Fn(f64) -> f64| -> Result<Vec<f64>> {
        let pts: Vec<Vec<f64>> = grev.iter().map(|&g| vec![f(g)]).collect();
        let curve = interpolate_with_kv(kv_t, &grev, &pts)?;
        Ok((0..n).map(|k| curve.physical_point(k)[0]).collect())
    };
    let mut out = vec![[0.0; 3]; n];
    match motion.kind {
        MotionKind::Stationary => {}
        MotionKind::Heave => {
            let a = motion.amplitude;
            let c = coeffs(&|g| a * (two_pi * g).sin())?;
            for (k, t) in out.iter_mut().enumerate() {
                t[0] = c[k];
            }
        }
        MotionKind::Pitch => {
            let a = motion.amplitude;
            let c = coeffs(&|g| a * (two_pi * g).sin())?;
            for (k, t) in out.iter_mut().enumerate() {
                t[1] = c[k];
            }
        }
    }
    let tol = 1e-12 * (1.0 + motion.amplitude.abs());
    let last = n - 1;
    for ch in 0..2 {
        if (out[0][ch] - out[last][ch]).abs() > tol {
            return Err(Error::Periodicity(format!(
                "motion does not close over one period: start {} vs end {}",
                out[0][ch], out[last][ch]
            )));
        }
    }
    // Snap so the first and last temporal levels are bitwise congruent.
    out[last] = out[0];
    Ok(out)
}

fn apply_transform(x: [f64; 2], tr: &[f64; 3], axis: [f64; 2]) -> [f64; 2] {
    let (ty, ang) = (tr[0], tr[1]);
    if ang == 0.0 {
        return [x[0], x[1] + ty];
    }
    // Nose-up positive: rotate by -angle in the usual math orientation.
    let (sa, ca) = ang.sin_cos();
    let dx = x[0] - axis[0];
    let dy = x[1] - axis[1];
    [
        axis[0] + ca * dx + sa * dy,
        axis[1] - sa * dx + ca * dy + ty,
    ]
}

/// Extrude the spatial mesh over one period of the motion.
pub fn build_spacetime_mesh(
    spatial: &SpatialMesh,
    motion: &MotionSpec,
    n_el_t: usize,
    p_t: usize,
    s: f64,
) -> Result<SpaceTimeMesh> {
    motion.validate()?;
    if n_el_t < 2 {
        return Err(Error::Argument(format!(
            "need at least 2 temporal elements, got {n_el_t}"
        )));
    }
    if p_t < 1 || p_t > 3 {
        return Err(Error::Argument(format!(
            "temporal degree {p_t} unsupported (1..=3)"
        )));
    }
    if !(s > 0.0) {
        return Err(Error::Argument("space-time velocity scale must be positive".into()));
    }

    let kv_t = KnotVector::uniform_open(p_t, n_el_t)?;
    let grev = kv_t.greville_all();
    let n_levels = grev.len();
    let transforms = level_transforms(motion, &kv_t)?;

    let n_sp = spatial.n_global;
    let mut patches = Vec::with_capacity(spatial.patches.len());
    let mut cp_map = Vec::with_capacity(spatial.patches.len());

    // Transformed coordinates per level for the merged global points, so the
    // same spatial point gets bitwise-identical coordinates in every patch.
    let mut level_coords: Vec<Vec<[f64; 2]>> = Vec::with_capacity(n_levels);
    for k in 0..n_levels {
        if k == n_levels - 1 {
            // Congruent end slices by construction.
            let first = level_coords[0].clone();
            level_coords.push(first);
            continue;
        }
        let coords = spatial
            .global_coords
            .iter()
            .map(|&x| apply_transform(x, &transforms[k], spatial.pitch_axis))
            .collect();
        level_coords.push(coords);
    }

    for (pi, sp_patch) in spatial.patches.iter().enumerate() {
        let n0 = sp_patch.n[0];
        let n1 = sp_patch.n[1];
        let nsp_local = n0 * n1;
        let mut cps = Vec::with_capacity(nsp_local * n_levels * 4);
        let mut map = Vec::with_capacity(nsp_local * n_levels);
        for (k, g) in grev.iter().enumerate() {
            let tau = s * motion.period * g;
            for loc in 0..nsp_local {
                let sp_global = spatial.cp_map[pi][loc];
                let x = level_coords[k][sp_global];
                let w = sp_patch.weight(loc);
                cps.push(w * x[0]);
                cps.push(w * x[1]);
                cps.push(w * tau);
                cps.push(w);
                map.push(k * n_sp + sp_global);
            }
        }
        let kvs = vec![sp_patch.kvs[0].clone(), sp_patch.kvs[1].clone(), kv_t.clone()];
        patches.push(NurbsPatch::new(kvs, 3, cps)?);
        cp_map.push(map);
    }

    // Elements: tensor product of nonempty spans.
    let mut elements = Vec::new();
    for (pi, patch) in patches.iter().enumerate() {
        let spans: Vec<Vec<(usize, f64, f64)>> =
            patch.kvs.iter().map(|kv| kv.spans()).collect();
        for &(s2, a2, b2) in &spans[2] {
            for &(s1, a1, b1) in &spans[1] {
                for &(s0, a0, b0) in &spans[0] {
                    elements.push(Element {
                        patch: pi,
                        spans: [s0, s1, s2],
                        ranges: [(a0, b0), (a1, b1), (a2, b2)],
                    });
                }
            }
        }
    }

    // Boundary faces: tagged spatial sides swept in time, plus the two
    // temporal caps.
    let mut faces = Vec::new();
    for (ei, el) in elements.iter().enumerate() {
        let patch = &patches[el.patch];
        let tags = spatial.side_tags[el.patch];
        for dir in 0..2 {
            for end in 0..2 {
                let span_positions = patch.kvs[dir].spans();
                let at_boundary = if end == 0 {
                    el.spans[dir] == span_positions[0].0
                } else {
                    el.spans[dir] == span_positions[span_positions.len() - 1].0
                };
                if !at_boundary {
                    continue;
                }
                let tag = match tags[2 * dir + end] {
                    SideTag::Wall => FaceTag::Wall,
                    SideTag::Exterior => FaceTag::UnclassifiedExterior,
                    SideTag::Interface => continue,
                };
                faces.push(BoundaryFace {
                    element: ei,
                    dir,
                    end,
                    tag,
                });
            }
        }
        let tspans = patch.kvs[2].spans();
        if el.spans[2] == tspans[0].0 {
            faces.push(BoundaryFace {
                element: ei,
                dir: 2,
                end: 0,
                tag: FaceTag::TimeStart,
            });
        }
        if el.spans[2] == tspans[tspans.len() - 1].0 {
            faces.push(BoundaryFace {
                element: ei,
                dir: 2,
                end: 1,
                tag: FaceTag::TimeEnd,
            });
        }
    }

    let periodic_pairs = (0..n_sp)
        .map(|j| ((n_levels - 1) * n_sp + j, j))
        .collect();

    Ok(SpaceTimeMesh {
        patches,
        spatial: spatial.clone(),
        cp_map,
        n_global: n_levels * n_sp,
        n_levels,
        kv_t,
        s,
        period: motion.period,
        motion: *motion,
        elements,
        faces,
        periodic_pairs,
    })
}

/// Fraction of the free-stream speed the face-mean outward flux must exceed
/// for a far-field face to count as outflow.
const OUTFLOW_FLUX_THRESHOLD: f64 = 0.1;

/// Split far-field faces into inflow (Dirichlet) and outflow (Neumann) from
/// the free stream, evaluated on the reference spatial mesh so the function
/// spaces do not depend on the motion phase.
pub fn classify_exterior(mesh: &mut SpaceTimeMesh, free_stream: [f64; 2]) -> Result<()> {
    let speed = (free_stream[0] * free_stream[0] + free_stream[1] * free_stream[1]).sqrt();
    if speed <= 0.0 {
        return Err(Error::Argument("free stream must be nonzero".into()));
    }
    let rule = crate::quadrature::gauss_legendre(4);
    let mut cache: HashMap<(usize, usize, usize, usize), bool> = HashMap::new();

    // Borrow checker: collect face updates first.
    let mut updates: Vec<(usize, FaceTag)> = Vec::new();
    for (fi, face) in mesh.faces.iter().enumerate() {
        if face.dir == 2 {
            continue;
        }
        match face.tag {
            FaceTag::UnclassifiedExterior
            | FaceTag::DirichletExterior
            | FaceTag::NeumannExterior => {}
            _ => continue,
        }
        let el = &mesh.elements[face.element];
        let tang = 1 - face.dir;
        let key = (el.patch, face.dir, face.end, el.spans[tang]);
        let is_outflow = match cache.get(&key) {
            Some(&b) => b,
            None => {
                let patch = &mesh.spatial.patches[el.patch];
                let (a, b) = el.ranges[tang];
                let normal_coord = face.end as f64;
                let mut flux = 0.0;
                let mut len = 0.0;
                for (&node, &w) in rule.nodes.iter().zip(&rule.weights) {
                    let t = a + node * (b - a);
                    let mut xi = [0.0; 2];
                    xi[face.dir] = normal_coord;
                    xi[tang] = t;
                    let (_, jac) = patch.eval_geometry(&xi)?;
                    // Outward 2D cofactor normal (positive Jacobian).
                    let tx = jac[(0, tang)];
                    let ty = jac[(1, tang)];
                    let mut n = if face.dir == 0 {
                        [ty, -tx]
                    } else {
                        [-ty, tx]
                    };
                    if face.end == 0 {
                        n = [-n[0], -n[1]];
                    }
                    flux += w * (free_stream[0] * n[0] + free_stream[1] * n[1]);
                    len += w * (n[0] * n[0] + n[1] * n[1]).sqrt();
                }
                let mean = flux / len.max(1e-300);
                let out = mean > OUTFLOW_FLUX_THRESHOLD * speed;
                cache.insert(key, out);
                out
            }
        };
        updates.push((
            fi,
            if is_outflow {
                FaceTag::NeumannExterior
            } else {
                FaceTag::DirichletExterior
            },
        ));
    }
    for (fi, tag) in updates {
        mesh.faces[fi].tag = tag;
    }
    Ok(())
}

/// Velocity of the mesh itself (the boundary-condition value on the moving
/// wall), from the chain rule on the extrusion structure.
pub fn mesh_boundary_velocity(mesh: &SpaceTimeMesh, patch: usize, xi: &[f64; 3]) -> Result<[f64; 2]> {
    let (_, jac) = mesh.patches[patch].eval_geometry(xi)?;
    let scale = jac[(2, 2)].abs();
    if jac[(2, 0)].abs() > 1e-10 * scale || jac[(2, 1)].abs() > 1e-10 * scale {
        return Err(Error::Structure(
            "mesh is not a temporal extrusion: time varies along spatial directions".into(),
        ));
    }
    if scale == 0.0 {
        return Err(Error::Structure("degenerate temporal direction".into()));
    }
    Ok([
        mesh.s * jac[(0, 2)] / jac[(2, 2)],
        mesh.s * jac[(1, 2)] / jac[(2, 2)],
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_box_mesh, build_spatial_mesh, BoxMeshSpec, SpatialMeshSpec};
    use std::f64::consts::PI;

    fn heave_spec(n_el_t: usize) -> (SpatialMesh, MotionSpec, usize) {
        let spatial = build_box_mesh(&BoxMeshSpec {
            lx: 2.0,
            ly: 1.0,
            nx: 2,
            ny: 2,
            ..Default::default()
        })
        .unwrap();
        let motion = MotionSpec {
            kind: MotionKind::Heave,
            amplitude: 0.5,
            period: 8.0,
            alpha_static: 0.0,
        };
        (spatial, motion, n_el_t)
    }

    #[test]
    fn stationary_extrusion_is_a_prism() {
        let spatial = build_box_mesh(&BoxMeshSpec::default()).unwrap();
        let st = build_spacetime_mesh(&spatial, &MotionSpec::stationary(2.0), 2, 2, 1.0).unwrap();
        assert_eq!(st.n_levels, 4);
        let n_sp = spatial.n_global;
        for k in 1..st.n_levels {
            for j in 0..n_sp {
                // Same spatial position at every level.
                let patch = &st.patches[0];
                let a = patch.physical_point(j);
                let b = patch.physical_point(k * n_sp + j);
                assert_eq!(a[0], b[0]);
                assert_eq!(a[1], b[1]);
            }
        }
    }

    #[test]
    fn periodic_pairs_are_congruent() {
        let (spatial, motion, _) = heave_spec(6);
        let st = build_spacetime_mesh(&spatial, &motion, 6, 2, 1.0).unwrap();
        let patch = &st.patches[0];
        let n_sp = spatial.n_global;
        let last = (st.n_levels - 1) * n_sp;
        for j in 0..n_sp {
            let a = patch.physical_point(j);
            let b = patch.physical_point(last + j);
            assert_eq!(a[0], b[0], "periodic map must identify equal points");
            assert_eq!(a[1], b[1]);
        }
        assert_eq!(st.periodic_pairs.len(), n_sp);
    }

    #[test]
    fn heave_trajectory_matches_analytic_motion() {
        let (spatial, motion, n_el_t) = heave_spec(24);
        let st = build_spacetime_mesh(&spatial, &motion, n_el_t, 2, 1.0).unwrap();
        // Track the physical trajectory of a boundary point.
        let patch = &st.patches[0];
        let mut worst: f64 = 0.0;
        for i in 0..=400 {
            let xt = i as f64 / 400.0;
            let (x, _) = patch.eval_geometry(&[0.25, 0.0, xt]).unwrap();
            let t = x[2]; // tau = t for s=1
            let exact = 0.5 * (2.0 * PI * t / 8.0).sin();
            worst = worst.max((x[1] - exact).abs());
        }
        assert!(worst < 2e-3, "heave trajectory error {worst}");
    }

    #[test]
    fn heave_trajectory_error_drops_at_high_order() {
        let (spatial, motion, _) = heave_spec(0);
        let mut errs = Vec::new();
        for n_el_t in [6usize, 12, 24] {
            let st = build_spacetime_mesh(&spatial, &motion, n_el_t, 2, 1.0).unwrap();
            let patch = &st.patches[0];
            let mut worst: f64 = 0.0;
            for i in 0..=1000 {
                let xt = i as f64 / 1000.0;
                let (x, _) = patch.eval_geometry(&[0.25, 0.0, xt]).unwrap();
                let exact = 0.5 * (2.0 * PI * x[2] / 8.0).sin();
                worst = worst.max((x[1] - exact).abs());
            }
            errs.push(worst);
        }
        for w in errs.windows(2) {
            let rate = (w[0] / w[1]).log2();
            assert!(rate >= 2.5, "temporal rate {rate}, errors {errs:?}");
        }
    }

    #[test]
    fn pitch_axis_point_is_stationary() {
        let spec = SpatialMeshSpec::default().with_resolution_scale(0.4);
        let spatial = build_spatial_mesh(&spec).unwrap();
        let motion = MotionSpec {
            kind: MotionKind::Pitch,
            amplitude: 23.0_f64.to_radians(),
            period: 2.0,
            alpha_static: 0.0,
        };
        let st = build_spacetime_mesh(&spatial, &motion, 16, 2, 1.0).unwrap();
        let axis = spatial.pitch_axis;
        // Every temporal level applies a rotation about the axis, so the axis
        // must be a fixed point of each level transform exactly.
        let tr = level_transforms(&motion, &st.kv_t).unwrap();
        for t in &tr {
            let moved = apply_transform(axis, t, axis);
            assert!((moved[0] - axis[0]).abs() < 1e-12);
            assert!((moved[1] - axis[1]).abs() < 1e-12);
        }
        // And the interpolated space-time geometry keeps wall points on a
        // circle about the axis at all times.
        let wall_patch = &st.patches[1];
        let (x0, _) = wall_patch.eval_geometry(&[0.4, 0.0, 0.0]).unwrap();
        let r0 = ((x0[0] - axis[0]).powi(2) + (x0[1] - axis[1]).powi(2)).sqrt();
        for i in 1..=40 {
            let xt = i as f64 / 40.0;
            let (x, _) = wall_patch.eval_geometry(&[0.4, 0.0, xt]).unwrap();
            let r = ((x[0] - axis[0]).powi(2) + (x[1] - axis[1]).powi(2)).sqrt();
            assert!((r - r0).abs() < 1e-2 * r0, "radius drift {}", (r - r0).abs());
        }
    }

    #[test]
    fn mesh_velocity_matches_heave_rate() {
        let (spatial, motion, _) = heave_spec(24);
        let st = build_spacetime_mesh(&spatial, &motion, 24, 2, 1.0).unwrap();
        let mut worst: f64 = 0.0;
        for i in 0..=300 {
            let xt = i as f64 / 300.0;
            let g = mesh_boundary_velocity(&st, 0, &[0.3, 0.0, xt]).unwrap();
            let (x, _) = st.patches[0].eval_geometry(&[0.3, 0.0, xt]).unwrap();
            let exact = 0.5 * (2.0 * PI / 8.0) * (2.0 * PI * x[2] / 8.0).cos();
            assert!(g[0].abs() < 1e-12);
            worst = worst.max((g[1] - exact).abs());
        }
        assert!(worst < 2e-2, "mesh velocity error {worst}");
    }

    #[test]
    fn classification_splits_c_mesh_far_field() {
        let spec = SpatialMeshSpec::default().with_resolution_scale(0.4);
        let spatial = build_spatial_mesh(&spec).unwrap();
        let motion = MotionSpec::stationary(1.0);
        let mut st = build_spacetime_mesh(&spatial, &motion, 2, 1, 1.0).unwrap();
        classify_exterior(&mut st, [1.0, 0.0]).unwrap();

        let mut n_neumann = 0;
        let mut n_dirichlet = 0;
        for face in &st.faces {
            match face.tag {
                FaceTag::NeumannExterior => {
                    n_neumann += 1;
                    let el = &st.elements[face.element];
                    // Outflow faces live on the wake patches' downstream end.
                    assert!(el.patch == 2 || el.patch == 5, "patch {}", el.patch);
                    assert_eq!(face.dir, 0);
                }
                FaceTag::DirichletExterior => n_dirichlet += 1,
                FaceTag::UnclassifiedExterior => panic!("face left unclassified"),
                _ => {}
            }
        }
        assert!(n_neumann > 0);
        assert!(n_dirichlet > n_neumann);

        // Reversed stream swaps the roles: the arc becomes outflow.
        classify_exterior(&mut st, [-1.0, 0.0]).unwrap();
        for face in &st.faces {
            if face.tag == FaceTag::NeumannExterior {
                let el = &st.elements[face.element];
                assert!(el.patch == 0 || el.patch == 3);
            }
        }
    }

    #[test]
    fn spacetime_volume_is_area_times_period() {
        // Translational motion moves every slice rigidly, so the space-time
        // volume must equal the spatial quadrature area times the period.
        use crate::mesh::tensor_rule;
        for motion in [MotionSpec::stationary(8.0), heave_spec(0).1] {
            let spatial = build_box_mesh(&BoxMeshSpec {
                lx: 2.0,
                ly: 1.0,
                nx: 3,
                ny: 2,
                ..Default::default()
            })
            .unwrap();
            let st = build_spacetime_mesh(&spatial, &motion, 4, 2, 1.0).unwrap();

            let mut area = 0.0;
            for patch in &spatial.patches {
                let rule = tensor_rule(&[patch.kvs[0].p + 1, patch.kvs[1].p + 1]);
                for (_, a0, b0) in patch.kvs[0].spans() {
                    for (_, a1, b1) in patch.kvs[1].spans() {
                        for (pt, w) in rule.points.iter().zip(&rule.weights) {
                            let xi = [a0 + pt[0] * (b0 - a0), a1 + pt[1] * (b1 - a1)];
                            let (_, jac) = patch.eval_geometry(&xi).unwrap();
                            let det = jac[(0, 0)] * jac[(1, 1)] - jac[(0, 1)] * jac[(1, 0)];
                            area += w * det * (b0 - a0) * (b1 - a1);
                        }
                    }
                }
            }

            let mut volume = 0.0;
            for el in &st.elements {
                let patch = &st.patches[el.patch];
                let rule = tensor_rule(&[
                    patch.kvs[0].p + 1,
                    patch.kvs[1].p + 1,
                    patch.kvs[2].p + 1,
                ]);
                for (pt, &w) in rule.points.iter().zip(&rule.weights) {
                    let mut xi = [0.0; 3];
                    let mut scale = w;
                    for d in 0..3 {
                        let (a, b) = el.ranges[d];
                        xi[d] = a + pt[d] * (b - a);
                        scale *= b - a;
                    }
                    let (_, jac) = patch.eval_geometry(&xi).unwrap();
                    let jm = nalgebra::Matrix3::from_fn(|r, c| jac[(r, c)]);
                    volume += scale * jm.determinant();
                }
            }
            let expected = area * motion.period;
            assert!(
                (volume - expected).abs() <= 1e-10 * expected.abs(),
                "volume {volume} vs area x period {expected}"
            );
        }
    }

    #[test]
    fn wall_velocity_agrees_with_face_normal_rate() {
        // On the moving bottom face, the mesh velocity dotted with the
        // spatial normal must reproduce the kinematic normal velocity from
        // the space-time surface cofactor.
        use crate::mesh::boundary_normal;
        let (spatial, motion, _) = heave_spec(12);
        let st = build_spacetime_mesh(&spatial, &motion, 12, 2, 1.0).unwrap();
        let patch = &st.patches[0];
        for i in 0..=20 {
            for j in 0..=20 {
                let xi = [i as f64 / 20.0, 0.0, j as f64 / 20.0];
                let (_, jac) = patch.eval_geometry(&xi).unwrap();
                let jm = nalgebra::Matrix3::from_fn(|r, c| jac[(r, c)]);
                let bn = boundary_normal(&jm, 1, 0, st.s).unwrap();
                let g = mesh_boundary_velocity(&st, 0, &xi).unwrap();
                let gn = g[0] * bn.n_sp[0] + g[1] * bn.n_sp[1];
                assert!(
                    (gn - bn.v_n).abs() < 1e-10,
                    "wall rate mismatch {} vs {}",
                    gn,
                    bn.v_n
                );
            }
        }
    }

    #[test]
    fn zero_free_stream_rejected() {
        let spatial = build_box_mesh(&BoxMeshSpec::default()).unwrap();
        let mut st =
            build_spacetime_mesh(&spatial, &MotionSpec::stationary(1.0), 2, 1, 1.0).unwrap();
        assert!(classify_exterior(&mut st, [0.0, 0.0]).is_err());
    }

    #[test]
    fn too_few_temporal_elements_rejected() {
        let spatial = build_box_mesh(&BoxMeshSpec::default()).unwrap();
        assert!(build_spacetime_mesh(&spatial, &MotionSpec::stationary(1.0), 1, 1, 1.0).is_err());
    }
}
