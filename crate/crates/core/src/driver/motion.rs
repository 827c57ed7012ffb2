use crate::mesh::{mesh_boundary_velocity, MotionKind, SideTag, SpaceTimeMesh};
use crate::{Error, Result};
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;

/// One row of the discrete-versus-analytic motion table.
#[derive(Debug, Clone, Copy)]
pub struct MotionSample {
    pub t: f64,
    /// Vertical displacement of the tracked boundary point.
    pub h: f64,
    pub h_exact: f64,
    /// Boundary velocity recovered from the space-time geometry.
    pub g: [f64; 2],
    pub g_exact: [f64; 2],
}

/// Track one material boundary point through a period and compare the
/// interpolated mesh motion against the analytic prescription. The mesh
/// moves rigidly, so a single point captures the whole motion; a wall
/// point is preferred when the mesh has one.
pub fn motion_trace(mesh: &SpaceTimeMesh, n_samples: usize) -> Result<Vec<MotionSample>> {
    if n_samples == 0 {
        return Err(Error::Argument("motion trace needs at least one sample".into()));
    }
    let motion = &mesh.motion;
    if motion.kind == MotionKind::Pitch {
        return Err(Error::Argument(
            "pitch motion has no single heave coordinate; trace supports stationary and heave".into(),
        ));
    }
    let (patch, xi01) = probe_point(mesh);
    let (x0, _) = mesh.patches[patch].eval_geometry(&[xi01[0], xi01[1], 0.0])?;
    let omega = 2.0 * PI / motion.period;
    let mut out = Vec::with_capacity(n_samples + 1);
    for i in 0..=n_samples {
        let zt = i as f64 / n_samples as f64;
        let xi = [xi01[0], xi01[1], zt];
        let (x, _) = mesh.patches[patch].eval_geometry(&xi)?;
        let t = x[2] / mesh.s;
        let g = mesh_boundary_velocity(mesh, patch, &xi)?;
        let (h_exact, g_exact) = match motion.kind {
            MotionKind::Stationary => (0.0, [0.0, 0.0]),
            MotionKind::Heave => (
                motion.amplitude * (omega * t).sin(),
                [0.0, motion.amplitude * omega * (omega * t).cos()],
            ),
            MotionKind::Pitch => unreachable!(),
        };
        out.push(MotionSample {
            t,
            h: x[1] - x0[1],
            h_exact,
            g,
            g_exact,
        });
    }
    Ok(out)
}

/// Parametric center of the first wall side, or the patch-0 center when the
/// mesh has no wall.
fn probe_point(mesh: &SpaceTimeMesh) -> (usize, [f64; 2]) {
    for (p, sides) in mesh.spatial.side_tags.iter().enumerate() {
        for (side, tag) in sides.iter().enumerate() {
            if *tag == SideTag::Wall {
                let xi01 = match side {
                    0 => [0.0, 0.5],
                    1 => [1.0, 0.5],
                    2 => [0.5, 0.0],
                    _ => [0.5, 1.0],
                };
                return (p, xi01);
            }
        }
    }
    (0, [0.5, 0.5])
}

pub fn write_motion_csv(samples: &[MotionSample], path: &Path) -> Result<()> {
    let mut text = String::from("t,h,h_exact,g_x,g_x_exact,g_y,g_y_exact\n");
    for s in samples {
        let _ = writeln!(
            text,
            "{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e}",
            s.t, s.h, s.h_exact, s.g[0], s.g_exact[0], s.g[1], s.g_exact[1]
        );
    }
    std::fs::write(path, text)?;
    Ok(())
}

/// Worst-case motion interpolation errors at one temporal resolution.
#[derive(Debug, Clone, Copy)]
pub struct BoundaryVelocityCheck {
    pub n_el_t: usize,
    /// Max |h - h_exact| over the period.
    pub position_error: f64,
    /// Max |g - g_exact| over the period, both components.
    pub velocity_error: f64,
}

/// Reconstruct the boundary position and velocity of a heaving mesh at a
/// ladder of temporal resolutions and tabulate the errors. The motion
/// interpolation is independent of the spatial mesh, so a small box stands
/// in for the production geometry.
pub fn verify_boundary_velocity(out_dir: &Path) -> Result<Vec<BoundaryVelocityCheck>> {
    use crate::mesh::{build_box_mesh, build_spacetime_mesh, BoxMeshSpec, MotionSpec};

    std::fs::create_dir_all(out_dir)?;
    let spatial = build_box_mesh(&BoxMeshSpec {
        lx: 2.0,
        ly: 1.0,
        nx: 2,
        ny: 2,
        ..BoxMeshSpec::default()
    })?;
    let motion = MotionSpec {
        kind: MotionKind::Heave,
        amplitude: 0.5,
        period: 8.0,
        alpha_static: 0.0,
    };
    let mut checks = Vec::new();
    let mut summary = String::from("n_el_t,position_error,velocity_error\n");
    for n_el_t in [6usize, 12, 24] {
        let st = build_spacetime_mesh(&spatial, &motion, n_el_t, 2, 1.0)?;
        let samples = motion_trace(&st, 400)?;
        write_motion_csv(&samples, &out_dir.join(format!("boundary_velocity_{n_el_t:02}.csv")))?;
        let mut pos: f64 = 0.0;
        let mut vel: f64 = 0.0;
        for s in &samples {
            pos = pos.max((s.h - s.h_exact).abs());
            vel = vel.max((s.g[0] - s.g_exact[0]).abs());
            vel = vel.max((s.g[1] - s.g_exact[1]).abs());
        }
        let _ = writeln!(summary, "{n_el_t},{pos:.12e},{vel:.12e}");
        checks.push(BoundaryVelocityCheck {
            n_el_t,
            position_error: pos,
            velocity_error: vel,
        });
    }
    std::fs::write(out_dir.join("boundary_velocity_summary.csv"), summary)?;
    Ok(checks)
}
