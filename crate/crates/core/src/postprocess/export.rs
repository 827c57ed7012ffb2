use super::flux::MomentumBalance;
use super::reference::RichardsonResult;
use super::sample::sample_point;
use super::traction::TractionSeries;
use crate::mesh::SpaceTimeMesh;
use crate::{Error, Result};
use nalgebra::DVector;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

fn wrap_period(t: f64, period: f64) -> f64 {
    let z = t / period;
    if (0.0..=1.0).contains(&z) {
        z
    } else {
        z.rem_euclid(1.0)
    }
}

/// Write one spatial slice per requested time as a legacy unstructured-grid
/// text file, with point velocity and pressure. Each patch is sampled on an
/// evenly spaced lattice of `resolution` cells per parametric direction.
pub fn export_fields(
    state: &DVector<f64>,
    mesh: &SpaceTimeMesh,
    times: &[f64],
    resolution: usize,
    dir: &Path,
) -> Result<Vec<PathBuf>> {
    if resolution == 0 {
        return Err(Error::Argument("lattice resolution must be at least 1".into()));
    }
    fs::create_dir_all(dir)?;
    let res = resolution;
    let pts_per_patch = (res + 1) * (res + 1);
    let n_pts = mesh.patches.len() * pts_per_patch;
    let n_cells = mesh.patches.len() * res * res;

    let mut paths = Vec::with_capacity(times.len());
    for (k, &t) in times.iter().enumerate() {
        let zeta = wrap_period(t, mesh.period);
        let mut samples = Vec::with_capacity(n_pts);
        for pi in 0..mesh.patches.len() {
            let patch = &mesh.patches[pi];
            let dom: Vec<(f64, f64)> = (0..2)
                .map(|d| {
                    let kv = &patch.kvs[d];
                    (kv.knots[kv.p], kv.knots[kv.knots.len() - 1 - kv.p])
                })
                .collect();
            let zt = {
                let kv = &patch.kvs[2];
                kv.knots[kv.p] + (kv.knots[kv.knots.len() - 1 - kv.p] - kv.knots[kv.p]) * zeta
            };
            for j in 0..=res {
                let xi1 = dom[1].0 + (dom[1].1 - dom[1].0) * j as f64 / res as f64;
                for i in 0..=res {
                    let xi0 = dom[0].0 + (dom[0].1 - dom[0].0) * i as f64 / res as f64;
                    samples.push(sample_point(mesh, state, pi, &[xi0, xi1, zt])?);
                }
            }
        }

        let mut out = String::new();
        out.push_str("# vtk DataFile Version 3.0\n");
        let _ = writeln!(out, "spatial slice at t/T = {zeta:.6}");
        out.push_str("ASCII\nDATASET UNSTRUCTURED_GRID\n");
        let _ = writeln!(out, "POINTS {n_pts} double");
        for s in &samples {
            let _ = writeln!(out, "{:.12e} {:.12e} 0.000000000000e0", s.x[0], s.x[1]);
        }
        let _ = writeln!(out, "CELLS {n_cells} {}", 5 * n_cells);
        for pi in 0..mesh.patches.len() {
            let base = pi * pts_per_patch;
            for j in 0..res {
                for i in 0..res {
                    let a = base + j * (res + 1) + i;
                    let _ = writeln!(out, "4 {} {} {} {}", a, a + 1, a + res + 2, a + res + 1);
                }
            }
        }
        let _ = writeln!(out, "CELL_TYPES {n_cells}");
        for _ in 0..n_cells {
            out.push_str("9\n");
        }
        let _ = writeln!(out, "POINT_DATA {n_pts}");
        out.push_str("VECTORS velocity double\n");
        for s in &samples {
            let _ = writeln!(out, "{:.12e} {:.12e} 0.000000000000e0", s.u[0], s.u[1]);
        }
        out.push_str("SCALARS pressure double 1\nLOOKUP_TABLE default\n");
        for s in &samples {
            let _ = writeln!(out, "{:.12e}", s.p);
        }

        let path = dir.join(format!("fields_{k:03}.vtk"));
        fs::write(&path, out)?;
        paths.push(path);
    }
    Ok(paths)
}

/// Write the force-coefficient history as CSV with `n_samples` uniform
/// samples over one period, starting at t = 0.
pub fn export_force_csv(series: &TractionSeries, n_samples: usize, path: &Path) -> Result<()> {
    if n_samples == 0 {
        return Err(Error::Argument("need at least one force sample".into()));
    }
    let mut out = String::from("t_over_T,Cd,Cl\n");
    for k in 0..n_samples {
        let frac = k as f64 / n_samples as f64;
        let c = series.coefficients_at(frac * series.period);
        let _ = writeln!(out, "{:.12e},{:.12e},{:.12e}", frac, c.cd, c.cl);
    }
    fs::write(path, out)?;
    Ok(())
}

/// Conservation diagnostics rendered as plain structured text, one
/// self-describing block per quantity.
pub fn render_run_summary(
    mass_flux: f64,
    balance: Option<&MomentumBalance>,
    extrapolations: &[(&str, RichardsonResult)],
) -> String {
    let mut out = String::from("{\n");
    let _ = writeln!(out, "  \"mass_flux\": {mass_flux:.12e},");
    if let Some(b) = balance {
        out.push_str("  \"momentum_balance\": {\n");
        let pair = |v: [f64; 2]| format!("[{:.12e}, {:.12e}]", v[0], v[1]);
        let _ = writeln!(out, "    \"multiplier\": {},", pair(b.lambda_side));
        let _ = writeln!(out, "    \"wall_traction\": {},", pair(b.wall_traction));
        let _ = writeln!(out, "    \"wall_traction_one_sided\": {},", pair(b.wall_traction_grad));
        let _ = writeln!(out, "    \"wall_penalty\": {},", pair(b.wall_penalty));
        let _ = writeln!(out, "    \"outflow\": {},", pair(b.outflow));
        let _ = writeln!(out, "    \"body_force\": {},", pair(b.body));
        let _ = writeln!(out, "    \"convective_volume\": {},", pair(b.convective));
        let _ = writeln!(out, "    \"viscous_flux_gap\": {:.12e},", b.viscous_gap);
        let _ = writeln!(out, "    \"wall_mass_defect\": {:.12e},", b.wall_mass_defect);
        let _ = writeln!(out, "    \"imbalance\": {:.12e},", b.imbalance);
        let _ = writeln!(out, "    \"imbalance_closed\": {:.12e}", b.imbalance_closed);
        out.push_str("  },\n");
    }
    out.push_str("  \"extrapolation\": {\n");
    for (i, (label, r)) in extrapolations.iter().enumerate() {
        let comma = if i + 1 < extrapolations.len() { "," } else { "" };
        let _ = writeln!(
            out,
            "    \"{label}\": {{ \"order\": {:.12e}, \"value\": {:.12e}, \"errors\": [{:.12e}, {:.12e}, {:.12e}] }}{comma}",
            r.order, r.extrapolated, r.errors[0], r.errors[1], r.errors[2]
        );
    }
    out.push_str("  }\n}\n");
    out
}
