use crate::mesh::{build_patch_tables, Element, PatchTables, SpaceTimeMesh};
use crate::nurbs::eval_basis_ders;
use crate::solver::FIELDS;
use crate::Result;
use nalgebra::DVector;

pub(super) fn patch_tables(mesh: &SpaceTimeMesh) -> Result<Vec<PatchTables>> {
    mesh.patches.iter().map(|p| build_patch_tables(p, 0)).collect()
}

/// Leader id of each space-time control point under periodic identification.
pub(super) fn leader_map(mesh: &SpaceTimeMesh) -> Vec<usize> {
    let mut rep: Vec<usize> = (0..mesh.n_global).collect();
    for &(follower, leader) in &mesh.periodic_pairs {
        rep[follower] = leader;
    }
    rep
}

/// Element coefficient gather for read-only evaluation of a single state.
#[derive(Default)]
pub(super) struct ElementCoeffs {
    pub gids: Vec<usize>,
    pub u: Vec<[f64; 2]>,
    pub p: Vec<f64>,
}

impl ElementCoeffs {
    pub fn fill(&mut self, mesh: &SpaceTimeMesh, el: &Element, state: &DVector<f64>) {
        self.gids.clear();
        self.gids.extend(
            crate::formulation::element_cps(&mesh.patches[el.patch], el)
                .iter()
                .map(|&loc| mesh.cp_map[el.patch][loc]),
        );
        let n = self.gids.len();
        self.u.resize(n, [0.0; 2]);
        self.p.resize(n, 0.0);
        for (a, &g) in self.gids.iter().enumerate() {
            let base = FIELDS * g;
            self.u[a] = [state[base], state[base + 1]];
            self.p[a] = state[base + 2];
        }
    }

}

/// Pointwise boundary state: velocity, pressure, and the spatial velocity
/// gradient rows.
pub(super) struct FacePoint {
    pub u: [f64; 2],
    pub p: f64,
    pub grad_u: [[f64; 2]; 2],
}

pub(super) fn face_point(basis: &crate::formulation::LocalBasis, coeffs: &ElementCoeffs) -> FacePoint {
    let mut out = FacePoint {
        u: [0.0; 2],
        p: 0.0,
        grad_u: [[0.0; 2]; 2],
    };
    for a in 0..basis.n {
        let v = basis.val[a];
        let g = basis.grad[a];
        out.p += v * coeffs.p[a];
        for c in 0..2 {
            out.u[c] += v * coeffs.u[a][c];
            out.grad_u[c][0] += g[0] * coeffs.u[a][c];
            out.grad_u[c][1] += g[1] * coeffs.u[a][c];
        }
    }
    out
}

/// One evaluated visualization point: spatial position and fields.
pub(super) struct PointSample {
    pub x: [f64; 2],
    pub u: [f64; 2],
    pub p: f64,
}

/// Evaluate geometry and solution fields of one patch at a parametric point.
pub(super) fn sample_point(
    mesh: &SpaceTimeMesh,
    state: &DVector<f64>,
    patch_index: usize,
    xi: &[f64; 3],
) -> Result<PointSample> {
    let patch = &mesh.patches[patch_index];
    let evals = [
        eval_basis_ders(&patch.kvs[0], xi[0], 0)?,
        eval_basis_ders(&patch.kvs[1], xi[1], 0)?,
        eval_basis_ders(&patch.kvs[2], xi[2], 0)?,
    ];
    let degs = [patch.kvs[0].p, patch.kvs[1].p, patch.kvs[2].p];
    let mut wsum = 0.0;
    let mut x = [0.0; 2];
    let mut u = [0.0; 2];
    let mut p = 0.0;
    for j2 in 0..=degs[2] {
        for j1 in 0..=degs[1] {
            for j0 in 0..=degs[0] {
                let idx = [
                    evals[0].global_index(degs[0], j0),
                    evals[1].global_index(degs[1], j1),
                    evals[2].global_index(degs[2], j2),
                ];
                let flat = patch.grid_index(&idx);
                let w = patch.weight(flat);
                let v = evals[0].values()[j0] * evals[1].values()[j1] * evals[2].values()[j2] * w;
                if v == 0.0 {
                    continue;
                }
                wsum += v;
                let pt = patch.physical_point(flat);
                x[0] += v * pt[0];
                x[1] += v * pt[1];
                let base = FIELDS * mesh.cp_map[patch_index][flat];
                u[0] += v * state[base];
                u[1] += v * state[base + 1];
                p += v * state[base + 2];
            }
        }
    }
    Ok(PointSample {
        x: [x[0] / wsum, x[1] / wsum],
        u: [u[0] / wsum, u[1] / wsum],
        p: p / wsum,
    })
}
