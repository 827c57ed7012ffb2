use super::dofmap::{DofClass, DofMap, FIELDS};
use super::sparse::CscMatrix;
use crate::formulation::{
    element_cps, element_quadrature, face_quadrature, ElementMatrices, LocalState, WeakForm,
};
use crate::mesh::{build_patch_tables, FaceTag, PatchTables, SpaceTimeMesh};
use crate::Result;
use nalgebra::DVector;

/// Global residual and tangent assembly over the reduced unknowns. The
/// sparsity pattern, quadrature tables and constraint lookups are built once
/// and reused across Newton iterations.
pub struct Assembler {
    tables: Vec<PatchTables>,
    /// Per element: space-time control point ids in kernel-local order.
    el_gids: Vec<Vec<usize>>,
    /// Per element: reduced index of each local coefficient, -1 when fixed.
    el_dofs: Vec<Vec<i64>>,
    /// Per element: boundary faces that carry weak terms.
    el_faces: Vec<Vec<(usize, usize, FaceTag)>>,
    pub matrix: CscMatrix,
    pub residual: DVector<f64>,
    colmap: Vec<usize>,
    acc: ElementMatrices,
    scratch: LocalScratch,
}

#[derive(Default)]
struct LocalScratch {
    u: Vec<[f64; 2]>,
    p: Vec<f64>,
    u_prev: Vec<[f64; 2]>,
    p_prev: Vec<f64>,
}

impl LocalScratch {
    fn fill(&mut self, gids: &[usize], full: &DVector<f64>, prev: &DVector<f64>) {
        let n = gids.len();
        self.u.resize(n, [0.0; 2]);
        self.p.resize(n, 0.0);
        self.u_prev.resize(n, [0.0; 2]);
        self.p_prev.resize(n, 0.0);
        for (a, &g) in gids.iter().enumerate() {
            let base = FIELDS * g;
            self.u[a] = [full[base], full[base + 1]];
            self.p[a] = full[base + 2];
            self.u_prev[a] = [prev[base], prev[base + 1]];
            self.p_prev[a] = prev[base + 2];
        }
    }

    fn state(&self) -> LocalState<'_> {
        LocalState {
            u: &self.u,
            p: &self.p,
            u_prev: &self.u_prev,
            p_prev: &self.p_prev,
        }
    }
}

/// Leader id of each space-time control point under periodic identification.
fn leader_of(mesh: &SpaceTimeMesh) -> Vec<u32> {
    let mut rep: Vec<u32> = (0..mesh.n_global as u32).collect();
    for &(follower, leader) in &mesh.periodic_pairs {
        rep[follower] = leader as u32;
    }
    rep
}

impl Assembler {
    pub fn new(mesh: &SpaceTimeMesh, dofmap: &DofMap) -> Result<Self> {
        let tables: Vec<PatchTables> = mesh
            .patches
            .iter()
            .map(|p| build_patch_tables(p, 0))
            .collect::<Result<_>>()?;

        let mut el_gids = Vec::with_capacity(mesh.elements.len());
        let mut el_dofs = Vec::with_capacity(mesh.elements.len());
        for el in &mesh.elements {
            let gids: Vec<usize> = element_cps(&mesh.patches[el.patch], el)
                .iter()
                .map(|&loc| mesh.cp_map[el.patch][loc])
                .collect();
            let dofs: Vec<i64> = gids
                .iter()
                .flat_map(|&g| (0..FIELDS).map(move |c| FIELDS * g + c))
                .map(|dof| match dofmap.resolve(dof) {
                    super::dofmap::Resolved::Free(r) => r as i64,
                    super::dofmap::Resolved::Fixed(_) => -1,
                })
                .collect();
            el_gids.push(gids);
            el_dofs.push(dofs);
        }

        let mut el_faces = vec![Vec::new(); mesh.elements.len()];
        for face in &mesh.faces {
            match face.tag {
                FaceTag::Wall | FaceTag::NeumannExterior => {
                    el_faces[face.element].push((face.dir, face.end, face.tag));
                }
                _ => {}
            }
        }

        // Folded control point adjacency drives the sparsity pattern.
        let rep = leader_of(mesh);
        let mut adj: Vec<Vec<u32>> = vec![Vec::new(); mesh.n_global];
        let mut reps: Vec<u32> = Vec::new();
        for gids in &el_gids {
            reps.clear();
            reps.extend(gids.iter().map(|&g| rep[g]));
            reps.sort_unstable();
            reps.dedup();
            for &a in &reps {
                adj[a as usize].extend_from_slice(&reps);
            }
        }
        for list in &mut adj {
            list.sort_unstable();
            list.dedup();
        }

        // Reduced indices ascend with coefficient ids, so visiting neighbor
        // points in ascending order yields sorted column rows.
        let mut cols: Vec<Vec<u32>> = vec![Vec::new(); dofmap.n_free];
        let mut rows: Vec<u32> = Vec::new();
        for cp in 0..mesh.n_global {
            if adj[cp].is_empty() {
                continue;
            }
            rows.clear();
            for &nb in &adj[cp] {
                for c in 0..FIELDS {
                    if let DofClass::Free(r) = dofmap.class[FIELDS * nb as usize + c] {
                        rows.push(r as u32);
                    }
                }
            }
            for c in 0..FIELDS {
                if let DofClass::Free(r) = dofmap.class[FIELDS * cp + c] {
                    cols[r] = rows.clone();
                }
            }
        }
        let matrix = CscMatrix::from_columns(dofmap.n_free, cols);

        Ok(Assembler {
            tables,
            el_gids,
            el_dofs,
            el_faces,
            matrix,
            residual: DVector::zeros(dofmap.n_free),
            colmap: vec![usize::MAX; dofmap.n_free],
            acc: ElementMatrices::new(),
            scratch: LocalScratch::default(),
        })
    }

    /// Assemble the reduced residual and tangent at the given full state.
    pub fn assemble(
        &mut self,
        mesh: &SpaceTimeMesh,
        wf: &WeakForm,
        full: &DVector<f64>,
        prev: &DVector<f64>,
    ) -> Result<()> {
        self.matrix.zero_values();
        self.residual.fill(0.0);
        for (e, el) in mesh.elements.iter().enumerate() {
            let gids = &self.el_gids[e];
            let n_dof = FIELDS * gids.len();
            self.scratch.fill(gids, full, prev);
            let state = self.scratch.state();
            let patch = &mesh.patches[el.patch];
            let qps = element_quadrature(patch, &self.tables[el.patch], el, e, mesh.s)?;
            self.acc.reset(n_dof);
            wf.volume(&qps, &state, &mut self.acc);
            for &(dir, end, tag) in &self.el_faces[e] {
                let fqs = face_quadrature(patch, &self.tables[el.patch], el, e, dir, end, mesh.s)?;
                match tag {
                    FaceTag::Wall => wf.wall_face(&fqs, &state, &mut self.acc),
                    FaceTag::NeumannExterior => wf.outflow_face(&fqs, &state, &mut self.acc),
                    _ => unreachable!(),
                }
            }
            self.scatter(e);
        }
        Ok(())
    }

    fn scatter(&mut self, e: usize) {
        let dofs = &self.el_dofs[e];
        let n_dof = dofs.len();
        for (a, &ra) in dofs.iter().enumerate() {
            if ra >= 0 {
                self.residual[ra as usize] += self.acc.residual[a];
            }
        }
        for (b, &cb) in dofs.iter().enumerate() {
            if cb < 0 {
                continue;
            }
            let cb = cb as usize;
            let lo = self.matrix.col_ptr[cb];
            let hi = self.matrix.col_ptr[cb + 1];
            for k in lo..hi {
                self.colmap[self.matrix.row_idx[k] as usize] = k;
            }
            for (a, &ra) in dofs.iter().enumerate().take(n_dof) {
                if ra < 0 {
                    continue;
                }
                let slot = self.colmap[ra as usize];
                debug_assert_ne!(slot, usize::MAX, "entry missing from pattern");
                self.matrix.values[slot] += self.acc.jacobian[(a, b)];
            }
            for k in lo..hi {
                self.colmap[self.matrix.row_idx[k] as usize] = usize::MAX;
            }
        }
    }
}

/// Residual rows for every coefficient, without constraint reduction.
/// Periodic copies are folded into their leaders (the identified basis
/// function is the sum of both supports); prescribed rows are kept, which is
/// what boundary flux recovery integrates against.
pub fn raw_residual(
    mesh: &SpaceTimeMesh,
    wf: &WeakForm,
    full: &DVector<f64>,
    prev: &DVector<f64>,
) -> Result<DVector<f64>> {
    let mut out = DVector::zeros(FIELDS * mesh.n_global);
    let mut acc = ElementMatrices::new();
    let mut scratch = LocalScratch::default();
    let tables: Vec<PatchTables> = mesh
        .patches
        .iter()
        .map(|p| build_patch_tables(p, 0))
        .collect::<Result<_>>()?;
    let mut el_faces: Vec<Vec<(usize, usize, FaceTag)>> = vec![Vec::new(); mesh.elements.len()];
    for face in &mesh.faces {
        match face.tag {
            FaceTag::Wall | FaceTag::NeumannExterior => {
                el_faces[face.element].push((face.dir, face.end, face.tag));
            }
            _ => {}
        }
    }
    for (e, el) in mesh.elements.iter().enumerate() {
        let patch = &mesh.patches[el.patch];
        let gids: Vec<usize> = element_cps(patch, el)
            .iter()
            .map(|&loc| mesh.cp_map[el.patch][loc])
            .collect();
        scratch.fill(&gids, full, prev);
        let state = scratch.state();
        let qps = element_quadrature(patch, &tables[el.patch], el, e, mesh.s)?;
        acc.reset(FIELDS * gids.len());
        wf.volume(&qps, &state, &mut acc);
        for &(dir, end, tag) in &el_faces[e] {
            let fqs = face_quadrature(patch, &tables[el.patch], el, e, dir, end, mesh.s)?;
            match tag {
                FaceTag::Wall => wf.wall_face(&fqs, &state, &mut acc),
                FaceTag::NeumannExterior => wf.outflow_face(&fqs, &state, &mut acc),
                _ => unreachable!(),
            }
        }
        for (a, &g) in gids.iter().enumerate() {
            for c in 0..FIELDS {
                out[FIELDS * g + c] += acc.residual[FIELDS * a + c];
            }
        }
    }
    for &(follower, leader) in &mesh.periodic_pairs {
        for c in 0..FIELDS {
            out[FIELDS * leader + c] += out[FIELDS * follower + c];
            out[FIELDS * follower + c] = 0.0;
        }
    }
    Ok(out)
}

/// Physical location of each reduced unknown, for geometric orderings.
pub fn free_dof_positions(mesh: &SpaceTimeMesh, dofmap: &DofMap) -> Vec<[f64; 3]> {
    let mut cp_pos = vec![[0.0f64; 3]; mesh.n_global];
    for (pi, patch) in mesh.patches.iter().enumerate() {
        for loc in 0..patch.ncp() {
            let x = patch.physical_point(loc);
            cp_pos[mesh.cp_map[pi][loc]] = [x[0], x[1], x[2]];
        }
    }
    dofmap
        .free_to_dof
        .iter()
        .map(|&dof| cp_pos[dof / FIELDS])
        .collect()
}
