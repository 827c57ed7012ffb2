//! Spatial multipatch meshes and their periodic space-time extrusion.

mod boxmesh;
mod cmesh;
mod metrics;
mod naca;
mod spacetime;
mod tables;

pub use boxmesh::{build_box_mesh, BoxMeshSpec};
pub use cmesh::{build_spatial_mesh, SpatialMeshSpec};
pub use metrics::{boundary_normal, compute_metrics, BoundaryNormal, MetricPair};
pub use naca::Naca4;
pub use spacetime::{
    build_spacetime_mesh, classify_exterior, mesh_boundary_velocity, BoundaryFace, Element,
    FaceTag, MotionKind, MotionSpec, SpaceTimeMesh,
};
pub use tables::{
    build_dir_table, build_patch_tables, dir_boundary, tensor_rule, BoundaryBasis, DirTable,
    PatchTables, SpanQuad, TensorRule,
};

use crate::nurbs::NurbsPatch;
use std::collections::HashMap;

/// Role of one parametric side of a spatial patch.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SideTag {
    /// Interior boundary (the moving wall the forces act on).
    Wall,
    /// Far-field boundary, split later into inflow and outflow.
    Exterior,
    /// Conforming interface shared with a neighboring patch.
    Interface,
}

/// Spatial multipatch mesh with merged control points.
#[derive(Debug, Clone)]
pub struct SpatialMesh {
    pub patches: Vec<NurbsPatch>,
    /// Per patch: tags of the sides [u=0, u=1, v=0, v=1].
    pub side_tags: Vec<[SideTag; 4]>,
    /// Per patch: local flat control point index -> global index.
    pub cp_map: Vec<Vec<usize>>,
    pub n_global: usize,
    /// Physical coordinates of the merged control points.
    pub global_coords: Vec<[f64; 2]>,
    pub chord: f64,
    pub pitch_axis: [f64; 2],
}

impl SpatialMesh {
    pub fn from_patches(
        patches: Vec<NurbsPatch>,
        side_tags: Vec<[SideTag; 4]>,
        chord: f64,
        pitch_axis: [f64; 2],
    ) -> Self {
        let (cp_map, global_coords) = merge_control_points(&patches, 1e-10);
        let n_global = global_coords.len();
        SpatialMesh {
            patches,
            side_tags,
            cp_map,
            n_global,
            global_coords,
            chord,
            pitch_axis,
        }
    }

    /// Uniformly bisect every knot span of every patch `levels` times. The
    /// geometry is unchanged; only the discretization is refined.
    pub fn refined(&self, levels: usize) -> crate::Result<SpatialMesh> {
        let mut patches = self.patches.clone();
        for _ in 0..levels {
            for p in &mut patches {
                *p = p.bisect_direction(0)?.bisect_direction(1)?;
            }
        }
        Ok(SpatialMesh::from_patches(
            patches,
            self.side_tags.clone(),
            self.chord,
            self.pitch_axis,
        ))
    }
}

/// Merge coincident control points across patches. Points match when both
/// position and weight agree within `tol`. Returns per-patch local->global
/// maps and the merged physical coordinates.
fn merge_control_points(patches: &[NurbsPatch], tol: f64) -> (Vec<Vec<usize>>, Vec<[f64; 2]>) {
    let mut grid: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    let mut coords: Vec<[f64; 2]> = Vec::new();
    let mut weights: Vec<f64> = Vec::new();
    let mut maps = Vec::with_capacity(patches.len());

    let key_of = |x: f64, y: f64| ((x / tol).round() as i64, (y / tol).round() as i64);

    for patch in patches {
        let mut map = Vec::with_capacity(patch.ncp());
        for i in 0..patch.ncp() {
            let p = patch.physical_point(i);
            let w = patch.weight(i);
            let (kx, ky) = key_of(p[0], p[1]);
            let mut found = None;
            'search: for dx in -1..=1 {
                for dy in -1..=1 {
                    if let Some(cands) = grid.get(&(kx + dx, ky + dy)) {
                        for &g in cands {
                            let c = coords[g];
                            if (c[0] - p[0]).abs() <= tol
                                && (c[1] - p[1]).abs() <= tol
                                && (weights[g] - w).abs() <= tol
                            {
                                found = Some(g);
                                break 'search;
                            }
                        }
                    }
                }
            }
            let g = match found {
                Some(g) => g,
                None => {
                    let g = coords.len();
                    coords.push([p[0], p[1]]);
                    weights.push(w);
                    grid.entry((kx, ky)).or_default().push(g);
                    g
                }
            };
            map.push(g);
        }
        maps.push(map);
    }
    (maps, coords)
}
