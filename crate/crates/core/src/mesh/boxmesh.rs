use super::{SideTag, SpatialMesh};
use crate::nurbs::{KnotVector, NurbsPatch};
use crate::{Error, Result};

/// Rectangular single-patch mesh, mainly for tests and verification runs.
#[derive(Debug, Clone)]
pub struct BoxMeshSpec {
    pub lx: f64,
    pub ly: f64,
    pub nx: usize,
    pub ny: usize,
    pub degree: usize,
    /// Tags of the sides [x=0, x=lx, y=0, y=ly].
    pub side_tags: [SideTag; 4],
}

impl Default for BoxMeshSpec {
    fn default() -> Self {
        BoxMeshSpec {
            lx: 1.0,
            ly: 1.0,
            nx: 4,
            ny: 4,
            degree: 2,
            side_tags: [SideTag::Exterior; 4],
        }
    }
}

/// Build the box as one B-spline patch whose mapping is exactly affine:
/// x = lx * xi0, y = ly * xi1.
pub fn build_box_mesh(spec: &BoxMeshSpec) -> Result<SpatialMesh> {
    if spec.lx <= 0.0 || spec.ly <= 0.0 {
        return Err(Error::Argument("box extents must be positive".into()));
    }
    if spec.nx == 0 || spec.ny == 0 {
        return Err(Error::Argument("box needs at least one element per direction".into()));
    }
    let kvx = KnotVector::uniform_open(spec.degree, spec.nx)?;
    let kvy = KnotVector::uniform_open(spec.degree, spec.ny)?;
    let gx = kvx.greville_all();
    let gy = kvy.greville_all();
    let mut pts = Vec::with_capacity(gx.len() * gy.len() * 2);
    for &y in &gy {
        for &x in &gx {
            pts.push(spec.lx * x);
            pts.push(spec.ly * y);
        }
    }
    let patch = NurbsPatch::from_bspline(vec![kvx, kvy], 2, &pts)?;
    Ok(SpatialMesh::from_patches(
        vec![patch],
        vec![spec.side_tags],
        spec.lx.max(spec.ly),
        [0.0, 0.0],
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn box_map_is_affine() {
        let spec = BoxMeshSpec {
            lx: 2.0,
            ly: 3.0,
            nx: 5,
            ny: 4,
            ..Default::default()
        };
        let mesh = build_box_mesh(&spec).unwrap();
        let (x, j) = mesh.patches[0].eval_geometry(&[0.3, 0.7]).unwrap();
        assert!((x[0] - 0.6).abs() < 1e-13);
        assert!((x[1] - 2.1).abs() < 1e-13);
        assert!((j[(0, 0)] - 2.0).abs() < 1e-12);
        assert!((j[(1, 1)] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_counts_rejected() {
        let spec = BoxMeshSpec {
            nx: 0,
            ..Default::default()
        };
        assert!(build_box_mesh(&spec).is_err());
    }
}
