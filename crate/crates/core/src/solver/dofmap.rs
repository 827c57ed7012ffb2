use crate::mesh::{FaceTag, SpaceTimeMesh};
use crate::{Error, Result};
use nalgebra::DVector;

/// Scalar coefficients per space-time control point: two velocity components
/// followed by pressure.
pub const FIELDS: usize = 3;

/// Constraint class of one scalar coefficient.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DofClass {
    /// Unknown, carrying its index in the reduced system.
    Free(usize),
    /// Strongly enforced coefficient with its prescribed value.
    Prescribed(f64),
    /// Periodic copy taking the value of the leader coefficient.
    Follower(usize),
}

/// Value source of a coefficient after following periodic links.
#[derive(Debug, Clone, Copy)]
pub enum Resolved {
    Free(usize),
    Fixed(f64),
}

/// Map between the interleaved coefficient vector (u1, u2, p per control
/// point) and the reduced vector of unknowns.
#[derive(Debug, Clone)]
pub struct DofMap {
    pub class: Vec<DofClass>,
    pub n_free: usize,
    /// Reduced index -> coefficient id.
    pub free_to_dof: Vec<usize>,
}

impl DofMap {
    pub fn resolve(&self, dof: usize) -> Resolved {
        match self.class[dof] {
            DofClass::Free(r) => Resolved::Free(r),
            DofClass::Prescribed(v) => Resolved::Fixed(v),
            DofClass::Follower(leader) => match self.class[leader] {
                DofClass::Free(r) => Resolved::Free(r),
                DofClass::Prescribed(v) => Resolved::Fixed(v),
                DofClass::Follower(_) => unreachable!("follower chains are length one"),
            },
        }
    }

    /// Field component (0, 1 velocity; 2 pressure) of a reduced unknown.
    pub fn component(&self, reduced: usize) -> usize {
        self.free_to_dof[reduced] % FIELDS
    }

    /// Write the full coefficient vector for a reduced vector: prescribed
    /// values inserted, periodic followers copied from their leaders.
    pub fn expand(&self, free: &DVector<f64>, out: &mut DVector<f64>) {
        assert_eq!(out.len(), self.class.len());
        for dof in 0..self.class.len() {
            out[dof] = match self.class[dof] {
                DofClass::Free(r) => free[r],
                DofClass::Prescribed(v) => v,
                // Leaders live on the first temporal level, so they carry
                // smaller ids and are already written.
                DofClass::Follower(leader) => out[leader],
            };
        }
    }

    /// Extract the reduced vector from a full coefficient vector.
    pub fn restrict(&self, full: &DVector<f64>) -> DVector<f64> {
        DVector::from_fn(self.n_free, |r, _| full[self.free_to_dof[r]])
    }
}

/// Patch control points whose trace is nonzero on one element face.
fn face_control_points(
    degrees: [usize; 3],
    spans: [usize; 3],
    dir: usize,
    end: usize,
) -> Vec<[usize; 3]> {
    let first = [
        spans[0] - degrees[0],
        spans[1] - degrees[1],
        spans[2] - degrees[2],
    ];
    let layer = if end == 0 { 0 } else { degrees[dir] };
    let tang: Vec<usize> = (0..3).filter(|&d| d != dir).collect();
    let mut out = Vec::new();
    for j2 in 0..=degrees[tang[1]] {
        for j1 in 0..=degrees[tang[0]] {
            let mut idx = [0usize; 3];
            idx[dir] = first[dir] + layer;
            idx[tang[0]] = first[tang[0]] + j1;
            idx[tang[1]] = first[tang[1]] + j2;
            out.push(idx);
        }
    }
    out
}

/// Classify every coefficient: periodic copies at the final temporal level
/// follow their first-level leaders, velocity coefficients whose trace
/// touches the strongly enforced inflow carry the free-stream value (the
/// partition of unity makes that coefficient assignment the exact boundary
/// projection of uniform data), and everything else is unknown.
pub fn build_dof_map(mesh: &SpaceTimeMesh, free_stream: [f64; 2]) -> Result<DofMap> {
    let n_dof = FIELDS * mesh.n_global;
    let mut class = vec![DofClass::Free(usize::MAX); n_dof];

    for &(follower, leader) in &mesh.periodic_pairs {
        for c in 0..FIELDS {
            class[FIELDS * follower + c] = DofClass::Follower(FIELDS * leader + c);
        }
    }
    for &(_, leader) in &mesh.periodic_pairs {
        for c in 0..FIELDS {
            if matches!(class[FIELDS * leader + c], DofClass::Follower(_)) {
                return Err(Error::Structure(
                    "periodic leader is itself a follower".into(),
                ));
            }
        }
    }

    for face in &mesh.faces {
        match face.tag {
            FaceTag::DirichletExterior => {}
            FaceTag::UnclassifiedExterior => {
                return Err(Error::Structure(
                    "exterior faces not classified; split them into inflow and outflow first"
                        .into(),
                ))
            }
            _ => continue,
        }
        let el = &mesh.elements[face.element];
        let patch = &mesh.patches[el.patch];
        let degrees = [patch.kvs[0].p, patch.kvs[1].p, patch.kvs[2].p];
        for idx in face_control_points(degrees, el.spans, face.dir, face.end) {
            let g = mesh.cp_map[el.patch][patch.grid_index(&idx)];
            for c in 0..2 {
                let dof = FIELDS * g + c;
                let target = match class[dof] {
                    DofClass::Follower(leader) => leader,
                    _ => dof,
                };
                class[target] = DofClass::Prescribed(free_stream[c]);
            }
        }
    }

    let mut n_free = 0;
    let mut free_to_dof = Vec::new();
    for (dof, cl) in class.iter_mut().enumerate() {
        if let DofClass::Free(_) = cl {
            *cl = DofClass::Free(n_free);
            free_to_dof.push(dof);
            n_free += 1;
        }
    }

    Ok(DofMap {
        class,
        n_free,
        free_to_dof,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{
        build_box_mesh, build_spacetime_mesh, BoxMeshSpec, MotionSpec, SpaceTimeMesh,
    };
    use rand::{Rng, SeedableRng};

    fn box_prism(nx: usize, ny: usize) -> SpaceTimeMesh {
        let spatial = build_box_mesh(&BoxMeshSpec {
            nx,
            ny,
            ..Default::default()
        })
        .unwrap();
        build_spacetime_mesh(&spatial, &MotionSpec::stationary(1.0), 2, 1, 1.0).unwrap()
    }

    fn tag_all_exterior(mesh: &mut SpaceTimeMesh, tag: FaceTag) {
        for face in &mut mesh.faces {
            if face.tag == FaceTag::UnclassifiedExterior {
                face.tag = tag;
            }
        }
    }

    #[test]
    fn all_dirichlet_box_frees_only_interior_velocities() {
        let mut mesh = box_prism(3, 3);
        tag_all_exterior(&mut mesh, FaceTag::DirichletExterior);
        let map = build_dof_map(&mesh, [1.0, 0.0]).unwrap();
        // 5x5 spatial control net, 3 temporal levels, last level periodic.
        let n_sp = 25;
        let interior = 9;
        let levels_free = 2;
        let expected = 2 * interior * levels_free + n_sp * levels_free;
        assert_eq!(map.n_free, expected);
        for &dof in &map.free_to_dof {
            if dof % FIELDS == 2 {
                continue;
            }
            let g = dof / FIELDS;
            let sp = g % n_sp;
            let (i, j) = (sp % 5, sp / 5);
            assert!(i > 0 && i < 4 && j > 0 && j < 4, "boundary dof {dof} free");
        }
    }

    #[test]
    fn follower_count_matches_one_temporal_level() {
        let mut mesh = box_prism(2, 2);
        assert_eq!(mesh.periodic_pairs.len(), mesh.spatial.n_global);
        tag_all_exterior(&mut mesh, FaceTag::DirichletExterior);
        let map = build_dof_map(&mesh, [1.0, 0.0]).unwrap();
        let followers = map
            .class
            .iter()
            .filter(|c| matches!(c, DofClass::Follower(_)))
            .count();
        assert_eq!(followers, FIELDS * mesh.spatial.n_global);
    }

    #[test]
    fn prescribed_follower_resolves_to_the_leader_value() {
        let mut mesh = box_prism(2, 2);
        tag_all_exterior(&mut mesh, FaceTag::DirichletExterior);
        let map = build_dof_map(&mesh, [0.7, -0.2]).unwrap();
        // A boundary control point on the last temporal level is both a
        // periodic follower and inside the strong boundary set.
        let &(follower, _) = mesh
            .periodic_pairs
            .iter()
            .find(|&&(f, _)| {
                let sp = f % mesh.spatial.n_global;
                sp % 4 == 0
            })
            .unwrap();
        assert!(matches!(
            map.class[FIELDS * follower],
            DofClass::Follower(_)
        ));
        match map.resolve(FIELDS * follower) {
            Resolved::Fixed(v) => assert_eq!(v, 0.7),
            Resolved::Free(_) => panic!("expected prescribed"),
        }
        match map.resolve(FIELDS * follower + 1) {
            Resolved::Fixed(v) => assert_eq!(v, -0.2),
            Resolved::Free(_) => panic!("expected prescribed"),
        }
    }

    #[test]
    fn expansion_satisfies_constraints_and_round_trips() {
        let mut mesh = box_prism(3, 2);
        tag_all_exterior(&mut mesh, FaceTag::DirichletExterior);
        let map = build_dof_map(&mesh, [2.0, 0.5]).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let free = DVector::from_fn(map.n_free, |_, _| rng.random_range(-1.0..1.0));
        let mut full = DVector::zeros(map.class.len());
        map.expand(&free, &mut full);
        for (dof, cl) in map.class.iter().enumerate() {
            match *cl {
                DofClass::Free(r) => assert_eq!(full[dof], free[r]),
                DofClass::Prescribed(v) => assert_eq!(full[dof], v),
                DofClass::Follower(leader) => assert_eq!(full[dof], full[leader]),
            }
        }
        assert_eq!(map.restrict(&full), free);
    }

    #[test]
    fn unclassified_exterior_rejected() {
        let mesh = box_prism(2, 2);
        assert!(matches!(
            build_dof_map(&mesh, [1.0, 0.0]),
            Err(Error::Structure(_))
        ));
    }
}
