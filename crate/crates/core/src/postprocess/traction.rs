use super::flux::AuxiliaryFlux;
use super::sample::{face_point, leader_map, patch_tables, ElementCoeffs};
use crate::formulation::{element_quadrature, face_quadrature, tau_boundary, WeakForm};
use crate::mesh::{FaceTag, SpaceTimeMesh};
use crate::nurbs::{eval_basis_ders, KnotVector};
use crate::{Error, Result};
use nalgebra::{DMatrix, DVector};

/// Wall force history over one period, expanded in the temporal basis with
/// the periodic end function folded onto the start.
#[derive(Debug, Clone)]
pub struct TractionSeries {
    pub kv_t: KnotVector,
    pub period: f64,
    pub chord: f64,
    pub u_ref: [f64; 2],
    /// Wall arc length; constant because the mesh moves rigidly.
    pub arc_length: f64,
    /// Traction coefficients per direction, symmetric viscous flux.
    pub psi: [Vec<f64>; 2],
    /// Variant with the one-sided velocity gradient flux.
    pub psi_grad: [Vec<f64>; 2],
    /// Relative residual of the temporal mass solves.
    pub solve_residual: f64,
    /// Largest sampled force difference between the two viscous forms.
    pub viscous_gap: f64,
}

/// Dimensionless force pair normalized by chord and reference velocity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForceCoefficients {
    pub cd: f64,
    pub cl: f64,
}

/// Drag along the flow direction and lift perpendicular to it, normalized
/// by the dynamic head over the chord.
pub fn force_coefficients(
    force: [f64; 2],
    rho: f64,
    chord: f64,
    u_ref: f64,
    flow_dir: [f64; 2],
) -> ForceCoefficients {
    assert!(rho > 0.0 && chord > 0.0 && u_ref > 0.0);
    let len = (flow_dir[0] * flow_dir[0] + flow_dir[1] * flow_dir[1]).sqrt();
    assert!(len > 0.0);
    let d = [flow_dir[0] / len, flow_dir[1] / len];
    let scale = 2.0 / (rho * chord * u_ref * u_ref);
    ForceCoefficients {
        cd: scale * (force[0] * d[0] + force[1] * d[1]),
        cl: scale * (-force[0] * d[1] + force[1] * d[0]),
    }
}

impl TractionSeries {
    fn n_folded(&self) -> usize {
        self.kv_t.n_basis() - 1
    }

    fn eval(&self, coeffs: &[Vec<f64>; 2], t: f64) -> [f64; 2] {
        let mut z = t / self.period;
        if !(0.0..=1.0).contains(&z) {
            z = z.rem_euclid(1.0);
        }
        let ev = eval_basis_ders(&self.kv_t, z, 0).expect("wrapped parameter is in domain");
        let p = self.kv_t.p;
        let n = self.n_folded();
        let mut psi = [0.0; 2];
        for (j, &v) in ev.values().iter().enumerate() {
            let mut a = ev.global_index(p, j);
            if a == n {
                a = 0;
            }
            psi[0] += v * coeffs[0][a];
            psi[1] += v * coeffs[1][a];
        }
        [self.arc_length * psi[0], self.arc_length * psi[1]]
    }

    /// Total wall force at time t, from the symmetric viscous flux.
    pub fn force_at(&self, t: f64) -> [f64; 2] {
        self.eval(&self.psi, t)
    }

    /// Force from the one-sided gradient flux variant.
    pub fn force_at_grad(&self, t: f64) -> [f64; 2] {
        self.eval(&self.psi_grad, t)
    }

    /// Drag and lift coefficients at time t against the stored reference
    /// velocity; requires a nonzero reference.
    pub fn coefficients_at(&self, t: f64) -> ForceCoefficients {
        let u = (self.u_ref[0] * self.u_ref[0] + self.u_ref[1] * self.u_ref[1]).sqrt();
        force_coefficients(self.force_at(t), 1.0, self.chord, u, self.u_ref)
    }
}

/// Temporal moments of the wall integrands: boundary mass against the folded
/// temporal basis, load vectors for both viscous flux forms, and the total
/// surface measure.
struct WallMoments {
    mass: DMatrix<f64>,
    b_sym: [DVector<f64>; 2],
    b_grad: [DVector<f64>; 2],
    measure: f64,
}

fn wall_moments(
    state: &DVector<f64>,
    mesh: &SpaceTimeMesh,
    wf: &WeakForm,
) -> Result<WallMoments> {
    let n_basis = mesh.kv_t.n_basis();
    if n_basis != mesh.n_levels {
        return Err(Error::Structure(
            "temporal basis does not match the mesh level count".into(),
        ));
    }
    let n = n_basis - 1;
    let p_t = mesh.kv_t.p;
    let nu = wf.props.viscosity;
    let tables = patch_tables(mesh)?;
    let mut coeffs = ElementCoeffs::default();

    let mut mass = DMatrix::<f64>::zeros(n, n);
    let mut b_sym = [DVector::<f64>::zeros(n), DVector::<f64>::zeros(n)];
    let mut b_grad = [DVector::<f64>::zeros(n), DVector::<f64>::zeros(n)];
    let mut measure = 0.0;
    let mut seen_wall = false;

    for face in &mesh.faces {
        if face.tag != FaceTag::Wall {
            continue;
        }
        seen_wall = true;
        let el = &mesh.elements[face.element];
        let patch = &mesh.patches[el.patch];
        coeffs.fill(mesh, el, state);
        let fqs = face_quadrature(
            patch,
            &tables[el.patch],
            el,
            face.element,
            face.dir,
            face.end,
            mesh.s,
        )?;
        for qp in &fqs {
            let pt = face_point(&qp.basis, &coeffs);
            let nsp = qp.normal.n_sp;
            let gm = &qp.metrics.g_sp;
            let n_g_n = nsp[0] * (gm[(0, 0)] * nsp[0] + gm[(0, 1)] * nsp[1])
                + nsp[1] * (gm[(1, 0)] * nsp[0] + gm[(1, 1)] * nsp[1]);
            let tau_b = tau_boundary(nu, n_g_n);
            let mis = [
                pt.u[0] - qp.wall_velocity[0],
                pt.u[1] - qp.wall_velocity[1],
            ];
            let mut integ_sym = [0.0; 2];
            let mut integ_grad = [0.0; 2];
            for i in 0..2 {
                let dun = pt.grad_u[i][0] * nsp[0] + pt.grad_u[i][1] * nsp[1];
                let dun_t = pt.grad_u[0][i] * nsp[0] + pt.grad_u[1][i] * nsp[1];
                integ_sym[i] = pt.p * nsp[i] - nu * (dun + dun_t) + tau_b * mis[i];
                integ_grad[i] = pt.p * nsp[i] - nu * dun + tau_b * mis[i];
            }
            measure += qp.mu;

            let z = (qp.basis.x[2] / (mesh.s * mesh.period)).clamp(0.0, 1.0);
            let ev = eval_basis_ders(&mesh.kv_t, z, 0)?;
            for (ja, &va) in ev.values().iter().enumerate() {
                let mut a = ev.global_index(p_t, ja);
                if a == n {
                    a = 0;
                }
                let wa = qp.mu * va;
                for i in 0..2 {
                    b_sym[i][a] += wa * integ_sym[i];
                    b_grad[i][a] += wa * integ_grad[i];
                }
                for (jb, &vb) in ev.values().iter().enumerate() {
                    let mut b = ev.global_index(p_t, jb);
                    if b == n {
                        b = 0;
                    }
                    mass[(a, b)] += wa * vb;
                }
            }
        }
    }
    if !seen_wall {
        return Err(Error::Structure(
            "mesh carries no wall faces; traction undefined".into(),
        ));
    }
    Ok(WallMoments {
        mass,
        b_sym,
        b_grad,
        measure,
    })
}

/// Project the wall traction onto the temporal basis by inverting the
/// boundary mass matrix per direction.
pub fn conservative_traction(
    state: &DVector<f64>,
    mesh: &SpaceTimeMesh,
    wf: &WeakForm,
    free_stream: [f64; 2],
) -> Result<TractionSeries> {
    let moments = wall_moments(state, mesh, wf)?;
    let chol = moments.mass.clone().cholesky().ok_or_else(|| {
        Error::Singular("wall temporal mass matrix; degenerate wall parametrization".into())
    })?;

    let mut solve_residual: f64 = 0.0;
    let mut solve = |rhs: &DVector<f64>| -> Vec<f64> {
        let x = chol.solve(rhs);
        let r = (&moments.mass * &x - rhs).amax();
        let scale = rhs.amax().max(1e-300);
        solve_residual = solve_residual.max(r / scale);
        x.as_slice().to_vec()
    };
    let psi = [solve(&moments.b_sym[0]), solve(&moments.b_sym[1])];
    let psi_grad = [solve(&moments.b_grad[0]), solve(&moments.b_grad[1])];

    let mut series = TractionSeries {
        kv_t: mesh.kv_t.clone(),
        period: mesh.period,
        chord: mesh.spatial.chord,
        u_ref: free_stream,
        arc_length: moments.measure / mesh.period,
        psi,
        psi_grad,
        solve_residual,
        viscous_gap: 0.0,
    };
    let samples = 64;
    let mut gap: f64 = 0.0;
    for k in 0..=samples {
        let t = mesh.period * k as f64 / samples as f64;
        let fs = series.force_at(t);
        let fg = series.force_at_grad(t);
        gap = gap.max((fs[0] - fg[0]).abs().max((fs[1] - fg[1]).abs()));
    }
    series.viscous_gap = gap;
    Ok(series)
}

/// Both sides of the temporally localized force identity, per temporal
/// basis function and direction: the far-field multiplier, body force, and
/// backflow members against the direct wall integrals, plus the complete
/// interior momentum account for the closed version.
#[derive(Debug, Clone)]
pub struct TractionBalance {
    /// Far-field multiplier moments.
    pub lhs: [Vec<f64>; 2],
    /// Wall traction moments with the symmetric viscous flux.
    pub rhs: [Vec<f64>; 2],
    /// Residual row sums per temporal function: the full discrete momentum
    /// account, including convective and stabilization members the wall
    /// integrals alone omit.
    pub interior: [Vec<f64>; 2],
    /// Largest moment mismatch of the identity as printed.
    pub gap: f64,
    /// Largest mismatch against the interior account; at convergence this
    /// vanishes for any state.
    pub gap_closed: f64,
}

/// Check that the wall force series is conserved: what the far-field
/// multiplier accounts for, corrected by body force and backflow, matches
/// the direct wall integrals in every temporal moment.
pub fn traction_balance(
    state: &DVector<f64>,
    mesh: &SpaceTimeMesh,
    wf: &WeakForm,
    flux: &AuxiliaryFlux,
) -> Result<TractionBalance> {
    let moments = wall_moments(state, mesh, wf)?;
    let n = mesh.kv_t.n_basis() - 1;
    let p_t = mesh.kv_t.p;
    let tables = patch_tables(mesh)?;
    let rep = leader_map(mesh);
    let mut coeffs = ElementCoeffs::default();
    let mut lambda_moment = [vec![0.0; n], vec![0.0; n]];
    let mut extra = [vec![0.0; n], vec![0.0; n]];

    let temporal = |x2: f64| -> Result<Vec<(usize, f64)>> {
        let z = (x2 / (mesh.s * mesh.period)).clamp(0.0, 1.0);
        let ev = eval_basis_ders(&mesh.kv_t, z, 0)?;
        Ok(ev
            .values()
            .iter()
            .enumerate()
            .map(|(j, &v)| {
                let mut a = ev.global_index(p_t, j);
                if a == n {
                    a = 0;
                }
                (a, v)
            })
            .collect())
    };

    for face in &mesh.faces {
        let dirichlet = match face.tag {
            FaceTag::DirichletExterior => true,
            FaceTag::NeumannExterior => false,
            _ => continue,
        };
        let el = &mesh.elements[face.element];
        let patch = &mesh.patches[el.patch];
        coeffs.fill(mesh, el, state);
        let fqs = face_quadrature(
            patch,
            &tables[el.patch],
            el,
            face.element,
            face.dir,
            face.end,
            mesh.s,
        )?;
        let locs: Vec<Option<usize>> =
            coeffs.gids.iter().map(|&g| flux.index_of(rep[g])).collect();
        for qp in &fqs {
            let weights = temporal(qp.basis.x[2])?;
            if dirichlet {
                let mut lam = [0.0; 2];
                for a in 0..qp.basis.n {
                    if let Some(k) = locs[a] {
                        lam[0] += qp.basis.val[a] * flux.lambda[k][0];
                        lam[1] += qp.basis.val[a] * flux.lambda[k][1];
                    }
                }
                for &(a, v) in &weights {
                    lambda_moment[0][a] += qp.mu * v * lam[0];
                    lambda_moment[1][a] += qp.mu * v * lam[1];
                }
            } else {
                let pt = face_point(&qp.basis, &coeffs);
                let nsp = qp.normal.n_sp;
                let u_n = pt.u[0] * nsp[0] + pt.u[1] * nsp[1] - qp.normal.v_n;
                let u_n_minus = 0.5 * (u_n - u_n.abs());
                for &(a, v) in &weights {
                    extra[0][a] += qp.mu * v * u_n_minus * pt.u[0];
                    extra[1][a] += qp.mu * v * u_n_minus * pt.u[1];
                }
            }
        }
    }

    if let Some(bf) = wf.body_force {
        for (e, el) in mesh.elements.iter().enumerate() {
            let qps =
                element_quadrature(&mesh.patches[el.patch], &tables[el.patch], el, e, mesh.s)?;
            for qp in &qps {
                let f = bf(&qp.basis.x);
                for &(a, v) in &temporal(qp.basis.x[2])? {
                    extra[0][a] += qp.mu * v * f[0];
                    extra[1][a] += qp.mu * v * f[1];
                }
            }
        }
    }

    // Complete interior account: residual row sums per temporal function.
    // Followers are already folded into their leaders, so bucketing every
    // level through the fold map counts each row once.
    let steady = WeakForm {
        step: None,
        ..wf.clone()
    };
    let raw = crate::solver::raw_residual(mesh, &steady, state, state)?;
    let n_sp = mesh.spatial.n_global;
    let mut interior = [vec![0.0; n], vec![0.0; n]];
    for g in 0..mesh.n_global {
        let mut a = g / n_sp;
        if a == n {
            a = 0;
        }
        for i in 0..2 {
            interior[i][a] += raw[crate::solver::FIELDS * g + i];
        }
    }

    let mut gap: f64 = 0.0;
    let mut gap_closed: f64 = 0.0;
    let rhs = [
        moments.b_sym[0].as_slice().to_vec(),
        moments.b_sym[1].as_slice().to_vec(),
    ];
    for i in 0..2 {
        for a in 0..n {
            gap = gap.max((lambda_moment[i][a] + extra[i][a] - rhs[i][a]).abs());
            gap_closed = gap_closed.max((lambda_moment[i][a] - interior[i][a]).abs());
        }
    }
    Ok(TractionBalance {
        lhs: lambda_moment,
        rhs,
        interior,
        gap,
        gap_closed,
    })
}
