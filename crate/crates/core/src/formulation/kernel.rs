use super::basis::{eval_local_basis, LocalBasis};
use super::stab::{tau_boundary, tau_continuity, tau_momentum};
use crate::mesh::{boundary_normal, compute_metrics, BoundaryNormal, Element, MetricPair, PatchTables};
use crate::nurbs::NurbsPatch;
use crate::{Error, Result};
use nalgebra::{DMatrix, Vector3};

/// Fluid constants of a case.
#[derive(Debug, Clone, Copy)]
pub struct FlowProperties {
    /// Kinematic viscosity.
    pub viscosity: f64,
}

/// Pseudo-transient continuation step: backward differences in pseudo-time
/// for the velocity plus an artificial-compressibility pressure derivative.
#[derive(Debug, Clone, Copy)]
pub struct PseudoStep {
    pub dtheta: f64,
    /// Artificial speed of sound.
    pub sound: f64,
}

/// Quadrature point of a volume element.
#[derive(Debug, Clone)]
pub struct QpData {
    pub basis: LocalBasis,
    /// Physical measure (area x time) carried by this point.
    pub mu: f64,
    pub metrics: MetricPair,
}

/// Quadrature point of a boundary face.
#[derive(Debug, Clone)]
pub struct FaceQp {
    pub basis: LocalBasis,
    /// Surface measure (arc length x time) carried by this point.
    pub mu: f64,
    pub normal: BoundaryNormal,
    pub metrics: MetricPair,
    /// Velocity of the mesh boundary at this point.
    pub wall_velocity: [f64; 2],
}

/// Element coefficient vectors gathered from the global state.
#[derive(Debug, Clone, Copy)]
pub struct LocalState<'a> {
    pub u: &'a [[f64; 2]],
    pub p: &'a [f64],
    pub u_prev: &'a [[f64; 2]],
    pub p_prev: &'a [f64],
}

/// Element residual and tangent, interleaved (u1, u2, p) per control point.
/// Kernels accumulate into it; the caller sizes and clears it with `reset`.
#[derive(Debug, Clone)]
pub struct ElementMatrices {
    pub residual: Vec<f64>,
    pub jacobian: DMatrix<f64>,
}

impl ElementMatrices {
    pub fn new() -> Self {
        ElementMatrices {
            residual: Vec::new(),
            jacobian: DMatrix::zeros(0, 0),
        }
    }

    pub fn reset(&mut self, n_dof: usize) {
        self.residual.clear();
        self.residual.resize(n_dof, 0.0);
        if self.jacobian.nrows() != n_dof {
            self.jacobian = DMatrix::zeros(n_dof, n_dof);
        } else {
            self.jacobian.fill(0.0);
        }
    }
}

impl Default for ElementMatrices {
    fn default() -> Self {
        Self::new()
    }
}

/// Local basis index to patch control point index for one element, in the
/// same order the local basis uses (first direction fastest).
pub fn element_cps(patch: &NurbsPatch, el: &Element) -> Vec<usize> {
    let p: Vec<usize> = patch.kvs.iter().map(|kv| kv.p).collect();
    let first: Vec<usize> = (0..3).map(|d| el.spans[d] - p[d]).collect();
    let mut out = Vec::with_capacity((p[0] + 1) * (p[1] + 1) * (p[2] + 1));
    for j2 in 0..=p[2] {
        for j1 in 0..=p[1] {
            for j0 in 0..=p[0] {
                out.push(patch.grid_index(&[first[0] + j0, first[1] + j1, first[2] + j2]));
            }
        }
    }
    out
}

/// Evaluate the quadrature data of one volume element from the cached
/// per-direction tables.
pub fn element_quadrature(
    patch: &NurbsPatch,
    tables: &PatchTables,
    el: &Element,
    el_index: usize,
    s: f64,
) -> Result<Vec<QpData>> {
    let sq = [
        tables.dirs[0].by_span(el.spans[0]),
        tables.dirs[1].by_span(el.spans[1]),
        tables.dirs[2].by_span(el.spans[2]),
    ];
    let dxi = [
        el.ranges[0].1 - el.ranges[0].0,
        el.ranges[1].1 - el.ranges[1].0,
        el.ranges[2].1 - el.ranges[2].0,
    ];
    let nq = [sq[0].xi.len(), sq[1].xi.len(), sq[2].xi.len()];
    let mut out = Vec::with_capacity(nq[0] * nq[1] * nq[2]);
    for q2 in 0..nq[2] {
        for q1 in 0..nq[1] {
            for q0 in 0..nq[0] {
                let dirs = [sq[0].dir_eval(q0), sq[1].dir_eval(q1), sq[2].dir_eval(q2)];
                let basis = eval_local_basis(patch, &dirs, 2, s, el_index)?;
                if basis.det <= 0.0 {
                    return Err(Error::Geometry {
                        element: el_index,
                        detail: format!("nonpositive Jacobian determinant {:e}", basis.det),
                    });
                }
                let metrics = compute_metrics(&basis.jst, dxi, s, el_index)?;
                let mu = sq[0].wdx[q0] * sq[1].wdx[q1] * sq[2].wdx[q2] * basis.det / s;
                out.push(QpData { basis, mu, metrics });
            }
        }
    }
    Ok(out)
}

/// Evaluate the quadrature data of one boundary face (normal direction fixed
/// at an end, tensor rule over the remaining two directions).
pub fn face_quadrature(
    patch: &NurbsPatch,
    tables: &PatchTables,
    el: &Element,
    el_index: usize,
    dir: usize,
    end: usize,
    s: f64,
) -> Result<Vec<FaceQp>> {
    let tang: Vec<usize> = (0..3).filter(|&d| d != dir).collect();
    let (t1, t2) = (tang[0], tang[1]);
    let sq1 = tables.dirs[t1].by_span(el.spans[t1]);
    let sq2 = tables.dirs[t2].by_span(el.spans[t2]);
    let bb = &tables.bounds[dir][end];
    let dxi = [
        el.ranges[0].1 - el.ranges[0].0,
        el.ranges[1].1 - el.ranges[1].0,
        el.ranges[2].1 - el.ranges[2].0,
    ];
    let mut out = Vec::with_capacity(sq1.xi.len() * sq2.xi.len());
    for q2 in 0..sq2.xi.len() {
        for q1 in 0..sq1.xi.len() {
            let mut dirs = [bb.dir_eval(), bb.dir_eval(), bb.dir_eval()];
            dirs[t1] = sq1.dir_eval(q1);
            dirs[t2] = sq2.dir_eval(q2);
            let basis = eval_local_basis(patch, &dirs, 2, s, el_index)?;
            let normal = boundary_normal(&basis.jst, dir, end, s)?;
            let metrics = compute_metrics(&basis.jst, dxi, s, el_index)?;
            let mu = sq1.wdx[q1] * sq2.wdx[q2] * normal.gamma_dt;
            let jst = &basis.jst;
            let scale = jst[(2, 2)].abs();
            if jst[(2, 0)].abs() > 1e-10 * scale || jst[(2, 1)].abs() > 1e-10 * scale {
                return Err(Error::Structure(
                    "face of a non-extruded element; wall velocity undefined".into(),
                ));
            }
            let wall_velocity = [
                s * jst[(0, 2)] / jst[(2, 2)],
                s * jst[(1, 2)] / jst[(2, 2)],
            ];
            out.push(FaceQp {
                basis,
                mu,
                normal,
                metrics,
                wall_velocity,
            });
        }
    }
    Ok(out)
}

/// Discrete weak form: Galerkin, pseudo-transient, multiscale stabilization,
/// weak wall conditions, and outflow stabilization.
#[derive(Clone)]
pub struct WeakForm {
    pub props: FlowProperties,
    /// None evaluates the steady form (converged pseudo-time state).
    pub step: Option<PseudoStep>,
    pub s: f64,
    /// Drop the viscous Laplacian in the strong residual (linear bases).
    pub use_laplacian: bool,
    pub body_force: Option<fn(&[f64; 3]) -> [f64; 2]>,
}

/// State gathered at one quadrature point.
struct PointState {
    u: [f64; 2],
    p: f64,
    grad_u: [[f64; 3]; 2],
    grad_p: [f64; 2],
    lap_u: [f64; 2],
    pt_u: [f64; 2],
    pt_p: f64,
}

impl WeakForm {
    fn gather(&self, basis: &LocalBasis, state: &LocalState) -> PointState {
        let mut ps = PointState {
            u: [0.0; 2],
            p: 0.0,
            grad_u: [[0.0; 3]; 2],
            grad_p: [0.0; 2],
            lap_u: [0.0; 2],
            pt_u: [0.0; 2],
            pt_p: 0.0,
        };
        for a in 0..basis.n {
            let v = basis.val[a];
            let g = basis.grad[a];
            let ua = state.u[a];
            ps.p += v * state.p[a];
            for c in 0..2 {
                ps.u[c] += v * ua[c];
                for k in 0..3 {
                    ps.grad_u[c][k] += g[k] * ua[c];
                }
                ps.lap_u[c] += basis.lap[a] * ua[c];
                ps.grad_p[c] += g[c] * state.p[a];
            }
            ps.pt_u[0] += v * (ua[0] - state.u_prev[a][0]);
            ps.pt_u[1] += v * (ua[1] - state.u_prev[a][1]);
            ps.pt_p += v * (state.p[a] - state.p_prev[a]);
        }
        ps
    }

    /// Strong momentum and continuity residuals at one quadrature point.
    pub fn strong_residual(&self, basis: &LocalBasis, state: &LocalState) -> ([f64; 2], f64) {
        let ps = self.gather(basis, state);
        let nu = self.props.viscosity;
        let f = self.body_force.map_or([0.0; 2], |bf| bf(&basis.x));
        let mut r_m = [0.0; 2];
        for c in 0..2 {
            let conv = ps.grad_u[c][2] + ps.u[0] * ps.grad_u[c][0] + ps.u[1] * ps.grad_u[c][1];
            let lap = if self.use_laplacian { ps.lap_u[c] } else { 0.0 };
            r_m[c] = conv + ps.grad_p[c] - nu * lap - f[c];
        }
        let r_c = ps.grad_u[0][0] + ps.grad_u[1][1];
        (r_m, r_c)
    }

    /// Stabilization parameters per quadrature point from the current state.
    pub fn stab(&self, qps: &[QpData], state: &LocalState) -> Vec<[f64; 2]> {
        let nu = self.props.viscosity;
        qps.iter()
            .map(|qp| {
                let mut u = [0.0; 2];
                for a in 0..qp.basis.n {
                    u[0] += qp.basis.val[a] * state.u[a][0];
                    u[1] += qp.basis.val[a] * state.u[a][1];
                }
                let u_hat = Vector3::new(u[0], u[1], self.s);
                let tm = tau_momentum(&u_hat, &qp.metrics.g_hat, nu, qp.metrics.g_dd);
                let tc = tau_continuity(tm, qp.metrics.tr_g);
                [tm, tc]
            })
            .collect()
    }

    /// Volume terms with freshly computed stabilization parameters. The
    /// tangent includes the variation of the parameters themselves, so it is
    /// the exact derivative of the residual this function returns.
    pub fn volume(&self, qps: &[QpData], state: &LocalState, out: &mut ElementMatrices) {
        let stab = self.stab(qps, state);
        self.volume_with_stab(qps, state, &stab, out);
        self.tau_variation(qps, state, &stab, out);
    }

    /// Adds the tangent blocks from the velocity dependence of the
    /// stabilization parameters. Each modeled term scales with a power of
    /// tau, so its variation is the term times that power times
    /// d(tau)/tau = -tau^2 (G_hat u_hat) . du.
    fn tau_variation(
        &self,
        qps: &[QpData],
        state: &LocalState,
        stab: &[[f64; 2]],
        out: &mut ElementMatrices,
    ) {
        let n = qps[0].basis.n;
        let nu = self.props.viscosity;
        for (qp, tau) in qps.iter().zip(stab) {
            let basis = &qp.basis;
            let ps = self.gather(basis, state);
            let f = self.body_force.map_or([0.0; 2], |bf| bf(&basis.x));
            let tau_m = tau[0];
            let mu = qp.mu;

            let mut r_m = [0.0; 2];
            for c in 0..2 {
                let conv =
                    ps.grad_u[c][2] + ps.u[0] * ps.grad_u[c][0] + ps.u[1] * ps.grad_u[c][1];
                let lap = if self.use_laplacian { ps.lap_u[c] } else { 0.0 };
                r_m[c] = conv + ps.grad_p[c] - nu * lap - f[c];
            }
            let r_c = ps.grad_u[0][0] + ps.grad_u[1][1];
            let u_prime = [-tau_m * r_m[0], -tau_m * r_m[1]];
            let p_prime = -tau[1] * r_c;

            let u_hat = Vector3::new(ps.u[0], ps.u[1], self.s);
            let gh = qp.metrics.g_hat * u_hat;
            // Relative change of tau_m per unit velocity coefficient.
            let coef = [-tau_m * tau_m * gh[0], -tau_m * tau_m * gh[1]];

            for a in 0..n {
                let ga = basis.grad[a];
                let adv_a = ps.u[0] * ga[0] + ps.u[1] * ga[1] + ga[2];
                let upg_a = u_prime[0] * ga[0] + u_prime[1] * ga[1];
                let row = 3 * a;
                for b in 0..n {
                    let vb = basis.val[b];
                    let col = 3 * b;
                    for e in 0..2 {
                        let w = mu * coef[e] * vb;
                        for c in 0..2 {
                            // One power of tau in the streamline and cross
                            // terms, two in the Reynolds term; the grad-div
                            // term scales inversely through tau_c.
                            let sens = -adv_a * u_prime[c] - ps.u[c] * upg_a
                                - 2.0 * u_prime[c] * upg_a
                                + ga[c] * p_prime;
                            out.jacobian[(row + c, col + e)] += w * sens;
                        }
                        out.jacobian[(row + 2, col + e)] += w * (-upg_a);
                    }
                }
            }
        }
    }

    /// Volume terms with the given stabilization parameters. The parameters
    /// are held fixed inside the tangent matrix, so the tangent is exact for
    /// this function and Picard-like in the parameters themselves.
    pub fn volume_with_stab(
        &self,
        qps: &[QpData],
        state: &LocalState,
        stab: &[[f64; 2]],
        out: &mut ElementMatrices,
    ) {
        let n = qps[0].basis.n;
        let nu = self.props.viscosity;
        let (inv_dtheta, inv_a2) = match self.step {
            Some(st) => (1.0 / st.dtheta, 1.0 / (st.sound * st.sound)),
            None => (0.0, 0.0),
        };

        let mut adv = vec![0.0; n];
        let mut lop = vec![0.0; n];

        for (qp, tau) in qps.iter().zip(stab) {
            let basis = &qp.basis;
            let ps = self.gather(basis, state);
            let f = self.body_force.map_or([0.0; 2], |bf| bf(&basis.x));
            let (tau_m, tau_c) = (tau[0], tau[1]);
            let mu = qp.mu;

            let mut r_m = [0.0; 2];
            let mut conv = [0.0; 2];
            for c in 0..2 {
                conv[c] =
                    ps.grad_u[c][2] + ps.u[0] * ps.grad_u[c][0] + ps.u[1] * ps.grad_u[c][1];
                let lap = if self.use_laplacian { ps.lap_u[c] } else { 0.0 };
                r_m[c] = conv[c] + ps.grad_p[c] - nu * lap - f[c];
            }
            let r_c = ps.grad_u[0][0] + ps.grad_u[1][1];
            let u_prime = [-tau_m * r_m[0], -tau_m * r_m[1]];
            let p_prime = -tau_c * r_c;

            // Space-time advective derivative of each basis function, and
            // its strong momentum operator for the tangent.
            for a in 0..n {
                let g = basis.grad[a];
                adv[a] = ps.u[0] * g[0] + ps.u[1] * g[1] + g[2];
                let lap = if self.use_laplacian { basis.lap[a] } else { 0.0 };
                lop[a] = adv[a] - nu * lap;
            }

            for a in 0..n {
                let va = basis.val[a];
                let ga = basis.grad[a];
                let upg_a = u_prime[0] * ga[0] + u_prime[1] * ga[1];
                let row = 3 * a;

                for c in 0..2 {
                    // Galerkin momentum, pseudo-time, viscous, and pressure
                    // terms, then the modeled fine-scale terms.
                    let galerkin = va * (conv[c] + inv_dtheta * ps.pt_u[c] - f[c])
                        + nu * (ga[0] * ps.grad_u[c][0] + ga[1] * ps.grad_u[c][1])
                        - ga[c] * ps.p;
                    let supg = -adv[a] * u_prime[c];
                    let cross = -ps.u[c] * upg_a;
                    let reynolds = -u_prime[c] * upg_a;
                    let lsic = -ga[c] * p_prime;
                    out.residual[row + c] += mu * (galerkin + supg + cross + reynolds + lsic);
                }
                out.residual[row + 2] +=
                    mu * (va * (r_c + inv_a2 * inv_dtheta * ps.pt_p) - (ga[0] * u_prime[0] + ga[1] * u_prime[1]));

                for b in 0..n {
                    let vb = basis.val[b];
                    let gb = basis.grad[b];
                    let col = 3 * b;
                    let gab = ga[0] * gb[0] + ga[1] * gb[1];
                    // Strong-residual variation against a velocity column:
                    // diagonal operator part plus the velocity-gradient part.
                    let s_diag = lop[b];
                    // Variation contracted with the test gradient, split into
                    // the diagonal part and the sum over components.
                    let mut sg = [0.0; 2];
                    for e in 0..2 {
                        sg[e] = s_diag * ga[e]
                            + vb * (ps.grad_u[0][e] * ga[0] + ps.grad_u[1][e] * ga[1]);
                    }

                    for c in 0..2 {
                        for e in 0..2 {
                            let delta = if c == e { 1.0 } else { 0.0 };
                            let dr = delta * s_diag + vb * ps.grad_u[c][e];
                            // Galerkin convection with pseudo-time mass,
                            // then viscous stiffness.
                            let mut k = va
                                * (delta * (adv[b] + inv_dtheta * vb) + vb * ps.grad_u[c][e]);
                            k += delta * nu * gab;
                            // Streamline term: test advection varies with the
                            // velocity, and the fine scale with the residual.
                            k += -vb * ga[e] * u_prime[c] + adv[a] * tau_m * dr;
                            // Cross term.
                            k += -delta * vb * upg_a + ps.u[c] * tau_m * sg[e];
                            // Reynolds term.
                            k += tau_m * dr * upg_a + u_prime[c] * tau_m * sg[e];
                            // Grad-div term.
                            k += ga[c] * tau_c * gb[e];
                            out.jacobian[(row + c, col + e)] += mu * k;
                        }
                        // Pressure column of the momentum row.
                        let mut kp = -ga[c] * vb;
                        kp += adv[a] * tau_m * gb[c];
                        kp += ps.u[c] * tau_m * gab;
                        kp += tau_m * gb[c] * upg_a + u_prime[c] * tau_m * gab;
                        out.jacobian[(row + c, col + 2)] += mu * kp;
                        // Velocity columns of the continuity row.
                        let kq = va * gb[c] + tau_m * sg[c];
                        out.jacobian[(row + 2, col + c)] += mu * kq;
                    }
                    // Pressure-pressure: artificial compressibility plus the
                    // pressure-Poisson part of the fine scales.
                    out.jacobian[(row + 2, col + 2)] +=
                        mu * (va * vb * inv_a2 * inv_dtheta + tau_m * gab);
                }
            }
        }
    }

    /// Weak no-slip terms on the moving wall: consistency, dual consistency,
    /// and penalty.
    pub fn wall_face(&self, qps: &[FaceQp], state: &LocalState, out: &mut ElementMatrices) {
        let n = qps[0].basis.n;
        let nu = self.props.viscosity;
        for qp in qps {
            let basis = &qp.basis;
            let nsp = qp.normal.n_sp;
            let mu = qp.mu;
            let gm = &qp.metrics.g_sp;
            let n_g_n = nsp[0] * (gm[(0, 0)] * nsp[0] + gm[(0, 1)] * nsp[1])
                + nsp[1] * (gm[(1, 0)] * nsp[0] + gm[(1, 1)] * nsp[1]);
            let tau_b = tau_boundary(nu, n_g_n);

            let mut u = [0.0; 2];
            let mut p = 0.0;
            let mut grad_u = [[0.0; 2]; 2];
            for a in 0..n {
                let v = basis.val[a];
                let g = basis.grad[a];
                p += v * state.p[a];
                for c in 0..2 {
                    u[c] += v * state.u[a][c];
                    grad_u[c][0] += g[0] * state.u[a][c];
                    grad_u[c][1] += g[1] * state.u[a][c];
                }
            }
            let g_wall = qp.wall_velocity;
            let mis = [u[0] - g_wall[0], u[1] - g_wall[1]];
            let dun = [
                grad_u[0][0] * nsp[0] + grad_u[0][1] * nsp[1],
                grad_u[1][0] * nsp[0] + grad_u[1][1] * nsp[1],
            ];
            let mis_n = mis[0] * nsp[0] + mis[1] * nsp[1];

            for a in 0..n {
                let va = basis.val[a];
                let ga = basis.grad[a];
                let gan = ga[0] * nsp[0] + ga[1] * nsp[1];
                let row = 3 * a;
                for c in 0..2 {
                    out.residual[row + c] += mu
                        * (va * (p * nsp[c] - nu * dun[c])
                            + nu * gan * mis[c]
                            + tau_b * va * mis[c]);
                }
                out.residual[row + 2] += mu * (-va * mis_n);

                for b in 0..n {
                    let vb = basis.val[b];
                    let gb = basis.grad[b];
                    let gbn = gb[0] * nsp[0] + gb[1] * nsp[1];
                    let col = 3 * b;
                    let diag = mu * (-nu * va * gbn + nu * gan * vb + tau_b * va * vb);
                    for c in 0..2 {
                        out.jacobian[(row + c, col + c)] += diag;
                        out.jacobian[(row + c, col + 2)] += mu * va * vb * nsp[c];
                        out.jacobian[(row + 2, col + c)] += mu * (-va * vb * nsp[c]);
                    }
                }
            }
        }
    }

    /// Backflow stabilization on traction-free outflow: removes the energy
    /// input of flow re-entering the domain. The tangent uses the active
    /// branch of the nonsmooth minimum.
    pub fn outflow_face(&self, qps: &[FaceQp], state: &LocalState, out: &mut ElementMatrices) {
        let n = qps[0].basis.n;
        for qp in qps {
            let basis = &qp.basis;
            let nsp = qp.normal.n_sp;
            let mu = qp.mu;
            let mut u = [0.0; 2];
            for a in 0..n {
                u[0] += basis.val[a] * state.u[a][0];
                u[1] += basis.val[a] * state.u[a][1];
            }
            // Normal velocity relative to the boundary motion.
            let u_n = u[0] * nsp[0] + u[1] * nsp[1] - qp.normal.v_n;
            let u_n_minus = 0.5 * (u_n - u_n.abs());
            let active = if u_n < 0.0 { 1.0 } else { 0.0 };
            for a in 0..n {
                let va = basis.val[a];
                let row = 3 * a;
                for c in 0..2 {
                    out.residual[row + c] += mu * (-va * u_n_minus * u[c]);
                }
                for b in 0..n {
                    let vb = basis.val[b];
                    let col = 3 * b;
                    for c in 0..2 {
                        for e in 0..2 {
                            let delta = if c == e { 1.0 } else { 0.0 };
                            out.jacobian[(row + c, col + e)] += mu
                                * (-va * (u_n_minus * vb * delta + active * vb * nsp[e] * u[c]));
                        }
                    }
                }
            }
        }
    }
}
