use nalgebra::{Matrix3, Vector3};

/// Interior stabilization constant (inverse-estimate bound for quadratics).
pub const C_I: f64 = 36.0;
/// Boundary penalty constant.
pub const C_IB: f64 = 8.0;

/// Momentum stabilization time scale. The advective part uses the space-time
/// metric against the extended velocity, the viscous part the spatial metric
/// double contraction.
pub fn tau_momentum(u_hat: &Vector3<f64>, g_hat: &Matrix3<f64>, nu: f64, g_dd: f64) -> f64 {
    let adv = (g_hat * u_hat).dot(u_hat);
    let visc = C_I * nu * nu * g_dd;
    1.0 / (adv + visc).sqrt()
}

pub fn tau_continuity(tau_m: f64, tr_g: f64) -> f64 {
    1.0 / (tau_m * tr_g)
}

/// Penalty weight of the weak no-slip condition.
pub fn tau_boundary(nu: f64, n_g_n: f64) -> f64 {
    0.5 * C_IB * nu * n_g_n.sqrt()
}
