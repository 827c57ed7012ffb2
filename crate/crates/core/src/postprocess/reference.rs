use crate::{Error, Result};

/// Outcome of fitting v(h) = v* + C h^q through three mesh levels.
#[derive(Debug, Clone, Copy)]
pub struct RichardsonResult {
    /// Observed convergence order q.
    pub order: f64,
    /// Mesh-independent estimate v*.
    pub extrapolated: f64,
    /// Leading error coefficient C.
    pub coefficient: f64,
    /// Distance of each sample from the extrapolated value.
    pub errors: [f64; 3],
}

/// Estimate the convergence order and limit value from three samples
/// (h, v) at a constant refinement ratio, finest last.
pub fn richardson_extrapolate(samples: &[(f64, f64); 3]) -> Result<RichardsonResult> {
    let [(h0, v0), (h1, v1), (h2, v2)] = *samples;
    if !(h0 > h1 && h1 > h2 && h2 > 0.0) {
        return Err(Error::Argument(
            "mesh sizes must be positive and strictly decreasing".into(),
        ));
    }
    let r = h0 / h1;
    if ((h1 / h2) / r - 1.0).abs() > 1e-6 {
        return Err(Error::Extrapolation(
            "refinement ratio is not constant across the three levels".into(),
        ));
    }
    let d1 = v0 - v1;
    let d2 = v1 - v2;
    if d1 == 0.0 || d2 == 0.0 {
        return Err(Error::Extrapolation(
            "consecutive samples are equal; order is indeterminate".into(),
        ));
    }
    let ratio = d1 / d2;
    if ratio <= 1.0 {
        return Err(Error::Extrapolation(
            "differences do not contract monotonically under refinement".into(),
        ));
    }
    let order = ratio.ln() / r.ln();
    let coefficient = d2 / (h1.powf(order) - h2.powf(order));
    let extrapolated = v2 - coefficient * h2.powf(order);
    Ok(RichardsonResult {
        order,
        extrapolated,
        coefficient,
        errors: [
            (v0 - extrapolated).abs(),
            (v1 - extrapolated).abs(),
            (v2 - extrapolated).abs(),
        ],
    })
}

/// Instantaneous angle of attack, in degrees, seen by a foil heaving as
/// h(t) = h_a sin(2 pi t / period) in a stream of speed u_ref.
pub fn effective_aoa(alpha_deg: f64, h_a: f64, period: f64, u_ref: f64, t: f64) -> f64 {
    let plunge_rate = 2.0 * std::f64::consts::PI * h_a / period
        * (2.0 * std::f64::consts::PI * t / period).cos();
    alpha_deg - (plunge_rate / u_ref).atan().to_degrees()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synthesize(limit: f64, c: f64, q: f64) -> [(f64, f64); 3] {
        let hs = [0.4, 0.2, 0.1];
        [
            (hs[0], limit + c * hs[0].powf(q)),
            (hs[1], limit + c * hs[1].powf(q)),
            (hs[2], limit + c * hs[2].powf(q)),
        ]
    }

    #[test]
    fn quadratic_sequence_is_recovered_exactly() {
        let r = richardson_extrapolate(&synthesize(1.0, 1.0, 2.0)).unwrap();
        assert!((r.order - 2.0).abs() <= 1e-12, "order {}", r.order);
        assert!((r.extrapolated - 1.0).abs() <= 1e-12);
        assert!((r.coefficient - 1.0).abs() <= 1e-10);
        assert!((r.errors[2] - 0.01).abs() <= 1e-12);
    }

    #[test]
    fn fractional_orders_are_recovered() {
        let drag = richardson_extrapolate(&synthesize(0.1216, 0.02, 1.57)).unwrap();
        assert!((drag.order - 1.57).abs() <= 1e-10);
        assert!((drag.extrapolated - 0.1216).abs() <= 1e-10);

        let lift = richardson_extrapolate(&synthesize(0.1595, 0.01, 1.34)).unwrap();
        assert!((lift.order - 1.34).abs() <= 1e-10);
        assert!((lift.extrapolated - 0.1595).abs() <= 1e-10);
    }

    #[test]
    fn degenerate_sequences_are_rejected() {
        let oscillatory = [(0.4, 1.1), (0.2, 0.9), (0.1, 1.05)];
        assert!(matches!(
            richardson_extrapolate(&oscillatory),
            Err(Error::Extrapolation(_))
        ));

        let stalled = [(0.4, 1.0), (0.2, 1.0), (0.1, 0.9)];
        assert!(matches!(
            richardson_extrapolate(&stalled),
            Err(Error::Extrapolation(_))
        ));

        let uneven = [(0.4, 1.16), (0.3, 1.04), (0.1, 1.01)];
        assert!(matches!(
            richardson_extrapolate(&uneven),
            Err(Error::Extrapolation(_))
        ));

        let ascending = [(0.1, 1.0), (0.2, 1.1), (0.4, 1.3)];
        assert!(matches!(
            richardson_extrapolate(&ascending),
            Err(Error::Argument(_))
        ));
    }

    #[test]
    fn effective_angle_tracks_the_plunge_rate() {
        assert_eq!(effective_aoa(4.0, 0.0, 10.0, 1.0, 3.3), 4.0);

        let period = 100.0 * std::f64::consts::PI;
        let at_rest = effective_aoa(0.0, 0.1, period, 1.0, 0.0);
        assert!((at_rest + 0.114591).abs() <= 1e-5, "aoa {at_rest}");

        let at_turn = effective_aoa(0.0, 0.1, period, 1.0, period / 4.0);
        assert!(at_turn.abs() <= 1e-12);

        // Half a period later the plunge reverses, mirroring the angle.
        let later = effective_aoa(0.0, 0.1, period, 1.0, period / 2.0);
        assert!((later + at_rest).abs() <= 1e-12);
    }
}
