use crate::{Error, Result};

/// Four-digit foil section with a closed trailing edge.
///
/// The thickness polynomial uses the -0.1036 trailing coefficient so the
/// upper and lower surfaces meet in a single point at the trailing edge,
/// which the wake interface of the C-mesh starts from.
#[derive(Debug, Clone, Copy)]
pub struct Naca4 {
    /// Maximum camber as a fraction of chord.
    pub camber: f64,
    /// Chordwise position of maximum camber (fraction of chord).
    pub camber_pos: f64,
    /// Maximum thickness as a fraction of chord.
    pub thickness: f64,
}

impl Naca4 {
    pub fn parse(code: &str) -> Result<Self> {
        let digits: Vec<u32> = code.chars().filter_map(|c| c.to_digit(10)).collect();
        if digits.len() != 4 || code.chars().count() != 4 {
            return Err(Error::Argument(format!(
                "foil code {code:?} is not a four-digit section"
            )));
        }
        let camber = digits[0] as f64 / 100.0;
        let camber_pos = digits[1] as f64 / 10.0;
        let thickness = (digits[2] * 10 + digits[3]) as f64 / 100.0;
        if thickness == 0.0 {
            return Err(Error::Argument(format!(
                "foil code {code:?} has zero thickness"
            )));
        }
        if camber > 0.0 && camber_pos == 0.0 {
            return Err(Error::Argument(format!(
                "foil code {code:?} has camber with no camber position"
            )));
        }
        Ok(Self {
            camber,
            camber_pos,
            thickness,
        })
    }

    /// Half-thickness at chord fraction x (0 at both ends).
    pub fn half_thickness(&self, x: f64) -> f64 {
        let x = x.clamp(0.0, 1.0);
        5.0 * self.thickness
            * (0.2969 * x.sqrt() - 0.1260 * x - 0.3516 * x * x + 0.2843 * x * x * x
                - 0.1036 * x * x * x * x)
    }

    fn camber_line(&self, x: f64) -> (f64, f64) {
        if self.camber == 0.0 {
            return (0.0, 0.0);
        }
        let (m, p) = (self.camber, self.camber_pos);
        if x < p {
            (
                m / (p * p) * (2.0 * p * x - x * x),
                2.0 * m / (p * p) * (p - x),
            )
        } else {
            (
                m / ((1.0 - p) * (1.0 - p)) * ((1.0 - 2.0 * p) + 2.0 * p * x - x * x),
                2.0 * m / ((1.0 - p) * (1.0 - p)) * (p - x),
            )
        }
    }

    /// Upper-surface point at chord fraction x, in chord units.
    pub fn upper(&self, x: f64) -> [f64; 2] {
        let yt = self.half_thickness(x);
        if self.camber == 0.0 {
            return [x, yt];
        }
        let (yc, dyc) = self.camber_line(x);
        let th = dyc.atan();
        [x - yt * th.sin(), yc + yt * th.cos()]
    }

    /// Lower-surface point at chord fraction x, in chord units.
    pub fn lower(&self, x: f64) -> [f64; 2] {
        let yt = self.half_thickness(x);
        if self.camber == 0.0 {
            return [x, -yt];
        }
        let (yc, dyc) = self.camber_line(x);
        let th = dyc.atan();
        [x + yt * th.sin(), yc - yt * th.cos()]
    }
}
