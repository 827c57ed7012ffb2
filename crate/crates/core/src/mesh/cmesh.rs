use super::naca::Naca4;
use super::{SideTag, SpatialMesh};
use crate::nurbs::{interpolate_with_kv, KnotVector, NurbsPatch};
use crate::{Error, Result};
use std::f64::consts::{FRAC_1_SQRT_2, PI};

/// C-mesh around a four-digit foil: two patches wrap the leading edge, two
/// cover the mid chord, two carry the wake behind the trailing edge. The far
/// field is a half circle upstream closed by straight top/bottom/outflow
/// boundaries downstream.
#[derive(Debug, Clone)]
pub struct SpatialMeshSpec {
    pub foil: String,
    pub chord: f64,
    /// Pitch axis as a chord fraction measured from the leading edge.
    pub pitch_axis_frac: f64,
    /// Radius of the upstream half circle, also the half-height of the
    /// straight far-field section.
    pub far_radius: f64,
    /// Distance from the trailing edge to the outflow boundary.
    pub wake_length: f64,
    /// Chord fraction where the leading-edge patches meet the mid patches.
    pub split_frac: f64,
    /// Basis counts: chordwise over the leading-edge patch, chordwise over
    /// the mid patch, streamwise over the wake patch, and radial.
    pub n_front: usize,
    pub n_mid: usize,
    pub n_wake: usize,
    pub n_rad: usize,
    /// Exponential grading strengths (0 = uniform).
    pub beta_rad: f64,
    pub beta_wake: f64,
    pub degree: usize,
}

impl Default for SpatialMeshSpec {
    fn default() -> Self {
        SpatialMeshSpec {
            foil: "0012".into(),
            chord: 1.0,
            pitch_axis_frac: 1.0 / 3.0,
            far_radius: 8.0,
            wake_length: 8.0,
            split_frac: 0.3,
            n_front: 9,
            n_mid: 21,
            n_wake: 45,
            n_rad: 15,
            beta_rad: 5.5,
            beta_wake: 4.0,
            degree: 2,
        }
    }
}

impl SpatialMeshSpec {
    /// Scale the basis counts by `f` (keeping at least one element per
    /// direction), for coarse verification runs.
    pub fn with_resolution_scale(mut self, f: f64) -> Self {
        let scale = |n: usize| -> usize {
            let el = ((n - self.degree) as f64 * f).round().max(1.0) as usize;
            el + self.degree
        };
        self.n_front = scale(self.n_front);
        self.n_mid = scale(self.n_mid);
        self.n_wake = scale(self.n_wake);
        self.n_rad = scale(self.n_rad);
        self
    }

    fn validate(&self) -> Result<()> {
        if self.chord <= 0.0 {
            return Err(Error::Argument("chord must be positive".into()));
        }
        if self.far_radius <= self.chord || self.wake_length <= 0.0 {
            return Err(Error::Argument("far field must enclose the foil".into()));
        }
        if !(self.split_frac > 0.0 && self.split_frac < 1.0) {
            return Err(Error::Argument("chordwise split must be inside (0,1)".into()));
        }
        if self.degree != 2 {
            return Err(Error::Argument(
                "the C-mesh is built from quadratic patches (exact far-field arcs)".into(),
            ));
        }
        let min_n = self.degree + 1;
        for (name, n) in [
            ("n_front", self.n_front),
            ("n_mid", self.n_mid),
            ("n_wake", self.n_wake),
            ("n_rad", self.n_rad),
        ] {
            if n < min_n {
                return Err(Error::Argument(format!(
                    "{name}={n} gives zero elements (need at least {min_n} basis functions)"
                )));
            }
        }
        Ok(())
    }
}

fn exp_grading(v: f64, beta: f64) -> f64 {
    if beta == 0.0 {
        v
    } else {
        (beta * v).exp_m1() / beta.exp_m1()
    }
}

/// Interpolated foil segment on a prescribed knot vector; the parameter is
/// mapped to a chord fraction first so resolution can be clustered.
fn foil_curve(
    kv: &KnotVector,
    xfrac_of_u: impl Fn(f64) -> f64,
    surface: impl Fn(f64) -> [f64; 2],
    chord: f64,
    first: [f64; 2],
    last: [f64; 2],
) -> Result<NurbsPatch> {
    let params = kv.greville_all();
    let pts: Vec<Vec<f64>> = params
        .iter()
        .map(|&u| {
            let sp = surface(xfrac_of_u(u));
            vec![chord * sp[0], chord * sp[1]]
        })
        .collect();
    let mut curve = interpolate_with_kv(kv, &params, &pts)?;
    // End control points of a clamped interpolation equal the end samples up
    // to solver roundoff; snap them so patch seams match bitwise.
    curve.set_physical_point(0, &first);
    let last_idx = curve.ncp() - 1;
    curve.set_physical_point(last_idx, &last);
    Ok(curve)
}

/// Straight B-spline segment from a to b (linear geometry, exact).
fn linear_curve(kv: &KnotVector, a: [f64; 2], b: [f64; 2]) -> Result<NurbsPatch> {
    let mut coords = Vec::new();
    for g in kv.greville_all() {
        coords.push(a[0] + (b[0] - a[0]) * g);
        coords.push(a[1] + (b[1] - a[1]) * g);
    }
    NurbsPatch::from_bspline(vec![kv.clone()], 2, &coords)
}

/// B-spline curve with prescribed x coefficients and constant y.
fn coefficient_curve(kv: &KnotVector, xs: &[f64], y: f64) -> Result<NurbsPatch> {
    let mut coords = Vec::new();
    for &x in xs {
        coords.push(x);
        coords.push(y);
    }
    NurbsPatch::from_bspline(vec![kv.clone()], 2, &coords)
}

/// Exact quarter circle as a rational quadratic, refined onto `kv_target`.
fn quarter_arc(
    kv_target: &KnotVector,
    p0: [f64; 2],
    corner: [f64; 2],
    p2: [f64; 2],
) -> Result<NurbsPatch> {
    let kv_b = KnotVector::new(2, vec![0., 0., 0., 1., 1., 1.])?;
    let w = FRAC_1_SQRT_2;
    let cps = vec![
        p0[0],
        p0[1],
        1.0,
        w * corner[0],
        w * corner[1],
        w,
        p2[0],
        p2[1],
        1.0,
    ];
    let arc = NurbsPatch::new(vec![kv_b], 2, cps)?;
    let interior: Vec<f64> = kv_target.knots[kv_target.p + 1..kv_target.n_basis()].to_vec();
    arc.refine_knots(0, &interior)
}

/// Ruled patch between two curves on the same knot vector; rows are blended
/// in homogeneous coordinates with the given radial coefficients.
fn ruled(inner: &NurbsPatch, outer: &NurbsPatch, kv_rad: &KnotVector, rad: &[f64]) -> Result<NurbsPatch> {
    if inner.n[0] != outer.n[0] {
        return Err(Error::Argument(
            "ruled patch needs conforming inner and outer curves".into(),
        ));
    }
    let n_u = inner.n[0];
    let mut cps = Vec::with_capacity(n_u * rad.len() * 3);
    for &g in rad {
        for i in 0..n_u {
            let a = inner.cp(i);
            let b = outer.cp(i);
            for c in 0..3 {
                cps.push((1.0 - g) * a[c] + g * b[c]);
            }
        }
    }
    NurbsPatch::new(vec![inner.kvs[0].clone(), kv_rad.clone()], 2, cps)
}

fn mirror_y(patch: &NurbsPatch) -> NurbsPatch {
    let mut out = patch.clone();
    for i in 0..out.ncp() {
        let cp = out.cp_mut(i);
        cp[1] = -cp[1];
    }
    out
}

/// Build the six conforming patches. Patch order: front/mid/aft upper, then
/// front/mid/aft lower. All patches are oriented with positive Jacobian;
/// direction 1 always runs from the foil (or wake line) to the far field.
pub fn build_spatial_mesh(spec: &SpatialMeshSpec) -> Result<SpatialMesh> {
    spec.validate()?;
    let foil = Naca4::parse(&spec.foil)?;
    let c = spec.chord;
    let xs = spec.split_frac * c;
    let r = spec.far_radius;
    let l = spec.wake_length;
    let p = spec.degree;

    let kv_front = KnotVector::uniform_open(p, spec.n_front - p)?;
    let kv_mid = KnotVector::uniform_open(p, spec.n_mid - p)?;
    let kv_wake = KnotVector::uniform_open(p, spec.n_wake - p)?;
    let kv_rad = KnotVector::uniform_open(p, spec.n_rad - p)?;

    let rad: Vec<f64> = kv_rad
        .greville_all()
        .iter()
        .map(|&g| exp_grading(g, spec.beta_rad))
        .collect();

    let le = [0.0, 0.0];
    let te = [c, 0.0];
    let up_split = {
        let s = foil.upper(spec.split_frac);
        [c * s[0], c * s[1]]
    };
    let lo_split = {
        let s = foil.lower(spec.split_frac);
        [c * s[0], c * s[1]]
    };
    let sf = spec.split_frac;

    // Inner (foil) curves. The leading-edge segments cluster quadratically
    // toward the nose, where the surface behaves like sqrt(x).
    let front_up_inner = foil_curve(
        &kv_front,
        |u| sf * (1.0 - (PI * u / 2.0).cos()),
        |x| foil.upper(x),
        c,
        le,
        up_split,
    )?;
    let mid_up_inner = foil_curve(
        &kv_mid,
        |u| sf + (1.0 - sf) * u,
        |x| foil.upper(x),
        c,
        up_split,
        te,
    )?;
    let front_lo_inner = foil_curve(
        &kv_front,
        |u| sf * (1.0 - (PI * (1.0 - u) / 2.0).cos()),
        |x| foil.lower(x),
        c,
        lo_split,
        le,
    )?;
    let mid_lo_inner = foil_curve(
        &kv_mid,
        |u| 1.0 - (1.0 - sf) * u,
        |x| foil.lower(x),
        c,
        te,
        lo_split,
    )?;

    // Far-field boundary pieces.
    let front_up_outer = quarter_arc(&kv_front, [xs - r, 0.0], [xs - r, r], [xs, r])?;
    let front_lo_outer = quarter_arc(&kv_front, [xs, -r], [xs - r, -r], [xs - r, 0.0])?;
    let mid_up_outer = linear_curve(&kv_mid, [xs, r], [c, r])?;
    let mid_lo_outer = linear_curve(&kv_mid, [c, -r], [xs, -r])?;

    // Wake interface: exponentially graded control coefficients, shared by
    // the wake line and the outer boundary so the rays stay vertical.
    let wake_x: Vec<f64> = kv_wake
        .greville_all()
        .iter()
        .map(|&g| c + l * exp_grading(g, spec.beta_wake))
        .collect();
    let aft_inner = coefficient_curve(&kv_wake, &wake_x, 0.0)?;
    let aft_outer = coefficient_curve(&kv_wake, &wake_x, r)?;

    let front_up = ruled(&front_up_inner, &front_up_outer, &kv_rad, &rad)?;
    let mid_up = ruled(&mid_up_inner, &mid_up_outer, &kv_rad, &rad)?;
    let aft_up = ruled(&aft_inner, &aft_outer, &kv_rad, &rad)?;
    let front_lo = ruled(&front_lo_inner, &front_lo_outer, &kv_rad, &rad)?;
    let mid_lo = ruled(&mid_lo_inner, &mid_lo_outer, &kv_rad, &rad)?;
    // The lower wake patch mirrors the upper one so the shared wake-line
    // control points coincide bitwise; reversal keeps the Jacobian positive.
    let aft_lo = mirror_y(&aft_up).reversed(0);

    use SideTag::{Exterior, Interface, Wall};
    let patches = vec![front_up, mid_up, aft_up, front_lo, mid_lo, aft_lo];
    let side_tags = vec![
        [Interface, Interface, Wall, Exterior], // front upper
        [Interface, Interface, Wall, Exterior], // mid upper
        [Interface, Exterior, Interface, Exterior], // aft upper
        [Interface, Interface, Wall, Exterior], // front lower
        [Interface, Interface, Wall, Exterior], // mid lower
        [Exterior, Interface, Interface, Exterior], // aft lower
    ];

    Ok(SpatialMesh::from_patches(
        patches,
        side_tags,
        c,
        [spec.pitch_axis_frac * c, 0.0],
    ))
}
