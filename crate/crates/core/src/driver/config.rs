use crate::solver::SolverConfig;
use crate::{Error, Result};
use serde::Deserialize;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};

/// Motion family of a case.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CaseKind {
    Stationary,
    Heave,
    Pitch,
}

impl CaseKind {
    pub fn label(&self) -> &'static str {
        match self {
            CaseKind::Stationary => "stationary",
            CaseKind::Heave => "heave",
            CaseKind::Pitch => "pitch",
        }
    }
}

/// Fully resolved run description. Derived quantities (viscosity, period,
/// motion amplitude) are already in solver units here, so downstream stages
/// never look at the raw file again.
#[derive(Debug, Clone)]
pub struct CaseConfig {
    pub kind: CaseKind,
    /// Four-digit symmetric foil code.
    pub foil: String,
    pub reynolds: f64,
    /// Free-stream speed.
    pub u_ref: f64,
    pub chord: f64,
    /// Static angle of attack in degrees. Tilts the free stream, not the mesh.
    pub alpha_deg: f64,
    pub viscosity: f64,
    pub period: f64,
    /// Heave amplitude (length) or pitch amplitude (radians); zero when stationary.
    pub amplitude: f64,
    pub mesh: MeshSettings,
    pub solver: SolverConfig,
    pub output: OutputSettings,
}

#[derive(Debug, Clone)]
pub struct MeshSettings {
    /// Spatial refinement level. Each level bisects every knot span.
    pub level: usize,
    /// Temporal elements over one period.
    pub n_el_t: usize,
    pub temporal_degree: usize,
    /// Multiplier on the baseline element counts, for cheap verification runs.
    pub resolution_scale: f64,
}

#[derive(Debug, Clone)]
pub struct OutputSettings {
    pub dir: PathBuf,
    /// Rows in the force history table.
    pub force_samples: usize,
    /// Field snapshot instants as fractions of the period.
    pub field_times: Vec<f64>,
    /// Sample lattice density per patch edge in field snapshots.
    pub field_resolution: usize,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    case: RawCase,
    #[serde(default)]
    mesh: RawMesh,
    #[serde(default)]
    solver: RawSolver,
    #[serde(default)]
    output: RawOutput,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCase {
    kind: String,
    foil: Option<String>,
    reynolds: f64,
    u_ref: Option<f64>,
    chord: Option<f64>,
    alpha_deg: Option<f64>,
    /// Heave amplitude as a length.
    h_a: Option<f64>,
    /// Pitch amplitude in degrees.
    pitch_deg: Option<f64>,
    /// Reduced frequency pi c / (U T).
    k: Option<f64>,
    period: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMesh {
    level: Option<usize>,
    n_el_t: Option<usize>,
    temporal_degree: Option<usize>,
    resolution_scale: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSolver {
    dtheta: Option<f64>,
    sound: Option<f64>,
    max_steps: Option<usize>,
    newton_iters: Option<usize>,
    tolerance: Option<f64>,
    early_exit: Option<bool>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    dir: Option<String>,
    force_samples: Option<usize>,
    field_times: Option<Vec<f64>>,
    field_resolution: Option<usize>,
}

/// Read and resolve a TOML case file.
pub fn parse_config(path: &Path) -> Result<CaseConfig> {
    let text = std::fs::read_to_string(path)?;
    resolve_config(&text)
}

/// Resolve the TOML text of a case file into a validated configuration.
pub fn resolve_config(text: &str) -> Result<CaseConfig> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    let c = &raw.case;

    let kind = match c.kind.as_str() {
        "stationary" => CaseKind::Stationary,
        "heave" => CaseKind::Heave,
        "pitch" => CaseKind::Pitch,
        other => {
            return Err(Error::Config(format!(
                "unknown case kind {other:?}; expected stationary, heave, or pitch"
            )))
        }
    };

    let reynolds = c.reynolds;
    let u_ref = c.u_ref.unwrap_or(1.0);
    let chord = c.chord.unwrap_or(1.0);
    for (name, v) in [("reynolds", reynolds), ("u_ref", u_ref), ("chord", chord)] {
        if !(v > 0.0) {
            return Err(Error::Config(format!("{name} must be positive, got {v}")));
        }
    }
    let viscosity = u_ref * chord / reynolds;

    let period = resolve_period(kind, c.k, c.period, chord, u_ref)?;
    let amplitude = resolve_amplitude(kind, c.h_a, c.pitch_deg)?;
    if kind == CaseKind::Stationary && c.k.is_some() {
        return Err(Error::Config("k only applies to unsteady cases".into()));
    }

    let unsteady = kind != CaseKind::Stationary;
    let mesh = MeshSettings {
        level: raw.mesh.level.unwrap_or(0),
        n_el_t: raw.mesh.n_el_t.unwrap_or(if unsteady { 8 } else { 2 }),
        temporal_degree: raw.mesh.temporal_degree.unwrap_or(if unsteady { 2 } else { 1 }),
        resolution_scale: raw.mesh.resolution_scale.unwrap_or(1.0),
    };
    if mesh.n_el_t < 2 {
        return Err(Error::Config("n_el_t must be at least 2".into()));
    }
    if mesh.temporal_degree == 0 {
        return Err(Error::Config("temporal_degree must be at least 1".into()));
    }
    if !(mesh.resolution_scale > 0.0) {
        return Err(Error::Config("resolution_scale must be positive".into()));
    }

    let s = &raw.solver;
    let base = SolverConfig::default();
    let solver = SolverConfig {
        dtheta: s.dtheta.unwrap_or(base.dtheta),
        sound: s.sound.unwrap_or(base.sound),
        max_steps: s.max_steps.unwrap_or(base.max_steps),
        newton_iters: s.newton_iters.unwrap_or(base.newton_iters),
        tolerance: s.tolerance.unwrap_or(base.tolerance),
        early_exit: s.early_exit.unwrap_or(base.early_exit),
        linear: base.linear,
    };
    if !(solver.dtheta > 0.0) || !(solver.sound > 0.0) || !(solver.tolerance > 0.0) {
        return Err(Error::Config("solver step, sound speed, and tolerance must be positive".into()));
    }

    let o = &raw.output;
    let output = OutputSettings {
        dir: PathBuf::from(o.dir.clone().unwrap_or_else(|| "out".into())),
        force_samples: o.force_samples.unwrap_or(64),
        field_times: o.field_times.clone().unwrap_or_default(),
        field_resolution: o.field_resolution.unwrap_or(8),
    };
    if output.force_samples == 0 {
        return Err(Error::Config("force_samples must be at least 1".into()));
    }
    if output.field_resolution == 0 {
        return Err(Error::Config("field_resolution must be at least 1".into()));
    }

    Ok(CaseConfig {
        kind,
        foil: c.foil.clone().unwrap_or_else(|| "0012".into()),
        reynolds,
        u_ref,
        chord,
        alpha_deg: c.alpha_deg.unwrap_or(0.0),
        viscosity,
        period,
        amplitude,
        mesh,
        solver,
        output,
    })
}

/// The period can come from an explicit value, from the reduced frequency
/// k = pi c / (U T), or from both when they agree to within round-off.
fn resolve_period(
    kind: CaseKind,
    k: Option<f64>,
    period: Option<f64>,
    chord: f64,
    u_ref: f64,
) -> Result<f64> {
    let from_k = match k {
        Some(k) if k > 0.0 => Some(PI * chord / (k * u_ref)),
        Some(k) => return Err(Error::Config(format!("k must be positive, got {k}"))),
        None => None,
    };
    if let Some(t) = period {
        if !(t > 0.0) {
            return Err(Error::Config(format!("period must be positive, got {t}")));
        }
    }
    match (from_k, period) {
        (Some(tk), Some(t)) => {
            if (tk - t).abs() > 1e-6 * t {
                return Err(Error::Config(format!(
                    "k and period disagree: k implies a period of {tk}, config says {t}"
                )));
            }
            Ok(t)
        }
        (Some(tk), None) => Ok(tk),
        (None, Some(t)) => Ok(t),
        (None, None) => {
            if kind == CaseKind::Stationary {
                Ok(1.0)
            } else {
                Err(Error::Config("unsteady cases need k or period".into()))
            }
        }
    }
}

fn resolve_amplitude(kind: CaseKind, h_a: Option<f64>, pitch_deg: Option<f64>) -> Result<f64> {
    match kind {
        CaseKind::Stationary => {
            if h_a.is_some() || pitch_deg.is_some() {
                return Err(Error::Config("stationary cases take no motion amplitude".into()));
            }
            Ok(0.0)
        }
        CaseKind::Heave => {
            if pitch_deg.is_some() {
                return Err(Error::Config("pitch_deg only applies to pitch cases".into()));
            }
            match h_a {
                Some(a) if a > 0.0 => Ok(a),
                Some(a) => Err(Error::Config(format!("h_a must be positive, got {a}"))),
                None => Err(Error::Config("heave cases need h_a".into())),
            }
        }
        CaseKind::Pitch => {
            if h_a.is_some() {
                return Err(Error::Config("h_a only applies to heave cases".into()));
            }
            match pitch_deg {
                Some(a) if a > 0.0 => Ok(a.to_radians()),
                Some(a) => Err(Error::Config(format!("pitch_deg must be positive, got {a}"))),
                None => Err(Error::Config("pitch cases need pitch_deg".into())),
            }
        }
    }
}
