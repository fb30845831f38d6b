//! Run configuration: JSON schema, defaults and validation.

use std::fmt;
use std::path::{Path, PathBuf};

use liesphere::euclid::SurfaceSpec;
use liesphere::potentials::{C0Params, CanalParams};
use liesphere::wilczynski::ProjectiveSpec;
use liesphere::{FamilyParams, Rect};
use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;

/// Smallest grid side accepted when a fourth-order stencil is evaluated.
pub const MIN_STENCIL_GRID: usize = 9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Pipeline {
    CheckGc,
    Integrate,
    Surface,
    Landau,
    EuclidRoundtrip,
    Wilczynski,
}

impl Pipeline {
    pub fn name(self) -> &'static str {
        match self {
            Pipeline::CheckGc => "check-gc",
            Pipeline::Integrate => "integrate",
            Pipeline::Surface => "surface",
            Pipeline::Landau => "landau",
            Pipeline::EuclidRoundtrip => "euclid-roundtrip",
            Pipeline::Wilczynski => "wilczynski",
        }
    }

    /// Checks a pipeline can run, in report order; all of them by default.
    pub fn checks(self) -> &'static [Check] {
        use Check::*;
        match self {
            Pipeline::CheckGc => &[Gc, LieGc, Holonomy],
            Pipeline::Integrate => &[Gc, Holonomy, Conservation, Lie6],
            Pipeline::Surface => &[Gc, Conservation, Lie6, Theorem1],
            Pipeline::Landau => &[Wronskian, ProfileZero, Quadric, Operators],
            Pipeline::EuclidRoundtrip => &[Lift, Dirac, FrameTable, Position, Metric],
            Pipeline::Wilczynski => &[Gc, Holonomy, Table, Laplace, Uapvbq],
        }
    }

    fn uses_family(self) -> bool {
        matches!(self, Pipeline::CheckGc | Pipeline::Integrate | Pipeline::Surface)
    }
}

impl fmt::Display for Pipeline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Check {
    /// Compatibility equations of the potentials.
    Gc,
    /// Relations between the derived coefficients.
    LieGc,
    /// Frame change around the boundary of the grid rectangle.
    Holonomy,
    /// Gram matrix and determinant of the integrated frames.
    Conservation,
    /// Six-frame equations by finite differences.
    Lie6,
    /// Null and orthogonality relations of the curvature spheres.
    Theorem1,
    Wronskian,
    /// Profile center and radius at the origin against the closed form.
    ProfileZero,
    /// Lie quadric residual of the profile spheres.
    Quadric,
    /// Eigen-residuals and commutator of the commuting operators.
    Operators,
    /// Euclidean data → spheres → envelope at every node.
    Lift,
    Dirac,
    /// Product table of the projective frame.
    Table,
    /// Product table of the frame completed from sampled surface data.
    FrameTable,
    /// Reconstructed positions against the input surface.
    Position,
    /// Invariant metric of the reconstructed surface.
    Metric,
    Laplace,
    /// Plücker frame equations by finite differences.
    Uapvbq,
}

impl Check {
    pub fn name(self) -> &'static str {
        match self {
            Check::Gc => "gc",
            Check::LieGc => "lie-gc",
            Check::Holonomy => "holonomy",
            Check::Conservation => "conservation",
            Check::Lie6 => "lie6",
            Check::Theorem1 => "theorem1",
            Check::Wronskian => "wronskian",
            Check::ProfileZero => "profile-zero",
            Check::Quadric => "quadric",
            Check::Operators => "operators",
            Check::Lift => "lift",
            Check::Dirac => "dirac",
            Check::Table => "table",
            Check::FrameTable => "frame-table",
            Check::Position => "position",
            Check::Metric => "metric",
            Check::Laplace => "laplace",
            Check::Uapvbq => "uapvbq",
        }
    }

    pub fn uses_stencil(self) -> bool {
        matches!(
            self,
            Check::Lie6 | Check::Theorem1 | Check::Operators | Check::Dirac | Check::Metric | Check::Laplace | Check::Uapvbq
        )
    }
}

/// Tolerances per check; defaults follow the library constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub gc: f64,
    pub lie_gc: f64,
    pub holonomy: f64,
    pub conservation: f64,
    pub lie6: f64,
    pub theorem1: f64,
    pub wronskian: f64,
    pub profile_zero: f64,
    pub quadric: f64,
    pub operators: f64,
    pub lift: f64,
    pub dirac: f64,
    pub table: f64,
    pub frame_table: f64,
    pub position: f64,
    pub metric: f64,
    pub laplace: f64,
    pub uapvbq: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            gc: 1e-8,
            lie_gc: 1e-8,
            holonomy: 1e-7,
            conservation: 1e-8,
            lie6: 1e-5,
            theorem1: 1e-5,
            wronskian: 1e-9,
            profile_zero: 1e-8,
            quadric: 1e-10,
            operators: 1e-4,
            lift: 1e-9,
            dirac: liesphere::euclid::TOL_DIRAC_SAMPLED,
            table: 1e-9,
            frame_table: 1e-4,
            position: 1e-6,
            metric: 1e-4,
            laplace: 1e-6,
            uapvbq: 1e-5,
        }
    }
}

impl Tolerances {
    pub fn get(&self, c: Check) -> f64 {
        match c {
            Check::Gc => self.gc,
            Check::LieGc => self.lie_gc,
            Check::Holonomy => self.holonomy,
            Check::Conservation => self.conservation,
            Check::Lie6 => self.lie6,
            Check::Theorem1 => self.theorem1,
            Check::Wronskian => self.wronskian,
            Check::ProfileZero => self.profile_zero,
            Check::Quadric => self.quadric,
            Check::Operators => self.operators,
            Check::Lift => self.lift,
            Check::Dirac => self.dirac,
            Check::Table => self.table,
            Check::FrameTable => self.frame_table,
            Check::Position => self.position,
            Check::Metric => self.metric,
            Check::Laplace => self.laplace,
            Check::Uapvbq => self.uapvbq,
        }
    }

    fn all(&self) -> [(Check, f64); 18] {
        use Check::*;
        [
            Gc, LieGc, Holonomy, Conservation, Lie6, Theorem1, Wronskian, ProfileZero, Quadric, Operators, Lift, Dirac,
            Table, FrameTable, Position, Metric, Laplace, Uapvbq,
        ]
        .map(|c| (c, self.get(c)))
    }
}

/// Evaluation grid: `n` nodes per side on `rect` (the domain by default).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub n: [usize; 2],
    pub rect: Option<Rect>,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig { n: [41, 41], rect: None }
    }
}

/// Landau-level profile and operator settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LandauConfig {
    pub m: f64,
    pub lambda: f64,
    pub k: f64,
    /// Profile sample range along `y`.
    pub y_range: [f64; 2],
    pub samples: usize,
    /// Half-width of the interval on which the basis ODE is integrated.
    pub y_max: f64,
    /// Number of test functions for the commutator.
    pub bumps: usize,
}

impl Default for LandauConfig {
    fn default() -> Self {
        LandauConfig { m: 1.0, lambda: 0.5, k: 1.0, y_range: [-1.8, 1.8], samples: 101, y_max: 4.0, bumps: 10 }
    }
}

impl LandauConfig {
    pub fn canal(&self) -> CanalParams {
        CanalParams { m: self.m, lambda: self.lambda, k: self.k }
    }
}

/// Output file names, relative to the output directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Outputs {
    pub report: String,
    pub timings: String,
    pub mesh: Option<String>,
    pub profile: Option<String>,
    pub samples: Option<String>,
}

impl Default for Outputs {
    fn default() -> Self {
        Outputs {
            report: "report.json".into(),
            timings: "timings.json".into(),
            mesh: Some("surface.obj".into()),
            profile: Some("profile.csv".into()),
            samples: Some("samples.csv".into()),
        }
    }
}

/// The file format; every field except `schema` is optional.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    schema: u32,
    #[serde(default)]
    pipeline: Option<Pipeline>,
    #[serde(default)]
    label: Option<String>,
    #[serde(default)]
    family: Option<FamilyParams>,
    #[serde(default)]
    surface: Option<SurfaceSpec>,
    #[serde(default)]
    projective: Option<ProjectiveSpec>,
    #[serde(default)]
    landau: LandauConfig,
    #[serde(default)]
    domain: Option<Rect>,
    #[serde(default)]
    grid: GridConfig,
    #[serde(default)]
    step: Option<f64>,
    #[serde(default)]
    tolerances: Tolerances,
    #[serde(default)]
    checks: Option<Vec<Check>>,
    #[serde(default)]
    outputs: Outputs,
}

/// What the input object of a run is.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Subject {
    Family(FamilyParams),
    Landau(LandauConfig),
    Surface(SurfaceSpec),
    Projective(ProjectiveSpec),
}

/// Validated configuration with all defaults filled.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub schema: u32,
    pub pipeline: Pipeline,
    pub label: String,
    pub subject: Subject,
    pub domain: Rect,
    pub grid: [usize; 2],
    pub grid_rect: Rect,
    pub step: f64,
    pub tolerances: Tolerances,
    pub checks: Vec<Check>,
    pub outputs: Outputs,
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("parse error at line {line}, column {column} (key `{key}`): {message}")]
    Parse { line: usize, column: usize, key: String, message: String },
    #[error("invalid configuration: {}", .0.join("; "))]
    Validation(Vec<String>),
}

pub fn load_config(path: &Path, pipeline: Pipeline) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.into(), source })?;
    parse_config(&text, pipeline)
}

/// Parse and validate a configuration for `pipeline`.
pub fn parse_config(text: &str, pipeline: Pipeline) -> Result<RunConfig, ConfigError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let file: FileConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let key = e.path().to_string();
        let inner = e.into_inner();
        ConfigError::Parse { line: inner.line(), column: inner.column(), key, message: inner.to_string() }
    })?;
    validate(file, pipeline)
}

fn default_domain(pipeline: Pipeline, family: Option<&FamilyParams>, surface: Option<&SurfaceSpec>) -> Rect {
    match (pipeline, family, surface) {
        (Pipeline::Landau, _, _) => Rect::new((-0.5, 0.5), (-0.5, 0.5)),
        (Pipeline::Wilczynski, _, _) => Rect::new((-0.5, 0.5), (-0.5, 0.5)),
        (_, Some(FamilyParams::C1(_)), _) => Rect::new((-0.8, -0.2), (0.2, 0.8)),
        (_, Some(FamilyParams::Canal(_)), _) => Rect::new((0.2, 1.2), (-0.6, 0.6)),
        (_, _, Some(SurfaceSpec::Ellipsoid { .. })) => Rect::new((2.3, 2.7), (1.3, 1.7)),
        (_, _, Some(_)) => Rect::new((0.2, 0.8), (0.2, 0.8)),
        _ => Rect::new((0.5, 1.5), (0.5, 1.5)),
    }
}

/// The middle 60% of a rectangle.
fn inner(r: Rect) -> Rect {
    let shrink = |(a, b): (f64, f64)| (a + 0.2 * (b - a), b - 0.2 * (b - a));
    Rect::new(shrink(r.r1), shrink(r.r2))
}

fn validate(f: FileConfig, pipeline: Pipeline) -> Result<RunConfig, ConfigError> {
    let mut errs = Vec::new();
    if f.schema != SCHEMA_VERSION {
        errs.push(format!("unsupported schema {}, expected {SCHEMA_VERSION}", f.schema));
    }
    if let Some(p) = f.pipeline {
        if p != pipeline {
            errs.push(format!("config is for pipeline `{p}`, invoked as `{pipeline}`"));
        }
    }
    let subject = match pipeline {
        p if p.uses_family() => Subject::Family(f.family.clone().unwrap_or(FamilyParams::C0(C0Params::default()))),
        Pipeline::Landau => Subject::Landau(f.landau.clone()),
        Pipeline::EuclidRoundtrip => {
            Subject::Surface(f.surface.clone().unwrap_or(SurfaceSpec::Ellipsoid { a: 3.0, b: 2.0, c: 1.0 }))
        }
        _ => Subject::Projective(f.projective.clone().unwrap_or(ProjectiveSpec::Linear {
            beta: 1.2,
            gamma: -0.8,
            c: 0.6,
            v0: 0.3,
            w0: -0.4,
        })),
    };
    let unused = [
        ("family", f.family.is_some() && !pipeline.uses_family()),
        ("surface", f.surface.is_some() && pipeline != Pipeline::EuclidRoundtrip),
        ("projective", f.projective.is_some() && pipeline != Pipeline::Wilczynski),
    ];
    for (key, bad) in unused {
        if bad {
            errs.push(format!("`{key}` is not used by pipeline `{pipeline}`"));
        }
    }
    let domain = f.domain.unwrap_or_else(|| default_domain(pipeline, f.family.as_ref(), f.surface.as_ref()));
    let grid_rect = f.grid.rect.unwrap_or_else(|| if pipeline == Pipeline::Landau { domain } else { inner(domain) });
    for (name, r) in [("domain", domain), ("grid.rect", grid_rect)] {
        if !(r.r1.0 < r.r1.1 && r.r2.0 < r.r2.1) || ![r.r1.0, r.r1.1, r.r2.0, r.r2.1].iter().all(|v| v.is_finite()) {
            errs.push(format!("{name} must have increasing finite bounds"));
        }
    }
    if pipeline != Pipeline::Landau && !domain.contains_rect(&grid_rect) {
        errs.push("grid.rect must lie inside the domain".into());
    }
    let step = f.step.unwrap_or(liesphere::frame::DEFAULT_STEP);
    if !(step > 0.0 && step.is_finite()) {
        errs.push(format!("step must be positive, got {step}"));
    }
    for (c, t) in f.tolerances.all() {
        if !(t > 0.0 && t.is_finite()) {
            errs.push(format!("tolerance `{}` must be positive, got {t}", c.name()));
        }
    }
    let checks = f.checks.clone().unwrap_or_else(|| pipeline.checks().to_vec());
    if checks.is_empty() {
        errs.push("the list of checks is empty".into());
    }
    for (i, c) in checks.iter().enumerate() {
        if !pipeline.checks().contains(c) {
            errs.push(format!("check `{}` is not available in pipeline `{pipeline}`", c.name()));
        }
        if checks[..i].contains(c) {
            errs.push(format!("check `{}` is listed twice", c.name()));
        }
    }
    let [n1, n2] = f.grid.n;
    if n1 < 2 || n2 < 2 {
        errs.push("grid needs at least 2 nodes per side".into());
    }
    if let Some(c) = checks.iter().find(|c| c.uses_stencil()) {
        if n1.min(n2) < MIN_STENCIL_GRID {
            errs.push(format!(
                "check `{}` uses fourth-order stencils and needs a grid of at least {MIN_STENCIL_GRID}×{MIN_STENCIL_GRID}, got {n1}×{n2}",
                c.name()
            ));
        }
    }
    if pipeline == Pipeline::Landau {
        let l = &f.landau;
        if !(l.m > 0.0) || !(l.k != 0.0) || !(l.y_max > 0.0) || l.samples < 2 || !(l.y_range[0] < l.y_range[1]) {
            errs.push("landau needs m > 0, k ≠ 0, y_max > 0, samples ≥ 2 and an increasing y_range".into());
        }
    }
    if !errs.is_empty() {
        return Err(ConfigError::Validation(errs));
    }
    Ok(RunConfig {
        schema: f.schema,
        pipeline,
        label: f.label.unwrap_or_else(|| pipeline.name().into()),
        subject,
        domain,
        grid: [n1, n2],
        grid_rect,
        step,
        tolerances: f.tolerances,
        checks,
        outputs: f.outputs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_gets_defaults() {
        let c = parse_config(r#"{"schema": 1}"#, Pipeline::Surface).unwrap();
        assert_eq!(c.grid, [41, 41]);
        assert_eq!(c.step, 1e-3);
        assert_eq!(c.checks, Pipeline::Surface.checks());
        assert!(matches!(c.subject, Subject::Family(FamilyParams::C0(_))));
        assert_eq!(c.grid_rect, Rect::new((0.7, 1.3), (0.7, 1.3)));
    }

    #[test]
    fn small_grid_with_stencil_check_is_rejected() {
        let text = r#"{"schema": 1, "grid": {"n": [5, 5]}, "checks": ["theorem1"]}"#;
        match parse_config(text, Pipeline::Surface) {
            Err(ConfigError::Validation(v)) => assert!(v[0].contains("theorem1")),
            other => panic!("{other:?}"),
        }
        let ok = r#"{"schema": 1, "grid": {"n": [5, 5]}, "checks": ["gc"]}"#;
        assert!(parse_config(ok, Pipeline::Surface).is_ok());
    }

    #[test]
    fn duplicate_key_is_a_parse_error() {
        let text = "{\"schema\": 1,\n \"step\": 1e-3,\n \"step\": 2e-3}";
        match parse_config(text, Pipeline::Integrate) {
            Err(ConfigError::Parse { line, message, .. }) => {
                assert_eq!(line, 3);
                assert!(message.contains("duplicate"));
            }
            other => panic!("{other:?}"),
        }
        let nested = r#"{"schema": 1, "family": {"variant": "canal", "m": 1, "m": 2, "lambda": 0.5, "k": 1}}"#;
        assert!(matches!(parse_config(nested, Pipeline::Integrate), Err(ConfigError::Parse { .. })));
    }

    #[test]
    fn unknown_keys_report_their_path() {
        let text = r#"{"schema": 1, "tolerances": {"gc": 1e-9, "bogus": 1}}"#;
        match parse_config(text, Pipeline::CheckGc) {
            Err(ConfigError::Parse { key, .. }) => assert!(key.starts_with("tolerances"), "{key}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn empty_check_list_is_rejected() {
        let text = r#"{"schema": 1, "checks": []}"#;
        assert!(matches!(parse_config(text, Pipeline::Landau), Err(ConfigError::Validation(_))));
    }

    #[test]
    fn every_violation_is_listed() {
        let text = r#"{"schema": 2, "step": -1, "tolerances": {"gc": 0}, "checks": ["theorem1"]}"#;
        match parse_config(text, Pipeline::CheckGc) {
            Err(ConfigError::Validation(v)) => assert_eq!(v.len(), 4, "{v:?}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn pipeline_mismatch_and_foreign_sections() {
        let text = r#"{"schema": 1, "pipeline": "landau"}"#;
        assert!(matches!(parse_config(text, Pipeline::Surface), Err(ConfigError::Validation(_))));
        let text = r#"{"schema": 1, "surface": {"kind": "torus", "a": 2, "b": 0.5}}"#;
        assert!(matches!(parse_config(text, Pipeline::Surface), Err(ConfigError::Validation(_))));
    }

    #[test]
    fn family_specific_default_domains() {
        let text = r#"{"schema": 1, "family": {"variant": "c1", "f1": [0, -4, 0, 4], "f2": [0, 4, 0, -4]}}"#;
        let c = parse_config(text, Pipeline::Integrate).unwrap();
        assert_eq!(c.domain, Rect::new((-0.8, -0.2), (0.2, 0.8)));
    }
}
