//! Pipeline execution and the invariant report.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use liesphere::euclid::{euclid_roundtrip, lie_lift, weingarten_data, RoundTrip, SurfaceSpec};
use liesphere::frame::{holonomy_defect, integrate_grid, lie6_residual, su22_exp, FrameGrid};
use liesphere::potentials::{gc_max_residual, lie_gc_residual};
use liesphere::spectral::{
    erfi_integral, landau_center_radius, landau_hex, landau_operator_check, landau_scaled_basis, landau_surface,
    lie_quadric, LandauBasis,
};
use liesphere::surface::{envelope_reconstruct, reconstruct_grid, theorem1_check};
use liesphere::wilczynski::{
    integrate_proj_grid, laplace_residuals, proj_gc_max_residual, proj_holonomy_defect, table_residual,
    uapvbq_residual, ProjectiveFrameGrid, ProjectivePotentials, ProjectiveSpec,
};
use liesphere::{Axis, FamilyParams, PotentialField, Rect, C64};
use nalgebra::Matrix4;
use serde::Serialize;
use serde_json::Value;

use crate::config::{Check, LandauConfig, Pipeline, RunConfig, Subject};
use crate::output::{emit_mesh, write_csv, MeshStats};

/// Outcome of one check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    /// Absent when the check could not be evaluated.
    pub max_residual: Option<f64>,
    pub tolerance: f64,
    pub pass: bool,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridMeta {
    pub rect: Rect,
    pub n: [usize; 2],
    pub spacing: [f64; 2],
    pub integration_step: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Artifact {
    pub kind: String,
    pub path: String,
}

/// Everything a run reports, apart from wall times.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InvariantReport {
    pub schema: u32,
    pub pipeline: String,
    pub label: String,
    pub config: RunConfig,
    pub grid: GridMeta,
    pub checks: Vec<CheckResult>,
    pub pass: bool,
    /// Pipeline-specific values such as profile data at the origin.
    pub values: BTreeMap<String, Value>,
    pub artifacts: Vec<Artifact>,
}

/// Wall times in seconds, written to their own file so reports stay byte-stable.
#[derive(Debug, Clone, PartialEq, Serialize, Default)]
pub struct Timings {
    pub checks: BTreeMap<String, f64>,
    pub total: f64,
}

#[derive(Debug)]
pub struct RunOutput {
    pub report: InvariantReport,
    pub timings: Timings,
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("cannot write {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

type CheckFn<'a, C> = dyn FnMut(&mut C) -> liesphere::Result<f64> + 'a;

struct Runner<'a> {
    cfg: &'a RunConfig,
    results: Vec<CheckResult>,
    timings: Timings,
    values: BTreeMap<String, Value>,
}

impl<'a> Runner<'a> {
    fn eval<C>(&mut self, ctx: &mut C, check: Check, f: &mut CheckFn<'_, C>) {
        let t = Instant::now();
        let tol = self.cfg.tolerances.get(check);
        let r = match f(ctx) {
            Ok(v) => CheckResult {
                name: check.name().into(),
                max_residual: Some(v),
                tolerance: tol,
                pass: v.is_finite() && v <= tol,
                error: None,
            },
            Err(e) => CheckResult {
                name: check.name().into(),
                max_residual: None,
                tolerance: tol,
                pass: false,
                error: Some(e.to_string()),
            },
        };
        self.timings.checks.insert(check.name().into(), t.elapsed().as_secs_f64());
        self.results.push(r);
    }

    fn value(&mut self, key: &str, v: impl Serialize) {
        self.values.insert(key.into(), serde_json::to_value(v).unwrap_or(Value::Null));
    }
}

fn axes(cfg: &RunConfig) -> (Axis, Axis) {
    let r = cfg.grid_rect;
    (Axis::new(r.r1.0, r.r1.1, cfg.grid[0]), Axis::new(r.r2.0, r.r2.1, cfg.grid[1]))
}

fn center(cfg: &RunConfig) -> (usize, usize) {
    (cfg.grid[0] / 2, cfg.grid[1] / 2)
}

fn max_of(values: impl IntoIterator<Item = f64>) -> f64 {
    values.into_iter().fold(0.0, |m, v| if v.is_nan() || m.is_nan() { f64::NAN } else { m.max(v) })
}

/// Fixed generic starting frame, so that no curvature sphere at the base node is a plane.
fn generic_start() -> Matrix4<C64> {
    let x = Matrix4::from_fn(|i, j| C64::new(0.1 * (i as f64 + 1.0) - 0.07 * j as f64, 0.05 * (i as f64 - j as f64)));
    su22_exp(&x)
}

/// Execute the configured pipeline and write report, timings and artifacts to `out_dir`.
pub fn run(cfg: &RunConfig, out_dir: &Path) -> Result<RunOutput, RunError> {
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| RunError::Io { path, source }
    };
    std::fs::create_dir_all(out_dir).map_err(io(out_dir))?;
    let start = Instant::now();
    let mut runner = Runner { cfg, results: Vec::new(), timings: Timings::default(), values: BTreeMap::new() };
    let mut artifacts = Vec::new();
    let mut add = |kind: &str, name: &str| -> PathBuf {
        artifacts.push(Artifact { kind: kind.into(), path: name.into() });
        out_dir.join(name)
    };
    match &cfg.subject {
        Subject::Family(fp) => {
            let (mesh, samples) = run_family(&mut runner, fp)?;
            if let (Some(name), Some(rows)) = (&cfg.outputs.samples, samples) {
                let p = add("samples", name);
                rows.write(&p).map_err(io(&p))?;
            }
            if let (Some(name), Some(points)) = (&cfg.outputs.mesh, mesh) {
                let p = add("mesh", name);
                let stats = emit_mesh(&p, &points, cfg.grid[0], cfg.grid[1]).map_err(io(&p))?;
                runner.value("mesh", stats);
            }
        }
        Subject::Landau(l) => {
            if let Some(rows) = run_landau(&mut runner, l) {
                if let Some(name) = &cfg.outputs.profile {
                    let p = add("profile", name);
                    write_csv(&p, &rows).map_err(io(&p))?;
                }
            }
        }
        Subject::Surface(s) => {
            let points = run_euclid(&mut runner, s);
            if let Some(name) = &cfg.outputs.mesh {
                let p = add("mesh", name);
                let stats: MeshStats = emit_mesh(&p, &points, cfg.grid[0], cfg.grid[1]).map_err(io(&p))?;
                runner.value("mesh", stats);
            }
        }
        Subject::Projective(s) => {
            if let Some(points) = run_projective(&mut runner, s) {
                if let Some(name) = &cfg.outputs.mesh {
                    let p = add("mesh", name);
                    let stats = emit_mesh(&p, &points, cfg.grid[0], cfg.grid[1]).map_err(io(&p))?;
                    runner.value("mesh", stats);
                }
            }
        }
    }
    let (h1, h2) = {
        let (a, b) = axes(cfg);
        (a.step(), b.step())
    };
    let report = InvariantReport {
        schema: cfg.schema,
        pipeline: cfg.pipeline.name().into(),
        label: cfg.label.clone(),
        config: cfg.clone(),
        grid: GridMeta { rect: cfg.grid_rect, n: cfg.grid, spacing: [h1, h2], integration_step: cfg.step },
        pass: runner.results.iter().all(|r| r.pass),
        checks: runner.results,
        values: runner.values,
        artifacts,
    };
    let mut timings = runner.timings;
    timings.total = start.elapsed().as_secs_f64();
    let rp = out_dir.join(&cfg.outputs.report);
    std::fs::write(&rp, to_json(&report)).map_err(io(&rp))?;
    let tp = out_dir.join(&cfg.outputs.timings);
    std::fs::write(&tp, to_json(&timings)).map_err(io(&tp))?;
    Ok(RunOutput { report, timings })
}

fn to_json(v: &impl Serialize) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("report types serialize");
    s.push('\n');
    s
}

#[derive(Serialize)]
struct FieldRow {
    r1: f64,
    r2: f64,
    p: f64,
    q: f64,
    v: f64,
    w: f64,
}

#[derive(Serialize)]
struct SurfaceRow {
    r1: f64,
    r2: f64,
    x: f64,
    y: f64,
    z: f64,
    nx: f64,
    ny: f64,
    nz: f64,
    w1: f64,
    w2: f64,
}

enum Rows {
    Field(Vec<FieldRow>),
    Surface(Vec<SurfaceRow>),
}

impl Rows {
    fn write(&self, p: &Path) -> std::io::Result<()> {
        match self {
            Rows::Field(r) => write_csv(p, r),
            Rows::Surface(r) => write_csv(p, r),
        }
    }
}

struct FamilyCtx<'a> {
    cfg: &'a RunConfig,
    field: PotentialField,
    start: Matrix4<C64>,
    frames: Option<liesphere::Result<FrameGrid>>,
}

impl FamilyCtx<'_> {
    fn frames(&mut self) -> liesphere::Result<&FrameGrid> {
        if self.frames.is_none() {
            let (a1, a2) = axes(self.cfg);
            self.frames = Some(integrate_grid(&self.field, a1, a2, center(self.cfg), &self.start, self.cfg.step));
        }
        match self.frames.as_ref().expect("just filled") {
            Ok(g) => Ok(g),
            Err(e) => Err(e.clone()),
        }
    }
}

type Mesh = Option<Vec<Option<[f64; 3]>>>;

fn run_family(runner: &mut Runner<'_>, fp: &FamilyParams) -> Result<(Mesh, Option<Rows>), RunError> {
    let cfg = runner.cfg;
    let field = match fp.build(cfg.domain) {
        Ok(f) => f,
        Err(e) => {
            for &c in &cfg.checks {
                runner.eval(&mut (), c, &mut |_| Err(e.clone()));
            }
            return Ok((None, None));
        }
    };
    let start = if cfg.pipeline == Pipeline::Surface { generic_start() } else { Matrix4::identity() };
    let mut ctx = FamilyCtx { cfg, field, start, frames: None };
    let sample_n = cfg.grid[0].min(cfg.grid[1]).min(21);
    for &check in &cfg.checks {
        runner.eval(&mut ctx, check, &mut |ctx: &mut FamilyCtx<'_>| match check {
            Check::Gc => gc_max_residual(&ctx.field, cfg.grid_rect, sample_n),
            Check::LieGc => {
                let (a1, a2) = (Axis::new(cfg.grid_rect.r1.0, cfg.grid_rect.r1.1, sample_n), Axis::new(cfg.grid_rect.r2.0, cfg.grid_rect.r2.1, sample_n));
                let mut worst = 0.0f64;
                for x in a1.nodes() {
                    for y in a2.nodes() {
                        worst = worst.max(max_of(lie_gc_residual(&ctx.field, x, y)?.map(f64::abs)));
                    }
                }
                Ok(worst)
            }
            Check::Holonomy => holonomy_defect(&ctx.field, cfg.grid_rect, &Matrix4::identity(), cfg.step),
            Check::Conservation => {
                let g = ctx.frames()?;
                Ok(max_of(g.frames.iter().map(|f| f.gram_drift().max(f.det_drift()))))
            }
            Check::Lie6 => {
                let g = ctx.frames()?.clone();
                lie6_residual(&ctx.field, &g)
            }
            Check::Theorem1 => {
                let g = ctx.frames()?.clone();
                Ok(theorem1_check(&g, &ctx.field)?.max())
            }
            _ => unreachable!("validated against the pipeline"),
        });
    }
    let (a1, a2) = axes(cfg);
    if cfg.pipeline != Pipeline::Surface {
        let mut rows = Vec::new();
        for x in a1.nodes() {
            for y in a2.nodes() {
                if let Ok([p, q, v, w]) = ctx.field.values(x, y) {
                    rows.push(FieldRow { r1: x, r2: y, p, q, v, w });
                }
            }
        }
        return Ok((None, Some(Rows::Field(rows))));
    }
    let Ok(g) = ctx.frames() else { return Ok((None, None)) };
    let recon = reconstruct_grid(g);
    let failed = recon.iter().filter(|r| r.is_err()).count();
    runner.value("failed_nodes", failed);
    let mut rows = Vec::new();
    let points = recon
        .iter()
        .map(|r| {
            r.as_ref().ok().map(|s| {
                let (r1, r2) = s.point;
                let p = s.surface;
                rows.push(SurfaceRow {
                    r1,
                    r2,
                    x: p.r[0],
                    y: p.r[1],
                    z: p.r[2],
                    nx: p.n[0],
                    ny: p.n[1],
                    nz: p.n[2],
                    w1: p.w1,
                    w2: p.w2,
                });
                p.r
            })
        })
        .collect();
    Ok((Some(points), Some(Rows::Surface(rows))))
}

#[derive(Serialize)]
struct ProfileRow {
    y: f64,
    z: f64,
    radius: f64,
}

struct LandauCtx {
    basis: liesphere::Result<LandauBasis>,
    k: f64,
    lambda: f64,
}

fn run_landau(runner: &mut Runner<'_>, l: &LandauConfig) -> Option<Vec<ProfileRow>> {
    let cfg = runner.cfg;
    let params = l.canal();
    // profile and closed form live in the variables scaled to unit field strength
    let lambda = l.lambda / l.m;
    let mut ctx = LandauCtx { basis: landau_scaled_basis(&params, l.y_max), k: l.k / l.m.sqrt(), lambda };
    let ys: Vec<f64> = Axis::new(l.y_range[0], l.y_range[1], l.samples).nodes();
    for &check in &cfg.checks {
        runner.eval(&mut ctx, check, &mut |ctx: &mut LandauCtx| {
            let basis = ctx.basis.as_ref().map_err(|e| e.clone())?;
            match check {
                Check::Wronskian => {
                    let ode = LandauBasis::integrate(ctx.lambda, l.y_max)?;
                    let grid = Axis::new(-0.75 * l.y_max, 0.75 * l.y_max, 61).nodes();
                    let mut worst = (basis.wronskian() - 1.0).abs();
                    for y in grid {
                        worst = worst.max((ode.wronskian_at(y)? - 1.0).abs());
                    }
                    Ok(worst)
                }
                Check::ProfileZero => {
                    if !basis.is_closed_form() {
                        return Err(liesphere::Error::InvalidInput(format!(
                            "the closed-form profile needs λ/M = 1/2, got {}",
                            ctx.lambda
                        )));
                    }
                    let i1 = erfi_integral(1.0);
                    let k = ctx.k;
                    let (z, r) = landau_center_radius(basis, k, 0.0)?;
                    Ok((z - (-k / i1 - i1 / (4.0 * k))).abs().max((r - (-k / i1 + i1 / (4.0 * k))).abs()))
                }
                Check::Quadric => {
                    let mut worst = 0.0f64;
                    for &y in &ys {
                        if let Ok(h) = landau_hex(basis, ctx.k, y) {
                            let scale = h.iter().map(|v| v * v).sum::<f64>().max(1.0);
                            worst = worst.max(lie_quadric(&h).abs() / scale);
                        }
                    }
                    Ok(worst)
                }
                Check::Operators => {
                    let (a1, a2) = axes(cfg);
                    let r = landau_operator_check(&params, a1, a2, l.bumps)?;
                    Ok(r.h_residual.max(r.f_residual).max(r.commutator))
                }
                _ => unreachable!("validated against the pipeline"),
            }
        });
    }
    let basis = ctx.basis.ok()?;
    if let Ok((z, r)) = landau_center_radius(&basis, ctx.k, 0.0) {
        runner.value("z0", z);
        runner.value("r0", r);
    }
    let profile = landau_surface(&basis, ctx.k, &ys).ok()?;
    runner.value("poles", &profile.poles);
    Some(profile.samples.iter().map(|s| ProfileRow { y: s.y, z: s.z, radius: s.radius }).collect())
}

struct EuclidCtx<'a> {
    cfg: &'a RunConfig,
    surface: &'a SurfaceSpec,
    trip: Option<liesphere::Result<RoundTrip>>,
}

impl EuclidCtx<'_> {
    fn trip(&mut self) -> liesphere::Result<&RoundTrip> {
        if self.trip.is_none() {
            let n = self.cfg.grid[0].min(self.cfg.grid[1]);
            self.trip = Some(euclid_roundtrip(self.surface, self.cfg.grid_rect, n, self.cfg.step));
        }
        self.trip.as_ref().expect("just filled").as_ref().map_err(|e| e.clone())
    }
}

fn lift_points(cfg: &RunConfig, s: &SurfaceSpec) -> (Vec<Option<[f64; 3]>>, liesphere::Result<f64>) {
    let (a1, a2) = axes(cfg);
    let mut points = Vec::new();
    let mut worst: liesphere::Result<f64> = Ok(0.0);
    for x in a1.nodes() {
        for y in a2.nodes() {
            let r = (|| -> liesphere::Result<([f64; 3], f64)> {
                let w = weingarten_data(s, x, y)?;
                let (u, v) = lie_lift(s, x, y)?;
                let p = envelope_reconstruct(&u, &v)?;
                let mut d = 0.0f64;
                for c in 0..3 {
                    d = d.max((p.r[c] - w.r[c]).abs()).max((p.n[c] - w.n[c]).abs());
                }
                d = d.max((p.w1 - w.w1).abs() / w.w1.abs().max(1.0)).max((p.w2 - w.w2).abs() / w.w2.abs().max(1.0));
                Ok((p.r, d))
            })();
            match r {
                Ok((p, d)) => {
                    points.push(Some(p));
                    if let Ok(m) = worst.as_mut() {
                        *m = m.max(d);
                    }
                }
                Err(e) => {
                    points.push(None);
                    if worst.is_ok() {
                        worst = Err(e);
                    }
                }
            }
        }
    }
    (points, worst)
}

fn run_euclid(runner: &mut Runner<'_>, s: &SurfaceSpec) -> Vec<Option<[f64; 3]>> {
    let cfg = runner.cfg;
    let (lifted, lift_residual) = lift_points(cfg, s);
    let mut ctx = EuclidCtx { cfg, surface: s, trip: None };
    for &check in &cfg.checks {
        runner.eval(&mut ctx, check, &mut |ctx: &mut EuclidCtx<'_>| match check {
            Check::Lift => lift_residual.clone(),
            Check::Dirac => Ok(ctx.trip()?.report.dirac_residual),
            Check::FrameTable => Ok(ctx.trip()?.report.table_residual),
            Check::Position => Ok(ctx.trip()?.report.position_error),
            Check::Metric => Ok(ctx.trip()?.report.metric_error),
            _ => unreachable!("validated against the pipeline"),
        });
    }
    match ctx.trip {
        Some(Ok(t)) => {
            runner.value("round_trip", t.report);
            t.samples.iter().map(|s| s.map(|p| p.r)).collect()
        }
        _ => lifted,
    }
}

struct ProjCtx<'a> {
    cfg: &'a RunConfig,
    pot: ProjectivePotentials,
    frames: Option<liesphere::Result<ProjectiveFrameGrid>>,
}

impl ProjCtx<'_> {
    fn frames(&mut self) -> liesphere::Result<&ProjectiveFrameGrid> {
        if self.frames.is_none() {
            let (a1, a2) = axes(self.cfg);
            self.frames = Some(integrate_proj_grid(&self.pot, a1, a2, center(self.cfg), &Matrix4::identity(), self.cfg.step));
        }
        self.frames.as_ref().expect("just filled").as_ref().map_err(|e| e.clone())
    }
}

fn run_projective(runner: &mut Runner<'_>, spec: &ProjectiveSpec) -> Mesh {
    let cfg = runner.cfg;
    let pot = match ProjectivePotentials::from_spec(spec, cfg.domain) {
        Ok(p) => p,
        Err(e) => {
            for &c in &cfg.checks {
                runner.eval(&mut (), c, &mut |_| Err(e.clone()));
            }
            return None;
        }
    };
    let mut ctx = ProjCtx { cfg, pot, frames: None };
    let sample_n = cfg.grid[0].min(cfg.grid[1]).min(21);
    for &check in &cfg.checks {
        runner.eval(&mut ctx, check, &mut |ctx: &mut ProjCtx<'_>| match check {
            Check::Gc => proj_gc_max_residual(&ctx.pot, cfg.grid_rect, sample_n),
            Check::Holonomy => proj_holonomy_defect(&ctx.pot, cfg.grid_rect, cfg.step),
            Check::Table => Ok(table_residual(ctx.frames()?)),
            Check::Laplace => {
                let g = ctx.frames()?.clone();
                let (u, v) = laplace_residuals(&ctx.pot, &g)?;
                Ok(u.max(v))
            }
            Check::Uapvbq => {
                let g = ctx.frames()?.clone();
                uapvbq_residual(&ctx.pot, &g)
            }
            _ => unreachable!("validated against the pipeline"),
        });
    }
    let g = ctx.frames().ok()?;
    // affine chart r ↦ (r¹, r², r³)/r⁰
    Some(
        g.frames
            .iter()
            .map(|f| {
                let r = f.r();
                (r[0].abs() > 1e-8).then(|| [r[1] / r[0], r[2] / r[0], r[3] / r[0]])
            })
            .collect(),
    )
}
