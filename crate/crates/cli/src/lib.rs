//! Batch front end: JSON problem specs in, analysis and certification
//! reports out, CSV series for external plotting.
//!
//! Reports are deterministic for a fixed `(spec, seed)`: analyses get
//! per-index sub-seeds, run in parallel, and are reassembled in spec order.
//! Timing data is opt-in so that default output stays byte-stable.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use anyhow::{anyhow, bail, Context};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use svi_core::certify::{
    certify_calm, certify_increase_slope, certify_lipusc, certify_liplsc, certify_val,
    CertVerdict, CertificationReport,
};
use svi_core::config::{EstimatorConfig, Tolerances};
use svi_core::geometry::{ConeSpec, ConvexBody, Vector, WindowBox};
use svi_core::increase::{check_c_increase, fan_increase_bound, FanIncreaseBound, IncreaseCertificate, Mat};
use svi_core::moduli::{
    calm_modulus, default_zeta, liploc_modulus, liplsc_modulus, lipusc_modulus, ModulusEstimate,
    ParamSetMap,
};
use svi_core::parametric::{
    val_calmness_report, value_at, value_profile, Objective, ValCalmnessReport, ValuePoint,
};
use svi_core::setmaps::{InclusionInstance, MapKind, SetMap};
use svi_core::slopes::{
    merit_fn, partial_strict_outer_slope, strict_outer_slope, strong_slope, tau, SlopeEstimate,
};

pub const TOOL_NAME: &str = "svi";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");
pub const SPEC_VERSION: u32 = 1;
pub const TOL_OVERRIDE_ENV: &str = "SVI_TOL_OVERRIDE";

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecFile {
    pub version: u32,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub tolerances: Option<Tolerances>,
    #[serde(default)]
    pub estimator: Option<EstimatorOverrides>,
    pub instances: Vec<InstanceSpec>,
    #[serde(default)]
    pub objectives: Vec<ObjectiveSpec>,
    pub analyses: Vec<AnalysisSpec>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EstimatorOverrides {
    pub dirs_n: Option<usize>,
    pub grid_n: Option<usize>,
    pub sample_n: Option<usize>,
    pub zeta: Option<f64>,
    pub slack_rel: Option<f64>,
    pub slope_pos_threshold: Option<f64>,
    pub delta_schedule: Option<Vec<f64>>,
    pub eps_schedule: Option<Vec<f64>>,
    pub r_schedule: Option<Vec<f64>>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceSpec {
    pub id: String,
    pub map: MapSpec,
    pub cone: ConeJson,
    pub pbar: Vec<f64>,
    pub xbar: Vec<f64>,
    pub p_window: WindowSpec,
    pub x_window: WindowSpec,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowSpec {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MapSpec {
    Epigraph {
        expr: String,
        p_dim: usize,
        x_dim: usize,
        #[serde(default)]
        concave_in_x: bool,
        #[serde(default)]
        lipschitz_p_hint: Option<f64>,
    },
    Fan {
        matrices: Vec<Vec<Vec<f64>>>,
        p_dim: usize,
    },
    Constant {
        body: BodySpec,
        p_dim: usize,
        x_dim: usize,
    },
    SqrtInterval,
    HalflineSign,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BodySpec {
    /// `null` endpoints mean the interval is unbounded on that side.
    Interval { lo: Option<f64>, hi: Option<f64> },
    Polytope { vertices: Vec<Vec<f64>> },
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ConeJson {
    Orthant { dim: usize },
    Halfline,
    Halfspace { normal: Vec<f64> },
    Generators { dim: usize, rays: Vec<Vec<f64>> },
    WholeSpace { dim: usize },
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectiveSpec {
    pub id: String,
    pub expr: String,
    #[serde(default)]
    pub lip_hint: Option<f64>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case", deny_unknown_fields)]
pub enum AnalysisSpec {
    Phi {
        id: String,
        instance: String,
        p: Vec<f64>,
        x: Vec<f64>,
    },
    StrongSlope {
        id: String,
        instance: String,
        x: Vec<f64>,
    },
    PartialOuterSlope {
        id: String,
        instance: String,
    },
    OuterSlope {
        id: String,
        instance: String,
    },
    Tau {
        id: String,
        instance: String,
    },
    Liplsc {
        id: String,
        instance: String,
    },
    Calm {
        id: String,
        instance: String,
    },
    Lipusc {
        id: String,
        instance: String,
    },
    MapLipusc {
        id: String,
        instance: String,
        #[serde(default)]
        x: Option<Vec<f64>>,
    },
    MapLiploc {
        id: String,
        instance: String,
        #[serde(default)]
        x: Option<Vec<f64>>,
    },
    ValueAt {
        id: String,
        instance: String,
        objective: String,
        p: Vec<f64>,
    },
    ValueSweep {
        id: String,
        instance: String,
        objective: String,
        #[serde(default = "default_sweep_n")]
        points: usize,
    },
    ValCalmness {
        id: String,
        instance: String,
        objective: String,
    },
    CertifyLiplsc {
        id: String,
        instance: String,
        #[serde(default)]
        bound_override: Option<f64>,
    },
    CertifyCalm {
        id: String,
        instance: String,
        #[serde(default)]
        bound_override: Option<f64>,
    },
    CertifyLipusc {
        id: String,
        instance: String,
        #[serde(default)]
        bound_override: Option<f64>,
    },
    CertifyVal {
        id: String,
        instance: String,
        objective: String,
        #[serde(default)]
        bound_override: Option<f64>,
    },
    CertifyIncreaseSlope {
        id: String,
        instance: String,
        #[serde(default)]
        alpha: Option<f64>,
    },
    FanBound {
        id: String,
        instance: String,
    },
    IncreaseCheck {
        id: String,
        instance: String,
        alpha: f64,
    },
}

fn default_sweep_n() -> usize {
    21
}

impl AnalysisSpec {
    pub fn id(&self) -> &str {
        match self {
            AnalysisSpec::Phi { id, .. }
            | AnalysisSpec::StrongSlope { id, .. }
            | AnalysisSpec::PartialOuterSlope { id, .. }
            | AnalysisSpec::OuterSlope { id, .. }
            | AnalysisSpec::Tau { id, .. }
            | AnalysisSpec::Liplsc { id, .. }
            | AnalysisSpec::Calm { id, .. }
            | AnalysisSpec::Lipusc { id, .. }
            | AnalysisSpec::MapLipusc { id, .. }
            | AnalysisSpec::MapLiploc { id, .. }
            | AnalysisSpec::ValueAt { id, .. }
            | AnalysisSpec::ValueSweep { id, .. }
            | AnalysisSpec::ValCalmness { id, .. }
            | AnalysisSpec::CertifyLiplsc { id, .. }
            | AnalysisSpec::CertifyCalm { id, .. }
            | AnalysisSpec::CertifyLipusc { id, .. }
            | AnalysisSpec::CertifyVal { id, .. }
            | AnalysisSpec::CertifyIncreaseSlope { id, .. }
            | AnalysisSpec::FanBound { id, .. }
            | AnalysisSpec::IncreaseCheck { id, .. } => id,
        }
    }

    pub fn instance(&self) -> &str {
        match self {
            AnalysisSpec::Phi { instance, .. }
            | AnalysisSpec::StrongSlope { instance, .. }
            | AnalysisSpec::PartialOuterSlope { instance, .. }
            | AnalysisSpec::OuterSlope { instance, .. }
            | AnalysisSpec::Tau { instance, .. }
            | AnalysisSpec::Liplsc { instance, .. }
            | AnalysisSpec::Calm { instance, .. }
            | AnalysisSpec::Lipusc { instance, .. }
            | AnalysisSpec::MapLipusc { instance, .. }
            | AnalysisSpec::MapLiploc { instance, .. }
            | AnalysisSpec::ValueAt { instance, .. }
            | AnalysisSpec::ValueSweep { instance, .. }
            | AnalysisSpec::ValCalmness { instance, .. }
            | AnalysisSpec::CertifyLiplsc { instance, .. }
            | AnalysisSpec::CertifyCalm { instance, .. }
            | AnalysisSpec::CertifyLipusc { instance, .. }
            | AnalysisSpec::CertifyVal { instance, .. }
            | AnalysisSpec::CertifyIncreaseSlope { instance, .. }
            | AnalysisSpec::FanBound { instance, .. }
            | AnalysisSpec::IncreaseCheck { instance, .. } => instance,
        }
    }

    pub fn op_name(&self) -> &'static str {
        match self {
            AnalysisSpec::Phi { .. } => "phi",
            AnalysisSpec::StrongSlope { .. } => "strong_slope",
            AnalysisSpec::PartialOuterSlope { .. } => "partial_outer_slope",
            AnalysisSpec::OuterSlope { .. } => "outer_slope",
            AnalysisSpec::Tau { .. } => "tau",
            AnalysisSpec::Liplsc { .. } => "liplsc",
            AnalysisSpec::Calm { .. } => "calm",
            AnalysisSpec::Lipusc { .. } => "lipusc",
            AnalysisSpec::MapLipusc { .. } => "map_lipusc",
            AnalysisSpec::MapLiploc { .. } => "map_liploc",
            AnalysisSpec::ValueAt { .. } => "value_at",
            AnalysisSpec::ValueSweep { .. } => "value_sweep",
            AnalysisSpec::ValCalmness { .. } => "val_calmness",
            AnalysisSpec::CertifyLiplsc { .. } => "certify_liplsc",
            AnalysisSpec::CertifyCalm { .. } => "certify_calm",
            AnalysisSpec::CertifyLipusc { .. } => "certify_lipusc",
            AnalysisSpec::CertifyVal { .. } => "certify_val",
            AnalysisSpec::CertifyIncreaseSlope { .. } => "certify_increase_slope",
            AnalysisSpec::FanBound { .. } => "fan_bound",
            AnalysisSpec::IncreaseCheck { .. } => "increase_check",
        }
    }

    pub fn is_certification(&self) -> bool {
        matches!(
            self,
            AnalysisSpec::CertifyLiplsc { .. }
                | AnalysisSpec::CertifyCalm { .. }
                | AnalysisSpec::CertifyLipusc { .. }
                | AnalysisSpec::CertifyVal { .. }
                | AnalysisSpec::CertifyIncreaseSlope { .. }
        )
    }
}

#[derive(Debug, Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum AnalysisOutput {
    Scalar { value: f64 },
    Modulus(ModulusEstimate),
    Slope(SlopeEstimate),
    Value(ValuePoint),
    Profile { points: Vec<ValuePoint> },
    ValCalmness(ValCalmnessReport),
    Certification(CertificationReport),
    CertificationBundle { reports: Vec<CertificationReport> },
    FanBound(FanIncreaseBound),
    Increase(IncreaseCertificate),
}

#[derive(Debug, Serialize)]
pub struct AnalysisRecord {
    pub id: String,
    pub op: &'static str,
    pub instance: String,
    pub output: AnalysisOutput,
}

#[derive(Debug, Serialize)]
pub struct TimingRecord {
    pub id: String,
    pub millis: u128,
}

#[derive(Debug, Serialize)]
pub struct RunReport {
    pub tool: &'static str,
    pub version: &'static str,
    pub spec_version: u32,
    pub seed: u64,
    pub input_sha256: String,
    pub analyses: Vec<AnalysisRecord>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timings: Option<Vec<TimingRecord>>,
}

impl RunReport {
    /// Exit-code contract: 2 when any certification came back violated.
    pub fn any_violated(&self) -> bool {
        let violated = |r: &CertificationReport| r.verdict == CertVerdict::Violated;
        self.analyses.iter().any(|a| match &a.output {
            AnalysisOutput::Certification(r) => violated(r),
            AnalysisOutput::CertificationBundle { reports } => reports.iter().any(violated),
            _ => false,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization") + "\n"
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RunFilter {
    All,
    AnalysesOnly,
    CertificationsOnly,
}

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub seed_override: Option<u64>,
    pub jobs: Option<usize>,
    pub only: Option<String>,
    pub timings: bool,
}

pub fn load_spec(path: &Path) -> anyhow::Result<(SpecFile, String)> {
    let raw = std::fs::read(path)
        .with_context(|| format!("reading spec file {}", path.display()))?;
    let digest = Sha256::digest(&raw);
    let mut hash = String::with_capacity(64);
    for b in digest {
        write!(hash, "{b:02x}").expect("hex digest");
    }
    let spec: SpecFile = serde_json::from_slice(&raw)
        .with_context(|| format!("parsing spec file {}", path.display()))?;
    if spec.version != SPEC_VERSION {
        bail!(
            "spec version {} not supported (this build reads version {SPEC_VERSION})",
            spec.version
        );
    }
    Ok((spec, hash))
}

fn build_vector(coords: &[f64], what: &str) -> anyhow::Result<Vector> {
    Vector::new(coords.to_vec()).map_err(|e| anyhow!("{what}: {e}"))
}

fn build_window(w: &WindowSpec, what: &str) -> anyhow::Result<WindowBox> {
    WindowBox::new(w.lo.clone(), w.hi.clone()).map_err(|e| anyhow!("{what}: {e}"))
}

fn build_cone(spec: &ConeJson) -> anyhow::Result<ConeSpec> {
    let cone = match spec {
        ConeJson::Orthant { dim } => ConeSpec::orthant(*dim)?,
        ConeJson::Halfline => ConeSpec::halfline(),
        ConeJson::Halfspace { normal } => {
            ConeSpec::halfspace(Vector::new(normal.clone())?)?
        }
        ConeJson::Generators { dim, rays } => {
            let mut gens = Vec::with_capacity(rays.len());
            for r in rays {
                gens.push(Vector::new(r.clone())?);
            }
            ConeSpec::from_generators(*dim, gens)?
        }
        ConeJson::WholeSpace { dim } => {
            let mut gens = Vec::with_capacity(2 * dim);
            for i in 0..*dim {
                gens.push(Vector::unit(*dim, i));
                gens.push(Vector::unit(*dim, i).scale(-1.0));
            }
            ConeSpec::from_generators(*dim, gens)?
        }
    };
    Ok(cone)
}

fn build_map(spec: &MapSpec) -> anyhow::Result<SetMap> {
    let map = match spec {
        MapSpec::Epigraph {
            expr,
            p_dim,
            x_dim,
            concave_in_x,
            lipschitz_p_hint,
        } => {
            let mut m = SetMap::epigraph(expr, *p_dim, *x_dim, *concave_in_x)?;
            if let Some(h) = lipschitz_p_hint {
                m = m.with_lipschitz_p_hint(*h);
            }
            m
        }
        MapSpec::Fan { matrices, p_dim } => {
            let mut mats = Vec::with_capacity(matrices.len());
            for rows in matrices {
                let r = rows.len();
                let c = rows.first().map(Vec::len).unwrap_or(0);
                let mut data = Vec::with_capacity(r * c);
                for row in rows {
                    if row.len() != c {
                        bail!("fan matrix rows have inconsistent lengths");
                    }
                    data.extend_from_slice(row);
                }
                mats.push(Mat::new(r, c, data)?);
            }
            SetMap::fan(mats, *p_dim)?
        }
        MapSpec::Constant { body, p_dim, x_dim } => {
            let body = match body {
                BodySpec::Interval { lo, hi } => ConvexBody::Interval {
                    lo: lo.unwrap_or(f64::NEG_INFINITY),
                    hi: hi.unwrap_or(f64::INFINITY),
                },
                BodySpec::Polytope { vertices } => {
                    let mut vs = Vec::with_capacity(vertices.len());
                    for v in vertices {
                        vs.push(Vector::new(v.clone())?);
                    }
                    ConvexBody::polytope(vs)?
                }
            };
            SetMap::constant(body, *p_dim, *x_dim)
        }
        MapSpec::SqrtInterval => SetMap::sqrt_interval(),
        MapSpec::HalflineSign => SetMap::halfline_sign(),
    };
    Ok(map)
}

fn effective_tolerances(spec: &SpecFile) -> anyhow::Result<Tolerances> {
    if let Ok(path) = std::env::var(TOL_OVERRIDE_ENV) {
        let raw = std::fs::read(&path)
            .with_context(|| format!("reading {TOL_OVERRIDE_ENV} file {path}"))?;
        let tol: Tolerances = serde_json::from_slice(&raw)
            .with_context(|| format!("parsing {TOL_OVERRIDE_ENV} file {path}"))?;
        return Ok(tol);
    }
    Ok(spec.tolerances.unwrap_or_default())
}

fn base_config(spec: &SpecFile, seed: u64, tol: Tolerances) -> EstimatorConfig {
    let mut cfg = EstimatorConfig::with_seed(seed);
    cfg.tol = tol;
    if let Some(o) = &spec.estimator {
        if let Some(v) = o.dirs_n {
            cfg.dirs_n = v;
        }
        if let Some(v) = o.grid_n {
            cfg.grid_n = v;
        }
        if let Some(v) = o.sample_n {
            cfg.sample_n = v;
        }
        if let Some(v) = o.zeta {
            cfg.zeta = Some(v);
        }
        if let Some(v) = o.slack_rel {
            cfg.slack_rel = v;
        }
        if let Some(v) = o.slope_pos_threshold {
            cfg.slope_pos_threshold = v;
        }
        if let Some(v) = &o.delta_schedule {
            cfg.delta_schedule = v.clone();
        }
        if let Some(v) = &o.eps_schedule {
            cfg.eps_schedule = v.clone();
        }
        if let Some(v) = &o.r_schedule {
            cfg.r_schedule = v.clone();
        }
    }
    cfg
}

pub struct Workspace {
    pub instances: BTreeMap<String, InclusionInstance>,
    pub objectives: BTreeMap<String, ObjectiveSpec>,
    pub config: EstimatorConfig,
}

/// Builds every instance up front so schema and validation errors surface
/// before any analysis runs (this is all `validate` does).
pub fn build_workspace(spec: &SpecFile, seed: u64) -> anyhow::Result<Workspace> {
    let tol = effective_tolerances(spec)?;
    let config = base_config(spec, seed, tol);
    let mut instances = BTreeMap::new();
    for inst in &spec.instances {
        if instances.contains_key(&inst.id) {
            bail!("duplicate instance id '{}'", inst.id);
        }
        let map = build_map(&inst.map).with_context(|| format!("instance '{}'", inst.id))?;
        let cone = build_cone(&inst.cone).with_context(|| format!("instance '{}'", inst.id))?;
        let built = InclusionInstance::new(
            map,
            cone,
            build_vector(&inst.pbar, "pbar")?,
            build_vector(&inst.xbar, "xbar")?,
            build_window(&inst.p_window, "p_window")?,
            build_window(&inst.x_window, "x_window")?,
            config.tol,
        )
        .with_context(|| format!("instance '{}'", inst.id))?;
        instances.insert(inst.id.clone(), built);
    }
    let mut objectives = BTreeMap::new();
    for obj in &spec.objectives {
        if objectives.insert(obj.id.clone(), obj.clone()).is_some() {
            bail!("duplicate objective id '{}'", obj.id);
        }
    }
    for analysis in &spec.analyses {
        if !instances.contains_key(analysis.instance()) {
            bail!(
                "analysis '{}' references unknown instance '{}'",
                analysis.id(),
                analysis.instance()
            );
        }
    }
    let mut seen = std::collections::BTreeSet::new();
    for analysis in &spec.analyses {
        if !seen.insert(analysis.id()) {
            bail!("duplicate analysis id '{}'", analysis.id());
        }
    }
    Ok(Workspace {
        instances,
        objectives,
        config,
    })
}

fn build_objective(
    ws: &Workspace,
    id: &str,
    instance: &InclusionInstance,
) -> anyhow::Result<Objective> {
    let spec = ws
        .objectives
        .get(id)
        .ok_or_else(|| anyhow!("unknown objective '{id}'"))?;
    let mut theta = Objective::expr(
        &spec.expr,
        instance.map().p_dim(),
        instance.map().x_dim(),
    )?;
    if let Some(h) = spec.lip_hint {
        theta = theta.with_lip_hint(h);
    }
    Ok(theta)
}

fn run_analysis(
    ws: &Workspace,
    analysis: &AnalysisSpec,
    cfg: &EstimatorConfig,
) -> anyhow::Result<AnalysisOutput> {
    let inst = &ws.instances[analysis.instance()];
    let (map, cone) = (inst.map(), inst.cone());
    let out = match analysis {
        AnalysisSpec::Phi { p, x, .. } => AnalysisOutput::Scalar {
            value: inst.phi_at(&build_vector(p, "p")?, &build_vector(x, "x")?)?,
        },
        AnalysisSpec::StrongSlope { x, .. } => {
            let psi = merit_fn(map, cone, inst.pbar());
            AnalysisOutput::Slope(strong_slope(&psi, &build_vector(x, "x")?, cfg)?)
        }
        AnalysisSpec::PartialOuterSlope { .. } => AnalysisOutput::Slope(
            partial_strict_outer_slope(map, cone, inst.pbar(), inst.xbar(), cfg)?,
        ),
        AnalysisSpec::OuterSlope { .. } => {
            let psi = merit_fn(map, cone, inst.pbar());
            AnalysisOutput::Slope(strict_outer_slope(&psi, inst.xbar(), cfg)?)
        }
        AnalysisSpec::Tau { .. } => {
            AnalysisOutput::Slope(tau(map, cone, inst.pbar(), inst.x_window(), cfg)?)
        }
        AnalysisSpec::Liplsc { .. } => {
            let solv = ParamSetMap::from_solv(inst, cfg.grid_n)?;
            AnalysisOutput::Modulus(liplsc_modulus(&solv, inst.pbar(), inst.xbar(), cfg)?)
        }
        AnalysisSpec::Calm { .. } => {
            let solv = ParamSetMap::from_solv(inst, cfg.grid_n)?;
            let zeta = cfg.zeta.unwrap_or_else(|| default_zeta(inst.x_window()));
            AnalysisOutput::Modulus(calm_modulus(&solv, inst.pbar(), inst.xbar(), zeta, cfg)?)
        }
        AnalysisSpec::Lipusc { .. } => {
            let solv = ParamSetMap::from_solv(inst, cfg.grid_n)?;
            AnalysisOutput::Modulus(lipusc_modulus(&solv, inst.pbar(), cfg)?)
        }
        AnalysisSpec::MapLipusc { x, .. } => {
            let at = match x {
                Some(c) => build_vector(c, "x")?,
                None => inst.xbar().clone(),
            };
            let family = ParamSetMap::from_p_slice(map, &at);
            AnalysisOutput::Modulus(lipusc_modulus(&family, inst.pbar(), cfg)?)
        }
        AnalysisSpec::MapLiploc { x, .. } => {
            let at = match x {
                Some(c) => build_vector(c, "x")?,
                None => inst.xbar().clone(),
            };
            let family = ParamSetMap::from_p_slice(map, &at);
            AnalysisOutput::Modulus(liploc_modulus(&family, inst.pbar(), cfg)?)
        }
        AnalysisSpec::ValueAt { objective, p, .. } => {
            let theta = build_objective(ws, objective, inst)?;
            AnalysisOutput::Value(value_at(inst, &theta, &build_vector(p, "p")?, cfg)?)
        }
        AnalysisSpec::ValueSweep {
            objective, points, ..
        } => {
            let theta = build_objective(ws, objective, inst)?;
            let grid = inst.p_window().lattice((*points).max(2));
            AnalysisOutput::Profile {
                points: value_profile(inst, &theta, &grid, cfg)?.points,
            }
        }
        AnalysisSpec::ValCalmness { objective, .. } => {
            let theta = build_objective(ws, objective, inst)?;
            AnalysisOutput::ValCalmness(val_calmness_report(inst, &theta, cfg)?)
        }
        AnalysisSpec::CertifyLiplsc { bound_override, .. } => {
            AnalysisOutput::Certification(certify_liplsc(inst, cfg, *bound_override)?)
        }
        AnalysisSpec::CertifyCalm { bound_override, .. } => {
            AnalysisOutput::Certification(certify_calm(inst, cfg, *bound_override)?)
        }
        AnalysisSpec::CertifyLipusc { bound_override, .. } => {
            AnalysisOutput::Certification(certify_lipusc(inst, None, cfg, *bound_override)?)
        }
        AnalysisSpec::CertifyVal {
            objective,
            bound_override,
            ..
        } => {
            let theta = build_objective(ws, objective, inst)?;
            AnalysisOutput::CertificationBundle {
                reports: certify_val(inst, &theta, cfg, *bound_override)?,
            }
        }
        AnalysisSpec::CertifyIncreaseSlope { alpha, .. } => {
            AnalysisOutput::CertificationBundle {
                reports: certify_increase_slope(inst, *alpha, cfg)?,
            }
        }
        AnalysisSpec::FanBound { .. } => match map.kind() {
            MapKind::Fan { matrices } => {
                AnalysisOutput::FanBound(fan_increase_bound(matrices, cone, cfg)?)
            }
            _ => bail!("fan_bound needs a fan map"),
        },
        AnalysisSpec::IncreaseCheck { alpha, .. } => {
            let pbar = inst.pbar();
            AnalysisOutput::Increase(check_c_increase(
                &|x: &Vector| map.evaluate(pbar, x),
                cone,
                *alpha,
                inst.x_window(),
                cfg,
                None,
            )?)
        }
    };
    Ok(out)
}

/// Distinct sub-seed per analysis index so reordering analyses in the spec
/// changes individual results but never couples them.
fn sub_seed(seed: u64, idx: usize) -> u64 {
    seed.wrapping_add((idx as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

pub fn execute(
    spec: &SpecFile,
    filter: RunFilter,
    opts: &RunOptions,
    input_sha256: String,
) -> anyhow::Result<RunReport> {
    let seed = opts.seed_override.unwrap_or(spec.seed);
    let ws = build_workspace(spec, seed)?;

    let selected: Vec<(usize, &AnalysisSpec)> = spec
        .analyses
        .iter()
        .enumerate()
        .filter(|(_, a)| match filter {
            RunFilter::All => true,
            RunFilter::AnalysesOnly => !a.is_certification(),
            RunFilter::CertificationsOnly => a.is_certification(),
        })
        .filter(|(_, a)| opts.only.as_deref().map_or(true, |id| a.id() == id))
        .collect();
    if let Some(only) = &opts.only {
        if selected.is_empty() {
            bail!("analysis '{only}' not found in the spec (or filtered out)");
        }
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.jobs.unwrap_or(0))
        .build()
        .context("building worker pool")?;
    let results: Vec<anyhow::Result<(AnalysisRecord, u128)>> = pool.install(|| {
        selected
            .par_iter()
            .map(|(idx, analysis)| {
                let mut cfg = ws.config.clone();
                cfg.seed = sub_seed(seed, *idx);
                let start = Instant::now();
                let output = run_analysis(&ws, analysis, &cfg)
                    .with_context(|| format!("analysis '{}'", analysis.id()))?;
                Ok((
                    AnalysisRecord {
                        id: analysis.id().to_string(),
                        op: analysis.op_name(),
                        instance: analysis.instance().to_string(),
                        output,
                    },
                    start.elapsed().as_millis(),
                ))
            })
            .collect()
    });

    let mut analyses = Vec::with_capacity(results.len());
    let mut timings = Vec::with_capacity(results.len());
    for r in results {
        let (record, millis) = r?;
        timings.push(TimingRecord {
            id: record.id.clone(),
            millis,
        });
        analyses.push(record);
    }
    Ok(RunReport {
        tool: TOOL_NAME,
        version: TOOL_VERSION,
        spec_version: spec.version,
        seed,
        input_sha256,
        analyses,
        timings: opts.timings.then_some(timings),
    })
}

fn format_sig(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.11e}")
    } else if v.is_nan() {
        "nan".into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

/// CSV series for one analysis: level data for moduli and slopes, `(p, val)`
/// rows for value sweeps, a single row for scalar results.
pub fn emit_csv(report: &RunReport, series: &str) -> anyhow::Result<String> {
    let record = report
        .analyses
        .iter()
        .find(|a| a.id == series)
        .ok_or_else(|| anyhow!("no analysis with id '{series}' in the report"))?;
    let mut out = String::new();
    match &record.output {
        AnalysisOutput::Scalar { value } => {
            out.push_str("value\n");
            out.push_str(&format_sig(*value));
            out.push('\n');
        }
        AnalysisOutput::Modulus(m) => {
            out.push_str("scale,estimate\n");
            for l in &m.levels {
                let _ = writeln!(out, "{},{}", format_sig(l.scale), format_sig(l.estimate));
            }
        }
        AnalysisOutput::Slope(s) => {
            out.push_str("scale,estimate\n");
            for l in &s.levels {
                let _ = writeln!(out, "{},{}", format_sig(l.scale), format_sig(l.estimate));
            }
        }
        AnalysisOutput::Profile { points } => {
            let p_dim = points.first().map(|vp| vp.p.dim()).unwrap_or(1);
            for i in 0..p_dim {
                let _ = write!(out, "p{i},");
            }
            out.push_str("val\n");
            for vp in points {
                for c in vp.p.coords() {
                    let _ = write!(out, "{},", format_sig(*c));
                }
                let _ = writeln!(out, "{}", format_sig(vp.val));
            }
        }
        AnalysisOutput::Certification(r) => {
            out.push_str("scale,estimate\n");
            let levels = match &r.empirical {
                svi_core::certify::Empirical::Modulus(m) => &m.levels,
                svi_core::certify::Empirical::Slope(s) => &s.levels,
            };
            for l in levels {
                let _ = writeln!(out, "{},{}", format_sig(l.scale), format_sig(l.estimate));
            }
        }
        other => bail!(
            "analysis '{series}' ({}) has no CSV series",
            match other {
                AnalysisOutput::ValCalmness(_) => "val_calmness",
                AnalysisOutput::CertificationBundle { .. } => "certification bundle",
                AnalysisOutput::FanBound(_) => "fan bound",
                AnalysisOutput::Increase(_) => "increase certificate",
                _ => "unknown",
            }
        ),
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal_spec(analyses: &str) -> String {
        format!(
            r#"{{
  "version": 1,
  "seed": 7,
  "instances": [
    {{
      "id": "shift",
      "map": {{ "kind": "epigraph", "expr": "x - p", "p_dim": 1, "x_dim": 1, "concave_in_x": true }},
      "cone": {{ "kind": "orthant", "dim": 1 }},
      "pbar": [0.0],
      "xbar": [0.0],
      "p_window": {{ "lo": [-1.0], "hi": [1.0] }},
      "x_window": {{ "lo": [-4.0], "hi": [4.0] }}
    }}
  ],
  "objectives": [ {{ "id": "height", "expr": "x" }} ],
  "analyses": [ {analyses} ]
}}"#
        )
    }

    fn parse(json: &str) -> SpecFile {
        serde_json::from_str(json).unwrap()
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let json = minimal_spec(r#"{ "op": "phi", "id": "a", "instance": "shift", "p": [0.0], "x": [0.0], "stray": 1 }"#);
        assert!(serde_json::from_str::<SpecFile>(&json).is_err());
    }

    #[test]
    fn analyses_must_reference_known_instances() {
        let spec = parse(&minimal_spec(
            r#"{ "op": "phi", "id": "a", "instance": "nope", "p": [0.0], "x": [0.0] }"#,
        ));
        assert!(build_workspace(&spec, 7).is_err());
    }

    #[test]
    fn duplicate_analysis_ids_are_rejected() {
        let spec = parse(&minimal_spec(
            r#"{ "op": "phi", "id": "a", "instance": "shift", "p": [0.0], "x": [0.0] },
               { "op": "tau", "id": "a", "instance": "shift" }"#,
        ));
        assert!(build_workspace(&spec, 7).is_err());
    }

    #[test]
    fn run_produces_records_in_spec_order() {
        let spec = parse(&minimal_spec(
            r#"{ "op": "phi", "id": "merit", "instance": "shift", "p": [1.0], "x": [0.0] },
               { "op": "liplsc", "id": "rate", "instance": "shift" }"#,
        ));
        let report = execute(&spec, RunFilter::All, &RunOptions::default(), "x".into()).unwrap();
        assert_eq!(report.analyses.len(), 2);
        assert_eq!(report.analyses[0].id, "merit");
        assert_eq!(report.analyses[1].id, "rate");
        match &report.analyses[0].output {
            AnalysisOutput::Scalar { value } => assert!((value - 1.0).abs() <= 1e-12),
            other => panic!("unexpected output {other:?}"),
        }
        assert!(!report.any_violated());
    }

    #[test]
    fn only_filter_selects_one_analysis() {
        let spec = parse(&minimal_spec(
            r#"{ "op": "phi", "id": "merit", "instance": "shift", "p": [1.0], "x": [0.0] },
               { "op": "tau", "id": "floor", "instance": "shift" }"#,
        ));
        let opts = RunOptions {
            only: Some("floor".into()),
            ..Default::default()
        };
        let report = execute(&spec, RunFilter::All, &opts, "x".into()).unwrap();
        assert_eq!(report.analyses.len(), 1);
        assert_eq!(report.analyses[0].id, "floor");
    }

    #[test]
    fn csv_levels_round_trip() {
        let spec = parse(&minimal_spec(
            r#"{ "op": "liplsc", "id": "rate", "instance": "shift" }"#,
        ));
        let report = execute(&spec, RunFilter::All, &RunOptions::default(), "x".into()).unwrap();
        let csv = emit_csv(&report, "rate").unwrap();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("scale,estimate"));
        let first = lines.next().unwrap();
        assert!(first.contains(','), "row {first}");
        assert!(emit_csv(&report, "missing").is_err());
    }

    #[test]
    fn value_sweep_emits_parameter_rows() {
        let spec = parse(&minimal_spec(
            r#"{ "op": "value_sweep", "id": "vals", "instance": "shift", "objective": "height", "points": 5 }"#,
        ));
        let report = execute(&spec, RunFilter::All, &RunOptions::default(), "x".into()).unwrap();
        let csv = emit_csv(&report, "vals").unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "p0,val");
        assert_eq!(lines.len(), 6);
        // val(p) = p for the shift instance under θ(p, x) = x.
        for row in &lines[1..] {
            let (p, v) = row.split_once(',').unwrap();
            let (p, v): (f64, f64) = (p.parse().unwrap(), v.parse().unwrap());
            assert!((p - v).abs() <= 1e-6, "row {row}");
        }
    }
}
