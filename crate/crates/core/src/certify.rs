//! Certification of the stability statements on an inclusion instance.
//!
//! Each report pairs the hypothesis checklist (with evidence and an honest
//! status: structural facts are verified, sampled facts only
//! window-verified) against the structural bound and an empirical modulus
//! measured independently of the bound. A failed hypothesis makes the
//! report vacuous rather than violated; violated is reserved for an
//! empirical value that beats the bound beyond the estimator slack while
//! every hypothesis held.

use serde::Serialize;

use crate::config::EstimatorConfig;
use crate::estimate::{Level, Verdict};
use crate::geometry::{Vector, WindowBox};
use crate::increase::{check_c_increase, fan_increase_bound, interiority_check, IncreaseCertificate};
use crate::moduli::{
    calm_modulus, default_zeta, lip_joint_modulus, lip_p_uniform_modulus, liplsc_modulus,
    lipusc_modulus, ModulusEstimate, ParamSetMap,
};
use crate::parametric::{val_calmness_report, BoundValue, LipSource, Objective};
use crate::setmaps::{InclusionInstance, MapKind, SetMap};
use crate::slopes::{
    merit_fn, partial_strict_outer_slope, strict_outer_slope, strong_slope, tau, SlopeEstimate,
};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum HypothesisStatus {
    /// Exact or structural fact.
    Verified,
    /// Supported by sampling on the instance windows only.
    WindowVerified,
    /// Asserted by the caller, not checked.
    Assumed,
    Failed,
    NotCheckable,
}

#[derive(Clone, Debug, Serialize)]
pub struct HypothesisCheck {
    pub id: String,
    pub description: String,
    pub status: HypothesisStatus,
    pub evidence: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CertVerdict {
    Consistent,
    Vacuous,
    Violated,
}

/// Which side of the empirical estimate the bound claims.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundDirection {
    UpperBoundsEmpirical,
    LowerBoundsEmpirical,
}

#[derive(Clone, Debug, Serialize)]
#[serde(untagged)]
pub enum Empirical {
    Modulus(ModulusEstimate),
    Slope(SlopeEstimate),
}

impl Empirical {
    pub fn value(&self) -> f64 {
        match self {
            Empirical::Modulus(m) => m.value,
            Empirical::Slope(s) => s.value,
        }
    }

    pub fn verdict(&self) -> Verdict {
        match self {
            Empirical::Modulus(m) => m.verdict,
            Empirical::Slope(s) => s.verdict,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CertificationReport {
    pub theorem: String,
    pub hypotheses: Vec<HypothesisCheck>,
    pub bound: BoundValue,
    pub empirical: Empirical,
    /// `bound − empirical` whenever both are finite, independent of the
    /// bound direction.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub margin: Option<f64>,
    pub direction: BoundDirection,
    pub verdict: CertVerdict,
    pub seed: u64,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl CertificationReport {
    pub fn all_hypotheses_hold(&self) -> bool {
        self.hypotheses.iter().all(|h| {
            matches!(
                h.status,
                HypothesisStatus::Verified | HypothesisStatus::WindowVerified
            )
        })
    }
}

fn fmt_value(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.6}")
    } else if v > 0.0 {
        "+inf".into()
    } else {
        "-inf".into()
    }
}

fn fmt_verdict(v: Verdict) -> &'static str {
    match v {
        Verdict::Converged => "converged",
        Verdict::Diverging => "diverging",
        Verdict::Inconclusive => "inconclusive",
    }
}

fn fmt_bound(b: BoundValue) -> String {
    match b {
        BoundValue::Finite(v) => fmt_value(v),
        BoundValue::Infinite => "+inf".into(),
        BoundValue::NotEvaluable => "not evaluable".into(),
    }
}

fn check(id: &str, description: &str, status: HypothesisStatus, evidence: String) -> HypothesisCheck {
    HypothesisCheck {
        id: id.into(),
        description: description.into(),
        status,
        evidence,
    }
}

fn complete_space() -> HypothesisCheck {
    check(
        "complete-space",
        "the unknown ranges over a metrically complete space",
        HypothesisStatus::Verified,
        "finite-dimensional coordinate space".into(),
    )
}

/// Inner semicontinuity of `x ↦ F(p, x)`, read off the map kind.
fn lsc_in_x(map: &SetMap) -> HypothesisCheck {
    let id = "slice-maps-lsc";
    let description = "the slice maps in the unknown are lower semicontinuous";
    match map.kind() {
        MapKind::Epigraph { .. } => check(
            id,
            description,
            HypothesisStatus::Verified,
            "epigraph of a continuous expression".into(),
        ),
        MapKind::Fan { .. } => check(
            id,
            description,
            HypothesisStatus::Verified,
            "hull of linear vertex images varies continuously".into(),
        ),
        MapKind::Constant { .. } | MapKind::SqrtInterval | MapKind::HalflineSign => check(
            id,
            description,
            HypothesisStatus::Verified,
            "constant in the unknown".into(),
        ),
        MapKind::Custom { .. } => check(
            id,
            description,
            HypothesisStatus::Assumed,
            "caller-supplied evaluator, not checkable".into(),
        ),
    }
}

/// A Lipschitz-type hypothesis backed by a sampled modulus: holds when the
/// estimate stabilized to a finite value, fails when it diverges.
fn modulus_hyp(id: &str, description: &str, est: &ModulusEstimate) -> HypothesisCheck {
    let evidence = format!(
        "sup-ratio estimate {} ({})",
        fmt_value(est.value),
        fmt_verdict(est.verdict)
    );
    let status = if est.value.is_finite() && est.verdict != Verdict::Diverging {
        HypothesisStatus::WindowVerified
    } else {
        HypothesisStatus::Failed
    };
    check(id, description, status, evidence)
}

/// A positivity hypothesis on a slope floor. An empty band means no
/// infeasible points were sampled: the floor is +inf over what we saw, but
/// sampling cannot tell a truly feasible window from an infeasible band
/// thinner than the membership tolerance, so the hypothesis is not
/// checkable rather than verified.
fn slope_hyp(id: &str, description: &str, est: &SlopeEstimate, pos: f64) -> HypothesisCheck {
    if est.band_empty {
        return check(
            id,
            description,
            HypothesisStatus::NotCheckable,
            "no infeasible points sampled; the slope floor could not be probed".into(),
        );
    }
    let evidence = format!(
        "slope estimate {} ({}), positivity threshold {pos}",
        fmt_value(est.value),
        fmt_verdict(est.verdict)
    );
    if est.value.is_finite() && est.value > pos {
        check(id, description, HypothesisStatus::WindowVerified, evidence)
    } else {
        check(id, description, HypothesisStatus::Failed, evidence)
    }
}

/// `num / den` with estimation caveats mirroring the hypothesis checks: a
/// diverged numerator cannot be stated, a denominator below the positivity
/// threshold means the slope hypothesis failed, and an infinite denominator
/// (no infeasible points) drives the ratio to zero.
fn ratio_bound(num: f64, den: f64, pos: f64) -> BoundValue {
    if !num.is_finite() {
        return BoundValue::NotEvaluable;
    }
    if den.is_finite() {
        if den <= pos {
            BoundValue::NotEvaluable
        } else {
            BoundValue::Finite(num / den)
        }
    } else {
        BoundValue::Finite(0.0)
    }
}

fn apply_override(
    bound: BoundValue,
    override_bound: Option<f64>,
    hypotheses: &mut Vec<HypothesisCheck>,
) -> BoundValue {
    match override_bound {
        None => bound,
        Some(b) => {
            hypotheses.push(check(
                "bound-override",
                "structural bound replaced by a caller-supplied value",
                HypothesisStatus::Assumed,
                format!("override {}; computed {}", fmt_value(b), fmt_bound(bound)),
            ));
            BoundValue::Finite(b)
        }
    }
}

const ABS_SLACK: f64 = 1e-9;

fn decide(
    hypotheses: &[HypothesisCheck],
    bound: BoundValue,
    direction: BoundDirection,
    empirical: f64,
    slack_rel: f64,
) -> (CertVerdict, Option<f64>) {
    let margin = match bound {
        BoundValue::Finite(b) if empirical.is_finite() => Some(b - empirical),
        _ => None,
    };
    if hypotheses
        .iter()
        .any(|h| h.status == HypothesisStatus::Failed)
    {
        return (CertVerdict::Vacuous, margin);
    }
    let verdict = match bound {
        BoundValue::NotEvaluable => CertVerdict::Vacuous,
        BoundValue::Infinite => match direction {
            BoundDirection::UpperBoundsEmpirical => CertVerdict::Consistent,
            BoundDirection::LowerBoundsEmpirical => {
                if empirical.is_infinite() && empirical > 0.0 {
                    CertVerdict::Consistent
                } else {
                    CertVerdict::Violated
                }
            }
        },
        BoundValue::Finite(b) => {
            let violated = match direction {
                BoundDirection::UpperBoundsEmpirical => empirical > b * (1.0 + slack_rel) + ABS_SLACK,
                BoundDirection::LowerBoundsEmpirical => empirical < b * (1.0 - slack_rel) - ABS_SLACK,
            };
            if violated {
                CertVerdict::Violated
            } else {
                CertVerdict::Consistent
            }
        }
    };
    // A violation indicts the bound only if every hypothesis behind it was
    // established (or explicitly assumed by the caller). An unfavourable
    // comparison against a bound resting on an unprobed hypothesis says
    // nothing, so it degrades to vacuous. The favourable side needs no such
    // guard: consistency is merely the absence of a counterexample.
    if verdict == CertVerdict::Violated
        && hypotheses
            .iter()
            .any(|h| h.status == HypothesisStatus::NotCheckable)
    {
        return (CertVerdict::Vacuous, margin);
    }
    (verdict, margin)
}

/// Lipschitz lower semicontinuity of the solution map at the reference
/// pair: the approach rate of `Solv(p)` toward `x̄` against the ratio of the
/// parameter-slice Lipschitz rate to the partial outer slope.
pub fn certify_liplsc(
    instance: &InclusionInstance,
    cfg: &EstimatorConfig,
    override_bound: Option<f64>,
) -> Result<CertificationReport> {
    let (map, cone) = (instance.map(), instance.cone());
    let (pbar, xbar) = (instance.pbar(), instance.xbar());
    let lipusc_f = lipusc_modulus(&ParamSetMap::from_p_slice(map, xbar), pbar, cfg)?;
    let sostslx = partial_strict_outer_slope(map, cone, pbar, xbar, cfg)?;
    let solv = ParamSetMap::from_solv(instance, cfg.grid_n)?;
    let empirical = liplsc_modulus(&solv, pbar, xbar, cfg)?;

    let mut hypotheses = vec![
        complete_space(),
        modulus_hyp(
            "param-map-lipusc",
            "the parameter slice through the reference point is Lipschitz upper semicontinuous",
            &lipusc_f,
        ),
        lsc_in_x(map),
        slope_hyp(
            "partial-outer-slope-positive",
            "the merit has a positive strict outer slope in the unknown at the reference pair",
            &sostslx,
            cfg.slope_pos_threshold,
        ),
    ];
    let bound = apply_override(
        ratio_bound(lipusc_f.value, sostslx.value, cfg.slope_pos_threshold),
        override_bound,
        &mut hypotheses,
    );
    let (verdict, margin) = decide(
        &hypotheses,
        bound,
        BoundDirection::UpperBoundsEmpirical,
        empirical.value,
        cfg.slack_rel,
    );
    Ok(CertificationReport {
        theorem: "solv-lipschitz-lsc".into(),
        hypotheses,
        bound,
        empirical: Empirical::Modulus(empirical),
        margin,
        direction: BoundDirection::UpperBoundsEmpirical,
        verdict,
        seed: cfg.seed,
        notes: Vec::new(),
    })
}

/// Calmness of the solution map at the reference pair: localized escape
/// rate of `Solv(p)` from `Solv(p̄)` against the joint Lipschitz rate over
/// the full outer slope at the reference unknown.
pub fn certify_calm(
    instance: &InclusionInstance,
    cfg: &EstimatorConfig,
    override_bound: Option<f64>,
) -> Result<CertificationReport> {
    let (map, cone) = (instance.map(), instance.cone());
    let (pbar, xbar) = (instance.pbar(), instance.xbar());
    let lip_f = lip_joint_modulus(map, pbar, xbar, cfg)?;
    let psi = merit_fn(map, cone, pbar);
    let sostsl = strict_outer_slope(&psi, xbar, cfg)?;
    let zeta = cfg.zeta.unwrap_or_else(|| default_zeta(instance.x_window()));
    let solv = ParamSetMap::from_solv(instance, cfg.grid_n)?;
    let empirical = calm_modulus(&solv, pbar, xbar, zeta, cfg)?;

    let mut hypotheses = vec![
        complete_space(),
        lsc_in_x(map),
        modulus_hyp(
            "joint-local-lipschitz",
            "the map is locally Lipschitz near the reference pair, jointly in both arguments",
            &lip_f,
        ),
        slope_hyp(
            "outer-slope-positive",
            "the reference-parameter merit has a positive strict outer slope at the reference unknown",
            &sostsl,
            cfg.slope_pos_threshold,
        ),
    ];
    let bound = apply_override(
        ratio_bound(lip_f.value, sostsl.value, cfg.slope_pos_threshold),
        override_bound,
        &mut hypotheses,
    );
    let (verdict, margin) = decide(
        &hypotheses,
        bound,
        BoundDirection::UpperBoundsEmpirical,
        empirical.value,
        cfg.slack_rel,
    );
    Ok(CertificationReport {
        theorem: "solv-calmness".into(),
        hypotheses,
        bound,
        empirical: Empirical::Modulus(empirical),
        margin,
        direction: BoundDirection::UpperBoundsEmpirical,
        verdict,
        seed: cfg.seed,
        notes: Vec::new(),
    })
}

/// Lipschitz upper semicontinuity of the solution map at the reference
/// parameter: excess rate of `Solv(p)` over `Solv(p̄)` against the uniform
/// parameter Lipschitz rate over the region slope floor.
pub fn certify_lipusc(
    instance: &InclusionInstance,
    region: Option<&WindowBox>,
    cfg: &EstimatorConfig,
    override_bound: Option<f64>,
) -> Result<CertificationReport> {
    let (map, cone) = (instance.map(), instance.cone());
    let pbar = instance.pbar();
    let region = region.unwrap_or_else(|| instance.x_window());
    let lip_p_f = lip_p_uniform_modulus(map, pbar, region, cfg)?;
    let tau_est = tau(map, cone, pbar, region, cfg)?;
    let solv = ParamSetMap::from_solv(instance, cfg.grid_n)?;
    let empirical = lipusc_modulus(&solv, pbar, cfg)?;

    let mut hypotheses = vec![
        complete_space(),
        lsc_in_x(map),
        modulus_hyp(
            "param-lipschitz-uniform",
            "the map is Lipschitz in the parameter, uniformly over the unknowns",
            &lip_p_f,
        ),
        slope_hyp(
            "region-slope-positive",
            "the merit slope is bounded away from zero over the infeasible part of the region",
            &tau_est,
            cfg.slope_pos_threshold,
        ),
    ];
    let bound = apply_override(
        ratio_bound(lip_p_f.value, tau_est.value, cfg.slope_pos_threshold),
        override_bound,
        &mut hypotheses,
    );
    let (verdict, margin) = decide(
        &hypotheses,
        bound,
        BoundDirection::UpperBoundsEmpirical,
        empirical.value,
        cfg.slack_rel,
    );
    Ok(CertificationReport {
        theorem: "solv-lipschitz-usc".into(),
        hypotheses,
        bound,
        empirical: Empirical::Modulus(empirical),
        margin,
        direction: BoundDirection::UpperBoundsEmpirical,
        verdict,
        seed: cfg.seed,
        notes: vec![
            "uniform parameter rate and slope floor restricted to the analysis region".into(),
        ],
    })
}

/// Calmness of the value function: three reports (from above, from below,
/// two-sided), each comparing the empirical calmness of `p ↦ val(p)` with
/// its assembled bound.
pub fn certify_val(
    instance: &InclusionInstance,
    theta: &Objective,
    cfg: &EstimatorConfig,
    override_bound: Option<f64>,
) -> Result<Vec<CertificationReport>> {
    let report = val_calmness_report(instance, theta, cfg)?;
    let map = instance.map();
    let pos = cfg.slope_pos_threshold;

    let objective_lip = match report.lip_theta.source {
        LipSource::Hint => check(
            "objective-lipschitz",
            "the objective is Lipschitz on the product window under the max distance",
            HypothesisStatus::Assumed,
            format!("caller-supplied constant {}", fmt_value(report.lip_theta.value)),
        ),
        LipSource::Sampled => {
            let status = if report.lip_theta.value.is_finite() {
                HypothesisStatus::WindowVerified
            } else {
                HypothesisStatus::Failed
            };
            check(
                "objective-lipschitz",
                "the objective is Lipschitz on the product window under the max distance",
                status,
                format!("sampled difference quotient {}", fmt_value(report.lip_theta.value)),
            )
        }
    };

    let min_den = if report.sostslx.band_empty {
        report.tau.value
    } else if report.tau.band_empty {
        report.sostslx.value
    } else {
        report.sostslx.value.min(report.tau.value)
    };
    // The conjunction is only checkable when both floors were probed; an
    // empty band on either side leaves the minimum unconstrained below.
    let min_slope = check(
        "min-slope-positive",
        "both slope floors at the reference are positive",
        if report.sostslx.band_empty || report.tau.band_empty {
            HypothesisStatus::NotCheckable
        } else if (min_den.is_finite() && min_den > pos) || min_den.is_infinite() {
            HypothesisStatus::WindowVerified
        } else {
            HypothesisStatus::Failed
        },
        format!(
            "partial outer slope {}, region floor {}",
            fmt_value(report.sostslx.value),
            fmt_value(report.tau.value)
        ),
    );

    let mut out = Vec::with_capacity(3);

    let mut hyps_above = vec![
        complete_space(),
        modulus_hyp(
            "param-map-lipusc",
            "the parameter slice through the reference point is Lipschitz upper semicontinuous",
            &report.lipusc_f,
        ),
        lsc_in_x(map),
        slope_hyp(
            "partial-outer-slope-positive",
            "the merit has a positive strict outer slope in the unknown at the reference pair",
            &report.sostslx,
            pos,
        ),
        modulus_hyp(
            "objective-calm-above",
            "the objective is calm from above at the reference pair",
            &report.ucalm_theta,
        ),
    ];
    let bound_above = apply_override(report.bound_above, override_bound, &mut hyps_above);
    let (verdict, margin) = decide(
        &hyps_above,
        bound_above,
        BoundDirection::UpperBoundsEmpirical,
        report.empirical.ucalm.value,
        cfg.slack_rel,
    );
    out.push(CertificationReport {
        theorem: "val-calm-above".into(),
        hypotheses: hyps_above,
        bound: bound_above,
        empirical: Empirical::Modulus(report.empirical.ucalm.clone()),
        margin,
        direction: BoundDirection::UpperBoundsEmpirical,
        verdict,
        seed: cfg.seed,
        notes: Vec::new(),
    });

    let mut hyps_below = vec![
        complete_space(),
        lsc_in_x(map),
        modulus_hyp(
            "param-lipschitz-uniform",
            "the map is Lipschitz in the parameter, uniformly over the unknowns",
            &report.lip_p_f,
        ),
        slope_hyp(
            "region-slope-positive",
            "the merit slope is bounded away from zero over the infeasible part of the region",
            &report.tau,
            pos,
        ),
        objective_lip.clone(),
    ];
    let bound_below = apply_override(report.bound_below, override_bound, &mut hyps_below);
    let (verdict, margin) = decide(
        &hyps_below,
        bound_below,
        BoundDirection::UpperBoundsEmpirical,
        report.empirical.lcalm.value,
        cfg.slack_rel,
    );
    out.push(CertificationReport {
        theorem: "val-calm-below".into(),
        hypotheses: hyps_below,
        bound: bound_below,
        empirical: Empirical::Modulus(report.empirical.lcalm.clone()),
        margin,
        direction: BoundDirection::UpperBoundsEmpirical,
        verdict,
        seed: cfg.seed,
        notes: Vec::new(),
    });

    let mut hyps_combined = vec![
        complete_space(),
        modulus_hyp(
            "param-lipschitz-uniform",
            "the map is Lipschitz in the parameter, uniformly over the unknowns",
            &report.lip_p_f,
        ),
        lsc_in_x(map),
        min_slope,
        objective_lip,
    ];
    let bound_combined = apply_override(report.bound_combined, override_bound, &mut hyps_combined);
    let (verdict, margin) = decide(
        &hyps_combined,
        bound_combined,
        BoundDirection::UpperBoundsEmpirical,
        report.empirical.calm.value,
        cfg.slack_rel,
    );
    out.push(CertificationReport {
        theorem: "val-calm".into(),
        hypotheses: hyps_combined,
        bound: bound_combined,
        empirical: Empirical::Modulus(report.empirical.calm.clone()),
        margin,
        direction: BoundDirection::UpperBoundsEmpirical,
        verdict,
        seed: cfg.seed,
        notes: Vec::new(),
    });

    Ok(out)
}

fn concavity_hyp(map: &SetMap) -> HypothesisCheck {
    let id = "slice-lsc-concave-bounded";
    let description =
        "the slice maps are lower semicontinuous, concave, and of finite excess over the cone";
    match map.kind() {
        MapKind::Fan { .. } => check(
            id,
            description,
            HypothesisStatus::Verified,
            "hull of linear vertex images; concavity is exact".into(),
        ),
        MapKind::Custom { .. } => check(
            id,
            description,
            HypothesisStatus::Assumed,
            "caller-supplied evaluator; concavity flag spot-checked at construction".into(),
        ),
        _ => check(
            id,
            description,
            HypothesisStatus::WindowVerified,
            "segment inclusion spot checks at construction".into(),
        ),
    }
}

fn certificate_hyp(id: &str, cert: &IncreaseCertificate) -> HypothesisCheck {
    let description = "the map climbs into the cone at the claimed rate on the sampled lattice";
    if cert.valid() {
        check(
            id,
            description,
            HypothesisStatus::WindowVerified,
            format!(
                "rate {}: {} center/radius pairs certified over {} support directions",
                fmt_value(cert.alpha),
                cert.checked,
                cert.support_dirs_n
            ),
        )
    } else if let Some(f) = cert.failures.first() {
        check(
            id,
            description,
            HypothesisStatus::Failed,
            format!(
                "rate {}: no admissible enlargement at x = {:?}, r = {}",
                fmt_value(cert.alpha),
                f.x.coords(),
                f.r
            ),
        )
    } else {
        check(
            id,
            description,
            HypothesisStatus::Failed,
            "no center/radius pair could be checked".into(),
        )
    }
}

/// Slope consequences of a certified increase rate `α`: the merit must
/// descend at rate at least `α − 1` at infeasible points near the
/// reference, at the reference pair itself (partial slope, uniformly
/// sampled in the parameter), and over the region floor.
pub fn certify_increase_slope(
    instance: &InclusionInstance,
    alpha: Option<f64>,
    cfg: &EstimatorConfig,
) -> Result<Vec<CertificationReport>> {
    let (map, cone) = (instance.map(), instance.cone());
    let (pbar, xbar) = (instance.pbar(), instance.xbar());
    if !map.concave_in_x() {
        return Err(Error::InvalidArgument(
            "increase analysis needs slice maps flagged concave in the unknown".into(),
        ));
    }

    let interior = if let MapKind::Fan { matrices } = map.kind() {
        interiority_check(matrices, cone, cfg.dirs_n)?.direction
    } else {
        None
    };
    let mut notes = Vec::new();
    let alpha = match alpha {
        Some(a) => {
            notes.push(format!("rate {} supplied by the caller", fmt_value(a)));
            a
        }
        None => match map.kind() {
            MapKind::Fan { matrices } => {
                let fb = fan_increase_bound(matrices, cone, cfg)?;
                notes.push(format!(
                    "rate {} from the family inversion gauge {} plus one",
                    fmt_value(fb.bound),
                    fmt_value(fb.eta_bar)
                ));
                fb.bound
            }
            _ => {
                return Err(Error::InvalidArgument(
                    "an increase rate must be supplied for non-fan maps".into(),
                ))
            }
        },
    };

    let window = instance.x_window();
    let cert_at = |p: &Vector| -> Result<IncreaseCertificate> {
        check_c_increase(
            &|x: &Vector| map.evaluate(p, x),
            cone,
            alpha,
            window,
            cfg,
            interior.as_ref(),
        )
    };
    let cert_ref = cert_at(pbar)?;
    let mut uniform_ok = cert_ref.valid();
    if uniform_ok {
        for corner in instance.p_window().lattice(2) {
            if !cert_at(&corner)?.valid() {
                uniform_ok = false;
                break;
            }
        }
    }
    let uniform_hyp = if uniform_ok {
        check(
            "increase-certificate-uniform",
            "the increase rate holds at sampled parameters across the window",
            HypothesisStatus::WindowVerified,
            "certified at the reference and at the parameter-window corners".into(),
        )
    } else {
        check(
            "increase-certificate-uniform",
            "the increase rate holds at sampled parameters across the window",
            HypothesisStatus::Failed,
            "a sampled parameter refused the rate".into(),
        )
    };

    let cone_hyp = check(
        "cone-closed-convex",
        "the order cone is closed and convex",
        HypothesisStatus::Verified,
        "finitely generated cone".into(),
    );
    let base_hyps = vec![cone_hyp, concavity_hyp(map), certificate_hyp("increase-certificate", &cert_ref)];
    let bound = BoundValue::Finite(alpha - 1.0);

    // Pointwise slopes at sampled infeasible points near the reference.
    let psi = merit_fn(map, cone, pbar);
    let half = 0.5 * window.min_half_width();
    let mut point_levels: Vec<Level> = Vec::new();
    let mut all_converged = true;
    for x in window.lattice(if window.dim() == 1 { 21 } else { 7 }) {
        let d = x.dist(xbar);
        if d > half {
            continue;
        }
        let merit = map.phi(cone, pbar, &x)?;
        if !(merit.is_finite() && merit > instance.tol().membership) {
            continue;
        }
        let s = strong_slope(&psi, &x, cfg)?;
        all_converged &= s.verdict == Verdict::Converged;
        point_levels.push(Level {
            scale: d,
            estimate: s.value,
        });
        if point_levels.len() >= 24 {
            break;
        }
    }
    point_levels.sort_by(|a, b| b.scale.total_cmp(&a.scale));
    let band_empty = point_levels.is_empty();
    let point_min = point_levels
        .iter()
        .map(|l| l.estimate)
        .fold(f64::INFINITY, f64::min);
    let pointwise = SlopeEstimate {
        value: point_min,
        levels: point_levels,
        verdict: if band_empty {
            Verdict::Inconclusive
        } else if all_converged {
            Verdict::Converged
        } else {
            Verdict::Inconclusive
        },
        band_empty,
        region: Some(window.clone()),
    };
    let (point_bound, mut point_notes) = if band_empty {
        (
            BoundValue::NotEvaluable,
            vec!["no infeasible points near the reference; nothing to bound".into()],
        )
    } else {
        (bound, Vec::new())
    };
    point_notes.extend(notes.iter().cloned());
    let (verdict, margin) = decide(
        &base_hyps,
        point_bound,
        BoundDirection::LowerBoundsEmpirical,
        pointwise.value,
        cfg.slack_rel,
    );
    let mut out = vec![CertificationReport {
        theorem: "increase-pointwise-slope".into(),
        hypotheses: base_hyps.clone(),
        bound: point_bound,
        empirical: Empirical::Slope(pointwise),
        margin,
        direction: BoundDirection::LowerBoundsEmpirical,
        verdict,
        seed: cfg.seed,
        notes: point_notes,
    }];

    // Partial outer slope at the reference pair, uniform rate in p.
    let sostslx = partial_strict_outer_slope(map, cone, pbar, xbar, cfg)?;
    let mut hyps = base_hyps.clone();
    hyps.push(uniform_hyp);
    let (partial_bound, partial_notes) = if sostslx.band_empty {
        (
            BoundValue::NotEvaluable,
            vec!["no infeasible points near the reference; nothing to bound".into()],
        )
    } else {
        (bound, notes.clone())
    };
    let (verdict, margin) = decide(
        &hyps,
        partial_bound,
        BoundDirection::LowerBoundsEmpirical,
        sostslx.value,
        cfg.slack_rel,
    );
    out.push(CertificationReport {
        theorem: "increase-partial-slope".into(),
        hypotheses: hyps,
        bound: partial_bound,
        empirical: Empirical::Slope(sostslx),
        margin,
        direction: BoundDirection::LowerBoundsEmpirical,
        verdict,
        seed: cfg.seed,
        notes: partial_notes,
    });

    // Region slope floor.
    let tau_est = tau(map, cone, pbar, window, cfg)?;
    let (tau_bound, tau_notes) = if tau_est.band_empty {
        (
            BoundValue::NotEvaluable,
            vec!["region entirely feasible; the floor is vacuous".into()],
        )
    } else {
        (bound, notes.clone())
    };
    let (verdict, margin) = decide(
        &base_hyps,
        tau_bound,
        BoundDirection::LowerBoundsEmpirical,
        tau_est.value,
        cfg.slack_rel,
    );
    out.push(CertificationReport {
        theorem: "increase-region-slope".into(),
        hypotheses: base_hyps,
        bound: tau_bound,
        empirical: Empirical::Slope(tau_est),
        margin,
        direction: BoundDirection::LowerBoundsEmpirical,
        verdict,
        seed: cfg.seed,
        notes: tau_notes,
    });

    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Tolerances;
    use crate::geometry::{ConeSpec, ConvexBody};
    use crate::increase::Mat;

    fn sc(x: f64) -> Vector {
        Vector::scalar(x)
    }

    fn w1(lo: f64, hi: f64) -> WindowBox {
        WindowBox::new(vec![lo], vec![hi]).unwrap()
    }

    fn shift_instance() -> InclusionInstance {
        InclusionInstance::new(
            SetMap::epigraph("x - p", 1, 1, true).unwrap(),
            ConeSpec::orthant(1).unwrap(),
            sc(0.0),
            sc(0.0),
            w1(-1.0, 1.0),
            w1(-4.0, 4.0),
            Tolerances::default(),
        )
        .unwrap()
    }

    fn cubic_instance() -> InclusionInstance {
        InclusionInstance::new(
            SetMap::epigraph("p^3 + x^3", 1, 1, false).unwrap(),
            ConeSpec::orthant(1).unwrap(),
            sc(0.0),
            sc(0.0),
            w1(-2.0, 2.0),
            w1(-10.0, 10.0),
            Tolerances::default(),
        )
        .unwrap()
    }

    #[test]
    fn shift_lower_semicontinuity_is_consistent_and_tight() {
        let report = certify_liplsc(&shift_instance(), &EstimatorConfig::default(), None).unwrap();
        assert_eq!(report.verdict, CertVerdict::Consistent);
        assert!(report.all_hypotheses_hold());
        match report.bound {
            BoundValue::Finite(b) => assert!((b - 1.0).abs() <= 0.05, "bound {b}"),
            other => panic!("unexpected bound {other:?}"),
        }
        assert!((report.empirical.value() - 1.0).abs() <= 0.02);
    }

    #[test]
    fn cubic_lower_semicontinuity_is_vacuous_but_reported() {
        let report = certify_liplsc(&cubic_instance(), &EstimatorConfig::default(), None).unwrap();
        assert_eq!(report.verdict, CertVerdict::Vacuous);
        assert!(report
            .hypotheses
            .iter()
            .any(|h| h.id == "partial-outer-slope-positive" && h.status == HypothesisStatus::Failed));
        assert!((report.empirical.value() - 1.0).abs() <= 0.05);
    }

    #[test]
    fn feasible_constant_map_is_trivially_consistent() {
        let inst = InclusionInstance::new(
            SetMap::constant(ConvexBody::Interval { lo: 1.0, hi: 2.0 }, 1, 1),
            ConeSpec::orthant(1).unwrap(),
            sc(0.0),
            sc(0.0),
            w1(-1.0, 1.0),
            w1(-1.0, 1.0),
            Tolerances::default(),
        )
        .unwrap();
        let report = certify_liplsc(&inst, &EstimatorConfig::default(), None).unwrap();
        assert_eq!(report.verdict, CertVerdict::Consistent);
        assert_eq!(report.empirical.value(), 0.0);
        // The merit never leaves zero, so the slope floor has no samples to
        // stand on; consistency here is the favourable comparison, not a
        // verified hypothesis.
        assert!(report.hypotheses.iter().any(|h| {
            h.id == "partial-outer-slope-positive" && h.status == HypothesisStatus::NotCheckable
        }));
    }

    #[test]
    fn coarse_membership_cannot_manufacture_a_violation() {
        // With the membership tolerance loosened past the merit's cube-root
        // flatness, no sampled point near the reference looks infeasible and
        // the slope floor cannot be probed. The empirical rate is still 1,
        // so a naive reading would report a violated zero bound; the honest
        // verdict declines to certify instead.
        let loose = Tolerances {
            membership: 1e-6,
            ..Tolerances::default()
        };
        let inst = InclusionInstance::new(
            SetMap::epigraph("p^3 + x^3", 1, 1, false).unwrap(),
            ConeSpec::orthant(1).unwrap(),
            sc(0.0),
            sc(0.0),
            w1(-2.0, 2.0),
            w1(-10.0, 10.0),
            loose,
        )
        .unwrap();
        let mut cfg = EstimatorConfig::default();
        cfg.tol = loose;
        let report = certify_liplsc(&inst, &cfg, None).unwrap();
        assert_ne!(report.verdict, CertVerdict::Violated);
        assert!(report.hypotheses.iter().any(|h| {
            h.id == "partial-outer-slope-positive" && h.status == HypothesisStatus::NotCheckable
        }));
        assert!(report.empirical.value() > 0.5);
    }

    #[test]
    fn cubic_calmness_is_vacuous_with_finite_empirical() {
        let report = certify_calm(&cubic_instance(), &EstimatorConfig::default(), None).unwrap();
        assert_eq!(report.verdict, CertVerdict::Vacuous);
        assert!(report
            .hypotheses
            .iter()
            .any(|h| h.id == "outer-slope-positive" && h.status == HypothesisStatus::Failed));
        assert!(report.empirical.value().is_finite());
    }

    #[test]
    fn shift_upper_semicontinuity_is_consistent() {
        let report =
            certify_lipusc(&shift_instance(), None, &EstimatorConfig::default(), None).unwrap();
        assert_eq!(report.verdict, CertVerdict::Consistent);
        match report.bound {
            BoundValue::Finite(b) => assert!((b - 1.0).abs() <= 0.05, "bound {b}"),
            other => panic!("unexpected bound {other:?}"),
        }
        assert!((report.empirical.value() - 1.0).abs() <= 0.02);
    }

    #[test]
    fn shift_value_reports_are_all_consistent() {
        let theta = Objective::expr("x", 1, 1).unwrap();
        let reports =
            certify_val(&shift_instance(), &theta, &EstimatorConfig::default(), None).unwrap();
        assert_eq!(reports.len(), 3);
        for r in &reports {
            assert_eq!(r.verdict, CertVerdict::Consistent, "theorem {}", r.theorem);
            match r.bound {
                BoundValue::Finite(b) => assert!((b - 1.0).abs() <= 0.1, "bound {b}"),
                other => panic!("unexpected bound {other:?}"),
            }
        }
    }

    #[test]
    fn cubic_value_reports_are_vacuous_where_the_slope_dies() {
        let theta = Objective::expr("x", 1, 1).unwrap();
        let reports =
            certify_val(&cubic_instance(), &theta, &EstimatorConfig::default(), None).unwrap();
        let above = reports.iter().find(|r| r.theorem == "val-calm-above").unwrap();
        let combined = reports.iter().find(|r| r.theorem == "val-calm").unwrap();
        assert_eq!(above.verdict, CertVerdict::Vacuous);
        assert_eq!(combined.verdict, CertVerdict::Vacuous);
        assert!((combined.empirical.value() - 1.0).abs() <= 0.02);
    }

    #[test]
    fn override_forces_a_violated_verdict_with_an_assumed_hypothesis() {
        let report =
            certify_liplsc(&shift_instance(), &EstimatorConfig::default(), Some(0.3)).unwrap();
        assert_eq!(report.verdict, CertVerdict::Violated);
        assert!(report
            .hypotheses
            .iter()
            .any(|h| h.id == "bound-override" && h.status == HypothesisStatus::Assumed));
        assert!(!report.all_hypotheses_hold());
    }

    #[test]
    fn halfline_increase_chain_is_consistent_at_rate_two() {
        let inst = InclusionInstance::new(
            SetMap::epigraph("x", 1, 1, true).unwrap(),
            ConeSpec::orthant(1).unwrap(),
            sc(0.0),
            sc(0.0),
            w1(-1.0, 1.0),
            w1(-2.0, 2.0),
            Tolerances::default(),
        )
        .unwrap();
        let reports =
            certify_increase_slope(&inst, Some(2.0), &EstimatorConfig::default()).unwrap();
        assert_eq!(reports.len(), 3);
        for r in &reports {
            assert_eq!(r.verdict, CertVerdict::Consistent, "theorem {}", r.theorem);
            assert_eq!(r.bound, BoundValue::Finite(1.0));
            assert!(r.empirical.value() >= 1.0 - 0.1, "slope {}", r.empirical.value());
        }
    }

    #[test]
    fn excessive_rate_fails_the_certificate_and_goes_vacuous() {
        let inst = InclusionInstance::new(
            SetMap::epigraph("x", 1, 1, true).unwrap(),
            ConeSpec::orthant(1).unwrap(),
            sc(0.0),
            sc(0.0),
            w1(-1.0, 1.0),
            w1(-2.0, 2.0),
            Tolerances::default(),
        )
        .unwrap();
        let reports =
            certify_increase_slope(&inst, Some(2.5), &EstimatorConfig::default()).unwrap();
        for r in &reports {
            assert_eq!(r.verdict, CertVerdict::Vacuous, "theorem {}", r.theorem);
            assert!(r
                .hypotheses
                .iter()
                .any(|h| h.id == "increase-certificate" && h.status == HypothesisStatus::Failed));
        }
    }

    #[test]
    fn one_dimensional_fan_derives_its_rate_and_matches_the_slope() {
        let inst = InclusionInstance::new(
            SetMap::fan(vec![Mat::diag(&[2.0])], 1).unwrap(),
            ConeSpec::orthant(1).unwrap(),
            sc(0.0),
            sc(0.0),
            w1(-1.0, 1.0),
            w1(-2.0, 2.0),
            Tolerances::default(),
        )
        .unwrap();
        let reports = certify_increase_slope(&inst, None, &EstimatorConfig::default()).unwrap();
        for r in &reports {
            assert_eq!(r.verdict, CertVerdict::Consistent, "theorem {}", r.theorem);
            assert_eq!(r.bound, BoundValue::Finite(2.0));
            assert!((r.empirical.value() - 2.0).abs() <= 0.2, "slope {}", r.empirical.value());
        }
    }

    #[test]
    fn fully_feasible_instance_cannot_evaluate_the_pointwise_claim() {
        let inst = InclusionInstance::new(
            SetMap::constant(ConvexBody::Interval { lo: 1.0, hi: 2.0 }, 1, 1),
            ConeSpec::orthant(1).unwrap(),
            sc(0.0),
            sc(0.0),
            w1(-1.0, 1.0),
            w1(-1.0, 1.0),
            Tolerances::default(),
        )
        .unwrap();
        let reports =
            certify_increase_slope(&inst, Some(1.5), &EstimatorConfig::default()).unwrap();
        let pointwise = reports
            .iter()
            .find(|r| r.theorem == "increase-pointwise-slope")
            .unwrap();
        assert_eq!(pointwise.bound, BoundValue::NotEvaluable);
        assert_eq!(pointwise.verdict, CertVerdict::Vacuous);
    }
}
