//! Stability moduli of parameter-indexed families, estimated on shrinking
//! spheres around the reference parameter.
//!
//! Each estimator walks the configured radius schedule, computes the worst
//! difference quotient on the sphere of that radius, and records one level
//! per radius. Divergence is detected from the level sequence; unbounded
//! comparisons (`+∞` excesses, empty slices) surface as infinite levels.

use serde::Serialize;

use crate::config::EstimatorConfig;
use crate::estimate::{summarize, Level, Verdict};
use crate::geometry::{self, direction_set, ConvexBody, Vector, WindowBox};
use crate::setmaps::{InclusionInstance, SetMap, SolvSlice};
use crate::slopes::ScalarFn;
use crate::{Error, Result};

/// One evaluation of a parameter-indexed family: either a convex body or a
/// traced 1-D solution slice. Both support the same exact queries.
pub enum SetQuery {
    Body(ConvexBody),
    Slice(SolvSlice),
}

impl SetQuery {
    fn dist(&self, point: &Vector) -> Result<f64> {
        match self {
            SetQuery::Body(b) => geometry::dist_point_set(point, b),
            SetQuery::Slice(s) => Ok(s.dist(point.at(0))),
        }
    }

    fn excess_to(&self, other: &SetQuery) -> Result<f64> {
        match (self, other) {
            (SetQuery::Body(a), SetQuery::Body(b)) => geometry::excess(a, b),
            (SetQuery::Slice(a), SetQuery::Slice(b)) => Ok(a.excess_to(b)),
            _ => Err(Error::InvalidArgument(
                "cannot mix slice and body evaluations of one family".into(),
            )),
        }
    }

    fn samples_near(&self, center: &Vector, zeta: f64) -> Result<Vec<Vector>> {
        match self {
            SetQuery::Body(b) => {
                let mut out: Vec<Vector> = geometry::sample_points(b, 9)?
                    .into_iter()
                    .filter(|w| w.dist(center) <= zeta)
                    .collect();
                let proj = geometry::project_point(center, b)?;
                if proj.dist(center) <= zeta {
                    out.push(proj);
                }
                Ok(out)
            }
            SetQuery::Slice(s) => Ok(s
                .samples_in_ball(center.at(0), zeta, 8)
                .into_iter()
                .map(Vector::scalar)
                .collect()),
        }
    }
}

/// Parameter-indexed family `p ↦ Φ(p)` under estimation.
pub struct ParamSetMap<'a> {
    eval: Box<dyn Fn(&Vector) -> Result<SetQuery> + 'a>,
    p_dim: usize,
}

impl<'a> ParamSetMap<'a> {
    pub fn from_fn(p_dim: usize, eval: impl Fn(&Vector) -> Result<SetQuery> + 'a) -> Self {
        ParamSetMap {
            eval: Box::new(eval),
            p_dim,
        }
    }

    /// `p ↦ F(p, x)` with `x` frozen.
    pub fn from_p_slice(map: &'a SetMap, x: &'a Vector) -> Self {
        ParamSetMap {
            eval: Box::new(move |p: &Vector| Ok(SetQuery::Body(map.evaluate(p, x)?))),
            p_dim: map.p_dim(),
        }
    }

    /// `p ↦ Solv(p)` traced over the instance's x-window (1-D unknowns).
    pub fn from_solv(instance: &'a InclusionInstance, grid_n: usize) -> Result<Self> {
        if instance.map().x_dim() != 1 {
            return Err(Error::Unsupported(
                "solution-set moduli are traced for a one-dimensional unknown".into(),
            ));
        }
        Ok(ParamSetMap {
            eval: Box::new(move |p: &Vector| Ok(SetQuery::Slice(instance.solv_slice(p, grid_n)?))),
            p_dim: instance.map().p_dim(),
        })
    }

    pub fn eval(&self, p: &Vector) -> Result<SetQuery> {
        if p.dim() != self.p_dim {
            return Err(Error::DimensionMismatch {
                expected: self.p_dim,
                got: p.dim(),
            });
        }
        (self.eval)(p)
    }

    #[inline]
    pub fn p_dim(&self) -> usize {
        self.p_dim
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ModulusKind {
    /// Rate at which the reference point is approached by `Φ(p)`.
    LipschitzLsc,
    /// Rate at which points of `Φ(p)` near the reference leave `Φ(p̄)`.
    Calmness,
    /// Excess rate `e(Φ(p), Φ(p̄)) / d(p, p̄)`.
    LipschitzUsc,
    /// Two-parameter Hausdorff rate near `p̄`.
    LipschitzHausdorff,
    /// Joint two-point rate in `(p, x)` under the max metric.
    LipschitzJoint,
    /// Hausdorff rate in `p`, uniform over the x-window.
    ParamLipschitzUniform,
    CalmAbove,
    CalmBelow,
    CalmScalar,
}

#[derive(Clone, Debug, Serialize)]
pub struct ModulusEstimate {
    pub kind: ModulusKind,
    /// `+∞` when the levels diverge (serialized as `null`).
    pub value: f64,
    pub levels: Vec<Level>,
    pub verdict: Verdict,
    /// Localization radius used by calmness-style estimators.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub zeta: Option<f64>,
}

fn finish(kind: ModulusKind, levels: Vec<Level>, zeta: Option<f64>) -> ModulusEstimate {
    let (value, verdict) = summarize(&levels);
    ModulusEstimate {
        kind,
        value,
        levels,
        verdict,
        zeta,
    }
}

/// Default calmness localization: half the window half-width.
pub fn default_zeta(x_window: &WindowBox) -> f64 {
    0.5 * x_window.min_half_width()
}

/// `sup dist(x̄, Φ(p)) / d(p, p̄)` over spheres `d(p, p̄) = δ`. Empty or
/// unreachable values contribute infinite levels.
pub fn liplsc_modulus(
    family: &ParamSetMap,
    pbar: &Vector,
    xbar: &Vector,
    cfg: &EstimatorConfig,
) -> Result<ModulusEstimate> {
    let dirs = direction_set(family.p_dim(), cfg.dirs_n);
    let mut levels = Vec::with_capacity(cfg.delta_schedule.len());
    for &delta in &cfg.delta_schedule {
        let mut worst = 0.0f64;
        for d in &dirs {
            let q = family.eval(&pbar.axpy(delta, d))?;
            worst = worst.max(q.dist(xbar)? / delta);
        }
        levels.push(Level {
            scale: delta,
            estimate: worst,
        });
    }
    Ok(finish(ModulusKind::LipschitzLsc, levels, None))
}

/// `sup dist(w, Φ(p̄)) / d(p, p̄)` over `w ∈ Φ(p) ∩ B(x̄, ζ)`. Radii with no
/// such `w` contribute zero (nothing near the reference to displace).
pub fn calm_modulus(
    family: &ParamSetMap,
    pbar: &Vector,
    xbar: &Vector,
    zeta: f64,
    cfg: &EstimatorConfig,
) -> Result<ModulusEstimate> {
    if !(zeta.is_finite() && zeta > 0.0) {
        return Err(Error::InvalidArgument(
            "calmness needs a positive localization radius".into(),
        ));
    }
    let base = family.eval(pbar)?;
    let dirs = direction_set(family.p_dim(), cfg.dirs_n);
    let mut levels = Vec::with_capacity(cfg.delta_schedule.len());
    for &delta in &cfg.delta_schedule {
        let mut worst = 0.0f64;
        for d in &dirs {
            let q = family.eval(&pbar.axpy(delta, d))?;
            for w in q.samples_near(xbar, zeta)? {
                worst = worst.max(base.dist(&w)? / delta);
            }
        }
        levels.push(Level {
            scale: delta,
            estimate: worst,
        });
    }
    Ok(finish(ModulusKind::Calmness, levels, Some(zeta)))
}

/// `sup e(Φ(p), Φ(p̄)) / d(p, p̄)` over spheres.
pub fn lipusc_modulus(
    family: &ParamSetMap,
    pbar: &Vector,
    cfg: &EstimatorConfig,
) -> Result<ModulusEstimate> {
    let base = family.eval(pbar)?;
    let dirs = direction_set(family.p_dim(), cfg.dirs_n);
    let mut levels = Vec::with_capacity(cfg.delta_schedule.len());
    for &delta in &cfg.delta_schedule {
        let mut worst = 0.0f64;
        for d in &dirs {
            let q = family.eval(&pbar.axpy(delta, d))?;
            worst = worst.max(q.excess_to(&base)? / delta);
        }
        levels.push(Level {
            scale: delta,
            estimate: worst,
        });
    }
    Ok(finish(ModulusKind::LipschitzUsc, levels, None))
}

/// Sampled parameter pairs for two-point rates at scale `delta`: one leg at
/// the reference, a straddling pair, and an off-center pair.
fn pair_templates(pbar: &Vector, delta: f64, d: &Vector) -> [(Vector, Vector, f64); 3] {
    [
        (pbar.clone(), pbar.axpy(delta, d), delta),
        (pbar.axpy(-delta, d), pbar.axpy(delta, d), 2.0 * delta),
        (pbar.axpy(0.5 * delta, d), pbar.axpy(delta, d), 0.5 * delta),
    ]
}

/// Two-parameter Hausdorff rate `H(Φ(p₁), Φ(p₂)) / d(p₁, p₂)` near `p̄`.
/// Infinite Hausdorff gaps (structural jumps) surface as diverging levels.
pub fn liploc_modulus(
    family: &ParamSetMap,
    pbar: &Vector,
    cfg: &EstimatorConfig,
) -> Result<ModulusEstimate> {
    let dirs = direction_set(family.p_dim(), cfg.dirs_n);
    let mut levels = Vec::with_capacity(cfg.delta_schedule.len());
    for &delta in &cfg.delta_schedule {
        let mut worst = 0.0f64;
        for d in &dirs {
            for (p1, p2, dist) in pair_templates(pbar, delta, d) {
                let q1 = family.eval(&p1)?;
                let q2 = family.eval(&p2)?;
                let h = q1.excess_to(&q2)?.max(q2.excess_to(&q1)?);
                worst = worst.max(h / dist);
            }
        }
        levels.push(Level {
            scale: delta,
            estimate: worst,
        });
    }
    Ok(finish(ModulusKind::LipschitzHausdorff, levels, None))
}

/// Joint two-point rate of `F` in `(p, x)` under the max metric, sampled
/// around the reference pair.
pub fn lip_joint_modulus(
    map: &SetMap,
    pbar: &Vector,
    xbar: &Vector,
    cfg: &EstimatorConfig,
) -> Result<ModulusEstimate> {
    let pd = map.p_dim();
    let xd = map.x_dim();
    let dirs = direction_set(pd + xd, cfg.dirs_n);
    let split = |q: &Vector| -> (Vector, Vector) {
        (
            Vector::raw(q.coords()[..pd].to_vec()),
            Vector::raw(q.coords()[pd..].to_vec()),
        )
    };
    let qbar = Vector::raw(
        pbar.coords()
            .iter()
            .chain(xbar.coords())
            .copied()
            .collect(),
    );
    let mut levels = Vec::with_capacity(cfg.delta_schedule.len());
    for &delta in &cfg.delta_schedule {
        let mut worst = 0.0f64;
        for d in &dirs {
            for (q1, q2, _) in pair_templates(&qbar, delta, d) {
                let (p1, x1) = split(&q1);
                let (p2, x2) = split(&q2);
                let denom = p1.dist(&p2).max(x1.dist(&x2));
                if denom <= 1e-14 {
                    continue;
                }
                let b1 = map.evaluate(&p1, &x1)?;
                let b2 = map.evaluate(&p2, &x2)?;
                worst = worst.max(geometry::hausdorff(&b1, &b2)? / denom);
            }
        }
        levels.push(Level {
            scale: delta,
            estimate: worst,
        });
    }
    Ok(finish(ModulusKind::LipschitzJoint, levels, None))
}

/// Hausdorff rate of `F(·, x)` in the parameter, uniformly over a lattice
/// of the x-window.
pub fn lip_p_uniform_modulus(
    map: &SetMap,
    pbar: &Vector,
    x_window: &WindowBox,
    cfg: &EstimatorConfig,
) -> Result<ModulusEstimate> {
    let dirs = direction_set(map.p_dim(), cfg.dirs_n);
    let xs = x_window.lattice(if map.x_dim() == 1 { 9 } else { 5 });
    let mut levels = Vec::with_capacity(cfg.delta_schedule.len());
    for &delta in &cfg.delta_schedule {
        let mut worst = 0.0f64;
        for x in &xs {
            for d in &dirs {
                for (p1, p2, dist) in pair_templates(pbar, delta, d) {
                    let b1 = map.evaluate(&p1, x)?;
                    let b2 = map.evaluate(&p2, x)?;
                    worst = worst.max(geometry::hausdorff(&b1, &b2)? / dist);
                }
            }
        }
        levels.push(Level {
            scale: delta,
            estimate: worst,
        });
    }
    Ok(finish(ModulusKind::ParamLipschitzUniform, levels, None))
}

/// Calmness moduli of a scalar value function: from above, from below, and
/// two-sided. Non-finite values near the reference surface as infinite
/// levels.
#[derive(Clone, Debug, Serialize)]
pub struct ScalarCalmModuli {
    pub ucalm: ModulusEstimate,
    pub lcalm: ModulusEstimate,
    pub calm: ModulusEstimate,
}

pub fn scalar_calm_moduli(
    psi: &ScalarFn,
    pbar: &Vector,
    cfg: &EstimatorConfig,
) -> Result<ScalarCalmModuli> {
    let base = psi.eval(pbar)?;
    if !base.is_finite() {
        return Err(Error::InvalidArgument(
            "scalar calmness needs a finite value at the reference parameter".into(),
        ));
    }
    let dirs = direction_set(pbar.dim(), cfg.dirs_n);
    let mut up_levels = Vec::new();
    let mut down_levels = Vec::new();
    let mut abs_levels = Vec::new();
    for &delta in &cfg.delta_schedule {
        let (mut up, mut down, mut abs) = (0.0f64, 0.0f64, 0.0f64);
        for d in &dirs {
            let v = psi.eval(&pbar.axpy(delta, d))?;
            if !v.is_finite() {
                up = f64::INFINITY;
                down = f64::INFINITY;
                abs = f64::INFINITY;
                break;
            }
            up = up.max((v - base) / delta);
            down = down.max((base - v) / delta);
            abs = abs.max((v - base).abs() / delta);
        }
        up_levels.push(Level {
            scale: delta,
            estimate: up.max(0.0),
        });
        down_levels.push(Level {
            scale: delta,
            estimate: down.max(0.0),
        });
        abs_levels.push(Level {
            scale: delta,
            estimate: abs,
        });
    }
    Ok(ScalarCalmModuli {
        ucalm: finish(ModulusKind::CalmAbove, up_levels, None),
        lcalm: finish(ModulusKind::CalmBelow, down_levels, None),
        calm: finish(ModulusKind::CalmScalar, abs_levels, None),
    })
}
