//! Descent-rate estimators: strong slopes at a point, their strict outer
//! limits over shrinking infeasibility bands, and region-wide floors.
//!
//! All estimators are sampling-based and deterministic: directions come from
//! fixed direction sets, radii from the configured schedules. Band-style
//! estimators scale their inner radii with the sampled merit gap so that the
//! difference quotients stay inside the band they certify.

use serde::Serialize;

use crate::config::EstimatorConfig;
use crate::estimate::{summarize, Level, Verdict};
use crate::geometry::{direction_set, ConeSpec, Vector, WindowBox};
use crate::setmaps::SetMap;
use crate::{Error, Result};

/// Scalar function with an optional subdifferential-distance oracle for the
/// convex exact path.
pub struct ScalarFn<'a> {
    eval: Box<dyn Fn(&Vector) -> Result<f64> + 'a>,
    subdiff_dist: Option<Box<dyn Fn(&Vector) -> Result<f64> + 'a>>,
}

impl<'a> ScalarFn<'a> {
    pub fn new(eval: impl Fn(&Vector) -> Result<f64> + 'a) -> Self {
        ScalarFn {
            eval: Box::new(eval),
            subdiff_dist: None,
        }
    }

    pub fn with_subdiff_dist(mut self, oracle: impl Fn(&Vector) -> Result<f64> + 'a) -> Self {
        self.subdiff_dist = Some(Box::new(oracle));
        self
    }

    pub fn eval(&self, x: &Vector) -> Result<f64> {
        (self.eval)(x)
    }

    pub fn has_subdiff_oracle(&self) -> bool {
        self.subdiff_dist.is_some()
    }
}

/// Merit landscape `x ↦ φ(p, x)` of a map slice as a `ScalarFn`.
pub fn merit_fn<'a>(map: &'a SetMap, cone: &'a ConeSpec, p: &'a Vector) -> ScalarFn<'a> {
    ScalarFn::new(move |x: &Vector| map.phi(cone, p, x))
}

#[derive(Clone, Debug, Serialize)]
pub struct SlopeEstimate {
    /// `+∞` when the levels diverge or never see a usable sample.
    pub value: f64,
    pub levels: Vec<Level>,
    pub verdict: Verdict,
    /// Set when a band-style estimator found no qualifying points at the
    /// finest band; the `+∞` is then vacuous rather than measured.
    pub band_empty: bool,
    /// Region the estimate was restricted to, when applicable.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub region: Option<WindowBox>,
}

/// Strong slope at `x`: the steepest sampled descent rate
/// `max(ψ(x) − ψ(u), 0) / |u − x|` over shrinking radii. Points where every
/// sampled difference at the two finest radii stays below the zero
/// tolerance are reported as slope 0 (sampled local minimizer).
pub fn strong_slope(psi: &ScalarFn, x: &Vector, cfg: &EstimatorConfig) -> Result<SlopeEstimate> {
    let base = psi.eval(x)?;
    if !base.is_finite() {
        return Err(Error::InvalidArgument(
            "strong slope needs a finite value at the base point".into(),
        ));
    }
    let dirs = direction_set(x.dim(), cfg.dirs_n);
    let mut levels = Vec::with_capacity(cfg.r_schedule.len());
    for &r in &cfg.r_schedule {
        let mut best = 0.0f64;
        for s in [0.25, 0.5, 1.0] {
            let step = s * r;
            for d in &dirs {
                let v = psi.eval(&x.axpy(step, d))?;
                if v.is_finite() {
                    best = best.max((base - v) / step);
                }
            }
        }
        levels.push(Level {
            scale: r,
            estimate: best,
        });
    }
    let n = levels.len();
    if n >= 2
        && levels[n - 1].estimate <= cfg.tol.slope_zero
        && levels[n - 2].estimate <= cfg.tol.slope_zero
    {
        return Ok(SlopeEstimate {
            value: 0.0,
            levels,
            verdict: Verdict::Converged,
            band_empty: false,
            region: None,
        });
    }
    let (value, verdict) = summarize(&levels);
    Ok(SlopeEstimate {
        value,
        levels,
        verdict,
        band_empty: false,
        region: None,
    })
}

/// Exact slope of a convex function through its subdifferential-distance
/// oracle; errors when the function carries none.
pub fn exact_slope_convex(psi: &ScalarFn, x: &Vector) -> Result<f64> {
    match &psi.subdiff_dist {
        Some(oracle) => oracle(x),
        None => Err(Error::MissingOracle("subdifferential distance")),
    }
}

/// Difference quotients of `psi` at `x` restricted to radii proportional to
/// the known merit gap, so samples stay inside the band being certified.
fn band_slope(psi: &dyn Fn(&Vector) -> Result<f64>, x: &Vector, gap: f64, dirs: &[Vector]) -> Result<f64> {
    let base = psi(x)?;
    let mut best = 0.0f64;
    for scale in [0.1, 0.05, 0.02] {
        let step = scale * gap;
        for d in dirs {
            let v = psi(&x.axpy(step, d))?;
            if v.is_finite() {
                best = best.max((base - v) / step);
            }
        }
    }
    Ok(best)
}

fn per_axis(dim: usize, grid_n: usize) -> usize {
    match dim {
        1 => grid_n.max(16),
        2 => 9,
        _ => 5,
    }
}

/// Joins band-style levels: `+∞` levels mean "no qualifying samples", so
/// the verdict comes from the finite tail and the flag records an empty
/// finest band.
fn join_band_levels(levels: Vec<Level>) -> SlopeEstimate {
    let last_inf = levels.iter().rposition(|l| !l.estimate.is_finite());
    let tail: &[Level] = match last_inf {
        Some(i) => &levels[i + 1..],
        None => &levels[..],
    };
    if tail.is_empty() {
        return SlopeEstimate {
            value: f64::INFINITY,
            levels,
            verdict: Verdict::Inconclusive,
            band_empty: true,
            region: None,
        };
    }
    let (value, verdict) = summarize(tail);
    SlopeEstimate {
        value,
        levels,
        verdict,
        band_empty: false,
        region: None,
    }
}

/// Strict outer slope of `psi` at `xbar`: the smallest slope seen at points
/// near `xbar` whose value exceeds `psi(xbar)` by less than the band width,
/// for a shrinking band schedule. The liminf is approached from above, so
/// levels typically decrease toward it.
pub fn strict_outer_slope(
    psi: &ScalarFn,
    xbar: &Vector,
    cfg: &EstimatorConfig,
) -> Result<SlopeEstimate> {
    let base = psi.eval(xbar)?;
    if !base.is_finite() {
        return Err(Error::InvalidArgument(
            "outer slope needs a finite value at the reference point".into(),
        ));
    }
    let dim = xbar.dim();
    let dirs = direction_set(dim, cfg.dirs_n);
    let mut levels = Vec::with_capacity(cfg.eps_schedule.len());
    for &eps in &cfg.eps_schedule {
        let mut candidates = WindowBox::ball_box(xbar, eps)?.lattice(per_axis(dim, cfg.grid_n));
        for shell in [1.0, 0.5, 0.25, 0.125] {
            for d in &dirs {
                candidates.push(xbar.axpy(shell * eps, d));
            }
        }
        let mut level_inf = f64::INFINITY;
        for x in &candidates {
            let gap = psi.eval(x)? - base;
            if gap <= cfg.tol.membership || gap >= eps {
                continue;
            }
            let slope = band_slope(&|u: &Vector| psi.eval(u), x, gap, &dirs)?;
            level_inf = level_inf.min(slope);
        }
        levels.push(Level {
            scale: eps,
            estimate: level_inf,
        });
    }
    Ok(join_band_levels(levels))
}

/// Outer slope of the merit landscape in `x` alone, with the parameter and
/// the point sampled jointly from shrinking balls around the reference
/// pair. This is the denominator quantity for solution-stability bounds at
/// a fixed reference.
pub fn partial_strict_outer_slope(
    map: &SetMap,
    cone: &ConeSpec,
    pbar: &Vector,
    xbar: &Vector,
    cfg: &EstimatorConfig,
) -> Result<SlopeEstimate> {
    let base = map.phi(cone, pbar, xbar)?;
    if !base.is_finite() {
        return Err(Error::InvalidArgument(
            "outer slope needs a finite merit at the reference pair".into(),
        ));
    }
    let x_dirs = direction_set(xbar.dim(), cfg.dirs_n);
    let mut levels = Vec::with_capacity(cfg.eps_schedule.len());
    for &eps in &cfg.eps_schedule {
        let p_grid = WindowBox::ball_box(pbar, eps)?.lattice(per_axis(pbar.dim(), 21));
        let x_grid = WindowBox::ball_box(xbar, eps)?.lattice(per_axis(xbar.dim(), 21));
        let mut level_inf = f64::INFINITY;
        for p in &p_grid {
            for x in &x_grid {
                let gap = map.phi(cone, p, x)? - base;
                if gap <= cfg.tol.membership || gap >= eps {
                    continue;
                }
                let slope = band_slope(&|u: &Vector| map.phi(cone, p, u), x, gap, &x_dirs)?;
                level_inf = level_inf.min(slope);
            }
        }
        levels.push(Level {
            scale: eps,
            estimate: level_inf,
        });
    }
    Ok(join_band_levels(levels))
}

/// Slope floor over a region: the smallest strong slope of `φ(p̄, ·)` over
/// infeasible grid points, at two grid resolutions. Feasible-only regions
/// report `+∞` with the empty-band flag; points with an infinite merit are
/// skipped.
pub fn tau(
    map: &SetMap,
    cone: &ConeSpec,
    pbar: &Vector,
    region: &WindowBox,
    cfg: &EstimatorConfig,
) -> Result<SlopeEstimate> {
    let mut levels = Vec::with_capacity(2);
    for n in [cfg.grid_n, 2 * cfg.grid_n + 1] {
        let mut level_inf = f64::INFINITY;
        for x in region.lattice(per_axis(region.dim(), n)) {
            let merit = map.phi(cone, pbar, &x)?;
            if merit <= cfg.tol.membership || !merit.is_finite() {
                continue;
            }
            let psi = merit_fn(map, cone, pbar);
            level_inf = level_inf.min(strong_slope(&psi, &x, cfg)?.value);
        }
        levels.push(Level {
            scale: n as f64,
            estimate: level_inf,
        });
    }
    let mut out = join_band_levels(levels);
    out.region = Some(region.clone());
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Tolerances;
    use crate::setmaps::InclusionInstance;

    fn sc(x: f64) -> Vector {
        Vector::scalar(x)
    }

    fn cfg() -> EstimatorConfig {
        EstimatorConfig::default()
    }

    fn abs_fn<'a>() -> ScalarFn<'a> {
        ScalarFn::new(|x: &Vector| Ok(x.at(0).abs()))
    }

    #[test]
    fn slope_of_abs_away_from_zero_is_one() {
        let est = strong_slope(&abs_fn(), &sc(1.0), &cfg()).unwrap();
        assert_eq!(est.verdict, Verdict::Converged);
        assert!((est.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn minimizers_report_zero_slope() {
        let est = strong_slope(&abs_fn(), &sc(0.0), &cfg()).unwrap();
        assert_eq!(est.value, 0.0);
        assert_eq!(est.verdict, Verdict::Converged);
        let sq = ScalarFn::new(|x: &Vector| Ok(x.at(0) * x.at(0)));
        let est = strong_slope(&sq, &sc(0.0), &cfg()).unwrap();
        assert_eq!(est.value, 0.0);
    }

    #[test]
    fn cubic_merit_slope_at_minus_one() {
        let map = SetMap::epigraph("p^3 + x^3", 1, 1, false).unwrap();
        let cone = ConeSpec::halfline();
        let p = sc(0.0);
        let psi = merit_fn(&map, &cone, &p);
        let est = strong_slope(&psi, &sc(-1.0), &cfg()).unwrap();
        assert_eq!(est.verdict, Verdict::Converged);
        assert!((est.value - 3.0).abs() <= 0.01 * 3.0, "value {}", est.value);
    }

    #[test]
    fn slope_scales_with_the_function() {
        for c in [0.5, 2.0, 7.0] {
            let scaled = ScalarFn::new(move |x: &Vector| Ok(c * x.at(0).abs()));
            let est = strong_slope(&scaled, &sc(0.3), &cfg()).unwrap();
            assert!((est.value - c).abs() < 1e-9 * (1.0 + c));
        }
    }

    #[test]
    fn exact_slope_requires_the_oracle() {
        let plain = abs_fn();
        assert!(matches!(
            exact_slope_convex(&plain, &sc(0.5)),
            Err(Error::MissingOracle(_))
        ));
        let with = abs_fn().with_subdiff_dist(|x: &Vector| Ok(if x.at(0) == 0.0 { 0.0 } else { 1.0 }));
        assert_eq!(exact_slope_convex(&with, &sc(0.5)).unwrap(), 1.0);
    }

    #[test]
    fn outer_slope_of_abs_is_one() {
        let est = strict_outer_slope(&abs_fn(), &sc(0.0), &cfg()).unwrap();
        assert_eq!(est.verdict, Verdict::Converged);
        assert!((est.value - 1.0).abs() < 1e-9);
        assert!(!est.band_empty);
    }

    #[test]
    fn outer_slope_flags_an_empty_band() {
        let flat = ScalarFn::new(|_: &Vector| Ok(0.0));
        let est = strict_outer_slope(&flat, &sc(0.0), &cfg()).unwrap();
        assert_eq!(est.value, f64::INFINITY);
        assert_eq!(est.verdict, Verdict::Inconclusive);
        assert!(est.band_empty);
    }

    #[test]
    fn partial_outer_slope_distinguishes_the_families() {
        let cone = ConeSpec::halfline();
        let cubic = SetMap::epigraph("p^3 + x^3", 1, 1, false).unwrap();
        let est = partial_strict_outer_slope(&cubic, &cone, &sc(0.0), &sc(0.0), &cfg()).unwrap();
        assert!(est.value <= 0.05, "value {}", est.value);
        let shift = SetMap::epigraph("x - p", 1, 1, true).unwrap();
        let est = partial_strict_outer_slope(&shift, &cone, &sc(0.0), &sc(0.0), &cfg()).unwrap();
        assert_eq!(est.verdict, Verdict::Converged);
        assert!((est.value - 1.0).abs() <= 0.05, "value {}", est.value);
    }

    #[test]
    fn region_floor_for_the_two_families() {
        let cone = ConeSpec::halfline();
        let region = WindowBox::new(vec![-1.0], vec![1.0]).unwrap();
        let shift = SetMap::epigraph("x - p", 1, 1, true).unwrap();
        let est = tau(&shift, &cone, &sc(0.0), &region, &cfg()).unwrap();
        assert!((est.value - 1.0).abs() <= 0.05, "value {}", est.value);
        assert!(est.region.is_some());
        let cubic = SetMap::epigraph("p^3 + x^3", 1, 1, false).unwrap();
        let est = tau(&cubic, &cone, &sc(0.0), &region, &cfg()).unwrap();
        assert!(est.value <= 0.05, "value {}", est.value);
    }

    #[test]
    fn feasible_region_reports_an_empty_band() {
        let cone = ConeSpec::halfline();
        let body = cone.as_body();
        let always = SetMap::constant(body, 1, 1);
        let region = WindowBox::new(vec![-1.0], vec![1.0]).unwrap();
        let est = tau(&always, &cone, &sc(0.0), &region, &cfg()).unwrap();
        assert!(est.band_empty);
        assert_eq!(est.value, f64::INFINITY);
    }

    #[test]
    fn merit_fn_agrees_with_the_instance() {
        let map = SetMap::epigraph("x - p", 1, 1, true).unwrap();
        let cone = ConeSpec::halfline();
        let inst = InclusionInstance::new(
            map,
            cone,
            sc(0.0),
            sc(0.0),
            WindowBox::new(vec![-1.0], vec![1.0]).unwrap(),
            WindowBox::new(vec![-10.0], vec![10.0]).unwrap(),
            Tolerances::default(),
        )
        .unwrap();
        let psi = merit_fn(inst.map(), inst.cone(), inst.pbar());
        assert_eq!(psi.eval(&sc(-2.0)).unwrap(), 2.0);
        assert_eq!(inst.phi_at(inst.pbar(), &sc(-2.0)).unwrap(), 2.0);
    }
}
