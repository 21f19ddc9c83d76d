//! Parameterized set-valued maps and the inclusion problems built on them.
//!
//! A `SetMap` evaluates to a convex body `F(p, x)`; the induced merit value
//! `φ(p, x) = e(F(p, x), C)` measures how far the inclusion `F(p, x) ⊆ C`
//! is from holding. Solution slices in one variable are traced by sign
//! scanning plus bisection, producing interval unions with exact endpoint
//! queries.

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::Tolerances;
use crate::expr::ScalarExpr;
use crate::geometry::{excess, support, ConeSpec, ConvexBody, Vector, WindowBox};
use crate::increase::Mat;
use crate::{Error, Result};

type CustomEval = Arc<dyn Fn(&Vector, &Vector) -> Result<ConvexBody> + Send + Sync>;

// Level used when tightening part endpoints onto the zero set of the merit.
// Exact zero is attainable because the excess clamps there; maps whose
// feasible merit is positive round-off skip the tightening pass instead.
const SHARP_MEMBERSHIP: f64 = 0.0;

#[derive(Clone)]
pub enum MapKind {
    /// `F(p, x) = [f(p, x), ∞)`.
    Epigraph { f: ScalarExpr },
    /// `F(p, x) = conv { Λx : Λ vertex }`, constant in `p`.
    Fan { matrices: Vec<Mat> },
    /// Fixed body, blind to both arguments.
    Constant { body: ConvexBody },
    /// `p ↦ [−√|p|, √|p|]`, a non-Lipschitz interval family.
    SqrtInterval,
    /// `p ↦ (−∞, 0]`, `ℝ`, or `[0, ∞)` by the sign of `p`.
    HalflineSign,
    Custom { eval: CustomEval },
}

impl fmt::Debug for MapKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MapKind::Epigraph { f: e } => write!(f, "Epigraph({})", e.source()),
            MapKind::Fan { matrices } => write!(f, "Fan({} vertices)", matrices.len()),
            MapKind::Constant { .. } => write!(f, "Constant"),
            MapKind::SqrtInterval => write!(f, "SqrtInterval"),
            MapKind::HalflineSign => write!(f, "HalflineSign"),
            MapKind::Custom { .. } => write!(f, "Custom"),
        }
    }
}

/// Set-valued map with declared dimensions and analyst-supplied metadata.
/// `concave_in_x` is a claim, spot-checked at instance construction;
/// `lipschitz_p_hint` is advisory and never replaces measurement.
#[derive(Clone, Debug)]
pub struct SetMap {
    kind: MapKind,
    p_dim: usize,
    x_dim: usize,
    y_dim: usize,
    concave_in_x: bool,
    lipschitz_p_hint: Option<f64>,
}

impl SetMap {
    pub fn epigraph(src: &str, p_dim: usize, x_dim: usize, concave_in_x: bool) -> Result<Self> {
        let f = ScalarExpr::parse(src)?;
        if f.p_arity() > p_dim || f.x_arity() > x_dim {
            return Err(Error::InvalidArgument(format!(
                "expression '{src}' references components beyond the declared dimensions"
            )));
        }
        Ok(SetMap {
            kind: MapKind::Epigraph { f },
            p_dim,
            x_dim,
            y_dim: 1,
            concave_in_x,
            lipschitz_p_hint: None,
        })
    }

    /// Fans are concave in `x` by construction.
    pub fn fan(matrices: Vec<Mat>, p_dim: usize) -> Result<Self> {
        let first = matrices
            .first()
            .ok_or_else(|| Error::InvalidArgument("fan needs at least one vertex matrix".into()))?;
        let (rows, cols) = (first.rows(), first.cols());
        if matrices.iter().any(|m| m.rows() != rows || m.cols() != cols) {
            return Err(Error::InvalidArgument("fan vertex shapes differ".into()));
        }
        if matrices.len() > 8 {
            return Err(Error::InvalidArgument("fan limited to 8 vertex matrices".into()));
        }
        Ok(SetMap {
            kind: MapKind::Fan { matrices },
            p_dim,
            x_dim: cols,
            y_dim: rows,
            concave_in_x: true,
            lipschitz_p_hint: Some(0.0),
        })
    }

    pub fn constant(body: ConvexBody, p_dim: usize, x_dim: usize) -> Self {
        let y_dim = body.dim();
        SetMap {
            kind: MapKind::Constant { body },
            p_dim,
            x_dim,
            y_dim,
            concave_in_x: true,
            lipschitz_p_hint: Some(0.0),
        }
    }

    pub fn sqrt_interval() -> Self {
        SetMap {
            kind: MapKind::SqrtInterval,
            p_dim: 1,
            x_dim: 1,
            y_dim: 1,
            concave_in_x: true,
            lipschitz_p_hint: None,
        }
    }

    pub fn halfline_sign() -> Self {
        SetMap {
            kind: MapKind::HalflineSign,
            p_dim: 1,
            x_dim: 1,
            y_dim: 1,
            concave_in_x: true,
            lipschitz_p_hint: None,
        }
    }

    pub fn custom(
        eval: CustomEval,
        p_dim: usize,
        x_dim: usize,
        y_dim: usize,
        concave_in_x: bool,
    ) -> Self {
        SetMap {
            kind: MapKind::Custom { eval },
            p_dim,
            x_dim,
            y_dim,
            concave_in_x,
            lipschitz_p_hint: None,
        }
    }

    pub fn with_lipschitz_p_hint(mut self, hint: f64) -> Self {
        self.lipschitz_p_hint = Some(hint);
        self
    }

    #[inline]
    pub fn kind(&self) -> &MapKind {
        &self.kind
    }

    #[inline]
    pub fn p_dim(&self) -> usize {
        self.p_dim
    }

    #[inline]
    pub fn x_dim(&self) -> usize {
        self.x_dim
    }

    #[inline]
    pub fn y_dim(&self) -> usize {
        self.y_dim
    }

    #[inline]
    pub fn concave_in_x(&self) -> bool {
        self.concave_in_x
    }

    #[inline]
    pub fn lipschitz_p_hint(&self) -> Option<f64> {
        self.lipschitz_p_hint
    }

    pub fn evaluate(&self, p: &Vector, x: &Vector) -> Result<ConvexBody> {
        if p.dim() != self.p_dim {
            return Err(Error::DimensionMismatch {
                expected: self.p_dim,
                got: p.dim(),
            });
        }
        if x.dim() != self.x_dim {
            return Err(Error::DimensionMismatch {
                expected: self.x_dim,
                got: x.dim(),
            });
        }
        match &self.kind {
            MapKind::Epigraph { f } => {
                let v = f.eval(p.coords(), x.coords())?;
                ConvexBody::interval(v, f64::INFINITY)
            }
            MapKind::Fan { matrices } => {
                let vertices = matrices
                    .iter()
                    .map(|m| m.apply(x))
                    .collect::<Result<Vec<_>>>()?;
                ConvexBody::polytope(vertices)
            }
            MapKind::Constant { body } => Ok(body.clone()),
            MapKind::SqrtInterval => {
                let s = p.at(0).abs().sqrt();
                ConvexBody::interval(-s, s)
            }
            MapKind::HalflineSign => {
                let a = p.at(0);
                if a < 0.0 {
                    ConvexBody::interval(f64::NEG_INFINITY, 0.0)
                } else if a > 0.0 {
                    ConvexBody::interval(0.0, f64::INFINITY)
                } else {
                    ConvexBody::interval(f64::NEG_INFINITY, f64::INFINITY)
                }
            }
            MapKind::Custom { eval } => {
                let body = eval(p, x)?;
                if body.dim() != self.y_dim {
                    return Err(Error::DimensionMismatch {
                        expected: self.y_dim,
                        got: body.dim(),
                    });
                }
                Ok(body)
            }
        }
    }

    /// Merit value `φ(p, x) = e(F(p, x), C)`; `+∞` signals an unbounded
    /// violation.
    pub fn phi(&self, cone: &ConeSpec, p: &Vector, x: &Vector) -> Result<f64> {
        if cone.dim() != self.y_dim {
            return Err(Error::DimensionMismatch {
                expected: self.y_dim,
                got: cone.dim(),
            });
        }
        excess(&self.evaluate(p, x)?, &cone.as_body())
    }

    pub fn in_solution(&self, cone: &ConeSpec, p: &Vector, x: &Vector, tol: f64) -> Result<bool> {
        Ok(self.phi(cone, p, x)? <= tol)
    }
}

/// One maximal feasible interval of a 1-D solution slice, clipped to the
/// scan window. An `open_*` flag records that the run reached the window
/// edge, in which case distance and excess queries treat that side as
/// unbounded.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct SlicePart {
    pub lo: f64,
    pub hi: f64,
    pub open_lo: bool,
    pub open_hi: bool,
}

impl SlicePart {
    fn lo_eff(&self) -> f64 {
        if self.open_lo {
            f64::NEG_INFINITY
        } else {
            self.lo
        }
    }

    fn hi_eff(&self) -> f64 {
        if self.open_hi {
            f64::INFINITY
        } else {
            self.hi
        }
    }

    fn dist(&self, x: f64) -> f64 {
        (self.lo_eff() - x).max(x - self.hi_eff()).max(0.0)
    }
}

/// Union of feasible intervals from one solution slice.
#[derive(Clone, Debug, Serialize)]
pub struct SolvSlice {
    parts: Vec<SlicePart>,
    window: (f64, f64),
}

impl SolvSlice {
    #[inline]
    pub fn parts(&self) -> &[SlicePart] {
        &self.parts
    }

    #[inline]
    pub fn window(&self) -> (f64, f64) {
        self.window
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    pub fn contains(&self, x: f64, tol: f64) -> bool {
        self.parts.iter().any(|p| p.dist(x) <= tol)
    }

    /// Distance from `x` to the union; `+∞` when empty.
    pub fn dist(&self, x: f64) -> f64 {
        self.parts
            .iter()
            .map(|p| p.dist(x))
            .fold(f64::INFINITY, f64::min)
    }

    fn reaches_neg(&self) -> bool {
        self.parts.iter().any(|p| p.open_lo)
    }

    fn reaches_pos(&self) -> bool {
        self.parts.iter().any(|p| p.open_hi)
    }

    /// `e(self, other)`, exact for interval unions: the supremum over a part
    /// is attained at a finite endpoint or at a gap midpoint of `other`, and
    /// unbounded tails not matched by `other` give `+∞`.
    pub fn excess_to(&self, other: &SolvSlice) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        if other.is_empty() {
            return f64::INFINITY;
        }
        if (self.reaches_neg() && !other.reaches_neg())
            || (self.reaches_pos() && !other.reaches_pos())
        {
            return f64::INFINITY;
        }
        let mut candidates: Vec<f64> = Vec::new();
        for p in &self.parts {
            candidates.push(p.lo);
            candidates.push(p.hi);
        }
        for w in other.parts.windows(2) {
            let mid = 0.5 * (w[0].hi + w[1].lo);
            if self.contains(mid, 0.0) {
                candidates.push(mid);
            }
        }
        candidates
            .into_iter()
            .map(|t| other.dist(t))
            .fold(0.0, f64::max)
    }

    /// Points of the union within `zeta` of `center`: clipped part endpoints
    /// plus an interior grid, for calmness-style sampling.
    pub fn samples_in_ball(&self, center: f64, zeta: f64, per_part: usize) -> Vec<f64> {
        let mut out = Vec::new();
        for p in &self.parts {
            let lo = p.lo_eff().max(center - zeta);
            let hi = p.hi_eff().min(center + zeta);
            if lo > hi {
                continue;
            }
            let n = per_part.max(2);
            for k in 0..=n {
                out.push(lo + (hi - lo) * k as f64 / n as f64);
            }
        }
        out
    }
}

/// Traces `{ x ∈ window : φ(p, x) ≤ tol.membership }` for a 1-D unknown by
/// scanning `grid_n` cells and bisecting every sign change to width
/// `tol.root`. Endpoints are then tightened onto the boundary of the exact
/// zero set of the merit whenever the part interior attains it, so for
/// epigraph maps they coincide with roots of `f(p, ·)` up to `tol.root`.
/// Feasible runs thinner than one cell can be missed.
pub fn solve_slice_1d(
    map: &SetMap,
    cone: &ConeSpec,
    p: &Vector,
    window: &WindowBox,
    grid_n: usize,
    tol: &Tolerances,
) -> Result<SolvSlice> {
    if map.x_dim() != 1 || window.dim() != 1 {
        return Err(Error::Unsupported(
            "solution slices are traced for a one-dimensional unknown".into(),
        ));
    }
    let (lo, hi) = (window.lo()[0], window.hi()[0]);
    let n = grid_n.max(16);
    let feasible = |x: f64| -> Result<bool> {
        Ok(map.phi(cone, p, &Vector::scalar(x))? <= tol.membership)
    };

    let xs: Vec<f64> = (0..=n).map(|k| lo + (hi - lo) * k as f64 / n as f64).collect();
    let mut feas = Vec::with_capacity(xs.len());
    for &x in &xs {
        feas.push(feasible(x)?);
    }

    // Bisect the boundary inside (a, b] where feasibility flips.
    let refine = |mut a: f64, mut b: f64, fa: bool| -> Result<f64> {
        for _ in 0..80 {
            if b - a <= tol.root {
                break;
            }
            let m = 0.5 * (a + b);
            if feasible(m)? == fa {
                a = m;
            } else {
                b = m;
            }
        }
        Ok(0.5 * (a + b))
    };

    let mut parts = Vec::new();
    let mut run_start: Option<(f64, bool)> = if feas[0] { Some((lo, true)) } else { None };
    for i in 0..n {
        match (feas[i], feas[i + 1]) {
            (false, true) => {
                let b = refine(xs[i], xs[i + 1], false)?;
                run_start = Some((b, false));
            }
            (true, false) => {
                let (start, at_edge) = run_start.take().expect("run bookkeeping");
                let b = refine(xs[i], xs[i + 1], true)?;
                parts.push(SlicePart {
                    lo: start,
                    hi: b,
                    open_lo: at_edge,
                    open_hi: false,
                });
            }
            _ => {}
        }
    }
    if let Some((start, at_edge)) = run_start {
        parts.push(SlicePart {
            lo: start,
            hi,
            open_lo: at_edge,
            open_hi: true,
        });
    }

    // Located endpoints sit on the tol.membership level set of the merit.
    // When the merit has a small derivative at the boundary, that slack
    // inflates the part by up to membership/|slope| in x units, which is what
    // distance queries would then report. The merit clamps to exactly zero on
    // the true solution set, so wherever a part interior reaches (near) zero
    // we re-bisect the endpoint against a much tighter level. Parts whose
    // merit never drops that low (legitimately tolerance-thin) keep their
    // tol.membership endpoints.
    let merit = |x: f64| -> Result<f64> { map.phi(cone, p, &Vector::scalar(x)) };
    let anchor = |from: f64, to: f64| -> Result<Option<f64>> {
        for frac in [0.25, 0.5, 0.75] {
            let q = from + (to - from) * frac;
            if merit(q)? <= SHARP_MEMBERSHIP {
                return Ok(Some(q));
            }
        }
        Ok(None)
    };
    // `outer` has merit above the tight level, `inner` at most it.
    let sharpen = |mut outer: f64, mut inner: f64| -> Result<f64> {
        for _ in 0..80 {
            if (inner - outer).abs() <= tol.root {
                break;
            }
            let m = 0.5 * (outer + inner);
            if merit(m)? <= SHARP_MEMBERSHIP {
                inner = m;
            } else {
                outer = m;
            }
        }
        Ok(0.5 * (outer + inner))
    };
    for part in &mut parts {
        if part.hi - part.lo <= tol.root {
            continue;
        }
        if !part.open_lo && merit(part.lo)? > SHARP_MEMBERSHIP {
            if let Some(q) = anchor(part.lo, part.hi)? {
                part.lo = sharpen(part.lo, q)?;
            }
        }
        if !part.open_hi && merit(part.hi)? > SHARP_MEMBERSHIP {
            if let Some(q) = anchor(part.hi, part.lo)? {
                part.hi = sharpen(part.hi, q)?;
            }
        }
    }

    Ok(SolvSlice {
        parts,
        window: (lo, hi),
    })
}

/// Segment test for concavity of `x ↦ F(p, x)`: the value at the convex
/// combination must land inside the combination of the endpoint values,
/// compared through support functions over a direction set.
pub fn segment_concavity_check(
    map: &SetMap,
    p: &Vector,
    x1: &Vector,
    x2: &Vector,
    dirs: &[Vector],
    tol: f64,
) -> Result<bool> {
    let f1 = map.evaluate(p, x1)?;
    let f2 = map.evaluate(p, x2)?;
    for &t in &[0.25, 0.5, 0.75] {
        let xt = x1.scale(t).axpy(1.0 - t, x2);
        let ft = map.evaluate(p, &xt)?;
        for g in dirs {
            let s1 = support(&f1, g)?;
            let s2 = support(&f2, g)?;
            if s1 == f64::INFINITY || s2 == f64::INFINITY {
                continue;
            }
            let rhs = t * s1 + (1.0 - t) * s2;
            if support(&ft, g)? > rhs + tol * (1.0 + rhs.abs()) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// A set-valued inclusion problem pinned at a reference pair. Construction
/// validates dimensions, window containment, membership of the reference in
/// the solution set, and (when claimed) concavity along sampled segments.
#[derive(Clone, Debug)]
pub struct InclusionInstance {
    map: SetMap,
    cone: ConeSpec,
    pbar: Vector,
    xbar: Vector,
    p_window: WindowBox,
    x_window: WindowBox,
    tol: Tolerances,
}

impl InclusionInstance {
    pub fn new(
        map: SetMap,
        cone: ConeSpec,
        pbar: Vector,
        xbar: Vector,
        p_window: WindowBox,
        x_window: WindowBox,
        tol: Tolerances,
    ) -> Result<Self> {
        if cone.dim() != map.y_dim() {
            return Err(Error::DimensionMismatch {
                expected: map.y_dim(),
                got: cone.dim(),
            });
        }
        if pbar.dim() != map.p_dim() || p_window.dim() != map.p_dim() {
            return Err(Error::DimensionMismatch {
                expected: map.p_dim(),
                got: pbar.dim().max(p_window.dim()),
            });
        }
        if xbar.dim() != map.x_dim() || x_window.dim() != map.x_dim() {
            return Err(Error::DimensionMismatch {
                expected: map.x_dim(),
                got: xbar.dim().max(x_window.dim()),
            });
        }
        if !p_window.contains(&pbar, 1e-12) {
            return Err(Error::Validation(
                "reference parameter lies outside its window".into(),
            ));
        }
        if !x_window.contains(&xbar, 1e-12) {
            return Err(Error::Validation(
                "reference point lies outside its window".into(),
            ));
        }
        let merit = map.phi(&cone, &pbar, &xbar)?;
        if !(merit <= tol.membership) {
            return Err(Error::Validation(format!(
                "reference point is not a solution at the reference parameter (merit {merit:.3e})"
            )));
        }
        let instance = InclusionInstance {
            map,
            cone,
            pbar,
            xbar,
            p_window,
            x_window,
            tol,
        };
        if instance.map.concave_in_x() {
            instance.spot_check_concavity()?;
        }
        Ok(instance)
    }

    /// Twelve seeded segments per probed parameter; failure contradicts the
    /// declared concavity flag and rejects the instance.
    fn spot_check_concavity(&self) -> Result<()> {
        let mut rng = ChaCha8Rng::seed_from_u64(0xC0FFEE);
        let dirs = crate::geometry::direction_set(self.map.y_dim(), 32);
        let mut probes = vec![self.pbar.clone()];
        for corner in [self.p_window.lo().to_vec(), self.p_window.hi().to_vec()] {
            probes.push(Vector::raw(corner));
        }
        for p in probes {
            for _ in 0..12 {
                let rand_x = |rng: &mut ChaCha8Rng| {
                    let coords: Vec<f64> = self
                        .x_window
                        .lo()
                        .iter()
                        .zip(self.x_window.hi())
                        .map(|(a, b)| a + (b - a) * rng.gen::<f64>())
                        .collect();
                    Vector::raw(coords)
                };
                let x1 = rand_x(&mut rng);
                let x2 = rand_x(&mut rng);
                if !segment_concavity_check(&self.map, &p, &x1, &x2, &dirs, 1e-9)? {
                    return Err(Error::Validation(format!(
                        "declared concavity fails on the segment {x1} .. {x2} at p = {p}"
                    )));
                }
            }
        }
        Ok(())
    }

    #[inline]
    pub fn map(&self) -> &SetMap {
        &self.map
    }

    #[inline]
    pub fn cone(&self) -> &ConeSpec {
        &self.cone
    }

    #[inline]
    pub fn pbar(&self) -> &Vector {
        &self.pbar
    }

    #[inline]
    pub fn xbar(&self) -> &Vector {
        &self.xbar
    }

    #[inline]
    pub fn p_window(&self) -> &WindowBox {
        &self.p_window
    }

    #[inline]
    pub fn x_window(&self) -> &WindowBox {
        &self.x_window
    }

    #[inline]
    pub fn tol(&self) -> &Tolerances {
        &self.tol
    }

    pub fn phi_at(&self, p: &Vector, x: &Vector) -> Result<f64> {
        self.map.phi(&self.cone, p, x)
    }

    /// Solution slice at `p` over the x-window (1-D unknowns only).
    pub fn solv_slice(&self, p: &Vector, grid_n: usize) -> Result<SolvSlice> {
        solve_slice_1d(&self.map, &self.cone, p, &self.x_window, grid_n, &self.tol)
    }
}
