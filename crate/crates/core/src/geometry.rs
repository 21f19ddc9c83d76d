//! Closed convex bodies in `R^m` (`m ≤ 4`) and the excess/Hausdorff metrics
//! between them.
//!
//! The excess `e(A, B) = sup_{a ∈ A} dist(a, B)` is the workhorse: it is zero
//! exactly when `A ⊆ B` (for closed `B`), satisfies the one-sided triangle
//! inequality `e(A, C) ≤ e(A, B) + e(B, C)`, and the Hausdorff distance is the
//! maximum of the two one-sided excesses.
//!
//! Distances to polytopes, finitely generated cones and halfspace
//! intersections are computed exactly (up to floating point) by enumerating
//! candidate faces and keeping the closest in-set candidate; no iterative
//! solver is involved. Excess over an unbounded body is `+∞` unless the
//! recession directions of the left body are contained in the recession cone
//! of the right one, in which case the supremum is attained on the bounded
//! generating part.

use nalgebra::{DMatrix, DVector};
use std::fmt;

use crate::{Error, Result};

/// Ambient dimensions are capped: everything here is exhaustive face
/// enumeration, exact at small scale and hopeless beyond it.
pub const MAX_DIM: usize = 4;

const TOL: f64 = 1e-9;

/// Dense point in `R^m`, `1 ≤ m ≤ 4`.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
#[serde(transparent)]
pub struct Vector {
    coords: Vec<f64>,
}

impl Vector {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() || coords.len() > MAX_DIM {
            return Err(Error::InvalidArgument(format!(
                "vector dimension {} outside 1..={}",
                coords.len(),
                MAX_DIM
            )));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidArgument(
                "vector coordinates must be finite".into(),
            ));
        }
        Ok(Vector { coords })
    }

    /// 1-D point.
    #[inline]
    pub fn scalar(x: f64) -> Self {
        Vector { coords: vec![x] }
    }

    /// Internal constructor for coordinates already known to be finite.
    #[inline]
    pub(crate) fn raw(coords: Vec<f64>) -> Self {
        debug_assert!(!coords.is_empty() && coords.iter().all(|c| c.is_finite()));
        Vector { coords }
    }

    pub fn zeros(dim: usize) -> Self {
        Vector {
            coords: vec![0.0; dim],
        }
    }

    pub fn unit(dim: usize, axis: usize) -> Self {
        let mut c = vec![0.0; dim];
        c[axis] = 1.0;
        Vector { coords: c }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    #[inline]
    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    #[inline]
    pub fn at(&self, i: usize) -> f64 {
        self.coords[i]
    }

    pub fn dot(&self, other: &Vector) -> f64 {
        self.coords
            .iter()
            .zip(&other.coords)
            .map(|(a, b)| a * b)
            .sum()
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn add(&self, other: &Vector) -> Vector {
        Vector {
            coords: self
                .coords
                .iter()
                .zip(&other.coords)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &Vector) -> Vector {
        Vector {
            coords: self
                .coords
                .iter()
                .zip(&other.coords)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    pub fn scale(&self, t: f64) -> Vector {
        Vector {
            coords: self.coords.iter().map(|a| a * t).collect(),
        }
    }

    /// `self + t * d`.
    pub fn axpy(&self, t: f64, d: &Vector) -> Vector {
        Vector {
            coords: self
                .coords
                .iter()
                .zip(&d.coords)
                .map(|(a, b)| a + t * b)
                .collect(),
        }
    }

    pub fn dist(&self, other: &Vector) -> f64 {
        self.sub(other).norm()
    }

    pub fn normalize(&self) -> Option<Vector> {
        let n = self.norm();
        if n <= 1e-14 {
            None
        } else {
            Some(self.scale(1.0 / n))
        }
    }
}

impl fmt::Display for Vector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.coords.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

/// Closed halfspace `{ y : ⟨normal, y⟩ ≤ offset }`.
#[derive(Clone, Debug, PartialEq)]
pub struct Halfspace {
    pub normal: Vector,
    pub offset: f64,
}

impl Halfspace {
    pub fn new(normal: Vector, offset: f64) -> Result<Self> {
        if normal.norm() <= 1e-14 {
            return Err(Error::InvalidBody("halfspace normal must be nonzero".into()));
        }
        if !offset.is_finite() {
            return Err(Error::InvalidBody("halfspace offset must be finite".into()));
        }
        Ok(Halfspace { normal, offset })
    }

    pub fn holds(&self, x: &Vector, tol: f64) -> bool {
        self.normal.dot(x) <= self.offset + tol
    }
}

// ---------------------------------------------------------------------------
// Small dense linear algebra helpers (modified Gram-Schmidt; nalgebra solves).
// ---------------------------------------------------------------------------

fn orthonormal_span(vecs: &[Vector], dim: usize) -> Vec<Vector> {
    let mut basis: Vec<Vector> = Vec::new();
    for v in vecs {
        let mut r = v.clone();
        for b in &basis {
            let c = r.dot(b);
            r = r.axpy(-c, b);
        }
        // Re-orthogonalize once; cheap and kills cancellation drift.
        for b in &basis {
            let c = r.dot(b);
            r = r.axpy(-c, b);
        }
        if r.norm() > 1e-10 * (1.0 + v.norm()) {
            basis.push(r.scale(1.0 / r.norm()));
        }
        if basis.len() == dim {
            break;
        }
    }
    basis
}

/// Extends an orthonormal set to a full orthonormal basis of `R^dim`;
/// returns only the added vectors (a basis of the orthogonal complement).
fn orthonormal_complement(span: &[Vector], dim: usize) -> Vec<Vector> {
    let mut basis = span.to_vec();
    let mut added = Vec::new();
    for axis in 0..dim {
        let mut r = Vector::unit(dim, axis);
        for b in &basis {
            let c = r.dot(b);
            r = r.axpy(-c, b);
        }
        for b in &basis {
            let c = r.dot(b);
            r = r.axpy(-c, b);
        }
        if r.norm() > 1e-10 {
            let u = r.scale(1.0 / r.norm());
            basis.push(u.clone());
            added.push(u);
        }
        if basis.len() == dim {
            break;
        }
    }
    added
}

fn rank_of(vecs: &[Vector], dim: usize) -> usize {
    orthonormal_span(vecs, dim).len()
}

fn solve_square(a: DMatrix<f64>, b: DVector<f64>) -> Option<DVector<f64>> {
    a.lu().solve(&b)
}

fn iter_subsets(k: usize, min_size: usize, max_size: usize) -> impl Iterator<Item = Vec<usize>> {
    // Desk scale: k is small, bitmask enumeration is fine.
    (0u32..(1u32 << k)).filter_map(move |mask| {
        let size = mask.count_ones() as usize;
        if size < min_size || size > max_size {
            return None;
        }
        Some((0..k).filter(|i| mask & (1 << i) != 0).collect())
    })
}

// ---------------------------------------------------------------------------
// Cones
// ---------------------------------------------------------------------------

/// A finitely generated closed convex cone with both a generator and a
/// halfspace representation. The two representations are validated against
/// each other on construction; the halfspace normals generate the polar cone.
#[derive(Clone, Debug)]
pub struct ConeSpec {
    dim: usize,
    generators: Vec<Vector>,
    halfspaces: Vec<Halfspace>,
    pointed: bool,
    has_interior: bool,
}

impl ConeSpec {
    /// Builds the cone generated by `generators` (nonnegative combinations).
    /// An empty generator list denotes the trivial cone `{0}`.
    pub fn from_generators(dim: usize, generators: Vec<Vector>) -> Result<Self> {
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::InvalidArgument(format!(
                "cone dimension {dim} outside 1..={MAX_DIM}"
            )));
        }
        let mut gens = Vec::new();
        for g in generators {
            if g.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: g.dim(),
                });
            }
            match g.normalize() {
                Some(_) => gens.push(g),
                None => {
                    return Err(Error::InvalidBody(
                        "cone generators must be nonzero".into(),
                    ))
                }
            }
        }
        if gens.len() > 12 {
            return Err(Error::InvalidBody(
                "too many cone generators for exhaustive face enumeration".into(),
            ));
        }

        // Polar generators double as halfspace normals: x ∈ C iff ⟨a, x⟩ ≤ 0
        // for every generator a of the polar cone. The trivial cone needs the
        // full ± basis spelled out; the ray recovery below would return
        // nothing for it in dimension ≥ 2.
        let polar_gens = if gens.is_empty() {
            (0..dim)
                .flat_map(|i| {
                    let e = Vector::unit(dim, i);
                    [e.clone(), e.scale(-1.0)]
                })
                .collect()
        } else {
            extreme_rays_of_hcone(&gens, dim)
        };
        let halfspaces = polar_gens
            .iter()
            .map(|n| Halfspace {
                normal: n.clone(),
                offset: 0.0,
            })
            .collect::<Vec<_>>();

        let spec = ConeSpec {
            dim,
            pointed: cone_is_pointed(&gens, dim),
            has_interior: if gens.is_empty() {
                false
            } else {
                rank_of(&gens, dim) == dim
            },
            generators: gens,
            halfspaces,
        };
        spec.validate_mutual()?;
        Ok(spec)
    }

    /// `[0, ∞)` in `R^1`.
    pub fn halfline() -> Self {
        ConeSpec::from_generators(1, vec![Vector::scalar(1.0)]).expect("static cone")
    }

    /// Nonnegative orthant in `R^dim`.
    pub fn orthant(dim: usize) -> Result<Self> {
        let gens = (0..dim).map(|i| Vector::unit(dim, i)).collect();
        ConeSpec::from_generators(dim, gens)
    }

    /// Halfspace cone `{ y : ⟨normal, y⟩ ≤ 0 }`.
    pub fn halfspace(normal: Vector) -> Result<Self> {
        let dim = normal.dim();
        let n = normal
            .normalize()
            .ok_or_else(|| Error::InvalidBody("halfspace normal must be nonzero".into()))?;
        let mut gens = vec![n.scale(-1.0)];
        for t in orthonormal_complement(&[n], dim) {
            gens.push(t.clone());
            gens.push(t.scale(-1.0));
        }
        ConeSpec::from_generators(dim, gens)
    }

    fn validate_mutual(&self) -> Result<()> {
        let scale_tol = 1e-7;
        for g in &self.generators {
            for h in &self.halfspaces {
                if h.normal.dot(g) > scale_tol * (1.0 + g.norm()) {
                    return Err(Error::InvalidBody(
                        "cone generator violates derived halfspace".into(),
                    ));
                }
            }
        }
        // Extreme rays recovered from the halfspace representation must in
        // turn lie in the generated cone.
        let normals: Vec<Vector> = self.halfspaces.iter().map(|h| h.normal.clone()).collect();
        for ray in extreme_rays_of_hcone(&normals, self.dim) {
            if project_cone(&ray, &self.generators).1 > scale_tol {
                return Err(Error::InvalidBody(
                    "halfspace representation admits a ray outside the generated cone".into(),
                ));
            }
        }
        Ok(())
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn generators(&self) -> &[Vector] {
        &self.generators
    }

    #[inline]
    pub fn halfspaces(&self) -> &[Halfspace] {
        &self.halfspaces
    }

    #[inline]
    pub fn is_pointed(&self) -> bool {
        self.pointed
    }

    #[inline]
    pub fn has_interior(&self) -> bool {
        self.has_interior
    }

    pub fn is_trivial(&self) -> bool {
        self.generators.is_empty()
    }

    pub fn is_whole_space(&self) -> bool {
        self.halfspaces.is_empty()
    }

    pub fn project(&self, x: &Vector) -> Vector {
        project_cone(x, &self.generators).0
    }

    pub fn dist(&self, x: &Vector) -> f64 {
        project_cone(x, &self.generators).1
    }

    pub fn contains(&self, x: &Vector, tol: f64) -> bool {
        self.dist(x) <= tol
    }

    /// Direction containment, tolerance relative to `|d|`.
    pub fn contains_direction(&self, d: &Vector) -> bool {
        let n = d.norm();
        if n <= 1e-14 {
            return true;
        }
        self.dist(d) <= TOL * (1.0 + n)
    }

    /// `max { ⟨v, g⟩ : g in the polar cone, |g| = 1 }`, or `-∞` when the
    /// polar cone is trivial (i.e. the cone is the whole space).
    ///
    /// For `v` outside the cone this equals `dist(v, C)`; inside it is the
    /// (negative) support margin of `v` against the polar directions. It is
    /// the exact value of `sup_{|u| ≤ r} dist(v + u, C) − r` whenever that
    /// supremum is positive.
    pub fn polar_unit_max(&self, v: &Vector) -> f64 {
        let polar: Vec<Vector> = self.halfspaces.iter().map(|h| h.normal.clone()).collect();
        if polar.is_empty() {
            return f64::NEG_INFINITY;
        }
        let mut best = f64::NEG_INFINITY;
        for a in &polar {
            if let Some(u) = a.normalize() {
                best = best.max(v.dot(&u));
            }
        }
        // Stationary candidates: the maximizer over a face is parallel to the
        // projection of v onto the face's span (either orientation).
        for idx in iter_subsets(polar.len(), 2, self.dim.min(polar.len())) {
            let sub: Vec<Vector> = idx.iter().map(|&i| polar[i].clone()).collect();
            let basis = orthonormal_span(&sub, self.dim);
            let mut proj = Vector::zeros(self.dim);
            for b in &basis {
                proj = proj.axpy(v.dot(b), b);
            }
            if let Some(u) = proj.normalize() {
                for cand in [u.clone(), u.scale(-1.0)] {
                    if project_cone(&cand, &polar).1 <= 1e-9 {
                        best = best.max(v.dot(&cand));
                    }
                }
            }
        }
        best
    }

    /// Membership of `g` in the polar cone, i.e. whether the support
    /// function of the cone vanishes in direction `g`.
    pub fn polar_contains(&self, g: &Vector) -> bool {
        let n = g.norm();
        if n <= 1e-14 {
            return true;
        }
        let polar: Vec<Vector> = self.halfspaces.iter().map(|h| h.normal.clone()).collect();
        if polar.is_empty() {
            return false;
        }
        project_cone(g, &polar).1 <= TOL * (1.0 + n)
    }

    pub fn as_body(&self) -> ConvexBody {
        ConvexBody::PolyhedralCone(self.clone())
    }
}

fn cone_is_pointed(gens: &[Vector], dim: usize) -> bool {
    // cone{g} contains a line iff 0 is a convex combination of the
    // normalized generators.
    if gens.is_empty() {
        return true;
    }
    let normalized: Vec<Vector> = gens.iter().filter_map(|g| g.normalize()).collect();
    let origin = Vector::zeros(dim);
    let (_, d) = project_polytope(&origin, &normalized);
    d > 1e-9
}

/// Extreme-ray generators of `{ d : ⟨n, d⟩ ≤ 0 for all n }`, including a
/// `±basis` of the lineality space. The returned set generates the cone.
fn extreme_rays_of_hcone(normals: &[Vector], dim: usize) -> Vec<Vector> {
    let mut rays: Vec<Vector> = Vec::new();
    let mut push_unique = |v: Vector| {
        if rays
            .iter()
            .all(|r| r.dot(&v) < 1.0 - 1e-9 || r.sub(&v).norm() > 1e-9)
        {
            rays.push(v);
        }
    };

    if normals.is_empty() {
        for axis in 0..dim {
            push_unique(Vector::unit(dim, axis));
            push_unique(Vector::unit(dim, axis).scale(-1.0));
        }
        return rays;
    }

    // Lineality space: orthogonal complement of span{normals}.
    let span = orthonormal_span(normals, dim);
    for b in orthonormal_complement(&span, dim) {
        push_unique(b.clone());
        push_unique(b.scale(-1.0));
    }

    // Extreme rays of the pointed part have active normals spanning a
    // (dim-1)-dimensional space.
    if span.len() == dim {
        // no lineality beyond what subsets give; fall through
    }
    let min_size = if dim == 1 { 0 } else { 1 };
    for idx in iter_subsets(normals.len(), min_size, normals.len()) {
        let sub: Vec<Vector> = idx.iter().map(|&i| normals[i].clone()).collect();
        let sub_span = orthonormal_span(&sub, dim);
        if sub_span.len() != dim - 1 {
            continue;
        }
        let comp = orthonormal_complement(&sub_span, dim);
        if comp.len() != 1 {
            continue;
        }
        for cand in [comp[0].clone(), comp[0].scale(-1.0)] {
            if normals.iter().all(|n| n.dot(&cand) <= 1e-9) {
                push_unique(cand);
            }
        }
    }
    rays
}

// ---------------------------------------------------------------------------
// Bodies
// ---------------------------------------------------------------------------

/// A nonempty closed convex subset of `R^m`.
///
/// `Interval` endpoints may be `±∞`; every other unbounded variant carries
/// its recession directions explicitly (cone generators), which is what the
/// excess computation keys on.
#[derive(Clone, Debug)]
pub enum ConvexBody {
    /// Convex hull of finitely many points.
    Polytope(Vec<Vector>),
    /// Intersection of finitely many halfspaces (must be nonempty).
    HPolyhedron(Vec<Halfspace>),
    /// 1-D closed interval, endpoints possibly infinite.
    Interval { lo: f64, hi: f64 },
    /// Finitely generated cone with apex at the origin.
    PolyhedralCone(ConeSpec),
    /// `apex + cone`.
    ShiftedCone { apex: Vector, cone: ConeSpec },
    /// Closed `radius`-neighborhood `{ x : dist(x, base) ≤ radius }`.
    Enlargement {
        base: Box<ConvexBody>,
        radius: f64,
    },
}

impl ConvexBody {
    pub fn polytope(vertices: Vec<Vector>) -> Result<Self> {
        if vertices.is_empty() {
            return Err(Error::InvalidBody("polytope needs at least one vertex".into()));
        }
        if vertices.len() > 16 {
            return Err(Error::InvalidBody(
                "too many polytope vertices for exhaustive face enumeration".into(),
            ));
        }
        let dim = vertices[0].dim();
        for v in &vertices {
            if v.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: v.dim(),
                });
            }
        }
        Ok(ConvexBody::Polytope(vertices))
    }

    pub fn point(v: Vector) -> Self {
        ConvexBody::Polytope(vec![v])
    }

    pub fn interval(lo: f64, hi: f64) -> Result<Self> {
        if lo.is_nan() || hi.is_nan() {
            return Err(Error::InvalidBody("interval endpoint is NaN".into()));
        }
        if lo > hi {
            return Err(Error::InvalidBody(format!("empty interval [{lo}, {hi}]")));
        }
        if lo == f64::INFINITY || hi == f64::NEG_INFINITY {
            return Err(Error::InvalidBody("interval endpoints out of order".into()));
        }
        Ok(ConvexBody::Interval { lo, hi })
    }

    pub fn hpolyhedron(halfspaces: Vec<Halfspace>) -> Result<Self> {
        if halfspaces.is_empty() {
            return Err(Error::InvalidBody(
                "halfspace intersection needs at least one halfspace".into(),
            ));
        }
        let dim = halfspaces[0].normal.dim();
        for h in &halfspaces {
            if h.normal.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: h.normal.dim(),
                });
            }
        }
        if halfspaces.len() > 12 {
            return Err(Error::InvalidBody(
                "too many halfspaces for exhaustive face enumeration".into(),
            ));
        }
        let body = ConvexBody::HPolyhedron(halfspaces);
        // Nonemptiness check: the projection of the origin must exist.
        let probe = Vector::zeros(dim);
        if dist_point_set(&probe, &body).is_err() {
            return Err(Error::InvalidBody("empty halfspace intersection".into()));
        }
        Ok(body)
    }

    pub fn shifted_cone(apex: Vector, cone: ConeSpec) -> Result<Self> {
        if apex.dim() != cone.dim() {
            return Err(Error::DimensionMismatch {
                expected: cone.dim(),
                got: apex.dim(),
            });
        }
        Ok(ConvexBody::ShiftedCone { apex, cone })
    }

    pub fn enlargement(base: ConvexBody, radius: f64) -> Result<Self> {
        if !(radius >= 0.0) || !radius.is_finite() {
            return Err(Error::InvalidArgument(
                "enlargement radius must be finite and nonnegative".into(),
            ));
        }
        Ok(ConvexBody::Enlargement {
            base: Box::new(base),
            radius,
        })
    }

    pub fn dim(&self) -> usize {
        match self {
            ConvexBody::Polytope(vs) => vs[0].dim(),
            ConvexBody::HPolyhedron(hs) => hs[0].normal.dim(),
            ConvexBody::Interval { .. } => 1,
            ConvexBody::PolyhedralCone(c) => c.dim(),
            ConvexBody::ShiftedCone { apex, .. } => apex.dim(),
            ConvexBody::Enlargement { base, .. } => base.dim(),
        }
    }

    pub fn is_bounded(&self) -> bool {
        match self {
            ConvexBody::Polytope(_) => true,
            ConvexBody::Interval { lo, hi } => lo.is_finite() && hi.is_finite(),
            ConvexBody::PolyhedralCone(c) => c.is_trivial(),
            ConvexBody::ShiftedCone { cone, .. } => cone.is_trivial(),
            ConvexBody::Enlargement { base, .. } => base.is_bounded(),
            ConvexBody::HPolyhedron(hs) => {
                let normals: Vec<Vector> = hs.iter().map(|h| h.normal.clone()).collect();
                extreme_rays_of_hcone(&normals, self.dim()).is_empty()
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Exact projections by face enumeration
// ---------------------------------------------------------------------------

/// Projection onto `conv(vertices)` and its distance. Exact: enumerates
/// candidate faces, clamps barycentric weights into the feasible simplex, and
/// keeps the closest candidate (all candidates lie in the polytope, and the
/// face carrying the true projection is always enumerated).
fn project_polytope(x: &Vector, vertices: &[Vector]) -> (Vector, f64) {
    let dim = x.dim();
    let k = vertices.len();
    let mut best: Option<(Vector, f64)> = None;
    let mut consider = |p: Vector| {
        let d = x.dist(&p);
        if best.as_ref().map_or(true, |(_, bd)| d < *bd) {
            best = Some((p, d));
        }
    };

    for v in vertices {
        consider(v.clone());
    }
    for idx in iter_subsets(k, 2, (dim + 1).min(k)) {
        let sub: Vec<&Vector> = idx.iter().map(|&i| &vertices[i]).collect();
        let n = sub.len();
        // Bordered Gram system for the affine projection: minimize
        // |x - Σ λ_i v_i| subject to Σ λ_i = 1.
        let mut a = DMatrix::<f64>::zeros(n + 1, n + 1);
        let mut b = DVector::<f64>::zeros(n + 1);
        for i in 0..n {
            for j in 0..n {
                a[(i, j)] = sub[i].dot(sub[j]);
            }
            a[(i, n)] = 1.0;
            a[(n, i)] = 1.0;
            b[i] = sub[i].dot(x);
        }
        b[n] = 1.0;
        let Some(sol) = solve_square(a, b) else { continue };
        let lambda: Vec<f64> = (0..n).map(|i| sol[i]).collect();
        if lambda.iter().any(|&l| l < -1e-7) {
            continue;
        }
        // Clamp float noise so the candidate is a genuine convex combination.
        let mut lam: Vec<f64> = lambda.iter().map(|&l| l.max(0.0)).collect();
        let s: f64 = lam.iter().sum();
        if s <= 0.0 {
            continue;
        }
        for l in &mut lam {
            *l /= s;
        }
        let mut p = Vector::zeros(dim);
        for (l, v) in lam.iter().zip(&sub) {
            p = p.axpy(*l, v);
        }
        consider(p);
    }
    best.expect("vertex candidates are always present")
}

/// Projection onto `cone(generators)` and its distance. Exact by the same
/// argument as `project_polytope`; the empty generator list is the cone `{0}`.
fn project_cone(x: &Vector, generators: &[Vector]) -> (Vector, f64) {
    let dim = x.dim();
    let origin = Vector::zeros(dim);
    let mut best: (Vector, f64) = (origin.clone(), x.norm());
    let k = generators.len();
    for idx in iter_subsets(k, 1, dim.min(k)) {
        let sub: Vec<&Vector> = idx.iter().map(|&i| &generators[i]).collect();
        let n = sub.len();
        let mut a = DMatrix::<f64>::zeros(n, n);
        let mut b = DVector::<f64>::zeros(n);
        for i in 0..n {
            for j in 0..n {
                a[(i, j)] = sub[i].dot(sub[j]);
            }
            b[i] = sub[i].dot(x);
        }
        let Some(sol) = solve_square(a, b) else { continue };
        let coeffs: Vec<f64> = (0..n).map(|i| sol[i]).collect();
        if coeffs.iter().any(|&t| t < -1e-7 * (1.0 + x.norm())) {
            continue;
        }
        let mut p = Vector::zeros(dim);
        for (t, g) in coeffs.iter().zip(&sub) {
            p = p.axpy(t.max(0.0), g);
        }
        let d = x.dist(&p);
        if d < best.1 {
            best = (p, d);
        }
    }
    best
}

/// Projection onto a nonempty halfspace intersection. Returns `None` when no
/// feasible candidate is found (empty set, at desk tolerances).
fn project_hpoly(x: &Vector, halfspaces: &[Halfspace]) -> Option<(Vector, f64)> {
    let dim = x.dim();
    let k = halfspaces.len();
    let scale = 1.0 + x.norm() + halfspaces.iter().map(|h| h.offset.abs()).fold(0.0, f64::max);
    let feasible = |p: &Vector| halfspaces.iter().all(|h| h.holds(p, 1e-9 * scale));
    let mut best: Option<(Vector, f64)> = None;
    let mut consider = |p: Vector, d: f64| {
        if best.as_ref().map_or(true, |(_, bd)| d < *bd) {
            best = Some((p, d));
        }
    };
    if feasible(x) {
        return Some((x.clone(), 0.0));
    }
    for idx in iter_subsets(k, 1, dim.min(k)) {
        let sub: Vec<&Halfspace> = idx.iter().map(|&i| &halfspaces[i]).collect();
        let n = sub.len();
        // Active-set step: p = x − Σ λ_j n_j with ⟨n_j, p⟩ = c_j, λ ≥ 0.
        let mut a = DMatrix::<f64>::zeros(n, n);
        let mut b = DVector::<f64>::zeros(n);
        for i in 0..n {
            for j in 0..n {
                a[(i, j)] = sub[i].normal.dot(&sub[j].normal);
            }
            b[i] = sub[i].normal.dot(x) - sub[i].offset;
        }
        let Some(sol) = solve_square(a, b) else { continue };
        if (0..n).any(|i| sol[i] < -1e-9 * scale) {
            continue;
        }
        let mut p = x.clone();
        for (i, h) in sub.iter().enumerate() {
            p = p.axpy(-sol[i], &h.normal);
        }
        if feasible(&p) {
            let d = x.dist(&p);
            consider(p, d);
        }
    }
    best
}

/// Vertices (or, in the presence of lineality, minimal-face representatives)
/// of a halfspace intersection.
fn hpoly_representatives(halfspaces: &[Halfspace], dim: usize) -> Vec<Vector> {
    let normals: Vec<Vector> = halfspaces.iter().map(|h| h.normal.clone()).collect();
    let total_rank = rank_of(&normals, dim);
    let scale = 1.0 + halfspaces.iter().map(|h| h.offset.abs()).fold(0.0, f64::max);
    let mut reps: Vec<Vector> = Vec::new();
    let mut push_unique = |v: Vector| {
        if reps.iter().all(|r| r.dist(&v) > 1e-8 * scale) {
            reps.push(v);
        }
    };
    for idx in iter_subsets(halfspaces.len(), total_rank.min(dim), dim.min(halfspaces.len())) {
        let sub: Vec<&Halfspace> = idx.iter().map(|&i| &halfspaces[i]).collect();
        let sub_normals: Vec<Vector> = sub.iter().map(|h| h.normal.clone()).collect();
        if rank_of(&sub_normals, dim) != total_rank {
            continue;
        }
        // Least-norm solution of the active equalities via the pseudoinverse.
        let n = sub.len();
        let mut a = DMatrix::<f64>::zeros(n, dim);
        let mut b = DVector::<f64>::zeros(n);
        for (i, h) in sub.iter().enumerate() {
            for j in 0..dim {
                a[(i, j)] = h.normal.at(j);
            }
            b[i] = h.offset;
        }
        let svd = a.svd(true, true);
        let Ok(sol) = svd.solve(&b, 1e-10) else { continue };
        let p = Vector {
            coords: sol.iter().copied().collect(),
        };
        if halfspaces.iter().all(|h| h.holds(&p, 1e-8 * scale)) {
            push_unique(p);
        }
    }
    reps
}

// ---------------------------------------------------------------------------
// Distance, support, recession
// ---------------------------------------------------------------------------

/// Euclidean distance from a point to a body. Exact for every variant.
pub fn dist_point_set(x: &Vector, s: &ConvexBody) -> Result<f64> {
    if x.dim() != s.dim() {
        return Err(Error::DimensionMismatch {
            expected: s.dim(),
            got: x.dim(),
        });
    }
    match s {
        ConvexBody::Polytope(vs) => Ok(project_polytope(x, vs).1),
        ConvexBody::HPolyhedron(hs) => project_hpoly(x, hs)
            .map(|(_, d)| d)
            .ok_or_else(|| Error::InvalidBody("empty halfspace intersection".into())),
        ConvexBody::Interval { lo, hi } => {
            let t = x.at(0);
            Ok((lo - t).max(t - hi).max(0.0))
        }
        ConvexBody::PolyhedralCone(c) => Ok(c.dist(x)),
        ConvexBody::ShiftedCone { apex, cone } => Ok(cone.dist(&x.sub(apex))),
        ConvexBody::Enlargement { base, radius } => {
            Ok((dist_point_set(x, base)? - radius).max(0.0))
        }
    }
}

/// Support function `sup_{y ∈ s} ⟨g, y⟩`; `+∞` when unbounded in direction `g`.
pub fn support(s: &ConvexBody, g: &Vector) -> Result<f64> {
    if g.dim() != s.dim() {
        return Err(Error::DimensionMismatch {
            expected: s.dim(),
            got: g.dim(),
        });
    }
    match s {
        ConvexBody::Polytope(vs) => Ok(vs
            .iter()
            .map(|v| g.dot(v))
            .fold(f64::NEG_INFINITY, f64::max)),
        ConvexBody::Interval { lo, hi } => {
            let gg = g.at(0);
            let sup = if gg >= 0.0 { gg * hi } else { gg * lo };
            Ok(if sup.is_nan() { 0.0 } else { sup })
        }
        ConvexBody::PolyhedralCone(c) => {
            let bounded = c.generators().iter().all(|d| g.dot(d) <= TOL * (1.0 + d.norm()));
            Ok(if bounded { 0.0 } else { f64::INFINITY })
        }
        ConvexBody::ShiftedCone { apex, cone } => {
            let bounded = cone
                .generators()
                .iter()
                .all(|d| g.dot(d) <= TOL * (1.0 + d.norm()));
            Ok(if bounded { g.dot(apex) } else { f64::INFINITY })
        }
        ConvexBody::Enlargement { base, radius } => {
            Ok(support(base, g)? + radius * g.norm())
        }
        ConvexBody::HPolyhedron(hs) => {
            let dim = s.dim();
            let normals: Vec<Vector> = hs.iter().map(|h| h.normal.clone()).collect();
            for d in extreme_rays_of_hcone(&normals, dim) {
                if g.dot(&d) > TOL {
                    return Ok(f64::INFINITY);
                }
            }
            let reps = hpoly_representatives(hs, dim);
            if reps.is_empty() {
                return Err(Error::Unsupported(
                    "support over halfspace intersection without face representatives".into(),
                ));
            }
            Ok(reps.iter().map(|v| g.dot(v)).fold(f64::NEG_INFINITY, f64::max))
        }
    }
}

/// Generators of the recession cone (lineality contributes `±` pairs).
pub fn recession_dirs(s: &ConvexBody) -> Vec<Vector> {
    match s {
        ConvexBody::Polytope(_) => Vec::new(),
        ConvexBody::Interval { lo, hi } => {
            let mut dirs = Vec::new();
            if *lo == f64::NEG_INFINITY {
                dirs.push(Vector::scalar(-1.0));
            }
            if *hi == f64::INFINITY {
                dirs.push(Vector::scalar(1.0));
            }
            dirs
        }
        ConvexBody::PolyhedralCone(c) => c.generators().to_vec(),
        ConvexBody::ShiftedCone { cone, .. } => cone.generators().to_vec(),
        ConvexBody::Enlargement { base, .. } => recession_dirs(base),
        ConvexBody::HPolyhedron(hs) => {
            let normals: Vec<Vector> = hs.iter().map(|h| h.normal.clone()).collect();
            extreme_rays_of_hcone(&normals, hs[0].normal.dim())
        }
    }
}

/// Is `d` a recession direction of `s`?
pub fn recession_contains(s: &ConvexBody, d: &Vector) -> Result<bool> {
    let n = d.norm();
    if n <= 1e-14 {
        return Ok(true);
    }
    Ok(match s {
        ConvexBody::Polytope(_) => false,
        ConvexBody::Interval { lo, hi } => {
            if d.at(0) < 0.0 {
                *lo == f64::NEG_INFINITY
            } else {
                *hi == f64::INFINITY
            }
        }
        ConvexBody::PolyhedralCone(c) => c.contains_direction(d),
        ConvexBody::ShiftedCone { cone, .. } => cone.contains_direction(d),
        ConvexBody::Enlargement { base, .. } => recession_contains(base, d)?,
        ConvexBody::HPolyhedron(hs) => hs.iter().all(|h| h.normal.dot(d) <= TOL * (1.0 + n)),
    })
}

// ---------------------------------------------------------------------------
// Excess and Hausdorff
// ---------------------------------------------------------------------------

/// Excess value together with a flag for the (rare) sampled fallback path.
#[derive(Clone, Copy, Debug)]
pub struct ExcessReport {
    pub value: f64,
    pub truncated: bool,
}

/// `e(A, B) = sup_{a ∈ A} dist(a, B)`; `+∞` when a recession direction of
/// `A` leaves the recession cone of `B`.
pub fn excess(a: &ConvexBody, b: &ConvexBody) -> Result<f64> {
    excess_report(a, b).map(|r| r.value)
}

pub fn excess_report(a: &ConvexBody, b: &ConvexBody) -> Result<ExcessReport> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: b.dim(),
            got: a.dim(),
        });
    }
    // Any recession direction of A outside the recession cone of B drives the
    // supremum to +∞ (dist to B grows linearly along it).
    for d in recession_dirs(a) {
        if !recession_contains(b, &d)? {
            return Ok(ExcessReport {
                value: f64::INFINITY,
                truncated: false,
            });
        }
    }
    let finite = |value: f64| ExcessReport {
        value,
        truncated: false,
    };
    // With recession contained in B, dist(·, B) does not increase along those
    // directions, so the supremum is attained on the bounded generating part.
    match a {
        ConvexBody::Polytope(vs) => {
            let mut m: f64 = 0.0;
            for v in vs {
                m = m.max(dist_point_set(v, b)?);
            }
            Ok(finite(m))
        }
        ConvexBody::Interval { lo, hi } => {
            let mut m: f64 = 0.0;
            let mut has_endpoint = false;
            for e in [lo, hi] {
                if e.is_finite() {
                    has_endpoint = true;
                    m = m.max(dist_point_set(&Vector::scalar(*e), b)?);
                }
            }
            // No finite endpoint means A = R, already recession-contained.
            Ok(finite(if has_endpoint { m } else { 0.0 }))
        }
        ConvexBody::PolyhedralCone(c) => {
            Ok(finite(dist_point_set(&Vector::zeros(c.dim()), b)?))
        }
        ConvexBody::ShiftedCone { apex, .. } => Ok(finite(dist_point_set(apex, b)?)),
        ConvexBody::HPolyhedron(hs) => {
            let reps = hpoly_representatives(hs, a.dim());
            if reps.is_empty() {
                return truncated_excess(a, b);
            }
            let mut m: f64 = 0.0;
            for v in &reps {
                m = m.max(dist_point_set(v, b)?);
            }
            Ok(finite(m))
        }
        ConvexBody::Enlargement { base, radius } => {
            // Flatten nested enlargements: B(B(S, r1), r2) = B(S, r1 + r2).
            let mut total = *radius;
            let mut inner: &ConvexBody = base;
            while let ConvexBody::Enlargement { base, radius } = inner {
                total += *radius;
                inner = base;
            }
            let reps: Vec<Vector> = match inner {
                ConvexBody::Polytope(vs) => vs.clone(),
                ConvexBody::Interval { lo, hi } => {
                    let pts: Vec<Vector> = [*lo, *hi]
                        .into_iter()
                        .filter(|e| e.is_finite())
                        .map(Vector::scalar)
                        .collect();
                    if pts.is_empty() {
                        // Base is the whole line and B must contain it.
                        return Ok(finite(0.0));
                    }
                    pts
                }
                ConvexBody::PolyhedralCone(c) => vec![Vector::zeros(c.dim())],
                ConvexBody::ShiftedCone { apex, .. } => vec![apex.clone()],
                ConvexBody::HPolyhedron(hs) => {
                    let reps = hpoly_representatives(hs, a.dim());
                    if reps.is_empty() {
                        return truncated_excess(a, b);
                    }
                    reps
                }
                ConvexBody::Enlargement { .. } => unreachable!("flattened above"),
            };
            let mut m: f64 = 0.0;
            let mut trunc = false;
            for v in &reps {
                let r = ball_sup_dist_report(v, total, b)?;
                m = m.max(r.value);
                trunc |= r.truncated;
            }
            Ok(ExcessReport {
                value: m,
                truncated: trunc,
            })
        }
    }
}

/// Sampled fallback for bodies whose face structure we could not enumerate:
/// supremum of `dist(·, B)` over feasible lattice points in a bounded window.
fn truncated_excess(a: &ConvexBody, b: &ConvexBody) -> Result<ExcessReport> {
    let dim = a.dim();
    let within = |x: &Vector| -> Result<bool> { Ok(dist_point_set(x, a)? <= 1e-9) };
    let w = 16.0;
    let n = 9usize;
    let mut sup: f64 = 0.0;
    let mut idx = vec![0usize; dim];
    loop {
        let x = Vector {
            coords: idx
                .iter()
                .map(|&i| -w + 2.0 * w * (i as f64) / ((n - 1) as f64))
                .collect(),
        };
        if within(&x)? {
            sup = sup.max(dist_point_set(&x, b)?);
        }
        let mut carry = true;
        for d in idx.iter_mut() {
            *d += 1;
            if *d < n {
                carry = false;
                break;
            }
            *d = 0;
        }
        if carry {
            break;
        }
    }
    Ok(ExcessReport {
        value: sup,
        truncated: true,
    })
}

/// Hausdorff distance `max(e(A,B), e(B,A))`; `+∞` propagates.
pub fn hausdorff(a: &ConvexBody, b: &ConvexBody) -> Result<f64> {
    Ok(excess(a, b)?.max(excess(b, a)?))
}

/// `sup_{|u| ≤ r} dist(v + u, B)`.
///
/// Exact when `dist(v, B) > 0` (push along the projection ray) and when `B`
/// is cone-like or an interval. For `v` inside a bounded polytope the value
/// is approximated by multistart ascent and flagged as such.
pub fn ball_sup_dist(v: &Vector, r: f64, b: &ConvexBody) -> Result<f64> {
    ball_sup_dist_report(v, r, b).map(|r| r.value)
}

fn ball_sup_dist_report(v: &Vector, r: f64, b: &ConvexBody) -> Result<ExcessReport> {
    if r < 0.0 {
        return Err(Error::InvalidArgument("ball radius must be nonnegative".into()));
    }
    let d = dist_point_set(v, b)?;
    let exact = |value: f64| ExcessReport {
        value,
        truncated: false,
    };
    if d > 1e-12 {
        // For convex B the projection ray stays optimal: the supremum is
        // dist(v, B) + r exactly.
        return Ok(exact(d + r));
    }
    match b {
        ConvexBody::Interval { .. } => {
            let lo = dist_point_set(&Vector::scalar(v.at(0) - r), b)?;
            let hi = dist_point_set(&Vector::scalar(v.at(0) + r), b)?;
            Ok(exact(lo.max(hi)))
        }
        ConvexBody::PolyhedralCone(c) => Ok(exact((c.polar_unit_max(v) + r).max(0.0))),
        ConvexBody::ShiftedCone { apex, cone } => {
            Ok(exact((cone.polar_unit_max(&v.sub(apex)) + r).max(0.0)))
        }
        _ => {
            // Multistart ascent of the convex function dist(v + u, B) over
            // the ball |u| ≤ r: each step moves to the ball point maximizing
            // the linearization, which cannot decrease the value.
            let dim = v.dim();
            let mut best: f64 = 0.0;
            for d0 in direction_set(dim, 16) {
                let mut u = d0.scale(r);
                let mut val = dist_point_set(&v.add(&u), b)?;
                for _ in 0..60 {
                    let x = v.add(&u);
                    let dx = dist_point_set(&x, b)?;
                    if dx <= 1e-13 {
                        break;
                    }
                    let p = project_point(&x, b)?;
                    let Some(g) = x.sub(&p).normalize() else { break };
                    let nu = g.scale(r);
                    let nval = dist_point_set(&v.add(&nu), b)?;
                    if nval <= val + 1e-14 {
                        val = nval.max(val);
                        break;
                    }
                    u = nu;
                    val = nval;
                }
                best = best.max(val);
            }
            Ok(ExcessReport {
                value: best,
                truncated: true,
            })
        }
    }
}

/// Projection of `x` onto `s` (closest point).
pub fn project_point(x: &Vector, s: &ConvexBody) -> Result<Vector> {
    if x.dim() != s.dim() {
        return Err(Error::DimensionMismatch {
            expected: s.dim(),
            got: x.dim(),
        });
    }
    match s {
        ConvexBody::Polytope(vs) => Ok(project_polytope(x, vs).0),
        ConvexBody::HPolyhedron(hs) => project_hpoly(x, hs)
            .map(|(p, _)| p)
            .ok_or_else(|| Error::InvalidBody("empty halfspace intersection".into())),
        ConvexBody::Interval { lo, hi } => Ok(Vector::scalar(x.at(0).clamp(*lo, *hi))),
        ConvexBody::PolyhedralCone(c) => Ok(c.project(x)),
        ConvexBody::ShiftedCone { apex, cone } => Ok(cone.project(&x.sub(apex)).add(apex)),
        ConvexBody::Enlargement { base, radius } => {
            let p = project_point(x, base)?;
            let d = x.dist(&p);
            if d <= *radius {
                Ok(x.clone())
            } else {
                // Walk from the base projection toward x, stopping at radius.
                Ok(p.axpy(*radius / d, &x.sub(&p)))
            }
        }
    }
}

/// Membership in the closed enlargement `B(s, r)` within tolerance `tol`.
pub fn enlargement_contains(s: &ConvexBody, r: f64, x: &Vector, tol: f64) -> Result<bool> {
    if !(r >= 0.0) {
        return Err(Error::InvalidArgument(
            "enlargement radius must be nonnegative".into(),
        ));
    }
    Ok(dist_point_set(x, s)? <= r + tol)
}

// ---------------------------------------------------------------------------
// Minkowski constructions and the excess identities
// ---------------------------------------------------------------------------

/// `conv(vertices) + cone`, materialized as one shifted cone per vertex. The
/// union is not convex, but the excess of the sum beyond any convex target
/// equals the maximum of the per-part excesses (the distance function is
/// convex, so its supremum over the hull of the union is attained on the
/// parts).
pub fn minkowski_polytope_cone(
    vertices: &[Vector],
    cone: &ConeSpec,
) -> Result<Vec<ConvexBody>> {
    if vertices.is_empty() {
        return Err(Error::InvalidArgument("empty vertex list".into()));
    }
    vertices
        .iter()
        .map(|v| ConvexBody::shifted_cone(v.clone(), cone.clone()))
        .collect()
}

/// Vertex representation of `conv(A) + conv(B)` (pairwise sums; redundant
/// vertices are harmless for distance queries).
pub fn minkowski_polytope_polytope(a: &[Vector], b: &[Vector]) -> Result<ConvexBody> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InvalidArgument("empty vertex list".into()));
    }
    let mut sums = Vec::with_capacity(a.len() * b.len());
    for va in a {
        for vb in b {
            sums.push(va.add(vb));
        }
    }
    ConvexBody::polytope(sums)
}

/// Excess of a finite union of bodies beyond `b`.
pub fn excess_union(parts: &[ConvexBody], b: &ConvexBody) -> Result<f64> {
    let mut m: f64 = 0.0;
    for p in parts {
        m = m.max(excess(p, b)?);
    }
    Ok(m)
}

/// Both sides of the two shift/enlargement identities for the excess beyond a
/// cone, each side computed through its own code path:
/// `e(S + C, C) = e(S, C)` and, when `e(S, C) > 0`,
/// `e(B(S, r), C) = e(S, C) + r`.
#[derive(Clone, Debug)]
pub struct ExcessIdentities {
    pub base_excess: f64,
    /// `(lhs, rhs)` for `e(S + C, C)` vs `e(S, C)`.
    pub sum: Option<(f64, f64)>,
    /// `(lhs, rhs)` for `e(B(S, r), C)` vs `e(S, C) + r`.
    pub enlargement: Option<(f64, f64)>,
    pub skipped: Option<String>,
}

pub fn excess_identities(s: &ConvexBody, c: &ConeSpec, r: f64) -> Result<ExcessIdentities> {
    if r < 0.0 {
        return Err(Error::InvalidArgument("radius must be nonnegative".into()));
    }
    let c_body = c.as_body();
    let base = excess(s, &c_body)?;
    if !base.is_finite() {
        return Ok(ExcessIdentities {
            base_excess: base,
            sum: None,
            enlargement: None,
            skipped: Some("excess is infinite; identities not evaluated".into()),
        });
    }
    let vertices: Vec<Vector> = match s {
        ConvexBody::Polytope(vs) => vs.clone(),
        ConvexBody::Interval { lo, hi } if lo.is_finite() && hi.is_finite() => {
            vec![Vector::scalar(*lo), Vector::scalar(*hi)]
        }
        _ => {
            return Ok(ExcessIdentities {
                base_excess: base,
                sum: None,
                enlargement: None,
                skipped: Some("identities require a bounded polytope/interval".into()),
            })
        }
    };
    let sum_parts = minkowski_polytope_cone(&vertices, c)?;
    let sum_lhs = excess_union(&sum_parts, &c_body)?;
    let enlargement = if base > 0.0 && r > 0.0 {
        let enlarged = ConvexBody::enlargement(ConvexBody::polytope(vertices)?, r)?;
        Some((excess(&enlarged, &c_body)?, base + r))
    } else {
        None
    };
    Ok(ExcessIdentities {
        base_excess: base,
        sum: Some((sum_lhs, base)),
        enlargement,
        skipped: if base > 0.0 {
            None
        } else {
            Some("enlargement identity requires e(S, C) > 0".into())
        },
    })
}

// ---------------------------------------------------------------------------
// Windows, lattices, direction sets
// ---------------------------------------------------------------------------

/// Axis-aligned box used as a sampling window.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct WindowBox {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl WindowBox {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.is_empty() || lo.len() != hi.len() || lo.len() > MAX_DIM {
            return Err(Error::InvalidArgument("window dimensions inconsistent".into()));
        }
        for (a, b) in lo.iter().zip(&hi) {
            if !(a.is_finite() && b.is_finite() && a < b) {
                return Err(Error::InvalidArgument(
                    "window bounds must be finite with lo < hi".into(),
                ));
            }
        }
        Ok(WindowBox { lo, hi })
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    pub fn contains(&self, x: &Vector, tol: f64) -> bool {
        x.dim() == self.dim()
            && x.coords()
                .iter()
                .zip(self.lo.iter().zip(&self.hi))
                .all(|(v, (a, b))| *v >= a - tol && *v <= b + tol)
    }

    pub fn center(&self) -> Vector {
        Vector {
            coords: self
                .lo
                .iter()
                .zip(&self.hi)
                .map(|(a, b)| 0.5 * (a + b))
                .collect(),
        }
    }

    pub fn min_half_width(&self) -> f64 {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(a, b)| 0.5 * (b - a))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn clamp(&self, x: &Vector) -> Vector {
        Vector {
            coords: x
                .coords()
                .iter()
                .zip(self.lo.iter().zip(&self.hi))
                .map(|(v, (a, b))| v.clamp(*a, *b))
                .collect(),
        }
    }

    /// Full lattice with `n` points per axis.
    pub fn lattice(&self, n: usize) -> Vec<Vector> {
        let n = n.max(2);
        let dim = self.dim();
        let mut points = Vec::with_capacity(n.pow(dim as u32));
        let mut idx = vec![0usize; dim];
        loop {
            points.push(Vector {
                coords: idx
                    .iter()
                    .enumerate()
                    .map(|(d, &i)| {
                        self.lo[d] + (self.hi[d] - self.lo[d]) * (i as f64) / ((n - 1) as f64)
                    })
                    .collect(),
            });
            let mut carry = true;
            for d in idx.iter_mut() {
                *d += 1;
                if *d < n {
                    carry = false;
                    break;
                }
                *d = 0;
            }
            if carry {
                break;
            }
        }
        points
    }

    /// Box of radius `r` around `center`, intersected with nothing (callers
    /// clip as needed).
    pub fn ball_box(center: &Vector, r: f64) -> Result<WindowBox> {
        WindowBox::new(
            center.coords().iter().map(|c| c - r).collect(),
            center.coords().iter().map(|c| c + r).collect(),
        )
    }
}

/// Deterministic set of roughly `n` unit directions. 1-D returns exactly
/// `{+1, -1}`; 2-D equally spaced angles (including the axes and diagonals
/// when `n` is a multiple of 8); 3-D a Fibonacci sphere; 4-D axes, pairwise
/// diagonals and a fixed low-discrepancy fill.
pub fn direction_set(dim: usize, n: usize) -> Vec<Vector> {
    match dim {
        1 => vec![Vector::scalar(1.0), Vector::scalar(-1.0)],
        2 => {
            let n = n.max(8);
            (0..n)
                .map(|k| {
                    let t = 2.0 * std::f64::consts::PI * (k as f64) / (n as f64);
                    Vector {
                        coords: vec![t.cos(), t.sin()],
                    }
                })
                .collect()
        }
        3 => {
            let n = n.max(16);
            let golden = std::f64::consts::PI * (3.0 - 5.0_f64.sqrt());
            let mut dirs: Vec<Vector> = (0..n)
                .map(|k| {
                    let z = 1.0 - 2.0 * (k as f64 + 0.5) / (n as f64);
                    let rad = (1.0 - z * z).sqrt();
                    let t = golden * k as f64;
                    Vector {
                        coords: vec![rad * t.cos(), rad * t.sin(), z],
                    }
                })
                .collect();
            for axis in 0..3 {
                dirs.push(Vector::unit(3, axis));
                dirs.push(Vector::unit(3, axis).scale(-1.0));
            }
            dirs
        }
        _ => {
            let mut dirs = Vec::new();
            for axis in 0..dim {
                dirs.push(Vector::unit(dim, axis));
                dirs.push(Vector::unit(dim, axis).scale(-1.0));
            }
            for i in 0..dim {
                for j in (i + 1)..dim {
                    for (si, sj) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
                        let mut c = vec![0.0; dim];
                        c[i] = si / 2.0_f64.sqrt();
                        c[j] = sj / 2.0_f64.sqrt();
                        dirs.push(Vector { coords: c });
                    }
                }
            }
            // Low-discrepancy fill: Halton-style points on the cube, radially
            // normalized. Deterministic by construction.
            let mut k = 1u32;
            while dirs.len() < n {
                let mut c = Vec::with_capacity(dim);
                for (axis, base) in [2u32, 3, 5, 7].iter().enumerate().take(dim) {
                    let mut f = 1.0;
                    let mut r = 0.0;
                    let mut i = k + axis as u32;
                    while i > 0 {
                        f /= *base as f64;
                        r += f * (i % base) as f64;
                        i /= base;
                    }
                    c.push(2.0 * r - 1.0);
                }
                if let Some(u) = (Vector { coords: c }).normalize() {
                    dirs.push(u);
                }
                k += 1;
            }
            dirs
        }
    }
}

/// Representative sample points of a body (best effort, used by calmness
/// estimators to probe `Φ(p) ∩ ball`). Vertices/endpoints/apexes are always
/// included; interiors are covered by a coarse mixture lattice.
pub fn sample_points(s: &ConvexBody, per_dim: usize) -> Result<Vec<Vector>> {
    let mut pts = Vec::new();
    match s {
        ConvexBody::Polytope(vs) => {
            pts.extend(vs.iter().cloned());
            let k = vs.len();
            for i in 0..k {
                for j in (i + 1)..k {
                    for t in 1..per_dim {
                        let t = t as f64 / per_dim as f64;
                        pts.push(vs[i].scale(1.0 - t).add(&vs[j].scale(t)));
                    }
                }
            }
            if k > 2 {
                let centroid = vs
                    .iter()
                    .fold(Vector::zeros(vs[0].dim()), |acc, v| acc.add(v))
                    .scale(1.0 / k as f64);
                pts.push(centroid);
            }
        }
        ConvexBody::Interval { lo, hi } => {
            let a = if lo.is_finite() { *lo } else { -1e6 };
            let b = if hi.is_finite() { *hi } else { 1e6 };
            let n = per_dim.max(2);
            for i in 0..=n {
                pts.push(Vector::scalar(a + (b - a) * i as f64 / n as f64));
            }
        }
        ConvexBody::PolyhedralCone(c) => {
            let apex = Vector::zeros(c.dim());
            pts.push(apex.clone());
            for g in c.generators() {
                for t in [0.5, 1.0, 2.0] {
                    pts.push(apex.axpy(t, g));
                }
            }
        }
        ConvexBody::ShiftedCone { apex, cone } => {
            pts.push(apex.clone());
            for g in cone.generators() {
                for t in [0.5, 1.0, 2.0] {
                    pts.push(apex.axpy(t, g));
                }
            }
        }
        ConvexBody::Enlargement { base, radius } => {
            let inner = sample_points(base, per_dim)?;
            let dim = s.dim();
            for p in &inner {
                pts.push(p.clone());
                for d in direction_set(dim, 8) {
                    pts.push(p.axpy(*radius, &d));
                }
            }
        }
        ConvexBody::HPolyhedron(hs) => {
            pts.extend(hpoly_representatives(hs, s.dim()));
        }
    }
    Ok(pts)
}
