//! Metric increase of set-valued maps against an ordering cone.
//!
//! A map `Φ` increases at rate `α > 1` against the cone `C` when every ball
//! `B(x, r)` contains a point `u` with `B(Φ(u), αr) ⊆ B(Φ(x) + C, r)`. The
//! checker below searches for such witnesses over a sampled window; for fans
//! (convex hulls of linear maps) a closed-form rate is derived from the
//! covering values of the vertex matrices and a common interiority direction.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::EstimatorConfig;
use crate::geometry::{direction_set, support, ConeSpec, ConvexBody, Vector, WindowBox};
use crate::{Error, Result};

/// Dense row-major matrix, sized for the low-dimensional desk instances.
#[derive(Clone, Debug, PartialEq)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 || rows > 4 || cols > 4 {
            return Err(Error::InvalidArgument(format!(
                "matrix shape {rows}x{cols} outside 1..=4 per side"
            )));
        }
        if data.len() != rows * cols {
            return Err(Error::InvalidArgument(format!(
                "matrix shape {rows}x{cols} needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("matrix entries must be finite".into()));
        }
        Ok(Mat { rows, cols, data })
    }

    pub fn identity(n: usize) -> Self {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = 1.0;
        }
        Mat { rows: n, cols: n, data }
    }

    pub fn diag(entries: &[f64]) -> Self {
        let n = entries.len();
        let mut data = vec![0.0; n * n];
        for (i, e) in entries.iter().enumerate() {
            data[i * n + i] = *e;
        }
        Mat { rows: n, cols: n, data }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn apply(&self, x: &Vector) -> Result<Vector> {
        if x.dim() != self.cols {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                got: x.dim(),
            });
        }
        let mut out = vec![0.0; self.rows];
        for i in 0..self.rows {
            out[i] = (0..self.cols).map(|j| self.at(i, j) * x.at(j)).sum();
        }
        Ok(Vector::raw(out))
    }

    pub fn transpose_apply(&self, y: &Vector) -> Result<Vector> {
        if y.dim() != self.rows {
            return Err(Error::DimensionMismatch {
                expected: self.rows,
                got: y.dim(),
            });
        }
        let mut out = vec![0.0; self.cols];
        for j in 0..self.cols {
            out[j] = (0..self.rows).map(|i| self.at(i, j) * y.at(i)).sum();
        }
        Ok(Vector::raw(out))
    }

    /// Convex combination of same-shape matrices.
    pub fn combine(mats: &[Mat], weights: &[f64]) -> Result<Mat> {
        let first = mats
            .first()
            .ok_or_else(|| Error::InvalidArgument("empty matrix family".into()))?;
        if mats.len() != weights.len() {
            return Err(Error::InvalidArgument(
                "one weight per matrix required".into(),
            ));
        }
        let mut data = vec![0.0; first.data.len()];
        for (m, w) in mats.iter().zip(weights) {
            if m.rows != first.rows || m.cols != first.cols {
                return Err(Error::InvalidArgument("matrix family shapes differ".into()));
            }
            for (d, v) in data.iter_mut().zip(&m.data) {
                *d += w * v;
            }
        }
        Ok(Mat {
            rows: first.rows,
            cols: first.cols,
            data,
        })
    }
}

/// Covering value `inf { |Λᵀ y| : |y| = 1 }` of the linear map `Λ`.
///
/// Equals the smallest singular value when the map has at least as many
/// input as output components, and zero otherwise (the map cannot be onto).
pub fn cov_matrix(m: &Mat) -> f64 {
    if m.rows > m.cols {
        return 0.0;
    }
    let a = nalgebra::DMatrix::from_row_slice(m.rows, m.cols, &m.data);
    a.singular_values()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

fn support_dirs(dim: usize) -> Vec<Vector> {
    let n = match dim {
        1 => 2,
        2 => 256,
        3 => 1024,
        _ => 512,
    };
    direction_set(dim, n)
}

/// `B(inner, inner_pad) ⊆ B(outer + C, outer_pad)`, tested by comparing
/// support functions over `dirs`. The cone contributes `0` in polar
/// directions and discharges all others, so the sum never needs to be
/// materialized; with `dirs = {±1}` the one-dimensional case is exact.
fn enlarged_sum_includes(
    inner: &ConvexBody,
    inner_pad: f64,
    outer: &ConvexBody,
    cone: &ConeSpec,
    outer_pad: f64,
    dirs: &[Vector],
) -> Result<bool> {
    for g in dirs {
        if !cone.polar_contains(g) {
            continue;
        }
        let rhs = support(outer, g)?;
        if rhs == f64::INFINITY {
            continue;
        }
        let lhs = support(inner, g)?;
        if lhs + inner_pad > rhs + outer_pad + 1e-9 * (1.0 + rhs.abs()) {
            return Ok(false);
        }
    }
    Ok(true)
}

#[derive(Clone, Debug, Serialize)]
pub struct IncreaseWitness {
    pub x: Vector,
    pub r: f64,
    pub u: Vector,
}

#[derive(Clone, Debug, Serialize)]
pub struct IncreaseFailure {
    pub x: Vector,
    pub r: f64,
}

/// Outcome of a windowed increase check. `witnesses` holds one `u` per
/// sampled `(x, r)` pair that passed; any pair without a witness lands in
/// `failures` and invalidates the certificate.
#[derive(Clone, Debug, Serialize)]
pub struct IncreaseCertificate {
    pub alpha: f64,
    pub window: WindowBox,
    pub r_schedule: Vec<f64>,
    pub checked: usize,
    pub support_dirs_n: usize,
    pub witnesses: Vec<IncreaseWitness>,
    pub failures: Vec<IncreaseFailure>,
}

impl IncreaseCertificate {
    pub fn valid(&self) -> bool {
        self.checked > 0 && self.failures.is_empty()
    }
}

/// Searches for increase witnesses of `slice` at rate `alpha` over a lattice
/// of centers in `window` and the radii of `cfg.r_schedule`. Candidate
/// witnesses are rays from the center: the interiority direction first (when
/// given), then a fixed direction set at fractions of the radius. Witnesses
/// may leave the window; the map must evaluate there.
pub fn check_c_increase(
    slice: &dyn Fn(&Vector) -> Result<ConvexBody>,
    cone: &ConeSpec,
    alpha: f64,
    window: &WindowBox,
    cfg: &EstimatorConfig,
    interior_dir: Option<&Vector>,
) -> Result<IncreaseCertificate> {
    if !(alpha.is_finite() && alpha > 1.0) {
        return Err(Error::InvalidArgument(
            "increase rates are calibrated strictly above 1".into(),
        ));
    }
    let xdim = window.dim();
    let centers = {
        let mut cs = window.lattice(if xdim == 1 { 9 } else { 5 });
        cs.push(window.center());
        cs
    };
    let ray_dirs = direction_set(xdim, if xdim == 1 { 2 } else { 16 });
    let sup_dirs = support_dirs(cone.dim());
    let interior_unit = match interior_dir {
        Some(d) => Some(d.normalize().ok_or_else(|| {
            Error::InvalidArgument("interiority direction must be nonzero".into())
        })?),
        None => None,
    };

    let mut cert = IncreaseCertificate {
        alpha,
        window: window.clone(),
        r_schedule: cfg.r_schedule.clone(),
        checked: 0,
        support_dirs_n: sup_dirs.len(),
        witnesses: Vec::new(),
        failures: Vec::new(),
    };

    for x in &centers {
        let fx = slice(x)?;
        for &r in &cfg.r_schedule {
            cert.checked += 1;
            let mut candidates: Vec<Vector> = Vec::new();
            if let Some(d) = &interior_unit {
                candidates.push(x.axpy(r, d));
            }
            for t in [1.0, 0.75, 0.5] {
                for d in &ray_dirs {
                    candidates.push(x.axpy(t * r, d));
                }
            }
            let mut witness = None;
            for u in candidates {
                let fu = slice(&u)?;
                if enlarged_sum_includes(&fu, alpha * r, &fx, cone, r, &sup_dirs)? {
                    witness = Some(u);
                    break;
                }
            }
            match witness {
                Some(u) => cert.witnesses.push(IncreaseWitness {
                    x: x.clone(),
                    r,
                    u,
                }),
                None => cert.failures.push(IncreaseFailure { x: x.clone(), r }),
            }
        }
    }
    Ok(cert)
}

/// A direction `u` with `Λ(u + εB) ⊆ C` for every matrix in the family, and
/// the largest `ε` found. Per direction the optimal `ε` is computed exactly
/// from the cone's halfspaces: `ε(u) = min_j −⟨aⱼ, Λu⟩ / |Λᵀaⱼ|`. The
/// constraint is convex in `Λ`, so checking the vertex matrices covers the
/// whole hull.
#[derive(Clone, Debug, Serialize)]
pub struct InteriorityReport {
    pub ok: bool,
    pub direction: Option<Vector>,
    pub margin: f64,
}

pub fn interiority_check(mats: &[Mat], cone: &ConeSpec, dirs_n: usize) -> Result<InteriorityReport> {
    let first = mats
        .first()
        .ok_or_else(|| Error::InvalidArgument("empty matrix family".into()))?;
    for m in mats {
        if m.rows != cone.dim() || m.cols != first.cols {
            return Err(Error::InvalidArgument(
                "matrix family must map a common space into the cone's space".into(),
            ));
        }
    }
    let mut best: Option<(Vector, f64)> = None;
    for u in direction_set(first.cols, dirs_n.max(16)) {
        let mut eps = f64::INFINITY;
        'outer: for m in mats {
            let image = m.apply(&u)?;
            for h in cone.halfspaces() {
                let slack = -h.normal.dot(&image);
                let den = m.transpose_apply(&h.normal)?.norm();
                if den <= 1e-12 {
                    if slack < -1e-12 {
                        eps = f64::NEG_INFINITY;
                        break 'outer;
                    }
                    continue;
                }
                eps = eps.min(slack / den);
                if eps <= 0.0 {
                    break 'outer;
                }
            }
        }
        if eps > 1e-9 && best.as_ref().map_or(true, |(_, b)| eps > *b) {
            best = Some((u, eps));
        }
    }
    Ok(match best {
        Some((u, eps)) => InteriorityReport {
            ok: true,
            direction: Some(u),
            margin: eps,
        },
        None => InteriorityReport {
            ok: false,
            direction: None,
            margin: 0.0,
        },
    })
}

/// Increase rate derived for a fan `F(x) = { Λx : Λ ∈ conv(G) }`: one plus
/// the worst covering value over the vertex matrices and a seeded sample of
/// hull points. Requires a pointed cone with nonempty interior, distinct
/// from `{0}` and the whole space, and a common interiority direction.
#[derive(Clone, Debug, Serialize)]
pub struct FanIncreaseBound {
    pub bound: f64,
    pub eta_bar: f64,
    pub interiority: InteriorityReport,
    pub sampled: usize,
}

pub fn fan_increase_bound(mats: &[Mat], cone: &ConeSpec, cfg: &EstimatorConfig) -> Result<FanIncreaseBound> {
    if cone.is_trivial() || cone.is_whole_space() || !cone.is_pointed() || !cone.has_interior() {
        return Err(Error::InvalidArgument(
            "fan increase bound needs a pointed solid cone strictly between {0} and the whole space"
                .into(),
        ));
    }
    let interiority = interiority_check(mats, cone, cfg.dirs_n)?;
    if !interiority.ok {
        return Err(Error::InvalidArgument(
            "fan increase bound needs a direction mapped into the cone's interior by the whole family"
                .into(),
        ));
    }
    let mut eta_bar = mats.iter().map(cov_matrix).fold(f64::INFINITY, f64::min);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    for _ in 0..cfg.sample_n {
        // Uniform on the simplex via normalized exponentials.
        let mut w: Vec<f64> = (0..mats.len())
            .map(|_| -(1.0 - rng.gen::<f64>()).ln())
            .collect();
        let total: f64 = w.iter().sum();
        for v in &mut w {
            *v /= total;
        }
        eta_bar = eta_bar.min(cov_matrix(&Mat::combine(mats, &w)?));
    }
    Ok(FanIncreaseBound {
        bound: eta_bar + 1.0,
        eta_bar,
        interiority,
        sampled: cfg.sample_n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> EstimatorConfig {
        EstimatorConfig::default()
    }

    #[test]
    fn covering_values_of_small_matrices() {
        assert_eq!(cov_matrix(&Mat::diag(&[2.0, 3.0])), 2.0);
        assert_eq!(cov_matrix(&Mat::new(2, 2, vec![1.0, 0.0, 0.0, 0.0]).unwrap()), 0.0);
        let wide = Mat::new(1, 2, vec![3.0, 4.0]).unwrap();
        assert!((cov_matrix(&wide) - 5.0).abs() < 1e-12);
        let tall = Mat::new(2, 1, vec![1.0, 0.0]).unwrap();
        assert_eq!(cov_matrix(&tall), 0.0);
    }

    #[test]
    fn matrix_apply_and_combine() {
        let m = Mat::new(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let x = Vector::new(vec![1.0, -1.0]).unwrap();
        assert_eq!(m.apply(&x).unwrap().coords(), &[-1.0, -1.0]);
        assert_eq!(m.transpose_apply(&x).unwrap().coords(), &[-2.0, -2.0]);
        let avg = Mat::combine(
            &[Mat::diag(&[2.0, 2.0]), Mat::diag(&[4.0, 4.0])],
            &[0.5, 0.5],
        )
        .unwrap();
        assert_eq!(avg, Mat::diag(&[3.0, 3.0]));
    }

    #[test]
    fn halfline_epigraph_increases_at_two_not_beyond() {
        // Φ(x) = [x, ∞) against C = [0, ∞): the sharp rate is 2.
        let slice = |x: &Vector| ConvexBody::interval(x.at(0), f64::INFINITY);
        let cone = ConeSpec::halfline();
        let window = WindowBox::new(vec![-1.0], vec![1.0]).unwrap();
        let ok = check_c_increase(&slice, &cone, 2.0, &window, &cfg(), None).unwrap();
        assert!(ok.valid(), "failures: {:?}", ok.failures);
        let too_much = check_c_increase(&slice, &cone, 2.5, &window, &cfg(), None).unwrap();
        assert!(!too_much.valid());
        assert_eq!(
            too_much.failures.len() + too_much.witnesses.len(),
            too_much.checked
        );
    }

    #[test]
    fn constant_map_never_increases() {
        let cone = ConeSpec::halfline();
        let body = cone.as_body();
        let slice = move |_: &Vector| Ok(body.clone());
        let window = WindowBox::new(vec![-1.0], vec![1.0]).unwrap();
        let cert = check_c_increase(&slice, &cone, 1.5, &window, &cfg(), None).unwrap();
        assert!(!cert.valid());
        assert!(cert.witnesses.is_empty());
    }

    #[test]
    fn rejects_rates_at_or_below_one() {
        let slice = |x: &Vector| ConvexBody::interval(x.at(0), f64::INFINITY);
        let cone = ConeSpec::halfline();
        let window = WindowBox::new(vec![-1.0], vec![1.0]).unwrap();
        assert!(check_c_increase(&slice, &cone, 1.0, &window, &cfg(), None).is_err());
    }

    #[test]
    fn interiority_of_identity_against_orthant() {
        let cone = ConeSpec::orthant(2).unwrap();
        let rep = interiority_check(&[Mat::identity(2)], &cone, 64).unwrap();
        assert!(rep.ok);
        assert!((rep.margin - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-9);
        let u = rep.direction.unwrap();
        assert!((u.at(0) - u.at(1)).abs() < 1e-9);
    }

    #[test]
    fn opposed_family_has_no_interior_direction() {
        let cone = ConeSpec::orthant(2).unwrap();
        let minus = Mat::diag(&[-1.0, -1.0]);
        let rep = interiority_check(&[Mat::identity(2), minus], &cone, 64).unwrap();
        assert!(!rep.ok);
    }

    #[test]
    fn interiority_against_halfspace_cone() {
        let normal = Vector::new(vec![-1.0, 0.0]).unwrap();
        let cone = ConeSpec::halfspace(normal).unwrap();
        let rep = interiority_check(&[Mat::identity(2)], &cone, 64).unwrap();
        assert!(rep.ok);
        assert!((rep.margin - 1.0).abs() < 1e-9);
        assert!((rep.direction.unwrap().at(0) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn fan_bound_for_diagonal_family() {
        let cone = ConeSpec::orthant(2).unwrap();
        let fan = fan_increase_bound(&[Mat::diag(&[2.0, 3.0])], &cone, &cfg()).unwrap();
        assert!((fan.eta_bar - 2.0).abs() < 1e-9);
        assert!((fan.bound - 3.0).abs() < 1e-9);
        assert!(fan.interiority.ok);
    }

    #[test]
    fn fan_bound_sampling_covers_hull_minima() {
        // cov dips inside the hull: vertices diag(2,2) and diag(2,-2) have
        // covering value 2, but mid-hull combinations lose rank in the
        // second coordinate.
        let cone = ConeSpec::halfspace(Vector::new(vec![-1.0, 0.0]).unwrap());
        // Halfspace cones are not pointed, so use the orthant instead.
        drop(cone);
        let cone = ConeSpec::orthant(2).unwrap();
        let a = Mat::diag(&[2.0, 2.0]);
        let b = Mat::diag(&[2.0, -2.0]);
        // The family must share an interiority direction; diag(2,-2) maps
        // nothing into the orthant's interior jointly with diag(2,2) except
        // nowhere: expect the precheck to reject it.
        assert!(fan_increase_bound(&[a, b], &cone, &cfg()).is_err());
    }

    #[test]
    fn fan_bound_rejects_unusable_cones() {
        let whole = ConeSpec::from_generators(
            1,
            vec![Vector::scalar(1.0), Vector::scalar(-1.0)],
        )
        .unwrap();
        assert!(fan_increase_bound(&[Mat::identity(1)], &whole, &cfg()).is_err());
        let halfspace = ConeSpec::halfspace(Vector::new(vec![-1.0, 0.0]).unwrap()).unwrap();
        assert!(fan_increase_bound(&[Mat::identity(2)], &halfspace, &cfg()).is_err());
    }

    #[test]
    fn one_dimensional_fan_chain_is_exact() {
        // Φ(x) = {1.5x}, C = [0, ∞): covering value 1.5, derived rate 2.5,
        // and the direct check accepts just below it.
        let cone = ConeSpec::halfline();
        let mats = vec![Mat::new(1, 1, vec![1.5]).unwrap()];
        let fan = fan_increase_bound(&mats, &cone, &cfg()).unwrap();
        assert!((fan.bound - 2.5).abs() < 1e-9);
        let m = mats[0].clone();
        let slice = move |x: &Vector| Ok(ConvexBody::Polytope(vec![m.apply(x).unwrap()]));
        let window = WindowBox::new(vec![-1.0], vec![1.0]).unwrap();
        let dir = fan.interiority.direction.clone().unwrap();
        let cert =
            check_c_increase(&slice, &cone, fan.bound - 0.05, &window, &cfg(), Some(&dir)).unwrap();
        assert!(cert.valid(), "failures: {:?}", cert.failures);
    }

    #[test]
    fn planar_identity_fan_accepts_the_diagonal_rate() {
        // For Φ = identity against the plane's orthant the sharp windowed
        // rate is 1 + 1/√2; the search must certify below and refuse above.
        let cone = ConeSpec::orthant(2).unwrap();
        let slice = |x: &Vector| Ok(ConvexBody::Polytope(vec![x.clone()]));
        let window = WindowBox::new(vec![-1.0, -1.0], vec![1.0, 1.0]).unwrap();
        let diag = Vector::new(vec![1.0, 1.0]).unwrap();
        let below =
            check_c_increase(&slice, &cone, 1.65, &window, &cfg(), Some(&diag)).unwrap();
        assert!(below.valid(), "failures: {:?}", below.failures);
        let above =
            check_c_increase(&slice, &cone, 1.95, &window, &cfg(), Some(&diag)).unwrap();
        assert!(!above.valid());
    }
}
