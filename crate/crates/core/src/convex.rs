//! Closed convex sets with metric projections, the half-space `H(x, y)` and
//! the Haugazeau projection onto the intersection of two such half-spaces.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::hilbert::Vector;

/// Orthonormality tolerance for affine subspace directions.
const ORTHONORMAL_TOL: f64 = 1e-10;

/// Relative threshold below which the Gram determinant of the Haugazeau
/// scalars is treated as zero.
const GRAM_ZERO_REL: f64 = 1e-14;

/// `{ z : <normal, z> <= offset }` with a nonzero normal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HalfSpace {
    normal: Vector,
    offset: f64,
}

impl HalfSpace {
    pub fn new(normal: Vector, offset: f64) -> Result<Self> {
        if normal.norm_squared() == 0.0 {
            return Err(Error::InvalidParameter(
                "half-space normal must be nonzero".into(),
            ));
        }
        if !offset.is_finite() {
            return Err(Error::InvalidParameter("half-space offset must be finite".into()));
        }
        Ok(Self { normal, offset })
    }

    pub fn normal(&self) -> &Vector {
        &self.normal
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    /// Signed violation `<normal, x> - offset`; nonpositive inside.
    pub fn violation(&self, x: &Vector) -> f64 {
        let mut ext = x.coords().to_vec();
        ext.push(-1.0);
        let mut n = self.normal.coords().to_vec();
        n.push(self.offset);
        Vector::from_raw(n).dot_compensated(&Vector::from_raw(ext))
    }

    pub fn project(&self, x: &Vector) -> Vector {
        let viol = self.violation(x);
        if viol <= 0.0 {
            x.clone()
        } else {
            x.lin_comb(1.0, &self.normal, -viol / self.normal.norm_squared())
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SetRepr", into = "SetRepr")]
pub enum ConvexSet {
    WholeSpace,
    Box { lower: Vector, upper: Vector },
    Ball { center: Vector, radius: f64 },
    HalfSpace(HalfSpace),
    /// `{ z : <normal, z> = offset }`.
    Hyperplane { normal: Vector, offset: f64 },
    /// `basepoint + span(directions)`; the directions are orthonormal.
    AffineSubspace {
        basepoint: Vector,
        directions: Vec<Vector>,
    },
}

impl ConvexSet {
    pub fn boxed(lower: Vector, upper: Vector) -> Result<Self> {
        check_dim(lower.dim(), upper.dim())?;
        if lower.coords().iter().zip(upper.coords()).any(|(l, u)| l > u) {
            return Err(Error::InvalidParameter("box requires lower <= upper".into()));
        }
        Ok(Self::Box { lower, upper })
    }

    pub fn ball(center: Vector, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidParameter("ball radius must be positive".into()));
        }
        Ok(Self::Ball { center, radius })
    }

    pub fn half_space(normal: Vector, offset: f64) -> Result<Self> {
        HalfSpace::new(normal, offset).map(Self::HalfSpace)
    }

    pub fn hyperplane(normal: Vector, offset: f64) -> Result<Self> {
        let h = HalfSpace::new(normal, offset)?;
        Ok(Self::Hyperplane {
            normal: h.normal,
            offset: h.offset,
        })
    }

    pub fn affine_subspace(basepoint: Vector, directions: Vec<Vector>) -> Result<Self> {
        for (i, e) in directions.iter().enumerate() {
            check_dim(basepoint.dim(), e.dim())?;
            for (j, f) in directions.iter().enumerate().skip(i) {
                let target = if i == j { 1.0 } else { 0.0 };
                if (e.dot(f) - target).abs() > ORTHONORMAL_TOL {
                    return Err(Error::InvalidParameter(
                        "affine subspace directions must be orthonormal".into(),
                    ));
                }
            }
        }
        Ok(Self::AffineSubspace {
            basepoint,
            directions,
        })
    }

    /// Ambient dimension, or `None` for the dimension-agnostic whole space.
    pub fn dim(&self) -> Option<usize> {
        match self {
            Self::WholeSpace => None,
            Self::Box { lower, .. } => Some(lower.dim()),
            Self::Ball { center, .. } => Some(center.dim()),
            Self::HalfSpace(h) => Some(h.normal.dim()),
            Self::Hyperplane { normal, .. } => Some(normal.dim()),
            Self::AffineSubspace { basepoint, .. } => Some(basepoint.dim()),
        }
    }

    fn check(&self, x: &Vector) -> Result<()> {
        match self.dim() {
            Some(d) => check_dim(d, x.dim()),
            None => Ok(()),
        }
    }

    pub fn project(&self, x: &Vector) -> Result<Vector> {
        self.check(x)?;
        Ok(match self {
            Self::WholeSpace => x.clone(),
            Self::Box { lower, upper } => Vector::from_raw(
                x.coords()
                    .iter()
                    .zip(lower.coords().iter().zip(upper.coords()))
                    .map(|(&c, (&l, &u))| c.clamp(l, u))
                    .collect(),
            ),
            Self::Ball { center, radius } => {
                let off = x - center;
                let dist = off.norm();
                if dist <= *radius {
                    x.clone()
                } else {
                    center.lin_comb(1.0, &off, radius / dist)
                }
            }
            Self::HalfSpace(h) => h.project(x),
            Self::Hyperplane { normal, offset } => {
                let viol = normal.dot(x) - offset;
                x.lin_comb(1.0, normal, -viol / normal.norm_squared())
            }
            Self::AffineSubspace {
                basepoint,
                directions,
            } => {
                let off = x - basepoint;
                directions
                    .iter()
                    .fold(basepoint.clone(), |acc, e| acc.lin_comb(1.0, e, off.dot(e)))
            }
        })
    }

    /// True iff `x` violates no defining inequality by more than `tol`.
    /// Half-space and hyperplane violations are measured in the raw
    /// `<normal, x> - offset` scale; the others are Euclidean distances.
    pub fn contains(&self, x: &Vector, tol: f64) -> bool {
        if self.check(x).is_err() {
            return false;
        }
        match self {
            Self::WholeSpace => true,
            Self::Box { lower, upper } => x
                .coords()
                .iter()
                .zip(lower.coords().iter().zip(upper.coords()))
                .all(|(&c, (&l, &u))| c >= l - tol && c <= u + tol),
            Self::Ball { center, radius } => x.distance(center) <= radius + tol,
            Self::HalfSpace(h) => h.violation(x) <= tol,
            Self::Hyperplane { normal, offset } => (normal.dot(x) - offset).abs() <= tol,
            Self::AffineSubspace { .. } => match self.project(x) {
                Ok(p) => p.distance(x) <= tol,
                Err(_) => false,
            },
        }
    }

    /// Axis-aligned bounding box `(lower, upper)` for bounded sets.
    pub fn bounding_box(&self) -> Result<(Vector, Vector)> {
        match self {
            Self::Box { lower, upper } => Ok((lower.clone(), upper.clone())),
            Self::Ball { center, radius } => {
                Ok((center.map(|c| c - radius), center.map(|c| c + radius)))
            }
            Self::AffineSubspace {
                basepoint,
                directions,
            } if directions.is_empty() => Ok((basepoint.clone(), basepoint.clone())),
            _ => Err(Error::Unbounded),
        }
    }
}

/// `H(x, y) = { z : <z - y, x - y> <= 0 }`; the whole space when `x = y`.
pub fn halfspace_from_pair(x: &Vector, y: &Vector) -> Result<ConvexSet> {
    Ok(match half_space_between(x, y)? {
        Some(h) => ConvexSet::HalfSpace(h),
        None => ConvexSet::WholeSpace,
    })
}

/// The half-space `H(x, y)` as a constraint, or `None` when `x = y`.
pub fn half_space_between(x: &Vector, y: &Vector) -> Result<Option<HalfSpace>> {
    check_dim(x.dim(), y.dim())?;
    let normal = x - y;
    if normal.norm_squared() == 0.0 {
        return Ok(None);
    }
    let offset = normal.dot_compensated(y);
    Ok(Some(HalfSpace { normal, offset }))
}

/// Projection of `x` onto `H(x, y) ∩ H(y, z)` in closed form.
///
/// With `pi = <x - y, y - z>`, `mu = |x - y|^2`, `nu = |y - z|^2` and
/// `rho = mu * nu - pi^2`, the intersection is empty exactly when `rho = 0`
/// and `pi < 0`, which is reported as [`Error::EmptyIntersection`].
pub fn haugazeau_project(x: &Vector, y: &Vector, z: &Vector) -> Result<Vector> {
    check_dim(x.dim(), y.dim())?;
    check_dim(x.dim(), z.dim())?;
    let xy = x - y;
    let yz = y - z;
    let pi = xy.dot(&yz);
    let mu = xy.norm_squared();
    let nu = yz.norm_squared();
    let (mut rho, dir) = gram_terms(&xy, &yz, pi, mu);
    if rho <= GRAM_ZERO_REL * mu * nu {
        rho = 0.0;
    }

    if rho == 0.0 {
        if pi >= 0.0 {
            Ok(z.clone())
        } else {
            Err(Error::EmptyIntersection)
        }
    } else if pi * nu >= rho {
        // x + (1 + pi/nu)(z - y)
        Ok(x.lin_comb(1.0, &yz, -(1.0 + pi / nu)))
    } else {
        // y + (nu/rho)(pi (x - y) + mu (z - y))
        Ok(y.lin_comb(1.0, &dir, nu / rho))
    }
}

/// `rho = mu nu - pi^2` and `pi a - mu b` for `a = x - y`, `b = y - z`.
///
/// In low dimension both are summed from the 2x2 minors
/// `w_ij = a_i b_j - a_j b_i` (Lagrange's identity), which avoids the
/// cancellation of the direct formulas when `a` and `b` are nearly parallel.
fn gram_terms(a: &Vector, b: &Vector, pi: f64, mu: f64) -> (f64, Vector) {
    let d = a.dim();
    if d > 64 {
        let nu = b.norm_squared();
        return (mu * nu - pi * pi, a.lin_comb(pi, b, -mu));
    }
    let (a, b) = (a.coords(), b.coords());
    let mut rho = 0.0;
    let mut dir = vec![0.0; d];
    for i in 0..d {
        for j in 0..d {
            let w = a[i] * b[j] - a[j] * b[i];
            dir[i] += a[j] * w;
            if j > i {
                rho += w * w;
            }
        }
    }
    (rho, Vector::from_raw(dir))
}

/// Maximum number of constraints accepted by [`qp_project_oracle`].
pub const QP_ORACLE_MAX_CONSTRAINTS: usize = 12;

/// Exact projection of `x` onto an intersection of a few half-spaces by
/// exhaustive active-set enumeration.
///
/// Every subset of constraints is treated as a set of equalities; the
/// resulting least-distance point is kept if it satisfies all constraints,
/// and the nearest feasible candidate is returned. Cost is exponential in
/// the number of constraints.
pub fn qp_project_oracle(constraints: &[HalfSpace], x: &Vector) -> Result<Vector> {
    if constraints.len() > QP_ORACLE_MAX_CONSTRAINTS {
        return Err(Error::InvalidParameter(format!(
            "at most {QP_ORACLE_MAX_CONSTRAINTS} constraints supported"
        )));
    }
    for c in constraints {
        check_dim(x.dim(), c.normal.dim())?;
    }
    let d = x.dim();
    let m = constraints.len();
    let mut best: Option<(f64, Vector)> = None;

    for mask in 0u32..(1u32 << m) {
        let active: Vec<&HalfSpace> = (0..m)
            .filter(|i| mask & (1 << i) != 0)
            .map(|i| &constraints[i])
            .collect();
        if active.len() > d {
            continue;
        }
        let Some(candidate) = equality_projection(&active, x) else {
            continue;
        };
        let feasible = constraints.iter().all(|c| {
            let scale = 1.0 + c.offset.abs() + c.normal.norm() * candidate.norm();
            c.violation(&candidate) <= 1e-10 * scale
        });
        if !feasible {
            continue;
        }
        let dist = candidate.distance(x);
        if best.as_ref().is_none_or(|(b, _)| dist < *b) {
            best = Some((dist, candidate));
        }
    }

    best.map(|(_, p)| p).ok_or(Error::EmptyIntersection)
}

/// Least-distance point to `x` on `{ z : <a_i, z> = b_i }`, or `None` when
/// the active normals are (numerically) linearly dependent.
fn equality_projection(active: &[&HalfSpace], x: &Vector) -> Option<Vector> {
    if active.is_empty() {
        return Some(x.clone());
    }
    let d = x.dim();
    let k = active.len();
    // With N = [normals] = QR, the nearest point of {N^T w = b} is
    // x - Q R^{-T} (N^T x - b); QR keeps the conditioning of N rather than
    // that of its Gram matrix.
    let n = DMatrix::from_fn(d, k, |i, j| active[j].normal.coords()[i]);
    let qr = n.qr();
    let r = qr.r();
    let diag: Vec<f64> = (0..k).map(|i| r[(i, i)].abs()).collect();
    let dmax = diag.iter().copied().fold(0.0, f64::max);
    if diag.iter().any(|&v| v <= 3e-7 * dmax) {
        return None;
    }
    let q = qr.q();
    // Two rounds of refinement against accurately evaluated residuals.
    let mut z = x.clone();
    for _ in 0..3 {
        let viol = DVector::from_fn(k, |i, _| active[i].violation(&z));
        let shift = &q * r.tr_solve_upper_triangular(&viol)?;
        z = Vector::from_raw(z.coords().iter().zip(shift.iter()).map(|(c, s)| c - s).collect());
    }
    Some(z)
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum SetRepr {
    WholeSpace,
    Box {
        lower: Vector,
        upper: Vector,
    },
    Ball {
        center: Vector,
        radius: f64,
    },
    HalfSpace {
        normal: Vector,
        offset: f64,
    },
    Hyperplane {
        normal: Vector,
        offset: f64,
    },
    AffineSubspace {
        basepoint: Vector,
        #[serde(default)]
        directions: Vec<Vector>,
    },
}

impl TryFrom<SetRepr> for ConvexSet {
    type Error = Error;

    fn try_from(r: SetRepr) -> Result<Self> {
        match r {
            SetRepr::WholeSpace => Ok(Self::WholeSpace),
            SetRepr::Box { lower, upper } => Self::boxed(lower, upper),
            SetRepr::Ball { center, radius } => Self::ball(center, radius),
            SetRepr::HalfSpace { normal, offset } => Self::half_space(normal, offset),
            SetRepr::Hyperplane { normal, offset } => Self::hyperplane(normal, offset),
            SetRepr::AffineSubspace {
                basepoint,
                directions,
            } => Self::affine_subspace(basepoint, directions),
        }
    }
}

impl From<ConvexSet> for SetRepr {
    fn from(s: ConvexSet) -> Self {
        match s {
            ConvexSet::WholeSpace => Self::WholeSpace,
            ConvexSet::Box { lower, upper } => Self::Box { lower, upper },
            ConvexSet::Ball { center, radius } => Self::Ball { center, radius },
            ConvexSet::HalfSpace(h) => Self::HalfSpace {
                normal: h.normal,
                offset: h.offset,
            },
            ConvexSet::Hyperplane { normal, offset } => Self::Hyperplane { normal, offset },
            ConvexSet::AffineSubspace {
                basepoint,
                directions,
            } => Self::AffineSubspace {
                basepoint,
                directions,
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn v(c: &[f64]) -> Vector {
        Vector::new(c.to_vec()).unwrap()
    }

    fn hs(n: &[f64], b: f64) -> HalfSpace {
        HalfSpace::new(v(n), b).unwrap()
    }

    #[test]
    fn project_examples() {
        let unit_box = ConvexSet::boxed(v(&[0.0, 0.0]), v(&[1.0, 1.0])).unwrap();
        assert_eq!(unit_box.project(&v(&[2.0, -1.0])).unwrap(), v(&[1.0, 0.0]));

        let ball = ConvexSet::ball(v(&[0.0, 0.0]), 1.0).unwrap();
        let p = ball.project(&v(&[3.0, 4.0])).unwrap();
        assert!(p.distance(&v(&[0.6, 0.8])) < 1e-15);

        let half = ConvexSet::half_space(v(&[1.0, 0.0]), 0.0).unwrap();
        let p = half.project(&v(&[2.0, 5.0])).unwrap();
        assert_eq!(p, v(&[0.0, 5.0]));
        let q = qp_project_oracle(&[hs(&[1.0, 0.0], 0.0)], &v(&[2.0, 5.0])).unwrap();
        assert!(p.distance(&q) < 1e-12);
    }

    #[test]
    fn project_rejects_dimension_mismatch() {
        let ball = ConvexSet::ball(v(&[0.0, 0.0]), 1.0).unwrap();
        assert!(matches!(
            ball.project(&v(&[1.0, 2.0, 3.0])),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn hyperplane_and_affine_projections() {
        let line = ConvexSet::hyperplane(v(&[0.0, 2.0]), 0.0).unwrap();
        assert_eq!(line.project(&v(&[1.0, 1.0])).unwrap(), v(&[1.0, 0.0]));

        let diag = ConvexSet::affine_subspace(
            v(&[0.0, 1.0]),
            vec![v(&[0.5f64.sqrt(), 0.5f64.sqrt()])],
        )
        .unwrap();
        let p = diag.project(&v(&[1.0, 0.0])).unwrap();
        assert!(p.distance(&v(&[0.0, 1.0])) < 1e-15);
        assert!(ConvexSet::affine_subspace(v(&[0.0, 0.0]), vec![v(&[1.0, 1.0])]).is_err());
    }

    #[test]
    fn constructor_invariants() {
        assert!(ConvexSet::boxed(v(&[1.0]), v(&[0.0])).is_err());
        assert!(ConvexSet::ball(v(&[0.0]), 0.0).is_err());
        assert!(ConvexSet::half_space(v(&[0.0, 0.0]), 1.0).is_err());
        assert!(ConvexSet::hyperplane(v(&[0.0]), 0.0).is_err());
    }

    #[test]
    fn halfspace_from_pair_examples() {
        assert_eq!(
            halfspace_from_pair(&v(&[1.0, 1.0]), &v(&[1.0, 1.0])).unwrap(),
            ConvexSet::WholeSpace
        );
        let h = halfspace_from_pair(&v(&[2.0, 0.0]), &v(&[0.0, 0.0])).unwrap();
        assert_eq!(h, ConvexSet::half_space(v(&[2.0, 0.0]), 0.0).unwrap());
        assert_eq!(h.project(&v(&[2.0, 0.0])).unwrap(), v(&[0.0, 0.0]));
    }

    #[test]
    fn contains_examples() {
        assert!(ConvexSet::WholeSpace.contains(&v(&[1e300, -3.0]), 0.0));
        let unit_box = ConvexSet::boxed(v(&[0.0, 0.0]), v(&[1.0, 1.0])).unwrap();
        assert!(unit_box.contains(&v(&[0.5, 0.5]), 0.0));
        assert!(!unit_box.contains(&v(&[1.5, 0.5]), 0.0));
        let half = ConvexSet::half_space(v(&[1.0, 0.0]), 0.0).unwrap();
        assert!(half.contains(&v(&[1e-9, 0.0]), 1e-8));
        assert!(!half.contains(&v(&[1e-7, 0.0]), 1e-8));
    }

    #[test]
    fn haugazeau_examples() {
        let o = v(&[0.0, 0.0]);
        assert_eq!(haugazeau_project(&o, &o, &o).unwrap(), o);
        assert_eq!(
            haugazeau_project(&o, &o, &v(&[1.0, 0.0])).unwrap(),
            v(&[1.0, 0.0])
        );
        let p = haugazeau_project(&v(&[2.0, 0.0]), &o, &v(&[0.0, -1.0])).unwrap();
        assert!(p.distance(&v(&[0.0, -1.0])) < 1e-15);
    }

    #[test]
    fn haugazeau_flags_antiparallel_pair() {
        // H(x,y) = {z1 >= 0}, H(y,z) = {z1 <= -1}
        let r = haugazeau_project(&v(&[-1.0, 0.0]), &v(&[0.0, 0.0]), &v(&[-1.0, 0.0]));
        assert_eq!(r, Err(Error::EmptyIntersection));
        let cons = [hs(&[-1.0, 0.0], 0.0), hs(&[1.0, 0.0], -1.0)];
        assert_eq!(
            qp_project_oracle(&cons, &v(&[-1.0, 0.0])),
            Err(Error::EmptyIntersection)
        );
    }

    #[test]
    fn haugazeau_parallel_same_direction_returns_z() {
        let x = v(&[3.0, 0.0]);
        let y = v(&[2.0, 0.0]);
        let z = v(&[1.0, 0.0]);
        assert_eq!(haugazeau_project(&x, &y, &z).unwrap(), z);
    }

    #[test]
    fn qp_oracle_examples() {
        let x = v(&[2.0, 5.0]);
        assert_eq!(qp_project_oracle(&[], &x).unwrap(), x);
        let p = qp_project_oracle(&[hs(&[1.0, 0.0], 0.0)], &x).unwrap();
        assert!(p.distance(&v(&[0.0, 5.0])) < 1e-15);
        let p = qp_project_oracle(
            &[hs(&[1.0, 0.0], 0.0), hs(&[0.0, 1.0], -1.0)],
            &v(&[2.0, 0.0]),
        )
        .unwrap();
        assert!(p.distance(&v(&[0.0, -1.0])) < 1e-15);
    }

    #[test]
    fn haugazeau_matches_oracle_on_random_triples() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..2000 {
            let d = rng.random_range(2..=6);
            let mut draw = || {
                Vector::new((0..d).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
            };
            let (x, y, z) = (draw(), draw(), draw());
            let cons: Vec<HalfSpace> = [half_space_between(&x, &y), half_space_between(&y, &z)]
                .into_iter()
                .filter_map(|h| h.unwrap())
                .collect();
            let closed = haugazeau_project(&x, &y, &z).unwrap();
            let oracle = qp_project_oracle(&cons, &x).unwrap();
            assert!(closed.distance(&oracle) < 1e-9, "{x:?} {y:?} {z:?}");
            for c in &cons {
                assert!(c.violation(&closed) <= 1e-9);
            }
        }
    }

    #[test]
    fn set_json_round_trip_validates() {
        let b = ConvexSet::boxed(v(&[0.0, 0.0]), v(&[1.0, 1.0])).unwrap();
        let s = serde_json::to_string(&b).unwrap();
        assert_eq!(s, r#"{"type":"box","lower":[0.0,0.0],"upper":[1.0,1.0]}"#);
        assert_eq!(serde_json::from_str::<ConvexSet>(&s).unwrap(), b);
        assert!(serde_json::from_str::<ConvexSet>(r#"{"type":"ball","center":[0.0],"radius":-1.0}"#).is_err());
        assert_eq!(
            serde_json::from_str::<ConvexSet>(r#"{"type":"whole_space"}"#).unwrap(),
            ConvexSet::WholeSpace
        );
    }

    fn sample_sets() -> Vec<ConvexSet> {
        vec![
            ConvexSet::WholeSpace,
            ConvexSet::boxed(v(&[-1.0, 0.0, -0.5]), v(&[1.0, 2.0, 0.5])).unwrap(),
            ConvexSet::ball(v(&[0.5, -0.5, 1.0]), 1.5).unwrap(),
            ConvexSet::half_space(v(&[1.0, -2.0, 0.5]), 0.3).unwrap(),
            ConvexSet::hyperplane(v(&[0.0, 1.0, 1.0]), -1.0).unwrap(),
            ConvexSet::affine_subspace(v(&[1.0, 1.0, 1.0]), vec![v(&[0.0, 0.6, 0.8])]).unwrap(),
        ]
    }

    fn point3() -> impl Strategy<Value = Vector> {
        prop::collection::vec(-4.0f64..4.0, 3).prop_map(|c| Vector::new(c).unwrap())
    }

    proptest! {
        #[test]
        fn projection_characterization(x in point3(), s in point3(), idx in 0usize..6) {
            let set = &sample_sets()[idx];
            let p = set.project(&x).unwrap();
            prop_assert!(set.contains(&p, 1e-12));
            prop_assert!(set.project(&p).unwrap().distance(&p) <= 1e-12);
            // any point of the set: project an arbitrary sample into it
            let member = set.project(&s).unwrap();
            prop_assert!((&x - &p).dot(&(&member - &p)) <= 1e-9);
        }

        #[test]
        fn projection_is_firmly_nonexpansive(x in point3(), y in point3(), idx in 0usize..6) {
            let set = &sample_sets()[idx];
            let px = set.project(&x).unwrap();
            let py = set.project(&y).unwrap();
            let dp = &px - &py;
            prop_assert!(dp.norm_squared() <= dp.dot(&(&x - &y)) + 1e-9);
        }
    }
}
