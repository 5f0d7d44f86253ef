//! Mappings on R^d and the transforms built from them: the T-class
//! operator of a strict pseudocontraction, averaged maps, the extragradient
//! operators of a variational inequality, and compositions.

mod certify;

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

pub use certify::{
    certify_f_quasi_nonexpansive, certify_monotone_lipschitz, certify_nonexpansive,
    certify_strict_pseudocontraction, certify_tclass, certify_vi_solution, CertReport, Sampler,
    CERT_QUADRATIC_TOL, FIXED_POINT_TOL,
};

use crate::convex::ConvexSet;
use crate::error::{check_dim, Error, Result};
use crate::hilbert::Vector;

/// Slack allowed when checking that `lambda * k` lies in the step window.
const STEP_WINDOW_SLACK: f64 = 1e-12;

/// A set described either geometrically or by finitely many points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "value", rename_all = "snake_case")]
pub enum PointSet {
    Set(ConvexSet),
    Points(Vec<Vector>),
}

impl PointSet {
    pub fn point(p: Vector) -> Self {
        Self::Points(vec![p])
    }

    pub fn contains(&self, x: &Vector, tol: f64) -> bool {
        match self {
            Self::Set(s) => s.contains(x, tol),
            Self::Points(ps) => ps.iter().any(|p| p.dim() == x.dim() && p.distance(x) <= tol),
        }
    }

    /// Euclidean distance from `x` to the set.
    pub fn distance(&self, x: &Vector) -> Result<f64> {
        match self {
            Self::Set(s) => Ok(s.project(x)?.distance(x)),
            Self::Points(ps) => {
                let mut best = f64::INFINITY;
                for p in ps {
                    check_dim(p.dim(), x.dim())?;
                    best = best.min(p.distance(x));
                }
                Ok(best)
            }
        }
    }

    /// Nearest point of the set to `x`.
    pub fn nearest(&self, x: &Vector) -> Result<Vector> {
        match self {
            Self::Set(s) => s.project(x),
            Self::Points(ps) => {
                let mut best: Option<&Vector> = None;
                for p in ps {
                    check_dim(p.dim(), x.dim())?;
                    if best.is_none_or(|b| p.distance(x) < b.distance(x)) {
                        best = Some(p);
                    }
                }
                best.cloned()
                    .ok_or_else(|| Error::InvalidParameter("empty point list".into()))
            }
        }
    }

    /// Representative points, for certifiers that need finitely many.
    pub fn sample_points(&self) -> Vec<Vector> {
        match self {
            Self::Points(ps) => ps.clone(),
            Self::Set(ConvexSet::AffineSubspace {
                basepoint,
                directions,
            }) => {
                let mut out = vec![basepoint.clone()];
                for e in directions {
                    out.push(basepoint.lin_comb(1.0, e, 1.0));
                    out.push(basepoint.lin_comb(1.0, e, -2.5));
                }
                out
            }
            Self::Set(_) => Vec::new(),
        }
    }

    /// Intersection, when it can be represented exactly. Returns `None` if
    /// the combination is not supported.
    pub fn intersect(&self, other: &PointSet, tol: f64) -> Option<PointSet> {
        match (self, other) {
            (Self::Set(ConvexSet::WholeSpace), o) | (o, Self::Set(ConvexSet::WholeSpace)) => {
                Some(o.clone())
            }
            (Self::Points(ps), o) | (o, Self::Points(ps)) => Some(Self::Points(
                ps.iter().filter(|p| o.contains(p, tol)).cloned().collect(),
            )),
            (
                Self::Set(ConvexSet::AffineSubspace {
                    basepoint: b1,
                    directions: u1,
                }),
                Self::Set(ConvexSet::AffineSubspace {
                    basepoint: b2,
                    directions: u2,
                }),
            ) => intersect_affine(b1, u1, b2, u2, tol),
            _ => None,
        }
    }

    pub fn is_empty(&self) -> bool {
        matches!(self, Self::Points(ps) if ps.is_empty())
    }
}

fn intersect_affine(
    b1: &Vector,
    u1: &[Vector],
    b2: &Vector,
    u2: &[Vector],
    tol: f64,
) -> Option<PointSet> {
    let d = b1.dim();
    if b2.dim() != d {
        return None;
    }
    // b1 + U1 a = b2 + U2 c  <=>  [U1, -U2] [a; c] = b2 - b1
    let cols = u1.len() + u2.len();
    if cols == 0 {
        return Some(if b1.distance(b2) <= tol {
            PointSet::point(b1.clone())
        } else {
            PointSet::Points(vec![])
        });
    }
    let sys = DMatrix::from_fn(d, cols, |i, j| {
        if j < u1.len() {
            u1[j].coords()[i]
        } else {
            -u2[j - u1.len()].coords()[i]
        }
    });
    let rhs = crate::linalg::to_dvector(&(b2 - b1));
    let svd = sys.clone().svd(true, true);
    let sol = svd.solve(&rhs, 1e-12).ok()?;
    let residual = (&sys * &sol - &rhs).norm();
    if residual > tol {
        return Some(PointSet::Points(vec![]));
    }
    let mut base = b1.clone();
    for (j, e) in u1.iter().enumerate() {
        base = base.lin_comb(1.0, e, sol[j]);
    }
    // Directions of the intersection: U1 a for a in the kernel of the system.
    let kernel = crate::linalg::null_space(&sys, 1e-10);
    let mut dirs: Vec<Vector> = kernel
        .iter()
        .map(|k| {
            let mut w = Vector::zeros(d);
            for (j, e) in u1.iter().enumerate() {
                w = w.lin_comb(1.0, e, k[j]);
            }
            w
        })
        .collect();
    dirs = crate::linalg::orthonormalize(&dirs, 1e-10);
    if dirs.is_empty() {
        Some(PointSet::point(base))
    } else if dirs.len() == d {
        Some(PointSet::Set(ConvexSet::WholeSpace))
    } else {
        ConvexSet::affine_subspace(base, dirs).ok().map(PointSet::Set)
    }
}

/// Declared class of a mapping. Trusted metadata set by constructors;
/// the certifiers exist to audit it.
#[derive(Debug, Clone, PartialEq)]
pub enum ClassTag {
    StrictPseudocontraction { kappa: f64 },
    /// The `kappa = 1` boundary case.
    Pseudocontractive,
    Nonexpansive,
    MonotoneLipschitz { k: f64 },
    QuasiNonexpansiveFor(PointSet),
    Untagged,
}

impl ClassTag {
    pub fn strict_pseudocontraction(kappa: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&kappa) {
            return Err(Error::InvalidParameter(format!(
                "kappa must lie in [0, 1), got {kappa}"
            )));
        }
        Ok(Self::StrictPseudocontraction { kappa })
    }

    pub fn monotone_lipschitz(k: f64) -> Result<Self> {
        if !(k > 0.0 && k.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "Lipschitz constant must be positive, got {k}"
            )));
        }
        Ok(Self::MonotoneLipschitz { k })
    }

    /// The strict-pseudocontraction constant implied by the tag, if any.
    pub fn kappa(&self) -> Option<f64> {
        match self {
            Self::StrictPseudocontraction { kappa } => Some(*kappa),
            Self::Nonexpansive => Some(0.0),
            _ => None,
        }
    }

    fn is_nonexpansive(&self) -> bool {
        self.kappa() == Some(0.0)
    }
}

pub type Evaluator = Arc<dyn Fn(&Vector) -> Vector + Send + Sync>;

/// An operator on R^d. Cheap to clone; the evaluator must be pure.
#[derive(Clone)]
pub struct Mapping {
    evaluator: Evaluator,
    dim: usize,
    tag: ClassTag,
    fixed_set: Option<PointSet>,
}

impl fmt::Debug for Mapping {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Mapping")
            .field("dim", &self.dim)
            .field("tag", &self.tag)
            .field("fixed_set", &self.fixed_set)
            .finish_non_exhaustive()
    }
}

impl Mapping {
    pub fn new(dim: usize, f: impl Fn(&Vector) -> Vector + Send + Sync + 'static) -> Self {
        assert!(dim >= 1, "dimension must be at least 1");
        Self {
            evaluator: Arc::new(f),
            dim,
            tag: ClassTag::Untagged,
            fixed_set: None,
        }
    }

    pub fn with_tag(mut self, tag: ClassTag) -> Self {
        self.tag = tag;
        self
    }

    pub fn with_fixed_set(mut self, fixed: PointSet) -> Self {
        self.fixed_set = Some(fixed);
        self
    }

    pub fn identity(dim: usize) -> Self {
        Self::new(dim, |x| x.clone())
            .with_tag(ClassTag::Nonexpansive)
            .with_fixed_set(PointSet::Set(ConvexSet::WholeSpace))
    }

    pub fn zero(dim: usize) -> Self {
        Self::new(dim, move |_| Vector::zeros(dim))
            .with_tag(ClassTag::Nonexpansive)
            .with_fixed_set(PointSet::point(Vector::zeros(dim)))
    }

    /// `x -> s x`, untagged.
    pub fn scaling(dim: usize, s: f64) -> Self {
        Self::new(dim, move |x| x.scale(s))
    }

    /// `x -> x + shift`. Nonexpansive with no fixed point for nonzero shift.
    pub fn translation(shift: Vector) -> Self {
        let empty = shift.norm_squared() > 0.0;
        let m = Self::new(shift.dim(), move |x| x + &shift).with_tag(ClassTag::Nonexpansive);
        if empty {
            m.with_fixed_set(PointSet::Points(vec![]))
        } else {
            m.with_fixed_set(PointSet::Set(ConvexSet::WholeSpace))
        }
    }

    /// `x -> M x + shift`, untagged.
    pub fn affine(matrix: DMatrix<f64>, shift: Vector) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::InvalidParameter("matrix must be square".into()));
        }
        check_dim(matrix.nrows(), shift.dim())?;
        let dim = shift.dim();
        Ok(Self::new(dim, move |x| {
            let mut out = shift.coords().to_vec();
            for (i, o) in out.iter_mut().enumerate() {
                for j in 0..dim {
                    *o += matrix[(i, j)] * x.coords()[j];
                }
            }
            Vector::from_raw(out)
        }))
    }

    /// Metric projection onto `set`, tagged nonexpansive with `Fix = set`.
    pub fn projection(dim: usize, set: ConvexSet) -> Result<Self> {
        if let Some(d) = set.dim() {
            check_dim(dim, d)?;
        }
        let s = set.clone();
        Ok(Self::new(dim, move |x| {
            s.project(x).expect("dimension checked at construction")
        })
        .with_tag(ClassTag::Nonexpansive)
        .with_fixed_set(PointSet::Set(set)))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn tag(&self) -> &ClassTag {
        &self.tag
    }

    pub fn fixed_set(&self) -> Option<&PointSet> {
        self.fixed_set.as_ref()
    }

    pub fn eval(&self, x: &Vector) -> Result<Vector> {
        check_dim(self.dim, x.dim())?;
        Ok((self.evaluator)(x))
    }

    /// Evaluates without the dimension check.
    pub(crate) fn apply(&self, x: &Vector) -> Vector {
        debug_assert_eq!(self.dim, x.dim());
        (self.evaluator)(x)
    }
}

fn check_spc_tag(q: &Mapping, kappa: f64) -> Result<()> {
    if !(0.0..1.0).contains(&kappa) {
        return Err(Error::InvalidParameter(format!(
            "kappa must lie in [0, 1), got {kappa}"
        )));
    }
    match q.tag() {
        ClassTag::Untagged => Ok(()),
        tag => match tag.kappa() {
            Some(k) if k <= kappa + 1e-12 => Ok(()),
            _ => Err(Error::InvalidParameter(format!(
                "map tagged {tag:?} is not a {kappa}-strict pseudocontraction"
            ))),
        },
    }
}

/// `T = ((1 + kappa)/2) I + ((1 - kappa)/2) Q`, so that
/// `2T - I = kappa I + (1 - kappa) Q` and `Fix(T) = Fix(Q)`.
pub fn t_from_q(q: &Mapping, kappa: f64) -> Result<Mapping> {
    check_spc_tag(q, kappa)?;
    let inner = q.clone();
    let a = 0.5 * (1.0 + kappa);
    let b = 0.5 * (1.0 - kappa);
    let mut t = Mapping::new(q.dim(), move |x| x.lin_comb(a, &inner.apply(x), b))
        .with_tag(ClassTag::Nonexpansive);
    t.fixed_set = q.fixed_set.clone();
    Ok(t)
}

/// The same operator written through the relaxation
/// `R = alpha I + (1 - alpha) Q`:
/// `T x = (x + R x)/2 + ((kappa - alpha)/(1 - alpha)) (x - R x)/2`.
/// Pointwise equal to [`t_from_q`] for every admissible `alpha`.
pub fn t_from_q_alpha_form(q: &Mapping, kappa: f64, alpha: f64) -> Result<Mapping> {
    check_spc_tag(q, kappa)?;
    if !(alpha > kappa && alpha < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "alpha must lie in (kappa, 1) = ({kappa}, 1), got {alpha}"
        )));
    }
    let inner = q.clone();
    let c = (kappa - alpha) / (1.0 - alpha);
    let mut t = Mapping::new(q.dim(), move |x| {
        let r = x.lin_comb(alpha, &inner.apply(x), 1.0 - alpha);
        let mid = x.lin_comb(0.5, &r, 0.5);
        let diff = x.lin_comb(0.5, &r, -0.5);
        mid.lin_comb(1.0, &diff, c)
    })
    .with_tag(ClassTag::Nonexpansive);
    t.fixed_set = q.fixed_set.clone();
    Ok(t)
}

/// `x -> alpha x + (1 - alpha) S x` for `alpha` in `[0, 1)`.
pub fn averaged_map(s: &Mapping, alpha: f64) -> Result<Mapping> {
    if !(0.0..1.0).contains(&alpha) {
        return Err(Error::InvalidParameter(format!(
            "alpha must lie in [0, 1), got {alpha}"
        )));
    }
    let inner = s.clone();
    let mut r = Mapping::new(s.dim(), move |x| x.lin_comb(alpha, &inner.apply(x), 1.0 - alpha));
    if s.tag.is_nonexpansive() {
        r.tag = ClassTag::Nonexpansive;
    }
    r.fixed_set = s.fixed_set.clone();
    Ok(r)
}

/// `x -> (T x + x)/2`.
pub fn halve_shift(t: &Mapping) -> Mapping {
    let inner = t.clone();
    let mut h = Mapping::new(t.dim(), move |x| x.lin_comb(0.5, &inner.apply(x), 0.5));
    h.fixed_set = t.fixed_set.clone();
    h
}

/// `x -> R(T(x))`.
pub fn compose(r: &Mapping, t: &Mapping) -> Result<Mapping> {
    check_dim(r.dim(), t.dim())?;
    let (outer, inner) = (r.clone(), t.clone());
    Ok(Mapping::new(t.dim(), move |x| outer.apply(&inner.apply(x))))
}

/// A monotone Lipschitz variational inequality over a closed convex set,
/// together with the admissible window `[a, b]` for `lambda * k`.
#[derive(Debug, Clone)]
pub struct VIInstance {
    set: ConvexSet,
    operator: Mapping,
    lipschitz: f64,
    lambda_bounds: (f64, f64),
}

impl VIInstance {
    pub fn new(
        set: ConvexSet,
        operator: Mapping,
        lipschitz: f64,
        lambda_bounds: (f64, f64),
    ) -> Result<Self> {
        if let Some(d) = set.dim() {
            check_dim(operator.dim(), d)?;
        }
        if !(lipschitz > 0.0 && lipschitz.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "Lipschitz constant must be positive, got {lipschitz}"
            )));
        }
        let (a, b) = lambda_bounds;
        if !(a > 0.0 && a <= b && b < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "step window must satisfy 0 < a <= b < 1, got ({a}, {b})"
            )));
        }
        Ok(Self {
            set,
            operator,
            lipschitz,
            lambda_bounds,
        })
    }

    pub fn set(&self) -> &ConvexSet {
        &self.set
    }

    pub fn operator(&self) -> &Mapping {
        &self.operator
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    pub fn lambda_bounds(&self) -> (f64, f64) {
        self.lambda_bounds
    }

    pub fn dim(&self) -> usize {
        self.operator.dim()
    }

    /// Midpoint step `(a + b) / (2k)`.
    pub fn default_lambda(&self) -> f64 {
        0.5 * (self.lambda_bounds.0 + self.lambda_bounds.1) / self.lipschitz
    }

    pub fn check_lambda(&self, lambda: f64) -> Result<()> {
        let (a, b) = self.lambda_bounds;
        let lk = lambda * self.lipschitz;
        if lk >= a - STEP_WINDOW_SLACK && lk <= b + STEP_WINDOW_SLACK {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "lambda * k = {lk} outside [{a}, {b}]"
            )))
        }
    }

    /// `P_C(x - lambda A y)`.
    fn step(&self, lambda: f64, x: &Vector, y: &Vector) -> Vector {
        let shifted = x.lin_comb(1.0, &self.operator.apply(y), -lambda);
        self.set
            .project(&shifted)
            .expect("dimension checked at construction")
    }

    pub fn t1_map(&self, lambda: f64) -> Result<Mapping> {
        self.check_lambda(lambda)?;
        let inst = self.clone();
        Ok(Mapping::new(self.dim(), move |x| inst.step(lambda, x, x)))
    }

    pub fn t2_map(&self, lambda: f64) -> Result<Mapping> {
        self.check_lambda(lambda)?;
        let inst = self.clone();
        Ok(Mapping::new(self.dim(), move |x| {
            let y = inst.step(lambda, x, x);
            inst.step(lambda, x, &y)
        }))
    }
}

/// `T1 x = P_C(x - lambda A x)`.
pub fn extragradient_t1(inst: &VIInstance, lambda: f64, x: &Vector) -> Result<Vector> {
    inst.check_lambda(lambda)?;
    check_dim(inst.dim(), x.dim())?;
    Ok(inst.step(lambda, x, x))
}

/// `T2 x = P_C(x - lambda A T1 x)`.
pub fn extragradient_t2(inst: &VIInstance, lambda: f64, x: &Vector) -> Result<Vector> {
    let y = extragradient_t1(inst, lambda, x)?;
    Ok(inst.step(lambda, x, &y))
}
