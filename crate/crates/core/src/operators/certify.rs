//! Sampling certifiers for the operator classes.
//!
//! Each certifier evaluates a defining inequality on seeded random samples
//! and reports the worst margin `lhs - rhs` (positive means violated). Sample
//! `i` is drawn from its own ChaCha stream, and the reduction keeps the
//! largest margin with the lowest index on ties, so reports do not depend on
//! how rayon splits the work.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Mapping, VIInstance};
use crate::error::{check_dim, Error, Result};
use crate::hilbert::Vector;

/// Base tolerance for inequalities that are quadratic in the data; scaled by
/// `1 + radius^2`.
pub const CERT_QUADRATIC_TOL: f64 = 1e-9;
/// Tolerance for inequalities between norms.
const CERT_NORM_TOL: f64 = 1e-10;
/// Tolerance of the T-class containment test.
const CERT_TCLASS_TOL: f64 = 1e-9;
/// Residual below which a declared fixed point is accepted.
pub const FIXED_POINT_TOL: f64 = 1e-10;

/// Uniform sampling box `[-radius, radius]^d` with a seed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sampler {
    pub radius: f64,
    pub seed: u64,
}

impl Default for Sampler {
    fn default() -> Self {
        Self {
            radius: 5.0,
            seed: 0,
        }
    }
}

impl Sampler {
    pub const DEFAULT_SAMPLES: usize = 10_000;

    pub fn new(radius: f64, seed: u64) -> Self {
        Self { radius, seed }
    }

    fn rng(&self, index: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(index as u64);
        rng
    }

    fn draw(&self, rng: &mut ChaCha8Rng, dim: usize) -> Vector {
        let r = self.radius;
        Vector::from_raw((0..dim).map(|_| rng.random_range(-r..=r)).collect())
    }

    /// The `index`-th sample point.
    pub fn point(&self, dim: usize, index: usize) -> Vector {
        self.draw(&mut self.rng(index), dim)
    }

    /// The `index`-th sample pair.
    pub fn pair(&self, dim: usize, index: usize) -> (Vector, Vector) {
        let mut rng = self.rng(index);
        let x = self.draw(&mut rng, dim);
        let y = self.draw(&mut rng, dim);
        (x, y)
    }

    fn quadratic_tol(&self) -> f64 {
        CERT_QUADRATIC_TOL * (1.0 + self.radius * self.radius)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertReport {
    pub check: String,
    pub passed: bool,
    pub n_samples: usize,
    pub worst_margin: f64,
    pub witness_x: Option<Vector>,
    pub witness_y: Option<Vector>,
    pub seed: u64,
}

/// Largest margin over `0..n`, lowest index on ties. NaN counts as +inf.
fn worst_index(n: usize, margin: impl Fn(usize) -> f64 + Sync) -> (usize, f64) {
    (0..n)
        .into_par_iter()
        .map(|i| {
            let m = margin(i);
            (i, if m.is_nan() { f64::INFINITY } else { m })
        })
        .reduce(
            || (usize::MAX, f64::NEG_INFINITY),
            |a, b| {
                if b.1 > a.1 || (b.1 == a.1 && b.0 < a.0) {
                    b
                } else {
                    a
                }
            },
        )
}

fn check_samples(n: usize) -> Result<()> {
    if n == 0 {
        Err(Error::InvalidParameter("n_samples must be at least 1".into()))
    } else {
        Ok(())
    }
}

fn report(
    check: &str,
    sampler: &Sampler,
    n: usize,
    (worst, margin): (usize, f64),
    tol: f64,
    witness: impl FnOnce(usize) -> (Vector, Option<Vector>),
) -> CertReport {
    let passed = margin <= tol;
    let (wx, wy) = if passed {
        (None, None)
    } else {
        let (x, y) = witness(worst);
        (Some(x), y)
    };
    CertReport {
        check: check.to_string(),
        passed,
        n_samples: n,
        worst_margin: margin,
        witness_x: wx,
        witness_y: wy,
        seed: sampler.seed,
    }
}

fn pair_report(
    check: &str,
    dim: usize,
    sampler: &Sampler,
    n: usize,
    tol: f64,
    margin: impl Fn(&Vector, &Vector) -> f64 + Sync,
) -> Result<CertReport> {
    check_samples(n)?;
    let worst = worst_index(n, |i| {
        let (x, y) = sampler.pair(dim, i);
        margin(&x, &y)
    });
    Ok(report(check, sampler, n, worst, tol, |i| {
        let (x, y) = sampler.pair(dim, i);
        (x, Some(y))
    }))
}

/// `|Qx - Qy|^2 <= |x - y|^2 + kappa |(I - Q)x - (I - Q)y|^2` on sampled
/// pairs. `kappa = 1` checks pseudocontractivity.
pub fn certify_strict_pseudocontraction(
    q: &Mapping,
    kappa: f64,
    sampler: &Sampler,
    n_samples: usize,
) -> Result<CertReport> {
    if !(0.0..=1.0).contains(&kappa) {
        return Err(Error::InvalidParameter(format!(
            "kappa must lie in [0, 1], got {kappa}"
        )));
    }
    pair_report(
        "strict_pseudocontraction",
        q.dim(),
        sampler,
        n_samples,
        sampler.quadratic_tol(),
        |x, y| {
            let qx = q.apply(x);
            let qy = q.apply(y);
            let d = x - y;
            let dq = &qx - &qy;
            let gap = &d - &dq;
            dq.norm_squared() - d.norm_squared() - kappa * gap.norm_squared()
        },
    )
}

/// Monotonicity `<Au - Av, u - v> >= 0` and Lipschitz continuity
/// `|Au - Av|^2 <= k^2 |u - v|^2`; the margin is the worse of the two.
pub fn certify_monotone_lipschitz(
    a: &Mapping,
    k: f64,
    sampler: &Sampler,
    n_samples: usize,
) -> Result<CertReport> {
    pair_report(
        "monotone_lipschitz",
        a.dim(),
        sampler,
        n_samples,
        sampler.quadratic_tol(),
        |u, v| {
            let d = u - v;
            let da = &a.apply(u) - &a.apply(v);
            let mono = -da.dot(&d);
            let lip = da.norm_squared() - k * k * d.norm_squared();
            mono.max(lip)
        },
    )
}

/// `|Tx - Ty| <= |x - y|` on sampled pairs.
pub fn certify_nonexpansive(t: &Mapping, sampler: &Sampler, n_samples: usize) -> Result<CertReport> {
    pair_report(
        "nonexpansive",
        t.dim(),
        sampler,
        n_samples,
        CERT_NORM_TOL,
        |x, y| t.apply(x).distance(&t.apply(y)) - x.distance(y),
    )
}

fn check_points(dim: usize, points: &[Vector]) -> Result<()> {
    if points.is_empty() {
        return Err(Error::InvalidParameter("point list must be nonempty".into()));
    }
    points.iter().try_for_each(|p| check_dim(dim, p.dim()))
}

/// Worst `(margin, point index)` of `f(x, p)` over the listed points.
fn worst_over(points: &[Vector], f: impl Fn(&Vector) -> f64) -> (f64, usize) {
    points
        .iter()
        .enumerate()
        .map(|(j, p)| (f(p), j))
        .fold((f64::NEG_INFINITY, 0), |a, b| if b.0 > a.0 { b } else { a })
}

/// `|Tx - y| <= |x - y|` for sampled `x` and every listed `y` in `F`.
pub fn certify_f_quasi_nonexpansive(
    t: &Mapping,
    f_points: &[Vector],
    sampler: &Sampler,
    n_samples: usize,
) -> Result<CertReport> {
    check_samples(n_samples)?;
    check_points(t.dim(), f_points)?;
    let dim = t.dim();
    let margin_at = |x: &Vector| {
        let tx = t.apply(x);
        worst_over(f_points, |y| tx.distance(y) - x.distance(y))
    };
    let worst = worst_index(n_samples, |i| margin_at(&sampler.point(dim, i)).0);
    Ok(report(
        "f_quasi_nonexpansive",
        sampler,
        n_samples,
        worst,
        CERT_NORM_TOL,
        |i| {
            let x = sampler.point(dim, i);
            let j = margin_at(&x).1;
            (x, Some(f_points[j].clone()))
        },
    ))
}

/// `Fix(T) ⊂ H(x, Tx)`: `<p - Tx, x - Tx> <= 0` for sampled `x` and each
/// declared fixed point `p`. Rejects points that are not fixed.
pub fn certify_tclass(
    t: &Mapping,
    fix_points: &[Vector],
    sampler: &Sampler,
    n_samples: usize,
) -> Result<CertReport> {
    check_samples(n_samples)?;
    check_points(t.dim(), fix_points)?;
    for p in fix_points {
        let r = t.apply(p).distance(p);
        if r > FIXED_POINT_TOL {
            return Err(Error::NotFixedPoint(r));
        }
    }
    let dim = t.dim();
    let margin_at = |x: &Vector| {
        let tx = t.apply(x);
        let dir = x - &tx;
        worst_over(fix_points, |p| (p - &tx).dot(&dir))
    };
    let worst = worst_index(n_samples, |i| margin_at(&sampler.point(dim, i)).0);
    Ok(report("tclass", sampler, n_samples, worst, CERT_TCLASS_TOL, |i| {
        let x = sampler.point(dim, i);
        let j = margin_at(&x).1;
        (x, Some(fix_points[j].clone()))
    }))
}

/// `<A u, v - u> >= 0` for `v` ranging over projections of sampled points
/// onto `C`. `u` itself must lie in `C`.
pub fn certify_vi_solution(
    inst: &VIInstance,
    u: &Vector,
    sampler: &Sampler,
    n_samples: usize,
) -> Result<CertReport> {
    check_samples(n_samples)?;
    check_dim(inst.dim(), u.dim())?;
    let dim = inst.dim();
    let au = inst.operator().apply(u);
    let tol = sampler.quadratic_tol();
    if !inst.set().contains(u, 1e-9) {
        return Ok(CertReport {
            check: "vi_solution".into(),
            passed: false,
            n_samples,
            worst_margin: inst.set().project(u)?.distance(u),
            witness_x: Some(u.clone()),
            witness_y: None,
            seed: sampler.seed,
        });
    }
    let member = |i: usize| {
        inst.set()
            .project(&sampler.point(dim, i))
            .expect("dimension checked")
    };
    let worst = worst_index(n_samples, |i| -au.dot(&(&member(i) - u)));
    Ok(report("vi_solution", sampler, n_samples, worst, tol, |i| {
        (u.clone(), Some(member(i)))
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::convex::ConvexSet;
    use crate::operators::{t_from_q, ClassTag};

    fn v(c: &[f64]) -> Vector {
        Vector::new(c.to_vec()).unwrap()
    }

    const N: usize = 2000;

    #[test]
    fn spc_examples() {
        let s = Sampler::default();
        let neg2 = Mapping::scaling(2, -2.0);
        let r = certify_strict_pseudocontraction(&neg2, 1.0 / 3.0, &s, N).unwrap();
        assert!(r.passed, "{r:?}");
        assert!(r.witness_x.is_none());

        let r = certify_strict_pseudocontraction(&neg2, 0.2, &s, N).unwrap();
        assert!(!r.passed);
        let (x, y) = (r.witness_x.clone().unwrap(), r.witness_y.clone().unwrap());
        // 4|d|^2 - |d|^2 - 0.2 * 9 |d|^2 = 1.2 |d|^2
        let d2 = (&x - &y).norm_squared();
        assert!((r.worst_margin - 1.2 * d2).abs() < 1e-9 * (1.0 + d2));

        let r = certify_strict_pseudocontraction(&Mapping::identity(3), 0.0, &s, N).unwrap();
        assert!(r.passed);
        assert!(certify_strict_pseudocontraction(&neg2, 1.5, &s, N).is_err());
        assert!(certify_strict_pseudocontraction(&neg2, 0.5, &s, 0).is_err());
    }

    #[test]
    fn monotone_lipschitz_examples() {
        let s = Sampler::default();
        assert!(certify_monotone_lipschitz(&Mapping::identity(2), 1.0, &s, N).unwrap().passed);
        let skew = Mapping::new(2, |x| v(&[x.coords()[1], -x.coords()[0]]));
        assert!(certify_monotone_lipschitz(&skew, 1.0, &s, N).unwrap().passed);
        assert!(!certify_monotone_lipschitz(&skew, 0.9, &s, N).unwrap().passed);
        let r = certify_monotone_lipschitz(&Mapping::scaling(2, -1.0), 10.0, &s, N).unwrap();
        assert!(!r.passed);
        assert!(r.witness_x.is_some() && r.witness_y.is_some());
    }

    #[test]
    fn f_quasi_nonexpansive_examples() {
        let s = Sampler::default();
        let pts = [v(&[0.5, -1.0])];
        assert!(certify_f_quasi_nonexpansive(&Mapping::identity(2), &pts, &s, N).unwrap().passed);

        let set = ConvexSet::boxed(v(&[0.0, 0.0]), v(&[1.0, 1.0])).unwrap();
        let a = Mapping::new(2, |x| x - &v(&[2.0, 2.0]));
        let inst = VIInstance::new(set, a, 1.0, (0.1, 0.9)).unwrap();
        let t2 = inst.t2_map(0.5).unwrap();
        assert!(certify_f_quasi_nonexpansive(&t2, &[v(&[1.0, 1.0])], &s, N).unwrap().passed);

        let shift = Mapping::translation(v(&[1.0, 0.0]));
        let r = certify_f_quasi_nonexpansive(&shift, &[v(&[0.0, 0.0])], &s, N).unwrap();
        assert!(!r.passed);
        assert_eq!(r.witness_y, Some(v(&[0.0, 0.0])));
        assert!(certify_f_quasi_nonexpansive(&shift, &[], &s, N).is_err());
    }

    #[test]
    fn tclass_examples() {
        let s = Sampler::default();
        assert!(certify_tclass(&Mapping::identity(2), &[v(&[3.0, 1.0])], &s, N).unwrap().passed);
        let q = Mapping::scaling(2, -2.0).with_tag(ClassTag::StrictPseudocontraction { kappa: 1.0 / 3.0 });
        let t = t_from_q(&q, 1.0 / 3.0).unwrap();
        assert!(certify_tclass(&t, &[v(&[0.0, 0.0])], &s, N).unwrap().passed);
        let shift = Mapping::translation(v(&[1.0, 0.0]));
        assert!(matches!(
            certify_tclass(&shift, &[v(&[0.0, 0.0])], &s, N),
            Err(Error::NotFixedPoint(_))
        ));
    }

    #[test]
    fn reports_are_deterministic_and_serialize() {
        let s = Sampler::new(5.0, 42);
        let neg2 = Mapping::scaling(2, -2.0);
        let a = certify_strict_pseudocontraction(&neg2, 0.2, &s, 5000).unwrap();
        let b = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| certify_strict_pseudocontraction(&neg2, 0.2, &s, 5000).unwrap());
        assert_eq!(a, b);
        let json: serde_json::Value = serde_json::to_value(&a).unwrap();
        for key in ["check", "passed", "n_samples", "worst_margin", "witness_x", "witness_y", "seed"] {
            assert!(json.get(key).is_some(), "missing {key}");
        }
        assert_eq!(json["seed"], 42);
    }

    #[test]
    fn vi_solution_check() {
        let set = ConvexSet::boxed(v(&[-1.0, -1.0]), v(&[1.0, 1.0])).unwrap();
        let a = Mapping::new(2, |x| v(&[x.coords()[1] + 0.5, -x.coords()[0] - 0.5]));
        let inst = VIInstance::new(set, a, 1.0, (0.1, 0.9)).unwrap();
        let s = Sampler::default();
        assert!(certify_vi_solution(&inst, &v(&[-0.5, -0.5]), &s, N).unwrap().passed);
        assert!(!certify_vi_solution(&inst, &v(&[0.5, 0.0]), &s, N).unwrap().passed);
        assert!(!certify_vi_solution(&inst, &v(&[3.0, 0.0]), &s, N).unwrap().passed);
    }
}
