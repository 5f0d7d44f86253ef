//! Problem instances with independently known solutions, and the brute-force
//! grid oracle for small variational inequalities.
//!
//! Instances are described by [`InstanceSpec`], a JSON-serializable record,
//! and built into a [`ProblemInstance`] that has passed its own certifiers.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algorithms::{Schedule, Sequence, WeightSchedule};
use crate::convex::ConvexSet;
use crate::error::{check_dim, Error, Result};
use crate::hilbert::Vector;
use crate::linalg::{from_dvector, solve_affine, spectral_norm, to_dvector};
use crate::operators::{
    averaged_map, certify_monotone_lipschitz, certify_nonexpansive,
    certify_strict_pseudocontraction, compose, halve_shift, t_from_q, t_from_q_alpha_form,
    ClassTag, Mapping, PointSet, Sampler, VIInstance,
};

/// Multiplicative safety margin applied to sampled kappa estimates whose
/// ratio varied across samples.
const KAPPA_INFLATION: f64 = 1.05;
const KAPPA_SAMPLES: usize = 20_000;
const DEFAULT_LAMBDA_BOUNDS: (f64, f64) = (0.1, 0.9);
const MAX_ORACLE_DIM: usize = 3;

/// `x -> M x + shift`, stored row-major for JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffineSpec {
    pub matrix: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shift: Option<Vector>,
}

impl AffineSpec {
    pub fn linear(matrix: Vec<Vec<f64>>) -> Self {
        Self {
            matrix,
            shift: None,
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.len()
    }

    pub fn matrix(&self) -> Result<DMatrix<f64>> {
        let d = self.matrix.len();
        if d == 0 {
            return Err(Error::EmptyVector);
        }
        for row in &self.matrix {
            check_dim(d, row.len())?;
            if row.iter().any(|c| !c.is_finite()) {
                return Err(Error::InvalidParameter("matrix entries must be finite".into()));
            }
        }
        Ok(DMatrix::from_fn(d, d, |i, j| self.matrix[i][j]))
    }

    pub fn shift(&self) -> Vector {
        self.shift.clone().unwrap_or_else(|| Vector::zeros(self.dim()))
    }

    pub fn to_mapping(&self) -> Result<Mapping> {
        Mapping::affine(self.matrix()?, self.shift())
    }

    /// `{ x : M x + shift = x }`; an empty point list when there is none.
    pub fn fixed_set(&self) -> Result<PointSet> {
        let d = self.dim();
        let m = self.matrix()? - DMatrix::identity(d, d);
        let rhs = -to_dvector(&self.shift());
        Ok(affine_solution_set(&m, &rhs, d))
    }
}

fn affine_solution_set(m: &DMatrix<f64>, rhs: &DVector<f64>, d: usize) -> PointSet {
    match solve_affine(m, rhs, 1e-10) {
        None => PointSet::Points(vec![]),
        Some((_, kernel)) if kernel.len() == d => PointSet::Set(ConvexSet::WholeSpace),
        Some((x, kernel)) if kernel.is_empty() => PointSet::point(from_dvector(&x)),
        Some((x, kernel)) => {
            let dirs = kernel.iter().map(from_dvector).collect();
            PointSet::Set(
                ConvexSet::affine_subspace(from_dvector(&x), dirs)
                    .expect("SVD kernel basis is orthonormal"),
            )
        }
    }
}

fn matrix_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

/// Sampled estimate of the smallest kappa for which `x -> M x` satisfies the
/// strict pseudocontraction inequality.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KappaEstimate {
    /// Largest sampled ratio `(|Md|^2 - |d|^2) / |(I - M)d|^2`, floored at 0.
    pub sampled: f64,
    /// Declared constant: `sampled` when the ratio was constant over the
    /// samples, otherwise inflated by 5% and kept below 1.
    pub declared: f64,
}

pub fn estimate_kappa(matrix: &DMatrix<f64>, sampler: &Sampler, n_samples: usize) -> Result<KappaEstimate> {
    let d = matrix.nrows();
    let ratios: Vec<f64> = (0..n_samples)
        .into_par_iter()
        .filter_map(|i| {
            let dir = to_dvector(&sampler.point(d, i));
            let md = matrix * &dir;
            let gap = (&md - &dir).norm_squared();
            let dn = dir.norm_squared();
            if dn == 0.0 || gap <= 1e-14 * dn {
                return None;
            }
            let r = (md.norm_squared() - dn) / gap;
            Some(if r.abs() < 1e-12 { 0.0 } else { r.max(0.0) })
        })
        .collect();
    let max = ratios.iter().copied().fold(0.0f64, f64::max);
    let min = ratios.iter().copied().fold(max, f64::min);
    if max >= 1.0 {
        return Err(Error::NotStrictPseudocontraction(max));
    }
    let declared = if max - min <= 1e-9 {
        max
    } else {
        (KAPPA_INFLATION * max).min(0.5 * (1.0 + max))
    };
    Ok(KappaEstimate {
        sampled: max,
        declared,
    })
}

/// `x -> M x` tagged with its sampled strict-pseudocontraction constant and
/// its fixed set `ker(M - I)`.
pub fn make_linear_spc(matrix: &DMatrix<f64>) -> Result<Mapping> {
    let spec = AffineSpec::linear(matrix_rows(matrix));
    make_affine_spc(&spec, None, &Sampler::default()).map(|(m, _)| m)
}

/// Affine strict pseudocontraction. With `declared` given, that constant is
/// used instead of the sampled one; either way the map must pass
/// [`certify_strict_pseudocontraction`] at the tagged constant.
pub fn make_affine_spc(
    spec: &AffineSpec,
    declared: Option<f64>,
    sampler: &Sampler,
) -> Result<(Mapping, KappaEstimate)> {
    let matrix = spec.matrix()?;
    let est = estimate_kappa(&matrix, sampler, KAPPA_SAMPLES)?;
    let kappa = declared.unwrap_or(est.declared);
    let mapping = spec
        .to_mapping()?
        .with_tag(ClassTag::strict_pseudocontraction(kappa)?)
        .with_fixed_set(spec.fixed_set()?);
    let report = certify_strict_pseudocontraction(&mapping, kappa, sampler, Sampler::DEFAULT_SAMPLES)?;
    if !report.passed {
        return Err(Error::NotStrictPseudocontraction(kappa));
    }
    Ok((mapping, est))
}

/// `Q_n = sum_i w_{n,i} S_i`, a strict pseudocontraction with
/// `kappa = max kappa_i` and `Fix(Q_n) = ∩ Fix(S_i)`.
#[derive(Debug, Clone)]
pub struct OperatorFamily {
    members: Vec<Mapping>,
    weights: WeightSchedule,
    kappa: f64,
    fixed: Option<PointSet>,
}

impl OperatorFamily {
    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn fixed_set(&self) -> Option<&PointSet> {
        self.fixed.as_ref()
    }

    pub fn dim(&self) -> usize {
        self.members[0].dim()
    }

    pub fn members(&self) -> &[Mapping] {
        &self.members
    }

    pub fn at(&self, n: usize) -> Mapping {
        let tag = ClassTag::StrictPseudocontraction { kappa: self.kappa };
        let base = if self.members.len() == 1 {
            self.members[0].clone()
        } else {
            let members = self.members.clone();
            let w = self.weights.at(n).to_vec();
            Mapping::new(self.dim(), move |x| {
                members
                    .iter()
                    .zip(&w)
                    .fold(Vector::zeros(x.dim()), |acc, (s, wi)| acc.lin_comb(1.0, &s.apply(x), *wi))
            })
        };
        let m = base.with_tag(tag);
        match &self.fixed {
            Some(f) => m.with_fixed_set(f.clone()),
            None => m,
        }
    }
}

pub fn make_family(members: Vec<Mapping>, weights: WeightSchedule) -> Result<OperatorFamily> {
    let Some(first) = members.first() else {
        return Err(Error::InvalidParameter("family needs at least one map".into()));
    };
    let dim = first.dim();
    let mut kappa = 0.0f64;
    for s in &members {
        check_dim(dim, s.dim())?;
        match s.tag().kappa() {
            Some(k) => kappa = kappa.max(k),
            None => {
                return Err(Error::InvalidParameter(format!(
                    "family member tagged {:?} is not a strict pseudocontraction",
                    s.tag()
                )))
            }
        }
    }
    for n in 0..weights.len() {
        check_dim(members.len(), weights.at(n).len())?;
    }
    let mut fixed = members[0].fixed_set().cloned();
    for s in &members[1..] {
        fixed = match (fixed, s.fixed_set()) {
            (Some(a), Some(b)) => a.intersect(b, 1e-9),
            _ => None,
        };
    }
    Ok(OperatorFamily {
        members,
        weights,
        kappa,
        fixed,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OperatorSpec {
    /// A single affine strict pseudocontraction.
    Spc {
        matrix: Vec<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        shift: Option<Vector>,
    },
    /// Convex combinations of affine strict pseudocontractions.
    SpcFamily {
        members: Vec<AffineSpec>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        weights: Option<Vec<Vec<f64>>>,
    },
    /// `A x = M x + shift` on the instance set.
    Vi {
        matrix: Vec<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        shift: Option<Vector>,
    },
    /// As `Vi`, composed with `R_n = alpha_n I + (1 - alpha_n) S`.
    ComposedVi {
        matrix: Vec<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        shift: Option<Vector>,
        s: AffineSpec,
        alpha: Sequence,
    },
}

/// JSON description of an instance:
/// `{dim, set, operator: {kind, ...}, kappa | k, lambda_bounds, oracle}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceSpec {
    pub dim: usize,
    #[serde(default = "whole_space")]
    pub set: ConvexSet,
    pub operator: OperatorSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_bounds: Option<(f64, f64)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle: Option<PointSet>,
}

fn whole_space() -> ConvexSet {
    ConvexSet::WholeSpace
}

#[derive(Debug, Clone)]
pub enum ProblemKind {
    FixedPointFamily(OperatorFamily),
    Vi(VIInstance),
    ComposedVi {
        vi: VIInstance,
        s: Mapping,
        alpha: Sequence,
    },
}

#[derive(Debug, Clone)]
pub struct ProblemInstance {
    pub dim: usize,
    pub set: ConvexSet,
    pub kind: ProblemKind,
    pub oracle: Option<PointSet>,
    spec: InstanceSpec,
}

/// Build options: certification sampler and grid-oracle resolution.
#[derive(Debug, Clone, Copy, Default)]
pub struct BuildOptions {
    pub sampler: Sampler,
    pub grid_resolution: Option<usize>,
}

impl InstanceSpec {
    pub fn build(&self, opts: &BuildOptions) -> Result<ProblemInstance> {
        if self.dim == 0 {
            return Err(Error::EmptyVector);
        }
        if let Some(d) = self.set.dim() {
            check_dim(self.dim, d)?;
        }
        let mut spec = self.clone();
        let (kind, oracle) = match &self.operator {
            OperatorSpec::Spc { matrix, shift } => {
                let member = AffineSpec {
                    matrix: matrix.clone(),
                    shift: shift.clone(),
                };
                let family = self.build_family(&[member], None, opts)?;
                spec.kappa = Some(family.kappa());
                let oracle = self.oracle.clone().or_else(|| family.fixed_set().cloned());
                (ProblemKind::FixedPointFamily(family), oracle)
            }
            OperatorSpec::SpcFamily { members, weights } => {
                let family = self.build_family(members, weights.clone(), opts)?;
                spec.kappa = Some(family.kappa());
                let oracle = self.oracle.clone().or_else(|| family.fixed_set().cloned());
                (ProblemKind::FixedPointFamily(family), oracle)
            }
            OperatorSpec::Vi { matrix, shift } => {
                let a = AffineSpec {
                    matrix: matrix.clone(),
                    shift: shift.clone(),
                };
                let (vi, oracle) = self.build_vi(&a, opts)?;
                spec.k = Some(vi.lipschitz());
                spec.lambda_bounds = Some(vi.lambda_bounds());
                (ProblemKind::Vi(vi), oracle)
            }
            OperatorSpec::ComposedVi {
                matrix,
                shift,
                s,
                alpha,
            } => {
                let a = AffineSpec {
                    matrix: matrix.clone(),
                    shift: shift.clone(),
                };
                check_dim(self.dim, s.dim())?;
                let (vi, vi_oracle) = self.build_vi(&a, opts)?;
                let s_map = s
                    .to_mapping()?
                    .with_tag(ClassTag::Nonexpansive)
                    .with_fixed_set(s.fixed_set()?);
                let report = certify_nonexpansive(&s_map, &opts.sampler, Sampler::DEFAULT_SAMPLES)?;
                if !report.passed {
                    return Err(Error::InvalidParameter(format!(
                        "S failed nonexpansivity certification (margin {:e})",
                        report.worst_margin
                    )));
                }
                if alpha.values().is_empty() || alpha.values().iter().any(|a| !(0.0..1.0).contains(a)) {
                    return Err(Error::InvalidParameter("alpha must lie in [0, 1)".into()));
                }
                let oracle = match (&self.oracle, vi_oracle) {
                    (Some(o), _) => Some(o.clone()),
                    (None, Some(f)) => {
                        let both = f
                            .intersect(s_map.fixed_set().expect("set above"), 1e-9)
                            .ok_or_else(|| {
                                Error::InvalidParameter("cannot intersect VI solutions with Fix(S)".into())
                            })?;
                        if both.is_empty() {
                            return Err(Error::InvalidParameter(
                                "VI(C, A) and Fix(S) do not intersect".into(),
                            ));
                        }
                        Some(both)
                    }
                    (None, None) => None,
                };
                spec.k = Some(vi.lipschitz());
                spec.lambda_bounds = Some(vi.lambda_bounds());
                (
                    ProblemKind::ComposedVi {
                        vi,
                        s: s_map,
                        alpha: alpha.clone(),
                    },
                    oracle,
                )
            }
        };
        spec.oracle = oracle.clone();
        Ok(ProblemInstance {
            dim: self.dim,
            set: self.set.clone(),
            kind,
            oracle,
            spec,
        })
    }

    fn build_family(
        &self,
        members: &[AffineSpec],
        weights: Option<Vec<Vec<f64>>>,
        opts: &BuildOptions,
    ) -> Result<OperatorFamily> {
        let maps = members
            .iter()
            .map(|m| {
                check_dim(self.dim, m.dim())?;
                make_affine_spc(m, self.kappa, &opts.sampler).map(|(q, _)| q)
            })
            .collect::<Result<Vec<_>>>()?;
        let weights = match weights {
            Some(rows) => WeightSchedule::new(rows, maps.len(), 1e-6)?,
            None => WeightSchedule::uniform(maps.len()),
        };
        let family = make_family(maps, weights)?;
        for n in 0..family.weights.len() {
            let r = certify_strict_pseudocontraction(
                &family.at(n),
                family.kappa(),
                &opts.sampler,
                Sampler::DEFAULT_SAMPLES,
            )?;
            if !r.passed {
                return Err(Error::NotStrictPseudocontraction(family.kappa()));
            }
        }
        Ok(family)
    }

    fn build_vi(&self, a: &AffineSpec, opts: &BuildOptions) -> Result<(VIInstance, Option<PointSet>)> {
        check_dim(self.dim, a.dim())?;
        let inst = make_affine_vi(
            &a.matrix()?,
            &a.shift(),
            self.set.clone(),
            self.lambda_bounds.unwrap_or(DEFAULT_LAMBDA_BOUNDS),
            opts,
        )?;
        let oracle = self.oracle.clone().or(inst.solution);
        Ok((inst.vi, oracle))
    }
}

/// Outcome of [`make_affine_vi`].
#[derive(Debug, Clone)]
pub struct AffineVi {
    pub vi: VIInstance,
    pub solution: Option<PointSet>,
}

/// `A x = M x + q` on `set`, with `k = |M|_2` by power iteration and a known
/// solution when one can be found: a zero of `A` lying in `set`, or else the
/// grid oracle for small bounded sets.
pub fn make_affine_vi(
    matrix: &DMatrix<f64>,
    shift: &Vector,
    set: ConvexSet,
    lambda_bounds: (f64, f64),
    opts: &BuildOptions,
) -> Result<AffineVi> {
    let d = shift.dim();
    check_dim(d, matrix.nrows())?;
    let norm = spectral_norm(matrix);
    // A constant map is k-Lipschitz for every k > 0.
    let k = if norm > 0.0 { norm } else { 1.0 };
    let a = Mapping::affine(matrix.clone(), shift.clone())?.with_tag(ClassTag::monotone_lipschitz(k)?);
    let report = certify_monotone_lipschitz(&a, k, &opts.sampler, Sampler::DEFAULT_SAMPLES)?;
    if !report.passed {
        return Err(Error::NotMonotone(report.worst_margin));
    }
    let vi = VIInstance::new(set.clone(), a.clone(), k, lambda_bounds)?;

    let zeros = affine_solution_set(matrix, &(-to_dvector(shift)), d);
    let solution = match &zeros {
        PointSet::Points(ps) if ps.len() == 1 && set.contains(&ps[0], 1e-12) => Some(zeros.clone()),
        _ if d <= MAX_ORACLE_DIM && set.bounding_box().is_ok() => {
            let res = opts
                .grid_resolution
                .unwrap_or(if d <= 2 { 201 } else { 41 });
            Some(PointSet::point(vi_grid_oracle(&set, &a, res)?))
        }
        _ => None,
    };
    Ok(AffineVi { vi, solution })
}

/// Grid-oracle result with its defect and grid spacing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSolution {
    pub point: Vector,
    /// `max_v <A u, u - v>` over the candidate vertices; 0 for an exact
    /// grid solution.
    pub defect: f64,
    /// Largest coarse grid spacing over the axes.
    pub spacing: f64,
    pub resolution: usize,
}

/// Brute-force VI solution on a `resolution^d` grid over the bounding box of
/// `set`. Ties go to the first minimizer in lexicographic scan order.
pub fn vi_grid_oracle(set: &ConvexSet, a: &Mapping, resolution: usize) -> Result<Vector> {
    vi_grid_oracle_report(set, a, resolution).map(|g| g.point)
}

pub fn vi_grid_oracle_report(set: &ConvexSet, a: &Mapping, resolution: usize) -> Result<GridSolution> {
    let (lo, hi) = set.bounding_box()?;
    let d = lo.dim();
    check_dim(a.dim(), d)?;
    if d > MAX_ORACLE_DIM {
        return Err(Error::InvalidParameter(format!(
            "grid oracle supports d <= {MAX_ORACLE_DIM}, got {d}"
        )));
    }
    if resolution < 2 {
        return Err(Error::InvalidParameter("grid resolution must be at least 2".into()));
    }
    let coarse = Grid::new(&lo, &hi, resolution);
    let members: Vec<Option<Vector>> = (0..coarse.len())
        .into_par_iter()
        .map(|i| {
            let p = coarse.point(i);
            set.contains(&p, 1e-12).then_some(p)
        })
        .collect();
    if members.iter().all(Option::is_none) {
        return Err(Error::InvalidParameter("no grid point lies in the set".into()));
    }

    // A linear function attains its grid minimum at a point with some axis
    // neighbour outside the grid or the set, unless it is constant.
    let vertices: Vec<Vector> = (0..coarse.len())
        .filter_map(|i| {
            let p = members[i].as_ref()?;
            let boundary = coarse
                .neighbours(i)
                .into_iter()
                .any(|nb| nb.is_none_or(|j| members[j].is_none()));
            boundary.then(|| p.clone())
        })
        .collect();

    let defect = |u: &Vector| {
        let au = a.apply(u);
        let lowest = vertices
            .iter()
            .map(|v| au.dot(v))
            .fold(f64::INFINITY, f64::min);
        (au.dot(u) - lowest).max(0.0)
    };

    let argmin = |pts: &(dyn Fn(usize) -> Option<Vector> + Sync), n: usize| {
        (0..n)
            .into_par_iter()
            .filter_map(|i| pts(i).map(|p| (defect(&p), i)))
            .reduce_with(|a, b| if b.0 < a.0 || (b.0 == a.0 && b.1 < a.1) { b } else { a })
    };

    let (best_phi, best_i) = argmin(&|i| members[i].clone(), coarse.len()).expect("nonempty grid");
    let mut point = members[best_i].clone().expect("member");
    let mut phi = best_phi;

    // One local refinement over the neighbouring cells.
    let flo = point.zip_map(&coarse.spacing, |c, h| c - h);
    let fhi = point.zip_map(&coarse.spacing, |c, h| c + h);
    let fine = Grid::new(&flo, &fhi, resolution);
    let fine_member = |i: usize| {
        let p = fine.point(i);
        set.contains(&p, 1e-12).then_some(p)
    };
    if let Some((fphi, fi)) = argmin(&fine_member, fine.len()) {
        if fphi < phi {
            phi = fphi;
            point = fine.point(fi);
        }
    }

    Ok(GridSolution {
        point,
        defect: phi,
        spacing: coarse.spacing.coords().iter().copied().fold(0.0, f64::max),
        resolution,
    })
}

/// Regular grid; index `i` maps to coordinates in lexicographic order with
/// the first axis varying slowest.
struct Grid {
    lo: Vector,
    spacing: Vector,
    counts: Vec<usize>,
}

impl Grid {
    fn new(lo: &Vector, hi: &Vector, resolution: usize) -> Self {
        let counts: Vec<usize> = lo
            .coords()
            .iter()
            .zip(hi.coords())
            .map(|(l, h)| if h > l { resolution } else { 1 })
            .collect();
        let spacing = Vector::from_raw(
            lo.coords()
                .iter()
                .zip(hi.coords())
                .zip(&counts)
                .map(|((l, h), &c)| if c > 1 { (h - l) / (c - 1) as f64 } else { 0.0 })
                .collect(),
        );
        Self {
            lo: lo.clone(),
            spacing,
            counts,
        }
    }

    fn len(&self) -> usize {
        self.counts.iter().product()
    }

    fn index_tuple(&self, mut i: usize) -> Vec<usize> {
        let mut out = vec![0; self.counts.len()];
        for ax in (0..self.counts.len()).rev() {
            out[ax] = i % self.counts[ax];
            i /= self.counts[ax];
        }
        out
    }

    fn flat(&self, idx: &[usize]) -> usize {
        idx.iter().zip(&self.counts).fold(0, |acc, (i, c)| acc * c + i)
    }

    fn point(&self, i: usize) -> Vector {
        let idx = self.index_tuple(i);
        Vector::from_raw(
            idx.iter()
                .enumerate()
                .map(|(ax, &k)| self.lo.coords()[ax] + k as f64 * self.spacing.coords()[ax])
                .collect(),
        )
    }

    /// Axis neighbours of `i` (`None` when off the grid); axes with a single
    /// grid value are skipped.
    fn neighbours(&self, i: usize) -> Vec<Option<usize>> {
        let idx = self.index_tuple(i);
        let mut out = Vec::new();
        for ax in 0..idx.len() {
            if self.counts[ax] == 1 {
                continue;
            }
            for delta in [-1isize, 1] {
                let k = idx[ax] as isize + delta;
                if k < 0 || k >= self.counts[ax] as isize {
                    out.push(None);
                } else {
                    let mut nb = idx.clone();
                    nb[ax] = k as usize;
                    out.push(Some(self.flat(&nb)));
                }
            }
        }
        out
    }
}

/// `A = I - Q` for a pseudocontractive `Q` with Lipschitz constant
/// `lipschitz_q`; monotone and `(lipschitz_q + 1)`-Lipschitz, with
/// `Fix(Q)` equal to the zeros of `A`.
pub fn monotone_from_pseudocontraction(q: &Mapping, lipschitz_q: f64) -> Result<Mapping> {
    let inner = q.clone();
    let mut a = Mapping::new(q.dim(), move |x| x - &inner.apply(x))
        .with_tag(ClassTag::monotone_lipschitz(lipschitz_q + 1.0)?);
    if let Some(f) = q.fixed_set() {
        a = a.with_fixed_set(f.clone());
    }
    Ok(a)
}

impl ProblemInstance {
    /// The instance in its JSON form, with derived `kappa`/`k` and oracle.
    pub fn spec(&self) -> &InstanceSpec {
        &self.spec
    }

    pub fn variant(&self) -> &'static str {
        match self.kind {
            ProblemKind::FixedPointFamily(_) => "spc",
            ProblemKind::Vi(_) => "extragradient",
            ProblemKind::ComposedVi { .. } => "extragradient-composed",
        }
    }

    pub fn kappa(&self) -> Option<f64> {
        match &self.kind {
            ProblemKind::FixedPointFamily(f) => Some(f.kappa()),
            _ => None,
        }
    }

    pub fn vi(&self) -> Option<&VIInstance> {
        match &self.kind {
            ProblemKind::FixedPointFamily(_) => None,
            ProblemKind::Vi(vi) | ProblemKind::ComposedVi { vi, .. } => Some(vi),
        }
    }

    /// The operator sequence `T_n` handed to either driver:
    /// * fixed-point families: `t_from_q(Q_n, kappa)` (the alpha form when
    ///   the schedule sets alpha);
    /// * VI: `halve_shift(T2_n)`;
    /// * composed VI: `halve_shift(R_n ∘ T2_n)` with `R_n = averaged_map(S, alpha_n)`.
    ///
    /// Schedule values are validated here, before any step runs.
    pub fn operators(&self, schedule: &Schedule) -> Result<Box<dyn Fn(usize) -> Mapping + Send + Sync>> {
        match &self.kind {
            ProblemKind::FixedPointFamily(family) => {
                let kappa = family.kappa();
                let mut family = family.clone();
                if schedule.weights.is_some() {
                    family.weights = schedule.weights_for(family.members.len())?;
                }
                let alpha = match &schedule.alpha {
                    Some(_) => Some(schedule.alpha_for(kappa)?),
                    None => None,
                };
                // Surface construction errors now rather than inside the driver.
                match &alpha {
                    Some(a) => t_from_q_alpha_form(&family.at(0), kappa, a.at(0))?,
                    None => t_from_q(&family.at(0), kappa)?,
                };
                Ok(Box::new(move |n| {
                    let q = family.at(n);
                    match &alpha {
                        Some(a) => t_from_q_alpha_form(&q, kappa, a.at(n)),
                        None => t_from_q(&q, kappa),
                    }
                    .expect("validated above")
                }))
            }
            ProblemKind::Vi(vi) => {
                let lambda = schedule.lambda_for(vi.lipschitz(), vi.lambda_bounds())?;
                let vi = vi.clone();
                Ok(Box::new(move |n| {
                    halve_shift(&vi.t2_map(lambda.at(n)).expect("validated above"))
                }))
            }
            ProblemKind::ComposedVi { vi, s, alpha } => {
                let lambda = schedule.lambda_for(vi.lipschitz(), vi.lambda_bounds())?;
                let (vi, s, alpha) = (vi.clone(), s.clone(), alpha.clone());
                Ok(Box::new(move |n| {
                    let t2 = vi.t2_map(lambda.at(n)).expect("validated above");
                    let r = averaged_map(&s, alpha.at(n)).expect("validated at build");
                    halve_shift(&compose(&r, &t2).expect("same dimension"))
                }))
            }
        }
    }
}

/// Random linear strict pseudocontraction in dimension `dim`, drawn by
/// rejection from scaled Gaussian-like matrices.
pub fn random_linear_spc(dim: usize, seed: u64) -> Result<Mapping> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..1000 {
        let scale = rng.random_range(0.3..1.5);
        let m = DMatrix::from_fn(dim, dim, |_, _| scale * (rng.random::<f64>() * 2.0 - 1.0));
        let spec = AffineSpec::linear(matrix_rows(&m));
        let sampler = Sampler::new(5.0, rng.random());
        match make_affine_spc(&spec, None, &sampler) {
            Ok((q, est)) if est.sampled < 0.9 => return Ok(q),
            _ => continue,
        }
    }
    Err(Error::InvalidParameter("no strict pseudocontraction drawn".into()))
}

/// Ready-made instances used throughout the tests and examples.
pub mod catalog {
    use super::*;

    fn v(c: &[f64]) -> Vector {
        Vector::new(c.to_vec()).expect("finite literal")
    }

    pub fn rotation_90() -> AffineSpec {
        AffineSpec::linear(vec![vec![0.0, -1.0], vec![1.0, 0.0]])
    }

    pub fn minus_two_identity() -> AffineSpec {
        AffineSpec::linear(vec![vec![-2.0, 0.0], vec![0.0, -2.0]])
    }

    /// Equal-weight mix of the 90 degree rotation and `-2I`; `F = {0}`.
    pub fn rotation_scaling_family() -> InstanceSpec {
        InstanceSpec {
            dim: 2,
            set: ConvexSet::WholeSpace,
            operator: OperatorSpec::SpcFamily {
                members: vec![rotation_90(), minus_two_identity()],
                weights: Some(vec![vec![0.5, 0.5]]),
            },
            kappa: None,
            k: None,
            lambda_bounds: None,
            oracle: None,
        }
    }

    /// Projection onto the line `x_2 = 0`, as a single strict pseudocontraction.
    pub fn axis_projection() -> InstanceSpec {
        InstanceSpec {
            dim: 2,
            set: ConvexSet::WholeSpace,
            operator: OperatorSpec::Spc {
                matrix: vec![vec![1.0, 0.0], vec![0.0, 0.0]],
                shift: None,
            },
            kappa: None,
            k: None,
            lambda_bounds: None,
            oracle: None,
        }
    }

    /// `x -> x + (1, 0)`, which has no fixed point.
    pub fn translation() -> InstanceSpec {
        InstanceSpec {
            dim: 2,
            set: ConvexSet::WholeSpace,
            operator: OperatorSpec::Spc {
                matrix: vec![vec![1.0, 0.0], vec![0.0, 1.0]],
                shift: Some(v(&[1.0, 0.0])),
            },
            kappa: None,
            k: None,
            lambda_bounds: None,
            oracle: None,
        }
    }

    pub fn skew_matrix() -> Vec<Vec<f64>> {
        vec![vec![0.0, 1.0], vec![-1.0, 0.0]]
    }

    pub fn square(r: f64) -> ConvexSet {
        ConvexSet::boxed(v(&[-r, -r]), v(&[r, r])).expect("valid box")
    }

    /// Skew operator on `[-1, 1]^2` with interior solution `(-0.5, -0.5)`.
    pub fn skew_vi() -> InstanceSpec {
        InstanceSpec {
            dim: 2,
            set: square(1.0),
            operator: OperatorSpec::Vi {
                matrix: skew_matrix(),
                shift: Some(v(&[0.5, -0.5])),
            },
            kappa: None,
            k: None,
            lambda_bounds: None,
            oracle: None,
        }
    }

    /// Skew operator with solution `(-0.5, 0)` composed with averaging toward
    /// the projection onto `x_2 = 0`.
    pub fn composed_skew_vi(alpha: f64) -> InstanceSpec {
        InstanceSpec {
            dim: 2,
            set: square(1.0),
            operator: OperatorSpec::ComposedVi {
                matrix: skew_matrix(),
                shift: Some(v(&[0.0, -0.5])),
                s: AffineSpec::linear(vec![vec![1.0, 0.0], vec![0.0, 0.0]]),
                alpha: Sequence::Constant(alpha),
            },
            kappa: None,
            k: None,
            lambda_bounds: None,
            oracle: None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(c: &[f64]) -> Vector {
        Vector::new(c.to_vec()).unwrap()
    }

    fn dm(rows: &[&[f64]]) -> DMatrix<f64> {
        DMatrix::from_fn(rows.len(), rows.len(), |i, j| rows[i][j])
    }

    #[test]
    fn linear_spc_examples() {
        let id = make_linear_spc(&DMatrix::identity(2, 2)).unwrap();
        assert_eq!(id.tag().kappa(), Some(0.0));
        assert_eq!(id.fixed_set(), Some(&PointSet::Set(ConvexSet::WholeSpace)));

        let neg2 = make_linear_spc(&dm(&[&[-2.0, 0.0], &[0.0, -2.0]])).unwrap();
        let k = neg2.tag().kappa().unwrap();
        assert!((k - 1.0 / 3.0).abs() < 1e-12, "{k}");
        assert!(neg2.fixed_set().unwrap().contains(&v(&[0.0, 0.0]), 1e-12));
        assert_eq!(neg2.fixed_set().unwrap().sample_points().len(), 1);

        let rot = make_linear_spc(&dm(&[&[0.0, -1.0], &[1.0, 0.0]])).unwrap();
        assert_eq!(rot.tag().kappa(), Some(0.0));
        assert_eq!(rot.fixed_set(), Some(&PointSet::point(Vector::zeros(2))));
    }

    #[test]
    fn linear_spc_rejects_expansive_maps() {
        assert!(matches!(
            make_linear_spc(&dm(&[&[2.0, 0.0], &[0.0, 2.0]])),
            Err(Error::NotStrictPseudocontraction(_))
        ));
    }

    #[test]
    fn fixed_set_of_affine_maps() {
        let proj = AffineSpec::linear(vec![vec![1.0, 0.0], vec![0.0, 0.0]]);
        let f = proj.fixed_set().unwrap();
        assert!(f.contains(&v(&[7.0, 0.0]), 1e-12));
        assert!(!f.contains(&v(&[0.0, 1.0]), 1e-6));
        assert!(catalog::translation().operator != catalog::axis_projection().operator);
        let shift = AffineSpec {
            matrix: vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            shift: Some(v(&[1.0, 0.0])),
        };
        assert!(shift.fixed_set().unwrap().is_empty());
    }

    #[test]
    fn affine_vi_examples() {
        let opts = BuildOptions::default();
        let unit = ConvexSet::boxed(v(&[0.0, 0.0]), v(&[1.0, 1.0])).unwrap();
        let inst = make_affine_vi(&DMatrix::identity(2, 2), &v(&[-2.0, -2.0]), unit, (0.1, 0.9), &opts)
            .unwrap();
        let sol = inst.solution.unwrap().sample_points()[0].clone();
        assert!(sol.distance(&v(&[1.0, 1.0])) <= 0.01);
        assert!((inst.vi.lipschitz() - 1.0).abs() < 1e-12);

        let skew = dm(&[&[0.0, 1.0], &[-1.0, 0.0]]);
        let inst = make_affine_vi(&skew, &v(&[0.5, -0.5]), catalog::square(1.0), (0.1, 0.9), &opts).unwrap();
        let u = &inst.solution.unwrap().sample_points()[0];
        assert!(u.distance(&v(&[-0.5, -0.5])) < 1e-12);
        let inst = make_affine_vi(&skew, &v(&[0.0, -0.5]), catalog::square(1.0), (0.1, 0.9), &opts).unwrap();
        let u = &inst.solution.unwrap().sample_points()[0];
        assert!(u.distance(&v(&[-0.5, 0.0])) < 1e-12);
    }

    #[test]
    fn affine_vi_rejects_non_monotone() {
        let r = make_affine_vi(
            &(-DMatrix::<f64>::identity(2, 2)),
            &Vector::zeros(2),
            ConvexSet::WholeSpace,
            (0.1, 0.9),
            &BuildOptions::default(),
        );
        assert!(matches!(r, Err(Error::NotMonotone(_))));
    }

    #[test]
    fn family_examples() {
        let sampler = Sampler::default();
        let (rot, _) = make_affine_spc(&catalog::rotation_90(), None, &sampler).unwrap();
        let (neg2, _) = make_affine_spc(&catalog::minus_two_identity(), None, &sampler).unwrap();

        let single = make_family(vec![rot.clone()], WeightSchedule::uniform(1)).unwrap();
        let x = v(&[0.3, 0.4]);
        assert_eq!(single.at(5).eval(&x).unwrap(), rot.eval(&x).unwrap());

        let mix = make_family(
            vec![rot.clone(), neg2.clone()],
            WeightSchedule::new(vec![vec![0.5, 0.5]], 2, 1e-6).unwrap(),
        )
        .unwrap();
        assert!((mix.kappa() - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(mix.fixed_set(), Some(&PointSet::point(Vector::zeros(2))));
        let r = certify_strict_pseudocontraction(&mix.at(0), mix.kappa(), &sampler, 10_000).unwrap();
        assert!(r.passed);

        let alt = make_family(
            vec![rot, neg2],
            WeightSchedule::new(vec![vec![1.0 / 3.0, 2.0 / 3.0], vec![2.0 / 3.0, 1.0 / 3.0]], 2, 1e-6)
                .unwrap(),
        )
        .unwrap();
        for n in 0..4 {
            let r = certify_strict_pseudocontraction(&alt.at(n), alt.kappa(), &sampler, 10_000).unwrap();
            assert!(r.passed, "n = {n}");
        }
        assert!(make_family(vec![Mapping::scaling(2, 3.0)], WeightSchedule::uniform(1)).is_err());
    }

    #[test]
    fn grid_oracle_examples() {
        let unit = ConvexSet::boxed(v(&[0.0, 0.0]), v(&[1.0, 1.0])).unwrap();
        let shifted = Mapping::new(2, |x| x - &v(&[2.0, 2.0]));
        let g = vi_grid_oracle_report(&unit, &shifted, 51).unwrap();
        assert!(g.point.distance(&v(&[1.0, 1.0])) <= g.spacing);

        let zero = Mapping::zero(2);
        let g = vi_grid_oracle_report(&unit, &zero, 11).unwrap();
        assert_eq!(g.point, v(&[0.0, 0.0]));
        assert_eq!(g.defect, 0.0);

        let skew = Mapping::new(2, |x| v(&[x.coords()[1] + 0.5, -x.coords()[0] - 0.5]));
        let g = vi_grid_oracle_report(&catalog::square(1.0), &skew, 41).unwrap();
        assert!(g.point.distance(&v(&[-0.5, -0.5])) <= g.spacing);

        assert!(matches!(
            vi_grid_oracle(&ConvexSet::WholeSpace, &zero, 11),
            Err(Error::Unbounded)
        ));
        let cube4 = ConvexSet::boxed(Vector::zeros(4), v(&[1.0; 4])).unwrap();
        assert!(vi_grid_oracle(&cube4, &Mapping::zero(4), 3).is_err());
    }

    #[test]
    fn grid_oracle_on_ball() {
        // A = x - (2, 0) on the unit ball: solution P_C((2, 0)) = (1, 0)
        let ball = ConvexSet::ball(Vector::zeros(2), 1.0).unwrap();
        let a = Mapping::new(2, |x| x - &v(&[2.0, 0.0]));
        let g = vi_grid_oracle_report(&ball, &a, 81).unwrap();
        assert!(g.point.distance(&v(&[1.0, 0.0])) <= 2.0 * g.spacing, "{g:?}");
    }

    #[test]
    fn bridge_gives_monotone_operator() {
        let a = AffineSpec {
            matrix: catalog::skew_matrix(),
            shift: Some(v(&[0.5, -0.5])),
        };
        let a_map = a.to_mapping().unwrap();
        let q = monotone_from_pseudocontraction(&a_map, 1.0).unwrap();
        // I - (I - A) = A
        let back = monotone_from_pseudocontraction(&q, 2.0).unwrap();
        let x = v(&[0.2, 0.9]);
        assert!(back.eval(&x).unwrap().distance(&a_map.eval(&x).unwrap()) < 1e-15);
        let s = Sampler::default();
        assert!(certify_strict_pseudocontraction(&q, 1.0, &s, 5000).unwrap().passed);
        assert!(certify_monotone_lipschitz(&back, 2.0, &s, 5000).unwrap().passed);
    }

    #[test]
    fn instance_spec_round_trip() {
        let inst = catalog::skew_vi().build(&BuildOptions::default()).unwrap();
        let json = serde_json::to_value(inst.spec()).unwrap();
        assert_eq!(json["dim"], 2);
        assert_eq!(json["operator"]["kind"], "vi");
        assert_eq!(json["k"], 1.0);
        assert_eq!(json["oracle"]["type"], "points");
        let back: InstanceSpec = serde_json::from_value(json).unwrap();
        assert_eq!(&back, inst.spec());

        let fam = catalog::rotation_scaling_family().build(&BuildOptions::default()).unwrap();
        assert!((fam.kappa().unwrap() - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(fam.variant(), "spc");
    }

    #[test]
    fn composed_instance_oracle_is_the_intersection() {
        let inst = catalog::composed_skew_vi(0.3).build(&BuildOptions::default()).unwrap();
        let pts = inst.oracle.as_ref().unwrap().sample_points();
        assert_eq!(pts.len(), 1);
        assert!(pts[0].distance(&v(&[-0.5, 0.0])) < 1e-12);
        // F ∩ Fix(S) empty: interior zero (-0.5, -0.5) is off the line x_2 = 0
        let mut bad = catalog::composed_skew_vi(0.3);
        if let OperatorSpec::ComposedVi { shift, .. } = &mut bad.operator {
            *shift = Some(v(&[0.5, -0.5]));
        }
        assert!(bad.build(&BuildOptions::default()).is_err());
    }

    #[test]
    fn random_spc_passes_certification() {
        for seed in 0..5 {
            let q = random_linear_spc(3, seed).unwrap();
            let k = q.tag().kappa().unwrap();
            let r = certify_strict_pseudocontraction(&q, k, &Sampler::new(5.0, 99), 10_000).unwrap();
            assert!(r.passed);
        }
    }
}
