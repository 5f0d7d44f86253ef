//! Batch comparisons of the closed-form routines against their oracles.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algorithms::{haugazeau_step, CqStep};
use crate::convex::{half_space_between, haugazeau_project, qp_project_oracle, ConvexSet, HalfSpace};
use crate::error::{Error, Result};
use crate::hilbert::Vector;
use crate::operators::{t_from_q, Mapping};
use crate::problems::{random_linear_spc, vi_grid_oracle_report, AffineSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    HaugazeauVsQp,
    Lemma1Membership,
    ViOracle,
}

impl Suite {
    pub fn name(self) -> &'static str {
        match self {
            Self::HaugazeauVsQp => "haugazeau-vs-qp",
            Self::Lemma1Membership => "lemma1-membership",
            Self::ViOracle => "vi-oracle",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub suite: Suite,
    pub n_cases: usize,
    pub max_discrepancy: f64,
    pub failures: usize,
    pub tolerance: f64,
    /// Indices of the first few failing cases.
    pub failing_cases: Vec<usize>,
}

impl Summary {
    pub fn passed(&self) -> bool {
        self.failures == 0 && self.max_discrepancy <= self.tolerance
    }
}

struct CaseResult {
    discrepancy: f64,
    failed: bool,
}

fn summarize(suite: Suite, tolerance: f64, results: Vec<CaseResult>) -> Summary {
    let failing: Vec<usize> = results
        .iter()
        .enumerate()
        .filter(|(_, r)| r.failed || r.discrepancy > tolerance)
        .map(|(i, _)| i)
        .collect();
    Summary {
        suite,
        n_cases: results.len(),
        max_discrepancy: results.iter().map(|r| r.discrepancy).fold(0.0, f64::max),
        failures: failing.len(),
        tolerance,
        failing_cases: failing.into_iter().take(10).collect(),
    }
}

fn case_rng(seed: u64, case: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(case as u64);
    rng
}

fn uniform(rng: &mut impl Rng, dim: usize, r: f64) -> Vector {
    Vector::new((0..dim).map(|_| rng.random_range(-r..=r)).collect()).expect("finite draw")
}

/// The `(x, y, z)` triple of case `i`; every tenth-residue class is a
/// degenerate configuration (coincident points, parallel or antiparallel
/// half-spaces).
pub fn haugazeau_triple(seed: u64, case: usize, dims: &[usize]) -> (Vector, Vector, Vector) {
    let mut rng = case_rng(seed, case);
    let d = dims[case % dims.len()];
    let x = uniform(&mut rng, d, 1.0);
    let y = uniform(&mut rng, d, 1.0);
    let z = uniform(&mut rng, d, 1.0);
    let s: f64 = rng.random_range(0.5..2.0);
    match (case / dims.len()) % 10 {
        6 => (x.clone(), x, z),
        7 => (x, y.clone(), y),
        8 => {
            // z on the far side of y along x - y: antiparallel normals, empty
            let u = &x - &y;
            let z = y.lin_comb(1.0, &u, s);
            (x, y, z)
        }
        9 => {
            let u = &x - &y;
            let z = y.lin_comb(1.0, &u, -s);
            (x, y, z)
        }
        _ => (x, y, z),
    }
}

/// Closed-form Haugazeau projection against the active-set QP oracle.
pub fn haugazeau_vs_qp(n_cases: usize, dims: &[usize], seed: u64, tolerance: f64) -> Result<Summary> {
    if dims.is_empty() || dims.contains(&0) {
        return Err(Error::InvalidParameter("dims must be nonempty and positive".into()));
    }
    let results = (0..n_cases)
        .into_par_iter()
        .map(|i| {
            let (x, y, z) = haugazeau_triple(seed, i, dims);
            let cons: Vec<HalfSpace> = [half_space_between(&x, &y), half_space_between(&y, &z)]
                .into_iter()
                .filter_map(|h| h.expect("same dimension"))
                .collect();
            match (haugazeau_project(&x, &y, &z), qp_project_oracle(&cons, &x)) {
                (Ok(a), Ok(b)) => CaseResult {
                    discrepancy: a.distance(&b),
                    failed: false,
                },
                (Err(Error::EmptyIntersection), Err(Error::EmptyIntersection)) => CaseResult {
                    discrepancy: 0.0,
                    failed: false,
                },
                _ => CaseResult {
                    discrepancy: 0.0,
                    failed: true,
                },
            }
        })
        .collect();
    Ok(summarize(Suite::HaugazeauVsQp, tolerance, results))
}

/// Signed distance to a half-space, or `None` for the whole space.
fn signed_distance(h: Option<&HalfSpace>, z: &Vector) -> Option<f64> {
    h.map(|h| h.violation(z) / h.normal().norm())
}

/// Per CQ step: membership of `n_probes` random points in the quadratic set
/// `C_n` versus `H(x_n, T_n x_n)`, and the explicit CQ step versus the
/// Haugazeau step for three values of alpha.
pub fn lemma1_membership(n_cases: usize, n_probes: usize, seed: u64, tolerance: f64) -> Result<Summary> {
    let results = (0..n_cases)
        .into_par_iter()
        .map(|i| -> Result<CaseResult> {
            let mut rng = case_rng(seed, i);
            let d = 2 + i % 3;
            let q = random_linear_spc(d, rng.random())?;
            lemma1_case(&q, &mut rng, n_probes, tolerance)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(summarize(Suite::Lemma1Membership, tolerance, results))
}

fn lemma1_case(q: &Mapping, rng: &mut ChaCha8Rng, n_probes: usize, tolerance: f64) -> Result<CaseResult> {
    let d = q.dim();
    let kappa = q.tag().kappa().expect("tagged strict pseudocontraction");
    let x0 = uniform(rng, d, 2.0);
    let xn = uniform(rng, d, 2.0);
    let t = t_from_q(q, kappa)?;
    let h = half_space_between(&xn, &t.eval(&xn)?)?;
    let expected = haugazeau_step(&x0, &xn, &t);
    let probes: Vec<Vector> = (0..n_probes).map(|_| uniform(rng, d, 5.0)).collect();

    let mut worst = 0.0f64;
    let mut failed = false;
    for frac in [0.25, 0.5, 0.75] {
        let alpha = kappa + (1.0 - kappa) * frac;
        let step = CqStep::new(&x0, &xn, q, kappa, alpha)?;
        let c = step.c_constraint();
        for z in &probes {
            match (signed_distance(c.as_ref(), z), signed_distance(h.as_ref(), z)) {
                (None, None) => {}
                (Some(a), Some(b)) => {
                    worst = worst.max((a - b).abs());
                    let in_c = step.c_slack(z) <= 0.0;
                    if in_c != (b <= 0.0) && a.abs().min(b.abs()) > tolerance {
                        failed = true;
                    }
                }
                _ => failed = true,
            }
        }
        match (step.next(), &expected) {
            (Ok(a), Ok(b)) => {
                // the step comparison carries its own, looser, tolerance
                if a.distance(b) > 1e-8 {
                    failed = true;
                }
            }
            (Err(Error::EmptyIntersection), Err(Error::EmptyIntersection)) => {}
            _ => failed = true,
        }
    }
    Ok(CaseResult {
        discrepancy: worst,
        failed,
    })
}

/// Affine VI instances on boxes whose solutions are known analytically,
/// compared with the grid oracle. Discrepancies are in grid cells.
pub fn vi_oracle(resolution: usize, tolerance_cells: f64) -> Result<Summary> {
    let v = |c: &[f64]| Vector::new(c.to_vec()).expect("finite literal");
    let square = ConvexSet::boxed(v(&[-1.0, -1.0]), v(&[1.0, 1.0]))?;
    let unit = ConvexSet::boxed(v(&[0.0, 0.0]), v(&[1.0, 1.0]))?;
    let skew = vec![vec![0.0, 1.0], vec![-1.0, 0.0]];
    let identity = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
    let cases = [
        (square.clone(), AffineSpec { matrix: skew.clone(), shift: Some(v(&[0.5, -0.5])) }),
        (square, AffineSpec { matrix: skew, shift: Some(v(&[0.0, -0.5])) }),
        (unit, AffineSpec { matrix: identity, shift: Some(v(&[-2.0, -2.0])) }),
    ];
    let results = cases
        .iter()
        .map(|(set, a)| -> Result<CaseResult> {
            let grid = vi_grid_oracle_report(set, &a.to_mapping()?, resolution)?;
            let analytic = analytic_solution(set, a)?;
            Ok(CaseResult {
                discrepancy: grid.point.distance(&analytic) / grid.spacing,
                failed: false,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(summarize(Suite::ViOracle, tolerance_cells, results))
}

/// The fixed point of `Q = I - A` when it is unique and lies in `set`
/// (then it solves VI(set, A)); otherwise, for `A = x - c`, `P_set(c)`.
pub fn analytic_solution(set: &ConvexSet, a: &AffineSpec) -> Result<Vector> {
    let d = a.dim();
    let m = a.matrix()?;
    let q = AffineSpec {
        matrix: (0..d)
            .map(|i| (0..d).map(|j| f64::from(u8::from(i == j)) - m[(i, j)]).collect())
            .collect(),
        shift: Some(-&a.shift()),
    };
    let pts = q.fixed_set()?.sample_points();
    if let [p] = pts.as_slice() {
        if set.contains(p, 1e-12) {
            return Ok(p.clone());
        }
    }
    if m == nalgebra::DMatrix::identity(d, d) {
        return set.project(&(-&a.shift()));
    }
    Err(Error::InvalidParameter("no analytic VI solution available".into()))
}
