//! Iteration drivers: the Haugazeau-type projection iteration
//! `x_{n+1} = Q(x_0, x_n, T_n x_n)`, its explicit CQ form, and the relaxed
//! Mann iteration `x_{n+1} = x_n + (2 - eps)(T_n x_n - x_n)`.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::convex::{half_space_between, haugazeau_project, qp_project_oracle, HalfSpace};
use crate::error::{check_dim, Error, Result};
use crate::hilbert::Vector;
use crate::operators::{t_from_q, Mapping, PointSet};

/// A real sequence `n -> value`, constant or repeating a finite cycle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Sequence {
    Constant(f64),
    Cyclic(Vec<f64>),
}

impl Sequence {
    pub fn at(&self, n: usize) -> f64 {
        match self {
            Self::Constant(c) => *c,
            Self::Cyclic(cs) => cs[n % cs.len()],
        }
    }

    pub fn values(&self) -> &[f64] {
        match self {
            Self::Constant(c) => std::slice::from_ref(c),
            Self::Cyclic(cs) => cs,
        }
    }

    fn check_nonempty(&self) -> Result<()> {
        if self.values().is_empty() {
            Err(Error::InvalidParameter("empty cyclic sequence".into()))
        } else {
            Ok(())
        }
    }
}

/// Simplex weights `n -> (w_1, ..., w_N)`, repeating a finite cycle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct WeightSchedule {
    rows: Vec<Vec<f64>>,
}

impl WeightSchedule {
    /// Validates every row: length `n_maps`, sum 1, entries at least `floor`.
    pub fn new(rows: Vec<Vec<f64>>, n_maps: usize, floor: f64) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::InvalidParameter("weight schedule is empty".into()));
        }
        if floor.is_nan() || floor <= 0.0 {
            return Err(Error::InvalidParameter("weight floor must be positive".into()));
        }
        for row in &rows {
            if row.len() != n_maps {
                return Err(Error::DimensionMismatch {
                    expected: n_maps,
                    found: row.len(),
                });
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidParameter(format!("weights sum to {sum}, not 1")));
            }
            if let Some(w) = row.iter().find(|&&w| w.is_nan() || w < floor) {
                return Err(Error::InvalidParameter(format!(
                    "weight {w} below floor {floor}"
                )));
            }
        }
        Ok(Self { rows })
    }

    pub fn uniform(n_maps: usize) -> Self {
        Self {
            rows: vec![vec![1.0 / n_maps as f64; n_maps]],
        }
    }

    pub fn at(&self, n: usize) -> &[f64] {
        &self.rows[n % self.rows.len()]
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

/// Step parameters. Unset fields take problem-dependent defaults:
/// `alpha = (kappa + 1)/2`, `lambda = (a + b)/(2k)`, uniform weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    #[serde(default)]
    pub alpha: Option<Sequence>,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default)]
    pub lambda: Option<Sequence>,
    #[serde(default)]
    pub weights: Option<Vec<Vec<f64>>>,
    /// Required distance of `alpha_n` from the ends of `(kappa, 1)`.
    #[serde(default = "default_margin")]
    pub alpha_margin: f64,
    #[serde(default = "default_floor")]
    pub weight_floor: f64,
}

fn default_epsilon() -> f64 {
    0.5
}

fn default_margin() -> f64 {
    1e-9
}

fn default_floor() -> f64 {
    1e-6
}

impl Default for Schedule {
    fn default() -> Self {
        Self {
            alpha: None,
            epsilon: default_epsilon(),
            lambda: None,
            weights: None,
            alpha_margin: default_margin(),
            weight_floor: default_floor(),
        }
    }
}

impl Schedule {
    pub fn validate_epsilon(&self) -> Result<()> {
        if self.epsilon > 0.0 && self.epsilon <= 1.0 {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "epsilon must lie in (0, 1], got {}",
                self.epsilon
            )))
        }
    }

    /// The alpha sequence for constant `kappa`, checked against
    /// `[kappa + margin, 1 - margin]`.
    pub fn alpha_for(&self, kappa: f64) -> Result<Sequence> {
        let seq = self
            .alpha
            .clone()
            .unwrap_or(Sequence::Constant(0.5 * (kappa + 1.0)));
        seq.check_nonempty()?;
        let m = self.alpha_margin;
        if let Some(a) = seq.values().iter().find(|&&a| !(a >= kappa + m && a <= 1.0 - m)) {
            return Err(Error::InvalidParameter(format!(
                "alpha = {a} outside (kappa, 1) with kappa = {kappa}"
            )));
        }
        Ok(seq)
    }

    /// The lambda sequence, checked eagerly against `lambda k in [a, b]`.
    pub fn lambda_for(&self, k: f64, bounds: (f64, f64)) -> Result<Sequence> {
        let seq = self
            .lambda
            .clone()
            .unwrap_or(Sequence::Constant(0.5 * (bounds.0 + bounds.1) / k));
        seq.check_nonempty()?;
        if let Some(l) = seq
            .values()
            .iter()
            .find(|&&l| !(l * k >= bounds.0 - 1e-12 && l * k <= bounds.1 + 1e-12))
        {
            return Err(Error::InvalidParameter(format!(
                "lambda = {l} gives lambda k = {} outside [{}, {}]",
                l * k,
                bounds.0,
                bounds.1
            )));
        }
        Ok(seq)
    }

    pub fn weights_for(&self, n_maps: usize) -> Result<WeightSchedule> {
        match &self.weights {
            Some(rows) => WeightSchedule::new(rows.clone(), n_maps, self.weight_floor),
            None => Ok(WeightSchedule::uniform(n_maps)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StoppingRule {
    pub tol_step: f64,
    pub tol_residual: f64,
    pub max_iter: usize,
    pub divergence_radius: f64,
}

impl Default for StoppingRule {
    fn default() -> Self {
        Self {
            tol_step: 1e-9,
            tol_residual: 1e-8,
            max_iter: 100_000,
            divergence_radius: 1e6,
        }
    }
}

impl StoppingRule {
    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v > 0.0 && !v.is_nan();
        if !(positive(self.tol_step) && positive(self.tol_residual) && positive(self.divergence_radius))
        {
            return Err(Error::InvalidParameter(
                "stopping tolerances and divergence radius must be positive".into(),
            ));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidParameter("max_iter must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Driver {
    Haugazeau,
    Mann,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Outcome {
    ConvergedStep,
    ConvergedResidual,
    MaxIter,
    Diverged,
    EmptyIntersection,
}

impl Outcome {
    pub fn is_converged(self) -> bool {
        matches!(self, Self::ConvergedStep | Self::ConvergedResidual)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterRecord {
    pub n: usize,
    pub x: Vector,
    /// `|x_n - T_n x_n|`.
    pub residual: f64,
    /// `|x_n - x_{n-1}|`, absent for `n = 0`.
    pub step: Option<f64>,
    pub dist_oracle: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationTrace {
    pub records: Vec<IterRecord>,
    pub outcome: Outcome,
}

impl IterationTrace {
    pub fn last(&self) -> &IterRecord {
        self.records.last().expect("trace has at least the initial record")
    }

    /// Number of completed steps.
    pub fn iterations(&self) -> usize {
        self.records.len() - 1
    }

    /// CSV with header `n,x_0,...,x_{d-1},residual,step,dist_oracle`.
    /// Numbers use the shortest representation that round-trips; absent
    /// values are empty fields.
    pub fn to_csv(&self) -> String {
        let d = self.records[0].x.dim();
        let mut out = String::from("n");
        for i in 0..d {
            let _ = write!(out, ",x_{i}");
        }
        out.push_str(",residual,step,dist_oracle\n");
        let opt = |v: Option<f64>| v.map(fmt_real).unwrap_or_default();
        for r in &self.records {
            let _ = write!(out, "{}", r.n);
            for c in r.x.coords() {
                let _ = write!(out, ",{}", fmt_real(*c));
            }
            let _ = writeln!(
                out,
                ",{},{},{}",
                fmt_real(r.residual),
                opt(r.step),
                opt(r.dist_oracle)
            );
        }
        out
    }
}

/// Shortest round-trip decimal (Rust's `Debug` float formatting).
pub fn fmt_real(v: f64) -> String {
    format!("{v:?}")
}

/// `Q(x_0, x_n, T_n x_n)`.
pub fn haugazeau_step(x0: &Vector, xn: &Vector, tn: &Mapping) -> Result<Vector> {
    check_dim(x0.dim(), xn.dim())?;
    let txn = tn.eval(xn)?;
    haugazeau_project(x0, xn, &txn)
}

/// `x_n + (2 - eps)(T_n x_n - x_n)` for `eps` in `(0, 1]`.
pub fn mann_step(xn: &Vector, tn: &Mapping, epsilon: f64) -> Result<Vector> {
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "epsilon must lie in (0, 1], got {epsilon}"
        )));
    }
    let txn = tn.eval(xn)?;
    Ok(relax(xn, &txn, epsilon))
}

fn relax(xn: &Vector, txn: &Vector, epsilon: f64) -> Vector {
    if epsilon == 1.0 {
        txn.clone()
    } else {
        let c = 2.0 - epsilon;
        xn.lin_comb(1.0 - c, txn, c)
    }
}

/// The sets of one explicit CQ step built from their defining inequalities:
/// `C_n = { z : |y_n - z|^2 <= |x_n - z|^2 - (1 - a)(a - kappa)|x_n - Q x_n|^2 }`
/// with `y_n = a x_n + (1 - a) Q x_n`, and `D_n = { z : <x_n - z, x_0 - x_n> >= 0 }`.
#[derive(Debug, Clone)]
pub struct CqStep {
    x0: Vector,
    xn: Vector,
    yn: Vector,
    gap: f64,
}

impl CqStep {
    pub fn new(x0: &Vector, xn: &Vector, qn: &Mapping, kappa: f64, alpha: f64) -> Result<Self> {
        check_dim(x0.dim(), xn.dim())?;
        if !(0.0..1.0).contains(&kappa) || !(alpha > kappa && alpha < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "need 0 <= kappa < alpha < 1, got kappa = {kappa}, alpha = {alpha}"
            )));
        }
        let qx = qn.eval(xn)?;
        let yn = xn.lin_comb(alpha, &qx, 1.0 - alpha);
        let gap = (1.0 - alpha) * (alpha - kappa) * (xn - &qx).norm_squared();
        Ok(Self {
            x0: x0.clone(),
            xn: xn.clone(),
            yn,
            gap,
        })
    }

    pub fn y(&self) -> &Vector {
        &self.yn
    }

    /// `|y_n - z|^2 - |x_n - z|^2 + gap`; nonpositive exactly on `C_n`.
    pub fn c_slack(&self, z: &Vector) -> f64 {
        (&self.yn - z).norm_squared() - (&self.xn - z).norm_squared() + self.gap
    }

    /// `C_n` rewritten as `2 <x_n - y_n, z> <= |x_n|^2 - |y_n|^2 - gap`;
    /// `None` when it is the whole space.
    pub fn c_constraint(&self) -> Option<HalfSpace> {
        let normal = (&self.xn - &self.yn).scale(2.0);
        if normal.norm_squared() == 0.0 {
            return None;
        }
        let offset = self.xn.norm_squared() - self.yn.norm_squared() - self.gap;
        HalfSpace::new(normal, offset).ok()
    }

    /// `D_n = H(x_0, x_n)`.
    pub fn d_constraint(&self) -> Option<HalfSpace> {
        half_space_between(&self.x0, &self.xn).expect("dimensions checked")
    }

    /// `P_{C_n ∩ D_n} x_0` through the active-set oracle.
    pub fn next(&self) -> Result<Vector> {
        let cons: Vec<HalfSpace> = [self.c_constraint(), self.d_constraint()]
            .into_iter()
            .flatten()
            .collect();
        qp_project_oracle(&cons, &self.x0)
    }
}

/// One explicit CQ step; equal to [`haugazeau_step`] with
/// `T_n = t_from_q(Q_n, kappa)` for every admissible `alpha`.
pub fn cq_explicit_step(
    x0: &Vector,
    xn: &Vector,
    qn: &Mapping,
    kappa: f64,
    alpha: f64,
) -> Result<Vector> {
    CqStep::new(x0, xn, qn, kappa, alpha)?.next()
}

/// Convenience: the Haugazeau step for a strict pseudocontraction.
pub fn haugazeau_spc_step(x0: &Vector, xn: &Vector, qn: &Mapping, kappa: f64) -> Result<Vector> {
    haugazeau_step(x0, xn, &t_from_q(qn, kappa)?)
}

/// Iterates `driver` from `x0` with operators `operators(n)` until a
/// stopping condition fires.
///
/// At step `n` the candidate `x_{n+1}` is computed first; if it moved less
/// than `tol_step` the run stops with `ConvergedStep` and the candidate is
/// not recorded, otherwise `residual(x_n) <= tol_residual` stops with
/// `ConvergedResidual`. A recorded iterate outside `divergence_radius` stops
/// with `Diverged`, and an empty Haugazeau intersection with
/// `EmptyIntersection`.
pub fn run(
    driver: Driver,
    x0: &Vector,
    operators: &dyn Fn(usize) -> Mapping,
    schedule: &Schedule,
    stop: &StoppingRule,
    oracle: Option<&PointSet>,
) -> Result<IterationTrace> {
    stop.validate()?;
    if driver == Driver::Mann {
        schedule.validate_epsilon()?;
    }
    if !x0.is_finite() {
        return Err(Error::InvalidParameter("x0 must be finite".into()));
    }
    let dist = |x: &Vector| oracle.map(|o| o.distance(x)).transpose();

    let t0 = operators(0);
    check_dim(t0.dim(), x0.dim())?;
    let mut x = x0.clone();
    let mut tx = t0.apply(&x);
    let mut records = vec![IterRecord {
        n: 0,
        x: x.clone(),
        residual: x.distance(&tx),
        step: None,
        dist_oracle: dist(&x)?,
    }];

    let outcome = loop {
        let n = records.len() - 1;
        let next = match driver {
            Driver::Haugazeau => match haugazeau_project(x0, &x, &tx) {
                Ok(p) => p,
                Err(Error::EmptyIntersection) => break Outcome::EmptyIntersection,
                Err(e) => return Err(e),
            },
            Driver::Mann => relax(&x, &tx, schedule.epsilon),
        };
        let step = next.distance(&x);
        if step <= stop.tol_step {
            break Outcome::ConvergedStep;
        }
        if records[n].residual <= stop.tol_residual {
            break Outcome::ConvergedResidual;
        }

        let tn = operators(n + 1);
        check_dim(tn.dim(), next.dim())?;
        x = next;
        tx = tn.apply(&x);
        records.push(IterRecord {
            n: n + 1,
            x: x.clone(),
            residual: x.distance(&tx),
            step: Some(step),
            dist_oracle: dist(&x)?,
        });
        if !x.is_finite() || x.norm() > stop.divergence_radius {
            break Outcome::Diverged;
        }
        if n + 1 >= stop.max_iter {
            break Outcome::MaxIter;
        }
    };

    Ok(IterationTrace { records, outcome })
}
