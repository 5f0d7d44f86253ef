//! Finite-dimensional inner-product geometry.
//!
//! [`Vector`] is an immutable point of R^d with the Euclidean inner product.
//! The checked free functions ([`inner`], [`norm`], [`combine`]) reject
//! mismatched dimensions; the operator impls and inherent methods assert
//! instead and are meant for code that has already validated its inputs.

use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Vector {
    coords: Vec<f64>,
}

impl Vector {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::EmptyVector);
        }
        if let Some(i) = coords.iter().position(|c| !c.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(Self { coords })
    }

    pub fn zeros(dim: usize) -> Self {
        assert!(dim >= 1, "dimension must be at least 1");
        Self {
            coords: vec![0.0; dim],
        }
    }

    /// The `i`-th standard basis vector.
    pub fn unit(dim: usize, i: usize) -> Self {
        let mut v = Self::zeros(dim);
        v.coords[i] = 1.0;
        v
    }

    /// Builds a vector from arithmetic results without the finiteness check.
    pub(crate) fn from_raw(coords: Vec<f64>) -> Self {
        debug_assert!(!coords.is_empty());
        Self { coords }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn is_finite(&self) -> bool {
        self.coords.iter().all(|c| c.is_finite())
    }

    /// Inner product accumulated with error-free transformations (the
    /// Ogita-Rump-Oishi `Dot2` scheme): as accurate as evaluating in twice
    /// the working precision and rounding once.
    pub fn dot_compensated(&self, other: &Vector) -> f64 {
        assert_eq!(self.dim(), other.dim(), "dimension mismatch");
        let (mut sum, mut err) = (0.0f64, 0.0f64);
        for (a, b) in self.coords.iter().zip(&other.coords) {
            let p = a * b;
            let p_err = a.mul_add(*b, -p);
            let t = sum + p;
            let z = t - sum;
            err += (sum - (t - z)) + (p - z) + p_err;
            sum = t;
        }
        sum + err
    }

    pub fn dot(&self, other: &Vector) -> f64 {
        assert_eq!(self.dim(), other.dim(), "dimension mismatch");
        self.coords
            .iter()
            .zip(&other.coords)
            .map(|(a, b)| a * b)
            .sum()
    }

    pub fn norm_squared(&self) -> f64 {
        self.dot(self)
    }

    pub fn norm(&self) -> f64 {
        self.norm_squared().sqrt()
    }

    pub fn distance(&self, other: &Vector) -> f64 {
        assert_eq!(self.dim(), other.dim(), "dimension mismatch");
        self.coords
            .iter()
            .zip(&other.coords)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    /// `a * self + b * other`.
    pub fn lin_comb(&self, a: f64, other: &Vector, b: f64) -> Vector {
        assert_eq!(self.dim(), other.dim(), "dimension mismatch");
        Vector::from_raw(
            self.coords
                .iter()
                .zip(&other.coords)
                .map(|(u, v)| a * u + b * v)
                .collect(),
        )
    }

    pub fn scale(&self, s: f64) -> Vector {
        Vector::from_raw(self.coords.iter().map(|c| s * c).collect())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Vector {
        Vector::from_raw(self.coords.iter().map(|&c| f(c)).collect())
    }

    pub fn zip_map(&self, other: &Vector, f: impl Fn(f64, f64) -> f64) -> Vector {
        assert_eq!(self.dim(), other.dim(), "dimension mismatch");
        Vector::from_raw(
            self.coords
                .iter()
                .zip(&other.coords)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        )
    }
}

impl TryFrom<Vec<f64>> for Vector {
    type Error = Error;

    fn try_from(coords: Vec<f64>) -> Result<Self> {
        Vector::new(coords)
    }
}

impl From<Vector> for Vec<f64> {
    fn from(v: Vector) -> Self {
        v.coords
    }
}

impl Add for &Vector {
    type Output = Vector;

    fn add(self, rhs: &Vector) -> Vector {
        self.zip_map(rhs, |a, b| a + b)
    }
}

impl Sub for &Vector {
    type Output = Vector;

    fn sub(self, rhs: &Vector) -> Vector {
        self.zip_map(rhs, |a, b| a - b)
    }
}

impl Mul<f64> for &Vector {
    type Output = Vector;

    fn mul(self, s: f64) -> Vector {
        self.scale(s)
    }
}

impl Neg for &Vector {
    type Output = Vector;

    fn neg(self) -> Vector {
        self.scale(-1.0)
    }
}

pub fn inner(u: &Vector, v: &Vector) -> Result<f64> {
    check_dim(u.dim(), v.dim())?;
    Ok(u.dot(v))
}

pub fn norm(u: &Vector) -> f64 {
    u.norm()
}

/// Returns `a * u + b * v`.
pub fn combine(a: f64, u: &Vector, b: f64, v: &Vector) -> Result<Vector> {
    check_dim(u.dim(), v.dim())?;
    Ok(u.lin_comb(a, v, b))
}
