//! Small dense linear-algebra helpers over nalgebra.

use nalgebra::{DMatrix, DVector};

use crate::hilbert::Vector;

pub(crate) fn to_dvector(v: &Vector) -> DVector<f64> {
    DVector::from_column_slice(v.coords())
}

pub(crate) fn from_dvector(v: &DVector<f64>) -> Vector {
    Vector::from_raw(v.iter().copied().collect())
}

/// Orthonormal basis of the kernel of `a`, by SVD. Singular values at or
/// below `rel_tol * max(1, sigma_max)` count as zero.
pub(crate) fn null_space(a: &DMatrix<f64>, rel_tol: f64) -> Vec<DVector<f64>> {
    let n = a.ncols();
    // Pad to at least square so the thin SVD carries a full right basis.
    let padded = if a.nrows() < n {
        let mut p = DMatrix::zeros(n, n);
        p.view_mut((0, 0), (a.nrows(), n)).copy_from(a);
        p
    } else {
        a.clone()
    };
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let smax = svd.singular_values.max().max(1.0);
    svd.singular_values
        .iter()
        .enumerate()
        .filter(|(_, s)| **s <= rel_tol * smax)
        .map(|(i, _)| v_t.row(i).transpose())
        .collect()
}

/// Modified Gram-Schmidt; drops vectors whose remainder is below `tol`.
pub(crate) fn orthonormalize(vs: &[Vector], tol: f64) -> Vec<Vector> {
    let mut out: Vec<Vector> = Vec::new();
    for v in vs {
        let mut w = v.clone();
        for e in &out {
            w = w.lin_comb(1.0, e, -w.dot(e));
        }
        let n = w.norm();
        if n > tol {
            out.push(w.scale(1.0 / n));
        }
    }
    out
}

/// Largest singular value of `m` by power iteration on `m^T m`, restarted
/// from every basis vector and the all-ones vector.
pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    let n = m.ncols();
    let gram = m.transpose() * m;
    let mut starts: Vec<DVector<f64>> = (0..n)
        .map(|i| DVector::from_fn(n, |j, _| if i == j { 1.0 } else { 0.0 }))
        .collect();
    starts.push(DVector::from_fn(n, |j, _| 1.0 + 0.1 * j as f64));

    let mut best = 0.0f64;
    for mut x in starts {
        x /= x.norm();
        let mut est = 0.0;
        for _ in 0..2000 {
            let y = &gram * &x;
            let ny = y.norm();
            if ny == 0.0 {
                break;
            }
            let next = x.dot(&y);
            x = y / ny;
            if (next - est).abs() <= 1e-15 * next.abs() {
                est = next;
                break;
            }
            est = next;
        }
        best = best.max(est);
    }
    best.max(0.0).sqrt()
}

/// Solution set of `a x = b` as `(particular, kernel basis)`, or `None` when
/// inconsistent beyond `tol`.
pub(crate) fn solve_affine(
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    tol: f64,
) -> Option<(DVector<f64>, Vec<DVector<f64>>)> {
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max().max(1.0);
    let x = svd.solve(b, 1e-12 * smax).ok()?;
    if (a * &x - b).norm() > tol * (1.0 + b.norm()) {
        return None;
    }
    Some((x, null_space(a, 1e-10)))
}
