//! Small complex linear-algebra helpers on top of `nalgebra`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

pub const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
pub const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

#[inline]
pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[inline]
pub fn cis(angle: f64) -> Complex64 {
    Complex64::from_polar(1.0, angle)
}

/// Real trace of a (nominally Hermitian) matrix.
pub fn trace_re(a: &CMat) -> f64 {
    a.diagonal().iter().map(|z| z.re).sum()
}

/// `tr(A B)` without forming the product.
pub fn trace_prod(a: &CMat, b: &CMat) -> Complex64 {
    assert_eq!(a.ncols(), b.nrows());
    assert_eq!(a.nrows(), b.ncols());
    let mut acc = ZERO;
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            acc += a[(i, j)] * b[(j, i)];
        }
    }
    acc
}

/// `x^H A x`, real part (A Hermitian).
pub fn quad_form(a: &CMat, x: &CVec) -> f64 {
    (x.adjoint() * a * x)[(0, 0)].re
}

/// Maximum entrywise deviation from Hermitian symmetry.
pub fn hermitian_defect(a: &CMat) -> f64 {
    let n = a.nrows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues ascending.
pub fn hermitian_eigen(a: &CMat) -> (Vec<f64>, CMat) {
    let n = a.nrows();
    // symmetrize first so round-off asymmetry does not leak into the solver
    let sym = (a + a.adjoint()).map(|z| z * 0.5);
    let eig = sym.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMat::from_fn(n, n, |r, col| eig.eigenvectors[(r, order[col])]);
    (values, vectors)
}

/// Checks Hermitian symmetry and positive semi-definiteness.
///
/// The PSD test accepts a smallest eigenvalue down to `-rel_tol * max(trace, 1e-300)`.
pub fn check_hermitian_psd(name: &str, a: &CMat, rel_tol: f64) -> Result<()> {
    if a.nrows() != a.ncols() {
        return Err(Error::Dimension(format!(
            "{name} must be square, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    if a.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NotPsd {
            name: name.to_string(),
            detail: "non-finite entry".into(),
        });
    }
    let scale = a.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1e-300);
    if hermitian_defect(a) > 1e-10 * scale {
        return Err(Error::NotPsd {
            name: name.to_string(),
            detail: format!("not Hermitian (defect {:.3e})", hermitian_defect(a)),
        });
    }
    let (values, _) = hermitian_eigen(a);
    let tr = trace_re(a).abs().max(1e-300);
    if let Some(&min) = values.first() {
        if min < -rel_tol * tr {
            return Err(Error::NotPsd {
                name: name.to_string(),
                detail: format!("smallest eigenvalue {min:.3e} below tolerance"),
            });
        }
    }
    Ok(())
}

/// Hermitian PSD square root; negative eigenvalues from round-off are clipped to zero.
pub fn psd_sqrt(a: &CMat) -> CMat {
    let (values, vectors) = hermitian_eigen(a);
    let n = a.nrows();
    let mut scaled = vectors.clone();
    for (j, &v) in values.iter().enumerate() {
        let s = v.max(0.0).sqrt();
        for i in 0..n {
            scaled[(i, j)] *= s;
        }
    }
    &scaled * vectors.adjoint()
}

/// Principal eigenpair (largest eigenvalue) of a Hermitian matrix.
pub fn principal_eigenpair(a: &CMat) -> (f64, CVec) {
    let (values, vectors) = hermitian_eigen(a);
    let last = values.len() - 1;
    (values[last], vectors.column(last).into_owned())
}

/// Orthogonal projector onto the numerical null space of a Hermitian PSD matrix.
///
/// Eigenvalues at or below `rel_tol * λ_max` count as zero.
pub fn null_space_projector(a: &CMat, rel_tol: f64) -> CMat {
    let (values, vectors) = hermitian_eigen(a);
    let n = a.nrows();
    let top = values.last().copied().unwrap_or(0.0).max(0.0);
    let mut p = CMat::zeros(n, n);
    for (j, &v) in values.iter().enumerate() {
        if v <= rel_tol * top {
            let col = vectors.column(j);
            p += col * col.adjoint();
        }
    }
    p
}

/// Moore-Penrose pseudo-inverse of a Hermitian PSD matrix.
pub fn psd_pinv(a: &CMat, rel_tol: f64) -> CMat {
    let (values, vectors) = hermitian_eigen(a);
    let n = a.nrows();
    let top = values.last().copied().unwrap_or(0.0).max(0.0);
    let mut scaled = vectors.clone();
    for (j, &v) in values.iter().enumerate() {
        let s = if v > rel_tol * top && v > 0.0 {
            1.0 / v
        } else {
            0.0
        };
        for i in 0..n {
            scaled[(i, j)] *= s;
        }
    }
    &scaled * vectors.adjoint()
}

/// Solves `(A) x = b` for Hermitian positive-definite `A`.
pub fn hpd_solve(a: &CMat, b: &CVec) -> Result<CVec> {
    let chol = a
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Numerical("matrix is not positive definite".into()))?;
    Ok(chol.solve(b))
}

/// Compensated (Neumaier) summation; order-dependent only through the input order.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl FromIterator<f64> for KahanSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = KahanSum::default();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_hermitian() -> CMat {
        CMat::from_fn(3, 3, |i, j| match (i, j) {
            (0, 0) => c(2.0, 0.0),
            (1, 1) => c(1.5, 0.0),
            (2, 2) => c(1.0, 0.0),
            (0, 1) => c(0.1, 0.3),
            (1, 0) => c(0.1, -0.3),
            (0, 2) => c(-0.2, 0.1),
            (2, 0) => c(-0.2, -0.1),
            (1, 2) => c(0.0, 0.4),
            _ => c(0.0, -0.4),
        })
    }

    #[test]
    fn sqrt_squares_back() {
        let a = sample_hermitian();
        let s = psd_sqrt(&a);
        assert!((&s * &s - &a).norm() < 1e-12);
        assert!(hermitian_defect(&s) < 1e-12);
    }

    #[test]
    fn trace_prod_matches_product() {
        let a = sample_hermitian();
        let b = a.map(|z| z * c(0.5, 0.2));
        let direct = (&a * &b).trace();
        assert!((trace_prod(&a, &b) - direct).norm() < 1e-14);
    }

    #[test]
    fn null_projector_of_rank_one() {
        let v = CVec::from_vec(vec![c(1.0, 0.0), c(0.0, 1.0), c(0.0, 0.0)]);
        let a = &v * v.adjoint();
        let p = null_space_projector(&a, 1e-10);
        assert!((p.trace().re - 2.0).abs() < 1e-12);
        assert!((&p * &v).norm() < 1e-12);
    }

    #[test]
    fn psd_check_rejects_indefinite() {
        let mut a = CMat::identity(2, 2);
        a[(1, 1)] = c(-1.0, 0.0);
        assert!(check_hermitian_psd("x", &a, 1e-10).is_err());
        assert!(check_hermitian_psd("x", &sample_hermitian(), 1e-10).is_ok());
    }

    #[test]
    fn kahan_recovers_small_terms() {
        let s: KahanSum = [1e16, 1.0, -1e16].into_iter().collect();
        assert_eq!(s.value(), 1.0);
    }
}
