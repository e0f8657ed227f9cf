//! Complex 3-vectors, 3x3 matrices and the signature (2,1) Hermitian structure of C^3.
//!
//! All tolerance checks in the crate use the max-abs entry norm ([`max_abs`]).

use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type ComplexVec3 = Vector3<Complex64>;
pub type ComplexMat3 = Matrix3<Complex64>;

/// Default tolerance for group membership tests.
pub const DEFAULT_TOL: f64 = 1e-9;

pub const I: Complex64 = Complex64::new(0.0, 1.0);

#[inline]
pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[inline]
pub fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// The form matrix `[[0,1,0],[1,0,0],[0,0,-1]]`.
pub fn form_p() -> ComplexMat3 {
    Matrix3::new(
        re(0.0), re(1.0), re(0.0),
        re(1.0), re(0.0), re(0.0),
        re(0.0), re(0.0), re(-1.0),
    )
}

/// Elementary matrix with a single 1 at 1-based position `(row, col)`.
pub fn elementary(row: usize, col: usize) -> ComplexMat3 {
    let mut m = ComplexMat3::zeros();
    m[(row - 1, col - 1)] = re(1.0);
    m
}

pub fn diag(a: Complex64, b: Complex64, d: Complex64) -> ComplexMat3 {
    ComplexMat3::from_diagonal(&Vector3::new(a, b, d))
}

pub fn basis(k: usize) -> ComplexVec3 {
    let mut v = ComplexVec3::zeros();
    v[k - 1] = re(1.0);
    v
}

/// Largest entry modulus.
pub fn max_abs(m: &ComplexMat3) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn max_abs_vec(v: &ComplexVec3) -> f64 {
    v.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// `<z, w> = z1 conj(w2) + z2 conj(w1) - z3 conj(w3)`.
pub fn herm_form(z: &ComplexVec3, w: &ComplexVec3) -> Complex64 {
    z[0] * w[1].conj() + z[1] * w[0].conj() - z[2] * w[2].conj()
}

/// Real part of the Hermitian form: the pseudo-Riemannian metric.
pub fn metric_g(z: &ComplexVec3, w: &ComplexVec3) -> f64 {
    herm_form(z, w).re
}

/// Imaginary part of the Hermitian form: the symplectic form.
pub fn symplectic_omega(z: &ComplexVec3, w: &ComplexVec3) -> f64 {
    herm_form(z, w).im
}

/// `|| P M^T P conj(M) - id ||_max`, zero exactly on U(2,1).
pub fn u21_residual(m: &ComplexMat3) -> f64 {
    let p = form_p();
    max_abs(&(p * m.transpose() * p * m.conjugate() - ComplexMat3::identity()))
}

pub fn is_u21(m: &ComplexMat3, tol: f64) -> bool {
    u21_residual(m) <= tol
}

pub fn is_su21(m: &ComplexMat3, tol: f64) -> bool {
    is_u21(m, tol) && (m.determinant() - re(1.0)).norm() <= tol
}

/// Matrix exponential (scaling and squaring with a Pade approximant).
pub fn mat_exp(x: &ComplexMat3) -> ComplexMat3 {
    x.exp()
}

/// Inverse of a U(2,1) element via `P conj(M)^T P`.
pub fn u21_inverse(m: &ComplexMat3, tol: f64) -> Result<ComplexMat3> {
    let residual = u21_residual(m);
    if !(residual <= tol) {
        return Err(Error::NotUnitary { residual, tol });
    }
    let p = form_p();
    Ok(p * m.adjoint() * p)
}

pub fn trace(m: &ComplexMat3) -> Complex64 {
    m[(0, 0)] + m[(1, 1)] + m[(2, 2)]
}

/// Project onto sl(3,C) by removing the trace part.
pub fn traceless(m: &ComplexMat3) -> ComplexMat3 {
    let t = trace(m) / 3.0;
    m - ComplexMat3::identity() * t
}

pub fn commutator(a: &ComplexMat3, b: &ComplexMat3) -> ComplexMat3 {
    a * b - b * a
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn clifford_f0() -> ComplexMat3 {
        let d = Complex64::from_polar(1.0, 2.0 * PI / 3.0);
        let s = 1.0 / 3f64.sqrt();
        Matrix3::new(
            -I * d * d, I * d, -I,
            I * d, -I * d * d, I,
            re(1.0), re(-1.0), re(1.0),
        ) * re(s)
    }

    #[test]
    fn form_p_is_an_involution() {
        let p = form_p();
        assert_eq!(p * p, ComplexMat3::identity());
        assert_eq!(p.transpose(), p);
    }

    #[test]
    fn herm_form_on_basis() {
        assert_eq!(herm_form(&basis(1), &basis(2)), re(1.0));
        assert_eq!(herm_form(&basis(3), &basis(3)), re(-1.0));
    }

    #[test]
    fn clifford_lift_is_unit_negative() {
        let (u, v) = (0.3, -0.1);
        let d = Complex64::from_polar(1.0, 2.0 * PI / 3.0);
        let s = re(1.0 / 3f64.sqrt());
        let f = ComplexVec3::new(
            (I * (d * u - d * d * v)).exp() * s,
            -(I * (d * d * u - d * v)).exp() * s,
            (I * (u - v)).exp() * s,
        );
        assert!((herm_form(&f, &f) + 1.0).norm() < 1e-14);
    }

    #[test]
    fn metric_and_symplectic_parts() {
        let (e1, e2) = (basis(1), basis(2));
        assert_eq!(metric_g(&e1, &e2), 1.0);
        assert_eq!(symplectic_omega(&e1, &e2), 0.0);
        let ie2 = e2 * I;
        assert_eq!(metric_g(&e1, &ie2), 0.0);
        assert_eq!(symplectic_omega(&e1, &ie2), -1.0);
        let v = ComplexVec3::new(c(0.3, -1.2), c(2.0, 0.1), c(-0.7, 0.4));
        assert_eq!(symplectic_omega(&v, &v), 0.0);
    }

    #[test]
    fn unitary_membership() {
        assert!(is_u21(&ComplexMat3::identity(), DEFAULT_TOL));
        assert!(is_u21(&clifford_f0(), DEFAULT_TOL));
        assert!(!is_u21(&diag(re(2.0), re(1.0), re(1.0)), DEFAULT_TOL));
    }

    #[test]
    fn special_unitary_membership() {
        assert!(is_su21(&ComplexMat3::identity(), DEFAULT_TOL));
        let t = 0.4;
        let m = diag(I.scale(t).exp(), I.scale(t).exp(), I.scale(-2.0 * t).exp());
        assert!(is_su21(&m, DEFAULT_TOL));
        let phase = ComplexMat3::identity() * (I * (PI / 5.0)).exp();
        assert!(is_u21(&phase, DEFAULT_TOL));
        assert!(!is_su21(&phase, DEFAULT_TOL));
    }

    #[test]
    fn exp_examples() {
        assert_eq!(mat_exp(&ComplexMat3::zeros()), ComplexMat3::identity());
        let a = 0.7;
        let e = mat_exp(&diag(re(a), re(-a), re(0.0)));
        let want = diag(re(a.exp()), re((-a).exp()), re(1.0));
        assert!(max_abs(&(e - want)) < 1e-14);

        // N+ is nilpotent with N+^2 = E12, so the series terminates.
        let n_plus = elementary(1, 3) + elementary(3, 2);
        assert_eq!(n_plus * n_plus, elementary(1, 2));
        assert_eq!(n_plus * n_plus * n_plus, ComplexMat3::zeros());
        let t = 0.5;
        let e = mat_exp(&(n_plus * re(t)));
        let want = ComplexMat3::identity() + n_plus * re(t) + elementary(1, 2) * re(t * t / 2.0);
        assert!(max_abs(&(e - want)) < 1e-14);
    }

    #[test]
    fn inverse_examples() {
        let id = ComplexMat3::identity();
        assert_eq!(u21_inverse(&id, DEFAULT_TOL).unwrap(), id);
        let f0 = clifford_f0();
        let inv = u21_inverse(&f0, DEFAULT_TOL).unwrap();
        assert!(max_abs(&(f0 * inv - id)) < 1e-14);
        assert!(matches!(
            u21_inverse(&diag(re(2.0), re(1.0), re(1.0)), DEFAULT_TOL),
            Err(Error::NotUnitary { .. })
        ));
    }
}
