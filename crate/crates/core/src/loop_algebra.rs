//! The order-6 outer automorphism of sl(3,C), its anti-linear companion, the five
//! real form involutions on twisted loops, and the eigenspace splitting.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{self, form_p, max_abs, re, ComplexMat3};

/// Primitive sixth root of unity `e^{i pi / 3}`.
pub fn epsilon() -> Complex64 {
    Complex64::from_polar(1.0, PI / 3.0)
}

/// `P1 = diag(eps^2, eps^4, -1) P`. Satisfies `P1^2 = id`.
pub fn p1() -> ComplexMat3 {
    let e = epsilon();
    linalg::diag(e.powi(2), e.powi(4), re(-1.0)) * form_p()
}

/// `X -> -P1 X^T P1`, the algebra automorphism of order 6.
pub fn sigma_hat_alg(x: &ComplexMat3) -> ComplexMat3 {
    let p1 = p1();
    -(p1 * x.transpose() * p1)
}

/// `g -> P1 (g^T)^{-1} P1`.
pub fn sigma_hat_grp(g: &ComplexMat3) -> Result<ComplexMat3> {
    let p1 = p1();
    let inv = g.transpose().try_inverse().ok_or(Error::Singular)?;
    Ok(p1 * inv * p1)
}

/// `X -> -P conj(X)^T P`, anti-linear involution fixing u(2,1).
pub fn tau_hat_alg(x: &ComplexMat3) -> ComplexMat3 {
    let p = form_p();
    -(p * x.adjoint() * p)
}

/// `g -> P (conj(g)^T)^{-1} P`, whose fixed points form U(2,1).
pub fn tau_hat_grp(g: &ComplexMat3) -> Result<ComplexMat3> {
    let p = form_p();
    let inv = g.adjoint().try_inverse().ok_or(Error::Singular)?;
    Ok(p * inv * p)
}

/// Finite Laurent polynomial `sum_{k=-K}^{K} lambda^k A_k` with matrix coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct LoopMatrix {
    degree: usize,
    coeffs: Vec<ComplexMat3>,
}

impl LoopMatrix {
    pub fn zero(degree: usize) -> Self {
        Self { degree, coeffs: vec![ComplexMat3::zeros(); 2 * degree + 1] }
    }

    pub fn constant(m: ComplexMat3) -> Self {
        Self { degree: 0, coeffs: vec![m] }
    }

    /// Builds a loop from `(power, coefficient)` pairs; repeated powers are summed.
    pub fn from_terms(terms: &[(i32, ComplexMat3)]) -> Self {
        let degree = terms.iter().map(|(k, _)| k.unsigned_abs() as usize).max().unwrap_or(0);
        let mut out = Self::zero(degree);
        for (k, m) in terms {
            *out.slot_mut(*k) += m;
        }
        out
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Coefficient of `lambda^k`; zero outside `[-K, K]`.
    pub fn coeff(&self, k: i32) -> ComplexMat3 {
        if k.unsigned_abs() as usize > self.degree {
            ComplexMat3::zeros()
        } else {
            self.coeffs[(k + self.degree as i32) as usize]
        }
    }

    fn slot_mut(&mut self, k: i32) -> &mut ComplexMat3 {
        &mut self.coeffs[(k + self.degree as i32) as usize]
    }

    pub fn powers(&self) -> impl Iterator<Item = i32> {
        let d = self.degree as i32;
        -d..=d
    }

    pub fn eval(&self, lambda: Complex64) -> ComplexMat3 {
        self.powers()
            .map(|k| self.coeff(k) * lambda.powi(k))
            .fold(ComplexMat3::zeros(), |acc, m| acc + m)
    }

    /// Applies `f` to every coefficient in place.
    pub fn map(&self, f: impl Fn(&ComplexMat3) -> ComplexMat3) -> Self {
        Self { degree: self.degree, coeffs: self.coeffs.iter().map(f).collect() }
    }

    /// Coefficientwise max-abs distance.
    pub fn distance(&self, other: &LoopMatrix) -> f64 {
        let d = self.degree.max(other.degree) as i32;
        (-d..=d).map(|k| max_abs(&(self.coeff(k) - other.coeff(k)))).fold(0.0, f64::max)
    }

    /// `lambda -> 1/conj(lambda)` combined with entrywise conjugation: `A_k` moves to slot `-k`.
    fn invert_conjugate(&self) -> Self {
        let mut out = Self::zero(self.degree);
        for k in self.powers() {
            *out.slot_mut(-k) = self.coeff(k).conjugate();
        }
        out
    }

    /// `lambda -> conj(lambda)` combined with entrywise conjugation.
    fn conjugate(&self) -> Self {
        self.map(|m| m.conjugate())
    }
}

/// The five real form involutions of the twisted loop algebra, up to isomorphism.
///
/// Cases 1-3 are of almost compact type (`lambda -> 1/conj(lambda)`), cases 4-5 of almost
/// split type (`lambda -> conj(lambda)`). Case 5 is the one realized by timelike minimal
/// Lagrangian surfaces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum RealForm {
    /// `-conj(g(1/conj lambda))^T`: minimal Lagrangian surfaces in CP^2.
    MinimalLagrangianCp2,
    /// `Ad(I21 P) conj(g(1/conj lambda))`: definite affine spheres.
    DefiniteAffineSphere,
    /// `-Ad(I21) conj(g(1/conj lambda))^T`: minimal Lagrangian surfaces in CH^2.
    MinimalLagrangianCh2,
    /// `conj(g(conj lambda))`: indefinite affine spheres.
    IndefiniteAffineSphere,
    /// `-Ad(P) conj(g(conj lambda))^T`: timelike minimal Lagrangian surfaces in CH^2_1.
    TimelikeMinimalLagrangian,
}

impl RealForm {
    pub const ALL: [RealForm; 5] = [
        RealForm::MinimalLagrangianCp2,
        RealForm::DefiniteAffineSphere,
        RealForm::MinimalLagrangianCh2,
        RealForm::IndefiniteAffineSphere,
        RealForm::TimelikeMinimalLagrangian,
    ];

    pub fn index(self) -> u8 {
        match self {
            RealForm::MinimalLagrangianCp2 => 1,
            RealForm::DefiniteAffineSphere => 2,
            RealForm::MinimalLagrangianCh2 => 3,
            RealForm::IndefiniteAffineSphere => 4,
            RealForm::TimelikeMinimalLagrangian => 5,
        }
    }

    pub fn from_index(index: u8) -> Option<Self> {
        Self::ALL.into_iter().find(|f| f.index() == index)
    }

    pub fn almost_compact(self) -> bool {
        self.index() <= 3
    }
}

fn i21() -> ComplexMat3 {
    linalg::diag(re(1.0), re(1.0), re(-1.0))
}

/// Applies the real form involution `form` to a Laurent loop.
pub fn real_form_apply(form: RealForm, g: &LoopMatrix) -> LoopMatrix {
    let moved = if form.almost_compact() { g.invert_conjugate() } else { g.conjugate() };
    match form {
        RealForm::MinimalLagrangianCp2 => moved.map(|m| -m.transpose()),
        RealForm::DefiniteAffineSphere => {
            // I21 P is a real permutation matrix and its own inverse.
            let a = i21() * form_p();
            moved.map(|m| a * m * a)
        }
        RealForm::MinimalLagrangianCh2 => {
            let a = i21();
            moved.map(|m| -(a * m.transpose() * a))
        }
        RealForm::IndefiniteAffineSphere => moved,
        RealForm::TimelikeMinimalLagrangian => {
            let p = form_p();
            moved.map(|m| -(p * m.transpose() * p))
        }
    }
}

/// Component of `x` in the `eps^j` eigenspace of the order-6 automorphism.
pub fn eigenspace_project(x: &ComplexMat3, j: usize) -> Result<ComplexMat3> {
    check_traceless(x)?;
    if j > 5 {
        return Err(Error::EigenIndex(j));
    }
    Ok(project_unchecked(x, j))
}

/// All six eigencomponents of a traceless matrix, indexed by `j`.
pub fn eigen_decompose(x: &ComplexMat3) -> Result<[ComplexMat3; 6]> {
    check_traceless(x)?;
    Ok(std::array::from_fn(|j| project_unchecked(x, j)))
}

const TRACE_TOL: f64 = 1e-9;

fn check_traceless(x: &ComplexMat3) -> Result<()> {
    let trace = linalg::trace(x).norm();
    let scale = max_abs(x).max(1.0);
    if trace > TRACE_TOL * scale {
        return Err(Error::NotTraceless { trace });
    }
    Ok(())
}

fn project_unchecked(x: &ComplexMat3, j: usize) -> ComplexMat3 {
    let e = epsilon();
    let mut acc = ComplexMat3::zeros();
    let mut power = *x;
    for n in 0..6 {
        acc += power * e.powi(-((j * n) as i32));
        power = sigma_hat_alg(&power);
    }
    acc / re(6.0)
}

/// Whether a loop represents a Lie algebra or a Lie group valued map.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LoopKind {
    Algebra,
    Group,
}

/// Sample set for twisting checks: 16 roots of unity followed by 8 reals in (0, 2].
pub fn probe_lambdas() -> Vec<Complex64> {
    let circle = (0..16).map(|k| Complex64::from_polar(1.0, 2.0 * PI * k as f64 / 16.0));
    let reals = (1..=8).map(|k| re(0.25 * k as f64));
    circle.chain(reals).collect()
}

/// Largest deviations from `sigma(g) = g` and `tau(g) = g` over the probe set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TwistDefect {
    pub sigma: f64,
    pub tau: f64,
}

impl TwistDefect {
    pub fn max(&self) -> f64 {
        self.sigma.max(self.tau)
    }
}

/// Measures `sigma_hat(g(eps^{-1} lambda)) - g(lambda)` and `tau_hat(g(conj lambda)) - g(lambda)`.
pub fn twisting_defect(g: &LoopMatrix, kind: LoopKind) -> TwistDefect {
    let e_inv = epsilon().inv();
    let mut defect = TwistDefect { sigma: 0.0, tau: 0.0 };
    for lambda in probe_lambdas() {
        let here = g.eval(lambda);
        let rotated = g.eval(e_inv * lambda);
        let mirrored = g.eval(lambda.conj());
        let (s, t) = match kind {
            LoopKind::Algebra => (sigma_hat_alg(&rotated), tau_hat_alg(&mirrored)),
            LoopKind::Group => match (sigma_hat_grp(&rotated), tau_hat_grp(&mirrored)) {
                (Ok(s), Ok(t)) => (s, t),
                _ => return TwistDefect { sigma: f64::INFINITY, tau: f64::INFINITY },
            },
        };
        defect.sigma = defect.sigma.max(max_abs(&(s - here)));
        defect.tau = defect.tau.max(max_abs(&(t - here)));
    }
    defect
}

pub fn twisted_loop_check(g: &LoopMatrix, kind: LoopKind, tol: f64) -> bool {
    twisting_defect(g, kind).max() <= tol
}

/// Random matrix with entries uniform in `[-1,1] + i[-1,1]`, projected to trace zero.
pub fn random_traceless<R: Rng + ?Sized>(rng: &mut R) -> ComplexMat3 {
    linalg::traceless(&random_matrix(rng))
}

pub fn random_matrix<R: Rng + ?Sized>(rng: &mut R) -> ComplexMat3 {
    ComplexMat3::from_fn(|_, _| Complex64::new(rng.random_range(-1.0..=1.0), rng.random_range(-1.0..=1.0)))
}

/// Random element of SU(2,1): the exponential of a random element of su(2,1) of size `scale`.
pub fn random_su21<R: Rng + ?Sized>(rng: &mut R, scale: f64) -> ComplexMat3 {
    let y = random_matrix(rng);
    let p = form_p();
    let x = linalg::traceless(&((y - p * y.adjoint() * p) * re(0.5 * scale)));
    linalg::mat_exp(&x)
}

/// Random loop of the given degree with random traceless coefficients.
pub fn random_loop<R: Rng + ?Sized>(rng: &mut R, degree: usize) -> LoopMatrix {
    let terms: Vec<_> = (-(degree as i32)..=degree as i32).map(|k| (k, random_traceless(rng))).collect();
    LoopMatrix::from_terms(&terms)
}

/// Maximum deviations of the defining identities over random samples.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RelationReport {
    pub samples: usize,
    /// `sigma^6 = id` on the algebra.
    pub sigma_order_six: f64,
    /// `tau^2 = id` on the algebra.
    pub tau_involution: f64,
    /// `sigma tau sigma = tau` on the algebra.
    pub sigma_tau_sigma: f64,
    /// `sigma tau sigma = tau` on the group, sampled through the exponential.
    pub sigma_tau_sigma_group: f64,
    /// `sum_j proj_j(X) = X`.
    pub projection_sum: f64,
    /// `tau(iX) = -i tau(X)`.
    pub tau_antilinear: f64,
    /// `|| sigma^3(E12) - E12 ||`, bounded away from zero since sigma has order exactly 6.
    pub sigma_cubed_witness: f64,
}

impl RelationReport {
    pub fn max_identity_deviation(&self) -> f64 {
        [
            self.sigma_order_six,
            self.tau_involution,
            self.sigma_tau_sigma,
            self.sigma_tau_sigma_group,
            self.projection_sum,
            self.tau_antilinear,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

pub fn relation_check<R: Rng + ?Sized>(rng: &mut R, samples: usize) -> RelationReport {
    let mut report = RelationReport {
        samples,
        sigma_order_six: 0.0,
        tau_involution: 0.0,
        sigma_tau_sigma: 0.0,
        sigma_tau_sigma_group: 0.0,
        projection_sum: 0.0,
        tau_antilinear: 0.0,
        sigma_cubed_witness: 0.0,
    };
    for _ in 0..samples {
        let x = random_traceless(rng);

        let mut s6 = x;
        for _ in 0..6 {
            s6 = sigma_hat_alg(&s6);
        }
        report.sigma_order_six = report.sigma_order_six.max(max_abs(&(s6 - x)));

        let t2 = tau_hat_alg(&tau_hat_alg(&x));
        report.tau_involution = report.tau_involution.max(max_abs(&(t2 - x)));

        let sts = sigma_hat_alg(&tau_hat_alg(&sigma_hat_alg(&x)));
        report.sigma_tau_sigma = report.sigma_tau_sigma.max(max_abs(&(sts - tau_hat_alg(&x))));

        let g = linalg::mat_exp(&(x * re(0.5)));
        let sts_g = sigma_hat_grp(&g)
            .and_then(|a| tau_hat_grp(&a))
            .and_then(|a| sigma_hat_grp(&a))
            .and_then(|a| Ok(max_abs(&(a - tau_hat_grp(&g)?))))
            .unwrap_or(f64::INFINITY);
        report.sigma_tau_sigma_group = report.sigma_tau_sigma_group.max(sts_g);

        let sum = (0..6).map(|j| project_unchecked(&x, j)).fold(ComplexMat3::zeros(), |a, b| a + b);
        report.projection_sum = report.projection_sum.max(max_abs(&(sum - x)));

        let anti = tau_hat_alg(&(x * linalg::I)) + tau_hat_alg(&x) * linalg::I;
        report.tau_antilinear = report.tau_antilinear.max(max_abs(&anti));
    }
    let e12 = linalg::elementary(1, 2);
    let s3 = sigma_hat_alg(&sigma_hat_alg(&sigma_hat_alg(&e12)));
    report.sigma_cubed_witness = max_abs(&(s3 - e12));
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, diag, elementary, I};
    use rand::{rngs::StdRng, SeedableRng};

    fn rng() -> StdRng {
        StdRng::seed_from_u64(0x5eed)
    }

    #[test]
    fn p1_squares_to_identity() {
        assert!(max_abs(&(p1() * p1() - ComplexMat3::identity())) < 1e-15);
    }

    #[test]
    fn sigma_on_table_entries() {
        let h = diag(re(1.0), re(-1.0), re(0.0));
        assert!(max_abs(&(sigma_hat_alg(&h) - h)) < 1e-15);

        let e12 = elementary(1, 2);
        assert!(max_abs(&(sigma_hat_alg(&e12) - e12 * epsilon())) < 1e-15);

        let d3 = diag(re(1.0), re(1.0), re(-2.0));
        assert!(max_abs(&(sigma_hat_alg(&d3) + d3)) < 1e-15);
    }

    #[test]
    fn sigma_group_examples() {
        let id = ComplexMat3::identity();
        assert!(max_abs(&(sigma_hat_grp(&id).unwrap() - id)) < 1e-15);

        let mut r = rng();
        for _ in 0..10 {
            let x = random_traceless(&mut r) * re(0.3);
            let g = linalg::mat_exp(&x);
            let mut s = g;
            for _ in 0..6 {
                s = sigma_hat_grp(&s).unwrap();
            }
            assert!(max_abs(&(s - g)) < 1e-12);
            // exp intertwines the algebra and group maps
            let lhs = sigma_hat_grp(&g).unwrap();
            let rhs = linalg::mat_exp(&sigma_hat_alg(&x));
            assert!(max_abs(&(lhs - rhs)) < 1e-10);
        }
        assert_eq!(sigma_hat_grp(&ComplexMat3::zeros()), Err(Error::Singular));
    }

    #[test]
    fn tau_examples() {
        let id = ComplexMat3::identity();
        assert!(max_abs(&(tau_hat_grp(&id).unwrap() - id)) < 1e-15);
        let a = 0.4;
        let x = diag(c(0.0, a), c(0.0, a), c(0.0, -2.0 * a));
        assert!(max_abs(&(tau_hat_alg(&x) - x)) < 1e-15);
        let mut r = rng();
        for _ in 0..20 {
            let x = random_matrix(&mut r);
            assert!(max_abs(&(tau_hat_alg(&tau_hat_alg(&x)) - x)) < 1e-14);
        }
    }

    #[test]
    fn real_form_examples() {
        let x = diag(c(0.0, 0.4), c(0.0, 0.4), c(0.0, -0.8));
        let g = LoopMatrix::constant(x);
        let out = real_form_apply(RealForm::TimelikeMinimalLagrangian, &g);
        assert!(out.distance(&g) < 1e-15);

        let real_loop = LoopMatrix::from_terms(&[
            (-1, elementary(2, 1) * re(0.3)),
            (0, diag(re(1.0), re(-2.0), re(1.0))),
            (2, elementary(1, 3) * re(-1.5)),
        ]);
        let out = real_form_apply(RealForm::IndefiniteAffineSphere, &real_loop);
        assert_eq!(out, real_loop);

        let mut r = rng();
        for form in RealForm::ALL {
            let g = random_loop(&mut r, 3);
            let twice = real_form_apply(form, &real_form_apply(form, &g));
            assert!(twice.distance(&g) < 1e-13, "{form:?}");
        }
    }

    #[test]
    fn almost_compact_forms_reflect_powers() {
        let g = LoopMatrix::from_terms(&[(2, elementary(1, 2) * c(0.0, 1.0))]);
        let out = real_form_apply(RealForm::MinimalLagrangianCp2, &g);
        assert_eq!(out.coeff(2), ComplexMat3::zeros());
        // -conj(i E12)^T = i E21
        assert_eq!(out.coeff(-2), elementary(2, 1) * I);
    }

    #[test]
    fn real_form_indices_round_trip() {
        for form in RealForm::ALL {
            assert_eq!(RealForm::from_index(form.index()), Some(form));
        }
        assert_eq!(RealForm::from_index(0), None);
        assert_eq!(RealForm::from_index(6), None);
    }

    #[test]
    fn eigenspace_examples() {
        let h = diag(re(1.0), re(-1.0), re(0.0));
        assert!(max_abs(&(eigenspace_project(&h, 0).unwrap() - h)) < 1e-14);
        for j in 1..6 {
            assert!(max_abs(&eigenspace_project(&h, j).unwrap()) < 1e-14);
        }
        let e12 = elementary(1, 2);
        assert!(max_abs(&(eigenspace_project(&e12, 1).unwrap() - e12)) < 1e-14);
        let d3 = diag(re(1.0), re(1.0), re(-2.0));
        assert!(max_abs(&(eigenspace_project(&d3, 3).unwrap() - d3)) < 1e-14);

        assert!(matches!(
            eigenspace_project(&ComplexMat3::identity(), 0),
            Err(Error::NotTraceless { .. })
        ));
        assert_eq!(eigenspace_project(&h, 6), Err(Error::EigenIndex(6)));
    }

    #[test]
    fn eigenspaces_match_the_table() {
        // g1: a12 E12 + a23 (E23 + E31); g2: a13 (E13 - E32); g4: a23 (E23 - E31);
        // g5: a21 E21 + a13 (E13 + E32)
        let e = elementary;
        let cases = [
            (1, e(1, 2)),
            (1, e(2, 3) + e(3, 1)),
            (2, e(1, 3) - e(3, 2)),
            (4, e(2, 3) - e(3, 1)),
            (5, e(2, 1)),
            (5, e(1, 3) + e(3, 2)),
        ];
        for (j, x) in cases {
            let eig = epsilon().powi(j);
            assert!(max_abs(&(sigma_hat_alg(&x) - x * eig)) < 1e-14, "g{j}");
        }
    }

    #[test]
    fn twisted_loop_examples() {
        let id = LoopMatrix::constant(ComplexMat3::identity());
        assert!(twisted_loop_check(&id, LoopKind::Group, 1e-12));

        let u_vac = elementary(1, 3) - elementary(2, 1) * I + elementary(3, 2);
        let v_vac = elementary(1, 2) * I + elementary(2, 3) + elementary(3, 1);
        let u_loop = LoopMatrix::from_terms(&[(-1, u_vac)]);
        let v_loop = LoopMatrix::from_terms(&[(1, v_vac)]);
        assert!(twisted_loop_check(&u_loop, LoopKind::Algebra, 1e-12));
        assert!(twisted_loop_check(&v_loop, LoopKind::Algebra, 1e-12));

        let bad = LoopMatrix::from_terms(&[(1, elementary(1, 3))]);
        assert!(!twisted_loop_check(&bad, LoopKind::Algebra, 1e-12));
    }

    #[test]
    fn relation_report() {
        let report = relation_check(&mut rng(), 100);
        assert!(report.max_identity_deviation() <= 1e-12, "{report:?}");
        assert!((report.sigma_cubed_witness - 2.0).abs() < 1e-14);
    }

    #[test]
    fn probe_set_shape() {
        let probes = probe_lambdas();
        assert_eq!(probes.len(), 24);
        assert!(probes[..16].iter().all(|l| (l.norm() - 1.0).abs() < 1e-15));
        assert!(probes[16..].iter().all(|l| l.im == 0.0 && l.re > 0.0 && l.re <= 2.0));
    }
}
