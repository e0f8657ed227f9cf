//! Normalized frame, the Gauss map `g3 = F P1 F^T` and the Lorentz primitive harmonicity test.

use num_complex::Complex64;
use rand::Rng;
use serde::Serialize;

use crate::error::Result;
use crate::frame::{compute_l_integral, Connection, FrameField, LIntegral};
use crate::grid::{d_u, d_v, Field, Grid};
use crate::linalg::{diag, max_abs, re, traceless, ComplexMat3, I};
use crate::loop_algebra::{eigen_decompose, p1, random_traceless, sigma_hat_alg, sigma_hat_grp, tau_hat_alg};

/// Default primitive-check tolerance, relative to the largest entry of the form.
pub const DEFAULT_PRIMITIVE_TOL: f64 = 1e-6;

/// `F D diag(a^{-1/2}, a^{-1/2}, 1)` with `D = diag(e^{-L}, e^{-L}, 1)`.
#[derive(Debug, Clone)]
pub struct NormalizedFrame {
    pub frames: Field<ComplexMat3>,
    pub integral: LIntegral,
    /// `det(F D)` at the basepoint, divided out by the determinant adjustment.
    pub basepoint_det: Complex64,
}

impl NormalizedFrame {
    pub fn grid(&self) -> &Grid {
        self.frames.grid()
    }

    /// Largest `|det - 1|` over the grid.
    pub fn det_defect(&self) -> f64 {
        self.frames.max_over(0, |f| (f.determinant() - 1.0).norm())
    }
}

pub fn normalized_frame(coordinate: &FrameField, l_im: &Field<f64>, m_im: &Field<f64>, closedness_tol: f64) -> Result<NormalizedFrame> {
    let integral = compute_l_integral(l_im, m_im, closedness_tol)?;
    let d = |i: usize, j: usize| {
        let e = (-I * *integral.l_im.at(i, j)).exp();
        diag(e, e, re(1.0))
    };
    let a = (coordinate.at(0, 0) * d(0, 0)).determinant();
    let s = a.sqrt().inv();
    let adjust = diag(s, s, re(1.0));
    let frames = coordinate.frames.map_indexed(|i, j, f| f * d(i, j) * adjust);
    Ok(NormalizedFrame { frames, integral, basepoint_det: a })
}

pub fn gauss3_at(frame: &ComplexMat3) -> ComplexMat3 {
    frame * p1() * frame.transpose()
}

pub fn gauss3(frame: &NormalizedFrame) -> Field<ComplexMat3> {
    frame.frames.map(gauss3_at)
}

/// Eigenspace splitting of one Maurer-Cartan pair `U du + V dv`.
#[derive(Debug, Clone, PartialEq)]
pub struct AlphaSplit {
    /// g0 part of `U`.
    pub k_u: ComplexMat3,
    /// g0 part of `V`.
    pub k_v: ComplexMat3,
    /// `U` without its g0 part, split over the eigenspaces (index 0 is zero).
    pub p_u: [ComplexMat3; 6],
    pub p_v: [ComplexMat3; 6],
}

impl AlphaSplit {
    pub fn p_u_total(&self) -> ComplexMat3 {
        self.p_u.iter().sum()
    }

    pub fn p_v_total(&self) -> ComplexMat3 {
        self.p_v.iter().sum()
    }

    /// Largest entry of `p_u` outside g5 and of `p_v` outside g1.
    pub fn offending(&self) -> (f64, f64) {
        let off = |parts: &[ComplexMat3; 6], keep: usize| {
            (1..6).filter(|&j| j != keep).map(|j| max_abs(&parts[j])).fold(0.0, f64::max)
        };
        (off(&self.p_u, 5), off(&self.p_v, 1))
    }
}

pub fn split_alpha(u: &ComplexMat3, v: &ComplexMat3) -> Result<AlphaSplit> {
    let mut pu = eigen_decompose(u)?;
    let mut pv = eigen_decompose(v)?;
    let (k_u, k_v) = (pu[0], pv[0]);
    pu[0] = ComplexMat3::zeros();
    pv[0] = ComplexMat3::zeros();
    Ok(AlphaSplit { k_u, k_v, p_u: pu, p_v: pv })
}

/// Maurer-Cartan pairs per node.
pub type AlphaField = Field<(ComplexMat3, ComplexMat3)>;

/// The assembled form of a connection at its own spectral parameter.
pub fn alpha_from_connection(form: &impl Connection) -> AlphaField {
    Field::from_fn(*form.grid(), |i, j| (form.u_at(i, j), form.v_at(i, j)))
}

/// `F^{-1} dF` by central differences (second order, one-sided at the edges).
pub fn alpha_from_frames(frames: &Field<ComplexMat3>) -> AlphaField {
    let fu = d_u(frames);
    let fv = d_v(frames);
    frames.map_indexed(|i, j, f| {
        let inv = f.try_inverse().unwrap_or_else(ComplexMat3::zeros);
        (inv * fu.at(i, j), inv * fv.at(i, j))
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PrimitiveReport {
    /// Largest entry of the u-part outside g5.
    pub offending_u: f64,
    /// Largest entry of the v-part outside g1.
    pub offending_v: f64,
    /// Largest entry of the form, used to scale `tol`.
    pub scale: f64,
    pub tol: f64,
    pub worst_node: (usize, usize),
    pub pass: bool,
}

impl PrimitiveReport {
    pub fn offending(&self) -> f64 {
        self.offending_u.max(self.offending_v)
    }
}

/// Lorentz primitive harmonicity: `alpha_p^u` in g5 and `alpha_p^v` in g1 at every node.
///
/// The central trace part of each matrix is dropped before splitting.
pub fn primitive_check(alpha: &AlphaField, tol: f64) -> Result<PrimitiveReport> {
    let mut report = PrimitiveReport {
        offending_u: 0.0,
        offending_v: 0.0,
        scale: 0.0,
        tol,
        worst_node: (0, 0),
        pass: true,
    };
    let mut worst = -1.0;
    for (i, j) in alpha.grid().nodes() {
        let (u, v) = alpha.at(i, j);
        let (ou, ov) = split_alpha(&traceless(u), &traceless(v))?.offending();
        report.offending_u = report.offending_u.max(ou);
        report.offending_v = report.offending_v.max(ov);
        report.scale = report.scale.max(max_abs(u)).max(max_abs(v));
        if ou.max(ov) > worst {
            worst = ou.max(ov);
            report.worst_node = (i, j);
        }
    }
    report.pass = report.offending() <= tol * report.scale.max(1.0);
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StabilizerRow {
    pub a: f64,
    /// `|X P1 X^T - P1|` for `X = diag(a, 1/a, 1)`.
    pub p1_defect: f64,
    /// `|sigma(X) - X|`.
    pub sigma_defect: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuasiSymmetricReport {
    pub samples: usize,
    /// `sigma tau sigma = tau` on random traceless samples.
    pub sigma_tau_sigma: f64,
    pub stabilizer: Vec<StabilizerRow>,
    /// `|X P1 X^T - P1|` for `X = diag(2, 2, 1/4)`, which must not stabilize.
    pub control_defect: f64,
}

impl QuasiSymmetricReport {
    pub fn holds(&self, tol: f64) -> bool {
        self.sigma_tau_sigma <= tol
            && self.stabilizer.iter().all(|r| r.p1_defect <= tol && r.sigma_defect <= tol)
            && self.control_defect > tol
    }
}

pub fn quasi_symmetric_check<R: Rng + ?Sized>(rng: &mut R, samples: usize) -> Result<QuasiSymmetricReport> {
    let sigma_tau_sigma = (0..samples)
        .map(|_| {
            let x = random_traceless(rng);
            max_abs(&(sigma_hat_alg(&tau_hat_alg(&sigma_hat_alg(&x))) - tau_hat_alg(&x)))
        })
        .fold(0.0, f64::max);
    let p1 = p1();
    let defect = |x: &ComplexMat3| max_abs(&(x * p1 * x.transpose() - p1));
    let mut stabilizer = Vec::new();
    for a in [2.0, 0.5, -1.0] {
        let x = diag(re(a), re(1.0 / a), re(1.0));
        stabilizer.push(StabilizerRow { a, p1_defect: defect(&x), sigma_defect: max_abs(&(sigma_hat_grp(&x)? - x)) });
    }
    let control_defect = defect(&diag(re(2.0), re(2.0), re(0.25)));
    Ok(QuasiSymmetricReport { samples, sigma_tau_sigma, stabilizer, control_defect })
}

/// `P1` written out: `[[0, d, 0], [d^2, 0, 0], [0, 0, 1]]` with `d = e^{2 pi i / 3}`.
pub fn p1_explicit() -> ComplexMat3 {
    let d = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI / 3.0);
    let z = re(0.0);
    ComplexMat3::new(z, d, z, d * d, z, z, z, z, re(1.0))
}

#[doc(hidden)]
pub fn identity_frame(grid: Grid) -> NormalizedFrame {
    NormalizedFrame {
        frames: Field::filled(grid, ComplexMat3::identity()),
        integral: LIntegral::zero(grid),
        basepoint_det: re(1.0),
    }
}
