//! Horizontal lifts, their identities, recovered invariants and the projection to CH^2_1.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::frame::FrameField;
use crate::grid::{d1, d3, d_u, d_uv, d_v, Axis, Field, Grid};
use crate::linalg::{form_p, herm_form, re, ComplexMat3, ComplexVec3};

/// Sampled horizontal lift `f: grid -> C^3_1`.
#[derive(Debug, Clone, PartialEq)]
pub struct LiftField {
    pub lambda: Complex64,
    pub values: Field<ComplexVec3>,
}

impl LiftField {
    pub fn grid(&self) -> &Grid {
        self.values.grid()
    }

    pub fn at(&self, i: usize, j: usize) -> &ComplexVec3 {
        self.values.at(i, j)
    }

    pub fn from_fn(grid: Grid, lambda: Complex64, f: impl Fn(f64, f64) -> ComplexVec3) -> Self {
        Self { lambda, values: Field::from_fn(grid, |i, j| f(grid.u(i), grid.v(j))) }
    }

    /// Left action of a fixed matrix.
    pub fn transform(&self, a: &ComplexMat3) -> Self {
        Self { lambda: self.lambda, values: self.values.map(|f| a * f) }
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self { lambda: self.lambda, values: self.values.map(|f| f * s) }
    }
}

/// Last column of the frame at every node.
pub fn lift_from_frame(frame: &FrameField) -> LiftField {
    LiftField { lambda: frame.lambda, values: frame.frames.map(|f| f.column(2).into_owned()) }
}

/// Max-abs residuals of the lift identities over all nodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LiftReport {
    /// `<f, f> + 1`
    pub norm: f64,
    /// `<f_u, f_u>`
    pub null_u: f64,
    /// `<f_v, f_v>`
    pub null_v: f64,
    /// `Im <f_u, f_v>`
    pub metric_imag: f64,
    /// `<f_u, f>`
    pub horizontal_u: f64,
    /// `<f_v, f>`
    pub horizontal_v: f64,
    /// `min Re <f_u, f_v>`; an immersion needs this positive.
    pub min_metric: f64,
}

impl LiftReport {
    /// Largest identity residual (excludes `min_metric`).
    pub fn max_residual(&self) -> f64 {
        [self.norm, self.null_u, self.null_v, self.metric_imag, self.horizontal_u, self.horizontal_v]
            .into_iter()
            .fold(0.0, f64::max)
    }

    pub fn is_immersion(&self) -> bool {
        self.min_metric > 0.0
    }
}

pub fn verify_lift(lift: &LiftField) -> LiftReport {
    let f = &lift.values;
    let fu = d_u(f);
    let fv = d_v(f);
    let max = |g: &dyn Fn(usize, usize) -> f64| lift.grid().nodes().map(|(i, j)| g(i, j)).fold(0.0, f64::max);
    LiftReport {
        norm: max(&|i, j| (herm_form(f.at(i, j), f.at(i, j)) + 1.0).norm()),
        null_u: max(&|i, j| herm_form(fu.at(i, j), fu.at(i, j)).norm()),
        null_v: max(&|i, j| herm_form(fv.at(i, j), fv.at(i, j)).norm()),
        metric_imag: max(&|i, j| herm_form(fu.at(i, j), fv.at(i, j)).im.abs()),
        horizontal_u: max(&|i, j| herm_form(fu.at(i, j), f.at(i, j)).norm()),
        horizontal_v: max(&|i, j| herm_form(fv.at(i, j), f.at(i, j)).norm()),
        min_metric: lift
            .grid()
            .nodes()
            .map(|(i, j)| herm_form(fu.at(i, j), fv.at(i, j)).re)
            .fold(f64::INFINITY, f64::min),
    }
}

/// Invariants read off a lift. The complex carriers should be purely imaginary.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceInvariants {
    pub exp_omega: Field<f64>,
    pub q: Field<Complex64>,
    pub r: Field<Complex64>,
    pub l: Field<Complex64>,
    pub m: Field<Complex64>,
    /// `e^{-omega} f_uv - f`
    pub h: Field<ComplexVec3>,
}

impl SurfaceInvariants {
    /// Largest real part of `Q, R, l, m` over nodes at least `margin` lines from the edge.
    pub fn spurious_real_part(&self, margin: usize) -> f64 {
        [&self.q, &self.r, &self.l, &self.m]
            .into_iter()
            .map(|f| f.max_over(margin, |z| z.re.abs()))
            .fold(0.0, f64::max)
    }
}

pub fn recover_invariants(lift: &LiftField) -> Result<SurfaceInvariants> {
    let g = *lift.grid();
    let f = &lift.values;
    let fu = d_u(f);
    let fv = d_v(f);
    let fuv = d_uv(f);
    let exp_omega = fu.map_indexed(|i, j, a| herm_form(a, fv.at(i, j)).re);
    if let Some((i, j)) = g.nodes().find(|&(i, j)| !(*exp_omega.at(i, j) > 0.0)) {
        return Err(Error::NonPositiveMetric { i, j, value: *exp_omega.at(i, j) });
    }
    let h = fuv.map_indexed(|i, j, x| x * re(1.0 / exp_omega.at(i, j)) - f.at(i, j));
    let l = h.map_indexed(|i, j, x| herm_form(x, fu.at(i, j)));
    let m = h.map_indexed(|i, j, x| herm_form(x, fv.at(i, j)));
    let fuuu = d3(f, Axis::U);
    let fvvv = d3(f, Axis::V);
    let q = fuuu.map_indexed(|i, j, x| herm_form(x, f.at(i, j)));
    let r = fvvv.map_indexed(|i, j, x| herm_form(x, f.at(i, j)));
    Ok(SurfaceInvariants { exp_omega, q, r, l, m, h })
}

/// Second derivative of the lift along one axis; exposed for diagnostics.
pub fn second_derivative(lift: &LiftField, axis: Axis) -> Field<ComplexVec3> {
    d1(&d1(&lift.values, axis), axis)
}

/// A point of CH^2_1 stored as the projector `f conj(f)^T P / <f, f>`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChPoint {
    pub projector: ComplexMat3,
}

impl ChPoint {
    pub fn distance(&self, other: &ChPoint) -> f64 {
        crate::linalg::max_abs(&(self.projector - other.projector))
    }
}

pub fn project_to_ch(f: &ComplexVec3) -> Result<ChPoint> {
    let norm = herm_form(f, f).re;
    if !(norm < 0.0) {
        return Err(Error::NotNegative(norm));
    }
    let projector = f * f.adjoint() * form_p() / re(norm);
    Ok(ChPoint { projector })
}

/// Closed-form frames and lifts of the two model surfaces.
pub mod oracle {
    use std::f64::consts::PI;

    use num_complex::Complex64;

    use crate::error::{Error, Result};
    use crate::linalg::{basis, diag, elementary, mat_exp, max_abs_vec, re, ComplexMat3, ComplexVec3, I};

    /// `E13 + E32`; the transpose plays the role of the lowering nilpotent.
    pub fn n_plus() -> ComplexMat3 {
        elementary(1, 3) + elementary(3, 2)
    }

    /// Frame `exp(u N_+ / lambda) diag(e^{-omega/2}, e^{omega/2}, 1) exp(lambda v N_+^T)` with
    /// `e^{omega/2} = 2 / (2 - uv)`.
    pub fn rp_frame(u: f64, v: f64, lambda: Complex64) -> Result<ComplexMat3> {
        let s = 2.0 - u * v;
        if s.abs() < 1e-12 {
            return Err(Error::SingularLocus(format!("uv = 2 at (u, v) = ({u}, {v})")));
        }
        if lambda.norm() == 0.0 {
            return Err(Error::ZeroLambda);
        }
        let half = 2.0 / s;
        let n = n_plus();
        let left = mat_exp(&(n * (re(u) / lambda)));
        let right = mat_exp(&(n.transpose() * (lambda * v)));
        Ok(left * diag(re(1.0 / half), re(half), re(1.0)) * right)
    }

    /// `(2u, 2v, 2 + uv) / (2 - uv)`, the anti-de Sitter sphere.
    pub fn rp_lift(u: f64, v: f64) -> Result<ComplexVec3> {
        let s = 2.0 - u * v;
        if s.abs() < 1e-12 {
            return Err(Error::SingularLocus(format!("uv = 2 at (u, v) = ({u}, {v})")));
        }
        Ok(ComplexVec3::new(re(2.0 * u / s), re(2.0 * v / s), re((2.0 + u * v) / s)))
    }

    pub fn oracle_rp(u: f64, v: f64, lambda: Complex64) -> Result<(ComplexMat3, ComplexVec3)> {
        let frame = rp_frame(u, v, lambda)?;
        let lift = frame.column(2).into_owned();
        Ok((frame, lift))
    }

    pub fn u_vac() -> ComplexMat3 {
        elementary(1, 3) - elementary(2, 1) * I + elementary(3, 2)
    }

    pub fn v_vac() -> ComplexMat3 {
        elementary(1, 2) * I + elementary(2, 3) + elementary(3, 1)
    }

    pub fn clifford_frame(u: f64, v: f64, lambda: Complex64) -> ComplexMat3 {
        mat_exp(&(u_vac() * (re(u) / lambda) + v_vac() * (lambda * v)))
    }

    fn delta() -> Complex64 {
        Complex64::from_polar(1.0, 2.0 * PI / 3.0)
    }

    pub fn clifford_f0(u: f64, v: f64) -> ComplexVec3 {
        let d = delta();
        let d2 = d * d;
        let s = 1.0 / 3f64.sqrt();
        ComplexVec3::new(
            (I * (d * u - d2 * v)).exp() * s,
            -(I * (d2 * u - d * v)).exp() * s,
            (I * (u - v)).exp() * s,
        )
    }

    pub fn clifford_f0_matrix() -> ComplexMat3 {
        let d = delta();
        let d2 = d * d;
        let s = re(1.0 / 3f64.sqrt());
        ComplexMat3::new(
            -I * d2, I * d, -I,
            I * d, -I * d2, I,
            re(1.0), re(-1.0), re(1.0),
        ) * s
    }

    pub fn oracle_clifford(u: f64, v: f64, lambda: Complex64) -> (ComplexMat3, ComplexVec3) {
        let frame = clifford_frame(u, v, lambda);
        let lift = frame.column(2).into_owned();
        (frame, lift)
    }

    /// Max over `n` samples of `|f0(u + shift, a - u - shift) - f0(u, a - u)|` for `u` in `[0, 2 pi)`.
    pub fn closure_defect(a: f64, n: usize, shift: f64) -> f64 {
        (0..n)
            .map(|k| {
                let u = 2.0 * PI * k as f64 / n as f64;
                let here = clifford_f0(u, a - u);
                let there = clifford_f0(u + shift, a - u - shift);
                max_abs_vec(&(there - here))
            })
            .fold(0.0, f64::max)
    }

    /// Closure of the cylinder along `v = -u + a` over one period `2 pi` in `u`.
    pub fn closure_check_clifford(a: f64, n: usize) -> Result<f64> {
        if n < 8 {
            return Err(Error::InvalidData(format!("closure check needs at least 8 samples, got {n}")));
        }
        Ok(closure_defect(a, n, 2.0 * PI))
    }

    /// `e_3`, the value of every lift at the basepoint.
    pub fn basepoint() -> ComplexVec3 {
        basis(3)
    }
}
