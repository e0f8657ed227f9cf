//! Spectral family of Maurer-Cartan forms, flatness residuals and extended frame integration.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{d_u, d_v, Field, Grid};
use crate::linalg::{self, commutator, max_abs, re, ComplexMat3, I};
use crate::loop_algebra::{self, epsilon, LoopMatrix};
use crate::tzitzeica::SolutionField;

/// Hard bound on the frame drift; integration aborts past it.
pub const DRIFT_ABORT: f64 = 1e-4;

/// Default closedness tolerance for the mean curvature 1-form.
pub const DEFAULT_CLOSEDNESS_TOL: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Flavor {
    /// `l = m = 0`; the extended frame family.
    Minimal,
    /// Nonzero `l, m` with the rotation by `e^{+-L}`; the normalized frame family.
    General,
    /// Coordinate frame `(e^{-omega/2} f_u, e^{-omega/2} f_v, f)`. Carries no spectral parameter.
    Coordinate,
}

#[derive(Debug)]
struct McData {
    grid: Grid,
    flavor: Flavor,
    omega: Field<f64>,
    omega_u: Field<f64>,
    omega_v: Field<f64>,
    q: Vec<f64>,
    r: Vec<f64>,
    l_im: Field<f64>,
    m_im: Field<f64>,
    big_l_im: Field<f64>,
}

/// Purely imaginary primitive `L = i L_im` of the mean curvature 1-form, `L(basepoint) = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct LIntegral {
    pub l_im: Field<f64>,
}

impl LIntegral {
    pub fn zero(grid: Grid) -> Self {
        Self { l_im: Field::filled(grid, 0.0) }
    }
}

/// The Maurer-Cartan pair `(U^lambda, V^lambda)` as a grid evaluator.
#[derive(Debug, Clone)]
pub struct McForm {
    data: Arc<McData>,
    lambda: Complex64,
}

fn check_coefficients(sol: &SolutionField, q: &[f64], r: &[f64]) -> Result<()> {
    let g = sol.grid();
    if g.nu < 2 || g.nv < 2 {
        return Err(Error::InvalidGrid("Maurer-Cartan form needs at least 3x3 nodes".into()));
    }
    if q.len() != g.nodes_u() || r.len() != g.nodes_v() {
        return Err(Error::InvalidData(format!(
            "q/r have {}/{} samples, grid has {}x{} nodes",
            q.len(),
            r.len(),
            g.nodes_u(),
            g.nodes_v()
        )));
    }
    Ok(())
}

fn check_lambda(lambda: Complex64) -> Result<()> {
    if lambda.norm() == 0.0 || !lambda.is_finite() {
        return Err(Error::ZeroLambda);
    }
    Ok(())
}

fn assemble(
    sol: &SolutionField,
    q: &[f64],
    r: &[f64],
    flavor: Flavor,
    l_im: Field<f64>,
    m_im: Field<f64>,
    big_l_im: Field<f64>,
    lambda: Complex64,
) -> Result<McForm> {
    check_coefficients(sol, q, r)?;
    check_lambda(lambda)?;
    let data = McData {
        grid: *sol.grid(),
        flavor,
        omega_u: d_u(&sol.omega),
        omega_v: d_v(&sol.omega),
        omega: sol.omega.clone(),
        q: q.to_vec(),
        r: r.to_vec(),
        l_im,
        m_im,
        big_l_im,
    };
    Ok(McForm { data: Arc::new(data), lambda })
}

/// Minimal data: the extended frame family with `Q = i q(u)`, `R = i r(v)`.
pub fn build_minimal_mc(sol: &SolutionField, q: &[f64], r: &[f64], lambda: Complex64) -> Result<McForm> {
    let g = *sol.grid();
    let zero = Field::filled(g, 0.0);
    assemble(sol, q, r, Flavor::Minimal, zero.clone(), zero.clone(), zero, lambda)
}

/// General data with `l = i l_im`, `m = i m_im` and the integral `L` of `l du + m dv`.
pub fn build_general_mc(
    sol: &SolutionField,
    q: &[f64],
    r: &[f64],
    l_im: &Field<f64>,
    m_im: &Field<f64>,
    integral: &LIntegral,
    lambda: Complex64,
    closedness_tol: f64,
) -> Result<McForm> {
    let residual = closedness_residual(l_im, m_im);
    if !(residual <= closedness_tol) {
        return Err(Error::NotClosed { residual, tol: closedness_tol });
    }
    assemble(sol, q, r, Flavor::General, l_im.clone(), m_im.clone(), integral.l_im.clone(), lambda)
}

/// Maurer-Cartan form of the coordinate frame itself (trace `2l du + 2m dv`).
pub fn build_coordinate_mc(sol: &SolutionField, q: &[f64], r: &[f64], l_im: &Field<f64>, m_im: &Field<f64>) -> Result<McForm> {
    let zero = Field::filled(*sol.grid(), 0.0);
    assemble(sol, q, r, Flavor::Coordinate, l_im.clone(), m_im.clone(), zero, re(1.0))
}

impl McForm {
    pub fn flavor(&self) -> Flavor {
        self.data.flavor
    }

    /// Same data at another spectral parameter.
    pub fn with_lambda(&self, lambda: Complex64) -> Result<McForm> {
        check_lambda(lambda)?;
        Ok(McForm { data: Arc::clone(&self.data), lambda })
    }

    /// `U` as a Laurent polynomial in `lambda` at node `(i, j)`.
    pub fn u_loop(&self, i: usize, j: usize) -> LoopMatrix {
        let d = &self.data;
        let half = 0.5 * d.omega_u.at(i, j);
        let w = *d.omega.at(i, j);
        let big_l = I * *d.big_l_im.at(i, j);
        let q = I * d.q[i];
        let m = I * *d.m_im.at(i, j);
        let up = re(0.5 * w) + big_l;
        let down = re(0.5 * w) - big_l;
        let qe = -q * (-w).exp();
        let mut diag0 = linalg::diag(re(half), re(-half), re(0.0));
        let mut minus1 = ComplexMat3::zeros();
        minus1[(0, 2)] = up.exp();
        minus1[(1, 0)] = qe;
        minus1[(2, 1)] = down.exp();
        let mut plus1 = ComplexMat3::zeros();
        plus1[(0, 1)] = m;
        if d.flavor == Flavor::Coordinate {
            let l = I * *d.l_im.at(i, j);
            diag0 += linalg::diag(l, l, re(0.0));
            return LoopMatrix::constant(diag0 + minus1 + plus1);
        }
        LoopMatrix::from_terms(&[(-1, minus1), (0, diag0), (1, plus1)])
    }

    /// `V` as a Laurent polynomial in `lambda` at node `(i, j)`.
    pub fn v_loop(&self, i: usize, j: usize) -> LoopMatrix {
        let d = &self.data;
        let half = 0.5 * d.omega_v.at(i, j);
        let w = *d.omega.at(i, j);
        let big_l = I * *d.big_l_im.at(i, j);
        let r = I * d.r[j];
        let l = I * *d.l_im.at(i, j);
        let up = re(0.5 * w) + big_l;
        let down = re(0.5 * w) - big_l;
        let mut diag0 = linalg::diag(re(-half), re(half), re(0.0));
        let mut plus1 = ComplexMat3::zeros();
        plus1[(0, 1)] = -r * (-w).exp();
        plus1[(1, 2)] = up.exp();
        plus1[(2, 0)] = down.exp();
        let mut minus1 = ComplexMat3::zeros();
        minus1[(1, 0)] = l;
        if d.flavor == Flavor::Coordinate {
            let m = I * *d.m_im.at(i, j);
            diag0 += linalg::diag(m, m, re(0.0));
            return LoopMatrix::constant(diag0 + minus1 + plus1);
        }
        LoopMatrix::from_terms(&[(-1, minus1), (0, diag0), (1, plus1)])
    }
}

/// Anything that supplies `(U, V)` at grid nodes for one spectral parameter.
pub trait Connection: Sync {
    fn grid(&self) -> &Grid;
    fn lambda(&self) -> Complex64;
    fn u_at(&self, i: usize, j: usize) -> ComplexMat3;
    fn v_at(&self, i: usize, j: usize) -> ComplexMat3;
}

impl Connection for McForm {
    fn grid(&self) -> &Grid {
        &self.data.grid
    }

    fn lambda(&self) -> Complex64 {
        self.lambda
    }

    fn u_at(&self, i: usize, j: usize) -> ComplexMat3 {
        self.u_loop(i, j).eval(self.lambda)
    }

    fn v_at(&self, i: usize, j: usize) -> ComplexMat3 {
        self.v_loop(i, j).eval(self.lambda)
    }
}

/// Constant coefficient connection `U du + V dv`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantForm {
    pub grid: Grid,
    pub lambda: Complex64,
    pub u: ComplexMat3,
    pub v: ComplexMat3,
}

impl ConstantForm {
    pub fn zero(grid: Grid) -> Self {
        Self { grid, lambda: re(1.0), u: ComplexMat3::zeros(), v: ComplexMat3::zeros() }
    }
}

impl Connection for ConstantForm {
    fn grid(&self) -> &Grid {
        &self.grid
    }

    fn lambda(&self) -> Complex64 {
        self.lambda
    }

    fn u_at(&self, _: usize, _: usize) -> ComplexMat3 {
        self.u
    }

    fn v_at(&self, _: usize, _: usize) -> ComplexMat3 {
        self.v
    }
}

/// Max-abs of `l_v - m_u` over all nodes.
pub fn closedness_residual(l_im: &Field<f64>, m_im: &Field<f64>) -> f64 {
    let l_v = d_v(l_im);
    let m_u = d_u(m_im);
    l_v.map_indexed(|i, j, lv| (lv - m_u.at(i, j)).abs()).max_over(0, |x| *x)
}

/// Trapezoidal path integral of `l du + m dv`, first along `v = v0` in u, then along each u-line in v.
pub fn compute_l_integral(l_im: &Field<f64>, m_im: &Field<f64>, closedness_tol: f64) -> Result<LIntegral> {
    let residual = closedness_residual(l_im, m_im);
    if !(residual <= closedness_tol) {
        return Err(Error::NotClosed { residual, tol: closedness_tol });
    }
    let g = *l_im.grid();
    let mut out = Field::filled(g, 0.0);
    for i in 1..g.nodes_u() {
        *out.at_mut(i, 0) = out.at(i - 1, 0) + 0.5 * g.hu * (l_im.at(i - 1, 0) + l_im.at(i, 0));
    }
    for i in 0..g.nodes_u() {
        for j in 1..g.nodes_v() {
            *out.at_mut(i, j) = out.at(i, j - 1) + 0.5 * g.hv * (m_im.at(i, j - 1) + m_im.at(i, j));
        }
    }
    Ok(LIntegral { l_im: out })
}

/// Pointwise zero-curvature defect `U_v - V_u + [V, U]`.
#[derive(Debug, Clone)]
pub struct Flatness {
    /// Defect at interior nodes, zero on the boundary lines.
    pub field: Field<ComplexMat3>,
    pub max_abs: f64,
}

pub fn flatness_residual(mc: &impl Connection) -> Flatness {
    let g = *mc.grid();
    let field = Field::from_fn(g, |i, j| {
        if i == 0 || j == 0 || i == g.nu || j == g.nv {
            return ComplexMat3::zeros();
        }
        let u_v = (mc.u_at(i, j + 1) - mc.u_at(i, j - 1)) * re(0.5 / g.hv);
        let v_u = (mc.v_at(i + 1, j) - mc.v_at(i - 1, j)) * re(0.5 / g.hu);
        u_v - v_u + commutator(&mc.v_at(i, j), &mc.u_at(i, j))
    });
    let max_abs = field.max_over(1, max_abs);
    Flatness { field, max_abs }
}

/// Which characteristic line is integrated first from the basepoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Order {
    UFirst,
    VFirst,
}

/// Extended frame on the grid with its group-membership drift.
#[derive(Debug, Clone)]
pub struct FrameField {
    pub lambda: Complex64,
    pub frames: Field<ComplexMat3>,
    /// `||P conj(F)^T P F - id||` for real lambda; `|det F - det F(0,0)|` otherwise.
    pub drift: Field<f64>,
}

impl FrameField {
    pub fn grid(&self) -> &Grid {
        self.frames.grid()
    }

    pub fn at(&self, i: usize, j: usize) -> &ComplexMat3 {
        self.frames.at(i, j)
    }

    pub fn basepoint(&self) -> &ComplexMat3 {
        self.frames.at(0, 0)
    }

    pub fn max_drift(&self) -> f64 {
        self.drift.max_over(0, |d| *d)
    }

    fn with_frames(lambda: Complex64, frames: Field<ComplexMat3>) -> Self {
        let drift = drift_field(&frames, lambda);
        Self { lambda, frames, drift }
    }

    /// Newton projection of every node back onto U(2,1). Not applied by default.
    pub fn reunitarized(&self, iterations: usize) -> FrameField {
        let frames = self.frames.map(|f| project_u21(f, iterations));
        Self::with_frames(self.lambda, frames)
    }
}

fn is_real(lambda: Complex64) -> bool {
    lambda.im == 0.0
}

fn drift_field(frames: &Field<ComplexMat3>, lambda: Complex64) -> Field<f64> {
    if is_real(lambda) {
        frames.map(linalg::u21_residual)
    } else {
        let det0 = frames.at(0, 0).determinant();
        frames.map(|f| (f.determinant() - det0).norm())
    }
}

/// Iterates `X <- (X + P X^{-dagger} P) / 2`, whose fixed points are exactly U(2,1).
pub fn project_u21(m: &ComplexMat3, iterations: usize) -> ComplexMat3 {
    let p = linalg::form_p();
    let mut x = *m;
    for _ in 0..iterations {
        match x.adjoint().try_inverse() {
            Some(inv) => x = (x + p * inv * p) * re(0.5),
            None => break,
        }
    }
    x
}

/// One classical RK4 step of `F' = F A(t)` with the midpoint coefficient taken as the node average.
fn rk4_step(f: &ComplexMat3, a0: &ComplexMat3, a1: &ComplexMat3, h: f64) -> ComplexMat3 {
    let am = (a0 + a1) * re(0.5);
    let h = re(h);
    let half = h * 0.5;
    let k1 = f * a0;
    let k2 = (f + k1 * half) * am;
    let k3 = (f + k2 * half) * am;
    let k4 = (f + k3 * h) * a1;
    f + (k1 + (k2 + k3) * re(2.0) + k4) * (h / 6.0)
}

/// Integrates `F^{-1} dF = U du + V dv` from `F(0, 0) = id`.
pub fn integrate_frame(mc: &impl Connection, order: Order) -> Result<FrameField> {
    integrate_frame_from(mc, order, ComplexMat3::identity())
}

/// As [`integrate_frame`] with an arbitrary initial value at the basepoint.
pub fn integrate_frame_from(mc: &impl Connection, order: Order, initial: ComplexMat3) -> Result<FrameField> {
    let g = *mc.grid();
    let (nu, nv) = (g.nodes_u(), g.nodes_v());
    let mut frames = Field::filled(g, ComplexMat3::zeros());
    match order {
        Order::UFirst => {
            let mut first = Vec::with_capacity(nu);
            first.push(initial);
            for i in 1..nu {
                let f = rk4_step(&first[i - 1], &mc.u_at(i - 1, 0), &mc.u_at(i, 0), g.hu);
                first.push(f);
            }
            let lines: Vec<Vec<ComplexMat3>> = (0..nu)
                .into_par_iter()
                .map(|i| {
                    let mut line = Vec::with_capacity(nv);
                    line.push(first[i]);
                    let mut a_prev = mc.v_at(i, 0);
                    for j in 1..nv {
                        let a_next = mc.v_at(i, j);
                        let f = rk4_step(&line[j - 1], &a_prev, &a_next, g.hv);
                        line.push(f);
                        a_prev = a_next;
                    }
                    line
                })
                .collect();
            for (i, line) in lines.into_iter().enumerate() {
                for (j, f) in line.into_iter().enumerate() {
                    *frames.at_mut(i, j) = f;
                }
            }
        }
        Order::VFirst => {
            let mut first = Vec::with_capacity(nv);
            first.push(initial);
            for j in 1..nv {
                let f = rk4_step(&first[j - 1], &mc.v_at(0, j - 1), &mc.v_at(0, j), g.hv);
                first.push(f);
            }
            let lines: Vec<Vec<ComplexMat3>> = (0..nv)
                .into_par_iter()
                .map(|j| {
                    let mut line = Vec::with_capacity(nu);
                    line.push(first[j]);
                    let mut a_prev = mc.u_at(0, j);
                    for i in 1..nu {
                        let a_next = mc.u_at(i, j);
                        let f = rk4_step(&line[i - 1], &a_prev, &a_next, g.hu);
                        line.push(f);
                        a_prev = a_next;
                    }
                    line
                })
                .collect();
            for (j, line) in lines.into_iter().enumerate() {
                for (i, f) in line.into_iter().enumerate() {
                    *frames.at_mut(i, j) = f;
                }
            }
        }
    }
    let frame = FrameField::with_frames(mc.lambda(), frames);
    if let Some((i, j)) = g.nodes().find(|&(i, j)| !(*frame.drift.at(i, j) <= DRIFT_ABORT)) {
        return Err(Error::DriftExceeded {
            i,
            j,
            u: g.u(i),
            v: g.v(j),
            drift: *frame.drift.at(i, j),
            bound: DRIFT_ABORT,
        });
    }
    Ok(frame)
}

/// Max entry difference between u-first and v-first integration.
pub fn path_independence(mc: &impl Connection) -> Result<f64> {
    let a = integrate_frame(mc, Order::UFirst)?;
    let b = integrate_frame(mc, Order::VFirst)?;
    Ok(a.frames
        .map_indexed(|i, j, f| max_abs(&(f - b.at(i, j))))
        .max_over(0, |d| *d))
}

/// Right-multiplies every node by `G = diag(lambda, 1/lambda, 1)`, which lies in U(2,1) for real lambda.
pub fn gauge_by_g(frame: &FrameField, lambda: Complex64) -> Result<FrameField> {
    if !is_real(lambda) {
        return Err(Error::NonRealLambda { re: lambda.re, im: lambda.im });
    }
    check_lambda(lambda)?;
    let g = linalg::diag(lambda, lambda.inv(), re(1.0));
    let frames = frame.frames.map(|f| f * g);
    Ok(FrameField::with_frames(frame.lambda, frames))
}

/// Probe set for flatness: `{1, eps, eps^2, -1, 0.7, 1.3}` followed by the 16 roots of unity.
pub fn flatness_probes() -> Vec<Complex64> {
    let e = epsilon();
    let mut probes = vec![re(1.0), e, e * e, re(-1.0), re(0.7), re(1.3)];
    probes.extend(loop_algebra::probe_lambdas().into_iter().take(16));
    probes
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::elementary;
    use crate::loop_algebra::{sigma_hat_alg, twisted_loop_check, LoopKind};
    use crate::surface::oracle::{clifford_frame, rp_frame};
    use crate::tzitzeica::{rp_omega, solve_goursat, GoursatData};

    fn clifford(n: usize, side: f64) -> (SolutionField, Vec<f64>, Vec<f64>) {
        let g = Grid::new(0.0, side, 0.0, side, n, n).unwrap();
        let data = GoursatData::zero_boundary(g, 1.0, -1.0).unwrap();
        (solve_goursat(&data).unwrap(), data.q().to_vec(), data.r().to_vec())
    }

    fn rp(n: usize) -> (SolutionField, Vec<f64>, Vec<f64>) {
        let g = Grid::new(0.0, 0.5, 0.0, 0.5, n, n).unwrap();
        let data = GoursatData::zero_boundary(g, 0.0, 0.0).unwrap();
        (solve_goursat(&data).unwrap(), data.q().to_vec(), data.r().to_vec())
    }

    fn u_vac() -> ComplexMat3 {
        elementary(1, 3) - elementary(2, 1) * I + elementary(3, 2)
    }

    fn v_vac() -> ComplexMat3 {
        elementary(1, 2) * I + elementary(2, 3) + elementary(3, 1)
    }

    #[test]
    fn clifford_vacuum_matrices() {
        let (sol, q, r) = clifford(8, 1.0);
        let mc = build_minimal_mc(&sol, &q, &r, re(1.0)).unwrap();
        assert!(max_abs(&(mc.u_at(3, 4) - u_vac())) < 1e-15);
        assert!(max_abs(&(mc.v_at(3, 4) - v_vac())) < 1e-15);

        let lambda = Complex64::from_polar(0.8, 0.3);
        let mc = mc.with_lambda(lambda).unwrap();
        assert!(max_abs(&(mc.u_at(2, 2) - u_vac() / lambda)) < 1e-15);
        assert!(max_abs(&(mc.v_at(2, 2) - v_vac() * lambda)) < 1e-15);

        assert!(twisted_loop_check(&mc.u_loop(1, 1), LoopKind::Algebra, 1e-12));
        assert!(twisted_loop_check(&mc.v_loop(1, 1), LoopKind::Algebra, 1e-12));
        assert_eq!(build_minimal_mc(&sol, &q, &r, re(0.0)).unwrap_err(), Error::ZeroLambda);
    }

    #[test]
    fn minimal_form_is_traceless_and_twisted() {
        let (sol, q, r) = rp(16);
        let mc = build_minimal_mc(&sol, &q, &r, re(1.0)).unwrap();
        for (i, j) in sol.grid().nodes() {
            assert!(linalg::trace(&mc.u_at(i, j)).norm() < 1e-15);
            assert!(linalg::trace(&mc.v_at(i, j)).norm() < 1e-15);
        }
        assert!(twisted_loop_check(&mc.u_loop(5, 7), LoopKind::Algebra, 1e-12));
        assert!(twisted_loop_check(&mc.v_loop(5, 7), LoopKind::Algebra, 1e-12));
    }

    #[test]
    fn general_form_reduces_to_minimal() {
        let (sol, q, r) = rp(12);
        let g = *sol.grid();
        let zero = Field::filled(g, 0.0);
        let lambda = re(0.6);
        let general =
            build_general_mc(&sol, &q, &r, &zero, &zero, &LIntegral::zero(g), lambda, 1e-12).unwrap();
        let minimal = build_minimal_mc(&sol, &q, &r, lambda).unwrap();
        for (i, j) in g.nodes() {
            assert_eq!(general.u_at(i, j), minimal.u_at(i, j));
            assert_eq!(general.v_at(i, j), minimal.v_at(i, j));
        }
    }

    /// Constant `l = m = ic` on the vacuum `omega = 0` with `qr = c^2 - 1`.
    fn injected(c: f64, n: usize) -> McForm {
        let g = Grid::new(0.0, 0.5, 0.0, 0.5, n, n).unwrap();
        let data = GoursatData::zero_boundary(g, 1.0, c * c - 1.0)
            .unwrap()
            .with_constant_mean_curvature_form(c, c);
        let sol = solve_goursat(&data).unwrap();
        let l = Field::filled(g, c);
        let integral = compute_l_integral(&l, &l, 1e-12).unwrap();
        build_general_mc(&sol, data.q(), data.r(), &l, &l, &integral, re(1.0), 1e-12).unwrap()
    }

    #[test]
    fn general_form_at_one_matches_normalized_frame_form() {
        let c = 0.1;
        let mc = injected(c, 8);
        let g = *mc.grid();
        let (i, j) = (3, 5);
        let big_l = I * c * (g.u(i) + g.v(j));
        let m = I * c;
        let l = I * c;
        // vacuum: omega = 0, Q = i, R = i(c^2 - 1)
        let q = I;
        let r = I * (c * c - 1.0);
        let u_hat = nalgebra::Matrix3::new(
            re(0.0), m, big_l.exp(),
            -q, re(0.0), re(0.0),
            re(0.0), (-big_l).exp(), re(0.0),
        );
        let v_hat = nalgebra::Matrix3::new(
            re(0.0), -r, re(0.0),
            l, re(0.0), big_l.exp(),
            (-big_l).exp(), re(0.0), re(0.0),
        );
        assert!(max_abs(&(mc.u_at(i, j) - u_hat)) < 1e-14);
        assert!(max_abs(&(mc.v_at(i, j) - v_hat)) < 1e-14);
    }

    #[test]
    fn injected_form_is_flat_only_at_cube_roots() {
        let mc = injected(0.1, 32);
        let e = epsilon();
        for lambda in [re(1.0), e * e, e.powi(4)] {
            let res = flatness_residual(&mc.with_lambda(lambda).unwrap()).max_abs;
            assert!(res < 1e-5, "lambda={lambda}: {res}");
        }
        for lambda in [re(0.7), e, re(-1.0), re(1.3)] {
            let res = flatness_residual(&mc.with_lambda(lambda).unwrap()).max_abs;
            assert!(res >= 1e-3, "lambda={lambda}: {res}");
        }
    }

    #[test]
    fn l_integral_examples() {
        let g = Grid::new(0.0, 1.0, -0.5, 0.5, 10, 12).unwrap();
        let zero = Field::filled(g, 0.0);
        let out = compute_l_integral(&zero, &zero, 1e-9).unwrap();
        assert!(out.l_im.values().iter().all(|x| *x == 0.0));

        let (c1, c2) = (0.3, -0.7);
        let out =
            compute_l_integral(&Field::filled(g, c1), &Field::filled(g, c2), 1e-9).unwrap();
        for (i, j) in g.nodes() {
            let want = c1 * (g.u(i) - g.u0) + c2 * (g.v(j) - g.v0);
            assert!((out.l_im.at(i, j) - want).abs() < 1e-12);
        }

        let l = Field::from_fn(g, |_, j| g.v(j));
        assert!(matches!(compute_l_integral(&l, &zero, 1e-4), Err(Error::NotClosed { .. })));
    }

    #[test]
    fn flatness_examples() {
        let (sol, q, r) = clifford(8, 1.0);
        let mc = build_minimal_mc(&sol, &q, &r, re(1.0)).unwrap();
        for lambda in flatness_probes() {
            assert!(flatness_residual(&mc.with_lambda(lambda).unwrap()).max_abs <= 1e-12);
        }

        let (sol, q, r) = rp(32);
        let h2 = sol.hu() * sol.hv();
        let base = build_minimal_mc(&sol, &q, &r, re(1.0)).unwrap();
        for lambda in [re(1.0), re(0.7), Complex64::from_polar(1.0, std::f64::consts::PI / 7.0)] {
            let res = flatness_residual(&base.with_lambda(lambda).unwrap()).max_abs;
            assert!(res <= h2, "lambda={lambda}: {res}");
        }

        // broken compatibility: the defect tracks the size of the perturbation
        let g = *sol.grid();
        let perturbed = |eps: f64| SolutionField {
            omega: sol.omega.map_indexed(|i, j, w| w + eps * g.u(i) * g.v(j)),
        };
        let res = |eps| flatness_residual(&build_minimal_mc(&perturbed(eps), &q, &r, re(1.0)).unwrap()).max_abs;
        let (a, b) = (res(1e-3), res(2e-3));
        assert!(a > 5e-4 && (b / a - 2.0).abs() < 0.1, "{a} {b}");
    }

    #[test]
    fn flatness_is_sigma_equivariant() {
        let (sol, q, r) = rp(16);
        let base = build_minimal_mc(&sol, &q, &r, re(1.0)).unwrap();
        let lambda = Complex64::from_polar(0.9, 0.4);
        let here = flatness_residual(&base.with_lambda(lambda).unwrap());
        let rotated = flatness_residual(&base.with_lambda(lambda / epsilon()).unwrap());
        for (i, j) in sol.grid().interior(1) {
            let d = max_abs(&(sigma_hat_alg(rotated.field.at(i, j)) - here.field.at(i, j)));
            assert!(d < 1e-12);
        }
    }

    #[test]
    fn zero_form_gives_identity_frame() {
        let g = Grid::new(0.0, 1.0, 0.0, 1.0, 4, 4).unwrap();
        let frame = integrate_frame(&ConstantForm::zero(g), Order::UFirst).unwrap();
        assert!(frame.frames.values().iter().all(|f| *f == ComplexMat3::identity()));
        assert_eq!(frame.max_drift(), 0.0);
    }

    #[test]
    fn constant_form_matches_exponential_for_any_lambda() {
        let g = Grid::new(0.0, 1.0, 0.0, 1.0, 128, 128).unwrap();
        for lambda in [re(0.8), Complex64::from_polar(1.0, 0.7)] {
            let form = ConstantForm { grid: g, lambda, u: u_vac() / lambda, v: v_vac() * lambda };
            let frame = integrate_frame(&form, Order::VFirst).unwrap();
            let err = frame
                .frames
                .map_indexed(|i, j, f| max_abs(&(f - clifford_frame(g.u(i), g.v(j), lambda))))
                .max_over(0, |e| *e);
            assert!(err <= 1e-8, "{err}");
        }
    }

    #[test]
    fn clifford_frame_matches_exponential() {
        let (sol, q, r) = clifford(128, 1.0);
        let mc = build_minimal_mc(&sol, &q, &r, re(1.0)).unwrap();
        let frame = integrate_frame(&mc, Order::UFirst).unwrap();
        let g = *sol.grid();
        let err = frame
            .frames
            .map_indexed(|i, j, f| max_abs(&(f - clifford_frame(g.u(i), g.v(j), re(1.0)))))
            .max_over(0, |e| *e);
        assert!(err <= 1e-8, "{err}");
        assert!(frame.max_drift() <= 1e-6);
        assert_eq!(*frame.basepoint(), ComplexMat3::identity());
        assert!(path_independence(&mc).unwrap() <= 1e-10);
    }

    #[test]
    fn rp_frame_matches_closed_form() {
        let (sol, q, r) = rp(128);
        let mc = build_minimal_mc(&sol, &q, &r, re(1.0)).unwrap();
        let frame = integrate_frame(&mc, Order::UFirst).unwrap();
        let g = *sol.grid();
        let err = frame
            .frames
            .map_indexed(|i, j, f| max_abs(&(f - rp_frame(g.u(i), g.v(j), re(1.0)).unwrap())))
            .max_over(0, |e| *e);
        assert!(err <= 1e-6, "{err}");
        assert!(frame.max_drift() <= 1e-6, "{}", frame.max_drift());
        let det = frame.frames.max_over(0, |f| (f.determinant() - 1.0).norm());
        assert!(det <= 1e-8, "{det}");
    }

    #[test]
    fn path_independence_tracks_flatness() {
        let (sol, q, r) = rp(32);
        let mc = build_minimal_mc(&sol, &q, &r, re(1.0)).unwrap();
        let flat = path_independence(&mc).unwrap();
        assert!(flat <= 10.0 * sol.hu() * sol.hv(), "{flat}");

        let g = *sol.grid();
        let bent = SolutionField { omega: sol.omega.map_indexed(|i, j, w| w + 0.05 * g.u(i) * g.v(j)) };
        let mc = build_minimal_mc(&bent, &q, &r, re(1.0)).unwrap();
        let res = flatness_residual(&mc).max_abs;
        let diff = path_independence(&mc).unwrap();
        assert!(diff > 10.0 * flat);
        // the holonomy defect over the domain is of the order of the curvature times the area
        assert!(diff > 0.1 * res * 0.25 && diff < 10.0 * res * 0.25, "{diff} vs {res}");
    }

    #[test]
    fn gauge_examples() {
        let (sol, q, r) = rp(16);
        let mc = build_minimal_mc(&sol, &q, &r, re(0.8)).unwrap();
        let frame = integrate_frame(&mc, Order::UFirst).unwrap();
        let same = gauge_by_g(&frame, re(1.0)).unwrap();
        assert_eq!(same.frames, frame.frames);
        let gauged = gauge_by_g(&frame, re(0.8)).unwrap();
        assert!((gauged.max_drift() - frame.max_drift()).abs() < 1e-12);
        assert!(matches!(gauge_by_g(&frame, I), Err(Error::NonRealLambda { .. })));
    }

    #[test]
    fn reunitarization_removes_drift() {
        let (sol, q, r) = rp(8);
        let mc = build_minimal_mc(&sol, &q, &r, re(1.0)).unwrap();
        let frame = integrate_frame(&mc, Order::UFirst).unwrap();
        let noisy = FrameField::with_frames(
            frame.lambda,
            frame.frames.map(|f| f + elementary(1, 2) * re(1e-6)),
        );
        assert!(noisy.max_drift() > 1e-7);
        assert!(noisy.reunitarized(4).max_drift() < 1e-13);
    }

    #[test]
    fn drift_abort_is_reported() {
        // a form far from u(2,1): omega field with huge coefficients on a coarse grid
        let g = Grid::new(0.0, 1.0, 0.0, 1.0, 2, 2).unwrap();
        let sol = SolutionField { omega: Field::from_fn(g, |i, j| 6.0 * (i + j) as f64) };
        let mc = build_minimal_mc(&sol, &[0.0; 3], &[0.0; 3], re(1.0)).unwrap();
        assert!(matches!(integrate_frame(&mc, Order::UFirst), Err(Error::DriftExceeded { .. })));
    }

    #[test]
    fn exact_rp_field_integrates_accurately() {
        let g = Grid::new(0.0, 0.5, 0.0, 0.5, 64, 64).unwrap();
        let sol = SolutionField { omega: Field::from_fn(g, |i, j| rp_omega(g.u(i), g.v(j))) };
        let mc = build_minimal_mc(&sol, &[0.0; 65], &[0.0; 65], re(1.3)).unwrap();
        let frame = integrate_frame(&mc, Order::VFirst).unwrap();
        let err = frame
            .frames
            .map_indexed(|i, j, f| max_abs(&(f - rp_frame(g.u(i), g.v(j), re(1.3)).unwrap())))
            .max_over(0, |e| *e);
        assert!(err <= 1e-4, "{err}");
    }
}
