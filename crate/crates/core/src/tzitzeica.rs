//! Characteristic (Goursat) initial value problem for the Tzitzeica equation
//! `omega_uv = e^omega - Q R e^{-2 omega} + m l` on null coordinates.
//!
//! `Q`, `R`, `l` and `m` are purely imaginary. They are carried as real functions
//! `q`, `r`, `l_im`, `m_im` with `Q = i q` and so on; see [`tzitzeica_rhs`].

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{d_u, d_v, Field, Grid};

/// Right-hand side `e^omega - QR e^{-2 omega} + m l` in terms of the real carriers.
///
/// With `Q = iq`, `R = ir`, `l = i l_im`, `m = i m_im` we have `-QR = qr` and `ml = -m_im l_im`.
#[inline]
pub fn tzitzeica_rhs(omega: f64, q: f64, r: f64, l_im: f64, m_im: f64) -> f64 {
    omega.exp() + q * r * (-2.0 * omega).exp() - m_im * l_im
}

/// Analytic solution `omega = log(4 / (uv - 2)^2)` of `omega_uv = e^omega` with zero data on
/// both axes (the real projective example, on the real branch).
pub fn rp_omega(u: f64, v: f64) -> f64 {
    (4.0 / (u * v - 2.0).powi(2)).ln()
}

/// Characteristic boundary data on `[u0,u1] x [v0,v1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GoursatData {
    grid: Grid,
    /// `omega(u_i, v0)`
    u_axis: Vec<f64>,
    /// `omega(u0, v_j)`
    v_axis: Vec<f64>,
    /// `q(u_i)` with `Q = i q`
    q: Vec<f64>,
    /// `r(v_j)` with `R = i r`
    r: Vec<f64>,
    /// Constant product `l_im * m_im` of an injected (non-minimal) mean curvature form.
    lm_product: f64,
}

impl GoursatData {
    pub fn new(grid: Grid, u_axis: Vec<f64>, v_axis: Vec<f64>, q: Vec<f64>, r: Vec<f64>) -> Result<Self> {
        let check = |name: &str, xs: &[f64], n: usize| -> Result<()> {
            if xs.len() != n {
                return Err(Error::InvalidData(format!("{name} has {} samples, expected {n}", xs.len())));
            }
            if let Some(k) = xs.iter().position(|x| !x.is_finite()) {
                return Err(Error::InvalidData(format!("{name}[{k}] is not finite")));
            }
            Ok(())
        };
        check("u-axis boundary", &u_axis, grid.nodes_u())?;
        check("v-axis boundary", &v_axis, grid.nodes_v())?;
        check("q", &q, grid.nodes_u())?;
        check("r", &r, grid.nodes_v())?;
        if (u_axis[0] - v_axis[0]).abs() > 1e-12 {
            return Err(Error::InvalidData(format!(
                "boundary data disagree at the corner: {} vs {}",
                u_axis[0], v_axis[0]
            )));
        }
        Ok(Self { grid, u_axis, v_axis, q, r, lm_product: 0.0 })
    }

    /// Samples boundary values and coefficients from closures on the grid nodes.
    pub fn from_fns(
        grid: Grid,
        u_axis: impl Fn(f64) -> f64,
        v_axis: impl Fn(f64) -> f64,
        q: impl Fn(f64) -> f64,
        r: impl Fn(f64) -> f64,
    ) -> Result<Self> {
        let us = grid.us();
        let vs = grid.vs();
        Self::new(
            grid,
            us.iter().map(|&u| u_axis(u)).collect(),
            vs.iter().map(|&v| v_axis(v)).collect(),
            us.iter().map(|&u| q(u)).collect(),
            vs.iter().map(|&v| r(v)).collect(),
        )
    }

    /// Zero boundary data with constant coefficients.
    pub fn zero_boundary(grid: Grid, q: f64, r: f64) -> Result<Self> {
        Self::from_fns(grid, |_| 0.0, |_| 0.0, |_| q, |_| r)
    }

    /// Adds the constant `m l` term of a constant mean curvature form `l = i l_im, m = i m_im`.
    pub fn with_constant_mean_curvature_form(mut self, l_im: f64, m_im: f64) -> Self {
        self.lm_product = l_im * m_im;
        self
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn q(&self) -> &[f64] {
        &self.q
    }

    pub fn r(&self) -> &[f64] {
        &self.r
    }

    pub fn u_axis(&self) -> &[f64] {
        &self.u_axis
    }

    pub fn v_axis(&self) -> &[f64] {
        &self.v_axis
    }
}

/// Solved `omega` on the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionField {
    pub omega: Field<f64>,
}

impl SolutionField {
    pub fn grid(&self) -> &Grid {
        self.omega.grid()
    }

    pub fn hu(&self) -> f64 {
        self.grid().hu
    }

    pub fn hv(&self) -> f64 {
        self.grid().hv
    }

    /// Max-abs deviation from an exact solution sampled on the nodes.
    pub fn max_error(&self, exact: impl Fn(f64, f64) -> f64) -> f64 {
        let g = *self.grid();
        self.omega
            .map_indexed(|i, j, w| (w - exact(g.u(i), g.v(j))).abs())
            .max_over(0, |e| *e)
    }
}

/// Marches the characteristic cells with one predictor-corrector pass per cell.
///
/// For a cell with lower-left node `(i, j)` the new corner is
/// `w[i+1][j+1] = w[i+1][j] + w[i][j+1] - w[i][j] + hu*hv*F(mid)`, where `F` is evaluated at
/// the cell midpoint with the average of the three known corners and the predicted one.
pub fn solve_goursat(data: &GoursatData) -> Result<SolutionField> {
    let g = data.grid;
    let mut omega = Field::filled(g, 0.0);
    for i in 0..g.nodes_u() {
        *omega.at_mut(i, 0) = data.u_axis[i];
    }
    for j in 0..g.nodes_v() {
        *omega.at_mut(0, j) = data.v_axis[j];
    }
    let area = g.hu * g.hv;
    for i in 0..g.nu {
        let q_mid = 0.5 * (data.q[i] + data.q[i + 1]);
        for j in 0..g.nv {
            let r_mid = 0.5 * (data.r[j] + data.r[j + 1]);
            let w00 = *omega.at(i, j);
            let w10 = *omega.at(i + 1, j);
            let w01 = *omega.at(i, j + 1);
            let predicted = w10 + w01 - w00;
            let w_mid = 0.25 * (w00 + w10 + w01 + predicted);
            let f = w_mid.exp() + q_mid * r_mid * (-2.0 * w_mid).exp() - data.lm_product;
            let w11 = predicted + area * f;
            if !w11.is_finite() || w11.abs() > 700.0 {
                return Err(Error::BlowUp { i, j, u: g.u(i), v: g.v(j) });
            }
            *omega.at_mut(i + 1, j + 1) = w11;
        }
    }
    Ok(SolutionField { omega })
}

/// Pointwise residual of the minimal Tzitzeica equation.
#[derive(Debug, Clone, PartialEq)]
pub struct Residual {
    /// Residual at interior nodes, zero on the boundary lines.
    pub field: Field<f64>,
    pub max_abs: f64,
}

/// Central-difference `omega_uv - (e^omega + q r e^{-2 omega})` at interior nodes.
pub fn residual(field: &SolutionField, q: &[f64], r: &[f64]) -> Residual {
    residual_with_lm(field, q, r, 0.0)
}

/// Residual including a constant `l_im * m_im` term.
pub fn residual_with_lm(field: &SolutionField, q: &[f64], r: &[f64], lm_product: f64) -> Residual {
    let g = *field.grid();
    let w = &field.omega;
    let res = Field::from_fn(g, |i, j| {
        if i == 0 || j == 0 || i == g.nu || j == g.nv {
            return 0.0;
        }
        let w_uv = (w.at(i + 1, j + 1) - w.at(i + 1, j - 1) - w.at(i - 1, j + 1) + w.at(i - 1, j - 1))
            / (4.0 * g.hu * g.hv);
        w_uv - (w.at(i, j).exp() + q[i] * r[j] * (-2.0 * w.at(i, j)).exp() - lm_product)
    });
    let max_abs = res.max_over(1, |x| x.abs());
    Residual { field: res, max_abs }
}

/// Real carrier fields for the full compatibility system on a common grid.
#[derive(Debug, Clone, PartialEq)]
pub struct CompatFields {
    pub omega: Field<f64>,
    pub q: Field<f64>,
    pub r: Field<f64>,
    pub l_im: Field<f64>,
    pub m_im: Field<f64>,
}

/// Max-abs residuals of the three compatibility equations over interior nodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CompatReport {
    /// `omega_uv - e^omega + QR e^{-2 omega} - m l`
    pub gauss: f64,
    /// `l_v - m_u` (imaginary carrier)
    pub closedness: f64,
    /// `Q_v e^{-2 omega} + (e^{-omega} l)_u` (imaginary carrier)
    pub codazzi_u: f64,
    /// `R_u e^{-2 omega} + (e^{-omega} m)_v` (imaginary carrier)
    pub codazzi_v: f64,
}

impl CompatReport {
    pub fn max(&self) -> f64 {
        self.gauss.max(self.closedness).max(self.codazzi_u).max(self.codazzi_v)
    }
}

pub fn compatibility_check_general(fields: &CompatFields) -> CompatReport {
    let CompatFields { omega, q, r, l_im, m_im } = fields;
    let w_uv = d_v(&d_u(omega));
    let gauss = w_uv.map_indexed(|i, j, wuv| {
        wuv - tzitzeica_rhs(*omega.at(i, j), *q.at(i, j), *r.at(i, j), *l_im.at(i, j), *m_im.at(i, j))
    });

    let l_v = d_v(l_im);
    let m_u = d_u(m_im);
    let closed = l_v.map_indexed(|i, j, lv| lv - m_u.at(i, j));

    let e_l = l_im.map_indexed(|i, j, l| (-omega.at(i, j)).exp() * l);
    let e_m = m_im.map_indexed(|i, j, m| (-omega.at(i, j)).exp() * m);
    let e_l_u = d_u(&e_l);
    let e_m_v = d_v(&e_m);
    let q_v = d_v(q);
    let r_u = d_u(r);
    let codazzi_u = q_v.map_indexed(|i, j, qv| qv * (-2.0 * omega.at(i, j)).exp() + e_l_u.at(i, j));
    let codazzi_v = r_u.map_indexed(|i, j, ru| ru * (-2.0 * omega.at(i, j)).exp() + e_m_v.at(i, j));

    CompatReport {
        gauss: gauss.max_over(1, |x| x.abs()),
        closedness: closed.max_over(1, |x| x.abs()),
        codazzi_u: codazzi_u.max_over(1, |x| x.abs()),
        codazzi_v: codazzi_v.max_over(1, |x| x.abs()),
    }
}
