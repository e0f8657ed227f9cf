//! Uniform null-coordinate grids, node-valued fields and finite-difference stencils.

use std::ops::{Add, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{ComplexMat3, ComplexVec3};

/// Uniform tensor grid `u_i = u0 + i*hu`, `v_j = v0 + j*hv` with `nu x nv` cells.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub u0: f64,
    pub v0: f64,
    pub hu: f64,
    pub hv: f64,
    pub nu: usize,
    pub nv: usize,
}

impl Grid {
    /// Grid on `[u0,u1] x [v0,v1]` with `nu x nv` cells.
    pub fn new(u0: f64, u1: f64, v0: f64, v1: f64, nu: usize, nv: usize) -> Result<Self> {
        if !(u1 > u0) || !(v1 > v0) {
            return Err(Error::InvalidGrid(format!(
                "empty domain [{u0}, {u1}] x [{v0}, {v1}]"
            )));
        }
        if nu < 2 || nv < 2 {
            return Err(Error::InvalidGrid(format!("need at least 2 cells per axis, got {nu} x {nv}")));
        }
        Ok(Self { u0, v0, hu: (u1 - u0) / nu as f64, hv: (v1 - v0) / nv as f64, nu, nv })
    }

    /// Recovers a grid from node coordinates, rejecting nonuniform spacing.
    pub fn from_nodes(us: &[f64], vs: &[f64]) -> Result<Self> {
        fn spacing(xs: &[f64], axis: &str) -> Result<f64> {
            if xs.len() < 3 {
                return Err(Error::InvalidGrid(format!("{axis}-axis needs at least 3 nodes")));
            }
            let h = (xs[xs.len() - 1] - xs[0]) / (xs.len() - 1) as f64;
            if !(h > 0.0) {
                return Err(Error::InvalidGrid(format!("{axis}-axis is not increasing")));
            }
            for (k, w) in xs.windows(2).enumerate() {
                if ((w[1] - w[0]) - h).abs() > 1e-9 * h.max(1.0) {
                    return Err(Error::InvalidGrid(format!(
                        "nonuniform {axis}-spacing at node {k}: {} vs {h}",
                        w[1] - w[0]
                    )));
                }
            }
            Ok(h)
        }
        let hu = spacing(us, "u")?;
        let hv = spacing(vs, "v")?;
        Ok(Self { u0: us[0], v0: vs[0], hu, hv, nu: us.len() - 1, nv: vs.len() - 1 })
    }

    pub fn u(&self, i: usize) -> f64 {
        self.u0 + i as f64 * self.hu
    }

    pub fn v(&self, j: usize) -> f64 {
        self.v0 + j as f64 * self.hv
    }

    pub fn u1(&self) -> f64 {
        self.u(self.nu)
    }

    pub fn v1(&self) -> f64 {
        self.v(self.nv)
    }

    /// Number of nodes along u.
    pub fn nodes_u(&self) -> usize {
        self.nu + 1
    }

    pub fn nodes_v(&self) -> usize {
        self.nv + 1
    }

    pub fn len(&self) -> usize {
        self.nodes_u() * self.nodes_v()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn us(&self) -> Vec<f64> {
        (0..self.nodes_u()).map(|i| self.u(i)).collect()
    }

    pub fn vs(&self) -> Vec<f64> {
        (0..self.nodes_v()).map(|j| self.v(j)).collect()
    }

    /// Node indices `(i, j)` in row-major order (u outer, v inner).
    pub fn nodes(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.nodes_u()).flat_map(move |i| (0..self.nodes_v()).map(move |j| (i, j)))
    }

    /// Nodes at least `margin` lines away from every edge.
    pub fn interior(&self, margin: usize) -> impl Iterator<Item = (usize, usize)> + '_ {
        let (iu, iv) = (self.nu.saturating_sub(margin), self.nv.saturating_sub(margin));
        (margin..=iu).flat_map(move |i| (margin..=iv).map(move |j| (i, j)))
    }
}

/// Values of type `T` at every node of a [`Grid`].
#[derive(Debug, Clone, PartialEq)]
pub struct Field<T> {
    grid: Grid,
    data: Vec<T>,
}

impl<T: Clone> Field<T> {
    pub fn filled(grid: Grid, value: T) -> Self {
        Self { grid, data: vec![value; grid.len()] }
    }
}

impl<T> Field<T> {
    pub fn from_fn(grid: Grid, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let data = grid.nodes().map(|(i, j)| f(i, j)).collect();
        Self { grid, data }
    }

    pub fn from_vec(grid: Grid, data: Vec<T>) -> Result<Self> {
        if data.len() != grid.len() {
            return Err(Error::InvalidData(format!(
                "field has {} values, grid has {} nodes",
                data.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, data })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    #[inline]
    fn index(&self, i: usize, j: usize) -> usize {
        i * self.grid.nodes_v() + j
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> &T {
        &self.data[self.index(i, j)]
    }

    #[inline]
    pub fn at_mut(&mut self, i: usize, j: usize) -> &mut T {
        let k = self.index(i, j);
        &mut self.data[k]
    }

    pub fn values(&self) -> &[T] {
        &self.data
    }

    pub fn map<S>(&self, f: impl Fn(&T) -> S) -> Field<S> {
        Field { grid: self.grid, data: self.data.iter().map(f).collect() }
    }

    pub fn map_indexed<S>(&self, mut f: impl FnMut(usize, usize, &T) -> S) -> Field<S> {
        Field::from_fn(self.grid, |i, j| f(i, j, self.at(i, j)))
    }

    /// Largest value of `f` over nodes at least `margin` lines from the edges.
    pub fn max_over(&self, margin: usize, f: impl Fn(&T) -> f64) -> f64 {
        self.grid.interior(margin).map(|(i, j)| f(self.at(i, j))).fold(0.0, f64::max)
    }

    pub fn min_over(&self, margin: usize, f: impl Fn(&T) -> f64) -> f64 {
        self.grid.interior(margin).map(|(i, j)| f(self.at(i, j))).fold(f64::INFINITY, f64::min)
    }
}

/// Values that can be differenced: closed under addition, subtraction and real scaling.
pub trait Linear: Copy + Add<Output = Self> + Sub<Output = Self> {
    fn scale(self, s: f64) -> Self;
}

impl Linear for f64 {
    fn scale(self, s: f64) -> Self {
        self * s
    }
}

impl Linear for Complex64 {
    fn scale(self, s: f64) -> Self {
        self * s
    }
}

impl Linear for ComplexVec3 {
    fn scale(self, s: f64) -> Self {
        self * Complex64::new(s, 0.0)
    }
}

impl Linear for ComplexMat3 {
    fn scale(self, s: f64) -> Self {
        self * Complex64::new(s, 0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    U,
    V,
}

/// First derivative along `axis`: central in the interior, second-order one-sided at the edges.
pub fn d1<T: Linear>(field: &Field<T>, axis: Axis) -> Field<T> {
    let g = *field.grid();
    let (n, h) = match axis {
        Axis::U => (g.nu, g.hu),
        Axis::V => (g.nv, g.hv),
    };
    let get = |i: usize, j: usize, k: usize| match axis {
        Axis::U => *field.at(k, j),
        Axis::V => *field.at(i, k),
    };
    Field::from_fn(g, |i, j| {
        let k = if axis == Axis::U { i } else { j };
        let f = |m: usize| get(i, j, m);
        if k == 0 {
            (f(1).scale(4.0) - f(0).scale(3.0) - f(2)).scale(0.5 / h)
        } else if k == n {
            (f(n).scale(3.0) - f(n - 1).scale(4.0) + f(n - 2)).scale(0.5 / h)
        } else {
            (f(k + 1) - f(k - 1)).scale(0.5 / h)
        }
    })
}

pub fn d_u<T: Linear>(field: &Field<T>) -> Field<T> {
    d1(field, Axis::U)
}

pub fn d_v<T: Linear>(field: &Field<T>) -> Field<T> {
    d1(field, Axis::V)
}

/// Mixed derivative; on interior nodes this is the 4-point cross stencil.
pub fn d_uv<T: Linear>(field: &Field<T>) -> Field<T> {
    d_v(&d_u(field))
}

/// Third derivative along `axis`: the 4-point central stencil where two neighbours exist on
/// each side, 4-point one-sided (first order) on the two outermost lines.
pub fn d3<T: Linear>(field: &Field<T>, axis: Axis) -> Field<T> {
    let g = *field.grid();
    let (n, h) = match axis {
        Axis::U => (g.nu, g.hu),
        Axis::V => (g.nv, g.hv),
    };
    let h3 = h * h * h;
    Field::from_fn(g, |i, j| {
        let k = if axis == Axis::U { i } else { j };
        let f = |m: usize| match axis {
            Axis::U => *field.at(m, j),
            Axis::V => *field.at(i, m),
        };
        if k >= 2 && k + 2 <= n {
            (f(k + 2) - f(k + 1).scale(2.0) + f(k - 1).scale(2.0) - f(k - 2)).scale(0.5 / h3)
        } else if k < 2 {
            (f(k + 3) - f(k + 2).scale(3.0) + f(k + 1).scale(3.0) - f(k)).scale(1.0 / h3)
        } else {
            (f(k) - f(k - 1).scale(3.0) + f(k - 2).scale(3.0) - f(k - 3)).scale(1.0 / h3)
        }
    })
}
