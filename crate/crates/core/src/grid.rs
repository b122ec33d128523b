//! Tensor quadrature grids on `[-L, L]ⁿ` and sampled fields on them.

use crate::basis::hermite_table;
use crate::error::{Error, Result};
use crate::special::composite_gauss_legendre;
use crate::value::ValueSpace;
use num_complex::Complex64;

/// Largest supported ambient dimension.
pub const MAX_DIM: usize = 3;
/// Upper bound on the total number of grid nodes.
pub const NODE_BUDGET: usize = 1 << 22;
const PANEL_ORDER: usize = 16;

/// Tensor product of one composite Gauss–Legendre rule per axis.
#[derive(Clone, Debug)]
pub struct SpatialGrid {
    dim: usize,
    cap: usize,
    halfwidth: f64,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

/// Default nodes per axis: 400 for n = 1, 128 for n = 2, 64 for n = 3.
pub fn default_nodes(dim: usize) -> usize {
    match dim {
        1 => 400,
        2 => 128,
        _ => 64,
    }
}

/// Grid on `[-L, L]ⁿ` with `L = √(2M+1) + 4`, sized for expansions of per-axis degree `≤ M`.
pub fn default_grid(dim: usize, cap: usize, nodes_per_axis: usize) -> Result<SpatialGrid> {
    SpatialGrid::new(dim, cap, nodes_per_axis)
}

impl SpatialGrid {
    pub fn new(dim: usize, cap: usize, nodes_per_axis: usize) -> Result<Self> {
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::Budget(format!("spatial grids support 1 ≤ n ≤ {MAX_DIM}, got n = {dim}")));
        }
        if nodes_per_axis < 64 {
            return Err(Error::param(format!("need at least 64 nodes per axis, got {nodes_per_axis}")));
        }
        let total = (nodes_per_axis as u128).pow(dim as u32);
        if total > NODE_BUDGET as u128 {
            return Err(Error::Budget(format!(
                "{nodes_per_axis}^{dim} grid nodes exceed the budget of {NODE_BUDGET}"
            )));
        }
        let halfwidth = (2.0 * cap as f64 + 1.0).sqrt() + 4.0;
        let (nodes, weights) = panel_rule(halfwidth, nodes_per_axis);
        Ok(SpatialGrid { dim, cap, halfwidth, nodes, weights })
    }

    /// Grid with the default node count for this dimension.
    pub fn for_cap(dim: usize, cap: usize) -> Result<Self> {
        Self::new(dim, cap, default_nodes(dim))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Degree bound the box was sized for.
    pub fn design_cap(&self) -> usize {
        self.cap
    }

    pub fn halfwidth(&self) -> f64 {
        self.halfwidth
    }

    pub fn axis_nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn axis_weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn nodes_per_axis(&self) -> usize {
        self.nodes.len()
    }

    pub fn len(&self) -> usize {
        self.nodes.len().pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn shape(&self) -> Vec<usize> {
        vec![self.nodes.len(); self.dim]
    }

    pub fn point(&self, flat: usize) -> Vec<f64> {
        crate::tensor::unflatten(flat, &self.shape())
            .into_iter()
            .map(|i| self.nodes[i])
            .collect()
    }

    pub fn weight(&self, flat: usize) -> f64 {
        crate::tensor::unflatten(flat, &self.shape())
            .into_iter()
            .map(|i| self.weights[i])
            .product()
    }

    /// All tensor weights in row-major order.
    pub fn tensor_weights(&self) -> Vec<f64> {
        let mut w = vec![1.0];
        for _ in 0..self.dim {
            w = w.iter().flat_map(|&a| self.weights.iter().map(move |&b| a * b)).collect();
        }
        w
    }

    /// Row-major `N × (deg+1)` table `h_m(x_i)`.
    pub fn hermite_matrix(&self, deg: usize) -> Vec<f64> {
        self.nodes.iter().flat_map(|&x| hermite_table(deg, x)).collect()
    }

    /// Row-major `(deg+1) × N` table `w_i h_m(x_i)`.
    pub(crate) fn analysis_matrix(&self, deg: usize) -> Vec<f64> {
        let n = self.nodes.len();
        let mut out = vec![0.0; (deg + 1) * n];
        for (i, (&x, &w)) in self.nodes.iter().zip(&self.weights).enumerate() {
            for (m, h) in hermite_table(deg, x).into_iter().enumerate() {
                out[m * n + i] = w * h;
            }
        }
        out
    }
}

fn panel_rule(halfwidth: f64, nodes: usize) -> (Vec<f64>, Vec<f64>) {
    let panels = (nodes / PANEL_ORDER).max(1);
    let base = nodes / panels;
    let extra = nodes % panels;
    let width = 2.0 * halfwidth / panels as f64;
    let mut xs = Vec::with_capacity(nodes);
    let mut ws = Vec::with_capacity(nodes);
    for p in 0..panels {
        let order = base + usize::from(p < extra);
        let a = -halfwidth + width * p as f64;
        let b = if p + 1 == panels { halfwidth } else { a + width };
        let (x, w) = composite_gauss_legendre(&[a, b], order);
        xs.extend(x);
        ws.extend(w);
    }
    (xs, ws)
}

/// Values sampled at every node of a [`SpatialGrid`], row-major with the value components
/// innermost.
#[derive(Clone, Debug, PartialEq)]
pub struct GridField {
    pub dim: usize,
    pub width: usize,
    pub data: Vec<Complex64>,
}

impl GridField {
    pub fn from_fn<F>(grid: &SpatialGrid, width: usize, f: F) -> Result<Self>
    where
        F: Fn(&[f64]) -> Vec<Complex64>,
    {
        let mut data = Vec::with_capacity(grid.len() * width);
        for i in 0..grid.len() {
            let v = f(&grid.point(i));
            if v.len() != width {
                return Err(Error::DimensionMismatch { expected: width, found: v.len() });
            }
            data.extend(v);
        }
        Ok(GridField { dim: grid.dim(), width, data })
    }

    /// Real scalar field.
    pub fn from_real_fn<F>(grid: &SpatialGrid, f: F) -> Result<Self>
    where
        F: Fn(&[f64]) -> f64,
    {
        Self::from_fn(grid, 1, |x| vec![Complex64::new(f(x), 0.0)])
    }

    pub fn value(&self, node: usize) -> &[Complex64] {
        &self.data[node * self.width..(node + 1) * self.width]
    }

    pub fn nodes(&self) -> usize {
        self.data.len() / self.width.max(1)
    }

    /// `(Σ_nodes w ‖f(x)‖^p)^{1/p}` with the norm of `space`.
    pub fn lp_norm(&self, grid: &SpatialGrid, space: &ValueSpace, p: f64) -> Result<f64> {
        check_p(p)?;
        if self.width != space.width() {
            return Err(Error::DimensionMismatch { expected: space.width(), found: self.width });
        }
        if self.nodes() != grid.len() {
            return Err(Error::DimensionMismatch { expected: grid.len(), found: self.nodes() });
        }
        let norms: Vec<f64> = (0..self.nodes()).map(|i| space.norm(self.value(i))).collect();
        Ok(weighted_lp(&norms, &grid.tensor_weights(), p))
    }
}

pub(crate) fn check_p(p: f64) -> Result<()> {
    if !(p > 1.0) || !p.is_finite() {
        return Err(Error::param(format!("L^p exponent must satisfy 1 < p < ∞, got {p}")));
    }
    Ok(())
}

/// `(Σ w_i |v_i|^p)^{1/p}`, scaled by `max |v_i|` to avoid overflow.
pub(crate) fn weighted_lp(values: &[f64], weights: &[f64], p: f64) -> f64 {
    let m = values.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    if m == 0.0 {
        return 0.0;
    }
    let s: f64 = values.iter().zip(weights).map(|(v, w)| w * (v.abs() / m).powf(p)).sum();
    m * s.powf(1.0 / p)
}
