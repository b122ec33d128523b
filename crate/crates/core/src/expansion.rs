//! Finite Hermite expansions `f = Σ_k c_k h_k` with coefficients in a [`ValueSpace`].

use crate::basis::{hermite_table, MultiIndex};
use crate::error::{Error, Result};
use crate::grid::{GridField, SpatialGrid};
use crate::tensor::contract_all;
use crate::value::ValueSpace;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use std::collections::BTreeMap;

/// Coefficients whose norm falls below this are dropped by [`HermiteExpansion::analyze`].
pub const PRUNE_TOL: f64 = 1e-14;

#[derive(Clone, Debug, PartialEq)]
pub struct HermiteExpansion {
    dim: usize,
    cap: usize,
    space: ValueSpace,
    coeffs: BTreeMap<MultiIndex, Vec<Complex64>>,
}

impl HermiteExpansion {
    pub fn new(dim: usize, cap: usize, space: ValueSpace) -> Result<Self> {
        if dim == 0 {
            return Err(Error::param("dimension must be at least 1"));
        }
        Ok(HermiteExpansion { dim, cap, space, coeffs: BTreeMap::new() })
    }

    /// The single basis function `h_k` as a real scalar expansion.
    pub fn basis(k: &MultiIndex, cap: usize) -> Result<Self> {
        let mut e = Self::new(k.dim(), cap.max(k.max_entry()), ValueSpace::Real)?;
        e.insert(k.clone(), vec![Complex64::new(1.0, 0.0)])?;
        Ok(e)
    }

    /// Random expansion with i.i.d. standard normal coefficients on every index `≤ cap`
    /// (real and imaginary parts for complex values).
    pub fn random<R: Rng + ?Sized>(dim: usize, cap: usize, space: ValueSpace, rng: &mut R) -> Result<Self> {
        let mut e = Self::new(dim, cap, space)?;
        let real = matches!(space, ValueSpace::Real);
        for k in MultiIndex::all_up_to(dim, cap) {
            let v: Vec<Complex64> = (0..space.width())
                .map(|_| {
                    let re: f64 = rng.sample(StandardNormal);
                    let im: f64 = if real { 0.0 } else { rng.sample(StandardNormal) };
                    Complex64::new(re, im)
                })
                .collect();
            e.coeffs.insert(k, v);
        }
        Ok(e)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn cap(&self) -> usize {
        self.cap
    }

    pub fn space(&self) -> ValueSpace {
        self.space
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn get(&self, k: &MultiIndex) -> Option<&[Complex64]> {
        self.coeffs.get(k).map(Vec::as_slice)
    }

    /// Scalar coefficient at `k` (first component), zero when absent.
    pub fn coeff(&self, k: &MultiIndex) -> Complex64 {
        self.coeffs.get(k).map_or(Complex64::new(0.0, 0.0), |v| v[0])
    }

    pub fn iter(&self) -> impl Iterator<Item = (&MultiIndex, &Vec<Complex64>)> {
        self.coeffs.iter()
    }

    /// Largest degree actually present on any axis.
    pub fn max_degree(&self) -> usize {
        self.coeffs.keys().map(MultiIndex::max_entry).max().unwrap_or(0)
    }

    pub fn insert(&mut self, k: MultiIndex, value: Vec<Complex64>) -> Result<()> {
        if k.dim() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: k.dim() });
        }
        if k.max_entry() > self.cap {
            return Err(Error::param(format!("index {k} exceeds degree cap {}", self.cap)));
        }
        self.space.check_width(&value)?;
        if value.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite(format!("coefficient at {k}")));
        }
        if matches!(self.space, ValueSpace::Real) && value.iter().any(|z| z.im != 0.0) {
            self.space = ValueSpace::Complex;
        }
        self.coeffs.insert(k, value);
        Ok(())
    }

    /// Insert without cap checks, growing the cap when needed.
    pub(crate) fn insert_growing(&mut self, k: MultiIndex, value: Vec<Complex64>) {
        self.cap = self.cap.max(k.max_entry());
        if matches!(self.space, ValueSpace::Real) && value.iter().any(|z| z.im != 0.0) {
            self.space = ValueSpace::Complex;
        }
        self.coeffs.insert(k, value);
    }

    pub(crate) fn empty_like(&self) -> Self {
        HermiteExpansion { dim: self.dim, cap: self.cap, space: self.space, coeffs: BTreeMap::new() }
    }

    /// Drops coefficients whose norm is below `tol`.
    pub fn prune(&mut self, tol: f64) {
        let space = self.space;
        self.coeffs.retain(|_, v| euclid(v) >= tol && space.norm(v) >= tol);
    }

    /// `c_k ↦ m(k) c_k`. Exact zeros are dropped; a non-finite multiplier is an error.
    pub fn map_diagonal<F>(&self, m: F) -> Result<Self>
    where
        F: Fn(&MultiIndex) -> Complex64,
    {
        let mut out = self.empty_like();
        for (k, v) in &self.coeffs {
            let f = m(k);
            if !f.re.is_finite() || !f.im.is_finite() {
                return Err(Error::NonFinite(format!("multiplier at {k}")));
            }
            let w: Vec<Complex64> = v.iter().map(|z| z * f).collect();
            if w.iter().all(|z| *z == Complex64::new(0.0, 0.0)) {
                continue;
            }
            out.insert_growing(k.clone(), w);
        }
        Ok(out)
    }

    pub fn scale(&self, c: Complex64) -> Self {
        self.map_diagonal(|_| c).expect("finite scalar multiple")
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.combine(other, Complex64::new(1.0, 0.0))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.combine(other, Complex64::new(-1.0, 0.0))
    }

    fn combine(&self, other: &Self, sign: Complex64) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: other.dim });
        }
        let space = join_spaces(self.space, other.space)?;
        let mut out = HermiteExpansion {
            dim: self.dim,
            cap: self.cap.max(other.cap),
            space,
            coeffs: self.coeffs.clone(),
        };
        for (k, v) in &other.coeffs {
            let entry = out.coeffs.entry(k.clone()).or_insert_with(|| space.zero());
            for (a, b) in entry.iter_mut().zip(v) {
                *a += b * sign;
            }
        }
        out.coeffs.retain(|_, v| v.iter().any(|z| *z != Complex64::new(0.0, 0.0)));
        Ok(out)
    }

    /// `Σ_k ‖c_k‖₂²`, the squared `L²` norm when the value space is Hilbert.
    pub fn l2_norm_sq(&self) -> f64 {
        self.coeffs.values().map(|v| v.iter().map(|z| z.norm_sqr()).sum::<f64>()).sum()
    }

    pub fn l2_norm(&self) -> f64 {
        self.l2_norm_sq().sqrt()
    }

    /// Largest coefficient difference against `other`, componentwise modulus.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let mut keys: Vec<&MultiIndex> = self.coeffs.keys().chain(other.coeffs.keys()).collect();
        keys.sort();
        keys.dedup();
        let zero = self.space.zero();
        keys.into_iter()
            .map(|k| {
                let a = self.coeffs.get(k).unwrap_or(&zero);
                let b = other.coeffs.get(k).map(Vec::as_slice).unwrap_or(&zero);
                a.iter()
                    .zip(b.iter().chain(std::iter::repeat(&Complex64::new(0.0, 0.0))))
                    .map(|(x, y)| (x - y).norm())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max)
    }

    /// Hermite coefficients of grid samples: `c_k = Σ_i w_i h_k(x_i) f(x_i)`.
    pub fn analyze(field: &GridField, grid: &SpatialGrid, cap: usize, space: ValueSpace) -> Result<Self> {
        if field.dim != grid.dim() {
            return Err(Error::DimensionMismatch { expected: grid.dim(), found: field.dim });
        }
        if field.width != space.width() {
            return Err(Error::DimensionMismatch { expected: space.width(), found: field.width });
        }
        if field.nodes() != grid.len() {
            return Err(Error::DimensionMismatch { expected: grid.len(), found: field.nodes() });
        }
        if cap > grid.design_cap() {
            return Err(Error::param(format!(
                "degree cap {cap} exceeds the grid design cap {}",
                grid.design_cap()
            )));
        }
        if let Some(i) = field.data.iter().position(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite(format!("sample {} of the analyzed field", i / field.width)));
        }
        let dim = grid.dim();
        let mat = grid.analysis_matrix(cap);
        let mats = vec![mat; dim];
        let rows = vec![cap + 1; dim];
        let dense = contract_all(field.data.clone(), &grid.shape(), field.width, &mats, &rows);
        let mut out = Self::new(dim, cap, space)?;
        let real = field.data.iter().all(|z| z.im == 0.0);
        for (flat, k) in MultiIndex::all_up_to(dim, cap).into_iter().enumerate() {
            let mut v = dense[flat * field.width..(flat + 1) * field.width].to_vec();
            if real {
                v.iter_mut().for_each(|z| z.im = 0.0);
            }
            out.insert_growing(k, v);
        }
        if matches!(space, ValueSpace::Real) && !real {
            return Err(Error::param("complex samples cannot be analyzed into a real value space"));
        }
        out.prune(PRUNE_TOL);
        Ok(out)
    }

    /// Analyzes a function evaluated at the grid nodes.
    pub fn analyze_fn<F>(f: F, grid: &SpatialGrid, cap: usize, space: ValueSpace) -> Result<Self>
    where
        F: Fn(&[f64]) -> Vec<Complex64>,
    {
        let field = GridField::from_fn(grid, space.width(), f)?;
        Self::analyze(&field, grid, cap, space)
    }

    /// `Σ_k c_k h_k(x)`.
    pub fn synthesize(&self, x: &[f64]) -> Result<Vec<Complex64>> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: x.len() });
        }
        let deg = self.max_degree();
        let tables: Vec<Vec<f64>> = x.iter().map(|&u| hermite_table(deg, u)).collect();
        let mut out = self.space.zero();
        for (k, v) in &self.coeffs {
            let h: f64 = k.entries().iter().enumerate().map(|(j, &kj)| tables[j][kj]).product();
            for (o, c) in out.iter_mut().zip(v) {
                *o += c * h;
            }
        }
        Ok(out)
    }

    /// Samples at every node of `grid`.
    pub fn synthesize_grid(&self, grid: &SpatialGrid) -> Result<GridField> {
        if grid.dim() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: grid.dim() });
        }
        let width = self.space.width();
        let deg = self.max_degree();
        let dense = self.dense(deg);
        let mat = grid.hermite_matrix(deg);
        let mats = vec![mat; self.dim];
        let rows = vec![grid.nodes_per_axis(); self.dim];
        let data = contract_all(dense, &vec![deg + 1; self.dim], width, &mats, &rows);
        Ok(GridField { dim: self.dim, width, data })
    }

    /// Dense row-major `(deg+1)^n × width` table of the coefficients.
    pub(crate) fn dense(&self, deg: usize) -> Vec<Complex64> {
        let width = self.space.width();
        let mut dense = vec![Complex64::new(0.0, 0.0); (deg + 1).pow(self.dim as u32) * width];
        for (k, v) in &self.coeffs {
            if k.max_entry() > deg {
                continue;
            }
            let f = k.flat(deg);
            dense[f * width..(f + 1) * width].copy_from_slice(v);
        }
        dense
    }

    /// `‖f‖_{L^p}` by grid quadrature of the synthesized samples.
    pub fn lp_norm(&self, grid: &SpatialGrid, p: f64) -> Result<f64> {
        let field = self.synthesize_grid(grid)?;
        field.lp_norm(grid, &self.space, p)
    }
}

fn euclid(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn join_spaces(a: ValueSpace, b: ValueSpace) -> Result<ValueSpace> {
    use ValueSpace::*;
    match (a, b) {
        (Real, Real) => Ok(Real),
        (Real, Complex) | (Complex, Real) | (Complex, Complex) => Ok(Complex),
        (x, y) if x == y => Ok(x),
        (x, y) => Err(Error::param(format!("incompatible value spaces {x} and {y}"))),
    }
}

/// `L^p` norm of any expansion on a grid.
pub fn lp_norm(e: &HermiteExpansion, p: f64, grid: &SpatialGrid) -> Result<f64> {
    e.lp_norm(grid, p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::eval_hermite;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn grid1() -> SpatialGrid {
        SpatialGrid::new(1, 32, 400).unwrap()
    }

    #[test]
    fn analyze_basis_function() {
        let g = grid1();
        let e = HermiteExpansion::analyze_fn(|x| vec![Complex64::new(eval_hermite(3, x[0]), 0.0)], &g, 32, ValueSpace::Real)
            .unwrap();
        let k3 = MultiIndex::from([3]);
        assert!((e.coeff(&k3).re - 1.0).abs() < 1e-9);
        for (k, v) in e.iter() {
            if *k != k3 {
                assert!(v[0].norm() < 1e-9);
            }
        }
    }

    #[test]
    fn analyze_odd_gaussian() {
        let g = grid1();
        let e = HermiteExpansion::analyze_fn(
            |x| vec![Complex64::new(x[0] * (-x[0] * x[0] / 2.0).exp(), 0.0)],
            &g,
            32,
            ValueSpace::Real,
        )
        .unwrap();
        let want = (PI.sqrt() / 2.0).sqrt();
        assert!((e.coeff(&MultiIndex::from([1])).re - want).abs() < 1e-12);
        assert_eq!(e.len(), 1);
    }

    #[test]
    fn analyze_zero_is_empty() {
        let g = grid1();
        let e = HermiteExpansion::analyze_fn(|_| vec![Complex64::new(0.0, 0.0)], &g, 8, ValueSpace::Real).unwrap();
        assert!(e.is_empty());
    }

    #[test]
    fn analyze_rejects_bad_input() {
        let g = grid1();
        let nan = HermiteExpansion::analyze_fn(|_| vec![Complex64::new(f64::NAN, 0.0)], &g, 8, ValueSpace::Real);
        assert!(matches!(nan, Err(Error::NonFinite(_))));
        let too_high = HermiteExpansion::analyze_fn(|_| vec![Complex64::new(1.0, 0.0)], &g, 40, ValueSpace::Real);
        assert!(too_high.is_err());
        let g2 = SpatialGrid::new(2, 4, 64).unwrap();
        let field = GridField::from_real_fn(&g2, |_| 0.0).unwrap();
        assert!(matches!(
            HermiteExpansion::analyze(&field, &g, 4, ValueSpace::Real),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn synthesize_examples() {
        let e = HermiteExpansion::basis(&MultiIndex::from([0]), 0).unwrap();
        assert_eq!(e.synthesize(&[0.0]).unwrap()[0].re, PI.powf(-0.25));
        let empty = HermiteExpansion::new(1, 4, ValueSpace::Real).unwrap();
        assert_eq!(empty.synthesize(&[1.3]).unwrap()[0], Complex64::new(0.0, 0.0));
        assert!(e.synthesize(&[0.0, 1.0]).is_err());
    }

    #[test]
    fn orthonormality_on_default_grid() {
        let g = grid1();
        let w = g.axis_weights();
        let tables: Vec<Vec<f64>> = g.axis_nodes().iter().map(|&x| hermite_table(32, x)).collect();
        for i in 0..=32 {
            for j in 0..=32 {
                let ip: f64 = tables.iter().zip(w).map(|(t, w)| w * t[i] * t[j]).sum();
                let delta = if i == j { 1.0 } else { 0.0 };
                assert!((ip - delta).abs() < 1e-10, "({i},{j}) -> {ip}");
            }
        }
    }

    #[test]
    fn lp_norm_examples() {
        let g = grid1();
        let h0 = HermiteExpansion::basis(&MultiIndex::from([0]), 0).unwrap();
        assert!((h0.lp_norm(&g, 2.0).unwrap() - 1.0).abs() < 1e-10);
        let want = ((PI / 2.0).sqrt() / PI).powf(0.25);
        assert!((h0.lp_norm(&g, 4.0).unwrap() - want).abs() < 1e-12);
        let two = h0.scale(Complex64::new(2.0, 0.0));
        assert!((two.lp_norm(&g, 4.0).unwrap() - 2.0 * want).abs() < 1e-12);
        assert!(h0.lp_norm(&g, 0.5).is_err());
    }

    #[test]
    fn vector_valued_round_trip() {
        let g = SpatialGrid::new(2, 6, 128).unwrap();
        let space = ValueSpace::lq(3.0, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let e = HermiteExpansion::random(2, 6, space, &mut rng).unwrap();
        let back = HermiteExpansion::analyze(&e.synthesize_grid(&g).unwrap(), &g, 6, space).unwrap();
        assert!(e.max_abs_diff(&back) < 1e-9);
    }

    #[test]
    fn map_diagonal_promotes_to_complex() {
        let e = HermiteExpansion::basis(&MultiIndex::from([2]), 2).unwrap();
        let r = e.map_diagonal(|_| Complex64::new(0.0, 1.0)).unwrap();
        assert_eq!(r.space(), ValueSpace::Complex);
        assert!(e.map_diagonal(|_| Complex64::new(f64::INFINITY, 0.0)).is_err());
        assert!(e.map_diagonal(|_| Complex64::new(0.0, 0.0)).unwrap().is_empty());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn synthesize_analyze_round_trip(seed in any::<u64>()) {
            let g = SpatialGrid::new(1, 8, 400).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let e = HermiteExpansion::random(1, 8, ValueSpace::Complex, &mut rng).unwrap();
            let back = HermiteExpansion::analyze(&e.synthesize_grid(&g).unwrap(), &g, 8, ValueSpace::Complex).unwrap();
            prop_assert!(e.max_abs_diff(&back) < 1e-9);
        }

        #[test]
        fn parseval(seed in any::<u64>()) {
            let g = SpatialGrid::new(1, 16, 400).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let e = HermiteExpansion::random(1, 16, ValueSpace::Real, &mut rng).unwrap();
            let n2 = e.lp_norm(&g, 2.0).unwrap();
            prop_assert!((n2 * n2 - e.l2_norm_sq()).abs() < 1e-8);
        }

        #[test]
        fn linearity(seed in any::<u64>(), a in -3.0..3.0f64) {
            let g = SpatialGrid::new(1, 6, 200).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let e1 = HermiteExpansion::random(1, 6, ValueSpace::lq(2.0, 2).unwrap(), &mut rng).unwrap();
            let e2 = HermiteExpansion::random(1, 6, ValueSpace::lq(2.0, 2).unwrap(), &mut rng).unwrap();
            let combo = e1.scale(Complex64::new(a, 0.0)).add(&e2).unwrap();
            let f1 = e1.synthesize_grid(&g).unwrap();
            let f2 = e2.synthesize_grid(&g).unwrap();
            let fc = combo.synthesize_grid(&g).unwrap();
            for i in 0..fc.data.len() {
                prop_assert!((fc.data[i] - (f1.data[i] * a + f2.data[i])).norm() < 1e-12);
            }
        }
    }
}
