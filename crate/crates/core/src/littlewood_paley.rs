//! Square functions of the Hermite–Poisson semigroup, discretized `γ`-radonifying norms,
//! the polarization identity and norm-ratio experiments.
//!
//! A time profile `a(t, μ)` describes what happens to one eigencomponent: for the
//! g-function of order `k` it is `t^k ∂_t^k e^{-tμ} = (−tμ)^k e^{-tμ}`. At a fixed point
//! `x` the square-function field is `F(t) = Σ_l c_l h_l(x) A_l(t)`, so the covariance of the
//! Gaussian sum `Σ_j g_j F(t_j) √w_j` is `Uᵀ K U` with `U_l = c_l h_l(x)` and the Gram matrix
//! `K[l, l'] = Σ_t w_t A_l(t) A_{l'}(t)`. Every `γ`-norm below is computed from that
//! covariance, which never materializes the field.

use crate::basis::{hermite_table, MultiIndex};
use crate::error::{Error, Result};
use crate::expansion::HermiteExpansion;
use crate::grid::{check_p, weighted_lp, SpatialGrid};
use crate::rng;
use crate::special::gamma_real;
use crate::tensor::{contract_all, unflatten};
use crate::value::{lq_norm, ValueSpace};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

/// Log-uniform time nodes per axis with weights for `dt/t`.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeGrid {
    dim: usize,
    t_min: f64,
    t_max: f64,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl TimeGrid {
    /// Trapezoid rule in `ln t` on `[t_min, t_max]` with `nodes` points per axis.
    pub fn new(dim: usize, t_min: f64, t_max: f64, nodes: usize) -> Result<Self> {
        if dim == 0 || dim > crate::grid::MAX_DIM {
            return Err(Error::Budget(format!("time grids support 1 ≤ n ≤ {}, got {dim}", crate::grid::MAX_DIM)));
        }
        if !(t_min > 0.0) || !(t_max > t_min) || !t_max.is_finite() {
            return Err(Error::param(format!("need 0 < t_min < t_max < ∞, got [{t_min}, {t_max}]")));
        }
        if nodes < 2 {
            return Err(Error::param("a time grid needs at least 2 nodes per axis"));
        }
        let (s, w) = crate::special::trapezoid(t_min.ln(), t_max.ln(), nodes);
        let mut nodes: Vec<f64> = s.iter().map(|x| x.exp()).collect();
        nodes[0] = t_min;
        *nodes.last_mut().unwrap() = t_max;
        Ok(TimeGrid { dim, t_min, t_max, nodes, weights: w })
    }

    /// `[1e-4, 40]` with 200 nodes per axis.
    pub fn default_for(dim: usize) -> Result<Self> {
        Self::new(dim, 1e-4, 40.0, 200)
    }

    /// The same axis rule in another dimension.
    pub fn with_dim(&self, dim: usize) -> Result<Self> {
        Self::new(dim, self.t_min, self.t_max, self.nodes.len())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn bounds(&self) -> (f64, f64) {
        (self.t_min, self.t_max)
    }

    pub fn axis_nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn axis_weights(&self) -> &[f64] {
        &self.weights
    }

    /// Total number of (tensor) time nodes.
    pub fn len(&self) -> usize {
        self.nodes.len().pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn point(&self, flat: usize) -> Vec<f64> {
        unflatten(flat, &vec![self.nodes.len(); self.dim]).into_iter().map(|i| self.nodes[i]).collect()
    }

    pub fn tensor_weights(&self) -> Vec<f64> {
        let mut w = vec![1.0];
        for _ in 0..self.dim {
            w = w.iter().flat_map(|&a| self.weights.iter().map(move |&b| a * b)).collect();
        }
        w
    }
}

/// `(Σ_t w_t |v(t)|²)^{1/2}`.
pub fn hn_norm(v: &[Complex64], tgrid: &TimeGrid) -> Result<f64> {
    if v.len() != tgrid.len() {
        return Err(Error::DimensionMismatch { expected: tgrid.len(), found: v.len() });
    }
    Ok(v.iter().zip(tgrid.tensor_weights()).map(|(z, w)| w * z.norm_sqr()).sum::<f64>().sqrt())
}

/// Action of a square-function integrand on one eigencomponent.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Profile {
    /// `t^k ∂_t^k e^{-tμ}`
    GFunction { k: u32 },
    /// `t^{k−β} ∂_t^k e^{-tμ}`
    Triebel { k: u32, beta: f64 },
    /// `|t^α ∂_t^α e^{-tμ}| = (tμ)^α e^{-tμ}`; the dropped phase `e^{iπα}` is the same for
    /// every `μ`, so `γ`-norms are unaffected.
    Fractional { alpha: f64 },
    /// `t ∂_t e^{-tμ/2}`
    HalfPoisson,
}

impl Profile {
    pub fn eval(&self, t: f64, mu: f64) -> f64 {
        match *self {
            Profile::GFunction { k } => (-t * mu).powi(k as i32) * (-t * mu).exp(),
            Profile::Triebel { k, beta } => t.powf(k as f64 - beta) * (-mu).powi(k as i32) * (-t * mu).exp(),
            Profile::Fractional { alpha } => (t * mu).powf(alpha) * (-t * mu).exp(),
            Profile::HalfPoisson => -0.5 * t * mu * (-0.5 * t * mu).exp(),
        }
    }

    /// `∫₀^∞ a(t, μ)² dt/t` where known in closed form.
    pub fn diagonal_integral(&self, mu: f64) -> Option<f64> {
        match *self {
            Profile::GFunction { k } => Some(gamma_real(2.0 * k as f64) / 4f64.powi(k as i32)),
            Profile::Triebel { k, beta } => {
                let s = 2.0 * (k as f64 - beta);
                Some(gamma_real(s) * mu.powf(2.0 * beta) / 2f64.powf(s))
            }
            Profile::Fractional { alpha } => Some(gamma_real(2.0 * alpha) / 4f64.powf(alpha)),
            Profile::HalfPoisson => Some(0.25),
        }
    }
}

/// How time enters: one profile per spatial axis with per-axis eigenfrequencies
/// `√(2l_j+1)` on an n-dimensional time grid, or a single time with `μ = √(2|l|+n)`.
#[derive(Clone, Debug, PartialEq)]
pub enum TimeStructure {
    Tensor(Vec<Profile>),
    Radial(Profile),
}

impl TimeStructure {
    /// Multivariate g-function of orders `k_j ≥ 1`.
    pub fn g_function(k: &MultiIndex) -> Result<Self> {
        if k.entries().contains(&0) {
            return Err(Error::param(format!("g-function orders must all be positive, got {k}")));
        }
        Ok(TimeStructure::Tensor(k.entries().iter().map(|&kj| Profile::GFunction { k: kj as u32 }).collect()))
    }
}

/// Gram matrices `K` of a time structure on the coefficient lattice.
#[derive(Clone, Debug)]
enum Gram {
    /// Per-axis `(M+1) × (M+1)`.
    Tensor(Vec<Vec<f64>>),
    /// `(R × R)` indexed by `|l|`, `R = nM + 1`.
    Radial(Vec<f64>, usize),
}

fn gram(structure: &TimeStructure, tgrid: &TimeGrid, dim: usize, cap: usize) -> Result<Gram> {
    let t = tgrid.axis_nodes();
    let w = tgrid.axis_weights();
    let build = |profile: &Profile, mus: &[f64]| -> Vec<f64> {
        let r = mus.len();
        let a: Vec<Vec<f64>> = mus.iter().map(|&mu| t.iter().map(|&ti| profile.eval(ti, mu)).collect()).collect();
        let mut k = vec![0.0; r * r];
        for i in 0..r {
            for j in 0..=i {
                let s: f64 = (0..t.len()).map(|q| w[q] * a[i][q] * a[j][q]).sum();
                k[i * r + j] = s;
                k[j * r + i] = s;
            }
        }
        k
    };
    match structure {
        TimeStructure::Tensor(profiles) => {
            if profiles.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: profiles.len() });
            }
            if tgrid.dim() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: tgrid.dim() });
            }
            let mus: Vec<f64> = (0..=cap).map(|m| (2.0 * m as f64 + 1.0).sqrt()).collect();
            Ok(Gram::Tensor(profiles.iter().map(|p| build(p, &mus)).collect()))
        }
        TimeStructure::Radial(profile) => {
            if tgrid.dim() != 1 {
                return Err(Error::DimensionMismatch { expected: 1, found: tgrid.dim() });
            }
            let r = dim * cap + 1;
            let mus: Vec<f64> = (0..r).map(|s| (2.0 * s as f64 + dim as f64).sqrt()).collect();
            Ok(Gram::Radial(build(profile, &mus), r))
        }
    }
}

/// Complex `(M+1)^n × d` table `U_l = c_l h_l(x)` at one grid point.
fn local_coefficients(dense: &[Complex64], width: usize, tables: &[&[f64]], cap: usize) -> Vec<Complex64> {
    let dim = tables.len();
    let mut u = dense.to_vec();
    for (flat, chunk) in u.chunks_mut(width).enumerate() {
        let idx = unflatten(flat, &vec![cap + 1; dim]);
        let h: f64 = idx.iter().enumerate().map(|(j, &m)| tables[j][m]).product();
        chunk.iter_mut().for_each(|z| *z *= h);
    }
    u
}

fn apply_gram(g: &Gram, u: &[Complex64], dim: usize, cap: usize, width: usize) -> Vec<Complex64> {
    match g {
        Gram::Tensor(ks) => contract_all(u.to_vec(), &vec![cap + 1; dim], width, ks, &vec![cap + 1; dim]),
        Gram::Radial(k, r) => {
            let shape = vec![cap + 1; dim];
            let mut sums = vec![Complex64::new(0.0, 0.0); r * width];
            let orders: Vec<usize> = (0..u.len() / width).map(|f| unflatten(f, &shape).iter().sum()).collect();
            for (f, &o) in orders.iter().enumerate() {
                for c in 0..width {
                    sums[o * width + c] += u[f * width + c];
                }
            }
            let mut out = vec![Complex64::new(0.0, 0.0); u.len()];
            for (f, &o) in orders.iter().enumerate() {
                for s in 0..*r {
                    let kv = k[o * r + s];
                    if kv == 0.0 {
                        continue;
                    }
                    for c in 0..width {
                        out[f * width + c] += sums[s * width + c] * kv;
                    }
                }
            }
            out
        }
    }
}

/// Real covariance of the stacked vector `(Re F, Im F)` from `U` and `KU`.
fn stacked_covariance(u: &[Complex64], ku: &[Complex64], width: usize) -> DMatrix<f64> {
    let d = width;
    let mut cov = DMatrix::<f64>::zeros(2 * d, 2 * d);
    for (ul, vl) in u.chunks(d).zip(ku.chunks(d)) {
        for a in 0..d {
            let (ar, ai) = (ul[a].re, ul[a].im);
            if ar == 0.0 && ai == 0.0 {
                continue;
            }
            for b in 0..d {
                let (br, bi) = (vl[b].re, vl[b].im);
                cov[(a, b)] += ar * br;
                cov[(a, d + b)] += ar * bi;
                cov[(d + a, b)] += ai * br;
                cov[(d + a, d + b)] += ai * bi;
            }
        }
    }
    // symmetrize rounding noise
    let t = cov.transpose();
    (cov + t) * 0.5
}

/// Monte Carlo `γ`-norm estimate and the exact Hilbert–Schmidt value when available.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GammaEstimate {
    pub estimate: f64,
    pub std_error: f64,
    /// `(Σ_j ‖T φ_j‖₂²)^{1/2}`; equals the `γ`-norm for scalar and `q = 2` targets.
    pub hilbert_schmidt: f64,
}

fn check_draws(draws: usize) -> Result<()> {
    if draws < 100 {
        return Err(Error::param(format!("need at least 100 Monte Carlo draws, got {draws}")));
    }
    Ok(())
}

fn q_of(space: &ValueSpace) -> f64 {
    match space {
        ValueSpace::Lq { q, .. } => *q,
        _ => 2.0,
    }
}

/// Lower factor `L` with `L Lᵀ = cov` for a positive semidefinite `cov`, by Cholesky
/// without pivoting; pivots at rounding level are treated as zero. The factor of `s² cov`
/// is `s L`, so Monte Carlo estimates built on it are exactly homogeneous in the field.
fn semidefinite_factor(cov: &DMatrix<f64>) -> DMatrix<f64> {
    let n = cov.nrows();
    let scale = (0..n).map(|i| cov[(i, i)]).fold(0.0, f64::max);
    let tol = 16.0 * n as f64 * f64::EPSILON * scale;
    let mut l = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        let d = cov[(j, j)] - (0..j).map(|k| l[(j, k)] * l[(j, k)]).sum::<f64>();
        if d <= tol {
            continue;
        }
        let ljj = d.sqrt();
        l[(j, j)] = ljj;
        for i in j + 1..n {
            let s = cov[(i, j)] - (0..j).map(|k| l[(i, k)] * l[(j, k)]).sum::<f64>();
            l[(i, j)] = s / ljj;
        }
    }
    l
}

/// Samples `(E ‖X‖_q²)^{1/2}` for the centred Gaussian `X ∈ ℂ^d` with stacked covariance `cov`.
fn monte_carlo_from_covariance<R: Rng>(
    cov: &DMatrix<f64>,
    width: usize,
    q: f64,
    draws: usize,
    rng: &mut R,
) -> (f64, f64) {
    let dd = cov.nrows();
    let factor = semidefinite_factor(cov);
    let mut xi = vec![0.0; dd];
    let mut z = vec![Complex64::new(0.0, 0.0); width];
    let mut samples = Vec::with_capacity(draws);
    for _ in 0..draws {
        xi.iter_mut().for_each(|v| *v = rng.sample(StandardNormal));
        for (a, za) in z.iter_mut().enumerate() {
            let (mut re, mut im) = (0.0, 0.0);
            for (b, &x) in xi.iter().enumerate() {
                re += factor[(a, b)] * x;
                im += factor[(width + a, b)] * x;
            }
            *za = Complex64::new(re, im);
        }
        let n = lq_norm(q, &z);
        samples.push(n * n);
    }
    mean_and_error(&samples)
}

/// `(√mean, delta-method standard error)` of squared-norm samples.
fn mean_and_error(samples: &[f64]) -> (f64, f64) {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    if mean <= 0.0 {
        return (0.0, 0.0);
    }
    let var = samples.iter().map(|y| (y - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let est = mean.sqrt();
    (est, (var / n).sqrt() / (2.0 * est))
}

fn family_covariance(family: &[Vec<Complex64>], width: usize) -> DMatrix<f64> {
    let mut cov = DMatrix::<f64>::zeros(2 * width, 2 * width);
    for v in family {
        for a in 0..width {
            for b in 0..width {
                cov[(a, b)] += v[a].re * v[b].re;
                cov[(a, width + b)] += v[a].re * v[b].im;
                cov[(width + a, b)] += v[a].im * v[b].re;
                cov[(width + a, width + b)] += v[a].im * v[b].im;
            }
        }
    }
    cov
}

fn check_family(family: &[Vec<Complex64>], space: &ValueSpace) -> Result<()> {
    for v in family {
        space.check_width(v)?;
        if v.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite("γ-norm field".into()));
        }
    }
    Ok(())
}

/// `γ`-norm of the operator sending the `j`-th orthonormal basis vector to `family[j]`.
pub fn gamma_norm_family(family: &[Vec<Complex64>], space: &ValueSpace, draws: usize, seed: u64) -> Result<GammaEstimate> {
    check_draws(draws)?;
    check_family(family, space)?;
    let width = space.width();
    let hs = family.iter().flatten().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let cov = family_covariance(family, width);
    let mut r = rng::stream(seed, 0, 0);
    let (estimate, std_error) = monte_carlo_from_covariance(&cov, width, q_of(space), draws, &mut r);
    Ok(GammaEstimate { estimate, std_error, hilbert_schmidt: hs })
}

/// Same quantity by summing `Σ_j g_j T(φ_j)` explicitly for every draw.
pub fn gamma_norm_family_direct(family: &[Vec<Complex64>], space: &ValueSpace, draws: usize, seed: u64) -> Result<GammaEstimate> {
    check_draws(draws)?;
    check_family(family, space)?;
    let width = space.width();
    let hs = family.iter().flatten().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let mut r = rng::stream(seed, 0, 0);
    let q = q_of(space);
    let mut acc = vec![Complex64::new(0.0, 0.0); width];
    let samples: Vec<f64> = (0..draws)
        .map(|_| {
            acc.iter_mut().for_each(|z| *z = Complex64::new(0.0, 0.0));
            for v in family {
                let g: f64 = r.sample(StandardNormal);
                for (a, z) in acc.iter_mut().zip(v) {
                    *a += z * g;
                }
            }
            let n = lq_norm(q, &acc);
            n * n
        })
        .collect();
    let (estimate, std_error) = mean_and_error(&samples);
    Ok(GammaEstimate { estimate, std_error, hilbert_schmidt: hs })
}

/// `γ`-norm of a field sampled on a time grid: the orthonormal basis of the weighted node
/// space is `φ_j = 1_{t_j}/√w_j`, so `T(φ_j) = √w_j v(t_j)`.
pub fn gamma_norm(vfield: &[Vec<Complex64>], tgrid: &TimeGrid, space: &ValueSpace, draws: usize, seed: u64) -> Result<GammaEstimate> {
    if vfield.len() != tgrid.len() {
        return Err(Error::DimensionMismatch { expected: tgrid.len(), found: vfield.len() });
    }
    let family: Vec<Vec<Complex64>> = vfield
        .iter()
        .zip(tgrid.tensor_weights())
        .map(|(v, w)| v.iter().map(|z| z * w.sqrt()).collect())
        .collect();
    gamma_norm_family(&family, space, draws, seed)
}

/// Square-function field on a (spatial, time) grid pair.
#[derive(Clone, Debug, PartialEq)]
pub struct GFieldSample {
    pub spatial_nodes: usize,
    pub time_nodes: usize,
    pub width: usize,
    /// Layout `[x][t][component]`.
    pub data: Vec<Complex64>,
}

impl GFieldSample {
    pub fn value(&self, x: usize, t: usize) -> &[Complex64] {
        let o = (x * self.time_nodes + t) * self.width;
        &self.data[o..o + self.width]
    }

    /// Time series at one spatial node.
    pub fn series(&self, x: usize) -> Vec<Vec<Complex64>> {
        (0..self.time_nodes).map(|t| self.value(x, t).to_vec()).collect()
    }
}

/// Largest field [`g_field`] will materialize.
pub const FIELD_BUDGET: usize = 1 << 24;

/// `G_{P,k}(f)(t, x) = Σ_l c_l ∏_j (−t_j√λ_{l_j})^{k_j} e^{-t_j√λ_{l_j}} h_{l_j}(x_j)`.
pub fn g_field(e: &HermiteExpansion, k: &MultiIndex, tgrid: &TimeGrid, sgrid: &SpatialGrid) -> Result<GFieldSample> {
    let structure = TimeStructure::g_function(k)?;
    check_dims(e, tgrid, sgrid)?;
    if k.dim() != e.dim() {
        return Err(Error::DimensionMismatch { expected: e.dim(), found: k.dim() });
    }
    let width = e.space().width();
    let total = sgrid.len() as u128 * tgrid.len() as u128 * width as u128;
    if total > FIELD_BUDGET as u128 {
        return Err(Error::Budget(format!("a g-field of {total} values exceeds the budget of {FIELD_BUDGET}")));
    }
    let TimeStructure::Tensor(profiles) = structure else { unreachable!() };
    let dim = e.dim();
    let cap = e.max_degree();
    let dense = e.dense(cap);
    let t = tgrid.axis_nodes();
    let mats: Vec<Vec<f64>> = profiles
        .iter()
        .map(|p| {
            t.iter()
                .flat_map(|&ti| (0..=cap).map(move |m| p.eval(ti, (2.0 * m as f64 + 1.0).sqrt())))
                .collect()
        })
        .collect();
    let rows = vec![t.len(); dim];
    let tables: Vec<Vec<f64>> = sgrid.axis_nodes().iter().map(|&x| hermite_table(cap, x)).collect();
    let shape = sgrid.shape();
    let per_x: Vec<Vec<Complex64>> = (0..sgrid.len())
        .into_par_iter()
        .map(|xi| {
            let idx = unflatten(xi, &shape);
            let tabs: Vec<&[f64]> = idx.iter().map(|&i| tables[i].as_slice()).collect();
            let u = local_coefficients(&dense, width, &tabs, cap);
            contract_all(u, &vec![cap + 1; dim], width, &mats, &rows)
        })
        .collect();
    Ok(GFieldSample {
        spatial_nodes: sgrid.len(),
        time_nodes: tgrid.len(),
        width,
        data: per_x.into_iter().flatten().collect(),
    })
}

fn check_dims(e: &HermiteExpansion, tgrid: &TimeGrid, sgrid: &SpatialGrid) -> Result<()> {
    if sgrid.dim() != e.dim() {
        return Err(Error::DimensionMismatch { expected: e.dim(), found: sgrid.dim() });
    }
    let _ = tgrid;
    Ok(())
}

/// Settings for `γ`-norm evaluation along the spatial grid.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GammaSettings {
    pub draws: usize,
    pub seed: u64,
    /// Stream key separating corpus members.
    pub item: u64,
}

impl Default for GammaSettings {
    fn default() -> Self {
        GammaSettings { draws: 2000, seed: 0, item: 0 }
    }
}

/// Pointwise `γ`-norms `x ↦ ‖F(·, x)‖_{γ(ℋ, B)}` of the square-function field, one per
/// spatial node. Hilbert targets use the exact trace; others use Monte Carlo with one
/// random stream per `(seed, item, node)`.
pub fn pointwise_gamma_norms(
    e: &HermiteExpansion,
    structure: &TimeStructure,
    tgrid: &TimeGrid,
    sgrid: &SpatialGrid,
    settings: GammaSettings,
) -> Result<Vec<f64>> {
    check_dims(e, tgrid, sgrid)?;
    let space = e.space();
    if !space.is_hilbert() {
        check_draws(settings.draws)?;
    }
    let dim = e.dim();
    let cap = e.max_degree();
    let width = space.width();
    let g = gram(structure, tgrid, dim, cap)?;
    let dense = e.dense(cap);
    let tables: Vec<Vec<f64>> = sgrid.axis_nodes().iter().map(|&x| hermite_table(cap, x)).collect();
    let shape = sgrid.shape();
    let q = q_of(&space);
    let out: Vec<Result<f64>> = (0..sgrid.len())
        .into_par_iter()
        .map(|xi| {
            let idx = unflatten(xi, &shape);
            let tabs: Vec<&[f64]> = idx.iter().map(|&i| tables[i].as_slice()).collect();
            let u = local_coefficients(&dense, width, &tabs, cap);
            let ku = apply_gram(&g, &u, dim, cap, width);
            if space.is_hilbert() {
                let tr: f64 = u.iter().zip(&ku).map(|(a, b)| a.re * b.re + a.im * b.im).sum();
                return Ok(tr.max(0.0).sqrt());
            }
            let cov = stacked_covariance(&u, &ku, width);
            let mut r = rng::stream(settings.seed, settings.item, xi as u64);
            let (est, _) = monte_carlo_from_covariance(&cov, width, q, settings.draws, &mut r);
            if !est.is_finite() {
                return Err(Error::NonFinite(format!("γ-norm at spatial node {xi}")));
            }
            Ok(est)
        })
        .collect();
    out.into_iter().collect()
}

/// `‖G_{P,k}(f)‖_{L^p(ℝⁿ, γ(ℋⁿ, B))}`.
#[allow(clippy::too_many_arguments)]
pub fn g_norm_field(
    e: &HermiteExpansion,
    k: &MultiIndex,
    p: f64,
    tgrid: &TimeGrid,
    sgrid: &SpatialGrid,
    draws: usize,
    seed: u64,
) -> Result<f64> {
    check_p(p)?;
    let s = TimeStructure::g_function(k)?;
    let g = pointwise_gamma_norms(e, &s, tgrid, sgrid, GammaSettings { draws, seed, item: 0 })?;
    Ok(weighted_lp(&g, &sgrid.tensor_weights(), p))
}

/// Both sides of `∫∫⟨G(g), G(f)⟩ dt/t dx = ∏_j Γ(2α_j)/2^{2α_j} ∫⟨g, f⟩ dx`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Polarization {
    pub lhs: Complex64,
    pub rhs: Complex64,
    pub residual: f64,
}

/// Evaluates the polarization identity with the bilinear pairing `Σ_i g_i f_i`.
pub fn polarization_check(
    f: &HermiteExpansion,
    g: &HermiteExpansion,
    alpha: &MultiIndex,
    tgrid: &TimeGrid,
    sgrid: &SpatialGrid,
) -> Result<Polarization> {
    if f.dim() != g.dim() {
        return Err(Error::DimensionMismatch { expected: f.dim(), found: g.dim() });
    }
    if f.space().width() != g.space().width() {
        return Err(Error::DimensionMismatch { expected: f.space().width(), found: g.space().width() });
    }
    if alpha.dim() != f.dim() {
        return Err(Error::DimensionMismatch { expected: f.dim(), found: alpha.dim() });
    }
    check_dims(f, tgrid, sgrid)?;
    let structure = TimeStructure::g_function(alpha)?;
    let dim = f.dim();
    let cap = f.max_degree().max(g.max_degree());
    let width = f.space().width();
    let gr = gram(&structure, tgrid, dim, cap)?;
    let df = f.dense(cap);
    let dg = g.dense(cap);
    let tables: Vec<Vec<f64>> = sgrid.axis_nodes().iter().map(|&x| hermite_table(cap, x)).collect();
    let shape = sgrid.shape();
    let weights = sgrid.tensor_weights();
    let per_x: Vec<Complex64> = (0..sgrid.len())
        .into_par_iter()
        .map(|xi| {
            let idx = unflatten(xi, &shape);
            let tabs: Vec<&[f64]> = idx.iter().map(|&i| tables[i].as_slice()).collect();
            let uf = local_coefficients(&df, width, &tabs, cap);
            let ug = local_coefficients(&dg, width, &tabs, cap);
            let kuf = apply_gram(&gr, &uf, dim, cap, width);
            ug.iter().zip(&kuf).map(|(a, b)| a * b).sum::<Complex64>() * weights[xi]
        })
        .collect();
    let lhs: Complex64 = per_x.iter().sum();

    let sf = f.synthesize_grid(sgrid)?;
    let sg = g.synthesize_grid(sgrid)?;
    let pairing: Complex64 = (0..sgrid.len())
        .map(|i| sg.value(i).iter().zip(sf.value(i)).map(|(a, b)| a * b).sum::<Complex64>() * weights[i])
        .collect::<Vec<_>>()
        .iter()
        .sum();
    let constant: f64 = alpha
        .entries()
        .iter()
        .map(|&a| gamma_real(2.0 * a as f64) / 4f64.powi(a as i32))
        .product();
    let rhs = pairing * constant;
    let residual = (lhs - rhs).norm() / (rhs.norm() + 1e-30);
    Ok(Polarization { lhs, rhs, residual })
}

/// Order statistics of a ratio sample.
#[derive(Clone, Debug, PartialEq)]
pub struct RatioSummary {
    pub p: f64,
    pub min: f64,
    pub max: f64,
    /// `(level, value)` for levels 0.05, 0.25, 0.5, 0.75, 0.95.
    pub quantiles: Vec<(f64, f64)>,
    /// Empirical constants `(1/min, max)` in `‖f‖/C ≤ ‖G f‖ ≤ C ‖f‖`.
    pub constants: (f64, f64),
}

pub const QUANTILE_LEVELS: [f64; 5] = [0.05, 0.25, 0.5, 0.75, 0.95];

/// Linear-interpolation quantile of sorted data.
pub fn quantile(sorted: &[f64], level: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = level * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn summarize(p: f64, ratios: &[f64]) -> RatioSummary {
    let mut s = ratios.to_vec();
    s.sort_by(f64::total_cmp);
    let min = s.first().copied().unwrap_or(f64::NAN);
    let max = s.last().copied().unwrap_or(f64::NAN);
    RatioSummary {
        p,
        min,
        max,
        quantiles: QUANTILE_LEVELS.iter().map(|&l| (l, quantile(&s, l))).collect(),
        constants: (1.0 / min, max),
    }
}

/// Per-member row of an equivalence experiment.
#[derive(Clone, Debug, PartialEq)]
pub struct RatioRecord {
    pub item: usize,
    pub p: f64,
    pub g_norm: f64,
    pub lp_norm: f64,
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EquivalenceReport {
    pub records: Vec<RatioRecord>,
    pub summaries: Vec<RatioSummary>,
}

/// Norms below this are treated as degenerate corpus members.
pub const DEGENERATE_NORM: f64 = 1e-12;

/// `ρ(f) = ‖G(f)‖_{L^p(γ)} / ‖f‖_{L^p}` for every member and every `p`.
pub fn equivalence_experiment(
    corpus: &[HermiteExpansion],
    structure: &TimeStructure,
    ps: &[f64],
    tgrid: &TimeGrid,
    sgrid: &SpatialGrid,
    draws: usize,
    seed: u64,
) -> Result<EquivalenceReport> {
    if corpus.is_empty() {
        return Err(Error::param("equivalence experiment needs a nonempty corpus"));
    }
    for &p in ps {
        check_p(p)?;
    }
    let weights = sgrid.tensor_weights();
    let mut records = Vec::with_capacity(corpus.len() * ps.len());
    for (item, e) in corpus.iter().enumerate() {
        let gam = pointwise_gamma_norms(e, structure, tgrid, sgrid, GammaSettings { draws, seed, item: item as u64 })?;
        let field = e.synthesize_grid(sgrid)?;
        let space = e.space();
        let norms: Vec<f64> = (0..field.nodes()).map(|i| space.norm(field.value(i))).collect();
        for &p in ps {
            let lp = weighted_lp(&norms, &weights, p);
            if lp < DEGENERATE_NORM {
                return Err(Error::Validation(format!("corpus member {item} has L^{p} norm {lp:e}")));
            }
            let gn = weighted_lp(&gam, &weights, p);
            records.push(RatioRecord { item, p, g_norm: gn, lp_norm: lp, ratio: gn / lp });
        }
    }
    let summaries = ps
        .iter()
        .map(|&p| {
            let r: Vec<f64> = records.iter().filter(|r| r.p == p).map(|r| r.ratio).collect();
            summarize(p, &r)
        })
        .collect();
    Ok(EquivalenceReport { records, summaries })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::eval_hermite;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn h0(dim: usize) -> HermiteExpansion {
        HermiteExpansion::basis(&MultiIndex::zero(dim), 0).unwrap()
    }

    #[test]
    fn semidefinite_factor_reproduces_rank_deficient_covariance() {
        let a = DMatrix::<f64>::from_row_slice(3, 4, &[1.0, 2.0, 0.0, -1.0, 0.5, 0.0, 0.0, 3.0, 1.5, 2.0, 0.0, 2.0]);
        // row 2 = row 0 + row 1, plus an all-zero block
        let mut cov = DMatrix::<f64>::zeros(5, 5);
        cov.view_mut((0, 0), (3, 3)).copy_from(&(&a * a.transpose()));
        let l = semidefinite_factor(&cov);
        assert!((&l * l.transpose() - &cov).abs().max() < 1e-12);
        let scaled = semidefinite_factor(&(&cov * 3.7f64.powi(2)));
        assert!((scaled - l * 3.7).abs().max() < 1e-12);
    }

    #[test]
    fn time_grid_weights() {
        let g = TimeGrid::new(1, 1e-4, 40.0, 200).unwrap();
        let s: f64 = g.axis_weights().iter().sum();
        assert!((s - (40.0f64 / 1e-4).ln()).abs() < 1e-12);
        assert!(g.axis_nodes().windows(2).all(|w| w[0] < w[1]));
        assert!(TimeGrid::new(1, 0.0, 1.0, 10).is_err());
        let g2 = TimeGrid::new(2, 1e-2, 10.0, 30).unwrap();
        assert!((g2.tensor_weights().iter().sum::<f64>() - (1e3f64).ln().powi(2)).abs() < 1e-10);
    }

    #[test]
    fn hn_norm_examples() {
        let g = TimeGrid::default_for(1).unwrap();
        let v: Vec<Complex64> = g.axis_nodes().iter().map(|&t| Complex64::new(t * (-t).exp(), 0.0)).collect();
        assert!((hn_norm(&v, &g).unwrap() - 0.5).abs() < 1e-6);
        assert_eq!(hn_norm(&vec![Complex64::new(0.0, 0.0); g.len()], &g).unwrap(), 0.0);
        let scaled: Vec<Complex64> = v.iter().map(|z| z * Complex64::new(0.0, -3.0)).collect();
        assert!((hn_norm(&scaled, &g).unwrap() - 1.5).abs() < 3e-6);
    }

    #[test]
    fn g_field_examples() {
        let tg = TimeGrid::new(1, 1e-2, 10.0, 20).unwrap();
        let sg = SpatialGrid::new(1, 2, 64).unwrap();
        let f = g_field(&h0(1), &MultiIndex::from([1]), &tg, &sg).unwrap();
        for xi in [0, 17, 40] {
            let x = sg.axis_nodes()[xi];
            for (ti, &t) in tg.axis_nodes().iter().enumerate() {
                let want = -t * (-t).exp() * eval_hermite(0, x);
                assert!((f.value(xi, ti)[0].re - want).abs() < 1e-15);
            }
        }
        let tg2 = TimeGrid::new(2, 1e-2, 10.0, 8).unwrap();
        let sg2 = SpatialGrid::new(2, 2, 64).unwrap();
        let f2 = g_field(&h0(2), &MultiIndex::from([1, 1]), &tg2, &sg2).unwrap();
        let xi = 64 * 20 + 33;
        let x = sg2.point(xi);
        for ti in [0, 9, 63] {
            let t = tg2.point(ti);
            let want = t[0] * t[1] * (-t[0] - t[1]).exp() * eval_hermite(0, x[0]) * eval_hermite(0, x[1]);
            assert!((f2.value(xi, ti)[0].re - want).abs() < 1e-15);
        }
        assert!(g_field(&h0(1), &MultiIndex::from([0]), &tg, &sg).is_err());
    }

    #[test]
    fn gamma_norm_scalar_matches_hn_norm() {
        let g = TimeGrid::default_for(1).unwrap();
        let v: Vec<Vec<Complex64>> = g.axis_nodes().iter().map(|&t| vec![Complex64::new(t * (-t).exp(), 0.0)]).collect();
        let flat: Vec<Complex64> = v.iter().map(|x| x[0]).collect();
        let hn = hn_norm(&flat, &g).unwrap();
        let est = gamma_norm(&v, &g, &ValueSpace::Real, 4000, 3).unwrap();
        assert!((est.hilbert_schmidt - hn).abs() < 1e-10);
        assert!((est.estimate - hn).abs() < 3.0 * est.std_error);
        let zero: Vec<Vec<Complex64>> = vec![vec![Complex64::new(0.0, 0.0)]; g.len()];
        let z = gamma_norm(&zero, &g, &ValueSpace::Real, 100, 1).unwrap();
        assert_eq!((z.estimate, z.std_error, z.hilbert_schmidt), (0.0, 0.0, 0.0));
        assert!(gamma_norm(&v, &g, &ValueSpace::Real, 99, 1).is_err());
    }

    #[test]
    fn covariance_and_direct_monte_carlo_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let space = ValueSpace::lq(3.0, 3).unwrap();
        let fam: Vec<Vec<Complex64>> = (0..12)
            .map(|_| (0..3).map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))).collect())
            .collect();
        let a = gamma_norm_family(&fam, &space, 20000, 1).unwrap();
        let b = gamma_norm_family_direct(&fam, &space, 20000, 2).unwrap();
        let se = (a.std_error.powi(2) + b.std_error.powi(2)).sqrt();
        assert!((a.estimate - b.estimate).abs() < 4.0 * se, "{a:?} {b:?}");
    }

    #[test]
    fn gamma_norm_q2_is_hilbert_schmidt() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let space = ValueSpace::lq(2.0, 4).unwrap();
        let fam: Vec<Vec<Complex64>> = (0..30)
            .map(|_| (0..4).map(|_| Complex64::new(rng.sample(StandardNormal), 0.0)).collect())
            .collect();
        let est = gamma_norm_family(&fam, &space, 5000, 4).unwrap();
        assert!((est.estimate - est.hilbert_schmidt).abs() < 3.0 * est.std_error);
    }

    fn random_orthogonal(n: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = DMatrix::<f64>::from_fn(n, n, |_, _| rng.sample(StandardNormal));
        m.qr().q()
    }

    #[test]
    fn gamma_norm_basis_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let n = 16;
        for space in [ValueSpace::Real, ValueSpace::lq(2.0, 3).unwrap(), ValueSpace::lq(4.0, 3).unwrap()] {
            let d = space.width();
            let fam: Vec<Vec<Complex64>> = (0..n)
                .map(|_| (0..d).map(|_| Complex64::new(rng.sample(StandardNormal), 0.0)).collect())
                .collect();
            let r = random_orthogonal(n, 77);
            let rotated: Vec<Vec<Complex64>> = (0..n)
                .map(|i| (0..d).map(|c| (0..n).map(|j| fam[j][c] * r[(i, j)]).sum()).collect())
                .collect();
            let a = gamma_norm_family(&fam, &space, 4000, 8).unwrap();
            let b = gamma_norm_family(&rotated, &space, 4000, 8).unwrap();
            assert!((a.hilbert_schmidt - b.hilbert_schmidt).abs() < 1e-10);
            // same seed and same covariance up to rounding, so the estimates are almost equal
            let se = (a.std_error.powi(2) + b.std_error.powi(2)).sqrt();
            assert!((a.estimate - b.estimate).abs() < 3.0 * se);
        }
    }

    #[test]
    fn g_norm_examples() {
        let tg = TimeGrid::default_for(1).unwrap();
        let sg = SpatialGrid::new(1, 10, 400).unwrap();
        let k = MultiIndex::from([1]);
        let g = g_norm_field(&h0(1), &k, 2.0, &tg, &sg, 2000, 0).unwrap();
        assert!((g - 0.5).abs() < 1e-5);
        let g3 = g_norm_field(&h0(1).scale(Complex64::new(3.0, 0.0)), &k, 2.0, &tg, &sg, 2000, 0).unwrap();
        assert!((g3 - 1.5).abs() < 3e-5);

        // duplicated scalar field in ℓ²_d is √d times the scalar value
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let e = HermiteExpansion::random(1, 6, ValueSpace::Real, &mut rng).unwrap();
        let d = 3;
        let mut dup = HermiteExpansion::new(1, 6, ValueSpace::lq(2.0, d).unwrap()).unwrap();
        for (kk, v) in e.iter() {
            dup.insert(kk.clone(), vec![v[0]; d]).unwrap();
        }
        for p in [1.5, 3.0] {
            let s = g_norm_field(&e, &k, p, &tg, &sg, 2000, 0).unwrap();
            let v = g_norm_field(&dup, &k, p, &tg, &sg, 2000, 0).unwrap();
            assert!((v - (d as f64).sqrt() * s).abs() < 1e-10 * v);
        }
    }

    #[test]
    fn pointwise_gamma_matches_materialized_field() {
        let tg = TimeGrid::new(2, 1e-3, 30.0, 40).unwrap();
        let sg = SpatialGrid::new(2, 3, 64).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let e = HermiteExpansion::random(2, 3, ValueSpace::Complex, &mut rng).unwrap();
        let k = MultiIndex::from([1, 2]);
        let field = g_field(&e, &k, &tg, &sg).unwrap();
        let gam = pointwise_gamma_norms(&e, &TimeStructure::g_function(&k).unwrap(), &tg, &sg, GammaSettings::default()).unwrap();
        for xi in [0, 100, 2080, 4095] {
            let flat: Vec<Complex64> = field.series(xi).into_iter().map(|v| v[0]).collect();
            let hn = hn_norm(&flat, &tg).unwrap();
            assert!((hn - gam[xi]).abs() < 1e-12 * (1.0 + hn));
        }
    }

    #[test]
    fn polarization_examples() {
        let tg = TimeGrid::default_for(1).unwrap();
        let sg = SpatialGrid::new(1, 8, 400).unwrap();
        let a = MultiIndex::from([1]);
        let p = polarization_check(&h0(1), &h0(1), &a, &tg, &sg).unwrap();
        assert!((p.rhs.re - 0.25).abs() < 1e-10);
        assert!((p.lhs.re - 0.25).abs() < 1e-6);
        assert!(p.residual < 1e-6);

        let h1 = HermiteExpansion::basis(&MultiIndex::from([1]), 1).unwrap();
        let q = polarization_check(&h0(1), &h1, &a, &tg, &sg).unwrap();
        assert!(q.lhs.norm() < 1e-10 && q.rhs.norm() < 1e-10);
    }

    #[test]
    fn polarization_random_pair_2d() {
        let tg = TimeGrid::default_for(2).unwrap();
        let sg = SpatialGrid::new(2, 8, 128).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let f = HermiteExpansion::random(2, 8, ValueSpace::Real, &mut rng).unwrap();
        let g = HermiteExpansion::random(2, 8, ValueSpace::Real, &mut rng).unwrap();
        let p = polarization_check(&f, &g, &MultiIndex::from([2, 1]), &tg, &sg).unwrap();
        assert!(p.residual < 1e-5, "{p:?}");
    }

    #[test]
    fn equivalence_examples() {
        let tg = TimeGrid::default_for(1).unwrap();
        let sg = SpatialGrid::new(1, 10, 400).unwrap();
        let s = TimeStructure::g_function(&MultiIndex::from([1])).unwrap();
        let r = equivalence_experiment(&[h0(1)], &s, &[2.0], &tg, &sg, 200, 1).unwrap();
        assert!((r.records[0].ratio - 0.5).abs() < 1e-5);

        let mut rng = ChaCha8Rng::seed_from_u64(30);
        let corpus: Vec<HermiteExpansion> =
            (0..5).map(|_| HermiteExpansion::random(1, 10, ValueSpace::Real, &mut rng).unwrap()).collect();
        let scaled: Vec<HermiteExpansion> = corpus.iter().map(|e| e.scale(Complex64::new(10.0, 0.0))).collect();
        let a = equivalence_experiment(&corpus, &s, &[1.5, 2.0, 3.0], &tg, &sg, 200, 1).unwrap();
        let b = equivalence_experiment(&scaled, &s, &[1.5, 2.0, 3.0], &tg, &sg, 200, 1).unwrap();
        for (x, y) in a.records.iter().zip(&b.records) {
            assert!((x.ratio - y.ratio).abs() < 1e-10 * x.ratio);
            if x.p == 2.0 {
                assert!((x.ratio - 0.5).abs() < 1e-5);
            }
        }
        let zero = HermiteExpansion::new(1, 2, ValueSpace::Real).unwrap();
        assert!(equivalence_experiment(&[zero], &s, &[2.0], &tg, &sg, 200, 1).is_err());
        assert!(equivalence_experiment(&[], &s, &[2.0], &tg, &sg, 200, 1).is_err());
    }

    #[test]
    fn quantiles() {
        let s = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(quantile(&s, 0.5), 3.0);
        assert_eq!(quantile(&s, 0.25), 2.0);
        assert!((quantile(&s, 0.05) - 1.2).abs() < 1e-15);
        let sum = summarize(2.0, &[0.5, 0.25, 1.0]);
        assert_eq!(sum.constants, (4.0, 1.0));
    }

    #[test]
    fn profile_closed_forms() {
        let tg = TimeGrid::default_for(1).unwrap();
        for profile in [
            Profile::GFunction { k: 1 },
            Profile::GFunction { k: 3 },
            Profile::Triebel { k: 2, beta: 0.5 },
            Profile::Fractional { alpha: 0.7 },
            Profile::HalfPoisson,
        ] {
            for mu in [1.0, 3.0, 7.0] {
                let s: f64 = tg.axis_nodes().iter().zip(tg.axis_weights()).map(|(&t, &w)| w * profile.eval(t, mu).powi(2)).sum();
                let mut want = profile.diagonal_integral(mu).unwrap();
                if let Profile::Fractional { alpha } = profile {
                    // mass below t_min, ≈ (μ t_min)^{2α} / 2α
                    want -= (mu * 1e-4f64).powf(2.0 * alpha) / (2.0 * alpha);
                }
                assert!((s - want).abs() < 1e-6 * want, "{profile:?} μ={mu}: {s} vs {want}");
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(12))]

        #[test]
        fn degenerate_ratio_is_one_half(seed in any::<u64>()) {
            let tg = TimeGrid::default_for(1).unwrap();
            let sg = SpatialGrid::new(1, 10, 400).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let e = HermiteExpansion::random(1, 10, ValueSpace::Complex, &mut rng).unwrap();
            let g = g_norm_field(&e, &MultiIndex::from([1]), 2.0, &tg, &sg, 100, 0).unwrap();
            let l = e.lp_norm(&sg, 2.0).unwrap();
            prop_assert!((g / l - 0.5).abs() < 1e-5);
        }
    }
}
