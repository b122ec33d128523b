//! Spectral multipliers `T_m`, imaginary powers `L^{iβ}`, the Mellin-type transform
//! `𝓜_α(t, u)` of a symbol, an estimator for `∫ sup_t |𝓜_γ(t,u)| · growth(u) du`, and a
//! numerical check of the representation of `G_{P,α+1}(T_m f)` through `𝓜_α`.
//!
//! Here `L^{iβ}` is the multi-parameter imaginary power acting on `h_k` by
//! `∏_j (2k_j+1)^{iβ_j}`, and for a symbol `m` on `(0,∞)ⁿ`
//!
//! ```text
//! 𝓜_α(t,u) = ∫_{(0,∞)ⁿ} ∏ λ_j^{-iu_j-1} ∏ (t_j λ_j)^{α_j} e^{-t_j λ_j/2} m(λ_1², …, λ_n²) dλ.
//! ```

use crate::basis::{hermite_table, MultiIndex};
use crate::error::{Error, Result};
use crate::expansion::HermiteExpansion;
use crate::special::ln_abs_gamma;
use num_complex::Complex64;
use rayon::prelude::*;
use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

/// Evaluator of a symbol at a point of `ℂⁿ`.
pub type SymbolFn = Arc<dyn Fn(&[Complex64]) -> Complex64 + Send + Sync>;
/// One univariate factor of a separable symbol.
pub type FactorFn = Arc<dyn Fn(Complex64) -> Complex64 + Send + Sync>;

/// A bounded symbol `m` on `(0,∞)ⁿ`, optionally with a product structure
/// `m(z) = ∏ m_j(z_j)` and a sector `Γ_ψ` on which it is asserted to be holomorphic.
///
/// Evaluators must be pure: they are called concurrently.
#[derive(Clone)]
pub struct MultiplierSymbol {
    name: String,
    dim: usize,
    eval: SymbolFn,
    factors: Option<Vec<FactorFn>>,
    sector: Option<f64>,
}

impl fmt::Debug for MultiplierSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MultiplierSymbol")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("separable", &self.factors.is_some())
            .field("sector", &self.sector)
            .finish()
    }
}

const ALMOST_PI: f64 = 0.99 * PI;

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn finite(z: Complex64) -> bool {
    z.re.is_finite() && z.im.is_finite()
}

impl MultiplierSymbol {
    pub fn new<F>(name: impl Into<String>, dim: usize, f: F) -> Result<Self>
    where
        F: Fn(&[Complex64]) -> Complex64 + Send + Sync + 'static,
    {
        if dim == 0 {
            return Err(Error::param("symbol dimension must be at least 1"));
        }
        Ok(MultiplierSymbol { name: name.into(), dim, eval: Arc::new(f), factors: None, sector: None })
    }

    /// `m(z) = ∏_j m_j(z_j)`.
    pub fn separable(name: impl Into<String>, factors: Vec<FactorFn>) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::param("a separable symbol needs at least one factor"));
        }
        let fs = factors.clone();
        let eval: SymbolFn = Arc::new(move |z: &[Complex64]| fs.iter().zip(z).map(|(f, &zj)| f(zj)).product());
        Ok(MultiplierSymbol { name: name.into(), dim: factors.len(), eval, factors: Some(factors), sector: None })
    }

    /// Declares holomorphy on `Γ_ψ = {|arg z| < ψ}ⁿ`.
    pub fn with_sector(mut self, psi: f64) -> Result<Self> {
        if !(psi > 0.0 && psi < PI) {
            return Err(Error::param(format!("sector angle must lie in (0, π), got {psi}")));
        }
        self.sector = Some(psi);
        Ok(self)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn sector(&self) -> Option<f64> {
        self.sector
    }

    pub fn is_separable(&self) -> bool {
        self.factors.is_some()
    }

    /// Same evaluator with the product structure forgotten.
    pub fn without_factors(&self) -> Self {
        MultiplierSymbol { factors: None, ..self.clone() }
    }

    pub fn eval(&self, z: &[Complex64]) -> Complex64 {
        (self.eval)(z)
    }

    pub fn eval_real(&self, lambda: &[f64]) -> Complex64 {
        let z: Vec<Complex64> = lambda.iter().map(|&l| c(l)).collect();
        (self.eval)(&z)
    }

    /// `m(2k_1+1, …, 2k_n+1)`.
    pub fn eval_lattice(&self, k: &MultiIndex) -> Complex64 {
        self.eval_real(&k.lattice_point())
    }

    /// `max |m|` over the lattice points with every `k_j ≤ cap`.
    pub fn sampled_bound(&self, cap: usize) -> Result<f64> {
        let mut bound = 0.0_f64;
        for k in MultiIndex::all_up_to(self.dim, cap) {
            let v = self.eval_lattice(&k);
            if !finite(v) {
                return Err(Error::NonFinite(format!("symbol {} at lattice point {k}", self.name)));
            }
            bound = bound.max(v.norm());
        }
        Ok(bound)
    }

    /// Pointwise product; stays separable when both factors are.
    pub fn product(&self, other: &Self) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: other.dim });
        }
        let name = format!("({})*({})", self.name, other.name);
        let sector = match (self.sector, other.sector) {
            (Some(a), Some(b)) => Some(a.min(b)),
            _ => None,
        };
        let mut out = match (&self.factors, &other.factors) {
            (Some(a), Some(b)) => {
                let fs = a
                    .iter()
                    .zip(b)
                    .map(|(f, g)| {
                        let (f, g) = (f.clone(), g.clone());
                        Arc::new(move |z: Complex64| f(z) * g(z)) as FactorFn
                    })
                    .collect();
                Self::separable(name, fs)?
            }
            _ => {
                let (f, g) = (self.eval.clone(), other.eval.clone());
                Self::new(name, self.dim, move |z| f(z) * g(z))?
            }
        };
        out.sector = sector;
        Ok(out)
    }

    /// Univariate factor along `axis` when the symbol factorizes (every 1-D symbol does).
    fn axis_factor(&self, axis: usize) -> Option<FactorFn> {
        if let Some(fs) = &self.factors {
            return Some(fs[axis].clone());
        }
        if self.dim == 1 {
            let f = self.eval.clone();
            return Some(Arc::new(move |z: Complex64| f(&[z])));
        }
        None
    }

    /// `m ≡ 1`.
    pub fn identity(dim: usize) -> Result<Self> {
        let fs = (0..dim).map(|_| Arc::new(|_: Complex64| c(1.0)) as FactorFn).collect();
        Self::separable("identity", fs)?.with_sector(ALMOST_PI)
    }

    /// `m(z) = ∏ z_j^{iβ_j}`, the symbol of `L^{iβ}`.
    pub fn imaginary_power(beta: &[f64]) -> Result<Self> {
        if beta.iter().any(|b| !b.is_finite()) {
            return Err(Error::param("imaginary-power exponents must be finite"));
        }
        let fs = beta
            .iter()
            .map(|&b| Arc::new(move |z: Complex64| (Complex64::new(0.0, b) * z.ln()).exp()) as FactorFn)
            .collect();
        Self::separable(format!("imaginary-power{beta:?}"), fs)?.with_sector(ALMOST_PI)
    }

    /// `m(z) = ∏ (z_j / (z_j + 1))^{1/2}`.
    pub fn sqrt_ratio(dim: usize) -> Result<Self> {
        let fs = (0..dim).map(|_| Arc::new(|z: Complex64| (z / (z + 1.0)).sqrt()) as FactorFn).collect();
        Self::separable("sqrt-ratio", fs)?.with_sector(ALMOST_PI)
    }

    /// Symbol of the Riesz transform that lowers the first `split` axes and raises the
    /// others by `m`, placed between the two shifts:
    ///
    /// `∏_{ℓ<split} ∏_{s<m_ℓ} √(z_ℓ + 2(m_ℓ−s) − 1) · ∏_{ℓ≥split} ∏_{s=1}^{m_ℓ} √(z_ℓ + 2s − 1)
    ///  / (Σz + 2 Σ_{ℓ<split} m_ℓ)^{|m|/2}`.
    pub fn riesz(m: &MultiIndex, split: usize) -> Result<Self> {
        let n = m.dim();
        if split > n {
            return Err(Error::param(format!("split {split} exceeds dimension {n}")));
        }
        let ms = m.entries().to_vec();
        let lowered: usize = ms[..split].iter().sum();
        let half_order = m.order() as f64 / 2.0;
        let f = move |z: &[Complex64]| {
            let mut num = c(1.0);
            for (l, &ml) in ms.iter().enumerate() {
                if l < split {
                    for s in 0..ml {
                        num *= (z[l] + (2 * (ml - s)) as f64 - 1.0).sqrt();
                    }
                } else {
                    for s in 1..=ml {
                        num *= (z[l] + (2 * s) as f64 - 1.0).sqrt();
                    }
                }
            }
            let total: Complex64 = z.iter().sum();
            num / (total + 2.0 * lowered as f64).powf(half_order)
        };
        let sym = Self::new(format!("riesz{m}/{split}"), n, f)?;
        // Σz stays off the negative axis only while every z_j has positive real part.
        sym.with_sector(if n == 1 { ALMOST_PI } else { 0.49 * PI })
    }

    /// Symbol `(Σz + 2ℓ)^{ℓ/2} (Σz)^{ℓ/2} / Σ_j ∏_{m=1}^{ℓ} (z_j/2 + m − 1/2)` that inverts `τ_ℓ`
    /// up to the factor `2^ℓ`.
    pub fn tau_inverse(dim: usize, ell: usize) -> Result<Self> {
        if ell == 0 {
            return Err(Error::param("τ order must be at least 1"));
        }
        let l = ell as f64;
        Self::new(format!("tau-inverse{ell}"), dim, move |z| {
            let s: Complex64 = z.iter().sum();
            let den: Complex64 = z
                .iter()
                .map(|&zj| (1..=ell).map(|m| zj / 2.0 + m as f64 - 0.5).product::<Complex64>())
                .sum();
            (s + 2.0 * l).powf(l / 2.0) * s.powf(l / 2.0) / den
        })
    }

    /// Built-in symbol by name: `identity`, `sqrt-ratio`, `imaginary-power:β₁,…,βₙ`,
    /// `riesz:m₁,…,mₙ:split`, `tau-inverse:ℓ`.
    pub fn catalog(spec: &str, dim: usize) -> Result<Self> {
        let mut parts = spec.trim().split(':');
        let name = parts.next().unwrap_or_default();
        let args: Vec<&str> = parts.collect();
        let nums = |s: &str| -> Result<Vec<f64>> {
            s.split(',')
                .map(|v| v.trim().parse::<f64>().map_err(|_| Error::param(format!("bad number {v:?} in {spec:?}"))))
                .collect()
        };
        let sym = match (name, args.as_slice()) {
            ("identity", []) => Self::identity(dim)?,
            ("sqrt-ratio", []) => Self::sqrt_ratio(dim)?,
            ("imaginary-power", [b]) => Self::imaginary_power(&nums(b)?)?,
            ("riesz", [m, split]) => {
                let entries = nums(m)?
                    .into_iter()
                    .map(|v| if v >= 0.0 && v.fract() == 0.0 { Ok(v as usize) } else { Err(Error::param("riesz orders must be natural numbers")) })
                    .collect::<Result<Vec<_>>>()?;
                let split = split.trim().parse().map_err(|_| Error::param(format!("bad split in {spec:?}")))?;
                Self::riesz(&MultiIndex::new(entries)?, split)?
            }
            ("tau-inverse", [l]) => {
                let l = l.trim().parse().map_err(|_| Error::param(format!("bad order in {spec:?}")))?;
                Self::tau_inverse(dim, l)?
            }
            _ => return Err(Error::param(format!("unknown catalog symbol {spec:?}"))),
        };
        if sym.dim != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: sym.dim });
        }
        Ok(sym)
    }
}

/// `T_m`: `c_k ↦ m(2k_1+1, …, 2k_n+1) c_k`.
pub fn apply_multiplier(e: &HermiteExpansion, m: &MultiplierSymbol) -> Result<HermiteExpansion> {
    if e.dim() != m.dim() {
        return Err(Error::DimensionMismatch { expected: m.dim(), found: e.dim() });
    }
    e.map_diagonal(|k| m.eval_lattice(k))
}

/// `L^{iβ}`: `c_k ↦ ∏ (2k_j+1)^{iβ_j} c_k`.
pub fn imaginary_power(e: &HermiteExpansion, beta: &[f64]) -> Result<HermiteExpansion> {
    if e.dim() != beta.len() {
        return Err(Error::DimensionMismatch { expected: e.dim(), found: beta.len() });
    }
    e.map_diagonal(|k| {
        let phase: f64 = k.lattice_point().iter().zip(beta).map(|(l, b)| b * l.ln()).sum();
        Complex64::from_polar(1.0, phase)
    })
}

// λ-quadrature: trapezoid in s = ln|x|, x = tλ/2 = e^{s+iθ}, |x| ∈ [X_MIN, X_MAX].
const MELLIN_NODES: usize = 1201;
const TENSOR_NODES: usize = 1201;
const X_MIN: f64 = 1e-10;
const X_MAX: f64 = 1e3;
const MAX_ROTATION: f64 = 1.3;

/// Angle of the integration ray. Rotating against the sign of `u` removes most of the
/// cancellation in `x^{-iu}`; it needs `m` holomorphic on the doubled angle.
fn rotation(sector: Option<f64>, u: f64) -> f64 {
    match sector {
        Some(psi) if u != 0.0 => -u.signum() * (0.45 * psi).min(MAX_ROTATION),
        _ => 0.0,
    }
}

struct AxisQuad {
    x: Vec<Complex64>,
    ln_x: Vec<Complex64>,
    fine: Vec<f64>,
    coarse: Vec<f64>,
}

impl AxisQuad {
    fn new(theta: f64, nodes: usize) -> Self {
        let (a, b) = (X_MIN.ln(), X_MAX.ln());
        let h = (b - a) / (nodes - 1) as f64;
        let ln_x: Vec<Complex64> = (0..nodes).map(|i| Complex64::new(a + h * i as f64, theta)).collect();
        let x = ln_x.iter().map(|l| l.exp()).collect();
        let mut fine = vec![h; nodes];
        fine[0] *= 0.5;
        fine[nodes - 1] *= 0.5;
        let mut coarse: Vec<f64> = (0..nodes).map(|i| if i % 2 == 0 { 2.0 * h } else { 0.0 }).collect();
        coarse[0] *= 0.5;
        coarse[nodes - 1] *= 0.5;
        AxisQuad { x, ln_x, fine, coarse }
    }

    /// `x^{α−iu} e^{−x}` at every node.
    fn kernel(&self, alpha: f64, u: f64) -> Vec<Complex64> {
        let e = Complex64::new(alpha, -u);
        self.ln_x.iter().zip(&self.x).map(|(l, x)| (e * l - x).exp()).collect()
    }
}

/// `t^{iu} 2^{α−iu}`.
fn prefactor(alpha: f64, t: f64, u: f64) -> Complex64 {
    (Complex64::new(0.0, u * t.ln()) + Complex64::new(alpha, -u) * 2f64.ln()).exp()
}

/// Compares the full trapezoid sum against the one on every other node.
fn check_sums(fine: Complex64, coarse: Complex64, scale: f64) -> Result<f64> {
    let diff = (fine - coarse).norm();
    let residual = diff / fine.norm().max(f64::MIN_POSITIVE);
    if diff > 1e-7 * fine.norm() + 1e-13 * scale || !finite(fine) {
        return Err(Error::NonConvergence { what: "Mellin λ-quadrature".into(), residual });
    }
    Ok(residual)
}

/// Univariate transform `∫₀^∞ λ^{-iu-1} (tλ)^α e^{-tλ/2} f(λ²) dλ`.
struct AxisMellin {
    factor: FactorFn,
    alpha: f64,
    sector: Option<f64>,
    // Rays for u < 0, u = 0, u > 0.
    quads: [AxisQuad; 3],
}

impl AxisMellin {
    fn new(factor: FactorFn, alpha: f64, sector: Option<f64>) -> Self {
        let quads = [-1.0, 0.0, 1.0].map(|u| AxisQuad::new(rotation(sector, u), MELLIN_NODES));
        AxisMellin { factor, alpha, sector, quads }
    }

    fn ray(u: f64) -> usize {
        if u < 0.0 {
            0
        } else if u == 0.0 {
            1
        } else {
            2
        }
    }

    fn symbol_values(&self, ray: usize, t: f64) -> Result<Vec<Complex64>> {
        let q = &self.quads[ray];
        let vals: Vec<Complex64> = q
            .x
            .iter()
            .map(|x| {
                let lambda = 2.0 * x / t;
                (self.factor)(lambda * lambda)
            })
            .collect();
        if vals.iter().any(|v| !finite(*v)) {
            return Err(Error::NonFinite(format!("symbol on the integration ray (t = {t}, θ = {})", rotation(self.sector, ray as f64 - 1.0))));
        }
        Ok(vals)
    }

    /// Row-major `[t][u]` table and the worst quadrature residual.
    fn table(&self, ts: &[f64], us: &[f64]) -> Result<(Vec<Complex64>, f64)> {
        let kernels: Vec<Vec<Complex64>> =
            us.par_iter().map(|&u| self.quads[Self::ray(u)].kernel(self.alpha, u)).collect();
        let rows: Vec<(Vec<Complex64>, f64)> = ts
            .par_iter()
            .map(|&t| {
                let mut vals: [Option<Vec<Complex64>>; 3] = [None, None, None];
                let mut row = Vec::with_capacity(us.len());
                let mut worst = 0.0_f64;
                for (&u, kern) in us.iter().zip(&kernels) {
                    let r = Self::ray(u);
                    if vals[r].is_none() {
                        vals[r] = Some(self.symbol_values(r, t)?);
                    }
                    let mv = vals[r].as_ref().expect("filled above");
                    let q = &self.quads[r];
                    let (mut fine, mut coarse, mut scale) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0), 0.0);
                    for i in 0..mv.len() {
                        let term = kern[i] * mv[i];
                        fine += term * q.fine[i];
                        coarse += term * q.coarse[i];
                        scale += term.norm() * q.fine[i];
                    }
                    worst = worst.max(check_sums(fine, coarse, scale)?);
                    row.push(prefactor(self.alpha, t, u) * fine);
                }
                Ok((row, worst))
            })
            .collect::<Result<_>>()?;
        let worst = rows.iter().fold(0.0_f64, |a, r| a.max(r.1));
        Ok((rows.into_iter().flat_map(|r| r.0).collect(), worst))
    }
}

/// Values of `𝓜_α` on a list of `t` points crossed with a list of `u` points.
#[derive(Clone, Debug, PartialEq)]
pub struct MellinSample {
    pub alpha: MultiIndex,
    pub t_nodes: Vec<Vec<f64>>,
    pub u_nodes: Vec<Vec<f64>>,
    /// Row-major `[t][u]`.
    pub values: Vec<Complex64>,
    /// Largest relative gap between the quadrature and its half-resolution version.
    pub max_residual: f64,
}

impl MellinSample {
    pub fn get(&self, t_index: usize, u_index: usize) -> Complex64 {
        self.values[t_index * self.u_nodes.len() + u_index]
    }
}

fn check_alpha(m: &MultiplierSymbol, alpha: &MultiIndex) -> Result<()> {
    if alpha.dim() != m.dim() {
        return Err(Error::DimensionMismatch { expected: m.dim(), found: alpha.dim() });
    }
    if alpha.entries().iter().any(|&a| a == 0) {
        return Err(Error::param(format!("every α_j must be at least 1, got {alpha}")));
    }
    Ok(())
}

fn check_points(points: &[Vec<f64>], dim: usize, positive: bool, what: &str) -> Result<()> {
    for p in points {
        if p.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: p.len() });
        }
        if p.iter().any(|v| !v.is_finite() || (positive && *v <= 0.0)) {
            return Err(Error::param(format!("invalid {what} point {p:?}")));
        }
    }
    Ok(())
}

/// `𝓜_α(t, u)` for every `t` in `t_nodes` and `u` in `u_nodes`.
///
/// Separable symbols are transformed axis by axis. Other symbols are integrated on a
/// tensor rule, which is supported up to `n = 2`.
pub fn mellin_transform(
    m: &MultiplierSymbol,
    alpha: &MultiIndex,
    t_nodes: &[Vec<f64>],
    u_nodes: &[Vec<f64>],
) -> Result<MellinSample> {
    check_alpha(m, alpha)?;
    let n = m.dim();
    check_points(t_nodes, n, true, "t")?;
    check_points(u_nodes, n, false, "u")?;
    let nu = u_nodes.len();
    let mut values = vec![Complex64::new(1.0, 0.0); t_nodes.len() * nu];
    let mut max_residual = 0.0_f64;
    if (0..n).all(|j| m.axis_factor(j).is_some()) {
        for j in 0..n {
            let axis = AxisMellin::new(m.axis_factor(j).expect("checked"), alpha.get(j) as f64, m.sector);
            let ts: Vec<f64> = t_nodes.iter().map(|t| t[j]).collect();
            let us: Vec<f64> = u_nodes.iter().map(|u| u[j]).collect();
            let (table, res) = axis.table(&ts, &us)?;
            max_residual = max_residual.max(res);
            for (v, a) in values.iter_mut().zip(table) {
                *v *= a;
            }
        }
    } else {
        if n > 2 {
            return Err(Error::Budget("non-separable Mellin transforms are limited to n ≤ 2".into()));
        }
        let pairs: Vec<(usize, usize)> = (0..t_nodes.len()).flat_map(|i| (0..nu).map(move |k| (i, k))).collect();
        let out: Vec<(Complex64, f64)> = pairs
            .par_iter()
            .map(|&(i, k)| tensor_value(m, alpha, &t_nodes[i], &u_nodes[k]))
            .collect::<Result<_>>()?;
        for (v, (z, r)) in values.iter_mut().zip(out) {
            *v = z;
            max_residual = max_residual.max(r);
        }
    }
    Ok(MellinSample {
        alpha: alpha.clone(),
        t_nodes: t_nodes.to_vec(),
        u_nodes: u_nodes.to_vec(),
        values,
        max_residual,
    })
}

/// Single value `𝓜_α(t, u)`.
pub fn mellin_value(m: &MultiplierSymbol, alpha: &MultiIndex, t: &[f64], u: &[f64]) -> Result<Complex64> {
    Ok(mellin_transform(m, alpha, &[t.to_vec()], &[u.to_vec()])?.values[0])
}

fn tensor_value(m: &MultiplierSymbol, alpha: &MultiIndex, t: &[f64], u: &[f64]) -> Result<(Complex64, f64)> {
    let n = m.dim();
    let quads: Vec<AxisQuad> = u.iter().map(|&uj| AxisQuad::new(rotation(m.sector, uj), TENSOR_NODES)).collect();
    let kernels: Vec<Vec<Complex64>> =
        (0..n).map(|j| quads[j].kernel(alpha.get(j) as f64, u[j])).collect();
    let squares: Vec<Vec<Complex64>> = (0..n)
        .map(|j| quads[j].x.iter().map(|x| (2.0 * x / t[j]).powi(2)).collect())
        .collect();
    let zero = Complex64::new(0.0, 0.0);
    let (fine, coarse, scale) = if n == 1 {
        let mut acc = (zero, zero, 0.0);
        for i in 0..TENSOR_NODES {
            let term = kernels[0][i] * m.eval(&[squares[0][i]]);
            acc.0 += term * quads[0].fine[i];
            acc.1 += term * quads[0].coarse[i];
            acc.2 += term.norm() * quads[0].fine[i];
        }
        acc
    } else {
        (0..TENSOR_NODES)
            .into_par_iter()
            .map(|i| {
                let mut acc = (zero, zero, 0.0);
                for k in 0..TENSOR_NODES {
                    let term = kernels[0][i] * kernels[1][k] * m.eval(&[squares[0][i], squares[1][k]]);
                    acc.0 += term * (quads[0].fine[i] * quads[1].fine[k]);
                    acc.1 += term * (quads[0].coarse[i] * quads[1].coarse[k]);
                    acc.2 += term.norm() * quads[0].fine[i] * quads[1].fine[k];
                }
                acc
            })
            .collect::<Vec<_>>()
            .into_iter()
            // sequential sum keeps the result independent of the thread count
            .fold((zero, zero, 0.0), |a, b| (a.0 + b.0, a.1 + b.1, a.2 + b.2))
    };
    if !finite(fine) {
        return Err(Error::NonFinite(format!("symbol {} on the integration rays", m.name)));
    }
    let residual = check_sums(fine, coarse, scale)?;
    let pre: Complex64 = (0..n).map(|j| prefactor(alpha.get(j) as f64, t[j], u[j])).product();
    Ok((pre * fine, residual))
}

const LADDER_POINTS: usize = 60;
const LADDER_MIN: f64 = 1e-3;
const LADDER_MAX: f64 = 1e2;
const LADDER_ROUNDS: usize = 5;
const LADDER_TOL: f64 = 0.01;

/// `sup_t |𝓜_γ(t, u)|` estimated on a refined log ladder; see [`sup_over_t`].
#[derive(Clone, Debug, PartialEq)]
pub struct SupEstimate {
    pub u_nodes: Vec<Vec<f64>>,
    pub values: Vec<f64>,
    /// Refinement rounds needed on the slowest axis.
    pub rounds: usize,
    /// Ladder length after the last round.
    pub ladder_len: usize,
}

fn ladder(points: usize) -> Vec<f64> {
    let (a, b) = (LADDER_MIN.ln(), LADDER_MAX.ln());
    (0..points).map(|i| (a + (b - a) * i as f64 / (points - 1) as f64).exp()).collect()
}

/// Per-`u` supremum over the ladder, refined by inserting midpoints until no value moves by
/// more than 1%.
fn axis_sup(axis: &AxisMellin, us: &[f64]) -> Result<(Vec<f64>, usize, usize)> {
    let fold = |ts: &[f64], acc: &mut Vec<f64>| -> Result<()> {
        let (table, _) = axis.table(ts, us)?;
        for row in table.chunks(us.len()) {
            for (a, v) in acc.iter_mut().zip(row) {
                *a = a.max(v.norm());
            }
        }
        Ok(())
    };
    let mut sup = vec![0.0; us.len()];
    let mut points = LADDER_POINTS;
    fold(&ladder(points), &mut sup)?;
    let mut moved = f64::INFINITY;
    for round in 1..=LADDER_ROUNDS {
        let fine = ladder(2 * points - 1);
        let mids: Vec<f64> = fine.iter().skip(1).step_by(2).copied().collect();
        let mut next = sup.clone();
        fold(&mids, &mut next)?;
        points = fine.len();
        moved = sup
            .iter()
            .zip(&next)
            .map(|(a, b)| if *b > 0.0 { (b - a) / b } else { 0.0 })
            .fold(0.0, f64::max);
        sup = next;
        if moved < LADDER_TOL {
            return Ok((sup, round, points));
        }
    }
    Err(Error::NonConvergence { what: "sup over t on the refinement ladder".into(), residual: moved })
}

fn separable_axes(m: &MultiplierSymbol, gamma: &MultiIndex) -> Result<Vec<AxisMellin>> {
    check_alpha(m, gamma)?;
    (0..m.dim())
        .map(|j| {
            m.axis_factor(j)
                .map(|f| AxisMellin::new(f, gamma.get(j) as f64, m.sector))
                .ok_or_else(|| Error::Budget("sup over t is only computed for separable symbols when n ≥ 2".into()))
        })
        .collect()
}

/// Estimate of `sup_{t ∈ (0,∞)ⁿ} |𝓜_γ(t, u)|`.
///
/// The supremum is taken over a 60-point log ladder on `[10⁻³, 10²]` per axis, doubled until
/// it moves by less than 1%. It is a lower estimate of the true supremum.
pub fn sup_over_t(m: &MultiplierSymbol, gamma: &MultiIndex, u_nodes: &[Vec<f64>]) -> Result<SupEstimate> {
    let axes = separable_axes(m, gamma)?;
    check_points(u_nodes, m.dim(), false, "u")?;
    let mut values = vec![1.0; u_nodes.len()];
    let (mut rounds, mut ladder_len) = (0, 0);
    for (j, axis) in axes.iter().enumerate() {
        let us: Vec<f64> = u_nodes.iter().map(|u| u[j]).collect();
        let (s, r, l) = axis_sup(axis, &us)?;
        rounds = rounds.max(r);
        ladder_len = ladder_len.max(l);
        for (v, a) in values.iter_mut().zip(s) {
            *v *= a;
        }
    }
    Ok(SupEstimate { u_nodes: u_nodes.to_vec(), values, rounds, ladder_len })
}

/// Model for the growth of `‖L^{iu/2}‖` in `u`, applied per axis.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Growth {
    /// `e^{ω Σ|u_j|}`
    Exponential { omega: f64 },
    /// `∏ (1 + |u_j|)^degree`
    Polynomial { degree: f64 },
}

impl Default for Growth {
    fn default() -> Self {
        Growth::Exponential { omega: 1.0 }
    }
}

impl Growth {
    fn validate(&self) -> Result<()> {
        let v = match self {
            Growth::Exponential { omega } => *omega,
            Growth::Polynomial { degree } => *degree,
        };
        if !(v >= 0.0) || !v.is_finite() {
            return Err(Error::param(format!("growth parameter must be finite and non-negative, got {v}")));
        }
        Ok(())
    }

    /// `ln growth(u)` along one axis.
    pub fn ln_factor(&self, u: f64) -> f64 {
        match self {
            Growth::Exponential { omega } => omega * u.abs(),
            Growth::Polynomial { degree } => degree * u.abs().ln_1p(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MedaSettings {
    pub u_cutoff: f64,
    pub u_step: f64,
}

impl Default for MedaSettings {
    fn default() -> Self {
        MedaSettings { u_cutoff: 40.0, u_step: 0.1 }
    }
}

/// One-axis part of a [`MedaReport`].
#[derive(Clone, Debug, PartialEq)]
pub struct AxisMeda {
    /// `∫_{-U}^{U} sup_t |𝓜| · growth du`.
    pub truncated: f64,
    /// Extrapolated `|u| > U` contribution; infinite when the envelope does not decay.
    pub tail: f64,
    /// Constants `C_±` fitted so that `C (1+|u|)|Γ(γ−iu)|` covers the sup on `±[U/2, U]`.
    pub envelope_constants: [f64; 2],
    /// `d/du ln[(1+u)|Γ(γ−iu)| growth(u)]` at `u = 10⁴`.
    pub tail_log_slope: f64,
    pub sup_rounds: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MedaReport {
    pub finite: bool,
    /// Truncated integral plus envelope tail (product over axes).
    pub estimate: f64,
    pub truncated: f64,
    pub axes: Vec<AxisMeda>,
}

/// `ln[(1+|u|) |Γ(γ−iu)|]`
fn ln_envelope(gamma: f64, u: f64) -> f64 {
    u.abs().ln_1p() + ln_abs_gamma(Complex64::new(gamma, -u))
}

/// Estimates `∫_{ℝⁿ} sup_t |𝓜_γ(t,u)| · growth(u) du` for a separable symbol.
///
/// The integral over `[-U, U]ⁿ` uses the ladder estimate of the supremum; beyond `U` each
/// axis is extended with the envelope `C (1+|u|)|Γ(γ−iu)|`. The verdict is the sign of the
/// envelope's log-slope far out, so it reflects the declared growth model rather than the
/// finite sample.
pub fn meda_condition(
    m: &MultiplierSymbol,
    gamma: &MultiIndex,
    growth: Growth,
    settings: MedaSettings,
) -> Result<MedaReport> {
    growth.validate()?;
    let MedaSettings { u_cutoff, u_step } = settings;
    if !(u_cutoff > 0.0 && u_cutoff.is_finite() && u_step > 0.0 && u_step <= u_cutoff) {
        return Err(Error::param(format!("need 0 < u-step ≤ u-cutoff < ∞, got {u_step} and {u_cutoff}")));
    }
    let axes = separable_axes(m, gamma).map_err(|e| match e {
        Error::Budget(_) => Error::Budget("the integrability estimator needs a separable symbol when n ≥ 2".into()),
        other => other,
    })?;
    let steps = (2.0 * u_cutoff / u_step).round() as usize;
    let us: Vec<f64> = (0..=steps).map(|i| -u_cutoff + 2.0 * u_cutoff * i as f64 / steps as f64).collect();
    let h = 2.0 * u_cutoff / steps as f64;
    let mut reports = Vec::with_capacity(axes.len());
    for (j, axis) in axes.iter().enumerate() {
        let g = gamma.get(j) as f64;
        let (sup, rounds, _) = axis_sup(axis, &us)?;
        let integrand: Vec<f64> = us.iter().zip(&sup).map(|(u, s)| s * growth.ln_factor(*u).exp()).collect();
        let truncated = h * (integrand.iter().sum::<f64>() - 0.5 * (integrand[0] + integrand[steps]));

        let mut constants = [0.0_f64; 2];
        for (u, s) in us.iter().zip(&sup) {
            if u.abs() >= 0.5 * u_cutoff && *s > 0.0 {
                let side = usize::from(*u > 0.0);
                constants[side] = constants[side].max((s.ln() - ln_envelope(g, *u)).exp());
            }
        }
        let far = 1e4;
        let f = |u: f64| ln_envelope(g, u) + growth.ln_factor(u);
        let slope = 0.5 * (f(far + 1.0) - f(far - 1.0));
        let tail = if slope < 0.0 {
            (constants[0] + constants[1]) * envelope_tail(u_cutoff, f)?
        } else {
            f64::INFINITY
        };
        reports.push(AxisMeda { truncated, tail, envelope_constants: constants, tail_log_slope: slope, sup_rounds: rounds });
    }
    let finite = reports.iter().all(|r| r.tail.is_finite());
    let truncated = reports.iter().map(|r| r.truncated).product();
    let estimate = if finite { reports.iter().map(|r| r.truncated + r.tail).product() } else { f64::INFINITY };
    Ok(MedaReport { finite, estimate, truncated, axes: reports })
}

/// `∫_U^∞ e^{f(u)} du` for a log-integrand that is eventually decreasing.
fn envelope_tail(u0: f64, f: impl Fn(f64) -> f64) -> Result<f64> {
    let h = 0.05;
    let (mut acc, mut u) = (0.5 * h * f(u0).exp(), u0);
    for _ in 0..4_000_000 {
        u += h;
        let v = f(u).exp();
        acc += h * v;
        if u > u0 + 1.0 && v < 1e-17 * acc.max(f64::MIN_POSITIVE) {
            return Ok(acc);
        }
        if v == 0.0 && acc == 0.0 && u > u0 + 1.0 {
            return Ok(0.0);
        }
    }
    Err(Error::NonConvergence { what: "envelope tail integral".into(), residual: f(u).exp() })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IdentitySettings {
    pub u_cutoff: f64,
    pub u_step: f64,
    /// Largest allowed `|𝓜(t, ±U)| / max_u |𝓜(t, u)|`.
    pub tail_tol: f64,
}

impl Default for IdentitySettings {
    fn default() -> Self {
        IdentitySettings { u_cutoff: 40.0, u_step: 0.1, tail_tol: 1e-10 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct IdentityPoint {
    pub t: Vec<f64>,
    pub x: Vec<f64>,
    pub lhs: Complex64,
    pub rhs: Complex64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct IdentityReport {
    /// `(−1)^{|α|} π^{−n}`, the constant in front of the `u`-integral.
    pub normalization: f64,
    /// `max |lhs − rhs| / max(|lhs|, 10⁻⁶ max|lhs|)` over the probe points.
    pub max_residual: f64,
    pub points: Vec<IdentityPoint>,
}

/// Compares both sides of
///
/// ```text
/// G_{P,α+1}(T_m f)(t,x) = C ∫_{ℝⁿ} 𝓜_α(t,u) [∏_j t_j ∂_{t_j} P_{t_j/2}] L^{iu/2} f (x) du
/// ```
///
/// on the probe points `t_probes × x_probes`, where `P_t` acts on axis `j` through
/// `√(2k_j+1)`. The left side is evaluated in closed form and the right side by quadrature
/// in `u`. Fourier inversion in `ln λ` fixes `C = (−1)^{|α|} π^{−n}`; the `(2π)^{−n}` one
/// would expect from the inversion formula alone misses the sign of the `α+1` derivatives
/// and a factor `2ⁿ` from the half-time Poisson factor.
pub fn mellin_identity_check(
    e: &HermiteExpansion,
    m: &MultiplierSymbol,
    alpha: &MultiIndex,
    t_probes: &[Vec<f64>],
    x_probes: &[Vec<f64>],
    settings: IdentitySettings,
) -> Result<IdentityReport> {
    let n = e.dim();
    if m.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, found: m.dim() });
    }
    if n > 2 {
        return Err(Error::Budget("the identity check supports n ≤ 2".into()));
    }
    if !e.space().is_scalar() {
        return Err(Error::param("the identity check needs a scalar expansion"));
    }
    let cap = e.max_degree();
    if cap > 6 {
        return Err(Error::Budget(format!("the identity check supports degree ≤ 6, got {cap}")));
    }
    check_alpha(m, alpha)?;
    check_points(t_probes, n, true, "t")?;
    check_points(x_probes, n, false, "x")?;
    let IdentitySettings { u_cutoff, u_step, tail_tol } = settings;
    if !(u_cutoff > 0.0 && u_step > 0.0 && u_step <= u_cutoff) {
        return Err(Error::param("need 0 < u-step ≤ u-cutoff"));
    }
    let axes = separable_axes(m, alpha)?;
    let steps = (2.0 * u_cutoff / u_step).round() as usize;
    let h = 2.0 * u_cutoff / steps as f64;
    let us: Vec<f64> = (0..=steps).map(|i| -u_cutoff + h * i as f64).collect();

    // Per axis and probe: closed-form left factor and quadrature right factor for each degree.
    let mut left = Vec::with_capacity(n);
    let mut right = Vec::with_capacity(n);
    for (j, axis) in axes.iter().enumerate() {
        let a = alpha.get(j) as i32;
        let ts: Vec<f64> = t_probes.iter().map(|t| t[j]).collect();
        let (table, _) = axis.table(&ts, &us)?;
        let factor = m.axis_factor(j).expect("separable");
        let mut lj = Vec::with_capacity(ts.len());
        let mut rj = Vec::with_capacity(ts.len());
        for (ti, &t) in ts.iter().enumerate() {
            let row = &table[ti * us.len()..(ti + 1) * us.len()];
            let peak = row.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()));
            let edge = row[0].norm().max(row[steps].norm());
            if peak > 0.0 && edge > tail_tol * peak {
                return Err(Error::NonConvergence { what: "u-integral tail".into(), residual: edge / peak });
            }
            let mut lrow = Vec::with_capacity(cap + 1);
            let mut rrow = Vec::with_capacity(cap + 1);
            for k in 0..=cap {
                let lambda = (2 * k + 1) as f64;
                let mu = lambda.sqrt();
                let tm = t * mu;
                lrow.push(factor(c(lambda)) * tm.powi(a + 1) * (-1f64).powi(a + 1) * (-tm).exp());
                let ln_mu = mu.ln();
                let mut jk = Complex64::new(0.0, 0.0);
                for (i, (&u, v)) in us.iter().zip(row).enumerate() {
                    let w = if i == 0 || i == steps { 0.5 * h } else { h };
                    jk += v * Complex64::from_polar(w, u * ln_mu);
                }
                rrow.push(jk * (-0.5 * tm) * (-0.5 * tm).exp());
            }
            lj.push(lrow);
            rj.push(rrow);
        }
        left.push(lj);
        right.push(rj);
    }

    let order = alpha.order() as i32;
    let normalization = (-1f64).powi(order) * PI.powi(-(n as i32));
    let mut points = Vec::with_capacity(t_probes.len() * x_probes.len());
    for x in x_probes {
        let tables: Vec<Vec<f64>> = x.iter().map(|&xj| hermite_table(cap, xj)).collect();
        for (ti, t) in t_probes.iter().enumerate() {
            let (mut lhs, mut rhs) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
            for (k, v) in e.iter() {
                let mut l = v[0];
                let mut r = v[0];
                for j in 0..n {
                    let kj = k.get(j);
                    let hk = tables[j][kj];
                    l *= left[j][ti][kj] * hk;
                    r *= right[j][ti][kj] * hk;
                }
                lhs += l;
                rhs += r;
            }
            points.push(IdentityPoint { t: t.clone(), x: x.clone(), lhs, rhs: rhs * normalization });
        }
    }
    let scale = points.iter().fold(0.0_f64, |a, p| a.max(p.lhs.norm()));
    let max_residual = points
        .iter()
        .map(|p| {
            let diff = (p.lhs - p.rhs).norm();
            if scale == 0.0 {
                diff
            } else {
                diff / p.lhs.norm().max(1e-6 * scale)
            }
        })
        .fold(0.0, f64::max);
    Ok(IdentityReport { normalization, max_residual, points })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::semigroup::{heat_apply, poisson_apply};
    use crate::special::gamma;
    use crate::value::ValueSpace;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random(dim: usize, cap: usize, seed: u64) -> HermiteExpansion {
        HermiteExpansion::random(dim, cap, ValueSpace::Complex, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap()
    }

    #[test]
    fn lattice_product_example() {
        let m = MultiplierSymbol::new("prod", 2, |z| z[0] * z[1]).unwrap();
        let e = HermiteExpansion::basis(&MultiIndex::new(vec![1, 2]).unwrap(), 2).unwrap();
        let out = apply_multiplier(&e, &m).unwrap();
        assert_eq!(out.coeff(&MultiIndex::new(vec![1, 2]).unwrap()), c(15.0));
    }

    #[test]
    fn identity_and_bound() {
        let e = random(2, 5, 1);
        let id = MultiplierSymbol::identity(2).unwrap();
        assert_eq!(apply_multiplier(&e, &id).unwrap(), e);
        let m = MultiplierSymbol::sqrt_ratio(2).unwrap();
        let bound = m.sampled_bound(5).unwrap();
        assert!(bound < 1.0 && bound > 0.9);
        assert!(apply_multiplier(&e, &m).unwrap().l2_norm() <= bound * e.l2_norm() + 1e-12);
        let bad = MultiplierSymbol::new("pole", 1, |z| 1.0 / (z[0] - 3.0)).unwrap();
        assert!(matches!(apply_multiplier(&random(1, 3, 2), &bad), Err(Error::NonFinite(_))));
        assert!(bad.sampled_bound(3).is_err());
    }

    #[test]
    fn imaginary_powers() {
        let e = random(2, 6, 3);
        assert!(imaginary_power(&e, &[0.0, 0.0]).unwrap().max_abs_diff(&e) < 1e-15);
        let a = imaginary_power(&e, &[0.7, -1.1]).unwrap();
        assert!((a.l2_norm() - e.l2_norm()).abs() < 1e-12);
        let ab = imaginary_power(&a, &[0.4, 2.0]).unwrap();
        let direct = imaginary_power(&e, &[1.1, 0.9]).unwrap();
        assert!(ab.max_abs_diff(&direct) < 1e-12);
        let via_symbol = apply_multiplier(&e, &MultiplierSymbol::imaginary_power(&[0.7, -1.1]).unwrap()).unwrap();
        assert!(via_symbol.max_abs_diff(&a) < 1e-12);
    }

    #[test]
    fn catalog_names() {
        assert_eq!(MultiplierSymbol::catalog("identity", 3).unwrap().dim(), 3);
        assert!(MultiplierSymbol::catalog("imaginary-power:0.5,1", 2).unwrap().is_separable());
        let r = MultiplierSymbol::catalog("riesz:1,0:1", 2).unwrap();
        assert!(!r.is_separable());
        assert!(MultiplierSymbol::catalog("riesz:1,0:1", 3).is_err());
        assert!(MultiplierSymbol::catalog("tau-inverse:2", 2).is_ok());
        assert!(MultiplierSymbol::catalog("nope", 1).is_err());
        assert!(MultiplierSymbol::catalog("riesz:1.5:0", 1).is_err());
    }

    #[test]
    fn riesz_symbol_one_axis() {
        // Raising by one: √(z+1)/√z; lowering by one: √(z+1)/√(z+2).
        let up = MultiplierSymbol::riesz(&MultiIndex::new(vec![1]).unwrap(), 0).unwrap();
        let down = MultiplierSymbol::riesz(&MultiIndex::new(vec![1]).unwrap(), 1).unwrap();
        for z in [1.0, 3.0, 9.0] {
            assert!((up.eval_real(&[z]).re - ((z + 1.0) / z).sqrt()).abs() < 1e-14);
            assert!((down.eval_real(&[z]).re - ((z + 1.0) / (z + 2.0)).sqrt()).abs() < 1e-14);
        }
    }

    #[test]
    fn mellin_closed_form() {
        let m = MultiplierSymbol::identity(1).unwrap();
        let alpha = MultiIndex::new(vec![1]).unwrap();
        let ts: Vec<Vec<f64>> = [0.3, 1.0, 4.0].iter().map(|&t| vec![t]).collect();
        let us: Vec<Vec<f64>> = (-40..=40).map(|i| vec![i as f64 * 0.5]).collect();
        let s = mellin_transform(&m, &alpha, &ts, &us).unwrap();
        for (ti, t) in ts.iter().enumerate() {
            for (ui, u) in us.iter().enumerate() {
                let want = prefactor(1.0, t[0], u[0]) * gamma(Complex64::new(1.0, -u[0]));
                let got = s.get(ti, ui);
                assert!((got - want).norm() < 1e-6 * want.norm(), "t={t:?} u={u:?} {got} {want}");
            }
        }
    }

    #[test]
    fn mellin_conjugate_symmetry_and_higher_alpha() {
        let m = MultiplierSymbol::sqrt_ratio(1).unwrap();
        let alpha = MultiIndex::new(vec![2]).unwrap();
        for &(t, u) in &[(0.5, 3.0), (2.0, 11.0), (1.0, 0.4)] {
            let a = mellin_value(&m, &alpha, &[t], &[u]).unwrap();
            let b = mellin_value(&m, &alpha, &[t], &[-u]).unwrap();
            assert!((a - b.conj()).norm() < 1e-9 * a.norm());
        }
        let id = MultiplierSymbol::identity(1).unwrap();
        let v = mellin_value(&id, &alpha, &[0.7], &[2.5]).unwrap();
        let want = prefactor(2.0, 0.7, 2.5) * gamma(Complex64::new(2.0, -2.5));
        assert!((v - want).norm() < 1e-9 * want.norm());
    }

    #[test]
    fn separable_matches_tensor_rule() {
        let m = MultiplierSymbol::sqrt_ratio(2).unwrap();
        let opaque = m.without_factors();
        let alpha = MultiIndex::new(vec![1, 2]).unwrap();
        for (t, u) in [([0.8, 1.7], [1.5, -2.0]), ([2.0, 0.5], [0.0, 4.0])] {
            let a = mellin_value(&m, &alpha, &t, &u).unwrap();
            let b = mellin_value(&opaque, &alpha, &t, &u).unwrap();
            assert!((a - b).norm() < 1e-8 * a.norm(), "{a} {b}");
        }
    }

    #[test]
    fn mellin_rejects_bad_input() {
        let m = MultiplierSymbol::identity(1).unwrap();
        let zero = MultiIndex::new(vec![0]).unwrap();
        assert!(mellin_value(&m, &zero, &[1.0], &[0.0]).is_err());
        let one = MultiIndex::new(vec![1]).unwrap();
        assert!(mellin_value(&m, &one, &[-1.0], &[0.0]).is_err());
        assert!(mellin_value(&m, &one, &[1.0], &[f64::NAN]).is_err());
        let three = MultiplierSymbol::new("s", 3, |z| z[0] / (z[0] + z[1] + z[2])).unwrap();
        let a3 = MultiIndex::new(vec![1, 1, 1]).unwrap();
        assert!(matches!(mellin_value(&three, &a3, &[1.0; 3], &[0.0; 3]), Err(Error::Budget(_))));
    }

    #[test]
    fn sup_matches_gamma_oracle() {
        let m = MultiplierSymbol::identity(1).unwrap();
        let us: Vec<Vec<f64>> = [-7.0, -1.0, 0.0, 0.5, 3.0, 12.0].iter().map(|&u| vec![u]).collect();
        let s = sup_over_t(&m, &MultiIndex::new(vec![1]).unwrap(), &us).unwrap();
        for (u, v) in us.iter().zip(&s.values) {
            let g = gamma(Complex64::new(1.0, -u[0])).norm();
            assert!((v - 2.0 * g).abs() < 0.02 * g);
            // Envelope with constant C = 2, the value at u = 0.
            assert!(*v <= 2.0 * (1.0 + u[0].abs()) * g * (1.0 + 1e-9));
        }
    }

    fn oracle_integral(omega: f64, cutoff: f64) -> f64 {
        // Composite Simpson on |Γ(1−iu)|² = πu / sinh(πu).
        let f = |u: f64| {
            let g = if u == 0.0 { 1.0 } else { (PI * u / (PI * u).sinh()).sqrt() };
            2.0 * g * (omega * u.abs()).exp()
        };
        let n = 80_000;
        let h = 2.0 * cutoff / n as f64;
        let mut s = f(-cutoff) + f(cutoff);
        for i in 1..n {
            s += f(-cutoff + h * i as f64) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        s * h / 3.0
    }

    #[test]
    fn meda_verdicts() {
        let m = MultiplierSymbol::identity(1).unwrap();
        let g1 = MultiIndex::new(vec![1]).unwrap();
        let settings = MedaSettings { u_cutoff: 20.0, u_step: 0.2 };
        let fin = meda_condition(&m, &g1, Growth::Exponential { omega: 1.0 }, settings).unwrap();
        assert!(fin.finite);
        let want = oracle_integral(1.0, 20.0);
        assert!((fin.truncated - want).abs() < 0.05 * want);
        assert!(fin.estimate >= fin.truncated);
        let inf = meda_condition(&m, &g1, Growth::Exponential { omega: 1.6 }, settings).unwrap();
        assert!(!inf.finite && inf.estimate.is_infinite());
        let want = oracle_integral(1.6, 20.0);
        assert!((inf.truncated - want).abs() < 0.05 * want);
        let g2 = MultiIndex::new(vec![2]).unwrap();
        assert!(meda_condition(&m, &g2, Growth::Exponential { omega: 1.0 }, settings).unwrap().finite);
        assert!(meda_condition(&m, &g1, Growth::Polynomial { degree: 3.0 }, settings).unwrap().finite);
        assert!(meda_condition(&m, &g1, Growth::Exponential { omega: -1.0 }, settings).is_err());
    }

    #[test]
    fn meda_non_separable_budget() {
        let r = MultiplierSymbol::riesz(&MultiIndex::new(vec![1, 1]).unwrap(), 1).unwrap();
        let g = MultiIndex::new(vec![1, 1]).unwrap();
        let res = meda_condition(&r, &g, Growth::default(), MedaSettings::default());
        assert!(matches!(res, Err(Error::Budget(_))));
    }

    #[test]
    fn identity_check_gaussian() {
        let e = HermiteExpansion::basis(&MultiIndex::zero(1), 0).unwrap();
        let m = MultiplierSymbol::identity(1).unwrap();
        let alpha = MultiIndex::new(vec![1]).unwrap();
        let ts: Vec<Vec<f64>> = [0.2, 0.7, 1.5, 3.0].iter().map(|&t| vec![t]).collect();
        let xs: Vec<Vec<f64>> = [-1.5, 0.0, 0.8].iter().map(|&x| vec![x]).collect();
        let r = mellin_identity_check(&e, &m, &alpha, &ts, &xs, IdentitySettings::default()).unwrap();
        assert!(r.max_residual < 1e-4, "{}", r.max_residual);
        assert!((r.normalization + 1.0 / PI).abs() < 1e-15);

        let zero = HermiteExpansion::new(1, 0, ValueSpace::Real).unwrap();
        let r0 = mellin_identity_check(&zero, &m, &alpha, &ts, &xs, IdentitySettings::default()).unwrap();
        assert!(r0.points.iter().all(|p| p.lhs == c(0.0) && p.rhs == c(0.0)));
    }

    #[test]
    fn identity_check_two_dims() {
        let e = random(2, 3, 9);
        let m = MultiplierSymbol::sqrt_ratio(2).unwrap();
        let alpha = MultiIndex::new(vec![1, 2]).unwrap();
        let ts = vec![vec![0.5, 1.0], vec![1.3, 0.4]];
        let xs = vec![vec![0.3, -0.2], vec![-1.0, 1.1]];
        let r = mellin_identity_check(&e, &m, &alpha, &ts, &xs, IdentitySettings::default()).unwrap();
        assert!(r.max_residual < 1e-4, "{}", r.max_residual);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn diagonal_operators_commute(seed in 0u64..1000, t in 0.01f64..2.0, b in -3.0f64..3.0) {
            let e = random(2, 4, seed);
            let m = MultiplierSymbol::sqrt_ratio(2).unwrap();
            let a = heat_apply(&apply_multiplier(&e, &m).unwrap(), t).unwrap();
            let b1 = apply_multiplier(&heat_apply(&e, t).unwrap(), &m).unwrap();
            prop_assert!(a.max_abs_diff(&b1) < 1e-14);
            let p = poisson_apply(&imaginary_power(&e, &[b, -b]).unwrap(), t).unwrap();
            let q = imaginary_power(&poisson_apply(&e, t).unwrap(), &[b, -b]).unwrap();
            prop_assert!(p.max_abs_diff(&q) < 1e-14);
        }

        #[test]
        fn product_symbol_composes(seed in 0u64..1000, b in -2.0f64..2.0) {
            let e = random(1, 8, seed);
            let m1 = MultiplierSymbol::sqrt_ratio(1).unwrap();
            let m2 = MultiplierSymbol::imaginary_power(&[b]).unwrap();
            let both = apply_multiplier(&e, &m1.product(&m2).unwrap()).unwrap();
            let seq = apply_multiplier(&apply_multiplier(&e, &m2).unwrap(), &m1).unwrap();
            prop_assert!(both.max_abs_diff(&seq) < 1e-14);
        }
    }
}
