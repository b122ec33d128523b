//! Heat and Poisson semigroups of `H`, their time derivatives, fractional derivatives
//! and negative powers.

use crate::basis::MultiIndex;
use crate::error::{Error, Result};
use crate::expansion::HermiteExpansion;
use crate::special::{composite_gauss_legendre, factorial, gamma_real, trapezoid};
use num_complex::Complex64;
use std::f64::consts::PI;

/// Mehler kernel `W_t(x, y)` of `e^{-tH}`.
pub fn mehler_kernel(t: f64, x: &[f64], y: &[f64]) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::param(format!("heat time must be positive, got {t}")));
    }
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch { expected: x.len(), found: y.len() });
    }
    Ok(mehler_unchecked(t, x, y))
}

pub(crate) fn mehler_unchecked(t: f64, x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let r = (-2.0 * t).exp();
    let one_minus = -(-2.0 * t).exp_m1();
    let coth = (1.0 + r) / one_minus;
    let tanh = one_minus / (1.0 + r);
    let (mut dm, mut dp) = (0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        dm += (a - b) * (a - b);
        dp += (a + b) * (a + b);
    }
    // ln of π^{-n/2} (r / (1 - r²))^{n/2}
    let log_pref = -0.5 * n * PI.ln() + 0.5 * n * (-2.0 * t - one_minus.ln() - (1.0 + r).ln());
    (log_pref - 0.25 * (dm * coth + dp * tanh)).exp()
}

/// `c_k ↦ e^{-(2|k|+n)t} c_k`.
pub fn heat_apply(e: &HermiteExpansion, t: f64) -> Result<HermiteExpansion> {
    check_time(t)?;
    e.map_diagonal(|k| Complex64::new((-k.eigenvalue() * t).exp(), 0.0))
}

/// `c_k ↦ e^{-t√(2|k|+n)} c_k`.
pub fn poisson_apply(e: &HermiteExpansion, t: f64) -> Result<HermiteExpansion> {
    check_time(t)?;
    e.map_diagonal(|k| Complex64::new((-t * k.eigenvalue().sqrt()).exp(), 0.0))
}

/// `∂_t^k P_t`: `c_j ↦ (−√λ_j)^k e^{-t√λ_j} c_j`.
pub fn poisson_time_derivative(e: &HermiteExpansion, order: usize, t: f64) -> Result<HermiteExpansion> {
    if order == 0 {
        return Err(Error::param("derivative order must be at least 1; use poisson_apply for order 0"));
    }
    if !(t > 0.0) {
        return Err(Error::param(format!("time must be positive, got {t}")));
    }
    e.map_diagonal(|k| {
        let mu = k.eigenvalue().sqrt();
        Complex64::new((-mu).powi(order as i32) * (-t * mu).exp(), 0.0)
    })
}

/// `H^{-β}`: `c_k ↦ (2|k|+n)^{-β} c_k`.
pub fn negative_power(e: &HermiteExpansion, beta: f64) -> Result<HermiteExpansion> {
    if !(beta > 0.0) {
        return Err(Error::param(format!("β must be positive, got {beta}")));
    }
    e.map_diagonal(|k| Complex64::new(k.eigenvalue().powf(-beta), 0.0))
}

/// `H^{s}` for any real `s` (the inverse of [`negative_power`] when `s = β`).
pub fn hermite_power(e: &HermiteExpansion, s: f64) -> Result<HermiteExpansion> {
    e.map_diagonal(|k| Complex64::new(k.eigenvalue().powf(s), 0.0))
}

fn check_time(t: f64) -> Result<()> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::param(format!("time must be finite and non-negative, got {t}")));
    }
    Ok(())
}

/// Trapezoid rule in `v = ln u` for the subordination integral
/// `e^{-t√λ} = ∫₀^∞ t (2√π)^{-1} u^{-3/2} e^{-t²/4u} e^{-λu} du`.
#[derive(Clone, Debug)]
pub struct SubordinationQuadrature {
    u: Vec<f64>,
    /// Trapezoid weight in `v`, times the Jacobian `u`.
    w: Vec<f64>,
    pub u_min: f64,
    pub u_max: f64,
}

impl Default for SubordinationQuadrature {
    fn default() -> Self {
        Self::new(-16.0, 8.0, 600)
    }
}

impl SubordinationQuadrature {
    pub fn new(v_min: f64, v_max: f64, nodes: usize) -> Self {
        let (v, w) = trapezoid(v_min, v_max, nodes);
        let u: Vec<f64> = v.iter().map(|x| x.exp()).collect();
        let w = w.iter().zip(&u).map(|(a, b)| a * b).collect();
        SubordinationQuadrature { u, w, u_min: v_min.exp(), u_max: v_max.exp() }
    }

    pub fn nodes(&self) -> &[f64] {
        &self.u
    }

    /// Weights `ω_i(t)` with `P_t ≈ Σ ω_i(t) W_{u_i}`; all positive.
    pub fn weights(&self, t: f64) -> Vec<f64> {
        let c = t / (2.0 * PI.sqrt());
        self.u
            .iter()
            .zip(&self.w)
            .map(|(&u, &w)| w * c * u.powf(-1.5) * (-t * t / (4.0 * u)).exp())
            .collect()
    }

    /// `Σ ω_i(t) e^{-λ u_i}`, the subordinated approximation of `e^{-t√λ}`.
    pub fn poisson_factor(&self, t: f64, lambda: f64) -> f64 {
        self.weights(t).iter().zip(&self.u).map(|(w, u)| w * (-lambda * u).exp()).sum()
    }

    /// Poisson semigroup applied through the heat semigroup.
    pub fn poisson_apply(&self, e: &HermiteExpansion, t: f64) -> Result<HermiteExpansion> {
        if !(t > 0.0) {
            return Err(Error::param(format!("time must be positive, got {t}")));
        }
        let w = self.weights(t);
        e.map_diagonal(|k| {
            let lam = k.eigenvalue();
            Complex64::new(w.iter().zip(&self.u).map(|(w, u)| w * (-lam * u).exp()).sum(), 0.0)
        })
    }

    /// Poisson kernel `P_s(v, z)` on ℝ by subordination of the Mehler kernel.
    pub fn poisson_kernel(&self, s: f64, v: f64, z: f64) -> f64 {
        self.weights(s)
            .iter()
            .zip(&self.u)
            .map(|(w, &u)| w * mehler_unchecked(u, &[v], &[z]))
            .sum()
    }

    /// `∂_s^l P_s(v, z)` on ℝ, differentiating under the subordination integral:
    ///
    /// `∂_s^l P_s = −π^{-1/2} ∫ u^{-1/2} ∂_s^{l+1}(e^{-s²/4u}) W_u du` with
    /// `∂_s^N e^{-s²/4u} = (2√u)^{-N} Σ_k (−1)^{N+k} E_{N,k} w^{N−2k} e^{-w²}`, `w = s/(2√u)`,
    /// `E_{N,k} = 2^{N−2k} N! / (k! (N−2k)!)`.
    pub fn poisson_kernel_derivative(&self, l: usize, s: f64, v: f64, z: f64) -> Result<f64> {
        if l == 0 || l > 4 {
            return Err(Error::param(format!("kernel derivatives are available for 1 ≤ l ≤ 4, got {l}")));
        }
        if !(s > 0.0) {
            return Err(Error::param(format!("time must be positive, got {s}")));
        }
        let n = l + 1;
        let coeffs = faa_di_bruno_coefficients(n);
        let mut acc = 0.0;
        for (&u, &wq) in self.u.iter().zip(&self.w) {
            let sq = u.sqrt();
            let w = s / (2.0 * sq);
            let poly: f64 = coeffs
                .iter()
                .enumerate()
                .map(|(k, &c)| c * w.powi((n - 2 * k) as i32))
                .sum();
            let d = poly * (-w * w).exp() / (2.0 * sq).powi(n as i32);
            acc += wq * d / sq * mehler_unchecked(u, &[v], &[z]);
        }
        Ok(-acc / PI.sqrt())
    }
}

/// Signed coefficients `(−1)^{N+k} E_{N,k}` for `k = 0, …, ⌊N/2⌋`, so that
/// `∂_w^N e^{-w²} = Σ_k (−1)^{N+k} E_{N,k} w^{N−2k} e^{-w²}`.
pub fn faa_di_bruno_coefficients(n: usize) -> Vec<f64> {
    (0..=n / 2)
        .map(|k| {
            let e = 2f64.powi((n - 2 * k) as i32) * factorial(n) / (factorial(k) * factorial(n - 2 * k));
            if (n + k) % 2 == 0 { e } else { -e }
        })
        .collect()
}

/// Result of [`kernel_decay_check`].
#[derive(Clone, Debug, PartialEq)]
pub struct DecayReport {
    /// Smallest `C` with `|∂_s^l P_s(v,z)| ≤ C (s+|v−z|)^{−1−l}` on the samples.
    pub constant: f64,
    /// Sample `(s, v, z)` attaining it.
    pub worst: (f64, f64, f64),
    /// `|∂_s^l P_s(v,z)| (s+|v−z|)^{1+l}` per sample.
    pub ratios: Vec<f64>,
}

/// Smallest admissible constant in `|∂_s^l P_s(v,z)| ≤ C/(s+|v−z|)^{1+l}` over the samples.
pub fn kernel_decay_check(l: usize, samples: &[(f64, f64, f64)]) -> Result<DecayReport> {
    let q = SubordinationQuadrature::default();
    let mut ratios = Vec::with_capacity(samples.len());
    let mut best = (0.0, (f64::NAN, f64::NAN, f64::NAN));
    for &(s, v, z) in samples {
        let d = q.poisson_kernel_derivative(l, s, v, z)?;
        let r = d.abs() * (s + (v - z).abs()).powi(l as i32 + 1);
        if !r.is_finite() {
            return Err(Error::NonFinite(format!("kernel derivative at s={s}, v={v}, z={z}")));
        }
        if r > best.0 || best.1 .0.is_nan() {
            best = (r, (s, v, z));
        }
        ratios.push(r);
    }
    Ok(DecayReport { constant: best.0, worst: best.1, ratios })
}

/// Order `α > 0` of a fractional derivative with `m − 1 ≤ α < m`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FractionalOrder {
    alpha: f64,
    m: u32,
}

impl FractionalOrder {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(Error::param(format!("fractional order must be positive, got {alpha}")));
        }
        Ok(FractionalOrder { alpha, m: alpha.floor() as u32 + 1 })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn is_integer(&self) -> bool {
        self.alpha.fract() == 0.0
    }
}

/// `∂_t^α e^{-tμ}` from the integral definition
/// `e^{-iπ(m−α)}/Γ(m−α) ∫₀^∞ ∂^m e^{-(t+s)μ} s^{m−α−1} ds`.
///
/// After `σ = sμ` the integral is `(−μ)^m e^{-tμ} μ^{α−m} ∫₀^∞ e^{-σ} σ^{a−1} dσ` with
/// `a = m − α`; it is split at `σ = 1`, the piece on `[0, 1]` is taken in `ρ = σ^a` to remove
/// the endpoint singularity. Two resolutions are compared and a disagreement above `1e-8`
/// is reported as non-convergence.
pub fn fractional_derivative_scalar(mu: f64, order: FractionalOrder, t: f64) -> Result<Complex64> {
    if !(t > 0.0) {
        return Err(Error::param(format!("time must be positive, got {t}")));
    }
    if !(mu > 0.0) {
        return Err(Error::param(format!("frequency must be positive, got {mu}")));
    }
    let m = order.m as i32;
    let damp = (-t * mu).exp();
    if order.is_integer() {
        // e^{-iπ·1}/Γ(1) ∫ (−μ)^{α+1} e^{-(t+s)μ} ds = (−μ)^α e^{-tμ}
        return Ok(Complex64::new((-mu).powi(order.alpha as i32) * damp, 0.0));
    }
    let a = m as f64 - order.alpha;
    let coarse = gamma_integral(a, 12);
    let fine = gamma_integral(a, 20);
    let residual = ((fine - coarse) / fine).abs();
    if residual > 1e-8 {
        return Err(Error::NonConvergence { what: "fractional derivative integral".into(), residual });
    }
    let phase = Complex64::from_polar(1.0, -PI * a);
    let scale = (-mu).powi(m) * damp * mu.powf(-a) * fine / gamma_real(a);
    Ok(phase * scale)
}

/// `∫₀^∞ e^{-σ} σ^{a−1} dσ` for `0 < a < 1` by panel quadrature.
fn gamma_integral(a: f64, order: usize) -> f64 {
    // [0, 1] in ρ = σ^a: (1/a) ∫₀¹ exp(−ρ^{1/a}) dρ, with panels graded toward both ends
    // (the integrand has a boundary layer of width ~a at ρ = 1)
    let mut breaks: Vec<f64> = vec![0.0];
    breaks.extend((2..=40).rev().map(|k| 2f64.powi(-k)));
    breaks.extend((1..=30).map(|k| 1.0 - 2f64.powi(-k)));
    breaks.push(1.0);
    let (x, w) = composite_gauss_legendre(&breaks, order);
    let head: f64 = x.iter().zip(&w).map(|(r, w)| w * (-r.powf(1.0 / a)).exp()).sum::<f64>() / a;
    let tail_breaks: Vec<f64> = (1..=50).map(|k| k as f64).collect();
    let (x, w) = composite_gauss_legendre(&tail_breaks, order);
    let tail: f64 = x.iter().zip(&w).map(|(s, w)| w * (-s).exp() * s.powf(a - 1.0)).sum();
    head + tail
}

/// `c_k ↦ t^α ∂_t^α e^{-t√λ_k}|_{coefficient} c_k`.
pub fn fractional_g_operator(e: &HermiteExpansion, order: FractionalOrder, t: f64) -> Result<HermiteExpansion> {
    // one quadrature per distinct eigenvalue
    let mut cache: std::collections::BTreeMap<usize, Complex64> = Default::default();
    for k in e.iter().map(|(k, _)| k) {
        let key = 2 * k.order() + k.dim();
        if let std::collections::btree_map::Entry::Vacant(slot) = cache.entry(key) {
            slot.insert(fractional_derivative_scalar((key as f64).sqrt(), order, t)? * t.powf(order.alpha));
        }
    }
    e.map_diagonal(|k: &MultiIndex| cache[&(2 * k.order() + k.dim())])
}
