//! Gamma function on the complex plane and the quadrature rules shared by the
//! other modules.

use num_complex::Complex64;
use std::f64::consts::PI;

// Lanczos approximation, g = 7, n = 9 (Godfrey's coefficients).
const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEF: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Principal branch of `ln Γ(z)`.
///
/// Uses the Lanczos rational approximation on `Re z ≥ 1/2` (relative error of
/// `Γ` below `1e-13` there) and the reflection formula elsewhere.
pub fn ln_gamma(z: Complex64) -> Complex64 {
    if z.re < 0.5 {
        // Γ(z) Γ(1 - z) = π / sin(πz)
        let s = (Complex64::new(PI, 0.0) * z).sin();
        return Complex64::new(PI.ln(), 0.0) - s.ln() - ln_gamma(Complex64::new(1.0, 0.0) - z);
    }
    let z = z - 1.0;
    let mut x = Complex64::new(LANCZOS_COEF[0], 0.0);
    for (i, &c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        x += c / (z + i as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    LN_SQRT_2PI + (z + 0.5) * t.ln() - t + x.ln()
}

/// `Γ(z)` for complex `z` away from the poles.
pub fn gamma(z: Complex64) -> Complex64 {
    if z.re < 0.5 {
        let s = (Complex64::new(PI, 0.0) * z).sin();
        return PI / (s * gamma(Complex64::new(1.0, 0.0) - z));
    }
    ln_gamma(z).exp()
}

/// `Γ(x)` for real `x`.
pub fn gamma_real(x: f64) -> f64 {
    gamma(Complex64::new(x, 0.0)).re
}

/// `ln |Γ(z)|`; stays finite where `|Γ|` itself under- or overflows.
pub fn ln_abs_gamma(z: Complex64) -> f64 {
    ln_gamma(z).re
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "Gauss–Legendre rule needs at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d.is_finite() {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Composite Gauss–Legendre rule over the given breakpoints with `order` nodes per panel.
pub fn composite_gauss_legendre(breaks: &[f64], order: usize) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(order);
    let mut nodes = Vec::with_capacity((breaks.len() - 1) * order);
    let mut weights = Vec::with_capacity(nodes.capacity());
    for pair in breaks.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        for (xi, wi) in x.iter().zip(&w) {
            nodes.push(mid + half * xi);
            weights.push(half * wi);
        }
    }
    (nodes, weights)
}

/// Trapezoid rule with `n` equispaced nodes on `[a, b]`.
pub fn trapezoid(a: f64, b: f64, n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 2);
    let h = (b - a) / (n - 1) as f64;
    let nodes: Vec<f64> = (0..n).map(|i| a + h * i as f64).collect();
    let mut weights = vec![h; n];
    weights[0] *= 0.5;
    weights[n - 1] *= 0.5;
    (nodes, weights)
}

pub(crate) fn factorial(n: usize) -> f64 {
    (1..=n).fold(1.0, |acc, k| acc * k as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn gamma_at_integers_and_half() {
        let mut f = 1.0;
        for n in 1..20 {
            assert_relative_eq!(gamma_real(n as f64), f, max_relative = 1e-13);
            f *= n as f64;
        }
        assert_relative_eq!(gamma_real(0.5), PI.sqrt(), max_relative = 1e-13);
        assert_relative_eq!(gamma_real(-0.5), -2.0 * PI.sqrt(), max_relative = 1e-13);
    }

    #[test]
    fn gamma_matches_statrs_on_reals() {
        for i in 1..200 {
            let x = 0.05 * i as f64;
            let reference = statrs::function::gamma::gamma(x);
            assert_relative_eq!(gamma_real(x), reference, max_relative = 1e-12);
        }
    }

    #[test]
    fn gamma_modulus_on_vertical_line() {
        // |Γ(1 + iy)|² = πy / sinh(πy)
        for i in 1..=80 {
            let y = 0.5 * i as f64;
            let exact_ln = 0.5 * (PI * y).ln() - 0.5 * ((PI * y).exp() * 0.5 * (1.0 - (-2.0 * PI * y).exp())).ln();
            let got = ln_abs_gamma(Complex64::new(1.0, y));
            assert!((got - exact_ln).abs() < 1e-12, "y={y}: {got} vs {exact_ln}");
            let got_neg = ln_abs_gamma(Complex64::new(1.0, -y));
            assert!((got_neg - exact_ln).abs() < 1e-12);
        }
    }

    #[test]
    fn gamma_recurrence_complex() {
        for &(re, im) in &[(0.3, 2.0), (1.7, -5.0), (2.5, 12.0), (-1.3, 0.7), (4.0, 30.0)] {
            let z = Complex64::new(re, im);
            let lhs = gamma(z + 1.0);
            let rhs = z * gamma(z);
            assert!((lhs - rhs).norm() / rhs.norm() < 1e-12);
        }
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        for n in [1usize, 2, 5, 12, 16, 20] {
            let (x, w) = gauss_legendre(n);
            for deg in 0..(2 * n) {
                let got: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi.powi(deg as i32)).sum();
                let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
                assert!((got - exact).abs() < 1e-13, "n={n} deg={deg}");
            }
        }
    }

    #[test]
    fn trapezoid_weights_sum_to_length() {
        let (_, w) = trapezoid(-2.0, 3.0, 101);
        assert_relative_eq!(w.iter().sum::<f64>(), 5.0, max_relative = 1e-14);
    }
}
