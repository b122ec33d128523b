//! Hermite functions `h_m` on ℝ and their tensor products `h_k` on ℝⁿ.

use crate::error::{Error, Result};
use std::fmt;

/// A multi-index `k = (k_1, …, k_n) ∈ ℕⁿ`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiIndex(Vec<usize>);

impl MultiIndex {
    pub fn new(entries: Vec<usize>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::param("multi-index must have dimension at least 1"));
        }
        Ok(MultiIndex(entries))
    }

    pub fn zero(dim: usize) -> Self {
        MultiIndex(vec![0; dim.max(1)])
    }

    /// The unit multi-index `e_axis` scaled by `m`.
    pub fn unit(dim: usize, axis: usize, m: usize) -> Self {
        let mut v = vec![0; dim];
        v[axis] = m;
        MultiIndex(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn entries(&self) -> &[usize] {
        &self.0
    }

    pub fn get(&self, axis: usize) -> usize {
        self.0[axis]
    }

    /// `|k| = k_1 + ⋯ + k_n`
    pub fn order(&self) -> usize {
        self.0.iter().sum()
    }

    /// Eigenvalue `2|k| + n` of the Hermite operator on `h_k`.
    pub fn eigenvalue(&self) -> f64 {
        (2 * self.order() + self.dim()) as f64
    }

    /// Per-axis eigenvalues `λ_{k_j} = 2k_j + 1`.
    pub fn lattice_point(&self) -> Vec<f64> {
        self.0.iter().map(|&k| (2 * k + 1) as f64).collect()
    }

    pub fn max_entry(&self) -> usize {
        self.0.iter().copied().max().unwrap_or(0)
    }

    pub(crate) fn with_entry(&self, axis: usize, value: usize) -> Self {
        let mut v = self.0.clone();
        v[axis] = value;
        MultiIndex(v)
    }

    /// All multi-indices of dimension `dim` with every entry `≤ cap`, in lexicographic order.
    pub fn all_up_to(dim: usize, cap: usize) -> Vec<MultiIndex> {
        let side = cap + 1;
        let total = side.pow(dim as u32);
        (0..total)
            .map(|mut flat| {
                let mut v = vec![0; dim];
                for j in (0..dim).rev() {
                    v[j] = flat % side;
                    flat /= side;
                }
                MultiIndex(v)
            })
            .collect()
    }

    /// Row-major flat position inside a dense `(cap+1)^n` table.
    pub(crate) fn flat(&self, cap: usize) -> usize {
        self.0.iter().fold(0, |acc, &k| acc * (cap + 1) + k)
    }
}

impl From<&[usize]> for MultiIndex {
    fn from(v: &[usize]) -> Self {
        MultiIndex(v.to_vec())
    }
}

impl<const N: usize> From<[usize; N]> for MultiIndex {
    fn from(v: [usize; N]) -> Self {
        MultiIndex(v.to_vec())
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, k) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{k}")?;
        }
        write!(f, ")")
    }
}

const PI_POW_NEG_QUARTER: f64 = 0.751_125_544_464_942_5;
const RESCALE: f64 = 1e100;

/// Values `h_0(u), …, h_M(u)` of the normalized Hermite functions.
///
/// Runs the three-term recurrence
/// `h_{m+1} = u √(2/(m+1)) h_m − √(m/(m+1)) h_{m−1}` on the polynomial part only,
/// carrying a separate logarithmic scale so that neither the Gaussian factor nor the
/// polynomial part under/overflows before they are recombined.
pub fn hermite_table(max_degree: usize, u: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(max_degree + 1);
    let gauss = -0.5 * u * u;
    let mut log_scale = 0.0_f64;
    let mut prev = 0.0_f64;
    let mut cur = PI_POW_NEG_QUARTER;
    out.push(cur * (log_scale + gauss).exp());
    for m in 0..max_degree {
        let mf = m as f64;
        let next = u * (2.0 / (mf + 1.0)).sqrt() * cur - (mf / (mf + 1.0)).sqrt() * prev;
        prev = cur;
        cur = next;
        if cur.abs() > RESCALE {
            cur /= RESCALE;
            prev /= RESCALE;
            log_scale += RESCALE.ln();
        }
        out.push(cur * (log_scale + gauss).exp());
    }
    out
}

/// `h_m(u)`.
pub fn eval_hermite(m: usize, u: f64) -> f64 {
    hermite_table(m, u)[m]
}

/// `h_k(x) = ∏_j h_{k_j}(x_j)`.
pub fn eval_hermite_multi(k: &MultiIndex, x: &[f64]) -> Result<f64> {
    if k.dim() != x.len() {
        return Err(Error::DimensionMismatch { expected: k.dim(), found: x.len() });
    }
    Ok(k.entries().iter().zip(x).map(|(&kj, &xj)| eval_hermite(kj, xj)).product())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    /// Physicists' Hermite polynomial coefficients from `H_{m+1} = 2u H_m − 2m H_{m−1}`,
    /// kept as exact integers.
    fn hermite_poly_coeffs(m: usize) -> Vec<i128> {
        let mut h0 = vec![1i128];
        if m == 0 {
            return h0;
        }
        let mut h1 = vec![0i128, 2];
        for k in 1..m {
            let mut next = vec![0i128; k + 2];
            for (i, c) in h1.iter().enumerate() {
                next[i + 1] += 2 * c;
            }
            for (i, c) in h0.iter().enumerate() {
                next[i] -= 2 * k as i128 * c;
            }
            h0 = h1;
            h1 = next;
        }
        h1
    }

    fn brute_force(m: usize, u: f64) -> f64 {
        let c = hermite_poly_coeffs(m);
        let p: f64 = c.iter().enumerate().map(|(i, &ci)| ci as f64 * u.powi(i as i32)).sum();
        let mut fact = 1.0;
        for i in 1..=m {
            fact *= i as f64;
        }
        p * (-u * u / 2.0).exp() / (2f64.powi(m as i32) * fact * PI.sqrt()).sqrt()
    }

    #[test]
    fn h0_at_origin() {
        assert_relative_eq!(eval_hermite(0, 0.0), PI.powf(-0.25), max_relative = 1e-15);
        assert_relative_eq!(eval_hermite(0, 0.0), 0.751_125_5, epsilon = 1e-7);
    }

    #[test]
    fn h1_is_odd() {
        assert_eq!(eval_hermite(1, 0.0), 0.0);
        for u in [0.3, 1.1, 2.7] {
            assert_relative_eq!(eval_hermite(1, -u), -eval_hermite(1, u), max_relative = 1e-15);
        }
    }

    #[test]
    fn degree_five_matches_polynomial_oracle() {
        // H_5(u) = 32u^5 − 160u^3 + 120u
        assert_eq!(hermite_poly_coeffs(5), vec![0, 120, 0, -160, 0, 32]);
        let expected = brute_force(5, 2.0);
        let direct = (32.0 * 32.0 - 160.0 * 8.0 + 240.0) * (-2.0f64).exp()
            / (32.0 * 120.0 * PI.sqrt()).sqrt();
        assert_relative_eq!(expected, direct, max_relative = 1e-14);
        assert_relative_eq!(eval_hermite(5, 2.0), expected, max_relative = 1e-13);
    }

    #[test]
    fn recurrence_matches_polynomial_oracle_low_degree() {
        for m in 0..20 {
            for &u in &[-3.0, -1.2, 0.0, 0.4, 2.2, 4.5] {
                let want = brute_force(m, u);
                let got = eval_hermite(m, u);
                assert!((got - want).abs() < 1e-12 * (1.0 + want.abs()), "m={m} u={u}");
            }
        }
    }

    #[test]
    fn multivariate_products() {
        let k = MultiIndex::from([0, 0]);
        assert_relative_eq!(eval_hermite_multi(&k, &[0.0, 0.0]).unwrap(), 1.0 / PI.sqrt(), max_relative = 1e-15);
        let k = MultiIndex::from([1, 0]);
        assert_eq!(eval_hermite_multi(&k, &[0.0, 3.3]).unwrap(), 0.0);
        let k = MultiIndex::from([2, 3]);
        assert_eq!(
            eval_hermite_multi(&k, &[1.0, -1.0]).unwrap(),
            eval_hermite(2, 1.0) * eval_hermite(3, -1.0)
        );
        assert!(matches!(
            eval_hermite_multi(&k, &[1.0]),
            Err(Error::DimensionMismatch { expected: 2, found: 1 })
        ));
    }

    #[test]
    fn no_overflow_at_high_degree() {
        for &u in &[-40.0, -25.0, -3.0, 0.0, 7.5, 31.9, 40.0] {
            let t = hermite_table(512, u);
            assert!(t.iter().all(|v| v.is_finite()), "u={u}");
        }
    }

    #[test]
    fn uniformly_bounded() {
        let l = (2.0 * 256.0 + 1.0f64).sqrt() + 4.0;
        let mut u = -l;
        while u <= l {
            let t = hermite_table(256, u);
            assert!(t.iter().all(|v| v.is_finite() && v.abs() <= 1.1), "u={u}");
            u += 0.173;
        }
    }

    #[test]
    fn index_helpers() {
        let k = MultiIndex::from([2, 3]);
        assert_eq!(k.order(), 5);
        assert_eq!(k.eigenvalue(), 12.0);
        assert_eq!(k.lattice_point(), vec![5.0, 7.0]);
        assert_eq!(k.flat(4), 13);
        let all = MultiIndex::all_up_to(2, 2);
        assert_eq!(all.len(), 9);
        assert_eq!(all[5], MultiIndex::from([1, 2]));
        assert_eq!(all[5].flat(2), 5);
        assert!(MultiIndex::new(vec![]).is_err());
    }
}
