//! Finite-dimensional value spaces for coefficients and function values.

use crate::error::{Error, Result};
use num_complex::Complex64;
use std::fmt;
use std::str::FromStr;

/// Codomain of an expansion: real or complex scalars, or `ℓ^q_d`.
///
/// Values are always stored as `Vec<Complex64>` of length [`ValueSpace::width`], so a real
/// scalar is a length-one vector whose imaginary part is zero.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ValueSpace {
    Real,
    Complex,
    Lq { q: f64, d: usize },
}

impl ValueSpace {
    pub fn lq(q: f64, d: usize) -> Result<Self> {
        if !(q >= 1.0) || !q.is_finite() {
            return Err(Error::param(format!("ℓ^q exponent must be finite and ≥ 1, got {q}")));
        }
        if d == 0 {
            return Err(Error::param("ℓ^q dimension must be positive"));
        }
        Ok(ValueSpace::Lq { q, d })
    }

    /// Number of components per value.
    pub fn width(&self) -> usize {
        match self {
            ValueSpace::Real | ValueSpace::Complex => 1,
            ValueSpace::Lq { d, .. } => *d,
        }
    }

    pub fn is_scalar(&self) -> bool {
        !matches!(self, ValueSpace::Lq { .. })
    }

    /// True when the norm comes from an inner product (scalars and `q = 2`).
    pub fn is_hilbert(&self) -> bool {
        match self {
            ValueSpace::Lq { q, .. } => *q == 2.0,
            _ => true,
        }
    }

    pub fn norm(&self, v: &[Complex64]) -> f64 {
        match self {
            ValueSpace::Real | ValueSpace::Complex => v.first().map_or(0.0, |z| z.norm()),
            ValueSpace::Lq { q, .. } => lq_norm(*q, v),
        }
    }

    /// Zero value of the right width.
    pub fn zero(&self) -> Vec<Complex64> {
        vec![Complex64::new(0.0, 0.0); self.width()]
    }

    pub(crate) fn check_width(&self, v: &[Complex64]) -> Result<()> {
        if v.len() != self.width() {
            return Err(Error::DimensionMismatch { expected: self.width(), found: v.len() });
        }
        Ok(())
    }
}

pub(crate) fn lq_norm(q: f64, v: &[Complex64]) -> f64 {
    if q == 2.0 {
        return v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    }
    if q == 1.0 {
        return v.iter().map(|z| z.norm()).sum();
    }
    // Scale by the largest entry so that |z|^q cannot overflow.
    let m = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if m == 0.0 {
        return 0.0;
    }
    m * v.iter().map(|z| (z.norm() / m).powf(q)).sum::<f64>().powf(1.0 / q)
}

impl fmt::Display for ValueSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ValueSpace::Real => write!(f, "scalar"),
            ValueSpace::Complex => write!(f, "complex"),
            ValueSpace::Lq { q, d } => write!(f, "lq:{q}:{d}"),
        }
    }
}

impl FromStr for ValueSpace {
    type Err = Error;

    /// Accepts `scalar`, `real`, `complex` or `lq:<q>:<d>`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "scalar" | "real" => return Ok(ValueSpace::Real),
            "complex" => return Ok(ValueSpace::Complex),
            _ => {}
        }
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() == 3 && parts[0] == "lq" {
            let q: f64 = parts[1]
                .parse()
                .map_err(|_| Error::Validation(format!("bad ℓ^q exponent in {s:?}")))?;
            let d: usize = parts[2]
                .parse()
                .map_err(|_| Error::Validation(format!("bad ℓ^q dimension in {s:?}")))?;
            return ValueSpace::lq(q, d);
        }
        Err(Error::Validation(format!("unknown value space {s:?}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn scalar_norms() {
        assert_eq!(ValueSpace::Real.norm(&[c(-3.0, 0.0)]), 3.0);
        assert_eq!(ValueSpace::Complex.norm(&[c(3.0, 4.0)]), 5.0);
    }

    #[test]
    fn lq_examples() {
        let v = [c(3.0, 0.0), c(0.0, -4.0)];
        assert_eq!(ValueSpace::lq(2.0, 2).unwrap().norm(&v), 5.0);
        assert_eq!(ValueSpace::lq(1.0, 2).unwrap().norm(&v), 7.0);
        let n3 = ValueSpace::lq(3.0, 2).unwrap().norm(&v);
        assert!((n3 - 91f64.cbrt()).abs() < 1e-13);
    }

    #[test]
    fn parse_round_trip() {
        for s in ["scalar", "complex", "lq:3:4", "lq:1.5:2"] {
            let v: ValueSpace = s.parse().unwrap();
            assert_eq!(v.to_string().parse::<ValueSpace>().unwrap(), v);
        }
        assert!("lq:0.5:2".parse::<ValueSpace>().is_err());
        assert!("lq:2:0".parse::<ValueSpace>().is_err());
        assert!("banach".parse::<ValueSpace>().is_err());
    }

    fn vec_strategy(d: usize) -> impl Strategy<Value = Vec<Complex64>> {
        prop::collection::vec((-1e3..1e3f64, -1e3..1e3f64), d)
            .prop_map(|v| v.into_iter().map(|(a, b)| c(a, b)).collect())
    }

    proptest! {
        #[test]
        fn q2_is_euclidean(v in vec_strategy(5)) {
            let s = ValueSpace::lq(2.0, 5).unwrap();
            let euclid: f64 = v.iter().map(|z| z.re * z.re + z.im * z.im).sum::<f64>().sqrt();
            prop_assert!((s.norm(&v) - euclid).abs() <= 1e-15 * (1.0 + euclid) * 4.0);
        }

        #[test]
        fn homogeneous_and_subadditive(
            q in 1.0..6.0f64,
            a in vec_strategy(4),
            b in vec_strategy(4),
            lambda in -50.0..50.0f64,
        ) {
            let s = ValueSpace::lq(q, 4).unwrap();
            let scaled: Vec<Complex64> = a.iter().map(|z| z * lambda).collect();
            let na = s.norm(&a);
            prop_assert!((s.norm(&scaled) - lambda.abs() * na).abs() <= 1e-12 * (1.0 + lambda.abs() * na));
            let sum: Vec<Complex64> = a.iter().zip(&b).map(|(x, y)| x + y).collect();
            prop_assert!(s.norm(&sum) <= na + s.norm(&b) + 1e-9);
        }
    }
}
