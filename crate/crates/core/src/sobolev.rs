//! Ladder operators `A_{±j}`, index shifts, Hermite–Riesz transforms, the operators `τ_ℓ`, and
//! the Sobolev, potential and Triebel–Lizorkin norms built from them.
//!
//! `A_j = ∂_j + x_j` lowers and `A_{−j} = −∂_j + x_j` raises the degree on axis `j`:
//! `A_j h_k = √(2k_j) h_{k−e_j}` and `A_{−j} h_k = √(2(k_j+1)) h_{k+e_j}`.

use crate::basis::MultiIndex;
use crate::error::{Error, Result};
use crate::expansion::HermiteExpansion;
use crate::grid::{check_p, SpatialGrid};
use crate::littlewood_paley::{pointwise_gamma_norms, summarize, GammaSettings, Profile, RatioSummary, TimeGrid, TimeStructure, DEGENERATE_NORM};
use crate::semigroup::hermite_power;
use num_complex::Complex64;
use rayon::prelude::*;
use std::fmt;

/// `A_j` for `j > 0`, `A_{−|j|}` for `j < 0`; axes are numbered from 1.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SignedAxis(i32);

impl SignedAxis {
    pub fn new(j: i32, dim: usize) -> Result<Self> {
        if j == 0 || j.unsigned_abs() as usize > dim {
            return Err(Error::param(format!("signed axis must satisfy 1 ≤ |j| ≤ {dim}, got {j}")));
        }
        Ok(SignedAxis(j))
    }

    /// `A_{axis+1}` (zero-based axis).
    pub fn lowering(axis: usize) -> Self {
        SignedAxis(axis as i32 + 1)
    }

    /// `A_{−(axis+1)}` (zero-based axis).
    pub fn raising(axis: usize) -> Self {
        SignedAxis(-(axis as i32 + 1))
    }

    /// Zero-based axis.
    pub fn axis(&self) -> usize {
        self.0.unsigned_abs() as usize - 1
    }

    pub fn is_raising(&self) -> bool {
        self.0 < 0
    }

    pub fn value(&self) -> i32 {
        self.0
    }
}

impl fmt::Display for SignedAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "A{}", self.0)
    }
}

fn check_axis(e: &HermiteExpansion, j: SignedAxis) -> Result<()> {
    if j.axis() >= e.dim() {
        return Err(Error::DimensionMismatch { expected: e.dim(), found: j.axis() + 1 });
    }
    Ok(())
}

/// Applies one ladder operator. Raising past the degree cap grows the cap.
pub fn ladder_apply(e: &HermiteExpansion, j: SignedAxis) -> Result<HermiteExpansion> {
    check_axis(e, j)?;
    let a = j.axis();
    let mut out = e.empty_like();
    for (k, v) in e.iter() {
        let kj = k.get(a);
        let (target, factor) = if j.is_raising() {
            (kj + 1, (2.0 * (kj + 1) as f64).sqrt())
        } else if kj == 0 {
            continue;
        } else {
            (kj - 1, (2.0 * kj as f64).sqrt())
        };
        out.insert_growing(k.with_entry(a, target), v.iter().map(|z| z * factor).collect());
    }
    Ok(out)
}

/// Applies `A_{j_1} ⋯ A_{j_m}` (the rightmost letter acts first).
pub fn apply_word(e: &HermiteExpansion, word: &[SignedAxis]) -> Result<HermiteExpansion> {
    word.iter().rev().try_fold(e.clone(), |acc, &j| ladder_apply(&acc, j))
}

fn check_split(e: &HermiteExpansion, m: &MultiIndex, split: usize) -> Result<()> {
    if m.dim() != e.dim() {
        return Err(Error::DimensionMismatch { expected: e.dim(), found: m.dim() });
    }
    if split > e.dim() {
        return Err(Error::param(format!("split index {split} exceeds dimension {}", e.dim())));
    }
    Ok(())
}

/// Target of `k` under the split shift, or `None` when a lowered entry would go negative.
fn shifted(k: &MultiIndex, m: &MultiIndex, split: usize) -> Option<MultiIndex> {
    let mut out = Vec::with_capacity(k.dim());
    for (l, (&kl, &ml)) in k.entries().iter().zip(m.entries()).enumerate() {
        if l < split {
            out.push(kl.checked_sub(ml)?);
        } else {
            out.push(kl + ml);
        }
    }
    MultiIndex::new(out).ok()
}

/// Lowers the first `split` axes by `m` (dropping indices that would go negative) and
/// raises the remaining ones; coefficient values are unchanged.
pub fn shift(e: &HermiteExpansion, m: &MultiIndex, split: usize) -> Result<HermiteExpansion> {
    check_split(e, m, split)?;
    let mut out = e.empty_like();
    for (k, v) in e.iter() {
        if let Some(t) = shifted(k, m, split) {
            out.insert_growing(t, v.clone());
        }
    }
    Ok(out)
}

/// Hermite–Riesz transform: the ladder word that lowers the first `split` axes and raises
/// the others by `m`, composed with `H^{−|m|/2}`.
pub fn riesz_transform(e: &HermiteExpansion, m: &MultiIndex, split: usize) -> Result<HermiteExpansion> {
    check_split(e, m, split)?;
    let half = m.order() as f64 / 2.0;
    let mut out = e.empty_like();
    for (k, v) in e.iter() {
        let Some(t) = shifted(k, m, split) else { continue };
        let mut num = 1.0;
        for (l, (&kl, &ml)) in k.entries().iter().zip(m.entries()).enumerate() {
            for s in 0..ml {
                num *= if l < split { (2.0 * (kl - s) as f64).sqrt() } else { (2.0 * (kl + s + 1) as f64).sqrt() };
            }
        }
        let factor = num / k.eigenvalue().powf(half);
        out.insert_growing(t, v.iter().map(|z| z * factor).collect());
    }
    Ok(out)
}

/// Coefficient of `τ_ℓ = Σ_j R_j^ℓ R_{−j}^ℓ` on `h_l`:
/// `2^ℓ Σ_j ∏_{m=1}^{ℓ} (l_j+m) / ((2|l|+n+2ℓ)^{ℓ/2} (2|l|+n)^{ℓ/2})`.
pub fn tau_coefficient(l: &MultiIndex, ell: usize) -> f64 {
    let lam = l.eigenvalue();
    let half = ell as f64 / 2.0;
    let sum: f64 = l.entries().iter().map(|&lj| (1..=ell).map(|m| (lj + m) as f64).product::<f64>()).sum();
    2f64.powi(ell as i32) * sum / ((lam + 2.0 * ell as f64).powf(half) * lam.powf(half))
}

/// `τ_ℓ` as the diagonal multiplier [`tau_coefficient`].
pub fn tau_operator(e: &HermiteExpansion, ell: usize) -> Result<HermiteExpansion> {
    if ell == 0 {
        return Err(Error::param("τ order must be at least 1"));
    }
    e.map_diagonal(|k| Complex64::new(tau_coefficient(k, ell), 0.0))
}

/// Which ladder letters enter a Sobolev norm.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SobolevVariant {
    /// All `A_{±j}`.
    Full,
    /// Raising operators `A_{−j}` only.
    Raising,
}

impl std::str::FromStr for SobolevVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "w" | "full" => Ok(SobolevVariant::Full),
            "w~" | "wtilde" | "raising" => Ok(SobolevVariant::Raising),
            other => Err(Error::param(format!("unknown Sobolev variant {other:?}"))),
        }
    }
}

/// A distinct ladder word and the number of letter orderings that give the same operator.
#[derive(Clone, Debug, PartialEq)]
pub struct Word {
    pub letters: Vec<SignedAxis>,
    pub multiplicity: f64,
}

/// Largest number of distinct words a Sobolev norm may expand into.
pub const WORD_BUDGET: usize = 2000;

/// All words of length `≤ ℓ`, with letters on different axes commuted into axis order.
///
/// Summing `multiplicity · ‖word f‖` over the result equals the sum over every ordered
/// composition.
pub fn sobolev_words(dim: usize, ell: usize, variant: SobolevVariant) -> Result<Vec<Word>> {
    if dim == 0 {
        return Err(Error::param("dimension must be at least 1"));
    }
    let mut words = vec![Word { letters: Vec::new(), multiplicity: 1.0 }];
    for len in 1..=ell {
        for parts in compositions(len, dim) {
            let weight = factorial(len) / parts.iter().map(|&p| factorial(p)).product::<f64>();
            // Per-axis sign sequences, encoded as bit masks (bit set = raising).
            let mut masks = vec![Vec::new()];
            for (axis, &p) in parts.iter().enumerate() {
                let choices: Vec<u64> = match variant {
                    SobolevVariant::Full => (0..1u64 << p).collect(),
                    SobolevVariant::Raising => vec![(1u64 << p) - 1],
                };
                masks = masks
                    .into_iter()
                    .flat_map(|prefix: Vec<(usize, usize, u64)>| {
                        choices.iter().map(move |&c| {
                            let mut v = prefix.clone();
                            v.push((axis, p, c));
                            v
                        })
                    })
                    .collect();
            }
            for mask in masks {
                let letters = mask
                    .iter()
                    .flat_map(|&(axis, p, bits)| {
                        (0..p).map(move |b| if bits >> b & 1 == 1 { SignedAxis::raising(axis) } else { SignedAxis::lowering(axis) })
                    })
                    .collect();
                words.push(Word { letters, multiplicity: weight });
                if words.len() > WORD_BUDGET {
                    return Err(Error::Budget(format!(
                        "Sobolev norm of order {ell} in dimension {dim} needs more than {WORD_BUDGET} words"
                    )));
                }
            }
        }
    }
    Ok(words)
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Ordered ways to write `total` as a sum of `parts` naturals.
fn compositions(total: usize, parts: usize) -> Vec<Vec<usize>> {
    if parts == 1 {
        return vec![vec![total]];
    }
    (0..=total)
        .flat_map(|first| {
            compositions(total - first, parts - 1).into_iter().map(move |mut rest| {
                rest.insert(0, first);
                rest
            })
        })
        .collect()
}

fn check_grid(e: &HermiteExpansion, grid: &SpatialGrid, extra: usize) -> Result<()> {
    if grid.dim() != e.dim() {
        return Err(Error::DimensionMismatch { expected: e.dim(), found: grid.dim() });
    }
    let need = e.max_degree() + extra;
    if need > grid.design_cap() {
        return Err(Error::param(format!(
            "grid is sized for degree ≤ {} but the norm reaches degree {need}",
            grid.design_cap()
        )));
    }
    Ok(())
}

/// `Σ_{m ≤ ℓ} Σ_{j_1…j_m} ‖A_{j_1} ⋯ A_{j_m} f‖_{L^p}`, with the `m = 0` term `‖f‖_{L^p}`.
///
/// The grid must be sized for degree `max_degree(f) + ℓ`.
pub fn sobolev_norm(e: &HermiteExpansion, ell: usize, p: f64, variant: SobolevVariant, grid: &SpatialGrid) -> Result<f64> {
    check_p(p)?;
    check_grid(e, grid, ell)?;
    let words = sobolev_words(e.dim(), ell, variant)?;
    let terms: Vec<f64> = words
        .par_iter()
        .map(|w| Ok(w.multiplicity * apply_word(e, &w.letters)?.lp_norm(grid, p)?))
        .collect::<Result<_>>()?;
    Ok(terms.iter().sum())
}

/// `‖g‖_{L^p}` for the unique `g` with `f = H^{−β} g`.
pub fn potential_norm(e: &HermiteExpansion, beta: f64, p: f64, grid: &SpatialGrid) -> Result<f64> {
    check_p(p)?;
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(Error::param(format!("β must be positive, got {beta}")));
    }
    check_grid(e, grid, 0)?;
    hermite_power(e, beta)?.lp_norm(grid, p)
}

/// `‖f‖_{L^p} + ‖x ↦ ‖t^{k−β} ∂_t^k P_t f(x)‖_{γ(ℋ,B)}‖_{L^p}` on a one-dimensional time grid.
pub fn triebel_norm(
    e: &HermiteExpansion,
    beta: f64,
    k: u32,
    p: f64,
    tgrid: &TimeGrid,
    sgrid: &SpatialGrid,
    settings: GammaSettings,
) -> Result<f64> {
    check_p(p)?;
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(Error::param(format!("β must be positive, got {beta}")));
    }
    if (k as f64) <= beta {
        return Err(Error::param(format!("need k > β, got k = {k} and β = {beta}")));
    }
    check_grid(e, sgrid, 0)?;
    let tg = tgrid.with_dim(1)?;
    let structure = TimeStructure::Radial(Profile::Triebel { k, beta });
    let g = pointwise_gamma_norms(e, &structure, &tg, sgrid, settings)?;
    Ok(e.lp_norm(sgrid, p)? + crate::grid::weighted_lp(&g, &sgrid.tensor_weights(), p))
}

/// Norms of one corpus member in a Sobolev equivalence experiment.
#[derive(Clone, Debug, PartialEq)]
pub struct SobolevRecord {
    pub item: usize,
    pub p: f64,
    /// Raising letters only.
    pub w_raising: f64,
    pub w_full: f64,
    pub potential: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SobolevReport {
    pub ell: usize,
    pub beta: f64,
    pub records: Vec<SobolevRecord>,
    /// `(ratio name, summary)` for `W/W̃`, `L/W̃` and `L/W`, one per `p`.
    pub summaries: Vec<(String, RatioSummary)>,
}

pub const SOBOLEV_RATIOS: [&str; 3] = ["full/raising", "potential/raising", "potential/full"];

impl SobolevRecord {
    pub fn ratios(&self) -> [f64; 3] {
        [self.w_full / self.w_raising, self.potential / self.w_raising, self.potential / self.w_full]
    }
}

/// Compares the two Sobolev norms of order `ℓ` with the potential norm of order `β` on every
/// corpus member. `β = ℓ/2` matches the normalization of the Riesz transforms.
pub fn sobolev_equivalence_experiment(
    corpus: &[HermiteExpansion],
    ell: usize,
    beta: f64,
    ps: &[f64],
    grid: &SpatialGrid,
) -> Result<SobolevReport> {
    if corpus.is_empty() {
        return Err(Error::param("Sobolev experiment needs a nonempty corpus"));
    }
    for &p in ps {
        check_p(p)?;
    }
    let rows: Vec<Vec<SobolevRecord>> = corpus
        .par_iter()
        .enumerate()
        .map(|(item, e)| {
            ps.iter()
                .map(|&p| {
                    let lp = e.lp_norm(grid, p)?;
                    if lp < DEGENERATE_NORM {
                        return Err(Error::Validation(format!("corpus member {item} has L^{p} norm {lp:e}")));
                    }
                    Ok(SobolevRecord {
                        item,
                        p,
                        w_raising: sobolev_norm(e, ell, p, SobolevVariant::Raising, grid)?,
                        w_full: sobolev_norm(e, ell, p, SobolevVariant::Full, grid)?,
                        potential: potential_norm(e, beta, p, grid)?,
                    })
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    let records: Vec<SobolevRecord> = rows.into_iter().flatten().collect();
    let mut summaries = Vec::new();
    for (i, name) in SOBOLEV_RATIOS.iter().enumerate() {
        for &p in ps {
            let r: Vec<f64> = records.iter().filter(|r| r.p == p).map(|r| r.ratios()[i]).collect();
            summaries.push((name.to_string(), summarize(p, &r)));
        }
    }
    Ok(SobolevReport { ell, beta, records, summaries })
}
