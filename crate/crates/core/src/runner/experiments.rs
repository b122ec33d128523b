//! The experiments behind each runner command.

use super::config::{ExperimentConfig, Reader};
use super::report::{ExperimentReport, Series};
use crate::basis::{hermite_table, MultiIndex};
use crate::error::{Error, Result};
use crate::expansion::HermiteExpansion;
use crate::grid::{default_nodes, SpatialGrid};
use crate::littlewood_paley::{
    equivalence_experiment, polarization_check, summarize, GammaSettings, RatioSummary, TimeGrid, TimeStructure,
};
use crate::multiplier::{
    apply_multiplier, imaginary_power, meda_condition, mellin_identity_check, sup_over_t, Growth, IdentitySettings,
    MedaSettings, MultiplierSymbol,
};
use crate::rng;
use crate::semigroup::{mehler_kernel, SubordinationQuadrature};
use crate::sobolev::{sobolev_equivalence_experiment, triebel_norm, SOBOLEV_RATIOS};
use crate::special::ln_abs_gamma;
use crate::symbol_expr::parse_symbol;
use crate::value::ValueSpace;
use num_complex::Complex64;
use rayon::prelude::*;
use std::collections::BTreeMap;

pub const EXPERIMENTS: [&str; 7] = ["basis", "kernel", "gfunc", "polarize", "multiplier", "meda", "sobolev"];

const MAX_CORPUS: usize = 1000;
const MAX_DRAWS: usize = 1_000_000;

/// Canonical experiment name for a command or alias.
pub fn canonical(name: &str) -> Result<&'static str> {
    Ok(match name {
        "basis" => "basis",
        "kernel" => "kernel",
        "gfunc" | "equivalence" => "gfunc",
        "polarize" | "polarization" => "polarize",
        "multiplier" | "identity" => "multiplier",
        "meda" => "meda",
        "sobolev" | "sobolev-equivalence" => "sobolev",
        other => {
            return Err(Error::Validation(format!("unknown experiment {other:?}; expected one of {}", EXPERIMENTS.join(", "))))
        }
    })
}

impl ExperimentConfig {
    /// Default configuration for an experiment; randomized ones get `seed = 1`.
    pub fn example(name: &str) -> Result<Self> {
        let name = canonical(name)?;
        let extra = match name {
            "basis" | "gfunc" | "polarize" | "multiplier" => "seed = 1\n",
            "sobolev" => "seed = 1\nbeta = ell/2\n",
            _ => "",
        };
        Self::parse(&format!("experiment = {name}\n{extra}"))
    }
}

/// Runs the configured experiment and returns a sealed report.
pub fn run(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let name = canonical(cfg.experiment()?)?;
    let r = Reader::new(cfg);
    r.value::<String>("experiment", String::new())?;
    let mut report = match name {
        "basis" => basis(&r)?,
        "kernel" => kernel(&r)?,
        "gfunc" => gfunc(&r)?,
        "polarize" => polarize(&r)?,
        "multiplier" => multiplier(&r)?,
        "meda" => meda(&r)?,
        "sobolev" => sobolev(&r)?,
        _ => unreachable!("canonical names only"),
    };
    let mut config = r.finish()?;
    config.insert("experiment".into(), name.into());
    report.experiment = name.to_string();
    report.config = config;
    report.seal();
    Ok(report)
}

fn seed(r: &Reader) -> Result<u64> {
    r.required("seed", "this experiment is randomized")
}

fn dim(r: &Reader, max: usize) -> Result<usize> {
    r.bounded("dim", 1, 1, max)
}

fn spatial_grid(r: &Reader, dim: usize, cap: usize) -> Result<SpatialGrid> {
    let nodes = r.bounded("nodes", default_nodes(dim), 64, 4096)?;
    SpatialGrid::new(dim, cap, nodes)
}

fn time_grid(r: &Reader, dim: usize) -> Result<TimeGrid> {
    time_grid_from(r, TimeGrid::default_for(dim)?)
}

fn time_grid_from(r: &Reader, d: TimeGrid) -> Result<TimeGrid> {
    let dim = d.dim();
    let (lo, hi) = d.bounds();
    let t_min = r.value("t_min", lo)?;
    let t_max = r.value("t_max", hi)?;
    let t_nodes = r.bounded("t_nodes", d.axis_nodes().len(), 8, 4096)?;
    TimeGrid::new(dim, t_min, t_max, t_nodes)
}

fn multi_index(r: &Reader, key: &str, dim: usize) -> Result<MultiIndex> {
    let v: Vec<usize> = r.list(key, &vec![1; dim])?;
    if v.len() != dim {
        return Err(Error::Validation(format!("key `{key}` needs {dim} entries, got {}", v.len())));
    }
    MultiIndex::new(v)
}

fn corpus(dim: usize, cap: usize, space: ValueSpace, seed: u64, size: usize) -> Result<Vec<HermiteExpansion>> {
    (0..size).map(|i| HermiteExpansion::random(dim, cap, space, &mut rng::stream(seed, i as u64, u64::MAX))).collect()
}

fn put_summary(report: &mut ExperimentReport, prefix: &str, s: &RatioSummary) {
    let key = |what: &str| format!("{prefix}p={}:{what}", s.p);
    report.summary.insert(key("min"), s.min);
    report.summary.insert(key("max"), s.max);
    for (level, v) in &s.quantiles {
        report.summary.insert(key(&format!("q{level}")), *v);
    }
    report.summary.insert(key("lower_constant"), s.constants.0);
    report.summary.insert(key("upper_constant"), s.constants.1);
}

fn symbol(r: &Reader, dim: usize, cap: usize) -> Result<MultiplierSymbol> {
    let spec: String = r.value("symbol", "identity".to_string())?;
    match MultiplierSymbol::catalog(&spec, dim) {
        Ok(m) => Ok(m),
        Err(Error::InvalidParameter(msg)) if msg.starts_with("unknown catalog symbol") => {
            let m = parse_symbol(&spec, dim, cap)?;
            match r.optional::<f64>("sector")? {
                Some(psi) => m.with_sector(psi),
                None => Ok(m),
            }
        }
        Err(e) => Err(e),
    }
}

fn basis(r: &Reader) -> Result<ExperimentReport> {
    let dim = dim(r, 3)?;
    let gram_cap = r.bounded("cap", 32, 0, 64)?;
    let degree = r.bounded("degree", 16, 0, 64)?;
    let size = r.bounded("corpus", 20, 1, MAX_CORPUS)?;
    let seed = seed(r)?;
    let grid = spatial_grid(r, dim, gram_cap.max(degree))?;

    // one-dimensional Gram matrix of h_0..h_cap on the axis rule
    let w = grid.axis_weights();
    let tables: Vec<Vec<f64>> = grid.axis_nodes().iter().map(|&x| hermite_table(gram_cap, x)).collect();
    let mut ortho = 0.0_f64;
    for i in 0..=gram_cap {
        for j in 0..=i {
            let s: f64 = tables.iter().zip(w).map(|(h, w)| w * h[i] * h[j]).sum();
            ortho = ortho.max((s - if i == j { 1.0 } else { 0.0 }).abs());
        }
    }

    let mut report = ExperimentReport::new("basis", BTreeMap::new(), &["parseval_residual", "roundtrip_error"]);
    let members = corpus(dim, degree, ValueSpace::Real, seed, size)?;
    let rows: Vec<(f64, f64)> = members
        .par_iter()
        .map(|e| {
            let field = e.synthesize_grid(&grid)?;
            let l2 = field.lp_norm(&grid, &ValueSpace::Real, 2.0)?;
            let coeff = e.l2_norm();
            let back = HermiteExpansion::analyze(&field, &grid, degree, ValueSpace::Real)?;
            Ok(((l2 * l2 - coeff * coeff).abs() / (coeff * coeff), back.max_abs_diff(e)))
        })
        .collect::<Result<_>>()?;
    for (i, (p, rt)) in rows.iter().enumerate() {
        report.push(i.to_string(), None, vec![*p, *rt]);
    }
    report.summary.insert("orthonormality_error".into(), ortho);
    report.summary.insert("parseval_max".into(), rows.iter().map(|r| r.0).fold(0.0, f64::max));
    report.summary.insert("roundtrip_max".into(), rows.iter().map(|r| r.1).fold(0.0, f64::max));
    Ok(report)
}

fn kernel(r: &Reader) -> Result<ExperimentReport> {
    let cap = r.bounded("cap", 8, 0, 64)?;
    let times: Vec<f64> = r.list("times", &[0.5, 1.0, 2.0])?;
    let terms = r.bounded("terms", 60, 1, 400)?;
    let kmax = r.bounded("kmax", 8, 0, 64)?;
    let sub_times: Vec<f64> = r.list("sub_times", &[0.1, 1.0, 5.0])?;
    let grid = spatial_grid(r, 1, cap.max(kmax))?;
    let xs = grid.axis_nodes();
    let w = grid.axis_weights();
    let tables: Vec<Vec<f64>> = xs.iter().map(|&x| hermite_table(terms.max(kmax + 1) - 1, x)).collect();

    let mut report = ExperimentReport::new("kernel", BTreeMap::new(), &["t", "error"]);
    for &t in &times {
        if !(t > 0.0) {
            return Err(Error::Validation(format!("heat times must be positive, got {t}")));
        }
        let decay: Vec<f64> = (0..terms).map(|k| (-(2.0 * k as f64 + 1.0) * t).exp()).collect();
        let rows: Vec<(f64, Vec<f64>)> = (0..xs.len())
            .into_par_iter()
            .map(|i| {
                let mut spectral_err = 0.0_f64;
                let mut action = vec![0.0; kmax + 1];
                for j in 0..xs.len() {
                    let wk = mehler_kernel(t, &[xs[i]], &[xs[j]])?;
                    let s: f64 = (0..terms).map(|k| decay[k] * tables[i][k] * tables[j][k]).sum();
                    spectral_err = spectral_err.max((wk - s).abs());
                    for (k, a) in action.iter_mut().enumerate() {
                        *a += w[j] * wk * tables[j][k];
                    }
                }
                let eigen: Vec<f64> =
                    action.iter().enumerate().map(|(k, a)| (a - decay_k(k, t) * tables[i][k]).abs()).collect();
                Ok((spectral_err, eigen))
            })
            .collect::<Result<_>>()?;
        let spectral = rows.iter().map(|r| r.0).fold(0.0, f64::max);
        report.push("mehler-spectral", None, vec![t, spectral]);
        for k in 0..=kmax {
            let err = rows.iter().map(|r| r.1[k]).fold(0.0, f64::max);
            report.push(format!("eigen-action:k={k}"), None, vec![t, err]);
        }
    }
    let q = SubordinationQuadrature::default();
    let h0 = HermiteExpansion::basis(&MultiIndex::zero(1), 0)?;
    for &t in &sub_times {
        if !(t > 0.0) {
            return Err(Error::Validation(format!("Poisson times must be positive, got {t}")));
        }
        let c = q.poisson_apply(&h0, t)?.coeff(&MultiIndex::zero(1));
        report.push("subordination", None, vec![t, (c - Complex64::new((-t).exp(), 0.0)).norm()]);
    }
    for prefix in ["mehler-spectral", "eigen-action", "subordination"] {
        let m = report.records.iter().filter(|x| x.id.starts_with(prefix)).map(|x| x.values[1]).fold(0.0, f64::max);
        report.summary.insert(format!("{prefix}:max_error"), m);
    }
    Ok(report)
}

fn decay_k(k: usize, t: f64) -> f64 {
    (-(2.0 * k as f64 + 1.0) * t).exp()
}

fn gfunc(r: &Reader) -> Result<ExperimentReport> {
    let dim = dim(r, 3)?;
    let cap = r.bounded("cap", 8, 0, 32)?;
    let order = multi_index(r, "order", dim)?;
    let ps: Vec<f64> = r.list("p", &[1.5, 2.0, 3.0])?;
    let space: ValueSpace = r.value("space", ValueSpace::Real)?;
    let draws = r.bounded("draws", 2000, 100, MAX_DRAWS)?;
    let size = r.bounded("corpus", 100, 1, MAX_CORPUS)?;
    let seed = seed(r)?;
    let tgrid = time_grid(r, dim)?;
    let sgrid = spatial_grid(r, dim, cap)?;
    let members = corpus(dim, cap, space, seed, size)?;
    let structure = TimeStructure::g_function(&order)?;
    let eq = equivalence_experiment(&members, &structure, &ps, &tgrid, &sgrid, draws, seed)?;

    let mut report = ExperimentReport::new("gfunc", BTreeMap::new(), &["ratio", "g_norm", "lp_norm"]);
    for rec in &eq.records {
        report.push(rec.item.to_string(), Some(rec.p), vec![rec.ratio, rec.g_norm, rec.lp_norm]);
    }
    for s in &eq.summaries {
        put_summary(&mut report, "ratio:", s);
        let points = eq.records.iter().filter(|x| x.p == s.p).map(|x| (x.item as f64, x.ratio)).collect();
        report.series.push(Series { name: format!("ratio-p{}", s.p), points });
    }
    Ok(report)
}

fn polarize(r: &Reader) -> Result<ExperimentReport> {
    let dim = dim(r, 3)?;
    let cap = r.bounded("cap", 8, 0, 32)?;
    let alpha = multi_index(r, "alpha", dim)?;
    let pairs = r.bounded("pairs", 50, 1, MAX_CORPUS)?;
    let space: ValueSpace = r.value("space", ValueSpace::Real)?;
    let seed = seed(r)?;
    // the pairing is not positive, so truncation below t_min shows up relative to a small rhs
    let tgrid = time_grid_from(r, TimeGrid::new(dim, 1e-7, 40.0, 320)?)?;
    let sgrid = spatial_grid(r, dim, cap)?;
    let rows: Vec<_> = (0..pairs)
        .into_par_iter()
        .map(|i| {
            let f = HermiteExpansion::random(dim, cap, space, &mut rng::stream(seed, 2 * i as u64, u64::MAX))?;
            let g = HermiteExpansion::random(dim, cap, space, &mut rng::stream(seed, 2 * i as u64 + 1, u64::MAX))?;
            polarization_check(&f, &g, &alpha, &tgrid, &sgrid)
        })
        .collect::<Result<_>>()?;
    let mut report =
        ExperimentReport::new("polarize", BTreeMap::new(), &["residual", "lhs_re", "lhs_im", "rhs_re", "rhs_im"]);
    for (i, p) in rows.iter().enumerate() {
        report.push(i.to_string(), None, vec![p.residual, p.lhs.re, p.lhs.im, p.rhs.re, p.rhs.im]);
    }
    let res: Vec<f64> = rows.iter().map(|p| p.residual).collect();
    report.summary.insert("max_residual".into(), res.iter().copied().fold(0.0, f64::max));
    report.summary.insert("mean_residual".into(), res.iter().sum::<f64>() / res.len() as f64);
    Ok(report)
}

fn log_space(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![(a * b).sqrt()];
    }
    (0..n).map(|i| (a.ln() + (b.ln() - a.ln()) * i as f64 / (n - 1) as f64).exp()).collect()
}

fn lin_space(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![0.5 * (a + b)];
    }
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}

fn multiplier(r: &Reader) -> Result<ExperimentReport> {
    let dim = dim(r, 2)?;
    let cap = r.bounded("cap", 6, 0, 6)?;
    let m = symbol(r, dim, cap)?;
    let alpha = multi_index(r, "alpha", dim)?;
    let nt = r.bounded("t_probes", 20, 1, 200)?;
    let nx = r.bounded("x_probes", 20, 1, 200)?;
    let d = IdentitySettings::default();
    let settings = IdentitySettings {
        u_cutoff: r.value("u_cutoff", d.u_cutoff)?,
        u_step: r.value("u_step", d.u_step)?,
        tail_tol: r.value("tail_tol", d.tail_tol)?,
    };
    let beta: Vec<f64> = r.list("beta", &vec![0.7; dim])?;
    if beta.len() != dim {
        return Err(Error::Validation(format!("key `beta` needs {dim} entries, got {}", beta.len())));
    }
    let seed = seed(r)?;
    let e = HermiteExpansion::random(dim, cap, ValueSpace::Real, &mut rng::stream(seed, 0, u64::MAX))?;

    // axis j uses a shifted copy of the same log ladder so that probes are not diagonal
    let ts: Vec<Vec<f64>> =
        log_space(0.1, 5.0, nt).iter().map(|&t| (0..dim).map(|j| t * (1.0 + 0.37 * j as f64)).collect()).collect();
    let xs: Vec<Vec<f64>> =
        lin_space(-2.0, 2.0, nx).iter().map(|&x| (0..dim).map(|j| x - 0.29 * j as f64).collect()).collect();
    let id = mellin_identity_check(&e, &m, &alpha, &ts, &xs, settings)?;

    let mut report =
        ExperimentReport::new("multiplier", BTreeMap::new(), &["residual", "lhs_re", "lhs_im", "rhs_re", "rhs_im"]);
    for (i, p) in id.points.iter().enumerate() {
        let res = (p.lhs - p.rhs).norm() / p.rhs.norm().max(f64::MIN_POSITIVE);
        report.push(format!("probe{i}"), None, vec![res, p.lhs.re, p.lhs.im, p.rhs.re, p.rhs.im]);
    }
    report.summary.insert("identity:max_residual".into(), id.max_residual);
    report.summary.insert("identity:normalization".into(), id.normalization);
    report.summary.insert("sampled_bound".into(), m.sampled_bound(cap)?);

    let applied = apply_multiplier(&e, &m)?;
    report.summary.insert("multiplier:l2_ratio".into(), applied.l2_norm() / e.l2_norm());
    let ip = imaginary_power(&e, &beta)?;
    report.summary.insert("imaginary_power:isometry_error".into(), (ip.l2_norm() - e.l2_norm()).abs() / e.l2_norm());
    let half: Vec<f64> = beta.iter().map(|b| 0.5 * b).collect();
    let twice = imaginary_power(&imaginary_power(&e, &half)?, &half)?;
    report.summary.insert("imaginary_power:group_law_error".into(), twice.max_abs_diff(&ip));
    Ok(report)
}

fn meda(r: &Reader) -> Result<ExperimentReport> {
    let dim = dim(r, 3)?;
    let m = symbol(r, dim, 16)?;
    let gamma = multi_index(r, "gamma", dim)?;
    let growth_kind: String = r.value("growth", "exponential".to_string())?;
    let growth = match growth_kind.as_str() {
        "exponential" => Growth::Exponential { omega: r.value("omega", 1.0)? },
        "polynomial" => Growth::Polynomial { degree: r.value("degree", 1.0)? },
        other => return Err(Error::Validation(format!("growth must be exponential or polynomial, got {other:?}"))),
    };
    let d = MedaSettings::default();
    let settings = MedaSettings { u_cutoff: r.value("u_cutoff", d.u_cutoff)?, u_step: r.value("u_step", d.u_step)? };
    let series_step: f64 = r.value("series_step", 0.5)?;
    if !(series_step > 0.0) {
        return Err(Error::Validation("series_step must be positive".into()));
    }
    let rep = meda_condition(&m, &gamma, growth, settings)?;

    let mut report = ExperimentReport::new(
        "meda",
        BTreeMap::new(),
        &["truncated", "tail", "envelope_minus", "envelope_plus", "tail_log_slope"],
    );
    for (j, a) in rep.axes.iter().enumerate() {
        report.push(
            format!("axis{j}"),
            None,
            vec![a.truncated, a.tail, a.envelope_constants[0], a.envelope_constants[1], a.tail_log_slope],
        );
    }
    report.summary.insert("finite".into(), if rep.finite { 1.0 } else { 0.0 });
    report.summary.insert("estimate".into(), rep.estimate);
    report.summary.insert("truncated".into(), rep.truncated);

    // sup over t along the first axis, other axes at u = 0
    let steps = (settings.u_cutoff / series_step).round() as usize;
    let us = lin_space(-settings.u_cutoff, settings.u_cutoff, 2 * steps + 1);
    let nodes: Vec<Vec<f64>> = us.iter().map(|&u| (0..dim).map(|j| if j == 0 { u } else { 0.0 }).collect()).collect();
    let sup = sup_over_t(&m, &gamma, &nodes)?;
    let g0 = gamma.get(0) as f64;
    report.series.push(Series { name: "sup".into(), points: us.iter().copied().zip(sup.values.iter().copied()).collect() });
    report.series.push(Series {
        name: "envelope".into(),
        points: us.iter().map(|&u| (u, (u.abs().ln_1p() + ln_abs_gamma(Complex64::new(g0, -u))).exp())).collect(),
    });
    Ok(report)
}

fn sobolev(r: &Reader) -> Result<ExperimentReport> {
    let dim = dim(r, 3)?;
    let cap = r.bounded("cap", 6, 0, 32)?;
    let ell = r.bounded("ell", 1, 1, 8)?;
    let beta_spec: String = r.required("beta", "choose `ell`, `ell/2` or a number")?;
    let beta = match beta_spec.as_str() {
        "ell" => ell as f64,
        "ell/2" => 0.5 * ell as f64,
        s => s.parse::<f64>().map_err(|_| Error::Validation(format!("key `beta`: cannot read {s:?}")))?,
    };
    let ps: Vec<f64> = r.list("p", &[1.5, 2.0, 3.0])?;
    let size = r.bounded("corpus", 100, 1, MAX_CORPUS)?;
    let seed = seed(r)?;
    let grid = spatial_grid(r, dim, cap + ell)?;
    let members = corpus(dim, cap, ValueSpace::Real, seed, size)?;
    let with_triebel: bool = r.value("triebel", false)?;
    let triebel_setup = if with_triebel {
        let k = r.bounded("triebel_k", beta.floor() as usize + 1, 1, 16)? as u32;
        Some((k, time_grid(r, 1)?))
    } else {
        None
    };
    let rep = sobolev_equivalence_experiment(&members, ell, beta, &ps, &grid)?;
    // scalar targets make the γ-norm exact, so the Triebel norm needs no draws
    let triebel: Vec<f64> = match &triebel_setup {
        Some((k, tgrid)) => rep
            .records
            .par_iter()
            .map(|rec| {
                let settings = GammaSettings { draws: 0, seed, item: rec.item as u64 };
                triebel_norm(&members[rec.item], beta, *k, rec.p, tgrid, &grid, settings)
            })
            .collect::<Result<_>>()?,
        None => Vec::new(),
    };

    let mut cols: Vec<&str> = SOBOLEV_RATIOS.to_vec();
    cols.extend(["w_raising", "w_full", "potential"]);
    if with_triebel {
        cols.extend(["triebel/potential", "triebel"]);
    }
    let mut report = ExperimentReport::new("sobolev", BTreeMap::new(), &cols);
    for (i, rec) in rep.records.iter().enumerate() {
        let mut v = rec.ratios().to_vec();
        v.extend([rec.w_raising, rec.w_full, rec.potential]);
        if with_triebel {
            v.extend([triebel[i] / rec.potential, triebel[i]]);
        }
        report.push(rec.item.to_string(), Some(rec.p), v);
    }
    for (name, s) in &rep.summaries {
        put_summary(&mut report, &format!("{name}:"), s);
    }
    if with_triebel {
        for &p in &ps {
            let ratios: Vec<f64> = report.records.iter().filter(|x| x.p == Some(p)).map(|x| x.values[6]).collect();
            put_summary(&mut report, "triebel/potential:", &summarize(p, &ratios));
        }
    }
    report.summary.insert("beta".into(), beta);
    Ok(report)
}
