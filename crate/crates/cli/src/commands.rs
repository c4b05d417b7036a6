//! The `potential`, `propagator` and `evolve` commands.
//!
//! Each command is split into a pure computation returning in-memory rows and
//! a serializer, so tests can compare a reloaded file against the values that
//! produced it.

use std::collections::BTreeMap;

use anyhow::{bail, Context, Result};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use susyprop::grid::{Grid1D, Sampled};
use susyprop::kernel::{
    propagate_state, spectral_kernel, theorem_kernel, ClosedForm, KernelEval, KernelSource, Method, Propagator,
    QuadratureSpec,
};
use susyprop::oracle::{cn_evolve, EvolutionConfig, GaussianPacket};
use susyprop::susy::PartnerModel;
use susyprop::Error;

use crate::config::{sorted, Example, PacketKind, ScenarioConfig};
use crate::output::{csv_bytes, fmt_f64};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Short machine-readable code for a per-point failure.
pub fn flag_code(e: &Error) -> &'static str {
    match e {
        Error::Range { .. } => "range",
        Error::SingularTime { .. } => "singular_time",
        Error::TimeOutOfRange { .. } => "time_out_of_range",
        Error::SpectralBoundary { .. } => "spectral_boundary",
        Error::RealZeroRisk(_) => "real_zero_risk",
        Error::NearZero { .. } => "near_zero",
        Error::DegenerateNormalization { .. } => "degenerate_normalization",
        Error::NoBoundState => "no_bound_state",
        Error::ContinuousSpectrum => "continuous_spectrum",
        Error::QuadratureNonConvergence { .. } => "quadrature_nonconvergence",
        Error::Divergence { .. } => "divergence",
        Error::DomainTooSmall { .. } => "domain_too_small",
        Error::GridMismatch(_) => "grid_mismatch",
        Error::InvalidParameter(_) => "invalid_parameter",
        Error::NotDiagonallyDominant { .. } => "not_diagonally_dominant",
        Error::EigenNonConvergence => "eigen_nonconvergence",
    }
}

// ---------------------------------------------------------------------------
// potential

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PotentialRow {
    pub x: f64,
    pub v: Complex64,
}

pub fn potential(cfg: &ScenarioConfig) -> Result<Vec<PotentialRow>> {
    let pm = cfg.model()?;
    cfg.grid()?
        .points()
        .into_iter()
        .map(|x| {
            let v = pm.potential(x).with_context(|| format!("V_c at x = {x}"))?;
            Ok(PotentialRow { x, v })
        })
        .collect()
}

pub fn potential_csv(rows: &[PotentialRow]) -> Result<Vec<u8>> {
    csv_bytes(
        &["x", "re_v", "im_v"],
        rows.iter().map(|r| vec![fmt_f64(r.x), fmt_f64(r.v.re), fmt_f64(r.v.im)]),
    )
}

// ---------------------------------------------------------------------------
// propagator

#[derive(Debug, Clone, PartialEq)]
pub struct KernelRow {
    pub x: f64,
    pub y: f64,
    pub t: f64,
    pub method: Method,
    /// `None` for flagged rows.
    pub value: Option<Complex64>,
    pub err_est: f64,
    /// `ok` or a failure code.
    pub flag: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairDiff {
    pub a: String,
    pub b: String,
    pub max_abs_diff: f64,
}

#[derive(Debug, Clone)]
pub struct PropagatorReport {
    pub rows: Vec<KernelRow>,
    /// Max `|K_a - K_b|` over the points where both methods succeeded.
    pub pairwise: Vec<PairDiff>,
}

fn eval_kernel(
    pm: &PartnerModel,
    quad: &QuadratureSpec,
    n_terms: usize,
    method: Method,
    x: f64,
    y: f64,
    t: f64,
) -> std::result::Result<KernelEval, &'static str> {
    let r = match method {
        Method::TheoremQuad => theorem_kernel(pm, x, y, t, quad),
        Method::ClosedForm => ClosedForm::new(*pm, *quad).kernel(x, y, t),
        Method::SpectralSum => spectral_kernel(pm, n_terms, x, y, t),
        // the CN oracle evolves states; it has no pointwise kernel
        Method::OracleCN => return Err("unsupported"),
    };
    r.map_err(|e| {
        log::debug!("{method} at ({x}, {y}, {t}): {e}");
        flag_code(&e)
    })
}

pub fn propagator(cfg: &ScenarioConfig) -> Result<PropagatorReport> {
    let pm = cfg.model()?;
    let quad = cfg.quad()?;
    let methods = cfg.methods()?;
    let n_terms = cfg.methods.spectral_terms;

    let mut points = Vec::new();
    for &x in &sorted(&cfg.lattice.x) {
        for &y in &sorted(&cfg.lattice.y) {
            for &t in &sorted(&cfg.lattice.t) {
                for &m in &methods {
                    points.push((x, y, t, m));
                }
            }
        }
    }
    let rows: Vec<KernelRow> = points
        .par_iter()
        .map(|&(x, y, t, method)| match eval_kernel(&pm, &quad, n_terms, method, x, y, t) {
            Ok(k) => KernelRow { x, y, t, method, value: Some(k.value), err_est: k.err_estimate, flag: "ok".into() },
            Err(code) => KernelRow { x, y, t, method, value: None, err_est: f64::NAN, flag: code.into() },
        })
        .collect();

    let mut pairwise = Vec::new();
    let per_point = methods.len();
    for i in 0..per_point {
        for j in i + 1..per_point {
            let mut worst: f64 = 0.0;
            for chunk in rows.chunks(per_point) {
                if let (Some(a), Some(b)) = (chunk[i].value, chunk[j].value) {
                    worst = worst.max((a - b).norm());
                }
            }
            pairwise.push(PairDiff {
                a: methods[i].to_string(),
                b: methods[j].to_string(),
                max_abs_diff: worst,
            });
        }
    }
    Ok(PropagatorReport { rows, pairwise })
}

pub fn propagator_csv(rows: &[KernelRow]) -> Result<Vec<u8>> {
    csv_bytes(
        &["x", "y", "t", "method", "re_k", "im_k", "err_est", "flag"],
        rows.iter().map(|r| {
            let v = r.value.unwrap_or(Complex64::new(f64::NAN, f64::NAN));
            vec![
                fmt_f64(r.x),
                fmt_f64(r.y),
                fmt_f64(r.t),
                r.method.to_string(),
                fmt_f64(v.re),
                fmt_f64(v.im),
                fmt_f64(r.err_est),
                r.flag.clone(),
            ]
        }),
    )
}

// ---------------------------------------------------------------------------
// evolve

#[derive(Debug, Clone)]
pub struct Snapshot {
    pub t: f64,
    pub method: Method,
    pub state: Sampled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairL2 {
    pub a: String,
    pub b: String,
    pub rel_l2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodFailure {
    pub method: String,
    pub flag: String,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSummary {
    pub t: f64,
    pub pairwise: Vec<PairL2>,
    pub max_pairwise_rel_l2: Option<f64>,
    /// `max_x ||Φ(x,t)| - |φ_α(x)||` per method, for a bound-state packet.
    pub modulus_drift: Option<BTreeMap<String, f64>>,
    pub failures: Vec<MethodFailure>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvolveSummary {
    pub version: String,
    pub config_digest: String,
    pub example: Example,
    pub packet: PacketKind,
    pub times: Vec<TimeSummary>,
}

#[derive(Debug, Clone)]
pub struct EvolveReport {
    pub snapshots: Vec<Snapshot>,
    pub summary: EvolveSummary,
}

/// Evolves the configured packet with every configured method and the CN oracle.
pub fn evolve(cfg: &ScenarioConfig) -> Result<EvolveReport> {
    let pm = cfg.model()?;
    let quad = cfg.quad()?;
    let grid = cfg.grid()?;
    let ev = &cfg.evolution;
    let mut methods = cfg.methods()?;
    if !methods.contains(&Method::OracleCN) {
        methods.push(Method::OracleCN);
        methods.sort_by_key(|m| m.as_str());
    }

    let h = grid.spacing();
    let packet = match ev.packet {
        PacketKind::Gaussian => {
            if ev.width < 4.0 * h {
                bail!(
                    "resolution: packet width {} is below 4h = {} on this grid; refine grid.points or widen the packet",
                    ev.width,
                    4.0 * h
                );
            }
            Some(GaussianPacket::new(ev.center, ev.width, ev.momentum).context("evolution packet")?)
        }
        PacketKind::BoundState => {
            pm.bound_state(0.0).context("evolution.packet = \"bound_state\"")?;
            None
        }
    };
    let initial = |g: Grid1D| -> Result<Sampled> {
        match &packet {
            Some(p) => Ok(p.sample(g)),
            None => {
                let vals = g.points().into_iter().map(|x| pm.bound_state(x)).collect::<susyprop::Result<_>>()?;
                Ok(Sampled::new(g, vals)?)
            }
        }
    };
    let phi0 = initial(grid)?;

    let mut snapshots = Vec::new();
    let mut times = Vec::new();
    for &t in &sorted(&ev.t) {
        let mut done: Vec<Snapshot> = Vec::new();
        let mut failures = Vec::new();
        for &method in &methods {
            let r = match method {
                Method::TheoremQuad => propagate_state(KernelSource::TheoremQuad, &pm, &phi0, t, &quad),
                Method::ClosedForm => propagate_state(KernelSource::ClosedForm, &pm, &phi0, t, &quad),
                Method::SpectralSum => propagate_state(
                    KernelSource::SpectralSum { n_terms: cfg.methods.spectral_terms },
                    &pm,
                    &phi0,
                    t,
                    &quad,
                ),
                Method::OracleCN => run_cn(&pm, grid, &initial, t, ev.cn_dt, ev.cn_refine),
            };
            match r {
                Ok(state) => done.push(Snapshot { t, method, state }),
                Err(e) => {
                    log::warn!("{method} at t = {t}: {e}");
                    failures.push(MethodFailure { method: method.to_string(), flag: flag_code(&e).into(), error: e.to_string() });
                }
            }
        }

        let mut pairwise = Vec::new();
        for i in 0..done.len() {
            for j in i + 1..done.len() {
                pairwise.push(PairL2 {
                    a: done[i].method.to_string(),
                    b: done[j].method.to_string(),
                    rel_l2: done[i].state.relative_l2_distance(&done[j].state)?,
                });
            }
        }
        let max_pairwise_rel_l2 = pairwise.iter().map(|p| p.rel_l2).reduce(f64::max);
        let modulus_drift = match ev.packet {
            PacketKind::BoundState => Some(
                done.iter()
                    .map(|s| {
                        let d = s
                            .state
                            .values
                            .iter()
                            .zip(&phi0.values)
                            .map(|(a, b)| (a.norm() - b.norm()).abs())
                            .fold(0.0, f64::max);
                        (s.method.to_string(), d)
                    })
                    .collect(),
            ),
            PacketKind::Gaussian => None,
        };
        times.push(TimeSummary { t, pairwise, max_pairwise_rel_l2, modulus_drift, failures });
        snapshots.extend(done);
    }

    Ok(EvolveReport {
        snapshots,
        summary: EvolveSummary {
            version: VERSION.into(),
            config_digest: cfg.digest(),
            example: cfg.example,
            packet: ev.packet,
            times,
        },
    })
}

/// CN on a grid refined by `refine`, sampled back onto `grid`.
fn run_cn(
    pm: &PartnerModel,
    grid: Grid1D,
    initial: &dyn Fn(Grid1D) -> Result<Sampled>,
    t: f64,
    dt: f64,
    refine: usize,
) -> susyprop::Result<Sampled> {
    let fine = grid.refine(refine)?;
    let v = fine.points().into_iter().map(|x| pm.potential(x)).collect::<susyprop::Result<Vec<_>>>()?;
    let v = Sampled::new(fine, v)?;
    let phi0 = initial(fine).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let cfg = EvolutionConfig::for_time(fine, t, dt)?;
    cn_evolve(&v, &phi0, &cfg)?.subsample(refine)
}

/// Rows ordered by `t`, then `x`, then method name.
pub fn evolve_csv(snapshots: &[Snapshot]) -> Result<Vec<u8>> {
    let mut rows = Vec::new();
    let mut start = 0;
    while start < snapshots.len() {
        let t = snapshots[start].t;
        let end = start + snapshots[start..].iter().take_while(|s| s.t == t).count();
        let group = &snapshots[start..end];
        let n = group[0].state.values.len();
        for i in 0..n {
            for s in group {
                let v = s.state.values[i];
                rows.push(vec![fmt_f64(t), fmt_f64(s.state.grid.point(i)), fmt_f64(v.re), fmt_f64(v.im), s.method.to_string()]);
            }
        }
        start = end;
    }
    csv_bytes(&["t", "x", "re_phi", "im_phi", "method"], rows)
}
