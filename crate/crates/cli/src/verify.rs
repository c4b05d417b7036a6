//! The verification suite behind `susyprop verify`.
//!
//! Every check runs on fixed reference scenarios (oscillator partner with
//! `C = 2i`, soliton partner with `a = 1, b = 2`), independent of the
//! scenario being emitted. Failures are data: a check that errors or panics
//! becomes a failed record, and the remaining checks still run.

use std::f64::consts::PI;
use std::panic::{self, AssertUnwindSafe};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use susyprop::grid::{Grid1D, Sampled};
use susyprop::kernel::{
    oscillator_kernel_closed, oscillator_kernel_closed_with, propagate_state, soliton_composition,
    soliton_kernel_closed, theorem_kernel, ClosedForm, KernelSource, OscPrefactor, Propagator, QuadratureSpec,
    SpectralSum, TheoremQuad,
};
use susyprop::model::JostPair;
use susyprop::oracle::{
    apply_h_grid, cn_evolve, derivative_grid, grid_spectrum, EvolutionConfig, GaussianPacket, StencilOrder,
};
use susyprop::susy::{bilinear_norm, bilinear_pairing, PartnerModel, TransformParams};

use crate::commands::{propagator_csv, KernelRow, VERSION};
use crate::config::ScenarioConfig;
use crate::output::{parse_f64, read_csv, write_atomic};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Goal {
    AtMost,
    AtLeast,
}

impl Goal {
    pub fn pass(self, metric: f64, tolerance: f64) -> bool {
        match self {
            Goal::AtMost => metric <= tolerance,
            Goal::AtLeast => metric >= tolerance,
        }
    }
}

pub struct Ctx {
    pub seed: u64,
}

struct Measured {
    metric: f64,
    detail: String,
}

fn measured(metric: f64, detail: impl Into<String>) -> Result<Measured> {
    Ok(Measured { metric, detail: detail.into() })
}

pub struct Check {
    pub name: &'static str,
    pub tolerance: f64,
    pub goal: Goal,
    run: fn(&Ctx) -> Result<Measured>,
}

const fn at_most(name: &'static str, tolerance: f64, run: fn(&Ctx) -> Result<Measured>) -> Check {
    Check { name, tolerance, goal: Goal::AtMost, run }
}

const fn at_least(name: &'static str, tolerance: f64, run: fn(&Ctx) -> Result<Measured>) -> Check {
    Check { name, tolerance, goal: Goal::AtLeast, run }
}

pub fn checks() -> Vec<Check> {
    vec![
        at_most("soliton_closed_vs_theorem", 1e-6, soliton_closed_vs_theorem),
        at_most("oscillator_packet_cross_method", 1e-3, oscillator_packet_cross_method),
        at_most("bound_state_phase", 1e-5, bound_state_phase),
        at_most("bound_state_isolation", 1e-5, bound_state_isolation),
        at_most("bilinear_norm_oscillator", 1e-8, bilinear_norm_oscillator),
        at_most("bilinear_norm_soliton", 1e-10, bilinear_norm_soliton),
        at_most("bilinear_orthonormality", 1e-8, bilinear_orthonormality),
        at_least("factorization_convergence", 12.0, factorization_convergence),
        at_most("intertwining", 1e-5, intertwining),
        at_most("wronskian_constancy", 1e-10, wronskian_constancy),
        at_least("pde_residual_convergence", 4.0, pde_residual_convergence),
        at_most("spectrum_real_parts", 1e-3, spectrum_real_parts),
        at_most("spectrum_imaginary_parts", 1e-6, spectrum_imaginary_parts),
        at_most("completeness_ratio", 1.0 - f64::EPSILON, completeness_ratio),
        at_most("spectral_eigenfunction_phase", 1e-8, spectral_eigenfunction_phase),
        at_most("soliton_semigroup", 1e-5, soliton_semigroup),
        at_most("short_time_limit", 0.02, short_time_limit),
        at_most("kernel_symmetry", 1e-8, kernel_symmetry),
        at_most("soliton_potential_origin", 1e-12, soliton_potential_origin),
        at_most("printed_prefactor_ratio", 1e-6, printed_prefactor_ratio),
        at_most("dataset_round_trip", 0.0, dataset_round_trip),
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub name: String,
    /// `null` when the check failed to produce a finite metric.
    pub metric: Option<f64>,
    pub tolerance: f64,
    pub goal: Goal,
    pub pass: bool,
    pub seconds: f64,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub version: String,
    pub config_digest: String,
    pub seed: u64,
    pub all_pass: bool,
    pub checks: Vec<CheckRecord>,
}

/// Checks whose name contains one of `filter` (all when empty).
pub fn select<'a>(all: &'a [Check], filter: &[String]) -> Vec<&'a Check> {
    all.iter()
        .filter(|c| filter.is_empty() || filter.iter().any(|f| c.name.contains(f.as_str())))
        .collect()
}

pub fn run(cfg: &ScenarioConfig) -> Result<VerifyReport> {
    let all = checks();
    for name in cfg.verify.tolerances.keys() {
        if !all.iter().any(|c| c.name == name) {
            bail!("verify.tolerances.{name}: no check with that name");
        }
    }
    let chosen = select(&all, &cfg.verify.filter);
    if chosen.is_empty() {
        bail!("verify.filter {:?} matches no check", cfg.verify.filter);
    }
    let ctx = Ctx { seed: cfg.verify.seed };
    let mut records = Vec::new();
    for check in chosen {
        let tolerance = cfg.verify.tolerances.get(check.name).copied().unwrap_or(check.tolerance);
        let start = Instant::now();
        let result = panic::catch_unwind(AssertUnwindSafe(|| (check.run)(&ctx)));
        let seconds = start.elapsed().as_secs_f64();
        let (metric, detail) = match result {
            Ok(Ok(m)) => (m.metric, m.detail),
            Ok(Err(e)) => (f64::NAN, format!("error: {e:#}")),
            Err(_) => (f64::NAN, "panicked".into()),
        };
        let pass = metric.is_finite() && check.goal.pass(metric, tolerance);
        log::info!("{} {}: {metric:.3e} ({seconds:.1} s)", if pass { "PASS" } else { "FAIL" }, check.name);
        records.push(CheckRecord {
            name: check.name.into(),
            metric: metric.is_finite().then_some(metric),
            tolerance,
            goal: check.goal,
            pass,
            seconds,
            detail,
        });
    }
    Ok(VerifyReport {
        version: VERSION.into(),
        config_digest: cfg.digest(),
        seed: ctx.seed,
        all_pass: records.iter().all(|r| r.pass),
        checks: records,
    })
}

// ---------------------------------------------------------------------------
// reference scenarios and helpers

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn osc() -> PartnerModel {
    PartnerModel::oscillator(c(0.0, 2.0)).expect("reference oscillator partner")
}

fn soliton() -> PartnerModel {
    PartnerModel::soliton(1.0, 2.0).expect("reference soliton partner")
}

fn soliton_shift(pm: &PartnerModel) -> Complex64 {
    match pm.factorization().params() {
        TransformParams::Soliton { c, .. } => c,
        TransformParams::Oscillator { .. } => unreachable!("soliton model"),
    }
}

fn sample(grid: Grid1D, f: impl Fn(f64) -> susyprop::Result<Complex64>) -> Result<Sampled> {
    let v = grid.points().into_iter().map(f).collect::<susyprop::Result<Vec<_>>>()?;
    Ok(Sampled::new(grid, v)?)
}

fn cn_reference(pm: &PartnerModel, packet: &GaussianPacket, grid: Grid1D, t: f64) -> Result<Sampled> {
    let fine = grid.refine(5)?;
    let v = sample(fine, |x| pm.potential(x))?;
    let cfg = EvolutionConfig::for_time(fine, t, 1e-3)?;
    Ok(cn_evolve(&v, &packet.sample(fine), &cfg)?.subsample(5)?)
}

// ---------------------------------------------------------------------------
// checks

fn soliton_closed_vs_theorem(_: &Ctx) -> Result<Measured> {
    let pm = soliton();
    let cc = soliton_shift(&pm);
    let q = QuadratureSpec::default();
    let mut worst: f64 = 0.0;
    for t in [0.3, 1.0] {
        for i in 0..11 {
            for j in 0..11 {
                let (x, y) = (-5.0 + i as f64, -5.0 + j as f64);
                let th = theorem_kernel(&pm, x, y, t, &q)?.value;
                let cf = soliton_kernel_closed(1.0, cc, x, y, t)?.value;
                worst = worst.max((th - cf).norm());
            }
        }
    }
    measured(worst, "max |ΔK| on the 11×11 lattice x, y ∈ {-5..5}, t ∈ {0.3, 1}")
}

fn oscillator_packet_cross_method(_: &Ctx) -> Result<Measured> {
    let pm = osc();
    let q = QuadratureSpec::default();
    let t = 0.7;
    let packet = GaussianPacket::new(1.0, 1.0, 0.0)?;
    let grid = Grid1D::new(-12.0, 12.0, 481)?;
    let phi0 = packet.sample(grid);
    let runs = [
        ("theorem", propagate_state(KernelSource::TheoremQuad, &pm, &phi0, t, &q)?),
        ("closed", propagate_state(KernelSource::ClosedForm, &pm, &phi0, t, &q)?),
        ("spectral", propagate_state(KernelSource::SpectralSum { n_terms: 64 }, &pm, &phi0, t, &q)?),
        ("cn", cn_reference(&pm, &packet, grid, t)?),
    ];
    let mut worst: f64 = 0.0;
    let mut parts = Vec::new();
    for i in 0..runs.len() {
        for j in i + 1..runs.len() {
            let d = runs[i].1.relative_l2_distance(&runs[j].1)?;
            parts.push(format!("{}/{}={d:.1e}", runs[i].0, runs[j].0));
            worst = worst.max(d);
        }
    }
    measured(worst, format!("max pairwise relative L2 at t = 0.7: {}", parts.join(", ")))
}

fn bound_state_phase(_: &Ctx) -> Result<Measured> {
    let q = QuadratureSpec::default();
    let t = 0.7;
    let mut worst: f64 = 0.0;
    for (pm, grid) in [(osc(), Grid1D::new(-12.0, 12.0, 481)?), (soliton(), Grid1D::new(-20.0, 20.0, 801)?)] {
        let phase = (-Complex64::i() * pm.alpha() * t).exp();
        let phi = sample(grid, |x| pm.bound_state(x))?;
        let expected = sample(grid, |x| Ok(phase * pm.bound_state(x)?))?;
        for source in [KernelSource::TheoremQuad, KernelSource::ClosedForm] {
            let out = propagate_state(source, &pm, &phi, t, &q)?;
            worst = worst.max(out.max_abs_diff(&expected)?);
        }
    }
    measured(worst, "sup |K_c φ_α - e^(-iαt) φ_α|, both partners, theorem and closed form")
}

fn bound_state_isolation(_: &Ctx) -> Result<Measured> {
    let q = QuadratureSpec::default();
    let mut worst: f64 = 0.0;
    for (pm, grid) in [(osc(), Grid1D::new(-12.0, 12.0, 481)?), (soliton(), Grid1D::new(-20.0, 20.0, 801)?)] {
        let phi = sample(grid, |x| pm.bound_state(x))?;
        let out = TheoremQuad::new(pm, q).continuum_only().propagate(&phi, 0.7)?;
        worst = worst.max(out.values.iter().map(|v| v.norm()).fold(0.0, f64::max));
    }
    measured(worst, "sup |K_L φ_α| with the bound-state term removed")
}

fn bilinear_norm_oscillator(_: &Ctx) -> Result<Measured> {
    let pm = osc();
    let q = QuadratureSpec::default().with_tolerances(1e-14, 1e-13).with_radius(14.0);
    let n = bilinear_norm(|x| pm.bound_state(x).unwrap(), &q)?;
    measured((n - 1.0).norm(), format!("∫φ_α² = {n:.12}"))
}

fn bilinear_norm_soliton(_: &Ctx) -> Result<Measured> {
    let pm = soliton();
    let q = QuadratureSpec::default().with_tolerances(1e-14, 1e-13).with_radius(40.0);
    let n = bilinear_norm(|x| pm.bound_state(x).unwrap(), &q)?;
    measured((n - 1.0).norm(), format!("∫φ_α² = {n:.14}"))
}

fn bilinear_orthonormality(_: &Ctx) -> Result<Measured> {
    let pm = osc();
    let f = pm.factorization();
    let q = QuadratureSpec::default().with_radius(20.0).with_tolerances(1e-13, 1e-12);
    let mut worst: f64 = 0.0;
    for m in 0..=10 {
        for n in m..=10 {
            let v = bilinear_pairing(
                |x| f.transformed_eigenfunction(m, x).unwrap(),
                |x| f.transformed_eigenfunction(n, x).unwrap(),
                &q,
            )?;
            worst = worst.max((v - if m == n { 1.0 } else { 0.0 }).norm());
        }
    }
    for n in 0..=6 {
        let v = bilinear_pairing(|x| f.bound_state(x).unwrap(), |x| f.transformed_eigenfunction(n, x).unwrap(), &q)?;
        worst = worst.max(v.norm());
    }
    measured(worst, "max |∫φ_mφ_n - δ_mn| for m, n ≤ 10 and |∫φ_αφ_n| for n ≤ 6")
}

fn test_function(x: f64) -> Complex64 {
    c(1.0 + 0.3 * x - 0.2 * x * x, 0.4 * x) * (-(x - 0.3) * (x - 0.3) / 2.0).exp()
}

/// Sup residuals of `LᵗL - h_0 + α` and `LLᵗ - h_c + α` at spacing `h`.
fn factorization_residuals(pm: &PartnerModel, h: f64) -> Result<(f64, f64)> {
    let f = pm.factorization();
    let alpha = pm.alpha();
    let grid = Grid1D::with_spacing(-6.0, 6.0, h)?;
    let g = Sampled::from_fn(grid, test_function);
    let apply = |s: &Sampled, sign: f64| -> Result<Sampled> {
        let ds = derivative_grid(s)?;
        let inner = s.trim(2)?;
        let mut values = Vec::with_capacity(ds.values.len());
        for ((x, d), v) in ds.grid.points().into_iter().zip(&ds.values).zip(&inner.values) {
            values.push(sign * d - f.log_derivative(x)? * v);
        }
        Ok(Sampled::new(ds.grid, values)?)
    };
    let ltl = apply(&apply(&g, 1.0)?, -1.0)?;
    let llt = apply(&apply(&g, -1.0)?, 1.0)?;
    let v0 = Sampled::from_fn(grid, |x| pm.base().potential(x).into());
    let vc = sample(grid, |x| pm.potential(x))?;
    let h0 = apply_h_grid(&v0, &g, StencilOrder::Fourth)?.trim(2)?;
    let hc = apply_h_grid(&vc, &g, StencilOrder::Fourth)?.trim(2)?;
    let gi = g.trim(4)?;
    let sup = |a: &Sampled, b: &Sampled| {
        a.values
            .iter()
            .zip(&b.values)
            .zip(&gi.values)
            .map(|((x, y), g)| (x - y + alpha * g).norm())
            .fold(0.0, f64::max)
    };
    Ok((sup(&ltl, &h0), sup(&llt, &hc)))
}

fn factorization_convergence(_: &Ctx) -> Result<Measured> {
    let mut worst = f64::INFINITY;
    let mut parts = Vec::new();
    for (name, pm) in [("oscillator", osc()), ("soliton", soliton())] {
        let (a1, b1) = factorization_residuals(&pm, 0.1)?;
        let (a2, b2) = factorization_residuals(&pm, 0.05)?;
        parts.push(format!("{name}: {:.1}, {:.1}", a1 / a2, b1 / b2));
        worst = worst.min(a1 / a2).min(b1 / b2);
    }
    measured(worst, format!("residual reduction per grid halving of LᵗL, LLᵗ ({})", parts.join("; ")))
}

fn intertwining_gap(pm: &PartnerModel, grid: Grid1D, t: f64) -> Result<f64> {
    let f = pm.factorization();
    let packet = GaussianPacket::new(1.0, 1.0, 0.0)?;
    let lg = sample(grid, |y| f.apply_l(packet.eval(y), packet.free_evolved_dx(y, 0.0), y))?;
    let lhs = ClosedForm::new(*pm, QuadratureSpec::default()).propagate(&lg, t)?;
    let base = pm.base();
    let g = packet.sample(grid);
    let mut diff = Vec::with_capacity(grid.len());
    for (i, x) in grid.points().into_iter().enumerate() {
        let mut k = Vec::with_capacity(grid.len());
        let mut dk = Vec::with_capacity(grid.len());
        for (y, gy) in grid.points().into_iter().zip(&g.values) {
            let (k0, dk0) = base.propagator_dx(x, y, t)?;
            k.push(k0 * gy);
            dk.push(dk0 * gy);
        }
        let rhs = f.apply_l(grid.integrate(&k), grid.integrate(&dk), x)?;
        diff.push(lhs.values[i] - rhs);
    }
    Ok(grid.l2_norm(&diff))
}

fn intertwining(_: &Ctx) -> Result<Measured> {
    let eo = intertwining_gap(&osc(), Grid1D::new(-12.0, 12.0, 481)?, 0.7)?;
    let es = intertwining_gap(&soliton(), Grid1D::new(-16.0, 16.0, 641)?, 0.7)?;
    measured(eo.max(es), format!("‖K_c Lg - L K_0 g‖₂: oscillator {eo:.1e}, soliton {es:.1e}"))
}

fn wronskian_constancy(_: &Ctx) -> Result<Measured> {
    let pair = JostPair::OscillatorNegHalf;
    let w = -(2.0 * PI).sqrt();
    let worst = (0..21)
        .map(|k| -3.0 + 0.3 * k as f64)
        .map(|x| ((pair.wronskian_at(x) - w) / w).norm())
        .fold(0.0, f64::max);
    measured(worst, "max relative deviation of W(f_l, f_r) from -√(2π) on [-3, 3]")
}

fn pde_residual(pm: &PartnerModel, kernel: &dyn Fn(f64, f64, f64) -> Result<Complex64>, h: f64, t: f64) -> Result<f64> {
    let mut worst: f64 = 0.0;
    let tau = h * h;
    for x in [-1.0, 0.3, 1.2] {
        for y in [-0.5, 0.8] {
            let k = |x: f64, t: f64| kernel(x, y, t);
            let dt = (k(x, t + tau)? - k(x, t - tau)?) / (2.0 * tau);
            let dxx = (-k(x + 2.0 * h, t)? + 16.0 * k(x + h, t)? - 30.0 * k(x, t)? + 16.0 * k(x - h, t)?
                - k(x - 2.0 * h, t)?)
                / (12.0 * h * h);
            let r = Complex64::i() * dt + dxx - pm.potential(x)? * k(x, t)?;
            worst = worst.max(r.norm());
        }
    }
    Ok(worst)
}

fn pde_residual_convergence(_: &Ctx) -> Result<Measured> {
    let ps = soliton();
    let cc = soliton_shift(&ps);
    let sol = |x: f64, y: f64, t: f64| Ok(soliton_kernel_closed(1.0, cc, x, y, t)?.value);
    let po = osc();
    let tight = QuadratureSpec::default().with_tolerances(1e-14, 1e-13);
    let oscf = |x: f64, y: f64, t: f64| Ok(oscillator_kernel_closed(c(0.0, 2.0), x, y, t, &tight)?.value);
    let mut worst = f64::INFINITY;
    let mut parts = Vec::new();
    for (name, pm, k) in [
        ("soliton", &ps, &sol as &dyn Fn(f64, f64, f64) -> Result<Complex64>),
        ("oscillator", &po, &oscf),
    ] {
        let mut r = Vec::new();
        for h in [0.1, 0.05, 0.025] {
            r.push(pde_residual(pm, k, h, 0.7)?);
        }
        parts.push(format!("{name}: {:.1e} → {:.1e} → {:.1e}", r[0], r[1], r[2]));
        worst = worst.min(r[0] / r[1]).min(r[1] / r[2]);
    }
    measured(worst, format!("reduction of max |(i∂_t - h_c)K_c| per halving ({})", parts.join("; ")))
}

fn lowest_grid_levels() -> Result<Vec<Complex64>> {
    let pm = osc();
    let grid = Grid1D::new(-12.0, 12.0, 1200)?;
    let v = sample(grid, |x| pm.potential(x))?;
    Ok(grid_spectrum(&v)?.into_iter().take(8).collect())
}

fn spectrum_real_parts(_: &Ctx) -> Result<Measured> {
    let ev = lowest_grid_levels()?;
    let worst = ev.iter().enumerate().map(|(n, z)| (z.re - (n as f64 - 0.5)).abs()).fold(0.0, f64::max);
    measured(worst, "max |Re λ_n - (n - 1/2)| over the 8 lowest levels, n = 1200 on [-12, 12]")
}

fn spectrum_imaginary_parts(_: &Ctx) -> Result<Measured> {
    let ev = lowest_grid_levels()?;
    let worst = ev.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
    measured(worst, "max |Im λ_n| over the 8 lowest levels")
}

fn completeness_ratio(_: &Ctx) -> Result<Measured> {
    let pm = osc();
    let grid = Grid1D::new(-12.0, 12.0, 481)?;
    let g = GaussianPacket::new(1.0, 1.0, 0.0)?.sample(grid);
    let mut errs = Vec::new();
    for n in [8, 16, 32, 64] {
        errs.push(SpectralSum::new(pm, n).propagate(&g, 0.0)?.relative_l2_distance(&g)?);
    }
    let worst = errs.windows(2).map(|w| w[1] / w[0]).fold(0.0, f64::max);
    let text = errs.iter().map(|e| format!("{e:.1e}")).collect::<Vec<_>>().join(" → ");
    measured(worst, format!("largest ratio of successive reconstruction errors, N = 8..64: {text}"))
}

fn spectral_eigenfunction_phase(_: &Ctx) -> Result<Measured> {
    let pm = osc();
    let grid = Grid1D::new(-12.0, 12.0, 481)?;
    let t = 0.7;
    let phi3 = sample(grid, |x| pm.eigenfunction(3, x))?;
    let expected = sample(grid, |x| Ok(c(0.0, -3.5 * t).exp() * pm.eigenfunction(3, x)?))?;
    let mut worst: f64 = 0.0;
    for n in [4, 16, 64] {
        worst = worst.max(SpectralSum::new(pm, n).propagate(&phi3, t)?.max_abs_diff(&expected)?);
    }
    measured(worst, "sup |S_N φ_3 - e^(-iE_3 t) φ_3| for N = 4, 16, 64")
}

fn soliton_semigroup(_: &Ctx) -> Result<Measured> {
    let pm = soliton();
    let cc = soliton_shift(&pm);
    let q = QuadratureSpec::default();
    let mut worst: f64 = 0.0;
    for x in [-2.0, -0.5, 0.0, 1.0, 2.5] {
        for y in [-1.5, 0.0, 0.7, 2.0] {
            let comp = soliton_composition(1.0, cc, x, y, 0.4, 0.6, &q)?.value;
            let direct = soliton_kernel_closed(1.0, cc, x, y, 1.0)?.value;
            worst = worst.max((comp - direct).norm());
        }
    }
    measured(worst, "max |∫K(x,z,0.4)K(z,y,0.6)dz - K(x,y,1)| on 5×4 points")
}

fn short_time_limit(_: &Ctx) -> Result<Measured> {
    let pm = soliton();
    let grid = Grid1D::new(-6.0, 8.0, 3501)?;
    let phi0 = GaussianPacket::new(1.0, 1.0, 0.0)?.sample(grid);
    let out = propagate_state(KernelSource::ClosedForm, &pm, &phi0, 0.01, &QuadratureSpec::default())?;
    measured(out.relative_l2_distance(&phi0)?, "‖Φ(0.01) - φ_0‖/‖φ_0‖ for the soliton partner")
}

fn kernel_symmetry(ctx: &Ctx) -> Result<Measured> {
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
    let q = QuadratureSpec::default();
    let mut worst: f64 = 0.0;
    for pm in [osc(), soliton()] {
        let methods: [Box<dyn Propagator>; 2] = [Box::new(TheoremQuad::new(pm, q)), Box::new(ClosedForm::new(pm, q))];
        for _ in 0..8 {
            let x = rng.random_range(-4.0..4.0);
            let y = rng.random_range(-4.0..4.0);
            let t = rng.random_range(0.1..2.0);
            for m in &methods {
                worst = worst.max((m.kernel(x, y, t)?.value - m.kernel(y, x, t)?.value).norm());
            }
        }
    }
    measured(worst, format!("max |K(x,y,t) - K(y,x,t)| at 8 random points per partner, seed {}", ctx.seed))
}

fn soliton_potential_origin(_: &Ctx) -> Result<Measured> {
    let pm = soliton();
    let cc = soliton_shift(&pm);
    let v = pm.potential(0.0)?;
    let expected = -2.0 / cc.cosh().powi(2);
    measured((v - expected).norm(), format!("V_c(0) = {v:.12}"))
}

/// Informational: the oscillator closed form with the Wronskian normalization
/// left out differs from the validated one by exactly `√(2π)`.
fn printed_prefactor_ratio(_: &Ctx) -> Result<Measured> {
    let pm = osc();
    let q = QuadratureSpec::default();
    let (x, y, t) = (0.4, -0.3, 0.7);
    let bound = pm.bound_state(x)? * pm.bound_state(y)? * (-Complex64::i() * pm.alpha() * t).exp();
    let good = oscillator_kernel_closed(c(0.0, 2.0), x, y, t, &q)?.value - bound;
    let raw = oscillator_kernel_closed_with(c(0.0, 2.0), x, y, t, &q, OscPrefactor::Unnormalized)?.value - bound;
    let ratio = raw / good;
    measured(
        (ratio / (2.0 * PI).sqrt() - 1.0).norm(),
        format!("unnormalized / normalized continuum part = {ratio:.10}, √(2π) = {:.10}", (2.0 * PI).sqrt()),
    )
}

fn dataset_round_trip(_: &Ctx) -> Result<Measured> {
    let pm = soliton();
    let q = QuadratureSpec::default();
    let mut rows = Vec::new();
    for (x, y, t) in [(0.1, -0.7, 0.3), (1.0 / 3.0, 2.0f64.sqrt(), 1.0)] {
        let k = ClosedForm::new(pm, q).kernel(x, y, t)?;
        rows.push(KernelRow {
            x,
            y,
            t,
            method: k.method,
            value: Some(k.value),
            err_est: k.err_estimate,
            flag: "ok".into(),
        });
    }
    let dir = std::env::temp_dir().join(format!("susyprop-roundtrip-{}", std::process::id()));
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("k.csv");
    write_atomic(&path, &propagator_csv(&rows)?)?;
    let (_, back) = read_csv(&path)?;
    std::fs::remove_dir_all(&dir).ok();
    let mut mismatches = 0usize;
    for (r, b) in rows.iter().zip(&back) {
        let v = r.value.context("value")?;
        for (orig, text) in [(r.x, &b[0]), (r.y, &b[1]), (r.t, &b[2]), (v.re, &b[4]), (v.im, &b[5])] {
            if parse_f64(text)?.to_bits() != orig.to_bits() {
                mismatches += 1;
            }
        }
    }
    measured(mismatches as f64, "number of reals that do not reload bit-identically")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_are_unique() {
        let all = checks();
        let mut names: Vec<_> = all.iter().map(|c| c.name).collect();
        names.sort();
        names.dedup();
        assert_eq!(names.len(), all.len());
    }

    #[test]
    fn filter_selects_by_substring() {
        let all = checks();
        let got: Vec<_> = select(&all, &["bilinear_norm".into()]).iter().map(|c| c.name).collect();
        assert_eq!(got, ["bilinear_norm_oscillator", "bilinear_norm_soliton"]);
        assert_eq!(select(&all, &[]).len(), all.len());
    }

    #[test]
    fn tightened_tolerance_fails() {
        let mut cfg = ScenarioConfig::default();
        cfg.verify.filter = vec!["spectrum_real".into()];
        assert!(run(&cfg).unwrap().all_pass);
        // below the O(h²) discretization error of the grid spectrum
        cfg.verify.tolerances.insert("spectrum_real_parts".into(), 1e-5);
        let rep = run(&cfg).unwrap();
        assert!(!rep.all_pass);
        assert_eq!(rep.checks[0].tolerance, 1e-5);
    }

    #[test]
    fn unknown_tolerance_name_is_rejected() {
        let mut cfg = ScenarioConfig::default();
        cfg.verify.tolerances.insert("nope".into(), 1.0);
        assert!(run(&cfg).is_err());
    }
}
