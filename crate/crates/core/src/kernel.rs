//! Propagators of the partner Hamiltonian `h_c`.
//!
//! Four routes to `K_c(x, y, t)`:
//!
//! * [`theorem_kernel`]: `K_c = L_x L_y ∫ K_0(x,z,t) G_0(z,y,α) dz` plus the
//!   bound-state term, for any factorization.
//! * [`soliton_kernel_closed`]: closed form over the free particle.
//! * [`oscillator_kernel_closed`]: the oscillator reduction with explicit
//!   `(C ± 1)/u(y)` prefactors.
//! * [`spectral_kernel`]: the truncated bilinear eigenfunction sum.
//!
//! # Splitting at `z = y`
//!
//! With `G_0(z,y) = f_l(min) f_r(max) / (-W)` the inner integral is
//!
//! ```text
//! (-W) I(y) = f_r(y) ∫_{-∞}^{y} K_0 f_l dz + f_l(y) ∫_{y}^{∞} K_0 f_r dz.
//! ```
//!
//! Differentiating in `y` produces `f_r(y) K_0(x,y) f_l(y)` from the upper
//! limit of the first integral and `-f_l(y) K_0(x,y) f_r(y)` from the lower
//! limit of the second. They cancel identically, so `L_y` only acts on the
//! prefactors: `(L f)(y) = W(u, f) / u(y)`, a constant Wronskian over `u`.
//! `L_x` moves under the integral and hits the closed-form `∂_x K_0`.

use std::f64::consts::{PI, SQRT_2};
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rayon::prelude::*;

pub use crate::quad::QuadratureSpec;

use crate::error::{Error, Result};
use crate::grid::{Grid1D, Sampled};
use crate::model::{BaseKind, BaseProblem, JostPair};
use crate::quad::{integrate, integrate_path, Estimate};
use crate::specfun::{cerf, erf, erfcx};
use crate::susy::{Case, PartnerModel, TransformParams};

/// How a kernel value was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    TheoremQuad,
    ClosedForm,
    SpectralSum,
    OracleCN,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::TheoremQuad => "TheoremQuad",
            Method::ClosedForm => "ClosedForm",
            Method::SpectralSum => "SpectralSum",
            Method::OracleCN => "OracleCN",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "TheoremQuad" => Ok(Method::TheoremQuad),
            "ClosedForm" => Ok(Method::ClosedForm),
            "SpectralSum" => Ok(Method::SpectralSum),
            "OracleCN" => Ok(Method::OracleCN),
            other => Err(Error::InvalidParameter(format!("unknown method `{other}`"))),
        }
    }
}

/// One kernel value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelEval {
    pub value: Complex64,
    /// Quadrature error plus the certified tail bound. For spectral sums it
    /// is the size of the last retained term, not a bound.
    pub err_estimate: f64,
    pub method: Method,
    /// Number of eigenfunction terms for a truncated spectral sum.
    pub truncation: Option<usize>,
}

// ---------------------------------------------------------------------------
// split-integral machinery shared by the theorem route and the oscillator
// closed form

/// Weights of the two half-line integrals and the `y`-dependent multipliers
/// in front of them.
trait SplitWeights: Sync {
    /// Weight decaying at `-∞`, integrated over `(-∞, y]`.
    fn left(&self, z: f64) -> Complex64;
    /// Weight decaying at `+∞`, integrated over `[y, ∞)`.
    fn right(&self, z: f64) -> Complex64;
    /// Multipliers of the left and right integrals.
    fn coeffs(&self, y: f64) -> Result<(Complex64, Complex64)>;
    /// `λ` with `|left(z)| ≤ |left(-R)| e^{-λ(|z|-R)}` for `z ≤ -R`, and the
    /// mirror statement for `right`.
    fn decay_rate(&self, r: f64) -> f64;
}

/// `f_l`, `f_r` of the base problem at `α`, with `L_y f = W(u,f)/u(y)`.
struct TheoremWeights<'a> {
    pm: &'a PartnerModel,
    jost: JostPair,
    wl: Complex64,
    wr: Complex64,
    neg_inv_w: Complex64,
}

impl<'a> TheoremWeights<'a> {
    fn new(pm: &'a PartnerModel) -> Result<Self> {
        let jost = pm.base().jost_pair(pm.alpha())?;
        let [u, du, _] = pm.factorization().u_derivs(0.0);
        let (fl, dfl) = jost.left(0.0);
        let (fr, dfr) = jost.right(0.0);
        Ok(Self {
            pm,
            jost,
            wl: u * dfl - du * fl,
            wr: u * dfr - du * fr,
            neg_inv_w: -jost.wronskian().inv(),
        })
    }
}

impl SplitWeights for TheoremWeights<'_> {
    fn left(&self, z: f64) -> Complex64 {
        self.jost.left(z).0
    }

    fn right(&self, z: f64) -> Complex64 {
        self.jost.right(z).0
    }

    fn coeffs(&self, y: f64) -> Result<(Complex64, Complex64)> {
        let inv_u = self.pm.factorization().inv_u(y)?;
        // (L f_r)(y) multiplies the integral against f_l and vice versa
        Ok((self.wr * inv_u * self.neg_inv_w, self.wl * inv_u * self.neg_inv_w))
    }

    fn decay_rate(&self, r: f64) -> f64 {
        match self.jost {
            JostPair::Free { kappa } => kappa.im,
            JostPair::OscillatorNegHalf => 0.5 * r,
        }
    }
}

/// Normalization of the two prefactors in the oscillator reduction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OscPrefactor {
    /// `∓(C ± 1) / (2 u(y))`, which includes `1/(-W)`.
    Normalized,
    /// `∓√(π/2) (C ± 1) / u(y)`: the same expression without the Wronskian
    /// normalization. Kept to quantify that discrepancy, never used for
    /// results.
    Unnormalized,
}

/// `g_± = exp(z²/4)(1 ± erf(z/√2))` with `∓(C ± 1)/(2u(y))` in front.
struct OscWeights<'a> {
    pm: &'a PartnerModel,
    c: Complex64,
    scale: f64,
}

fn g_plus(z: f64) -> f64 {
    if z < 0.0 {
        (-0.25 * z * z).exp() * erfcx(-z / SQRT_2)
    } else {
        (0.25 * z * z).exp() * (1.0 + erf(z / SQRT_2))
    }
}

impl SplitWeights for OscWeights<'_> {
    fn left(&self, z: f64) -> Complex64 {
        g_plus(z).into()
    }

    fn right(&self, z: f64) -> Complex64 {
        g_plus(-z).into()
    }

    fn coeffs(&self, y: f64) -> Result<(Complex64, Complex64)> {
        let inv_u = self.pm.factorization().inv_u(y)?;
        let s = self.scale;
        Ok((-(self.c + 1.0) * inv_u * s, (self.c - 1.0) * inv_u * s))
    }

    fn decay_rate(&self, r: f64) -> f64 {
        0.5 * r
    }
}

/// `(L_x K_0)(x, z, t)` for fixed `x` and `t`.
struct RowContext<'a> {
    base: BaseProblem,
    x: f64,
    t: f64,
    d: Complex64,
    weights: &'a dyn SplitWeights,
    quad: QuadratureSpec,
}

// largest radius tried for the oscillator: exp(R²/4) must stay finite
const OSC_MAX_RADIUS: f64 = 40.0;
const FREE_MAX_RADIUS: f64 = 400.0;

impl<'a> RowContext<'a> {
    fn new(pm: &PartnerModel, weights: &'a dyn SplitWeights, x: f64, t: f64, quad: &QuadratureSpec) -> Result<Self> {
        quad.validate()?;
        pm.base().check_time(t)?;
        Ok(Self {
            base: *pm.base(),
            x,
            t,
            d: pm.factorization().log_derivative(x)?,
            weights,
            quad: *quad,
        })
    }

    fn lx_k0(&self, z: f64) -> Complex64 {
        let (k, dk) = self.base.propagator_dx_unchecked(self.x, z, self.t);
        dk - self.d * k
    }

    fn initial_radius(&self, y_extent: f64) -> f64 {
        let r = match self.base.kind() {
            BaseKind::Free => self.x.abs().max(y_extent) + 10.0 + 4.0 * self.t.abs().sqrt(),
            BaseKind::Oscillator => self.quad.truncation_radius,
        };
        r.max(self.x.abs().max(y_extent) + 1.0)
    }

    /// Bound on the neglected `|z| > R` contributions to `K`, given the
    /// largest left/right multipliers.
    fn tail_bound(&self, r: f64, cl: f64, cr: f64) -> f64 {
        let (cs, sn) = match self.base.kind() {
            BaseKind::Free => (1.0, self.t),
            BaseKind::Oscillator => (self.t.cos(), self.t.sin()),
        };
        let modulus = self
            .base
            .propagator_modulus(self.t)
            .expect("time checked on construction");
        // |L_x K_0| ≤ |K_0| (p + q|z|) on the tails
        let q = 1.0 / (2.0 * sn.abs());
        let p = (self.x * cs).abs() * q + self.d.norm();
        let lam = self.weights.decay_rate(r);
        let env = (p + q * r) / lam + q / (lam * lam);
        modulus * env * (cl * self.weights.left(-r).norm() + cr * self.weights.right(r).norm())
    }

    /// Smallest tried radius whose tail bound is below a tenth of `abs_tol`.
    fn radius(&self, y_extent: f64, cl: f64, cr: f64) -> (f64, f64) {
        let cap = match self.base.kind() {
            BaseKind::Free => FREE_MAX_RADIUS,
            BaseKind::Oscillator => OSC_MAX_RADIUS,
        };
        let mut r = self.initial_radius(y_extent);
        let mut bound = self.tail_bound(r, cl, cr);
        while bound > 0.1 * self.quad.abs_tol && r < cap {
            r = (r + 1.0).min(cap);
            bound = self.tail_bound(r, cl, cr);
        }
        if bound > 0.1 * self.quad.abs_tol {
            log::warn!("tail bound {bound:.3e} at the largest radius {r}");
        }
        (r, bound)
    }

    fn scaled(&self, coeff: f64) -> QuadratureSpec {
        let mut q = self.quad;
        q.abs_tol = 0.5 * self.quad.abs_tol / coeff.max(f64::MIN_POSITIVE);
        q
    }

    fn integrate_left(&self, a: f64, b: f64, spec: &QuadratureSpec) -> Result<Estimate> {
        integrate(|z| self.lx_k0(z) * self.weights.left(z), a, b, spec)
    }

    fn integrate_right(&self, a: f64, b: f64, spec: &QuadratureSpec) -> Result<Estimate> {
        integrate(|z| self.lx_k0(z) * self.weights.right(z), a, b, spec)
    }

    /// Continuum part `K_L(x, y, t)` at a single `y`.
    fn point(&self, y: f64) -> Result<(Complex64, f64)> {
        let (cl, cr) = self.weights.coeffs(y)?;
        let (r, tail) = self.radius(y.abs(), cl.norm(), cr.norm());
        let a = self.integrate_left(-r, y, &self.scaled(cl.norm()))?;
        let b = self.integrate_right(y, r, &self.scaled(cr.norm()))?;
        let value = cl * a.value + cr * b.value;
        Ok((value, cl.norm() * a.error + cr.norm() * b.error + tail))
    }

    /// Continuum part on every grid point, by cumulative cell integrals.
    fn row(&self, ys: &Grid1D, coeffs: &[(Complex64, Complex64)]) -> Result<Vec<Complex64>> {
        let pts = ys.points();
        let n = pts.len();
        let cl_max = coeffs.iter().map(|c| c.0.norm()).fold(0.0, f64::max);
        let cr_max = coeffs.iter().map(|c| c.1.norm()).fold(0.0, f64::max);
        let extent = pts[0].abs().max(pts[n - 1].abs());
        let (r, _) = self.radius(extent, cl_max, cr_max);

        let cell_spec = {
            let mut q = self.scaled(cl_max.max(cr_max));
            q.abs_tol *= ys.spacing() / (2.0 * r);
            q
        };
        let mut a = vec![Complex64::new(0.0, 0.0); n];
        let mut b = vec![Complex64::new(0.0, 0.0); n];
        a[0] = self.integrate_left(-r, pts[0], &self.scaled(cl_max))?.value;
        for j in 0..n - 1 {
            a[j + 1] = a[j] + self.integrate_left(pts[j], pts[j + 1], &cell_spec)?.value;
        }
        b[n - 1] = self.integrate_right(pts[n - 1], r, &self.scaled(cr_max))?.value;
        for j in (0..n - 1).rev() {
            b[j] = b[j + 1] + self.integrate_right(pts[j], pts[j + 1], &cell_spec)?.value;
        }
        Ok((0..n).map(|j| coeffs[j].0 * a[j] + coeffs[j].1 * b[j]).collect())
    }
}

fn bound_term(pm: &PartnerModel, x: f64, y: f64, t: f64) -> Result<Complex64> {
    match pm.factorization().case() {
        Case::AddedLevel => {
            let phase = (-Complex64::i() * pm.alpha() * t).exp();
            Ok(pm.bound_state(x)? * pm.bound_state(y)? * phase)
        }
        Case::Isospectral => Ok(Complex64::new(0.0, 0.0)),
    }
}

// ---------------------------------------------------------------------------
// public pointwise kernels

/// `K_c(x, y, t)` from the transformation integral.
pub fn theorem_kernel(pm: &PartnerModel, x: f64, y: f64, t: f64, quad: &QuadratureSpec) -> Result<KernelEval> {
    let (kl, eval) = theorem_kernel_split(pm, x, y, t, quad)?;
    Ok(KernelEval {
        value: kl + eval.value,
        ..eval
    })
}

/// `(K_L, bound-state term)` separately; the `KernelEval` carries the
/// bound-state term as its value.
fn theorem_kernel_split(
    pm: &PartnerModel,
    x: f64,
    y: f64,
    t: f64,
    quad: &QuadratureSpec,
) -> Result<(Complex64, KernelEval)> {
    let weights = TheoremWeights::new(pm)?;
    let ctx = RowContext::new(pm, &weights, x, t, quad)?;
    let (kl, err) = ctx.point(y)?;
    Ok((
        kl,
        KernelEval {
            value: bound_term(pm, x, y, t)?,
            err_estimate: err,
            method: Method::TheoremQuad,
            truncation: None,
        },
    ))
}

/// Continuum part `K_L = K_c - φ_α(x) φ_α(y) e^{-iαt}` of [`theorem_kernel`].
pub fn theorem_kernel_continuum(
    pm: &PartnerModel,
    x: f64,
    y: f64,
    t: f64,
    quad: &QuadratureSpec,
) -> Result<KernelEval> {
    let (kl, eval) = theorem_kernel_split(pm, x, y, t, quad)?;
    Ok(KernelEval { value: kl, ..eval })
}

/// Complex one-soliton kernel
/// `K_0 + a e^{ia²t} / (4 u(x) u(y)) [erf_+ + erf_-]`,
/// `erf_± = erf(a√(it) ± (x-y)/(2√(it)))`, `u = cosh(a x + c)`.
pub fn soliton_kernel_closed(a: f64, c: Complex64, x: f64, y: f64, t: f64) -> Result<KernelEval> {
    let value = soliton_kernel_complex(a, c, x.into(), y.into(), t)?;
    Ok(KernelEval {
        value,
        err_estimate: 0.0,
        method: Method::ClosedForm,
        truncation: None,
    })
}

/// [`soliton_kernel_closed`] continued to complex `x`, `y`.
pub fn soliton_kernel_complex(a: f64, c: Complex64, x: Complex64, y: Complex64, t: f64) -> Result<Complex64> {
    BaseProblem::free().check_time(t)?;
    let sit = Complex64::new(0.0, t).sqrt();
    let d = x - y;
    let k0 = (Complex64::i() * d * d / (4.0 * t)).exp() / (4.0 * PI * sit * sit).sqrt();
    let w = d / (2.0 * sit);
    let bracket = cerf(a * sit + w)? + cerf(a * sit - w)?;
    let ux = (a * x + c).cosh();
    let uy = (a * y + c).cosh();
    let phase = Complex64::new(0.0, a * a * t).exp();
    Ok(k0 + a * phase * bracket / (4.0 * ux * uy))
}

/// Oscillator partner kernel from the `(C ± 1)/u(y)` reduction.
pub fn oscillator_kernel_closed(c: Complex64, x: f64, y: f64, t: f64, quad: &QuadratureSpec) -> Result<KernelEval> {
    oscillator_kernel_closed_with(c, x, y, t, quad, OscPrefactor::Normalized)
}

/// [`oscillator_kernel_closed`] with a selectable prefactor normalization.
pub fn oscillator_kernel_closed_with(
    c: Complex64,
    x: f64,
    y: f64,
    t: f64,
    quad: &QuadratureSpec,
    prefactor: OscPrefactor,
) -> Result<KernelEval> {
    let pm = PartnerModel::oscillator(c)?;
    let weights = OscWeights::new(&pm, c, prefactor);
    let ctx = RowContext::new(&pm, &weights, x, t, quad)?;
    let (kl, err) = ctx.point(y)?;
    Ok(KernelEval {
        value: kl + bound_term(&pm, x, y, t)?,
        err_estimate: err,
        method: Method::ClosedForm,
        truncation: None,
    })
}

impl<'a> OscWeights<'a> {
    fn new(pm: &'a PartnerModel, c: Complex64, prefactor: OscPrefactor) -> Self {
        let scale = match prefactor {
            OscPrefactor::Normalized => 0.5,
            OscPrefactor::Unnormalized => (PI / 2.0).sqrt(),
        };
        Self { pm, c, scale }
    }
}

/// Truncated bilinear sum `Σ_{n<N} φ_n(x) φ_n(y) e^{-iE_n t}` plus the
/// bound-state term. Converges only distributionally for real `t`.
pub fn spectral_kernel(pm: &PartnerModel, n_terms: usize, x: f64, y: f64, t: f64) -> Result<KernelEval> {
    if n_terms == 0 {
        return Err(Error::InvalidParameter("spectral sum needs at least one term".into()));
    }
    let fx = pm.factorization().transformed_eigenfunctions(n_terms - 1, x)?;
    let fy = pm.factorization().transformed_eigenfunctions(n_terms - 1, y)?;
    let mut value = bound_term(pm, x, y, t)?;
    let mut last = 0.0;
    for (n, (a, b)) in fx.iter().zip(&fy).enumerate() {
        let term = a * b * Complex64::new(0.0, -(n as f64 + 0.5) * t).exp();
        value += term;
        last = term.norm();
    }
    Ok(KernelEval {
        value,
        err_estimate: last,
        method: Method::SpectralSum,
        truncation: Some(n_terms),
    })
}

// ---------------------------------------------------------------------------
// propagators acting on sampled states

/// A kernel that can act on sampled states.
pub trait Propagator: Sync {
    fn method(&self) -> Method;

    fn kernel(&self, x: f64, y: f64, t: f64) -> Result<KernelEval>;

    /// `K(x, y_j, t)` for all grid points `y_j`.
    fn kernel_row(&self, x: f64, ys: &Grid1D, t: f64) -> Result<Vec<Complex64>> {
        ys.points()
            .into_iter()
            .map(|y| self.kernel(x, y, t).map(|k| k.value))
            .collect()
    }

    /// `Φ(x_i) = ∫ K(x_i, y, t) φ_0(y) dy` by the trapezoidal rule over the
    /// samples, which is spectrally accurate for smooth decaying integrands.
    fn propagate(&self, phi0: &Sampled, t: f64) -> Result<Sampled> {
        let grid = phi0.grid;
        let values = grid
            .points()
            .into_par_iter()
            .map(|x| {
                let row = self.kernel_row(x, &grid, t)?;
                let prod: Vec<Complex64> = row.iter().zip(&phi0.values).map(|(k, p)| k * p).collect();
                Ok(grid.integrate(&prod))
            })
            .collect::<Result<Vec<_>>>()?;
        Sampled::new(grid, values)
    }
}

/// [`theorem_kernel`] as a propagator.
#[derive(Debug, Clone, Copy)]
pub struct TheoremQuad {
    pub pm: PartnerModel,
    pub quad: QuadratureSpec,
    /// Drop the `φ_α φ_α e^{-iαt}` term and keep only `K_L`.
    pub continuum_only: bool,
}

impl TheoremQuad {
    pub fn new(pm: PartnerModel, quad: QuadratureSpec) -> Self {
        Self {
            pm,
            quad,
            continuum_only: false,
        }
    }

    pub fn continuum_only(mut self) -> Self {
        self.continuum_only = true;
        self
    }
}

impl Propagator for TheoremQuad {
    fn method(&self) -> Method {
        Method::TheoremQuad
    }

    fn kernel(&self, x: f64, y: f64, t: f64) -> Result<KernelEval> {
        if self.continuum_only {
            theorem_kernel_continuum(&self.pm, x, y, t, &self.quad)
        } else {
            theorem_kernel(&self.pm, x, y, t, &self.quad)
        }
    }

    fn kernel_row(&self, x: f64, ys: &Grid1D, t: f64) -> Result<Vec<Complex64>> {
        let weights = TheoremWeights::new(&self.pm)?;
        let ctx = RowContext::new(&self.pm, &weights, x, t, &self.quad)?;
        let pts = ys.points();
        let coeffs = pts.iter().map(|&y| weights.coeffs(y)).collect::<Result<Vec<_>>>()?;
        let mut row = ctx.row(ys, &coeffs)?;
        if !self.continuum_only {
            for (k, &y) in row.iter_mut().zip(&pts) {
                *k += bound_term(&self.pm, x, y, t)?;
            }
        }
        Ok(row)
    }
}

/// The closed-form kernel of the model's transformation family.
#[derive(Debug, Clone, Copy)]
pub struct ClosedForm {
    pub pm: PartnerModel,
    pub quad: QuadratureSpec,
}

impl ClosedForm {
    pub fn new(pm: PartnerModel, quad: QuadratureSpec) -> Self {
        Self { pm, quad }
    }
}

impl Propagator for ClosedForm {
    fn method(&self) -> Method {
        Method::ClosedForm
    }

    fn kernel(&self, x: f64, y: f64, t: f64) -> Result<KernelEval> {
        match self.pm.factorization().params() {
            TransformParams::Soliton { a, c, .. } => soliton_kernel_closed(a, c, x, y, t),
            TransformParams::Oscillator { c } => oscillator_kernel_closed(c, x, y, t, &self.quad),
        }
    }

    fn kernel_row(&self, x: f64, ys: &Grid1D, t: f64) -> Result<Vec<Complex64>> {
        match self.pm.factorization().params() {
            TransformParams::Soliton { a, c, .. } => ys
                .points()
                .into_iter()
                .map(|y| soliton_kernel_complex(a, c, x.into(), y.into(), t))
                .collect(),
            TransformParams::Oscillator { c } => {
                let weights = OscWeights::new(&self.pm, c, OscPrefactor::Normalized);
                let ctx = RowContext::new(&self.pm, &weights, x, t, &self.quad)?;
                let pts = ys.points();
                let coeffs = pts.iter().map(|&y| weights.coeffs(y)).collect::<Result<Vec<_>>>()?;
                let row = ctx.row(ys, &coeffs)?;
                row.into_iter()
                    .zip(pts)
                    .map(|(k, y)| Ok(k + bound_term(&self.pm, x, y, t)?))
                    .collect()
            }
        }
    }
}

/// [`spectral_kernel`] as a propagator. Acting on a state it is evaluated
/// through expansion coefficients `c_n = ∫ φ_n φ_0 dy`, which is the same
/// trapezoidal sum reordered.
#[derive(Debug, Clone, Copy)]
pub struct SpectralSum {
    pub pm: PartnerModel,
    pub n_terms: usize,
}

impl SpectralSum {
    pub fn new(pm: PartnerModel, n_terms: usize) -> Self {
        Self { pm, n_terms }
    }

    /// `φ_0 ..= φ_{N-1}` and `φ_α` (if any) on the grid, row-major by level.
    fn basis(&self, grid: &Grid1D) -> Result<(Vec<Vec<Complex64>>, Option<Vec<Complex64>>)> {
        if self.n_terms == 0 {
            return Err(Error::InvalidParameter("spectral sum needs at least one term".into()));
        }
        let pts = grid.points();
        let per_point = pts
            .iter()
            .map(|&x| self.pm.factorization().transformed_eigenfunctions(self.n_terms - 1, x))
            .collect::<Result<Vec<_>>>()?;
        let levels = (0..self.n_terms)
            .map(|n| per_point.iter().map(|v| v[n]).collect())
            .collect();
        let bound = match self.pm.factorization().case() {
            Case::AddedLevel => Some(pts.iter().map(|&x| self.pm.bound_state(x)).collect::<Result<Vec<_>>>()?),
            Case::Isospectral => None,
        };
        Ok((levels, bound))
    }

    /// Bilinear expansion coefficients of `phi0`: `(c_n, c_α)`.
    pub fn coefficients(&self, phi0: &Sampled) -> Result<(Vec<Complex64>, Option<Complex64>)> {
        let grid = phi0.grid;
        let (levels, bound) = self.basis(&grid)?;
        let pair = |f: &[Complex64]| {
            let prod: Vec<Complex64> = f.iter().zip(&phi0.values).map(|(a, b)| a * b).collect();
            grid.integrate(&prod)
        };
        Ok((levels.iter().map(|f| pair(f)).collect(), bound.as_deref().map(pair)))
    }
}

impl Propagator for SpectralSum {
    fn method(&self) -> Method {
        Method::SpectralSum
    }

    fn kernel(&self, x: f64, y: f64, t: f64) -> Result<KernelEval> {
        spectral_kernel(&self.pm, self.n_terms, x, y, t)
    }

    fn propagate(&self, phi0: &Sampled, t: f64) -> Result<Sampled> {
        let grid = phi0.grid;
        let (levels, bound) = self.basis(&grid)?;
        let pair = |f: &[Complex64]| {
            let prod: Vec<Complex64> = f.iter().zip(&phi0.values).map(|(a, b)| a * b).collect();
            grid.integrate(&prod)
        };
        let mut out = vec![Complex64::new(0.0, 0.0); grid.len()];
        for (n, f) in levels.iter().enumerate() {
            let cn = pair(f) * Complex64::new(0.0, -(n as f64 + 0.5) * t).exp();
            for (o, v) in out.iter_mut().zip(f) {
                *o += cn * v;
            }
        }
        if let Some(f) = bound {
            let ca = pair(&f) * (-Complex64::i() * self.pm.alpha() * t).exp();
            for (o, v) in out.iter_mut().zip(&f) {
                *o += ca * v;
            }
        }
        Sampled::new(grid, out)
    }
}

/// The untransformed base kernel `K_0`.
#[derive(Debug, Clone, Copy)]
pub struct BaseKernel {
    pub base: BaseProblem,
}

impl Propagator for BaseKernel {
    fn method(&self) -> Method {
        Method::ClosedForm
    }

    fn kernel(&self, x: f64, y: f64, t: f64) -> Result<KernelEval> {
        Ok(KernelEval {
            value: self.base.propagator(x, y, t)?,
            err_estimate: 0.0,
            method: Method::ClosedForm,
            truncation: None,
        })
    }
}

/// Which kernel [`propagate_state`] uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelSource {
    TheoremQuad,
    ClosedForm,
    SpectralSum { n_terms: usize },
}

impl KernelSource {
    pub fn method(&self) -> Method {
        match self {
            KernelSource::TheoremQuad => Method::TheoremQuad,
            KernelSource::ClosedForm => Method::ClosedForm,
            KernelSource::SpectralSum { .. } => Method::SpectralSum,
        }
    }
}

/// Rejects states with non-negligible density at the grid ends, which
/// bounds the mass outside the grid for exponentially decaying states.
pub fn check_tail_mass(phi0: &Sampled, abs_tol: f64) -> Result<()> {
    let edge = phi0.values[0]
        .norm_sqr()
        .max(phi0.values[phi0.values.len() - 1].norm_sqr());
    if edge >= abs_tol {
        return Err(Error::DomainTooSmall {
            amplitude: edge,
            limit: abs_tol,
        });
    }
    Ok(())
}

/// `Φ(x, t) = ∫ K_c(x, y, t) φ_0(y) dy` on the grid of `phi0`.
pub fn propagate_state(
    source: KernelSource,
    pm: &PartnerModel,
    phi0: &Sampled,
    t: f64,
    quad: &QuadratureSpec,
) -> Result<Sampled> {
    check_tail_mass(phi0, quad.abs_tol)?;
    match source {
        KernelSource::TheoremQuad => TheoremQuad::new(*pm, *quad).propagate(phi0, t),
        KernelSource::ClosedForm => ClosedForm::new(*pm, *quad).propagate(phi0, t),
        KernelSource::SpectralSum { n_terms } => SpectralSum::new(*pm, n_terms).propagate(phi0, t),
    }
}

/// `∫ K_0(x, y, t) φ_0(y) dy` with no transformation applied.
pub fn propagate_base(base: &BaseProblem, phi0: &Sampled, t: f64, abs_tol: f64) -> Result<Sampled> {
    check_tail_mass(phi0, abs_tol)?;
    BaseKernel { base: *base }.propagate(phi0, t)
}

// ---------------------------------------------------------------------------
// composition

/// Polyline `-z0 - e^{iπ/4} s, -z0, z0, z0 + e^{iπ/4} s` with
/// `z0 = max(|x|, |y|) + 2`. Along the rays free chirps `exp(i z²/4t)` turn
/// into Gaussians, so conditionally convergent real-line integrals become
/// absolutely convergent.
pub fn rotated_contour(x: f64, y: f64, ray: f64) -> [Complex64; 4] {
    let z0 = x.abs().max(y.abs()) + 2.0;
    let rot = Complex64::from_polar(ray, PI / 4.0);
    [
        Complex64::new(-z0, 0.0) - rot,
        Complex64::new(-z0, 0.0),
        Complex64::new(z0, 0.0),
        Complex64::new(z0, 0.0) + rot,
    ]
}

/// `∫ K_c(x, z, t1) K_c(z, y, t2) dz` for the soliton kernel, on the rotated
/// contour. The poles of `1/u` sit on the imaginary axis, away from the path
/// and from the regions swept by the rotation.
pub fn soliton_composition(
    a: f64,
    c: Complex64,
    x: f64,
    y: f64,
    t1: f64,
    t2: f64,
    quad: &QuadratureSpec,
) -> Result<Estimate> {
    // the slowest factor along the rays is 1/u(z) ~ exp(-a s/√2)
    let ray = SQRT_2 * (1e2 / quad.abs_tol).ln() / a;
    let path = rotated_contour(x, y, ray);
    let f = |z: Complex64| {
        let k1 = soliton_kernel_complex(a, c, x.into(), z, t1);
        let k2 = soliton_kernel_complex(a, c, z, y.into(), t2);
        match (k1, k2) {
            (Ok(k1), Ok(k2)) => k1 * k2,
            _ => Complex64::new(f64::NAN, f64::NAN),
        }
    };
    integrate_path(f, &path, quad)
}
