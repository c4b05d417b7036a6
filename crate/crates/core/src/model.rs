//! Exactly solvable base problems: the free particle and the oscillator
//! `h_0 = -d²/dx² + x²/4`, with their propagators `K_0` and Green's functions
//! `G_0`.
//!
//! Green's functions are built from a pair of solutions `f_l`, `f_r` of
//! `(h_0 - E) f = 0` that decay to the left and to the right:
//!
//! ```text
//! G_0(x, y, E) = f_l(min(x, y)) f_r(max(x, y)) / (-W),   W = f_l f_r' - f_l' f_r
//! ```
//!
//! This is the kernel of the resolvent `(h_0 - E)^(-1)`, so `∂_x G_0` jumps by
//! `-1` across `x = y`.

use std::f64::consts::{PI, SQRT_2};

use num_complex::Complex64;

pub use crate::grid::Grid1D;

use crate::error::{Error, Result};
use crate::specfun::{erf, erfcx, osc_eigenfunction, osc_eigenfunction_deriv};

/// Guard on `|t|` (free particle) and `|sin t|` (oscillator).
pub const DEFAULT_SINGULAR_GUARD: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BaseKind {
    Free,
    Oscillator,
}

/// A real, exactly solvable Hamiltonian `h_0 = -d²/dx² + V_0(x)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaseProblem {
    kind: BaseKind,
    singular_guard: f64,
}

impl BaseProblem {
    pub fn free() -> Self {
        Self {
            kind: BaseKind::Free,
            singular_guard: DEFAULT_SINGULAR_GUARD,
        }
    }

    pub fn oscillator() -> Self {
        Self {
            kind: BaseKind::Oscillator,
            singular_guard: DEFAULT_SINGULAR_GUARD,
        }
    }

    pub fn with_singular_guard(mut self, guard: f64) -> Self {
        self.singular_guard = guard;
        self
    }

    pub fn kind(&self) -> BaseKind {
        self.kind
    }

    pub fn singular_guard(&self) -> f64 {
        self.singular_guard
    }

    pub fn potential(&self, x: f64) -> f64 {
        match self.kind {
            BaseKind::Free => 0.0,
            BaseKind::Oscillator => 0.25 * x * x,
        }
    }

    /// `E_n = n + 1/2` for the oscillator; `None` for the free particle.
    pub fn energy(&self, n: usize) -> Option<f64> {
        match self.kind {
            BaseKind::Free => None,
            BaseKind::Oscillator => Some(n as f64 + 0.5),
        }
    }

    /// `(ψ_n(x), ψ_n'(x))`.
    pub fn eigenfunction(&self, n: usize, x: f64) -> Result<(f64, f64)> {
        match self.kind {
            BaseKind::Free => Err(Error::ContinuousSpectrum),
            BaseKind::Oscillator => Ok((osc_eigenfunction(n, x), osc_eigenfunction_deriv(n, x))),
        }
    }

    /// Checks that `t` is a regular time for `K_0`. The oscillator is
    /// restricted to the first branch cell `0 < t < π`.
    pub fn check_time(&self, t: f64) -> Result<()> {
        if !t.is_finite() {
            return Err(Error::InvalidParameter(format!("time must be finite, got {t}")));
        }
        match self.kind {
            BaseKind::Free => {
                if t.abs() <= self.singular_guard {
                    return Err(Error::SingularTime {
                        t,
                        guard: self.singular_guard,
                    });
                }
            }
            BaseKind::Oscillator => {
                if t.sin().abs() <= self.singular_guard {
                    return Err(Error::SingularTime {
                        t,
                        guard: self.singular_guard,
                    });
                }
                if !(t > 0.0 && t < PI) {
                    return Err(Error::TimeOutOfRange { t, lo: 0.0, hi: PI });
                }
            }
        }
        Ok(())
    }

    /// `K_0(x, y, t)`.
    pub fn propagator(&self, x: f64, y: f64, t: f64) -> Result<Complex64> {
        self.propagator_dx(x, y, t).map(|(k, _)| k)
    }

    /// `(K_0, ∂_x K_0)` at `(x, y, t)`.
    pub fn propagator_dx(&self, x: f64, y: f64, t: f64) -> Result<(Complex64, Complex64)> {
        self.check_time(t)?;
        Ok(self.propagator_dx_unchecked(x, y, t))
    }

    /// `(K_0, ∂_x K_0)` without the time guard; callers check `t` once.
    pub(crate) fn propagator_dx_unchecked(&self, x: f64, y: f64, t: f64) -> (Complex64, Complex64) {
        match self.kind {
            BaseKind::Free => {
                let k = free_kernel_unchecked(x, y, t);
                (k, k * Complex64::new(0.0, (x - y) / (2.0 * t)))
            }
            BaseKind::Oscillator => {
                let (s, c) = t.sin_cos();
                let k = osc_kernel_unchecked(x, y, s, c);
                (k, k * Complex64::new(0.0, (x * c - y) / (2.0 * s)))
            }
        }
    }

    /// `|K_0(x, y, t)|`, which does not depend on `x` or `y`.
    pub fn propagator_modulus(&self, t: f64) -> Result<f64> {
        self.check_time(t)?;
        Ok(match self.kind {
            BaseKind::Free => (4.0 * PI * t.abs()).sqrt().recip(),
            BaseKind::Oscillator => (4.0 * PI * t.sin().abs()).sqrt().recip(),
        })
    }

    /// Bound on `|∂_x K_0| / |K_0|` at `(x, z)`.
    pub fn propagator_dx_ratio(&self, x: f64, z: f64, t: f64) -> f64 {
        match self.kind {
            BaseKind::Free => (x - z).abs() / (2.0 * t.abs()),
            BaseKind::Oscillator => {
                let (s, c) = t.sin_cos();
                (x * c - z).abs() / (2.0 * s.abs())
            }
        }
    }

    /// Decaying solution pair at energy `e`. The oscillator pair is only
    /// available at `e = -1/2`.
    pub fn jost_pair(&self, e: Complex64) -> Result<JostPair> {
        match self.kind {
            BaseKind::Free => {
                if e.im == 0.0 && e.re >= 0.0 {
                    return Err(Error::SpectralBoundary { re: e.re, im: e.im });
                }
                let mut kappa = e.sqrt();
                if kappa.im < 0.0 {
                    kappa = -kappa;
                }
                Ok(JostPair::Free { kappa })
            }
            BaseKind::Oscillator => {
                if e == Complex64::new(-0.5, 0.0) {
                    Ok(JostPair::OscillatorNegHalf)
                } else {
                    Err(Error::SpectralBoundary { re: e.re, im: e.im })
                }
            }
        }
    }

    /// `G_0(x, y, E)`.
    pub fn green(&self, x: f64, y: f64, e: Complex64) -> Result<Complex64> {
        Ok(self.jost_pair(e)?.green(x, y))
    }
}

fn free_kernel_unchecked(x: f64, y: f64, t: f64) -> Complex64 {
    let d = x - y;
    let pref = Complex64::new(0.0, 4.0 * PI * t).sqrt();
    Complex64::new(0.0, d * d / (4.0 * t)).exp() / pref
}

fn osc_kernel_unchecked(x: f64, y: f64, s: f64, c: f64) -> Complex64 {
    let pref = Complex64::new(0.0, 4.0 * PI * s).sqrt();
    let phase = ((x * x + y * y) * c - 2.0 * x * y) / (4.0 * s);
    Complex64::new(0.0, phase).exp() / pref
}

/// Free propagator `exp(i(x-y)²/4t) / √(4πit)` (principal root).
pub fn free_propagator(x: f64, y: f64, t: f64) -> Result<Complex64> {
    BaseProblem::free().propagator(x, y, t)
}

/// Free Green's function `(i/2κ) exp(iκ|x-y|)`, `κ² = E`, `Im κ > 0`.
pub fn free_green(x: f64, y: f64, e: Complex64) -> Result<Complex64> {
    BaseProblem::free().green(x, y, e)
}

/// Oscillator propagator `(4πi sin t)^(-1/2) exp(i[(x²+y²)cos t - 2xy]/(4 sin t))`.
pub fn osc_propagator(x: f64, y: f64, t: f64) -> Result<Complex64> {
    BaseProblem::oscillator().propagator(x, y, t)
}

/// Oscillator Green's function at `E = -1/2`.
pub fn osc_green_neg_half(x: f64, y: f64) -> Complex64 {
    JostPair::OscillatorNegHalf.green(x, y)
}

/// Solutions of `(h_0 - E) f = 0` decaying at `-∞` (`f_l`) and `+∞` (`f_r`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum JostPair {
    /// `f_l = exp(-iκx)`, `f_r = exp(iκx)` with `Im κ > 0`.
    Free { kappa: Complex64 },
    /// `f_{l,r} = √(π/2) exp(x²/4) (1 ± erf(x/√2))` at `E = -1/2`.
    OscillatorNegHalf,
}

impl JostPair {
    pub fn energy(&self) -> Complex64 {
        match *self {
            JostPair::Free { kappa } => kappa * kappa,
            JostPair::OscillatorNegHalf => Complex64::new(-0.5, 0.0),
        }
    }

    /// `(f_l(x), f_l'(x))`.
    pub fn left(&self, x: f64) -> (Complex64, Complex64) {
        match *self {
            JostPair::Free { kappa } => {
                let mik = -Complex64::i() * kappa;
                let v = (mik * x).exp();
                (v, mik * v)
            }
            JostPair::OscillatorNegHalf => {
                let (v, d) = osc_left(x);
                (Complex64::new(v, 0.0), Complex64::new(d, 0.0))
            }
        }
    }

    /// `(f_r(x), f_r'(x))`.
    pub fn right(&self, x: f64) -> (Complex64, Complex64) {
        match *self {
            JostPair::Free { kappa } => {
                let ik = Complex64::i() * kappa;
                let v = (ik * x).exp();
                (v, ik * v)
            }
            JostPair::OscillatorNegHalf => {
                let (v, d) = osc_left(-x);
                (Complex64::new(v, 0.0), Complex64::new(-d, 0.0))
            }
        }
    }

    /// Closed-form Wronskian `f_l f_r' - f_l' f_r`.
    pub fn wronskian(&self) -> Complex64 {
        match *self {
            JostPair::Free { kappa } => 2.0 * Complex64::i() * kappa,
            JostPair::OscillatorNegHalf => Complex64::new(-(2.0 * PI).sqrt(), 0.0),
        }
    }

    /// Wronskian evaluated from the stored solutions at `x`.
    pub fn wronskian_at(&self, x: f64) -> Complex64 {
        let (l, dl) = self.left(x);
        let (r, dr) = self.right(x);
        l * dr - dl * r
    }

    /// `G_0(x, y)` at the pair's energy.
    pub fn green(&self, x: f64, y: f64) -> Complex64 {
        let (lo, hi) = if x <= y { (x, y) } else { (y, x) };
        self.left(lo).0 * self.right(hi).0 / (-self.wronskian())
    }
}

// f_l(x) = √(π/2) exp(x²/4) erfc(-x/√2) and its derivative (x/2) f_l + exp(-x²/4),
// switching to erfcx on the decaying side.
fn osc_left(x: f64) -> (f64, f64) {
    let s = (PI / 2.0).sqrt();
    let v = if x < 0.0 {
        s * (-0.25 * x * x).exp() * erfcx(-x / SQRT_2)
    } else {
        s * (0.25 * x * x).exp() * (1.0 + erf(x / SQRT_2))
    };
    (v, 0.5 * x * v + (-0.25 * x * x).exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::{integrate, integrate_path, QuadratureSpec};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn potentials_are_real_and_as_defined() {
        assert_eq!(BaseProblem::free().potential(3.0), 0.0);
        assert_eq!(BaseProblem::oscillator().potential(3.0), 2.25);
        assert_eq!(BaseProblem::oscillator().energy(4), Some(4.5));
        assert_eq!(BaseProblem::free().energy(0), None);
    }

    #[test]
    fn free_propagator_diagonal_and_modulus() {
        let t = 0.37;
        let k = free_propagator(1.2, 1.2, t).unwrap();
        let expected = c(0.0, 4.0 * PI * t).sqrt().inv();
        assert!((k - expected).norm() < 1e-15);
        let k = free_propagator(0.0, 0.0, 0.01).unwrap();
        assert!((k.norm() - (4.0 * PI * 0.01).powf(-0.5)).abs() < 1e-12);
        // principal branch: arg √(4πit) = π/4
        assert!((expected.inv().arg() - PI / 4.0).abs() < 1e-15);
    }

    #[test]
    fn free_propagator_rejects_zero_time() {
        assert!(matches!(free_propagator(0.0, 0.0, 0.0), Err(Error::SingularTime { .. })));
    }

    #[test]
    fn free_group_property() {
        // the z-integral is only conditionally convergent on the real line;
        // rotate both tails by π/4 where the combined chirp decays
        let (x, y, t1, t2) = (0.3, -0.8, 0.3, 0.4);
        let spec = QuadratureSpec::default().with_tolerances(1e-12, 1e-11);
        let rot = Complex64::from_polar(1.0, PI / 4.0);
        let z0 = 2.0;
        let kc = |a: Complex64, b: Complex64, t: f64| {
            (Complex64::i() * (a - b) * (a - b) / (4.0 * t)).exp() / c(0.0, 4.0 * PI * t).sqrt()
        };
        let path = [
            c(-z0, 0.0) - rot * 12.0,
            c(-z0, 0.0),
            c(z0, 0.0),
            c(z0, 0.0) + rot * 12.0,
        ];
        let est = integrate_path(
            |z| kc(c(x, 0.0), z, t1) * kc(z, c(y, 0.0), t2),
            &path,
            &spec,
        )
        .unwrap();
        let direct = free_propagator(x, y, t1 + t2).unwrap();
        assert!((est.value - direct).norm() < 1e-6, "{} vs {direct}", est.value);
    }

    #[test]
    fn free_green_values() {
        let g = free_green(0.4, -0.6, c(-1.0, 0.0)).unwrap();
        assert!((g.re - (-1.0f64).exp() / 2.0).abs() < 1e-15 && g.im.abs() < 1e-15);
        let g = free_green(0.7, 0.7, c(-4.0, 0.0)).unwrap();
        assert!((g - c(0.25, 0.0)).norm() < 1e-15);
        let g = free_green(0.7, 0.7, c(-4.0, -0.0)).unwrap();
        assert!((g - c(0.25, 0.0)).norm() < 1e-15);
        assert!(matches!(
            free_green(0.0, 1.0, c(2.0, 0.0)),
            Err(Error::SpectralBoundary { .. })
        ));
    }

    #[test]
    fn free_green_solves_resolvent_equation() {
        let e = c(-1.5, 0.8);
        let y = 0.2;
        let resid = |h: f64| {
            let g = |x: f64| free_green(x, y, e).unwrap();
            let x = 1.1;
            let lap = (-g(x + 2.0 * h) + 16.0 * g(x + h) - 30.0 * g(x) + 16.0 * g(x - h)
                - g(x - 2.0 * h))
                / (12.0 * h * h);
            (-lap - e * g(x)).norm()
        };
        let (r1, r2) = (resid(0.1), resid(0.05));
        assert!(r1 / r2 > 12.0, "{r1} {r2}");
    }

    #[test]
    fn oscillator_propagator_evolves_ground_state() {
        let t = 0.7;
        let spec = QuadratureSpec::default().with_tolerances(1e-12, 1e-12);
        for x in [-1.3, 0.0, 0.4, 2.2] {
            let est = integrate(
                |y| osc_propagator(x, y, t).unwrap() * osc_eigenfunction(0, y),
                -14.0,
                14.0,
                &spec,
            )
            .unwrap();
            let expected = Complex64::from_polar(1.0, -0.5 * t) * osc_eigenfunction(0, x);
            assert!((est.value - expected).norm() < 1e-8);
        }
    }

    #[test]
    fn oscillator_propagator_diagonal_and_symmetry() {
        let t = 1.1;
        let k = osc_propagator(0.0, 0.0, t).unwrap();
        assert!((k - c(0.0, 4.0 * PI * t.sin()).sqrt().inv()).norm() < 1e-15);
        for (x, y) in [(0.3, -1.7), (2.0, 0.5), (-3.1, -0.2)] {
            let a = osc_propagator(x, y, t).unwrap();
            let b = osc_propagator(y, x, t).unwrap();
            assert!((a - b).norm() < 1e-13);
        }
    }

    #[test]
    fn oscillator_time_guards() {
        assert!(matches!(osc_propagator(0.0, 0.0, PI), Err(Error::SingularTime { .. })));
        assert!(matches!(osc_propagator(0.0, 0.0, 4.0), Err(Error::TimeOutOfRange { .. })));
        assert!(matches!(osc_propagator(0.0, 0.0, -0.5), Err(Error::TimeOutOfRange { .. })));
        let relaxed = BaseProblem::oscillator().with_singular_guard(1e-3);
        assert!(relaxed.propagator(0.0, 0.0, 5e-4).is_err());
    }

    #[test]
    fn propagator_x_derivative_matches_finite_difference() {
        for base in [BaseProblem::free(), BaseProblem::oscillator()] {
            let (x, y, t, h) = (0.4, -0.9, 0.8, 1e-3);
            let (_, dk) = base.propagator_dx(x, y, t).unwrap();
            let f = |s: f64| base.propagator(s, y, t).unwrap();
            let fd = (f(x - 2.0 * h) - 8.0 * f(x - h) + 8.0 * f(x + h) - f(x + 2.0 * h)) / (12.0 * h);
            assert!((dk - fd).norm() < 1e-10);
        }
    }

    #[test]
    fn oscillator_wronskian_is_constant() {
        let pair = BaseProblem::oscillator().jost_pair(c(-0.5, 0.0)).unwrap();
        let w = pair.wronskian();
        assert!((w.re + (2.0 * PI).sqrt()).abs() < 1e-15);
        for k in 0..21 {
            let x = -3.0 + 0.3 * k as f64;
            let wx = pair.wronskian_at(x);
            assert!((wx - w).norm() <= 1e-10 * w.norm(), "x={x}");
        }
    }

    #[test]
    fn oscillator_green_at_origin_and_continuity() {
        // f_l(0) = f_r(0) = √(π/2), so G(0,0) = (π/2)/√(2π) = √(π/8)
        let g = osc_green_neg_half(0.0, 0.0);
        assert!((g.re - (PI / 8.0).sqrt()).abs() < 1e-15);
        for x in [-2.0, 0.3, 1.7] {
            let lo = osc_green_neg_half(x, x - 1e-13);
            let hi = osc_green_neg_half(x, x + 1e-13);
            assert!((lo - hi).norm() < 1e-12);
            let sym = osc_green_neg_half(x, 0.9) - osc_green_neg_half(0.9, x);
            assert!(sym.norm() < 1e-15);
        }
    }

    #[test]
    fn oscillator_green_derivative_jump_is_resolvent_normalized() {
        let y = 0.35;
        let h = 1e-4;
        let g = |x: f64| osc_green_neg_half(x, y).re;
        // second-order one-sided differences
        let right = (-3.0 * g(y) + 4.0 * g(y + h) - g(y + 2.0 * h)) / (2.0 * h);
        let left = (3.0 * g(y) - 4.0 * g(y - h) + g(y - 2.0 * h)) / (2.0 * h);
        assert!((right - left + 1.0).abs() < 1e-6, "{}", right - left);
    }

    #[test]
    fn oscillator_green_solves_homogeneous_equation_off_diagonal() {
        let y = -0.4;
        let resid = |h: f64| {
            let g = |x: f64| osc_green_neg_half(x, y).re;
            let mut worst: f64 = 0.0;
            for x in [-2.5, -1.0, 0.8, 2.4] {
                let lap = (-g(x + 2.0 * h) + 16.0 * g(x + h) - 30.0 * g(x) + 16.0 * g(x - h)
                    - g(x - 2.0 * h))
                    / (12.0 * h * h);
                worst = worst.max((-lap + 0.25 * x * x * g(x) + 0.5 * g(x)).abs());
            }
            worst
        };
        let (r1, r2) = (resid(0.1), resid(0.05));
        assert!(r1 / r2 > 12.0, "{r1} {r2}");
    }

    #[test]
    fn oscillator_green_matches_spectral_sum() {
        // paired with Gaussians the eigen-expansion converges fast:
        // <g, G g> = Σ c_m² / (E_m + 1/2)
        let spec = QuadratureSpec::default().with_tolerances(1e-13, 1e-13);
        let g = |x: f64| (-(x - 0.6) * (x - 0.6) / 1.5).exp();
        let inner = |x: f64| {
            let left = integrate(|y| osc_green_neg_half(x, y) * g(y), -14.0, x, &spec).unwrap();
            let right = integrate(|y| osc_green_neg_half(x, y) * g(y), x, 14.0, &spec).unwrap();
            left.value + right.value
        };
        let paired = integrate(|x| inner(x) * g(x), -14.0, 14.0, &spec).unwrap().value;
        let mut sum = 0.0;
        for m in 0..120 {
            let cm = integrate(|x| c(osc_eigenfunction(m, x) * g(x), 0.0), -14.0, 14.0, &spec)
                .unwrap()
                .value
                .re;
            sum += cm * cm / (m as f64 + 1.0);
        }
        assert!((paired.re - sum).abs() < 1e-10, "{} vs {sum}", paired.re);

        // the pointwise sum is only conditionally convergent
        let (x, y) = (0.5, -0.3);
        let psi_x = crate::specfun::osc_eigenfunctions(2000, x);
        let psi_y = crate::specfun::osc_eigenfunctions(2000, y);
        let s: f64 = psi_x
            .iter()
            .zip(&psi_y)
            .enumerate()
            .map(|(m, (a, b))| a.0 * b.0 / (m as f64 + 1.0))
            .sum();
        assert!((s - osc_green_neg_half(x, y).re).abs() < 5e-4);
    }

    #[test]
    fn unsupported_energies_are_rejected() {
        assert!(BaseProblem::oscillator().jost_pair(c(-1.0, 0.0)).is_err());
        assert!(matches!(
            BaseProblem::free().eigenfunction(0, 0.0),
            Err(Error::ContinuousSpectrum)
        ));
    }
}
