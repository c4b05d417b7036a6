//! First-order SUSY (Darboux) transformations of a base problem.
//!
//! A transformation function `u` with `h_0 u = α u` defines
//!
//! ```text
//! L   = -u'/u + d/dx          V_c = V_0 - 2 (log u)''
//! Lᵗ  = -u'/u - d/dx          Lᵗ L = h_0 - α,   L Lᵗ = h_c - α
//! ```
//!
//! and `L h_0 = h_c L`. The partner eigenfunctions are
//! `φ_n = (E_n - α)^(-1/2) L ψ_n`, and when `α` is a new real level the bound
//! state `φ_α = N_α / u` is added. All of them are normalized with the bilinear
//! pairing `∫ f g dx` (no complex conjugation).

use std::f64::consts::{PI, SQRT_2};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::Grid1D;
use crate::model::{BaseKind, BaseProblem};
use crate::quad::{integrate, QuadratureSpec};
use crate::specfun::{erf, osc_eigenfunctions};

/// Relative threshold below which `|u|` counts as vanishing.
pub const NEAR_ZERO_THRESHOLD: f64 = 1e-6;

/// Which of the two spectral scenarios a transformation realizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Case {
    /// Case (i): complex `α`, the partner is isospectral with `h_0`.
    Isospectral,
    /// Case (ii): real `α` below the base spectrum becomes a new level.
    AddedLevel,
}

impl Case {
    /// A real spectrum requires `Im α ≠ 0` for case (i) and `Im α = 0` for case (ii).
    pub fn classify(alpha: Complex64) -> Case {
        if alpha.im != 0.0 {
            Case::Isospectral
        } else {
            Case::AddedLevel
        }
    }
}

/// Parameters of the shipped transformation families.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TransformParams {
    /// `u = exp(x²/4) (C + erf(x/√2))`, `α = -1/2`, over the oscillator.
    Oscillator { c: Complex64 },
    /// `u = cosh(a x + c)`, `α = -a²`, over the free particle, with
    /// `c = artanh((b² - a²) / (2iab))`.
    Soliton { a: f64, b: f64, c: Complex64 },
}

/// A SUSY transformation of a base problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Factorization {
    base: BaseProblem,
    alpha: Complex64,
    case: Case,
    params: TransformParams,
    n_alpha: Option<Complex64>,
}

impl Factorization {
    /// Oscillator partner with `u = exp(x²/4)(C + erf(x/√2))`.
    ///
    /// `Im C ≠ 0` keeps `u` away from zero on the real line, since
    /// `|C + erf| ≥ |Im C|`.
    pub fn oscillator(c: Complex64) -> Result<Self> {
        if !(c.re.is_finite() && c.im.is_finite()) {
            return Err(Error::InvalidParameter(format!("C must be finite, got {c}")));
        }
        if c.im == 0.0 {
            return Err(Error::RealZeroRisk(format!(
                "Im C = 0 lets C + erf(x/√2) vanish for real C in [-1, 1] (C = {c})"
            )));
        }
        let n_alpha = (2.0 * PI).powf(-0.25) * (c * c - 1.0).sqrt();
        Ok(Self {
            base: BaseProblem::oscillator(),
            alpha: Complex64::new(-0.5, 0.0),
            case: Case::AddedLevel,
            params: TransformParams::Oscillator { c },
            n_alpha: Some(n_alpha),
        })
    }

    /// Complex one-soliton partner of the free particle.
    pub fn soliton(a: f64, b: f64) -> Result<Self> {
        if !(a > 0.0 && a.is_finite()) {
            return Err(Error::InvalidParameter(format!("a must be positive, got {a}")));
        }
        if !b.is_finite() || b == 0.0 {
            return Err(Error::InvalidParameter(format!("b must be finite and nonzero, got {b}")));
        }
        if b.abs() == a {
            return Err(Error::RealZeroRisk(format!(
                "|b| = a gives a real shift c = 0 (a = {a}, b = {b})"
            )));
        }
        let arg = Complex64::new(b * b - a * a, 0.0) / Complex64::new(0.0, 2.0 * a * b);
        let c = arg.atanh();
        if c.im == 0.0 || !c.im.is_finite() {
            return Err(Error::RealZeroRisk(format!("Im c = 0 for a = {a}, b = {b}")));
        }
        Ok(Self {
            base: BaseProblem::free(),
            alpha: Complex64::new(-a * a, 0.0),
            case: Case::AddedLevel,
            params: TransformParams::Soliton { a, b, c },
            n_alpha: Some(Complex64::new((a / 2.0).sqrt(), 0.0)),
        })
    }

    pub fn base(&self) -> &BaseProblem {
        &self.base
    }

    pub fn alpha(&self) -> Complex64 {
        self.alpha
    }

    pub fn case(&self) -> Case {
        self.case
    }

    pub fn params(&self) -> TransformParams {
        self.params
    }

    /// Bound-state normalization `N_α` (case (ii) only).
    pub fn n_alpha(&self) -> Option<Complex64> {
        self.n_alpha
    }

    /// `(u, u', u'')` from the closed forms.
    pub fn u_derivs(&self, x: f64) -> [Complex64; 3] {
        match self.params {
            TransformParams::Oscillator { c } => {
                let g = (0.25 * x * x).exp();
                let u = g * (c + erf(x / SQRT_2));
                let kick = (2.0 / PI).sqrt() * (-0.25 * x * x).exp();
                let du = 0.5 * x * u + kick;
                let ddu = 0.5 * u + 0.5 * x * du - 0.5 * x * kick;
                [u, du, ddu]
            }
            TransformParams::Soliton { a, c, .. } => {
                let arg = a * x + c;
                [arg.cosh(), a * arg.sinh(), a * a * arg.cosh()]
            }
        }
    }

    pub fn u(&self, x: f64) -> Complex64 {
        self.u_derivs(x)[0]
    }

    /// `1/u`, evaluated without forming `u` where it overflows.
    pub fn inv_u(&self, x: f64) -> Result<Complex64> {
        self.check_nonvanishing_at(x)?;
        Ok(match self.params {
            TransformParams::Oscillator { c } => (-0.25 * x * x).exp() / (c + erf(x / SQRT_2)),
            TransformParams::Soliton { a, c, .. } => (a * x + c).cosh().inv(),
        })
    }

    // |u| divided by its real-axis growth, so the near-zero test is scale free
    fn normalized_modulus(&self, x: f64) -> f64 {
        match self.params {
            TransformParams::Oscillator { c } => (c + erf(x / SQRT_2)).norm() / (c.norm() + 1.0),
            TransformParams::Soliton { a, c, .. } => {
                let arg = a * x + c;
                arg.cosh().norm() / (a * x).cosh()
            }
        }
    }

    fn check_nonvanishing_at(&self, x: f64) -> Result<()> {
        let m = self.normalized_modulus(x);
        if m < NEAR_ZERO_THRESHOLD || !m.is_finite() {
            return Err(Error::NearZero { x, modulus: m });
        }
        Ok(())
    }

    /// Asserts `u ≠ 0` on every grid point, relative to the growth envelope.
    pub fn check_nonvanishing(&self, grid: &Grid1D) -> Result<()> {
        grid.points()
            .into_iter()
            .try_for_each(|x| self.check_nonvanishing_at(x))
    }

    /// `(u'/u, u''/u)`, stable for large `|x|`.
    pub fn log_ratios(&self, x: f64) -> Result<(Complex64, Complex64)> {
        self.check_nonvanishing_at(x)?;
        Ok(match self.params {
            TransformParams::Oscillator { c } => {
                let q = (2.0 / PI).sqrt() * (-0.5 * x * x).exp() / (c + erf(x / SQRT_2));
                (0.5 * x + q, Complex64::new(0.25 * x * x + 0.5, 0.0))
            }
            TransformParams::Soliton { a, c, .. } => {
                (a * (a * x + c).tanh(), Complex64::new(a * a, 0.0))
            }
        })
    }

    /// `u'/u`.
    pub fn log_derivative(&self, x: f64) -> Result<Complex64> {
        self.log_ratios(x).map(|(d, _)| d)
    }

    /// `V_c = V_0 - 2 (u''/u - (u'/u)²)`.
    pub fn partner_potential(&self, x: f64) -> Result<Complex64> {
        let (d1, d2) = self.log_ratios(x)?;
        Ok(self.base.potential(x) - 2.0 * (d2 - d1 * d1))
    }

    /// `(L g)(x) = g'(x) - (u'/u) g(x)` for caller-supplied `g` and `g'`.
    pub fn apply_l(&self, g: Complex64, dg: Complex64, x: f64) -> Result<Complex64> {
        Ok(dg - self.log_derivative(x)? * g)
    }

    /// `(Lᵗ g)(x) = -(u'/u) g(x) - g'(x)`.
    pub fn apply_lt(&self, g: Complex64, dg: Complex64, x: f64) -> Result<Complex64> {
        Ok(-self.log_derivative(x)? * g - dg)
    }

    fn level_normalization(&self, n: usize) -> Result<Complex64> {
        let e = self.base.energy(n).ok_or(Error::ContinuousSpectrum)?;
        let gap = Complex64::new(e, 0.0) - self.alpha;
        if gap.norm() == 0.0 {
            return Err(Error::DegenerateNormalization { n });
        }
        Ok(gap.sqrt().inv())
    }

    /// `φ_n(x) = (E_n - α)^(-1/2) (L ψ_n)(x)`.
    pub fn transformed_eigenfunction(&self, n: usize, x: f64) -> Result<Complex64> {
        let (psi, dpsi) = self.base.eigenfunction(n, x)?;
        let lpsi = self.apply_l(psi.into(), dpsi.into(), x)?;
        Ok(self.level_normalization(n)? * lpsi)
    }

    /// `φ_0(x) ..= φ_nmax(x)` in one recurrence sweep.
    pub fn transformed_eigenfunctions(&self, nmax: usize, x: f64) -> Result<Vec<Complex64>> {
        if self.base.kind() != BaseKind::Oscillator {
            return Err(Error::ContinuousSpectrum);
        }
        let d = self.log_derivative(x)?;
        osc_eigenfunctions(nmax, x)
            .into_iter()
            .enumerate()
            .map(|(n, (psi, dpsi))| Ok(self.level_normalization(n)? * (dpsi - d * psi)))
            .collect()
    }

    /// `φ_α(x) = N_α / u(x)`.
    pub fn bound_state(&self, x: f64) -> Result<Complex64> {
        let n_alpha = match (self.case, self.n_alpha) {
            (Case::AddedLevel, Some(n)) => n,
            _ => return Err(Error::NoBoundState),
        };
        Ok(n_alpha * self.inv_u(x)?)
    }

    /// `|u(x)|` growth envelope used to size integration windows: the
    /// bound state decays like `1/envelope`.
    pub fn growth(&self, x: f64) -> f64 {
        match self.params {
            TransformParams::Oscillator { c } => (0.25 * x * x).exp() * (c.norm() + 1.0),
            TransformParams::Soliton { a, .. } => (a * x).cosh(),
        }
    }

    #[cfg(test)]
    pub(crate) fn force_case(mut self, case: Case) -> Self {
        self.case = case;
        self
    }
}

/// The complex partner `h_c = -d²/dx² + V_c` of a base problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PartnerModel {
    fact: Factorization,
}

impl PartnerModel {
    pub fn new(fact: Factorization) -> Self {
        Self { fact }
    }

    pub fn oscillator(c: Complex64) -> Result<Self> {
        Factorization::oscillator(c).map(Self::new)
    }

    pub fn soliton(a: f64, b: f64) -> Result<Self> {
        Factorization::soliton(a, b).map(Self::new)
    }

    pub fn factorization(&self) -> &Factorization {
        &self.fact
    }

    pub fn base(&self) -> &BaseProblem {
        self.fact.base()
    }

    pub fn alpha(&self) -> Complex64 {
        self.fact.alpha()
    }

    pub fn potential(&self, x: f64) -> Result<Complex64> {
        self.fact.partner_potential(x)
    }

    pub fn bound_state(&self, x: f64) -> Result<Complex64> {
        self.fact.bound_state(x)
    }

    pub fn eigenfunction(&self, n: usize, x: f64) -> Result<Complex64> {
        self.fact.transformed_eigenfunction(n, x)
    }

    /// Partner energies `E_n` of the transformed levels (discrete base only).
    pub fn energy(&self, n: usize) -> Option<f64> {
        self.fact.base().energy(n)
    }

    /// Radius beyond which the bound state is below `tol` in modulus.
    pub fn bound_state_radius(&self, tol: f64) -> f64 {
        let n = self.fact.n_alpha().map(|v| v.norm()).unwrap_or(1.0);
        let mut r: f64 = 1.0;
        while n / self.fact.growth(r) > tol && r < 200.0 {
            r += 0.5;
        }
        r
    }
}

/// Bilinear norm `∫ g(x)² dx` over `[-R, R]` (no conjugation).
///
/// The tail on `R ≤ |x| ≤ 2R` is integrated as well; if it is not negligible
/// against the tolerance the integral is reported as divergent.
pub fn bilinear_norm<F>(g: F, quad: &QuadratureSpec) -> Result<Complex64>
where
    F: Fn(f64) -> Complex64,
{
    bilinear_pairing(&g, &g, quad)
}

/// `∫ f(x) g(x) dx` with the same tail check as [`bilinear_norm`].
pub fn bilinear_pairing<F, G>(f: F, g: G, quad: &QuadratureSpec) -> Result<Complex64>
where
    F: Fn(f64) -> Complex64,
    G: Fn(f64) -> Complex64,
{
    quad.validate()?;
    let r = quad.truncation_radius;
    let integrand = |x: f64| f(x) * g(x);
    let main = integrate(integrand, -r, r, quad)?;
    let tail = integrate(integrand, r, 2.0 * r, quad)?.value
        + integrate(integrand, -2.0 * r, -r, quad)?.value;
    let tol = quad.abs_tol.max(quad.rel_tol * main.value.norm());
    if tail.norm() > tol {
        return Err(Error::Divergence { tail: tail.norm() });
    }
    Ok(main.value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specfun::{osc_eigenfunction, osc_eigenfunction_deriv};
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn osc() -> Factorization {
        Factorization::oscillator(c(0.0, 2.0)).unwrap()
    }

    fn sol() -> Factorization {
        Factorization::soliton(1.0, 2.0).unwrap()
    }

    fn quad(r: f64) -> QuadratureSpec {
        QuadratureSpec::default().with_radius(r).with_tolerances(1e-13, 1e-12)
    }

    // fourth-order central stencils on closures
    fn d1(f: &dyn Fn(f64) -> Complex64, x: f64, h: f64) -> Complex64 {
        (f(x - 2.0 * h) - 8.0 * f(x - h) + 8.0 * f(x + h) - f(x + 2.0 * h)) / (12.0 * h)
    }

    fn d2(f: &dyn Fn(f64) -> Complex64, x: f64, h: f64) -> Complex64 {
        (-f(x + 2.0 * h) + 16.0 * f(x + h) - 30.0 * f(x) + 16.0 * f(x - h) - f(x - 2.0 * h))
            / (12.0 * h * h)
    }

    fn h0(fact: &Factorization, f: &dyn Fn(f64) -> Complex64, x: f64, h: f64) -> Complex64 {
        -d2(f, x, h) + fact.base().potential(x) * f(x)
    }

    fn hc(fact: &Factorization, f: &dyn Fn(f64) -> Complex64, x: f64, h: f64) -> Complex64 {
        -d2(f, x, h) + fact.partner_potential(x).unwrap() * f(x)
    }

    const SAMPLES: [f64; 9] = [-3.1, -2.0, -1.2, -0.45, 0.0, 0.3, 1.1, 2.2, 3.4];

    /// Ratio of sup residuals at steps `h` and `h/2`.
    fn refinement_ratio(resid: impl Fn(f64, f64) -> f64) -> (f64, f64) {
        let sup = |h: f64| SAMPLES.iter().map(|&x| resid(x, h)).fold(0.0, f64::max);
        let (r1, r2) = (sup(0.1), sup(0.05));
        (r1, r2)
    }

    // smooth test function: Gaussian times a polynomial, with exact derivative
    fn test_fn(x: f64) -> (Complex64, Complex64) {
        let p = c(1.0 + 0.3 * x - 0.2 * x * x, 0.4 * x);
        let dp = c(0.3 - 0.4 * x, 0.4);
        let g = (-(x - 0.3) * (x - 0.3) / 2.0).exp();
        let dg = -(x - 0.3) * g;
        (p * g, dp * g + p * dg)
    }

    #[test]
    fn oscillator_constructor_values() {
        let f = osc();
        assert_eq!(f.u(0.0), c(0.0, 2.0));
        assert_eq!(f.alpha(), c(-0.5, 0.0));
        assert_eq!(f.case(), Case::AddedLevel);
        let n = f.n_alpha().unwrap();
        let expected = c(0.0, (2.0 * PI).powf(-0.25) * 5f64.sqrt());
        assert!((n - expected).norm() < 1e-15);
    }

    #[test]
    fn oscillator_requires_complex_constant() {
        assert!(matches!(
            Factorization::oscillator(c(0.5, 0.0)),
            Err(Error::RealZeroRisk(_))
        ));
    }

    #[test]
    fn inverse_square_integral_fixes_n_alpha() {
        // s = erf(x/√2) turns ∫u⁻² into √(π/2)∫(C+s)⁻² ds = √(2π)/(C²-1)
        let f = osc();
        let cc = c(0.0, 2.0);
        let v = bilinear_norm(|x| f.inv_u(x).unwrap(), &quad(14.0)).unwrap();
        let expected = (2.0 * PI).sqrt() / (cc * cc - 1.0);
        assert!((v - expected).norm() < 1e-8);
        let n = f.n_alpha().unwrap();
        assert!((n * n * v - 1.0).norm() < 1e-10);
    }

    #[test]
    fn soliton_shift() {
        let f = sol();
        match f.params() {
            TransformParams::Soliton { c: shift, .. } => {
                assert!(shift.re.abs() < 1e-15);
                assert!((shift.im + 0.75f64.atan()).abs() < 1e-15);
                assert!((shift.im + 0.643_501_1).abs() < 1e-7);
            }
            _ => unreachable!(),
        }
        assert_eq!(f.alpha(), c(-1.0, 0.0));
        assert!(matches!(Factorization::soliton(1.0, 1.0), Err(Error::RealZeroRisk(_))));
        assert!(matches!(Factorization::soliton(1.0, -1.0), Err(Error::RealZeroRisk(_))));
        assert!(Factorization::soliton(-1.0, 2.0).is_err());
        assert!(Factorization::soliton(1.0, 0.0).is_err());
    }

    #[test]
    fn transformation_functions_solve_the_base_equation() {
        for f in [osc(), sol()] {
            let u = |x: f64| f.u(x);
            let (r1, r2) =
                refinement_ratio(|x, h| (h0(&f, &u, x, h) - f.alpha() * f.u(x)).norm() / f.u(x).norm());
            assert!(r1 / r2 > 12.0, "{r1} {r2}");
            // analytic second derivative agrees exactly
            for x in SAMPLES {
                let [uu, _, ddu] = f.u_derivs(x);
                let resid = -ddu + f.base().potential(x) * uu - f.alpha() * uu;
                assert!(resid.norm() < 1e-12 * uu.norm());
            }
        }
    }

    #[test]
    fn grid_nonvanishing_check() {
        let grid = Grid1D::new(-12.0, 12.0, 601).unwrap();
        osc().check_nonvanishing(&grid).unwrap();
        sol().check_nonvanishing(&grid).unwrap();
        // b → 0 pushes Im c toward π/2, where cosh(c) → 0
        let nearly = Factorization::soliton(1.0, 1e-8).unwrap();
        assert!(matches!(nearly.inv_u(0.0), Err(Error::NearZero { .. })));
    }

    #[test]
    fn soliton_potential_is_sech_squared() {
        let f = sol();
        let shift = match f.params() {
            TransformParams::Soliton { c, .. } => c,
            _ => unreachable!(),
        };
        for x in SAMPLES {
            let v = f.partner_potential(x).unwrap();
            let expected = -2.0 / (x + shift).cosh().powi(2);
            assert!((v - expected).norm() < 1e-13);
        }
        assert!(f.partner_potential(12.0).unwrap().norm() < 1e-8);
    }

    #[test]
    fn oscillator_potential_asymptotics() {
        // V_c → x²/4 - 1: (log u)'' → 1/2
        let f = osc();
        for x in [-12.0, 12.0] {
            let v = f.partner_potential(x).unwrap();
            assert!((v - (x * x / 4.0 - 1.0)).norm() <= 1e-8);
        }
        assert!(f.partner_potential(0.7).unwrap().im.abs() > 1e-3);
    }

    proptest! {
        #[test]
        fn oscillator_potential_matches_closed_form(x in -6.0f64..6.0) {
            let cc = c(0.0, 2.0);
            let q1 = (PI / 2.0).sqrt() * (cc + erf(x / SQRT_2));
            let closed = x * x / 4.0 - 1.0
                + 2.0 * x * (-x * x / 2.0).exp() / q1
                + 2.0 * (-x * x).exp() / (q1 * q1);
            let v = osc().partner_potential(x).unwrap();
            prop_assert!((v - closed).norm() < 1e-10);
        }
    }

    #[test]
    fn operators_annihilate_their_kernels() {
        for f in [osc(), sol()] {
            for x in SAMPLES {
                let [u, du, _] = f.u_derivs(x);
                assert!(f.apply_l(u, du, x).unwrap().norm() <= 1e-14 * (u.norm() + du.norm()));
                let inv = u.inv();
                let dinv = -du / (u * u);
                let lt = f.apply_lt(inv, dinv, x).unwrap();
                assert!(lt.norm() <= 1e-14 * (inv.norm() + dinv.norm()));
            }
        }
    }

    #[test]
    fn soliton_l_on_plane_wave() {
        let f = sol();
        let k = 1.7;
        let shift = match f.params() {
            TransformParams::Soliton { c, .. } => c,
            _ => unreachable!(),
        };
        for x in SAMPLES {
            let e = Complex64::new(0.0, k * x).exp();
            let v = f.apply_l(e, Complex64::i() * k * e, x).unwrap();
            let expected = (Complex64::i() * k - (x + shift).tanh()) * e;
            assert!((v - expected).norm() < 1e-14);
        }
    }

    #[test]
    fn intertwining_on_eigenfunctions() {
        let f = osc();
        for n in 0..=5 {
            let lpsi = |x: f64| {
                f.apply_l(osc_eigenfunction(n, x).into(), osc_eigenfunction_deriv(n, x).into(), x)
                    .unwrap()
            };
            let e = n as f64 + 0.5;
            let (r1, r2) = refinement_ratio(|x, h| (hc(&f, &lpsi, x, h) - e * lpsi(x)).norm());
            assert!(r1 / r2 > 12.0, "n={n}: {r1} {r2}");
        }
    }

    #[test]
    fn intertwining_on_smooth_functions() {
        // L(h_0 g) - h_c(L g), with h_0 g known through finite differences
        for f in [osc(), sol()] {
            let lg = |x: f64| {
                let (g, dg) = test_fn(x);
                f.apply_l(g, dg, x).unwrap()
            };
            let (r1, r2) = refinement_ratio(|x, h| {
                let h0g = |s: f64| h0(&f, &|y| test_fn(y).0, s, h);
                let l_h0g = f.apply_l(h0g(x), d1(&h0g, x, h), x).unwrap();
                (l_h0g - hc(&f, &lg, x, h)).norm()
            });
            assert!(r1 / r2 > 12.0, "{r1} {r2}");
        }
    }

    #[test]
    fn factorization_identities() {
        for f in [osc(), sol()] {
            let g = |x: f64| test_fn(x).0;
            // Lᵗ L g = (h_0 - α) g
            let lg = |x: f64| {
                let (v, dv) = test_fn(x);
                f.apply_l(v, dv, x).unwrap()
            };
            let (r1, r2) = refinement_ratio(|x, h| {
                let ltl = f.apply_lt(lg(x), d1(&lg, x, h), x).unwrap();
                (ltl - h0(&f, &g, x, h) + f.alpha() * g(x)).norm()
            });
            assert!(r1 / r2 > 12.0, "LtL: {r1} {r2}");
            // L Lᵗ g = (h_c - α) g
            let ltg = |x: f64| {
                let (v, dv) = test_fn(x);
                f.apply_lt(v, dv, x).unwrap()
            };
            let (r1, r2) = refinement_ratio(|x, h| {
                let llt = f.apply_l(ltg(x), d1(&ltg, x, h), x).unwrap();
                (llt - hc(&f, &g, x, h) + f.alpha() * g(x)).norm()
            });
            assert!(r1 / r2 > 12.0, "LLt: {r1} {r2}");
        }
    }

    #[test]
    fn transformed_eigenfunctions_are_bilinear_orthonormal() {
        let f = osc();
        let q = quad(20.0);
        for n in 0..=10 {
            let norm = bilinear_norm(|x| f.transformed_eigenfunction(n, x).unwrap(), &q).unwrap();
            assert!((norm - 1.0).norm() < 1e-8, "n={n}: {norm}");
        }
        for m in 0..=6 {
            for n in (m + 1)..=6 {
                let v = bilinear_pairing(
                    |x| f.transformed_eigenfunction(m, x).unwrap(),
                    |x| f.transformed_eigenfunction(n, x).unwrap(),
                    &q,
                )
                .unwrap();
                assert!(v.norm() < 1e-8, "({m},{n}): {v}");
            }
            let v = bilinear_pairing(
                |x| f.bound_state(x).unwrap(),
                |x| f.transformed_eigenfunction(m, x).unwrap(),
                &q,
            )
            .unwrap();
            assert!(v.norm() < 1e-8, "(α,{m}): {v}");
        }
    }

    #[test]
    fn batch_eigenfunctions_match_single() {
        let f = osc();
        let all = f.transformed_eigenfunctions(8, 0.77).unwrap();
        for (n, v) in all.iter().enumerate() {
            assert!((v - f.transformed_eigenfunction(n, 0.77).unwrap()).norm() < 1e-15);
        }
        assert!(matches!(
            sol().transformed_eigenfunctions(3, 0.0),
            Err(Error::ContinuousSpectrum)
        ));
    }

    #[test]
    fn bound_states() {
        let f = osc();
        let cc = c(0.0, 2.0);
        let expected = (2.0 * PI).powf(-0.25) * (cc * cc - 1.0).sqrt() / cc;
        assert!((f.bound_state(0.0).unwrap() - expected).norm() < 1e-15);

        let n1 = bilinear_norm(|x| f.bound_state(x).unwrap(), &quad(14.0)).unwrap();
        assert!((n1 - 1.0).norm() < 1e-8);
        let s = sol();
        let n2 = bilinear_norm(|x| s.bound_state(x).unwrap(), &quad(40.0)).unwrap();
        assert!((n2 - 1.0).norm() < 1e-10);

        for fact in [f, s] {
            let phi = |x: f64| fact.bound_state(x).unwrap();
            let (r1, r2) = refinement_ratio(|x, h| (hc(&fact, &phi, x, h) - fact.alpha() * phi(x)).norm());
            assert!(r1 / r2 > 12.0, "{r1} {r2}");
        }
    }

    #[test]
    fn isospectral_case_has_no_bound_state() {
        let f = osc().force_case(Case::Isospectral);
        assert!(matches!(f.bound_state(0.0), Err(Error::NoBoundState)));
        assert_eq!(Case::classify(c(-0.5, 0.0)), Case::AddedLevel);
        assert_eq!(Case::classify(c(-0.5, 0.3)), Case::Isospectral);
    }

    #[test]
    fn bilinear_norm_has_no_conjugation() {
        let q = quad(14.0);
        let psi0 = |x: f64| Complex64::new(osc_eigenfunction(0, x), 0.0);
        assert!((bilinear_norm(psi0, &q).unwrap() - 1.0).norm() < 1e-12);
        let ipsi0 = |x: f64| Complex64::new(0.0, osc_eigenfunction(0, x));
        assert!((bilinear_norm(ipsi0, &q).unwrap() + 1.0).norm() < 1e-12);
    }

    #[test]
    fn bilinear_norm_flags_slow_tails() {
        let q = quad(5.0);
        let slow = |x: f64| Complex64::new(1.0 / (1.0 + x * x).sqrt(), 0.0);
        assert!(matches!(bilinear_norm(slow, &q), Err(Error::Divergence { .. })));
    }

    #[test]
    fn partner_model_delegates() {
        let pm = PartnerModel::oscillator(c(0.0, 2.0)).unwrap();
        assert_eq!(pm.potential(0.4).unwrap(), osc().partner_potential(0.4).unwrap());
        assert_eq!(pm.energy(3), Some(3.5));
        let r = pm.bound_state_radius(1e-16);
        assert!(pm.bound_state(r).unwrap().norm() <= 1e-16);
    }
}
