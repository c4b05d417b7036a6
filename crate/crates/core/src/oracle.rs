//! Finite-difference reference machinery: a grid Hamiltonian, a
//! Crank–Nicolson stepper for `i ∂_t Φ = h Φ` with complex potentials, and a
//! tridiagonal eigenvalue solver.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{Grid1D, Sampled};

/// Width of the central second-derivative stencil.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StencilOrder {
    Second,
    Fourth,
}

impl StencilOrder {
    fn half_width(self) -> usize {
        match self {
            StencilOrder::Second => 1,
            StencilOrder::Fourth => 2,
        }
    }
}

/// `(-∂² + V) g` on the interior points of the grid.
///
/// The result lives on the sub-grid that drops `1` (second order) or `2`
/// (fourth order) points at each end.
pub fn apply_h_grid(v: &Sampled, g: &Sampled, order: StencilOrder) -> Result<Sampled> {
    if v.grid != g.grid {
        return Err(Error::GridMismatch("potential and function sampled on different grids".into()));
    }
    let w = order.half_width();
    let n = g.grid.len();
    if n < 2 * w + 3 {
        return Err(Error::GridMismatch(format!("{n} points are too few for the stencil")));
    }
    let h2 = g.grid.spacing().powi(2);
    let f = &g.values;
    let values = (w..n - w)
        .map(|i| {
            let lap = match order {
                StencilOrder::Second => (f[i - 1] - 2.0 * f[i] + f[i + 1]) / h2,
                StencilOrder::Fourth => {
                    (-f[i - 2] + 16.0 * f[i - 1] - 30.0 * f[i] + 16.0 * f[i + 1] - f[i + 2])
                        / (12.0 * h2)
                }
            };
            -lap + v.values[i] * f[i]
        })
        .collect();
    let grid = Grid1D::new(g.grid.point(w), g.grid.point(n - 1 - w), n - 2 * w)?;
    Sampled::new(grid, values)
}

/// Fourth-order central first derivative on the interior points (two
/// dropped at each end).
pub fn derivative_grid(g: &Sampled) -> Result<Sampled> {
    let n = g.grid.len();
    if n < 7 {
        return Err(Error::GridMismatch(format!("{n} points are too few for the stencil")));
    }
    let h = g.grid.spacing();
    let f = &g.values;
    let values = (2..n - 2)
        .map(|i| (f[i - 2] - 8.0 * f[i - 1] + 8.0 * f[i + 1] - f[i + 2]) / (12.0 * h))
        .collect();
    let grid = Grid1D::new(g.grid.point(2), g.grid.point(n - 3), n - 4)?;
    Sampled::new(grid, values)
}

/// Boundary treatment of the stepper.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary {
    Dirichlet,
}

/// Time grid and guards of a Crank–Nicolson run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolutionConfig {
    pub grid: Grid1D,
    pub dt: f64,
    pub n_steps: usize,
    pub boundary: Boundary,
    /// Largest modulus allowed next to the walls, relative to `max |Φ_0|`.
    pub boundary_cap: f64,
    /// `dt · max|V|` above this only logs a warning.
    pub stiffness_warning: f64,
}

impl EvolutionConfig {
    /// Steps of at most `dt_max` that land exactly on `t`.
    pub fn for_time(grid: Grid1D, t: f64, dt_max: f64) -> Result<Self> {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::InvalidParameter(format!("evolution time must be positive, got {t}")));
        }
        if !(dt_max > 0.0) {
            return Err(Error::InvalidParameter(format!("dt must be positive, got {dt_max}")));
        }
        let n_steps = (t / dt_max).ceil().max(1.0) as usize;
        Ok(Self {
            grid,
            dt: t / n_steps as f64,
            n_steps,
            boundary: Boundary::Dirichlet,
            boundary_cap: 1e-6,
            stiffness_warning: 0.5,
        })
    }

    pub fn with_boundary_cap(mut self, cap: f64) -> Self {
        self.boundary_cap = cap;
        self
    }

    pub fn total_time(&self) -> f64 {
        self.dt * self.n_steps as f64
    }
}

/// Crank–Nicolson evolution `(1 + i dt/2 h) Φ_{k+1} = (1 - i dt/2 h) Φ_k`
/// with the second-order grid Hamiltonian and `Φ = 0` at both ends.
pub fn cn_evolve(v: &Sampled, phi0: &Sampled, cfg: &EvolutionConfig) -> Result<Sampled> {
    if v.grid != cfg.grid || phi0.grid != cfg.grid {
        return Err(Error::GridMismatch("evolution inputs must share the configured grid".into()));
    }
    let Boundary::Dirichlet = cfg.boundary;
    let n = cfg.grid.len();
    let h2 = cfg.grid.spacing().powi(2);
    let half = Complex64::new(0.0, 0.5 * cfg.dt);

    let vmax = v.values.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if cfg.dt * vmax > cfg.stiffness_warning {
        log::warn!(
            "dt * max|V| = {:.3e} exceeds {:.3e}; phase accuracy may suffer",
            cfg.dt * vmax,
            cfg.stiffness_warning
        );
    }

    // interior unknowns 1..n-1; A = 1 + half h, B = 1 - half h
    let m = n - 2;
    let off = -half / h2;
    let diag: Vec<Complex64> = (1..n - 1)
        .map(|i| 1.0 + half * (2.0 / h2 + v.values[i]))
        .collect();
    for (row, d) in diag.iter().enumerate() {
        let neighbours = if row == 0 || row == m - 1 { 1.0 } else { 2.0 };
        if d.norm() <= neighbours * off.norm() {
            return Err(Error::NotDiagonallyDominant { row: row + 1 });
        }
    }

    // forward-elimination factors, reused every step
    let mut cprime = vec![Complex64::new(0.0, 0.0); m];
    let mut denom = vec![Complex64::new(0.0, 0.0); m];
    denom[0] = diag[0];
    cprime[0] = off / denom[0];
    for i in 1..m {
        denom[i] = diag[i] - off * cprime[i - 1];
        cprime[i] = off / denom[i];
    }

    let amp0 = phi0.values.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let cap = cfg.boundary_cap * amp0;
    let mut phi = phi0.values.clone();
    phi[0] = Complex64::new(0.0, 0.0);
    phi[n - 1] = Complex64::new(0.0, 0.0);
    let mut rhs = vec![Complex64::new(0.0, 0.0); m];
    let bdiag: Vec<Complex64> = (1..n - 1)
        .map(|i| 1.0 - half * (2.0 / h2 + v.values[i]))
        .collect();

    for step in 0..cfg.n_steps {
        for k in 0..m {
            let i = k + 1;
            rhs[k] = bdiag[k] * phi[i] - off * (phi[i - 1] + phi[i + 1]);
        }
        // Thomas sweep
        rhs[0] /= denom[0];
        for k in 1..m {
            rhs[k] = (rhs[k] - off * rhs[k - 1]) / denom[k];
        }
        for k in (0..m - 1).rev() {
            rhs[k] = rhs[k] - cprime[k] * rhs[k + 1];
        }
        phi[1..n - 1].copy_from_slice(&rhs);

        let edge = phi[1].norm().max(phi[n - 2].norm());
        if edge > cap {
            log::debug!("boundary cap hit at step {step}");
            return Err(Error::DomainTooSmall {
                amplitude: edge,
                limit: cap,
            });
        }
    }
    Sampled::new(cfg.grid, phi)
}

/// Normalized Gaussian packet `(2πσ²)^(-1/4) exp(-(x-x0)²/(4σ²) + i k0 x)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianPacket {
    pub center: f64,
    pub width: f64,
    pub momentum: f64,
}

impl GaussianPacket {
    pub fn new(center: f64, width: f64, momentum: f64) -> Result<Self> {
        if !(width > 0.0 && width.is_finite() && center.is_finite() && momentum.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "packet needs a positive width and finite center/momentum, got ({center}, {width}, {momentum})"
            )));
        }
        Ok(Self {
            center,
            width,
            momentum,
        })
    }

    pub fn eval(&self, x: f64) -> Complex64 {
        self.free_evolved(x, 0.0)
    }

    /// Exact solution of `i ∂_t ψ = -∂²ψ` from this packet.
    pub fn free_evolved(&self, x: f64, t: f64) -> Complex64 {
        let s2 = self.width * self.width;
        let st = Complex64::new(s2, t);
        let amp = (2.0 * std::f64::consts::PI * s2).powf(-0.25) * (s2 / st).sqrt();
        let d = x - self.center - 2.0 * self.momentum * t;
        let phase = Complex64::new(0.0, self.momentum * x - self.momentum * self.momentum * t);
        amp * (-(d * d) / (4.0 * st) + phase).exp()
    }

    /// `∂_x` of [`free_evolved`](Self::free_evolved).
    pub fn free_evolved_dx(&self, x: f64, t: f64) -> Complex64 {
        let st = Complex64::new(self.width * self.width, t);
        let d = x - self.center - 2.0 * self.momentum * t;
        self.free_evolved(x, t) * (-d / (2.0 * st) + Complex64::new(0.0, self.momentum))
    }

    pub fn sample(&self, grid: Grid1D) -> Sampled {
        Sampled::from_fn(grid, |x| self.eval(x))
    }
}

/// Eigenvalues of the complex-symmetric tridiagonal matrix with diagonal `d`
/// and off-diagonal `e`, by implicit QL sweeps.
///
/// Complex-symmetric (not Hermitian) matrices admit the same plane rotations
/// with complex cosines and sines; no conjugation appears anywhere.
pub fn tridiagonal_eigenvalues(d: &[Complex64], e: &[Complex64]) -> Result<Vec<Complex64>> {
    let n = d.len();
    if n == 0 || e.len() + 1 != n {
        return Err(Error::InvalidParameter(format!(
            "tridiagonal shape mismatch: {} diagonal, {} off-diagonal",
            n,
            e.len()
        )));
    }
    let zero = Complex64::new(0.0, 0.0);
    let one = Complex64::new(1.0, 0.0);
    let mut d = d.to_vec();
    let mut e: Vec<Complex64> = e.iter().copied().chain(std::iter::once(zero)).collect();

    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m < n - 1 {
                let dd = d[m].norm() + d[m + 1].norm();
                if e[m].norm() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 60 {
                return Err(Error::EigenNonConvergence);
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let r = (g * g + one).sqrt();
            let gr = if (g + r).norm() >= (g - r).norm() { g + r } else { g - r };
            g = d[m] - d[l] + e[l] / gr;
            let (mut s, mut c, mut p) = (one, one, zero);
            let mut deflated = false;
            for i in (l..m).rev() {
                let f = s * e[i];
                let b = c * e[i];
                let r = (f * f + g * g).sqrt();
                e[i + 1] = r;
                if r.norm() == 0.0 {
                    d[i + 1] -= p;
                    e[m] = zero;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                let r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = zero;
        }
    }
    Ok(d)
}

/// Eigenvalues of the Dirichlet grid Hamiltonian `-∂² + V` (second order,
/// interior points), sorted by real part.
pub fn grid_spectrum(v: &Sampled) -> Result<Vec<Complex64>> {
    let n = v.grid.len();
    let h2 = v.grid.spacing().powi(2);
    let d: Vec<Complex64> = v.values[1..n - 1].iter().map(|z| z + 2.0 / h2).collect();
    let e = vec![Complex64::new(-1.0 / h2, 0.0); d.len() - 1];
    let mut ev = tridiagonal_eigenvalues(&d, &e)?;
    ev.sort_by(|a, b| a.re.total_cmp(&b.re));
    Ok(ev)
}
