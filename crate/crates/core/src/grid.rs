use num_complex::Complex64;

use crate::error::{Error, Result};

/// Uniform grid `x_i = x_min + i h`, `i = 0..n_points`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid1D {
    x_min: f64,
    x_max: f64,
    n_points: usize,
}

impl Grid1D {
    pub fn new(x_min: f64, x_max: f64, n_points: usize) -> Result<Self> {
        if !(x_min.is_finite() && x_max.is_finite()) || x_min >= x_max {
            return Err(Error::InvalidParameter(format!(
                "grid bounds must satisfy x_min < x_max, got [{x_min}, {x_max}]"
            )));
        }
        if n_points < 3 {
            return Err(Error::InvalidParameter(format!(
                "grid needs at least 3 points, got {n_points}"
            )));
        }
        Ok(Self {
            x_min,
            x_max,
            n_points,
        })
    }

    /// Grid on `[x_min, x_max]` whose spacing is at most `h`.
    pub fn with_spacing(x_min: f64, x_max: f64, h: f64) -> Result<Self> {
        if !(h > 0.0) {
            return Err(Error::InvalidParameter(format!("spacing must be positive, got {h}")));
        }
        let cells = ((x_max - x_min) / h).ceil() as usize;
        Self::new(x_min, x_max, cells + 1)
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn len(&self) -> usize {
        self.n_points
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        (self.x_max - self.x_min) / (self.n_points - 1) as f64
    }

    pub fn point(&self, i: usize) -> f64 {
        // interpolate from both ends so the last point is exactly x_max
        let n = (self.n_points - 1) as f64;
        let s = i as f64 / n;
        self.x_min * (1.0 - s) + self.x_max * s
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n_points).map(|i| self.point(i)).collect()
    }

    /// Same interval with `factor` times as many cells.
    pub fn refine(&self, factor: usize) -> Result<Self> {
        Self::new(self.x_min, self.x_max, (self.n_points - 1) * factor.max(1) + 1)
    }

    /// Trapezoidal rule over the samples. For smooth integrands that vanish at
    /// both ends this converges faster than any power of the spacing.
    pub fn integrate(&self, values: &[Complex64]) -> Complex64 {
        debug_assert_eq!(values.len(), self.n_points);
        let h = self.spacing();
        let inner: Complex64 = values[1..values.len() - 1].iter().sum();
        h * (inner + 0.5 * (values[0] + values[values.len() - 1]))
    }

    /// `sqrt(∫|f|² dx)` by the trapezoidal rule.
    pub fn l2_norm(&self, values: &[Complex64]) -> f64 {
        let sq: Vec<Complex64> = values
            .iter()
            .map(|v| Complex64::new(v.norm_sqr(), 0.0))
            .collect();
        self.integrate(&sq).re.sqrt()
    }

    pub fn check_samples(&self, values: &[Complex64]) -> Result<()> {
        if values.len() == self.n_points {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!(
                "{} samples for a grid of {} points",
                values.len(),
                self.n_points
            )))
        }
    }
}

/// Complex samples of a function on a [`Grid1D`].
#[derive(Debug, Clone, PartialEq)]
pub struct Sampled {
    pub grid: Grid1D,
    pub values: Vec<Complex64>,
}

impl Sampled {
    pub fn new(grid: Grid1D, values: Vec<Complex64>) -> Result<Self> {
        grid.check_samples(&values)?;
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: Grid1D, f: impl Fn(f64) -> Complex64) -> Self {
        let values = grid.points().into_iter().map(f).collect();
        Self { grid, values }
    }

    pub fn l2_norm(&self) -> f64 {
        self.grid.l2_norm(&self.values)
    }

    /// `‖self - other‖₂ / ‖other‖₂`.
    pub fn relative_l2_distance(&self, other: &Sampled) -> Result<f64> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch("relative distance between different grids".into()));
        }
        let diff: Vec<Complex64> = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a - b)
            .collect();
        Ok(self.grid.l2_norm(&diff) / other.l2_norm())
    }

    pub fn max_abs_diff(&self, other: &Sampled) -> Result<f64> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch("sup distance between different grids".into()));
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }

    /// Drop `k` samples at each end.
    pub fn trim(&self, k: usize) -> Result<Sampled> {
        let n = self.grid.len();
        if 2 * k + 3 > n {
            return Err(Error::GridMismatch(format!("cannot trim {k} points from each end of {n}")));
        }
        let grid = Grid1D::new(self.grid.point(k), self.grid.point(n - 1 - k), n - 2 * k)?;
        Sampled::new(grid, self.values[k..n - k].to_vec())
    }

    /// Keep every `stride`-th sample, giving a coarser grid with the same ends.
    pub fn subsample(&self, stride: usize) -> Result<Sampled> {
        if stride == 0 || !(self.grid.len() - 1).is_multiple_of(stride) {
            return Err(Error::GridMismatch(format!(
                "stride {stride} does not divide {} cells",
                self.grid.len() - 1
            )));
        }
        let grid = Grid1D::new(
            self.grid.x_min(),
            self.grid.x_max(),
            (self.grid.len() - 1) / stride + 1,
        )?;
        let values = self.values.iter().step_by(stride).copied().collect();
        Ok(Sampled { grid, values })
    }
}
