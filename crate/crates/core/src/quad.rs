//! Globally adaptive Gauss–Kronrod (10/21) quadrature for complex integrands.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use num_complex::Complex64;

use crate::error::{Error, Result};

const XGK: [f64; 11] = [
    0.995_657_163_025_808_1,
    0.973_906_528_517_171_7,
    0.930_157_491_355_708_2,
    0.865_063_366_688_984_5,
    0.780_817_726_586_416_9,
    0.679_409_568_299_024_4,
    0.562_757_134_668_604_7,
    0.433_395_394_129_247_2,
    0.294_392_862_701_460_2,
    0.148_874_338_981_631_2,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874,
    0.032_558_162_307_964_73,
    0.054_755_896_574_351_996,
    0.075_039_674_810_919_95,
    0.093_125_454_583_697_6,
    0.109_387_158_802_297_64,
    0.123_491_976_262_065_85,
    0.134_709_217_311_473_33,
    0.142_775_938_577_060_08,
    0.147_739_104_901_338_49,
    0.149_445_554_002_916_9,
];

// Gauss weights for the nodes XGK[1], XGK[3], ..., XGK[9]
const WG: [f64; 5] = [
    0.066_671_344_308_688_14,
    0.149_451_349_150_580_6,
    0.219_086_362_515_982_04,
    0.269_266_719_309_996_35,
    0.295_524_224_714_752_87,
];

/// Integration window and tolerances.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    /// Improper integrals are truncated to `[-radius, radius]` (possibly
    /// enlarged when the tail bound demands it).
    pub truncation_radius: f64,
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            truncation_radius: 12.0,
            abs_tol: 1e-10,
            rel_tol: 1e-9,
            max_subdivisions: 2000,
        }
    }
}

impl QuadratureSpec {
    pub fn with_radius(mut self, r: f64) -> Self {
        self.truncation_radius = r;
        self
    }

    pub fn with_tolerances(mut self, abs_tol: f64, rel_tol: f64) -> Self {
        self.abs_tol = abs_tol;
        self.rel_tol = rel_tol;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.truncation_radius > 0.0) {
            return Err(Error::InvalidParameter("truncation radius must be positive".into()));
        }
        if !(self.abs_tol > 0.0 && self.rel_tol > 0.0) {
            return Err(Error::InvalidParameter("tolerances must be positive".into()));
        }
        if self.max_subdivisions == 0 {
            return Err(Error::InvalidParameter("max_subdivisions must be at least 1".into()));
        }
        Ok(())
    }
}

/// Integral value with its error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: Complex64,
    pub error: f64,
}

impl std::ops::Add for Estimate {
    type Output = Estimate;
    fn add(self, rhs: Estimate) -> Estimate {
        Estimate {
            value: self.value + rhs.value,
            error: self.error + rhs.error,
        }
    }
}

impl Estimate {
    pub fn scale(self, factor: Complex64) -> Estimate {
        Estimate {
            value: self.value * factor,
            error: self.error * factor.norm(),
        }
    }
}

/// One Gauss–Kronrod 21-point panel on `[a, b]`.
pub fn gk21<F>(f: &F, a: f64, b: f64) -> Estimate
where
    F: Fn(f64) -> Complex64 + ?Sized,
{
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[10];
    let mut gauss = Complex64::new(0.0, 0.0);
    for j in 0..10 {
        let dx = half * XGK[j];
        let pair = f(center - dx) + f(center + dx);
        kronrod += pair * WGK[j];
        if j % 2 == 1 {
            gauss += pair * WG[j / 2];
        }
    }
    Estimate {
        value: kronrod * half,
        error: ((kronrod - gauss) * half).norm(),
    }
}

struct Panel {
    a: f64,
    b: f64,
    est: Estimate,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.est.error == other.est.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.est.error.total_cmp(&other.est.error)
    }
}

/// Adaptive integration of `f` over `[a, b]`: the panel with the largest
/// error is bisected until the total error meets `max(abs_tol, rel_tol |I|)`.
pub fn integrate<F>(f: F, a: f64, b: f64, spec: &QuadratureSpec) -> Result<Estimate>
where
    F: Fn(f64) -> Complex64,
{
    if a == b {
        return Ok(Estimate {
            value: Complex64::new(0.0, 0.0),
            error: 0.0,
        });
    }
    let first = gk21(&f, a, b);
    let mut total = first;
    let mut heap = BinaryHeap::new();
    heap.push(Panel { a, b, est: first });
    let mut panels = 1;
    loop {
        let tol = spec.abs_tol.max(spec.rel_tol * total.value.norm());
        if total.error <= tol {
            break;
        }
        if !total.value.re.is_finite() || !total.value.im.is_finite() {
            return Err(non_convergence(total));
        }
        if panels >= spec.max_subdivisions {
            return Err(non_convergence(total));
        }
        let worst = heap.pop().expect("heap holds every live panel");
        let mid = 0.5 * (worst.a + worst.b);
        let left = gk21(&f, worst.a, mid);
        let right = gk21(&f, mid, worst.b);
        total.value += left.value + right.value - worst.est.value;
        total.error += left.error + right.error - worst.est.error;
        heap.push(Panel {
            a: worst.a,
            b: mid,
            est: left,
        });
        heap.push(Panel {
            a: mid,
            b: worst.b,
            est: right,
        });
        panels += 1;
    }
    // resum to drop the cancellation noise of the running updates
    let value = heap.iter().map(|p| p.est.value).sum();
    let error = heap.iter().map(|p| p.est.error).sum();
    Ok(Estimate { value, error })
}

fn non_convergence(total: Estimate) -> Error {
    Error::QuadratureNonConvergence {
        value_re: total.value.re,
        value_im: total.value.im,
        error: total.error,
    }
}

/// Integral of an analytic `f` along the polyline through `vertices`
/// (complex nodes), each segment parametrized linearly.
pub fn integrate_path<F>(f: F, vertices: &[Complex64], spec: &QuadratureSpec) -> Result<Estimate>
where
    F: Fn(Complex64) -> Complex64,
{
    let mut acc = Estimate {
        value: Complex64::new(0.0, 0.0),
        error: 0.0,
    };
    for seg in vertices.windows(2) {
        let (z0, z1) = (seg[0], seg[1]);
        let dz = z1 - z0;
        let est = integrate(|s| f(z0 + dz * s) * dz, 0.0, 1.0, spec)?;
        acc = acc + est;
    }
    Ok(acc)
}
