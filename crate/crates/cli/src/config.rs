//! Scenario files.
//!
//! A scenario is one TOML file with flat sections; every field has a default,
//! so an empty file is the oscillator scenario with `C = 2i`.
//!
//! ```toml
//! example = "soliton"
//!
//! [params]
//! a = 1.0
//! b = 2.0
//!
//! [lattice]
//! x = [-1.0, 0.0, 1.0]
//! y = [0.5]
//! t = [0.3, 1.0]
//!
//! [methods]
//! run = ["TheoremQuad", "ClosedForm"]
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use susyprop::grid::Grid1D;
use susyprop::kernel::{Method, QuadratureSpec};
use susyprop::susy::PartnerModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Example {
    Oscillator,
    Soliton,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    pub example: Example,
    pub params: Params,
    pub lattice: Lattice,
    pub grid: GridSection,
    pub methods: Methods,
    pub quadrature: Quadrature,
    pub evolution: Evolution,
    pub output: Output,
    pub verify: VerifySection,
}

/// `C = c_re + i c_im` for the oscillator, `a` and `b` for the soliton.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Params {
    pub c_re: f64,
    pub c_im: f64,
    pub a: f64,
    pub b: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Lattice {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub t: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSection {
    pub x_min: f64,
    pub x_max: f64,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Methods {
    pub run: Vec<String>,
    pub spectral_terms: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Quadrature {
    pub truncation_radius: f64,
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PacketKind {
    Gaussian,
    /// The added bound state `φ_α`; its evolution is a pure phase.
    BoundState,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Evolution {
    pub t: Vec<f64>,
    pub packet: PacketKind,
    pub center: f64,
    pub width: f64,
    pub momentum: f64,
    /// Crank-Nicolson step and grid refinement factor for the oracle run.
    pub cn_dt: f64,
    pub cn_refine: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Output {
    pub potential: PathBuf,
    pub propagator: PathBuf,
    pub evolve: PathBuf,
    pub evolve_summary: PathBuf,
    pub verify: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifySection {
    /// Substrings; a check runs if its name contains any of them.
    pub filter: Vec<String>,
    pub tolerances: BTreeMap<String, f64>,
    pub seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            example: Example::Oscillator,
            params: Params::default(),
            lattice: Lattice::default(),
            grid: GridSection::default(),
            methods: Methods::default(),
            quadrature: Quadrature::default(),
            evolution: Evolution::default(),
            output: Output::default(),
            verify: VerifySection::default(),
        }
    }
}

impl Default for Params {
    fn default() -> Self {
        Self { c_re: 0.0, c_im: 2.0, a: 1.0, b: 2.0 }
    }
}

impl Default for Lattice {
    fn default() -> Self {
        let pts: Vec<f64> = (0..11).map(|k| -5.0 + k as f64).collect();
        Self { x: pts.clone(), y: pts, t: vec![0.3, 1.0] }
    }
}

impl Default for GridSection {
    fn default() -> Self {
        Self { x_min: -12.0, x_max: 12.0, points: 481 }
    }
}

impl Default for Methods {
    fn default() -> Self {
        Self {
            run: vec!["TheoremQuad".into(), "ClosedForm".into()],
            spectral_terms: 64,
        }
    }
}

impl Default for Quadrature {
    fn default() -> Self {
        let q = QuadratureSpec::default();
        Self {
            truncation_radius: q.truncation_radius,
            abs_tol: q.abs_tol,
            rel_tol: q.rel_tol,
            max_subdivisions: q.max_subdivisions,
        }
    }
}

impl Default for Evolution {
    fn default() -> Self {
        Self {
            t: vec![0.7],
            packet: PacketKind::Gaussian,
            center: 1.0,
            width: 1.0,
            momentum: 0.0,
            cn_dt: 1e-3,
            cn_refine: 5,
        }
    }
}

impl Default for Output {
    fn default() -> Self {
        Self {
            potential: "potential.csv".into(),
            propagator: "propagator.csv".into(),
            evolve: "evolve.csv".into(),
            evolve_summary: "evolve_summary.json".into(),
            verify: "verify.json".into(),
        }
    }
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        // toml reports line, column and the offending key
        let cfg: Self = toml::from_str(text).context("invalid scenario")?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
        Self::from_toml(&text).with_context(|| format!("in {}", path.display()))
    }

    /// Builds the partner model; parameter checks are the library's.
    pub fn model(&self) -> Result<PartnerModel> {
        let p = &self.params;
        let pm = match self.example {
            Example::Oscillator => PartnerModel::oscillator(Complex64::new(p.c_re, p.c_im))
                .context("params.c_re / params.c_im")?,
            Example::Soliton => PartnerModel::soliton(p.a, p.b).context("params.a / params.b")?,
        };
        Ok(pm)
    }

    pub fn quad(&self) -> Result<QuadratureSpec> {
        let q = &self.quadrature;
        let spec = QuadratureSpec {
            truncation_radius: q.truncation_radius,
            abs_tol: q.abs_tol,
            rel_tol: q.rel_tol,
            max_subdivisions: q.max_subdivisions,
        };
        spec.validate().context("quadrature")?;
        Ok(spec)
    }

    pub fn grid(&self) -> Result<Grid1D> {
        let g = &self.grid;
        Grid1D::new(g.x_min, g.x_max, g.points).context("grid")
    }

    /// Requested methods, sorted by name.
    pub fn methods(&self) -> Result<Vec<Method>> {
        let mut out = Vec::new();
        for (i, name) in self.methods.run.iter().enumerate() {
            let m: Method = name.parse().with_context(|| format!("methods.run[{i}]"))?;
            if !out.contains(&m) {
                out.push(m);
            }
        }
        if out.is_empty() {
            bail!("methods.run: at least one method is required");
        }
        out.sort_by_key(|m| m.as_str());
        Ok(out)
    }

    /// Checks everything that does not depend on the command.
    ///
    /// Lattice times only have to be positive: a time outside the branch cell
    /// of the oscillator becomes a flagged row, not a config error.
    pub fn validate(&self) -> Result<()> {
        self.model()?;
        self.quad()?;
        self.grid()?;
        self.methods()?;
        for (name, list) in [("lattice.x", &self.lattice.x), ("lattice.y", &self.lattice.y)] {
            check_list(name, list, |v| v.is_finite(), "must be finite")?;
        }
        check_list("lattice.t", &self.lattice.t, |v| v.is_finite() && v > 0.0, "must be positive")?;
        check_list("evolution.t", &self.evolution.t, |v| v.is_finite() && v > 0.0, "must be positive")?;
        if self.methods.spectral_terms == 0 {
            bail!("methods.spectral_terms must be positive");
        }
        let e = &self.evolution;
        if !(e.cn_dt.is_finite() && e.cn_dt > 0.0) {
            bail!("evolution.cn_dt = {}: must be positive", e.cn_dt);
        }
        if e.cn_refine == 0 {
            bail!("evolution.cn_refine must be at least 1");
        }
        if !(e.width.is_finite() && e.width > 0.0) || !e.center.is_finite() || !e.momentum.is_finite() {
            bail!("evolution: packet center, width and momentum must be finite with width > 0");
        }
        for (name, tol) in &self.verify.tolerances {
            if !tol.is_finite() {
                bail!("verify.tolerances.{name} = {tol}: must be finite");
            }
        }
        Ok(())
    }

    /// SHA-256 of the resolved scenario, after command-line overrides.
    pub fn digest(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(json))
    }
}

fn check_list(name: &str, list: &[f64], ok: impl Fn(f64) -> bool, what: &str) -> Result<()> {
    if list.is_empty() {
        bail!("{name}: at least one value is required");
    }
    for (i, &v) in list.iter().enumerate() {
        if !ok(v) {
            bail!("{name}[{i}] = {v}: {what}");
        }
    }
    Ok(())
}

/// Sorted copy, so emitted rows come out in lexicographic order.
pub fn sorted(list: &[f64]) -> Vec<f64> {
    let mut v = list.to_vec();
    v.sort_by(f64::total_cmp);
    v
}
