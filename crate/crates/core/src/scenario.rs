//! Physical scenarios, derived parameters, the lattice density modulation
//! m(z) and the complex optical potential V(z).
//!
//! All quantities are SI with rates in rad/s. The modulation is a
//! periodized Gaussian centred at a/2 in every cell and normalized so that
//! its cell average is one; `m = 1` therefore describes a uniform ensemble
//! with the same optical depth.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result, C64, SPEED_OF_LIGHT};

/// Temporal profile of the control field.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PulseShape {
    Gaussian,
    Square,
}

/// Every physical input of one lattice-memory configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    /// Signal wavelength (m).
    pub lambda_s: f64,
    /// Homogeneous linewidth of the excited state (rad/s).
    pub gamma: f64,
    /// Common one-photon detuning (rad/s).
    pub delta: f64,
    /// Resonant optical depth of the whole ensemble.
    pub optical_depth: f64,
    /// Ensemble length (m).
    pub length: f64,
    /// Lattice constant (m).
    pub lattice_constant: f64,
    /// Width of the per-site Gaussian density profile (m).
    pub width: f64,
    /// Peak control Rabi frequency (rad/s).
    pub omega0: f64,
    /// Control pulse duration T (s).
    pub pulse_duration: f64,
    pub pulse_shape: PulseShape,
    pub cell_points: usize,
    pub z_points: usize,
    pub tau_points: usize,
}

impl Scenario {
    /// Off-resonant broadband Raman memory: d = 300, T = 3 ns, Δ = 15/T.
    pub fn raman() -> Self {
        Self::from_file(&ScenarioFile::raman()).expect("raman preset is valid")
    }

    /// Resonant narrowband EIT memory: d = 30, T = 30 ns, Δ = 0.
    pub fn eit() -> Self {
        Self::from_file(&ScenarioFile::eit()).expect("eit preset is valid")
    }

    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "raman" => Ok(Self::raman()),
            "eit" => Ok(Self::eit()),
            other => Err(Error::Config(format!(
                "unknown preset '{other}' (expected raman or eit)"
            ))),
        }
    }

    pub fn from_file(f: &ScenarioFile) -> Result<Self> {
        let pulse_duration = f.t_ns * 1e-9;
        let a = f.a_nm * 1e-9;
        let s = Scenario {
            lambda_s: f.lambda_s_nm * 1e-9,
            gamma: 1.0 / (f.gamma_inv_ns * 1e-9),
            delta: f.delta_over_inv_t / pulse_duration,
            optical_depth: f.d,
            length: f.l_mm * 1e-3,
            lattice_constant: a,
            width: f.w_over_a * a,
            omega0: f.omega0_t_product / pulse_duration,
            pulse_duration,
            pulse_shape: f.pulse_shape,
            cell_points: f.cell_points,
            z_points: f.z_points,
            tau_points: f.tau_points,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let f: ScenarioFile = serde_json::from_str(&text)?;
        Self::from_file(&f)
    }

    /// Copy of this scenario with a different lattice constant and the same
    /// relative modulation width w/a.
    pub fn with_lattice_constant(&self, a: f64) -> Self {
        let ratio = self.width / self.lattice_constant;
        Scenario {
            lattice_constant: a,
            width: ratio * a,
            ..self.clone()
        }
    }

    pub fn width_ratio(&self) -> f64 {
        self.width / self.lattice_constant
    }

    /// Adiabaticity indicator T·d·γ; the adiabatic elimination of the
    /// polarization needs this to be much larger than one.
    pub fn adiabaticity(&self) -> f64 {
        self.pulse_duration * self.optical_depth * self.gamma
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("lambda_s", self.lambda_s),
            ("gamma", self.gamma),
            ("d", self.optical_depth),
            ("L", self.length),
            ("a", self.lattice_constant),
            ("T", self.pulse_duration),
            ("omega0", self.omega0),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidScenario(format!(
                    "{name} must be finite and positive, got {v}"
                )));
            }
        }
        if !(self.delta.is_finite() && self.delta >= 0.0) {
            return Err(Error::InvalidScenario(format!(
                "delta must be finite and non-negative, got {}",
                self.delta
            )));
        }
        if !(self.width.is_finite() && self.width > 0.0 && self.width < self.lattice_constant / 2.0)
        {
            return Err(Error::ModulationTooWide {
                a: self.lattice_constant,
                w: self.width,
            });
        }
        if self.length / self.lattice_constant < 10.0 {
            return Err(Error::InvalidScenario(format!(
                "L/a = {:.3} but the envelope treatment needs at least 10 cells",
                self.length / self.lattice_constant
            )));
        }
        CellGrid::new(self.lattice_constant, self.cell_points)?;
        if self.z_points < 2 || self.tau_points < 2 {
            return Err(Error::InvalidScenario(
                "z_points and tau_points must be at least 2".into(),
            ));
        }
        if self.adiabaticity() < 10.0 {
            log::warn!(
                "adiabaticity T*d*gamma = {:.2} is not much larger than one",
                self.adiabaticity()
            );
        }
        Ok(())
    }

    pub fn derive(&self) -> Result<DerivedParams> {
        self.validate()?;
        Ok(derive_params(self))
    }

    /// Grid, modulation and potential samples for one unit cell.
    pub fn cell(&self) -> Result<(CellGrid, Modulation, Vec<C64>)> {
        let p = self.derive()?;
        let grid = CellGrid::new(self.lattice_constant, self.cell_points)?;
        let m = modulation(&grid, self.width)?;
        let v = potential(&m, &p);
        Ok((grid, m, v))
    }
}

/// On-disk scenario description. Keys match the JSON config format exactly.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub lambda_s_nm: f64,
    pub gamma_inv_ns: f64,
    #[serde(rename = "delta_over_invT")]
    pub delta_over_inv_t: f64,
    pub d: f64,
    #[serde(rename = "L_mm")]
    pub l_mm: f64,
    pub a_nm: f64,
    pub w_over_a: f64,
    #[serde(rename = "omega0_T_product")]
    pub omega0_t_product: f64,
    #[serde(rename = "T_ns")]
    pub t_ns: f64,
    pub pulse_shape: PulseShape,
    pub cell_points: usize,
    pub z_points: usize,
    pub tau_points: usize,
}

impl ScenarioFile {
    pub fn raman() -> Self {
        ScenarioFile {
            lambda_s_nm: 800.0,
            gamma_inv_ns: 30.0,
            delta_over_inv_t: 15.0,
            d: 300.0,
            l_mm: 1.0,
            a_nm: 320.0,
            w_over_a: 0.1,
            omega0_t_product: 5.5,
            t_ns: 3.0,
            pulse_shape: PulseShape::Gaussian,
            cell_points: 1024,
            z_points: 200,
            tau_points: 400,
        }
    }

    pub fn eit() -> Self {
        ScenarioFile {
            d: 30.0,
            t_ns: 30.0,
            delta_over_inv_t: 0.0,
            ..Self::raman()
        }
    }
}

impl From<&Scenario> for ScenarioFile {
    fn from(s: &Scenario) -> Self {
        ScenarioFile {
            lambda_s_nm: s.lambda_s * 1e9,
            gamma_inv_ns: 1e9 / s.gamma,
            delta_over_inv_t: s.delta * s.pulse_duration,
            d: s.optical_depth,
            l_mm: s.length * 1e3,
            a_nm: s.lattice_constant * 1e9,
            w_over_a: s.width_ratio(),
            omega0_t_product: s.omega0 * s.pulse_duration,
            t_ns: s.pulse_duration * 1e9,
            pulse_shape: s.pulse_shape,
            cell_points: s.cell_points,
            z_points: s.z_points,
            tau_points: s.tau_points,
        }
    }
}

/// Quantities derived from a [`Scenario`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DerivedParams {
    /// Signal wavenumber 2π/λ_s (1/m).
    pub k_s: f64,
    /// Signal carrier frequency c·k_s (rad/s).
    pub omega_s: f64,
    /// Complex detuning Γ = γ − iΔ (rad/s).
    pub gamma_c: C64,
    /// Coupling κ = sqrt(dγ/L).
    pub kappa: f64,
    pub n_cells: u64,
    /// d·γ, kept separately so κ²L reproduces it without rounding.
    pub d_gamma: f64,
    pub length: f64,
}

impl DerivedParams {
    /// Re{dγ/Γ}/L: the uniform-medium field damping rate (1/m).
    pub fn uniform_damping(&self) -> f64 {
        (self.d_gamma / self.gamma_c).re / self.length
    }

    /// κ² = dγ/L.
    pub fn kappa_sq(&self) -> f64 {
        self.d_gamma / self.length
    }
}

/// Dimensionless groups for diagnostics.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct DimensionlessGroups {
    pub d_gamma_t: f64,
    pub delta_over_gamma: f64,
    pub a_ks_over_pi: f64,
}

pub fn dimensionless_groups(s: &Scenario) -> DimensionlessGroups {
    let k_s = 2.0 * std::f64::consts::PI / s.lambda_s;
    DimensionlessGroups {
        d_gamma_t: s.adiabaticity(),
        delta_over_gamma: s.delta / s.gamma,
        a_ks_over_pi: s.lattice_constant * k_s / std::f64::consts::PI,
    }
}

pub fn derive_params(s: &Scenario) -> DerivedParams {
    let k_s = 2.0 * std::f64::consts::PI / s.lambda_s;
    let d_gamma = s.optical_depth * s.gamma;
    DerivedParams {
        k_s,
        omega_s: SPEED_OF_LIGHT * k_s,
        gamma_c: C64::new(s.gamma, -s.delta),
        kappa: (d_gamma / s.length).sqrt(),
        n_cells: (s.length / s.lattice_constant).floor() as u64,
        d_gamma,
        length: s.length,
    }
}

/// Uniform sampling z_j = j·a/n, j = 0..n-1, of one lattice period.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CellGrid {
    pub a: f64,
    pub n: usize,
}

impl CellGrid {
    pub const MIN_POINTS: usize = 256;

    pub fn new(a: f64, n: usize) -> Result<Self> {
        if n < Self::MIN_POINTS || !n.is_multiple_of(2) {
            return Err(Error::InvalidScenario(format!(
                "cell_points must be even and >= {}, got {n}",
                Self::MIN_POINTS
            )));
        }
        if !(a.is_finite() && a > 0.0) {
            return Err(Error::InvalidScenario(format!("bad period {a}")));
        }
        Ok(CellGrid { a, n })
    }

    pub fn spacing(&self) -> f64 {
        self.a / self.n as f64
    }

    pub fn z(&self, j: usize) -> f64 {
        j as f64 * self.spacing()
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(move |j| self.z(j))
    }
}

/// Samples of the density modulation m(z) on a [`CellGrid`].
#[derive(Clone, Debug, PartialEq)]
pub struct Modulation {
    pub grid: CellGrid,
    pub samples: Vec<f64>,
}

impl Modulation {
    /// m ≡ 1: no lattice.
    pub fn uniform(grid: CellGrid) -> Self {
        Modulation {
            grid,
            samples: vec![1.0; grid.n],
        }
    }

    pub fn cell_average(&self) -> f64 {
        self.samples.iter().sum::<f64>() / self.samples.len() as f64
    }

    /// Periodic extension: m at grid index `j`, any integer.
    pub fn at_index(&self, j: i64) -> f64 {
        let n = self.samples.len() as i64;
        self.samples[j.rem_euclid(n) as usize]
    }
}

/// Normalized periodized Gaussian with width `w`, centred at a/2.
pub fn modulation(grid: &CellGrid, w: f64) -> Result<Modulation> {
    if !(w > 0.0 && w < grid.a / 2.0) {
        return Err(Error::ModulationTooWide { a: grid.a, w });
    }
    Ok(periodized_gaussian(grid, w))
}

/// Image-cell sum of exp(−((z − a/2 − n·a)/w)²), truncated once the
/// farthest image falls below 1e−16 of the peak, then scaled to unit mean.
pub(crate) fn periodized_gaussian(grid: &CellGrid, w: f64) -> Modulation {
    let a = grid.a;
    let images = (6.1 * w / a + 0.5).ceil() as i64 + 1;
    let mut samples: Vec<f64> = grid
        .points()
        .map(|z| {
            (-images..=images)
                .map(|n| {
                    let x = (z - 0.5 * a - n as f64 * a) / w;
                    (-x * x).exp()
                })
                .sum()
        })
        .collect();
    let mean = samples.iter().sum::<f64>() / samples.len() as f64;
    for m in &mut samples {
        *m /= mean;
    }
    Modulation {
        grid: *grid,
        samples,
    }
}

/// V(z) = 1 + 2i·dγ·m(z)/(Γ·L·k_s) at every modulation sample.
pub fn potential(m: &Modulation, p: &DerivedParams) -> Vec<C64> {
    let scale = C64::new(0.0, 2.0 * p.kappa_sq()) / (p.gamma_c * p.k_s);
    m.samples.iter().map(|&mj| 1.0 + scale * mj).collect()
}

/// Lossless comparison potential: Re{V} with the imaginary part dropped.
pub fn lossless(v: &[C64]) -> Vec<C64> {
    v.iter().map(|x| C64::new(x.re, 0.0)).collect()
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "lambda={:.1} nm, d={}, T={:.2} ns, Delta*T={:.2}, a={:.4} nm, w/a={:.3}",
            self.lambda_s * 1e9,
            self.optical_depth,
            self.pulse_duration * 1e9,
            self.delta * self.pulse_duration,
            self.lattice_constant * 1e9,
            self.width_ratio()
        )
    }
}
