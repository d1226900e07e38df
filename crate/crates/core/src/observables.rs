//! Memory-relevant scalars of a Bloch mode: group velocity, overlap with the
//! lattice, walk-off, damping parameter and entrance-face reflectivity.

use serde::Serialize;

use crate::bloch::{self, BlochMode};
use crate::quadrature::periodic_simpson;
use crate::scenario::{DerivedParams, Modulation, Scenario};
use crate::{Error, Result, C64, SPEED_OF_LIGHT};

/// Modes whose bilinear norm is off by more than this are rejected.
const NORM_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ModeObservables {
    /// Complex crystal momentum (1/m).
    pub k: C64,
    /// Complex group velocity (m/s).
    pub v_g: C64,
    pub alpha: C64,
    /// Walk-off 1/v_g − 1/c (s/m).
    pub beta: C64,
    pub mu: f64,
    pub reflectivity: f64,
    pub im_k: f64,
}

impl ModeObservables {
    pub fn c_over_vg(&self) -> C64 {
        SPEED_OF_LIGHT / self.v_g
    }

    /// α·c/v_g, the coefficient of the signal equation's coupling term.
    pub fn coupling_factor(&self) -> C64 {
        self.alpha * self.c_over_vg()
    }

    /// |β|·L/T, the control walk-off across the ensemble in pulse units.
    pub fn walk_off(&self, length: f64, pulse_duration: f64) -> f64 {
        self.beta.norm() * length / pulse_duration
    }

    /// Observables of a medium with no band structure and the given Im k.
    pub fn uniform(im_k: f64) -> Self {
        ModeObservables {
            k: C64::new(0.0, im_k),
            v_g: C64::new(SPEED_OF_LIGHT, 0.0),
            alpha: C64::new(1.0, 0.0),
            beta: C64::new(0.0, 0.0),
            mu: 0.0,
            reflectivity: 0.0,
            im_k,
        }
    }
}

fn check_normalized(mode: &BlochMode) -> Result<()> {
    let dev = (mode.pairing() - 1.0).norm();
    if dev > NORM_TOL {
        return Err(Error::UnnormalizedMode(dev));
    }
    Ok(())
}

/// v_g = (c/k_s)·∫ψ(−i∂_zφ)dz.
pub fn group_velocity(mode: &BlochMode) -> Result<C64> {
    check_normalized(mode)?;
    let integrand: Vec<C64> = mode
        .psi
        .iter()
        .zip(&mode.dphi)
        .map(|(p, d)| -C64::i() * p * d)
        .collect();
    Ok(periodic_simpson(&integrand, mode.grid.spacing()) * (SPEED_OF_LIGHT / mode.k_s))
}

/// α = ∫ψφm dz.
pub fn overlap(mode: &BlochMode, m: &Modulation) -> Result<C64> {
    check_normalized(mode)?;
    if m.samples.len() != mode.phi.len() {
        return Err(Error::LengthMismatch {
            expected: mode.phi.len(),
            got: m.samples.len(),
        });
    }
    let integrand: Vec<C64> = mode
        .psi
        .iter()
        .zip(&mode.phi)
        .zip(&m.samples)
        .map(|((p, f), mj)| p * f * *mj)
        .collect();
    Ok(periodic_simpson(&integrand, mode.grid.spacing()))
}

/// μ = Im{k}·L/Re{dγ/Γ} − 1: zero without band structure, positive when the
/// lattice enhances absorption and negative for anomalous transmission.
pub fn damping_parameter(im_k: f64, d: f64, gamma: f64, gamma_c: C64, length: f64) -> Result<f64> {
    let uniform = (d * gamma / gamma_c).re;
    if !(uniform.is_finite() && uniform != 0.0) {
        return Err(Error::DampingUndefined);
    }
    Ok(im_k * length / uniform - 1.0)
}

/// Power reflectivity of the vacuum/lattice interface at z = 0.
pub fn reflectivity(mode: &BlochMode) -> Result<f64> {
    let u0 = mode.u[0];
    let r1 = mode.k_s * u0;
    let r2 = mode.k * u0 - C64::i() * mode.du_at_origin();
    let sum = r1 + r2;
    if sum.norm() <= 1e-14 * (r1.norm() + r2.norm()) {
        return Err(Error::TotalReflection);
    }
    let r = ((r1 - r2) / sum).norm_sqr();
    if r > 1.0 {
        return Err(Error::ReflectivityAboveOne(r));
    }
    Ok(r)
}

pub fn observables(mode: &BlochMode, m: &Modulation, p: &DerivedParams) -> Result<ModeObservables> {
    let v_g = group_velocity(mode)?;
    let alpha = overlap(mode, m)?;
    let mu = damping_parameter(mode.im_k, p.d_gamma, 1.0, p.gamma_c, p.length)?;
    Ok(ModeObservables {
        k: mode.k,
        v_g,
        alpha,
        beta: 1.0 / v_g - 1.0 / SPEED_OF_LIGHT,
        mu,
        reflectivity: reflectivity(mode)?,
        im_k: mode.im_k,
    })
}

/// Mode and observables of one scenario.
#[derive(Clone, Debug)]
pub struct PointAnalysis {
    pub params: DerivedParams,
    pub modulation: Modulation,
    pub potential: Vec<C64>,
    pub mode: BlochMode,
    pub obs: ModeObservables,
}

pub fn analyze(s: &Scenario) -> Result<PointAnalysis> {
    analyze_with_tol(s, bloch::DEFAULT_TOL)
}

pub fn analyze_with_tol(s: &Scenario, tol: f64) -> Result<PointAnalysis> {
    let params = s.derive()?;
    let (_, modulation, potential) = s.cell()?;
    let mode = bloch::solve(&potential, params.k_s, s.lattice_constant, tol)?;
    let obs = observables(&mode, &modulation, &params)?;
    Ok(PointAnalysis {
        params,
        modulation,
        potential,
        mode,
        obs,
    })
}

/// Same as [`analyze`] with the lattice replaced by a uniform ensemble.
pub fn analyze_uniform(s: &Scenario) -> Result<PointAnalysis> {
    let params = s.derive()?;
    let (grid, _, _) = s.cell()?;
    let modulation = Modulation::uniform(grid);
    let potential = crate::scenario::potential(&modulation, &params);
    let mode = bloch::solve(&potential, params.k_s, s.lattice_constant, bloch::DEFAULT_TOL)?;
    let obs = observables(&mode, &modulation, &params)?;
    Ok(PointAnalysis {
        params,
        modulation,
        potential,
        mode,
        obs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn damping_parameter_zero_for_uniform_rate() {
        let gamma_c = C64::new(3.3e7, -5e9);
        let uniform = (300.0 * 3.3e7 / gamma_c).re / 1e-3;
        let mu = damping_parameter(uniform, 300.0, 3.3e7, gamma_c, 1e-3).unwrap();
        assert!(mu.abs() < 1e-14);
        let enhanced = damping_parameter(1.5 * uniform, 300.0, 3.3e7, gamma_c, 1e-3).unwrap();
        assert!((enhanced - 0.5).abs() < 1e-14);
        assert!(matches!(
            damping_parameter(1.0, 0.0, 1.0, gamma_c, 1e-3),
            Err(Error::DampingUndefined)
        ));
    }

    #[test]
    fn vacuum_observables() {
        let s = Scenario::raman();
        let p = s.derive().unwrap();
        let (grid, m, _) = s.cell().unwrap();
        let v = vec![C64::new(1.0, 0.0); grid.n];
        let mode = bloch::solve(&v, p.k_s, s.lattice_constant, bloch::DEFAULT_TOL).unwrap();
        let vg = group_velocity(&mode).unwrap();
        assert!((vg / SPEED_OF_LIGHT - 1.0).norm() < 1e-9);
        // plane wave: ψφ = 1/a, so α is the cell average of m
        assert!((overlap(&mode, &m).unwrap() - 1.0).norm() < 1e-9);
        assert!(reflectivity(&mode).unwrap() < 1e-18);
    }

    #[test]
    fn uniform_medium_reflectivity_is_fresnel() {
        for s in [Scenario::raman(), Scenario::eit()] {
            let pa = analyze_uniform(&s).unwrap();
            let k = pa.params.k_s * pa.potential[0].sqrt();
            let fresnel = ((pa.params.k_s - k) / (pa.params.k_s + k)).norm_sqr();
            let r = pa.obs.reflectivity;
            assert!((r - fresnel).abs() <= 1e-8 * fresnel, "{r} vs {fresnel}");
        }
    }

    #[test]
    fn rejects_unnormalized_mode() {
        let s = Scenario::eit();
        let mut pa = analyze(&s).unwrap();
        for x in &mut pa.mode.psi {
            *x *= 1.01;
        }
        assert!(matches!(
            group_velocity(&pa.mode),
            Err(Error::UnnormalizedMode(_))
        ));
    }
}
