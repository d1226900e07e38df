//! Storage Green's function K(z, τ) mapping an incident signal A_in(τ) to
//! the final spin wave B_out(z) = ∫K(z,τ)A_in(τ)dτ, its discretization, and
//! the optimal storage efficiency from its largest singular value.
//!
//! With the walk-off β dropped, Laplace-transforming the signal equation in
//! z and the spin-wave equation in τ gives
//!
//! ```text
//! K(z,τ) = (iκ/Γ)·Ω*(τ)·exp(−Im{k}z − (W − ω(τ))/Γ)·J₀(2i·sqrt(c_v·κ²·z·(W − ω(τ)))/Γ)
//! ```
//!
//! with W = ω(∞) and c_v = α·c/v_g. [`printed_kernel_entry`] keeps the
//! closed form as it is commonly quoted (√κ prefactor, κ in the Bessel
//! argument, ω(τ) in place of W − ω(τ)); it is not dimensionally consistent
//! and is kept only so the two can be compared against the PDE march.

use std::io::Write;

use nalgebra::DMatrix;
use serde::Serialize;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::bessel::j0_scaled;
use crate::observables::ModeObservables;
use crate::pulse::ControlPulse;
use crate::quadrature::{midpoint_grid, weighted_norm_sq};
use crate::scenario::{DerivedParams, Scenario};
use crate::{Error, Result, C64};

/// Walk-off |β|L/T above which the analytic kernel is refused.
pub const MAX_WALK_OFF: f64 = 0.1;

const POWER_MAX_ITER: usize = 10_000;

/// Sample counts of the kernel grids.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Grids {
    pub z_points: usize,
    pub tau_points: usize,
}

impl Grids {
    pub fn from_scenario(s: &Scenario) -> Self {
        Grids {
            z_points: s.z_points,
            tau_points: s.tau_points,
        }
    }

    pub fn doubled(self) -> Self {
        Grids {
            z_points: 2 * self.z_points,
            tau_points: 2 * self.tau_points,
        }
    }
}

/// Continuous storage kernel for one mode and control pulse.
#[derive(Clone, Copy, Debug)]
pub struct StorageKernel {
    pub pulse: ControlPulse,
    /// iκ/Γ.
    pub coupling: C64,
    pub gamma_c: C64,
    pub kappa_sq: f64,
    pub im_k: f64,
    /// α·c/v_g.
    pub cv: C64,
    pub length: f64,
}

impl StorageKernel {
    pub fn new(p: &DerivedParams, obs: &ModeObservables, pulse: ControlPulse) -> Self {
        StorageKernel {
            pulse,
            coupling: C64::new(0.0, p.kappa) / p.gamma_c,
            gamma_c: p.gamma_c,
            kappa_sq: p.kappa_sq(),
            im_k: obs.im_k,
            cv: obs.coupling_factor(),
            length: p.length,
        }
    }

    pub fn eval(&self, z: f64, tau: f64) -> C64 {
        let omega = self.pulse.rabi(tau);
        if omega == 0.0 {
            return C64::new(0.0, 0.0);
        }
        let rem = self.pulse.remaining(tau);
        let zeta = C64::new(0.0, 2.0) * (self.cv * self.kappa_sq * z * rem).sqrt() / self.gamma_c;
        // J₀ = scaled·e^{|Im ζ|}; fold that growth into the decaying exponent
        let exponent = -self.im_k * z - rem / self.gamma_c + zeta.im.abs();
        self.coupling * omega * exponent.exp() * j0_scaled(zeta)
    }
}

/// K(z,τ) for a mode, evaluated pointwise.
pub fn kernel_entry(
    p: &DerivedParams,
    obs: &ModeObservables,
    pulse: &ControlPulse,
    z: f64,
    tau: f64,
) -> C64 {
    StorageKernel::new(p, obs, *pulse).eval(z, tau)
}

/// The commonly quoted closed form, transcribed literally.
pub fn printed_kernel_entry(
    p: &DerivedParams,
    obs: &ModeObservables,
    pulse: &ControlPulse,
    z: f64,
    tau: f64,
) -> C64 {
    let omega = pulse.rabi(tau);
    let w = pulse.integrated(tau);
    let chi = obs.im_k * z + w / p.gamma_c;
    let arg = 2.0 * (obs.alpha * p.kappa * z * w * obs.c_over_vg()).sqrt() / p.gamma_c;
    p.kappa.sqrt() / p.gamma_c * omega * (-chi).exp() * crate::bessel::j0(arg)
}

/// Weighted discretization K̃_ij = √wz_i·K(z_i,τ_j)·√wτ_j on midpoint grids
/// over [0, L] × [−5T, 5T].
#[derive(Clone, Debug)]
pub struct KernelMatrix {
    pub kernel: StorageKernel,
    pub z: Vec<f64>,
    pub wz: Vec<f64>,
    pub tau: Vec<f64>,
    pub wtau: Vec<f64>,
    pub matrix: DMatrix<C64>,
}

pub fn build_kernel(
    p: &DerivedParams,
    obs: &ModeObservables,
    pulse: ControlPulse,
    grids: Grids,
) -> Result<KernelMatrix> {
    let walk_off = obs.walk_off(p.length, pulse.duration());
    if walk_off > MAX_WALK_OFF {
        return Err(Error::WalkOffTooLarge(walk_off));
    }
    Ok(assemble(StorageKernel::new(p, obs, pulse), grids))
}

/// Discretizes any kernel without the walk-off guard.
pub fn assemble(kernel: StorageKernel, grids: Grids) -> KernelMatrix {
    let (z, wz) = midpoint_grid(0.0, kernel.length, grids.z_points);
    let (lo, hi) = kernel.pulse.window();
    let (tau, wtau) = midpoint_grid(lo, hi, grids.tau_points);
    let row = |i: usize| -> Vec<C64> {
        let sz = wz[i].sqrt();
        (0..tau.len())
            .map(|j| kernel.eval(z[i], tau[j]) * (sz * wtau[j].sqrt()))
            .collect()
    };
    #[cfg(feature = "parallel")]
    let rows: Vec<Vec<C64>> = (0..z.len()).into_par_iter().map(row).collect();
    #[cfg(not(feature = "parallel"))]
    let rows: Vec<Vec<C64>> = (0..z.len()).map(row).collect();
    let matrix = DMatrix::from_fn(z.len(), tau.len(), |i, j| rows[i][j]);
    KernelMatrix {
        kernel,
        z,
        wz,
        tau,
        wtau,
        matrix,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct EfficiencyResult {
    pub eta_opt: f64,
    /// Singular values, non-increasing.
    pub sigma: Vec<f64>,
    /// σ_max from power iteration on K̃ᴴK̃, kept as a cross-check.
    pub sigma_power: f64,
    /// Optimal input A_in(τ_j), ∫|A_in|²dτ = 1.
    pub a_in: Vec<C64>,
    /// Spin wave B_out(z_i) stored from the optimal input.
    pub b_out: Vec<C64>,
}

impl KernelMatrix {
    /// Optimal input continued off the grid through the adjoint kernel:
    /// A(τ) = σ⁻²·∫K*(z,τ)B_out(z)dz.
    pub fn optimal_input_at(&self, res: &EfficiencyResult, tau: f64) -> C64 {
        let s2 = res.eta_opt;
        self.z
            .iter()
            .zip(&self.wz)
            .zip(&res.b_out)
            .map(|((&z, &w), b)| self.kernel.eval(z, tau).conj() * b * w)
            .sum::<C64>()
            / s2
    }
}

/// σ_max² and the associated modes, from a full SVD checked against power
/// iteration.
pub fn optimal_efficiency(k: &KernelMatrix) -> Result<EfficiencyResult> {
    let (nz, nt) = k.matrix.shape();
    let svd = k.matrix.clone().svd(true, true);
    let u = svd.u.as_ref().expect("requested U");
    let v_t = svd.v_t.as_ref().expect("requested V^H");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let sigma: Vec<f64> = order.iter().map(|&i| svd.singular_values[i]).collect();
    let top = order[0];
    let s_max = sigma[0];

    let sigma_power = if s_max > 0.0 {
        power_iteration(&k.matrix)?.0
    } else {
        0.0
    };
    if (sigma_power - s_max).abs() > 1e-9 * s_max {
        log::warn!("power iteration sigma {sigma_power} disagrees with SVD {s_max}");
    }

    // right singular vector is the conjugate of row `top` of Vᴴ
    let mut a_in: Vec<C64> = (0..nt)
        .map(|j| v_t[(top, j)].conj() / k.wtau[j].sqrt())
        .collect();
    let mut b_out: Vec<C64> = (0..nz)
        .map(|i| u[(i, top)] * s_max / k.wz[i].sqrt())
        .collect();
    // fix the phase: A_in real and positive at its largest sample
    let peak = a_in
        .iter()
        .copied()
        .max_by(|a, b| a.norm().total_cmp(&b.norm()))
        .unwrap_or(C64::new(1.0, 0.0));
    if peak.norm() > 0.0 {
        let phase = peak.conj() / peak.norm();
        a_in.iter_mut().for_each(|x| *x *= phase);
        b_out.iter_mut().for_each(|x| *x *= phase);
    }
    Ok(EfficiencyResult {
        eta_opt: s_max * s_max,
        sigma,
        sigma_power,
        a_in,
        b_out,
    })
}

/// Largest singular value and right singular vector by power iteration on
/// the Gram operator K̃ᴴK̃.
pub fn power_iteration(m: &DMatrix<C64>) -> Result<(f64, Vec<C64>)> {
    let nt = m.ncols();
    let mut v = nalgebra::DVector::from_fn(nt, |j, _| C64::new(1.0 + (j as f64 * 0.37).sin() * 0.1, 0.0));
    v /= C64::new(v.norm(), 0.0);
    for _ in 0..POWER_MAX_ITER {
        let w = m.ad_mul(&(m * &v));
        let rho = v.dotc(&w).re;
        let resid = (&w - &v * C64::new(rho, 0.0)).norm();
        let wn = w.norm();
        if wn == 0.0 {
            return Ok((0.0, v.iter().copied().collect()));
        }
        if resid <= 1e-9 * rho {
            return Ok((rho.sqrt(), v.iter().copied().collect()));
        }
        v = w / C64::new(wn, 0.0);
    }
    Err(Error::NoConvergence(POWER_MAX_ITER))
}

/// B_out and η = ∫|B_out|²dz / ∫|A_in|²dτ for an input sampled on the τ grid.
pub fn storage_efficiency(k: &KernelMatrix, a_in: &[C64]) -> Result<(Vec<C64>, f64)> {
    if a_in.len() != k.tau.len() {
        return Err(Error::LengthMismatch {
            expected: k.tau.len(),
            got: a_in.len(),
        });
    }
    let norm_in = weighted_norm_sq(a_in, &k.wtau);
    if norm_in == 0.0 || !norm_in.is_finite() {
        return Err(Error::ZeroNormInput);
    }
    let x = nalgebra::DVector::from_fn(a_in.len(), |j, _| a_in[j] * k.wtau[j].sqrt());
    let y = &k.matrix * x;
    let b: Vec<C64> = (0..k.z.len()).map(|i| y[i] / k.wz[i].sqrt()).collect();
    let eta = weighted_norm_sq(&b, &k.wz) / norm_in;
    Ok((b, eta))
}

/// Writes the optimal input and spin-wave blocks as two CSV files and the
/// singular value summary as JSON.
pub fn export(
    k: &KernelMatrix,
    res: &EfficiencyResult,
    input_csv: impl Write,
    spin_wave_csv: impl Write,
    summary_json: impl Write,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(input_csv);
    w.write_record(["tau_ns", "re_Ain", "im_Ain"])?;
    for (t, a) in k.tau.iter().zip(&res.a_in) {
        w.write_record([
            format!("{:.9e}", t * 1e9),
            format!("{:.12e}", a.re),
            format!("{:.12e}", a.im),
        ])?;
    }
    w.flush()?;
    let mut w = csv::Writer::from_writer(spin_wave_csv);
    w.write_record(["z_um", "re_Bout", "im_Bout"])?;
    for (z, b) in k.z.iter().zip(&res.b_out) {
        w.write_record([
            format!("{:.9e}", z * 1e6),
            format!("{:.12e}", b.re),
            format!("{:.12e}", b.im),
        ])?;
    }
    w.flush()?;
    #[derive(Serialize)]
    struct Summary<'a> {
        eta_opt: f64,
        sigma: &'a [f64],
    }
    serde_json::to_writer_pretty(
        summary_json,
        &Summary {
            eta_opt: res.eta_opt,
            sigma: &res.sigma,
        },
    )?;
    Ok(())
}
