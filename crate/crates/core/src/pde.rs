//! Direct integration of the storage equations in the moving frame,
//!
//! ```text
//! [∂_z + Im{k}] A = −c_v·g·Ω(τ + βz)·B
//! [∂_τ + |Ω(τ + βz)|²/Γ] B = g·Ω*(τ + βz)·A
//! ```
//!
//! with g = iκ/Γ and c_v = α·c/v_g, including the control walk-off β.
//! The signal equation is stepped in z with the trapezoidal rule and an
//! integrating factor for Im{k}; the spin-wave equation is stepped in τ by
//! exponential time differencing, which treats the control-induced damping
//! exactly and the source as linear over the step. At each (z, τ) node the two
//! implicit updates form a 2×2 linear system that is solved in closed form,
//! which is the converged limit of the usual A/B fixed-point iteration.

use std::io::Write;

use crate::observables::ModeObservables;
use crate::pulse::ControlPulse;
use crate::quadrature::{node_grid, trapezoid_weights, weighted_norm_sq};
use crate::scenario::DerivedParams;
use crate::{Error, Result, C64};

#[derive(Clone, Copy, Debug, Default)]
pub struct PdeOptions {
    /// Replaces the mode's walk-off; `Some(0)` reproduces the kernel setting.
    pub beta_override: Option<C64>,
    /// Keep A and B on the whole grid.
    pub keep_fields: bool,
}

/// Fields on the (z, τ) node grid, indexed [τ][z].
#[derive(Clone, Debug)]
pub struct FieldState {
    pub z: Vec<f64>,
    pub tau: Vec<f64>,
    pub a: Vec<Vec<C64>>,
    pub b: Vec<Vec<C64>>,
}

#[derive(Clone, Debug)]
pub struct PdeResult {
    pub z: Vec<f64>,
    pub tau: Vec<f64>,
    pub b_out: Vec<C64>,
    pub eta: f64,
    pub fields: Option<FieldState>,
}

/// τ nodes used by [`propagate`]: τ_min + j·Δτ, j = 0..=tau_points.
pub fn tau_nodes(pulse: &ControlPulse, tau_points: usize) -> Vec<f64> {
    let (lo, hi) = pulse.window();
    node_grid(lo, hi, tau_points)
}

/// Marches the equations from B = 0 at τ_min to τ_max with A(0, τ) given
/// by `a_in` on [`tau_nodes`]. Returns B at τ_max and the efficiency.
pub fn propagate(
    p: &DerivedParams,
    obs: &ModeObservables,
    pulse: &ControlPulse,
    a_in: &[C64],
    z_points: usize,
    opts: PdeOptions,
) -> Result<PdeResult> {
    let nt = a_in.len().checked_sub(1).filter(|&n| n >= 1).ok_or(Error::LengthMismatch {
        expected: 2,
        got: a_in.len(),
    })?;
    if z_points < 1 {
        return Err(Error::InvalidScenario("pde needs at least one z step".into()));
    }
    let tau = tau_nodes(pulse, nt);
    let z = node_grid(0.0, p.length, z_points);
    let dtau = tau[1] - tau[0];
    let norm_in = weighted_norm_sq(a_in, &trapezoid_weights(nt + 1, dtau));
    if norm_in == 0.0 || !norm_in.is_finite() {
        return Err(Error::ZeroNormInput);
    }
    let h = z[1] - z[0];
    let beta_c = opts.beta_override.unwrap_or(obs.beta);
    if beta_c.im.abs() * p.length > 0.01 * pulse.duration() {
        log::warn!(
            "imaginary walk-off |Im beta| L = {:.3e} s is not small against T; only Re beta shifts the control",
            beta_c.im.abs() * p.length
        );
    }
    let beta = beta_c.re;
    let g = C64::new(0.0, p.kappa) / p.gamma_c;
    let cv = obs.coupling_factor();
    let atten = (-obs.im_k * h).exp();
    let gamma_c = p.gamma_c;

    // Control seen at node (z_i, τ_j).
    let rabi = |i: usize, t: f64| pulse.rabi(t + beta * z[i]);
    let integ = |i: usize, t: f64| pulse.integrated(t + beta * z[i]);

    let nz = z.len();
    let mut a_cur = vec![C64::new(0.0, 0.0); nz];
    let mut b_cur = vec![C64::new(0.0, 0.0); nz];
    // level j = 0: B = 0, A follows the free attenuation
    a_cur[0] = a_in[0];
    for i in 1..nz {
        a_cur[i] = a_cur[i - 1] * atten;
    }
    let mut fields = opts.keep_fields.then(|| FieldState {
        z: z.clone(),
        tau: tau.clone(),
        a: vec![a_cur.clone()],
        b: vec![b_cur.clone()],
    });

    let mut a_next = vec![C64::new(0.0, 0.0); nz];
    let mut b_next = vec![C64::new(0.0, 0.0); nz];
    for j in 0..nt {
        let (t0, t1) = (tau[j], tau[j + 1]);
        // B_{j+1} = P_i + s_i A_{j+1}(z_i) at every z_i
        let coeffs = |i: usize| -> (C64, C64, f64) {
            let x = (integ(i, t1) - integ(i, t0)) / gamma_c;
            let (w0, w1) = etd_weights(x);
            let om0 = rabi(i, t0);
            let om1 = rabi(i, t1);
            let pp = b_cur[i] * (-x).exp() + dtau * w0 * g * om0 * a_cur[i];
            let s = dtau * w1 * g * om1;
            (pp, s, om1)
        };
        a_next[0] = a_in[j + 1];
        let (p0, s0, mut om_prev) = coeffs(0);
        b_next[0] = p0 + s0 * a_next[0];
        for i in 0..nz - 1 {
            let q = a_next[i] * atten - (0.5 * h) * cv * g * atten * om_prev * b_next[i];
            let (pp, s, om1) = coeffs(i + 1);
            let t = -(0.5 * h) * cv * g * om1;
            let denom = 1.0 - t * s;
            if denom.norm() < 1e-12 {
                return Err(Error::StepSize {
                    tau: t1,
                    reason: "implicit node update is singular".into(),
                });
            }
            a_next[i + 1] = (q + t * pp) / denom;
            b_next[i + 1] = pp + s * a_next[i + 1];
            om_prev = om1;
        }
        if !b_next.iter().chain(&a_next).all(|x| x.re.is_finite() && x.im.is_finite()) {
            return Err(Error::StepSize {
                tau: t1,
                reason: "non-finite field".into(),
            });
        }
        std::mem::swap(&mut a_cur, &mut a_next);
        std::mem::swap(&mut b_cur, &mut b_next);
        if let Some(f) = fields.as_mut() {
            f.a.push(a_cur.clone());
            f.b.push(b_cur.clone());
        }
    }

    let eta = weighted_norm_sq(&b_cur, &trapezoid_weights(nz, h)) / norm_in;
    Ok(PdeResult {
        z,
        tau,
        b_out: b_cur,
        eta,
        fields,
    })
}

/// Weights (w₀, w₁) of ∫₀^Δ e^{−x(Δ−s)/Δ} f(s) ds ≈ Δ(w₀f(0) + w₁f(Δ)) for
/// f linear on the step; they tend to the trapezoid weights ½, ½ as x → 0.
fn etd_weights(x: C64) -> (C64, C64) {
    let (phi1, phi2) = if x.norm() < 0.5 {
        // φ₁ = Σ(−x)ⁿ/(n+1)!, φ₂ = Σ(−x)ⁿ(n+1)/(n+2)!
        let mut p = C64::new(1.0, 0.0);
        let (mut s1, mut s2) = (C64::new(0.0, 0.0), C64::new(0.0, 0.0));
        let mut fact = 1.0;
        for n in 0..16 {
            fact *= (n + 1) as f64;
            s1 += p / fact;
            s2 += p * ((n + 1) as f64 / (fact * (n + 2) as f64));
            p *= -x;
        }
        (s1, s2)
    } else {
        let e = (-x).exp();
        ((1.0 - e) / x, (1.0 - e * (1.0 + x)) / (x * x))
    };
    (phi2, phi1 - phi2)
}

/// Writes |A|² or |B|² as a CSV matrix: header row of z in µm, then one
/// row per τ node led by τ in ns.
pub fn write_intensity_csv<W: Write>(out: W, f: &FieldState, spin_wave: bool) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["tau_ns".to_string()];
    header.extend(f.z.iter().map(|z| format!("{:.6e}", z * 1e6)));
    w.write_record(&header)?;
    let data = if spin_wave { &f.b } else { &f.a };
    for (t, row) in f.tau.iter().zip(data) {
        let mut rec = vec![format!("{:.6e}", t * 1e9)];
        rec.extend(row.iter().map(|x| format!("{:.9e}", x.norm_sqr())));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}
