//! Bloch modes of the carrier equation φ'' + k_s²V(z)φ = 0 for a complex
//! periodic potential, via the one-period transfer (monodromy) matrix.
//!
//! The state integrated is (φ, φ'/k_s). Its two fundamental solutions are
//! stored at every cell-grid node so that a mode for any eigenvalue of the
//! monodromy can be assembled without re-integrating.
//!
//! The conjugate mode ψ is the left eigenfunction of M = −V⁻¹∂² under the
//! bilinear pairing ∫ψf dz. Its transpose acts as ψ ↦ −(ψ/V)'', so with
//! ψ = Vχ the eigen-condition becomes χ'' + k_s²Vχ = 0: χ is a carrier
//! solution too. Taking the one with the reciprocal monodromy eigenvalue
//! (crystal momentum −k) makes ψφ periodic. With the damping factors
//! stripped, ψ = N·V·χ·e^{−Im k z}, and N fixes ∫₀ᵃψφ dz = 1.

use std::io::Write;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::ode::{Dopri5, Tolerance};
use crate::quadrature::periodic_simpson;
use crate::scenario::{CellGrid, Scenario};
use crate::spline::PeriodicSpline;
use crate::{Error, Result, C64};

/// Default relative integration tolerance.
pub const DEFAULT_TOL: f64 = 1e-11;

/// Eigenvalue pairs closer than this are treated as a defective monodromy.
const DEGENERACY_SPLIT: f64 = 1e-10;

/// One-period transfer matrix on (φ, φ'/k_s).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Monodromy {
    pub matrix: [[C64; 2]; 2],
    pub tol: f64,
}

impl Monodromy {
    pub fn trace(&self) -> C64 {
        self.matrix[0][0] + self.matrix[1][1]
    }

    pub fn det(&self) -> C64 {
        self.matrix[0][0] * self.matrix[1][1] - self.matrix[0][1] * self.matrix[1][0]
    }

    /// Both eigenvalues, smaller modulus first.
    pub fn eigenvalues(&self) -> (C64, C64) {
        let half = self.trace() / 2.0;
        let root = (half * half - self.det()).sqrt();
        let (p, m) = (half + root, half - root);
        if p.norm() <= m.norm() {
            (p, m)
        } else {
            (m, p)
        }
    }

    /// Right eigenvector for eigenvalue `lambda`, from whichever row of
    /// M − λ gives the better-conditioned null vector.
    pub fn eigenvector(&self, lambda: C64) -> [C64; 2] {
        let m = &self.matrix;
        let v1 = [m[0][1], lambda - m[0][0]];
        let v2 = [lambda - m[1][1], m[1][0]];
        let n1 = v1[0].norm_sqr() + v1[1].norm_sqr();
        let n2 = v2[0].norm_sqr() + v2[1].norm_sqr();
        if n1 >= n2 {
            v1
        } else {
            v2
        }
    }
}

/// The two fundamental solutions with initial data (1, 0) and (0, 1),
/// sampled at the n + 1 nodes z_j = j·a/n.
#[derive(Clone, Debug)]
pub struct Fundamental {
    pub grid: CellGrid,
    pub k_s: f64,
    pub tol: f64,
    /// [φ₁, φ₁'/k_s, φ₂, φ₂'/k_s] at each node.
    pub nodes: Vec<[C64; 4]>,
    pub steps: usize,
}

impl Fundamental {
    pub fn monodromy(&self) -> Monodromy {
        let y = self.nodes[self.grid.n];
        Monodromy {
            matrix: [[y[0], y[2]], [y[1], y[3]]],
            tol: self.tol,
        }
    }

    /// (φ, φ'/k_s) at node j for initial condition v.
    fn combine(&self, j: usize, v: [C64; 2]) -> (C64, C64) {
        let y = &self.nodes[j];
        (y[0] * v[0] + y[2] * v[1], y[1] * v[0] + y[3] * v[1])
    }
}

/// Integrates both fundamental solutions across one period. `v` holds the
/// potential at the grid points z_j = j·a/n and is interpolated by a
/// periodic cubic spline in between.
pub fn fundamental(v: &[C64], k_s: f64, a: f64, tol: f64) -> Result<Fundamental> {
    let grid = CellGrid::new(a, v.len())?;
    let spline = PeriodicSpline::new(v, a);
    let rhs = |z: f64, y: &[C64; 4]| {
        let vk = spline.eval(z) * k_s;
        [y[1] * k_s, -vk * y[0], y[3] * k_s, -vk * y[2]]
    };
    let h = grid.spacing();
    let mut stepper = Dopri5::new(rhs, Tolerance::relative(tol), h);
    let one = C64::new(1.0, 0.0);
    let zero = C64::new(0.0, 0.0);
    let mut y = [one, zero, zero, one];
    let mut nodes = Vec::with_capacity(grid.n + 1);
    nodes.push(y);
    for j in 0..grid.n {
        let z1 = if j + 1 == grid.n { a } else { grid.z(j + 1) };
        stepper.advance(grid.z(j), z1, &mut y)?;
        nodes.push(y);
    }
    Ok(Fundamental {
        grid,
        k_s,
        tol,
        steps: stepper.steps,
        nodes,
    })
}

pub fn monodromy(v: &[C64], k_s: f64, a: f64, tol: f64) -> Result<Monodromy> {
    Ok(fundamental(v, k_s, a, tol)?.monodromy())
}

/// Forward-branch Floquet data of a monodromy.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CrystalMomentum {
    /// Complex crystal momentum, Re k in (−π/a, π/a], Im k ≥ 0 up to roundoff.
    pub k: C64,
    /// Forward eigenvalue e^{ika}, |λ| ≤ 1.
    pub lambda: C64,
    /// Backward eigenvalue, ideally 1/λ.
    pub lambda_back: C64,
}

/// Selects the decaying (|λ| ≤ 1) eigenvalue as the forward wave. When
/// both have unit modulus the wave carrying positive flux Im(φ̄φ') is
/// taken, which in the second band has Re k < 0.
/// Fails at a degenerate band edge, where no mode pair can be built.
pub fn crystal_momentum(m: &Monodromy, a: f64) -> Result<CrystalMomentum> {
    let (small, large) = m.eigenvalues();
    let split = (small - large).norm();
    if split < DEGENERACY_SPLIT {
        return Err(Error::BandEdgeDegeneracy { split });
    }
    Ok(floquet_branch(m, a))
}

/// Branch selection of [`crystal_momentum`] without the degeneracy check.
/// At a degenerate edge k is still well defined.
pub fn floquet_branch(m: &Monodromy, a: f64) -> CrystalMomentum {
    let (small, large) = m.eigenvalues();
    let (lambda, lambda_back) = if (large.norm() - small.norm()).abs() < 1e-9 {
        let flux = |lambda: C64| {
            let [phi, dphi] = m.eigenvector(lambda);
            (phi.conj() * dphi).im / (phi.norm_sqr() + dphi.norm_sqr())
        };
        let (fs, fl) = (flux(small), flux(large));
        // at a degeneracy both fluxes vanish; fall back to Re k ≥ 0
        let forward_small = if (fs - fl).abs() > 1e-9 { fs > fl } else { small.im >= 0.0 };
        if forward_small {
            (small, large)
        } else {
            (large, small)
        }
    } else {
        (small, large)
    };
    let k = C64::new(lambda.arg(), -lambda.norm().ln()) / a;
    CrystalMomentum {
        k,
        lambda,
        lambda_back,
    }
}

/// Trace of the monodromy for the lossless comparison potential Re V.
pub fn lossless_trace(v: &[C64], k_s: f64, a: f64, tol: f64) -> Result<f64> {
    let real: Vec<C64> = v.iter().map(|x| C64::new(x.re, 0.0)).collect();
    Ok(monodromy(&real, k_s, a, tol)?.trace().re)
}

/// Roundoff allowance on |tr| = 2, so a closed gap is not reported as open.
pub const GAP_TRACE_MARGIN: f64 = 1e-9;

/// |tr| > 2 for the lossless comparison trace.
pub fn is_gap_trace(trace: f64) -> bool {
    trace.abs() > 2.0 + GAP_TRACE_MARGIN
}

/// Band index from the average refractive index: ν = 1 + ⌊k_s·Re√V̄·a/π⌋.
pub fn band_index(v: &[C64], k_s: f64, a: f64) -> u32 {
    let mean = v.iter().sum::<C64>() / v.len() as f64;
    1 + (k_s * mean.sqrt().re * a / std::f64::consts::PI).floor().max(0.0) as u32
}

#[derive(Clone, Debug)]
pub struct BlochMode {
    pub grid: CellGrid,
    pub k_s: f64,
    pub k: C64,
    pub lambda: C64,
    pub band_index: u32,
    pub in_gap: bool,
    /// Damping-stripped carrier φ = e^{i Re k z}u.
    pub phi: Vec<C64>,
    /// ∂_zφ.
    pub dphi: Vec<C64>,
    /// Periodic part u = e^{−ikz}φ_full.
    pub u: Vec<C64>,
    /// Conjugate mode, normalized so that ∫ψφ dz = 1.
    pub psi: Vec<C64>,
    pub im_k: f64,
    /// |u(a) − u(0)| / max|u|.
    pub periodicity_error: f64,
}

impl BlochMode {
    /// ∫₀ᵃ ψφ dz by periodic Simpson.
    pub fn pairing(&self) -> C64 {
        let prod: Vec<C64> = self.psi.iter().zip(&self.phi).map(|(a, b)| a * b).collect();
        periodic_simpson(&prod, self.grid.spacing())
    }

    /// ∂_z u at z = 0, from the carrier derivative.
    pub fn du_at_origin(&self) -> C64 {
        let phi_full_prime = self.dphi[0] - self.im_k * self.phi[0];
        phi_full_prime - C64::i() * self.k * self.phi[0]
    }
}

/// Builds the Bloch mode with crystal momentum k from stored fundamental
/// solutions. Only e^{ika} enters, so k and k + 2π/a give the same mode.
pub fn bloch_mode(fund: &Fundamental, v: &[C64], k: C64) -> Result<BlochMode> {
    let grid = fund.grid;
    let n = grid.n;
    let a = grid.a;
    if v.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            got: v.len(),
        });
    }
    let m = fund.monodromy();
    let lambda = (C64::i() * k * a).exp();
    let fwd = m.eigenvector(lambda);
    let back = m.eigenvector(1.0 / lambda);
    let im_k = k.im;

    let mut phi_full = Vec::with_capacity(n + 1);
    let mut dphi_full = Vec::with_capacity(n + 1);
    for j in 0..=n {
        let (f, d) = fund.combine(j, fwd);
        phi_full.push(f);
        dphi_full.push(d * fund.k_s);
    }
    // Fix the arbitrary scale: largest |φ| equal to one and real there.
    let z_at = |j: usize| if j == n { a } else { grid.z(j) };
    let stripped: Vec<C64> = (0..=n)
        .map(|j| phi_full[j] * (im_k * z_at(j)).exp())
        .collect();
    let (jmax, _) = stripped
        .iter()
        .enumerate()
        .fold((0, 0.0), |acc, (j, x)| if x.norm() > acc.1 { (j, x.norm()) } else { acc });
    let scale = stripped[jmax].conj() / stripped[jmax].norm_sqr();
    for j in 0..=n {
        phi_full[j] *= scale;
        dphi_full[j] *= scale;
    }

    let mut phi = Vec::with_capacity(n);
    let mut dphi = Vec::with_capacity(n);
    let mut u = Vec::with_capacity(n);
    for j in 0..n {
        let z = grid.z(j);
        let damp = (im_k * z).exp();
        let p = phi_full[j] * damp;
        phi.push(p);
        dphi.push(im_k * p + dphi_full[j] * damp);
        u.push((-C64::i() * k * z).exp() * phi_full[j]);
    }
    let u_end = (-C64::i() * k * a).exp() * phi_full[n];
    let umax = u.iter().map(|x| x.norm()).fold(0.0, f64::max);
    let periodicity_error = (u_end - u[0]).norm() / umax;

    let chi: Vec<C64> = (0..n).map(|j| fund.combine(j, back).0).collect();
    let density: Vec<C64> = (0..n).map(|j| v[j] * chi[j] * phi_full[j]).collect();
    let pairing = periodic_simpson(&density, grid.spacing());
    let magnitude: f64 = density.iter().map(|x| x.norm()).sum::<f64>() * grid.spacing();
    if pairing.norm() < 1e-12 * magnitude {
        return Err(Error::ModeOrthogonality {
            pairing: pairing.norm() / magnitude,
        });
    }
    let norm = 1.0 / pairing;
    let psi = (0..n)
        .map(|j| norm * v[j] * chi[j] * (-im_k * grid.z(j)).exp())
        .collect();

    Ok(BlochMode {
        grid,
        k_s: fund.k_s,
        k,
        lambda,
        band_index: band_index(v, fund.k_s, a),
        in_gap: false,
        phi,
        dphi,
        u,
        psi,
        im_k,
        periodicity_error,
    })
}

/// Full pipeline for one cell: fundamental solutions, forward crystal
/// momentum, gap flag from the lossless comparison problem, and the mode.
pub fn solve(v: &[C64], k_s: f64, a: f64, tol: f64) -> Result<BlochMode> {
    let fund = fundamental(v, k_s, a, tol)?;
    let cm = crystal_momentum(&fund.monodromy(), a)?;
    let mut mode = bloch_mode(&fund, v, cm.k)?;
    mode.in_gap = is_gap_trace(lossless_trace(v, k_s, a, tol)?);
    Ok(mode)
}

/// One sample of a band diagram.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BandPoint {
    pub k_s: f64,
    /// |Re k| in [0, π/a].
    pub re_k: f64,
    pub im_k: f64,
    pub band_index: u32,
    pub in_gap: bool,
}

/// Crystal momenta over a signal-wavenumber range with the potential held
/// fixed. Points are independent and may be evaluated in parallel; the
/// output order always follows the input grid.
pub fn band_scan(
    v: &[C64],
    a: f64,
    k_s_range: (f64, f64),
    n_points: usize,
    tol: f64,
) -> Result<Vec<BandPoint>> {
    let (lo, hi) = k_s_range;
    if !(hi > lo && lo > 0.0) || n_points < 2 {
        return Err(Error::InvalidScenario(format!(
            "band scan needs 0 < k_min < k_max and at least 2 points, got ({lo}, {hi}), {n_points}"
        )));
    }
    let ks: Vec<f64> = (0..n_points)
        .map(|i| lo + (hi - lo) * i as f64 / (n_points - 1) as f64)
        .collect();
    let point = |&k_s: &f64| -> Result<BandPoint> {
        let inner = || -> Result<BandPoint> {
            let m = monodromy(v, k_s, a, tol)?;
            let cm = floquet_branch(&m, a);
            let in_gap = is_gap_trace(lossless_trace(v, k_s, a, tol)?);
            Ok(BandPoint {
                k_s,
                re_k: cm.k.re.abs(),
                im_k: cm.k.im,
                band_index: band_index(v, k_s, a),
                in_gap,
            })
        };
        inner().map_err(|e| Error::BandScan {
            k_s,
            source: Box::new(e),
        })
    };
    #[cfg(feature = "parallel")]
    let out = ks.par_iter().map(point).collect();
    #[cfg(not(feature = "parallel"))]
    let out = ks.iter().map(point).collect();
    out
}

/// Band scan for a scenario: V is built once at the scenario's own signal
/// wavenumber and held fixed while k_s is scanned.
pub fn scenario_band_scan(
    s: &Scenario,
    k_s_range: (f64, f64),
    n_points: usize,
) -> Result<Vec<BandPoint>> {
    let (_, _, v) = s.cell()?;
    band_scan(&v, s.lattice_constant, k_s_range, n_points, DEFAULT_TOL)
}

pub fn write_band_csv<W: Write>(out: W, points: &[BandPoint]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["k_s_per_m", "re_k_per_m", "im_k_per_m", "band_index", "in_gap"])?;
    for p in points {
        w.write_record([
            format!("{:.12e}", p.k_s),
            format!("{:.12e}", p.re_k),
            format!("{:.12e}", p.im_k),
            p.band_index.to_string(),
            p.in_gap.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    const N: usize = 512;

    fn constant(v: C64) -> Vec<C64> {
        vec![v; N]
    }

    #[test]
    fn weak_loss_second_band_picks_forward_wave() {
        let lambda = 800e-9;
        let k_s = 2.0 * PI / lambda;
        let a = 0.6 * lambda;
        for v in [C64::new(1.0, 0.0), C64::new(1.0, 1e-13)] {
            let m = monodromy(&constant(v), k_s, a, DEFAULT_TOL).unwrap();
            let cm = crystal_momentum(&m, a).unwrap();
            // e^{ik_s z} folded into the first zone
            assert!((cm.k.re - (k_s - 2.0 * PI / a)).abs() < 1e-8 * k_s, "{v}: {}", cm.k);
        }
    }

    #[test]
    fn vacuum_monodromy_is_rotation() {
        let k_s = 2.0 * PI / 800e-9;
        let a = 320e-9;
        let m = monodromy(&constant(C64::new(1.0, 0.0)), k_s, a, DEFAULT_TOL).unwrap();
        let (c, s) = ((k_s * a).cos(), (k_s * a).sin());
        let want = [[c, s], [-s, c]];
        for i in 0..2 {
            for j in 0..2 {
                assert!((m.matrix[i][j] - want[i][j]).norm() < 1e-10, "{:?}", m.matrix);
            }
        }
        assert!((m.det() - 1.0).norm() < 1e-10);
    }

    #[test]
    fn constant_potential_matches_closed_form() {
        let k_s = 2.0 * PI / 800e-9;
        let a = 333e-9;
        let v0 = C64::new(1.0, 2.0 * 300.0 / (1e-3 * k_s));
        let m = monodromy(&constant(v0), k_s, a, DEFAULT_TOL).unwrap();
        let q = v0.sqrt();
        let (c, s) = ((q * k_s * a).cos(), (q * k_s * a).sin());
        let want = [[c, s / q], [-q * s, c]];
        for i in 0..2 {
            for j in 0..2 {
                assert!((m.matrix[i][j] - want[i][j]).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn vacuum_crystal_momentum() {
        let k_s = 2.0 * PI / 800e-9;
        let a = 320e-9;
        let v = constant(C64::new(1.0, 0.0));
        let mode = solve(&v, k_s, a, DEFAULT_TOL).unwrap();
        assert!((mode.k.re - k_s).abs() / k_s < 1e-10);
        assert!(mode.k.im.abs() < 1e-3);
        assert!(!mode.in_gap);
        assert_eq!(mode.band_index, 1);
    }

    #[test]
    fn vacuum_mode_is_plane_wave_pair() {
        let k_s = 2.0 * PI / 800e-9;
        let a = 320e-9;
        let v = constant(C64::new(1.0, 0.0));
        let mode = solve(&v, k_s, a, DEFAULT_TOL).unwrap();
        let phase0 = mode.phi[0];
        for j in (0..N).step_by(37) {
            let z = mode.grid.z(j);
            let plane = phase0 * (C64::i() * k_s * z).exp();
            assert!((mode.phi[j] - plane).norm() < 1e-9);
            assert!((mode.psi[j] * mode.phi[j] - 1.0 / a).norm() * a < 1e-9);
        }
        assert!((mode.pairing() - 1.0).norm() < 1e-12);
        assert!(mode.periodicity_error < 1e-9);
    }

    #[test]
    fn eigenvalues_multiply_to_det() {
        let m = Monodromy {
            matrix: [
                [C64::new(0.3, 0.1), C64::new(2.0, -1.0)],
                [C64::new(-0.4, 0.2), C64::new(0.9, 0.5)],
            ],
            tol: 0.0,
        };
        let (a, b) = m.eigenvalues();
        assert!((a * b - m.det()).norm() < 1e-14);
        assert!((a + b - m.trace()).norm() < 1e-14);
        assert!(a.norm() <= b.norm());
        for lam in [a, b] {
            let v = m.eigenvector(lam);
            let r0 = m.matrix[0][0] * v[0] + m.matrix[0][1] * v[1] - lam * v[0];
            let r1 = m.matrix[1][0] * v[0] + m.matrix[1][1] * v[1] - lam * v[1];
            assert!(r0.norm() + r1.norm() < 1e-13);
        }
    }

    #[test]
    fn defective_monodromy_is_rejected() {
        let one = C64::new(-1.0, 0.0);
        let m = Monodromy {
            matrix: [[one, C64::new(1.0, 0.0)], [C64::new(0.0, 0.0), one]],
            tol: 0.0,
        };
        assert!(matches!(
            crystal_momentum(&m, 1.0),
            Err(Error::BandEdgeDegeneracy { .. })
        ));
    }

    #[test]
    fn brillouin_shift_gives_same_mode() {
        let s = Scenario::raman();
        let (_, _, v) = s.cell().unwrap();
        let p = s.derive().unwrap();
        let a = s.lattice_constant;
        let fund = fundamental(&v, p.k_s, a, DEFAULT_TOL).unwrap();
        let cm = crystal_momentum(&fund.monodromy(), a).unwrap();
        let m1 = bloch_mode(&fund, &v, cm.k).unwrap();
        let m2 = bloch_mode(&fund, &v, cm.k + 2.0 * PI / a).unwrap();
        for j in 0..v.len() {
            assert!((m1.phi[j] - m2.phi[j]).norm() < 1e-8);
            assert!((m1.psi[j] * m1.phi[j] - m2.psi[j] * m2.phi[j]).norm() * a < 1e-8);
        }
    }

    #[test]
    fn band_csv_header() {
        let mut buf = Vec::new();
        let pts = [BandPoint {
            k_s: 1.0,
            re_k: 0.5,
            im_k: 0.0,
            band_index: 1,
            in_gap: false,
        }];
        write_band_csv(&mut buf, &pts).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("k_s_per_m,re_k_per_m,im_k_per_m,band_index,in_gap\n"));
        assert!(text.contains(",1,false"));
    }

    #[test]
    fn scan_rejects_bad_range() {
        let v = constant(C64::new(1.0, 0.0));
        assert!(band_scan(&v, 1e-7, (2.0, 1.0), 10, DEFAULT_TOL).is_err());
    }
}
