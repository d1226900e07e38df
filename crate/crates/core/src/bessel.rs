//! Bessel function J₀ of complex argument.
//!
//! Ascending series inside |ζ| ≤ 12, Hankel asymptotic expansion outside.
//! The scaled variant returns J₀(ζ)·e^{−|Im ζ|}, which stays O(|ζ|^{−1/2})
//! where J₀ itself overflows.

use std::f64::consts::{FRAC_PI_4, PI};

use crate::C64;

/// |ζ| at which evaluation switches from series to asymptotic form.
pub const SERIES_RADIUS: f64 = 12.0;

pub fn j0(z: C64) -> C64 {
    j0_scaled(z) * z.im.abs().exp()
}

/// J₀(ζ)·e^{−|Im ζ|}.
pub fn j0_scaled(z: C64) -> C64 {
    if z.norm() <= SERIES_RADIUS {
        j0_series(z) * (-z.im.abs()).exp()
    } else {
        j0_asymptotic_scaled(z)
    }
}

/// Σ (−ζ²/4)^k/(k!)², summed until terms stop contributing.
pub fn j0_series(z: C64) -> C64 {
    let q = -z * z / 4.0;
    let mut term = C64::new(1.0, 0.0);
    let mut sum = term;
    for k in 1..200 {
        term *= q / (k * k) as f64;
        sum += term;
        if term.norm() <= 1e-17 * sum.norm() && k as f64 > q.norm().sqrt() {
            break;
        }
    }
    sum
}

/// Scaled Hankel expansion, optimally truncated. J₀ is even, so the left
/// half-plane is mapped onto the right one first.
pub fn j0_asymptotic_scaled(z: C64) -> C64 {
    let z = if z.re < 0.0 { -z } else { z };
    let inv = 1.0 / z;
    // a_k(0) = ∏_{j=1..k} (2j−1)² / (k!·8^k)
    let mut p = C64::new(1.0, 0.0);
    let mut q = C64::new(0.0, 0.0);
    let mut term = C64::new(1.0, 0.0);
    let mut last = f64::INFINITY;
    for k in 1..100 {
        let odd = (2 * k - 1) as f64;
        let next = term * inv * (odd * odd / (8.0 * k as f64));
        let size = next.norm();
        if size >= last || size < 1e-17 {
            break;
        }
        last = size;
        term = next;
        // P takes even k with sign (−1)^{k/2}, Q odd k with (−1)^{(k+1)/2}.
        match k % 4 {
            0 => p += term,
            1 => q -= term,
            2 => p -= term,
            _ => q += term,
        }
    }
    let y = z.im.abs();
    let chi = z - FRAC_PI_4;
    let e_plus = (C64::i() * chi - y).exp();
    let e_minus = (-C64::i() * chi - y).exp();
    let amp = (2.0 / (PI * z)).sqrt();
    amp * (e_plus * (p + C64::i() * q) + e_minus * (p - C64::i() * q)) * 0.5
}
