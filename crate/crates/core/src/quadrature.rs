//! Quadrature rules on uniform grids.

use crate::C64;

/// Composite Simpson weights for one period sampled at n (even) points
/// z_j = j·h. The node at z = a coincides with node 0 and is folded into it,
/// so even nodes get 2h/3 and odd nodes 4h/3.
pub fn periodic_simpson_weights(n: usize, h: f64) -> Vec<f64> {
    assert!(n >= 2 && n.is_multiple_of(2), "periodic Simpson needs an even sample count");
    (0..n)
        .map(|j| if j % 2 == 0 { 2.0 * h / 3.0 } else { 4.0 * h / 3.0 })
        .collect()
}

/// Periodic Simpson integral of samples over one period of spacing h.
pub fn periodic_simpson(samples: &[C64], h: f64) -> C64 {
    let n = samples.len();
    assert!(n >= 2 && n.is_multiple_of(2), "periodic Simpson needs an even sample count");
    let (mut even, mut odd) = (C64::new(0.0, 0.0), C64::new(0.0, 0.0));
    for (j, s) in samples.iter().enumerate() {
        if j % 2 == 0 {
            even += s;
        } else {
            odd += s;
        }
    }
    (2.0 * even + 4.0 * odd) * (h / 3.0)
}

/// Trapezoid weights for n nodes spanning [x0, x0 + (n−1)h].
pub fn trapezoid_weights(n: usize, h: f64) -> Vec<f64> {
    assert!(n >= 2);
    let mut w = vec![h; n];
    w[0] = h / 2.0;
    w[n - 1] = h / 2.0;
    w
}

/// Midpoint grid on [lo, hi] with n cells: nodes at cell centres, equal weights.
pub fn midpoint_grid(lo: f64, hi: f64, n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1 && hi > lo);
    let h = (hi - lo) / n as f64;
    let x = (0..n).map(|i| lo + (i as f64 + 0.5) * h).collect();
    (x, vec![h; n])
}

/// Node grid lo, lo + h, ..., hi with n + 1 points.
pub fn node_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let h = (hi - lo) / n as f64;
    (0..=n).map(|i| lo + i as f64 * h).collect()
}

/// Σ w_i |f_i|².
pub fn weighted_norm_sq(f: &[C64], w: &[f64]) -> f64 {
    f.iter().zip(w).map(|(x, wi)| wi * x.norm_sqr()).sum()
}
