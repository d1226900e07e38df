//! Periodic cubic spline through complex samples.

use crate::C64;

#[derive(Clone, Debug)]
pub struct PeriodicSpline {
    period: f64,
    h: f64,
    y: Vec<C64>,
    /// Second derivatives at the knots.
    m: Vec<C64>,
}

impl PeriodicSpline {
    /// Spline through y_j at z_j = j·period/n, extended with period `period`.
    pub fn new(samples: &[C64], period: f64) -> Self {
        let n = samples.len();
        assert!(n >= 3, "periodic spline needs at least three knots");
        let h = period / n as f64;
        let rhs: Vec<C64> = (0..n)
            .map(|j| {
                let prev = samples[(j + n - 1) % n];
                let next = samples[(j + 1) % n];
                (next - 2.0 * samples[j] + prev) * (6.0 / (h * h))
            })
            .collect();
        let m = solve_cyclic_141(&rhs);
        PeriodicSpline {
            period,
            h,
            y: samples.to_vec(),
            m,
        }
    }

    pub fn eval(&self, z: f64) -> C64 {
        let n = self.y.len();
        let x = z.rem_euclid(self.period) / self.h;
        let j = (x.floor() as usize).min(n - 1);
        let t = x - j as f64;
        let j1 = (j + 1) % n;
        let s = 1.0 - t;
        let c = self.h * self.h / 6.0;
        self.y[j] * s
            + self.y[j1] * t
            + (self.m[j] * (s * s * s - s) + self.m[j1] * (t * t * t - t)) * c
    }
}

/// Solves the circulant system M_{j−1} + 4M_j + M_{j+1} = r_j by
/// Sherman–Morrison on top of a tridiagonal Thomas sweep.
fn solve_cyclic_141(r: &[C64]) -> Vec<C64> {
    let n = r.len();
    // Corner entries are 1; perturb the diagonal with gamma = −4 so the
    // remaining system is tridiagonal.
    let gamma = -4.0;
    let mut diag = vec![4.0; n];
    diag[0] -= gamma;
    diag[n - 1] -= 1.0 / gamma;
    let mut u = vec![C64::new(0.0, 0.0); n];
    u[0] = C64::new(gamma, 0.0);
    u[n - 1] = C64::new(1.0, 0.0);
    let x = thomas(&diag, r);
    let zv = thomas(&diag, &u);
    let fact = (x[0] + x[n - 1] / gamma) / (1.0 + zv[0] + zv[n - 1] / gamma);
    x.iter().zip(&zv).map(|(xi, zi)| xi - fact * zi).collect()
}

/// Tridiagonal solve with unit off-diagonals.
fn thomas(diag: &[f64], r: &[C64]) -> Vec<C64> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![C64::new(0.0, 0.0); n];
    c[0] = 1.0 / diag[0];
    d[0] = r[0] / diag[0];
    for i in 1..n {
        let denom = diag[i] - c[i - 1];
        c[i] = 1.0 / denom;
        d[i] = (r[i] - d[i - 1]) / denom;
    }
    let mut x = vec![C64::new(0.0, 0.0); n];
    x[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = d[i] - c[i] * x[i + 1];
    }
    x
}
