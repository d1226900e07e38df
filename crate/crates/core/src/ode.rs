//! Adaptive Dormand–Prince 5(4) integrator for small complex systems.

use crate::{Error, Result, C64};

#[derive(Clone, Copy, Debug)]
pub struct Tolerance {
    pub rtol: f64,
    pub atol: f64,
}

impl Tolerance {
    pub fn relative(rtol: f64) -> Self {
        Tolerance {
            rtol,
            atol: rtol * 1e-3,
        }
    }
}

// Butcher tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// b − b*, the embedded error weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// Stateful stepper that remembers its last accepted step size so that
/// consecutive calls over adjacent intervals need no restart heuristics.
pub struct Dopri5<F, const N: usize> {
    f: F,
    tol: Tolerance,
    h: f64,
    pub steps: usize,
}

impl<F, const N: usize> Dopri5<F, N>
where
    F: FnMut(f64, &[C64; N]) -> [C64; N],
{
    pub fn new(f: F, tol: Tolerance, initial_step: f64) -> Self {
        Dopri5 {
            f,
            tol,
            h: initial_step,
            steps: 0,
        }
    }

    /// Advances y from x0 to x1 (x1 > x0), landing exactly on x1.
    pub fn advance(&mut self, x0: f64, x1: f64, y: &mut [C64; N]) -> Result<()> {
        let mut x = x0;
        let span = x1 - x0;
        let h_min = span.abs() * 1e-14 + f64::MIN_POSITIVE;
        let mut k1 = (self.f)(x, y);
        while x < x1 {
            let mut h = self.h.min(x1 - x);
            let last = h >= x1 - x;
            if last {
                h = x1 - x;
            }
            let stage = |y: &[C64; N], ks: &[(&[C64; N], f64)]| {
                let mut out = *y;
                for (k, c) in ks {
                    for i in 0..N {
                        out[i] += k[i] * (c * h);
                    }
                }
                out
            };
            let k2 = (self.f)(x + C2 * h, &stage(y, &[(&k1, A21)]));
            let k3 = (self.f)(x + C3 * h, &stage(y, &[(&k1, A31), (&k2, A32)]));
            let k4 = (self.f)(
                x + C4 * h,
                &stage(y, &[(&k1, A41), (&k2, A42), (&k3, A43)]),
            );
            let k5 = (self.f)(
                x + C5 * h,
                &stage(y, &[(&k1, A51), (&k2, A52), (&k3, A53), (&k4, A54)]),
            );
            let k6 = (self.f)(
                x + h,
                &stage(
                    y,
                    &[(&k1, A61), (&k2, A62), (&k3, A63), (&k4, A64), (&k5, A65)],
                ),
            );
            let y_new = stage(y, &[(&k1, B1), (&k3, B3), (&k4, B4), (&k5, B5), (&k6, B6)]);
            let x_new = if last { x1 } else { x + h };
            let k7 = (self.f)(x_new, &y_new);
            let mut err = 0.0f64;
            for i in 0..N {
                let e = (k1[i] * E1 + k3[i] * E3 + k4[i] * E4 + k5[i] * E5 + k6[i] * E6 + k7[i] * E7)
                    * h;
                let scale = self.tol.atol + self.tol.rtol * y[i].norm().max(y_new[i].norm());
                err = err.max(e.norm() / scale);
            }
            if err <= 1.0 {
                x = x_new;
                *y = y_new;
                k1 = k7;
                self.steps += 1;
                let grow = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).min(5.0) };
                let proposed = h * grow;
                // a step clipped to the interval end says little about the next one
                self.h = if last && h < self.h { self.h.max(proposed) } else { proposed };
            } else {
                self.h = h * (0.9 * err.powf(-0.2)).max(0.2);
                if self.h < h_min {
                    return Err(Error::Integration { z: x });
                }
            }
            if !y.iter().all(|v| v.re.is_finite() && v.im.is_finite()) {
                return Err(Error::Integration { z: x });
            }
        }
        Ok(())
    }
}
