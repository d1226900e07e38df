//! Control pulses Ω(τ) and their integrated intensity ω(τ) = ∫_{−∞}^{τ}|Ω|².

use std::f64::consts::PI;

use crate::scenario::{PulseShape, Scenario};

/// Half-width of the τ window, in units of T.
pub const WINDOW_HALF_WIDTH: f64 = 5.0;

/// Default square-pulse duration in units of T. Its edges at ±4T fall on
/// cell boundaries of the default midpoint τ grids.
pub const SQUARE_DURATION: f64 = 8.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ControlPulse {
    /// Ω₀·exp(−(τ/T)²).
    Gaussian { omega0: f64, duration: f64 },
    /// Constant amplitude on [−width/2, width/2]; `duration` is the T that
    /// sets the τ window.
    Square {
        amplitude: f64,
        width: f64,
        duration: f64,
    },
}

impl ControlPulse {
    pub fn gaussian(omega0: f64, duration: f64) -> Self {
        ControlPulse::Gaussian { omega0, duration }
    }

    /// Square pulse of the given width carrying total energy ω(∞) = `energy`.
    pub fn square_with_energy(energy: f64, width: f64, duration: f64) -> Self {
        ControlPulse::Square {
            amplitude: (energy / width).sqrt(),
            width,
            duration,
        }
    }

    /// Pulse described by a scenario. A square pulse gets the same energy
    /// as the Gaussian with the scenario's Ω₀ and T.
    pub fn from_scenario(s: &Scenario) -> Self {
        let g = Self::gaussian(s.omega0, s.pulse_duration);
        match s.pulse_shape {
            PulseShape::Gaussian => g,
            PulseShape::Square => Self::square_with_energy(
                g.total_energy(),
                SQUARE_DURATION * s.pulse_duration,
                s.pulse_duration,
            ),
        }
    }

    pub fn duration(&self) -> f64 {
        match *self {
            ControlPulse::Gaussian { duration, .. } | ControlPulse::Square { duration, .. } => {
                duration
            }
        }
    }

    /// (τ_min, τ_max) = (−5T, 5T).
    pub fn window(&self) -> (f64, f64) {
        let h = WINDOW_HALF_WIDTH * self.duration();
        (-h, h)
    }

    pub fn rabi(&self, tau: f64) -> f64 {
        match *self {
            ControlPulse::Gaussian { omega0, duration } => {
                let x = tau / duration;
                omega0 * (-x * x).exp()
            }
            ControlPulse::Square {
                amplitude, width, ..
            } => {
                if tau.abs() <= width / 2.0 {
                    amplitude
                } else {
                    0.0
                }
            }
        }
    }

    /// ω(∞).
    pub fn total_energy(&self) -> f64 {
        match *self {
            ControlPulse::Gaussian { omega0, duration } => {
                omega0 * omega0 * duration * (PI / 2.0).sqrt()
            }
            ControlPulse::Square {
                amplitude, width, ..
            } => amplitude * amplitude * width,
        }
    }

    /// ω(τ).
    pub fn integrated(&self, tau: f64) -> f64 {
        match *self {
            ControlPulse::Gaussian { duration, .. } => {
                0.5 * self.total_energy() * libm::erfc(-std::f64::consts::SQRT_2 * tau / duration)
            }
            ControlPulse::Square {
                amplitude, width, ..
            } => amplitude * amplitude * (tau + width / 2.0).clamp(0.0, width),
        }
    }

    /// ω(∞) − ω(τ), evaluated without cancellation in the upper tail.
    pub fn remaining(&self, tau: f64) -> f64 {
        match *self {
            ControlPulse::Gaussian { duration, .. } => {
                0.5 * self.total_energy() * libm::erfc(std::f64::consts::SQRT_2 * tau / duration)
            }
            ControlPulse::Square {
                amplitude, width, ..
            } => amplitude * amplitude * (width / 2.0 - tau).clamp(0.0, width),
        }
    }
}
