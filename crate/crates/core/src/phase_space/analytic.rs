use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::grid::PhaseGrid;
use super::symbol::Symbol;
use crate::error::Result;

/// `amplitude * exp(-sum_k (z_k - c_k)^2 / (2 w_k^2))`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Gaussian {
    pub center: [f64; 2],
    pub width: [f64; 2],
    #[serde(default = "one")]
    pub amplitude: f64,
}

fn one() -> f64 {
    1.0
}

impl Gaussian {
    pub fn new(center: [f64; 2], width: [f64; 2]) -> Self {
        Gaussian {
            center,
            width,
            amplitude: 1.0,
        }
    }

    pub fn isotropic(center: [f64; 2], width: f64) -> Self {
        Self::new(center, [width, width])
    }

    pub fn eval(&self, z: [C64; 2]) -> C64 {
        let mut e = C64::new(0.0, 0.0);
        for k in 0..2 {
            let d = z[k] - self.center[k];
            e -= d * d / (2.0 * self.width[k] * self.width[k]);
        }
        e.exp() * self.amplitude
    }
}

/// Closed-form symbols with a known entire extension to complex phase space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum AnalyticSymbol {
    Zero,
    Gaussian(Gaussian),
    /// `cos(wave . z + phase)` times a Gaussian envelope.
    Modulated {
        envelope: Gaussian,
        wave: [f64; 2],
        phase: f64,
    },
    /// `sum c x^a xi^b` times a Gaussian envelope.
    Polynomial {
        envelope: Gaussian,
        terms: Vec<(f64, u32, u32)>,
    },
    Sum(Vec<AnalyticSymbol>),
}

impl AnalyticSymbol {
    pub fn gaussian(center: [f64; 2], width: [f64; 2]) -> Self {
        AnalyticSymbol::Gaussian(Gaussian::new(center, width))
    }

    /// Value at a complex phase-space point.
    pub fn eval(&self, z: [C64; 2]) -> C64 {
        match self {
            AnalyticSymbol::Zero => C64::new(0.0, 0.0),
            AnalyticSymbol::Gaussian(g) => g.eval(z),
            AnalyticSymbol::Modulated {
                envelope,
                wave,
                phase,
            } => (z[0] * wave[0] + z[1] * wave[1] + phase).cos() * envelope.eval(z),
            AnalyticSymbol::Polynomial { envelope, terms } => {
                let p: C64 = terms
                    .iter()
                    .map(|&(c, a, b)| z[0].powu(a) * z[1].powu(b) * c)
                    .sum();
                p * envelope.eval(z)
            }
            AnalyticSymbol::Sum(parts) => parts.iter().map(|p| p.eval(z)).sum(),
        }
    }

    pub fn eval_real(&self, x: f64, xi: f64) -> f64 {
        self.eval([C64::new(x, 0.0), C64::new(xi, 0.0)]).re
    }

    /// Radius of analyticity in the imaginary directions (all members are entire).
    pub fn analyticity_radius(&self) -> f64 {
        f64::INFINITY
    }

    /// Box `[lo, hi]` per axis outside which the weighted modulus
    /// `|b(x + iy)| e^{rho |x|}` is negligible, for `|y| <= sigma`.
    pub fn search_box(&self, sigma: f64, rho: f64) -> [[f64; 2]; 2] {
        let env = |g: &Gaussian, extra: [f64; 2]| -> [[f64; 2]; 2] {
            let mut out = [[0.0; 2]; 2];
            for k in 0..2 {
                let w = g.width[k];
                let reach = 9.0 * w + rho * w * w + extra[k] * w * w + sigma;
                out[k] = [g.center[k] - reach, g.center[k] + reach];
            }
            out
        };
        match self {
            AnalyticSymbol::Zero => [[-1.0, 1.0], [-1.0, 1.0]],
            AnalyticSymbol::Gaussian(g) => env(g, [0.0, 0.0]),
            AnalyticSymbol::Modulated { envelope, wave, .. } => env(
                envelope,
                [wave[0].abs() * sigma + 3.0, wave[1].abs() * sigma + 3.0],
            ),
            AnalyticSymbol::Polynomial { envelope, terms } => {
                let deg = terms.iter().map(|t| (t.1 + t.2) as f64).fold(0.0, f64::max);
                let w = envelope.width[0].max(envelope.width[1]);
                env(envelope, [deg.sqrt() / w + 2.0, deg.sqrt() / w + 2.0])
            }
            AnalyticSymbol::Sum(parts) => {
                let mut out = [[f64::INFINITY, f64::NEG_INFINITY]; 2];
                for p in parts {
                    let b = p.search_box(sigma, rho);
                    for k in 0..2 {
                        out[k][0] = out[k][0].min(b[k][0]);
                        out[k][1] = out[k][1].max(b[k][1]);
                    }
                }
                out
            }
        }
    }

    /// Sample on a grid; the result is tagged as a real observable.
    pub fn to_symbol(&self, grid: PhaseGrid, hbar: f64) -> Result<Symbol> {
        Symbol::from_real_fn(grid, hbar, |x, p| self.eval_real(x, p))
    }
}
