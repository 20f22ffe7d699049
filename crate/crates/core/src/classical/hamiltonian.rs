use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Potential part of `H(x, xi) = xi^2/2 + V(x)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Potential {
    /// `V = omega2 x^2 / 2`.
    Quadratic { omega2: f64 },
    /// `V = strength * exp(-x^2 / width^2)`.
    GaussianBump { strength: f64, width: f64 },
    /// `V = omega2 x^2 / 2 + strength * exp(-x^2 / width^2)`.
    BumpedOscillator {
        omega2: f64,
        strength: f64,
        width: f64,
    },
}

/// Hermite-type factor: `d^n/du^n e^{-u^2} = (-1)^n H_n(u) e^{-u^2}`.
fn hermite<T>(n: usize, u: T) -> T
where
    T: Copy
        + std::ops::Mul<f64, Output = T>
        + std::ops::Mul<T, Output = T>
        + std::ops::Sub<T, Output = T>
        + std::ops::Add<f64, Output = T>,
{
    match n {
        0 => u * 0.0 + 1.0,
        1 => u * 2.0,
        2 => u * u * 4.0 + (-2.0),
        3 => u * u * u * 8.0 - u * 12.0,
        4 => u * u * u * u * 16.0 - u * u * 48.0 + 12.0,
        _ => unreachable!("derivative order above 4"),
    }
}

fn bump(n: usize, x: f64, strength: f64, width: f64) -> f64 {
    let u = x / width;
    let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
    strength * sign * hermite(n, u) * (-u * u).exp() / width.powi(n as i32)
}

fn bump_complex(n: usize, z: C64, strength: f64, width: f64) -> C64 {
    let u = z / width;
    let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
    hermite(n, u) * (-u * u).exp() * (strength * sign / width.powi(n as i32))
}

fn quadratic(n: usize, x: f64, omega2: f64) -> f64 {
    match n {
        0 => 0.5 * omega2 * x * x,
        1 => omega2 * x,
        2 => omega2,
        _ => 0.0,
    }
}

fn quadratic_complex(n: usize, z: C64, omega2: f64) -> C64 {
    match n {
        0 => z * z * (0.5 * omega2),
        1 => z * omega2,
        2 => C64::new(omega2, 0.0),
        _ => C64::new(0.0, 0.0),
    }
}

impl Potential {
    /// `d^n V / dx^n` at a real point, `n <= 4`.
    pub fn derivative(&self, n: usize, x: f64) -> f64 {
        match *self {
            Potential::Quadratic { omega2 } => quadratic(n, x, omega2),
            Potential::GaussianBump { strength, width } => bump(n, x, strength, width),
            Potential::BumpedOscillator {
                omega2,
                strength,
                width,
            } => quadratic(n, x, omega2) + bump(n, x, strength, width),
        }
    }

    /// `d^n V / dx^n` at a complex point, `n <= 4`.
    pub fn derivative_complex(&self, n: usize, z: C64) -> C64 {
        match *self {
            Potential::Quadratic { omega2 } => quadratic_complex(n, z, omega2),
            Potential::GaussianBump { strength, width } => bump_complex(n, z, strength, width),
            Potential::BumpedOscillator {
                omega2,
                strength,
                width,
            } => quadratic_complex(n, z, omega2) + bump_complex(n, z, strength, width),
        }
    }

    /// Coefficient `q` of the quadratic part `q x^2 / 2` of the potential.
    pub fn quadratic_coefficient(&self) -> f64 {
        match *self {
            Potential::Quadratic { omega2 } | Potential::BumpedOscillator { omega2, .. } => omega2,
            Potential::GaussianBump { .. } => 0.0,
        }
    }

    /// Whether the potential minus its quadratic part vanishes identically.
    pub fn is_quadratic(&self) -> bool {
        match *self {
            Potential::Quadratic { .. } => true,
            Potential::GaussianBump { strength, .. }
            | Potential::BumpedOscillator { strength, .. } => strength == 0.0,
        }
    }

    /// The non-quadratic remainder `W(x)`.
    pub fn remainder(&self, x: f64) -> f64 {
        match *self {
            Potential::Quadratic { .. } => 0.0,
            Potential::GaussianBump { strength, width }
            | Potential::BumpedOscillator {
                strength, width, ..
            } => bump(0, x, strength, width),
        }
    }

    /// Distance beyond which the remainder is below `1e-16` of its peak.
    pub fn decay_length(&self) -> f64 {
        match *self {
            Potential::Quadratic { .. } => 0.0,
            Potential::GaussianBump { width, .. } | Potential::BumpedOscillator { width, .. } => {
                6.0 * width
            }
        }
    }
}

/// Declared analyticity and decay radii (`nu` for the strip of holomorphy,
/// `sigma`, `rho` for the decay class of the non-quadratic part).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeclaredRadii {
    pub nu: f64,
    pub sigma: f64,
    pub rho: f64,
}

/// Closed-form Hamiltonian `H(x, xi) = xi^2/2 + V(x)` on one degree of freedom.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HamiltonianModel {
    pub name: String,
    pub potential: Potential,
    pub radii: DeclaredRadii,
}

/// Names accepted by [`HamiltonianModel::from_name`].
pub const CATALOG: [&str; 5] = [
    "harmonic",
    "free",
    "gaussian-well",
    "pendulum-window",
    "bumped-oscillator",
];

impl HamiltonianModel {
    pub fn new(name: &str, potential: Potential) -> Self {
        let radii = DeclaredRadii {
            nu: f64::INFINITY,
            sigma: 1.0,
            rho: 1.0,
        };
        HamiltonianModel {
            name: name.to_string(),
            potential,
            radii,
        }
    }

    /// `(x^2 + xi^2)/2`.
    pub fn harmonic() -> Self {
        Self::new("harmonic", Potential::Quadratic { omega2: 1.0 })
    }

    /// `xi^2/2`.
    pub fn free() -> Self {
        Self::new("free", Potential::Quadratic { omega2: 0.0 })
    }

    /// `xi^2/2 + v0 exp(-x^2)`.
    pub fn gaussian_well(v0: f64) -> Self {
        Self::new(
            "gaussian-well",
            Potential::GaussianBump {
                strength: v0,
                width: 1.0,
            },
        )
    }

    /// `xi^2/2 - v0 exp(-x^2/w^2)`.
    pub fn pendulum_window(v0: f64, w: f64) -> Self {
        Self::new(
            "pendulum-window",
            Potential::GaussianBump {
                strength: -v0,
                width: w,
            },
        )
    }

    /// `(x^2 + xi^2)/2 + v0 exp(-x^2/w^2)`: a confined anharmonic flow.
    pub fn bumped_oscillator(v0: f64, w: f64) -> Self {
        Self::new(
            "bumped-oscillator",
            Potential::BumpedOscillator {
                omega2: 1.0,
                strength: v0,
                width: w,
            },
        )
    }

    /// Catalog lookup with default parameters.
    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "harmonic" => Ok(Self::harmonic()),
            "free" => Ok(Self::free()),
            "gaussian-well" => Ok(Self::gaussian_well(-1.0)),
            "pendulum-window" => Ok(Self::pendulum_window(-1.0, 1.5)),
            "bumped-oscillator" => Ok(Self::bumped_oscillator(1.0, 0.9)),
            _ => Err(Error::Config(format!(
                "unknown model '{name}' (known: {})",
                CATALOG.join(", ")
            ))),
        }
    }

    pub fn eval(&self, z: [f64; 2]) -> f64 {
        0.5 * z[1] * z[1] + self.potential.derivative(0, z[0])
    }

    pub fn eval_complex(&self, z: [C64; 2]) -> C64 {
        z[1] * z[1] * 0.5 + self.potential.derivative_complex(0, z[0])
    }

    /// `(dH/dx, dH/dxi)`.
    pub fn gradient(&self, z: [f64; 2]) -> [f64; 2] {
        [self.potential.derivative(1, z[0]), z[1]]
    }

    /// Row-major Hessian.
    pub fn hessian(&self, z: [f64; 2]) -> [[f64; 2]; 2] {
        [[self.potential.derivative(2, z[0]), 0.0], [0.0, 1.0]]
    }

    /// Hamiltonian vector field `J dH = (dH/dxi, -dH/dx)`.
    #[inline]
    pub fn vector_field(&self, z: [f64; 2]) -> [f64; 2] {
        [z[1], -self.potential.derivative(1, z[0])]
    }

    #[inline]
    pub fn vector_field_complex(&self, z: [C64; 2]) -> [C64; 2] {
        [z[1], -self.potential.derivative_complex(1, z[0])]
    }

    /// `J d^2H` at a complex point.
    pub fn linearization_complex(&self, z: [C64; 2]) -> [[C64; 2]; 2] {
        let one = C64::new(1.0, 0.0);
        let zero = C64::new(0.0, 0.0);
        [
            [zero, one],
            [-self.potential.derivative_complex(2, z[0]), zero],
        ]
    }

    /// Whether the Hamiltonian is a quadratic form (flow linear, Moyal defect zero).
    pub fn is_quadratic(&self) -> bool {
        self.potential.is_quadratic()
    }
}

/// Largest singular value of a complex 2x2 matrix.
pub fn spectral_norm_2x2(a: [[C64; 2]; 2]) -> f64 {
    // Eigenvalues of A^H A = [[p, q], [conj q, r]].
    let p = a[0][0].norm_sqr() + a[1][0].norm_sqr();
    let r = a[0][1].norm_sqr() + a[1][1].norm_sqr();
    let q = a[0][0].conj() * a[0][1] + a[1][0].conj() * a[1][1];
    let mean = 0.5 * (p + r);
    let disc = (0.25 * (p - r) * (p - r) + q.norm_sqr()).sqrt();
    (mean + disc).sqrt()
}

/// Sampling control for [`estimate_alpha`].
#[derive(Clone, Copy, Debug)]
pub struct AlphaSampling {
    /// Initial samples along the real direction.
    pub points: usize,
    /// Samples across the strip (including both edges).
    pub layers: usize,
    /// Half-width of the sampled real window.
    pub window: f64,
    /// Relative stability required between refinements.
    pub tolerance: f64,
}

impl Default for AlphaSampling {
    fn default() -> Self {
        AlphaSampling {
            points: 401,
            layers: 5,
            window: 12.0,
            tolerance: 0.01,
        }
    }
}

/// How an `alpha` value was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AlphaKind {
    /// Sampled supremum over the complex strip.
    Strip,
    /// Real-slice supremum only; a lower estimate of the strip value.
    RealSliceLowerEstimate,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AlphaEstimate {
    pub value: f64,
    pub kind: AlphaKind,
}

fn alpha_sample(h: &HamiltonianModel, sigma: f64, s: &AlphaSampling) -> (f64, f64, f64) {
    let mut best = (0.0, 0.0, 0.0);
    for i in 0..s.points {
        let x = -s.window + 2.0 * s.window * i as f64 / (s.points - 1) as f64;
        for l in 0..s.layers {
            let y = if s.layers == 1 {
                0.0
            } else {
                -sigma + 2.0 * sigma * l as f64 / (s.layers - 1) as f64
            };
            let z = [C64::new(x, y), C64::new(0.0, 0.0)];
            let v = spectral_norm_2x2(h.linearization_complex(z));
            if v > best.0 {
                best = (v, x, y);
            }
        }
    }
    best
}

/// Sampled supremum of `|J d^2 H|` over the strip `|Im z| <= sigma`.
///
/// For `H = xi^2/2 + V(x)` the linearization depends on `x + iy` only. The
/// sampling is doubled until the supremum changes by less than the tolerance,
/// then polished by a local pattern search.
pub fn estimate_alpha(
    h: &HamiltonianModel,
    sigma: f64,
    samples: AlphaSampling,
) -> Result<AlphaEstimate> {
    if !(sigma >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "sigma must be >= 0, got {sigma}"
        )));
    }
    if sigma > h.radii.nu {
        return Err(Error::OutsideAnalyticityRadius {
            sigma,
            radius: h.radii.nu,
        });
    }
    let mut s = samples;
    let mut best = alpha_sample(h, sigma, &s);
    for _ in 0..6 {
        s.points = 2 * s.points - 1;
        s.layers = 2 * s.layers - 1;
        let next = alpha_sample(h, sigma, &s);
        let stable = (next.0 - best.0).abs() <= s.tolerance * next.0.max(1e-300);
        best = if next.0 >= best.0 { next } else { best };
        if stable {
            break;
        }
    }
    let (mut v, mut x, mut y) = best;
    let mut step = 2.0 * s.window / s.points as f64;
    while step > 1e-10 {
        let mut moved = false;
        for (dx, dy) in [(1.0, 0.0), (-1.0, 0.0), (0.0, 1.0), (0.0, -1.0)] {
            let nx = x + dx * step;
            let ny = (y + dy * step).clamp(-sigma, sigma);
            let w =
                spectral_norm_2x2(h.linearization_complex([C64::new(nx, ny), C64::new(0.0, 0.0)]));
            if w > v {
                v = w;
                x = nx;
                y = ny;
                moved = true;
            }
        }
        if !moved {
            step *= 0.5;
        }
    }
    Ok(AlphaEstimate {
        value: v,
        kind: AlphaKind::Strip,
    })
}

/// Summary of the standing assumptions checked on samples of a strip.
#[derive(Clone, Copy, Debug)]
pub struct AssumptionReport {
    /// Largest `|Im H|` on the real slice (should vanish).
    pub real_slice_imag: f64,
    /// Fitted affine growth `|J dH(z)| <= a1 + a2 |z|` on the strip.
    pub growth: (f64, f64),
    /// Sampled `alpha` on the strip.
    pub alpha: f64,
    /// Sampled `sup |d^3 H(z)| e^{rho |Re z|}` on the strip.
    pub third_derivative_weighted: f64,
}

/// Check reality, linear growth of the vector field, bounded linearization,
/// and exponential decay of third derivatives on a sampled strip.
pub fn check_assumptions(h: &HamiltonianModel, sigma: f64, rho: f64) -> Result<AssumptionReport> {
    let window = 12.0;
    let n = 801;
    let mut real_imag: f64 = 0.0;
    let mut a1: f64 = 0.0;
    let mut a2: f64 = 0.0;
    let mut third: f64 = 0.0;
    for i in 0..n {
        let x = -window + 2.0 * window * i as f64 / (n - 1) as f64;
        for p in [-3.0, 0.0, 3.0] {
            let v = h.eval_complex([C64::new(x, 0.0), C64::new(p, 0.0)]);
            real_imag = real_imag.max(v.im.abs());
        }
        for l in 0..5 {
            let y = -sigma + 2.0 * sigma * l as f64 / 4.0;
            let zx = C64::new(x, y);
            for p in [0.0, 1.0, 4.0] {
                let zp = C64::new(p, y);
                let f = h.vector_field_complex([zx, zp]);
                let size = f[0].norm().max(f[1].norm());
                let r = x.abs().max(p);
                if r <= 1.0 {
                    a1 = a1.max(size);
                } else {
                    a2 = a2.max(size / r);
                }
            }
            let d3 = h.potential.derivative_complex(3, zx).norm();
            third = third.max(d3 * (rho * x.abs()).exp());
        }
    }
    let alpha = estimate_alpha(h, sigma, AlphaSampling::default())?.value;
    Ok(AssumptionReport {
        real_slice_imag: real_imag,
        growth: (a1, a2),
        alpha,
        third_derivative_weighted: third,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gradient_matches_finite_differences() {
        for h in [
            HamiltonianModel::harmonic(),
            HamiltonianModel::gaussian_well(1.0),
            HamiltonianModel::pendulum_window(1.0, 1.5),
            HamiltonianModel::bumped_oscillator(1.0, 1.0),
        ] {
            for &x in &[-2.0, -0.3, 0.0, 0.7, 1.9] {
                for &p in &[-1.0, 0.4] {
                    let e = 1e-5;
                    let g = h.gradient([x, p]);
                    let gx = (h.eval([x + e, p]) - h.eval([x - e, p])) / (2.0 * e);
                    let gp = (h.eval([x, p + e]) - h.eval([x, p - e])) / (2.0 * e);
                    assert!((g[0] - gx).abs() <= 1e-6 * (1.0 + gx.abs()));
                    assert!((g[1] - gp).abs() <= 1e-6 * (1.0 + gp.abs()));
                    let hs = h.hessian([x, p]);
                    let hxx = (h.gradient([x + e, p])[0] - h.gradient([x - e, p])[0]) / (2.0 * e);
                    assert!((hs[0][0] - hxx).abs() <= 1e-5 * (1.0 + hxx.abs()));
                }
            }
        }
    }

    #[test]
    fn third_and_fourth_derivatives_match_finite_differences() {
        let v = Potential::GaussianBump {
            strength: 0.7,
            width: 1.3,
        };
        for &x in &[-1.1, 0.2, 2.0] {
            let e = 1e-4;
            for n in 1..=4 {
                let fd = (v.derivative(n - 1, x + e) - v.derivative(n - 1, x - e)) / (2.0 * e);
                assert!((v.derivative(n, x) - fd).abs() < 1e-6, "order {n}");
            }
        }
    }

    #[test]
    fn complex_extension_agrees_on_real_slice() {
        let v = Potential::GaussianBump {
            strength: 1.0,
            width: 1.0,
        };
        for n in 0..=4 {
            let a = v.derivative(n, 0.37);
            let b = v.derivative_complex(n, C64::new(0.37, 0.0));
            assert!((a - b.re).abs() < 1e-14 && b.im == 0.0);
        }
    }

    #[test]
    fn alpha_for_quadratic_models_is_one() {
        let a =
            estimate_alpha(&HamiltonianModel::harmonic(), 0.5, AlphaSampling::default()).unwrap();
        assert!((a.value - 1.0).abs() < 1e-12);
        let a = estimate_alpha(&HamiltonianModel::free(), 0.5, AlphaSampling::default()).unwrap();
        assert!((a.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn alpha_for_gaussian_well_matches_dense_line_search() {
        // |V''(x + i y)| is subharmonic, so its strip maximum sits on |y| = sigma.
        let h = HamiltonianModel::gaussian_well(1.0);
        let sigma = 0.3;
        let a = estimate_alpha(&h, sigma, AlphaSampling::default())
            .unwrap()
            .value;
        let mut dense: f64 = 0.0;
        for i in 0..200_001 {
            let x = -6.0 + 12.0 * i as f64 / 200_000.0;
            let u = C64::new(x, sigma);
            let v2 = (u * u * 4.0 - 2.0) * (-u * u).exp();
            dense = dense.max(v2.norm());
        }
        let oracle = dense.max(1.0);
        assert!((a - oracle).abs() <= 0.01 * oracle, "{a} vs {oracle}");
        let closed = (2.0 + 4.0 * sigma * sigma) * (sigma * sigma).exp();
        assert!((a - closed).abs() < 1e-6 * closed);
    }

    #[test]
    fn assumptions_hold_for_catalog() {
        for name in CATALOG {
            let h = HamiltonianModel::from_name(name).unwrap();
            let r = check_assumptions(&h, 0.3, 0.5).unwrap();
            assert!(r.real_slice_imag == 0.0);
            assert!(r.growth.0.is_finite() && r.growth.1.is_finite());
            assert!(r.third_derivative_weighted.is_finite());
        }
    }

    #[test]
    fn unknown_model_is_rejected() {
        assert!(HamiltonianModel::from_name("quartic").is_err());
    }
}
