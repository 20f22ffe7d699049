//! Weighted sup norms on complex strips.
//!
//! `|b|_{sigma,rho} = sup_{|Im z| <= sigma} |b(z)| e^{rho |Re z|}` with
//! `|x| = max_k |x_k|`. By the maximum principle applied in each complex
//! variable separately the supremum is attained on `|Im z_k| = sigma`, so only
//! the four corner shifts `y in {-sigma, sigma}^2` are sampled.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;

use super::analytic::AnalyticSymbol;
use super::fourier::{forward_transform, inverse_transform, FourierSymbol};
use super::grid::{PhaseGrid, X, XI};
use super::symbol::Symbol;
use crate::error::{Error, Result};
use crate::spectral::{fft2, signed};

/// Sampling control for [`strip_norm`].
#[derive(Clone, Copy, Debug)]
pub struct StripSampling {
    /// Coarse samples per axis.
    pub points: usize,
    /// Number of best coarse samples refined by pattern search.
    pub candidates: usize,
    /// Relative tolerance of the refined supremum; the reported value is
    /// inflated by this factor.
    pub tolerance: f64,
}

impl Default for StripSampling {
    fn default() -> Self {
        StripSampling {
            points: 161,
            candidates: 8,
            tolerance: 1e-9,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StripNorm {
    pub sigma: f64,
    pub rho: f64,
    pub value: f64,
}

fn sup_norm(x: [f64; 2]) -> f64 {
    x[0].abs().max(x[1].abs())
}

fn weighted(b: &AnalyticSymbol, x: [f64; 2], sigma: f64, rho: f64) -> f64 {
    let w = (rho * sup_norm(x)).exp();
    let mut best: f64 = 0.0;
    let shifts: &[f64] = if sigma == 0.0 { &[0.0] } else { &[-1.0, 1.0] };
    for &s1 in shifts {
        for &s2 in shifts {
            let z = [C64::new(x[0], s1 * sigma), C64::new(x[1], s2 * sigma)];
            best = best.max(b.eval(z).norm());
        }
    }
    best * w
}

/// Upper estimate of `|b|_{sigma,rho}` for a closed-form symbol.
pub fn strip_norm(
    b: &AnalyticSymbol,
    sigma: f64,
    rho: f64,
    sampling: StripSampling,
) -> Result<StripNorm> {
    if !(sigma >= 0.0 && rho >= 0.0 && sigma.is_finite() && rho.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "sigma, rho must be >= 0 (got {sigma}, {rho})"
        )));
    }
    let radius = b.analyticity_radius();
    if sigma > radius {
        return Err(Error::OutsideAnalyticityRadius { sigma, radius });
    }
    if matches!(b, AnalyticSymbol::Zero) {
        return Ok(StripNorm {
            sigma,
            rho,
            value: 0.0,
        });
    }
    let bx = b.search_box(sigma, rho);
    let n = sampling.points.max(3);
    let step = [
        (bx[0][1] - bx[0][0]) / (n - 1) as f64,
        (bx[1][1] - bx[1][0]) / (n - 1) as f64,
    ];
    let mut samples: Vec<(f64, [f64; 2])> = Vec::with_capacity(n * n + 1);
    for i in 0..n {
        for j in 0..n {
            let x = [bx[0][0] + i as f64 * step[0], bx[1][0] + j as f64 * step[1]];
            samples.push((weighted(b, x, sigma, rho), x));
        }
    }
    // The weight has kinks on the axes and diagonals; seed those too.
    samples.push((weighted(b, [0.0, 0.0], sigma, rho), [0.0, 0.0]));
    samples.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut best = samples[0].0;
    for &(v0, x0) in samples.iter().take(sampling.candidates) {
        let (v, _) = refine(b, x0, v0, step, sigma, rho, sampling.tolerance);
        best = best.max(v);
    }
    Ok(StripNorm {
        sigma,
        rho,
        value: best * (1.0 + sampling.tolerance),
    })
}

fn refine(
    b: &AnalyticSymbol,
    mut x: [f64; 2],
    mut v: f64,
    step0: [f64; 2],
    sigma: f64,
    rho: f64,
    tol: f64,
) -> (f64, [f64; 2]) {
    let mut h = step0[0].max(step0[1]);
    let dirs = [
        [1.0, 0.0],
        [-1.0, 0.0],
        [0.0, 1.0],
        [0.0, -1.0],
        [1.0, 1.0],
        [1.0, -1.0],
        [-1.0, 1.0],
        [-1.0, -1.0],
    ];
    while h > 1e-12 {
        let mut moved = false;
        for d in dirs {
            let y = [x[0] + h * d[0], x[1] + h * d[1]];
            let w = weighted(b, y, sigma, rho);
            if w > v * (1.0 + 1e-15) {
                v = w;
                x = y;
                moved = true;
            }
        }
        if !moved {
            h *= 0.5;
            if h < tol * 1e-3 {
                break;
            }
        }
    }
    (v, x)
}

/// The measured `|bhat|_{rho - delta, sigma}`: supremum of
/// `|bhat(k + i kappa)| e^{sigma |k|}` over real `k` and `|kappa| <= rho - delta`.
///
/// The complex shift is realised exactly by transforming `b(z) e^{kappa . z}`.
/// Values of `b` below its own round-off level are cleared before weighting,
/// since `e^{kappa . z}` would lift FFT noise in the far tail above genuine
/// modes. Dual-grid modes below the round-off floor of the weighted transform
/// are ignored.
pub fn fourier_strip_norm(bhat: &FourierSymbol, sigma: f64, rho: f64, delta: f64) -> Result<f64> {
    if !(delta > 0.0 && delta < rho) {
        return Err(Error::InvalidParameter(format!(
            "need 0 < delta < rho (delta = {delta}, rho = {rho})"
        )));
    }
    if sigma < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "sigma must be >= 0, got {sigma}"
        )));
    }
    let b = inverse_transform(bhat);
    if b.is_zero() {
        return Ok(0.0);
    }
    let grid = *b.grid();
    let m = grid.points();
    let b_peak = b.max_norm();
    let b = b.map(|v| if v.norm() < 1e-14 * b_peak { C64::new(0.0, 0.0) } else { v });
    let kappa = rho - delta;
    let mut best: f64 = 0.0;
    for s1 in [-1.0, 1.0] {
        for s2 in [-1.0, 1.0] {
            let values: Vec<C64> = b
                .values()
                .iter()
                .enumerate()
                .map(|(idx, v)| {
                    let [x, p] = grid.node(idx);
                    v * (kappa * (s1 * x + s2 * p)).exp()
                })
                .collect();
            let hat = forward_transform(&b.with_values(values));
            let peak = hat.values().iter().map(|v| v.norm()).fold(0.0, f64::max);
            let floor = 1e-11 * peak;
            for k1 in 0..m {
                for k2 in 0..m {
                    let v = hat.at(k1, k2).norm();
                    if v < floor {
                        continue;
                    }
                    let k = hat.frequency(k1, k2);
                    best = best.max(v * (sigma * sup_norm(k)).exp());
                }
            }
        }
    }
    Ok(best)
}

/// Right-hand side of the Fourier-norm inequality:
/// `(2/pi)^n delta^{-2n} |b|_{sigma,rho}` with `n = 1`.
pub fn fourier_norm_bound(strip: f64, delta: f64) -> f64 {
    (2.0 / PI) * strip / (delta * delta)
}

/// Strip norm of a grid symbol through the analytic continuation of its
/// trigonometric interpolant, evaluated on the grid nodes.
///
/// Fourier coefficients below `1e-13` of the peak are treated as round-off and
/// dropped before continuation. Only meaningful for well-resolved symbols.
pub fn interpolant_strip_norm(b: &Symbol, sigma: f64, rho: f64) -> Result<f64> {
    if !(sigma >= 0.0 && rho >= 0.0) {
        return Err(Error::InvalidParameter("sigma, rho must be >= 0".into()));
    }
    let grid: PhaseGrid = *b.grid();
    let m = grid.points();
    let mut coeff = b.values().to_vec();
    fft2(&mut coeff, m, false);
    let scale = 1.0 / (m * m) as f64;
    let peak = coeff.iter().map(|v| v.norm()).fold(0.0, f64::max);
    if peak == 0.0 {
        return Ok(0.0);
    }
    let dq = [
        2.0 * PI / (m as f64 * grid.spacing(X)),
        2.0 * PI / (m as f64 * grid.spacing(XI)),
    ];
    let mut best: f64 = 0.0;
    let shifts: &[f64] = if sigma == 0.0 { &[0.0] } else { &[-1.0, 1.0] };
    for &s1 in shifts {
        for &s2 in shifts {
            let mut data = vec![C64::new(0.0, 0.0); m * m];
            for k1 in 0..m {
                for k2 in 0..m {
                    let c = coeff[k1 * m + k2];
                    if c.norm() < 1e-13 * peak {
                        continue;
                    }
                    let q1 = dq[0] * signed(k1, m) as f64;
                    let q2 = dq[1] * signed(k2, m) as f64;
                    data[k1 * m + k2] = c * scale * (-(q1 * s1 * sigma) - q2 * s2 * sigma).exp();
                }
            }
            fft2(&mut data, m, true);
            for (idx, v) in data.iter().enumerate() {
                let z = grid.node(idx);
                best = best.max(v.norm() * (rho * sup_norm(z)).exp());
            }
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phase_space::analytic::Gaussian;

    fn unit_gaussian() -> AnalyticSymbol {
        AnalyticSymbol::gaussian([0.0, 0.0], [std::f64::consts::FRAC_1_SQRT_2; 2])
    }

    #[test]
    fn closed_form_gaussian_sup_norm() {
        let s = strip_norm(&unit_gaussian(), 1.0, 1.0, StripSampling::default()).unwrap();
        let want = (2.0f64 + 0.25).exp();
        assert!(
            (s.value - want).abs() < 1e-7 * want,
            "{} vs {}",
            s.value,
            want
        );
    }

    #[test]
    fn real_maximum_of_gaussian() {
        let s = strip_norm(&unit_gaussian(), 0.0, 0.0, StripSampling::default()).unwrap();
        assert!((s.value - 1.0).abs() < 1e-8);
    }

    #[test]
    fn zero_symbol() {
        assert_eq!(
            strip_norm(&AnalyticSymbol::Zero, 1.0, 1.0, StripSampling::default())
                .unwrap()
                .value,
            0.0
        );
    }

    #[test]
    fn off_center_gaussian() {
        // sup_x e^{-(x-c)^2/(2w^2) + rho x} over x > 0 is e^{rho c + rho^2 w^2 / 2}.
        let g = AnalyticSymbol::Gaussian(Gaussian::new([1.5, 0.0], [0.5, 0.5]));
        let (sigma, rho) = (0.2, 0.8);
        let s = strip_norm(&g, sigma, rho, StripSampling::default()).unwrap();
        let want = (rho * 1.5 + rho * rho * 0.125 + 2.0 * sigma * sigma / (2.0 * 0.25)).exp();
        assert!((s.value - want).abs() < 1e-7 * want);
    }

    #[test]
    fn fourier_strip_norm_gaussian_closed_form() {
        // For e^{-|z|^2}: bhat(k) = e^{-|k|^2/4}/2 and the corner shift gives
        // sup_k |bhat(k + i kappa)| e^{sigma |k|} = e^{kappa^2/2 + sigma^2} / 2.
        let g = PhaseGrid::square(8.0, 128).unwrap();
        let b = unit_gaussian().to_symbol(g, 0.1).unwrap();
        let hat = forward_transform(&b);
        let (sigma, rho, delta) = (0.5, 1.0, 0.25);
        let got = fourier_strip_norm(&hat, sigma, rho, delta).unwrap();
        let kappa: f64 = rho - delta;
        let want = 0.5 * (kappa * kappa / 2.0 + sigma * sigma).exp();
        // The dual grid spacing limits how well the peak is resolved.
        assert!(
            got <= want * (1.0 + 1e-10) && got > 0.97 * want,
            "{got} vs {want}"
        );
        assert!(fourier_strip_norm(&hat, sigma, rho, rho).is_err());
    }

    #[test]
    fn interpolant_continuation_matches_closed_form() {
        let g = PhaseGrid::square(8.0, 128).unwrap();
        let sym = unit_gaussian();
        let b = sym.to_symbol(g, 0.1).unwrap();
        let got = interpolant_strip_norm(&b, 0.5, 0.5).unwrap();
        let want = strip_norm(&sym, 0.5, 0.5, StripSampling::default())
            .unwrap()
            .value;
        assert!((got - want).abs() < 1e-3 * want, "{got} vs {want}");
    }

    #[test]
    fn fourier_norm_ignores_amplified_round_off() {
        // |bhat(k + i kappa)| e^{|k|} for a unit-width Gaussian peaks at e^{1/2 + kappa^2}.
        let b = AnalyticSymbol::gaussian([0.0, 0.0], [1.0, 1.0]);
        let want = (0.5f64 + 0.75 * 0.75).exp();
        for m in [256, 512] {
            let grid = PhaseGrid::square(12.0, m).unwrap();
            let hat = forward_transform(&b.to_symbol(grid, 1.0).unwrap());
            let got = fourier_strip_norm(&hat, 1.0, 1.0, 0.25).unwrap();
            assert!((got - want).abs() < 5e-3 * want, "M={m}: {got} vs {want}");
        }
    }
}
