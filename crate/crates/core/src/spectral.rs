//! FFT plumbing shared by the phase-space and quantum modules.
//!
//! All transforms are unnormalized in both directions (rustfft convention);
//! callers apply their own scale factors.

use std::cell::RefCell;
use std::collections::HashMap;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};

type C64 = Complex64;

thread_local! {
    static PLANS: RefCell<(FftPlanner<f64>, HashMap<(usize, bool), Arc<dyn Fft<f64>>>)> =
        RefCell::new((FftPlanner::new(), HashMap::new()));
}

/// Cached FFT plan for length `n`.
pub fn plan(n: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    PLANS.with(|cell| {
        let mut guard = cell.borrow_mut();
        let (planner, cache) = &mut *guard;
        cache
            .entry((n, inverse))
            .or_insert_with(|| {
                let dir = if inverse {
                    FftDirection::Inverse
                } else {
                    FftDirection::Forward
                };
                planner.plan_fft(n, dir)
            })
            .clone()
    })
}

/// Signed frequency index of DFT bin `k` of length `m` (range `-m/2..m/2`).
#[inline]
pub fn signed(k: usize, m: usize) -> i64 {
    if k < m / 2 {
        k as i64
    } else {
        k as i64 - m as i64
    }
}

/// In-place FFT of every contiguous row of length `m`.
pub fn fft_rows(data: &mut [C64], m: usize, inverse: bool) {
    let p = plan(m, inverse);
    p.process(data);
}

/// In-place square transpose.
pub fn transpose(data: &mut [C64], m: usize) {
    for i in 0..m {
        for j in (i + 1)..m {
            data.swap(i * m + j, j * m + i);
        }
    }
}

/// In-place FFT along the first (slow) axis of an `m x m` array.
pub fn fft_cols(data: &mut [C64], m: usize, inverse: bool) {
    transpose(data, m);
    fft_rows(data, m, inverse);
    transpose(data, m);
}

/// In-place unnormalized 2-D FFT of an `m x m` row-major array.
pub fn fft2(data: &mut [C64], m: usize, inverse: bool) {
    fft_rows(data, m, inverse);
    fft_cols(data, m, inverse);
}

/// Multiply a spectrum (natural FFT order, length `m`) by `(i q)^order`, where
/// `q = scale * signed(k)`. Odd orders zero the Nyquist bin.
pub fn derivative_factor(k: usize, m: usize, scale: f64, order: u32) -> C64 {
    if order == 0 {
        return C64::new(1.0, 0.0);
    }
    if order % 2 == 1 && k == m / 2 {
        return C64::new(0.0, 0.0);
    }
    let q = scale * signed(k, m) as f64;
    C64::new(0.0, q).powu(order)
}

/// Band-limited shift: given the unnormalized spectrum `spec` of a periodic
/// line sampled with spacing `h`, write samples of `f(x + c)` into `out`.
pub fn shifted_line(spec: &[C64], h: f64, c: f64, work: &mut [C64], out: &mut [C64]) {
    let m = spec.len();
    let dq = 2.0 * std::f64::consts::PI / (m as f64 * h);
    let norm = 1.0 / m as f64;
    for k in 0..m {
        let q = dq * signed(k, m) as f64;
        work[k] = spec[k] * C64::from_polar(norm, q * c);
    }
    fft_rows(work, m, true);
    out.copy_from_slice(work);
}

/// Copy a length-`m` spectrum into a zero-padded length-`big` spectrum,
/// splitting the Nyquist bin evenly between the two signs.
fn pad_line(src: &[C64], dst: &mut [C64]) {
    let m = src.len();
    let big = dst.len();
    let half = m / 2;
    dst.iter_mut().for_each(|v| *v = C64::new(0.0, 0.0));
    dst[..half].copy_from_slice(&src[..half]);
    dst[big - half + 1..].copy_from_slice(&src[half + 1..]);
    dst[half] = src[half] * 0.5;
    dst[big - half] = src[half] * 0.5;
}

/// Zero-padded spectral upsampling of a periodic `m x m` array by integer
/// factor `factor`, returning a `(m factor) x (m factor)` array.
pub fn upsample(data: &[C64], m: usize, factor: usize) -> Vec<C64> {
    let big = m * factor;
    let scale = 1.0 / (m * m) as f64;
    // Fast axis: m rows of length big.
    let mut rows = data.to_vec();
    fft_rows(&mut rows, m, false);
    let mut wide = vec![C64::new(0.0, 0.0); m * big];
    for i in 0..m {
        pad_line(&rows[i * m..(i + 1) * m], &mut wide[i * big..(i + 1) * big]);
    }
    fft_rows(&mut wide, big, true);
    // Slow axis: gather each column, pad, and scatter.
    let fwd = plan(m, false);
    let inv = plan(big, true);
    let mut out = vec![C64::new(0.0, 0.0); big * big];
    let mut col = vec![C64::new(0.0, 0.0); m];
    let mut long = vec![C64::new(0.0, 0.0); big];
    for j in 0..big {
        for i in 0..m {
            col[i] = wide[i * big + j];
        }
        fwd.process(&mut col);
        pad_line(&col, &mut long);
        inv.process(&mut long);
        for i in 0..big {
            out[i * big + j] = long[i] * scale;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn signed_indices_cover_range() {
        let m = 8;
        let v: Vec<i64> = (0..m).map(|k| signed(k, m)).collect();
        assert_eq!(v, vec![0, 1, 2, 3, -4, -3, -2, -1]);
    }

    #[test]
    fn fft2_round_trip() {
        let m = 16;
        let data: Vec<C64> = (0..m * m)
            .map(|i| C64::new((i as f64).sin(), (i as f64 * 0.3).cos()))
            .collect();
        let mut w = data.clone();
        fft2(&mut w, m, false);
        fft2(&mut w, m, true);
        for (a, b) in w.iter().zip(&data) {
            assert!((a / (m * m) as f64 - b).norm() < 1e-13);
        }
    }

    #[test]
    fn upsample_preserves_samples() {
        let m = 32;
        let h = 2.0 * 6.0 / m as f64;
        let f = |x: f64, y: f64| (-(x * x + 0.5 * y * y)).exp();
        let data: Vec<C64> = (0..m * m)
            .map(|i| C64::new(f(-6.0 + (i / m) as f64 * h, -6.0 + (i % m) as f64 * h), 0.0))
            .collect();
        let up = upsample(&data, m, 2);
        for i in 0..m {
            for j in 0..m {
                assert!((up[(2 * i) * 2 * m + 2 * j] - data[i * m + j]).norm() < 1e-12);
            }
        }
        let x = -6.0 + 11.5 * h;
        let y = -6.0 + 17.5 * h;
        assert!((up[23 * 2 * m + 35].re - f(x, y)).abs() < 1e-6);
    }

    #[test]
    fn shift_matches_closed_form() {
        let m = 64;
        let h = 16.0 / m as f64;
        let xs: Vec<f64> = (0..m).map(|i| -8.0 + i as f64 * h).collect();
        let mut spec: Vec<C64> = xs.iter().map(|x| C64::new((-x * x).exp(), 0.0)).collect();
        fft_rows(&mut spec, m, false);
        let mut work = vec![C64::new(0.0, 0.0); m];
        let mut out = vec![C64::new(0.0, 0.0); m];
        shifted_line(&spec, h, 0.37, &mut work, &mut out);
        for (x, v) in xs.iter().zip(&out) {
            assert!((v.re - (-(x + 0.37) * (x + 0.37)).exp()).abs() < 1e-12);
        }
    }
}
