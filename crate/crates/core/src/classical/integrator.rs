//! Dormand–Prince 5(4) with step clipping at requested output times.

/// Outcome statistics of one trajectory.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
}

/// Failure: the step size fell below the representable resolution at time `t`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Underflow {
    pub t: f64,
}

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
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

#[inline]
fn lin<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for &(c, k) in terms {
        if c != 0.0 {
            for i in 0..N {
                out[i] += h * c * k[i];
            }
        }
    }
    out
}

/// Integrate the autonomous system `y' = f(y)` from `t = 0` and return the
/// state at each time in `stops` (nonnegative, nondecreasing).
///
/// Mixed absolute/relative error control with tolerance `tol` per step.
pub fn dopri5<const N: usize, F>(
    f: F,
    y0: [f64; N],
    stops: &[f64],
    tol: f64,
    h_init: f64,
) -> Result<(Vec<[f64; N]>, StepStats), Underflow>
where
    F: Fn(&[f64; N]) -> [f64; N],
{
    let mut out = Vec::with_capacity(stops.len());
    let mut stats = StepStats::default();
    let mut t = 0.0f64;
    let mut y = y0;
    let mut k1 = f(&y);
    let mut h = h_init;
    for &stop in stops {
        while t < stop {
            let remaining = stop - t;
            let clipped = h >= remaining;
            let step = if clipped { remaining } else { h };
            let k2 = f(&lin(&y, step, &[(A21, &k1)]));
            let k3 = f(&lin(&y, step, &[(A31, &k1), (A32, &k2)]));
            let k4 = f(&lin(&y, step, &[(A41, &k1), (A42, &k2), (A43, &k3)]));
            let k5 = f(&lin(
                &y,
                step,
                &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)],
            ));
            let k6 = f(&lin(
                &y,
                step,
                &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
            ));
            let y_new = lin(
                &y,
                step,
                &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)],
            );
            let k7 = f(&y_new);
            let mut err = 0.0;
            for i in 0..N {
                let e = step
                    * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
                let sc = tol * (1.0 + y[i].abs().max(y_new[i].abs()));
                err += (e / sc) * (e / sc);
            }
            let err = (err / N as f64).sqrt();
            if err <= 1.0 && y_new.iter().all(|v| v.is_finite()) {
                stats.accepted += 1;
                t = if clipped { stop } else { t + step };
                y = y_new;
                k1 = k7;
                let fac = if err == 0.0 {
                    5.0
                } else {
                    (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
                };
                let proposal = step * fac;
                h = if clipped { h.max(proposal) } else { proposal };
            } else {
                stats.rejected += 1;
                let fac = if err.is_finite() {
                    (0.9 * err.powf(-0.2)).clamp(0.1, 0.9)
                } else {
                    0.1
                };
                h = step * fac;
                if h < 1e-13 * (1.0 + t.abs()) {
                    return Err(Underflow { t });
                }
            }
        }
        out.push(y);
    }
    Ok((out, stats))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay() {
        let (ys, stats) =
            dopri5(|y: &[f64; 1]| [-y[0]], [1.0], &[0.5, 1.0, 3.0], 1e-12, 0.01).unwrap();
        for (y, t) in ys.iter().zip([0.5f64, 1.0, 3.0]) {
            assert!((y[0] - (-t).exp()).abs() < 1e-11);
        }
        assert!(stats.accepted > 0);
    }

    #[test]
    fn oscillator_hits_stops_exactly() {
        let stops = [0.0, 0.1, 0.1, 2.0, std::f64::consts::PI];
        let (ys, _) = dopri5(|y: &[f64; 2]| [y[1], -y[0]], [1.0, 0.0], &stops, 1e-12, 0.1).unwrap();
        assert_eq!(ys[0], [1.0, 0.0]);
        assert_eq!(ys[1], ys[2]);
        for (y, t) in ys.iter().zip(stops) {
            assert!((y[0] - t.cos()).abs() < 1e-10);
        }
    }

    #[test]
    fn blow_up_underflows() {
        let r = dopri5(|y: &[f64; 1]| [y[0] * y[0]], [1.0], &[2.0], 1e-10, 0.01);
        assert!(r.is_err());
    }
}
