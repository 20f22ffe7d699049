//! Explicit estimates: strip-shrinking sequences, term and remainder bounds,
//! the Ehrenfest time, iterated-logarithm orders and calibration of the
//! existence-only constants.
//!
//! All products are accumulated as logarithms; [`BoundValue`] carries the
//! logarithm and reports overflow instead of silently returning `inf`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Constants and strip parameters entering the bounds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundContext {
    /// Degrees of freedom.
    pub n: usize,
    pub alpha: f64,
    pub sigma: f64,
    pub rho: f64,
    /// Upper bound for the strip norm of the observable.
    pub b_bar: f64,
    /// Constant of the defect-operator estimate.
    pub a: f64,
    pub e: f64,
    pub f: f64,
    /// Strip decrements per step, in the imaginary and decay directions.
    pub delta: f64,
    pub d: f64,
}

impl BoundContext {
    /// Context with `A = E = F = 1` and the default schedule for order `order`.
    pub fn new(
        n: usize,
        alpha: f64,
        sigma: f64,
        rho: f64,
        b_bar: f64,
        order: usize,
    ) -> Result<Self> {
        let ctx = BoundContext {
            n,
            alpha,
            sigma,
            rho,
            b_bar,
            a: 1.0,
            e: 1.0,
            f: 1.0,
            delta: 0.0,
            d: 0.0,
        };
        ctx.with_schedule(order)
    }

    /// `delta = sigma/(2N)`, `d = rho/(2N)`.
    pub fn with_schedule(mut self, order: usize) -> Result<Self> {
        let order = order.max(1) as f64;
        self.delta = self.sigma / (2.0 * order);
        self.d = self.rho / (2.0 * order);
        self.validate(0)?;
        Ok(self)
    }

    /// Positivity, and that `order` steps leave part of the strip.
    pub fn validate(&self, order: usize) -> Result<()> {
        let named = [
            ("sigma", self.sigma),
            ("rho", self.rho),
            ("b_bar", self.b_bar),
            ("A", self.a),
            ("E", self.e),
            ("F", self.f),
            ("delta", self.delta),
            ("d", self.d),
        ];
        for (name, v) in named {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be positive and finite, got {v}"
                )));
            }
        }
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "alpha must be >= 0, got {}",
                self.alpha
            )));
        }
        if self.n == 0 {
            return Err(Error::InvalidParameter("n must be >= 1".into()));
        }
        let k = order as f64;
        if k * self.delta >= self.sigma || k * self.d >= self.rho {
            return Err(Error::StripExhausted(format!(
                "{order} steps of (delta, d) = ({}, {}) exhaust the strip ({}, {})",
                self.delta, self.d, self.sigma, self.rho
            )));
        }
        Ok(())
    }

    fn nf(&self) -> f64 {
        self.n as f64
    }
}

/// A nonnegative quantity held by its natural logarithm.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundValue {
    pub ln: f64,
}

impl BoundValue {
    pub fn from_ln(ln: f64) -> Self {
        BoundValue { ln }
    }

    pub fn zero() -> Self {
        BoundValue {
            ln: f64::NEG_INFINITY,
        }
    }

    /// The value, `+inf` when it does not fit a double.
    pub fn value(&self) -> f64 {
        if self.overflowed() {
            f64::INFINITY
        } else {
            self.ln.exp()
        }
    }

    pub fn overflowed(&self) -> bool {
        self.ln > f64::MAX.ln()
    }

    /// `self * s` for `s >= 0`.
    pub fn scaled(&self, s: f64) -> Self {
        BoundValue {
            ln: self.ln + s.ln(),
        }
    }
}

fn ln_factorial(k: usize) -> f64 {
    (2..=k).map(|i| (i as f64).ln()).sum()
}

/// Strip-shrinking sequences for orders `1..=N`.
#[derive(Clone, Debug, PartialEq)]
pub struct StripSchedule {
    /// `e_k = e^{-alpha t k}`.
    pub e: Vec<f64>,
    /// Closed form consistent with the one-step recursion.
    pub gamma: Vec<BoundValue>,
    /// Closed form as printed: factor `A e_1` per step and no `t` in the
    /// quadratic exponent.
    pub gamma_printed: Vec<BoundValue>,
}

/// `ln Gamma_1 = ln(A B / (delta^{2n} d^{4n+3})) - (6n+3) ln e_1`.
fn ln_gamma_one(ctx: &BoundContext, t: f64) -> f64 {
    let n = ctx.nf();
    let ln_e1 = -ctx.alpha * t;
    (ctx.a * ctx.b_bar).ln()
        - 2.0 * n * ctx.delta.ln()
        - (4.0 * n + 3.0) * ctx.d.ln()
        - (6.0 * n + 3.0) * ln_e1
}

/// `ln` of `A / (delta^{2n} d^{4n+3})`.
fn ln_step(ctx: &BoundContext) -> f64 {
    let n = ctx.nf();
    ctx.a.ln() - 2.0 * n * ctx.delta.ln() - (4.0 * n + 3.0) * ctx.d.ln()
}

pub fn strip_schedule(ctx: &BoundContext, order: usize, t: f64) -> Result<StripSchedule> {
    ctx.validate(order)?;
    check_time(t)?;
    let n = ctx.nf();
    let p = 6.0 * n + 3.0;
    let ln_e1 = -ctx.alpha * t;
    let g1 = ln_gamma_one(ctx, t);
    let mut e = Vec::with_capacity(order);
    let mut gamma = Vec::with_capacity(order);
    let mut gamma_printed = Vec::with_capacity(order);
    for k in 1..=order {
        let kf = k as f64;
        e.push((ln_e1 - ctx.alpha * t * (kf - 1.0)).exp());
        let quad = ctx.alpha * kf * (kf - 1.0) / 2.0;
        gamma.push(BoundValue::from_ln(
            g1 + (kf - 1.0) * (ln_step(ctx) - p * ln_e1) + p * quad * t,
        ));
        gamma_printed.push(BoundValue::from_ln(
            g1 + (kf - 1.0) * (ln_step(ctx) + ln_e1) + p * quad,
        ));
    }
    Ok(StripSchedule {
        e,
        gamma,
        gamma_printed,
    })
}

/// `Gamma_k` by iterating `Gamma_{k+1} = Gamma_k A / ((e_k e^{-alpha t})^{6n+3} d^{4n+3} delta^{2n})`.
pub fn gamma_by_recursion(ctx: &BoundContext, order: usize, t: f64) -> Result<Vec<BoundValue>> {
    ctx.validate(order)?;
    check_time(t)?;
    let p = 6.0 * ctx.nf() + 3.0;
    let mut out = Vec::with_capacity(order);
    let mut g = ln_gamma_one(ctx, t);
    for k in 1..=order {
        out.push(BoundValue::from_ln(g));
        let ln_ek = -ctx.alpha * t * k as f64;
        g += ln_step(ctx) - p * (ln_ek - ctx.alpha * t);
    }
    Ok(out)
}

fn check_time(t: f64) -> Result<()> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "time must be nonnegative, got {t}"
        )));
    }
    Ok(())
}

/// Common tail: `ln(B F / j!) + (4n+2) alpha t + (6n+3) alpha j(j-1) t / 2`.
fn ln_tail(ctx: &BoundContext, j: usize, t: f64) -> f64 {
    let n = ctx.nf();
    let jf = j as f64;
    (ctx.b_bar * ctx.f).ln() - ln_factorial(j)
        + (4.0 * n + 2.0) * ctx.alpha * t
        + (6.0 * n + 3.0) * ctx.alpha * jf * (jf - 1.0) * t / 2.0
}

/// `ln[e E e^{7 alpha t} j^{6n+3}]`.
fn ln_base(ctx: &BoundContext, j: usize, t: f64) -> f64 {
    1.0 + ctx.e.ln() + 7.0 * ctx.alpha * t + (6.0 * ctx.nf() + 3.0) * (j as f64).ln()
}

/// Bound on the strip norm of the `j`-th correction symbol.
pub fn term_bound(ctx: &BoundContext, j: usize, t: f64) -> Result<BoundValue> {
    if j == 0 {
        return Err(Error::OrderOutOfRange {
            order: 0,
            reason: "term bounds start at j = 1".into(),
        });
    }
    ctx.validate(0)?;
    check_time(t)?;
    Ok(BoundValue::from_ln(
        j as f64 * ln_base(ctx, j, t) + ln_tail(ctx, j, t),
    ))
}

/// Bound on `|B_t - B_t^N| / hbar^{2(N+1)}`.
///
/// Stated for `N >= 2`; the same expression is used at `N = 1`.
pub fn remainder_bound(ctx: &BoundContext, order: usize, t: f64) -> Result<BoundValue> {
    if order == 0 {
        return Err(Error::OrderOutOfRange {
            order: 0,
            reason: "remainder bounds start at N = 1".into(),
        });
    }
    check_time(t)?;
    if t == 0.0 {
        return Ok(BoundValue::zero());
    }
    let ln_volume = order as f64 * t.ln() - ln_factorial(order);
    remainder_bound_with_volume(ctx, order, t, ln_volume)
}

/// [`remainder_bound`] with the simplex volume `t^N/N!` supplied as its logarithm.
pub fn remainder_bound_with_volume(
    ctx: &BoundContext,
    order: usize,
    t: f64,
    ln_volume: f64,
) -> Result<BoundValue> {
    if order == 0 {
        return Err(Error::OrderOutOfRange {
            order: 0,
            reason: "remainder bounds start at N = 1".into(),
        });
    }
    ctx.validate(0)?;
    check_time(t)?;
    let tail = ln_tail(ctx, order, t) + ln_factorial(order);
    Ok(BoundValue::from_ln(
        order as f64 * ln_base(ctx, order, t) + ln_volume + tail,
    ))
}

/// Length of the time window on which the order-`N` remainder stays small.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum EhrenfestTime {
    Finite(f64),
    /// `alpha = 0`: no restriction.
    Unrestricted,
}

impl EhrenfestTime {
    pub fn value(&self) -> f64 {
        match *self {
            EhrenfestTime::Finite(v) => v,
            EhrenfestTime::Unrestricted => f64::INFINITY,
        }
    }
}

/// `T_N(hbar) = -2 log(hbar) / (alpha (N - 1))`.
pub fn ehrenfest_time(hbar: f64, order: usize, alpha: f64) -> Result<EhrenfestTime> {
    if !(hbar > 0.0 && hbar < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "hbar must lie in (0, 1), got {hbar}"
        )));
    }
    if order < 2 {
        return Err(Error::OrderOutOfRange {
            order,
            reason: "the Ehrenfest time needs N >= 2".into(),
        });
    }
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "alpha must be >= 0, got {alpha}"
        )));
    }
    if alpha == 0.0 {
        return Ok(EhrenfestTime::Unrestricted);
    }
    Ok(EhrenfestTime::Finite(
        -2.0 * hbar.ln() / (alpha * (order - 1) as f64),
    ))
}

/// Order `N_k = [log^{[k]} |log hbar|]` and the time `|log hbar| / log^{[k]} |log hbar|`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IteratedLogOrder {
    pub order: usize,
    pub t_max: f64,
    /// Unrounded `log^{[k]} |log hbar|`.
    pub chain: f64,
}

/// Accepts `hbar` through its logarithm so that values below the double range
/// can be used.
pub fn iterated_log_order_ln(ln_hbar: f64, depth: usize) -> Result<IteratedLogOrder> {
    if !(ln_hbar < 0.0) {
        return Err(Error::InvalidParameter(format!(
            "log hbar must be negative, got {ln_hbar}"
        )));
    }
    let top = -ln_hbar;
    let mut v = top;
    // Exact towers such as e^{e^e} come back as 1 - ulp.
    let slack = 1e-12;
    for level in 0..=depth {
        if v < 1.0 - slack {
            return Err(Error::ChainCollapse { level, value: v });
        }
        if level < depth {
            if v <= 1.0 {
                return Err(Error::ChainCollapse { level, value: v });
            }
            v = v.ln();
        }
    }
    let order = (v + slack).floor() as usize;
    Ok(IteratedLogOrder {
        order,
        t_max: top / v,
        chain: v,
    })
}

pub fn iterated_log_order(hbar: f64, depth: usize) -> Result<IteratedLogOrder> {
    if !(hbar > 0.0 && hbar < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "hbar must lie in (0, 1), got {hbar}"
        )));
    }
    iterated_log_order_ln(hbar.ln(), depth)
}

/// The long-time estimate at order `N`:
/// `(2 e^2 E / alpha)^N N^{(6n+1)N} B F hbar^{2 - 15/alpha - (8n+4)/(alpha N)} (-hbar log hbar)^N`,
/// evaluated exactly as written.
pub fn window_bound(ctx: &BoundContext, order: usize, hbar: f64) -> Result<BoundValue> {
    if order < 2 {
        return Err(Error::OrderOutOfRange {
            order,
            reason: "the window bound needs N >= 2".into(),
        });
    }
    if !(hbar > 0.0 && hbar < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "hbar must lie in (0, 1), got {hbar}"
        )));
    }
    if !(ctx.alpha > 0.0) {
        return Err(Error::InvalidParameter(
            "the window bound needs alpha > 0".into(),
        ));
    }
    ctx.validate(0)?;
    let (n, nn, a) = (ctx.nf(), order as f64, ctx.alpha);
    let lh = hbar.ln();
    let ln = nn * (2.0_f64.ln() + 2.0 + ctx.e.ln() - a.ln())
        + (6.0 * n + 1.0) * nn * nn.ln()
        + (ctx.b_bar * ctx.f).ln()
        + (2.0 - 15.0 / a - (8.0 * n + 4.0) / (a * nn)) * lh
        + nn * (-hbar * lh).ln();
    Ok(BoundValue::from_ln(ln))
}

/// First-order envelope `c hbar^2 t e^{rate t}`.
pub fn first_order_envelope(hbar: f64, t: f64, c: f64, rate: f64) -> f64 {
    c * hbar * hbar * t * (rate * t).exp()
}

/// One measured remainder norm `|B_t - B_t^N|`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RemainderMeasurement {
    pub order: usize,
    pub t: f64,
    pub hbar: f64,
    pub error: f64,
}

impl RemainderMeasurement {
    /// `error / hbar^{2(N+1)}`, the quantity compared with [`remainder_bound`].
    pub fn scaled(&self) -> f64 {
        self.error / self.hbar.powi(2 * (self.order as i32 + 1))
    }
}

/// One measured strip norm pair for the defect operator: `|b|` on the wide
/// strip and `|Delta b|` on the strip shrunk by `(delta, d)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DefectMeasurement {
    pub input: f64,
    pub output: f64,
    pub delta: f64,
    pub d: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CalibrationStatus {
    Calibrated,
    Uncalibrated,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Calibration {
    pub context: BoundContext,
    pub status: CalibrationStatus,
    /// `(N, t, hbar)` of every cell used; excluded from verification.
    pub cells: Vec<(usize, f64, f64)>,
}

impl Calibration {
    pub fn is_calibration_cell(&self, m: &RemainderMeasurement) -> bool {
        self.cells
            .iter()
            .any(|&(n, t, h)| n == m.order && t == m.t && h == m.hbar)
    }
}

/// Smallest `E` (with `F` held at its current value) and smallest `A` for
/// which every supplied measurement satisfies its bound.
pub fn calibrate(
    ctx: &BoundContext,
    remainders: &[RemainderMeasurement],
    defects: &[DefectMeasurement],
) -> Result<Calibration> {
    ctx.validate(0)?;
    let mut out = *ctx;
    let mut cells = Vec::new();
    let mut ln_e: Option<f64> = None;
    for m in remainders {
        if m.order == 0 {
            return Err(Error::InfeasibleCalibration(
                "order 0 does not depend on E".into(),
            ));
        }
        let s = m.scaled();
        if !(s >= 0.0 && s.is_finite()) {
            return Err(Error::InfeasibleCalibration(format!(
                "measurement {m:?} is not a finite norm"
            )));
        }
        cells.push((m.order, m.t, m.hbar));
        if s == 0.0 {
            continue;
        }
        if m.t == 0.0 {
            return Err(Error::InfeasibleCalibration(format!(
                "nonzero error {} at t = 0",
                m.error
            )));
        }
        let unit = remainder_bound(&BoundContext { e: 1.0, ..*ctx }, m.order, m.t)?;
        let need = (s.ln() - unit.ln) / m.order as f64;
        ln_e = Some(ln_e.map_or(need, |v: f64| v.max(need)));
    }
    if let Some(v) = ln_e {
        out.e = v.exp();
        if !(out.e > 0.0 && out.e.is_finite()) {
            return Err(Error::InfeasibleCalibration(format!(
                "E = exp({v}) is not representable"
            )));
        }
    }
    let mut a: Option<f64> = None;
    let n = ctx.nf();
    for m in defects {
        if !(m.input > 0.0 && m.output >= 0.0 && m.delta > 0.0 && m.d > 0.0) {
            return Err(Error::InfeasibleCalibration(format!(
                "defect measurement {m:?} is degenerate"
            )));
        }
        let need = m.output * m.delta.powf(2.0 * n) * m.d.powf(4.0 * n + 3.0) / m.input;
        a = Some(a.map_or(need, |v: f64| v.max(need)));
    }
    if let Some(v) = a {
        if v > 0.0 {
            out.a = v;
        }
    }
    let status = if ln_e.is_some() || a.is_some() {
        CalibrationStatus::Calibrated
    } else {
        CalibrationStatus::Uncalibrated
    };
    Ok(Calibration {
        context: out,
        status,
        cells,
    })
}

/// Least-squares rate of `ln bound` against `t` on the given times.
pub fn remainder_bound_rate(ctx: &BoundContext, order: usize, times: &[f64]) -> Result<f64> {
    let ys: Vec<f64> = times
        .iter()
        .map(|&t| remainder_bound(ctx, order, t).map(|b| b.ln))
        .collect::<Result<_>>()?;
    crate::fit::linear_fit(times, &ys).map(|f| f.slope)
}
