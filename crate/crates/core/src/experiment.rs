//! Configuration-driven sweeps over `(hbar, N, t)`: exact evolution, the
//! expansion, measured errors, calibrated bounds and CSV reports.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::bounds::{
    calibrate, ehrenfest_time, iterated_log_order, remainder_bound, remainder_bound_rate,
    strip_schedule, BoundContext, Calibration, DefectMeasurement, RemainderMeasurement,
};
use crate::classical::{estimate_alpha, AlphaSampling, HamiltonianModel};
use crate::error::{Error, Result};
use crate::expansion::{
    approximant_from_terms, ExpansionEngine, QuadratureControl, SummationConvention,
};
use crate::fit::{linear_fit, log_log_fit};
use crate::moyal::{delta_h, HamiltonianSymbol};
use crate::phase_space::{
    interpolant_strip_norm, strip_norm, AnalyticSymbol, PhaseGrid, StripSampling,
};
use crate::quantum::{
    admissible_hbar, hamiltonian_operator, operator_norm, weyl_quantize, PositionGrid, Propagator,
};

/// Gaussian observable tails are cut at this many widths.
const TAIL_WIDTHS: f64 = 7.5;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub name: String,
    /// Overrides the catalog strength of the bump, where there is one.
    pub strength: Option<f64>,
    pub width: Option<f64>,
}

impl ModelConfig {
    pub fn build(&self) -> Result<HamiltonianModel> {
        use crate::classical::Potential;
        let mut m = HamiltonianModel::from_name(&self.name)?;
        match &mut m.potential {
            Potential::GaussianBump { strength, width }
            | Potential::BumpedOscillator {
                strength, width, ..
            } => {
                if let Some(s) = self.strength {
                    // Catalog convention: pendulum-window stores the negated strength.
                    *strength = if self.name == "pendulum-window" {
                        -s
                    } else {
                        s
                    };
                }
                if let Some(w) = self.width {
                    *width = w;
                }
            }
            Potential::Quadratic { .. } => {
                if self.strength.is_some() || self.width.is_some() {
                    return Err(Error::Config(format!(
                        "model '{}' takes no strength or width",
                        self.name
                    )));
                }
            }
        }
        Ok(m)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    /// Half-width `L` of the position box.
    pub extent: f64,
    /// Fixed points per axis; chosen per `hbar` when absent.
    pub points: Option<usize>,
    /// Momentum half-width the grid must cover; derived from the observable when absent.
    pub momentum_extent: Option<f64>,
    #[serde(default = "default_max_points")]
    pub max_points: usize,
}

fn default_max_points() -> usize {
    2048
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObservableConfig {
    pub center: [f64; 2],
    pub width: [f64; 2],
}

impl ObservableConfig {
    pub fn analytic(&self) -> AnalyticSymbol {
        AnalyticSymbol::gaussian(self.center, self.width)
    }

    fn momentum_extent(&self) -> f64 {
        self.center[1].abs() + TAIL_WIDTHS * self.width[1]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub hbar: Vec<f64>,
    pub orders: Vec<usize>,
    pub times: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StripConfig {
    pub sigma: f64,
    pub rho: f64,
}

impl Default for StripConfig {
    fn default() -> Self {
        StripConfig {
            sigma: 0.5,
            rho: 0.5,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureConfig {
    #[serde(default = "default_nodes")]
    pub nodes: usize,
    #[serde(default)]
    pub estimate_error: bool,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
}

fn default_nodes() -> usize {
    8
}

fn default_tolerance() -> f64 {
    1e-6
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig {
            nodes: default_nodes(),
            estimate_error: false,
            tolerance: default_tolerance(),
        }
    }
}

impl QuadratureConfig {
    pub fn control(&self) -> QuadratureControl {
        QuadratureControl {
            nodes: self.nodes,
            estimate_error: self.estimate_error,
            tolerance: self.tolerance,
        }
    }
}

/// The cell whose measurement fixes the constants.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationCell {
    pub order: usize,
    pub t: f64,
    pub hbar: f64,
}

impl CalibrationCell {
    fn matches(&self, order: usize, t: f64, hbar: f64) -> bool {
        self.order == order && self.t == t && self.hbar == hbar
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChecksConfig {
    #[serde(default = "yes")]
    pub bounds: bool,
    #[serde(default = "yes")]
    pub slopes: bool,
    /// Relative tolerance on fitted `hbar` slopes against `2(N+1)`.
    #[serde(default = "default_slope_tolerance")]
    pub slope_tolerance: f64,
    #[serde(default = "yes")]
    pub exactness: bool,
}

fn yes() -> bool {
    true
}

fn default_slope_tolerance() -> f64 {
    0.15
}

impl Default for ChecksConfig {
    fn default() -> Self {
        ChecksConfig {
            bounds: true,
            slopes: true,
            slope_tolerance: default_slope_tolerance(),
            exactness: true,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelConfig,
    pub grid: GridConfig,
    pub observable: ObservableConfig,
    pub sweep: SweepConfig,
    #[serde(default)]
    pub strip: StripConfig,
    #[serde(default)]
    pub quadrature: QuadratureConfig,
    pub calibration: Option<CalibrationCell>,
    #[serde(default)]
    pub checks: ChecksConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&fs::read_to_string(path)?)
    }

    fn momentum_extent(&self) -> f64 {
        self.grid
            .momentum_extent
            .unwrap_or_else(|| self.observable.momentum_extent())
    }

    /// Points per axis used at `hbar`.
    pub fn points_for(&self, hbar: f64) -> Result<usize> {
        let l = self.grid.extent;
        let need = self.momentum_extent();
        if let Some(m) = self.grid.points {
            let min_hbar = admissible_hbar(l, m, need);
            if hbar < min_hbar {
                return Err(Error::HbarTooSmall { hbar, min_hbar });
            }
            return Ok(m);
        }
        let mut m = 64;
        while admissible_hbar(l, m, need) > hbar {
            m *= 2;
            if m > self.grid.max_points {
                return Err(Error::Config(format!(
                    "hbar {hbar} needs more than {} points on a box of half-width {l}",
                    self.grid.max_points
                )));
            }
        }
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        self.model.build()?;
        if !(self.grid.extent > 0.0 && self.grid.extent.is_finite()) {
            return Err(Error::Config(format!(
                "grid extent must be positive, got {}",
                self.grid.extent
            )));
        }
        if self.observable.width.iter().any(|w| !(*w > 0.0)) {
            return Err(Error::Config("observable widths must be positive".into()));
        }
        for &h in &self.sweep.hbar {
            if !(h > 0.0 && h < 1.0) {
                return Err(Error::Config(format!("hbar must lie in (0, 1), got {h}")));
            }
            self.points_for(h)?;
        }
        if self.sweep.times.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::Config("times must be strictly increasing".into()));
        }
        if self
            .sweep
            .times
            .iter()
            .any(|t| !(*t >= 0.0 && t.is_finite()))
        {
            return Err(Error::Config("times must be nonnegative".into()));
        }
        if self.sweep.orders.iter().any(|&n| n > 3) {
            return Err(Error::Config("orders above 3 are not supported".into()));
        }
        if !(self.strip.sigma > 0.0 && self.strip.rho > 0.0) {
            return Err(Error::Config("strip parameters must be positive".into()));
        }
        if let Some(c) = self.calibration {
            let member = self.sweep.hbar.contains(&c.hbar)
                && self.sweep.times.contains(&c.t)
                && self.sweep.orders.contains(&c.order);
            if !member {
                return Err(Error::Config(format!(
                    "calibration cell {c:?} is not part of the sweep"
                )));
            }
            if c.order == 0 {
                return Err(Error::Config("calibration needs an order >= 1".into()));
            }
        }
        Ok(())
    }

    fn max_order(&self) -> usize {
        self.sweep.orders.iter().copied().max().unwrap_or(0)
    }
}

/// One measured cell.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ErrorRecord {
    pub model: String,
    pub hbar: f64,
    #[serde(rename = "N")]
    pub order: usize,
    pub t: f64,
    pub error: f64,
    /// `remainder_bound * hbar^{2(N+1)}`; absent at `N = 0` or without constants.
    pub bound: Option<f64>,
    /// `"true"`, `"false"`, `"calibration"` or `"na"`.
    pub within_bound: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CellFailure {
    pub model: String,
    pub hbar: f64,
    #[serde(rename = "N")]
    pub order: usize,
    pub t: f64,
    pub reason: String,
}

/// Extra per-cell quantities not part of the CSV contract.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CellDiagnostics {
    pub points: usize,
    pub observable_norm: f64,
    pub quadrature_error: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct SweepResult {
    pub records: Vec<ErrorRecord>,
    pub diagnostics: Vec<CellDiagnostics>,
    pub failures: Vec<CellFailure>,
    pub context: BoundContext,
    pub calibration: Option<Calibration>,
}

/// `alpha` and the strip norm of the observable, with `A = E = F = 1`.
pub fn bound_context(cfg: &ExperimentConfig) -> Result<BoundContext> {
    let model = cfg.model.build()?;
    let alpha = estimate_alpha(&model, cfg.strip.sigma, AlphaSampling::default())?.value;
    let b_bar = strip_norm(
        &cfg.observable.analytic(),
        cfg.strip.sigma,
        cfg.strip.rho,
        StripSampling::default(),
    )?
    .value;
    BoundContext::new(
        1,
        alpha,
        cfg.strip.sigma,
        cfg.strip.rho,
        b_bar,
        cfg.max_order().max(1),
    )
}

/// Strip norms of `b` and of `Delta b` on the once-shrunk strip, at `hbar`.
pub fn defect_measurement(
    cfg: &ExperimentConfig,
    ctx: &BoundContext,
    hbar: f64,
) -> Result<DefectMeasurement> {
    let model = cfg.model.build()?;
    let l = cfg
        .grid
        .extent
        .max(cfg.momentum_extent())
        .max(model.potential.decay_length());
    let grid = PhaseGrid::square(l, 128)?;
    let b = cfg.observable.analytic().to_symbol(grid, hbar)?;
    let h = HamiltonianSymbol::from_model(&model, grid, hbar)?;
    let db = delta_h(&b, &h)?;
    let output = interpolant_strip_norm(&db, ctx.sigma - ctx.delta, ctx.rho - ctx.d)?;
    Ok(DefectMeasurement {
        input: ctx.b_bar,
        output,
        delta: ctx.delta,
        d: ctx.d,
    })
}

struct Measured {
    order: usize,
    t: f64,
    hbar: f64,
    outcome: std::result::Result<(f64, CellDiagnostics), String>,
}

fn measure_hbar(
    cfg: &ExperimentConfig,
    model: &HamiltonianModel,
    hbar: f64,
    out: &mut Vec<Measured>,
) {
    let fail_all = |out: &mut Vec<Measured>, reason: String| {
        for &t in &cfg.sweep.times {
            for &order in &cfg.sweep.orders {
                out.push(Measured {
                    order,
                    t,
                    hbar,
                    outcome: Err(reason.clone()),
                });
            }
        }
    };
    let setup = (|| -> Result<_> {
        let m = cfg.points_for(hbar)?;
        let qg = PositionGrid::new(cfg.grid.extent, m, hbar)?;
        let b = cfg.observable.analytic().to_symbol(qg.phase_grid(), hbar)?;
        let bop = weyl_quantize(&b, &qg)?;
        let bnorm = operator_norm(&bop)?;
        let prop = Propagator::new(&hamiltonian_operator(model, &qg)?)?;
        let prepared = prop.prepare(&bop)?;
        let engine = ExpansionEngine::new(&b, model)?;
        Ok((m, bnorm, prop, prepared, engine))
    })();
    let (m, bnorm, prop, prepared, mut engine) = match setup {
        Ok(s) => s,
        Err(e) => return fail_all(out, e.to_string()),
    };
    let ctl = cfg.quadrature.control();
    let top = cfg.max_order();
    for &t in &cfg.sweep.times {
        let bt = prop.evolve(&prepared, t);
        let terms = engine.terms(top, t, ctl);
        for &order in &cfg.sweep.orders {
            let outcome = match &terms {
                Err(e) => Err(e.to_string()),
                Ok(terms) => (|| -> Result<_> {
                    let a =
                        approximant_from_terms(terms, order, SummationConvention::ThroughOrder)?;
                    let err = operator_norm(&bt.sub(&a.operator)?)?;
                    let q = terms[1..=order]
                        .iter()
                        .filter(|x| x.report.estimate_nodes.is_some())
                        .map(|x| x.report.estimated_error)
                        .reduce(f64::max);
                    Ok((
                        err,
                        CellDiagnostics {
                            points: m,
                            observable_norm: bnorm,
                            quadrature_error: q,
                        },
                    ))
                })()
                .map_err(|e| e.to_string()),
            };
            out.push(Measured {
                order,
                t,
                hbar,
                outcome,
            });
        }
    }
}

/// Run every cell of the sweep. Cells are ordered by `hbar`, then `t`, then `N`.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<SweepResult> {
    cfg.validate()?;
    let model = cfg.model.build()?;
    let mut measured = Vec::new();
    for &hbar in &cfg.sweep.hbar {
        measure_hbar(cfg, &model, hbar, &mut measured);
    }
    let base = bound_context(cfg)?;
    let calibration = match cfg.calibration {
        None => None,
        Some(cell) => {
            let hit = measured.iter().find(|m| cell.matches(m.order, m.t, m.hbar));
            match hit.map(|m| &m.outcome) {
                Some(Ok((err, _))) => {
                    let rm = RemainderMeasurement {
                        order: cell.order,
                        t: cell.t,
                        hbar: cell.hbar,
                        error: *err,
                    };
                    let defect = defect_measurement(cfg, &base, cell.hbar)?;
                    Some(calibrate(&base, &[rm], &[defect])?)
                }
                _ => None,
            }
        }
    };
    let ctx = calibration.as_ref().map_or(base, |c| c.context);
    let mut records = Vec::new();
    let mut diagnostics = Vec::new();
    let mut failures = Vec::new();
    for m in measured {
        match m.outcome {
            Err(reason) => failures.push(CellFailure {
                model: model.name.clone(),
                hbar: m.hbar,
                order: m.order,
                t: m.t,
                reason,
            }),
            Ok((error, diag)) => {
                let (bound, within) = if m.order == 0 || calibration.is_none() {
                    (None, "na".to_string())
                } else {
                    let b = remainder_bound(&ctx, m.order, m.t)?.value()
                        * m.hbar.powi(2 * (m.order as i32 + 1));
                    let flag = if cfg
                        .calibration
                        .is_some_and(|c| c.matches(m.order, m.t, m.hbar))
                    {
                        "calibration".to_string()
                    } else {
                        (error <= b).to_string()
                    };
                    (Some(b), flag)
                };
                records.push(ErrorRecord {
                    model: model.name.clone(),
                    hbar: m.hbar,
                    order: m.order,
                    t: m.t,
                    error,
                    bound,
                    within_bound: within,
                });
                diagnostics.push(diag);
            }
        }
    }
    Ok(SweepResult {
        records,
        diagnostics,
        failures,
        context: ctx,
        calibration,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Axis {
    Hbar,
    Time,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SlopeReport {
    pub model: String,
    pub order: usize,
    /// The value held fixed: `t` on the `hbar` axis, `hbar` on the time axis.
    pub fixed: f64,
    pub points: usize,
    pub slope: f64,
    pub residual: f64,
    /// Fitted rate of the bound over the same times (time axis only).
    pub bound_rate: Option<f64>,
}

/// Least-squares slopes of `ln error` against `ln hbar`, or against `t`.
///
/// Groups with fewer than three cells are skipped.
pub fn fit_scaling(
    records: &[ErrorRecord],
    axis: Axis,
    ctx: Option<&BoundContext>,
) -> Result<Vec<SlopeReport>> {
    let mut groups: BTreeMap<(String, usize, u64), Vec<(f64, f64)>> = BTreeMap::new();
    for r in records {
        let (fixed, x) = match axis {
            Axis::Hbar => (r.t, r.hbar),
            Axis::Time => (r.hbar, r.t),
        };
        groups
            .entry((r.model.clone(), r.order, fixed.to_bits()))
            .or_default()
            .push((x, r.error));
    }
    let mut out = Vec::new();
    for ((model, order, fixed), mut pts) in groups {
        if pts.len() < 3 {
            continue;
        }
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        let xs: Vec<f64> = pts.iter().map(|p| p.0).collect();
        let ys: Vec<f64> = pts.iter().map(|p| p.1).collect();
        let (fit, bound_rate) = match axis {
            Axis::Hbar => (log_log_fit(&xs, &ys)?, None),
            Axis::Time => {
                if ys.iter().any(|&y| !(y > 0.0)) {
                    return Err(Error::DegenerateFit(
                        "time fit needs positive errors".into(),
                    ));
                }
                let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
                let rate = match ctx {
                    Some(c) if order >= 1 && xs[0] > 0.0 => {
                        Some(remainder_bound_rate(c, order, &xs)?)
                    }
                    _ => None,
                };
                (linear_fit(&xs, &ly)?, rate)
            }
        };
        out.push(SlopeReport {
            model,
            order,
            fixed: f64::from_bits(fixed),
            points: pts.len(),
            slope: fit.slope,
            residual: fit.residual,
            bound_rate,
        });
    }
    Ok(out)
}

/// One row of `bounds.csv`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundRow {
    #[serde(rename = "N")]
    pub order: usize,
    pub t: f64,
    pub hbar: f64,
    pub alpha: f64,
    /// `e_1..e_N`, `;`-separated.
    pub e_k: String,
    /// `Gamma_1..Gamma_N` (recursive form), `;`-separated.
    #[serde(rename = "Gamma_k")]
    pub gamma_k: String,
    pub remainder_bound: f64,
    #[serde(rename = "TN")]
    pub ehrenfest: Option<f64>,
    #[serde(rename = "Nk")]
    pub log_order: Option<usize>,
}

fn join(values: impl Iterator<Item = f64>) -> String {
    values.map(|v| v.to_string()).collect::<Vec<_>>().join(";")
}

/// Bound rows for every `(N >= 1, t, hbar)` of the sweep.
pub fn bound_table(cfg: &ExperimentConfig, ctx: &BoundContext) -> Result<Vec<BoundRow>> {
    let mut rows = Vec::new();
    for &hbar in &cfg.sweep.hbar {
        for &t in &cfg.sweep.times {
            for &order in cfg.sweep.orders.iter().filter(|&&n| n >= 1) {
                let s = strip_schedule(ctx, order, t)?;
                rows.push(BoundRow {
                    order,
                    t,
                    hbar,
                    alpha: ctx.alpha,
                    e_k: join(s.e.iter().copied()),
                    gamma_k: join(s.gamma.iter().map(|g| g.value())),
                    remainder_bound: remainder_bound(ctx, order, t)?.value(),
                    ehrenfest: ehrenfest_time(hbar, order, ctx.alpha)
                        .ok()
                        .map(|e| e.value()),
                    log_order: iterated_log_order(hbar, 1).ok().map(|r| r.order),
                });
            }
        }
    }
    Ok(rows)
}

/// Outcome of one enabled check.
#[derive(Clone, Debug, PartialEq)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

/// Enabled checks on a finished sweep.
pub fn evaluate_checks(cfg: &ExperimentConfig, sweep: &SweepResult) -> Result<Vec<CheckOutcome>> {
    let model = cfg.model.build()?;
    let mut out = Vec::new();
    out.push(CheckOutcome {
        name: "cells".into(),
        passed: sweep.failures.is_empty(),
        detail: format!(
            "{} measured, {} failed",
            sweep.records.len(),
            sweep.failures.len()
        ),
    });
    if cfg.checks.exactness && model.is_quadratic() {
        let worst = sweep
            .records
            .iter()
            .zip(&sweep.diagnostics)
            .map(|(r, d)| r.error / d.observable_norm.max(f64::MIN_POSITIVE))
            .fold(0.0, f64::max);
        out.push(CheckOutcome {
            name: "quadratic-exactness".into(),
            passed: worst <= 1e-6,
            detail: format!("largest relative error {worst:.3e} (limit 1e-6)"),
        });
    }
    if cfg.checks.slopes && !model.is_quadratic() {
        for s in fit_scaling(&sweep.records, Axis::Hbar, None)? {
            let want = 2.0 * (s.order as f64 + 1.0);
            let ok = (s.slope - want).abs() <= cfg.checks.slope_tolerance * want;
            out.push(CheckOutcome {
                name: format!("hbar-order N={} t={}", s.order, s.fixed),
                passed: ok,
                detail: format!(
                    "slope {:.3}, expected {want} within {}%",
                    s.slope,
                    cfg.checks.slope_tolerance * 100.0
                ),
            });
        }
    }
    if cfg.checks.bounds && sweep.calibration.is_some() {
        let held: Vec<&ErrorRecord> = sweep
            .records
            .iter()
            .filter(|r| r.within_bound == "true" || r.within_bound == "false")
            .collect();
        let bad = held.iter().filter(|r| r.within_bound == "false").count();
        out.push(CheckOutcome {
            name: "bound-dominance".into(),
            passed: bad == 0,
            detail: format!(
                "{} held-out cells, {bad} above the calibrated bound",
                held.len()
            ),
        });
    }
    Ok(out)
}

fn csv_error(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

fn write_csv<T: Serialize>(path: &Path, header: &[&str], rows: &[T]) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(csv_error)?;
    w.write_record(header).map_err(csv_error)?;
    for r in rows {
        w.serialize(r).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

pub const ERRORS_HEADER: [&str; 7] = ["model", "hbar", "N", "t", "error", "bound", "within_bound"];
pub const BOUNDS_HEADER: [&str; 9] = [
    "N",
    "t",
    "hbar",
    "alpha",
    "e_k",
    "Gamma_k",
    "remainder_bound",
    "TN",
    "Nk",
];

/// Write `errors.csv`, `bounds.csv`, `failures.csv` and `summary.txt`.
pub fn report(
    dir: &Path,
    sweep: &SweepResult,
    bounds: &[BoundRow],
    checks: &[CheckOutcome],
) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_csv(&dir.join("errors.csv"), &ERRORS_HEADER, &sweep.records)?;
    write_csv(&dir.join("bounds.csv"), &BOUNDS_HEADER, bounds)?;
    write_csv(
        &dir.join("failures.csv"),
        &["model", "hbar", "N", "t", "reason"],
        &sweep.failures,
    )?;
    fs::write(dir.join("summary.txt"), summary_text(sweep, checks))?;
    Ok(())
}

pub fn summary_text(sweep: &SweepResult, checks: &[CheckOutcome]) -> String {
    let mut s = String::new();
    let c = &sweep.context;
    let status = match &sweep.calibration {
        Some(cal) => format!("{:?}", cal.status).to_lowercase(),
        None => "uncalibrated".into(),
    };
    let _ = writeln!(
        s,
        "constants ({status}): alpha={} b_bar={} A={} E={} F={}",
        c.alpha, c.b_bar, c.a, c.e, c.f
    );
    for ch in checks {
        let _ = writeln!(
            s,
            "{} {}: {}",
            if ch.passed { "PASS" } else { "FAIL" },
            ch.name,
            ch.detail
        );
    }
    let _ = writeln!(s, "cells:");
    for r in &sweep.records {
        let _ = writeln!(
            s,
            "  hbar={} N={} t={} error={:e} within_bound={}",
            r.hbar, r.order, r.t, r.error, r.within_bound
        );
    }
    for f in &sweep.failures {
        let _ = writeln!(
            s,
            "  hbar={} N={} t={} failed: {}",
            f.hbar, f.order, f.t, f.reason
        );
    }
    s
}

/// Fast internal consistency checks on small grids.
pub fn selftest() -> Result<Vec<CheckOutcome>> {
    use crate::expansion::simplex_volume;
    use crate::moyal::star_product;
    use crate::phase_space::Gaussian;

    let mut out = Vec::new();

    let (hbar, l, m) = (0.2, 6.0, 128);
    let qg = PositionGrid::new(l, m, hbar)?;
    let pg = qg.phase_grid();
    let pairs = [
        (
            Gaussian::new([0.3, -0.2], [0.8, 0.7]),
            Gaussian::new([-0.4, 0.5], [0.6, 0.9]),
        ),
        (
            Gaussian::new([0.0, 0.0], [1.0, 1.0]),
            Gaussian::new([1.0, -0.5], [0.7, 0.7]),
        ),
    ];
    let mut worst: f64 = 0.0;
    for (f, g) in pairs {
        let fs = AnalyticSymbol::Gaussian(f).to_symbol(pg, hbar)?;
        let gs = AnalyticSymbol::Gaussian(g).to_symbol(pg, hbar)?;
        let lhs = weyl_quantize(&star_product(&fs, &gs)?, &qg)?;
        let rhs = weyl_quantize(&fs, &qg)?.compose(&weyl_quantize(&gs, &qg)?)?;
        worst = worst.max(operator_norm(&lhs.sub(&rhs)?)?);
    }
    out.push(CheckOutcome {
        name: "convention-lock".into(),
        passed: worst <= 1e-7,
        detail: format!("largest |Op(f#g) - Op(f)Op(g)| = {worst:.2e}"),
    });

    let mut rel: f64 = 0.0;
    for n in 1..=5 {
        for t in [0.5f64, 2.0] {
            let exact = t.powi(n as i32) / (1..=n).product::<usize>() as f64;
            rel = rel.max((simplex_volume(n, t)? / exact - 1.0).abs());
        }
    }
    out.push(CheckOutcome {
        name: "simplex-volume".into(),
        passed: rel <= 1e-10,
        detail: format!("largest relative deviation {rel:.2e}"),
    });

    let model = HamiltonianModel::harmonic();
    let (hbar, m) = (0.5, 64);
    let qg = PositionGrid::new(6.0, m, hbar)?;
    let b = AnalyticSymbol::gaussian([0.5, 0.0], [0.6, 0.6]).to_symbol(qg.phase_grid(), hbar)?;
    let bop = weyl_quantize(&b, &qg)?;
    let prop = Propagator::new(&hamiltonian_operator(&model, &qg)?)?;
    let bt = prop.evolve(&prop.prepare(&bop)?, 1.0);
    let mut engine = ExpansionEngine::new(&b, &model)?;
    let lead = weyl_quantize(&engine.leading_term(1.0)?, &qg)?;
    let err = operator_norm(&bt.sub(&lead)?)? / operator_norm(&bop)?;
    out.push(CheckOutcome {
        name: "harmonic-exactness".into(),
        passed: err <= 1e-6,
        detail: format!("relative error {err:.2e}"),
    });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SMALL: &str = r#"
        [model]
        name = "harmonic"
        [grid]
        extent = 6.0
        points = 64
        [observable]
        center = [0.5, 0.0]
        width = [0.6, 0.6]
        [sweep]
        hbar = [0.5]
        orders = [0, 1]
        times = [0.5]
    "#;

    #[test]
    fn config_parses_and_validates() {
        let cfg = ExperimentConfig::from_toml(SMALL).unwrap();
        assert_eq!(cfg.quadrature.nodes, 8);
        assert_eq!(cfg.points_for(0.5).unwrap(), 64);
        let bad = SMALL.replace("times = [0.5]", "times = [1.0, 0.5]");
        assert!(matches!(
            ExperimentConfig::from_toml(&bad),
            Err(Error::Config(_))
        ));
        let bad = SMALL.replace("hbar = [0.5]", "hbar = [0.01]");
        assert!(matches!(
            ExperimentConfig::from_toml(&bad),
            Err(Error::HbarTooSmall { .. })
        ));
        let bad = SMALL.replace("[sweep]", "[sweep]\nextra = 1");
        assert!(ExperimentConfig::from_toml(&bad).is_err());
    }

    #[test]
    fn automatic_points_cover_momentum() {
        let text = SMALL.replace("points = 64\n", "");
        let cfg = ExperimentConfig::from_toml(&text).unwrap();
        let m = cfg.points_for(0.1).unwrap();
        assert!(admissible_hbar(6.0, m, cfg.momentum_extent()) <= 0.1);
        assert!(admissible_hbar(6.0, m / 2, cfg.momentum_extent()) > 0.1);
    }

    #[test]
    fn calibration_cell_must_be_in_sweep() {
        let text = format!("{SMALL}\n[calibration]\norder = 1\nt = 0.7\nhbar = 0.5\n");
        assert!(matches!(
            ExperimentConfig::from_toml(&text),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn synthetic_slopes() {
        let mk = |hbar: f64, t: f64, e: f64| ErrorRecord {
            model: "m".into(),
            hbar,
            order: 0,
            t,
            error: e,
            bound: None,
            within_bound: "na".into(),
        };
        let recs: Vec<_> = [0.2, 0.1, 0.05]
            .iter()
            .map(|&h| mk(h, 1.0, h * h))
            .collect();
        let s = fit_scaling(&recs, Axis::Hbar, None).unwrap();
        assert_eq!(s.len(), 1);
        assert!((s[0].slope - 2.0).abs() < 1e-9);
        let recs: Vec<_> = [0.5, 1.0, 1.5, 2.0]
            .iter()
            .map(|&t| mk(0.1, t, (3.0 * t).exp()))
            .collect();
        let s = fit_scaling(&recs, Axis::Time, None).unwrap();
        assert!((s[0].slope - 3.0).abs() < 1e-9);
        assert!(fit_scaling(&recs[..2], Axis::Time, None)
            .unwrap()
            .is_empty());
    }
}
