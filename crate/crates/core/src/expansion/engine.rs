use std::collections::HashMap;
use std::sync::Arc;

use crate::classical::{
    integrate_flows, pullback_with, FlowMap, FlowOptions, HamiltonianModel, InterpolationConfig,
};
use crate::error::{Error, Result};
use crate::moyal::{delta_h, HamiltonianSymbol};
use crate::phase_space::Symbol;
use crate::quantum::{weyl_quantize, PositionGrid, QuantumOperator};

use super::quadrature::{gauss_legendre, next_rung};

/// Durations closer than this share a flow map.
pub const TIME_QUANTUM: f64 = 1e-12;

fn time_key(t: f64) -> i64 {
    (t / TIME_QUANTUM).round() as i64
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadratureControl {
    /// Gauss–Legendre nodes per simplex axis.
    pub nodes: usize,
    /// Also evaluate the next rung of the node ladder and report the difference.
    pub estimate_error: bool,
    /// Relative tolerance the estimate is compared against.
    pub tolerance: f64,
}

impl Default for QuadratureControl {
    fn default() -> Self {
        QuadratureControl {
            nodes: 8,
            estimate_error: true,
            tolerance: 1e-6,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct QuadratureReport {
    pub nodes: usize,
    pub estimate_nodes: Option<usize>,
    /// Max-norm difference to the next rung; zero when not estimated.
    pub estimated_error: f64,
    pub converged: bool,
    pub flow_batches: usize,
    pub remainders: usize,
}

/// `b_j^t` with its quadrature report.
#[derive(Clone, Debug)]
pub struct ExpansionTerm {
    pub j: usize,
    pub t: f64,
    pub symbol: Symbol,
    pub report: QuadratureReport,
}

/// `r_k` at segment durations `times = (s_1, ..., s_k)`, where
/// `r_1 = Delta(b o phi^{s_1})` and `r_{k+1} = Delta(r_k o phi^{s_{k+1}})`.
#[derive(Clone, Debug)]
pub struct RemainderSymbol {
    pub k: usize,
    pub times: Vec<f64>,
    pub symbol: Symbol,
}

/// Which partial sum of the expansion an approximant uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SummationConvention {
    /// `sum_{j=0}^{N}`.
    ThroughOrder,
    /// `sum_{j=0}^{N-1}`.
    BelowOrder,
}

impl SummationConvention {
    pub fn tag(&self) -> &'static str {
        match self {
            SummationConvention::ThroughOrder => "sum_0^N",
            SummationConvention::BelowOrder => "sum_0^(N-1)",
        }
    }

    /// Highest term index included for order `n`, or `None` for an empty sum.
    pub fn last_term(&self, n: usize) -> Option<usize> {
        match self {
            SummationConvention::ThroughOrder => Some(n),
            SummationConvention::BelowOrder => n.checked_sub(1),
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct EngineOptions {
    pub flow: FlowOptions,
    pub interpolation: InterpolationConfig,
    pub caching: bool,
    /// Cache budget in bytes; entries beyond it are recomputed on demand.
    pub cache_bytes: usize,
}

impl Default for EngineOptions {
    fn default() -> Self {
        EngineOptions {
            flow: FlowOptions {
                jacobian: false,
                ..FlowOptions::default()
            },
            interpolation: InterpolationConfig::default(),
            caching: true,
            cache_bytes: 1 << 30,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct EngineStats {
    pub flow_batches: usize,
    pub remainders: usize,
    pub cache_hits: usize,
}

type Batch = Arc<HashMap<i64, FlowMap>>;

/// Evaluates expansion terms of one symbol under one Hamiltonian.
///
/// Flows at a node of the quadrature tree are integrated as one batch
/// holding every duration the node needs, so each flow map is always produced
/// by the same batch; with or without the cache the results agree bit for bit.
pub struct ExpansionEngine {
    model: HamiltonianModel,
    ham: HamiltonianSymbol,
    b: Symbol,
    opts: EngineOptions,
    batches: HashMap<(usize, i64), Batch>,
    remainders: HashMap<(usize, i64, Vec<i64>), Arc<Symbol>>,
    cached_bytes: usize,
    stats: EngineStats,
}

impl ExpansionEngine {
    pub fn new(b: &Symbol, model: &HamiltonianModel) -> Result<Self> {
        Self::with_options(b, model, EngineOptions::default())
    }

    pub fn with_options(b: &Symbol, model: &HamiltonianModel, opts: EngineOptions) -> Result<Self> {
        let ham = HamiltonianSymbol::from_model(model, *b.grid(), b.hbar())?;
        Ok(ExpansionEngine {
            model: model.clone(),
            ham,
            b: b.clone(),
            opts,
            batches: HashMap::new(),
            remainders: HashMap::new(),
            cached_bytes: 0,
            stats: EngineStats::default(),
        })
    }

    pub fn symbol(&self) -> &Symbol {
        &self.b
    }

    pub fn stats(&self) -> EngineStats {
        self.stats
    }

    pub fn clear_cache(&mut self) {
        self.batches.clear();
        self.remainders.clear();
        self.cached_bytes = 0;
    }

    fn symbol_bytes(&self) -> usize {
        self.b.grid().len() * 16
    }

    /// Flow maps for durations `rem u_m` and `rem (1 - u_m)`.
    fn batch(&mut self, rem: f64, nodes: usize, u: &[f64]) -> Result<Batch> {
        let key = (nodes, time_key(rem));
        if let Some(b) = self.batches.get(&key) {
            self.stats.cache_hits += 1;
            return Ok(b.clone());
        }
        let mut times: Vec<f64> = Vec::with_capacity(2 * u.len());
        let mut keys: Vec<i64> = Vec::with_capacity(2 * u.len());
        for &ui in u {
            for d in [rem * ui, rem - rem * ui] {
                let k = time_key(d);
                if !keys.contains(&k) {
                    keys.push(k);
                    times.push(d);
                }
            }
        }
        let maps = integrate_flows(&self.model, self.b.grid(), &times, self.opts.flow)?;
        self.stats.flow_batches += 1;
        let batch: Batch = Arc::new(keys.into_iter().zip(maps).collect());
        let bytes = times.len() * self.symbol_bytes();
        if self.opts.caching && self.cached_bytes + bytes <= self.opts.cache_bytes {
            self.cached_bytes += bytes;
            self.batches.insert(key, batch.clone());
        }
        Ok(batch)
    }

    fn lookup(batch: &Batch, d: f64) -> &FlowMap {
        batch
            .get(&time_key(d))
            .expect("duration integrated in its batch")
    }

    fn pull(&self, r: &Symbol, flow: &FlowMap) -> Result<Symbol> {
        pullback_with(r, flow, self.opts.interpolation)
    }

    /// Pullback of a remainder symbol. Every `r_k` inherits the decay of the
    /// non-quadratic part, whatever round-off sits on the box edge.
    fn pull_remainder(&self, r: &Symbol, flow: &FlowMap) -> Result<Symbol> {
        pullback_with(
            r,
            flow,
            InterpolationConfig {
                periodic: Some(true),
                ..self.opts.interpolation
            },
        )
    }

    /// `r_k` for the path `s`, computed from `parent` (which is `r_{k-1}`, or `b`).
    fn remainder_at(
        &mut self,
        t: f64,
        nodes: usize,
        s: &[f64],
        parent: &Symbol,
        flow: &FlowMap,
    ) -> Result<Arc<Symbol>> {
        let key = (
            nodes,
            time_key(t),
            s.iter().map(|&v| time_key(v)).collect::<Vec<_>>(),
        );
        if let Some(r) = self.remainders.get(&key) {
            self.stats.cache_hits += 1;
            return Ok(r.clone());
        }
        let pulled = if s.len() == 1 {
            self.pull(parent, flow)?
        } else {
            self.pull_remainder(parent, flow)?
        };
        let r = Arc::new(delta_h(&pulled, &self.ham)?);
        self.stats.remainders += 1;
        let bytes = self.symbol_bytes();
        if self.opts.caching && self.cached_bytes + bytes <= self.opts.cache_bytes {
            self.cached_bytes += bytes;
            self.remainders.insert(key, r.clone());
        }
        Ok(r)
    }

    #[allow(clippy::too_many_arguments)]
    fn visit(
        &mut self,
        j: usize,
        t: f64,
        rule: (&[f64], &[f64]),
        rem: f64,
        s: &mut Vec<f64>,
        weight: f64,
        parent: &Symbol,
        acc: &mut Symbol,
    ) -> Result<()> {
        if parent.is_zero() {
            return Ok(());
        }
        let (u, w) = rule;
        let batch = self.batch(rem, u.len(), u)?;
        for (ui, wi) in u.iter().zip(w) {
            let sk = rem * ui;
            let wk = weight * wi * rem;
            s.push(sk);
            let r = self.remainder_at(t, u.len(), s, parent, Self::lookup(&batch, sk))?;
            if s.len() == j {
                if !r.is_zero() {
                    let leaf = self.pull_remainder(&r, Self::lookup(&batch, rem - sk))?;
                    *acc = acc.combine(1.0, &leaf, wk)?;
                }
            } else {
                self.visit(j, t, rule, rem - sk, s, wk, &r, acc)?;
            }
            s.pop();
        }
        Ok(())
    }

    fn term_with_nodes(&mut self, j: usize, t: f64, nodes: usize) -> Result<Symbol> {
        let zero = Symbol::zeros(*self.b.grid(), self.b.hbar())?;
        if t == 0.0 || self.model.is_quadratic() {
            // Empty simplex, or a defect operator that vanishes identically.
            return Ok(zero);
        }
        let (u, w) = gauss_legendre(nodes);
        let mut acc = zero;
        let b = self.b.clone();
        self.visit(
            j,
            t,
            (&u, &w),
            t,
            &mut Vec::with_capacity(j),
            1.0,
            &b,
            &mut acc,
        )?;
        Ok(if self.b.is_real_observable() {
            acc.real_part()
        } else {
            acc
        })
    }

    /// `b o phi^t`, from a single-stop flow batch.
    pub fn leading_term(&mut self, t: f64) -> Result<Symbol> {
        let flow = integrate_flows(&self.model, self.b.grid(), &[t], self.opts.flow)?
            .pop()
            .expect("one map");
        self.stats.flow_batches += 1;
        self.pull(&self.b, &flow)
    }

    /// `b_j^t`: the leading term for `j = 0`, otherwise the nested simplex
    /// integral of `r_j o phi^{t - s_1 - ... - s_j}`.
    pub fn term(&mut self, j: usize, t: f64, ctl: QuadratureControl) -> Result<ExpansionTerm> {
        if !(t >= 0.0 && t.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "time must be nonnegative, got {t}"
            )));
        }
        if ctl.nodes == 0 {
            return Err(Error::InvalidParameter(
                "at least one quadrature node".into(),
            ));
        }
        let before = self.stats;
        if j == 0 {
            let symbol = self.leading_term(t)?;
            let report = QuadratureReport {
                nodes: 0,
                estimate_nodes: None,
                estimated_error: 0.0,
                converged: true,
                flow_batches: self.stats.flow_batches - before.flow_batches,
                remainders: 0,
            };
            return Ok(ExpansionTerm {
                j,
                t,
                symbol,
                report,
            });
        }
        let symbol = self.term_with_nodes(j, t, ctl.nodes)?;
        let (estimate_nodes, estimated_error, converged) = if ctl.estimate_error {
            let finer_nodes = next_rung(ctl.nodes);
            let finer = self.term_with_nodes(j, t, finer_nodes)?;
            let err = symbol.distance(&finer)?;
            (
                Some(finer_nodes),
                err,
                err <= ctl.tolerance * finer.max_norm().max(f64::MIN_POSITIVE),
            )
        } else {
            (None, 0.0, true)
        };
        let report = QuadratureReport {
            nodes: ctl.nodes,
            estimate_nodes,
            estimated_error,
            converged: converged || symbol.is_zero(),
            flow_batches: self.stats.flow_batches - before.flow_batches,
            remainders: self.stats.remainders - before.remainders,
        };
        Ok(ExpansionTerm {
            j,
            t,
            symbol,
            report,
        })
    }

    /// Terms `b_0^t, ..., b_n^t`.
    pub fn terms(
        &mut self,
        n: usize,
        t: f64,
        ctl: QuadratureControl,
    ) -> Result<Vec<ExpansionTerm>> {
        (0..=n).map(|j| self.term(j, t, ctl)).collect()
    }
}

/// Partial sum `sum_j (-1)^j hbar^{2j} b_j^t` over the terms selected by the
/// convention. The alternating sign is the one produced by iterating the
/// Duhamel formula with `{x, xi} = 1`.
pub fn combine_terms(
    terms: &[ExpansionTerm],
    order: usize,
    convention: SummationConvention,
) -> Result<Symbol> {
    let first = terms
        .first()
        .ok_or_else(|| Error::InvalidParameter("no expansion terms".into()))?;
    let hbar = first.symbol.hbar();
    let mut acc = Symbol::zeros(*first.symbol.grid(), hbar)?;
    if let Some(last) = convention.last_term(order) {
        if last >= terms.len() {
            return Err(Error::OrderOutOfRange {
                order,
                reason: format!("only {} terms available", terms.len()),
            });
        }
        for term in &terms[..=last] {
            let sign = if term.j % 2 == 0 { 1.0 } else { -1.0 };
            acc = acc.combine(1.0, &term.symbol, sign * hbar.powi(2 * term.j as i32))?;
        }
    }
    Ok(if terms[0].symbol.is_real_observable() {
        acc.real_part()
    } else {
        acc
    })
}

/// The order-`N` approximant as a symbol and as an operator.
#[derive(Clone, Debug)]
pub struct Approximant {
    pub order: usize,
    pub t: f64,
    pub convention: SummationConvention,
    pub symbol: Symbol,
    pub operator: QuantumOperator,
}

pub fn approximant_from_terms(
    terms: &[ExpansionTerm],
    order: usize,
    convention: SummationConvention,
) -> Result<Approximant> {
    let symbol = combine_terms(terms, order, convention)?;
    let grid = PositionGrid::from_phase_grid(symbol.grid(), symbol.hbar())?;
    let operator = weyl_quantize(&symbol, &grid)?;
    Ok(Approximant {
        order,
        t: terms[0].t,
        convention,
        symbol,
        operator,
    })
}

/// `b_j^t` with a fresh engine.
pub fn expansion_term(
    b: &Symbol,
    model: &HamiltonianModel,
    j: usize,
    t: f64,
    ctl: QuadratureControl,
) -> Result<ExpansionTerm> {
    ExpansionEngine::new(b, model)?.term(j, t, ctl)
}

/// `sum_j (-1)^j hbar^{2j} b_j^t` and its Weyl quantization.
pub fn assemble_approximant(
    b: &Symbol,
    model: &HamiltonianModel,
    order: usize,
    t: f64,
    convention: SummationConvention,
) -> Result<Approximant> {
    let last = convention.last_term(order).unwrap_or(0);
    let terms = ExpansionEngine::new(b, model)?.terms(last, t, QuadratureControl::default())?;
    approximant_from_terms(&terms, order, convention)
}

/// `r_k` along the segment durations `times`, each flow integrated on its own.
pub fn remainder_r(
    b: &Symbol,
    model: &HamiltonianModel,
    k: usize,
    times: &[f64],
) -> Result<RemainderSymbol> {
    if k == 0 || times.len() != k {
        return Err(Error::OrderOutOfRange {
            order: k,
            reason: format!("need k >= 1 and k times, got {}", times.len()),
        });
    }
    if let Some(s) = times.iter().find(|s| !(**s >= 0.0 && s.is_finite())) {
        return Err(Error::InvalidParameter(format!(
            "segment durations must be nonnegative, got {s}"
        )));
    }
    let ham = HamiltonianSymbol::from_model(model, *b.grid(), b.hbar())?;
    let opts = EngineOptions::default();
    let mut r = b.clone();
    for (level, &s) in times.iter().enumerate() {
        let pulled = if s == 0.0 || r.is_zero() {
            r.clone()
        } else {
            let flow = integrate_flows(model, b.grid(), &[s], opts.flow)?
                .pop()
                .expect("one map");
            let cfg = InterpolationConfig {
                periodic: (level > 0).then_some(true),
                ..opts.interpolation
            };
            pullback_with(&r, &flow, cfg)?
        };
        r = delta_h(&pulled, &ham)?;
    }
    Ok(RemainderSymbol {
        k,
        times: times.to_vec(),
        symbol: r,
    })
}
