//! Composition `b o phi^t` of sampled or closed-form symbols with a flow map.
//!
//! Decaying symbols are spectrally upsampled and then interpolated with a
//! separable Lagrange stencil, treating the grid as periodic; images that
//! leave the box take the value zero. Non-decaying symbols are interpolated on
//! the original nodes with one-sided stencils inside a padding margin.

use num_complex::Complex64 as C64;
use rayon::prelude::*;

use super::flow::FlowMap;
use crate::error::{Error, Result};
use crate::phase_space::{AnalyticSymbol, PhaseGrid, Symbol, X, XI};
use crate::spectral::upsample;

/// Boundary-to-peak ratio up to which a symbol is interpolated as periodic.
/// Symbols built by repeated brackets carry derivative-amplified round-off at
/// the box edge well above [`crate::phase_space::DECAY_RATIO`] while still
/// decaying in substance.
pub const PERIODIC_RATIO: f64 = 1e-5;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InterpolationConfig {
    /// Spectral upsampling factor applied to decaying symbols.
    pub upsample: usize,
    /// Lagrange stencil width (even).
    pub stencil: usize,
    /// Padding margin as a fraction of the box width.
    pub padding: f64,
    /// Force periodic (`Some(true)`) or one-sided (`Some(false)`) treatment;
    /// `None` decides from the boundary ratio.
    pub periodic: Option<bool>,
}

impl Default for InterpolationConfig {
    fn default() -> Self {
        InterpolationConfig {
            upsample: 2,
            stencil: 8,
            padding: 0.1,
            periodic: None,
        }
    }
}

/// Reusable interpolant of one symbol.
pub struct Interpolator {
    grid: PhaseGrid,
    hbar: f64,
    data: Vec<C64>,
    m: usize,
    h: [f64; 2],
    periodic: bool,
    stencil: usize,
    padding: f64,
    bary: Vec<f64>,
}

fn barycentric_weights(p: usize) -> Vec<f64> {
    // w_j = (-1)^j C(p-1, j) for equispaced nodes.
    let mut w = vec![1.0; p];
    for j in 1..p {
        w[j] = -w[j - 1] * (p - j) as f64 / j as f64;
    }
    w
}

impl Interpolator {
    pub fn new(b: &Symbol, cfg: InterpolationConfig) -> Result<Self> {
        if cfg.stencil < 2 || cfg.stencil % 2 != 0 || cfg.upsample == 0 {
            return Err(Error::InvalidParameter(
                "stencil must be even and >= 2, upsample >= 1".into(),
            ));
        }
        let grid = *b.grid();
        let periodic = cfg
            .periodic
            .unwrap_or_else(|| b.boundary_ratio() <= PERIODIC_RATIO);
        let (data, m) = if periodic && cfg.upsample > 1 {
            (
                upsample(b.values(), grid.points(), cfg.upsample),
                grid.points() * cfg.upsample,
            )
        } else {
            (b.values().to_vec(), grid.points())
        };
        let h = [
            2.0 * grid.extent(X) / m as f64,
            2.0 * grid.extent(XI) / m as f64,
        ];
        Ok(Interpolator {
            grid,
            hbar: b.hbar(),
            data,
            m,
            h,
            periodic,
            stencil: cfg.stencil,
            padding: cfg.padding,
            bary: barycentric_weights(cfg.stencil),
        })
    }

    /// Stencil start index and weights along one axis; `None` outside the
    /// admissible region.
    fn axis(&self, axis: usize, x: f64, out: &mut [f64]) -> Option<isize> {
        let l = self.grid.extent(axis);
        let p = self.stencil;
        let u = (x + l) / self.h[axis];
        let m = self.m as f64;
        if self.periodic {
            if !(x >= -l && x < l) {
                return None;
            }
        } else {
            let pad = self.padding * m;
            if !(u >= -pad && u <= m - 1.0 + pad) {
                return None;
            }
        }
        let fl = u.floor();
        let mut base = fl as isize - (p as isize / 2 - 1);
        if !self.periodic {
            base = base.clamp(0, self.m as isize - p as isize);
        }
        let rel = u - base as f64;
        // Exact hit on a node.
        let near = rel.round();
        if (rel - near).abs() < 1e-14 && near >= 0.0 && (near as usize) < p {
            out.iter_mut().for_each(|w| *w = 0.0);
            out[near as usize] = 1.0;
            return Some(base);
        }
        let mut sum = 0.0;
        for j in 0..p {
            let w = self.bary[j] / (rel - j as f64);
            out[j] = w;
            sum += w;
        }
        out.iter_mut().for_each(|w| *w /= sum);
        Some(base)
    }

    /// Interpolated value; `Ok(0)` outside the box for decaying symbols.
    pub fn eval(&self, x: f64, xi: f64) -> std::result::Result<C64, ()> {
        let p = self.stencil;
        let mut wx = [0.0f64; 32];
        let mut wp = [0.0f64; 32];
        let bx = self.axis(X, x, &mut wx[..p]);
        let bp = self.axis(XI, xi, &mut wp[..p]);
        match (bx, bp) {
            (Some(bx), Some(bp)) => {
                let m = self.m as isize;
                let mut acc = C64::new(0.0, 0.0);
                for i in 0..p {
                    if wx[i] == 0.0 {
                        continue;
                    }
                    let ri = (bx + i as isize).rem_euclid(m) as usize * self.m;
                    let mut row = C64::new(0.0, 0.0);
                    for j in 0..p {
                        let cj = (bp + j as isize).rem_euclid(m) as usize;
                        row += self.data[ri + cj] * wp[j];
                    }
                    acc += row * wx[i];
                }
                Ok(acc)
            }
            _ if self.periodic => Ok(C64::new(0.0, 0.0)),
            _ => Err(()),
        }
    }

    /// `b o phi` at every node of the flow's grid.
    pub fn pull_back(&self, flow: &FlowMap) -> Result<Symbol> {
        if !flow.grid().same_as(&self.grid) {
            return Err(Error::GridMismatch("flow and symbol grids differ".into()));
        }
        let values: Vec<C64> = flow
            .images()
            .par_iter()
            .enumerate()
            .map(|(node, z)| {
                self.eval(z[0], z[1]).map_err(|_| Error::Interpolation {
                    node,
                    x: z[0],
                    xi: z[1],
                })
            })
            .collect::<Result<_>>()?;
        Symbol::new(self.grid, self.hbar, values)
    }
}

/// `b o phi^t` with the default interpolation settings.
pub fn pullback(b: &Symbol, flow: &FlowMap) -> Result<Symbol> {
    pullback_with(b, flow, InterpolationConfig::default())
}

pub fn pullback_with(b: &Symbol, flow: &FlowMap, cfg: InterpolationConfig) -> Result<Symbol> {
    if !flow.grid().same_as(b.grid()) {
        return Err(Error::GridMismatch("flow and symbol grids differ".into()));
    }
    if flow.is_identity() {
        return Ok(b.clone());
    }
    if b.is_zero() {
        return Ok(b.clone());
    }
    let out = Interpolator::new(b, cfg)?.pull_back(flow)?;
    if b.is_real_observable() {
        Ok(out.real_part())
    } else {
        Ok(out)
    }
}

/// Exact composition of a closed-form symbol with a flow map.
pub fn pullback_analytic(b: &AnalyticSymbol, flow: &FlowMap, hbar: f64) -> Result<Symbol> {
    let values = flow
        .images()
        .iter()
        .map(|z| C64::new(b.eval_real(z[0], z[1]), 0.0))
        .collect();
    Symbol::new(*flow.grid(), hbar, values)?.into_real_observable()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classical::{integrate_flow, HamiltonianModel};

    #[test]
    fn barycentric_weights_for_four_points() {
        assert_eq!(barycentric_weights(4), vec![1.0, -3.0, 3.0, -1.0]);
    }

    #[test]
    fn linear_observable_under_rotation() {
        // Non-decaying symbol: one-sided stencils reproduce polynomials exactly.
        let grid = PhaseGrid::square(4.0, 32).unwrap();
        let b = Symbol::from_real_fn(grid, 0.1, |x, _| x).unwrap();
        let t = 0.4;
        let flow = integrate_flow(&HamiltonianModel::harmonic(), &grid, t, 1e-12).unwrap();
        let cfg = InterpolationConfig {
            padding: 0.5,
            ..Default::default()
        };
        let got = pullback_with(&b, &flow, cfg).unwrap();
        let want = Symbol::from_real_fn(grid, 0.1, |x, p| x * t.cos() + p * t.sin()).unwrap();
        assert!(got.distance(&want).unwrap() < 1e-9);
    }

    #[test]
    fn escaping_images_without_decay_fail() {
        let grid = PhaseGrid::square(2.0, 16).unwrap();
        let b = Symbol::from_real_fn(grid, 0.1, |x, _| x).unwrap();
        let flow = integrate_flow(&HamiltonianModel::free(), &grid, 2.0, 1e-10).unwrap();
        assert!(matches!(
            pullback(&b, &flow),
            Err(Error::Interpolation { .. })
        ));
    }

    #[test]
    fn identity_flow_returns_input() {
        let grid = PhaseGrid::square(4.0, 16).unwrap();
        let b = Symbol::from_real_fn(grid, 0.1, |x, p| (-(x * x) - p * p).exp()).unwrap();
        let flow = FlowMap::identity(grid);
        let got = pullback(&b, &flow).unwrap();
        assert_eq!(got.values(), b.values());
    }
}
