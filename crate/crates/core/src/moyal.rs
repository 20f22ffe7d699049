//! Moyal star product, brackets, and the semiclassical defect operator.
//!
//! Conventions: `{f, g} = f_x g_xi - f_xi g_x` and
//! `f # g = f exp((i hbar / 2)(<-d_x ->d_xi - <-d_xi ->d_x)) g`, so that
//! `Op(f # g) = Op(f) Op(g)` for the Weyl quantization in [`crate::quantum`].
//!
//! The product is evaluated in the mixed representation `(x, eta)`, Fourier in
//! momentum only. With `F(x, k)` the momentum transform of `f`,
//! `(f # g)(x, K) = sum_k F(x - a eta_{K-k}, k) G(x + a eta_k, K - k)` with
//! `a = hbar / 2`; the position shifts are exact band-limited phase shifts.

use num_complex::Complex64 as C64;

use crate::classical::HamiltonianModel;
use crate::error::{Error, Result};
use crate::phase_space::{PhaseGrid, Symbol, X, XI};
use crate::spectral::{derivative_factor, fft2, fft_rows, shifted_line};

/// Columns whose peak modulus falls below this fraction of the global peak
/// are skipped in the twisted convolution.
const COLUMN_FLOOR: f64 = 1e-17;

/// Momentum transform per position row: `F[i][k] = (1/M) sum_j f[i][j] e^{-2 pi i jk/M}`.
fn momentum_transform(f: &Symbol) -> Vec<C64> {
    let m = f.grid().points();
    let mut data = f.values().to_vec();
    fft_rows(&mut data, m, false);
    let s = 1.0 / m as f64;
    data.iter_mut().for_each(|v| *v *= s);
    data
}

/// Unnormalized position spectra of the significant momentum columns.
fn column_spectra(ft: &[C64], m: usize) -> Vec<(usize, Vec<C64>)> {
    let peak = ft.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let mut out = Vec::new();
    if peak == 0.0 {
        return out;
    }
    for k in 0..m {
        let mut col: Vec<C64> = (0..m).map(|i| ft[i * m + k]).collect();
        let cpeak = col.iter().map(|v| v.norm()).fold(0.0, f64::max);
        if cpeak <= COLUMN_FLOOR * peak {
            continue;
        }
        fft_rows(&mut col, m, false);
        out.push((k, col));
    }
    out
}

/// `f # g`.
pub fn star_product(f: &Symbol, g: &Symbol) -> Result<Symbol> {
    f.ensure_compatible(g)?;
    let grid = *f.grid();
    let m = grid.points();
    let a = 0.5 * f.hbar();
    let hx = grid.spacing(X);
    let fc = column_spectra(&momentum_transform(f), m);
    let gc = column_spectra(&momentum_transform(g), m);
    let mut out = vec![C64::new(0.0, 0.0); m * m];
    let mut work = vec![C64::new(0.0, 0.0); m];
    let mut fs = vec![C64::new(0.0, 0.0); m];
    let mut gs = vec![C64::new(0.0, 0.0); m];
    for (k, fspec) in &fc {
        let eta_k = grid.frequency(XI, *k);
        for (s, gspec) in &gc {
            let eta_s = grid.frequency(XI, *s);
            shifted_line(fspec, hx, -a * eta_s, &mut work, &mut fs);
            shifted_line(gspec, hx, a * eta_k, &mut work, &mut gs);
            let col = (k + s) % m;
            for i in 0..m {
                out[i * m + col] += fs[i] * gs[i];
            }
        }
    }
    fft_rows(&mut out, m, true);
    Symbol::new(grid, f.hbar(), out)
}

/// `{f, g}_M = (f # g - g # f) / (i hbar)`. Real inputs give a real output;
/// the round-off imaginary part is then discarded.
pub fn moyal_bracket(f: &Symbol, g: &Symbol) -> Result<Symbol> {
    let fg = star_product(f, g)?;
    let gf = star_product(g, f)?;
    let scale = C64::new(0.0, -1.0 / f.hbar());
    let values = fg
        .values()
        .iter()
        .zip(gf.values())
        .map(|(u, v)| (u - v) * scale)
        .collect();
    let out = f.with_values(values);
    Ok(if f.is_real_observable() && g.is_real_observable() {
        out.real_part()
    } else {
        out
    })
}

/// Spectral partial derivatives of one symbol, sharing its 2-D transform.
pub struct SpectralDerivatives {
    grid: PhaseGrid,
    hbar: f64,
    spectrum: Vec<C64>,
}

impl SpectralDerivatives {
    pub fn new(f: &Symbol) -> Self {
        let m = f.grid().points();
        let mut spectrum = f.values().to_vec();
        fft2(&mut spectrum, m, false);
        SpectralDerivatives {
            grid: *f.grid(),
            hbar: f.hbar(),
            spectrum,
        }
    }

    /// `d_x^a d_xi^b f`; odd orders drop the Nyquist mode.
    pub fn derivative(&self, a: u32, b: u32) -> Symbol {
        let m = self.grid.points();
        let (sx, sp) = (self.grid.dual_spacing(X), self.grid.dual_spacing(XI));
        let norm = 1.0 / (m * m) as f64;
        let mut data = self.spectrum.clone();
        for k1 in 0..m {
            let fx = derivative_factor(k1, m, sx, a) * norm;
            for k2 in 0..m {
                data[k1 * m + k2] *= fx * derivative_factor(k2, m, sp, b);
            }
        }
        fft2(&mut data, m, true);
        Symbol::new(self.grid, self.hbar, data).expect("same grid")
    }
}

/// `{f, g} = f_x g_xi - f_xi g_x` with spectral derivatives.
pub fn poisson_bracket(f: &Symbol, g: &Symbol) -> Result<Symbol> {
    f.ensure_compatible(g)?;
    let df = SpectralDerivatives::new(f);
    let dg = SpectralDerivatives::new(g);
    let out = df
        .derivative(1, 0)
        .mul(&dg.derivative(0, 1))?
        .sub(&df.derivative(0, 1).mul(&dg.derivative(1, 0))?)?;
    Ok(if f.is_real_observable() && g.is_real_observable() {
        out.real_part()
    } else {
        out
    })
}

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn factorial(n: u32) -> f64 {
    (1..=n).fold(1.0, |acc, i| acc * i as f64)
}

/// `P^k(f, g) = sum_a C(k, a) (-1)^{k-a} (d_x^a d_xi^{k-a} f)(d_x^{k-a} d_xi^a g)`.
fn bidifferential(df: &SpectralDerivatives, dg: &SpectralDerivatives, k: u32) -> Result<Symbol> {
    let mut acc: Option<Symbol> = None;
    for a in 0..=k {
        let sign = if (k - a) % 2 == 0 { 1.0 } else { -1.0 };
        let term = df
            .derivative(a, k - a)
            .mul(&dg.derivative(k - a, a))?
            .scale(sign * binomial(k, a));
        acc = Some(match acc {
            None => term,
            Some(s) => s.add(&term)?,
        });
    }
    Ok(acc.expect("k >= 0"))
}

/// Truncated derivative expansion of the Moyal bracket,
/// `sum_{2m <= J} (-1)^m (hbar/2)^{2m} / (2m+1)! P^{2m+1}(f, g)`.
pub fn moyal_expansion(f: &Symbol, g: &Symbol, order: usize) -> Result<Symbol> {
    if order > 6 {
        return Err(Error::OrderOutOfRange {
            order,
            reason: "expansion order must be <= 6".into(),
        });
    }
    f.ensure_compatible(g)?;
    let df = SpectralDerivatives::new(f);
    let dg = SpectralDerivatives::new(g);
    let half = 0.5 * f.hbar();
    let mut acc = Symbol::zeros(*f.grid(), f.hbar())?;
    for mm in 0..=(order / 2) as u32 {
        let k = 2 * mm + 1;
        let sign = if mm % 2 == 0 { 1.0 } else { -1.0 };
        let c = sign * half.powi(2 * mm as i32) / factorial(k);
        acc = acc.add(&bidifferential(&df, &dg, k)?.scale(c))?;
    }
    Ok(if f.is_real_observable() && g.is_real_observable() {
        acc.real_part()
    } else {
        acc
    })
}

/// A Hamiltonian split as `H = xi^2/2 + q x^2/2 + W(x)` with `W` decaying.
///
/// The quadratic part is kept analytic; only `W` is sampled. Brackets with the
/// quadratic part are exact Poisson brackets.
#[derive(Clone, Debug)]
pub struct HamiltonianSymbol {
    quadratic_coefficient: f64,
    remainder: Symbol,
    remainder_vanishes: bool,
}

impl HamiltonianSymbol {
    pub fn from_model(model: &HamiltonianModel, grid: PhaseGrid, hbar: f64) -> Result<Self> {
        let pot = model.potential;
        let remainder = Symbol::from_real_fn(grid, hbar, |x, _| pot.remainder(x))?;
        if !pot.is_quadratic() {
            let reach = pot.decay_length();
            if grid.extent(X) < reach {
                return Err(Error::InvalidGrid(format!(
                    "position extent {} is too small for the potential (needs >= {reach})",
                    grid.extent(X)
                )));
            }
        }
        Ok(HamiltonianSymbol {
            quadratic_coefficient: pot.quadratic_coefficient(),
            remainder,
            remainder_vanishes: pot.is_quadratic(),
        })
    }

    /// From an already sampled decaying remainder `W` and quadratic coefficient `q`.
    pub fn from_parts(quadratic_coefficient: f64, remainder: Symbol) -> Self {
        let remainder_vanishes = remainder.is_zero();
        HamiltonianSymbol {
            quadratic_coefficient,
            remainder,
            remainder_vanishes,
        }
    }

    pub fn remainder(&self) -> &Symbol {
        &self.remainder
    }

    pub fn quadratic_coefficient(&self) -> f64 {
        self.quadratic_coefficient
    }

    pub fn grid(&self) -> &PhaseGrid {
        self.remainder.grid()
    }

    /// The full Hamiltonian sampled on the grid (not decaying).
    pub fn sampled(&self) -> Symbol {
        let q = self.quadratic_coefficient;
        let values = self
            .remainder
            .values()
            .iter()
            .enumerate()
            .map(|(idx, w)| {
                let [x, p] = self.grid().node(idx);
                w + 0.5 * p * p + 0.5 * q * x * x
            })
            .collect();
        self.remainder.with_values(values).real_part()
    }

    /// `{b, xi^2/2 + q x^2/2} = xi b_x - q x b_xi`.
    fn quadratic_bracket(&self, b: &Symbol) -> Result<Symbol> {
        let d = SpectralDerivatives::new(b);
        let bx = d.derivative(1, 0);
        let bp = d.derivative(0, 1);
        let q = self.quadratic_coefficient;
        let grid = *b.grid();
        let values = bx
            .values()
            .iter()
            .zip(bp.values())
            .enumerate()
            .map(|(idx, (u, v))| {
                let [x, p] = grid.node(idx);
                u * p - v * (q * x)
            })
            .collect();
        let out = b.with_values(values);
        Ok(if b.is_real_observable() {
            out.real_part()
        } else {
            out
        })
    }

    /// `{b, H}`.
    pub fn poisson(&self, b: &Symbol) -> Result<Symbol> {
        b.ensure_compatible(&self.remainder)?;
        let quad = self.quadratic_bracket(b)?;
        if self.remainder_vanishes {
            return Ok(quad);
        }
        quad.add(&poisson_bracket(b, &self.remainder)?)
    }

    /// `{b, H}_M`; equal to the Poisson bracket on the quadratic part.
    pub fn moyal(&self, b: &Symbol) -> Result<Symbol> {
        b.ensure_compatible(&self.remainder)?;
        let quad = self.quadratic_bracket(b)?;
        if self.remainder_vanishes {
            return Ok(quad);
        }
        quad.add(&moyal_bracket(b, &self.remainder)?)
    }
}

/// `Delta b = ({b, H} - {b, H}_M) / hbar^2`.
///
/// The quadratic part of `H` contributes identically to both brackets and
/// cancels, so only the decaying remainder `W` enters.
pub fn delta_h(b: &Symbol, h: &HamiltonianSymbol) -> Result<Symbol> {
    b.ensure_compatible(&h.remainder)?;
    if h.remainder_vanishes || b.is_zero() {
        return Symbol::zeros(*b.grid(), b.hbar());
    }
    delta_h_symbol(b, &h.remainder)
}

/// `Delta b` for a decaying sampled Hamiltonian symbol.
pub fn delta_h_symbol(b: &Symbol, h: &Symbol) -> Result<Symbol> {
    b.ensure_compatible(h)?;
    let hbar = b.hbar();
    let pb = poisson_bracket(b, h)?;
    let mb = moyal_bracket(b, h)?;
    pb.combine(1.0 / (hbar * hbar), &mb, -1.0 / (hbar * hbar))
}
