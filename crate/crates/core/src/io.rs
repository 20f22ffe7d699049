//! Binary containers for symbols and operators, and CSV export of symbols.
//!
//! Symbol container, little-endian:
//!
//! ```text
//! magic "SMCLSYM1" | n: u32 | M: u64 | L_x: f64 | L_xi: f64 | hbar: f64
//! | tag length: u16 | tag (utf-8) | flags: u8 | channels: u32
//! | payload: channels * M^2 complex doubles (re, im), row-major, position slow
//! ```
//!
//! Flag bit 0 marks real observables. Operator container:
//!
//! ```text
//! magic "SMCLOPR1" | M: u64 | L: f64 | hbar: f64 | flags: u8 | payload: M^2 complex, row-major
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::classical::FlowMap;
use crate::error::{Error, Result};
use crate::phase_space::{FourierConvention, PhaseGrid, Symbol, X, XI};
use crate::quantum::{PositionGrid, QuantumOperator};

const SYMBOL_MAGIC: &[u8; 8] = b"SMCLSYM1";
const OPERATOR_MAGIC: &[u8; 8] = b"SMCLOPR1";
const REAL_FLAG: u8 = 1;

fn put_f64(w: &mut impl Write, v: f64) -> Result<()> {
    Ok(w.write_all(&v.to_le_bytes())?)
}

fn put_complex(w: &mut impl Write, values: impl Iterator<Item = C64>) -> Result<()> {
    for v in values {
        put_f64(w, v.re)?;
        put_f64(w, v.im)?;
    }
    Ok(())
}

fn take<const K: usize>(r: &mut impl Read) -> Result<[u8; K]> {
    let mut b = [0u8; K];
    r.read_exact(&mut b)
        .map_err(|e| Error::Format(format!("truncated container: {e}")))?;
    Ok(b)
}

fn take_f64(r: &mut impl Read) -> Result<f64> {
    Ok(f64::from_le_bytes(take::<8>(r)?))
}

fn take_complex(r: &mut impl Read, count: usize) -> Result<Vec<C64>> {
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let re = take_f64(r)?;
        let im = take_f64(r)?;
        out.push(C64::new(re, im));
    }
    Ok(out)
}

/// Channels sharing one grid, as stored in a symbol container.
#[derive(Clone, Debug)]
pub struct SymbolChannels {
    pub grid: PhaseGrid,
    pub hbar: f64,
    pub tag: String,
    pub real: bool,
    pub channels: Vec<Vec<C64>>,
}

impl SymbolChannels {
    pub fn from_symbols(symbols: &[&Symbol]) -> Result<Self> {
        let first = symbols
            .first()
            .ok_or_else(|| Error::InvalidParameter("no symbols to store".into()))?;
        for s in &symbols[1..] {
            first.ensure_compatible(s)?;
        }
        Ok(SymbolChannels {
            grid: *first.grid(),
            hbar: first.hbar(),
            tag: FourierConvention::UNITARY_ANGULAR.tag().to_string(),
            real: symbols.iter().all(|s| s.is_real_observable()),
            channels: symbols.iter().map(|s| s.values().to_vec()).collect(),
        })
    }

    /// Channels as symbols; real observables are re-tagged after validation.
    pub fn into_symbols(self) -> Result<Vec<Symbol>> {
        let (grid, hbar, real) = (self.grid, self.hbar, self.real);
        self.channels
            .into_iter()
            .map(|v| {
                let s = Symbol::new(grid, hbar, v)?;
                if real {
                    s.into_real_observable()
                } else {
                    Ok(s)
                }
            })
            .collect()
    }
}

pub fn write_channels(w: &mut impl Write, c: &SymbolChannels) -> Result<()> {
    let m = c.grid.points();
    for ch in &c.channels {
        if ch.len() != m * m {
            return Err(Error::InvalidGrid(format!(
                "channel of length {} on a {m}x{m} grid",
                ch.len()
            )));
        }
    }
    let tag = c.tag.as_bytes();
    let tag_len = u16::try_from(tag.len()).map_err(|_| Error::Format("tag too long".into()))?;
    w.write_all(SYMBOL_MAGIC)?;
    w.write_all(&(c.grid.dof() as u32).to_le_bytes())?;
    w.write_all(&(m as u64).to_le_bytes())?;
    put_f64(w, c.grid.extent(X))?;
    put_f64(w, c.grid.extent(XI))?;
    put_f64(w, c.hbar)?;
    w.write_all(&tag_len.to_le_bytes())?;
    w.write_all(tag)?;
    w.write_all(&[if c.real { REAL_FLAG } else { 0 }])?;
    w.write_all(&(c.channels.len() as u32).to_le_bytes())?;
    for ch in &c.channels {
        put_complex(w, ch.iter().copied())?;
    }
    Ok(())
}

pub fn read_channels(r: &mut impl Read) -> Result<SymbolChannels> {
    if &take::<8>(r)? != SYMBOL_MAGIC {
        return Err(Error::Format("not a symbol container".into()));
    }
    let n = u32::from_le_bytes(take::<4>(r)?);
    if n != 1 {
        return Err(Error::Format(format!("unsupported degrees of freedom {n}")));
    }
    let m = u64::from_le_bytes(take::<8>(r)?) as usize;
    let lx = take_f64(r)?;
    let lp = take_f64(r)?;
    let hbar = take_f64(r)?;
    let tag_len = u16::from_le_bytes(take::<2>(r)?) as usize;
    let mut tag = vec![0u8; tag_len];
    r.read_exact(&mut tag)
        .map_err(|e| Error::Format(format!("truncated tag: {e}")))?;
    let tag = String::from_utf8(tag).map_err(|_| Error::Format("tag is not utf-8".into()))?;
    let flags = take::<1>(r)?[0];
    let count = u32::from_le_bytes(take::<4>(r)?) as usize;
    let grid = PhaseGrid::new([lx, lp], m)?;
    let channels = (0..count)
        .map(|_| take_complex(r, m * m))
        .collect::<Result<_>>()?;
    Ok(SymbolChannels {
        grid,
        hbar,
        tag,
        real: flags & REAL_FLAG != 0,
        channels,
    })
}

pub fn save_symbol(path: &Path, s: &Symbol) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_channels(&mut w, &SymbolChannels::from_symbols(&[s])?)?;
    Ok(w.flush()?)
}

pub fn load_symbol(path: &Path) -> Result<Symbol> {
    let c = read_channels(&mut BufReader::new(File::open(path)?))?;
    if c.channels.len() != 1 {
        return Err(Error::Format(format!(
            "expected one channel, found {}",
            c.channels.len()
        )));
    }
    Ok(c.into_symbols()?.remove(0))
}

/// A flow map as two real channels, the `x` and `xi` components of the images.
pub fn flow_map_channels(map: &FlowMap, hbar: f64) -> SymbolChannels {
    let comp = |k: usize| map.images().iter().map(|z| C64::new(z[k], 0.0)).collect();
    SymbolChannels {
        grid: *map.grid(),
        hbar,
        tag: FourierConvention::UNITARY_ANGULAR.tag().to_string(),
        real: true,
        channels: vec![comp(X), comp(XI)],
    }
}

/// `x,xi,re,im` per node.
pub fn write_symbol_csv(w: impl Write, s: &Symbol) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let csv_err = |e: csv::Error| Error::Io(e.to_string());
    out.write_record(["x", "xi", "re", "im"]).map_err(csv_err)?;
    let g = s.grid();
    for (idx, v) in s.values().iter().enumerate() {
        let [x, p] = g.node(idx);
        out.serialize((x, p, v.re, v.im)).map_err(csv_err)?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_operator(w: &mut impl Write, op: &QuantumOperator) -> Result<()> {
    let g = op.grid();
    let a = op.matrix();
    w.write_all(OPERATOR_MAGIC)?;
    w.write_all(&(g.points() as u64).to_le_bytes())?;
    put_f64(w, g.extent())?;
    put_f64(w, g.hbar())?;
    w.write_all(&[u8::from(op.is_hermitian())])?;
    let m = g.points();
    put_complex(w, (0..m * m).map(|k| a[(k / m, k % m)]))
}

/// Reads an operator; the Hermitian tag is re-checked, not trusted.
pub fn read_operator(r: &mut impl Read) -> Result<QuantumOperator> {
    if &take::<8>(r)? != OPERATOR_MAGIC {
        return Err(Error::Format("not an operator container".into()));
    }
    let m = u64::from_le_bytes(take::<8>(r)?) as usize;
    let l = take_f64(r)?;
    let hbar = take_f64(r)?;
    let hermitian = take::<1>(r)?[0] != 0;
    let grid = PositionGrid::new(l, m, hbar)?;
    let data = take_complex(r, m * m)?;
    let op = QuantumOperator::new(DMatrix::from_row_slice(m, m, &data), grid)?;
    Ok(if hermitian {
        op.tagged_if_hermitian()
    } else {
        op
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symbol_round_trip_is_bitwise() {
        let g = PhaseGrid::square(3.0, 16).unwrap();
        let s = Symbol::from_real_fn(g, 0.3, |x, p| (-x * x - p * p).exp() + 0.1 * x).unwrap();
        let mut buf = Vec::new();
        write_channels(&mut buf, &SymbolChannels::from_symbols(&[&s]).unwrap()).unwrap();
        let back = read_channels(&mut buf.as_slice()).unwrap();
        assert_eq!(back.tag, "unitary-angular");
        let t = back.into_symbols().unwrap().remove(0);
        assert!(t.is_real_observable());
        assert_eq!(t.values(), s.values());
        assert_eq!(t.grid(), s.grid());
    }

    #[test]
    fn truncated_input_is_rejected() {
        let g = PhaseGrid::square(3.0, 8).unwrap();
        let s = Symbol::zeros(g, 0.3).unwrap();
        let mut buf = Vec::new();
        write_channels(&mut buf, &SymbolChannels::from_symbols(&[&s]).unwrap()).unwrap();
        buf.truncate(buf.len() - 3);
        assert!(matches!(
            read_channels(&mut buf.as_slice()),
            Err(Error::Format(_))
        ));
        assert!(matches!(
            read_channels(&mut &b"garbage!"[..]),
            Err(Error::Format(_))
        ));
    }

    #[test]
    fn csv_has_one_row_per_node() {
        let g = PhaseGrid::square(1.0, 8).unwrap();
        let s = Symbol::constant(g, 0.5, 2.0).unwrap();
        let mut buf = Vec::new();
        write_symbol_csv(&mut buf, &s).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 65);
        assert!(text.starts_with("x,xi,re,im\n-1.0,-1.0,2.0,0.0"));
    }
}
