//! Bit-string interpretations of the predicate: the growing layout with
//! chunk `i` at `d·4^i`, and the fixed-width layout with stride `3d`.

use std::fmt;

use bitvec::prelude::*;
use thiserror::Error;

use crate::logic::{Interpretation, LogicError, MacroKind};
use crate::machine::Configuration;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ModelError {
    #[error("chunk index {i} with d={d} overflows")]
    Overflow { i: u64, d: u64 },
    #[error("d={0} is too small to hold the delimiters (need at least 6)")]
    DTooSmall(u64),
    #[error("configuration {index} {config}: {what} does not fit in its subchunk (capacity {capacity})")]
    Capacity { index: usize, config: Configuration, what: &'static str, capacity: u64 },
    #[error("missing chunk delimiter at {0}")]
    MissingChunk(u64),
    #[error("missing break delimiter at {0}")]
    MissingBreak(u64),
    #[error("no end marker in {what} subchunk of chunk {chunk}")]
    NoEnd { chunk: usize, what: &'static str },
    #[error("end markers at {first} and {second} in {what} subchunk of chunk {chunk}")]
    TwoEnds { chunk: usize, what: &'static str, first: u64, second: u64 },
    #[error("observation ({0}) fails: {1}")]
    Observation(char, String),
    #[error("bad model dump: {0}")]
    Dump(String),
    #[error(transparent)]
    Logic(#[from] LogicError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Layout {
    Growing { d: u64, n_chunks: usize },
    FixedWidth { d: u64, n_chunks: usize, e: u64 },
}

/// Positions of one chunk: the chunk delimiter, the two breaks, and the
/// first position past the chunk.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChunkGeometry {
    pub start: u64,
    pub first_break: u64,
    pub second_break: u64,
    pub end: u64,
}

impl ChunkGeometry {
    /// Half-open intervals in which the three end markers may sit.
    pub fn end_windows(&self) -> [(u64, u64, &'static str); 3] {
        [
            (self.start + 5, self.first_break, "line"),
            (self.first_break + 3, self.second_break, "c1"),
            (self.second_break + 3, self.end, "c2"),
        ]
    }
}

impl Layout {
    pub fn d(&self) -> u64 {
        match *self {
            Layout::Growing { d, .. } | Layout::FixedWidth { d, .. } => d,
        }
    }

    pub fn n_chunks(&self) -> usize {
        match *self {
            Layout::Growing { n_chunks, .. } | Layout::FixedWidth { n_chunks, .. } => n_chunks,
        }
    }

    pub fn geometry(&self, i: usize) -> Result<ChunkGeometry, ModelError> {
        let overflow = || ModelError::Overflow { i: i as u64, d: self.d() };
        match *self {
            Layout::Growing { d, .. } => {
                let s = chunk_start(i as u64, d)?;
                Ok(ChunkGeometry {
                    start: s,
                    first_break: s.checked_mul(2).ok_or_else(overflow)?,
                    second_break: s.checked_mul(3).ok_or_else(overflow)?,
                    end: s.checked_mul(4).ok_or_else(overflow)?,
                })
            }
            Layout::FixedWidth { d, .. } => {
                let b = (3 * d).checked_mul(i as u64).ok_or_else(overflow)?;
                Ok(ChunkGeometry { start: b, first_break: b + d, second_break: b + 2 * d, end: b + 3 * d })
            }
        }
    }
}

/// `d·4^i`.
pub fn chunk_start(i: u64, d: u64) -> Result<u64, ModelError> {
    u32::try_from(i)
        .ok()
        .and_then(|i| 4u64.checked_pow(i))
        .and_then(|p| p.checked_mul(d))
        .ok_or(ModelError::Overflow { i, d })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitModel {
    bits: BitVec<u64, Lsb0>,
    layout: Layout,
    finite_support: bool,
}

impl BitModel {
    pub fn from_bits(bits: &[bool], layout: Layout, finite_support: bool) -> Self {
        Self { bits: bits.iter().copied().collect(), layout, finite_support }
    }

    pub fn len(&self) -> u64 {
        self.bits.len() as u64
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn layout(&self) -> Layout {
        self.layout
    }

    pub fn d(&self) -> u64 {
        self.layout.d()
    }

    pub fn n_chunks(&self) -> usize {
        self.layout.n_chunks()
    }

    /// All bits beyond the stored prefix are zero.
    pub fn finite_support(&self) -> bool {
        self.finite_support
    }

    /// `e` for fixed-width models.
    pub fn e(&self) -> Option<u64> {
        match self.layout {
            Layout::FixedWidth { e, .. } => Some(e),
            Layout::Growing { .. } => None,
        }
    }

    pub fn get(&self, position: u64) -> Result<bool, LogicError> {
        match self.bits.get(position as usize) {
            Some(b) if position < self.len() => Ok(*b),
            _ if self.finite_support => Ok(false),
            _ => Err(LogicError::OutOfRange { position, length: self.len() }),
        }
    }

    pub fn ones(&self) -> Vec<u64> {
        self.bits.iter_ones().map(|i| i as u64).collect()
    }

    pub fn bits(&self) -> Vec<bool> {
        self.bits.iter().by_vals().collect()
    }

    /// Whether the macro `kind` holds at `t`.
    pub fn holds(&self, kind: MacroKind, t: u64) -> Result<bool, LogicError> {
        let (offset, pattern) = kind.pattern();
        let base = t.checked_add(offset).ok_or(LogicError::Overflow)?;
        for (k, &want) in pattern.iter().enumerate() {
            if self.get(base + k as u64)? != want {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Drops everything from the first chunk past the run and marks the
    /// model as having finite support.
    pub fn with_finite_support(mut self) -> Result<Self, ModelError> {
        let cut = self.layout.geometry(self.n_chunks())?.start as usize;
        if cut < self.bits.len() {
            self.bits.truncate(cut);
        }
        self.finite_support = true;
        Ok(self)
    }

    /// Header line plus the ASCII bit string.
    pub fn dump(&self) -> String {
        let header = match self.layout {
            Layout::Growing { d, n_chunks } => format!("d={d} layout=growing chunks={n_chunks}"),
            Layout::FixedWidth { d, n_chunks, e } => {
                format!("d={d} layout=fixed chunks={n_chunks} e={e}")
            }
        };
        let bits: String = self.bits.iter().map(|b| if *b { '1' } else { '0' }).collect();
        format!("{header}\n{bits}\n")
    }

    pub fn parse_dump(text: &str) -> Result<Self, ModelError> {
        let bad = |m: &str| ModelError::Dump(m.to_string());
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| bad("empty input"))?;
        let bits_line = lines.next().unwrap_or("");
        let mut d = None;
        let mut layout = None;
        let mut chunks = None;
        let mut e = None;
        for field in header.split_whitespace() {
            let (key, value) = field.split_once('=').ok_or_else(|| bad(field))?;
            let number = || value.parse::<u64>().map_err(|_| bad(field));
            match key {
                "d" => d = Some(number()?),
                "chunks" => chunks = Some(number()? as usize),
                "e" => e = Some(number()?),
                "layout" => layout = Some(value.to_string()),
                _ => return Err(bad(field)),
            }
        }
        let d = d.ok_or_else(|| bad("missing d"))?;
        let n_chunks = chunks.ok_or_else(|| bad("missing chunks"))?;
        let (layout, finite) = match layout.as_deref() {
            Some("growing") => (Layout::Growing { d, n_chunks }, false),
            Some("fixed") => {
                (Layout::FixedWidth { d, n_chunks, e: e.ok_or_else(|| bad("missing e"))? }, true)
            }
            _ => return Err(bad("missing or unknown layout")),
        };
        let bits = bits_line
            .trim()
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                _ => Err(bad("bit string must be 0/1")),
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self::from_bits(&bits, layout, finite))
    }
}

impl fmt::Display for BitModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.dump())
    }
}

impl Interpretation for BitModel {
    fn predicate(&self, position: u64) -> Result<bool, LogicError> {
        self.get(position)
    }

    /// `f(n)` is bit `n`.
    fn function(&self, position: u64) -> Result<u64, LogicError> {
        self.get(position).map(u64::from)
    }
}

fn write_chunk(
    bits: &mut BitVec<u64, Lsb0>,
    g: ChunkGeometry,
    index: usize,
    config: &Configuration,
) -> Result<(), ModelError> {
    let fields = [
        (config.line as u64, g.first_break - g.start - 6, "line"),
        (config.c1, g.second_break - g.first_break - 4, "c1"),
        (config.c2, g.end - g.second_break - 4, "c2"),
    ];
    for (value, capacity, what) in fields {
        if value > capacity {
            return Err(ModelError::Capacity { index, config: *config, what, capacity });
        }
    }
    write_delimiter(bits, g.start, MacroKind::Chunk);
    write_delimiter(bits, g.first_break, MacroKind::Break);
    write_delimiter(bits, g.second_break, MacroKind::Break);
    let runs = [(g.start + 6, fields[0].0), (g.first_break + 4, config.c1), (g.second_break + 4, config.c2)];
    for (from, count) in runs {
        bits[from as usize..(from + count) as usize].fill(true);
    }
    Ok(())
}

fn write_delimiter(bits: &mut BitVec<u64, Lsb0>, at: u64, kind: MacroKind) {
    let (_, pattern) = kind.pattern();
    for (k, &b) in pattern.iter().enumerate() {
        bits.set(at as usize + k, b);
    }
}

/// The canonical growing-layout model of a configuration sequence. The
/// delimiter of the chunk after the last configuration is written out too.
pub fn build_canonical(configs: &[Configuration], d: u64) -> Result<BitModel, ModelError> {
    if d < 6 {
        return Err(ModelError::DTooSmall(d));
    }
    let layout = Layout::Growing { d, n_chunks: configs.len() };
    if configs.is_empty() {
        return Ok(BitModel::from_bits(&[false; 6], layout, false));
    }
    let next = layout.geometry(configs.len())?.start;
    let mut bits = bitvec![u64, Lsb0; 0; (next + 6) as usize];
    for (i, config) in configs.iter().enumerate() {
        write_chunk(&mut bits, layout.geometry(i)?, i, config)?;
    }
    write_delimiter(&mut bits, next, MacroKind::Chunk);
    Ok(BitModel { bits, layout, finite_support: false })
}

/// The fixed-width model: chunk `i` at `3·d_val·i`, `e` at the last chunk,
/// zero everywhere past the last chunk.
pub fn build_fixed_width(configs: &[Configuration], d_val: u64) -> Result<BitModel, ModelError> {
    if d_val < 6 {
        return Err(ModelError::DTooSmall(d_val));
    }
    let n = configs.len();
    let e = 3 * d_val * (n.max(1) as u64 - 1);
    let layout = Layout::FixedWidth { d: d_val, n_chunks: n, e };
    let mut bits = bitvec![u64, Lsb0; 0; (3 * d_val * n as u64) as usize];
    for (i, config) in configs.iter().enumerate() {
        write_chunk(&mut bits, layout.geometry(i)?, i, config)?;
    }
    Ok(BitModel { bits, layout, finite_support: true })
}

fn end_positions(m: &BitModel, from: u64, to: u64) -> Result<Vec<u64>, ModelError> {
    let mut found = Vec::new();
    for t in from..to {
        if m.holds(MacroKind::End, t)? {
            found.push(t);
        }
    }
    Ok(found)
}

/// Reads the configuration sequence back out of a model.
pub fn decode(m: &BitModel) -> Result<Vec<Configuration>, ModelError> {
    let mut configs = Vec::with_capacity(m.n_chunks());
    for i in 0..m.n_chunks() {
        let g = m.layout.geometry(i)?;
        if !m.holds(MacroKind::Chunk, g.start)? {
            return Err(ModelError::MissingChunk(g.start));
        }
        for at in [g.first_break, g.second_break] {
            if !m.holds(MacroKind::Break, at)? {
                return Err(ModelError::MissingBreak(at));
            }
        }
        let mut values = [0u64; 3];
        for (slot, (from, to, what)) in g.end_windows().into_iter().enumerate() {
            let ends = end_positions(m, from, to)?;
            match ends.as_slice() {
                [] => return Err(ModelError::NoEnd { chunk: i, what }),
                [t] => values[slot] = t - from,
                [a, b, ..] => return Err(ModelError::TwoEnds { chunk: i, what, first: *a, second: *b }),
            }
        }
        configs.push(Configuration::new(values[0] as usize, values[1], values[2]));
    }
    Ok(configs)
}

/// Exhaustive scan of the layout facts the correctness argument relies on:
/// (a) chunk delimiters exactly at chunk starts, (b) breaks exactly at the
/// subchunk boundaries, (c) starts exactly at the delimiter-internal rises,
/// (d)–(f) at most one end marker per subchunk, (g) at least one.
pub fn check_observations(m: &BitModel) -> Result<(), ModelError> {
    let n = m.n_chunks();
    let geos = (0..=n).map(|i| m.layout.geometry(i)).collect::<Result<Vec<_>, _>>()?;
    let len = if m.finite_support { geos[n].start + 6 } else { m.len() };
    // A growing model materializes the delimiter of the chunk after the run.
    let tail = !m.finite_support;
    let mut chunk_at: Vec<u64> = geos[..n].iter().map(|g| g.start).collect();
    let breaks: Vec<u64> = geos[..n].iter().flat_map(|g| [g.first_break, g.second_break]).collect();
    let mut starts: Vec<u64> = geos[..n]
        .iter()
        .flat_map(|g| [g.start + 1, g.start + 3, g.first_break + 1, g.second_break + 1])
        .collect();
    if tail {
        chunk_at.push(geos[n].start);
        starts.push(geos[n].start + 1);
        starts.push(geos[n].start + 3);
    }
    let scans: [(char, MacroKind, &[u64], u64); 3] = [
        ('a', MacroKind::Chunk, &chunk_at, 6),
        ('b', MacroKind::Break, &breaks, 4),
        ('c', MacroKind::Start, &starts, 2),
    ];
    for (label, kind, expected, width) in scans {
        if len < width {
            continue;
        }
        // The window in front of the final delimiter is only partially
        // written in growing models; stop where the next chunk begins.
        let limit = (len - width + 1).min(geos[n].start + 1);
        for r in 0..limit {
            let holds = m.holds(kind, r)?;
            if holds != expected.contains(&r) {
                return Err(ModelError::Observation(label, format!("{} at {r} is {holds}", kind.name())));
            }
        }
    }
    for (i, g) in geos[..n].iter().enumerate() {
        for ((from, to, what), label) in g.end_windows().into_iter().zip(['d', 'e', 'f']) {
            let ends = end_positions(m, from, to)?;
            if ends.len() > 1 {
                return Err(ModelError::Observation(
                    label,
                    format!("chunk {i} {what}: end markers at {ends:?}"),
                ));
            }
            if ends.is_empty() {
                return Err(ModelError::Observation('g', format!("chunk {i} {what}: no end marker")));
            }
        }
    }
    Ok(())
}
