//! Field dumps and CSV slices.
//!
//! A field record is a 32-byte little-endian header followed by the node
//! values as `f64` LE, component-major, x index fastest:
//!
//! | offset | type  | content              |
//! |--------|-------|----------------------|
//! | 0      | [u8;4]| magic `NMF1`         |
//! | 4      | u32   | points per axis `n`  |
//! | 8      | u32   | component count      |
//! | 12     | u32   | reserved, zero       |
//! | 16     | f64   | box extent `L`       |
//! | 24     | f64   | time                 |
//!
//! A trajectory dump is a plain concatenation of records, three per time
//! level in the order `u` (3 components), `d` (3), `P` (1).

use std::io::{BufRead, BufWriter, ErrorKind, Read, Write};

use crate::error::{Error, Result};
use crate::field::{GridSpec, ScalarField, StateSnapshot, VectorField};
use crate::picard::Trajectory;

pub const MAGIC: [u8; 4] = *b"NMF1";
pub const HEADER_LEN: usize = 32;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RecordHeader {
    pub n: u32,
    pub components: u32,
    pub extent: f64,
    pub time: f64,
}

impl RecordHeader {
    pub fn to_bytes(&self) -> [u8; HEADER_LEN] {
        let mut b = [0u8; HEADER_LEN];
        b[0..4].copy_from_slice(&MAGIC);
        b[4..8].copy_from_slice(&self.n.to_le_bytes());
        b[8..12].copy_from_slice(&self.components.to_le_bytes());
        b[16..24].copy_from_slice(&self.extent.to_le_bytes());
        b[24..32].copy_from_slice(&self.time.to_le_bytes());
        b
    }

    pub fn from_bytes(b: &[u8; HEADER_LEN]) -> Result<Self> {
        if b[0..4] != MAGIC {
            return Err(Error::InvalidInput("bad magic in field record".into()));
        }
        let u32_at = |o: usize| u32::from_le_bytes(b[o..o + 4].try_into().expect("4 bytes"));
        let f64_at = |o: usize| f64::from_le_bytes(b[o..o + 8].try_into().expect("8 bytes"));
        Ok(Self {
            n: u32_at(4),
            components: u32_at(8),
            extent: f64_at(16),
            time: f64_at(24),
        })
    }
}

fn write_record<W: Write>(w: &mut W, grid: &GridSpec, comps: &[&[f64]], time: f64) -> Result<()> {
    let header = RecordHeader {
        n: grid.n() as u32,
        components: comps.len() as u32,
        extent: grid.extent(),
        time,
    };
    w.write_all(&header.to_bytes())?;
    for c in comps {
        for v in c.iter() {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn write_scalar<W: Write>(w: &mut W, f: &ScalarField, time: f64) -> Result<()> {
    write_record(w, f.grid(), &[f.values()], time)
}

pub fn write_vector<W: Write>(w: &mut W, f: &VectorField, time: f64) -> Result<()> {
    let c = f.components();
    write_record(w, f.grid(), &[&c[0], &c[1], &c[2]], time)
}

/// One decoded record.
#[derive(Clone, Debug, PartialEq)]
pub struct Record {
    pub grid: GridSpec,
    pub time: f64,
    pub components: Vec<Vec<f64>>,
}

/// Reads the next record, or `None` at a clean end of input.
pub fn read_record<R: Read>(r: &mut R) -> Result<Option<Record>> {
    let mut hb = [0u8; HEADER_LEN];
    let mut filled = 0;
    while filled < HEADER_LEN {
        match r.read(&mut hb[filled..]) {
            Ok(0) if filled == 0 => return Ok(None),
            Ok(0) => return Err(Error::InvalidInput("truncated record header".into())),
            Ok(m) => filled += m,
            Err(e) if e.kind() == ErrorKind::Interrupted => {}
            Err(e) => return Err(e.into()),
        }
    }
    let h = RecordHeader::from_bytes(&hb)?;
    let grid = GridSpec::new(h.n as usize, h.extent)?;
    if h.components == 0 || h.components > 3 {
        return Err(Error::InvalidInput(format!(
            "unsupported component count {}",
            h.components
        )));
    }
    let mut components = Vec::with_capacity(h.components as usize);
    let mut buf = vec![0u8; grid.len() * 8];
    for _ in 0..h.components {
        r.read_exact(&mut buf).map_err(|e| match e.kind() {
            ErrorKind::UnexpectedEof => Error::InvalidInput("truncated record data".into()),
            _ => e.into(),
        })?;
        components.push(
            buf.chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
                .collect(),
        );
    }
    Ok(Some(Record {
        grid,
        time: h.time,
        components,
    }))
}

impl Record {
    pub fn into_scalar(self) -> Result<ScalarField> {
        match <[Vec<f64>; 1]>::try_from(self.components) {
            Ok([v]) => ScalarField::new(self.grid, v),
            Err(c) => Err(Error::InvalidInput(format!(
                "expected a scalar record, found {} components",
                c.len()
            ))),
        }
    }

    pub fn into_vector(self) -> Result<VectorField> {
        match <[Vec<f64>; 3]>::try_from(self.components) {
            Ok(c) => VectorField::new(self.grid, c),
            Err(c) => Err(Error::InvalidInput(format!(
                "expected a vector record, found {} components",
                c.len()
            ))),
        }
    }
}

pub fn write_snapshot<W: Write>(w: &mut W, s: &StateSnapshot) -> Result<()> {
    write_vector(w, &s.u, s.time)?;
    write_vector(w, &s.d, s.time)?;
    write_scalar(w, &s.p, s.time)
}

fn expect_record<R: Read>(r: &mut R) -> Result<Record> {
    read_record(r)?.ok_or_else(|| Error::InvalidInput("trajectory dump ends mid-snapshot".into()))
}

/// Reads every `(u, d, P)` triple. The pressure mean is not re-checked.
pub fn read_snapshots<R: BufRead>(r: &mut R) -> Result<Vec<StateSnapshot>> {
    let mut out = Vec::new();
    while let Some(first) = read_record(r)? {
        let time = first.time;
        let u = first.into_vector()?;
        let d = expect_record(r)?.into_vector()?;
        let p = expect_record(r)?.into_scalar()?;
        if u.grid() != d.grid() || u.grid() != p.grid() {
            return Err(Error::InvalidInput("grid changes within a snapshot".into()));
        }
        out.push(StateSnapshot { u, d, p, time });
    }
    Ok(out)
}

/// Reads a trajectory dump written at uniform time spacing.
pub fn read_trajectory<R: BufRead>(r: &mut R) -> Result<Trajectory> {
    let snapshots = read_snapshots(r)?;
    if snapshots.len() < 2 {
        return Err(Error::InvalidInput(
            "trajectory dump needs at least two time levels".into(),
        ));
    }
    let grid = *snapshots[0].grid();
    if snapshots.iter().any(|s| *s.grid() != grid) {
        return Err(Error::InvalidInput("grid changes between snapshots".into()));
    }
    let steps = snapshots.len() - 1;
    let dt = (snapshots[steps].time - snapshots[0].time) / steps as f64;
    if !(dt > 0.0) {
        return Err(Error::InvalidInput("snapshot times must increase".into()));
    }
    for w in snapshots.windows(2) {
        let gap = w[1].time - w[0].time;
        if (gap - dt).abs() > 1e-9 * dt.max(1.0) {
            return Err(Error::InvalidInput("snapshot times are not uniformly spaced".into()));
        }
    }
    Ok(Trajectory {
        grid,
        dt,
        steps,
        snapshots,
    })
}

/// Writes the named columns along the x line through `(j, k)` as CSV,
/// preceded by an `x` column.
pub fn write_x_slice<W: Write>(
    w: W,
    grid: &GridSpec,
    j: usize,
    k: usize,
    columns: &[(&str, &[f64])],
) -> Result<()> {
    let mut w = BufWriter::new(w);
    let mut header = String::from("x");
    for (name, _) in columns {
        header.push(',');
        header.push_str(name);
    }
    writeln!(w, "{header}")?;
    for i in 0..grid.n() {
        let idx = grid.index(i, j, k);
        let mut row = format!("{:.17e}", grid.position(i, j, k)[0]);
        for (_, f) in columns {
            row.push_str(&format!(",{:.17e}", f[idx]));
        }
        writeln!(w, "{row}")?;
    }
    w.flush()?;
    Ok(())
}
