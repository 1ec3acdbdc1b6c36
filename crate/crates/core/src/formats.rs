//! Binary on-disk formats.
//!
//! `CIMG`: magic `CIMG1`, rows and cols as `u64` LE, then `rows * cols`
//! `(re, im)` pairs of `f64` LE in row-major order.
//!
//! `RMAP`: magic `RMAP1`, rows and cols as `u64` LE, then `rows * cols`
//! `f64` LE values.
//!
//! Files may hold several records back to back (used for sensing-matrix
//! sequences).

use std::fs::File;
use std::io::{BufReader, BufWriter, ErrorKind, Read, Write};
use std::path::Path;

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::grid::{ComplexGrid, IntensityGrid};
use crate::scalar::Real;

pub const CIMG_MAGIC: &[u8; 5] = b"CIMG1";
pub const RMAP_MAGIC: &[u8; 5] = b"RMAP1";

fn write_header<W: Write>(w: &mut W, magic: &[u8; 5], rows: usize, cols: usize) -> Result<()> {
    w.write_all(magic)?;
    w.write_all(&(rows as u64).to_le_bytes())?;
    w.write_all(&(cols as u64).to_le_bytes())?;
    Ok(())
}

pub(crate) fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

pub(crate) fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

/// Reads the magic; `Ok(None)` on clean end of stream.
pub(crate) fn read_magic<R: Read>(r: &mut R, expect: &[u8; 5]) -> Result<Option<()>> {
    let mut magic = [0u8; 5];
    let mut filled = 0;
    while filled < magic.len() {
        match r.read(&mut magic[filled..]) {
            Ok(0) if filled == 0 => return Ok(None),
            Ok(0) => return Err(Error::Format("truncated magic".into())),
            Ok(k) => filled += k,
            Err(e) if e.kind() == ErrorKind::Interrupted => {}
            Err(e) => return Err(e.into()),
        }
    }
    if &magic != expect {
        return Err(Error::Format(format!(
            "bad magic {:?}, expected {:?}",
            String::from_utf8_lossy(&magic),
            String::from_utf8_lossy(expect)
        )));
    }
    Ok(Some(()))
}

fn read_dims<R: Read>(r: &mut R) -> Result<(usize, usize)> {
    let rows = read_u64(r)? as usize;
    let cols = read_u64(r)? as usize;
    if rows == 0 || cols == 0 || rows.checked_mul(cols).is_none_or(|n| n > (1 << 32)) {
        return Err(Error::Format(format!("implausible shape {rows}x{cols}")));
    }
    Ok((rows, cols))
}

pub fn write_cimg<T: Real, W: Write>(w: &mut W, x: &ComplexGrid<T>) -> Result<()> {
    write_header(w, CIMG_MAGIC, x.rows(), x.cols())?;
    for z in x.data() {
        w.write_all(&z.re.to_f64_lossy().to_le_bytes())?;
        w.write_all(&z.im.to_f64_lossy().to_le_bytes())?;
    }
    Ok(())
}

fn read_cimg_opt<R: Read>(r: &mut R) -> Result<Option<ComplexGrid<f64>>> {
    if read_magic(r, CIMG_MAGIC)?.is_none() {
        return Ok(None);
    }
    let (rows, cols) = read_dims(r)?;
    let mut data = Vec::with_capacity(rows * cols);
    for _ in 0..rows * cols {
        let re = read_f64(r)?;
        let im = read_f64(r)?;
        data.push(Complex::new(re, im));
    }
    ComplexGrid::from_vec(rows, cols, data).map(Some)
}

pub fn read_cimg<R: Read>(r: &mut R) -> Result<ComplexGrid<f64>> {
    read_cimg_opt(r)?.ok_or_else(|| Error::Format("empty CIMG stream".into()))
}

/// Reads every CIMG record until end of stream.
pub fn read_cimg_sequence<R: Read>(r: &mut R) -> Result<Vec<ComplexGrid<f64>>> {
    let mut out = Vec::new();
    while let Some(x) = read_cimg_opt(r)? {
        out.push(x);
    }
    Ok(out)
}

pub fn write_rmap<T: Real, W: Write>(w: &mut W, y: &IntensityGrid<T>) -> Result<()> {
    write_header(w, RMAP_MAGIC, y.rows(), y.cols())?;
    for v in y.data() {
        w.write_all(&v.to_f64_lossy().to_le_bytes())?;
    }
    Ok(())
}

pub fn read_rmap<R: Read>(r: &mut R) -> Result<IntensityGrid<f64>> {
    read_magic(r, RMAP_MAGIC)?.ok_or_else(|| Error::Format("empty RMAP stream".into()))?;
    let (rows, cols) = read_dims(r)?;
    let data = (0..rows * cols).map(|_| read_f64(r)).collect::<Result<Vec<_>>>()?;
    IntensityGrid::from_vec(rows, cols, data)
}

pub fn save_cimg<T: Real>(path: impl AsRef<Path>, x: &ComplexGrid<T>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_cimg(&mut w, x)?;
    w.flush()?;
    Ok(())
}

pub fn load_cimg(path: impl AsRef<Path>) -> Result<ComplexGrid<f64>> {
    read_cimg(&mut BufReader::new(File::open(path)?))
}

pub fn save_cimg_sequence<T: Real>(path: impl AsRef<Path>, xs: &[ComplexGrid<T>]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for x in xs {
        write_cimg(&mut w, x)?;
    }
    w.flush()?;
    Ok(())
}

pub fn load_cimg_sequence(path: impl AsRef<Path>) -> Result<Vec<ComplexGrid<f64>>> {
    read_cimg_sequence(&mut BufReader::new(File::open(path)?))
}

pub fn save_rmap<T: Real>(path: impl AsRef<Path>, y: &IntensityGrid<T>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_rmap(&mut w, y)?;
    w.flush()?;
    Ok(())
}

pub fn load_rmap(path: impl AsRef<Path>) -> Result<IntensityGrid<f64>> {
    read_rmap(&mut BufReader::new(File::open(path)?))
}
