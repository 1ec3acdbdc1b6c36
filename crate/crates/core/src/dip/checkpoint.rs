//! Parameter checkpoints: every parameter tensor in layer order, each as
//! magic `TNSR1`, `(c, h, w)` as `u64` LE, then `c * h * w` `f64` LE values.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::net::GeneratorNet;
use crate::error::{Error, Result};
use crate::formats::{read_f64, read_magic, read_u64};

pub const TENSOR_MAGIC: &[u8; 5] = b"TNSR1";

pub fn write_checkpoint<W: Write>(w: &mut W, net: &GeneratorNet) -> Result<()> {
    for p in net.params() {
        let (c, h, wd) = p.shape();
        w.write_all(TENSOR_MAGIC)?;
        for d in [c, h, wd] {
            w.write_all(&(d as u64).to_le_bytes())?;
        }
        for v in p.data() {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

/// Loads parameters into a net of identical architecture.
pub fn read_checkpoint<R: Read>(r: &mut R, net: &mut GeneratorNet) -> Result<()> {
    for (k, p) in net.params_mut().into_iter().enumerate() {
        if read_magic(r, TENSOR_MAGIC)?.is_none() {
            return Err(Error::Format(format!("checkpoint ends before tensor {k}")));
        }
        let shape = (read_u64(r)? as usize, read_u64(r)? as usize, read_u64(r)? as usize);
        if shape != p.shape() {
            return Err(Error::Format(format!(
                "tensor {k} has shape {shape:?}, net expects {:?}",
                p.shape()
            )));
        }
        for v in p.data_mut() {
            *v = read_f64(r)?;
            if !v.is_finite() {
                return Err(Error::Format(format!("non-finite value in tensor {k}")));
            }
        }
    }
    if read_magic(r, TENSOR_MAGIC)?.is_some() {
        return Err(Error::Format("checkpoint holds more tensors than the net".into()));
    }
    Ok(())
}

pub fn save_checkpoint(path: impl AsRef<Path>, net: &GeneratorNet) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_checkpoint(&mut w, net)?;
    w.flush()?;
    Ok(())
}

pub fn load_checkpoint(path: impl AsRef<Path>, net: &mut GeneratorNet) -> Result<()> {
    read_checkpoint(&mut BufReader::new(File::open(path)?), net)
}
