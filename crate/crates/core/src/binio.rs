//! Little-endian binary framing shared by trajectory and current dumps.

use std::io::{Read, Write};

use num_complex::Complex64;

use crate::error::{Error, Result};

pub const HEADER_LEN: usize = 64;

pub(crate) struct HeaderWriter {
    buf: Vec<u8>,
}

impl HeaderWriter {
    pub fn new(magic: &[u8; 8], version: u32, aux: u32) -> Self {
        let mut buf = Vec::with_capacity(HEADER_LEN);
        buf.extend_from_slice(magic);
        buf.extend_from_slice(&version.to_le_bytes());
        buf.extend_from_slice(&aux.to_le_bytes());
        Self { buf }
    }

    pub fn u64(mut self, v: u64) -> Self {
        self.buf.extend_from_slice(&v.to_le_bytes());
        self
    }

    pub fn f64(mut self, v: f64) -> Self {
        self.buf.extend_from_slice(&v.to_le_bytes());
        self
    }

    pub fn write(mut self, w: &mut impl Write) -> Result<()> {
        debug_assert!(self.buf.len() <= HEADER_LEN);
        self.buf.resize(HEADER_LEN, 0);
        w.write_all(&self.buf)?;
        Ok(())
    }
}

pub(crate) struct HeaderReader {
    buf: [u8; HEADER_LEN],
    pos: usize,
    pub version: u32,
    /// Format-specific 32-bit field after the version.
    pub aux: u32,
}

impl HeaderReader {
    pub fn read(r: &mut impl Read, magic: &[u8; 8]) -> Result<Self> {
        let mut buf = [0u8; HEADER_LEN];
        r.read_exact(&mut buf)?;
        if &buf[..8] != magic {
            return Err(Error::Parse { line: 0, msg: "bad magic".into() });
        }
        let version = u32::from_le_bytes(buf[8..12].try_into().unwrap());
        let aux = u32::from_le_bytes(buf[12..16].try_into().unwrap());
        Ok(Self { buf, pos: 16, version, aux })
    }

    pub fn u64(&mut self) -> u64 {
        let v = u64::from_le_bytes(self.buf[self.pos..self.pos + 8].try_into().unwrap());
        self.pos += 8;
        v
    }

    pub fn f64(&mut self) -> f64 {
        f64::from_bits(self.u64())
    }
}

pub(crate) fn write_complex(w: &mut impl Write, xs: &[Complex64]) -> Result<()> {
    let mut buf = Vec::with_capacity(16 * xs.len());
    for z in xs {
        buf.extend_from_slice(&z.re.to_le_bytes());
        buf.extend_from_slice(&z.im.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

pub(crate) fn read_complex(r: &mut impl Read, n: usize) -> Result<Vec<Complex64>> {
    let mut buf = vec![0u8; 16 * n];
    r.read_exact(&mut buf)?;
    Ok(buf
        .chunks_exact(16)
        .map(|c| {
            Complex64::new(
                f64::from_le_bytes(c[..8].try_into().unwrap()),
                f64::from_le_bytes(c[8..].try_into().unwrap()),
            )
        })
        .collect())
}

pub(crate) fn write_real(w: &mut impl Write, xs: &[f64]) -> Result<()> {
    let mut buf = Vec::with_capacity(8 * xs.len());
    for x in xs {
        buf.extend_from_slice(&x.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

pub(crate) fn read_real(r: &mut impl Read, n: usize) -> Result<Vec<f64>> {
    let mut buf = vec![0u8; 8 * n];
    r.read_exact(&mut buf)?;
    Ok(buf.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
}
