//! Little-endian binary framing for model artifacts.
//!
//! Every artifact starts with an 8-byte magic, a format version byte and the
//! scalar width, followed by a kind-specific payload. Readers never hand back
//! a partially decoded value: any short read is an `UnexpectedEof` I/O error.

use std::io;

use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Error)]
pub enum CodecError {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("not a {expected} artifact (bad magic header)")]
    BadMagic { expected: &'static str },
    #[error("format version mismatch: expected {expected}, found {found}")]
    VersionMismatch { expected: u8, found: u8 },
    #[error(
        "scalar width mismatch: artifact stores {found}-byte floats, reader expects {expected}"
    )]
    ScalarWidth { expected: u8, found: u8 },
    #[error("corrupt artifact: {0}")]
    Corrupt(String),
}

pub(crate) struct Encoder {
    buf: Vec<u8>,
}

impl Encoder {
    pub fn new<T: Scalar>(magic: &[u8; 8], version: u8) -> Self {
        let mut buf = Vec::with_capacity(256);
        buf.extend_from_slice(magic);
        buf.push(version);
        buf.push(T::BYTES as u8);
        Encoder { buf }
    }

    pub fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }

    pub fn u32(&mut self, v: u32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn u64(&mut self, v: u64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn len(&mut self, n: usize) {
        self.u64(n as u64);
    }

    pub fn scalar<T: Scalar>(&mut self, v: T) {
        v.write_le(&mut self.buf);
    }

    pub fn scalars<T: Scalar>(&mut self, vs: &[T]) {
        self.len(vs.len());
        for &v in vs {
            v.write_le(&mut self.buf);
        }
    }

    pub fn finish(self) -> Vec<u8> {
        self.buf
    }
}

pub(crate) struct Decoder<'a> {
    bytes: &'a [u8],
    pos: usize,
}

fn eof() -> CodecError {
    CodecError::Io(io::Error::new(
        io::ErrorKind::UnexpectedEof,
        "artifact is truncated",
    ))
}

impl<'a> Decoder<'a> {
    pub fn new<T: Scalar>(
        bytes: &'a [u8],
        magic: &[u8; 8],
        name: &'static str,
        version: u8,
    ) -> Result<Self, CodecError> {
        if bytes.len() < 8 || &bytes[..8] != magic {
            if bytes.len() < 8 && magic.starts_with(bytes) {
                return Err(eof());
            }
            return Err(CodecError::BadMagic { expected: name });
        }
        let mut d = Decoder { bytes, pos: 8 };
        let found = d.u8()?;
        if found != version {
            return Err(CodecError::VersionMismatch {
                expected: version,
                found,
            });
        }
        let width = d.u8()?;
        if width as usize != T::BYTES {
            return Err(CodecError::ScalarWidth {
                expected: T::BYTES as u8,
                found: width,
            });
        }
        Ok(d)
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8], CodecError> {
        let end = self.pos.checked_add(n).ok_or_else(eof)?;
        if end > self.bytes.len() {
            return Err(eof());
        }
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    pub fn u8(&mut self) -> Result<u8, CodecError> {
        Ok(self.take(1)?[0])
    }

    pub fn u32(&mut self) -> Result<u32, CodecError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    pub fn u64(&mut self) -> Result<u64, CodecError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    pub fn len(&mut self) -> Result<usize, CodecError> {
        let n = self.u64()?;
        // Bound by the remaining payload so a corrupt length cannot trigger a huge allocation.
        if n > (self.bytes.len() - self.pos) as u64 {
            return Err(eof());
        }
        Ok(n as usize)
    }

    pub fn scalar<T: Scalar>(&mut self) -> Result<T, CodecError> {
        Ok(T::read_le(self.take(T::BYTES)?))
    }

    pub fn scalars<T: Scalar>(&mut self) -> Result<Vec<T>, CodecError> {
        let n = self.len()?;
        let raw = self.take(n.checked_mul(T::BYTES).ok_or_else(eof)?)?;
        Ok(raw.chunks_exact(T::BYTES).map(T::read_le).collect())
    }

    pub fn finish(self) -> Result<(), CodecError> {
        if self.pos != self.bytes.len() {
            return Err(CodecError::Corrupt(format!(
                "{} trailing bytes after payload",
                self.bytes.len() - self.pos
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MAGIC: &[u8; 8] = b"TESTMAG\0";

    #[test]
    fn every_truncation_is_rejected() {
        let mut enc = Encoder::new::<f64>(MAGIC, 1);
        enc.u32(7);
        enc.scalars(&[1.0f64, 2.0, 3.0]);
        let bytes = enc.finish();

        for cut in 0..bytes.len() {
            let res = (|| {
                let mut d = Decoder::new::<f64>(&bytes[..cut], MAGIC, "test", 1)?;
                d.u32()?;
                d.scalars::<f64>()?;
                d.finish()
            })();
            assert!(res.is_err(), "cut at {cut} decoded");
        }
        let mut d = Decoder::new::<f64>(&bytes, MAGIC, "test", 1).unwrap();
        assert_eq!(d.u32().unwrap(), 7);
        assert_eq!(d.scalars::<f64>().unwrap(), vec![1.0, 2.0, 3.0]);
        d.finish().unwrap();
    }

    #[test]
    fn version_and_width_are_checked() {
        let bytes = Encoder::new::<f64>(MAGIC, 2).finish();
        assert!(matches!(
            Decoder::new::<f64>(&bytes, MAGIC, "test", 1),
            Err(CodecError::VersionMismatch {
                expected: 1,
                found: 2
            })
        ));
        assert!(matches!(
            Decoder::new::<f32>(&bytes, MAGIC, "test", 2),
            Err(CodecError::ScalarWidth { .. })
        ));
        assert!(matches!(
            Decoder::new::<f64>(b"NOTMAGIC\x01\x08", MAGIC, "test", 1),
            Err(CodecError::BadMagic { .. })
        ));
    }
}
