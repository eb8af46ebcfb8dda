//! Little-endian cursor helpers shared by the binary formats.

use crate::error::{Error, Result};

#[derive(Default)]
pub(crate) struct Writer {
    pub buf: Vec<u8>,
}

impl Writer {
    pub fn bytes(&mut self, v: &[u8]) {
        self.buf.extend_from_slice(v);
    }
    pub fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }
    pub fn u16(&mut self, v: u16) {
        self.bytes(&v.to_le_bytes());
    }
    pub fn u32(&mut self, v: u32) {
        self.bytes(&v.to_le_bytes());
    }
    pub fn u64(&mut self, v: u64) {
        self.bytes(&v.to_le_bytes());
    }
    pub fn i64(&mut self, v: i64) {
        self.bytes(&v.to_le_bytes());
    }
    pub fn f32(&mut self, v: f32) {
        self.bytes(&v.to_le_bytes());
    }
    pub fn f64(&mut self, v: f64) {
        self.bytes(&v.to_le_bytes());
    }
    pub fn len_u32(&mut self, v: usize) -> Result<()> {
        let v = u32::try_from(v).map_err(|_| Error::InvalidWindow(format!("length {v} exceeds u32")))?;
        self.u32(v);
        Ok(())
    }
    pub fn str(&mut self, s: &str) -> Result<()> {
        self.len_u32(s.len())?;
        self.bytes(s.as_bytes());
        Ok(())
    }
}

pub(crate) struct Reader<'a> {
    data: &'a [u8],
    pos: usize,
    what: &'static str,
    corrupt: fn(String) -> Error,
}

impl<'a> Reader<'a> {
    /// `corrupt` turns a detail message into the caller's error kind.
    pub fn new(data: &'a [u8], what: &'static str, corrupt: fn(String) -> Error) -> Self {
        Self {
            data,
            pos: 0,
            what,
            corrupt,
        }
    }

    pub fn fail(&self, detail: impl Into<String>) -> Error {
        (self.corrupt)(format!("{}: {}", self.what, detail.into()))
    }

    pub fn remaining(&self) -> usize {
        self.data.len() - self.pos
    }

    pub fn is_empty(&self) -> bool {
        self.remaining() == 0
    }

    pub fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if n > self.remaining() {
            return Err(self.fail(format!("truncated at byte {} (wanted {n})", self.pos)));
        }
        let out = &self.data[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    fn array<const N: usize>(&mut self) -> Result<[u8; N]> {
        Ok(self.take(N)?.try_into().unwrap())
    }

    pub fn u8(&mut self) -> Result<u8> {
        Ok(self.array::<1>()?[0])
    }
    pub fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.array()?))
    }
    pub fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.array()?))
    }
    pub fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.array()?))
    }
    pub fn i64(&mut self) -> Result<i64> {
        Ok(i64::from_le_bytes(self.array()?))
    }
    pub fn f32(&mut self) -> Result<f32> {
        Ok(f32::from_le_bytes(self.array()?))
    }
    pub fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.array()?))
    }

    /// Reads a u32 element count and checks that `count × elem_size` bytes
    /// remain, so hostile counts cannot trigger huge allocations.
    pub fn count(&mut self, elem_size: usize) -> Result<usize> {
        let n = self.u32()? as usize;
        self.check_room(n, elem_size)?;
        Ok(n)
    }

    pub fn check_room(&self, n: usize, elem_size: usize) -> Result<()> {
        match n.checked_mul(elem_size) {
            Some(bytes) if bytes <= self.remaining() => Ok(()),
            _ => Err(self.fail(format!("count {n} exceeds remaining data"))),
        }
    }

    pub fn vec<T>(&mut self, n: usize, elem_size: usize, mut read: impl FnMut(&mut Self) -> Result<T>) -> Result<Vec<T>> {
        self.check_room(n, elem_size)?;
        (0..n).map(|_| read(self)).collect()
    }

    pub fn str(&mut self) -> Result<String> {
        let n = self.count(1)?;
        let raw = self.take(n)?;
        String::from_utf8(raw.to_vec()).map_err(|_| self.fail("invalid utf-8"))
    }
}
