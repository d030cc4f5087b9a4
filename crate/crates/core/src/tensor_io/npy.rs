//! Minimal NPY (format 1.0 - 3.0) reader and writer for dense numeric arrays.

use std::path::Path;

use crate::error::{Error, Result};
use crate::fsutil;

use super::{EmbeddingMatrix, LabelVector};

const MAGIC: &[u8] = b"\x93NUMPY";
const ALIGN: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Dtype {
    F4,
    F8,
    U1,
    I1,
    B1,
    I4,
    I8,
    U4,
    U8,
}

impl Dtype {
    fn parse(descr: &str) -> Result<Self> {
        Ok(match descr {
            "<f4" => Dtype::F4,
            "<f8" => Dtype::F8,
            "|u1" | "<u1" => Dtype::U1,
            "|i1" | "<i1" => Dtype::I1,
            "|b1" => Dtype::B1,
            "<i4" => Dtype::I4,
            "<i8" => Dtype::I8,
            "<u4" => Dtype::U4,
            "<u8" => Dtype::U8,
            other => return Err(Error::UnsupportedDtype(other.to_string())),
        })
    }

    fn size(self) -> usize {
        match self {
            Dtype::U1 | Dtype::I1 | Dtype::B1 => 1,
            Dtype::F4 | Dtype::I4 | Dtype::U4 => 4,
            Dtype::F8 | Dtype::I8 | Dtype::U8 => 8,
        }
    }

    fn is_float(self) -> bool {
        matches!(self, Dtype::F4 | Dtype::F8)
    }

    fn decode(self, b: &[u8]) -> f64 {
        match self {
            Dtype::F4 => f64::from(f32::from_le_bytes(b.try_into().unwrap())),
            Dtype::F8 => f64::from_le_bytes(b.try_into().unwrap()),
            Dtype::U1 | Dtype::B1 => f64::from(b[0]),
            Dtype::I1 => f64::from(b[0] as i8),
            Dtype::I4 => f64::from(i32::from_le_bytes(b.try_into().unwrap())),
            Dtype::U4 => f64::from(u32::from_le_bytes(b.try_into().unwrap())),
            Dtype::I8 => i64::from_le_bytes(b.try_into().unwrap()) as f64,
            Dtype::U8 => u64::from_le_bytes(b.try_into().unwrap()) as f64,
        }
    }
}

/// Decoded array before it is interpreted as a matrix or label vector.
struct RawArray {
    dtype: Dtype,
    shape: Vec<usize>,
    values: Vec<f64>,
}

struct Header {
    descr: String,
    fortran_order: bool,
    shape: Vec<usize>,
}

fn malformed(offset: usize, reason: impl Into<String>) -> Error {
    Error::MalformedHeader {
        offset,
        reason: reason.into(),
    }
}

/// Parser for the Python dict literal stored in the header.
struct DictParser<'a> {
    src: &'a [u8],
    pos: usize,
    base: usize,
}

#[derive(Debug)]
enum Literal {
    Str(String),
    Bool(bool),
    Tuple(Vec<usize>),
}

impl<'a> DictParser<'a> {
    fn err(&self, reason: &str) -> Error {
        malformed(self.base + self.pos, reason)
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn expect(&mut self, c: u8) -> Result<()> {
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.err(&format!("expected '{}'", c as char)))
        }
    }

    fn string(&mut self) -> Result<String> {
        let quote = match self.peek() {
            Some(q @ (b'\'' | b'"')) => q,
            _ => return Err(self.err("expected string")),
        };
        self.pos += 1;
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos] != quote {
            self.pos += 1;
        }
        if self.pos == self.src.len() {
            return Err(self.err("unterminated string"));
        }
        let s = std::str::from_utf8(&self.src[start..self.pos])
            .map_err(|_| malformed(self.base + start, "invalid utf-8"))?
            .to_string();
        self.pos += 1;
        Ok(s)
    }

    fn integer(&mut self) -> Result<usize> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        // numpy may emit Python 2 style long suffixes
        let digits = std::str::from_utf8(&self.src[start..self.pos]).unwrap_or("");
        if self.src.get(self.pos) == Some(&b'L') {
            self.pos += 1;
        }
        digits
            .parse()
            .map_err(|_| malformed(self.base + start, "expected integer"))
    }

    fn literal(&mut self) -> Result<Literal> {
        match self.peek() {
            Some(b'\'' | b'"') => Ok(Literal::Str(self.string()?)),
            Some(b'(') => {
                self.pos += 1;
                let mut dims = Vec::new();
                loop {
                    if self.peek() == Some(b')') {
                        self.pos += 1;
                        break;
                    }
                    dims.push(self.integer()?);
                    match self.peek() {
                        Some(b',') => self.pos += 1,
                        Some(b')') => {}
                        _ => return Err(self.err("expected ',' or ')' in shape")),
                    }
                }
                Ok(Literal::Tuple(dims))
            }
            _ => {
                let rest = &self.src[self.pos..];
                if rest.starts_with(b"True") {
                    self.pos += 4;
                    Ok(Literal::Bool(true))
                } else if rest.starts_with(b"False") {
                    self.pos += 5;
                    Ok(Literal::Bool(false))
                } else {
                    Err(self.err("unexpected token"))
                }
            }
        }
    }

    fn header(mut self) -> Result<Header> {
        let mut descr = None;
        let mut fortran = None;
        let mut shape = None;
        self.expect(b'{')?;
        loop {
            if self.peek() == Some(b'}') {
                self.pos += 1;
                break;
            }
            let key_pos = self.base + self.pos;
            let key = self.string()?;
            self.expect(b':')?;
            let value = self.literal()?;
            match (key.as_str(), value) {
                ("descr", Literal::Str(s)) => descr = Some(s),
                ("fortran_order", Literal::Bool(b)) => fortran = Some(b),
                ("shape", Literal::Tuple(t)) => shape = Some(t),
                (k, _) => return Err(malformed(key_pos, format!("unexpected key {k:?}"))),
            }
            match self.peek() {
                Some(b',') => self.pos += 1,
                Some(b'}') => {}
                _ => return Err(self.err("expected ',' or '}'")),
            }
        }
        let end = self.base + self.pos;
        Ok(Header {
            descr: descr.ok_or_else(|| malformed(end, "missing 'descr'"))?,
            fortran_order: fortran.ok_or_else(|| malformed(end, "missing 'fortran_order'"))?,
            shape: shape.ok_or_else(|| malformed(end, "missing 'shape'"))?,
        })
    }
}

fn decode(bytes: &[u8]) -> Result<RawArray> {
    if bytes.len() < 8 || &bytes[..6] != MAGIC {
        return Err(Error::BadMagic { offset: 0 });
    }
    let (major, minor) = (bytes[6], bytes[7]);
    let (header_len, header_start) = match major {
        1 => {
            if bytes.len() < 10 {
                return Err(malformed(8, "file ends inside header length"));
            }
            (u16::from_le_bytes([bytes[8], bytes[9]]) as usize, 10)
        }
        2 | 3 => {
            if bytes.len() < 12 {
                return Err(malformed(8, "file ends inside header length"));
            }
            (
                u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize,
                12,
            )
        }
        _ => return Err(Error::UnsupportedVersion { major, minor }),
    };
    let data_start = header_start + header_len;
    if bytes.len() < data_start {
        return Err(malformed(bytes.len(), "file ends inside header"));
    }
    let header = DictParser {
        src: &bytes[header_start..data_start],
        pos: 0,
        base: header_start,
    }
    .header()?;

    let dtype = Dtype::parse(&header.descr)?;
    if header.fortran_order {
        return Err(Error::FortranOrder);
    }
    if header.shape.is_empty() || header.shape.len() > 2 || header.shape.contains(&0) {
        return Err(Error::UnsupportedShape(header.shape));
    }
    let count: usize = header.shape.iter().product();
    let expected = count * dtype.size();
    let payload = &bytes[data_start..];
    if payload.len() != expected {
        return Err(Error::Truncated {
            offset: data_start,
            expected,
            found: payload.len(),
        });
    }
    let values = payload
        .chunks_exact(dtype.size())
        .map(|b| dtype.decode(b))
        .collect();
    Ok(RawArray {
        dtype,
        shape: header.shape,
        values,
    })
}

fn encode(descr: &str, shape: &[usize], payload: &[u8]) -> Vec<u8> {
    let shape_str = match shape {
        [n] => format!("({n},)"),
        dims => format!(
            "({})",
            dims.iter().map(|d| d.to_string()).collect::<Vec<_>>().join(", ")
        ),
    };
    let mut header =
        format!("{{'descr': '{descr}', 'fortran_order': False, 'shape': {shape_str}, }}");
    let unpadded = MAGIC.len() + 2 + 2 + header.len() + 1;
    let pad = (ALIGN - unpadded % ALIGN) % ALIGN;
    header.push_str(&" ".repeat(pad));
    header.push('\n');

    let mut out = Vec::with_capacity(MAGIC.len() + 4 + header.len() + payload.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&[1, 0]);
    out.extend_from_slice(&(header.len() as u16).to_le_bytes());
    out.extend_from_slice(header.as_bytes());
    out.extend_from_slice(payload);
    out
}

/// Parses an NPY byte buffer holding a float32/float64 array.
pub fn decode_matrix(bytes: &[u8]) -> Result<EmbeddingMatrix> {
    let raw = decode(bytes)?;
    if !raw.dtype.is_float() {
        return Err(Error::UnsupportedDtype(format!("{:?}", raw.dtype)));
    }
    let (rows, dim) = match raw.shape[..] {
        [n] => (n, 1),
        [r, c] => (r, c),
        _ => unreachable!(),
    };
    EmbeddingMatrix::new(rows, dim, raw.values)
}

/// Serializes a matrix as a little-endian float64 NPY 1.0 buffer.
pub fn encode_matrix(m: &EmbeddingMatrix) -> Vec<u8> {
    let payload: Vec<u8> = m.values().iter().flat_map(|v| v.to_le_bytes()).collect();
    encode("<f8", &[m.rows(), m.dim()], &payload)
}

pub fn read_array(path: impl AsRef<Path>) -> Result<EmbeddingMatrix> {
    decode_matrix(&fsutil::read(path.as_ref())?)
}

pub fn write_array(m: &EmbeddingMatrix, path: impl AsRef<Path>) -> Result<()> {
    fsutil::write_atomic(path.as_ref(), &encode_matrix(m))
}

/// Parses a 1-D (or n×1) label array of any supported numeric dtype.
pub fn decode_labels(bytes: &[u8]) -> Result<LabelVector> {
    let raw = decode(bytes)?;
    if raw.shape.len() == 2 && raw.shape[1] != 1 {
        return Err(Error::UnsupportedShape(raw.shape));
    }
    LabelVector::from_f64(&raw.values)
}

pub fn encode_labels(labels: &LabelVector) -> Vec<u8> {
    encode("|u1", &[labels.len()], labels.as_slice())
}

pub fn read_labels(path: impl AsRef<Path>) -> Result<LabelVector> {
    decode_labels(&fsutil::read(path.as_ref())?)
}

pub fn write_labels(labels: &LabelVector, path: impl AsRef<Path>) -> Result<()> {
    fsutil::write_atomic(path.as_ref(), &encode_labels(labels))
}
