//! Binary field snapshots.
//!
//! Layout (little-endian): magic `GKRF`, `u32` version, `u32 n`, `f64 L`, `u32` field
//! count, then per field a `u32` name length, the UTF-8 name, a one-byte valence tag and
//! the component stream in point-major lexicographic order; a CRC32 of everything before
//! it closes the file. Endomorphisms are written row by row.

use std::io::{Read, Write};
use std::path::Path;

use super::grid::{Field, Grid4};
use crate::error::{GkError, Result};
use crate::linalg4::{Form2, Form3, Mat4, Sym4, Tensor, Vec4};

pub const MAGIC: &[u8; 4] = b"GKRF";
pub const VERSION: u32 = 1;

/// Valence tag stored with each field.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u8)]
pub enum Valence {
    Scalar = 0,
    Covector = 1,
    Symmetric = 2,
    TwoForm = 3,
    ThreeForm = 4,
    Endomorphism = 5,
}

impl Valence {
    pub fn components(self) -> usize {
        match self {
            Valence::Scalar => 1,
            Valence::Covector => 4,
            Valence::Symmetric => 10,
            Valence::TwoForm => 6,
            Valence::ThreeForm => 4,
            Valence::Endomorphism => 16,
        }
    }

    fn from_tag(t: u8) -> Result<Self> {
        Ok(match t {
            0 => Valence::Scalar,
            1 => Valence::Covector,
            2 => Valence::Symmetric,
            3 => Valence::TwoForm,
            4 => Valence::ThreeForm,
            5 => Valence::Endomorphism,
            _ => return Err(GkError::Format(format!("unknown valence tag {t}"))),
        })
    }
}

/// Field types that can be stored in a snapshot.
pub trait Storable: Tensor {
    const VALENCE: Valence;

    /// Components in file order.
    fn write_order(&self) -> Vec<f64> {
        self.comps().to_vec()
    }

    fn from_file_order(c: &[f64]) -> Self {
        let mut t = Self::zero();
        t.comps_mut().copy_from_slice(c);
        t
    }
}

impl Storable for f64 {
    const VALENCE: Valence = Valence::Scalar;
}
impl Storable for Vec4 {
    const VALENCE: Valence = Valence::Covector;
}
impl Storable for Sym4 {
    const VALENCE: Valence = Valence::Symmetric;
}
impl Storable for Form2 {
    const VALENCE: Valence = Valence::TwoForm;
}
impl Storable for Form3 {
    const VALENCE: Valence = Valence::ThreeForm;
}
impl Storable for Mat4 {
    const VALENCE: Valence = Valence::Endomorphism;

    fn write_order(&self) -> Vec<f64> {
        self.transpose().as_slice().to_vec()
    }

    fn from_file_order(c: &[f64]) -> Self {
        Mat4::from_row_slice(c)
    }
}

/// One named field in a snapshot, kept as its raw component stream in file order.
#[derive(Clone, Debug, PartialEq)]
pub struct NamedField {
    pub name: String,
    pub valence: Valence,
    pub data: Vec<f64>,
}

/// A set of named fields on one grid.
#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub grid: Grid4,
    pub fields: Vec<NamedField>,
}

impl Snapshot {
    pub fn new(grid: Grid4) -> Self {
        Snapshot {
            grid,
            fields: Vec::new(),
        }
    }

    pub fn push<T: Storable>(&mut self, name: &str, field: &Field<T>) {
        let mut data = Vec::with_capacity(field.raw().len());
        for i in 0..self.grid.len() {
            data.extend(field.get(i).write_order());
        }
        self.fields.push(NamedField {
            name: name.to_string(),
            valence: T::VALENCE,
            data,
        });
    }

    pub fn get<T: Storable>(&self, name: &str) -> Result<Field<T>> {
        let nf = self
            .fields
            .iter()
            .find(|f| f.name == name)
            .ok_or_else(|| GkError::Format(format!("snapshot has no field `{name}`")))?;
        if nf.valence != T::VALENCE {
            return Err(GkError::Format(format!(
                "field `{name}` has valence {:?}, expected {:?}",
                nf.valence,
                T::VALENCE
            )));
        }
        Ok(Field::from_index_fn(self.grid, |i| {
            T::from_file_order(&nf.data[i * T::N..(i + 1) * T::N])
        }))
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut b = Vec::new();
        b.extend_from_slice(MAGIC);
        b.extend_from_slice(&VERSION.to_le_bytes());
        b.extend_from_slice(&(self.grid.n as u32).to_le_bytes());
        b.extend_from_slice(&self.grid.l.to_le_bytes());
        b.extend_from_slice(&(self.fields.len() as u32).to_le_bytes());
        for f in &self.fields {
            b.extend_from_slice(&(f.name.len() as u32).to_le_bytes());
            b.extend_from_slice(f.name.as_bytes());
            b.push(f.valence as u8);
            for v in &f.data {
                b.extend_from_slice(&v.to_le_bytes());
            }
        }
        let crc = crc32fast::hash(&b);
        b.extend_from_slice(&crc.to_le_bytes());
        b
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 24 {
            return Err(GkError::Format("snapshot truncated".into()));
        }
        let (body, tail) = bytes.split_at(bytes.len() - 4);
        let stored = u32::from_le_bytes(tail.try_into().unwrap());
        if crc32fast::hash(body) != stored {
            return Err(GkError::Format("snapshot checksum mismatch".into()));
        }
        let mut r = Reader { buf: body, pos: 0 };
        if r.take(4)? != MAGIC {
            return Err(GkError::Format("bad magic".into()));
        }
        let version = r.u32()?;
        if version != VERSION {
            return Err(GkError::Format(format!("unsupported snapshot version {version}")));
        }
        let n = r.u32()? as usize;
        let l = r.f64()?;
        if n < 8 || n % 2 != 0 || !(l > 0.0) {
            return Err(GkError::Format(format!("invalid grid n={n} L={l}")));
        }
        let grid = Grid4::new(n, l);
        let count = r.u32()?;
        let mut fields = Vec::new();
        for _ in 0..count {
            let len = r.u32()? as usize;
            let name = String::from_utf8(r.take(len)?.to_vec())
                .map_err(|_| GkError::Format("field name is not UTF-8".into()))?;
            let valence = Valence::from_tag(r.take(1)?[0])?;
            let total = grid.len() * valence.components();
            let raw = r.take(total * 8)?;
            let data = raw
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                .collect();
            fields.push(NamedField { name, valence, data });
        }
        if r.pos != body.len() {
            return Err(GkError::Format("trailing bytes in snapshot".into()));
        }
        Ok(Snapshot { grid, fields })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        f.write_all(&self.to_bytes())?;
        f.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut bytes = Vec::new();
        std::fs::File::open(path)?.read_to_end(&mut bytes)?;
        Self::from_bytes(&bytes)
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, k: usize) -> Result<&'a [u8]> {
        if self.pos + k > self.buf.len() {
            return Err(GkError::Format("snapshot truncated".into()));
        }
        let s = &self.buf[self.pos..self.pos + k];
        self.pos += k;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg4::seed_j;

    fn sample() -> Snapshot {
        let grid = Grid4::new(8, 1.5);
        let mut s = Snapshot::new(grid);
        s.push("p", &Field::<f64>::from_fn(grid, |x| x[0] - 2.0 * x[3]));
        s.push("J", &Field::<Mat4>::from_fn(grid, |x| seed_j() * (1.0 + x[1])));
        s.push("H", &Field::constant(grid, Form3([1.0, 2.0, 3.0, 4.0])));
        s
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let s = sample();
        let bytes = s.to_bytes();
        assert_eq!(&bytes[..4], b"GKRF");
        let back = Snapshot::from_bytes(&bytes).unwrap();
        assert_eq!(back, s);
        let j: Field<Mat4> = back.get("J").unwrap();
        assert_eq!(j.get(3), seed_j() * (1.0 + s.grid.point(3)[1]));
        assert!(back.get::<Vec4>("J").is_err());
        assert!(back.get::<f64>("missing").is_err());
    }

    #[test]
    fn endomorphisms_are_written_row_major() {
        let grid = Grid4::new(8, 1.0);
        let mut s = Snapshot::new(grid);
        let mut m = Mat4::zeros();
        m[(0, 1)] = 7.0;
        s.push("A", &Field::constant(grid, m));
        assert_eq!(s.fields[0].data[1], 7.0);
    }

    #[test]
    fn corruption_is_detected() {
        let mut bytes = sample().to_bytes();
        let k = bytes.len() / 2;
        bytes[k] ^= 0x10;
        assert!(matches!(Snapshot::from_bytes(&bytes), Err(GkError::Format(_))));
        assert!(Snapshot::from_bytes(&bytes[..10]).is_err());
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.gkrf");
        let s = sample();
        s.save(&path).unwrap();
        assert_eq!(Snapshot::load(&path).unwrap(), s);
    }
}
