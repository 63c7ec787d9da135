//! Versioned binary file formats with trailing checksums.
//!
//! Two formats, both little-endian with a CRC-32 trailer over every
//! preceding byte:
//!
//! ```text
//! sample set  "PMSAMPLE" | u32 version | u64 seed | i64 class | u64 attempts
//!             | u64 successes | u8 low_yield | str source | str rng_name
//!             | u64 n | u64 d | n*d f64 | u32 crc
//! checkpoint  "PMMLPCKP" | u32 version | u32 activation | u64 seed
//!             | u32 n_dims | n_dims u64 | per-layer weights then biases f64
//!             | u32 crc
//! ```
//!
//! Strings are a u32 byte length followed by UTF-8. Reads validate the
//! checksum before parsing anything, so corrupted or truncated files yield
//! an integrity error and no partial data.

use crate::error::{Error, Result};
use crate::model::mlp::{Activation, Layer, MlpModel};
use crate::sample_set::{SampleMeta, SampleSet};
use std::io::{Read, Write};
use std::path::Path;

const SAMPLE_MAGIC: &[u8; 8] = b"PMSAMPLE";
const CHECKPOINT_MAGIC: &[u8; 8] = b"PMMLPCKP";
const FORMAT_VERSION: u32 = 1;

/// CRC-32 (IEEE, reflected polynomial 0xEDB88320).
pub fn crc32(bytes: &[u8]) -> u32 {
    static TABLE: std::sync::OnceLock<[u32; 256]> = std::sync::OnceLock::new();
    let table = TABLE.get_or_init(|| {
        let mut t = [0u32; 256];
        for (i, slot) in t.iter_mut().enumerate() {
            let mut c = i as u32;
            for _ in 0..8 {
                c = if c & 1 != 0 { 0xEDB8_8320 ^ (c >> 1) } else { c >> 1 };
            }
            *slot = c;
        }
        t
    });
    let mut crc = !0u32;
    for &b in bytes {
        crc = table[((crc ^ b as u32) & 0xff) as usize] ^ (crc >> 8);
    }
    !crc
}

struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    fn new(magic: &[u8; 8]) -> Self {
        let mut buf = Vec::new();
        buf.extend_from_slice(magic);
        Self { buf }
    }

    fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }

    fn u32(&mut self, v: u32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    fn u64(&mut self, v: u64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    fn i64(&mut self, v: i64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    fn f64(&mut self, v: f64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    fn str(&mut self, s: &str) {
        self.u32(s.len() as u32);
        self.buf.extend_from_slice(s.as_bytes());
    }

    fn finish(mut self, out: &mut impl Write) -> Result<()> {
        let crc = crc32(&self.buf);
        self.buf.extend_from_slice(&crc.to_le_bytes());
        out.write_all(&self.buf)?;
        Ok(())
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    /// Validates the trailing checksum before any field is parsed.
    fn new(buf: &'a [u8], magic: &[u8; 8]) -> Result<Self> {
        if buf.len() < magic.len() + 8 {
            return Err(Error::Integrity("file too short".into()));
        }
        let (body, trailer) = buf.split_at(buf.len() - 4);
        let stored = u32::from_le_bytes(trailer.try_into().unwrap());
        if crc32(body) != stored {
            return Err(Error::Integrity("checksum mismatch".into()));
        }
        if &body[..magic.len()] != magic {
            return Err(Error::Integrity("bad magic string".into()));
        }
        Ok(Self {
            buf: body,
            pos: magic.len(),
        })
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.buf.len() {
            return Err(Error::Integrity("unexpected end of file".into()));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn i64(&mut self) -> Result<i64> {
        Ok(i64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn str(&mut self) -> Result<String> {
        let len = self.u32()? as usize;
        let bytes = self.take(len)?;
        String::from_utf8(bytes.to_vec())
            .map_err(|_| Error::Integrity("invalid UTF-8 string".into()))
    }

    fn done(&self) -> Result<()> {
        if self.pos != self.buf.len() {
            return Err(Error::Integrity("trailing bytes after payload".into()));
        }
        Ok(())
    }
}

/// Serialize a sample set.
pub fn write_sample_set(set: &SampleSet, out: &mut impl Write) -> Result<()> {
    let mut w = Writer::new(SAMPLE_MAGIC);
    w.u32(FORMAT_VERSION);
    w.u64(set.meta.seed);
    w.i64(set.meta.class_label.map(i64::from).unwrap_or(-1));
    w.u64(set.meta.attempts);
    w.u64(set.meta.successes);
    w.u8(set.meta.low_yield as u8);
    w.str(&set.meta.source);
    w.str(&set.meta.rng_name);
    w.u64(set.n_samples() as u64);
    w.u64(set.dim() as u64);
    for &v in set.as_flat() {
        w.f64(v);
    }
    w.finish(out)
}

/// Deserialize a sample set, validating checksum, magic and version.
pub fn read_sample_set(input: &mut impl Read) -> Result<SampleSet> {
    let mut buf = Vec::new();
    input.read_to_end(&mut buf)?;
    let mut r = Reader::new(&buf, SAMPLE_MAGIC)?;
    let version = r.u32()?;
    if version != FORMAT_VERSION {
        return Err(Error::UnsupportedVersion {
            found: version,
            expected: FORMAT_VERSION,
        });
    }
    let seed = r.u64()?;
    let class = r.i64()?;
    let attempts = r.u64()?;
    let successes = r.u64()?;
    let low_yield = r.u8()? != 0;
    let source = r.str()?;
    let rng_name = r.str()?;
    let n = r.u64()? as usize;
    let d = r.u64()? as usize;
    let mut data = Vec::with_capacity(n * d);
    for _ in 0..n * d {
        data.push(r.f64()?);
    }
    r.done()?;
    let mut meta = SampleMeta::new(seed, source);
    meta.rng_name = rng_name;
    meta.class_label = u32::try_from(class).ok();
    meta.attempts = attempts;
    meta.successes = successes;
    meta.low_yield = low_yield;
    SampleSet::from_flat(n, d, data, meta)
}

pub fn save_sample_set(set: &SampleSet, path: impl AsRef<Path>) -> Result<()> {
    if let Some(parent) = path.as_ref().parent() {
        std::fs::create_dir_all(parent)?;
    }
    let mut f = std::fs::File::create(path)?;
    write_sample_set(set, &mut f)
}

pub fn load_sample_set(path: impl AsRef<Path>) -> Result<SampleSet> {
    let mut f = std::fs::File::open(path)?;
    read_sample_set(&mut f)
}

/// Serialize a model checkpoint.
pub fn write_checkpoint(model: &MlpModel, out: &mut impl Write) -> Result<()> {
    let mut w = Writer::new(CHECKPOINT_MAGIC);
    w.u32(FORMAT_VERSION);
    w.u32(model.activation.tag());
    w.u64(model.seed);
    w.u32(model.layer_dims.len() as u32);
    for &d in &model.layer_dims {
        w.u64(d as u64);
    }
    for layer in &model.layers {
        for &v in &layer.weights {
            w.f64(v);
        }
        for &v in &layer.biases {
            w.f64(v);
        }
    }
    w.finish(out)
}

/// Deserialize a model checkpoint.
pub fn read_checkpoint(input: &mut impl Read) -> Result<MlpModel> {
    let mut buf = Vec::new();
    input.read_to_end(&mut buf)?;
    let mut r = Reader::new(&buf, CHECKPOINT_MAGIC)?;
    let version = r.u32()?;
    if version != FORMAT_VERSION {
        return Err(Error::UnsupportedVersion {
            found: version,
            expected: FORMAT_VERSION,
        });
    }
    let activation = Activation::from_tag(r.u32()?)?;
    let seed = r.u64()?;
    let n_dims = r.u32()? as usize;
    if n_dims < 2 {
        return Err(Error::Integrity("checkpoint needs at least two layer dims".into()));
    }
    let mut dims = Vec::with_capacity(n_dims);
    for _ in 0..n_dims {
        dims.push(r.u64()? as usize);
    }
    let mut layers = Vec::with_capacity(n_dims - 1);
    for w in dims.windows(2) {
        let (in_dim, out_dim) = (w[0], w[1]);
        let mut weights = Vec::with_capacity(in_dim * out_dim);
        for _ in 0..in_dim * out_dim {
            weights.push(r.f64()?);
        }
        let mut biases = Vec::with_capacity(out_dim);
        for _ in 0..out_dim {
            biases.push(r.f64()?);
        }
        layers.push(Layer {
            in_dim,
            out_dim,
            weights,
            biases,
        });
    }
    r.done()?;
    Ok(MlpModel {
        layer_dims: dims,
        layers,
        activation,
        seed,
    })
}

pub fn save_checkpoint(model: &MlpModel, path: impl AsRef<Path>) -> Result<()> {
    if let Some(parent) = path.as_ref().parent() {
        std::fs::create_dir_all(parent)?;
    }
    let mut f = std::fs::File::create(path)?;
    write_checkpoint(model, &mut f)
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<MlpModel> {
    let mut f = std::fs::File::open(path)?;
    read_checkpoint(&mut f)
}
