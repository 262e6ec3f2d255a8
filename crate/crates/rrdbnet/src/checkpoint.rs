//! Binary checkpoints: `RRDBCKPT`, version (u32 LE), config JSON (u32 length +
//! UTF-8), then per parameter in canonical order: name (u16 length + bytes),
//! rank (u8), dims (u32 LE each), values (f32 LE).

use std::path::Path;

use deblur_core::fsutil::write_atomic;
use deblur_core::{Error, Result};

use crate::params::{NetConfig, NetParams};
use crate::real::Real;

pub const MAGIC: &[u8; 8] = b"RRDBCKPT";
pub const VERSION: u32 = 1;

pub fn checkpoint_bytes<T: Real>(params: &NetParams<T>) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    let cfg = serde_json::to_vec(params.config()).expect("config serializes");
    out.extend_from_slice(&(cfg.len() as u32).to_le_bytes());
    out.extend_from_slice(&cfg);
    for (spec, values) in params.specs().iter().zip(params.values()) {
        out.extend_from_slice(&(spec.name.len() as u16).to_le_bytes());
        out.extend_from_slice(spec.name.as_bytes());
        out.push(spec.shape.len() as u8);
        for &d in &spec.shape {
            out.extend_from_slice(&(d as u32).to_le_bytes());
        }
        for v in values {
            out.extend_from_slice(&(v.as_f64() as f32).to_le_bytes());
        }
    }
    out
}

pub fn save_checkpoint<T: Real>(path: impl AsRef<Path>, params: &NetParams<T>) -> Result<()> {
    write_atomic(path.as_ref(), &checkpoint_bytes(params))
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], String> {
        if self.buf.len() - self.pos < n {
            return Err(format!("truncated at byte {}", self.pos));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32, String> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
}

pub fn params_from_bytes(bytes: &[u8]) -> Result<NetParams<f32>, String> {
    let mut r = Reader { buf: bytes, pos: 0 };
    if r.take(MAGIC.len())
        .map_err(|_| "not a checkpoint (too short)".to_string())?
        != MAGIC
    {
        return Err("not a checkpoint (bad magic)".into());
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(format!("unsupported checkpoint version {version}"));
    }
    let len = r.u32()? as usize;
    let config: NetConfig = serde_json::from_slice(r.take(len)?).map_err(|e| format!("config: {e}"))?;
    let template = NetParams::<f32>::zeros(&config).map_err(|e| e.to_string())?;
    let mut values = Vec::with_capacity(template.len());
    for spec in template.specs() {
        let name_len = u16::from_le_bytes(r.take(2)?.try_into().unwrap()) as usize;
        let name = std::str::from_utf8(r.take(name_len)?).map_err(|_| "parameter name is not UTF-8".to_string())?;
        if name != spec.name {
            return Err(format!("expected parameter {}, found {name}", spec.name));
        }
        let rank = r.take(1)?[0] as usize;
        let dims = (0..rank)
            .map(|_| r.u32().map(|d| d as usize))
            .collect::<Result<Vec<_>, _>>()?;
        if dims != spec.shape {
            return Err(format!("{name}: shape {dims:?}, expected {:?}", spec.shape));
        }
        let raw = r.take(4 * spec.len())?;
        let v: Vec<f32> = raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        if v.iter().any(|x| !x.is_finite()) {
            return Err(format!("{name}: non-finite value"));
        }
        values.push(v);
    }
    if r.pos != bytes.len() {
        return Err(format!("{} trailing bytes", bytes.len() - r.pos));
    }
    NetParams::from_values(&config, values).map_err(|e| e.to_string())
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<NetParams<f32>> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    params_from_bytes(&bytes).map_err(|reason| Error::format(path, reason))
}
