//! Versioned little-endian binary model file.
//!
//! ```text
//! magic "EPSVM\0\0\0", u32 version
//! u32 dim, u32 class_count, class_count × u16 label
//! u32 degree, f64 gamma, f64 coef0, f64 penalty_c
//! dim × (f64 min, f64 max)                     feature scaling
//! u32 machine_count, then per machine:
//!   u16 positive class, u16 negative class, f64 bias, u32 sv_count,
//!   sv_count × (u32 training index, f64 coefficient, dim × f64)
//! ```

use std::fs;
use std::path::Path;

use super::{BinaryModel, KernelParams, SvmModel};
use crate::error::{Error, Result};
use crate::profile::ScaleParams;
use crate::scalar::Real;

const MAGIC: &[u8; 8] = b"EPSVM\0\0\0";
pub const MODEL_FORMAT_VERSION: u32 = 1;

struct Writer(Vec<u8>);

impl Writer {
    fn u16(&mut self, v: u16) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn u32(&mut self, v: usize) {
        self.0.extend_from_slice(&(v as u32).to_le_bytes());
    }
    fn f64<T: Real>(&mut self, v: T) {
        self.0.extend_from_slice(&v.to_f64_lossy().to_le_bytes());
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8], String> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| format!("truncated model file at byte {}", self.pos))?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }
    fn u16(&mut self) -> Result<u16, String> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }
    fn u32(&mut self) -> Result<usize, String> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()) as usize)
    }
    fn f64<T: Real>(&mut self) -> Result<T, String> {
        Ok(T::lit(f64::from_le_bytes(self.take(8)?.try_into().unwrap())))
    }
}

pub fn write_model<T: Real>(model: &SvmModel<T>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = Writer(MAGIC.to_vec());
    w.u32(MODEL_FORMAT_VERSION as usize);
    let dim = model.dim();
    w.u32(dim);
    w.u32(model.classes.len());
    for &c in &model.classes {
        w.u16(c);
    }
    let params = model.machines.first().map(|m| m.params);
    let params = params.ok_or_else(|| Error::InvalidArgument("model has no machines".into()))?;
    w.u32(params.degree as usize);
    w.f64(params.gamma);
    w.f64(params.coef0);
    w.f64(params.penalty_c);
    for (&lo, &hi) in model.scaling.mins.iter().zip(&model.scaling.maxs) {
        w.f64(lo);
        w.f64(hi);
    }
    w.u32(model.machines.len());
    for (&(a, b), m) in model.pairs.iter().zip(&model.machines) {
        w.u16(a);
        w.u16(b);
        w.f64(m.bias);
        w.u32(m.support_vectors.len());
        for ((sv, &coef), &idx) in m.support_vectors.iter().zip(&m.coefficients).zip(&m.support_indices) {
            w.u32(idx);
            w.f64(coef);
            for &v in sv {
                w.f64(v);
            }
        }
    }
    fs::write(path, w.0).map_err(|e| Error::io(path, e))
}

pub fn read_model<T: Real>(path: impl AsRef<Path>) -> Result<SvmModel<T>> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    parse(&bytes).map_err(|m| Error::format(path, m))
}

fn parse<T: Real>(bytes: &[u8]) -> Result<SvmModel<T>, String> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(8)? != MAGIC {
        return Err("not a model file (bad magic)".into());
    }
    let version = r.u32()?;
    if version != MODEL_FORMAT_VERSION as usize {
        return Err(format!("unsupported model version {version}"));
    }
    let dim = r.u32()?;
    let class_count = r.u32()?;
    let classes = (0..class_count).map(|_| r.u16()).collect::<Result<Vec<_>, _>>()?;
    let degree = r.u32()? as u32;
    let (gamma, coef0, penalty_c) = (r.f64()?, r.f64()?, r.f64()?);
    let params = KernelParams::new(degree, gamma, coef0, penalty_c).map_err(|e| e.to_string())?;
    let mut mins = Vec::with_capacity(dim);
    let mut maxs = Vec::with_capacity(dim);
    for _ in 0..dim {
        mins.push(r.f64()?);
        maxs.push(r.f64()?);
    }
    let machine_count = r.u32()?;
    if machine_count != class_count * class_count.saturating_sub(1) / 2 {
        return Err(format!("{machine_count} machines for {class_count} classes"));
    }
    let mut pairs = Vec::with_capacity(machine_count);
    let mut machines = Vec::with_capacity(machine_count);
    for _ in 0..machine_count {
        pairs.push((r.u16()?, r.u16()?));
        let bias = r.f64()?;
        let n_sv = r.u32()?;
        let mut support_vectors = Vec::with_capacity(n_sv);
        let mut coefficients = Vec::with_capacity(n_sv);
        let mut support_indices = Vec::with_capacity(n_sv);
        for _ in 0..n_sv {
            support_indices.push(r.u32()?);
            coefficients.push(r.f64()?);
            support_vectors.push((0..dim).map(|_| r.f64()).collect::<Result<Vec<T>, _>>()?);
        }
        machines.push(BinaryModel {
            support_vectors,
            coefficients,
            support_indices,
            bias,
            params,
        });
    }
    if r.pos != bytes.len() {
        return Err("trailing bytes after model".into());
    }
    Ok(SvmModel {
        classes,
        pairs,
        machines,
        scaling: ScaleParams { mins, maxs },
    })
}
