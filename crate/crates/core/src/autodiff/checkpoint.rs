//! Binary parameter container. All integers and floats are little-endian.
//!
//! ```text
//! offset  size   field
//! 0       8      magic b"GMMLGCKP"
//! 8       4      format version, u32 (currently 1)
//! 12      4      entry count, u32
//! then for each entry, in store order:
//!         4      name length in bytes, u32
//!         n      name, UTF-8
//!         1      dtype, u8: 1 = f64, 2 = f32
//!         1      rank, u8 (always 2)
//!         8*rank dims, u64 each (rows, cols)
//!         w*N    payload, row-major, w = 8 or 4, N = rows*cols
//! ```

use std::io::{Read, Write};

use super::{ParamStore, Tensor, TensorError};

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"GMMLGCKP";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DType {
    F64,
    F32,
}

impl DType {
    fn code(self) -> u8 {
        match self {
            DType::F64 => 1,
            DType::F32 => 2,
        }
    }
}

fn bad(msg: impl Into<String>) -> TensorError {
    TensorError::Checkpoint(msg.into())
}

pub fn save_checkpoint(
    store: &ParamStore,
    dtype: DType,
    mut w: impl Write,
) -> Result<(), TensorError> {
    w.write_all(CHECKPOINT_MAGIC)?;
    w.write_all(&CHECKPOINT_VERSION.to_le_bytes())?;
    w.write_all(&(store.len() as u32).to_le_bytes())?;
    for (name, t) in store.iter() {
        w.write_all(&(name.len() as u32).to_le_bytes())?;
        w.write_all(name.as_bytes())?;
        w.write_all(&[dtype.code(), 2])?;
        w.write_all(&(t.rows as u64).to_le_bytes())?;
        w.write_all(&(t.cols as u64).to_le_bytes())?;
        for &x in &t.data {
            match dtype {
                DType::F64 => w.write_all(&x.to_le_bytes())?,
                DType::F32 => w.write_all(&(x as f32).to_le_bytes())?,
            }
        }
    }
    Ok(())
}

fn read_array<const N: usize>(r: &mut impl Read) -> Result<[u8; N], TensorError> {
    let mut b = [0u8; N];
    r.read_exact(&mut b)
        .map_err(|e| bad(format!("truncated checkpoint: {e}")))?;
    Ok(b)
}

pub fn load_checkpoint(mut r: impl Read) -> Result<ParamStore, TensorError> {
    if &read_array::<8>(&mut r)? != CHECKPOINT_MAGIC {
        return Err(bad("bad magic bytes"));
    }
    let version = u32::from_le_bytes(read_array(&mut r)?);
    if version != CHECKPOINT_VERSION {
        return Err(bad(format!("unsupported checkpoint version {version}")));
    }
    let count = u32::from_le_bytes(read_array(&mut r)?);
    let mut store = ParamStore::new();
    for _ in 0..count {
        let len = u32::from_le_bytes(read_array(&mut r)?) as usize;
        let mut name = vec![0u8; len];
        r.read_exact(&mut name)
            .map_err(|e| bad(format!("truncated name: {e}")))?;
        let name = String::from_utf8(name).map_err(|_| bad("name is not UTF-8"))?;
        let [dtype, rank] = read_array::<2>(&mut r)?;
        if rank != 2 {
            return Err(bad(format!("{name}: rank {rank} unsupported")));
        }
        let rows = u64::from_le_bytes(read_array(&mut r)?) as usize;
        let cols = u64::from_le_bytes(read_array(&mut r)?) as usize;
        let n = rows
            .checked_mul(cols)
            .ok_or_else(|| bad(format!("{name}: shape overflow")))?;
        let mut data = Vec::with_capacity(n.min(1 << 24));
        for _ in 0..n {
            let x = match dtype {
                1 => f64::from_le_bytes(read_array(&mut r)?),
                2 => f32::from_le_bytes(read_array(&mut r)?) as f64,
                d => return Err(bad(format!("{name}: unknown dtype {d}"))),
            };
            data.push(x);
        }
        store.insert(&name, Tensor { rows, cols, data })?;
    }
    Ok(store)
}

/// Copies checkpoint values into `target`, which must have the same names
/// and shapes.
pub fn restore_into(target: &mut ParamStore, loaded: &ParamStore) -> Result<(), TensorError> {
    if target.names() != loaded.names() {
        return Err(bad("parameter names differ from the model layout"));
    }
    for (dst, src) in target.tensors_mut().iter_mut().zip(loaded.tensors()) {
        if dst.shape() != src.shape() {
            return Err(TensorError::ShapeMismatch {
                op: "restore_into",
                left: dst.shape(),
                right: src.shape(),
            });
        }
        dst.data.copy_from_slice(&src.data);
    }
    Ok(())
}
