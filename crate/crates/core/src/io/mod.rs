//! Persistence: binary frame stacks, parameter files, and CSV tables.

mod params;
mod stack;
mod table;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};

pub use params::{ParamsFile, Provenance};
pub use stack::{decode_stack, encode_stack, read_stack, write_stack, Dtype, HEADER_LEN, MAGIC};
pub use table::{
    export_curve, export_grid, export_stack_csv, import_frame_files, import_long_csv, Metadata,
};

/// Replace `path` with `bytes` atomically.
pub fn write_file_atomic(path: impl AsRef<Path>, bytes: &[u8]) -> Result<()> {
    atomic_write(path.as_ref(), |w| w.write_all(bytes))
}

/// Write through a temporary file in the destination directory, then rename
/// over `path`.
pub(crate) fn atomic_write(
    path: &Path,
    body: impl FnOnce(&mut BufWriter<&File>) -> std::io::Result<()>,
) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    {
        let mut w = BufWriter::new(tmp.as_file());
        body(&mut w).and_then(|_| w.flush()).map_err(|e| Error::io(path, e))?;
    }
    tmp.as_file().sync_all().map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}
