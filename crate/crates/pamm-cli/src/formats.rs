//! On-disk formats: the binary matrix container, a plain-text CSV fallback,
//! and the compressed-activation blob. All binary payloads are little-endian;
//! every write goes through a temp-file-then-rename so readers never observe
//! a half-written file.

use std::fs;
use std::path::{Path, PathBuf};

use pamm_core::{CompressedActivation, DenseMatrix};

use crate::errors::{CliError, CliResult};

pub const MATRIX_MAGIC: &[u8; 4] = b"PAMM";
pub const COMPRESSED_MAGIC: &[u8; 4] = b"PAMC";
pub const FORMAT_VERSION: u16 = 1;

/// A matrix file in either precision. The compression pipeline runs in f32;
/// f64 files exist for oracle data and are cast down on use.
#[derive(Debug, Clone, PartialEq)]
pub enum MatrixData {
    F32(DenseMatrix<f32>),
    F64(DenseMatrix<f64>),
}

impl MatrixData {
    pub fn shape(&self) -> (usize, usize) {
        match self {
            MatrixData::F32(m) => m.shape(),
            MatrixData::F64(m) => m.shape(),
        }
    }

    pub fn dtype_name(&self) -> &'static str {
        match self {
            MatrixData::F32(_) => "f32",
            MatrixData::F64(_) => "f64",
        }
    }

    pub fn into_f32(self) -> DenseMatrix<f32> {
        match self {
            MatrixData::F32(m) => m,
            MatrixData::F64(m) => m.cast(),
        }
    }
}

/// Writes `bytes` next to `path` and renames into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    if let Some(dir) = dir {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    let file_name = path
        .file_name()
        .ok_or_else(|| CliError::file(path, "output path has no file name"))?;
    let mut tmp = PathBuf::from(path);
    tmp.set_file_name(format!(".{}.tmp-{}", file_name.to_string_lossy(), std::process::id()));
    fs::write(&tmp, bytes).map_err(|e| CliError::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| CliError::io(path, e))
}

struct Reader<'a> {
    buf: &'a [u8],
    off: usize,
    path: &'a Path,
}

impl<'a> Reader<'a> {
    fn new(buf: &'a [u8], path: &'a Path) -> Self {
        Self { buf, off: 0, path }
    }

    fn take(&mut self, len: usize, what: &str) -> CliResult<&'a [u8]> {
        if self.buf.len() - self.off < len {
            return Err(CliError::file(
                self.path,
                format!("truncated file: missing {what} at offset {}", self.off),
            ));
        }
        let s = &self.buf[self.off..self.off + len];
        self.off += len;
        Ok(s)
    }

    fn u16(&mut self, what: &str) -> CliResult<u16> {
        Ok(u16::from_le_bytes(self.take(2, what)?.try_into().unwrap()))
    }

    fn u64(&mut self, what: &str) -> CliResult<u64> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }

    fn f64(&mut self, what: &str) -> CliResult<f64> {
        Ok(f64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }

    fn usize(&mut self, what: &str) -> CliResult<usize> {
        let v = self.u64(what)?;
        usize::try_from(v)
            .map_err(|_| CliError::file(self.path, format!("{what} {v} does not fit this platform")))
    }

    fn f32_vec(&mut self, count: usize, what: &str) -> CliResult<Vec<f32>> {
        let bytes = self.take(count * 4, what)?;
        Ok(bytes.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap())).collect())
    }

    fn done(&self, what: &str) -> CliResult<()> {
        if self.off != self.buf.len() {
            return Err(CliError::file(
                self.path,
                format!("{} trailing bytes after {what}", self.buf.len() - self.off),
            ));
        }
        Ok(())
    }
}

fn checked_dims(path: &Path, rows: usize, cols: usize) -> CliResult<usize> {
    if rows == 0 || cols == 0 {
        return Err(CliError::file(path, "matrix dimensions must be positive"));
    }
    rows.checked_mul(cols)
        .ok_or_else(|| CliError::file(path, format!("dimensions {rows}x{cols} overflow")))
}

pub fn write_matrix_f32(path: &Path, m: &DenseMatrix<f32>) -> CliResult<()> {
    let mut out = Vec::with_capacity(19 + m.data().len() * 4);
    out.extend_from_slice(MATRIX_MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(m.rows() as u64).to_le_bytes());
    out.extend_from_slice(&(m.cols() as u64).to_le_bytes());
    out.push(0u8);
    for &v in m.data() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    write_atomic(path, &out)
}

pub fn write_matrix_f64(path: &Path, m: &DenseMatrix<f64>) -> CliResult<()> {
    let mut out = Vec::with_capacity(19 + m.data().len() * 8);
    out.extend_from_slice(MATRIX_MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(m.rows() as u64).to_le_bytes());
    out.extend_from_slice(&(m.cols() as u64).to_le_bytes());
    out.push(1u8);
    for &v in m.data() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    write_atomic(path, &out)
}

/// Plain text, one matrix row per line, comma separators. Values print in
/// Rust's shortest round-trip decimal form, so f32 data survives the
/// text round trip exactly.
pub fn write_matrix_csv(path: &Path, m: &DenseMatrix<f32>) -> CliResult<()> {
    let mut out = String::new();
    for i in 0..m.rows() {
        for (j, v) in m.row(i).iter().enumerate() {
            if j > 0 {
                out.push(',');
            }
            out.push_str(&v.to_string());
        }
        out.push('\n');
    }
    write_atomic(path, out.as_bytes())
}

fn parse_matrix_binary(path: &Path, bytes: &[u8]) -> CliResult<MatrixData> {
    let mut r = Reader::new(bytes, path);
    r.take(4, "magic")?;
    let version = r.u16("format version")?;
    if version != FORMAT_VERSION {
        return Err(CliError::file(path, format!("unsupported matrix format version {version}")));
    }
    let rows = r.usize("row count")?;
    let cols = r.usize("column count")?;
    let count = checked_dims(path, rows, cols)?;
    let dtype = r.take(1, "dtype")?[0];
    let data = match dtype {
        0 => {
            let data = r.f32_vec(count, "f32 payload")?;
            MatrixData::F32(DenseMatrix::from_vec(rows, cols, data)?)
        }
        1 => {
            let bytes = r.take(count * 8, "f64 payload")?;
            let data: Vec<f64> =
                bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
            MatrixData::F64(DenseMatrix::from_vec(rows, cols, data)?)
        }
        other => {
            return Err(CliError::file(path, format!("unknown dtype byte {other}")));
        }
    };
    r.done("matrix payload")?;
    Ok(data)
}

fn parse_matrix_csv(path: &Path, bytes: &[u8]) -> CliResult<MatrixData> {
    let text = std::str::from_utf8(bytes).map_err(|_| {
        CliError::file(path, "not a matrix file: bad magic and not valid text either")
    })?;
    let mut rows: Vec<Vec<f32>> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let row: Vec<f32> = line
            .split(',')
            .map(|tok| {
                tok.trim().parse::<f32>().map_err(|_| {
                    CliError::file(
                        path,
                        format!("line {}: '{}' is not a number", lineno + 1, tok.trim()),
                    )
                })
            })
            .collect::<CliResult<_>>()?;
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return Err(CliError::file(
                    path,
                    format!(
                        "line {}: {} values, expected {} as in the first row",
                        lineno + 1,
                        row.len(),
                        first.len()
                    ),
                ));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(CliError::file(path, "no matrix rows found"));
    }
    let r = rows.len();
    let c = rows[0].len();
    let flat: Vec<f32> = rows.into_iter().flatten().collect();
    Ok(MatrixData::F32(DenseMatrix::from_vec(r, c, flat)?))
}

/// Reads a matrix file, sniffing the binary magic and falling back to CSV.
pub fn read_matrix(path: &Path) -> CliResult<MatrixData> {
    let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    if bytes.len() >= 4 && &bytes[..4] == MATRIX_MAGIC {
        parse_matrix_binary(path, &bytes)
    } else if bytes.len() >= 4 && &bytes[..4] == COMPRESSED_MAGIC {
        Err(CliError::file(
            path,
            "this is a compressed-activation file, not a matrix; pass it as --compressed",
        ))
    } else {
        parse_matrix_csv(path, &bytes)
    }
}

/// Epsilon = infinity (tolerance disabled) is stored as NaN; likewise an
/// undefined beta (every row dropped). The reader restores both sentinels.
pub fn write_compressed(path: &Path, comp: &CompressedActivation<f32>) -> CliResult<()> {
    let mut out = Vec::with_capacity(70 + comp.generators.data().len() * 4 + comp.b * 8);
    out.extend_from_slice(COMPRESSED_MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(comp.b as u64).to_le_bytes());
    out.extend_from_slice(&(comp.n as u64).to_le_bytes());
    out.extend_from_slice(&(comp.k as u64).to_le_bytes());
    out.extend_from_slice(&(comp.eta as u64).to_le_bytes());
    let eps = if comp.epsilon.is_infinite() { f64::NAN } else { comp.epsilon };
    out.extend_from_slice(&eps.to_le_bytes());
    let beta = comp.beta.map(|b| b as f64).unwrap_or(f64::NAN);
    out.extend_from_slice(&beta.to_le_bytes());
    out.extend_from_slice(&comp.seed.to_le_bytes());
    for &v in comp.generators.data() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for &v in &comp.alpha {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for &v in &comp.assignments {
        out.extend_from_slice(&v.to_le_bytes());
    }
    write_atomic(path, &out)
}

pub fn read_compressed(path: &Path) -> CliResult<CompressedActivation<f32>> {
    let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    if bytes.len() < 4 || &bytes[..4] != COMPRESSED_MAGIC {
        return Err(CliError::file(path, "not a compressed-activation file (bad magic)"));
    }
    let mut r = Reader::new(&bytes, path);
    r.take(4, "magic")?;
    let version = r.u16("format version")?;
    if version != FORMAT_VERSION {
        return Err(CliError::file(path, format!("unsupported format version {version}")));
    }
    let b = r.usize("row count")?;
    let n = r.usize("column count")?;
    let k = r.usize("generator count")?;
    let eta = r.usize("drop count")?;
    let eps_raw = r.f64("epsilon")?;
    let beta_raw = r.f64("beta")?;
    let seed = r.u64("seed")?;

    if b == 0 || n == 0 || k == 0 {
        return Err(CliError::file(path, "dimensions must be positive"));
    }
    if k > b {
        return Err(CliError::file(path, format!("generator count {k} exceeds row count {b}")));
    }
    if eta > b {
        return Err(CliError::file(path, format!("drop count {eta} exceeds row count {b}")));
    }
    let gen_count = checked_dims(path, k, n)?;
    let generators = DenseMatrix::from_vec(k, n, r.f32_vec(gen_count, "generator payload")?)?;
    let alpha = r.f32_vec(b, "alpha payload")?;
    let f_bytes = r.take(b * 4, "assignment payload")?;
    let assignments: Vec<u32> =
        f_bytes.chunks_exact(4).map(|c| u32::from_le_bytes(c.try_into().unwrap())).collect();
    r.done("compressed payload")?;

    if let Some(&bad) = assignments.iter().find(|&&j| j as usize >= k) {
        return Err(CliError::file(path, format!("assignment {bad} out of range for k={k}")));
    }
    let epsilon = if eps_raw.is_nan() { f64::INFINITY } else { eps_raw };
    if epsilon < 0.0 {
        return Err(CliError::file(path, format!("negative epsilon {epsilon}")));
    }
    let beta = if beta_raw.is_nan() { None } else { Some(beta_raw as f32) };

    Ok(CompressedActivation { generators, assignments, alpha, beta, b, n, k, eta, epsilon, seed })
}
