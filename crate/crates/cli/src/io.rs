//! File formats: CSV matrices with a `rows,cols` header line, JSON for
//! everything else.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{de::DeserializeOwned, Deserialize, Serialize};
use sparsecert::linalg::{from_rows, Mat, Vector};
use sparsecert::norms::NormTag;
use sparsecert::structures::StructureSpec;

/// A failure attributable to the user's input (exit code 1).
#[derive(Debug)]
pub struct InputError(pub String);

impl fmt::Display for InputError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for InputError {}

pub fn input_err(msg: impl Into<String>) -> InputError {
    InputError(msg.into())
}

fn read(path: &Path) -> Result<String, InputError> {
    fs::read_to_string(path).map_err(|e| input_err(format!("cannot read {}: {e}", path.display())))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, InputError> {
    let text = read(path)?;
    serde_json::from_str(&text).map_err(|e| input_err(format!("{}: {e}", path.display())))
}

pub fn write_text(path: &Path, text: &str) -> Result<(), InputError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| input_err(format!("cannot create {}: {e}", dir.display())))?;
    }
    fs::write(path, text).map_err(|e| input_err(format!("cannot write {}: {e}", path.display())))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), InputError> {
    let mut text = serde_json::to_string_pretty(value).expect("serializable");
    text.push('\n');
    write_text(path, &text)
}

pub fn parse_matrix_csv(text: &str) -> Result<Mat, InputError> {
    let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#'));
    let header = lines.next().ok_or_else(|| input_err("empty matrix file"))?;
    let dims: Vec<usize> = header
        .split(',')
        .map(|t| t.trim().parse::<usize>())
        .collect::<Result<_, _>>()
        .map_err(|_| input_err(format!("matrix header must be 'rows,cols', got '{header}'")))?;
    let [rows, cols] = dims[..] else {
        return Err(input_err(format!("matrix header must be 'rows,cols', got '{header}'")));
    };
    let mut data = Vec::with_capacity(rows);
    for (i, line) in lines.enumerate() {
        let row: Vec<f64> = line
            .split(',')
            .map(|t| t.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| input_err(format!("matrix row {}: {e}", i + 1)))?;
        if row.len() != cols {
            return Err(input_err(format!("matrix row {} has {} entries, expected {cols}", i + 1, row.len())));
        }
        data.push(row);
    }
    if data.len() != rows {
        return Err(input_err(format!("matrix has {} rows, header says {rows}", data.len())));
    }
    if rows == 0 || cols == 0 {
        return Ok(Mat::zeros(rows, cols));
    }
    Ok(from_rows(&data).expect("rectangular"))
}

pub fn read_matrix(path: &Path) -> Result<Mat, InputError> {
    parse_matrix_csv(&read(path)?).map_err(|e| input_err(format!("{}: {e}", path.display())))
}

pub fn format_matrix_csv(m: &Mat) -> String {
    let mut out = format!("{},{}\n", m.nrows(), m.ncols());
    for r in 0..m.nrows() {
        let row: Vec<String> = m.row(r).iter().map(|v| format!("{v:?}")).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// A matrix given inline as rows or as a path to a CSV file, resolved
/// relative to the JSON document that mentions it.
#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(untagged)]
pub enum MatrixSource {
    Path(PathBuf),
    Rows(Vec<Vec<f64>>),
}

impl MatrixSource {
    pub fn load(&self, base: &Path) -> Result<Mat, InputError> {
        match self {
            MatrixSource::Path(p) => read_matrix(&resolve(base, p)),
            MatrixSource::Rows(rows) => {
                if rows.is_empty() {
                    return Err(input_err("inline matrix has no rows"));
                }
                from_rows(rows).ok_or_else(|| input_err("inline matrix rows differ in length"))
            }
        }
    }
}

pub fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

pub fn base_dir(file: &Path) -> PathBuf {
    file.parent().map(Path::to_path_buf).unwrap_or_default()
}

fn default_phi() -> NormTag {
    NormTag::L1
}

/// `recover` input; see `schemas/problem.schema.json`.
#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub structure: StructureSpec,
    pub a: MatrixSource,
    pub y: Vec<f64>,
    #[serde(default = "default_phi")]
    pub phi: NormTag,
    #[serde(default)]
    pub epsilon: f64,
}

pub fn vector(v: &[f64]) -> Vector {
    Vector::from_column_slice(v)
}
