//! JSON problem files.
//!
//! ```json
//! {
//!   "A": [[...], ...], "B1": ..., "B2": ..., "C": ..., "D": ...,
//!   "vertices": [{"A": ..., "B2": ...}],
//!   "blocks": {"rowDims": [...], "colDims": [...]},
//!   "forbidden": [[i, j], ...]
//! }
//! ```
//!
//! Matrices are row-major arrays of rows; forbidden entries are 1-based.
//! `vertices` defaults to the nominal `(A, B2)` and `forbidden` to empty.

use std::path::Path;

use nalgebra::DMatrix;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    assemble_standard_form, BlockStructure, ForbiddenSet, LtiSystem, StandardForm, Vertex, VertexSet,
};

type Rows = Vec<Vec<f64>>;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct VertexFile {
    #[serde(rename = "A")]
    a: Rows,
    #[serde(rename = "B2")]
    b2: Rows,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "camelCase")]
struct BlocksFile {
    row_dims: Vec<usize>,
    col_dims: Vec<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProblemFile {
    #[serde(rename = "A")]
    a: Rows,
    #[serde(rename = "B1")]
    b1: Rows,
    #[serde(rename = "B2")]
    b2: Rows,
    #[serde(rename = "C")]
    c: Rows,
    #[serde(rename = "D")]
    d: Rows,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    vertices: Option<Vec<VertexFile>>,
    blocks: BlocksFile,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    forbidden: Option<Vec<[usize; 2]>>,
}

/// A parsed and validated problem instance.
#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    pub system: LtiSystem,
    pub vertices: VertexSet,
    pub blocks: BlockStructure,
    pub forbidden: ForbiddenSet,
    /// Whether the file listed vertices explicitly.
    explicit_vertices: bool,
}

fn parse_err(context: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Parse { context: context.into(), message: message.into() }
}

pub fn matrix_from_rows(name: &str, rows: &Rows) -> Result<DMatrix<f64>> {
    let Some(first) = rows.first() else {
        return Err(parse_err(name, "matrix has no rows"));
    };
    let cols = first.len();
    if cols == 0 {
        return Err(parse_err(name, "matrix has no columns"));
    }
    for (i, row) in rows.iter().enumerate() {
        if row.len() != cols {
            return Err(parse_err(
                format!("{name} row {}", i + 1),
                format!("ragged matrix: {} entries, expected {cols}", row.len()),
            ));
        }
    }
    Ok(DMatrix::from_fn(rows.len(), cols, |i, j| rows[i][j]))
}

pub fn rows_from_matrix(m: &DMatrix<f64>) -> Rows {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

fn json_error(origin: &str, e: serde_json::Error) -> Error {
    parse_err(format!("{origin}:{}:{}", e.line(), e.column()), e.to_string())
}

impl Problem {
    pub fn new(system: LtiSystem, vertices: Option<VertexSet>, blocks: BlockStructure, forbidden: ForbiddenSet) -> Result<Self> {
        blocks.check(system.m(), system.n())?;
        let explicit_vertices = vertices.is_some();
        let vertices = vertices.unwrap_or_else(|| VertexSet::nominal(&system));
        Ok(Problem { system, vertices, blocks, forbidden, explicit_vertices })
    }

    pub fn from_json_str(text: &str, origin: &str) -> Result<Self> {
        let file: ProblemFile = serde_json::from_str(text).map_err(|e| json_error(origin, e))?;
        let system = LtiSystem::new(
            matrix_from_rows("A", &file.a)?,
            matrix_from_rows("B1", &file.b1)?,
            matrix_from_rows("B2", &file.b2)?,
            matrix_from_rows("C", &file.c)?,
            matrix_from_rows("D", &file.d)?,
        )?;
        let (n, m) = (system.n(), system.m());
        let vertices = match &file.vertices {
            Some(list) => {
                let mut out = Vec::with_capacity(list.len());
                for (k, v) in list.iter().enumerate() {
                    out.push(Vertex {
                        a: matrix_from_rows(&format!("vertices[{k}].A"), &v.a)?,
                        b2: matrix_from_rows(&format!("vertices[{k}].B2"), &v.b2)?,
                    });
                }
                Some(VertexSet::new(out, n, m)?)
            }
            None => None,
        };
        let blocks = BlockStructure::new(file.blocks.row_dims, file.blocks.col_dims)
            .map_err(|e| parse_err("blocks", e.to_string()))?;
        let mut entries = Vec::new();
        for (k, &[i, j]) in file.forbidden.iter().flatten().enumerate() {
            if i == 0 || j == 0 || i > m || j > n {
                return Err(parse_err(
                    format!("forbidden[{k}]"),
                    format!("entry ({i}, {j}) outside the 1-based {m}x{n} gain"),
                ));
            }
            entries.push((i - 1, j - 1));
        }
        Problem::new(system, vertices, blocks, ForbiddenSet::new(entries))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json_str(&text, &path.display().to_string())
    }

    pub fn to_json_string(&self) -> Result<String> {
        let file = ProblemFile {
            a: rows_from_matrix(&self.system.a),
            b1: rows_from_matrix(&self.system.b1),
            b2: rows_from_matrix(&self.system.b2),
            c: rows_from_matrix(&self.system.c),
            d: rows_from_matrix(&self.system.d),
            vertices: self.explicit_vertices.then(|| {
                self.vertices
                    .iter()
                    .map(|v| VertexFile { a: rows_from_matrix(&v.a), b2: rows_from_matrix(&v.b2) })
                    .collect()
            }),
            blocks: BlocksFile {
                row_dims: self.blocks.row_dims().to_vec(),
                col_dims: self.blocks.col_dims().to_vec(),
            },
            forbidden: (!self.forbidden.is_empty())
                .then(|| self.forbidden.entries().iter().map(|&(i, j)| [i + 1, j + 1]).collect()),
        };
        serde_json::to_string_pretty(&file).map_err(|e| Error::Numerical(format!("serializing problem: {e}")))
    }

    pub fn standard_form(&self) -> Result<StandardForm> {
        assemble_standard_form(&self.system, &self.vertices, &self.blocks, &self.forbidden)
    }
}

/// Parses a flat JSON config object, rejecting unknown keys.
pub fn parse_config<T: DeserializeOwned>(text: &str, origin: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| json_error(origin, e))
}

pub fn load_config<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)?;
    parse_config(&text, &path.display().to_string())
}
