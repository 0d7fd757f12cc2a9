//! JSON interchange format: complex entries as `[re, im]`, row-major nesting.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use stochmap_core::dilation::{Dilation, KrausSlot};
use stochmap_core::linalg::{c, CMatrix, Metric};
use stochmap_core::{CanonicalDecomposition, DynamicalMap, ReservoirState};

use crate::error::CliError;

pub type Grid = Vec<Vec<[f64; 2]>>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Density,
    MapA,
    MapB,
    Unitary,
    Decomposition,
    Dilation,
    Parameters,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecompositionPayload {
    pub m: usize,
    pub n: usize,
    pub zero_count: usize,
    pub eigenvalues: Vec<f64>,
    pub positive_ops: Vec<Grid>,
    pub negative_ops: Vec<Grid>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlotEntry {
    pub reservoir_index: usize,
    pub sign: i8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DilationPayload {
    pub strategy: String,
    pub dim_reservoir: usize,
    /// Signature of the reservoir factor; the extended metric repeats it per system index.
    pub reservoir_signature: Vec<i8>,
    pub reservoir_eigenvalues: Vec<f64>,
    pub reservoir_basis: Grid,
    pub kraus_slots: Vec<SlotEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixFile {
    pub kind: Kind,
    pub dim: usize,
    #[serde(default)]
    pub data: Grid,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decomposition: Option<DecompositionPayload>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dilation: Option<DilationPayload>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parameters: Option<serde_json::Value>,
    #[serde(default)]
    pub metadata: BTreeMap<String, String>,
}

pub fn to_grid(m: &CMatrix) -> Grid {
    (0..m.nrows())
        .map(|r| (0..m.ncols()).map(|s| [m[(r, s)].re, m[(r, s)].im]).collect())
        .collect()
}

fn grid_to_matrix(grid: &Grid, rows: usize, cols: usize, what: &str) -> Result<CMatrix, CliError> {
    if grid.len() != rows || grid.iter().any(|row| row.len() != cols) {
        let got_cols = grid.first().map_or(0, Vec::len);
        return Err(CliError::Format(format!(
            "{what}: expected {rows}x{cols} entries, got {}x{got_cols}",
            grid.len()
        )));
    }
    if grid.iter().flatten().flatten().any(|x| !x.is_finite()) {
        return Err(CliError::Format(format!("{what}: non-finite entry")));
    }
    Ok(CMatrix::from_fn(rows, cols, |r, s| {
        let [re, im] = grid[r][s];
        c(re, im)
    }))
}

impl MatrixFile {
    pub fn new(kind: Kind, dim: usize, data: &CMatrix) -> Self {
        let mut metadata = BTreeMap::new();
        metadata.insert("tool_version".into(), env!("CARGO_PKG_VERSION").into());
        Self {
            kind,
            dim,
            data: to_grid(data),
            decomposition: None,
            dilation: None,
            parameters: None,
            metadata,
        }
    }

    pub fn with_meta(mut self, key: &str, value: impl ToString) -> Self {
        self.metadata.insert(key.into(), value.to_string());
        self
    }

    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let file: Self = serde_json::from_str(&text).map_err(|e| CliError::Parse {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        file.check_shape()?;
        Ok(file)
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        fs::write(path, self.to_json()).map_err(|source| CliError::Io {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain data serializes")
    }

    /// Side length `data` must have for this kind.
    fn data_side(&self) -> Result<usize, CliError> {
        let n = self.dim;
        Ok(match self.kind {
            Kind::Density | Kind::Unitary => n,
            Kind::MapA | Kind::MapB | Kind::Decomposition => n * n,
            Kind::Dilation => {
                let payload = self.dilation.as_ref().ok_or_else(|| {
                    CliError::Format("dilation file without a dilation section".into())
                })?;
                n * payload.dim_reservoir
            }
            Kind::Parameters => 0,
        })
    }

    fn check_shape(&self) -> Result<(), CliError> {
        if self.dim == 0 {
            return Err(CliError::Format("dim must be positive".into()));
        }
        let side = self.data_side()?;
        if self.kind == Kind::Parameters {
            if self.parameters.is_none() {
                return Err(CliError::Format(
                    "parameters file without a parameters section".into(),
                ));
            }
            return Ok(());
        }
        grid_to_matrix(&self.data, side, side, "data")?;
        if self.kind == Kind::Decomposition {
            let p = self.decomposition.as_ref().ok_or_else(|| {
                CliError::Format("decomposition file without a decomposition section".into())
            })?;
            if p.positive_ops.len() != p.m || p.negative_ops.len() != p.n {
                return Err(CliError::Format("operator counts disagree with m, n".into()));
            }
            for op in p.positive_ops.iter().chain(&p.negative_ops) {
                grid_to_matrix(op, self.dim, self.dim, "operator")?;
            }
        }
        if let Some(p) = &self.dilation {
            let r = p.dim_reservoir;
            if p.reservoir_signature.len() != r || p.reservoir_eigenvalues.len() != r {
                return Err(CliError::Format("reservoir description has the wrong length".into()));
            }
            grid_to_matrix(&p.reservoir_basis, r, r, "reservoir_basis")?;
        }
        Ok(())
    }

    pub fn matrix(&self) -> Result<CMatrix, CliError> {
        let side = self.data_side()?;
        grid_to_matrix(&self.data, side, side, "data")
    }

    fn expect_kind(&self, kinds: &[Kind]) -> Result<(), CliError> {
        if kinds.contains(&self.kind) {
            Ok(())
        } else {
            Err(CliError::Format(format!(
                "expected a {} file, got {:?}",
                kinds
                    .iter()
                    .map(|k| format!("{k:?}"))
                    .collect::<Vec<_>>()
                    .join(" or "),
                self.kind
            )))
        }
    }

    pub fn to_map(&self) -> Result<DynamicalMap, CliError> {
        self.expect_kind(&[Kind::MapA, Kind::MapB])?;
        let m = self.matrix()?;
        Ok(match self.kind {
            Kind::MapA => DynamicalMap::from_a_form(m)?,
            _ => DynamicalMap::from_b_form(m)?,
        })
    }

    pub fn from_map(map: &DynamicalMap) -> Self {
        Self::new(Kind::MapA, map.dim(), map.a_form())
    }

    pub fn from_decomposition(dec: &CanonicalDecomposition) -> Self {
        let mut file = Self::new(Kind::Decomposition, dec.dim, dec.reconstruct().b_form());
        file.decomposition = Some(DecompositionPayload {
            m: dec.m(),
            n: dec.n(),
            zero_count: dec.zero_count,
            eigenvalues: dec.eigenvalues.clone(),
            positive_ops: dec.positive_ops.iter().map(to_grid).collect(),
            negative_ops: dec.negative_ops.iter().map(to_grid).collect(),
        });
        file
    }

    pub fn to_decomposition(&self) -> Result<CanonicalDecomposition, CliError> {
        self.expect_kind(&[Kind::Decomposition])?;
        let p = self.decomposition.as_ref().expect("checked on read");
        let ops = |list: &[Grid]| -> Result<Vec<CMatrix>, CliError> {
            list.iter()
                .map(|g| grid_to_matrix(g, self.dim, self.dim, "operator"))
                .collect()
        };
        Ok(CanonicalDecomposition {
            dim: self.dim,
            positive_ops: ops(&p.positive_ops)?,
            negative_ops: ops(&p.negative_ops)?,
            eigenvalues: p.eigenvalues.clone(),
            zero_count: p.zero_count,
        })
    }

    pub fn from_dilation(dil: &Dilation, strategy: &str) -> Self {
        let mut file = Self::new(Kind::Dilation, dil.dim_system(), dil.v());
        let res = dil.reservoir();
        file.dilation = Some(DilationPayload {
            strategy: strategy.into(),
            dim_reservoir: dil.dim_reservoir(),
            reservoir_signature: res.signature().signs().to_vec(),
            reservoir_eigenvalues: res.eigenvalues().to_vec(),
            reservoir_basis: to_grid(res.eigenbasis()),
            kraus_slots: dil
                .kraus_column_map()
                .iter()
                .map(|s| SlotEntry {
                    reservoir_index: s.reservoir_index,
                    sign: s.sign,
                })
                .collect(),
        });
        file
    }

    pub fn to_dilation(&self) -> Result<Dilation, CliError> {
        self.expect_kind(&[Kind::Dilation])?;
        let p = self.dilation.as_ref().expect("checked on read");
        let basis = grid_to_matrix(&p.reservoir_basis, p.dim_reservoir, p.dim_reservoir, "reservoir_basis")?;
        let reservoir = ReservoirState::new(
            p.reservoir_eigenvalues.clone(),
            basis,
            Metric::new(p.reservoir_signature.clone())?,
        )?;
        let slots = p
            .kraus_slots
            .iter()
            .map(|s| KrausSlot {
                reservoir_index: s.reservoir_index,
                sign: s.sign,
            })
            .collect();
        Ok(Dilation::new(self.dim, self.matrix()?, reservoir, slots)?)
    }

    pub fn to_density_matrix(&self) -> Result<CMatrix, CliError> {
        self.expect_kind(&[Kind::Density])?;
        self.matrix()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trip_is_exact() {
        let m = CMatrix::from_fn(2, 2, |r, s| c(0.1 * (r + 1) as f64 / 3.0, -(s as f64) / 7.0));
        let file = MatrixFile::new(Kind::Density, 2, &m);
        let back: MatrixFile = serde_json::from_str(&file.to_json()).unwrap();
        assert_eq!(back.matrix().unwrap(), m);
    }

    #[test]
    fn shape_must_match_kind() {
        let file = MatrixFile::new(Kind::MapA, 2, &CMatrix::zeros(2, 2));
        let back: MatrixFile = serde_json::from_str(&file.to_json()).unwrap();
        assert!(matches!(back.check_shape(), Err(CliError::Format(_))));
    }
}
