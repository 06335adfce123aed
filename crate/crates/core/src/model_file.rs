//! JSON model files: row-major nested arrays for `A`, `B`, `Q`, `R` and an
//! optional `W` (identity when absent).

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matops::{Matrix, SystemModel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub comment: Option<String>,
    #[serde(rename = "A")]
    pub a: Vec<Vec<f64>>,
    #[serde(rename = "B")]
    pub b: Vec<Vec<f64>>,
    #[serde(rename = "Q")]
    pub q: Vec<Vec<f64>>,
    #[serde(rename = "R")]
    pub r: Vec<Vec<f64>>,
    #[serde(rename = "W", default, skip_serializing_if = "Option::is_none")]
    pub w: Option<Vec<Vec<f64>>>,
}

fn to_matrix(name: &str, rows: &[Vec<f64>]) -> Result<Matrix> {
    let nrows = rows.len();
    if nrows == 0 {
        return Err(Error::InvalidModel(format!("{name} is empty")));
    }
    let ncols = rows[0].len();
    if ncols == 0 || rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::InvalidModel(format!("{name} is not a rectangular array")));
    }
    if rows.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::InvalidModel(format!("{name} has non-finite entries")));
    }
    Ok(Matrix::from_row_iterator(nrows, ncols, rows.iter().flatten().copied()))
}

fn from_matrix(m: &Matrix) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

impl ModelFile {
    pub fn parse(json: &str) -> Result<Self> {
        serde_json::from_str(json).map_err(|e| Error::InvalidModel(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidModel(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn to_model(&self) -> Result<SystemModel> {
        let a = to_matrix("A", &self.a)?;
        let w = match &self.w {
            Some(w) => to_matrix("W", w)?,
            None => Matrix::identity(a.nrows(), a.nrows()),
        };
        SystemModel::new(a, to_matrix("B", &self.b)?, to_matrix("Q", &self.q)?, to_matrix("R", &self.r)?, w)
    }

    pub fn from_model(model: &SystemModel, name: Option<String>) -> Self {
        Self {
            name,
            comment: None,
            a: from_matrix(model.a()),
            b: from_matrix(model.b()),
            q: from_matrix(model.q()),
            r: from_matrix(model.r()),
            w: Some(from_matrix(model.w())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_w_is_identity() {
        let f = ModelFile::parse(r#"{"A": [[1, 0], [0, 1]], "B": [[0], [1]], "Q": [[1, 0], [0, 1]], "R": [[1]]}"#).unwrap();
        let m = f.to_model().unwrap();
        assert_eq!(*m.w(), Matrix::identity(2, 2));
    }

    #[test]
    fn ragged_arrays_are_rejected() {
        let f = ModelFile::parse(r#"{"A": [[1, 0], [0]], "B": [[0], [1]], "Q": [[1, 0], [0, 1]], "R": [[1]]}"#).unwrap();
        assert_eq!(f.to_model().unwrap_err().kind(), "InvalidModel");
        assert!(ModelFile::parse("{").is_err());
    }

    #[test]
    fn round_trip_through_model() {
        let m = SystemModel::scalar(0.5, 1.0, 2.0, 3.0, 4.0).unwrap();
        let f = ModelFile::from_model(&m, Some("s".into()));
        assert_eq!(f.to_model().unwrap(), m);
    }
}
