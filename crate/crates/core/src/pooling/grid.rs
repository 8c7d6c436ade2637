use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Candidate pooling amounts, strictly increasing, starting at 0 and
/// optionally ending at `+inf`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct AlphaGrid {
    values: Vec<f64>,
}

impl AlphaGrid {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyGrid);
        }
        if values[0] != 0.0 {
            return Err(Error::InvalidGrid("grid must start at 0".into()));
        }
        for (j, &a) in values.iter().enumerate() {
            if a.is_nan() || a < 0.0 {
                return Err(Error::InvalidGrid(format!("invalid value {a}")));
            }
            if a == f64::INFINITY && j + 1 != values.len() {
                return Err(Error::InvalidGrid("+inf may only appear last".into()));
            }
        }
        if values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidGrid("values must be strictly increasing".into()));
        }
        Ok(Self { values })
    }

    /// `n` equally spaced points on `[0, max]`, plus `+inf` if requested.
    pub fn linspace(n: usize, max: f64, with_infinity: bool) -> Result<Self> {
        let mut values: Vec<f64> = match n {
            0 => Vec::new(),
            1 => vec![0.0],
            _ => (0..n).map(|j| max * j as f64 / (n - 1) as f64).collect(),
        };
        if with_infinity {
            values.push(f64::INFINITY);
        }
        Self::new(values)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// 120 points on `[0, 180]` followed by `+inf`.
impl Default for AlphaGrid {
    fn default() -> Self {
        Self::linspace(120, 180.0, true).expect("default grid is valid")
    }
}

impl TryFrom<Vec<f64>> for AlphaGrid {
    type Error = Error;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        Self::new(values)
    }
}

impl From<AlphaGrid> for Vec<f64> {
    fn from(g: AlphaGrid) -> Self {
        g.values
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_grid_shape() {
        let g = AlphaGrid::default();
        assert_eq!(g.len(), 121);
        assert_eq!(g.values()[0], 0.0);
        assert_eq!(g.values()[119], 180.0);
        assert!(g.values()[120].is_infinite());
    }

    #[test]
    fn rejects_bad_grids() {
        assert_eq!(AlphaGrid::new(vec![]), Err(Error::EmptyGrid));
        assert!(AlphaGrid::new(vec![1.0, 2.0]).is_err());
        assert!(AlphaGrid::new(vec![0.0, 2.0, 2.0]).is_err());
        assert!(AlphaGrid::new(vec![0.0, f64::INFINITY, 3.0]).is_err());
        assert!(AlphaGrid::new(vec![0.0, f64::INFINITY]).is_ok());
    }
}
