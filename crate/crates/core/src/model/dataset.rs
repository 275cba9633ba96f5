use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnKind {
    Numeric,
    Categorical,
}

impl ColumnKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ColumnKind::Numeric => "numeric",
            ColumnKind::Categorical => "categorical",
        }
    }
}

impl std::str::FromStr for ColumnKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "numeric" => Ok(ColumnKind::Numeric),
            "categorical" => Ok(ColumnKind::Categorical),
            other => Err(Error::InvalidDataset(format!("unknown column kind '{other}'"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ColumnData {
    Numeric(Vec<f64>),
    Categorical(Vec<u32>),
}

impl ColumnData {
    pub fn len(&self) -> usize {
        match self {
            ColumnData::Numeric(v) => v.len(),
            ColumnData::Categorical(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn kind(&self) -> ColumnKind {
        match self {
            ColumnData::Numeric(_) => ColumnKind::Numeric,
            ColumnData::Categorical(_) => ColumnKind::Categorical,
        }
    }

    #[inline]
    pub fn get(&self, row: usize) -> f64 {
        match self {
            ColumnData::Numeric(v) => v[row],
            ColumnData::Categorical(v) => f64::from(v[row]),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Column {
    pub name: String,
    pub data: ColumnData,
}

impl Column {
    pub fn numeric(name: impl Into<String>, values: Vec<f64>) -> Self {
        Column { name: name.into(), data: ColumnData::Numeric(values) }
    }

    pub fn categorical(name: impl Into<String>, codes: Vec<u32>) -> Self {
        Column { name: name.into(), data: ColumnData::Categorical(codes) }
    }

    pub fn kind(&self) -> ColumnKind {
        self.data.kind()
    }
}

/// Column-major table. Numeric values are finite `f64`; categorical values
/// are small integer codes in `[0, cardinality)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    num_rows: usize,
    columns: Vec<Column>,
}

impl Dataset {
    pub fn new(columns: Vec<Column>) -> Result<Self> {
        let num_rows = columns.first().map_or(0, |c| c.data.len());
        for col in &columns {
            if col.data.len() != num_rows {
                return Err(Error::InvalidDataset(format!(
                    "column '{}' has {} values, expected {num_rows}",
                    col.name,
                    col.data.len()
                )));
            }
            if let ColumnData::Numeric(values) = &col.data {
                if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
                    return Err(Error::InvalidDataset(format!(
                        "column '{}' contains non-finite value {bad}",
                        col.name
                    )));
                }
            }
        }
        Ok(Dataset { num_rows, columns })
    }

    pub fn num_rows(&self) -> usize {
        self.num_rows
    }

    pub fn num_columns(&self) -> usize {
        self.columns.len()
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn column(&self, col: usize) -> &Column {
        &self.columns[col]
    }

    pub fn kind(&self, col: usize) -> ColumnKind {
        self.columns[col].kind()
    }

    pub fn kinds(&self) -> Vec<ColumnKind> {
        self.columns.iter().map(Column::kind).collect()
    }

    /// Number of distinct codes a categorical column may take (max code + 1).
    pub fn cardinality(&self, col: usize) -> Option<u32> {
        match &self.columns[col].data {
            ColumnData::Categorical(codes) => Some(codes.iter().max().map_or(0, |m| m + 1)),
            ColumnData::Numeric(_) => None,
        }
    }

    #[inline]
    pub fn value(&self, row: usize, col: usize) -> f64 {
        self.columns[col].data.get(row)
    }

    pub fn row(&self, row: usize) -> Vec<f64> {
        self.columns.iter().map(|c| c.data.get(row)).collect()
    }

    pub fn select_rows(&self, rows: &[usize]) -> Dataset {
        let columns = self
            .columns
            .iter()
            .map(|c| Column {
                name: c.name.clone(),
                data: match &c.data {
                    ColumnData::Numeric(v) => ColumnData::Numeric(rows.iter().map(|&r| v[r]).collect()),
                    ColumnData::Categorical(v) => {
                        ColumnData::Categorical(rows.iter().map(|&r| v[r]).collect())
                    }
                },
            })
            .collect();
        Dataset { num_rows: rows.len(), columns }
    }

    /// Uniform sample without replacement, keeping the original row order.
    pub fn sample<R: Rng + ?Sized>(&self, rows: usize, rng: &mut R) -> Dataset {
        if rows >= self.num_rows {
            return self.clone();
        }
        let mut picked = index::sample(rng, self.num_rows, rows).into_vec();
        picked.sort_unstable();
        self.select_rows(&picked)
    }
}
