//! In-memory observation tables with numeric and categorical factor columns.

use std::collections::BTreeSet;
use std::io::Read;
use std::path::Path;

use crate::error::{ModelError, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum ColumnData {
    Numeric(Vec<f64>),
    Categorical(Vec<String>),
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
}

#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    pub name: String,
    pub data: ColumnData,
}

/// A rectangular table of observations. Columns are either numeric or
/// categorical; categorical levels are whatever strings appear.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FactorTable {
    columns: Vec<Column>,
    nrows: usize,
}

impl FactorTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn column(&self, name: &str) -> Option<&Column> {
        self.columns.iter().find(|c| c.name == name)
    }

    /// Reinterprets a numeric column as categorical, one level per distinct
    /// value. Categorical columns are left alone.
    pub fn make_categorical(&mut self, name: &str) -> Result<()> {
        let col = self
            .columns
            .iter_mut()
            .find(|c| c.name == name)
            .ok_or_else(|| ModelError::Argument(format!("no column `{name}`")))?;
        if let ColumnData::Numeric(v) = &col.data {
            col.data = ColumnData::Categorical(v.iter().map(|x| x.to_string()).collect());
        }
        Ok(())
    }

    pub fn push_numeric(&mut self, name: impl Into<String>, values: Vec<f64>) -> Result<()> {
        self.push(Column { name: name.into(), data: ColumnData::Numeric(values) })
    }

    pub fn push_categorical<S: Into<String>>(
        &mut self,
        name: impl Into<String>,
        values: impl IntoIterator<Item = S>,
    ) -> Result<()> {
        let values = values.into_iter().map(Into::into).collect();
        self.push(Column { name: name.into(), data: ColumnData::Categorical(values) })
    }

    fn push(&mut self, column: Column) -> Result<()> {
        if self.column(&column.name).is_some() {
            return Err(ModelError::Argument(format!("duplicate column `{}`", column.name)));
        }
        if self.columns.is_empty() {
            self.nrows = column.data.len();
        } else if column.data.len() != self.nrows {
            return Err(ModelError::Argument(format!(
                "column `{}` has {} rows, table has {}",
                column.name,
                column.data.len(),
                self.nrows
            )));
        }
        self.columns.push(column);
        Ok(())
    }

    /// Reads a comma-separated table with a header row. A column is numeric
    /// when every cell parses as a finite float, categorical otherwise.
    pub fn from_csv_reader<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
        let mut cells: Vec<Vec<String>> = vec![Vec::new(); headers.len()];
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec?;
            if rec.len() != headers.len() {
                return Err(ModelError::Parse {
                    line: i + 2,
                    msg: format!("expected {} fields, found {}", headers.len(), rec.len()),
                });
            }
            for (col, field) in cells.iter_mut().zip(rec.iter()) {
                col.push(field.to_owned());
            }
        }
        let mut table = FactorTable::new();
        for (name, raw) in headers.into_iter().zip(cells) {
            let parsed: Option<Vec<f64>> =
                raw.iter().map(|s| s.parse::<f64>().ok().filter(|v| v.is_finite())).collect();
            match parsed {
                Some(values) if !raw.is_empty() => table.push_numeric(name, values)?,
                _ => table.push_categorical(name, raw)?,
            }
        }
        Ok(table)
    }

    pub fn from_csv_path(path: impl AsRef<Path>) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::from_csv_reader(std::io::BufReader::new(file))
    }
}

/// Which column is modelled, and whether it is log-transformed first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResponseSpec {
    pub column: String,
    pub log: bool,
}

impl ResponseSpec {
    pub fn raw(column: impl Into<String>) -> Self {
        Self { column: column.into(), log: false }
    }

    pub fn log(column: impl Into<String>) -> Self {
        Self { column: column.into(), log: true }
    }

    /// `log-<column>` selects the natural log of `<column>`; anything else
    /// names a column used as-is.
    pub fn parse(s: &str) -> Self {
        match s.strip_prefix("log-") {
            Some(col) if !col.is_empty() => Self::log(col),
            _ => Self::raw(s),
        }
    }

    pub fn label(&self) -> String {
        if self.log {
            format!("log({})", self.column)
        } else {
            self.column.clone()
        }
    }

    pub fn values(&self, table: &FactorTable) -> Result<Vec<f64>> {
        let col = table
            .column(&self.column)
            .ok_or_else(|| ModelError::Argument(format!("no response column `{}`", self.column)))?;
        let ColumnData::Numeric(v) = &col.data else {
            return Err(ModelError::Argument(format!("response column `{}` is not numeric", self.column)));
        };
        if !self.log {
            return Ok(v.clone());
        }
        v.iter()
            .enumerate()
            .map(|(i, &x)| {
                if x > 0.0 {
                    Ok(x.ln())
                } else {
                    Err(ModelError::Argument(format!("row {}: cannot take log of non-positive response {x}", i + 1)))
                }
            })
            .collect()
    }
}

/// Design-matrix columns contributed by one term.
#[derive(Debug, Clone)]
pub(crate) struct TermColumns {
    pub names: Vec<String>,
    pub columns: Vec<Vec<f64>>,
}

/// Numeric terms enter as-is. Categorical terms are treatment coded: levels
/// sorted lexicographically, the first is the baseline.
pub(crate) fn term_columns(table: &FactorTable, term: &str) -> Result<TermColumns> {
    let col = table.column(term).ok_or_else(|| ModelError::Argument(format!("no column named `{term}`")))?;
    match &col.data {
        ColumnData::Numeric(v) => Ok(TermColumns { names: vec![term.to_owned()], columns: vec![v.clone()] }),
        ColumnData::Categorical(v) => {
            let levels: BTreeSet<&str> = v.iter().map(String::as_str).collect();
            let mut names = Vec::new();
            let mut columns = Vec::new();
            for level in levels.into_iter().skip(1) {
                names.push(format!("{term}{level}"));
                columns.push(v.iter().map(|x| if x == level { 1.0 } else { 0.0 }).collect());
            }
            Ok(TermColumns { names, columns })
        }
    }
}
