use std::io::{Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::NnetError;
use crate::lang::VarKind;

#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    pub name: String,
    pub kind: VarKind,
}

impl Column {
    pub fn new(name: impl Into<String>, kind: VarKind) -> Column {
        Column { name: name.into(), kind }
    }
}

/// Numeric sample matrix; string columns are stored as lengths.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Dataset {
    pub columns: Vec<Column>,
    pub rows: Vec<Vec<f64>>,
}

impl Dataset {
    pub fn new(columns: Vec<Column>) -> Dataset {
        Dataset { columns, rows: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn push(&mut self, row: Vec<f64>) -> Result<(), NnetError> {
        if row.len() != self.columns.len() {
            return Err(NnetError::Shape(format!("row has {} cells, expected {}", row.len(), self.columns.len())));
        }
        if let Some(v) = row.iter().find(|v| !v.is_finite()) {
            return Err(NnetError::Precondition(format!("non-finite value {v} in dataset")));
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    pub fn kind(&self, name: &str) -> Option<VarKind> {
        self.index(name).map(|i| self.columns[i].kind)
    }

    pub fn indices(&self, names: &[String]) -> Result<Vec<usize>, NnetError> {
        names.iter().map(|n| self.index(n).ok_or_else(|| NnetError::UnknownColumn(n.clone()))).collect()
    }

    /// New dataset with only `names`, in that order.
    pub fn select(&self, names: &[String]) -> Result<Dataset, NnetError> {
        let idx = self.indices(names)?;
        Ok(Dataset {
            columns: idx.iter().map(|&i| self.columns[i].clone()).collect(),
            rows: self.rows.iter().map(|r| idx.iter().map(|&i| r[i]).collect()).collect(),
        })
    }

    /// Seeded shuffle, then the first `ratio` of rows go to the first half.
    pub fn split(&self, ratio: f64, seed: u64) -> (Dataset, Dataset) {
        let mut order: Vec<usize> = (0..self.rows.len()).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let cut = ((self.rows.len() as f64) * ratio.clamp(0.0, 1.0)).round() as usize;
        let take = |ix: &[usize]| Dataset { columns: self.columns.clone(), rows: ix.iter().map(|&i| self.rows[i].clone()).collect() };
        (take(&order[..cut]), take(&order[cut..]))
    }

    pub fn from_reader(r: impl Read) -> Result<Dataset, NnetError> {
        let mut rd = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(r);
        let header = rd.headers().map_err(|e| NnetError::Csv(e.to_string()))?.clone();
        let mut columns = Vec::with_capacity(header.len());
        for cell in header.iter() {
            let (name, kind) = cell
                .split_once(':')
                .ok_or_else(|| NnetError::Csv(format!("header cell `{cell}` is not name:kind")))?;
            let kind = match kind {
                "int" => VarKind::Int,
                "real" => VarKind::Real,
                "str" => VarKind::Str,
                other => return Err(NnetError::Csv(format!("unknown column kind `{other}`"))),
            };
            columns.push(Column::new(name, kind));
        }
        let mut d = Dataset::new(columns);
        for (i, rec) in rd.records().enumerate() {
            let rec = rec.map_err(|e| NnetError::Csv(e.to_string()))?;
            let row = rec
                .iter()
                .map(|s| s.parse::<f64>().map_err(|_| NnetError::Csv(format!("row {}: `{s}` is not a number", i + 2))))
                .collect::<Result<Vec<_>, _>>()?;
            d.push(row).map_err(|e| NnetError::Csv(format!("row {}: {e}", i + 2)))?;
        }
        Ok(d)
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Dataset, NnetError> {
        Dataset::from_reader(std::fs::File::open(path)?)
    }

    pub fn to_writer(&self, w: impl Write) -> Result<(), NnetError> {
        let mut wr = csv::Writer::from_writer(w);
        let csv_err = |e: csv::Error| NnetError::Csv(e.to_string());
        wr.write_record(self.columns.iter().map(|c| format!("{}:{}", c.name, c.kind.keyword()))).map_err(csv_err)?;
        for row in &self.rows {
            wr.write_record(row.iter().map(|v| v.to_string())).map_err(csv_err)?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<(), NnetError> {
        self.to_writer(std::io::BufWriter::new(std::fs::File::create(path)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip() {
        let mut d = Dataset::new(vec![Column::new("a", VarKind::Int), Column::new("r", VarKind::Real)]);
        d.push(vec![1.0, 0.1]).unwrap();
        d.push(vec![-7.0, 1e-300]).unwrap();
        let mut buf = Vec::new();
        d.to_writer(&mut buf).unwrap();
        assert!(String::from_utf8_lossy(&buf).starts_with("a:int,r:real\n"));
        assert_eq!(Dataset::from_reader(&buf[..]).unwrap(), d);
    }

    #[test]
    fn bad_csv_is_rejected() {
        assert!(Dataset::from_reader("a,b\n1,2\n".as_bytes()).is_err());
        assert!(Dataset::from_reader("a:int\nx\n".as_bytes()).is_err());
        assert!(Dataset::from_reader("a:int\ninf\n".as_bytes()).is_err());
        assert!(Dataset::from_reader("a:bool\n1\n".as_bytes()).is_err());
    }

    #[test]
    fn split_partitions_rows() {
        let mut d = Dataset::new(vec![Column::new("x", VarKind::Int)]);
        for i in 0..100 {
            d.push(vec![i as f64]).unwrap();
        }
        let (a, b) = d.split(0.8, 1);
        assert_eq!((a.len(), b.len()), (80, 20));
        let mut all: Vec<f64> = a.rows.iter().chain(&b.rows).map(|r| r[0]).collect();
        all.sort_by(f64::total_cmp);
        assert_eq!(all, (0..100).map(|i| i as f64).collect::<Vec<_>>());
        assert_eq!(d.split(0.8, 1), (a, b));
    }
}
