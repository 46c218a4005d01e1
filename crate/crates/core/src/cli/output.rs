//! Tabular pipeline output.

use std::io::Write;

use serde::Serialize;

use super::CliError;

/// One row per grid point, columns in a fixed order.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CurveOutput {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl CurveOutput {
    pub fn new(columns: &[&str]) -> Self {
        Self { columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        assert_eq!(row.len(), self.columns.len(), "row width");
        self.rows.push(row);
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Values of one column, panicking on an unknown name.
    pub fn column(&self, name: &str) -> Vec<f64> {
        let k = self.column_index(name).unwrap_or_else(|| panic!("no column `{name}`"));
        self.rows.iter().map(|r| r[k]).collect()
    }

    /// Header plus rows, floats with 17 significant digits.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), CliError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|v| format!("{v:.16e}")))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("in-memory write");
        String::from_utf8(buf).expect("utf-8")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip_is_exact() {
        let mut c = CurveOutput::new(&["x", "y"]);
        c.push(vec![0.1, 1.0 / 3.0]);
        c.push(vec![-2.5e-9, f64::NAN]);
        let text = c.to_csv_string();
        let mut r = csv::Reader::from_reader(text.as_bytes());
        assert_eq!(r.headers().unwrap(), vec!["x", "y"]);
        let rows: Vec<Vec<f64>> =
            r.records().map(|rec| rec.unwrap().iter().map(|f| f.parse().unwrap()).collect()).collect();
        assert_eq!(rows[0], vec![0.1, 1.0 / 3.0]);
        assert_eq!(rows[1][0], -2.5e-9);
        assert!(rows[1][1].is_nan());
    }
}
