//! Output rendering: JSON keeps full precision (shortest round-trip
//! decimals), the CSV summary rounds to 6 significant digits.

use clap::ValueEnum;
use serde::Serialize;

use crate::error::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    CsvSummary,
}

pub enum Cell {
    Num(f64),
    Text(String),
    Empty,
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<Option<f64>> for Cell {
    fn from(x: Option<f64>) -> Self {
        x.map_or(Cell::Empty, Cell::Num)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

impl From<usize> for Cell {
    fn from(n: usize) -> Self {
        Cell::Text(n.to_string())
    }
}

pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(header: Vec<&'static str>) -> Self {
        Self {
            header,
            rows: Vec::new(),
        }
    }

    pub fn row(&mut self, cells: Vec<Cell>) {
        self.rows.push(cells);
    }

    /// Two-column metric,value table.
    pub fn metrics(items: Vec<(&str, Cell)>) -> Self {
        let mut t = Self::new(vec!["metric", "value"]);
        for (k, v) in items {
            t.row(vec![Cell::from(k), v]);
        }
        t
    }

    pub fn render(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row
                .iter()
                .map(|c| match c {
                    Cell::Num(x) => sig6(*x),
                    Cell::Text(s) => s.clone(),
                    Cell::Empty => String::new(),
                })
                .collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

/// `%.6g`-style formatting.
pub fn sig6(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..6).contains(&exp) {
        let decimals = (5 - exp).max(0) as usize;
        trim_zeros(format!("{x:.decimals$}"))
    } else {
        format!("{}e{exp}", trim_zeros(mantissa.to_string()))
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

/// A finished command result in both renderings.
pub struct Rendered {
    pub json: String,
    pub csv: String,
}

impl Rendered {
    pub fn new<T: Serialize>(value: &T, table: Table) -> Result<Self, CliError> {
        let mut json = serde_json::to_string_pretty(value)
            .map_err(|e| CliError::Violation(format!("unserializable report: {e}")))?;
        json.push('\n');
        Ok(Self {
            json,
            csv: table.render(),
        })
    }

    pub fn text(&self, format: Format) -> &str {
        match format {
            Format::Json => &self.json,
            Format::CsvSummary => &self.csv,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn six_significant_digits() {
        assert_eq!(sig6(0.8535533905932737), "0.853553");
        assert_eq!(sig6(1.0), "1");
        assert_eq!(sig6(-2.5), "-2.5");
        assert_eq!(sig6(123456789.0), "1.23457e8");
        assert_eq!(sig6(1.5e-7), "1.5e-7");
        assert_eq!(sig6(0.00012345678), "0.000123457");
        assert_eq!(sig6(999999.6), "1e6");
        assert_eq!(sig6(0.0), "0");
    }

    #[test]
    fn table_rendering() {
        let mut t = Table::new(vec!["s", "lower"]);
        t.row(vec![0.5.into(), Cell::Empty]);
        assert_eq!(t.render(), "s,lower\n0.5,\n");
    }
}
