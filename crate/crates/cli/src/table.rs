//! Tabular output shared by every command.
//!
//! CSV holds the table columns followed by the summary fields, which repeat
//! on every row. JSON holds the resolved run configuration, the units, the
//! rows as objects and the summary. Floats are written with 17 significant
//! digits in both.

use std::io::Write;

use serde_json::{Map, Number, Value};

use crate::args::Format;

#[derive(Debug, Clone)]
pub enum Cell {
    F(f64),
    U(u64),
    B(bool),
    S(String),
    Null,
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::F(v)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::U(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::U(v as u64)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::B(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::S(v.to_string())
    }
}

impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(v: Option<T>) -> Self {
        v.map_or(Cell::Null, Into::into)
    }
}

pub fn fmt_float(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        v.to_string()
    }
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::F(v) => fmt_float(*v),
            Cell::U(v) => v.to_string(),
            Cell::B(v) => v.to_string(),
            Cell::S(s) => s.clone(),
            Cell::Null => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::F(v) if v.is_finite() => Value::Number(fmt_float(*v).parse::<Number>().expect("formatted float")),
            Cell::F(v) => Value::String(v.to_string()),
            Cell::U(v) => Value::from(*v),
            Cell::B(v) => Value::Bool(*v),
            Cell::S(s) => Value::String(s.clone()),
            Cell::Null => Value::Null,
        }
    }
}

/// A named column with its unit; `1` marks dimensionless quantities.
#[derive(Debug, Clone, Copy)]
pub struct Column {
    pub name: &'static str,
    pub unit: &'static str,
}

pub const fn col(name: &'static str, unit: &'static str) -> Column {
    Column { name, unit }
}

#[derive(Debug, Clone, Default)]
pub struct Report {
    pub columns: Vec<Column>,
    pub rows: Vec<Vec<Cell>>,
    pub summary: Vec<(Column, Cell)>,
}

impl Report {
    pub fn new(columns: Vec<Column>) -> Self {
        Report {
            columns,
            ..Default::default()
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn summarize(&mut self, column: Column, value: impl Into<Cell>) {
        self.summary.push((column, value.into()));
    }

    pub fn write(&self, format: Format, config: &Value, out: &mut dyn Write) -> std::io::Result<()> {
        match format {
            Format::Csv => self.write_csv(out),
            Format::Json => self.write_json(config, out),
        }
    }

    fn write_csv(&self, out: &mut dyn Write) -> std::io::Result<()> {
        let header: Vec<String> = self
            .columns
            .iter()
            .chain(self.summary.iter().map(|(c, _)| c))
            .map(|c| format!("{} [{}]", c.name, c.unit))
            .collect();
        writeln!(out, "{}", header.join(","))?;
        let tail: Vec<String> = self.summary.iter().map(|(_, v)| v.csv()).collect();
        if self.rows.is_empty() && !tail.is_empty() {
            writeln!(out, "{}", tail.join(","))?;
        }
        for row in &self.rows {
            let mut fields: Vec<String> = row.iter().map(Cell::csv).collect();
            fields.extend(tail.iter().cloned());
            writeln!(out, "{}", fields.join(","))?;
        }
        Ok(())
    }

    fn write_json(&self, config: &Value, out: &mut dyn Write) -> std::io::Result<()> {
        let mut units = Map::new();
        for c in self.columns.iter().chain(self.summary.iter().map(|(c, _)| c)) {
            units.insert(c.name.to_string(), Value::String(c.unit.to_string()));
        }
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|r| {
                Value::Object(
                    self.columns
                        .iter()
                        .zip(r)
                        .map(|(c, v)| (c.name.to_string(), v.json()))
                        .collect(),
                )
            })
            .collect();
        let summary: Map<String, Value> = self
            .summary
            .iter()
            .map(|(c, v)| (c.name.to_string(), v.json()))
            .collect();
        let mut doc = Map::new();
        doc.insert("config".into(), config.clone());
        doc.insert("units".into(), Value::Object(units));
        doc.insert("rows".into(), Value::Array(rows));
        doc.insert("summary".into(), Value::Object(summary));
        serde_json::to_writer_pretty(&mut *out, &Value::Object(doc))?;
        writeln!(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_keep_seventeen_digits() {
        assert_eq!(fmt_float(0.1), "1.0000000000000001e-1");
        let back: f64 = fmt_float(std::f64::consts::PI).parse().unwrap();
        assert_eq!(back, std::f64::consts::PI);
    }

    #[test]
    fn csv_repeats_summary_on_each_row() {
        let mut r = Report::new(vec![col("N", "sites")]);
        r.push(vec![Cell::U(2)]);
        r.push(vec![Cell::U(4)]);
        r.summarize(col("p", "nat/site"), 0.5);
        let mut buf = Vec::new();
        r.write(Format::Csv, &Value::Null, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "N [sites],p [nat/site]\n2,5.0000000000000000e-1\n4,5.0000000000000000e-1\n"
        );
    }
}
