//! Tabular output: CSV or JSON, byte-stable for identical inputs.

use serde_json::{Map, Value};

use crate::config::Format;

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Bool(bool),
    Text(String),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

/// Rows under a fixed header plus named summary values.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    pub summary: Vec<(String, Cell)>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            ..Self::default()
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width does not match the header");
        self.rows.push(row);
    }

    pub fn note(&mut self, key: &str, value: impl Into<Cell>) {
        self.summary.push((key.to_string(), value.into()));
    }

    pub fn summary_value(&self, key: &str) -> Option<&Cell> {
        self.summary.iter().find(|(k, _)| k == key).map(|(_, v)| v)
    }
}

/// Scientific notation with 15 significant digits.
pub fn format_number(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{x:.14e}")
    }
}

fn text(cell: &Cell) -> String {
    match cell {
        Cell::Num(x) => format_number(*x),
        Cell::Int(i) => i.to_string(),
        Cell::Bool(b) => b.to_string(),
        Cell::Text(s) => s.clone(),
    }
}

fn json(cell: &Cell) -> Value {
    match cell {
        // Rounded through the 15-digit text so both formats carry the same value.
        Cell::Num(x) => format_number(*x)
            .parse::<f64>()
            .ok()
            .and_then(serde_json::Number::from_f64)
            .map(Value::Number)
            .unwrap_or(Value::Null),
        Cell::Int(i) => Value::from(*i),
        Cell::Bool(b) => Value::Bool(*b),
        Cell::Text(s) => Value::String(s.clone()),
    }
}

/// CSV: header, rows, then one `# key=value` line per summary entry.
/// JSON: `{"columns", "rows", "summary"}` with keys in header order.
pub fn emit_table(table: &Table, format: Format) -> String {
    match format {
        Format::Csv => {
            let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(vec![]);
            w.write_record(&table.columns).expect("in-memory write");
            for row in &table.rows {
                w.write_record(row.iter().map(text)).expect("in-memory write");
            }
            let mut out = String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8");
            for (k, v) in &table.summary {
                out.push_str(&format!("# {k}={}\n", text(v)));
            }
            out
        }
        Format::Json => {
            let rows: Vec<Value> = table
                .rows
                .iter()
                .map(|row| {
                    let obj: Map<String, Value> = table.columns.iter().cloned().zip(row.iter().map(json)).collect();
                    Value::Object(obj)
                })
                .collect();
            let summary: Map<String, Value> = table.summary.iter().map(|(k, v)| (k.clone(), json(v))).collect();
            let mut doc = Map::new();
            doc.insert("columns".into(), Value::from(table.columns.clone()));
            doc.insert("rows".into(), Value::Array(rows));
            doc.insert("summary".into(), Value::Object(summary));
            let mut s = serde_json::to_string_pretty(&Value::Object(doc)).expect("json");
            s.push('\n');
            s
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fifteen_digits() {
        assert_eq!(format_number(1.0), "1.00000000000000e0");
        assert_eq!(format_number(-0.1), "-1.00000000000000e-1");
        assert_eq!(format_number(f64::NAN), "nan");
    }

    #[test]
    fn empty_table_is_header_only() {
        let t = Table::new(&["r", "rho"]);
        assert_eq!(emit_table(&t, Format::Csv), "r,rho\n");
    }

    #[test]
    fn text_cells_are_quoted() {
        let mut t = Table::new(&["name", "value"]);
        t.push(vec!["a,b".into(), 2.0.into()]);
        assert_eq!(emit_table(&t, Format::Csv), "name,value\n\"a,b\",2.00000000000000e0\n");
    }
}
