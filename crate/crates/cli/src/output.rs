//! Tables of curve data and their CSV, JSON and gnuplot renderings.

use clap::ValueEnum;
use serde_json::{Map, Value};

/// Significant digits written for every number.
pub const SIG_DIGITS: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// Formats like C's `%.12g`: fixed notation for moderate exponents,
/// scientific otherwise, trailing zeros removed.
pub fn fmt_sig(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.*e}", SIG_DIGITS - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -5 || exp >= SIG_DIGITS as i32 {
        format!("{}e{}", trim_zeros(mantissa), exp)
    } else {
        let decimals = (SIG_DIGITS as i32 - 1 - exp) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(columns: Vec<String>) -> Self {
        Table { columns, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|&x| fmt_sig(x)).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    /// An array of records keyed by column name. Numbers carry the same
    /// 12 digits as the CSV; non-finite values become the strings the CSV
    /// uses.
    pub fn to_json(&self) -> String {
        let records: Vec<Value> = self
            .rows
            .iter()
            .map(|row| {
                let mut rec = Map::new();
                for (name, &x) in self.columns.iter().zip(row) {
                    let text = fmt_sig(x);
                    let v = if x.is_finite() {
                        Value::from(text.parse::<f64>().expect("fmt_sig output parses"))
                    } else {
                        Value::String(text)
                    };
                    rec.insert(name.clone(), v);
                }
                Value::Object(rec)
            })
            .collect();
        let mut out = serde_json::to_string_pretty(&Value::Array(records)).expect("serializable");
        out.push('\n');
        out
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => self.to_csv(),
            Format::Json => self.to_json(),
        }
    }

    /// Gnuplot script plotting every column against the first one.
    pub fn gnuplot_stub(&self, csv_name: &str) -> String {
        let mut out = String::new();
        out.push_str("set datafile separator ','\n");
        out.push_str("set key autotitle columnhead\n");
        out.push_str(&format!("set xlabel '{}'\n", self.columns[0]));
        let plots: Vec<String> = (2..=self.columns.len())
            .map(|i| format!("'{csv_name}' using 1:{i} with lines"))
            .collect();
        out.push_str("plot ");
        out.push_str(&plots.join(", \\\n     "));
        out.push('\n');
        out
    }
}
