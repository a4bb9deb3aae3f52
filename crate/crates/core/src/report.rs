//! Tabular output: CSV files with full precision and aligned text tables.

use std::io::Write;

use crate::conditions::AssumptionReport;
use crate::elliptic::SeriesValue;
use crate::error::{Error, Result};
use crate::estimates::GradientStudy;
use crate::lattice::GridFunction;
use crate::operator::ConvergenceReport;
use crate::richardson::ExtrapolationRow;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Float(f64),
    Int(i64),
    Text(String),
}

impl Cell {
    /// 17 significant digits for floats.
    pub fn csv(&self) -> String {
        match self {
            Cell::Float(v) if v.is_nan() => "NaN".into(),
            Cell::Float(v) if v.is_infinite() => if *v > 0.0 { "inf" } else { "-inf" }.into(),
            Cell::Float(v) => format!("{v:.16e}"),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }

    fn short(&self) -> String {
        match self {
            Cell::Float(v) if v.is_finite() => format!("{v:.6e}"),
            other => other.csv(),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.into())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(v: Option<T>) -> Self {
        v.map_or(Cell::Text(String::new()), Into::into)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let map = |e: csv::Error| Error::Io(std::io::Error::other(e));
        w.write_record(&self.header).map_err(map)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::csv)).map_err(map)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("CSV is UTF-8")
    }

    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        self.write_csv(std::io::BufWriter::new(std::fs::File::create(path)?))
    }

    /// Column-aligned text with 7 significant digits.
    pub fn render_text(&self) -> String {
        let cells: Vec<Vec<String>> = self.rows.iter().map(|r| r.iter().map(Cell::short).collect()).collect();
        let widths: Vec<usize> = (0..self.header.len())
            .map(|j| cells.iter().map(|r| r[j].chars().count()).chain([self.header[j].chars().count()]).max().unwrap_or(0))
            .collect();
        let line = |r: &[String]| {
            r.iter().zip(&widths).map(|(c, w)| format!("{c:<w$}")).collect::<Vec<_>>().join("  ").trim_end().to_string()
        };
        let mut out = line(&self.header);
        out.push('\n');
        for r in &cells {
            out.push_str(&line(r));
            out.push('\n');
        }
        out
    }
}

/// Rows `t, x1..xd, u` for every state.
pub fn grid_table(states: &[GridFunction]) -> Table {
    let d = states.first().map_or(1, |s| s.domain().dim());
    let mut header = vec!["t".to_string()];
    header.extend((1..=d).map(|i| format!("x{i}")));
    header.push("u".into());
    let mut table = Table { header, rows: Vec::new() };
    for s in states {
        let t = s.time().unwrap_or(0.0);
        for (i, v) in s.iter_valid() {
            let mut row = vec![Cell::Float(t)];
            row.extend(s.domain().point(i).into_iter().map(Cell::Float));
            row.push(Cell::Float(v));
            table.rows.push(row);
        }
    }
    table
}

pub fn assumption_table(reports: &[AssumptionReport]) -> Table {
    let mut t = Table::new(&[
        "h", "check", "verdict", "margin", "tolerance", "t", "x", "witness", "xi", "skipped", "note",
    ]);
    let vec_text = |v: &Option<Vec<f64>>| -> Cell {
        v.as_ref()
            .map(|v| v.iter().map(|c| Cell::Float(*c).csv()).collect::<Vec<_>>().join(" "))
            .into()
    };
    for rep in reports {
        for r in &rep.records {
            t.push(vec![
                rep.h.into(),
                r.name.as_str().into(),
                r.verdict.to_string().into(),
                r.margin.into(),
                r.tolerance.into(),
                r.t.into(),
                vec_text(&r.x),
                r.witness.clone().into(),
                vec_text(&r.xi),
                r.skipped.into(),
                r.note.clone().into(),
            ]);
        }
    }
    t
}

pub fn gradient_table(study: &GradientStudy) -> Table {
    let mut t = Table::new(&["h", "sup_u", "sup_tau0_Du", "sup_U", "F1", "boundary", "R"]);
    for r in &study.rows {
        t.push(vec![
            r.h.into(),
            r.sup_u.into(),
            r.sup_tau0_du.into(),
            r.sup_big_u.into(),
            r.f1.into(),
            r.boundary.into(),
            r.ratio.into(),
        ]);
    }
    t
}

pub fn convergence_table(rep: &ConvergenceReport) -> Table {
    let mut t = Table::new(&["h", "sup_error", "order"]);
    for (h, e) in rep.h.iter().zip(&rep.errors) {
        t.push(vec![(*h).into(), (*e).into(), rep.order.into()]);
    }
    t
}

pub fn extrapolation_table(rows: &[ExtrapolationRow], order: f64) -> Table {
    let mut t = Table::new(&["k", "h", "sup_error", "order"]);
    for r in rows {
        t.push(vec![r.k.into(), r.h.into(), r.sup_error.into(), order.into()]);
    }
    t
}

pub fn oracle_table(points: &[(f64, SeriesValue, Option<f64>)]) -> Table {
    let mut t = Table::new(&["x", "series", "tail_bound", "terms", "scheme", "difference"]);
    for (x, s, scheme) in points {
        t.push(vec![
            (*x).into(),
            s.value.into(),
            s.tail_bound.into(),
            s.terms.into(),
            (*scheme).into(),
            scheme.map(|u| (u - s.value).abs()).into(),
        ]);
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_have_17_digits() {
        assert_eq!(Cell::Float(0.1).csv(), "1.0000000000000001e-1");
        assert_eq!(Cell::Float(f64::INFINITY).csv(), "inf");
        assert_eq!(Cell::Float(f64::NAN).csv(), "NaN");
        let v: f64 = Cell::Float(std::f64::consts::PI).csv().parse().unwrap();
        assert_eq!(v, std::f64::consts::PI);
    }

    #[test]
    fn header_always_present_and_text_quoted() {
        let mut t = Table::new(&["a", "b"]);
        assert_eq!(t.to_csv_string(), "a,b\n");
        t.push(vec![Cell::Int(1), "x, y".into()]);
        assert_eq!(t.to_csv_string(), "a,b\n1,\"x, y\"\n");
        assert!(t.render_text().starts_with("a  b"));
    }
}
