//! Table, CSV, and plot-script emission.
//!
//! Every floating-point number is printed with 15 significant digits in
//! scientific notation, so emitted values re-parse to the in-memory value
//! at that precision and identical runs byte-reproduce their outputs.
//! Plot scripts target gnuplot and are never rendered here.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::CliError;

/// One table cell: counts stay integers, measurements get 15 digits.
#[derive(Debug, Clone, Copy)]
pub enum Cell {
    Int(usize),
    Num(f64),
}

/// 15-significant-digit scientific form, e.g. `2.50000000000000e-1`.
pub fn sig15(x: f64) -> String {
    format!("{x:.14e}")
}

impl Cell {
    fn render(self) -> String {
        match self {
            Cell::Int(n) => n.to_string(),
            Cell::Num(x) => sig15(x),
        }
    }
}

/// Writes a whitespace-separated table with a column-name header row.
pub fn write_table(
    path: &Path,
    columns: &[String],
    rows: &[Vec<Cell>],
) -> Result<(), CliError> {
    let mut text = String::new();
    text.push_str(&columns.join(" "));
    text.push('\n');
    for row in rows {
        assert_eq!(row.len(), columns.len(), "ragged table row");
        let rendered: Vec<String> = row.iter().map(|c| c.render()).collect();
        text.push_str(&rendered.join(" "));
        text.push('\n');
    }
    write_text(path, &text)
}

/// Writes any text output, mapping failures to config errors (the output
/// directory is part of the configuration).
pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text)
        .map_err(|e| CliError::Config(format!("cannot write {}: {e}", path.display())))
}

/// Creates the output directory if needed.
pub fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir)
        .map_err(|e| CliError::Config(format!("cannot create {}: {e}", dir.display())))
}

/// A gnuplot script plotting selected columns of one data file. `logscale`
/// applies to both axes; `slope_guide` adds a first-order reference line
/// anchored to the data of the first plotted column.
pub struct PlotSpec<'a> {
    pub script: PathBuf,
    pub data: &'a Path,
    pub title: &'a str,
    pub x_label: &'a str,
    pub y_label: &'a str,
    pub x_column: &'a str,
    pub y_columns: &'a [String],
    pub logscale: bool,
    pub slope_guide: bool,
}

pub fn write_plot(spec: &PlotSpec<'_>) -> Result<(), CliError> {
    let data = spec.data.file_name().unwrap_or_default().to_string_lossy();
    let mut s = String::new();
    let _ = writeln!(s, "# gnuplot script; run from this directory.");
    let _ = writeln!(s, "set title '{}'", spec.title);
    let _ = writeln!(s, "set xlabel '{}'", spec.x_label);
    let _ = writeln!(s, "set ylabel '{}'", spec.y_label);
    let _ = writeln!(s, "set key left top");
    if spec.logscale {
        let _ = writeln!(s, "set logscale xy");
    }
    if spec.slope_guide {
        let _ = writeln!(
            s,
            "stats '{data}' skip 1 using (column('{x}')):(column('{y}')) nooutput",
            x = spec.x_column,
            y = spec.y_columns[0],
        );
        let _ = writeln!(s, "guide(x) = STATS_max_y / STATS_max_x * x");
    }
    let mut terms: Vec<String> = spec
        .y_columns
        .iter()
        .map(|y| {
            format!(
                "'{data}' skip 1 using (column('{x}')):(column('{y}')) \
                 with linespoints title '{y}'",
                x = spec.x_column,
            )
        })
        .collect();
    if spec.slope_guide {
        terms.push("guide(x) with lines dashtype 2 title 'order 1'".to_string());
    }
    let _ = writeln!(s, "plot {}", terms.join(", \\\n     "));
    let _ = writeln!(s, "pause -1");
    write_text(&spec.script, &s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sig15_round_trips_to_fifteen_digits() {
        for &x in &[0.0, 1.0, -2.5e-7, std::f64::consts::PI, 1234.5678e90] {
            let printed = sig15(x);
            let back: f64 = printed.parse().unwrap();
            // Re-printing the parsed value reproduces the text exactly:
            // 15 significant digits identify the value at that precision.
            assert_eq!(sig15(back), printed);
            if x != 0.0 {
                assert!(((back - x) / x).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn tables_are_deterministic_text() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.dat");
        let cols = vec!["h".to_string(), "n".to_string()];
        let rows = vec![vec![Cell::Num(0.5), Cell::Int(37)]];
        write_table(&path, &cols, &rows).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text, "h n\n5.00000000000000e-1 37\n");
    }
}
