//! Numeric CSV reading and writing for designs and response vectors.
//!
//! Plain comma-separated numbers, one observation per row. A header row is
//! optional and flag-controlled; responses live in their own single-column
//! file or in a named column of a wider file. Errors carry the file and
//! line so misconfigured runs fail loudly.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::matrix::DesignMatrix;

fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

fn split_row(line: &str) -> Vec<&str> {
    line.split(',').map(str::trim).collect()
}

fn parse_cell(path: &Path, line_no: usize, cell: &str) -> Result<f64> {
    cell.parse::<f64>().map_err(|_| Error::Parse {
        path: path.display().to_string(),
        line: line_no,
        msg: format!("`{cell}` is not a number"),
    })
}

/// Read a design matrix; `has_header` skips (and ignores) the first row.
pub fn read_design_csv(path: &Path, has_header: bool) -> Result<DesignMatrix> {
    let text = read_to_string(path)?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() || (has_header && idx == 0) {
            continue;
        }
        let row = split_row(line)
            .iter()
            .map(|cell| parse_cell(path, idx + 1, cell))
            .collect::<Result<Vec<f64>>>()?;
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return Err(Error::Parse {
                    path: path.display().to_string(),
                    line: idx + 1,
                    msg: format!("expected {} columns, found {}", first.len(), row.len()),
                });
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Parse {
            path: path.display().to_string(),
            line: 0,
            msg: "no data rows".into(),
        });
    }
    DesignMatrix::from_rows(&rows)
}

/// Read a response vector. Without `column` the file must have exactly one
/// column; with `column` the file needs a header row naming it.
pub fn read_response_csv(path: &Path, has_header: bool, column: Option<&str>) -> Result<Vec<f64>> {
    let text = read_to_string(path)?;
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let col_index: usize = match column {
        None => 0,
        Some(name) => {
            let (idx, header) = lines.next().ok_or_else(|| Error::Parse {
                path: path.display().to_string(),
                line: 0,
                msg: "empty file".into(),
            })?;
            split_row(header)
                .iter()
                .position(|c| *c == name)
                .ok_or_else(|| Error::Parse {
                    path: path.display().to_string(),
                    line: idx + 1,
                    msg: format!("no column named `{name}`"),
                })?
        }
    };
    let mut out = Vec::new();
    for (idx, line) in lines {
        if column.is_none() && has_header && idx == 0 {
            continue;
        }
        let cells = split_row(line);
        if column.is_none() && cells.len() != 1 {
            return Err(Error::Parse {
                path: path.display().to_string(),
                line: idx + 1,
                msg: format!("expected a single column, found {}", cells.len()),
            });
        }
        let cell = cells.get(col_index).ok_or_else(|| Error::Parse {
            path: path.display().to_string(),
            line: idx + 1,
            msg: format!("missing column {col_index}"),
        })?;
        out.push(parse_cell(path, idx + 1, cell)?);
    }
    if out.is_empty() {
        return Err(Error::Parse {
            path: path.display().to_string(),
            line: 0,
            msg: "no data rows".into(),
        });
    }
    Ok(out)
}

/// Format a float with 17 significant digits so parsing it back is exact.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_design_csv(path: &Path, x: &DesignMatrix) -> Result<()> {
    let mut out = String::new();
    for i in 0..x.n_rows() {
        let row: Vec<String> = x.row(i).iter().map(|v| fmt_f64(*v)).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    fs::write(path, out).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn write_vector_csv(path: &Path, v: &[f64]) -> Result<()> {
    let mut out = String::new();
    for x in v {
        out.push_str(&fmt_f64(*x));
        out.push('\n');
    }
    fs::write(path, out).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn design_roundtrip_and_errors() {
        let dir = std::env::temp_dir().join("lsl-io-tests");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("x.csv");
        let x = DesignMatrix::from_rows(&[vec![1.5, -2.25], vec![0.1, 1e-17]]).unwrap();
        write_design_csv(&path, &x).unwrap();
        let back = read_design_csv(&path, false).unwrap();
        assert_eq!(x, back);

        std::fs::write(&path, "a,b\n1,2\n3,oops\n").unwrap();
        let with_header = read_design_csv(&path, true);
        assert!(matches!(with_header, Err(Error::Parse { line: 3, .. })));
    }

    #[test]
    fn response_by_column_name() {
        let dir = std::env::temp_dir().join("lsl-io-tests");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("y.csv");
        std::fs::write(&path, "id,y\n1,0.5\n2,1.5\n").unwrap();
        let y = read_response_csv(&path, true, Some("y")).unwrap();
        assert_eq!(y, vec![0.5, 1.5]);
        assert!(read_response_csv(&path, true, Some("z")).is_err());
    }

    #[test]
    fn fmt_roundtrips_exactly() {
        for v in [0.1, -1.0 / 3.0, 1e-300, 123456.789, f64::MIN_POSITIVE] {
            let s = fmt_f64(v);
            assert_eq!(s.parse::<f64>().unwrap(), v, "{s}");
        }
    }
}
