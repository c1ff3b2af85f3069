use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::CliError;

/// Creates the output directory and writes artifacts into it.
#[derive(Clone, Debug)]
pub struct OutDir {
    root: PathBuf,
}

impl OutDir {
    pub fn create(root: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(root)?;
        Ok(OutDir { root: root.to_path_buf() })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    /// CSV with a header row; numbers use the shortest round-trip representation.
    pub fn csv<R>(&self, name: &str, header: &[String], rows: R) -> Result<PathBuf, CliError>
    where
        R: IntoIterator<Item = Vec<Cell>>,
    {
        let mut text = header.join(",");
        text.push('\n');
        for row in rows {
            for (i, cell) in row.iter().enumerate() {
                if i > 0 {
                    text.push(',');
                }
                match cell {
                    Cell::Num(x) => write!(text, "{x:e}").expect("write to string"),
                    Cell::Int(x) => write!(text, "{x}").expect("write to string"),
                    Cell::Empty => {}
                }
            }
            text.push('\n');
        }
        let path = self.path(name);
        fs::write(&path, text)?;
        Ok(path)
    }

    pub fn json(&self, name: &str, value: &impl Serialize) -> Result<PathBuf, CliError> {
        let path = self.path(name);
        let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Config(e.to_string()))?;
        text.push('\n');
        fs::write(&path, text)?;
        Ok(path)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(usize),
    Empty,
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x)
    }
}

/// Column names `x1, …, xn`.
pub fn coordinate_names(n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("x{i}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_cells_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let out = OutDir::create(dir.path()).unwrap();
        let x = 0.1 + 0.2;
        let path = out
            .csv("t.csv", &["a".into(), "b".into(), "c".into()], [vec![Cell::Int(3), x.into(), Cell::Empty]])
            .unwrap();
        let text = fs::read_to_string(path).unwrap();
        let row = text.lines().nth(1).unwrap();
        let fields: Vec<&str> = row.split(',').collect();
        assert_eq!(fields[0], "3");
        assert_eq!(fields[1].parse::<f64>().unwrap(), x);
        assert_eq!(fields[2], "");
    }
}
