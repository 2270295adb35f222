#![allow(dead_code)]

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub struct Run {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
    pub raw: Output,
}

impl Run {
    pub fn ok(self) -> Self {
        assert_eq!(self.code, 0, "command failed\nstdout: {}\nstderr: {}", self.stdout, self.stderr);
        self
    }
}

/// Runs `hewflow` against `ws` through the environment variable.
pub fn hewflow(ws: &Path, args: &[&str]) -> Run {
    let raw = Command::new(env!("CARGO_BIN_EXE_hewflow"))
        .args(args)
        .env("HEWFLOW_WORKSPACE", ws)
        .output()
        .expect("spawn hewflow");
    Run {
        code: raw.status.code().unwrap_or(-1),
        stdout: String::from_utf8_lossy(&raw.stdout).into_owned(),
        stderr: String::from_utf8_lossy(&raw.stderr).into_owned(),
        raw,
    }
}

pub fn write_csv(path: &Path, rows: &[Vec<f64>]) {
    let width = rows.first().map_or(30, |r| r.len());
    let mut s = (0..width).map(|i| format!("f{i}")).collect::<Vec<_>>().join(",");
    s.push('\n');
    for r in rows {
        let cells: Vec<String> = r.iter().map(|v| format!("{v:.17e}")).collect();
        let _ = writeln!(s, "{}", cells.join(","));
    }
    fs::write(path, s).unwrap();
}

/// Header-only CSV with `width` columns.
pub fn write_empty_csv(path: &Path, width: usize) {
    let header = (0..width).map(|i| format!("f{i}")).collect::<Vec<_>>().join(",");
    fs::write(path, header + "\n").unwrap();
}

/// (scores, class) per row of a predictions file.
pub fn read_predictions(path: &Path) -> Vec<(Vec<f64>, usize)> {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(header[0], "row");
    assert_eq!(*header.last().unwrap(), "class");
    lines
        .enumerate()
        .map(|(i, l)| {
            let cells: Vec<&str> = l.split(',').collect();
            assert_eq!(cells[0].parse::<usize>().unwrap(), i);
            let scores = cells[1..cells.len() - 1].iter().map(|c| c.parse().unwrap()).collect();
            (scores, cells.last().unwrap().parse().unwrap())
        })
        .collect()
}

/// keygen + compile for a reference model.
pub fn setup(ws: &Path, model: &str, seed: &str) {
    hewflow(ws, &["--seed", seed, "keygen", "--model", model]).ok();
    hewflow(ws, &["--seed", seed, "compile", "--model", model]).ok();
}

pub fn files_under(dir: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push(p);
            }
        }
    }
    out.sort();
    out
}
