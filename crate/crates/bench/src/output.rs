//! File writers. Output contains no timestamps, so reruns with the same seed
//! are byte-identical.

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use crate::error::{BenchError, BenchResult};

pub fn write_text(path: &Path, text: &str) -> BenchResult<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|source| io_err(dir, source))?;
    }
    std::fs::write(path, text).map_err(|source| io_err(path, source))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> BenchResult<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| BenchError::Runtime(e.to_string()))?;
    text.push('\n');
    write_text(path, &text)
}

fn io_err(path: &Path, source: std::io::Error) -> BenchError {
    BenchError::Io { path: path.display().to_string(), source }
}

/// CSV with a header row; `None` cells are left empty.
pub struct Csv {
    text: String,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        Self { text: header.join(",") + "\n" }
    }

    pub fn row(&mut self, cells: &[Cell]) {
        for (i, c) in cells.iter().enumerate() {
            if i > 0 {
                self.text.push(',');
            }
            match c {
                Cell::Int(v) => write!(self.text, "{v}").unwrap(),
                Cell::Real(v) => write!(self.text, "{v}").unwrap(),
                Cell::Text(v) => self.text.push_str(v),
                Cell::Empty => {}
            }
        }
        self.text.push('\n');
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }

    pub fn write(&self, path: &Path) -> BenchResult<()> {
        write_text(path, &self.text)
    }
}

pub enum Cell {
    Int(u64),
    Real(f64),
    Text(String),
    Empty,
}

impl From<Option<u64>> for Cell {
    fn from(v: Option<u64>) -> Self {
        v.map_or(Cell::Empty, Cell::Int)
    }
}

/// Runs `jobs` on up to `workers` threads; results keep job order.
pub fn run_parallel<J, R, F>(jobs: Vec<J>, workers: usize, f: F) -> Vec<R>
where
    J: Send,
    R: Send,
    F: Fn(J) -> R + Sync,
{
    use std::sync::atomic::{AtomicUsize, Ordering};
    use std::sync::Mutex;

    let n = jobs.len();
    let jobs: Vec<Mutex<Option<J>>> = jobs.into_iter().map(|j| Mutex::new(Some(j))).collect();
    let results: Vec<Mutex<Option<R>>> = (0..n).map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    std::thread::scope(|s| {
        for _ in 0..workers.clamp(1, n.max(1)) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= n {
                    break;
                }
                let job = jobs[i].lock().unwrap().take().expect("each job runs once");
                *results[i].lock().unwrap() = Some(f(job));
            });
        }
    });
    results.into_iter().map(|r| r.into_inner().unwrap().expect("every job finished")).collect()
}
