//! Shared output plumbing: CSV and JSON writers plus a bounded worker pool
//! whose results merge deterministically by task index.

use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use ipart::error::{Error, Result};

pub fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    let file = std::fs::File::create(path)?;
    serde_json::to_writer_pretty(file, value)?;
    Ok(())
}

pub fn write_csv(path: &Path, header: &[String], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(header).map_err(csv_err)?;
    for row in rows {
        w.write_record(row).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_err(e: csv::Error) -> Error {
    Error::Csv {
        line: 0,
        message: e.to_string(),
    }
}

/// Runs `n_tasks` independent jobs on up to `threads` workers; the output
/// vector is ordered by task index regardless of scheduling.
pub fn run_tasks<T, F>(n_tasks: usize, threads: usize, job: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync,
{
    if n_tasks == 0 {
        return Ok(Vec::new());
    }
    let workers = threads.clamp(1, n_tasks);
    if workers == 1 {
        return (0..n_tasks).map(&job).collect();
    }
    let next = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<Result<T>>>> = (0..n_tasks).map(|_| Mutex::new(None)).collect();
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let idx = next.fetch_add(1, Ordering::SeqCst);
                if idx >= n_tasks {
                    break;
                }
                let out = job(idx);
                *slots[idx].lock().expect("worker slot") = Some(out);
            });
        }
    });
    slots
        .into_iter()
        .map(|slot| slot.into_inner().expect("worker slot").expect("task ran"))
        .collect()
}

/// CSV cell formatting for floats: shortest round-trip representation.
pub fn fmt(v: f64) -> String {
    v.to_string()
}
