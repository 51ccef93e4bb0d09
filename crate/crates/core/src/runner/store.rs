//! Line-delimited JSON trajectory store, one object per run.

use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Group;
use crate::solvers::{
    serialize_length, IncumbentEvent, Recorder, TimeMode, Trajectory, TrajectoryRecorder,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunStatus {
    Completed,
    Crashed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Host {
    pub os: String,
    pub arch: String,
}

impl Host {
    pub fn current() -> Self {
        Host {
            os: std::env::consts::OS.to_owned(),
            arch: std::env::consts::ARCH.to_owned(),
        }
    }
}

fn serialize_opt_length<S: serde::Serializer>(v: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
    match v {
        Some(x) => serialize_length(x, s),
        None => s.serialize_none(),
    }
}

/// One persisted run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub plan: String,
    pub instance: String,
    pub group: Group,
    pub n: usize,
    pub solver: String,
    pub run: u32,
    pub seed: u64,
    pub cutoff_ms: u64,
    pub time_mode: TimeMode,
    pub status: RunStatus,
    pub events: Vec<IncumbentEvent>,
    #[serde(serialize_with = "serialize_opt_length")]
    pub final_len: Option<f64>,
    /// Wall-clock time spent past the cutoff (wall mode only).
    pub overshoot_ms: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub host: Host,
}

impl RunRecord {
    pub fn key(&self) -> (&str, &str, u32) {
        (&self.instance, &self.solver, self.run)
    }

    pub fn trajectory(&self) -> Trajectory {
        Trajectory {
            instance: self.instance.clone(),
            solver: self.solver.clone(),
            seed: self.seed,
            cutoff_ms: self.cutoff_ms,
            events: self.events.clone(),
        }
    }

    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("run records always serialize")
    }
}

/// Reads every record; any malformed line is an error.
pub fn read_store(path: &Path) -> Result<Vec<RunRecord>> {
    let (records, bad) = read_lines(path)?;
    if let Some((line, msg)) = bad.into_iter().next() {
        return Err(Error::Parse {
            path: path.to_owned(),
            line,
            msg,
        });
    }
    Ok(records)
}

/// Reads records, skipping a torn final line left by an interrupted writer.
pub(crate) fn read_store_lenient(path: &Path) -> Result<Vec<RunRecord>> {
    let (records, bad) = read_lines(path)?;
    let total = records.len() + bad.len();
    for (line, msg) in bad {
        if line == total {
            log::warn!("{}: dropping torn last line: {msg}", path.display());
        } else {
            return Err(Error::Parse {
                path: path.to_owned(),
                line,
                msg,
            });
        }
    }
    Ok(records)
}

/// Line number and parser message of each unreadable line.
type BadLines = Vec<(usize, String)>;

fn read_lines(path: &Path) -> Result<(Vec<RunRecord>, BadLines)> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut records = Vec::new();
    let mut bad = Vec::new();
    let mut lineno = 0;
    for line in BufReader::new(file).lines() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        lineno += 1;
        match serde_json::from_str::<RunRecord>(&line) {
            Ok(r) => records.push(r),
            Err(e) => bad.push((lineno, e.to_string())),
        }
    }
    Ok((records, bad))
}

/// Writes records sorted by key, replacing `path` atomically.
pub fn write_store(path: &Path, records: &[RunRecord]) -> Result<()> {
    let mut sorted: Vec<&RunRecord> = records.iter().collect();
    sorted.sort_by(|a, b| a.key().cmp(&b.key()));
    let tmp = path.with_extension("jsonl.tmp");
    {
        let file = File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
        let mut w = BufWriter::new(file);
        for r in sorted {
            writeln!(w, "{}", r.to_line()).map_err(|e| Error::io(&tmp, e))?;
        }
        w.flush().map_err(|e| Error::io(&tmp, e))?;
    }
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

/// Appends one record and flushes it to disk.
pub(crate) fn append_record(file: &mut File, path: &Path, record: &RunRecord) -> Result<()> {
    writeln!(file, "{}", record.to_line()).map_err(|e| Error::io(path, e))?;
    file.sync_data().map_err(|e| Error::io(path, e))
}

pub(crate) fn open_append(path: &Path) -> Result<File> {
    OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(|e| Error::io(path, e))
}

/// Recorder that writes each accepted event as a JSON line.
///
/// Events that do not strictly improve on the previous one are rejected
/// before anything is written.
pub struct EventLog<W: Write> {
    out: W,
    check: TrajectoryRecorder,
}

impl<W: Write> EventLog<W> {
    pub fn new(out: W) -> Self {
        EventLog {
            out,
            check: TrajectoryRecorder::default(),
        }
    }

    pub fn events(&self) -> &[IncumbentEvent] {
        self.check.events()
    }

    pub fn into_inner(self) -> W {
        self.out
    }
}

impl<W: Write> Recorder for EventLog<W> {
    fn record(&mut self, event: IncumbentEvent) -> Result<()> {
        self.check.record(event)?;
        let line = serde_json::to_string(&event)?;
        writeln!(self.out, "{line}")
            .and_then(|_| self.out.flush())
            .map_err(|e| Error::io("<event log>", e))
    }
}

/// Appends an incumbent improvement to `recorder`, rejecting regressions.
pub fn record_incumbent(recorder: &mut dyn Recorder, event: IncumbentEvent) -> Result<()> {
    recorder.record(event)
}

/// Parses the output of an [`EventLog`].
pub fn replay_event_log(text: &str) -> Result<Vec<IncumbentEvent>> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(Error::from))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn event(t: u64, len: f64) -> IncumbentEvent {
        IncumbentEvent {
            elapsed_ms: t,
            evals: t * 10,
            length: len,
        }
    }

    fn record(instance: &str, run: u32, len: f64) -> RunRecord {
        RunRecord {
            plan: "p".into(),
            instance: instance.into(),
            group: Group::Rue,
            n: 10,
            solver: "ils".into(),
            run,
            seed: 99,
            cutoff_ms: 100,
            time_mode: TimeMode::Evals,
            status: RunStatus::Completed,
            events: vec![event(1, len + 5.0), event(7, len)],
            final_len: Some(len),
            overshoot_ms: 0,
            error: None,
            host: Host::current(),
        }
    }

    #[test]
    fn line_format() {
        let line = record("a", 0, 100.0).to_line();
        assert!(line.contains(
            r#""events":[{"t_ms":1,"evals":10,"len":105},{"t_ms":7,"evals":70,"len":100}]"#
        ));
        assert!(line.contains(r#""final_len":100"#));
        assert!(line.starts_with(r#"{"plan":"p","instance":"a","#));
        let mut exact = record("a", 0, 100.25);
        exact.events[0].length = 105.5;
        assert!(exact.to_line().contains(r#""len":105.5"#));
    }

    #[test]
    fn store_round_trip_is_byte_identical() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.jsonl");
        let recs = vec![
            record("b", 1, 50.0),
            record("a", 0, 100.123456789),
            record("b", 0, 3.0),
        ];
        write_store(&p, &recs).unwrap();
        let first = std::fs::read(&p).unwrap();
        let back = read_store(&p).unwrap();
        assert_eq!(back[0].instance, "a");
        write_store(&p, &back).unwrap();
        assert_eq!(std::fs::read(&p).unwrap(), first);
    }

    #[test]
    fn torn_last_line_tolerated_only_when_lenient() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.jsonl");
        let mut text = record("a", 0, 1.0).to_line();
        text.push_str("\n{\"plan\":\"p\",\"inst");
        std::fs::write(&p, text).unwrap();
        assert!(read_store(&p).is_err());
        assert_eq!(read_store_lenient(&p).unwrap().len(), 1);
    }

    #[test]
    fn event_log_round_trip_and_monotonicity() {
        let mut log = EventLog::new(Vec::new());
        record_incumbent(&mut log, event(0, 10.0)).unwrap();
        assert!(matches!(
            record_incumbent(&mut log, event(1, 11.0)),
            Err(Error::MonotonicityViolation { .. })
        ));
        record_incumbent(&mut log, event(2, 9.5)).unwrap();
        let expected = log.events().to_vec();
        let text = String::from_utf8(log.into_inner()).unwrap();
        assert_eq!(replay_event_log(&text).unwrap(), expected);
    }
}
