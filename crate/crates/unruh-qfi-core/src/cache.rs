//! Append-only result cache keyed by (schedule, encoding, N, r, precision).
//!
//! θ is deliberately not part of the key: the QFI of a NOON state does not
//! depend on the phase, so re-running a sweep at a different θ may reuse
//! stored values. The stored point keeps the θ it was computed at.
//!
//! Records are one line each, `v1,<schedule>,<sweep CSV row>`, appended with
//! a single O_APPEND write so concurrent writers interleave whole lines.
//! Floats are written with 17 significant digits and matched by bit equality
//! after parsing, so a hit reproduces the stored point exactly. Unreadable
//! lines are skipped individually and reported as warnings, never errors: a
//! damaged cache degrades to recomputation.

use std::fs::OpenOptions;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use crate::error::Result;
use crate::qfi::Schedule;
use crate::study::SweepPoint;
use crate::types::Encoding;

const VERSION_TAG: &str = "v1";

#[derive(Debug)]
pub struct Cache {
    path: PathBuf,
    warnings: Mutex<Vec<String>>,
}

impl Cache {
    /// Binds a cache to a file path, creating parent directories so the
    /// first `put` can append. The file itself is created lazily.
    pub fn open(path: impl Into<PathBuf>) -> Result<Self> {
        let path = path.into();
        if let Some(parent) = path.parent() {
            if !parent.as_os_str().is_empty() {
                std::fs::create_dir_all(parent)?;
            }
        }
        Ok(Cache {
            path,
            warnings: Mutex::new(Vec::new()),
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    fn warn(&self, message: String) {
        self.warnings.lock().unwrap().push(message);
    }

    /// Drains the warnings accumulated by `get`/`put` since the last call.
    pub fn take_warnings(&self) -> Vec<String> {
        std::mem::take(&mut self.warnings.lock().unwrap())
    }

    /// Looks up a stored point. Floats match by post-parse bit equality;
    /// among duplicates the last write wins, so a re-put supersedes.
    pub fn get(
        &self,
        encoding: Encoding,
        n: u32,
        r: f64,
        precision: f64,
        schedule: Schedule,
    ) -> Option<SweepPoint> {
        let text = match std::fs::read_to_string(&self.path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return None,
            Err(e) => {
                self.warn(format!("cache unreadable at {}: {e}", self.path.display()));
                return None;
            }
        };
        let mut hit = None;
        for (lineno, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            match parse_line(line) {
                Ok((line_schedule, point)) => {
                    if line_schedule == schedule
                        && point.encoding == encoding
                        && point.n == n
                        && point.r == r
                        && point.precision == precision
                    {
                        hit = Some(point);
                    }
                }
                Err(reason) => {
                    self.warn(format!("cache line {} skipped: {reason}", lineno + 1));
                }
            }
        }
        hit
    }

    /// Appends one record. Failures become warnings: the cache accelerates,
    /// it must never abort a computation that already succeeded.
    pub fn put(&self, point: &SweepPoint, schedule: Schedule) {
        let line = format!(
            "{VERSION_TAG},{},{}\n",
            schedule.label(),
            point.to_csv_row()
        );
        let res = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&self.path)
            .and_then(|mut f| f.write_all(line.as_bytes()));
        if let Err(e) = res {
            self.warn(format!(
                "cache write failed at {}: {e}",
                self.path.display()
            ));
        }
    }
}

fn parse_line(line: &str) -> std::result::Result<(Schedule, SweepPoint), String> {
    let fields: Vec<&str> = line.split(',').collect();
    if fields.len() != 11 {
        return Err(format!("expected 11 fields, found {}", fields.len()));
    }
    if fields[0] != VERSION_TAG {
        return Err(format!("unsupported record version '{}'", fields[0]));
    }
    let schedule = Schedule::parse(fields[1]).map_err(|e| e.to_string())?;
    let point = SweepPoint::from_csv_fields(&fields[2..]).map_err(|e| e.to_string())?;
    Ok((schedule, point))
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    fn point(n: u32, r: f64, qfi: f64, theta: f64) -> SweepPoint {
        SweepPoint {
            encoding: Encoding::SingleRail,
            n,
            r,
            theta,
            precision: 1e-5,
            qfi,
            dim_used: 42,
            converged: true,
            wall_time_s: 0.125,
        }
    }

    #[test]
    fn round_trips_bit_exactly() {
        let dir = tempdir().unwrap();
        let cache = Cache::open(dir.path().join("c.csv")).unwrap();
        let p = point(3, 0.1 + 0.2, 3.5500326148507626, 0.4);
        cache.put(&p, Schedule::Accelerated);
        let hit = cache
            .get(Encoding::SingleRail, 3, 0.1 + 0.2, 1e-5, Schedule::Accelerated)
            .unwrap();
        assert_eq!(hit, p);
        assert!(cache.take_warnings().is_empty());
    }

    #[test]
    fn key_excludes_theta_but_not_the_rest() {
        let dir = tempdir().unwrap();
        let cache = Cache::open(dir.path().join("c.csv")).unwrap();
        let p = point(2, 0.5, 3.55, 0.9);
        cache.put(&p, Schedule::Accelerated);
        // Different requested θ still hits and returns the stored θ.
        let hit = cache
            .get(Encoding::SingleRail, 2, 0.5, 1e-5, Schedule::Accelerated)
            .unwrap();
        assert_eq!(hit.theta, 0.9);
        // Any true key field changes → miss.
        assert!(cache
            .get(Encoding::DualRail, 2, 0.5, 1e-5, Schedule::Accelerated)
            .is_none());
        assert!(cache
            .get(Encoding::SingleRail, 3, 0.5, 1e-5, Schedule::Accelerated)
            .is_none());
        assert!(cache
            .get(Encoding::SingleRail, 2, 0.5000001, 1e-5, Schedule::Accelerated)
            .is_none());
        assert!(cache
            .get(Encoding::SingleRail, 2, 0.5, 1e-6, Schedule::Accelerated)
            .is_none());
        assert!(cache
            .get(Encoding::SingleRail, 2, 0.5, 1e-5, Schedule::UnitStep)
            .is_none());
    }

    #[test]
    fn last_write_wins() {
        let dir = tempdir().unwrap();
        let cache = Cache::open(dir.path().join("c.csv")).unwrap();
        cache.put(&point(2, 0.5, 1.0, 0.4), Schedule::Accelerated);
        cache.put(&point(2, 0.5, 2.0, 0.4), Schedule::Accelerated);
        let hit = cache
            .get(Encoding::SingleRail, 2, 0.5, 1e-5, Schedule::Accelerated)
            .unwrap();
        assert_eq!(hit.qfi, 2.0);
    }

    #[test]
    fn corrupt_lines_are_skipped_with_warnings() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("c.csv");
        let cache = Cache::open(&path).unwrap();
        cache.put(&point(2, 0.5, 3.0, 0.4), Schedule::Accelerated);
        std::fs::write(
            &path,
            format!(
                "not,a,record\nv0,accelerated,single,2,0,0,0,0,0,true,0\n{}v1,accelerated,single,9,bad-r,0.4,1e-5,1.0,10,true,0.1\n",
                std::fs::read_to_string(&path).unwrap()
            ),
        )
        .unwrap();
        let hit = cache.get(Encoding::SingleRail, 2, 0.5, 1e-5, Schedule::Accelerated);
        assert!(hit.is_some());
        let warnings = cache.take_warnings();
        assert_eq!(warnings.len(), 3, "{warnings:?}");
        assert!(warnings[0].contains("line 1"));
        assert!(warnings[1].contains("version"));
        assert!(warnings[2].contains("line 4"));
        // Warnings drain on take.
        assert!(cache.take_warnings().is_empty());
    }

    #[test]
    fn missing_file_is_a_clean_miss() {
        let dir = tempdir().unwrap();
        let cache = Cache::open(dir.path().join("nope.csv")).unwrap();
        assert!(cache
            .get(Encoding::SingleRail, 1, 0.1, 1e-5, Schedule::Accelerated)
            .is_none());
        assert!(cache.take_warnings().is_empty());
    }
}
