//! File formats for fields, traces, reports and trial data. Every writer goes
//! through [`write_atomic`].

use std::fs;
use std::io::{self, Read};
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::geometry::{DisparityTrace, StereoProjection};
use crate::optics::LatencyField;
use crate::pipeline::SimTrace;
use crate::psychometrics::{PsychometricFit, TrialRecord};

#[derive(Debug, Error)]
pub enum ExportError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: line {line}: {message}")]
    Parse { path: PathBuf, line: u64, message: String },
}

/// Writes `bytes` to a temporary sibling of `path`, then renames it into
/// place so readers never observe a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), ExportError> {
    let io_err = |source| ExportError::Io { path: path.to_path_buf(), source };
    let name = path.file_name().ok_or_else(|| {
        io_err(io::Error::new(io::ErrorKind::InvalidInput, "path has no file name"))
    })?;
    let mut tmp_name = std::ffi::OsString::from(".");
    tmp_name.push(name);
    tmp_name.push(format!(".tmp{}", std::process::id()));
    let tmp = path.with_file_name(tmp_name);
    fs::write(&tmp, bytes).map_err(io_err)?;
    fs::rename(&tmp, path).map_err(|e| {
        let _ = fs::remove_file(&tmp);
        io_err(e)
    })
}

fn csv_string<F>(header: &[&str], fill: F) -> String
where
    F: FnOnce(&mut csv::Writer<Vec<u8>>) -> csv::Result<()>,
{
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(header).expect("writing to memory");
    fill(&mut w).expect("writing to memory");
    String::from_utf8(w.into_inner().expect("flushing to memory")).expect("csv output is utf-8")
}

/// `column,row,latency_ns` for every valid pixel, in grid coordinates.
pub fn field_csv(field: &LatencyField) -> String {
    csv_string(&["column", "row", "latency_ns"], |w| {
        let (cols, rows) = field.dims();
        for r in 0..rows {
            for c in 0..cols {
                if let Some(v) = field.value(c, r) {
                    w.write_record(&[c.to_string(), r.to_string(), v.get().to_string()])?;
                }
            }
        }
        Ok(())
    })
}

/// Text PGM (P2) scaled linearly from 0 to the field maximum, plus the
/// matching scale note. Invalid and negative pixels are 0; a non-positive
/// maximum yields an all-zero image.
pub fn heatmap_pgm(field: &LatencyField) -> (String, String) {
    let (w, h) = field.dims();
    let max = i128::from(field.stat_max().get());
    let mut out = format!("P2\n{w} {h}\n255\n");
    let mut line = String::new();
    for (v, ok) in field.values().iter().zip(field.valid_mask()) {
        let level = if !*ok || max <= 0 {
            0
        } else {
            let v = i128::from(v.get()).clamp(0, max);
            // round half up of 255 * v / max
            (510 * v + max) / (2 * max)
        };
        let token = level.to_string();
        if !line.is_empty() && line.len() + 1 + token.len() > 70 {
            out.push_str(&line);
            out.push('\n');
            line.clear();
        }
        if !line.is_empty() {
            line.push(' ');
        }
        line.push_str(&token);
    }
    if !line.is_empty() {
        out.push_str(&line);
        out.push('\n');
    }
    let scale = format!(
        "min_ns {}\nmax_ns {}\nlevels 255\n",
        field.stat_min().get(),
        field.stat_max().get()
    );
    (out, scale)
}

/// Sidecar path holding the heatmap scale.
pub fn scale_path(pgm: &Path) -> PathBuf {
    let mut name = pgm.as_os_str().to_owned();
    name.push(".scale.txt");
    PathBuf::from(name)
}

/// Writes the PGM heatmap and its `<path>.scale.txt` sidecar.
pub fn emit_heatmap(field: &LatencyField, path: &Path) -> Result<(), ExportError> {
    let (pgm, scale) = heatmap_pgm(field);
    write_atomic(path, pgm.as_bytes())?;
    write_atomic(&scale_path(path), scale.as_bytes())
}

/// `time_ns,kind,row_start,row_end,frame`, one line per event.
pub fn trace_csv(trace: &SimTrace) -> String {
    csv_string(&["time_ns", "kind", "row_start", "row_end", "frame"], |w| {
        for e in &trace.events {
            w.write_record(&[
                e.time.get().to_string(),
                e.kind.as_str().to_string(),
                e.row_start.to_string(),
                e.row_end.to_string(),
                e.frame.to_string(),
            ])?;
        }
        Ok(())
    })
}

pub fn projection_csv(rows: &[(f64, StereoProjection)]) -> String {
    csv_string(&["yaw_deg", "left_x_cm", "right_x_cm", "separation_cm"], |w| {
        for (yaw, p) in rows {
            w.write_record(&[
                format!("{yaw}"),
                format!("{:.6}", p.left),
                format!("{:.6}", p.right),
                format!("{:.6}", p.separation),
            ])?;
        }
        Ok(())
    })
}

pub fn disparity_csv(trace: &DisparityTrace) -> String {
    csv_string(&["t_s", "error_arcsec"], |w| {
        for (t, e) in &trace.samples {
            w.write_record(&[format!("{t}"), format!("{e:.6}")])?;
        }
        Ok(())
    })
}

/// Fitted curve sampled every 0.1 ms over `[0, max_ms]`.
pub fn curve_csv(fit: &PsychometricFit, max_ms: f64) -> String {
    let steps = (max_ms * 10.0).round().max(0.0) as u64;
    csv_string(&["latency_ms", "p_correct"], |w| {
        for i in 0..=steps {
            let x = i as f64 / 10.0;
            w.write_record(&[format!("{x:.1}"), format!("{:.6}", fit.psi(x))])?;
        }
        Ok(())
    })
}

/// Reads `latency_ms,correct` rows with `correct` in {0, 1}.
pub fn read_trials<R: Read>(reader: R, path: &Path) -> Result<Vec<TrialRecord>, ExportError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let perr = |line: u64, message: String| ExportError::Parse { path: path.to_path_buf(), line, message };
    let headers = rdr.headers().map_err(|e| perr(1, e.to_string()))?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let (Some(lc), Some(cc)) = (col("latency_ms"), col("correct")) else {
        return Err(perr(1, "header must contain latency_ms and correct".into()));
    };
    let mut trials = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            perr(line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        let latency: f64 = rec
            .get(lc)
            .unwrap_or("")
            .parse()
            .map_err(|_| perr(line, format!("latency_ms `{}` is not a number", rec.get(lc).unwrap_or(""))))?;
        let correct = match rec.get(cc).unwrap_or("") {
            "0" => false,
            "1" => true,
            other => return Err(perr(line, format!("correct must be 0 or 1, got `{other}`"))),
        };
        trials.push(TrialRecord { latency_ms: latency, correct });
    }
    Ok(trials)
}

pub fn read_trials_file(path: &Path) -> Result<Vec<TrialRecord>, ExportError> {
    let file = fs::File::open(path).map_err(|source| ExportError::Io { path: path.to_path_buf(), source })?;
    read_trials(file, path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::time::Nanos;

    fn field(values: &[i64], dims: (u32, u32)) -> LatencyField {
        LatencyField::from_values(dims, values.iter().map(|&v| Nanos(v)).collect()).unwrap()
    }

    #[test]
    fn zero_field_is_black() {
        let (pgm, scale) = heatmap_pgm(&field(&[0; 6], (3, 2)));
        assert_eq!(pgm, "P2\n3 2\n255\n0 0 0 0 0 0\n");
        assert!(scale.contains("max_ns 0"));
    }

    #[test]
    fn two_level_field_hits_endpoints() {
        let (pgm, _) = heatmap_pgm(&field(&[0, 400_000, 400_000, 0], (2, 2)));
        assert_eq!(pgm, "P2\n2 2\n255\n0 255 255 0\n");
        let (pgm, _) = heatmap_pgm(&field(&[0, 1, 2], (3, 1)));
        // 127.5 rounds up
        assert_eq!(pgm, "P2\n3 1\n255\n0 128 255\n");
    }

    #[test]
    fn pgm_lines_stay_short() {
        let f = field(&(0..1000).collect::<Vec<_>>(), (100, 10));
        let (pgm, _) = heatmap_pgm(&f);
        assert!(pgm.lines().all(|l| l.len() <= 70));
        assert_eq!(pgm.split_whitespace().count(), 4 + 1000);
    }

    #[test]
    fn field_csv_lists_valid_pixels() {
        let f = LatencyField::new((2, 1), vec![Nanos(5), Nanos(7)], vec![true, false]).unwrap();
        assert_eq!(field_csv(&f), "column,row,latency_ns\n0,0,5\n");
    }

    #[test]
    fn trial_csv_round_trip_and_errors() {
        let p = Path::new("t.csv");
        let t = read_trials("latency_ms,correct\n1.5,1\n3,0\n".as_bytes(), p).unwrap();
        assert_eq!(t.len(), 2);
        assert!(t[0].correct && !t[1].correct);
        let err = read_trials("latency_ms,correct\n1.5,1\n3,yes\n".as_bytes(), p).unwrap_err();
        assert!(err.to_string().contains("line 3"), "{err}");
        assert!(read_trials("a,b\n1,1\n".as_bytes(), p).is_err());
    }

    #[test]
    fn atomic_write_replaces() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.txt");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(fs::read(&p).unwrap(), b"two");
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
