//! Command-line front end.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};

use crate::config::{Config, Phase, PhaseKeyword};
use crate::export::{self, ExportError};
use crate::geometry;
use crate::optics;
use crate::pipeline;
use crate::psychometrics;
use crate::time::Nanos;
use crate::Error;

#[derive(Debug, Args)]
pub struct Source {
    /// Built-in configuration to start from (camsicle72, testbed).
    #[arg(long, global = true)]
    pub preset: Option<String>,
    /// TOML file merged over the preset.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Override one value, e.g. `--set pipeline.render_lead_ms=0.5`.
    #[arg(long = "set", value_name = "SECTION.KEY=VALUE", global = true)]
    pub overrides: Vec<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Static camera-to-display latency field with an `auto` camera phase
    /// corrected to zero minimum slack.
    ///
    /// Writes `field.csv` (column,row,latency_ns on the mapping grid),
    /// `field.pgm` and `field.pgm.scale.txt` into the output directory.
    LatencyField {
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
    },
    /// Run the compositor simulation.
    ///
    /// Writes `trace.csv` (one line per event), `latency.csv`, `latency.pgm`
    /// and `latency.pgm.scale.txt` (mean per-pixel latency) into the output
    /// directory.
    Simulate {
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
        /// Frames to simulate; defaults to `pipeline.frames`.
        #[arg(long)]
        frames: Option<u32>,
        /// Jitter seed; defaults to `pipeline.seed`.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Screen projections over the head trajectory and the binocular
    /// disparity error over one period of sinusoidal motion.
    ///
    /// Writes `projection.csv` and `disparity.csv` into the output directory.
    Geometry {
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
    },
    /// Forward separation and sweep range for both ray-origin conditions.
    ///
    /// Prints the table; also writes `table19.txt` into the output directory.
    Table19 {
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
        /// Latency in milliseconds; defaults to `table19.latency_ms`.
        #[arg(long)]
        latency_ms: Option<f64>,
    },
    /// Fit a logistic psychometric function to `latency_ms,correct` trials.
    ///
    /// Writes `fit.txt` and `curve.csv` (0.1 ms steps) into the output
    /// directory.
    Psychofit {
        #[arg(long)]
        trials: PathBuf,
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
    },
    /// Sobol-spaced latency levels.
    ///
    /// Prints one level per line; also writes `levels.txt` into the output
    /// directory.
    Sobol {
        #[arg(long)]
        count: Option<usize>,
        #[arg(long)]
        lo_ms: Option<f64>,
        #[arg(long)]
        hi_ms: Option<f64>,
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Parser)]
#[command(name = "scanlat", version, about = "Scan-line latency modelling for video see-through headsets")]
pub struct Cli {
    #[command(flatten)]
    pub source: Source,
    #[command(subcommand)]
    pub command: Command,
}

fn load_config(src: &Source) -> Result<Config, Error> {
    let file = match &src.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|source| ExportError::Io { path: path.clone(), source })?;
            Some((path.display().to_string(), text))
        }
        None => None,
    };
    Ok(Config::load(
        src.preset.as_deref(),
        file.as_ref().map(|(o, t)| (o.as_str(), t.as_str())),
        &src.overrides,
    )?)
}

fn out_dir(dir: &Path) -> Result<&Path, Error> {
    std::fs::create_dir_all(dir).map_err(|source| ExportError::Io { path: dir.to_path_buf(), source })?;
    Ok(dir)
}

fn write_field(field: &optics::LatencyField, dir: &Path, stem: &str) -> Result<(), Error> {
    export::write_atomic(&dir.join(format!("{stem}.csv")), export::field_csv(field).as_bytes())?;
    export::emit_heatmap(field, &dir.join(format!("{stem}.pgm")))?;
    Ok(())
}

/// Runs one parsed invocation and returns what it prints on success.
pub fn run(cli: &Cli) -> Result<String, Error> {
    let cfg = load_config(&cli.source)?;
    let command = &cli.command;
    let mut out = String::new();
    match command {
        Command::LatencyField { out: dir } => {
            let mapping = cfg.mapping()?;
            let camera = cfg.camera_spec()?;
            let display = cfg.display_spec()?;
            let raw = optics::buffer_latency_field(&mapping, &camera, &display)?;
            let auto = cfg.camera.phase_ms == Phase::Keyword(PhaseKeyword::Auto);
            let offset = if auto { optics::select_phase_offset(&raw) } else { Nanos::ZERO };
            let field = raw.shifted(offset);
            let required = match optics::required_buffer(&field, &camera) {
                Ok(rows) => rows.to_string(),
                Err(_) => "n/a".to_string(),
            };
            if let Some(dir) = dir {
                write_field(&field, out_dir(dir)?, "field")?;
            }
            writeln!(
                out,
                "latency field {}x{}: max {} ms, min {} ms, mean {} ms, phase offset {} ms, buffer {} rows",
                field.dims().0,
                field.dims().1,
                field.stat_max(),
                field.stat_min(),
                field.stat_mean(),
                offset,
                required
            )
            .unwrap();
        }
        Command::Simulate { out: dir, frames, seed } => {
            let mapping = Arc::new(cfg.mapping()?);
            let pc = cfg.pipeline(mapping)?;
            let frames = frames.unwrap_or(cfg.pipeline.frames);
            let seed = seed.unwrap_or(cfg.pipeline.seed);
            let trace = pipeline::simulate(&pc, frames, seed)?;
            if let Some(dir) = dir {
                let dir = out_dir(dir)?;
                export::write_atomic(&dir.join("trace.csv"), export::trace_csv(&trace).as_bytes())?;
                write_field(&trace.per_pixel_latency, dir, "latency")?;
            }
            let f = &trace.per_pixel_latency;
            writeln!(
                out,
                "simulated {frames} frames ({}): mean latency {} ms, max {} ms, {} tears",
                match pc.mode {
                    pipeline::PipelineMode::Sliced => "sliced",
                    pipeline::PipelineMode::FullFrame => "full_frame",
                },
                f.stat_mean(),
                f.stat_max(),
                trace.tear_count
            )
            .unwrap();
        }
        Command::Geometry { out: dir } => {
            let rig = cfg.rig();
            let traj = cfg.trajectory();
            traj.validate()?;
            let yaws: Vec<f64> = traj.sample_times(0.0).into_iter().map(|t| traj.yaw_deg(t)).collect();
            let rows = geometry::projection_sweep(&rig, &yaws)?;
            let (drig, dtraj, latency) = cfg.disparity_setup();
            let trace = geometry::disparity_error_trace(&drig, &dtraj, latency)?;
            if let Some(dir) = dir {
                let dir = out_dir(dir)?;
                export::write_atomic(&dir.join("projection.csv"), export::projection_csv(&rows).as_bytes())?;
                export::write_atomic(&dir.join("disparity.csv"), export::disparity_csv(&trace).as_bytes())?;
            }
            let fwd = geometry::stereo_pair(&rig, 0.0, 0.0)?;
            writeln!(
                out,
                "{} head poses ({}): forward separation {:.4} cm; disparity error at {} ms: peak {:.3} arcsec",
                rows.len(),
                rig.mode.label(),
                fwd.separation,
                latency * 1e3,
                trace.peak_arcsec
            )
            .unwrap();
        }
        Command::Table19 { out: dir, latency_ms } => {
            let latency = latency_ms.unwrap_or(cfg.table19.latency_ms) / 1e3;
            let report = geometry::table19_report(&cfg.rig(), &cfg.trajectory(), latency)?;
            let text = report.to_string();
            if let Some(dir) = dir {
                export::write_atomic(&out_dir(dir)?.join("table19.txt"), text.as_bytes())?;
            }
            out.push_str(&text);
        }
        Command::Psychofit { trials, out: dir } => {
            let data = export::read_trials_file(trials)?;
            let fit = psychometrics::fit_logistic_with(&data, &cfg.fit_options())?;
            let criterion = cfg.psychometrics.criterion;
            if let Some(dir) = dir {
                let dir = out_dir(dir)?;
                let max = data.iter().map(|t| t.latency_ms).fold(0.0, f64::max);
                export::write_atomic(&dir.join("fit.txt"), fit.report(criterion).as_bytes())?;
                export::write_atomic(&dir.join("curve.csv"), export::curve_csv(&fit, max).as_bytes())?;
            }
            let threshold = match psychometrics::threshold_at(&fit, criterion) {
                Ok(t) => format!("{t:.3} ms"),
                Err(_) => "unmeasurable".to_string(),
            };
            let boundary = fit.boundary.map_or(String::new(), |b| format!(", boundary {b}"));
            writeln!(
                out,
                "{} trials: threshold {threshold} at {criterion}, alpha {:.3} ms, beta {:.4}/ms{boundary}",
                data.len(),
                fit.alpha,
                fit.beta
            )
            .unwrap();
        }
        Command::Sobol { count, lo_ms, hi_ms, out: dir } => {
            let s = &cfg.sobol;
            let levels = psychometrics::sobol_latencies(
                count.unwrap_or(s.count),
                lo_ms.unwrap_or(s.lo_ms),
                hi_ms.unwrap_or(s.hi_ms),
            )?;
            let mut text = String::new();
            for l in &levels {
                writeln!(text, "{l}").unwrap();
            }
            if let Some(dir) = dir {
                export::write_atomic(&out_dir(dir)?.join("levels.txt"), text.as_bytes())?;
            }
            out.push_str(&text);
        }
    }
    Ok(out)
}

/// Entry point for the binary; returns the process exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match run(&cli) {
        Ok(text) => {
            print!("{text}");
            0
        }
        Err(e) => {
            eprintln!("scanlat: {e}");
            e.exit_code()
        }
    }
}
