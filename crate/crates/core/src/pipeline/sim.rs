use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::fmt;

use serde::Serialize;

use super::{JitterSampler, PipelineConfig, PipelineError, PipelineMode};
use crate::optics::LatencyField;
use crate::time::Nanos;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    RowWritten,
    SliceDispatched,
    SliceCompleted,
    RowEmitted,
    Tear,
}

impl EventKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::RowWritten => "row_written",
            EventKind::SliceDispatched => "slice_dispatched",
            EventKind::SliceCompleted => "slice_completed",
            EventKind::RowEmitted => "row_emitted",
            EventKind::Tear => "tear",
        }
    }
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One logged simulator event. Rows are `[row_start, row_end)`; camera rows
/// for `row_written`, display rows otherwise. `frame` is the camera frame for
/// camera-side events and full-frame dispatches, the display frame otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct TraceEvent {
    pub time: Nanos,
    pub kind: EventKind,
    pub row_start: u32,
    pub row_end: u32,
    pub frame: i64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimTrace {
    pub events: Vec<TraceEvent>,
    /// Mean over simulated frames of emit-mid minus integration-mid of the
    /// displayed source row, per mapping grid pixel.
    pub per_pixel_latency: LatencyField,
    /// Number of maximal runs of torn rows, counted per slice and frame.
    pub tear_count: u64,
    pub frames: u32,
}

impl SimTrace {
    pub fn events_of(&self, kind: EventKind) -> impl Iterator<Item = &TraceEvent> {
        self.events.iter().filter(move |e| e.kind == kind)
    }
}

// Same-instant ordering: a camera row ready at a dispatch instant is usable,
// a slice completing at a row's emit start is not torn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Action {
    CameraReady { row: u32, frame: i64 },
    Complete { job: usize },
    Flip { job: usize },
    Emit { row: u32, frame: i64 },
    Dispatch { slice: usize, frame: i64 },
}

impl Action {
    fn priority(&self) -> u8 {
        match self {
            Action::CameraReady { .. } => 0,
            Action::Complete { .. } => 1,
            Action::Flip { .. } => 2,
            Action::Emit { .. } => 3,
            Action::Dispatch { .. } => 4,
        }
    }
}

#[derive(Debug, PartialEq, Eq)]
struct Scheduled {
    time: Nanos,
    seq: u64,
    action: Action,
}

impl Ord for Scheduled {
    fn cmp(&self, other: &Self) -> Ordering {
        // BinaryHeap is a max-heap; reverse for earliest first.
        (other.time, other.action.priority(), other.seq).cmp(&(
            self.time,
            self.action.priority(),
            self.seq,
        ))
    }
}

impl PartialOrd for Scheduled {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Debug, Clone, Copy)]
struct Content {
    integration_mid: Nanos,
}

struct Job {
    frame: i64,
    rows: std::ops::Range<u32>,
    snapshot: Vec<(usize, Option<Content>)>,
    stale_rows: Vec<u32>,
}

struct Queue {
    heap: BinaryHeap<Scheduled>,
    seq: u64,
}

impl Queue {
    fn push(&mut self, time: Nanos, action: Action) {
        self.heap.push(Scheduled { time, seq: self.seq, action });
        self.seq += 1;
    }
}

/// Runs the event-driven pipeline over display frames `0..frames`.
///
/// Jitter is drawn from a generator seeded with `seed`, one draw per dispatch
/// in dispatch order. The configuration is validated first, including the
/// camera buffer requirement.
pub fn simulate(config: &PipelineConfig, frames: u32, seed: u64) -> Result<SimTrace, PipelineError> {
    if frames == 0 {
        return Err(PipelineError::Config("at least one frame must be simulated".into()));
    }
    config.validate()?;
    Sim::new(config, frames, seed).run()
}

struct Sim<'a> {
    cfg: &'a PipelineConfig,
    frames: u32,
    sampler: JitterSampler,
    slices: Vec<std::ops::Range<u32>>,
    queue: Queue,
    events: Vec<TraceEvent>,
    // camera frame currently held by each row of the locked camera buffer
    camera_rows: Vec<Option<i64>>,
    // front buffer: displayed content per grid pixel
    front: Vec<Option<Content>>,
    // display frame of the last composite written to each display row
    row_tag: Vec<Option<i64>>,
    row_stale: Vec<bool>,
    jobs: Vec<Job>,
    latency_sum: Vec<i128>,
    latency_count: Vec<u32>,
    tear_count: u64,
    open_tear: Option<(usize, i64, usize)>,
}

impl<'a> Sim<'a> {
    fn new(cfg: &'a PipelineConfig, frames: u32, seed: u64) -> Self {
        let n = cfg.mapping.len();
        Self {
            cfg,
            frames,
            sampler: JitterSampler::new(cfg.jitter, seed),
            slices: cfg.slices(),
            queue: Queue { heap: BinaryHeap::new(), seq: 0 },
            events: Vec::new(),
            camera_rows: vec![None; cfg.camera.rows() as usize],
            front: vec![None; n],
            row_tag: vec![None; cfg.display.rows() as usize],
            row_stale: vec![false; cfg.display.rows() as usize],
            jobs: Vec::new(),
            latency_sum: vec![0; n],
            latency_count: vec![0; n],
            tear_count: 0,
            open_tear: None,
        }
    }

    fn log(&mut self, time: Nanos, kind: EventKind, rows: std::ops::Range<u32>, frame: i64) {
        self.events.push(TraceEvent { time, kind, row_start: rows.start, row_end: rows.end, frame });
    }

    fn run(mut self) -> Result<SimTrace, PipelineError> {
        let cam = self.cfg.camera;
        let disp = self.cfg.display;
        for f in 0..i64::from(self.frames) {
            for k in 0..cam.rows() {
                let t = cam.row_times_unchecked(k, f).ready;
                self.queue.push(t, Action::CameraReady { row: k, frame: f });
            }
            for r in 0..disp.rows() {
                self.queue.push(disp.row_start(r, f), Action::Emit { row: r, frame: f });
            }
            match self.cfg.mode {
                PipelineMode::Sliced => {
                    for (s, slice) in self.slices.iter().enumerate() {
                        let t = disp.row_start(slice.start, f) - self.cfg.render_lead;
                        self.queue.push(t, Action::Dispatch { slice: s, frame: f });
                    }
                }
                PipelineMode::FullFrame => {
                    let t = cam.row_times_unchecked(cam.rows() - 1, f).ready;
                    self.queue.push(t, Action::Dispatch { slice: 0, frame: f });
                }
            }
        }

        while let Some(Scheduled { time, action, .. }) = self.queue.heap.pop() {
            match action {
                Action::CameraReady { row, frame } => {
                    self.camera_rows[row as usize] = Some(frame);
                    self.log(time, EventKind::RowWritten, row..row + 1, frame);
                }
                Action::Dispatch { slice, frame } => self.dispatch(time, slice, frame),
                Action::Complete { job } => self.complete(time, job),
                Action::Flip { job } => self.flip(job),
                Action::Emit { row, frame } => self.emit(time, row, frame),
            }
        }
        self.finish()
    }

    fn dispatch(&mut self, time: Nanos, slice: usize, frame: i64) {
        let rows = self.slices[slice].clone();
        let m = &self.cfg.mapping;
        let cam = &self.cfg.camera;
        let mut snapshot = Vec::new();
        let mut stale_rows = Vec::new();
        for j in m.grid_rows_in(rows.clone()) {
            let mut stale = false;
            for i in 0..m.grid_dims().0 {
                let idx = m.index(i, j);
                let Some(k) = m.last_source_row(idx) else { continue };
                let held = self.camera_rows[k as usize];
                if held != Some(frame) {
                    stale = true;
                }
                let content = held.map(|f| Content {
                    integration_mid: cam.row_times_unchecked(k, f).integration_mid,
                });
                snapshot.push((idx, content));
            }
            if stale {
                stale_rows.push(m.display_row(j));
            }
        }
        let duration = self.sampler.sample();
        let job = self.jobs.len();
        self.jobs.push(Job { frame, rows: rows.clone(), snapshot, stale_rows });
        self.log(time, EventKind::SliceDispatched, rows, frame);
        self.queue.push(time + duration, Action::Complete { job });
    }

    fn complete(&mut self, time: Nanos, job: usize) {
        let (rows, frame) = (self.jobs[job].rows.clone(), self.jobs[job].frame);
        self.log(time, EventKind::SliceCompleted, rows.clone(), frame);
        match self.cfg.mode {
            PipelineMode::Sliced => {
                self.write_front(job);
                for r in rows {
                    self.row_tag[r as usize] = Some(frame);
                    self.row_stale[r as usize] = false;
                }
                let stale = std::mem::take(&mut self.jobs[job].stale_rows);
                for r in stale {
                    self.row_stale[r as usize] = true;
                }
            }
            PipelineMode::FullFrame => {
                // Double-buffered: shown from the first vsync at or after completion.
                let disp = &self.cfg.display;
                let since = (time - disp.row_start(0, 0)).get();
                let period = disp.frame_period().get();
                let g = since.div_euclid(period) + i64::from(since.rem_euclid(period) != 0);
                if g < i64::from(self.frames) {
                    self.queue.push(disp.row_start(0, g), Action::Flip { job });
                }
            }
        }
    }

    fn flip(&mut self, job: usize) {
        self.write_front(job);
    }

    fn write_front(&mut self, job: usize) {
        let snapshot = std::mem::take(&mut self.jobs[job].snapshot);
        for (idx, content) in snapshot {
            self.front[idx] = content;
        }
    }

    fn emit(&mut self, time: Nanos, row: u32, frame: i64) {
        self.log(time, EventKind::RowEmitted, row..row + 1, frame);
        if self.cfg.mode == PipelineMode::Sliced {
            let torn = self.row_tag[row as usize] != Some(frame) || self.row_stale[row as usize];
            if torn {
                self.record_tear(time, row, frame);
            }
        }
        let m = &self.cfg.mapping;
        if !row.is_multiple_of(m.stride()) {
            return;
        }
        let j = row / m.stride();
        if j >= m.grid_dims().1 {
            return;
        }
        let emit_mid = time + self.cfg.display.integration().half();
        for i in 0..m.grid_dims().0 {
            let idx = m.index(i, j);
            if let Some(c) = self.front[idx] {
                self.latency_sum[idx] += i128::from((emit_mid - c.integration_mid).get());
                self.latency_count[idx] += 1;
            }
        }
    }

    fn record_tear(&mut self, time: Nanos, row: u32, frame: i64) {
        let slice = match self.cfg.mode {
            PipelineMode::Sliced => (row / self.cfg.rows_per_slice()) as usize,
            PipelineMode::FullFrame => 0,
        };
        if let Some((s, f, e)) = self.open_tear {
            if s == slice && f == frame && self.events[e].row_end == row {
                self.events[e].row_end = row + 1;
                return;
            }
        }
        self.open_tear = Some((slice, frame, self.events.len()));
        self.tear_count += 1;
        self.log(time, EventKind::Tear, row..row + 1, frame);
    }

    fn finish(self) -> Result<SimTrace, PipelineError> {
        let valid: Vec<bool> = self.latency_count.iter().map(|&c| c > 0).collect();
        let values: Vec<Nanos> = self
            .latency_sum
            .iter()
            .zip(&self.latency_count)
            .map(|(&s, &c)| if c == 0 { Nanos::ZERO } else { Nanos(s.div_euclid(i128::from(c)) as i64) })
            .collect();
        let field = LatencyField::new(self.cfg.mapping.grid_dims(), values, valid)
            .map_err(|_| PipelineError::NoContent)?;
        Ok(SimTrace {
            events: self.events,
            per_pixel_latency: field,
            tear_count: self.tear_count,
            frames: self.frames,
        })
    }
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::optics::{buffer_latency_field, PixelMapping};
    use crate::pipeline::JitterModel;
    use crate::scanout::{ScanRole, ScanSpec};

    const FP: Nanos = Nanos(13_888_889);

    fn small(mode: PipelineMode, lead: Nanos, jitter: JitterModel) -> PipelineConfig {
        let camera = ScanSpec::new(ScanRole::Camera, 64, FP, Nanos::from_millis(1)).unwrap();
        let display = ScanSpec::new(ScanRole::Display, 64, FP, Nanos::from_millis(1)).unwrap();
        let cfg = PipelineConfig {
            camera,
            display,
            mapping: Arc::new(PixelMapping::identity((8, 64))),
            render_lead: lead,
            slice_budget: Nanos::from_millis(1),
            buffer_rows: 64,
            mode,
            jitter,
        };
        cfg.with_aligned_camera()
    }

    #[test]
    fn identity_pipeline_has_no_tears_and_closed_form_latency() {
        let cfg = small(PipelineMode::Sliced, Nanos(200_000), JitterModel::none(Nanos(20_000)));
        let trace = simulate(&cfg, 4, 1).unwrap();
        assert_eq!(trace.tear_count, 0);
        let field = buffer_latency_field(&cfg.mapping, &cfg.camera, &cfg.display).unwrap();
        let extra = Nanos(500_000) + Nanos(500_000);
        for (sim, closed) in trace.per_pixel_latency.values().iter().zip(field.values()) {
            assert_eq!(*sim, *closed + extra);
        }
    }

    #[test]
    fn events_sorted_and_emissions_complete() {
        let cfg = small(PipelineMode::Sliced, Nanos(200_000), JitterModel::uniform(Nanos(0), Nanos(400_000)));
        let trace = simulate(&cfg, 3, 9).unwrap();
        assert!(trace.events.windows(2).all(|w| w[0].time <= w[1].time));
        let mut seen = vec![0u32; 64 * 3];
        for e in trace.events_of(EventKind::RowEmitted) {
            seen[(e.frame * 64 + i64::from(e.row_start)) as usize] += 1;
        }
        assert!(seen.iter().all(|&c| c == 1));
    }

    #[test]
    fn late_dispatch_tears_every_slice() {
        let jitter = JitterModel::spike(Nanos(20_000), Nanos(1_500_000), 1.0);
        let cfg = small(PipelineMode::Sliced, Nanos(200_000), jitter);
        let trace = simulate(&cfg, 2, 5).unwrap();
        let slices = cfg.slices().len() as u64;
        assert_eq!(trace.tear_count, slices * 2);
    }

    #[test]
    fn completion_at_emit_start_is_not_torn() {
        let cfg = small(PipelineMode::Sliced, Nanos(20_000), JitterModel::none(Nanos(20_000)));
        assert_eq!(simulate(&cfg, 2, 0).unwrap().tear_count, 0);
        let cfg = small(PipelineMode::Sliced, Nanos(19_999), JitterModel::none(Nanos(20_000)));
        assert!(simulate(&cfg, 2, 0).unwrap().tear_count > 0);
    }

    #[test]
    fn full_frame_is_much_slower() {
        let jitter = JitterModel::none(Nanos(20_000));
        let sliced = simulate(&small(PipelineMode::Sliced, Nanos(200_000), jitter), 4, 0).unwrap();
        let full = simulate(&small(PipelineMode::FullFrame, Nanos(200_000), jitter), 4, 0).unwrap();
        assert_eq!(full.tear_count, 0);
        assert!(full.per_pixel_latency.stat_mean() > sliced.per_pixel_latency.stat_mean() + FP.half());
    }

    #[test]
    fn insufficient_buffer_is_rejected() {
        let mut cfg = small(PipelineMode::Sliced, Nanos(200_000), JitterModel::none(Nanos(0)));
        // vertical flip: the bottom camera row feeds the top display row
        let source: Vec<_> =
            (0..64).flat_map(|r| (0..8).map(move |c| (f64::from(c), f64::from(63 - r)))).collect();
        let valid = vec![true; source.len()];
        cfg.mapping = Arc::new(PixelMapping::from_parts((8, 64), (8, 64), 1, source, valid).unwrap());
        assert_eq!(cfg.required_buffer_rows().unwrap(), 126);
        cfg.buffer_rows = 125;
        assert!(matches!(simulate(&cfg, 1, 0), Err(PipelineError::InsufficientBuffer { .. })));
    }
}
