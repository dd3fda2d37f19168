//! Full-frame compositing on the preset, with the camera either aligned for
//! beam racing or genlocked to display vsync.

use std::sync::Arc;

use scanlat::config::Config;
use scanlat::pipeline::{self, PipelineMode};
use scanlat::time::Nanos;

fn mean_ms(overrides: &[&str]) -> (f64, u64, Nanos, Nanos) {
    let mut all = vec!["pipeline.mode=full_frame".to_string()];
    all.extend(overrides.iter().map(|s| s.to_string()));
    let cfg = Config::load(Some("camsicle72"), None, &all).unwrap();
    let pc = cfg.pipeline(Arc::new(cfg.mapping().unwrap())).unwrap();
    assert_eq!(pc.mode, PipelineMode::FullFrame);
    let trace = pipeline::simulate(&pc, 4, 0).unwrap();
    (trace.per_pixel_latency.stat_mean().as_ms(), trace.tear_count, pc.display.frame_period(), pc.display.active_period())
}

#[test]
fn aligned_camera_costs_one_frame() {
    let (mean, tears, period, _) = mean_ms(&[]);
    assert_eq!(tears, 0);
    // every row waits for the whole frame, then one vsync
    assert!(mean > period.as_ms() && mean < period.as_ms() + 2.0, "{mean}");
}

#[test]
fn genlocked_camera_costs_frame_plus_half_scan() {
    let (mean, tears, period, active) = mean_ms(&["camera.phase_ms=0"]);
    assert_eq!(tears, 0);
    assert!(mean >= period.as_ms() + active.as_ms() / 2.0, "{mean}");
}
