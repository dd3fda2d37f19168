use super::{PipelineConfig, PipelineMode};
use crate::time::Nanos;

/// First emission (persistence midpoint) of the display-center pixel that can
/// carry a light pulse which becomes available to the compositor at
/// `pulse_time`.
///
/// In sliced mode the pulse is picked up by the first frame whose dispatch of
/// the center row's slice happens at or after `pulse_time`; a pulse exactly at
/// the deadline still makes it. In full-frame mode it is picked up by the
/// first camera frame completing at or after `pulse_time` and shown from the
/// next vsync after that frame's composite finishes.
pub fn led_pulse_probe(config: &PipelineConfig, pulse_time: Nanos) -> Nanos {
    let display = &config.display;
    let row = display.rows() / 2;
    let period = display.frame_period().get();
    let emit_mid = |frame: i64| display.row_start(row, frame) + display.integration().half();
    match config.mode {
        PipelineMode::Sliced => {
            let first = row - row % config.rows_per_slice();
            let deadline0 = display.row_start(first, 0) - config.render_lead;
            let frame = ceil_div((pulse_time - deadline0).get(), period).max(0);
            emit_mid(frame)
        }
        PipelineMode::FullFrame => {
            let camera = &config.camera;
            let done0 = camera.row_times_unchecked(camera.rows() - 1, 0).ready;
            let cam_frame = ceil_div((pulse_time - done0).get(), period).max(0);
            let done = camera.row_times_unchecked(camera.rows() - 1, cam_frame).ready
                + config.jitter.base_dispatch;
            let frame = ceil_div((done - display.row_start(0, 0)).get(), period);
            emit_mid(frame)
        }
    }
}

fn ceil_div(a: i64, b: i64) -> i64 {
    a.div_euclid(b) + i64::from(a.rem_euclid(b) != 0)
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::optics::PixelMapping;
    use crate::pipeline::JitterModel;
    use crate::scanout::{ScanRole, ScanSpec};

    fn config(rows_per_slice_budget: Nanos) -> PipelineConfig {
        let fp = Nanos(13_888_889);
        PipelineConfig {
            camera: ScanSpec::new(ScanRole::Camera, 3000, fp, Nanos::from_millis(1)).unwrap(),
            display: ScanSpec::new(ScanRole::Display, 3000, fp, Nanos::from_millis(1)).unwrap(),
            mapping: Arc::new(PixelMapping::identity((4, 3000))),
            render_lead: Nanos(200_000),
            slice_budget: rows_per_slice_budget,
            buffer_rows: 0,
            mode: PipelineMode::Sliced,
            jitter: JitterModel::none(Nanos(20_000)),
        }
    }

    #[test]
    fn lead_window_boundaries() {
        // one-row slices: the center row starts its own slice
        let cfg = config(Nanos(4_629));
        assert_eq!(cfg.rows_per_slice(), 1);
        let emit = cfg.display.row_start(1500, 0);
        let mid = emit + Nanos(500_000);
        let deadline = emit - cfg.render_lead;
        assert_eq!(led_pulse_probe(&cfg, deadline - Nanos(1)), mid);
        assert_eq!(led_pulse_probe(&cfg, deadline), mid);
        assert_eq!(led_pulse_probe(&cfg, deadline + Nanos(1)), mid + cfg.display.frame_period());
    }

    #[test]
    fn slice_deadline_governs_the_center_row() {
        let cfg = config(Nanos(100_000));
        let n = cfg.rows_per_slice();
        let first = 1500 - 1500 % n;
        let deadline = cfg.display.row_start(first, 2) - cfg.render_lead;
        let mid = cfg.display.row_start(1500, 2) + Nanos(500_000);
        assert_eq!(led_pulse_probe(&cfg, deadline), mid);
        assert_eq!(led_pulse_probe(&cfg, deadline + Nanos(1)), mid + cfg.display.frame_period());
    }
}
