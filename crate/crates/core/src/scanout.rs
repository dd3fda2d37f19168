//! Rolling-scan timing for a camera sensor or a display panel.
//!
//! Both devices scan rows sequentially across the active part of a frame
//! period. Row `r` of frame `f` starts at
//!
//! ```text
//! f * frame_period + phase + floor(r * active_period / rows)
//! ```
//!
//! where `active_period = frame_period * active_scan_fraction`. The floor keeps
//! every instant on the nanosecond grid; consecutive rows are therefore spaced
//! by `floor(row_period)` or `ceil(row_period)` nanoseconds.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::time::Nanos;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScanRole {
    Camera,
    Display,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScanError {
    #[error("row count must be at least 1")]
    NoRows,
    #[error("frame period must be positive, got {0} ms")]
    NonPositiveFramePeriod(Nanos),
    #[error("active scan fraction must lie in (0, 1], got {0}")]
    ActiveFraction(f64),
    #[error("integration {integration} ms must be non-negative and shorter than the frame period {frame_period} ms")]
    Integration { integration: Nanos, frame_period: Nanos },
    #[error("readout delay must be non-negative, got {0} ms")]
    ReadoutDelay(Nanos),
    #[error("row period rounds to zero ({rows} rows over {active} ms)")]
    DegenerateRowPeriod { rows: u32, active: Nanos },
    #[error("row {row} out of range for a {rows}-row scan")]
    RowOutOfRange { row: u32, rows: u32 },
    #[error("operation needs a {expected:?} scan, got {actual:?}")]
    WrongRole { expected: ScanRole, actual: ScanRole },
}

/// Rolling-scan timing of one sensor or display.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanSpec {
    role: ScanRole,
    rows: u32,
    frame_period: Nanos,
    active_scan_fraction: f64,
    active_period: Nanos,
    integration: Nanos,
    phase: Nanos,
    readout_delay: Nanos,
}

/// Timing of a single row in a single frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RowTimes {
    pub row: u32,
    pub integration_start: Nanos,
    pub integration_mid: Nanos,
    /// Camera: end of exposure plus readout delay. Display: start of emission.
    pub ready: Nanos,
}

impl ScanSpec {
    /// A spec with full-frame scanout, zero phase and zero readout delay.
    pub fn new(
        role: ScanRole,
        rows: u32,
        frame_period: Nanos,
        integration: Nanos,
    ) -> Result<Self, ScanError> {
        Self::with_params(role, rows, frame_period, 1.0, integration, Nanos::ZERO, Nanos::ZERO)
    }

    pub fn with_params(
        role: ScanRole,
        rows: u32,
        frame_period: Nanos,
        active_scan_fraction: f64,
        integration: Nanos,
        phase: Nanos,
        readout_delay: Nanos,
    ) -> Result<Self, ScanError> {
        if rows == 0 {
            return Err(ScanError::NoRows);
        }
        if frame_period <= Nanos::ZERO {
            return Err(ScanError::NonPositiveFramePeriod(frame_period));
        }
        if !(active_scan_fraction > 0.0 && active_scan_fraction <= 1.0) {
            return Err(ScanError::ActiveFraction(active_scan_fraction));
        }
        if integration < Nanos::ZERO || integration >= frame_period {
            return Err(ScanError::Integration { integration, frame_period });
        }
        if readout_delay < Nanos::ZERO {
            return Err(ScanError::ReadoutDelay(readout_delay));
        }
        let active_period = if active_scan_fraction == 1.0 {
            frame_period
        } else {
            Nanos((frame_period.get() as f64 * active_scan_fraction).round() as i64)
        };
        if active_period.get() < i64::from(rows) {
            return Err(ScanError::DegenerateRowPeriod { rows, active: active_period });
        }
        Ok(Self {
            role,
            rows,
            frame_period,
            active_scan_fraction,
            active_period,
            integration,
            phase,
            readout_delay,
        })
    }

    pub fn role(&self) -> ScanRole {
        self.role
    }

    pub fn rows(&self) -> u32 {
        self.rows
    }

    pub fn frame_period(&self) -> Nanos {
        self.frame_period
    }

    pub fn active_scan_fraction(&self) -> f64 {
        self.active_scan_fraction
    }

    pub fn active_period(&self) -> Nanos {
        self.active_period
    }

    /// Exposure for a camera, persistence for a display.
    pub fn integration(&self) -> Nanos {
        self.integration
    }

    pub fn phase(&self) -> Nanos {
        self.phase
    }

    pub fn readout_delay(&self) -> Nanos {
        self.readout_delay
    }

    /// Returns a copy with a different phase; every row time shifts by the
    /// difference.
    pub fn with_phase(&self, phase: Nanos) -> Self {
        Self { phase, ..*self }
    }

    /// Mean row period in nanoseconds, for reporting only.
    pub fn row_period_ns(&self) -> f64 {
        self.active_period.get() as f64 / f64::from(self.rows)
    }

    fn check_row(&self, row: u32) -> Result<(), ScanError> {
        if row >= self.rows {
            Err(ScanError::RowOutOfRange { row, rows: self.rows })
        } else {
            Ok(())
        }
    }

    fn expect_role(&self, expected: ScanRole) -> Result<(), ScanError> {
        if self.role != expected {
            Err(ScanError::WrongRole { expected, actual: self.role })
        } else {
            Ok(())
        }
    }

    /// Offset of `row` from the start of its frame's scan. No range check.
    pub fn row_offset(&self, row: u32) -> Nanos {
        let num = i128::from(row) * i128::from(self.active_period.get());
        Nanos(num.div_euclid(i128::from(self.rows)) as i64)
    }

    /// Start of scan for `row` in `frame` (integration start for a camera,
    /// emission start for a display). No range check.
    pub fn row_start(&self, row: u32, frame: i64) -> Nanos {
        Nanos(frame * self.frame_period.get()) + self.phase + self.row_offset(row)
    }

    /// Midpoint of a display row's persistence window.
    pub fn display_emit_mid(&self, row: u32, frame: i64) -> Result<Nanos, ScanError> {
        self.expect_role(ScanRole::Display)?;
        self.check_row(row)?;
        Ok(self.row_start(row, frame) + self.integration.half())
    }

    /// Start of a display row's emission.
    pub fn display_emit_start(&self, row: u32, frame: i64) -> Result<Nanos, ScanError> {
        self.expect_role(ScanRole::Display)?;
        self.check_row(row)?;
        Ok(self.row_start(row, frame))
    }

    /// Exposure window and timestamp instant of a camera row.
    pub fn camera_row_times(&self, row: u32, frame: i64) -> Result<RowTimes, ScanError> {
        self.expect_role(ScanRole::Camera)?;
        self.check_row(row)?;
        Ok(self.row_times_unchecked(row, frame))
    }

    /// Row timing for either role; `ready` follows the role's convention.
    pub fn row_times(&self, row: u32, frame: i64) -> Result<RowTimes, ScanError> {
        self.check_row(row)?;
        Ok(self.row_times_unchecked(row, frame))
    }

    pub(crate) fn row_times_unchecked(&self, row: u32, frame: i64) -> RowTimes {
        let start = self.row_start(row, frame);
        let ready = match self.role {
            ScanRole::Camera => start + self.integration + self.readout_delay,
            ScanRole::Display => start,
        };
        RowTimes {
            row,
            integration_start: start,
            integration_mid: start + self.integration.half(),
            ready,
        }
    }

    /// Number of whole rows scanned within `budget`; negative budgets give 0.
    pub fn rows_in_budget(&self, budget: Nanos) -> u64 {
        if budget <= Nanos::ZERO {
            return 0;
        }
        let num = i128::from(budget.get()) * i128::from(self.rows);
        (num / i128::from(self.active_period.get())) as u64
    }

    /// Smallest whole-nanosecond duration spanning `rows` row periods, i.e.
    /// `ceil(rows * row_period)`. Inverse of [`rows_in_budget`](Self::rows_in_budget).
    pub fn rows_duration(&self, rows: u64) -> Nanos {
        let num = i128::from(rows) * i128::from(self.active_period.get());
        let den = i128::from(self.rows);
        Nanos(((num + den - 1) / den) as i64)
    }

    /// Number of rows needed to cover `duration`, rounded up.
    pub fn rows_covering(&self, duration: Nanos) -> u64 {
        if duration <= Nanos::ZERO {
            return 0;
        }
        let num = i128::from(duration.get()) * i128::from(self.rows);
        let den = i128::from(self.active_period.get());
        ((num + den - 1) / den) as u64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn display() -> ScanSpec {
        ScanSpec::new(ScanRole::Display, 3000, Nanos(13_888_889), Nanos::from_millis(1)).unwrap()
    }

    fn camera() -> ScanSpec {
        ScanSpec::new(ScanRole::Camera, 3160, Nanos(13_888_889), Nanos::from_millis(1)).unwrap()
    }

    #[test]
    fn display_emit_mid_examples() {
        let d = display();
        assert_eq!(d.display_emit_mid(0, 0).unwrap(), Nanos(500_000));
        // 1500 * 13_888_889 / 3000 = 6_944_444.5, floored
        assert_eq!(d.display_emit_mid(1500, 0).unwrap(), Nanos(7_444_444));
        assert_eq!(d.display_emit_mid(0, 1).unwrap(), Nanos(14_388_889));
    }

    #[test]
    fn camera_row_times_examples() {
        let c = camera();
        let r0 = c.camera_row_times(0, 0).unwrap();
        assert_eq!(r0.integration_mid, Nanos(500_000));
        assert_eq!(r0.ready, Nanos(1_000_000));

        let last = c.camera_row_times(3159, 0).unwrap();
        // 3159 * 13_888_889 / 3160 = 13_884_493.8
        assert_eq!(last.integration_start, Nanos(13_884_493));
        assert_eq!(last.integration_mid, Nanos(14_384_493));
        assert_eq!(last.ready, Nanos(14_884_493));
        assert_eq!((last.integration_mid.as_ms() * 1e4).round() / 1e4, 14.3845);
        assert_eq!((last.ready.as_ms() * 1e4).round() / 1e4, 14.8845);

        let shifted = c.with_phase(Nanos(-400_000));
        let s = shifted.camera_row_times(3159, 0).unwrap();
        assert_eq!(s.integration_mid - last.integration_mid, Nanos(-400_000));
        assert_eq!(s.ready - last.ready, Nanos(-400_000));
    }

    #[test]
    fn row_range_and_role_errors() {
        let d = display();
        assert_eq!(
            d.display_emit_mid(3000, 0),
            Err(ScanError::RowOutOfRange { row: 3000, rows: 3000 })
        );
        assert!(matches!(camera().display_emit_mid(0, 0), Err(ScanError::WrongRole { .. })));
        assert!(matches!(d.camera_row_times(0, 0), Err(ScanError::WrongRole { .. })));
    }

    #[test]
    fn invalid_specs_rejected() {
        let fp = Nanos(13_888_889);
        assert_eq!(
            ScanSpec::new(ScanRole::Camera, 0, fp, Nanos::ZERO),
            Err(ScanError::NoRows)
        );
        assert!(ScanSpec::new(ScanRole::Camera, 10, Nanos::ZERO, Nanos::ZERO).is_err());
        assert!(ScanSpec::new(ScanRole::Camera, 10, fp, fp).is_err());
        assert!(ScanSpec::new(ScanRole::Camera, 10, fp, Nanos(-1)).is_err());
        for bad in [0.0, -0.5, 1.5, f64::NAN] {
            assert!(ScanSpec::with_params(
                ScanRole::Display,
                10,
                fp,
                bad,
                Nanos::ZERO,
                Nanos::ZERO,
                Nanos::ZERO
            )
            .is_err());
        }
        assert!(matches!(
            ScanSpec::new(ScanRole::Display, 100, Nanos(50), Nanos::ZERO),
            Err(ScanError::DegenerateRowPeriod { .. })
        ));
    }

    #[test]
    fn rows_in_budget_examples() {
        let d = display();
        assert_eq!(d.rows_in_budget(Nanos::from_micros(100)), 21);
        assert_eq!(d.rows_in_budget(Nanos::ZERO), 0);
        assert_eq!(d.rows_in_budget(d.frame_period()), 3000);
    }

    #[test]
    fn blanking_shortens_row_period() {
        let d = ScanSpec::with_params(
            ScanRole::Display,
            3000,
            Nanos(13_888_889),
            0.9,
            Nanos::from_millis(1),
            Nanos::ZERO,
            Nanos::ZERO,
        )
        .unwrap();
        assert_eq!(d.active_period(), Nanos(12_500_000));
        assert_eq!(d.rows_in_budget(Nanos::from_micros(100)), 24);
    }

    proptest! {
        #[test]
        fn consecutive_rows_differ_by_one_row_period(row in 0u32..2999, frame in -3i64..50) {
            let d = display();
            let step = d.row_start(row + 1, frame) - d.row_start(row, frame);
            let rp = d.row_period_ns();
            prop_assert!(step.get() == rp.floor() as i64 || step.get() == rp.ceil() as i64);
        }

        #[test]
        fn affine_in_frame(row in 0u32..3160, frame in -3i64..50) {
            let c = camera();
            let a = c.camera_row_times(row, frame).unwrap();
            let b = c.camera_row_times(row, frame + 1).unwrap();
            prop_assert_eq!(b.integration_start - a.integration_start, c.frame_period());
            prop_assert_eq!(b.ready - a.ready, c.frame_period());
        }

        #[test]
        fn phase_shift_is_exact(row in 0u32..3000, frame in 0i64..20, delta in -5_000_000i64..5_000_000) {
            let d = display();
            let s = d.with_phase(Nanos(delta));
            prop_assert_eq!(
                s.display_emit_mid(row, frame).unwrap() - d.display_emit_mid(row, frame).unwrap(),
                Nanos(delta)
            );
            let c = camera();
            let cs = c.with_phase(Nanos(delta));
            let row = row.min(3159);
            prop_assert_eq!(
                cs.camera_row_times(row, frame).unwrap().ready - c.camera_row_times(row, frame).unwrap().ready,
                Nanos(delta)
            );
        }

        #[test]
        fn strictly_increasing(row in 0u32..2999, frame in 0i64..20) {
            let d = display();
            prop_assert!(d.display_emit_mid(row + 1, frame).unwrap() > d.display_emit_mid(row, frame).unwrap());
            prop_assert!(d.display_emit_mid(row, frame + 1).unwrap() > d.display_emit_mid(2999, frame).unwrap());
        }

        #[test]
        fn rows_in_budget_monotone(a in 0i64..30_000_000, b in 0i64..30_000_000) {
            let d = display();
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(d.rows_in_budget(Nanos(lo)) <= d.rows_in_budget(Nanos(hi)));
        }

        #[test]
        fn rows_in_budget_inverts_rows_duration(n in 0u64..6000) {
            let d = display();
            prop_assert_eq!(d.rows_in_budget(d.rows_duration(n)), n);
            let c = camera();
            prop_assert_eq!(c.rows_in_budget(c.rows_duration(n)), n);
        }
    }
}
