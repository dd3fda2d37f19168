use crate::scanout::ScanSpec;
use crate::time::Nanos;

/// Indices whose timestamp is smaller than its predecessor's.
///
/// A reader that scans a frame buffer while the writer is still filling it
/// sees newer rows above older ones, which shows up as a drop in the
/// embedded row timestamps.
pub fn detect_tearing<T: PartialOrd>(row_timestamps: &[T]) -> Vec<usize> {
    row_timestamps
        .windows(2)
        .enumerate()
        .filter(|(_, w)| w[1] < w[0])
        .map(|(i, _)| i + 1)
        .collect()
}

/// A reader's pass over the single shared camera buffer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SharedBufferRead {
    /// Time each row was read.
    pub read_times: Vec<Nanos>,
    /// Embedded timestamp (readiness time) of the row contents seen.
    pub timestamps: Vec<Nanos>,
    /// Camera frame whose contents each row held when read.
    pub frames: Vec<i64>,
}

impl SharedBufferRead {
    /// Rows where the reader crossed the writer: the row holds an older
    /// frame than the row above it.
    pub fn overlap_rows(&self) -> Vec<usize> {
        (1..self.frames.len()).filter(|&i| self.frames[i] < self.frames[i - 1]).collect()
    }
}

/// Reads every row of the camera buffer top to bottom, one row each
/// `row_interval` starting at `start`, while the camera keeps writing rows at
/// its scan times. Rows are assumed written at least once before `start`.
pub fn read_shared_buffer(camera: &ScanSpec, start: Nanos, row_interval: Nanos) -> SharedBufferRead {
    let period = camera.frame_period().get();
    let rows = camera.rows();
    let mut read = SharedBufferRead {
        read_times: Vec::with_capacity(rows as usize),
        timestamps: Vec::with_capacity(rows as usize),
        frames: Vec::with_capacity(rows as usize),
    };
    for k in 0..rows {
        let t = start + Nanos(i64::from(k) * row_interval.get());
        let ready0 = camera.row_times_unchecked(k, 0).ready;
        let frame = (t - ready0).get().div_euclid(period);
        read.read_times.push(t);
        read.frames.push(frame);
        read.timestamps.push(camera.row_times_unchecked(k, frame).ready);
    }
    read
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scanout::ScanRole;
    use proptest::prelude::*;

    #[test]
    fn examples() {
        assert!(detect_tearing(&[1.0, 2.0, 3.0, 4.0]).is_empty());
        assert_eq!(detect_tearing(&[1.0, 2.0, 3.0, 1.5, 4.0]), vec![3]);
        assert!(detect_tearing(&[Nanos(5)]).is_empty());
        assert!(detect_tearing(&[Nanos(5), Nanos(5)]).is_empty());
    }

    #[test]
    fn reader_ahead_of_writer_tears_once() {
        let cam = ScanSpec::new(ScanRole::Camera, 1000, Nanos(10_000_000), Nanos(1_000)).unwrap();
        // Fast reader starting mid-scan: rows above the beam are new, below old.
        let read = read_shared_buffer(&cam, Nanos(25_000_000), Nanos(1_000));
        assert_eq!(read.overlap_rows().len(), 1);
        assert_eq!(detect_tearing(&read.timestamps), read.overlap_rows());
    }

    proptest! {
        #[test]
        fn flagged_rows_match_overlap(
            rows in 2u32..400,
            start in 0i64..40_000_000,
            interval in 1i64..200_000,
        ) {
            let cam = ScanSpec::new(ScanRole::Camera, rows, Nanos(13_888_889), Nanos(100)).unwrap();
            let read = read_shared_buffer(&cam, Nanos(14_000_000 + start), Nanos(interval));
            prop_assert_eq!(detect_tearing(&read.timestamps), read.overlap_rows());
        }
    }
}
