//! Real-thread exercise of the single-writer shared row buffer.
//!
//! One writer thread stamps rows frame after frame; one reader thread copies
//! the buffer repeatedly and checks each copy with [`detect_tearing`]. Each
//! stamp encodes `(frame, row)` so the reader can also recover the ground
//! truth of which frame every row came from.

use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::Arc;
use std::thread;

use super::detect_tearing;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct StressReport {
    pub reads: u64,
    pub torn_reads: u64,
    /// Reads where `detect_tearing` disagreed with the decoded frame drops.
    pub mismatches: u64,
}

/// Runs one writer over `frames` frames of `rows` rows and a concurrent reader
/// until the writer finishes.
pub fn run(rows: usize, frames: u64) -> StressReport {
    assert!(rows > 0, "buffer needs at least one row");
    let buffer: Arc<Vec<AtomicU64>> = Arc::new((0..rows).map(|_| AtomicU64::new(0)).collect());
    let done = Arc::new(AtomicBool::new(false));
    let stamp = move |frame: u64, row: usize| frame * rows as u64 + row as u64 + 1;

    let writer = {
        let buffer = Arc::clone(&buffer);
        let done = Arc::clone(&done);
        thread::spawn(move || {
            for f in 0..frames {
                for (r, slot) in buffer.iter().enumerate() {
                    slot.store(stamp(f, r), Ordering::Release);
                }
            }
            done.store(true, Ordering::Release);
        })
    };

    let reader = {
        let buffer = Arc::clone(&buffer);
        let done = Arc::clone(&done);
        thread::spawn(move || {
            let mut report = StressReport::default();
            let mut copy = vec![0u64; rows];
            loop {
                let finished = done.load(Ordering::Acquire);
                for (dst, slot) in copy.iter_mut().zip(buffer.iter()) {
                    *dst = slot.load(Ordering::Acquire);
                }
                let flagged = detect_tearing(&copy);
                // unwritten rows (0) decode to frame -1
                let frame_of = |s: u64| if s == 0 { -1 } else { ((s - 1) / rows as u64) as i64 };
                let truth: Vec<usize> =
                    (1..rows).filter(|&i| frame_of(copy[i]) < frame_of(copy[i - 1])).collect();
                report.reads += 1;
                report.torn_reads += u64::from(!flagged.is_empty());
                report.mismatches += u64::from(flagged != truth);
                if finished {
                    break;
                }
            }
            report
        })
    };

    writer.join().expect("writer thread panicked");
    reader.join().expect("reader thread panicked")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reader_detects_every_frame_drop() {
        let report = run(256, 2_000);
        assert!(report.reads > 0);
        assert_eq!(report.mismatches, 0);
    }
}
