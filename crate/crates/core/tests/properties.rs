use std::sync::Arc;

use proptest::prelude::*;

use scanlat::optics::{self, PixelMapping};
use scanlat::pipeline::{self, JitterModel, PipelineConfig, PipelineMode};
use scanlat::psychometrics;
use scanlat::scanout::{ScanRole, ScanSpec};
use scanlat::time::Nanos;

/// Exact one-dimensional star discrepancy of a point set.
fn star_discrepancy(points: &[f64]) -> f64 {
    let mut p = points.to_vec();
    p.sort_by(f64::total_cmp);
    let n = p.len() as f64;
    let worst = p
        .iter()
        .enumerate()
        .map(|(i, x)| (x - (2.0 * i as f64 + 1.0) / (2.0 * n)).abs())
        .fold(0.0, f64::max);
    1.0 / (2.0 * n) + worst
}

#[test]
fn sobol_discrepancy_is_logarithmic() {
    for n in 1..=2048usize {
        let d = star_discrepancy(&psychometrics::sobol_points(n));
        let bound = ((n as f64).log2() + 2.0) / n as f64;
        assert!(d <= bound, "n={n}: {d} > {bound}");
    }
    // a full dyadic block is a shifted lattice
    let d = star_discrepancy(&psychometrics::sobol_points(1023));
    assert!((d - 1.0 / 1024.0).abs() < 1e-12, "{d}");
}

#[test]
fn sobol_prefixes_are_stable() {
    let long = psychometrics::sobol_latencies(300, 0.0, 25.0).unwrap();
    let short = psychometrics::sobol_latencies(50, 0.0, 25.0).unwrap();
    assert_eq!(&long[..50], &short[..]);
}

fn scans(rows: u32, fp: i64, exposure: i64, persistence: i64) -> (ScanSpec, ScanSpec) {
    let cam = ScanSpec::new(ScanRole::Camera, rows, Nanos(fp), Nanos(exposure)).unwrap();
    let disp = ScanSpec::new(ScanRole::Display, rows, Nanos(fp), Nanos(persistence)).unwrap();
    (cam, disp)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    /// Shifting by the selected offset leaves a field whose minimum is zero
    /// and whose spread is unchanged.
    #[test]
    fn phase_offset_zeroes_the_minimum(
        rows in 8u32..200,
        fp in 5_000_000i64..20_000_000,
        exposure in 0i64..2_000_000,
        shift in 0u32..8,
    ) {
        let (cam, disp) = scans(rows, fp, exposure, 1_000_000);
        let source: Vec<_> = (0..rows)
            .flat_map(|r| (0..4).map(move |c| (f64::from(c), f64::from((r + shift).min(rows - 1)))))
            .collect();
        let mapping = PixelMapping::from_parts((4, rows), (4, rows), 1, source.clone(), vec![true; source.len()])
            .unwrap();
        let raw = optics::buffer_latency_field(&mapping, &cam, &disp).unwrap();
        let field = raw.shifted(optics::select_phase_offset(&raw));
        prop_assert_eq!(field.stat_min(), Nanos::ZERO);
        prop_assert_eq!(field.stat_max() - field.stat_min(), raw.stat_max() - raw.stat_min());
        let need = optics::required_buffer(&field, &cam).unwrap();
        prop_assert!(cam.rows_duration(need) >= field.stat_max());
    }

    /// Without jitter, an aligned sliced pipeline never tears and its
    /// latency is the same at every frame count.
    #[test]
    fn aligned_pipeline_is_tear_free(
        lead_us in 20i64..500,
        budget_rows in 1u64..16,
        frames in 1u32..4,
    ) {
        let rows = 64;
        let (cam, disp) = scans(rows, 13_888_889, 1_000_000, 1_000_000);
        let cfg = PipelineConfig {
            camera: cam,
            display: disp,
            mapping: Arc::new(PixelMapping::identity((8, rows))),
            render_lead: Nanos(lead_us * 1000),
            slice_budget: disp.rows_duration(budget_rows),
            buffer_rows: u64::from(rows),
            mode: PipelineMode::Sliced,
            jitter: JitterModel::none(Nanos(10_000)),
        }
        .with_aligned_camera();
        let one = pipeline::simulate(&cfg, 1, 0).unwrap();
        let many = pipeline::simulate(&cfg, frames, 0).unwrap();
        prop_assert_eq!(one.tear_count, 0);
        prop_assert_eq!(many.tear_count, 0);
        prop_assert_eq!(one.per_pixel_latency, many.per_pixel_latency);
    }
}
