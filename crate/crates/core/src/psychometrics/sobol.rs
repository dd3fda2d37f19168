use super::PsychometricsError;

/// First `n` points of the one-dimensional Sobol sequence in `[0, 1)`,
/// skipping the initial zero point.
///
/// Gray-code construction with direction numbers `v_k = 2^(31 - k)`, so every
/// value is an exact dyadic fraction.
pub fn sobol_points(n: usize) -> Vec<f64> {
    let mut x: u32 = 0;
    (1..=n as u64)
        .map(|i| {
            let c = (i - 1).trailing_ones();
            x ^= 1u32 << (31 - c);
            f64::from(x) / 4_294_967_296.0
        })
        .collect()
}

/// `n` Sobol points scaled affinely onto `[lo, hi]`.
pub fn sobol_latencies(n: usize, lo: f64, hi: f64) -> Result<Vec<f64>, PsychometricsError> {
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(PsychometricsError::InvalidRange { lo, hi });
    }
    if n > 1 << 31 {
        return Err(PsychometricsError::TooManyPoints(n));
    }
    Ok(sobol_points(n).into_iter().map(|u| lo + u * (hi - lo)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn leading_points() {
        assert!(sobol_latencies(0, 0.0, 25.0).unwrap().is_empty());
        assert_eq!(sobol_latencies(1, 0.0, 25.0).unwrap(), vec![12.5]);
        assert_eq!(
            sobol_latencies(5, 0.0, 25.0).unwrap(),
            vec![12.5, 18.75, 6.25, 9.375, 21.875]
        );
        assert!(sobol_latencies(3, 5.0, 5.0).is_err());
    }

    #[test]
    fn first_power_of_two_block_is_a_lattice() {
        let mut p = sobol_points(15);
        p.sort_by(f64::total_cmp);
        let expect: Vec<f64> = (1..16).map(|i| f64::from(i) / 16.0).collect();
        assert_eq!(p, expect);
    }
}
