use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::PsychometricsError;

pub const DEFAULT_GUESS: f64 = 0.5;
pub const DEFAULT_LAPSE: f64 = 0.0001;

const GRID: usize = 100;
const MEAN_LL_TOL: f64 = 1e-8;
const MAX_ITER: usize = 5_000;

/// One two-interval trial: the comparison latency and whether the observer
/// picked the latency-free interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub latency_ms: f64,
    pub correct: bool,
}

/// Why a fit is not a proper interior maximum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    /// Every response correct; no threshold inside the tested range.
    AllCorrect,
    /// No response correct.
    NoneCorrect,
    /// Optimum pinned at the edge of the location range.
    AlphaLimit,
    /// Optimum pinned at the edge of the slope range (steep step or flat data).
    BetaLimit,
}

impl fmt::Display for Boundary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Boundary::AllCorrect => "all_correct",
            Boundary::NoneCorrect => "none_correct",
            Boundary::AlphaLimit => "alpha_limit",
            Boundary::BetaLimit => "beta_limit",
        })
    }
}

/// Logistic psychometric function with fixed guess and lapse rates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PsychometricFit {
    pub alpha: f64,
    pub beta: f64,
    pub guess_rate: f64,
    pub lapse_rate: f64,
    pub log_likelihood: f64,
    pub converged: bool,
    pub boundary: Option<Boundary>,
}

impl PsychometricFit {
    /// Probability of a correct response at stimulus `x`.
    pub fn psi(&self, x: f64) -> f64 {
        psi(self.alpha, self.beta, self.guess_rate, self.lapse_rate, x)
    }

    /// Multi-line report of the fitted parameters.
    pub fn report(&self, criterion: f64) -> String {
        let threshold = match threshold_at(self, criterion) {
            Ok(t) => format!("{t:.4}"),
            Err(_) => "n/a".to_string(),
        };
        let boundary = self.boundary.map_or("none".to_string(), |b| b.to_string());
        format!(
            "alpha_ms        {:.4}\nbeta_per_ms     {:.4}\nthreshold_ms    {threshold} (criterion {criterion})\n\
             guess_rate      {}\nlapse_rate      {}\nlog_likelihood  {:.4}\nconverged       {}\nboundary        {boundary}\n",
            self.alpha, self.beta, self.guess_rate, self.lapse_rate, self.log_likelihood, self.converged
        )
    }
}

pub(crate) fn psi(alpha: f64, beta: f64, guess: f64, lapse: f64, x: f64) -> f64 {
    let logistic = 1.0 / (1.0 + (-beta * (x - alpha)).exp());
    guess + (1.0 - guess - lapse) * logistic
}

/// Search box for maximum likelihood, derived from the stimulus span `s`:
/// `alpha` within one span beyond either end of the data, `beta` within
/// `[0.1 / s, 100 / s]` (log-spaced).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchBox {
    pub alpha: (f64, f64),
    pub beta: (f64, f64),
}

impl SearchBox {
    pub fn for_levels(min: f64, max: f64) -> Self {
        let span = max - min;
        Self { alpha: (min - span, max + span), beta: (0.1 / span, 100.0 / span) }
    }

    fn clamp(&self, p: [f64; 2]) -> [f64; 2] {
        [
            p[0].clamp(self.alpha.0, self.alpha.1),
            p[1].clamp(self.beta.0.ln(), self.beta.1.ln()),
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub guess_rate: f64,
    pub lapse_rate: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self { guess_rate: DEFAULT_GUESS, lapse_rate: DEFAULT_LAPSE }
    }
}

/// Trials pooled per distinct stimulus level: `(level, correct, total)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PooledTrials {
    levels: Vec<(f64, u64, u64)>,
    total: u64,
}

impl PooledTrials {
    pub fn new(trials: &[TrialRecord]) -> Result<Self, PsychometricsError> {
        if trials.is_empty() {
            return Err(PsychometricsError::NoTrials);
        }
        let mut sorted: Vec<&TrialRecord> = trials.iter().collect();
        for t in &sorted {
            if !(t.latency_ms.is_finite() && t.latency_ms >= 0.0) {
                return Err(PsychometricsError::InvalidLatency(t.latency_ms));
            }
        }
        sorted.sort_by(|a, b| a.latency_ms.total_cmp(&b.latency_ms));
        let mut levels: Vec<(f64, u64, u64)> = Vec::new();
        for t in sorted {
            match levels.last_mut() {
                Some(last) if last.0 == t.latency_ms => {
                    last.1 += u64::from(t.correct);
                    last.2 += 1;
                }
                _ => levels.push((t.latency_ms, u64::from(t.correct), 1)),
            }
        }
        if levels.len() < 2 {
            return Err(PsychometricsError::SingleLevel(levels[0].0));
        }
        Ok(Self { levels, total: trials.len() as u64 })
    }

    pub fn levels(&self) -> &[(f64, u64, u64)] {
        &self.levels
    }

    pub fn range(&self) -> (f64, f64) {
        (self.levels[0].0, self.levels[self.levels.len() - 1].0)
    }

    /// Log-likelihood of `(alpha, beta)` summed over all trials.
    pub fn log_likelihood(&self, alpha: f64, beta: f64, opts: &FitOptions) -> f64 {
        let mut ll = 0.0;
        for &(x, k, n) in &self.levels {
            let p = psi(alpha, beta, opts.guess_rate, opts.lapse_rate, x);
            if k > 0 {
                ll += k as f64 * p.ln();
            }
            if n > k {
                ll += (n - k) as f64 * (1.0 - p).ln();
            }
        }
        ll
    }

    fn mean_ll(&self, p: [f64; 2], opts: &FitOptions) -> f64 {
        self.log_likelihood(p[0], p[1].exp(), opts) / self.total as f64
    }
}

/// Maximum-likelihood logistic fit with the guess and lapse rates held
/// fixed.
///
/// The likelihood is evaluated on pooled `(correct, total)` counts per
/// level, so duplicating every trial returns identical parameters. A
/// 100 x 100 grid over [`SearchBox`] (alpha linear, beta log-spaced) seeds a
/// Nelder-Mead refinement in `(alpha, ln beta)` that stops once the simplex
/// spread in mean log-likelihood falls below 1e-8.
pub fn fit_logistic(trials: &[TrialRecord]) -> Result<PsychometricFit, PsychometricsError> {
    fit_logistic_with(trials, &FitOptions::default())
}

pub fn fit_logistic_with(
    trials: &[TrialRecord],
    opts: &FitOptions,
) -> Result<PsychometricFit, PsychometricsError> {
    let g = opts.guess_rate;
    let l = opts.lapse_rate;
    if !(0.0..1.0).contains(&g) || !(0.0..1.0).contains(&l) || g + l >= 1.0 {
        return Err(PsychometricsError::InvalidRates { guess: g, lapse: l });
    }
    let pooled = PooledTrials::new(trials)?;
    let (lo, hi) = pooled.range();
    let bx = SearchBox::for_levels(lo, hi);

    let mut best = [bx.alpha.0, bx.beta.0.ln()];
    let mut best_f = f64::NEG_INFINITY;
    for (a, lb) in grid(&bx) {
        let f = pooled.mean_ll([a, lb], opts);
        if f > best_f {
            best_f = f;
            best = [a, lb];
        }
    }
    let step = [(bx.alpha.1 - bx.alpha.0) / GRID as f64, (bx.beta.1 / bx.beta.0).ln() / GRID as f64];
    let (p, f) = nelder_mead(|p| pooled.mean_ll(bx.clamp(p), opts), best, step);
    let p = bx.clamp(p);

    let correct: u64 = pooled.levels.iter().map(|l| l.1).sum();
    let boundary = if correct == pooled.total {
        Some(Boundary::AllCorrect)
    } else if correct == 0 {
        Some(Boundary::NoneCorrect)
    } else if near(p[0], bx.alpha.0, bx.alpha.1) {
        Some(Boundary::AlphaLimit)
    } else if near(p[1], bx.beta.0.ln(), bx.beta.1.ln()) {
        Some(Boundary::BetaLimit)
    } else {
        None
    };
    Ok(PsychometricFit {
        alpha: p[0],
        beta: p[1].exp(),
        guess_rate: g,
        lapse_rate: l,
        log_likelihood: f * pooled.total as f64,
        converged: boundary.is_none(),
        boundary,
    })
}

/// Grid nodes over the search box: alpha linear, beta log-spaced, both ends
/// included.
pub fn grid(bx: &SearchBox) -> impl Iterator<Item = (f64, f64)> + '_ {
    let (lb0, lb1) = (bx.beta.0.ln(), bx.beta.1.ln());
    (0..GRID).flat_map(move |i| {
        let a = bx.alpha.0 + (bx.alpha.1 - bx.alpha.0) * i as f64 / (GRID - 1) as f64;
        (0..GRID).map(move |j| (a, lb0 + (lb1 - lb0) * j as f64 / (GRID - 1) as f64))
    })
}

fn near(v: f64, lo: f64, hi: f64) -> bool {
    let tol = 1e-6 * (hi - lo);
    v - lo <= tol || hi - v <= tol
}

/// Maximizes `f` from `start`; returns the best vertex and its value.
fn nelder_mead(f: impl Fn([f64; 2]) -> f64, start: [f64; 2], step: [f64; 2]) -> ([f64; 2], f64) {
    let mut s: Vec<([f64; 2], f64)> = [start, [start[0] + step[0], start[1]], [start[0], start[1] + step[1]]]
        .into_iter()
        .map(|p| (p, f(p)))
        .collect();
    let lerp = |a: [f64; 2], b: [f64; 2], t: f64| [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])];
    for _ in 0..MAX_ITER {
        // best first
        s.sort_by(|a, b| b.1.total_cmp(&a.1));
        if s[0].1 - s[2].1 <= MEAN_LL_TOL {
            let size = (s[0].0[0] - s[2].0[0]).abs().max((s[0].0[1] - s[2].0[1]).abs());
            if size <= 1e-9 || s[0].1 == s[2].1 {
                break;
            }
        }
        let centroid = lerp(s[0].0, s[1].0, 0.5);
        let worst = s[2];
        let reflect = lerp(centroid, worst.0, -1.0);
        let fr = f(reflect);
        if fr > s[0].1 {
            let expand = lerp(centroid, worst.0, -2.0);
            let fe = f(expand);
            s[2] = if fe > fr { (expand, fe) } else { (reflect, fr) };
        } else if fr > s[1].1 {
            s[2] = (reflect, fr);
        } else {
            // outside contraction toward the reflection, else inside
            let (c, accept_above) = if fr > worst.1 {
                (lerp(centroid, reflect, 0.5), fr)
            } else {
                (lerp(centroid, worst.0, 0.5), worst.1)
            };
            let fc = f(c);
            if fc > accept_above || (fr > worst.1 && fc == fr) {
                s[2] = (c, fc);
            } else {
                let best = s[0].0;
                for v in s.iter_mut().skip(1) {
                    let p = lerp(best, v.0, 0.5);
                    *v = (p, f(p));
                }
            }
        }
    }
    s.sort_by(|a, b| b.1.total_cmp(&a.1));
    (s[0].0, s[0].1)
}

/// Stimulus at which the fitted curve reaches `criterion`.
pub fn threshold_at(fit: &PsychometricFit, criterion: f64) -> Result<f64, PsychometricsError> {
    if !fit.converged {
        return Err(PsychometricsError::NotConverged);
    }
    let lo = fit.guess_rate;
    let hi = 1.0 - fit.lapse_rate;
    if !(criterion > lo && criterion < hi) {
        return Err(PsychometricsError::CriterionOutOfRange { criterion, lo, hi });
    }
    let p = (criterion - lo) / (hi - lo);
    Ok(fit.alpha + (p / (1.0 - p)).ln() / fit.beta)
}

/// Trials drawn from the psychometric function at the given levels.
pub fn synthetic_trials(
    levels: &[f64],
    alpha: f64,
    beta: f64,
    opts: &FitOptions,
    seed: u64,
) -> Vec<TrialRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    levels
        .iter()
        .map(|&x| {
            let p = psi(alpha, beta, opts.guess_rate, opts.lapse_rate, x);
            TrialRecord { latency_ms: x, correct: rng.random::<f64>() < p }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn trials(spec: &[(f64, u32, u32)]) -> Vec<TrialRecord> {
        spec.iter()
            .flat_map(|&(x, k, n)| {
                (0..n).map(move |i| TrialRecord { latency_ms: x, correct: i < k })
            })
            .collect()
    }

    fn bracketing() -> Vec<TrialRecord> {
        trials(&[
            (1.0, 5, 10),
            (3.0, 5, 10),
            (4.5, 6, 10),
            (8.0, 6, 10),
            (11.0, 8, 10),
            (14.0, 9, 10),
            (22.0, 10, 10),
            (30.0, 10, 10),
        ])
    }

    #[test]
    fn bracketing_data_converges_inside() {
        let fit = fit_logistic(&bracketing()).unwrap();
        assert!(fit.converged, "{fit:?}");
        assert!(fit.alpha > 5.0 && fit.alpha < 20.0, "{fit:?}");
        assert!(fit.beta > 0.0);
    }

    #[test]
    fn all_correct_is_flagged() {
        let fit = fit_logistic(&trials(&[(5.0, 10, 10), (10.0, 10, 10)])).unwrap();
        assert!(!fit.converged);
        assert_eq!(fit.boundary, Some(Boundary::AllCorrect));
        assert!(matches!(threshold_at(&fit, 0.75), Err(PsychometricsError::NotConverged)));
    }

    #[test]
    fn degenerate_inputs_are_errors() {
        assert!(matches!(fit_logistic(&[]), Err(PsychometricsError::NoTrials)));
        assert!(matches!(
            fit_logistic(&trials(&[(5.0, 3, 10)])),
            Err(PsychometricsError::SingleLevel(_))
        ));
    }

    #[test]
    fn midpoint_criterion_gives_alpha() {
        let fit = fit_logistic(&bracketing()).unwrap();
        let mid = (fit.guess_rate + 1.0 - fit.lapse_rate) / 2.0;
        assert!((threshold_at(&fit, mid).unwrap() - fit.alpha).abs() < 1e-9);
        assert!(threshold_at(&fit, 0.5).is_err());
        assert!(threshold_at(&fit, 1.0).is_err());
    }

    #[test]
    fn duplication_is_bit_identical() {
        let t = bracketing();
        let doubled: Vec<_> = t.iter().chain(t.iter()).copied().collect();
        let a = fit_logistic(&t).unwrap();
        let b = fit_logistic(&doubled).unwrap();
        assert_eq!(a.alpha.to_bits(), b.alpha.to_bits());
        assert_eq!(a.beta.to_bits(), b.beta.to_bits());
    }

    #[test]
    fn beats_every_grid_node() {
        let t = bracketing();
        let fit = fit_logistic(&t).unwrap();
        let pooled = PooledTrials::new(&t).unwrap();
        let (lo, hi) = pooled.range();
        let opts = FitOptions::default();
        for (a, lb) in grid(&SearchBox::for_levels(lo, hi)) {
            assert!(fit.log_likelihood >= pooled.log_likelihood(a, lb.exp(), &opts) - 1e-9);
        }
    }

    proptest! {
        #[test]
        fn psi_bounded_and_monotone(alpha in 0.0f64..30.0, beta in 0.01f64..5.0, x in 0.0f64..60.0, dx in 0.0f64..10.0) {
            let f = PsychometricFit {
                alpha, beta, guess_rate: 0.5, lapse_rate: 1e-4,
                log_likelihood: 0.0, converged: true, boundary: None,
            };
            let p = f.psi(x);
            prop_assert!((0.5..=1.0 - 1e-4).contains(&p));
            prop_assert!(f.psi(x + dx) >= p);
        }

        #[test]
        fn threshold_increases_with_criterion(c1 in 0.51f64..0.98, dc in 0.001f64..0.01) {
            let f = PsychometricFit {
                alpha: 10.0, beta: 0.5, guess_rate: 0.5, lapse_rate: 1e-4,
                log_likelihood: 0.0, converged: true, boundary: None,
            };
            prop_assert!(threshold_at(&f, c1 + dc).unwrap() > threshold_at(&f, c1).unwrap());
        }
    }
}
