//! Averaging kernels: Fourier-Bohr coefficients at one frequency and on
//! power-of-two grids, multiscale coefficient traces with a finite-scale
//! verdict policy, correlation averages, and Besicovitch seminorms.
//!
//! Every sum goes through the deterministic pairwise tree in [`crate::reduction`],
//! so results are bit-identical across thread counts.

use crate::error::{Error, Result};
use crate::folner::FolnerSchedule;
use crate::freq::{conj_character, conj_character_run, Frequency};
use crate::observable::CylinderObservable;
use crate::reduction::{pairwise_map_sum, pairwise_sum_complex};
use crate::signal::{CodedSystem, OrbitSignal, SignalProvider};
use crate::source::PointSource;
use crate::window::Window;
use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

/// (1/|W|) Σ_{t∈W} signal(t) · e^{-2πiθt}.
pub fn fourier_bohr_at(signal: &OrbitSignal, window: Window, theta: Frequency) -> Result<Complex64> {
    let slice = signal.slice(window)?;
    let phasors = conj_character_run(theta, window.lo, slice.len());
    let terms: Vec<Complex64> = slice.iter().zip(&phasors).map(|(s, p)| s * p).collect();
    Ok(pairwise_sum_complex(&terms) / slice.len() as f64)
}

/// Mean power (1/|W|) Σ |signal(t)|² over the window.
pub fn mean_power(signal: &OrbitSignal, window: Window) -> Result<f64> {
    let slice = signal.slice(window)?;
    Ok(pairwise_map_sum(slice, |z| z.norm_sqr()) / slice.len() as f64)
}

/// Fourier-Bohr coefficients on the grid θ = k/M for all k, via a
/// zero-padded transform with the e^{-2πi(k/M)·lo} phase correction per bin.
///
/// Requires M ≥ |W| and M a power of two. Entry k agrees with
/// [`fourier_bohr_at`] at θ = k/M to better than 1e-10 absolute.
pub fn fourier_bohr_sweep(
    signal: &OrbitSignal,
    window: Window,
    grid: usize,
) -> Result<Vec<Complex64>> {
    let slice = signal.slice(window)?;
    let len = slice.len();
    if grid < len {
        return Err(Error::GridTooSmall { grid, window: len });
    }
    if !grid.is_power_of_two() {
        return Err(Error::GridNotPowerOfTwo(grid));
    }
    let mut buf = vec![Complex64::new(0.0, 0.0); grid];
    buf[..len].copy_from_slice(slice);
    FftPlanner::new().plan_fft_forward(grid).process(&mut buf);
    let scale = 1.0 / len as f64;
    for (k, value) in buf.iter_mut().enumerate() {
        *value *= conj_character(Frequency::from_bin(k, grid), window.lo) * scale;
    }
    Ok(buf)
}

/// (1/|W|) Σ f(t) · conj(g(t)).
pub fn correlation_average(
    f_sig: &OrbitSignal,
    g_sig: &OrbitSignal,
    window: Window,
) -> Result<Complex64> {
    let f = f_sig.slice(window)?;
    let g = g_sig.slice(window)?;
    let terms: Vec<Complex64> = f.iter().zip(g).map(|(a, b)| a * b.conj()).collect();
    Ok(pairwise_sum_complex(&terms) / f.len() as f64)
}

/// Finite-scale verdict thresholds. The underlying limits exist or not; at
/// finite scale these cutoffs decide what we report, and they ride along in
/// every report for auditability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergencePolicy {
    /// Successive-difference bound for `converged` (absolute).
    pub tol_conv: f64,
    /// Magnitude bound for `vanishing` (absolute).
    pub tol_vanish: f64,
}

impl Default for ConvergencePolicy {
    fn default() -> Self {
        ConvergencePolicy { tol_conv: 1e-3, tol_vanish: 2e-2 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "kebab-case")]
pub enum TraceVerdict {
    Converged { value_re: f64, value_im: f64 },
    Vanishing,
    Undecided,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaleEstimate {
    pub scale: i64,
    pub re: f64,
    pub im: f64,
    pub abs: f64,
    /// |e_i - e_{i-1}|; 0 for the first scale.
    pub delta: f64,
}

/// A per-scale record of a^{A_n}_θ with the finite-scale verdict applied.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientTrace {
    pub theta: Frequency,
    pub estimates: Vec<ScaleEstimate>,
    #[serde(flatten)]
    pub verdict: TraceVerdict,
    pub policy: ConvergencePolicy,
}

impl CoefficientTrace {
    pub fn last_value(&self) -> Complex64 {
        let last = self.estimates.last().expect("traces have at least one scale");
        Complex64::new(last.re, last.im)
    }
}

/// Evaluate the coefficient over every schedule window and classify.
///
/// A trace that decays below `tol_vanish` (with nonincreasing magnitudes over
/// the last three scales) reads as `vanishing` even when its successive
/// differences are also small, so a genuine decay to zero is never reported
/// as convergence to a tiny nonzero value.
pub fn coefficient_trace(
    source: &PointSource,
    obs: &CylinderObservable,
    schedule: &FolnerSchedule,
    theta: Frequency,
    policy: ConvergencePolicy,
) -> Result<CoefficientTrace> {
    trace_for(&CodedSystem::new(source.clone(), obs.clone()), schedule, theta, policy)
}

pub fn trace_for(
    provider: &dyn SignalProvider,
    schedule: &FolnerSchedule,
    theta: Frequency,
    policy: ConvergencePolicy,
) -> Result<CoefficientTrace> {
    let mut estimates: Vec<ScaleEstimate> = Vec::with_capacity(schedule.len());
    let mut previous: Option<Complex64> = None;
    for window in schedule.windows() {
        let signal = provider.sample(*window)?;
        let value = fourier_bohr_at(&signal, *window, theta)?;
        let delta = previous.map_or(0.0, |p| (value - p).norm());
        estimates.push(ScaleEstimate {
            scale: window.len(),
            re: value.re,
            im: value.im,
            abs: value.norm(),
            delta,
        });
        previous = Some(value);
    }
    let verdict = classify(&estimates, policy);
    Ok(CoefficientTrace { theta, estimates, verdict, policy })
}

fn classify(estimates: &[ScaleEstimate], policy: ConvergencePolicy) -> TraceVerdict {
    let k = estimates.len();
    let last = &estimates[k - 1];
    let tail_mags: Vec<f64> = estimates.iter().skip(k.saturating_sub(3)).map(|e| e.abs).collect();
    let vanishing = last.abs < policy.tol_vanish
        && tail_mags.windows(2).all(|p| p[0] >= p[1] - 1e-15);
    if vanishing {
        return TraceVerdict::Vanishing;
    }
    let deltas: Vec<f64> = estimates.iter().skip(1).map(|e| e.delta).collect();
    let checked = deltas.len().min(3);
    if checked > 0 && deltas[deltas.len() - checked..].iter().all(|d| *d < policy.tol_conv) {
        return TraceVerdict::Converged { value_re: last.re, value_im: last.im };
    }
    TraceVerdict::Undecided
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeminormEstimate {
    /// (window size, sqrt of the windowed quadratic mean).
    pub values: Vec<(i64, f64)>,
    /// Max over the tail half of the scales: the limsup surrogate.
    pub limsup: f64,
}

/// Besicovitch seminorm data: v_i = sqrt((1/|A_i|) Σ |h|²) per scale, with
/// the limsup realized as the max over the tail half of the audited scales.
pub fn besicovitch_seminorm(
    source: &PointSource,
    obs: &CylinderObservable,
    schedule: &FolnerSchedule,
) -> Result<SeminormEstimate> {
    seminorm_for(&CodedSystem::new(source.clone(), obs.clone()), schedule)
}

pub fn seminorm_for(
    provider: &dyn SignalProvider,
    schedule: &FolnerSchedule,
) -> Result<SeminormEstimate> {
    let mut values = Vec::with_capacity(schedule.len());
    for window in schedule.windows() {
        let signal = provider.sample(*window)?;
        values.push((window.len(), mean_power(&signal, *window)?.sqrt()));
    }
    let tail = values.len().div_ceil(2);
    let limsup = values
        .iter()
        .skip(values.len() - tail)
        .map(|&(_, v)| v)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(SeminormEstimate { values, limsup })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::{orbit_signal, SyntheticSignal};
    use proptest::prelude::*;

    fn ones_signal(window: Window) -> OrbitSignal {
        orbit_signal(
            &CylinderObservable::one(),
            &PointSource::periodic("a").unwrap(),
            window,
        )
        .unwrap()
    }

    #[test]
    fn constant_at_zero_frequency_is_exact() {
        let w = Window::one_sided(1000);
        let sig = ones_signal(w);
        let a = fourier_bohr_at(&sig, w, Frequency::new(0.0)).unwrap();
        assert_eq!(a, Complex64::new(1.0, 0.0));
    }

    #[test]
    fn matching_character_gives_one() {
        // signal(t) = e^{2πiθ₀t} has coefficient 1 at θ₀.
        let theta0 = Frequency::from_bin(37, 256);
        let synth = SyntheticSignal::pure(vec![(theta0, Complex64::new(1.0, 0.0))]);
        let w = Window::one_sided(4096);
        let sig = synth.sample(w).unwrap();
        let a = fourier_bohr_at(&sig, w, theta0).unwrap();
        assert!((a - Complex64::new(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn periodic_ab_at_half_frequency() {
        // 1,0,1,0,… at θ = 1/2 over [0, 2N): even positions contribute 1.
        let sig = orbit_signal(
            &CylinderObservable::letter(b'a'),
            &PointSource::periodic("ab").unwrap(),
            Window::one_sided(512),
        )
        .unwrap();
        let a = fourier_bohr_at(&sig, Window::one_sided(512), Frequency::new(0.5)).unwrap();
        assert_eq!(a.re, 0.5);
        assert!(a.im.abs() < 1e-13);
    }

    #[test]
    fn sweep_matches_direct_and_dirichlet_bound() {
        let n = 256usize;
        let m = 512usize;
        let w = Window::one_sided(n as i64);
        let sig = ones_signal(w);
        let sweep = fourier_bohr_sweep(&sig, w, m).unwrap();
        assert!((sweep[0] - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        for k in 1..m {
            let theta = k as f64 / m as f64;
            let bound =
                ((std::f64::consts::PI * theta * n as f64).sin()
                    / (std::f64::consts::PI * theta).sin())
                .abs()
                    / n as f64;
            assert!(sweep[k].norm() <= bound + 1e-10, "bin {k}");
            let direct = fourier_bohr_at(&sig, w, Frequency::from_bin(k, m)).unwrap();
            assert!((sweep[k] - direct).norm() < 1e-12, "bin {k}");
        }
    }

    #[test]
    fn sweep_of_alternating_period_two() {
        // 8-point transform of 1,0,1,0,1,0,1,0: bins 0 and 4 carry 1/2.
        let sig = orbit_signal(
            &CylinderObservable::letter(b'a'),
            &PointSource::periodic("ab").unwrap(),
            Window::one_sided(8),
        )
        .unwrap();
        let sweep = fourier_bohr_sweep(&sig, Window::one_sided(8), 8).unwrap();
        for (k, z) in sweep.iter().enumerate() {
            let expected = if k == 0 || k == 4 { 0.5 } else { 0.0 };
            assert!((z.norm() - expected).abs() < 1e-12, "bin {k}");
        }
    }

    #[test]
    fn sweep_rejects_bad_grids() {
        let w = Window::one_sided(100);
        let sig = ones_signal(w);
        assert!(matches!(
            fourier_bohr_sweep(&sig, w, 64),
            Err(Error::GridTooSmall { .. })
        ));
        assert!(matches!(
            fourier_bohr_sweep(&sig, w, 100),
            Err(Error::GridNotPowerOfTwo(100))
        ));
    }

    #[test]
    fn step_trace_converges_to_half() {
        let schedule = FolnerSchedule::symmetric(&[1 << 13, 1 << 14, 1 << 15, 1 << 16, 100_000]).unwrap();
        let trace = coefficient_trace(
            &PointSource::step(),
            &CylinderObservable::value_at_origin(),
            &schedule,
            Frequency::new(0.0),
            ConvergencePolicy::default(),
        )
        .unwrap();
        // Exact rational agreement at every finite scale.
        for est in &trace.estimates {
            let n = (est.scale - 1) / 2;
            assert_eq!(est.re, (n + 1) as f64 / (2 * n + 1) as f64);
            assert_eq!(est.im, 0.0);
        }
        match trace.verdict {
            TraceVerdict::Converged { value_re, .. } => {
                assert!((value_re - 0.5).abs() <= 1e-3)
            }
            other => panic!("expected convergence, got {other:?}"),
        }
    }

    #[test]
    fn thue_morse_mean_vanishes() {
        let schedule = FolnerSchedule::one_sided(&[1 << 10, 1 << 12, 1 << 14, 1 << 16]).unwrap();
        let trace = coefficient_trace(
            &PointSource::thue_morse(),
            &CylinderObservable::plus_minus(b'a'),
            &schedule,
            Frequency::new(0.0),
            ConvergencePolicy::default(),
        )
        .unwrap();
        assert_eq!(trace.verdict, TraceVerdict::Vanishing);
    }

    #[test]
    fn golden_rotation_eigenvalue_survives() {
        let schedule = FolnerSchedule::one_sided(&[1 << 14, 1 << 16, 1 << 18]).unwrap();
        let alpha = crate::source::GOLDEN_RATIO_CONJUGATE;
        let obs = CylinderObservable::letter(b'a')
            + CylinderObservable::constant(Complex64::new(-alpha, 0.0));
        let trace = coefficient_trace(
            &PointSource::golden_rotation(),
            &obs,
            &schedule,
            Frequency::new(alpha),
            ConvergencePolicy::default(),
        )
        .unwrap();
        match trace.verdict {
            TraceVerdict::Converged { value_re, value_im } => {
                let amplitude = Complex64::new(value_re, value_im).norm();
                assert!(amplitude > 0.1, "amplitude {amplitude}");
                // One-sided oracle: |sin(π c)| / π for the indicator of [0, c).
                let expected = (std::f64::consts::PI * alpha).sin().abs() / std::f64::consts::PI;
                assert!((amplitude - expected).abs() < 5e-3, "amplitude {amplitude} vs {expected}");
            }
            other => panic!("expected convergence, got {other:?}"),
        }
    }

    #[test]
    fn correlation_examples() {
        let w = Window::one_sided(1 << 10);
        let ones = ones_signal(w);
        assert_eq!(correlation_average(&ones, &ones, w).unwrap(), Complex64::new(1.0, 0.0));

        let fib_a = orbit_signal(
            &CylinderObservable::letter(b'a'),
            &PointSource::fibonacci(),
            w,
        )
        .unwrap();
        let fib_b = orbit_signal(
            &CylinderObservable::letter(b'b'),
            &PointSource::fibonacci(),
            w,
        )
        .unwrap();
        // Disjoint supports: exactly zero.
        assert_eq!(correlation_average(&fib_a, &fib_b, w).unwrap(), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn fibonacci_letter_frequency_correlation() {
        let w = Window::one_sided(1 << 18);
        let fib_a = orbit_signal(
            &CylinderObservable::letter(b'a'),
            &PointSource::fibonacci(),
            w,
        )
        .unwrap();
        let c = correlation_average(&fib_a, &fib_a, w).unwrap();
        // Oracle: direct letter count at the same scale.
        let count = PointSource::fibonacci()
            .symbols(w)
            .unwrap()
            .iter()
            .filter(|&&x| x == b'a')
            .count();
        assert_eq!(c.re, count as f64 / w.len() as f64);
        assert!((c.re - 0.61803).abs() < 2e-3);
    }

    #[test]
    fn seminorm_examples() {
        let schedule = FolnerSchedule::one_sided(&[1 << 8, 1 << 10, 1 << 12]).unwrap();
        let constant = seminorm_for(
            &CodedSystem::new(
                PointSource::periodic("a").unwrap(),
                CylinderObservable::constant(Complex64::new(-2.5, 0.0)),
            ),
            &schedule,
        )
        .unwrap();
        for &(_, v) in &constant.values {
            assert!((v - 2.5).abs() < 1e-12);
        }

        let tm = besicovitch_seminorm(
            &PointSource::thue_morse(),
            &CylinderObservable::plus_minus(b'a'),
            &schedule,
        )
        .unwrap();
        for &(_, v) in &tm.values {
            assert!((v - 1.0).abs() < 1e-12);
        }

        let sym = FolnerSchedule::symmetric(&[1 << 8, 1 << 10, 1 << 12]).unwrap();
        let step = besicovitch_seminorm(
            &PointSource::step(),
            &CylinderObservable::value_at_origin(),
            &sym,
        )
        .unwrap();
        for &(size, v) in &step.values {
            let n = (size - 1) / 2;
            let expected = ((n + 1) as f64 / (2 * n + 1) as f64).sqrt();
            assert_eq!(v, expected);
        }
        assert!((step.limsup - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-3);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn cauchy_schwarz_bound(
            values in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 64..512),
            theta in 0.0f64..1.0,
        ) {
            let w = Window::one_sided(values.len() as i64);
            let sig = OrbitSignal::new(
                w,
                values.iter().map(|&(re, im)| Complex64::new(re, im)).collect(),
                "random",
                "random",
            );
            let a = fourier_bohr_at(&sig, w, Frequency::new(theta)).unwrap();
            let rms = mean_power(&sig, w).unwrap().sqrt();
            prop_assert!(a.norm() <= rms + 1e-12);
        }

        #[test]
        fn linearity(
            pairs in proptest::collection::vec(
                ((-1.0f64..1.0, -1.0f64..1.0), (-1.0f64..1.0, -1.0f64..1.0)), 32..256),
            theta in 0.0f64..1.0,
            coeffs in ((-2.0f64..2.0, -2.0f64..2.0), (-2.0f64..2.0, -2.0f64..2.0)),
        ) {
            let w = Window::one_sided(pairs.len() as i64);
            let alpha = Complex64::new(coeffs.0.0, coeffs.0.1);
            let beta = Complex64::new(coeffs.1.0, coeffs.1.1);
            let f: Vec<Complex64> = pairs.iter().map(|&((re, im), _)| Complex64::new(re, im)).collect();
            let g: Vec<Complex64> = pairs.iter().map(|&(_, (re, im))| Complex64::new(re, im)).collect();
            let combined: Vec<Complex64> =
                f.iter().zip(&g).map(|(a, b)| alpha * a + beta * b).collect();
            let sf = OrbitSignal::new(w, f, "f", "f");
            let sg = OrbitSignal::new(w, g, "g", "g");
            let sc = OrbitSignal::new(w, combined, "c", "c");
            let t = Frequency::new(theta);
            let lhs = fourier_bohr_at(&sc, w, t).unwrap();
            let rhs = alpha * fourier_bohr_at(&sf, w, t).unwrap()
                + beta * fourier_bohr_at(&sg, w, t).unwrap();
            prop_assert!((lhs - rhs).norm() < 1e-12);
        }

        #[test]
        fn seminorm_triangle_inequality(
            pairs in proptest::collection::vec(
                ((-1.0f64..1.0, -1.0f64..1.0), (-1.0f64..1.0, -1.0f64..1.0)), 32..256),
        ) {
            let w = Window::one_sided(pairs.len() as i64);
            let f: Vec<Complex64> = pairs.iter().map(|&((re, im), _)| Complex64::new(re, im)).collect();
            let g: Vec<Complex64> = pairs.iter().map(|&(_, (re, im))| Complex64::new(re, im)).collect();
            let sum: Vec<Complex64> = f.iter().zip(&g).map(|(a, b)| a + b).collect();
            let vf = mean_power(&OrbitSignal::new(w, f, "f", "f"), w).unwrap().sqrt();
            let vg = mean_power(&OrbitSignal::new(w, g, "g", "g"), w).unwrap().sqrt();
            let vs = mean_power(&OrbitSignal::new(w, sum, "s", "s"), w).unwrap().sqrt();
            prop_assert!(vs <= vf + vg + 1e-12);
        }
    }

    #[test]
    fn shift_phase_covariance() {
        // a_θ^{[lo,hi)}(f_{s.x}) = e^{2πiθs} · a_θ^{[lo+s,hi+s)}(f_x).
        let source = PointSource::fibonacci();
        let obs = CylinderObservable::letter(b'a');
        let theta = Frequency::new(0.2718281828);
        for s in [1i64, 17, -40, 1001] {
            let w = Window::new(-256, 256).unwrap();
            let shifted_sig = orbit_signal(&obs, &source.with_offset(s), w).unwrap();
            let base_sig = orbit_signal(&obs, &source, w.shifted(s)).unwrap();
            let lhs = fourier_bohr_at(&shifted_sig, w, theta).unwrap();
            let rhs = crate::freq::character(theta, s)
                * fourier_bohr_at(&base_sig, w.shifted(s), theta).unwrap();
            assert!((lhs - rhs).norm() < 1e-12, "offset {s}");
        }
    }
}
