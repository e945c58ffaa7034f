//! Empirical point-spectrum detection.
//!
//! A nonvanishing limit of twisted averages certifies an eigenvalue, so the
//! detector keeps exactly the grid frequencies whose coefficient amplitude
//! survives thresholding at the top three scales with a stable magnitude,
//! merges main-lobe neighbours, and refines each survivor off the grid.
//! The pure-point defect (mean power minus the Bessel sum) quantifies how
//! much of the signal the detected peaks explain.
//!
//! Candidate amplitudes come from one ordered deflation pass: each refined
//! frequency's coefficient is taken against the residual left by the
//! stronger peaks, then its character is subtracted. The extracted energies
//! telescope, so the Bessel sum can never exceed the mean power, and the
//! defect is literally the unexplained residual power. For peaks separated
//! by at least the main-lobe width the deflated coefficients agree with the
//! plain ones up to Dirichlet-tail leakage.

use crate::averaging::{fourier_bohr_at, fourier_bohr_sweep, mean_power};
use crate::error::{Error, Result};
use crate::folner::FolnerSchedule;
use crate::freq::Frequency;
use crate::observable::CylinderObservable;
use crate::signal::{CodedSystem, OrbitSignal, SignalProvider};
use crate::source::PointSource;
use crate::window::Window;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Detection threshold: either absolute or relative to the signal's
/// root-mean-square at the top scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "kebab-case")]
pub enum Threshold {
    Absolute(f64),
    RelativeToRms(f64),
}

impl Default for Threshold {
    fn default() -> Self {
        Threshold::RelativeToRms(0.05)
    }
}

impl Threshold {
    pub fn resolve(self, mean_power: f64) -> f64 {
        match self {
            Threshold::Absolute(a) => a,
            Threshold::RelativeToRms(r) => r * mean_power.sqrt(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionConfig {
    /// Coefficient variation tolerated across the top three scales.
    pub stability_max: f64,
    /// Number of top scales a candidate must survive.
    pub top_scales: usize,
    /// Slide each candidate off the grid to the local amplitude maximizer.
    /// Harvesting many small candidates (the almost-periodicity distance)
    /// skips this: with an oversampled grid the per-term energy loss is
    /// below sinc(π/oversample)², and refinement dominates the runtime.
    pub refine: bool,
    /// Sweep grids are raised to `oversample`× the top scale.
    pub oversample: usize,
}

impl Default for DetectionConfig {
    fn default() -> Self {
        DetectionConfig { stability_max: 0.2, top_scales: 3, refine: true, oversample: 4 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigenvalueCandidate {
    pub theta: Frequency,
    /// |a_θ| on the largest window, at the refined frequency.
    pub amplitude: f64,
    pub phase: f64,
    /// Relative variation of the coefficient across the audited scales:
    /// the largest successive complex difference over the top amplitude.
    pub stability: f64,
    /// Set when refinement fell back to the grid frequency.
    #[serde(skip_serializing_if = "std::ops::Not::not", default)]
    pub refinement_warning: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    /// Combined source/observable provenance label.
    pub source: String,
    /// |A| of the largest audited window.
    pub top_scale: i64,
    pub mean_power: f64,
    pub bessel_sum: f64,
    pub pp_defect: f64,
    pub threshold: f64,
    pub real_signal: bool,
    /// Sorted by descending amplitude.
    pub candidates: Vec<EigenvalueCandidate>,
}

impl SpectrumReport {
    /// Bessel inequality, defect sign, and conjugate pairing for real
    /// signals. Violations indicate a broken detector, not a bad system.
    pub fn validate(&self) -> Result<()> {
        if self.bessel_sum > self.mean_power + 1e-9 {
            return Err(Error::InvalidInput(format!(
                "Bessel sum {} exceeds mean power {}",
                self.bessel_sum, self.mean_power
            )));
        }
        if self.pp_defect < -1e-9 {
            return Err(Error::InvalidInput(format!("negative pp defect {}", self.pp_defect)));
        }
        for c in &self.candidates {
            if c.amplitude * c.amplitude > self.mean_power + 1e-9 {
                return Err(Error::InvalidInput(format!(
                    "candidate at {} has amplitude {} above the power bound",
                    c.theta, c.amplitude
                )));
            }
        }
        if self.real_signal {
            for c in &self.candidates {
                let partner = c.theta.reflected();
                if c.theta.circle_distance(partner) < 1e-12 {
                    continue;
                }
                let found = self
                    .candidates
                    .iter()
                    .any(|d| d.theta.circle_distance(partner) < 1e-6 && (d.amplitude - c.amplitude).abs() < 1e-6 + 1e-2 * c.amplitude);
                if !found {
                    return Err(Error::InvalidInput(format!(
                        "real signal lacks the conjugate partner of θ={}",
                        c.theta
                    )));
                }
            }
        }
        Ok(())
    }
}

pub fn detect_point_spectrum(
    source: &PointSource,
    obs: &CylinderObservable,
    schedule: &FolnerSchedule,
    grid: usize,
    threshold: Threshold,
) -> Result<SpectrumReport> {
    detect_for(
        &CodedSystem::new(source.clone(), obs.clone()),
        schedule,
        grid,
        threshold,
        DetectionConfig::default(),
    )
}

pub fn detect_for(
    provider: &dyn SignalProvider,
    schedule: &FolnerSchedule,
    grid: usize,
    threshold: Threshold,
    config: DetectionConfig,
) -> Result<SpectrumReport> {
    let top_window = schedule.largest();
    if (grid as i64) < top_window.len() {
        return Err(Error::GridTooSmall { grid, window: top_window.len() as usize });
    }
    // Oversample the sweep so a peak falling between bins is scalloped by
    // at most sinc(π/(2·oversample)) at the top scale. Without this, a
    // frequency half a bin off the grid reads up to 36% low at the top
    // scale while reading full height at the smaller scales, and the
    // stability filter would discard it.
    let grid = grid
        .max(config.oversample.max(1) * (top_window.len() as usize).next_power_of_two())
        .next_power_of_two();
    let top_indices = schedule.top_indices(config.top_scales);

    let sweeps: Vec<Vec<f64>> = top_indices
        .par_iter()
        .map(|&i| -> Result<Vec<f64>> {
            let window = schedule.window(i)?;
            let signal = provider.sample(window)?;
            Ok(fourier_bohr_sweep(&signal, window, grid)?
                .into_iter()
                .map(|z| z.norm())
                .collect())
        })
        .collect::<Result<_>>()?;

    let top_signal = provider.sample(top_window)?;
    let power = mean_power(&top_signal, top_window)?;
    let thr = threshold.resolve(power);
    let top_sweep = sweeps.last().expect("at least one scale");

    // Bins above threshold at every audited scale with a stable amplitude.
    let mut survivors: Vec<(usize, f64)> = Vec::new();
    for k in 0..grid {
        let amps: Vec<f64> = sweeps.iter().map(|s| s[k]).collect();
        if amps.iter().any(|&a| a <= thr) {
            continue;
        }
        let top_amp = *amps.last().unwrap();
        let spread = amps.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
            - amps.iter().cloned().fold(f64::INFINITY, f64::min);
        let stability = spread / top_amp;
        if stability < config.stability_max {
            survivors.push((k, stability));
        }
    }

    // Merge bins within one main lobe (2/|A|) of each other, circularly.
    let merge_radius = 2.0 / top_window.len() as f64;
    let clusters = cluster_bins(&survivors, grid, merge_radius, top_sweep);

    // Signals at each audited scale, for the convergence check below.
    let scale_signals: Vec<OrbitSignal> = top_indices
        .iter()
        .map(|&i| provider.sample(schedule.window(i)?))
        .collect::<Result<_>>()?;

    let refine_radius = 1.0 / top_window.len() as f64;
    let mut candidates: Vec<EigenvalueCandidate> = clusters
        .par_iter()
        .map(|&(bin, _)| -> Result<Option<EigenvalueCandidate>> {
            let guess = Frequency::from_bin(bin, grid);
            let refined = if config.refine {
                refine_frequency(&top_signal, top_window, guess, refine_radius)?
            } else {
                RefinedFrequency { theta: guess, warning: false }
            };
            let value = fourier_bohr_at(&top_signal, top_window, refined.theta)?;
            // A candidate must look like a convergent nonzero limit: the
            // complex coefficient at the refined frequency has to settle
            // across the audited scales. Bin moduli alone can line up by
            // accident on slowly decaying Dirichlet tails; the complex
            // values cannot, because their phases keep rotating.
            let mut values = Vec::with_capacity(scale_signals.len());
            for (signal, &i) in scale_signals.iter().zip(&top_indices) {
                values.push(fourier_bohr_at(signal, schedule.window(i)?, refined.theta)?);
            }
            let max_delta = values
                .windows(2)
                .map(|p| (p[1] - p[0]).norm())
                .fold(0.0, f64::max);
            let stability = max_delta / value.norm().max(f64::MIN_POSITIVE);
            if stability >= config.stability_max {
                return Ok(None);
            }
            Ok(Some(EigenvalueCandidate {
                theta: refined.theta,
                amplitude: value.norm(),
                phase: value.arg(),
                stability,
                refinement_warning: refined.warning,
            }))
        })
        .collect::<Result<Vec<Option<EigenvalueCandidate>>>>()?
        .into_iter()
        .flatten()
        .collect();

    // Refinement can collapse neighbouring clusters onto one peak.
    candidates.sort_by(|a, b| a.theta.value().total_cmp(&b.theta.value()));
    candidates.dedup_by(|b, a| {
        if a.theta.circle_distance(b.theta) < refine_radius {
            if b.amplitude > a.amplitude {
                *a = *b;
            }
            true
        } else {
            false
        }
    });
    candidates.sort_by(|a, b| b.amplitude.total_cmp(&a.amplitude));

    // For a real signal the spectrum is conjugate-symmetric; pin each
    // weaker sibling to the exact reflection of the stronger one so the
    // pairing survives refinement jitter.
    let real = top_signal.is_effectively_real();
    if real {
        for i in 0..candidates.len() {
            let mirror = candidates[i].theta.reflected();
            for j in i + 1..candidates.len() {
                if candidates[j].theta.circle_distance(mirror) < merge_radius {
                    candidates[j].theta = mirror;
                }
            }
        }
    }

    // Deflation pass: re-extract each peak from the residual of the
    // stronger ones so the energies telescope and the Bessel sum stays
    // below the mean power by construction.
    let mut residual = top_signal.clone();
    for c in &mut candidates {
        let value = fourier_bohr_at(&residual, top_window, c.theta)?;
        c.amplitude = value.norm();
        c.phase = value.arg();
        subtract_character(&mut residual, c.theta, value);
    }
    candidates.retain(|c| c.amplitude > thr);
    // Thresholding can strand one half of a conjugate pair; drop orphans.
    if real {
        let thetas: Vec<Frequency> = candidates.iter().map(|c| c.theta).collect();
        candidates.retain(|c| {
            let mirror = c.theta.reflected();
            c.theta.circle_distance(mirror) < refine_radius
                || thetas.iter().any(|t| t.circle_distance(mirror) < 1e-6)
        });
    }
    candidates.sort_by(|a, b| b.amplitude.total_cmp(&a.amplitude));

    let bessel_sum: f64 = candidates.iter().map(|c| c.amplitude * c.amplitude).sum();
    let report = SpectrumReport {
        source: provider.label(),
        top_scale: top_window.len(),
        mean_power: power,
        bessel_sum,
        pp_defect: power - bessel_sum,
        threshold: thr,
        real_signal: top_signal.is_effectively_real(),
        candidates,
    };
    report.validate()?;
    Ok(report)
}

/// Amplitudes and phases at a fixed list of frequencies, bypassing the grid
/// sweep. Used when the frequency set is known a priori.
pub fn spectrum_at(
    provider: &dyn SignalProvider,
    schedule: &FolnerSchedule,
    thetas: &[Frequency],
) -> Result<SpectrumReport> {
    let top_window = schedule.largest();
    let top_signal = provider.sample(top_window)?;
    let power = mean_power(&top_signal, top_window)?;
    let top_indices = schedule.top_indices(3);
    let mut candidates = Vec::with_capacity(thetas.len());
    for &theta in thetas {
        let mut amps = Vec::with_capacity(top_indices.len());
        for &i in &top_indices {
            let window = schedule.window(i)?;
            let signal = provider.sample(window)?;
            amps.push(fourier_bohr_at(&signal, window, theta)?.norm());
        }
        let value = fourier_bohr_at(&top_signal, top_window, theta)?;
        let top_amp = value.norm();
        let spread = amps.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
            - amps.iter().cloned().fold(f64::INFINITY, f64::min);
        candidates.push(EigenvalueCandidate {
            theta,
            amplitude: top_amp,
            phase: value.arg(),
            stability: if top_amp > 0.0 { spread / top_amp } else { 0.0 },
            refinement_warning: false,
        });
    }
    candidates.sort_by(|a, b| b.amplitude.total_cmp(&a.amplitude));
    let bessel_sum: f64 = candidates.iter().map(|c| c.amplitude * c.amplitude).sum();
    Ok(SpectrumReport {
        source: provider.label(),
        top_scale: top_window.len(),
        mean_power: power,
        bessel_sum,
        pp_defect: power - bessel_sum,
        threshold: 0.0,
        real_signal: top_signal.is_effectively_real(),
        candidates,
    })
}

fn subtract_character(signal: &mut OrbitSignal, theta: Frequency, coeff: Complex64) {
    let phasors = crate::freq::conj_character_run(theta, signal.window.lo, signal.values.len());
    for (v, p) in signal.values.iter_mut().zip(&phasors) {
        *v -= coeff * p.conj();
    }
}

fn cluster_bins(
    survivors: &[(usize, f64)],
    grid: usize,
    merge_radius: f64,
    top_sweep: &[f64],
) -> Vec<(usize, f64)> {
    if survivors.is_empty() {
        return Vec::new();
    }
    let mut groups: Vec<Vec<(usize, f64)>> = vec![vec![survivors[0]]];
    for &(bin, st) in &survivors[1..] {
        let last = groups.last_mut().unwrap();
        if (bin - last.last().unwrap().0) as f64 / (grid as f64) < merge_radius {
            last.push((bin, st));
        } else {
            groups.push(vec![(bin, st)]);
        }
    }
    let mut reps: Vec<(usize, f64)> = groups
        .into_iter()
        .map(|group| {
            group
                .into_iter()
                .max_by(|a, b| top_sweep[a.0].total_cmp(&top_sweep[b.0]))
                .unwrap()
        })
        .collect();
    // The grid is circular: when the first and last representatives sit
    // within the merge radius across the 1.0 boundary, keep the stronger.
    if reps.len() > 1 {
        let first = reps[0];
        let last = *reps.last().unwrap();
        if (grid - last.0 + first.0) as f64 / (grid as f64) < merge_radius {
            if top_sweep[first.0] >= top_sweep[last.0] {
                reps.pop();
            } else {
                reps.remove(0);
            }
        }
    }
    reps
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefinedFrequency {
    pub theta: Frequency,
    /// True when the bracket was degenerate and θ₀ was returned unchanged.
    pub warning: bool,
}

/// Locate the local maximizer of θ ↦ |a_θ| near `theta0`.
///
/// Quadratic interpolation on the three bracket amplitudes seeds a
/// golden-section search (at most 30 iterations), which pins the maximizer
/// of the smooth finite-window amplitude to ~1e-9 for the radii used here.
/// A non-unimodal bracket (or an all-zero signal) returns `theta0` with the
/// warning flag set.
pub fn refine_frequency(
    signal: &OrbitSignal,
    window: Window,
    theta0: Frequency,
    radius: f64,
) -> Result<RefinedFrequency> {
    if radius < 1.0 / window.len() as f64 {
        return Err(Error::InvalidInput(format!(
            "refinement radius {radius} below the window resolution"
        )));
    }
    let amp = |theta: f64| -> Result<f64> {
        Ok(fourier_bohr_at(signal, window, Frequency::new(theta))?.norm())
    };
    let center = theta0.value();
    let a_lo = amp(center - radius)?;
    let a_mid = amp(center)?;
    let a_hi = amp(center + radius)?;
    if a_mid <= 0.0 || a_mid < a_lo.max(a_hi) {
        return Ok(RefinedFrequency { theta: theta0, warning: true });
    }

    // Parabolic vertex through (−r, a_lo), (0, a_mid), (+r, a_hi).
    let denom = a_lo - 2.0 * a_mid + a_hi;
    let vertex = if denom.abs() > 1e-300 {
        (0.5 * radius * (a_lo - a_hi) / denom).clamp(-0.5 * radius, 0.5 * radius)
    } else {
        0.0
    };
    let seed = center + vertex;

    let mut lo = (seed - radius).max(center - radius);
    let mut hi = (seed + radius).min(center + radius);
    const INVPHI: f64 = 0.618_033_988_749_894_9;
    let mut x1 = hi - INVPHI * (hi - lo);
    let mut x2 = lo + INVPHI * (hi - lo);
    let mut f1 = amp(x1)?;
    let mut f2 = amp(x2)?;
    for _ in 0..30 {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INVPHI * (hi - lo);
            f2 = amp(x2)?;
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INVPHI * (hi - lo);
            f1 = amp(x1)?;
        }
    }
    let best = if f1 > f2 { x1 } else { x2 };
    Ok(RefinedFrequency { theta: Frequency::new(best), warning: false })
}

/// A closed frequency band [lo, hi] ⊂ [0, 1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrequencyBand {
    pub lo: f64,
    pub hi: f64,
}

impl FrequencyBand {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&lo) || !(0.0..1.0).contains(&hi) || lo >= hi {
            return Err(Error::InvalidInput(format!("bad frequency band [{lo}, {hi}]")));
        }
        Ok(FrequencyBand { lo, hi })
    }

    fn distance_to(&self, theta: f64) -> f64 {
        if (self.lo..=self.hi).contains(&theta) {
            return 0.0;
        }
        let d_lo = Frequency::new(theta).circle_distance(Frequency::new(self.lo));
        let d_hi = Frequency::new(theta).circle_distance(Frequency::new(self.hi));
        d_lo.min(d_hi)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VanishingScale {
    pub scale: i64,
    /// Max over sources of the in-band sup of |a_θ|.
    pub sup: f64,
    pub argmax_theta: f64,
    pub per_source: Vec<f64>,
}

/// Per-scale sampled suprema of |a_θ| over a frequency band.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VanishingTrace {
    pub band: FrequencyBand,
    pub scales: Vec<VanishingScale>,
    pub nonincreasing: bool,
    /// Labels of the sampled orbit points.
    pub sources: Vec<String>,
}

/// Sampled uniform-vanishing check over a compact band K.
///
/// "Uniform in x" is sampled: the caller provides several orbit points
/// (typically the same system at different base offsets), and the trace
/// records, per scale, the max over those points of the in-band sup of the
/// coefficient amplitude. `avoid` lists frequencies known to carry point
/// mass for these observables; the band must clear them by the main-lobe
/// margin 2/|A_max| or the check refuses to run.
pub fn uniform_vanishing_check(
    providers: &[&dyn SignalProvider],
    schedule: &FolnerSchedule,
    band: FrequencyBand,
    grid: usize,
    avoid: &[Frequency],
) -> Result<VanishingTrace> {
    let top_len = schedule.largest().len();
    if (grid as i64) < top_len {
        return Err(Error::GridTooSmall { grid, window: top_len as usize });
    }
    // Same oversampling as detection: the sampled sup of a scalloped sweep
    // would understate the band supremum unevenly across scales.
    let grid = grid.max(4 * (top_len as usize).next_power_of_two()).next_power_of_two();
    let margin = 2.0 / top_len as f64;
    for theta in avoid {
        if band.distance_to(theta.value()) < margin {
            return Err(Error::MarginViolation {
                lo: band.lo,
                hi: band.hi,
                theta: theta.value(),
                margin,
            });
        }
    }
    let lo_bin = (band.lo * grid as f64).ceil() as usize;
    let hi_bin = (band.hi * grid as f64).floor() as usize;
    let mut scales = Vec::with_capacity(schedule.len());
    for window in schedule.windows() {
        let sups: Vec<(f64, f64)> = providers
            .par_iter()
            .map(|provider| -> Result<(f64, f64)> {
                let signal = provider.sample(*window)?;
                let sweep = fourier_bohr_sweep(&signal, *window, grid)?;
                let mut best = (0.0f64, band.lo);
                for k in lo_bin..=hi_bin {
                    let a = sweep[k].norm();
                    if a > best.0 {
                        best = (a, k as f64 / grid as f64);
                    }
                }
                Ok(best)
            })
            .collect::<Result<_>>()?;
        let (sup, argmax) = sups
            .iter()
            .cloned()
            .max_by(|a, b| a.0.total_cmp(&b.0))
            .unwrap_or((0.0, band.lo));
        scales.push(VanishingScale {
            scale: window.len(),
            sup,
            argmax_theta: argmax,
            per_source: sups.iter().map(|s| s.0).collect(),
        });
    }
    let nonincreasing = scales.windows(2).all(|p| p[1].sup <= p[0].sup);
    Ok(VanishingTrace {
        band,
        scales,
        nonincreasing,
        sources: providers.iter().map(|p| p.label()).collect(),
    })
}

/// The pure-point defect, clamped at zero when it is only a rounding hair
/// below. A defect more negative than -1e-9 is reported as-is: that is a
/// Bessel violation the validation layer flags.
pub fn bessel_gap(report: &SpectrumReport) -> f64 {
    if report.pp_defect < 0.0 && report.pp_defect >= -1e-9 {
        0.0
    } else {
        report.pp_defect
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::freq::character;
    use crate::signal::SyntheticSignal;
    use crate::source::GOLDEN_RATIO_CONJUGATE;
    use num_complex::Complex64;

    fn system(source: PointSource, obs: CylinderObservable) -> CodedSystem {
        CodedSystem::new(source, obs)
    }

    #[test]
    fn periodic_aabb_candidates() {
        // Hand DFT of one period 1,1,0,0 over 4: amplitudes 1/2, √2/4, 0, √2/4.
        let schedule = FolnerSchedule::one_sided(&[64, 256, 1024]).unwrap();
        let report = detect_point_spectrum(
            &PointSource::periodic("aabb").unwrap(),
            &CylinderObservable::letter(b'a'),
            &schedule,
            1024,
            Threshold::Absolute(0.05),
        )
        .unwrap();
        assert_eq!(report.candidates.len(), 3);
        let by_theta = |target: f64| {
            report
                .candidates
                .iter()
                .find(|c| c.theta.circle_distance(Frequency::new(target)) < 1e-6)
                .unwrap_or_else(|| panic!("no candidate near {target}"))
        };
        let quarter = 2f64.sqrt() / 4.0;
        assert!((by_theta(0.0).amplitude - 0.5).abs() < 1e-4);
        assert!((by_theta(0.25).amplitude - quarter).abs() < 1e-4);
        assert!((by_theta(0.75).amplitude - quarter).abs() < 1e-4);
        // θ = 1/2 has a vanishing coefficient and must be excluded.
        assert!(report
            .candidates
            .iter()
            .all(|c| c.theta.circle_distance(Frequency::new(0.5)) > 0.1));
    }

    #[test]
    fn thue_morse_spectrum_is_empty() {
        let schedule = FolnerSchedule::one_sided(&[1 << 10, 1 << 12, 1 << 14]).unwrap();
        let report = detect_point_spectrum(
            &PointSource::thue_morse(),
            &CylinderObservable::plus_minus(b'a'),
            &schedule,
            1 << 14,
            Threshold::Absolute(0.05),
        )
        .unwrap();
        assert!(report.candidates.is_empty(), "got {:?}", report.candidates);
        // Empty spectrum: the gap is the whole mean power (unimodular signal).
        assert!((bessel_gap(&report) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn golden_rotation_detects_alpha() {
        let schedule = FolnerSchedule::one_sided(&[1 << 10, 1 << 12, 1 << 14]).unwrap();
        let report = detect_point_spectrum(
            &PointSource::golden_rotation(),
            &CylinderObservable::letter(b'a'),
            &schedule,
            1 << 15,
            Threshold::Absolute(0.05),
        )
        .unwrap();
        let n = (1i64 << 14) as f64;
        for target in [GOLDEN_RATIO_CONJUGATE, 1.0 - GOLDEN_RATIO_CONJUGATE] {
            let found = report.candidates.iter().find(|c| {
                c.theta.circle_distance(Frequency::new(target)) < 2.0 / n
            });
            let c = found.unwrap_or_else(|| panic!("no candidate near {target}"));
            assert!(c.amplitude >= 0.1, "weak amplitude {}", c.amplitude);
        }
        // The detected set sits inside the group generated by alpha.
        for c in &report.candidates {
            let dist = (1..=8)
                .flat_map(|k| {
                    [
                        c.theta.circle_distance(Frequency::new(k as f64 * GOLDEN_RATIO_CONJUGATE)),
                        c.theta.circle_distance(Frequency::new(-(k as f64) * GOLDEN_RATIO_CONJUGATE)),
                    ]
                })
                .chain([c.theta.circle_distance(Frequency::new(0.0))])
                .fold(f64::INFINITY, f64::min);
            assert!(dist < 2.0 / n, "stray candidate at {}", c.theta);
        }
    }

    #[test]
    fn refine_pure_character() {
        let theta0 = 0.3141592;
        let synth = SyntheticSignal::pure(vec![(Frequency::new(theta0), Complex64::new(1.0, 0.0))]);
        let w = Window::one_sided(4096);
        let signal = synth.sample(w).unwrap();
        // Grid guess: bin 1287 of 4096.
        let guess = Frequency::from_bin(1287, 4096);
        let refined = refine_frequency(&signal, w, guess, 1.0 / 4096.0).unwrap();
        assert!(!refined.warning);
        assert!((refined.theta.value() - theta0).abs() < 1e-6);
    }

    #[test]
    fn refine_on_grid_point_stays_put() {
        let theta0 = Frequency::from_bin(1024, 4096);
        let synth = SyntheticSignal::pure(vec![(theta0, Complex64::new(1.0, 0.0))]);
        let w = Window::one_sided(4096);
        let signal = synth.sample(w).unwrap();
        let refined = refine_frequency(&signal, w, theta0, 1.0 / 4096.0).unwrap();
        assert!((refined.theta.value() - theta0.value()).abs() < 1e-9);
    }

    #[test]
    fn refine_degenerate_signal_warns() {
        let w = Window::one_sided(256);
        let zeros = OrbitSignal::new(w, vec![Complex64::new(0.0, 0.0); 256], "zero", "zero");
        let refined = refine_frequency(&zeros, w, Frequency::new(0.3), 0.01).unwrap();
        assert!(refined.warning);
        assert_eq!(refined.theta.value(), 0.3);
        assert!(refine_frequency(&zeros, w, Frequency::new(0.3), 1e-4).is_err());
    }

    #[test]
    fn vanishing_off_spectrum_periodic() {
        // periodic ab has eigenvalues {0, 1/2}; over [0.1, 0.4] the sup is a
        // geometric-sum tail of size O(1/N).
        let schedule = FolnerSchedule::one_sided(&[1 << 12, 1 << 14, 1 << 16]).unwrap();
        let sys = system(PointSource::periodic("ab").unwrap(), CylinderObservable::letter(b'a'));
        let band = FrequencyBand::new(0.1, 0.4).unwrap();
        let trace = uniform_vanishing_check(
            &[&sys],
            &schedule,
            band,
            1 << 16,
            &[Frequency::new(0.0), Frequency::new(0.5)],
        )
        .unwrap();
        assert!(trace.nonincreasing);
        assert!(trace.scales.last().unwrap().sup <= 1e-3);
    }

    #[test]
    fn vanishing_constant_dirichlet_bound() {
        let schedule = FolnerSchedule::one_sided(&[1 << 10, 1 << 12]).unwrap();
        let sys = system(PointSource::periodic("a").unwrap(), CylinderObservable::one());
        let band = FrequencyBand::new(0.1, 0.4).unwrap();
        let trace =
            uniform_vanishing_check(&[&sys], &schedule, band, 1 << 12, &[Frequency::new(0.0)])
                .unwrap();
        for scale in &trace.scales {
            let bound = 1.0 / (scale.scale as f64 * (0.1 * std::f64::consts::PI).sin());
            assert!(scale.sup <= bound, "sup {} above bound {}", scale.sup, bound);
        }
    }

    #[test]
    fn margin_violation_is_refused() {
        let schedule = FolnerSchedule::one_sided(&[1 << 10]).unwrap();
        let sys = system(PointSource::periodic("ab").unwrap(), CylinderObservable::letter(b'a'));
        let band = FrequencyBand::new(0.1, 0.5).unwrap();
        let err = uniform_vanishing_check(&[&sys], &schedule, band, 1 << 10, &[Frequency::new(0.5)])
            .unwrap_err();
        assert!(matches!(err, Error::MarginViolation { .. }));
    }

    #[test]
    fn aabb_parseval_via_fixed_frequencies() {
        // All four period-4 frequencies: the Bessel sum exhausts the power.
        let schedule = FolnerSchedule::one_sided(&[256, 1024]).unwrap();
        let sys = system(PointSource::periodic("aabb").unwrap(), CylinderObservable::letter(b'a'));
        let thetas: Vec<Frequency> = (0..4).map(|k| Frequency::from_bin(k, 4)).collect();
        let report = spectrum_at(&sys, &schedule, &thetas).unwrap();
        assert!((report.mean_power - 0.5).abs() < 1e-12);
        assert!(report.pp_defect.abs() < 1e-12);
        assert_eq!(bessel_gap(&report), 0.0);
    }

    #[test]
    fn synthetic_truth_recovery() {
        let thetas = [0.111, 0.237, 0.412, 0.643, 0.881];
        let coeffs = [
            Complex64::new(0.9, 0.1),
            Complex64::new(-0.5, 0.4),
            Complex64::new(0.3, -0.6),
            Complex64::new(0.0, 0.8),
            Complex64::new(0.7, 0.0),
        ];
        let synth = SyntheticSignal {
            components: thetas
                .iter()
                .zip(&coeffs)
                .map(|(&t, &c)| (Frequency::new(t), c))
                .collect(),
            noise_eps: 0.02,
            seed: 7,
        };
        let schedule = FolnerSchedule::one_sided(&[1 << 12, 1 << 13, 1 << 14]).unwrap();
        let report = detect_for(
            &synth,
            &schedule,
            1 << 15,
            Threshold::Absolute(0.25),
            DetectionConfig::default(),
        )
        .unwrap();
        assert_eq!(report.candidates.len(), 5);
        let n = (1i64 << 14) as f64;
        for (&t, &c) in thetas.iter().zip(&coeffs) {
            let found = report
                .candidates
                .iter()
                .find(|cand| cand.theta.circle_distance(Frequency::new(t)) < 2.0 / n)
                .unwrap_or_else(|| panic!("missing tone at {t}"));
            let rel = (found.amplitude - c.norm()).abs() / c.norm();
            assert!(rel < 0.05, "amplitude off by {rel} at {t}");
        }
    }

    #[test]
    fn conjugate_symmetry_on_fixed_window() {
        // a_{1-θ} = conj(a_θ) for real signals.
        let sys = system(PointSource::fibonacci(), CylinderObservable::letter(b'a'));
        let w = Window::one_sided(1 << 10);
        let signal = sys.sample(w).unwrap();
        for theta in [0.1234, 0.377, 0.491] {
            let a = fourier_bohr_at(&signal, w, Frequency::new(theta)).unwrap();
            let b = fourier_bohr_at(&signal, w, Frequency::new(1.0 - theta)).unwrap();
            assert!((b - a.conj()).norm() < 1e-12);
        }
    }

    #[test]
    fn character_helper_consistency() {
        // spectrum detection relies on character(θ, t)·conj_character(θ, t) = 1.
        let theta = Frequency::new(0.377);
        for t in [-5i64, 0, 129] {
            let z = character(theta, t) * crate::freq::conj_character(theta, t);
            assert!((z - Complex64::new(1.0, 0.0)).norm() < 1e-14);
        }
    }
}
