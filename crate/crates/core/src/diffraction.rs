//! Diffraction of weighted Dirac combs on the integer lattice.
//!
//! A comb is a finitely windowed weight sequence; its autocorrelation is the
//! finite-window estimator η(s) = (1/N) Σ w_{t+s} conj(w_t), and Bragg peaks
//! are the squared moduli of the comb's Fourier-Bohr coefficients. The
//! consistent-phase cross-check compares each peak intensity against the
//! Fejér-weighted coefficient of the autocorrelation at the same frequency;
//! the lag values are boundary-corrected (divided by the actual overlap
//! count rather than N) before the Fejér sum so that window truncation does
//! not masquerade as a phase inconsistency.

use crate::error::{Error, Result};
use crate::folner::FolnerSchedule;
use crate::freq::{conj_character, Frequency};
use crate::observable::CylinderObservable;
use crate::reduction::pairwise_map_sum;
use crate::signal::{CodedSystem, OrbitSignal};
use crate::source::PointSource;
use crate::spectrum::{detect_for, DetectionConfig, SpectrumReport, Threshold};
use crate::window::Window;
use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Weights per symbol; must cover the whole alphabet in use.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMap {
    map: BTreeMap<u8, Complex64>,
}

impl WeightMap {
    pub fn new(pairs: &[(u8, Complex64)]) -> Self {
        WeightMap { map: pairs.iter().copied().collect() }
    }

    /// Parse `a=1,b=0` or `a=1+0.5i,b=-1`.
    pub fn from_descriptor(descriptor: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        for part in descriptor.split(',') {
            let (sym, value) = part.split_once('=').ok_or_else(|| Error::InvalidInput(format!(
                "weight entries look like `a=1`, got `{part}`"
            )))?;
            let sym = sym.trim();
            if sym.len() != 1 {
                return Err(Error::InvalidInput(format!("weight symbol `{sym}` must be one character")));
            }
            map.insert(sym.as_bytes()[0], parse_complex(value.trim())?);
        }
        if map.is_empty() {
            return Err(Error::InvalidInput("empty weight map".into()));
        }
        Ok(WeightMap { map })
    }

    pub fn weight(&self, symbol: u8) -> Result<Complex64> {
        self.map.get(&symbol).copied().ok_or(Error::UnmappedSymbol(symbol as char))
    }

    /// The radius-0 observable that reads these weights off the symbols.
    pub fn observable(&self) -> CylinderObservable {
        let pairs: Vec<(u8, Complex64)> = self.map.iter().map(|(&k, &v)| (k, v)).collect();
        CylinderObservable::symbol_map(&pairs, Complex64::new(f64::NAN, 0.0))
    }
}

fn parse_complex(text: &str) -> Result<Complex64> {
    let bad = || Error::InvalidInput(format!("cannot parse complex number `{text}`"));
    if let Ok(re) = text.parse::<f64>() {
        return Ok(Complex64::new(re, 0.0));
    }
    let body = text.strip_suffix('i').ok_or_else(bad)?;
    // Split at the sign of the imaginary part, skipping a leading sign.
    for (idx, ch) in body.char_indices().rev() {
        if idx > 0 && (ch == '+' || ch == '-') && !body[..idx].ends_with(['e', 'E']) {
            let re: f64 = body[..idx].parse().map_err(|_| bad())?;
            let im_text = &body[idx..];
            let im: f64 = if im_text == "+" || im_text == "-" {
                format!("{im_text}1").parse().map_err(|_| bad())?
            } else {
                im_text.parse().map_err(|_| bad())?
            };
            return Ok(Complex64::new(re, im));
        }
    }
    let im: f64 = body.parse().map_err(|_| bad())?;
    Ok(Complex64::new(0.0, im))
}

/// A translation-bounded weight sequence restricted to a window.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedComb {
    pub window: Window,
    pub weights: Vec<Complex64>,
    /// Cached ‖μ‖_U for U = 0: the largest single |weight|.
    pub norm_u0: f64,
}

impl WeightedComb {
    pub fn new(window: Window, weights: Vec<Complex64>) -> Result<Self> {
        if weights.len() as i64 != window.len() {
            return Err(Error::InvalidInput(format!(
                "{} weights for window {window}",
                weights.len()
            )));
        }
        let norm_u0 = weights.iter().map(|w| w.norm()).fold(0.0, f64::max);
        Ok(WeightedComb { window, weights, norm_u0 })
    }

    pub fn as_signal(&self) -> OrbitSignal {
        OrbitSignal::new(self.window, self.weights.clone(), "comb", "weights")
    }

    /// Multiply every weight by c.
    pub fn scaled(&self, c: Complex64) -> Self {
        let weights = self.weights.iter().map(|w| c * w).collect();
        WeightedComb::new(self.window, weights).expect("same window")
    }

    /// Parse CSV rows `position,re,im`; gaps inside the span read as zero.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut entries: Vec<(i64, Complex64)> = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with("position") {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 3 {
                return Err(Error::InvalidInput(format!(
                    "line {}: expected `position,re,im`",
                    lineno + 1
                )));
            }
            let pos: i64 = fields[0].trim().parse().map_err(|_| {
                Error::InvalidInput(format!("line {}: bad position", lineno + 1))
            })?;
            let re: f64 = fields[1].trim().parse().map_err(|_| {
                Error::InvalidInput(format!("line {}: bad real part", lineno + 1))
            })?;
            let im: f64 = fields[2].trim().parse().map_err(|_| {
                Error::InvalidInput(format!("line {}: bad imaginary part", lineno + 1))
            })?;
            entries.push((pos, Complex64::new(re, im)));
        }
        if entries.is_empty() {
            return Err(Error::InvalidInput("comb CSV has no rows".into()));
        }
        let lo = entries.iter().map(|e| e.0).min().unwrap();
        let hi = entries.iter().map(|e| e.0).max().unwrap() + 1;
        let window = Window::new(lo, hi)?;
        let mut weights = vec![Complex64::new(0.0, 0.0); window.len() as usize];
        for (pos, w) in entries {
            weights[(pos - lo) as usize] = w;
        }
        WeightedComb::new(window, weights)
    }
}

/// w_t = weight_map(x(t)) over the window.
pub fn comb_from_symbols(
    symbols: &[u8],
    weight_map: &WeightMap,
    window: Window,
) -> Result<WeightedComb> {
    if symbols.len() as i64 != window.len() {
        return Err(Error::InvalidInput(format!(
            "{} symbols for window {window}",
            symbols.len()
        )));
    }
    let weights: Vec<Complex64> =
        symbols.iter().map(|&s| weight_map.weight(s)).collect::<Result<_>>()?;
    WeightedComb::new(window, weights)
}

/// ‖μ‖_U = max_t Σ_{|s-t|≤U} |w_s| with zero padding outside the window,
/// via sliding-window prefix sums.
pub fn translation_bound(comb: &WeightedComb, u_radius: i64) -> f64 {
    let n = comb.weights.len() as i64;
    let mut prefix = Vec::with_capacity(n as usize + 1);
    prefix.push(0.0f64);
    for w in &comb.weights {
        prefix.push(prefix.last().unwrap() + w.norm());
    }
    let mut best: f64 = 0.0;
    for t in 0..n {
        let lo = (t - u_radius).clamp(0, n);
        let hi = (t + u_radius + 1).clamp(0, n);
        best = best.max(prefix[hi as usize] - prefix[lo as usize]);
    }
    best
}

/// Finite-window autocorrelation η(s) for |s| ≤ max_lag, normalized by the
/// full window size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Autocorrelation {
    pub max_lag: i64,
    /// η(s) at index (s + max_lag), re/im pairs.
    pub values: Vec<(f64, f64)>,
    /// The window size N used for normalization.
    pub normalization: i64,
}

impl Autocorrelation {
    pub fn value(&self, s: i64) -> Complex64 {
        let (re, im) = self.values[(s + self.max_lag) as usize];
        Complex64::new(re, im)
    }

    /// η(s) rescaled by N/(N-|s|): the boundary-corrected lag estimate.
    pub fn corrected_value(&self, s: i64) -> Complex64 {
        let n = self.normalization as f64;
        self.value(s) * (n / (n - s.abs() as f64))
    }
}

/// η(s) = (1/N) Σ_{t, t+s ∈ W} w_{t+s} conj(w_t), computed by FFT
/// convolution. η(0) is summed directly so it is exactly real and
/// nonnegative, and η(-s) is stored as conj(η(s)) so Hermitian symmetry is
/// exact by construction.
pub fn autocorrelation(comb: &WeightedComb, max_lag: i64) -> Result<Autocorrelation> {
    let n = comb.window.len();
    if max_lag < 0 || max_lag > n / 4 {
        return Err(Error::LagTooLarge { lag: max_lag, size: n });
    }
    let fft_len = ((n + max_lag) as usize).next_power_of_two();
    let mut buf = vec![Complex64::new(0.0, 0.0); fft_len];
    buf[..n as usize].copy_from_slice(&comb.weights);
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(fft_len).process(&mut buf);
    for v in buf.iter_mut() {
        *v = *v * v.conj();
    }
    planner.plan_fft_inverse(fft_len).process(&mut buf);
    let scale = 1.0 / (fft_len as f64 * n as f64);

    let mut values = vec![(0.0, 0.0); (2 * max_lag + 1) as usize];
    let eta0 = pairwise_map_sum(&comb.weights, |w| w.norm_sqr()) / n as f64;
    values[max_lag as usize] = (eta0, 0.0);
    for s in 1..=max_lag {
        let z = buf[s as usize] * scale;
        values[(max_lag + s) as usize] = (z.re, z.im);
        values[(max_lag - s) as usize] = (z.re, -z.im);
    }
    Ok(Autocorrelation { max_lag, values, normalization: n })
}

/// The Fejér-weighted Fourier-Bohr coefficient of the lag sequence:
/// (1/(S+1)) Σ_{|s|≤S} (1 - |s|/(S+1)) η(s) e^{-2πiθs}, normalized so a
/// pure character lag sequence gives exactly its intensity at θ.
pub fn fejer_coefficient(eta: &Autocorrelation, theta: Frequency, boundary_corrected: bool) -> Complex64 {
    let s_max = eta.max_lag;
    let denom = (s_max + 1) as f64;
    let mut terms = Vec::with_capacity((2 * s_max + 1) as usize);
    for s in -s_max..=s_max {
        let weight = (1.0 - s.abs() as f64 / denom) / denom;
        let value = if boundary_corrected { eta.corrected_value(s) } else { eta.value(s) };
        terms.push(value * weight * conj_character(theta, s));
    }
    crate::reduction::pairwise_sum_complex(&terms)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiffractionPeak {
    pub theta: Frequency,
    /// I(θ) = |a_θ(μ)|² at the largest scale.
    pub intensity: f64,
    pub phase: f64,
    /// |I(θ) - a_θ(η)| with the Fejér-weighted, boundary-corrected η.
    pub consistent_phase_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiffractionReport {
    pub source: String,
    pub top_scale: i64,
    pub max_lag: i64,
    /// Mean power of the weights = η(0).
    pub mean_power: f64,
    /// Σ I(θ) over detected peaks.
    pub total_peak_intensity: f64,
    /// Residual weight power unexplained by the peaks.
    pub pp_defect: f64,
    pub threshold: f64,
    pub peaks: Vec<DiffractionPeak>,
}

/// Detect Bragg peaks of the weighted comb family over the schedule and
/// cross-check each intensity against the autocorrelation route.
pub fn diffraction_report(
    source: &PointSource,
    weight_map: &WeightMap,
    schedule: &FolnerSchedule,
    grid: usize,
    threshold: Threshold,
    max_lag: i64,
) -> Result<DiffractionReport> {
    let provider = CodedSystem::new(source.clone(), weight_map.observable());
    let spectrum = detect_for(&provider, schedule, grid, threshold, DetectionConfig::default())?;
    let top_window = schedule.largest();
    let symbols = source.symbols(top_window)?;
    let comb = comb_from_symbols(&symbols, weight_map, top_window)?;
    diffraction_from_spectrum(&spectrum, &comb, max_lag)
}

/// The same cross-check against an already computed spectrum and comb.
pub fn diffraction_from_spectrum(
    spectrum: &SpectrumReport,
    comb: &WeightedComb,
    max_lag: i64,
) -> Result<DiffractionReport> {
    let eta = autocorrelation(comb, max_lag)?;
    let peaks: Vec<DiffractionPeak> = spectrum
        .candidates
        .iter()
        .map(|c| {
            let intensity = c.amplitude * c.amplitude;
            let via_eta = fejer_coefficient(&eta, c.theta, true);
            DiffractionPeak {
                theta: c.theta,
                intensity,
                phase: c.phase,
                consistent_phase_residual: (Complex64::new(intensity, 0.0) - via_eta).norm(),
            }
        })
        .collect();
    let total: f64 = peaks.iter().map(|p| p.intensity).sum();
    Ok(DiffractionReport {
        source: spectrum.source.clone(),
        top_scale: spectrum.top_scale,
        max_lag,
        mean_power: spectrum.mean_power,
        total_peak_intensity: total,
        pp_defect: spectrum.mean_power - total,
        threshold: spectrum.threshold,
        peaks,
    })
}

/// μ * φ for the averaging kernel of the given radius: each weight becomes
/// the centered mean of its 2r+1 neighbours (zero-padded). Radius 0 is δ₀.
pub fn smoothed_comb(comb: &WeightedComb, radius: i64) -> WeightedComb {
    if radius == 0 {
        return comb.clone();
    }
    let n = comb.weights.len() as i64;
    let kernel_mass = (2 * radius + 1) as f64;
    let weights: Vec<Complex64> = (0..n)
        .map(|t| {
            let lo = (t - radius).clamp(0, n);
            let hi = (t + radius + 1).clamp(0, n);
            let mut acc = Complex64::new(0.0, 0.0);
            for s in lo..hi {
                acc += comb.weights[s as usize];
            }
            acc / kernel_mass
        })
        .collect();
    WeightedComb::new(comb.window, weights).expect("same window")
}
