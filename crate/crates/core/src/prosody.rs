//! Prosodic low-level descriptors (f0, energy, spectral tilt) and
//! fixed-length utterance functionals.
//!
//! The frame grid is the same 25 ms / 10 ms grid as the spectral features.
//! Pitch and energy work on raw frames; the tilt spectrum is
//! Hamming-windowed. None of them apply pre-emphasis, which would bias the
//! tilt estimate.
//!
//! Pitch is a normalized-autocorrelation tracker with fixed thresholds, no
//! dynamic programming. Within a frame the candidate set is every local
//! maximum of the normalized autocorrelation over the lag range
//! `[sr/fmax, sr/fmin]`; the smallest lag whose peak comes within 3% of the
//! global maximum wins, which keeps pure periodic signals from collapsing
//! an octave down to their double period. The winning lag is refined by
//! parabolic interpolation.

use serde::{Deserialize, Serialize};

use crate::dsp::{
    frame_signal_raw, hamming_window, power_spectrum, AudioSignal, FeatureKind, FeatureMatrix,
};
use crate::error::{Error, Result};

/// Pitch extraction constants.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PitchConfig {
    pub fmin_hz: f64,
    pub fmax_hz: f64,
    /// A frame is voiced only if the best normalized-autocorrelation peak
    /// exceeds this.
    pub voicing_threshold: f64,
    /// ... and its RMS exceeds this floor (rejects digital silence).
    pub silence_rms: f64,
}

impl Default for PitchConfig {
    fn default() -> Self {
        Self {
            fmin_hz: 60.0,
            fmax_hz: 400.0,
            voicing_threshold: 0.45,
            silence_rms: 1e-4,
        }
    }
}

/// Candidate peaks within this fraction of the global maximum compete on
/// lag; the smallest lag (highest f0) wins.
const PEAK_BAND: f64 = 0.97;

const FRAME_LEN_S: f64 = 0.025;
const FRAME_SHIFT_S: f64 = 0.010;
const ENERGY_FLOOR: f64 = 1e-12;
const TILT_BAND_HZ: (f64, f64) = (100.0, 5000.0);
const TILT_NFFT: usize = 512;
/// Rise/fall slopes are measured over voiced runs of at least this length.
const MIN_SLOPE_RUN: usize = 3;

/// Frame-aligned prosodic contours.
#[derive(Debug, Clone, PartialEq)]
pub struct ProsodicContour {
    /// Hz; 0 where unvoiced, otherwise within the pitch search band.
    pub f0_hz: Vec<f64>,
    pub voiced: Vec<bool>,
    pub energy_db: Vec<f64>,
    /// Slope of log10 power vs log10 frequency over 100–5000 Hz.
    pub tilt: Vec<f64>,
}

impl ProsodicContour {
    pub fn new(
        f0_hz: Vec<f64>,
        voiced: Vec<bool>,
        energy_db: Vec<f64>,
        tilt: Vec<f64>,
        cfg: &PitchConfig,
    ) -> Result<Self> {
        let n = f0_hz.len();
        if voiced.len() != n || energy_db.len() != n || tilt.len() != n {
            return Err(Error::DimMismatch(format!(
                "contour lengths differ: f0 {n}, voiced {}, energy {}, tilt {}",
                voiced.len(),
                energy_db.len(),
                tilt.len()
            )));
        }
        for t in 0..n {
            let f0 = f0_hz[t];
            if !f0.is_finite() || !energy_db[t].is_finite() || !tilt[t].is_finite() {
                return Err(Error::InvalidParam(format!(
                    "non-finite contour value at frame {t}"
                )));
            }
            if voiced[t] != (f0 != 0.0) {
                return Err(Error::InvalidParam(format!(
                    "frame {t}: voiced flag {} inconsistent with f0 {f0}",
                    voiced[t]
                )));
            }
            if f0 != 0.0 && !(cfg.fmin_hz..=cfg.fmax_hz).contains(&f0) {
                return Err(Error::InvalidParam(format!(
                    "frame {t}: f0 {f0} outside [{}, {}]",
                    cfg.fmin_hz, cfg.fmax_hz
                )));
            }
        }
        Ok(Self {
            f0_hz,
            voiced,
            energy_db,
            tilt,
        })
    }

    pub fn n_frames(&self) -> usize {
        self.f0_hz.len()
    }
}

/// Normalized autocorrelation of `frame` at integer `lag`.
fn ncc(frame: &[f64], lag: usize) -> f64 {
    let n = frame.len() - lag;
    let mut cross = 0.0;
    let mut e0 = 0.0;
    let mut e1 = 0.0;
    for t in 0..n {
        cross += frame[t] * frame[t + lag];
        e0 += frame[t] * frame[t];
        e1 += frame[t + lag] * frame[t + lag];
    }
    let denom = (e0 * e1).sqrt();
    if denom > 0.0 {
        cross / denom
    } else {
        0.0
    }
}

/// Per-frame f0 and voicing from normalized autocorrelation.
pub fn f0_contour(signal: &AudioSignal, cfg: &PitchConfig) -> Result<(Vec<f64>, Vec<bool>)> {
    if cfg.fmin_hz >= cfg.fmax_hz {
        return Err(Error::InvalidParam(format!(
            "pitch band: fmin {} must be below fmax {}",
            cfg.fmin_hz, cfg.fmax_hz
        )));
    }
    let sr = signal.sample_rate() as f64;
    let frames = frame_signal_raw(signal, FRAME_LEN_S, FRAME_SHIFT_S)?;
    let frame_len = frames[0].len();
    let lag_lo = (sr / cfg.fmax_hz).ceil() as usize;
    let lag_hi = ((sr / cfg.fmin_hz).floor() as usize).min(frame_len.saturating_sub(2));
    if lag_lo < 1 || lag_lo >= lag_hi {
        return Err(Error::InvalidParam(format!(
            "pitch band [{}, {}] Hz gives empty lag range at frame length {frame_len}",
            cfg.fmin_hz, cfg.fmax_hz
        )));
    }
    let mut f0 = Vec::with_capacity(frames.len());
    let mut voiced = Vec::with_capacity(frames.len());
    for frame in &frames {
        let rms = (frame.iter().map(|x| x * x).sum::<f64>() / frame.len() as f64).sqrt();
        if rms < cfg.silence_rms {
            f0.push(0.0);
            voiced.push(false);
            continue;
        }
        let corr: Vec<f64> = (lag_lo..=lag_hi).map(|lag| ncc(frame, lag)).collect();
        let vmax = corr.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if !(vmax > cfg.voicing_threshold) {
            f0.push(0.0);
            voiced.push(false);
            continue;
        }
        // smallest local-maximum lag within the candidate band
        let mut best_idx = None;
        for i in 0..corr.len() {
            let left_ok = i == 0 || corr[i] >= corr[i - 1];
            let right_ok = i + 1 == corr.len() || corr[i] >= corr[i + 1];
            if left_ok && right_ok && corr[i] >= PEAK_BAND * vmax {
                best_idx = Some(i);
                break;
            }
        }
        let i = best_idx.expect("global max is always a candidate");
        // parabolic refinement around the winning integer lag
        let mut lag = (lag_lo + i) as f64;
        if i > 0 && i + 1 < corr.len() {
            let (ym, y0, yp) = (corr[i - 1], corr[i], corr[i + 1]);
            let denom = ym - 2.0 * y0 + yp;
            if denom.abs() > 1e-12 {
                let delta = 0.5 * (ym - yp) / denom;
                lag += delta.clamp(-0.5, 0.5);
            }
        }
        let hz = (sr / lag).clamp(cfg.fmin_hz, cfg.fmax_hz);
        f0.push(hz);
        voiced.push(true);
    }
    Ok((f0, voiced))
}

/// Per-frame energy: `10·log10(mean square + 1e-12)` dB.
pub fn energy_contour(signal: &AudioSignal) -> Result<Vec<f64>> {
    let frames = frame_signal_raw(signal, FRAME_LEN_S, FRAME_SHIFT_S)?;
    Ok(frames
        .iter()
        .map(|frame| {
            let ms = frame.iter().map(|x| x * x).sum::<f64>() / frame.len() as f64;
            10.0 * (ms + ENERGY_FLOOR).log10()
        })
        .collect())
}

/// Per-frame spectral tilt: least-squares slope of log10 power against
/// log10 frequency over bins in 100–5000 Hz.
pub fn spectral_tilt(signal: &AudioSignal) -> Result<Vec<f64>> {
    let frames = frame_signal_raw(signal, FRAME_LEN_S, FRAME_SHIFT_S)?;
    let window = hamming_window(frames[0].len());
    let sr = signal.sample_rate() as f64;
    let bin_hz = sr / TILT_NFFT as f64;
    let bins: Vec<usize> = (0..=TILT_NFFT / 2)
        .filter(|&k| {
            let f = k as f64 * bin_hz;
            f >= TILT_BAND_HZ.0 && f <= TILT_BAND_HZ.1
        })
        .collect();
    let xs: Vec<f64> = bins.iter().map(|&k| (k as f64 * bin_hz).log10()).collect();
    let x_mean = xs.iter().sum::<f64>() / xs.len() as f64;
    let x_var: f64 = xs.iter().map(|x| (x - x_mean).powi(2)).sum();
    frames
        .iter()
        .map(|frame| {
            let windowed: Vec<f64> = frame.iter().zip(&window).map(|(x, w)| x * w).collect();
            let spectrum = power_spectrum(&windowed, TILT_NFFT)?;
            let ys: Vec<f64> = bins
                .iter()
                .map(|&k| (spectrum[k] + ENERGY_FLOOR).log10())
                .collect();
            let y_mean = ys.iter().sum::<f64>() / ys.len() as f64;
            let cov: f64 = xs
                .iter()
                .zip(&ys)
                .map(|(x, y)| (x - x_mean) * (y - y_mean))
                .sum();
            Ok(cov / x_var)
        })
        .collect()
}

/// All three contours plus voicing on one frame grid.
pub fn prosodic_contour(signal: &AudioSignal, cfg: &PitchConfig) -> Result<ProsodicContour> {
    let (f0, voiced) = f0_contour(signal, cfg)?;
    let energy = energy_contour(signal)?;
    let tilt = spectral_tilt(signal)?;
    ProsodicContour::new(f0, voiced, energy, tilt, cfg)
}

/// Frame-level prosodic feature matrix, dims 4:
/// `[ln f0 (0 when unvoiced), voiced flag, energy dB, tilt]`.
pub fn prosodic_lld(signal: &AudioSignal) -> Result<FeatureMatrix> {
    let contour = prosodic_contour(signal, &PitchConfig::default())?;
    let rows: Vec<Vec<f64>> = (0..contour.n_frames())
        .map(|t| {
            vec![
                if contour.voiced[t] {
                    contour.f0_hz[t].ln()
                } else {
                    0.0
                },
                if contour.voiced[t] { 1.0 } else { 0.0 },
                contour.energy_db[t],
                contour.tilt[t],
            ]
        })
        .collect();
    FeatureMatrix::from_rows(rows, FeatureKind::Prosody, FRAME_SHIFT_S)
}

/// Fixed-length utterance functionals over the prosodic contours: for each
/// of the three LLDs (f0 in log-Hz over voiced frames; energy and tilt over
/// all frames) the mean, standard deviation, percentiles 20/50/80, and the
/// mean rise and fall slopes over voiced runs, plus the voiced-frame
/// fraction and the utterance duration. See [`FunctionalVector::NAMES`]
/// for the exact ordering.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionalVector {
    pub values: Vec<f64>,
}

impl FunctionalVector {
    pub const DIMS: usize = 23;

    /// Ordering of [`FunctionalVector::values`].
    pub const NAMES: [&'static str; Self::DIMS] = [
        "f0_log_mean",
        "f0_log_std",
        "f0_log_p20",
        "f0_log_p50",
        "f0_log_p80",
        "f0_rise_slope",
        "f0_fall_slope",
        "energy_mean",
        "energy_std",
        "energy_p20",
        "energy_p50",
        "energy_p80",
        "energy_rise_slope",
        "energy_fall_slope",
        "tilt_mean",
        "tilt_std",
        "tilt_p20",
        "tilt_p50",
        "tilt_p80",
        "tilt_rise_slope",
        "tilt_fall_slope",
        "voiced_fraction",
        "duration_s",
    ];

    pub fn get(&self, name: &str) -> f64 {
        let idx = Self::NAMES
            .iter()
            .position(|&n| n == name)
            .unwrap_or_else(|| panic!("unknown functional `{name}`"));
        self.values[idx]
    }
}

fn mean_and_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / values.len() as f64;
    (mean, var.sqrt())
}

/// Percentile with linear interpolation between order statistics
/// (index `q/100·(n−1)`).
fn percentile(sorted: &[f64], q: f64) -> f64 {
    match sorted.len() {
        0 => 0.0,
        1 => sorted[0],
        n => {
            let pos = q / 100.0 * (n - 1) as f64;
            let lo = pos.floor() as usize;
            let frac = pos - lo as f64;
            if lo + 1 < n {
                sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
            } else {
                sorted[n - 1]
            }
        }
    }
}

/// Mean positive and mean negative frame-to-frame difference of `series`,
/// taken within maximal voiced runs of at least [`MIN_SLOPE_RUN`] frames,
/// expressed per second. Zero when no qualifying differences exist.
fn rise_fall_slopes(series: &[f64], voiced: &[bool], shift_s: f64) -> (f64, f64) {
    let mut rises = Vec::new();
    let mut falls = Vec::new();
    let mut t = 0;
    while t < voiced.len() {
        if !voiced[t] {
            t += 1;
            continue;
        }
        let start = t;
        while t < voiced.len() && voiced[t] {
            t += 1;
        }
        if t - start >= MIN_SLOPE_RUN {
            for i in start..t - 1 {
                let d = (series[i + 1] - series[i]) / shift_s;
                if d > 0.0 {
                    rises.push(d);
                } else if d < 0.0 {
                    falls.push(d);
                }
            }
        }
    }
    let mean = |v: &Vec<f64>| {
        if v.is_empty() {
            0.0
        } else {
            v.iter().sum::<f64>() / v.len() as f64
        }
    };
    (mean(&rises), mean(&falls))
}

fn lld_functionals(values: &[f64], voiced: &[bool], series_for_slopes: &[f64]) -> [f64; 7] {
    let (mean, std) = mean_and_std(values);
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let (rise, fall) = rise_fall_slopes(series_for_slopes, voiced, FRAME_SHIFT_S);
    [
        mean,
        std,
        percentile(&sorted, 20.0),
        percentile(&sorted, 50.0),
        percentile(&sorted, 80.0),
        rise,
        fall,
    ]
}

/// Compute the 23-dim functional vector for a contour.
///
/// All-unvoiced contours produce zeros for every f0 functional and a voiced
/// fraction of zero.
pub fn functionals(contour: &ProsodicContour, duration_s: f64) -> Result<FunctionalVector> {
    let n = contour.n_frames();
    if n == 0 {
        return Err(Error::TooShort {
            samples: 0,
            needed: 1,
        });
    }
    let log_f0_all: Vec<f64> = contour
        .f0_hz
        .iter()
        .zip(&contour.voiced)
        .map(|(&f, &v)| if v { f.ln() } else { 0.0 })
        .collect();
    let log_f0_voiced: Vec<f64> = log_f0_all
        .iter()
        .zip(&contour.voiced)
        .filter(|(_, &v)| v)
        .map(|(&x, _)| x)
        .collect();
    let mut values = Vec::with_capacity(FunctionalVector::DIMS);
    values.extend(lld_functionals(&log_f0_voiced, &contour.voiced, &log_f0_all));
    values.extend(lld_functionals(
        &contour.energy_db,
        &contour.voiced,
        &contour.energy_db,
    ));
    values.extend(lld_functionals(&contour.tilt, &contour.voiced, &contour.tilt));
    let voiced_fraction = contour.voiced.iter().filter(|&&v| v).count() as f64 / n as f64;
    values.push(voiced_fraction);
    values.push(duration_s);
    Ok(FunctionalVector { values })
}
