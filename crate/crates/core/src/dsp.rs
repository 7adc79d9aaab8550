//! From-scratch spectral feature extraction.
//!
//! The chain follows widely documented Kaldi-style conventions: 25 ms
//! frames at a 10 ms shift, pre-emphasis 0.97, Hamming window, 512-point
//! FFT, 40 triangular mel filters between 20 Hz and 7600 Hz with a 1e-10
//! energy floor, and an orthonormal DCT-II keeping c0..c12 for MFCCs
//! (c0 retained, no separate log-energy channel). Deltas use the standard
//! regression formula with window 2 and edge replication. All constants
//! live in [`DspConfig`] and can be overridden.
//!
//! Everything here is deterministic: identical input samples produce
//! identical output matrices.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The only sample rate this toolkit accepts; resampling is out of scope.
pub const CANONICAL_SAMPLE_RATE: u32 = 16_000;

/// Mono audio at the canonical sample rate, samples nominally in [-1, 1].
#[derive(Debug, Clone)]
pub struct AudioSignal {
    samples: Vec<f64>,
    sample_rate_hz: u32,
}

impl AudioSignal {
    /// Wrap samples, rejecting non-canonical rates and non-finite values.
    pub fn new(samples: Vec<f64>, sample_rate_hz: u32) -> Result<Self> {
        if sample_rate_hz != CANONICAL_SAMPLE_RATE {
            return Err(Error::SampleRate {
                got: sample_rate_hz,
                expected: CANONICAL_SAMPLE_RATE,
            });
        }
        if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidParam(format!(
                "non-finite sample at index {i}"
            )));
        }
        Ok(Self {
            samples,
            sample_rate_hz,
        })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate_hz
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate_hz as f64
    }
}

/// What a feature matrix contains.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FeatureKind {
    #[serde(rename = "FB40")]
    Fb40,
    #[serde(rename = "MFCC13")]
    Mfcc13,
    #[serde(rename = "MFCC39")]
    Mfcc39,
    #[serde(rename = "PROSODY")]
    Prosody,
    #[serde(rename = "EMBEDDING")]
    Embedding,
}

impl FeatureKind {
    pub fn as_str(self) -> &'static str {
        match self {
            FeatureKind::Fb40 => "FB40",
            FeatureKind::Mfcc13 => "MFCC13",
            FeatureKind::Mfcc39 => "MFCC39",
            FeatureKind::Prosody => "PROSODY",
            FeatureKind::Embedding => "EMBEDDING",
        }
    }
}

impl std::str::FromStr for FeatureKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "FB40" => Ok(FeatureKind::Fb40),
            "MFCC13" => Ok(FeatureKind::Mfcc13),
            "MFCC39" => Ok(FeatureKind::Mfcc39),
            "PROSODY" => Ok(FeatureKind::Prosody),
            "EMBEDDING" => Ok(FeatureKind::Embedding),
            other => Err(Error::InvalidParam(format!(
                "unknown feature kind `{other}` (expected FB40, MFCC13, MFCC39, PROSODY, or EMBEDDING)"
            ))),
        }
    }
}

impl std::fmt::Display for FeatureKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// frames × dims matrix of finite reals, the universal frame-level carrier.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    values: Vec<f64>, // row-major
    rows: usize,
    dims: usize,
    pub frame_shift_s: f64,
    pub kind: FeatureKind,
}

impl FeatureMatrix {
    pub fn new(
        rows: usize,
        dims: usize,
        values: Vec<f64>,
        kind: FeatureKind,
        frame_shift_s: f64,
    ) -> Result<Self> {
        if dims == 0 && rows > 0 {
            return Err(Error::InvalidParam("feature matrix with 0 dims".into()));
        }
        if values.len() != rows * dims {
            return Err(Error::DimMismatch(format!(
                "feature matrix {rows}x{dims} needs {} values, got {}",
                rows * dims,
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(Self {
            values,
            rows,
            dims,
            frame_shift_s,
            kind,
        })
    }

    pub fn from_rows(
        rows: Vec<Vec<f64>>,
        kind: FeatureKind,
        frame_shift_s: f64,
    ) -> Result<Self> {
        let n = rows.len();
        let dims = rows.first().map_or(0, |r| r.len());
        for (i, r) in rows.iter().enumerate() {
            if r.len() != dims {
                return Err(Error::DimMismatch(format!(
                    "row {i} has {} entries, expected {dims}",
                    r.len()
                )));
            }
        }
        Self::new(n, dims, rows.into_iter().flatten().collect(), kind, frame_shift_s)
    }

    pub fn n_frames(&self) -> usize {
        self.rows
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.dims..(i + 1) * self.dims]
    }

    pub fn rows_iter(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.dims.max(1))
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Extraction constants; defaults are the documented conventions above.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DspConfig {
    pub frame_len_s: f64,
    pub frame_shift_s: f64,
    pub preemphasis: f64,
    pub nfft: usize,
    pub n_mels: usize,
    pub fmin_hz: f64,
    pub fmax_hz: f64,
    pub mel_floor: f64,
    pub n_ceps: usize,
    pub delta_window: usize,
}

impl Default for DspConfig {
    fn default() -> Self {
        Self {
            frame_len_s: 0.025,
            frame_shift_s: 0.010,
            preemphasis: 0.97,
            nfft: 512,
            n_mels: 40,
            fmin_hz: 20.0,
            fmax_hz: 7600.0,
            mel_floor: 1e-10,
            n_ceps: 13,
            delta_window: 2,
        }
    }
}

/// `y[0] = x[0] − coeff·x[0]`, `y[t] = x[t] − coeff·x[t−1]` for t ≥ 1.
pub fn preemphasize(signal: &AudioSignal, coeff: f64) -> Result<AudioSignal> {
    if !(0.0..1.0).contains(&coeff) {
        return Err(Error::InvalidParam(format!(
            "pre-emphasis coefficient {coeff} outside [0, 1)"
        )));
    }
    let x = signal.samples();
    let mut y = Vec::with_capacity(x.len());
    if let Some(&first) = x.first() {
        y.push(first - coeff * first);
        for t in 1..x.len() {
            y.push(x[t] - coeff * x[t - 1]);
        }
    }
    AudioSignal::new(y, signal.sample_rate())
}

/// Hamming window `w[n] = 0.54 − 0.46·cos(2πn/(L−1))`.
pub fn hamming_window(len: usize) -> Vec<f64> {
    if len == 1 {
        return vec![1.0];
    }
    (0..len)
        .map(|n| 0.54 - 0.46 * (2.0 * std::f64::consts::PI * n as f64 / (len - 1) as f64).cos())
        .collect()
}

/// Number of frames for `n` samples with frame length `len` and shift
/// `shift` (all in samples): `1 + floor((n − len)/shift)`, or None if the
/// signal is shorter than one frame.
pub fn num_frames(n: usize, len: usize, shift: usize) -> Option<usize> {
    if n < len {
        None
    } else {
        Some(1 + (n - len) / shift)
    }
}

fn frame_params(signal: &AudioSignal, frame_len_s: f64, shift_s: f64) -> Result<(usize, usize)> {
    let sr = signal.sample_rate() as f64;
    let len = (frame_len_s * sr).round() as usize;
    let shift = (shift_s * sr).round() as usize;
    if len == 0 || shift == 0 {
        return Err(Error::InvalidParam(
            "frame length and shift must be positive".into(),
        ));
    }
    Ok((len, shift))
}

/// Cut the signal into raw (unwindowed) frames.
pub fn frame_signal_raw(
    signal: &AudioSignal,
    frame_len_s: f64,
    shift_s: f64,
) -> Result<Vec<Vec<f64>>> {
    let (len, shift) = frame_params(signal, frame_len_s, shift_s)?;
    let x = signal.samples();
    let n_frames = num_frames(x.len(), len, shift).ok_or(Error::TooShort {
        samples: x.len(),
        needed: len,
    })?;
    Ok((0..n_frames)
        .map(|t| x[t * shift..t * shift + len].to_vec())
        .collect())
}

/// Cut the signal into Hamming-windowed frames (25 ms / 10 ms by default).
pub fn frame_signal(
    signal: &AudioSignal,
    frame_len_s: f64,
    shift_s: f64,
) -> Result<Vec<Vec<f64>>> {
    let mut frames = frame_signal_raw(signal, frame_len_s, shift_s)?;
    let window = hamming_window(frames.first().map_or(0, |f| f.len()));
    for frame in &mut frames {
        for (v, w) in frame.iter_mut().zip(&window) {
            *v *= w;
        }
    }
    Ok(frames)
}

/// In-place iterative radix-2 complex FFT (decimation in time).
fn fft_radix2(re: &mut [f64], im: &mut [f64]) {
    let n = re.len();
    debug_assert!(n.is_power_of_two());
    // bit-reversal permutation
    let mut j = 0usize;
    for i in 1..n {
        let mut bit = n >> 1;
        while j & bit != 0 {
            j ^= bit;
            bit >>= 1;
        }
        j |= bit;
        if i < j {
            re.swap(i, j);
            im.swap(i, j);
        }
    }
    let mut len = 2;
    while len <= n {
        let ang = -2.0 * std::f64::consts::PI / len as f64;
        let (wr, wi) = (ang.cos(), ang.sin());
        let mut start = 0;
        while start < n {
            let (mut cr, mut ci) = (1.0f64, 0.0f64);
            for k in 0..len / 2 {
                let (ar, ai) = (re[start + k], im[start + k]);
                let (br, bi) = (re[start + k + len / 2], im[start + k + len / 2]);
                let (tr, ti) = (br * cr - bi * ci, br * ci + bi * cr);
                re[start + k] = ar + tr;
                im[start + k] = ai + ti;
                re[start + k + len / 2] = ar - tr;
                im[start + k + len / 2] = ai - ti;
                let next_cr = cr * wr - ci * wi;
                ci = cr * wi + ci * wr;
                cr = next_cr;
            }
            start += len;
        }
        len <<= 1;
    }
}

/// Squared-magnitude spectrum of a (windowed) frame, zero-padded to
/// `nfft`; bins 0..=nfft/2, no scaling.
pub fn power_spectrum(frame: &[f64], nfft: usize) -> Result<Vec<f64>> {
    if !nfft.is_power_of_two() || nfft == 0 {
        return Err(Error::InvalidParam(format!(
            "nfft {nfft} is not a power of two"
        )));
    }
    if nfft < frame.len() {
        return Err(Error::InvalidParam(format!(
            "nfft {nfft} smaller than frame length {}",
            frame.len()
        )));
    }
    let mut re = vec![0.0; nfft];
    let mut im = vec![0.0; nfft];
    re[..frame.len()].copy_from_slice(frame);
    fft_radix2(&mut re, &mut im);
    Ok((0..=nfft / 2).map(|k| re[k] * re[k] + im[k] * im[k]).collect())
}

/// Mel scale `m = 1127·ln(1 + f/700)`.
pub fn hz_to_mel(hz: f64) -> f64 {
    1127.0 * (1.0 + hz / 700.0).ln()
}

pub fn mel_to_hz(mel: f64) -> f64 {
    700.0 * ((mel / 1127.0).exp() - 1.0)
}

/// Triangular mel filter bank: `n_mels` rows of `nfft/2 + 1` nonnegative
/// weights. Centers are equally spaced on the mel scale between `fmin_hz`
/// and `fmax_hz`; triangles are linear in mel, not snapped to bins, so no
/// filter can come out empty at sane configurations (an all-zero filter is
/// rejected).
pub fn mel_filterbank_matrix(
    nfft: usize,
    n_mels: usize,
    sample_rate: u32,
    fmin_hz: f64,
    fmax_hz: f64,
) -> Result<Vec<Vec<f64>>> {
    let nyquist = sample_rate as f64 / 2.0;
    if !(fmin_hz >= 0.0 && fmin_hz < fmax_hz && fmax_hz <= nyquist) {
        return Err(Error::InvalidParam(format!(
            "invalid mel band edges: fmin {fmin_hz}, fmax {fmax_hz}, nyquist {nyquist}"
        )));
    }
    if n_mels == 0 {
        return Err(Error::InvalidParam("n_mels must be positive".into()));
    }
    let n_bins = nfft / 2 + 1;
    let mel_lo = hz_to_mel(fmin_hz);
    let mel_hi = hz_to_mel(fmax_hz);
    let points: Vec<f64> = (0..n_mels + 2)
        .map(|i| mel_lo + (mel_hi - mel_lo) * i as f64 / (n_mels + 1) as f64)
        .collect();
    let bin_mels: Vec<f64> = (0..n_bins)
        .map(|k| hz_to_mel(k as f64 * sample_rate as f64 / nfft as f64))
        .collect();
    let mut bank = Vec::with_capacity(n_mels);
    for m in 0..n_mels {
        let (left, center, right) = (points[m], points[m + 1], points[m + 2]);
        let mut filter = vec![0.0; n_bins];
        let mut any = false;
        for (k, &bm) in bin_mels.iter().enumerate() {
            let w = if bm >= left && bm <= center {
                (bm - left) / (center - left)
            } else if bm > center && bm <= right {
                (right - bm) / (right - center)
            } else {
                0.0
            };
            if w > 0.0 {
                filter[k] = w;
                any = true;
            }
        }
        if !any {
            return Err(Error::InvalidParam(format!(
                "mel filter {m} has no nonzero weight; increase nfft or reduce n_mels"
            )));
        }
        bank.push(filter);
    }
    Ok(bank)
}

/// Center frequency (Hz) of each filter in a bank built by
/// [`mel_filterbank_matrix`] with the same parameters.
pub fn mel_center_frequencies(n_mels: usize, fmin_hz: f64, fmax_hz: f64) -> Vec<f64> {
    let mel_lo = hz_to_mel(fmin_hz);
    let mel_hi = hz_to_mel(fmax_hz);
    (1..=n_mels)
        .map(|i| mel_to_hz(mel_lo + (mel_hi - mel_lo) * i as f64 / (n_mels + 1) as f64))
        .collect()
}

fn mel_energies(signal: &AudioSignal, cfg: &DspConfig) -> Result<Vec<Vec<f64>>> {
    let emphasized = preemphasize(signal, cfg.preemphasis)?;
    let frames = frame_signal(&emphasized, cfg.frame_len_s, cfg.frame_shift_s)?;
    let bank = mel_filterbank_matrix(
        cfg.nfft,
        cfg.n_mels,
        signal.sample_rate(),
        cfg.fmin_hz,
        cfg.fmax_hz,
    )?;
    frames
        .iter()
        .map(|frame| {
            let spectrum = power_spectrum(frame, cfg.nfft)?;
            Ok(bank
                .iter()
                .map(|filter| {
                    filter
                        .iter()
                        .zip(&spectrum)
                        .map(|(&w, &p)| w * p)
                        .sum::<f64>()
                })
                .collect())
        })
        .collect()
}

/// 40-bin log mel filter bank features: `ln(energy + floor)` per filter.
pub fn log_mel_fb_with(signal: &AudioSignal, cfg: &DspConfig) -> Result<FeatureMatrix> {
    let rows: Vec<Vec<f64>> = mel_energies(signal, cfg)?
        .into_iter()
        .map(|row| row.into_iter().map(|e| (e + cfg.mel_floor).ln()).collect())
        .collect();
    FeatureMatrix::from_rows(rows, FeatureKind::Fb40, cfg.frame_shift_s)
}

pub fn log_mel_fb(signal: &AudioSignal) -> Result<FeatureMatrix> {
    log_mel_fb_with(signal, &DspConfig::default())
}

/// Orthonormal DCT-II of `input`, keeping the first `n_out` coefficients:
/// `C_k = s_k · Σ_n x[n]·cos(π·k·(2n+1)/(2N))` with `s_0 = √(1/N)`,
/// `s_k = √(2/N)`.
pub fn dct_ii_orthonormal(input: &[f64], n_out: usize) -> Vec<f64> {
    let n = input.len();
    let mut out = Vec::with_capacity(n_out);
    for k in 0..n_out {
        let mut sum = 0.0;
        for (i, &x) in input.iter().enumerate() {
            sum += x
                * (std::f64::consts::PI * k as f64 * (2 * i + 1) as f64 / (2 * n) as f64).cos();
        }
        let scale = if k == 0 {
            (1.0 / n as f64).sqrt()
        } else {
            (2.0 / n as f64).sqrt()
        };
        out.push(scale * sum);
    }
    out
}

/// 13-dim MFCCs: orthonormal DCT-II of the 40 log-mel energies, c0..c12.
pub fn mfcc_with(signal: &AudioSignal, cfg: &DspConfig) -> Result<FeatureMatrix> {
    let rows: Vec<Vec<f64>> = mel_energies(signal, cfg)?
        .into_iter()
        .map(|row| {
            let log_row: Vec<f64> = row.into_iter().map(|e| (e + cfg.mel_floor).ln()).collect();
            dct_ii_orthonormal(&log_row, cfg.n_ceps)
        })
        .collect();
    FeatureMatrix::from_rows(rows, FeatureKind::Mfcc13, cfg.frame_shift_s)
}

pub fn mfcc(signal: &AudioSignal) -> Result<FeatureMatrix> {
    mfcc_with(signal, &DspConfig::default())
}

/// Append deltas and delta-deltas: output dims = 3 × input dims, first
/// block unchanged. `delta_t = Σ_{n=1..W} n·(c[t+n] − c[t−n]) / (2·Σ n²)`
/// with edge frames replicated; delta-deltas are deltas of the deltas.
pub fn add_deltas(features: &FeatureMatrix, window: usize) -> Result<FeatureMatrix> {
    if features.n_frames() == 0 {
        return Err(Error::TooShort {
            samples: 0,
            needed: 1,
        });
    }
    if window == 0 {
        return Err(Error::InvalidParam("delta window must be ≥ 1".into()));
    }
    let base: Vec<Vec<f64>> = features.rows_iter().map(|r| r.to_vec()).collect();
    let deltas = regression_deltas(&base, window);
    let ddeltas = regression_deltas(&deltas, window);
    let rows: Vec<Vec<f64>> = base
        .into_iter()
        .zip(deltas)
        .zip(ddeltas)
        .map(|((mut b, d), dd)| {
            b.extend(d);
            b.extend(dd);
            b
        })
        .collect();
    let kind = match features.kind {
        FeatureKind::Mfcc13 => FeatureKind::Mfcc39,
        other => other,
    };
    FeatureMatrix::from_rows(rows, kind, features.frame_shift_s)
}

fn regression_deltas(rows: &[Vec<f64>], window: usize) -> Vec<Vec<f64>> {
    let t_max = rows.len();
    let dims = rows.first().map_or(0, |r| r.len());
    let denom: f64 = 2.0 * (1..=window).map(|n| (n * n) as f64).sum::<f64>();
    (0..t_max)
        .map(|t| {
            let mut out = vec![0.0; dims];
            for n in 1..=window {
                let fwd = &rows[(t + n).min(t_max - 1)];
                let bwd = &rows[t.saturating_sub(n)];
                for d in 0..dims {
                    out[d] += n as f64 * (fwd[d] - bwd[d]);
                }
            }
            for v in &mut out {
                *v /= denom;
            }
            out
        })
        .collect()
}

/// Convenience: MFCC13 extended with deltas and delta-deltas (39 dims).
pub fn mfcc39(signal: &AudioSignal) -> Result<FeatureMatrix> {
    let cfg = DspConfig::default();
    add_deltas(&mfcc_with(signal, &cfg)?, cfg.delta_window)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Xoshiro256pp;

    fn signal(samples: Vec<f64>) -> AudioSignal {
        AudioSignal::new(samples, CANONICAL_SAMPLE_RATE).unwrap()
    }

    fn random_frame(rng: &mut Xoshiro256pp, n: usize) -> Vec<f64> {
        (0..n).map(|_| rng.range_f64(-1.0, 1.0)).collect()
    }

    /// O(N²) DFT, the independent oracle for the FFT path.
    fn naive_power_spectrum(frame: &[f64], nfft: usize) -> Vec<f64> {
        (0..=nfft / 2)
            .map(|k| {
                let (mut re, mut im) = (0.0f64, 0.0f64);
                for (n, &x) in frame.iter().enumerate() {
                    let ang = -2.0 * std::f64::consts::PI * k as f64 * n as f64 / nfft as f64;
                    re += x * ang.cos();
                    im += x * ang.sin();
                }
                re * re + im * im
            })
            .collect()
    }

    fn rel_close(a: f64, b: f64, tol: f64, floor: f64) -> bool {
        (a - b).abs() <= tol * a.abs().max(b.abs()).max(floor)
    }

    #[test]
    fn rejects_non_canonical_sample_rate() {
        match AudioSignal::new(vec![0.0; 100], 8000) {
            Err(Error::SampleRate { got: 8000, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn preemphasis_zero_coeff_is_identity() {
        let s = signal(vec![0.5, -0.25, 0.125, 1.0]);
        let y = preemphasize(&s, 0.0).unwrap();
        assert_eq!(y.samples(), s.samples());
    }

    #[test]
    fn preemphasis_constant_signal_closed_form() {
        let s = signal(vec![0.4; 50]);
        let y = preemphasize(&s, 0.97).unwrap();
        for (t, &v) in y.samples().iter().enumerate() {
            assert!((v - 0.03 * 0.4).abs() < 1e-12, "t={t} v={v}");
        }
    }

    #[test]
    fn preemphasis_matches_direct_loop() {
        let mut rng = Xoshiro256pp::seed_from_u64(1);
        let x = random_frame(&mut rng, 32);
        let y = preemphasize(&signal(x.clone()), 0.97).unwrap();
        let mut expected = vec![x[0] - 0.97 * x[0]];
        for t in 1..x.len() {
            expected.push(x[t] - 0.97 * x[t - 1]);
        }
        for (a, b) in y.samples().iter().zip(&expected) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn preemphasis_rejects_bad_coeff() {
        let s = signal(vec![0.0; 10]);
        assert!(preemphasize(&s, 1.0).is_err());
        assert!(preemphasize(&s, -0.1).is_err());
    }

    #[test]
    fn frame_counts_match_formula() {
        assert_eq!(
            frame_signal(&signal(vec![0.1; 400]), 0.025, 0.010)
                .unwrap()
                .len(),
            1
        );
        assert_eq!(
            frame_signal(&signal(vec![0.1; 560]), 0.025, 0.010)
                .unwrap()
                .len(),
            2
        );
        assert_eq!(
            frame_signal(&signal(vec![0.1; 16_000]), 0.025, 0.010)
                .unwrap()
                .len(),
            98
        );
    }

    #[test]
    fn short_signal_is_rejected() {
        match frame_signal(&signal(vec![0.0; 399]), 0.025, 0.010) {
            Err(Error::TooShort { samples: 399, needed: 400 }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn hamming_window_shape() {
        let w = hamming_window(400);
        assert!((w[0] - 0.08).abs() < 1e-12);
        assert!((w[399] - 0.08).abs() < 1e-12);
        assert!(w[199] > 0.99);
        let frames = frame_signal(&signal(vec![1.0; 400]), 0.025, 0.010).unwrap();
        for (a, b) in frames[0].iter().zip(&w) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn power_spectrum_of_zeros_is_zero() {
        let ps = power_spectrum(&[0.0; 400], 512).unwrap();
        assert_eq!(ps.len(), 257);
        assert!(ps.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn power_spectrum_of_unit_impulse_is_flat() {
        let mut frame = vec![0.0; 400];
        frame[0] = 1.0;
        let ps = power_spectrum(&frame, 512).unwrap();
        for &v in &ps {
            assert!((v - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn power_spectrum_matches_naive_dft() {
        let mut rng = Xoshiro256pp::seed_from_u64(2);
        for _ in 0..100 {
            let frame = random_frame(&mut rng, 400);
            let fast = power_spectrum(&frame, 512).unwrap();
            let slow = naive_power_spectrum(&frame, 512);
            for (k, (&a, &b)) in fast.iter().zip(&slow).enumerate() {
                assert!(rel_close(a, b, 1e-6, 1e-9), "bin {k}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn power_spectrum_rejects_small_or_odd_nfft() {
        assert!(power_spectrum(&[0.0; 400], 256).is_err());
        assert!(power_spectrum(&[0.0; 100], 384).is_err());
    }

    /// Parseval check, normalized per FFT length: the energy
    /// `(2·Σ bins − DC − Nyquist)/nfft` equals `Σ x²` and is therefore
    /// invariant under zero padding of the same windowed frame.
    #[test]
    fn parseval_energy_invariant_under_zero_padding() {
        let mut rng = Xoshiro256pp::seed_from_u64(3);
        let frame = random_frame(&mut rng, 400);
        let time_energy: f64 = frame.iter().map(|x| x * x).sum();
        let mut energies = Vec::new();
        for nfft in [512usize, 1024, 2048] {
            let ps = power_spectrum(&frame, nfft).unwrap();
            let sum: f64 = ps.iter().sum();
            let energy = (2.0 * sum - ps[0] - ps[nfft / 2]) / nfft as f64;
            assert!(rel_close(energy, time_energy, 1e-9, 1e-12));
            energies.push(energy);
        }
        for e in &energies[1..] {
            assert!(rel_close(*e, energies[0], 1e-9, 1e-12));
        }
    }

    #[test]
    fn single_mel_filter_spans_full_band() {
        let bank = mel_filterbank_matrix(512, 1, 16_000, 20.0, 7600.0).unwrap();
        assert_eq!(bank.len(), 1);
        let filter = &bank[0];
        let bin_hz = 16_000.0 / 512.0;
        for (k, &w) in filter.iter().enumerate() {
            let f = k as f64 * bin_hz;
            if f <= 20.0 || f >= 7600.0 {
                assert_eq!(w, 0.0, "bin {k} at {f} Hz outside the band");
            } else {
                assert!(w > 0.0, "bin {k} at {f} Hz not covered");
            }
        }
        // peak near the band's mel midpoint
        let center = mel_to_hz((hz_to_mel(20.0) + hz_to_mel(7600.0)) / 2.0);
        let peak_bin = filter
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap()
            .0;
        assert!((peak_bin as f64 * bin_hz - center).abs() < bin_hz);
    }

    #[test]
    fn mel_centers_strictly_increasing() {
        let centers = mel_center_frequencies(40, 20.0, 7600.0);
        for pair in centers.windows(2) {
            assert!(pair[1] > pair[0]);
        }
    }

    #[test]
    fn tone_energy_peaks_at_nearest_filter() {
        let sr = CANONICAL_SAMPLE_RATE;
        let tone: Vec<f64> = (0..400)
            .map(|n| (2.0 * std::f64::consts::PI * 1000.0 * n as f64 / sr as f64).sin())
            .collect();
        let window = hamming_window(400);
        let frame: Vec<f64> = tone.iter().zip(&window).map(|(x, w)| x * w).collect();
        let spectrum = power_spectrum(&frame, 512).unwrap();
        let bank = mel_filterbank_matrix(512, 40, sr, 20.0, 7600.0).unwrap();
        let outputs: Vec<f64> = bank
            .iter()
            .map(|f| f.iter().zip(&spectrum).map(|(&w, &p)| w * p).sum())
            .collect();
        let best = outputs
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap()
            .0;
        let centers = mel_center_frequencies(40, 20.0, 7600.0);
        let nearest = centers
            .iter()
            .enumerate()
            .min_by(|a, b| {
                (a.1 - 1000.0)
                    .abs()
                    .partial_cmp(&(b.1 - 1000.0).abs())
                    .unwrap()
            })
            .unwrap()
            .0;
        assert_eq!(best, nearest);
    }

    #[test]
    fn interior_bins_are_covered_by_some_filter() {
        let bank = mel_filterbank_matrix(512, 40, 16_000, 20.0, 7600.0).unwrap();
        let bin_hz = 16_000.0 / 512.0;
        for k in 0..257 {
            let f = k as f64 * bin_hz;
            if f > 20.0 && f < 7600.0 {
                let covered = bank.iter().any(|filter| filter[k] > 0.0);
                assert!(covered, "bin {k} at {f} Hz uncovered");
            }
        }
    }

    #[test]
    fn invalid_band_edges_rejected() {
        assert!(mel_filterbank_matrix(512, 40, 16_000, 4000.0, 3000.0).is_err());
        assert!(mel_filterbank_matrix(512, 40, 16_000, 20.0, 9000.0).is_err());
    }

    #[test]
    fn silence_hits_the_mel_floor() {
        let fb = log_mel_fb(&signal(vec![0.0; 16_000])).unwrap();
        assert_eq!(fb.n_frames(), 98);
        assert_eq!(fb.dims(), 40);
        let floor = (1e-10f64).ln();
        for row in fb.rows_iter() {
            for &v in row {
                assert!((v - floor).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn white_noise_filter_outputs_vary() {
        for seed in 0..10 {
            let mut rng = Xoshiro256pp::seed_from_u64(100 + seed);
            let noise = random_frame(&mut rng, 16_000);
            let fb = log_mel_fb(&signal(noise)).unwrap();
            for d in 0..fb.dims() {
                let col: Vec<f64> = fb.rows_iter().map(|r| r[d]).collect();
                let mean = col.iter().sum::<f64>() / col.len() as f64;
                let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / col.len() as f64;
                assert!(var > 0.0, "seed {seed} filter {d} constant");
            }
        }
    }

    /// Direct-sum DCT-II oracle with the same orthonormal scaling.
    fn naive_dct(input: &[f64], n_out: usize) -> Vec<f64> {
        let n = input.len() as f64;
        (0..n_out)
            .map(|k| {
                let sum: f64 = input
                    .iter()
                    .enumerate()
                    .map(|(i, &x)| {
                        x * (std::f64::consts::PI / n * (i as f64 + 0.5) * k as f64).cos()
                    })
                    .sum();
                let scale = if k == 0 {
                    (1.0 / n).sqrt()
                } else {
                    (2.0 / n).sqrt()
                };
                scale * sum
            })
            .collect()
    }

    #[test]
    fn dct_of_constant_row() {
        let row = vec![3.0; 40];
        let c = dct_ii_orthonormal(&row, 13);
        assert!((c[0] - 3.0 * 40f64.sqrt()).abs() < 1e-12);
        for &v in &c[1..] {
            assert!(v.abs() < 1e-12);
        }
    }

    #[test]
    fn dct_matches_direct_sum_oracle() {
        let mut rng = Xoshiro256pp::seed_from_u64(4);
        for _ in 0..50 {
            let row = random_frame(&mut rng, 40);
            let fast = dct_ii_orthonormal(&row, 13);
            let slow = naive_dct(&row, 13);
            for (a, b) in fast.iter().zip(&slow) {
                assert!((a - b).abs() <= 1e-8 * a.abs().max(b.abs()).max(1.0));
            }
        }
    }

    #[test]
    fn mfcc_shapes() {
        let mut rng = Xoshiro256pp::seed_from_u64(5);
        let s = signal(random_frame(&mut rng, 16_000));
        let m = mfcc(&s).unwrap();
        assert_eq!(m.n_frames(), 98);
        assert_eq!(m.dims(), 13);
        assert_eq!(m.kind, FeatureKind::Mfcc13);
    }

    #[test]
    fn deltas_of_constant_features_are_zero() {
        let rows = vec![vec![1.0, -2.0, 3.0]; 10];
        let m = FeatureMatrix::from_rows(rows, FeatureKind::Mfcc13, 0.01).unwrap();
        let d = add_deltas(&m, 2).unwrap();
        assert_eq!(d.dims(), 9);
        for row in d.rows_iter() {
            for &v in &row[3..] {
                assert!(v.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn deltas_of_linear_ramp_are_one_inside() {
        // c_t = t, window 2: (1·2 + 2·4)/10 = 1 at interior frames
        let rows: Vec<Vec<f64>> = (0..20).map(|t| vec![t as f64]).collect();
        let m = FeatureMatrix::from_rows(rows, FeatureKind::Fb40, 0.01).unwrap();
        let d = add_deltas(&m, 2).unwrap();
        for t in 2..18 {
            assert!((d.row(t)[1] - 1.0).abs() < 1e-12, "t={t}");
        }
    }

    #[test]
    fn deltas_keep_original_columns() {
        let mut rng = Xoshiro256pp::seed_from_u64(6);
        let s = signal(random_frame(&mut rng, 16_000));
        let base = mfcc(&s).unwrap();
        let full = mfcc39(&s).unwrap();
        assert_eq!(full.dims(), 39);
        assert_eq!(full.kind, FeatureKind::Mfcc39);
        for (b, f) in base.rows_iter().zip(full.rows_iter()) {
            assert_eq!(b, &f[..13]);
        }
    }

    #[test]
    fn deltas_are_linear() {
        let mut rng = Xoshiro256pp::seed_from_u64(7);
        let make = |rng: &mut Xoshiro256pp| {
            let rows: Vec<Vec<f64>> = (0..15)
                .map(|_| (0..5).map(|_| rng.range_f64(-2.0, 2.0)).collect())
                .collect();
            FeatureMatrix::from_rows(rows, FeatureKind::Fb40, 0.01).unwrap()
        };
        let x = make(&mut rng);
        let y = make(&mut rng);
        let (a, b) = (0.7, -1.3);
        let combo_rows: Vec<Vec<f64>> = x
            .rows_iter()
            .zip(y.rows_iter())
            .map(|(rx, ry)| rx.iter().zip(ry).map(|(vx, vy)| a * vx + b * vy).collect())
            .collect();
        let combo = FeatureMatrix::from_rows(combo_rows, FeatureKind::Fb40, 0.01).unwrap();
        let dx = add_deltas(&x, 2).unwrap();
        let dy = add_deltas(&y, 2).unwrap();
        let dc = add_deltas(&combo, 2).unwrap();
        for t in 0..15 {
            for d in 0..15 {
                let expected = a * dx.row(t)[d] + b * dy.row(t)[d];
                assert!((dc.row(t)[d] - expected).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn extraction_is_deterministic() {
        let mut rng = Xoshiro256pp::seed_from_u64(8);
        let samples = random_frame(&mut rng, 16_000);
        let a = log_mel_fb(&signal(samples.clone())).unwrap();
        let b = log_mel_fb(&signal(samples)).unwrap();
        assert_eq!(a.values(), b.values());
    }
}
