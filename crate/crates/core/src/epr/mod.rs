//! Derivative EPR spectra: segmentation into peaks, derivative-Tsallian
//! fits, double integration and height-weighted linewidths.

use serde::{Deserialize, Serialize};

use crate::fitting::{nlls_fit, Bound, FitResult, Residuals};
use crate::relaxmodel::TsallianComponent;
use crate::{Error, Result};

pub const Q_MIN: f64 = 1.0001;
pub const Q_MAX: f64 = 2.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EprSpectrum {
    /// G, strictly increasing
    pub field_g: Vec<f64>,
    pub signal: Vec<f64>,
    #[serde(default)]
    pub modulation_amplitude_g: Option<f64>,
    #[serde(default)]
    pub sweeps: Option<u32>,
}

impl EprSpectrum {
    pub fn new(field_g: Vec<f64>, signal: Vec<f64>) -> Result<Self> {
        let s = Self {
            field_g,
            signal,
            modulation_amplitude_g: None,
            sweeps: None,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.field_g.len() != self.signal.len() {
            return Err(Error::validation(format!(
                "spectrum axis has {} points but signal has {}",
                self.field_g.len(),
                self.signal.len()
            )));
        }
        if self.field_g.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::validation("spectrum field axis must be strictly increasing"));
        }
        if self.signal.iter().chain(&self.field_g).any(|v| !v.is_finite()) {
            return Err(Error::validation("spectrum contains non-finite values"));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.field_g.len()
    }

    pub fn is_empty(&self) -> bool {
        self.field_g.is_empty()
    }
}

/// Inclusive index range `start..=end`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PeakRange {
    pub start: usize,
    pub end: usize,
}

impl PeakRange {
    pub fn len(&self) -> usize {
        self.end + 1 - self.start
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SegmentOptions {
    /// Lobes must exceed this many robust noise sd.
    pub threshold_factor: f64,
    /// Fraction of points at each end used for the noise estimate.
    pub edge_fraction: f64,
    /// Minimum consecutive points above threshold for a lobe.
    pub min_run: usize,
}

impl Default for SegmentOptions {
    fn default() -> Self {
        Self {
            threshold_factor: 3.0,
            edge_fraction: 0.05,
            min_run: 3,
        }
    }
}

pub fn median(v: &[f64]) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

/// (median, 1.4826 MAD) of the first and last `edge_fraction` of points.
pub fn edge_noise(signal: &[f64], edge_fraction: f64) -> (f64, f64) {
    let n = signal.len();
    let k = ((n as f64 * edge_fraction).ceil() as usize).clamp(2, n / 2);
    let edges: Vec<f64> = signal[..k].iter().chain(&signal[n - k..]).copied().collect();
    let m = median(&edges);
    let dev: Vec<f64> = edges.iter().map(|v| (v - m).abs()).collect();
    (m, 1.4826 * median(&dev))
}

/// Peak ranges from alternating extremum pairs, split at midpoints between
/// neighbouring pairs; the outer ranges run to the ends of the spectrum.
pub fn segment_peaks(spec: &EprSpectrum) -> Result<Vec<PeakRange>> {
    segment_peaks_with(spec, &SegmentOptions::default())
}

pub fn segment_peaks_with(spec: &EprSpectrum, opt: &SegmentOptions) -> Result<Vec<PeakRange>> {
    spec.validate()?;
    let n = spec.len();
    if n < 5 {
        return Err(Error::validation(format!("segmentation needs >= 5 points, got {n}")));
    }
    let y = &spec.signal;
    let (base, sd) = edge_noise(y, opt.edge_fraction);
    let amp = y.iter().map(|v| (v - base).abs()).fold(0.0, f64::max);
    let thr = (opt.threshold_factor * sd).max(1e-9 * amp);
    if amp <= thr {
        return Ok(vec![]);
    }
    // lobes: runs on one side of the threshold, represented by their extremum
    let mut lobes: Vec<(usize, f64)> = Vec::new();
    let mut i = 0;
    while i < n {
        let d = y[i] - base;
        if d.abs() <= thr {
            i += 1;
            continue;
        }
        let sign = d.signum();
        let start = i;
        let mut best = i;
        while i < n && (y[i] - base) * sign > thr {
            if (y[i] - base).abs() > (y[best] - base).abs() {
                best = i;
            }
            i += 1;
        }
        if i - start >= opt.min_run {
            let v = y[best] - base;
            match lobes.last_mut() {
                Some(last) if last.1.signum() == sign => {
                    if v.abs() > last.1.abs() {
                        *last = (best, v);
                    }
                }
                _ => lobes.push((best, v)),
            }
        }
    }
    let pairs: Vec<(usize, usize)> = lobes.chunks_exact(2).map(|c| (c[0].0, c[1].0)).collect();
    let mut out = Vec::with_capacity(pairs.len());
    for (k, &(_, b)) in pairs.iter().enumerate() {
        let start = if k == 0 { 0 } else { out.last().map(|r: &PeakRange| r.end + 1).unwrap() };
        let end = match pairs.get(k + 1) {
            Some(&(next, _)) => (b + next) / 2,
            None => n - 1,
        };
        out.push(PeakRange { start, end });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeakFit {
    pub range: PeakRange,
    /// G
    pub center: f64,
    /// G; None when the fit did not converge.
    pub fwhm: Option<f64>,
    pub q: f64,
    /// Absorption amplitude, a.u.
    pub height: f64,
    pub baseline_offset: f64,
    pub converged: bool,
    pub fit: Option<FitResult>,
}

/// Derivative of a Tsallian absorption line centered at `center`.
pub fn tsallian_derivative(b: f64, amplitude: f64, center: f64, hwhm: f64, q: f64) -> f64 {
    TsallianComponent::new(amplitude, hwhm, q).eval_unchecked(b - center, 1)
}

struct DerivProblem<'a> {
    x: &'a [f64],
    y: Vec<f64>,
}

impl Residuals for DerivProblem<'_> {
    fn n_residuals(&self) -> usize {
        self.x.len()
    }
    fn n_params(&self) -> usize {
        4
    }
    fn residuals(&self, p: &[f64], out: &mut [f64]) {
        for ((o, &b), &y) in out.iter_mut().zip(self.x).zip(&self.y) {
            *o = tsallian_derivative(b, p[0], p[1], p[2], p[3]) - y;
        }
    }
}

pub fn fit_peak(spec: &EprSpectrum, range: PeakRange) -> Result<PeakFit> {
    fit_peak_with_baseline(spec, range, None)
}

/// As `fit_peak`, with an explicit baseline replacing the range median.
pub fn fit_peak_with_baseline(spec: &EprSpectrum, range: PeakRange, baseline: Option<f64>) -> Result<PeakFit> {
    spec.validate()?;
    if range.start > range.end || range.end >= spec.len() {
        return Err(Error::domain(format!("range {range:?} outside spectrum of {} points", spec.len())));
    }
    if range.len() < 7 {
        return Err(Error::domain(format!("peak fit needs >= 7 points, range has {}", range.len())));
    }
    let x = &spec.field_g[range.start..=range.end];
    let raw = &spec.signal[range.start..=range.end];
    let off = baseline.unwrap_or_else(|| median(raw));
    let y: Vec<f64> = raw.iter().map(|v| v - off).collect();
    let (imax, imin) = (0..y.len()).fold((0, 0), |(a, b), i| {
        (if y[i] > y[a] { i } else { a }, if y[i] < y[b] { i } else { b })
    });
    let pp = y[imax] - y[imin];
    let scale = y.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let failed = |center: f64| PeakFit {
        range,
        center,
        fwhm: None,
        q: f64::NAN,
        height: 0.0,
        baseline_offset: off,
        converged: false,
        fit: None,
    };
    if !(pp > 0.0) || imax == imin {
        return Ok(failed(0.5 * (x[0] + x[x.len() - 1])));
    }
    let (lo, hi) = if imax < imin { (imax, imin) } else { (imin, imax) };
    let center = 0.5 * (x[lo] + x[hi]);
    let half_pp = 0.5 * (x[hi] - x[lo]);
    let span = x[x.len() - 1] - x[0];
    let step = span / (x.len() - 1) as f64;
    let hwhm = half_pp.max(step);
    let q0 = 1.5;
    let unit = tsallian_derivative(x[lo], 1.0, center, hwhm, q0);
    let a0 = if unit != 0.0 { y[lo] / unit } else { scale };
    let problem = DerivProblem { x, y };
    let bounds = [
        Bound::FREE,
        Bound::new(x[0], x[x.len() - 1]),
        Bound::new(0.1 * step, span),
        Bound::new(Q_MIN, Q_MAX),
    ];
    let fit = nlls_fit(&problem, &[a0, center, hwhm, q0], &bounds, &["amplitude", "center", "hwhm", "q"])?;
    let v = fit.values();
    Ok(PeakFit {
        range,
        center: v[1],
        fwhm: fit.converged.then_some(2.0 * v[2]),
        q: v[3],
        height: v[0].abs(),
        baseline_offset: off,
        converged: fit.converged,
        fit: Some(fit),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DoubleIntegral {
    /// Per-range cumulative first integral, zero outside the ranges.
    pub first_integral: Vec<f64>,
    /// Cumulative second integral, flat between ranges.
    pub second_integral: Vec<f64>,
    /// Plateau increment over each range.
    pub step_heights: Vec<f64>,
}

/// Trapezoidal double integration over non-overlapping ranges.
pub fn double_integrate(spec: &EprSpectrum, ranges: &[PeakRange]) -> Result<DoubleIntegral> {
    spec.validate()?;
    let n = spec.len();
    let mut sorted = ranges.to_vec();
    sorted.sort_by_key(|r| r.start);
    for r in &sorted {
        if r.start > r.end || r.end >= n {
            return Err(Error::domain(format!("range {r:?} outside spectrum of {n} points")));
        }
    }
    if sorted.windows(2).any(|w| w[1].start <= w[0].end) {
        return Err(Error::domain("integration ranges overlap"));
    }
    let (x, y) = (&spec.field_g, &spec.signal);
    let mut first = vec![0.0; n];
    let mut second = vec![0.0; n];
    let mut steps = Vec::with_capacity(ranges.len());
    let mut level = 0.0;
    let mut cursor = 0;
    for r in &sorted {
        second[cursor..r.start].fill(level);
        second[r.start] = level;
        let before = level;
        for i in r.start + 1..=r.end {
            let h = x[i] - x[i - 1];
            first[i] = first[i - 1] + 0.5 * h * (y[i] + y[i - 1]);
            level += 0.5 * h * (first[i] + first[i - 1]);
            second[i] = level;
        }
        steps.push(level - before);
        cursor = r.end + 1;
    }
    second[cursor..].fill(level);
    // report steps in caller order
    let step_heights = ranges
        .iter()
        .map(|r| steps[sorted.iter().position(|s| s == r).unwrap()])
        .collect();
    Ok(DoubleIntegral {
        first_integral: first,
        second_integral: second,
        step_heights,
    })
}

/// Sum(fwhm h) / Sum(h) over converged peaks.
pub fn weighted_linewidth(peaks: &[PeakFit]) -> Result<f64> {
    let (mut num, mut den) = (0.0, 0.0);
    for p in peaks {
        if let (true, Some(w)) = (p.converged, p.fwhm) {
            num += w * p.height;
            den += p.height;
        }
    }
    if den > 0.0 {
        Ok(num / den)
    } else {
        Err(Error::domain("no converged peak to weight"))
    }
}

/// One line of a synthetic derivative spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticLine {
    pub center_g: f64,
    pub fwhm_g: f64,
    pub height: f64,
    pub q: f64,
}

/// Sum of derivative-Tsallian lines plus Gaussian noise of sd `noise_sd`.
pub fn synthetic_spectrum(field_g: Vec<f64>, lines: &[SyntheticLine], noise_sd: f64, seed: u64) -> Result<EprSpectrum> {
    use rand_distr::{Distribution, Normal};
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let mut rng = crate::rng::stream_rng(seed, 0);
    let signal = field_g
        .iter()
        .map(|&b| {
            lines
                .iter()
                .map(|l| tsallian_derivative(b, l.height, l.center_g, 0.5 * l.fwhm_g, l.q))
                .sum::<f64>()
                + noise_sd * normal.sample(&mut rng)
        })
        .collect();
    EprSpectrum::new(field_g, signal)
}

/// Segments, fits every peak and integrates one spectrum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumAnalysis {
    pub ranges: Vec<PeakRange>,
    pub peaks: Vec<PeakFit>,
    pub integral: DoubleIntegral,
    pub weighted_fwhm_g: Option<f64>,
}

pub fn analyze_spectrum(spec: &EprSpectrum, baselines: &[Option<f64>]) -> Result<SpectrumAnalysis> {
    let ranges = segment_peaks(spec)?;
    let peaks = ranges
        .iter()
        .enumerate()
        .map(|(i, r)| fit_peak_with_baseline(spec, *r, baselines.get(i).copied().flatten()))
        .collect::<Result<Vec<_>>>()?;
    let corrected = EprSpectrum {
        signal: {
            let mut s = spec.signal.clone();
            for p in &peaks {
                for v in &mut s[p.range.start..=p.range.end] {
                    *v -= p.baseline_offset;
                }
            }
            s
        },
        ..spec.clone()
    };
    let integral = double_integrate(&corrected, &ranges)?;
    Ok(SpectrumAnalysis {
        weighted_fwhm_g: weighted_linewidth(&peaks).ok(),
        ranges,
        peaks,
        integral,
    })
}
