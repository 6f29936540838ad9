//! Cross-ambiguity acquisition: the classic energy-normalized CAF and the
//! interference-nulling variant that projects out the dominant spatial
//! interference subspace at every grid cell.
//!
//! Reference (direct) evaluations operate on an explicit `B x L_c` window
//! and are used for the per-candidate projections and in tests. Whole-grid
//! evaluation goes through [`AcquisitionEngine`], which shares sliding-window
//! Grams and FFT correlations across cells.

use std::f64::consts::TAU;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::constants::{CODE_SAMPLES, DOPPLER_STEP, MAX_DOPPLER, SAMPLE_PERIOD};
use crate::doa::DoaEstimate;
use crate::linalg::{complement_projector, hermitian_eig, rank_one_downdate_top, SecularWorkspace};
use crate::synth::{ReceiveStream, SpreadingCode};
use crate::{Error, Result};

/// Start of the acquisition window, in samples (five code periods in).
pub const ACQUISITION_OFFSET: usize = 5 * CODE_SAMPLES;

/// Default baseline threshold `tau`.
pub const DEFAULT_TAU: f64 = 11.2;
/// Default peak-set threshold `tau_J`.
pub const DEFAULT_TAU_J: f64 = 7.5;
/// Default nulled dimension.
pub const DEFAULT_NULLED: usize = 4;

/// Peaks closer than this (samples, circular) to a stronger peak are dropped.
pub const SUPPRESS_SAMPLES: usize = 4;
/// Peaks within this many Doppler bins of a stronger peak are dropped.
pub const SUPPRESS_BINS: usize = 1;

const FFT_LEN: usize = 8192;
const GRAM_REFRESH: usize = 256;

/// `F = {-4000, -3750, ..., 4000}` Hz.
pub fn doppler_grid() -> Vec<f64> {
    let n = (2.0 * MAX_DOPPLER / DOPPLER_STEP).round() as usize + 1;
    (0..n).map(|i| -MAX_DOPPLER + DOPPLER_STEP * i as f64).collect()
}

/// CAF values over code phase x Doppler.
#[derive(Debug, Clone, PartialEq)]
pub struct CafGrid {
    /// Doppler-major: `values[fi * L_c + l]`.
    values: Vec<f64>,
    dopplers: Vec<f64>,
}

impl CafGrid {
    pub fn dopplers(&self) -> &[f64] {
        &self.dopplers
    }

    pub fn code_phases(&self) -> usize {
        CODE_SAMPLES
    }

    #[inline]
    pub fn get(&self, code_phase: usize, doppler_index: usize) -> f64 {
        self.values[doppler_index * CODE_SAMPLES + code_phase]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Largest cell as `(code phase, Doppler index, value)`; ties resolve to
    /// the smallest code phase, then the smallest Doppler.
    pub fn argmax(&self) -> (usize, usize, f64) {
        let mut best = (0, 0, f64::NEG_INFINITY);
        for l in 0..CODE_SAMPLES {
            for fi in 0..self.dopplers.len() {
                let v = self.get(l, fi);
                if v > best.2 {
                    best = (l, fi, v);
                }
            }
        }
        best
    }

    /// Writes `code_phase,doppler_hz,value` rows.
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "code_phase,doppler_hz,value")?;
        for l in 0..CODE_SAMPLES {
            for (fi, f) in self.dopplers.iter().enumerate() {
                writeln!(w, "{l},{f},{}", self.get(l, fi))?;
            }
        }
        Ok(())
    }
}

/// Spatial projector `P = I - U Uᴴ` onto the complement of the `nulled`
/// strongest interference eigenvectors.
#[derive(Debug, Clone, PartialEq)]
pub struct NullingProjection {
    pub matrix: DMatrix<Complex64>,
    pub nulled: usize,
}

impl NullingProjection {
    pub fn identity(antennas: usize) -> Self {
        Self { matrix: DMatrix::identity(antennas, antennas), nulled: 0 }
    }

    pub fn apply(&self, v: &DVector<Complex64>) -> DVector<Complex64> {
        &self.matrix * v
    }
}

/// One acquired signal hypothesis.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalCandidate {
    pub prn: u8,
    /// Code phase `l` in `0..L_c`.
    pub code_phase: usize,
    pub doppler: f64,
    pub caf: f64,
    pub projection: NullingProjection,
    /// Filled by ranging.
    pub pseudorange: Option<f64>,
    /// Filled by DoA estimation.
    pub doa: Option<DoaEstimate>,
}

/// `B x L_c` window starting at absolute sample `start`.
pub fn window(stream: &ReceiveStream, start: usize) -> Result<DMatrix<Complex64>> {
    let end = start + CODE_SAMPLES;
    if end > stream.len() {
        return Err(Error::WindowOutOfBounds { start, end, len: stream.len() });
    }
    let b = stream.antennas();
    Ok(DMatrix::from_fn(b, CODE_SAMPLES, |r, k| stream.row(r)[start + k]))
}

/// `exp(-i 2 pi f k T)` for `k` in `0..L_c` (the diagonal of `Delta(f)`).
pub fn doppler_wipeoff(doppler: f64) -> Vec<Complex64> {
    let cps = doppler * SAMPLE_PERIOD;
    (0..CODE_SAMPLES).map(|k| Complex64::from_polar(1.0, -TAU * (cps * k as f64).fract())).collect()
}

/// Matched-filter vector `m = Y Delta(f) c`.
pub fn matched_vector(y: &DMatrix<Complex64>, code: &SpreadingCode, doppler: f64) -> DVector<Complex64> {
    let wipe = doppler_wipeoff(doppler);
    let c = code.samples();
    DVector::from_fn(y.nrows(), |b, _| {
        let mut acc = Complex64::new(0.0, 0.0);
        for k in 0..CODE_SAMPLES {
            acc += y[(b, k)] * wipe[k] * c[k] as f64;
        }
        acc
    })
}

/// Applies the code projection `T_s x = x - c (cᵀ x) / L_c` to a row vector.
pub fn apply_code_projection(code: &SpreadingCode, x: &[Complex64]) -> Vec<Complex64> {
    let c = code.samples();
    let dot: Complex64 = x.iter().zip(c).map(|(v, &ck)| v * ck as f64).sum();
    let s = dot / CODE_SAMPLES as f64;
    x.iter().zip(c).map(|(v, &ck)| v - s * ck as f64).collect()
}

/// `Y~ = Y Delta(f) T_s`, built explicitly.
pub fn code_projected_window(y: &DMatrix<Complex64>, code: &SpreadingCode, doppler: f64) -> DMatrix<Complex64> {
    let wipe = doppler_wipeoff(doppler);
    let mut out = DMatrix::zeros(y.nrows(), CODE_SAMPLES);
    for b in 0..y.nrows() {
        let row: Vec<Complex64> = (0..CODE_SAMPLES).map(|k| y[(b, k)] * wipe[k]).collect();
        let proj = apply_code_projection(code, &row);
        for k in 0..CODE_SAMPLES {
            out[(b, k)] = proj[k];
        }
    }
    out
}

/// Baseline CAF `||Y Delta c||^2 / ||Y||_F^2` at absolute window `start`.
pub fn caf_baseline(stream: &ReceiveStream, code: &SpreadingCode, start: usize, doppler: f64) -> Result<f64> {
    let y = window(stream, start)?;
    let den = y.norm_squared();
    if den <= 0.0 {
        return Ok(0.0);
    }
    Ok(matched_vector(&y, code, doppler).norm_squared() / den)
}

fn check_nulled(nulled: usize, antennas: usize) -> Result<()> {
    if nulled >= antennas {
        return Err(Error::NullingDimension { nulled, antennas });
    }
    Ok(())
}

/// Interference projector from the EVD of `Y~ Y~ᴴ` (direct computation).
pub fn interference_projection(
    stream: &ReceiveStream,
    code: &SpreadingCode,
    start: usize,
    doppler: f64,
    nulled: usize,
) -> Result<NullingProjection> {
    check_nulled(nulled, stream.antennas())?;
    let y = window(stream, start)?;
    let yt = code_projected_window(&y, code, doppler);
    let eig = hermitian_eig(&(&yt * yt.adjoint()));
    Ok(NullingProjection { matrix: complement_projector(&eig.vectors, nulled), nulled })
}

/// Nulling CAF `||P Y Delta c||^2 / ||P Y||_F^2` (direct computation).
pub fn caf_jass(
    stream: &ReceiveStream,
    code: &SpreadingCode,
    start: usize,
    doppler: f64,
    nulled: usize,
) -> Result<f64> {
    let p = interference_projection(stream, code, start, doppler, nulled)?;
    let y = window(stream, start)?;
    let m = matched_vector(&y, code, doppler);
    let num = (&p.matrix * m).norm_squared();
    let den = (&p.matrix * y).norm_squared();
    if den <= 0.0 {
        return Ok(0.0);
    }
    Ok((num / den).clamp(0.0, CODE_SAMPLES as f64))
}

/// Shared precomputation for evaluating whole CAF grids on one stream.
pub struct AcquisitionEngine<'a> {
    stream: &'a ReceiveStream,
    antennas: usize,
    dopplers: Vec<f64>,
    /// Per Doppler, per antenna: FFT of the Doppler-wiped `2 L_c - 1` samples.
    spectra: Vec<Vec<Vec<Complex64>>>,
    /// `tr G(l)`.
    traces: Vec<f64>,
    /// Lazily filled per-`l` eigenvalues (descending) and `Vᴴ`, row-major.
    eig: Option<(Vec<f64>, Vec<Complex64>)>,
    ifft: Arc<dyn Fft<f64>>,
    fft: Arc<dyn Fft<f64>>,
}

impl<'a> AcquisitionEngine<'a> {
    pub fn new(stream: &'a ReceiveStream) -> Result<Self> {
        let start = ACQUISITION_OFFSET;
        let end = start + 2 * CODE_SAMPLES;
        if end > stream.len() {
            return Err(Error::WindowOutOfBounds { start, end, len: stream.len() });
        }
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(FFT_LEN);
        let ifft = planner.plan_fft_inverse(FFT_LEN);
        let dopplers = doppler_grid();
        let antennas = stream.antennas();
        let span = 2 * CODE_SAMPLES - 1;
        let mut spectra = Vec::with_capacity(dopplers.len());
        for &f in &dopplers {
            let cps = f * SAMPLE_PERIOD;
            let wipe: Vec<Complex64> =
                (0..span).map(|n| Complex64::from_polar(1.0, -TAU * (cps * n as f64).fract())).collect();
            let per_antenna = (0..antennas)
                .map(|b| {
                    let row = &stream.row(b)[start..start + span];
                    let mut buf = vec![Complex64::new(0.0, 0.0); FFT_LEN];
                    for n in 0..span {
                        buf[n] = row[n] * wipe[n];
                    }
                    fft.process(&mut buf);
                    buf
                })
                .collect();
            spectra.push(per_antenna);
        }
        let traces = (0..CODE_SAMPLES)
            .scan(None::<f64>, |acc, l| {
                let v = match *acc {
                    Some(prev) if l % GRAM_REFRESH != 0 => {
                        let mut t = prev;
                        for b in 0..antennas {
                            let row = stream.row(b);
                            t += row[start + l - 1 + CODE_SAMPLES].norm_sqr() - row[start + l - 1].norm_sqr();
                        }
                        t
                    }
                    _ => (0..antennas)
                        .map(|b| stream.row(b)[start + l..start + l + CODE_SAMPLES].iter().map(|x| x.norm_sqr()).sum::<f64>())
                        .sum(),
                };
                *acc = Some(v);
                Some(v)
            })
            .collect();
        Ok(Self { stream, antennas, dopplers, spectra, traces, eig: None, ifft, fft })
    }

    pub fn dopplers(&self) -> &[f64] {
        &self.dopplers
    }

    pub fn stream(&self) -> &ReceiveStream {
        self.stream
    }

    /// Sliding Grams `G(l) = Y[s0+l] Y[s0+l]ᴴ`, eigen-decomposed.
    fn ensure_eig(&mut self) {
        if self.eig.is_some() {
            return;
        }
        let b = self.antennas;
        let start = ACQUISITION_OFFSET;
        let mut values = Vec::with_capacity(CODE_SAMPLES * b);
        let mut vh = Vec::with_capacity(CODE_SAMPLES * b * b);
        let mut g = DMatrix::<Complex64>::zeros(b, b);
        let col = |k: usize| -> DVector<Complex64> { self.stream.samples.column(k) };
        for l in 0..CODE_SAMPLES {
            if l % GRAM_REFRESH == 0 {
                g.fill(Complex64::new(0.0, 0.0));
                for k in start + l..start + l + CODE_SAMPLES {
                    let v = col(k);
                    g.ger(Complex64::new(1.0, 0.0), &v, &v.conjugate(), Complex64::new(1.0, 0.0));
                }
            } else {
                let old = col(start + l - 1);
                let new = col(start + l - 1 + CODE_SAMPLES);
                g.ger(Complex64::new(-1.0, 0.0), &old, &old.conjugate(), Complex64::new(1.0, 0.0));
                g.ger(Complex64::new(1.0, 0.0), &new, &new.conjugate(), Complex64::new(1.0, 0.0));
            }
            let e = hermitian_eig(&g);
            values.extend_from_slice(&e.values);
            for i in 0..b {
                for j in 0..b {
                    vh.push(e.vectors[(j, i)].conj());
                }
            }
        }
        self.eig = Some((values, vh));
    }

    /// Conjugate code spectrum for correlation.
    fn code_spectrum(&self, code: &SpreadingCode) -> Vec<Complex64> {
        let mut buf = vec![Complex64::new(0.0, 0.0); FFT_LEN];
        for (k, &c) in code.samples().iter().enumerate() {
            buf[k] = Complex64::new(c as f64, 0.0);
        }
        self.fft.process(&mut buf);
        buf.iter().map(|x| x.conj()).collect()
    }

    /// Matched vectors `m(l, f)` for every code phase at one Doppler bin;
    /// `out[b][l]`. Equal to [`matched_vector`] up to a per-`l` phase.
    fn matched_at_doppler(&self, code_spec: &[Complex64], fi: usize, out: &mut [Vec<Complex64>]) {
        let scale = 1.0 / FFT_LEN as f64;
        for (b, buf) in out.iter_mut().enumerate() {
            let x = &self.spectra[fi][b];
            buf.resize(FFT_LEN, Complex64::new(0.0, 0.0));
            for ((o, xv), cv) in buf.iter_mut().zip(x).zip(code_spec) {
                *o = xv * cv;
            }
            self.ifft.process(buf);
            for v in buf.iter_mut().take(CODE_SAMPLES) {
                *v *= scale;
            }
        }
    }

    /// Baseline CAF over the whole grid.
    pub fn caf_grid_baseline(&self, code: &SpreadingCode) -> CafGrid {
        let nf = self.dopplers.len();
        let spec = self.code_spectrum(code);
        let mut bufs = vec![Vec::new(); self.antennas];
        let mut values = vec![0.0; nf * CODE_SAMPLES];
        for fi in 0..nf {
            self.matched_at_doppler(&spec, fi, &mut bufs);
            for l in 0..CODE_SAMPLES {
                let num: f64 = bufs.iter().map(|m| m[l].norm_sqr()).sum();
                let den = self.traces[l];
                values[fi * CODE_SAMPLES + l] = if den > 0.0 { (num / den).min(CODE_SAMPLES as f64) } else { 0.0 };
            }
        }
        CafGrid { values, dopplers: self.dopplers.clone() }
    }

    /// Nulling CAF over the whole grid, via a rank-one downdate of the
    /// per-code-phase Gram eigen-decomposition at every cell.
    pub fn caf_grid_jass(&mut self, code: &SpreadingCode, nulled: usize) -> Result<CafGrid> {
        check_nulled(nulled, self.antennas)?;
        if nulled == 0 {
            return Ok(self.caf_grid_baseline(code));
        }
        self.ensure_eig();
        let (evals, vh) = self.eig.as_ref().expect("eigen-decompositions computed");
        let b = self.antennas;
        let lc = CODE_SAMPLES as f64;
        let nf = self.dopplers.len();
        let spec = self.code_spectrum(code);
        let mut bufs = vec![Vec::new(); b];
        let mut values = vec![0.0; nf * CODE_SAMPLES];
        let mut ws = SecularWorkspace::new();
        let mut m = vec![Complex64::new(0.0, 0.0); b];
        let mut w = vec![0.0; b];
        for fi in 0..nf {
            self.matched_at_doppler(&spec, fi, &mut bufs);
            for l in 0..CODE_SAMPLES {
                for (j, buf) in bufs.iter().enumerate() {
                    m[j] = buf[l];
                }
                let d = &evals[l * b..(l + 1) * b];
                let v = &vh[l * b * b..(l + 1) * b * b];
                let mut znorm = 0.0;
                for i in 0..b {
                    let row = &v[i * b..(i + 1) * b];
                    let mut z = Complex64::new(0.0, 0.0);
                    for j in 0..b {
                        z += row[j] * m[j];
                    }
                    w[i] = z.norm_sqr();
                    znorm += w[i];
                }
                let pairs = rank_one_downdate_top(d, &w, lc, nulled, &mut ws);
                let top_val: f64 = pairs.iter().map(|p| p.value).sum();
                let top_proj: f64 = pairs.iter().map(|p| p.projection).sum();
                let num = (znorm - top_proj).max(0.0);
                let trace: f64 = d.iter().sum();
                let den = trace - znorm / lc - top_val + num / lc;
                values[fi * CODE_SAMPLES + l] =
                    if den > 0.0 && num > 0.0 { (num / den).clamp(0.0, lc) } else { 0.0 };
            }
        }
        Ok(CafGrid { values, dopplers: self.dopplers.clone() })
    }

    /// Global argmax of the baseline grid if it reaches `tau`.
    pub fn acquire_baseline(&self, code: &SpreadingCode, tau: f64) -> Option<SignalCandidate> {
        let grid = self.caf_grid_baseline(code);
        let (l, fi, v) = grid.argmax();
        (v >= tau).then(|| SignalCandidate {
            prn: code.prn(),
            code_phase: l,
            doppler: self.dopplers[fi],
            caf: v,
            projection: NullingProjection::identity(self.antennas),
            pseudorange: None,
            doa: None,
        })
    }

    /// Thresholded local maxima of the nulling CAF, each with its projector.
    pub fn acquire_peaks(&mut self, code: &SpreadingCode, tau_j: f64, nulled: usize) -> Result<Vec<SignalCandidate>> {
        let grid = self.caf_grid_jass(code, nulled)?;
        let peaks = find_peaks(&grid, tau_j);
        peaks
            .into_iter()
            .map(|(l, fi, v)| {
                let f = self.dopplers[fi];
                let projection = interference_projection(self.stream, code, ACQUISITION_OFFSET + l, f, nulled)?;
                Ok(SignalCandidate {
                    prn: code.prn(),
                    code_phase: l,
                    doppler: f,
                    caf: v,
                    projection,
                    pseudorange: None,
                    doa: None,
                })
            })
            .collect()
    }
}

fn circular_distance(a: usize, b: usize) -> usize {
    let d = a.abs_diff(b);
    d.min(CODE_SAMPLES - d)
}

/// Cells `>= tau` that beat their 3x3 neighborhood (code phase circular,
/// plateaus resolved to the smallest `(l, f)`), after main-lobe suppression.
/// Returned strongest first as `(code phase, Doppler index, value)`.
pub fn find_peaks(grid: &CafGrid, tau: f64) -> Vec<(usize, usize, f64)> {
    let nf = grid.dopplers.len();
    let mut raw = Vec::new();
    for fi in 0..nf {
        for l in 0..CODE_SAMPLES {
            let v = grid.get(l, fi);
            if !(v >= tau) {
                continue;
            }
            let mut is_max = true;
            'nb: for df in -1i64..=1 {
                let fj = fi as i64 + df;
                if fj < 0 || fj >= nf as i64 {
                    continue;
                }
                for dl in -1i64..=1 {
                    if df == 0 && dl == 0 {
                        continue;
                    }
                    let lj = (l as i64 + dl).rem_euclid(CODE_SAMPLES as i64) as usize;
                    let u = grid.get(lj, fj as usize);
                    if u > v || (u == v && (lj, fj as usize) < (l, fi)) {
                        is_max = false;
                        break 'nb;
                    }
                }
            }
            if is_max {
                raw.push((l, fi, v));
            }
        }
    }
    raw.sort_by(|a, b| b.2.total_cmp(&a.2).then(a.0.cmp(&b.0)).then(a.1.cmp(&b.1)));
    let mut kept: Vec<(usize, usize, f64)> = Vec::new();
    for p in raw {
        let close = kept
            .iter()
            .any(|q| circular_distance(p.0, q.0) <= SUPPRESS_SAMPLES && p.1.abs_diff(q.1) <= SUPPRESS_BINS);
        if !close {
            kept.push(p);
        }
    }
    kept
}

/// Convenience wrapper: baseline acquisition of one code.
pub fn acquire_baseline(stream: &ReceiveStream, code: &SpreadingCode, tau: f64) -> Result<Option<SignalCandidate>> {
    Ok(AcquisitionEngine::new(stream)?.acquire_baseline(code, tau))
}

/// Convenience wrapper: peak-set acquisition of one code.
pub fn acquire_peaks(stream: &ReceiveStream, code: &SpreadingCode, tau_j: f64, nulled: usize) -> Result<Vec<SignalCandidate>> {
    AcquisitionEngine::new(stream)?.acquire_peaks(code, tau_j, nulled)
}
