//! Despreading, data-step detection and pseudoranges.

use std::f64::consts::TAU;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::acquisition::SignalCandidate;
use crate::constants::{CODE_SAMPLES, SAMPLE_PERIOD, SPEED_OF_LIGHT};
use crate::linalg::hermitian_eig;
use crate::synth::{ReceiveStream, SpreadingCode};
use crate::{Error, Result};

/// Despread symbol vectors `r[K]`, one per code period.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolSequence {
    pub symbols: Vec<DVector<Complex64>>,
}

impl SymbolSequence {
    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    /// Columns `r[start..start+count]` as a `B x count` matrix.
    pub fn matrix(&self, start: usize, count: usize) -> Result<DMatrix<Complex64>> {
        if start + count > self.symbols.len() {
            return Err(Error::InsufficientSymbols { needed: start + count, available: self.symbols.len() });
        }
        let b = self.symbols.first().map_or(0, |s| s.len());
        Ok(DMatrix::from_fn(b, count, |r, c| self.symbols[start + c][r]))
    }
}

/// `r[K] = P Y[K L_c + l] Delta(f) c` for every complete code period.
pub fn despread(
    stream: &ReceiveStream,
    code: &SpreadingCode,
    candidate: &SignalCandidate,
    use_projection: bool,
) -> Result<SymbolSequence> {
    let l = candidate.code_phase;
    if l + CODE_SAMPLES > stream.len() {
        return Err(Error::WindowOutOfBounds { start: l, end: l + CODE_SAMPLES, len: stream.len() });
    }
    let count = (stream.len() - l) / CODE_SAMPLES;
    let cps = candidate.doppler * SAMPLE_PERIOD;
    let reference: Vec<Complex64> = code
        .samples()
        .iter()
        .enumerate()
        .map(|(k, &c)| Complex64::from_polar(c as f64, -TAU * (cps * k as f64).fract()))
        .collect();
    let b = stream.antennas();
    let mut symbols = Vec::with_capacity(count);
    for kk in 0..count {
        let start = kk * CODE_SAMPLES + l;
        let r = DVector::from_fn(b, |ant, _| {
            let row = &stream.row(ant)[start..start + CODE_SAMPLES];
            row.iter().zip(&reference).map(|(y, w)| y * w).sum::<Complex64>()
        });
        symbols.push(if use_projection { candidate.projection.apply(&r) } else { r });
    }
    Ok(SymbolSequence { symbols })
}

/// Principal eigenvector of `sum_K r[K] r[K]ᴴ`.
pub fn principal_direction(seq: &SymbolSequence) -> Result<DVector<Complex64>> {
    let m = seq.matrix(0, seq.len())?;
    if m.ncols() == 0 {
        return Err(Error::InsufficientSymbols { needed: 1, available: 0 });
    }
    let e = hermitian_eig(&(&m * m.adjoint()));
    Ok(e.vectors.column(0).into_owned())
}

/// Observed step index `K^` (in receiver code periods), found by matching a
/// sign-step template against the scalarized, derotated sequence.
pub fn detect_step_index(seq: &SymbolSequence) -> Result<usize> {
    let n = seq.len();
    if n < 2 {
        return Err(Error::InsufficientSymbols { needed: 2, available: n });
    }
    let e1 = principal_direction(seq)?;
    let z: Vec<Complex64> = seq.symbols.iter().map(|r| e1.dotc(r)).collect();
    // residual Doppler rotates consecutive symbols by a common angle
    let lag: Complex64 = z.windows(2).map(|w| w[1] * w[0].conj()).sum();
    let rot = if lag.norm() > 0.0 { lag.arg() } else { 0.0 };
    let zd: Vec<Complex64> = z
        .iter()
        .enumerate()
        .map(|(k, v)| v * Complex64::from_polar(1.0, -rot * k as f64))
        .collect();
    let total: Complex64 = zd.iter().sum();
    let mut prefix = Complex64::new(0.0, 0.0);
    let mut best = (0usize, f64::NEG_INFINITY);
    for k in 1..n {
        prefix += zd[k - 1];
        let stat = (total - 2.0 * prefix).norm();
        if stat > best.1 {
            best = (k, stat);
        }
    }
    let (k_hat, stat) = best;
    let flips = (zd[k_hat] * zd[k_hat - 1].conj()).re < 0.0;
    if !(stat > total.norm()) || !flips {
        return Err(Error::NoDataStep);
    }
    Ok(k_hat)
}

/// `Delta K^ = K^ - K_0`.
pub fn detect_step(seq: &SymbolSequence, data_step: i64) -> Result<i64> {
    let dk = detect_step_index(seq)? as i64 - data_step;
    if dk < 0 {
        return Err(Error::NoDataStep);
    }
    Ok(dk)
}

/// `R^ = c (l^ + L_c Delta K^) T`.
pub fn pseudorange(code_phase: usize, delta_k: i64) -> f64 {
    SPEED_OF_LIGHT * (code_phase as f64 + (CODE_SAMPLES as i64 * delta_k) as f64) * SAMPLE_PERIOD
}
