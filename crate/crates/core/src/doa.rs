//! Projected MUSIC direction finding and line-of-sight screening.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::acquisition::{NullingProjection, SignalCandidate};
use crate::geometry::{steering_vector, wrap_azimuth, ArrayGeometry, LocalDirection};
use crate::linalg::hermitian_eig;
use crate::ranging::SymbolSequence;
use crate::{Error, Result};

/// Default number of symbols in the covariance estimate.
pub const DEFAULT_SNAPSHOTS: usize = 10;
/// First symbol used for the covariance estimate.
pub const DEFAULT_SNAPSHOT_START: usize = 5;
/// Default LoS threshold `tau_M`.
pub const DEFAULT_TAU_M: f64 = 10.0;

const ELEVATIONS: usize = 91;
const AZIMUTHS: usize = 360;

/// Grid-search result for one candidate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DoaEstimate {
    pub elevation_deg: f64,
    pub azimuth_deg: f64,
    pub objective: f64,
}

impl DoaEstimate {
    pub fn direction(&self) -> LocalDirection {
        LocalDirection::new(self.elevation_deg.to_radians(), wrap_azimuth(self.azimuth_deg.to_radians()))
    }
}

/// Steering vectors for the 1-degree grid (elevation 0..=90, azimuth 0..360).
#[derive(Debug, Clone)]
pub struct SteeringTable {
    antennas: usize,
    /// `vectors[(e * 360 + a) * B + b]`.
    vectors: Vec<Complex64>,
}

impl SteeringTable {
    pub fn new(geom: &ArrayGeometry) -> Self {
        let b = geom.antennas();
        let mut vectors = Vec::with_capacity(ELEVATIONS * AZIMUTHS * b);
        for e in 0..ELEVATIONS {
            for a in 0..AZIMUTHS {
                let dir = LocalDirection::new((e as f64).to_radians(), wrap_azimuth((a as f64).to_radians()));
                vectors.extend(steering_vector(geom, &dir).iter());
            }
        }
        Self { antennas: b, vectors }
    }

    pub fn antennas(&self) -> usize {
        self.antennas
    }

    fn vector(&self, e: usize, a: usize) -> &[Complex64] {
        let i = (e * AZIMUTHS + a) * self.antennas;
        &self.vectors[i..i + self.antennas]
    }
}

/// `(1/Z) R Rᴴ` over `r[start..start+z]`.
pub fn spatial_covariance(seq: &SymbolSequence, start: usize, z: usize) -> Result<DMatrix<Complex64>> {
    if z == 0 {
        return Err(Error::InsufficientSymbols { needed: start + 1, available: seq.len() });
    }
    let r = seq.matrix(start, z)?;
    Ok(&r * r.adjoint() / Complex64::new(z as f64, 0.0))
}

/// MUSIC objective `||P a||^2 / (||E_Nᴴ P a||^2 + 1e-12)` with
/// `E_N` the non-principal eigenvectors; 0 when `||P a||^2 < 1e-9 B`.
pub fn music_objective(p: &DMatrix<Complex64>, e1: &DVector<Complex64>, a: &[Complex64]) -> f64 {
    let b = a.len();
    let mut pa_norm = 0.0;
    let mut proj = Complex64::new(0.0, 0.0);
    for i in 0..b {
        let mut v = Complex64::new(0.0, 0.0);
        for j in 0..b {
            v += p[(i, j)] * a[j];
        }
        pa_norm += v.norm_sqr();
        proj += e1[i].conj() * v;
    }
    if pa_norm < 1e-9 * b as f64 {
        return 0.0;
    }
    // [e1, E_N] is unitary, so ||E_Nᴴ u||^2 = ||u||^2 - |e1ᴴ u|^2
    let noise = (pa_norm - proj.norm_sqr()).max(0.0);
    pa_norm / (noise + 1e-12)
}

/// Grid argmax of the projected MUSIC objective.
pub fn estimate_doa(projection: &NullingProjection, covariance: &DMatrix<Complex64>, table: &SteeringTable) -> DoaEstimate {
    let e1 = hermitian_eig(covariance).vectors.column(0).into_owned();
    let mut best = DoaEstimate { elevation_deg: 0.0, azimuth_deg: 0.0, objective: f64::NEG_INFINITY };
    for e in 0..ELEVATIONS {
        for a in 0..AZIMUTHS {
            let v = music_objective(&projection.matrix, &e1, table.vector(e, a));
            if v > best.objective {
                best = DoaEstimate { elevation_deg: e as f64, azimuth_deg: a as f64, objective: v };
            }
        }
    }
    best
}

/// Keeps candidates whose DoA objective reaches `tau_m`.
pub fn los_screen(candidates: Vec<SignalCandidate>, tau_m: f64) -> Vec<SignalCandidate> {
    candidates
        .into_iter()
        .filter(|c| c.doa.as_ref().is_some_and(|d| d.objective >= tau_m))
        .collect()
}
