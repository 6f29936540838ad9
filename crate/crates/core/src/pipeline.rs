//! End-to-end baseline and nulling/screening receivers.

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::acquisition::{AcquisitionEngine, SignalCandidate, DEFAULT_NULLED, DEFAULT_TAU, DEFAULT_TAU_J};
use crate::consistency::{build_graph, greedy_clique, pair_inputs, RangeBounds};
use crate::doa::{
    estimate_doa, los_screen, spatial_covariance, SteeringTable, DEFAULT_SNAPSHOTS, DEFAULT_SNAPSHOT_START,
    DEFAULT_TAU_M,
};
use crate::geometry::EcefVector;
use crate::positioning::{default_sigma, solve_irls, solve_ls, surface_error, Measurement, PositionFix, DEFAULT_MAX_ITERATIONS};
use crate::ranging::{despread, detect_step, pseudorange};
use crate::scene::Scene;
use crate::synth::{all_codes, synthesize, ReceiveStream, SpreadingCode};
use crate::{Error, Result};

/// Number of PRNs the receivers search.
pub const SEARCHED_PRNS: u8 = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Baseline,
    Schieber,
}

impl Mode {
    pub const ALL: [Mode; 2] = [Mode::Baseline, Mode::Schieber];

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Baseline => "baseline",
            Mode::Schieber => "schieber",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "baseline" => Ok(Mode::Baseline),
            "schieber" => Ok(Mode::Schieber),
            other => Err(format!("unknown mode '{other}'")),
        }
    }
}

/// Receiver thresholds and knobs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReceiverParams {
    pub tau: f64,
    pub tau_j: f64,
    pub nulled: usize,
    pub tau_m: f64,
    pub snapshots: usize,
    pub snapshot_start: usize,
    pub bounds: RangeBounds,
    pub sigma: f64,
    pub max_iterations: usize,
}

impl Default for ReceiverParams {
    fn default() -> Self {
        Self {
            tau: DEFAULT_TAU,
            tau_j: DEFAULT_TAU_J,
            nulled: DEFAULT_NULLED,
            tau_m: DEFAULT_TAU_M,
            snapshots: DEFAULT_SNAPSHOTS,
            snapshot_start: DEFAULT_SNAPSHOT_START,
            bounds: RangeBounds::default(),
            sigma: default_sigma(),
            max_iterations: DEFAULT_MAX_ITERATIONS,
        }
    }
}

/// Per-trial record. For the baseline `screened` and `clique` both count the
/// ranged measurements handed to the solver.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialResult {
    pub mode: Mode,
    pub seed: u64,
    pub truth: EcefVector,
    pub fix: Option<PositionFix>,
    /// Surface-projected error, m; `+inf` on failure.
    pub error: f64,
    pub acquired: usize,
    pub screened: usize,
    pub clique: usize,
    /// Why no fix was produced.
    pub failure: Option<Error>,
    pub elapsed: Duration,
}

impl TrialResult {
    /// Equality of everything except wall-clock time.
    pub fn same_outcome(&self, other: &TrialResult) -> bool {
        let strip = |r: &TrialResult| TrialResult { elapsed: Duration::ZERO, ..r.clone() };
        strip(self) == strip(other)
    }
}

/// Random stream for receiver-side tie breaking.
pub fn receiver_rng(seed: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(2);
    rng
}

/// Codes and DoA table, shared across trials with the same array.
pub struct Receiver {
    pub params: ReceiverParams,
    codes: Vec<SpreadingCode>,
    table: Option<SteeringTable>,
}

impl Receiver {
    pub fn new(params: ReceiverParams) -> Self {
        Self { params, codes: all_codes(), table: None }
    }

    /// Runs `modes` on one synthesized stream of `scene`.
    pub fn run(&mut self, scene: &Scene, modes: &[Mode]) -> Result<Vec<TrialResult>> {
        let stream = synthesize(&scene.signals, &self.codes)?;
        Ok(modes.iter().map(|&m| self.run_on(scene, &stream, m)).collect())
    }

    pub fn run_on(&mut self, scene: &Scene, stream: &ReceiveStream, mode: Mode) -> TrialResult {
        let t0 = Instant::now();
        let outcome = match mode {
            Mode::Baseline => self.baseline(scene, stream),
            Mode::Schieber => self.schieber(scene, stream),
        };
        let (fix, failure, acquired, screened, clique) = match outcome {
            Ok(s) => (s.fix.as_ref().ok().cloned(), s.fix.err(), s.acquired, s.screened, s.clique),
            Err(e) => (None, Some(e), 0, 0, 0),
        };
        TrialResult {
            mode,
            seed: scene.seed,
            truth: scene.truth.position,
            error: surface_error(fix.as_ref(), &scene.truth.position),
            fix,
            acquired,
            screened,
            clique,
            failure,
            elapsed: t0.elapsed(),
        }
    }

    fn baseline(&self, scene: &Scene, stream: &ReceiveStream) -> Result<Stages> {
        let engine = AcquisitionEngine::new(stream)?;
        let mut acquired = 0;
        let mut meas = Vec::new();
        for code in self.codes.iter().take(SEARCHED_PRNS as usize) {
            let Some(mut cand) = engine.acquire_baseline(code, self.params.tau) else {
                continue;
            };
            acquired += 1;
            if self.range(scene, stream, code, &mut cand, false).is_err() {
                continue;
            }
            if let (Some(r), Some(sat)) = (cand.pseudorange, scene.satellite(cand.prn)) {
                meas.push(Measurement { satellite: sat.position, pseudorange: r });
            }
        }
        let n = meas.len();
        Ok(Stages { fix: solve_ls(&meas, self.params.max_iterations), acquired, screened: n, clique: n })
    }

    fn schieber(&mut self, scene: &Scene, stream: &ReceiveStream) -> Result<Stages> {
        if self.table.as_ref().map_or(true, |t| t.antennas() != scene.geometry.antennas()) {
            self.table = Some(SteeringTable::new(&scene.geometry));
        }
        let p = self.params;
        let mut engine = AcquisitionEngine::new(stream)?;
        let mut acquired = 0;
        let mut ranged = Vec::new();
        for code in self.codes.iter().take(SEARCHED_PRNS as usize) {
            for mut cand in engine.acquire_peaks(code, p.tau_j, p.nulled)? {
                acquired += 1;
                let Ok(seq) = self.range(scene, stream, code, &mut cand, true) else {
                    continue;
                };
                let Ok(cov) = spatial_covariance(&seq, p.snapshot_start, p.snapshots) else {
                    continue;
                };
                let table = self.table.as_ref().expect("steering table built above");
                cand.doa = Some(estimate_doa(&cand.projection, &cov, table));
                ranged.push(cand);
            }
        }
        let screened = los_screen(ranged, p.tau_m);
        let inputs = pair_inputs(&screened, |prn| scene.satellite(prn).map(|s| s.position));
        let prns = screened.iter().map(|c| c.prn).collect();
        let graph = build_graph(&inputs, prns, &p.bounds);
        let members = greedy_clique(&graph, &mut receiver_rng(scene.seed));
        let meas: Vec<Measurement> = members
            .iter()
            .filter_map(|&i| inputs[i].as_ref())
            .map(|x| Measurement { satellite: x.satellite, pseudorange: x.pseudorange })
            .collect();
        let fix = if meas.len() < 4 {
            Err(Error::PositionFailure(format!("clique of {} signals", meas.len())))
        } else {
            solve_irls(&meas, p.max_iterations, p.sigma)
        };
        Ok(Stages { fix, acquired, screened: screened.len(), clique: members.len() })
    }

    /// Despreads, detects the data step and fills the pseudorange.
    fn range(
        &self,
        scene: &Scene,
        stream: &ReceiveStream,
        code: &SpreadingCode,
        cand: &mut SignalCandidate,
        projected: bool,
    ) -> Result<crate::ranging::SymbolSequence> {
        let seq = despread(stream, code, cand, projected)?;
        let dk = detect_step(&seq, scene.data_step)?;
        cand.pseudorange = Some(pseudorange(cand.code_phase, dk));
        Ok(seq)
    }
}

struct Stages {
    fix: Result<PositionFix>,
    acquired: usize,
    screened: usize,
    clique: usize,
}

/// Synthesizes `scene` and runs one mode with default receiver settings.
pub fn run_trial(scene: &Scene, mode: Mode) -> Result<TrialResult> {
    let mut rx = Receiver::new(ReceiverParams::default());
    Ok(rx.run(scene, &[mode])?.remove(0))
}
