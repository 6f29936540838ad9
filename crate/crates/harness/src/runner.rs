//! Parallel Monte-Carlo execution.

use std::sync::atomic::{AtomicUsize, Ordering};

use arraygnss::geometry::SatelliteAlmanac;
use arraygnss::pipeline::{Mode, Receiver, TrialResult};
use arraygnss::scene::draw_scene;
use rayon::prelude::*;

use crate::config::ScenarioConfig;
use crate::HarnessError;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of trial `index` under `master`.
pub fn trial_seed(master: u64, index: usize) -> u64 {
    splitmix64(master ^ splitmix64(index as u64))
}

/// One trial of one mode.
#[derive(Debug, Clone)]
pub struct TrialRow {
    pub index: usize,
    pub result: TrialResult,
}

/// All rows of a run, ordered by trial index, then by mode as configured.
#[derive(Debug, Clone)]
pub struct RunResults {
    pub config: ScenarioConfig,
    pub rows: Vec<TrialRow>,
}

impl RunResults {
    pub fn errors(&self, mode: Mode) -> Vec<f64> {
        self.rows.iter().filter(|r| r.result.mode == mode).map(|r| r.result.error).collect()
    }
}

/// Runs every trial on up to `workers` threads. `progress` is called with the
/// number of finished trials.
pub fn run_scenario(
    config: &ScenarioConfig,
    workers: usize,
    progress: Option<&(dyn Fn(usize, usize) + Sync)>,
) -> Result<RunResults, HarnessError> {
    config.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| HarnessError::Runtime(e.to_string()))?;
    let almanac = SatelliteAlmanac::nominal();
    let params = config.scenario_params();
    let rx_params = config.receiver_params();
    let done = AtomicUsize::new(0);
    let per_trial: Vec<Vec<TrialRow>> = pool.install(|| {
        (0..config.trials)
            .into_par_iter()
            .map_init(
                || Receiver::new(rx_params),
                |rx, index| {
                    let scene = draw_scene(&params, &almanac, trial_seed(config.seed, index))?;
                    let results = rx.run(&scene, &config.modes)?;
                    if let Some(p) = progress {
                        p(done.fetch_add(1, Ordering::Relaxed) + 1, config.trials);
                    }
                    Ok(results.into_iter().map(|result| TrialRow { index, result }).collect())
                },
            )
            .collect::<Result<_, arraygnss::Error>>()
    })?;
    Ok(RunResults { config: config.clone(), rows: per_trial.into_iter().flatten().collect() })
}
