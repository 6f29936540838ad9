//! Random placement of one Monte-Carlo trial: receiver, clock, epoch,
//! attackers and their realized channels.

use std::f64::consts::TAU;

use nalgebra::{DVector, Vector3};
use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::constants::{CODE_SAMPLES, MAX_DOPPLER, SAMPLE_PERIOD, SPEED_OF_LIGHT};
use crate::geometry::{
    local_direction, propagate, range_delay_doppler, steering_vector, visible, ArrayGeometry,
    EcefVector, LocalDirection, ReceiverTruth, SatelliteAlmanac, SatelliteState,
};
use crate::synth::{
    channel_gain, db_to_linear, ChannelKind, DataModel, JammerConfig, SatelliteSignal, SignalScene,
    SpoofedSignal, SpooferConfig,
};
use crate::{Error, Result};

/// Seconds in a (365-day) year; trial epochs are drawn from `[0, YEAR)`.
pub const YEAR: f64 = 365.0 * 86_400.0;

/// Distance of every attacker antenna from the receiver, m.
pub const ATTACKER_STANDOFF: f64 = 10_000.0;

/// Apparent distances imitated by spoofers, m.
pub const SPOOFED_RANGE: (f64, f64) = (20_000e3, 29_000e3);

/// Per-sample probability that a multi-antenna jammer redraws its active set.
pub const JAMMER_SWITCH_PROBABILITY: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JammerSpec {
    pub antennas: usize,
    pub jsr_db: f64,
    pub channel: ChannelKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpooferSpec {
    pub spoofed_count: usize,
    pub ssr_db: f64,
    pub channel: ChannelKind,
}

/// Scenario knobs shared by all trials of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioParams {
    pub snr_db: f64,
    pub jammers: Vec<JammerSpec>,
    pub spoofers: Vec<SpooferSpec>,
    pub antennas: usize,
    /// Stream length in code periods (1 ms each).
    pub code_periods: usize,
    /// Transmit-side data step `K_0`.
    pub data_step: i64,
}

impl Default for ScenarioParams {
    fn default() -> Self {
        Self { snr_db: -20.0, jammers: vec![], spoofers: vec![], antennas: 8, code_periods: 150, data_step: 30 }
    }
}

/// One realized trial.
#[derive(Debug, Clone)]
pub struct Scene {
    pub seed: u64,
    /// Seconds after the almanac epoch.
    pub time: f64,
    pub truth: ReceiverTruth,
    pub geometry: ArrayGeometry,
    /// States of every almanac satellite at `time` (receiver warm start).
    pub satellites: Vec<SatelliteState>,
    /// PRNs above the horizon.
    pub visible: Vec<u8>,
    pub signals: SignalScene,
    /// Array-frame direction of every jammer antenna.
    pub jammer_directions: Vec<Vec<LocalDirection>>,
    pub spoofer_directions: Vec<LocalDirection>,
    pub data_step: i64,
}

impl Scene {
    pub fn satellite(&self, prn: u8) -> Option<&SatelliteState> {
        self.satellites.iter().find(|s| s.prn == prn)
    }

    /// True pseudorange `rho + c dt` of a visible satellite.
    pub fn true_pseudorange(&self, prn: u8) -> Option<f64> {
        let s = self.satellite(prn)?;
        Some((s.position - self.truth.position).norm() + SPEED_OF_LIGHT * self.truth.clock_offset)
    }

    /// Whether `(prn, delay_samples)` belongs to a spoofed signal.
    pub fn is_spoofed(&self, prn: u8, delay_samples: i64) -> bool {
        self.signals
            .spoofers
            .iter()
            .flat_map(|s| &s.signals)
            .any(|s| s.prn == prn && s.delay_samples == delay_samples)
    }
}

/// Random stream used for placement.
pub fn placement_rng(seed: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(0);
    rng
}

/// Uniform point on the unit sphere.
pub fn random_unit(rng: &mut ChaCha8Rng) -> Vector3<f64> {
    loop {
        let v = Vector3::new(
            StandardNormal.sample(rng),
            StandardNormal.sample(rng),
            StandardNormal.sample(rng),
        );
        let n: f64 = v.norm();
        if n > 1e-9 {
            return v / n;
        }
    }
}

/// Direction uniform over the upper hemisphere (by solid angle).
pub fn random_upper_direction(rng: &mut ChaCha8Rng) -> LocalDirection {
    let sin_el: f64 = rng.gen_range(0.0..1.0);
    let az = rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI);
    LocalDirection::new(sin_el.asin(), az)
}

fn random_phase(rng: &mut ChaCha8Rng) -> Complex64 {
    Complex64::from_polar(1.0, rng.gen_range(0.0..TAU))
}

/// Attacker channel with `E ||g||^2 = B`.
pub fn attacker_channel(
    kind: ChannelKind,
    geom: &ArrayGeometry,
    dir: &LocalDirection,
    rng: &mut ChaCha8Rng,
) -> DVector<Complex64> {
    match kind {
        ChannelKind::Los => {
            let ph = random_phase(rng);
            steering_vector(geom, dir).map(|a| a * ph)
        }
        ChannelKind::Rayleigh => DVector::from_fn(geom.antennas(), |_, _| {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
        }),
    }
}

/// Draws a complete trial from `seed`.
pub fn draw_scene(params: &ScenarioParams, almanac: &SatelliteAlmanac, seed: u64) -> Result<Scene> {
    let mut rng = placement_rng(seed);
    let geometry = ArrayGeometry::half_wavelength_ring(params.antennas)?;

    let up = random_unit(&mut rng);
    let yaw = rng.gen_range(0.0..TAU);
    let clock_offset = rng.gen_range(0.0..1e-3);
    let truth = ReceiverTruth::on_surface(&up, yaw, clock_offset);
    let time = rng.gen_range(0.0..YEAR);
    let satellites = propagate(almanac, time);
    let o = truth.position;

    let mut sat_signals = Vec::new();
    let mut visible_prns = Vec::new();
    for s in &satellites {
        if !visible(&o, &s.position) {
            continue;
        }
        visible_prns.push(s.prn);
        let rdd = range_delay_doppler(&o, clock_offset, &s.position, &s.velocity);
        let dir = local_direction(&o, &truth.orientation, &s.position)?;
        let alpha = random_phase(&mut rng) * channel_gain(rdd.range);
        sat_signals.push(SatelliteSignal {
            prn: s.prn,
            channel: steering_vector(&geometry, &dir).map(|a| a * alpha),
            doppler: rdd.doppler,
            delay_samples: (rdd.delay / SAMPLE_PERIOD).floor() as i64,
            data: DataModel::new(params.data_step),
        });
    }

    let mut jammers = Vec::new();
    let mut jammer_directions = Vec::new();
    for spec in &params.jammers {
        if spec.antennas == 0 {
            return Err(Error::InvalidAttacker("jammer needs at least one antenna".into()));
        }
        let dirs: Vec<LocalDirection> = (0..spec.antennas).map(|_| random_upper_direction(&mut rng)).collect();
        let channels = dirs.iter().map(|d| attacker_channel(spec.channel, &geometry, d, &mut rng)).collect();
        jammers.push(JammerConfig {
            channels,
            power: db_to_linear(spec.jsr_db),
            active: if spec.antennas == 1 { 1 } else { spec.antennas - 1 },
            switch_probability: JAMMER_SWITCH_PROBABILITY,
        });
        jammer_directions.push(dirs);
    }

    let mut spoofers = Vec::new();
    let mut spoofer_directions = Vec::new();
    for spec in &params.spoofers {
        if spec.spoofed_count == 0 || visible_prns.is_empty() {
            return Err(Error::InvalidAttacker("spoofed satellite set is empty".into()));
        }
        let dir = random_upper_direction(&mut rng);
        let channel = attacker_channel(spec.channel, &geometry, &dir, &mut rng);
        let count = spec.spoofed_count.min(visible_prns.len());
        let chosen: Vec<u8> = visible_prns.choose_multiple(&mut rng, count).copied().collect();
        let signals = chosen
            .into_iter()
            .map(|prn| {
                let apparent = rng.gen_range(SPOOFED_RANGE.0..SPOOFED_RANGE.1);
                let delay = apparent / SPEED_OF_LIGHT + clock_offset;
                SpoofedSignal {
                    prn,
                    delay_samples: (delay / SAMPLE_PERIOD).floor() as i64,
                    doppler: rng.gen_range(-MAX_DOPPLER..=MAX_DOPPLER),
                    data: DataModel::new(params.data_step),
                }
            })
            .collect();
        spoofers.push(SpooferConfig { channel, amplitude: db_to_linear(spec.ssr_db).sqrt(), signals });
        spoofer_directions.push(dir);
    }

    let signals = SignalScene {
        antennas: params.antennas,
        len: params.code_periods * CODE_SAMPLES,
        satellites: sat_signals,
        jammers,
        spoofers,
        snr: Some(db_to_linear(params.snr_db)),
        seed,
    };
    Ok(Scene {
        seed,
        time,
        truth,
        geometry,
        satellites,
        visible: visible_prns,
        signals,
        jammer_directions,
        spoofer_directions,
        data_step: params.data_step,
    })
}

/// ECEF position of an attacker at `dir` (array frame) and the standoff range.
pub fn attacker_position(truth: &ReceiverTruth, dir: &LocalDirection) -> EcefVector {
    truth.position + truth.orientation * dir.unit_vector() * ATTACKER_STANDOFF
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::EARTH_RADIUS;
    use crate::geometry::elevation;

    fn params() -> ScenarioParams {
        ScenarioParams {
            jammers: vec![JammerSpec { antennas: 3, jsr_db: 30.0, channel: ChannelKind::Los }],
            spoofers: vec![SpooferSpec { spoofed_count: 4, ssr_db: 10.0, channel: ChannelKind::Rayleigh }],
            ..ScenarioParams::default()
        }
    }

    #[test]
    fn scene_is_reproducible() {
        let alm = SatelliteAlmanac::nominal();
        let a = draw_scene(&params(), &alm, 17).unwrap();
        let b = draw_scene(&params(), &alm, 17).unwrap();
        assert_eq!(a.signals, b.signals);
        assert_eq!(a.truth, b.truth);
        let c = draw_scene(&params(), &alm, 18).unwrap();
        assert_ne!(a.truth, c.truth);
    }

    #[test]
    fn scene_contents_are_consistent() {
        let alm = SatelliteAlmanac::nominal();
        for seed in 0..50 {
            let s = draw_scene(&params(), &alm, seed).unwrap();
            assert!((s.truth.position.norm() - EARTH_RADIUS).abs() < 1e-6);
            assert!((0.0..1e-3).contains(&s.truth.clock_offset));
            assert_eq!(s.signals.satellites.len(), s.visible.len());
            assert!(s.visible.len() >= 4);
            let j = &s.signals.jammers[0];
            assert_eq!(j.antennas(), 3);
            assert_eq!(j.active, 2);
            let sp = &s.signals.spoofers[0];
            assert_eq!(sp.signals.len(), 4);
            for sig in &sp.signals {
                assert!(s.visible.contains(&sig.prn));
                let range = sig.delay_samples as f64 * SAMPLE_PERIOD * SPEED_OF_LIGHT
                    - s.truth.clock_offset * SPEED_OF_LIGHT;
                assert!(range > 20_000e3 - 100.0 && range < 29_000e3 + 100.0);
            }
            for sig in &s.signals.satellites {
                let truth = s.true_pseudorange(sig.prn).unwrap();
                let quant = sig.delay_samples as f64 * SAMPLE_PERIOD * SPEED_OF_LIGHT;
                assert!(truth - quant >= -1e-6 && truth - quant < crate::constants::SAMPLE_RANGE);
            }
        }
    }

    #[test]
    fn attackers_sit_above_the_horizon() {
        let alm = SatelliteAlmanac::nominal();
        let s = draw_scene(&params(), &alm, 3).unwrap();
        for d in s.jammer_directions.iter().flatten().chain(&s.spoofer_directions) {
            let p = attacker_position(&s.truth, d);
            assert!(((p - s.truth.position).norm() - ATTACKER_STANDOFF).abs() < 1e-6);
            assert!(elevation(&s.truth.position, &p) >= -1e-9);
        }
    }

    #[test]
    fn los_attacker_channel_has_unit_modulus() {
        let geom = ArrayGeometry::half_wavelength_ring(8).unwrap();
        let mut rng = placement_rng(1);
        let d = random_upper_direction(&mut rng);
        let g = attacker_channel(ChannelKind::Los, &geom, &d, &mut rng);
        assert!(g.iter().all(|x| (x.norm() - 1.0).abs() < 1e-12));
        let mut acc = 0.0;
        for _ in 0..2000 {
            acc += attacker_channel(ChannelKind::Rayleigh, &geom, &d, &mut rng).norm_squared();
        }
        assert!((acc / 2000.0 / 8.0 - 1.0).abs() < 0.05);
    }

    #[test]
    fn hemisphere_draw_is_area_uniform() {
        let mut rng = placement_rng(4);
        let n = 20_000;
        let high = (0..n).filter(|_| random_upper_direction(&mut rng).elevation > std::f64::consts::FRAC_PI_6).count();
        // solid-angle fraction above 30 degrees elevation is 1 - sin(30) = 0.5
        assert!((high as f64 / n as f64 - 0.5).abs() < 0.02);
    }
}
