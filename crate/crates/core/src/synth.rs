//! C/A spreading codes and synthesis of the multi-antenna baseband stream.
//!
//! All delays are applied at integer sample resolution (`floor(tau / T)`).
//! Chips and data symbols are real +/-1; phase enters only through Doppler
//! and channel coefficients.

use std::f64::consts::TAU;

use nalgebra::DVector;
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::constants::{CA_CHIPS, CODE_SAMPLES, OVERSAMPLING, SAMPLE_PERIOD};
use crate::{Error, Result};

/// G2 output delay (chips) per PRN 1..=32.
const G2_DELAY: [usize; 32] = [
    5, 6, 7, 8, 17, 18, 139, 140, 141, 251, 252, 254, 255, 256, 257, 258, 469, 470, 471, 472, 473,
    474, 509, 512, 513, 514, 515, 516, 859, 860, 861, 862,
];

/// A C/A Gold code and its 4x sample-and-hold version.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpreadingCode {
    prn: u8,
    chips: Vec<i8>,
    samples: Vec<i8>,
}

impl SpreadingCode {
    pub fn prn(&self) -> u8 {
        self.prn
    }

    /// 1023 chips, each +/-1.
    pub fn chips(&self) -> &[i8] {
        &self.chips
    }

    /// `L_c = 4092` samples, each +/-1.
    pub fn samples(&self) -> &[i8] {
        &self.samples
    }

    /// Code sample at any (possibly negative) sample index, periodic in `L_c`.
    #[inline]
    pub fn at(&self, k: i64) -> f64 {
        self.samples[k.rem_euclid(CODE_SAMPLES as i64) as usize] as f64
    }
}

/// Generates the GPS L1 C/A code for `prn` (1..=32).
pub fn gen_ca_code(prn: u8) -> Result<SpreadingCode> {
    if !(1..=32).contains(&prn) {
        return Err(Error::UnknownPrn(prn));
    }
    // G1 = 1 + x^3 + x^10, G2 = 1 + x^2 + x^3 + x^6 + x^8 + x^9 + x^10, both
    // seeded with all ones. reg[0] is stage 1.
    let mut g1 = [1u8; 10];
    let mut g2 = [1u8; 10];
    let mut g1_out = [0u8; CA_CHIPS];
    let mut g2_out = [0u8; CA_CHIPS];
    for n in 0..CA_CHIPS {
        g1_out[n] = g1[9];
        g2_out[n] = g2[9];
        let f1 = g1[2] ^ g1[9];
        let f2 = g2[1] ^ g2[2] ^ g2[5] ^ g2[7] ^ g2[8] ^ g2[9];
        g1.copy_within(0..9, 1);
        g2.copy_within(0..9, 1);
        g1[0] = f1;
        g2[0] = f2;
    }
    let delay = G2_DELAY[prn as usize - 1];
    let chips: Vec<i8> = (0..CA_CHIPS)
        .map(|n| {
            let bit = g1_out[n] ^ g2_out[(n + CA_CHIPS - delay) % CA_CHIPS];
            1 - 2 * bit as i8
        })
        .collect();
    let samples = chips.iter().flat_map(|&c| std::iter::repeat(c).take(OVERSAMPLING)).collect();
    Ok(SpreadingCode { prn, chips, samples })
}

/// All 32 C/A codes, indexed by `prn - 1`.
pub fn all_codes() -> Vec<SpreadingCode> {
    (1..=32).map(|p| gen_ca_code(p).expect("valid PRN")).collect()
}

/// Sign-step data model: -1 before code period `step`, +1 from it on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DataModel {
    pub step: i64,
}

impl DataModel {
    pub fn new(step: i64) -> Self {
        assert!(step >= 0, "data step index must be non-negative");
        Self { step }
    }

    #[inline]
    pub fn symbol(&self, period: i64) -> f64 {
        if period < self.step {
            -1.0
        } else {
            1.0
        }
    }
}

/// Transmit signal `t[k] = d[floor(k / L_c)] c[k mod L_c]`.
#[inline]
pub fn transmit_sample(code: &SpreadingCode, data: &DataModel, k: i64) -> f64 {
    data.symbol(k.div_euclid(CODE_SAMPLES as i64)) * code.at(k)
}

/// Complex sample matrix with one row per antenna (B x N).
#[derive(Debug, Clone, PartialEq)]
pub struct SampleMatrix {
    rows: Vec<Vec<Complex64>>,
}

impl SampleMatrix {
    pub fn zeros(antennas: usize, len: usize) -> Self {
        Self { rows: vec![vec![Complex64::new(0.0, 0.0); len]; antennas] }
    }

    pub fn from_rows(rows: Vec<Vec<Complex64>>) -> Self {
        assert!(!rows.is_empty());
        let n = rows[0].len();
        assert!(rows.iter().all(|r| r.len() == n), "ragged sample matrix");
        Self { rows }
    }

    pub fn antennas(&self) -> usize {
        self.rows.len()
    }

    pub fn len(&self) -> usize {
        self.rows[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn row(&self, b: usize) -> &[Complex64] {
        &self.rows[b]
    }

    pub fn row_mut(&mut self, b: usize) -> &mut [Complex64] {
        &mut self.rows[b]
    }

    pub fn column(&self, k: usize) -> DVector<Complex64> {
        DVector::from_iterator(self.rows.len(), self.rows.iter().map(|r| r[k]))
    }

    pub fn add_assign(&mut self, other: &SampleMatrix) {
        for (a, b) in self.rows.iter_mut().zip(&other.rows) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
    }

    /// Mean per-sample power `||y[k]||^2` over all samples.
    pub fn mean_power(&self) -> f64 {
        let total: f64 = self.rows.iter().flat_map(|r| r.iter()).map(|x| x.norm_sqr()).sum();
        total / self.len() as f64
    }

    /// Adds `channel * s[k]` to every column.
    fn add_rank_one(&mut self, channel: &DVector<Complex64>, signal: &[Complex64]) {
        for (row, g) in self.rows.iter_mut().zip(channel.iter()) {
            for (x, s) in row.iter_mut().zip(signal) {
                *x += g * s;
            }
        }
    }
}

/// Receive samples together with the seed that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct ReceiveStream {
    pub samples: SampleMatrix,
    pub seed: u64,
}

impl ReceiveStream {
    pub fn antennas(&self) -> usize {
        self.samples.antennas()
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn row(&self, b: usize) -> &[Complex64] {
        self.samples.row(b)
    }

    pub fn sampling_period(&self) -> f64 {
        SAMPLE_PERIOD
    }
}

/// `exp(i 2 pi f k T)` for k in 0..n, with the phase reduced in cycles.
pub fn doppler_phasor(doppler: f64, n: usize) -> Vec<Complex64> {
    let cycles_per_sample = doppler * SAMPLE_PERIOD;
    (0..n)
        .map(|k| {
            let cyc = (cycles_per_sample * k as f64).fract();
            Complex64::from_polar(1.0, TAU * cyc)
        })
        .collect()
}

/// Free-space channel magnitude `|alpha| = rho_0 / rho`, so that
/// `||h||^2 = B (rho_0 / rho)^2` with `||a||^2 = B`.
pub fn channel_gain(range: f64) -> f64 {
    assert!(range > 0.0, "range must be positive");
    crate::constants::REFERENCE_RANGE / range
}

/// Line-of-sight satellite signal as seen at the array.
#[derive(Debug, Clone, PartialEq)]
pub struct SatelliteSignal {
    pub prn: u8,
    /// `alpha * a`, zero for obstructed satellites.
    pub channel: DVector<Complex64>,
    pub doppler: f64,
    /// `floor(tau / T)`.
    pub delay_samples: i64,
    pub data: DataModel,
}

/// `h[k] t[k - D]` with `h[k] = alpha a exp(i 2 pi f k T)`.
pub fn satellite_contribution(sig: &SatelliteSignal, code: &SpreadingCode, len: usize) -> SampleMatrix {
    let mut out = SampleMatrix::zeros(sig.channel.len(), len);
    add_satellite(&mut out, sig, code);
    out
}

fn add_satellite(out: &mut SampleMatrix, sig: &SatelliteSignal, code: &SpreadingCode) {
    if sig.channel.iter().all(|h| h.norm_sqr() == 0.0) {
        return;
    }
    let n = out.len();
    let ph = doppler_phasor(sig.doppler, n);
    let s: Vec<Complex64> = ph
        .iter()
        .enumerate()
        .map(|(k, p)| p * transmit_sample(code, &sig.data, k as i64 - sig.delay_samples))
        .collect();
    out.add_rank_one(&sig.channel, &s);
}

/// Channel model of an attacker antenna.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChannelKind {
    #[default]
    Los,
    Rayleigh,
}

/// Realized jammer: one channel vector per transmit antenna.
#[derive(Debug, Clone, PartialEq)]
pub struct JammerConfig {
    /// `g_j`, normalized so that `E ||g_j||^2 = B`.
    pub channels: Vec<DVector<Complex64>>,
    /// Per-antenna transmit variance `sigma_J^2` (equals the JSR with the
    /// channel normalization above).
    pub power: f64,
    /// Active antennas at any sample, `1 <= R <= J`.
    pub active: usize,
    /// Per-sample probability of redrawing the active set.
    pub switch_probability: f64,
}

impl JammerConfig {
    pub fn antennas(&self) -> usize {
        self.channels.len()
    }

    pub fn validate(&self) -> Result<()> {
        let j = self.channels.len();
        if j == 0 {
            return Err(Error::InvalidAttacker("jammer needs at least one antenna".into()));
        }
        if self.active == 0 || self.active > j {
            return Err(Error::InvalidAttacker(format!("active antennas {} not in 1..={j}", self.active)));
        }
        if !(0.0..=1.0).contains(&self.switch_probability) {
            return Err(Error::InvalidAttacker("switch probability outside [0, 1]".into()));
        }
        if !(self.power >= 0.0) {
            return Err(Error::InvalidAttacker("jammer power must be non-negative".into()));
        }
        Ok(())
    }
}

fn complex_gaussian(rng: &mut ChaCha8Rng, variance: f64) -> Complex64 {
    let s = (variance / 2.0).sqrt();
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re * s, im * s)
}

/// Draws a uniformly random set of `r` active antennas out of `j`.
fn draw_active_mask(rng: &mut ChaCha8Rng, j: usize, r: usize) -> Vec<bool> {
    let mut idx: Vec<usize> = (0..j).collect();
    // partial Fisher-Yates: the first r entries form the permuted diag(1_R, 0)
    for i in 0..r {
        let pick = rng.gen_range(i..j);
        idx.swap(i, pick);
    }
    let mut mask = vec![false; j];
    for &i in &idx[..r] {
        mask[i] = true;
    }
    mask
}

/// Active-antenna masks `diag(B[k])` for every sample.
pub fn jammer_activity(cfg: &JammerConfig, len: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<bool>> {
    let j = cfg.antennas();
    if j == 1 {
        return vec![vec![true]; len];
    }
    let mut mask = draw_active_mask(rng, j, cfg.active);
    let mut out = Vec::with_capacity(len);
    for _ in 0..len {
        out.push(mask.clone());
        if rng.gen::<f64>() < cfg.switch_probability {
            mask = draw_active_mask(rng, j, cfg.active);
        }
    }
    out
}

/// Receive contribution `sum_j g_j w_j[k]` of one (possibly multi-antenna)
/// jammer.
pub fn jammer_contribution(
    cfg: &JammerConfig,
    antennas: usize,
    len: usize,
    rng: &mut ChaCha8Rng,
) -> Result<SampleMatrix> {
    cfg.validate()?;
    let mut out = SampleMatrix::zeros(antennas, len);
    add_jammer(&mut out, cfg, rng);
    Ok(out)
}

fn add_jammer(out: &mut SampleMatrix, cfg: &JammerConfig, rng: &mut ChaCha8Rng) {
    if cfg.power == 0.0 {
        return;
    }
    let len = out.len();
    let j = cfg.antennas();
    let activity = jammer_activity(cfg, len, rng);
    let mut symbols = vec![vec![Complex64::new(0.0, 0.0); len]; j];
    for (k, mask) in activity.iter().enumerate() {
        for (jj, &on) in mask.iter().enumerate() {
            if on {
                symbols[jj][k] = complex_gaussian(rng, cfg.power);
            }
        }
    }
    for (g, s) in cfg.channels.iter().zip(&symbols) {
        out.add_rank_one(g, s);
    }
}

/// One signal imitated by a spoofer antenna.
#[derive(Debug, Clone, PartialEq)]
pub struct SpoofedSignal {
    pub prn: u8,
    /// Total delay at the receiver, `floor(tau / T)`.
    pub delay_samples: i64,
    /// Emulated Doppler, Hz.
    pub doppler: f64,
    pub data: DataModel,
}

/// Realized single-antenna spoofer.
#[derive(Debug, Clone, PartialEq)]
pub struct SpooferConfig {
    /// Spoofer channel, normalized so that `E ||g||^2 = B`.
    pub channel: DVector<Complex64>,
    /// Amplitude `a_m`; `a_m^2` equals the per-signal SSR under the channel
    /// normalization above.
    pub amplitude: f64,
    pub signals: Vec<SpoofedSignal>,
}

impl SpooferConfig {
    pub fn validate(&self) -> Result<()> {
        if self.signals.is_empty() {
            return Err(Error::InvalidAttacker("spoofed satellite set is empty".into()));
        }
        for s in &self.signals {
            if !(1..=32).contains(&s.prn) {
                return Err(Error::InvalidAttacker(format!("spoofed PRN {} invalid", s.prn)));
            }
            if s.doppler.abs() > crate::constants::MAX_DOPPLER {
                return Err(Error::InvalidAttacker(format!("spoofed Doppler {} Hz out of range", s.doppler)));
            }
        }
        Ok(())
    }
}

/// Receive contribution of one spoofer.
pub fn spoofer_contribution(
    cfg: &SpooferConfig,
    codes: &[SpreadingCode],
    len: usize,
) -> Result<SampleMatrix> {
    cfg.validate()?;
    let mut out = SampleMatrix::zeros(cfg.channel.len(), len);
    add_spoofer(&mut out, cfg, codes);
    Ok(out)
}

fn add_spoofer(out: &mut SampleMatrix, cfg: &SpooferConfig, codes: &[SpreadingCode]) {
    let n = out.len();
    let mut tx = vec![Complex64::new(0.0, 0.0); n];
    for sig in &cfg.signals {
        let code = &codes[sig.prn as usize - 1];
        let ph = doppler_phasor(sig.doppler, n);
        for (k, (x, p)) in tx.iter_mut().zip(&ph).enumerate() {
            *x += p * (cfg.amplitude * transmit_sample(code, &sig.data, k as i64 - sig.delay_samples));
        }
    }
    out.add_rank_one(&cfg.channel, &tx);
}

/// Everything needed to synthesize one receive stream.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalScene {
    pub antennas: usize,
    pub len: usize,
    pub satellites: Vec<SatelliteSignal>,
    pub jammers: Vec<JammerConfig>,
    pub spoofers: Vec<SpooferConfig>,
    /// Linear SNR; `None` disables thermal noise.
    pub snr: Option<f64>,
    pub seed: u64,
}

/// Random stream used for jammer symbols and thermal noise.
pub(crate) fn synthesis_rng(seed: u64) -> ChaCha8Rng {
    use rand::SeedableRng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    rng
}

/// Sums satellite, jammer and spoofer contributions plus circular Gaussian
/// noise of per-antenna variance `1 / SNR`.
pub fn synthesize(scene: &SignalScene, codes: &[SpreadingCode]) -> Result<ReceiveStream> {
    let mut rng = synthesis_rng(scene.seed);
    let mut y = SampleMatrix::zeros(scene.antennas, scene.len);
    for s in &scene.satellites {
        add_satellite(&mut y, s, &codes[s.prn as usize - 1]);
    }
    for j in &scene.jammers {
        j.validate()?;
        add_jammer(&mut y, j, &mut rng);
    }
    for s in &scene.spoofers {
        s.validate()?;
        add_spoofer(&mut y, s, codes);
    }
    if let Some(snr) = scene.snr {
        let var = 1.0 / snr;
        for b in 0..scene.antennas {
            for x in y.row_mut(b) {
                *x += complex_gaussian(&mut rng, var);
            }
        }
    }
    Ok(ReceiveStream { samples: y, seed: scene.seed })
}

/// Converts decibels to a linear power ratio.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}
