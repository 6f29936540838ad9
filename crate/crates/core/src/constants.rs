//! Physical and signal constants shared across the crate.

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Spherical Earth radius, m.
pub const EARTH_RADIUS: f64 = 6_371_000.0;

/// GPS L1 carrier frequency, Hz.
pub const L1_FREQUENCY: f64 = 1_575.42e6;

/// GPS L1 carrier wavelength, m.
pub const L1_WAVELENGTH: f64 = SPEED_OF_LIGHT / L1_FREQUENCY;

/// C/A code length in chips.
pub const CA_CHIPS: usize = 1023;

/// Integer oversampling factor (samples per chip).
pub const OVERSAMPLING: usize = 4;

/// Code length in samples, `L_c`.
pub const CODE_SAMPLES: usize = CA_CHIPS * OVERSAMPLING;

/// Sample rate, Hz (four times the chip rate).
pub const SAMPLE_RATE: f64 = 4.092e6;

/// Sampling period, s.
pub const SAMPLE_PERIOD: f64 = 1.0 / SAMPLE_RATE;

/// Range spanned by one sample, m (`c T`, about 73.3 m).
pub const SAMPLE_RANGE: f64 = SPEED_OF_LIGHT * SAMPLE_PERIOD;

/// Reference satellite distance at which the channel gain is `||h_0||^2 = B`.
pub const REFERENCE_RANGE: f64 = 23_000e3;

/// Maximum Doppler searched by acquisition, Hz.
pub const MAX_DOPPLER: f64 = 4_000.0;

/// Doppler grid spacing, Hz.
pub const DOPPLER_STEP: f64 = 250.0;
