//! Gauss-Newton pseudorange positioning, its IRLS variant and the
//! surface-projected error metric.

use nalgebra::{DMatrix, DVector, Matrix4, Vector4};

use crate::constants::{EARTH_RADIUS, SAMPLE_RANGE};
use crate::geometry::EcefVector;
use crate::{Error, Result};

/// Iteration cap.
pub const DEFAULT_MAX_ITERATIONS: usize = 20;
/// Stop once the position update is shorter than this, m.
pub const CONVERGENCE_STEP: f64 = 1e-4;
/// IRLS reweighting starts once the position update is below this, m.
pub const REWEIGHT_BELOW_STEP: f64 = 1_000.0;
/// Normal matrices worse conditioned than this are treated as singular.
pub const MAX_CONDITION: f64 = 1e12;

/// Default IRLS weight floor `sigma = c T / 6`, m.
pub fn default_sigma() -> f64 {
    SAMPLE_RANGE / 6.0
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Measurement {
    pub satellite: EcefVector,
    pub pseudorange: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PositionFix {
    pub position: EcefVector,
    /// `c dt`, m.
    pub clock_bias: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Final weights, aligned with the measurements (all 1 for LS).
    pub weights: Vec<f64>,
    /// Final residuals `R^ - ||o_s - o|| - c dt`, m.
    pub residuals: Vec<f64>,
}

/// Linearization at `o`: rows `[-(o_s - o)ᵀ / ||o_s - o||, 1]` and
/// `delta_s = R^_s - ||o_s - o||`.
fn linearize(meas: &[Measurement], o: &EcefVector) -> (DMatrix<f64>, DVector<f64>) {
    let n = meas.len();
    let mut a = DMatrix::zeros(n, 4);
    let mut d = DVector::zeros(n);
    for (i, m) in meas.iter().enumerate() {
        let los = m.satellite - o;
        let rho = los.norm();
        for j in 0..3 {
            a[(i, j)] = -los[j] / rho;
        }
        a[(i, 3)] = 1.0;
        d[i] = m.pseudorange - rho;
    }
    (a, d)
}

fn solve_weighted(a: &DMatrix<f64>, w: &[f64], d: &DVector<f64>) -> Result<Vector4<f64>> {
    let mut n = Matrix4::zeros();
    let mut rhs = Vector4::zeros();
    for i in 0..a.nrows() {
        let row = Vector4::new(a[(i, 0)], a[(i, 1)], a[(i, 2)], a[(i, 3)]);
        n += row * row.transpose() * w[i];
        rhs += row * (w[i] * d[i]);
    }
    let eig = n.symmetric_eigen();
    let max = eig.eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let min = eig.eigenvalues.iter().fold(f64::INFINITY, |m, v| m.min(v.abs()));
    if !(min > 0.0) || max / min > MAX_CONDITION {
        return Err(Error::PositionFailure("normal matrix is singular".into()));
    }
    n.cholesky()
        .map(|c| c.solve(&rhs))
        .ok_or_else(|| Error::PositionFailure("normal matrix is not positive definite".into()))
}

fn residuals(meas: &[Measurement], o: &EcefVector, bias: f64) -> Vec<f64> {
    meas.iter().map(|m| m.pseudorange - (m.satellite - o).norm() - bias).collect()
}

/// Shared Gauss-Newton skeleton. `sigma = None` keeps unit weights.
fn gauss_newton(meas: &[Measurement], k_max: usize, sigma: Option<f64>) -> Result<PositionFix> {
    if meas.len() < 4 {
        return Err(Error::PositionFailure(format!("{} measurements, need at least 4", meas.len())));
    }
    let mut o = EcefVector::zeros();
    let mut bias = 0.0;
    let mut w = vec![1.0; meas.len()];
    let mut converged = false;
    let mut iterations = 0;
    for _ in 0..k_max {
        iterations += 1;
        let (a, d) = linearize(meas, &o);
        let x = solve_weighted(&a, &w, &d)?;
        let step = EcefVector::new(x[0], x[1], x[2]);
        // residuals of a linearization far from the solution say nothing
        // about outliers, so reweighting waits until the steps are short
        if let Some(s) = sigma.filter(|_| step.norm() < REWEIGHT_BELOW_STEP) {
            // e = (I - A (AᵀWA)⁻¹ AᵀW) delta
            let e = &d - &a * DVector::from_column_slice(x.as_slice());
            for (wi, ei) in w.iter_mut().zip(e.iter()) {
                let r = s.max(ei.abs());
                *wi = 1.0 / (r * r);
            }
        }
        o += step;
        bias = x[3];
        if !o.iter().all(|v| v.is_finite()) {
            return Err(Error::PositionFailure("iteration diverged".into()));
        }
        if step.norm() < CONVERGENCE_STEP {
            converged = true;
            break;
        }
    }
    let res = residuals(meas, &o, bias);
    Ok(PositionFix { position: o, clock_bias: bias, iterations, converged, weights: w, residuals: res })
}

/// Least-squares fix from the Earth's center.
pub fn solve_ls(meas: &[Measurement], k_max: usize) -> Result<PositionFix> {
    gauss_newton(meas, k_max, None)
}

/// IRLS fix with weights `1 / max(sigma, |e|)^2`, starting from `W = I`.
pub fn solve_irls(meas: &[Measurement], k_max: usize, sigma: f64) -> Result<PositionFix> {
    assert!(sigma > 0.0, "weight floor must be positive");
    gauss_newton(meas, k_max, Some(sigma))
}

/// `||R_e o^/||o^|| - o||`; failures and the origin map to `+inf`.
pub fn surface_error(fix: Option<&PositionFix>, truth: &EcefVector) -> f64 {
    match fix {
        Some(f) => {
            let n = f.position.norm();
            if !(n > 0.0) || !n.is_finite() {
                return f64::INFINITY;
            }
            (f.position * (EARTH_RADIUS / n) - truth).norm()
        }
        None => f64::INFINITY,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::SPEED_OF_LIGHT;
    use crate::geometry::{propagate, visible, SatelliteAlmanac};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn scenario(seed: u64) -> (EcefVector, f64, Vec<EcefVector>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let o = crate::scene::random_unit(&mut rng) * EARTH_RADIUS;
        let bias = SPEED_OF_LIGHT * rng.gen_range(0.0..1e-3);
        let sats = propagate(&SatelliteAlmanac::nominal(), rng.gen_range(0.0..3e7))
            .into_iter()
            .filter(|s| visible(&o, &s.position))
            .map(|s| s.position)
            .collect();
        (o, bias, sats)
    }

    fn exact(o: &EcefVector, bias: f64, sats: &[EcefVector]) -> Vec<Measurement> {
        sats.iter().map(|s| Measurement { satellite: *s, pseudorange: (s - o).norm() + bias }).collect()
    }

    fn quantized(o: &EcefVector, bias: f64, sats: &[EcefVector]) -> Vec<Measurement> {
        sats.iter()
            .map(|s| {
                let r = (s - o).norm() + bias;
                Measurement { satellite: *s, pseudorange: (r / SAMPLE_RANGE).floor() * SAMPLE_RANGE }
            })
            .collect()
    }

    #[test]
    fn exact_round_trip() {
        for seed in 0..20 {
            let (o, bias, sats) = scenario(seed);
            let fix = solve_ls(&exact(&o, bias, &sats[..4]), DEFAULT_MAX_ITERATIONS).unwrap();
            assert!((fix.position - o).norm() < 1e-6, "seed {seed}: {}", (fix.position - o).norm());
            assert!((fix.clock_bias - bias).abs() < 1e-6);
            let all = solve_irls(&exact(&o, bias, &sats), DEFAULT_MAX_ITERATIONS, default_sigma()).unwrap();
            assert!((all.position - o).norm() < 1e-6);
        }
    }

    #[test]
    fn too_few_or_degenerate_measurements_fail() {
        let (o, bias, sats) = scenario(1);
        let m = exact(&o, bias, &sats[..3]);
        assert!(matches!(solve_ls(&m, 20), Err(Error::PositionFailure(_))));
        let same = vec![exact(&o, bias, &sats[..1])[0]; 5];
        assert!(matches!(solve_ls(&same, 20), Err(Error::PositionFailure(_))));
    }

    #[test]
    fn quantized_ranges_give_desk_scale_errors() {
        let mut errs: Vec<f64> = (0..50)
            .map(|seed| {
                let (o, bias, sats) = scenario(seed);
                let fix = solve_ls(&quantized(&o, bias, &sats), DEFAULT_MAX_ITERATIONS).ok();
                surface_error(fix.as_ref(), &o)
            })
            .collect();
        errs.sort_by(f64::total_cmp);
        assert!(errs[25] <= 200.0, "median {}", errs[25]);
    }

    #[test]
    fn irls_matches_ls_on_clean_data() {
        for seed in 0..10 {
            let (o, bias, sats) = scenario(seed);
            let m = exact(&o, bias, &sats);
            let ls = solve_ls(&m, DEFAULT_MAX_ITERATIONS).unwrap();
            let irls = solve_irls(&m, DEFAULT_MAX_ITERATIONS, default_sigma()).unwrap();
            assert!((ls.position - irls.position).norm() < 1e-3);
            assert!(irls.weights.iter().all(|&w| w > 0.0 && w <= 1.0 / default_sigma().powi(2) * (1.0 + 1e-12)));
        }
    }

    #[test]
    fn one_irls_step_is_one_ls_step() {
        let (o, bias, sats) = scenario(3);
        let m = exact(&o, bias, &sats);
        let a = solve_ls(&m, 1).unwrap();
        let b = solve_irls(&m, 1, default_sigma()).unwrap();
        assert_eq!(a.position, b.position);
        assert_eq!(a.clock_bias, b.clock_bias);
    }

    #[test]
    fn huge_floor_reduces_to_ls() {
        let (o, bias, sats) = scenario(4);
        let m = quantized(&o, bias, &sats);
        let ls = solve_ls(&m, DEFAULT_MAX_ITERATIONS).unwrap();
        let irls = solve_irls(&m, DEFAULT_MAX_ITERATIONS, 1e12).unwrap();
        assert!((ls.position - irls.position).norm() < 1e-6);
    }

    #[test]
    fn irls_rejects_an_outlier() {
        // five good satellites plus one pseudorange biased by +50 km
        let (o, bias, sats) = scenario(0);
        let sats = &sats[..6];
        let clean = quantized(&o, bias, sats);
        let clean_err = surface_error(solve_irls(&clean, DEFAULT_MAX_ITERATIONS, default_sigma()).ok().as_ref(), &o);
        let mut bad = clean.clone();
        bad[0].pseudorange += 50e3;
        let ls_err = surface_error(solve_ls(&bad, DEFAULT_MAX_ITERATIONS).ok().as_ref(), &o);
        let irls = solve_irls(&bad, DEFAULT_MAX_ITERATIONS, default_sigma()).unwrap();
        let irls_err = surface_error(Some(&irls), &o);
        assert!(ls_err > 10e3, "LS {ls_err}");
        assert!(irls_err <= 2.0 * clean_err, "IRLS {irls_err} vs clean {clean_err}");
        assert!(irls.weights[0] < 1e-6 * irls.weights[1]);
    }

    #[test]
    fn irls_rejects_outliers_with_full_constellation() {
        let mut good = 0;
        let trials = 100;
        for seed in 0..trials {
            let (o, bias, sats) = scenario(seed);
            let mut m = quantized(&o, bias, &sats);
            let k = seed as usize % m.len();
            m[k].pseudorange += 50e3;
            let err = surface_error(solve_irls(&m, DEFAULT_MAX_ITERATIONS, default_sigma()).ok().as_ref(), &o);
            if err < 300.0 {
                good += 1;
            }
        }
        assert!(good >= 95, "{good}/{trials}");
    }

    #[test]
    fn residual_norm_settles() {
        for seed in 0..10 {
            let (o, bias, sats) = scenario(seed);
            let m = exact(&o, bias, &sats);
            let norms: Vec<f64> = (1..=8)
                .map(|k| {
                    let f = solve_ls(&m, k).unwrap();
                    f.residuals.iter().map(|r| r * r).sum::<f64>().sqrt()
                })
                .collect();
            for w in norms[1..].windows(2) {
                assert!(w[1] <= w[0] * (1.0 + 1e-9) + 1e-6, "{norms:?}");
            }
        }
    }

    #[test]
    fn surface_error_rules() {
        let o = EcefVector::new(0.0, 0.0, EARTH_RADIUS);
        let fix = |p: EcefVector| PositionFix {
            position: p,
            clock_bias: 0.0,
            iterations: 1,
            converged: true,
            weights: vec![],
            residuals: vec![],
        };
        assert_eq!(surface_error(Some(&fix(o)), &o), 0.0);
        assert!(surface_error(Some(&fix(o * 2.0)), &o) < 1e-9);
        assert_eq!(surface_error(Some(&fix(EcefVector::zeros())), &o), f64::INFINITY);
        assert_eq!(surface_error(None, &o), f64::INFINITY);
    }
}
