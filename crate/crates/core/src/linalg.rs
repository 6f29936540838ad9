//! Hermitian eigen-decompositions and the rank-one downdate used by the
//! interference-nulling acquisition.

use nalgebra::DMatrix;
use num_complex::Complex64;

/// Eigen-decomposition of a Hermitian matrix with eigenvalues sorted in
/// descending order. Columns of `vectors` are orthonormal eigenvectors.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: DMatrix<Complex64>,
}

/// Eigen-decomposes a Hermitian matrix (only the lower triangle is trusted).
pub fn hermitian_eig(m: &DMatrix<Complex64>) -> HermitianEigen {
    assert!(m.is_square(), "matrix must be square");
    let n = m.nrows();
    // symmetrize to guard against round-off asymmetry
    let h = DMatrix::from_fn(n, n, |i, j| 0.5 * (m[(i, j)] + m[(j, i)].conj()));
    let eig = h.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    HermitianEigen { values, vectors }
}

/// `I - U Uᴴ` for the first `count` columns of `u`.
pub fn complement_projector(u: &DMatrix<Complex64>, count: usize) -> DMatrix<Complex64> {
    let n = u.nrows();
    let mut p = DMatrix::<Complex64>::identity(n, n);
    if count > 0 {
        let top = u.columns(0, count);
        p -= &top * top.adjoint();
    }
    p
}

/// One eigenpair summary of `diag(d) - z zᴴ / rho`: the eigenvalue and the
/// squared projection `|uᴴ z|^2` of `z` onto its eigenvector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DowndatedPair {
    pub value: f64,
    pub projection: f64,
}

/// Scratch space for [`rank_one_downdate_top`].
#[derive(Debug, Default, Clone)]
pub struct SecularWorkspace {
    poles: Vec<f64>,
    weights: Vec<f64>,
    shifted: Vec<f64>,
    pairs: Vec<DowndatedPair>,
}

impl SecularWorkspace {
    pub fn new() -> Self {
        Self::default()
    }
}

/// Largest `count` eigenvalues (with projections) of `diag(d) - z zᴴ / rho`.
///
/// `d` must be sorted in descending order and `w[j] = |z_j|^2`. The result
/// is sorted by descending eigenvalue and written into `ws`; a slice into it
/// is returned.
pub fn rank_one_downdate_top<'a>(
    d: &[f64],
    w: &[f64],
    rho: f64,
    count: usize,
    ws: &'a mut SecularWorkspace,
) -> &'a [DowndatedPair] {
    let n = d.len();
    debug_assert_eq!(w.len(), n);
    let count = count.min(n);
    ws.pairs.clear();
    ws.poles.clear();
    ws.weights.clear();
    if count == 0 {
        return &ws.pairs;
    }
    let wsum: f64 = w.iter().sum();
    let dscale = d.iter().fold(0.0f64, |a, &x| a.max(x.abs()));
    let wtiny = 1e-28 * (wsum + rho * dscale).max(f64::MIN_POSITIVE);
    let dtiny = 1e-14 * dscale.max(f64::MIN_POSITIVE);

    // deflation: negligible weights keep their pole as an eigenvalue,
    // coincident poles merge their weights and leave the pole behind
    for j in 0..n {
        if w[j] <= wtiny {
            ws.pairs.push(DowndatedPair { value: d[j], projection: w[j] });
            continue;
        }
        if let Some(&last) = ws.poles.last() {
            if last - d[j] <= dtiny {
                *ws.weights.last_mut().unwrap() += w[j];
                ws.pairs.push(DowndatedPair { value: d[j], projection: 0.0 });
                continue;
            }
        }
        ws.poles.push(d[j]);
        ws.weights.push(w[j]);
    }

    let m = ws.poles.len();
    let roots = count.min(m);
    for i in 0..roots {
        let pair = secular_root(&ws.poles, &ws.weights, rho, i, &mut ws.shifted);
        ws.pairs.push(pair);
    }
    ws.pairs.sort_by(|a, b| b.value.total_cmp(&a.value));
    ws.pairs.truncate(count);
    &ws.pairs
}

/// Relative stopping tolerance of the secular iteration.
const ROOT_TOLERANCE: f64 = 1e-11;
/// Relative step below which the iteration stops.
const STEP_TOLERANCE: f64 = 1e-9;

/// Root of `sum_j w_j / (p_j - x) = rho` in `(p_{i+1}, p_i)` (or below the
/// last pole), solved in coordinates shifted to the nearer pole.
fn secular_root(p: &[f64], w: &[f64], rho: f64, i: usize, shifted: &mut Vec<f64>) -> DowndatedPair {
    let m = p.len();
    let last = i + 1 == m;
    let hi = p[i];
    let lo = if last { p[i] - w.iter().sum::<f64>() / rho } else { p[i + 1] };

    // first-order guess: the other poles frozen at their value at p_i
    let rest: f64 = (0..m).filter(|&j| j != i).map(|j| w[j] / (p[j] - hi)).sum();
    let guess = hi - w[i] / (rho - rest);
    let mid = 0.5 * (lo + hi);
    let guess_ok = guess > lo && guess < hi;
    let origin = if last || (guess_ok && guess >= mid) {
        hi
    } else if guess_ok {
        lo
    } else {
        let f = |x: f64| -> f64 { p.iter().zip(w).map(|(&pj, &wj)| wj / (pj - x)).sum::<f64>() - rho };
        if f(mid) <= 0.0 { hi } else { lo }
    };

    shifted.clear();
    shifted.extend(p.iter().map(|&pj| pj - origin));
    let s = &shifted[..];
    let a_hi = s[i];
    let a_lo = if last { lo - origin } else { s[i + 1] };

    // f, and the derivatives of the parts with poles above/below the interval
    let eval = |mu: f64| -> (f64, f64, f64, f64, f64) {
        let (mut psi, mut dpsi, mut phi, mut dphi) = (0.0, 0.0, 0.0, 0.0);
        for j in 0..m {
            let r = 1.0 / (s[j] - mu);
            let t = w[j] * r;
            let dt = t * r;
            if j <= i {
                psi += t;
                dpsi += dt;
            } else {
                phi += t;
                dphi += dt;
            }
        }
        (psi + phi - rho, psi, dpsi, phi, dphi)
    };

    let (mut left, mut right) = (a_lo, a_hi);
    let mut mu = if guess_ok { guess - origin } else { 0.5 * (a_lo + a_hi) };
    if !(mu > a_lo && mu < a_hi) {
        mu = 0.5 * (a_lo + a_hi);
    }
    for _ in 0..80 {
        let (fv, psi, dpsi, phi, dphi) = eval(mu);
        if fv == 0.0 {
            break;
        }
        if fv < 0.0 {
            left = mu;
        } else {
            right = mu;
        }
        // model psi ~ a1 + b1/(s_i - x), phi ~ a2 + b2/(s_{i+1} - x)
        let b1 = dpsi * (a_hi - mu) * (a_hi - mu);
        let a1 = psi - b1 / (a_hi - mu);
        let mut next = if last {
            let c = a1 - rho;
            if c < 0.0 {
                a_hi + b1 / c
            } else {
                f64::NAN
            }
        } else {
            let b2 = dphi * (a_lo - mu) * (a_lo - mu);
            let a2 = phi - b2 / (a_lo - mu);
            solve_two_pole(a1 + a2 - rho, b1, b2, a_hi, a_lo)
        };
        if !(next > left && next < right) {
            next = 0.5 * (left + right);
        }
        let step = (next - mu).abs();
        mu = next;
        let width = right - left;
        // the rational model converges superlinearly, so a short step
        // leaves an error far below it
        if step <= STEP_TOLERANCE * mu.abs().max(f64::MIN_POSITIVE)
            || width <= ROOT_TOLERANCE * (left.abs() + right.abs())
        {
            break;
        }
    }

    let inv_sq: f64 = (0..m).map(|j| w[j] / ((s[j] - mu) * (s[j] - mu))).sum();
    let projection = if inv_sq > 0.0 && inv_sq.is_finite() { rho * rho / inv_sq } else { 0.0 };
    DowndatedPair { value: origin + mu, projection }
}

/// Root in `(lo, hi)` of `c + b1/(hi - x) + b2/(lo - x) = 0`.
fn solve_two_pole(c: f64, b1: f64, b2: f64, hi: f64, lo: f64) -> f64 {
    // c (hi - x)(lo - x) + b1 (lo - x) + b2 (hi - x) = 0
    let qa = c;
    let qb = -(c * (hi + lo) + b1 + b2);
    let qc = c * hi * lo + b1 * lo + b2 * hi;
    if qa.abs() <= 1e-300 {
        return -qc / qb;
    }
    let disc = (qb * qb - 4.0 * qa * qc).max(0.0);
    let q = -0.5 * (qb + qb.signum() * disc.sqrt());
    let r1 = q / qa;
    let r2 = if q != 0.0 { qc / q } else { r1 };
    if r1 > lo && r1 < hi {
        r1
    } else {
        r2
    }
}
