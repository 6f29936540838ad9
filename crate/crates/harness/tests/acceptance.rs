//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs with its own `main` so that the criterion lines are always printed.
//! `ACCEPTANCE_ONLY=3,8` restricts the run to the listed criteria.

use std::path::PathBuf;
use std::time::Instant;

use arraygnss::acquisition::{
    apply_code_projection, caf_baseline, caf_jass, code_projected_window, interference_projection, matched_vector,
    window, AcquisitionEngine, ACQUISITION_OFFSET,
};
use arraygnss::consistency::{greedy_clique, max_unique_clique_size, pairwise_range, PairInput, PairwiseRange, PlausibilityGraph};
use arraygnss::constants::{CODE_SAMPLES, EARTH_RADIUS, SAMPLE_RANGE, SPEED_OF_LIGHT};
use arraygnss::geometry::{local_direction, propagate, visible, EcefVector, ReceiverTruth, SatelliteAlmanac};
use arraygnss::pipeline::{receiver_rng, run_trial, Mode};
use arraygnss::positioning::{default_sigma, solve_irls, solve_ls, surface_error, Measurement, PositionFix, DEFAULT_MAX_ITERATIONS};
use arraygnss::scene::{draw_scene, random_unit, JammerSpec, ScenarioParams};
use arraygnss::synth::{all_codes, synthesize, ChannelKind};
use arraygnss_harness::config::{JammerGroup, ScenarioConfig};
use arraygnss_harness::stats::{CdfTable, ModeSummary};
use arraygnss_harness::{run_scenario, RunResults};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn bundled(name: &str) -> ScenarioConfig {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs").join(name);
    ScenarioConfig::load(&path).expect("bundled config loads")
}

fn workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn run(cfg: &ScenarioConfig) -> RunResults {
    let t0 = Instant::now();
    let r = run_scenario(cfg, workers(), None).expect("scenario runs");
    eprintln!("  [{}: {} trials in {:.0} s]", cfg.name, cfg.trials, t0.elapsed().as_secs_f64());
    r
}

fn summary(r: &RunResults, mode: Mode) -> ModeSummary {
    ModeSummary::from_cdf(&CdfTable::new(r.errors(mode)))
}

fn finite_rate(r: &RunResults, mode: Mode) -> f64 {
    let e = r.errors(mode);
    e.iter().filter(|x| x.is_finite()).count() as f64 / e.len() as f64
}

fn median(r: &RunResults, mode: Mode) -> f64 {
    CdfTable::new(r.errors(mode)).median().unwrap_or(f64::INFINITY)
}

fn pct(x: f64) -> String {
    format!("{:.0}%", 100.0 * x)
}

struct Verdict {
    pass: bool,
    detail: String,
}

impl Verdict {
    fn new(pass: bool, detail: String) -> Self {
        Self { pass, detail }
    }
}

/// Medians carried from criterion 1 to criterion 3.
#[derive(Default)]
struct Shared {
    clean: Option<RunResults>,
}

impl Shared {
    fn clean(&mut self) -> &RunResults {
        self.clean.get_or_insert_with(|| run(&bundled("fig4_clean.json")))
    }
}

fn criterion_1(sh: &mut Shared) -> Verdict {
    let t0 = Instant::now();
    let r = sh.clean();
    let secs = t0.elapsed().as_secs_f64();
    let mut pass = secs <= 15.0 * 60.0;
    let mut detail = String::new();
    for m in Mode::ALL {
        let (f, med) = (finite_rate(r, m), median(r, m));
        pass &= f >= 0.9 && med <= 200.0;
        detail += &format!("{m}: finite {} median {med:.1} m; ", pct(f));
    }
    detail += &format!("runtime {secs:.0} s");
    Verdict::new(pass, detail)
}

fn failure_rate(r: &RunResults, mode: Mode) -> f64 {
    1.0 - summary(r, mode).success_rate
}

fn criterion_2(sh: &mut Shared) -> Verdict {
    let base20 = failure_rate(sh.clean(), Mode::Baseline);
    let mut cfg = bundled("fig4_clean.json");
    cfg.name = "clean sky, SNR -24 dB".into();
    cfg.snr_db = -24.0;
    cfg.seed = 24;
    let r = run(&cfg);
    let (base24, sch24) = (failure_rate(&r, Mode::Baseline), failure_rate(&r, Mode::Schieber));
    Verdict::new(
        base24 > base20 && sch24 <= base24,
        format!("baseline failure {} at -20 dB, {} at -24 dB; schieber {} at -24 dB", pct(base20), pct(base24), pct(sch24)),
    )
}

fn criterion_3(sh: &mut Shared) -> Verdict {
    let clean_median = median(sh.clean(), Mode::Schieber);
    let r = run(&bundled("fig5_jammer.json"));
    let (b, s) = (summary(&r, Mode::Baseline), summary(&r, Mode::Schieber));
    let med = median(&r, Mode::Schieber);
    Verdict::new(
        b.success_rate <= 0.10 && s.success_rate >= 0.85 && med <= 3.0 * clean_median,
        format!(
            "baseline success {}; schieber success {} median {med:.1} m (clean {clean_median:.1} m)",
            pct(b.success_rate),
            pct(s.success_rate)
        ),
    )
}

fn criterion_4() -> Verdict {
    let mut pass = true;
    let mut detail = String::new();
    for j in 2..=5usize {
        let mut cfg = bundled("fig6_multijammer.json");
        cfg.name = format!("multi-antenna jammer, J = {j}");
        cfg.jammers = vec![JammerGroup { count: 1, antennas: j, jsr_db: 30.0, channel: ChannelKind::Los }];
        cfg.seed = 60 + j as u64;
        cfg.modes = vec![Mode::Schieber];
        let rate = summary(&run(&cfg), Mode::Schieber).success_rate;
        pass &= if j < 5 { rate >= 0.85 } else { (0.20..=0.80).contains(&rate) };
        detail += &format!("J={j}: {} ", pct(rate));
    }
    Verdict::new(pass, detail.trim_end().to_owned())
}

fn criterion_5() -> Verdict {
    let low = run(&bundled("fig7_spoofer.json"));
    let mut cfg = bundled("fig7_spoofer.json");
    cfg.name = "single spoofer, one satellite, SSR 10 dB".into();
    cfg.spoofers[0].ssr_db = 10.0;
    cfg.seed = 71;
    let high = run(&cfg);
    let b0 = summary(&low, Mode::Baseline).success_rate;
    let b10 = summary(&high, Mode::Baseline).success_rate;
    let s0 = summary(&low, Mode::Schieber).success_rate;
    let s10 = summary(&high, Mode::Schieber).success_rate;
    Verdict::new(
        (0.30..=0.70).contains(&b0) && b10 <= 0.10 && s0 >= 0.85 && s10 >= 0.85,
        format!("SSR 0 dB: baseline {} schieber {}; SSR 10 dB: baseline {} schieber {}", pct(b0), pct(s0), pct(b10), pct(s10)),
    )
}

fn criterion_6() -> Verdict {
    let r = run(&bundled("fig8_multispoofer.json"));
    let (b, s) = (summary(&r, Mode::Baseline).success_rate, summary(&r, Mode::Schieber).success_rate);
    Verdict::new(b <= 0.25 && s >= 0.85, format!("baseline {} schieber {}", pct(b), pct(s)))
}

fn criterion_7() -> Verdict {
    let mut pass = true;
    let mut detail = String::new();
    for (kind, seed) in [(ChannelKind::Los, 90), (ChannelKind::Rayleigh, 91)] {
        let mut cfg = bundled("fig9_combined.json");
        cfg.name = format!("combined attack, {kind:?} channels");
        cfg.seed = seed;
        cfg.jammers.iter_mut().for_each(|j| j.channel = kind);
        cfg.spoofers.iter_mut().for_each(|s| s.channel = kind);
        let r = run(&cfg);
        let (b, s) = (summary(&r, Mode::Baseline).success_rate, summary(&r, Mode::Schieber).success_rate);
        pass &= b <= 0.10 && s >= 0.80;
        detail += &format!("{kind:?}: baseline {} schieber {}; ", pct(b), pct(s));
    }
    Verdict::new(pass, detail.trim_end_matches("; ").to_owned())
}

// ---- criterion 8: property suites ----

fn hermitian_eigvecs_desc(g: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let e = g.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..e.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| e.eigenvalues[b].total_cmp(&e.eigenvalues[a]));
    DMatrix::from_fn(g.nrows(), g.ncols(), |r, c| e.eigenvectors[(r, order[c])])
}

fn projector_and_gram_laws(failures: &mut Vec<String>) {
    let codes = all_codes();
    let params = ScenarioParams {
        jammers: vec![JammerSpec { antennas: 3, jsr_db: 30.0, channel: ChannelKind::Rayleigh }],
        code_periods: 12,
        ..ScenarioParams::default()
    };
    let scene = draw_scene(&params, &SatelliteAlmanac::nominal(), 81).unwrap();
    let stream = synthesize(&scene.signals, &codes).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(82);
    let (mut proj_err, mut gram_err, mut ts_err) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..12 {
        let code = &codes[rng.gen_range(0..32)];
        let start = ACQUISITION_OFFSET + rng.gen_range(0..CODE_SAMPLES);
        let f = rng.gen_range(-16..=16) as f64 * 250.0;
        let p = interference_projection(&stream, code, start, f, 4).unwrap().matrix;
        let y = window(&stream, start).unwrap();
        let yt = code_projected_window(&y, code, f);
        let g_t = &yt * yt.adjoint();
        let u = hermitian_eigvecs_desc(&g_t).columns(0, 4).into_owned();
        let scale = p.norm();
        proj_err = proj_err
            .max((&p * &p - &p).norm() / scale)
            .max((p.adjoint() - &p).norm() / scale)
            .max((&p * u).norm());
        let m = matched_vector(&y, code, f);
        let identity = &y * y.adjoint() - &m * m.adjoint() / Complex64::new(CODE_SAMPLES as f64, 0.0);
        gram_err = gram_err.max((&g_t - identity).norm() / g_t.norm());
        let c: Vec<Complex64> = code.samples().iter().map(|&v| Complex64::new(v as f64, 0.0)).collect();
        ts_err = ts_err.max(apply_code_projection(code, &c).iter().map(|v| v.norm()).fold(0.0, f64::max));
    }
    if proj_err > 1e-10 {
        failures.push(format!("projector laws off by {proj_err:e}"));
    }
    if ts_err > 1e-9 {
        failures.push(format!("T_s c = {ts_err:e}"));
    }
    if gram_err > 1e-8 {
        failures.push(format!("rank-1 Gram identity off by {gram_err:e}"));
    }

    // CAF bound on full grids and on directly computed cells
    let mut engine = AcquisitionEngine::new(&stream).unwrap();
    let mut worst = (f64::INFINITY, f64::NEG_INFINITY);
    for code in codes.iter().take(3) {
        for grid in [engine.caf_grid_baseline(code), engine.caf_grid_jass(code, 4).unwrap()] {
            for &v in grid.values() {
                worst = (worst.0.min(v), worst.1.max(v));
            }
        }
        for _ in 0..5 {
            let start = ACQUISITION_OFFSET + rng.gen_range(0..CODE_SAMPLES);
            let f = rng.gen_range(-16..=16) as f64 * 250.0;
            for v in [caf_baseline(&stream, code, start, f).unwrap(), caf_jass(&stream, code, start, f, 4).unwrap()] {
                worst = (worst.0.min(v), worst.1.max(v));
            }
        }
    }
    if !(worst.0 >= 0.0 && worst.1 <= CODE_SAMPLES as f64) {
        failures.push(format!("CAF outside [0, L_c]: {worst:?}"));
    }
}

fn gold_bound(failures: &mut Vec<String>) {
    let codes = all_codes();
    let mut worst = 0i32;
    for a in 0..32 {
        for b in a + 1..32 {
            let (ca, cb) = (codes[a].chips(), codes[b].chips());
            for lag in 0..1023 {
                let s: i32 = (0..1023).map(|k| ca[k] as i32 * cb[(k + lag) % 1023] as i32).sum();
                worst = worst.max(s.abs());
            }
        }
    }
    if worst > 65 {
        failures.push(format!("Gold cross-correlation {worst}/1023"));
    }
}

fn forward_geometry(seed: u64) -> (ReceiverTruth, Vec<(u8, EcefVector)>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let up = random_unit(&mut rng);
    let truth = ReceiverTruth::on_surface(&up, rng.gen_range(0.0..6.28), rng.gen_range(0.0..1e-3));
    let sats = propagate(&SatelliteAlmanac::nominal(), rng.gen_range(0.0..3e7))
        .into_iter()
        .filter(|s| visible(&truth.position, &s.position))
        .map(|s| (s.prn, s.position))
        .collect();
    (truth, sats)
}

fn pairwise_exactness(failures: &mut Vec<String>) {
    let mut worst = 0.0f64;
    let mut positive_c = 0;
    for seed in 0..30 {
        let (truth, sats) = forward_geometry(seed);
        let bias = SPEED_OF_LIGHT * truth.clock_offset;
        let inputs: Vec<PairInput> = sats
            .iter()
            .map(|&(prn, s)| PairInput {
                prn,
                pseudorange: (s - truth.position).norm() + bias,
                direction: local_direction(&truth.position, &truth.orientation, &s).unwrap().unit_vector(),
                satellite: s,
            })
            .collect();
        for a in &inputs {
            for b in &inputs {
                if a.prn == b.prn {
                    continue;
                }
                let rho = (a.satellite - truth.position).norm();
                match pairwise_range(a, b).unwrap() {
                    PairwiseRange::Root { range, c } => {
                        worst = worst.max((range - rho).abs() / rho);
                        positive_c += usize::from(c >= 0.0);
                    }
                    PairwiseRange::Implausible => worst = f64::INFINITY,
                }
            }
        }
    }
    if worst > 1e-6 || positive_c > 0 {
        failures.push(format!("pairwise range error {worst:e}, {positive_c} pairs with c >= 0"));
    }
}

fn clique_oracle(failures: &mut Vec<String>) {
    let mut rng = ChaCha8Rng::seed_from_u64(83);
    for inst in 0..200 {
        let n = rng.gen_range(1..=8);
        let prns: Vec<u8> = (0..n).map(|_| rng.gen_range(1..=5)).collect();
        let p = rng.gen_range(0.2..0.9);
        let mut adj = vec![vec![false; n]; n];
        for i in 0..n {
            for j in i + 1..n {
                let e = rng.gen_bool(p);
                adj[i][j] = e;
                adj[j][i] = e;
            }
        }
        let g = PlausibilityGraph::from_adjacency(prns.clone(), adj);
        let c = greedy_clique(&g, &mut receiver_rng(inst));
        let unique = c.iter().enumerate().all(|(i, &u)| c[..i].iter().all(|&v| prns[u] != prns[v]));
        let maximal = (0..n).all(|v| {
            c.contains(&v) || !c.iter().all(|&u| g.adjacency[u][v] && prns[u] != prns[v])
        });
        if !(g.is_clique(&c) && unique && maximal && c.len() <= max_unique_clique_size(&g) && !c.is_empty()) {
            failures.push(format!("greedy clique invalid on instance {inst}"));
            return;
        }
    }
}

fn positioning_round_trips(failures: &mut Vec<String>) {
    let mut worst = 0.0f64;
    for seed in 0..20 {
        let (truth, sats) = forward_geometry(seed);
        let bias = SPEED_OF_LIGHT * truth.clock_offset;
        let meas: Vec<Measurement> = sats
            .iter()
            .map(|&(_, s)| Measurement { satellite: s, pseudorange: (s - truth.position).norm() + bias })
            .collect();
        for fix in [solve_ls(&meas, DEFAULT_MAX_ITERATIONS), solve_irls(&meas, DEFAULT_MAX_ITERATIONS, default_sigma())] {
            worst = worst.max(fix.map_or(f64::INFINITY, |f| (f.position - truth.position).norm()));
        }
    }
    if worst > 1e-6 {
        failures.push(format!("LS/IRLS round trip error {worst:e} m"));
    }

    // five good satellites plus one pseudorange biased by +50 km, on the
    // first placement; the rate over further placements is reported too
    let outlier = |seed: u64| {
        let (truth, sats) = forward_geometry(seed);
        let bias = SPEED_OF_LIGHT * truth.clock_offset;
        let clean: Vec<Measurement> = sats[..6]
            .iter()
            .map(|&(_, s)| {
                let r = (s - truth.position).norm() + bias;
                Measurement { satellite: s, pseudorange: (r / SAMPLE_RANGE).floor() * SAMPLE_RANGE }
            })
            .collect();
        let err = |m: &[Measurement], irls: bool| {
            let fix =
                if irls { solve_irls(m, DEFAULT_MAX_ITERATIONS, default_sigma()) } else { solve_ls(m, DEFAULT_MAX_ITERATIONS) };
            surface_error(fix.ok().as_ref(), &truth.position)
        };
        let clean_err = err(&clean, true);
        let mut bad = clean.clone();
        bad[0].pseudorange += 50e3;
        (err(&bad, false), err(&bad, true), clean_err)
    };
    let holds = |(ls, irls, clean): (f64, f64, f64)| ls > 10e3 && irls <= 2.0 * clean;
    let placements = 100;
    let rate = (0..placements).filter(|&s| holds(outlier(s))).count() as f64 / placements as f64;
    let first = outlier(0);
    if !holds(first) {
        failures.push(format!(
            "outlier: LS {:.0} m, IRLS {:.1} m, clean {:.1} m (example holds on {} of {placements} placements)",
            first.0,
            first.1,
            first.2,
            pct(rate)
        ));
    }
}

fn surface_invariance(failures: &mut Vec<String>) {
    let mut rng = ChaCha8Rng::seed_from_u64(84);
    let fix_at = |p: EcefVector| PositionFix {
        position: p,
        clock_bias: 0.0,
        iterations: 1,
        converged: true,
        weights: vec![],
        residuals: vec![],
    };
    for _ in 0..100 {
        let o = random_unit(&mut rng) * EARTH_RADIUS;
        let est = o + random_unit(&mut rng) * rng.gen_range(0.0..1e6);
        let k = rng.gen_range(0.1..10.0);
        let a = surface_error(Some(&fix_at(est)), &o);
        let b = surface_error(Some(&fix_at(est * k)), &o);
        if (a - b).abs() > 1e-6 * a.max(1.0) || surface_error(Some(&fix_at(o * k)), &o) > 1e-6 {
            failures.push(format!("surface error not radially invariant: {a} vs {b}"));
            return;
        }
    }
    if surface_error(None, &EcefVector::zeros()) != f64::INFINITY {
        failures.push("missing fix is not +inf".into());
    }
}

fn rerun_determinism(failures: &mut Vec<String>) {
    let params = ScenarioParams {
        jammers: vec![JammerSpec { antennas: 1, jsr_db: 30.0, channel: ChannelKind::Los }],
        ..ScenarioParams::default()
    };
    let scene = draw_scene(&params, &SatelliteAlmanac::nominal(), 85).unwrap();
    let a = run_trial(&scene, Mode::Schieber).unwrap();
    let b = run_trial(&scene, Mode::Schieber).unwrap();
    if !a.same_outcome(&b) || a.error.to_bits() != b.error.to_bits() {
        failures.push("full trial rerun differs".into());
    }
}

fn criterion_8() -> Verdict {
    let t0 = Instant::now();
    let mut failures = Vec::new();
    projector_and_gram_laws(&mut failures);
    gold_bound(&mut failures);
    pairwise_exactness(&mut failures);
    clique_oracle(&mut failures);
    positioning_round_trips(&mut failures);
    surface_invariance(&mut failures);
    rerun_determinism(&mut failures);
    let secs = t0.elapsed().as_secs_f64();
    if secs >= 60.0 {
        failures.push(format!("took {secs:.0} s"));
    }
    let detail = if failures.is_empty() { format!("all property suites hold ({secs:.0} s)") } else { failures.join("; ") };
    Verdict::new(failures.is_empty(), detail)
}

fn main() {
    // `cargo test` passes harness flags such as `--list`; answer them quietly
    let args: Vec<String> = std::env::args().collect();
    if args.iter().any(|a| a == "--list") {
        println!("acceptance: test");
        return;
    }
    let only: Option<Vec<u8>> = std::env::var("ACCEPTANCE_ONLY")
        .ok()
        .map(|s| s.split(',').filter_map(|x| x.trim().parse().ok()).collect());
    let names = [
        "clean-sky equivalence",
        "low-SNR degradation ordering",
        "single jammer",
        "multi-jammer capacity cliff",
        "single-spoofer luck rate",
        "multi-satellite spoofing",
        "combined attack",
        "property suites",
    ];
    let mut shared = Shared::default();
    let mut all_pass = true;
    for (i, name) in names.iter().enumerate() {
        let id = i as u8 + 1;
        if only.as_ref().is_some_and(|o| !o.contains(&id)) {
            continue;
        }
        let v = match id {
            1 => criterion_1(&mut shared),
            2 => criterion_2(&mut shared),
            3 => criterion_3(&mut shared),
            4 => criterion_4(),
            5 => criterion_5(),
            6 => criterion_6(),
            7 => criterion_7(),
            _ => criterion_8(),
        };
        all_pass &= v.pass;
        println!("criterion {id} {} {name}: {}", if v.pass { "PASS" } else { "FAIL" }, v.detail);
    }
    if !all_pass {
        std::process::exit(1);
    }
}
