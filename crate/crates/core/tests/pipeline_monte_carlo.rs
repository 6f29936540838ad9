//! Monte-Carlo checks of the two receivers on realized scenes.

use arraygnss::acquisition::{AcquisitionEngine, DEFAULT_NULLED, DEFAULT_TAU, DEFAULT_TAU_J};
use arraygnss::geometry::SatelliteAlmanac;
use arraygnss::pipeline::{Mode, Receiver, ReceiverParams};
use arraygnss::scene::{draw_scene, JammerSpec, ScenarioParams};
use arraygnss::synth::{all_codes, synthesize, ChannelKind};

const TRIALS: u64 = 20;

fn run(params: &ScenarioParams, modes: &[Mode], seed0: u64) -> Vec<Vec<arraygnss::pipeline::TrialResult>> {
    let almanac = SatelliteAlmanac::nominal();
    let mut rx = Receiver::new(ReceiverParams::default());
    (0..TRIALS)
        .map(|i| {
            let scene = draw_scene(params, &almanac, seed0 + i).unwrap();
            rx.run(&scene, modes).unwrap()
        })
        .collect()
}

#[test]
fn attack_free_schieber_forms_cliques() {
    let res = run(&ScenarioParams::default(), &[Mode::Schieber], 1000);
    let ok = res.iter().filter(|r| r[0].clique >= 4 && r[0].error.is_finite()).count();
    for r in &res {
        assert!(r[0].clique <= r[0].screened && r[0].screened <= r[0].acquired);
    }
    // >= 95% of 20 trials
    assert!(ok >= 19, "{ok}/{TRIALS}");
}

#[test]
fn single_jammer_separates_the_receivers() {
    let params = ScenarioParams {
        jammers: vec![JammerSpec { antennas: 1, jsr_db: 30.0, channel: ChannelKind::Los }],
        ..ScenarioParams::default()
    };
    let res = run(&params, &Mode::ALL, 2000);
    let base_fail = res.iter().filter(|r| r[0].error > 10e3).count();
    let sch_ok = res.iter().filter(|r| r[1].error <= 200.0).count();
    assert!(base_fail >= 18, "baseline failed {base_fail}/{TRIALS}");
    assert!(sch_ok >= 18, "schieber within 200 m {sch_ok}/{TRIALS}");
}

#[test]
fn attack_free_acquisitions_agree() {
    let almanac = SatelliteAlmanac::nominal();
    let codes = all_codes();
    let (mut matched, mut total) = (0, 0);
    for seed in 0..3 {
        let scene = draw_scene(&ScenarioParams::default(), &almanac, 3000 + seed).unwrap();
        let stream = synthesize(&scene.signals, &codes).unwrap();
        let mut engine = AcquisitionEngine::new(&stream).unwrap();
        for code in &codes {
            let Some(b) = engine.acquire_baseline(code, DEFAULT_TAU) else {
                continue;
            };
            total += 1;
            let peaks = engine.acquire_peaks(code, DEFAULT_TAU_J, DEFAULT_NULLED).unwrap();
            if peaks.first().is_some_and(|p| p.code_phase == b.code_phase && p.doppler == b.doppler) {
                matched += 1;
            }
        }
    }
    assert!(total > 0);
    assert!(matched as f64 >= 0.95 * total as f64, "{matched}/{total}");
}
