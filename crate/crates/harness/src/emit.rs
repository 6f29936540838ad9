//! Result files: trials.csv, cdf_<mode>.csv and summary.json.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use arraygnss::pipeline::Mode;
use serde::Serialize;

use crate::config::ScenarioConfig;
use crate::runner::RunResults;
use crate::stats::{CdfTable, ModeSummary, SUCCESS_THRESHOLD};
use crate::HarnessError;

/// Version string baked in at build time.
pub const VERSION: &str = env!("ARRAYGNSS_VERSION");

pub const TRIALS_HEADER: &str =
    "trial,seed,mode,true_x_m,true_y_m,true_z_m,est_x_m,est_y_m,est_z_m,clock_bias_m,error_m,acquired,screened,clique,failure";
pub const CDF_HEADER: &str = "error_m,fraction";

#[derive(Debug, Serialize)]
pub struct Summary<'a> {
    pub version: &'a str,
    pub success_threshold_m: f64,
    pub config: &'a ScenarioConfig,
    pub modes: BTreeMap<String, ModeSummary>,
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_owned()
    }
}

pub fn trials_csv(results: &RunResults) -> String {
    let mut out = String::from(TRIALS_HEADER);
    out.push('\n');
    for row in &results.rows {
        let r = &row.result;
        let (est, bias) = match &r.fix {
            Some(f) => (
                [f.position.x, f.position.y, f.position.z].map(|v| v.to_string()),
                f.clock_bias.to_string(),
            ),
            None => (Default::default(), String::new()),
        };
        let failure = r.failure.as_ref().map(|e| e.to_string()).unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            row.index,
            r.seed,
            r.mode,
            r.truth.x,
            r.truth.y,
            r.truth.z,
            est[0],
            est[1],
            est[2],
            bias,
            r.error,
            r.acquired,
            r.screened,
            r.clique,
            csv_field(&failure)
        );
    }
    out
}

pub fn cdf_csv(cdf: &CdfTable) -> String {
    let mut out = String::from(CDF_HEADER);
    out.push('\n');
    for (e, f) in cdf.points() {
        let _ = writeln!(out, "{e},{f}");
    }
    out
}

pub fn cdfs(results: &RunResults) -> Vec<(Mode, CdfTable)> {
    results.config.modes.iter().map(|&m| (m, CdfTable::new(results.errors(m)))).collect()
}

pub fn summary_json(results: &RunResults) -> String {
    let modes = cdfs(results).iter().map(|(m, c)| (m.to_string(), ModeSummary::from_cdf(c))).collect();
    let s = Summary { version: VERSION, success_threshold_m: SUCCESS_THRESHOLD, config: &results.config, modes };
    serde_json::to_string_pretty(&s).expect("summary serializes") + "\n"
}

/// Writes all result files into `out_dir`, creating it if needed.
pub fn emit(results: &RunResults, out_dir: &Path) -> Result<(), HarnessError> {
    let io = |path: &Path| {
        let path = path.to_owned();
        move |source| HarnessError::Io { path, source }
    };
    fs::create_dir_all(out_dir).map_err(io(out_dir))?;
    let write = |name: &str, text: String| {
        let path = out_dir.join(name);
        fs::write(&path, text).map_err(io(&path))
    };
    write("trials.csv", trials_csv(results))?;
    for (mode, cdf) in cdfs(results) {
        write(&format!("cdf_{mode}.csv"), cdf_csv(&cdf))?;
    }
    write("summary.json", summary_json(results))
}
