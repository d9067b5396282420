use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{slope, BenchError, Experiment, ExperimentResult, SchemeId, AGG_METRICS};
use crate::ilp::hex_digest;

/// Breakdown fields written per row, prefixed with `sum_`.
const BREAKDOWN: [&str; 14] = [
    "wireless_ms",
    "upstream_ms",
    "compute_ms",
    "matching_ms",
    "transfer_ms",
    "access_ms",
    "miss_ms",
    "sync_ms",
    "mobility_ms",
    "latency_ms",
    "transmit_w",
    "cpu_w",
    "power_w",
    "quality",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmittedFile {
    pub name: String,
    pub bytes: usize,
    pub sha256: String,
}

/// Everything needed to rerun a sweep and check its outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub experiment: String,
    pub code_version: String,
    pub spec_sha256: String,
    pub seeds: Vec<u64>,
    pub spec: super::SweepSpec,
    pub files: Vec<EmittedFile>,
}

fn num(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn rows_csv(res: &ExperimentResult) -> Result<Vec<u8>, BenchError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<String> = [
        "experiment",
        "value",
        "seed",
        "scheme",
        "method",
        "status",
        "failed_requests",
        "audit_violations",
        "n_requests",
        "n_targets",
        "nodes",
        "objective",
        "delay_ms",
        "power_w",
        "mean_ssim",
    ]
    .map(String::from)
    .to_vec();
    header.extend(BREAKDOWN.iter().map(|f| format!("sum_{f}")));
    w.write_record(&header)?;
    for row in &res.rows {
        let mut rec = vec![
            res.spec.experiment.name().to_string(),
            row.value.to_string(),
            row.seed.to_string(),
            row.scheme.name().to_string(),
            row.method.clone(),
            row.status.clone(),
            row.failed_requests.iter().map(|r| r.to_string()).collect::<Vec<_>>().join(";"),
            row.audit_violations.to_string(),
            row.n_requests.to_string(),
            row.n_targets.to_string(),
            row.nodes.to_string(),
            num(row.objective()),
            num(row.delay_ms()),
            num(row.power_w()),
            num(row.mean_ssim()),
        ];
        let fields = row.metrics.map(|m| serde_json::to_value(m).expect("plain struct"));
        for f in BREAKDOWN {
            rec.push(num(fields.as_ref().and_then(|v| v.get(f)).and_then(Value::as_f64)));
        }
        w.write_record(&rec)?;
    }
    w.into_inner().map_err(|e| BenchError::Io { path: "rows".into(), source: e.into_error() })
}

fn agg_csv(res: &ExperimentResult) -> Result<Vec<u8>, BenchError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<String> = ["experiment", "value", "scheme", "n", "n_failed"].map(String::from).to_vec();
    for m in AGG_METRICS {
        header.push(format!("{m}_mean"));
        header.push(format!("{m}_std"));
    }
    w.write_record(&header)?;
    for a in &res.aggregates {
        let mut rec = vec![
            res.spec.experiment.name().to_string(),
            a.value.to_string(),
            a.scheme.name().to_string(),
            a.n.to_string(),
            a.n_failed.to_string(),
        ];
        for s in &a.stats {
            rec.push(num(s.map(|s| s.0)));
            rec.push(num(s.map(|s| s.1)));
        }
        w.write_record(&rec)?;
    }
    w.into_inner().map_err(|e| BenchError::Io { path: "agg".into(), source: e.into_error() })
}

fn cell(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.6}")).unwrap_or_else(|| "NaN".into())
}

/// Columns: swept value, then one mean of `metric` per scheme.
fn series_dat(res: &ExperimentResult, title: &str, metric: &str) -> String {
    let schemes = &res.spec.schemes;
    let mut out = format!("# {title}\n# {}", res.spec.experiment.value_label());
    for s in schemes {
        let _ = write!(out, " {}", s.name());
    }
    out.push('\n');
    let cols: Vec<Vec<Option<f64>>> = schemes.iter().map(|&s| res.series(s, metric)).collect();
    for (i, v) in res.spec.values.iter().enumerate() {
        out.push_str(&v.to_string());
        for c in &cols {
            let _ = write!(out, " {}", cell(c[i]));
        }
        out.push('\n');
    }
    out
}

/// Mean and std per scheme, one block per value.
fn table_dat(res: &ExperimentResult, title: &str, metric: &str) -> String {
    let mut out = format!("# {title}\n# {} scheme mean std n n_failed\n", res.spec.experiment.value_label());
    let k = AGG_METRICS.iter().position(|&m| m == metric).expect("known metric");
    for a in &res.aggregates {
        let s = a.stats[k];
        let _ = writeln!(
            out,
            "{} {} {} {} {} {}",
            a.value,
            a.scheme.name(),
            cell(s.map(|s| s.0)),
            cell(s.map(|s| s.1)),
            a.n,
            a.n_failed
        );
    }
    out
}

/// Delay and objective gain of Optim over each baseline per value, in %.
fn gains_csv(res: &ExperimentResult) -> Option<String> {
    if !res.spec.schemes.contains(&SchemeId::Optim) {
        return None;
    }
    let optim = res.series(SchemeId::Optim, "delay_ms");
    let mut out = format!("{},baseline,delay_gain_pct\n", res.spec.experiment.value_label());
    for &b in res.spec.schemes.iter().filter(|&&s| s != SchemeId::Optim) {
        for (i, base) in res.series(b, "delay_ms").into_iter().enumerate() {
            let gain = optim[i].zip(base).map(|(o, b)| 100.0 * (b - o) / b);
            let _ = writeln!(
                out,
                "{},{},{}",
                res.spec.values[i],
                b.name(),
                gain.map(|g| format!("{g:.4}")).unwrap_or_default()
            );
        }
    }
    Some(out)
}

fn slopes_dat(res: &ExperimentResult) -> String {
    let mut out = String::from("# delay slope per unit of background size\n# scheme slope_ms_per_mbit pct_per_mbit\n");
    for &s in &res.spec.schemes {
        let pts: Vec<(f64, f64)> =
            res.spec.values.iter().zip(res.series(s, "delay_ms")).filter_map(|(&v, d)| d.map(|d| (v, d))).collect();
        let (xs, ys): (Vec<f64>, Vec<f64>) = pts.iter().copied().unzip();
        let k = slope(&xs, &ys);
        let pct = k.zip(ys.first()).map(|(k, y0)| 100.0 * k / y0);
        let _ = writeln!(out, "{} {} {}", s.name(), cell(k), cell(pct));
    }
    out
}

fn figure_files(res: &ExperimentResult) -> Vec<(String, String)> {
    let mut files = Vec::new();
    match res.spec.experiment {
        Experiment::MuSweep => {
            files.push((
                "fig3_delay_vs_mu.dat".into(),
                series_dat(res, "mean delay per request (ms) vs mu", "delay_ms"),
            ));
            let mut t = series_dat(res, "mean SSIM vs mu", "mean_ssim");
            t.push_str("\n\n");
            t.push_str(&series_dat(res, "mean power per request (W) vs mu", "power_w"));
            files.push(("table1_ssim_power_vs_mu.dat".into(), t));
        }
        Experiment::BackSizeSweep => {
            files.push((
                "fig4_delay_vs_back_size.dat".into(),
                series_dat(res, "mean delay per request (ms) vs background model size (Mbit)", "delay_ms"),
            ));
            files.push(("fig4_slopes.dat".into(), slopes_dat(res)));
        }
        Experiment::NoMobility => {
            files.push((
                "table2_no_mobility.dat".into(),
                table_dat(res, "mean delay per request (ms), no mobility", "delay_ms"),
            ));
        }
        Experiment::Congestion => {
            files.push((
                "congestion_delay_vs_vm_slots.dat".into(),
                series_dat(res, "mean delay per request (ms) vs VM slots per EC", "delay_ms"),
            ));
        }
    }
    if let Some(g) = gains_csv(res) {
        files.push((format!("{}_gains.csv", res.spec.experiment.name()), g));
    }
    files
}

/// Write rows, aggregates, figure data and a manifest into `out_dir`.
/// Output bytes depend only on the result, so reruns are byte-identical.
pub fn emit_results(res: &ExperimentResult, out_dir: &Path) -> Result<Manifest, BenchError> {
    if res.rows.is_empty() {
        return Err(BenchError::Spec("result has no rows".into()));
    }
    let io = |path: &Path| {
        let path = path.display().to_string();
        move |source| BenchError::Io { path, source }
    };
    fs::create_dir_all(out_dir).map_err(io(out_dir))?;
    let name = res.spec.experiment.name();
    let mut contents: Vec<(String, Vec<u8>)> =
        vec![(format!("{name}_rows.csv"), rows_csv(res)?), (format!("{name}_agg.csv"), agg_csv(res)?)];
    contents.extend(figure_files(res).into_iter().map(|(n, s)| (n, s.into_bytes())));
    let mut files = Vec::new();
    for (file, bytes) in contents {
        let path = out_dir.join(&file);
        fs::write(&path, &bytes).map_err(io(&path))?;
        files.push(EmittedFile { name: file, bytes: bytes.len(), sha256: hex_digest(&bytes) });
    }
    let spec_text = serde_json::to_string(&res.spec)?;
    let manifest = Manifest {
        experiment: name.into(),
        code_version: env!("CARGO_PKG_VERSION").into(),
        spec_sha256: hex_digest(spec_text.as_bytes()),
        seeds: res.spec.seeds.clone(),
        spec: res.spec.clone(),
        files,
    };
    let path = out_dir.join("manifest.json");
    fs::write(&path, serde_json::to_string_pretty(&manifest)? + "\n").map_err(io(&path))?;
    Ok(manifest)
}
