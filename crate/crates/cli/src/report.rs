//! Result rows, deterministic artifact emission, and digests.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

/// One emitted measurement or inequality check.
///
/// Inequality rows carry `lhs`, `rhs`, and `slack = rhs - lhs`; pure
/// measurements leave them unset.  Timing never appears here so reruns stay
/// byte-identical; the run's wall time goes into the meta sidecar.
#[derive(Clone, Debug, Serialize)]
pub struct ResultRow {
    pub scenario: String,
    pub task: &'static str,
    pub kind: String,
    pub p: Option<f64>,
    pub n_or_t: Option<f64>,
    pub probe: Option<usize>,
    pub value: Option<f64>,
    pub value2: Option<f64>,
    pub lhs: Option<f64>,
    pub rhs: Option<f64>,
    pub slack: Option<f64>,
    pub cert: String,
    pub status: String,
    pub iterations: Option<u64>,
}

impl ResultRow {
    pub fn new(scenario: &str, task: &'static str, kind: &str) -> Self {
        ResultRow {
            scenario: scenario.to_string(),
            task,
            kind: kind.to_string(),
            p: None,
            n_or_t: None,
            probe: None,
            value: None,
            value2: None,
            lhs: None,
            rhs: None,
            slack: None,
            cert: String::new(),
            status: "ok".to_string(),
            iterations: None,
        }
    }

    fn sort_key(&self) -> (String, u64, u64, usize) {
        (
            self.kind.clone(),
            bits(self.p),
            bits(self.n_or_t),
            self.probe.unwrap_or(0),
        )
    }
}

/// Order-preserving bit image of an optional finite float (None sorts first).
fn bits(v: Option<f64>) -> u64 {
    match v {
        None => 0,
        Some(x) => {
            let b = x.to_bits();
            // Flip so that the natural float order matches unsigned order.
            if b >> 63 == 1 {
                !b
            } else {
                b | (1 << 63)
            }
        }
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    match v {
        None => String::new(),
        Some(x) => format!("{x:.12e}"),
    }
}

fn fmt_idx(v: Option<usize>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn fmt_iter(v: Option<u64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn csv_safe(s: &str) -> String {
    s.replace(',', ";").replace(['\n', '\r'], " ")
}

pub const CSV_HEADER: &str =
    "scenario,task,kind,p,n_or_t,probe,value,value2,lhs,rhs,slack,cert,status,iterations";

pub fn to_csv(rows: &[ResultRow]) -> String {
    let mut sorted: Vec<&ResultRow> = rows.iter().collect();
    sorted.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in sorted {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            csv_safe(&r.scenario),
            r.task,
            csv_safe(&r.kind),
            fmt_opt(r.p),
            fmt_opt(r.n_or_t),
            fmt_idx(r.probe),
            fmt_opt(r.value),
            fmt_opt(r.value2),
            fmt_opt(r.lhs),
            fmt_opt(r.rhs),
            fmt_opt(r.slack),
            csv_safe(&r.cert),
            csv_safe(&r.status),
            fmt_iter(r.iterations),
        ));
    }
    out
}

/// Summary constants are maxima over finitely many probes, so they bound the
/// true constants from below; the results document says so explicitly.
pub const CONSTANTS_NOTE: &str = "summary constants are empirical lower bounds over the probe set";

#[derive(Serialize)]
struct ResultsDoc<'a> {
    scenario: &'a str,
    task: &'a str,
    note: &'static str,
    summary: &'a BTreeMap<String, f64>,
    rows: Vec<&'a ResultRow>,
}

pub fn to_results_json(
    scenario: &str,
    task: &'static str,
    rows: &[ResultRow],
    summary: &BTreeMap<String, f64>,
) -> String {
    let mut sorted: Vec<&ResultRow> = rows.iter().collect();
    sorted.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
    let doc = ResultsDoc {
        scenario,
        task,
        note: CONSTANTS_NOTE,
        summary,
        rows: sorted,
    };
    let mut text = serde_json::to_string_pretty(&doc).expect("rows serialize");
    text.push('\n');
    text
}

/// Written artifacts for one scenario run.
pub struct Artifacts {
    pub csv_path: PathBuf,
    pub json_path: PathBuf,
    pub digest: u64,
}

/// FNV-1a over the artifact bytes; cheap, stable, and good enough to compare
/// reruns.
pub fn fnv64(chunks: &[&[u8]]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for chunk in chunks {
        for &b in *chunk {
            h ^= b as u64;
            h = h.wrapping_mul(0x1000_0000_01b3);
        }
    }
    h
}

pub fn write_artifacts(
    out_dir: &Path,
    scenario: &str,
    task: &'static str,
    rows: &[ResultRow],
    summary: &BTreeMap<String, f64>,
) -> std::io::Result<Artifacts> {
    fs::create_dir_all(out_dir)?;
    let csv = to_csv(rows);
    let json = to_results_json(scenario, task, rows, summary);
    let csv_path = out_dir.join(format!("{scenario}.csv"));
    let json_path = out_dir.join(format!("{scenario}.results.json"));
    fs::write(&csv_path, &csv)?;
    fs::write(&json_path, &json)?;
    Ok(Artifacts {
        csv_path,
        json_path,
        digest: fnv64(&[csv.as_bytes(), json.as_bytes()]),
    })
}

#[derive(Serialize)]
pub struct Meta {
    pub scenario: String,
    pub wall_ms: u128,
    pub threads: usize,
}

/// Timing sidecar; excluded from digests so reruns compare clean.
pub fn write_meta(out_dir: &Path, meta: &Meta) -> std::io::Result<()> {
    let path = out_dir.join(format!("{}.meta.json", meta.scenario));
    let mut text = serde_json::to_string_pretty(meta).expect("meta serializes");
    text.push('\n');
    fs::write(path, text)
}
