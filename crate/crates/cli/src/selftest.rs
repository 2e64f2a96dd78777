//! Built-in scenario battery: small, fast runs covering every task and most
//! family kinds, with output stable enough to compare byte for byte.

use std::path::Path;
use std::time::Instant;

use anyhow::Context;

use crate::report::{fnv64, write_artifacts, write_meta, Meta};
use crate::scenario::Scenario;
use crate::tasks::execute;

/// Identifier and scenario document for every built-in run.
pub const BUILTIN: &[(&str, &str)] = &[
    (
        "chain-maxconst",
        r#"{
        "id": "chain-maxconst",
        "semigroup": {"kind": "expectation-mixture", "dim": 4,
                      "partitions": [[[0], [1], [2], [3]],
                                     [[0, 1], [2, 3]],
                                     [[0, 1, 2, 3]]],
                      "alphas": [0.0, 0.4, 0.8]},
        "probes": {"count": 3, "seed": 2024, "rule": "psd"},
        "p_grid": [1.0, 2.0],
        "n_grid": [0, 1, 2, 4],
        "task": "maxconst"
    }"#,
    ),
    (
        "line-symmetric",
        r#"{
        "id": "line-symmetric",
        "semigroup": {"kind": "schur",
                      "points": [[0.0], [1.0], [2.0], [3.5]],
                      "t": 0.7, "heat": "gauss"},
        "probes": {"count": 3, "seed": 7, "rule": "hermitian"},
        "p_grid": [1.5, 2.0],
        "t_grid": [0.3, 0.6, 1.2],
        "task": "symmetric-maxconst"
    }"#,
    ),
    (
        "chain-convergence",
        r#"{
        "id": "chain-convergence",
        "semigroup": {"kind": "expectation-mixture", "dim": 3,
                      "partitions": [[[0], [1], [2]], [[0, 1, 2]]],
                      "alphas": [0.0, 0.5]},
        "probes": {"count": 3, "seed": 5, "rule": "hermitian"},
        "p_grid": [2.0],
        "n_grid": [0, 1, 2, 3, 5, 8],
        "task": "convergence"
    }"#,
    ),
    (
        "lattice-weaktype",
        r#"{
        "id": "lattice-weaktype",
        "semigroup": {"kind": "tensor",
                      "kernel": [[0.5, 0.3, 0.1],
                                 [0.3, 0.4, 0.2],
                                 [0.1, 0.2, 0.6]],
                      "fiber_dim": 2},
        "probes": {"count": 3, "seed": 11, "rule": "psd"},
        "p_grid": [1.0],
        "n_grid": [0, 1, 3, 6],
        "task": "weaktype"
    }"#,
    ),
    (
        "lattice-majorant",
        r#"{
        "id": "lattice-majorant",
        "semigroup": {"kind": "tensor",
                      "kernel": [[0.5, 0.3, 0.1],
                                 [0.3, 0.4, 0.2],
                                 [0.1, 0.2, 0.6]],
                      "fiber_dim": 2},
        "probes": {"count": 2, "seed": 13, "rule": "psd"},
        "p_grid": [2.0],
        "n_grid": [0, 2, 4],
        "task": "marcinkiewicz"
    }"#,
    ),
    (
        "ring-littlewood",
        r#"{
        "id": "ring-littlewood",
        "semigroup": {"kind": "cyclic", "order": 5, "t": 0.4, "heat": "poisson"},
        "probes": {"count": 3, "seed": 17, "rule": "hermitian"},
        "p_grid": [2.0],
        "n_grid": [0, 2, 8],
        "task": "littlewood"
    }"#,
    ),
    (
        "flow-maxconst",
        r#"{
        "id": "flow-maxconst",
        "semigroup": {"kind": "hamiltonian",
                      "generator": {"blocks": [{"dim": 3, "weight": 1.0}],
                                    "re": [[0.0, 1.0, 0.0],
                                           [1.0, 0.5, 0.3],
                                           [0.0, 0.3, 2.0]],
                                    "im": [[0.0, 0.0, 0.0],
                                           [0.0, 0.0, 0.0],
                                           [0.0, 0.0, 0.0]]},
                      "t": 0.5, "heat": "gauss"},
        "probes": {"count": 2, "seed": 23, "rule": "psd"},
        "p_grid": [1.5],
        "t_grid": [0.25, 0.5, 1.0],
        "task": "maxconst"
    }"#,
    ),
];

pub struct SelftestReport {
    /// One printable line per scenario: id, row count, error count, digest.
    pub lines: Vec<String>,
    /// FNV digest over the per-scenario digests, printed as the last line.
    pub combined: u64,
}

pub fn run_selftest(out_dir: &Path, threads: usize) -> anyhow::Result<SelftestReport> {
    let mut lines = Vec::with_capacity(BUILTIN.len());
    let mut digests = Vec::with_capacity(BUILTIN.len());
    for (name, json) in BUILTIN {
        let sc = Scenario::from_json(json).with_context(|| format!("builtin scenario {name}"))?;
        let started = Instant::now();
        let out = execute(&sc, None).with_context(|| format!("running {name}"))?;
        let art = write_artifacts(out_dir, &sc.id, sc.task.name(), &out.rows, &out.summary)
            .with_context(|| format!("writing artifacts for {name}"))?;
        write_meta(
            out_dir,
            &Meta {
                scenario: sc.id.clone(),
                wall_ms: started.elapsed().as_millis(),
                threads,
            },
        )?;
        let errors = out.rows.iter().filter(|r| r.kind == "error").count();
        lines.push(format!(
            "{name}: rows={} errors={errors} digest={:016x}",
            out.rows.len(),
            art.digest
        ));
        digests.push(art.digest.to_be_bytes());
    }
    let chunks: Vec<&[u8]> = digests.iter().map(|d| d.as_slice()).collect();
    Ok(SelftestReport {
        lines,
        combined: fnv64(&chunks),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_scenarios_all_validate() {
        for (name, json) in BUILTIN {
            let sc = Scenario::from_json(json).unwrap_or_else(|e| panic!("{name}: {e:#}"));
            assert_eq!(&sc.id, name, "scenario id should match its registry key");
        }
    }

    #[test]
    fn selftest_is_reproducible_in_process() {
        let dir1 = tempfile::tempdir().unwrap();
        let dir2 = tempfile::tempdir().unwrap();
        let r1 = run_selftest(dir1.path(), 1).unwrap();
        let r2 = run_selftest(dir2.path(), 1).unwrap();
        assert_eq!(r1.lines, r2.lines);
        assert_eq!(r1.combined, r2.combined);
        for (name, _) in BUILTIN {
            let a = std::fs::read(dir1.path().join(format!("{name}.csv"))).unwrap();
            let b = std::fs::read(dir2.path().join(format!("{name}.csv"))).unwrap();
            assert_eq!(a, b, "{name} csv differs between runs");
        }
    }
}
