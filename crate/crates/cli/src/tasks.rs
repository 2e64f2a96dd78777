//! Task execution: one scenario in, deterministic result rows out.

use std::collections::BTreeMap;

use anyhow::{anyhow, bail, Context};
use ncmax_core::averages::{ergodic_average, littlewood_paley_sum};
use ncmax_core::element::Element;
use ncmax_core::maxnorm::{sup_norm_general, sup_norm_pos, PosSequence, SolverConfig};
use ncmax_core::norms::schatten_norm;
use ncmax_core::superop::SuperOp;
use ncmax_core::weaktype::{chebyshev_oracle, chebyshev_projection, marcinkiewicz_majorant};
use rayon::prelude::*;

use crate::probes::build_probes;
use crate::report::ResultRow;
use crate::scenario::{Scenario, Task};

pub struct RunOutput {
    pub rows: Vec<ResultRow>,
    pub summary: BTreeMap<String, f64>,
}

/// Number of extra averages past `n` that a convergence tail window covers.
const TAIL_WINDOW: usize = 8;

fn apply_power(t: &SuperOp, x: &Element, n: usize) -> anyhow::Result<Element> {
    let mut y = x.clone();
    for _ in 0..n {
        y = t.apply(&y)?;
    }
    Ok(y)
}

fn fmt_p(p: f64) -> String {
    // Grid values are short decimals; Display keeps them readable in keys.
    format!("{p}")
}

/// The two swept families of one probe: running averages and raw members.
struct SweptFamilies {
    grid: Vec<f64>,
    averages: Vec<Element>,
    members: Vec<Element>,
}

/// Everything probe-independent about the scenario's family: the operator at
/// the reference time plus, for continuous sweeps, one operator per grid time.
struct FamilyOps {
    t: SuperOp,
    sampled: Vec<SuperOp>,
}

impl FamilyOps {
    fn build(sc: &Scenario) -> anyhow::Result<Self> {
        if sc.t_grid.is_empty() {
            let t = sc.semigroup.build().context("building the family")?;
            Ok(FamilyOps { t, sampled: Vec::new() })
        } else {
            let mut sampled = Vec::with_capacity(sc.t_grid.len());
            for &time in &sc.t_grid {
                sampled.push(
                    sc.semigroup
                        .build_at(time)
                        .with_context(|| format!("building the family at t = {time}"))?,
                );
            }
            let t = sampled[0].clone();
            Ok(FamilyOps { t, sampled })
        }
    }

    fn sweep(&self, sc: &Scenario, x: &Element) -> anyhow::Result<SweptFamilies> {
        if sc.t_grid.is_empty() {
            let mut averages = Vec::with_capacity(sc.n_grid.len());
            let mut members = Vec::with_capacity(sc.n_grid.len());
            for &n in &sc.n_grid {
                averages.push(ergodic_average(&self.t, x, n)?);
                members.push(apply_power(&self.t, x, n)?);
            }
            Ok(SweptFamilies {
                grid: sc.n_grid.iter().map(|&n| n as f64).collect(),
                averages,
                members,
            })
        } else {
            let mut members = Vec::with_capacity(self.sampled.len());
            for op in &self.sampled {
                members.push(op.apply(x)?);
            }
            // Running Cesaro means of the samples play the role the ergodic
            // averages play in discrete time.
            let mut averages = Vec::with_capacity(members.len());
            let mut sum = Element::zero(x.context());
            for (k, m) in members.iter().enumerate() {
                sum = sum.add(m)?;
                averages.push(sum.scale(1.0 / (k + 1) as f64));
            }
            Ok(SweptFamilies {
                grid: sc.t_grid.clone(),
                averages,
                members,
            })
        }
    }
}

fn error_row(sc: &Scenario, probe: usize, err: &anyhow::Error) -> ResultRow {
    let mut row = ResultRow::new(&sc.id, sc.task.name(), "error");
    row.probe = Some(probe);
    row.status = format!("{err:#}");
    row
}

fn run_over_probes(
    sc: &Scenario,
    probes: &[Element],
    per_probe: impl Fn(usize, &Element) -> anyhow::Result<Vec<ResultRow>> + Sync,
) -> Vec<ResultRow> {
    probes
        .par_iter()
        .enumerate()
        .map(|(i, x)| per_probe(i, x).unwrap_or_else(|e| vec![error_row(sc, i, &e)]))
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect()
}

fn maxconst_rows(
    sc: &Scenario,
    ops: &FamilyOps,
    probes: &[Element],
    cfg: &SolverConfig,
) -> Vec<ResultRow> {
    let cert = ops.t.verify_conditions().summary();
    run_over_probes(sc, probes, |i, x| {
        let fams = ops.sweep(sc, x)?;
        let mut rows = Vec::new();
        for &p in &sc.p_grid {
            let denom = schatten_norm(x, p)?;
            if denom <= 0.0 {
                bail!("probe {i} has zero norm at p = {p}");
            }
            for (k, &g) in fams.grid.iter().enumerate() {
                let mut row = ResultRow::new(&sc.id, sc.task.name(), "norm");
                row.p = Some(p);
                row.n_or_t = Some(g);
                row.probe = Some(i);
                row.value = Some(schatten_norm(&fams.averages[k], p)? / denom);
                row.value2 = Some(schatten_norm(&fams.members[k], p)? / denom);
                row.cert = cert.clone();
                rows.push(row);
            }
            let avg_seq = PosSequence::new(fams.averages.clone())?;
            let pow_seq = PosSequence::new(fams.members.clone())?;
            let avg = sup_norm_pos(&avg_seq, p, cfg)?;
            let pow = sup_norm_pos(&pow_seq, p, cfg)?;
            let min_slack = avg
                .feasibility_slacks
                .iter()
                .chain(pow.feasibility_slacks.iter())
                .fold(f64::INFINITY, |a, &b| a.min(b));
            let mut row = ResultRow::new(&sc.id, sc.task.name(), "ratio");
            row.p = Some(p);
            row.n_or_t = Some(*fams.grid.last().unwrap());
            row.probe = Some(i);
            row.value = Some(avg.value / denom);
            row.value2 = Some(pow.value / denom);
            row.slack = Some(min_slack);
            row.cert = cert.clone();
            row.iterations = Some((avg.iterations + pow.iterations) as u64);
            if !avg.converged || !pow.converged {
                row.status = "solver hit the iteration cap".into();
            }
            rows.push(row);
        }
        Ok(rows)
    })
}

fn symmetric_maxconst_rows(
    sc: &Scenario,
    ops: &FamilyOps,
    probes: &[Element],
    cfg: &SolverConfig,
) -> Vec<ResultRow> {
    let cert = ops.t.verify_conditions().summary();
    run_over_probes(sc, probes, |i, x| {
        let fams = ops.sweep(sc, x)?;
        let mut rows = Vec::new();
        for &p in &sc.p_grid {
            let denom = schatten_norm(x, p)?;
            if denom <= 0.0 {
                bail!("probe {i} has zero norm at p = {p}");
            }
            for (k, &g) in fams.grid.iter().enumerate() {
                let mut row = ResultRow::new(&sc.id, sc.task.name(), "norm");
                row.p = Some(p);
                row.n_or_t = Some(g);
                row.probe = Some(i);
                row.value = Some(schatten_norm(&fams.averages[k], p)? / denom);
                row.value2 = Some(schatten_norm(&fams.members[k], p)? / denom);
                row.cert = cert.clone();
                rows.push(row);
            }
            for (kind, family) in [("sandwich-avg", &fams.averages), ("sandwich-pow", &fams.members)]
            {
                let (lo, hi) = sup_norm_general(family, p, cfg)?;
                let mut row = ResultRow::new(&sc.id, sc.task.name(), kind);
                row.p = Some(p);
                row.n_or_t = Some(*fams.grid.last().unwrap());
                row.probe = Some(i);
                row.value = Some(hi / denom);
                row.value2 = Some(lo / denom);
                row.lhs = Some(lo);
                row.rhs = Some(hi);
                row.slack = Some(hi - lo);
                row.cert = cert.clone();
                rows.push(row);
            }
        }
        Ok(rows)
    })
}

fn convergence_rows(
    sc: &Scenario,
    ops: &FamilyOps,
    probes: &[Element],
    cfg: &SolverConfig,
) -> anyhow::Result<Vec<ResultRow>> {
    let t = &ops.t;
    let gamma = t.spectral_gap()?;
    let fixed = t.fixed_point_projection()?;
    let cert = t.verify_conditions().summary();
    let mut rows = vec![{
        let mut head = ResultRow::new(&sc.id, sc.task.name(), "gap");
        head.value = Some(gamma);
        head.cert = cert.clone();
        head
    }];
    rows.extend(run_over_probes(sc, probes, |i, x| {
        let fx = fixed.apply(x)?;
        let dev0 = schatten_norm(&x.sub(&fx)?, 2.0)?;
        let mut rows = Vec::new();
        for &n in &sc.n_grid {
            let drift = apply_power(t, x, n)?.sub(&fx)?;
            let lhs = schatten_norm(&drift, 2.0)?;
            let rhs = (1.0 - gamma).powi(n as i32) * dev0 * (1.0 + 1e-8);
            let mut row = ResultRow::new(&sc.id, sc.task.name(), "decay2");
            row.n_or_t = Some(n as f64);
            row.probe = Some(i);
            row.lhs = Some(lhs);
            row.rhs = Some(rhs);
            row.slack = Some(rhs - lhs);
            row.cert = cert.clone();
            rows.push(row);
        }
        for &p in &sc.p_grid {
            let denom = schatten_norm(x, p)?;
            if denom <= 0.0 {
                bail!("probe {i} has zero norm at p = {p}");
            }
            for &n in &sc.n_grid {
                let mut window = Vec::with_capacity(TAIL_WINDOW + 1);
                for k in n..=n + TAIL_WINDOW {
                    window.push(ergodic_average(t, x, k)?.sub(&fx)?);
                }
                let (_, hi) = sup_norm_general(&window, p, cfg)?;
                let mut row = ResultRow::new(&sc.id, sc.task.name(), "tail");
                row.p = Some(p);
                row.n_or_t = Some(n as f64);
                row.probe = Some(i);
                row.value = Some(hi);
                row.value2 = Some(hi / denom);
                row.cert = cert.clone();
                rows.push(row);
            }
        }
        Ok(rows)
    }));
    Ok(rows)
}

/// Dyadic level ladder around the trace-norm majorant of the family.
fn level_ladder(base: f64, len: usize) -> Vec<i32> {
    let mid = if base > 0.0 {
        base.log2().floor() as i32
    } else {
        0
    };
    (0..len as i32).map(|d| mid - 1 + d).collect()
}

fn weaktype_rows(
    sc: &Scenario,
    ops: &FamilyOps,
    probes: &[Element],
    cfg: &SolverConfig,
) -> Vec<ResultRow> {
    let t = &ops.t;
    let cert = t.verify_conditions().summary();
    run_over_probes(sc, probes, |i, x| {
        let mut items = Vec::with_capacity(sc.n_grid.len());
        for &n in &sc.n_grid {
            items.push(ergodic_average(t, x, n)?);
        }
        let family = PosSequence::new(items)?;
        let base = sup_norm_pos(&family, 1.0, cfg)?.value;
        let mut rows = Vec::new();
        for k in level_ladder(base, 4) {
            let lambda = 2.0f64.powi(k);
            let w = chebyshev_projection(&family, lambda, cfg)?;
            let mut row = ResultRow::new(&sc.id, sc.task.name(), "witness");
            row.n_or_t = Some(lambda);
            row.probe = Some(i);
            row.lhs = Some(w.compression_bound);
            row.rhs = Some(lambda * (1.0 + 1e-8));
            row.slack = Some(lambda * (1.0 + 1e-8) - w.compression_bound);
            row.value = Some(w.tail_trace);
            row.value2 = Some(w.achieved_constant);
            row.cert = cert.clone();
            rows.push(row);

            let mut row = ResultRow::new(&sc.id, sc.task.name(), "tail-trace");
            row.n_or_t = Some(lambda);
            row.probe = Some(i);
            row.lhs = Some(w.tail_trace);
            row.rhs = Some(w.majorant_trace / lambda);
            row.slack = Some(w.majorant_trace / lambda - w.tail_trace);
            row.cert = cert.clone();
            rows.push(row);
        }
        Ok(rows)
    })
}

fn marcinkiewicz_rows(
    sc: &Scenario,
    ops: &FamilyOps,
    probes: &[Element],
    cfg: &SolverConfig,
) -> Vec<ResultRow> {
    let t = &ops.t;
    let cert = t.verify_conditions().summary();
    run_over_probes(sc, probes, |i, x| {
        let mut items = Vec::with_capacity(sc.n_grid.len());
        for &n in &sc.n_grid {
            items.push(ergodic_average(t, x, n)?);
        }
        let family = PosSequence::new(items)?;
        let size = family
            .items()
            .iter()
            .map(|y| schatten_norm(y, 1.0))
            .try_fold(0.0f64, |a, r| r.map(|v| a.max(v)))?;
        let base = sup_norm_pos(&family, 1.0, cfg)?.value;
        let oracle = chebyshev_oracle(&family, cfg)?;
        let mut rows = Vec::new();
        for k_sel in level_ladder(base, 2) {
            let lambda = 2.0f64.powi(k_sel);
            for &p in &sc.p_grid {
                let (e_out, value, dec) = marcinkiewicz_majorant(&family, lambda, p, &oracle, cfg)?;
                let s = dec.s;
                let idx = dec
                    .idx(k_sel)
                    .ok_or_else(|| anyhow!("selected level fell outside the window"))?;
                let bnorm = schatten_norm(&dec.b[idx], p)?;
                let compressed_sup = if bnorm > 1e-300 { value / bnorm } else { 0.0 };
                let bound = 2.0f64.powf(k_sel as f64 * (1.0 - s)) / (1.0 - s);
                let mut row = ResultRow::new(&sc.id, sc.task.name(), "majorant");
                row.p = Some(p);
                row.n_or_t = Some(lambda);
                row.probe = Some(i);
                row.value = Some(value);
                row.value2 = Some(compressed_sup / bound);
                row.cert = cert.clone();
                if !e_out.is_projection() {
                    row.status = "combined witness failed the projection check".into();
                }
                rows.push(row);

                for k in dec.k_min..=dec.k_max {
                    let j = dec.idx(k).expect("window index");
                    let tail: f64 = (k..=dec.k_max)
                        .map(|m| {
                            let jm = dec.idx(m).expect("window index");
                            dec.level_constants[jm] * 2.0f64.powi(-m) * size
                        })
                        .sum();
                    let lhs = dec.g[j].trace().re;
                    let mut row = ResultRow::new(&sc.id, sc.task.name(), "level");
                    row.p = Some(p);
                    row.n_or_t = Some(lambda);
                    row.probe = Some(i);
                    row.value = Some(k as f64);
                    row.lhs = Some(lhs);
                    row.rhs = Some(tail);
                    row.slack = Some(tail - lhs);
                    row.cert = cert.clone();
                    rows.push(row);
                }
            }
        }
        Ok(rows)
    })
}

fn littlewood_rows(sc: &Scenario, ops: &FamilyOps, probes: &[Element]) -> Vec<ResultRow> {
    let t = &ops.t;
    let cert = t.verify_conditions().summary();
    let cutoff = *sc.n_grid.last().expect("validated nonempty");
    run_over_probes(sc, probes, |i, x| {
        let l2 = schatten_norm(x, 2.0)?;
        let mut rows = Vec::new();
        for m in 1..=3usize {
            let ss = littlewood_paley_sum(t, x, m, cutoff)?;
            let rhs = ss.constant * l2 * l2;
            let mut row = ResultRow::new(&sc.id, sc.task.name(), "square");
            row.n_or_t = Some(m as f64);
            row.probe = Some(i);
            row.value = Some(ss.sum);
            row.value2 = Some(ss.constant);
            row.lhs = Some(ss.sum);
            row.rhs = Some(rhs);
            row.slack = Some(rhs - ss.sum);
            row.cert = cert.clone();
            rows.push(row);
        }
        Ok(rows)
    })
}

fn fold_max(map: &mut BTreeMap<String, f64>, key: String, v: Option<f64>) {
    if let Some(v) = v {
        let e = map.entry(key).or_insert(f64::NEG_INFINITY);
        *e = e.max(v);
    }
}

fn summarize(sc: &Scenario, rows: &[ResultRow]) -> BTreeMap<String, f64> {
    let mut summary = BTreeMap::new();
    match sc.task {
        Task::Maxconst => {
            for r in rows.iter().filter(|r| r.kind == "ratio") {
                let p = fmt_p(r.p.unwrap_or(f64::NAN));
                fold_max(&mut summary, format!("c_hat_avg_p{p}"), r.value);
                fold_max(&mut summary, format!("c_hat_pow_p{p}"), r.value2);
            }
        }
        Task::SymmetricMaxconst => {
            for r in rows.iter().filter(|r| r.kind.starts_with("sandwich")) {
                let p = fmt_p(r.p.unwrap_or(f64::NAN));
                let fam = if r.kind.ends_with("avg") { "avg" } else { "pow" };
                fold_max(&mut summary, format!("c_hat_sym_{fam}_p{p}"), r.value);
            }
        }
        Task::Convergence => {
            for r in rows.iter().filter(|r| r.kind == "gap") {
                if let Some(g) = r.value {
                    summary.insert("gamma".to_string(), g);
                }
            }
            // The headline tail value sits at the largest grid point.
            if let Some(&n_last) = sc.n_grid.last() {
                for r in rows.iter().filter(|r| r.kind == "tail") {
                    if r.n_or_t == Some(n_last as f64) {
                        let p = fmt_p(r.p.unwrap_or(f64::NAN));
                        fold_max(&mut summary, format!("tail_final_p{p}"), r.value2);
                    }
                }
            }
        }
        Task::Weaktype => {
            for r in rows.iter().filter(|r| r.kind == "witness") {
                fold_max(&mut summary, "c_weak".to_string(), r.value2);
            }
        }
        Task::Marcinkiewicz => {
            for r in rows.iter().filter(|r| r.kind == "majorant") {
                let p = fmt_p(r.p.unwrap_or(f64::NAN));
                fold_max(&mut summary, format!("kappa_hat_p{p}"), r.value2);
                fold_max(&mut summary, "kappa_hat".to_string(), r.value2);
            }
        }
        Task::Littlewood => {
            for r in rows.iter().filter(|r| r.kind == "square") {
                if let Some(m) = r.n_or_t {
                    fold_max(&mut summary, format!("c_hat_m{}", m as i64), r.value2);
                }
            }
        }
    }
    summary
}

/// Runs a validated scenario; failures inside one probe become error rows
/// while the rest of the run continues.
pub fn execute(sc: &Scenario, seed_override: Option<u64>) -> anyhow::Result<RunOutput> {
    sc.validate()?;
    let ops = FamilyOps::build(sc)?;
    let ctx = ops.t.context().clone();
    let probes = build_probes(&sc.probes, &ctx, seed_override)?;
    let cfg = &sc.solver;
    let rows = match sc.task {
        Task::Maxconst => maxconst_rows(sc, &ops, &probes, cfg),
        Task::SymmetricMaxconst => symmetric_maxconst_rows(sc, &ops, &probes, cfg),
        Task::Convergence => convergence_rows(sc, &ops, &probes, cfg)?,
        Task::Weaktype => weaktype_rows(sc, &ops, &probes, cfg),
        Task::Marcinkiewicz => marcinkiewicz_rows(sc, &ops, &probes, cfg),
        Task::Littlewood => littlewood_rows(sc, &ops, &probes),
    };
    let summary = summarize(sc, &rows);
    Ok(RunOutput { rows, summary })
}
