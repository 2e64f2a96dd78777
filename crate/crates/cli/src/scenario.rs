//! Scenario documents: what family to build, which probes to throw at it,
//! and which sweep to run.

use anyhow::{bail, Context};
use ncmax_core::maxnorm::SolverConfig;
use ncmax_core::serial::{ElementRepr, SuperOpSpec};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    Maxconst,
    SymmetricMaxconst,
    Convergence,
    Weaktype,
    Marcinkiewicz,
    Littlewood,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::Maxconst => "maxconst",
            Task::SymmetricMaxconst => "symmetric-maxconst",
            Task::Convergence => "convergence",
            Task::Weaktype => "weaktype",
            Task::Marcinkiewicz => "marcinkiewicz",
            Task::Littlewood => "littlewood",
        }
    }

    /// Tasks whose probe families must consist of positive elements.
    pub fn needs_positive_probes(self) -> bool {
        matches!(self, Task::Maxconst | Task::Weaktype | Task::Marcinkiewicz)
    }
}

/// How probe elements are produced.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProbeRule {
    /// Squares of seeded random hermitians, normalized to operator norm 1.
    Psd,
    /// Seeded random hermitians, normalized to operator norm 1.
    Hermitian,
    /// Explicit matrix literals, used as given.
    Listed(Vec<ElementRepr>),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeSet {
    pub count: usize,
    pub seed: u64,
    pub rule: ProbeRule,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub id: String,
    pub semigroup: SuperOpSpec,
    pub probes: ProbeSet,
    pub p_grid: Vec<f64>,
    #[serde(default)]
    pub n_grid: Vec<usize>,
    #[serde(default)]
    pub t_grid: Vec<f64>,
    pub task: Task,
    #[serde(default)]
    pub solver: SolverConfig,
}

impl Scenario {
    pub fn from_json(text: &str) -> anyhow::Result<Self> {
        let sc: Scenario = serde_json::from_str(text).context("scenario does not match schema")?;
        sc.validate()?;
        Ok(sc)
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        if self.id.is_empty()
            || !self
                .id
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')
        {
            bail!(
                "scenario id must be nonempty and use only letters, digits, '-', '_', got {:?}",
                self.id
            );
        }
        if self.probes.count == 0 {
            bail!("probe set is empty");
        }
        if let ProbeRule::Listed(items) = &self.probes.rule {
            if items.len() != self.probes.count {
                bail!(
                    "listed probe rule carries {} elements but count is {}",
                    items.len(),
                    self.probes.count
                );
            }
        }
        if self.p_grid.is_empty() {
            bail!("p_grid is empty");
        }
        for &p in &self.p_grid {
            if !p.is_finite() || p < 1.0 {
                bail!("p_grid entries must be finite reals >= 1, got {p}");
            }
        }
        let has_n = !self.n_grid.is_empty();
        let has_t = !self.t_grid.is_empty();
        if has_n == has_t {
            bail!("exactly one of n_grid and t_grid must be nonempty");
        }
        if has_t {
            if !self.semigroup.is_continuous() {
                bail!("t_grid requires a family with a continuous time parameter");
            }
            for w in self.t_grid.windows(2) {
                if !(w[1] > w[0]) {
                    bail!("t_grid must increase strictly");
                }
            }
            for &t in &self.t_grid {
                if !t.is_finite() || t <= 0.0 {
                    bail!("t_grid entries must be finite positive reals, got {t}");
                }
            }
        }
        if has_n {
            for w in self.n_grid.windows(2) {
                if !(w[1] > w[0]) {
                    bail!("n_grid must increase strictly");
                }
            }
        }
        match self.task {
            Task::Weaktype | Task::Marcinkiewicz | Task::Littlewood | Task::Convergence => {
                if !has_n {
                    bail!("task {} needs n_grid", self.task.name());
                }
            }
            _ => {}
        }
        if self.task == Task::Marcinkiewicz {
            for &p in &self.p_grid {
                if p <= 1.0 {
                    bail!("marcinkiewicz needs every p in p_grid to exceed 1, got {p}");
                }
            }
        }
        if self.task == Task::Littlewood {
            let k = *self.n_grid.last().unwrap();
            if k < 3 {
                bail!("littlewood needs a cutoff of at least 3, got {k}");
            }
        }
        if self.task.needs_positive_probes() {
            if matches!(self.probes.rule, ProbeRule::Hermitian) {
                bail!(
                    "task {} needs positive probes; use rule \"psd\" or listed positive matrices",
                    self.task.name()
                );
            }
        }
        self.solver
            .validate()
            .map_err(|e| anyhow::anyhow!("solver config: {e}"))?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base_json() -> String {
        r#"{
            "id": "demo",
            "semigroup": {"kind": "cyclic", "order": 3, "t": 0.4, "heat": "poisson"},
            "probes": {"count": 2, "seed": 7, "rule": "psd"},
            "p_grid": [1.5, 2.0],
            "n_grid": [0, 1, 2],
            "task": "maxconst"
        }"#
        .to_string()
    }

    #[test]
    fn well_formed_scenario_parses() {
        let sc = Scenario::from_json(&base_json()).unwrap();
        assert_eq!(sc.id, "demo");
        assert_eq!(sc.task, Task::Maxconst);
        assert_eq!(sc.solver.tol, SolverConfig::default().tol);
    }

    #[test]
    fn unknown_keys_are_named() {
        let bad = base_json().replace("\"task\"", "\"mystery\": 1, \"task\"");
        let err = Scenario::from_json(&bad).unwrap_err();
        assert!(format!("{err:#}").contains("mystery"), "{err:#}");
    }

    #[test]
    fn empty_probes_are_rejected() {
        let bad = base_json().replace("\"count\": 2", "\"count\": 0");
        let err = Scenario::from_json(&bad).unwrap_err();
        assert!(format!("{err:#}").contains("empty"), "{err:#}");
    }

    #[test]
    fn grid_exclusivity_is_enforced() {
        let bad = base_json().replace("\"n_grid\": [0, 1, 2]", "\"n_grid\": []");
        assert!(Scenario::from_json(&bad).is_err());
        let bad = base_json().replace(
            "\"n_grid\": [0, 1, 2]",
            "\"n_grid\": [0, 1], \"t_grid\": [0.5]",
        );
        assert!(Scenario::from_json(&bad).is_err());
    }

    #[test]
    fn hermitian_probes_rejected_for_positive_tasks() {
        let bad = base_json().replace("\"psd\"", "\"hermitian\"");
        let err = Scenario::from_json(&bad).unwrap_err();
        assert!(format!("{err:#}").contains("positive"), "{err:#}");
    }
}
