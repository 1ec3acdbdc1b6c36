//! Experiment configuration.
//!
//! A config is built in three layers: the defaults for the chosen
//! experiment, an optional TOML file, then `key=value` overrides from the
//! command line (dotted keys, values parsed as TOML, bare words as strings).
//! Every key is listed in [`Config::default_toml`].

use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use serde::{Deserialize, Serialize};

use ffpr_core::classical::{HesSchedule, HioSchedule};
use ffpr_core::forward::{DEFAULT_GPR_FACTOR, DEFAULT_NFPR_BETA};

use crate::methods::Method;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentId {
    Table1,
    Fig2Hist,
    Fig3Support,
    Fig5Compare,
    SolveOne,
}

impl ExperimentId {
    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentId::Table1 => "table1",
            ExperimentId::Fig2Hist => "fig2-hist",
            ExperimentId::Fig3Support => "fig3-support",
            ExperimentId::Fig5Compare => "fig5-compare",
            ExperimentId::SolveOne => "solve-one",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [
            Self::Table1,
            Self::Fig2Hist,
            Self::Fig3Support,
            Self::Fig5Compare,
            Self::SolveOne,
        ]
        .into_iter()
        .find(|e| e.as_str() == s)
    }
}

/// Which simulated crystals an experiment runs on.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceSelection {
    pub count: usize,
    /// Object side length; the canvas is twice this.
    pub grid: usize,
    /// Side of the centered region the crystal is drawn in.
    pub region: usize,
    /// Defect counts, cycled over instances.
    pub defects: Vec<usize>,
    pub n_points: usize,
    /// Instance seeds derive from this.
    pub seed: u64,
    pub q: [f64; 2],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    pub nfpr_beta: f64,
    /// GPR measurement count as a multiple of `m * n`.
    pub gpr_factor: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GdParams {
    pub iterations: usize,
    /// Step as a multiple of `M / (2 ||A||^2)`.
    pub step_scale: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DipParams {
    /// Learning rate of the magnitude / real generator.
    pub lr1: f64,
    /// Learning rate of the phase / imaginary generator.
    pub lr2: f64,
    /// Learning rate of the single-generator form.
    pub single_lr: f64,
    pub iterations: usize,
    pub channels: usize,
    pub stages: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SupportKind {
    /// Tightest bounding box of the true support.
    Bbox,
    /// The true support pixels.
    Mask,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BudgetMode {
    /// Every method runs its configured iteration count.
    Iterations,
    /// Methods share the counted-flop cost of one double-DIP run.
    Cost,
    /// Methods share the measured wall time of one double-DIP run.
    Wall,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub experiment: ExperimentId,
    pub methods: Vec<Method>,
    /// Random starts per (instance, method).
    pub restarts: usize,
    /// Base seed of solver randomness.
    pub seed: u64,
    pub output: PathBuf,
    pub instances: InstanceSelection,
    pub models: ModelParams,
    pub gd: GdParams,
    pub hio: HioSchedule,
    pub hes: HesSchedule,
    /// HES restarts inside one `hes` run (best by loss).
    pub hes_restarts: usize,
    pub dip: DipParams,
    pub tight_support: SupportKind,
    pub budget: BudgetMode,
}

impl Config {
    pub fn defaults(id: ExperimentId) -> Self {
        let mut c = Config {
            experiment: id,
            methods: vec![Method::Hes],
            restarts: 1,
            seed: 0,
            output: PathBuf::from(format!("results/{}", id.as_str())),
            instances: InstanceSelection {
                count: 1,
                grid: 32,
                region: 28,
                defects: vec![2],
                n_points: 10,
                seed: 1,
                q: [1.0, 0.0],
            },
            models: ModelParams {
                nfpr_beta: DEFAULT_NFPR_BETA,
                gpr_factor: DEFAULT_GPR_FACTOR,
            },
            gd: GdParams {
                iterations: 3000,
                step_scale: 1.0,
            },
            hio: HioSchedule::default(),
            hes: HesSchedule::default(),
            hes_restarts: 1,
            dip: DipParams {
                lr1: 1e-4,
                lr2: 1e-3,
                single_lr: 1e-3,
                iterations: 10_000,
                channels: 64,
                stages: 5,
            },
            tight_support: SupportKind::Bbox,
            budget: BudgetMode::Iterations,
        };
        match id {
            ExperimentId::Table1 => {
                c.methods = vec![Method::Gd];
                c.restarts = 20;
                c.instances.grid = 8;
                c.instances.region = 7;
                c.instances.n_points = 8;
            }
            ExperimentId::Fig2Hist | ExperimentId::Fig3Support => {
                c.methods = vec![Method::Hio];
                c.restarts = 20;
                c.hio.hio_iters = 1000;
                c.hio.er_iters = 100;
            }
            ExperimentId::Fig5Compare => {
                c.methods = vec![Method::Hes, Method::Dip, Method::DdipPolar];
                c.restarts = 3;
                c.instances.count = 6;
                c.instances.defects = vec![1, 2, 4];
                c.budget = BudgetMode::Cost;
            }
            ExperimentId::SolveOne => {}
        }
        c
    }

    /// Defaults of `id` as TOML text (the documented schema).
    pub fn default_toml(id: ExperimentId) -> String {
        toml::to_string_pretty(&Self::defaults(id)).expect("config serializes")
    }

    /// Layers a TOML file (optional) and `key=value` overrides over the
    /// defaults of the experiment named in the file, the overrides, or `fallback`.
    pub fn load(file: Option<&Path>, overrides: &[String], fallback: ExperimentId) -> Result<Self> {
        let file_table = match file {
            Some(p) => {
                let text = std::fs::read_to_string(p).with_context(|| format!("reading config {}", p.display()))?;
                text.parse::<toml::Table>()
                    .with_context(|| format!("parsing config {}", p.display()))?
            }
            None => toml::Table::new(),
        };
        let mut sets = Vec::new();
        for o in overrides {
            let (k, v) = o
                .split_once('=')
                .ok_or_else(|| anyhow!("override `{o}` is not key=value"))?;
            sets.push((k.trim().to_string(), parse_value(v.trim())));
        }
        let id_from = |v: &toml::Value| v.as_str().and_then(ExperimentId::parse);
        let id = sets
            .iter()
            .rev()
            .find(|(k, _)| k == "experiment")
            .and_then(|(_, v)| id_from(v))
            .or_else(|| file_table.get("experiment").and_then(id_from))
            .unwrap_or(fallback);
        let mut table = toml::Table::try_from(Self::defaults(id))?;
        merge(&mut table, file_table);
        for (k, v) in sets {
            set_path(&mut table, &k, v)?;
        }
        let cfg: Config = toml::Value::Table(table).try_into().context("invalid configuration")?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.methods.is_empty() {
            bail!("method list is empty");
        }
        if self.restarts == 0 || self.hes_restarts == 0 {
            bail!("restart counts must be at least 1");
        }
        let inst = &self.instances;
        if inst.count == 0 || inst.defects.is_empty() {
            bail!("instance selection is empty");
        }
        if inst.grid < 4 || inst.region == 0 || inst.region > inst.grid || inst.n_points < 3 {
            bail!("instance geometry needs grid >= 4, 0 < region <= grid, n_points >= 3");
        }
        if !(self.models.nfpr_beta > 0.0) || self.models.gpr_factor == 0 {
            bail!("model parameters must be positive");
        }
        if !(self.gd.step_scale > 0.0) {
            bail!("gd.step_scale must be positive");
        }
        if !(self.hio.beta > 0.0 && self.hio.beta <= 1.0) {
            bail!("hio.beta outside (0, 1]");
        }
        self.hes.validate().map_err(|e| anyhow!("{e}"))?;
        let d = &self.dip;
        if [d.lr1, d.lr2, d.single_lr]
            .iter()
            .any(|lr| !(*lr >= 0.0 && lr.is_finite()))
            || d.channels == 0
        {
            bail!("dip learning rates must be nonnegative and channels positive");
        }
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }
}

fn parse_value(raw: &str) -> toml::Value {
    format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

fn merge(base: &mut toml::Table, over: toml::Table) {
    for (k, v) in over {
        match (base.get_mut(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => merge(b, o),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

fn set_path(table: &mut toml::Table, key: &str, value: toml::Value) -> Result<()> {
    let mut parts: Vec<&str> = key.split('.').collect();
    let last = parts
        .pop()
        .filter(|s| !s.is_empty())
        .ok_or_else(|| anyhow!("empty override key"))?;
    let mut cur = table;
    for p in parts {
        cur = match cur.get_mut(p) {
            Some(toml::Value::Table(t)) => t,
            _ => bail!("unknown config section `{p}` in `{key}`"),
        };
    }
    if !cur.contains_key(last) {
        bail!("unknown config key `{key}`");
    }
    cur.insert(last.to_string(), value);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_through_toml() {
        for id in [ExperimentId::Table1, ExperimentId::Fig5Compare, ExperimentId::SolveOne] {
            let text = Config::default_toml(id);
            let back: Config = toml::from_str(&text).unwrap();
            assert_eq!(back, Config::defaults(id));
        }
    }

    #[test]
    fn overrides_apply_in_order() {
        let cfg = Config::load(
            None,
            &[
                "restarts=7".into(),
                "dip.lr1=0.5".into(),
                "methods=[\"gd\", \"hio\"]".into(),
                "output=out/x".into(),
            ],
            ExperimentId::SolveOne,
        )
        .unwrap();
        assert_eq!(cfg.restarts, 7);
        assert_eq!(cfg.dip.lr1, 0.5);
        assert_eq!(cfg.methods, vec![Method::Gd, Method::Hio]);
        assert_eq!(cfg.output, PathBuf::from("out/x"));
    }

    #[test]
    fn experiment_override_selects_its_defaults() {
        let cfg = Config::load(None, &["experiment=table1".into()], ExperimentId::SolveOne).unwrap();
        assert_eq!(cfg.instances.grid, 8);
        assert_eq!(cfg.restarts, 20);
    }

    #[test]
    fn file_layer_sits_between_defaults_and_flags() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.toml");
        std::fs::write(
            &path,
            "experiment = \"fig3-support\"\nrestarts = 4\n[hio]\nbeta = 0.7\n",
        )
        .unwrap();
        let cfg = Config::load(Some(&path), &["restarts=5".into()], ExperimentId::SolveOne).unwrap();
        assert_eq!(cfg.experiment, ExperimentId::Fig3Support);
        assert_eq!(cfg.hio.beta, 0.7);
        assert_eq!(cfg.hio.hio_iters, 1000);
        assert_eq!(cfg.restarts, 5);
    }

    #[test]
    fn bad_configs_are_rejected() {
        let load = |o: &str| Config::load(None, &[o.to_string()], ExperimentId::SolveOne);
        assert!(load("methods=[]").is_err());
        assert!(load("restarts=0").is_err());
        assert!(load("nonsense=1").is_err());
        assert!(load("dip.nonsense=1").is_err());
        assert!(load("hio.beta=2.0").is_err());
        assert!(load("methods=[\"magic\"]").is_err());
    }
}
