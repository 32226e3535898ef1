use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{EvalError, PolicySpec};
use crate::at::{build_at, AtParams};
use crate::moe::{
    gating_log_json, run_moe_episode, ExpertBank, GatingWeights, HistoryDataset, HistoryRecord,
    MixMode, MixtureConfig,
};
use crate::policy::{
    load_checkpoint, BfsPolicy, DfsPolicy, GreedyExpertPolicy, RandomPolicy, FEATURE_VERSION,
};
use crate::synth::{run_episode, ExplorationPolicy, SynthesisResult};

/// Gate hyperparameters shared by every mixture policy of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GateParams {
    pub beta: f64,
    pub gamma: f64,
    pub temperature: f64,
    pub sigma_n: f64,
    pub sigma_k: f64,
    pub epsilon: f64,
}

impl Default for GateParams {
    fn default() -> Self {
        let d = MixtureConfig::default();
        Self {
            beta: d.beta,
            gamma: d.gamma,
            temperature: d.temperature,
            sigma_n: d.sigma_n,
            sigma_k: d.sigma_k,
            epsilon: d.epsilon,
        }
    }
}

impl GateParams {
    pub fn mixture(&self, mode: MixMode, experts: Vec<String>) -> MixtureConfig {
        MixtureConfig {
            experts,
            mode,
            beta: self.beta,
            gamma: self.gamma,
            temperature: self.temperature,
            sigma_n: self.sigma_n,
            sigma_k: self.sigma_k,
            epsilon: self.epsilon,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalGridConfig {
    /// Inclusive.
    pub n_range: (u32, u32),
    /// Inclusive.
    pub k_range: (u32, u32),
    pub budget: usize,
    pub policies: Vec<String>,
    pub seeds: Vec<u64>,
    pub output_dir: PathBuf,
    /// Directory of `<id>.json` checkpoints.
    pub checkpoints: Option<PathBuf>,
    /// Directory of `<id>.csv` profiling histories.
    pub histories: Option<PathBuf>,
    pub gate: GateParams,
    /// Write one gate record per mixture episode.
    pub log_gating: bool,
}

impl Default for EvalGridConfig {
    fn default() -> Self {
        Self {
            n_range: (1, 15),
            k_range: (1, 15),
            budget: 10_000,
            policies: Vec::new(),
            seeds: vec![0],
            output_dir: PathBuf::from("results"),
            checkpoints: None,
            histories: None,
            gate: GateParams::default(),
            log_gating: false,
        }
    }
}

impl EvalGridConfig {
    pub fn from_json(text: &str) -> Result<Self, EvalError> {
        serde_json::from_str(text).map_err(|e| EvalError::InvalidConfig(e.to_string()))
    }

    /// Checks everything except the policy list.
    pub fn validate_grid(&self) -> Result<(), EvalError> {
        for (name, (lo, hi)) in [("n_range", self.n_range), ("k_range", self.k_range)] {
            if lo == 0 || lo > hi {
                return Err(EvalError::InvalidConfig(format!(
                    "{name} [{lo}, {hi}] is empty or starts at 0"
                )));
            }
        }
        if self.budget == 0 {
            return Err(EvalError::InvalidConfig("budget must be at least 1".into()));
        }
        if self.seeds.is_empty() {
            return Err(EvalError::InvalidConfig("no seeds".into()));
        }
        Ok(())
    }

    pub fn policy_specs(&self) -> Result<Vec<PolicySpec>, EvalError> {
        if self.policies.is_empty() {
            return Err(EvalError::NoPolicies);
        }
        self.policies.iter().map(|p| p.parse()).collect()
    }

    pub fn cells(&self) -> impl Iterator<Item = AtParams> + '_ {
        (self.n_range.0..=self.n_range.1).flat_map(move |n| {
            (self.k_range.0..=self.k_range.1)
                .map(move |k| AtParams::new(n, k).expect("validated range"))
        })
    }
}

/// One row of the results table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceResult {
    pub policy: String,
    pub n: u32,
    pub k: u32,
    pub seed: u64,
    pub solved: bool,
    pub steps: usize,
    #[serde(rename = "return")]
    pub return_value: i64,
    /// Rounded to the microsecond.
    pub wall_time_ms: f64,
    #[serde(skip)]
    pub gating: Option<PathBuf>,
}

pub const RESULTS_HEADER: &str = "policy,n,k,seed,solved,steps,return,wall_time_ms";

impl InstanceResult {
    pub fn new(policy: &PolicySpec, p: AtParams, seed: u64, r: &SynthesisResult) -> Self {
        Self {
            policy: policy.to_string(),
            n: p.n,
            k: p.k,
            seed,
            solved: r.solved,
            steps: r.steps,
            return_value: r.return_value,
            wall_time_ms: (r.wall_time.as_secs_f64() * 1e6).round() / 1e3,
            gating: None,
        }
    }

    fn sort_key(&self) -> (&str, u32, u32, u64) {
        (&self.policy, self.n, self.k, self.seed)
    }
}

/// Runs one episode of `spec` on `AT(p)`, returning the full episode result.
/// Mixture runs also return their gate.
pub fn run_spec(
    spec: &PolicySpec,
    p: AtParams,
    bank: &ExpertBank,
    gate: &GateParams,
    budget: usize,
    seed: u64,
) -> Result<(SynthesisResult, Option<GatingWeights>), EvalError> {
    let missing = |id: &str| EvalError::MissingExpert(id.to_string());
    let sys = build_at(p).map_err(|e| EvalError::InvalidConfig(e.to_string()))?;
    let single = |policy: &mut dyn ExplorationPolicy| -> Result<_, EvalError> {
        Ok((run_episode(&sys, policy, budget, seed)?, None))
    };
    match spec {
        PolicySpec::Random => single(&mut RandomPolicy),
        PolicySpec::Bfs => single(&mut BfsPolicy),
        PolicySpec::Dfs => single(&mut DfsPolicy),
        PolicySpec::Expert(id) => {
            let e = bank.get(id).ok_or_else(|| missing(id))?;
            single(&mut GreedyExpertPolicy::new(&e.checkpoint)?)
        }
        PolicySpec::Mixture { mode, experts } => {
            if let Some(id) = experts.iter().find(|id| bank.get(id).is_none()) {
                return Err(missing(id));
            }
            let resolved = bank.resolve(experts)?;
            let cfg = gate.mixture(*mode, experts.clone());
            let out = run_moe_episode(p, &resolved, &cfg, budget, seed)?;
            Ok((out.result, Some(out.gate)))
        }
    }
}

/// [`run_spec`] reduced to a results row.
pub fn run_instance(
    spec: &PolicySpec,
    p: AtParams,
    bank: &ExpertBank,
    gate: &GateParams,
    budget: usize,
    seed: u64,
) -> Result<(InstanceResult, Option<GatingWeights>), EvalError> {
    let (r, g) = run_spec(spec, p, bank, gate, budget, seed)?;
    Ok((InstanceResult::new(spec, p, seed, &r), g))
}

pub fn results_csv(rows: &[InstanceResult]) -> String {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(Vec::new());
    w.write_record(RESULTS_HEADER.split(','))
        .expect("in-memory write");
    for r in rows {
        w.serialize(r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 csv")
}

pub fn parse_results(text: &str) -> Result<Vec<InstanceResult>, EvalError> {
    let mut rd = csv::Reader::from_reader(text.as_bytes());
    let header: Vec<String> = rd
        .headers()
        .map_err(|e| EvalError::Csv(e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    if header.join(",") != RESULTS_HEADER {
        return Err(EvalError::Csv(format!(
            "unexpected header {:?}",
            header.join(",")
        )));
    }
    rd.deserialize()
        .map(|r| r.map_err(|e| EvalError::Csv(e.to_string())))
        .collect()
}

pub fn read_results(path: &Path) -> Result<Vec<InstanceResult>, EvalError> {
    parse_results(&std::fs::read_to_string(path).map_err(|e| EvalError::io(path, e))?)
}

/// The results table with the timing column removed, for byte comparisons.
pub fn strip_timing(csv_text: &str) -> String {
    csv_text
        .lines()
        .map(|l| l.rsplit_once(',').map_or(l, |(head, _)| head))
        .collect::<Vec<_>>()
        .join("\n")
}

fn file_stem(spec: &str) -> String {
    spec.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '.' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub feature_version: String,
    pub timestamp_unix: u64,
    pub config: serde_json::Value,
    pub files: Vec<ManifestEntry>,
}

pub const MANIFEST_NAME: &str = "manifest.json";

pub fn sha256_file(path: &Path) -> Result<String, EvalError> {
    let bytes = std::fs::read(path).map_err(|e| EvalError::io(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

/// Writes `manifest.json` into `dir`, checksumming `files` (paths relative to
/// `dir`).
pub fn write_manifest(
    dir: &Path,
    config: serde_json::Value,
    files: &[String],
) -> Result<RunManifest, EvalError> {
    let mut entries = Vec::with_capacity(files.len());
    for f in files {
        entries.push(ManifestEntry {
            path: f.clone(),
            sha256: sha256_file(&dir.join(f))?,
        });
    }
    let manifest = RunManifest {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        feature_version: FEATURE_VERSION.to_string(),
        timestamp_unix: SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map_or(0, |d| d.as_secs()),
        config,
        files: entries,
    };
    let path = dir.join(MANIFEST_NAME);
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n";
    std::fs::write(&path, text).map_err(|e| EvalError::io(&path, e))?;
    Ok(manifest)
}

pub(crate) fn write_file(dir: &Path, name: &str, contents: &str) -> Result<(), EvalError> {
    let path = dir.join(name);
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| EvalError::io(parent, e))?;
    }
    std::fs::write(&path, contents).map_err(|e| EvalError::io(&path, e))
}

#[derive(Debug, Clone)]
pub struct GridOutput {
    pub rows: Vec<InstanceResult>,
    pub results_path: PathBuf,
    pub manifest: RunManifest,
}

pub const RESULTS_NAME: &str = "results.csv";

/// Runs every `(policy, n, k, seed)` cell, then writes `results.csv`, the
/// optional gate records and `manifest.json` into the output directory.
pub fn eval_grid(cfg: &EvalGridConfig, bank: &ExpertBank) -> Result<GridOutput, EvalError> {
    let specs = cfg.policy_specs()?;
    cfg.validate_grid()?;
    for spec in &specs {
        if let Some(id) = spec.experts().into_iter().find(|id| bank.get(id).is_none()) {
            return Err(EvalError::MissingExpert(id.to_string()));
        }
    }
    let work: Vec<(&PolicySpec, AtParams, u64)> = specs
        .iter()
        .flat_map(|s| {
            cfg.cells()
                .flat_map(move |p| cfg.seeds.iter().map(move |&seed| (s, p, seed)))
        })
        .collect();
    let mut outcomes = work
        .par_iter()
        .map(|&(spec, p, seed)| run_instance(spec, p, bank, &cfg.gate, cfg.budget, seed))
        .collect::<Result<Vec<_>, _>>()?;
    outcomes.sort_by(|a, b| a.0.sort_key().cmp(&b.0.sort_key()));

    let dir = &cfg.output_dir;
    std::fs::create_dir_all(dir).map_err(|e| EvalError::io(dir, e))?;
    let mut files = Vec::new();
    let mut rows = Vec::with_capacity(outcomes.len());
    for (mut row, gate) in outcomes {
        if let (true, Some(gate)) = (cfg.log_gating, gate) {
            let name = format!(
                "gating/{}__n{}_k{}_s{}.json",
                file_stem(&row.policy),
                row.n,
                row.k,
                row.seed
            );
            let spec: PolicySpec = row.policy.parse()?;
            let ids: Vec<String> = spec.experts().into_iter().map(str::to_string).collect();
            write_file(
                dir,
                &name,
                &(gating_log_json(&ids, &gate, cfg.gate.temperature) + "\n"),
            )?;
            row.gating = Some(dir.join(&name));
            files.push(name);
        }
        rows.push(row);
    }
    write_file(dir, RESULTS_NAME, &results_csv(&rows))?;
    files.push(RESULTS_NAME.to_string());
    let config = serde_json::to_value(cfg).expect("config serializes");
    let manifest = write_manifest(dir, config, &files)?;
    Ok(GridOutput {
        rows,
        results_path: dir.join(RESULTS_NAME),
        manifest,
    })
}

#[derive(Debug, Clone)]
pub struct ProfileOutput {
    pub datasets: Vec<HistoryDataset>,
    /// One row per `(expert, n, k, seed)`, policy `expert:<id>`.
    pub rows: Vec<InstanceResult>,
}

/// Runs every expert of the bank greedily on the grid and records its solved
/// instances. The policy list of `cfg` is ignored.
pub fn profile_experts(
    bank: &ExpertBank,
    cfg: &EvalGridConfig,
) -> Result<ProfileOutput, EvalError> {
    cfg.validate_grid()?;
    if bank.is_empty() {
        return Err(EvalError::InvalidConfig("no experts to profile".into()));
    }
    let specs: Vec<PolicySpec> = bank
        .ids()
        .map(|id| PolicySpec::Expert(id.to_string()))
        .collect();
    let work: Vec<(&PolicySpec, AtParams, u64)> = specs
        .iter()
        .flat_map(|s| {
            cfg.cells()
                .flat_map(move |p| cfg.seeds.iter().map(move |&seed| (s, p, seed)))
        })
        .collect();
    let mut rows = work
        .par_iter()
        .map(|&(spec, p, seed)| {
            run_instance(spec, p, bank, &cfg.gate, cfg.budget, seed).map(|r| r.0)
        })
        .collect::<Result<Vec<_>, _>>()?;
    rows.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
    let mut solved: BTreeMap<&str, Vec<HistoryRecord>> =
        bank.ids().map(|id| (id, Vec::new())).collect();
    for r in rows.iter().filter(|r| r.solved) {
        let id = r
            .policy
            .strip_prefix("expert:")
            .expect("profiling rows are expert rows");
        solved.get_mut(id).expect("bank id").push(HistoryRecord {
            n: r.n,
            k: r.k,
            steps: r.steps as u64,
        });
    }
    let datasets = solved
        .into_iter()
        .map(|(id, runs)| HistoryDataset::from_runs(id, runs))
        .collect();
    Ok(ProfileOutput { datasets, rows })
}

/// Loads every `<id>.json` checkpoint in `checkpoints`, pairing each with
/// `<id>.csv` from `histories` when present.
pub fn load_bank(checkpoints: &Path, histories: Option<&Path>) -> Result<ExpertBank, EvalError> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(checkpoints)
        .map_err(|e| EvalError::io(checkpoints, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    let mut experts = Vec::with_capacity(paths.len());
    for path in paths {
        let id = path
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or_default()
            .to_string();
        let checkpoint = load_checkpoint(&path)?;
        let history = match histories.map(|d| d.join(format!("{id}.csv"))) {
            Some(h) if h.exists() => HistoryDataset::load(&id, &h)?,
            _ => HistoryDataset::from_runs(&id, []),
        };
        experts.push(crate::moe::Expert {
            id,
            checkpoint,
            history,
        });
    }
    Ok(ExpertBank::new(experts))
}
