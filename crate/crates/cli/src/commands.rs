use std::fs;
use std::io::Write as _;
use std::path::Path;

use anyhow::Context;
use dcs_moe::at::{build_at, AtParams};
use dcs_moe::des::{parse_system, serialize_system, CompositeSystem};
use dcs_moe::eval::{
    emit_heatmap, eval_grid, load_bank, profile_experts, read_results, results_csv, run_spec,
    selection_report, timing_report, write_manifest, EvalGridConfig, GateParams, HeatmapMetric,
    RESULTS_NAME,
};
use dcs_moe::moe::{gating_log_json, ExpertBank};
use dcs_moe::policy::{save_checkpoint, train_expert, write_metrics, TrainConfig};
use dcs_moe::synth::{oracle_solve, verify_controller, Controller};
use serde_json::json;

use crate::{Command, Failure, GateArgs, GridArgs, PlotMetric, SystemArgs};

type Outcome = Result<(), Failure>;

pub fn run(cmd: Command) -> Outcome {
    match cmd {
        Command::GenAt { n, k, out } => {
            let sys = build_at(AtParams::new(n, k)?)?;
            write(&out, &serialize_system(&sys))
        }
        Command::Train {
            n,
            k,
            seed,
            config,
            episodes,
            budget,
            out,
            metrics,
        } => {
            let mut cfg: TrainConfig = match config {
                Some(path) => serde_json::from_str(&read(&path)?)
                    .map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?,
                None => TrainConfig::default(),
            };
            cfg.episodes = episodes.unwrap_or(cfg.episodes);
            cfg.budget = budget.unwrap_or(cfg.budget);
            let outcome = train_expert(AtParams::new(n, k)?, &cfg, seed)?;
            ensure_parent(&out)?;
            save_checkpoint(&outcome.checkpoint, &out)?;
            if let Some(path) = metrics {
                ensure_parent(&path)?;
                write_metrics(&path, &outcome.metrics)?;
            }
            let solved = outcome.metrics.iter().filter(|m| m.solved).count();
            say(&format!(
                "trained AT({n},{k}) seed {seed}: {solved}/{} episodes solved",
                outcome.metrics.len()
            ));
            Ok(())
        }
        Command::Profile { checkpoints, grid } => {
            let cfg = grid_config(&grid)?;
            let bank = load_bank(&checkpoints, None)?;
            let out = profile_experts(&bank, &cfg)?;
            let dir = &cfg.output_dir;
            fs::create_dir_all(dir).with_context(|| dir.display().to_string())?;
            let mut files = Vec::new();
            for d in &out.datasets {
                let name = format!("{}.csv", d.expert_id);
                d.save(&dir.join(&name))?;
                files.push(name);
            }
            write(&dir.join(RESULTS_NAME), &results_csv(&out.rows))?;
            files.push(RESULTS_NAME.to_string());
            write_manifest(dir, serde_json::to_value(&cfg)?, &files)?;
            say(&format!(
                "profiled {} experts into {}",
                out.datasets.len(),
                dir.display()
            ));
            Ok(())
        }
        Command::Select {
            results,
            max_size,
            out,
        } => {
            if max_size == 0 {
                return Err(Failure::Usage("--max-size must be at least 1".into()));
            }
            let rows = read_results(&results)?;
            let (_, csv) = selection_report(&rows, max_size)?;
            emit(out.as_deref(), &csv)
        }
        Command::EvalGrid {
            grid,
            policies,
            checkpoints,
            histories,
            gate,
            log_gating,
        } => {
            let mut cfg = grid_config(&grid)?;
            if !policies.is_empty() {
                cfg.policies = policies.iter().map(ToString::to_string).collect();
            }
            cfg.checkpoints = checkpoints.or(cfg.checkpoints);
            cfg.histories = histories.or(cfg.histories);
            apply_gate(&mut cfg.gate, &gate);
            cfg.log_gating |= log_gating;
            let specs = cfg
                .policy_specs()
                .map_err(|e| Failure::Usage(e.to_string()))?;
            cfg.validate_grid()
                .map_err(|e| Failure::Usage(e.to_string()))?;
            let needs_experts = specs.iter().any(|s| !s.experts().is_empty());
            let bank = match &cfg.checkpoints {
                Some(dir) => load_bank(dir, cfg.histories.as_deref())?,
                None if needs_experts => {
                    return Err(Failure::Usage("expert policies need --checkpoints".into()))
                }
                None => ExpertBank::new(Vec::new()),
            };
            let out = eval_grid(&cfg, &bank)?;
            say(&format!(
                "{} rows written to {}",
                out.rows.len(),
                out.results_path.display()
            ));
            Ok(())
        }
        Command::Synth {
            n,
            k,
            policy,
            checkpoints,
            histories,
            budget,
            seed,
            gate,
            controller,
        } => {
            if budget == 0 {
                return Err(Failure::Usage("--budget must be at least 1".into()));
            }
            let bank = match checkpoints {
                Some(dir) => load_bank(&dir, histories.as_deref())?,
                None if !policy.experts().is_empty() => {
                    return Err(Failure::Usage("expert policies need --checkpoints".into()))
                }
                None => ExpertBank::new(Vec::new()),
            };
            let mut params = GateParams::default();
            apply_gate(&mut params, &gate);
            let (r, g) = run_spec(&policy, AtParams::new(n, k)?, &bank, &params, budget, seed)?;
            if let (Some(path), Some(c)) = (&controller, &r.controller) {
                write(path, &c.to_json())?;
            }
            let gating = g.map(|g| {
                let ids: Vec<String> = policy.experts().into_iter().map(str::to_string).collect();
                serde_json::from_str::<serde_json::Value>(&gating_log_json(
                    &ids,
                    &g,
                    params.temperature,
                ))
                .expect("gate log is JSON")
            });
            let report = json!({
                "policy": policy.to_string(),
                "n": n,
                "k": k,
                "seed": seed,
                "solved": r.solved,
                "verdict": r.verdict_s0,
                "steps": r.steps,
                "return": r.return_value,
                "wall_time_ms": r.wall_time.as_secs_f64() * 1e3,
                "gating": gating,
            });
            say(&serde_json::to_string_pretty(&report)?);
            Ok(())
        }
        Command::Verify { system, controller } => {
            let sys = load_system(&system)?;
            let c = Controller::from_json(&read(&controller)?)
                .with_context(|| controller.display().to_string())?;
            let report = verify_controller(&sys, &c);
            say(&serde_json::to_string_pretty(&report)?);
            if report.ok {
                Ok(())
            } else {
                Err(anyhow::anyhow!("{} violations", report.violations.len()).into())
            }
        }
        Command::Oracle { system, cap } => {
            let sys = load_system(&system)?;
            let sol = oracle_solve(&sys, cap)?;
            let (verdict, rank) = sol.initial();
            let report = json!({
                "verdict": verdict,
                "rank": rank,
                "states": sol.graph.states.len(),
                "transitions": sol.graph.transition_count(),
                "losing_states": sol.losing_count(),
            });
            say(&serde_json::to_string_pretty(&report)?);
            Ok(())
        }
        Command::Plot {
            results,
            metric,
            policy,
            out,
        } => {
            let rows = read_results(&results)?;
            let text = match (metric, policy) {
                (PlotMetric::Timing, _) => timing_report(&rows),
                (m, Some(policy)) => {
                    let m = if m == PlotMetric::SuccessRate {
                        HeatmapMetric::SuccessRate
                    } else {
                        HeatmapMetric::MedianSteps
                    };
                    emit_heatmap(&rows, m, &policy)?
                }
                (_, None) => return Err(Failure::Usage("heatmaps need --policy".into())),
            };
            write(&out, &text)?;
            say(&format!("wrote {}", out.display()));
            Ok(())
        }
    }
}

fn read(path: &Path) -> anyhow::Result<String> {
    fs::read_to_string(path).with_context(|| path.display().to_string())
}

fn ensure_parent(path: &Path) -> Outcome {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).with_context(|| parent.display().to_string())?;
    }
    Ok(())
}

fn write(path: &Path, text: &str) -> Outcome {
    ensure_parent(path)?;
    fs::write(path, text).with_context(|| path.display().to_string())?;
    Ok(())
}

fn emit(out: Option<&Path>, text: &str) -> Outcome {
    match out {
        Some(path) => write(path, text),
        None => {
            let _ = std::io::stdout().write_all(text.as_bytes());
            Ok(())
        }
    }
}

fn grid_config(args: &GridArgs) -> Result<EvalGridConfig, Failure> {
    let mut cfg = match &args.config {
        Some(path) => EvalGridConfig::from_json(&read(path)?)
            .map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?,
        None => EvalGridConfig::default(),
    };
    if let Some(r) = args.n_range {
        cfg.n_range = (r.0, r.1);
    }
    if let Some(r) = args.k_range {
        cfg.k_range = (r.0, r.1);
    }
    cfg.budget = args.budget.unwrap_or(cfg.budget);
    if let Some(seeds) = &args.seeds {
        cfg.seeds = seeds.clone();
    }
    cfg.output_dir = args.out.clone().unwrap_or(cfg.output_dir);
    cfg.validate_grid()
        .map_err(|e| Failure::Usage(e.to_string()))?;
    Ok(cfg)
}

fn apply_gate(g: &mut GateParams, a: &GateArgs) {
    g.beta = a.beta.unwrap_or(g.beta);
    g.gamma = a.gamma.unwrap_or(g.gamma);
    g.temperature = a.temperature.unwrap_or(g.temperature);
    g.sigma_n = a.sigma_n.unwrap_or(g.sigma_n);
    g.sigma_k = a.sigma_k.unwrap_or(g.sigma_k);
}

fn load_system(args: &SystemArgs) -> Result<CompositeSystem, Failure> {
    match (&args.system, args.n, args.k) {
        (Some(path), _, _) => Ok(parse_system(&read(path)?)?),
        (None, Some(n), Some(k)) => Ok(build_at(AtParams::new(n, k)?)?),
        _ => Err(Failure::Usage("give --system or both --n and --k".into())),
    }
}

/// Prints a line, ignoring a closed stdout.
fn say(line: &str) {
    let _ = writeln!(std::io::stdout(), "{line}");
}
