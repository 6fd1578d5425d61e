use std::path::Path;
use std::str::FromStr;

use llb_core::control::{kappa_moment, ControlPath};
use llb_core::cost::{mc_estimate_J, trajectory_cost};
use llb_core::dynamics::{sample_wiener, simulate};
use llb_core::optimizer::{minimizing_sequence_report, optimize};
use llb_core::seed::derive_seed;
use llb_core::spectral::{l4_4, norm_sq, to_physical, NormKind};
use llb_core::verification::{
    galerkin_stability_study, ito_stratonovich_consistency, pathwise_uniqueness_experiment,
    EnergyFunctionals,
};
use serde_json::json;

use crate::config::{parse_config, resolve, ConfigFile, RunConfig};
use crate::error::CliError;
use crate::output::{num, opt_num, ArtifactWriter, Csv, RunManifest, Seeds};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Simulate,
    Energy,
    Uniqueness,
    Consistency,
    Optimize,
}

impl Command {
    pub fn as_str(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Energy => "energy",
            Command::Uniqueness => "uniqueness",
            Command::Consistency => "consistency",
            Command::Optimize => "optimize",
        }
    }
}

impl FromStr for Command {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        Ok(match s {
            "simulate" => Command::Simulate,
            "energy" => Command::Energy,
            "uniqueness" => Command::Uniqueness,
            "consistency" => Command::Consistency,
            "optimize" => Command::Optimize,
            other => return Err(CliError::UnknownCommand(other.into())),
        })
    }
}

/// Command-line values that take precedence over the config file.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub paths: Option<usize>,
}

pub fn load(config: Option<&Path>, overrides: Overrides) -> Result<RunConfig, CliError> {
    let mut file = match config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            parse_config(&text)?
        }
        None => ConfigFile::default(),
    };
    if let Some(s) = overrides.seed {
        file.seed = s;
    }
    if let Some(p) = overrides.paths {
        file.paths = p;
    }
    resolve(file)
}

/// Loads the configuration, runs `command` and writes all artifacts plus
/// `manifest.json` into `out`.
pub fn run(
    command: Command,
    config: Option<&Path>,
    out: &Path,
    overrides: Overrides,
    log: &mut dyn FnMut(&str),
) -> Result<RunManifest, CliError> {
    let rc = load(config, overrides)?;
    let mut w = ArtifactWriter::create(out)?;
    w.write_json("config.resolved.json", &rc.file)?;
    log(&format!("{}: writing to {}", command.as_str(), out.display()));
    match command {
        Command::Simulate => run_simulate(&rc, &mut w)?,
        Command::Energy => run_energy(&rc, &mut w)?,
        Command::Uniqueness => run_uniqueness(&rc, &mut w)?,
        Command::Consistency => run_consistency(&rc, &mut w)?,
        Command::Optimize => run_optimize(&rc, &mut w, log)?,
    }
    let seeds = Seeds {
        base_seed: rc.file.seed,
        paths: if command == Command::Simulate || command == Command::Uniqueness { 1 } else { rc.file.paths },
        per_path: "derive_seed(base_seed, i) for path i".into(),
    };
    w.finish(command.as_str(), config, seeds)
}

const COMPONENTS: [&str; 3] = ["x", "y", "z"];

fn energy_cells(e: &EnergyFunctionals) -> Vec<String> {
    e.to_array().iter().map(|v| num(*v)).collect()
}

fn run_simulate(rc: &RunConfig, w: &mut ArtifactWriter) -> Result<(), CliError> {
    let path_seed = derive_seed(rc.file.seed, 0);
    let wiener = sample_wiener(rc.sim.horizon, rc.sim.steps, path_seed)?;
    let traj = simulate(&rc.sim, &wiener, &rc.schedule, &*rc.operator)?;

    let modes = rc.sim.basis.spec().modes();
    let mut header: Vec<String> = ["t", "L2_sq", "H1_sq", "H2_sq", "L4_4"].iter().map(|s| s.to_string()).collect();
    for c in COMPONENTS {
        header.extend((0..modes).map(|k| format!("m{c}_{k}")));
    }
    let mut csv = Csv::new(&header);
    for (t, m) in traj.times.iter().zip(&traj.states) {
        let mut row = vec![
            num(*t),
            num(norm_sq(m, NormKind::L2)),
            num(norm_sq(m, NormKind::H1)),
            num(norm_sq(m, NormKind::H2)),
            num(l4_4(&to_physical(m))),
        ];
        row.extend(m.coeffs().iter().map(|v| num(*v)));
        csv.row(row);
    }
    w.write_csv("trajectory.csv", csv)?;

    let cost = trajectory_cost(&rc.cost, &traj, &rc.schedule)?;
    w.write_json(
        "simulate.json",
        &json!({
            "path_seed": path_seed,
            "steps": traj.steps(),
            "energy": EnergyFunctionals::of(&traj),
            "cost": cost,
            "kappa4_moment": kappa_moment(&rc.schedule, 4),
        }),
    )
}

fn run_energy(rc: &RunConfig, w: &mut ArtifactWriter) -> Result<(), CliError> {
    let n_list = &rc.file.energy.n_list;
    let study = galerkin_stability_study(&rc.sim, n_list, &rc.schedule, &*rc.operator, rc.file.paths, rc.file.seed)?;
    let mut header = vec!["n".to_string()];
    header.extend(EnergyFunctionals::COLUMNS.iter().map(|c| c.to_string()));
    header.extend(EnergyFunctionals::COLUMNS.iter().map(|c| format!("se_{c}")));
    let mut csv = Csv::new(&header);
    for (n, r) in &study.rows {
        let mut row = vec![n.to_string()];
        row.extend(energy_cells(&r.mean));
        row.extend(energy_cells(&r.std_error));
        csv.row(row);
    }
    w.write_csv("energy.csv", csv)?;
    let rows: Vec<_> = study
        .rows
        .iter()
        .map(|(n, r)| json!({"n": n, "mean": r.mean, "std_error": r.std_error}))
        .collect();
    let ratios = EnergyFunctionals::from_array(study.ratios());
    w.write_json(
        "energy.json",
        &json!({
            "paths": rc.file.paths,
            "base_seed": rc.file.seed,
            "rows": rows,
            "max_over_n": study.max_over_n,
            "min_over_n": study.min_over_n,
            "max_over_min": ratios,
        }),
    )?;
    if let [(_, only)] = study.rows.as_slice() {
        // per-path values are only written for a single Galerkin level
        let mut header = vec!["path".to_string()];
        header.extend(EnergyFunctionals::COLUMNS.iter().map(|c| c.to_string()));
        let mut csv = Csv::new(&header);
        for (i, e) in only.per_path.iter().enumerate() {
            let mut row = vec![i.to_string()];
            row.extend(energy_cells(e));
            csv.row(row);
        }
        w.write_csv("energy_paths.csv", csv)?;
    }
    Ok(())
}

fn run_uniqueness(rc: &RunConfig, w: &mut ArtifactWriter) -> Result<(), CliError> {
    let mut table = Csv::new(&["delta", "r_T", "phi_integral", "gronwall_ratio", "degenerate"]);
    let mut curve = Csv::new(&["delta", "t", "r"]);
    let mut reports = Vec::new();
    for &delta in &rc.file.uniqueness.deltas {
        let r = pathwise_uniqueness_experiment(&rc.sim, &rc.schedule, &*rc.operator, delta, &rc.direction, rc.file.seed)?;
        table.row(vec![
            num(delta),
            num(r.r_t),
            num(r.phi_integral),
            opt_num(r.gronwall_ratio),
            r.degenerate.to_string(),
        ]);
        for (t, v) in r.times.iter().zip(&r.r) {
            curve.row(vec![num(delta), num(*t), num(*v)]);
        }
        reports.push(json!({
            "delta": delta,
            "r_T": r.r_t,
            "phi_integral": r.phi_integral,
            "gronwall_ratio": r.gronwall_ratio,
            "degenerate": r.degenerate,
        }));
    }
    w.write_csv("uniqueness.csv", table)?;
    w.write_csv("uniqueness_r.csv", curve)?;
    w.write_json(
        "uniqueness.json",
        &json!({"path_seed": derive_seed(rc.file.seed, 0), "runs": reports}),
    )
}

fn run_consistency(rc: &RunConfig, w: &mut ArtifactWriter) -> Result<(), CliError> {
    let n = rc.file.consistency.n;
    let cfg = rc.sim.with_modes(n)?;
    let q = rc.schedule.rebase(cfg.embedding, &cfg.basis)?;
    let table = ito_stratonovich_consistency(&cfg, &q, &*rc.operator, &rc.dt_list, rc.file.paths, rc.file.seed)?;
    let mut csv = Csv::new(&["dt", "steps", "em_mean", "heun_mean", "diff", "diff_std_error"]);
    for r in &table.rows {
        csv.row(vec![
            num(r.dt),
            r.steps.to_string(),
            num(r.em_mean),
            num(r.heun_mean),
            num(r.diff),
            num(r.diff_std_error),
        ]);
    }
    w.write_csv("consistency.csv", csv)?;
    w.write_json(
        "consistency.json",
        &json!({
            "n": n,
            "paths": rc.file.paths,
            "base_seed": rc.file.seed,
            "rows": table.rows,
            "slope": table.slope,
        }),
    )
}

fn run_optimize(rc: &RunConfig, w: &mut ArtifactWriter, log: &mut dyn FnMut(&str)) -> Result<(), CliError> {
    let trace = optimize(&rc.sim, &rc.cost, &*rc.operator, &rc.optimizer)?;
    let mut csv = Csv::new(&["iteration", "best_J", "std_error", "kappa4_moment", "generation_best_J"]);
    for r in &trace.iterations {
        csv.row(vec![
            r.iteration.to_string(),
            num(r.best_j),
            num(r.std_error),
            num(r.kappa4_moment),
            num(r.generation_best_j),
        ]);
    }
    w.write_csv("trace.csv", csv)?;

    let mut csv = Csv::new(&["iteration", "candidate", "J", "running_mean", "kappa4_moment", "coercive"]);
    for c in &trace.candidates {
        csv.row(vec![
            c.iteration.to_string(),
            c.candidate.to_string(),
            num(c.j),
            num(c.running_mean),
            num(c.kappa4_moment),
            c.coercive.to_string(),
        ]);
    }
    w.write_csv("candidates.csv", csv)?;

    let mut csv = Csv::new(&["iteration", "J", "kappa4_moment"]);
    for r in minimizing_sequence_report(&trace) {
        csv.row(vec![r.iteration.to_string(), num(r.j), num(r.kappa4_moment)]);
    }
    w.write_csv("minimizing_sequence.csv", csv)?;
    w.write_json("best_schedule.json", &trace.best_schedule.to_doc())?;

    let zero = llb_core::control::RelaxedControlSchedule::zero(rc.sim.horizon, rc.sim.embedding, &rc.sim.basis)?;
    let baseline = mc_estimate_J(&rc.sim, &zero, &*rc.operator, &rc.cost, rc.optimizer.mc_paths, rc.optimizer.base_seed)?;
    log(&format!(
        "optimize: best J = {} (zero control {}), {} coercivity violations",
        trace.lambda_hat, baseline.mean, trace.coercivity_violations
    ));
    w.write_json(
        "optimize.json",
        &json!({
            "lambda_hat": trace.lambda_hat,
            "best": trace.best_estimate,
            "zero_control": baseline,
            "best_kappa4_moment": kappa_moment(&trace.best_schedule, 4),
            "horizon": trace.best_schedule.horizon(),
            "coercivity_violations": trace.coercivity_violations,
            "evaluations": trace.candidates.len(),
        }),
    )
}
