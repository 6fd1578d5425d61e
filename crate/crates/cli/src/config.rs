//! JSON run configuration.
//!
//! Every key is optional; an empty object `{}` describes the default
//! problem: d=1, n=8, M=32, T=1, 256 steps, `semi_implicit_ito`,
//! h = (0,0,1), m₀ = (½,0,0), cost a=0, b=1, c=1 with target −m₀, atoms
//! with p=4 parameters, and an optimizer using 2 atoms on K=4 intervals.

use std::path::Path;
use std::sync::Arc;

use llb_core::control::{
    control_operator, AtomEmbedding, ControlOperator, RelaxedControlSchedule, ScheduleDoc, DEFAULT_MAX_ATOMS,
    SIMPLEX_TOL,
};
use llb_core::cost::CostSpec;
use llb_core::dynamics::{integrator, DriftTerms, SimConfig, DEFAULT_INTEGRATOR};
use llb_core::optimizer::OptimizerConfig;
use llb_core::spectral::{Basis, BasisSpec, SpectralField};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// A vector field given by value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum FieldSpec {
    /// Spatially constant `[x, y, z]`.
    Constant([f64; 3]),
    /// Sum of single modes.
    Modes(Vec<ModeSpec>),
    /// Raw coefficients, component-major, `3·n^d` entries.
    Coeffs(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeSpec {
    pub k: Vec<usize>,
    pub component: usize,
    pub amplitude: f64,
}

impl FieldSpec {
    pub fn build(&self, basis: &Basis, field: &str) -> Result<SpectralField, CliError> {
        let f = match self {
            FieldSpec::Constant(v) => {
                if v.iter().any(|x| !x.is_finite()) {
                    return Err(CliError::field(field, "constant value must be finite"));
                }
                SpectralField::constant(basis, *v)
            }
            FieldSpec::Modes(modes) => {
                let mut f = SpectralField::zeros(basis);
                for (i, m) in modes.iter().enumerate() {
                    let one = SpectralField::single_mode(basis, &m.k, m.component, m.amplitude)
                        .map_err(|e| CliError::field(format!("{field}.modes[{i}]"), e))?;
                    f.axpy(1.0, &one);
                }
                f
            }
            FieldSpec::Coeffs(c) => {
                SpectralField::from_coeffs(basis, c.clone()).map_err(|e| CliError::field(format!("{field}.coeffs"), e))?
            }
        };
        if !f.is_finite() {
            return Err(CliError::field(field, "coefficients must be finite"));
        }
        Ok(f)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ControlSection {
    pub operator: String,
    pub p: usize,
    pub component: usize,
    pub max_atoms: usize,
    /// Schedule used by `simulate`, `energy`, `uniqueness` and
    /// `consistency`; absent means zero control.
    pub schedule: Option<ScheduleDoc>,
}

impl Default for ControlSection {
    fn default() -> Self {
        Self {
            operator: "additive".into(),
            p: 4,
            component: 0,
            max_atoms: DEFAULT_MAX_ATOMS,
            schedule: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CostSection {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    /// Absent means `−m0`.
    pub target: Option<FieldSpec>,
}

impl Default for CostSection {
    fn default() -> Self {
        Self {
            a: 0.0,
            b: 1.0,
            c: 1.0,
            target: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnergySection {
    pub n_list: Vec<usize>,
}

impl Default for EnergySection {
    fn default() -> Self {
        Self { n_list: vec![4, 8, 16, 32] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct UniquenessSection {
    pub deltas: Vec<f64>,
    /// Absent means mode 1 (first axis) in y plus the constant mode in x.
    pub direction: Option<FieldSpec>,
}

impl Default for UniquenessSection {
    fn default() -> Self {
        Self {
            deltas: vec![1e-2, 1e-3, 1e-4],
            direction: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConsistencySection {
    /// Absent means `T·{2⁻⁶, …, 2⁻¹⁰}`.
    pub dt_list: Option<Vec<f64>>,
    /// Modes per axis for the comparison. The explicit schemes need
    /// `Δt·(nπ)² ≲ 2`, so this is kept small by default.
    pub n: usize,
}

impl Default for ConsistencySection {
    fn default() -> Self {
        Self { dt_list: None, n: 4 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizerSection {
    pub population: usize,
    pub elite_fraction: f64,
    pub iterations: usize,
    pub atom_count: usize,
    #[serde(rename = "K")]
    pub knot_count: usize,
    pub init_spread: f64,
    pub init_center: f64,
}

impl Default for OptimizerSection {
    fn default() -> Self {
        let d = OptimizerConfig::default();
        Self {
            population: d.population,
            elite_fraction: d.elite_fraction,
            iterations: d.iterations,
            atom_count: d.atom_count,
            knot_count: d.knot_count,
            init_spread: d.init_spread,
            init_center: d.init_center,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConfigFile {
    pub d: usize,
    pub n: usize,
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "T")]
    pub horizon: f64,
    pub steps: usize,
    pub integrator: String,
    pub h: FieldSpec,
    pub m0: FieldSpec,
    /// Base seed; path `i` of every Monte-Carlo loop uses `derive_seed(seed, i)`.
    pub seed: u64,
    pub paths: usize,
    pub terms: DriftTerms,
    pub control: ControlSection,
    pub cost: CostSection,
    pub energy: EnergySection,
    pub uniqueness: UniquenessSection,
    pub consistency: ConsistencySection,
    pub optimizer: OptimizerSection,
}

impl Default for ConfigFile {
    fn default() -> Self {
        Self {
            d: 1,
            n: 8,
            m: 32,
            horizon: 1.0,
            steps: 256,
            integrator: DEFAULT_INTEGRATOR.into(),
            h: FieldSpec::Constant([0.0, 0.0, 1.0]),
            m0: FieldSpec::Constant([0.5, 0.0, 0.0]),
            seed: 0,
            paths: 100,
            terms: DriftTerms::default(),
            control: ControlSection::default(),
            cost: CostSection::default(),
            energy: EnergySection::default(),
            uniqueness: UniquenessSection::default(),
            consistency: ConsistencySection::default(),
            optimizer: OptimizerSection::default(),
        }
    }
}

/// A validated configuration with every object constructed.
pub struct RunConfig {
    pub file: ConfigFile,
    pub sim: SimConfig,
    pub cost: CostSpec,
    pub operator: Arc<dyn ControlOperator>,
    pub schedule: RelaxedControlSchedule,
    pub direction: SpectralField,
    pub dt_list: Vec<f64>,
    pub optimizer: OptimizerConfig,
}

pub fn parse_config(text: &str) -> Result<ConfigFile, CliError> {
    let mut de = serde_json::Deserializer::from_str(text);
    let file: ConfigFile = serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let path = e.path().to_string();
        CliError::Parse {
            path: if path == "." { String::new() } else { path },
            message: e.into_inner().to_string(),
        }
    })?;
    de.end().map_err(|e| CliError::Parse {
        path: String::new(),
        message: e.to_string(),
    })?;
    Ok(file)
}

pub fn load_config(path: &Path) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    resolve(parse_config(&text)?)
}

fn basis_of(file: &ConfigFile) -> Result<Basis, CliError> {
    if !(1..=2).contains(&file.d) {
        return Err(CliError::field("d", format!("d = {} must be 1 or 2", file.d)));
    }
    if file.n == 0 {
        return Err(CliError::field("n", "n must be at least 1"));
    }
    if file.m < 2 * file.n {
        return Err(CliError::field("M", format!("M = {} must be at least 2n = {}", file.m, 2 * file.n)));
    }
    let spec = BasisSpec::new(file.d, file.n, file.m).map_err(|e| CliError::field("n", e))?;
    Basis::new(spec).map_err(|e| CliError::field("n", e))
}

fn check_schedule(doc: &ScheduleDoc, control: &ControlSection, horizon: f64) -> Result<(), CliError> {
    let knots = &doc.knots;
    if knots.len() != doc.mixtures.len() + 1 {
        return Err(CliError::field(
            "control.schedule.knots",
            format!("{} knots for {} mixtures", knots.len(), doc.mixtures.len()),
        ));
    }
    if knots[0] != 0.0 || knots.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(CliError::field("control.schedule.knots", "knots must increase strictly from 0"));
    }
    let end = *knots.last().unwrap();
    if (end - horizon).abs() > 1e-12 * horizon {
        return Err(CliError::field("control.schedule.knots", format!("last knot {end} differs from T = {horizon}")));
    }
    for (k, mix) in doc.mixtures.iter().enumerate() {
        let here = format!("control.schedule.mixtures[{k}]");
        if mix.is_empty() {
            return Err(CliError::field(here, "mixture has no atoms"));
        }
        if mix.len() > control.max_atoms {
            return Err(CliError::field(
                here,
                format!("{} atoms exceed control.max_atoms = {}", mix.len(), control.max_atoms),
            ));
        }
        for (i, e) in mix.iter().enumerate() {
            if !(e.w >= 0.0) || !e.w.is_finite() {
                return Err(CliError::field(
                    format!("{here}[{i}].w"),
                    format!("weight {} is negative, so the weights are off the simplex", e.w),
                ));
            }
            if e.theta.len() != control.p {
                return Err(CliError::field(
                    format!("{here}[{i}].theta"),
                    format!("{} parameters, expected control.p = {}", e.theta.len(), control.p),
                ));
            }
        }
        let sum: f64 = mix.iter().map(|e| e.w).sum();
        if (sum - 1.0).abs() > SIMPLEX_TOL {
            return Err(CliError::field(
                here,
                format!("weights sum to {sum}, violating the simplex constraint Σw = 1"),
            ));
        }
    }
    Ok(())
}

fn default_dt_list(horizon: f64) -> Vec<f64> {
    (6..=10).map(|k| horizon * 0.5f64.powi(k)).collect()
}

fn check_dt_list(list: &[f64], horizon: f64) -> Result<(), CliError> {
    let field = "consistency.dt_list";
    if list.is_empty() {
        return Err(CliError::field(field, "list is empty"));
    }
    if list.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(CliError::field(field, "steps must be strictly descending"));
    }
    for dt in list {
        let steps = (horizon / dt).round();
        if !(*dt > 0.0) || steps < 1.0 || (steps * dt - horizon).abs() > 1e-9 * horizon {
            return Err(CliError::field(field, format!("dt = {dt} does not divide T = {horizon}")));
        }
    }
    Ok(())
}

/// Validates every section and constructs the run objects. Errors name the
/// offending field.
pub fn resolve(file: ConfigFile) -> Result<RunConfig, CliError> {
    let basis = basis_of(&file)?;
    if !(file.horizon > 0.0) || !file.horizon.is_finite() {
        return Err(CliError::field("T", format!("T = {} must be positive and finite", file.horizon)));
    }
    if file.steps == 0 {
        return Err(CliError::field("steps", "steps must be at least 1"));
    }
    integrator(&file.integrator).map_err(|e| CliError::field("integrator", e))?;
    let h = file.h.build(&basis, "h")?;
    let m0 = file.m0.build(&basis, "m0")?;
    if file.paths < 2 {
        return Err(CliError::field("paths", "paths must be at least 2"));
    }

    let ctl = &file.control;
    let operator = control_operator(&ctl.operator).map_err(|e| CliError::field("control.operator", e))?;
    if ctl.component >= 3 {
        return Err(CliError::field("control.component", "component must be 0, 1 or 2"));
    }
    if ctl.p == 0 || ctl.p > basis.spec().modes() {
        return Err(CliError::field(
            "control.p",
            format!("p = {} must lie in 1..={}", ctl.p, basis.spec().modes()),
        ));
    }
    if ctl.max_atoms == 0 {
        return Err(CliError::field("control.max_atoms", "max_atoms must be at least 1"));
    }
    let embedding = AtomEmbedding {
        p: ctl.p,
        component: ctl.component,
    };
    let schedule = match &ctl.schedule {
        Some(doc) => {
            check_schedule(doc, ctl, file.horizon)?;
            RelaxedControlSchedule::from_doc(doc, embedding, &basis).map_err(|e| CliError::field("control.schedule", e))?
        }
        None => RelaxedControlSchedule::zero(file.horizon, embedding, &basis)
            .map_err(|e| CliError::field("control", e))?,
    };

    let cs = &file.cost;
    if !(cs.a >= 0.0) || !cs.a.is_finite() {
        return Err(CliError::field("cost.a", format!("a = {} must be nonnegative", cs.a)));
    }
    if !(cs.b > 0.0) || !cs.b.is_finite() {
        return Err(CliError::field("cost.b", format!("b = {} must be positive", cs.b)));
    }
    if !(cs.c >= 0.0) || !cs.c.is_finite() {
        return Err(CliError::field("cost.c", format!("c = {} must be nonnegative", cs.c)));
    }
    let target = match &cs.target {
        Some(t) => t.build(&basis, "cost.target")?,
        None => m0.scaled(-1.0),
    };
    let cost = CostSpec {
        a: cs.a,
        b: cs.b,
        c: cs.c,
        target,
    };

    let n_list = &file.energy.n_list;
    if n_list.is_empty() || n_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(CliError::field("energy.n_list", "must be nonempty and strictly ascending"));
    }
    for n in n_list {
        if n.pow(file.d as u32) < ctl.p {
            return Err(CliError::field("energy.n_list", format!("n = {n} has fewer modes than control.p")));
        }
    }

    for (i, d) in file.uniqueness.deltas.iter().enumerate() {
        if !(*d >= 0.0) || !d.is_finite() {
            return Err(CliError::field(format!("uniqueness.deltas[{i}]"), format!("delta = {d} must be ≥ 0")));
        }
    }
    if file.uniqueness.deltas.is_empty() {
        return Err(CliError::field("uniqueness.deltas", "list is empty"));
    }
    let direction = match &file.uniqueness.direction {
        Some(f) => f.build(&basis, "uniqueness.direction")?,
        None => {
            let mut k = vec![0; file.d];
            let mut f = SpectralField::constant(&basis, [1.0, 0.0, 0.0]);
            if file.n > 1 {
                k[0] = 1;
                f.axpy(1.0, &SpectralField::single_mode(&basis, &k, 1, 1.0).expect("mode 1 exists"));
            }
            f
        }
    };

    let dt_list = file.consistency.dt_list.clone().unwrap_or_else(|| default_dt_list(file.horizon));
    check_dt_list(&dt_list, file.horizon)?;
    if file.consistency.n == 0 || file.consistency.n.pow(file.d as u32) < ctl.p {
        return Err(CliError::field("consistency.n", "must be at least 1 and hold control.p modes"));
    }

    let os = &file.optimizer;
    let optimizer = OptimizerConfig {
        population: os.population,
        elite_fraction: os.elite_fraction,
        iterations: os.iterations,
        mc_paths: file.paths,
        base_seed: file.seed,
        atom_count: os.atom_count,
        knot_count: os.knot_count,
        init_spread: os.init_spread,
        init_center: os.init_center,
    };
    optimizer.validate().map_err(|e| match &e {
        llb_core::Error::Range { what, .. } if *what == "N" => CliError::field("paths", e),
        llb_core::Error::Range { what, .. } => CliError::field(format!("optimizer.{what}"), e),
        _ => CliError::field("optimizer", e),
    })?;
    if os.atom_count > ctl.max_atoms {
        return Err(CliError::field(
            "optimizer.atom_count",
            format!("{} atoms exceed control.max_atoms = {}", os.atom_count, ctl.max_atoms),
        ));
    }

    let sim = SimConfig {
        basis,
        horizon: file.horizon,
        steps: file.steps,
        integrator: file.integrator.clone(),
        m0,
        h,
        seed: file.seed,
        terms: file.terms,
        embedding,
    };
    sim.validate().map_err(|e| CliError::field("h", e))?;
    Ok(RunConfig {
        file,
        sim,
        cost,
        operator,
        schedule,
        direction,
        dt_list,
        optimizer,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn field_of(text: &str) -> String {
        match parse_config(text).and_then(resolve) {
            Err(CliError::Field { field, .. }) => field,
            Err(CliError::Parse { path, .. }) => format!("parse:{path}"),
            Err(e) => panic!("unexpected error {e}"),
            Ok(_) => panic!("config accepted: {text}"),
        }
    }

    #[test]
    fn empty_object_is_the_default_problem() {
        let rc = resolve(parse_config("{}").unwrap()).unwrap();
        assert_eq!(rc.file, ConfigFile::default());
        let spec = rc.sim.basis.spec();
        assert_eq!((spec.d, spec.n, spec.m), (1, 8, 32));
        assert_eq!(rc.sim.horizon, 1.0);
        assert_eq!(rc.sim.steps, 256);
        assert_eq!(rc.sim.integrator, "semi_implicit_ito");
        assert_eq!(rc.sim.m0, SpectralField::constant(&rc.sim.basis, [0.5, 0.0, 0.0]));
        assert_eq!(rc.sim.h, SpectralField::constant(&rc.sim.basis, [0.0, 0.0, 1.0]));
        assert_eq!(rc.cost.target, rc.sim.m0.scaled(-1.0));
        assert_eq!((rc.cost.a, rc.cost.b, rc.cost.c), (0.0, 1.0, 1.0));
        assert_eq!(rc.sim.embedding.p, 4);
        assert_eq!(rc.optimizer.atom_count, 2);
        assert_eq!(rc.optimizer.knot_count, 4);
        assert_eq!(rc.dt_list.len(), 5);
        assert_eq!(rc.dt_list[0], 1.0 / 64.0);
    }

    #[test]
    fn negative_horizon_names_t() {
        assert_eq!(field_of(r#"{"T": -1.0}"#), "T");
    }

    #[test]
    fn weights_off_the_simplex_are_named() {
        let text = r#"{"control": {"schedule": {"knots": [0.0, 1.0],
            "mixtures": [[{"w": 0.5, "theta": [0,0,0,0]}, {"w": 0.6, "theta": [0,0,0,0]}]]}}}"#;
        let err = parse_config(text).and_then(resolve).err().unwrap();
        let msg = err.to_string();
        assert!(msg.contains("control.schedule.mixtures[0]"), "{msg}");
        assert!(msg.contains("simplex"), "{msg}");
    }

    #[test]
    fn field_paths_for_other_violations() {
        assert_eq!(field_of(r#"{"M": 8}"#), "M");
        assert_eq!(field_of(r#"{"d": 3}"#), "d");
        assert_eq!(field_of(r#"{"steps": 0}"#), "steps");
        assert_eq!(field_of(r#"{"integrator": "rk4"}"#), "integrator");
        assert_eq!(field_of(r#"{"cost": {"b": 0}}"#), "cost.b");
        assert_eq!(field_of(r#"{"control": {"operator": "quadratic"}}"#), "control.operator");
        assert_eq!(field_of(r#"{"optimizer": {"K": 0}}"#), "optimizer.K");
        assert_eq!(field_of(r#"{"optimizer": {"atom_count": 9}}"#), "optimizer.atom_count");
        assert_eq!(field_of(r#"{"paths": 1}"#), "paths");
        assert_eq!(field_of(r#"{"consistency": {"dt_list": [0.3]}}"#), "consistency.dt_list");
        assert_eq!(field_of(r#"{"uniqueness": {"deltas": [-1.0]}}"#), "uniqueness.deltas[0]");
        assert_eq!(field_of(r#"{"energy": {"n_list": [8, 4]}}"#), "energy.n_list");
        assert_eq!(field_of(r#"{"m0": {"coeffs": [1.0]}}"#), "m0.coeffs");
        assert_eq!(field_of(r#"{"h": {"modes": [{"k": [9], "component": 0, "amplitude": 1}]}}"#), "h.modes[0]");
    }

    #[test]
    fn parse_errors_carry_location() {
        assert_eq!(field_of(r#"{"cost": {"a": "x"}}"#), "parse:cost.a");
        assert_eq!(field_of(r#"{"stpes": 3}"#), "parse:stpes");
        let err = parse_config("{\n  \"T\": 1.0,\n  oops\n}").unwrap_err().to_string();
        assert!(err.contains("line 3"), "{err}");
    }

    #[test]
    fn resolved_file_round_trips() {
        let rc = resolve(parse_config(r#"{"n": 4, "M": 16, "seed": 7}"#).unwrap()).unwrap();
        let text = serde_json::to_string(&rc.file).unwrap();
        assert_eq!(parse_config(&text).unwrap(), rc.file);
    }
}
