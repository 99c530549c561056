//! Experiment configuration, method dispatch, and the comparison report.

use std::path::{Path, PathBuf};

use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::contact::{MechModel, ModelConfig, SystemState};
use crate::error::{FricdynError, Result};
use crate::harness::metrics::{relative_error, rms, spectrum, write_spectrum_csv};
use crate::harness::validity::validity_check;
use crate::lcp_pinn::LcpPinnConfig;
use crate::pinn::{pinn_simulate, PinnScheme, PinnSimConfig};
use crate::reference::{
    root_shooting_simulate_2dof, switching_simulate_1dof, write_events_csv, EventRecord,
};
use crate::stepping::{simulate, PivotingSolver, StepScheme, Trajectory};

/// One method entry of an experiment: tag, step size, and (for the PINN
/// schemes) the integration order.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MethodSpec {
    pub method: String,
    pub dt: f64,
    #[serde(default)]
    pub order: Option<usize>,
    #[serde(default)]
    pub seed: Option<u64>,
}

impl MethodSpec {
    pub fn new(method: &str, dt: f64) -> Self {
        Self {
            method: method.to_string(),
            dt,
            order: None,
            seed: None,
        }
    }

    pub fn with_order(method: &str, dt: f64, order: usize) -> Self {
        Self {
            method: method.to_string(),
            dt,
            order: Some(order),
            seed: None,
        }
    }

    pub fn label(&self) -> String {
        match self.order {
            Some(r) => format!("{}_{r}", self.method),
            None => self.method.clone(),
        }
    }
}

/// Reference-method settings.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OracleSpec {
    pub method: String,
    #[serde(default = "default_event_tol")]
    pub event_tol: f64,
    #[serde(default = "default_sample_dt")]
    pub sample_dt: f64,
}

fn default_event_tol() -> f64 {
    1e-10
}

fn default_sample_dt() -> f64 {
    1e-3
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InitialCondition {
    pub q: Vec<f64>,
    pub u: Vec<f64>,
}

/// Full experiment description, loadable from a JSON config file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub model: ModelConfig,
    pub initial: InitialCondition,
    pub t_end: f64,
    pub oracle: OracleSpec,
    pub methods: Vec<MethodSpec>,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

fn default_seed() -> u64 {
    2024
}

impl ExperimentConfig {
    pub fn from_json_file(path: &Path) -> Result<Self> {
        let cfg: Self = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.t_end <= 0.0 {
            return Err(FricdynError::InvalidConfig("t_end must be positive".into()));
        }
        if !matches!(self.oracle.method.as_str(), "switching" | "root_shooting") {
            return Err(FricdynError::InvalidConfig(format!(
                "unknown oracle method '{}'",
                self.oracle.method
            )));
        }
        for m in &self.methods {
            if m.dt <= 0.0 {
                return Err(FricdynError::InvalidConfig(format!(
                    "method '{}' has nonpositive dt",
                    m.method
                )));
            }
            if matches!(m.method.as_str(), "switching" | "root_shooting") {
                return Err(FricdynError::InvalidConfig(
                    "only the oracle entry may name a reference method".into(),
                ));
            }
            parse_method(&m.method)?;
        }
        Ok(())
    }
}

enum MethodKind {
    Conventional,
    Rk4,
    Pinn(PinnScheme),
}

fn parse_method(tag: &str) -> Result<MethodKind> {
    Ok(match tag {
        "conventional" => MethodKind::Conventional,
        "rk4" => MethodKind::Rk4,
        "single_pinn" => MethodKind::Pinn(PinnScheme::Single),
        "dual_pinn" => MethodKind::Pinn(PinnScheme::Dual),
        "adv_single_pinn" => MethodKind::Pinn(PinnScheme::AdvancedSingle),
        "adv_dual_pinn" => MethodKind::Pinn(PinnScheme::AdvancedDual),
        other => {
            return Err(FricdynError::InvalidConfig(format!(
                "unknown method '{other}'"
            )))
        }
    })
}

/// Runs one non-reference method.
pub fn run_method(
    model: &MechModel,
    initial: &SystemState,
    t_end: f64,
    spec: &MethodSpec,
    base_seed: u64,
) -> Result<Trajectory> {
    match parse_method(&spec.method)? {
        MethodKind::Conventional => {
            let mut lcp = PivotingSolver::default();
            simulate(model, initial, t_end, spec.dt, StepScheme::Conventional, &mut lcp)
        }
        MethodKind::Rk4 => {
            let mut lcp = PivotingSolver::default();
            simulate(model, initial, t_end, spec.dt, StepScheme::Rk4Lcp, &mut lcp)
        }
        MethodKind::Pinn(scheme) => {
            let order = spec.order.unwrap_or(4);
            let mut cfg = PinnSimConfig::new(scheme, order)?;
            let seed = spec.seed.unwrap_or(base_seed);
            cfg.step.seed = seed;
            cfg.lcp = LcpPinnConfig {
                seed: seed.wrapping_add(101),
                ..cfg.lcp
            };
            pinn_simulate(model, initial, t_end, spec.dt, &cfg)
        }
    }
}

/// Runs the configured oracle.
pub fn run_oracle(
    model: &MechModel,
    initial: &SystemState,
    t_end: f64,
    oracle: &OracleSpec,
) -> Result<(Trajectory, Vec<EventRecord>)> {
    match oracle.method.as_str() {
        "switching" => {
            switching_simulate_1dof(model, initial, t_end, oracle.event_tol, oracle.sample_dt)
        }
        "root_shooting" => {
            root_shooting_simulate_2dof(model, initial, t_end, oracle.event_tol, oracle.sample_dt)
        }
        other => Err(FricdynError::InvalidConfig(format!(
            "unknown oracle method '{other}'"
        ))),
    }
}

/// RMS of one reported quantity per method.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QuantityReport {
    pub quantity: String,
    pub rms: f64,
    /// Percent error against the oracle; absent when the row is invalid
    /// (reported as a cross) or when it is the oracle itself.
    pub rel_err_pct: Option<f64>,
}

/// One row of the comparison report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MethodReport {
    pub method: String,
    pub dt: f64,
    pub is_oracle: bool,
    /// Stick-slip-transition validity against the oracle.
    pub valid: bool,
    pub quantities: Vec<QuantityReport>,
    #[serde(default)]
    pub error: Option<String>,
}

/// The Tables-2/3 analogue: one oracle row plus one row per method.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub rows: Vec<MethodReport>,
    pub quantities: Vec<String>,
}

impl ComparisonReport {
    pub fn row(&self, label: &str) -> Option<&MethodReport> {
        self.rows.iter().find(|r| r.method == label)
    }

    /// Rounded percent error of one quantity (two decimals, table style).
    pub fn rounded_error(&self, label: &str, quantity: &str) -> Option<f64> {
        let row = self.row(label)?;
        let q = row.quantities.iter().find(|q| q.quantity == quantity)?;
        q.rel_err_pct.map(|e| (e * 100.0).round() / 100.0)
    }

    /// Plain-text table; invalid rows print a cross for their errors.
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("{:<22} {:>10} {:>7}", "method", "dt", "valid"));
        for q in &self.quantities {
            out.push_str(&format!(" | {:>24}", q));
        }
        out.push('\n');
        for row in &self.rows {
            let validity = if row.is_oracle {
                "oracle"
            } else if row.error.is_some() {
                "error"
            } else if row.valid {
                "yes"
            } else {
                "x"
            };
            out.push_str(&format!(
                "{:<22} {:>10.3e} {:>7}",
                row.method, row.dt, validity
            ));
            for q in &self.quantities {
                let cell = match row.quantities.iter().find(|r| &r.quantity == q) {
                    Some(qr) => match qr.rel_err_pct {
                        Some(e) => format!("{:.4} ({:.2}%)", qr.rms, e),
                        None if row.is_oracle => format!("{:.4}", qr.rms),
                        None => "x".to_string(),
                    },
                    None => match &row.error {
                        Some(e) => format!("error: {e}"),
                        None => "-".to_string(),
                    },
                };
                out.push_str(&format!(" | {:>24}", cell));
            }
            out.push('\n');
        }
        out
    }
}

fn quantity_names(model: &MechModel) -> Vec<String> {
    let mut names = Vec::new();
    if model.prescribed_normal().is_none() {
        for j in 1..=model.n_contacts() {
            names.push(format!("contact_force_{j}"));
        }
    }
    for i in 1..=model.n_dof() {
        names.push(format!("q_{i}"));
    }
    for i in 1..=model.n_dof() {
        names.push(format!("u_{i}"));
    }
    names
}

fn quantity_series(traj: &Trajectory, name: &str) -> Vec<f64> {
    let idx: usize = name
        .rsplit('_')
        .next()
        .and_then(|s| s.parse::<usize>().ok())
        .unwrap_or(1)
        - 1;
    if name.starts_with("contact_force") {
        traj.states.iter().map(|s| s.lambda_n[idx]).collect()
    } else if name.starts_with("q_") {
        traj.states.iter().map(|s| s.q[idx]).collect()
    } else {
        traj.states.iter().map(|s| s.u[idx]).collect()
    }
}

/// Runs the oracle and every method, computes RMS values, relative errors,
/// and validity flags, and writes trajectory/event/spectrum CSVs plus the
/// text and JSON reports when an output directory is configured.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ComparisonReport> {
    cfg.validate()?;
    let model = cfg.model.build()?;
    let initial = SystemState::initial(
        &model,
        DVector::from_column_slice(&cfg.initial.q),
        DVector::from_column_slice(&cfg.initial.u),
    )?;

    let (oracle_traj, events) = run_oracle(&model, &initial, cfg.t_end, &cfg.oracle)?;
    let quantities = quantity_names(&model);

    let oracle_rms: Vec<f64> = quantities
        .iter()
        .map(|q| rms(&quantity_series(&oracle_traj, q)))
        .collect::<Result<_>>()?;

    // methods run concurrently; failures are reported per row
    let outcomes: Vec<(MethodSpec, Result<Trajectory>)> = cfg
        .methods
        .par_iter()
        .map(|spec| {
            let traj = run_method(&model, &initial, cfg.t_end, spec, cfg.seed);
            (spec.clone(), traj)
        })
        .collect();

    let mut rows = Vec::with_capacity(outcomes.len() + 1);
    rows.push(MethodReport {
        method: oracle_traj.method_tag.clone(),
        dt: cfg.oracle.sample_dt,
        is_oracle: true,
        valid: true,
        quantities: quantities
            .iter()
            .zip(oracle_rms.iter())
            .map(|(q, r)| QuantityReport {
                quantity: q.clone(),
                rms: *r,
                rel_err_pct: None,
            })
            .collect(),
        error: None,
    });

    let mut produced: Vec<(String, Trajectory)> = Vec::new();
    for (spec, outcome) in outcomes {
        match outcome {
            Ok(traj) => {
                let valid = validity_check(&traj, &oracle_traj);
                let qreports = quantities
                    .iter()
                    .zip(oracle_rms.iter())
                    .map(|(q, oracle_value)| {
                        let value = rms(&quantity_series(&traj, q))?;
                        let rel = if valid {
                            Some(relative_error(value, *oracle_value)?)
                        } else {
                            None
                        };
                        Ok(QuantityReport {
                            quantity: q.clone(),
                            rms: value,
                            rel_err_pct: rel,
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                rows.push(MethodReport {
                    method: spec.label(),
                    dt: spec.dt,
                    is_oracle: false,
                    valid,
                    quantities: qreports,
                    error: None,
                });
                produced.push((spec.label(), traj));
            }
            Err(e) => rows.push(MethodReport {
                method: spec.label(),
                dt: spec.dt,
                is_oracle: false,
                valid: false,
                quantities: Vec::new(),
                error: Some(e.to_string()),
            }),
        }
    }

    let report = ComparisonReport { rows, quantities };
    let quantities = &report.quantities;

    if let Some(dir) = &cfg.output_dir {
        std::fs::create_dir_all(dir)?;
        oracle_traj.write_csv(&dir.join(format!("{}.csv", oracle_traj.method_tag)))?;
        write_events_csv(&events, &dir.join("events.csv"))?;
        let spec0 = spectrum(
            &quantity_series(&oracle_traj, quantities.last().unwrap()),
            cfg.oracle.sample_dt,
        );
        if let Ok(spec0) = spec0 {
            write_spectrum_csv(
                &spec0,
                &dir.join(format!("spectrum_{}.csv", oracle_traj.method_tag)),
            )?;
        }
        for (label, traj) in &produced {
            traj.write_csv(&dir.join(format!("{label}.csv")))?;
            if let Ok(sp) = spectrum(&quantity_series(traj, quantities.last().unwrap()), traj.dt)
            {
                write_spectrum_csv(&sp, &dir.join(format!("spectrum_{label}.csv")))?;
            }
        }
        std::fs::write(dir.join("report.txt"), report.render_text())?;
        std::fs::write(dir.join("report.json"), serde_json::to_string_pretty(&report)?)?;
    }

    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contact::{FrictionLaw, ModelIParams};

    fn experiment(methods: Vec<MethodSpec>, out: Option<PathBuf>) -> ExperimentConfig {
        ExperimentConfig {
            model: ModelConfig::Model1(ModelIParams {
                normal_force: 5.0,
                belt_speed: 0.5,
                friction: FrictionLaw::rational(0.1, 1.0),
                ..ModelIParams::default()
            }),
            initial: InitialCondition {
                q: vec![0.0],
                u: vec![0.5],
            },
            t_end: 8.0,
            oracle: OracleSpec {
                method: "switching".into(),
                event_tol: 1e-10,
                sample_dt: 1e-2,
            },
            methods,
            seed: 11,
            output_dir: out,
        }
    }

    #[test]
    fn oracle_only_report_has_zero_error_row() {
        let report = run_experiment(&experiment(Vec::new(), None)).unwrap();
        assert_eq!(report.rows.len(), 1);
        assert!(report.rows[0].is_oracle);
        assert!(report.rows[0].valid);
    }

    #[test]
    fn conventional_method_is_valid_and_close_at_fine_steps() {
        let report = run_experiment(&experiment(
            vec![MethodSpec::new("conventional", 1e-3)],
            None,
        ))
        .unwrap();
        let row = report.row("conventional").unwrap();
        assert!(row.valid, "{}", report.render_text());
        for q in &row.quantities {
            assert!(q.rel_err_pct.unwrap() < 2.0, "{q:?}");
        }
    }

    #[test]
    fn report_is_deterministic() {
        let cfg = experiment(vec![MethodSpec::new("conventional", 5e-3)], None);
        let a = serde_json::to_string(&run_experiment(&cfg).unwrap()).unwrap();
        let b = serde_json::to_string(&run_experiment(&cfg).unwrap()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn output_files_are_written() {
        let dir = std::env::temp_dir().join("fricdyn_experiment_test");
        let _ = std::fs::remove_dir_all(&dir);
        let cfg = experiment(vec![MethodSpec::new("conventional", 5e-3)], Some(dir.clone()));
        run_experiment(&cfg).unwrap();
        for f in [
            "switching.csv",
            "events.csv",
            "conventional.csv",
            "report.txt",
            "report.json",
        ] {
            assert!(dir.join(f).exists(), "missing {f}");
        }
    }

    #[test]
    fn config_rejects_bad_method() {
        let mut cfg = experiment(vec![MethodSpec::new("nope", 1e-3)], None);
        assert!(cfg.validate().is_err());
        cfg.methods.clear();
        cfg.oracle.method = "zigzag".into();
        assert!(cfg.validate().is_err());
    }
}
