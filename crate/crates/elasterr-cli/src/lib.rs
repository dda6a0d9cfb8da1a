//! Experiment runner: solve a benchmark problem on a sequence of mesh
//! levels, evaluate the selected error estimators on every level, and write
//! the results as CSV and JSON tables. The CSV files are the interface for
//! plotting and comparison; nothing is rendered in-process.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use elasterr::{
    assemble_mixed_system, compute_residual_data, effectivity, elasticity_local_estimator, energy_error,
    poisson_local_estimator, project_load, residual_estimator, solve_saddle, stokes_local_estimator, DofMap,
    ElasticityVariant, ElementPair, EstimatorKind, EstimatorReport, LoadProjection, MaterialParams, Mesh, ProblemId,
    ResidualData, TestProblem,
};

/// One experiment: a benchmark problem, a material, mesh levels, and the
/// estimators to evaluate on every level. Level l stands for the element
/// size h = 2^-l, so the element count per direction scales with the domain
/// side length.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub problem: ProblemId,
    pub pair: ElementPair,
    pub mu: f64,
    pub nu: f64,
    pub levels: Vec<u32>,
    pub estimators: Vec<EstimatorKind>,
    pub out: PathBuf,
    pub element_map: bool,
}

impl RunConfig {
    /// Baseline sweep: smooth benchmark, mu = 100, nu = 0.4, Taylor-Hood
    /// elements, h = 1/4 down to 1/64, all five estimators.
    pub fn table_defaults() -> RunConfig {
        RunConfig {
            problem: ProblemId::P1,
            pair: ElementPair::Q2Q1,
            mu: 100.0,
            nu: 0.4,
            levels: vec![2, 3, 4, 5, 6],
            estimators: EstimatorKind::all().to_vec(),
            out: PathBuf::from("out"),
            element_map: false,
        }
    }

    fn validate(&self) -> Result<(), CliError> {
        if !(self.mu > 0.0 && self.mu.is_finite()) {
            return Err(CliError::Config(format!("mu must be positive, got {}", self.mu)));
        }
        if !(self.nu > 0.0 && self.nu <= 0.5) {
            return Err(CliError::Config(format!("nu must lie in (0, 0.5], got {}", self.nu)));
        }
        if self.levels.is_empty() {
            return Err(CliError::Config("at least one mesh level is required".into()));
        }
        if let Some(&l) = self.levels.iter().find(|&&l| !(1..=20).contains(&l)) {
            return Err(CliError::Config(format!(
                "mesh level {l} outside the supported range 1..=20"
            )));
        }
        if self.estimators.is_empty() {
            return Err(CliError::Config("at least one estimator is required".into()));
        }
        Ok(())
    }

    /// Elements per direction at one level; exact because the domain sides
    /// are small integers.
    fn mesh_n(&self, level: u32) -> usize {
        let side = TestProblem::new(self.problem).domain.width();
        (side * f64::powi(2.0, level as i32)).round() as usize
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{0}")]
    Run(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Run(_) => 2,
        }
    }
}

fn run_err(e: impl std::fmt::Display) -> CliError {
    CliError::Run(e.to_string())
}

/// One summary line: a mesh level evaluated with one estimator. The exact
/// error and the effectivity are present only for problems with a known
/// solution; the rate tracks the estimate across successive levels.
#[derive(Debug, Clone)]
pub struct SummaryRow {
    pub level: u32,
    pub h: f64,
    pub ndof: usize,
    pub estimator: EstimatorKind,
    pub eta: f64,
    pub theta: f64,
    pub err: Option<f64>,
    pub effectivity: Option<f64>,
    pub rate: Option<f64>,
}

pub struct ExperimentOutput {
    pub rows: Vec<SummaryRow>,
    pub summary_csv: PathBuf,
    pub summary_json: PathBuf,
}

/// Rate log2(value(h)/value(h/2)) for consecutive entries of one series,
/// attached to the finer entry; the first entry has none. Consecutive
/// entries must halve h exactly.
pub fn convergence_rates(series: &[(f64, f64)]) -> Result<Vec<Option<f64>>, CliError> {
    let mut rates = vec![None; series.len()];
    for i in 1..series.len() {
        let (h_prev, v_prev) = series[i - 1];
        let (h_cur, v_cur) = series[i];
        if (h_prev - 2.0 * h_cur).abs() > 1e-12 * h_prev {
            return Err(CliError::Config(format!(
                "mesh sizes {h_prev} and {h_cur} do not halve; rates need consecutive levels"
            )));
        }
        rates[i] = Some((v_prev / v_cur).log2());
    }
    Ok(rates)
}

/// Ten significant digits for every floating-point cell.
pub fn format_float(x: f64) -> String {
    format!("{x:.9e}")
}

fn format_opt(x: Option<f64>) -> String {
    x.map(format_float).unwrap_or_default()
}

/// Writes through a sibling temp file so a crash never leaves a partial
/// table behind.
fn write_atomic(path: &Path, contents: &str) -> Result<(), CliError> {
    let mut tmp_name = path.as_os_str().to_os_string();
    tmp_name.push(".tmp");
    let tmp = PathBuf::from(tmp_name);
    fs::write(&tmp, contents).map_err(|e| CliError::Run(format!("write {}: {e}", tmp.display())))?;
    fs::rename(&tmp, path).map_err(|e| CliError::Run(format!("rename {}: {e}", path.display())))?;
    Ok(())
}

fn evaluate_estimator(
    kind: EstimatorKind,
    mesh: &Mesh,
    data: &ResidualData,
    mat: &MaterialParams,
    f_h: &LoadProjection,
) -> Result<EstimatorReport, CliError> {
    Ok(match kind {
        EstimatorKind::Residual => residual_estimator(mesh, data, mat, f_h),
        EstimatorKind::Elasticity => {
            elasticity_local_estimator(mesh, data, mat, f_h, ElasticityVariant::Full).map_err(run_err)?
        }
        EstimatorKind::ModifiedElasticity => {
            elasticity_local_estimator(mesh, data, mat, f_h, ElasticityVariant::Modified).map_err(run_err)?
        }
        EstimatorKind::Stokes => stokes_local_estimator(mesh, data, mat, f_h).map_err(run_err)?,
        EstimatorKind::Poisson => poisson_local_estimator(mesh, data, mat, f_h),
    })
}

/// Per-element indicator table. Local-problem estimators report their
/// displacement-energy part in comp_R and everything pressure-like in
/// comp_J; only the residual estimator has an edge column.
fn write_element_map(
    out: &Path,
    kind: EstimatorKind,
    level: u32,
    mesh: &Mesh,
    report: &EstimatorReport,
) -> Result<(), CliError> {
    let mut csv = String::from("element,xc,yc,eta_sq,comp_R,comp_E,comp_J\n");
    for (i, (elem, ind)) in mesh.elements.iter().zip(&report.per_element).enumerate() {
        let [xc, yc] = elem.center();
        let (comp_r, comp_e, comp_j) = match kind {
            EstimatorKind::Residual => (ind.comp_r, ind.comp_e, ind.comp_j),
            _ => (ind.comp_r, 0.0, ind.comp_e + ind.comp_j),
        };
        let _ = writeln!(
            csv,
            "{i},{},{},{},{},{},{}",
            format_float(xc),
            format_float(yc),
            format_float(ind.eta_sq),
            format_float(comp_r),
            format_float(comp_e),
            format_float(comp_j),
        );
    }
    write_atomic(&out.join(format!("element_map_{}_l{level}.csv", kind.name())), &csv)
}

/// Runs the configured sweep and writes summary.csv, summary.json, and the
/// optional per-element maps into the output directory.
pub fn run_experiment(config: RunConfig) -> Result<ExperimentOutput, CliError> {
    config.validate()?;
    let mut levels = config.levels.clone();
    levels.sort_unstable();
    levels.dedup();
    let mut estimators: Vec<EstimatorKind> = Vec::new();
    for &kind in &config.estimators {
        if !estimators.contains(&kind) {
            estimators.push(kind);
        }
    }
    fs::create_dir_all(&config.out).map_err(|e| CliError::Run(format!("create {}: {e}", config.out.display())))?;

    let problem = TestProblem::new(config.problem);
    let mat = MaterialParams::new(config.mu, config.nu).map_err(|e| CliError::Config(e.to_string()))?;
    let exact = problem.exact();

    let mut rows: Vec<SummaryRow> = Vec::new();
    let mut json_runs = Vec::new();
    for &level in &levels {
        let n = config.mesh_n(level);
        let h = f64::powi(0.5, level as i32);
        let t_solve = Instant::now();
        let mesh = problem.build_mesh(n).map_err(run_err)?;
        let dofmap = DofMap::build(&mesh, config.pair).map_err(run_err)?;
        let system = assemble_mixed_system(
            &mesh,
            &dofmap,
            &mat,
            |p| problem.load(&mat, p),
            |p| problem.dirichlet_value(p),
        )
        .map_err(run_err)?;
        let sol = solve_saddle(&system).map_err(run_err)?;
        let f_h = project_load(&mesh, &mat, |p| problem.load(&mat, p)).map_err(run_err)?;
        let data = compute_residual_data(&mesh, &dofmap, &sol, &mat, &f_h);
        let solve_ms = t_solve.elapsed().as_secs_f64() * 1e3;
        let err = exact
            .as_ref()
            .map(|ex| energy_error(&mesh, &dofmap, &sol, &mat, |p| ex.grad_u(p), |p| ex.p(p)));

        for &kind in &estimators {
            let t_est = Instant::now();
            let report = evaluate_estimator(kind, &mesh, &data, &mat, &f_h)?;
            let wall_ms = t_est.elapsed().as_secs_f64() * 1e3;
            if config.element_map {
                write_element_map(&config.out, kind, level, &mesh, &report)?;
            }
            let eff = match err {
                Some(e) => Some(effectivity(report.eta, e).map_err(run_err)?),
                None => None,
            };
            rows.push(SummaryRow {
                level,
                h,
                ndof: dofmap.n_total(),
                estimator: kind,
                eta: report.eta,
                theta: report.theta,
                err,
                effectivity: eff,
                rate: None,
            });
            json_runs.push(serde_json::json!({
                "level": level,
                "h": h,
                "ndof": dofmap.n_total(),
                "estimator": kind.name(),
                "wall_ms": wall_ms,
                "solve_ms": solve_ms,
                "solver_residual": sol.residual,
            }));
        }
    }

    for &kind in &estimators {
        let idx: Vec<usize> = (0..rows.len()).filter(|&i| rows[i].estimator == kind).collect();
        let series: Vec<(f64, f64)> = idx.iter().map(|&i| (rows[i].h, rows[i].eta)).collect();
        let rates = convergence_rates(&series)?;
        for (&i, rate) in idx.iter().zip(rates) {
            rows[i].rate = rate;
        }
    }

    let mut csv = String::from("problem,pair,mu,nu,h,ndof,estimator,eta,theta,err,effectivity,rate\n");
    for row in &rows {
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            config.problem.name(),
            config.pair.name(),
            format_float(config.mu),
            format_float(config.nu),
            format_float(row.h),
            row.ndof,
            row.estimator.name(),
            format_float(row.eta),
            format_float(row.theta),
            format_opt(row.err),
            format_opt(row.effectivity),
            format_opt(row.rate),
        );
    }
    let summary_csv = config.out.join("summary.csv");
    write_atomic(&summary_csv, &csv)?;

    let summary = serde_json::json!({
        "config": {
            "problem": config.problem.name(),
            "pair": config.pair.name(),
            "mu": config.mu,
            "nu": config.nu,
            "levels": levels,
            "estimators": estimators.iter().map(|k| k.name()).collect::<Vec<_>>(),
            "out": config.out.display().to_string(),
            "element_map": config.element_map,
        },
        "runs": json_runs,
    });
    let summary_json = config.out.join("summary.json");
    let mut body = serde_json::to_string_pretty(&summary).map_err(run_err)?;
    body.push('\n');
    write_atomic(&summary_json, &body)?;

    Ok(ExperimentOutput {
        rows,
        summary_csv,
        summary_json,
    })
}
