//! Acceptance gate: nine numbered checks covering the benchmark
//! effectivity table, robustness in the material parameters, convergence
//! rates on the smooth and singular problems, and the analytic property
//! suite. Every check prints exactly one "criterion N (name): PASS/FAIL
//! (detail)" line; run with `--nocapture` to see the report.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};
use std::time::Instant;

use elasterr::{
    assemble_blocks, assemble_mixed_system, basis_eval, compute_residual_data, effectivity, elasticity_local_estimator,
    energy_error, poisson_local_estimator, project_load, q3_correction_basis, residual_estimator, solve_saddle,
    stokes_local_estimator, BasisFamily, DofMap, ElasticityVariant, ElementPair, EstimatorKind, EstimatorReport,
    MaterialParams, ProblemId, TestProblem,
};

/// Benchmark resolutions, h = 1/4 down to 1/64.
const TABLE_N: [usize; 5] = [4, 8, 16, 32, 64];

/// The three estimators with reference effectivity columns.
const TABLE_KINDS: [EstimatorKind; 3] = [EstimatorKind::Residual, EstimatorKind::Stokes, EstimatorKind::Poisson];

/// Reference effectivities (residual, Stokes-type, Poisson-type) of the
/// smooth benchmark at mu = 100, one row per resolution in TABLE_N order.
const EFF_NU_0400: [[f64; 3]; 5] = [
    [2.850, 1.5197, 1.3808],
    [2.701, 1.5799, 1.4071],
    [2.636, 1.5804, 1.3919],
    [2.617, 1.5782, 1.3850],
    [2.612, 1.5774, 1.3830],
];
const EFF_NU_0499: [[f64; 3]; 5] = [
    [2.847, 1.5176, 1.3794],
    [2.701, 1.5797, 1.4070],
    [2.636, 1.5804, 1.3919],
    [2.617, 1.5782, 1.3850],
    [2.612, 1.5774, 1.3830],
];
const EFF_NU_049999: [[f64; 3]; 5] = [
    [2.847, 1.5175, 1.3794],
    [2.701, 1.5797, 1.4070],
    [2.636, 1.5804, 1.3919],
    [2.617, 1.5782, 1.3850],
    [2.612, 1.5774, 1.3830],
];

struct Case {
    reports: Vec<EstimatorReport>,
    error: Option<f64>,
    solver_residual: f64,
}

/// Full pipeline on one mesh: solve, evaluate all five estimators, and the
/// exact energy error where the problem has a known solution.
fn compute_case(problem_id: ProblemId, pair: ElementPair, mu: f64, nu: f64, n: usize) -> Case {
    let problem = TestProblem::new(problem_id);
    let mesh = problem.build_mesh(n).unwrap();
    let dofmap = DofMap::build(&mesh, pair).unwrap();
    let mat = MaterialParams::new(mu, nu).unwrap();
    let system = assemble_mixed_system(
        &mesh,
        &dofmap,
        &mat,
        |p| problem.load(&mat, p),
        |p| problem.dirichlet_value(p),
    )
    .unwrap();
    let sol = solve_saddle(&system).unwrap();
    let f_h = project_load(&mesh, &mat, |p| problem.load(&mat, p)).unwrap();
    let data = compute_residual_data(&mesh, &dofmap, &sol, &mat, &f_h);
    let reports = vec![
        residual_estimator(&mesh, &data, &mat, &f_h),
        elasticity_local_estimator(&mesh, &data, &mat, &f_h, ElasticityVariant::Full).unwrap(),
        elasticity_local_estimator(&mesh, &data, &mat, &f_h, ElasticityVariant::Modified).unwrap(),
        stokes_local_estimator(&mesh, &data, &mat, &f_h).unwrap(),
        poisson_local_estimator(&mesh, &data, &mat, &f_h),
    ];
    let error = problem
        .exact()
        .map(|ex| energy_error(&mesh, &dofmap, &sol, &mat, |p| ex.grad_u(p), |p| ex.p(p)));
    Case {
        reports,
        error,
        solver_residual: sol.residual,
    }
}

type CaseKey = (&'static str, &'static str, u64, u64, usize);

/// Criteria share sweeps through this cache; each configuration is solved
/// once per test binary run.
fn case(problem: ProblemId, pair: ElementPair, mu: f64, nu: f64, n: usize) -> Arc<Case> {
    static CACHE: OnceLock<Mutex<HashMap<CaseKey, Arc<OnceLock<Arc<Case>>>>>> = OnceLock::new();
    let cell = {
        let mut map = CACHE.get_or_init(Default::default).lock().unwrap();
        map.entry((problem.name(), pair.name(), mu.to_bits(), nu.to_bits(), n))
            .or_default()
            .clone()
    };
    cell.get_or_init(|| Arc::new(compute_case(problem, pair, mu, nu, n)))
        .clone()
}

fn find_report(case: &Case, kind: EstimatorKind) -> &EstimatorReport {
    case.reports.iter().find(|r| r.kind == kind).unwrap()
}

fn eff_of(case: &Case, kind: EstimatorKind) -> f64 {
    let error = case.error.expect("effectivity needs a problem with a known solution");
    effectivity(find_report(case, kind).eta, error).unwrap()
}

fn rel_dev(value: f64, reference: f64) -> f64 {
    ((value - reference) / reference).abs()
}

/// One line per criterion so a full run reads as a nine-line report.
fn verdict(number: u32, name: &str, pass: bool, detail: String) {
    println!(
        "criterion {number} ({name}): {} ({detail})",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "criterion {number} ({name}): {detail}");
}

#[test]
fn criterion_1_effectivity_benchmark() {
    // computed fresh rather than through the shared cache so the measured
    // time covers the entire sweep
    let start = Instant::now();
    let cases: Vec<Case> = TABLE_N
        .iter()
        .map(|&n| compute_case(ProblemId::P1, ElementPair::Q2Q1, 100.0, 0.4, n))
        .collect();
    let elapsed = start.elapsed().as_secs_f64();
    let mut max_dev = 0.0f64;
    for (case, row) in cases.iter().zip(EFF_NU_0400) {
        for (kind, expected) in TABLE_KINDS.into_iter().zip(row) {
            max_dev = max_dev.max(rel_dev(eff_of(case, kind), expected));
        }
    }
    verdict(
        1,
        "effectivity benchmark",
        max_dev <= 0.02 && elapsed < 120.0,
        format!(
            "max deviation {:.2}% over 15 entries, {elapsed:.1}s of 120s",
            max_dev * 100.0
        ),
    );
}

#[test]
fn criterion_2_nu_robustness() {
    let mut max_dev = 0.0f64;
    let mut worst_gap = 0.0f64;
    for (nu, table) in [(0.499, EFF_NU_0499), (0.49999, EFF_NU_049999)] {
        for (&n, row) in TABLE_N.iter().zip(table) {
            let near = case(ProblemId::P1, ElementPair::Q2Q1, 100.0, nu, n);
            let base = case(ProblemId::P1, ElementPair::Q2Q1, 100.0, 0.4, n);
            for (kind, expected) in TABLE_KINDS.into_iter().zip(row) {
                max_dev = max_dev.max(rel_dev(eff_of(&near, kind), expected));
                if n >= 8 {
                    // agreement with the nu = 0.4 column to three significant
                    // digits: gap below half a unit in the third digit
                    let a = eff_of(&base, kind);
                    let b = eff_of(&near, kind);
                    let unit = 10f64.powi(a.abs().log10().floor() as i32 - 2);
                    worst_gap = worst_gap.max((a - b).abs() / unit);
                }
            }
        }
    }
    verdict(
        2,
        "nu robustness",
        max_dev <= 0.02 && worst_gap <= 0.5,
        format!(
            "max deviation {:.2}%, worst third-digit gap {worst_gap:.3} units",
            max_dev * 100.0
        ),
    );
}

#[test]
fn criterion_3_mu_invariance() {
    let mut max_change = 0.0f64;
    for mu in [1.0, 0.01] {
        for &n in &TABLE_N {
            let base = case(ProblemId::P1, ElementPair::Q2Q1, 100.0, 0.4, n);
            let other = case(ProblemId::P1, ElementPair::Q2Q1, mu, 0.4, n);
            for kind in EstimatorKind::all() {
                max_change = max_change.max(rel_dev(eff_of(&other, kind), eff_of(&base, kind)));
            }
        }
    }
    verdict(
        3,
        "mu invariance",
        max_change <= 1e-3,
        format!("max effectivity change {:.1e} over mu in {{0.01, 1, 100}}", max_change),
    );
}

#[test]
fn criterion_4_convergence_order() {
    let errors: Vec<f64> = TABLE_N
        .iter()
        .map(|&n| case(ProblemId::P1, ElementPair::Q2Q1, 100.0, 0.4, n).error.unwrap())
        .collect();
    let rates: Vec<f64> = (2..TABLE_N.len()).map(|i| (errors[i - 1] / errors[i]).log2()).collect();
    let pass = rates.iter().all(|r| (1.9..=2.1).contains(r));
    let shown: Vec<String> = rates.iter().map(|r| format!("{r:.3}")).collect();
    verdict(
        4,
        "convergence order",
        pass,
        format!("three finest rates {}", shown.join(", ")),
    );
}

#[test]
fn criterion_5_singular_convergence_rates() {
    // no exact solution exists here, so the estimate stands in for the
    // error; the observed order is the mean rate over the three finest
    // halvings
    let mut pass = true;
    let mut parts = Vec::new();
    for (nu, lo, hi) in [(0.4, 1.45, 1.75), (0.49999, 1.9, 2.1)] {
        for kind in TABLE_KINDS {
            let etas: Vec<f64> = TABLE_N
                .iter()
                .map(|&n| find_report(&case(ProblemId::P2, ElementPair::Q2Q1, 100.0, nu, n), kind).eta)
                .collect();
            let rate = (etas[1] / etas[4]).log2() / 3.0;
            pass &= (lo..=hi).contains(&rate);
            parts.push(format!("{} {rate:.3}", kind.name()));
        }
        parts.push(format!("for nu={nu};"));
    }
    verdict(5, "singular rates", pass, parts.join(" "));
}

#[test]
fn criterion_6_singularity_localization() {
    let c = case(ProblemId::P3, ElementPair::Q2Q1, 10.0, 0.4, 128);
    let poisson = find_report(&c, EstimatorKind::Poisson);
    let (imax, _) = poisson
        .per_element
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.eta_sq.total_cmp(&b.1.eta_sq))
        .unwrap();
    let mesh = TestProblem::new(ProblemId::P3).build_mesh(128).unwrap();
    let elem = &mesh.elements[imax];
    let touches = (elem.x0 + elem.hx - 1.0).abs() <= 1e-12 && (elem.y0 + elem.hy - 1.0).abs() <= 1e-12;
    verdict(
        6,
        "singularity localization",
        touches,
        format!(
            "max pressure-correction indicator on element {imax} with upper-right corner ({:.4}, {:.4})",
            elem.x0 + elem.hx,
            elem.y0 + elem.hy
        ),
    );
}

struct PropertyOutcome {
    name: &'static str,
    pass: bool,
    detail: String,
}

/// The analytic checks that need no reference numbers, shared between the
/// two element pairs.
fn property_suite(pair: ElementPair) -> Vec<PropertyOutcome> {
    let mut out = Vec::new();

    // zero data leaves nothing to estimate
    {
        let problem = TestProblem::new(ProblemId::P1);
        let mesh = problem.build_mesh(4).unwrap();
        let dofmap = DofMap::build(&mesh, pair).unwrap();
        let mat = MaterialParams::new(100.0, 0.4).unwrap();
        let system = assemble_mixed_system(&mesh, &dofmap, &mat, |_| [0.0; 2], |_| [0.0; 2]).unwrap();
        let sol = solve_saddle(&system).unwrap();
        let f_h = project_load(&mesh, &mat, |_| [0.0; 2]).unwrap();
        let data = compute_residual_data(&mesh, &dofmap, &sol, &mat, &f_h);
        let etas = [
            residual_estimator(&mesh, &data, &mat, &f_h).eta,
            elasticity_local_estimator(&mesh, &data, &mat, &f_h, ElasticityVariant::Full)
                .unwrap()
                .eta,
            elasticity_local_estimator(&mesh, &data, &mat, &f_h, ElasticityVariant::Modified)
                .unwrap()
                .eta,
            stokes_local_estimator(&mesh, &data, &mat, &f_h).unwrap().eta,
            poisson_local_estimator(&mesh, &data, &mat, &f_h).eta,
        ];
        let max_eta = etas.into_iter().fold(0.0f64, f64::max);
        out.push(PropertyOutcome {
            name: "zero data",
            pass: max_eta <= 1e-12,
            detail: format!("max eta {max_eta:.1e}"),
        });
    }

    // the Poisson-split pressure part coincides with the divergence term of
    // the residual estimator element by element
    {
        let c = case(ProblemId::P1, pair, 100.0, 0.4, 8);
        let res = find_report(&c, EstimatorKind::Residual);
        let poi = find_report(&c, EstimatorKind::Poisson);
        let max_rel = res
            .per_element
            .iter()
            .zip(&poi.per_element)
            .map(|(r, p)| (r.comp_j - p.comp_j).abs() / r.comp_j.abs().max(f64::MIN_POSITIVE))
            .fold(0.0f64, f64::max);
        out.push(PropertyOutcome {
            name: "pressure part",
            pass: max_rel <= 1e-13,
            detail: format!("max rel gap {max_rel:.1e}"),
        });
    }

    // scaling (mu, lambda, f) -> (c mu, c lambda, c f) moves estimate and
    // error together; the load carries the mu factor, so scaling mu at
    // fixed nu realizes the whole transformation
    {
        let base = case(ProblemId::P1, pair, 100.0, 0.4, 4);
        let mut max_dev = 0.0f64;
        for c_scale in [1e-2, 1e3] {
            let scaled = case(ProblemId::P1, pair, 100.0 * c_scale, 0.4, 4);
            for kind in EstimatorKind::all() {
                max_dev = max_dev.max(rel_dev(eff_of(&scaled, kind), eff_of(&base, kind)));
            }
        }
        out.push(PropertyOutcome {
            name: "scaling",
            pass: max_dev <= 1e-10,
            detail: format!("max effectivity drift {max_dev:.1e}"),
        });
    }

    // the raw stiffness block annihilates translations and the linearized
    // rotation
    {
        let problem = TestProblem::new(ProblemId::P1);
        let mesh = problem.build_mesh(2).unwrap();
        let dofmap = DofMap::build(&mesh, pair).unwrap();
        let mat = MaterialParams::new(1.0, 0.3).unwrap();
        let blocks = assemble_blocks(&mesh, &dofmap, &mat, |_| [0.0; 2]).unwrap();
        let n_disp = dofmap.n_displacement();
        let mut modes = vec![vec![0.0; n_disp]; 3];
        for (node, &[x, y]) in dofmap.q2_node_coords.iter().enumerate() {
            modes[0][2 * node] = 1.0;
            modes[1][2 * node + 1] = 1.0;
            modes[2][2 * node] = -y;
            modes[2][2 * node + 1] = x;
        }
        let max_entry = modes
            .iter()
            .flat_map(|m| blocks.a.matvec(m))
            .fold(0.0f64, |acc, v| acc.max(v.abs()));
        out.push(PropertyOutcome {
            name: "rigid body",
            pass: max_entry <= 1e-10,
            detail: format!("max |A v| entry {max_entry:.1e}"),
        });
    }

    // the accepted solve certifies its own algebraic residual
    {
        let c = case(ProblemId::P1, pair, 100.0, 0.4, 8);
        out.push(PropertyOutcome {
            name: "galerkin residual",
            pass: c.solver_residual <= 1e-10,
            detail: format!("relative residual {:.1e}", c.solver_residual),
        });
    }

    // analytic gradients of every basis family against central differences
    {
        let points = [[-0.77, 0.13], [0.5, -0.41], [0.31, 0.9], [-0.2, -0.63], [0.0, 0.0]];
        let step = 1e-5;
        let mut max_err = 0.0f64;
        let families = [
            BasisFamily::Q1,
            BasisFamily::Q2,
            BasisFamily::P1Disc,
            BasisFamily::Q2Full,
        ];
        for point in points {
            for family in families {
                let vals = basis_eval(family, point);
                for axis in 0..2 {
                    let mut lo = point;
                    let mut hi = point;
                    lo[axis] -= step;
                    hi[axis] += step;
                    let flo = basis_eval(family, lo);
                    let fhi = basis_eval(family, hi);
                    for i in 0..vals.values.len() {
                        let fd = (fhi.values[i] - flo.values[i]) / (2.0 * step);
                        max_err = max_err.max((fd - vals.gradients[i][axis]).abs());
                    }
                }
            }
            let vals = q3_correction_basis(point);
            for axis in 0..2 {
                let mut lo = point;
                let mut hi = point;
                lo[axis] -= step;
                hi[axis] += step;
                let flo = q3_correction_basis(lo);
                let fhi = q3_correction_basis(hi);
                for i in 0..vals.values.len() {
                    let fd = (fhi.values[i] - flo.values[i]) / (2.0 * step);
                    max_err = max_err.max((fd - vals.gradients[i][axis]).abs());
                }
            }
        }
        out.push(PropertyOutcome {
            name: "basis gradients",
            pass: max_err <= 1e-6,
            detail: format!("max gap to central differences {max_err:.1e}"),
        });
    }

    out
}

fn summarize_properties(outcomes: &[PropertyOutcome]) -> (bool, String) {
    let pass = outcomes.iter().all(|o| o.pass);
    let parts: Vec<String> = outcomes
        .iter()
        .map(|o| {
            if o.pass {
                format!("{} ok", o.name)
            } else {
                format!("{} FAIL: {}", o.name, o.detail)
            }
        })
        .collect();
    (pass, parts.join(", "))
}

#[test]
fn criterion_7_property_suite() {
    let (pass, detail) = summarize_properties(&property_suite(ElementPair::Q2Q1));
    verdict(7, "property suite", pass, detail);
}

#[test]
fn criterion_8_energy_error_oracle() {
    let problem = TestProblem::new(ProblemId::P1);
    let exact = problem.exact().unwrap();
    let mesh = problem.build_mesh(8).unwrap();
    let dofmap = DofMap::build(&mesh, ElementPair::Q2Q1).unwrap();
    let mat = MaterialParams::new(100.0, 0.4).unwrap();
    let system = assemble_mixed_system(
        &mesh,
        &dofmap,
        &mat,
        |p| problem.load(&mat, p),
        |p| problem.dirichlet_value(p),
    )
    .unwrap();
    let sol = solve_saddle(&system).unwrap();
    let library = energy_error(&mesh, &dofmap, &sol, &mat, |p| exact.grad_u(p), |p| exact.p(p));
    let oracle = brute_force_energy_error(&mesh, &dofmap, &sol.displacement, &sol.pressure, &mat);
    let rel = rel_dev(library, oracle);
    verdict(
        8,
        "energy-error oracle",
        rel <= 5e-9,
        format!("library {library:.10e} vs oracle {oracle:.10e}, rel gap {rel:.1e}"),
    );
}

/// Brute-force energy error of the smooth benchmark, sharing nothing with
/// the library evaluation path: its own quadrature constants, its own shape
/// functions, and the exact gradient written out term by term.
fn brute_force_energy_error(
    mesh: &elasterr::Mesh,
    dofmap: &DofMap,
    displacement: &[f64],
    pressure: &[f64],
    mat: &MaterialParams,
) -> f64 {
    // 7-point Gauss-Legendre rule on [-1, 1]
    const GP: [f64; 7] = [
        -0.9491079123427585,
        -0.7415311855993945,
        -0.4058451513773972,
        0.0,
        0.4058451513773972,
        0.7415311855993945,
        0.9491079123427585,
    ];
    const GW: [f64; 7] = [
        0.1294849661688697,
        0.2797053914892766,
        0.3818300505051189,
        0.4179591836734694,
        0.3818300505051189,
        0.2797053914892766,
        0.1294849661688697,
    ];
    let pi = std::f64::consts::PI;
    let quad_1d = |t: f64| {
        (
            [0.5 * t * (t - 1.0), 1.0 - t * t, 0.5 * t * (t + 1.0)],
            [t - 0.5, -2.0 * t, t + 0.5],
        )
    };
    let lin_1d = |t: f64| [0.5 * (1.0 - t), 0.5 * (1.0 + t)];
    let pressure_weight = 0.5 / mat.mu() + mat.inv_lambda();

    let mut total = 0.0;
    for (e, elem) in mesh.elements.iter().enumerate() {
        let nodes = &dofmap.element_q2_nodes[e];
        let pdofs = dofmap.pressure_dofs(e);
        for (qi, &xi) in GP.iter().enumerate() {
            for (qj, &eta) in GP.iter().enumerate() {
                let w = GW[qi] * GW[qj] * elem.hx * elem.hy / 4.0;
                let (lx, dx) = quad_1d(xi);
                let (ly, dy) = quad_1d(eta);
                // grad[c][d] = d u_c / d x_d of the discrete displacement
                let mut grad = [[0.0f64; 2]; 2];
                for b in 0..3 {
                    for a in 0..3 {
                        let gx = dx[a] * ly[b] * 2.0 / elem.hx;
                        let gy = lx[a] * dy[b] * 2.0 / elem.hy;
                        for c in 0..2 {
                            let u = displacement[2 * nodes[3 * b + a] + c];
                            grad[c][0] += u * gx;
                            grad[c][1] += u * gy;
                        }
                    }
                }
                // bilinear pressure, corners counterclockwise from lower
                // left
                let qx = lin_1d(xi);
                let qy = lin_1d(eta);
                let corner_vals = [qx[0] * qy[0], qx[1] * qy[0], qx[1] * qy[1], qx[0] * qy[1]];
                let mut p_h = 0.0;
                for (k, v) in corner_vals.into_iter().enumerate() {
                    p_h += pressure[pdofs[k]] * v;
                }
                let x = elem.x0 + (xi + 1.0) * elem.hx / 2.0;
                let y = elem.y0 + (eta + 1.0) * elem.hy / 2.0;
                // gradient of u = pi sin(pi x) sin(pi y) (sin(pi x) cos(pi y),
                // -cos(pi x) sin(pi y)); the exact pressure vanishes
                let g11 = 0.5 * pi * pi * (2.0 * pi * x).sin() * (2.0 * pi * y).sin();
                let g12 = pi * pi * (pi * x).sin().powi(2) * (2.0 * pi * y).cos();
                let g21 = -pi * pi * (pi * y).sin().powi(2) * (2.0 * pi * x).cos();
                let g22 = -0.5 * pi * pi * (2.0 * pi * x).sin() * (2.0 * pi * y).sin();
                let d = [g11 - grad[0][0], g12 - grad[0][1], g21 - grad[1][0], g22 - grad[1][1]];
                let grad_sq: f64 = d.iter().map(|v| v * v).sum();
                total += w * (2.0 * mat.mu() * grad_sq + pressure_weight * p_h * p_h);
            }
        }
    }
    total.sqrt()
}

#[test]
fn criterion_9_discontinuous_pressure_parity() {
    let mut max_dev = 0.0f64;
    for &n in &TABLE_N {
        let q2q1 = case(ProblemId::P1, ElementPair::Q2Q1, 100.0, 0.4, n);
        let q2p1 = case(ProblemId::P1, ElementPair::Q2P1, 100.0, 0.4, n);
        for kind in EstimatorKind::all() {
            max_dev = max_dev.max(rel_dev(eff_of(&q2p1, kind), eff_of(&q2q1, kind)));
        }
    }
    let (props_pass, props_detail) = summarize_properties(&property_suite(ElementPair::Q2P1));
    verdict(
        9,
        "q2p1 parity",
        max_dev <= 0.10 && props_pass,
        format!(
            "max effectivity deviation {:.2}%; properties: {props_detail}",
            max_dev * 100.0
        ),
    );
}
