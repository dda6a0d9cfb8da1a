//! Energy-norm a posteriori error estimation: the weighted-residual
//! estimator and three element-local correction-problem estimators (mixed
//! elasticity in full and modified form, Stokes, Poisson).
//!
//! Volume terms use a 4x4 Gauss rule and edge terms a 4-point rule; both are
//! exact for every polynomial integrand that appears, so the estimator values
//! contain no quadrature error beyond the Q1 load projection they are fed.
//!
//! Local correction problems pose a saddle system on 12 vector correction
//! modes (24 velocity unknowns) and 9 biquadratic pressure modes per
//! element. The correction modes carry nonzero boundary traces, so their
//! divergences control every pressure mode including the constants and the
//! saddle system is nonsingular as it stands, for every Poisson ratio up to
//! and including the incompressible limit.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::accum::CompensatedSum;
use crate::assembly::LoadProjection;
use crate::basis::{basis_eval, q2_hessians, q3_correction_basis, BasisFamily, BasisValues};
use crate::dofmap::DofMap;
use crate::material::MaterialParams;
use crate::mesh::{EdgeTag, Element, Mesh, SIDES};
use crate::quadrature::{gauss_1d, gauss_rule, QuadratureRule};
use crate::solve::{evaluate_solution, MixedSolution, PointValues};

const N_BUBBLES: usize = 12;
const N_VELOCITY: usize = 2 * N_BUBBLES;
const N_PRESSURE: usize = 9;
const N_SADDLE: usize = N_VELOCITY + N_PRESSURE;

#[derive(Debug, Error)]
pub enum EstimatorError {
    #[error("local correction system on element {element} is singular (correction-space stability failure)")]
    SingularLocalSystem { element: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EstimatorKind {
    Residual,
    Elasticity,
    ModifiedElasticity,
    Stokes,
    Poisson,
}

impl EstimatorKind {
    pub fn name(self) -> &'static str {
        match self {
            EstimatorKind::Residual => "residual",
            EstimatorKind::Elasticity => "elasticity",
            EstimatorKind::ModifiedElasticity => "modified",
            EstimatorKind::Stokes => "stokes",
            EstimatorKind::Poisson => "poisson",
        }
    }

    pub fn parse(s: &str) -> Option<EstimatorKind> {
        match s {
            "residual" => Some(EstimatorKind::Residual),
            "elasticity" => Some(EstimatorKind::Elasticity),
            "modified" => Some(EstimatorKind::ModifiedElasticity),
            "stokes" => Some(EstimatorKind::Stokes),
            "poisson" => Some(EstimatorKind::Poisson),
            _ => None,
        }
    }

    pub fn all() -> [EstimatorKind; 5] {
        [
            EstimatorKind::Residual,
            EstimatorKind::Elasticity,
            EstimatorKind::ModifiedElasticity,
            EstimatorKind::Stokes,
            EstimatorKind::Poisson,
        ]
    }
}

/// Which local elasticity problem to solve: the full symmetric-gradient form
/// or the decoupled full-gradient form. Both report the same norm.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ElasticityVariant {
    Full,
    Modified,
}

/// Squared indicator of one element split into its parts. For the residual
/// estimator the parts are interior (`comp_r`), edge (`comp_e`), and
/// divergence (`comp_j`). Local-problem estimators put the displacement
/// energy in `comp_r`, the weighted pressure-correction mass in `comp_e`,
/// and any divergence-residual term in `comp_j`.
#[derive(Debug, Clone, Copy)]
pub struct ElementIndicator {
    pub eta_sq: f64,
    pub comp_r: f64,
    pub comp_e: f64,
    pub comp_j: f64,
}

#[derive(Debug, Clone)]
pub struct EstimatorReport {
    pub kind: EstimatorKind,
    pub per_element: Vec<ElementIndicator>,
    /// Data-oscillation Theta_K^2 per element.
    pub theta_sq: Vec<f64>,
    pub eta: f64,
    pub theta: f64,
}

fn finish_report(kind: EstimatorKind, per_element: Vec<ElementIndicator>, f_h: &LoadProjection) -> EstimatorReport {
    let mut total = CompensatedSum::new();
    for ind in &per_element {
        total.add(ind.eta_sq);
    }
    EstimatorReport {
        kind,
        per_element,
        theta_sq: f_h.theta_sq.clone(),
        eta: total.total().max(0.0).sqrt(),
        theta: f_h.theta,
    }
}

/// Residual fields sampled at fixed quadrature points: the interior and
/// divergence residuals at the 4x4 volume points of every element, and the
/// stress-jump residual at the 4 edge points of every edge. Edge values are
/// stored once per edge in the edge's own parameterization (t increasing
/// with x on horizontal edges, with y on vertical ones) and are shared by
/// both adjacent elements. Interior edges hold the full stress jump
/// (S_0 - S_1) n, which is independent of the stored normal's orientation;
/// traction-free boundary edges hold S n, constrained edges hold zero.
#[derive(Debug, Clone)]
pub struct ResidualData {
    pub r_k: Vec<Vec<[f64; 2]>>,
    pub r_div: Vec<Vec<f64>>,
    pub r_e: Vec<Vec<[f64; 2]>>,
}

fn stress_times_normal(v: &PointValues, two_mu: f64, normal: [f64; 2]) -> [f64; 2] {
    let s11 = v.p - two_mu * v.strain[0][0];
    let s12 = -two_mu * v.strain[0][1];
    let s22 = v.p - two_mu * v.strain[1][1];
    [s11 * normal[0] + s12 * normal[1], s12 * normal[0] + s22 * normal[1]]
}

pub fn compute_residual_data(
    mesh: &Mesh,
    dofmap: &DofMap,
    sol: &MixedSolution,
    mat: &MaterialParams,
    f_h: &LoadProjection,
) -> ResidualData {
    let rule = gauss_rule(4).expect("fixed valid order");
    let mu = mat.mu();
    let inv_lambda = mat.inv_lambda();

    let mut r_k = Vec::with_capacity(mesh.n_elements());
    let mut r_div = Vec::with_capacity(mesh.n_elements());
    for (elem, e) in mesh.elements.iter().enumerate() {
        let sx = 2.0 / e.hx;
        let sy = 2.0 / e.hy;
        let nodes = &dofmap.element_q2_nodes[elem];
        let p_dofs = dofmap.pressure_dofs(elem);
        let mut elem_rk = Vec::with_capacity(rule.len());
        let mut elem_rdiv = Vec::with_capacity(rule.len());
        for &point in &rule.points {
            let q2 = basis_eval(BasisFamily::Q2, point);
            let hess = q2_hessians(point);
            // du[c] = (d/dx, d/dy), d2[c] = (d_xx, d_xy, d_yy) of component c
            let mut du = [[0.0f64; 2]; 2];
            let mut d2 = [[0.0f64; 3]; 2];
            for (i, &node) in nodes.iter().enumerate() {
                let gx = sx * q2.gradients[i][0];
                let gy = sy * q2.gradients[i][1];
                let hxx = sx * sx * hess[i][0];
                let hxy = sx * sy * hess[i][1];
                let hyy = sy * sy * hess[i][2];
                for c in 0..2 {
                    let a = sol.displacement[2 * node + c];
                    du[c][0] += a * gx;
                    du[c][1] += a * gy;
                    d2[c][0] += a * hxx;
                    d2[c][1] += a * hxy;
                    d2[c][2] += a * hyy;
                }
            }
            let pb = basis_eval(dofmap.pair.pressure_family(), point);
            let mut p = 0.0;
            let mut grad_p = [0.0f64; 2];
            for (k, &dof) in p_dofs.iter().enumerate() {
                let a = sol.pressure[dof];
                p += a * pb.values[k];
                grad_p[0] += a * sx * pb.gradients[k][0];
                grad_p[1] += a * sy * pb.gradients[k][1];
            }
            let f = f_h.eval(elem, point);
            elem_rk.push([
                f[0] + mu * (2.0 * d2[0][0] + d2[0][2] + d2[1][1]) - grad_p[0],
                f[1] + mu * (2.0 * d2[1][2] + d2[1][0] + d2[0][1]) - grad_p[1],
            ]);
            elem_rdiv.push(du[0][0] + du[1][1] + inv_lambda * p);
        }
        r_k.push(elem_rk);
        r_div.push(elem_rdiv);
    }

    let (edge_t, _) = gauss_1d(4).expect("fixed valid order");
    let two_mu = 2.0 * mu;
    let mut r_e = Vec::with_capacity(mesh.n_edges());
    for edge in &mesh.edges {
        let mut values = vec![[0.0f64; 2]; edge_t.len()];
        match edge.tag {
            EdgeTag::Dirichlet => {}
            EdgeTag::Neumann => {
                let elem = edge.elements[0].expect("boundary edge has an element");
                let side = edge.sides[0].expect("boundary edge has a side");
                for (q, &t) in edge_t.iter().enumerate() {
                    let v = evaluate_solution(sol, mesh, dofmap, elem, Element::side_point(side, t))
                        .expect("element index from mesh range");
                    values[q] = stress_times_normal(&v, two_mu, edge.normal);
                }
            }
            EdgeTag::Interior => {
                let e0 = edge.elements[0].expect("interior edge has two elements");
                let e1 = edge.elements[1].expect("interior edge has two elements");
                let s0 = edge.sides[0].expect("interior edge has two sides");
                let s1 = edge.sides[1].expect("interior edge has two sides");
                for (q, &t) in edge_t.iter().enumerate() {
                    let v0 = evaluate_solution(sol, mesh, dofmap, e0, Element::side_point(s0, t))
                        .expect("element index from mesh range");
                    let v1 = evaluate_solution(sol, mesh, dofmap, e1, Element::side_point(s1, t))
                        .expect("element index from mesh range");
                    let sn0 = stress_times_normal(&v0, two_mu, edge.normal);
                    let sn1 = stress_times_normal(&v1, two_mu, edge.normal);
                    values[q] = [sn0[0] - sn1[0], sn0[1] - sn1[1]];
                }
            }
            EdgeTag::Untagged => unreachable!("dof map construction rejects untagged meshes"),
        }
        r_e.push(values);
    }

    ResidualData { r_k, r_div, r_e }
}

/// Squared divergence-residual norm 2 mu ||R_div||^2 of one element.
fn divergence_part(rule: &QuadratureRule, elem: &Element, r_div: &[f64], div_weight: f64) -> f64 {
    let jac = elem.hx * elem.hy / 4.0;
    let mut s = 0.0;
    for (q, &r) in r_div.iter().enumerate() {
        s += rule.weights[q] * jac * r * r;
    }
    div_weight * s
}

pub fn residual_estimator(
    mesh: &Mesh,
    data: &ResidualData,
    mat: &MaterialParams,
    f_h: &LoadProjection,
) -> EstimatorReport {
    let rule = gauss_rule(4).expect("fixed valid order");
    let (_, edge_w) = gauss_1d(4).expect("fixed valid order");
    let div_weight = 2.0 * mat.mu();

    let mut per_element = Vec::with_capacity(mesh.n_elements());
    for (elem, e) in mesh.elements.iter().enumerate() {
        let jac = e.hx * e.hy / 4.0;
        // h_K is the longest element side, the grid size h on square meshes.
        let rho_k = mat.rho_k(e.hx.max(e.hy));
        let mut interior = 0.0;
        for (q, r) in data.r_k[elem].iter().enumerate() {
            interior += rule.weights[q] * jac * (r[0] * r[0] + r[1] * r[1]);
        }
        let comp_r = rho_k * rho_k * interior;
        let comp_j = divergence_part(&rule, e, &data.r_div[elem], div_weight);
        let mut comp_e = 0.0;
        for &side in &SIDES {
            let edge = &mesh.edges[e.edges[side]];
            let mut norm_sq = 0.0;
            for (q, r) in data.r_e[e.edges[side]].iter().enumerate() {
                norm_sq += edge_w[q] * (r[0] * r[0] + r[1] * r[1]);
            }
            // The full-jump mass rho_E |[S n]|^2 of an interior edge counts
            // once towards the global estimator, so the two adjacent elements
            // split it evenly. Boundary residuals live on a single element.
            let share = if edge.tag == EdgeTag::Interior { 0.5 } else { 1.0 };
            comp_e += share * mat.rho_e(edge.length) * 0.5 * edge.length * norm_sq;
        }
        per_element.push(ElementIndicator {
            eta_sq: comp_r + comp_e + comp_j,
            comp_r,
            comp_e,
            comp_j,
        });
    }
    finish_report(EstimatorKind::Residual, per_element, f_h)
}

/// Reference-point evaluations shared by the local problems: bubble and
/// pressure-mode values at the volume points and bubble traces on each side.
struct LocalSpaces {
    rule: QuadratureRule,
    edge_w: Vec<f64>,
    bubbles: Vec<BasisValues>,
    pressures: Vec<BasisValues>,
    side_bubbles: [Vec<[f64; N_BUBBLES]>; 4],
}

impl LocalSpaces {
    fn new() -> LocalSpaces {
        let rule = gauss_rule(4).expect("fixed valid order");
        let (edge_t, edge_w) = gauss_1d(4).expect("fixed valid order");
        let bubbles: Vec<BasisValues> = rule.points.iter().map(|&p| q3_correction_basis(p)).collect();
        let pressures: Vec<BasisValues> = rule
            .points
            .iter()
            .map(|&p| basis_eval(BasisFamily::Q2Full, p))
            .collect();
        let side_bubbles = std::array::from_fn(|side| {
            edge_t
                .iter()
                .map(|&t| {
                    let b = q3_correction_basis(Element::side_point(side, t));
                    std::array::from_fn(|i| b.values[i])
                })
                .collect()
        });
        LocalSpaces {
            rule,
            edge_w,
            bubbles,
            pressures,
            side_bubbles,
        }
    }
}

/// Element-size-dependent local operators, with the material factor 2 mu
/// folded into both displacement forms.
struct LocalOperators {
    /// 2 mu (eps(v_i), eps(v_j)), 24x24.
    g_eps: DMatrix<f64>,
    /// 2 mu (grad v_i, grad v_j), 24x24.
    g_grad: DMatrix<f64>,
    /// (q_k, div v_j), 9x24.
    d: DMatrix<f64>,
    /// Pressure-mode mass matrix, 9x9.
    m_p: DMatrix<f64>,
    /// 2 mu (grad phi_i, grad phi_j) on the scalar modes, 12x12.
    lap: DMatrix<f64>,
}

fn local_operators(spaces: &LocalSpaces, hx: f64, hy: f64, mat: &MaterialParams) -> LocalOperators {
    let two_mu = 2.0 * mat.mu();
    let sx = 2.0 / hx;
    let sy = 2.0 / hy;
    let jac = hx * hy / 4.0;
    let mut g_eps = DMatrix::zeros(N_VELOCITY, N_VELOCITY);
    let mut g_grad = DMatrix::zeros(N_VELOCITY, N_VELOCITY);
    let mut d = DMatrix::zeros(N_PRESSURE, N_VELOCITY);
    let mut m_p = DMatrix::zeros(N_PRESSURE, N_PRESSURE);
    let mut lap = DMatrix::zeros(N_BUBBLES, N_BUBBLES);

    for (q, bubble) in spaces.bubbles.iter().enumerate() {
        let w = spaces.rule.weights[q] * jac;
        let grads: Vec<[f64; 2]> = bubble.gradients.iter().map(|g| [sx * g[0], sy * g[1]]).collect();
        for i in 0..N_BUBBLES {
            let [gxi, gyi] = grads[i];
            for j in 0..N_BUBBLES {
                let [gxj, gyj] = grads[j];
                let full = gxi * gxj + gyi * gyj;
                lap[(i, j)] += two_mu * w * full;
                g_grad[(2 * i, 2 * j)] += two_mu * w * full;
                g_grad[(2 * i + 1, 2 * j + 1)] += two_mu * w * full;
                g_eps[(2 * i, 2 * j)] += two_mu * w * (gxi * gxj + 0.5 * gyi * gyj);
                g_eps[(2 * i, 2 * j + 1)] += two_mu * w * 0.5 * gyi * gxj;
                g_eps[(2 * i + 1, 2 * j)] += two_mu * w * 0.5 * gxi * gyj;
                g_eps[(2 * i + 1, 2 * j + 1)] += two_mu * w * (gyi * gyj + 0.5 * gxi * gxj);
            }
        }
        let pressure = &spaces.pressures[q];
        for k in 0..N_PRESSURE {
            let pk = pressure.values[k];
            for j in 0..N_BUBBLES {
                let [gxj, gyj] = grads[j];
                d[(k, 2 * j)] += w * pk * gxj;
                d[(k, 2 * j + 1)] += w * pk * gyj;
            }
            for l in 0..N_PRESSURE {
                m_p[(k, l)] += w * pk * pressure.values[l];
            }
        }
    }
    LocalOperators {
        g_eps,
        g_grad,
        d,
        m_p,
        lap,
    }
}

/// Symmetric saddle matrix [ G  -D^T ; -D  -c M_p ] of one local problem.
fn saddle_matrix(ops: &LocalOperators, eps_form: bool, c_scale: f64) -> DMatrix<f64> {
    let g = if eps_form { &ops.g_eps } else { &ops.g_grad };
    let mut a = DMatrix::zeros(N_SADDLE, N_SADDLE);
    for i in 0..N_VELOCITY {
        for j in 0..N_VELOCITY {
            a[(i, j)] = g[(i, j)];
        }
    }
    for k in 0..N_PRESSURE {
        for j in 0..N_VELOCITY {
            a[(j, N_VELOCITY + k)] = -ops.d[(k, j)];
            a[(N_VELOCITY + k, j)] = -ops.d[(k, j)];
        }
        for l in 0..N_PRESSURE {
            a[(N_VELOCITY + k, N_VELOCITY + l)] = -c_scale * ops.m_p[(k, l)];
        }
    }
    a
}

/// Load functionals of one element: Fv[2b+c] tests the interior residual and
/// the stress-jump shares of the four sides against the vector correction
/// modes, Fq[k] = (R_div, q_k).
fn local_rhs(spaces: &LocalSpaces, mesh: &Mesh, elem_idx: usize, data: &ResidualData) -> (DVector<f64>, DVector<f64>) {
    let elem = &mesh.elements[elem_idx];
    let jac = elem.hx * elem.hy / 4.0;
    let mut fv = DVector::zeros(N_VELOCITY);
    let mut fq = DVector::zeros(N_PRESSURE);
    for (q, bubble) in spaces.bubbles.iter().enumerate() {
        let w = spaces.rule.weights[q] * jac;
        let r = data.r_k[elem_idx][q];
        let rd = data.r_div[elem_idx][q];
        for b in 0..N_BUBBLES {
            let v = bubble.values[b];
            fv[2 * b] += w * r[0] * v;
            fv[2 * b + 1] += w * r[1] * v;
        }
        let pressure = &spaces.pressures[q];
        for k in 0..N_PRESSURE {
            fq[k] += w * rd * pressure.values[k];
        }
    }
    // Element-wise integration by parts puts the stress-jump load on the
    // boundary with the same sign as the interior residual. An interior edge
    // drives the local problems of both adjacent elements, so each one loads
    // half of the stored full jump.
    for &side in &SIDES {
        let edge_id = elem.edges[side];
        let edge = &mesh.edges[edge_id];
        let scale = if edge.tag == EdgeTag::Interior { 0.5 } else { 1.0 };
        let half_len = 0.5 * edge.length;
        for (q, r) in data.r_e[edge_id].iter().enumerate() {
            let w = spaces.edge_w[q] * half_len * scale;
            for b in 0..N_BUBBLES {
                let v = spaces.side_bubbles[side][q][b];
                fv[2 * b] += w * r[0] * v;
                fv[2 * b + 1] += w * r[1] * v;
            }
        }
    }
    (fv, fq)
}

/// Cache key of a local factorization: the element size. On graded meshes
/// every distinct size is factored once and reused.
type LocalKey = (u64, u64);

fn local_key(elem: &Element) -> LocalKey {
    (elem.hx.to_bits(), elem.hy.to_bits())
}

struct SaddleCache {
    ops: LocalOperators,
    lu: nalgebra::FullPivLU<f64, nalgebra::Dyn, nalgebra::Dyn>,
}

/// Solve the local saddle problem on every element, returning the velocity
/// and pressure corrections.
fn local_saddle_solutions(
    mesh: &Mesh,
    data: &ResidualData,
    mat: &MaterialParams,
    eps_form: bool,
    c_scale: f64,
) -> Result<(Vec<(DVector<f64>, DVector<f64>)>, HashMap<LocalKey, SaddleCache>), EstimatorError> {
    let spaces = LocalSpaces::new();
    let mut cache: HashMap<LocalKey, SaddleCache> = HashMap::new();
    let mut solutions = Vec::with_capacity(mesh.n_elements());
    for elem_idx in 0..mesh.n_elements() {
        let elem = &mesh.elements[elem_idx];
        let key = local_key(elem);
        if !cache.contains_key(&key) {
            let ops = local_operators(&spaces, elem.hx, elem.hy, mat);
            let lu = saddle_matrix(&ops, eps_form, c_scale).full_piv_lu();
            cache.insert(key, SaddleCache { ops, lu });
        }
        let entry = &cache[&key];
        let (fv, fq) = local_rhs(&spaces, mesh, elem_idx, data);
        let mut rhs = DVector::zeros(N_SADDLE);
        for i in 0..N_VELOCITY {
            rhs[i] = fv[i];
        }
        for k in 0..N_PRESSURE {
            rhs[N_VELOCITY + k] = -fq[k];
        }
        let x = entry
            .lu
            .solve(&rhs)
            .ok_or(EstimatorError::SingularLocalSystem { element: elem_idx })?;
        if x.iter().any(|v| !v.is_finite()) {
            return Err(EstimatorError::SingularLocalSystem { element: elem_idx });
        }
        let e = DVector::from_fn(N_VELOCITY, |i, _| x[i]);
        let eps = DVector::from_fn(N_PRESSURE, |k, _| x[N_VELOCITY + k]);
        solutions.push((e, eps));
    }
    Ok((solutions, cache))
}

/// Mixed elasticity local problems (full symmetric-gradient or decoupled
/// full-gradient form, both with the compressibility term), reported in the
/// energy norm 2 mu ||eps(e)||^2 + ((2 mu)^-1 + lambda^-1) ||eps_p||^2.
pub fn elasticity_local_estimator(
    mesh: &Mesh,
    data: &ResidualData,
    mat: &MaterialParams,
    f_h: &LoadProjection,
    variant: ElasticityVariant,
) -> Result<EstimatorReport, EstimatorError> {
    let eps_form = matches!(variant, ElasticityVariant::Full);
    let (solutions, cache) = local_saddle_solutions(mesh, data, mat, eps_form, mat.inv_lambda())?;
    let pressure_weight = 0.5 / mat.mu() + mat.inv_lambda();
    let mut per_element = Vec::with_capacity(mesh.n_elements());
    for (elem_idx, (e, eps)) in solutions.iter().enumerate() {
        let elem = &mesh.elements[elem_idx];
        let entry = &cache[&local_key(elem)];
        let comp_r = (e.transpose() * &entry.ops.g_eps * e)[(0, 0)];
        let comp_e = pressure_weight * (eps.transpose() * &entry.ops.m_p * eps)[(0, 0)];
        per_element.push(ElementIndicator {
            eta_sq: comp_r + comp_e,
            comp_r,
            comp_e,
            comp_j: 0.0,
        });
    }
    let kind = match variant {
        ElasticityVariant::Full => EstimatorKind::Elasticity,
        ElasticityVariant::Modified => EstimatorKind::ModifiedElasticity,
    };
    Ok(finish_report(kind, per_element, f_h))
}

/// Stokes local problems (full-gradient form, no compressibility term),
/// reported as 2 mu |e|_1^2 + (2 mu)^-1 ||eps_p||^2 + 2 mu ||R_div||^2. The
/// last term is the same divergence-residual norm the residual and Poisson
/// estimators carry; the Stokes multiplier only sees the divergence residual
/// through the correction space, so the direct term restores the part the
/// solve projects away.
pub fn stokes_local_estimator(
    mesh: &Mesh,
    data: &ResidualData,
    mat: &MaterialParams,
    f_h: &LoadProjection,
) -> Result<EstimatorReport, EstimatorError> {
    let (solutions, cache) = local_saddle_solutions(mesh, data, mat, false, 0.0)?;
    let rule = gauss_rule(4).expect("fixed valid order");
    let pressure_weight = 0.5 / mat.mu();
    let div_weight = 2.0 * mat.mu();
    let mut per_element = Vec::with_capacity(mesh.n_elements());
    for (elem_idx, (e, eps)) in solutions.iter().enumerate() {
        let elem = &mesh.elements[elem_idx];
        let entry = &cache[&local_key(elem)];
        let comp_r = (e.transpose() * &entry.ops.g_grad * e)[(0, 0)];
        let comp_e = pressure_weight * (eps.transpose() * &entry.ops.m_p * eps)[(0, 0)];
        let comp_j = divergence_part(&rule, elem, &data.r_div[elem_idx], div_weight);
        per_element.push(ElementIndicator {
            eta_sq: comp_r + comp_e + comp_j,
            comp_r,
            comp_e,
            comp_j,
        });
    }
    Ok(finish_report(EstimatorKind::Stokes, per_element, f_h))
}

/// Poisson local problems: two decoupled scalar SPD solves per element for
/// the displacement part; the pressure part has the closed form
/// 2 mu ||R_div||^2 and needs no solve.
pub fn poisson_local_estimator(
    mesh: &Mesh,
    data: &ResidualData,
    mat: &MaterialParams,
    f_h: &LoadProjection,
) -> EstimatorReport {
    let spaces = LocalSpaces::new();
    let div_weight = 2.0 * mat.mu();
    let mut cache: HashMap<LocalKey, (LocalOperators, nalgebra::Cholesky<f64, nalgebra::Dyn>)> = HashMap::new();
    let mut per_element = Vec::with_capacity(mesh.n_elements());
    for elem_idx in 0..mesh.n_elements() {
        let elem = &mesh.elements[elem_idx];
        let key = local_key(elem);
        if !cache.contains_key(&key) {
            let ops = local_operators(&spaces, elem.hx, elem.hy, mat);
            let chol = ops
                .lap
                .clone()
                .cholesky()
                .expect("correction Laplacian is symmetric positive definite");
            cache.insert(key, (ops, chol));
        }
        let (ops, chol) = &cache[&key];
        let (fv, _) = local_rhs(&spaces, mesh, elem_idx, data);
        let mut comp_r = 0.0;
        for c in 0..2 {
            let rhs = DVector::from_fn(N_BUBBLES, |b, _| fv[2 * b + c]);
            let e_c = chol.solve(&rhs);
            comp_r += (e_c.transpose() * &ops.lap * &e_c)[(0, 0)];
        }
        let comp_j = divergence_part(&spaces.rule, elem, &data.r_div[elem_idx], div_weight);
        per_element.push(ElementIndicator {
            eta_sq: comp_r + comp_j,
            comp_r,
            comp_e: 0.0,
            comp_j,
        });
    }
    finish_report(EstimatorKind::Poisson, per_element, f_h)
}
