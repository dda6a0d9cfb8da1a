//! Benchmark problems, the exact energy error, and effectivity indices.
//!
//! Three fixed benchmarks drive the experiment runner:
//! p1, a smooth divergence-free field on the unit square with a trigonometric
//! load and a known exact solution; p2, a driven top edge with no body force,
//! whose pressure is nonsmooth along the upper corners; p3, a constant load on
//! (-1,1)^2 with a traction-free right edge and a corner singularity.

use std::f64::consts::PI;

use thiserror::Error;

use crate::accum::CompensatedSum;
use crate::dofmap::DofMap;
use crate::material::MaterialParams;
use crate::mesh::{build_rect_mesh, BoundaryCondition, Mesh, MeshError, Rect};
use crate::quadrature::gauss_rule;
use crate::solve::{evaluate_solution, MixedSolution};

#[derive(Debug, Error)]
pub enum ProblemError {
    #[error("unknown problem id {0:?} (expected p1, p2, or p3)")]
    UnknownProblem(String),
    #[error("effectivity undefined: exact error {0:e} is not positive")]
    NonPositiveError(f64),
}

/// Benchmark ids as they appear on the command line and in CSV output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ProblemId {
    /// Smooth divergence-free field, all-Dirichlet, exact solution known.
    P1,
    /// Driven top edge, f = 0, all-Dirichlet, no exact solution.
    P2,
    /// Constant load on (-1,1)^2, traction-free right edge, no exact solution.
    P3,
}

impl ProblemId {
    pub fn name(self) -> &'static str {
        match self {
            ProblemId::P1 => "p1",
            ProblemId::P2 => "p2",
            ProblemId::P3 => "p3",
        }
    }

    pub fn parse(s: &str) -> Result<Self, ProblemError> {
        match s {
            "p1" => Ok(ProblemId::P1),
            "p2" => Ok(ProblemId::P2),
            "p3" => Ok(ProblemId::P3),
            other => Err(ProblemError::UnknownProblem(other.to_string())),
        }
    }
}

/// Exact solution of the smooth benchmark: u is divergence-free, so the
/// pressure vanishes for every Poisson ratio and the displacement does not
/// depend on the material at all.
#[derive(Debug, Clone, Copy)]
pub struct ExactSolution;

impl ExactSolution {
    pub fn u(&self, p: [f64; 2]) -> [f64; 2] {
        let [x, y] = p;
        [
            0.5 * PI * (PI * x).sin().powi(2) * (2.0 * PI * y).sin(),
            -0.5 * PI * (PI * y).sin().powi(2) * (2.0 * PI * x).sin(),
        ]
    }

    /// grad[i][j] = d u_i / d x_j.
    pub fn grad_u(&self, p: [f64; 2]) -> [[f64; 2]; 2] {
        let [x, y] = p;
        let (s2x, c2x) = (2.0 * PI * x).sin_cos();
        let (s2y, c2y) = (2.0 * PI * y).sin_cos();
        let sx2 = (PI * x).sin().powi(2);
        let sy2 = (PI * y).sin().powi(2);
        [
            [0.5 * PI * PI * s2x * s2y, PI * PI * sx2 * c2y],
            [-PI * PI * sy2 * c2x, -0.5 * PI * PI * s2x * s2y],
        ]
    }

    /// Second derivatives per component as (d_xx, d_xy, d_yy).
    pub fn hessian_u(&self, p: [f64; 2]) -> [[f64; 3]; 2] {
        let [x, y] = p;
        let p3 = PI.powi(3);
        let (s2x, c2x) = (2.0 * PI * x).sin_cos();
        let (s2y, c2y) = (2.0 * PI * y).sin_cos();
        let sx2 = (PI * x).sin().powi(2);
        let sy2 = (PI * y).sin().powi(2);
        [
            [p3 * c2x * s2y, p3 * s2x * c2y, -2.0 * p3 * sx2 * s2y],
            [2.0 * p3 * sy2 * s2x, -p3 * s2y * c2x, -p3 * s2x * c2y],
        ]
    }

    pub fn p(&self, _p: [f64; 2]) -> f64 {
        0.0
    }

    pub fn grad_p(&self, _p: [f64; 2]) -> [f64; 2] {
        [0.0, 0.0]
    }
}

/// One benchmark: domain, boundary partition, data, and (for p1) the exact
/// solution.
#[derive(Debug, Clone, Copy)]
pub struct TestProblem {
    pub id: ProblemId,
    pub domain: Rect,
}

impl TestProblem {
    pub fn new(id: ProblemId) -> Self {
        let domain = match id {
            ProblemId::P1 | ProblemId::P2 => Rect::unit(),
            ProblemId::P3 => Rect {
                x0: -1.0,
                x1: 1.0,
                y0: -1.0,
                y1: 1.0,
            },
        };
        TestProblem { id, domain }
    }

    /// Boundary tag for a point on the domain boundary. Only p3 has a
    /// traction-free (natural) edge, at x = 1.
    pub fn boundary_condition(&self, point: [f64; 2]) -> Option<BoundaryCondition> {
        match self.id {
            ProblemId::P1 | ProblemId::P2 => Some(BoundaryCondition::Dirichlet),
            ProblemId::P3 => {
                if (point[0] - self.domain.x1).abs() < 1e-12 {
                    Some(BoundaryCondition::Neumann)
                } else {
                    Some(BoundaryCondition::Dirichlet)
                }
            }
        }
    }

    /// Uniform n-by-n mesh of the domain with this problem's boundary tags.
    pub fn build_mesh(&self, n: usize) -> Result<Mesh, MeshError> {
        let problem = *self;
        build_rect_mesh(self.domain, n, n)?.tag_boundaries(move |p| problem.boundary_condition(p))
    }

    /// Body force. The smooth benchmark's load scales linearly with mu so the
    /// exact displacement stays material-independent.
    pub fn load(&self, mat: &MaterialParams, point: [f64; 2]) -> [f64; 2] {
        match self.id {
            ProblemId::P1 => {
                let [x, y] = point;
                let p3 = PI.powi(3);
                [
                    -mat.mu() * p3 * (2.0 * PI * y).sin() * (2.0 * (2.0 * PI * x).cos() - 1.0),
                    mat.mu() * p3 * (2.0 * PI * x).sin() * (2.0 * (2.0 * PI * y).cos() - 1.0),
                ]
            }
            ProblemId::P2 => [0.0, 0.0],
            ProblemId::P3 => [1.0, 1.0],
        }
    }

    /// Essential boundary data.
    pub fn dirichlet_value(&self, point: [f64; 2]) -> [f64; 2] {
        match self.id {
            ProblemId::P1 | ProblemId::P3 => [0.0, 0.0],
            ProblemId::P2 => {
                if (point[1] - 1.0).abs() < 1e-12 {
                    [(PI * point[0]).sin().powi(2), 0.0]
                } else {
                    [0.0, 0.0]
                }
            }
        }
    }

    pub fn exact(&self) -> Option<ExactSolution> {
        match self.id {
            ProblemId::P1 => Some(ExactSolution),
            ProblemId::P2 | ProblemId::P3 => None,
        }
    }
}

/// The three benchmarks in CLI order.
pub fn problem_catalog() -> Vec<TestProblem> {
    vec![
        TestProblem::new(ProblemId::P1),
        TestProblem::new(ProblemId::P2),
        TestProblem::new(ProblemId::P3),
    ]
}

/// Energy-norm distance between the discrete solution and given exact fields:
/// e^2 = 2 mu ||grad(u - u_h)||^2 + ((2 mu)^-1 + lambda^-1) ||p - p_h||^2,
/// by 7x7 Gauss per element. Only the exact gradient and pressure enter.
pub fn energy_error(
    mesh: &Mesh,
    dofmap: &DofMap,
    sol: &MixedSolution,
    mat: &MaterialParams,
    exact_grad_u: impl Fn([f64; 2]) -> [[f64; 2]; 2],
    exact_p: impl Fn([f64; 2]) -> f64,
) -> f64 {
    let rule = gauss_rule(7).expect("fixed valid order");
    let pressure_weight = 0.5 / mat.mu() + mat.inv_lambda();
    let mut total = CompensatedSum::default();
    for elem in 0..mesh.n_elements() {
        let e = &mesh.elements[elem];
        let jac = e.hx * e.hy / 4.0;
        for (q, &point) in rule.points.iter().enumerate() {
            let phys = e.to_physical(point);
            let vals = evaluate_solution(sol, mesh, dofmap, elem, point).expect("element index from mesh range");
            let g = exact_grad_u(phys);
            let mut grad_sq = 0.0;
            for i in 0..2 {
                for j in 0..2 {
                    let d = g[i][j] - vals.grad_u[i][j];
                    grad_sq += d * d;
                }
            }
            let dp = exact_p(phys) - vals.p;
            total.add(rule.weights[q] * jac * (2.0 * mat.mu() * grad_sq + pressure_weight * dp * dp));
        }
    }
    total.total().max(0.0).sqrt()
}

/// eta / e. The exact error must be positive; a discrete solution that
/// reproduces the exact one makes the ratio undefined.
pub fn effectivity(eta: f64, e: f64) -> Result<f64, ProblemError> {
    if e > 0.0 {
        Ok(eta / e)
    } else {
        Err(ProblemError::NonPositiveError(e))
    }
}
