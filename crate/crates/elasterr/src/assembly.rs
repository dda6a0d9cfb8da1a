//! Assembly of the global mixed saddle-point system
//!
//! ```text
//!   [ A   B^T ] [u]   [F]
//!   [ B  -C   ] [p] = [0]
//! ```
//!
//! with a(u,v) = 2 mu (eps(u), eps(v)), b(v,q) = -(q, div v),
//! c(p,q) = (1/lambda)(p, q), f(v) = (f, v), plus element-wise L2 projection
//! of the load onto Q1 for the data-oscillation part of the estimators.
//!
//! All element integrals use 4x4 Gauss, which is exact for every bilinear
//! form here; the non-polynomial oscillation integrals use 7x7.

use std::collections::HashMap;

use thiserror::Error;

use crate::accum::CompensatedSum;
use crate::basis::{basis_eval, BasisFamily};
use crate::dofmap::DofMap;
use crate::material::MaterialParams;
use crate::mesh::Mesh;
use crate::quadrature::gauss_rule;

#[derive(Debug, Error)]
pub enum AssemblyError {
    #[error("dof map was built for a different mesh ({dofmap_elements} vs {mesh_elements} elements)")]
    DofMapMismatch {
        dofmap_elements: usize,
        mesh_elements: usize,
    },
    #[error("non-finite data value at ({x}, {y})")]
    NonFiniteData { x: f64, y: f64 },
}

/// Aggregated sparse matrix in triplet form, entries sorted by (row, col)
/// with duplicates summed. Deterministic by construction.
#[derive(Debug, Clone)]
pub struct SparseMatrix {
    nrows: usize,
    ncols: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl SparseMatrix {
    pub fn from_triplets(nrows: usize, ncols: usize, mut triplets: Vec<(usize, usize, f64)>) -> SparseMatrix {
        triplets.sort_unstable_by_key(|&(r, c, _)| (r, c));
        let mut entries: Vec<(usize, usize, f64)> = Vec::with_capacity(triplets.len());
        for (r, c, v) in triplets {
            match entries.last_mut() {
                Some(last) if last.0 == r && last.1 == c => last.2 += v,
                _ => entries.push((r, c, v)),
            }
        }
        SparseMatrix { nrows, ncols, entries }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[(usize, usize, f64)] {
        &self.entries
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.ncols);
        let mut y = vec![0.0; self.nrows];
        for &(r, c, v) in &self.entries {
            y[r] += v * x[c];
        }
        y
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let mut m = nalgebra::DMatrix::zeros(self.nrows, self.ncols);
        for &(r, c, v) in &self.entries {
            m[(r, c)] += v;
        }
        m
    }

    /// Largest relative asymmetry max |M - M^T| / max |M| over stored entries.
    pub fn asymmetry(&self) -> f64 {
        let lookup: HashMap<(usize, usize), f64> = self.entries.iter().map(|&(r, c, v)| ((r, c), v)).collect();
        let scale = self.entries.iter().map(|e| e.2.abs()).fold(0.0, f64::max);
        if scale == 0.0 {
            return 0.0;
        }
        let mut worst = 0.0f64;
        for &(r, c, v) in &self.entries {
            let vt = lookup.get(&(c, r)).copied().unwrap_or(0.0);
            worst = worst.max((v - vt).abs());
        }
        worst / scale
    }
}

/// The raw blocks before boundary conditions; tests and diagnostics want
/// these individually.
#[derive(Debug)]
pub struct MixedBlocks {
    /// n_disp x n_disp elastic stiffness, symmetric positive semidefinite.
    pub a: SparseMatrix,
    /// n_pressure x n_disp divergence coupling, entries b(phi_j, psi_k).
    pub b: SparseMatrix,
    /// n_pressure x n_pressure compressibility block (the system carries -C);
    /// empty at nu = 1/2.
    pub c: SparseMatrix,
    /// Load functional (f, phi_i), length n_disp.
    pub load: Vec<f64>,
}

/// Assembled system with essential boundary conditions applied
/// symmetrically: constrained rows and columns are cleared, the diagonal is
/// set to one, and the right-hand side carries the interpolated boundary
/// values, so the solution vector contains them directly.
#[derive(Debug)]
pub struct MixedSystem {
    pub matrix: SparseMatrix,
    pub rhs: Vec<f64>,
    pub n_displacement: usize,
    pub n_pressure: usize,
    /// Interpolated Dirichlet values per displacement dof (zero for free
    /// dofs).
    pub boundary_values: Vec<f64>,
}

struct LocalMatrices {
    /// 18x18 row-major, test-major index 2*i + comp.
    a: Vec<f64>,
    /// np x 18.
    b: Vec<f64>,
    /// np x np pressure mass (no 1/lambda factor).
    mass_p: Vec<f64>,
}

fn local_matrices(
    pressure: BasisFamily,
    hx: f64,
    hy: f64,
    two_mu: f64,
    rule: &crate::quadrature::QuadratureRule,
) -> LocalMatrices {
    let np = pressure.n_functions();
    let jac = hx * hy / 4.0;
    let sx = 2.0 / hx;
    let sy = 2.0 / hy;
    let mut a = vec![0.0; 18 * 18];
    let mut b = vec![0.0; np * 18];
    let mut mass_p = vec![0.0; np * np];
    for (point, w) in rule.points.iter().zip(&rule.weights) {
        let q2 = basis_eval(BasisFamily::Q2, *point);
        let pb = basis_eval(pressure, *point);
        let gx: Vec<f64> = q2.gradients.iter().map(|g| sx * g[0]).collect();
        let gy: Vec<f64> = q2.gradients.iter().map(|g| sy * g[1]).collect();
        let wj = w * jac;
        for i in 0..9 {
            for j in 0..9 {
                // eps(phi_i e_c) : eps(phi_j e_d), doubled by 2 mu
                a[(2 * i) * 18 + 2 * j] += wj * two_mu * (gx[i] * gx[j] + 0.5 * gy[i] * gy[j]);
                a[(2 * i) * 18 + 2 * j + 1] += wj * two_mu * 0.5 * gy[i] * gx[j];
                a[(2 * i + 1) * 18 + 2 * j] += wj * two_mu * 0.5 * gx[i] * gy[j];
                a[(2 * i + 1) * 18 + 2 * j + 1] += wj * two_mu * (gy[i] * gy[j] + 0.5 * gx[i] * gx[j]);
            }
        }
        for k in 0..np {
            for j in 0..9 {
                b[k * 18 + 2 * j] -= wj * pb.values[k] * gx[j];
                b[k * 18 + 2 * j + 1] -= wj * pb.values[k] * gy[j];
            }
            for l in 0..np {
                mass_p[k * np + l] += wj * pb.values[k] * pb.values[l];
            }
        }
    }
    LocalMatrices { a, b, mass_p }
}

fn check_dofmap(mesh: &Mesh, dofmap: &DofMap) -> Result<(), AssemblyError> {
    if dofmap.element_q2_nodes.len() != mesh.n_elements() {
        return Err(AssemblyError::DofMapMismatch {
            dofmap_elements: dofmap.element_q2_nodes.len(),
            mesh_elements: mesh.n_elements(),
        });
    }
    Ok(())
}

/// Assemble the raw blocks (no boundary conditions).
pub fn assemble_blocks(
    mesh: &Mesh,
    dofmap: &DofMap,
    mat: &MaterialParams,
    load: impl Fn([f64; 2]) -> [f64; 2],
) -> Result<MixedBlocks, AssemblyError> {
    check_dofmap(mesh, dofmap)?;
    let rule = gauss_rule(4).expect("order 4 is in range");
    let pressure = dofmap.pair.pressure_family();
    let np = pressure.n_functions();
    let n_disp = dofmap.n_displacement();
    let inv_lambda = mat.inv_lambda();
    let two_mu = 2.0 * mat.mu();

    let mut cache: HashMap<(u64, u64), LocalMatrices> = HashMap::new();
    let n_elems = mesh.n_elements();
    let mut a_triplets = Vec::with_capacity(n_elems * 18 * 18);
    let mut b_triplets = Vec::with_capacity(n_elems * np * 18);
    let mut c_triplets = if inv_lambda > 0.0 {
        Vec::with_capacity(n_elems * np * np)
    } else {
        Vec::new()
    };
    let mut load_vec = vec![0.0; n_disp];

    for (e, elem) in mesh.elements.iter().enumerate() {
        let key = (elem.hx.to_bits(), elem.hy.to_bits());
        let local = cache
            .entry(key)
            .or_insert_with(|| local_matrices(pressure, elem.hx, elem.hy, two_mu, &rule));

        let nodes = &dofmap.element_q2_nodes[e];
        let mut disp_dofs = [0usize; 18];
        for (i, &n) in nodes.iter().enumerate() {
            disp_dofs[2 * i] = 2 * n;
            disp_dofs[2 * i + 1] = 2 * n + 1;
        }
        let p_dofs = dofmap.pressure_dofs(e);

        for i in 0..18 {
            for j in 0..18 {
                let v = local.a[i * 18 + j];
                if v != 0.0 {
                    a_triplets.push((disp_dofs[i], disp_dofs[j], v));
                }
            }
        }
        for k in 0..np {
            for j in 0..18 {
                let v = local.b[k * 18 + j];
                if v != 0.0 {
                    b_triplets.push((p_dofs[k], disp_dofs[j], v));
                }
            }
            if inv_lambda > 0.0 {
                for l in 0..np {
                    c_triplets.push((p_dofs[k], p_dofs[l], inv_lambda * local.mass_p[k * np + l]));
                }
            }
        }

        let jac = elem.hx * elem.hy / 4.0;
        for (point, w) in rule.points.iter().zip(&rule.weights) {
            let phys = elem.to_physical(*point);
            let f = load(phys);
            if !(f[0].is_finite() && f[1].is_finite()) {
                return Err(AssemblyError::NonFiniteData { x: phys[0], y: phys[1] });
            }
            let q2 = basis_eval(BasisFamily::Q2, *point);
            for i in 0..9 {
                load_vec[disp_dofs[2 * i]] += w * jac * f[0] * q2.values[i];
                load_vec[disp_dofs[2 * i + 1]] += w * jac * f[1] * q2.values[i];
            }
        }
    }

    Ok(MixedBlocks {
        a: SparseMatrix::from_triplets(n_disp, n_disp, a_triplets),
        b: SparseMatrix::from_triplets(dofmap.n_pressure, n_disp, b_triplets),
        c: SparseMatrix::from_triplets(dofmap.n_pressure, dofmap.n_pressure, c_triplets),
        load: load_vec,
    })
}

/// Assemble the full system and impose Dirichlet values by nodal
/// interpolation of `dirichlet` at constrained Q2 nodes.
pub fn assemble_mixed_system(
    mesh: &Mesh,
    dofmap: &DofMap,
    mat: &MaterialParams,
    load: impl Fn([f64; 2]) -> [f64; 2],
    dirichlet: impl Fn([f64; 2]) -> [f64; 2],
) -> Result<MixedSystem, AssemblyError> {
    let blocks = assemble_blocks(mesh, dofmap, mat, load)?;
    let n_disp = dofmap.n_displacement();
    let n_total = dofmap.n_total();

    let mut boundary_values = vec![0.0; n_disp];
    for node in 0..dofmap.n_q2_nodes {
        if dofmap.constrained[2 * node] {
            let coords = dofmap.q2_node_coords[node];
            let g = dirichlet(coords);
            if !(g[0].is_finite() && g[1].is_finite()) {
                return Err(AssemblyError::NonFiniteData {
                    x: coords[0],
                    y: coords[1],
                });
            }
            boundary_values[2 * node] = g[0];
            boundary_values[2 * node + 1] = g[1];
        }
    }

    let is_constrained = |dof: usize| dof < n_disp && dofmap.constrained[dof];
    let mut rhs = vec![0.0; n_total];
    rhs[..n_disp].copy_from_slice(&blocks.load);

    let mut triplets: Vec<(usize, usize, f64)> =
        Vec::with_capacity(blocks.a.nnz() + 2 * blocks.b.nnz() + blocks.c.nnz() + dofmap.n_constrained);
    let mut push = |r: usize, c: usize, v: f64, rhs: &mut Vec<f64>| {
        if is_constrained(r) {
            return;
        }
        if is_constrained(c) {
            rhs[r] -= v * boundary_values[c];
        } else {
            triplets.push((r, c, v));
        }
    };
    for &(i, j, v) in blocks.a.entries() {
        push(i, j, v, &mut rhs);
    }
    for &(k, j, v) in blocks.b.entries() {
        push(n_disp + k, j, v, &mut rhs);
        push(j, n_disp + k, v, &mut rhs);
    }
    for &(k, l, v) in blocks.c.entries() {
        push(n_disp + k, n_disp + l, -v, &mut rhs);
    }
    for dof in 0..n_disp {
        if dofmap.constrained[dof] {
            triplets.push((dof, dof, 1.0));
            rhs[dof] = boundary_values[dof];
        }
    }

    Ok(MixedSystem {
        matrix: SparseMatrix::from_triplets(n_total, n_total, triplets),
        rhs,
        n_displacement: n_disp,
        n_pressure: dofmap.n_pressure,
        boundary_values,
    })
}

/// Element-wise L2 projection of the load onto Q1 per component, with the
/// weighted data-oscillation terms Theta_K = rho_K ||f - f_h||_{0,K}.
#[derive(Debug, Clone)]
pub struct LoadProjection {
    /// Per element, per component, the 4 Q1 coefficients.
    pub coeffs: Vec<[[f64; 4]; 2]>,
    /// Per element, Theta_K^2.
    pub theta_sq: Vec<f64>,
    /// Global Theta.
    pub theta: f64,
}

impl LoadProjection {
    /// Evaluate f_h at a reference point of an element.
    pub fn eval(&self, elem: usize, point: [f64; 2]) -> [f64; 2] {
        let q1 = basis_eval(BasisFamily::Q1, point);
        let c = &self.coeffs[elem];
        let mut out = [0.0; 2];
        for comp in 0..2 {
            out[comp] = (0..4).map(|i| c[comp][i] * q1.values[i]).sum();
        }
        out
    }
}

pub fn project_load(
    mesh: &Mesh,
    mat: &MaterialParams,
    load: impl Fn([f64; 2]) -> [f64; 2],
) -> Result<LoadProjection, AssemblyError> {
    let rule = gauss_rule(7).expect("order 7 is in range");
    // reference Q1 mass matrix, exact for the bilinear products
    let mass_rule = gauss_rule(2).expect("order 2 is in range");
    let mut ref_mass = nalgebra::Matrix4::<f64>::zeros();
    for (point, w) in mass_rule.points.iter().zip(&mass_rule.weights) {
        let q1 = basis_eval(BasisFamily::Q1, *point);
        for i in 0..4 {
            for j in 0..4 {
                ref_mass[(i, j)] += w * q1.values[i] * q1.values[j];
            }
        }
    }
    let ref_mass_inv = ref_mass.try_inverse().expect("Q1 mass matrix is invertible");

    let mut coeffs = Vec::with_capacity(mesh.n_elements());
    let mut theta_sq = Vec::with_capacity(mesh.n_elements());
    let mut total = CompensatedSum::new();
    for elem in &mesh.elements {
        let jac = elem.hx * elem.hy / 4.0;
        // projection: (jac * RefM) c = rhs, so c = RefM^{-1} (rhs / jac)
        let mut rhs = [nalgebra::Vector4::<f64>::zeros(); 2];
        let mut f_at: Vec<[f64; 2]> = Vec::with_capacity(rule.len());
        for (point, w) in rule.points.iter().zip(&rule.weights) {
            let phys = elem.to_physical(*point);
            let f = load(phys);
            if !(f[0].is_finite() && f[1].is_finite()) {
                return Err(AssemblyError::NonFiniteData { x: phys[0], y: phys[1] });
            }
            f_at.push(f);
            let q1 = basis_eval(BasisFamily::Q1, *point);
            for i in 0..4 {
                for comp in 0..2 {
                    rhs[comp][i] += w * f[comp] * q1.values[i];
                }
            }
        }
        let c = [ref_mass_inv * rhs[0], ref_mass_inv * rhs[1]];
        let mut elem_coeffs = [[0.0; 4]; 2];
        for comp in 0..2 {
            for i in 0..4 {
                elem_coeffs[comp][i] = c[comp][i];
            }
        }

        let mut osc = 0.0;
        for ((point, w), f) in rule.points.iter().zip(&rule.weights).zip(&f_at) {
            let q1 = basis_eval(BasisFamily::Q1, *point);
            let mut diff_sq = 0.0;
            for comp in 0..2 {
                let fh: f64 = (0..4).map(|i| elem_coeffs[comp][i] * q1.values[i]).sum();
                diff_sq += (f[comp] - fh) * (f[comp] - fh);
            }
            osc += w * jac * diff_sq;
        }
        // Same h_K convention as the element residual weight: longest side.
        let rho_k = mat.rho_k(elem.hx.max(elem.hy));
        let t = rho_k * rho_k * osc;
        coeffs.push(elem_coeffs);
        theta_sq.push(t);
        total.add(t);
    }

    Ok(LoadProjection {
        coeffs,
        theta_sq,
        theta: total.total().max(0.0).sqrt(),
    })
}
