//! Shape functions on the reference square [-1,1]^2.
//!
//! Four dof-carrying families: bilinear Q1, biquadratic Q2, element-local
//! linear P-1, and Q2full, the full biquadratic space reused as a local
//! pressure correction space. The local error problems additionally use a
//! 12-dimensional bicubic correction space accessed directly through
//! `q3_correction_basis`.
//!
//! Orderings are fixed and load-bearing for the dof map:
//! Q2 nodes run row-major over the 3x3 grid, id = 3*b + a for
//! (xi_a, eta_b) with xi, eta in {-1, 0, 1}; Q1 corners run
//! counterclockwise from the lower-left.

/// Evaluated values and reference-coordinate gradients of one basis family
/// at a single point.
#[derive(Debug, Clone)]
pub struct BasisValues {
    pub values: Vec<f64>,
    /// (d/dxi, d/deta) per function.
    pub gradients: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BasisFamily {
    Q1,
    Q2,
    /// Discontinuous per-element linear modes {1, xi, eta}.
    P1Disc,
    /// Full biquadratic space; same span as Q2, named separately where it
    /// acts as a pressure correction space.
    Q2Full,
}

impl BasisFamily {
    pub fn n_functions(self) -> usize {
        match self {
            BasisFamily::Q1 => 4,
            BasisFamily::Q2 | BasisFamily::Q2Full => 9,
            BasisFamily::P1Disc => 3,
        }
    }
}

/// 1D linear Lagrange functions on {-1, 1} and derivatives.
fn linear_1d(t: f64) -> ([f64; 2], [f64; 2]) {
    ([(1.0 - t) / 2.0, (1.0 + t) / 2.0], [-0.5, 0.5])
}

/// 1D quadratic Lagrange functions on {-1, 0, 1} and derivatives.
fn quadratic_1d(t: f64) -> ([f64; 3], [f64; 3]) {
    (
        [t * (t - 1.0) / 2.0, 1.0 - t * t, t * (t + 1.0) / 2.0],
        [t - 0.5, -2.0 * t, t + 0.5],
    )
}

pub fn basis_eval(family: BasisFamily, point: [f64; 2]) -> BasisValues {
    let [xi, eta] = point;
    match family {
        BasisFamily::Q1 => {
            let (lx, dx) = linear_1d(xi);
            let (ly, dy) = linear_1d(eta);
            // counterclockwise from lower-left
            let idx = [(0, 0), (1, 0), (1, 1), (0, 1)];
            let values = idx.iter().map(|&(a, b)| lx[a] * ly[b]).collect();
            let gradients = idx.iter().map(|&(a, b)| [dx[a] * ly[b], lx[a] * dy[b]]).collect();
            BasisValues { values, gradients }
        }
        BasisFamily::Q2 | BasisFamily::Q2Full => {
            let (lx, dx) = quadratic_1d(xi);
            let (ly, dy) = quadratic_1d(eta);
            let mut values = Vec::with_capacity(9);
            let mut gradients = Vec::with_capacity(9);
            for b in 0..3 {
                for a in 0..3 {
                    values.push(lx[a] * ly[b]);
                    gradients.push([dx[a] * ly[b], lx[a] * dy[b]]);
                }
            }
            BasisValues { values, gradients }
        }
        BasisFamily::P1Disc => BasisValues {
            values: vec![1.0, xi, eta],
            gradients: vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
        },
    }
}

/// 1D cubic Lagrange basis on the nodes {-1, -1/3, 1/3, 1}: values and
/// derivatives at t.
fn cubic_1d(t: f64) -> ([f64; 4], [f64; 4]) {
    let t2 = t * t;
    let values = [
        -9.0 / 16.0 * (t2 - 1.0 / 9.0) * (t - 1.0),
        27.0 / 16.0 * (t2 - 1.0) * (t - 1.0 / 3.0),
        -27.0 / 16.0 * (t2 - 1.0) * (t + 1.0 / 3.0),
        9.0 / 16.0 * (t2 - 1.0 / 9.0) * (t + 1.0),
    ];
    let derivatives = [
        -9.0 / 16.0 * (3.0 * t2 - 2.0 * t - 1.0 / 9.0),
        27.0 / 16.0 * (3.0 * t2 - 2.0 / 3.0 * t - 1.0),
        -27.0 / 16.0 * (3.0 * t2 + 2.0 / 3.0 * t - 1.0),
        9.0 / 16.0 * (3.0 * t2 + 2.0 * t - 1.0 / 9.0),
    ];
    (values, derivatives)
}

/// Index pairs of the 12 non-vertex nodes of the bicubic Lagrange element,
/// bottom row to top row. The four vertices are excluded, so the spanned
/// functions vanish there and a correction leaves vertex values untouched.
const Q3_CORRECTION_NODES: [(usize, usize); 12] = [
    (1, 0),
    (2, 0),
    (0, 1),
    (1, 1),
    (2, 1),
    (3, 1),
    (0, 2),
    (1, 2),
    (2, 2),
    (3, 2),
    (1, 3),
    (2, 3),
];

/// Cubic correction space on the reference square: the 12 bicubic Lagrange
/// functions attached to the non-vertex nodes. Each edge carries two modes
/// with nonzero flux through that edge, which is what lets the corrections
/// control every pressure mode including the constant.
pub fn q3_correction_basis(point: [f64; 2]) -> BasisValues {
    let (lx, dx) = cubic_1d(point[0]);
    let (ly, dy) = cubic_1d(point[1]);
    let mut values = Vec::with_capacity(12);
    let mut gradients = Vec::with_capacity(12);
    for &(i, j) in &Q3_CORRECTION_NODES {
        values.push(lx[i] * ly[j]);
        gradients.push([dx[i] * ly[j], lx[i] * dy[j]]);
    }
    BasisValues { values, gradients }
}

/// Second derivatives (d2/dxi2, d2/dxi deta, d2/deta2) of the 9 Q2 functions.
/// Biquadratics have exact constant-coefficient Hessian structure, which the
/// interior stress residual needs in closed form.
pub fn q2_hessians(point: [f64; 2]) -> Vec<[f64; 3]> {
    let [xi, eta] = point;
    let (lx, dx) = quadratic_1d(xi);
    let (ly, dy) = quadratic_1d(eta);
    let ddx = [1.0, -2.0, 1.0];
    let ddy = [1.0, -2.0, 1.0];
    let mut out = Vec::with_capacity(9);
    for b in 0..3 {
        for a in 0..3 {
            out.push([ddx[a] * ly[b], dx[a] * dy[b], lx[a] * ddy[b]]);
        }
    }
    out
}

/// The 9 Q2 node positions in reference coordinates, in dof order.
pub fn q2_reference_nodes() -> [[f64; 2]; 9] {
    let c = [-1.0, 0.0, 1.0];
    let mut nodes = [[0.0; 2]; 9];
    for b in 0..3 {
        for a in 0..3 {
            nodes[3 * b + a] = [c[a], c[b]];
        }
    }
    nodes
}
