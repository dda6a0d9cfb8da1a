//! Axis-aligned rectangular meshes of rectangular domains, with element-edge
//! topology and boundary tagging.
//!
//! Edge normals follow a fixed convention: from the lower-indexed incident
//! element toward the higher-indexed one, and outward on the boundary. Jump
//! quantities built on top are orientation-independent, but the fixed
//! convention keeps runs bit-reproducible.

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("subdivision counts must be at least 1 (got {nx} x {ny})")]
    InvalidSubdivision { nx: usize, ny: usize },
    #[error("degenerate domain: ({x0}, {x1}) x ({y0}, {y1})")]
    DegenerateDomain { x0: f64, x1: f64, y0: f64, y1: f64 },
    #[error("grid lines must be strictly increasing with at least two entries")]
    InvalidGridLines,
    #[error("boundary edge with midpoint ({x}, {y}) left untagged")]
    UntaggedBoundaryEdge { x: f64, y: f64 },
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Rect {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Rect {
    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> f64 {
        self.y1 - self.y0
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    /// Unit square (0,1)^2.
    pub fn unit() -> Rect {
        Rect {
            x0: 0.0,
            x1: 1.0,
            y0: 0.0,
            y1: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BoundaryCondition {
    Dirichlet,
    Neumann,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum EdgeTag {
    Interior,
    /// Boundary edge not yet assigned a condition; dof maps reject meshes
    /// that still contain these.
    Untagged,
    Dirichlet,
    Neumann,
}

/// Local side numbering within an element: bottom, right, top, left.
pub const SIDES: [usize; 4] = [0, 1, 2, 3];

#[derive(Debug, Clone, Serialize)]
pub struct Element {
    /// Corner vertex ids, counterclockwise from the lower-left.
    pub vertices: [usize; 4],
    /// Lower-left corner.
    pub x0: f64,
    pub y0: f64,
    pub hx: f64,
    pub hy: f64,
    /// Edge ids by side: [bottom, right, top, left].
    pub edges: [usize; 4],
}

impl Element {
    pub fn diameter(&self) -> f64 {
        self.hx.hypot(self.hy)
    }

    pub fn area(&self) -> f64 {
        self.hx * self.hy
    }

    pub fn center(&self) -> [f64; 2] {
        [self.x0 + self.hx / 2.0, self.y0 + self.hy / 2.0]
    }

    /// Affine map from reference coordinates (xi, eta) in [-1,1]^2.
    pub fn to_physical(&self, p: [f64; 2]) -> [f64; 2] {
        [
            self.x0 + (1.0 + p[0]) / 2.0 * self.hx,
            self.y0 + (1.0 + p[1]) / 2.0 * self.hy,
        ]
    }

    /// Reference point on a side, parameterized by t in [-1,1] running in the
    /// +x direction (horizontal sides) or +y direction (vertical sides), so
    /// both elements sharing an edge see the same physical point at the same t.
    pub fn side_point(side: usize, t: f64) -> [f64; 2] {
        match side {
            0 => [t, -1.0],
            1 => [1.0, t],
            2 => [t, 1.0],
            3 => [-1.0, t],
            _ => unreachable!("side index {side}"),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Edge {
    /// Endpoint vertex ids, ordered by increasing coordinate.
    pub vertices: [usize; 2],
    pub length: f64,
    /// Unit normal, oriented from `elements[0]` toward `elements[1]`
    /// (outward for boundary edges).
    pub normal: [f64; 2],
    /// Incident elements; `elements[0]` is the lower-indexed one and is
    /// always present.
    pub elements: [Option<usize>; 2],
    /// Local side of this edge within each incident element.
    pub sides: [Option<usize>; 2],
    pub tag: EdgeTag,
}

impl Edge {
    pub fn is_boundary(&self) -> bool {
        self.elements[1].is_none()
    }

    pub fn midpoint(&self, mesh: &Mesh) -> [f64; 2] {
        let a = mesh.vertices[self.vertices[0]];
        let b = mesh.vertices[self.vertices[1]];
        [(a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0]
    }

    /// Sign of this edge's normal as seen from element `elem` (+1 if the
    /// stored normal points out of `elem`).
    pub fn outward_sign(&self, elem: usize) -> f64 {
        if self.elements[0] == Some(elem) {
            1.0
        } else {
            -1.0
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Mesh {
    pub domain: Rect,
    pub vertices: Vec<[f64; 2]>,
    pub elements: Vec<Element>,
    pub edges: Vec<Edge>,
    nx: usize,
    ny: usize,
    /// Grid lines; elements need not be uniform.
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
}

impl Mesh {
    pub fn n_elements(&self) -> usize {
        self.elements.len()
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn n_interior_edges(&self) -> usize {
        self.edges.iter().filter(|e| !e.is_boundary()).count()
    }

    pub fn grid_dims(&self) -> (usize, usize) {
        (self.nx, self.ny)
    }

    /// Grid position (i, j) of element id `e = j*nx + i`.
    pub fn element_grid_pos(&self, e: usize) -> (usize, usize) {
        (e % self.nx, e / self.nx)
    }

    /// Assign Dirichlet/Neumann tags to all boundary edges by evaluating
    /// `spec` at each boundary edge midpoint. `None` for any midpoint is an
    /// error: the boundary partition must cover the whole boundary.
    pub fn tag_boundaries(mut self, spec: impl Fn([f64; 2]) -> Option<BoundaryCondition>) -> Result<Mesh, MeshError> {
        let midpoints: Vec<Option<[f64; 2]>> = self
            .edges
            .iter()
            .map(|e| if e.is_boundary() { Some(e.midpoint(&self)) } else { None })
            .collect();
        for (edge, midpoint) in self.edges.iter_mut().zip(midpoints) {
            let Some(m) = midpoint else { continue };
            edge.tag = match spec(m) {
                Some(BoundaryCondition::Dirichlet) => EdgeTag::Dirichlet,
                Some(BoundaryCondition::Neumann) => EdgeTag::Neumann,
                None => return Err(MeshError::UntaggedBoundaryEdge { x: m[0], y: m[1] }),
            };
        }
        Ok(self)
    }

    /// Tag the entire boundary Dirichlet.
    pub fn tag_all_dirichlet(self) -> Mesh {
        self.tag_boundaries(|_| Some(BoundaryCondition::Dirichlet))
            .expect("total predicate cannot leave edges untagged")
    }

    pub fn has_untagged_boundary(&self) -> bool {
        self.edges.iter().any(|e| e.tag == EdgeTag::Untagged)
    }

    /// Debug dump of the full topology.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("mesh serializes")
    }
}

/// Uniform nx x ny grid of `domain`.
pub fn build_rect_mesh(domain: Rect, nx: usize, ny: usize) -> Result<Mesh, MeshError> {
    if nx == 0 || ny == 0 {
        return Err(MeshError::InvalidSubdivision { nx, ny });
    }
    if !(domain.x0 < domain.x1 && domain.y0 < domain.y1)
        || !domain.x0.is_finite()
        || !domain.x1.is_finite()
        || !domain.y0.is_finite()
        || !domain.y1.is_finite()
    {
        return Err(MeshError::DegenerateDomain {
            x0: domain.x0,
            x1: domain.x1,
            y0: domain.y0,
            y1: domain.y1,
        });
    }
    let xs = (0..=nx)
        .map(|i| domain.x0 + domain.width() * i as f64 / nx as f64)
        .collect();
    let ys = (0..=ny)
        .map(|j| domain.y0 + domain.height() * j as f64 / ny as f64)
        .collect();
    from_grid_lines(xs, ys)
}

/// Tensor-product mesh from explicit (possibly graded) grid lines.
pub fn from_grid_lines(xs: Vec<f64>, ys: Vec<f64>) -> Result<Mesh, MeshError> {
    if xs.len() < 2 || ys.len() < 2 {
        return Err(MeshError::InvalidGridLines);
    }
    if xs.windows(2).any(|w| !(w[0] < w[1])) || ys.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(MeshError::InvalidGridLines);
    }
    let nx = xs.len() - 1;
    let ny = ys.len() - 1;
    let domain = Rect {
        x0: xs[0],
        x1: xs[nx],
        y0: ys[0],
        y1: ys[ny],
    };

    let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
    for y in &ys {
        for x in &xs {
            vertices.push([*x, *y]);
        }
    }
    let vid = |i: usize, j: usize| j * (nx + 1) + i;

    // horizontal edges first (normal +-y), then vertical (normal +-x)
    let h_edge = |i: usize, j: usize| j * nx + i;
    let n_horizontal = nx * (ny + 1);
    let v_edge = |i: usize, j: usize| n_horizontal + j * (nx + 1) + i;

    let mut elements = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            elements.push(Element {
                vertices: [vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1)],
                x0: xs[i],
                y0: ys[j],
                hx: xs[i + 1] - xs[i],
                hy: ys[j + 1] - ys[j],
                edges: [h_edge(i, j), v_edge(i + 1, j), h_edge(i, j + 1), v_edge(i, j)],
            });
        }
    }

    let eid = |i: usize, j: usize| j * nx + i;
    let mut edges = Vec::with_capacity(n_horizontal + (nx + 1) * ny);
    for j in 0..=ny {
        for i in 0..nx {
            let below = (j > 0).then(|| eid(i, j - 1));
            let above = (j < ny).then(|| eid(i, j));
            let (elements, sides, normal) = match (below, above) {
                (Some(b), Some(a)) => ([Some(b), Some(a)], [Some(2), Some(0)], [0.0, 1.0]),
                (Some(b), None) => ([Some(b), None], [Some(2), None], [0.0, 1.0]),
                (None, Some(a)) => ([Some(a), None], [Some(0), None], [0.0, -1.0]),
                (None, None) => unreachable!(),
            };
            edges.push(Edge {
                vertices: [vid(i, j), vid(i + 1, j)],
                length: xs[i + 1] - xs[i],
                normal,
                elements,
                sides,
                tag: if below.is_some() && above.is_some() {
                    EdgeTag::Interior
                } else {
                    EdgeTag::Untagged
                },
            });
        }
    }
    for j in 0..ny {
        for i in 0..=nx {
            let left = (i > 0).then(|| eid(i - 1, j));
            let right = (i < nx).then(|| eid(i, j));
            let (elements, sides, normal) = match (left, right) {
                (Some(l), Some(r)) => ([Some(l), Some(r)], [Some(1), Some(3)], [1.0, 0.0]),
                (Some(l), None) => ([Some(l), None], [Some(1), None], [1.0, 0.0]),
                (None, Some(r)) => ([Some(r), None], [Some(3), None], [-1.0, 0.0]),
                (None, None) => unreachable!(),
            };
            edges.push(Edge {
                vertices: [vid(i, j), vid(i, j + 1)],
                length: ys[j + 1] - ys[j],
                normal,
                elements,
                sides,
                tag: if left.is_some() && right.is_some() {
                    EdgeTag::Interior
                } else {
                    EdgeTag::Untagged
                },
            });
        }
    }

    Ok(Mesh {
        domain,
        vertices,
        elements,
        edges,
        nx,
        ny,
        xs,
        ys,
    })
}
