//! Global degree-of-freedom numbering for the mixed pairs.
//!
//! Displacement: continuous biquadratic (Q2) per component, dofs interleaved
//! as 2*node + component over the (2*nx+1) x (2*ny+1) node grid. Pressure:
//! either continuous bilinear (Q1) on the vertex grid or element-private
//! linear modes (P-1), numbered after all displacement dofs.

use serde::Serialize;
use thiserror::Error;

use crate::basis::BasisFamily;
use crate::mesh::{EdgeTag, Mesh};

#[derive(Debug, Error)]
pub enum DofMapError {
    #[error("mesh has untagged boundary edges; tag the boundary before building a dof map")]
    UntaggedBoundary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ElementPair {
    /// Taylor-Hood: continuous Q2 displacement, continuous Q1 pressure.
    Q2Q1,
    /// Q2 displacement with discontinuous element-wise linear pressure.
    Q2P1,
}

impl ElementPair {
    pub fn pressure_family(self) -> BasisFamily {
        match self {
            ElementPair::Q2Q1 => BasisFamily::Q1,
            ElementPair::Q2P1 => BasisFamily::P1Disc,
        }
    }

    pub fn pressure_dofs_per_element(self) -> usize {
        match self {
            ElementPair::Q2Q1 => 4,
            ElementPair::Q2P1 => 3,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ElementPair::Q2Q1 => "q2q1",
            ElementPair::Q2P1 => "q2p1",
        }
    }

    pub fn parse(s: &str) -> Option<ElementPair> {
        match s {
            "q2q1" => Some(ElementPair::Q2Q1),
            "q2p1" => Some(ElementPair::Q2P1),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct DofMap {
    pub pair: ElementPair,
    pub n_q2_nodes: usize,
    pub n_pressure: usize,
    /// Per element, the 9 global Q2 node ids in local basis order.
    pub element_q2_nodes: Vec<[usize; 9]>,
    /// Per element, pressure dof ids, flattened with stride
    /// `pair.pressure_dofs_per_element()`.
    pressure_dofs: Vec<usize>,
    /// Physical coordinates of every Q2 node.
    pub q2_node_coords: Vec<[f64; 2]>,
    /// Per displacement dof (2*node + component): constrained by a Dirichlet
    /// edge?
    pub constrained: Vec<bool>,
    pub n_constrained: usize,
}

impl DofMap {
    pub fn build(mesh: &Mesh, pair: ElementPair) -> Result<DofMap, DofMapError> {
        if mesh.has_untagged_boundary() {
            return Err(DofMapError::UntaggedBoundary);
        }
        let (nx, ny) = mesh.grid_dims();
        let qx = 2 * nx + 1;
        let qy = 2 * ny + 1;
        let n_q2_nodes = qx * qy;
        let qid = |ii: usize, jj: usize| jj * qx + ii;

        // node coordinates: even indices on grid lines, odd on midpoints
        let coord_1d = |lines: &[f64], k: usize| -> f64 {
            if k % 2 == 0 {
                lines[k / 2]
            } else {
                (lines[k / 2] + lines[k / 2 + 1]) / 2.0
            }
        };
        let mut q2_node_coords = Vec::with_capacity(n_q2_nodes);
        for jj in 0..qy {
            for ii in 0..qx {
                q2_node_coords.push([coord_1d(&mesh.xs, ii), coord_1d(&mesh.ys, jj)]);
            }
        }

        let mut element_q2_nodes = Vec::with_capacity(mesh.n_elements());
        let stride = pair.pressure_dofs_per_element();
        let mut pressure_dofs = Vec::with_capacity(mesh.n_elements() * stride);
        for e in 0..mesh.n_elements() {
            let (i, j) = mesh.element_grid_pos(e);
            let mut nodes = [0usize; 9];
            for b in 0..3 {
                for a in 0..3 {
                    nodes[3 * b + a] = qid(2 * i + a, 2 * j + b);
                }
            }
            element_q2_nodes.push(nodes);
            match pair {
                ElementPair::Q2Q1 => {
                    // vertex-shared, in the counterclockwise corner order of Q1
                    let v = &mesh.elements[e].vertices;
                    pressure_dofs.extend_from_slice(&[v[0], v[1], v[2], v[3]]);
                }
                ElementPair::Q2P1 => {
                    pressure_dofs.extend_from_slice(&[3 * e, 3 * e + 1, 3 * e + 2]);
                }
            }
        }
        let n_pressure = match pair {
            ElementPair::Q2Q1 => mesh.n_vertices(),
            ElementPair::Q2P1 => 3 * mesh.n_elements(),
        };

        // every Q2 node on a Dirichlet edge is constrained in both components
        let mut constrained = vec![false; 2 * n_q2_nodes];
        let mut n_constrained = 0;
        for edge in mesh.edges.iter().filter(|e| e.tag == EdgeTag::Dirichlet) {
            let (elem, side) = (
                edge.elements[0].expect("boundary edge has an element"),
                edge.sides[0].unwrap(),
            );
            let nodes = &element_q2_nodes[elem];
            let local: [usize; 3] = match side {
                0 => [0, 1, 2],
                1 => [2, 5, 8],
                2 => [6, 7, 8],
                3 => [0, 3, 6],
                _ => unreachable!(),
            };
            for l in local {
                for comp in 0..2 {
                    let dof = 2 * nodes[l] + comp;
                    if !constrained[dof] {
                        constrained[dof] = true;
                        n_constrained += 1;
                    }
                }
            }
        }

        Ok(DofMap {
            pair,
            n_q2_nodes,
            n_pressure,
            element_q2_nodes,
            pressure_dofs,
            q2_node_coords,
            constrained,
            n_constrained,
        })
    }

    pub fn n_displacement(&self) -> usize {
        2 * self.n_q2_nodes
    }

    pub fn n_free_displacement(&self) -> usize {
        self.n_displacement() - self.n_constrained
    }

    /// Total size of the assembled system (displacement + pressure).
    pub fn n_total(&self) -> usize {
        self.n_displacement() + self.n_pressure
    }

    pub fn displacement_dof(node: usize, comp: usize) -> usize {
        2 * node + comp
    }

    pub fn pressure_dofs(&self, elem: usize) -> &[usize] {
        let s = self.pair.pressure_dofs_per_element();
        &self.pressure_dofs[elem * s..(elem + 1) * s]
    }
}
