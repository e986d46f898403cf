//! P1 finite elements for the -Laplace + identity form with natural
//! boundary conditions: assembly of the operator, mass and weighted boundary
//! mass matrices, discrete norms including the Riesz dual norm, and the
//! generalized eigensolver.

pub mod eig;
pub mod solve;
pub mod sparse;

pub use eig::{eig_smallest, EigError, EigOptions};
pub use solve::{solve_spd, SkylineLdl, SolveError};
pub use sparse::{SparseSym, TripletBuilder};

use crate::geometry::DomainFamily;
use crate::homogenization::GammaField;
use crate::mesh::TriMesh;
use std::sync::OnceLock;

/// Boundary measure used for edge quadrature: straight chords, or the true
/// arc length of the profile curve evaluated at the quadrature nodes.
#[derive(Clone, Copy)]
pub enum EdgeMeasure<'a> {
    Chord,
    Curve { family: &'a DomainFamily, eps: f64 },
}

/// One precomputed Gauss node on a boundary edge.
#[derive(Debug, Clone, Copy)]
pub struct EdgeNode {
    /// barycentric coordinate of the node along the edge (basis = 1-xi, xi)
    pub xi: f64,
    /// quadrature weight times the boundary measure factor
    pub w_measure: f64,
    /// boundary weight (gamma) at the node
    pub gamma: f64,
}

#[derive(Debug, Clone)]
pub struct EdgeQuad {
    pub v: [usize; 2],
    pub nodes: [EdgeNode; 2],
}

/// Precomputed 2-point Gauss data for every tagged boundary edge; shared by
/// the bilinear boundary forms and the nonlinear load maps so both see the
/// same discrete boundary measure.
#[derive(Debug, Clone, Default)]
pub struct BoundaryQuad {
    pub edges: Vec<EdgeQuad>,
}

#[derive(Debug)]
pub struct FemSystem {
    /// stiffness + mass: the discrete -Laplace + identity form
    pub k: SparseSym,
    /// consistent mass
    pub m: SparseSym,
    /// boundary mass with the supplied weight field
    pub b_w: SparseSym,
    /// boundary mass with unit weight (the plain boundary measure)
    pub b_one: SparseSym,
    pub bq: BoundaryQuad,
    k_factor: OnceLock<SkylineLdl>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldNorms {
    pub l2: f64,
    pub h1: f64,
    pub boundary_l2: f64,
}

const GAUSS_OFFSET: f64 = 0.28867513459481287; // 1 / (2 sqrt 3)

/// Assemble the P1 system on a mesh. `gamma` weights the boundary mass (per
/// quadrature point, nearest-window lookup); `measure` selects chord-length
/// or profile-aware arc-length boundary quadrature.
pub fn assemble(mesh: &TriMesh, gamma: Option<&GammaField>, measure: EdgeMeasure) -> FemSystem {
    let n = mesh.vertex_count();
    let mut kb = TripletBuilder::new(n);
    let mut mb = TripletBuilder::new(n);
    for tri in &mesh.triangles {
        let p = [
            mesh.vertices[tri[0]],
            mesh.vertices[tri[1]],
            mesh.vertices[tri[2]],
        ];
        let area = crate::mesh::signed_area(p[0], p[1], p[2]);
        // gradients of the barycentric basis
        let gx = [
            (p[1][1] - p[2][1]) / (2.0 * area),
            (p[2][1] - p[0][1]) / (2.0 * area),
            (p[0][1] - p[1][1]) / (2.0 * area),
        ];
        let gy = [
            (p[2][0] - p[1][0]) / (2.0 * area),
            (p[0][0] - p[2][0]) / (2.0 * area),
            (p[1][0] - p[0][0]) / (2.0 * area),
        ];
        for i in 0..3 {
            for j in 0..3 {
                let stiff = area * (gx[i] * gx[j] + gy[i] * gy[j]);
                let mass = area / 12.0 * if i == j { 2.0 } else { 1.0 };
                kb.push(tri[i], tri[j], stiff + mass);
                mb.push(tri[i], tri[j], mass);
            }
        }
    }

    let bq = boundary_quad(mesh, gamma, measure);
    let mut bwb = TripletBuilder::new(n);
    let mut b1b = TripletBuilder::new(n);
    for eq in &bq.edges {
        for node in &eq.nodes {
            let basis = [1.0 - node.xi, node.xi];
            for i in 0..2 {
                for j in 0..2 {
                    let m = node.w_measure * basis[i] * basis[j];
                    b1b.push(eq.v[i], eq.v[j], m);
                    bwb.push(eq.v[i], eq.v[j], m * node.gamma);
                }
            }
        }
    }

    FemSystem {
        k: kb.build(),
        m: mb.build(),
        b_w: bwb.build(),
        b_one: b1b.build(),
        bq,
        k_factor: OnceLock::new(),
    }
}

fn boundary_quad(mesh: &TriMesh, gamma: Option<&GammaField>, measure: EdgeMeasure) -> BoundaryQuad {
    let mut edges = Vec::with_capacity(mesh.boundary_edges.len());
    for e in &mesh.boundary_edges {
        let p0 = mesh.vertices[e.v[0]];
        let p1 = mesh.vertices[e.v[1]];
        let chord = ((p1[0] - p0[0]).powi(2) + (p1[1] - p0[1]).powi(2)).sqrt();
        let dt = e.t[1] - e.t[0];
        let mut nodes = [EdgeNode {
            xi: 0.0,
            w_measure: 0.0,
            gamma: 1.0,
        }; 2];
        for (q, xi) in [0.5 - GAUSS_OFFSET, 0.5 + GAUSS_OFFSET].iter().enumerate() {
            let t_q = e.t[0] + xi * dt;
            let ds = match measure {
                EdgeMeasure::Chord => chord,
                EdgeMeasure::Curve { family, eps } => {
                    // arc length of the graph in the chart coordinate
                    let factor = family.arc_factor(e.chart, eps, t_q).unwrap_or(1.0);
                    dt.abs() * factor
                }
            };
            nodes[q] = EdgeNode {
                xi: *xi,
                w_measure: 0.5 * ds,
                gamma: gamma.map(|g| g.eval(e.chart, t_q)).unwrap_or(1.0),
            };
        }
        edges.push(EdgeQuad { v: e.v, nodes });
    }
    BoundaryQuad { edges }
}

impl FemSystem {
    pub fn dofs(&self) -> usize {
        self.k.dim()
    }

    pub fn norms(&self, u: &[f64]) -> FieldNorms {
        FieldNorms {
            l2: self.m.bilinear(u, u).max(0.0).sqrt(),
            h1: self.k.bilinear(u, u).max(0.0).sqrt(),
            boundary_l2: self.b_one.bilinear(u, u).max(0.0).sqrt(),
        }
    }

    pub fn l2_norm(&self, u: &[f64]) -> f64 {
        self.m.bilinear(u, u).max(0.0).sqrt()
    }

    pub fn h1_norm(&self, u: &[f64]) -> f64 {
        self.k.bilinear(u, u).max(0.0).sqrt()
    }

    fn k_factorized(&self) -> &SkylineLdl {
        self.k_factor
            .get_or_init(|| SkylineLdl::factor(&self.k).expect("operator form must factorize"))
    }

    /// Solve K x = b through the cached factorization.
    pub fn solve_k(&self, b: &[f64]) -> Vec<f64> {
        self.k_factorized().solve(b)
    }

    /// Discrete Riesz dual norm sqrt(phi^T K^{-1} phi) of a functional given
    /// by its action on the nodal basis.
    pub fn dual_norm(&self, phi: &[f64]) -> f64 {
        let x = self.solve_k(phi);
        sparse::dot(phi, &x).max(0.0).sqrt()
    }
}
