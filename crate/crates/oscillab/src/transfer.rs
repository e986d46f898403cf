//! Discrete transfer operators between the reference mesh and a perturbed
//! mesh: extension (interpolation plus even reflection across the chart base
//! line for vertices outside the reference domain), restriction through the
//! interior shift map, the dual extension acting on functionals, and the
//! field/set distances built from them.

use crate::fem::sparse::dot;
use crate::fem::FemSystem;
use crate::geometry::{DomainFamily, GeometryError, GEOM_TOL};
use crate::mesh::TriMesh;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TransferError {
    #[error("vertex ({0}, {1}) could not be located in the target mesh")]
    LocationFailure(f64, f64),
    #[error("reflected point ({0}, {1}) lies outside the reference mesh; profile amplitude too large for the mesh margin")]
    ReflectionOutside(f64, f64),
    #[error("set semidistance of an empty set")]
    EmptySet,
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Row-sparse interpolation matrix: each row is a convex combination of at
/// most three source values.
#[derive(Debug, Clone)]
pub struct InterpMatrix {
    pub rows: Vec<InterpRow>,
    pub source_dim: usize,
}

#[derive(Debug, Clone)]
pub struct InterpRow {
    pub idx: [usize; 3],
    pub w: [f64; 3],
}

impl InterpMatrix {
    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        assert_eq!(u.len(), self.source_dim);
        self.rows
            .iter()
            .map(|r| r.w[0] * u[r.idx[0]] + r.w[1] * u[r.idx[1]] + r.w[2] * u[r.idx[2]])
            .collect()
    }

    /// Transpose action: maps functionals on the rows to functionals on the
    /// source space.
    pub fn apply_transpose(&self, phi: &[f64]) -> Vec<f64> {
        assert_eq!(phi.len(), self.rows.len());
        let mut out = vec![0.0; self.source_dim];
        for (r, &p) in self.rows.iter().zip(phi) {
            for k in 0..3 {
                out[r.idx[k]] += r.w[k] * p;
            }
        }
        out
    }

    /// True when the row takes a single source value with weight one.
    pub fn is_unit_row(&self, row: usize) -> Option<usize> {
        let r = &self.rows[row];
        for k in 0..3 {
            if r.w[k] == 1.0 && r.w[(k + 1) % 3] == 0.0 && r.w[(k + 2) % 3] == 0.0 {
                return Some(r.idx[k]);
            }
        }
        None
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormKind {
    L2,
    H1,
    HMinus1,
}

pub struct TransferOps {
    /// rows: perturbed-mesh vertices, columns: reference-mesh vertices
    pub extend_matrix: InterpMatrix,
    /// rows: reference-mesh vertices, columns: perturbed-mesh vertices
    pub restrict_matrix: InterpMatrix,
    /// reference vertices with chart-normal distance >= core margin from
    /// every oscillating edge
    pub core_mask: Vec<bool>,
    pub eps: f64,
}

impl TransferOps {
    pub fn build(
        family: &DomainFamily,
        eps: f64,
        mesh_ref: &TriMesh,
        mesh_eps: &TriMesh,
    ) -> Result<Self, TransferError> {
        let osc = family.oscillating_charts();

        // extension rows: interpolate inside the reference domain, even
        // reflection across the chart base line outside it
        let mut extend_rows = Vec::with_capacity(mesh_eps.vertex_count());
        for &p in &mesh_eps.vertices {
            let target = if family.in_reference(p) {
                p
            } else {
                // owning chart: the oscillating chart the point sticks out of
                let mut reflected = None;
                for &ci in &osc {
                    let chart = &family.charts[ci];
                    let (t, s) = chart.to_chart(p);
                    let (lo, hi) = chart.interval();
                    if s > -GEOM_TOL && t >= lo - GEOM_TOL && t <= hi + GEOM_TOL {
                        reflected = Some(chart.map(t, -s));
                        break;
                    }
                }
                match reflected {
                    Some(q) => {
                        if !family.in_reference(q) {
                            return Err(TransferError::ReflectionOutside(q[0], q[1]));
                        }
                        q
                    }
                    None => return Err(TransferError::LocationFailure(p[0], p[1])),
                }
            };
            let row = locate_row(mesh_ref, target)
                .ok_or(TransferError::ReflectionOutside(target[0], target[1]))?;
            extend_rows.push(row);
        }

        // restriction rows: interpolate at the interior shift image
        let mut restrict_rows = Vec::with_capacity(mesh_ref.vertex_count());
        for &x in &mesh_ref.vertices {
            let q = family.interior_map(eps, x)?;
            let row =
                locate_row(mesh_eps, q).ok_or(TransferError::LocationFailure(q[0], q[1]))?;
            restrict_rows.push(row);
        }

        let core_mask = mesh_ref
            .vertices
            .iter()
            .map(|&x| {
                osc.iter().all(|&ci| {
                    let (_, s) = family.charts[ci].to_chart(x);
                    s <= -family.core_margin
                })
            })
            .collect();

        Ok(TransferOps {
            extend_matrix: InterpMatrix {
                rows: extend_rows,
                source_dim: mesh_ref.vertex_count(),
            },
            restrict_matrix: InterpMatrix {
                rows: restrict_rows,
                source_dim: mesh_eps.vertex_count(),
            },
            core_mask,
            eps,
        })
    }

    /// Extension of a reference field to the perturbed mesh.
    pub fn extend(&self, u: &[f64]) -> Vec<f64> {
        self.extend_matrix.apply(u)
    }

    /// Restriction of a perturbed field to the reference mesh through the
    /// interior shift map.
    pub fn restrict(&self, u_eps: &[f64]) -> Vec<f64> {
        self.restrict_matrix.apply(u_eps)
    }

    /// Dual extension of a functional on the reference space: the exact
    /// discrete adjoint of `restrict`.
    pub fn dual_extend(&self, phi: &[f64]) -> Vec<f64> {
        self.restrict_matrix.apply_transpose(phi)
    }

    /// Distance between a perturbed field and an extended reference field in
    /// the requested norm of the perturbed system.
    pub fn field_distance(
        &self,
        sys_eps: &FemSystem,
        u_eps: &[f64],
        u: &[f64],
        norm: NormKind,
    ) -> f64 {
        let eu = self.extend(u);
        let diff: Vec<f64> = u_eps.iter().zip(&eu).map(|(a, b)| a - b).collect();
        match norm {
            NormKind::L2 => sys_eps.l2_norm(&diff),
            NormKind::H1 => sys_eps.h1_norm(&diff),
            NormKind::HMinus1 => sys_eps.dual_norm(&sys_eps.m.matvec(&diff)),
        }
    }

    /// One-sided Hausdorff semidistance between finite sets of states in the
    /// H1 norm of the perturbed system. `upper` measures how far the
    /// perturbed set strays from the extended reference set; `lower` the
    /// reverse.
    pub fn set_semidistance(
        &self,
        sys_eps: &FemSystem,
        set_eps: &[Vec<f64>],
        set_ref: &[Vec<f64>],
        direction: Direction,
    ) -> Result<f64, TransferError> {
        if set_eps.is_empty() || set_ref.is_empty() {
            return Err(TransferError::EmptySet);
        }
        let extended: Vec<Vec<f64>> = set_ref.iter().map(|x| self.extend(x)).collect();
        let dist = |a: &[f64], b: &[f64]| -> f64 {
            let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
            sys_eps.h1_norm(&diff)
        };
        let value = match direction {
            Direction::Upper => set_eps
                .iter()
                .map(|xe| {
                    extended
                        .iter()
                        .map(|ex| dist(xe, ex))
                        .fold(f64::INFINITY, f64::min)
                })
                .fold(0.0, f64::max),
            Direction::Lower => extended
                .iter()
                .map(|ex| {
                    set_eps
                        .iter()
                        .map(|xe| dist(xe, ex))
                        .fold(f64::INFINITY, f64::min)
                })
                .fold(0.0, f64::max),
        };
        Ok(value)
    }

    /// Pairing check value <dual_extend(phi), u_eps> - <phi, restrict(u_eps)>.
    pub fn adjoint_defect(&self, phi: &[f64], u_eps: &[f64]) -> f64 {
        dot(&self.dual_extend(phi), u_eps) - dot(phi, &self.restrict(u_eps))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Upper,
    Lower,
}

fn locate_row(mesh: &TriMesh, p: [f64; 2]) -> Option<InterpRow> {
    let (ti, lam) = mesh.locate_tol(p, 1e-9)?;
    let tri = mesh.triangles[ti];
    Some(InterpRow {
        idx: tri,
        w: lam,
    })
}
