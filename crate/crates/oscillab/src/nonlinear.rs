//! Interior and boundary nonlinearities with two derivatives, a smooth
//! cutoff making them globally bounded, and the discrete load maps: the
//! nonlinear right-hand side functional and its derivative (weighted mass
//! forms), with the boundary term carrying the gamma weight on the limit
//! problem.

use crate::fem::{BoundaryQuad, FemSystem, SparseSym, TripletBuilder};
use crate::mesh::TriMesh;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum NonlinError {
    #[error("unknown nonlinearity '{0}'")]
    UnknownName(String),
    #[error("nonlinearity '{name}' expects {expected} parameter(s), got {got}")]
    BadParams {
        name: String,
        expected: &'static str,
        got: usize,
    },
    #[error("cutoff bound must be positive, got {0}")]
    BadCutoff(f64),
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
enum Kind {
    Zero,
    Constant(f64),
    Linear(f64),
    /// a*u - b*u^3
    Bistable { a: f64, b: f64 },
    /// r*u*(1-u)
    Logistic { r: f64 },
    Sine,
}

/// Quintic blend data for one side of the cutoff.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
struct CutoffSide {
    /// polynomial coefficients in xi = (|u| - U)/U over the blend zone
    c: [f64; 6],
    plateau: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
struct Cutoff {
    u_max: f64,
    pos: CutoffSide,
    neg: CutoffSide,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Nonlinearity {
    pub name: String,
    kind: Kind,
    cutoff: Option<Cutoff>,
}

impl Nonlinearity {
    pub fn zero() -> Self {
        Nonlinearity {
            name: "zero".into(),
            kind: Kind::Zero,
            cutoff: None,
        }
    }

    pub fn constant(c: f64) -> Self {
        Nonlinearity {
            name: format!("constant({c})"),
            kind: Kind::Constant(c),
            cutoff: None,
        }
    }

    pub fn linear(c: f64) -> Self {
        Nonlinearity {
            name: format!("linear({c})"),
            kind: Kind::Linear(c),
            cutoff: None,
        }
    }

    /// params [a]: u - a u^3; params [a, b]: a u - b u^3.
    pub fn bistable(a: f64, b: f64) -> Self {
        Nonlinearity {
            name: format!("bistable({a},{b})"),
            kind: Kind::Bistable { a, b },
            cutoff: None,
        }
    }

    pub fn logistic(r: f64) -> Self {
        Nonlinearity {
            name: format!("logistic({r})"),
            kind: Kind::Logistic { r },
            cutoff: None,
        }
    }

    pub fn sine() -> Self {
        Nonlinearity {
            name: "sine".into(),
            kind: Kind::Sine,
            cutoff: None,
        }
    }

    pub fn from_registry(name: &str, params: &[f64]) -> Result<Self, NonlinError> {
        match (name, params) {
            ("zero", []) => Ok(Self::zero()),
            ("constant", [c]) => Ok(Self::constant(*c)),
            ("linear", [c]) => Ok(Self::linear(*c)),
            ("bistable", [a]) => Ok(Self::bistable(1.0, *a)),
            ("bistable", [a, b]) => Ok(Self::bistable(*a, *b)),
            ("logistic", [r]) => Ok(Self::logistic(*r)),
            ("sine", []) => Ok(Self::sine()),
            ("zero" | "sine", _) => Err(NonlinError::BadParams {
                name: name.into(),
                expected: "0",
                got: params.len(),
            }),
            ("constant" | "linear" | "logistic", _) => Err(NonlinError::BadParams {
                name: name.into(),
                expected: "1",
                got: params.len(),
            }),
            ("bistable", _) => Err(NonlinError::BadParams {
                name: name.into(),
                expected: "1 or 2",
                got: params.len(),
            }),
            _ => Err(NonlinError::UnknownName(name.into())),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.kind, Kind::Zero) || matches!(self.kind, Kind::Constant(c) if c == 0.0)
    }

    fn raw(&self, u: f64) -> (f64, f64, f64) {
        match self.kind {
            Kind::Zero => (0.0, 0.0, 0.0),
            Kind::Constant(c) => (c, 0.0, 0.0),
            Kind::Linear(c) => (c * u, c, 0.0),
            Kind::Bistable { a, b } => (a * u - b * u * u * u, a - 3.0 * b * u * u, -6.0 * b * u),
            Kind::Logistic { r } => (r * u * (1.0 - u), r * (1.0 - 2.0 * u), -2.0 * r),
            Kind::Sine => (u.sin(), u.cos(), -u.sin()),
        }
    }

    pub fn value(&self, u: f64) -> f64 {
        self.eval(u).0
    }

    pub fn deriv(&self, u: f64) -> f64 {
        self.eval(u).1
    }

    pub fn second(&self, u: f64) -> f64 {
        self.eval(u).2
    }

    pub fn eval(&self, u: f64) -> (f64, f64, f64) {
        let co = match &self.cutoff {
            None => return self.raw(u),
            Some(c) => c,
        };
        let um = co.u_max;
        if u.abs() <= um {
            return self.raw(u);
        }
        let (side, xi, sign) = if u > 0.0 {
            (&co.pos, (u - um) / um, 1.0)
        } else {
            (&co.neg, (-u - um) / um, -1.0)
        };
        if xi >= 1.0 {
            return (side.plateau, 0.0, 0.0);
        }
        let mut v = 0.0;
        let mut d = 0.0;
        let mut dd = 0.0;
        for (k, &ck) in side.c.iter().enumerate() {
            let kf = k as f64;
            v += ck * xi.powi(k as i32);
            if k >= 1 {
                d += kf * ck * xi.powi(k as i32 - 1);
            }
            if k >= 2 {
                dd += kf * (kf - 1.0) * ck * xi.powi(k as i32 - 2);
            }
        }
        // chain rule: d xi / du = sign / u_max
        (v, sign * d / um, dd / (um * um))
    }

    /// C^2 clamp: identity on [-U, U], quintic blend to a constant plateau
    /// on [U, 2U] (mirrored on the negative side), constant beyond. The
    /// plateau is determined by the 2-jet at the cut, so re-cutting at the
    /// same bound reproduces the same function.
    pub fn with_cutoff(mut self, u_max: f64) -> Result<Self, NonlinError> {
        if !(u_max > 0.0) {
            return Err(NonlinError::BadCutoff(u_max));
        }
        let side = |u0: f64, sgn: f64| -> CutoffSide {
            let (p0, d0, dd0) = self.raw(u0);
            // derivatives with respect to xi = (|u| - U)/U
            let m0 = sgn * d0 * u_max;
            let a0 = dd0 * u_max * u_max;
            let plateau = p0 + 0.5 * m0;
            let p1 = plateau;
            // quintic Hermite on xi in [0,1]: value/slope/curvature at 0,
            // (plateau, 0, 0) at 1
            let c0 = p0;
            let c1 = m0;
            let c2 = 0.5 * a0;
            let c3 = -10.0 * p0 - 6.0 * m0 - 1.5 * a0 + 10.0 * p1;
            let c4 = 15.0 * p0 + 8.0 * m0 + 1.5 * a0 - 15.0 * p1;
            let c5 = -6.0 * p0 - 3.0 * m0 - 0.5 * a0 + 6.0 * p1;
            CutoffSide {
                c: [c0, c1, c2, c3, c4, c5],
                plateau,
            }
        };
        let pos = side(u_max, 1.0);
        let neg = side(-u_max, -1.0);
        self.cutoff = Some(Cutoff { u_max, pos, neg });
        Ok(self)
    }

    pub fn cutoff_bound(&self) -> Option<f64> {
        self.cutoff.as_ref().map(|c| c.u_max)
    }
}

/// Discrete realization of the nonlinear right-hand side on one mesh:
/// 3-point interior quadrature and the system's 2-point boundary quadrature
/// (which already carries the gamma weight and the boundary measure).
pub struct LoadMap<'a> {
    pub mesh: &'a TriMesh,
    pub bq: &'a BoundaryQuad,
    pub f: Nonlinearity,
    pub g: Nonlinearity,
}

impl<'a> LoadMap<'a> {
    pub fn new(mesh: &'a TriMesh, sys: &'a FemSystem, f: Nonlinearity, g: Nonlinearity) -> Self {
        LoadMap {
            mesh,
            bq: &sys.bq,
            f,
            g,
        }
    }

    /// Functional vector of the load at state u: entries <h(u), phi_i>.
    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        let n = self.mesh.vertex_count();
        let mut out = vec![0.0; n];
        if !self.f.is_zero() {
            for tri in &self.mesh.triangles {
                let p = [
                    self.mesh.vertices[tri[0]],
                    self.mesh.vertices[tri[1]],
                    self.mesh.vertices[tri[2]],
                ];
                let area = crate::mesh::signed_area(p[0], p[1], p[2]);
                let w = area / 3.0;
                // edge-midpoint rule: basis values are 1/2 at two vertices
                for q in 0..3 {
                    let (i, j) = (q, (q + 1) % 3);
                    let uq = 0.5 * (u[tri[i]] + u[tri[j]]);
                    let fv = self.f.value(uq);
                    out[tri[i]] += w * fv * 0.5;
                    out[tri[j]] += w * fv * 0.5;
                }
            }
        }
        if !self.g.is_zero() {
            for eq in &self.bq.edges {
                for node in &eq.nodes {
                    let basis = [1.0 - node.xi, node.xi];
                    let uq = basis[0] * u[eq.v[0]] + basis[1] * u[eq.v[1]];
                    let gv = self.g.value(uq) * node.w_measure * node.gamma;
                    out[eq.v[0]] += gv * basis[0];
                    out[eq.v[1]] += gv * basis[1];
                }
            }
        }
        out
    }

    /// Interior and boundary parts of the load derivative at state e:
    /// mass weighted by f'(e), boundary mass weighted by g'(e) (times the
    /// gamma weight baked into the quadrature).
    pub fn derivative_parts(&self, e: &[f64]) -> (SparseSym, SparseSym) {
        let n = self.mesh.vertex_count();
        let mut fb = TripletBuilder::new(n);
        if !self.f.is_zero() {
            for tri in &self.mesh.triangles {
                let p = [
                    self.mesh.vertices[tri[0]],
                    self.mesh.vertices[tri[1]],
                    self.mesh.vertices[tri[2]],
                ];
                let area = crate::mesh::signed_area(p[0], p[1], p[2]);
                let w = area / 3.0;
                for q in 0..3 {
                    let (i, j) = (q, (q + 1) % 3);
                    let eq_ = 0.5 * (e[tri[i]] + e[tri[j]]);
                    let fd = self.f.deriv(eq_) * w;
                    // basis products at the midpoint: phi_i = phi_j = 1/2
                    fb.push(tri[i], tri[i], fd * 0.25);
                    fb.push(tri[j], tri[j], fd * 0.25);
                    fb.push_sym(tri[i], tri[j], fd * 0.25);
                }
            }
        }
        let mut gb = TripletBuilder::new(n);
        if !self.g.is_zero() {
            for eq in &self.bq.edges {
                for node in &eq.nodes {
                    let basis = [1.0 - node.xi, node.xi];
                    let uq = basis[0] * e[eq.v[0]] + basis[1] * e[eq.v[1]];
                    let gd = self.g.deriv(uq) * node.w_measure * node.gamma;
                    for i in 0..2 {
                        for j in 0..2 {
                            gb.push(eq.v[i], eq.v[j], gd * basis[i] * basis[j]);
                        }
                    }
                }
            }
        }
        (fb.build(), gb.build())
    }

    /// Full derivative of the load: interior part + boundary part.
    pub fn derivative(&self, e: &[f64]) -> SparseSym {
        let (f_part, g_part) = self.derivative_parts(e);
        f_part.add_scaled(&g_part, 1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::{assemble, EdgeMeasure};
    use crate::geometry::{BoundaryProfile, DomainFamily, CHART_TOP};
    use crate::homogenization::{ChartGamma, GammaField, Provenance};
    use crate::mesh::{mesh_domain, MeshTarget};
    use approx::assert_relative_eq;

    fn setup(h: f64) -> (crate::mesh::TriMesh, FemSystem) {
        let fam = DomainFamily::unit_square(
            &[CHART_TOP],
            BoundaryProfile::flat(),
            vec![0.2, 0.1],
            0.5,
        )
        .unwrap();
        let mesh = mesh_domain(&fam, MeshTarget::Reference, h).unwrap();
        let sys = assemble(&mesh, None, EdgeMeasure::Chord);
        (mesh, sys)
    }

    #[test]
    fn registry_and_derivative_consistency() {
        let names: Vec<Nonlinearity> = vec![
            Nonlinearity::from_registry("bistable", &[3.0, 2.0]).unwrap(),
            Nonlinearity::from_registry("logistic", &[1.5]).unwrap(),
            Nonlinearity::from_registry("sine", &[]).unwrap(),
            Nonlinearity::from_registry("linear", &[2.0]).unwrap(),
        ];
        for nl in names {
            // central differences vs analytic derivative
            let hstep = 1e-6;
            for k in 0..100 {
                let u = -5.0 + 0.1 * k as f64;
                let num = (nl.value(u + hstep) - nl.value(u - hstep)) / (2.0 * hstep);
                let ana = nl.deriv(u);
                assert!(
                    (num - ana).abs() <= 1e-6 * (1.0 + ana.abs()),
                    "{}: {num} vs {ana} at {u}",
                    nl.name
                );
            }
        }
        assert!(Nonlinearity::from_registry("unknown", &[]).is_err());
        assert!(Nonlinearity::from_registry("logistic", &[]).is_err());
    }

    #[test]
    fn cutoff_preserves_core_and_saturates() {
        let raw = Nonlinearity::bistable(1.0, 1.0); // u - u^3
        let cut = raw.clone().with_cutoff(2.0).unwrap();
        for k in 0..=40 {
            let u = -2.0 + 0.1 * k as f64;
            assert_eq!(cut.value(u), raw.value(u));
            assert_eq!(cut.deriv(u), raw.deriv(u));
        }
        // beyond twice the bound: exactly constant
        assert_eq!(cut.deriv(4.1), 0.0);
        assert_eq!(cut.deriv(-4.1), 0.0);
        assert_eq!(cut.second(5.0), 0.0);
        // inside the blend zone the slope is already nearly flat
        assert!(cut.deriv(3.9).abs() < 0.5);
        // globally bounded with bounded derivatives
        let mut sup = 0.0f64;
        for k in 0..10_000 {
            let u = -20.0 + 40.0 * k as f64 / 10_000.0;
            let (v, d, dd) = cut.eval(u);
            sup = sup.max(v.abs() + d.abs() + dd.abs());
            assert!(v.is_finite() && d.is_finite() && dd.is_finite());
        }
        assert!(sup < 60.0);
    }

    #[test]
    fn cutoff_is_idempotent_on_grid() {
        let cut = Nonlinearity::bistable(3.0, 2.0).with_cutoff(1.5).unwrap();
        let twice = cut.clone().with_cutoff(1.5).unwrap();
        for k in 0..10_000 {
            let u = -15.0 + 30.0 * k as f64 / 10_000.0;
            assert_relative_eq!(cut.value(u), twice.value(u), epsilon = 1e-12);
        }
    }

    #[test]
    fn cutoff_smooth_at_the_seams() {
        let cut = Nonlinearity::bistable(1.0, 1.0).with_cutoff(2.0).unwrap();
        for &u0 in &[2.0, 4.0, -2.0, -4.0] {
            let h = 1e-5;
            let below = cut.value(u0 - h);
            let above = cut.value(u0 + h);
            assert!((below - above).abs() < 1e-3);
            let dbelow = cut.deriv(u0 - h);
            let dabove = cut.deriv(u0 + h);
            assert!((dbelow - dabove).abs() < 1e-2, "jet jump at {u0}");
        }
    }

    #[test]
    fn constant_interior_load_is_lumped_mass() {
        let (mesh, sys) = setup(0.125);
        let lm = LoadMap::new(&mesh, &sys, Nonlinearity::constant(1.0), Nonlinearity::zero());
        let u = vec![0.7; mesh.vertex_count()];
        let h = lm.apply(&u);
        let m1 = sys.m.matvec(&vec![1.0; mesh.vertex_count()]);
        for (a, b) in h.iter().zip(&m1) {
            assert_relative_eq!(a, b, epsilon = 1e-14);
        }
    }

    #[test]
    fn boundary_load_with_gamma_weight() {
        // f = 0, g = 1, gamma = sqrt2 on the top edge: total boundary mass
        // over the top edge is sqrt2
        let fam = DomainFamily::unit_square(
            &[CHART_TOP],
            BoundaryProfile::flat(),
            vec![0.2, 0.1],
            0.5,
        )
        .unwrap();
        let mesh = mesh_domain(&fam, MeshTarget::Reference, 0.125).unwrap();
        let mut gamma = GammaField::constant_one(&fam);
        gamma.charts[CHART_TOP] = ChartGamma::constant(
            2.0f64.sqrt(),
            fam.charts[CHART_TOP].interval(),
            Provenance::UserSupplied,
        );
        let sys = assemble(&mesh, Some(&gamma), EdgeMeasure::Chord);
        let lm = LoadMap::new(&mesh, &sys, Nonlinearity::zero(), Nonlinearity::constant(1.0));
        let h = lm.apply(&vec![0.0; mesh.vertex_count()]);
        let total: f64 = h.iter().sum();
        assert_relative_eq!(total, 3.0 + 2.0f64.sqrt(), epsilon = 1e-12);
        // h(u) = B_w 1 entrywise
        let b1 = sys.b_w.matvec(&vec![1.0; mesh.vertex_count()]);
        for (a, b) in h.iter().zip(&b1) {
            assert_relative_eq!(a, b, epsilon = 1e-13);
        }
    }

    #[test]
    fn linear_f_load_approximates_mass_action() {
        let (mesh, sys) = setup(1.0 / 32.0);
        let lm = LoadMap::new(&mesh, &sys, Nonlinearity::linear(1.0), Nonlinearity::zero());
        let u: Vec<f64> = mesh.vertices.iter().map(|p| p[0] + 2.0 * p[1]).collect();
        let h = lm.apply(&u);
        let mu = sys.m.matvec(&u);
        let diff: f64 = h
            .iter()
            .zip(&mu)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        assert!(diff < 1e-3, "quadrature gap {diff}");
    }

    #[test]
    fn derivative_parts_match_mass_forms() {
        let (mesh, sys) = setup(0.125);
        // f'(e) = 1: interior part equals M within quadrature tolerance
        let lm = LoadMap::new(&mesh, &sys, Nonlinearity::linear(1.0), Nonlinearity::zero());
        let e = vec![0.3; mesh.vertex_count()];
        let (fp, _) = lm.derivative_parts(&e);
        for i in 0..mesh.vertex_count() {
            let (cols, vals) = fp.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                assert_relative_eq!(v, sys.m.get(i, j), epsilon = 1e-13);
            }
        }
        // g'(e) = 1, f = 0: boundary part equals B_w
        let lm = LoadMap::new(&mesh, &sys, Nonlinearity::zero(), Nonlinearity::linear(1.0));
        let (_, gp) = lm.derivative_parts(&e);
        for i in 0..mesh.vertex_count() {
            let (cols, vals) = gp.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                assert_relative_eq!(v, sys.b_w.get(i, j), epsilon = 1e-13);
            }
        }
        assert!(lm.derivative(&e).symmetry_defect() < 1e-13);
    }

    #[test]
    fn directional_derivative_second_order() {
        let (mesh, sys) = setup(0.125);
        let lm = LoadMap::new(
            &mesh,
            &sys,
            Nonlinearity::bistable(3.0, 2.0),
            Nonlinearity::logistic(1.0),
        );
        let n = mesh.vertex_count();
        let mut state = 42u64;
        let mut rand = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1);
            ((state >> 33) as f64 / (1u64 << 31) as f64) - 1.0
        };
        let e: Vec<f64> = (0..n).map(|_| rand()).collect();
        let v: Vec<f64> = (0..n).map(|_| rand()).collect();
        let hp = lm.derivative(&e);
        let hpv = hp.matvec(&v);
        let mut errs = Vec::new();
        for &tau in &[1e-2, 1e-3, 1e-4] {
            let shifted: Vec<f64> = e.iter().zip(&v).map(|(a, b)| a + tau * b).collect();
            let lhs = lm.apply(&shifted);
            let base = lm.apply(&e);
            let err: f64 = lhs
                .iter()
                .zip(&base)
                .zip(&hpv)
                .map(|((l, b), d)| (l - b - tau * d).powi(2))
                .sum::<f64>()
                .sqrt();
            errs.push(err / tau);
        }
        // the normalized defect shrinks linearly in tau (observed order 2)
        assert!(errs[1] < 0.15 * errs[0]);
        assert!(errs[2] < 0.15 * errs[1]);
    }

    #[test]
    fn load_entries_bounded_by_row_mass() {
        let (mesh, sys) = setup(0.125);
        let cut_f = Nonlinearity::bistable(3.0, 2.0).with_cutoff(2.0).unwrap();
        let cut_g = Nonlinearity::logistic(1.0).with_cutoff(2.0).unwrap();
        // after cutoff, |f| <= C so |h(u)_i| <= C (M 1 + B 1)_i
        let mut c_bound = 0.0f64;
        for k in 0..10_000 {
            let u = -20.0 + 40.0 * k as f64 / 10_000.0;
            c_bound = c_bound.max(cut_f.value(u).abs()).max(cut_g.value(u).abs());
        }
        let lm = LoadMap::new(&mesh, &sys, cut_f, cut_g);
        let ones = vec![1.0; mesh.vertex_count()];
        let row_mass: Vec<f64> = sys
            .m
            .matvec(&ones)
            .iter()
            .zip(sys.b_one.matvec(&ones).iter())
            .map(|(a, b)| a + b)
            .collect();
        let mut state = 7u64;
        for _ in 0..100 {
            let u: Vec<f64> = (0..mesh.vertex_count())
                .map(|_| {
                    state = state.wrapping_mul(6364136223846793005).wrapping_add(1);
                    10.0 * (((state >> 33) as f64 / (1u64 << 31) as f64) - 1.0)
                })
                .collect();
            let h = lm.apply(&u);
            for (hi, rm) in h.iter().zip(&row_mass) {
                assert!(hi.abs() <= c_bound * rm * (1.0 + 1e-12));
            }
        }
    }
}
