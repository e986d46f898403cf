//! Reference domain, oscillating boundary profiles, chart parametrizations
//! and the interior shift map used to compare functions across domains.
//!
//! The reference domain is the unit square. Each edge carries a chart that
//! maps an arc-length coordinate t (and a normal offset s) to the plane; a
//! perturbed domain replaces designated edges by the graph of a profile
//! rho_eps(t) = amplitude(eps) * g(t / period(eps)), measured along the
//! outward normal. Profiles shrink uniformly as eps -> 0 while their slope
//! stays bounded, which is exactly the regime where the boundary measure
//! carries a nontrivial oscillation factor into the limit problem.

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const GEOM_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("epsilon must be positive, got {0}")]
    NonPositiveEpsilon(f64),
    #[error("chart coordinate {t} outside chart interval [0, {len}]")]
    OutOfChart { t: f64, len: f64 },
    #[error("point ({0}, {1}) is outside the reference domain")]
    OutsideDomain(f64, f64),
    #[error("profile amplitude {amplitude} exceeds the interior margin {margin}")]
    AmplitudeExceedsMargin { amplitude: f64, margin: f64 },
    #[error("epsilon list must be strictly decreasing positives in (0, 1)")]
    BadEpsilonList,
    #[error("oscillating charts {0} and {1} are adjacent; bands would collide at the corner")]
    AdjacentOscillatingCharts(usize, usize),
}

/// scale(eps) = coeff * eps^exponent
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct PowerLaw {
    pub coeff: f64,
    pub exponent: f64,
}

impl PowerLaw {
    pub fn of_epsilon() -> Self {
        PowerLaw {
            coeff: 1.0,
            exponent: 1.0,
        }
    }

    pub fn eval(&self, eps: f64) -> f64 {
        self.coeff * eps.powf(self.exponent)
    }

    pub fn is_identity(&self) -> bool {
        self.exponent == 1.0
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub enum ProfileKind {
    /// Identically zero.
    Flat,
    /// Symmetric triangle wave of unit period; |g'| = slope, peak slope/2.
    Sawtooth { slope: f64 },
    /// g(t) = amplitude_coeff * sin(wavenumber * t); period 2 pi / wavenumber.
    Sine {
        amplitude_coeff: f64,
        wavenumber: f64,
    },
    /// Piecewise-linear generator through (coordinate, value) samples on
    /// [0, 1), extended 1-periodically.
    Table { samples: Vec<(f64, f64)> },
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
pub enum ProfileSign {
    /// rho >= 0: the perturbed domain contains the reference domain.
    Exterior,
    /// rho may change sign.
    Signed,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundaryProfile {
    pub kind: ProfileKind,
    pub amplitude_law: PowerLaw,
    pub period_law: PowerLaw,
    pub sign: ProfileSign,
}

impl BoundaryProfile {
    pub fn flat() -> Self {
        BoundaryProfile {
            kind: ProfileKind::Flat,
            amplitude_law: PowerLaw::of_epsilon(),
            period_law: PowerLaw::of_epsilon(),
            sign: ProfileSign::Exterior,
        }
    }

    pub fn sawtooth(slope: f64) -> Self {
        BoundaryProfile {
            kind: ProfileKind::Sawtooth { slope },
            amplitude_law: PowerLaw::of_epsilon(),
            period_law: PowerLaw::of_epsilon(),
            sign: ProfileSign::Exterior,
        }
    }

    pub fn sine(amplitude_coeff: f64) -> Self {
        BoundaryProfile {
            kind: ProfileKind::Sine {
                amplitude_coeff,
                wavenumber: 1.0,
            },
            amplitude_law: PowerLaw::of_epsilon(),
            period_law: PowerLaw::of_epsilon(),
            sign: ProfileSign::Signed,
        }
    }

    pub fn is_flat(&self) -> bool {
        matches!(self.kind, ProfileKind::Flat)
    }

    /// Generator g evaluated at the dimensionless coordinate t.
    pub fn generator(&self, t: f64) -> f64 {
        match &self.kind {
            ProfileKind::Flat => 0.0,
            ProfileKind::Sawtooth { slope } => slope * triangle_wave(t),
            ProfileKind::Sine {
                amplitude_coeff,
                wavenumber,
            } => amplitude_coeff * (wavenumber * t).sin(),
            ProfileKind::Table { samples } => table_interp(samples, t).0,
        }
    }

    /// One-sided (right) derivative of the generator.
    pub fn generator_prime(&self, t: f64) -> f64 {
        match &self.kind {
            ProfileKind::Flat => 0.0,
            ProfileKind::Sawtooth { slope } => slope * triangle_wave_prime(t),
            ProfileKind::Sine {
                amplitude_coeff,
                wavenumber,
            } => amplitude_coeff * wavenumber * (wavenumber * t).cos(),
            ProfileKind::Table { samples } => table_interp(samples, t).1,
        }
    }

    /// Fundamental period of the generator in t units; None for flat.
    pub fn generator_period(&self) -> Option<f64> {
        match &self.kind {
            ProfileKind::Flat => None,
            ProfileKind::Sawtooth { .. } | ProfileKind::Table { .. } => Some(1.0),
            ProfileKind::Sine { wavenumber, .. } => Some(2.0 * std::f64::consts::PI / wavenumber),
        }
    }

    pub fn sup_generator(&self) -> f64 {
        match &self.kind {
            ProfileKind::Flat => 0.0,
            ProfileKind::Sawtooth { slope } => slope.abs() * 0.5,
            ProfileKind::Sine {
                amplitude_coeff, ..
            } => amplitude_coeff.abs(),
            ProfileKind::Table { samples } => samples
                .iter()
                .map(|&(_, v)| v.abs())
                .fold(0.0, f64::max),
        }
    }

    pub fn sup_generator_prime(&self) -> f64 {
        match &self.kind {
            ProfileKind::Flat => 0.0,
            ProfileKind::Sawtooth { slope } => slope.abs(),
            ProfileKind::Sine {
                amplitude_coeff,
                wavenumber,
            } => (amplitude_coeff * wavenumber).abs(),
            ProfileKind::Table { samples } => {
                let mut sup: f64 = 0.0;
                let n = samples.len();
                for i in 0..n {
                    let (t0, v0) = samples[i];
                    let (t1, v1) = if i + 1 < n {
                        samples[i + 1]
                    } else {
                        (samples[0].0 + 1.0, samples[0].1)
                    };
                    if t1 > t0 {
                        sup = sup.max(((v1 - v0) / (t1 - t0)).abs());
                    }
                }
                sup
            }
        }
    }

    pub fn amplitude(&self, eps: f64) -> f64 {
        self.amplitude_law.eval(eps)
    }

    /// Largest |rho_eps| over the chart.
    pub fn sup_height(&self, eps: f64) -> f64 {
        self.amplitude(eps).abs() * self.sup_generator()
    }

    /// Oscillation period measured in the chart coordinate.
    pub fn period_in_chart(&self, eps: f64) -> Option<f64> {
        self.generator_period()
            .map(|p| p * self.period_law.eval(eps))
    }

    /// Lipschitz constant of rho_eps (ess-sup of the slope).
    pub fn lipschitz_constant(&self, eps: f64) -> f64 {
        let per = self.period_law.eval(eps);
        if per == 0.0 {
            return 0.0;
        }
        (self.amplitude(eps) / per).abs() * self.sup_generator_prime()
    }

    /// rho_eps(t) = amplitude(eps) * g(t / period(eps)).
    pub fn height(&self, eps: f64, t: f64) -> Result<f64, GeometryError> {
        if eps <= 0.0 {
            return Err(GeometryError::NonPositiveEpsilon(eps));
        }
        let per = self.period_law.eval(eps);
        Ok(self.amplitude(eps) * self.generator(t / per))
    }

    /// One-sided derivative d rho_eps / dt.
    pub fn height_deriv(&self, eps: f64, t: f64) -> Result<f64, GeometryError> {
        if eps <= 0.0 {
            return Err(GeometryError::NonPositiveEpsilon(eps));
        }
        let per = self.period_law.eval(eps);
        Ok(self.amplitude(eps) / per * self.generator_prime(t / per))
    }

    /// True at the measure-zero corner set of the generator.
    pub fn is_corner(&self, eps: f64, t: f64) -> bool {
        let per = self.period_law.eval(eps);
        let u = t / per;
        match &self.kind {
            ProfileKind::Sawtooth { .. } => {
                let frac = (2.0 * u).rem_euclid(1.0);
                frac < 1e-12 || frac > 1.0 - 1e-12
            }
            ProfileKind::Table { samples } => {
                let frac = u.rem_euclid(1.0);
                samples.iter().any(|&(ti, _)| (ti - frac).abs() < 1e-12)
            }
            _ => false,
        }
    }
}

fn triangle_wave(t: f64) -> f64 {
    let u = t.rem_euclid(1.0);
    if u <= 0.5 {
        u
    } else {
        1.0 - u
    }
}

fn triangle_wave_prime(t: f64) -> f64 {
    let u = t.rem_euclid(1.0);
    if u < 0.5 {
        1.0
    } else {
        -1.0
    }
}

fn table_interp(samples: &[(f64, f64)], t: f64) -> (f64, f64) {
    if samples.is_empty() {
        return (0.0, 0.0);
    }
    let u = t.rem_euclid(1.0);
    let n = samples.len();
    for i in 0..n {
        let (t0, v0) = samples[i];
        let (t1, v1) = if i + 1 < n {
            samples[i + 1]
        } else {
            (samples[0].0 + 1.0, samples[0].1)
        };
        let uu = if i + 1 == n && u < t0 { u + 1.0 } else { u };
        if uu >= t0 - 1e-15 && uu <= t1 + 1e-15 && t1 > t0 {
            let slope = (v1 - v0) / (t1 - t0);
            return (v0 + slope * (uu - t0), slope);
        }
    }
    (samples[0].1, 0.0)
}

/// One edge chart of the polygonal reference boundary. The map is
/// Phi(t, s) = origin + tangent_scale * t * tangent + s * normal, so the
/// default tangent_scale = 1 gives an isometric chart whose flat-part
/// parametrization has unit surface Jacobian.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Chart {
    pub origin: [f64; 2],
    pub tangent: [f64; 2],
    pub normal: [f64; 2],
    /// physical edge length
    pub len: f64,
    pub tangent_scale: f64,
}

impl Chart {
    /// Chart interval [0, len / tangent_scale].
    pub fn interval(&self) -> (f64, f64) {
        (0.0, self.len / self.tangent_scale)
    }

    pub fn map(&self, t: f64, s: f64) -> [f64; 2] {
        let a = self.tangent_scale;
        [
            self.origin[0] + a * t * self.tangent[0] + s * self.normal[0],
            self.origin[1] + a * t * self.tangent[1] + s * self.normal[1],
        ]
    }

    /// Flat-part parametrization phi(t) = Phi(t, 0).
    pub fn base_point(&self, t: f64) -> [f64; 2] {
        self.map(t, 0.0)
    }

    /// Surface Jacobian of the flat parametrization (= tangent_scale).
    pub fn flat_jacobian(&self) -> f64 {
        self.tangent_scale
    }

    /// Physical arc-length coordinate of a chart coordinate.
    pub fn arc_coord(&self, t: f64) -> f64 {
        self.tangent_scale * t
    }

    /// Inverse map to chart coordinates (t, s).
    pub fn to_chart(&self, p: [f64; 2]) -> (f64, f64) {
        let dx = p[0] - self.origin[0];
        let dy = p[1] - self.origin[1];
        let t = (dx * self.tangent[0] + dy * self.tangent[1]) / self.tangent_scale;
        let s = dx * self.normal[0] + dy * self.normal[1];
        (t, s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfaceJacobian {
    pub value: f64,
    /// Set when evaluated exactly at a profile corner; the value is the
    /// one-sided limit there.
    pub at_corner: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DomainFamily {
    pub charts: Vec<Chart>,
    /// Profile per chart; flat profiles mark non-oscillating edges.
    pub profiles: Vec<BoundaryProfile>,
    /// Strictly decreasing epsilons in (0, 1).
    pub epsilons: Vec<f64>,
    /// Interior-core margin: the core region keeps this normal distance
    /// from every oscillating edge.
    pub core_margin: f64,
}

pub const CHART_BOTTOM: usize = 0;
pub const CHART_RIGHT: usize = 1;
pub const CHART_TOP: usize = 2;
pub const CHART_LEFT: usize = 3;

pub fn unit_square_charts() -> Vec<Chart> {
    let mk = |origin: [f64; 2], tangent: [f64; 2], normal: [f64; 2]| Chart {
        origin,
        tangent,
        normal,
        len: 1.0,
        tangent_scale: 1.0,
    };
    vec![
        mk([0.0, 0.0], [1.0, 0.0], [0.0, -1.0]), // bottom
        mk([1.0, 0.0], [0.0, 1.0], [1.0, 0.0]),  // right
        mk([0.0, 1.0], [1.0, 0.0], [0.0, 1.0]),  // top
        mk([0.0, 0.0], [0.0, 1.0], [-1.0, 0.0]), // left
    ]
}

impl DomainFamily {
    /// Unit square with the given profile on the listed charts.
    pub fn unit_square(
        oscillating: &[usize],
        profile: BoundaryProfile,
        epsilons: Vec<f64>,
        core_margin: f64,
    ) -> Result<Self, GeometryError> {
        validate_epsilons(&epsilons)?;
        let charts = unit_square_charts();
        let mut profiles = vec![BoundaryProfile::flat(); charts.len()];
        for &c in oscillating {
            profiles[c] = profile.clone();
        }
        // adjacent oscillating charts would collide at the shared corner
        for &a in oscillating {
            for &b in oscillating {
                if a != b && ((a as i64 - b as i64).rem_euclid(2)) == 1 {
                    return Err(GeometryError::AdjacentOscillatingCharts(a, b));
                }
            }
        }
        Ok(DomainFamily {
            charts,
            profiles,
            epsilons,
            core_margin,
        })
    }

    pub fn oscillating_charts(&self) -> Vec<usize> {
        (0..self.charts.len())
            .filter(|&i| !self.profiles[i].is_flat())
            .collect()
    }

    pub fn is_exterior(&self) -> bool {
        self.profiles.iter().all(|p| p.sign == ProfileSign::Exterior)
    }

    pub fn height(&self, chart: usize, eps: f64, t: f64) -> Result<f64, GeometryError> {
        let ch = &self.charts[chart];
        let (lo, hi) = ch.interval();
        if t < lo - GEOM_TOL || t > hi + GEOM_TOL {
            return Err(GeometryError::OutOfChart { t, len: hi });
        }
        self.profiles[chart].height(eps, ch.arc_coord(t))
    }

    pub fn height_deriv(&self, chart: usize, eps: f64, t: f64) -> Result<f64, GeometryError> {
        let ch = &self.charts[chart];
        // derivative in the chart coordinate picks up the tangent scale
        Ok(ch.tangent_scale * self.profiles[chart].height_deriv(eps, ch.arc_coord(t))?)
    }

    /// Chart-band map (t, s) -> (t, s') pushing the flat band onto the
    /// perturbed one: the two affine branches meet at the graph height.
    pub fn band_map(&self, chart: usize, eps: f64, t: f64, s: f64) -> Result<[f64; 2], GeometryError> {
        let rho = self.height(chart, eps, t)?;
        let s_new = if s < 0.0 {
            s + s * rho + rho
        } else {
            s - s * rho + rho
        };
        Ok([t, s_new])
    }

    /// Parametrization of the perturbed boundary piece: Phi(t, rho_eps(t)).
    pub fn boundary_param(&self, chart: usize, eps: f64, t: f64) -> Result<[f64; 2], GeometryError> {
        let rho = self.height(chart, eps, t)?;
        Ok(self.charts[chart].map(t, rho))
    }

    /// Surface Jacobian of the perturbed parametrization in the chart
    /// coordinate: sqrt(tangent_scale^2 + rho'(t)^2).
    pub fn surface_jacobian(
        &self,
        chart: usize,
        eps: f64,
        t: f64,
    ) -> Result<SurfaceJacobian, GeometryError> {
        let ch = &self.charts[chart];
        let d = self.height_deriv(chart, eps, t)?;
        let at_corner = self.profiles[chart].is_corner(eps, ch.arc_coord(t));
        Ok(SurfaceJacobian {
            value: (ch.tangent_scale * ch.tangent_scale + d * d).sqrt(),
            at_corner,
        })
    }

    /// Arc-length factor relative to the flat measure, sqrt(1 + (drho/darc)^2);
    /// this is surface_jacobian / flat_jacobian mapped to physical arc length.
    pub fn arc_factor(&self, chart: usize, eps: f64, t: f64) -> Result<f64, GeometryError> {
        let j = self.surface_jacobian(chart, eps, t)?;
        Ok(j.value / self.charts[chart].flat_jacobian())
    }

    pub fn in_reference(&self, p: [f64; 2]) -> bool {
        p[0] >= -GEOM_TOL && p[0] <= 1.0 + GEOM_TOL && p[1] >= -GEOM_TOL && p[1] <= 1.0 + GEOM_TOL
    }

    /// Membership in the perturbed domain via the graph inequality on each
    /// oscillating chart and the square bounds elsewhere.
    pub fn in_perturbed(&self, eps: f64, p: [f64; 2]) -> bool {
        for (ci, chart) in self.charts.iter().enumerate() {
            let (t, s) = chart.to_chart(p);
            let (lo, hi) = chart.interval();
            if t < lo - GEOM_TOL || t > hi + GEOM_TOL {
                // outside the chart strip; the square test below handles it
                if s > GEOM_TOL {
                    return false;
                }
                continue;
            }
            let rho = if self.profiles[ci].is_flat() {
                0.0
            } else {
                match self.height(ci, eps, t.clamp(lo, hi)) {
                    Ok(r) => r,
                    Err(_) => 0.0,
                }
            };
            if s > rho + GEOM_TOL {
                return false;
            }
        }
        true
    }

    /// Interior shift map theta_eps: identity for exterior families (the
    /// intersection domain is the reference itself); for signed profiles a
    /// vertical band compression pushing the reference into the
    /// intersection with the perturbed domain. Exact identity on the core.
    pub fn interior_map(&self, eps: f64, p: [f64; 2]) -> Result<[f64; 2], GeometryError> {
        if !self.in_reference(p) {
            return Err(GeometryError::OutsideDomain(p[0], p[1]));
        }
        if self.is_exterior() {
            return Ok(p);
        }
        let margin = self.core_margin;
        let mut q = p;
        for &ci in &self.oscillating_charts() {
            if self.profiles[ci].sign == ProfileSign::Exterior {
                continue;
            }
            let amp = self.profiles[ci].sup_height(eps);
            if amp >= margin {
                return Err(GeometryError::AmplitudeExceedsMargin {
                    amplitude: amp,
                    margin,
                });
            }
            let chart = &self.charts[ci];
            let (t, s) = chart.to_chart(q);
            let (lo, hi) = chart.interval();
            if t < lo || t > hi || s < -margin || s > GEOM_TOL {
                continue;
            }
            let rho_neg = self.height(ci, eps, t)?.min(0.0);
            // linear compression: fixed at s = -margin, sends s = 0 to rho_neg
            let blend = 1.0 + s / margin;
            if blend <= 0.0 {
                continue;
            }
            let s_new = s + blend * rho_neg;
            q = chart.map(t, s_new);
        }
        Ok(q)
    }

    /// Jacobian determinant of the inverse interior map at the image point.
    pub fn interior_map_jacobian_inv(&self, eps: f64, p: [f64; 2]) -> Result<f64, GeometryError> {
        if self.is_exterior() {
            return Ok(1.0);
        }
        let margin = self.core_margin;
        let mut jac = 1.0;
        for &ci in &self.oscillating_charts() {
            if self.profiles[ci].sign == ProfileSign::Exterior {
                continue;
            }
            let chart = &self.charts[ci];
            let (t, s) = chart.to_chart(p);
            let (lo, hi) = chart.interval();
            if t < lo || t > hi || s < -margin || s > GEOM_TOL {
                continue;
            }
            let rho_neg = self.height(ci, eps, t)?.min(0.0);
            jac *= 1.0 + rho_neg / margin;
        }
        Ok(1.0 / jac)
    }

    /// Upper bound for the Hausdorff distance between the perturbed and
    /// reference boundaries: the largest profile height.
    pub fn hausdorff_bound(&self, eps: f64) -> f64 {
        self.profiles
            .iter()
            .map(|p| p.sup_height(eps))
            .fold(0.0, f64::max)
    }

    pub fn check_hypotheses(&self) -> HypothesesReport {
        let n_samples = 10_000;
        let mut rows = Vec::new();
        for &eps in &self.epsilons {
            let mut sup_rho: f64 = 0.0;
            let mut lipschitz: f64 = 0.0;
            for (ci, chart) in self.charts.iter().enumerate() {
                let (lo, hi) = chart.interval();
                let prof = &self.profiles[ci];
                for k in 0..n_samples {
                    let t = lo + (hi - lo) * (k as f64 + 0.5) / n_samples as f64;
                    let arc = chart.arc_coord(t);
                    if let Ok(v) = prof.height(eps, arc) {
                        sup_rho = sup_rho.max(v.abs());
                    }
                    if let Ok(d) = prof.height_deriv(eps, arc) {
                        lipschitz = lipschitz.max(d.abs());
                    }
                }
            }
            rows.push(HypothesesRow {
                epsilon: eps,
                sup_height: sup_rho,
                lipschitz,
            });
        }
        let uniform_height = rows
            .windows(2)
            .all(|w| w[1].sup_height <= w[0].sup_height + GEOM_TOL);
        let vanishing = rows
            .last()
            .map(|r| {
                r.sup_height
                    <= self.epsilons.last().unwrap()
                        * self
                            .profiles
                            .iter()
                            .map(|p| p.sup_generator())
                            .fold(0.0, f64::max)
                        + GEOM_TOL
            })
            .unwrap_or(true);
        let lipschitz_constant = rows.iter().map(|r| r.lipschitz).fold(0.0, f64::max);
        // fit L(eps) ~ C eps^q; a negative exponent means blow-up as eps -> 0
        let nonzero: Vec<&HypothesesRow> = rows.iter().filter(|r| r.lipschitz > 1e-14).collect();
        let exponent = if nonzero.len() >= 2 {
            let pts: Vec<(f64, f64)> = nonzero
                .iter()
                .map(|r| (r.epsilon.ln(), r.lipschitz.ln()))
                .collect();
            Some(least_squares_slope(&pts))
        } else {
            None
        };
        let lipschitz_uniform = exponent.map(|q| q >= -0.05).unwrap_or(true);
        HypothesesReport {
            rows,
            exterior: self.is_exterior(),
            height_pass: uniform_height && vanishing,
            lipschitz_pass: lipschitz_uniform,
            lipschitz_constant,
            lipschitz_exponent: exponent,
            interior_pass: self
                .epsilons
                .iter()
                .all(|&e| self.hausdorff_bound(e) < self.core_margin),
        }
    }
}

pub fn validate_epsilons(eps: &[f64]) -> Result<(), GeometryError> {
    if eps.is_empty() {
        return Err(GeometryError::BadEpsilonList);
    }
    for w in eps.windows(2) {
        if w[1] >= w[0] {
            return Err(GeometryError::BadEpsilonList);
        }
    }
    if eps.iter().any(|&e| e <= 0.0 || e >= 1.0) {
        return Err(GeometryError::BadEpsilonList);
    }
    Ok(())
}

pub fn least_squares_slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}

#[derive(Debug, Clone)]
pub struct HypothesesRow {
    pub epsilon: f64,
    pub sup_height: f64,
    pub lipschitz: f64,
}

#[derive(Debug, Clone)]
pub struct HypothesesReport {
    pub rows: Vec<HypothesesRow>,
    pub exterior: bool,
    /// Heights vanish uniformly along the list.
    pub height_pass: bool,
    /// Slopes bounded by a single constant across the list.
    pub lipschitz_pass: bool,
    pub lipschitz_constant: f64,
    pub lipschitz_exponent: Option<f64>,
    /// Interior core margin dominates every profile height.
    pub interior_pass: bool,
}

impl HypothesesReport {
    pub fn all_pass(&self) -> bool {
        self.height_pass && self.lipschitz_pass && self.interior_pass
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        s.push_str("epsilon      sup|rho|     lipschitz\n");
        for r in &self.rows {
            s.push_str(&format!(
                "{:<12.6} {:<12.6e} {:<12.6e}\n",
                r.epsilon, r.sup_height, r.lipschitz
            ));
        }
        s.push_str(&format!(
            "classification: {}\n",
            if self.exterior { "exterior" } else { "signed" }
        ));
        s.push_str(&format!(
            "uniform vanishing height: {}\n",
            if self.height_pass { "pass" } else { "FAIL" }
        ));
        match self.lipschitz_exponent {
            Some(q) => s.push_str(&format!(
                "uniform Lipschitz bound: {} (C = {:.6}, fitted exponent {:.3})\n",
                if self.lipschitz_pass { "pass" } else { "FAIL" },
                self.lipschitz_constant,
                q
            )),
            None => s.push_str(&format!(
                "uniform Lipschitz bound: {} (C = {:.6})\n",
                if self.lipschitz_pass { "pass" } else { "FAIL" },
                self.lipschitz_constant
            )),
        }
        s.push_str(&format!(
            "interior margin: {}\n",
            if self.interior_pass { "pass" } else { "FAIL" }
        ));
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn family(profile: BoundaryProfile) -> DomainFamily {
        DomainFamily::unit_square(&[CHART_TOP], profile, vec![0.2, 0.1, 0.05], 0.5).unwrap()
    }

    #[test]
    fn flat_profile_is_zero() {
        let fam = family(BoundaryProfile::flat());
        assert_eq!(fam.height(CHART_TOP, 0.1, 0.3).unwrap(), 0.0);
        assert_eq!(fam.height(CHART_TOP, 0.05, 0.99).unwrap(), 0.0);
    }

    #[test]
    fn sawtooth_rising_segment() {
        // slope 1, amplitude and period eps: rho(0.025) = 0.025 at eps = 0.1,
        // checked against a 10-point hand table of the triangle wave
        let fam = family(BoundaryProfile::sawtooth(1.0));
        assert_relative_eq!(
            fam.height(CHART_TOP, 0.1, 0.025).unwrap(),
            0.025,
            epsilon = 1e-15
        );
        let table = [
            (0.00, 0.000),
            (0.01, 0.010),
            (0.02, 0.020),
            (0.03, 0.030),
            (0.04, 0.040),
            (0.05, 0.050),
            (0.06, 0.040),
            (0.07, 0.030),
            (0.08, 0.020),
            (0.09, 0.010),
        ];
        for (t, v) in table {
            assert_relative_eq!(fam.height(CHART_TOP, 0.1, t).unwrap(), v, epsilon = 1e-14);
        }
    }

    #[test]
    fn sine_value_and_derivative_at_origin() {
        let fam = family(BoundaryProfile::sine(1.0));
        assert_eq!(fam.height(CHART_TOP, 0.1, 0.0).unwrap(), 0.0);
        assert_relative_eq!(
            fam.height_deriv(CHART_TOP, 0.1, 0.0).unwrap(),
            1.0,
            epsilon = 1e-14
        );
        // rho(x) = eps sin(x / eps)
        let eps = 0.1;
        let t = 0.21;
        assert_relative_eq!(
            fam.height(CHART_TOP, eps, t).unwrap(),
            eps * (t / eps).sin(),
            epsilon = 1e-14
        );
    }

    #[test]
    fn nonpositive_epsilon_rejected() {
        let fam = family(BoundaryProfile::sawtooth(1.0));
        assert!(fam.height(CHART_TOP, 0.0, 0.1).is_err());
        assert!(fam.height(CHART_TOP, -1.0, 0.1).is_err());
        assert!(fam.height(CHART_TOP, 0.1, 1.5).is_err());
    }

    #[test]
    fn band_map_branches() {
        let fam = family(BoundaryProfile::sawtooth(1.0));
        // flat profile: identity on both branches
        let flat = family(BoundaryProfile::flat());
        for &(t, s) in &[(0.3, -0.7), (0.3, 0.2), (0.9, 0.0)] {
            let q = flat.band_map(CHART_TOP, 0.1, t, s).unwrap();
            assert_eq!(q, [t, s]);
        }
        // s = 0 lands on the graph
        let q = fam.band_map(CHART_TOP, 0.1, 0.025, 0.0).unwrap();
        assert_relative_eq!(q[1], 0.025, epsilon = 1e-15);
        // s = -1 is fixed
        let q = fam.band_map(CHART_TOP, 0.1, 0.33, -1.0).unwrap();
        assert_relative_eq!(q[1], -1.0, epsilon = 1e-15);
    }

    #[test]
    fn boundary_param_on_top_chart() {
        let fam = family(BoundaryProfile::sawtooth(1.0));
        let p = fam.boundary_param(CHART_TOP, 0.1, 0.025).unwrap();
        assert_relative_eq!(p[0], 0.025, epsilon = 1e-15);
        assert_relative_eq!(p[1], 1.025, epsilon = 1e-15);
        // flat profile reduces to the base parametrization
        let flat = family(BoundaryProfile::flat());
        let p = flat.boundary_param(CHART_TOP, 0.1, 0.4).unwrap();
        assert_eq!(p, [0.4, 1.0]);
        // sine at a period endpoint returns to the base line
        let sine = family(BoundaryProfile::sine(1.0));
        let eps = 0.1;
        let t = 2.0 * std::f64::consts::PI * eps;
        let p = sine.boundary_param(CHART_TOP, eps, t).unwrap();
        assert_relative_eq!(p[1], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn surface_jacobian_values() {
        let flat = family(BoundaryProfile::flat());
        assert_eq!(flat.surface_jacobian(CHART_TOP, 0.1, 0.3).unwrap().value, 1.0);
        let saw = family(BoundaryProfile::sawtooth(1.0));
        let j = saw.surface_jacobian(CHART_TOP, 0.1, 0.0125).unwrap();
        assert_relative_eq!(j.value, 2.0f64.sqrt(), epsilon = 1e-14);
        assert!(!j.at_corner);
        // corner of the triangle wave flags the point
        let j = saw.surface_jacobian(CHART_TOP, 0.1, 0.05).unwrap();
        assert!(j.at_corner);
        let sine = family(BoundaryProfile::sine(1.0));
        assert_relative_eq!(
            sine.surface_jacobian(CHART_TOP, 0.3, 0.0).unwrap().value,
            2.0f64.sqrt(),
            epsilon = 1e-14
        );
    }

    #[test]
    fn interior_map_identity_cases() {
        // exterior profiles: identity everywhere
        let saw = family(BoundaryProfile::sawtooth(1.0));
        for &p in &[[0.5, 0.5], [0.1, 0.99], [0.0, 1.0]] {
            assert_eq!(saw.interior_map(0.1, p).unwrap(), p);
        }
        // signed profiles: bit-exact identity on the core
        let sine = family(BoundaryProfile::sine(1.0));
        let core_pt = [0.37, 0.5 - 1e-9];
        assert_eq!(sine.interior_map(0.1, core_pt).unwrap(), core_pt);
        // boundary points press into the intersection domain
        let eps = 0.1;
        let t = 0.47; // sin(4.7) < 0 -> inward dip
        let rho = sine.height(CHART_TOP, eps, t).unwrap();
        assert!(rho < 0.0);
        let q = sine.interior_map(eps, [t, 1.0]).unwrap();
        assert_relative_eq!(q[1], 1.0 + rho, epsilon = 1e-14);
        assert!(sine.in_perturbed(eps, q) && sine.in_reference(q));
        // outside the reference domain is an error
        assert!(sine.interior_map(eps, [0.5, 1.5]).is_err());
    }

    #[test]
    fn hypotheses_report_classifies_families() {
        let flat = family(BoundaryProfile::flat());
        let rep = flat.check_hypotheses();
        assert!(rep.all_pass());
        assert_eq!(rep.lipschitz_constant, 0.0);

        let saw = family(BoundaryProfile::sawtooth(1.0));
        let rep = saw.check_hypotheses();
        assert!(rep.all_pass());
        assert!((rep.lipschitz_constant - 1.0).abs() < 1e-12);

        // amplitude eps^{1/2}, period eps: slope grows like eps^{-1/2}
        let mut bad = BoundaryProfile::sawtooth(1.0);
        bad.amplitude_law = PowerLaw {
            coeff: 1.0,
            exponent: 0.5,
        };
        let fam = family(bad);
        let rep = fam.check_hypotheses();
        assert!(!rep.lipschitz_pass);
        assert!(rep.lipschitz_exponent.unwrap() < -0.4);
    }

    #[test]
    fn sup_height_nonincreasing_along_list() {
        let fam = family(BoundaryProfile::sine(1.0));
        let sups: Vec<f64> = fam
            .epsilons
            .iter()
            .map(|&e| {
                (0..10_000)
                    .map(|k| {
                        fam.height(CHART_TOP, e, (k as f64 + 0.5) / 10_000.0)
                            .unwrap()
                            .abs()
                    })
                    .fold(0.0, f64::max)
            })
            .collect();
        for w in sups.windows(2) {
            assert!(w[1] <= w[0] + 1e-12);
        }
    }

    #[test]
    fn epsilon_list_validation() {
        assert!(validate_epsilons(&[0.2, 0.1]).is_ok());
        assert!(validate_epsilons(&[0.1, 0.2]).is_err());
        assert!(validate_epsilons(&[]).is_err());
        assert!(validate_epsilons(&[1.0, 0.5]).is_err());
    }
}
