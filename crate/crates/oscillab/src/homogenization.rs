//! The effective boundary factor gamma: the weak limit of the boundary
//! parametrization Jacobians, normalized by the flat-chart Jacobian. For a
//! periodic profile with amplitude and period both equal to eps the factor
//! is the period average of sqrt(1 + g'(t)^2); in general it is estimated
//! empirically by windowed averages of the surface Jacobian at finite eps.

use crate::geometry::{BoundaryProfile, Chart, DomainFamily, ProfileKind};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GammaError {
    #[error("closed form requires a periodic profile with amplitude and period laws equal to eps; use the empirical estimator")]
    ClosedFormUnsupported,
    #[error("quadrature resolution {nodes_per_period} nodes/period is below the floor of 4")]
    ResolutionTooLow { nodes_per_period: usize },
    #[error("flat-chart Jacobian {0:.3e} is numerically singular")]
    SingularChart(f64),
    #[error("windows must be >= 1")]
    NoWindows,
    #[error(transparent)]
    Geometry(#[from] crate::geometry::GeometryError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Provenance {
    ClosedForm,
    Empirical,
    UserSupplied,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GammaCell {
    pub left: f64,
    pub right: f64,
    pub value: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChartGamma {
    pub cells: Vec<GammaCell>,
    pub provenance: Provenance,
    /// For empirical fields, the (windows, epsilon) used.
    pub windows: Option<usize>,
    pub epsilon_used: Option<f64>,
}

impl ChartGamma {
    pub fn constant(value: f64, interval: (f64, f64), provenance: Provenance) -> Self {
        ChartGamma {
            cells: vec![GammaCell {
                left: interval.0,
                right: interval.1,
                value,
            }],
            provenance,
            windows: None,
            epsilon_used: None,
        }
    }

    /// Nearest-window lookup; quadrature points slightly outside the
    /// partition clamp to the boundary cells.
    pub fn eval(&self, t: f64) -> f64 {
        let cells = &self.cells;
        if t <= cells[0].left {
            return cells[0].value;
        }
        for c in cells {
            if t <= c.right {
                return c.value;
            }
        }
        cells[cells.len() - 1].value
    }

    pub fn min_value(&self) -> f64 {
        self.cells.iter().map(|c| c.value).fold(f64::INFINITY, f64::min)
    }

    pub fn max_value(&self) -> f64 {
        self.cells.iter().map(|c| c.value).fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Piecewise-constant boundary weight over all charts of a family.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GammaField {
    pub charts: Vec<ChartGamma>,
}

impl GammaField {
    /// gamma = 1 on every chart (the weight of the unhomogenized problem).
    pub fn constant_one(family: &DomainFamily) -> Self {
        GammaField {
            charts: family
                .charts
                .iter()
                .map(|c| ChartGamma::constant(1.0, c.interval(), Provenance::UserSupplied))
                .collect(),
        }
    }

    pub fn eval(&self, chart: usize, t: f64) -> f64 {
        self.charts[chart].eval(t)
    }

    pub fn min_value(&self) -> f64 {
        self.charts
            .iter()
            .map(|c| c.min_value())
            .fold(f64::INFINITY, f64::min)
    }

    /// CSV rows: chart, cell_left, cell_right, gamma_value, provenance.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("chart,cell_left,cell_right,gamma_value,provenance\n");
        for (ci, cg) in self.charts.iter().enumerate() {
            let prov = match cg.provenance {
                Provenance::ClosedForm => "closed_form".to_string(),
                Provenance::Empirical => format!(
                    "empirical(windows={},eps={})",
                    cg.windows.unwrap_or(0),
                    cg.epsilon_used.unwrap_or(f64::NAN)
                ),
                Provenance::UserSupplied => "user_supplied".to_string(),
            };
            for c in &cg.cells {
                s.push_str(&format!(
                    "{},{:.12e},{:.12e},{:.12e},{}\n",
                    ci, c.left, c.right, c.value, prov
                ));
            }
        }
        s
    }
}

/// Period average of sqrt(1 + (r g'(t))^2) where r is the fixed
/// amplitude/period ratio; valid when both laws scale linearly in eps so
/// the slope field is an eps-periodic rescaling of a single generator.
/// Adaptive quadrature to relative tolerance 1e-10, split at generator
/// corners.
pub fn gamma_closed_form(profile: &BoundaryProfile) -> Result<f64, GammaError> {
    if profile.is_flat() {
        return Ok(1.0);
    }
    if !(profile.amplitude_law.is_identity() && profile.period_law.is_identity()) {
        return Err(GammaError::ClosedFormUnsupported);
    }
    let period = match profile.generator_period() {
        Some(p) => p,
        None => return Ok(1.0),
    };
    if matches!(profile.kind, ProfileKind::Table { .. }) {
        // no closed-form recipe for tabulated generators
        return Err(GammaError::ClosedFormUnsupported);
    }
    let ratio = profile.amplitude_law.coeff / profile.period_law.coeff;
    let integrand = |t: f64| {
        let d = ratio * profile.generator_prime(t);
        (1.0 + d * d).sqrt()
    };
    // split at slope discontinuities of the triangle wave
    let breaks: Vec<f64> = match profile.kind {
        ProfileKind::Sawtooth { .. } => vec![0.0, 0.5 * period, period],
        _ => vec![0.0, period],
    };
    let mut total = 0.0;
    for w in breaks.windows(2) {
        total += adaptive_simpson(&integrand, w[0], w[1], 1e-11 * period, 40);
    }
    Ok(total / period)
}

/// Closed-form gamma as a field on the family's charts (1 on flat charts).
pub fn gamma_field_closed_form(family: &DomainFamily) -> Result<GammaField, GammaError> {
    let mut charts = Vec::new();
    for (ci, chart) in family.charts.iter().enumerate() {
        let profile = &family.profiles[ci];
        let value = gamma_closed_form(profile)?;
        charts.push(ChartGamma::constant(
            value,
            chart.interval(),
            if profile.is_flat() {
                Provenance::UserSupplied
            } else {
                Provenance::ClosedForm
            },
        ));
    }
    Ok(GammaField { charts })
}

/// Windowed averages of the chart-level surface Jacobian at a fixed eps:
/// the empirical stand-in for its weak limit. Composite 2-point Gauss with
/// at least `nodes_per_period` nodes per oscillation period (floor 4).
/// Returns the chart-level field (not yet normalized by the flat Jacobian).
pub fn gamma_empirical_chart(
    family: &DomainFamily,
    chart_idx: usize,
    eps: f64,
    windows: usize,
    nodes_per_period: usize,
) -> Result<ChartGamma, GammaError> {
    if windows == 0 {
        return Err(GammaError::NoWindows);
    }
    if nodes_per_period < 4 {
        return Err(GammaError::ResolutionTooLow { nodes_per_period });
    }
    let chart = &family.charts[chart_idx];
    let profile = &family.profiles[chart_idx];
    let (lo, hi) = chart.interval();
    let cell_len = (hi - lo) / windows as f64;
    // panels of half a target spacing give 2 Gauss nodes per spacing
    let period = profile
        .period_in_chart(eps)
        .map(|p| p / chart.tangent_scale);
    let panel_target = match period {
        Some(p) => p / (nodes_per_period as f64 / 2.0),
        None => cell_len / 32.0,
    };
    let mut cells = Vec::with_capacity(windows);
    for w in 0..windows {
        let a = lo + w as f64 * cell_len;
        let b = a + cell_len;
        let n_panels = ((b - a) / panel_target).ceil() as usize;
        if n_panels > 50_000_000 {
            return Err(GammaError::ResolutionTooLow { nodes_per_period });
        }
        let dx = (b - a) / n_panels as f64;
        let gauss = 0.5 / 3.0f64.sqrt();
        let mut acc = 0.0;
        for k in 0..n_panels {
            let mid = a + (k as f64 + 0.5) * dx;
            for &q in &[mid - gauss * dx, mid + gauss * dx] {
                acc += 0.5 * dx * family.surface_jacobian(chart_idx, eps, q)?.value;
            }
        }
        cells.push(GammaCell {
            left: a,
            right: b,
            value: acc / cell_len,
        });
    }
    Ok(ChartGamma {
        cells,
        provenance: Provenance::Empirical,
        windows: Some(windows),
        epsilon_used: Some(eps),
    })
}

/// Pointwise quotient of a chart-level field by the flat-chart Jacobian,
/// giving the boundary factor on the reference boundary.
pub fn gamma_quotient(chart_field: &ChartGamma, chart: &Chart) -> Result<ChartGamma, GammaError> {
    let j = chart.flat_jacobian();
    if j.abs() < 1e-12 {
        return Err(GammaError::SingularChart(j));
    }
    let mut out = chart_field.clone();
    for c in &mut out.cells {
        c.value /= j;
    }
    Ok(out)
}

/// Empirical gamma on the reference boundary (chart averages normalized by
/// the flat Jacobian; 1 on flat charts).
pub fn gamma_field_empirical(
    family: &DomainFamily,
    eps: f64,
    windows: usize,
    nodes_per_period: usize,
) -> Result<GammaField, GammaError> {
    let mut charts = Vec::new();
    for (ci, chart) in family.charts.iter().enumerate() {
        if family.profiles[ci].is_flat() {
            charts.push(ChartGamma::constant(
                1.0,
                chart.interval(),
                Provenance::UserSupplied,
            ));
        } else {
            let raw = gamma_empirical_chart(family, ci, eps, windows, nodes_per_period)?;
            charts.push(gamma_quotient(&raw, chart)?);
        }
    }
    Ok(GammaField { charts })
}

/// Cauchy test across the eps list for profiles without a closed form:
/// max over cells of |avg(eps_i) - avg(eps_{i+1})| for the two finest.
pub fn empirical_cauchy_gap(
    family: &DomainFamily,
    chart_idx: usize,
    windows: usize,
    nodes_per_period: usize,
) -> Result<f64, GammaError> {
    let eps = &family.epsilons;
    if eps.len() < 2 {
        return Ok(f64::NAN);
    }
    let a = gamma_empirical_chart(family, chart_idx, eps[eps.len() - 2], windows, nodes_per_period)?;
    let b = gamma_empirical_chart(family, chart_idx, eps[eps.len() - 1], windows, nodes_per_period)?;
    Ok(a.cells
        .iter()
        .zip(&b.cells)
        .map(|(x, y)| (x.value - y.value).abs())
        .fold(0.0, f64::max))
}

pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, depth: usize) -> f64 {
    let c = 0.5 * (a + b);
    let fa = f(a);
    let fb = f(b);
    let fc = f(c);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fc + fb);
    simpson_rec(f, a, b, fa, fb, fc, whole, tol, depth)
}

#[allow(clippy::too_many_arguments)]
fn simpson_rec<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fb: f64,
    fc: f64,
    whole: f64,
    tol: f64,
    depth: usize,
) -> f64 {
    let c = 0.5 * (a + b);
    let d = 0.5 * (a + c);
    let e = 0.5 * (c + b);
    let fd = f(d);
    let fe = f(e);
    let left = (c - a) / 6.0 * (fa + 4.0 * fd + fc);
    let right = (b - c) / 6.0 * (fc + 4.0 * fe + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        left + right + delta / 15.0
    } else {
        simpson_rec(f, a, c, fa, fc, fd, left, 0.5 * tol, depth - 1)
            + simpson_rec(f, c, b, fc, fb, fe, right, 0.5 * tol, depth - 1)
    }
}
