//! Pressure, dimension, porosity and the exponent numerology.

pub mod dimension;
pub mod intervals;
pub mod numerology;
pub mod porosity;
pub mod pressure;

use serde::{Deserialize, Serialize};

pub use dimension::{box_dimension, unstable_trace, BoxInput, TraceConfig};
pub use intervals::IntervalSet;
pub use numerology::{numerology, NumerologyProfile};
pub use porosity::{
    check_porosity, dimension_from_porosity, fattened_porosity, porosity_from_dimension, PorosityCertificate,
    PorosityOutcome, PorosityRefutation, PorosityScan,
};
pub use pressure::{
    monte_carlo_escape, topological_entropy, EscapeReport, Estimator, PressureCurve, PressureEntry, PressureSolver,
    WordSums,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DimensionMethod {
    BoxCount,
    PressureRoot,
    PorosityBound,
}

/// Upper-box-dimension estimate with a covering constant valid on the sampled range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionReport {
    pub delta: f64,
    /// N(ε) <= C ε^{-delta} on every sampled ε.
    pub constant_c: f64,
    pub epsilon0: f64,
    pub method: DimensionMethod,
    pub scales: Vec<f64>,
    pub counts: Vec<usize>,
    pub trapped_dimension: Option<f64>,
}

/// Least-squares line through (x, y) pairs: (slope, intercept).
pub fn least_squares(pts: &[(f64, f64)]) -> (f64, f64) {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    (slope, my - slope * mx)
}
