//! Interpolation sample sets, surrogate models, poisedness measurement and
//! repair, and the self-correcting geometry update.

mod basis;
mod geometry;
mod model;
mod update;

pub use basis::{dim_diagonal, dim_linear, dim_quadratic};
pub use geometry::{
    initial_points, lambda_from_basis, lambda_poisedness, repair_points, InitDegree, InitMode,
    Region,
};
pub use model::{frame_for, Interpolator, LagrangeBasis, ModelFrame, SurrogateModel};
pub use update::{update_interpolation_set, UpdateOutcome};

use nalgebra::DVector;
use serde_json::json;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum InterpError {
    #[error("interpolation system is rank deficient beyond tolerance")]
    IllConditioned,
    #[error("fewer than n + 1 sample points")]
    TooFewPoints,
    #[error("x box has empty interior in coordinate {0}")]
    DegenerateBox(usize),
}

/// How the (generally underdetermined) interpolation system is resolved into
/// one polynomial.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelVariant {
    Subbasis = 1,
    MinL2 = 2,
    MinFrobenius = 3,
    Regression = 4,
}

impl ModelVariant {
    pub fn from_index(i: u32) -> Option<Self> {
        match i {
            1 => Some(ModelVariant::Subbasis),
            2 => Some(ModelVariant::MinL2),
            3 => Some(ModelVariant::MinFrobenius),
            4 => Some(ModelVariant::Regression),
            _ => None,
        }
    }

    /// Maximum sample-set cardinality: full quadratic for the interpolation
    /// variants, twice that count for regression.
    pub fn p_max(&self, n: usize) -> usize {
        match self {
            ModelVariant::Regression => (n + 1) * (n + 2),
            _ => (n + 1) * (n + 2) / 2,
        }
    }
}

/// Interpolation points with their cached evaluation rows. Row layout is up
/// to the caller (the local search stores `[f, z_1, ..., z_m]`). The current
/// iterate is always a member.
#[derive(Debug, Clone)]
pub struct SampleSet {
    pub points: Vec<DVector<f64>>,
    pub values: Vec<DVector<f64>>,
    pub cur: usize,
    pub p_max: usize,
}

impl SampleSet {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn current(&self) -> &DVector<f64> {
        &self.points[self.cur]
    }

    /// Largest distance from the current iterate to any sample point.
    pub fn spread(&self) -> f64 {
        let c = self.current();
        self.points
            .iter()
            .map(|p| (p - c).norm())
            .fold(0.0, f64::max)
    }

    pub fn push(&mut self, point: DVector<f64>, values: DVector<f64>) {
        self.points.push(point);
        self.values.push(values);
    }

    pub fn replace(&mut self, j: usize, point: DVector<f64>, values: DVector<f64>) {
        debug_assert_ne!(j, self.cur);
        self.points[j] = point;
        self.values[j] = values;
    }

    pub fn position_of(&self, x: &DVector<f64>) -> Option<usize> {
        self.points.iter().position(|p| p == x)
    }

    /// One value row across all points, for fitting a single function.
    pub fn value_row(&self, row: usize) -> Vec<f64> {
        self.values.iter().map(|v| v[row]).collect()
    }

    /// Diagnostic dump: point list, per-function coefficient vectors, and a
    /// poisedness estimate.
    pub fn diagnostics(
        &self,
        models: &[SurrogateModel],
        lambda_estimate: f64,
    ) -> serde_json::Value {
        json!({
            "points": self.points.iter().map(|p| p.as_slice().to_vec()).collect::<Vec<_>>(),
            "current_index": self.cur,
            "coefficients": models
                .iter()
                .map(|m| m.coefficients().as_slice().to_vec())
                .collect::<Vec<_>>(),
            "lambda": lambda_estimate,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagnostics_serialize() {
        let points = vec![
            DVector::from_vec(vec![0.0, 0.0]),
            DVector::from_vec(vec![1.0, 0.0]),
            DVector::from_vec(vec![0.0, 1.0]),
        ];
        let values: Vec<DVector<f64>> = points
            .iter()
            .map(|p| DVector::from_vec(vec![p[0] * 2.0]))
            .collect();
        let set = SampleSet {
            points,
            values,
            cur: 0,
            p_max: 6,
        };
        let interp = Interpolator::new(&set.points, 0, ModelVariant::MinL2).unwrap();
        let model = interp.fit(&set.value_row(0)).unwrap();
        let v = set.diagnostics(&[model], 1.5);
        assert_eq!(v["points"].as_array().unwrap().len(), 3);
        assert_eq!(v["lambda"], 1.5);
        assert!(v["coefficients"][0].as_array().unwrap().len() >= 3);
    }

    #[test]
    fn p_max_by_variant() {
        assert_eq!(ModelVariant::MinL2.p_max(3), 10);
        assert_eq!(ModelVariant::Regression.p_max(3), 20);
    }
}
