//! The five continuous test functions used throughout the experiments.
//!
//! All functions have their global minimum value at 0, so the "acceptable
//! error" of an [`ObjectiveSpec`] is an absolute threshold on the conflict
//! (objective) value. Points outside the search box are evaluated as-is.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Identifier of a benchmark function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FunctionId {
    Sphere,
    Rosenbrock,
    Rastrigin,
    Griewank,
    #[serde(rename = "schaffer_f6")]
    SchafferF6,
}

impl FunctionId {
    pub const ALL: [FunctionId; 5] = [
        FunctionId::Sphere,
        FunctionId::Rosenbrock,
        FunctionId::Rastrigin,
        FunctionId::Griewank,
        FunctionId::SchafferF6,
    ];

    /// Lowercase identifier used in config files and on the command line.
    pub fn name(self) -> &'static str {
        match self {
            FunctionId::Sphere => "sphere",
            FunctionId::Rosenbrock => "rosenbrock",
            FunctionId::Rastrigin => "rastrigin",
            FunctionId::Griewank => "griewank",
            FunctionId::SchafferF6 => "schaffer_f6",
        }
    }

    fn min_dimension(self) -> usize {
        match self {
            FunctionId::Rosenbrock => 2,
            _ => 1,
        }
    }
}

impl fmt::Display for FunctionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FunctionId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FunctionId::ALL
            .into_iter()
            .find(|id| id.name() == s)
            .ok_or_else(|| {
                let valid: Vec<_> = FunctionId::ALL.iter().map(|id| id.name()).collect();
                Error::invalid(format!(
                    "unknown function `{s}`; valid choices: {}",
                    valid.join(", ")
                ))
            })
    }
}

/// A benchmark function together with its search box and success threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveSpec {
    pub function_id: FunctionId,
    pub dimension: usize,
    pub lower_bound: f64,
    pub upper_bound: f64,
    pub acceptable_error: f64,
    pub known_optimum_value: f64,
}

impl ObjectiveSpec {
    pub fn new(
        function_id: FunctionId,
        dimension: usize,
        lower_bound: f64,
        upper_bound: f64,
        acceptable_error: f64,
    ) -> Result<Self> {
        let spec = ObjectiveSpec {
            function_id,
            dimension,
            lower_bound,
            upper_bound,
            acceptable_error,
            known_optimum_value: 0.0,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// The 30-dimensional setup used in the experiments for `function_id`.
    pub fn default_for(function_id: FunctionId) -> Self {
        let (bound, acceptable_error) = match function_id {
            FunctionId::Sphere => (100.0, 0.01),
            FunctionId::Rosenbrock => (30.0, 100.0),
            FunctionId::Rastrigin => (5.12, 100.0),
            FunctionId::Griewank => (600.0, 0.1),
            FunctionId::SchafferF6 => (100.0, 0.1),
        };
        ObjectiveSpec {
            function_id,
            dimension: 30,
            lower_bound: -bound,
            upper_bound: bound,
            acceptable_error,
            known_optimum_value: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dimension < self.function_id.min_dimension() {
            return Err(Error::invalid(format!(
                "{} requires dimension >= {}, got {}",
                self.function_id,
                self.function_id.min_dimension(),
                self.dimension
            )));
        }
        if !(self.lower_bound < self.upper_bound) {
            return Err(Error::invalid(format!(
                "lower bound {} must be below upper bound {}",
                self.lower_bound, self.upper_bound
            )));
        }
        if !(self.acceptable_error > 0.0) {
            return Err(Error::invalid(format!(
                "acceptable error must be positive, got {}",
                self.acceptable_error
            )));
        }
        Ok(())
    }

    /// Width of the search box along one dimension.
    pub fn range(&self) -> f64 {
        self.upper_bound - self.lower_bound
    }

    /// Point at which the function attains its minimum.
    pub fn optimizer_location(&self) -> Vec<f64> {
        let coord = match self.function_id {
            FunctionId::Rosenbrock => 1.0,
            _ => 0.0,
        };
        vec![coord; self.dimension]
    }

    /// Conflict value of `point`.
    pub fn evaluate(&self, point: &[f64]) -> Result<f64> {
        if point.len() != self.dimension {
            return Err(Error::invalid(format!(
                "point has {} coordinates, {} expects {}",
                point.len(),
                self.function_id,
                self.dimension
            )));
        }
        if point.len() < self.function_id.min_dimension() {
            return Err(Error::invalid(format!(
                "{} is undefined in {} dimension(s)",
                self.function_id,
                point.len()
            )));
        }
        Ok(match self.function_id {
            FunctionId::Sphere => sphere(point),
            FunctionId::Rosenbrock => rosenbrock(point),
            FunctionId::Rastrigin => rastrigin(point),
            FunctionId::Griewank => griewank(point),
            FunctionId::SchafferF6 => schaffer_f6(point),
        })
    }
}

/// Free-function form of [`ObjectiveSpec::default_for`].
pub fn default_spec(function_id: FunctionId) -> ObjectiveSpec {
    ObjectiveSpec::default_for(function_id)
}

fn sphere(x: &[f64]) -> f64 {
    x.iter().map(|xi| xi * xi).sum()
}

fn rosenbrock(x: &[f64]) -> f64 {
    x.windows(2)
        .map(|pair| {
            let (a, b) = (pair[0], pair[1]);
            100.0 * (b - a * a).powi(2) + (a - 1.0).powi(2)
        })
        .sum()
}

fn rastrigin(x: &[f64]) -> f64 {
    x.iter()
        .map(|xi| xi * xi - 10.0 * (2.0 * PI * xi).cos() + 10.0)
        .sum()
}

fn griewank(x: &[f64]) -> f64 {
    let sum: f64 = x.iter().map(|xi| xi * xi).sum();
    let prod: f64 = x
        .iter()
        .enumerate()
        .map(|(i, xi)| (xi / ((i + 1) as f64).sqrt()).cos())
        .product();
    sum / 4000.0 - prod + 1.0
}

// n-D radial generalization: depends on the point only through sum x_i^2.
fn schaffer_f6(x: &[f64]) -> f64 {
    let r2 = sphere(x);
    let s = r2.sqrt().sin();
    let d = 1.0 + 0.001 * r2;
    (s * s - 0.5) / (d * d) + 0.5
}
