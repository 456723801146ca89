//! Instance files and number formatting shared by reports and the CLI.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::polytope::PolytopeSpec;

/// A polytope plus an optional cost, read from JSON.
///
/// The polytope keys are those of [`PolytopeSpec`]; the cost sits under `"c"`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceFile {
    #[serde(flatten)]
    pub polytope: PolytopeSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<Vec<f64>>,
}

/// OT input: either an explicit cost matrix or two point lists with a cost kind.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OtFile {
    Cost {
        cost: Vec<Vec<f64>>,
    },
    Points {
        x: Vec<Point>,
        y: Vec<Point>,
        kind: String,
    },
}

/// A point given either as a scalar (1-D) or as a coordinate list.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Point {
    Scalar(f64),
    Vector(Vec<f64>),
}

impl Point {
    pub fn coords(&self) -> Vec<f64> {
        match self {
            Point::Scalar(v) => vec![*v],
            Point::Vector(v) => v.clone(),
        }
    }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path)
        .map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))
}

pub fn parse_instance(text: &str) -> Result<InstanceFile> {
    serde_json::from_str(text).map_err(|e| Error::InvalidInput(format!("instance JSON: {e}")))
}

pub fn load_instance(path: &Path) -> Result<InstanceFile> {
    parse_instance(&read(path)?)
}

pub fn parse_ot(text: &str) -> Result<OtFile> {
    serde_json::from_str(text).map_err(|e| Error::InvalidInput(format!("OT JSON: {e}")))
}

pub fn load_ot(path: &Path) -> Result<OtFile> {
    parse_ot(&read(path)?)
}

/// `v` rounded to `digits` significant digits, printed in its shortest form.
pub fn fmt_sig(v: f64, digits: usize) -> String {
    if !v.is_finite() {
        return v.to_string();
    }
    if v == 0.0 {
        return "0".into();
    }
    let rounded: f64 = format!("{:.*e}", digits.saturating_sub(1), v)
        .parse()
        .expect("formatted float parses");
    let mag = rounded.abs();
    if (1e-4..1e15).contains(&mag) {
        rounded.to_string()
    } else {
        format!("{rounded:e}")
    }
}
