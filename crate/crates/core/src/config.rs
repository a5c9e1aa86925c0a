//! TOML problem files: geometry, fields, solver and diagnostic settings.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::characteristics::{TraceOptions, DEFAULT_TOL, DEFAULT_T_MAX};
use crate::expr::{self, FieldErrorOrParse, ScalarField, VectorField2};
use crate::geometry::{Domain, Edge, GeometryError};
use crate::regularity::SingularLocus;
use crate::{Point2, SCHEMA_VERSION};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {msg}")]
    Io { path: String, msg: String },
    #[error("malformed config: {0}")]
    Syntax(String),
    #[error("field `{field}`: {msg}")]
    Field { field: String, msg: String },
    #[error("field `{field}`: parse error at offset {offset}: {msg}")]
    Expr { field: String, offset: usize, msg: String },
    #[error("geometry: {0}")]
    Geometry(#[from] GeometryError),
}

/// A number or a constant expression such as `"-pi/2"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NumOrExpr {
    Num(f64),
    Expr(String),
}

impl NumOrExpr {
    pub fn value(&self, field: &str) -> Result<f64, ConfigError> {
        match self {
            NumOrExpr::Num(v) => Ok(*v),
            NumOrExpr::Expr(s) => {
                let e = expr::parse(s).map_err(|e| ConfigError::Expr {
                    field: field.to_string(),
                    offset: e.offset(),
                    msg: e.to_string(),
                })?;
                if !e.is_constant() {
                    return Err(ConfigError::Field { field: field.to_string(), msg: format!("`{s}` is not constant") });
                }
                e.eval_xy(0.0, 0.0).map_err(|e| ConfigError::Field { field: field.to_string(), msg: e.to_string() })
            }
        }
    }
}

impl From<f64> for NumOrExpr {
    fn from(v: f64) -> Self {
        NumOrExpr::Num(v)
    }
}

impl fmt::Display for NumOrExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NumOrExpr::Num(v) => write!(f, "{v}"),
            NumOrExpr::Expr(s) => f.write_str(s),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum EdgeRecord {
    Segment { ax: NumOrExpr, ay: NumOrExpr, bx: NumOrExpr, by: NumOrExpr },
    Arc { cx: NumOrExpr, cy: NumOrExpr, r: NumOrExpr, t0: NumOrExpr, t1: NumOrExpr },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    #[serde(default = "default_tol")]
    pub trace_tol: f64,
    #[serde(default = "default_tmax")]
    pub t_max: f64,
}

fn default_tol() -> f64 {
    DEFAULT_TOL
}

fn default_tmax() -> f64 {
    DEFAULT_T_MAX
}

impl Default for SolverSection {
    fn default() -> Self {
        SolverSection { trace_tol: DEFAULT_TOL, t_max: DEFAULT_T_MAX }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnosticsSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub singular_point: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub singular_segment: Option<[[f64; 2]; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub annuli: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NamedPoint {
    pub name: String,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    #[serde(default = "default_schema")]
    pub schema_version: u32,
    #[serde(default)]
    pub name: String,
    pub u1: String,
    pub u2: String,
    pub l: String,
    #[serde(rename = "W")]
    pub w: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub diagnostics: DiagnosticsSection,
    #[serde(rename = "edge")]
    pub edges: Vec<EdgeRecord>,
    #[serde(default, rename = "point", skip_serializing_if = "Vec::is_empty")]
    pub points: Vec<NamedPoint>,
}

fn default_schema() -> u32 {
    SCHEMA_VERSION
}

/// Validated problem ready for the solver modules.
#[derive(Clone, Debug)]
pub struct Problem {
    pub config: ProblemConfig,
    pub domain: Domain,
    pub u: VectorField2,
    pub l: ScalarField,
    pub w: f64,
}

impl Problem {
    pub fn trace_options(&self) -> TraceOptions {
        TraceOptions { tol: self.config.solver.trace_tol, t_max: self.config.solver.t_max, record_path: false }
    }

    pub fn locus(&self) -> Option<SingularLocus> {
        let d = &self.config.diagnostics;
        if let Some([a, b]) = d.singular_segment {
            return Some(SingularLocus::Segment(Point2::new(a[0], a[1]), Point2::new(b[0], b[1])));
        }
        d.singular_point.map(|p| SingularLocus::Point(Point2::new(p[0], p[1])))
    }

    /// Name given to `p` in the config, if any point lies within 1e−9.
    pub fn point_name(&self, p: Point2) -> Option<&str> {
        self.config.points.iter().find(|q| Point2::new(q.x, q.y).dist(p) <= 1e-9).map(|q| q.name.as_str())
    }

    pub fn describe_point(&self, p: Point2) -> String {
        match self.point_name(p) {
            Some(n) => n.to_string(),
            None => format!("({:.6}, {:.6})", p.x, p.y),
        }
    }
}

impl ProblemConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let c: ProblemConfig = toml::from_str(text).map_err(|e| ConfigError::Syntax(e.to_string()))?;
        if c.schema_version != SCHEMA_VERSION {
            return Err(ConfigError::Field {
                field: "schema_version".into(),
                msg: format!("unsupported version {} (expected {SCHEMA_VERSION})", c.schema_version),
            });
        }
        Ok(c)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn edges(&self) -> Result<Vec<Edge>, ConfigError> {
        self.edges
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let f = |name: &str, v: &NumOrExpr| v.value(&format!("edge[{i}].{name}"));
                Ok(match r {
                    EdgeRecord::Segment { ax, ay, bx, by } => Edge::segment(
                        Point2::new(f("ax", ax)?, f("ay", ay)?),
                        Point2::new(f("bx", bx)?, f("by", by)?),
                    ),
                    EdgeRecord::Arc { cx, cy, r, t0, t1 } => {
                        Edge::arc(Point2::new(f("cx", cx)?, f("cy", cy)?), f("r", r)?, f("t0", t0)?, f("t1", t1)?)
                    }
                })
            })
            .collect()
    }

    /// Parses fields and geometry; rejects W = 0 and non-solenoidal velocities.
    pub fn build(&self) -> Result<Problem, ConfigError> {
        if self.w == 0.0 || !self.w.is_finite() {
            return Err(ConfigError::Field { field: "W".into(), msg: "must be finite and nonzero".into() });
        }
        if !(self.solver.trace_tol > 0.0 && self.solver.trace_tol < 1.0) {
            return Err(ConfigError::Field { field: "solver.trace_tol".into(), msg: "must lie in (0, 1)".into() });
        }
        if !(self.solver.t_max > 0.0) {
            return Err(ConfigError::Field { field: "solver.t_max".into(), msg: "must be positive".into() });
        }
        let domain = Domain::new(self.edges()?)?;
        let mut samples = domain.interior_lattice(12);
        samples.extend(domain.edges.iter().map(|e| e.point(0.5)));
        let u = VectorField2::parse(&self.u1, &self.u2, &samples).map_err(|e| match e {
            FieldErrorOrParse::Parse(p) => ConfigError::Expr {
                field: if expr::parse(&self.u1).is_err() { "u1".into() } else { "u2".into() },
                offset: p.offset(),
                msg: p.to_string(),
            },
            FieldErrorOrParse::Field(f) => ConfigError::Field { field: "u".into(), msg: f.to_string() },
        })?;
        let l = ScalarField::parse(&self.l)
            .map_err(|e| ConfigError::Expr { field: "l".into(), offset: e.offset(), msg: e.to_string() })?;
        if let Some(r0) = self.diagnostics.r0 {
            if !(r0 > 0.0) {
                return Err(ConfigError::Field { field: "diagnostics.r0".into(), msg: "must be positive".into() });
            }
        }
        Ok(Problem { config: self.clone(), domain, u, l, w: self.w })
    }
}

pub fn load_config(path: &Path) -> Result<Problem, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError::Io { path: path.display().to_string(), msg: e.to_string() })?;
    ProblemConfig::from_toml(&text)?.build()
}

#[cfg(test)]
mod tests {
    use super::*;

    const SQUARE: &str = r#"
name = "square"
u1 = "x"
u2 = "-y"
l = "1"
W = 1.0

[[edge]]
kind = "segment"
ax = 0
ay = 1
bx = 1
by = 1

[[edge]]
kind = "segment"
ax = 1.0
ay = 1.0
bx = 1.0
by = 2.0

[[edge]]
kind = "segment"
ax = 1.0
ay = 2.0
bx = 0.0
by = 2.0

[[edge]]
kind = "segment"
ax = 0.0
ay = 2.0
bx = 0.0
by = 1.0
"#;

    #[test]
    fn round_trip() {
        let c = ProblemConfig::from_toml(SQUARE).unwrap();
        let again = ProblemConfig::from_toml(&c.to_toml()).unwrap();
        assert_eq!(c, again);
        assert!(c.build().is_ok());
    }

    #[test]
    fn rejects_divergent_field() {
        let bad = SQUARE.replace("u2 = \"-y\"", "u2 = \"y\"");
        let e = ProblemConfig::from_toml(&bad).unwrap().build().unwrap_err();
        assert!(e.to_string().contains("divergence ≠ 0"), "{e}");
    }

    #[test]
    fn rejects_zero_w_and_bad_expr() {
        let c = ProblemConfig::from_toml(&SQUARE.replace("W = 1.0", "W = 0.0")).unwrap();
        assert!(matches!(c.build(), Err(ConfigError::Field { .. })));
        let c = ProblemConfig::from_toml(&SQUARE.replace("l = \"1\"", "l = \"1 +* x\"")).unwrap();
        assert!(matches!(c.build(), Err(ConfigError::Expr { .. })));
        assert!(ProblemConfig::from_toml("u1 = ").is_err());
    }

    #[test]
    fn full_circle_arc() {
        let text = r#"
u1 = "x"
u2 = "-y"
l = "1"
W = 1
[[edge]]
kind = "arc"
cx = 0
cy = 1
r = 0.5
t0 = "-pi"
t1 = "pi"
"#;
        let p = ProblemConfig::from_toml(text).unwrap().build().unwrap();
        assert!(p.domain.inside(Point2::new(0.0, 1.0)));
    }
}
