//! Parsed Finsler structures and their on-disk format.
//!
//! ```toml
//! [metric]
//! name = "bogoslovsky-toy"
//! dim = 2
//!
//! [lagrangian]
//! expr = "y0*sqrt(abs(y0^2 - y1^2))"
//!
//! [admissible]          # optional; admissible iff expr > 0
//! expr = "1"
//!
//! [meta]                # optional free-form strings
//! source = "toy model"
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::autodiff::MAX_DIM;
use crate::error::{Error, Result};
use crate::expr::{parse_with, Expr, ParseOptions};

/// A Lagrangian together with its dimension and admissible-set predicate.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricSpec {
    pub name: String,
    pub dim: usize,
    pub lagrangian: Expr,
    /// Admissible iff this evaluates to a value `> 0`.
    pub admissible: Expr,
    pub metadata: BTreeMap<String, String>,
}

impl MetricSpec {
    /// Builds a spec from expression sources; the whole of `TM \ {0}` is
    /// admissible when `admissible` is `None`.
    pub fn new(name: &str, dim: usize, lagrangian: &str, admissible: Option<&str>) -> Result<Self> {
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::UnsupportedDimension(dim));
        }
        let opts = ParseOptions { dim: Some(dim), symbols: vec![] };
        let lagrangian = parse_with(lagrangian, &opts)
            .map_err(|source| Error::Parse { field: "lagrangian".into(), source })?;
        let admissible = match admissible {
            Some(src) => parse_with(src, &opts)
                .map_err(|source| Error::Parse { field: "admissible".into(), source })?,
            None => Expr::Num(1.0),
        };
        Self::from_exprs(name, dim, lagrangian, admissible)
    }

    pub fn from_exprs(name: &str, dim: usize, lagrangian: Expr, admissible: Expr) -> Result<Self> {
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::UnsupportedDimension(dim));
        }
        for e in [&lagrangian, &admissible] {
            if let Some(s) = e.symbols().first() {
                return Err(Error::InvalidSpec(format!("unresolved symbol `{s}`")));
            }
            if let Some((_, i)) = e.variables().iter().find(|(_, i)| *i >= dim) {
                return Err(Error::InvalidSpec(format!("variable index {i} exceeds dimension {dim}")));
            }
        }
        Ok(MetricSpec { name: name.to_string(), dim, lagrangian, admissible, metadata: BTreeMap::new() })
    }

    pub fn with_meta(mut self, key: &str, value: &str) -> Self {
        self.metadata.insert(key.to_string(), value.to_string());
        self
    }

    pub fn lagrangian_at(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        Ok(self.lagrangian.eval::<f64>(x, y)?)
    }

    pub fn is_admissible(&self, x: &[f64], y: &[f64]) -> bool {
        if let Expr::Num(c) = self.admissible {
            return c > 0.0;
        }
        matches!(self.admissible.eval::<f64>(x, y), Ok(v) if v > 0.0)
    }

    /// Whether the admissible predicate is the trivial constant `> 0`.
    pub fn admits_everything(&self) -> bool {
        matches!(self.admissible, Expr::Num(c) if c > 0.0)
    }

    /// Same structure expressed in the basis `y = S·ỹ`.
    pub fn change_basis(&self, s: &[Vec<f64>]) -> MetricSpec {
        MetricSpec {
            name: format!("{}-rebased", self.name),
            dim: self.dim,
            lagrangian: self.lagrangian.linear_substitution(s),
            admissible: self.admissible.linear_substitution(s),
            metadata: self.metadata.clone(),
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let file: SpecFile = toml::from_str(text).map_err(|e| Error::InvalidSpec(e.to_string()))?;
        let mut spec = MetricSpec::new(
            &file.metric.name,
            file.metric.dim,
            &file.lagrangian.expr,
            file.admissible.as_ref().map(|a| a.expr.as_str()),
        )?;
        spec.metadata = file.meta;
        Ok(spec)
    }

    pub fn to_toml_string(&self) -> String {
        let file = SpecFile {
            metric: MetricSection { name: self.name.clone(), dim: self.dim },
            lagrangian: ExprSection { expr: self.lagrangian.to_string() },
            admissible: (!self.admits_everything()).then(|| ExprSection { expr: self.admissible.to_string() }),
            meta: self.metadata.clone(),
        };
        toml::to_string(&file).expect("spec file serializes")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_toml_string())?;
        Ok(())
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpecFile {
    metric: MetricSection,
    lagrangian: ExprSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    admissible: Option<ExprSection>,
    #[serde(default)]
    meta: BTreeMap<String, String>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MetricSection {
    name: String,
    dim: usize,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ExprSection {
    expr: String,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_spec_file() {
        let spec = MetricSpec::from_toml_str(
            r#"
[metric]
name = "toy"
dim = 2

[lagrangian]
expr = "y0*sqrt(abs(y0^2 - y1^2))"

[admissible]
expr = "y0"

[meta]
note = "b = 1/2"
"#,
        )
        .unwrap();
        assert_eq!(spec.dim, 2);
        assert!(spec.is_admissible(&[0.0, 0.0], &[1.0, 0.3]));
        assert!(!spec.is_admissible(&[0.0, 0.0], &[-1.0, 0.3]));
        assert_eq!(spec.metadata["note"], "b = 1/2");
        let again = MetricSpec::from_toml_str(&spec.to_toml_string()).unwrap();
        assert_eq!(again, spec);
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(matches!(MetricSpec::new("a", 2, "y2^2", None), Err(Error::Parse { .. })));
        assert!(matches!(MetricSpec::new("a", 9, "y0^2", None), Err(Error::UnsupportedDimension(9))));
        assert!(matches!(
            MetricSpec::from_toml_str("[metric]\nname='a'\ndim=2\n"),
            Err(Error::InvalidSpec(_))
        ));
        let err = MetricSpec::new("a", 2, "y0 +", None).unwrap_err();
        assert_eq!(err.code(), "SyntaxError");
    }
}
