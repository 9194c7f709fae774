//! Built-in metrics with known reference values.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::metric_spec::MetricSpec;

/// Expected causal structure of a catalog metric.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Kind {
    LorentzFinsler,
    PositiveDefinite,
}

/// Reference values a catalog entry is expected to reproduce.
#[derive(Clone, Debug, Default, Serialize)]
pub struct GroundTruth {
    /// Privileged direction, when it is unique up to scaling.
    pub privileged_direction: Option<Vec<f64>>,
    /// Every timelike direction is privileged.
    pub all_directions_privileged: bool,
    /// `det g(x, y)` when it does not depend on `y`.
    pub constant_det: Option<f64>,
    /// `|det g(x, t0)|` at the privileged orientation.
    pub abs_det_t0: Option<f64>,
    pub sigma_bh: Option<f64>,
    pub sigma_ht: Option<f64>,
    /// `false` when `det g` cannot be continued over the ellipsoid, so the
    /// Holmes-Thompson density is expected to fail.
    pub ht_prolongable: bool,
    /// Positive-definite reference densities.
    pub sigma_classical_bh: Option<f64>,
    pub sigma_classical_ht: Option<f64>,
    pub provenance: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct CatalogEntry {
    #[serde(skip)]
    pub spec: MetricSpec,
    pub name: String,
    pub kind: Kind,
    /// A direction of the expected causal kind (timelike for Lorentz-Finsler).
    pub sample_direction: Vec<f64>,
    pub truth: GroundTruth,
}

pub const NAMES: [&str; 7] = [
    "minkowski4",
    "riemannian-diag",
    "berwald-moor",
    "bogoslovsky-toy",
    "linearized-quartic",
    "euclidean-n",
    "pd-quartic",
];

/// Perturbation strength of `linearized-quartic`.
pub const LINEARIZED_EPSILON: f64 = 1e-3;

fn spec(name: &str, dim: usize, lagrangian: &str) -> MetricSpec {
    MetricSpec::new(name, dim, lagrangian, None).expect("catalog expressions parse")
}

/// Diagonal constant metric `Σ c_i (y^i)²`.
pub fn riemannian_diag(coefficients: &[f64]) -> Result<MetricSpec> {
    if coefficients.is_empty() {
        return Err(Error::InvalidArgument("empty coefficient list".into()));
    }
    let terms: Vec<String> = coefficients.iter().enumerate().map(|(i, c)| format!("{c:?}*y{i}^2")).collect();
    MetricSpec::new("riemannian-diag", coefficients.len(), &terms.join(" + "), None)
}

pub fn euclidean(n: usize) -> Result<MetricSpec> {
    let mut s = riemannian_diag(&vec![1.0; n])?;
    s.name = format!("euclidean-{n}");
    Ok(s)
}

/// The linearized perturbation `η(y,y) + ε·γ(y)` with the quartic-root
/// choice `γ(y) = √(|y|⁴ + Σ(y^i)⁴)`.
pub fn linearized_quartic(epsilon: f64) -> MetricSpec {
    let src = format!(
        "y0^2 - y1^2 - y2^2 - y3^2 + {epsilon:?}*sqrt((y0^2 + y1^2 + y2^2 + y3^2)^2 + y0^4 + y1^4 + y2^4 + y3^4)"
    );
    spec("linearized-quartic", 4, &src)
}

/// Area of the unit ball of `((y0)⁴ + (y1)⁴)^{1/2}`, i.e. `|y0|⁴ + |y1|⁴ ≤ 1`:
/// `4 Γ(5/4)² / Γ(3/2)`.
pub fn quartic_ball_area() -> f64 {
    let gamma_5_4 = 0.906_402_477_055_477_f64;
    let gamma_3_2 = std::f64::consts::PI.sqrt() / 2.0;
    4.0 * gamma_5_4 * gamma_5_4 / gamma_3_2
}

/// Classical Holmes-Thompson density of `pd-quartic`.
pub const PD_QUARTIC_HT: f64 = 0.809_028_901_782_568_5;

pub fn builtin(name: &str) -> Result<CatalogEntry> {
    let entry = match name {
        "minkowski4" => CatalogEntry {
            spec: spec(name, 4, "y0^2 - y1^2 - y2^2 - y3^2"),
            name: name.into(),
            kind: Kind::LorentzFinsler,
            sample_direction: vec![1.0, 0.0, 0.0, 0.0],
            truth: GroundTruth {
                all_directions_privileged: true,
                constant_det: Some(-1.0),
                abs_det_t0: Some(1.0),
                sigma_bh: Some(1.0),
                sigma_ht: Some(1.0),
                ht_prolongable: true,
                provenance: "flat metric: |det η| = 1".into(),
                ..Default::default()
            },
        },
        "riemannian-diag" => CatalogEntry {
            spec: spec(name, 4, "4*y0^2 - y1^2 - 2*y2^2 - 0.5*y3^2"),
            name: name.into(),
            kind: Kind::LorentzFinsler,
            sample_direction: vec![1.0, 0.0, 0.0, 0.0],
            truth: GroundTruth {
                all_directions_privileged: true,
                constant_det: Some(-4.0),
                abs_det_t0: Some(4.0),
                sigma_bh: Some(2.0),
                sigma_ht: Some(2.0),
                ht_prolongable: true,
                provenance: "direction-independent metric: both densities reduce to √|det g|".into(),
                ..Default::default()
            },
        },
        "berwald-moor" => CatalogEntry {
            spec: spec(name, 4, "sgn(y0*y1*y2*y3)*sqrt(abs(y0*y1*y2*y3))"),
            name: name.into(),
            kind: Kind::LorentzFinsler,
            sample_direction: vec![1.0, 1.0, 1.0, 1.0],
            truth: GroundTruth {
                all_directions_privileged: true,
                constant_det: Some(-(2f64.powi(-8))),
                abs_det_t0: Some(2f64.powi(-8)),
                sigma_bh: Some(2f64.powi(-4)),
                sigma_ht: Some(2f64.powi(-4)),
                ht_prolongable: true,
                provenance: "sign-adjusted Berwald-Moor metric: det g = -2^-8 for all y".into(),
                ..Default::default()
            },
        },
        "bogoslovsky-toy" => CatalogEntry {
            spec: spec(name, 2, "y0*sqrt(abs(y0^2 - y1^2))"),
            name: name.into(),
            kind: Kind::LorentzFinsler,
            sample_direction: vec![1.0, 0.0],
            truth: GroundTruth {
                privileged_direction: Some(vec![1.0, 0.0]),
                abs_det_t0: Some(0.5),
                sigma_bh: Some(std::f64::consts::FRAC_1_SQRT_2),
                ht_prolongable: false,
                provenance: "Bogoslovsky toy model (b = 1/2, n = 2): det g = -(2y0²+y1²)/(4|y0²-y1²|)".into(),
                ..Default::default()
            },
        },
        "linearized-quartic" => CatalogEntry {
            spec: linearized_quartic(LINEARIZED_EPSILON),
            name: name.into(),
            kind: Kind::LorentzFinsler,
            sample_direction: vec![1.0, 0.0, 0.0, 0.0],
            truth: GroundTruth {
                ht_prolongable: true,
                provenance: "linearized perturbation of Minkowski, ε = 1e-3; the time axis is critical with \
                             |det g| = 0.99929139 but the minimal critical value 0.99836518 is attained at \
                             (1, ±1, 0, 0)/√2 and its coordinate permutations, which are null for η and \
                             timelike for L"
                    .into(),
                ..Default::default()
            },
        },
        "euclidean-n" => euclidean_entry(2)?,
        "pd-quartic" => CatalogEntry {
            spec: spec(name, 2, "sqrt(y0^4 + y1^4)"),
            name: name.into(),
            kind: Kind::PositiveDefinite,
            sample_direction: vec![1.0, 0.0],
            truth: GroundTruth {
                sigma_classical_bh: Some(std::f64::consts::PI / quartic_ball_area()),
                sigma_classical_ht: Some(PD_QUARTIC_HT),
                provenance: "quartic Finsler norm; unit ball area 4Γ(5/4)²/Γ(3/2); HT from the polar form \
                             (1/2π)∫ det g(φ)/L(φ) dφ by adaptive quadrature"
                    .into(),
                ..Default::default()
            },
        },
        other => {
            if let Some(n) = other.strip_prefix("euclidean-").and_then(|d| d.parse::<usize>().ok()) {
                euclidean_entry(n)?
            } else {
                return Err(Error::UnknownMetric(other.to_string()));
            }
        }
    };
    Ok(entry)
}

fn euclidean_entry(n: usize) -> Result<CatalogEntry> {
    let spec = euclidean(n).map_err(|_| Error::UnknownMetric(format!("euclidean-{n}")))?;
    let mut dir = vec![0.0; n];
    dir[0] = 1.0;
    Ok(CatalogEntry {
        name: spec.name.clone(),
        spec,
        kind: Kind::PositiveDefinite,
        sample_direction: dir,
        truth: GroundTruth {
            sigma_classical_bh: Some(1.0),
            sigma_classical_ht: Some(1.0),
            provenance: "Euclidean metric: the unit ball is the standard ball".into(),
            ..Default::default()
        },
    })
}

pub fn all() -> Vec<CatalogEntry> {
    NAMES.iter().map(|n| builtin(n).expect("catalog names resolve")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_name_resolves() {
        for name in NAMES {
            let e = builtin(name).unwrap();
            assert!(!e.truth.provenance.is_empty());
            assert_eq!(e.sample_direction.len(), e.spec.dim);
        }
        assert_eq!(builtin("euclidean-5").unwrap().spec.dim, 5);
        assert!(matches!(builtin("nope"), Err(Error::UnknownMetric(_))));
        assert!(matches!(builtin("euclidean-0"), Err(Error::UnknownMetric(_))));
    }

    #[test]
    fn reference_values() {
        let bm = builtin("berwald-moor").unwrap();
        assert_eq!(bm.truth.constant_det, Some(-(2f64.powi(-8))));
        assert_eq!(bm.truth.sigma_bh, Some(0.0625));
        let bog = builtin("bogoslovsky-toy").unwrap();
        assert!(!bog.truth.ht_prolongable);
        assert_eq!(bog.truth.privileged_direction.as_deref(), Some(&[1.0, 0.0][..]));
        assert!((quartic_ball_area() - 3.708_149_354_602_743).abs() < 1e-12);
    }
}
