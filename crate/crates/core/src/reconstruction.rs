//! Covariance-matrix reconstruction from the six-variance campaign.
//!
//! The four single-quadrature variances fill the diagonal. The Alice–Bob
//! covariances come from one joint variance each through
//! `Cov(O₁, O₂) = ½(Var(O₁ + O₂) − Var O₁ − Var O₂)`. X–P cross terms were not
//! measured and are set to zero, which can only understate the correlations.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::{symplectic_eigenvalues, CovarianceMatrix, PHYSICALITY_TOL};
use crate::linalg::Matrix;
use crate::scalar::Real;

fn default_relative_error<T: Real>() -> T {
    T::lit(0.05)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct MeasurementSet<T> {
    pub var_xa: T,
    pub var_pa: T,
    pub var_xb: T,
    pub var_pb: T,
    /// `Var(X_A − X_B)`.
    pub var_x_diff: T,
    /// `Var(P_A + P_B)`.
    pub var_p_sum: T,
    #[serde(default = "default_relative_error")]
    pub relative_error: T,
    #[serde(default)]
    pub metadata: BTreeMap<String, serde_json::Value>,
}

/// One CSV row, header `var_xa,var_pa,var_xb,var_pb,var_x_diff,var_p_sum`.
#[derive(Serialize, Deserialize)]
#[serde(bound = "T: Real")]
struct CsvRow<T> {
    var_xa: T,
    var_pa: T,
    var_xb: T,
    var_pb: T,
    var_x_diff: T,
    var_p_sum: T,
}

impl<T: Real> MeasurementSet<T> {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in self.named_values() {
            if !(v > T::zero()) || !v.is_finite() {
                return Err(Error::invalid(format!(
                    "{name}: variance must be finite and > 0, got {v}"
                )));
            }
        }
        if !(self.relative_error >= T::zero() && self.relative_error < T::one()) {
            return Err(Error::invalid(format!(
                "relative_error: must lie in [0, 1), got {}",
                self.relative_error
            )));
        }
        Ok(())
    }

    pub fn named_values(&self) -> [(&'static str, T); 6] {
        [
            ("var_xa", self.var_xa),
            ("var_pa", self.var_pa),
            ("var_xb", self.var_xb),
            ("var_pb", self.var_pb),
            ("var_x_diff", self.var_x_diff),
            ("var_p_sum", self.var_p_sum),
        ]
    }

    /// The six campaign quantities read off an existing two-mode matrix.
    pub fn from_covariance(state: &CovarianceMatrix<T>, relative_error: T) -> Result<Self> {
        state.require_two_mode()?;
        let g = |i, j| state.get(i, j);
        let two = T::lit(2.0);
        Ok(Self {
            var_xa: g(0, 0),
            var_pa: g(1, 1),
            var_xb: g(2, 2),
            var_pb: g(3, 3),
            var_x_diff: g(0, 0) + g(2, 2) - two * g(0, 2),
            var_p_sum: g(1, 1) + g(3, 3) + two * g(1, 3),
            relative_error,
            metadata: BTreeMap::new(),
        })
    }

    /// Reads a single-row CSV. `relative_error` falls back to 0.05; metadata is empty.
    pub fn from_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(reader);
        let mut rows = rdr.deserialize::<CsvRow<T>>();
        let row = rows
            .next()
            .ok_or_else(|| Error::invalid("csv: no data row"))?
            .map_err(|e| Error::invalid(format!("csv: {e}")))?;
        if rows.next().is_some() {
            return Err(Error::invalid("csv: expected exactly one data row"));
        }
        let ms = Self {
            var_xa: row.var_xa,
            var_pa: row.var_pa,
            var_xb: row.var_xb,
            var_pb: row.var_pb,
            var_x_diff: row.var_x_diff,
            var_p_sum: row.var_p_sum,
            relative_error: default_relative_error(),
            metadata: BTreeMap::new(),
        };
        ms.validate()?;
        Ok(ms)
    }

    pub fn to_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.serialize(CsvRow {
            var_xa: self.var_xa,
            var_pa: self.var_pa,
            var_xb: self.var_xb,
            var_pb: self.var_pb,
            var_x_diff: self.var_x_diff,
            var_p_sum: self.var_p_sum,
        })?;
        w.flush()?;
        Ok(())
    }
}

/// `½(var_sum − var_1 − var_2)`.
///
/// Passing `Var(A − B)` as `var_sum` yields `Cov(A, −B) = −Cov(A, B)`.
pub fn covariance_from_sum<T: Real>(var_sum: T, var_1: T, var_2: T) -> Result<T> {
    if !var_sum.is_finite() || !var_1.is_finite() || !var_2.is_finite() {
        return Err(Error::invalid("covariance identity needs finite inputs"));
    }
    if !(var_1 > T::zero() && var_2 > T::zero()) {
        return Err(Error::invalid("single-quadrature variances must be > 0"));
    }
    Ok(T::lit(0.5) * (var_sum - var_1 - var_2))
}

/// A reconstructed matrix with its physicality diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct Reconstruction<T> {
    pub covariance: CovarianceMatrix<T>,
    pub symplectic_eigenvalues: Vec<T>,
    pub warnings: Vec<String>,
}

fn cov_uncertainty<T: Real>(rel: T, inputs: [T; 3]) -> T {
    let s = inputs.iter().fold(T::zero(), |acc, &v| {
        let e = rel * v;
        acc + e * e
    });
    T::lit(0.5) * s.sqrt()
}

/// First-order (independent-error) uncertainties of every reconstructed entry.
pub fn propagate_errors<T: Real>(ms: &MeasurementSet<T>) -> Matrix<T> {
    let rel = ms.relative_error;
    let mut u = Matrix::zeros(4, 4);
    u[(0, 0)] = rel * ms.var_xa;
    u[(1, 1)] = rel * ms.var_pa;
    u[(2, 2)] = rel * ms.var_xb;
    u[(3, 3)] = rel * ms.var_pb;
    let ux = cov_uncertainty(rel, [ms.var_xa, ms.var_xb, ms.var_x_diff]);
    let up = cov_uncertainty(rel, [ms.var_pa, ms.var_pb, ms.var_p_sum]);
    u[(0, 2)] = ux;
    u[(2, 0)] = ux;
    u[(1, 3)] = up;
    u[(3, 1)] = up;
    u
}

fn cauchy_schwarz_gate<T: Real>(
    entry: (usize, usize),
    cov: T,
    v1: T,
    v2: T,
    band: T,
) -> Result<()> {
    let bound = (v1 * v2).sqrt();
    let margin = cov.abs() - bound;
    if margin > band {
        return Err(Error::InconsistentData {
            entry,
            covariance: cov.as_f64(),
            bound: bound.as_f64(),
            margin: margin.as_f64(),
            tolerance: band.as_f64(),
        });
    }
    Ok(())
}

pub fn reconstruct<T: Real>(ms: &MeasurementSet<T>) -> Result<Reconstruction<T>> {
    ms.validate()?;
    // X was measured as a difference: Cov(X_A, X_B) = −Cov(X_A, −X_B).
    let cov_x = -covariance_from_sum(ms.var_x_diff, ms.var_xa, ms.var_xb)?;
    let cov_p = covariance_from_sum(ms.var_p_sum, ms.var_pa, ms.var_pb)?;

    let unc = propagate_errors(ms);
    cauchy_schwarz_gate((0, 2), cov_x, ms.var_xa, ms.var_xb, unc[(0, 2)])?;
    cauchy_schwarz_gate((1, 3), cov_p, ms.var_pa, ms.var_pb, unc[(1, 3)])?;

    let z = T::zero();
    let rows = vec![
        vec![ms.var_xa, z, cov_x, z],
        vec![z, ms.var_pa, z, cov_p],
        vec![cov_x, z, ms.var_xb, z],
        vec![z, cov_p, z, ms.var_pb],
    ];
    let covariance = CovarianceMatrix::from_rows(&rows).map_err(|e| match e {
        Error::NotPositiveDefinite(_) => Error::NotPositiveDefinite(
            "reconstructed covariances are within error of the Cauchy-Schwarz bound \
             but the point estimate is not positive definite"
                .into(),
        ),
        other => other,
    })?;

    let nu = symplectic_eigenvalues(&covariance)?;
    let mut warnings = Vec::new();
    let min = nu.iter().copied().fold(T::infinity(), T::min);
    if min < T::one() - T::tol(PHYSICALITY_TOL) {
        warnings.push(format!(
            "smallest symplectic eigenvalue {min} is below 1: reconstructed state is unphysical within rounding/measurement error"
        ));
    }
    Ok(Reconstruction {
        covariance,
        symplectic_eigenvalues: nu,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{reference_gamma, reference_measurements};
    use crate::gaussian::vacuum_state;

    #[test]
    fn covariance_identity_examples() {
        let c = covariance_from_sum(0.20_f64, 35.49, 34.61).unwrap();
        assert!((c + 34.95).abs() < 1e-12);
        let c = -covariance_from_sum(0.21_f64, 18.41, 17.98).unwrap();
        assert!((c - 18.09).abs() < 1e-12);
        assert_eq!(covariance_from_sum(3.0, 1.0, 2.0).unwrap(), 0.0);
        assert!(covariance_from_sum(1.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn reconstructs_reference_matrix() {
        let rec = reconstruct(&reference_measurements::<f64>()).unwrap();
        assert!(
            rec.covariance
                .entries()
                .max_abs_diff(reference_gamma::<f64>().entries())
                < 1e-12
        );
        assert!(rec.warnings.is_empty());
        assert!(rec.symplectic_eigenvalues.iter().all(|&v| v >= 1.0));
    }

    #[test]
    fn vacuum_campaign() {
        let ms = MeasurementSet::from_covariance(&vacuum_state::<f64>(2).unwrap(), 0.05).unwrap();
        assert_eq!((ms.var_x_diff, ms.var_p_sum), (2.0, 2.0));
        let rec = reconstruct(&ms).unwrap();
        assert_eq!(rec.covariance.entries(), &Matrix::identity(4));
    }

    #[test]
    fn error_propagation_examples() {
        let mut ms = reference_measurements::<f64>();
        let u = propagate_errors(&ms);
        assert!((u[(0, 0)] - 0.9205).abs() < 1e-12);
        let expected = 0.5
            * ((0.05f64 * 18.41).powi(2) + (0.05f64 * 17.98).powi(2) + (0.05f64 * 0.21).powi(2))
                .sqrt();
        assert!((u[(0, 2)] - expected).abs() < 1e-15);
        assert!((u[(0, 2)] - 0.643).abs() < 1e-3);
        ms.relative_error = 0.0;
        assert_eq!(propagate_errors(&ms).max_abs(), 0.0);
    }

    #[test]
    fn too_correlated_is_inconsistent() {
        let ms = MeasurementSet {
            var_xa: 1.0,
            var_pa: 1.0,
            var_xb: 1.0,
            var_pb: 1.0,
            var_x_diff: 80.0,
            var_p_sum: 2.0,
            relative_error: 0.05,
            metadata: BTreeMap::new(),
        };
        match reconstruct(&ms) {
            Err(Error::InconsistentData { entry, margin, .. }) => {
                assert_eq!(entry, (0, 2));
                assert!(margin > 37.0);
            }
            other => panic!("expected inconsistency, got {other:?}"),
        }
    }

    #[test]
    fn within_band_but_indefinite_is_rejected() {
        // cov = (1 + 4 - 0.96)/2 = 2.02 exceeds sqrt(1 * 4) = 2 by less than its band.
        let ms = MeasurementSet {
            var_xa: 1.0,
            var_pa: 1.0,
            var_xb: 4.0,
            var_pb: 1.0,
            var_x_diff: 0.96,
            var_p_sum: 2.0,
            relative_error: 0.05,
            metadata: BTreeMap::new(),
        };
        assert!(matches!(
            reconstruct(&ms),
            Err(Error::NotPositiveDefinite(_))
        ));
        let ok = MeasurementSet {
            var_x_diff: 1.04,
            ..ms
        };
        assert!(reconstruct(&ok).is_ok());
    }

    #[test]
    fn non_positive_variance_rejected() {
        let mut ms = reference_measurements::<f64>();
        ms.var_pb = 0.0;
        assert!(matches!(reconstruct(&ms), Err(Error::InvalidArgument(_))));
        let mut ms = reference_measurements::<f64>();
        ms.relative_error = 1.0;
        assert!(reconstruct(&ms).is_err());
    }

    #[test]
    fn csv_io() {
        let text =
            "var_xa,var_pa,var_xb,var_pb,var_x_diff,var_p_sum\n18.41,35.49,17.98,34.61,0.21,0.20\n";
        let ms = MeasurementSet::<f64>::from_csv(text.as_bytes()).unwrap();
        assert_eq!(ms.var_p_sum, 0.20);
        assert_eq!(ms.relative_error, 0.05);
        let mut out = Vec::new();
        ms.to_csv(&mut out).unwrap();
        let s = String::from_utf8(out).unwrap();
        assert!(s.starts_with("var_xa,var_pa,var_xb,var_pb,var_x_diff,var_p_sum\n"));
        assert_eq!(MeasurementSet::<f64>::from_csv(s.as_bytes()).unwrap(), ms);
        assert!(MeasurementSet::<f64>::from_csv("var_xa\n1\n".as_bytes()).is_err());
    }

    #[test]
    fn json_defaults() {
        let ms: MeasurementSet<f64> = serde_json::from_str(
            r#"{"var_xa":1,"var_pa":1,"var_xb":1,"var_pb":1,"var_x_diff":2,"var_p_sum":2,
                "metadata":{"rbw_hz":300000}}"#,
        )
        .unwrap();
        assert_eq!(ms.relative_error, 0.05);
        assert_eq!(ms.metadata["rbw_hz"], 300000);
    }
}
