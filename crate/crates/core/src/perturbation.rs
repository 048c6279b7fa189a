//! Monte Carlo spread of the steering product under measurement error.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::criteria::{reid_product, Direction, Gains};
use crate::error::{Error, Result};
use crate::gaussian::CovarianceMatrix;
use crate::reconstruction::{reconstruct, MeasurementSet};
use crate::sampler::measure_campaign;
use crate::scalar::Real;

/// Distribution of the `B|A` Reid product over a set of seeds.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PerturbationSummary {
    pub values: Vec<f64>,
    /// Seeds whose perturbed data could not be reconstructed.
    pub rejected: usize,
    pub median: f64,
    /// 15.87th and 84.13th percentiles.
    pub lower: f64,
    pub upper: f64,
    /// Half the central 68.27% interval: a one-sigma equivalent width.
    pub half_width: f64,
}

impl PerturbationSummary {
    fn from_values(mut values: Vec<f64>, rejected: usize) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::DegenerateInput(
                "every perturbed data set was rejected".into(),
            ));
        }
        values.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let lower = quantile(&values, 0.158_655_253_9);
        let upper = quantile(&values, 0.841_344_746_1);
        Ok(Self {
            median: quantile(&values, 0.5),
            lower,
            upper,
            half_width: 0.5 * (upper - lower),
            values,
            rejected,
        })
    }

    /// Fraction of all seeds (rejected ones count as misses) within `center ± band`.
    pub fn fraction_within(&self, center: f64, band: f64) -> f64 {
        let hits = self
            .values
            .iter()
            .filter(|v| (*v - center).abs() <= band)
            .count();
        hits as f64 / (self.values.len() + self.rejected) as f64
    }
}

/// Linear-interpolated quantile of sorted data.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Samples per setting whose variance estimator has relative error `rel`
/// (`√(2/n) = rel`).
pub fn samples_for_relative_error(rel: f64) -> Result<usize> {
    if !(rel > 0.0 && rel < 1.0) {
        return Err(Error::invalid(format!(
            "relative error must lie in (0, 1), got {rel}"
        )));
    }
    Ok(((2.0 / (rel * rel)).round() as usize).max(2))
}

fn reid_of(ms: &MeasurementSet<f64>) -> Option<f64> {
    let rec = reconstruct(ms).ok()?;
    reid_product(&rec.covariance, Direction::BGivenA, Gains::Optimal).ok()
}

/// Re-measures `state` with finite-statistics campaigns whose entries carry
/// relative error `rel`, reconstructs each and collects the `B|A` product.
pub fn finite_statistics_study<T: Real>(
    state: &CovarianceMatrix<T>,
    rel: f64,
    seeds: impl IntoIterator<Item = u64>,
) -> Result<PerturbationSummary> {
    let n = samples_for_relative_error(rel)?;
    let mut values = Vec::new();
    let mut rejected = 0;
    for seed in seeds {
        let ms = measure_campaign(state, n, seed, T::zero())?;
        let ms = MeasurementSet {
            var_xa: ms.var_xa.as_f64(),
            var_pa: ms.var_pa.as_f64(),
            var_xb: ms.var_xb.as_f64(),
            var_pb: ms.var_pb.as_f64(),
            var_x_diff: ms.var_x_diff.as_f64(),
            var_p_sum: ms.var_p_sum.as_f64(),
            relative_error: ms.relative_error.as_f64(),
            metadata: ms.metadata,
        };
        match reid_of(&ms) {
            Some(v) => values.push(v),
            None => rejected += 1,
        }
    }
    PerturbationSummary::from_values(values, rejected)
}

/// Multiplies each of the six inputs by an independent `1 + rel·N(0, 1)`.
/// Ignores the shared samples behind the variances of one quadrature block.
pub fn independent_jitter_study(
    ms: &MeasurementSet<f64>,
    rel: f64,
    seeds: impl IntoIterator<Item = u64>,
) -> Result<PerturbationSummary> {
    let mut values = Vec::new();
    let mut rejected = 0;
    for seed in seeds {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut jitter =
            || 1.0 + rel * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng);
        let perturbed = MeasurementSet {
            var_xa: ms.var_xa * jitter(),
            var_pa: ms.var_pa * jitter(),
            var_xb: ms.var_xb * jitter(),
            var_pb: ms.var_pb * jitter(),
            var_x_diff: ms.var_x_diff * jitter(),
            var_p_sum: ms.var_p_sum * jitter(),
            relative_error: ms.relative_error,
            metadata: ms.metadata.clone(),
        };
        match reid_of(&perturbed) {
            Some(v) => values.push(v),
            None => rejected += 1,
        }
    }
    PerturbationSummary::from_values(values, rejected)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantile_interpolates() {
        let v = [0.0, 1.0, 2.0, 3.0];
        assert_eq!(quantile(&v, 0.5), 1.5);
        assert_eq!(quantile(&v, 0.0), 0.0);
        assert_eq!(quantile(&v, 1.0), 3.0);
    }

    #[test]
    fn sample_count_for_five_percent() {
        assert_eq!(samples_for_relative_error(0.05).unwrap(), 800);
        assert!(samples_for_relative_error(0.0).is_err());
    }
}
