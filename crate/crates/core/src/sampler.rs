//! Monte Carlo homodyne sampling.
//!
//! Each run records Alice's and Bob's detectors simultaneously at a pair of
//! local-oscillator angles. Every setting is a linear read-out of such a
//! record: a single detector, or a weighted sum of both outputs as produced
//! by passive subtraction. Dark noise is added per detector before combining.
//!
//! Randomness is deterministic. Run `k` of a seed draws its samples in chunks
//! of [`CHUNK_LEN`], and chunk `c` uses `ChaCha8Rng::seed_from_u64(seed)` on
//! stream `(k << 32) | c`. Output is therefore independent of how many
//! threads process the chunks.

use std::collections::BTreeMap;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::{bilinear, is_physical, CovarianceMatrix, ALICE, BOB};
use crate::linalg::Matrix;
use crate::reconstruction::MeasurementSet;
use crate::scalar::Real;

pub const CHUNK_LEN: usize = 1 << 16;

/// Run index of the amplitude-quadrature campaign run.
const RUN_X: u64 = 0;
/// Run index of the phase-quadrature campaign run.
const RUN_P: u64 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SettingKind {
    SingleQuadrature,
    JointCombination,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct MeasurementSetting<T> {
    pub kind: SettingKind,
    /// Detector read out by a single-quadrature setting.
    pub mode: usize,
    pub angle_a: T,
    pub angle_b: T,
    /// `(c_a, c_b)` weights of Alice's and Bob's outputs for joint settings.
    pub coefficients: (T, T),
}

impl<T: Real> MeasurementSetting<T> {
    pub fn single(mode: usize, angle: T) -> Self {
        let (angle_a, angle_b) = if mode == ALICE {
            (angle, T::zero())
        } else {
            (T::zero(), angle)
        };
        Self {
            kind: SettingKind::SingleQuadrature,
            mode,
            angle_a,
            angle_b,
            coefficients: (T::zero(), T::zero()),
        }
    }

    pub fn joint(angle_a: T, angle_b: T, c_a: T, c_b: T) -> Result<Self> {
        let s = Self {
            kind: SettingKind::JointCombination,
            mode: ALICE,
            angle_a,
            angle_b,
            coefficients: (c_a, c_b),
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.angle_a.is_finite() || !self.angle_b.is_finite() {
            return Err(Error::invalid("setting angles must be finite"));
        }
        match self.kind {
            SettingKind::SingleQuadrature if self.mode > BOB => Err(Error::invalid(format!(
                "setting mode {} out of range for two modes",
                self.mode
            ))),
            SettingKind::JointCombination
                if self.coefficients.0 == T::zero() && self.coefficients.1 == T::zero() =>
            {
                Err(Error::invalid("joint setting needs a non-zero coefficient"))
            }
            _ => Ok(()),
        }
    }

    /// Local-oscillator angle used at `(Alice, Bob)` while recording.
    fn record_angles(&self) -> (T, T) {
        match self.kind {
            // idle detector mirrors the active one
            SettingKind::SingleQuadrature if self.mode == ALICE => (self.angle_a, self.angle_a),
            SettingKind::SingleQuadrature => (self.angle_b, self.angle_b),
            SettingKind::JointCombination => (self.angle_a, self.angle_b),
        }
    }

    /// Weights applied to the `(Alice, Bob)` record.
    fn weights(&self) -> (T, T) {
        match self.kind {
            SettingKind::SingleQuadrature if self.mode == ALICE => (T::one(), T::zero()),
            SettingKind::SingleQuadrature => (T::zero(), T::one()),
            SettingKind::JointCombination => self.coefficients,
        }
    }

    /// Quadrature-space vector of the measured linear form, excluding dark noise.
    pub fn quadrature_vector(&self) -> Vec<T> {
        let (wa, wb) = self.weights();
        let (aa, ab) = self.record_angles();
        let mut v = vec![T::zero(); 4];
        v[2 * ALICE] = wa * aa.cos();
        v[2 * ALICE + 1] = wa * aa.sin();
        v[2 * BOB] = wb * ab.cos();
        v[2 * BOB + 1] = wb * ab.sin();
        v
    }

    /// Variance of the setting's output for `state` with per-detector dark noise.
    pub fn analytic_variance(&self, state: &CovarianceMatrix<T>, dark_noise: T) -> T {
        let v = self.quadrature_vector();
        let (wa, wb) = self.weights();
        bilinear(state, &v, &v) + dark_noise * (wa * wa + wb * wb)
    }

    pub fn label(&self) -> String {
        fn quad_name<T: Real>(angle: T) -> String {
            if angle == T::zero() {
                "X".into()
            } else if angle == T::FRAC_PI_2() {
                "P".into()
            } else {
                format!("Q({angle})")
            }
        }
        match self.kind {
            SettingKind::SingleQuadrature => {
                let (angle, party) = if self.mode == ALICE {
                    (self.angle_a, "A")
                } else {
                    (self.angle_b, "B")
                };
                format!("{}_{party}", quad_name(angle))
            }
            SettingKind::JointCombination => {
                let (ca, cb) = self.coefficients;
                let term = |c: T, name: String, first: bool| -> String {
                    let sign = if c < T::zero() {
                        "-"
                    } else if first {
                        ""
                    } else {
                        "+"
                    };
                    let mag = c.abs();
                    if mag == T::one() {
                        format!("{sign}{name}")
                    } else {
                        format!("{sign}{mag}*{name}")
                    }
                };
                let a = format!("{}_A", quad_name(self.angle_a));
                let b = format!("{}_B", quad_name(self.angle_b));
                match (ca == T::zero(), cb == T::zero()) {
                    (true, _) => term(cb, b, true),
                    (_, true) => term(ca, a, true),
                    _ => format!("{}{}", term(ca, a, true), term(cb, b, false)),
                }
            }
        }
    }
}

/// The six campaign settings: `X_A, P_A, X_B, P_B, X_A − X_B, P_A + P_B`.
pub fn canonical_settings<T: Real>() -> [MeasurementSetting<T>; 6] {
    let x = T::zero();
    let p = T::FRAC_PI_2();
    let one = T::one();
    [
        MeasurementSetting::single(ALICE, x),
        MeasurementSetting::single(ALICE, p),
        MeasurementSetting::single(BOB, x),
        MeasurementSetting::single(BOB, p),
        MeasurementSetting::joint(x, x, one, -one).expect("valid"),
        MeasurementSetting::joint(p, p, one, one).expect("valid"),
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct SampleBatch<T> {
    pub setting: MeasurementSetting<T>,
    pub values: Vec<T>,
    pub seed: u64,
    pub n: usize,
}

/// Simultaneous `(Alice, Bob)` samples of one run.
struct Record {
    alice: Vec<f64>,
    bob: Vec<f64>,
}

fn validate_sampling<T: Real>(state: &CovarianceMatrix<T>, n: usize, dark_noise: T) -> Result<()> {
    state.require_two_mode()?;
    if n < 2 {
        return Err(Error::invalid(format!("need at least 2 samples, got {n}")));
    }
    if !(dark_noise >= T::zero()) || !dark_noise.is_finite() {
        return Err(Error::invalid(format!(
            "dark_noise must be finite and >= 0, got {dark_noise}"
        )));
    }
    if !is_physical(state) {
        return Err(Error::invalid("cannot sample an unphysical state"));
    }
    Ok(())
}

fn detector_unit<T: Real>(mode: usize, angle: T) -> Vec<T> {
    let mut v = vec![T::zero(); 4];
    v[2 * mode] = angle.cos();
    v[2 * mode + 1] = angle.sin();
    v
}

fn record<T: Real>(
    state: &CovarianceMatrix<T>,
    angles: (T, T),
    n: usize,
    seed: u64,
    run: u64,
    dark_noise: f64,
) -> Record {
    let ua = detector_unit(ALICE, angles.0);
    let ub = detector_unit(BOB, angles.1);
    let aa = bilinear(state, &ua, &ua).as_f64();
    let ab = bilinear(state, &ua, &ub).as_f64();
    let bb = bilinear(state, &ub, &ub).as_f64();
    let root = Matrix::from_rows(&[vec![aa, ab], vec![ab, bb]])
        .expect("2x2")
        .symmetric_sqrt();
    let (r00, r01, r11) = (root[(0, 0)], root[(0, 1)], root[(1, 1)]);
    let dark = dark_noise.sqrt();

    let chunks = n.div_ceil(CHUNK_LEN);
    let parts: Vec<Vec<(f64, f64)>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let len = CHUNK_LEN.min(n - c * CHUNK_LEN);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream((run << 32) | c as u64);
            (0..len)
                .map(|_| {
                    let z1: f64 = rng.sample(StandardNormal);
                    let z2: f64 = rng.sample(StandardNormal);
                    let w1: f64 = rng.sample(StandardNormal);
                    let w2: f64 = rng.sample(StandardNormal);
                    (
                        r00 * z1 + r01 * z2 + dark * w1,
                        r01 * z1 + r11 * z2 + dark * w2,
                    )
                })
                .collect()
        })
        .collect();

    let mut alice = Vec::with_capacity(n);
    let mut bob = Vec::with_capacity(n);
    for (a, b) in parts.into_iter().flatten() {
        alice.push(a);
        bob.push(b);
    }
    Record { alice, bob }
}

fn combine<T: Real>(rec: &Record, weights: (T, T)) -> Vec<f64> {
    let (wa, wb) = (weights.0.as_f64(), weights.1.as_f64());
    rec.alice
        .iter()
        .zip(&rec.bob)
        .map(|(&a, &b)| wa * a + wb * b)
        .collect()
}

/// Draws `n` samples of the setting's linear form, plus dark noise of
/// variance `dark_noise` on every detector involved.
pub fn sample_quadratures<T: Real>(
    state: &CovarianceMatrix<T>,
    setting: &MeasurementSetting<T>,
    n: usize,
    seed: u64,
    dark_noise: T,
) -> Result<SampleBatch<T>> {
    validate_sampling(state, n, dark_noise)?;
    setting.validate()?;
    let rec = record(
        state,
        setting.record_angles(),
        n,
        seed,
        RUN_X,
        dark_noise.as_f64(),
    );
    let values = combine(&rec, setting.weights())
        .into_iter()
        .map(T::lit)
        .collect();
    Ok(SampleBatch {
        setting: *setting,
        values,
        seed,
        n,
    })
}

fn unbiased_variance(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let (count, sum) = values
        .clone()
        .fold((0usize, 0.0), |(c, s), v| (c + 1, s + v));
    let mean = sum / count as f64;
    let ss: f64 = values.map(|v| (v - mean) * (v - mean)).sum();
    ss / (count as f64 - 1.0)
}

/// Unbiased estimator `Σ(x − x̄)² / (n − 1)`.
pub fn sample_variance<T: Real>(batch: &SampleBatch<T>) -> Result<T> {
    if batch.values.len() < 2 {
        return Err(Error::invalid("sample variance needs at least 2 values"));
    }
    Ok(T::lit(unbiased_variance(
        batch.values.iter().map(|v| v.as_f64()),
    )))
}

/// Six-setting campaign with its raw samples.
#[derive(Debug, Clone, PartialEq)]
pub struct Campaign<T> {
    pub batches: Vec<SampleBatch<T>>,
    pub measurements: MeasurementSet<T>,
}

fn campaign_metadata(n: usize, seed: u64, dark_noise: f64) -> BTreeMap<String, serde_json::Value> {
    let mut meta = crate::dataset::analyzer_metadata();
    meta.insert("seed".into(), seed.into());
    meta.insert("n_per_setting".into(), n.into());
    meta.insert("dark_noise".into(), dark_noise.into());
    meta.insert("recording".into(), "simultaneous per quadrature".into());
    meta
}

fn campaign_records<T: Real>(
    state: &CovarianceMatrix<T>,
    n: usize,
    seed: u64,
    dark_noise: T,
) -> Result<(Record, Record)> {
    validate_sampling(state, n, dark_noise)?;
    let d = dark_noise.as_f64();
    let x = record(state, (T::zero(), T::zero()), n, seed, RUN_X, d);
    let p = record(state, (T::FRAC_PI_2(), T::FRAC_PI_2()), n, seed, RUN_P, d);
    Ok((x, p))
}

fn measurements_from<T: Real>(
    x: &Record,
    p: &Record,
    n: usize,
    seed: u64,
    dark_noise: T,
) -> MeasurementSet<T> {
    let var = |v: &[f64]| T::lit(unbiased_variance(v.iter().copied()));
    let pair = |r: &Record, sign: f64| {
        T::lit(unbiased_variance(
            r.alice.iter().zip(&r.bob).map(move |(&a, &b)| a + sign * b),
        ))
    };
    MeasurementSet {
        var_xa: var(&x.alice),
        var_pa: var(&p.alice),
        var_xb: var(&x.bob),
        var_pb: var(&p.bob),
        var_x_diff: pair(x, -1.0),
        var_p_sum: pair(p, 1.0),
        relative_error: T::lit((2.0 / n as f64).sqrt()),
        metadata: campaign_metadata(n, seed, dark_noise.as_f64()),
    }
}

/// Simulates the six-measurement campaign and returns the estimated variances.
///
/// Both detectors record together, one run per quadrature, so each block's
/// three variances share samples, as they do with simultaneous detection.
/// `relative_error` is set to `√(2/n)`.
pub fn measure_campaign<T: Real>(
    state: &CovarianceMatrix<T>,
    n_per_setting: usize,
    seed: u64,
    dark_noise: T,
) -> Result<MeasurementSet<T>> {
    let (x, p) = campaign_records(state, n_per_setting, seed, dark_noise)?;
    Ok(measurements_from(&x, &p, n_per_setting, seed, dark_noise))
}

/// Like [`measure_campaign`] but also keeps the per-setting samples.
pub fn run_campaign<T: Real>(
    state: &CovarianceMatrix<T>,
    n_per_setting: usize,
    seed: u64,
    dark_noise: T,
) -> Result<Campaign<T>> {
    let (x, p) = campaign_records(state, n_per_setting, seed, dark_noise)?;
    let measurements = measurements_from(&x, &p, n_per_setting, seed, dark_noise);
    let batches = canonical_settings::<T>()
        .into_iter()
        .map(|setting| {
            let rec = if setting.record_angles().0 == T::zero() {
                &x
            } else {
                &p
            };
            SampleBatch {
                setting,
                values: combine(rec, setting.weights())
                    .into_iter()
                    .map(T::lit)
                    .collect(),
                seed,
                n: n_per_setting,
            }
        })
        .collect();
    Ok(Campaign {
        batches,
        measurements,
    })
}

/// Writes batches as CSV with header `setting,value`.
pub fn write_batches_csv<T: Real, W: Write>(batches: &[SampleBatch<T>], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["setting", "value"])?;
    for b in batches {
        let label = b.setting.label();
        for v in &b.values {
            w.write_record([label.as_str(), &v.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}
