//! Physical source parameters, the forward loss model and the inverse fit of
//! the overall efficiency.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::{build_epr_source, is_physical, CovarianceMatrix};
use crate::optimize::{nelder_mead, SimplexOptions};
use crate::scalar::Real;

/// Knobs of the two-resonator source and its detection chain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real", default, deny_unknown_fields)]
pub struct SourceParams<T> {
    /// Squeezing parameter of the monolithic resonator.
    pub r1: T,
    /// Squeezing parameter of the hemilithic resonator.
    pub r2: T,
    pub relative_phase: T,
    pub transmittance: T,
    pub eta_prep: T,
    pub eta_det_a: T,
    pub eta_det_b: T,
    /// Additive detector noise per homodyne output, in vacuum units.
    pub dark_noise: T,
}

impl<T: Real> Default for SourceParams<T> {
    fn default() -> Self {
        Self {
            r1: T::zero(),
            r2: T::zero(),
            relative_phase: T::FRAC_PI_2(),
            transmittance: T::lit(0.5),
            eta_prep: T::one(),
            eta_det_a: T::one(),
            eta_det_b: T::one(),
            dark_noise: T::zero(),
        }
    }
}

impl<T: Real> SourceParams<T> {
    /// Symmetric chain with a single overall efficiency `xi`, placed on the
    /// preparation side.
    pub fn uniform(r1: T, r2: T, xi: T) -> Self {
        Self {
            r1,
            r2,
            eta_prep: xi,
            ..Self::default()
        }
    }

    /// Product of preparation and the mean detection efficiency.
    pub fn overall_efficiency(&self) -> T {
        self.eta_prep * (self.eta_det_a + self.eta_det_b) * T::lit(0.5)
    }

    pub fn validate(&self) -> Result<()> {
        let nonneg = [
            ("r1", self.r1),
            ("r2", self.r2),
            ("dark_noise", self.dark_noise),
        ];
        for (name, v) in nonneg {
            if !(v >= T::zero()) || !v.is_finite() {
                return Err(Error::invalid(format!(
                    "{name}: must be finite and >= 0, got {v}"
                )));
            }
        }
        let effs = [
            ("eta_prep", self.eta_prep),
            ("eta_det_a", self.eta_det_a),
            ("eta_det_b", self.eta_det_b),
        ];
        for (name, v) in effs {
            if !(v > T::zero() && v <= T::one()) {
                return Err(Error::invalid(format!(
                    "{name}: must lie in (0, 1], got {v}"
                )));
            }
        }
        if !(self.transmittance >= T::zero() && self.transmittance <= T::one()) {
            return Err(Error::invalid(format!(
                "transmittance: must lie in [0, 1], got {}",
                self.transmittance
            )));
        }
        if !self.relative_phase.is_finite() {
            return Err(Error::invalid("relative_phase: must be finite"));
        }
        Ok(())
    }
}

/// Result of fitting the uniform-efficiency model to a measured matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct LossFit<T> {
    pub xi: T,
    pub r1: T,
    pub r2: T,
    /// RMS mismatch over the eight non-zero entries.
    pub residual: T,
    pub iterations: usize,
    pub converged: bool,
}

impl<T: Real> LossFit<T> {
    pub fn params(&self) -> SourceParams<T> {
        SourceParams::uniform(self.r1, self.r2, self.xi)
    }
}

pub fn forward_covariance<T: Real>(params: &SourceParams<T>) -> Result<CovarianceMatrix<T>> {
    build_epr_source(params)
}

/// Detected `(squeezed, anti-squeezed)` variances of one source behind an
/// overall efficiency `xi`: `v∓ = ξ e^{∓2r} + 1 − ξ`.
pub fn detected_variances<T: Real>(r: T, xi: T) -> (T, T) {
    let two = T::lit(2.0);
    let vac = T::one() - xi;
    (xi * (-two * r).exp() + vac, xi * (two * r).exp() + vac)
}

/// Variance ratio to vacuum in dB (negative below vacuum).
pub fn to_db<T: Real>(variance: T) -> T {
    T::lit(10.0) * variance.log10()
}

/// Variance relative to vacuum for a level given in dB.
pub fn from_db<T: Real>(db: T) -> T {
    T::lit(10.0).powf(db / T::lit(10.0))
}

/// Entries compared by the fit: the diagonal and the X–X / P–P cross terms.
const FIT_ENTRIES: [(usize, usize); 8] = [
    (0, 0),
    (1, 1),
    (2, 2),
    (3, 3),
    (0, 2),
    (2, 0),
    (1, 3),
    (3, 1),
];

const XI_GRID_START: f64 = 0.70;
const XI_GRID_STEP: f64 = 0.01;
const XI_GRID_POINTS: usize = 31;
const MAX_EVALUATIONS: usize = 10_000;
/// Simplex spread at which refinement stops.
const PARAM_TOL: f64 = 1e-10;

fn sum_sq<T: Real>(model: &CovarianceMatrix<T>, target: &CovarianceMatrix<T>) -> T {
    FIT_ENTRIES.iter().fold(T::zero(), |acc, &(i, j)| {
        let d = model.get(i, j) - target.get(i, j);
        acc + d * d
    })
}

fn check_fit_input<T: Real>(gamma: &CovarianceMatrix<T>) -> Result<()> {
    gamma.require_two_mode()?;
    let scale = gamma.entries().max_abs();
    for i in [0, 2] {
        for j in [1, 3] {
            if gamma.get(i, j).abs() > T::tol(1e-9) * scale {
                return Err(Error::invalid(format!(
                    "fit expects zero X-P cross terms, entry ({i}, {j}) = {}",
                    gamma.get(i, j)
                )));
            }
        }
    }
    if !is_physical(gamma) {
        return Err(Error::invalid(
            "fit input violates the uncertainty principle (symplectic eigenvalue < 1)",
        ));
    }
    Ok(())
}

/// Fits `(r1, r2, ξ)` of the uniform-efficiency source to `gamma`.
///
/// Stage one scans ξ over `[0.70, 1.00]` in steps of 0.01, seeding each `r`
/// from the anti-squeezed joint variance of its source. Stage two refines the
/// best grid point with a bounded simplex search. Lowest residual wins. Ties
/// go to the lower ξ.
pub fn fit_efficiency<T: Real>(gamma: &CovarianceMatrix<T>) -> Result<LossFit<T>> {
    check_fit_input(gamma)?;
    let half = T::lit(0.5);
    // Var(X_A + X_B)/2 carries source 2's anti-squeezing, Var(P_A − P_B)/2 source 1's.
    let anti2 = half * (gamma.get(0, 0) + gamma.get(2, 2)) + gamma.get(0, 2);
    let anti1 = half * (gamma.get(1, 1) + gamma.get(3, 3)) - gamma.get(1, 3);
    let seed_r = |anti: T, xi: T| -> T {
        let ratio = (anti - (T::one() - xi)) / xi;
        if ratio > T::one() {
            half * ratio.ln()
        } else {
            T::zero()
        }
    };

    let evaluations = std::cell::Cell::new(0usize);
    let mut objective = |p: &[T]| -> T {
        evaluations.set(evaluations.get() + 1);
        match forward_covariance(&SourceParams::uniform(p[0], p[1], p[2])) {
            Ok(model) => sum_sq(&model, gamma),
            Err(_) => T::infinity(),
        }
    };

    let mut best: Option<(Vec<T>, T)> = None;
    for k in 0..XI_GRID_POINTS {
        let xi = T::lit(XI_GRID_START + XI_GRID_STEP * k as f64);
        let p = vec![seed_r(anti1, xi), seed_r(anti2, xi), xi];
        let v = objective(&p);
        if best.as_ref().is_none_or(|(_, bv)| v < *bv) {
            best = Some((p, v));
        }
    }
    let (mut x, mut value) = best.expect("grid is non-empty");

    let project = |p: &mut [T]| {
        p[0] = p[0].max(T::zero());
        p[1] = p[1].max(T::zero());
        p[2] = p[2].max(T::lit(1e-6)).min(T::one());
    };
    let mut step = vec![T::lit(0.05), T::lit(0.05), T::lit(0.01)];
    let mut converged = false;
    for _ in 0..4 {
        let budget = MAX_EVALUATIONS.saturating_sub(evaluations.get());
        if budget == 0 {
            converged = false;
            break;
        }
        let res = nelder_mead(
            &mut objective,
            &x,
            &step,
            project,
            SimplexOptions {
                x_tol: T::tol(PARAM_TOL),
                max_evaluations: budget,
            },
        );
        let moved = res
            .x
            .iter()
            .zip(&x)
            .fold(T::zero(), |acc, (&a, &b)| acc.max((a - b).abs()));
        converged = res.converged;
        if res.value <= value {
            x = res.x;
            value = res.value;
        }
        if !converged || moved < T::tol(1e-6) {
            break;
        }
        step.iter_mut().for_each(|s| *s = *s * T::lit(0.1));
    }

    let n = T::from_usize(FIT_ENTRIES.len()).unwrap();
    Ok(LossFit {
        r1: x[0],
        r2: x[1],
        xi: x[2],
        residual: (value / n).sqrt(),
        iterations: evaluations.get(),
        converged,
    })
}

/// Detection efficiency `ξ / η` implied by an overall and a preparation efficiency.
pub fn efficiency_decomposition<T: Real>(xi: T, eta_prep: T) -> Result<T> {
    if !(eta_prep > T::zero() && eta_prep <= T::one()) {
        return Err(Error::invalid(format!(
            "eta_prep must lie in (0, 1], got {eta_prep}"
        )));
    }
    if !(xi > T::zero()) {
        return Err(Error::invalid(format!("xi must be > 0, got {xi}")));
    }
    if xi > eta_prep {
        return Err(Error::invalid(format!(
            "xi = {xi} exceeds eta_prep = {eta_prep}: detection efficiency would exceed 1"
        )));
    }
    Ok(xi / eta_prep)
}

/// Efficiency of a chain of two fractional losses and an interference with
/// fringe visibility `V` (mode-mismatch transmission `V²`).
pub fn budget_prep_efficiency<T: Real>(
    internal_loss: T,
    propagation_loss: T,
    visibility: T,
) -> Result<T> {
    for (name, v) in [
        ("internal_loss", internal_loss),
        ("propagation_loss", propagation_loss),
    ] {
        if !(v >= T::zero() && v < T::one()) {
            return Err(Error::invalid(format!(
                "{name} must lie in [0, 1), got {v}"
            )));
        }
    }
    if !(visibility > T::zero() && visibility <= T::one()) {
        return Err(Error::invalid(format!(
            "visibility must lie in (0, 1], got {visibility}"
        )));
    }
    Ok((T::one() - internal_loss) * (T::one() - propagation_loss) * visibility * visibility)
}
