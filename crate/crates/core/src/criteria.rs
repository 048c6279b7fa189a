//! Reid steering products and the Duan inseparability sum.
//!
//! Conditional variances are `Var(O_target − g · O_steering)`. For direction
//! `B|A` Bob is the target and Alice steers. The P gain is stored as the
//! literal multiplier, so `g_p = −1` evaluates `Var(P_B + P_A)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::{CovarianceMatrix, Quadrature, ALICE, BOB};
use crate::scalar::Real;

/// Steering threshold for the Reid product in vacuum units.
pub const REID_BOUND: f64 = 1.0;
/// Separability threshold for the Duan sum in vacuum units.
pub const DUAN_BOUND: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Direction {
    /// Alice steers Bob.
    #[serde(rename = "B|A")]
    BGivenA,
    /// Bob steers Alice.
    #[serde(rename = "A|B")]
    AGivenB,
}

impl Direction {
    /// `(target, steering)` modes.
    pub fn modes(self) -> (usize, usize) {
        match self {
            Direction::BGivenA => (BOB, ALICE),
            Direction::AGivenB => (ALICE, BOB),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct GainPair<T> {
    pub g_x: T,
    pub g_p: T,
}

impl<T: Real> GainPair<T> {
    pub fn new(g_x: T, g_p: T) -> Result<Self> {
        if !g_x.is_finite() || !g_p.is_finite() {
            return Err(Error::invalid("gains must be finite"));
        }
        Ok(Self { g_x, g_p })
    }

    /// `g_X = 1`, `g_P = −1`: the subtract/add configuration of the traces.
    pub fn unit() -> Self {
        Self {
            g_x: T::one(),
            g_p: -T::one(),
        }
    }

    pub fn get(&self, quad: Quadrature) -> T {
        match quad {
            Quadrature::X => self.g_x,
            Quadrature::P => self.g_p,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Gains<T> {
    Fixed(GainPair<T>),
    Optimal,
}

struct Moments<T> {
    var_target: T,
    var_steering: T,
    cov: T,
}

fn moments<T: Real>(
    state: &CovarianceMatrix<T>,
    quad: Quadrature,
    direction: Direction,
) -> Result<Moments<T>> {
    state.require_two_mode()?;
    let (t, s) = direction.modes();
    Ok(Moments {
        var_target: state.variance(t, quad),
        var_steering: state.variance(s, quad),
        cov: state.covariance(t, quad, s, quad),
    })
}

/// `Var(O_t − g O_s) = Var O_t + g² Var O_s − 2 g Cov(O_t, O_s)`.
pub fn conditional_variance<T: Real>(
    state: &CovarianceMatrix<T>,
    quad: Quadrature,
    direction: Direction,
    gain: T,
) -> Result<T> {
    let m = moments(state, quad, direction)?;
    Ok(m.var_target + gain * gain * m.var_steering - T::lit(2.0) * gain * m.cov)
}

/// The gain `Cov(O_A, O_B) / Var O_steering` minimizing the conditional variance.
pub fn optimal_gain<T: Real>(
    state: &CovarianceMatrix<T>,
    quad: Quadrature,
    direction: Direction,
) -> Result<T> {
    let m = moments(state, quad, direction)?;
    if !(m.var_steering > T::zero()) {
        return Err(Error::DegenerateInput(format!(
            "steering-party variance of {quad:?} is {}",
            m.var_steering
        )));
    }
    Ok(m.cov / m.var_steering)
}

/// Minimal conditional variance in closed form: `Var O_t − Cov² / Var O_s`.
pub fn min_conditional_variance<T: Real>(
    state: &CovarianceMatrix<T>,
    quad: Quadrature,
    direction: Direction,
) -> Result<T> {
    let m = moments(state, quad, direction)?;
    if !(m.var_steering > T::zero()) {
        return Err(Error::DegenerateInput(format!(
            "steering-party variance of {quad:?} is {}",
            m.var_steering
        )));
    }
    Ok(m.var_target - m.cov * m.cov / m.var_steering)
}

pub fn reid_product<T: Real>(
    state: &CovarianceMatrix<T>,
    direction: Direction,
    gains: Gains<T>,
) -> Result<T> {
    match gains {
        Gains::Optimal => Ok(min_conditional_variance(state, Quadrature::X, direction)?
            * min_conditional_variance(state, Quadrature::P, direction)?),
        Gains::Fixed(g) => Ok(
            conditional_variance(state, Quadrature::X, direction, g.g_x)?
                * conditional_variance(state, Quadrature::P, direction, g.g_p)?,
        ),
    }
}

/// `Var(X_A − X_B) + Var(P_A + P_B)`.
pub fn duan_sum<T: Real>(state: &CovarianceMatrix<T>) -> Result<T> {
    state.require_two_mode()?;
    let g = |i, j| state.get(i, j);
    let two = T::lit(2.0);
    let x_diff = g(0, 0) + g(2, 2) - two * g(0, 2);
    let p_sum = g(1, 1) + g(3, 3) + two * g(1, 3);
    Ok(x_diff + p_sum)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct ConditionalVariances<T> {
    pub x_b_given_a: T,
    pub p_b_given_a: T,
    pub x_a_given_b: T,
    pub p_a_given_b: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct CriteriaReport<T> {
    pub reid_b_given_a: T,
    pub reid_a_given_b: T,
    pub duan_sum: T,
    /// Reid product `B|A` at gains `(1, −1)`.
    pub unit_gain_product: T,
    pub optimal_gains_b_given_a: GainPair<T>,
    pub optimal_gains_a_given_b: GainPair<T>,
    /// Optimal-gain conditional variances.
    pub conditional_variances: ConditionalVariances<T>,
    pub steering_b_given_a: bool,
    pub steering_a_given_b: bool,
    pub duan_inseparable: bool,
    /// `√(V_X^{B|A} · V_P^{B|A})`, the radius² of the conditional uncertainty
    /// disc relative to vacuum.
    pub conditional_uncertainty_ratio: T,
}

pub fn criteria_report<T: Real>(state: &CovarianceMatrix<T>) -> Result<CriteriaReport<T>> {
    use Direction::*;
    use Quadrature::*;
    let cv = ConditionalVariances {
        x_b_given_a: min_conditional_variance(state, X, BGivenA)?,
        p_b_given_a: min_conditional_variance(state, P, BGivenA)?,
        x_a_given_b: min_conditional_variance(state, X, AGivenB)?,
        p_a_given_b: min_conditional_variance(state, P, AGivenB)?,
    };
    let reid_ba = cv.x_b_given_a * cv.p_b_given_a;
    let reid_ab = cv.x_a_given_b * cv.p_a_given_b;
    let duan = duan_sum(state)?;
    Ok(CriteriaReport {
        reid_b_given_a: reid_ba,
        reid_a_given_b: reid_ab,
        duan_sum: duan,
        unit_gain_product: reid_product(state, BGivenA, Gains::Fixed(GainPair::unit()))?,
        optimal_gains_b_given_a: GainPair {
            g_x: optimal_gain(state, X, BGivenA)?,
            g_p: optimal_gain(state, P, BGivenA)?,
        },
        optimal_gains_a_given_b: GainPair {
            g_x: optimal_gain(state, X, AGivenB)?,
            g_p: optimal_gain(state, P, AGivenB)?,
        },
        conditional_variances: cv,
        steering_b_given_a: reid_ba < T::lit(REID_BOUND),
        steering_a_given_b: reid_ab < T::lit(REID_BOUND),
        duan_inseparable: duan < T::lit(DUAN_BOUND),
        conditional_uncertainty_ratio: reid_ba.max(T::zero()).sqrt(),
    })
}

/// Reid products and conditional variances at caller-chosen gains.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct GainEvaluation<T> {
    pub gains: GainPair<T>,
    pub reid_b_given_a: T,
    pub reid_a_given_b: T,
    pub conditional_variances: ConditionalVariances<T>,
}

pub fn evaluate_gains<T: Real>(
    state: &CovarianceMatrix<T>,
    gains: GainPair<T>,
) -> Result<GainEvaluation<T>> {
    use Direction::*;
    use Quadrature::*;
    let cv = ConditionalVariances {
        x_b_given_a: conditional_variance(state, X, BGivenA, gains.g_x)?,
        p_b_given_a: conditional_variance(state, P, BGivenA, gains.g_p)?,
        x_a_given_b: conditional_variance(state, X, AGivenB, gains.g_x)?,
        p_a_given_b: conditional_variance(state, P, AGivenB, gains.g_p)?,
    };
    Ok(GainEvaluation {
        gains,
        reid_b_given_a: cv.x_b_given_a * cv.p_b_given_a,
        reid_a_given_b: cv.x_a_given_b * cv.p_a_given_b,
        conditional_variances: cv,
    })
}
