//! Zero-mean Gaussian states in the covariance-matrix picture.
//!
//! Quadratures are ordered `(X₁, P₁, X₂, P₂, …)` and variances are expressed in
//! units of the vacuum variance, so the vacuum of `n` modes is the `2n × 2n`
//! identity and a physical state has all symplectic eigenvalues `≥ 1`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{det2, determinant, Matrix};
use crate::loss_model::SourceParams;
use crate::scalar::Real;

/// Absolute slack on symplectic eigenvalues when deciding physicality.
pub const PHYSICALITY_TOL: f64 = 1e-9;

/// Tag written into serialized covariance matrices.
pub const ORDERING: &str = "x1p1x2p2";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Quadrature {
    X,
    P,
}

impl Quadrature {
    pub(crate) fn offset(self) -> usize {
        match self {
            Quadrature::X => 0,
            Quadrature::P => 1,
        }
    }
}

/// Row/column index of a quadrature of a mode.
pub fn quad_index(mode: usize, quad: Quadrature) -> usize {
    2 * mode + quad.offset()
}

/// Second-moment matrix of a zero-mean Gaussian state.
///
/// Construction validates squareness, even dimension, finiteness, symmetry and
/// positive definiteness. Physicality (uncertainty principle) is checked on
/// demand with [`is_physical`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CovarianceJson<T>", into = "CovarianceJson<T>")]
#[serde(bound = "T: Real")]
pub struct CovarianceMatrix<T> {
    n_modes: usize,
    entries: Matrix<T>,
}

#[derive(Serialize, Deserialize)]
#[serde(bound = "T: Real")]
struct CovarianceJson<T> {
    n_modes: usize,
    ordering: String,
    entries: Vec<Vec<T>>,
}

impl<T: Real> TryFrom<CovarianceJson<T>> for CovarianceMatrix<T> {
    type Error = Error;

    fn try_from(raw: CovarianceJson<T>) -> Result<Self> {
        if raw.ordering != ORDERING {
            return Err(Error::invalid(format!(
                "ordering: expected \"{ORDERING}\", got \"{}\"",
                raw.ordering
            )));
        }
        let entries = Matrix::from_rows(&raw.entries)
            .ok_or_else(|| Error::invalid("entries: rows have different lengths"))?;
        let state = CovarianceMatrix::new(entries)?;
        if state.n_modes != raw.n_modes {
            return Err(Error::invalid(format!(
                "n_modes: declared {} but entries describe {} modes",
                raw.n_modes, state.n_modes
            )));
        }
        Ok(state)
    }
}

impl<T: Real> From<CovarianceMatrix<T>> for CovarianceJson<T> {
    fn from(c: CovarianceMatrix<T>) -> Self {
        CovarianceJson {
            n_modes: c.n_modes,
            ordering: ORDERING.to_string(),
            entries: c.entries.to_rows(),
        }
    }
}

fn check_symmetric<T: Real>(m: &Matrix<T>) -> Result<()> {
    let tol = T::tol(1e-12);
    for i in 0..m.nrows() {
        for j in (i + 1)..m.ncols() {
            let (a, b) = (m[(i, j)], m[(j, i)]);
            if (a - b).abs() > tol * T::one().max(a.abs()) {
                return Err(Error::invalid(format!(
                    "entries: matrix is not symmetric at ({i}, {j}): {a} vs {b}"
                )));
            }
        }
    }
    Ok(())
}

impl<T: Real> CovarianceMatrix<T> {
    pub fn new(entries: Matrix<T>) -> Result<Self> {
        let dim = entries.nrows();
        if !entries.is_square() || dim == 0 || !dim.is_multiple_of(2) {
            return Err(Error::invalid(format!(
                "entries: expected a square 2n x 2n matrix, got {}x{}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        if !entries.is_finite() {
            return Err(Error::invalid("entries: non-finite value"));
        }
        check_symmetric(&entries)?;
        if entries.cholesky().is_none() {
            return Err(Error::NotPositiveDefinite(
                "covariance matrix has a non-positive eigenvalue".into(),
            ));
        }
        Ok(Self {
            n_modes: dim / 2,
            entries,
        })
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let m = Matrix::from_rows(rows).ok_or_else(|| Error::invalid("entries: ragged rows"))?;
        Self::new(m)
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn entries(&self) -> &Matrix<T> {
        &self.entries
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.entries[(i, j)]
    }

    pub fn variance(&self, mode: usize, quad: Quadrature) -> T {
        let k = quad_index(mode, quad);
        self.entries[(k, k)]
    }

    pub fn covariance(
        &self,
        mode_a: usize,
        quad_a: Quadrature,
        mode_b: usize,
        quad_b: Quadrature,
    ) -> T {
        self.entries[(quad_index(mode_a, quad_a), quad_index(mode_b, quad_b))]
    }

    pub(crate) fn require_two_mode(&self) -> Result<()> {
        if self.n_modes != 2 {
            return Err(Error::invalid(format!(
                "expected a two-mode state, got {} modes",
                self.n_modes
            )));
        }
        Ok(())
    }

    fn check_mode(&self, mode: usize) -> Result<()> {
        if mode >= self.n_modes {
            return Err(Error::invalid(format!(
                "mode {mode} out of range for {} modes",
                self.n_modes
            )));
        }
        Ok(())
    }
}

/// `2n × 2n` real matrix preserving the symplectic form.
#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticTransform<T> {
    n_modes: usize,
    matrix: Matrix<T>,
}

/// Block-diagonal symplectic form with `[[0, 1], [-1, 0]]` per mode.
pub fn symplectic_form<T: Real>(n_modes: usize) -> Matrix<T> {
    let mut omega = Matrix::zeros(2 * n_modes, 2 * n_modes);
    for k in 0..n_modes {
        omega[(2 * k, 2 * k + 1)] = T::one();
        omega[(2 * k + 1, 2 * k)] = -T::one();
    }
    omega
}

impl<T: Real> SymplecticTransform<T> {
    pub fn identity(n_modes: usize) -> Self {
        Self {
            n_modes,
            matrix: Matrix::identity(2 * n_modes),
        }
    }

    /// Wraps an arbitrary matrix after checking `S Ω Sᵀ = Ω` to `tol`.
    pub fn from_matrix(matrix: Matrix<T>, tol: T) -> Result<Self> {
        let dim = matrix.nrows();
        if !matrix.is_square() || dim == 0 || !dim.is_multiple_of(2) {
            return Err(Error::invalid("symplectic matrix must be square 2n x 2n"));
        }
        let s = Self {
            n_modes: dim / 2,
            matrix,
        };
        let err = s.form_error();
        if !(err <= tol) {
            return Err(Error::invalid(format!(
                "matrix is not symplectic: |S Omega S^T - Omega| = {err}"
            )));
        }
        Ok(s)
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn matrix(&self) -> &Matrix<T> {
        &self.matrix
    }

    /// Largest entrywise deviation of `S Ω Sᵀ` from `Ω`.
    pub fn form_error(&self) -> T {
        let omega = symplectic_form::<T>(self.n_modes);
        self.matrix.congruence(&omega).max_abs_diff(&omega)
    }

    /// Matrix product `self · rhs`: applying the result is `rhs` first, then `self`.
    pub fn compose(&self, rhs: &Self) -> Result<Self> {
        if self.n_modes != rhs.n_modes {
            return Err(Error::invalid(
                "cannot compose transforms on different mode counts",
            ));
        }
        Ok(Self {
            n_modes: self.n_modes,
            matrix: &self.matrix * &rhs.matrix,
        })
    }

    /// The transform that applies `self` and then `next`.
    pub fn then(&self, next: &Self) -> Result<Self> {
        next.compose(self)
    }
}

fn check_mode_index(mode: usize, n_modes: usize) -> Result<()> {
    if mode >= n_modes {
        return Err(Error::invalid(format!(
            "mode {mode} out of range for {n_modes} modes"
        )));
    }
    Ok(())
}

/// Single-mode squeezer: `X → e^{-r} X`, `P → e^{r} P`. Positive `r` squeezes X.
pub fn squeezer<T: Real>(r: T, mode: usize, n_modes: usize) -> Result<SymplecticTransform<T>> {
    check_mode_index(mode, n_modes)?;
    if !r.is_finite() {
        return Err(Error::invalid("squeezing parameter must be finite"));
    }
    let mut s = SymplecticTransform::identity(n_modes);
    s.matrix[(2 * mode, 2 * mode)] = (-r).exp();
    s.matrix[(2 * mode + 1, 2 * mode + 1)] = r.exp();
    Ok(s)
}

/// Rotation of one mode's `(X, P)` plane; `θ = π/2` maps `(X, P) → (P, −X)`.
pub fn phase_shift<T: Real>(
    theta: T,
    mode: usize,
    n_modes: usize,
) -> Result<SymplecticTransform<T>> {
    check_mode_index(mode, n_modes)?;
    let (s, c) = theta.sin_cos();
    let mut t = SymplecticTransform::identity(n_modes);
    let k = 2 * mode;
    t.matrix[(k, k)] = c;
    t.matrix[(k, k + 1)] = s;
    t.matrix[(k + 1, k)] = -s;
    t.matrix[(k + 1, k + 1)] = c;
    Ok(t)
}

/// Beamsplitter with amplitude transmission `t = √T` and reflection `r = √(1−T)`:
///
/// ```text
/// X_a' = t X_a + r X_b
/// X_b' = r X_a − t X_b      (same for P)
/// ```
///
/// With this sign choice a 50:50 splitter fed by an X-squeezed beam on port `b`
/// and a P-squeezed beam on port `a` makes `X_a − X_b` and `P_a + P_b` the
/// squeezed joint quadratures.
pub fn beamsplitter<T: Real>(
    transmittance: T,
    mode_a: usize,
    mode_b: usize,
    n_modes: usize,
) -> Result<SymplecticTransform<T>> {
    check_mode_index(mode_a, n_modes)?;
    check_mode_index(mode_b, n_modes)?;
    if mode_a == mode_b {
        return Err(Error::invalid("beamsplitter modes must be distinct"));
    }
    if !(transmittance >= T::zero() && transmittance <= T::one()) {
        return Err(Error::invalid(format!(
            "transmittance must lie in [0, 1], got {transmittance}"
        )));
    }
    let t = transmittance.sqrt();
    let r = (T::one() - transmittance).sqrt();
    let mut s = SymplecticTransform::identity(n_modes);
    for q in 0..2 {
        let (a, b) = (2 * mode_a + q, 2 * mode_b + q);
        s.matrix[(a, a)] = t;
        s.matrix[(a, b)] = r;
        s.matrix[(b, a)] = r;
        s.matrix[(b, b)] = -t;
    }
    Ok(s)
}

/// Loss on one mode modelled as a beamsplitter to vacuum, plus additive noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct LossChannel<T> {
    pub mode_index: usize,
    pub efficiency: T,
    pub excess_noise: T,
}

impl<T: Real> LossChannel<T> {
    pub fn new(mode_index: usize, efficiency: T, excess_noise: T) -> Result<Self> {
        let ch = Self {
            mode_index,
            efficiency,
            excess_noise,
        };
        ch.validate()?;
        Ok(ch)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.efficiency >= T::zero() && self.efficiency <= T::one()) {
            return Err(Error::invalid(format!(
                "efficiency must lie in [0, 1], got {}",
                self.efficiency
            )));
        }
        if !(self.excess_noise >= T::zero()) || !self.excess_noise.is_finite() {
            return Err(Error::invalid(format!(
                "excess_noise must be finite and >= 0, got {}",
                self.excess_noise
            )));
        }
        Ok(())
    }
}

pub fn vacuum_state<T: Real>(n_modes: usize) -> Result<CovarianceMatrix<T>> {
    if n_modes == 0 {
        return Err(Error::invalid("n_modes must be at least 1"));
    }
    Ok(CovarianceMatrix {
        n_modes,
        entries: Matrix::identity(2 * n_modes),
    })
}

/// `S γ Sᵀ`.
pub fn apply_symplectic<T: Real>(
    state: &CovarianceMatrix<T>,
    s: &SymplecticTransform<T>,
) -> Result<CovarianceMatrix<T>> {
    if state.n_modes != s.n_modes {
        return Err(Error::invalid(format!(
            "dimension mismatch: state has {} modes, transform {}",
            state.n_modes, s.n_modes
        )));
    }
    let mut out = s.matrix.congruence(&state.entries);
    symmetrize(&mut out);
    Ok(CovarianceMatrix {
        n_modes: state.n_modes,
        entries: out,
    })
}

fn symmetrize<T: Real>(m: &mut Matrix<T>) {
    let half = T::lit(0.5);
    for i in 0..m.nrows() {
        for j in (i + 1)..m.ncols() {
            let avg = half * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = avg;
            m[(j, i)] = avg;
        }
    }
}

/// `γ → η γ + (1 − η) I` on the channel's mode, then `+ excess · I` on that
/// mode's block. Cross terms with other modes pick up `√η`.
pub fn apply_loss<T: Real>(
    state: &CovarianceMatrix<T>,
    channel: &LossChannel<T>,
) -> Result<CovarianceMatrix<T>> {
    channel.validate()?;
    state.check_mode(channel.mode_index)?;
    let eta = channel.efficiency;
    let root = eta.sqrt();
    let lo = 2 * channel.mode_index;
    let in_mode = |k: usize| k == lo || k == lo + 1;

    let mut m = state.entries.clone();
    let dim = m.nrows();
    for i in 0..dim {
        for j in 0..dim {
            let f = match (in_mode(i), in_mode(j)) {
                (true, true) => eta,
                (true, false) | (false, true) => root,
                (false, false) => T::one(),
            };
            m[(i, j)] = m[(i, j)] * f;
        }
    }
    let added = T::one() - eta + channel.excess_noise;
    m[(lo, lo)] = m[(lo, lo)] + added;
    m[(lo + 1, lo + 1)] = m[(lo + 1, lo + 1)] + added;
    Ok(CovarianceMatrix {
        n_modes: state.n_modes,
        entries: m,
    })
}

/// Symplectic eigenvalues, descending.
///
/// The eigenvalues of `Ωγ` are `±iν_k`. With `γ = L Lᵀ`, `Ωγ` is similar to the
/// antisymmetric `A = Lᵀ Ω L`, so `ν_k²` are the (doubly degenerate)
/// eigenvalues of the symmetric `AᵀA`, which Jacobi handles robustly.
pub fn symplectic_eigenvalues<T: Real>(state: &CovarianceMatrix<T>) -> Result<Vec<T>> {
    check_symmetric(&state.entries)?;
    let l = state
        .entries
        .cholesky()
        .ok_or_else(|| Error::NotPositiveDefinite("symplectic spectrum needs gamma > 0".into()))?;
    let omega = symplectic_form::<T>(state.n_modes);
    let a = &(&l.transpose() * &omega) * &l;
    let ata = &a.transpose() * &a;
    let (mut squares, _) = ata.symmetric_eigen();
    squares.reverse();
    Ok(squares
        .chunks(2)
        .map(|pair| {
            let mean = (pair[0] + pair[pair.len() - 1]) * T::lit(0.5);
            mean.max(T::zero()).sqrt()
        })
        .collect())
}

/// Two-mode symplectic eigenvalues from the invariants
/// `Δ = det A + det B + 2 det C` and `det γ`:
/// `ν±² = (Δ ± √(Δ² − 4 det γ)) / 2`. Returned descending.
pub fn two_mode_symplectic_eigenvalues<T: Real>(state: &CovarianceMatrix<T>) -> Result<[T; 2]> {
    state.require_two_mode()?;
    let g = &state.entries;
    let delta = det2(g, 0, 0) + det2(g, 2, 2) + T::lit(2.0) * det2(g, 0, 2);
    let det = determinant(g);
    let disc = (delta * delta - T::lit(4.0) * det).max(T::zero()).sqrt();
    let half = T::lit(0.5);
    let plus = (half * (delta + disc)).max(T::zero()).sqrt();
    let minus = (half * (delta - disc)).max(T::zero()).sqrt();
    Ok([plus, minus])
}

/// True when every symplectic eigenvalue is `≥ 1 − PHYSICALITY_TOL`.
pub fn is_physical<T: Real>(state: &CovarianceMatrix<T>) -> bool {
    symplectic_eigenvalues(state)
        .map(|nu| nu.iter().all(|&v| v >= T::one() - T::tol(PHYSICALITY_TOL)))
        .unwrap_or(false)
}

/// Variance of `cos θ · X_mode + sin θ · P_mode`.
pub fn quadrature_variance<T: Real>(
    state: &CovarianceMatrix<T>,
    mode: usize,
    angle: T,
) -> Result<T> {
    state.check_mode(mode)?;
    let (s, c) = angle.sin_cos();
    let k = 2 * mode;
    let g = &state.entries;
    Ok(c * c * g[(k, k)] + s * s * g[(k + 1, k + 1)] + T::lit(2.0) * s * c * g[(k, k + 1)])
}

/// `vᵀ γ w` for two quadrature-space vectors.
pub(crate) fn bilinear<T: Real>(state: &CovarianceMatrix<T>, v: &[T], w: &[T]) -> T {
    let g = &state.entries;
    let mut acc = T::zero();
    for (i, &vi) in v.iter().enumerate() {
        if vi == T::zero() {
            continue;
        }
        for (j, &wj) in w.iter().enumerate() {
            acc = acc + vi * g[(i, j)] * wj;
        }
    }
    acc
}

/// Output mode of the source carried to Alice's detector.
pub const ALICE: usize = 0;
/// Output mode of the source carried to Bob's detector.
pub const BOB: usize = 1;

/// Forward model of the two-resonator EPR source.
///
/// Source 2 (strength `r2`) enters port 0 and source 1 (strength `r1`) port 1.
/// Both start X-squeezed and suffer preparation loss. Source 2 is then rotated
/// by `relative_phase` and the two are mixed on the beamsplitter. Each output
/// arm then gets its own detection efficiency and dark noise. For the default
/// quarter-wave phase and 50:50 splitter, `Var(X_A − X_B) = 2 v₁⁻` and
/// `Var(P_A + P_B) = 2 v₂⁻`, where `v⁻` is the detected squeezed variance.
pub fn build_epr_source<T: Real>(params: &SourceParams<T>) -> Result<CovarianceMatrix<T>> {
    params.validate()?;
    let port_src2 = ALICE;
    let port_src1 = BOB;

    let mut state = vacuum_state::<T>(2)?;
    state = apply_symplectic(&state, &squeezer(params.r2, port_src2, 2)?)?;
    state = apply_symplectic(&state, &squeezer(params.r1, port_src1, 2)?)?;
    for port in [port_src2, port_src1] {
        state = apply_loss(&state, &LossChannel::new(port, params.eta_prep, T::zero())?)?;
    }
    state = apply_symplectic(&state, &phase_shift(params.relative_phase, port_src2, 2)?)?;
    state = apply_symplectic(
        &state,
        &beamsplitter(params.transmittance, port_src2, port_src1, 2)?,
    )?;
    state = apply_loss(
        &state,
        &LossChannel::new(ALICE, params.eta_det_a, params.dark_noise)?,
    )?;
    state = apply_loss(
        &state,
        &LossChannel::new(BOB, params.eta_det_b, params.dark_noise)?,
    )?;
    Ok(state)
}
