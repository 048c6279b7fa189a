#![allow(dead_code)]

use cvsteer_core::criteria::conditional_variance;
use cvsteer_core::gaussian::{apply_symplectic, beamsplitter, phase_shift, squeezer, Quadrature};
use cvsteer_core::{CovarianceMatrix, Direction, Matrix, SourceParams, SymplecticTransform};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Product of random squeezers, phase rotations and beamsplitters.
pub fn random_symplectic(
    rng: &mut ChaCha8Rng,
    n_modes: usize,
    layers: usize,
) -> SymplecticTransform<f64> {
    let mut s = SymplecticTransform::identity(n_modes);
    for _ in 0..layers {
        let mode = rng.random_range(0..n_modes);
        let step = match rng.random_range(0..3) {
            0 => squeezer(rng.random_range(-1.0..1.0), mode, n_modes).unwrap(),
            1 => phase_shift(rng.random_range(0.0..std::f64::consts::TAU), mode, n_modes).unwrap(),
            _ if n_modes > 1 => {
                let other = (mode + rng.random_range(1..n_modes)) % n_modes;
                beamsplitter(rng.random_range(0.0..=1.0), mode, other, n_modes).unwrap()
            }
            _ => squeezer(rng.random_range(-1.0..1.0), mode, n_modes).unwrap(),
        };
        s = s.then(&step).unwrap();
    }
    s
}

/// Random passive (photon-number preserving) transform.
pub fn random_passive(
    rng: &mut ChaCha8Rng,
    n_modes: usize,
    layers: usize,
) -> SymplecticTransform<f64> {
    let mut s = SymplecticTransform::identity(n_modes);
    for _ in 0..layers {
        let mode = rng.random_range(0..n_modes);
        let step = if n_modes > 1 && rng.random_bool(0.5) {
            let other = (mode + rng.random_range(1..n_modes)) % n_modes;
            beamsplitter(rng.random_range(0.0..=1.0), mode, other, n_modes).unwrap()
        } else {
            phase_shift(rng.random_range(0.0..std::f64::consts::TAU), mode, n_modes).unwrap()
        };
        s = s.then(&step).unwrap();
    }
    s
}

pub fn thermal(nus: &[f64]) -> CovarianceMatrix<f64> {
    let diag: Vec<f64> = nus.iter().flat_map(|&v| [v, v]).collect();
    CovarianceMatrix::new(Matrix::diagonal(&diag)).unwrap()
}

/// `S · ⊕ν I · Sᵀ` with the given symplectic spectrum.
pub fn state_with_spectrum(
    rng: &mut ChaCha8Rng,
    nus: &[f64],
) -> (CovarianceMatrix<f64>, SymplecticTransform<f64>) {
    let s = random_symplectic(rng, nus.len(), 6);
    (apply_symplectic(&thermal(nus), &s).unwrap(), s)
}

pub fn random_state(rng: &mut ChaCha8Rng, n_modes: usize) -> CovarianceMatrix<f64> {
    let nus: Vec<f64> = (0..n_modes).map(|_| rng.random_range(1.0..3.0)).collect();
    state_with_spectrum(rng, &nus).0
}

/// Local operations on a product state plus classical correlated noise.
pub fn random_separable_state(rng: &mut ChaCha8Rng) -> CovarianceMatrix<f64> {
    let local_a = random_symplectic(rng, 1, 4);
    let local_b = random_symplectic(rng, 1, 4);
    let a = apply_symplectic(&thermal(&[rng.random_range(1.0..2.0)]), &local_a).unwrap();
    let b = apply_symplectic(&thermal(&[rng.random_range(1.0..2.0)]), &local_b).unwrap();
    let v: Vec<f64> = (0..4).map(|_| rng.random_range(-2.0..2.0)).collect();
    let w: Vec<f64> = (0..4).map(|_| rng.random_range(-2.0..2.0)).collect();
    let m = Matrix::from_fn(4, 4, |i, j| {
        let block = match (i / 2, j / 2) {
            (0, 0) => a.get(i, j),
            (1, 1) => b.get(i - 2, j - 2),
            _ => 0.0,
        };
        block + v[i] * v[j] + w[i] * w[j]
    });
    CovarianceMatrix::new(m).unwrap()
}

/// Symplectic eigenvalues from the spectrum of `iΩγ` by a general complex eigen solver.
pub fn nalgebra_symplectic_eigenvalues(state: &CovarianceMatrix<f64>) -> Vec<f64> {
    let dim = 2 * state.n_modes();
    let g = DMatrix::from_fn(dim, dim, |i, j| state.get(i, j));
    let mut omega = DMatrix::<f64>::zeros(dim, dim);
    for k in 0..state.n_modes() {
        omega[(2 * k, 2 * k + 1)] = 1.0;
        omega[(2 * k + 1, 2 * k)] = -1.0;
    }
    let mut nus: Vec<f64> = (omega * g)
        .complex_eigenvalues()
        .iter()
        .filter(|z| z.im > 0.0)
        .map(|z| z.im)
        .collect();
    nus.sort_by(|a, b| b.partial_cmp(a).unwrap());
    nus
}

pub fn to_nalgebra(m: &Matrix<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

/// Minimal conditional variance over a dense gain grid followed by golden-section refinement.
/// Cauchy–Schwarz bounds the optimal gain by `√(Var O_t / Var O_s)`.
pub fn brute_force_min(state: &CovarianceMatrix<f64>, quad: Quadrature, dir: Direction) -> f64 {
    let f = |g: f64| conditional_variance(state, quad, dir, g).unwrap();
    let (t, s) = dir.modes();
    let reach = 1.1 * (state.variance(t, quad) / state.variance(s, quad)).sqrt() + 0.1;
    let h = reach / 4000.0;
    let (mut best_g, mut best) = (0.0, f(0.0));
    for k in -4000..=4000 {
        let g = k as f64 * h;
        let v = f(g);
        if v < best {
            best = v;
            best_g = g;
        }
    }
    let (mut lo, mut hi) = (best_g - 2.0 * h, best_g + 2.0 * h);
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..100 {
        let (m1, m2) = (hi - phi * (hi - lo), lo + phi * (hi - lo));
        if f(m1) < f(m2) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    f(0.5 * (lo + hi)).min(best)
}

pub fn swap_modes(state: &CovarianceMatrix<f64>) -> CovarianceMatrix<f64> {
    let p = |i: usize| (i + 2) % 4;
    CovarianceMatrix::new(Matrix::from_fn(4, 4, |i, j| state.get(p(i), p(j)))).unwrap()
}

pub fn random_source(rng: &mut ChaCha8Rng) -> SourceParams<f64> {
    SourceParams {
        r1: rng.random_range(0.0..2.0),
        r2: rng.random_range(0.0..2.0),
        eta_prep: rng.random_range(0.5..=1.0),
        eta_det_a: rng.random_range(0.7..=1.0),
        eta_det_b: rng.random_range(0.7..=1.0),
        dark_noise: rng.random_range(0.0..0.05),
        ..SourceParams::default()
    }
}

pub fn rel_diff(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}
