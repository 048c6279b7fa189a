//! Bounded Nelder–Mead simplex search.

use crate::scalar::Real;

#[derive(Debug, Clone)]
pub struct SimplexResult<T> {
    pub x: Vec<T>,
    pub value: T,
    pub evaluations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy)]
pub struct SimplexOptions<T> {
    /// Stop once every vertex lies within this distance of the best one in
    /// every coordinate.
    pub x_tol: T,
    pub max_evaluations: usize,
}

/// Minimizes `f` starting from `x0` with per-coordinate initial steps `step`.
///
/// `project` maps any trial point back into the feasible box; it is applied
/// before every evaluation, so vertices always stay feasible.
pub fn nelder_mead<T, F, P>(
    mut f: F,
    x0: &[T],
    step: &[T],
    project: P,
    opts: SimplexOptions<T>,
) -> SimplexResult<T>
where
    T: Real,
    F: FnMut(&[T]) -> T,
    P: Fn(&mut [T]),
{
    let n = x0.len();
    let (alpha, gamma, rho, sigma) = (T::one(), T::lit(2.0), T::lit(0.5), T::lit(0.5));
    let mut evals = 0usize;
    let mut eval = |x: &mut Vec<T>, evals: &mut usize| -> T {
        project(x);
        *evals += 1;
        let v = f(x);
        if v.is_nan() {
            T::infinity()
        } else {
            v
        }
    };

    let mut simplex: Vec<(Vec<T>, T)> = Vec::with_capacity(n + 1);
    let mut start = x0.to_vec();
    let v0 = eval(&mut start, &mut evals);
    simplex.push((start.clone(), v0));
    for i in 0..n {
        let mut x = start.clone();
        x[i] = x[i] + step[i];
        let before = x[i];
        project(&mut x);
        if x[i] == start[i] || x[i] != before {
            // Pushed onto a bound: step the other way instead.
            x[i] = start[i] - step[i];
        }
        let v = eval(&mut x, &mut evals);
        simplex.push((x, v));
    }

    let spread = |s: &[(Vec<T>, T)]| -> T {
        let best = &s[0].0;
        s.iter().skip(1).fold(T::zero(), |acc, (x, _)| {
            x.iter()
                .zip(best)
                .fold(acc, |a, (&xi, &bi)| a.max((xi - bi).abs()))
        })
    };

    let mut converged = false;
    loop {
        simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal));
        if spread(&simplex) < opts.x_tol {
            converged = true;
            break;
        }
        if evals >= opts.max_evaluations {
            break;
        }

        let worst = simplex[n].clone();
        let mut centroid = vec![T::zero(); n];
        for (x, _) in &simplex[..n] {
            for (c, &xi) in centroid.iter_mut().zip(x) {
                *c = *c + xi;
            }
        }
        let nf = T::from_usize(n).unwrap();
        centroid.iter_mut().for_each(|c| *c = *c / nf);

        let along = |t: T| -> Vec<T> {
            centroid
                .iter()
                .zip(&worst.0)
                .map(|(&c, &w)| c + t * (c - w))
                .collect()
        };

        let mut xr = along(alpha);
        let fr = eval(&mut xr, &mut evals);
        if fr < simplex[0].1 {
            let mut xe = along(gamma);
            let fe = eval(&mut xe, &mut evals);
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
            continue;
        }
        let (mut xc, outside) = if fr < worst.1 {
            (along(rho), true)
        } else {
            (along(-rho), false)
        };
        let fc = eval(&mut xc, &mut evals);
        if (outside && fc <= fr) || (!outside && fc < worst.1) {
            simplex[n] = (xc, fc);
            continue;
        }
        let best = simplex[0].0.clone();
        for vertex in simplex.iter_mut().skip(1) {
            let mut x: Vec<T> = best
                .iter()
                .zip(&vertex.0)
                .map(|(&b, &xi)| b + sigma * (xi - b))
                .collect();
            let v = eval(&mut x, &mut evals);
            *vertex = (x, v);
        }
    }

    let (x, value) = simplex.swap_remove(0);
    SimplexResult {
        x,
        value,
        evaluations: evals,
        converged,
    }
}
