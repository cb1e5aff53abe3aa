//! Derivative-free local search (Nelder–Mead) with multistart helpers.

use std::cmp::Ordering;

use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NelderMeadConfig<T: Scalar = f64> {
    pub max_iterations: usize,
    /// Converged once the simplex diameter (∞-norm around the best vertex)
    /// drops below this value.
    pub tolerance: T,
    /// Edge length of the initial simplex along each axis.
    pub initial_step: T,
}

impl<T: Scalar> Default for NelderMeadConfig<T> {
    fn default() -> Self {
        Self {
            max_iterations: 5_000,
            tolerance: T::lit(1e-7),
            initial_step: T::lit(0.5),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum<T: Scalar = f64> {
    pub x: Vec<T>,
    pub value: T,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
}

/// Minimizes `f` from `x0` with the dimension-adaptive Nelder–Mead
/// coefficients (reflection 1, expansion 1 + 2/n, contraction 3/4 − 1/(2n),
/// shrink 1 − 1/n).
pub fn nelder_mead<T, F>(mut f: F, x0: &[T], config: &NelderMeadConfig<T>) -> Minimum<T>
where
    T: Scalar,
    F: FnMut(&[T]) -> T,
{
    let n = x0.len();
    let mut evaluations = 0usize;
    let mut eval = |x: &[T], evaluations: &mut usize| {
        *evaluations += 1;
        let v = f(x);
        if v.is_nan() {
            T::infinity()
        } else {
            v
        }
    };
    if n == 0 {
        let value = eval(x0, &mut evaluations);
        return Minimum {
            x: Vec::new(),
            value,
            iterations: 0,
            evaluations,
            converged: true,
        };
    }

    let nf = T::lit(n as f64);
    let alpha = T::one();
    let beta = T::one() + T::lit(2.0) / nf;
    let gamma = T::lit(0.75) - T::one() / (T::lit(2.0) * nf);
    let delta = T::one() - T::one() / nf;

    let mut simplex: Vec<Vec<T>> = Vec::with_capacity(n + 1);
    simplex.push(x0.to_vec());
    for i in 0..n {
        let mut v = x0.to_vec();
        v[i] = v[i] + config.initial_step;
        simplex.push(v);
    }
    let mut values: Vec<T> = simplex.iter().map(|v| eval(v, &mut evaluations)).collect();

    let mut iterations = 0;
    let mut converged = false;
    while iterations < config.max_iterations {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap_or(Ordering::Equal));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();

        let diameter = simplex[1..].iter().fold(T::zero(), |acc, v| {
            v.iter()
                .zip(&simplex[0])
                .fold(acc, |acc, (a, b)| acc.max((*a - *b).abs()))
        });
        if diameter < config.tolerance {
            converged = true;
            break;
        }
        iterations += 1;

        let mut centroid = vec![T::zero(); n];
        for v in &simplex[..n] {
            for (c, x) in centroid.iter_mut().zip(v) {
                *c = *c + *x / nf;
            }
        }
        let along = |coef: T| -> Vec<T> {
            centroid
                .iter()
                .zip(&simplex[n])
                .map(|(c, w)| *c + coef * (*c - *w))
                .collect()
        };

        let reflected = along(alpha);
        let fr = eval(&reflected, &mut evaluations);
        if fr < values[0] {
            let expanded = along(alpha * beta);
            let fe = eval(&expanded, &mut evaluations);
            if fe < fr {
                simplex[n] = expanded;
                values[n] = fe;
            } else {
                simplex[n] = reflected;
                values[n] = fr;
            }
            continue;
        }
        if fr < values[n - 1] {
            simplex[n] = reflected;
            values[n] = fr;
            continue;
        }
        let (candidate, fc) = if fr < values[n] {
            let outside = along(alpha * gamma);
            let fo = eval(&outside, &mut evaluations);
            (outside, fo)
        } else {
            let inside = along(-gamma);
            let fi = eval(&inside, &mut evaluations);
            (inside, fi)
        };
        if fc < values[n].min(fr) {
            simplex[n] = candidate;
            values[n] = fc;
            continue;
        }
        let best = simplex[0].clone();
        for k in 1..=n {
            let shrunk: Vec<T> = best
                .iter()
                .zip(&simplex[k])
                .map(|(b, x)| *b + delta * (*x - *b))
                .collect();
            values[k] = eval(&shrunk, &mut evaluations);
            simplex[k] = shrunk;
        }
    }

    let best = (0..=n)
        .min_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap_or(Ordering::Equal))
        .unwrap_or(0);
    Minimum {
        x: simplex.swap_remove(best),
        value: values[best],
        iterations,
        evaluations,
        converged,
    }
}

/// Runs a local search from every start, in order.
pub fn multistart<T, F>(mut f: F, starts: &[Vec<T>], config: &NelderMeadConfig<T>) -> Vec<Minimum<T>>
where
    T: Scalar,
    F: FnMut(&[T]) -> T,
{
    starts
        .iter()
        .map(|x0| nelder_mead(&mut f, x0, config))
        .collect()
}

/// Index of the candidate with the largest score; scores within `tie` of the
/// best are broken by the lexicographically smallest key.
pub fn argmax_with_tie_break<T: Scalar>(candidates: &[(T, Vec<T>)], tie: T) -> Option<usize> {
    let best = candidates
        .iter()
        .map(|(v, _)| *v)
        .fold(T::neg_infinity(), |a, b| a.max(b));
    candidates
        .iter()
        .enumerate()
        .filter(|(_, (v, _))| *v >= best - tie)
        .min_by(|(_, (_, a)), (_, (_, b))| lexicographic(a, b))
        .map(|(i, _)| i)
}

fn lexicographic<T: Scalar>(a: &[T], b: &[T]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.partial_cmp(y) {
            Some(Ordering::Equal) | None => continue,
            Some(o) => return o,
        }
    }
    a.len().cmp(&b.len())
}

const PRIMES: [u32; 32] = [
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89,
    97, 101, 103, 107, 109, 113, 127, 131,
];

/// Radical inverse of `index` in `base`.
pub fn halton<T: Scalar>(mut index: u64, base: u32) -> T {
    let b = T::lit(base as f64);
    let mut f = T::one();
    let mut r = T::zero();
    while index > 0 {
        f = f / b;
        r = r + f * T::lit((index % base as u64) as f64);
        index /= base as u64;
    }
    r
}

/// First `count` Halton points in `[0, 1)^dims`, skipping the origin.
/// Supports up to 32 dimensions.
pub fn halton_points<T: Scalar>(count: usize, dims: usize) -> Vec<Vec<T>> {
    assert!(dims <= PRIMES.len(), "halton_points supports at most 32 dimensions");
    (1..=count as u64)
        .map(|i| PRIMES[..dims].iter().map(|&p| halton(i, p)).collect())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rosenbrock(x: &[f64]) -> f64 {
        (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2)
    }

    #[test]
    fn minimizes_rosenbrock() {
        let cfg = NelderMeadConfig {
            max_iterations: 10_000,
            tolerance: 1e-10,
            initial_step: 0.5,
        };
        let m = nelder_mead(rosenbrock, &[-1.2, 1.0], &cfg);
        assert!(m.converged);
        assert!((m.x[0] - 1.0).abs() < 1e-6 && (m.x[1] - 1.0).abs() < 1e-6, "{:?}", m.x);
    }

    #[test]
    fn minimizes_quadratic_in_f32() {
        let cfg = NelderMeadConfig::<f32> {
            max_iterations: 2000,
            tolerance: 1e-5,
            initial_step: 0.3,
        };
        let m = nelder_mead(|x: &[f32]| x.iter().enumerate().map(|(i, v)| (v - i as f32).powi(2)).sum(), &[3.0, 3.0, 3.0], &cfg);
        assert!(m.converged);
        for (i, v) in m.x.iter().enumerate() {
            assert!((v - i as f32).abs() < 1e-3);
        }
    }

    #[test]
    fn budget_exhaustion_is_reported() {
        let cfg = NelderMeadConfig {
            max_iterations: 3,
            tolerance: 1e-12,
            initial_step: 0.5,
        };
        let m = nelder_mead(rosenbrock, &[-1.2, 1.0], &cfg);
        assert!(!m.converged);
        assert_eq!(m.iterations, 3);
    }

    #[test]
    fn tie_break_prefers_smallest_key() {
        let c = vec![(1.0, vec![2.0, 0.0]), (1.0 - 1e-14, vec![1.0, 5.0]), (0.5, vec![0.0, 0.0])];
        assert_eq!(argmax_with_tie_break(&c, 1e-12), Some(1));
        assert_eq!(argmax_with_tie_break(&c, 0.0), Some(0));
    }

    #[test]
    fn halton_points_are_in_unit_cube() {
        let pts: Vec<Vec<f64>> = halton_points(64, 4);
        assert_eq!(pts.len(), 64);
        assert!(pts.iter().flatten().all(|v| (0.0..1.0).contains(v)));
        assert_eq!(halton::<f64>(1, 2), 0.5);
        assert_eq!(halton::<f64>(3, 2), 0.75);
    }
}
