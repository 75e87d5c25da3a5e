//! Small statistics helpers: ordinary least squares and sample means.

use crate::real::Real;

/// Result of fitting `y ≈ intercept + slope · x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit<T> {
    pub slope: T,
    pub intercept: T,
    /// Standard error of the slope; zero for an exact fit.
    pub slope_stderr: T,
    /// Coefficient of determination; 1 when `y` is constant.
    pub r_squared: T,
}

/// Ordinary least squares. Returns `None` for fewer than three points or
/// constant `x`.
pub fn linear_fit<T: Real>(xs: &[T], ys: &[T]) -> Option<LinearFit<T>> {
    let n = xs.len();
    if n < 3 || ys.len() != n {
        return None;
    }
    let nf = T::from_count(n);
    let mx = xs.iter().copied().sum::<T>() / nf;
    let my = ys.iter().copied().sum::<T>() / nf;
    let (mut sxx, mut sxy, mut syy) = (T::zero(), T::zero(), T::zero());
    for (&x, &y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if sxx <= T::zero() {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr = (syy - slope * sxy).max(T::zero());
    let slope_stderr = (ssr / (T::from_count(n - 2) * sxx)).sqrt();
    let r_squared = if syy > T::zero() {
        T::one() - ssr / syy
    } else {
        T::one()
    };
    Some(LinearFit {
        slope,
        intercept,
        slope_stderr,
        r_squared,
    })
}

/// Fit against the index `0, 1, 2, …`.
pub fn linear_fit_indexed<T: Real>(ys: &[T]) -> Option<LinearFit<T>> {
    let xs: Vec<T> = (0..ys.len()).map(T::from_count).collect();
    linear_fit(&xs, ys)
}

/// Sample mean together with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanErr<T> {
    pub mean: T,
    /// Zero when fewer than two samples.
    pub stderr: T,
    pub count: usize,
}

pub fn mean_err<T: Real>(values: &[T]) -> MeanErr<T> {
    let n = values.len();
    if n == 0 {
        return MeanErr {
            mean: T::nan(),
            stderr: T::nan(),
            count: 0,
        };
    }
    let nf = T::from_count(n);
    let mean = values.iter().copied().sum::<T>() / nf;
    let stderr = if n > 1 {
        let var = values.iter().map(|&v| (v - mean) * (v - mean)).sum::<T>()
            / T::from_count(n - 1);
        (var / nf).sqrt()
    } else {
        T::zero()
    };
    MeanErr {
        mean,
        stderr,
        count: n,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line() {
        let ys: Vec<f64> = (0..10).map(|x| 3.0 + 0.5 * x as f64).collect();
        let fit = linear_fit_indexed(&ys).unwrap();
        assert!((fit.slope - 0.5).abs() < 1e-12);
        assert!((fit.intercept - 3.0).abs() < 1e-12);
        assert!(fit.slope_stderr < 1e-7);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn noisy_line_stderr() {
        // residuals ±1 alternating around slope 0
        let ys: Vec<f64> = (0..100).map(|x| if x % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let fit = linear_fit_indexed(&ys).unwrap();
        assert!(fit.slope.abs() < 3.0 * fit.slope_stderr);
        assert!(fit.r_squared < 0.01);
    }

    #[test]
    fn degenerate_inputs() {
        assert!(linear_fit_indexed::<f64>(&[1.0, 2.0]).is_none());
        assert!(linear_fit(&[1.0, 1.0, 1.0], &[0.0, 1.0, 2.0]).is_none());
    }

    #[test]
    fn mean_and_stderr() {
        let m = mean_err(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m.mean, 2.5);
        assert!((m.stderr - (5.0f64 / 3.0 / 4.0).sqrt()).abs() < 1e-15);
        assert_eq!(mean_err(&[7.0]).stderr, 0.0);
        assert!(mean_err::<f64>(&[]).mean.is_nan());
    }
}
