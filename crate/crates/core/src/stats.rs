//! Small estimators shared by the measurement modules.

use crate::scalar::Real;

pub fn mean<T: Real>(xs: &[T]) -> T {
    xs.iter().fold(T::zero(), |a, &b| a + b) / T::count(xs.len())
}

/// Standard error of the mean; `NaN` for fewer than two values.
pub fn standard_error<T: Real>(xs: &[T]) -> T {
    let n = xs.len();
    if n < 2 {
        return T::nan();
    }
    let m = mean(xs);
    let var = xs.iter().fold(T::zero(), |a, &x| a + (x - m) * (x - m)) / T::count(n - 1);
    (var / T::count(n)).sqrt()
}

/// Jackknife standard error from leave-one-out estimates; `NaN` for fewer than two.
pub fn jackknife_stderr<T: Real>(leave_one_out: &[T]) -> T {
    let n = leave_one_out.len();
    if n < 2 {
        return T::nan();
    }
    let m = mean(leave_one_out);
    let ss = leave_one_out
        .iter()
        .fold(T::zero(), |a, &x| a + (x - m) * (x - m));
    (ss * T::count(n - 1) / T::count(n)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jackknife_of_mean_equals_standard_error() {
        let xs = [1.0, 4.0, 2.5, 3.0, 7.0, 0.5];
        let n = xs.len() as f64;
        let total: f64 = xs.iter().sum();
        let loo: Vec<f64> = xs.iter().map(|x| (total - x) / (n - 1.0)).collect();
        assert!((jackknife_stderr(&loo) - standard_error(&xs)).abs() < 1e-12);
    }

    #[test]
    fn single_value_has_undefined_error() {
        assert!(standard_error(&[1.0f64]).is_nan());
        assert!(jackknife_stderr(&[1.0f64]).is_nan());
    }
}
