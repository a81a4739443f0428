use crate::{Error, Result};

#[inline]
pub(crate) fn sign(x: f64) -> i8 {
    if x > 0.0 {
        1
    } else if x < 0.0 {
        -1
    } else {
        0
    }
}

/// Kendall's τ as the normalized double sum over ordered pairs:
/// `1/(n(n−1)) Σᵢ Σ_{j≠i} sign(μᵢ−μⱼ)·sign(gᵢ−gⱼ)`. Ties contribute zero.
pub fn kendall_tau(measure: &[f64], gaps: &[f64]) -> Result<f64> {
    let n = measure.len();
    if n != gaps.len() {
        return Err(Error::Shape(format!("{n} measure values but {} gaps", gaps.len())));
    }
    if n < 2 {
        return Err(Error::Undefined(format!("Kendall's tau needs at least 2 models, got {n}")));
    }
    let mut sum: i64 = 0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                sum += i64::from(sign(measure[i] - measure[j]) * sign(gaps[i] - gaps[j]));
            }
        }
    }
    Ok(sum as f64 / (n * (n - 1)) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_and_reversed() {
        let g = [0.1, 0.2, 0.3, 0.4];
        assert_eq!(kendall_tau(&[1.0, 2.0, 3.0, 4.0], &g).unwrap(), 1.0);
        assert_eq!(kendall_tau(&[4.0, 3.0, 2.0, 1.0], &g).unwrap(), -1.0);
    }

    #[test]
    fn constant_measure_is_zero() {
        assert_eq!(kendall_tau(&[1.0; 5], &[1.0, 2.0, 3.0, 4.0, 5.0]).unwrap(), 0.0);
    }

    #[test]
    fn too_few_models() {
        assert!(matches!(kendall_tau(&[1.0], &[1.0]), Err(Error::Undefined(_))));
        assert!(kendall_tau(&[1.0, 2.0], &[1.0]).is_err());
    }
}
