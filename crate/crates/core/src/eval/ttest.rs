use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};
use thiserror::Error;

pub const SIGNIFICANCE_LEVEL: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TTest {
    pub t: f64,
    pub p_value: f64,
    pub df: usize,
    pub significant: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TTestError {
    #[error("paired samples differ in length ({0} vs {1})")]
    Length(usize, usize),
    #[error("need at least two pairs, got {0}")]
    TooFew(usize),
}

/// Two-tailed paired t-test on `a - b`, with `n - 1` degrees of freedom.
/// All-zero differences give t = 0, p = 1; constant non-zero differences give
/// an infinite t and p = 0.
pub fn paired_ttest(a: &[f64], b: &[f64]) -> Result<TTest, TTestError> {
    if a.len() != b.len() {
        return Err(TTestError::Length(a.len(), b.len()));
    }
    let n = a.len();
    if n < 2 {
        return Err(TTestError::TooFew(n));
    }
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let df = n - 1;
    let mean = diffs.iter().sum::<f64>() / n as f64;
    let var = diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / df as f64;

    if diffs.iter().all(|&d| d == 0.0) {
        return Ok(TTest {
            t: 0.0,
            p_value: 1.0,
            df,
            significant: false,
        });
    }
    if var == 0.0 {
        return Ok(TTest {
            t: f64::INFINITY.copysign(mean),
            p_value: 0.0,
            df,
            significant: true,
        });
    }
    let t = mean / (var.sqrt() / (n as f64).sqrt());
    let dist = StudentsT::new(0.0, 1.0, df as f64).expect("df >= 1");
    let p_value = (2.0 * (1.0 - dist.cdf(t.abs()))).clamp(0.0, 1.0);
    Ok(TTest {
        t,
        p_value,
        df,
        significant: p_value < SIGNIFICANCE_LEVEL,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_samples() {
        let r = paired_ttest(&[0.2, 0.4, 0.6], &[0.2, 0.4, 0.6]).unwrap();
        assert_eq!((r.t, r.p_value, r.significant), (0.0, 1.0, false));
    }

    #[test]
    fn swap_negates_t() {
        let a = [0.1, 0.5, 0.3, 0.9];
        let b = [0.2, 0.1, 0.1, 0.4];
        let ab = paired_ttest(&a, &b).unwrap();
        let ba = paired_ttest(&b, &a).unwrap();
        assert_eq!(ab.t, -ba.t);
        assert_eq!(ab.p_value, ba.p_value);
    }

    #[test]
    fn textbook_case() {
        let r = paired_ttest(&[1.0, 2.0, 3.0, 4.0], &[0.0; 4]).unwrap();
        assert!((r.t - 2.5 / (1.2909944487358056 / 2.0)).abs() < 1e-12);
        assert!((r.t - 3.873).abs() < 1e-3);
        assert!((r.p_value - 0.0305).abs() < 1e-4);
    }

    #[test]
    fn errors() {
        assert_eq!(paired_ttest(&[1.0], &[1.0]), Err(TTestError::TooFew(1)));
        assert_eq!(paired_ttest(&[1.0, 2.0], &[1.0]), Err(TTestError::Length(2, 1)));
    }
}
