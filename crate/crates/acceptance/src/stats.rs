//! Paired comparisons of two agents over the same deals.

use statrs::distribution::{ContinuousCDF, Normal};

use gongzhu_core::eval::mean_stderr;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PairedTest {
    /// Mean of `a - b` per deal.
    pub mean: f64,
    pub stderr: f64,
    pub z: f64,
    /// One-sided p-value for `mean > 0` under the normal approximation.
    pub p_greater: f64,
}

pub fn upper_tail(z: f64) -> f64 {
    Normal::standard().sf(z)
}

/// Test whether `a` beats `b`, deal by deal.
pub fn paired(a: &[f64], b: &[f64]) -> PairedTest {
    assert_eq!(a.len(), b.len(), "paired samples differ in length");
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let (mean, stderr) = mean_stderr(&d);
    let z = if stderr > 0.0 { mean / stderr } else { 0.0 };
    PairedTest {
        mean,
        stderr,
        z,
        p_greater: upper_tail(z),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tail_values() {
        assert!((upper_tail(0.0) - 0.5).abs() < 1e-12);
        assert!((upper_tail(1.644_853_626_951_472) - 0.05).abs() < 1e-9);
        assert!((upper_tail(-1.959_963_984_540_054) - 0.975).abs() < 1e-9);
    }

    #[test]
    fn paired_difference() {
        let a = [3.0, 5.0, 4.0, 6.0];
        let b = [1.0, 2.0, 3.0, 2.0];
        let t = paired(&a, &b);
        // differences 2, 3, 1, 4
        assert_eq!(t.mean, 2.5);
        let se = (5.0f64 / 3.0 / 4.0).sqrt();
        assert!((t.stderr - se).abs() < 1e-12);
        assert!((t.z - 2.5 / se).abs() < 1e-12);
    }
}
