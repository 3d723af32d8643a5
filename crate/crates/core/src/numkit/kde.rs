use serde::{Deserialize, Serialize};

use crate::{Error, Result};

const BANDWIDTH_FLOOR: f64 = 1e-6;

/// Gaussian kernel density evaluated on a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityEstimate {
    pub grid: Vec<f64>,
    pub density: Vec<f64>,
    pub bandwidth: f64,
}

impl DensityEstimate {
    /// Trapezoid integral of the density over the grid.
    pub fn integral(&self) -> f64 {
        self.grid
            .windows(2)
            .zip(self.density.windows(2))
            .map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1]))
            .sum()
    }

    /// Grid point with the highest density.
    pub fn mode(&self) -> f64 {
        let mut best = 0;
        for (i, d) in self.density.iter().enumerate() {
            if *d > self.density[best] {
                best = i;
            }
        }
        self.grid[best]
    }
}

/// Silverman's rule `0.9 · min(sd, IQR/1.34) · n^(-1/5)`, floored at 1e-6.
///
/// When the interquartile range is zero the spread falls back to the
/// standard deviation alone.
pub fn silverman_bandwidth(samples: &[f64]) -> Result<f64> {
    if samples.len() < 2 {
        return Err(Error::DegenerateSample(format!("need at least 2 samples, got {}", samples.len())));
    }
    if samples.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("kde sample".into()));
    }
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let sd = (samples.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    let identical = samples.iter().all(|v| *v == samples[0]);
    if identical || sd == 0.0 {
        return Err(Error::DegenerateSample("all samples identical".into()));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let iqr = quantile(&sorted, 0.75) - quantile(&sorted, 0.25);
    let spread = if iqr > 0.0 { sd.min(iqr / 1.34) } else { sd };
    Ok((0.9 * spread * n.powf(-0.2)).max(BANDWIDTH_FLOOR))
}

/// Linear-interpolation quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Gaussian-kernel density estimate of `samples` on an ascending `grid`.
pub fn kde(samples: &[f64], grid: &[f64]) -> Result<DensityEstimate> {
    if grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidParameter("kde grid must be strictly ascending".into()));
    }
    let h = silverman_bandwidth(samples)?;
    let norm = 1.0 / (samples.len() as f64 * h * (2.0 * std::f64::consts::PI).sqrt());
    let density = grid
        .iter()
        .map(|x| {
            norm * samples
                .iter()
                .map(|s| {
                    let u = (x - s) / h;
                    (-0.5 * u * u).exp()
                })
                .sum::<f64>()
        })
        .collect();
    Ok(DensityEstimate { grid: grid.to_vec(), density, bandwidth: h })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkit::RngStream;

    fn grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
        (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
    }

    #[test]
    fn identical_samples_are_degenerate() {
        assert!(matches!(kde(&[0.3; 10], &[0.0, 1.0]), Err(Error::DegenerateSample(_))));
        assert!(kde(&[0.3], &[0.0, 1.0]).is_err());
    }

    #[test]
    fn symmetric_samples_give_symmetric_density() {
        let a = [0.1, 0.4, 0.45, 1.3, 2.0];
        let samples: Vec<f64> = a.iter().flat_map(|v| [*v, -*v]).collect();
        let g = grid(-3.0, 3.0, 121);
        let est = kde(&samples, &g).unwrap();
        let n = est.density.len();
        for i in 0..n {
            assert!((est.density[i] - est.density[n - 1 - i]).abs() < 1e-12);
        }
    }

    #[test]
    fn integrates_to_one_and_nonnegative() {
        let mut rng = RngStream::new(1, 1);
        let samples: Vec<f64> = (0..500).map(|_| rng.gaussian() * 0.2 + 0.1).collect();
        let h = silverman_bandwidth(&samples).unwrap();
        let lo = samples.iter().cloned().fold(f64::INFINITY, f64::min) - 4.0 * h;
        let hi = samples.iter().cloned().fold(f64::NEG_INFINITY, f64::max) + 4.0 * h;
        let est = kde(&samples, &grid(lo, hi, 2001)).unwrap();
        assert!(est.density.iter().all(|d| *d >= 0.0));
        assert!((est.integral() - 1.0).abs() < 0.01);
    }

    #[test]
    fn standard_normal_peak_near_zero() {
        // a single n = 10^4 draw puts the peak about 0.1 from 0 (one sd), so average 50 draws
        let modes: Vec<f64> = (0..50)
            .map(|seed| {
                let mut rng = RngStream::new(seed, 0);
                let samples: Vec<f64> = (0..10_000).map(|_| rng.gaussian()).collect();
                kde(&samples, &grid(-1.0, 1.0, 201)).unwrap().mode()
            })
            .collect();
        let mean = modes.iter().sum::<f64>() / modes.len() as f64;
        assert!(mean.abs() < 0.05, "mean mode {mean}");
        assert!(modes.iter().all(|m| m.abs() < 0.9));
    }

    #[test]
    fn zero_iqr_falls_back_to_sd() {
        let mut s = vec![0.0; 20];
        s[0] = 1.0;
        let h = silverman_bandwidth(&s).unwrap();
        assert!(h > 0.01);
    }
}
