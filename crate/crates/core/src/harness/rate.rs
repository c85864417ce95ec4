use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Least-squares line log e = α log ε + c.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub alpha: f64,
    pub intercept: f64,
    /// Root-mean-square of the log residuals.
    pub residual: f64,
    pub n_points: usize,
}

pub fn fit_rate(pairs: &[(f64, f64)]) -> Result<RateFit> {
    if pairs.len() < 2 {
        return Err(Error::FlatData(format!("{} points cannot determine a rate", pairs.len())));
    }
    if let Some(&(eps, e)) = pairs.iter().find(|p| !(p.1 > 1e-14) || !(p.0 > 0.0)) {
        return Err(Error::FlatData(format!("error {e:e} at eps = {eps} is at the noise floor")));
    }
    let n = pairs.len() as f64;
    let xs: Vec<f64> = pairs.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = pairs.iter().map(|p| p.1.ln()).collect();
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if !(sxx > 0.0) {
        return Err(Error::FlatData("all eps values coincide".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let alpha = sxy / sxx;
    let intercept = my - alpha * mx;
    let rss: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - alpha * x - intercept).powi(2)).sum();
    Ok(RateFit { alpha, intercept, residual: (rss / n).sqrt(), n_points: pairs.len() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn exact_laws() {
        let f = fit_rate(&[(0.25, 0.5), (0.0625, 0.25)]).unwrap();
        assert!((f.alpha - 0.5).abs() < 1e-14 && f.residual < 1e-14);
        let f = fit_rate(&[(0.5, 1.5), (0.25, 0.75), (0.125, 0.375)]).unwrap();
        assert!((f.alpha - 1.0).abs() < 1e-14 && (f.intercept - 3f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn flat_data_rejected() {
        assert!(matches!(fit_rate(&[(0.25, 0.0), (0.125, 0.0), (0.0625, 0.0)]), Err(Error::FlatData(_))));
        assert!(matches!(fit_rate(&[(0.25, 1.0)]), Err(Error::FlatData(_))));
    }

    #[test]
    fn noisy_square_root_law() {
        // 5% multiplicative noise over ε = 1/4 … 1/32: the estimator stays in [0.42, 0.58]
        let eps = [0.25f64, 0.125, 0.0625, 0.03125];
        for seed in 0..2000 {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let pairs: Vec<(f64, f64)> = eps.iter().map(|&e| (e, e.sqrt() * (1.0 + 0.05 * rng.gen::<f64>()))).collect();
            let a = fit_rate(&pairs).unwrap().alpha;
            assert!((0.42..=0.58).contains(&a), "seed {seed}: {a}");
        }
    }
}
