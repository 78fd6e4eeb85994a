use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Least-squares fit of `ln gap = intercept + slope · ln K`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct RateFit<T> {
    pub slope: T,
    pub intercept: T,
    pub r2: T,
}

pub fn fit_rate<T: Scalar>(sweep: &[(usize, T)]) -> Result<RateFit<T>> {
    if sweep.len() < 4 {
        return Err(Error::InvalidArgument(format!(
            "rate fit needs at least 4 points, got {}",
            sweep.len()
        )));
    }
    if let Some(&(k, gap)) = sweep.iter().find(|(_, g)| !(*g > T::zero())) {
        return Err(Error::NonPositiveGap { k, gap: gap.as_f64() });
    }
    if sweep.windows(2).any(|w| w[1].0 <= w[0].0) || sweep[0].0 == 0 {
        return Err(Error::InvalidArgument("K values must be positive and strictly increasing".into()));
    }
    let n = T::of_usize(sweep.len());
    let xs: Vec<T> = sweep.iter().map(|(k, _)| T::of_usize(*k).ln()).collect();
    let ys: Vec<T> = sweep.iter().map(|(_, g)| g.ln()).collect();
    let mx = xs.iter().copied().sum::<T>() / n;
    let my = ys.iter().copied().sum::<T>() / n;
    let mut sxx = T::zero();
    let mut sxy = T::zero();
    let mut syy = T::zero();
    for (&x, &y) in xs.iter().zip(&ys) {
        sxx = sxx + (x - mx) * (x - mx);
        sxy = sxy + (x - mx) * (y - my);
        syy = syy + (y - my) * (y - my);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy > T::zero() {
        sxy * sxy / (sxx * syy)
    } else {
        T::one()
    };
    Ok(RateFit { slope, intercept, r2 })
}

/// Drops points whose gap is below `1e3 · ε_mach · max(1, |f*|)` before fitting.
pub fn fit_rate_filtered<T: Scalar>(sweep: &[(usize, T)], f_star: T) -> Result<RateFit<T>> {
    let floor = T::of(1e3) * T::epsilon() * f_star.abs().max(T::one());
    let kept: Vec<(usize, T)> = sweep.iter().copied().filter(|(_, g)| *g >= floor).collect();
    fit_rate(&kept)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ks() -> Vec<usize> {
        (2..10).map(|e| 1usize << e).collect()
    }

    #[test]
    fn exact_power_laws() {
        let inv: Vec<(usize, f64)> = ks().into_iter().map(|k| (k, 7.0 / k as f64)).collect();
        let fit = fit_rate(&inv).unwrap();
        assert!((fit.slope + 1.0).abs() <= 1e-12);
        assert!((fit.r2 - 1.0).abs() <= 1e-12);
        assert!((fit.intercept - 7f64.ln()).abs() <= 1e-12);
        let sqrt: Vec<(usize, f64)> = ks().into_iter().map(|k| (k, 3.0 / (k as f64).sqrt())).collect();
        assert!((fit_rate(&sqrt).unwrap().slope + 0.5).abs() <= 1e-12);
    }

    #[test]
    fn rejects_bad_sweeps() {
        let short = [(1usize, 1.0), (2, 0.5), (4, 0.25)];
        assert!(fit_rate(&short).is_err());
        let zero = [(1usize, 1.0), (2, 0.5), (4, 0.0), (8, 0.1)];
        assert!(matches!(fit_rate(&zero), Err(Error::NonPositiveGap { k: 4, .. })));
        let unordered = [(1usize, 1.0), (4, 0.5), (2, 0.3), (8, 0.1)];
        assert!(fit_rate(&unordered).is_err());
    }

    #[test]
    fn filtering_drops_the_noise_floor() {
        let mut sweep: Vec<(usize, f64)> = ks().into_iter().map(|k| (k, 1.0 / k as f64)).collect();
        sweep.push((4096, 1e-17));
        assert!((fit_rate_filtered(&sweep, 0.0).unwrap().slope + 1.0).abs() < 1e-12);
    }
}
