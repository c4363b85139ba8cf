//! Distribution fitting and the RMSE performance index.
//!
//! Population histograms are normalized to unit area and compared
//! against the fitted probability density at each bin center:
//!
//! ```text
//! ρ = sqrt( Σ_i (X_i − X̂_i)² / N )
//! ```
//!
//! with `X_i` the normalized histogram height, `X̂_i` the fitted pdf at
//! the center of bin `i`, and `N` the number of bins. The time mean ρ̄
//! of the index summarizes a fit family per shell and species.

pub mod special;

use serde::{Deserialize, Serialize};

use crate::ensemble::{histogram_from_sample, EnsembleRun, PopulationHistogram};
use crate::error::{Error, Result};
use crate::params::Species;
use crate::scalar::{as_f64, lit, Real};
use special::{bessel_i0_scaled, bessel_i1_scaled, digamma, ln_gamma, trigamma};

/// Fit family tags.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FamilyKind {
    Gaussian,
    Gamma,
    Rician,
}

impl FamilyKind {
    pub const ALL: [FamilyKind; 3] = [FamilyKind::Gaussian, FamilyKind::Gamma, FamilyKind::Rician];

    pub fn label(self) -> &'static str {
        match self {
            FamilyKind::Gaussian => "gaussian",
            FamilyKind::Gamma => "gamma",
            FamilyKind::Rician => "rician",
        }
    }
}

/// A fitted distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FitFamily<T> {
    /// Parameters (μ, σ), σ > 0.
    Gaussian { mean: T, std: T },
    /// Parameters (k, θ), both > 0.
    Gamma { shape: T, scale: T },
    /// Parameters (ν, σ), ν ≥ 0, σ > 0.
    Rician { nu: T, sigma: T },
}

impl<T: Real> FitFamily<T> {
    pub fn kind(&self) -> FamilyKind {
        match self {
            FitFamily::Gaussian { .. } => FamilyKind::Gaussian,
            FitFamily::Gamma { .. } => FamilyKind::Gamma,
            FitFamily::Rician { .. } => FamilyKind::Rician,
        }
    }

    pub fn params(&self) -> (T, T) {
        match *self {
            FitFamily::Gaussian { mean, std } => (mean, std),
            FitFamily::Gamma { shape, scale } => (shape, scale),
            FitFamily::Rician { nu, sigma } => (nu, sigma),
        }
    }

    /// Probability density at `x`.
    pub fn pdf(&self, x: T) -> T {
        let half = lit::<T>(0.5);
        match *self {
            FitFamily::Gaussian { mean, std } => {
                let z = (x - mean) / std;
                (-half * z * z).exp() / (std * (lit::<T>(2.0) * T::pi()).sqrt())
            }
            FitFamily::Gamma { shape, scale } => {
                if x < T::zero() || (x == T::zero() && shape != T::one()) {
                    // The k < 1 density diverges at zero; reported as zero
                    // so the index stays finite.
                    return T::zero();
                }
                if x == T::zero() {
                    return T::one() / scale;
                }
                ((shape - T::one()) * x.ln() - x / scale - ln_gamma(shape) - shape * scale.ln())
                    .exp()
            }
            FitFamily::Rician { nu, sigma } => {
                if x <= T::zero() {
                    return T::zero();
                }
                let s2 = sigma * sigma;
                let d = x - nu;
                // (x/σ²)·exp(−(x−ν)²/2σ²)·e^(−xν/σ²)I₀(xν/σ²), grouped so
                // the Bessel factor never overflows.
                (x / s2) * (-half * d * d / s2).exp() * bessel_i0_scaled(x * nu / s2)
            }
        }
    }
}

fn sample_mean_var<T: Real>(sample: &[T]) -> Result<(T, T)> {
    if sample.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "fit needs >= 2 samples, got {}",
            sample.len()
        )));
    }
    let n = lit::<T>(sample.len() as f64);
    let mut sum = T::zero();
    for &v in sample {
        sum = sum + v;
    }
    let mean = sum / n;
    let mut ss = T::zero();
    for &v in sample {
        let d = v - mean;
        ss = ss + d * d;
    }
    let var = ss / (n - T::one());
    Ok((mean, var))
}

/// Gaussian fit by moment matching (sample mean, unbiased sample std).
pub fn fit_gaussian<T: Real>(sample: &[T]) -> Result<FitFamily<T>> {
    let (mean, var) = sample_mean_var(sample)?;
    if var <= T::zero() {
        return Err(Error::DegenerateFit("zero sample variance".into()));
    }
    Ok(FitFamily::Gaussian {
        mean,
        std: var.sqrt(),
    })
}

fn check_nonnegative<T: Real>(sample: &[T], family: &str) -> Result<()> {
    if sample.iter().any(|&v| v < T::zero()) {
        return Err(Error::Domain(format!(
            "{family} fit requires nonnegative data"
        )));
    }
    Ok(())
}

/// Gamma fit by moment matching: k = mean²/var, θ = var/mean.
pub fn fit_gamma<T: Real>(sample: &[T]) -> Result<FitFamily<T>> {
    check_nonnegative(sample, "gamma")?;
    let (mean, var) = sample_mean_var(sample)?;
    if var <= T::zero() {
        return Err(Error::DegenerateFit("zero sample variance".into()));
    }
    if mean <= T::zero() {
        return Err(Error::DegenerateFit(
            "gamma fit requires a positive mean".into(),
        ));
    }
    Ok(FitFamily::Gamma {
        shape: mean * mean / var,
        scale: var / mean,
    })
}

/// Gamma fit by maximum likelihood (Newton iteration on the digamma
/// equation); requires strictly positive data, which zero-valued
/// population counts violate — hence moment matching is the default.
pub fn fit_gamma_mle<T: Real>(sample: &[T]) -> Result<FitFamily<T>> {
    if sample.iter().any(|&v| v <= T::zero()) {
        return Err(Error::Domain(
            "gamma maximum-likelihood fit requires strictly positive data".into(),
        ));
    }
    let (mean, var) = sample_mean_var(sample)?;
    if var <= T::zero() {
        return Err(Error::DegenerateFit("zero sample variance".into()));
    }
    let n = lit::<T>(sample.len() as f64);
    let mut mean_ln = T::zero();
    for &v in sample {
        mean_ln = mean_ln + v.ln();
    }
    mean_ln = mean_ln / n;
    // s = ln(mean) − mean(ln x) > 0 by Jensen; solve ln k − ψ(k) = s.
    let s = mean.ln() - mean_ln;
    if s <= T::zero() {
        return Err(Error::DegenerateFit(
            "degenerate log-moment statistic in gamma MLE".into(),
        ));
    }
    let mut k = mean * mean / var;
    for _ in 0..100 {
        let f = k.ln() - digamma(k) - s;
        let df = T::one() / k - trigamma(k);
        let next = (k - f / df).max(k * lit(1e-3));
        let done = (next - k).abs() <= k * lit(1e-13);
        k = next;
        if done {
            break;
        }
    }
    Ok(FitFamily::Gamma {
        shape: k,
        scale: mean / k,
    })
}

/// `L(θ) = e^(−a/2)[(1+a) I₀(a/2) + a I₁(a/2)]` with `a = θ²/2`: the
/// Laguerre factor in the Rician mean `E[X] = σ sqrt(π/2) L(θ)`.
fn rician_laguerre<T: Real>(theta: T) -> T {
    let a = theta * theta * lit(0.5);
    let z = a * lit(0.5);
    (T::one() + a) * bessel_i0_scaled(z) + a * bessel_i1_scaled(z)
}

/// `ξ(θ) = 2 + θ² − (π/2) L(θ)²`, so that `Var[X] = σ² ξ(θ)`.
fn rician_xi<T: Real>(theta: T) -> T {
    let l = rician_laguerre(theta);
    lit::<T>(2.0) + theta * theta - T::pi() * lit::<T>(0.5) * l * l
}

/// Mean/std ratio of a Rician with SNR θ = ν/σ; strictly increasing.
fn rician_ratio<T: Real>(theta: T) -> T {
    (T::pi() * lit::<T>(0.5)).sqrt() * rician_laguerre(theta) / rician_xi(theta).sqrt()
}

/// Rician fit by the method of moments: solves the SNR parameter from
/// the sample mean/std ratio by bracketed bisection; degrades to a
/// Rayleigh (ν = 0, second moment matched) when the ratio is at or below
/// the Rayleigh value `sqrt(π/(4−π)) ≈ 1.913`.
pub fn fit_rician<T: Real>(sample: &[T]) -> Result<FitFamily<T>> {
    check_nonnegative(sample, "rician")?;
    let (mean, var) = sample_mean_var(sample)?;
    if var <= T::zero() {
        return Err(Error::DegenerateFit("zero sample variance".into()));
    }
    // mean² ≤ var/(4/π − 1) marks the no-line-of-sight regime.
    let rayleigh_bound = var / (lit::<T>(4.0) / T::pi() - T::one());
    if mean * mean <= rayleigh_bound {
        let second_moment = mean * mean + var;
        return Ok(FitFamily::Rician {
            nu: T::zero(),
            sigma: (second_moment * lit(0.5)).sqrt(),
        });
    }
    let target = mean / var.sqrt();
    let mut lo = T::zero();
    let mut hi = T::one().max(target);
    for _ in 0..200 {
        if rician_ratio(hi) > target {
            break;
        }
        hi = hi * lit(2.0);
    }
    for _ in 0..200 {
        let mid = (lo + hi) * lit(0.5);
        if rician_ratio(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= (T::one() + hi) * lit(1e-14) {
            break;
        }
    }
    let theta = (lo + hi) * lit(0.5);
    let sigma = var.sqrt() / rician_xi(theta).sqrt();
    Ok(FitFamily::Rician {
        nu: theta * sigma,
        sigma,
    })
}

/// Fits one family to a sample.
pub fn fit_family<T: Real>(kind: FamilyKind, sample: &[T]) -> Result<FitFamily<T>> {
    match kind {
        FamilyKind::Gaussian => fit_gaussian(sample),
        FamilyKind::Gamma => fit_gamma(sample),
        FamilyKind::Rician => fit_rician(sample),
    }
}

/// A histogram normalized to unit area.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityHistogram<T> {
    pub centers: Vec<T>,
    pub widths: Vec<T>,
    pub densities: Vec<T>,
    pub total: u64,
    pub degenerate: bool,
}

/// Normalizes counts to densities: `density = count/(total·width)`.
pub fn normalize_histogram<T: Real>(h: &PopulationHistogram<T>) -> Result<DensityHistogram<T>> {
    let total = h.total();
    if total == 0 {
        return Err(Error::EmptyData("histogram holds no counts".into()));
    }
    let total_t = lit::<T>(total as f64);
    let n = h.n_bins();
    let mut centers = Vec::with_capacity(n);
    let mut widths = Vec::with_capacity(n);
    let mut densities = Vec::with_capacity(n);
    for b in 0..n {
        let width = h.bin_width(b);
        centers.push(h.bin_center(b));
        widths.push(width);
        densities.push(lit::<T>(h.counts[b] as f64) / (total_t * width));
    }
    Ok(DensityHistogram {
        centers,
        widths,
        densities,
        total,
        degenerate: h.degenerate,
    })
}

/// RMSE between the normalized histogram and the fitted pdf evaluated at
/// the bin centers.
pub fn rmse<T: Real>(hist: &DensityHistogram<T>, fit: &FitFamily<T>) -> T {
    let mut sum = T::zero();
    for (&center, &density) in hist.centers.iter().zip(hist.densities.iter()) {
        let diff = density - fit.pdf(center);
        sum = sum + diff * diff;
    }
    (sum / lit(hist.centers.len() as f64)).sqrt()
}

/// Performance index ρ for one family/species/shell at every time step.
/// Steps whose sample is degenerate or unfittable are recorded missing.
pub fn performance_index_series<T: Real>(
    run: &EnsembleRun<T>,
    kind: FamilyKind,
    species: Species,
    shell: usize,
    n_bins: usize,
) -> Vec<Option<T>> {
    (0..run.n_steps())
        .map(|t_index| {
            let sample = run.sample(species, shell, t_index);
            let hist = histogram_from_sample(&sample, n_bins, species, shell, t_index).ok()?;
            if hist.degenerate {
                return None;
            }
            let density = normalize_histogram(&hist).ok()?;
            let fit = fit_family(kind, &sample).ok()?;
            Some(rmse(&density, &fit))
        })
        .collect()
}

/// Time mean ρ̄ of the index, skipping missing entries.
pub fn performance_index_mean<T: Real>(series: &[Option<T>]) -> Result<T> {
    let mut sum = T::zero();
    let mut count = 0usize;
    for value in series.iter().flatten() {
        sum = sum + *value;
        count += 1;
    }
    if count == 0 {
        return Err(Error::EmptyData(
            "performance index series has no usable entries".into(),
        ));
    }
    Ok(sum / lit(count as f64))
}

/// One fitted family at one (time, shell, species).
#[derive(Debug, Clone, Serialize)]
pub struct FitReport {
    pub time: f64,
    pub shell: usize,
    pub species: String,
    pub family: String,
    pub param1: f64,
    pub param2: f64,
    pub rmse: f64,
}

/// ρ̄ for one (shell, species, family) over the whole run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RhoSummary {
    pub shell: usize,
    pub species: String,
    pub family: String,
    pub rho_bar: f64,
    pub steps_used: usize,
    pub steps_missing: usize,
    pub sample_size: usize,
}

/// Full fit-index table plus per-shell ρ̄ summaries for a run.
pub fn fit_index<T: Real>(
    run: &EnsembleRun<T>,
    families: &[FamilyKind],
    n_bins: usize,
) -> Result<(Vec<FitReport>, Vec<RhoSummary>)> {
    let n_shells = run.n_shells();
    if n_shells == 0 {
        return Err(Error::EmptyData("fit index of an empty ensemble".into()));
    }
    let mut reports = Vec::new();
    let mut summaries = Vec::new();
    for shell in 1..=n_shells {
        for species in Species::ALL {
            for &family in families {
                let mut series = Vec::with_capacity(run.n_steps());
                for t_index in 0..run.n_steps() {
                    let sample = run.sample(species, shell, t_index);
                    let step = histogram_from_sample(&sample, n_bins, species, shell, t_index)
                        .ok()
                        .filter(|h| !h.degenerate)
                        .and_then(|hist| {
                            let density = normalize_histogram(&hist).ok()?;
                            let fit = fit_family(family, &sample).ok()?;
                            Some((fit, rmse(&density, &fit)))
                        });
                    if let Some((fit, rho)) = &step {
                        let (p1, p2) = fit.params();
                        reports.push(FitReport {
                            time: as_f64(run.times[t_index]),
                            shell,
                            species: species.label().to_string(),
                            family: family.label().to_string(),
                            param1: as_f64(p1),
                            param2: as_f64(p2),
                            rmse: as_f64(*rho),
                        });
                    }
                    series.push(step.map(|(_, rho)| rho));
                }
                let steps_used = series.iter().filter(|s| s.is_some()).count();
                if let Ok(rho_bar) = performance_index_mean(&series) {
                    summaries.push(RhoSummary {
                        shell,
                        species: species.label().to_string(),
                        family: family.label().to_string(),
                        rho_bar: as_f64(rho_bar),
                        steps_used,
                        steps_missing: series.len() - steps_used,
                        sample_size: run.members.len(),
                    });
                }
            }
        }
    }
    Ok((reports, summaries))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_distr::Distribution;

    fn hist_from(counts: Vec<u64>, lo: f64, hi: f64) -> PopulationHistogram<f64> {
        let n = counts.len();
        let edges = (0..=n)
            .map(|b| lo + (hi - lo) * b as f64 / n as f64)
            .collect();
        PopulationHistogram {
            edges,
            counts,
            degenerate: false,
            species: Species::N,
            shell: 0,
            t_index: 0,
        }
    }

    #[test]
    fn normalize_single_bin() {
        // One bin of width 2 carrying all mass: density 1/2.
        let h = hist_from(vec![10], 0.0, 2.0);
        let d = normalize_histogram(&h).unwrap();
        assert_eq!(d.densities, vec![0.5]);
    }

    #[test]
    fn normalize_uniform_four_bins() {
        let h = hist_from(vec![5, 5, 5, 5], 0.0, 4.0);
        let d = normalize_histogram(&h).unwrap();
        for v in d.densities {
            assert_relative_eq!(v, 0.25, max_relative = 1e-14);
        }
    }

    #[test]
    fn normalized_area_is_one() {
        let h = hist_from(vec![3, 0, 7, 11, 2, 9], 10.0, 130.0);
        let d = normalize_histogram(&h).unwrap();
        let area: f64 = d
            .densities
            .iter()
            .zip(d.widths.iter())
            .map(|(x, w)| x * w)
            .sum();
        assert_relative_eq!(area, 1.0, epsilon = 1e-12);
        assert!(normalize_histogram(&hist_from(vec![0, 0], 0.0, 1.0)).is_err());
    }

    #[test]
    fn gaussian_fit_two_points() {
        let fit = fit_gaussian(&[1.0, 3.0]).unwrap();
        let (mean, std) = fit.params();
        assert_eq!(mean, 2.0);
        assert_eq!(std, 2.0f64.sqrt());
        assert!(fit_gaussian(&[4.0, 4.0, 4.0]).is_err());
    }

    #[test]
    fn gamma_fit_moment_identities() {
        // mean 4, variance 4 -> k = 4, θ = 1.
        let fit = fit_gamma(&[2.0, 4.0, 6.0]).unwrap();
        let (shape, scale) = fit.params();
        assert_eq!(shape, 4.0);
        assert_eq!(scale, 1.0);
        assert!(fit_gamma(&[-1.0, 2.0]).is_err());
    }

    #[test]
    fn gamma_mle_recovers_shape() {
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(5);
        let gamma = rand_distr::Gamma::new(4.0, 50.0).unwrap();
        let sample: Vec<f64> = (0..20_000).map(|_| gamma.sample(&mut rng)).collect();
        let fit = fit_gamma_mle(&sample).unwrap();
        let (shape, scale) = fit.params();
        assert_relative_eq!(shape, 4.0, max_relative = 0.05);
        assert_relative_eq!(scale, 50.0, max_relative = 0.05);
        assert!(fit_gamma_mle(&[0.0, 1.0]).is_err());
    }

    #[test]
    fn rician_degrades_to_rayleigh() {
        // mean/std = 2/√2 ≈ 1.41 < 1.913: no line-of-sight component.
        let fit = fit_rician(&[1.0, 3.0]).unwrap();
        let (nu, sigma) = fit.params();
        assert_eq!(nu, 0.0);
        assert_relative_eq!(sigma, 3.0f64.sqrt(), max_relative = 1e-12);
    }

    #[test]
    fn rician_moment_fit_reproduces_sample_moments() {
        let fit = fit_rician(&[9.0, 11.0]).unwrap();
        let (nu, sigma) = fit.params();
        assert!(nu > 0.0);
        let theta = nu / sigma;
        let fitted_mean = sigma * (std::f64::consts::PI / 2.0).sqrt() * rician_laguerre(theta);
        let fitted_var = sigma * sigma * rician_xi(theta);
        assert_relative_eq!(fitted_mean, 10.0, max_relative = 1e-10);
        assert_relative_eq!(fitted_var, 2.0, max_relative = 1e-9);
    }

    #[test]
    fn rician_pdf_integrates_to_one() {
        let fit = FitFamily::Rician {
            nu: 3.0,
            sigma: 1.0,
        };
        let dx = 1e-3;
        let mut area = 0.0;
        let mut x = 0.0;
        while x < 20.0 {
            area += fit.pdf(x + 0.5 * dx) * dx;
            x += dx;
        }
        assert_relative_eq!(area, 1.0, max_relative = 1e-6);
        // Large-argument grouping stays finite far from the mode.
        let big = FitFamily::Rician {
            nu: 5000.0f64,
            sigma: 10.0,
        };
        assert!(big.pdf(5000.0).is_finite());
        assert!(big.pdf(4000.0) >= 0.0);
    }

    #[test]
    fn gamma_pdf_matches_closed_form() {
        let fit = FitFamily::Gamma {
            shape: 1.0,
            scale: 2.0,
        };
        // k = 1 is the exponential: pdf(0) = 1/θ.
        assert_relative_eq!(fit.pdf(0.0), 0.5, max_relative = 1e-12);
        assert_relative_eq!(fit.pdf(2.0), 0.5 * (-1.0f64).exp(), max_relative = 1e-12);
        assert_eq!(fit.pdf(-1.0), 0.0);
    }

    #[test]
    fn rmse_single_bin_hand_value() {
        // density 0.5 vs pdf 0.3 in one bin: 0.2.
        let d = DensityHistogram {
            centers: vec![0.0],
            widths: vec![1.0],
            densities: vec![0.5],
            total: 1,
            degenerate: false,
        };
        // A gaussian whose pdf at 0 is exactly 0.3: σ = 1/(0.3·sqrt(2π)).
        let sigma = 1.0 / (0.3 * (2.0 * std::f64::consts::PI).sqrt());
        let fit = FitFamily::Gaussian {
            mean: 0.0,
            std: sigma,
        };
        assert_relative_eq!(rmse(&d, &fit), 0.2, max_relative = 1e-12);
    }

    #[test]
    fn rmse_matches_brute_force_loop() {
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(17);
        let uniform = rand_distr::Uniform::new(0.0f64, 1.0).unwrap();
        for _ in 0..20 {
            let n = 30;
            let centers: Vec<f64> = (0..n).map(|i| 10.0 + i as f64).collect();
            let densities: Vec<f64> = (0..n).map(|_| uniform.sample(&mut rng)).collect();
            let d = DensityHistogram {
                centers: centers.clone(),
                widths: vec![1.0; n],
                densities: densities.clone(),
                total: 100,
                degenerate: false,
            };
            let fit = FitFamily::Gaussian {
                mean: 20.0,
                std: 5.0,
            };
            let mut acc = 0.0;
            for i in 0..n {
                acc += (densities[i] - fit.pdf(centers[i])).powi(2);
            }
            let expected = (acc / n as f64).sqrt();
            assert!((rmse(&d, &fit) - expected).abs() <= 1e-15);
        }
    }

    #[test]
    fn rmse_is_invariant_under_bin_reordering_and_zero_at_exact_fit() {
        let fit = FitFamily::Gaussian {
            mean: 5.0,
            std: 2.0,
        };
        let centers: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let densities: Vec<f64> = centers.iter().map(|&c| fit.pdf(c)).collect();
        let mk = |cs: Vec<f64>, ds: Vec<f64>| DensityHistogram {
            centers: cs,
            widths: vec![1.0; 10],
            densities: ds,
            total: 10,
            degenerate: false,
        };
        let exact = mk(centers.clone(), densities.clone());
        assert_eq!(rmse(&exact, &fit), 0.0);

        let mut perm_c = centers.clone();
        let mut perm_d = densities.clone();
        perm_c.reverse();
        perm_d.reverse();
        let mut perturbed = densities.clone();
        perturbed[3] += 0.01;
        let reordered = mk(perm_c, perm_d);
        let bumped = mk(centers, perturbed);
        assert_eq!(rmse(&reordered, &fit), 0.0);
        assert!(rmse(&bumped, &fit) > 0.0);
    }

    #[test]
    fn index_mean_skips_missing() {
        assert_relative_eq!(
            performance_index_mean(&[Some(0.1), Some(0.3)]).unwrap(),
            0.2,
            max_relative = 1e-14
        );
        assert_relative_eq!(
            performance_index_mean(&[Some(0.4), None, Some(0.4), None]).unwrap(),
            0.4,
            max_relative = 1e-14
        );
        assert!(performance_index_mean::<f64>(&[None, None]).is_err());
    }

    #[test]
    fn gamma_ranks_first_on_gamma_draws() {
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(123);
        let gamma = rand_distr::Gamma::new(4.0, 50.0).unwrap();
        let mut wins = 0;
        let trials = 10;
        for _ in 0..trials {
            let sample: Vec<f64> = (0..4000).map(|_| gamma.sample(&mut rng)).collect();
            let hist = histogram_from_sample(&sample, 30, Species::N, 0, 0).unwrap();
            let density = normalize_histogram(&hist).unwrap();
            let rho_gamma = rmse(&density, &fit_gamma(&sample).unwrap());
            let rho_gauss = rmse(&density, &fit_gaussian(&sample).unwrap());
            if rho_gamma < rho_gauss {
                wins += 1;
            }
        }
        assert!(wins >= 9, "gamma won only {wins}/{trials}");
    }
}
