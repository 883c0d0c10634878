//! Binned distributions on a compact support, plus the evaluation metrics
//! (Jensen-Shannon divergence, density-space L2, negative log-likelihood).
//!
//! A [`BinnedDistribution`] stores a probability mass per bin; the density on
//! bin `i` is `mass[i] * q / delta`. All constructors normalize, so a value of
//! this type always sums to one.

use rand::Rng;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum DistError {
    #[error("support bounds invalid: lower {0} must be < upper {1}")]
    InvalidBounds(f64, f64),
    #[error("bin count must be at least 2, got {0}")]
    TooFewBins(usize),
    #[error("total mass is non-positive or an entry is negative")]
    NonPositiveTotal,
    #[error("all density values underflowed to zero")]
    DegenerateDensity,
    #[error("supports do not match")]
    SupportMismatch,
    #[error("sample {0} lies outside the support")]
    SampleOutOfSupport(f64),
    #[error("sample {sample} falls in zero-mass bin {bin}")]
    ZeroDensityBin { sample: f64, bin: usize },
    #[error("sample list is empty")]
    EmptySamples,
    #[error("variance must be positive, got {0}")]
    NonPositiveVariance(f64),
    #[error("samples have zero variance; supply an explicit bandwidth")]
    ZeroVariance,
    #[error("raw vector has length {got}, support has {want} bins")]
    LengthMismatch { got: usize, want: usize },
}

/// The compact interval `[lower, upper]` split into `q` equal-width bins.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Support {
    lower: f64,
    upper: f64,
    q: usize,
}

impl Support {
    pub fn new(lower: f64, upper: f64, q: usize) -> Result<Self, DistError> {
        if !(upper > lower) || !lower.is_finite() || !upper.is_finite() {
            return Err(DistError::InvalidBounds(lower, upper));
        }
        if q < 2 {
            return Err(DistError::TooFewBins(q));
        }
        Ok(Support { lower, upper, q })
    }

    pub fn lower(&self) -> f64 {
        self.lower
    }

    pub fn upper(&self) -> f64 {
        self.upper
    }

    pub fn q(&self) -> usize {
        self.q
    }

    /// Support length Δ.
    pub fn delta(&self) -> f64 {
        self.upper - self.lower
    }

    /// Width of one bin, Δ/q.
    pub fn bin_width(&self) -> f64 {
        self.delta() / self.q as f64
    }

    /// Midpoints `lower + (i + 0.5)·Δ/q`, strictly increasing.
    pub fn bin_centers(&self) -> Vec<f64> {
        let w = self.bin_width();
        (0..self.q).map(|i| self.lower + (i as f64 + 0.5) * w).collect()
    }

    /// Index of the bin containing `x`; bins are half-open with the last one
    /// closed at `upper`.
    pub fn bin_of(&self, x: f64) -> Result<usize, DistError> {
        if x < self.lower || x > self.upper || !x.is_finite() {
            return Err(DistError::SampleOutOfSupport(x));
        }
        let i = ((x - self.lower) / self.bin_width()) as usize;
        Ok(i.min(self.q - 1))
    }
}

/// A probability mass function over the bins of a [`Support`].
#[derive(Debug, Clone, PartialEq)]
pub struct BinnedDistribution {
    support: Support,
    mass: Vec<f64>,
}

impl BinnedDistribution {
    /// Normalizes `raw` into a distribution. Rejects negative entries and
    /// non-positive totals.
    pub fn normalize(raw: Vec<f64>, support: Support) -> Result<Self, DistError> {
        if raw.len() != support.q() {
            return Err(DistError::LengthMismatch { got: raw.len(), want: support.q() });
        }
        if raw.iter().any(|&v| v < 0.0 || !v.is_finite()) {
            return Err(DistError::NonPositiveTotal);
        }
        let total: f64 = raw.iter().sum();
        if total <= 0.0 {
            return Err(DistError::NonPositiveTotal);
        }
        let mass = raw.into_iter().map(|v| v / total).collect();
        Ok(BinnedDistribution { support, mass })
    }

    /// Wraps a mass vector that already sums to one, preserving its exact
    /// bit pattern. Used by file readers for exact round trips; callers are
    /// responsible for checking the total.
    pub(crate) fn from_validated_mass(
        mass: Vec<f64>,
        support: Support,
    ) -> Result<Self, DistError> {
        if mass.len() != support.q() {
            return Err(DistError::LengthMismatch { got: mass.len(), want: support.q() });
        }
        if mass.iter().any(|&v| v < 0.0 || !v.is_finite()) {
            return Err(DistError::NonPositiveTotal);
        }
        Ok(BinnedDistribution { support, mass })
    }

    /// Truncated Gaussian: pointwise density at bin centers, renormalized.
    pub fn gaussian(mu: f64, variance: f64, support: Support) -> Result<Self, DistError> {
        if variance <= 0.0 {
            return Err(DistError::NonPositiveVariance(variance));
        }
        let raw: Vec<f64> = support
            .bin_centers()
            .iter()
            .map(|&s| (-(s - mu) * (s - mu) / (2.0 * variance)).exp())
            .collect();
        if raw.iter().all(|&v| v == 0.0) {
            return Err(DistError::DegenerateDensity);
        }
        Self::normalize(raw, support)
    }

    /// The uniform distribution: equal mass in every bin.
    pub fn uniform(support: Support) -> Self {
        let q = support.q();
        BinnedDistribution { support, mass: vec![1.0 / q as f64; q] }
    }

    pub fn support(&self) -> Support {
        self.support
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    /// Density value on bin `i`: mass scaled by q/Δ.
    pub fn density(&self, i: usize) -> f64 {
        self.mass[i] * self.support.q() as f64 / self.support.delta()
    }

    /// Inverse-CDF sampling with uniform jitter inside the chosen bin.
    pub fn sample<R: Rng>(&self, n: usize, rng: &mut R) -> Vec<f64> {
        let w = self.support.bin_width();
        let mut cdf = Vec::with_capacity(self.mass.len());
        let mut acc = 0.0;
        for &m in &self.mass {
            acc += m;
            cdf.push(acc);
        }
        (0..n)
            .map(|_| {
                let u: f64 = rng.gen();
                let bin = match cdf.binary_search_by(|c| c.partial_cmp(&u).unwrap()) {
                    Ok(i) | Err(i) => i.min(self.mass.len() - 1),
                };
                let jitter: f64 = rng.gen();
                self.support.lower() + (bin as f64 + jitter) * w
            })
            .collect()
    }
}

/// Jensen-Shannon divergence with natural logarithm; bounded by ln 2.
pub fn jsd(p: &BinnedDistribution, q_: &BinnedDistribution) -> Result<f64, DistError> {
    if p.support() != q_.support() {
        return Err(DistError::SupportMismatch);
    }
    let mut acc = 0.0;
    for (&a, &b) in p.mass().iter().zip(q_.mass()) {
        let m = 0.5 * (a + b);
        if a > 0.0 {
            acc += 0.5 * a * (a / m).ln();
        }
        if b > 0.0 {
            acc += 0.5 * b * (b / m).ln();
        }
    }
    Ok(acc.max(0.0))
}

/// Function-space L2 distance between the densities, Riemann-approximated:
/// `sqrt( Σ (d_i − e_i)² · Δ/q )` with `d_i = mass_i·q/Δ`.
pub fn l2_distance(p: &BinnedDistribution, q_: &BinnedDistribution) -> Result<f64, DistError> {
    if p.support() != q_.support() {
        return Err(DistError::SupportMismatch);
    }
    let scale = p.support().q() as f64 / p.support().delta();
    let w = p.support().bin_width();
    let sum: f64 = p
        .mass()
        .iter()
        .zip(q_.mass())
        .map(|(&a, &b)| {
            let d = (a - b) * scale;
            d * d * w
        })
        .sum();
    Ok(sum.sqrt())
}

/// Negative log-likelihood of `samples` under the bin-constant density of `p`.
pub fn nll(p: &BinnedDistribution, samples: &[f64]) -> Result<f64, DistError> {
    let mut acc = 0.0;
    for &x in samples {
        let bin = p.support().bin_of(x)?;
        let d = p.density(bin);
        if d <= 0.0 {
            return Err(DistError::ZeroDensityBin { sample: x, bin });
        }
        acc -= d.ln();
    }
    Ok(acc)
}

/// Histogram of `samples` over the support's bins, normalized.
pub fn histogram_rebin(samples: &[f64], support: Support) -> Result<BinnedDistribution, DistError> {
    if samples.is_empty() {
        return Err(DistError::EmptySamples);
    }
    let mut counts = vec![0.0; support.q()];
    for &x in samples {
        counts[support.bin_of(x)?] += 1.0;
    }
    BinnedDistribution::normalize(counts, support)
}

/// Bandwidth choice for [`kde`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bandwidth {
    /// Silverman's rule: `1.06 · σ̂ · n^{-1/5}`.
    Auto,
    Fixed(f64),
}

/// Gaussian kernel density estimate evaluated at the bin centers, normalized.
pub fn kde(
    samples: &[f64],
    support: Support,
    bandwidth: Bandwidth,
) -> Result<BinnedDistribution, DistError> {
    if samples.is_empty() {
        return Err(DistError::EmptySamples);
    }
    let h = match bandwidth {
        Bandwidth::Fixed(h) if h > 0.0 => h,
        Bandwidth::Fixed(h) => return Err(DistError::NonPositiveVariance(h)),
        Bandwidth::Auto => {
            let n = samples.len() as f64;
            let mean = samples.iter().sum::<f64>() / n;
            let var = samples.iter().map(|&x| (x - mean) * (x - mean)).sum::<f64>() / n;
            if var <= 0.0 {
                return Err(DistError::ZeroVariance);
            }
            1.06 * var.sqrt() * n.powf(-0.2)
        }
    };
    let inv = 1.0 / (2.0 * h * h);
    let raw: Vec<f64> = support
        .bin_centers()
        .iter()
        .map(|&s| samples.iter().map(|&x| (-(s - x) * (s - x) * inv).exp()).sum())
        .collect();
    if raw.iter().all(|&v| v == 0.0) {
        return Err(DistError::DegenerateDensity);
    }
    BinnedDistribution::normalize(raw, support)
}
