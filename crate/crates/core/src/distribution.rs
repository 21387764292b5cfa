//! Atomless type distributions on `[0, alpha]`.

use crate::error::{Error, Result};

/// Minimum number of bins for a histogram distribution.
pub const MIN_BINS: usize = 1000;

#[derive(Debug, Clone, PartialEq)]
enum Shape {
    Uniform,
    /// Piecewise-constant density on equal-width bins.
    Histogram {
        masses: Vec<f64>,
        cum_mass: Vec<f64>,
        cum_moment: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TypeDistribution {
    alpha: f64,
    shape: Shape,
}

impl TypeDistribution {
    pub fn uniform(alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        Ok(TypeDistribution {
            alpha,
            shape: Shape::Uniform,
        })
    }

    /// Histogram with `masses.len()` equal bins on `[0, alpha]`. Masses are
    /// normalised to sum to one.
    pub fn from_masses(alpha: f64, masses: &[f64]) -> Result<Self> {
        check_alpha(alpha)?;
        if masses.len() < MIN_BINS {
            return Err(Error::param(
                "masses",
                format!("need at least {MIN_BINS} bins, got {}", masses.len()),
            ));
        }
        if masses.iter().any(|m| !m.is_finite() || *m < 0.0) {
            return Err(Error::param(
                "masses",
                "bin masses must be finite and non-negative",
            ));
        }
        let total: f64 = masses.iter().sum();
        if total <= 0.0 {
            return Err(Error::param("masses", "total mass must be positive"));
        }
        let masses: Vec<f64> = masses.iter().map(|m| m / total).collect();
        let width = alpha / masses.len() as f64;
        let mut cum_mass = Vec::with_capacity(masses.len() + 1);
        let mut cum_moment = Vec::with_capacity(masses.len() + 1);
        let (mut cm, mut mo) = (0.0, 0.0);
        cum_mass.push(0.0);
        cum_moment.push(0.0);
        for (i, m) in masses.iter().enumerate() {
            cm += m;
            // bin mean is its midpoint
            mo += m * (i as f64 + 0.5) * width;
            cum_mass.push(cm);
            cum_moment.push(mo);
        }
        Ok(TypeDistribution {
            alpha,
            shape: Shape::Histogram {
                masses,
                cum_mass,
                cum_moment,
            },
        })
    }

    /// Histogram from a (not necessarily normalised) density sampled at bin
    /// midpoints.
    pub fn from_density<F: Fn(f64) -> f64>(alpha: f64, bins: usize, density: F) -> Result<Self> {
        check_alpha(alpha)?;
        let width = alpha / bins as f64;
        let masses: Vec<f64> = (0..bins)
            .map(|i| density((i as f64 + 0.5) * width))
            .collect();
        Self::from_masses(alpha, &masses)
    }

    /// Truncated normal bump centred at `center`; a narrow `width` gives a
    /// distribution concentrated near one type.
    pub fn spike(alpha: f64, center: f64, width: f64, bins: usize) -> Result<Self> {
        if !(width > 0.0) {
            return Err(Error::param("width", "must be positive"));
        }
        Self::from_density(alpha, bins, |t| {
            (-0.5 * ((t - center) / width).powi(2)).exp()
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn bins(&self) -> Option<usize> {
        match &self.shape {
            Shape::Uniform => None,
            Shape::Histogram { masses, .. } => Some(masses.len()),
        }
    }

    pub fn cdf(&self, theta: f64) -> f64 {
        let t = theta.clamp(0.0, self.alpha);
        match &self.shape {
            Shape::Uniform => t / self.alpha,
            Shape::Histogram {
                masses, cum_mass, ..
            } => {
                let (i, frac) = self.locate(t, masses.len());
                (cum_mass[i] + masses.get(i).map_or(0.0, |m| m * frac)).min(1.0)
            }
        }
    }

    /// `int_0^theta t dF(t)`
    fn partial_moment(&self, theta: f64) -> f64 {
        let t = theta.clamp(0.0, self.alpha);
        match &self.shape {
            Shape::Uniform => t * t / (2.0 * self.alpha),
            Shape::Histogram {
                masses, cum_moment, ..
            } => {
                let n = masses.len();
                let (i, frac) = self.locate(t, n);
                let width = self.alpha / n as f64;
                let lo = i as f64 * width;
                let inside = masses.get(i).map_or(0.0, |m| {
                    let x = lo + frac * width;
                    m / width * (x * x - lo * lo) / 2.0
                });
                cum_moment[i] + inside
            }
        }
    }

    fn locate(&self, t: f64, n: usize) -> (usize, f64) {
        let pos = t / self.alpha * n as f64;
        let i = (pos.floor() as usize).min(n);
        (i, if i == n { 0.0 } else { pos - i as f64 })
    }

    pub fn mean(&self) -> f64 {
        self.partial_moment(self.alpha)
    }

    /// Mass of `(a, b]`.
    pub fn mass_between(&self, a: f64, b: f64) -> f64 {
        (self.cdf(b) - self.cdf(a)).max(0.0)
    }

    /// `E[theta | a < theta <= b]`, or `None` when the interval has no mass.
    pub fn conditional_mean(&self, a: f64, b: f64) -> Option<f64> {
        let mass = self.mass_between(a, b);
        if mass <= 0.0 {
            return None;
        }
        let mean = (self.partial_moment(b) - self.partial_moment(a)) / mass;
        Some(mean.clamp(a.max(0.0), b.min(self.alpha)))
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::param(
            "alpha",
            format!("must lie in (0, 1), got {alpha}"),
        ))
    }
}
