//! Prior distributions over the model parameters (θ, δ, b).
//!
//! All three parameters are positive; sampling and density evaluation work
//! in the unconstrained coordinate `z = ln x`. Log-normal locations follow
//! the base-10 convention: `LogNormal10 { mu_exp10: μ, sigma: σ }` places a
//! Normal(ln 10^μ, σ²) on `ln x`, so the median of `x` is `10^μ`.

use crate::dual::Dual;
use crate::error::{Error, Result};
use crate::scalar::{Real, Scalar};
use num_traits::{Float, ToPrimitive};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

const LN_10: f64 = std::f64::consts::LN_10;

/// One marginal prior.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PriorSpec {
    /// Log-normal with base-10 location: `ln x ~ Normal(ln 10^mu_exp10, sigma^2)`.
    LogNormal10 { mu_exp10: f64, sigma: f64 },
    /// `x` uniform in log space on `[lo, hi]` (natural scale bounds).
    LogUniform { lo: f64, hi: f64 },
    /// Normal directly on the unconstrained coordinate `z = ln x`.
    Normal { mu: f64, sigma: f64 },
}

impl PriorSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            PriorSpec::LogNormal10 { sigma, .. } | PriorSpec::Normal { sigma, .. } => {
                if sigma <= 0.0 {
                    return Err(Error::InvalidConfig("prior sigma must be positive".into()));
                }
            }
            PriorSpec::LogUniform { lo, hi } => {
                if !(lo > 0.0 && lo < hi) {
                    return Err(Error::InvalidConfig(
                        "log-uniform needs 0 < lo < hi".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Log density of the unconstrained coordinate `z = ln x`.
    pub fn log_density_z<S: Scalar>(&self, z: S) -> S {
        match *self {
            PriorSpec::LogNormal10 { mu_exp10, sigma } => {
                normal_logpdf(z, mu_exp10 * LN_10, sigma)
            }
            PriorSpec::Normal { mu, sigma } => normal_logpdf(z, mu, sigma),
            PriorSpec::LogUniform { lo, hi } => {
                let (llo, lhi) = (lo.ln(), hi.ln());
                let zv = z.value().to_f64().unwrap();
                if zv < llo || zv > lhi {
                    S::from_real(S::Real::neg_infinity())
                } else {
                    S::from_real(S::Real::of(-(lhi - llo).ln()))
                }
            }
        }
    }

    /// Median of the natural-scale parameter.
    pub fn median(&self) -> f64 {
        match *self {
            PriorSpec::LogNormal10 { mu_exp10, .. } => 10f64.powf(mu_exp10),
            PriorSpec::LogUniform { lo, hi } => (0.5 * (lo.ln() + hi.ln())).exp(),
            PriorSpec::Normal { mu, .. } => mu.exp(),
        }
    }

    /// Draw the unconstrained coordinate `z = ln x`.
    pub fn sample_z<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            PriorSpec::LogNormal10 { mu_exp10, sigma } => {
                let n: f64 = StandardNormal.sample(rng);
                mu_exp10 * LN_10 + sigma * n
            }
            PriorSpec::Normal { mu, sigma } => {
                let n: f64 = StandardNormal.sample(rng);
                mu + sigma * n
            }
            PriorSpec::LogUniform { lo, hi } => rng.gen_range(lo.ln()..hi.ln()),
        }
    }
}

fn normal_logpdf<S: Scalar>(z: S, mu: f64, sigma: f64) -> S {
    let half = S::from_real(S::Real::of(0.5));
    let inv_sigma = S::from_real(S::Real::of(1.0 / sigma));
    let center = S::from_real(S::Real::of(mu));
    let norm = S::from_real(S::Real::of(
        -(sigma.ln() + 0.5 * (2.0 * std::f64::consts::PI).ln()),
    ));
    let u = (z - center) * inv_sigma;
    norm - half * u * u
}

/// The joint prior over (θ, δ, b).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriorTriple {
    pub theta: PriorSpec,
    pub delta: PriorSpec,
    pub b: PriorSpec,
}

impl PriorTriple {
    /// The informative prior used throughout: θ location lowered to -1/2 so
    /// prior draws cover very dense graphs as well.
    pub fn altered() -> Self {
        PriorTriple {
            theta: PriorSpec::LogNormal10 {
                mu_exp10: -0.5,
                sigma: 4.0,
            },
            delta: PriorSpec::LogNormal10 {
                mu_exp10: 2.0,
                sigma: 2.0,
            },
            b: PriorSpec::LogNormal10 {
                mu_exp10: 1.0,
                sigma: 2.0,
            },
        }
    }

    /// The first-pass informative prior (θ location 0).
    pub fn original() -> Self {
        PriorTriple {
            theta: PriorSpec::LogNormal10 {
                mu_exp10: 0.0,
                sigma: 4.0,
            },
            ..Self::altered()
        }
    }

    /// Uninformative ablation variant: θ log-uniform over twelve decades,
    /// δ and b wide normal in unconstrained space.
    pub fn uninformative() -> Self {
        let wide = PriorSpec::Normal {
            mu: 0.0,
            sigma: 1e3f64.sqrt(),
        };
        PriorTriple {
            theta: PriorSpec::LogUniform { lo: 1e-6, hi: 1e6 },
            delta: wide,
            b: wide,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.theta.validate()?;
        self.delta.validate()?;
        self.b.validate()
    }

    /// Sum of marginal log densities at unconstrained `z = (ln θ, ln δ, ln b)`.
    pub fn log_density_z<S: Scalar>(&self, z: [S; 3]) -> S {
        self.theta.log_density_z(z[0])
            + self.delta.log_density_z(z[1])
            + self.b.log_density_z(z[2])
    }

    /// Gradient-carrying evaluation with one tangent slot per coordinate.
    pub fn log_density_z_dual<T: Real>(&self, z: [T; 3]) -> Dual<T, 3> {
        self.log_density_z([
            Dual::variable(z[0], 0),
            Dual::variable(z[1], 1),
            Dual::variable(z[2], 2),
        ])
    }

    pub fn medians(&self) -> [f64; 3] {
        [
            self.theta.median(),
            self.delta.median(),
            self.b.median(),
        ]
    }

    /// Draw `z = (ln θ, ln δ, ln b)` from the prior.
    pub fn sample_z<R: Rng + ?Sized>(&self, rng: &mut R) -> [f64; 3] {
        [
            self.theta.sample_z(rng),
            self.delta.sample_z(rng),
            self.b.sample_z(rng),
        ]
    }
}
