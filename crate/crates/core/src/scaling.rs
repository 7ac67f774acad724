//! Size transfer of fitted parameters between node counts.
//!
//! Normalizing each objective term by its summand count and undoing the
//! normalization at the target size gives closed-form scaling laws:
//! `α(N) = α_i (N-1)/(N_i-1)`, `β(N) = β_i`, and in the (θ, δ) coordinates
//! `θ(N) = θ_i sqrt((N_i-1)/(N-1))`, `δ(N) = δ_i sqrt((N-1)/(N_i-1))`, so
//! the product θδ is size-invariant.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Parameters fitted at node count `n_i`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaleAnchor {
    pub n_i: usize,
    pub theta_i: f64,
    pub delta_i: f64,
    pub alpha_i: f64,
    pub beta_i: f64,
}

impl ScaleAnchor {
    /// Anchor from (θ, δ) estimates; α and β follow from the equivalence
    /// α = δ/θ, β = 1/(δθ).
    pub fn from_theta_delta(n_i: usize, theta_i: f64, delta_i: f64) -> Self {
        ScaleAnchor {
            n_i,
            theta_i,
            delta_i,
            alpha_i: delta_i / theta_i,
            beta_i: 1.0 / (delta_i * theta_i),
        }
    }
}

fn check_size(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::InvalidConfig(format!("node count {n} below 2")));
    }
    Ok(())
}

pub fn scale_theta(anchor: &ScaleAnchor, n: usize) -> Result<f64> {
    check_size(n)?;
    Ok(anchor.theta_i * ((anchor.n_i - 1) as f64 / (n - 1) as f64).sqrt())
}

pub fn scale_delta(anchor: &ScaleAnchor, n: usize) -> Result<f64> {
    check_size(n)?;
    Ok(anchor.delta_i * ((n - 1) as f64 / (anchor.n_i - 1) as f64).sqrt())
}

pub fn scale_alpha(anchor: &ScaleAnchor, n: usize) -> Result<f64> {
    check_size(n)?;
    Ok(anchor.alpha_i * (n - 1) as f64 / (anchor.n_i - 1) as f64)
}

pub fn scale_beta(anchor: &ScaleAnchor, n: usize) -> Result<f64> {
    check_size(n)?;
    Ok(anchor.beta_i)
}

/// All four laws at once, as a table row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaledParams {
    pub n: usize,
    pub theta: f64,
    pub delta: f64,
    pub alpha: f64,
    pub beta: f64,
}

pub fn scale_all(anchor: &ScaleAnchor, n: usize) -> Result<ScaledParams> {
    Ok(ScaledParams {
        n,
        theta: scale_theta(anchor, n)?,
        delta: scale_delta(anchor, n)?,
        alpha: scale_alpha(anchor, n)?,
        beta: scale_beta(anchor, n)?,
    })
}

/// Render scaled parameters for a list of target sizes as CSV.
pub fn scale_table_csv(anchor: &ScaleAnchor, targets: &[usize]) -> Result<String> {
    let mut out = String::from("n,theta,delta,alpha,beta\n");
    for &n in targets {
        let row = scale_all(anchor, n)?;
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            row.n, row.theta, row.delta, row.alpha, row.beta
        ));
    }
    Ok(out)
}

/// Functional forms for fitting empirical parameter-size trends.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitForm {
    /// `y = c0 + c1 ln n`
    Logarithmic,
    /// `y = c0 + c1 n`
    Linear,
    /// `y = c0 n^c1`
    PowerLaw,
}

/// Least-squares fit of `(n, y)` observations under the chosen form;
/// returns `(c0, c1)`.
pub fn fit_trend(points: &[(f64, f64)], form: FitForm) -> Result<(f64, f64)> {
    if points.len() < 2 {
        return Err(Error::Precondition("trend fit needs at least two points".into()));
    }
    // Each form is linear after transforming the coordinates.
    let transformed: Vec<(f64, f64)> = match form {
        FitForm::Logarithmic => points.iter().map(|&(n, y)| (n.ln(), y)).collect(),
        FitForm::Linear => points.to_vec(),
        FitForm::PowerLaw => {
            if points.iter().any(|&(n, y)| n <= 0.0 || y <= 0.0) {
                return Err(Error::Precondition(
                    "power-law fit needs positive sizes and values".into(),
                ));
            }
            points.iter().map(|&(n, y)| (n.ln(), y.ln())).collect()
        }
    };
    let len = transformed.len() as f64;
    let mx = transformed.iter().map(|p| p.0).sum::<f64>() / len;
    let my = transformed.iter().map(|p| p.1).sum::<f64>() / len;
    let sxx: f64 = transformed.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::Precondition("trend fit needs distinct sizes".into()));
    }
    let sxy: f64 = transformed
        .iter()
        .map(|p| (p.0 - mx) * (p.1 - my))
        .sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    Ok(match form {
        FitForm::PowerLaw => (intercept.exp(), slope),
        _ => (intercept, slope),
    })
}

/// Evaluate a fitted trend at `n`.
pub fn eval_trend(form: FitForm, coeffs: (f64, f64), n: f64) -> f64 {
    match form {
        FitForm::Logarithmic => coeffs.0 + coeffs.1 * n.ln(),
        FitForm::Linear => coeffs.0 + coeffs.1 * n,
        FitForm::PowerLaw => coeffs.0 * n.powf(coeffs.1),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn anchor() -> ScaleAnchor {
        ScaleAnchor::from_theta_delta(20, 1.0, 2.0)
    }

    #[test]
    fn identity_at_the_anchor_size() {
        let a = anchor();
        assert_eq!(scale_theta(&a, 20).unwrap(), a.theta_i);
        assert_eq!(scale_delta(&a, 20).unwrap(), a.delta_i);
        assert_eq!(scale_alpha(&a, 20).unwrap(), a.alpha_i);
        assert_eq!(scale_beta(&a, 20).unwrap(), a.beta_i);
    }

    #[test]
    fn exact_arithmetic_example() {
        // n_i = 20 to n = 77: sqrt(19/76) = 1/2.
        let a = ScaleAnchor::from_theta_delta(20, 1.0, 1.0);
        assert_eq!(scale_theta(&a, 77).unwrap(), 0.5);
        assert_eq!(scale_delta(&a, 77).unwrap(), 2.0);
    }

    #[test]
    fn product_invariance_and_monotonicity() {
        let a = anchor();
        let product = a.theta_i * a.delta_i;
        let mut last_theta = f64::INFINITY;
        let mut last_delta = 0.0;
        for n in [2, 5, 20, 50, 200, 1000] {
            let t = scale_theta(&a, n).unwrap();
            let d = scale_delta(&a, n).unwrap();
            assert!((t * d - product).abs() <= 1e-12 * product);
            assert!(t < last_theta || n == 2);
            assert!(d > last_delta || n == 2);
            last_theta = t;
            last_delta = d;
        }
    }

    #[test]
    fn rejects_degenerate_sizes() {
        assert!(scale_theta(&anchor(), 1).is_err());
    }

    #[test]
    fn table_has_four_parameter_columns() {
        let csv = scale_table_csv(&anchor(), &[50, 100, 200]).unwrap();
        let header = csv.lines().next().unwrap();
        assert_eq!(header, "n,theta,delta,alpha,beta");
        assert_eq!(csv.lines().count(), 4);
    }

    #[test]
    fn trend_fits_recover_generating_coefficients() {
        let ns: [f64; 5] = [10.0, 20.0, 50.0, 100.0, 200.0];
        let log_pts: Vec<(f64, f64)> = ns.iter().map(|&n| (n, 1.5 + 0.7 * n.ln())).collect();
        let (c0, c1) = fit_trend(&log_pts, FitForm::Logarithmic).unwrap();
        assert!((c0 - 1.5).abs() < 1e-9 && (c1 - 0.7).abs() < 1e-9);

        let lin_pts: Vec<(f64, f64)> = ns.iter().map(|&n| (n, -2.0 + 0.3 * n)).collect();
        let (c0, c1) = fit_trend(&lin_pts, FitForm::Linear).unwrap();
        assert!((c0 + 2.0).abs() < 1e-9 && (c1 - 0.3).abs() < 1e-9);

        let pow_pts: Vec<(f64, f64)> = ns.iter().map(|&n| (n, 3.0 * n.powf(-0.4))).collect();
        let (c0, c1) = fit_trend(&pow_pts, FitForm::PowerLaw).unwrap();
        assert!((c0 - 3.0).abs() < 1e-9 && (c1 + 0.4).abs() < 1e-9);
        assert!((eval_trend(FitForm::PowerLaw, (c0, c1), 400.0) - 3.0 * 400f64.powf(-0.4)).abs() < 1e-9);
    }
}
