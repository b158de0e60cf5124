//! Estimator checks against distributions with closed-form information.

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{mutual_information, EstimatorConfig, EstimatorKind};
use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelfCheck {
    pub name: String,
    /// Exact mutual information in nats.
    pub expected: f64,
    /// Estimate averaged over the repetitions.
    pub estimate: f64,
    pub tolerance: f64,
    pub passed: bool,
}

const SAMPLES: usize = 2000;
const REPEATS: u64 = 10;

fn check(
    name: String,
    expected: f64,
    tolerance: f64,
    config: &EstimatorConfig,
    mut draw: impl FnMut(&mut ChaCha8Rng) -> (f64, f64),
) -> Result<SelfCheck> {
    let mut total = 0.0;
    for rep in 0..REPEATS {
        let mut rng =
            ChaCha8Rng::seed_from_u64(config.rng_seed.wrapping_mul(1000).wrapping_add(rep));
        let mut x = Array2::zeros((SAMPLES, 1));
        let mut y = Array1::zeros(SAMPLES);
        for i in 0..SAMPLES {
            let (a, b) = draw(&mut rng);
            x[[i, 0]] = a;
            y[i] = b;
        }
        total += mutual_information(x.view(), y.view(), config)?.value;
    }
    let estimate = total / REPEATS as f64;
    Ok(SelfCheck {
        name,
        expected,
        estimate,
        tolerance,
        passed: (estimate - expected).abs() <= tolerance,
    })
}

/// Runs the configured estimator on `10 x 2000` draws from each reference
/// distribution. Bivariate Gaussians are only checked for the KSG
/// estimator; equal-width histograms are biased on unbounded densities.
/// The histogram plug-in estimate also carries an upward bias of about
/// `(bins - 1)^2 / (2 N)` nats, so fine grids fail the independence check.
pub fn self_checks(config: &EstimatorConfig) -> Result<Vec<SelfCheck>> {
    config.validate()?;
    let mut out = Vec::new();
    out.push(check(
        "fair coin copy".into(),
        2f64.ln(),
        0.03,
        config,
        |rng| {
            let v = if rng.random_bool(0.5) { 1.0 } else { 0.0 };
            (v, v)
        },
    )?);
    out.push(check(
        "four-level uniform copy".into(),
        4f64.ln(),
        0.03,
        config,
        |rng| {
            let v = rng.random_range(0..4) as f64;
            (v, v)
        },
    )?);
    out.push(check(
        "independent uniforms".into(),
        0.0,
        0.05,
        config,
        |rng| (rng.random(), rng.random()),
    )?);
    if config.kind == EstimatorKind::Ksg {
        for rho in [0.0f64, 0.3, 0.6, 0.9] {
            let s = (1.0 - rho * rho).sqrt();
            out.push(check(
                format!("gaussian rho={rho}"),
                -0.5 * (1.0 - rho * rho).ln(),
                0.1,
                config,
                |rng| {
                    let a: f64 = rng.sample(StandardNormal);
                    let b: f64 = rng.sample(StandardNormal);
                    (a, rho * a + s * b)
                },
            )?);
        }
    }
    Ok(out)
}
