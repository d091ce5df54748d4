//! Central-difference verification of the analytic masked-LM gradient.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::encoder::{loss_and_grad, mlm_forward, MaskedBatch};
use super::params::EncoderParams;
use crate::error::{Error, Result};

/// Denominator floor of the relative error, so coordinates whose true
/// gradient is zero (or below central-difference round-off) compare on
/// absolute error.
pub const REL_ERROR_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct CoordinateCheck {
    pub tensor: String,
    pub index: usize,
    pub analytic: f64,
    pub numeric: f64,
    pub rel_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    pub worst: Option<CoordinateCheck>,
    pub checked: Vec<CoordinateCheck>,
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(REL_ERROR_FLOOR)
}

fn summed_loss(params: &EncoderParams<f64>, batch: &MaskedBatch) -> Result<f64> {
    Ok(mlm_forward(params, batch)?.example_losses.iter().sum())
}

/// Compares the analytic gradient of the summed per-example loss with
/// central differences at `n_coords` seeded coordinates. A tensor is chosen
/// uniformly first, then a coordinate inside it.
pub fn grad_check(
    params: &EncoderParams<f64>,
    batch: &MaskedBatch,
    eps: f64,
    n_coords: usize,
    seed: u64,
) -> Result<GradCheckReport> {
    grad_check_with(params, batch, eps, n_coords, seed, |p, b| {
        loss_and_grad(p, b).map(|(_, g)| g)
    })
}

/// As [`grad_check`], with the analytic gradient supplied by `analytic`.
pub fn grad_check_with<F>(
    params: &EncoderParams<f64>,
    batch: &MaskedBatch,
    eps: f64,
    n_coords: usize,
    seed: u64,
    analytic: F,
) -> Result<GradCheckReport>
where
    F: FnOnce(&EncoderParams<f64>, &MaskedBatch) -> Result<EncoderParams<f64>>,
{
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::invalid("finite-difference step must be positive"));
    }
    if n_coords == 0 {
        return Err(Error::invalid("at least one coordinate must be checked"));
    }
    let grads = analytic(params, batch)?;
    let grad_tensors: Vec<Vec<f64>> = grads.tensors().iter().map(|(_, t)| t.iter().copied().collect()).collect();
    let names: Vec<String> = params.tensors().into_iter().map(|(n, _)| n).collect();
    let sizes: Vec<usize> = params.tensors().iter().map(|(_, t)| t.len()).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut work = params.clone();
    let mut checked = Vec::with_capacity(n_coords);
    for _ in 0..n_coords {
        let ti = rng.random_range(0..sizes.len());
        let idx = rng.random_range(0..sizes[ti]);
        let original = params.tensors()[ti].1.as_slice().unwrap()[idx];
        let set = |w: &mut EncoderParams<f64>, value: f64| {
            w.tensors_mut()[ti].1.as_slice_mut().unwrap()[idx] = value;
        };
        set(&mut work, original + eps);
        let plus = summed_loss(&work, batch)?;
        set(&mut work, original - eps);
        let minus = summed_loss(&work, batch)?;
        set(&mut work, original);
        let numeric = (plus - minus) / (2.0 * eps);
        let a = grad_tensors[ti][idx];
        checked.push(CoordinateCheck {
            tensor: names[ti].clone(),
            index: idx,
            analytic: a,
            numeric,
            rel_error: relative_error(a, numeric),
        });
    }
    let worst = checked
        .iter()
        .max_by(|a, b| a.rel_error.total_cmp(&b.rel_error))
        .cloned();
    Ok(GradCheckReport {
        max_rel_error: worst.as_ref().map_or(0.0, |w| w.rel_error),
        worst,
        checked,
    })
}
