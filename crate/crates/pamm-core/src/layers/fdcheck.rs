//! Central-difference validation of the hand-written backward passes.
//!
//! Probes random parameter coordinates, compares (loss(θ+h) − loss(θ−h))/2h
//! against the tape gradient, and reports the worst relative deviation. Only
//! meaningful on the exact path: compression injects sampling noise into the
//! weight gradients, so enabling it is rejected up front.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::layers::model::ToyModel;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamSelector {
    /// Probe every parameter tensor.
    All,
    /// Probe one parameter by canonical index (embed, pos, blocks, head).
    Param(usize),
}

/// Coordinates where both the analytic and numeric gradient sit below this
/// are treated as dead (deviation 0); the ratio of two roundoff values means
/// nothing.
const ZERO_FLOOR: f64 = 1e-6;

pub fn finite_difference_check<T: Scalar>(
    model: &mut ToyModel<T>,
    tokens: &[usize],
    targets: &[usize],
    selector: ParamSelector,
    probes: usize,
    h: f64,
    probe_seed: u64,
) -> Result<f64> {
    if model.pamm_enabled() {
        return Err(Error::State(
            "finite differences need the exact backward path; disable compression first",
        ));
    }
    if probes == 0 || h <= 0.0 {
        return Err(Error::Argument("need a positive probe count and step".into()));
    }
    let allowed: Vec<usize> = match selector {
        ParamSelector::All => (0..model.param_count()).collect(),
        ParamSelector::Param(i) => {
            if i >= model.param_count() {
                return Err(Error::Argument(alloc::format!(
                    "parameter index {i} out of range ({} params)",
                    model.param_count()
                )));
            }
            alloc::vec![i]
        }
    };

    let (_, grads) = model.gradients(tokens, targets)?;

    let mut rng = ChaCha8Rng::seed_from_u64(probe_seed);
    let mut worst = 0.0f64;
    for _ in 0..probes {
        let param = allowed[rng.random_range(0..allowed.len())];
        let coord = rng.random_range(0..grads[param].data().len());

        let poke = |model: &mut ToyModel<T>, delta: f64| {
            let mut params = model.params_mut();
            let d = params[param].data_mut();
            d[coord] = d[coord] + T::from_f64(delta);
        };

        poke(model, h);
        let up = model.loss_eval(tokens, targets)?;
        poke(model, -2.0 * h);
        let down = model.loss_eval(tokens, targets)?;
        poke(model, h);

        let fd = (up - down) / (2.0 * h);
        let g = grads[param].data()[coord].to_f64();
        let scale = fd.abs().max(g.abs());
        if scale < ZERO_FLOOR {
            continue;
        }
        let deviation = (fd - g).abs() / scale;
        if deviation > worst {
            worst = deviation;
        }
    }
    Ok(worst)
}
