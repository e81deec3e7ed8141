use std::time::Instant;

use super::model::gradient_sum;
use super::{apply_update, Hyperparams, ModelParams, Result, TrainOutcome, TrainingError};
use crate::harness::Dataset;

/// Full-batch gradient descent from `beta = 0`.
pub fn plaintext_lr_train(data: &Dataset, hyper: &Hyperparams) -> Result<TrainOutcome> {
    hyper.validate()?;
    if data.m() == 0 {
        return Err(TrainingError::Empty);
    }
    let start = Instant::now();
    let mut model = ModelParams::zeros(data.d(), *hyper);
    let mut iterations = 0;
    let mut converged = false;
    while iterations < hyper.cycles {
        let g = gradient_sum(&model.beta, data);
        let delta = apply_update(&mut model.beta, &g, hyper.alpha, data.m());
        iterations += 1;
        if delta < hyper.threshold {
            converged = true;
            break;
        }
    }
    Ok(TrainOutcome::plain(model, iterations, converged, start.elapsed().as_secs_f64()))
}
