use super::activation::ActivationKind;
use crate::error::{contract, Error, Result};
use crate::linalg::{axpy, dot};
use crate::tasks::TaskSpec;

/// Error magnitude used when the per-cluster errors are not given.
pub const DEFAULT_ERROR_MAGNITUDE: f64 = 0.25;

/// Per-cluster errors under the constant-error-direction assumption:
/// εᵢ = magnitude · w_o · yᵢ.
pub fn uniform_errors(task: &TaskSpec, w_o: f64, magnitude: f64) -> Vec<f64> {
    task.labels.row(0).iter().map(|&y| magnitude * w_o * y).collect()
}

/// Expected update of one hidden neuron's input weights on the noiseless
/// cluster centers: Σᵢ εᵢ f′(w·xᵢ + bias) xᵢ.
///
/// The update depends only on the neuron's own weights, its readout sign and
/// the errors. `eps` defaults to [`uniform_errors`] with
/// [`DEFAULT_ERROR_MAGNITUDE`].
pub fn expected_update(
    w: &[f64],
    bias: f64,
    kind: ActivationKind,
    w_o: f64,
    task: &TaskSpec,
    eps: Option<&[f64]>,
) -> Result<Vec<f64>> {
    if task.n_outputs() != 1 {
        return Err(Error::Unsupported(format!(
            "expected update is defined for single-output tasks, got {} outputs",
            task.n_outputs()
        )));
    }
    if w.len() != task.input_dim() {
        return Err(contract(format!("weight has {} entries, task inputs have {}", w.len(), task.input_dim())));
    }
    let default;
    let eps = match eps {
        Some(e) => e,
        None => {
            default = uniform_errors(task, w_o, DEFAULT_ERROR_MAGNITUDE);
            &default
        }
    };
    if eps.len() != task.n_clusters() {
        return Err(contract("one error weight per cluster is required"));
    }
    let mut out = vec![0.0; w.len()];
    for (i, &e) in eps.iter().enumerate() {
        let x = task.center(i);
        let g = kind.fprime(dot(w, &x) + bias);
        if g != 0.0 && e != 0.0 {
            axpy(e * g, &x, &mut out);
        }
    }
    Ok(out)
}
