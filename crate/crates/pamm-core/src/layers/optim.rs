//! Plain SGD and Adam over an indexed parameter list.
//!
//! The model hands parameters, gradients and per-parameter rate scales in one
//! canonical order; the optimizer keys its moment state by position in that
//! list, so the order must not change between steps.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;
use crate::scalar::Scalar;

pub struct AdamState<T: Scalar> {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    /// Completed steps; bias correction uses t+1 inside `apply`.
    t: u64,
    /// One `(m, v)` pair per parameter, allocated on first use.
    moments: Vec<Option<(DenseMatrix<T>, DenseMatrix<T>)>>,
}

pub enum Optimizer<T: Scalar> {
    Sgd { lr: f64 },
    Adam { lr: f64, state: AdamState<T> },
}

impl<T: Scalar> Optimizer<T> {
    pub fn sgd(lr: f64) -> Self {
        Optimizer::Sgd { lr }
    }

    pub fn adam(lr: f64) -> Self {
        Optimizer::Adam {
            lr,
            state: AdamState { beta1: 0.9, beta2: 0.999, eps: 1e-8, t: 0, moments: Vec::new() },
        }
    }

    /// One update over the whole parameter list. `lr_scales[i]` multiplies the
    /// base rate for parameter i (compressing layers run at 0.25 by default).
    pub fn apply(
        &mut self,
        params: &mut [&mut DenseMatrix<T>],
        grads: &[DenseMatrix<T>],
        lr_scales: &[f64],
    ) -> Result<()> {
        if grads.len() != params.len() || lr_scales.len() != params.len() {
            return Err(Error::Argument(alloc::format!(
                "optimizer got {} params, {} grads, {} scales",
                params.len(),
                grads.len(),
                lr_scales.len()
            )));
        }
        for (i, p) in params.iter().enumerate() {
            if grads[i].shape() != p.shape() {
                return Err(Error::Shape {
                    context: "optimizer gradient",
                    expected: p.shape(),
                    got: grads[i].shape(),
                });
            }
        }

        match self {
            Optimizer::Sgd { lr } => {
                for ((p, g), &s) in params.iter_mut().zip(grads).zip(lr_scales) {
                    p.add_scaled(g, T::from_f64(-*lr * s))?;
                }
            }
            Optimizer::Adam { lr, state } => {
                state.moments.resize_with(params.len(), || None);
                state.t += 1;
                let b1 = T::from_f64(state.beta1);
                let b2 = T::from_f64(state.beta2);
                let eps = T::from_f64(state.eps);
                let c1 = T::from_f64(1.0 - num_traits::Float::powi(state.beta1, state.t as i32));
                let c2 = T::from_f64(1.0 - num_traits::Float::powi(state.beta2, state.t as i32));
                for (i, (p, g)) in params.iter_mut().zip(grads).enumerate() {
                    let (m, v) = state.moments[i].get_or_insert_with(|| {
                        (DenseMatrix::zeros(g.rows(), g.cols()), DenseMatrix::zeros(g.rows(), g.cols()))
                    });
                    let step = T::from_f64(*lr * lr_scales[i]);
                    let md = m.data_mut();
                    let vd = v.data_mut();
                    let pd = p.data_mut();
                    for (j, &gj) in g.data().iter().enumerate() {
                        md[j] = b1 * md[j] + (T::one() - b1) * gj;
                        vd[j] = b2 * vd[j] + (T::one() - b2) * gj * gj;
                        let m_hat = md[j] / c1;
                        let v_hat = vd[j] / c2;
                        pd[j] -= step * m_hat / (v_hat.sqrt() + eps);
                    }
                }
            }
        }
        Ok(())
    }
}
