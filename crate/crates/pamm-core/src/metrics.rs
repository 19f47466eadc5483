use crate::approx::approx_matmul;
use crate::bounds::error_bound_rhs;
use crate::compress::CompressedActivation;
use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;
use crate::scalar::Scalar;

/// `‖exact − approx‖_F / ‖exact‖_F`, accumulated in 64-bit regardless of the
/// working precision. Errors out when the reference norm vanishes.
pub fn relative_error<T: Scalar>(exact: &DenseMatrix<T>, approx: &DenseMatrix<T>) -> Result<f64> {
    if exact.shape() != approx.shape() {
        return Err(Error::Shape {
            context: "relative_error",
            expected: exact.shape(),
            got: approx.shape(),
        });
    }
    let mut num = 0.0f64;
    let mut den = 0.0f64;
    for (&e, &a) in exact.data().iter().zip(approx.data().iter()) {
        let ef = e.to_f64();
        let d = ef - a.to_f64();
        num += d * d;
        den += ef * ef;
    }
    if den == 0.0 {
        return Err(Error::UndefinedMetric("relative error against a zero matrix"));
    }
    Ok(num_traits::Float::sqrt(num / den))
}

/// Quality summary of one compression against one companion matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct PammErrorReport {
    pub relative_error: f64,
    /// `(b - eta) / b`, the fraction of rows with a surviving representative.
    pub coverage: f64,
    pub eta: usize,
    /// Analytic bound on `‖O − Õ‖_F²` for the uncorrected estimate; infinite
    /// when the compression ran without a residual tolerance.
    pub bound_rhs: f64,
    pub exact_norm: f64,
}

/// Compare the approximate product against the exact `AᵀB` and collect the
/// error, coverage and bound numbers in one place.
pub fn error_report<T: Scalar>(
    a: &DenseMatrix<T>,
    comp: &CompressedActivation<T>,
    b_mat: &DenseMatrix<T>,
) -> Result<PammErrorReport> {
    let exact = a.tr_mul(b_mat)?;
    let approx = approx_matmul(comp, b_mat)?;
    let rel = relative_error(&exact, &approx)?;
    let bound_rhs = if comp.epsilon.is_finite() {
        error_bound_rhs(a, comp, b_mat)?
    } else {
        f64::INFINITY
    };
    Ok(PammErrorReport {
        relative_error: rel,
        coverage: comp.coverage(),
        eta: comp.eta,
        bound_rhs,
        exact_norm: exact.frobenius_norm_f64(),
    })
}
