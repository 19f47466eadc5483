//! Training-side integration: a linear layer that stores its input in
//! compressed form and spends that on the weight gradient, plus the small
//! hand-rolled differentiable pieces (attention, softmax cross-entropy,
//! optimizers, a finite-difference checker) the toy model needs. There is no
//! general autodiff here; every backward is written out explicitly.

pub mod attention;
pub mod fdcheck;
pub mod loss;
pub mod model;
pub mod optim;

use crate::approx::approx_matmul;
use crate::compress::{compress, CompressedActivation};
use crate::config::PammConfig;
use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;
use crate::sample::derive_seed;
use crate::scalar::Scalar;

/// What the layer retains between forward and backward.
#[derive(Debug, Clone)]
pub enum SavedActivation<T: Scalar> {
    /// No forward has happened (or backward already consumed it).
    None,
    /// Full input copy, the ordinary path.
    Full(DenseMatrix<T>),
    /// Compressed input; the full matrix was dropped before forward returned.
    Compressed(CompressedActivation<T>),
}

/// Linear layer `Z = X·W` whose backward can run the weight gradient off a
/// compressed copy of `X` instead of the matrix itself. The forward output is
/// byte-identical either way; only what is saved for backward changes.
///
/// Each forward call derives a fresh compression seed from
/// `(cfg.seed, seed_stream, forward_calls)`, so repeated steps resample
/// generators deterministically and two layers sharing a config stay
/// decorrelated via their streams.
pub struct PammLinearLayer<T: Scalar> {
    weight: DenseMatrix<T>,
    pamm: Option<PammConfig>,
    lr_scale: f64,
    seed_stream: u64,
    forward_calls: u64,
    saved: SavedActivation<T>,
}

impl<T: Scalar> PammLinearLayer<T> {
    /// Ordinary linear layer: saves the full input, `lr_scale` 1.
    pub fn new(weight: DenseMatrix<T>) -> Self {
        Self { weight, pamm: None, lr_scale: 1.0, seed_stream: 0, forward_calls: 0, saved: SavedActivation::None }
    }

    /// Compressing layer. `lr_scale` defaults to 0.25; the approximate weight
    /// gradient is noisier, so its updates run at a quarter of the base rate.
    pub fn with_pamm(weight: DenseMatrix<T>, cfg: PammConfig) -> Self {
        Self { weight, pamm: Some(cfg), lr_scale: 0.25, seed_stream: 0, forward_calls: 0, saved: SavedActivation::None }
    }

    pub fn set_lr_scale(&mut self, lr_scale: f64) {
        self.lr_scale = lr_scale;
    }

    pub fn set_seed_stream(&mut self, stream: u64) {
        self.seed_stream = stream;
    }

    pub fn pamm_enabled(&self) -> bool {
        self.pamm.is_some()
    }

    pub fn weight(&self) -> &DenseMatrix<T> {
        &self.weight
    }

    pub fn weight_mut(&mut self) -> &mut DenseMatrix<T> {
        &mut self.weight
    }

    pub fn lr_scale(&self) -> f64 {
        self.lr_scale
    }

    pub fn saved_compression(&self) -> Option<&CompressedActivation<T>> {
        match &self.saved {
            SavedActivation::Compressed(c) => Some(c),
            _ => None,
        }
    }

    /// `Z = X·W`, saving `X` (full or compressed) for the backward pass.
    pub fn forward(&mut self, x: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
        let z = x.mul(&self.weight)?;
        self.saved = match self.pamm {
            Some(cfg) => {
                let mut per_call = cfg;
                per_call.seed = derive_seed(cfg.seed, self.seed_stream, self.forward_calls);
                SavedActivation::Compressed(compress(x, &per_call)?)
            }
            None => SavedActivation::Full(x.clone()),
        };
        self.forward_calls += 1;
        Ok(z)
    }

    /// Forward without touching saved state; for pure loss evaluation.
    pub fn forward_no_save(&self, x: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
        x.mul(&self.weight)
    }

    /// `(∇X, ∇W)` from the saved activation, which is consumed: a second
    /// backward without a new forward is a state error.
    ///
    /// `∇X = ∇Z·Wᵀ` is always exact; only `∇W` goes through the approximate
    /// product when compression is on.
    pub fn backward(&mut self, grad_z: &DenseMatrix<T>) -> Result<(DenseMatrix<T>, DenseMatrix<T>)> {
        let saved = core::mem::replace(&mut self.saved, SavedActivation::None);
        let (b, grad_w) = match saved {
            SavedActivation::None => {
                return Err(Error::State("linear backward called before forward"));
            }
            SavedActivation::Full(x) => (x.rows(), x.tr_mul(grad_z)?),
            SavedActivation::Compressed(c) => (c.b, approx_matmul(&c, grad_z)?),
        };
        if grad_z.rows() != b || grad_z.cols() != self.weight.cols() {
            return Err(Error::Shape {
                context: "linear backward",
                expected: (b, self.weight.cols()),
                got: grad_z.shape(),
            });
        }
        let grad_x = grad_z.mul_tr(&self.weight)?;
        Ok((grad_x, grad_w))
    }

    /// Scalars currently held for backward: `k·n + 2b` compressed, `b·n` full.
    pub fn retained_activation_scalars(&self) -> usize {
        match &self.saved {
            SavedActivation::None => 0,
            SavedActivation::Full(x) => x.rows() * x.cols(),
            SavedActivation::Compressed(c) => c.memory_footprint().0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::approx::reconstruct;
    use crate::metrics::relative_error;
    use alloc::vec::Vec;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rows: usize, cols: usize, seed: u64) -> DenseMatrix<f32> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DenseMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0f32..1.0))
    }

    #[test]
    fn identity_input_reproduces_weight() {
        let w = random_matrix(6, 4, 1);
        let x = DenseMatrix::<f32>::identity(6);

        let mut plain = PammLinearLayer::new(w.clone());
        let cfg = PammConfig::with_count(3, 9);
        let mut compressed = PammLinearLayer::with_pamm(w.clone(), cfg);

        assert_eq!(plain.forward(&x).unwrap(), w);
        assert_eq!(compressed.forward(&x).unwrap(), w);
    }

    #[test]
    fn forward_is_bit_identical_with_and_without_compression() {
        let w = random_matrix(8, 5, 2);
        let x = random_matrix(12, 8, 3);

        let mut plain = PammLinearLayer::new(w.clone());
        let mut compressed =
            PammLinearLayer::with_pamm(w, PammConfig::with_ratio(0.25, 7).epsilon(0.5));

        let z_plain = plain.forward(&x).unwrap();
        let z_comp = compressed.forward(&x).unwrap();
        assert_eq!(z_plain.data(), z_comp.data());
    }

    #[test]
    fn backward_before_forward_is_a_state_error() {
        let mut layer = PammLinearLayer::new(random_matrix(4, 3, 4));
        let grad_z = random_matrix(5, 3, 5);
        assert!(matches!(layer.backward(&grad_z), Err(Error::State(_))));

        let x = random_matrix(5, 4, 6);
        layer.forward(&x).unwrap();
        layer.backward(&grad_z).unwrap();
        // Saved state was consumed; a second backward must fail again.
        assert!(matches!(layer.backward(&grad_z), Err(Error::State(_))));
    }

    #[test]
    fn grad_x_matches_plain_path_exactly() {
        let w = random_matrix(8, 6, 10);
        let x = random_matrix(16, 8, 11);
        let grad_z = random_matrix(16, 6, 12);

        let mut plain = PammLinearLayer::new(w.clone());
        let mut compressed =
            PammLinearLayer::with_pamm(w, PammConfig::with_ratio(0.5, 13).epsilon(0.3));

        plain.forward(&x).unwrap();
        compressed.forward(&x).unwrap();
        let (gx_plain, _) = plain.backward(&grad_z).unwrap();
        let (gx_comp, _) = compressed.backward(&grad_z).unwrap();

        // ∇X never goes through the compressed form, so the two paths run the
        // same float ops in the same order.
        assert_eq!(gx_plain.data(), gx_comp.data());
    }

    #[test]
    fn full_generator_budget_recovers_exact_weight_gradient() {
        let b = 24;
        let w = random_matrix(10, 7, 20);
        let x = random_matrix(b, 10, 21);
        let grad_z = random_matrix(b, 7, 22);

        let mut plain = PammLinearLayer::new(w.clone());
        let mut full_k = PammLinearLayer::with_pamm(w, PammConfig::with_count(b, 23));

        plain.forward(&x).unwrap();
        full_k.forward(&x).unwrap();
        let (_, gw_exact) = plain.backward(&grad_z).unwrap();
        let (_, gw_approx) = full_k.backward(&grad_z).unwrap();

        let rel = relative_error(&gw_exact, &gw_approx).unwrap();
        assert!(rel < 1e-4, "k = b weight gradient off by {rel}");
    }

    #[test]
    fn weight_gradient_equals_scaled_reconstruction_product() {
        let b = 32;
        let w = random_matrix(6, 5, 30);
        let x = random_matrix(b, 6, 31);
        let grad_z = random_matrix(b, 5, 32);

        let mut layer = PammLinearLayer::with_pamm(w, PammConfig::with_count(b / 4, 33));
        layer.forward(&x).unwrap();

        // β·reconstruct(saved)ᵀ·∇Z is the definition the scatter path must agree
        // with; compute it from the saved compression before backward eats it.
        let comp = layer.saved_compression().unwrap().clone();
        let beta = comp.beta.unwrap();
        let mut expected = reconstruct(&comp).tr_mul(&grad_z).unwrap();
        expected.scale_in_place(beta);

        let (_, gw) = layer.backward(&grad_z).unwrap();
        let rel = relative_error(&expected, &gw).unwrap();
        assert!(rel < 1e-4, "scatter and reconstruction paths disagree: {rel}");
    }

    #[test]
    fn retained_activation_accounting_is_exact() {
        let (b, n, m, k) = (40, 12, 5, 10);
        let w = random_matrix(n, m, 40);
        let x = random_matrix(b, n, 41);
        let grad_z = random_matrix(b, m, 42);

        let mut plain = PammLinearLayer::new(w.clone());
        let mut compressed = PammLinearLayer::with_pamm(w, PammConfig::with_count(k, 43));

        assert_eq!(plain.retained_activation_scalars(), 0);
        plain.forward(&x).unwrap();
        assert_eq!(plain.retained_activation_scalars(), b * n);

        compressed.forward(&x).unwrap();
        assert_eq!(compressed.retained_activation_scalars(), k * n + 2 * b);

        plain.backward(&grad_z).unwrap();
        compressed.backward(&grad_z).unwrap();
        assert_eq!(plain.retained_activation_scalars(), 0);
        assert_eq!(compressed.retained_activation_scalars(), 0);
    }

    #[test]
    fn repeated_forwards_resample_generators_deterministically() {
        let w = random_matrix(8, 4, 50);
        let x = random_matrix(32, 8, 51);
        let cfg = PammConfig::with_count(4, 52);

        let run = |stream: u64| -> Vec<u64> {
            let mut layer = PammLinearLayer::with_pamm(w.clone(), cfg);
            layer.set_seed_stream(stream);
            (0..3)
                .map(|_| {
                    layer.forward(&x).unwrap();
                    layer.saved_compression().unwrap().seed
                })
                .collect()
        };

        let a = run(1);
        let b = run(1);
        let c = run(2);
        assert_eq!(a, b);
        assert_ne!(a[0], a[1]);
        assert_ne!(a, c);
    }

    #[test]
    fn lr_scale_defaults() {
        let w = random_matrix(3, 3, 60);
        assert_eq!(PammLinearLayer::new(w.clone()).lr_scale(), 1.0);
        assert_eq!(PammLinearLayer::with_pamm(w, PammConfig::with_count(2, 0)).lr_scale(), 0.25);
    }
}
