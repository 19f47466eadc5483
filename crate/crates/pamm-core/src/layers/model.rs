//! A small attention language model wired together from the explicit layers:
//! token + position embeddings, up to two single-head attention blocks with a
//! residual connection, and a zero-initialized classifier head. Compression,
//! when configured, applies to the inputs of the Q/K/V projections only; the
//! output projection and the head always keep their full activations.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::PammConfig;
use crate::error::{Error, Result};
use crate::layers::attention::{attention_backward, attention_forward};
use crate::layers::loss::cross_entropy;
use crate::layers::optim::Optimizer;
use crate::layers::PammLinearLayer;
use crate::matrix::DenseMatrix;
use crate::sample::derive_seed;
use crate::scalar::Scalar;

#[derive(Debug, Clone)]
pub struct ModelConfig {
    pub vocab: usize,
    pub d_model: usize,
    pub seq_len: usize,
    /// 0, 1 or 2 attention blocks; 0 gives the linear-only model used for
    /// gradient checking.
    pub blocks: usize,
    /// Compression applied to the Q/K/V projection inputs; None trains the
    /// ordinary way.
    pub pamm: Option<PammConfig>,
    /// Rate scale for the compressing layers.
    pub pamm_lr_scale: f64,
    pub init_seed: u64,
}

impl ModelConfig {
    pub fn new(vocab: usize, d_model: usize, seq_len: usize, blocks: usize, init_seed: u64) -> Self {
        Self { vocab, d_model, seq_len, blocks, pamm: None, pamm_lr_scale: 0.25, init_seed }
    }

    pub fn with_pamm(mut self, cfg: PammConfig) -> Self {
        self.pamm = Some(cfg);
        self
    }

    pub fn pamm_lr_scale(mut self, scale: f64) -> Self {
        self.pamm_lr_scale = scale;
        self
    }
}

struct BlockSaved<T: Scalar> {
    q: DenseMatrix<T>,
    k: DenseMatrix<T>,
    v: DenseMatrix<T>,
    /// One probability matrix per sequence in the batch.
    probs: Vec<DenseMatrix<T>>,
}

pub struct AttentionBlock<T: Scalar> {
    pub wq: PammLinearLayer<T>,
    pub wk: PammLinearLayer<T>,
    pub wv: PammLinearLayer<T>,
    pub wo: PammLinearLayer<T>,
    saved: Option<BlockSaved<T>>,
}

pub struct ToyModel<T: Scalar> {
    cfg: ModelConfig,
    embed: DenseMatrix<T>,
    pos: DenseMatrix<T>,
    blocks: Vec<AttentionBlock<T>>,
    head: PammLinearLayer<T>,
}

fn rows_slice<T: Scalar>(m: &DenseMatrix<T>, start: usize, count: usize) -> DenseMatrix<T> {
    DenseMatrix::from_fn(count, m.cols(), |i, j| m.at(start + i, j))
}

fn write_rows<T: Scalar>(dst: &mut DenseMatrix<T>, start: usize, src: &DenseMatrix<T>) {
    for i in 0..src.rows() {
        dst.row_mut(start + i).copy_from_slice(src.row(i));
    }
}

fn xavier_uniform<T: Scalar>(rows: usize, cols: usize, seed: u64) -> DenseMatrix<T> {
    let limit = num_traits::Float::sqrt(6.0 / (rows + cols) as f64);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    DenseMatrix::from_fn(rows, cols, |_, _| T::from_f64(rng.random_range(-limit..limit)))
}

fn embedding_init<T: Scalar>(rows: usize, cols: usize, seed: u64) -> DenseMatrix<T> {
    let limit = 1.0 / num_traits::Float::sqrt(cols as f64);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    DenseMatrix::from_fn(rows, cols, |_, _| T::from_f64(rng.random_range(-limit..limit)))
}

impl<T: Scalar> ToyModel<T> {
    /// Parameter initialization depends only on `init_seed` and the canonical
    /// parameter order, never on the compression setting, so matched-seed runs
    /// with and without compression start from identical weights.
    pub fn new(cfg: ModelConfig) -> Result<Self> {
        if cfg.vocab < 2 {
            return Err(Error::Argument("vocabulary needs at least 2 tokens".into()));
        }
        if cfg.d_model == 0 || cfg.seq_len == 0 {
            return Err(Error::Argument("model width and sequence length must be positive".into()));
        }
        if cfg.blocks > 2 {
            return Err(Error::Argument(alloc::format!(
                "at most 2 attention blocks supported, got {}",
                cfg.blocks
            )));
        }
        if let Some(p) = &cfg.pamm {
            p.validate()?;
        }

        let d = cfg.d_model;
        let seed_for = |idx: u64| derive_seed(cfg.init_seed, idx, 0);

        let embed = embedding_init(cfg.vocab, d, seed_for(0));
        let pos = embedding_init(cfg.seq_len, d, seed_for(1));

        let mut blocks = Vec::with_capacity(cfg.blocks);
        for b in 0..cfg.blocks {
            let base = 2 + 4 * b as u64;
            let make = |slot: u64, compressed: bool| {
                let w = xavier_uniform(d, d, seed_for(base + slot));
                let mut layer = match (compressed, &cfg.pamm) {
                    (true, Some(p)) => {
                        let mut l = PammLinearLayer::with_pamm(w, *p);
                        l.set_lr_scale(cfg.pamm_lr_scale);
                        l
                    }
                    _ => PammLinearLayer::new(w),
                };
                layer.set_seed_stream(base + slot);
                layer
            };
            blocks.push(AttentionBlock {
                wq: make(0, true),
                wk: make(1, true),
                wv: make(2, true),
                wo: make(3, false),
                saved: None,
            });
        }

        // Zero head: the first loss is exactly ln(vocab) and gradient flow
        // starts from the cross-entropy alone.
        let head = PammLinearLayer::new(DenseMatrix::zeros(d, cfg.vocab));

        Ok(Self { cfg, embed, pos, blocks, head })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.cfg
    }

    pub fn blocks(&self) -> &[AttentionBlock<T>] {
        &self.blocks
    }

    pub fn pamm_enabled(&self) -> bool {
        self.cfg.pamm.is_some()
    }

    pub fn param_count(&self) -> usize {
        2 + 4 * self.blocks.len() + 1
    }

    pub fn param_name(&self, idx: usize) -> String {
        let n = self.param_count();
        match idx {
            0 => "embed".into(),
            1 => "pos".into(),
            i if i + 1 == n => "head".into(),
            i => {
                let block = (i - 2) / 4;
                let slot = ["wq", "wk", "wv", "wo"][(i - 2) % 4];
                alloc::format!("{slot}[{block}]")
            }
        }
    }

    pub fn params_mut(&mut self) -> Vec<&mut DenseMatrix<T>> {
        let mut out: Vec<&mut DenseMatrix<T>> = vec![&mut self.embed, &mut self.pos];
        for b in &mut self.blocks {
            out.push(b.wq.weight_mut());
            out.push(b.wk.weight_mut());
            out.push(b.wv.weight_mut());
            out.push(b.wo.weight_mut());
        }
        out.push(self.head.weight_mut());
        out
    }

    pub fn lr_scales(&self) -> Vec<f64> {
        let mut out = vec![1.0, 1.0];
        for b in &self.blocks {
            out.push(b.wq.lr_scale());
            out.push(b.wk.lr_scale());
            out.push(b.wv.lr_scale());
            out.push(b.wo.lr_scale());
        }
        out.push(self.head.lr_scale());
        out
    }

    /// Activation scalars currently saved for backward across every layer.
    pub fn retained_activation_scalars(&self) -> usize {
        let mut total = self.head.retained_activation_scalars();
        for b in &self.blocks {
            total += b.wq.retained_activation_scalars()
                + b.wk.retained_activation_scalars()
                + b.wv.retained_activation_scalars()
                + b.wo.retained_activation_scalars();
        }
        total
    }

    fn check_tokens(&self, tokens: &[usize]) -> Result<usize> {
        if tokens.is_empty() || tokens.len() % self.cfg.seq_len != 0 {
            return Err(Error::Argument(alloc::format!(
                "token count {} is not a positive multiple of sequence length {}",
                tokens.len(),
                self.cfg.seq_len
            )));
        }
        if let Some(&t) = tokens.iter().find(|&&t| t >= self.cfg.vocab) {
            return Err(Error::Argument(alloc::format!(
                "token id {t} out of range for vocabulary {}",
                self.cfg.vocab
            )));
        }
        Ok(tokens.len() / self.cfg.seq_len)
    }

    fn embed_tokens(&self, tokens: &[usize]) -> DenseMatrix<T> {
        let l = self.cfg.seq_len;
        DenseMatrix::from_fn(tokens.len(), self.cfg.d_model, |i, j| {
            self.embed.at(tokens[i], j) + self.pos.at(i % l, j)
        })
    }

    /// Forward pass that saves everything backward needs. Returns logits,
    /// one row per token position.
    pub fn forward_saved(&mut self, tokens: &[usize]) -> Result<DenseMatrix<T>> {
        let nseq = self.check_tokens(tokens)?;
        let l = self.cfg.seq_len;
        let mut x = self.embed_tokens(tokens);
        for block in &mut self.blocks {
            let q = block.wq.forward(&x)?;
            let k = block.wk.forward(&x)?;
            let v = block.wv.forward(&x)?;
            let mut attn = DenseMatrix::zeros(x.rows(), x.cols());
            let mut probs = Vec::with_capacity(nseq);
            for s in 0..nseq {
                let qs = rows_slice(&q, s * l, l);
                let ks = rows_slice(&k, s * l, l);
                let vs = rows_slice(&v, s * l, l);
                let (o, p) = attention_forward(&qs, &ks, &vs)?;
                write_rows(&mut attn, s * l, &o);
                probs.push(p);
            }
            let proj = block.wo.forward(&attn)?;
            block.saved = Some(BlockSaved { q, k, v, probs });
            x = x.add(&proj)?;
        }
        self.head.forward(&x)
    }

    /// Pure loss evaluation: identical math to the saved forward, no state
    /// mutated anywhere. This is what finite differencing probes.
    pub fn loss_eval(&self, tokens: &[usize], targets: &[usize]) -> Result<f64> {
        let nseq = self.check_tokens(tokens)?;
        let l = self.cfg.seq_len;
        let mut x = self.embed_tokens(tokens);
        for block in &self.blocks {
            let q = block.wq.forward_no_save(&x)?;
            let k = block.wk.forward_no_save(&x)?;
            let v = block.wv.forward_no_save(&x)?;
            let mut attn = DenseMatrix::zeros(x.rows(), x.cols());
            for s in 0..nseq {
                let qs = rows_slice(&q, s * l, l);
                let ks = rows_slice(&k, s * l, l);
                let vs = rows_slice(&v, s * l, l);
                let (o, _) = attention_forward(&qs, &ks, &vs)?;
                write_rows(&mut attn, s * l, &o);
            }
            let proj = block.wo.forward_no_save(&attn)?;
            x = x.add(&proj)?;
        }
        let logits = self.head.forward_no_save(&x)?;
        let (loss, _) = cross_entropy(&logits, targets)?;
        Ok(loss)
    }

    /// Full forward/backward. Returns the mean loss and gradients in the
    /// canonical parameter order: embed, pos, per block wq wk wv wo, head.
    pub fn gradients(&mut self, tokens: &[usize], targets: &[usize]) -> Result<(f64, Vec<DenseMatrix<T>>)> {
        let nseq = self.check_tokens(tokens)?;
        let l = self.cfg.seq_len;
        let logits = self.forward_saved(tokens)?;
        let (loss, grad_logits) = cross_entropy(&logits, targets)?;

        let (mut grad_x, grad_head) = self.head.backward(&grad_logits)?;

        let mut block_grads: Vec<[DenseMatrix<T>; 4]> = Vec::with_capacity(self.blocks.len());
        for block in self.blocks.iter_mut().rev() {
            let saved = block
                .saved
                .take()
                .ok_or(Error::State("attention backward before forward"))?;
            let (grad_attn, grad_wo) = block.wo.backward(&grad_x)?;

            let mut gq = DenseMatrix::zeros(grad_x.rows(), grad_x.cols());
            let mut gk = DenseMatrix::zeros(grad_x.rows(), grad_x.cols());
            let mut gv = DenseMatrix::zeros(grad_x.rows(), grad_x.cols());
            for s in 0..nseq {
                let qs = rows_slice(&saved.q, s * l, l);
                let ks = rows_slice(&saved.k, s * l, l);
                let vs = rows_slice(&saved.v, s * l, l);
                let gos = rows_slice(&grad_attn, s * l, l);
                let (gqs, gks, gvs) = attention_backward(&qs, &ks, &vs, &saved.probs[s], &gos)?;
                write_rows(&mut gq, s * l, &gqs);
                write_rows(&mut gk, s * l, &gks);
                write_rows(&mut gv, s * l, &gvs);
            }

            let (gx_q, grad_wq) = block.wq.backward(&gq)?;
            let (gx_k, grad_wk) = block.wk.backward(&gk)?;
            let (gx_v, grad_wv) = block.wv.backward(&gv)?;

            // Residual: the identity path keeps grad_x, the projection paths add.
            grad_x.add_scaled(&gx_q, T::one())?;
            grad_x.add_scaled(&gx_k, T::one())?;
            grad_x.add_scaled(&gx_v, T::one())?;

            block_grads.push([grad_wq, grad_wk, grad_wv, grad_wo]);
        }
        block_grads.reverse();

        let mut grad_embed = DenseMatrix::zeros(self.cfg.vocab, self.cfg.d_model);
        let mut grad_pos = DenseMatrix::zeros(self.cfg.seq_len, self.cfg.d_model);
        for i in 0..tokens.len() {
            let src = grad_x.row(i);
            let er = grad_embed.row_mut(tokens[i]);
            for (dst, &s) in er.iter_mut().zip(src) {
                *dst += s;
            }
            let pr = grad_pos.row_mut(i % l);
            for (dst, &s) in pr.iter_mut().zip(src) {
                *dst += s;
            }
        }

        let mut grads = vec![grad_embed, grad_pos];
        for g in block_grads {
            grads.extend(g);
        }
        grads.push(grad_head);
        Ok((loss, grads))
    }

    /// One optimization step; the optimizer applies each layer's rate scale.
    pub fn train_step(
        &mut self,
        tokens: &[usize],
        targets: &[usize],
        opt: &mut Optimizer<T>,
    ) -> Result<f64> {
        let (loss, grads) = self.gradients(tokens, targets)?;
        if !loss.is_finite() {
            return Err(Error::Numeric("training loss became non-finite".into()));
        }
        let scales = self.lr_scales();
        let mut params = self.params_mut();
        opt.apply(&mut params, &grads, &scales)?;
        Ok(loss)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_cfg(blocks: usize) -> ModelConfig {
        ModelConfig::new(13, 8, 4, blocks, 99)
    }

    fn demo_batch(cfg: &ModelConfig, nseq: usize, seed: u64) -> (Vec<usize>, Vec<usize>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let tokens: Vec<usize> =
            (0..nseq * cfg.seq_len).map(|_| rng.random_range(0..cfg.vocab)).collect();
        // Every position's target is its sequence's first token.
        let targets: Vec<usize> = (0..tokens.len())
            .map(|i| tokens[(i / cfg.seq_len) * cfg.seq_len])
            .collect();
        (tokens, targets)
    }

    #[test]
    fn zero_head_gives_log_vocab_loss() {
        for blocks in [0, 1, 2] {
            let cfg = small_cfg(blocks);
            let model = ToyModel::<f32>::new(cfg.clone()).unwrap();
            let (tokens, targets) = demo_batch(&cfg, 3, 1);
            let loss = model.loss_eval(&tokens, &targets).unwrap();
            assert!(
                (loss - (cfg.vocab as f64).ln()).abs() < 1e-3,
                "blocks {blocks}: first loss {loss}"
            );
        }
    }

    #[test]
    fn forward_is_bit_identical_with_and_without_compression() {
        let cfg = small_cfg(1);
        let compressed_cfg =
            cfg.clone().with_pamm(PammConfig::with_ratio(0.25, 7).epsilon(0.5));
        let mut plain = ToyModel::<f32>::new(cfg.clone()).unwrap();
        let mut compressed = ToyModel::<f32>::new(compressed_cfg).unwrap();

        let (tokens, _) = demo_batch(&cfg, 4, 2);
        let a = plain.forward_saved(&tokens).unwrap();
        let b = compressed.forward_saved(&tokens).unwrap();
        assert_eq!(a.data(), b.data());
    }

    #[test]
    fn saved_and_pure_paths_agree_on_the_loss() {
        let cfg = small_cfg(2);
        let mut model = ToyModel::<f64>::new(cfg.clone()).unwrap();
        let (tokens, targets) = demo_batch(&cfg, 2, 3);
        let pure = model.loss_eval(&tokens, &targets).unwrap();
        let (saved, _) = model.gradients(&tokens, &targets).unwrap();
        assert!((pure - saved).abs() < 1e-12);
    }

    #[test]
    fn embedding_and_position_gradients_match_finite_differences() {
        let cfg = small_cfg(1);
        let mut model = ToyModel::<f64>::new(cfg.clone()).unwrap();
        let (tokens, targets) = demo_batch(&cfg, 2, 4);
        let (_, grads) = model.gradients(&tokens, &targets).unwrap();

        fn poke(model: &mut ToyModel<f64>, idx: usize, row: usize, col: usize, delta: f64) {
            let mut params = model.params_mut();
            let v = params[idx].at(row, col);
            params[idx].set(row, col, v + delta);
        }

        let h = 1e-6;
        // Probe a repeated token's row: scatter must accumulate across uses.
        let probe_token = tokens[0];
        for param_idx in [0usize, 1] {
            for col in [0usize, 3] {
                let row = if param_idx == 0 { probe_token } else { 1 };
                poke(&mut model, param_idx, row, col, h);
                let up = model.loss_eval(&tokens, &targets).unwrap();
                poke(&mut model, param_idx, row, col, -2.0 * h);
                let down = model.loss_eval(&tokens, &targets).unwrap();
                poke(&mut model, param_idx, row, col, h);
                let fd = (up - down) / (2.0 * h);
                let g = grads[param_idx].at(row, col);
                assert!(
                    (fd - g).abs() < 1e-8,
                    "param {param_idx} ({row},{col}): fd {fd} vs grad {g}"
                );
            }
        }
    }

    #[test]
    fn full_generator_budget_tracks_plain_training() {
        let cfg = small_cfg(1);
        let b = 2 * cfg.seq_len;
        let pamm = PammConfig::with_count(b, 17);
        let comp_cfg = cfg.clone().with_pamm(pamm).pamm_lr_scale(1.0);

        let mut plain = ToyModel::<f32>::new(cfg.clone()).unwrap();
        let mut comp = ToyModel::<f32>::new(comp_cfg).unwrap();
        let mut opt_a = Optimizer::sgd(0.05);
        let mut opt_b = Optimizer::sgd(0.05);

        for step in 0..10 {
            let (tokens, targets) = demo_batch(&cfg, 2, 100 + step);
            let la = plain.train_step(&tokens, &targets, &mut opt_a).unwrap();
            let lb = comp.train_step(&tokens, &targets, &mut opt_b).unwrap();
            let rel = (la - lb).abs() / la.abs().max(1e-12);
            assert!(rel < 1e-3, "step {step}: {la} vs {lb} (rel {rel})");
        }
    }

    #[test]
    fn gradient_list_matches_parameter_list() {
        let cfg = small_cfg(2);
        let mut model = ToyModel::<f32>::new(cfg.clone()).unwrap();
        let (tokens, targets) = demo_batch(&cfg, 1, 5);
        let (_, grads) = model.gradients(&tokens, &targets).unwrap();
        assert_eq!(grads.len(), model.param_count());
        let shapes: Vec<(usize, usize)> = grads.iter().map(|g| g.shape()).collect();
        for (g_shape, p) in shapes.iter().zip(model.params_mut()) {
            assert_eq!(*g_shape, p.shape());
        }
        assert_eq!(model.param_name(0), "embed");
        assert_eq!(model.param_name(2), "wq[0]");
        assert_eq!(model.param_name(7), "wk[1]");
        assert_eq!(model.param_name(model.param_count() - 1), "head");
    }

    #[test]
    fn rejects_bad_token_input() {
        let cfg = small_cfg(1);
        let model = ToyModel::<f32>::new(cfg.clone()).unwrap();
        assert!(model.loss_eval(&[], &[]).is_err());
        assert!(model.loss_eval(&[0, 1, 2], &[0, 0, 0]).is_err());
        let (mut tokens, targets) = demo_batch(&cfg, 1, 6);
        tokens[0] = cfg.vocab;
        assert!(model.loss_eval(&tokens, &targets).is_err());
    }

    #[test]
    fn compressed_layers_retain_less_than_full_copies() {
        let cfg = small_cfg(1);
        let pamm = PammConfig::with_ratio(0.25, 3);
        let mut comp = ToyModel::<f32>::new(cfg.clone().with_pamm(pamm)).unwrap();
        let mut plain = ToyModel::<f32>::new(cfg.clone()).unwrap();

        let (tokens, _) = demo_batch(&cfg, 4, 7);
        let b = tokens.len();
        let n = cfg.d_model;
        let k = (b as f64 * 0.25).ceil() as usize;
        comp.forward_saved(&tokens).unwrap();
        plain.forward_saved(&tokens).unwrap();

        // wq + wk + wv compressed; wo and the head save their full inputs,
        // each b×d_model.
        let expected_comp = 3 * (k * n + 2 * b) + 2 * (b * n);
        let expected_plain = 5 * (b * n);
        assert_eq!(comp.retained_activation_scalars(), expected_comp);
        assert_eq!(plain.retained_activation_scalars(), expected_plain);
    }
}
