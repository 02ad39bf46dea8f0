//! Beam predictor: a convolutional encoder over the block-value matrix,
//! position-wise dense layers, additive attention pooling over positions, and
//! a link-distance side channel joining the classification head.
//!
//! Forward passes come in two modes. Training mode uses batch statistics,
//! applies dropout, and returns a cache holding every intermediate the exact
//! backward pass needs; the immutable net plus cache design means gradients
//! can never be computed against stale activations. Eval mode uses running
//! statistics and no dropout, and is per-sample deterministic.

pub mod checkpoint;
pub mod data;
pub mod layers;
pub mod loss;
mod train;

pub use data::{load_dataset, split_dataset, LabeledSample, WekDataset};
pub use loss::{cross_entropy, cross_entropy_batch};
pub use train::{evaluate, train, EvalResult, TrainConfig, TrainResult};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::seeds;
use crate::wek::WekMatrix;
use layers::{
    attention, attention_back, bn_back_channels, bn_back_features, bn_eval_channels,
    bn_eval_features, bn_train_channels, bn_train_features, conv2d, conv2d_back, dense,
    dense_back, dropout_mask, relu, Attention, BatchNorm, BnCache, ConvBlock, Dense,
};

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetConfig {
    pub input_h: usize,
    pub input_w: usize,
    pub conv_channels: Vec<usize>,
    pub kernel: usize,
    pub fc_dims: Vec<usize>,
    pub attn_dim: usize,
    pub dist_dim: usize,
    pub n_beams: usize,
    pub dropout: f64,
    pub bn_momentum: f64,
    pub bn_eps: f64,
}

impl Default for NetConfig {
    fn default() -> Self {
        NetConfig {
            input_h: 27,
            input_w: 48,
            conv_channels: vec![16, 32],
            kernel: 3,
            fc_dims: vec![128, 128],
            attn_dim: 64,
            dist_dim: 16,
            n_beams: 64,
            dropout: 0.3,
            bn_momentum: 0.1,
            bn_eps: 1e-5,
        }
    }
}

impl NetConfig {
    pub fn validate(&self) -> Result<()> {
        if self.input_h == 0 || self.input_w == 0 {
            return Err(Error::config("net input must be non-empty"));
        }
        if self.kernel == 0 || self.kernel % 2 == 0 {
            return Err(Error::config(format!(
                "kernel {} must be odd for same-size padding",
                self.kernel
            )));
        }
        if self.conv_channels.is_empty() || self.conv_channels.contains(&0) {
            return Err(Error::config("conv channel counts must be positive"));
        }
        if self.fc_dims.is_empty() || self.fc_dims.contains(&0) {
            return Err(Error::config("dense layer widths must be positive"));
        }
        if self.attn_dim == 0 || self.dist_dim == 0 {
            return Err(Error::config("attention and distance widths must be positive"));
        }
        if self.n_beams < 2 {
            return Err(Error::config("need at least two beams to choose between"));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::config(format!("dropout {} outside [0, 1)", self.dropout)));
        }
        if !(self.bn_momentum > 0.0 && self.bn_momentum <= 1.0) {
            return Err(Error::config(format!("momentum {} outside (0, 1]", self.bn_momentum)));
        }
        if !(self.bn_eps > 0.0) {
            return Err(Error::config("batchnorm epsilon must be positive"));
        }
        Ok(())
    }

    pub fn positions(&self) -> usize {
        self.input_h * self.input_w
    }

    fn feat_dim(&self) -> usize {
        *self.fc_dims.last().expect("validated non-empty")
    }

    fn head_in(&self) -> usize {
        self.feat_dim() + self.dist_dim
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FcBlock {
    pub lin: Dense,
    pub bn: BatchNorm,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BeamNet {
    pub cfg: NetConfig,
    pub convs: Vec<ConvBlock>,
    pub fcs: Vec<FcBlock>,
    pub attn: Attention,
    pub dist: Dense,
    pub head: Dense,
    /// Distance standardization captured from the training set.
    pub d_mean: f64,
    pub d_std: f64,
}

impl BeamNet {
    /// Fresh net with uniform ±1/√fan_in weights and zero biases, drawn in
    /// declaration order so the same seed always yields the same net.
    pub fn init(cfg: &NetConfig, seed: u64) -> Result<BeamNet> {
        cfg.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seeds::derive(seed, "init", 0));
        let mut uniform = |len: usize, fan_in: usize| -> Vec<f64> {
            let lim = 1.0 / (fan_in as f64).sqrt();
            (0..len).map(|_| rng.gen_range(-lim..lim)).collect()
        };
        let k = cfg.kernel;
        let mut convs = Vec::new();
        let mut cin = 1;
        for &cout in &cfg.conv_channels {
            convs.push(ConvBlock {
                cin,
                cout,
                k,
                w: uniform(cout * cin * k * k, cin * k * k),
                b: vec![0.0; cout],
                bn: BatchNorm::identity(cout, cfg.bn_momentum, cfg.bn_eps),
            });
            cin = cout;
        }
        let mut fcs = Vec::new();
        let mut din = cin;
        for &dout in &cfg.fc_dims {
            fcs.push(FcBlock {
                lin: Dense { din, dout, w: uniform(dout * din, din), b: vec![0.0; dout] },
                bn: BatchNorm::identity(dout, cfg.bn_momentum, cfg.bn_eps),
            });
            din = dout;
        }
        let attn = Attention {
            dim: din,
            hidden: cfg.attn_dim,
            wa: uniform(cfg.attn_dim * din, din),
            ua: uniform(cfg.attn_dim * din, din),
            va: uniform(cfg.attn_dim, cfg.attn_dim),
        };
        let dist =
            Dense { din: 1, dout: cfg.dist_dim, w: uniform(cfg.dist_dim, 1), b: vec![0.0; cfg.dist_dim] };
        let head_in = cfg.head_in();
        let head = Dense {
            din: head_in,
            dout: cfg.n_beams,
            w: uniform(cfg.n_beams * head_in, head_in),
            b: vec![0.0; cfg.n_beams],
        };
        Ok(BeamNet { cfg: cfg.clone(), convs, fcs, attn, dist, head, d_mean: 0.0, d_std: 1.0 })
    }

    /// Same shape, all parameters and running statistics zeroed. Used as the
    /// gradient accumulator.
    pub fn zeros_like(&self) -> BeamNet {
        let mut z = self.clone();
        for (_, p) in z.params_mut() {
            p.iter_mut().for_each(|v| *v = 0.0);
        }
        for s in z.stats_mut() {
            s.iter_mut().for_each(|v| *v = 0.0);
        }
        z.d_mean = 0.0;
        z.d_std = 1.0;
        z
    }

    /// Every trainable tensor in a fixed, named order. The order is the
    /// serialization contract for checkpoints and the pairing contract for
    /// gradient application.
    pub fn params_mut(&mut self) -> Vec<(String, &mut Vec<f64>)> {
        let mut out: Vec<(String, &mut Vec<f64>)> = Vec::new();
        for (i, c) in self.convs.iter_mut().enumerate() {
            out.push((format!("conv{i}.w"), &mut c.w));
            out.push((format!("conv{i}.b"), &mut c.b));
            out.push((format!("conv{i}.bn.gamma"), &mut c.bn.gamma));
            out.push((format!("conv{i}.bn.beta"), &mut c.bn.beta));
        }
        for (i, f) in self.fcs.iter_mut().enumerate() {
            out.push((format!("fc{i}.w"), &mut f.lin.w));
            out.push((format!("fc{i}.b"), &mut f.lin.b));
            out.push((format!("fc{i}.bn.gamma"), &mut f.bn.gamma));
            out.push((format!("fc{i}.bn.beta"), &mut f.bn.beta));
        }
        out.push(("attn.wa".into(), &mut self.attn.wa));
        out.push(("attn.ua".into(), &mut self.attn.ua));
        out.push(("attn.va".into(), &mut self.attn.va));
        out.push(("dist.w".into(), &mut self.dist.w));
        out.push(("dist.b".into(), &mut self.dist.b));
        out.push(("head.w".into(), &mut self.head.w));
        out.push(("head.b".into(), &mut self.head.b));
        out
    }

    pub fn params(&self) -> Vec<(String, &Vec<f64>)> {
        let mut out: Vec<(String, &Vec<f64>)> = Vec::new();
        for (i, c) in self.convs.iter().enumerate() {
            out.push((format!("conv{i}.w"), &c.w));
            out.push((format!("conv{i}.b"), &c.b));
            out.push((format!("conv{i}.bn.gamma"), &c.bn.gamma));
            out.push((format!("conv{i}.bn.beta"), &c.bn.beta));
        }
        for (i, f) in self.fcs.iter().enumerate() {
            out.push((format!("fc{i}.w"), &f.lin.w));
            out.push((format!("fc{i}.b"), &f.lin.b));
            out.push((format!("fc{i}.bn.gamma"), &f.bn.gamma));
            out.push((format!("fc{i}.bn.beta"), &f.bn.beta));
        }
        out.push(("attn.wa".into(), &self.attn.wa));
        out.push(("attn.ua".into(), &self.attn.ua));
        out.push(("attn.va".into(), &self.attn.va));
        out.push(("dist.w".into(), &self.dist.w));
        out.push(("dist.b".into(), &self.dist.b));
        out.push(("head.w".into(), &self.head.w));
        out.push(("head.b".into(), &self.head.b));
        out
    }

    pub(crate) fn stats_mut(&mut self) -> Vec<&mut Vec<f64>> {
        let mut out: Vec<&mut Vec<f64>> = Vec::new();
        for c in self.convs.iter_mut() {
            out.push(&mut c.bn.run_mean);
            out.push(&mut c.bn.run_var);
        }
        for f in self.fcs.iter_mut() {
            out.push(&mut f.bn.run_mean);
            out.push(&mut f.bn.run_var);
        }
        out
    }

    pub(crate) fn stats(&self) -> Vec<&Vec<f64>> {
        let mut out: Vec<&Vec<f64>> = Vec::new();
        for c in self.convs.iter() {
            out.push(&c.bn.run_mean);
            out.push(&c.bn.run_var);
        }
        for f in self.fcs.iter() {
            out.push(&f.bn.run_mean);
            out.push(&f.bn.run_var);
        }
        out
    }
}

/// One conv-bn-relu block in eval mode (running statistics).
pub fn conv_forward(blk: &ConvBlock, x: &[f64], h: usize, w: usize) -> Result<Vec<f64>> {
    if h == 0 || w == 0 || x.len() != blk.cin * h * w {
        return Err(Error::Shape(format!(
            "conv input has {} values, want {}x{}x{}",
            x.len(),
            blk.cin,
            h,
            w
        )));
    }
    let z = conv2d(x, 1, h, w, blk);
    let mut out = bn_eval_channels(&z, 1, blk.cout, h * w, &blk.bn);
    relu(&mut out);
    Ok(out)
}

/// Single-sample attention pooling: (context vector, position weights).
pub fn attention_forward(att: &Attention, x: &[f64], positions: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let (ctx, wts, _) = attention(att, x, 1, positions)?;
    Ok((ctx, wts))
}

/// Every intermediate from one training-mode pass, consumed by `backward`.
pub struct TrainCache {
    n: usize,
    labels: Vec<usize>,
    x0: Vec<f64>,
    convs: Vec<ConvPass>,
    flat: Vec<f64>,
    fcs: Vec<FcPass>,
    att_t: Vec<f64>,
    att_w: Vec<f64>,
    dzn: Vec<f64>,
    u: Vec<f64>,
    logits: Vec<f64>,
}

struct ConvPass {
    bn: BnCache,
    out: Vec<f64>,
}

struct FcPass {
    bn: BnCache,
    out: Vec<f64>,
    mask: Option<Vec<f64>>,
}

impl TrainCache {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn logits(&self) -> &[f64] {
        &self.logits
    }

    /// Summed cross entropy of the cached logits against the cached labels.
    pub fn loss(&self) -> f64 {
        let k = self.logits.len() / self.n;
        cross_entropy_batch(&self.logits, self.n, k, &self.labels)
            .expect("labels validated when the cache was built")
    }
}

/// Training-mode forward pass over a batch. xs is n × input_h × input_w
/// single-channel inputs, ds the raw link distances in meters.
pub fn forward_train(
    net: &BeamNet,
    xs: &[f64],
    ds: &[f64],
    labels: &[usize],
    rng: &mut ChaCha8Rng,
) -> Result<TrainCache> {
    let cfg = &net.cfg;
    let n = ds.len();
    let hw = cfg.positions();
    if n == 0 {
        return Err(Error::Shape("empty batch".into()));
    }
    if xs.len() != n * hw || labels.len() != n {
        return Err(Error::Shape(format!(
            "batch holds {} values and {} labels for {} distances",
            xs.len(),
            labels.len(),
            n
        )));
    }
    if let Some(&bad) = labels.iter().find(|&&l| l >= cfg.n_beams) {
        return Err(Error::domain(format!("label {bad} out of range for {} beams", cfg.n_beams)));
    }
    if !(net.d_std > 0.0) {
        return Err(Error::domain("distance spread must be positive"));
    }

    let x0 = xs.to_vec();
    let mut convs = Vec::with_capacity(net.convs.len());
    let mut cur = x0.clone();
    for blk in &net.convs {
        let z = conv2d(&cur, n, cfg.input_h, cfg.input_w, blk);
        let (mut out, bnc) = bn_train_channels(&z, n, blk.cout, hw, &blk.bn);
        relu(&mut out);
        cur = out.clone();
        convs.push(ConvPass { bn: bnc, out });
    }

    let c_last = net.convs.last().expect("validated non-empty").cout;
    // Channel-major to position-major: the dense stack runs per position.
    let mut flat = vec![0.0; n * hw * c_last];
    for s in 0..n {
        for ch in 0..c_last {
            let src = &cur[(s * c_last + ch) * hw..][..hw];
            for t in 0..hw {
                flat[(s * hw + t) * c_last + ch] = src[t];
            }
        }
    }

    let rows = n * hw;
    let mut fcs = Vec::with_capacity(net.fcs.len());
    let mut curf = flat.clone();
    for (l, fcb) in net.fcs.iter().enumerate() {
        let z = dense(&curf, rows, &fcb.lin);
        let (mut out, bnc) = bn_train_features(&z, rows, fcb.lin.dout, &fcb.bn);
        relu(&mut out);
        let mask = if l == 0 && cfg.dropout > 0.0 {
            let m = dropout_mask(rng, out.len(), cfg.dropout);
            for (o, f) in out.iter_mut().zip(&m) {
                *o *= f;
            }
            Some(m)
        } else {
            None
        };
        curf = out.clone();
        fcs.push(FcPass { bn: bnc, out, mask });
    }

    let feat = cfg.feat_dim();
    let (ctx, att_w, att_t) = attention(&net.attn, &curf, n, hw)?;
    let dzn: Vec<f64> = ds.iter().map(|d| (d - net.d_mean) / net.d_std).collect();
    let df = dense(&dzn, n, &net.dist);
    let head_in = cfg.head_in();
    let mut u = vec![0.0; n * head_in];
    for s in 0..n {
        u[s * head_in..][..feat].copy_from_slice(&ctx[s * feat..][..feat]);
        u[s * head_in + feat..][..cfg.dist_dim]
            .copy_from_slice(&df[s * cfg.dist_dim..][..cfg.dist_dim]);
    }
    let logits = dense(&u, n, &net.head);
    Ok(TrainCache { n, labels: labels.to_vec(), x0, convs, flat, fcs, att_t, att_w, dzn, u, logits })
}

/// Exact gradient of the summed batch cross entropy wrt every parameter.
/// Returns a net-shaped accumulator; running statistics are untouched.
pub fn backward(net: &BeamNet, cache: &TrainCache) -> BeamNet {
    let cfg = &net.cfg;
    let n = cache.n;
    let hw = cfg.positions();
    let rows = n * hw;
    let feat = cfg.feat_dim();
    let head_in = cfg.head_in();
    let mut g = net.zeros_like();

    let dlogits = loss::ce_grad(&cache.logits, n, cfg.n_beams, &cache.labels);
    let du = dense_back(&cache.u, &dlogits, n, &net.head, &mut g.head.w, &mut g.head.b, true)
        .expect("dx requested");

    let mut dctx = vec![0.0; n * feat];
    let mut ddf = vec![0.0; n * cfg.dist_dim];
    for s in 0..n {
        dctx[s * feat..][..feat].copy_from_slice(&du[s * head_in..][..feat]);
        ddf[s * cfg.dist_dim..][..cfg.dist_dim]
            .copy_from_slice(&du[s * head_in + feat..][..cfg.dist_dim]);
    }
    dense_back(&cache.dzn, &ddf, n, &net.dist, &mut g.dist.w, &mut g.dist.b, false);

    let x_att = &cache.fcs.last().expect("validated non-empty").out;
    let (datt, dwsum, dva) =
        attention_back(&net.attn, x_att, &cache.att_t, &cache.att_w, &dctx, n, hw);
    for i in 0..dwsum.len() {
        g.attn.wa[i] += dwsum[i];
        g.attn.ua[i] += dwsum[i];
    }
    for i in 0..dva.len() {
        g.attn.va[i] += dva[i];
    }

    let mut dcur = datt;
    for l in (0..net.fcs.len()).rev() {
        let pass = &cache.fcs[l];
        let fcb = &net.fcs[l];
        // Dropout and relu gates both read off the stored activation: a zero
        // output means no gradient either way.
        let mut dbn = vec![0.0; dcur.len()];
        match &pass.mask {
            Some(m) => {
                for i in 0..dcur.len() {
                    if pass.out[i] > 0.0 {
                        dbn[i] = dcur[i] * m[i];
                    }
                }
            }
            None => {
                for i in 0..dcur.len() {
                    if pass.out[i] > 0.0 {
                        dbn[i] = dcur[i];
                    }
                }
            }
        }
        let (dz, dgamma, dbeta) = bn_back_features(&dbn, &pass.bn, &fcb.bn, rows, fcb.lin.dout);
        for i in 0..dgamma.len() {
            g.fcs[l].bn.gamma[i] += dgamma[i];
            g.fcs[l].bn.beta[i] += dbeta[i];
        }
        let x_in: &[f64] = if l == 0 { &cache.flat } else { &cache.fcs[l - 1].out };
        let gf = &mut g.fcs[l];
        dcur = dense_back(x_in, &dz, rows, &fcb.lin, &mut gf.lin.w, &mut gf.lin.b, true)
            .expect("dx requested");
    }

    let c_last = net.convs.last().expect("validated non-empty").cout;
    let mut dc = vec![0.0; n * c_last * hw];
    for s in 0..n {
        for ch in 0..c_last {
            let dst = &mut dc[(s * c_last + ch) * hw..][..hw];
            for t in 0..hw {
                dst[t] = dcur[(s * hw + t) * c_last + ch];
            }
        }
    }
    for l in (0..net.convs.len()).rev() {
        let pass = &cache.convs[l];
        let blk = &net.convs[l];
        let mut dbn = vec![0.0; dc.len()];
        for i in 0..dc.len() {
            if pass.out[i] > 0.0 {
                dbn[i] = dc[i];
            }
        }
        let (dz, dgamma, dbeta) = bn_back_channels(&dbn, &pass.bn, &blk.bn, n, blk.cout, hw);
        for i in 0..dgamma.len() {
            g.convs[l].bn.gamma[i] += dgamma[i];
            g.convs[l].bn.beta[i] += dbeta[i];
        }
        let x_in: &[f64] = if l == 0 { &cache.x0 } else { &cache.convs[l - 1].out };
        let gc = &mut g.convs[l];
        let dx = conv2d_back(
            x_in,
            &dz,
            n,
            cfg.input_h,
            cfg.input_w,
            blk,
            &mut gc.w,
            &mut gc.b,
            l > 0,
        );
        if let Some(dx) = dx {
            dc = dx;
        }
    }
    g
}

/// Folds the cached batch statistics into the net's running estimates.
/// Separate from `backward` so gradient computation never mutates the net.
pub fn update_running_stats(net: &mut BeamNet, cache: &TrainCache) {
    for (blk, pass) in net.convs.iter_mut().zip(&cache.convs) {
        blk.bn.absorb(&pass.bn);
    }
    for (fcb, pass) in net.fcs.iter_mut().zip(&cache.fcs) {
        fcb.bn.absorb(&pass.bn);
    }
}

/// p ← p − lr · g / batch_n for every parameter.
pub fn sgd_step(net: &mut BeamNet, grads: &BeamNet, lr: f64, batch_n: usize) {
    let scale = lr / batch_n as f64;
    for ((_, p), (_, gv)) in net.params_mut().into_iter().zip(grads.params()) {
        for (pv, g) in p.iter_mut().zip(gv.iter()) {
            *pv -= scale * g;
        }
    }
}

/// Eval-mode forward pass over a batch; per-sample independent.
pub fn forward_eval_batch(net: &BeamNet, xs: &[f64], ds: &[f64]) -> Result<Vec<f64>> {
    let cfg = &net.cfg;
    let n = ds.len();
    let hw = cfg.positions();
    if n == 0 || xs.len() != n * hw {
        return Err(Error::Shape(format!(
            "eval batch holds {} values for {} distances",
            xs.len(),
            n
        )));
    }
    if !(net.d_std > 0.0) {
        return Err(Error::domain("distance spread must be positive"));
    }
    let mut cur = xs.to_vec();
    for blk in &net.convs {
        let z = conv2d(&cur, n, cfg.input_h, cfg.input_w, blk);
        let mut out = bn_eval_channels(&z, n, blk.cout, hw, &blk.bn);
        relu(&mut out);
        cur = out;
    }
    let c_last = net.convs.last().expect("validated non-empty").cout;
    let mut flat = vec![0.0; n * hw * c_last];
    for s in 0..n {
        for ch in 0..c_last {
            let src = &cur[(s * c_last + ch) * hw..][..hw];
            for t in 0..hw {
                flat[(s * hw + t) * c_last + ch] = src[t];
            }
        }
    }
    let rows = n * hw;
    let mut curf = flat;
    for fcb in &net.fcs {
        let z = dense(&curf, rows, &fcb.lin);
        let mut out = bn_eval_features(&z, rows, fcb.lin.dout, &fcb.bn);
        relu(&mut out);
        curf = out;
    }
    let feat = cfg.feat_dim();
    let (ctx, _, _) = attention(&net.attn, &curf, n, hw)?;
    let dzn: Vec<f64> = ds.iter().map(|d| (d - net.d_mean) / net.d_std).collect();
    let df = dense(&dzn, n, &net.dist);
    let head_in = cfg.head_in();
    let mut u = vec![0.0; n * head_in];
    for s in 0..n {
        u[s * head_in..][..feat].copy_from_slice(&ctx[s * feat..][..feat]);
        u[s * head_in + feat..][..cfg.dist_dim]
            .copy_from_slice(&df[s * cfg.dist_dim..][..cfg.dist_dim]);
    }
    Ok(dense(&u, n, &net.head))
}

/// Beam logits for one block-value matrix.
pub fn forward_eval(net: &BeamNet, wek: &WekMatrix) -> Result<Vec<f64>> {
    if wek.ny != net.cfg.input_h || wek.nx != net.cfg.input_w {
        return Err(Error::Shape(format!(
            "input is {}x{} but the net expects {}x{}",
            wek.ny, wek.nx, net.cfg.input_h, net.cfg.input_w
        )));
    }
    forward_eval_batch(net, &wek.values, &[wek.distance_m])
}

/// Beam indices sorted by descending logit; ties go to the lower index.
pub fn rank_beams(logits: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..logits.len()).collect();
    idx.sort_by(|&a, &b| {
        logits[b]
            .partial_cmp(&logits[a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    idx
}

/// The k most promising beams for one input, best first.
pub fn predict_topk(net: &BeamNet, wek: &WekMatrix, k: usize) -> Result<Vec<usize>> {
    if k == 0 || k > net.cfg.n_beams {
        return Err(Error::domain(format!("k={k} outside 1..={}", net.cfg.n_beams)));
    }
    let logits = forward_eval(net, wek)?;
    let mut ranked = rank_beams(&logits);
    ranked.truncate(k);
    Ok(ranked)
}

/// Percentage of samples whose true beam appears among the first k ranked.
pub fn topk_accuracy(preds: &[Vec<usize>], labels: &[usize], k: usize) -> Result<f64> {
    if preds.is_empty() || preds.len() != labels.len() {
        return Err(Error::Shape(format!(
            "{} rankings against {} labels",
            preds.len(),
            labels.len()
        )));
    }
    if k == 0 {
        return Err(Error::domain("k must be positive"));
    }
    let mut hits = 0usize;
    for (p, &l) in preds.iter().zip(labels) {
        if p.len() < k {
            return Err(Error::Shape(format!(
                "ranking of {} beams cannot answer top-{k}",
                p.len()
            )));
        }
        if p[..k].contains(&l) {
            hits += 1;
        }
    }
    Ok(100.0 * hits as f64 / preds.len() as f64)
}
