//! Layer primitives for the beam predictor: same-padded convolution, batch
//! normalization in both batch-statistics and running-statistics modes, dense
//! affine maps, additive attention, and inverted dropout.
//!
//! Activations are flat f64 buffers. Convolution activations are laid out
//! sample-major as n × c × h × w; dense activations as rows × features.
//! Backward passes are exact transposes of the forward code paths.

use rand::Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct BatchNorm {
    pub gamma: Vec<f64>,
    pub beta: Vec<f64>,
    pub run_mean: Vec<f64>,
    pub run_var: Vec<f64>,
    pub momentum: f64,
    pub eps: f64,
}

/// Batch statistics captured by a training-mode pass, kept for the backward
/// pass and for folding into the running estimates.
#[derive(Debug, Clone)]
pub struct BnCache {
    pub mean: Vec<f64>,
    pub var: Vec<f64>,
    pub inv_std: Vec<f64>,
    pub xhat: Vec<f64>,
}

impl BatchNorm {
    pub fn identity(dim: usize, momentum: f64, eps: f64) -> BatchNorm {
        BatchNorm {
            gamma: vec![1.0; dim],
            beta: vec![0.0; dim],
            run_mean: vec![0.0; dim],
            run_var: vec![1.0; dim],
            momentum,
            eps,
        }
    }

    pub fn dim(&self) -> usize {
        self.gamma.len()
    }

    /// running = (1 − momentum) · running + momentum · batch.
    pub fn absorb(&mut self, cache: &BnCache) {
        let m = self.momentum;
        for i in 0..self.dim() {
            self.run_mean[i] = (1.0 - m) * self.run_mean[i] + m * cache.mean[i];
            self.run_var[i] = (1.0 - m) * self.run_var[i] + m * cache.var[i];
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvBlock {
    pub cin: usize,
    pub cout: usize,
    pub k: usize,
    /// cout × cin × k × k, row-major.
    pub w: Vec<f64>,
    pub b: Vec<f64>,
    pub bn: BatchNorm,
}

/// Same-padded cross-correlation plus bias. Returns n × cout × h × w.
pub fn conv2d(x: &[f64], n: usize, h: usize, w: usize, blk: &ConvBlock) -> Vec<f64> {
    let (cin, cout, k) = (blk.cin, blk.cout, blk.k);
    let p = k / 2;
    let hw = h * w;
    assert_eq!(x.len(), n * cin * hw, "conv input size");
    let mut out = vec![0.0; n * cout * hw];
    for s in 0..n {
        let xs = &x[s * cin * hw..][..cin * hw];
        let os = &mut out[s * cout * hw..][..cout * hw];
        for co in 0..cout {
            let oc = &mut os[co * hw..][..hw];
            oc.fill(blk.b[co]);
            for ci in 0..cin {
                let xc = &xs[ci * hw..][..hw];
                let wc = &blk.w[(co * cin + ci) * k * k..][..k * k];
                for u in 0..k {
                    for i in 0..h {
                        let y = i + u;
                        if y < p || y - p >= h {
                            continue;
                        }
                        let xrow = &xc[(y - p) * w..][..w];
                        let orow = &mut oc[i * w..][..w];
                        for v in 0..k {
                            let wv = wc[u * k + v];
                            let j0 = p.saturating_sub(v);
                            let j1 = (w + p).saturating_sub(v).min(w);
                            for j in j0..j1 {
                                orow[j] += wv * xrow[j + v - p];
                            }
                        }
                    }
                }
            }
        }
    }
    out
}

/// Gradient of `conv2d`: accumulates into dw/db, optionally returns dx.
pub fn conv2d_back(
    x: &[f64],
    dz: &[f64],
    n: usize,
    h: usize,
    w: usize,
    blk: &ConvBlock,
    dw: &mut [f64],
    db: &mut [f64],
    want_dx: bool,
) -> Option<Vec<f64>> {
    let (cin, cout, k) = (blk.cin, blk.cout, blk.k);
    let p = k / 2;
    let hw = h * w;
    assert_eq!(x.len(), n * cin * hw);
    assert_eq!(dz.len(), n * cout * hw);
    let mut dx = vec![0.0; if want_dx { n * cin * hw } else { 0 }];
    for s in 0..n {
        let xs = &x[s * cin * hw..][..cin * hw];
        let dzs = &dz[s * cout * hw..][..cout * hw];
        for co in 0..cout {
            let dzc = &dzs[co * hw..][..hw];
            db[co] += dzc.iter().sum::<f64>();
            for ci in 0..cin {
                let xc = &xs[ci * hw..][..hw];
                let wbase = (co * cin + ci) * k * k;
                for u in 0..k {
                    for i in 0..h {
                        let y = i + u;
                        if y < p || y - p >= h {
                            continue;
                        }
                        let xrow = &xc[(y - p) * w..][..w];
                        let dzrow = &dzc[i * w..][..w];
                        for v in 0..k {
                            let j0 = p.saturating_sub(v);
                            let j1 = (w + p).saturating_sub(v).min(w);
                            let mut acc = 0.0;
                            for j in j0..j1 {
                                acc += dzrow[j] * xrow[j + v - p];
                            }
                            dw[wbase + u * k + v] += acc;
                        }
                    }
                }
                if want_dx {
                    let dxc = &mut dx[s * cin * hw + ci * hw..][..hw];
                    for u in 0..k {
                        for i in 0..h {
                            let y = i + u;
                            if y < p || y - p >= h {
                                continue;
                            }
                            let dzrow = &dzc[i * w..][..w];
                            let base = (y - p) * w;
                            for v in 0..k {
                                let wv = blk.w[wbase + u * k + v];
                                let j0 = p.saturating_sub(v);
                                let j1 = (w + p).saturating_sub(v).min(w);
                                for j in j0..j1 {
                                    dxc[base + j + v - p] += wv * dzrow[j];
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    if want_dx {
        Some(dx)
    } else {
        None
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub din: usize,
    pub dout: usize,
    /// dout × din, row-major.
    pub w: Vec<f64>,
    pub b: Vec<f64>,
}

pub fn dense(x: &[f64], rows: usize, lin: &Dense) -> Vec<f64> {
    assert_eq!(x.len(), rows * lin.din, "dense input size");
    let mut out = vec![0.0; rows * lin.dout];
    for r in 0..rows {
        let xr = &x[r * lin.din..][..lin.din];
        let or = &mut out[r * lin.dout..][..lin.dout];
        for f in 0..lin.dout {
            let wf = &lin.w[f * lin.din..][..lin.din];
            let mut acc = lin.b[f];
            for c in 0..lin.din {
                acc += wf[c] * xr[c];
            }
            or[f] = acc;
        }
    }
    out
}

pub fn dense_back(
    x: &[f64],
    dz: &[f64],
    rows: usize,
    lin: &Dense,
    dw: &mut [f64],
    db: &mut [f64],
    want_dx: bool,
) -> Option<Vec<f64>> {
    assert_eq!(x.len(), rows * lin.din);
    assert_eq!(dz.len(), rows * lin.dout);
    let mut dx = vec![0.0; if want_dx { rows * lin.din } else { 0 }];
    for r in 0..rows {
        let xr = &x[r * lin.din..][..lin.din];
        let dzr = &dz[r * lin.dout..][..lin.dout];
        for f in 0..lin.dout {
            let g = dzr[f];
            if g == 0.0 {
                continue;
            }
            db[f] += g;
            let wrow = &mut dw[f * lin.din..][..lin.din];
            for c in 0..lin.din {
                wrow[c] += g * xr[c];
            }
        }
        if want_dx {
            let dxr = &mut dx[r * lin.din..][..lin.din];
            for f in 0..lin.dout {
                let g = dzr[f];
                if g == 0.0 {
                    continue;
                }
                let wf = &lin.w[f * lin.din..][..lin.din];
                for c in 0..lin.din {
                    dxr[c] += g * wf[c];
                }
            }
        }
    }
    if want_dx {
        Some(dx)
    } else {
        None
    }
}

/// Training-mode batch norm over channel-major activations (n × c × p);
/// statistics per channel across samples and positions.
pub fn bn_train_channels(x: &[f64], n: usize, c: usize, p: usize, bn: &BatchNorm) -> (Vec<f64>, BnCache) {
    assert_eq!(x.len(), n * c * p);
    assert_eq!(bn.dim(), c);
    let m = (n * p) as f64;
    let mut mean = vec![0.0; c];
    for s in 0..n {
        for ch in 0..c {
            mean[ch] += x[(s * c + ch) * p..][..p].iter().sum::<f64>();
        }
    }
    for v in mean.iter_mut() {
        *v /= m;
    }
    let mut var = vec![0.0; c];
    for s in 0..n {
        for ch in 0..c {
            let mu = mean[ch];
            var[ch] += x[(s * c + ch) * p..][..p].iter().map(|t| (t - mu) * (t - mu)).sum::<f64>();
        }
    }
    for v in var.iter_mut() {
        *v /= m;
    }
    let inv_std: Vec<f64> = var.iter().map(|v| 1.0 / (v + bn.eps).sqrt()).collect();
    let mut xhat = vec![0.0; x.len()];
    let mut out = vec![0.0; x.len()];
    for s in 0..n {
        for ch in 0..c {
            let base = (s * c + ch) * p;
            let (mu, is, g, b) = (mean[ch], inv_std[ch], bn.gamma[ch], bn.beta[ch]);
            for t in 0..p {
                let xh = (x[base + t] - mu) * is;
                xhat[base + t] = xh;
                out[base + t] = g * xh + b;
            }
        }
    }
    (out, BnCache { mean, var, inv_std, xhat })
}

pub fn bn_eval_channels(x: &[f64], n: usize, c: usize, p: usize, bn: &BatchNorm) -> Vec<f64> {
    assert_eq!(x.len(), n * c * p);
    let scale: Vec<f64> = (0..c).map(|ch| bn.gamma[ch] / (bn.run_var[ch] + bn.eps).sqrt()).collect();
    let mut out = vec![0.0; x.len()];
    for s in 0..n {
        for ch in 0..c {
            let base = (s * c + ch) * p;
            let (sc, sh) = (scale[ch], bn.beta[ch] - bn.run_mean[ch] * scale[ch]);
            for t in 0..p {
                out[base + t] = x[base + t] * sc + sh;
            }
        }
    }
    out
}

/// dx = γ·inv_std·(dy − mean(dy) − x̂·mean(dy·x̂)), means over the batch axis.
pub fn bn_back_channels(
    dy: &[f64],
    cache: &BnCache,
    bn: &BatchNorm,
    n: usize,
    c: usize,
    p: usize,
) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    assert_eq!(dy.len(), n * c * p);
    let m = (n * p) as f64;
    let mut s1 = vec![0.0; c];
    let mut s2 = vec![0.0; c];
    for s in 0..n {
        for ch in 0..c {
            let base = (s * c + ch) * p;
            for t in 0..p {
                s1[ch] += dy[base + t];
                s2[ch] += dy[base + t] * cache.xhat[base + t];
            }
        }
    }
    let mut dx = vec![0.0; dy.len()];
    for s in 0..n {
        for ch in 0..c {
            let base = (s * c + ch) * p;
            let g = bn.gamma[ch] * cache.inv_std[ch];
            let (m1, m2) = (s1[ch] / m, s2[ch] / m);
            for t in 0..p {
                dx[base + t] = g * (dy[base + t] - m1 - cache.xhat[base + t] * m2);
            }
        }
    }
    (dx, s2, s1)
}

/// Training-mode batch norm over feature-minor activations (rows × f);
/// statistics per feature across rows.
pub fn bn_train_features(x: &[f64], rows: usize, f: usize, bn: &BatchNorm) -> (Vec<f64>, BnCache) {
    assert_eq!(x.len(), rows * f);
    assert_eq!(bn.dim(), f);
    let m = rows as f64;
    let mut mean = vec![0.0; f];
    for r in 0..rows {
        let xr = &x[r * f..][..f];
        for (acc, v) in mean.iter_mut().zip(xr) {
            *acc += v;
        }
    }
    for v in mean.iter_mut() {
        *v /= m;
    }
    let mut var = vec![0.0; f];
    for r in 0..rows {
        let xr = &x[r * f..][..f];
        for i in 0..f {
            let d = xr[i] - mean[i];
            var[i] += d * d;
        }
    }
    for v in var.iter_mut() {
        *v /= m;
    }
    let inv_std: Vec<f64> = var.iter().map(|v| 1.0 / (v + bn.eps).sqrt()).collect();
    let mut xhat = vec![0.0; x.len()];
    let mut out = vec![0.0; x.len()];
    for r in 0..rows {
        let base = r * f;
        for i in 0..f {
            let xh = (x[base + i] - mean[i]) * inv_std[i];
            xhat[base + i] = xh;
            out[base + i] = bn.gamma[i] * xh + bn.beta[i];
        }
    }
    (out, BnCache { mean, var, inv_std, xhat })
}

pub fn bn_eval_features(x: &[f64], rows: usize, f: usize, bn: &BatchNorm) -> Vec<f64> {
    assert_eq!(x.len(), rows * f);
    let scale: Vec<f64> = (0..f).map(|i| bn.gamma[i] / (bn.run_var[i] + bn.eps).sqrt()).collect();
    let shift: Vec<f64> = (0..f).map(|i| bn.beta[i] - bn.run_mean[i] * scale[i]).collect();
    let mut out = vec![0.0; x.len()];
    for r in 0..rows {
        let base = r * f;
        for i in 0..f {
            out[base + i] = x[base + i] * scale[i] + shift[i];
        }
    }
    out
}

pub fn bn_back_features(
    dy: &[f64],
    cache: &BnCache,
    bn: &BatchNorm,
    rows: usize,
    f: usize,
) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    assert_eq!(dy.len(), rows * f);
    let m = rows as f64;
    let mut s1 = vec![0.0; f];
    let mut s2 = vec![0.0; f];
    for r in 0..rows {
        let base = r * f;
        for i in 0..f {
            s1[i] += dy[base + i];
            s2[i] += dy[base + i] * cache.xhat[base + i];
        }
    }
    let mut dx = vec![0.0; dy.len()];
    for r in 0..rows {
        let base = r * f;
        for i in 0..f {
            let g = bn.gamma[i] * cache.inv_std[i];
            dx[base + i] =
                g * (dy[base + i] - s1[i] / m - cache.xhat[base + i] * s2[i] / m);
        }
    }
    (dx, s2, s1)
}

pub fn relu(x: &mut [f64]) {
    for v in x.iter_mut() {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
}

/// Inverted-dropout mask: 0 with probability `rate`, else 1/(1 − rate), so
/// the expected activation is unchanged and eval needs no rescaling.
pub fn dropout_mask<R: Rng>(rng: &mut R, len: usize, rate: f64) -> Vec<f64> {
    assert!((0.0..1.0).contains(&rate), "dropout rate {rate} outside [0, 1)");
    if rate == 0.0 {
        return vec![1.0; len];
    }
    let keep = 1.0 / (1.0 - rate);
    (0..len).map(|_| if rng.gen::<f64>() < rate { 0.0 } else { keep }).collect()
}

/// Additive attention: both projection matrices multiply the same input, so
/// their gradients coincide and the score is v·tanh((W + U)·x).
#[derive(Debug, Clone, PartialEq)]
pub struct Attention {
    pub dim: usize,
    pub hidden: usize,
    /// hidden × dim.
    pub wa: Vec<f64>,
    /// hidden × dim.
    pub ua: Vec<f64>,
    pub va: Vec<f64>,
}

fn softmax_in_place(row: &mut [f64]) {
    let m = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in row.iter_mut() {
        *v = (*v - m).exp();
        sum += *v;
    }
    for v in row.iter_mut() {
        *v /= sum;
    }
}

/// Batched attention pooling over positions. x is n × pp × dim; returns
/// (context n × dim, weights n × pp, tanh activations n × pp × hidden).
pub fn attention(
    att: &Attention,
    x: &[f64],
    n: usize,
    pp: usize,
) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    let c = att.dim;
    if pp == 0 {
        return Err(Error::Shape("attention needs at least one position".into()));
    }
    if x.len() != n * pp * c {
        return Err(Error::Shape(format!(
            "attention input has {} values, want {}x{}x{}",
            x.len(),
            n,
            pp,
            c
        )));
    }
    let h = att.hidden;
    let mut wsum = vec![0.0; h * c];
    for i in 0..h * c {
        wsum[i] = att.wa[i] + att.ua[i];
    }
    let mut ctx = vec![0.0; n * c];
    let mut wts = vec![0.0; n * pp];
    let mut tanhs = vec![0.0; n * pp * h];
    for s in 0..n {
        let xs = &x[s * pp * c..][..pp * c];
        let scores = &mut wts[s * pp..][..pp];
        for p in 0..pp {
            let xp = &xs[p * c..][..c];
            let tp = &mut tanhs[(s * pp + p) * h..][..h];
            let mut score = 0.0;
            for hh in 0..h {
                let wrow = &wsum[hh * c..][..c];
                let mut pre = 0.0;
                for cc in 0..c {
                    pre += wrow[cc] * xp[cc];
                }
                let t = pre.tanh();
                tp[hh] = t;
                score += att.va[hh] * t;
            }
            scores[p] = score;
        }
        softmax_in_place(scores);
        let cs = &mut ctx[s * c..][..c];
        for p in 0..pp {
            let wp = scores[p];
            let xp = &xs[p * c..][..c];
            for cc in 0..c {
                cs[cc] += wp * xp[cc];
            }
        }
    }
    Ok((ctx, wts, tanhs))
}

/// Gradient of `attention` wrt input and parameters. Returns
/// (dx, d(wa) = d(ua), d(va)); the caller adds the shared matrix gradient to
/// both projection matrices.
pub fn attention_back(
    att: &Attention,
    x: &[f64],
    tanhs: &[f64],
    wts: &[f64],
    dctx: &[f64],
    n: usize,
    pp: usize,
) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let c = att.dim;
    let h = att.hidden;
    assert_eq!(x.len(), n * pp * c);
    assert_eq!(dctx.len(), n * c);
    let mut wsum = vec![0.0; h * c];
    for i in 0..h * c {
        wsum[i] = att.wa[i] + att.ua[i];
    }
    let mut dx = vec![0.0; n * pp * c];
    let mut dwsum = vec![0.0; h * c];
    let mut dva = vec![0.0; h];
    let mut dw = vec![0.0; pp];
    let mut dpre = vec![0.0; h];
    for s in 0..n {
        let xs = &x[s * pp * c..][..pp * c];
        let ws = &wts[s * pp..][..pp];
        let dc = &dctx[s * c..][..c];
        let dxs = &mut dx[s * pp * c..][..pp * c];
        // Context is a convex combination: grads split into the mixture
        // weights and the mixed vectors.
        let mut dot = 0.0;
        for p in 0..pp {
            let xp = &xs[p * c..][..c];
            let mut acc = 0.0;
            for cc in 0..c {
                acc += dc[cc] * xp[cc];
                dxs[p * c + cc] += ws[p] * dc[cc];
            }
            dw[p] = acc;
            dot += ws[p] * acc;
        }
        for p in 0..pp {
            // Softmax Jacobian applied to the weight gradient.
            let ds = ws[p] * (dw[p] - dot);
            if ds == 0.0 {
                continue;
            }
            let tp = &tanhs[(s * pp + p) * h..][..h];
            let xp = &xs[p * c..][..c];
            for hh in 0..h {
                dva[hh] += ds * tp[hh];
                dpre[hh] = ds * att.va[hh] * (1.0 - tp[hh] * tp[hh]);
            }
            for hh in 0..h {
                let g = dpre[hh];
                if g == 0.0 {
                    continue;
                }
                let wrow = &wsum[hh * c..][..c];
                let drow = &mut dwsum[hh * c..][..c];
                for cc in 0..c {
                    drow[cc] += g * xp[cc];
                    dxs[p * c + cc] += g * wrow[cc];
                }
            }
        }
    }
    (dx, dwsum, dva)
}
