//! Cross-entropy over raw logits, stabilized with the max-shift trick so
//! large margins neither overflow nor lose the tail.

use crate::error::{Error, Result};

/// −ln softmax(logits)[label].
pub fn cross_entropy(logits: &[f64], label: usize) -> Result<f64> {
    if logits.is_empty() {
        return Err(Error::domain("cross entropy needs at least one logit"));
    }
    if label >= logits.len() {
        return Err(Error::domain(format!(
            "label {label} out of range for {} classes",
            logits.len()
        )));
    }
    let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lse = m + logits.iter().map(|z| (z - m).exp()).sum::<f64>().ln();
    Ok(lse - logits[label])
}

/// Batch loss: the sum of per-sample cross entropies. logits is n × k.
pub fn cross_entropy_batch(logits: &[f64], n: usize, k: usize, labels: &[usize]) -> Result<f64> {
    if logits.len() != n * k || labels.len() != n {
        return Err(Error::Shape(format!(
            "loss over {} logits / {} labels, want {n}x{k}",
            logits.len(),
            labels.len()
        )));
    }
    let mut total = 0.0;
    for s in 0..n {
        total += cross_entropy(&logits[s * k..][..k], labels[s])?;
    }
    Ok(total)
}

/// Gradient of the summed batch loss wrt logits: softmax − onehot per row.
pub(crate) fn ce_grad(logits: &[f64], n: usize, k: usize, labels: &[usize]) -> Vec<f64> {
    let mut g = vec![0.0; n * k];
    for s in 0..n {
        let row = &logits[s * k..][..k];
        let gr = &mut g[s * k..][..k];
        let m = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for (o, z) in gr.iter_mut().zip(row) {
            *o = (z - m).exp();
            sum += *o;
        }
        for o in gr.iter_mut() {
            *o /= sum;
        }
        gr[labels[s]] -= 1.0;
    }
    g
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn uniform_logits_give_ln_of_class_count() {
        let logits = vec![0.0; 64];
        let loss = cross_entropy(&logits, 17).unwrap();
        assert!((loss - 64.0_f64.ln()).abs() < 1e-12);
        assert!((loss - 4.1588830834).abs() < 1e-9);
        // Shifting every logit changes nothing.
        let shifted: Vec<f64> = logits.iter().map(|z| z + 123.456).collect();
        assert!((cross_entropy(&shifted, 17).unwrap() - loss).abs() < 1e-9);
    }

    #[test]
    fn huge_margin_drives_loss_to_zero() {
        // With a +50 margin over 7 rivals the loss is 7·e^{−50} plus
        // higher-order dust, comfortably under 1e-20.
        let mut logits = vec![0.0; 8];
        logits[3] = 50.0;
        let loss = cross_entropy(&logits, 3).unwrap();
        assert!(loss >= 0.0);
        assert!(loss < 1e-20, "loss {loss}");
        // A +30 margin stays representable and still tracks 7·e^{−30}.
        logits[3] = 30.0;
        let loss = cross_entropy(&logits, 3).unwrap();
        let want = 7.0 * (-30.0f64).exp();
        assert!((loss - want).abs() / want < 1e-2, "loss {loss} vs {want}");
        // And it never goes negative even at extreme margins.
        logits[3] = 900.0;
        assert!(cross_entropy(&logits, 3).unwrap() >= 0.0);
    }

    #[test]
    fn matches_direct_softmax_formula() {
        let mut rng = ChaCha8Rng::seed_from_u64(40);
        for _ in 0..50 {
            let k = rng.gen_range(2..12);
            let logits: Vec<f64> = (0..k).map(|_| rng.gen_range(-5.0..5.0)).collect();
            let label = rng.gen_range(0..k);
            let denom: f64 = logits.iter().map(|z| z.exp()).sum();
            let direct = -(logits[label].exp() / denom).ln();
            let got = cross_entropy(&logits, label).unwrap();
            assert!((got - direct).abs() < 1e-10);
        }
    }

    #[test]
    fn label_out_of_range_is_rejected() {
        assert!(cross_entropy(&[0.0, 1.0], 2).is_err());
        assert!(cross_entropy(&[], 0).is_err());
        assert!(cross_entropy_batch(&[0.0; 6], 2, 3, &[0, 3]).is_err());
        assert!(cross_entropy_batch(&[0.0; 5], 2, 3, &[0, 1]).is_err());
    }

    #[test]
    fn batch_loss_sums_rows() {
        let logits = [1.0, 2.0, 0.5, -1.0, 0.0, 3.0];
        let want = cross_entropy(&logits[..3], 1).unwrap() + cross_entropy(&logits[3..], 2).unwrap();
        let got = cross_entropy_batch(&logits, 2, 3, &[1, 2]).unwrap();
        assert!((got - want).abs() < 1e-15);
    }

    #[test]
    fn grad_rows_sum_to_zero_and_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let (n, k) = (3, 5);
        let logits: Vec<f64> = (0..n * k).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let labels = vec![4, 0, 2];
        let g = ce_grad(&logits, n, k, &labels);
        for s in 0..n {
            let row_sum: f64 = g[s * k..][..k].iter().sum();
            assert!(row_sum.abs() < 1e-12);
        }
        let eps = 1e-6;
        for i in 0..logits.len() {
            let mut p = logits.clone();
            p[i] += eps;
            let mut m = logits.clone();
            m[i] -= eps;
            let fd = (cross_entropy_batch(&p, n, k, &labels).unwrap()
                - cross_entropy_batch(&m, n, k, &labels).unwrap())
                / (2.0 * eps);
            assert!((fd - g[i]).abs() < 1e-6);
        }
    }
}
