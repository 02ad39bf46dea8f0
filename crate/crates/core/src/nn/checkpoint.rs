//! Flat binary checkpoints: magic and version, the architecture, the
//! distance standardization, then every parameter and running statistic as
//! little-endian f64 in the fixed declaration order. Tensor lengths are
//! implied by the architecture, so the byte count is exact; trailing or
//! missing bytes mean a corrupt file.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

use super::{BeamNet, NetConfig};

pub const MAGIC: &[u8; 8] = b"BWEKNET1";
pub const VERSION: u32 = 1;

fn put_u32(buf: &mut Vec<u8>, v: usize) {
    buf.extend_from_slice(&(v as u32).to_le_bytes());
}

fn put_f64(buf: &mut Vec<u8>, v: f64) {
    buf.extend_from_slice(&v.to_le_bytes());
}

pub fn save_checkpoint(net: &BeamNet, path: &Path) -> Result<()> {
    let cfg = &net.cfg;
    let mut buf = Vec::new();
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    put_u32(&mut buf, cfg.input_h);
    put_u32(&mut buf, cfg.input_w);
    put_u32(&mut buf, cfg.kernel);
    put_u32(&mut buf, cfg.conv_channels.len());
    for &c in &cfg.conv_channels {
        put_u32(&mut buf, c);
    }
    put_u32(&mut buf, cfg.fc_dims.len());
    for &d in &cfg.fc_dims {
        put_u32(&mut buf, d);
    }
    put_u32(&mut buf, cfg.attn_dim);
    put_u32(&mut buf, cfg.dist_dim);
    put_u32(&mut buf, cfg.n_beams);
    put_f64(&mut buf, cfg.dropout);
    put_f64(&mut buf, cfg.bn_momentum);
    put_f64(&mut buf, cfg.bn_eps);
    put_f64(&mut buf, net.d_mean);
    put_f64(&mut buf, net.d_std);
    for (_, p) in net.params() {
        for &v in p {
            put_f64(&mut buf, v);
        }
    }
    for s in net.stats() {
        for &v in s {
            put_f64(&mut buf, v);
        }
    }
    fs::write(path, buf).map_err(|e| Error::io(path, e))
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
    path: &'a Path,
}

impl<'a> Reader<'a> {
    fn bad(&self, what: &str) -> Error {
        Error::Dataset(format!(
            "{}: bad checkpoint, {what} at byte {}",
            self.path.display(),
            self.pos
        ))
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(self.bad("truncated"));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<usize> {
        let b = self.take(4)?;
        Ok(u32::from_le_bytes(b.try_into().expect("4 bytes")) as usize)
    }

    fn f64(&mut self) -> Result<f64> {
        let b = self.take(8)?;
        Ok(f64::from_le_bytes(b.try_into().expect("8 bytes")))
    }
}

pub fn load_checkpoint(path: &Path) -> Result<BeamNet> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let mut r = Reader { bytes: &bytes, pos: 0, path };
    if r.take(8)? != MAGIC {
        return Err(Error::Dataset(format!("{}: not a checkpoint file", path.display())));
    }
    let version = r.u32()?;
    if version != VERSION as usize {
        return Err(Error::Dataset(format!(
            "{}: checkpoint version {version}, this build reads {VERSION}",
            path.display()
        )));
    }
    let input_h = r.u32()?;
    let input_w = r.u32()?;
    let kernel = r.u32()?;
    let n_conv = r.u32()?;
    if n_conv > 64 {
        return Err(r.bad("implausible conv depth"));
    }
    let mut conv_channels = Vec::with_capacity(n_conv);
    for _ in 0..n_conv {
        conv_channels.push(r.u32()?);
    }
    let n_fc = r.u32()?;
    if n_fc > 64 {
        return Err(r.bad("implausible dense depth"));
    }
    let mut fc_dims = Vec::with_capacity(n_fc);
    for _ in 0..n_fc {
        fc_dims.push(r.u32()?);
    }
    let cfg = NetConfig {
        input_h,
        input_w,
        conv_channels,
        kernel,
        fc_dims,
        attn_dim: r.u32()?,
        dist_dim: r.u32()?,
        n_beams: r.u32()?,
        dropout: r.f64()?,
        bn_momentum: r.f64()?,
        bn_eps: r.f64()?,
    };
    cfg.validate().map_err(|e| {
        Error::Dataset(format!("{}: checkpoint declares a bad net: {e}", path.display()))
    })?;
    let d_mean = r.f64()?;
    let d_std = r.f64()?;
    if !(d_std > 0.0) {
        return Err(r.bad("non-positive distance spread"));
    }
    let mut net = BeamNet::init(&cfg, 0)?;
    net.d_mean = d_mean;
    net.d_std = d_std;
    for (_, p) in net.params_mut() {
        for v in p.iter_mut() {
            *v = r.f64()?;
        }
    }
    for s in net.stats_mut() {
        for v in s.iter_mut() {
            *v = r.f64()?;
        }
    }
    if r.pos != bytes.len() {
        return Err(Error::Dataset(format!(
            "{}: {} trailing bytes after the checkpoint",
            path.display(),
            bytes.len() - r.pos
        )));
    }
    Ok(net)
}

#[cfg(test)]
mod tests {
    use super::super::tests::{tiny_batch, tiny_cfg};
    use super::super::{forward_eval_batch, forward_train, update_running_stats};
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn trained_net() -> BeamNet {
        let cfg = tiny_cfg();
        let mut net = BeamNet::init(&cfg, 77).unwrap();
        net.d_mean = 62.5;
        net.d_std = 11.25;
        let (xs, ds, labels) = tiny_batch(&cfg, 3, 99);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let cache = forward_train(&net, &xs, &ds, &labels, &mut rng).unwrap();
        update_running_stats(&mut net, &cache);
        net
    }

    #[test]
    fn round_trip_preserves_everything() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("net.ckpt");
        let net = trained_net();
        save_checkpoint(&net, &path).unwrap();
        let loaded = load_checkpoint(&path).unwrap();
        assert_eq!(net, loaded);
        // Same predictions, bit for bit.
        let (xs, ds, _) = tiny_batch(&net.cfg, 2, 3);
        assert_eq!(
            forward_eval_batch(&net, &xs, &ds).unwrap(),
            forward_eval_batch(&loaded, &xs, &ds).unwrap()
        );
    }

    #[test]
    fn corrupt_files_are_refused() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("net.ckpt");
        let net = trained_net();
        save_checkpoint(&net, &path).unwrap();
        let good = std::fs::read(&path).unwrap();

        let bad = &good[..good.len() - 9];
        std::fs::write(&path, bad).unwrap();
        assert!(load_checkpoint(&path).is_err());

        let mut extra = good.clone();
        extra.extend_from_slice(&[0u8; 4]);
        std::fs::write(&path, extra).unwrap();
        assert!(load_checkpoint(&path).is_err());

        let mut wrong_magic = good.clone();
        wrong_magic[0] = b'X';
        std::fs::write(&path, wrong_magic).unwrap();
        assert!(load_checkpoint(&path).is_err());

        let mut wrong_version = good.clone();
        wrong_version[8] = 9;
        std::fs::write(&path, wrong_version).unwrap();
        let err = load_checkpoint(&path).unwrap_err();
        assert!(err.to_string().contains("version"), "{err}");

        assert!(load_checkpoint(&dir.path().join("absent.ckpt")).is_err());
    }
}
