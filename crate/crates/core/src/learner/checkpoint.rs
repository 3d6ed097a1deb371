//! Binary agent checkpoints.
//!
//! All integers and floats are little-endian:
//!
//! | field          | encoding                                   |
//! |----------------|--------------------------------------------|
//! | magic          | 8 bytes `RNFTCKPT`                         |
//! | version        | `u32`, currently 1                         |
//! | actor          | network block                              |
//! | log-std        | `u32` count, then `f64` values             |
//! | critic         | network block                              |
//! | reward scale   | `f64`                                      |
//! | rng seed       | 32 bytes                                   |
//! | rng stream     | `u64`                                      |
//! | rng word pos   | `u128`                                     |
//!
//! A network block is a `u32` layer-size count, that many `u64` sizes, then
//! the flat `f64` parameters. Optimizer moments, the buffer and pending
//! transitions are not stored; a restored agent continues acting
//! identically but restarts its optimizer.

use std::fs;
use std::path::Path;

use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;

use super::mlp::Mlp;
use super::policy::PolicyModel;
use super::ppo::{PpoAgent, PpoConfig};
use crate::error::{Error, Result};
use crate::market::MarketParams;

pub const MAGIC: &[u8; 8] = b"RNFTCKPT";
pub const VERSION: u32 = 1;

fn put_mlp(out: &mut Vec<u8>, net: &Mlp) {
    out.extend((net.sizes().len() as u32).to_le_bytes());
    for &s in net.sizes() {
        out.extend((s as u64).to_le_bytes());
    }
    for p in net.params() {
        out.extend(p.to_le_bytes());
    }
}

pub fn encode(agent: &PpoAgent) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend(MAGIC);
    out.extend(VERSION.to_le_bytes());
    put_mlp(&mut out, &agent.model.actor);
    out.extend((agent.model.log_std.len() as u32).to_le_bytes());
    for v in &agent.model.log_std {
        out.extend(v.to_le_bytes());
    }
    put_mlp(&mut out, &agent.model.critic);
    out.extend(agent.reward_scale.to_le_bytes());
    out.extend(agent.rng.get_seed());
    out.extend(agent.rng.get_stream().to_le_bytes());
    out.extend(agent.rng.get_word_pos().to_le_bytes());
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.bytes.len() < n {
            return Err(Error::Checkpoint("truncated file".into()));
        }
        let (head, rest) = self.bytes.split_at(n);
        self.bytes = rest;
        Ok(head)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        (0..n).map(|_| self.f64()).collect()
    }

    fn mlp(&mut self) -> Result<Mlp> {
        let layers = self.u32()? as usize;
        if !(2..=64).contains(&layers) {
            return Err(Error::Checkpoint(format!("implausible layer count {layers}")));
        }
        let sizes = (0..layers).map(|_| self.u64().map(|s| s as usize)).collect::<Result<Vec<_>>>()?;
        let count = Mlp::param_count(&sizes);
        if count * 8 > self.bytes.len() {
            return Err(Error::Checkpoint("truncated file".into()));
        }
        let params = self.f64s(count)?;
        Mlp::from_parts(sizes, params).ok_or_else(|| Error::Checkpoint("inconsistent network sizes".into()))
    }
}

pub fn decode(bytes: &[u8], market: MarketParams, config: PpoConfig) -> Result<PpoAgent> {
    config.validate()?;
    let mut r = Reader { bytes };
    if r.take(8)? != MAGIC {
        return Err(Error::Checkpoint("bad magic".into()));
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(Error::Checkpoint(format!("unsupported version {version}")));
    }
    let actor = r.mlp()?;
    let n_std = r.u32()? as usize;
    if n_std != actor.output_len() {
        return Err(Error::Checkpoint("log-std length does not match the actor".into()));
    }
    let log_std = r.f64s(n_std)?;
    let critic = r.mlp()?;
    if critic.input_len() != actor.input_len() || critic.output_len() != 1 {
        return Err(Error::Checkpoint("critic shape does not match the actor".into()));
    }
    let reward_scale = r.f64()?;
    let seed: [u8; 32] = r.take(32)?.try_into().unwrap();
    let stream = r.u64()?;
    let word_pos = u128::from_le_bytes(r.take(16)?.try_into().unwrap());
    if !r.bytes.is_empty() {
        return Err(Error::Checkpoint(format!("{} trailing bytes", r.bytes.len())));
    }
    let mut rng = ChaCha8Rng::from_seed(seed);
    rng.set_stream(stream);
    rng.set_word_pos(word_pos);
    let mut model = PolicyModel { actor, log_std, critic };
    model.clamp_log_std();
    Ok(PpoAgent::from_parts(model, market, config, rng, reward_scale))
}

pub fn save(agent: &PpoAgent, path: &Path) -> Result<()> {
    fs::write(path, encode(agent)).map_err(|e| Error::io(path, e))
}

pub fn load(path: &Path, market: MarketParams, config: PpoConfig) -> Result<PpoAgent> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes, market, config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::Observation;
    use crate::learner::Learner;

    fn agent() -> PpoAgent {
        let config = PpoConfig {
            hidden: 8,
            ..PpoConfig::default()
        };
        PpoAgent::new(4, MarketParams::default(), config, 11).unwrap()
    }

    #[test]
    fn restored_agent_acts_identically() {
        let mut a = agent();
        let obs = Observation {
            features: vec![0.1, 0.2, 0.3, 0.4],
            mask: vec![],
        };
        a.act(&obs);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("agent.ckpt");
        save(&a, &path).unwrap();
        let mut b = load(&path, MarketParams::default(), a.config().clone()).unwrap();
        assert_eq!(a.model(), b.model());
        for _ in 0..20 {
            assert_eq!(a.act(&obs), b.act(&obs));
        }
    }

    #[test]
    fn corrupt_blobs_are_rejected() {
        let a = agent();
        let bytes = encode(&a);
        let load = |b: &[u8]| decode(b, MarketParams::default(), a.config().clone());
        assert!(load(&bytes[..bytes.len() - 1]).is_err());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(load(&bad).is_err());
        let mut extra = bytes.clone();
        extra.push(0);
        assert!(load(&extra).is_err());
        let mut version = bytes;
        version[8] = 9;
        assert!(matches!(load(&version), Err(Error::Checkpoint(_))));
    }
}
