//! Binary checkpoints. Layout, all little-endian:
//!
//! ```text
//! "RPGA" u32 version u64 iteration
//! u64 rng_seed u128 rng_word_pos
//! u32 n  f32[n] params
//! u32 q  f64[q] scores
//! u8 mode u8 optimizer f64 lr u64 batch f64 tau f64 mu f64 init_score
//! u64 h  f64[h] loss_history
//! f64[n] adam_m f64[n] adam_v
//! ```
//!
//! Parameters are stored as f32; the attack keeps them at f32 precision, so
//! a restored state continues the original trajectory exactly.

use std::fs;
use std::path::Path;

use rpga_core::attack::{AttackConfig, AttackState, OptimizerKind, SamplingMode};
use rpga_core::hpcm::GlobalDifficultyTable;
use rpga_core::rng::{CounterRng, RngState};

use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"RPGA";
pub const VERSION: u32 = 1;

pub fn encode(state: &AttackState) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&state.iteration.to_le_bytes());
    let rng = state.rng.state();
    out.extend_from_slice(&rng.seed.to_le_bytes());
    out.extend_from_slice(&rng.word_pos.to_le_bytes());
    out.extend_from_slice(&(state.params.len() as u32).to_le_bytes());
    for p in &state.params {
        out.extend_from_slice(&(*p as f32).to_le_bytes());
    }
    out.extend_from_slice(&(state.table.scores.len() as u32).to_le_bytes());
    for s in &state.table.scores {
        out.extend_from_slice(&s.to_le_bytes());
    }
    let c = &state.config;
    out.push(match c.mode {
        SamplingMode::Eot => 0,
        SamplingMode::Hpcm => 1,
    });
    out.push(match c.optimizer {
        OptimizerKind::Sgd => 0,
        OptimizerKind::Adam { .. } => 1,
    });
    out.extend_from_slice(&c.learning_rate.to_le_bytes());
    out.extend_from_slice(&(c.batch_size as u64).to_le_bytes());
    for v in [c.tau, c.mu, c.init_score] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out.extend_from_slice(&(state.loss_history.len() as u64).to_le_bytes());
    for v in state.loss_history.iter().chain(&state.adam_m).chain(&state.adam_v) {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(Error::Format("checkpoint is truncated".into()));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn array<const N: usize>(&mut self) -> Result<[u8; N]> {
        Ok(self.take(N)?.try_into().expect("length checked"))
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.array()?))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.array()?))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.array()?))
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        (0..n).map(|_| self.f64()).collect()
    }
}

/// Rebuilds a state. Momentum, temperature and the optimizer's constants
/// come from the file; Adam's betas are the fixed defaults.
pub fn decode(bytes: &[u8]) -> Result<AttackState> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(4)? != MAGIC {
        return Err(Error::Format("not an RPGA checkpoint".into()));
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(Error::Format(format!("unsupported checkpoint version {version}")));
    }
    let iteration = r.u64()?;
    let seed = r.u64()?;
    let word_pos = u128::from_le_bytes(r.array()?);
    let n = r.u32()? as usize;
    let params = (0..n)
        .map(|_| Ok(f32::from_le_bytes(r.array()?) as f64))
        .collect::<Result<Vec<_>>>()?;
    let q = r.u32()? as usize;
    let scores = r.f64s(q)?;
    let mode = match r.u8()? {
        0 => SamplingMode::Eot,
        1 => SamplingMode::Hpcm,
        m => return Err(Error::Format(format!("unknown mode tag {m}"))),
    };
    let optimizer = match r.u8()? {
        0 => OptimizerKind::Sgd,
        1 => OptimizerKind::adam(),
        m => return Err(Error::Format(format!("unknown optimizer tag {m}"))),
    };
    let learning_rate = r.f64()?;
    let batch_size = r.u64()? as usize;
    let (tau, mu, init_score) = (r.f64()?, r.f64()?, r.f64()?);
    let h = r.u64()? as usize;
    let loss_history = r.f64s(h)?;
    let adam_m = r.f64s(n)?;
    let adam_v = r.f64s(n)?;
    if r.pos != bytes.len() {
        return Err(Error::Format("trailing bytes after checkpoint".into()));
    }
    if h as u64 != iteration {
        return Err(Error::Format("loss history length disagrees with iteration".into()));
    }
    let config = AttackConfig {
        mode,
        learning_rate,
        batch_size,
        seed,
        tau,
        mu,
        init_score,
        optimizer,
    };
    let table = GlobalDifficultyTable {
        scores,
        mu,
        tau,
        init_value: init_score,
    };
    table.validate()?;
    if !params.iter().all(|p| (0.0..=1.0).contains(p)) {
        return Err(rpga_core::Error::Invalid {
            field: "checkpoint.params".into(),
            reason: "albedo outside [0, 1]".into(),
        }
        .into());
    }
    Ok(AttackState {
        params,
        iteration,
        config,
        rng: CounterRng::from_state(RngState { seed, word_pos }),
        loss_history,
        table,
        adam_m,
        adam_v,
    })
}

pub fn write(path: &Path, state: &AttackState) -> Result<()> {
    fs::write(path, encode(state)).map_err(|e| Error::io(path, e))
}

pub fn read(path: &Path) -> Result<AttackState> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes).map_err(|e| match e {
        Error::Format(m) => Error::Format(format!("{}: {m}", path.display())),
        other => other,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_preserves_state() {
        let cfg = AttackConfig {
            optimizer: OptimizerKind::adam(),
            ..AttackConfig::default()
        };
        let mut s = AttackState::new(&[0.1, 0.7, 0.3], 5, cfg).unwrap();
        s.iteration = 2;
        s.loss_history = vec![0.5, 0.25];
        s.table.scores[3] = 1.5;
        s.adam_m = vec![1e-3, -2e-3, 0.0];
        s.adam_v = vec![1e-6, 4e-6, 0.0];
        s.rng.next_u64();
        let back = decode(&encode(&s)).unwrap();
        assert_eq!(back, s);
        assert_eq!(encode(&back), encode(&s));
    }

    #[test]
    fn rejects_corruption() {
        let s = AttackState::new(&[0.5], 2, AttackConfig::default()).unwrap();
        let bytes = encode(&s);
        assert!(decode(&bytes[..bytes.len() - 1]).is_err());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(decode(&bad).is_err());
        let mut extra = bytes;
        extra.push(0);
        assert!(decode(&extra).is_err());
    }
}
