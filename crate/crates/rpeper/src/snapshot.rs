//! Binary buffer snapshots.
//!
//! Little-endian layout:
//!
//! ```text
//! magic "RPEB" | version u32 | capacity u64 | size u64
//! state_dim u32 | action_dim u32 | alpha f64 | beta f64 | epsilon f64
//! size x [state.., action.., reward, next_state.., terminal] as f64
//! size x leaf priority f64
//! write_cursor u64 | max_priority_seen f64 | priority_form u32
//! ```
//!
//! Transitions and leaves are stored in physical slot order. Slot
//! generations are not persisted; a restored buffer starts fresh ones.

use std::fs;
use std::path::Path;

use rpeper_core::replay::{BufferConfig, PriorityForm, PrioritizedBuffer, Transition};

use crate::harness::write_atomic;
use crate::{Error, Result};

pub const MAGIC: &[u8; 4] = b"RPEB";
pub const VERSION: u32 = 1;

const WHAT: &str = "buffer snapshot";

pub fn encode(buffer: &PrioritizedBuffer) -> Vec<u8> {
    let cfg = buffer.config();
    let size = buffer.len();
    let row = 2 * cfg.state_dim + cfg.action_dim + 2;
    let mut out = Vec::with_capacity(64 + size * (row + 1) * 8);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(cfg.capacity as u64).to_le_bytes());
    out.extend_from_slice(&(size as u64).to_le_bytes());
    out.extend_from_slice(&(cfg.state_dim as u32).to_le_bytes());
    out.extend_from_slice(&(cfg.action_dim as u32).to_le_bytes());
    for v in [buffer.alpha(), buffer.beta(), buffer.epsilon()] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    let mut put = |v: f64| out.extend_from_slice(&v.to_le_bytes());
    for slot in 0..size {
        let t = buffer.get(slot).expect("slot below size");
        t.state.iter().for_each(|&v| put(v));
        t.action.iter().for_each(|&v| put(v));
        put(t.reward);
        t.next_state.iter().for_each(|&v| put(v));
        put(if t.terminal { 1.0 } else { 0.0 });
    }
    for &leaf in &buffer.tree().leaves()[..size] {
        put(leaf);
    }
    out.extend_from_slice(&(buffer.write_cursor() as u64).to_le_bytes());
    out.extend_from_slice(&buffer.max_priority_seen().to_le_bytes());
    let form: u32 = match cfg.priority_form {
        PriorityForm::AddEpsilon => 0,
        PriorityForm::Literal => 1,
    };
    out.extend_from_slice(&form.to_le_bytes());
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| Error::format(WHAT, format!("truncated at byte {}", self.pos)))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        (0..n).map(|_| self.f64()).collect()
    }
}

fn to_usize(v: u64, field: &str) -> Result<usize> {
    usize::try_from(v).map_err(|_| Error::format(WHAT, format!("{field} does not fit in memory")))
}

pub fn decode(bytes: &[u8]) -> Result<PrioritizedBuffer> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(4)? != MAGIC {
        return Err(Error::format(WHAT, "bad magic"));
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(Error::format(WHAT, format!("unsupported version {version}")));
    }
    let capacity = to_usize(r.u64()?, "capacity")?;
    let size = to_usize(r.u64()?, "size")?;
    let state_dim = r.u32()? as usize;
    let action_dim = r.u32()? as usize;
    let (alpha, beta, epsilon) = (r.f64()?, r.f64()?, r.f64()?);
    if size > capacity {
        return Err(Error::format(WHAT, "size exceeds capacity"));
    }
    let row = 2 * state_dim + action_dim + 2;
    let expected = size
        .checked_mul(row + 1)
        .and_then(|n| n.checked_mul(8))
        .and_then(|n| n.checked_add(r.pos + 20));
    if expected != Some(bytes.len()) {
        return Err(Error::format(WHAT, "length does not match header"));
    }

    let mut transitions = Vec::with_capacity(size);
    for _ in 0..size {
        let state = r.f64s(state_dim)?;
        let action = r.f64s(action_dim)?;
        let reward = r.f64()?;
        let next_state = r.f64s(state_dim)?;
        let terminal = match r.f64()? {
            0.0 => false,
            1.0 => true,
            _ => return Err(Error::format(WHAT, "terminal flag must be 0 or 1")),
        };
        transitions.push(Transition {
            state,
            action,
            reward,
            next_state,
            terminal,
        });
    }
    let leaves = r.f64s(size)?;
    let cursor = to_usize(r.u64()?, "write cursor")?;
    let max_priority_seen = r.f64()?;
    let priority_form = match r.u32()? {
        0 => PriorityForm::AddEpsilon,
        1 => PriorityForm::Literal,
        other => return Err(Error::format(WHAT, format!("unknown priority form {other}"))),
    };
    let config = BufferConfig {
        capacity,
        state_dim,
        action_dim,
        alpha,
        beta,
        epsilon,
        priority_form,
    };
    Ok(PrioritizedBuffer::restore(config, transitions, leaves, cursor, max_priority_seen)?)
}

pub fn save(buffer: &PrioritizedBuffer, path: &Path) -> Result<()> {
    write_atomic(path, &encode(buffer))
}

pub fn load(path: &Path) -> Result<PrioritizedBuffer> {
    decode(&fs::read(path).map_err(Error::io(path))?)
}
