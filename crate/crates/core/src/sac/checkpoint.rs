//! Two-file checkpoints: a JSON manifest (hyperparameters, counters,
//! temperature state, RNG stream) plus a binary sidecar holding network
//! parameters, optimizer moments, and the replay buffer.
//!
//! A load rebuilds a trainer that continues the run step-for-step
//! identically to one that never stopped.

use super::adam::Adam;
use super::agent::SacAgent;
use super::real::Real;
use super::replay::{ReplayBuffer, Transition};
use super::{SacHyperparameters, Trainer};
use crate::seeds::seeded_rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use thiserror::Error;

const MAGIC: &[u8; 8] = b"SACCKPT1";
const MANIFEST_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("checkpoint I/O failed: {0}")]
    Io(#[from] std::io::Error),
    #[error("checkpoint manifest is not valid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported manifest version {0}")]
    Version(u32),
    #[error("sidecar file does not start with the checkpoint magic")]
    BadMagic,
    #[error("checkpoint stores {stored}-byte scalars but this build uses {expected}-byte")]
    ScalarWidth { stored: u8, expected: u8 },
    #[error("checkpoint data is inconsistent: {0}")]
    Corrupt(String),
}

#[derive(Serialize, Deserialize)]
struct Manifest {
    version: u32,
    scalar_width: u8,
    hp: SacHyperparameters,
    obs_dim: usize,
    act_dim: usize,
    episode: u64,
    updates: u64,
    log_alpha: f64,
    alpha_opt: super::adam::ScalarAdam,
    actor_opt_t: u64,
    q1_opt_t: u64,
    q2_opt_t: u64,
    rng: ChaCha8Rng,
    sidecar: String,
}

/// Sidecar path convention: the manifest path with a `bin` extension.
pub fn sidecar_path(manifest: &Path) -> PathBuf {
    manifest.with_extension("bin")
}

fn write_u64<W: Write>(w: &mut W, v: u64) -> std::io::Result<()> {
    w.write_all(&v.to_le_bytes())
}

fn write_f64<W: Write>(w: &mut W, v: f64) -> std::io::Result<()> {
    w.write_all(&v.to_le_bytes())
}

fn write_scalar<W: Write, R: Real>(w: &mut W, v: R) -> std::io::Result<()> {
    if size_of::<R>() == 4 {
        w.write_all(&(v.to_f64() as f32).to_le_bytes())
    } else {
        w.write_all(&v.to_f64().to_le_bytes())
    }
}

fn read_u64<Rd: Read>(r: &mut Rd) -> std::io::Result<u64> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)?;
    Ok(u64::from_le_bytes(buf))
}

fn read_f64<Rd: Read>(r: &mut Rd) -> std::io::Result<f64> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)?;
    Ok(f64::from_le_bytes(buf))
}

fn read_scalar<Rd: Read, R: Real>(r: &mut Rd) -> std::io::Result<R> {
    if size_of::<R>() == 4 {
        let mut buf = [0u8; 4];
        r.read_exact(&mut buf)?;
        Ok(R::from_f64(f32::from_le_bytes(buf) as f64))
    } else {
        let mut buf = [0u8; 8];
        r.read_exact(&mut buf)?;
        Ok(R::from_f64(f64::from_le_bytes(buf)))
    }
}

fn write_param_block<W: Write>(w: &mut W, flat: &[f64]) -> std::io::Result<()> {
    write_u64(w, flat.len() as u64)?;
    for &v in flat {
        write_f64(w, v)?;
    }
    Ok(())
}

fn read_param_block<Rd: Read>(r: &mut Rd, expected: usize) -> Result<Vec<f64>, CheckpointError> {
    let n = read_u64(r)? as usize;
    if n != expected {
        return Err(CheckpointError::Corrupt(format!(
            "parameter block holds {n} values, network needs {expected}"
        )));
    }
    (0..n).map(|_| Ok(read_f64(r)?)).collect()
}

fn write_adam<W: Write, R: Real>(w: &mut W, opt: &Adam<R>) -> std::io::Result<()> {
    write_u64(w, opt.m.len() as u64)?;
    for &v in &opt.m {
        write_f64(w, v.to_f64())?;
    }
    for &v in &opt.v {
        write_f64(w, v.to_f64())?;
    }
    Ok(())
}

fn read_adam<Rd: Read, R: Real>(
    r: &mut Rd,
    lr: f64,
    t: u64,
    expected: usize,
) -> Result<Adam<R>, CheckpointError> {
    let n = read_u64(r)? as usize;
    if n != expected {
        return Err(CheckpointError::Corrupt(format!(
            "optimizer block holds {n} moments, network needs {expected}"
        )));
    }
    let m = (0..n)
        .map(|_| Ok(R::from_f64(read_f64(r)?)))
        .collect::<Result<Vec<R>, CheckpointError>>()?;
    let v = (0..n)
        .map(|_| Ok(R::from_f64(read_f64(r)?)))
        .collect::<Result<Vec<R>, CheckpointError>>()?;
    Ok(Adam { lr, t, m, v })
}

/// Writes the manifest at `path` and the sidecar next to it.
pub fn save_checkpoint<R: Real>(trainer: &Trainer<R>, path: &Path) -> Result<(), CheckpointError> {
    let sidecar = sidecar_path(path);
    let manifest = Manifest {
        version: MANIFEST_VERSION,
        scalar_width: size_of::<R>() as u8,
        hp: trainer.agent.hp.clone(),
        obs_dim: trainer.agent.obs_dim(),
        act_dim: trainer.agent.act_dim(),
        episode: trainer.episode,
        updates: trainer.updates,
        log_alpha: trainer.agent.log_alpha,
        alpha_opt: trainer.agent.alpha_opt,
        actor_opt_t: trainer.agent.actor_opt.t,
        q1_opt_t: trainer.agent.q1_opt.t,
        q2_opt_t: trainer.agent.q2_opt.t,
        rng: trainer.rng.clone(),
        sidecar: sidecar
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| "checkpoint.bin".into()),
    };
    let manifest_file = File::create(path)?;
    serde_json::to_writer(BufWriter::new(manifest_file), &manifest)?;
    let mut w = BufWriter::new(File::create(&sidecar)?);
    w.write_all(MAGIC)?;
    w.write_all(&[size_of::<R>() as u8])?;
    let agent = &trainer.agent;
    for net in [
        &agent.actor.net,
        &agent.q1,
        &agent.q2,
        &agent.q1_target,
        &agent.q2_target,
    ] {
        write_param_block(&mut w, &net.flatten())?;
    }
    write_adam(&mut w, &agent.actor_opt)?;
    write_adam(&mut w, &agent.q1_opt)?;
    write_adam(&mut w, &agent.q2_opt)?;
    let buf = &trainer.buffer;
    write_u64(&mut w, buf.capacity() as u64)?;
    write_u64(&mut w, buf.len() as u64)?;
    write_u64(&mut w, buf.cursor() as u64)?;
    write_u64(&mut w, agent.obs_dim() as u64)?;
    write_u64(&mut w, agent.act_dim() as u64)?;
    for t in buf.iter() {
        for &v in &t.state {
            write_scalar(&mut w, v)?;
        }
        for &v in &t.action {
            write_scalar(&mut w, v)?;
        }
        write_scalar(&mut w, t.reward)?;
        for &v in &t.next_state {
            write_scalar(&mut w, v)?;
        }
        w.write_all(&[u8::from(t.done)])?;
    }
    w.flush()?;
    Ok(())
}

/// Restores a trainer able to continue the run bit-for-bit.
pub fn load_checkpoint<R: Real>(path: &Path) -> Result<Trainer<R>, CheckpointError> {
    let manifest: Manifest = serde_json::from_reader(BufReader::new(File::open(path)?))?;
    if manifest.version != MANIFEST_VERSION {
        return Err(CheckpointError::Version(manifest.version));
    }
    let expected_width = size_of::<R>() as u8;
    if manifest.scalar_width != expected_width {
        return Err(CheckpointError::ScalarWidth {
            stored: manifest.scalar_width,
            expected: expected_width,
        });
    }
    let sidecar = path
        .parent()
        .map(|p| p.join(&manifest.sidecar))
        .unwrap_or_else(|| PathBuf::from(&manifest.sidecar));
    let mut r = BufReader::new(File::open(&sidecar)?);
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(CheckpointError::BadMagic);
    }
    let mut width = [0u8; 1];
    r.read_exact(&mut width)?;
    if width[0] != expected_width {
        return Err(CheckpointError::ScalarWidth {
            stored: width[0],
            expected: expected_width,
        });
    }
    // Fresh skeleton with the right shapes; every parameter is then
    // overwritten, so the throwaway init stream never matters.
    let mut skeleton_rng = seeded_rng(0, "checkpoint-skeleton");
    let mut agent: SacAgent<R> = SacAgent::new(
        manifest.hp.clone(),
        manifest.obs_dim,
        manifest.act_dim,
        &mut skeleton_rng,
    );
    let actor_count = agent.actor.net.param_count();
    let critic_count = agent.q1.param_count();
    agent
        .actor
        .net
        .load_flat(&read_param_block(&mut r, actor_count)?);
    agent.q1.load_flat(&read_param_block(&mut r, critic_count)?);
    agent.q2.load_flat(&read_param_block(&mut r, critic_count)?);
    agent
        .q1_target
        .load_flat(&read_param_block(&mut r, critic_count)?);
    agent
        .q2_target
        .load_flat(&read_param_block(&mut r, critic_count)?);
    agent.actor_opt = read_adam(&mut r, manifest.hp.lr_actor, manifest.actor_opt_t, actor_count)?;
    agent.q1_opt = read_adam(&mut r, manifest.hp.lr_critic, manifest.q1_opt_t, critic_count)?;
    agent.q2_opt = read_adam(&mut r, manifest.hp.lr_critic, manifest.q2_opt_t, critic_count)?;
    agent.log_alpha = manifest.log_alpha;
    agent.alpha_opt = manifest.alpha_opt;
    let capacity = read_u64(&mut r)? as usize;
    let len = read_u64(&mut r)? as usize;
    let cursor = read_u64(&mut r)? as usize;
    let obs_dim = read_u64(&mut r)? as usize;
    let act_dim = read_u64(&mut r)? as usize;
    if capacity != manifest.hp.buffer_capacity {
        return Err(CheckpointError::Corrupt(format!(
            "replay capacity {capacity} disagrees with configuration {}",
            manifest.hp.buffer_capacity
        )));
    }
    if obs_dim != manifest.obs_dim || act_dim != manifest.act_dim {
        return Err(CheckpointError::Corrupt(format!(
            "replay dims ({obs_dim}, {act_dim}) disagree with manifest ({}, {})",
            manifest.obs_dim, manifest.act_dim
        )));
    }
    if len > capacity || (capacity > 0 && cursor >= capacity) {
        return Err(CheckpointError::Corrupt(format!(
            "replay counters out of range: len {len}, cursor {cursor}, capacity {capacity}"
        )));
    }
    let mut data = Vec::with_capacity(len);
    for _ in 0..len {
        let state = (0..obs_dim)
            .map(|_| read_scalar::<_, R>(&mut r))
            .collect::<std::io::Result<Vec<R>>>()?;
        let action = (0..act_dim)
            .map(|_| read_scalar::<_, R>(&mut r))
            .collect::<std::io::Result<Vec<R>>>()?;
        let reward = read_scalar::<_, R>(&mut r)?;
        let next_state = (0..obs_dim)
            .map(|_| read_scalar::<_, R>(&mut r))
            .collect::<std::io::Result<Vec<R>>>()?;
        let mut done = [0u8; 1];
        r.read_exact(&mut done)?;
        data.push(Transition {
            state,
            action,
            reward,
            next_state,
            done: done[0] != 0,
        });
    }
    let buffer = ReplayBuffer::from_parts(capacity, data, cursor);
    Ok(Trainer {
        agent,
        buffer,
        rng: manifest.rng,
        episode: manifest.episode,
        updates: manifest.updates,
    })
}
