//! Binary checkpoints of a running quantum trajectory.
//!
//! Layout, all little-endian:
//!
//! ```text
//! magic  b"OMCK"            4 bytes
//! version u32               currently 1
//! params  6 × f64           delta0 kappa gamma_m g0 alpha_l p_tilde
//! engine  u8 scheme, f64 dt, u64 renormalize_every, f64 alarm, u8 noise
//! basis   u8 kind (0 fixed, 1 moving), f64 trigger, u8 comoving
//! seed, index, steps, recenterings, jumps   5 × u64
//! last_norm f64, rng word position u128
//! frame   u32 n_a, u32 n_b, 2 × c64 centers, f64 phase, dim × c64 coefficients
//! fnv1a-64 of everything above
//! ```
//!
//! Restoring a checkpoint and stepping on reproduces the uninterrupted run
//! bit for bit.

use std::path::Path;

use crate::engines::{Basis, EngineConfig, Scheme, Trajectory, Workspace};
use crate::error::{Error, Result};
use crate::fock_ops::{HilbertConfig, C64};
use crate::model::SystemParams;
use crate::moving_basis::{FrameState, FrameSystem};

const MAGIC: &[u8; 4] = b"OMCK";
const VERSION: u32 = 1;

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

struct Writer(Vec<u8>);

impl Writer {
    fn u8(&mut self, v: u8) {
        self.0.push(v);
    }
    fn u32(&mut self, v: u32) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn u64(&mut self, v: u64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn u128(&mut self, v: u128) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn f64(&mut self, v: f64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn c64(&mut self, v: C64) {
        self.f64(v.re);
        self.f64(v.im);
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take<const K: usize>(&mut self) -> Result<[u8; K]> {
        let end = self.pos + K;
        if end > self.buf.len() {
            return Err(Error::Format(format!("checkpoint truncated at byte {}", self.pos)));
        }
        let mut out = [0u8; K];
        out.copy_from_slice(&self.buf[self.pos..end]);
        self.pos = end;
        Ok(out)
    }
    fn u8(&mut self) -> Result<u8> {
        Ok(self.take::<1>()?[0])
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take()?))
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take()?))
    }
    fn u128(&mut self) -> Result<u128> {
        Ok(u128::from_le_bytes(self.take()?))
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take()?))
    }
    fn c64(&mut self) -> Result<C64> {
        Ok(C64::new(self.f64()?, self.f64()?))
    }
}

fn scheme_code(s: Scheme) -> u8 {
    match s {
        Scheme::Ito => 0,
        Scheme::StratonovichHeun => 1,
        Scheme::Jump => 2,
    }
}

fn scheme_from(code: u8) -> Result<Scheme> {
    match code {
        0 => Ok(Scheme::Ito),
        1 => Ok(Scheme::StratonovichHeun),
        2 => Ok(Scheme::Jump),
        c => Err(Error::Format(format!("unknown scheme code {c}"))),
    }
}

pub fn encode(traj: &Trajectory) -> Vec<u8> {
    let mut w = Writer(Vec::with_capacity(256 + 16 * traj.frame.coeffs.len()));
    w.0.extend_from_slice(MAGIC);
    w.u32(VERSION);
    let p = traj.params();
    for v in [p.delta0, p.kappa, p.gamma_m, p.g0, p.alpha_l, p.p_tilde] {
        w.f64(v);
    }
    let e = &traj.engine;
    w.u8(scheme_code(e.scheme));
    w.f64(e.dt);
    w.u64(e.renormalize_every as u64);
    w.f64(e.truncation_alarm);
    w.u8(e.noise as u8);
    match traj.basis {
        Basis::Fixed => {
            w.u8(0);
            w.f64(0.0);
            w.u8(0);
        }
        Basis::Moving { trigger, comoving } => {
            w.u8(1);
            w.f64(trigger);
            w.u8(comoving as u8);
        }
    }
    for v in [traj.seed, traj.index, traj.steps, traj.recenterings, traj.jumps] {
        w.u64(v);
    }
    w.f64(traj.last_norm);
    w.u128(traj.rng.get_word_pos());
    let f = &traj.frame;
    w.u32(f.config.n_a as u32);
    w.u32(f.config.n_b as u32);
    w.c64(f.center_a);
    w.c64(f.center_b);
    w.f64(f.phase);
    for &c in &f.coeffs {
        w.c64(c);
    }
    let sum = fnv1a(&w.0);
    w.u64(sum);
    w.0
}

pub fn decode(bytes: &[u8]) -> Result<Trajectory> {
    if bytes.len() < 12 || &bytes[..4] != MAGIC {
        return Err(Error::Format("not a checkpoint file".into()));
    }
    let (body, tail) = bytes.split_at(bytes.len() - 8);
    let stored = u64::from_le_bytes(tail.try_into().unwrap());
    if fnv1a(body) != stored {
        return Err(Error::Format("checkpoint checksum mismatch".into()));
    }
    let mut r = Reader { buf: body, pos: 4 };
    let version = r.u32()?;
    if version != VERSION {
        return Err(Error::Format(format!("unsupported checkpoint version {version}")));
    }
    let params = SystemParams {
        delta0: r.f64()?,
        kappa: r.f64()?,
        gamma_m: r.f64()?,
        g0: r.f64()?,
        alpha_l: r.f64()?,
        p_tilde: r.f64()?,
    };
    let engine = EngineConfig {
        scheme: scheme_from(r.u8()?)?,
        dt: r.f64()?,
        renormalize_every: r.u64()? as usize,
        truncation_alarm: r.f64()?,
        noise: r.u8()? != 0,
    };
    engine.validate()?;
    let kind = r.u8()?;
    let trigger = r.f64()?;
    let comoving = r.u8()? != 0;
    let basis = match kind {
        0 => Basis::Fixed,
        1 => Basis::Moving { trigger, comoving },
        k => return Err(Error::Format(format!("unknown basis code {k}"))),
    };
    let seed = r.u64()?;
    let index = r.u64()?;
    let steps = r.u64()?;
    let recenterings = r.u64()?;
    let jumps = r.u64()?;
    let last_norm = r.f64()?;
    let word_pos = r.u128()?;
    let config = HilbertConfig::new(r.u32()? as usize, r.u32()? as usize)?;
    let center_a = r.c64()?;
    let center_b = r.c64()?;
    let phase = r.f64()?;
    let mut coeffs = Vec::with_capacity(config.dim());
    for _ in 0..config.dim() {
        coeffs.push(r.c64()?);
    }
    if r.pos != body.len() {
        return Err(Error::Format(format!("{} trailing bytes in checkpoint", body.len() - r.pos)));
    }
    let frame = FrameState {
        coeffs,
        center_a,
        center_b,
        phase,
        config,
    };
    let system = FrameSystem::for_frame(params, &frame);
    let ws = Workspace::for_system(&system);
    Ok(Trajectory {
        frame,
        system,
        engine,
        basis,
        rng: crate::rng::resume(seed, index, word_pos),
        seed,
        index,
        steps,
        last_norm,
        recenterings,
        jumps,
        ws,
    })
}

pub fn save(traj: &Trajectory, path: &Path) -> Result<()> {
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, encode(traj))?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

pub fn load(path: &Path) -> Result<Trajectory> {
    decode(&std::fs::read(path)?)
}
