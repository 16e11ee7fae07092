//! Binary checkpoints of both networks, their optimizer state and the prior.
//!
//! Layout, all integers and floats little-endian:
//!
//! ```text
//! magic    8 bytes  "GANLABCK"
//! version  u8       1
//! steps    u64      generator updates done
//! prior    u8 tag   0 = discrete: u64 n, u64 dim, n·dim f64 codes (row-major)
//!                   1 = gaussian: u64 dim
//! net × 2  generator then discriminator:
//!          activation hidden, activation output   (u8 tag, f64 slope)
//!          u64 layer count, then per layer:
//!          u64 inputs, u64 outputs, inputs·outputs f64 weights (row-major),
//!          outputs f64 biases
//! opt × 2  generator then discriminator:
//!          u8 tag   0 = sgd: f64 lr; 1 = adam: f64 alpha, beta1, beta2
//!          u64 step, u64 buffer count, then per buffer u64 len + len f64
//!          (first-moment buffers, then second-moment buffers)
//! ```
//!
//! Activation tags: 0 identity, 1 relu, 2 leaky relu, 3 sigmoid, 4 tanh; the
//! slope is only meaningful for leaky relu and is 0 otherwise.

use std::path::Path;

use ndarray::{Array1, Array2};

use super::net::{Activation, Dense, DenseNet};
use super::optim::{Optimizer, OptimizerKind};
use super::prior::LatentPrior;
use super::train::TrainedGan;
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 8] = b"GANLABCK";
pub const VERSION: u8 = 1;

struct Writer(Vec<u8>);

impl Writer {
    fn u8(&mut self, v: u8) {
        self.0.push(v);
    }

    fn u64(&mut self, v: u64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }

    fn f64(&mut self, v: f64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }

    fn f64s<'a>(&mut self, vs: impl IntoIterator<Item = &'a f64>) {
        for &v in vs {
            self.f64(v);
        }
    }

    fn activation(&mut self, a: Activation) {
        let (tag, slope) = match a {
            Activation::Identity => (0, 0.0),
            Activation::Relu => (1, 0.0),
            Activation::LeakyRelu(s) => (2, s),
            Activation::Sigmoid => (3, 0.0),
            Activation::Tanh => (4, 0.0),
        };
        self.u8(tag);
        self.f64(slope);
    }

    fn net(&mut self, net: &DenseNet) {
        self.activation(net.hidden);
        self.activation(net.output);
        self.u64(net.layers.len() as u64);
        for l in &net.layers {
            self.u64(l.inputs() as u64);
            self.u64(l.outputs() as u64);
            self.f64s(l.weight.iter());
            self.f64s(l.bias.iter());
        }
    }

    fn optimizer(&mut self, opt: &Optimizer) {
        match opt.kind {
            OptimizerKind::Sgd { lr } => {
                self.u8(0);
                self.f64(lr);
            }
            OptimizerKind::Adam { alpha, beta1, beta2 } => {
                self.u8(1);
                self.f64(alpha);
                self.f64(beta1);
                self.f64(beta2);
            }
        }
        self.u64(opt.step);
        self.u64((opt.first.len() + opt.second.len()) as u64);
        for buf in opt.first.iter().chain(&opt.second) {
            self.u64(buf.len() as u64);
            self.f64s(buf);
        }
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

type Parse<T> = std::result::Result<T, String>;

/// Guard against absurd lengths in corrupt files.
const MAX_LEN: u64 = 1 << 32;

impl Reader<'_> {
    fn take(&mut self, n: usize) -> Parse<&[u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| format!("truncated at byte {}", self.pos))?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u8(&mut self) -> Parse<u8> {
        Ok(self.take(1)?[0])
    }

    fn u64(&mut self) -> Parse<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn len(&mut self) -> Parse<usize> {
        let v = self.u64()?;
        if v > MAX_LEN {
            return Err(format!("implausible length {v} at byte {}", self.pos - 8));
        }
        Ok(v as usize)
    }

    fn f64(&mut self) -> Parse<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn f64s(&mut self, n: usize) -> Parse<Vec<f64>> {
        let raw = self.take(n.checked_mul(8).ok_or("length overflow")?)?;
        Ok(raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect())
    }

    fn activation(&mut self) -> Parse<Activation> {
        let tag = self.u8()?;
        let slope = self.f64()?;
        Ok(match tag {
            0 => Activation::Identity,
            1 => Activation::Relu,
            2 => Activation::LeakyRelu(slope),
            3 => Activation::Sigmoid,
            4 => Activation::Tanh,
            t => return Err(format!("unknown activation tag {t}")),
        })
    }

    fn net(&mut self) -> Parse<DenseNet> {
        let hidden = self.activation()?;
        let output = self.activation()?;
        let n = self.len()?;
        let mut layers = Vec::with_capacity(n.min(64));
        for k in 0..n {
            let (i, o) = (self.len()?, self.len()?);
            if let Some(prev) = layers.last().map(Dense::outputs) {
                if prev != i {
                    return Err(format!("layer {k} takes {i} inputs but the previous layer emits {prev}"));
                }
            }
            let weight = Array2::from_shape_vec((i, o), self.f64s(i * o)?).map_err(|e| e.to_string())?;
            let bias = Array1::from(self.f64s(o)?);
            layers.push(Dense { weight, bias });
        }
        if layers.is_empty() {
            return Err("network without layers".into());
        }
        Ok(DenseNet { layers, hidden, output })
    }

    fn optimizer(&mut self) -> Parse<Optimizer> {
        let kind = match self.u8()? {
            0 => OptimizerKind::Sgd { lr: self.f64()? },
            1 => OptimizerKind::Adam { alpha: self.f64()?, beta1: self.f64()?, beta2: self.f64()? },
            t => return Err(format!("unknown optimizer tag {t}")),
        };
        let step = self.u64()?;
        let n = self.len()?;
        if n % 2 != 0 {
            return Err(format!("odd moment buffer count {n}"));
        }
        let mut bufs = Vec::with_capacity(n.min(256));
        for _ in 0..n {
            let len = self.len()?;
            bufs.push(self.f64s(len)?);
        }
        let second = bufs.split_off(n / 2);
        Ok(Optimizer { kind, step, first: bufs, second })
    }

    fn prior(&mut self) -> Parse<LatentPrior> {
        match self.u8()? {
            0 => {
                let (n, dim) = (self.len()?, self.len()?);
                let codes = Array2::from_shape_vec((n, dim), self.f64s(n * dim)?).map_err(|e| e.to_string())?;
                Ok(LatentPrior::DiscreteUniform { codes })
            }
            1 => Ok(LatentPrior::Gaussian { dim: self.len()? }),
            t => Err(format!("unknown prior tag {t}")),
        }
    }
}

pub fn encode(gan: &TrainedGan) -> Vec<u8> {
    let mut w = Writer(Vec::new());
    w.0.extend_from_slice(MAGIC);
    w.u8(VERSION);
    w.u64(gan.steps_done as u64);
    match &gan.prior {
        LatentPrior::DiscreteUniform { codes } => {
            w.u8(0);
            w.u64(codes.nrows() as u64);
            w.u64(codes.ncols() as u64);
            w.f64s(codes.iter());
        }
        LatentPrior::Gaussian { dim } => {
            w.u8(1);
            w.u64(*dim as u64);
        }
    }
    w.net(&gan.generator);
    w.net(&gan.discriminator);
    w.optimizer(&gan.gen_opt);
    w.optimizer(&gan.disc_opt);
    w.0
}

pub fn decode(bytes: &[u8]) -> Parse<TrainedGan> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(MAGIC.len())? != MAGIC {
        return Err("bad magic".into());
    }
    let version = r.u8()?;
    if version != VERSION {
        return Err(format!("unsupported version {version}"));
    }
    let steps_done = r.len()?;
    let prior = r.prior()?;
    let generator = r.net()?;
    let discriminator = r.net()?;
    let gen_opt = r.optimizer()?;
    let disc_opt = r.optimizer()?;
    if r.pos != bytes.len() {
        return Err(format!("{} trailing bytes", bytes.len() - r.pos));
    }
    if generator.input_width() != prior.dim() {
        return Err("generator input width does not match the prior".into());
    }
    if generator.output_width() != discriminator.input_width() {
        return Err("generator output width does not match the discriminator".into());
    }
    Ok(TrainedGan { generator, discriminator, gen_opt, disc_opt, prior, steps_done })
}

pub fn save(path: &Path, gan: &TrainedGan) -> Result<()> {
    std::fs::write(path, encode(gan)).map_err(|e| Error::io(path, e))
}

pub fn load(path: &Path) -> Result<TrainedGan> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes).map_err(|reason| Error::Format { kind: "checkpoint", path: path.to_path_buf(), reason })
}
