//! Binary checkpoint container.
//!
//! Little-endian layout:
//!
//! ```text
//! magic      8 bytes  "TPSFCKPT"
//! version    u32      currently 1
//! iteration  u64
//! activation u8       0 = softplus, 1 = identity
//! beta       f64
//! width      u64
//! depth      u64
//! skip       i64      -1 when absent
//! layers     u64, then per layer: out u64, in u64, weight f64[out*in], bias f64[out]
//! adam       u8       0 = absent; else beta1 f64, beta2 f64, eps f64, steps u64,
//!                     first moments (per layer weight+bias), second moments
//! transform  u8       0 = absent; else scale f64, translation f64[3]
//! ```

use std::io::{Read, Write};
use std::path::Path;

use super::adam::{AdamConfig, AdamState};
use super::mlp::{Activation, Layer, MlpParams, ParamGrads};
use crate::io::NormalizationTransform;
use crate::{Error, Result, Vec3};

const MAGIC: &[u8; 8] = b"TPSFCKPT";
const VERSION: u32 = 1;

/// Everything needed to resume training or extract a surface.
#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub params: MlpParams,
    pub adam: Option<AdamState>,
    pub iteration: u64,
    /// Maps normalized coordinates back to the input frame.
    pub transform: Option<NormalizationTransform>,
}

impl Checkpoint {
    pub fn new(params: MlpParams) -> Self {
        Checkpoint {
            params,
            adam: None,
            iteration: 0,
            transform: None,
        }
    }
}

struct Writer<W: Write>(W);

impl<W: Write> Writer<W> {
    fn u8(&mut self, v: u8) -> Result<()> {
        Ok(self.0.write_all(&[v])?)
    }
    fn u32(&mut self, v: u32) -> Result<()> {
        Ok(self.0.write_all(&v.to_le_bytes())?)
    }
    fn u64(&mut self, v: u64) -> Result<()> {
        Ok(self.0.write_all(&v.to_le_bytes())?)
    }
    fn i64(&mut self, v: i64) -> Result<()> {
        Ok(self.0.write_all(&v.to_le_bytes())?)
    }
    fn f64(&mut self, v: f64) -> Result<()> {
        Ok(self.0.write_all(&v.to_le_bytes())?)
    }
    fn f64s(&mut self, v: &[f64]) -> Result<()> {
        v.iter().try_for_each(|&x| self.f64(x))
    }
    fn grads(&mut self, g: &ParamGrads) -> Result<()> {
        for (w, b) in g.weights.iter().zip(&g.biases) {
            self.f64s(w)?;
            self.f64s(b)?;
        }
        Ok(())
    }
}

struct Reader<R: Read>(R);

impl<R: Read> Reader<R> {
    fn bytes<const N: usize>(&mut self) -> Result<[u8; N]> {
        let mut buf = [0u8; N];
        self.0
            .read_exact(&mut buf)
            .map_err(|e| Error::Checkpoint(format!("truncated checkpoint: {e}")))?;
        Ok(buf)
    }
    fn u8(&mut self) -> Result<u8> {
        Ok(self.bytes::<1>()?[0])
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.bytes()?))
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.bytes()?))
    }
    fn i64(&mut self) -> Result<i64> {
        Ok(i64::from_le_bytes(self.bytes()?))
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.bytes()?))
    }
    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        (0..n).map(|_| self.f64()).collect()
    }
    fn dim(&mut self) -> Result<usize> {
        let v = self.u64()?;
        if v > 1 << 24 {
            return Err(Error::Checkpoint(format!("implausible dimension {v}")));
        }
        Ok(v as usize)
    }
    fn grads(&mut self, params: &MlpParams) -> Result<ParamGrads> {
        let mut g = ParamGrads::zeros_like(params);
        for (w, b) in g.weights.iter_mut().zip(g.biases.iter_mut()) {
            *w = self.f64s(w.len())?;
            *b = self.f64s(b.len())?;
        }
        Ok(g)
    }
}

/// Serializes a checkpoint to any writer.
pub fn write_checkpoint<W: Write>(ckpt: &Checkpoint, out: W) -> Result<()> {
    let mut w = Writer(out);
    w.0.write_all(MAGIC)?;
    w.u32(VERSION)?;
    w.u64(ckpt.iteration)?;
    let p = &ckpt.params;
    match p.activation {
        Activation::Softplus { beta } => {
            w.u8(0)?;
            w.f64(beta)?;
        }
        Activation::Identity => {
            w.u8(1)?;
            w.f64(0.0)?;
        }
    }
    w.u64(p.hidden_width as u64)?;
    w.u64(p.hidden_depth as u64)?;
    w.i64(p.skip_layer.map_or(-1, |k| k as i64))?;
    w.u64(p.layers.len() as u64)?;
    for layer in &p.layers {
        w.u64(layer.out_dim as u64)?;
        w.u64(layer.in_dim as u64)?;
        w.f64s(&layer.weight)?;
        w.f64s(&layer.bias)?;
    }
    match &ckpt.adam {
        None => w.u8(0)?,
        Some(state) => {
            w.u8(1)?;
            w.f64(state.config.beta1)?;
            w.f64(state.config.beta2)?;
            w.f64(state.config.eps)?;
            w.u64(state.step_count)?;
            w.grads(&state.first_moment)?;
            w.grads(&state.second_moment)?;
        }
    }
    match &ckpt.transform {
        None => w.u8(0)?,
        Some(t) => {
            w.u8(1)?;
            w.f64(t.scale)?;
            w.f64s(t.translation.as_slice())?;
        }
    }
    w.0.flush()?;
    Ok(())
}

/// Parses a checkpoint, validating the magic, version, and layer chaining.
pub fn read_checkpoint<R: Read>(input: R) -> Result<Checkpoint> {
    let mut r = Reader(input);
    if &r.bytes::<8>()? != MAGIC {
        return Err(Error::Checkpoint("not a checkpoint file (bad magic)".into()));
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(Error::Checkpoint(format!("unsupported checkpoint version {version}")));
    }
    let iteration = r.u64()?;
    let tag = r.u8()?;
    let beta = r.f64()?;
    let activation = match tag {
        0 => Activation::Softplus { beta },
        1 => Activation::Identity,
        t => return Err(Error::Checkpoint(format!("unknown activation tag {t}"))),
    };
    let hidden_width = r.dim()?;
    let hidden_depth = r.dim()?;
    let skip = r.i64()?;
    let n_layers = r.dim()?;
    let mut layers = Vec::with_capacity(n_layers);
    for _ in 0..n_layers {
        let out_dim = r.dim()?;
        let in_dim = r.dim()?;
        let weight = r.f64s(out_dim * in_dim)?;
        let bias = r.f64s(out_dim)?;
        layers.push(Layer {
            out_dim,
            in_dim,
            weight,
            bias,
        });
    }
    let params = MlpParams {
        layers,
        hidden_width,
        hidden_depth,
        activation,
        skip_layer: (skip >= 0).then_some(skip as usize),
    };
    params.validate().map_err(|e| Error::Checkpoint(e.to_string()))?;
    let adam = match r.u8()? {
        0 => None,
        _ => {
            let config = AdamConfig {
                beta1: r.f64()?,
                beta2: r.f64()?,
                eps: r.f64()?,
            };
            let step_count = r.u64()?;
            let first_moment = r.grads(&params)?;
            let second_moment = r.grads(&params)?;
            Some(AdamState {
                first_moment,
                second_moment,
                step_count,
                config,
            })
        }
    };
    let transform = match r.u8()? {
        0 => None,
        _ => {
            let scale = r.f64()?;
            let t = r.f64s(3)?;
            Some(NormalizationTransform {
                scale,
                translation: Vec3::new(t[0], t[1], t[2]),
            })
        }
    };
    Ok(Checkpoint {
        params,
        adam,
        iteration,
        transform,
    })
}

pub fn save_checkpoint(ckpt: &Checkpoint, path: impl AsRef<Path>) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_checkpoint(ckpt, std::io::BufWriter::new(file))
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<Checkpoint> {
    let file = std::fs::File::open(path)?;
    read_checkpoint(std::io::BufReader::new(file))
}
