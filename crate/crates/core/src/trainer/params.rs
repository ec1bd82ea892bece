use std::fs;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

const CHECKPOINT_MAGIC: &[u8; 8] = b"CVCKPT01";

/// Word vectors, context vectors, their biases, and the per-coordinate
/// squared-gradient accumulators. Matrices are row-major `vocab_len x dims`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParameters {
    vocab_len: usize,
    dims: usize,
    pub word: Vec<f64>,
    pub context: Vec<f64>,
    pub word_bias: Vec<f64>,
    pub context_bias: Vec<f64>,
    pub word_acc: Vec<f64>,
    pub context_acc: Vec<f64>,
    pub word_bias_acc: Vec<f64>,
    pub context_bias_acc: Vec<f64>,
}

impl ModelParameters {
    pub fn zeros(vocab_len: usize, dims: usize) -> Self {
        let n = vocab_len * dims;
        ModelParameters {
            vocab_len,
            dims,
            word: vec![0.0; n],
            context: vec![0.0; n],
            word_bias: vec![0.0; vocab_len],
            context_bias: vec![0.0; vocab_len],
            word_acc: vec![1.0; n],
            context_acc: vec![1.0; n],
            word_bias_acc: vec![1.0; vocab_len],
            context_bias_acc: vec![1.0; vocab_len],
        }
    }

    /// Vectors and biases uniform in `[-0.5/dims, 0.5/dims)`; accumulators at 1.
    pub fn random(vocab_len: usize, dims: usize, seed: u64) -> Self {
        let mut params = Self::zeros(vocab_len, dims);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let scale = 0.5 / dims as f64;
        for buf in [
            &mut params.word,
            &mut params.context,
            &mut params.word_bias,
            &mut params.context_bias,
        ] {
            for v in buf.iter_mut() {
                *v = rng.gen_range(-scale..scale);
            }
        }
        params
    }

    pub fn vocab_len(&self) -> usize {
        self.vocab_len
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    /// `2 * V * D + 2 * V`: both vector matrices and both bias vectors.
    pub fn parameter_count(&self) -> usize {
        2 * self.vocab_len * self.dims + 2 * self.vocab_len
    }

    pub fn word_row(&self, i: usize) -> &[f64] {
        &self.word[i * self.dims..(i + 1) * self.dims]
    }

    pub fn context_row(&self, j: usize) -> &[f64] {
        &self.context[j * self.dims..(j + 1) * self.dims]
    }

    pub fn word_row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.word[i * self.dims..(i + 1) * self.dims]
    }

    pub fn context_row_mut(&mut self, j: usize) -> &mut [f64] {
        &mut self.context[j * self.dims..(j + 1) * self.dims]
    }

    pub fn all_finite(&self) -> bool {
        self.buffers().iter().all(|b| b.iter().all(|v| v.is_finite()))
    }

    fn buffers(&self) -> [&Vec<f64>; 8] {
        [
            &self.word,
            &self.context,
            &self.word_bias,
            &self.context_bias,
            &self.word_acc,
            &self.context_acc,
            &self.word_bias_acc,
            &self.context_bias_acc,
        ]
    }

    fn buffers_mut(&mut self) -> [&mut Vec<f64>; 8] {
        [
            &mut self.word,
            &mut self.context,
            &mut self.word_bias,
            &mut self.context_bias,
            &mut self.word_acc,
            &mut self.context_acc,
            &mut self.word_bias_acc,
            &mut self.context_bias_acc,
        ]
    }

    /// Final representation of every word: `(w_i + c_i) / 2`, row-major.
    pub fn export(&self) -> Vec<f64> {
        self.word
            .iter()
            .zip(&self.context)
            .map(|(w, c)| (w + c) / 2.0)
            .collect()
    }

    /// Binary checkpoint: magic, 32-byte config hash, `V` and `D` as u64, then
    /// the eight parameter buffers as little-endian doubles.
    pub fn write_checkpoint<W: Write>(&self, config_hash: &[u8; 32], mut out: W) -> std::io::Result<()> {
        out.write_all(CHECKPOINT_MAGIC)?;
        out.write_all(config_hash)?;
        out.write_all(&(self.vocab_len as u64).to_le_bytes())?;
        out.write_all(&(self.dims as u64).to_le_bytes())?;
        for buf in self.buffers() {
            for v in buf {
                out.write_all(&v.to_le_bytes())?;
            }
        }
        out.flush()
    }

    pub fn read_checkpoint<R: Read>(mut input: R) -> std::io::Result<(Self, [u8; 32])> {
        let bad = |m: &str| std::io::Error::new(std::io::ErrorKind::InvalidData, m.to_owned());
        let mut magic = [0u8; 8];
        input.read_exact(&mut magic)?;
        if &magic != CHECKPOINT_MAGIC {
            return Err(bad("not a checkpoint file"));
        }
        let mut hash = [0u8; 32];
        input.read_exact(&mut hash)?;
        let mut word = [0u8; 8];
        input.read_exact(&mut word)?;
        let vocab_len = u64::from_le_bytes(word) as usize;
        input.read_exact(&mut word)?;
        let dims = u64::from_le_bytes(word) as usize;
        let mut params = Self::zeros(vocab_len, dims);
        for buf in params.buffers_mut() {
            for v in buf.iter_mut() {
                input.read_exact(&mut word)?;
                *v = f64::from_le_bytes(word);
            }
        }
        let mut rest = [0u8; 1];
        if input.read(&mut rest)? != 0 {
            return Err(bad("trailing bytes after checkpoint"));
        }
        Ok((params, hash))
    }

    pub fn save_checkpoint(&self, path: impl AsRef<Path>, config_hash: &[u8; 32]) -> Result<()> {
        let path = path.as_ref();
        let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_checkpoint(config_hash, BufWriter::new(file))
            .map_err(|e| Error::io(path, e))
    }

    pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<(Self, [u8; 32])> {
        let path = path.as_ref();
        let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_checkpoint(BufReader::new(file)).map_err(|e| Error::io(path, e))
    }
}
