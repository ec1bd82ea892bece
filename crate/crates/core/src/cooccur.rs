//! Symmetric sliding-window cooccurrence counting.
//!
//! Weights are accumulated as exact integers: with inverse-distance weighting a
//! pair at distance `d` contributes `L / d`, where `L = lcm(1..=window)`, and
//! the final `X_ij` is the integer total divided by `L`. Integer sums are
//! associative, so the result is bit-identical for any shard count, exactly
//! symmetric, and scales exactly when the corpus is repeated.

use std::collections::HashMap;
use std::fs;
use std::io::{BufWriter, Read, Write};
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::numfmt::format_significant;

pub const MAX_WINDOW: usize = 64;
/// Size in bytes of one record in the binary shard format.
pub const RECORD_BYTES: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CooccurrenceRecord {
    /// Center word index.
    pub i: u32,
    /// Context word index.
    pub j: u32,
    /// Weighted cooccurrence count, always positive.
    pub x: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Weighting {
    #[default]
    InverseDistance,
    Flat,
}

impl FromStr for Weighting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "inverse-distance" => Ok(Weighting::InverseDistance),
            "flat" => Ok(Weighting::Flat),
            other => Err(Error::Config(format!(
                "unknown weighting `{other}` (expected inverse-distance or flat)"
            ))),
        }
    }
}

impl std::fmt::Display for Weighting {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Weighting::InverseDistance => "inverse-distance",
            Weighting::Flat => "flat",
        })
    }
}

fn gcd(a: u128, b: u128) -> u128 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Per-distance integer weights and their common denominator.
fn distance_weights(window: usize, weighting: Weighting) -> (Vec<u128>, u128) {
    match weighting {
        Weighting::Flat => (vec![1; window + 1], 1),
        Weighting::InverseDistance => {
            let lcm = (1..=window as u128).fold(1u128, |acc, d| acc / gcd(acc, d) * d);
            let weights = (0..=window as u128)
                .map(|d| if d == 0 { 0 } else { lcm / d })
                .collect();
            (weights, lcm)
        }
    }
}

fn pair_key(i: u32, j: u32) -> u64 {
    (u64::from(i) << 32) | u64::from(j)
}

/// Counts cooccurrences in a single pass.
pub fn count_cooccurrences(
    tokens: &[Option<u32>],
    window: usize,
    weighting: Weighting,
) -> Result<Vec<CooccurrenceRecord>> {
    count_cooccurrences_sharded(tokens, window, weighting, 1)
}

/// Counts cooccurrences with the token positions split into `shards`
/// contiguous ranges processed in parallel. Each shard owns the pairs whose
/// left member falls in its range and reads up to `window` tokens past it.
///
/// Tokens that are `None` (out of vocabulary) never form pairs but still
/// occupy a position when measuring distance. The output is sorted by `(i, j)`.
pub fn count_cooccurrences_sharded(
    tokens: &[Option<u32>],
    window: usize,
    weighting: Weighting,
    shards: usize,
) -> Result<Vec<CooccurrenceRecord>> {
    if window == 0 || window > MAX_WINDOW {
        return Err(Error::Config(format!(
            "window must be in 1..={MAX_WINDOW}, got {window}"
        )));
    }
    let (weights, denom) = distance_weights(window, weighting);
    let n = tokens.len();
    let shards = shards.clamp(1, n.max(1));
    let bounds: Vec<(usize, usize)> = (0..shards)
        .map(|s| (s * n / shards, (s + 1) * n / shards))
        .collect();

    let partials: Vec<HashMap<u64, u128>> = bounds
        .into_par_iter()
        .map(|(start, end)| {
            let mut acc: HashMap<u64, u128> = HashMap::new();
            for p in start..end {
                let Some(a) = tokens[p] else { continue };
                for d in 1..=window {
                    let Some(&Some(b)) = tokens.get(p + d) else {
                        continue;
                    };
                    *acc.entry(pair_key(a, b)).or_default() += weights[d];
                    *acc.entry(pair_key(b, a)).or_default() += weights[d];
                }
            }
            acc
        })
        .collect();

    let mut iter = partials.into_iter();
    let mut total = iter.next().unwrap_or_default();
    for part in iter {
        for (k, v) in part {
            *total.entry(k).or_default() += v;
        }
    }
    let mut keyed: Vec<(u64, u128)> = total.into_iter().collect();
    keyed.sort_unstable_by_key(|&(k, _)| k);
    let denom = denom as f64;
    Ok(keyed
        .into_iter()
        .map(|(k, v)| CooccurrenceRecord {
            i: (k >> 32) as u32,
            j: k as u32,
            x: v as f64 / denom,
        })
        .collect())
}

/// Permutes records in place; the permutation depends only on `seed` and the
/// record count.
pub fn shuffle_records(records: &mut [CooccurrenceRecord], seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    records.shuffle(&mut rng);
}

pub fn write_binary<W: Write>(records: &[CooccurrenceRecord], mut out: W) -> std::io::Result<()> {
    for r in records {
        out.write_all(&r.i.to_le_bytes())?;
        out.write_all(&r.j.to_le_bytes())?;
        out.write_all(&r.x.to_le_bytes())?;
    }
    out.flush()
}

pub fn read_binary<R: Read>(mut input: R) -> std::io::Result<Vec<CooccurrenceRecord>> {
    let mut bytes = Vec::new();
    input.read_to_end(&mut bytes)?;
    if bytes.len() % RECORD_BYTES != 0 {
        return Err(std::io::Error::new(
            std::io::ErrorKind::InvalidData,
            format!("length {} is not a multiple of {RECORD_BYTES}", bytes.len()),
        ));
    }
    Ok(bytes
        .chunks_exact(RECORD_BYTES)
        .map(|c| CooccurrenceRecord {
            i: u32::from_le_bytes(c[0..4].try_into().unwrap()),
            j: u32::from_le_bytes(c[4..8].try_into().unwrap()),
            x: f64::from_le_bytes(c[8..16].try_into().unwrap()),
        })
        .collect())
}

/// One `i j x` line per record, `x` printed with 17 significant digits.
pub fn write_text<W: Write>(records: &[CooccurrenceRecord], mut out: W) -> std::io::Result<()> {
    for r in records {
        writeln!(out, "{} {} {}", r.i, r.j, format_significant(r.x, 17))?;
    }
    out.flush()
}

pub fn save_binary(path: impl AsRef<Path>, records: &[CooccurrenceRecord]) -> Result<()> {
    let path = path.as_ref();
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_binary(records, BufWriter::new(file)).map_err(|e| Error::io(path, e))
}

pub fn save_text(path: impl AsRef<Path>, records: &[CooccurrenceRecord]) -> Result<()> {
    let path = path.as_ref();
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_text(records, BufWriter::new(file)).map_err(|e| Error::io(path, e))
}

pub fn load_binary(path: impl AsRef<Path>) -> Result<Vec<CooccurrenceRecord>> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_binary(std::io::BufReader::new(file)).map_err(|e| Error::io(path, e))
}
