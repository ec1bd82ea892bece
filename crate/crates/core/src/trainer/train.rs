//! Stochastic gradient descent over cooccurrence records with per-coordinate
//! adaptive step sizes (`lr / sqrt(accumulated squared gradient)`).
//!
//! With one thread every epoch is a deterministic function of the seed. With
//! more, workers share the parameters without locks (Hogwild-style); loads
//! and stores go through relaxed atomics, so concurrent updates to the same
//! row may overwrite each other but never tear a value.

use std::sync::atomic::{AtomicU64, Ordering};

use serde::Serialize;

use crate::cooccur::{shuffle_records, CooccurrenceRecord};
use crate::error::{Error, Result};
use crate::lexicon::ConceptAssignment;
use crate::trainer::objective::evaluate;
use crate::trainer::{ModelParameters, Mode, Objective, TrainerConfig};

#[derive(Debug, Clone, Copy)]
enum Buf {
    Word = 0,
    Context = 1,
    WordBias = 2,
    ContextBias = 3,
    WordAcc = 4,
    ContextAcc = 5,
    WordBiasAcc = 6,
    ContextBiasAcc = 7,
}

trait Store {
    fn read(&self, buf: Buf, start: usize, out: &mut [f64]);
    fn write(&mut self, buf: Buf, start: usize, data: &[f64]);
}

impl ModelParameters {
    fn buf(&self, buf: Buf) -> &[f64] {
        match buf {
            Buf::Word => &self.word,
            Buf::Context => &self.context,
            Buf::WordBias => &self.word_bias,
            Buf::ContextBias => &self.context_bias,
            Buf::WordAcc => &self.word_acc,
            Buf::ContextAcc => &self.context_acc,
            Buf::WordBiasAcc => &self.word_bias_acc,
            Buf::ContextBiasAcc => &self.context_bias_acc,
        }
    }

    fn buf_mut(&mut self, buf: Buf) -> &mut [f64] {
        match buf {
            Buf::Word => &mut self.word,
            Buf::Context => &mut self.context,
            Buf::WordBias => &mut self.word_bias,
            Buf::ContextBias => &mut self.context_bias,
            Buf::WordAcc => &mut self.word_acc,
            Buf::ContextAcc => &mut self.context_acc,
            Buf::WordBiasAcc => &mut self.word_bias_acc,
            Buf::ContextBiasAcc => &mut self.context_bias_acc,
        }
    }
}

impl Store for ModelParameters {
    #[inline]
    fn read(&self, buf: Buf, start: usize, out: &mut [f64]) {
        out.copy_from_slice(&self.buf(buf)[start..start + out.len()]);
    }

    #[inline]
    fn write(&mut self, buf: Buf, start: usize, data: &[f64]) {
        self.buf_mut(buf)[start..start + data.len()].copy_from_slice(data);
    }
}

struct SharedParameters {
    bufs: [Vec<AtomicU64>; 8],
}

impl SharedParameters {
    fn from_params(p: &ModelParameters) -> Self {
        let conv = |b: &[f64]| b.iter().map(|v| AtomicU64::new(v.to_bits())).collect();
        SharedParameters {
            bufs: [
                conv(&p.word),
                conv(&p.context),
                conv(&p.word_bias),
                conv(&p.context_bias),
                conv(&p.word_acc),
                conv(&p.context_acc),
                conv(&p.word_bias_acc),
                conv(&p.context_bias_acc),
            ],
        }
    }

    fn copy_into(&self, p: &mut ModelParameters) {
        for buf in [
            Buf::Word,
            Buf::Context,
            Buf::WordBias,
            Buf::ContextBias,
            Buf::WordAcc,
            Buf::ContextAcc,
            Buf::WordBiasAcc,
            Buf::ContextBiasAcc,
        ] {
            for (dst, src) in p.buf_mut(buf).iter_mut().zip(&self.bufs[buf as usize]) {
                *dst = f64::from_bits(src.load(Ordering::Relaxed));
            }
        }
    }
}

#[derive(Clone, Copy)]
struct SharedView<'a>(&'a SharedParameters);

impl Store for SharedView<'_> {
    #[inline]
    fn read(&self, buf: Buf, start: usize, out: &mut [f64]) {
        for (o, a) in out.iter_mut().zip(&self.0.bufs[buf as usize][start..]) {
            *o = f64::from_bits(a.load(Ordering::Relaxed));
        }
    }

    #[inline]
    fn write(&mut self, buf: Buf, start: usize, data: &[f64]) {
        for (a, v) in self.0.bufs[buf as usize][start..].iter().zip(data) {
            a.store(v.to_bits(), Ordering::Relaxed);
        }
    }
}

struct Scratch {
    w: Vec<f64>,
    c: Vec<f64>,
    w_acc: Vec<f64>,
    c_acc: Vec<f64>,
    gw: Vec<f64>,
    gc: Vec<f64>,
}

impl Scratch {
    fn new(dims: usize) -> Self {
        Scratch {
            w: vec![0.0; dims],
            c: vec![0.0; dims],
            w_acc: vec![0.0; dims],
            c_acc: vec![0.0; dims],
            gw: vec![0.0; dims],
            gc: vec![0.0; dims],
        }
    }
}

struct Stepper<'a> {
    dims: usize,
    objective: Objective,
    assignment: Option<&'a ConceptAssignment>,
    learning_rate: f64,
    clip: Option<f64>,
}

impl Stepper<'_> {
    #[inline]
    fn scaled(&self, grad: f64, acc: f64) -> f64 {
        let update = self.learning_rate * grad / acc.sqrt();
        match self.clip {
            Some(c) => update.clamp(-c, c),
            None => update,
        }
    }

    /// One descent step on one record; returns the record's cost before the step.
    fn step<S: Store>(&self, store: &mut S, rec: &CooccurrenceRecord, s: &mut Scratch) -> f64 {
        let d = self.dims;
        let (i, j) = (rec.i as usize, rec.j as usize);
        store.read(Buf::Word, i * d, &mut s.w);
        store.read(Buf::Context, j * d, &mut s.c);
        store.read(Buf::WordAcc, i * d, &mut s.w_acc);
        store.read(Buf::ContextAcc, j * d, &mut s.c_acc);
        let mut scalars = [0.0; 4];
        store.read(Buf::WordBias, i, &mut scalars[0..1]);
        store.read(Buf::ContextBias, j, &mut scalars[1..2]);
        store.read(Buf::WordBiasAcc, i, &mut scalars[2..3]);
        store.read(Buf::ContextBiasAcc, j, &mut scalars[3..4]);
        let [bw, bc, bw_acc, bc_acc] = scalars;

        let (word_dims, context_dims) = match self.assignment {
            Some(a) => (a.dims_of(i), a.dims_of(j)),
            None => (&[][..], &[][..]),
        };
        let (cost, gb) = evaluate(
            rec.x,
            &s.w,
            &s.c,
            bw,
            bc,
            &self.objective,
            word_dims,
            context_dims,
            Some((&mut s.gw, &mut s.gc)),
        );

        for k in 0..d {
            s.w[k] -= self.scaled(s.gw[k], s.w_acc[k]);
            s.w_acc[k] += s.gw[k] * s.gw[k];
            s.c[k] -= self.scaled(s.gc[k], s.c_acc[k]);
            s.c_acc[k] += s.gc[k] * s.gc[k];
        }
        let new_bias = [
            bw - self.scaled(gb, bw_acc),
            bc - self.scaled(gb, bc_acc),
            bw_acc + gb * gb,
            bc_acc + gb * gb,
        ];

        store.write(Buf::Word, i * d, &s.w);
        store.write(Buf::Context, j * d, &s.c);
        store.write(Buf::WordAcc, i * d, &s.w_acc);
        store.write(Buf::ContextAcc, j * d, &s.c_acc);
        store.write(Buf::WordBias, i, &new_bias[0..1]);
        store.write(Buf::ContextBias, j, &new_bias[1..2]);
        store.write(Buf::WordBiasAcc, i, &new_bias[2..3]);
        store.write(Buf::ContextBiasAcc, j, &new_bias[3..4]);
        cost
    }
}

/// How many parameters exist and how many the anchoring term can reach.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct UpdateAccounting {
    /// `2 * V * D + 2 * V`.
    pub total_parameters: usize,
    /// `V * D`, the size of one vector matrix.
    pub word_vector_parameters: usize,
    pub concept_words: usize,
    /// Sum over words of their group memberships: the word-vector coordinates
    /// the anchoring term acts on.
    pub anchored_coordinates: usize,
    /// Anchored word-vector coordinates whose word occurs as a center in the data.
    pub touched_word_coordinates: usize,
    /// Anchored context-vector coordinates whose word occurs as a context in the data.
    pub touched_context_coordinates: usize,
}

impl UpdateAccounting {
    pub fn new(
        vocab_len: usize,
        dims: usize,
        assignment: Option<&ConceptAssignment>,
        records: &[CooccurrenceRecord],
    ) -> Self {
        let mut accounting = UpdateAccounting {
            total_parameters: 2 * vocab_len * dims + 2 * vocab_len,
            word_vector_parameters: vocab_len * dims,
            concept_words: 0,
            anchored_coordinates: 0,
            touched_word_coordinates: 0,
            touched_context_coordinates: 0,
        };
        let Some(a) = assignment else {
            return accounting;
        };
        accounting.concept_words = (0..a.vocab_len()).filter(|&w| a.is_concept_word(w)).count();
        accounting.anchored_coordinates = a.anchored_coordinates();
        let mut as_center = vec![false; vocab_len];
        let mut as_context = vec![false; vocab_len];
        for r in records {
            as_center[r.i as usize] = true;
            as_context[r.j as usize] = true;
        }
        let touched = |seen: &[bool]| {
            seen.iter()
                .enumerate()
                .filter(|(_, &s)| s)
                .map(|(w, _)| a.dims_of(w).len())
                .sum()
        };
        accounting.touched_word_coordinates = touched(&as_center);
        accounting.touched_context_coordinates = touched(&as_context);
        accounting
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub params: ModelParameters,
    /// Sum of record costs in each epoch, evaluated just before each record's step.
    pub epoch_costs: Vec<f64>,
    pub accounting: UpdateAccounting,
}

/// Seed of the record shuffle for `epoch`.
fn epoch_seed(seed: u64, epoch: usize) -> u64 {
    // splitmix64 finalizer over (seed, epoch)
    let mut z = seed ^ (epoch as u64).wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn train(
    records: &[CooccurrenceRecord],
    vocab_len: usize,
    config: &TrainerConfig,
    assignment: Option<&ConceptAssignment>,
) -> Result<TrainOutcome> {
    config.validate(vocab_len, assignment)?;
    if records.is_empty() {
        return Err(Error::InsufficientData("no cooccurrence records to train on".into()));
    }
    if let Some(r) = records
        .iter()
        .find(|r| r.i as usize >= vocab_len || r.j as usize >= vocab_len || !(r.x > 0.0))
    {
        return Err(Error::Domain(format!(
            "invalid record ({}, {}, {}) for vocabulary of {vocab_len}",
            r.i, r.j, r.x
        )));
    }
    let assignment = match config.mode {
        Mode::Baseline => None,
        Mode::Concept => assignment,
    };
    let accounting = UpdateAccounting::new(vocab_len, config.dims, assignment, records);
    let mut params = ModelParameters::random(vocab_len, config.dims, config.seed);
    let stepper = Stepper {
        dims: config.dims,
        objective: config.objective(),
        assignment,
        learning_rate: config.learning_rate,
        clip: config.update_clip,
    };
    let shared = (config.threads > 1).then(|| SharedParameters::from_params(&params));

    let mut order = records.to_vec();
    let mut epoch_costs = Vec::with_capacity(config.iterations);
    for epoch in 0..config.iterations {
        order.copy_from_slice(records);
        shuffle_records(&mut order, epoch_seed(config.seed, epoch));
        let cost = match &shared {
            None => {
                let mut scratch = Scratch::new(config.dims);
                order
                    .iter()
                    .map(|r| stepper.step(&mut params, r, &mut scratch))
                    .sum()
            }
            Some(shared) => run_parallel(&stepper, shared, &order, config.threads),
        };
        log::info!("epoch {:>3}: cost {cost:.6}", epoch + 1);
        if !cost.is_finite() {
            return Err(Error::Diverged { epoch: epoch + 1, cost });
        }
        epoch_costs.push(cost);
    }
    if let Some(shared) = shared {
        shared.copy_into(&mut params);
    }
    if !params.all_finite() {
        return Err(Error::Diverged {
            epoch: config.iterations,
            cost: f64::NAN,
        });
    }
    Ok(TrainOutcome {
        params,
        epoch_costs,
        accounting,
    })
}

fn run_parallel(
    stepper: &Stepper<'_>,
    shared: &SharedParameters,
    order: &[CooccurrenceRecord],
    threads: usize,
) -> f64 {
    let chunk = order.len().div_ceil(threads);
    std::thread::scope(|scope| {
        let handles: Vec<_> = order
            .chunks(chunk)
            .map(|part| {
                scope.spawn(move || {
                    let mut view = SharedView(shared);
                    let mut scratch = Scratch::new(stepper.dims);
                    part.iter()
                        .map(|r| stepper.step(&mut view, r, &mut scratch))
                        .sum::<f64>()
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("training worker panicked"))
            .sum()
    })
}
