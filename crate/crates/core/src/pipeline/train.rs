use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::autodiff::{
    adam_step, clip_grad_norm, cosine_lr, AdamState, Bound, CosineSchedule, Tape, Tensor, Var,
};
use crate::model::{AssocInput, GenerateOptions, Model, MolInput, EOS, PAD};

use super::{
    encode_targets, evaluate, truth_set, Artifacts, PipelineError, PreparedDrug, RunConfig,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    /// Mean teacher-forced loss per target position over the epoch's steps.
    pub train_loss: f64,
    /// Learning rate of the epoch's last step.
    pub lr: f64,
    pub valid_f1: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Parameters of the best validation epoch, or of the last epoch when
    /// there is no validation set.
    pub model: Model,
    pub log: Vec<EpochLog>,
    /// Loss per position at initialization, dropout off.
    pub initial_loss: f64,
    pub best_epoch: usize,
}

struct Item {
    mol: MolInput,
    node: usize,
    labels: Vec<String>,
}

/// Decoder input `BOS l1..ln` and targets `l1..ln EOS` of a full sequence.
fn teacher_pair(seq: &[usize]) -> (&[usize], &[usize]) {
    let n = seq.iter().position(|&t| t == EOS).expect("encoded sequence ends with EOS") - 1;
    (&seq[..n + 1], &seq[1..n + 2])
}

/// Mean cross-entropy over every target position of `batch`.
fn batch_loss(
    model: &Model,
    tape: &mut Tape,
    bound: &Bound,
    assoc: &AssocInput,
    assoc_emb: Var,
    batch: &[(&Item, Vec<usize>)],
) -> Result<(Var, usize), PipelineError> {
    let mut logits = Vec::with_capacity(batch.len());
    let mut targets = Vec::new();
    for (item, seq) in batch {
        let mem = model.memory(tape, bound, &item.mol, assoc, assoc_emb, item.node, true)?;
        let (input, target) = teacher_pair(seq);
        logits.push(model.decoder_forward(tape, bound, input, &mem)?);
        targets.extend_from_slice(target);
    }
    let all = tape.concat_rows(&logits)?;
    Ok((tape.cross_entropy_masked(all, &targets, PAD)?, targets.len()))
}

fn dropout_seed(seed: u64, step: u64) -> u64 {
    seed.wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ step
}

struct ValidItem {
    mol: MolInput,
    graph: Option<(AssocInput, usize)>,
    truth: BTreeSet<usize>,
}

fn validation_f1(model: &Model, items: &[ValidItem], opts: GenerateOptions) -> Result<f64, PipelineError> {
    let mut preds = Vec::with_capacity(items.len());
    let mut truths = Vec::with_capacity(items.len());
    for it in items {
        let pred = match &it.graph {
            Some((g, node)) => {
                let (mem, keep) = model.memory_tensor(&it.mol, g, *node)?;
                model.generate(&mem, &keep, opts)?.into_iter().collect()
            }
            None => BTreeSet::new(),
        };
        preds.push(pred);
        truths.push(it.truth.clone());
    }
    Ok(evaluate(&preds, &truths)?.f1)
}

/// Teacher-forced training with Adam and a cosine schedule. `train` must be
/// the drugs the artifacts were built from.
pub fn train(
    cfg: &RunConfig,
    art: &Artifacts,
    train: &[&PreparedDrug],
    valid: &[&PreparedDrug],
    seed: u64,
) -> Result<TrainOutcome, PipelineError> {
    cfg.validate()?;
    let mut model = Model::new(cfg.model_config(art.codec.n_tokens(), art.vocab.len()), seed)?;
    let assoc = art.train_input()?;
    let nodes = art.assoc.molecule_nodes();
    let items: Vec<Item> = train
        .iter()
        .map(|d| {
            let node = *nodes
                .get(&d.drug_id)
                .ok_or_else(|| PipelineError::UnknownDrug(d.drug_id.clone()))?;
            Ok(Item {
                mol: art.mol_input(&d.features)?,
                node,
                labels: d.labels.clone(),
            })
        })
        .collect::<Result<_, PipelineError>>()?;
    let opts = GenerateOptions {
        max_len: cfg.max_len,
        allow_duplicates: cfg.allow_duplicates,
    };
    let valid_items: Vec<ValidItem> = valid
        .iter()
        .map(|d| {
            let graph = match art.query_graph(&d.corpus)? {
                Some((g, node)) => Some((AssocInput::new(&g)?, node)),
                None => None,
            };
            Ok(ValidItem {
                mol: art.mol_input(&d.features)?,
                graph,
                truth: truth_set(&d.labels, &art.codec, cfg.max_len),
            })
        })
        .collect::<Result<_, PipelineError>>()?;

    let targets_for = |epoch: usize| -> Vec<Vec<usize>> {
        let order = cfg.label_order(epoch as u64);
        items
            .iter()
            .map(|it| encode_targets(&it.labels, &art.codec, cfg.max_len, order))
            .collect()
    };

    // initial loss, dropout off, averaged over positions
    let initial_loss = {
        let seqs = targets_for(0);
        let mut total = 0.0;
        let mut count = 0;
        let idx: Vec<usize> = (0..items.len()).collect();
        for chunk in idx.chunks(cfg.batch_size) {
            let mut tape = Tape::new();
            let bound = model.params.bind_frozen(&mut tape);
            let emb = model.encode_association(&mut tape, &bound, &assoc)?;
            let batch: Vec<(&Item, Vec<usize>)> =
                chunk.iter().map(|&i| (&items[i], seqs[i].clone())).collect();
            let (loss, n) = batch_loss(&model, &mut tape, &bound, &assoc, emb, &batch)?;
            total += tape.value(loss).item() * n as f64;
            count += n;
        }
        total / count as f64
    };
    log::info!("seed {seed}: initial loss {initial_loss:.4}");

    let steps_per_epoch = items.len().div_ceil(cfg.batch_size) as u64;
    let total_steps = steps_per_epoch * cfg.epochs as u64;
    let last_step = total_steps.saturating_sub(1).max(1);
    let schedule = CosineSchedule::new(cfg.lr_max, cfg.lr_min, last_step)?;
    let mut adam = AdamState::new(&model.params);
    let mut best: Option<(f64, usize, Vec<Tensor>)> = None;
    let mut log = Vec::with_capacity(cfg.epochs);
    let mut step = 0u64;
    for epoch in 0..cfg.epochs {
        let seqs = targets_for(epoch);
        let mut order: Vec<usize> = (0..items.len()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(epoch as u64 + 1);
        order.shuffle(&mut rng);
        let (mut sum, mut positions, mut lr) = (0.0, 0usize, cfg.lr_max);
        for chunk in order.chunks(cfg.batch_size) {
            let mut tape = Tape::training(dropout_seed(seed, step));
            let bound = model.params.bind(&mut tape);
            let emb = model.encode_association(&mut tape, &bound, &assoc)?;
            let batch: Vec<(&Item, Vec<usize>)> =
                chunk.iter().map(|&i| (&items[i], seqs[i].clone())).collect();
            let (loss, n) = batch_loss(&model, &mut tape, &bound, &assoc, emb, &batch)?;
            let value = tape.value(loss).item();
            if !value.is_finite() {
                let ids: Vec<&str> = chunk.iter().map(|&i| train[i].drug_id.as_str()).collect();
                let norms: Vec<(String, f64)> = model
                    .params
                    .iter()
                    .map(|(name, t)| (name.to_string(), t.data.iter().map(|x| x * x).sum::<f64>().sqrt()))
                    .filter(|(_, n)| !n.is_finite() || *n > 1e3)
                    .collect();
                log::error!(
                    "non-finite loss: epoch {epoch} step {step} lr {lr} batch {ids:?} suspicious parameter norms {norms:?}"
                );
                return Err(PipelineError::NonFiniteLoss { epoch, step, loss: value });
            }
            let g = tape.backward(loss)?;
            let mut grads: Vec<Tensor> = bound.vars().iter().map(|&v| g.of(v, &tape)).collect();
            if cfg.clip_norm > 0.0 {
                clip_grad_norm(&mut grads, cfg.clip_norm);
            }
            lr = cosine_lr(step.min(last_step), &schedule)?;
            adam_step(&mut model.params, &grads, &mut adam, lr)?;
            sum += value * n as f64;
            positions += n;
            step += 1;
        }
        let valid_f1 = if valid_items.is_empty() {
            None
        } else {
            Some(validation_f1(&model, &valid_items, opts)?)
        };
        let train_loss = sum / positions as f64;
        log::info!("epoch {epoch}: loss {train_loss:.4} lr {lr:.2e} valid F1 {valid_f1:?}");
        if let Some(f1) = valid_f1 {
            if best.as_ref().map_or(true, |(b, _, _)| f1 > *b) {
                best = Some((f1, epoch, model.params.tensors().to_vec()));
            }
        }
        log.push(EpochLog {
            epoch,
            train_loss,
            lr,
            valid_f1,
        });
    }
    let best_epoch = match best {
        Some((_, epoch, tensors)) => {
            model.params.tensors_mut().clone_from_slice(&tensors);
            epoch
        }
        None => cfg.epochs.saturating_sub(1),
    };
    Ok(TrainOutcome {
        model,
        log,
        initial_loss,
        best_epoch,
    })
}

/// Greedy label generation against an immutable model.
pub struct Predictor<'a> {
    pub model: &'a Model,
    pub art: &'a Artifacts,
    pub opts: GenerateOptions,
}

impl<'a> Predictor<'a> {
    pub fn new(model: &'a Model, art: &'a Artifacts, allow_duplicates: bool) -> Self {
        Predictor {
            model,
            art,
            opts: GenerateOptions {
                max_len: model.config.max_len,
                allow_duplicates,
            },
        }
    }

    /// Drugs that are molecule nodes of the training graph.
    pub fn predict_in_graph(&self, drugs: &[&PreparedDrug]) -> Result<Vec<Vec<usize>>, PipelineError> {
        let assoc = self.art.train_input()?;
        let nodes = self.art.assoc.molecule_nodes();
        let mut tape = Tape::new();
        let bound = self.model.params.bind_frozen(&mut tape);
        let emb = self.model.encode_association(&mut tape, &bound, &assoc)?;
        let base = tape.len();
        let mut out = Vec::with_capacity(drugs.len());
        for d in drugs {
            let node = *nodes
                .get(&d.drug_id)
                .ok_or_else(|| PipelineError::UnknownDrug(d.drug_id.clone()))?;
            tape.truncate(base);
            let mol = self.art.mol_input(&d.features)?;
            let m = self.model.memory(&mut tape, &bound, &mol, &assoc, emb, node, true)?;
            let mem = tape.value(m.value).clone();
            out.push(self.model.generate(&mem, &m.keep, self.opts)?);
        }
        Ok(out)
    }

    /// A drug attached on its own to the training graph. Empty when none of
    /// its motifs is in the vocabulary.
    pub fn predict_query(&self, drug: &PreparedDrug) -> Result<Vec<usize>, PipelineError> {
        let Some((g, node)) = self.art.query_graph(&drug.corpus)? else {
            return Ok(Vec::new());
        };
        let mol = self.art.mol_input(&drug.features)?;
        let (mem, keep) = self.model.memory_tensor(&mol, &AssocInput::new(&g)?, node)?;
        Ok(self.model.generate(&mem, &keep, self.opts)?)
    }

    pub fn label_names(&self, ids: &[usize]) -> Vec<String> {
        ids.iter().map(|&i| self.art.codec.token_name(i).to_string()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::BOS;

    #[test]
    fn teacher_pair_shapes() {
        let seq = [BOS, 7, 5, EOS, PAD, PAD];
        let (i, t) = teacher_pair(&seq);
        assert_eq!(i, &[BOS, 7, 5]);
        assert_eq!(t, &[7, 5, EOS]);
        let (i, t) = teacher_pair(&[BOS, EOS]);
        assert_eq!((i, t), (&[BOS][..], &[EOS][..]));
    }
}
