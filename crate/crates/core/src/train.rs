//! The training meta-algorithm: collect a beam trajectory with the
//! chosen strategy, induce a surrogate loss at every expanded beam,
//! and update parameters with the gradient of the summed losses — SGD
//! with batch size one under a per-update cosine learning-rate
//! schedule. Also hosts beam-search decoding and accuracy evaluation.

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::beam::{self, Beam, TraceRecord};
use crate::collect::{self, Strategy};
use crate::corpus::Sentence;
use crate::losses::{self, LossKind, LossOptions};
use crate::model::{HypothesisState, ModelConfig, ModelVariant, ScoreMode, Scorer};
use crate::ndiff::{GradStore, NodeId, Tape};
use crate::search::LabelId;
use crate::{Error, Result};

/// Which visited beams contribute a loss term.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UpdateMode {
    /// Every expanded beam incurs a loss.
    Always,
    /// Only beams whose score-induced successor raises the cost.
    OnCostIncrease,
}

impl UpdateMode {
    pub fn as_str(self) -> &'static str {
        match self {
            UpdateMode::Always => "always",
            UpdateMode::OnCostIncrease => "on_cost_increase",
        }
    }

    pub fn parse(s: &str) -> Option<UpdateMode> {
        match s {
            "always" => Some(UpdateMode::Always),
            "on_cost_increase" => Some(UpdateMode::OnCostIncrease),
            _ => None,
        }
    }
}

/// Model dimensions carried by a run configuration.
#[derive(Clone, Copy, Debug)]
pub struct Dims {
    pub word_dim: usize,
    pub pos_dim: usize,
    pub label_dim: usize,
    pub hidden_dim: usize,
}

impl Default for Dims {
    fn default() -> Self {
        Dims {
            word_dim: 16,
            pos_dim: 4,
            label_dim: 16,
            hidden_dim: 32,
        }
    }
}

/// One experiment cell.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub variant: ModelVariant,
    pub loss: LossKind,
    pub strategy: Strategy,
    pub k_train: usize,
    pub k_eval: Vec<usize>,
    pub accumulate: bool,
    pub stop_prefix_gradient: bool,
    pub update_mode: UpdateMode,
    pub epochs: usize,
    pub lr_start: f64,
    pub lr_end: f64,
    pub seed: u64,
    pub loss_opts: LossOptions,
    pub dims: Dims,
}

impl RunConfig {
    pub fn new(variant: ModelVariant, loss: LossKind, strategy: Strategy, k_train: usize) -> Self {
        RunConfig {
            variant,
            loss,
            strategy,
            k_train,
            k_eval: vec![k_train],
            accumulate: true,
            stop_prefix_gradient: false,
            update_mode: UpdateMode::Always,
            epochs: 16,
            lr_start: 1e-1,
            lr_end: 1e-5,
            seed: 1,
            loss_opts: LossOptions::default(),
            dims: Dims::default(),
        }
    }

    pub fn score_mode(&self) -> ScoreMode {
        ScoreMode {
            accumulate: self.accumulate,
            stop_prefix_gradient: self.stop_prefix_gradient,
        }
    }
}

/// Counters from one training rollout.
#[derive(Clone, Copy, Debug, Default)]
pub struct RolloutStats {
    /// Beams expanded (= loss opportunities).
    pub steps: usize,
    /// Loss terms actually included in the objective.
    pub losses_included: usize,
    /// Steps whose score-induced successor raised the cost.
    pub cost_increases: usize,
    /// True when `Stop` truncated the trajectory.
    pub halted: bool,
    /// Value of the summed included losses.
    pub total_loss: f64,
}

/// Collects one training trajectory and builds the per-example loss
/// node. Starting from the root singleton beam: expand, score, rank,
/// evaluate the surrogate loss, then step via the collection strategy.
/// The loss at a beam enters the objective according to the update
/// mode; `Stop` may truncate the trajectory (its halting expansion
/// still incurs the loss — the violation is the training signal).
pub fn rollout_and_loss(
    scorer: &Scorer,
    tape: &mut Tape,
    sent: &Sentence,
    strategy: Strategy,
    loss_kind: LossKind,
    k: usize,
    mode: ScoreMode,
    update_mode: UpdateMode,
    loss_opts: &LossOptions,
) -> Result<(NodeId, RolloutStats)> {
    let h = sent.len();
    let label_count = scorer.config().label_count;
    let contexts = scorer.encode_sentence(tape, sent);
    let mut beam = Beam::root(k);
    let mut states: Vec<HypothesisState> = vec![scorer.initial_state(tape)];
    let mut loss_nodes: Vec<NodeId> = Vec::with_capacity(h);
    let mut stats = RolloutStats::default();

    for step in 0..h {
        let mut ns = beam::expand(&beam, &sent.labels, label_count);
        let mut score_values = Vec::with_capacity(ns.len());
        let mut score_nodes = Vec::with_capacity(ns.len());
        for state in &states {
            let scored = scorer.score_neighbors(tape, contexts[step], state, mode);
            score_values.extend(scored.values);
            score_nodes.extend(scored.nodes);
        }
        ns.set_scores(score_values);
        ns.rank().map_err(|e| {
            Error::Numeric(format!("step {step}: {e} (diverging parameters?)"))
        })?;

        let eval = losses::evaluate(loss_kind, ns.scores(), ns.costs(), k, loss_opts);
        let outcome = collect::next_beam(strategy, &ns, k);
        stats.steps += 1;
        stats.cost_increases += usize::from(outcome.cost_increased);
        let include = match update_mode {
            UpdateMode::Always => true,
            UpdateMode::OnCostIncrease => outcome.cost_increased,
        };
        if include {
            loss_nodes.push(tape.custom_scalar(eval.value, &score_nodes, &eval.grad));
            stats.losses_included += 1;
            stats.total_loss += eval.value;
        }

        if outcome.halt {
            stats.halted = true;
            break;
        }
        beam = outcome.next_beam.expect("non-halting step yields a beam");
        if step + 1 < h {
            states = outcome
                .chosen
                .iter()
                .map(|&i| {
                    scorer.advance_state(
                        tape,
                        &states[ns.parent_index(i)],
                        ns.label(i),
                        score_nodes[i],
                    )
                })
                .collect();
        }
    }

    let total = tape.sum_scalars(&loss_nodes);
    Ok((total, stats))
}

/// Cosine learning-rate schedule over the whole run, from `lr_start`
/// at the first update to `lr_end` at the last.
pub fn cosine_lr(step: usize, total_steps: usize, lr_start: f64, lr_end: f64) -> f64 {
    if total_steps < 2 {
        return lr_start;
    }
    assert!(step < total_steps, "step index out of schedule range");
    let t = step as f64 / (total_steps - 1) as f64;
    lr_end + 0.5 * (lr_start - lr_end) * (1.0 + (std::f64::consts::PI * t).cos())
}

/// Beam-search decoding: `h` continue-steps from the root, returning
/// the labels of the highest-scoring terminal hypothesis. Completion
/// costs are tracked for diagnostics but never influence the choice,
/// so decoding is independent of the sentence's gold labels.
pub fn decode(scorer: &Scorer, tape: &mut Tape, sent: &Sentence, k: usize, mode: ScoreMode) -> Vec<LabelId> {
    let (labels, _) = decode_inner(scorer, tape, sent, k, mode, false);
    labels
}

/// Decoding with per-transition trace records.
pub fn decode_traced(
    scorer: &Scorer,
    tape: &mut Tape,
    sent: &Sentence,
    k: usize,
    mode: ScoreMode,
) -> (Vec<LabelId>, Vec<TraceRecord>) {
    decode_inner(scorer, tape, sent, k, mode, true)
}

fn decode_inner(
    scorer: &Scorer,
    tape: &mut Tape,
    sent: &Sentence,
    k: usize,
    mode: ScoreMode,
    trace: bool,
) -> (Vec<LabelId>, Vec<TraceRecord>) {
    let h = sent.len();
    let label_count = scorer.config().label_count;
    let contexts = scorer.encode_sentence(tape, sent);
    let mut beam = Beam::root(k);
    let mut states: Vec<HypothesisState> = vec![scorer.initial_state(tape)];
    let mut records = Vec::new();

    for step in 0..h {
        let mut ns = beam::expand(&beam, &sent.labels, label_count);
        let mut score_values = Vec::with_capacity(ns.len());
        let mut score_nodes = Vec::with_capacity(ns.len());
        for state in &states {
            let scored = scorer.score_neighbors(tape, contexts[step], state, mode);
            score_values.extend(scored.values);
            score_nodes.extend(scored.nodes);
        }
        ns.set_scores(score_values);
        ns.rank().expect("finite scores during decode");
        let next = ns.successor_from_scores(k);
        if trace {
            let sigma_hat = ns.sigma_hat();
            let gold_item = ns.sigma_star()[0];
            let gold_rank = sigma_hat.iter().position(|&i| i == gold_item).unwrap() + 1;
            records.push(TraceRecord {
                step,
                beam_cost: beam.cost(),
                transition_cost: beam::transition_cost(&beam, &next),
                gold_in_beam: next.contains_gold(),
                top_score: ns.scores()[sigma_hat[0]],
                gold_rank,
            });
        }
        if step + 1 < h {
            states = ns.sigma_hat()[..k.min(ns.len())]
                .iter()
                .map(|&i| {
                    scorer.advance_state(
                        tape,
                        &states[ns.parent_index(i)],
                        ns.label(i),
                        score_nodes[i],
                    )
                })
                .collect();
        }
        beam = next;
    }
    (beam.members()[0].labels(), records)
}

/// Token-level accuracy over (prediction, gold) pairs.
pub fn accuracy<'a>(pairs: impl IntoIterator<Item = (&'a [LabelId], &'a [LabelId])>) -> f64 {
    let mut hits = 0usize;
    let mut total = 0usize;
    for (pred, gold) in pairs {
        assert_eq!(pred.len(), gold.len());
        hits += pred.iter().zip(gold).filter(|(p, g)| p == g).count();
        total += gold.len();
    }
    if total == 0 {
        return 0.0;
    }
    hits as f64 / total as f64
}

/// Decodes a corpus and measures token accuracy.
pub fn evaluate_accuracy(scorer: &Scorer, sents: &[Sentence], k: usize, mode: ScoreMode) -> f64 {
    let mut tape = Tape::new();
    let preds: Vec<Vec<LabelId>> = sents
        .iter()
        .map(|s| {
            tape.reset();
            decode(scorer, &mut tape, s, k, mode)
        })
        .collect();
    accuracy(
        preds
            .iter()
            .map(Vec::as_slice)
            .zip(sents.iter().map(|s| s.labels.as_slice())),
    )
}

/// Per-epoch bookkeeping.
#[derive(Clone, Debug)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_acc: f64,
    pub dev_acc: f64,
    pub lr_last: f64,
    pub seconds: f64,
}

/// Everything a finished run reports.
#[derive(Clone, Debug)]
pub struct RunResult {
    pub epochs: Vec<EpochStats>,
    pub best_epoch: usize,
    pub best_dev_acc: f64,
    /// Dev accuracy of the best checkpoint decoded at each `k_eval`.
    pub eval_k_accs: Vec<(usize, f64)>,
    pub wall_seconds: f64,
}

/// A finished run: its report plus the best scorer by dev accuracy.
pub struct TrainOutcome {
    pub result: RunResult,
    pub best: Scorer,
}

/// Metrics-log rows for a run: `run_id,epoch,train_acc,dev_acc,lr_last,seconds`.
pub fn metrics_csv(run_id: &str, result: &RunResult) -> String {
    let mut out = String::from("run_id,epoch,train_acc,dev_acc,lr_last,seconds\n");
    for e in &result.epochs {
        out.push_str(&format!(
            "{},{},{:.6},{:.6},{:e},{:.3}\n",
            run_id, e.epoch, e.train_acc, e.dev_acc, e.lr_last, e.seconds
        ));
    }
    out
}

/// Trains one configuration: seeded shuffles, one SGD step per
/// example, per-update cosine learning rate over `epochs * |train|`
/// steps, dev evaluation (decoding with `k_train` under continue)
/// after each epoch, best checkpoint kept by dev accuracy.
pub fn train_run(
    cfg: &RunConfig,
    train: &[Sentence],
    dev: &[Sentence],
    word_count: usize,
    pos_count: usize,
    label_count: usize,
) -> Result<TrainOutcome> {
    assert!(!train.is_empty() && !dev.is_empty(), "empty corpus");
    let started = Instant::now();
    let model_cfg = ModelConfig {
        variant: cfg.variant,
        word_dim: cfg.dims.word_dim,
        pos_dim: cfg.dims.pos_dim,
        label_dim: cfg.dims.label_dim,
        hidden_dim: cfg.dims.hidden_dim,
        word_count,
        pos_count,
        label_count,
    };
    let mut scorer = Scorer::new(model_cfg, cfg.seed);
    let mut grads = GradStore::new_like(scorer.params());
    let mut tape = Tape::new();
    let mode = cfg.score_mode();

    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    shuffle_rng.set_stream(1); // separate stream from parameter init

    let total_steps = cfg.epochs * train.len();
    let mut step = 0usize;
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut epochs = Vec::with_capacity(cfg.epochs);
    let mut best: Option<(f64, usize, Scorer)> = None;

    for epoch in 0..cfg.epochs {
        let epoch_started = Instant::now();
        order.shuffle(&mut shuffle_rng);
        let mut lr_last = cfg.lr_start;
        for &idx in &order {
            tape.reset();
            let (total, stats) = rollout_and_loss(
                &scorer,
                &mut tape,
                &train[idx],
                cfg.strategy,
                cfg.loss,
                cfg.k_train,
                mode,
                cfg.update_mode,
                &cfg.loss_opts,
            )
            .map_err(|e| {
                Error::Numeric(format!(
                    "epoch {epoch}, example {idx}, update {step}: {e}"
                ))
            })?;
            if !stats.total_loss.is_finite() {
                return Err(Error::Numeric(format!(
                    "non-finite loss {} at epoch {epoch}, example {idx}, update {step} \
                     ({} {} {} k={})",
                    stats.total_loss, cfg.variant, cfg.loss, cfg.strategy, cfg.k_train
                )));
            }
            tape.backward(total, scorer.params(), &mut grads);
            lr_last = cosine_lr(step, total_steps, cfg.lr_start, cfg.lr_end);
            scorer.params_mut().sgd_step(&grads, lr_last);
            step += 1;
        }
        let train_acc = evaluate_accuracy(&scorer, train, cfg.k_train, mode);
        let dev_acc = evaluate_accuracy(&scorer, dev, cfg.k_train, mode);
        if best.as_ref().map_or(true, |(b, _, _)| dev_acc > *b) {
            best = Some((dev_acc, epoch, scorer.clone()));
        }
        epochs.push(EpochStats {
            epoch,
            train_acc,
            dev_acc,
            lr_last,
            seconds: epoch_started.elapsed().as_secs_f64(),
        });
    }

    let (best_dev_acc, best_epoch, best_scorer) = best.expect("at least one epoch ran");
    let eval_k_accs = cfg
        .k_eval
        .iter()
        .map(|&k| (k, evaluate_accuracy(&best_scorer, dev, k, mode)))
        .collect();

    Ok(TrainOutcome {
        result: RunResult {
            epochs,
            best_epoch,
            best_dev_acc,
            eval_k_accs,
            wall_seconds: started.elapsed().as_secs_f64(),
        },
        best: best_scorer,
    })
}
