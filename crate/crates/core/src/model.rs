//! The two incremental scoring models.
//!
//! Both models score the labels available at one position from a
//! per-position context vector and a label-prefix LSTM ("LM") state:
//!
//! - the **main** model encodes the sentence once with a bi-directional
//!   LSTM over concatenated word+POS embeddings and combines the two
//!   directions per position (dimension-preserving linear maps, added,
//!   ReLU);
//! - the **simplified** model has no encoder: the context at position
//!   `t` is just the concatenated embeddings at `t`, so it must lean
//!   on the beam to manage uncertainty.
//!
//! A second combiner merges context and LM state and a final affine
//! layer produces one score per label. Each hypothesis carries its LM
//! state, so expanding a beam costs one cell step per surviving member
//! instead of re-consuming the whole prefix.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::Sentence;
use crate::ndiff::{
    embedding_table, glorot, lstm_cell_params, lstm_step, LstmParams, LstmState, NodeId, ParamId,
    ParamSet, Tape, Tensor,
};
use crate::search::LabelId;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModelVariant {
    Main,
    Simplified,
}

impl ModelVariant {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelVariant::Main => "main",
            ModelVariant::Simplified => "simplified",
        }
    }

    pub fn parse(s: &str) -> Option<ModelVariant> {
        match s {
            "main" => Some(ModelVariant::Main),
            "simplified" => Some(ModelVariant::Simplified),
            _ => None,
        }
    }
}

impl std::fmt::Display for ModelVariant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Model dimensions and vocabulary sizes. Desk-scale defaults; the
/// full-scale dimensions (64/16/64 embeddings, 256 hidden) are a
/// config choice away.
#[derive(Clone, Copy, Debug)]
pub struct ModelConfig {
    pub variant: ModelVariant,
    pub word_dim: usize,
    pub pos_dim: usize,
    pub label_dim: usize,
    pub hidden_dim: usize,
    pub word_count: usize,
    pub pos_count: usize,
    pub label_count: usize,
}

impl ModelConfig {
    pub fn desk_default(
        variant: ModelVariant,
        word_count: usize,
        pos_count: usize,
        label_count: usize,
    ) -> Self {
        ModelConfig {
            variant,
            word_dim: 16,
            pos_dim: 4,
            label_dim: 16,
            hidden_dim: 32,
            word_count,
            pos_count,
            label_count,
        }
    }

    fn context_dim(&self) -> usize {
        match self.variant {
            ModelVariant::Main => self.hidden_dim,
            ModelVariant::Simplified => self.word_dim + self.pos_dim,
        }
    }
}

/// How neighbor scores are produced.
#[derive(Clone, Copy, Debug)]
pub struct ScoreMode {
    /// Hypothesis score = running sum of incremental scores (on) or
    /// the last increment alone (off).
    pub accumulate: bool,
    /// Ablation: keep the accumulated value but cut the gradient path
    /// into earlier increments.
    pub stop_prefix_gradient: bool,
}

impl Default for ScoreMode {
    fn default() -> Self {
        ScoreMode {
            accumulate: true,
            stop_prefix_gradient: false,
        }
    }
}

#[derive(Clone, Copy)]
struct EncoderWires {
    fwd: LstmParams,
    bwd: LstmParams,
    comb_fwd: ParamId,
    comb_bwd: ParamId,
    comb_bias: ParamId,
}

#[derive(Clone, Copy)]
struct Wires {
    word_emb: ParamId,
    pos_emb: ParamId,
    label_emb: ParamId,
    encoder: Option<EncoderWires>,
    lm: LstmParams,
    comb_ctx: ParamId,
    comb_lm: ParamId,
    comb_bias: ParamId,
    out_w: ParamId,
    out_b: ParamId,
}

/// Per-hypothesis model state: the LM state after consuming the label
/// prefix and the node holding the hypothesis score.
#[derive(Clone, Copy, Debug)]
pub struct HypothesisState {
    pub lm: LstmState,
    pub score_node: Option<NodeId>,
    pub depth: usize,
}

/// Scores of all labels from one parent hypothesis.
pub struct NeighborScores {
    /// The incremental score vector node (length = label count).
    pub increments: NodeId,
    /// Per-label hypothesis score nodes (accumulated when requested).
    pub nodes: Vec<NodeId>,
    /// Values of `nodes`.
    pub values: Vec<f64>,
}

/// A scoring model: parameters plus the wiring to drive a tape.
#[derive(Clone)]
pub struct Scorer {
    cfg: ModelConfig,
    params: ParamSet,
    wires: Wires,
}

/// Reserved LM input row used before the first label is consumed.
fn bos_row(label_count: usize) -> usize {
    label_count
}

fn build_wires(cfg: &ModelConfig, params: &mut ParamSet, rng: &mut ChaCha8Rng) -> Wires {
    let word_emb = params.add("word_emb", embedding_table(cfg.word_count, cfg.word_dim, rng));
    let pos_emb = params.add("pos_emb", embedding_table(cfg.pos_count, cfg.pos_dim, rng));
    // +1 row: begin-of-sequence input for the LM
    let label_emb = params.add(
        "label_emb",
        embedding_table(cfg.label_count + 1, cfg.label_dim, rng),
    );
    let input_dim = cfg.word_dim + cfg.pos_dim;
    let encoder = match cfg.variant {
        ModelVariant::Main => Some(EncoderWires {
            fwd: lstm_cell_params(params, "enc.fwd", input_dim, cfg.hidden_dim, rng),
            bwd: lstm_cell_params(params, "enc.bwd", input_dim, cfg.hidden_dim, rng),
            comb_fwd: params.add("enc.comb.wf", glorot(cfg.hidden_dim, cfg.hidden_dim, rng)),
            comb_bwd: params.add("enc.comb.wb", glorot(cfg.hidden_dim, cfg.hidden_dim, rng)),
            comb_bias: params.add("enc.comb.b", Tensor::zeros(vec![cfg.hidden_dim])),
        }),
        ModelVariant::Simplified => None,
    };
    let lm = lstm_cell_params(params, "lm", cfg.label_dim, cfg.hidden_dim, rng);
    let ctx_dim = cfg.context_dim();
    Wires {
        word_emb,
        pos_emb,
        label_emb,
        encoder,
        lm,
        comb_ctx: params.add("comb2.wc", glorot(cfg.hidden_dim, ctx_dim, rng)),
        comb_lm: params.add("comb2.wl", glorot(cfg.hidden_dim, cfg.hidden_dim, rng)),
        comb_bias: params.add("comb2.b", Tensor::zeros(vec![cfg.hidden_dim])),
        out_w: params.add("out.w", glorot(cfg.label_count, cfg.hidden_dim, rng)),
        out_b: params.add("out.b", Tensor::zeros(vec![cfg.label_count])),
    }
}

impl Scorer {
    /// Fresh parameters from the configuration and seed.
    pub fn new(cfg: ModelConfig, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = ParamSet::new();
        let wires = build_wires(&cfg, &mut params, &mut rng);
        Scorer { cfg, params, wires }
    }

    /// Rebinds a scorer around a parameter set loaded from a
    /// checkpoint, recovering dimensions from tensor shapes and the
    /// variant from the metadata tag.
    pub fn from_checkpoint(params: ParamSet, meta: &[(String, String)]) -> Result<Self> {
        let variant = meta
            .iter()
            .find(|(k, _)| k == "variant")
            .and_then(|(_, v)| ModelVariant::parse(v))
            .ok_or_else(|| Error::Data("checkpoint lacks a model variant tag".to_string()))?;
        let shape_of = |name: &str| -> Result<Vec<usize>> {
            let id = params
                .id(name)
                .ok_or_else(|| Error::Data(format!("checkpoint lacks parameter {name:?}")))?;
            Ok(params.get(id).shape().to_vec())
        };
        let word = shape_of("word_emb")?;
        let pos = shape_of("pos_emb")?;
        let label = shape_of("label_emb")?;
        let out = shape_of("out.w")?;
        let cfg = ModelConfig {
            variant,
            word_dim: word[1],
            pos_dim: pos[1],
            label_dim: label[1],
            hidden_dim: out[1],
            word_count: word[0],
            pos_count: pos[0],
            label_count: label[0] - 1,
        };
        let bind = |name: &str| -> Result<ParamId> {
            params
                .id(name)
                .ok_or_else(|| Error::Data(format!("checkpoint lacks parameter {name:?}")))
        };
        let lstm = |prefix: &str| -> Result<LstmParams> {
            Ok(LstmParams {
                wx: bind(&format!("{prefix}.wx"))?,
                wh: bind(&format!("{prefix}.wh"))?,
                b: bind(&format!("{prefix}.b"))?,
            })
        };
        let encoder = match variant {
            ModelVariant::Main => Some(EncoderWires {
                fwd: lstm("enc.fwd")?,
                bwd: lstm("enc.bwd")?,
                comb_fwd: bind("enc.comb.wf")?,
                comb_bwd: bind("enc.comb.wb")?,
                comb_bias: bind("enc.comb.b")?,
            }),
            ModelVariant::Simplified => None,
        };
        let wires = Wires {
            word_emb: bind("word_emb")?,
            pos_emb: bind("pos_emb")?,
            label_emb: bind("label_emb")?,
            encoder,
            lm: lstm("lm")?,
            comb_ctx: bind("comb2.wc")?,
            comb_lm: bind("comb2.wl")?,
            comb_bias: bind("comb2.b")?,
            out_w: bind("out.w")?,
            out_b: bind("out.b")?,
        };
        Ok(Scorer { cfg, params, wires })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.cfg
    }

    pub fn params(&self) -> &ParamSet {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamSet {
        &mut self.params
    }

    /// Checkpoint metadata for this model.
    pub fn checkpoint_meta(&self) -> Vec<(String, String)> {
        vec![("variant".to_string(), self.cfg.variant.as_str().to_string())]
    }

    /// Per-position context vectors. The main model runs the encoder;
    /// the simplified model returns raw concatenated embeddings.
    /// Contexts are position-indexed and depth-independent, so one
    /// call per sentence suffices for a whole rollout.
    pub fn encode_sentence(&self, tape: &mut Tape, sent: &Sentence) -> Vec<NodeId> {
        let h = sent.len();
        let inputs: Vec<NodeId> = (0..h)
            .map(|t| {
                let w = tape.embed_lookup(&self.params, self.wires.word_emb, sent.tokens[t]);
                let p = tape.embed_lookup(&self.params, self.wires.pos_emb, sent.pos_tags[t]);
                tape.concat(w, p)
            })
            .collect();
        let enc = match &self.wires.encoder {
            None => return inputs,
            Some(enc) => enc,
        };
        let zero_state = |tape: &mut Tape| LstmState {
            h: tape.zeros(self.cfg.hidden_dim),
            c: tape.zeros(self.cfg.hidden_dim),
        };
        let mut fwd = Vec::with_capacity(h);
        let mut state = zero_state(tape);
        for &x in &inputs {
            state = lstm_step(tape, &self.params, &enc.fwd, x, &state);
            fwd.push(state.h);
        }
        let mut bwd = Vec::with_capacity(h);
        let mut state = zero_state(tape);
        for t in (0..h).rev() {
            state = lstm_step(tape, &self.params, &enc.bwd, inputs[t], &state);
            bwd.push(state.h);
        }
        bwd.reverse();
        (0..h)
            .map(|t| {
                let f = tape.affine(&self.params, enc.comb_fwd, fwd[t], Some(enc.comb_bias));
                let b = tape.affine(&self.params, enc.comb_bwd, bwd[t], None);
                let s = tape.add(f, b);
                tape.relu(s)
            })
            .collect()
    }

    /// State of the root hypothesis: the LM primed with the
    /// begin-of-sequence embedding, no score yet.
    pub fn initial_state(&self, tape: &mut Tape) -> HypothesisState {
        let bos = tape.embed_lookup(
            &self.params,
            self.wires.label_emb,
            bos_row(self.cfg.label_count),
        );
        let zero = LstmState {
            h: tape.zeros(self.cfg.hidden_dim),
            c: tape.zeros(self.cfg.hidden_dim),
        };
        let lm = lstm_step(tape, &self.params, &self.wires.lm, bos, &zero);
        HypothesisState {
            lm,
            score_node: None,
            depth: 0,
        }
    }

    /// Scores every label from one parent hypothesis. With
    /// accumulation on, each neighbor's score node extends the
    /// parent's running sum; otherwise it is the bare increment.
    pub fn score_neighbors(
        &self,
        tape: &mut Tape,
        context: NodeId,
        state: &HypothesisState,
        mode: ScoreMode,
    ) -> NeighborScores {
        let c = tape.affine(&self.params, self.wires.comb_ctx, context, Some(self.wires.comb_bias));
        let l = tape.affine(&self.params, self.wires.comb_lm, state.lm.h, None);
        let merged = tape.add(c, l);
        let hidden = tape.relu(merged);
        let increments = tape.affine(&self.params, self.wires.out_w, hidden, Some(self.wires.out_b));
        let mut nodes = Vec::with_capacity(self.cfg.label_count);
        let mut values = Vec::with_capacity(self.cfg.label_count);
        for label in 0..self.cfg.label_count {
            let inc = tape.select_scalar(increments, label);
            let node = match (mode.accumulate, state.score_node) {
                (true, Some(parent)) => {
                    if mode.stop_prefix_gradient {
                        let parent_value = tape.scalar(parent);
                        tape.add_const(inc, &[parent_value])
                    } else {
                        tape.scalar_accumulate(parent, inc)
                    }
                }
                _ => inc,
            };
            values.push(tape.scalar(node));
            nodes.push(node);
        }
        NeighborScores {
            increments,
            nodes,
            values,
        }
    }

    /// Successor state after committing to `label`: the LM consumes
    /// the label's embedding; the chosen neighbor's score node becomes
    /// the running score.
    pub fn advance_state(
        &self,
        tape: &mut Tape,
        state: &HypothesisState,
        label: LabelId,
        score_node: NodeId,
    ) -> HypothesisState {
        assert!(label < self.cfg.label_count, "label out of range");
        let emb = tape.embed_lookup(&self.params, self.wires.label_emb, label);
        let lm = lstm_step(tape, &self.params, &self.wires.lm, emb, &state.lm);
        HypothesisState {
            lm,
            score_node: Some(score_node),
            depth: state.depth + 1,
        }
    }
}
