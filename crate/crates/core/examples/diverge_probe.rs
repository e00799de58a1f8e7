// Temporary divergence diagnostic. Not part of the deliverable.
use beamtag_core::collect::Strategy;
use beamtag_core::corpus::{generate_synthetic, SynthSpec};
use beamtag_core::losses::{LossKind, LossOptions};
use beamtag_core::model::{ModelConfig, ModelVariant, Scorer};
use beamtag_core::ndiff::{GradStore, Tape};
use beamtag_core::train::{cosine_lr, rollout_and_loss, RunConfig, UpdateMode};

fn main() {
    let spec = SynthSpec::default();
    let train = generate_synthetic(&spec, 400);
    let cfg = RunConfig::new(
        ModelVariant::Simplified,
        LossKind::LogLossNeighbors,
        Strategy::Continue,
        8,
    );
    let model_cfg = ModelConfig {
        variant: cfg.variant,
        word_dim: cfg.dims.word_dim,
        pos_dim: cfg.dims.pos_dim,
        label_dim: cfg.dims.label_dim,
        hidden_dim: cfg.dims.hidden_dim,
        word_count: spec.vocab_size + 1,
        pos_count: 1,
        label_count: spec.label_count(),
    };
    let mut scorer = Scorer::new(model_cfg, 1);
    let mut grads = GradStore::new_like(scorer.params());
    let mut tape = Tape::new();
    let total_steps = 16 * train.len();
    for (step, sent) in train.iter().enumerate().take(40) {
        tape.reset();
        let res = rollout_and_loss(
            &scorer,
            &mut tape,
            sent,
            cfg.strategy,
            cfg.loss,
            cfg.k_train,
            cfg.score_mode(),
            UpdateMode::Always,
            &LossOptions::default(),
        );
        let (total, stats) = match res {
            Ok(v) => v,
            Err(e) => {
                println!("update {step}: {e}");
                break;
            }
        };
        tape.backward(total, scorer.params(), &mut grads);
        let mut gmax: f64 = 0.0;
        let mut gname = String::new();
        for pid in scorer.params().ids() {
            for &v in grads.get(pid).data() {
                if v.abs() > gmax {
                    gmax = v.abs();
                    gname = scorer.params().name(pid).to_string();
                }
            }
        }
        let lr = cosine_lr(step, total_steps, cfg.lr_start, cfg.lr_end);
        scorer.params_mut().sgd_step(&grads, lr);
        let mut pmax: f64 = 0.0;
        let mut pname = String::new();
        for pid in scorer.params().ids() {
            for &v in scorer.params().get(pid).data() {
                if v.abs() > pmax {
                    pmax = v.abs();
                    pname = scorer.params().name(pid).to_string();
                }
            }
        }
        println!(
            "update {step}: h={} loss={:.3} |g|max={:.3e} ({gname}) |p|max={:.3e} ({pname})",
            stats.steps, stats.total_loss, gmax, pmax
        );
    }
}
