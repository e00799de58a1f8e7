// Temporary speed probe for sizing the acceptance grid. Not part of
// the deliverable surface.
use beamtag_core::corpus::{generate_synthetic, SynthSpec};
use beamtag_core::losses::LossKind;
use beamtag_core::collect::Strategy;
use beamtag_core::model::ModelVariant;
use beamtag_core::train::{train_run, RunConfig};

fn main() {
    let spec = SynthSpec::default();
    let n_train: usize = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(400);
    let k: usize = std::env::args()
        .nth(2)
        .and_then(|s| s.parse().ok())
        .unwrap_or(8);
    let epochs: usize = std::env::args()
        .nth(3)
        .and_then(|s| s.parse().ok())
        .unwrap_or(4);
    let seed: u64 = std::env::args()
        .nth(4)
        .and_then(|s| s.parse().ok())
        .unwrap_or(1);
    let arg = |i: usize| std::env::args().nth(i).and_then(|s| s.parse::<f64>().ok());
    let spec = SynthSpec {
        seq_len: (
            arg(5).map(|v| v as usize).unwrap_or(spec.seq_len.0),
            arg(6).map(|v| v as usize).unwrap_or(spec.seq_len.1),
        ),
        labels_per_token: arg(8).map(|v| v as usize).unwrap_or(spec.labels_per_token),
        num_modes: arg(12).map(|v| v as usize).unwrap_or(spec.num_modes),
        noise_rate: arg(13).unwrap_or(spec.noise_rate),
        reveal_fraction: arg(14).unwrap_or(spec.reveal_fraction),
        ..spec
    };
    let lr_start = arg(7).unwrap_or(1e-1);
    let dev_n = arg(15).map(|v| v as usize).unwrap_or(150);
    let train = generate_synthetic(&spec, n_train);
    let dev = generate_synthetic(
        &SynthSpec {
            seed: spec.seed + 1,
            ..spec.clone()
        },
        dev_n,
    );
    let strategy = std::env::args()
        .nth(9)
        .and_then(|s| Strategy::parse(&s))
        .unwrap_or(Strategy::Continue);
    let loss = std::env::args()
        .nth(10)
        .and_then(|s| LossKind::parse(&s))
        .unwrap_or(LossKind::LogLossNeighbors);
    let accumulate = std::env::args()
        .nth(11)
        .map(|s| s != "off")
        .unwrap_or(true);
    let mut cfg = RunConfig::new(ModelVariant::Simplified, loss, strategy, k);
    cfg.epochs = epochs;
    cfg.seed = seed;
    cfg.lr_start = lr_start;
    cfg.accumulate = accumulate;
    let started = std::time::Instant::now();
    match train_run(&cfg, &train, &dev, spec.vocab_size + 1, 1, spec.label_count()) {
        Ok(out) => {
            let secs = started.elapsed().as_secs_f64();
            println!(
                "seed={} n={} k={} epochs={} total {:.1}s ({:.2}s/epoch), best dev acc {:.4} at epoch {}",
                seed,
                n_train,
                k,
                epochs,
                secs,
                secs / epochs as f64,
                out.result.best_dev_acc,
                out.result.best_epoch
            );
            for e in &out.result.epochs {
                println!(
                    "  epoch {} train {:.4} dev {:.4} lr {:.2e} {:.2}s",
                    e.epoch, e.train_acc, e.dev_acc, e.lr_last, e.seconds
                );
            }
        }
        Err(e) => println!("seed={seed} n={n_train} k={k}: DIVERGED: {e}"),
    }
}
