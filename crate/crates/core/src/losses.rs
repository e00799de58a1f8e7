//! Per-beam surrogate losses.
//!
//! Each loss takes the neighbor score vector `s`, the neighbor cost
//! vector `c`, and the beam capacity `k`, and returns a value together
//! with its subgradient with respect to `s`. All math is in double
//! precision. Conventions shared by all losses:
//!
//! - the score ordering and cost ordering come from
//!   [`beam::score_ranking`] / [`beam::cost_ranking`], so tie-breaking
//!   matches successor-beam formation exactly;
//! - at a hinge boundary (value exactly zero from the max) the
//!   subgradient is the zero vector;
//! - `k` is clamped to the number of neighbors.
//!
//! [`beam::score_ranking`]: crate::beam::score_ranking
//! [`beam::cost_ranking`]: crate::beam::cost_ranking

use crate::beam::{cost_ranking, score_ranking};

/// The six loss kinds, named as they appear in config files.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum LossKind {
    PerceptronFirst,
    PerceptronLast,
    MarginLast,
    CostSensitiveMarginLast,
    LogLossNeighbors,
    LogLossBeam,
}

impl LossKind {
    pub const ALL: [LossKind; 6] = [
        LossKind::PerceptronFirst,
        LossKind::PerceptronLast,
        LossKind::MarginLast,
        LossKind::CostSensitiveMarginLast,
        LossKind::LogLossNeighbors,
        LossKind::LogLossBeam,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            LossKind::PerceptronFirst => "perceptron_first",
            LossKind::PerceptronLast => "perceptron_last",
            LossKind::MarginLast => "margin_last",
            LossKind::CostSensitiveMarginLast => "cost_margin_last",
            LossKind::LogLossNeighbors => "log_neighbors",
            LossKind::LogLossBeam => "log_beam",
        }
    }

    pub fn parse(s: &str) -> Option<LossKind> {
        Self::ALL.iter().copied().find(|k| k.as_str() == s)
    }
}

impl std::fmt::Display for LossKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Value and subgradient of a loss at one beam.
#[derive(Clone, Debug)]
pub struct LossEval {
    pub value: f64,
    /// d(value)/d(s), same length as the score vector. Zero outside
    /// the indices the loss formula touches.
    pub grad: Vec<f64>,
}

/// Toggles that alter loss definitions.
#[derive(Clone, Copy, Debug, Default)]
pub struct LossOptions {
    /// When set, the margin losses select the "last in beam" element
    /// among non-gold neighbors only (some beam-search-optimization
    /// implementations do this). Off by default: the literal formula
    /// compares against the k-th ranked element, gold included.
    pub margin_skip_gold: bool,
}

/// Dispatches to the requested loss.
pub fn evaluate(kind: LossKind, s: &[f64], c: &[u32], k: usize, opts: &LossOptions) -> LossEval {
    match kind {
        LossKind::PerceptronFirst => perceptron_first(s, c, k),
        LossKind::PerceptronLast => perceptron_last(s, c, k),
        LossKind::MarginLast => margin_last(s, c, k, opts),
        LossKind::CostSensitiveMarginLast => cost_margin_last(s, c, k, opts),
        LossKind::LogLossNeighbors => log_loss_neighbors(s, c, k),
        LossKind::LogLossBeam => log_loss_beam(s, c, k),
    }
}

fn check_inputs(s: &[f64], c: &[u32], k: usize) {
    assert!(!s.is_empty(), "loss on an empty neighbor set");
    assert_eq!(s.len(), c.len(), "score/cost length mismatch");
    assert!(k >= 1, "beam capacity must be at least 1");
    assert!(
        s.iter().all(|v| v.is_finite()),
        "non-finite score in loss input"
    );
}

/// Index of the item ranked last among those kept in the beam:
/// `sigma_hat[min(k, n) - 1]`, optionally skipping `gold`.
fn last_in_beam(sigma_hat: &[usize], k: usize, skip: Option<usize>) -> Option<usize> {
    match skip {
        None => Some(sigma_hat[k.min(sigma_hat.len()) - 1]),
        Some(gold) => {
            let filtered: Vec<usize> =
                sigma_hat.iter().copied().filter(|&i| i != gold).collect();
            if filtered.is_empty() {
                None
            } else {
                Some(filtered[k.min(filtered.len()) - 1])
            }
        }
    }
}

fn hinge_pair(s: &[f64], hi: usize, lo: usize, margin: f64, weight: f64) -> LossEval {
    let raw = s[hi] - s[lo] + margin;
    let mut grad = vec![0.0; s.len()];
    if weight == 0.0 {
        return LossEval { value: 0.0, grad };
    }
    let value = weight * raw.max(0.0);
    // Subgradient is zero at the boundary and when both score terms
    // are the same element (they cancel identically).
    if raw > 0.0 && hi != lo {
        grad[hi] += weight;
        grad[lo] -= weight;
    }
    LossEval { value, grad }
}

/// Penalizes not ranking the lowest-cost neighbor first:
/// `max(0, s[σ̂(1)] - s[σ*(1)])`.
pub fn perceptron_first(s: &[f64], c: &[u32], k: usize) -> LossEval {
    check_inputs(s, c, k);
    let sigma_hat = score_ranking(s);
    let sigma_star = cost_ranking(c, s);
    hinge_pair(s, sigma_hat[0], sigma_star[0], 0.0, 1.0)
}

/// Positive exactly when the score-induced successor beam drops the
/// lowest-cost neighbor: `max(0, s[σ̂(k)] - s[σ*(1)])`.
pub fn perceptron_last(s: &[f64], c: &[u32], k: usize) -> LossEval {
    check_inputs(s, c, k);
    let sigma_hat = score_ranking(s);
    let sigma_star = cost_ranking(c, s);
    let last = last_in_beam(&sigma_hat, k, None).expect("nonempty");
    hinge_pair(s, last, sigma_star[0], 0.0, 1.0)
}

/// Margin version of the drop condition:
/// `max(0, s[σ̂(k)] - s[σ*(1)] + 1)`.
pub fn margin_last(s: &[f64], c: &[u32], k: usize, opts: &LossOptions) -> LossEval {
    check_inputs(s, c, k);
    let sigma_hat = score_ranking(s);
    let sigma_star = cost_ranking(c, s);
    let skip = opts.margin_skip_gold.then_some(sigma_star[0]);
    match last_in_beam(&sigma_hat, k, skip) {
        Some(last) => hinge_pair(s, last, sigma_star[0], 1.0, 1.0),
        None => LossEval {
            value: 0.0,
            grad: vec![0.0; s.len()],
        },
    }
}

/// Margin loss weighted by the cost gap of the compared pair:
/// `(c[σ̂(k)] - c[σ*(1)]) · max(0, s[σ̂(k)] - s[σ*(1)] + 1)`. The
/// weight is a constant; no gradient flows through the costs.
pub fn cost_margin_last(s: &[f64], c: &[u32], k: usize, opts: &LossOptions) -> LossEval {
    check_inputs(s, c, k);
    let sigma_hat = score_ranking(s);
    let sigma_star = cost_ranking(c, s);
    let skip = opts.margin_skip_gold.then_some(sigma_star[0]);
    match last_in_beam(&sigma_hat, k, skip) {
        Some(last) => {
            let weight = f64::from(c[last]) - f64::from(c[sigma_star[0]]);
            hinge_pair(s, last, sigma_star[0], 1.0, weight)
        }
        None => LossEval {
            value: 0.0,
            grad: vec![0.0; s.len()],
        },
    }
}

/// Max-shifted log-sum-exp over `values` at the given indices.
fn logsumexp_at(values: &[f64], indices: &[usize]) -> f64 {
    let max = indices
        .iter()
        .map(|&i| values[i])
        .fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = indices.iter().map(|&i| (values[i] - max).exp()).sum();
    max + sum.ln()
}

/// Cross-entropy against the lowest-cost neighbor, normalizing over
/// the full neighbor set: `-s[σ*(1)] + log Σᵢ exp(sᵢ)`. For `k = 1`
/// with a singleton beam this is the usual per-step log loss.
pub fn log_loss_neighbors(s: &[f64], c: &[u32], k: usize) -> LossEval {
    check_inputs(s, c, k);
    let sigma_star = cost_ranking(c, s);
    let all: Vec<usize> = (0..s.len()).collect();
    let lse = logsumexp_at(s, &all);
    let value = -s[sigma_star[0]] + lse;
    let mut grad: Vec<f64> = s.iter().map(|&v| (v - lse).exp()).collect();
    grad[sigma_star[0]] -= 1.0;
    LossEval { value, grad }
}

/// Same cross-entropy but normalizing only over the retained set
/// `I = {σ*(1)} ∪ {σ̂(1..k)}` (duplicates removed).
pub fn log_loss_beam(s: &[f64], c: &[u32], k: usize) -> LossEval {
    check_inputs(s, c, k);
    let sigma_hat = score_ranking(s);
    let sigma_star = cost_ranking(c, s);
    let gold = sigma_star[0];
    let mut included = vec![gold];
    for &i in &sigma_hat[..k.min(sigma_hat.len())] {
        if i != gold {
            included.push(i);
        }
    }
    let lse = logsumexp_at(s, &included);
    let value = -s[gold] + lse;
    let mut grad = vec![0.0; s.len()];
    for &i in &included {
        grad[i] += (s[i] - lse).exp();
    }
    grad[gold] -= 1.0;
    LossEval { value, grad }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    // Running example: s=[3,1,2], c=[1,0,2], k=2.
    const S: [f64; 3] = [3.0, 1.0, 2.0];
    const C: [u32; 3] = [1, 0, 2];
    const K: usize = 2;
    const OPTS: LossOptions = LossOptions {
        margin_skip_gold: false,
    };

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b}");
    }

    #[test]
    fn perceptron_first_example() {
        let e = perceptron_first(&S, &C, K);
        assert_close(e.value, 2.0, 1e-12);
        assert_eq!(e.grad, vec![1.0, -1.0, 0.0]);
    }

    #[test]
    fn perceptron_first_zero_when_gold_on_top() {
        let e = perceptron_first(&[5.0, 1.0], &[0, 1], 1);
        assert_close(e.value, 0.0, 1e-12);
        assert_eq!(e.grad, vec![0.0, 0.0]);
    }

    #[test]
    fn perceptron_last_example() {
        let e = perceptron_last(&S, &C, K);
        assert_close(e.value, 1.0, 1e-12);
        assert_eq!(e.grad, vec![0.0, -1.0, 1.0]);
    }

    #[test]
    fn perceptron_last_with_k1_equals_first() {
        let a = perceptron_first(&S, &C, 1);
        let b = perceptron_last(&S, &C, 1);
        assert_close(a.value, b.value, 1e-15);
        assert_eq!(a.grad, b.grad);
    }

    #[test]
    fn margin_last_example() {
        let e = margin_last(&S, &C, K, &OPTS);
        assert_close(e.value, 2.0, 1e-12);
        assert_eq!(e.grad, vec![0.0, -1.0, 1.0]);
    }

    #[test]
    fn margin_last_degenerate_constant_one() {
        // Gold is exactly the k-th ranked item: terms cancel, value is
        // the structural constant 1, gradient zero.
        let s = [4.0, 1.0];
        let c = [1, 0];
        let e = margin_last(&s, &c, 2, &OPTS);
        assert_close(e.value, 1.0, 1e-12);
        assert_eq!(e.grad, vec![0.0, 0.0]);
    }

    #[test]
    fn margin_last_satisfied_margin() {
        // Gold ahead of the k-th ranked item by more than 1.
        let s = [5.0, 1.0, 0.5];
        let c = [0, 1, 1];
        let e = margin_last(&s, &c, 2, &OPTS);
        assert_close(e.value, 0.0, 1e-12);
        assert_eq!(e.grad, vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn margin_skip_gold_variant() {
        // Gold at the k-th position: skipping it compares against the
        // next non-gold item instead of producing the constant 1.
        let s = [4.0, 1.0, 0.0];
        let c = [1, 0, 2];
        let with_gold = margin_last(&s, &c, 2, &OPTS);
        assert_close(with_gold.value, 1.0, 1e-12);
        assert_eq!(with_gold.grad, vec![0.0, 0.0, 0.0]);
        let skipped = margin_last(
            &s,
            &c,
            2,
            &LossOptions {
                margin_skip_gold: true,
            },
        );
        // non-gold ranking: [0, 2]; last = index 2, s=0 vs gold 1 -> 0
        assert_close(skipped.value, 0.0, 1e-12);
    }

    #[test]
    fn cost_margin_example() {
        let e = cost_margin_last(&S, &C, K, &OPTS);
        assert_close(e.value, 4.0, 1e-12);
        assert_eq!(e.grad, vec![0.0, -2.0, 2.0]);
    }

    #[test]
    fn cost_margin_zero_weight() {
        // k-th item has the same cost as the best: zero regardless of
        // scores.
        let s = [9.0, 1.0];
        let c = [0, 0];
        let e = cost_margin_last(&s, &c, 2, &OPTS);
        assert_close(e.value, 0.0, 1e-12);
        assert_eq!(e.grad, vec![0.0, 0.0]);
    }

    #[test]
    fn log_neighbors_example() {
        let e = log_loss_neighbors(&S, &C, K);
        assert_close(e.value, 2.407606, 1e-4);
    }

    #[test]
    fn log_neighbors_uniform_scores() {
        let s = [0.5, 0.5, 0.5, 0.5];
        let c = [1, 0, 1, 2];
        let e = log_loss_neighbors(&s, &c, 2);
        assert_close(e.value, (4.0f64).ln(), 1e-12);
    }

    #[test]
    fn log_beam_examples() {
        let e1 = log_loss_beam(&S, &C, 1);
        assert_close(e1.value, 2.126928, 1e-4);
        // k=2 covers all of [n]: equals log_loss_neighbors
        let e2 = log_loss_beam(&S, &C, 2);
        let full = log_loss_neighbors(&S, &C, 2);
        assert_close(e2.value, full.value, 1e-12);
        assert_close(e2.value, 2.407606, 1e-4);
    }

    #[test]
    fn log_beam_singleton_normalization() {
        // Gold ranked first with k=1: I = {gold}, value 0.
        let s = [3.0, 1.0];
        let c = [0, 1];
        let e = log_loss_beam(&s, &c, 1);
        assert_close(e.value, 0.0, 1e-12);
    }

    #[test]
    fn k_larger_than_n_is_clamped() {
        for kind in LossKind::ALL {
            let e = evaluate(kind, &S, &C, 10, &OPTS);
            assert!(e.value.is_finite());
        }
    }

    #[test]
    fn kind_names_round_trip() {
        for kind in LossKind::ALL {
            assert_eq!(LossKind::parse(kind.as_str()), Some(kind));
        }
        assert_eq!(LossKind::parse("nonsense"), None);
    }

    /// Central finite differences of `kind` at `(s, c, k)`.
    fn fd_grad(kind: LossKind, s: &[f64], c: &[u32], k: usize) -> Vec<f64> {
        let eps = 1e-6;
        (0..s.len())
            .map(|i| {
                let mut up = s.to_vec();
                up[i] += eps;
                let mut dn = s.to_vec();
                dn[i] -= eps;
                let fu = evaluate(kind, &up, c, k, &OPTS).value;
                let fd = evaluate(kind, &dn, c, k, &OPTS).value;
                (fu - fd) / (2.0 * eps)
            })
            .collect()
    }

    /// Rejects inputs within `gap` of a sorting tie or hinge kink so
    /// finite differences see a locally smooth function.
    fn near_kink(kind: LossKind, s: &[f64], c: &[u32], k: usize, gap: f64) -> bool {
        for i in 0..s.len() {
            for j in i + 1..s.len() {
                if (s[i] - s[j]).abs() < gap {
                    return true;
                }
            }
        }
        let sigma_hat = score_ranking(s);
        let sigma_star = cost_ranking(c, s);
        let last = sigma_hat[k.min(s.len()) - 1];
        let gold = sigma_star[0];
        match kind {
            LossKind::PerceptronFirst => (s[sigma_hat[0]] - s[gold]).abs() < gap,
            LossKind::PerceptronLast => (s[last] - s[gold]).abs() < gap,
            LossKind::MarginLast | LossKind::CostSensitiveMarginLast => {
                (s[last] - s[gold] + 1.0).abs() < gap
            }
            _ => false,
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        use rand::prelude::*;
        use rand_chacha::ChaCha8Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for kind in LossKind::ALL {
            let mut checked = 0;
            while checked < 250 {
                let n = rng.random_range(1..=12usize);
                let k = rng.random_range(1..=6usize);
                let s: Vec<f64> = (0..n).map(|_| rng.random_range(-4.0..4.0)).collect();
                let c: Vec<u32> = (0..n).map(|_| rng.random_range(0..4u32)).collect();
                if near_kink(kind, &s, &c, k, 1e-4) {
                    continue;
                }
                let analytic = evaluate(kind, &s, &c, k, &OPTS).grad;
                let numeric = fd_grad(kind, &s, &c, k);
                for (a, f) in analytic.iter().zip(&numeric) {
                    let denom = a.abs().max(f.abs()).max(1.0);
                    assert!(
                        (a - f).abs() / denom < 1e-4,
                        "{kind}: analytic {a} vs fd {f} (s={s:?}, c={c:?}, k={k})"
                    );
                }
                checked += 1;
            }
        }
    }

    proptest! {
        #[test]
        fn losses_are_non_negative(
            s in proptest::collection::vec(-20.0f64..20.0, 1..16),
            c in proptest::collection::vec(0u32..5, 1..16),
            k in 1usize..8,
        ) {
            let n = s.len().min(c.len());
            for kind in LossKind::ALL {
                let e = evaluate(kind, &s[..n], &c[..n], k, &OPTS);
                prop_assert!(e.value >= -1e-12, "{kind}: {}", e.value);
            }
        }

        #[test]
        fn value_invariant_under_joint_permutation(
            s in proptest::collection::vec(-5.0f64..5.0, 2..10),
            c in proptest::collection::vec(0u32..5, 2..10),
            k in 1usize..5,
            rot in 1usize..9,
        ) {
            let n = s.len().min(c.len());
            let (s, c) = (&s[..n], &c[..n]);
            // Skip score ties: permuting tied entries can change
            // index-based tie-breaks by design.
            for i in 0..n {
                for j in i + 1..n {
                    prop_assume!((s[i] - s[j]).abs() > 1e-9);
                }
            }
            let rot = rot % n;
            let mut s2 = s.to_vec();
            let mut c2 = c.to_vec();
            s2.rotate_left(rot);
            c2.rotate_left(rot);
            for kind in LossKind::ALL {
                let a = evaluate(kind, s, c, k, &OPTS).value;
                let b = evaluate(kind, &s2, &c2, k, &OPTS).value;
                prop_assert!((a - b).abs() < 1e-9, "{kind}: {a} vs {b}");
            }
        }

        #[test]
        fn log_beam_never_exceeds_log_neighbors(
            s in proptest::collection::vec(-10.0f64..10.0, 1..16),
            c in proptest::collection::vec(0u32..5, 1..16),
            k in 1usize..8,
        ) {
            let n = s.len().min(c.len());
            let beam = log_loss_beam(&s[..n], &c[..n], k);
            let full = log_loss_neighbors(&s[..n], &c[..n], k);
            prop_assert!(beam.value <= full.value + 1e-9);
        }

        #[test]
        fn perceptron_last_positive_iff_gold_dropped(
            s in proptest::collection::vec(-10.0f64..10.0, 2..12),
            c in proptest::collection::vec(0u32..5, 2..12),
            k in 1usize..6,
        ) {
            let n = s.len().min(c.len());
            let (s, c) = (&s[..n], &c[..n]);
            for i in 0..n {
                for j in i + 1..n {
                    prop_assume!((s[i] - s[j]).abs() > 1e-9);
                }
            }
            let gold = cost_ranking(c, s)[0];
            let kept = &score_ranking(s)[..k.min(n)];
            let survives = kept.contains(&gold);
            let e = perceptron_last(s, c, k);
            prop_assert_eq!(e.value <= 0.0, survives);
        }
    }
}
