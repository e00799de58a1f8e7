//! Per-example search tree for left-to-right sequence labeling.
//!
//! A node of the tree is a labeled prefix. Under Hamming cost the best
//! completion of any prefix copies the remaining gold suffix, so the
//! optimal-completion cost of a prefix is simply the number of mistakes
//! already committed. That makes the dynamic oracle trivial to evaluate
//! from *any* state, on or off the gold path: the cost-minimizing child
//! always appends the gold label for the next position.

use std::rc::Rc;

/// Index into the label vocabulary.
pub type LabelId = usize;

struct PrefixNode {
    parent: Option<Rc<PrefixNode>>,
    label: LabelId,
}

/// A labeled prefix with its accumulated score and completion cost.
///
/// Prefixes share structure through parent links, so extending a
/// hypothesis is O(1) and a beam expansion never copies label
/// sequences. [`Hypothesis::labels`] materializes the full sequence.
#[derive(Clone)]
pub struct Hypothesis {
    tail: Option<Rc<PrefixNode>>,
    depth: usize,
    acc_score: f64,
    completion_cost: u32,
}

impl Hypothesis {
    /// The empty prefix: depth 0, cost 0, score 0.
    pub fn root() -> Self {
        Hypothesis {
            tail: None,
            depth: 0,
            acc_score: 0.0,
            completion_cost: 0,
        }
    }

    /// Extends the prefix by one label, maintaining the completion
    /// cost incrementally: the child pays one extra mistake iff the
    /// appended label differs from the gold label at this position.
    pub fn child(&self, label: LabelId, gold: &[LabelId]) -> Self {
        assert!(
            self.depth < gold.len(),
            "cannot extend a terminal hypothesis (depth {} = h)",
            self.depth
        );
        let miss = u32::from(label != gold[self.depth]);
        Hypothesis {
            tail: Some(Rc::new(PrefixNode {
                parent: self.tail.clone(),
                label,
            })),
            depth: self.depth + 1,
            acc_score: self.acc_score,
            completion_cost: self.completion_cost + miss,
        }
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn completion_cost(&self) -> u32 {
        self.completion_cost
    }

    /// The hypothesis score used for beam ranking. Depending on the
    /// run configuration this is either the running sum of incremental
    /// scores or the last increment alone.
    pub fn acc_score(&self) -> f64 {
        self.acc_score
    }

    pub fn set_score(&mut self, score: f64) {
        self.acc_score = score;
    }

    /// Label appended last, `None` for the root.
    pub fn last_label(&self) -> Option<LabelId> {
        self.tail.as_ref().map(|n| n.label)
    }

    /// Materializes the full label sequence (root to tip).
    pub fn labels(&self) -> Vec<LabelId> {
        let mut out = Vec::with_capacity(self.depth);
        let mut node = self.tail.as_deref();
        while let Some(n) = node {
            out.push(n.label);
            node = n.parent.as_deref();
        }
        out.reverse();
        out
    }
}

impl std::fmt::Debug for Hypothesis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Hypothesis")
            .field("labels", &self.labels())
            .field("acc_score", &self.acc_score)
            .field("completion_cost", &self.completion_cost)
            .finish()
    }
}

/// Optimal-completion cost of `prefix` against `gold` under Hamming
/// cost: the number of positions already labeled incorrectly. This is
/// the definitional form; hypotheses maintain it incrementally.
pub fn completion_cost(prefix: &[LabelId], gold: &[LabelId]) -> u32 {
    assert!(
        prefix.len() <= gold.len(),
        "prefix length {} exceeds output length {}",
        prefix.len(),
        gold.len()
    );
    prefix
        .iter()
        .zip(gold)
        .filter(|(p, g)| p != g)
        .count() as u32
}

/// The dynamic oracle: from any non-terminal prefix the unique
/// cost-minimizing transition assigns the gold label for the next
/// position.
pub fn oracle_neighbor(v: &Hypothesis, gold: &[LabelId]) -> LabelId {
    assert!(
        v.depth() < gold.len(),
        "oracle queried on a terminal hypothesis"
    );
    gold[v.depth()]
}

/// True iff the hypothesis is a complete output of length `h`.
pub fn is_terminal(v: &Hypothesis, h: usize) -> bool {
    assert!(v.depth() <= h, "hypothesis deeper than the output length");
    v.depth() == h
}
