//! Finite trie model, small enough to enumerate exhaustively.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{SplitMix64, StepOutput, Stepper};
use crate::error::{Error, Result};
use crate::types::{TokenId, Vocab, NEG_SENTINEL};

const SUM_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
struct Arc {
    logprob: f64,
    child: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Default)]
struct Node {
    arcs: BTreeMap<TokenId, Arc>,
}

/// A trie of conditional next-token distributions. Nodes live in an arena;
/// node 0 is the root.
#[derive(Debug, Clone, PartialEq)]
pub struct TrieLattice {
    vocab: Vocab,
    nodes: Vec<Node>,
    depth: usize,
}

// On-disk schema.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LatticeFile {
    vocab_size: u32,
    eos_id: TokenId,
    bos_id: TokenId,
    root: NodeFile,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NodeFile {
    arcs: BTreeMap<String, ArcFile>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ArcFile {
    logprob: f64,
    child: Option<Box<NodeFile>>,
}

impl TrieLattice {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    /// Parses and validates the JSON lattice format.
    ///
    /// A node whose probabilities sum to within 1e-6 of one is renormalized;
    /// anything further off is rejected.
    pub fn from_json(text: &str) -> Result<Self> {
        let file: LatticeFile =
            serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))?;
        let vocab = Vocab::new(file.vocab_size, file.bos_id, file.eos_id)?;
        let mut lattice = Self {
            vocab,
            nodes: Vec::new(),
            depth: 0,
        };
        lattice.ingest(&file.root, 0)?;
        lattice.check_leaves()?;
        Ok(lattice)
    }

    fn ingest(&mut self, node: &NodeFile, depth: usize) -> Result<usize> {
        let id = self.nodes.len();
        self.nodes.push(Node::default());
        self.depth = self.depth.max(depth);
        if node.arcs.is_empty() {
            return Err(Error::Validation(format!(
                "node at depth {depth} has no arcs"
            )));
        }

        let mut arcs = BTreeMap::new();
        for (key, arc) in &node.arcs {
            let token: TokenId = key
                .parse()
                .map_err(|_| Error::Format(format!("arc key {key:?} is not a token id")))?;
            if token >= self.vocab.size() || token == self.vocab.bos_id() {
                return Err(Error::Validation(format!(
                    "arc token {token} is outside the vocabulary or is <s>"
                )));
            }
            if !(arc.logprob <= 0.0) {
                return Err(Error::Validation(format!(
                    "arc {token} has log-probability {} > 0",
                    arc.logprob
                )));
            }
            let child = match (&arc.child, token == self.vocab.eos_id()) {
                (Some(_), true) => {
                    return Err(Error::Validation("</eos> arc has a child".into()));
                }
                (None, false) => {
                    return Err(Error::Validation(format!(
                        "non-terminal arc {token} at depth {depth} has no child"
                    )));
                }
                (None, true) => None,
                (Some(child), false) => Some(self.ingest(child, depth + 1)?),
            };
            arcs.insert(
                token,
                Arc {
                    logprob: arc.logprob,
                    child,
                },
            );
        }

        let mass: f64 = arcs.values().map(|a| a.logprob.exp()).sum();
        if (mass - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::Validation(format!(
                "probabilities at depth {depth} sum to {mass}"
            )));
        }
        if (mass - 1.0).abs() > 1e-12 {
            let log_mass = mass.ln();
            for arc in arcs.values_mut() {
                arc.logprob = (arc.logprob - log_mass).min(0.0);
            }
        }
        self.nodes[id].arcs = arcs;
        Ok(id)
    }

    // Every deepest node must terminate with probability one.
    fn check_leaves(&self) -> Result<()> {
        let eos = self.vocab.eos_id();
        let mut stack = vec![(0usize, 0usize)];
        while let Some((id, depth)) = stack.pop() {
            let node = &self.nodes[id];
            if depth == self.depth {
                let only_eos = node.arcs.len() == 1 && node.arcs.contains_key(&eos);
                if !only_eos {
                    return Err(Error::Validation(format!(
                        "node at maximum depth {depth} must offer only </eos>"
                    )));
                }
            }
            stack.extend(
                node.arcs
                    .values()
                    .filter_map(|a| a.child)
                    .map(|c| (c, depth + 1)),
            );
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        let file = LatticeFile {
            vocab_size: self.vocab.size(),
            eos_id: self.vocab.eos_id(),
            bos_id: self.vocab.bos_id(),
            root: self.node_file(0),
        };
        serde_json::to_string_pretty(&file).expect("lattice serializes")
    }

    fn node_file(&self, id: usize) -> NodeFile {
        NodeFile {
            arcs: self.nodes[id]
                .arcs
                .iter()
                .map(|(tok, arc)| {
                    (
                        tok.to_string(),
                        ArcFile {
                            logprob: arc.logprob,
                            child: arc.child.map(|c| Box::new(self.node_file(c))),
                        },
                    )
                })
                .collect(),
        }
    }

    pub fn vocab(&self) -> Vocab {
        self.vocab
    }

    /// Length of the longest prefix that still has a node.
    pub fn depth(&self) -> usize {
        self.depth
    }

    fn node_at(&self, prefix: &[TokenId]) -> Result<&Node> {
        let mut node = &self.nodes[0];
        for &tok in prefix {
            let child = node
                .arcs
                .get(&tok)
                .and_then(|a| a.child)
                .ok_or_else(|| Error::Path(prefix.to_vec()))?;
            node = &self.nodes[child];
        }
        Ok(node)
    }

    /// Tokens listed at the node reached by `prefix`, with their log-probs.
    pub fn arcs_at(&self, prefix: &[TokenId]) -> Result<Vec<(TokenId, f64)>> {
        Ok(self
            .node_at(prefix)?
            .arcs
            .iter()
            .map(|(&t, a)| (t, a.logprob))
            .collect())
    }
}

impl Stepper for TrieLattice {
    fn vocab(&self) -> Vocab {
        self.vocab
    }

    fn step(&self, _source: &[TokenId], prefix: &[TokenId]) -> Result<StepOutput> {
        let node = self.node_at(prefix)?;
        let mut logprobs = vec![NEG_SENTINEL; self.vocab.size() as usize];
        for (&tok, arc) in &node.arcs {
            logprobs[tok as usize] = arc.logprob;
        }
        Ok(StepOutput {
            logprobs,
            attn: None,
        })
    }
}

/// Generates a random valid lattice.
///
/// Token ids are laid out as `<s>` = 0, `</eos>` = 1, content tokens
/// `2..vocab_size`. Each internal node lists a random nonempty subset of the
/// non-`<s>` tokens with random probabilities; nodes at `depth` offer only
/// `</eos>`. The realized depth can be smaller when early nodes happen to
/// offer only `</eos>`.
pub fn random_lattice(seed: u64, vocab_size: u32, depth: usize) -> Result<TrieLattice> {
    let vocab = Vocab::with_size(vocab_size)?;
    if vocab_size < 3 {
        return Err(Error::Validation(
            "a random lattice needs at least one content token".into(),
        ));
    }
    let mut rng = SplitMix64::new(seed);
    let mut lattice = TrieLattice {
        vocab,
        nodes: Vec::new(),
        depth: 0,
    };
    grow(&mut lattice, &mut rng, 0, depth);
    Ok(lattice)
}

fn grow(lat: &mut TrieLattice, rng: &mut SplitMix64, depth: usize, max_depth: usize) -> usize {
    let id = lat.nodes.len();
    lat.nodes.push(Node::default());
    lat.depth = lat.depth.max(depth);
    let eos = lat.vocab.eos_id();

    let mut arcs = BTreeMap::new();
    if depth == max_depth {
        arcs.insert(
            eos,
            Arc {
                logprob: 0.0,
                child: None,
            },
        );
        lat.nodes[id].arcs = arcs;
        return id;
    }

    let candidates: Vec<TokenId> = (1..lat.vocab.size()).collect();
    let mut chosen: Vec<TokenId> = candidates
        .iter()
        .copied()
        .filter(|_| rng.next_f64() < 0.75)
        .collect();
    if chosen.is_empty() {
        chosen.push(candidates[rng.range(0, candidates.len() as u64 - 1) as usize]);
    }
    // Weights bounded away from zero keep every arc plausible.
    let weights: Vec<f64> = chosen.iter().map(|_| 0.05 + rng.next_f64()).collect();
    let total: f64 = weights.iter().sum();
    for (&tok, w) in chosen.iter().zip(weights) {
        let child = (tok != eos).then(|| grow(lat, rng, depth + 1, max_depth));
        arcs.insert(
            tok,
            Arc {
                logprob: (w / total).ln().min(0.0),
                child,
            },
        );
    }
    lat.nodes[id].arcs = arcs;
    id
}
