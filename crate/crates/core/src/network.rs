//! Temporal networks: a fixed node set observed over a sequence of layers,
//! each layer an undirected simple graph.
//!
//! # Edge-list format
//!
//! ```text
//! # comments start with '#', blank lines are ignored
//! n L
//! layer i j
//! layer i j
//! ```
//!
//! All indices are 0-based: `0 <= layer < L`, `0 <= i, j < n`. Duplicate
//! lines (in either orientation) collapse to a single edge. Self-edges are
//! rejected. Datasets distributed with 1-based indices must be shifted down
//! by one before loading.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

/// Symmetric adjacency of one layer, stored as one bit row per node.
#[derive(Debug, Clone, PartialEq, Eq)]
struct Layer {
    words: usize,
    bits: Vec<u64>,
    edges: usize,
}

impl Layer {
    fn new(n: usize) -> Self {
        let words = n.div_ceil(64).max(1);
        Layer {
            words,
            bits: vec![0; words * n],
            edges: 0,
        }
    }

    #[inline]
    fn get(&self, i: usize, j: usize) -> bool {
        (self.bits[i * self.words + j / 64] >> (j % 64)) & 1 == 1
    }

    fn set(&mut self, i: usize, j: usize) -> bool {
        if self.get(i, j) {
            return false;
        }
        self.bits[i * self.words + j / 64] |= 1 << (j % 64);
        self.bits[j * self.words + i / 64] |= 1 << (i % 64);
        self.edges += 1;
        true
    }
}

/// A temporal network with `n` nodes and `L` layers.
///
/// Immutable once built; share it by reference across chains.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TemporalNetwork {
    n: usize,
    layers: Vec<Layer>,
}

impl TemporalNetwork {
    /// An edgeless network.
    pub fn empty(n: usize, num_layers: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Validation("node count must be positive".into()));
        }
        if num_layers == 0 {
            return Err(Error::Validation("layer count must be positive".into()));
        }
        Ok(TemporalNetwork {
            n,
            layers: (0..num_layers).map(|_| Layer::new(n)).collect(),
        })
    }

    /// Builds a network from `(layer, i, j)` triples.
    pub fn from_edges<I>(n: usize, num_layers: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, usize)>,
    {
        let mut net = Self::empty(n, num_layers)?;
        for (layer, i, j) in edges {
            net.add_edge(layer, i, j)?;
        }
        Ok(net)
    }

    /// Inserts an undirected edge. Returns `false` if it was already present.
    pub fn add_edge(&mut self, layer: usize, i: usize, j: usize) -> Result<bool> {
        self.check_layer(layer)?;
        self.check_node(i)?;
        self.check_node(j)?;
        if i == j {
            return Err(Error::Validation(format!(
                "self-edge on node {i} in layer {layer}"
            )));
        }
        Ok(self.layers[layer].set(i, j))
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn layer_count(&self) -> usize {
        self.layers.len()
    }

    /// Number of unordered node pairs per layer, `n(n-1)/2`.
    pub fn pair_count(&self) -> usize {
        self.n * (self.n - 1) / 2
    }

    /// Adjacency lookup. Indices are not range-checked beyond slice bounds.
    #[inline]
    pub fn is_adjacent(&self, layer: usize, i: usize, j: usize) -> bool {
        self.layers[layer].get(i, j)
    }

    /// Number of edges in `layer`.
    pub fn edge_count(&self, layer: usize) -> Result<usize> {
        self.check_layer(layer)?;
        Ok(self.layers[layer].edges)
    }

    pub fn total_edges(&self) -> usize {
        self.layers.iter().map(|l| l.edges).sum()
    }

    /// Edges of one layer as `(i, j)` with `i < j`, in lexicographic order.
    pub fn edges(&self, layer: usize) -> impl Iterator<Item = (usize, usize)> + '_ {
        let n = self.n;
        (0..n).flat_map(move |i| {
            ((i + 1)..n)
                .filter(move |&j| self.is_adjacent(layer, i, j))
                .map(move |j| (i, j))
        })
    }

    /// Parses the edge-list format described in the module docs.
    pub fn parse(text: &str) -> Result<Self> {
        let mut net: Option<TemporalNetwork> = None;
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let fields = line
                .split_whitespace()
                .map(|tok| {
                    tok.parse::<usize>().map_err(|_| Error::Parse {
                        line: line_no,
                        message: format!("expected a non-negative integer, found {tok:?}"),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            match net.as_mut() {
                None => {
                    let [n, num_layers] = fields[..] else {
                        return Err(Error::Parse {
                            line: line_no,
                            message: format!("expected header \"n L\", found {line:?}"),
                        });
                    };
                    net = Some(Self::empty(n, num_layers).map_err(|e| Error::Parse {
                        line: line_no,
                        message: e.to_string(),
                    })?);
                }
                Some(net) => {
                    let [layer, i, j] = fields[..] else {
                        return Err(Error::Parse {
                            line: line_no,
                            message: format!("expected \"layer i j\", found {line:?}"),
                        });
                    };
                    net.add_edge(layer, i, j)?;
                }
            }
        }
        net.ok_or_else(|| Error::Parse {
            line: 0,
            message: "missing \"n L\" header".into(),
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    /// Serializes to the edge-list format with lines sorted by `(layer, i, j)`.
    pub fn to_edge_list(&self) -> String {
        let mut out = format!("{} {}\n", self.n, self.layer_count());
        for layer in 0..self.layer_count() {
            for (i, j) in self.edges(layer) {
                let _ = writeln!(out, "{layer} {i} {j}");
            }
        }
        out
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_edge_list()).map_err(|e| Error::io(path, e))
    }

    fn check_layer(&self, layer: usize) -> Result<()> {
        if layer >= self.layers.len() {
            return Err(Error::Range {
                what: "layer",
                value: layer,
                limit: self.layers.len(),
            });
        }
        Ok(())
    }

    fn check_node(&self, i: usize) -> Result<()> {
        if i >= self.n {
            return Err(Error::Range {
                what: "node",
                value: i,
                limit: self.n,
            });
        }
        Ok(())
    }
}
