//! Normalized message passing over the train graph, shared by LightGCN and
//! DGCF.
//!
//! Node embeddings are stacked users-then-items in one row-major buffer.
//! A layer maps `e_u <- sum_i w_ui / sqrt(s_u s_i) * e_i` and symmetrically
//! for items, where `s` are weighted degrees. The final embedding is the
//! mean of layers `0..=L`.

use crate::graph::BipartiteGraph;

/// Train edges as parallel arrays, in the graph's sorted edge order.
#[derive(Clone, Debug)]
pub struct EdgeList {
    pub num_users: usize,
    pub num_items: usize,
    pub users: Vec<u32>,
    pub items: Vec<u32>,
}

impl EdgeList {
    pub fn new(g: &BipartiteGraph) -> Self {
        let (users, items) = g.edges().unzip();
        EdgeList {
            num_users: g.num_users(),
            num_items: g.num_items(),
            users,
            items,
        }
    }

    pub fn len(&self) -> usize {
        self.users.len()
    }

    pub fn is_empty(&self) -> bool {
        self.users.is_empty()
    }

    pub fn num_nodes(&self) -> usize {
        self.num_users + self.num_items
    }

    /// `w_e / sqrt(s_u s_i)` with `s` the weighted degrees under `weights`.
    pub fn normalize(&self, weights: &[f64]) -> Vec<f64> {
        let mut su = vec![0.0; self.num_users];
        let mut si = vec![0.0; self.num_items];
        for (e, &w) in weights.iter().enumerate() {
            su[self.users[e] as usize] += w;
            si[self.items[e] as usize] += w;
        }
        weights
            .iter()
            .enumerate()
            .map(|(e, &w)| w / (su[self.users[e] as usize] * si[self.items[e] as usize]).sqrt())
            .collect()
    }

    /// One propagation step restricted to columns `off..off + width` of
    /// rows with `stride` entries. Overwrites those columns of `dst`.
    pub fn propagate(&self, norm: &[f64], src: &[f64], dst: &mut [f64], stride: usize, off: usize, width: usize) {
        let nu = self.num_users;
        for r in 0..self.num_nodes() {
            dst[r * stride + off..r * stride + off + width].fill(0.0);
        }
        for e in 0..self.len() {
            let w = norm[e];
            let u = self.users[e] as usize * stride + off;
            let i = (nu + self.items[e] as usize) * stride + off;
            for k in 0..width {
                dst[u + k] += w * src[i + k];
            }
            for k in 0..width {
                dst[i + k] += w * src[u + k];
            }
        }
    }
}

/// How edge weights are chosen at each layer.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Routing {
    /// Unit weights on every edge (LightGCN).
    None,
    /// `intents` chunks with softmax-normalized per-intent weights refined
    /// by `iterations` routing passes per layer (DGCF).
    Intents { intents: usize, iterations: usize },
}

#[derive(Clone, Debug)]
pub struct GraphConv {
    pub edges: EdgeList,
    pub dim: usize,
    pub layers: usize,
    pub routing: Routing,
}

/// Everything the backward pass needs from a forward pass.
#[derive(Clone, Debug)]
pub struct Forward {
    pub output: Vec<f64>,
    /// `[layer][intent][edge]` normalized propagation coefficients.
    pub norms: Vec<Vec<Vec<f64>>>,
    /// `[layer][intent][edge]` intent weights used at each layer.
    pub weights: Vec<Vec<Vec<f64>>>,
}

fn softmax_columns(logits: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let k = logits.len();
    let n = logits[0].len();
    let mut out = vec![vec![0.0; n]; k];
    for e in 0..n {
        let max = (0..k).map(|c| logits[c][e]).fold(f64::NEG_INFINITY, f64::max);
        let mut z = 0.0;
        for c in 0..k {
            let v = (logits[c][e] - max).exp();
            out[c][e] = v;
            z += v;
        }
        for col in out.iter_mut() {
            col[e] /= z;
        }
    }
    out
}

impl GraphConv {
    pub fn intents(&self) -> usize {
        match self.routing {
            Routing::None => 1,
            Routing::Intents { intents, .. } => intents,
        }
    }

    fn chunk(&self) -> usize {
        self.dim / self.intents()
    }

    pub fn forward(&self, e0: &[f64]) -> Forward {
        let n = self.edges.num_nodes() * self.dim;
        debug_assert_eq!(e0.len(), n);
        let k = self.intents();
        let width = self.chunk();
        let mut sum = e0.to_vec();
        let mut prev = e0.to_vec();
        let mut next = vec![0.0; n];
        let mut norms = Vec::with_capacity(self.layers);
        let mut weights = Vec::with_capacity(self.layers);
        let ones = vec![1.0; self.edges.len()];
        let unit_norm = self.edges.normalize(&ones);
        // routing logits persist across layers within one forward pass
        let mut logits = vec![vec![0.0; self.edges.len()]; k];
        for _ in 0..self.layers {
            let (layer_w, layer_norm) = match self.routing {
                Routing::None => (vec![ones.clone()], vec![unit_norm.clone()]),
                Routing::Intents { iterations, .. } => {
                    for _ in 0..iterations {
                        let w = softmax_columns(&logits);
                        for c in 0..k {
                            let norm = self.edges.normalize(&w[c]);
                            self.edges.propagate(&norm, &prev, &mut next, self.dim, c * width, width);
                        }
                        self.update_logits(&mut logits, &prev, &next);
                    }
                    let w = softmax_columns(&logits);
                    let nm = w.iter().map(|wc| self.edges.normalize(wc)).collect();
                    (w, nm)
                }
            };
            for (c, norm) in layer_norm.iter().enumerate() {
                self.edges.propagate(norm, &prev, &mut next, self.dim, c * width, width);
            }
            for (s, v) in sum.iter_mut().zip(&next) {
                *s += v;
            }
            std::mem::swap(&mut prev, &mut next);
            norms.push(layer_norm);
            weights.push(layer_w);
        }
        let scale = 1.0 / (self.layers + 1) as f64;
        for s in &mut sum {
            *s *= scale;
        }
        Forward {
            output: sum,
            norms,
            weights,
        }
    }

    /// Adds the affinity between each user's freshly propagated intent chunk
    /// (unit-normalized) and the squashed input chunk of the item.
    fn update_logits(&self, logits: &mut [Vec<f64>], input: &[f64], propagated: &[f64]) {
        let width = self.chunk();
        let nu = self.edges.num_users;
        for (c, row) in logits.iter_mut().enumerate() {
            let off = c * width;
            for (e, s) in row.iter_mut().enumerate() {
                let u = self.edges.users[e] as usize * self.dim + off;
                let i = (nu + self.edges.items[e] as usize) * self.dim + off;
                let pu = &propagated[u..u + width];
                let norm = pu.iter().map(|x| x * x).sum::<f64>().sqrt();
                if norm == 0.0 {
                    continue;
                }
                let aff: f64 = pu
                    .iter()
                    .zip(&input[i..i + width])
                    .map(|(a, b)| a * b.tanh())
                    .sum();
                *s += aff / norm;
            }
        }
    }

    /// Gradient with respect to the layer-0 embeddings given the gradient
    /// with respect to the output. Edge weights are treated as constants.
    pub fn backward(&self, fwd: &Forward, grad_out: &[f64]) -> Vec<f64> {
        let width = self.chunk();
        let scale = 1.0 / (self.layers + 1) as f64;
        let h: Vec<f64> = grad_out.iter().map(|g| g * scale).collect();
        let mut b = h.clone();
        let mut tmp = vec![0.0; b.len()];
        for layer in fwd.norms.iter().rev() {
            for (c, norm) in layer.iter().enumerate() {
                self.edges.propagate(norm, &b, &mut tmp, self.dim, c * width, width);
            }
            for ((dst, t), hv) in b.iter_mut().zip(&tmp).zip(&h) {
                *dst = hv + t;
            }
        }
        b
    }
}
