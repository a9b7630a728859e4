//! Gauss–Hermite expectations against standard normals.

use gauss_quad::GaussHermite;

use crate::error::{Error, Result};

/// Nodes and weights for `E f(Z)`, `Z ~ N(0, 1)`.
#[derive(Clone, Debug)]
pub struct NormalRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl NormalRule {
    pub fn new(points: usize) -> Result<Self> {
        let rule = GaussHermite::new(points)
            .map_err(|e| Error::InvalidParameter(format!("Gauss-Hermite rule with {points} nodes: {e}")))?;
        // Physicists' rule integrates against e^{−x²}; rescale to N(0, 1).
        let mut pairs: Vec<(f64, f64)> = rule
            .as_node_weight_pairs()
            .iter()
            .map(|&(x, w)| (std::f64::consts::SQRT_2 * x, w / std::f64::consts::PI.sqrt()))
            .collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        Ok(NormalRule {
            nodes: pairs.iter().map(|p| p.0).collect(),
            weights: pairs.iter().map(|p| p.1).collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn expect(&self, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(x, w)| w * f(*x)).sum()
    }

    /// `E f(Z)` for `Z ~ N(0, I_dim)` on the tensor grid.
    pub fn expect_tensor(&self, dim: usize, mut f: impl FnMut(&[f64]) -> f64) -> f64 {
        let mut total = 0.0;
        self.for_each_node(dim, |z, w| total += w * f(z));
        total
    }

    /// Visits every node of the `dim`-fold tensor grid with its weight.
    pub fn for_each_node(&self, dim: usize, mut visit: impl FnMut(&[f64], f64)) {
        let n = self.len();
        let mut index = vec![0usize; dim];
        let mut point = vec![0.0; dim];
        loop {
            let mut weight = 1.0;
            for (d, &i) in index.iter().enumerate() {
                point[d] = self.nodes[i];
                weight *= self.weights[i];
            }
            visit(&point, weight);
            let mut d = 0;
            loop {
                if d == dim {
                    return;
                }
                index[d] += 1;
                if index[d] < n {
                    break;
                }
                index[d] = 0;
                d += 1;
            }
        }
    }
}
