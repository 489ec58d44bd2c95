use std::collections::HashMap;

use serde::{Deserialize, Serialize};

/// Multi-indices `μ ∈ ℕⁿ` with `|μ| ≤ K`, enumerated by total degree and then
/// lexicographically.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "BasisSpec", into = "BasisSpec")]
pub struct TruncatedBasis {
    dim: usize,
    cutoff: usize,
    indices: Vec<Vec<usize>>,
    lookup: HashMap<Vec<usize>, usize>,
}

#[derive(Serialize, Deserialize)]
struct BasisSpec {
    dim_n: usize,
    cutoff_k: usize,
    index_order: String,
}

impl From<BasisSpec> for TruncatedBasis {
    fn from(s: BasisSpec) -> Self {
        TruncatedBasis::new(s.dim_n, s.cutoff_k)
    }
}

impl From<TruncatedBasis> for BasisSpec {
    fn from(b: TruncatedBasis) -> Self {
        BasisSpec { dim_n: b.dim, cutoff_k: b.cutoff, index_order: "graded-lex".into() }
    }
}

fn push_degree(dim: usize, degree: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if prefix.len() + 1 == dim {
        prefix.push(degree);
        out.push(prefix.clone());
        prefix.pop();
        return;
    }
    for first in 0..=degree {
        prefix.push(first);
        push_degree(dim, degree - first, prefix, out);
        prefix.pop();
    }
}

impl TruncatedBasis {
    pub fn new(dim: usize, cutoff: usize) -> Self {
        assert!(dim >= 1, "spatial dimension must be at least 1");
        let mut indices = Vec::new();
        for d in 0..=cutoff {
            push_degree(dim, d, &mut Vec::with_capacity(dim), &mut indices);
        }
        let lookup = indices.iter().enumerate().map(|(i, m)| (m.clone(), i)).collect();
        TruncatedBasis { dim, cutoff, indices, lookup }
    }

    /// Default truncation: `K = 16` in one dimension, `K = 8` in two, `K = 4` beyond.
    pub fn default_for_dim(dim: usize) -> Self {
        let k = match dim {
            1 => 16,
            2 => 8,
            _ => 4,
        };
        Self::new(dim, k)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn index(&self, i: usize) -> &[usize] {
        &self.indices[i]
    }

    pub fn indices(&self) -> impl Iterator<Item = &[usize]> {
        self.indices.iter().map(|v| v.as_slice())
    }

    pub fn position(&self, mu: &[usize]) -> Option<usize> {
        self.lookup.get(mu).copied()
    }

    pub fn degree(&self, i: usize) -> usize {
        self.indices[i].iter().sum()
    }

    /// Positions whose total degree is at most `K - band`.
    pub fn interior(&self, band: usize) -> Vec<usize> {
        let top = self.cutoff.saturating_sub(band);
        if band > self.cutoff {
            return Vec::new();
        }
        (0..self.len()).filter(|&i| self.degree(i) <= top).collect()
    }
}

/// Binomial coefficient as `f64`.
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn size_is_binomial() {
        for n in 1..4 {
            for k in 0..7 {
                let b = TruncatedBasis::new(n, k);
                assert_eq!(b.len() as f64, binomial(k + n, n));
            }
        }
    }

    #[test]
    fn graded_lex_order() {
        let b = TruncatedBasis::new(2, 2);
        let got: Vec<_> = b.indices().map(|m| m.to_vec()).collect();
        assert_eq!(
            got,
            vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![0, 2], vec![1, 1], vec![2, 0]]
        );
        for (i, m) in b.indices().enumerate() {
            assert_eq!(b.position(m), Some(i));
        }
    }

    #[test]
    fn interior_excludes_top_layers() {
        let b = TruncatedBasis::new(1, 5);
        assert_eq!(b.interior(2), vec![0, 1, 2, 3]);
        assert!(b.interior(6).is_empty());
    }

    #[test]
    fn serde_round_trip() {
        let b = TruncatedBasis::new(2, 3);
        let s = serde_json::to_string(&b).unwrap();
        assert!(s.contains("graded-lex"));
        let back: TruncatedBasis = serde_json::from_str(&s).unwrap();
        assert_eq!(back, b);
    }
}
