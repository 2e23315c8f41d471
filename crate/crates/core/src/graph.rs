//! Motif-succession graphs.
//!
//! A behavior is a directed graph on `V = {1, …, n}` in which every vertex has
//! exactly one successor and one predecessor, i.e. a permutation `σ`. The
//! pathway matrix encodes it as `w_ij = 1 ⇔ σ(j) = i` ("motif j is followed by
//! motif i").
//!
//! Complete behaviors are hamiltonian cycles. Learner permutations produced by
//! rewiring may transiently split into several cycles or contain self-loops,
//! so [`CyclePermutation`] can hold any permutation; only the constructors that
//! promise a behavior check hamiltonicity.

use std::fmt;
use std::str::FromStr;

use itertools::Itertools;
use num_bigint::BigUint;
use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::rng;

/// Smallest network size supported by the WLC construction.
pub const MIN_NEURONS: usize = 3;

/// A permutation `σ` of `{1, …, n}`; `σ(j)` is the motif that follows motif `j`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CyclePermutation {
    // 0-based internally
    succ: Vec<usize>,
    pred: Vec<usize>,
}

impl CyclePermutation {
    /// Builds the single cycle `seq[0] → seq[1] → … → seq[n-1] → seq[0]`.
    pub fn from_sequence(seq: &[usize]) -> Result<Self> {
        let n = seq.len();
        check_size(n)?;
        let mut seen = vec![false; n];
        for &label in seq {
            if label == 0 || label > n {
                return Err(Error::InvalidSequence(format!(
                    "label {label} is outside 1..={n}"
                )));
            }
            if std::mem::replace(&mut seen[label - 1], true) {
                return Err(Error::InvalidSequence(format!("label {label} is repeated")));
            }
        }
        let mut succ = vec![0; n];
        for k in 0..n {
            succ[seq[k] - 1] = seq[(k + 1) % n] - 1;
        }
        Ok(Self::from_succ0(succ))
    }

    /// Builds a permutation from its successor list (`succ[j-1] = σ(j)`).
    ///
    /// The result must be a fixed-point-free bijection; it may consist of
    /// several cycles.
    pub fn from_successors(succ: &[usize]) -> Result<Self> {
        let p = Self::from_successors_allow_loops(succ)?;
        if let Some(j) = p.fixed_points().first() {
            return Err(Error::InvalidSequence(format!(
                "vertex {j} is its own successor"
            )));
        }
        Ok(p)
    }

    /// Like [`from_successors`](Self::from_successors) but admits self-loops,
    /// which rewiring can produce transiently.
    pub fn from_successors_allow_loops(succ: &[usize]) -> Result<Self> {
        let n = succ.len();
        check_size(n)?;
        let mut seen = vec![false; n];
        for &s in succ {
            if s == 0 || s > n {
                return Err(Error::InvalidSequence(format!(
                    "successor {s} is outside 1..={n}"
                )));
            }
            if std::mem::replace(&mut seen[s - 1], true) {
                return Err(Error::InvalidSequence(format!(
                    "successor {s} is used twice; not a bijection"
                )));
            }
        }
        Ok(Self::from_succ0(succ.iter().map(|s| s - 1).collect()))
    }

    /// Builds a hamiltonian cycle, rejecting multi-cycle permutations.
    pub fn hamiltonian_from_successors(succ: &[usize]) -> Result<Self> {
        let p = Self::from_successors(succ)?;
        if !p.is_hamiltonian() {
            return Err(Error::InvalidSequence(format!(
                "permutation {p} splits into {} cycles",
                p.cycle_decomposition().len()
            )));
        }
        Ok(p)
    }

    pub(crate) fn from_succ0(succ: Vec<usize>) -> Self {
        let mut pred = vec![0; succ.len()];
        for (j, &s) in succ.iter().enumerate() {
            pred[s] = j;
        }
        Self { succ, pred }
    }

    /// Uniform draw over the `(n-1)!` hamiltonian cycles, deterministic in `seed`.
    pub fn random_hamiltonian(n: usize, seed: u64) -> Result<Self> {
        let mut rng = rng::stream(seed, rng::Stream::Graph);
        Self::random_hamiltonian_with(n, &mut rng)
    }

    pub fn random_hamiltonian_with<R: rand::Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Self> {
        check_size(n)?;
        // Fixing vertex 1 first makes every cycle correspond to exactly one ordering.
        let mut seq: Vec<usize> = (1..=n).collect();
        seq[1..].shuffle(rng);
        Self::from_sequence(&seq)
    }

    pub fn n(&self) -> usize {
        self.succ.len()
    }

    /// `σ(j)` for a 1-based label.
    pub fn succ(&self, j: usize) -> usize {
        self.succ[j - 1] + 1
    }

    /// `σ⁻¹(i)` for a 1-based label.
    pub fn pred(&self, i: usize) -> usize {
        self.pred[i - 1] + 1
    }

    pub(crate) fn succ0(&self) -> &[usize] {
        &self.succ
    }

    pub(crate) fn pred0(&self) -> &[usize] {
        &self.pred
    }

    /// Successor list in 1-based labels.
    pub fn successors(&self) -> Vec<usize> {
        self.succ.iter().map(|s| s + 1).collect()
    }

    pub fn fixed_points(&self) -> Vec<usize> {
        (0..self.n())
            .filter(|&j| self.succ[j] == j)
            .map(|j| j + 1)
            .collect()
    }

    pub fn is_hamiltonian(&self) -> bool {
        self.fixed_points().is_empty() && self.cycle_decomposition().len() == 1
    }

    /// Disjoint cycles, each starting at its smallest label, ordered by that label.
    pub fn cycle_decomposition(&self) -> Vec<Vec<usize>> {
        let n = self.n();
        let mut visited = vec![false; n];
        let mut cycles = Vec::new();
        for start in 0..n {
            if visited[start] {
                continue;
            }
            let mut cycle = Vec::new();
            let mut j = start;
            while !visited[j] {
                visited[j] = true;
                cycle.push(j + 1);
                j = self.succ[j];
            }
            cycles.push(cycle);
        }
        cycles
    }

    /// The motif order starting from vertex 1 (only meaningful for hamiltonian cycles).
    pub fn sequence(&self) -> Vec<usize> {
        self.cycle_decomposition().swap_remove(0)
    }

    /// Number of vertices whose successor agrees with `other`.
    pub fn agreement(&self, other: &Self) -> usize {
        self.succ
            .iter()
            .zip(&other.succ)
            .filter(|(a, b)| a == b)
            .count()
    }
}

impl fmt::Display for CyclePermutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.succ.iter().map(|s| s + 1).join(" "))
    }
}

impl FromStr for CyclePermutation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let succ = parse_line(s)?;
        Self::from_successors(&succ)
    }
}

/// Enumerates all `(n-1)!` hamiltonian cycles on `n` vertices.
pub fn hamiltonian_cycles(n: usize) -> Result<impl Iterator<Item = CyclePermutation>> {
    check_size(n)?;
    Ok((2..=n).permutations(n - 1).map(|rest| {
        let mut seq = Vec::with_capacity(rest.len() + 1);
        seq.push(1);
        seq.extend(rest);
        CyclePermutation::from_sequence(&seq).expect("enumerated sequence is a permutation")
    }))
}

/// `(n-1)!`, the number of distinct complete behaviors on `n` motifs.
pub fn count_behaviors(n: usize) -> Result<BigUint> {
    check_size(n)?;
    Ok((1..n).fold(BigUint::from(1u32), |acc, k| acc * BigUint::from(k)))
}

/// Orthogonal 0/1 pathway matrix with exactly one 1 per row and column.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PathwayMatrix {
    n: usize,
    // row-major
    w: Vec<u8>,
}

impl PathwayMatrix {
    /// Validates a dense matrix given row by row.
    pub fn from_rows(rows: &[Vec<u8>]) -> Result<Self> {
        let n = rows.len();
        check_size(n)?;
        let mut w = Vec::with_capacity(n * n);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::InvalidMatrix(format!(
                    "row {} has {} entries, expected {n}",
                    i + 1,
                    row.len()
                )));
            }
            if let Some(v) = row.iter().find(|&&v| v > 1) {
                return Err(Error::InvalidMatrix(format!("entry {v} is not 0 or 1")));
            }
            w.extend_from_slice(row);
        }
        let m = Self { n, w };
        for i in 0..n {
            let row_sum: u32 = (0..n).map(|j| m.w[i * n + j] as u32).sum();
            let col_sum: u32 = (0..n).map(|j| m.w[j * n + i] as u32).sum();
            if row_sum != 1 {
                return Err(Error::InvalidMatrix(format!(
                    "row {} has {row_sum} ones",
                    i + 1
                )));
            }
            if col_sum != 1 {
                return Err(Error::InvalidMatrix(format!(
                    "column {} has {col_sum} ones",
                    i + 1
                )));
            }
        }
        Ok(m)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Entry `w_ij` for 1-based indices.
    pub fn get(&self, i: usize, j: usize) -> u8 {
        self.w[(i - 1) * self.n + (j - 1)]
    }

    pub fn rows(&self) -> Vec<Vec<u8>> {
        self.w.chunks(self.n).map(<[u8]>::to_vec).collect()
    }

    /// `Wᵀ x`; component `j` is `x_{σ(j)}`.
    pub fn transpose_mul(&self, x: &[f64]) -> Vec<f64> {
        let n = self.n;
        (0..n)
            .map(|j| (0..n).map(|i| self.w[i * n + j] as f64 * x[i]).sum())
            .collect()
    }

    /// `W x`; component `i` is `x_{σ⁻¹(i)}`.
    pub fn mul(&self, x: &[f64]) -> Vec<f64> {
        let n = self.n;
        (0..n)
            .map(|i| (0..n).map(|j| self.w[i * n + j] as f64 * x[j]).sum())
            .collect()
    }

    /// `Wᵀ W` as integers; the identity for every valid pathway matrix.
    pub fn gram(&self) -> Vec<Vec<u32>> {
        let n = self.n;
        (0..n)
            .map(|a| {
                (0..n)
                    .map(|b| {
                        (0..n)
                            .map(|k| self.w[k * n + a] as u32 * self.w[k * n + b] as u32)
                            .sum()
                    })
                    .collect()
            })
            .collect()
    }
}

/// Encodes `σ` as its pathway matrix: `w_ij = 1` iff `i = σ(j)`.
pub fn pathway_matrix(perm: &CyclePermutation) -> PathwayMatrix {
    let n = perm.n();
    let mut w = vec![0u8; n * n];
    for (j, &i) in perm.succ0().iter().enumerate() {
        w[i * n + j] = 1;
    }
    PathwayMatrix { n, w }
}

/// Decodes a pathway matrix; matrices with a fixed point are rejected.
pub fn permutation_of(w: &PathwayMatrix) -> Result<CyclePermutation> {
    let n = w.n;
    let mut succ = vec![usize::MAX; n];
    for (j, s) in succ.iter_mut().enumerate() {
        for i in 0..n {
            if w.w[i * n + j] == 1 {
                if *s != usize::MAX {
                    return Err(Error::InvalidMatrix(format!(
                        "column {} has two ones",
                        j + 1
                    )));
                }
                *s = i;
            }
        }
        if *s == usize::MAX {
            return Err(Error::InvalidMatrix(format!("column {} has no one", j + 1)));
        }
        if *s == j {
            return Err(Error::InvalidMatrix(format!(
                "w[{0}][{0}] = 1: motif {0} cannot follow itself",
                j + 1
            )));
        }
    }
    let p = CyclePermutation::from_succ0(succ);
    if p.pred.len() != n || (0..n).any(|i| p.succ[p.pred[i]] != i) {
        return Err(Error::InvalidMatrix("not a permutation matrix".into()));
    }
    Ok(p)
}

impl fmt::Display for PathwayMatrix {
    /// Single line; position `j` holds `σ(j)`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n = self.n;
        let succ = (0..n).map(|j| {
            (0..n)
                .find(|&i| self.w[i * n + j] == 1)
                .map_or(0, |i| i + 1)
        });
        write!(f, "{}", succ.format(" "))
    }
}

impl FromStr for PathwayMatrix {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let succ = parse_line(s)?;
        Ok(pathway_matrix(
            &CyclePermutation::from_successors_allow_loops(&succ)?,
        ))
    }
}

fn parse_line(s: &str) -> Result<Vec<usize>> {
    s.split_whitespace()
        .map(|tok| {
            tok.parse::<usize>()
                .map_err(|e| Error::Parse(format!("{tok:?}: {e}")))
        })
        .collect()
}

pub(crate) fn check_size(n: usize) -> Result<()> {
    if n < MIN_NEURONS {
        return Err(Error::Size(format!(
            "n = {n}, at least {MIN_NEURONS} motifs are required"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    fn eq12() -> CyclePermutation {
        CyclePermutation::from_sequence(&[1, 3, 2]).unwrap()
    }

    #[test]
    fn sequence_132_is_the_displayed_three_neuron_matrix() {
        let p = eq12();
        assert_eq!((p.succ(1), p.succ(3), p.succ(2)), (3, 2, 1));
        let w = pathway_matrix(&p);
        assert_eq!(w.rows(), vec![vec![0, 1, 0], vec![0, 0, 1], vec![1, 0, 0]]);
        assert_eq!(permutation_of(&w).unwrap(), p);
    }

    #[test]
    fn six_cycle_is_subdiagonal() {
        let p = CyclePermutation::from_sequence(&[1, 2, 3, 4, 5, 6]).unwrap();
        let w = pathway_matrix(&p);
        for j in 1..=6 {
            for i in 1..=6 {
                let expected = u8::from(i == j % 6 + 1);
                assert_eq!(w.get(i, j), expected, "w[{i}][{j}]");
            }
        }
    }

    #[test]
    fn short_and_invalid_sequences_are_rejected() {
        assert!(matches!(
            CyclePermutation::from_sequence(&[1, 2]),
            Err(Error::Size(_))
        ));
        assert!(matches!(
            CyclePermutation::from_sequence(&[1, 2, 2]),
            Err(Error::InvalidSequence(_))
        ));
        assert!(matches!(
            CyclePermutation::from_sequence(&[1, 2, 4]),
            Err(Error::InvalidSequence(_))
        ));
    }

    #[test]
    fn identity_and_duplicate_matrices_are_rejected() {
        let id: Vec<Vec<u8>> = (0..4)
            .map(|i| (0..4).map(|j| u8::from(i == j)).collect())
            .collect();
        let w = PathwayMatrix::from_rows(&id).unwrap();
        assert!(matches!(permutation_of(&w), Err(Error::InvalidMatrix(_))));

        let dup = vec![vec![0, 1, 1], vec![0, 0, 0], vec![1, 0, 0]];
        assert!(matches!(
            PathwayMatrix::from_rows(&dup),
            Err(Error::InvalidMatrix(_))
        ));
    }

    #[test]
    fn decomposition_of_two_transpositions() {
        let p = CyclePermutation::from_successors(&[2, 1, 4, 3]).unwrap();
        assert_eq!(p.cycle_decomposition(), vec![vec![1, 2], vec![3, 4]]);
        assert!(!p.is_hamiltonian());
        assert!(CyclePermutation::hamiltonian_from_successors(&[2, 1, 4, 3]).is_err());
    }

    #[test]
    fn serialization_line() {
        let p = CyclePermutation::from_successors(&[3, 1, 2]).unwrap();
        let w = pathway_matrix(&p);
        assert_eq!(w.to_string(), "3 1 2");
        assert_eq!("3 1 2".parse::<PathwayMatrix>().unwrap(), w);
        assert_eq!("3 1 2".parse::<CyclePermutation>().unwrap(), p);
        assert!("3 x 2".parse::<PathwayMatrix>().is_err());
    }

    #[test]
    fn behavior_counts() {
        assert_eq!(count_behaviors(6).unwrap(), BigUint::from(120u32));
        assert_eq!(count_behaviors(10).unwrap(), BigUint::from(362_880u32));
        assert_eq!(count_behaviors(13).unwrap(), BigUint::from(479_001_600u32));
        assert!(count_behaviors(2).is_err());
        for n in 3..30 {
            assert_eq!(
                count_behaviors(n + 1).unwrap(),
                count_behaviors(n).unwrap() * BigUint::from(n)
            );
        }
    }

    #[test]
    fn enumeration_matches_count() {
        for n in 3..=6 {
            let all: Vec<_> = hamiltonian_cycles(n).unwrap().collect();
            let distinct: std::collections::HashSet<_> = all.iter().cloned().collect();
            assert_eq!(BigUint::from(all.len()), count_behaviors(n).unwrap());
            assert_eq!(distinct.len(), all.len());
            assert!(all.iter().all(CyclePermutation::is_hamiltonian));
        }
    }

    #[test]
    fn random_cycles_are_uniform_for_three_vertices() {
        let mut counts: HashMap<Vec<usize>, usize> = HashMap::new();
        let draws = 10_000;
        for seed in 0..draws {
            let p = CyclePermutation::random_hamiltonian(3, seed).unwrap();
            *counts.entry(p.successors()).or_default() += 1;
        }
        assert_eq!(counts.len(), 2);
        for (succ, c) in counts {
            let freq = c as f64 / draws as f64;
            assert!((freq - 0.5).abs() < 0.02, "{succ:?}: {freq}");
        }
    }

    #[test]
    fn random_cycles_cover_all_of_five() {
        let mut seen = std::collections::HashSet::new();
        for seed in 0..10_000 {
            seen.insert(CyclePermutation::random_hamiltonian(5, seed).unwrap());
        }
        assert_eq!(seen.len(), 24);
        assert_eq!(
            CyclePermutation::random_hamiltonian(9, 77).unwrap(),
            CyclePermutation::random_hamiltonian(9, 77).unwrap()
        );
        assert!(CyclePermutation::random_hamiltonian(2, 1).is_err());
    }

    #[test]
    fn matrix_products_follow_the_permutation() {
        let p = eq12();
        let w = pathway_matrix(&p);
        let x = [10.0, 20.0, 30.0];
        // (Wᵀx)_j = x_{σ(j)}
        assert_eq!(w.transpose_mul(&x), vec![30.0, 10.0, 20.0]);
        // (Wx)_i = x_{σ⁻¹(i)}
        assert_eq!(w.mul(&x), vec![20.0, 30.0, 10.0]);
    }
}
