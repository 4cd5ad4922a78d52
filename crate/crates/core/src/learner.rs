//! Greedy sequential query selection.
//!
//! Each step forms the candidate set `Q ∪ {s}` for every unlabeled `s`,
//! evaluates the objective on it and labels the minimizer. None of the
//! objectives look at labels, so the query sequence depends only on the
//! features and the kernel.
//!
//! [`score_candidate`] evaluates one candidate from scratch through the
//! `M_K` spectrum. [`CandidateScorer`] scores all candidates of a step at
//! once: it eigendecomposes `K/n − t·Σ_{j∈Q} gⱼgⱼᵀ` (with `G = K^½`,
//! `t = 1/(|Q|+1)`) and obtains every candidate spectrum as a rank-one
//! downdate of it. The MMD needs no eigenvalues at all, since
//! `Σλᵢ² = Σᵢⱼ DᵢDⱼKᵢⱼ²`.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::Rng;

use crate::divergence::{build_d, labeled_first, spectrum_mk, Divergences};
use crate::kernel::{gram_sym, KernelSpec};
use crate::linalg::{psd_sqrt, select_rows, sym_eigen_desc};
use crate::secular::RankOneDowndate;
use crate::{Error, Result};

/// Scores within this fraction of the largest candidate score of the step
/// count as tied; ties go to the smallest pool index.
pub const TIE_RTOL: f64 = 1e-11;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Criterion {
    Discrepancy,
    Mmd,
    NuclearDiscrepancy,
    Random,
}

impl Criterion {
    pub const ALL: [Criterion; 4] = [Criterion::Random, Criterion::Mmd, Criterion::Discrepancy, Criterion::NuclearDiscrepancy];

    pub fn name(self) -> &'static str {
        match self {
            Criterion::Discrepancy => "discrepancy",
            Criterion::Mmd => "mmd",
            Criterion::NuclearDiscrepancy => "nuclear",
            Criterion::Random => "random",
        }
    }

    /// Picks this criterion's value out of a set of divergences.
    pub fn value(self, d: &Divergences) -> Option<f64> {
        match self {
            Criterion::Discrepancy => Some(d.discrepancy),
            Criterion::Mmd => Some(d.mmd),
            Criterion::NuclearDiscrepancy => Some(d.nuclear),
            Criterion::Random => None,
        }
    }
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Criterion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "discrepancy" | "disc" | "d" => Ok(Criterion::Discrepancy),
            "mmd" => Ok(Criterion::Mmd),
            "nuclear" | "nuclear_discrepancy" | "nd" => Ok(Criterion::NuclearDiscrepancy),
            "random" => Ok(Criterion::Random),
            other => Err(Error::Config(format!("unknown criterion {other:?}"))),
        }
    }
}

/// Pool `P`, labeled set `Q` (in query order) and unlabeled set `U = P ∖ Q`,
/// all as row indices into one dataset.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueryState {
    pool: Vec<usize>,
    labeled: Vec<usize>,
    unlabeled: BTreeSet<usize>,
}

impl QueryState {
    pub fn new(pool: Vec<usize>) -> Result<Self> {
        let unlabeled: BTreeSet<usize> = pool.iter().copied().collect();
        if unlabeled.len() != pool.len() {
            return Err(Error::Config("pool contains duplicate indices".into()));
        }
        Ok(Self { pool, labeled: Vec::new(), unlabeled })
    }

    pub fn with_labeled(pool: Vec<usize>, labeled: &[usize]) -> Result<Self> {
        let mut state = Self::new(pool)?;
        for &i in labeled {
            state.label(i)?;
        }
        Ok(state)
    }

    pub fn pool(&self) -> &[usize] {
        &self.pool
    }

    pub fn labeled(&self) -> &[usize] {
        &self.labeled
    }

    pub fn unlabeled(&self) -> &BTreeSet<usize> {
        &self.unlabeled
    }

    /// Moves `idx` from `U` to the end of `Q`.
    pub fn label(&mut self, idx: usize) -> Result<()> {
        if !self.unlabeled.remove(&idx) {
            return Err(Error::NotUnlabeled(idx));
        }
        self.labeled.push(idx);
        Ok(())
    }
}

/// Objective value of the candidate set `Q ∪ {s}` with `Λ = 1`, computed from
/// scratch through the `M_K` spectrum.
pub fn score_candidate(
    features: &DMatrix<f64>,
    state: &QueryState,
    s: usize,
    criterion: Criterion,
    kernel: &KernelSpec,
) -> Result<f64> {
    if !state.unlabeled.contains(&s) {
        return Err(Error::NotUnlabeled(s));
    }
    if criterion == Criterion::Random {
        return Err(Error::Config("the random criterion has no score".into()));
    }
    let mut candidate = state.labeled.clone();
    candidate.push(s);
    let order = labeled_first(&state.pool, &candidate);
    let k = gram_sym(kernel, &select_rows(features, &order));
    let d = build_d(order.len(), candidate.len())?;
    let spectrum = spectrum_mk(&k, &d)?;
    Ok(criterion.value(&Divergences::of(&spectrum, 1.0)).expect("non-random criterion"))
}

/// Scores every candidate of a step from one eigendecomposition.
#[derive(Debug, Clone)]
pub struct CandidateScorer {
    pool: Vec<usize>,
    position: HashMap<usize, usize>,
    gram: DMatrix<f64>,
    root: Option<DMatrix<f64>>,
    /// `Σ_{i∈P} K_is²` per pool position.
    sq_col_sums: Vec<f64>,
    sq_total: f64,
    parallel: bool,
}

impl CandidateScorer {
    pub fn new(features: &DMatrix<f64>, pool: &[usize], kernel: &KernelSpec) -> Result<Self> {
        if let Some(&bad) = pool.iter().find(|&&i| i >= features.nrows()) {
            return Err(Error::Dimension(format!("pool index {bad} out of range")));
        }
        let gram = gram_sym(kernel, &select_rows(features, pool));
        let sq_col_sums: Vec<f64> = gram.column_iter().map(|c| c.iter().map(|v| v * v).sum()).collect();
        let sq_total = sq_col_sums.iter().sum();
        let position = pool.iter().enumerate().map(|(p, &i)| (i, p)).collect();
        Ok(Self { pool: pool.to_vec(), position, gram, root: None, sq_col_sums, sq_total, parallel: false })
    }

    /// Scores candidates on the rayon pool when the `parallel` feature is on.
    /// Results do not depend on this setting.
    pub fn with_parallel(mut self, parallel: bool) -> Self {
        self.parallel = parallel;
        self
    }

    fn root(&mut self) -> &DMatrix<f64> {
        self.root.get_or_insert_with(|| psd_sqrt(&self.gram))
    }

    fn positions(&self, idx: impl IntoIterator<Item = usize>) -> Result<Vec<usize>> {
        idx.into_iter()
            .map(|i| self.position.get(&i).copied().ok_or(Error::NotUnlabeled(i)))
            .collect()
    }

    /// `(dataset index, score)` for every unlabeled index, in ascending index
    /// order, with `Λ = 1`.
    pub fn scores(&mut self, state: &QueryState, criterion: Criterion) -> Result<Vec<(usize, f64)>> {
        if state.pool != self.pool {
            return Err(Error::Config("scorer was built for a different pool".into()));
        }
        let labeled = self.positions(state.labeled.iter().copied())?;
        let candidates: Vec<usize> = state.unlabeled.iter().copied().collect();
        let cand_pos = self.positions(candidates.iter().copied())?;
        let n = self.pool.len() as f64;
        let t = 1.0 / (labeled.len() + 1) as f64;

        let values: Vec<f64> = match criterion {
            Criterion::Random => return Err(Error::Config("the random criterion has no score".into())),
            Criterion::Mmd => {
                // Σᵢⱼ DᵢDⱼKᵢⱼ² with D = 1/n − t·1_{Q∪s}
                let s_pq: f64 = labeled.iter().map(|&j| self.sq_col_sums[j]).sum();
                let s_qq: f64 = labeled.iter().flat_map(|&i| labeled.iter().map(move |&j| (i, j))).map(|(i, j)| self.gram[(i, j)].powi(2)).sum();
                cand_pos
                    .iter()
                    .map(|&s| {
                        let cross: f64 = labeled.iter().map(|&j| self.gram[(s, j)].powi(2)).sum();
                        let pq = s_pq + self.sq_col_sums[s];
                        let qq = s_qq + 2.0 * cross + self.gram[(s, s)].powi(2);
                        let sum_sq = self.sq_total / (n * n) - 2.0 * t * pq / n + t * t * qq;
                        4.0 * sum_sq.max(0.0).sqrt()
                    })
                    .collect()
            }
            Criterion::Discrepancy | Criterion::NuclearDiscrepancy => {
                let root = self.root().clone();
                let mut base = &self.gram / n;
                for &j in &labeled {
                    let g = root.column(j);
                    base.ger(-t, &g, &g, 1.0);
                }
                let (c, v) = sym_eigen_desc(&base);
                let z = v.transpose() * &root;
                let score = |s: usize| {
                    let zs: Vec<f64> = z.column(s).iter().copied().collect();
                    let dd = RankOneDowndate::new(&c, &zs, t);
                    4.0 * if criterion == Criterion::Discrepancy { dd.spectral_radius() } else { dd.nuclear_norm().max(0.0) }
                };
                self.map_candidates(&cand_pos, score)
            }
        };
        Ok(candidates.into_iter().zip(values).collect())
    }

    #[cfg(feature = "parallel")]
    fn map_candidates(&self, cand: &[usize], f: impl Fn(usize) -> f64 + Sync) -> Vec<f64> {
        use rayon::prelude::*;
        if self.parallel {
            cand.par_iter().map(|&s| f(s)).collect()
        } else {
            cand.iter().map(|&s| f(s)).collect()
        }
    }

    #[cfg(not(feature = "parallel"))]
    fn map_candidates(&self, cand: &[usize], f: impl Fn(usize) -> f64) -> Vec<f64> {
        cand.iter().map(|&s| f(s)).collect()
    }

    /// The next query under `criterion`.
    pub fn select(&mut self, state: &QueryState, criterion: Criterion, rng: &mut impl Rng) -> Result<usize> {
        if state.unlabeled.is_empty() {
            return Err(Error::PoolExhausted);
        }
        if criterion == Criterion::Random {
            let k = rng.gen_range(0..state.unlabeled.len());
            return Ok(*state.unlabeled.iter().nth(k).expect("k < len"));
        }
        let scores = self.scores(state, criterion)?;
        argmin_with_ties(&scores).ok_or_else(|| Error::Numerical("non-finite candidate scores".into()))
    }
}

/// Smallest-index argmin with relative tie tolerance [`TIE_RTOL`].
pub fn argmin_with_ties(scores: &[(usize, f64)]) -> Option<usize> {
    if scores.iter().any(|(_, v)| !v.is_finite()) {
        return None;
    }
    let min = scores.iter().map(|&(_, v)| v).fold(f64::INFINITY, f64::min);
    let scale = scores.iter().map(|&(_, v)| v.abs()).fold(0.0, f64::max);
    let tol = TIE_RTOL * scale;
    scores.iter().filter(|&&(_, v)| v <= min + tol).map(|&(i, _)| i).min()
}

/// One greedy (or random) step.
pub fn select_next(
    features: &DMatrix<f64>,
    state: &QueryState,
    criterion: Criterion,
    kernel: &KernelSpec,
    rng: &mut impl Rng,
) -> Result<usize> {
    if state.unlabeled.is_empty() {
        return Err(Error::PoolExhausted);
    }
    let mut scorer = CandidateScorer::new(features, &state.pool, kernel)?;
    scorer.select(state, criterion, rng)
}

/// Runs `budget` queries, calling `on_query` after each one with the updated
/// state. Returns the queries in selection order.
pub fn run_session_with(
    features: &DMatrix<f64>,
    state: &mut QueryState,
    criterion: Criterion,
    kernel: &KernelSpec,
    budget: usize,
    rng: &mut impl Rng,
    parallel: bool,
    mut on_query: impl FnMut(&QueryState) -> Result<()>,
) -> Result<Vec<usize>> {
    if budget > state.unlabeled.len() {
        return Err(Error::Config(format!(
            "budget {budget} exceeds the {} unlabeled pool points",
            state.unlabeled.len()
        )));
    }
    if budget == 0 {
        return Ok(Vec::new());
    }
    let mut scorer = CandidateScorer::new(features, &state.pool, kernel)?.with_parallel(parallel);
    let mut queries = Vec::with_capacity(budget);
    for _ in 0..budget {
        let s = scorer.select(state, criterion, rng)?;
        state.label(s)?;
        queries.push(s);
        on_query(state)?;
    }
    Ok(queries)
}

pub fn run_session(
    features: &DMatrix<f64>,
    state: &mut QueryState,
    criterion: Criterion,
    kernel: &KernelSpec,
    budget: usize,
    rng: &mut impl Rng,
) -> Result<Vec<usize>> {
    run_session_with(features, state, criterion, kernel, budget, rng, false, |_| Ok(()))
}
