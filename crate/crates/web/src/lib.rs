//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Points arrive as two parallel coordinate arrays. Every exported function
//! has a plain Rust counterpart returning `Result<_, String>`, which is what
//! the native tests exercise.

use discrepal::divergence::{build_d, labeled_first, spectrum_mk, Divergences};
use discrepal::kernel::{gram_sym, KernelSpec};
use discrepal::learner::{run_session, CandidateScorer, Criterion, QueryState};
use discrepal::linalg::select_rows;
use discrepal::seeded_rng;
use nalgebra::DMatrix;
use wasm_bindgen::prelude::*;

fn points(xs: &[f64], ys: &[f64]) -> Result<DMatrix<f64>, String> {
    if xs.len() != ys.len() {
        return Err(format!("{} x coordinates but {} y coordinates", xs.len(), ys.len()));
    }
    if xs.len() < 2 {
        return Err("need at least two points".into());
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err("coordinates must be finite".into());
    }
    Ok(DMatrix::from_fn(xs.len(), 2, |i, j| if j == 0 { xs[i] } else { ys[i] }))
}

fn kernel(sigma: f64) -> Result<KernelSpec, String> {
    if sigma == 0.0 {
        Ok(KernelSpec::Linear)
    } else {
        KernelSpec::gaussian(sigma).map_err(|e| e.to_string())
    }
}

fn indices(labeled: &[u32], n: usize) -> Result<Vec<usize>, String> {
    let mut out: Vec<usize> = Vec::with_capacity(labeled.len());
    for &i in labeled {
        let i = i as usize;
        if i >= n {
            return Err(format!("index {i} out of range"));
        }
        if out.contains(&i) {
            return Err(format!("index {i} repeated"));
        }
        out.push(i);
    }
    Ok(out)
}

/// Greedy query order over all points, `budget` queries long. `sigma = 0`
/// selects the linear kernel.
pub fn greedy_queries_impl(xs: &[f64], ys: &[f64], criterion: &str, sigma: f64, budget: usize, seed: u64) -> Result<Vec<u32>, String> {
    let x = points(xs, ys)?;
    let criterion: Criterion = criterion.parse().map_err(|e: discrepal::Error| e.to_string())?;
    let mut state = QueryState::new((0..x.nrows()).collect()).map_err(|e| e.to_string())?;
    let q = run_session(&x, &mut state, criterion, &kernel(sigma)?, budget, &mut seeded_rng(seed, 0)).map_err(|e| e.to_string())?;
    Ok(q.into_iter().map(|i| i as u32).collect())
}

/// `[discrepancy, mmd, nuclear, λ₁, λ₂, …]` at `Λ = 1` for the labeled set,
/// eigenvalues by decreasing magnitude.
pub fn spectrum_impl(xs: &[f64], ys: &[f64], labeled: &[u32], sigma: f64) -> Result<Vec<f64>, String> {
    let x = points(xs, ys)?;
    let q = indices(labeled, x.nrows())?;
    let pool: Vec<usize> = (0..x.nrows()).collect();
    let order = labeled_first(&pool, &q);
    let k = gram_sym(&kernel(sigma)?, &select_rows(&x, &order));
    let d = build_d(pool.len(), q.len()).map_err(|e| e.to_string())?;
    let s = spectrum_mk(&k, &d).map_err(|e| e.to_string())?;
    let v = Divergences::of(&s, 1.0);
    let mut out = vec![v.discrepancy, v.mmd, v.nuclear];
    out.extend_from_slice(s.eigenvalues());
    Ok(out)
}

/// Objective value each point would give if labeled next; `NaN` for points
/// already labeled.
pub fn candidate_scores_impl(xs: &[f64], ys: &[f64], labeled: &[u32], criterion: &str, sigma: f64) -> Result<Vec<f64>, String> {
    let x = points(xs, ys)?;
    let q = indices(labeled, x.nrows())?;
    let criterion: Criterion = criterion.parse().map_err(|e: discrepal::Error| e.to_string())?;
    if criterion == Criterion::Random {
        return Err("random sampling has no scores".into());
    }
    let pool: Vec<usize> = (0..x.nrows()).collect();
    let state = QueryState::with_labeled(pool.clone(), &q).map_err(|e| e.to_string())?;
    let mut out = vec![f64::NAN; x.nrows()];
    if state.unlabeled().is_empty() {
        return Ok(out);
    }
    let mut scorer = CandidateScorer::new(&x, &pool, &kernel(sigma)?).map_err(|e| e.to_string())?;
    for (i, v) in scorer.scores(&state, criterion).map_err(|e| e.to_string())? {
        out[i] = v;
    }
    Ok(out)
}

#[wasm_bindgen(js_name = greedyQueries)]
pub fn greedy_queries(xs: &[f64], ys: &[f64], criterion: &str, sigma: f64, budget: usize, seed: u32) -> Result<Vec<u32>, JsError> {
    greedy_queries_impl(xs, ys, criterion, sigma, budget, seed as u64).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn spectrum(xs: &[f64], ys: &[f64], labeled: &[u32], sigma: f64) -> Result<Vec<f64>, JsError> {
    spectrum_impl(xs, ys, labeled, sigma).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = candidateScores)]
pub fn candidate_scores(xs: &[f64], ys: &[f64], labeled: &[u32], criterion: &str, sigma: f64) -> Result<Vec<f64>, JsError> {
    candidate_scores_impl(xs, ys, labeled, criterion, sigma).map_err(|e| JsError::new(&e))
}
