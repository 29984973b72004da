//! Bounded Nelder–Mead on the unit cube with seeded restarts.
//!
//! Restarts are triggered only by simplex collapse, never by the remaining
//! budget, so a longer run replays a shorter one evaluation for evaluation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

const INITIAL_STEP: f64 = 0.1;
const X_TOL: f64 = 1e-4;
const F_TOL: f64 = 1e-10;
const IMPROVEMENT_TOL: f64 = 1e-9;

/// One objective evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceEntry {
    pub evaluation: usize,
    pub value: f64,
    pub best: f64,
}

#[derive(Debug, Clone)]
pub struct Search {
    pub best_x: Vec<f64>,
    pub best_value: f64,
    pub trace: Vec<TraceEntry>,
    /// A restart from the best point failed to improve it.
    pub converged: bool,
}

struct Budgeted<'a, F> {
    f: &'a F,
    budget: usize,
    trace: Vec<TraceEntry>,
    best_x: Vec<f64>,
    best_value: f64,
}

impl<F: Fn(&[f64]) -> f64 + Sync> Budgeted<'_, F> {
    fn remaining(&self) -> usize {
        self.budget - self.trace.len()
    }

    /// Evaluates as many points as the budget allows, in order.
    fn batch(&mut self, xs: &[Vec<f64>]) -> Vec<f64> {
        let take = xs.len().min(self.remaining());
        let f = self.f;
        let values: Vec<f64> = xs[..take].par_iter().map(|x| sanitize(f(x))).collect();
        for (x, &v) in xs.iter().zip(&values) {
            if v > self.best_value {
                self.best_value = v;
                self.best_x = x.clone();
            }
            self.trace.push(TraceEntry {
                evaluation: self.trace.len(),
                value: v,
                best: self.best_value,
            });
        }
        values
    }

    fn one(&mut self, x: &[f64]) -> Option<f64> {
        self.batch(std::slice::from_ref(&x.to_vec())).first().copied()
    }
}

fn sanitize(v: f64) -> f64 {
    if v.is_nan() {
        f64::NEG_INFINITY
    } else {
        v
    }
}

fn clamp(x: &mut [f64]) {
    x.iter_mut().for_each(|v| *v = v.clamp(0.0, 1.0));
}

fn towards(a: &[f64], b: &[f64], t: f64) -> Vec<f64> {
    let mut x: Vec<f64> = a.iter().zip(b).map(|(a, b)| a + t * (b - a)).collect();
    clamp(&mut x);
    x
}

/// Maximizes `f` over `[0,1]^d` starting from `x0`, using at most `budget`
/// evaluations.
pub fn maximize<F>(f: &F, x0: &[f64], budget: usize, seed: u64) -> Search
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let d = x0.len();
    let mut start = x0.to_vec();
    clamp(&mut start);
    let mut run = Budgeted {
        f,
        budget: budget.max(1),
        trace: Vec::new(),
        best_x: start.clone(),
        best_value: f64::NEG_INFINITY,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut converged = false;
    let mut restart = 0usize;
    'outer: while run.remaining() > 0 {
        let origin = if restart == 0 { start.clone() } else { run.best_x.clone() };
        let value_before = run.best_value;
        let mut simplex = vec![origin.clone()];
        for k in 0..d {
            let mut v = origin.clone();
            if restart == 0 {
                v[k] += if v[k] + INITIAL_STEP <= 1.0 { INITIAL_STEP } else { -INITIAL_STEP };
            } else {
                for (i, vi) in v.iter_mut().enumerate() {
                    let scale = if i == k { INITIAL_STEP } else { 0.25 * INITIAL_STEP };
                    *vi += scale * (2.0 * rng.gen::<f64>() - 1.0);
                }
            }
            clamp(&mut v);
            simplex.push(v);
        }
        let mut values = run.batch(&simplex);
        if values.len() < simplex.len() {
            break;
        }
        loop {
            let mut order: Vec<usize> = (0..=d).collect();
            order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
            simplex = order.iter().map(|&i| simplex[i].clone()).collect();
            values = order.iter().map(|&i| values[i]).collect();

            let spread = simplex[1..]
                .iter()
                .map(|v| v.iter().zip(&simplex[0]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
                .fold(0.0, f64::max);
            let f_spread = values[0] - values[d];
            if spread < X_TOL || (f_spread.is_finite() && f_spread.abs() < F_TOL) {
                if restart > 0 && run.best_value <= value_before + IMPROVEMENT_TOL {
                    converged = true;
                    break 'outer;
                }
                restart += 1;
                continue 'outer;
            }

            let centroid: Vec<f64> = (0..d).map(|i| simplex[..d].iter().map(|v| v[i]).sum::<f64>() / d as f64).collect();
            let worst = simplex[d].clone();
            let reflected = towards(&centroid, &worst, -1.0);
            let Some(fr) = run.one(&reflected) else { break 'outer };
            if fr > values[0] {
                let expanded = towards(&centroid, &worst, -2.0);
                let Some(fe) = run.one(&expanded) else { break 'outer };
                if fe > fr {
                    simplex[d] = expanded;
                    values[d] = fe;
                } else {
                    simplex[d] = reflected;
                    values[d] = fr;
                }
                continue;
            }
            if fr > values[d - 1] {
                simplex[d] = reflected;
                values[d] = fr;
                continue;
            }
            let (candidate, reference) = if fr > values[d] {
                (towards(&centroid, &worst, -0.5), fr)
            } else {
                (towards(&centroid, &worst, 0.5), values[d])
            };
            let Some(fc) = run.one(&candidate) else { break 'outer };
            if fc > reference {
                simplex[d] = candidate;
                values[d] = fc;
                continue;
            }
            let shrunk: Vec<Vec<f64>> = simplex[1..].iter().map(|v| towards(&simplex[0], v, 0.5)).collect();
            let fs = run.batch(&shrunk);
            if fs.len() < shrunk.len() {
                break 'outer;
            }
            for (k, (v, f)) in shrunk.into_iter().zip(fs).enumerate() {
                simplex[k + 1] = v;
                values[k + 1] = f;
            }
        }
    }
    Search {
        best_x: run.best_x,
        best_value: run.best_value,
        trace: run.trace,
        converged,
    }
}
