//! Distinguishability, repeat counts and entanglement metrics.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{capacity, invalid, Error, Result};
use crate::scalar::{self, Scalar};
use crate::spinspace::{DensityOp, Ensemble, StateRef, StateVector};

/// Largest repeat count [`required_repeats`] will examine.
pub const MAX_REPEATS: usize = 10_000_000;
/// Largest combined rank per magnetization block in [`trace_distance`].
pub const TRACE_RANK_CAP: usize = 1 << 14;

/// A probability vector over a shared outcome index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Distribution {
    probs: Vec<f64>,
}

impl Distribution {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return invalid("probabilities must be finite and nonnegative");
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return invalid(format!("probabilities sum to {total}, not 1"));
        }
        Ok(Self { probs })
    }

    pub fn binomial(n: usize, p: f64) -> Self {
        Self {
            probs: binomial_pmf(n, p),
        }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn total_variation(&self, other: &Self) -> f64 {
        total_variation(&self.probs, &other.probs)
    }
}

impl From<&crate::stmeasure::TripletProfile> for Distribution {
    fn from(p: &crate::stmeasure::TripletProfile) -> Self {
        Self {
            probs: p.probs.clone(),
        }
    }
}

/// Binomial(n, p) probabilities for `k = 0..=n`, evaluated in log space.
pub fn binomial_pmf(n: usize, p: f64) -> Vec<f64> {
    if p <= 0.0 || p >= 1.0 {
        let mut out = vec![0.0; n + 1];
        out[if p >= 1.0 { n } else { 0 }] = 1.0;
        return out;
    }
    let (lp, lq) = (p.ln(), (1.0 - p).ln());
    let mut log_c = 0.0f64;
    let mut out = Vec::with_capacity(n + 1);
    for k in 0..=n {
        out.push((log_c + k as f64 * lp + (n - k) as f64 * lq).exp());
        log_c += ((n - k) as f64 / (k + 1) as f64).ln();
    }
    out
}

/// `1/2 sum |p - q|`, the shorter input zero-padded.
pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    let n = p.len().max(q.len());
    let at = |v: &[f64], i: usize| v.get(i).copied().unwrap_or(0.0);
    0.5 * (0..n).map(|i| (at(p, i) - at(q, i)).abs()).sum::<f64>()
}

/// Success probability `1/2 (1 + TV)` of telling Binomial(r, (1+d)/2) from
/// Binomial(r, (1-d)/2) by the likelihood rule; ties contribute one half.
pub fn repeat_success(d1: f64, r: usize) -> f64 {
    let a = binomial_pmf(r, 0.5 * (1.0 + d1));
    // the second pmf is the mirror image of the first
    let tv = 0.5 * (0..=r).map(|k| (a[k] - a[r - k]).abs()).sum::<f64>();
    0.5 * (1.0 + tv)
}

/// Smallest number of repetitions `r` whose success probability reaches
/// `target`, for single-shot distinguishability `d1`.
pub fn required_repeats(d1: f64, target: f64) -> Result<usize> {
    if d1 == 0.0 {
        return Err(Error::NoFiniteRepeats(target));
    }
    if !(d1 > 0.0 && d1 <= 1.0) {
        return invalid(format!("d1 must lie in (0, 1], got {d1}"));
    }
    if !(target > 0.5 && target < 1.0) {
        return invalid(format!("target must lie in (1/2, 1), got {target}"));
    }
    let ok = |r: usize| repeat_success(d1, r) >= target;
    let mut hi = 1;
    while !ok(hi) {
        hi *= 2;
        if hi > MAX_REPEATS {
            return Err(Error::SearchExhausted(format!(
                "more than {MAX_REPEATS} repeats needed for d1 = {d1}"
            )));
        }
    }
    let mut lo = hi / 2;
    // invariant: ok(hi), and lo == 0 or !ok(lo)
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if ok(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Stacks `(weight, vector)` pairs into per-sector groups of a common basis.
fn grouped<S: Scalar>(
    parts: Vec<(f64, StateVector<S>)>,
) -> Result<BTreeMap<Option<usize>, Vec<(f64, StateVector<S>)>>> {
    let any_full = parts.iter().any(|(_, v)| v.basis().n_up().is_none());
    let mut groups: BTreeMap<Option<usize>, Vec<(f64, StateVector<S>)>> = BTreeMap::new();
    for (w, v) in parts {
        let v = if any_full { v.to_full_space()? } else { v };
        groups.entry(v.basis().n_up()).or_default().push((w, v));
    }
    Ok(groups)
}

/// Eigenvalues of `sum_k c_k |u_k><u_k|` through the Gram matrix of the `u_k`.
fn weighted_outer_eigenvalues<S: Scalar>(block: &[(f64, StateVector<S>)]) -> Result<Vec<f64>> {
    let k = block.len();
    if k > TRACE_RANK_CAP {
        return capacity(format!("combined rank {k} exceeds {TRACE_RANK_CAP}"));
    }
    let mut gram = vec![S::zero(); k * k];
    for i in 0..k {
        for j in i..k {
            let g = scalar::dot(block[i].1.amplitudes(), block[j].1.amplitudes());
            gram[i * k + j] = g;
            gram[j * k + i] = g.conj();
        }
    }
    let (gv, gu) = S::hermitian_eigen(k, &gram)?;
    // G^{1/2} = U diag(sqrt g) U^dagger
    let sq: Vec<f64> = gv.iter().map(|g| g.max(0.0).sqrt()).collect();
    let mut half = vec![S::zero(); k * k];
    for i in 0..k {
        for j in 0..k {
            half[i * k + j] = (0..k)
                .map(|l| (gu[i * k + l] * gu[j * k + l].conj()).scale(sq[l]))
                .sum();
        }
    }
    let mut m = vec![S::zero(); k * k];
    for i in 0..k {
        for j in 0..k {
            m[i * k + j] = (0..k)
                .map(|l| (half[i * k + l] * half[l * k + j]).scale(block[l].0))
                .sum();
        }
    }
    Ok(S::hermitian_eigen(k, &m)?.0)
}

fn vectors<S>(e: Ensemble<'_, S>) -> Option<Vec<(f64, &StateVector<S>)>> {
    match e {
        Ensemble::Vectors(v) => Some(v),
        Ensemble::MaximallyMixed => None,
    }
}

/// Spectrum-based `1/2 ||rho - I/d||_1` for a state with orthonormal
/// components of weights `w`.
fn distance_to_maximally_mixed(weights: &[f64], n_sites: usize) -> f64 {
    let d = (1u64 << n_sites) as f64;
    let inside: f64 = weights.iter().map(|w| (w - 1.0 / d).abs()).sum();
    let outside = (d - weights.len() as f64) / d;
    0.5 * (inside + outside)
}

/// Trace distance `1/2 ||rho - sigma||_1`.
///
/// Two pure states use `sqrt(1 - |<a|b>|^2)`; mixed states are diagonalized
/// block by block in the span of their spectral vectors.
pub fn trace_distance<'a, 'b, S: Scalar>(
    rho: impl Into<StateRef<'a, S>>,
    sigma: impl Into<StateRef<'b, S>>,
) -> Result<f64> {
    let (rho, sigma) = (rho.into(), sigma.into());
    if rho.n_sites() != sigma.n_sites() {
        return invalid("states live on different numbers of sites");
    }
    let n = rho.n_sites();
    if let (StateRef::Pure(a), StateRef::Pure(b)) = (rho, sigma) {
        let ov = a.inner(b)?.norm_sqr();
        return Ok((1.0 - ov).max(0.0).sqrt());
    }
    let (ea, eb) = (rho.ensemble(), sigma.ensemble());
    let d = match (vectors(ea), vectors(eb)) {
        (None, None) => 0.0,
        (Some(v), None) | (None, Some(v)) => {
            let w: Vec<f64> = v.iter().map(|(w, _)| *w).collect();
            distance_to_maximally_mixed(&w, n)
        }
        (Some(a), Some(b)) => {
            let parts: Vec<(f64, StateVector<S>)> = a
                .into_iter()
                .map(|(w, v)| (w, v.clone()))
                .chain(b.into_iter().map(|(w, v)| (-w, v.clone())))
                .collect();
            let mut sum = 0.0;
            for block in grouped(parts)?.values() {
                sum += weighted_outer_eigenvalues(block)?
                    .iter()
                    .map(|e| e.abs())
                    .sum::<f64>();
            }
            0.5 * sum
        }
    };
    Ok(d.clamp(0.0, 1.0))
}

/// Weights below this are dropped before the concurrence is evaluated.
const CONCURRENCE_WEIGHT_FLOOR: f64 = 1e-14;

/// Wootters concurrence of a two-qubit state.
///
/// Evaluated as the singular values of `tau = X^T (Y x Y) X`, where the
/// columns of `X` are the spectral vectors scaled by the square roots of
/// their weights; these equal the square roots of the eigenvalues of
/// `rho (Y x Y) rho* (Y x Y)` without forming them by squaring.
pub fn concurrence<S: Scalar>(pair: &DensityOp<S>) -> Result<f64> {
    if pair.n_sites() != 2 {
        return invalid(format!(
            "concurrence needs a two-qubit state, got {} sites",
            pair.n_sites()
        ));
    }
    let Some(components) = pair.components() else {
        return Ok(0.0);
    };
    let xs: Vec<[Complex64; 4]> = components
        .iter()
        .filter(|(w, _)| *w > CONCURRENCE_WEIGHT_FLOOR)
        .map(|(w, v)| {
            let full = v.to_full_space()?;
            let a = full.amplitudes();
            let s = w.sqrt();
            Ok([0, 1, 2, 3].map(|i| a[i].to_complex() * s))
        })
        .collect::<Result<_>>()?;
    let k = xs.len();
    // (Y x Y)|c> = -|c^3> for equal bits, +|c^3> otherwise
    let yy = |x: &[Complex64; 4], c: usize| {
        if c == 0 || c == 3 {
            -x[c ^ 3]
        } else {
            x[c ^ 3]
        }
    };
    let mut tau = vec![Complex64::new(0.0, 0.0); k * k];
    for i in 0..k {
        for j in 0..k {
            tau[i * k + j] = (0..4).map(|c| xs[i][c] * yy(&xs[j], c)).sum();
        }
    }
    // singular values of tau as the nonnegative eigenvalues of [[0, tau], [tau^H, 0]]
    let d = 2 * k;
    let mut h = vec![Complex64::new(0.0, 0.0); d * d];
    for i in 0..k {
        for j in 0..k {
            h[i * d + k + j] = tau[i * k + j];
            h[(k + j) * d + i] = tau[i * k + j].conj();
        }
    }
    let (vals, _) = Complex64::hermitian_eigen(d, &h)?;
    let mut sv: Vec<f64> = vals[k..].iter().map(|v| v.max(0.0)).collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    let Some((&first, rest)) = sv.split_first() else {
        return Ok(0.0);
    };
    Ok((first - rest.iter().sum::<f64>()).clamp(0.0, 1.0))
}

/// Squared-overlap fidelity `|<a|b>|^2`.
pub fn fidelity<S: Scalar>(a: &StateVector<S>, b: &StateVector<S>) -> Result<f64> {
    if a.n_sites() != b.n_sites() {
        return invalid("fidelity between states on different numbers of sites");
    }
    Ok(a.inner(b)?.norm_sqr().min(1.0))
}
