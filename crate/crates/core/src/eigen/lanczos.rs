//! Thick-restart Lanczos with full reorthogonalization.
//!
//! The Krylov basis is kept explicitly and every new vector is
//! Gram-Schmidt-orthogonalized twice against the basis and against any
//! locked (deflated) vectors. The projected matrix is accumulated from those
//! projections, so after a restart it has the usual arrowhead shape without
//! special casing. When the basis stops growing (an invariant subspace) a
//! fresh random direction is injected, which lets small problems be solved
//! exactly.
//!
//! Single-vector Krylov spaces see only one direction of each degenerate
//! eigenspace. [`lowest_k`] therefore runs extra deflated solves from fresh
//! start vectors until no missing state below the k-th level remains.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{capacity, invalid, Error, Result};
use crate::hamiltonians::LinearOperator;
use crate::scalar::{self, Scalar};

/// Lanczos controls.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LanczosConfig {
    /// Converged when `||H x - theta x|| < tol * max(1, |theta|)`.
    pub tol: f64,
    /// Krylov basis size before a restart; 0 selects `max(40, 2 nev + 20)`.
    pub max_basis: usize,
    pub max_restarts: usize,
    /// Seed of the random start vector.
    pub seed: u64,
    /// Upper bound on the memory held by the Krylov basis, in bytes.
    pub memory_cap: usize,
}

impl Default for LanczosConfig {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            max_basis: 0,
            max_restarts: 2000,
            seed: 0x5eed_1a2c,
            memory_cap: crate::config::memory_cap(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RitzPair<S> {
    pub value: f64,
    pub vector: Vec<S>,
    pub residual: f64,
}

fn orthogonalize_against<S: Scalar>(w: &mut [S], others: &[&[S]]) {
    for _ in 0..2 {
        for q in others {
            let c = scalar::dot(q, w);
            scalar::axpy(-c, q, w);
        }
    }
}

fn random_unit<S: Scalar>(n: usize, rng: &mut ChaCha8Rng, others: &[&[S]]) -> Option<Vec<S>> {
    for _ in 0..8 {
        let mut v: Vec<S> = (0..n).map(|_| S::sample_normal(rng)).collect();
        orthogonalize_against(&mut v, others);
        let nrm = scalar::norm_sqr(&v).sqrt();
        if nrm > 1e-8 * (n as f64).sqrt() {
            let inv = 1.0 / nrm;
            v.iter_mut().for_each(|x| *x = x.scale(inv));
            return Some(v);
        }
    }
    None
}

fn combine<S: Scalar>(basis: &[Vec<S>], coeffs: impl Fn(usize) -> f64, n: usize) -> Vec<S> {
    let mut out = vec![S::zero(); n];
    for (l, v) in basis.iter().enumerate() {
        let c = coeffs(l);
        if c != 0.0 {
            scalar::axpy(S::from_real(c), v, &mut out);
        }
    }
    out
}

/// The `nev` lowest eigenpairs of `op` restricted to the orthogonal
/// complement of `locked`.
pub fn lowest_eigenpairs<S: Scalar, Op: LinearOperator<S> + ?Sized>(
    op: &Op,
    nev: usize,
    locked: &[&[S]],
    cfg: &LanczosConfig,
) -> Result<Vec<RitzPair<S>>> {
    let n = op.dim();
    if nev == 0 {
        return Ok(Vec::new());
    }
    let free = n.saturating_sub(locked.len());
    if nev > free {
        return invalid(format!(
            "requested {nev} eigenpairs but only {free} dimensions remain"
        ));
    }

    let wanted = if cfg.max_basis == 0 {
        (2 * nev + 20).max(40)
    } else {
        cfg.max_basis.max(nev + 1)
    };
    let bytes_per_vec = n * std::mem::size_of::<S>();
    // basis + residual + the rotated copy built during a restart
    let affordable = (cfg.memory_cap / bytes_per_vec.max(1)).saturating_sub(2) * 2 / 3;
    let mut m = wanted.min(affordable).min(free);
    if m < free && m < nev + 2 {
        return capacity(format!(
            "Krylov basis of {} vectors of dimension {n} exceeds the memory cap of {} bytes",
            nev + 2,
            cfg.memory_cap
        ));
    }
    m = m.max(nev.min(free));

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let start = random_unit(n, &mut rng, locked)
        .ok_or_else(|| Error::Numerical("could not draw a start vector".into()))?;

    let mut basis: Vec<Vec<S>> = vec![start];
    let mut t = vec![0.0f64; m * m];
    let mut computed = 0usize;
    let mut w = vec![S::zero(); n];
    let mut restarts = 0usize;
    let mut last_residual = f64::INFINITY;

    loop {
        let mut last_beta = 0.0;
        while computed < m {
            let j = computed;
            op.apply(&basis[j], &mut w);
            for _ in 0..2 {
                for q in locked {
                    let c = scalar::dot(q, &w);
                    scalar::axpy(-c, q, &mut w);
                }
                for (i, v) in basis.iter().enumerate().take(j + 1) {
                    let c = scalar::dot(v, &w);
                    scalar::axpy(-c, v, &mut w);
                    t[i * m + j] += c.re();
                }
            }
            for i in 0..j {
                t[j * m + i] = t[i * m + j];
            }
            let beta = scalar::norm_sqr(&w).sqrt();
            computed += 1;
            if computed == free {
                last_beta = 0.0;
                break;
            }
            let scale = t[j * m + j].abs().max(1.0);
            let next = if beta > 1e-12 * scale {
                let inv = 1.0 / beta;
                w.iter().map(|x| x.scale(inv)).collect()
            } else {
                let mut others: Vec<&[S]> = locked.to_vec();
                others.extend(basis.iter().map(|v| v.as_slice()));
                random_unit(n, &mut rng, &others)
                    .ok_or_else(|| Error::Numerical("Krylov basis injection failed".into()))?
            };
            basis.push(next);
            last_beta = if beta > 1e-12 * scale { beta } else { 0.0 };
        }

        let k = computed;
        let tk: Vec<f64> = (0..k)
            .flat_map(|i| (0..k).map(move |j| (i, j)))
            .map(|(i, j)| t[i * m + j])
            .collect();
        let (theta, y) = f64::hermitian_eigen(k, &tk)?;
        let estimate = |i: usize| last_beta * y[(k - 1) * k + i].abs();
        let converged = (0..nev).all(|i| estimate(i) <= cfg.tol * theta[i].abs().max(1.0));

        if converged || k == free {
            let mut pairs = Vec::with_capacity(nev);
            let mut all_ok = true;
            let mut hx = vec![S::zero(); n];
            for i in 0..nev {
                let mut x = combine(&basis[..k], |l| y[l * k + i], n);
                let nrm = scalar::norm_sqr(&x).sqrt();
                let inv = 1.0 / nrm;
                x.iter_mut().for_each(|v| *v = v.scale(inv));
                op.apply(&x, &mut hx);
                let res = hx
                    .iter()
                    .zip(&x)
                    .map(|(a, b)| (*a - b.scale(theta[i])).norm_sqr())
                    .sum::<f64>()
                    .sqrt();
                if res > cfg.tol * theta[i].abs().max(1.0) {
                    all_ok = false;
                }
                last_residual = res;
                pairs.push(RitzPair {
                    value: theta[i],
                    vector: x,
                    residual: res,
                });
            }
            if all_ok || (k == free && restarts >= cfg.max_restarts) {
                return Ok(pairs);
            }
            if k == free {
                // exact subspace but a loose residual: redo from a restart
                log::debug!("full-space Rayleigh-Ritz left residual {last_residual:.3e}");
            }
        } else {
            last_residual = (0..nev).map(estimate).fold(0.0, f64::max);
        }

        restarts += 1;
        if restarts > cfg.max_restarts {
            return Err(Error::Convergence {
                iterations: restarts,
                residual: last_residual,
            });
        }

        let keep = (nev + (m - nev) / 2)
            .max(nev)
            .min(k.saturating_sub(1))
            .max(1);
        let residual_vec = basis.pop();
        let mut next_basis: Vec<Vec<S>> = (0..keep)
            .map(|l| combine(&basis, |r| y[r * k + l], n))
            .collect();
        let tail = match residual_vec {
            Some(v) if basis.len() == k && last_beta > 0.0 => v,
            _ => {
                let mut others: Vec<&[S]> = locked.to_vec();
                others.extend(next_basis.iter().map(|v| v.as_slice()));
                random_unit(n, &mut rng, &others)
                    .ok_or_else(|| Error::Numerical("restart injection failed".into()))?
            }
        };
        // re-orthonormalize the rotated basis to contain drift
        for l in 0..keep {
            let (done, rest) = next_basis.split_at_mut(l);
            let v = &mut rest[0];
            let others: Vec<&[S]> = done.iter().map(|x| x.as_slice()).collect();
            orthogonalize_against(v, &others);
            let inv = 1.0 / scalar::norm_sqr(v).sqrt();
            v.iter_mut().for_each(|x| *x = x.scale(inv));
        }
        next_basis.push(tail);
        basis = next_basis;
        t.iter_mut().for_each(|x| *x = 0.0);
        for l in 0..keep {
            t[l * m + l] = theta[l];
        }
        computed = keep;
    }
}

/// The `k` lowest eigenpairs, recovering degenerate partners that a single
/// Krylov sequence misses.
pub fn lowest_k<S: Scalar, Op: LinearOperator<S> + ?Sized>(
    op: &Op,
    k: usize,
    cfg: &LanczosConfig,
) -> Result<Vec<RitzPair<S>>> {
    let mut found = lowest_eigenpairs(op, k, &[], cfg)?;
    if k <= 1 {
        return Ok(found);
    }
    let n = op.dim();
    let mut round = 1u64;
    while found.len() < n {
        found.sort_by(|a, b| a.value.total_cmp(&b.value));
        let kth = found[k - 1].value;
        let locked: Vec<&[S]> = found.iter().map(|p| p.vector.as_slice()).collect();
        let sub = LanczosConfig {
            seed: cfg
                .seed
                .wrapping_add(round.wrapping_mul(0x9e37_79b9_7f4a_7c15)),
            ..*cfg
        };
        let extra = lowest_eigenpairs(op, 1, &locked, &sub)?;
        let Some(candidate) = extra.into_iter().next() else {
            break;
        };
        if candidate.value > kth + 1e-8 * kth.abs().max(1.0) {
            break;
        }
        log::debug!("recovered a missed eigenpair at {:.12}", candidate.value);
        found.push(candidate);
        round += 1;
    }
    found.sort_by(|a, b| a.value.total_cmp(&b.value));
    found.truncate(k);
    Ok(found)
}
