//! Dense reference implementations built from explicit Kronecker products.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C;
use stprobe::hamiltonians::ModelSpec;
use stprobe::spinspace::{DensityOp, StateVector};
use stprobe::Scalar;

pub fn c(re: f64) -> C {
    C::new(re, 0.0)
}

/// Local basis ordered (down, up), matching bit value 0 and 1.
pub fn pauli() -> [DMatrix<C>; 3] {
    let i = C::new(0.0, 1.0);
    [
        DMatrix::from_row_slice(2, 2, &[c(0.0), c(1.0), c(1.0), c(0.0)]),
        DMatrix::from_row_slice(2, 2, &[c(0.0), i, -i, c(0.0)]),
        DMatrix::from_row_slice(2, 2, &[c(-1.0), c(0.0), c(0.0), c(1.0)]),
    ]
}

/// `op` on `site` (1-based) of an `n`-site register; site 1 is the least
/// significant factor.
pub fn site_op(op: &DMatrix<C>, site: usize, n: usize) -> DMatrix<C> {
    let mut out = DMatrix::<C>::identity(1, 1);
    for s in (1..=n).rev() {
        let f = if s == site {
            op.clone()
        } else {
            DMatrix::identity(2, 2)
        };
        out = out.kronecker(&f);
    }
    out
}

pub fn hamiltonian(model: &ModelSpec) -> DMatrix<C> {
    let n = model.n_sites;
    let d = 1 << n;
    let p = pauli();
    let ops: Vec<Vec<DMatrix<C>>> = (1..=n)
        .map(|s| p.iter().map(|m| site_op(m, s, n)).collect())
        .collect();
    let mut h = DMatrix::<C>::zeros(d, d);
    for b in &model.bonds {
        for a in 0..3 {
            h += &ops[b.i - 1][a] * &ops[b.j - 1][a] * c(b.coupling);
        }
    }
    for (s, f) in model.fields.iter().enumerate() {
        for a in 0..3 {
            if f[a] != 0.0 {
                h += &ops[s][a] * c(f[a]);
            }
        }
    }
    h
}

/// Ascending eigenvalues and matching eigenvectors (columns).
pub fn eigh(m: &DMatrix<C>) -> (Vec<f64>, DMatrix<C>) {
    let e = m.clone().symmetric_eigen();
    let mut idx: Vec<usize> = (0..e.eigenvalues.len()).collect();
    idx.sort_by(|&a, &b| e.eigenvalues[a].total_cmp(&e.eigenvalues[b]));
    let vals = idx.iter().map(|&i| e.eigenvalues[i]).collect();
    let vecs = DMatrix::from_columns(
        &idx.iter()
            .map(|&i| e.eigenvectors.column(i).into_owned())
            .collect::<Vec<_>>(),
    );
    (vals, vecs)
}

pub fn eigenvalues(m: &DMatrix<C>) -> Vec<f64> {
    eigh(m).0
}

/// Full-space amplitude vector of `v`.
pub fn embed<S: Scalar>(v: &StateVector<S>) -> DVector<C> {
    let n = v.n_sites();
    let mut out = DVector::<C>::zeros(1 << n);
    for (i, a) in v.amplitudes().iter().enumerate() {
        out[v.basis().code(i) as usize] = a.to_complex();
    }
    out
}

pub fn projector(v: &DVector<C>) -> DMatrix<C> {
    v * v.adjoint()
}

pub fn density<S: Scalar>(rho: &DensityOp<S>) -> DMatrix<C> {
    let n = rho.n_sites();
    let d = 1 << n;
    match rho.components() {
        None => DMatrix::identity(d, d) / c(d as f64),
        Some(comps) => {
            let mut m = DMatrix::zeros(d, d);
            for (w, v) in comps {
                m += projector(&embed(v)) * c(*w);
            }
            m
        }
    }
}

/// (1 - sigma_a . sigma_b) / 4
pub fn singlet_projector(a: usize, b: usize, n: usize) -> DMatrix<C> {
    let d = 1 << n;
    let mut dot = DMatrix::<C>::zeros(d, d);
    for p in pauli() {
        dot += site_op(&p, a, n) * site_op(&p, b, n);
    }
    (DMatrix::identity(d, d) - dot) / c(4.0)
}

/// Profile from explicit products of dense pair projectors.
pub fn profile(rho: &DMatrix<C>, pairs: &[(usize, usize)], n: usize) -> Vec<f64> {
    let d = 1 << n;
    let ps: Vec<DMatrix<C>> = pairs
        .iter()
        .map(|&(a, b)| singlet_projector(a, b, n))
        .collect();
    let mut probs = vec![0.0; pairs.len() + 1];
    for x in 0u32..(1 << pairs.len()) {
        let mut pi = DMatrix::<C>::identity(d, d);
        for (k, p) in ps.iter().enumerate() {
            let f = if x >> k & 1 == 1 {
                DMatrix::identity(d, d) - p
            } else {
                p.clone()
            };
            pi *= f;
        }
        probs[x.count_ones() as usize] += (rho * pi).trace().re;
    }
    probs
}

/// Reduced matrix on `keep` (in the given order: keep[0] is the least
/// significant bit of the result).
pub fn partial_trace(rho: &DMatrix<C>, keep: &[usize], n: usize) -> DMatrix<C> {
    let k = keep.len();
    let mut out = DMatrix::<C>::zeros(1 << k, 1 << k);
    let rest_mask: usize = (0..n)
        .filter(|s| !keep.contains(&(s + 1)))
        .map(|s| 1 << s)
        .sum();
    let local = |code: usize| -> usize {
        keep.iter()
            .enumerate()
            .fold(0, |acc, (bit, &s)| acc | ((code >> (s - 1) & 1) << bit))
    };
    for i in 0..1usize << n {
        for j in 0..1usize << n {
            if i & rest_mask == j & rest_mask {
                out[(local(i), local(j))] += rho[(i, j)];
            }
        }
    }
    out
}

pub fn sqrt_psd(m: &DMatrix<C>) -> DMatrix<C> {
    let (vals, vecs) = eigh(m);
    let diag = DMatrix::from_diagonal(&DVector::from_iterator(
        vals.len(),
        vals.iter().map(|v| c(v.max(0.0).sqrt())),
    ));
    &vecs * diag * vecs.adjoint()
}

/// Wootters concurrence through the Hermitian form sqrt(rho) rho~ sqrt(rho).
pub fn concurrence(rho: &DMatrix<C>) -> f64 {
    let y = &pauli()[1];
    let yy = y.kronecker(y);
    let tilde = &yy * rho.map(|z| z.conj()) * &yy;
    let s = sqrt_psd(rho);
    let mut l: Vec<f64> = eigenvalues(&(&s * tilde * &s))
        .iter()
        .map(|v| v.max(0.0).sqrt())
        .collect();
    l.sort_by(|a, b| b.total_cmp(a));
    (l[0] - l[1] - l[2] - l[3]).max(0.0)
}

pub fn trace_distance(a: &DMatrix<C>, b: &DMatrix<C>) -> f64 {
    0.5 * eigenvalues(&(a - b)).iter().map(|v| v.abs()).sum::<f64>()
}

/// Total S^2 with S = sum sigma / 2.
pub fn total_spin_sq(n: usize) -> DMatrix<C> {
    let d = 1 << n;
    let mut s2 = DMatrix::<C>::zeros(d, d);
    for p in pauli() {
        let mut sa = DMatrix::<C>::zeros(d, d);
        for s in 1..=n {
            sa += site_op(&p, s, n) * c(0.5);
        }
        s2 += &sa * &sa;
    }
    s2
}

pub fn max_abs(m: &DMatrix<C>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}
