use std::f64::consts::PI;
use std::fmt::Write as _;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::layout::{Outcome, OutcomeString, PairingLayout};
use crate::analysis::binomial_pmf;
use crate::error::{capacity, Error, Result};
use crate::scalar::{self, Scalar};
use crate::spinspace::{Ensemble, SpinBasis, StateRef};

/// Largest `M` accepted by [`triplet_profile_bruteforce`].
pub const BRUTEFORCE_MAX_PAIRS: usize = 13;
/// Most negative raw probability tolerated before clamping fails.
pub const CLAMP_LIMIT: f64 = 1e-9;

/// Descriptive metadata carried alongside a profile.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ProfileMeta {
    pub label: String,
    pub n_sites: usize,
    pub pairs: Vec<(usize, usize)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bn: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma_j: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

/// `probs[m]`: probability of exactly `m` triplet outcomes over the layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TripletProfile {
    pub probs: Vec<f64>,
    pub meta: ProfileMeta,
}

impl TripletProfile {
    pub fn n_pairs(&self) -> usize {
        self.probs.len() - 1
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.meta.label = label.into();
        self
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("m_t,probability\n");
        for (m, p) in self.probs.iter().enumerate() {
            let _ = writeln!(out, "{m},{p:.16e}");
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// How [`triplet_profile_with`] evaluates the generating polynomial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ProfileMode {
    /// `M + 1` coefficient vectors, updated pair by pair.
    #[default]
    Recursion,
    /// Evaluation at the `M + 1` roots of unity followed by an inverse DFT;
    /// two working vectors regardless of `M`.
    Streaming,
}

/// `(P_s x)` at index `i` for the pair `mask`.
#[inline]
fn singlet_at<S: Scalar>(basis: &SpinBasis, mask: u32, x: &[S], i: usize) -> S {
    let c = basis.code(i);
    let t = c & mask;
    if t == 0 || t == mask {
        S::zero()
    } else {
        (x[i] - x[basis.index_unchecked(c ^ mask)]).scale(0.5)
    }
}

/// Applies `P_s` (or `P_t`) on the pair `mask` in place.
pub(crate) fn project_pair<S: Scalar>(basis: &SpinBasis, mask: u32, outcome: Outcome, x: &mut [S]) {
    for (i, &c) in basis.states().iter().enumerate() {
        let t = c & mask;
        if t == 0 || t == mask {
            if outcome == Outcome::Singlet {
                x[i] = S::zero();
            }
            continue;
        }
        let j = basis.index_unchecked(c ^ mask);
        if j < i {
            continue;
        }
        let s = (x[i] - x[j]).scale(0.5);
        match outcome {
            Outcome::Singlet => {
                x[i] = s;
                x[j] = -s;
            }
            Outcome::Triplet => {
                x[i] -= s;
                x[j] += s;
            }
        }
    }
}

/// Replaces negative roundoff with zero and renormalizes.
fn finalize(mut raw: Vec<f64>) -> Result<Vec<f64>> {
    let worst = raw.iter().copied().fold(0.0, f64::min);
    if worst < -CLAMP_LIMIT {
        return Err(Error::Numerical(format!(
            "profile entry {worst:.3e} is negative beyond roundoff"
        )));
    }
    if worst < 0.0 {
        log::debug!("clamped profile entry of magnitude {:.3e}", -worst);
    }
    raw.iter_mut().for_each(|p| *p = p.max(0.0));
    let total: f64 = raw.iter().sum();
    if total <= 0.0 {
        return Err(Error::Numerical("profile has no weight".into()));
    }
    raw.iter_mut().for_each(|p| *p /= total);
    Ok(raw)
}

fn recursion_bytes<S>(dim: usize, m: usize) -> usize {
    2 * (m + 1) * dim * std::mem::size_of::<S>()
}

fn recursion_raw<S: Scalar>(basis: &SpinBasis, psi: &[S], masks: &[u32]) -> Vec<f64> {
    let m = masks.len();
    let dim = psi.len();
    let mut cur: Vec<Vec<S>> = (0..=m).map(|_| vec![S::zero(); dim]).collect();
    let mut next = cur.clone();
    cur[0].copy_from_slice(psi);
    for (p, &mask) in masks.iter().enumerate() {
        let top = (p + 1).min(m);
        let src = &cur;
        next[..=top]
            .par_iter_mut()
            .enumerate()
            .for_each(|(k, out)| {
                for (i, o) in out.iter_mut().enumerate() {
                    let mut v = S::zero();
                    if k <= p {
                        v += singlet_at(basis, mask, &src[k], i);
                    }
                    if k >= 1 {
                        v += src[k - 1][i] - singlet_at(basis, mask, &src[k - 1], i);
                    }
                    *o = v;
                }
            });
        std::mem::swap(&mut cur, &mut next);
    }
    cur.iter().map(|v| scalar::dot(psi, v).re()).collect()
}

fn streaming_raw<S: Scalar>(basis: &SpinBasis, psi: &[S], masks: &[u32]) -> Vec<f64> {
    let m = masks.len();
    let points = m + 1;
    let psi_c: Vec<Complex64> = psi.iter().map(|a| a.to_complex()).collect();
    let mut w = vec![Complex64::new(0.0, 0.0); psi.len()];
    let mut u = w.clone();
    let mut g = vec![Complex64::new(0.0, 0.0); points];
    // p real, so G(conj z) = conj G(z); only the upper half circle is evaluated
    for j in 0..=points / 2 {
        let z = Complex64::from_polar(1.0, 2.0 * PI * j as f64 / points as f64);
        w.copy_from_slice(&psi_c);
        for &mask in masks {
            u.par_iter_mut()
                .enumerate()
                .for_each(|(i, ui)| *ui = singlet_at(basis, mask, &w, i));
            let zc = Complex64::new(1.0, 0.0) - z;
            w.par_iter_mut()
                .zip(&u)
                .for_each(|(wi, ui)| *wi = z * *wi + zc * *ui);
        }
        g[j] = scalar::dot(&psi_c, &w);
        if j > 0 {
            g[points - j] = g[j].conj();
        }
    }
    (0..points)
        .map(|k| {
            let sum: Complex64 = (0..points)
                .map(|j| {
                    g[j] * Complex64::from_polar(1.0, -2.0 * PI * (j * k) as f64 / points as f64)
                })
                .sum();
            sum.re / points as f64
        })
        .collect()
}

fn meta_for(layout: &PairingLayout) -> ProfileMeta {
    ProfileMeta {
        n_sites: layout.n_sites(),
        pairs: layout.pairs().to_vec(),
        ..Default::default()
    }
}

/// Exact triplet profile by coefficient recursion.
///
/// Fails with a capacity error when the `2 (M + 1)` working vectors exceed
/// the memory cap; [`ProfileMode::Streaming`] needs only two.
pub fn triplet_profile<'a, S: Scalar>(
    state: impl Into<StateRef<'a, S>>,
    layout: &PairingLayout,
) -> Result<TripletProfile> {
    triplet_profile_with(state, layout, ProfileMode::Recursion)
}

pub fn triplet_profile_with<'a, S: Scalar>(
    state: impl Into<StateRef<'a, S>>,
    layout: &PairingLayout,
    mode: ProfileMode,
) -> Result<TripletProfile> {
    let state = state.into();
    layout.check_sites(state.n_sites())?;
    let m = layout.len();
    let masks = layout.masks();
    let probs = match state.ensemble() {
        Ensemble::MaximallyMixed => binomial_pmf(m, 0.75),
        Ensemble::Vectors(vs) => {
            let cap = crate::config::memory_cap();
            let mut raw = vec![0.0; m + 1];
            for (w, v) in vs {
                let basis = v.basis();
                let part = match mode {
                    ProfileMode::Recursion => {
                        let need = recursion_bytes::<S>(basis.dim(), m);
                        if need > cap {
                            return capacity(format!(
                                "profile recursion needs {need} bytes over a cap of {cap}; \
                                 use the streaming evaluation mode"
                            ));
                        }
                        recursion_raw(basis, v.amplitudes(), &masks)
                    }
                    ProfileMode::Streaming => streaming_raw(basis, v.amplitudes(), &masks),
                };
                for (r, p) in raw.iter_mut().zip(part) {
                    *r += w * p;
                }
            }
            finalize(raw)?
        }
    };
    Ok(TripletProfile {
        probs,
        meta: meta_for(layout),
    })
}

/// `Tr(Pi_x rho)` for one outcome string.
pub fn outcome_probability<'a, S: Scalar>(
    state: impl Into<StateRef<'a, S>>,
    layout: &PairingLayout,
    x: &OutcomeString,
) -> Result<f64> {
    let state = state.into();
    layout.check_sites(state.n_sites())?;
    if x.len() != layout.len() {
        return Err(Error::InvalidArgument(format!(
            "outcome string has {} symbols for {} pairs",
            x.len(),
            layout.len()
        )));
    }
    let masks = layout.masks();
    Ok(match state.ensemble() {
        Ensemble::MaximallyMixed => {
            let t = x.triplets() as i32;
            0.75f64.powi(t) * 0.25f64.powi(x.len() as i32 - t)
        }
        Ensemble::Vectors(vs) => vs
            .iter()
            .map(|(w, v)| {
                let mut amps = v.amplitudes().to_vec();
                for (&mask, &o) in masks.iter().zip(&x.0) {
                    project_pair(v.basis(), mask, o, &mut amps);
                }
                w * scalar::norm_sqr(&amps)
            })
            .sum(),
    })
}

/// Profile as the literal sum over all `2^M` outcome strings.
pub fn triplet_profile_bruteforce<'a, S: Scalar>(
    state: impl Into<StateRef<'a, S>>,
    layout: &PairingLayout,
) -> Result<TripletProfile> {
    let state = state.into();
    let m = layout.len();
    if m > BRUTEFORCE_MAX_PAIRS {
        return capacity(format!(
            "brute-force profile limited to {BRUTEFORCE_MAX_PAIRS} pairs, got {m}"
        ));
    }
    let mut raw = vec![0.0; m + 1];
    for bits in 0..1u64 << m {
        let x = OutcomeString::from_bits(bits, m);
        raw[x.triplets()] += outcome_probability(state, layout, &x)?;
    }
    Ok(TripletProfile {
        probs: finalize(raw)?,
        meta: meta_for(layout),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spinspace::{neel_state, singlet_covering, DensityOp, StateVector};

    #[test]
    fn singlet_pair_probabilities() {
        let s = singlet_covering::<f64>(2, &[(1, 2)]).unwrap();
        let l = PairingLayout::standard(2).unwrap();
        assert!((outcome_probability(&s, &l, &"s".parse().unwrap()).unwrap() - 1.0).abs() < 1e-15);
        let ud = StateVector::<f64>::basis_state(SpinBasis::full(2).unwrap(), 0b01).unwrap();
        assert!((outcome_probability(&ud, &l, &"s".parse().unwrap()).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn product_states() {
        let l = PairingLayout::standard(4).unwrap();
        let ss = singlet_covering::<f64>(4, &[(1, 2), (3, 4)]).unwrap();
        assert_eq!(triplet_profile(&ss, &l).unwrap().probs, vec![1.0, 0.0, 0.0]);
        let up = StateVector::<f64>::basis_state(SpinBasis::full(4).unwrap(), 0b1111).unwrap();
        let p = triplet_profile_bruteforce(&up, &l).unwrap();
        assert_eq!(p.probs, vec![0.0, 0.0, 1.0]);
    }

    #[test]
    fn neel_and_mixed_are_binomial() {
        for n in [4, 8, 12] {
            let l = PairingLayout::standard(n).unwrap();
            let p = triplet_profile(&neel_state::<f64>(n).unwrap(), &l).unwrap();
            for (a, b) in p.probs.iter().zip(binomial_pmf(n / 2, 0.5)) {
                assert!((a - b).abs() < 1e-12);
            }
            let mm = DensityOp::<f64>::maximally_mixed(n).unwrap();
            let q = triplet_profile(&mm, &l).unwrap();
            assert_eq!(q.probs, binomial_pmf(n / 2, 0.75));
        }
    }

    #[test]
    fn streaming_matches_recursion() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let b = SpinBasis::sector(10, 5).unwrap();
        let psi = StateVector::<f64>::random(b, &mut rng);
        let l = PairingLayout::standard(10).unwrap();
        let a = triplet_profile(&psi, &l).unwrap();
        let s = triplet_profile_with(&psi, &l, ProfileMode::Streaming).unwrap();
        for (x, y) in a.probs.iter().zip(&s.probs) {
            assert!((x - y).abs() < 1e-13);
        }
    }

    #[test]
    fn clamping() {
        assert!(finalize(vec![0.5, -1e-3, 0.5]).is_err());
        let p = finalize(vec![0.5, -1e-13, 0.5]).unwrap();
        assert_eq!(p[1], 0.0);
    }

    #[test]
    fn csv_layout() {
        let l = PairingLayout::standard(2).unwrap();
        let s = singlet_covering::<f64>(2, &[(1, 2)]).unwrap();
        let csv = triplet_profile(&s, &l).unwrap().to_csv();
        assert!(csv.starts_with("m_t,probability\n0,1.0000000000000000e0\n"));
    }
}
