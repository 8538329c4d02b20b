use std::fmt;

use serde::{Deserialize, Serialize};

use super::layout::{Outcome, PairingLayout};
use super::profile::project_pair;
use crate::error::{capacity, invalid, Result};
use crate::scalar::{self, Scalar};
use crate::spinspace::{
    accumulate_reduced, two_qubit_state, DenseMatrix, DensityOp, Ensemble, StateRef, StateVector,
};

/// Below this heralding probability the end state is left undefined.
pub const HERALD_FLOOR: f64 = 1e-14;
/// Largest number of pairs accepted by [`bell_localize`].
pub const BELL_MAX_PAIRS: usize = 10;
/// Bell outcomes with smaller probability are dropped from the listing.
pub const BELL_PRUNE: f64 = 1e-15;

/// Result of post-selecting the all-singlet outcome.
#[derive(Debug, Clone)]
pub struct Herald<S> {
    /// Probability `q(m_t = 0)` of the all-singlet string.
    pub q0: f64,
    /// Normalized state of the unmeasured pair, `None` when `q0` is below
    /// [`HERALD_FLOOR`].
    pub end_state: Option<DensityOp<S>>,
}

/// `Pi_{all s} psi`, unnormalized, in `psi`'s basis.
pub fn project_all_singlet<S: Scalar>(
    psi: &StateVector<S>,
    layout: &PairingLayout,
) -> Result<Vec<S>> {
    layout.check_sites(psi.n_sites())?;
    let mut amps = psi.amplitudes().to_vec();
    for mask in layout.masks() {
        project_pair(psi.basis(), mask, Outcome::Singlet, &mut amps);
    }
    Ok(amps)
}

/// Post-selects every measured pair on the singlet and returns the
/// heralding probability with the state left on the two unmeasured sites.
pub fn herald_all_singlet<'a, S: Scalar>(
    state: impl Into<StateRef<'a, S>>,
    layout: &PairingLayout,
) -> Result<Herald<S>> {
    let state = state.into();
    layout.check_sites(state.n_sites())?;
    if layout.unmeasured().len() != 2 {
        return invalid(format!(
            "heralding needs exactly two unmeasured sites, layout leaves {}",
            layout.unmeasured().len()
        ));
    }
    let keep = layout.unmeasured();
    match state.ensemble() {
        Ensemble::MaximallyMixed => Ok(Herald {
            q0: 0.25f64.powi(layout.len() as i32),
            end_state: Some(DensityOp::maximally_mixed(2)?),
        }),
        Ensemble::Vectors(vs) => {
            let mut q0 = 0.0;
            let mut rho = DenseMatrix::<S>::zeros(4);
            for (w, v) in vs {
                let u = project_all_singlet(v, layout)?;
                q0 += w * scalar::norm_sqr(&u);
                accumulate_reduced(v.basis(), &u, keep, w, &mut rho);
            }
            if q0 < HERALD_FLOOR {
                return Ok(Herald {
                    q0,
                    end_state: None,
                });
            }
            rho.scale(1.0 / q0);
            Ok(Herald {
                q0,
                end_state: Some(DensityOp::from_dense(2, &rho)?),
            })
        }
    }
}

/// Two-qubit Bell basis, in the fixed output order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BellState {
    PsiMinus,
    PsiPlus,
    PhiPlus,
    PhiMinus,
}

impl BellState {
    pub const ALL: [BellState; 4] = [Self::PsiMinus, Self::PsiPlus, Self::PhiPlus, Self::PhiMinus];

    /// Amplitudes on `bit_a + 2 bit_b`, with `a` the first site of the pair.
    pub fn amplitudes(self) -> [f64; 4] {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        match self {
            Self::PsiMinus => [0.0, h, -h, 0.0],
            Self::PsiPlus => [0.0, h, h, 0.0],
            Self::PhiPlus => [h, 0.0, 0.0, h],
            Self::PhiMinus => [-h, 0.0, 0.0, h],
        }
    }
}

impl fmt::Display for BellState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::PsiMinus => "psi-",
            Self::PsiPlus => "psi+",
            Self::PhiPlus => "phi+",
            Self::PhiMinus => "phi-",
        })
    }
}

#[derive(Debug, Clone)]
pub struct BellOutcome<S> {
    pub outcomes: Vec<BellState>,
    pub probability: f64,
    pub end_state: DensityOp<S>,
}

impl<S> BellOutcome<S> {
    pub fn label(&self) -> String {
        self.outcomes
            .iter()
            .map(|b| b.to_string())
            .collect::<Vec<_>>()
            .join(" ")
    }
}

#[inline]
fn insert_zero(r: usize, pos: usize) -> usize {
    ((r >> pos) << (pos + 1)) | (r & ((1 << pos) - 1))
}

/// Projects positions `pa`, `pb` of a `len`-qubit vector onto `bell`,
/// leaving a `len - 2`-qubit vector.
fn contract<S: Scalar>(v: &[S], len: usize, pa: usize, pb: usize, bell: [f64; 4]) -> Vec<S> {
    let (lo, hi) = if pa < pb { (pa, pb) } else { (pb, pa) };
    (0..1usize << (len - 2))
        .map(|r| {
            let base = insert_zero(insert_zero(r, lo), hi);
            let mut acc = S::zero();
            for (ab, &c) in bell.iter().enumerate() {
                if c != 0.0 {
                    let code = base | (ab & 1) << pa | (ab >> 1) << pb;
                    acc += v[code].scale(c);
                }
            }
            acc
        })
        .collect()
}

struct BellSearch<'l, S> {
    pairs: &'l [(usize, usize)],
    out: Vec<BellOutcome<S>>,
}

impl<S: Scalar> BellSearch<'_, S> {
    fn descend(
        &mut self,
        v: Vec<S>,
        sites: Vec<usize>,
        depth: usize,
        path: &mut Vec<BellState>,
    ) -> Result<()> {
        let weight = scalar::norm_sqr(&v);
        if weight <= BELL_PRUNE {
            return Ok(());
        }
        if depth == self.pairs.len() {
            let amps = [v[0], v[1], v[2], v[3]];
            self.out.push(BellOutcome {
                outcomes: path.clone(),
                probability: weight,
                end_state: DensityOp::pure(two_qubit_state(amps)?),
            });
            return Ok(());
        }
        let (a, b) = self.pairs[depth];
        let pa = sites
            .iter()
            .position(|&s| s == a)
            .expect("pair site present");
        let pb = sites
            .iter()
            .position(|&s| s == b)
            .expect("pair site present");
        let rest: Vec<usize> = sites
            .iter()
            .copied()
            .filter(|&s| s != a && s != b)
            .collect();
        for bell in BellState::ALL {
            let u = contract(&v, sites.len(), pa, pb, bell.amplitudes());
            path.push(bell);
            self.descend(u, rest.clone(), depth + 1, path)?;
            path.pop();
        }
        Ok(())
    }
}

/// Full Bell-basis measurement of every layout pair: each outcome string with
/// probability above [`BELL_PRUNE`], with the normalized end-pair state.
pub fn bell_localize<S: Scalar>(
    psi: &StateVector<S>,
    layout: &PairingLayout,
) -> Result<Vec<BellOutcome<S>>> {
    layout.check_sites(psi.n_sites())?;
    if layout.unmeasured().len() != 2 {
        return invalid("Bell localization needs exactly two unmeasured sites");
    }
    if layout.len() > BELL_MAX_PAIRS {
        return capacity(format!(
            "Bell localization enumerates 4^M outcomes; M is limited to {BELL_MAX_PAIRS}"
        ));
    }
    let full = psi.to_full_space()?;
    let sites: Vec<usize> = (1..=psi.n_sites()).collect();
    let mut search = BellSearch {
        pairs: layout.pairs(),
        out: Vec::new(),
    };
    search.descend(full.into_amplitudes(), sites, 0, &mut Vec::new())?;
    Ok(search.out)
}

/// Singlet weight `alpha = Tr(P_s rho)` of a two-qubit state and the trace
/// norm of its deviation from the Werner form `alpha P_s + (1 - alpha) P_t / 3`.
pub fn werner_fraction<S: Scalar>(pair: &DensityOp<S>) -> Result<(f64, f64)> {
    if pair.n_sites() != 2 {
        return invalid(format!(
            "Werner fit needs a two-qubit state, got {} sites",
            pair.n_sites()
        ));
    }
    let rho = pair.to_dense()?;
    let psi = BellState::PsiMinus.amplitudes();
    let mut alpha = 0.0;
    for r in 0..4 {
        for c in 0..4 {
            alpha += psi[r] * psi[c] * rho.get(r, c).re();
        }
    }
    let t = (1.0 - alpha) / 3.0;
    let mut diff = Vec::with_capacity(16);
    for r in 0..4 {
        for c in 0..4 {
            let ps = psi[r] * psi[c];
            let id = if r == c { 1.0 } else { 0.0 };
            diff.push(rho.get(r, c) - S::from_real(alpha * ps + t * (id - ps)));
        }
    }
    let (vals, _) = S::hermitian_eigen(4, &diff)?;
    Ok((alpha, vals.iter().map(|v| v.abs()).sum()))
}
