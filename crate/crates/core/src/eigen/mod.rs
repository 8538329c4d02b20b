//! Ground states, low-lying excitations, full spectra and thermal states.

pub mod lanczos;

use std::sync::Arc;

use crate::error::{capacity, invalid, Error, Result};
use crate::hamiltonians::{Bond, HamiltonianOp, LinearOperator, ModelSpec};
use crate::scalar::{self, Scalar};
use crate::spinspace::{DensityOp, SpinBasis, StateVector, DENSE_CAP_SITES};

pub use lanczos::LanczosConfig;

/// Largest `k` accepted by [`lowest_k_states`].
pub const MAX_LOWEST_K: usize = 12;
/// Search cap of [`first_excited_singlet`].
pub const SINGLET_SEARCH_CAP: usize = 32;
/// Cumulative Boltzmann weight kept by [`thermal_state`].
pub const THERMAL_CUTOFF: f64 = 1.0 - 1e-12;

#[derive(Debug, Clone)]
pub struct EigenPair<S> {
    pub energy: f64,
    pub vector: StateVector<S>,
    /// `||H v - E v||` at return.
    pub residual: f64,
}

/// Basis the solvers use for `model`: the `n_up = N/2` sector when the model
/// is field-free, the full space otherwise.
pub fn solver_basis(model: &ModelSpec) -> Result<Arc<SpinBasis>> {
    if model.is_field_free() && model.n_sites.is_multiple_of(2) {
        SpinBasis::sector(model.n_sites, model.n_sites / 2)
    } else {
        SpinBasis::full(model.n_sites)
    }
}

fn to_pairs<S: Scalar>(
    basis: &Arc<SpinBasis>,
    ritz: Vec<lanczos::RitzPair<S>>,
) -> Vec<EigenPair<S>> {
    ritz.into_iter()
        .map(|r| EigenPair {
            energy: r.value,
            vector: StateVector::from_normalized(basis.clone(), r.vector),
            residual: r.residual,
        })
        .collect()
}

pub fn ground_state<S: Scalar>(model: &ModelSpec) -> Result<EigenPair<S>> {
    ground_state_in(model, solver_basis(model)?, &LanczosConfig::default())
}

pub fn ground_state_in<S: Scalar>(
    model: &ModelSpec,
    basis: Arc<SpinBasis>,
    cfg: &LanczosConfig,
) -> Result<EigenPair<S>> {
    let op = HamiltonianOp::<S>::new(model, basis.clone())?;
    let ritz = lanczos::lowest_eigenpairs(&op, 1, &[], cfg)?;
    Ok(to_pairs(&basis, ritz).remove(0))
}

/// The `k` lowest eigenpairs, energies nondecreasing.
pub fn lowest_k_states<S: Scalar>(model: &ModelSpec, k: usize) -> Result<Vec<EigenPair<S>>> {
    lowest_k_states_in(model, solver_basis(model)?, k, &LanczosConfig::default())
}

pub fn lowest_k_states_in<S: Scalar>(
    model: &ModelSpec,
    basis: Arc<SpinBasis>,
    k: usize,
    cfg: &LanczosConfig,
) -> Result<Vec<EigenPair<S>>> {
    if k == 0 || k > MAX_LOWEST_K {
        return invalid(format!("k must lie in 1..={MAX_LOWEST_K}, got {k}"));
    }
    lowest_unchecked(model, basis, k, cfg)
}

fn lowest_unchecked<S: Scalar>(
    model: &ModelSpec,
    basis: Arc<SpinBasis>,
    k: usize,
    cfg: &LanczosConfig,
) -> Result<Vec<EigenPair<S>>> {
    let op = HamiltonianOp::<S>::new(model, basis.clone())?;
    if k > op.dim() {
        return invalid(format!("k = {k} exceeds the dimension {}", op.dim()));
    }
    let ritz = lanczos::lowest_k(&op, k, cfg)?;
    Ok(to_pairs(&basis, ritz))
}

fn all_pairs_model(n_sites: usize) -> Result<ModelSpec> {
    let bonds = (1..=n_sites)
        .flat_map(|i| {
            (i + 1..=n_sites).map(move |j| Bond {
                i,
                j,
                coupling: 1.0,
            })
        })
        .collect();
    ModelSpec::from_bonds(n_sites, bonds, "total-spin")
}

/// Operator whose expectation is `<S_tot^2>`, as `(3N + 2 sum_{i<j} s_i.s_j) / 4`
/// with Pauli `s`.
struct TotalSpinOp<S> {
    pairs: HamiltonianOp<S>,
    n_sites: usize,
}

impl<S: Scalar> TotalSpinOp<S> {
    fn new(basis: Arc<SpinBasis>) -> Result<Self> {
        let n_sites = basis.n_sites();
        Ok(Self {
            pairs: HamiltonianOp::new(&all_pairs_model(n_sites)?, basis)?,
            n_sites,
        })
    }
}

impl<S: Scalar> LinearOperator<S> for TotalSpinOp<S> {
    fn dim(&self) -> usize {
        self.pairs.dim()
    }

    fn apply(&self, x: &[S], y: &mut [S]) {
        self.pairs.apply(x, y);
        let c = 0.75 * self.n_sites as f64;
        for (yi, xi) in y.iter_mut().zip(x) {
            *yi = yi.scale(0.5) + xi.scale(c);
        }
    }
}

/// `<S_tot^2>` with `S = sum sigma_i / 2`.
pub fn total_spin_sq<S: Scalar>(state: &StateVector<S>) -> Result<f64> {
    let op = TotalSpinOp::<S>::new(state.basis().clone())?;
    let mut out = vec![S::zero(); op.dim()];
    op.apply(state.amplitudes(), &mut out);
    Ok(scalar::dot(state.amplitudes(), &out).re())
}

/// Rotates every cluster of degenerate pairs onto total-spin eigenvectors.
fn resolve_total_spin<S: Scalar>(
    pairs: &mut [EigenPair<S>],
    basis: &Arc<SpinBasis>,
) -> Result<Vec<f64>> {
    let op = TotalSpinOp::<S>::new(basis.clone())?;
    let dim = op.dim();
    let mut spins = vec![0.0; pairs.len()];
    let mut start = 0;
    while start < pairs.len() {
        let e = pairs[start].energy;
        let tol = 1e-8 * e.abs().max(1.0);
        let end = (start..pairs.len())
            .find(|&i| pairs[i].energy - e > tol)
            .unwrap_or(pairs.len());
        let size = end - start;
        let applied: Vec<Vec<S>> = pairs[start..end]
            .iter()
            .map(|p| {
                let mut out = vec![S::zero(); dim];
                op.apply(p.vector.amplitudes(), &mut out);
                out
            })
            .collect();
        let mut m = vec![S::zero(); size * size];
        for a in 0..size {
            for b in 0..size {
                m[a * size + b] = scalar::dot(pairs[start + a].vector.amplitudes(), &applied[b]);
            }
        }
        if size == 1 {
            spins[start] = m[0].re();
        } else {
            let (vals, vecs) = S::hermitian_eigen(size, &m)?;
            let rotated: Vec<Vec<S>> = (0..size)
                .map(|l| {
                    let mut v = vec![S::zero(); dim];
                    for a in 0..size {
                        scalar::axpy(
                            vecs[a * size + l],
                            pairs[start + a].vector.amplitudes(),
                            &mut v,
                        );
                    }
                    v
                })
                .collect();
            for (l, v) in rotated.into_iter().enumerate() {
                pairs[start + l].vector = StateVector::new(basis.clone(), v)?;
                spins[start + l] = vals[l];
            }
        }
        start = end;
    }
    Ok(spins)
}

/// Lowest eigenpair above the ground state with `<S^2>` below 1e-6, searched
/// in the `S_z = 0` sector with growing `k`.
pub fn first_excited_singlet<S: Scalar>(model: &ModelSpec) -> Result<EigenPair<S>> {
    if !model.is_field_free() {
        return invalid("first_excited_singlet needs a field-free model");
    }
    if !model.n_sites.is_multiple_of(2) {
        return invalid("an S_z = 0 sector needs an even number of sites");
    }
    let basis = SpinBasis::sector(model.n_sites, model.n_sites / 2)?;
    let cfg = LanczosConfig::default();
    let mut k = 4;
    loop {
        let k_eff = k.min(basis.dim());
        let mut pairs = lowest_unchecked::<S>(model, basis.clone(), k_eff, &cfg)?;
        let spins = resolve_total_spin(&mut pairs, &basis)?;
        let e0 = pairs[0].energy;
        let gap_tol = 1e-8 * e0.abs().max(1.0);
        if let Some(i) =
            (1..pairs.len()).find(|&i| spins[i].abs() < 1e-6 && pairs[i].energy - e0 > gap_tol)
        {
            return Ok(pairs.swap_remove(i));
        }
        if k_eff >= SINGLET_SEARCH_CAP || k_eff == basis.dim() {
            return Err(Error::SearchExhausted(format!(
                "no excited singlet among the lowest {k_eff} states"
            )));
        }
        k *= 2;
    }
}

fn dense_pairs<S: Scalar>(model: &ModelSpec, basis: Arc<SpinBasis>) -> Result<Vec<EigenPair<S>>> {
    let op = HamiltonianOp::<S>::new(model, basis.clone())?;
    let dim = op.dim();
    let (vals, vecs) = op.to_dense()?.eigh()?;
    let mut hv = vec![S::zero(); dim];
    let mut out = Vec::with_capacity(dim);
    for (l, e) in vals.into_iter().enumerate() {
        let v: Vec<S> = (0..dim).map(|r| vecs[r * dim + l]).collect();
        op.apply(&v, &mut hv);
        let residual = hv
            .iter()
            .zip(&v)
            .map(|(a, b)| (*a - b.scale(e)).norm_sqr())
            .sum::<f64>()
            .sqrt();
        out.push(EigenPair {
            energy: e,
            vector: StateVector::new(basis.clone(), v)?,
            residual,
        });
    }
    Ok(out)
}

/// Complete eigenbasis by dense diagonalization, sector by sector when the
/// model conserves `S_z`. Sorted by energy.
pub fn full_spectrum<S: Scalar>(model: &ModelSpec) -> Result<Vec<EigenPair<S>>> {
    let n = model.n_sites;
    if n > DENSE_CAP_SITES {
        return capacity(format!(
            "full spectrum limited to {DENSE_CAP_SITES} sites, got {n}"
        ));
    }
    let mut all = Vec::with_capacity(1 << n);
    if model.conserves_sz() {
        let mirror = model.is_field_free();
        let mut by_sector: Vec<Option<Vec<EigenPair<S>>>> = (0..=n).map(|_| None).collect();
        for k in 0..=n {
            if mirror && k > n / 2 {
                let src = by_sector[n - k]
                    .as_ref()
                    .expect("lower sector solved first");
                let flipped = src
                    .iter()
                    .map(|p| {
                        Ok(EigenPair {
                            energy: p.energy,
                            vector: p.vector.spin_flipped()?,
                            residual: p.residual,
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                by_sector[k] = Some(flipped);
            } else {
                by_sector[k] = Some(dense_pairs(model, SpinBasis::sector(n, k)?)?);
            }
        }
        for s in by_sector.into_iter().flatten() {
            all.extend(s);
        }
    } else {
        all = dense_pairs(model, SpinBasis::full(n)?)?;
    }
    all.sort_by(|a, b| a.energy.total_cmp(&b.energy));
    Ok(all)
}

/// Normalized Boltzmann weights `exp(-beta (E - E_min))` of `energies`.
pub fn boltzmann_weights(energies: &[f64], beta: f64) -> Vec<f64> {
    let e0 = energies.iter().copied().fold(f64::INFINITY, f64::min);
    let w: Vec<f64> = energies.iter().map(|e| (-beta * (e - e0)).exp()).collect();
    let z: f64 = w.iter().sum();
    w.into_iter().map(|x| x / z).collect()
}

/// Boltzmann weights of the lowest levels up to cumulative weight
/// [`THERMAL_CUTOFF`], as `(index into energies, weight)` in ascending energy,
/// renormalized over the kept levels. `beta` must be positive.
pub fn truncated_boltzmann(energies: &[f64], beta: f64) -> Vec<(usize, f64)> {
    let mut order: Vec<usize> = (0..energies.len()).collect();
    order.sort_by(|&a, &b| energies[a].total_cmp(&energies[b]));
    let sorted: Vec<f64> = order.iter().map(|&i| energies[i]).collect();
    let w = boltzmann_weights(&sorted, beta);
    let mut kept = Vec::new();
    let mut cumulative = 0.0;
    for (pos, &i) in order.iter().enumerate() {
        if cumulative >= THERMAL_CUTOFF {
            break;
        }
        cumulative += w[pos];
        kept.push((i, w[pos]));
    }
    let total: f64 = kept.iter().map(|(_, w)| w).sum();
    kept.iter_mut().for_each(|(_, w)| *w /= total);
    kept
}

/// Gibbs state `exp(-beta H) / Z` from a complete spectrum, truncated as in
/// [`truncated_boltzmann`]. `beta = 0` gives the implicit maximally mixed
/// state.
pub fn thermal_state_from_spectrum<S: Scalar>(
    spectrum: &[EigenPair<S>],
    beta: f64,
) -> Result<DensityOp<S>> {
    if !(beta >= 0.0) {
        return invalid(format!("beta must be nonnegative, got {beta}"));
    }
    let Some(first) = spectrum.first() else {
        return invalid("empty spectrum");
    };
    let n_sites = first.vector.n_sites();
    if beta == 0.0 {
        return DensityOp::maximally_mixed(n_sites);
    }
    let energies: Vec<f64> = spectrum.iter().map(|p| p.energy).collect();
    let kept = truncated_boltzmann(&energies, beta)
        .into_iter()
        .map(|(i, w)| (w, spectrum[i].vector.clone()))
        .collect();
    Ok(DensityOp::from_spectral_unchecked(n_sites, kept))
}

/// Gibbs state of `model` at inverse temperature `beta` (units of 1/J1).
pub fn thermal_state<S: Scalar>(model: &ModelSpec, beta: f64) -> Result<DensityOp<S>> {
    if model.n_sites > DENSE_CAP_SITES {
        return capacity(format!("thermal states limited to {DENSE_CAP_SITES} sites"));
    }
    if beta == 0.0 {
        return DensityOp::maximally_mixed(model.n_sites);
    }
    thermal_state_from_spectrum(&full_spectrum::<S>(model)?, beta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonians::{build_model, ModelParams, ModelVariant};
    use crate::spinspace::singlet_covering;

    fn ring(n: usize) -> ModelSpec {
        build_model(ModelVariant::Ring, n, &ModelParams::default()).unwrap()
    }

    #[test]
    fn two_site_ground_state() {
        let gs = ground_state::<f64>(&ring(2)).unwrap();
        assert!((gs.energy + 3.0).abs() < 1e-12);
        let singlet = singlet_covering::<f64>(2, &[(1, 2)]).unwrap();
        let ov = gs.vector.inner(&singlet).unwrap();
        assert!((ov.abs() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn two_site_full_space_levels() {
        let m = ring(2);
        let pairs = lowest_k_states_in::<f64>(
            &m,
            SpinBasis::full(2).unwrap(),
            4,
            &LanczosConfig::default(),
        )
        .unwrap();
        let e: Vec<f64> = pairs.iter().map(|p| p.energy).collect();
        for (a, b) in e.iter().zip([-3.0, 1.0, 1.0, 1.0]) {
            assert!((a - b).abs() < 1e-12, "{e:?}");
        }
        assert!(lowest_k_states::<f64>(&m, 13).is_err());
    }

    #[test]
    fn spin_of_simple_states() {
        let s = singlet_covering::<f64>(2, &[(1, 2)]).unwrap();
        assert!(total_spin_sq(&s).unwrap().abs() < 1e-14);
        let up = StateVector::<f64>::basis_state(SpinBasis::full(6).unwrap(), 0b111111).unwrap();
        assert!((total_spin_sq(&up).unwrap() - 12.0).abs() < 1e-12);
    }

    #[test]
    fn spectrum_of_pair() {
        let spec = full_spectrum::<f64>(&ring(2)).unwrap();
        let e: Vec<f64> = spec.iter().map(|p| p.energy).collect();
        assert_eq!(e.len(), 4);
        assert!((e[0] + 3.0).abs() < 1e-13 && e[1..].iter().all(|x| (x - 1.0).abs() < 1e-13));
    }

    #[test]
    fn thermal_limits() {
        let m = ring(4);
        assert!(thermal_state::<f64>(&m, 0.0).unwrap().is_maximally_mixed());
        let cold = thermal_state::<f64>(&m, 1e4).unwrap();
        assert_eq!(cold.rank(), 1);
        let w = cold.weights();
        assert!((w[0] - 1.0).abs() < 1e-12);
        let warm = thermal_state::<f64>(&m, 0.7).unwrap();
        assert!((warm.trace() - 1.0).abs() < 1e-12);
        assert!(thermal_state::<f64>(&m, -1.0).is_err());
    }

    #[test]
    fn weights_ignore_energy_offset() {
        let e = [-3.0, -1.0, 0.5, 2.0];
        let shifted: Vec<f64> = e.iter().map(|x| x + 17.0).collect();
        let a = boltzmann_weights(&e, 0.8);
        let b = boltzmann_weights(&shifted, 0.8);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-15);
        }
        assert!(a.windows(2).all(|p| p[0] >= p[1]));
    }

    #[test]
    fn excited_singlet_is_singlet() {
        let s = first_excited_singlet::<f64>(&ring(8)).unwrap();
        assert!(total_spin_sq(&s.vector).unwrap().abs() < 1e-6);
        let gs = ground_state::<f64>(&ring(8)).unwrap();
        assert!(gs.vector.inner(&s.vector).unwrap().abs() < 1e-10);
        assert!(s.energy > gs.energy + 1e-6);
    }
}
