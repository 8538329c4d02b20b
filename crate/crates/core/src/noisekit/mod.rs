//! Quasi-static disorder ensembles and finite-temperature scans.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{binomial_pmf, concurrence, fidelity};
use crate::eigen::{full_spectrum, ground_state, truncated_boltzmann, EigenPair};
use crate::error::{invalid, Error, Result};
use crate::hamiltonians::ModelSpec;
use crate::scalar::{self, Scalar};
use crate::spinspace::{accumulate_reduced, DenseMatrix, DensityOp, StateVector, DENSE_CAP_SITES};
use crate::stmeasure::{
    herald_all_singlet, middle_layout, project_all_singlet, standard_layout, triplet_profile,
    PairingLayout, ProfileMeta, TripletProfile,
};

/// Default sample count for profile ensembles.
pub const DEFAULT_PROFILE_SAMPLES: usize = 200;
/// Default sample count for scalar observables.
pub const DEFAULT_SCALAR_SAMPLES: usize = 500;
/// Default early-stop threshold on the batch-to-batch relative change.
pub const DEFAULT_CONVERGENCE_TOL: f64 = 1e-3;
/// Fraction of failed samples above which an ensemble is abandoned.
pub const MAX_FAILURE_FRACTION: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DisorderKind {
    NuclearFields,
    RandomCouplings,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Observable {
    /// Triplet profile on the standard layout.
    Profile,
    /// All-singlet heralding on the middle layout and the end-pair concurrence.
    Localization,
    /// Squared overlap with the clean ground state.
    Fidelity,
}

impl fmt::Display for Observable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Profile => "profile",
            Self::Localization => "localization",
            Self::Fidelity => "fidelity",
        })
    }
}

impl FromStr for Observable {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "profile" => Ok(Self::Profile),
            "localization" | "localize" => Ok(Self::Localization),
            "fidelity" => Ok(Self::Fidelity),
            other => invalid(format!("unknown observable {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisorderConfig {
    pub kind: DisorderKind,
    /// `Bn` or `sigma_J`, in units of J1.
    pub strength: f64,
    pub samples: usize,
    pub master_seed: u64,
    /// Relative batch-to-batch change below which sampling stops early;
    /// zero disables early stopping.
    pub convergence_tol: f64,
}

impl DisorderConfig {
    pub fn new(kind: DisorderKind, strength: f64, samples: usize, master_seed: u64) -> Self {
        Self {
            kind,
            strength,
            samples,
            master_seed,
            convergence_tol: DEFAULT_CONVERGENCE_TOL,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.samples == 0 {
            return invalid("an ensemble needs at least one sample");
        }
        if !(self.strength >= 0.0 && self.strength.is_finite()) {
            return invalid(format!(
                "disorder strength must be nonnegative, got {}",
                self.strength
            ));
        }
        if !(self.convergence_tol >= 0.0) {
            return invalid("convergence tolerance must be nonnegative");
        }
        Ok(())
    }
}

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
    pub count: usize,
}

impl Estimate {
    fn from_values(values: &[f64]) -> Option<Self> {
        let n = values.len();
        if n == 0 {
            return None;
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let stderr = if n > 1 {
            let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            (var / n as f64).sqrt()
        } else {
            0.0
        };
        Some(Self {
            mean,
            stderr,
            count: n,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleResult {
    pub config: DisorderConfig,
    pub model_label: String,
    pub n_sites: usize,
    pub observables: Vec<Observable>,
    pub mean_profile: Option<TripletProfile>,
    pub profile_stderr: Option<Vec<f64>>,
    pub mean_q0: Option<Estimate>,
    pub mean_concurrence: Option<Estimate>,
    /// Squared-overlap fidelity with the clean ground state.
    pub mean_fidelity: Option<Estimate>,
    pub samples_used: usize,
    pub failures: usize,
    pub converged_early: bool,
}

impl EnsembleResult {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Per-component Gaussian fields with standard deviation `bn`.
pub fn sample_nuclear_fields<R: Rng + ?Sized>(
    n_sites: usize,
    bn: f64,
    rng: &mut R,
) -> Vec<[f64; 3]> {
    if bn == 0.0 {
        return vec![[0.0; 3]; n_sites];
    }
    (0..n_sites)
        .map(|_| {
            [0; 3].map(|_| {
                let g: f64 = rng.sample(StandardNormal);
                bn * g
            })
        })
        .collect()
}

/// Random stream of sample `index` under `master_seed`, independent of the
/// order in which samples are evaluated.
pub fn sample_rng(master_seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(index);
    rng
}

/// The model of sample `index`.
pub fn perturbed_model(config: &DisorderConfig, base: &ModelSpec, index: u64) -> Result<ModelSpec> {
    let mut rng = sample_rng(config.master_seed, index);
    match config.kind {
        DisorderKind::NuclearFields => {
            let fields = sample_nuclear_fields(base.n_sites, config.strength, &mut rng);
            base.with_fields(fields)
        }
        DisorderKind::RandomCouplings => base.with_random_couplings(config.strength, &mut rng),
    }
}

#[derive(Debug, Default, Clone)]
struct SampleValues {
    profile: Option<Vec<f64>>,
    q0: Option<f64>,
    concurrence: Option<f64>,
    fidelity: Option<f64>,
}

struct Layouts {
    standard: Option<PairingLayout>,
    middle: Option<PairingLayout>,
}

fn observe<S: Scalar>(
    psi: &StateVector<S>,
    layouts: &Layouts,
    clean: Option<&StateVector<S>>,
) -> Result<SampleValues> {
    let mut out = SampleValues::default();
    if let Some(l) = &layouts.standard {
        out.profile = Some(triplet_profile(psi, l)?.probs);
    }
    if let Some(l) = &layouts.middle {
        let h = herald_all_singlet(psi, l)?;
        out.q0 = Some(h.q0);
        if let Some(end) = &h.end_state {
            out.concurrence = Some(concurrence(end)?);
        }
    }
    if let Some(c) = clean {
        out.fidelity = Some(fidelity(psi, c)?);
    }
    Ok(out)
}

fn run_sample<S: Scalar>(
    config: &DisorderConfig,
    base: &ModelSpec,
    index: u64,
    layouts: &Layouts,
    clean: Option<&StateVector<S>>,
) -> Result<SampleValues> {
    let model = perturbed_model(config, base, index)?;
    let gs = ground_state::<S>(&model)?;
    observe(&gs.vector, layouts, clean)
}

fn relative_change(old: &[f64], new: &[f64]) -> f64 {
    let diff: f64 = old.iter().zip(new).map(|(a, b)| (a - b).abs()).sum();
    let scale: f64 = new.iter().map(|b| b.abs()).sum();
    if diff == 0.0 {
        0.0
    } else if scale == 0.0 {
        f64::INFINITY
    } else {
        diff / scale
    }
}

/// Running means of every requested quantity, flattened in a fixed order.
fn summary(values: &[SampleValues]) -> Vec<f64> {
    let mean = |xs: Vec<f64>| {
        if xs.is_empty() {
            0.0
        } else {
            xs.iter().sum::<f64>() / xs.len() as f64
        }
    };
    let mut out = Vec::new();
    if values.first().is_some_and(|v| v.profile.is_some()) {
        let len = values[0].profile.as_ref().map_or(0, |p| p.len());
        for m in 0..len {
            out.push(mean(
                values
                    .iter()
                    .filter_map(|v| v.profile.as_ref().map(|p| p[m]))
                    .collect(),
            ));
        }
    }
    out.push(mean(values.iter().filter_map(|v| v.q0).collect()));
    out.push(mean(values.iter().filter_map(|v| v.concurrence).collect()));
    out.push(mean(values.iter().filter_map(|v| v.fidelity).collect()));
    out
}

/// Disorder average of the ground-state observables of `base`.
///
/// Samples run in parallel within batches of 10% of `config.samples`; values
/// are reduced in sample order, so the result does not depend on the number
/// of workers. Sampling stops early once the relative change of every
/// running mean between consecutive batches drops below
/// `config.convergence_tol`.
pub fn ensemble_average(
    config: &DisorderConfig,
    base: &ModelSpec,
    observables: &BTreeSet<Observable>,
) -> Result<EnsembleResult> {
    config.validate()?;
    if !base.is_field_free() {
        return invalid("the base model of an ensemble must be field-free");
    }
    if observables.is_empty() {
        return invalid("no observables requested");
    }
    let n = base.n_sites;
    let layouts = Layouts {
        standard: observables
            .contains(&Observable::Profile)
            .then(|| standard_layout(n))
            .transpose()?,
        middle: observables
            .contains(&Observable::Localization)
            .then(|| middle_layout(n))
            .transpose()?,
    };
    let want_fidelity = observables.contains(&Observable::Fidelity);

    let complex = config.kind == DisorderKind::NuclearFields && config.strength > 0.0;
    let clean_real = (want_fidelity && !complex)
        .then(|| ground_state::<f64>(base))
        .transpose()?;
    let clean_complex = (want_fidelity && complex)
        .then(|| ground_state::<Complex64>(base))
        .transpose()?;

    let batch = (config.samples / 10).max(1);
    let mut values: Vec<SampleValues> = Vec::with_capacity(config.samples);
    let mut failures = 0usize;
    let mut previous: Option<Vec<f64>> = None;
    let mut converged_early = false;
    let mut next = 0usize;
    while next < config.samples {
        let end = (next + batch).min(config.samples);
        let results: Vec<Result<SampleValues>> = (next..end)
            .into_par_iter()
            .map(|i| {
                if complex {
                    run_sample::<Complex64>(
                        config,
                        base,
                        i as u64,
                        &layouts,
                        clean_complex.as_ref().map(|g| &g.vector),
                    )
                } else {
                    run_sample::<f64>(
                        config,
                        base,
                        i as u64,
                        &layouts,
                        clean_real.as_ref().map(|g| &g.vector),
                    )
                }
            })
            .collect();
        for (offset, r) in results.into_iter().enumerate() {
            match r {
                Ok(v) => values.push(v),
                Err(e @ Error::Convergence { .. }) => {
                    log::warn!("sample {} skipped: {e}", next + offset);
                    failures += 1;
                }
                Err(e) => return Err(e),
            }
        }
        if failures as f64 > MAX_FAILURE_FRACTION * config.samples as f64 {
            return Err(Error::Ensemble(format!(
                "{failures} of {end} samples failed to converge"
            )));
        }
        next = end;
        if values.is_empty() {
            continue;
        }
        let current = summary(&values);
        if let Some(prev) = &previous {
            if config.convergence_tol > 0.0 && next < config.samples {
                let stable = prev
                    .iter()
                    .zip(&current)
                    .all(|(a, b)| relative_change(&[*a], &[*b]) < config.convergence_tol);
                if stable {
                    converged_early = true;
                    break;
                }
            }
        }
        previous = Some(current);
    }
    if values.is_empty() {
        return Err(Error::Ensemble("no sample succeeded".into()));
    }

    let (mean_profile, profile_stderr) = match &layouts.standard {
        Some(l) => {
            let len = l.len() + 1;
            let per_m: Vec<Estimate> = (0..len)
                .map(|m| {
                    let xs: Vec<f64> = values
                        .iter()
                        .filter_map(|v| v.profile.as_ref().map(|p| p[m]))
                        .collect();
                    Estimate::from_values(&xs).expect("every sample has a profile")
                })
                .collect();
            let meta = ProfileMeta {
                label: base.label.clone(),
                n_sites: n,
                pairs: l.pairs().to_vec(),
                bn: (config.kind == DisorderKind::NuclearFields).then_some(config.strength),
                sigma_j: (config.kind == DisorderKind::RandomCouplings).then_some(config.strength),
                seed: Some(config.master_seed),
                ..Default::default()
            };
            (
                Some(TripletProfile {
                    probs: per_m.iter().map(|e| e.mean).collect(),
                    meta,
                }),
                Some(per_m.iter().map(|e| e.stderr).collect()),
            )
        }
        None => (None, None),
    };
    let collect =
        |f: fn(&SampleValues) -> Option<f64>| -> Vec<f64> { values.iter().filter_map(f).collect() };
    Ok(EnsembleResult {
        config: config.clone(),
        model_label: base.label.clone(),
        n_sites: n,
        observables: observables.iter().copied().collect(),
        mean_profile,
        profile_stderr,
        mean_q0: Estimate::from_values(&collect(|v| v.q0)),
        mean_concurrence: Estimate::from_values(&collect(|v| v.concurrence)),
        mean_fidelity: Estimate::from_values(&collect(|v| v.fidelity)),
        samples_used: values.len(),
        failures,
        converged_early,
    })
}

/// Observables of one thermal state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThermalPoint {
    pub beta: f64,
    pub profile: Option<TripletProfile>,
    pub q0: Option<f64>,
    /// End-pair concurrence after all-singlet heralding; `None` when the
    /// heralding probability vanishes.
    pub concurrence: Option<f64>,
}

/// Thermal observables of `model` over `betas`, from one full spectrum.
///
/// Per-eigenvector profiles and heralded end-pair matrices are computed once
/// and reweighted for every temperature.
pub fn thermal_scan<S: Scalar>(
    model: &ModelSpec,
    betas: &[f64],
    observables: &BTreeSet<Observable>,
) -> Result<Vec<ThermalPoint>> {
    if model.n_sites > DENSE_CAP_SITES {
        return crate::error::capacity(format!("thermal scans limited to {DENSE_CAP_SITES} sites"));
    }
    if let Some(b) = betas.iter().find(|b| !(**b >= 0.0)) {
        return invalid(format!("beta must be nonnegative, got {b}"));
    }
    if observables.contains(&Observable::Fidelity) {
        return invalid("fidelity is not a thermal observable");
    }
    let n = model.n_sites;
    let standard = observables
        .contains(&Observable::Profile)
        .then(|| standard_layout(n))
        .transpose()?;
    let middle = observables
        .contains(&Observable::Localization)
        .then(|| middle_layout(n))
        .transpose()?;
    let spectrum: Vec<EigenPair<S>> = full_spectrum(model)?;
    let energies: Vec<f64> = spectrum.iter().map(|p| p.energy).collect();
    let plans: Vec<Vec<(usize, f64)>> = betas
        .iter()
        .map(|&b| {
            if b == 0.0 {
                Vec::new()
            } else {
                truncated_boltzmann(&energies, b)
            }
        })
        .collect();
    let needed = plans
        .iter()
        .flat_map(|p| p.iter().map(|(i, _)| *i))
        .max()
        .map_or(0, |m| m + 1);

    let per_vector: Vec<(Option<Vec<f64>>, Option<(f64, DenseMatrix<S>)>)> = spectrum[..needed]
        .par_iter()
        .map(|pair| -> Result<_> {
            let profile = standard
                .as_ref()
                .map(|l| triplet_profile(&pair.vector, l))
                .transpose()?
                .map(|p| p.probs);
            let herald = match &middle {
                Some(l) => {
                    let u = project_all_singlet(&pair.vector, l)?;
                    let mut rho = DenseMatrix::zeros(4);
                    accumulate_reduced(pair.vector.basis(), &u, l.unmeasured(), 1.0, &mut rho);
                    Some((scalar::norm_sqr(&u), rho))
                }
                None => None,
            };
            Ok((profile, herald))
        })
        .collect::<Result<_>>()?;

    betas
        .iter()
        .zip(&plans)
        .map(|(&beta, plan)| {
            let mut point = ThermalPoint {
                beta,
                profile: None,
                q0: None,
                concurrence: None,
            };
            if beta == 0.0 {
                let mm = DensityOp::<S>::maximally_mixed(n)?;
                if let Some(l) = &standard {
                    point.profile = Some(triplet_profile(&mm, l)?);
                }
                if let Some(l) = &middle {
                    let h = herald_all_singlet(&mm, l)?;
                    point.q0 = Some(h.q0);
                    point.concurrence = h.end_state.as_ref().map(concurrence).transpose()?;
                }
            } else {
                if let Some(l) = &standard {
                    let mut probs = vec![0.0; l.len() + 1];
                    for &(i, w) in plan {
                        let p = per_vector[i].0.as_ref().expect("profile computed");
                        probs.iter_mut().zip(p).for_each(|(a, b)| *a += w * b);
                    }
                    let total: f64 = probs.iter().sum();
                    probs.iter_mut().for_each(|p| *p /= total);
                    point.profile = Some(TripletProfile {
                        probs,
                        meta: ProfileMeta {
                            label: model.label.clone(),
                            n_sites: n,
                            pairs: l.pairs().to_vec(),
                            beta: Some(beta),
                            ..Default::default()
                        },
                    });
                }
                if middle.is_some() {
                    let mut q0 = 0.0;
                    let mut rho = DenseMatrix::<S>::zeros(4);
                    for &(i, w) in plan {
                        let (q, m) = per_vector[i].1.as_ref().expect("herald computed");
                        q0 += w * q;
                        for r in 0..4 {
                            for c in 0..4 {
                                *rho.get_mut(r, c) += m.get(r, c).scale(w);
                            }
                        }
                    }
                    point.q0 = Some(q0);
                    if q0 >= crate::stmeasure::HERALD_FLOOR {
                        rho.scale(1.0 / q0);
                        point.concurrence = Some(concurrence(&DensityOp::from_dense(2, &rho)?)?);
                    }
                }
            }
            Ok(point)
        })
        .collect()
}

/// Binomial(M, 3/4), the infinite-temperature profile over `M` pairs.
pub fn classical_limit(n_pairs: usize) -> Vec<f64> {
    binomial_pmf(n_pairs, 0.75)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonians::{build_model, ModelParams, ModelVariant};

    #[test]
    fn zero_strength_fields() {
        let mut rng = sample_rng(1, 0);
        assert_eq!(sample_nuclear_fields(4, 0.0, &mut rng), vec![[0.0; 3]; 4]);
    }

    #[test]
    fn field_moments() {
        let mut rng = sample_rng(7, 0);
        let bn = 0.3;
        let draws: Vec<[f64; 3]> = (0..10_000)
            .flat_map(|_| sample_nuclear_fields(1, bn, &mut rng))
            .collect();
        for c in 0..3 {
            let xs: Vec<f64> = draws.iter().map(|f| f[c]).collect();
            let mean = xs.iter().sum::<f64>() / xs.len() as f64;
            let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (xs.len() - 1) as f64;
            assert!(mean.abs() < 4.0 * bn / (3.0f64 * 10_000.0).sqrt());
            assert!((var / (bn * bn) - 1.0).abs() < 0.1);
        }
    }

    #[test]
    fn streams_are_distinct_and_stable() {
        let a: u64 = sample_rng(5, 0).gen();
        let b: u64 = sample_rng(5, 1).gen();
        let a2: u64 = sample_rng(5, 0).gen();
        assert_ne!(a, b);
        assert_eq!(a, a2);
    }

    #[test]
    fn clean_ensemble_has_no_spread() {
        let base = build_model(ModelVariant::Open, 6, &ModelParams::default()).unwrap();
        let obs: BTreeSet<Observable> = [
            Observable::Localization,
            Observable::Fidelity,
            Observable::Profile,
        ]
        .into();
        for kind in [DisorderKind::NuclearFields, DisorderKind::RandomCouplings] {
            let cfg = DisorderConfig::new(kind, 0.0, 20, 9);
            let r = ensemble_average(&cfg, &base, &obs).unwrap();
            assert_eq!(r.mean_fidelity.unwrap().stderr, 0.0);
            assert!((r.mean_fidelity.unwrap().mean - 1.0).abs() < 1e-12);
            assert_eq!(r.mean_q0.unwrap().stderr, 0.0);
            assert!(r.profile_stderr.unwrap().iter().all(|s| *s == 0.0));
            assert!(r.converged_early);
        }
    }

    #[test]
    fn relative_change_edges() {
        assert_eq!(relative_change(&[0.0], &[0.0]), 0.0);
        assert_eq!(relative_change(&[1.0], &[0.0]), f64::INFINITY);
        assert!((relative_change(&[1.0], &[2.0]) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn thermal_scan_limits() {
        let m = build_model(ModelVariant::Ring, 6, &ModelParams::default()).unwrap();
        let obs: BTreeSet<Observable> = [Observable::Profile, Observable::Localization].into();
        let pts = thermal_scan::<f64>(&m, &[0.0, 1e4], &obs).unwrap();
        assert_eq!(pts[0].profile.as_ref().unwrap().probs, classical_limit(3));
        let gs = ground_state::<f64>(&m).unwrap();
        let p = triplet_profile(&gs.vector, &standard_layout(6).unwrap()).unwrap();
        for (a, b) in pts[1].profile.as_ref().unwrap().probs.iter().zip(&p.probs) {
            assert!((a - b).abs() < 1e-10);
        }
        assert!((pts[1].concurrence.unwrap() - 1.0).abs() < 1e-9);
    }
}
