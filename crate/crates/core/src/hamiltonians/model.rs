use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Exchange term `coupling * sigma_i . sigma_j` between sites `i < j` (1-based).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "(usize, usize, f64)", into = "(usize, usize, f64)")]
pub struct Bond {
    pub i: usize,
    pub j: usize,
    pub coupling: f64,
}

impl From<(usize, usize, f64)> for Bond {
    fn from((i, j, coupling): (usize, usize, f64)) -> Self {
        Self { i, j, coupling }
    }
}

impl From<Bond> for (usize, usize, f64) {
    fn from(b: Bond) -> Self {
        (b.i, b.j, b.coupling)
    }
}

/// Hamiltonian families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelVariant {
    /// Uniform periodic chain.
    Ring,
    /// Uniform open chain.
    Open,
    /// Periodic chain with next-nearest-neighbour bonds of strength `J2`.
    J1J2Ring,
    /// Open chain whose two end bonds carry `Je`.
    EndWeakened,
    /// Open chain with couplings alternating by `delta`.
    Alternating,
}

impl ModelVariant {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelVariant::Ring => "ring",
            ModelVariant::Open => "open",
            ModelVariant::J1J2Ring => "j1j2_ring",
            ModelVariant::EndWeakened => "end_weakened",
            ModelVariant::Alternating => "alternating",
        }
    }
}

impl fmt::Display for ModelVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "ring" | "h0_ring" => ModelVariant::Ring,
            "open" | "h0" => ModelVariant::Open,
            "j1j2_ring" | "j1j2" => ModelVariant::J1J2Ring,
            "end_weakened" | "he" => ModelVariant::EndWeakened,
            "alternating" | "ha" => ModelVariant::Alternating,
            other => return invalid(format!("unknown model variant '{other}'")),
        })
    }
}

/// Couplings for [`build_model`]; all energies in units of `J1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub j1: f64,
    pub j2: Option<f64>,
    pub je: Option<f64>,
    pub delta: Option<f64>,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self {
            j1: 1.0,
            j2: None,
            je: None,
            delta: None,
        }
    }
}

impl ModelParams {
    pub fn j2(j2: f64) -> Self {
        Self {
            j2: Some(j2),
            ..Self::default()
        }
    }

    pub fn je(je: f64) -> Self {
        Self {
            je: Some(je),
            ..Self::default()
        }
    }

    pub fn delta(delta: f64) -> Self {
        Self {
            delta: Some(delta),
            ..Self::default()
        }
    }
}

/// Weighted coupling graph plus per-site field vectors.
///
/// The Hamiltonian is `sum_b J_b sigma_i . sigma_j + sum_i B_i . sigma_i` in
/// the Pauli convention.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub n_sites: usize,
    pub bonds: Vec<Bond>,
    pub fields: Vec<[f64; 3]>,
    pub label: String,
}

impl ModelSpec {
    /// Model from an explicit bond list. Bonds are normalized to `i < j`.
    pub fn from_bonds(n_sites: usize, bonds: Vec<Bond>, label: impl Into<String>) -> Result<Self> {
        let bonds = bonds
            .into_iter()
            .map(|b| Bond {
                i: b.i.min(b.j),
                j: b.i.max(b.j),
                coupling: b.coupling,
            })
            .collect();
        let spec = Self {
            n_sites,
            bonds,
            fields: vec![[0.0; 3]; n_sites],
            label: label.into(),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_sites == 0 || self.n_sites > crate::spinspace::MAX_SITES {
            return invalid(format!("n_sites = {} out of range", self.n_sites));
        }
        let mut seen = BTreeSet::new();
        for b in &self.bonds {
            if !(1 <= b.i && b.i < b.j && b.j <= self.n_sites) {
                return invalid(format!(
                    "bond ({}, {}) violates 1 <= i < j <= {}",
                    b.i, b.j, self.n_sites
                ));
            }
            if !b.coupling.is_finite() {
                return invalid(format!("bond ({}, {}) has non-finite coupling", b.i, b.j));
            }
            if !seen.insert((b.i, b.j)) {
                return invalid(format!("duplicate bond ({}, {})", b.i, b.j));
            }
        }
        if self.fields.len() != self.n_sites {
            return invalid(format!(
                "{} field vectors for {} sites",
                self.fields.len(),
                self.n_sites
            ));
        }
        if self.fields.iter().flatten().any(|x| !x.is_finite()) {
            return invalid("non-finite field component");
        }
        Ok(())
    }

    pub fn is_field_free(&self) -> bool {
        self.fields.iter().all(|f| f.iter().all(|&x| x == 0.0))
    }

    /// `true` when every field points along z, so total S^z is conserved.
    pub fn conserves_sz(&self) -> bool {
        self.fields.iter().all(|f| f[0] == 0.0 && f[1] == 0.0)
    }

    /// `true` when some field has a y component (complex matrix elements).
    pub fn needs_complex(&self) -> bool {
        self.fields.iter().any(|f| f[1] != 0.0)
    }

    /// Copy with the given per-site fields.
    pub fn with_fields(&self, fields: Vec<[f64; 3]>) -> Result<Self> {
        if fields.len() != self.n_sites {
            return invalid(format!(
                "{} field vectors supplied for {} sites",
                fields.len(),
                self.n_sites
            ));
        }
        let spec = Self {
            fields,
            ..self.clone()
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Copy with every coupling shifted by `sigma_j * g`, `g ~ N(0, 1)`, drawn
    /// in bond order from `rng`.
    pub fn with_random_couplings<R: Rng + ?Sized>(
        &self,
        sigma_j: f64,
        rng: &mut R,
    ) -> Result<Self> {
        if !(sigma_j >= 0.0) {
            return invalid(format!("sigma_j must be nonnegative, got {sigma_j}"));
        }
        let mut spec = self.clone();
        if sigma_j == 0.0 {
            return Ok(spec);
        }
        for b in &mut spec.bonds {
            let g: f64 = rng.sample(StandardNormal);
            b.coupling += sigma_j * g;
        }
        Ok(spec)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: Self = serde_json::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }
}

fn push_unique(bonds: &mut Vec<Bond>, a: usize, b: usize, coupling: f64) {
    let (i, j) = (a.min(b), a.max(b));
    if i != j && !bonds.iter().any(|x| x.i == i && x.j == j) {
        bonds.push(Bond { i, j, coupling });
    }
}

/// Builds one of the standard Hamiltonians on an even number of sites.
///
/// Periodic bond sets are deduplicated, so a two-site ring is a single bond.
pub fn build_model(
    variant: ModelVariant,
    n_sites: usize,
    params: &ModelParams,
) -> Result<ModelSpec> {
    if n_sites == 0 || !n_sites.is_multiple_of(2) {
        return invalid(format!(
            "models need an even number of sites, got {n_sites}"
        ));
    }
    let n = n_sites;
    let j1 = params.j1;
    let mut bonds = Vec::new();
    let label;
    match variant {
        ModelVariant::Ring => {
            for i in 1..=n {
                push_unique(&mut bonds, i, i % n + 1, j1);
            }
            label = "ring".to_string();
        }
        ModelVariant::Open => {
            for i in 1..n {
                push_unique(&mut bonds, i, i + 1, j1);
            }
            label = "open".to_string();
        }
        ModelVariant::J1J2Ring => {
            let j2 = params
                .j2
                .ok_or_else(|| Error::InvalidArgument("j1j2_ring requires J2".into()))?;
            for i in 1..=n {
                push_unique(&mut bonds, i, i % n + 1, j1);
            }
            for i in 1..=n {
                push_unique(&mut bonds, i, (i + 1) % n + 1, j2);
            }
            label = format!("j1j2_ring(J2={j2})");
        }
        ModelVariant::EndWeakened => {
            let je = params
                .je
                .ok_or_else(|| Error::InvalidArgument("end_weakened requires Je".into()))?;
            for i in 1..n {
                let j = if i == 1 || i == n - 1 { je } else { j1 };
                push_unique(&mut bonds, i, i + 1, j);
            }
            label = format!("end_weakened(Je={je})");
        }
        ModelVariant::Alternating => {
            let delta = params
                .delta
                .ok_or_else(|| Error::InvalidArgument("alternating requires delta".into()))?;
            // Bond (i, i+1) carries J1 [1 + (-1)^i delta]: the even bonds
            // (2,3), (4,5), ... probed by the middle pairing are the strong ones.
            for i in 1..n {
                let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
                push_unique(&mut bonds, i, i + 1, j1 * (1.0 + sign * delta));
            }
            label = format!("alternating(delta={delta})");
        }
    }
    ModelSpec::from_bonds(n, bonds, label)
}
