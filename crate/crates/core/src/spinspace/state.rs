use std::sync::Arc;

use rand::Rng;

use super::basis::SpinBasis;
use crate::error::{invalid, Error, Result};
use crate::scalar::{self, Scalar};

/// Normalized amplitude vector over a [`SpinBasis`].
#[derive(Debug, Clone)]
pub struct StateVector<S> {
    basis: Arc<SpinBasis>,
    amps: Vec<S>,
}

impl<S: Scalar> StateVector<S> {
    /// Wraps `amps` after rescaling to unit norm.
    pub fn new(basis: Arc<SpinBasis>, mut amps: Vec<S>) -> Result<Self> {
        if amps.len() != basis.dim() {
            return invalid(format!(
                "amplitude count {} does not match basis dimension {}",
                amps.len(),
                basis.dim()
            ));
        }
        let n2 = scalar::norm_sqr(&amps);
        if !(n2 > 0.0) || !n2.is_finite() {
            return Err(Error::Numerical(
                "cannot normalize a zero or non-finite vector".into(),
            ));
        }
        let inv = 1.0 / n2.sqrt();
        for a in &mut amps {
            *a = a.scale(inv);
        }
        Ok(Self { basis, amps })
    }

    /// Wraps amplitudes that are already normalized by construction.
    pub(crate) fn from_normalized(basis: Arc<SpinBasis>, amps: Vec<S>) -> Self {
        debug_assert_eq!(amps.len(), basis.dim());
        Self { basis, amps }
    }

    /// Product state with amplitude 1 on `code`.
    pub fn basis_state(basis: Arc<SpinBasis>, code: u32) -> Result<Self> {
        let Some(idx) = basis.index_of(code) else {
            return invalid(format!("code {code:#b} is not in the basis"));
        };
        let mut amps = vec![S::zero(); basis.dim()];
        amps[idx] = S::one();
        Ok(Self { basis, amps })
    }

    /// Haar-like random state: independent normal amplitudes, normalized.
    pub fn random<R: Rng + ?Sized>(basis: Arc<SpinBasis>, rng: &mut R) -> Self {
        let amps = (0..basis.dim()).map(|_| S::sample_normal(rng)).collect();
        Self::new(basis, amps).expect("random vector is nonzero")
    }

    #[inline]
    pub fn basis(&self) -> &Arc<SpinBasis> {
        &self.basis
    }

    #[inline]
    pub fn n_sites(&self) -> usize {
        self.basis.n_sites()
    }

    #[inline]
    pub fn amplitudes(&self) -> &[S] {
        &self.amps
    }

    pub fn into_amplitudes(self) -> Vec<S> {
        self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        scalar::norm_sqr(&self.amps)
    }

    /// Amplitude of a basis code (zero if the code lies outside the basis).
    pub fn amplitude_of(&self, code: u32) -> S {
        self.basis
            .index_of(code)
            .map_or_else(S::zero, |i| self.amps[i])
    }

    /// `<self|other>`. States in different sectors are orthogonal; a sector
    /// state is compared with a full-space state code by code.
    pub fn inner(&self, other: &Self) -> Result<S> {
        if self.n_sites() != other.n_sites() {
            return invalid("inner product between states of different sizes");
        }
        if *self.basis == *other.basis {
            return Ok(scalar::dot(&self.amps, &other.amps));
        }
        match (self.basis.n_up(), other.basis.n_up()) {
            (Some(_), Some(_)) => Ok(S::zero()),
            (Some(_), None) => Ok(self
                .basis
                .states()
                .iter()
                .zip(&self.amps)
                .map(|(&c, a)| a.conj() * other.amps[c as usize])
                .sum()),
            (None, Some(_)) => Ok(other.inner(self)?.conj()),
            (None, None) => unreachable!("two full bases of equal size compare equal"),
        }
    }

    /// Same state expressed in the unrestricted 2^N basis.
    pub fn to_full_space(&self) -> Result<Self> {
        if self.basis.n_up().is_none() {
            return Ok(self.clone());
        }
        let full = SpinBasis::full(self.n_sites())?;
        let mut amps = vec![S::zero(); full.dim()];
        for (&c, &a) in self.basis.states().iter().zip(&self.amps) {
            amps[c as usize] = a;
        }
        Ok(Self { basis: full, amps })
    }

    /// Restricts a state to the sector `basis`, failing if amplitude leaks out.
    pub fn restrict_to(&self, basis: Arc<SpinBasis>) -> Result<Self> {
        if basis.n_sites() != self.n_sites() {
            return invalid("restriction to a basis of a different size");
        }
        let amps: Vec<S> = basis
            .states()
            .iter()
            .map(|&c| self.amplitude_of(c))
            .collect();
        let kept = scalar::norm_sqr(&amps);
        if (kept - self.norm_sqr()).abs() > 1e-10 {
            return invalid(format!(
                "state has weight {:.3e} outside the target sector",
                self.norm_sqr() - kept
            ));
        }
        Ok(Self { basis, amps })
    }

    /// Global spin flip, mapping sector `n_up` to `N - n_up`.
    pub fn spin_flipped(&self) -> Result<Self> {
        let mask = self.basis.all_sites_mask();
        let target = match self.basis.n_up() {
            Some(k) => SpinBasis::sector(self.n_sites(), self.n_sites() - k)?,
            None => self.basis.clone(),
        };
        let mut amps = vec![S::zero(); target.dim()];
        for (&c, &a) in self.basis.states().iter().zip(&self.amps) {
            amps[target.index_unchecked(c ^ mask)] = a;
        }
        Ok(Self {
            basis: target,
            amps,
        })
    }
}

/// The Neel product state with site 1 up: |up down up down ...>.
pub fn neel_state<S: Scalar>(n_sites: usize) -> Result<StateVector<S>> {
    if !n_sites.is_multiple_of(2) {
        return invalid(format!(
            "Neel state needs an even number of sites, got {n_sites}"
        ));
    }
    let code = (0..n_sites)
        .step_by(2)
        .fold(0u32, |acc, bit| acc | (1 << bit));
    let basis = SpinBasis::sector(n_sites, n_sites / 2)?;
    StateVector::basis_state(basis, code)
}

/// Product of two-site singlets (|up down> - |down up>)/sqrt(2) on `pairs`.
///
/// `pairs` must cover every site exactly once.
pub fn singlet_covering<S: Scalar>(
    n_sites: usize,
    pairs: &[(usize, usize)],
) -> Result<StateVector<S>> {
    let mut seen = vec![false; n_sites + 1];
    for &(a, b) in pairs {
        for s in [a, b] {
            if s == 0 || s > n_sites || seen[s] {
                return invalid(format!("pairs do not cover 1..={n_sites} exactly once"));
            }
            seen[s] = true;
        }
    }
    if seen.iter().skip(1).any(|&v| !v) {
        return invalid(format!("pairs do not cover 1..={n_sites} exactly once"));
    }
    let basis = SpinBasis::sector(n_sites, n_sites / 2)?;
    let amp = (0.5f64).powf(pairs.len() as f64 / 2.0);
    let amps = basis
        .states()
        .iter()
        .map(|&c| {
            let mut sign = 1.0;
            for &(a, b) in pairs {
                let ua = c >> (a - 1) & 1;
                let ub = c >> (b - 1) & 1;
                if ua == ub {
                    return S::zero();
                }
                if ua == 0 {
                    sign = -sign;
                }
            }
            S::from_real(sign * amp)
        })
        .collect();
    Ok(StateVector::from_normalized(basis, amps))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn neel_two_sites() {
        let s = neel_state::<f64>(2).unwrap();
        assert_eq!(s.amplitude_of(0b01), 1.0);
        assert_eq!(s.norm_sqr(), 1.0);
    }

    #[test]
    fn neel_four_sites() {
        let s = neel_state::<f64>(4).unwrap();
        assert_eq!(s.amplitude_of(0b0101), 1.0);
    }

    #[test]
    fn neel_odd_rejected() {
        assert!(matches!(
            neel_state::<f64>(5),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn singlet_sign_convention() {
        let s = singlet_covering::<f64>(2, &[(1, 2)]).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        // site 1 up, site 2 down -> +1/sqrt2
        assert!((s.amplitude_of(0b01) - h).abs() < 1e-15);
        assert!((s.amplitude_of(0b10) + h).abs() < 1e-15);
        assert!((s.norm_sqr() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn sector_and_full_inner_products_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let sec = SpinBasis::sector(6, 3).unwrap();
        let a = StateVector::<Complex64>::random(sec.clone(), &mut rng);
        let b = StateVector::<Complex64>::random(sec, &mut rng);
        let direct = a.inner(&b).unwrap();
        let fb = b.to_full_space().unwrap();
        let mixed = a.inner(&fb).unwrap();
        let mixed_rev = fb.inner(&a).unwrap().conj();
        assert!((direct - mixed).norm() < 1e-14);
        assert!((direct - mixed_rev).norm() < 1e-14);
        let back = fb.restrict_to(a.basis().clone()).unwrap();
        assert!((back.inner(&b).unwrap() - Complex64::new(1.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn different_sectors_are_orthogonal() {
        let a = StateVector::<f64>::basis_state(SpinBasis::sector(4, 1).unwrap(), 1).unwrap();
        let b = StateVector::<f64>::basis_state(SpinBasis::sector(4, 3).unwrap(), 7).unwrap();
        assert_eq!(a.inner(&b).unwrap(), 0.0);
        let f = a.spin_flipped().unwrap();
        assert_eq!(f.basis().n_up(), Some(3));
        assert_eq!(f.amplitude_of(0b1110), 1.0);
    }
}
