use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;

use super::model::ModelSpec;
use crate::error::{capacity, invalid, Result};
use crate::scalar::Scalar;
use crate::spinspace::{DenseMatrix, SpinBasis, StateVector};

/// Rows per parallel task in [`HamiltonianOp::apply`].
const ROW_CHUNK: usize = 4096;

/// A Hermitian linear map on amplitude vectors of a fixed basis.
pub trait LinearOperator<S: Scalar>: Sync {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[S], y: &mut [S]);
}

/// Matrix-free Hamiltonian bound to one basis.
///
/// Each output row is gathered independently, so the result does not depend
/// on how rows are split between threads.
#[derive(Debug, Clone)]
pub struct HamiltonianOp<S> {
    basis: Arc<SpinBasis>,
    diag: Vec<f64>,
    /// (two-site mask, 2J) per bond
    exchange: Vec<(u32, f64)>,
    /// (site bit, coefficient when the site is up, coefficient when down)
    flips: Vec<(u32, S, S)>,
}

impl<S: Scalar> HamiltonianOp<S> {
    pub fn new(model: &ModelSpec, basis: Arc<SpinBasis>) -> Result<Self> {
        model.validate()?;
        if basis.n_sites() != model.n_sites {
            return invalid(format!(
                "basis has {} sites but the model has {}",
                basis.n_sites(),
                model.n_sites
            ));
        }
        if basis.n_up().is_some() && !model.conserves_sz() {
            return invalid("transverse fields couple magnetization sectors; use the full space");
        }
        if model.needs_complex() && !S::IS_COMPLEX {
            return invalid("fields with a y component need complex amplitudes");
        }

        let exchange: Vec<(u32, f64)> = model
            .bonds
            .iter()
            .map(|b| ((1u32 << (b.i - 1)) | (1u32 << (b.j - 1)), 2.0 * b.coupling))
            .collect();

        let diag = basis
            .states()
            .par_iter()
            .map(|&c| {
                let mut d = 0.0;
                for b in &model.bonds {
                    let same = (c >> (b.i - 1) & 1) == (c >> (b.j - 1) & 1);
                    d += if same { b.coupling } else { -b.coupling };
                }
                for (s, f) in model.fields.iter().enumerate() {
                    if f[2] != 0.0 {
                        d += if c >> s & 1 == 1 { f[2] } else { -f[2] };
                    }
                }
                d
            })
            .collect();

        let mut flips = Vec::new();
        for (s, f) in model.fields.iter().enumerate() {
            if f[0] == 0.0 && f[1] == 0.0 {
                continue;
            }
            // <c| Bx sx + By sy |c ^ bit>: the site is up in c -> Bx - i By
            let up = S::from_complex(Complex64::new(f[0], -f[1]));
            let down = S::from_complex(Complex64::new(f[0], f[1]));
            let (Some(up), Some(down)) = (up, down) else {
                return invalid("fields with a y component need complex amplitudes");
            };
            flips.push((1u32 << s, up, down));
        }

        Ok(Self {
            basis,
            diag,
            exchange,
            flips,
        })
    }

    pub fn basis(&self) -> &Arc<SpinBasis> {
        &self.basis
    }

    #[inline]
    fn row(&self, i: usize, x: &[S]) -> S {
        let c = self.basis.code(i);
        let mut acc = x[i].scale(self.diag[i]);
        for &(mask, two_j) in &self.exchange {
            let t = c & mask;
            if t != 0 && t != mask {
                acc += x[self.basis.index_unchecked(c ^ mask)].scale(two_j);
            }
        }
        // transverse fields only exist in the full space, where index == code
        for &(bit, up, down) in &self.flips {
            let coef = if c & bit != 0 { up } else { down };
            acc += coef * x[(c ^ bit) as usize];
        }
        acc
    }

    /// Dense matrix of the operator, assembled from its columns.
    pub fn to_dense(&self) -> Result<DenseMatrix<S>> {
        let dim = self.basis.dim();
        if dim > 1 << 14 {
            return capacity(format!("dense Hamiltonian of dimension {dim} exceeds 2^14"));
        }
        let mut m = DenseMatrix::zeros(dim);
        let mut e = vec![S::zero(); dim];
        let mut col = vec![S::zero(); dim];
        for j in 0..dim {
            e[j] = S::one();
            self.apply(&e, &mut col);
            e[j] = S::zero();
            for (i, v) in col.iter().enumerate() {
                *m.get_mut(i, j) = *v;
            }
        }
        Ok(m)
    }
}

impl<S: Scalar> LinearOperator<S> for HamiltonianOp<S> {
    fn dim(&self) -> usize {
        self.basis.dim()
    }

    fn apply(&self, x: &[S], y: &mut [S]) {
        debug_assert_eq!(x.len(), self.dim());
        debug_assert_eq!(y.len(), self.dim());
        y.par_chunks_mut(ROW_CHUNK)
            .enumerate()
            .for_each(|(ci, chunk)| {
                let base = ci * ROW_CHUNK;
                for (k, yi) in chunk.iter_mut().enumerate() {
                    *yi = self.row(base + k, x);
                }
            });
    }
}

/// `H v` for a single vector (unnormalized result, in `v`'s basis order).
pub fn matvec<S: Scalar>(model: &ModelSpec, v: &StateVector<S>) -> Result<Vec<S>> {
    let op = HamiltonianOp::new(model, v.basis().clone())?;
    let mut out = vec![S::zero(); v.amplitudes().len()];
    op.apply(v.amplitudes(), &mut out);
    Ok(out)
}

/// `<v|H|v>`.
pub fn energy<S: Scalar>(model: &ModelSpec, v: &StateVector<S>) -> Result<f64> {
    let hv = matvec(model, v)?;
    Ok(crate::scalar::dot(v.amplitudes(), &hv).re())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonians::{build_model, ModelParams, ModelVariant};
    use crate::spinspace::singlet_covering;

    #[test]
    fn singlet_eigenvalue() {
        let m = build_model(ModelVariant::Ring, 2, &ModelParams::default()).unwrap();
        let s = singlet_covering::<f64>(2, &[(1, 2)]).unwrap();
        let hv = matvec(&m, &s).unwrap();
        for (a, b) in hv.iter().zip(s.amplitudes()) {
            assert!((a + 3.0 * b).abs() < 1e-15);
        }
    }

    #[test]
    fn triplet_eigenvalue() {
        let m = build_model(ModelVariant::Open, 2, &ModelParams::default()).unwrap();
        let up = StateVector::<f64>::basis_state(SpinBasis::full(2).unwrap(), 0b11).unwrap();
        let hv = matvec(&m, &up).unwrap();
        assert_eq!(hv, vec![0.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn sector_and_type_checks() {
        let m = build_model(ModelVariant::Open, 2, &ModelParams::default()).unwrap();
        let mx = m.with_fields(vec![[0.1, 0.0, 0.0], [0.0; 3]]).unwrap();
        let sec = SpinBasis::sector(2, 1).unwrap();
        assert!(HamiltonianOp::<f64>::new(&mx, sec.clone()).is_err());
        assert!(HamiltonianOp::<f64>::new(&mx, SpinBasis::full(2).unwrap()).is_ok());
        let my = m.with_fields(vec![[0.0, 0.1, 0.0], [0.0; 3]]).unwrap();
        assert!(HamiltonianOp::<f64>::new(&my, SpinBasis::full(2).unwrap()).is_err());
        assert!(HamiltonianOp::<Complex64>::new(&my, SpinBasis::full(2).unwrap()).is_ok());
        assert!(HamiltonianOp::<f64>::new(&m, SpinBasis::full(3).unwrap()).is_err());
        let mz = m.with_fields(vec![[0.0, 0.0, 0.3], [0.0; 3]]).unwrap();
        assert!(HamiltonianOp::<f64>::new(&mz, sec).is_ok());
    }

    #[test]
    fn zero_fields_change_nothing() {
        let m = build_model(ModelVariant::Ring, 6, &ModelParams::default()).unwrap();
        let m0 = m.with_fields(vec![[0.0; 3]; 6]).unwrap();
        let full = SpinBasis::full(6).unwrap();
        let a = HamiltonianOp::<f64>::new(&m, full.clone())
            .unwrap()
            .to_dense()
            .unwrap();
        let b = HamiltonianOp::<f64>::new(&m0, full)
            .unwrap()
            .to_dense()
            .unwrap();
        assert_eq!(a, b);
    }
}
