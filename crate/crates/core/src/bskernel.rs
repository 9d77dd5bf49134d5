//! Nyström discretization of the symmetrized zero-energy kernel
//!
//! ```text
//! K(x, y) = -(1/2π) √V⁻(x) ln(k0|x-y|) √V⁻(y)
//! ```
//!
//! on the active nodes (`V⁻ > 0`). Cell weights are split symmetrically into
//! `s_i = √(w V⁻_i)`, so matrix traces are the discrete operator traces.
//! The diagonal uses the equal-area-disk mean of `ln(k0 r)`, which keeps
//! `K(k0) = K(1) - (ln k0 / 2π) s sᵀ` exact up to rounding.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use std::f64::consts::PI;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{config_err, Error, Result};
use crate::potential::SampledField;
use crate::quadrature::{cell_log_averages, compensated_sum};

#[derive(Debug, Clone, PartialEq)]
pub struct KernelMatrix {
    active: Vec<usize>,
    s: DVector<f64>,
    k0: f64,
    h: f64,
    entries: DMatrix<f64>,
}

impl KernelMatrix {
    /// Node indices (into the field's grid) carried by the matrix.
    pub fn active(&self) -> &[usize] {
        &self.active
    }

    pub fn dim(&self) -> usize {
        self.active.len()
    }

    /// `s_i = √(w V⁻_i)`.
    pub fn s(&self) -> &DVector<f64> {
        &self.s
    }

    pub fn k0(&self) -> f64 {
        self.k0
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    /// Same metadata, different matrix; used to probe the bound with synthetic kernels.
    pub fn with_entries(&self, entries: DMatrix<f64>) -> Result<Self> {
        if entries.shape() != (self.dim(), self.dim()) {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: entries.nrows() });
        }
        Ok(Self { entries, ..self.clone() })
    }

    pub fn frobenius_sq(&self) -> f64 {
        let m = self.dim();
        let cols: Vec<f64> = (0..m)
            .into_par_iter()
            .map(|j| compensated_sum(self.entries.column(j).iter().map(|x| x * x)))
            .collect();
        compensated_sum(cols)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.frobenius_sq().sqrt()
    }

    /// Raw binary dump: `M` (u64), `k0`, `h` (f64), then `M²` row-major f64,
    /// all little-endian. For debugging only; the layout is not versioned.
    pub fn write_dump(&self, path: &Path) -> Result<()> {
        let m = self.dim();
        let mut buf = Vec::with_capacity(24 + 8 * m * m);
        buf.extend_from_slice(&(m as u64).to_le_bytes());
        buf.extend_from_slice(&self.k0.to_le_bytes());
        buf.extend_from_slice(&self.h.to_le_bytes());
        for i in 0..m {
            for j in 0..m {
                buf.extend_from_slice(&self.entries[(i, j)].to_le_bytes());
            }
        }
        std::fs::File::create(path)?.write_all(&buf)?;
        Ok(())
    }
}

/// Reads a dump written by [`KernelMatrix::write_dump`]: `(k0, h, matrix)`.
pub fn read_dump(path: &Path) -> Result<(f64, f64, DMatrix<f64>)> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    let word = |k: usize| -> Result<[u8; 8]> {
        bytes
            .get(8 * k..8 * k + 8)
            .map(|b| b.try_into().expect("8 bytes"))
            .ok_or_else(|| Error::Config("truncated kernel dump".into()))
    };
    let m = u64::from_le_bytes(word(0)?) as usize;
    let k0 = f64::from_le_bytes(word(1)?);
    let h = f64::from_le_bytes(word(2)?);
    if bytes.len() != 24 + 8 * m * m {
        return config_err("kernel dump size does not match its header");
    }
    let mut mat = DMatrix::zeros(m, m);
    for i in 0..m {
        for j in 0..m {
            mat[(i, j)] = f64::from_le_bytes(word(3 + i * m + j)?);
        }
    }
    Ok((k0, h, mat))
}

/// Unit vector along `√V⁻`.
#[derive(Debug, Clone, PartialEq)]
pub struct AVector {
    pub a: DVector<f64>,
    /// `‖s‖² = Σ w V⁻`.
    pub norm_sq_s: f64,
}

fn active_weights(field: &SampledField) -> Result<(Vec<usize>, DVector<f64>)> {
    let w = field.grid().weight();
    let active: Vec<usize> = field.values().iter().enumerate().filter(|(_, v)| **v > 0.0).map(|(i, _)| i).collect();
    if active.is_empty() {
        return Err(Error::EmptyActiveSet);
    }
    let s = DVector::from_iterator(active.len(), active.iter().map(|&i| (w * field.values()[i]).sqrt()));
    Ok((active, s))
}

/// Assembles `K` for the scale `k0`.
pub fn build_k(field: &SampledField, k0: f64) -> Result<KernelMatrix> {
    if !(k0.is_finite() && k0 > 0.0) {
        return config_err(format!("scale k0 must be > 0, got {k0}"));
    }
    let (active, s) = active_weights(field)?;
    let grid = field.grid();
    let h = grid.spacing();
    let rule = cell_log_averages(h, k0);
    let m = active.len();
    let nodes: Vec<[f64; 2]> = active.iter().map(|&i| grid.node(i)).collect();
    let c = -1.0 / (2.0 * PI);
    let mut data = vec![0.0; m * m];
    // column-major; K is symmetric and each entry is computed from the
    // commutative product s_i s_j and |x_i - x_j|, so the result is exactly symmetric
    data.par_chunks_mut(m).enumerate().for_each(|(j, col)| {
        let pj = nodes[j];
        for (i, out) in col.iter_mut().enumerate() {
            let ss = s[i] * s[j];
            let l = if i == j {
                rule.diag_ln
            } else {
                let pi = nodes[i];
                (k0 * (pi[0] - pj[0]).abs().hypot((pi[1] - pj[1]).abs())).ln()
            };
            *out = c * ss * l;
        }
    });
    let entries = DMatrix::from_vec(m, m, data);
    if entries.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("kernel entries".into()));
    }
    Ok(KernelMatrix { active, s, k0, h, entries })
}

pub fn build_a(field: &SampledField) -> Result<AVector> {
    let (_, s) = active_weights(field)?;
    let norm_sq_s = compensated_sum(s.iter().map(|x| x * x));
    if !(norm_sq_s > 0.0) {
        return Err(Error::EmptyActiveSet);
    }
    Ok(AVector { a: &s / norm_sq_s.sqrt(), norm_sq_s })
}

/// `K' = K - |b><a| - |a><b| + <a|K|a> |a><a|` with `b = K a`, so that `K' a = 0`.
/// This equals `P K P` with `P = 1 - |a><a|`.
pub fn build_kprime(k: &KernelMatrix, a: &AVector) -> Result<KernelMatrix> {
    let m = k.dim();
    if a.a.len() != m {
        return Err(Error::DimensionMismatch { expected: m, found: a.a.len() });
    }
    let b = &k.entries * &a.a;
    let c = a.a.dot(&b);
    let av = &a.a;
    let mut data = vec![0.0; m * m];
    data.par_chunks_mut(m).enumerate().for_each(|(j, col)| {
        for (i, out) in col.iter_mut().enumerate() {
            let (p, q) = if i >= j { (i, j) } else { (j, i) };
            *out = k.entries[(p, q)] - (b[p] * av[q] + av[p] * b[q]) + c * (av[p] * av[q]);
        }
    });
    Ok(KernelMatrix {
        active: k.active.clone(),
        s: k.s.clone(),
        k0: k.k0,
        h: k.h,
        entries: DMatrix::from_vec(m, m, data),
    })
}

fn check_finite(mat: &DMatrix<f64>) -> Result<()> {
    if mat.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite("matrix entries".into()))
    }
}

/// Full real spectrum, descending.
pub fn symmetric_eigenvalues(matrix: &KernelMatrix) -> Result<Vec<f64>> {
    dense_eigenvalues(matrix.entries())
}

/// Full spectrum of a dense symmetric matrix, descending.
pub fn dense_eigenvalues(mat: &DMatrix<f64>) -> Result<Vec<f64>> {
    check_finite(mat)?;
    let mut ev: Vec<f64> = mat.clone().symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    Ok(ev)
}

/// Eigenpairs of a dense symmetric matrix, eigenvalues descending; eigenvectors are columns.
pub fn dense_eigen(mat: &DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
    check_finite(mat)?;
    let eig = mat.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_columns(&order.iter().map(|&i| eig.eigenvectors.column(i).into_owned()).collect::<Vec<_>>());
    Ok((values, vectors))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::{sample_negative_part, Grid2D, PotentialSpec};
    use approx::assert_relative_eq;

    fn gaussian_field(n: usize) -> SampledField {
        let grid = Grid2D::new(4.0, n).unwrap();
        sample_negative_part(&PotentialSpec::gaussian_well(5.0, 1.0, [0.0, 0.0]).unwrap(), &grid).unwrap()
    }

    #[test]
    fn single_node_kernel() {
        let grid = Grid2D::new(1.0, 8).unwrap();
        let mut v = vec![0.0; grid.len()];
        v[10] = 3.0;
        let f = SampledField::from_values(grid, v).unwrap();
        let k = build_k(&f, 2.0).unwrap();
        let rule = cell_log_averages(grid.spacing(), 2.0);
        assert_eq!(k.dim(), 1);
        assert_relative_eq!(
            k.entries()[(0, 0)],
            -(grid.weight() * 3.0) * rule.diag_ln / (2.0 * PI),
            max_relative = 1e-14
        );
    }

    #[test]
    fn scale_placement_zeroes_entry() {
        let grid = Grid2D::new(1.0, 8).unwrap();
        let mut v = vec![0.0; grid.len()];
        v[0] = 1.0;
        v[3] = 2.0;
        let f = SampledField::from_values(grid, v).unwrap();
        let d = 3.0 * grid.spacing();
        let k = build_k(&f, 1.0 / d).unwrap();
        assert!(k.entries()[(0, 1)].abs() < 1e-16);
    }

    #[test]
    fn empty_field_is_rejected() {
        let f = SampledField::zeros(Grid2D::new(1.0, 8).unwrap());
        assert!(matches!(build_k(&f, 1.0), Err(Error::EmptyActiveSet)));
        assert!(matches!(build_a(&f), Err(Error::EmptyActiveSet)));
    }

    #[test]
    fn exact_symmetry_and_shift_identity() {
        let f = gaussian_field(24);
        let k1 = build_k(&f, 1.0).unwrap();
        assert_eq!(k1.entries(), &k1.entries().transpose());
        let s = k1.s();
        let scale = k1.entries().amax();
        for &k0 in &[0.5, 2.0, 10.0] {
            let kk = build_k(&f, k0).unwrap();
            let shifted = k1.entries() - (f64::ln(k0) / (2.0 * PI)) * (s * s.transpose());
            assert!((kk.entries() - shifted).amax() <= 1e-14 * scale);
        }
    }

    #[test]
    fn a_vector_normalization() {
        let grid = Grid2D::new(1.0, 8).unwrap();
        let f = SampledField::from_values(grid, vec![2.0; grid.len()]).unwrap();
        let a = build_a(&f).unwrap();
        let m = grid.len() as f64;
        assert!(a.a.iter().all(|x| (x - 1.0 / m.sqrt()).abs() < 1e-15));

        let g = gaussian_field(32);
        let a = build_a(&g).unwrap();
        assert_relative_eq!(a.a.norm_squared(), 1.0, epsilon = 1e-14);
        let direct: f64 = g.values().iter().map(|v| v * g.grid().weight()).sum();
        assert_relative_eq!(a.norm_sq_s, direct, max_relative = 1e-14);
    }

    #[test]
    fn deflation_of_rank_one_kernel_vanishes() {
        let grid = Grid2D::new(1.0, 8).unwrap();
        let vals: Vec<f64> = (0..grid.len()).map(|i| 1.0 + (i % 5) as f64).collect();
        let f = SampledField::from_values(grid, vals).unwrap();
        let mut k = build_k(&f, 1.0).unwrap();
        k.entries = k.s() * k.s().transpose();
        let a = build_a(&f).unwrap();
        let kp = build_kprime(&k, &a).unwrap();
        assert!(kp.entries().amax() < 1e-13 * k.entries().amax());
    }

    #[test]
    fn deflation_residual_and_symmetry() {
        let f = gaussian_field(24);
        let k = build_k(&f, 1.0).unwrap();
        let a = build_a(&f).unwrap();
        let kp = build_kprime(&k, &a).unwrap();
        assert_eq!(kp.entries(), &kp.entries().transpose());
        let resid = (kp.entries() * &a.a).norm();
        assert!(resid <= 1e-12 * k.frobenius_norm(), "{resid}");
        let wrong = AVector { a: DVector::zeros(3), norm_sq_s: 1.0 };
        assert!(build_kprime(&k, &wrong).is_err());
    }

    #[test]
    fn eigenvalue_contract() {
        let grid = Grid2D::new(1.0, 8).unwrap();
        let f = SampledField::from_values(grid, vec![1.0; grid.len()]).unwrap();
        let mut k = build_k(&f, 1.0).unwrap();
        let mut d = DMatrix::zeros(k.dim(), k.dim());
        d[(0, 0)] = 3.0;
        d[(1, 1)] = 1.0;
        d[(2, 2)] = 2.0;
        k.entries = d;
        let ev = symmetric_eigenvalues(&k).unwrap();
        assert_eq!(&ev[..3], &[3.0, 2.0, 1.0]);

        let s = k.s().clone();
        k.entries = &s * s.transpose();
        let ev = symmetric_eigenvalues(&k).unwrap();
        assert_relative_eq!(ev[0], s.norm_squared(), max_relative = 1e-12);
        assert!(ev[1..].iter().all(|x| x.abs() < 1e-12));

        k.entries[(0, 0)] = f64::NAN;
        assert!(symmetric_eigenvalues(&k).is_err());
    }

    #[test]
    fn dump_round_trip() {
        let f = gaussian_field(8);
        let k = build_k(&f, 1.5).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("k.bin");
        k.write_dump(&path).unwrap();
        let (k0, h, mat) = read_dump(&path).unwrap();
        assert_eq!((k0, h), (1.5, k.spacing()));
        assert_eq!(&mat, k.entries());
    }
}
