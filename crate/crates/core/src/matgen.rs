//! Test-matrix generation and raw matrix file I/O.
//!
//! Matrices with a prescribed spectrum are built as `A = Qᴴ·D·Q` where `D`
//! carries the requested eigenvalues and `Q` is the orthonormal factor of
//! the QR factorization of a seeded Gaussian square matrix, then
//! symmetrized exactly. The generator is fixed (ChaCha12 keyed as
//! documented on each function) so every artifact is bit-reproducible.
//!
//! The file format is headerless: column-major elements, little-endian,
//! complex values interleaved re,im. Dimensions and the scalar kind are
//! supplied out of band.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::error::{Error, Result};
use crate::kernels::{gemm, householder_qr, Op};
use crate::matrix::DenseMatrix;
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpectrumKind {
    Uniform,
}

/// Requested spectrum for an artificial Hermitian matrix.
#[derive(Clone, Copy, Debug)]
pub struct SpectrumSpec {
    pub kind: SpectrumKind,
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl SpectrumSpec {
    /// Eigenvalues placed at `lo + k·(hi−lo)/(N−1)`, endpoints included.
    /// `lo == hi` is allowed as the degenerate constant spectrum.
    pub fn uniform(lo: f64, hi: f64, n: usize) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite()) || lo > hi {
            return Err(Error::Config(format!(
                "invalid spectrum interval [{lo}, {hi}]"
            )));
        }
        if n == 0 {
            return Err(Error::Config("matrix size must be at least 1".into()));
        }
        Ok(Self {
            kind: SpectrumKind::Uniform,
            lo,
            hi,
            n,
        })
    }

    /// The prescribed eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let n = self.n;
        if n == 1 {
            return vec![self.lo];
        }
        let step = (self.hi - self.lo) / (n - 1) as f64;
        (0..n).map(|k| self.lo + k as f64 * step).collect()
    }
}

fn gaussian_matrix<T: Scalar>(rng: &mut ChaCha12Rng, rows: usize, cols: usize) -> DenseMatrix<T> {
    DenseMatrix::from_fn(rows, cols, |_, _| T::standard_normal(rng))
}

/// Exact symmetrization `A ← (A + Aᴴ)/2`; the diagonal becomes real.
fn hermitianize<T: Scalar>(a: &mut DenseMatrix<T>) {
    let n = a.rows();
    for j in 0..n {
        *a.at_mut(j, j) = T::from_re(a.at(j, j).re());
        for i in 0..j {
            let v = (a.at(i, j) + a.at(j, i).conj()).scale(0.5);
            *a.at_mut(i, j) = v;
            *a.at_mut(j, i) = v.conj();
        }
    }
}

/// Dense Hermitian matrix with the spectrum of `spec`.
///
/// RNG stream: `ChaCha12Rng::seed_from_u64(seed)`, Gaussian entries in
/// column-major fill order.
pub fn generate<T: Scalar>(spec: &SpectrumSpec, seed: u64) -> DenseMatrix<T> {
    let n = spec.n;
    let evals = spec.eigenvalues();
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let g = gaussian_matrix::<T>(&mut rng, n, n);
    let q = householder_qr(g.view());
    // M = D·Q (scale row k by λ_k), then A = Qᴴ·M.
    let mut m = q.clone();
    for j in 0..n {
        for i in 0..n {
            *m.at_mut(i, j) = m.at(i, j).scale(evals[i]);
        }
    }
    let mut a = DenseMatrix::zeros(n, n);
    gemm(T::ONE, q.view(), Op::ConjTrans, m.view(), Op::None, T::ZERO, &mut a.view_mut());
    hermitianize(&mut a);
    a
}

/// Local block of the random initial vectors.
///
/// The stream is keyed by `(seed, col_rank)` — the rank's member index
/// within its column communicator — so blocks differ across the members
/// of one column communicator but are identical for the same `col_rank`
/// in every column communicator.
pub fn random_initial_vectors<T: Scalar>(
    n_r: usize,
    n_e: usize,
    col_rank: usize,
    seed: u64,
) -> DenseMatrix<T> {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&(col_rank as u64).to_le_bytes());
    key[16..24].copy_from_slice(b"initvec\0");
    let mut rng = ChaCha12Rng::from_seed(key);
    gaussian_matrix(&mut rng, n_r, n_e)
}

/// Writes `m` in the raw format (column-major, little-endian).
pub fn write_matrix<T: Scalar>(m: &DenseMatrix<T>, path: &Path) -> Result<()> {
    let f = File::create(path)?;
    let mut w = BufWriter::new(f);
    let mut buf = vec![0u8; T::ELEM_BYTES];
    for x in m.data() {
        x.write_le(&mut buf);
        w.write_all(&buf)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a `rows×cols` matrix written by [`write_matrix`]. The file byte
/// length must match exactly.
pub fn read_matrix<T: Scalar>(path: &Path, rows: usize, cols: usize) -> Result<DenseMatrix<T>> {
    let f = File::open(path)?;
    let expected = (rows * cols * T::ELEM_BYTES) as u64;
    let found = f.metadata()?.len();
    if found != expected {
        return Err(Error::FileSize {
            path: path.display().to_string(),
            expected,
            found,
        });
    }
    let mut r = BufReader::new(f);
    let mut buf = vec![0u8; T::ELEM_BYTES];
    let mut data = Vec::with_capacity(rows * cols);
    for _ in 0..rows * cols {
        r.read_exact(&mut buf)?;
        data.push(T::read_le(&buf));
    }
    Ok(DenseMatrix::from_col_major(rows, cols, data))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::heevd;
    use num_complex::Complex64;

    #[test]
    fn degenerate_spectrum_gives_identity() {
        let spec = SpectrumSpec::uniform(1.0, 1.0, 12).unwrap();
        let a = generate::<f64>(&spec, 3);
        for j in 0..12 {
            for i in 0..12 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((a.at(i, j) - want).abs() < 1e-14);
            }
        }
    }

    fn spectrum_fidelity_case<T: Scalar>() {
        let spec = SpectrumSpec::uniform(0.0, 1.0, 50).unwrap();
        let a = generate::<T>(&spec, 1);
        // Hermitian exactly by construction.
        for j in 0..50 {
            for i in 0..50 {
                assert_eq!(a.at(i, j), a.at(j, i).conj());
            }
        }
        let (vals, _) = heevd(a.view()).unwrap();
        for (got, want) in vals.iter().zip(spec.eigenvalues()) {
            assert!(
                (got - want).abs() <= 1e-12,
                "eigenvalue drift: {got} vs {want}"
            );
        }
    }

    #[test]
    fn spectrum_fidelity() {
        spectrum_fidelity_case::<f64>();
        spectrum_fidelity_case::<Complex64>();
    }

    #[test]
    fn generation_is_deterministic() {
        let spec = SpectrumSpec::uniform(-1.0, 2.0, 20).unwrap();
        let a = generate::<Complex64>(&spec, 7);
        let b = generate::<Complex64>(&spec, 7);
        assert_eq!(a.data(), b.data());
        let c = generate::<Complex64>(&spec, 8);
        assert_ne!(a.data(), c.data());
    }

    #[test]
    fn initial_vectors_keyed_by_col_rank() {
        let a = random_initial_vectors::<f64>(16, 4, 2, 99);
        let b = random_initial_vectors::<f64>(16, 4, 2, 99);
        assert_eq!(a.data(), b.data(), "same (seed, col_rank) must coincide");
        let c = random_initial_vectors::<f64>(16, 4, 3, 99);
        assert_ne!(a.data(), c.data(), "different col_rank must differ");
    }

    #[test]
    fn gathered_initial_vectors_have_full_rank() {
        // Stack blocks from col_ranks 0..4 into an 80×6 matrix and check
        // σ_min > 0 with an independent SVD.
        let n_e = 6;
        let mut stacked = nalgebra::DMatrix::<f64>::zeros(80, n_e);
        for part in 0..4 {
            let block = random_initial_vectors::<f64>(20, n_e, part, 5);
            for j in 0..n_e {
                for i in 0..20 {
                    stacked[(part * 20 + i, j)] = block.at(i, j);
                }
            }
        }
        let svd = stacked.svd(false, false);
        let smin = svd.singular_values.iter().cloned().fold(f64::MAX, f64::min);
        assert!(smin > 1e-8, "numerical rank deficiency: σ_min = {smin}");
    }

    #[test]
    fn file_format_is_column_major_le() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.bin");
        // [[1,2],[3,4]] row-major is column-major data [1,3,2,4].
        let m = DenseMatrix::from_col_major(2, 2, vec![1.0f64, 3.0, 2.0, 4.0]);
        write_matrix(&m, &path).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        assert_eq!(bytes.len(), 32);
        assert_eq!(&bytes[..8], &1.0f64.to_le_bytes());
        assert_eq!(&bytes[8..16], &3.0f64.to_le_bytes());
        let back = read_matrix::<f64>(&path, 2, 2).unwrap();
        assert_eq!(back.data(), m.data());
    }

    #[test]
    fn complex_roundtrip_is_bitwise() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.bin");
        let spec = SpectrumSpec::uniform(0.0, 1.0, 16).unwrap();
        let m = generate::<Complex64>(&spec, 11);
        write_matrix(&m, &path).unwrap();
        let back = read_matrix::<Complex64>(&path, 16, 16).unwrap();
        assert_eq!(back.data(), m.data());
    }

    #[test]
    fn truncated_file_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("short.bin");
        std::fs::write(&path, [0u8; 24]).unwrap();
        let err = read_matrix::<f64>(&path, 2, 2).unwrap_err();
        assert!(matches!(err, Error::FileSize { expected: 32, found: 24, .. }));
    }

    #[test]
    fn invalid_spectrum_rejected() {
        assert!(SpectrumSpec::uniform(2.0, 1.0, 4).is_err());
        assert!(SpectrumSpec::uniform(0.0, 1.0, 0).is_err());
        assert!(SpectrumSpec::uniform(f64::NAN, 1.0, 4).is_err());
    }
}
