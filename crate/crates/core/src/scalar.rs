//! Scalar abstraction over the supported element types.
//!
//! Everything numeric in this crate is generic over [`Scalar`], which is
//! implemented for `f64` (real symmetric problems) and
//! [`num_complex::Complex64`] (Hermitian problems). The associated real
//! type is always `f64`; single precision is not built.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

use num_complex::Complex64;
use rand::Rng;

/// Element type of all matrices and vectors in the crate.
///
/// The low-level `raw_gemm` hook dispatches to the matching
/// `matrixmultiply` kernel; callers are expected to go through
/// [`crate::kernels::gemm`] instead.
pub trait Scalar:
    Copy
    + Send
    + Sync
    + 'static
    + PartialEq
    + Debug
    + Display
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + SubAssign
    + MulAssign
    + Sum<Self>
{
    const ZERO: Self;
    const ONE: Self;
    const IS_COMPLEX: bool;
    /// Bytes per element in the raw matrix file format.
    const ELEM_BYTES: usize;
    /// Short tag used in CLI flags and file metadata ("r64" / "c128").
    const KIND_TAG: &'static str;

    fn conj(self) -> Self;
    fn re(self) -> f64;
    fn from_re(r: f64) -> Self;
    /// Squared modulus |x|².
    fn norm_sqr(self) -> f64;
    fn scale(self, r: f64) -> Self;
    fn is_finite_scalar(self) -> bool;

    /// Standard normal sample; complex draws are N(0,1) in each component.
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self;

    /// Little-endian encoding into exactly `ELEM_BYTES` bytes
    /// (complex values interleave re,im).
    fn write_le(self, out: &mut [u8]);
    fn read_le(bytes: &[u8]) -> Self;

    fn abs(self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// `C ← α·A·B + β·C` on raw column-major-strided buffers.
    ///
    /// # Safety
    /// Pointers and strides must describe valid, non-aliasing matrices of
    /// the stated dimensions.
    #[allow(clippy::too_many_arguments)]
    unsafe fn raw_gemm(
        m: usize,
        k: usize,
        n: usize,
        alpha: Self,
        a: *const Self,
        rsa: isize,
        csa: isize,
        b: *const Self,
        rsb: isize,
        csb: isize,
        beta: Self,
        c: *mut Self,
        rsc: isize,
        csc: isize,
    );
}

/// Box–Muller transform from two uniform draws.
///
/// `u1` is mapped away from zero so the log is finite; the generator
/// behind this is fixed (ChaCha12) so streams are reproducible.
fn box_muller<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let u1: f64 = 1.0 - rng.random::<f64>(); // (0, 1]
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

impl Scalar for f64 {
    const ZERO: Self = 0.0;
    const ONE: Self = 1.0;
    const IS_COMPLEX: bool = false;
    const ELEM_BYTES: usize = 8;
    const KIND_TAG: &'static str = "r64";

    fn conj(self) -> Self {
        self
    }
    fn re(self) -> f64 {
        self
    }
    fn from_re(r: f64) -> Self {
        r
    }
    fn norm_sqr(self) -> f64 {
        self * self
    }
    fn scale(self, r: f64) -> Self {
        self * r
    }
    fn is_finite_scalar(self) -> bool {
        self.is_finite()
    }

    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        box_muller(rng)
    }

    fn write_le(self, out: &mut [u8]) {
        out.copy_from_slice(&self.to_le_bytes());
    }
    fn read_le(bytes: &[u8]) -> Self {
        f64::from_le_bytes(bytes.try_into().expect("8-byte f64"))
    }

    unsafe fn raw_gemm(
        m: usize,
        k: usize,
        n: usize,
        alpha: Self,
        a: *const Self,
        rsa: isize,
        csa: isize,
        b: *const Self,
        rsb: isize,
        csb: isize,
        beta: Self,
        c: *mut Self,
        rsc: isize,
        csc: isize,
    ) {
        matrixmultiply::dgemm(m, k, n, alpha, a, rsa, csa, b, rsb, csb, beta, c, rsc, csc);
    }
}

impl Scalar for Complex64 {
    const ZERO: Self = Complex64::new(0.0, 0.0);
    const ONE: Self = Complex64::new(1.0, 0.0);
    const IS_COMPLEX: bool = true;
    const ELEM_BYTES: usize = 16;
    const KIND_TAG: &'static str = "c128";

    fn conj(self) -> Self {
        Complex64::conj(&self)
    }
    fn re(self) -> f64 {
        self.re
    }
    fn from_re(r: f64) -> Self {
        Complex64::new(r, 0.0)
    }
    fn norm_sqr(self) -> f64 {
        Complex64::norm_sqr(&self)
    }
    fn scale(self, r: f64) -> Self {
        Complex64::new(self.re * r, self.im * r)
    }
    fn is_finite_scalar(self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }

    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let re = box_muller(rng);
        let im = box_muller(rng);
        Complex64::new(re, im)
    }

    fn write_le(self, out: &mut [u8]) {
        out[..8].copy_from_slice(&self.re.to_le_bytes());
        out[8..].copy_from_slice(&self.im.to_le_bytes());
    }
    fn read_le(bytes: &[u8]) -> Self {
        Complex64::new(f64::read_le(&bytes[..8]), f64::read_le(&bytes[8..]))
    }

    unsafe fn raw_gemm(
        m: usize,
        k: usize,
        n: usize,
        alpha: Self,
        a: *const Self,
        rsa: isize,
        csa: isize,
        b: *const Self,
        rsb: isize,
        csb: isize,
        beta: Self,
        c: *mut Self,
        rsc: isize,
        csc: isize,
    ) {
        use matrixmultiply::CGemmOption;
        // Complex64 is repr(C) { re: f64, im: f64 }, layout-identical to [f64; 2].
        matrixmultiply::zgemm(
            CGemmOption::Standard,
            CGemmOption::Standard,
            m,
            k,
            n,
            [alpha.re, alpha.im],
            a as *const [f64; 2],
            rsa,
            csa,
            b as *const [f64; 2],
            rsb,
            csb,
            [beta.re, beta.im],
            c as *mut [f64; 2],
            rsc,
            csc,
        );
    }
}
