//! Single-mode states: truncated number-basis amplitudes and exact
//! coherent-state labels.

use std::ops::{Add, Mul};

use num_complex::Complex;
use thiserror::Error;

use crate::scalar::{cis, Real};

/// Default tail tolerance for truncated coherent expansions.
pub const DEFAULT_TAIL_TOLERANCE: f64 = 1e-12;

/// Slack allowed above unit norm before a state is rejected.
pub const NORM_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FockError {
    #[error("cutoff must be at least 1")]
    ZeroCutoff,
    #[error("cutoff {cutoff} leaves tail mass {tail:e} beyond tolerance {tolerance:e} (try cutoff >= {suggested})")]
    TailTooLarge { cutoff: usize, tail: f64, tolerance: f64, suggested: usize },
    #[error("squared norm {norm_sqr} exceeds 1")]
    NormExceeded { norm_sqr: f64 },
    #[error("number state |{n}> does not fit in cutoff {cutoff}")]
    NumberBeyondCutoff { n: usize, cutoff: usize },
    #[error("non-finite amplitude at index {index}")]
    NonFinite { index: usize },
}

/// Complex amplitude labelling an untruncated coherent state `|alpha>`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CoherentLabel<F> {
    pub alpha: Complex<F>,
}

impl<F: Real> CoherentLabel<F> {
    pub fn new(alpha: Complex<F>) -> Self {
        Self { alpha }
    }

    pub fn vacuum() -> Self {
        Self { alpha: Complex::new(F::zero(), F::zero()) }
    }

    pub fn real(x: F) -> Self {
        Self { alpha: Complex::new(x, F::zero()) }
    }

    pub fn from_polar(abs: F, phase: F) -> Self {
        Self { alpha: Complex::from_polar(abs, phase) }
    }

    pub fn abs(&self) -> F {
        self.alpha.norm()
    }

    /// `|e^{i chi} alpha>`.
    pub fn rotated(&self, chi: F) -> Self {
        Self { alpha: self.alpha * cis(chi) }
    }
}

impl<F: Real> From<Complex<F>> for CoherentLabel<F> {
    fn from(alpha: Complex<F>) -> Self {
        Self { alpha }
    }
}

/// Truncated single-mode state, amplitude `n` multiplying `|n>`.
///
/// Sub-normalized states are valid and are never renormalized implicitly.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeState<F> {
    amplitudes: Vec<Complex<F>>,
}

impl<F: Real> ModeState<F> {
    pub fn new(amplitudes: Vec<Complex<F>>) -> Result<Self, FockError> {
        if amplitudes.is_empty() {
            return Err(FockError::ZeroCutoff);
        }
        if let Some(index) = amplitudes.iter().position(|a| !(a.re.is_finite() && a.im.is_finite())) {
            return Err(FockError::NonFinite { index });
        }
        let state = Self { amplitudes };
        let norm_sqr = state.norm_sqr();
        if norm_sqr > F::one() + F::lit(NORM_SLACK) {
            return Err(FockError::NormExceeded { norm_sqr: norm_sqr.to_f64().unwrap_or(f64::NAN) });
        }
        Ok(state)
    }

    /// Builds a state without the norm check. Used by the non-unitary
    /// operators whose outputs are bounded by construction.
    pub(crate) fn from_raw(amplitudes: Vec<Complex<F>>) -> Self {
        debug_assert!(!amplitudes.is_empty());
        Self { amplitudes }
    }

    pub fn vacuum(cutoff: usize) -> Result<Self, FockError> {
        Self::number(0, cutoff)
    }

    pub fn number(n: usize, cutoff: usize) -> Result<Self, FockError> {
        if cutoff == 0 {
            return Err(FockError::ZeroCutoff);
        }
        if n >= cutoff {
            return Err(FockError::NumberBeyondCutoff { n, cutoff });
        }
        let mut amplitudes = vec![Complex::new(F::zero(), F::zero()); cutoff];
        amplitudes[n] = Complex::new(F::one(), F::zero());
        Ok(Self { amplitudes })
    }

    pub fn cutoff(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex<F>] {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<Complex<F>> {
        self.amplitudes
    }

    pub fn norm_sqr(&self) -> F {
        self.amplitudes.iter().fold(F::zero(), |acc, a| acc + a.norm_sqr())
    }

    /// `<self|other>`; the shorter vector is zero-padded.
    pub fn inner(&self, other: &Self) -> Complex<F> {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .fold(Complex::new(F::zero(), F::zero()), |acc, (a, b)| acc + a.conj() * b)
    }

    /// Squared amplitude in the top 10% of the index range (at least one level).
    pub fn top_band_mass(&self) -> F {
        let band = (self.cutoff() / 10).max(1);
        self.amplitudes[self.cutoff() - band..].iter().fold(F::zero(), |acc, a| acc + a.norm_sqr())
    }

    /// `sum_n n |a_n|^2`.
    pub fn mean_photon_number(&self) -> F {
        self.amplitudes.iter().enumerate().fold(F::zero(), |acc, (n, a)| acc + F::from_usize_lossy(n) * a.norm_sqr())
    }

    pub fn scaled(&self, factor: Complex<F>) -> Self {
        Self { amplitudes: self.amplitudes.iter().map(|a| a * factor).collect() }
    }

    pub fn normalized(&self) -> Option<Self> {
        let norm = self.norm_sqr().sqrt();
        (norm > F::zero()).then(|| self.scaled(Complex::new(F::one() / norm, F::zero())))
    }
}

impl<F: Real> Add for &ModeState<F> {
    type Output = ModeState<F>;

    fn add(self, rhs: Self) -> ModeState<F> {
        let len = self.cutoff().max(rhs.cutoff());
        let zero = Complex::new(F::zero(), F::zero());
        let amplitudes = (0..len)
            .map(|n| self.amplitudes.get(n).copied().unwrap_or(zero) + rhs.amplitudes.get(n).copied().unwrap_or(zero))
            .collect();
        ModeState { amplitudes }
    }
}

impl<F: Real> Mul<Complex<F>> for &ModeState<F> {
    type Output = ModeState<F>;

    fn mul(self, rhs: Complex<F>) -> ModeState<F> {
        self.scaled(rhs)
    }
}

/// `ceil(|alpha|^2 + 8|alpha| + 10)`.
pub fn default_cutoff<F: Real>(abs_alpha: F) -> usize {
    let a = abs_alpha.abs();
    (a * a + F::lit(8.0) * a + F::lit(10.0)).ceil().to_usize().unwrap_or(usize::MAX)
}

/// Poisson mass `sum_{n >= cutoff} e^{-m} m^n / n!` with `m = |alpha|^2`.
///
/// Evaluated in log space so large means do not underflow the leading term.
pub fn coherent_tail_mass<F: Real>(abs_alpha: F, cutoff: usize) -> F {
    let mean = abs_alpha * abs_alpha;
    if mean == F::zero() {
        return if cutoff == 0 { F::one() } else { F::zero() };
    }
    let ln_mean = mean.ln();
    // ln p_n at n = cutoff
    let mut ln_p = -mean;
    for k in 1..=cutoff {
        ln_p += ln_mean - F::from_usize_lossy(k).ln();
    }
    let mut tail = F::zero();
    let mut n = cutoff;
    loop {
        let term = ln_p.exp();
        tail += term;
        n += 1;
        ln_p += ln_mean - F::from_usize_lossy(n).ln();
        let past_peak = F::from_usize_lossy(n) > mean;
        if past_peak && (term <= tail * F::epsilon() || term < F::min_positive_value()) {
            break;
        }
    }
    tail.min(F::one())
}

/// Smallest cutoff whose tail mass is below `tolerance`.
pub fn cutoff_for_tail<F: Real>(abs_alpha: F, tolerance: F) -> usize {
    let mut cutoff = 1;
    while coherent_tail_mass(abs_alpha, cutoff) >= tolerance {
        cutoff += 1;
    }
    cutoff
}

/// `|alpha>` truncated to `cutoff` levels.
///
/// Amplitudes follow `a_n = a_{n-1} alpha / sqrt(n)`, carried in log-magnitude
/// so neither factorials nor `e^{-|alpha|^2/2}` can over- or underflow early.
pub fn coherent_fock<F: Real>(alpha: CoherentLabel<F>, cutoff: usize) -> Result<ModeState<F>, FockError> {
    if cutoff == 0 {
        return Err(FockError::ZeroCutoff);
    }
    let abs = alpha.abs();
    let zero = Complex::new(F::zero(), F::zero());
    let mut amplitudes = vec![zero; cutoff];
    if abs == F::zero() {
        amplitudes[0] = Complex::new(F::one(), F::zero());
        return Ok(ModeState { amplitudes });
    }
    let ln_abs = abs.ln();
    let arg = alpha.alpha.arg();
    let mut ln_mag = -abs * abs / F::lit(2.0);
    for (n, amp) in amplitudes.iter_mut().enumerate() {
        if n > 0 {
            ln_mag += ln_abs - F::from_usize_lossy(n).ln() / F::lit(2.0);
        }
        *amp = Complex::from_polar(ln_mag.exp(), arg * F::from_usize_lossy(n));
    }
    Ok(ModeState { amplitudes })
}

/// [`coherent_fock`] that also rejects cutoffs whose discarded Poisson tail
/// reaches `tail_tolerance`.
pub fn coherent_fock_checked<F: Real>(
    alpha: CoherentLabel<F>,
    cutoff: usize,
    tail_tolerance: F,
) -> Result<ModeState<F>, FockError> {
    check_tail(alpha.abs(), cutoff, tail_tolerance)?;
    coherent_fock(alpha, cutoff)
}

fn check_tail<F: Real>(abs_alpha: F, cutoff: usize, tolerance: F) -> Result<(), FockError> {
    if cutoff == 0 {
        return Err(FockError::ZeroCutoff);
    }
    let tail = coherent_tail_mass(abs_alpha, cutoff);
    if tail >= tolerance {
        return Err(FockError::TailTooLarge {
            cutoff,
            tail: tail.to_f64().unwrap_or(f64::NAN),
            tolerance: tolerance.to_f64().unwrap_or(f64::NAN),
            suggested: cutoff_for_tail(abs_alpha, tolerance),
        });
    }
    Ok(())
}

/// `<alpha|beta> = exp(-|alpha|^2/2 - |beta|^2/2 + conj(alpha) beta)`.
pub fn coherent_overlap<F: Real>(alpha: CoherentLabel<F>, beta: CoherentLabel<F>) -> Complex<F> {
    let half = F::lit(0.5);
    let exponent = alpha.alpha.conj() * beta.alpha
        - Complex::new(half * (alpha.alpha.norm_sqr() + beta.alpha.norm_sqr()), F::zero());
    exponent.exp()
}

/// Normalization `c_n` of `c_n (|e^{i phi} alpha0> + |e^{-i phi} alpha0>)`.
pub fn cat_norm_constant<F: Real>(alpha0: Complex<F>, phi: F) -> F {
    let plus = CoherentLabel::new(alpha0).rotated(phi);
    let minus = CoherentLabel::new(alpha0).rotated(-phi);
    let overlap = coherent_overlap(plus, minus).re;
    (F::lit(2.0) + F::lit(2.0) * overlap).sqrt().recip()
}

/// Two-component cat `c_n (|e^{i phi} alpha0> + |e^{-i phi} alpha0>)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CatSpec<F> {
    pub alpha0: Complex<F>,
    pub phi: F,
    pub norm_const: F,
}

impl<F: Real> CatSpec<F> {
    pub fn new(alpha0: Complex<F>, phi: F) -> Self {
        Self { alpha0, phi, norm_const: cat_norm_constant(alpha0, phi) }
    }

    /// `e^{i phi} alpha0`.
    pub fn plus(&self) -> CoherentLabel<F> {
        CoherentLabel::new(self.alpha0).rotated(self.phi)
    }

    /// `e^{-i phi} alpha0`.
    pub fn minus(&self) -> CoherentLabel<F> {
        CoherentLabel::new(self.alpha0).rotated(-self.phi)
    }

    pub fn default_cutoff(&self) -> usize {
        default_cutoff(self.alpha0.norm())
    }
}

/// Truncated cat state, checked against [`DEFAULT_TAIL_TOLERANCE`].
pub fn cat_fock<F: Real>(spec: &CatSpec<F>, cutoff: usize) -> Result<ModeState<F>, FockError> {
    cat_fock_checked(spec, cutoff, F::lit(DEFAULT_TAIL_TOLERANCE))
}

pub fn cat_fock_checked<F: Real>(
    spec: &CatSpec<F>,
    cutoff: usize,
    tail_tolerance: F,
) -> Result<ModeState<F>, FockError> {
    check_tail(spec.alpha0.norm(), cutoff, tail_tolerance)?;
    let plus = coherent_fock(spec.plus(), cutoff)?;
    let minus = coherent_fock(spec.minus(), cutoff)?;
    Ok(&(&plus + &minus) * Complex::new(spec.norm_const, F::zero()))
}
