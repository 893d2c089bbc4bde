//! Heisenberg-picture quadrature propagation through the beam splitter.
//!
//! With vacuum in port B the output quadrature is `x'_A = T x_A - R pi_B`,
//! where `pi_B` is independent of the input and Gaussian with variance 1/4.
//! Moments are propagated up to fourth order; odd central moments of the
//! noise term vanish.

use num_complex::Complex;

use crate::experiment::ExperimentParams;
use crate::fock::{coherent_overlap, CatSpec, CoherentLabel};
use crate::operators::BeamSplitter;
use crate::phase_space::visibility_analytic;
use crate::scalar::Real;

/// Vacuum variance of either quadrature.
pub fn vacuum_variance<F: Real>() -> F {
    F::lit(0.25)
}

/// Mean and central moments (orders 2 to 4) of `x = (a + a^dag)/2`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct QuadratureStats<F> {
    pub mean: F,
    pub variance: F,
    pub third_central: F,
    pub fourth_central: F,
}

impl<F: Real> QuadratureStats<F> {
    /// From raw moments `<x>, <x^2>, <x^3>, <x^4>`.
    pub fn from_raw_moments(raw: [F; 4]) -> Self {
        let [m1, m2, m3, m4] = raw;
        let three = F::lit(3.0);
        let mean = m1;
        let variance = m2 - m1 * m1;
        let third_central = m3 - three * m1 * m2 + F::lit(2.0) * m1.powi(3);
        let fourth_central = m4 - F::lit(4.0) * m1 * m3 + F::lit(6.0) * m1 * m1 * m2 - three * m1.powi(4);
        Self { mean, variance, third_central, fourth_central }
    }

    pub fn vacuum() -> Self {
        let v = vacuum_variance::<F>();
        Self { mean: F::zero(), variance: v, third_central: F::zero(), fourth_central: F::lit(3.0) * v * v }
    }

    /// Coherent state: displaced vacuum with `<x> = Re alpha`.
    pub fn coherent(alpha: Complex<F>) -> Self {
        Self { mean: alpha.re, ..Self::vacuum() }
    }
}

/// Moments of `T x_A + N` with `N = -R pi_B`, B in vacuum.
pub fn output_quadrature_stats<F: Real>(input: &QuadratureStats<F>, bs: &BeamSplitter<F>) -> QuadratureStats<F> {
    let t = bs.transmissivity();
    let r = bs.reflectivity();
    let noise_var = r * r * vacuum_variance::<F>();
    let t2 = t * t;
    QuadratureStats {
        mean: t * input.mean,
        variance: t2 * input.variance + noise_var,
        third_central: t2 * t * input.third_central,
        fourth_central: t2 * t2 * input.fourth_central
            + F::lit(6.0) * t2 * input.variance * noise_var
            + F::lit(3.0) * noise_var * noise_var,
    }
}

/// Exact quadrature moments of `sum_j w_j |alpha_j>` without truncation.
///
/// Uses `<a|x^k|b> = <a|b> E[(s + g)^k]` with `s = (conj(a) + b)/2` and `g`
/// a centred Gaussian of variance 1/4 (normal ordering of `x^k`).
pub fn superposition_quadrature_stats<F: Real>(
    components: &[(Complex<F>, CoherentLabel<F>)],
) -> Option<QuadratureStats<F>> {
    let zero = Complex::new(F::zero(), F::zero());
    let v = vacuum_variance::<F>();
    let mut raw = [zero; 4];
    let mut norm = zero;
    for (wa, a) in components {
        for (wb, b) in components {
            let amp = wa.conj() * wb * coherent_overlap(*a, *b);
            let s = (a.alpha.conj() + b.alpha) * F::lit(0.5);
            let s2 = s * s;
            norm += amp;
            raw[0] += amp * s;
            raw[1] += amp * (s2 + v);
            raw[2] += amp * (s2 * s + s * (F::lit(3.0) * v));
            raw[3] += amp * (s2 * s2 + s2 * (F::lit(6.0) * v) + F::lit(3.0) * v * v);
        }
    }
    if norm.re <= F::zero() {
        return None;
    }
    Some(QuadratureStats::from_raw_moments(raw.map(|m| m.re / norm.re)))
}

/// Input-mode moments of a cat state, computed from its coherent labels.
pub fn cat_quadrature_stats<F: Real>(spec: &CatSpec<F>) -> QuadratureStats<F> {
    let w = Complex::new(spec.norm_const, F::zero());
    superposition_quadrature_stats(&[(w, spec.plus()), (w, spec.minus())]).expect("cat state has positive norm")
}

/// Quadrature attenuation next to the visibility for the same beam splitter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContrastReport<F> {
    pub transmissivity: F,
    /// `<x'_A> / <x_A>`; equals `T` for any input.
    pub mean_ratio: F,
    pub var_in: F,
    pub var_out: F,
    /// `R^2 / 4`, the variance added by the vacuum port.
    pub noise_var: F,
    pub visibility: F,
}

pub fn contrast_report<F: Real>(params: &ExperimentParams<F>) -> ContrastReport<F> {
    let bs = params.beam_splitter();
    let input = cat_quadrature_stats(&params.cat());
    let output = output_quadrature_stats(&input, &bs);
    let r = bs.reflectivity();
    ContrastReport {
        transmissivity: bs.transmissivity(),
        mean_ratio: bs.transmissivity(),
        var_in: input.variance,
        var_out: output.variance,
        noise_var: r * r * vacuum_variance::<F>(),
        visibility: visibility_analytic(params),
    }
}
