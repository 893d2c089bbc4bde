//! End-to-end visibility pipelines and their independent cross-checks.

use std::f64::consts::TAU;

use log::warn;
use num_complex::Complex;
use rayon::prelude::*;
use thiserror::Error;

use crate::fock::{coherent_fock_checked, coherent_overlap, default_cutoff, CatSpec, FockError, ModeState};
use crate::heisenberg::contrast_report;
use crate::operators::{bs_coherent_map, bs_fock_apply, BeamSplitter, OperatorError, TwoModeState};
use crate::phase_space::{
    component_overlap, integrate_q_term, post_selected_terms, visibility_analytic, GridSpec, PhaseSpaceError,
};
use crate::scalar::{cis, Real};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExperimentError {
    #[error("reflectivity {0} outside [0, 1)")]
    Reflectivity(f64),
    #[error("non-finite parameter `{0}`")]
    NonFinite(&'static str),
    #[error("fringe scan needs at least {min} samples, got {got}")]
    TooFewSamples { min: usize, got: usize },
    #[error("scan does not cover a full period (span {span})")]
    PartialPeriod { span: f64 },
    #[error("fringe offset {0} is not positive")]
    NonPositiveOffset(f64),
    #[error("thetas and rates differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("post-selected rate {rate:e} at theta = {theta} is negative")]
    NegativeRate { theta: f64, rate: f64 },
    #[error("empty sweep range for `{0}`")]
    EmptyRange(&'static str),
    #[error(transparent)]
    Fock(#[from] FockError),
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error(transparent)]
    PhaseSpace(#[from] PhaseSpaceError),
}

/// Numerical thresholds shared by the pipelines. Round-off based thresholds
/// are widened for scalars coarser than `f64`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances<F> {
    /// Poisson tail allowed beyond a Fock cutoff.
    pub tail: F,
    /// Norm drift allowed through the Fock-track beam splitter.
    pub leakage: F,
    /// Boundary/peak ratio above which a grid is considered under-sized.
    pub coverage: F,
    /// Component overlap above which the integral route warns.
    pub overlap_proviso: F,
    /// Negativity allowed in Q before a term set is rejected.
    pub negativity: F,
}

impl<F: Real> Default for Tolerances<F> {
    fn default() -> Self {
        Self {
            tail: F::lit(1e-12),
            leakage: F::lit(1e-10).max(F::lit(100.0) * F::epsilon()),
            coverage: F::lit(1e-10),
            overlap_proviso: F::lit(1e-3),
            negativity: F::lit(1e-12).max(F::lit(10.0) * F::epsilon()),
        }
    }
}

/// Cat amplitude, Kerr phase, interferometer phase, reflectivity, and the
/// numerical controls used by every route.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExperimentParams<F> {
    alpha0: Complex<F>,
    phi: F,
    reflectivity: F,
    theta: F,
    cutoff_a: Option<usize>,
    cutoff_b: Option<usize>,
    grid: GridSpec<F>,
    tolerances: Tolerances<F>,
}

impl<F: Real> ExperimentParams<F> {
    pub fn new(alpha0: Complex<F>, phi: F, reflectivity: F) -> Result<Self, ExperimentError> {
        if !(alpha0.re.is_finite() && alpha0.im.is_finite()) {
            return Err(ExperimentError::NonFinite("alpha0"));
        }
        if !phi.is_finite() {
            return Err(ExperimentError::NonFinite("phi"));
        }
        if !(reflectivity >= F::zero() && reflectivity < F::one()) {
            return Err(ExperimentError::Reflectivity(reflectivity.to_f64().unwrap_or(f64::NAN)));
        }
        Ok(Self {
            alpha0,
            phi,
            reflectivity,
            theta: F::zero(),
            cutoff_a: None,
            cutoff_b: None,
            grid: GridSpec::default(),
            tolerances: Tolerances::default(),
        })
    }

    pub fn with_theta(mut self, theta: F) -> Self {
        self.theta = theta;
        self
    }

    /// Fixes the Fock cutoffs; `None` selects them from the amplitudes.
    pub fn with_cutoffs(mut self, cutoff_a: Option<usize>, cutoff_b: Option<usize>) -> Self {
        self.cutoff_a = cutoff_a;
        self.cutoff_b = cutoff_b;
        self
    }

    pub fn with_grid(mut self, grid: GridSpec<F>) -> Self {
        self.grid = grid;
        self
    }

    pub fn with_tolerances(mut self, tolerances: Tolerances<F>) -> Self {
        self.tolerances = tolerances;
        self
    }

    pub fn alpha0(&self) -> Complex<F> {
        self.alpha0
    }

    pub fn phi(&self) -> F {
        self.phi
    }

    pub fn theta(&self) -> F {
        self.theta
    }

    pub fn reflectivity(&self) -> F {
        self.reflectivity
    }

    pub fn grid(&self) -> &GridSpec<F> {
        &self.grid
    }

    pub fn tolerances(&self) -> &Tolerances<F> {
        &self.tolerances
    }

    pub fn beam_splitter(&self) -> BeamSplitter<F> {
        BeamSplitter::new(self.reflectivity).expect("reflectivity validated on construction")
    }

    pub fn cat(&self) -> CatSpec<F> {
        CatSpec::new(self.alpha0, self.phi)
    }

    /// `ceil(|alpha0|^2 + 8|alpha0| + 10)` unless overridden.
    pub fn cutoff_a(&self) -> usize {
        self.cutoff_a.unwrap_or_else(|| default_cutoff(self.alpha0.norm()))
    }

    /// Sized for the reflected amplitude `R |alpha0|` unless overridden.
    pub fn cutoff_b(&self) -> usize {
        self.cutoff_b.unwrap_or_else(|| default_cutoff(self.reflectivity * self.alpha0.norm()))
    }
}

/// Post-selected counting rate against interferometer phase.
#[derive(Debug, Clone, PartialEq)]
pub struct FringeScan<F> {
    pub thetas: Vec<F>,
    pub rates: Vec<F>,
}

impl<F: Real> FringeScan<F> {
    pub fn new(thetas: Vec<F>, rates: Vec<F>) -> Result<Self, ExperimentError> {
        if thetas.len() != rates.len() {
            return Err(ExperimentError::LengthMismatch(thetas.len(), rates.len()));
        }
        Ok(Self { thetas, rates })
    }

    pub fn len(&self) -> usize {
        self.thetas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.thetas.is_empty()
    }
}

/// Least-squares fit `rate = offset + amplitude cos(theta - delta)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FringeFit<F> {
    pub offset: F,
    pub amplitude: F,
    pub delta: F,
    /// `amplitude / offset`.
    pub visibility: F,
    /// `(max - min) / (max + min)` over the raw samples.
    pub raw_visibility: F,
    /// Largest absolute fit residual.
    pub max_residual: F,
    /// Period of the strongest Fourier component of the samples.
    pub period: F,
}

pub const MIN_FRINGE_SAMPLES: usize = 8;

/// Relative rates `P(theta_k)`, `theta_k = 2 pi k / n`, from the four
/// post-selected Q-term integrals at each phase.
pub fn fringe_scan<F: Real>(params: &ExperimentParams<F>, n_theta: usize) -> Result<FringeScan<F>, ExperimentError> {
    if n_theta < MIN_FRINGE_SAMPLES {
        return Err(ExperimentError::TooFewSamples { min: MIN_FRINGE_SAMPLES, got: n_theta });
    }
    let overlap = component_overlap(params);
    if overlap >= params.tolerances().overlap_proviso {
        warn!(
            "cat components overlap ({:e}); post-selection assumes well-separated components",
            overlap.to_f64().unwrap_or(f64::NAN)
        );
    }
    let step = F::lit(TAU) / F::from_usize_lossy(n_theta);
    let mut thetas = Vec::with_capacity(n_theta);
    let mut rates = Vec::with_capacity(n_theta);
    for k in 0..n_theta {
        let theta = step * F::from_usize_lossy(k);
        let rate = post_selected_rate(&params.with_theta(theta))?;
        if rate < -params.tolerances().negativity {
            return Err(ExperimentError::NegativeRate {
                theta: theta.to_f64().unwrap_or(f64::NAN),
                rate: rate.to_f64().unwrap_or(f64::NAN),
            });
        }
        thetas.push(theta);
        rates.push(rate.max(F::zero()));
    }
    FringeScan::new(thetas, rates)
}

/// Sum of the integrated post-selected Q-terms at the parameters' theta.
pub fn post_selected_rate<F: Real>(params: &ExperimentParams<F>) -> Result<F, ExperimentError> {
    let mut total = Complex::new(F::zero(), F::zero());
    for term in post_selected_terms(params) {
        let grid = params.grid().for_term(&term)?;
        total += integrate_q_term(&term, &grid).value;
    }
    Ok(total.re)
}

/// Fits `a + b cos(theta - delta)` and reports `|b| / a`.
pub fn extract_visibility<F: Real>(scan: &FringeScan<F>) -> Result<FringeFit<F>, ExperimentError> {
    let n = scan.len();
    if n < 3 {
        return Err(ExperimentError::TooFewSamples { min: 3, got: n });
    }
    let (lo, hi) = scan.thetas.iter().fold((F::infinity(), F::neg_infinity()), |(lo, hi), &t| (lo.min(t), hi.max(t)));
    let span = (hi - lo) * F::from_usize_lossy(n) / F::from_usize_lossy(n - 1);
    if span < F::lit(TAU) * (F::one() - F::lit(1e-9)) {
        return Err(ExperimentError::PartialPeriod { span: span.to_f64().unwrap_or(f64::NAN) });
    }

    // Normal equations for the basis (1, cos, sin).
    let mut ata = [[F::zero(); 3]; 3];
    let mut aty = [F::zero(); 3];
    for (&t, &y) in scan.thetas.iter().zip(&scan.rates) {
        let row = [F::one(), t.cos(), t.sin()];
        for i in 0..3 {
            aty[i] += row[i] * y;
            for j in 0..3 {
                ata[i][j] += row[i] * row[j];
            }
        }
    }
    let [a, bc, bs] = solve3(ata, aty);
    if a.is_nan() || a <= F::zero() {
        return Err(ExperimentError::NonPositiveOffset(a.to_f64().unwrap_or(f64::NAN)));
    }
    let amplitude = (bc * bc + bs * bs).sqrt();
    let delta = bs.atan2(bc);
    let max_residual = scan
        .thetas
        .iter()
        .zip(&scan.rates)
        .map(|(&t, &y)| (y - (a + bc * t.cos() + bs * t.sin())).abs())
        .fold(F::zero(), F::max);
    let (min, max) = scan.rates.iter().fold((F::infinity(), F::neg_infinity()), |(lo, hi), &r| (lo.min(r), hi.max(r)));
    let raw_visibility = if max + min > F::zero() { (max - min) / (max + min) } else { F::zero() };
    Ok(FringeFit {
        offset: a,
        amplitude,
        delta,
        visibility: amplitude / a,
        raw_visibility,
        max_residual,
        period: dominant_period(scan, span),
    })
}

/// Gaussian elimination with partial pivoting on a 3x3 system.
#[allow(clippy::needless_range_loop)]
fn solve3<F: Real>(mut m: [[F; 3]; 3], mut v: [F; 3]) -> [F; 3] {
    for col in 0..3 {
        let pivot = (col..3)
            .max_by(|&i, &j| m[i][col].abs().partial_cmp(&m[j][col].abs()).unwrap_or(std::cmp::Ordering::Equal))
            .unwrap_or(col);
        m.swap(col, pivot);
        v.swap(col, pivot);
        let d = m[col][col];
        if d == F::zero() {
            continue;
        }
        for row in col + 1..3 {
            let f = m[row][col] / d;
            for k in col..3 {
                m[row][k] -= f * m[col][k];
            }
            v[row] -= f * v[col];
        }
    }
    let mut x = [F::zero(); 3];
    for row in (0..3).rev() {
        let mut s = v[row];
        for k in row + 1..3 {
            s -= m[row][k] * x[k];
        }
        x[row] = if m[row][row] == F::zero() { F::zero() } else { s / m[row][row] };
    }
    x
}

/// Period of the strongest non-constant harmonic, treating the samples as one
/// window of length `span`. Returns `span` itself for a flat scan.
fn dominant_period<F: Real>(scan: &FringeScan<F>, span: F) -> F {
    let n = scan.len();
    let mean = scan.rates.iter().fold(F::zero(), |a, &r| a + r) / F::from_usize_lossy(n);
    let lo = scan.thetas.iter().fold(F::infinity(), |a, &t| a.min(t));
    let mut best = (F::zero(), 1usize);
    for k in 1..=n / 2 {
        let w = F::lit(TAU) * F::from_usize_lossy(k) / span;
        let mut acc = Complex::new(F::zero(), F::zero());
        for (&t, &r) in scan.thetas.iter().zip(&scan.rates) {
            acc += cis(-w * (t - lo)) * (r - mean);
        }
        let power = acc.norm_sqr();
        if power > best.0 * (F::one() + F::lit(1e-9)) {
            best = (power, k);
        }
    }
    span / F::from_usize_lossy(best.1)
}

/// `|<i R e^{-i phi} alpha0 | i R e^{i phi} alpha0>|`: overlap of the two
/// which-path records left in mode B, built only from the label map.
pub fn environment_overlap_oracle<F: Real>(params: &ExperimentParams<F>) -> F {
    let bs = params.beam_splitter();
    let cat = params.cat();
    let (_, env_plus) = bs_coherent_map(&bs, cat.plus());
    let (_, env_minus) = bs_coherent_map(&bs, cat.minus());
    coherent_overlap(env_minus, env_plus).norm()
}

/// Visibility from the truncated Fock basis alone.
///
/// Each cat component is propagated through the factored beam-splitter
/// unitary on `cutoff_a x cutoff_b` amplitudes, the mode-A blocks
/// `Tr_B |psi_s><psi_t|` are formed, the kept Kerr branches are applied to
/// ket and bra, and the interference trace is normalised by the two
/// diagonal traces.
pub fn fock_brute_force_visibility<F: Real>(params: &ExperimentParams<F>) -> Result<F, ExperimentError> {
    let cat = params.cat();
    let (ca, cb) = (params.cutoff_a(), params.cutoff_b());
    let tol = params.tolerances();
    let vacuum = ModeState::vacuum(cb)?;
    let cn = Complex::new(cat.norm_const, F::zero());
    let plus = coherent_fock_checked(cat.plus(), ca, tol.tail)?.scaled(cn);
    let minus = coherent_fock_checked(cat.minus(), ca, tol.tail)?.scaled(cn);

    let bs = params.beam_splitter();
    let out_plus = bs_fock_apply(&bs, &TwoModeState::product(&plus, &vacuum), tol.leakage)?;
    let out_minus = bs_fock_apply(&bs, &TwoModeState::product(&minus, &vacuum), tol.leakage)?;

    let phi = params.phi();
    let rho_pm = out_plus.cross_reduced_a(&out_minus).phase_conjugated(-phi, phi).trace() * cis(-params.theta());
    let rho_pp = out_plus.reduced_a().trace().re;
    let rho_mm = out_minus.reduced_a().trace().re;
    Ok(rho_pm.norm() / (rho_pp * rho_mm).sqrt())
}

/// Ranges for a Cartesian parameter sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRanges<F> {
    pub reflectivity: Vec<F>,
    pub abs_alpha0: Vec<F>,
    pub phi: Vec<F>,
    /// Phase of `alpha0`; the visibility does not depend on it.
    pub alpha0_phase: F,
    pub brute_force: bool,
    pub fringe: bool,
    pub n_theta: usize,
    pub grid: GridSpec<F>,
    pub tolerances: Tolerances<F>,
}

impl<F: Real> SweepRanges<F> {
    pub fn new(reflectivity: Vec<F>, abs_alpha0: Vec<F>, phi: Vec<F>) -> Self {
        Self {
            reflectivity,
            abs_alpha0,
            phi,
            alpha0_phase: F::lit(std::f64::consts::FRAC_PI_2),
            brute_force: false,
            fringe: false,
            n_theta: 16,
            grid: GridSpec::default(),
            tolerances: Tolerances::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow<F> {
    pub reflectivity: F,
    pub abs_alpha0: F,
    pub phi: F,
    pub nu_analytic: Option<F>,
    pub nu_oracle: Option<F>,
    pub nu_brute: Option<F>,
    pub nu_fringe: Option<F>,
    pub transmissivity: Option<F>,
    pub mean_ratio: Option<F>,
    pub var_out: Option<F>,
    pub error: Option<String>,
}

impl<F: Real> SweepRow<F> {
    fn failed(reflectivity: F, abs_alpha0: F, phi: F, error: String) -> Self {
        Self {
            reflectivity,
            abs_alpha0,
            phi,
            nu_analytic: None,
            nu_oracle: None,
            nu_brute: None,
            nu_fringe: None,
            transmissivity: None,
            mean_ratio: None,
            var_out: None,
            error: Some(error),
        }
    }
}

/// Evaluates every `(R, |alpha0|, phi)` combination, lexicographic in that
/// order. Rows run in parallel; a failing row records its error and the sweep
/// continues.
pub fn sweep<F: Real>(ranges: &SweepRanges<F>) -> Result<Vec<SweepRow<F>>, ExperimentError> {
    if ranges.reflectivity.is_empty() {
        return Err(ExperimentError::EmptyRange("R"));
    }
    if ranges.abs_alpha0.is_empty() {
        return Err(ExperimentError::EmptyRange("abs_alpha0"));
    }
    if ranges.phi.is_empty() {
        return Err(ExperimentError::EmptyRange("phi"));
    }
    let mut points = Vec::new();
    for &r in &ranges.reflectivity {
        for &a in &ranges.abs_alpha0 {
            for &phi in &ranges.phi {
                points.push((r, a, phi));
            }
        }
    }
    Ok(points.into_par_iter().map(|(r, a, phi)| sweep_row(ranges, r, a, phi)).collect())
}

fn sweep_row<F: Real>(ranges: &SweepRanges<F>, r: F, a: F, phi: F) -> SweepRow<F> {
    let params = match ExperimentParams::new(Complex::from_polar(a, ranges.alpha0_phase), phi, r) {
        Ok(p) => p.with_grid(ranges.grid).with_tolerances(ranges.tolerances),
        Err(e) => return SweepRow::failed(r, a, phi, e.to_string()),
    };
    let contrast = contrast_report(&params);
    let mut row = SweepRow {
        reflectivity: r,
        abs_alpha0: a,
        phi,
        nu_analytic: Some(visibility_analytic(&params)),
        nu_oracle: Some(environment_overlap_oracle(&params)),
        nu_brute: None,
        nu_fringe: None,
        transmissivity: Some(contrast.transmissivity),
        mean_ratio: Some(contrast.mean_ratio),
        var_out: Some(contrast.var_out),
        error: None,
    };
    let mut errors = Vec::new();
    if ranges.brute_force {
        match fock_brute_force_visibility(&params) {
            Ok(v) => row.nu_brute = Some(v),
            Err(e) => errors.push(format!("brute force: {e}")),
        }
    }
    if ranges.fringe {
        match fringe_scan(&params, ranges.n_theta).and_then(|s| extract_visibility(&s)) {
            Ok(fit) => row.nu_fringe = Some(fit.visibility),
            Err(e) => errors.push(format!("fringe: {e}")),
        }
    }
    if !errors.is_empty() {
        row.error = Some(errors.join("; "));
    }
    row
}

/// Least-squares line through `(R^2, -ln nu)`: `(slope, intercept, max |residual|)`.
pub fn log_visibility_regression<F: Real>(points: &[(F, F)]) -> Option<(F, F, F)> {
    let data: Vec<(F, F)> = points.iter().filter(|(_, nu)| *nu > F::zero()).map(|&(r, nu)| (r * r, -nu.ln())).collect();
    if data.len() < 2 {
        return None;
    }
    let n = F::from_usize_lossy(data.len());
    let mx = data.iter().fold(F::zero(), |s, p| s + p.0) / n;
    let my = data.iter().fold(F::zero(), |s, p| s + p.1) / n;
    let sxx = data.iter().fold(F::zero(), |s, p| s + (p.0 - mx) * (p.0 - mx));
    if sxx == F::zero() {
        return None;
    }
    let sxy = data.iter().fold(F::zero(), |s, p| s + (p.0 - mx) * (p.1 - my));
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = data.iter().map(|p| (p.1 - (intercept + slope * p.0)).abs()).fold(F::zero(), F::max);
    Some((slope, intercept, residual))
}
