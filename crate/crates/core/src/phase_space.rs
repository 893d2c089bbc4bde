//! Two-mode Husimi function of the cat-state experiment.
//!
//! The density operator of the cat splits into four coherent outer products
//! `rho_{s t} = c_n^2 |e^{i s phi} alpha0><e^{i t phi} alpha0| (x) |0><0|`,
//! each of which stays a coherent outer product under the beam splitter and
//! under the kept branch of the interferometer. A [`BranchTerm`] carries one
//! of them as labels plus a complex weight, and
//! `Q_term(a', b') = weight / pi^2 <a'|k_A><b_A|a'> <b'|k_B><b_B|b'>`.
//!
//! Post-selection keeps, for each component, the Kerr branch that undoes its
//! initial phase: the `+` component takes `Phi_-`, the `-` component takes
//! `e^{i theta} Phi_+`. The common `1/2` of the interferometer map is dropped,
//! so rates are relative.
//!
//! With `f_+- = <e^{+-i phi} a'|<b'| U |e^{+-i phi} alpha0>|0>` the interference
//! term is `Q_{+-} = c_n^2 e^{-i theta} f_+ conj(f_-) / pi^2`, which expands to
//!
//! ```text
//! c_n^2 e^{-i theta} / pi^2
//!   * exp(-(|alpha0|^2 + |a'|^2 + |b'|^2))
//!   * exp(T (conj(a') alpha0 + conj(alpha0) a'))
//!   * exp(i R e^{i phi} (conj(b') alpha0 - conj(alpha0) b'))
//! ```
//!
//! and integrates to `c_n^2 e^{-i theta} <i R e^{-i phi} alpha0 | i R e^{i phi} alpha0>`,
//! whose modulus over `c_n^2` is `exp(-2 R^2 sin^2(phi) |alpha0|^2)`.

use std::f64::consts::PI;

use log::warn;
use num_complex::Complex;
use thiserror::Error;

use crate::experiment::ExperimentParams;
use crate::fock::{coherent_overlap, CoherentLabel};
use crate::operators::{bs_coherent_map, bs_coherent_map_pair, BeamSplitter};
use crate::scalar::{cis, Real};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PhaseSpaceError {
    #[error("invalid grid: {0}")]
    Grid(String),
    #[error("Q-function value {value:e} is negative beyond tolerance")]
    Negative { value: f64 },
    #[error("Q-function has imaginary part {imag:e}; term set is not Hermitian")]
    NonHermitian { imag: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value<F: Real>(self) -> F {
        match self {
            Sign::Plus => F::one(),
            Sign::Minus => -F::one(),
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Sign::Plus => '+',
            Sign::Minus => '-',
        }
    }
}

/// `weight |k_A, k_B><b_A, b_B|` with a `(ket, bra)` component tag.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchTerm<F> {
    pub weight: Complex<F>,
    pub ket: [CoherentLabel<F>; 2],
    pub bra: [CoherentLabel<F>; 2],
    pub tag: (Sign, Sign),
}

const TAGS: [(Sign, Sign); 4] =
    [(Sign::Plus, Sign::Plus), (Sign::Plus, Sign::Minus), (Sign::Minus, Sign::Plus), (Sign::Minus, Sign::Minus)];

impl<F: Real> BranchTerm<F> {
    /// The four terms of the input cat (x) vacuum, ordered `++, +-, -+, --`.
    pub fn cat_terms(params: &ExperimentParams<F>) -> [Self; 4] {
        let cat = params.cat();
        let weight = Complex::new(cat.norm_const * cat.norm_const, F::zero());
        let label = |s: Sign| match s {
            Sign::Plus => cat.plus(),
            Sign::Minus => cat.minus(),
        };
        let vac = CoherentLabel::vacuum();
        TAGS.map(|tag| Self { weight, ket: [label(tag.0), vac], bra: [label(tag.1), vac], tag })
    }

    pub fn after_beam_splitter(&self, bs: &BeamSplitter<F>) -> Self {
        let (ka, kb) = bs_coherent_map_pair(bs, self.ket[0], self.ket[1]);
        let (ba, bb) = bs_coherent_map_pair(bs, self.bra[0], self.bra[1]);
        Self { ket: [ka, kb], bra: [ba, bb], ..*self }
    }

    /// Applies the interferometer branch kept by post-selection to each side.
    pub fn post_selected(&self, theta: F, phi: F) -> Self {
        let (ket_sign, bra_sign) = self.tag;
        let mut weight = self.weight;
        if ket_sign == Sign::Minus {
            weight *= cis(theta);
        }
        if bra_sign == Sign::Minus {
            weight *= cis(-theta);
        }
        let ket_a = self.ket[0].rotated(-ket_sign.value::<F>() * phi);
        let bra_a = self.bra[0].rotated(-bra_sign.value::<F>() * phi);
        Self { weight, ket: [ket_a, self.ket[1]], bra: [bra_a, self.bra[1]], tag: self.tag }
    }

    pub fn adjoint(&self) -> Self {
        Self { weight: self.weight.conj(), ket: self.bra, bra: self.ket, tag: (self.tag.1, self.tag.0) }
    }

    /// Exact trace `weight <b_A|k_A><b_B|k_B>`, the full phase-space
    /// integral of the term.
    pub fn trace(&self) -> Complex<F> {
        self.weight * coherent_overlap(self.bra[0], self.ket[0]) * coherent_overlap(self.bra[1], self.ket[1])
    }

    /// Midpoint of ket and bra labels in each plane, where `|Q_term|` peaks.
    pub fn centers(&self) -> [Complex<F>; 2] {
        let half = F::lit(0.5);
        [(self.ket[0].alpha + self.bra[0].alpha) * half, (self.ket[1].alpha + self.bra[1].alpha) * half]
    }
}

/// Terms of the state leaving the beam splitter.
pub fn output_terms<F: Real>(params: &ExperimentParams<F>) -> [BranchTerm<F>; 4] {
    let bs = params.beam_splitter();
    BranchTerm::cat_terms(params).map(|t| t.after_beam_splitter(&bs))
}

/// Terms after the beam splitter and the kept interferometer branches.
pub fn post_selected_terms<F: Real>(params: &ExperimentParams<F>) -> [BranchTerm<F>; 4] {
    output_terms(params).map(|t| t.post_selected(params.theta(), params.phi()))
}

fn pi<F: Real>() -> F {
    F::lit(PI)
}

/// `f_{s}(a', b') = <e^{i s phi} a'|<b'| U |0>_B |e^{i s phi} alpha0>_A`, from
/// the product of coherent overlaps.
fn f_branch<F: Real>(
    sign: Sign,
    alpha_p: CoherentLabel<F>,
    beta_p: CoherentLabel<F>,
    params: &ExperimentParams<F>,
) -> Complex<F> {
    let bs = params.beam_splitter();
    let r = bs.reflectivity();
    let t = bs.transmissivity();
    let chi = sign.value::<F>() * params.phi();
    let a0 = params.alpha0();
    let i = Complex::new(F::zero(), F::one());
    let reflected = (-(r * r * a0.norm_sqr()) / F::lit(2.0)).exp();
    let which_path = (i * r * beta_p.alpha.conj() * a0 * cis(chi)).exp();
    let transmitted = coherent_overlap(alpha_p.rotated(chi), CoherentLabel::new(a0 * t).rotated(chi));
    let vacuum = coherent_overlap(beta_p, CoherentLabel::vacuum());
    which_path * transmitted * vacuum * reflected
}

pub fn f_plus<F: Real>(
    alpha_p: CoherentLabel<F>,
    beta_p: CoherentLabel<F>,
    params: &ExperimentParams<F>,
) -> Complex<F> {
    f_branch(Sign::Plus, alpha_p, beta_p, params)
}

pub fn f_minus<F: Real>(
    alpha_p: CoherentLabel<F>,
    beta_p: CoherentLabel<F>,
    params: &ExperimentParams<F>,
) -> Complex<F> {
    f_branch(Sign::Minus, alpha_p, beta_p, params)
}

/// Post-selected Q-term for `tag` from the `f_+-` amplitudes:
/// `c_n^2 w f_{ket} conj(f_{bra}) / pi^2`, `w = e^{-i theta}` for `(+,-)`,
/// `e^{i theta}` for `(-,+)` and 1 on the diagonal.
pub fn q_branch<F: Real>(
    tag: (Sign, Sign),
    alpha_p: CoherentLabel<F>,
    beta_p: CoherentLabel<F>,
    params: &ExperimentParams<F>,
) -> Complex<F> {
    let cn = params.cat().norm_const;
    let phase = match tag {
        (Sign::Plus, Sign::Minus) => cis(-params.theta()),
        (Sign::Minus, Sign::Plus) => cis(params.theta()),
        _ => Complex::new(F::one(), F::zero()),
    };
    let ket = f_branch(tag.0, alpha_p, beta_p, params);
    let bra = f_branch(tag.1, alpha_p, beta_p, params);
    phase * ket * bra.conj() * (cn * cn / (pi::<F>() * pi::<F>()))
}

/// `Q_term(a', b')` for an arbitrary coherent outer product.
pub fn q_term<F: Real>(term: &BranchTerm<F>, alpha_p: CoherentLabel<F>, beta_p: CoherentLabel<F>) -> Complex<F> {
    let a = coherent_overlap(alpha_p, term.ket[0]) * coherent_overlap(alpha_p, term.bra[0]).conj();
    let b = coherent_overlap(beta_p, term.ket[1]) * coherent_overlap(beta_p, term.bra[1]).conj();
    term.weight * a * b / (pi::<F>() * pi::<F>())
}

/// `Q(a', b')` of a Hermitian set of terms.
pub fn q_full<F: Real>(
    terms: &[BranchTerm<F>],
    alpha_p: CoherentLabel<F>,
    beta_p: CoherentLabel<F>,
    negativity_tolerance: F,
) -> Result<F, PhaseSpaceError> {
    let mut sum = Complex::new(F::zero(), F::zero());
    let mut scale = F::zero();
    for term in terms {
        let q = q_term(term, alpha_p, beta_p);
        scale += q.norm();
        sum += q;
    }
    if sum.im.abs() > F::lit(1e-10) * scale.max(F::min_positive_value()) {
        return Err(PhaseSpaceError::NonHermitian { imag: sum.im.to_f64().unwrap_or(f64::NAN) });
    }
    if sum.re < -negativity_tolerance {
        return Err(PhaseSpaceError::Negative { value: sum.re.to_f64().unwrap_or(f64::NAN) });
    }
    Ok(sum.re)
}

/// Half-width and spacing of a phase-space grid, before it is centred.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec<F> {
    pub half_width: F,
    pub spacing: F,
}

impl<F: Real> Default for GridSpec<F> {
    fn default() -> Self {
        Self { half_width: F::lit(6.0), spacing: F::lit(0.1) }
    }
}

impl<F: Real> GridSpec<F> {
    pub fn validate(&self) -> Result<(), PhaseSpaceError> {
        if !self.spacing.is_finite() || self.spacing <= F::zero() {
            return Err(PhaseSpaceError::Grid(format!("spacing {} must be positive", self.spacing)));
        }
        if !self.half_width.is_finite() || self.half_width < F::lit(6.0) * self.spacing {
            return Err(PhaseSpaceError::Grid(format!(
                "half-width {} must be at least 6 x spacing {}",
                self.half_width, self.spacing
            )));
        }
        Ok(())
    }

    pub fn around(&self, center_a: Complex<F>, center_b: Complex<F>) -> Result<QGrid<F>, PhaseSpaceError> {
        QGrid::new(self.half_width, self.spacing, center_a, center_b)
    }

    /// Grid centred on a term's Gaussian envelope in both planes.
    pub fn for_term(&self, term: &BranchTerm<F>) -> Result<QGrid<F>, PhaseSpaceError> {
        let [a, b] = term.centers();
        self.around(a, b)
    }
}

/// Square midpoint grid over the `alpha'` and `beta'` planes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QGrid<F> {
    half_width: F,
    spacing: F,
    center_a: Complex<F>,
    center_b: Complex<F>,
    cells: usize,
}

impl<F: Real> QGrid<F> {
    /// The cell count per axis is `round(2 half_width / spacing)`; the cell
    /// width is adjusted so the cells tile the square exactly.
    pub fn new(half_width: F, spacing: F, center_a: Complex<F>, center_b: Complex<F>) -> Result<Self, PhaseSpaceError> {
        GridSpec { half_width, spacing }.validate()?;
        let cells = (F::lit(2.0) * half_width / spacing).round().to_usize().unwrap_or(0).max(1);
        Ok(Self { half_width, spacing, center_a, center_b, cells })
    }

    pub fn half_width(&self) -> F {
        self.half_width
    }

    pub fn spacing(&self) -> F {
        self.spacing
    }

    pub fn centers(&self) -> [Complex<F>; 2] {
        [self.center_a, self.center_b]
    }

    pub fn cells_per_axis(&self) -> usize {
        self.cells
    }

    pub fn cell_width(&self) -> F {
        F::lit(2.0) * self.half_width / F::from_usize_lossy(self.cells)
    }

    /// `d^2 alpha = d(Re alpha) d(Im alpha)` for one cell.
    pub fn cell_area(&self) -> F {
        let w = self.cell_width();
        w * w
    }

    /// Cell midpoints of one plane in row-major order (imaginary part outer).
    pub fn nodes(&self, plane: usize) -> Vec<Complex<F>> {
        let center = if plane == 0 { self.center_a } else { self.center_b };
        let axis = self.axis();
        let mut out = Vec::with_capacity(self.cells * self.cells);
        for &y in &axis {
            for &x in &axis {
                out.push(center + Complex::new(x, y));
            }
        }
        out
    }

    fn axis(&self) -> Vec<F> {
        let w = self.cell_width();
        (0..self.cells).map(|k| -self.half_width + (F::from_usize_lossy(k) + F::lit(0.5)) * w).collect()
    }

    fn is_edge(&self, k: usize) -> bool {
        let (ix, iy) = (k % self.cells, k / self.cells);
        ix == 0 || iy == 0 || ix + 1 == self.cells || iy + 1 == self.cells
    }
}

/// Result of a grid integration with its support-coverage diagnostic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QIntegral<F> {
    pub value: Complex<F>,
    /// Largest boundary sample magnitude relative to the peak sample.
    pub edge_ratio: F,
}

impl<F: Real> QIntegral<F> {
    pub fn is_covered(&self, tolerance: F) -> bool {
        self.edge_ratio <= tolerance
    }
}

/// Midpoint sum of `<x|ket><bra|x> d^2x` over one plane, with edge ratio.
fn plane_sum<F: Real>(ket: CoherentLabel<F>, bra: CoherentLabel<F>, grid: &QGrid<F>, plane: usize) -> (Complex<F>, F) {
    let mut sum = Complex::new(F::zero(), F::zero());
    let mut peak = F::zero();
    let mut edge = F::zero();
    for (k, node) in grid.nodes(plane).into_iter().enumerate() {
        let x = CoherentLabel::new(node);
        let g = coherent_overlap(x, ket) * coherent_overlap(x, bra).conj();
        let m = g.norm();
        peak = peak.max(m);
        if grid.is_edge(k) {
            edge = edge.max(m);
        }
        sum += g;
    }
    let ratio = if peak > F::zero() { edge / peak } else { F::zero() };
    (sum * grid.cell_area(), ratio)
}

/// Default coverage threshold for [`integrate_q_term`] warnings.
pub const COVERAGE_TOLERANCE: f64 = 1e-10;

/// Midpoint approximation of `int Q_term d^2 alpha' d^2 beta'`.
///
/// The integrand is a product of an `alpha'`-plane and a `beta'`-plane factor,
/// so the four-dimensional midpoint sum equals the product of two planar sums.
pub fn integrate_q_term<F: Real>(term: &BranchTerm<F>, grid: &QGrid<F>) -> QIntegral<F> {
    let (sa, ra) = plane_sum(term.ket[0], term.bra[0], grid, 0);
    let (sb, rb) = plane_sum(term.ket[1], term.bra[1], grid, 1);
    let pi2 = pi::<F>() * pi::<F>();
    let result = QIntegral { value: term.weight * sa * sb / pi2, edge_ratio: ra.max(rb) };
    if !result.is_covered(F::lit(COVERAGE_TOLERANCE)) {
        warn!(
            "phase-space grid under-covers term {}{}: boundary/peak = {:e}",
            term.tag.0.symbol(),
            term.tag.1.symbol(),
            result.edge_ratio.to_f64().unwrap_or(f64::NAN)
        );
    }
    result
}

/// `Q` integrated over `beta'`, sampled on the `alpha'` plane of `grid`.
pub fn marginal_a<F: Real>(terms: &[BranchTerm<F>], grid: &QGrid<F>) -> Vec<(Complex<F>, Complex<F>)> {
    let nodes = grid.nodes(0);
    let mut out: Vec<(Complex<F>, Complex<F>)> =
        nodes.iter().map(|&n| (n, Complex::new(F::zero(), F::zero()))).collect();
    let pi = pi::<F>();
    for term in terms {
        let (sb, _) = plane_sum(term.ket[1], term.bra[1], grid, 1);
        let scale = term.weight * sb / (pi * pi);
        for (node, value) in out.iter_mut() {
            let x = CoherentLabel::new(*node);
            *value += scale * coherent_overlap(x, term.ket[0]) * coherent_overlap(x, term.bra[0]).conj();
        }
    }
    out
}

/// `Q` integrated over `alpha'`, sampled on the `beta'` plane of `grid`.
pub fn marginal_b<F: Real>(terms: &[BranchTerm<F>], grid: &QGrid<F>) -> Vec<(Complex<F>, Complex<F>)> {
    let swapped: Vec<BranchTerm<F>> =
        terms.iter().map(|t| BranchTerm { ket: [t.ket[1], t.ket[0]], bra: [t.bra[1], t.bra[0]], ..*t }).collect();
    let [ca, cb] = grid.centers();
    let swapped_grid = QGrid { center_a: cb, center_b: ca, ..*grid };
    marginal_a(&swapped, &swapped_grid)
}

/// `exp(-2 R^2 sin^2(phi) |alpha0|^2)`.
pub fn visibility_closed_form<F: Real>(reflectivity: F, abs_alpha0: F, phi: F) -> F {
    let s = phi.sin();
    (-F::lit(2.0) * reflectivity * reflectivity * s * s * abs_alpha0 * abs_alpha0).exp()
}

pub fn visibility_analytic<F: Real>(params: &ExperimentParams<F>) -> F {
    visibility_closed_form(params.reflectivity(), params.alpha0().norm(), params.phi())
}

/// `|<e^{i phi} alpha0 | e^{-i phi} alpha0>|`, the overlap of the two input
/// components. The integral route to the visibility assumes it is small.
pub fn component_overlap<F: Real>(params: &ExperimentParams<F>) -> F {
    let cat = params.cat();
    coherent_overlap(cat.plus(), cat.minus()).norm()
}

/// `|int Q_{+-}| / c_n^2` for the post-selected interference term on the
/// parameter set's grid.
pub fn visibility_from_integral<F: Real>(params: &ExperimentParams<F>) -> Result<(F, QIntegral<F>), PhaseSpaceError> {
    let overlap = component_overlap(params);
    if overlap >= params.tolerances().overlap_proviso {
        warn!(
            "cat components overlap ({:e}); integral route assumes well-separated components",
            overlap.to_f64().unwrap_or(f64::NAN)
        );
    }
    let term = post_selected_terms(params)[1];
    let grid = params.grid().for_term(&term)?;
    let integral = integrate_q_term(&term, &grid);
    let cn = params.cat().norm_const;
    Ok((integral.value.norm() / (cn * cn), integral))
}

/// Reflected labels of the two cat components; their overlap is the
/// which-path record left in mode B.
pub fn which_path_labels<F: Real>(params: &ExperimentParams<F>) -> (CoherentLabel<F>, CoherentLabel<F>) {
    let bs = params.beam_splitter();
    let cat = params.cat();
    (bs_coherent_map(&bs, cat.plus()).1, bs_coherent_map(&bs, cat.minus()).1)
}
