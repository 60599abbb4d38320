//! Brute-force verifier in a truncated Fock space.
//!
//! Independently of the Gaussian engine, this module integrates either the
//! Schrödinger equation (pure states) or the Lindblad master equation with
//! mechanical damping (density matrices) for the same Hamiltonians, working
//! in the bosonic picture the collective spins map onto. Observables are
//! computed from exact expectations and packed into the same moment-state and
//! squeezing-trace types as the Gaussian path, so any downstream analysis can
//! compare the two engines sample by sample.
//!
//! The integrator is fixed-step classical RK4. The automatic step honours
//! three bounds: 1/(50 f_max d_max) with f_max the largest drift frequency
//! and d_max the largest cutoff (ladder matrix elements grow with the
//! cutoff), a norm-conservation budget of 1e-9 over the horizon derived from
//! the RK4 amplification factor, and the RK4 stability limit. Every run is
//! repeated at half step; the difference of the final variances is reported
//! as a Richardson error estimate and the finer result is returned.
//!
//! Truncation is policed two ways: a pre-run adequacy heuristic requires
//! cutoff >= 4 + 6 * (predicted peak excitation) per mode, and during the run
//! the total population of boundary levels must stay below 1e-6.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::analytic::OscConvention;
use crate::builder::{build_effective_model, build_full_model, build_squeeze_model, LinearModel};
use crate::error::{Error, Result};
use crate::gaussian::{propagate_trace, vacuum_state, MomentState, Provenance, Trajectory};
use crate::linalg;
use crate::model::{Mode, SystemParams};
use crate::observables::{self, SqueezingTrace};

/// Hamiltonian families the oracle can integrate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum HamiltonianSource {
    /// Four-mode rotating-frame model with the Zeeman offset forced to zero.
    FullEqualSplitting,
    /// Four-mode rotating-frame model with the offset read from the params.
    Full,
    /// Eliminated two-mode model with the offset forced to zero.
    EffectiveEqualSplitting,
    /// Eliminated two-mode model with the offset read from the params.
    Effective,
    /// Pure two-mode-squeeze generator B(c1 c2 + c1†c2†).
    PureSqueeze,
}

impl HamiltonianSource {
    pub fn n_modes(self) -> usize {
        match self {
            HamiltonianSource::FullEqualSplitting | HamiltonianSource::Full => 4,
            _ => 2,
        }
    }

    fn forces_equal_splitting(self) -> bool {
        matches!(
            self,
            HamiltonianSource::FullEqualSplitting | HamiltonianSource::EffectiveEqualSplitting
        )
    }
}

/// Amplitude budget for pure-state evolution.
pub const STATE_AMPLITUDE_BUDGET: usize = 4_000_000;
/// Amplitude budget for density-matrix evolution (dim^2 entries).
pub const DENSITY_AMPLITUDE_BUDGET: usize = 40_000;
/// Ceiling on the total boundary-level population before the run aborts.
pub const BOUNDARY_POPULATION_LIMIT: f64 = 1e-6;
/// Norm-drift budget the automatic step size is derived from.
const NORM_BUDGET: f64 = 1e-9;

#[derive(Clone, Debug)]
pub struct FockConfig {
    /// Per-mode truncation, one entry per mode of the source, each >= 2.
    pub cutoffs: Vec<usize>,
    pub source: HamiltonianSource,
    /// Evolve the Lindblad master equation with mechanical damping instead
    /// of the Schrödinger equation. Needs a four-mode source.
    pub dissipation: bool,
    /// Fixed integrator step in seconds; `None` selects the automatic rule.
    pub integrator_step: Option<f64>,
}

/// Everything a Fock run produces.
#[derive(Clone, Debug)]
pub struct FockRun {
    /// Moment states reconstructed from exact expectations.
    pub trajectory: Trajectory,
    /// Squeezing observables of the (c1, c2) pair at the requested angle.
    pub trace: SqueezingTrace,
    /// Step actually used (the finer, halved one).
    pub step: f64,
    /// max |<psi|psi> - 1| (pure) or max |Tr rho - 1| (density) seen.
    pub norm_drift: f64,
    /// Largest boundary-level population seen.
    pub boundary_population: f64,
    /// |V_theta(t_end; h) - V_theta(t_end; h/2)|.
    pub richardson_error: f64,
}

// ---------------------------------------------------------------------------
// Fock space indexing and sparse ladder application
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
struct FockSpace {
    dims: Vec<usize>,
    strides: Vec<usize>,
    dim: usize,
}

impl FockSpace {
    fn new(dims: &[usize]) -> Self {
        let mut strides = vec![0; dims.len()];
        let mut acc = 1;
        // Last mode varies fastest.
        for k in (0..dims.len()).rev() {
            strides[k] = acc;
            acc *= dims[k];
        }
        Self { dims: dims.to_vec(), strides, dim: acc }
    }

    #[inline]
    fn occupation(&self, idx: usize, mode: usize) -> usize {
        (idx / self.strides[mode]) % self.dims[mode]
    }

    /// Total population of basis states with any mode at its top level.
    fn boundary_population_state(&self, psi: &DVector<Complex64>) -> f64 {
        psi.iter()
            .enumerate()
            .filter(|(idx, _)| self.on_boundary(*idx))
            .map(|(_, amp)| amp.norm_sqr())
            .sum()
    }

    fn boundary_population_density(&self, rho: &DMatrix<Complex64>) -> f64 {
        (0..self.dim)
            .filter(|&idx| self.on_boundary(idx))
            .map(|idx| rho[(idx, idx)].re)
            .sum()
    }

    #[inline]
    fn on_boundary(&self, idx: usize) -> bool {
        (0..self.dims.len()).any(|k| self.occupation(idx, k) + 1 == self.dims[k])
    }
}

#[derive(Clone, Copy, Debug)]
enum Ladder {
    Lower(usize),
    Raise(usize),
    Number(usize),
}

/// One Hamiltonian term: coef * ops[0] * ops[1] (ops applied right to left).
#[derive(Clone, Debug)]
struct Term {
    coef: f64,
    ops: Vec<Ladder>,
}

/// out += scale * (op psi)
fn apply_ladder_vec(
    space: &FockSpace,
    op: Ladder,
    scale: Complex64,
    psi: &DVector<Complex64>,
    out: &mut DVector<Complex64>,
) {
    match op {
        Ladder::Lower(k) => {
            let s = space.strides[k];
            for idx in 0..space.dim {
                let n = space.occupation(idx, k);
                if n >= 1 {
                    out[idx - s] += scale * (n as f64).sqrt() * psi[idx];
                }
            }
        }
        Ladder::Raise(k) => {
            let s = space.strides[k];
            let top = space.dims[k] - 1;
            for idx in 0..space.dim {
                let n = space.occupation(idx, k);
                if n < top {
                    out[idx + s] += scale * ((n + 1) as f64).sqrt() * psi[idx];
                }
            }
        }
        Ladder::Number(k) => {
            for idx in 0..space.dim {
                let n = space.occupation(idx, k);
                if n > 0 {
                    out[idx] += scale * (n as f64) * psi[idx];
                }
            }
        }
    }
}

/// out += scale * H psi, using `scratch` for two-op terms.
fn apply_terms_vec(
    space: &FockSpace,
    terms: &[Term],
    scale: Complex64,
    psi: &DVector<Complex64>,
    out: &mut DVector<Complex64>,
    scratch: &mut DVector<Complex64>,
) {
    let one = Complex64::new(1.0, 0.0);
    for term in terms {
        let coef = scale * term.coef;
        match term.ops.as_slice() {
            [op] => apply_ladder_vec(space, *op, coef, psi, out),
            [first, second] => {
                scratch.fill(Complex64::new(0.0, 0.0));
                apply_ladder_vec(space, *second, one, psi, scratch);
                apply_ladder_vec(space, *first, coef, scratch, out);
            }
            _ => unreachable!("terms carry one or two ladder operators"),
        }
    }
}

/// M' = op M (left multiplication), done through the index maps.
fn ladder_left(space: &FockSpace, op: Ladder, m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let d = space.dim;
    let mut out = DMatrix::zeros(d, d);
    match op {
        Ladder::Lower(k) => {
            // (a M)[r, c] = sqrt(n_k(r) + 1) M[r + s, c]
            let s = space.strides[k];
            let top = space.dims[k] - 1;
            for r in 0..d {
                let n = space.occupation(r, k);
                if n < top {
                    let w = ((n + 1) as f64).sqrt();
                    for c in 0..d {
                        out[(r, c)] = w * m[(r + s, c)];
                    }
                }
            }
        }
        Ladder::Raise(k) => {
            // (a† M)[r, c] = sqrt(n_k(r)) M[r - s, c]
            let s = space.strides[k];
            for r in 0..d {
                let n = space.occupation(r, k);
                if n >= 1 {
                    let w = (n as f64).sqrt();
                    for c in 0..d {
                        out[(r, c)] = w * m[(r - s, c)];
                    }
                }
            }
        }
        Ladder::Number(k) => {
            for r in 0..d {
                let n = space.occupation(r, k) as f64;
                for c in 0..d {
                    out[(r, c)] = n * m[(r, c)];
                }
            }
        }
    }
    out
}

/// M' = M op (right multiplication).
fn ladder_right(space: &FockSpace, op: Ladder, m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let d = space.dim;
    let mut out = DMatrix::zeros(d, d);
    match op {
        Ladder::Lower(k) => {
            // a's only entry in column c is at row c - s with weight
            // sqrt(n_k(c)), so (M a)[r, c] = sqrt(n_k(c)) M[r, c - s].
            let s = space.strides[k];
            for c in 0..d {
                let n = space.occupation(c, k);
                if n >= 1 {
                    let w = (n as f64).sqrt();
                    for r in 0..d {
                        out[(r, c)] = w * m[(r, c - s)];
                    }
                }
            }
        }
        Ladder::Raise(k) => {
            // (M a†)[r, c] = sqrt(n_k(c) + 1) M[r, c + s]
            let s = space.strides[k];
            let top = space.dims[k] - 1;
            for c in 0..d {
                let n = space.occupation(c, k);
                if n < top {
                    let w = ((n + 1) as f64).sqrt();
                    for r in 0..d {
                        out[(r, c)] = w * m[(r, c + s)];
                    }
                }
            }
        }
        Ladder::Number(k) => {
            for c in 0..d {
                let n = space.occupation(c, k) as f64;
                for r in 0..d {
                    out[(r, c)] = n * m[(r, c)];
                }
            }
        }
    }
    out
}

fn term_left(space: &FockSpace, term: &Term, m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let mut out = m.clone();
    for op in term.ops.iter().rev() {
        out = ladder_left(space, *op, &out);
    }
    out * Complex64::new(term.coef, 0.0)
}

fn term_right(space: &FockSpace, term: &Term, m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let mut out = m.clone();
    for op in term.ops.iter() {
        out = ladder_right(space, *op, &out);
    }
    out * Complex64::new(term.coef, 0.0)
}

// ---------------------------------------------------------------------------
// Hamiltonian assembly
// ---------------------------------------------------------------------------

fn effective_splitting(p: &SystemParams, source: HamiltonianSource) -> SystemParams {
    let mut q = *p;
    if source.forces_equal_splitting() {
        q.delta_b2 = q.delta_b1;
    }
    q
}

/// Hamiltonian terms in the layout's mode order.
fn hamiltonian_terms(p: &SystemParams, source: HamiltonianSource) -> Result<Vec<Term>> {
    let p = effective_splitting(p, source);
    let g = p.g_collective;
    let v = p.v;
    let omega = p.detuning();
    let delta = p.zeeman_offset();
    let t = |coef: f64, ops: Vec<Ladder>| Term { coef, ops };

    Ok(match source {
        HamiltonianSource::Full | HamiltonianSource::FullEqualSplitting => {
            // Modes [c1, c2, a, b] = [0, 1, 2, 3]:
            // H = -omega (n_a + n_b) + Delta n_c2
            //     + g (a†c1 + a c1†) + g (b†c2† + b c2) + v (a†b + a b†)
            let mut terms = vec![
                t(-omega, vec![Ladder::Number(2)]),
                t(-omega, vec![Ladder::Number(3)]),
                t(g, vec![Ladder::Raise(2), Ladder::Lower(0)]),
                t(g, vec![Ladder::Lower(2), Ladder::Raise(0)]),
                t(g, vec![Ladder::Raise(3), Ladder::Raise(1)]),
                t(g, vec![Ladder::Lower(3), Ladder::Lower(1)]),
                t(v, vec![Ladder::Raise(2), Ladder::Lower(3)]),
                t(v, vec![Ladder::Lower(2), Ladder::Raise(3)]),
            ];
            if delta != 0.0 {
                terms.push(t(delta, vec![Ladder::Number(1)]));
            }
            terms
        }
        HamiltonianSource::Effective | HamiltonianSource::EffectiveEqualSplitting => {
            let eff = crate::model::effective_params(&p)?;
            vec![
                t(eff.a_coef, vec![Ladder::Number(0)]),
                t(eff.a_coef + eff.delta, vec![Ladder::Number(1)]),
                t(eff.b_coef, vec![Ladder::Lower(0), Ladder::Lower(1)]),
                t(eff.b_coef, vec![Ladder::Raise(0), Ladder::Raise(1)]),
            ]
        }
        HamiltonianSource::PureSqueeze => {
            let eff = crate::model::effective_params(&p)?;
            vec![
                t(eff.b_coef, vec![Ladder::Lower(0), Ladder::Lower(1)]),
                t(eff.b_coef, vec![Ladder::Raise(0), Ladder::Raise(1)]),
            ]
        }
    })
}

/// Gaussian model matching a source, used for step control and the cutoff
/// adequacy pre-check.
fn gaussian_counterpart(p: &SystemParams, source: HamiltonianSource) -> Result<LinearModel> {
    let p = effective_splitting(p, source);
    Ok(match source {
        HamiltonianSource::Full | HamiltonianSource::FullEqualSplitting => build_full_model(&p),
        HamiltonianSource::Effective | HamiltonianSource::EffectiveEqualSplitting => {
            build_effective_model(&p)?
        }
        HamiltonianSource::PureSqueeze => build_squeeze_model(&p)?,
    })
}

/// Rigorous upper bound on ||H||_2: sum over terms of |coef| * prod ||op||.
fn hamiltonian_norm_bound(space: &FockSpace, terms: &[Term]) -> f64 {
    terms
        .iter()
        .map(|term| {
            term.coef.abs()
                * term
                    .ops
                    .iter()
                    .map(|op| match op {
                        Ladder::Lower(k) | Ladder::Raise(k) => {
                            ((space.dims[*k] - 1) as f64).sqrt()
                        }
                        Ladder::Number(k) => (space.dims[*k] - 1) as f64,
                    })
                    .product::<f64>()
        })
        .sum()
}

// ---------------------------------------------------------------------------
// Moment extraction
// ---------------------------------------------------------------------------

/// Pair moments (<a_i a_j>, symmetrised <a_i a_j† / a_j† a_i>) and means.
struct RawMoments {
    n: usize,
    means: Vec<Complex64>,
    pair: Vec<Complex64>,
    cross: Vec<Complex64>,
}

impl RawMoments {
    fn to_moment_state(&self, time: f64) -> MomentState {
        let n = self.n;
        let sqrt2 = std::f64::consts::SQRT_2;
        let mut mean = DVector::zeros(2 * n);
        for k in 0..n {
            mean[2 * k] = sqrt2 * self.means[k].re;
            mean[2 * k + 1] = sqrt2 * self.means[k].im;
        }
        let mut cov = DMatrix::zeros(2 * n, 2 * n);
        for i in 0..n {
            for j in 0..n {
                let s = self.pair[i * n + j];
                let t = self.cross[i * n + j];
                let (mxi, mpi) = (mean[2 * i], mean[2 * i + 1]);
                let (mxj, mpj) = (mean[2 * j], mean[2 * j + 1]);
                cov[(2 * i, 2 * j)] = s.re + t.re - mxi * mxj;
                cov[(2 * i + 1, 2 * j + 1)] = -s.re + t.re - mpi * mpj;
                cov[(2 * i, 2 * j + 1)] = s.im - t.im - mxi * mpj;
                cov[(2 * i + 1, 2 * j)] = s.im + t.im - mpi * mxj;
            }
        }
        MomentState { time, mean, cov: linalg::symmetrize(&cov) }
    }
}

fn moments_from_state(space: &FockSpace, psi: &DVector<Complex64>) -> RawMoments {
    let n = space.dims.len();
    let zero = Complex64::new(0.0, 0.0);
    let one = Complex64::new(1.0, 0.0);
    let mut lowered = Vec::with_capacity(n);
    let mut raised = Vec::with_capacity(n);
    for k in 0..n {
        let mut u = DVector::zeros(space.dim);
        apply_ladder_vec(space, Ladder::Lower(k), one, psi, &mut u);
        let mut w = DVector::zeros(space.dim);
        apply_ladder_vec(space, Ladder::Raise(k), one, psi, &mut w);
        lowered.push(u);
        raised.push(w);
    }
    let mut means = vec![zero; n];
    let mut pair = vec![zero; n * n];
    let mut cross = vec![zero; n * n];
    for i in 0..n {
        means[i] = psi.dotc(&lowered[i]);
        for j in 0..n {
            // <a_i a_j> = (a_i† psi)† (a_j psi)
            pair[i * n + j] = raised[i].dotc(&lowered[j]);
            // (<a_i a_j†> + <a_j† a_i>)/2
            let ij = raised[i].dotc(&raised[j]);
            let ji = lowered[j].dotc(&lowered[i]);
            cross[i * n + j] = (ij + ji) * 0.5;
        }
    }
    RawMoments { n, means, pair, cross }
}

fn tr_ladder(space: &FockSpace, op: Ladder, m: &DMatrix<Complex64>) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    match op {
        Ladder::Lower(k) => {
            // Tr(a M) = sum_c sqrt(n_k(c)) M[c, c - s]
            let s = space.strides[k];
            for c in 0..space.dim {
                let n = space.occupation(c, k);
                if n >= 1 {
                    acc += (n as f64).sqrt() * m[(c, c - s)];
                }
            }
        }
        Ladder::Raise(k) => {
            let s = space.strides[k];
            let top = space.dims[k] - 1;
            for c in 0..space.dim {
                let n = space.occupation(c, k);
                if n < top {
                    acc += ((n + 1) as f64).sqrt() * m[(c, c + s)];
                }
            }
        }
        Ladder::Number(k) => {
            for c in 0..space.dim {
                acc += space.occupation(c, k) as f64 * m[(c, c)];
            }
        }
    }
    acc
}

fn moments_from_density(space: &FockSpace, rho: &DMatrix<Complex64>) -> RawMoments {
    let n = space.dims.len();
    let zero = Complex64::new(0.0, 0.0);
    let mut lowered = Vec::with_capacity(n);
    let mut raised = Vec::with_capacity(n);
    for k in 0..n {
        lowered.push(ladder_left(space, Ladder::Lower(k), rho));
        raised.push(ladder_left(space, Ladder::Raise(k), rho));
    }
    let mut means = vec![zero; n];
    let mut pair = vec![zero; n * n];
    let mut cross = vec![zero; n * n];
    for i in 0..n {
        means[i] = tr_ladder(space, Ladder::Lower(i), rho);
        for j in 0..n {
            // Tr(a_i a_j rho) = Tr(a_i (a_j rho))
            pair[i * n + j] = tr_ladder(space, Ladder::Lower(i), &lowered[j]);
            let ij = tr_ladder(space, Ladder::Lower(i), &raised[j]);
            let ji = tr_ladder(space, Ladder::Raise(j), &lowered[i]);
            cross[i * n + j] = (ij + ji) * 0.5;
        }
    }
    RawMoments { n, means, pair, cross }
}

// ---------------------------------------------------------------------------
// Evolution
// ---------------------------------------------------------------------------

struct PureEvolver<'a> {
    space: &'a FockSpace,
    terms: &'a [Term],
    scratch: DVector<Complex64>,
    stage: DVector<Complex64>,
    k: [DVector<Complex64>; 4],
}

impl<'a> PureEvolver<'a> {
    fn new(space: &'a FockSpace, terms: &'a [Term]) -> Self {
        let z = DVector::zeros(space.dim);
        Self {
            space,
            terms,
            scratch: z.clone(),
            stage: z.clone(),
            k: [z.clone(), z.clone(), z.clone(), z],
        }
    }

    /// k[slot] = -i H psi
    fn rhs(&mut self, slot: usize) {
        self.k[slot].fill(Complex64::new(0.0, 0.0));
        let (stage, scratch, out) = (&self.stage, &mut self.scratch, &mut self.k[slot]);
        apply_terms_vec(self.space, self.terms, -Complex64::I, stage, out, scratch);
    }

    fn step(&mut self, psi: &mut DVector<Complex64>, h: f64) {
        let one = Complex64::new(1.0, 0.0);
        self.stage.copy_from(psi);
        self.rhs(0);

        self.stage.copy_from(psi);
        self.stage.axpy(Complex64::new(h / 2.0, 0.0), &self.k[0], one);
        self.rhs(1);

        self.stage.copy_from(psi);
        self.stage.axpy(Complex64::new(h / 2.0, 0.0), &self.k[1], one);
        self.rhs(2);

        self.stage.copy_from(psi);
        self.stage.axpy(Complex64::new(h, 0.0), &self.k[2], one);
        self.rhs(3);

        let w = Complex64::new(h / 6.0, 0.0);
        let w2 = Complex64::new(h / 3.0, 0.0);
        psi.axpy(w, &self.k[0], one);
        psi.axpy(w2, &self.k[1], one);
        psi.axpy(w2, &self.k[2], one);
        psi.axpy(w, &self.k[3], one);
    }
}

struct LindbladEvolver<'a> {
    space: &'a FockSpace,
    terms: &'a [Term],
    /// (mode index, downward rate kappa (n_th + 1), upward rate kappa n_th)
    channels: Vec<(usize, f64, f64)>,
}

impl LindbladEvolver<'_> {
    fn rhs(&self, rho: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        let space = self.space;
        let mut out = DMatrix::zeros(space.dim, space.dim);
        let i = Complex64::I;
        for term in self.terms {
            out += (term_right(space, term, rho) - term_left(space, term, rho)) * i;
        }
        let half = Complex64::new(0.5, 0.0);
        for &(k, down, up) in &self.channels {
            let lower = Ladder::Lower(k);
            let raise = Ladder::Raise(k);
            if down > 0.0 {
                // a rho a† - {a†a, rho}/2, with a†a composed from the
                // truncated factors so the trace is conserved exactly:
                // a†a rho = a†(a rho), rho a†a = (rho a†) a.
                let jump = ladder_right(space, raise, &ladder_left(space, lower, rho));
                let nl = ladder_left(space, raise, &ladder_left(space, lower, rho));
                let nr = ladder_right(space, lower, &ladder_right(space, raise, rho));
                out += (jump - (nl + nr) * half) * Complex64::new(down, 0.0);
            }
            if up > 0.0 {
                let jump = ladder_right(space, lower, &ladder_left(space, raise, rho));
                let nl = ladder_left(space, lower, &ladder_left(space, raise, rho));
                let nr = ladder_right(space, raise, &ladder_right(space, lower, rho));
                out += (jump - (nl + nr) * half) * Complex64::new(up, 0.0);
            }
        }
        out
    }

    fn step(&self, rho: &mut DMatrix<Complex64>, h: f64) {
        let k1 = self.rhs(rho);
        let k2 = self.rhs(&(&*rho + &k1 * Complex64::new(h / 2.0, 0.0)));
        let k3 = self.rhs(&(&*rho + &k2 * Complex64::new(h / 2.0, 0.0)));
        let k4 = self.rhs(&(&*rho + &k3 * Complex64::new(h, 0.0)));
        let two = Complex64::new(2.0, 0.0);
        *rho += (k1 + (k2 + k3) * two + k4) * Complex64::new(h / 6.0, 0.0);
    }
}

fn validate_config(p: &SystemParams, cfg: &FockConfig) -> Result<FockSpace> {
    let n_modes = cfg.source.n_modes();
    if cfg.cutoffs.len() != n_modes {
        return Err(Error::InvalidParams(format!(
            "source needs {n_modes} cutoffs, got {}",
            cfg.cutoffs.len()
        )));
    }
    if let Some(&bad) = cfg.cutoffs.iter().find(|&&c| c < 2) {
        return Err(Error::InvalidParams(format!("cutoffs must be >= 2, got {bad}")));
    }
    if cfg.dissipation && n_modes != 4 {
        return Err(Error::DissipationUnsupported(
            "mechanical damping acts on the beam modes, which the eliminated models drop".into(),
        ));
    }
    let space = FockSpace::new(&cfg.cutoffs);
    let (amplitudes, budget) = if cfg.dissipation {
        (space.dim * space.dim, DENSITY_AMPLITUDE_BUDGET)
    } else {
        (space.dim, STATE_AMPLITUDE_BUDGET)
    };
    if amplitudes > budget {
        return Err(Error::BudgetExceeded { amplitudes, budget });
    }
    if cfg.dissipation && p.kappa == 0.0 {
        return Err(Error::InvalidParams(
            "dissipative run requested but kappa = 0; use dissipation = false".into(),
        ));
    }
    Ok(space)
}

/// Truncation level needed by the adequacy heuristic for one mode:
/// cutoff >= 4 + 6 * peak, rounded to the integer level grid, with
/// near-vacuum modes (peak <= 3e-4) allowed three levels.
fn adequacy_required(peak: f64) -> usize {
    if peak <= 3.0e-4 {
        3
    } else {
        ((4.0 + 6.0 * peak).round() as usize).max(4)
    }
}

/// Cutoff that comfortably clears the boundary-population guard for a mode
/// whose occupation distribution has a thermal-like tail of mean `peak`:
/// the smallest level count whose top-level population estimate stays an
/// order of magnitude below [`BOUNDARY_POPULATION_LIMIT`], floored by the
/// adequacy heuristic.
pub fn suggested_cutoff(peak: f64) -> usize {
    let floor = adequacy_required(peak);
    if peak <= 0.0 {
        return floor;
    }
    let ratio = peak / (1.0 + peak);
    let target = 0.1 * BOUNDARY_POPULATION_LIMIT * (1.0 + peak);
    let levels = (target.ln() / ratio.ln()).ceil() as usize + 1;
    levels.max(floor)
}

/// Cutoff adequacy: per-mode peak excitations predicted by the (cheap, exact)
/// Gaussian engine must satisfy the adequacy heuristic. Returns the peaks for
/// step control.
fn adequacy_check(cfg: &FockConfig, model: &LinearModel, t_end: f64) -> Result<Vec<f64>> {
    let s0 = vacuum_state(&model.layout);
    let traj = propagate_trace(model, &s0, t_end, 257)?;
    let mut peaks = Vec::with_capacity(model.layout.n_modes());
    for (k, &mode) in model.layout.modes().iter().enumerate() {
        let peak = traj
            .states
            .iter()
            .map(|s| observables::mode_excitation(s, &model.layout, mode).expect("mode present"))
            .fold(0.0, f64::max);
        let required = adequacy_required(peak);
        if cfg.cutoffs[k] < required {
            return Err(Error::CutoffInadequate {
                mode: mode.label().into(),
                cutoff: cfg.cutoffs[k],
                required,
                peak,
            });
        }
        peaks.push(peak);
    }
    Ok(peaks)
}

fn auto_step(
    cfg: &FockConfig,
    space: &FockSpace,
    terms: &[Term],
    model: &LinearModel,
    t_end: f64,
    peaks: &[f64],
) -> f64 {
    if let Some(h) = cfg.integrator_step {
        return h;
    }
    let d_max = *space.dims.iter().max().expect("nonempty dims") as f64;
    let radius = model.spectral_radius().max(f64::MIN_POSITIVE);
    let dt_spec = std::f64::consts::TAU / (50.0 * radius * d_max);
    // Hard stability bound from the rigorous norm bound: the truncation
    // boundary carries (tiny) amplitude at the full operator norm, and RK4
    // must not amplify it.
    let h_norm = hamiltonian_norm_bound(space, terms).max(f64::MIN_POSITIVE);
    let dt_stab = 2.0 / h_norm;
    if cfg.dissipation {
        // The Lindblad RHS annihilates the trace exactly, so only accuracy
        // and stability constrain the step.
        return dt_spec.min(dt_stab);
    }
    // Norm budget: RK4 shrinks an energy-E component by ~ (E h)^6/72 per
    // step. The occupied sector sits at a few quanta, far below the norm
    // bound of the boundary levels; estimate its energy from the drift
    // spectrum and the predicted occupations.
    let quanta = 3.0 + 2.0 * peaks.iter().sum::<f64>();
    let e_eff = radius * quanta;
    let dt_norm = (72.0 * NORM_BUDGET / (t_end * e_eff.powi(6))).powf(0.2);
    dt_spec.min(dt_stab).min(dt_norm)
}

/// Evolve the exact state and return Gaussian-path-compatible observables.
///
/// `theta` is the joint-quadrature angle recorded in the trace (the full
/// moment trajectory is returned as well, so any other angle can be read off
/// afterwards).
pub fn evolve_fock(
    p: &SystemParams,
    cfg: &FockConfig,
    t_end: f64,
    n_samples: usize,
    theta: f64,
) -> Result<FockRun> {
    if !(t_end > 0.0) || !t_end.is_finite() {
        return Err(Error::InvalidParams(format!("horizon must be > 0, got {t_end}")));
    }
    if n_samples < 2 {
        return Err(Error::InvalidParams(format!("need at least 2 samples, got {n_samples}")));
    }
    let space = validate_config(p, cfg)?;
    let terms = hamiltonian_terms(p, cfg.source)?;
    let model = gaussian_counterpart(p, cfg.source)?;
    let peaks = adequacy_check(cfg, &model, t_end)?;
    let dt = auto_step(cfg, &space, &terms, &model, t_end, &peaks);

    let coarse = run_once(p, cfg, &space, &terms, &model, t_end, n_samples, theta, dt)?;
    let fine = run_once(p, cfg, &space, &terms, &model, t_end, n_samples, theta, dt / 2.0)?;
    let richardson_error =
        (coarse.trace.variance_theta.last().unwrap() - fine.trace.variance_theta.last().unwrap())
            .abs();
    Ok(FockRun { richardson_error, ..fine })
}

#[allow(clippy::too_many_arguments)]
fn run_once(
    p: &SystemParams,
    cfg: &FockConfig,
    space: &FockSpace,
    terms: &[Term],
    model: &LinearModel,
    t_end: f64,
    n_samples: usize,
    theta: f64,
    dt: f64,
) -> Result<FockRun> {
    let interval = t_end / (n_samples - 1) as f64;
    let substeps = (interval / dt).ceil().max(1.0) as usize;
    let h = interval / substeps as f64;

    let mut norm_drift: f64 = 0.0;
    let mut boundary_max: f64 = 0.0;
    let mut states = Vec::with_capacity(n_samples);

    enum Carrier<'a> {
        Pure(DVector<Complex64>, PureEvolver<'a>),
        Density(DMatrix<Complex64>, LindbladEvolver<'a>),
    }

    let mut carrier = if cfg.dissipation {
        let mut rho = DMatrix::zeros(space.dim, space.dim);
        rho[(0, 0)] = Complex64::new(1.0, 0.0);
        let channels = model
            .layout
            .modes()
            .iter()
            .enumerate()
            .filter(|(_, m)| m.is_mechanical())
            .map(|(k, _)| (k, p.kappa * (p.n_th + 1.0), p.kappa * p.n_th))
            .collect();
        Carrier::Density(rho, LindbladEvolver { space, terms, channels })
    } else {
        let mut psi = DVector::zeros(space.dim);
        psi[0] = Complex64::new(1.0, 0.0);
        Carrier::Pure(psi, PureEvolver::new(space, terms))
    };

    for sample in 0..n_samples {
        let time = sample as f64 * interval;
        if sample > 0 {
            match &mut carrier {
                Carrier::Pure(psi, evolver) => {
                    for _ in 0..substeps {
                        evolver.step(psi, h);
                    }
                }
                Carrier::Density(rho, evolver) => {
                    for _ in 0..substeps {
                        evolver.step(rho, h);
                    }
                }
            }
        }
        let (raw, drift, boundary) = match &carrier {
            Carrier::Pure(psi, _) => {
                let drift = (psi.norm_squared() - 1.0).abs();
                let boundary = space.boundary_population_state(psi);
                (moments_from_state(space, psi), drift, boundary)
            }
            Carrier::Density(rho, _) => {
                let trace: Complex64 = (0..space.dim).map(|i| rho[(i, i)]).sum();
                let drift = (trace.re - 1.0).abs().max(trace.im.abs());
                let boundary = space.boundary_population_density(rho);
                (moments_from_density(space, rho), drift, boundary)
            }
        };
        norm_drift = norm_drift.max(drift);
        boundary_max = boundary_max.max(boundary);
        if boundary > BOUNDARY_POPULATION_LIMIT {
            return Err(Error::CutoffOverflow {
                time,
                population: boundary,
                limit: BOUNDARY_POPULATION_LIMIT,
            });
        }
        states.push(raw.to_moment_state(time));
    }

    let trajectory = Trajectory {
        states,
        provenance: Provenance {
            model: format!("truncated-Fock oracle for: {}", model.description),
            integrator: if cfg.dissipation {
                "rk4-lindblad".into()
            } else {
                "rk4-schrodinger".into()
            },
            step_control: format!("h = {h:.6e} s ({substeps} substeps per sample)"),
        },
        truncation: None,
    };
    let trace = observables::squeezing_trace(
        &trajectory,
        &model.layout,
        (Mode::C1, Mode::C2),
        theta,
        p.n_spins,
        observables::HP_FRACTION,
    )?;
    Ok(FockRun {
        trajectory,
        trace,
        step: h,
        norm_drift,
        boundary_population: boundary_max,
        richardson_error: 0.0,
    })
}

/// Decide the oscillation-argument convention of the equal-splitting
/// variance formula by measuring the first variance minimum with the oracle.
///
/// Returns `LambdaT` when the measured minimum sits within 5% of
/// pi/(2 lambda), `TwoLambdaT` within 5% of pi/(4 lambda), and an
/// inconclusive error otherwise (including flat-variance parameter sets).
pub fn adjudicate_variance_convention(p: &SystemParams) -> Result<OscConvention> {
    let delta = p.zeeman_offset();
    if delta.abs() > 1e-12 * p.delta_b1.abs().max(p.delta_b2.abs()) {
        return Err(Error::RegimeMismatch(
            "convention adjudication needs equal Zeeman splitting".into(),
        ));
    }
    let eff = crate::model::effective_params(p)?;
    if eff.b_coef == 0.0 || eff.a_coef == 0.0 {
        return Err(Error::Inconclusive(
            "variance is flat for decoupled parameters; no minimum to fit".into(),
        ));
    }
    if !eff.lambda_real() || eff.lambda.re == 0.0 {
        return Err(Error::RegimeMismatch(
            "convention adjudication needs the oscillatory regime".into(),
        ));
    }
    let lambda = eff.lambda.re;
    let t_lambda = std::f64::consts::FRAC_PI_2 / lambda;
    let horizon = 1.3 * t_lambda;

    let peak = (eff.b_coef / lambda).powi(2);
    let cutoff = suggested_cutoff(peak);
    let cfg = FockConfig {
        cutoffs: vec![cutoff, cutoff],
        source: HamiltonianSource::EffectiveEqualSplitting,
        dissipation: false,
        integrator_step: None,
    };
    let run = evolve_fock(p, &cfg, horizon, 481, 0.0)?;

    let spread = run.trace.variance_theta.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b))
        - run.trace.variance_theta.iter().fold(f64::INFINITY, |a, &b| a.min(b));
    if spread < 1e-9 {
        return Err(Error::Inconclusive("variance trace is flat".into()));
    }

    let min = observables::find_min_variance_grid(&run.trace)?;
    let candidates =
        [(OscConvention::LambdaT, t_lambda), (OscConvention::TwoLambdaT, 0.5 * t_lambda)];
    for (conv, t_expected) in candidates {
        if (min.t_min - t_expected).abs() <= 0.05 * t_expected {
            return Ok(conv);
        }
    }
    Err(Error::Inconclusive(format!(
        "measured first minimum at {:.6e} s matches neither {:.6e} s nor {:.6e} s within 5%",
        min.t_min,
        t_lambda,
        0.5 * t_lambda
    )))
}
