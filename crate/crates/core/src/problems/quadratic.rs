//! Quadratic-plus-sigmoid client objectives
//!
//! `f_i(x) = (1/m) Σ_j ½(x − b_ij)ᵀ A_ij (x − b_ij) + β Σ_k x_k² / (1 + x_k²)`.
//!
//! Generated instances share one random orthogonal basis `Q`, so every
//! `A_ij = Q diag(s_ij) Qᵀ` and all dissimilarity constants have closed forms
//! in the eigenbasis. Client heterogeneity is injected as a perturbation of
//! the eigenvalues whose size is the requested `δ_B`.

use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::dissimilarity::{delta_exact_quadratic, QuadraticDissimilarity};
use crate::error::{Error, Result};
use crate::linalg::Vector;
use crate::oracle::{ClientOracle, DistributedProblem, ProblemConstants, QuadraticStructure};
use crate::rng::RandomStream;

/// Eigenvalue floor used for the "small" half of a general convex instance.
pub const GENERAL_CONVEX_SMALL_EIGENVALUE: f64 = 1e-6;

/// A symmetric matrix, either in a (shared) eigenbasis or dense.
#[derive(Debug, Clone)]
pub enum SymmetricMatrix {
    Spectral {
        basis: Arc<DMatrix<f64>>,
        eigenvalues: Vector,
    },
    Dense(DMatrix<f64>),
}

impl SymmetricMatrix {
    pub fn dense(m: DMatrix<f64>) -> Result<Self> {
        check_symmetric(&m)?;
        Ok(SymmetricMatrix::Dense(m))
    }

    pub fn dim(&self) -> usize {
        match self {
            SymmetricMatrix::Spectral { eigenvalues, .. } => eigenvalues.len(),
            SymmetricMatrix::Dense(m) => m.nrows(),
        }
    }

    pub fn apply(&self, v: &Vector) -> Vector {
        match self {
            SymmetricMatrix::Spectral { basis, eigenvalues } => {
                let coords = basis.tr_mul(v).component_mul(eigenvalues);
                basis.as_ref() * coords
            }
            SymmetricMatrix::Dense(m) => m * v,
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        match self {
            SymmetricMatrix::Spectral { basis, eigenvalues } => {
                let scaled = basis.as_ref() * DMatrix::from_diagonal(eigenvalues);
                scaled * basis.transpose()
            }
            SymmetricMatrix::Dense(m) => m.clone(),
        }
    }

    pub fn eigenvalues(&self) -> Vector {
        match self {
            SymmetricMatrix::Spectral { eigenvalues, .. } => eigenvalues.clone(),
            SymmetricMatrix::Dense(m) => SymmetricEigen::new(m.clone()).eigenvalues,
        }
    }

    pub fn basis(&self) -> Option<&Arc<DMatrix<f64>>> {
        match self {
            SymmetricMatrix::Spectral { basis, .. } => Some(basis),
            SymmetricMatrix::Dense(_) => None,
        }
    }

    /// Entry-wise mean. Stays spectral when every input shares one basis.
    pub fn mean(mats: &[SymmetricMatrix]) -> SymmetricMatrix {
        assert!(!mats.is_empty());
        let k = mats.len() as f64;
        if let Some(basis) = shared_basis(mats) {
            let mut eig = Vector::zeros(mats[0].dim());
            for m in mats {
                if let SymmetricMatrix::Spectral { eigenvalues, .. } = m {
                    eig += eigenvalues;
                }
            }
            return SymmetricMatrix::Spectral {
                basis: Arc::clone(basis),
                eigenvalues: eig / k,
            };
        }
        let mut acc = DMatrix::zeros(mats[0].dim(), mats[0].dim());
        for m in mats {
            acc += m.to_dense();
        }
        SymmetricMatrix::Dense(acc / k)
    }
}

pub(crate) fn shared_basis(mats: &[SymmetricMatrix]) -> Option<&Arc<DMatrix<f64>>> {
    let first = mats.first()?.basis()?;
    mats.iter()
        .all(|m| m.basis().is_some_and(|b| Arc::ptr_eq(b, first)))
        .then_some(first)
}

pub(crate) fn check_symmetric(m: &DMatrix<f64>) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::Contract(format!(
            "matrix is {}x{}, not square",
            m.nrows(),
            m.ncols()
        )));
    }
    let scale = m.amax().max(1.0);
    for i in 0..m.nrows() {
        for j in 0..i {
            if (m[(i, j)] - m[(j, i)]).abs() > 1e-12 * scale {
                return Err(Error::Contract(format!(
                    "matrix is not symmetric at ({i}, {j})"
                )));
            }
        }
    }
    Ok(())
}

/// One client's raw data: `m` matrices, `m` centers, sigmoid weight `β`.
#[derive(Debug, Clone)]
pub struct QuadraticClientSpec {
    pub matrices: Vec<SymmetricMatrix>,
    pub centers: Vec<Vector>,
    pub sigmoid_weight: f64,
}

impl QuadraticClientSpec {
    pub fn dim(&self) -> usize {
        self.centers[0].len()
    }

    /// `Ā_i = (1/m) Σ_j A_ij`.
    pub fn averaged_matrix(&self) -> SymmetricMatrix {
        SymmetricMatrix::mean(&self.matrices)
    }

    fn validate(&self) -> Result<()> {
        if self.matrices.is_empty() || self.matrices.len() != self.centers.len() {
            return Err(Error::config(format!(
                "client needs matching non-empty matrices ({}) and centers ({})",
                self.matrices.len(),
                self.centers.len()
            )));
        }
        let d = self.dim();
        for (a, b) in self.matrices.iter().zip(&self.centers) {
            if a.dim() != d || b.len() != d {
                return Err(Error::Dimension {
                    expected: d,
                    found: if a.dim() != d { a.dim() } else { b.len() },
                });
            }
            if let SymmetricMatrix::Dense(m) = a {
                check_symmetric(m)?;
            }
        }
        if !(self.sigmoid_weight >= 0.0) {
            return Err(Error::config("sigmoid weight must be non-negative"));
        }
        Ok(())
    }

    pub fn oracle(&self) -> Result<QuadraticOracle> {
        self.validate()?;
        let m = self.matrices.len() as f64;
        let mut linear = Vector::zeros(self.dim());
        let mut constant = 0.0;
        for (a, b) in self.matrices.iter().zip(&self.centers) {
            let ab = a.apply(b);
            constant += 0.5 * b.dot(&ab);
            linear += ab;
        }
        Ok(QuadraticOracle::new(
            self.averaged_matrix(),
            linear / m,
            constant / m,
            self.sigmoid_weight,
        ))
    }
}

/// `½xᵀHx − cᵀx + const + β Σ x_k²/(1 + x_k²)` with optional additive
/// Gaussian gradient noise.
#[derive(Debug, Clone)]
pub struct QuadraticOracle {
    hessian: SymmetricMatrix,
    linear: Vector,
    constant: f64,
    sigmoid_weight: f64,
    noise_variance: f64,
    eig_min: f64,
    eig_max: f64,
}

impl QuadraticOracle {
    pub fn new(
        hessian: SymmetricMatrix,
        linear: Vector,
        constant: f64,
        sigmoid_weight: f64,
    ) -> Self {
        let eig = hessian.eigenvalues();
        let eig_min = eig.min();
        let eig_max = eig.max();
        Self {
            hessian,
            linear,
            constant,
            sigmoid_weight,
            noise_variance: 0.0,
            eig_min,
            eig_max,
        }
    }

    /// Stochastic gradients add isotropic Gaussian noise with
    /// `E‖noise‖² = variance`.
    pub fn with_noise(mut self, variance: f64) -> Self {
        self.noise_variance = variance;
        self
    }

    pub fn hessian(&self) -> &SymmetricMatrix {
        &self.hessian
    }

    pub fn constant(&self) -> f64 {
        self.constant
    }

    pub fn sigmoid_weight(&self) -> f64 {
        self.sigmoid_weight
    }

    /// Extreme eigenvalues of the quadratic part.
    pub fn eigen_range(&self) -> (f64, f64) {
        (self.eig_min, self.eig_max)
    }

    /// Minimum of the quadratic part alone, when it is positive definite.
    /// Since the sigmoid term is non-negative this lower-bounds the objective.
    pub fn quadratic_part_minimum(&self) -> Option<f64> {
        let x = QuadraticStructure::solve(self, &self.linear)?;
        Some(self.constant - 0.5 * self.linear.dot(&x))
    }
}

impl ClientOracle for QuadraticOracle {
    fn dim(&self) -> usize {
        self.linear.len()
    }

    fn value(&self, x: &Vector) -> f64 {
        let hx = self.hessian.apply(x);
        let mut v = 0.5 * x.dot(&hx) - self.linear.dot(x) + self.constant;
        if self.sigmoid_weight > 0.0 {
            v += self.sigmoid_weight * x.iter().map(|&t| t * t / (1.0 + t * t)).sum::<f64>();
        }
        v
    }

    fn gradient(&self, x: &Vector) -> Vector {
        let mut g = self.hessian.apply(x);
        g -= &self.linear;
        if self.sigmoid_weight > 0.0 {
            let beta = self.sigmoid_weight;
            for (gk, &t) in g.iter_mut().zip(x.iter()) {
                let s = 1.0 + t * t;
                *gk += beta * 2.0 * t / (s * s);
            }
        }
        g
    }

    fn stochastic_gradient(&self, x: &Vector, stream: &mut RandomStream) -> Vector {
        let mut g = self.gradient(x);
        if self.noise_variance > 0.0 {
            let std = (self.noise_variance / x.len() as f64).sqrt();
            for gk in g.iter_mut() {
                *gk += std * stream.standard_normal();
            }
        }
        g
    }

    fn gradient_variance(&self) -> f64 {
        self.noise_variance
    }

    fn smoothness(&self) -> Option<f64> {
        // sigmoid curvature β(2 − 6t²)/(1 + t²)³ lies in [−β/2, 2β]
        let beta = self.sigmoid_weight;
        Some(
            (self.eig_max + 2.0 * beta)
                .max(-(self.eig_min - 0.5 * beta))
                .max(0.0),
        )
    }

    fn convexity(&self) -> Option<f64> {
        let mu = self.eig_min - 0.5 * self.sigmoid_weight;
        (mu >= 0.0).then_some(mu)
    }

    fn quadratic(&self) -> Option<&dyn QuadraticStructure> {
        (self.sigmoid_weight == 0.0).then_some(self as &dyn QuadraticStructure)
    }
}

impl QuadraticStructure for QuadraticOracle {
    fn hessian_apply(&self, v: &Vector) -> Vector {
        self.hessian.apply(v)
    }

    fn linear_term(&self) -> &Vector {
        &self.linear
    }

    fn solve(&self, rhs: &Vector) -> Option<Vector> {
        match &self.hessian {
            SymmetricMatrix::Spectral { basis, eigenvalues } => {
                if eigenvalues.iter().any(|&s| s <= 0.0) {
                    return None;
                }
                let coords = basis.tr_mul(rhs).component_div(eigenvalues);
                Some(basis.as_ref() * coords)
            }
            SymmetricMatrix::Dense(m) => m.clone().cholesky().map(|c| c.solve(rhs)),
        }
    }
    fn solve_shifted(&self, shift: f64, rhs: &Vector) -> Option<Vector> {
        match &self.hessian {
            SymmetricMatrix::Spectral { basis, eigenvalues } => {
                let shifted = eigenvalues.add_scalar(shift);
                if shifted.iter().any(|&s| s <= 0.0) {
                    return None;
                }
                let coords = basis.tr_mul(rhs).component_div(&shifted);
                Some(basis.as_ref() * coords)
            }
            SymmetricMatrix::Dense(_) => None,
        }
    }
}

/// Requested eigenvalue layout of a generated instance.
///
/// * `min_eig > 0`: strongly convex, every `A_ij ⪰ min_eig`.
/// * `min_eig == 0`: general convex, half the base eigenvalues are `1e-6`.
/// * `min_eig < 0`: indefinite `A_ij` (requires `β > 0`); the averaged
///   matrix stays `⪰ 1` so the objective is bounded below.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumSpec {
    pub max_norm: f64,
    pub min_eig: f64,
    pub target_delta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadraticParams {
    pub n: usize,
    pub m: usize,
    pub d: usize,
    #[serde(flatten)]
    pub spectrum: SpectrumSpec,
    #[serde(default)]
    pub beta: f64,
    /// Standard deviation of the entries of the centers `b_ij`.
    #[serde(default = "default_center_scale")]
    pub center_scale: f64,
    /// Declared stochastic-gradient variance `σ²` (0 = deterministic).
    #[serde(default)]
    pub noise_variance: f64,
}

fn default_center_scale() -> f64 {
    1.0
}

impl QuadraticParams {
    pub fn new(n: usize, m: usize, d: usize, spectrum: SpectrumSpec, beta: f64) -> Self {
        Self {
            n,
            m,
            d,
            spectrum,
            beta,
            center_scale: 1.0,
            noise_variance: 0.0,
        }
    }

    fn validate(&self) -> Result<()> {
        let s = &self.spectrum;
        if self.n == 0 || self.m == 0 || self.d == 0 {
            return Err(Error::config("n, m and d must all be at least 1"));
        }
        if !(s.max_norm > s.min_eig) || !s.max_norm.is_finite() {
            return Err(Error::config(format!(
                "max_norm ({}) must exceed min_eig ({})",
                s.max_norm, s.min_eig
            )));
        }
        if !(s.target_delta >= 0.0) || s.target_delta > s.max_norm {
            return Err(Error::config(format!(
                "target_delta ({}) must lie in [0, max_norm = {}]",
                s.target_delta, s.max_norm
            )));
        }
        if s.min_eig < 0.0 && !(self.beta > 0.0) {
            return Err(Error::config(
                "indefinite matrices (min_eig < 0) require beta > 0",
            ));
        }
        if s.min_eig < 0.0 && s.max_norm <= 1.0 {
            return Err(Error::config("indefinite instances need max_norm > 1"));
        }
        if self.beta < 0.0 || self.center_scale < 0.0 || self.noise_variance < 0.0 {
            return Err(Error::config(
                "beta, center_scale and noise_variance must be non-negative",
            ));
        }
        Ok(())
    }
}

/// A quadratic problem together with its raw client data and exact
/// dissimilarity constants.
#[derive(Debug, Clone)]
pub struct QuadraticInstance {
    pub specs: Vec<QuadraticClientSpec>,
    pub problem: DistributedProblem,
    pub dissimilarity: QuadraticDissimilarity,
}

impl QuadraticInstance {
    pub fn from_specs(
        name: impl Into<String>,
        specs: Vec<QuadraticClientSpec>,
        noise_variance: f64,
    ) -> Result<Self> {
        if specs.is_empty() {
            return Err(Error::config("at least one client is required"));
        }
        let d = specs[0].dim();
        let beta = specs[0].sigmoid_weight;
        let mut oracles = Vec::with_capacity(specs.len());
        for s in &specs {
            if s.dim() != d {
                return Err(Error::Dimension {
                    expected: d,
                    found: s.dim(),
                });
            }
            oracles.push(s.oracle()?.with_noise(noise_variance));
        }
        let dissimilarity = delta_exact_quadratic(&specs)?;

        let n = oracles.len() as f64;
        let hessians: Vec<SymmetricMatrix> = oracles.iter().map(|o| o.hessian().clone()).collect();
        let mut linear = Vector::zeros(d);
        let mut constant = 0.0;
        for o in &oracles {
            linear += QuadraticStructure::linear_term(o);
            constant += o.constant();
        }
        // The sigmoid term is the same for every client, so it carries over
        // to f unchanged.
        let uniform_beta = specs.iter().all(|s| s.sigmoid_weight == beta);
        let global = uniform_beta.then(|| {
            QuadraticOracle::new(
                SymmetricMatrix::mean(&hessians),
                linear / n,
                constant / n,
                beta,
            )
        });

        let smoothness = oracles
            .iter()
            .filter_map(|o| o.smoothness())
            .fold(0.0, f64::max);
        let convexity = oracles
            .iter()
            .map(|o| o.convexity())
            .collect::<Option<Vec<f64>>>()
            .map(|v| v.into_iter().fold(f64::INFINITY, f64::min));
        let constants = ProblemConstants {
            smoothness: Some(smoothness),
            global_smoothness: global
                .as_ref()
                .and_then(|g| g.smoothness())
                .or(Some(smoothness)),
            convexity,
            gradient_variance: noise_variance,
            value_lower_bound: global.as_ref().and_then(|g| g.quadratic_part_minimum()),
        };
        let clients: Vec<Arc<dyn ClientOracle>> = oracles
            .into_iter()
            .map(|o| Arc::new(o) as Arc<dyn ClientOracle>)
            .collect();
        let mut problem = DistributedProblem::new(name, clients, constants);
        if let Some(g) = global {
            problem = problem.with_global(Arc::new(g));
        }
        Ok(Self {
            specs,
            problem,
            dissimilarity,
        })
    }
}

mod labels {
    pub const BASIS: u64 = 1;
    pub const BASE_SPECTRUM: u64 = 2;
    pub const CLIENT_PERTURBATION: u64 = 3;
    pub const WITHIN_CLIENT: u64 = 4;
    pub const CENTERS: u64 = 5;
}

/// Haar-distributed orthogonal matrix (QR of a Gaussian matrix with the
/// signs of `R`'s diagonal folded into `Q`).
pub fn random_orthogonal(d: usize, stream: &mut RandomStream) -> DMatrix<f64> {
    let g = DMatrix::from_fn(d, d, |_, _| stream.standard_normal());
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..d {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

/// Generate a quadratic(+sigmoid) instance with controlled dissimilarity.
///
/// Base eigenvalues `s_k` span `[floor, max_norm]`. For every eigen-direction
/// one randomly chosen client is shifted by `±t_k` and the others by
/// `∓t_k/(n−1)`, with `t_k = min(target_delta, room to the spectrum bounds)`.
/// Hence `δ_B = max_k t_k` (the target when some direction has room), the
/// tight `δ_A = δ_B/√(n−1)`, and the mean-squared-norm formula gives `δ_B`.
/// Within a client the `m` matrices differ by a zero-mean spread that leaves
/// `Ā_i` unchanged.
pub fn gen_quadratic_problem(params: &QuadraticParams, seed: u64) -> Result<QuadraticInstance> {
    params.validate()?;
    let QuadraticParams {
        n,
        m,
        d,
        spectrum,
        beta,
        ..
    } = *params;
    let root = RandomStream::new(seed);

    let basis = Arc::new(random_orthogonal(d, &mut root.fork(labels::BASIS)));
    let base = base_spectrum(d, &spectrum, &mut root.fork(labels::BASE_SPECTRUM));

    let lower = spectrum.min_eig;
    let upper = spectrum.max_norm;
    let mut perturb = vec![vec![0.0; d]; n];
    if n > 1 {
        let mut s = root.fork(labels::CLIENT_PERTURBATION);
        for k in 0..d {
            let room = (base[k] - lower).min(upper - base[k]).max(0.0);
            let t = spectrum.target_delta.min(room);
            let chosen = s.next_index(n);
            let sign = if s.bernoulli(0.5) { 1.0 } else { -1.0 };
            for (i, p) in perturb.iter_mut().enumerate() {
                p[k] = if i == chosen {
                    sign * t
                } else {
                    -sign * t / (n - 1) as f64
                };
            }
        }
    }

    let within_root = root.fork(labels::WITHIN_CLIENT);
    let centers_root = root.fork(labels::CENTERS);
    let mut specs = Vec::with_capacity(n);
    for (i, shift) in perturb.iter().enumerate() {
        let mut within = within_root.fork(i as u64);
        let mut eigs: Vec<Vector> = (0..m)
            .map(|_| Vector::from_fn(d, |k, _| base[k] + shift[k]))
            .collect();
        if m > 1 {
            for k in 0..d {
                let centre = base[k] + shift[k];
                let room = (centre - lower).min(upper - centre).max(0.0);
                let raw: Vec<f64> = (0..m).map(|_| 2.0 * within.next_f64() - 1.0).collect();
                let avg = raw.iter().sum::<f64>() / m as f64;
                let spread = raw.iter().map(|r| (r - avg).abs()).fold(0.0, f64::max);
                if spread > 0.0 {
                    for (e, r) in eigs.iter_mut().zip(&raw) {
                        e[k] = centre + room * (r - avg) / spread;
                    }
                }
            }
        }
        let mut cs = centers_root.fork(i as u64);
        let centers: Vec<Vector> = (0..m)
            .map(|_| Vector::from_fn(d, |_, _| params.center_scale * cs.standard_normal()))
            .collect();
        let matrices = eigs
            .into_iter()
            .map(|eigenvalues| SymmetricMatrix::Spectral {
                basis: Arc::clone(&basis),
                eigenvalues,
            })
            .collect();
        specs.push(QuadraticClientSpec {
            matrices,
            centers,
            sigmoid_weight: beta,
        });
    }
    let name = format!("quadratic(n={n},m={m},d={d},beta={beta})");
    QuadraticInstance::from_specs(name, specs, params.noise_variance)
}

fn base_spectrum(d: usize, spectrum: &SpectrumSpec, stream: &mut RandomStream) -> Vec<f64> {
    let hi = spectrum.max_norm;
    let (lo, small) = if spectrum.min_eig > 0.0 {
        (spectrum.min_eig, 0)
    } else if spectrum.min_eig == 0.0 {
        (GENERAL_CONVEX_SMALL_EIGENVALUE, d / 2)
    } else {
        (1.0, 0)
    };
    let mut s: Vec<f64> = (0..d).map(|_| lo + (hi - lo) * stream.next_f64()).collect();
    s[0] = lo;
    if d > 1 {
        s[d - 1] = hi;
    }
    for v in s.iter_mut().skip(1).take(small) {
        *v = GENERAL_CONVEX_SMALL_EIGENVALUE;
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::finite_difference_gradient;

    fn sc_params(d: usize) -> QuadraticParams {
        QuadraticParams::new(
            4,
            3,
            d,
            SpectrumSpec {
                max_norm: 100.0,
                min_eig: 1.0,
                target_delta: 5.0,
            },
            0.0,
        )
    }

    #[test]
    fn random_orthogonal_is_orthogonal() {
        let q = random_orthogonal(12, &mut RandomStream::new(3));
        let err = (q.transpose() * &q - DMatrix::identity(12, 12)).amax();
        assert!(err < 1e-12);
    }

    #[test]
    fn strongly_convex_eigenvalues_respect_bounds() {
        let inst = gen_quadratic_problem(&sc_params(30), 11).unwrap();
        for spec in &inst.specs {
            for a in &spec.matrices {
                let e = a.eigenvalues();
                assert!(e.min() >= 1.0 - 1e-12, "min eig {}", e.min());
                assert!(e.max() <= 100.0 + 1e-12);
            }
        }
        let c = inst.problem.constants();
        assert!(c.convexity.unwrap() >= 1.0 - 1e-12);
        assert!(c.smoothness.unwrap() <= 100.0 + 1e-9);
    }

    #[test]
    fn targeted_delta_is_hit() {
        let inst = gen_quadratic_problem(&sc_params(30), 5).unwrap();
        let rep = &inst.dissimilarity;
        assert!((rep.exact.delta_b - 5.0).abs() < 1e-9);
        assert!((rep.exact.delta_a - 5.0 / 3.0_f64.sqrt()).abs() < 1e-9);
        assert!(rep.exact.delta_a <= rep.paper_formula.delta_a + 1e-12);
    }

    #[test]
    fn zero_target_gives_identical_clients() {
        let mut p = sc_params(10);
        p.spectrum.target_delta = 0.0;
        let inst = gen_quadratic_problem(&p, 1).unwrap();
        let rep = &inst.dissimilarity;
        for v in [
            rep.exact.delta_a,
            rep.exact.delta_b,
            rep.paper_formula.delta_a,
        ] {
            assert!(v.abs() < 1e-12, "{v}");
        }
    }

    #[test]
    fn infeasible_spectrum_is_rejected() {
        let mut p = sc_params(5);
        p.spectrum.target_delta = 200.0;
        assert!(matches!(
            gen_quadratic_problem(&p, 0),
            Err(Error::Config(_))
        ));
        let mut p = sc_params(5);
        p.spectrum.min_eig = -1.0;
        assert!(matches!(
            gen_quadratic_problem(&p, 0),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn sigmoid_gradient_matches_finite_differences() {
        let mut p = sc_params(6);
        p.beta = 400.0;
        p.spectrum.min_eig = -20.0;
        let inst = gen_quadratic_problem(&p, 2).unwrap();
        let mut s = RandomStream::new(8);
        for i in 0..inst.problem.num_clients() {
            let oracle = inst.problem.client(i);
            assert!(oracle.quadratic().is_none());
            let x = Vector::from_fn(6, |_, _| s.standard_normal());
            let fd = finite_difference_gradient(oracle, &x, 1e-6);
            let g = oracle.gradient(&x);
            assert!((&fd - &g).norm() <= 1e-5 * g.norm().max(1.0));
        }
    }

    #[test]
    fn general_convex_has_tiny_eigenvalues() {
        let mut p = sc_params(20);
        p.spectrum.min_eig = 0.0;
        let inst = gen_quadratic_problem(&p, 4).unwrap();
        let mu = inst.problem.constants().convexity.unwrap();
        assert!((0.0..=2e-6).contains(&mu));
    }
}
