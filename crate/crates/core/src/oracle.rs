//! Client oracles and the distributed problem they form.

use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use crate::linalg::{self, Vector};
use crate::rng::RandomStream;

/// First-order access to one client's objective `f_i`.
///
/// Implementations are immutable after construction and are called from many
/// worker threads at once.
pub trait ClientOracle: Send + Sync {
    fn dim(&self) -> usize;

    fn value(&self, x: &Vector) -> f64;

    fn gradient(&self, x: &Vector) -> Vector;

    /// Unbiased estimate of [`gradient`](Self::gradient). Deterministic oracles
    /// return the exact gradient.
    fn stochastic_gradient(&self, x: &Vector, _stream: &mut RandomStream) -> Vector {
        self.gradient(x)
    }

    /// Declared bound `σ²` on `E‖g(x) − ∇f(x)‖²`.
    fn gradient_variance(&self) -> f64 {
        0.0
    }

    /// Lipschitz constant of the gradient, when known.
    fn smoothness(&self) -> Option<f64> {
        None
    }

    /// Strong-convexity modulus `μ ≥ 0`; `None` for nonconvex objectives.
    fn convexity(&self) -> Option<f64> {
        None
    }

    /// Exact quadratic structure `∇f(x) = Hx − c`, when the objective is a
    /// pure quadratic.
    fn quadratic(&self) -> Option<&dyn QuadraticStructure> {
        None
    }
}

pub trait QuadraticStructure: Send + Sync {
    fn hessian_apply(&self, v: &Vector) -> Vector;

    /// `c` in `∇f(x) = Hx − c`.
    fn linear_term(&self) -> &Vector;

    /// Direct solve of `Hx = rhs`, if the representation supports one.
    fn solve(&self, _rhs: &Vector) -> Option<Vector> {
        None
    }

    /// Direct solve of `(H + shift·I)x = rhs`, if the representation
    /// supports one.
    fn solve_shifted(&self, _shift: f64, _rhs: &Vector) -> Option<Vector> {
        None
    }
}

/// Constants describing the whole family `{f_i}`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ProblemConstants {
    /// Largest client smoothness constant (every `f_i` is `L`-smooth).
    pub smoothness: Option<f64>,
    /// Smoothness of the average `f`; never larger than `smoothness`.
    pub global_smoothness: Option<f64>,
    /// Every `f_i` is `μ`-convex with this `μ`; `None` when nonconvex.
    pub convexity: Option<f64>,
    /// Largest declared stochastic-gradient variance over clients.
    pub gradient_variance: f64,
    /// Known lower bound on `inf f` (used for nonconvex instances).
    pub value_lower_bound: Option<f64>,
}

/// `f = (1/n) Σ f_i` held as `n` client oracles plus an optional direct
/// oracle for `f` itself.
#[derive(Clone)]
pub struct DistributedProblem {
    name: String,
    clients: Vec<Arc<dyn ClientOracle>>,
    global: Option<Arc<dyn ClientOracle>>,
    constants: ProblemConstants,
}

impl fmt::Debug for DistributedProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DistributedProblem")
            .field("name", &self.name)
            .field("clients", &self.clients.len())
            .field("dim", &self.dim())
            .field("constants", &self.constants)
            .finish()
    }
}

impl DistributedProblem {
    pub fn new(
        name: impl Into<String>,
        clients: Vec<Arc<dyn ClientOracle>>,
        constants: ProblemConstants,
    ) -> Self {
        assert!(
            !clients.is_empty(),
            "a distributed problem needs at least one client"
        );
        let dim = clients[0].dim();
        assert!(
            clients.iter().all(|c| c.dim() == dim),
            "client dimensions disagree"
        );
        Self {
            name: name.into(),
            clients,
            global: None,
            constants,
        }
    }

    /// Attach a direct oracle for `f`. Monitoring goes through it so that
    /// client-side call counters only see algorithmic work.
    pub fn with_global(mut self, global: Arc<dyn ClientOracle>) -> Self {
        assert_eq!(global.dim(), self.dim());
        self.global = Some(global);
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn num_clients(&self) -> usize {
        self.clients.len()
    }

    pub fn dim(&self) -> usize {
        self.clients[0].dim()
    }

    pub fn client(&self, i: usize) -> &dyn ClientOracle {
        self.clients[i].as_ref()
    }

    pub fn clients(&self) -> &[Arc<dyn ClientOracle>] {
        &self.clients
    }

    pub fn global(&self) -> Option<&dyn ClientOracle> {
        self.global.as_deref()
    }

    pub fn constants(&self) -> ProblemConstants {
        self.constants
    }

    pub fn is_convex(&self) -> bool {
        self.constants.convexity.is_some()
    }

    pub fn value(&self, x: &Vector) -> f64 {
        match &self.global {
            Some(g) => g.value(x),
            None => {
                self.clients.iter().map(|c| c.value(x)).sum::<f64>() / self.num_clients() as f64
            }
        }
    }

    pub fn gradient(&self, x: &Vector) -> Vector {
        match &self.global {
            Some(g) => g.gradient(x),
            None => self.averaged_gradient(x),
        }
    }

    /// `(1/n) Σ ∇f_i(x)`, always through the client oracles.
    pub fn averaged_gradient(&self, x: &Vector) -> Vector {
        let grads: Vec<Vector> = self.clients.iter().map(|c| c.gradient(x)).collect();
        linalg::mean(&grads)
    }

    /// Copy of this problem whose client oracles count their calls.
    pub fn counted(&self) -> (Self, Arc<CallCounter>) {
        let counter = Arc::new(CallCounter::default());
        let clients = self
            .clients
            .iter()
            .map(|c| {
                Arc::new(CountingOracle {
                    inner: Arc::clone(c),
                    counter: Arc::clone(&counter),
                }) as Arc<dyn ClientOracle>
            })
            .collect();
        let problem = Self {
            name: self.name.clone(),
            clients,
            global: self.global.clone(),
            constants: self.constants,
        };
        (problem, counter)
    }
}

#[derive(Debug, Default)]
pub struct CallCounter {
    gradients: AtomicU64,
    stochastic_gradients: AtomicU64,
    values: AtomicU64,
}

impl CallCounter {
    pub fn gradients(&self) -> u64 {
        self.gradients.load(Ordering::Relaxed)
    }

    pub fn stochastic_gradients(&self) -> u64 {
        self.stochastic_gradients.load(Ordering::Relaxed)
    }

    pub fn values(&self) -> u64 {
        self.values.load(Ordering::Relaxed)
    }

    /// Gradient work of any kind.
    pub fn total_gradients(&self) -> u64 {
        self.gradients() + self.stochastic_gradients()
    }
}

/// Wraps an oracle and counts calls into a shared [`CallCounter`].
pub struct CountingOracle {
    inner: Arc<dyn ClientOracle>,
    counter: Arc<CallCounter>,
}

impl ClientOracle for CountingOracle {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn value(&self, x: &Vector) -> f64 {
        self.counter.values.fetch_add(1, Ordering::Relaxed);
        self.inner.value(x)
    }

    fn gradient(&self, x: &Vector) -> Vector {
        self.counter.gradients.fetch_add(1, Ordering::Relaxed);
        self.inner.gradient(x)
    }

    fn stochastic_gradient(&self, x: &Vector, stream: &mut RandomStream) -> Vector {
        self.counter
            .stochastic_gradients
            .fetch_add(1, Ordering::Relaxed);
        self.inner.stochastic_gradient(x, stream)
    }

    fn gradient_variance(&self) -> f64 {
        self.inner.gradient_variance()
    }

    fn smoothness(&self) -> Option<f64> {
        self.inner.smoothness()
    }

    fn convexity(&self) -> Option<f64> {
        self.inner.convexity()
    }

    fn quadratic(&self) -> Option<&dyn QuadraticStructure> {
        self.inner.quadratic()
    }
}

/// Central-difference gradient, step `h·(1 + ‖x‖)`.
pub fn finite_difference_gradient(oracle: &dyn ClientOracle, x: &Vector, h: f64) -> Vector {
    let step = h * (1.0 + x.norm());
    let mut out = Vector::zeros(x.len());
    let mut probe = x.clone();
    for k in 0..x.len() {
        let orig = probe[k];
        probe[k] = orig + step;
        let up = oracle.value(&probe);
        probe[k] = orig - step;
        let down = oracle.value(&probe);
        probe[k] = orig;
        out[k] = (up - down) / (2.0 * step);
    }
    out
}
