use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::local_solvers::{schedule_e_r, SolverKind, StopKind, StoppingRule, DEFAULT_MAX_STEPS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MethodKind {
    #[serde(rename = "dane_plus")]
    DanePlus,
    #[serde(rename = "fedred")]
    FedRed,
    #[serde(rename = "fedred_gd")]
    FedRedGd,
    #[serde(rename = "gd")]
    Gd,
    #[serde(rename = "scaffold")]
    Scaffold,
    #[serde(rename = "scaffnew")]
    Scaffnew,
    #[serde(rename = "fedprox")]
    FedProx,
}

impl MethodKind {
    pub const ALL: [MethodKind; 7] = [
        MethodKind::DanePlus,
        MethodKind::FedRed,
        MethodKind::FedRedGd,
        MethodKind::Gd,
        MethodKind::Scaffold,
        MethodKind::Scaffnew,
        MethodKind::FedProx,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MethodKind::DanePlus => "dane_plus",
            MethodKind::FedRed => "fedred",
            MethodKind::FedRedGd => "fedred_gd",
            MethodKind::Gd => "gd",
            MethodKind::Scaffold => "scaffold",
            MethodKind::Scaffnew => "scaffnew",
            MethodKind::FedProx => "fedprox",
        }
    }

    /// Methods that communicate with probability `p` per iteration.
    pub fn is_probabilistic(self) -> bool {
        matches!(
            self,
            MethodKind::FedRed | MethodKind::FedRedGd | MethodKind::Scaffnew
        )
    }

    pub fn uses_local_solver(self) -> bool {
        matches!(
            self,
            MethodKind::DanePlus | MethodKind::FedRed | MethodKind::FedProx
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Averaging {
    /// Mean of the client iterates.
    #[default]
    Avg,
    /// Iterate of one client drawn uniformly at random.
    Rand,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ControlVariate {
    /// `h_i = ∇f_i(ref) − ∇f(ref)`.
    #[default]
    GradDiff,
    /// `h_i ← h_i + m (x^{r+1} − x_{i,r+1})` (DANE+ only).
    Recursive { m: f64 },
}

/// How accurately each local subproblem is solved.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "value")]
pub enum LocalTolerance {
    Exact,
    AbsGrad(f64),
    RelGrad(f64),
    FixedSteps(usize),
    /// `rel_grad(e_r)` with `e_r² = λ(μ + λ)/(8(r + 1)(r + 2))`.
    RelGradSchedule,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LocalSolverSpec {
    pub solver: SolverKind,
    pub tolerance: LocalTolerance,
    #[serde(default = "default_max_steps")]
    pub max_steps: usize,
    /// Gradient-descent step; defaults to `1/(L + Σ weights)`.
    #[serde(default)]
    pub step: Option<f64>,
}

fn default_max_steps() -> usize {
    DEFAULT_MAX_STEPS
}

impl Default for LocalSolverSpec {
    fn default() -> Self {
        Self::exact()
    }
}

impl LocalSolverSpec {
    pub fn exact() -> Self {
        Self {
            solver: SolverKind::Exact,
            tolerance: LocalTolerance::Exact,
            max_steps: DEFAULT_MAX_STEPS,
            step: None,
        }
    }

    pub fn gd(tolerance: LocalTolerance) -> Self {
        Self {
            solver: SolverKind::Gd,
            tolerance,
            max_steps: DEFAULT_MAX_STEPS,
            step: None,
        }
    }

    pub fn fgd(tolerance: LocalTolerance) -> Self {
        Self {
            solver: SolverKind::Fgd,
            ..Self::gd(tolerance)
        }
    }

    /// Concrete stopping rule at round `r`.
    pub fn rule(&self, r: usize, lambda: f64, mu: f64) -> Result<StoppingRule> {
        let kind = match self.tolerance {
            LocalTolerance::Exact => StopKind::Exact,
            LocalTolerance::AbsGrad(e) => StopKind::AbsGrad(e),
            LocalTolerance::RelGrad(e) => StopKind::RelGrad(e),
            LocalTolerance::FixedSteps(k) => StopKind::FixedSteps(k),
            LocalTolerance::RelGradSchedule => StopKind::RelGrad(schedule_e_r(r, lambda, mu)?),
        };
        Ok(StoppingRule {
            kind,
            max_steps: self.max_steps,
        })
    }
}

fn one() -> f64 {
    1.0
}

fn two() -> f64 {
    2.0
}

fn one_step() -> usize {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MethodConfig {
    pub method: MethodKind,
    /// Weight of the proximal term around the server reference.
    #[serde(default)]
    pub lambda: f64,
    /// Weight of the proximal term around the client's own iterate.
    #[serde(default)]
    pub eta: f64,
    /// Communication probability per iteration.
    #[serde(default = "one")]
    pub p: f64,
    #[serde(default)]
    pub mu: f64,
    /// Nonconvex multiplier in `λ = a·δ_B`.
    #[serde(default = "two")]
    pub a: f64,
    #[serde(default)]
    pub averaging: Averaging,
    #[serde(default)]
    pub control_variate: ControlVariate,
    #[serde(default)]
    pub local: LocalSolverSpec,
    /// Report the `q`-weighted average of the mean client iterates.
    #[serde(default)]
    pub q_weighting: bool,
    /// Step of GD, Scaffold and Scaffnew; defaults to `1/L`.
    #[serde(default)]
    pub step_size: Option<f64>,
    /// Local steps per Scaffold round.
    #[serde(default = "one_step")]
    pub local_steps: usize,
    /// FedRed-GD draws stochastic client gradients.
    #[serde(default)]
    pub stochastic: bool,
}

impl MethodConfig {
    pub fn new(method: MethodKind) -> Self {
        Self {
            method,
            lambda: 0.0,
            eta: 0.0,
            p: 1.0,
            mu: 0.0,
            a: 2.0,
            averaging: Averaging::Avg,
            control_variate: ControlVariate::GradDiff,
            local: LocalSolverSpec::exact(),
            q_weighting: false,
            step_size: None,
            local_steps: 1,
            stochastic: false,
        }
    }

    /// `q` of the weighted output iterate, when enabled.
    pub fn output_q(&self) -> Option<f64> {
        if !self.q_weighting {
            return None;
        }
        let (eta, mu) = (self.eta, self.mu);
        Some(match self.method {
            MethodKind::FedRedGd => 1.0 - mu / (2.0 * eta - mu),
            _ => 1.0 - mu / (2.0 * eta + mu),
        })
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        for (name, v) in [("lambda", self.lambda), ("eta", self.eta), ("mu", self.mu)] {
            if !(v >= 0.0) || !v.is_finite() {
                return bad(format!("{name} must be finite and non-negative, got {v}"));
            }
        }
        if !(self.p > 0.0 && self.p <= 1.0) {
            return bad(format!("p must lie in (0, 1], got {}", self.p));
        }
        if let Some(s) = self.step_size.filter(|s| !(*s > 0.0)) {
            return bad(format!("step_size must be positive, got {s}"));
        }
        if self.local_steps == 0 {
            return bad("local_steps must be at least 1".into());
        }
        if let ControlVariate::Recursive { m } = self.control_variate {
            if self.method != MethodKind::DanePlus {
                return bad("the recursive control variate is only available for dane_plus".into());
            }
            if !(m >= 0.0) {
                return bad(format!("recursive control variate needs m >= 0, got {m}"));
            }
        }
        match self.method {
            // p = 1, η = 0 is the DANE+ special case and stays admissible
            MethodKind::FedRed if self.eta < self.lambda && !(self.p == 1.0 && self.eta == 0.0) => {
                return bad(format!(
                    "fedred needs eta >= lambda ({} < {})",
                    self.eta, self.lambda
                ));
            }
            MethodKind::FedRedGd if !(self.eta + self.lambda > 0.0) => {
                return bad("fedred_gd needs eta + lambda > 0".into());
            }
            _ => {}
        }
        if self.local.tolerance == LocalTolerance::RelGradSchedule && !(self.lambda > 0.0) {
            return bad("the rel_grad schedule needs lambda > 0".into());
        }
        if self.q_weighting {
            let q = self.output_q().unwrap_or(1.0);
            if !(q > 0.0 && q <= 1.0) {
                return bad(format!(
                    "q-weighting needs q in (0, 1], got {q} (check eta and mu)"
                ));
            }
        }
        Ok(())
    }
}
