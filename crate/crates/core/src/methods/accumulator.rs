use crate::linalg::Vector;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AccumulatorMode {
    /// Point with the smallest reported objective value.
    BestF,
    /// Point with the smallest reported gradient norm.
    BestGrad,
    /// `Σ_k q^{−k} x̄_k / Σ_k q^{−k}`.
    QWeighted(f64),
}

/// Running output iterate.
///
/// The `q`-weighted mean is updated as `x ← x + w_K (x̄_K − x)` with
/// `w_K = (1 − q)/(1 − q^K)` (or `1/K` when `q = 1`), which never forms the
/// exploding weights `q^{−k}`.
#[derive(Debug, Clone)]
pub struct IterateAccumulator {
    mode: AccumulatorMode,
    point: Option<Vector>,
    score: f64,
    count: usize,
    q_pow: f64,
}

impl IterateAccumulator {
    pub fn new(mode: AccumulatorMode) -> Self {
        Self {
            mode,
            point: None,
            score: f64::INFINITY,
            count: 0,
            q_pow: 1.0,
        }
    }

    pub fn mode(&self) -> AccumulatorMode {
        self.mode
    }

    /// Offer a candidate; `score` is `f` or `‖∇f‖` for the best-of modes and
    /// ignored for `QWeighted`.
    pub fn push(&mut self, x: &Vector, score: f64) {
        self.count += 1;
        match self.mode {
            AccumulatorMode::BestF | AccumulatorMode::BestGrad => {
                if self.point.is_none() || score < self.score {
                    self.point = Some(x.clone());
                    self.score = score;
                }
            }
            AccumulatorMode::QWeighted(q) => {
                self.q_pow *= q;
                let w = if q == 1.0 {
                    1.0 / self.count as f64
                } else {
                    (1.0 - q) / (1.0 - self.q_pow)
                };
                match &mut self.point {
                    None => self.point = Some(x.clone()),
                    Some(p) => {
                        let delta = x - &*p;
                        p.axpy(w, &delta, 1.0);
                    }
                }
            }
        }
    }

    pub fn current(&self) -> Option<&Vector> {
        self.point.as_ref()
    }

    pub fn count(&self) -> usize {
        self.count
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dvector;

    #[test]
    fn q_weighted_matches_direct_formula() {
        let q: f64 = 0.9;
        let xs: Vec<Vector> = (1..=30)
            .map(|k| dvector![k as f64, (k * k) as f64])
            .collect();
        let mut acc = IterateAccumulator::new(AccumulatorMode::QWeighted(q));
        for x in &xs {
            acc.push(x, 0.0);
        }
        let mut num = Vector::zeros(2);
        let mut den = 0.0;
        for (k, x) in xs.iter().enumerate() {
            let w = q.powi(-(k as i32 + 1));
            num += x * w;
            den += w;
        }
        let direct = num / den;
        assert!((acc.current().unwrap() - &direct).norm() < 1e-10 * direct.norm());
    }

    #[test]
    fn q_one_is_plain_mean() {
        let mut acc = IterateAccumulator::new(AccumulatorMode::QWeighted(1.0));
        for v in [1.0, 2.0, 6.0] {
            acc.push(&dvector![v], 0.0);
        }
        assert!((acc.current().unwrap()[0] - 3.0).abs() < 1e-15);
    }

    #[test]
    fn best_grad_keeps_minimum() {
        let mut acc = IterateAccumulator::new(AccumulatorMode::BestGrad);
        acc.push(&dvector![1.0], 3.0);
        acc.push(&dvector![2.0], 1.0);
        acc.push(&dvector![3.0], 2.0);
        assert_eq!(acc.current().unwrap()[0], 2.0);
    }
}
