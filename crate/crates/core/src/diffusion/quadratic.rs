//! Closed-form pushes for the quadratic loss.

use super::{
    Diffusion, DiffusionConfig, DiffusionState, GadgetMove, GadgetStep, NodeMove, NodeStep, PushContext, PushRule,
    PushSolver,
};
use crate::error::Result;
use crate::hypergraph::{Hypergraph, NodeSet};
use crate::scalar::Scalar;

/// Quadratic loss `z² / 2`: node pushes solve a piecewise linear equation, auxiliary pushes a
/// 2×2 system (or its piecewise linear generalization).
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Quadratic;

pub type LhqdSolver<'h, T> = PushSolver<'h, T, Quadratic>;

impl<'h, T: Scalar> PushSolver<'h, T, Quadratic> {
    pub fn new(h: &'h Hypergraph<T>, seeds: &NodeSet, cfg: DiffusionConfig<T>) -> Result<Self> {
        Self::with_rule(h, seeds, cfg, Quadratic)
    }
}

impl<T: Scalar> PushRule<T> for Quadratic {
    fn exponent(&self) -> T {
        T::lit(2.0)
    }

    fn node_step(&self, s: &NodeStep<'_, T>) -> NodeMove<T> {
        let c = &s.cache;
        let slope = (c.s_a + c.s_b) / s.gamma + s.degree;
        let dx = (s.residual - s.target) / slope;
        if s.x + dx <= c.a_min.min(c.b_min) {
            return NodeMove { x: s.x + dx, residual: s.target, fast: true };
        }

        // Walk the breakpoints of the residual to the right of x. An arc to `a` starts
        // pulling once x passes x_a; an arc from `b` stops once x passes x_b.
        let inv_gamma = T::one() / s.gamma;
        let mut slope = s.degree;
        let mut events: Vec<(T, T)> = Vec::with_capacity(2 * s.arcs.len());
        for arc in s.arcs {
            if arc.xa <= s.x {
                slope = slope + arc.c * inv_gamma;
            } else {
                events.push((arc.xa, arc.c * inv_gamma));
            }
            if arc.xb > s.x {
                slope = slope + arc.c * inv_gamma;
                events.push((arc.xb, -arc.c * inv_gamma));
            }
        }
        events.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite breakpoints"));
        let mut at = s.x;
        let mut value = s.residual;
        for (pos, change) in events {
            let next = value - slope * (pos - at);
            if next <= s.target {
                break;
            }
            value = next;
            at = pos;
            slope = slope + change;
        }
        NodeMove { x: at + (value - s.target) / slope, residual: s.target, fast: false }
    }

    fn gadget_step(&self, s: &GadgetStep<'_, T>) -> GadgetMove<T> {
        let c = &s.cache;
        let w = s.c * s.delta;
        let det = (w + c.z_a) * (w + c.z_b) - w * w;
        if det > T::zero() {
            let da = (s.ra * (w + c.z_b) + w * s.rb) / det;
            let db = (w * s.ra + (w + c.z_a) * s.rb) / det;
            let (xa, xb) = (s.xa + da, s.xb + db);
            if da >= T::zero() && db >= T::zero() && xa <= c.x_min_a && xb <= c.x_min_b && xa >= xb {
                return GadgetMove { xa, xb, fast: true };
            }
        }
        let (xa, xb) = HingeSum::new(s.members).balance(s.delta);
        GadgetMove { xa, xb, fast: false }
    }
}

/// `f(y) = Σ (v − y)₊` and `g(y) = Σ (y − v)₊` over a fixed multiset of values, with
/// logarithmic-time inverses.
#[derive(Clone, Debug)]
pub(crate) struct HingeSum<T> {
    sorted: Vec<T>,
    /// `prefix[k]` = sum of the `k` smallest values.
    prefix: Vec<T>,
}

impl<T: Scalar> HingeSum<T> {
    pub(crate) fn new(values: &[T]) -> Self {
        let mut sorted = values.to_vec();
        sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
        let mut prefix = Vec::with_capacity(sorted.len() + 1);
        let mut acc = T::zero();
        prefix.push(acc);
        for &v in &sorted {
            acc = acc + v;
            prefix.push(acc);
        }
        Self { sorted, prefix }
    }

    fn m(&self) -> usize {
        self.sorted.len()
    }

    /// `f` at the k-th smallest value.
    fn above_at(&self, k: usize) -> T {
        let m = self.m();
        (self.prefix[m] - self.prefix[k + 1]) - T::count(m - k - 1) * self.sorted[k]
    }

    /// `g` at the k-th smallest value.
    fn below_at(&self, k: usize) -> T {
        T::count(k + 1) * self.sorted[k] - self.prefix[k + 1]
    }

    /// Smallest `y` with `f(y) = t` for `0 <= t <= f(min)`.
    pub(crate) fn inv_above(&self, t: T) -> T {
        let m = self.m();
        if t <= T::zero() {
            return self.sorted[m - 1];
        }
        // f(s_k) is non-increasing in k; find the last k with f(s_k) >= t.
        let k = partition(m, |k| self.above_at(k) >= t);
        if k == 0 {
            return self.sorted[0];
        }
        let k = k - 1;
        let above = m - k - 1;
        if above == 0 {
            return self.sorted[k];
        }
        (self.prefix[m] - self.prefix[k + 1] - t) / T::count(above)
    }

    /// Largest `y` with `g(y) = t` for `0 <= t <= g(max)`.
    pub(crate) fn inv_below(&self, t: T) -> T {
        let m = self.m();
        if t <= T::zero() {
            return self.sorted[0];
        }
        // g(s_k) is non-decreasing in k; find the first k with g(s_k) >= t.
        let k = partition(m, |k| self.below_at(k) < t);
        if k >= m {
            return self.sorted[m - 1];
        }
        if k == 0 {
            return self.sorted[0];
        }
        (t + self.prefix[k]) / T::count(k)
    }

    /// Solves `δ (y_a − y_b) = f(y_a) = g(y_b)` with `y_a >= y_b`.
    pub(crate) fn balance(&self, delta: T) -> (T, T) {
        let m = self.m();
        let (lo, hi) = (self.sorted[0], self.sorted[m - 1]);
        if lo == hi {
            return (lo, lo);
        }
        let t_hi = self.above_at(0).min(self.below_at(m - 1));
        let h = |t: T| delta * (self.inv_above(t) - self.inv_below(t)) - t;
        let mut points: Vec<T> = Vec::with_capacity(2 * m + 2);
        points.push(T::zero());
        points.push(t_hi);
        for k in 0..m {
            for t in [self.above_at(k), self.below_at(k)] {
                if t > T::zero() && t < t_hi {
                    points.push(t);
                }
            }
        }
        points.sort_by(|a, b| a.partial_cmp(b).expect("finite breakpoints"));
        points.dedup();
        // h is decreasing and linear between consecutive points.
        let idx = partition(points.len(), |k| h(points[k]) > T::zero());
        let t = if idx == 0 {
            T::zero()
        } else if idx >= points.len() {
            t_hi
        } else {
            let (t0, t1) = (points[idx - 1], points[idx]);
            let (h0, h1) = (h(t0), h(t1));
            if h0 == h1 {
                t0
            } else {
                (t0 + (t1 - t0) * h0 / (h0 - h1)).max(t0).min(t1)
            }
        };
        let ya = self.inv_above(t);
        let yb = self.inv_below(t).min(ya);
        (ya, yb)
    }
}

/// Index of the first `k` in `0..n` with `!pred(k)`, for a predicate that is true on a prefix.
fn partition(n: usize, pred: impl Fn(usize) -> bool) -> usize {
    let (mut lo, mut hi) = (0, n);
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if pred(mid) {
            lo = mid + 1;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Strongly local quadratic diffusion from `seeds`. Hitting `cfg.max_pushes` is reported
/// through [`Diffusion::converged`].
pub fn solve<T: Scalar>(h: &Hypergraph<T>, seeds: &NodeSet, cfg: &DiffusionConfig<T>) -> Result<Diffusion<T>> {
    let mut solver = LhqdSolver::new(h, seeds, *cfg)?;
    let converged = solver.run();
    Ok(solver.into_diffusion(converged))
}

/// Residual of original node `i`, recomputed from the stored values.
pub fn node_residual<T: Scalar>(h: &Hypergraph<T>, state: &DiffusionState<T>, cfg: &DiffusionConfig<T>, i: usize) -> T {
    PushContext { hypergraph: h, state, gamma: cfg.gamma, p: T::lit(2.0) }.node_residual(i)
}

/// `(r_a, r_b)` of gadget `g`, recomputed from the stored values.
pub fn aux_residuals<T: Scalar>(h: &Hypergraph<T>, state: &DiffusionState<T>, g: usize) -> (T, T) {
    PushContext { hypergraph: h, state, gamma: T::one(), p: T::lit(2.0) }.aux_residuals(g)
}

#[cfg(test)]
mod tests {
    use super::super::{GadgetArcs, GadgetCache, NodeCache};
    use super::*;
    use crate::error::Error;
    use crate::hypergraph::GadgetParams;

    fn two_triangles() -> Hypergraph<f64> {
        Hypergraph::with_delta(4, vec![vec![0, 1, 2], vec![1, 2, 3]], 1.0).unwrap()
    }

    fn seeds(h: &Hypergraph<f64>, ids: &[usize]) -> NodeSet {
        NodeSet::from_one_based(h.num_nodes(), ids.iter().copied()).unwrap()
    }

    #[test]
    fn init_residuals() {
        let h = two_triangles();
        let s = LhqdSolver::new(&h, &seeds(&h, &[2]), DiffusionConfig::new(0.1)).unwrap();
        let r: Vec<_> = s.state().residual_entries().collect();
        assert_eq!(r, vec![(1, 2.0)]);
        assert_eq!(s.state().queued().collect::<Vec<_>>(), vec![1]);

        let s = LhqdSolver::new(&h, &seeds(&h, &[1, 4]), DiffusionConfig::new(0.1)).unwrap();
        let mass: f64 = s.state().residual_entries().map(|e| e.1).sum();
        assert_eq!(mass, 2.0);
        assert_eq!(s.context().residual_mass(), 2.0);

        let s = LhqdSolver::new(&h, &seeds(&h, &[2]), DiffusionConfig::new(1.0)).unwrap();
        assert_eq!(s.state().queued().count(), 0);
    }

    #[test]
    fn init_rejections() {
        let h = Hypergraph::<f64>::with_delta(3, vec![vec![0, 1]], 1.0).unwrap();
        let cfg = DiffusionConfig::new(0.1);
        assert!(matches!(LhqdSolver::new(&h, &NodeSet::empty(), cfg), Err(Error::InvalidSeeds(_))));
        assert!(matches!(LhqdSolver::new(&h, &NodeSet::new(3, [2]).unwrap(), cfg), Err(Error::InvalidSeeds(_))));
        assert!(matches!(
            LhqdSolver::new(&h, &NodeSet::new(3, [0]).unwrap(), DiffusionConfig::new(0.0)),
            Err(Error::InvalidConfig(_))
        ));
    }

    #[test]
    fn kappa_one_gives_zero() {
        let h = two_triangles();
        let x = solve(&h, &seeds(&h, &[2]), &DiffusionConfig::new(1.0)).unwrap();
        assert!(x.is_zero() && x.converged);
        assert_eq!(x.ledger.hyperpushes, 0);
    }

    #[test]
    fn node_residual_examples() {
        // node 1 in two unit gadgets {1,2} and {1,3}
        let h = Hypergraph::<f64>::with_delta(3, vec![vec![0, 1], vec![0, 2]], 1.0).unwrap();
        let cfg = DiffusionConfig::new(0.1);
        let mut s = LhqdSolver::new(&h, &seeds(&h, &[1]), cfg).unwrap();
        assert_eq!(node_residual(&h, s.state(), &cfg, 0), 2.0);
        assert_eq!(node_residual(&h, s.state(), &cfg, 1), 0.0);
        s.state.x.insert(0, 1.0);
        assert!((node_residual(&h, s.state(), &cfg, 0) + 20.0).abs() < 1e-12);
    }

    #[test]
    fn aux_residual_examples() {
        let h = Hypergraph::<f64>::with_delta(2, vec![vec![0, 1]], 1.0).unwrap();
        let mut s = LhqdSolver::new(&h, &seeds(&h, &[1]), DiffusionConfig::new(0.1)).unwrap();
        assert_eq!(aux_residuals(&h, s.state(), 0), (0.0, 0.0));
        s.state.x.insert(0, 0.5);
        assert_eq!(aux_residuals(&h, s.state(), 0), (0.5, 0.0));
        s.state.x.insert(0, 0.11);
        s.state.aux_x.insert(0, (0.0733333, 0.0366667));
        let (ra, rb) = aux_residuals(&h, s.state(), 0);
        assert!(ra.abs() < 1e-6 && rb.abs() < 1e-6);
    }

    #[test]
    fn fast_node_step() {
        let arcs = [GadgetArcs { c: 1.0_f64, xa: 0.0, xb: 0.0 }];
        let step = NodeStep {
            x: 0.1,
            residual: 1.0,
            degree: 1.0,
            target: 0.05,
            gamma: 0.1,
            seed: true,
            arcs: &arcs,
            cache: NodeCache::scan(0.1, &arcs),
        };
        let mv = Quadratic.node_step(&step);
        assert!(mv.fast);
        assert!((mv.x - 0.1 - 0.95 / 11.0).abs() < 1e-15);
        assert!((0.95f64 / 11.0 - 0.0863636).abs() < 1e-7);

        let none = NodeStep { arcs: &[], cache: NodeCache::scan(0.0, &[]), x: 0.0, ..step };
        assert_eq!(Quadratic.node_step(&none).x, 0.95);
    }

    #[test]
    fn breakpoint_node_step_matches_recomputation() {
        // arcs whose auxiliary values sit just above x force the slow path
        let arcs = [
            GadgetArcs { c: 1.0_f64, xa: 0.01, xb: 0.005 },
            GadgetArcs { c: 2.0, xa: 0.02, xb: 0.0 },
            GadgetArcs { c: 0.5, xa: 0.0, xb: 0.0 },
        ];
        let (gamma, d) = (0.1, 3.5);
        let residual_at = |x: f64| {
            let flow: f64 = arcs.iter().map(|a| a.c * ((a.xb - x).max(0.0) - (x - a.xa).max(0.0))).sum();
            flow / gamma + d * (1.0 - x)
        };
        let x0 = 0.0;
        let step = NodeStep {
            x: x0,
            residual: residual_at(x0),
            degree: d,
            target: 0.175,
            gamma,
            seed: true,
            arcs: &arcs,
            cache: NodeCache::scan(x0, &arcs),
        };
        let mv = Quadratic.node_step(&step);
        assert!(!mv.fast);
        assert!((residual_at(mv.x) - 0.175).abs() < 1e-12, "{}", residual_at(mv.x));
    }

    #[test]
    fn auxpush_example() {
        let members = [0.11_f64, 0.0];
        let step = GadgetStep {
            c: 1.0,
            delta: 1.0,
            xa: 0.0,
            xb: 0.0,
            ra: 0.11,
            rb: 0.0,
            members: &members,
            cache: GadgetCache::scan(1.0, 0.0, 0.0, &members),
        };
        let mv = Quadratic.gadget_step(&step);
        assert!((mv.xa - 0.11 * 2.0 / 3.0).abs() < 1e-12);
        assert!((mv.xb - 0.11 / 3.0).abs() < 1e-12);
        assert!((mv.xa - 0.0733333).abs() < 1e-7 && (mv.xb - 0.0366667).abs() < 1e-7);
    }

    #[test]
    fn hinge_inverses() {
        let hs = HingeSum::new(&[0.3, 0.0, 0.1, 0.1]);
        let f = |y: f64| [0.3, 0.0, 0.1, 0.1].iter().map(|v| (v - y).max(0.0)).sum::<f64>();
        let g = |y: f64| [0.3, 0.0, 0.1, 0.1].iter().map(|v| (y - v).max(0.0)).sum::<f64>();
        for t in [0.0, 0.01, 0.1, 0.2, 0.29, 0.3] {
            assert!((f(hs.inv_above(t)) - t).abs() < 1e-12, "f {t}");
        }
        for t in [0.0, 0.01, 0.1, 0.2, 0.5, 0.7] {
            assert!((g(hs.inv_below(t)) - t).abs() < 1e-12, "g {t}");
        }
        assert_eq!(hs.inv_above(0.0), 0.3);
        assert_eq!(hs.inv_below(0.0), 0.0);
        for delta in [1.0, 1.5, 3.0, 10.0] {
            let (ya, yb) = hs.balance(delta);
            assert!(ya >= yb);
            assert!((delta * (ya - yb) - f(ya)).abs() < 1e-12);
            assert!((f(ya) - g(yb)).abs() < 1e-12);
        }
        assert_eq!(HingeSum::new(&[0.2, 0.2]).balance(1.0), (0.2, 0.2));
    }

    #[test]
    fn triangle_postconditions() {
        let h = Hypergraph::<f64>::with_delta(3, vec![vec![0, 1, 2]], 1.0).unwrap();
        let cfg = DiffusionConfig::new(0.1);
        let mut s = LhqdSolver::new(&h, &seeds(&h, &[1]), cfg).unwrap();
        assert!(s.run());
        let ctx = s.context();
        for i in 0..3 {
            let g = ctx.node_residual(i);
            assert!(g >= -1e-12 && g <= 0.1 * h.degree(i) * (1.0 + 1e-9), "g_{i} = {g}");
            assert!((g - s.state().residual(i)).abs() < 1e-9);
            let x = s.state().x(i);
            assert!((0.0..=1.0).contains(&x));
        }
        let (ra, rb) = ctx.aux_residuals(0);
        assert!(ra.abs() < 1e-9 && rb.abs() < 1e-9);
        assert!((ctx.residual_mass() - ctx.mass_identity()).abs() < 1e-9);
        let (xa, xb) = s.state().aux(0);
        assert!(xa >= xb);
        let bound = super::super::push_volume_bound(&cfg, 1.0, 1.0);
        assert!(s.state().ledger().pushed_volume <= bound);
    }

    #[test]
    fn weighted_gadgets_converge() {
        let g = |c, d| GadgetParams::new(c, d).unwrap();
        let h = Hypergraph::new(
            5,
            vec![vec![0, 1, 2, 3], vec![2, 3, 4], vec![0, 4]],
            vec![vec![g(1.0, 1.0), g(0.5, 2.0)], vec![g(2.0, 1.5)], vec![g(1.0, 1.0)]],
        )
        .unwrap();
        let cfg = DiffusionConfig::new(0.05).with_gamma(0.5).with_rho(0.9);
        let mut s = LhqdSolver::new(&h, &seeds(&h, &[1, 2]), cfg).unwrap();
        assert!(s.run());
        let ctx = s.context();
        for i in 0..5 {
            let g = ctx.node_residual(i);
            assert!(g >= -1e-10 && g <= 0.05 * h.degree(i) * (1.0 + 1e-9));
        }
        for j in 0..h.num_gadgets() {
            let (ra, rb) = ctx.aux_residuals(j);
            assert!(ra.abs() < 1e-9 && rb.abs() < 1e-9);
        }
    }

    #[test]
    fn f32_runs() {
        let h = Hypergraph::<f32>::with_delta(4, vec![vec![0, 1, 2], vec![1, 2, 3]], 1.0).unwrap();
        let x = solve(&h, &NodeSet::new(4, [0]).unwrap(), &DiffusionConfig::new(0.1)).unwrap();
        assert!(x.converged);
        assert!(x.get(0) > 0.0);
    }

    #[test]
    fn push_cap_reports_non_convergence() {
        let h = two_triangles();
        let cfg = DiffusionConfig::new(0.001).with_max_pushes(1);
        let x = solve(&h, &seeds(&h, &[2]), &cfg).unwrap();
        assert!(!x.converged);
        assert_eq!(x.ledger.hyperpushes, 1);
        assert!(x.ensure_converged().is_err());
    }
}
