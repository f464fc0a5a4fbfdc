//! Bisection pushes for the loss `ℓ(z) = z^p / p`, `1 < p <= 2`.

use super::{
    Diffusion, DiffusionConfig, DiffusionState, GadgetMove, GadgetStep, NodeMove, NodeStep, PushContext, PushRule,
    PushSolver,
};
use crate::error::{Error, Result};
use crate::hypergraph::{Hypergraph, NodeSet};
use crate::scalar::{loss_slope, pos, Scalar};

/// `ℓ(z) = z^p / p`. Pushes bisect their one-dimensional equations to width `eps`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PowerLoss<T> {
    pub p: T,
    pub eps: T,
}

pub type PnormSolver<'h, T> = PushSolver<'h, T, PowerLoss<T>>;

impl<'h, T: Scalar> PushSolver<'h, T, PowerLoss<T>> {
    pub fn new(h: &'h Hypergraph<T>, seeds: &NodeSet, cfg: DiffusionConfig<T>) -> Result<Self> {
        Self::with_rule(h, seeds, cfg, PowerLoss { p: cfg.p, eps: cfg.eps })
    }
}

impl<T: Scalar> PowerLoss<T> {
    #[inline]
    fn phi(&self, z: T) -> T {
        loss_slope(z, self.p)
    }

    /// `Σ ℓ'((v − y)₊)`.
    fn above(&self, members: &[T], y: T) -> T {
        members.iter().map(|&v| self.phi(pos(v - y))).sum()
    }

    /// `Σ ℓ'((y − v)₊)`.
    fn below(&self, members: &[T], y: T) -> T {
        members.iter().map(|&v| self.phi(pos(y - v))).sum()
    }

    /// The `y` in `[lo, hi]` with `below(y) = t`, to machine precision.
    fn inv_below(&self, members: &[T], t: T, lo: T, hi: T) -> T {
        let f_hi = self.below(members, hi) - t;
        if f_hi <= T::zero() {
            return hi;
        }
        let f_lo = self.below(members, lo) - t;
        if f_lo >= T::zero() {
            return lo;
        }
        increasing_root(|y| self.below(members, y) - t, (lo, f_lo), (hi, f_hi), T::zero()).1
    }
}

/// Shrinks a bracket `f(lo) < 0 <= f(hi)` of an increasing `f` to width `tol` (or until it
/// stops shrinking) by the Illinois variant of regula falsi. Returns the final `(lo, hi)`.
fn increasing_root<T: Scalar>(
    f: impl Fn(T) -> T,
    (mut lo, mut f_lo): (T, T),
    (mut hi, mut f_hi): (T, T),
    tol: T,
) -> (T, T) {
    let half = T::lit(0.5);
    // +1 when the last two updates moved `lo`, -1 for `hi`
    let mut side = 0;
    for _ in 0..400 {
        if hi - lo <= tol {
            break;
        }
        let mid = lo + (hi - lo) * half;
        let mut x = lo - f_lo * (hi - lo) / (f_hi - f_lo);
        if !(x > lo && x < hi) {
            x = mid;
        }
        if !(x > lo && x < hi) {
            break;
        }
        let fx = f(x);
        if fx < T::zero() {
            lo = x;
            f_lo = fx;
            if side > 0 {
                f_hi = f_hi * half;
            }
            side = 1;
        } else {
            hi = x;
            f_hi = fx;
            if side < 0 {
                f_lo = f_lo * half;
            }
            side = -1;
        }
    }
    (lo, hi)
}

impl<T: Scalar> PushRule<T> for PowerLoss<T> {
    fn exponent(&self) -> T {
        self.p
    }

    fn node_step(&self, s: &NodeStep<'_, T>) -> NodeMove<T> {
        let ind = if s.seed { T::one() } else { T::zero() };
        let residual = |x: T| {
            let flow: T = s.arcs.iter().map(|a| a.c * (self.phi(pos(a.xb - x)) - self.phi(pos(x - a.xa)))).sum();
            flow / s.gamma + s.degree * self.phi(ind - x)
        };
        // residual is decreasing in x; its root is bracketed by [s.x, 1]
        let f = |d: T| s.target - residual(s.x + d);
        let hi = T::one() - s.x;
        let (f_lo, f_hi) = (f(T::zero()), f(hi));
        let hi = if f_lo >= T::zero() {
            T::zero()
        } else if f_hi < T::zero() {
            hi
        } else {
            increasing_root(f, (T::zero(), f_lo), (hi, f_hi), self.eps).1
        };
        let x = s.x + hi;
        NodeMove { x, residual: residual(x), fast: false }
    }

    // Both residuals vanish iff δ ℓ'(x_a − x_b) = F(x_a) = G(x_b) with F, G the hinge sums
    // above and below. Writing x_b as G⁻¹(F(x_a)) leaves one increasing function of x_a.
    fn gadget_step(&self, s: &GadgetStep<'_, T>) -> GadgetMove<T> {
        let m = s.members;
        let (min, max) = m.iter().fold((T::infinity(), T::neg_infinity()), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        if min == max {
            return GadgetMove { xa: min, xb: min, fast: false };
        }
        let gap = |xa: T| {
            let f = self.above(m, xa);
            let xb = self.inv_below(m, f, min, max);
            (s.delta * self.phi(pos(xa - xb)) - f, xb)
        };
        let (mut lo, mut g_lo) = (s.xa.max(min), gap(s.xa.max(min)).0);
        if g_lo > T::zero() {
            (lo, g_lo) = (min, gap(min).0);
        }
        let g_hi = gap(max).0;
        let xa = if g_lo >= T::zero() {
            lo
        } else if g_hi <= T::zero() {
            max
        } else {
            let (a, b) = increasing_root(|xa| gap(xa).0, (lo, g_lo), (max, g_hi), self.eps);
            (a + b) / T::lit(2.0)
        };
        let (_, xb) = gap(xa);
        GadgetMove { xa, xb: xb.min(xa), fast: false }
    }
}

/// Strongly local p-norm diffusion from `seeds` with exponent `cfg.p`.
pub fn pnorm_solve<T: Scalar>(h: &Hypergraph<T>, seeds: &NodeSet, cfg: &DiffusionConfig<T>) -> Result<Diffusion<T>> {
    let mut solver = PnormSolver::new(h, seeds, *cfg)?;
    let converged = solver.run();
    Ok(solver.into_diffusion(converged))
}

/// Residual of original node `i` under the p-norm loss, recomputed from the stored values.
pub fn pnorm_node_residual<T: Scalar>(
    h: &Hypergraph<T>,
    state: &DiffusionState<T>,
    cfg: &DiffusionConfig<T>,
    i: usize,
) -> Result<T> {
    if !(cfg.p > T::one() && cfg.p <= T::lit(2.0)) {
        return Err(Error::InvalidConfig(format!("p must lie in (1, 2], got {}", cfg.p)));
    }
    Ok(PushContext { hypergraph: h, state, gamma: cfg.gamma, p: cfg.p }.node_residual(i))
}
