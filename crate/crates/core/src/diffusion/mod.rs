//! Strongly local push solvers for the localized hypergraph cut diffusion.
//!
//! Both solvers share one driver ([`PushSolver`]): a FIFO queue of optimality violations
//! `r_i > κ d_i`, a *hyperpush* that raises `x_i` until its residual reaches `ρ κ d_i`, and an
//! *auxpush* on every gadget touching `i` that raises the auxiliary pair `(x_a, x_b)` until both
//! auxiliary residuals vanish again. The two solvers differ only in the [`PushRule`] that
//! computes the new coordinate values: closed form for the quadratic loss ([`Quadratic`]),
//! bisection for the `p`-power loss ([`PowerLoss`]).
//!
//! All state is sparse. Node residuals are maintained incrementally; auxiliary residuals are
//! stored in units of the gadget arcs (no `1/γ` factor), which is irrelevant for the condition
//! `r_a = r_b = 0` they must satisfy.

mod pnorm;
mod quadratic;

use std::collections::{HashMap, HashSet, VecDeque};

use crate::error::{Error, Result};
use crate::hypergraph::{Hypergraph, NodeSet};
use crate::scalar::{loss_slope, pos, Scalar};

pub use pnorm::{pnorm_node_residual, pnorm_solve, PnormSolver, PowerLoss};
pub use quadratic::{aux_residuals, node_residual, solve, LhqdSolver, Quadratic};

/// Solver knobs.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiffusionConfig<T> {
    /// Locality: weight `γ d_v` of the source and sink arcs.
    pub gamma: T,
    /// Sparsity: violations are `r_i > κ d_i`.
    pub kappa: T,
    /// A push leaves `r_i = ρ κ d_i`.
    pub rho: T,
    /// Threshold of the default delta-linear gadget when a hypergraph is built from a file.
    pub delta: T,
    /// Loss exponent, used by the p-norm solver only.
    pub p: T,
    /// Bisection width of the p-norm solver.
    pub eps: T,
    pub max_pushes: usize,
    /// Keep auxiliary coordinates in the returned [`Diffusion`].
    pub emit_aux: bool,
}

impl<T: Scalar> DiffusionConfig<T> {
    /// Defaults: `γ = 0.1`, `ρ = 0.5`, `δ = 1`, `p = 2`, `ε = 1e-8`.
    pub fn new(kappa: T) -> Self {
        Self {
            gamma: T::lit(0.1),
            kappa,
            rho: T::lit(0.5),
            delta: T::one(),
            p: T::lit(2.0),
            eps: T::lit(1e-8),
            max_pushes: 100_000_000,
            emit_aux: false,
        }
    }

    pub fn with_gamma(mut self, gamma: T) -> Self {
        self.gamma = gamma;
        self
    }

    pub fn with_rho(mut self, rho: T) -> Self {
        self.rho = rho;
        self
    }

    pub fn with_delta(mut self, delta: T) -> Self {
        self.delta = delta;
        self
    }

    pub fn with_p(mut self, p: T) -> Self {
        self.p = p;
        self
    }

    pub fn with_eps(mut self, eps: T) -> Self {
        self.eps = eps;
        self
    }

    pub fn with_max_pushes(mut self, max_pushes: usize) -> Self {
        self.max_pushes = max_pushes;
        self
    }

    pub fn with_emit_aux(mut self, emit_aux: bool) -> Self {
        self.emit_aux = emit_aux;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: String| Err(Error::InvalidConfig(what));
        let finite = [self.gamma, self.kappa, self.rho, self.delta, self.p, self.eps];
        if finite.iter().any(|v| !v.is_finite()) {
            return bad("parameters must be finite".into());
        }
        if !(self.gamma > T::zero()) {
            return bad(format!("gamma must be positive, got {}", self.gamma));
        }
        if !(self.kappa > T::zero()) {
            return bad(format!("kappa must be positive, got {}", self.kappa));
        }
        if !(self.rho > T::zero() && self.rho < T::one()) {
            return bad(format!("rho must lie in (0, 1), got {}", self.rho));
        }
        if !(self.delta >= T::one()) {
            return bad(format!("delta must be >= 1, got {}", self.delta));
        }
        if !(self.p > T::one() && self.p <= T::lit(2.0)) {
            return bad(format!("p must lie in (1, 2], got {}", self.p));
        }
        if !(self.eps > T::zero()) {
            return bad(format!("eps must be positive, got {}", self.eps));
        }
        Ok(())
    }
}

/// Order information around an original node `i`, taken over its incident gadgets.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NodeCache<T> {
    /// Σ w_ia over gadgets with `x_a < x_i`.
    pub s_a: T,
    /// Σ w_bi over gadgets with `x_b > x_i`.
    pub s_b: T,
    /// min `x_a` with `x_a >= x_i`, `+inf` if none.
    pub a_min: T,
    /// min `x_b` with `x_b > x_i`, `+inf` if none.
    pub b_min: T,
}

impl<T: Scalar> NodeCache<T> {
    pub fn scan(x: T, arcs: &[GadgetArcs<T>]) -> Self {
        let mut c = Self { s_a: T::zero(), s_b: T::zero(), a_min: T::infinity(), b_min: T::infinity() };
        for arc in arcs {
            if arc.xa < x {
                c.s_a = c.s_a + arc.c;
            } else {
                c.a_min = c.a_min.min(arc.xa);
            }
            if arc.xb > x {
                c.s_b = c.s_b + arc.c;
                c.b_min = c.b_min.min(arc.xb);
            }
        }
        c
    }
}

/// Order information around an auxiliary pair, taken over the gadget's member nodes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GadgetCache<T> {
    /// Σ w_ia over members with `x_i > x_a`.
    pub z_a: T,
    /// Σ w_bi over members with `x_i < x_b`.
    pub z_b: T,
    /// min member value above `x_a`.
    pub x_min_a: T,
    /// min member value at or above `x_b`.
    pub x_min_b: T,
}

impl<T: Scalar> GadgetCache<T> {
    pub fn scan(c: T, xa: T, xb: T, members: &[T]) -> Self {
        let mut out = Self { z_a: T::zero(), z_b: T::zero(), x_min_a: T::infinity(), x_min_b: T::infinity() };
        for &v in members {
            if v > xa {
                out.z_a = out.z_a + c;
                out.x_min_a = out.x_min_a.min(v);
            }
            if v < xb {
                out.z_b = out.z_b + c;
            } else {
                out.x_min_b = out.x_min_b.min(v);
            }
        }
        out
    }
}

/// Push counters. `pushed_volume` is Σ d_i over hyperpushes.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PushLedger<T> {
    pub hyperpushes: usize,
    pub auxpushes: usize,
    pub pushed_volume: T,
    /// Hyperpushes whose order guess failed and needed the breakpoint search.
    pub node_fallbacks: usize,
    pub aux_fallbacks: usize,
}

/// Sparse solver state. Entries that are not stored are exactly zero.
#[derive(Clone, Debug)]
pub struct DiffusionState<T> {
    seeds: NodeSet,
    x: HashMap<usize, T>,
    r: HashMap<usize, T>,
    aux_x: HashMap<usize, (T, T)>,
    aux_r: HashMap<usize, (T, T)>,
    queue: VecDeque<usize>,
    queued: HashSet<usize>,
    node_caches: HashMap<usize, NodeCache<T>>,
    gadget_caches: HashMap<usize, GadgetCache<T>>,
    ledger: PushLedger<T>,
}

impl<T: Scalar> DiffusionState<T> {
    #[inline]
    pub fn x(&self, i: usize) -> T {
        self.x.get(&i).copied().unwrap_or_else(T::zero)
    }

    #[inline]
    pub fn residual(&self, i: usize) -> T {
        self.r.get(&i).copied().unwrap_or_else(T::zero)
    }

    /// `(x_a, x_b)` of gadget `g`.
    #[inline]
    pub fn aux(&self, g: usize) -> (T, T) {
        self.aux_x.get(&g).copied().unwrap_or((T::zero(), T::zero()))
    }

    /// Maintained `(r_a, r_b)` of gadget `g`, in gadget-arc units.
    pub fn aux_residual(&self, g: usize) -> (T, T) {
        self.aux_r.get(&g).copied().unwrap_or((T::zero(), T::zero()))
    }

    pub fn seeds(&self) -> &NodeSet {
        &self.seeds
    }

    pub fn is_seed(&self, i: usize) -> bool {
        self.seeds.contains(i)
    }

    pub fn x_entries(&self) -> impl Iterator<Item = (usize, T)> + '_ {
        self.x.iter().map(|(&k, &v)| (k, v))
    }

    pub fn residual_entries(&self) -> impl Iterator<Item = (usize, T)> + '_ {
        self.r.iter().map(|(&k, &v)| (k, v))
    }

    pub fn aux_entries(&self) -> impl Iterator<Item = (usize, (T, T))> + '_ {
        self.aux_x.iter().map(|(&k, &v)| (k, v))
    }

    /// Original nodes with any stored value or residual.
    pub fn touched_nodes(&self) -> usize {
        self.r.len()
    }

    pub fn queued(&self) -> impl Iterator<Item = usize> + '_ {
        self.queue.iter().copied()
    }

    pub fn node_cache(&self, i: usize) -> Option<&NodeCache<T>> {
        self.node_caches.get(&i)
    }

    pub fn gadget_cache(&self, g: usize) -> Option<&GadgetCache<T>> {
        self.gadget_caches.get(&g)
    }

    pub fn ledger(&self) -> &PushLedger<T> {
        &self.ledger
    }
}

/// Read-only view used to recompute residuals from scratch.
pub struct PushContext<'a, T> {
    pub hypergraph: &'a Hypergraph<T>,
    pub state: &'a DiffusionState<T>,
    pub gamma: T,
    pub p: T,
}

impl<'a, T: Scalar> PushContext<'a, T> {
    /// `(1/γ) Σ_b w_bi ℓ'((x_b − x_i)_+) − (1/γ) Σ_a w_ia ℓ'((x_i − x_a)_+) + d_i ℓ'(1_R(i) − x_i)`.
    pub fn node_residual(&self, i: usize) -> T {
        let h = self.hypergraph;
        let s = self.state;
        let xi = s.x(i);
        let mut flow = T::zero();
        for g in h.node_gadgets(i) {
            let c = h.gadget(g).c;
            let (xa, xb) = s.aux(g);
            flow = flow + c * (loss_slope(pos(xb - xi), self.p) - loss_slope(pos(xi - xa), self.p));
        }
        let ind = if s.is_seed(i) { T::one() } else { T::zero() };
        flow / self.gamma + h.degree(i) * loss_slope(ind - xi, self.p)
    }

    /// `(r_a, r_b)` recomputed in gadget-arc units.
    pub fn aux_residuals(&self, g: usize) -> (T, T) {
        let h = self.hypergraph;
        let params = h.gadget(g);
        let (xa, xb) = self.state.aux(g);
        let mut up = T::zero();
        let mut down = T::zero();
        for &v in h.gadget_members(g) {
            let xv = self.state.x(v);
            up = up + loss_slope(pos(xv - xa), self.p);
            down = down + loss_slope(pos(xb - xv), self.p);
        }
        let mid = params.delta * loss_slope(pos(xa - xb), self.p);
        (params.c * (up - mid), params.c * (mid - down))
    }

    /// Σ of every residual in the localized graph, recomputed: original nodes plus the
    /// auxiliary residuals scaled to the same units.
    pub fn residual_mass(&self) -> T {
        let nodes: T = self.state.r.keys().map(|&i| self.node_residual(i)).sum();
        let gadgets: HashSet<usize> = self
            .state
            .r
            .keys()
            .flat_map(|&i| self.hypergraph.node_gadgets(i))
            .chain(self.state.aux_x.keys().copied())
            .collect();
        let aux: T = gadgets
            .into_iter()
            .map(|g| {
                let (ra, rb) = self.aux_residuals(g);
                ra + rb
            })
            .sum();
        nodes + aux / self.gamma
    }

    /// `Σ_{i∈R} d_i ℓ'(1 − x_i) − Σ_{i∉R} d_i ℓ'(x_i)`, which equals the total residual.
    pub fn mass_identity(&self) -> T {
        let h = self.hypergraph;
        let s = self.state;
        let seeds: T = s.seeds.iter().map(|i| h.degree(i) * loss_slope(T::one() - s.x(i), self.p)).sum();
        let rest: T =
            s.x.iter().filter(|(i, _)| !s.is_seed(**i)).map(|(&i, &x)| h.degree(i) * loss_slope(x, self.p)).sum();
        seeds - rest
    }
}

/// Hooks called after every push; the default methods do nothing.
pub trait PushObserver<T: Scalar> {
    fn after_hyperpush(&mut self, _ctx: &PushContext<'_, T>, _node: usize, _dx: T) {}
    fn after_auxpush(&mut self, _ctx: &PushContext<'_, T>, _gadget: usize, _dxa: T, _dxb: T) {}
}

impl<T: Scalar> PushObserver<T> for () {}

/// Current values on the arcs between node `i` and one incident gadget.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GadgetArcs<T> {
    pub c: T,
    pub xa: T,
    pub xb: T,
}

/// Input of a hyperpush on one node.
#[derive(Debug)]
pub struct NodeStep<'a, T> {
    pub x: T,
    pub residual: T,
    pub degree: T,
    pub target: T,
    pub gamma: T,
    pub seed: bool,
    pub arcs: &'a [GadgetArcs<T>],
    pub cache: NodeCache<T>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NodeMove<T> {
    pub x: T,
    /// Residual of the node at the new value.
    pub residual: T,
    /// The cached order held and no breakpoint search was needed.
    pub fast: bool,
}

/// Input of an auxpush on one gadget. Residuals are in gadget-arc units.
#[derive(Debug)]
pub struct GadgetStep<'a, T> {
    pub c: T,
    pub delta: T,
    pub xa: T,
    pub xb: T,
    pub ra: T,
    pub rb: T,
    pub members: &'a [T],
    pub cache: GadgetCache<T>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GadgetMove<T> {
    pub xa: T,
    pub xb: T,
    pub fast: bool,
}

/// How a push finds new coordinate values.
pub trait PushRule<T: Scalar> {
    /// Exponent `p` of the arc loss `z^p / p`.
    fn exponent(&self) -> T;
    /// New `x_i` with residual at `step.target`, other coordinates fixed.
    fn node_step(&self, step: &NodeStep<'_, T>) -> NodeMove<T>;
    /// New `(x_a, x_b)` with both auxiliary residuals zero, member values fixed.
    fn gadget_step(&self, step: &GadgetStep<'_, T>) -> GadgetMove<T>;
}

/// Solution of a diffusion run, restricted to original nodes.
#[derive(Clone, Debug)]
pub struct Diffusion<T> {
    /// Positive entries in ascending node order.
    pub x: Vec<(usize, T)>,
    /// `(gadget, x_a, x_b)` for stored gadgets when requested.
    pub aux: Option<Vec<(usize, T, T)>>,
    pub ledger: PushLedger<T>,
    /// `false` when the push cap was hit with violations left.
    pub converged: bool,
    pub touched_nodes: usize,
    pub seed_volume: T,
}

impl<T: Scalar> Diffusion<T> {
    pub fn get(&self, i: usize) -> T {
        match self.x.binary_search_by_key(&i, |e| e.0) {
            Ok(k) => self.x[k].1,
            Err(_) => T::zero(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.x.is_empty()
    }

    pub fn support(&self) -> NodeSet {
        NodeSet::collect(self.x.iter().map(|e| e.0))
    }

    pub fn dense(&self, num_nodes: usize) -> Vec<T> {
        let mut out = vec![T::zero(); num_nodes];
        for &(i, v) in &self.x {
            out[i] = v;
        }
        out
    }

    /// Turns a capped run into an error.
    pub fn ensure_converged(self) -> Result<Self> {
        if self.converged {
            Ok(self)
        } else {
            Err(Error::InvalidConfig(format!(
                "push limit reached after {} pushes with violations left",
                self.ledger.hyperpushes
            )))
        }
    }
}

/// Upper bound on Σ d_i over hyperpushes for the quadratic solver:
/// `(γκ + δ) vol(R) / (γκ (1 − ρ))`.
pub fn push_volume_bound<T: Scalar>(cfg: &DiffusionConfig<T>, delta_max: T, seed_volume: T) -> T {
    let gk = cfg.gamma * cfg.kappa;
    (gk + delta_max) * seed_volume / (gk * (T::one() - cfg.rho))
}

/// Upper bound on Σ d_i over hyperpushes for the p-norm solver:
/// `(γκ + δ)^{1/(p−1)} vol(R) / ((p − 1) (γκ (1 − ρ))^{1/(p−1)})`.
pub fn pnorm_push_volume_bound<T: Scalar>(cfg: &DiffusionConfig<T>, delta_max: T, seed_volume: T) -> T {
    let gk = cfg.gamma * cfg.kappa;
    let q = T::one() / (cfg.p - T::one());
    (gk + delta_max).powf(q) * seed_volume / ((cfg.p - T::one()) * (gk * (T::one() - cfg.rho)).powf(q))
}

/// Violation-queue driver shared by the quadratic and p-norm solvers.
pub struct PushSolver<'h, T, R> {
    h: &'h Hypergraph<T>,
    cfg: DiffusionConfig<T>,
    rule: R,
    state: DiffusionState<T>,
    arcs: Vec<GadgetArcs<T>>,
    values: Vec<T>,
    gadgets: Vec<usize>,
}

impl<'h, T: Scalar, R: PushRule<T>> PushSolver<'h, T, R> {
    /// Sets `x = 0`, `r_v = d_v` on seeds and queues every seed that violates `r_v > κ d_v`.
    pub fn with_rule(h: &'h Hypergraph<T>, seeds: &NodeSet, cfg: DiffusionConfig<T>, rule: R) -> Result<Self> {
        cfg.validate()?;
        if seeds.is_empty() {
            return Err(Error::InvalidSeeds("seed set is empty".into()));
        }
        let mut r = HashMap::with_capacity(seeds.len());
        for s in seeds.iter() {
            if s >= h.num_nodes() {
                return Err(Error::InvalidSeeds(format!("seed {} out of range 1..={}", s + 1, h.num_nodes())));
            }
            let d = h.degree(s);
            if !(d > T::zero()) {
                return Err(Error::InvalidSeeds(format!("seed {} has zero degree", s + 1)));
            }
            r.insert(s, d);
        }
        let mut state = DiffusionState {
            seeds: seeds.clone(),
            x: HashMap::new(),
            r,
            aux_x: HashMap::new(),
            aux_r: HashMap::new(),
            queue: VecDeque::new(),
            queued: HashSet::new(),
            node_caches: HashMap::new(),
            gadget_caches: HashMap::new(),
            ledger: PushLedger::default(),
        };
        for s in seeds.iter() {
            if is_violation(&cfg, state.residual(s), h.degree(s)) {
                state.queue.push_back(s);
                state.queued.insert(s);
            }
        }
        Ok(Self { h, cfg, rule, state, arcs: Vec::new(), values: Vec::new(), gadgets: Vec::new() })
    }

    pub fn state(&self) -> &DiffusionState<T> {
        &self.state
    }

    pub fn config(&self) -> &DiffusionConfig<T> {
        &self.cfg
    }

    pub fn hypergraph(&self) -> &'h Hypergraph<T> {
        self.h
    }

    pub fn context(&self) -> PushContext<'_, T> {
        PushContext { hypergraph: self.h, state: &self.state, gamma: self.cfg.gamma, p: self.rule.exponent() }
    }

    pub fn node_residual(&self, i: usize) -> T {
        self.context().node_residual(i)
    }

    pub fn aux_residuals(&self, g: usize) -> (T, T) {
        self.context().aux_residuals(g)
    }

    pub fn is_violation(&self, i: usize) -> bool {
        is_violation(&self.cfg, self.state.residual(i), self.h.degree(i))
    }

    /// Raises `x_i` so that its residual becomes `ρ κ d_i`, holding auxiliary values fixed,
    /// and accumulates the resulting change into the residuals of the adjacent auxiliary
    /// pairs. Returns `Δx_i`. The adjacent gadgets must be restored with [`Self::auxpush`].
    pub fn hyperpush(&mut self, i: usize) -> Result<T> {
        let h = self.h;
        if i >= h.num_nodes() || !self.is_violation(i) {
            return Err(Error::NotViolating(i));
        }
        let d = h.degree(i);
        let x = self.state.x(i);
        self.arcs.clear();
        for g in h.node_gadgets(i) {
            let (xa, xb) = self.state.aux(g);
            self.arcs.push(GadgetArcs { c: h.gadget(g).c, xa, xb });
        }
        let cache = NodeCache::scan(x, &self.arcs);
        self.state.node_caches.insert(i, cache);
        let step = NodeStep {
            x,
            residual: self.state.residual(i),
            degree: d,
            target: self.cfg.rho * self.cfg.kappa * d,
            gamma: self.cfg.gamma,
            seed: self.state.is_seed(i),
            arcs: &self.arcs,
            cache,
        };
        let mv = self.rule.node_step(&step);
        let nx = mv.x.max(x);
        self.state.x.insert(i, nx);
        self.state.r.insert(i, mv.residual);

        let p = self.rule.exponent();
        for (k, g) in h.node_gadgets(i).enumerate() {
            let GadgetArcs { c, xa, xb } = self.arcs[k];
            let da = c * (loss_slope(pos(nx - xa), p) - loss_slope(pos(x - xa), p));
            let db = c * (loss_slope(pos(xb - x), p) - loss_slope(pos(xb - nx), p));
            if da != T::zero() || db != T::zero() {
                let e = self.state.aux_r.entry(g).or_insert((T::zero(), T::zero()));
                e.0 = e.0 + da;
                e.1 = e.1 + db;
            }
        }
        let ledger = &mut self.state.ledger;
        ledger.hyperpushes += 1;
        ledger.pushed_volume = ledger.pushed_volume + d;
        if !mv.fast {
            ledger.node_fallbacks += 1;
        }
        Ok(nx - x)
    }

    /// Restores `r_a = r_b = 0` on gadget `g` by raising `(x_a, x_b)`, then propagates the
    /// change to the residuals of the gadget's members, queueing new violations.
    /// Returns `(Δx_a, Δx_b)`.
    pub fn auxpush(&mut self, g: usize) -> (T, T) {
        let h = self.h;
        let params = h.gadget(g);
        let members = h.gadget_members(g);
        let (xa, xb) = self.state.aux(g);
        let (ra, rb) = self.state.aux_residual(g);
        self.state.aux_x.entry(g).or_insert((xa, xb));
        if ra == T::zero() && rb == T::zero() {
            return (T::zero(), T::zero());
        }
        self.values.clear();
        self.values.extend(members.iter().map(|&v| self.state.x(v)));
        let cache = GadgetCache::scan(params.c, xa, xb, &self.values);
        self.state.gadget_caches.insert(g, cache);
        let step = GadgetStep { c: params.c, delta: params.delta, xa, xb, ra, rb, members: &self.values, cache };
        let mv = self.rule.gadget_step(&step);
        let nxa = mv.xa.max(xa);
        let nxb = mv.xb.max(xb).min(nxa);

        let p = self.rule.exponent();
        let scale = params.c / self.cfg.gamma;
        for (k, &v) in members.iter().enumerate() {
            let xv = self.values[k];
            let dr = scale
                * (loss_slope(pos(nxb - xv), p) - loss_slope(pos(xb - xv), p) - loss_slope(pos(xv - nxa), p)
                    + loss_slope(pos(xv - xa), p));
            let r = self.state.r.entry(v).or_insert_with(T::zero);
            *r = *r + dr;
            let r = *r;
            if is_violation(&self.cfg, r, h.degree(v)) && self.state.queued.insert(v) {
                self.state.queue.push_back(v);
            }
        }
        self.state.aux_x.insert(g, (nxa, nxb));
        let fresh = self.context().aux_residuals(g);
        self.state.aux_r.insert(g, fresh);
        let ledger = &mut self.state.ledger;
        ledger.auxpushes += 1;
        if !mv.fast {
            ledger.aux_fallbacks += 1;
        }
        (nxa - xa, nxb - xb)
    }

    /// One hyperpush at `i` followed by an auxpush on every incident gadget.
    pub fn push_node<O: PushObserver<T>>(&mut self, i: usize, obs: &mut O) -> Result<()> {
        let dx = self.hyperpush(i)?;
        obs.after_hyperpush(&self.context(), i, dx);
        let mut gadgets = std::mem::take(&mut self.gadgets);
        gadgets.clear();
        gadgets.extend(self.h.node_gadgets(i));
        for &g in &gadgets {
            let (da, db) = self.auxpush(g);
            obs.after_auxpush(&self.context(), g, da, db);
        }
        self.gadgets = gadgets;
        Ok(())
    }

    /// Pops the next queued violation and pushes it. `None` once the queue is empty.
    pub fn step<O: PushObserver<T>>(&mut self, obs: &mut O) -> Option<usize> {
        while let Some(i) = self.state.queue.pop_front() {
            self.state.queued.remove(&i);
            if self.is_violation(i) {
                self.push_node(i, obs).expect("queued node violates optimality");
                return Some(i);
            }
        }
        None
    }

    /// Runs until no violation is left or the push cap is hit; returns whether it converged.
    pub fn run_observed<O: PushObserver<T>>(&mut self, obs: &mut O) -> bool {
        while self.state.ledger.hyperpushes < self.cfg.max_pushes {
            if self.step(obs).is_none() {
                return true;
            }
        }
        self.state.queue.iter().all(|&i| !self.is_violation(i))
    }

    pub fn run(&mut self) -> bool {
        self.run_observed(&mut ())
    }

    pub fn into_diffusion(self, converged: bool) -> Diffusion<T> {
        let mut x: Vec<(usize, T)> = self.state.x.iter().filter(|e| *e.1 > T::zero()).map(|(&k, &v)| (k, v)).collect();
        x.sort_unstable_by_key(|e| e.0);
        let aux = self.cfg.emit_aux.then(|| {
            let mut a: Vec<(usize, T, T)> = self.state.aux_x.iter().map(|(&g, &(xa, xb))| (g, xa, xb)).collect();
            a.sort_unstable_by_key(|e| e.0);
            a
        });
        let seed_volume = self.h.volume(&self.state.seeds);
        Diffusion {
            x,
            aux,
            ledger: self.state.ledger,
            converged,
            touched_nodes: self.state.touched_nodes(),
            seed_volume,
        }
    }
}

#[inline]
fn is_violation<T: Scalar>(cfg: &DiffusionConfig<T>, r: T, d: T) -> bool {
    r > cfg.kappa * d * (T::one() + T::VIOLATION_SLACK)
}
