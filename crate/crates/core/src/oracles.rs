//! Brute-force and dense reference computations for small instances.
//!
//! Nothing here shares code with the push solvers: residuals, objectives and per-gadget
//! minimizers are recomputed from the definitions so that the solvers can be checked against
//! them.

use crate::diffusion::DiffusionConfig;
use crate::error::{Error, Result};
use crate::hypergraph::{splitting_penalty, Hypergraph, NodeSet};
use crate::reduction::{build_reduced_graph, ReducedGraph};
use crate::scalar::Scalar;

pub const BRUTE_MAX_NODES: usize = 20;
pub const CUT_CHECK_MAX_GADGETS: usize = 8;
pub const REFERENCE_MAX_VARS: usize = 2000;
pub const REFERENCE_TOL: f64 = 1e-10;
pub const REFERENCE_MAX_SWEEPS: usize = 2_000_000;

fn phi_of<T: Scalar>(cut: T, vol: T, total: T) -> T {
    let side = vol.min(total - vol);
    if side > T::zero() {
        cut / side
    } else {
        T::infinity()
    }
}

fn mask_set(mask: u64, n: usize) -> NodeSet {
    NodeSet::new(n, (0..n).filter(|&v| mask >> v & 1 == 1)).expect("bits are distinct and in range")
}

/// Conductance of every nonempty proper subset of the nodes, indexed by bit mask.
fn all_conductances<T: Scalar>(h: &Hypergraph<T>) -> Result<Vec<T>> {
    let n = h.num_nodes();
    if n > BRUTE_MAX_NODES {
        return Err(Error::TooLarge(format!("{n} nodes, at most {BRUTE_MAX_NODES} supported")));
    }
    let edge_masks: Vec<u64> = h.edges().iter().map(|e| e.iter().fold(0, |m, &v| m | 1 << v)).collect();
    let total = h.total_volume();
    let full = (1u64 << n) - 1;
    let mut vol = vec![T::zero(); 1 << n];
    let mut out = vec![T::infinity(); 1 << n];
    for mask in 1..full {
        let low = mask.trailing_zeros() as usize;
        vol[mask as usize] = vol[(mask & (mask - 1)) as usize] + h.degree(low);
        let cut: T = edge_masks
            .iter()
            .enumerate()
            .map(|(e, &em)| splitting_penalty(h.edge_gadgets(e), (mask & em).count_ones() as usize, h.edge(e).len()))
            .sum();
        out[mask as usize] = phi_of(cut, vol[mask as usize], total);
    }
    Ok(out)
}

/// Exact minimizer of conductance over all nonempty proper subsets (`n <= 20`). Ties within
/// the crate tolerance go to the lexicographically smallest sorted id list.
pub fn brute_min_conductance<T: Scalar>(h: &Hypergraph<T>) -> Result<(NodeSet, T)> {
    let (best, family) = min_conductance_family(h)?;
    let set = family.into_iter().min_by(|a, b| a.as_slice().cmp(b.as_slice())).unwrap_or_default();
    Ok((set, best))
}

/// Minimum conductance and every set attaining it (within the crate tolerance).
pub fn min_conductance_family<T: Scalar>(h: &Hypergraph<T>) -> Result<(T, Vec<NodeSet>)> {
    let n = h.num_nodes();
    let phis = all_conductances(h)?;
    let best = phis.iter().copied().fold(T::infinity(), T::min);
    let family =
        (1..phis.len().saturating_sub(1)).filter(|&m| close(phis[m], best)).map(|m| mask_set(m as u64, n)).collect();
    Ok((best, family))
}

fn close<T: Scalar>(a: T, b: T) -> bool {
    if a.is_infinite() || b.is_infinite() {
        return a == b;
    }
    (a - b).abs() <= T::EXACT_TOL
}

/// Minimum conductance over all vertex subsets of an explicit (non-localized) reduced graph,
/// with auxiliary nodes of degree zero, and the original-node parts of the minimizers.
pub fn reduced_min_conductance_family<T: Scalar>(g: &ReducedGraph<T>) -> Result<(T, Vec<NodeSet>)> {
    let n = g.node_count;
    if n > BRUTE_MAX_NODES {
        return Err(Error::TooLarge(format!("{n} reduced nodes, at most {BRUTE_MAX_NODES} supported")));
    }
    if g.source.is_some() {
        return Err(Error::InvalidConfig("expected a reduced graph without terminals".into()));
    }
    let total: T = g.degrees.iter().copied().sum();
    let orig_mask = (1u64 << g.num_original) - 1;
    let mut best = T::infinity();
    let mut parts: Vec<(u64, T)> = Vec::new();
    for mask in 1..(1u64 << n) - 1 {
        let vol: T = (0..g.num_original).filter(|&v| mask >> v & 1 == 1).map(|v| g.degrees[v]).sum();
        let cut: T =
            g.arcs.iter().filter(|a| mask >> a.tail & 1 == 1 && mask >> a.head & 1 == 0).map(|a| a.weight).sum();
        let phi = phi_of(cut, vol, total);
        if phi.is_finite() {
            best = best.min(phi);
            parts.push((mask & orig_mask, phi));
        }
    }
    let mut family: Vec<u64> = parts.into_iter().filter(|&(_, phi)| close(phi, best)).map(|(m, _)| m).collect();
    family.sort_unstable();
    family.dedup();
    Ok((best, family.into_iter().map(|m| mask_set(m, g.num_original)).collect()))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CutCheck<T> {
    pub hyper_cut: T,
    pub min_directed_cut: T,
    pub equal: bool,
}

/// Compares `cut_H(S)` with the minimum directed cut of the reduced graph over every placement
/// of the auxiliary nodes (`4^gadgets` placements, at most 8 gadgets).
pub fn cut_preservation_check<T: Scalar>(h: &Hypergraph<T>, s: &NodeSet) -> Result<CutCheck<T>> {
    let m = h.num_gadgets();
    if m > CUT_CHECK_MAX_GADGETS {
        return Err(Error::TooLarge(format!("{m} gadgets, at most {CUT_CHECK_MAX_GADGETS} supported")));
    }
    let g = build_reduced_graph(h);
    let n = h.num_nodes();
    let mut inside = vec![false; g.node_count];
    for v in s.iter() {
        inside[v] = true;
    }
    let mut min_cut = T::infinity();
    for placement in 0..1usize << (2 * m) {
        for k in 0..2 * m {
            inside[n + k] = placement >> k & 1 == 1;
        }
        min_cut = min_cut.min(g.directed_cut(&inside));
    }
    let hyper_cut = h.cut(s);
    Ok(CutCheck { hyper_cut, min_directed_cut: min_cut, equal: (hyper_cut - min_cut).abs() <= T::EXACT_TOL })
}

#[inline]
fn slope<T: Scalar>(z: T, p: T) -> T {
    if z == T::zero() {
        T::zero()
    } else if p == T::lit(2.0) {
        z
    } else {
        z.signum() * z.abs().powf(p - T::one())
    }
}

#[inline]
fn plus<T: Scalar>(z: T) -> T {
    z.max(T::zero())
}

fn loss<T: Scalar>(z: T, p: T) -> T {
    let z = plus(z);
    if p == T::lit(2.0) {
        z * z / T::lit(2.0)
    } else {
        z.powf(p) / p
    }
}

/// `Σ_arcs w ℓ((x_tail − x_head)₊) + κγ Σ d_i x_i` on the localized cut graph with
/// `x_s = 1`, `x_t = 0`; `x` covers original nodes and `aux` holds `(x_a, x_b)` per gadget.
pub fn objective<T: Scalar>(
    h: &Hypergraph<T>,
    seeds: &NodeSet,
    cfg: &DiffusionConfig<T>,
    x: &[T],
    aux: &[(T, T)],
) -> T {
    let p = cfg.p;
    let mut f = T::zero();
    for (v, &xv) in x.iter().enumerate().take(h.num_nodes()) {
        let w = cfg.gamma * h.degree(v);
        let arc = if seeds.contains(v) { T::one() - xv } else { xv };
        f = f + w * loss(arc, p) + cfg.kappa * w * xv;
    }
    for (j, &(xa, xb)) in aux.iter().enumerate() {
        let g = h.gadget(j);
        for &v in h.gadget_members(j) {
            f = f + g.c * (loss(x[v] - xa, p) + loss(xb - x[v], p));
        }
        f = f + g.c * g.delta * loss(xa - xb, p);
    }
    f
}

/// [`objective`] with every auxiliary pair at its exact per-gadget minimizer.
pub fn objective_min_aux<T: Scalar>(h: &Hypergraph<T>, seeds: &NodeSet, cfg: &DiffusionConfig<T>, x: &[T]) -> T {
    let aux = optimal_aux(h, x, cfg.p);
    objective(h, seeds, cfg, x, &aux)
}

fn optimal_aux<T: Scalar>(h: &Hypergraph<T>, x: &[T], p: T) -> Vec<(T, T)> {
    (0..h.num_gadgets())
        .map(|j| {
            let vals: Vec<T> = h.gadget_members(j).iter().map(|&v| x[v]).collect();
            gadget_minimizer(h.gadget(j).delta, &vals, p)
        })
        .collect()
}

/// Bisection for the root of an increasing function on `[lo, hi]`, to machine precision.
fn bisect_increasing<T: Scalar>(f: impl Fn(T) -> T, mut lo: T, mut hi: T) -> T {
    if f(lo) >= T::zero() {
        return lo;
    }
    if f(hi) <= T::zero() {
        return hi;
    }
    loop {
        let mid = (lo + hi) / T::lit(2.0);
        if mid <= lo || mid >= hi {
            return mid;
        }
        if f(mid) < T::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
}

/// Root in `[0, 1]` of an increasing piecewise function whose pieces end at `breaks`;
/// exact interpolation when the pieces are linear, bisection otherwise.
fn root_on_pieces<T: Scalar>(f: impl Fn(T) -> T, breaks: &mut Vec<T>, linear: bool) -> T {
    if f(T::zero()) >= T::zero() {
        return T::zero();
    }
    if f(T::one()) <= T::zero() {
        return T::one();
    }
    breaks.retain(|&b| b > T::zero() && b < T::one());
    breaks.push(T::zero());
    breaks.push(T::one());
    breaks.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    breaks.dedup();
    let mut lo = T::zero();
    let mut flo = f(lo);
    for &b in breaks.iter().skip(1) {
        let fb = f(b);
        if fb >= T::zero() {
            if !linear {
                return bisect_increasing(&f, lo, b);
            }
            let t = lo + (b - lo) * (-flo) / (fb - flo);
            return t.max(lo).min(b);
        }
        lo = b;
        flo = fb;
    }
    T::one()
}

/// Exact minimizer `(x_a, x_b)` of a single gadget's energy with member values fixed:
/// `Σ ℓ((v − x_a)₊) + δ ℓ((x_a − x_b)₊) + Σ ℓ((x_b − v)₊)`, by nested bisection.
pub fn gadget_minimizer<T: Scalar>(delta: T, members: &[T], p: T) -> (T, T) {
    let lo = members.iter().copied().fold(T::infinity(), T::min);
    let hi = members.iter().copied().fold(T::neg_infinity(), T::max);
    if lo >= hi {
        return (lo, lo);
    }
    let below = |y: T| members.iter().map(|&v| slope(plus(y - v), p)).sum::<T>();
    let above = |y: T| members.iter().map(|&v| slope(plus(v - y), p)).sum::<T>();
    // For fixed x_a the optimal x_b balances the middle arc against the arcs below it.
    let xb_of = |xa: T| bisect_increasing(|xb| below(xb) - delta * slope(plus(xa - xb), p), lo, xa);
    let xa = bisect_increasing(|xa| delta * slope(plus(xa - xb_of(xa)), p) - above(xa), lo, hi);
    (xa, xb_of(xa))
}

/// Residuals of the localized objective: `g` on original nodes (scaled by `1/γ`) and
/// `(r_a, r_b)` per gadget (unscaled).
pub fn residuals<T: Scalar>(
    h: &Hypergraph<T>,
    seeds: &NodeSet,
    cfg: &DiffusionConfig<T>,
    x: &[T],
    aux: &[(T, T)],
) -> (Vec<T>, Vec<(T, T)>) {
    let p = cfg.p;
    let mut flow = vec![T::zero(); h.num_nodes()];
    let mut aux_r = Vec::with_capacity(aux.len());
    for (j, &(xa, xb)) in aux.iter().enumerate() {
        let g = h.gadget(j);
        let mid = g.delta * slope(plus(xa - xb), p);
        let (mut up, mut down) = (T::zero(), T::zero());
        for &v in h.gadget_members(j) {
            let into_a = slope(plus(x[v] - xa), p);
            let from_b = slope(plus(xb - x[v]), p);
            up = up + into_a;
            down = down + from_b;
            flow[v] = flow[v] + g.c * (from_b - into_a);
        }
        aux_r.push((g.c * (up - mid), g.c * (mid - down)));
    }
    let g: Vec<T> = (0..h.num_nodes())
        .map(|v| {
            let ind = if seeds.contains(v) { T::one() } else { T::zero() };
            flow[v] / cfg.gamma + h.degree(v) * slope(ind - x[v], p)
        })
        .collect();
    (g, aux_r)
}

/// Largest violation of each optimality condition.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct KktReport<T> {
    /// max `(−g_v)₊`
    pub neg_residual: T,
    /// max `(g_v − κ d_v)₊`
    pub excess: T,
    /// max `|(κ d_v − g_v) x_v|`
    pub slackness: T,
    /// max `|r_a|`, `|r_b|`
    pub aux_residual: T,
    /// max distance of any coordinate from `[0, 1]`
    pub box_violation: T,
}

impl<T: Scalar> KktReport<T> {
    /// Every condition except complementary slackness within `tol`.
    pub fn feasible(&self, tol: T) -> bool {
        self.neg_residual <= tol && self.excess <= tol && self.aux_residual <= tol && self.box_violation <= tol
    }

    pub fn optimal(&self, tol: T) -> bool {
        self.feasible(tol) && self.slackness <= tol
    }

    pub fn max(&self) -> T {
        self.neg_residual.max(self.excess).max(self.slackness).max(self.aux_residual).max(self.box_violation)
    }
}

/// Optimality report for `x` over original nodes. Missing auxiliary values are replaced by
/// exact per-gadget minimizers.
pub fn kkt_check<T: Scalar>(
    h: &Hypergraph<T>,
    seeds: &NodeSet,
    cfg: &DiffusionConfig<T>,
    x: &[T],
    aux: Option<&[(T, T)]>,
) -> KktReport<T> {
    let owned;
    let aux = match aux {
        Some(a) => a,
        None => {
            owned = optimal_aux(h, x, cfg.p);
            &owned
        }
    };
    let (g, aux_r) = residuals(h, seeds, cfg, x, aux);
    let mut rep = KktReport::<T>::default();
    let out_of_box = |v: T| plus(-v).max(plus(v - T::one()));
    for v in 0..h.num_nodes() {
        let cap = cfg.kappa * h.degree(v);
        rep.neg_residual = rep.neg_residual.max(plus(-g[v]));
        rep.excess = rep.excess.max(plus(g[v] - cap));
        rep.slackness = rep.slackness.max(((cap - g[v]) * x[v]).abs());
        rep.box_violation = rep.box_violation.max(out_of_box(x[v]));
    }
    for (j, &(ra, rb)) in aux_r.iter().enumerate() {
        rep.aux_residual = rep.aux_residual.max(ra.abs()).max(rb.abs());
        rep.box_violation = rep.box_violation.max(out_of_box(aux[j].0)).max(out_of_box(aux[j].1));
    }
    rep
}

#[derive(Clone, Debug)]
pub struct ReferenceSolution<T> {
    /// Dense values on original nodes.
    pub x: Vec<T>,
    /// `(x_a, x_b)` per gadget.
    pub aux: Vec<(T, T)>,
    pub sweeps: usize,
    /// Objective after each sweep.
    pub objective_history: Vec<T>,
}

/// Cyclic exact coordinate minimization of the localized objective over original and
/// auxiliary coordinates, run until [`kkt_check`] passes at `1e-10` including slackness.
pub fn reference_qp_solver<T: Scalar>(
    h: &Hypergraph<T>,
    seeds: &NodeSet,
    cfg: &DiffusionConfig<T>,
) -> Result<ReferenceSolution<T>> {
    reference_solver_with(h, seeds, cfg, T::lit(REFERENCE_TOL), REFERENCE_MAX_SWEEPS)
}

#[allow(clippy::needless_range_loop)]
pub fn reference_solver_with<T: Scalar>(
    h: &Hypergraph<T>,
    seeds: &NodeSet,
    cfg: &DiffusionConfig<T>,
    tol: T,
    max_sweeps: usize,
) -> Result<ReferenceSolution<T>> {
    cfg.validate()?;
    let n = h.num_nodes();
    let m = h.num_gadgets();
    if n + 2 * m > REFERENCE_MAX_VARS {
        return Err(Error::TooLarge(format!("{} variables, at most {REFERENCE_MAX_VARS} supported", n + 2 * m)));
    }
    if seeds.iter().any(|s| s >= n) {
        return Err(Error::InvalidSeeds("seed out of range".into()));
    }
    let p = cfg.p;
    let linear = p == T::lit(2.0);
    let mut x = vec![T::zero(); n];
    let mut aux = vec![(T::zero(), T::zero()); m];
    let mut history = Vec::new();
    let mut breaks = Vec::new();
    for sweep in 1..=max_sweeps {
        for i in 0..n {
            let d = h.degree(i);
            if d == T::zero() {
                continue;
            }
            let ind = if seeds.contains(i) { T::one() } else { T::zero() };
            let grad = |y: T| {
                let mut flow = T::zero();
                for j in h.node_gadgets(i) {
                    let (xa, xb) = aux[j];
                    flow = flow + h.gadget(j).c * (slope(plus(xb - y), p) - slope(plus(y - xa), p));
                }
                cfg.kappa * d - flow / cfg.gamma - d * slope(ind - y, p)
            };
            breaks.clear();
            breaks.extend(h.node_gadgets(i).flat_map(|j| [aux[j].0, aux[j].1]));
            x[i] = root_on_pieces(grad, &mut breaks, linear);
        }
        for (j, pair) in aux.iter_mut().enumerate() {
            let g = h.gadget(j);
            let members = h.gadget_members(j);
            let xb = pair.1;
            let grad_a =
                |y: T| g.delta * slope(plus(y - xb), p) - members.iter().map(|&v| slope(plus(x[v] - y), p)).sum::<T>();
            breaks.clear();
            breaks.push(xb);
            breaks.extend(members.iter().map(|&v| x[v]));
            let xa = root_on_pieces(grad_a, &mut breaks, linear);
            let grad_b =
                |y: T| members.iter().map(|&v| slope(plus(y - x[v]), p)).sum::<T>() - g.delta * slope(plus(xa - y), p);
            breaks.clear();
            breaks.push(xa);
            breaks.extend(members.iter().map(|&v| x[v]));
            let xb = root_on_pieces(grad_b, &mut breaks, linear);
            *pair = (xa, xb);
        }
        history.push(objective(h, seeds, cfg, &x, &aux));
        if kkt_check(h, seeds, cfg, &x, Some(&aux)).optimal(tol) {
            return Ok(ReferenceSolution { x, aux, sweeps: sweep, objective_history: history });
        }
    }
    Err(Error::IterationCap(max_sweeps))
}
