//! Primal-dual solver for `sup ⟨c, u⟩` over a parametrized unit ball, with certified bounds.
//!
//! Iterates are Chambolle-Pock steps with adaptive restarts and primal-weight updates. The
//! lower bound rescales a primal iterate into the feasible set; the upper bound is the dual
//! objective of a dual iterate whose residual is absorbed by the orthonormal norm block.

use std::collections::BTreeMap;

use super::system::{BlockKind, BlockVal, Triple};
use crate::linalg::{dilation, eigh, eigh_warm, nuclear_norm, operator_norm, CMat, C64};
use microlp::{ComparisonOp, LinearExpr, OptimizationDirection, Problem};

const CHECK_EVERY: usize = 32;
const POWER_ITERS: usize = 200;
const MAX_LP_PARAMS: usize = 2048;
const MAX_ACTIVE_DUAL: usize = 128;

/// Diagonal change of variables `u = diag(scale)·v` equilibrating the columns of the stacked
/// blocks, together with the operator norm of each rescaled block.
#[derive(Clone, Debug)]
pub(crate) struct Scaling {
    pub scale: Vec<f64>,
    pub norms: Vec<f64>,
}

impl Scaling {
    pub fn new(sys: &Triple) -> Self {
        let n = sys.nparams();
        let nb = sys.blocks().len();
        let scale: Vec<f64> = (0..n)
            .map(|i| {
                let mut e = vec![0.0; n];
                e[i] = 1.0;
                let sq: f64 = (0..nb).map(|j| sys.apply(j, &e).norm_sq()).sum();
                if sq > 0.0 {
                    1.0 / sq.sqrt()
                } else {
                    1.0
                }
            })
            .collect();
        let norms = (0..nb).map(|j| scaled_norm(sys, j, &scale)).collect();
        Self { scale, norms }
    }
}

fn scaled_norm(sys: &Triple, j: usize, scale: &[f64]) -> f64 {
    let n = scale.len();
    let mut v: Vec<f64> = (0..n).map(|i| 1.0 + ((i * 7919) % 13) as f64 / 13.0).collect();
    let mut lambda = 0.0;
    for _ in 0..POWER_ITERS {
        let nv = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.iter_mut().zip(scale).for_each(|(x, s)| *x *= s / nv);
        let mut w = vec![0.0; n];
        sys.apply_t(j, &sys.apply(j, &v), &mut w);
        w.iter_mut().zip(scale).for_each(|(x, s)| *x *= s);
        lambda = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if lambda == 0.0 {
            return 1.0;
        }
        v = w;
    }
    lambda.sqrt() * 1.01
}

/// Dense rows of a system whose blocks are all scalar groups, for direct LP solves.
#[derive(Clone, Debug)]
pub(crate) struct LpForm {
    /// Rows of each block.
    rows: Vec<Vec<Vec<f64>>>,
}

impl LpForm {
    pub fn new(sys: &Triple) -> Option<Self> {
        let n = sys.nparams();
        if n > MAX_LP_PARAMS || !sys.blocks().iter().all(|k| matches!(k, BlockKind::Groups { size: 1, .. })) {
            return None;
        }
        let rows = (0..sys.blocks().len())
            .map(|j| {
                let cols: Vec<Vec<f64>> = (0..n)
                    .map(|i| {
                        let mut e = vec![0.0; n];
                        e[i] = 1.0;
                        match sys.apply(j, &e) {
                            BlockVal::Vec(v) => v,
                            BlockVal::Mat(_) => unreachable!(),
                        }
                    })
                    .collect();
                (0..cols[0].len()).map(|r| cols.iter().map(|c| c[r]).collect()).collect()
            })
            .collect();
        Some(Self { rows })
    }

    fn all_rows(&self) -> impl Iterator<Item = &Vec<f64>> {
        self.rows.iter().flatten()
    }

    /// Primal optimum by constraint generation, with the working set of rows that certify it.
    fn primal(&self, c: &[f64]) -> Option<(Vec<f64>, Vec<usize>)> {
        let total = self.all_rows().count();
        let stride = (total / (4 * c.len()).max(1)).max(1);
        let mut work: Vec<usize> = (0..total).step_by(stride).collect();
        loop {
            let mut lp = Problem::new(OptimizationDirection::Maximize);
            let vars: Vec<_> = c.iter().map(|&ci| lp.add_var(ci, (f64::NEG_INFINITY, f64::INFINITY))).collect();
            let rows: Vec<&Vec<f64>> = self.all_rows().collect();
            for &r in &work {
                let expr: Vec<_> = vars.iter().zip(rows[r]).filter(|(_, a)| **a != 0.0).map(|(v, a)| (*v, *a)).collect();
                lp.add_constraint(expr.as_slice(), ComparisonOp::Le, 1.0);
                lp.add_constraint(expr.as_slice(), ComparisonOp::Ge, -1.0);
            }
            let sol = lp.solve().ok()?.into_solution().ok()?;
            let u: Vec<f64> = vars.iter().map(|&v| sol.var_value(v)).collect();
            let before = work.len();
            for (r, row) in rows.iter().enumerate() {
                if dot(row, &u).abs() > 1.0 + 1e-9 && !work.contains(&r) {
                    work.push(r);
                }
            }
            if work.len() == before {
                work.sort_unstable();
                return Some((u, work));
            }
        }
    }

    /// Minimum-norm dual supported on the rows active at `u`.
    fn active_dual(&self, c: &[f64], u: &[f64], work: &[usize]) -> Vec<BlockVal> {
        let rows: Vec<&Vec<f64>> = self.all_rows().collect();
        let n = c.len();
        let active: Vec<usize> = work.iter().copied().filter(|&r| dot(rows[r], u).abs() >= 1.0 - 1e-7).collect();
        let gram = CMat::from_fn(n, n, |a, b| C64::new(active.iter().map(|&r| rows[r][a] * rows[r][b]).sum(), 0.0));
        let e = eigh(&gram);
        let cutoff = 1e-12 * e.values.iter().fold(0.0f64, |m, l| m.max(l.abs()));
        let mut x = vec![0.0; n];
        for (k, &l) in e.values.iter().enumerate() {
            if l <= cutoff {
                continue;
            }
            let proj: f64 = (0..n).map(|i| e.vectors[(i, k)].re * c[i]).sum::<f64>() / l;
            x.iter_mut().enumerate().for_each(|(i, xi)| *xi += proj * e.vectors[(i, k)].re);
        }
        let mut flat = vec![0.0; rows.len()];
        for &r in &active {
            flat[r] = dot(rows[r], &x);
        }
        self.split(flat)
    }

    fn split(&self, flat: Vec<f64>) -> Vec<BlockVal> {
        let mut out = Vec::with_capacity(self.rows.len());
        let mut start = 0;
        for b in &self.rows {
            out.push(BlockVal::Vec(flat[start..start + b.len()].to_vec()));
            start += b.len();
        }
        out
    }

    /// Dual optimum supported on the rows active at `u`, solved separately on each connected
    /// component of the parameters linked by active rows with more than one nonzero.
    fn component_dual(&self, c: &[f64], u: &[f64], work: &[usize]) -> Option<Vec<BlockVal>> {
        let rows: Vec<&Vec<f64>> = self.all_rows().collect();
        let n = c.len();
        let active: Vec<(usize, Vec<(usize, f64)>)> = work
            .iter()
            .filter(|&&r| dot(rows[r], u).abs() >= 1.0 - 1e-7)
            .map(|&r| (r, rows[r].iter().enumerate().filter(|(_, a)| **a != 0.0).map(|(i, a)| (i, *a)).collect()))
            .collect();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], mut i: usize) -> usize {
            while p[i] != i {
                p[i] = p[p[i]];
                i = p[i];
            }
            i
        }
        for (_, nz) in &active {
            for w in nz.windows(2) {
                let (a, b) = (find(&mut parent, w[0].0), find(&mut parent, w[1].0));
                parent[a] = b;
            }
        }
        let mut comps: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (k, (_, nz)) in active.iter().enumerate() {
            if let Some(&(i, _)) = nz.first() {
                comps.entry(find(&mut parent, i)).or_default().push(k);
            }
        }
        let mut flat = vec![0.0; rows.len()];
        for members in comps.values() {
            let mut lp = Problem::new(OptimizationDirection::Minimize);
            let vars: Vec<_> = members.iter().map(|_| (lp.add_var(1.0, (0.0, f64::INFINITY)), lp.add_var(1.0, (0.0, f64::INFINITY)))).collect();
            let mut eqs: BTreeMap<usize, LinearExpr> = BTreeMap::new();
            for (&k, &(p, q)) in members.iter().zip(&vars) {
                for &(i, a) in &active[k].1 {
                    let e = eqs.entry(i).or_insert_with(LinearExpr::empty);
                    e.add(p, a);
                    e.add(q, -a);
                }
            }
            for (i, e) in eqs {
                lp.add_constraint(e, ComparisonOp::Eq, c[i]);
            }
            let sol = lp.solve().ok()?.into_solution().ok()?;
            for (&k, &(p, q)) in members.iter().zip(&vars) {
                flat[active[k].0] = sol.var_value(p) - sol.var_value(q);
            }
        }
        Some(self.split(flat))
    }

    /// Dual optimum supported on the given rows.
    fn dual(&self, c: &[f64], work: &[usize]) -> Option<Vec<BlockVal>> {
        let rows: Vec<&Vec<f64>> = self.all_rows().collect();
        let mut lp = Problem::new(OptimizationDirection::Minimize);
        let vars: Vec<_> = work.iter().map(|_| (lp.add_var(1.0, (0.0, f64::INFINITY)), lp.add_var(1.0, (0.0, f64::INFINITY)))).collect();
        for (i, &ci) in c.iter().enumerate() {
            let mut expr = LinearExpr::empty();
            for (&r, &(p, q)) in work.iter().zip(&vars) {
                let a = rows[r][i];
                if a != 0.0 {
                    expr.add(p, a);
                    expr.add(q, -a);
                }
            }
            lp.add_constraint(expr, ComparisonOp::Eq, ci);
        }
        let sol = lp.solve().ok()?.into_solution().ok()?;
        let mut flat = vec![0.0; rows.len()];
        for (&r, &(p, q)) in work.iter().zip(&vars) {
            flat[r] = sol.var_value(p) - sol.var_value(q);
        }
        Some(self.split(flat))
    }
}

fn soft(l: f64, t: f64) -> f64 {
    l.signum() * (l.abs() - t).max(0.0)
}

/// `v − proj_{t·B}(v)` for the unit ball `B` of the block.
fn shrink(kind: BlockKind, y: &mut BlockVal, t: f64, warm: &mut Option<CMat>) {
    match (kind, y) {
        (BlockKind::SpecHerm { .. }, BlockVal::Mat(m)) => {
            let e = match warm.as_ref() {
                Some(v) => eigh_warm(m, v),
                None => eigh(m),
            };
            *m = e.apply(|l| soft(l, t));
            *warm = Some(e.vectors);
        }
        (BlockKind::SpecGeneral { n }, BlockVal::Mat(m)) => {
            let d = dilation(m);
            let e = match warm.as_ref() {
                Some(v) => eigh_warm(&d, v),
                None => eigh(&d),
            };
            *m = e.apply(|l| soft(l, t)).block(0, n, n, n);
            *warm = Some(e.vectors);
        }
        (BlockKind::Groups { size, .. }, BlockVal::Vec(v)) => {
            for g in v.chunks_mut(size) {
                let n = g.iter().map(|x| x * x).sum::<f64>().sqrt();
                let f = if n <= t { 0.0 } else { 1.0 - t / n };
                g.iter_mut().for_each(|x| *x *= f);
            }
        }
        _ => panic!("block shape mismatch"),
    }
}

pub(crate) fn primal_norm(kind: BlockKind, x: &BlockVal) -> f64 {
    match (kind, x) {
        (BlockKind::SpecHerm { .. }, BlockVal::Mat(m)) => eigh(m).spectral_radius(),
        (BlockKind::SpecGeneral { .. }, BlockVal::Mat(m)) => operator_norm(m).unwrap_or(f64::INFINITY),
        (BlockKind::Groups { size, .. }, BlockVal::Vec(v)) => {
            v.chunks(size).map(|g| g.iter().map(|x| x * x).sum::<f64>().sqrt()).fold(0.0, f64::max)
        }
        _ => panic!("block shape mismatch"),
    }
}

fn dual_norm(kind: BlockKind, y: &BlockVal) -> f64 {
    match (kind, y) {
        (BlockKind::SpecHerm { .. }, BlockVal::Mat(m)) => eigh(m).values.iter().map(|l| l.abs()).sum(),
        (BlockKind::SpecGeneral { .. }, BlockVal::Mat(m)) => nuclear_norm(m),
        (BlockKind::Groups { size, .. }, BlockVal::Vec(v)) => {
            v.chunks(size).map(|g| g.iter().map(|x| x * x).sum::<f64>().sqrt()).sum()
        }
        _ => panic!("block shape mismatch"),
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Primal-dual pair, used to warm-start related problems.
#[derive(Clone, Debug)]
pub(crate) struct Iterate {
    pub u: Vec<f64>,
    pub y: Vec<BlockVal>,
}

#[derive(Clone, Debug)]
pub(crate) struct LinSolve {
    pub lower: f64,
    pub upper: f64,
    /// Feasible point attaining `lower`.
    pub point: Vec<f64>,
    /// Dual point attaining `upper` (before residual correction).
    pub dual: Vec<BlockVal>,
    pub last: Iterate,
    pub iterations: usize,
    pub converged: bool,
}

/// `sup ⟨c, u⟩` subject to `‖A_j u‖ ≤ 1` for every block of `sys`.
pub(crate) struct LinearProblem<'a> {
    pub sys: &'a Triple,
    pub scaling: &'a Scaling,
    pub lp: Option<&'a LpForm>,
    pub tol: f64,
    pub max_iter: usize,
}

impl LinearProblem<'_> {
    fn at(&self, y: &[BlockVal]) -> Vec<f64> {
        let mut out = vec![0.0; self.sys.nparams()];
        for (j, yj) in y.iter().enumerate() {
            self.sys.apply_t(j, yj, &mut out);
        }
        out
    }

    pub fn zero_iterate(&self) -> Iterate {
        Iterate { u: vec![0.0; self.sys.nparams()], y: self.sys.blocks().iter().map(|&k| BlockVal::zeros(k)).collect() }
    }

    /// Smallest `t` with `u/t` feasible.
    pub fn gauge(&self, u: &[f64]) -> f64 {
        (0..self.sys.blocks().len()).map(|j| primal_norm(self.sys.blocks()[j], &self.sys.apply(j, u))).fold(0.0, f64::max)
    }

    /// Certified lower bound from a primal point, with the feasible point attaining it.
    pub fn lower(&self, c: &[f64], u: &[f64]) -> (f64, Vec<f64>) {
        let v = dot(c, u);
        let g = self.gauge(u);
        if v <= 0.0 || g <= 0.0 || !g.is_finite() {
            return (0.0, vec![0.0; u.len()]);
        }
        (v / g, u.iter().map(|x| x / g).collect())
    }

    /// Certified upper bound from any dual point.
    pub fn upper(&self, c: &[f64], y: &[BlockVal]) -> f64 {
        let aty = self.at(y);
        let r: Vec<f64> = c.iter().zip(&aty).map(|(a, b)| a - b).collect();
        let mut y0 = y[0].clone();
        y0.axpy(1.0, &self.sys.apply(0, &r));
        let blocks = self.sys.blocks();
        dual_norm(blocks[0], &y0) + y.iter().enumerate().skip(1).map(|(j, yj)| dual_norm(blocks[j], yj)).sum::<f64>()
    }

    fn solve_direct(&self, c: &[f64]) -> Option<LinSolve> {
        let form = self.lp?;
        let (u, work) = form.primal(c)?;
        let (lower, point) = self.lower(c, &u);
        let mut best: Option<(f64, Vec<BlockVal>)> = None;
        let mut consider = |d: Vec<BlockVal>| {
            let v = self.upper(c, &d);
            if best.as_ref().is_none_or(|(b, _)| v < *b) {
                best = Some((v, d));
            }
            v - lower <= self.tol
        };
        let found = (c.len() <= MAX_ACTIVE_DUAL && consider(form.active_dual(c, &u, &work)))
            || form.component_dual(c, &u, &work).is_some_and(&mut consider)
            || form.dual(c, &work).is_some_and(&mut consider);
        if !found {
            return None;
        }
        let (upper, dual) = best?;
        let last = Iterate { u: point.clone(), y: dual.clone() };
        Some(LinSolve { lower, upper, point, dual, last, iterations: 0, converged: true })
    }

    /// Runs until the certified gap is below `tol`, or the upper bound drops below
    /// `floor + tol/2`.
    pub fn solve(&self, c: &[f64], start: Option<Iterate>, floor: f64) -> LinSolve {
        if let Some(direct) = self.solve_direct(c) {
            return direct;
        }
        let blocks = self.sys.blocks();
        let nb = blocks.len();
        let eta = 0.95 / (nb as f64).sqrt();
        let mut it = start.unwrap_or_else(|| self.zero_iterate());
        let mut omega = c.iter().zip(&self.scaling.scale).map(|(c, s)| (c * s).powi(2)).sum::<f64>().sqrt().max(1e-12);
        let mut aty = self.at(&it.y);
        let mut warm: Vec<Option<CMat>> = vec![None; nb];
        let mut sum_u = vec![0.0; it.u.len()];
        let mut sum_y: Vec<BlockVal> = blocks.iter().map(|&k| BlockVal::zeros(k)).collect();
        let mut navg = 0usize;
        let mut anchor = it.clone();
        let mut anchor_gap = f64::INFINITY;
        let mut prev_gap = f64::INFINITY;
        let mut since = 0usize;

        let (mut best_l, mut best_point) = self.lower(c, &it.u);
        let mut best_u = self.upper(c, &it.y);
        let mut best_dual = it.y.clone();
        let mut iterations = 0;
        let done = |l: f64, u: f64| u - l <= self.tol || u <= floor + 0.5 * self.tol;
        let mut converged = done(best_l, best_u);

        while !converged && iterations < self.max_iter {
            iterations += 1;
            since += 1;
            let tau = eta / omega;
            let sigma = eta * omega;
            let u_new: Vec<f64> = it
                .u
                .iter()
                .zip(c)
                .zip(&aty)
                .zip(&self.scaling.scale)
                .map(|(((u, c), a), s)| u + tau * s * s * (c - a))
                .collect();
            let ubar: Vec<f64> = u_new.iter().zip(&it.u).map(|(n, o)| 2.0 * n - o).collect();
            for j in 0..nb {
                let s = sigma / (self.scaling.norms[j] * self.scaling.norms[j]);
                let ay = self.sys.apply(j, &ubar);
                it.y[j].axpy(s, &ay);
                shrink(blocks[j], &mut it.y[j], s, &mut warm[j]);
            }
            it.u = u_new;
            aty = self.at(&it.y);
            sum_u.iter_mut().zip(&it.u).for_each(|(s, u)| *s += u);
            sum_y.iter_mut().zip(&it.y).for_each(|(s, y)| s.axpy(1.0, y));
            navg += 1;

            if iterations % CHECK_EVERY != 0 {
                continue;
            }
            let avg = Iterate {
                u: sum_u.iter().map(|s| s / navg as f64).collect(),
                y: sum_y.iter().map(|s| s.scaled(1.0 / navg as f64)).collect(),
            };
            let mut gaps = [0.0; 2];
            for (g, cand) in gaps.iter_mut().zip([&it, &avg]) {
                let (l, p) = self.lower(c, &cand.u);
                let up = self.upper(c, &cand.y);
                if l > best_l {
                    best_l = l;
                    best_point = p;
                }
                if up < best_u {
                    best_u = up;
                    best_dual = cand.y.clone();
                }
                *g = up - l;
            }
            if done(best_l, best_u) {
                converged = true;
                break;
            }
            let (gap, use_avg) = if gaps[1] < gaps[0] { (gaps[1], true) } else { (gaps[0], false) };
            let restart = gap <= 0.2 * anchor_gap
                || (gap <= 0.8 * anchor_gap && gap > prev_gap)
                || since as f64 >= 0.36 * iterations as f64 && since >= 4 * CHECK_EVERY;
            prev_gap = gap;
            if restart {
                if use_avg {
                    it = avg;
                }
                let du = it
                    .u
                    .iter()
                    .zip(&anchor.u)
                    .zip(&self.scaling.scale)
                    .map(|((a, b), s)| ((a - b) / s).powi(2))
                    .sum::<f64>()
                    .sqrt();
                let dy = it
                    .y
                    .iter()
                    .zip(&anchor.y)
                    .zip(&self.scaling.norms)
                    .map(|((a, b), n)| {
                        let mut d = a.clone();
                        d.axpy(-1.0, b);
                        d.norm_sq() * n * n
                    })
                    .sum::<f64>()
                    .sqrt();
                if du > 1e-10 && dy > 1e-10 {
                    omega = (0.5 * (dy / du).ln() + 0.5 * omega.ln()).exp();
                }
                aty = self.at(&it.y);
                anchor = it.clone();
                anchor_gap = gap;
                prev_gap = f64::INFINITY;
                since = 0;
                sum_u.iter_mut().for_each(|s| *s = 0.0);
                sum_y = blocks.iter().map(|&k| BlockVal::zeros(k)).collect();
                navg = 0;
            }
        }
        LinSolve { lower: best_l, upper: best_u, point: best_point, dual: best_dual, last: it, iterations, converged }
    }
}
