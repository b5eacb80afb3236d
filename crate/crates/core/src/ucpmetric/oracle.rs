//! Brute-force evaluation of the distance on small systems.
//!
//! The unit coordinate is eliminated (maps agree on the unit, and `‖f + t‖ ≤ 1` is solvable in
//! `t` iff the spread of `f` is at most 2). The remaining objective and constraint are
//! positively homogeneous and even, so the sup is the largest ratio `obj(v)/g(v)` over the
//! faces `v_a = 1` of the cube, sampled on a grid.

use super::maps::UcpMap;
use super::system::{Element, Triple};
use super::MetricConfig;
use crate::error::{invalid, Error, Result};
use crate::harmonic::eval_grid;
use crate::linalg::{eigh, CMat, C64, I};
use crate::opsys::{commutator, DiracTruncation};

const MAX_REDUCED_DIM: usize = 6;

/// Ascending eigenvalues of a Hermitian matrix, closed form up to size 3.
fn hermitian_eigs(a: &CMat) -> Vec<f64> {
    match a.rows() {
        1 => vec![a[(0, 0)].re],
        2 => {
            let (p, q) = (a[(0, 0)].re, a[(1, 1)].re);
            let h = 0.5 * (p - q);
            let r = (h * h + a[(0, 1)].norm_sqr()).sqrt();
            let m = 0.5 * (p + q);
            vec![m - r, m + r]
        }
        3 => {
            let d = [a[(0, 0)].re, a[(1, 1)].re, a[(2, 2)].re];
            let (b01, b02, b12) = (a[(0, 1)], a[(0, 2)], a[(1, 2)]);
            let p1 = b01.norm_sqr() + b02.norm_sqr() + b12.norm_sqr();
            let q = (d[0] + d[1] + d[2]) / 3.0;
            let e = [d[0] - q, d[1] - q, d[2] - q];
            let p2 = e.iter().map(|x| x * x).sum::<f64>() + 2.0 * p1;
            if p2 <= 1e-300 {
                return vec![q; 3];
            }
            let p = (p2 / 6.0).sqrt();
            // det(A - qI) for a Hermitian matrix, divided by p^3.
            let det = e[0] * e[1] * e[2] + 2.0 * (b01 * b12 * b02.conj()).re
                - e[0] * b12.norm_sqr()
                - e[1] * b02.norm_sqr()
                - e[2] * b01.norm_sqr();
            let r = (det / (2.0 * p * p * p)).clamp(-1.0, 1.0);
            let phi = r.acos() / 3.0;
            let hi = q + 2.0 * p * phi.cos();
            let lo = q + 2.0 * p * (phi + 2.0 * std::f64::consts::PI / 3.0).cos();
            vec![lo, 3.0 * q - hi - lo, hi]
        }
        _ => eigh(a).values,
    }
}

enum Constraint {
    /// Hermitian matrices `X_i` and `i[D, X_i]`.
    Matrices { norm: Vec<CMat>, lip: Vec<CMat> },
    /// Grid values and finite differences.
    Samples { norm: Vec<Vec<f64>>, lip: Vec<Vec<f64>> },
}

fn combine(mats: &[CMat], v: &[f64]) -> CMat {
    let mut out = CMat::zeros(mats[0].rows(), mats[0].cols());
    for (m, &x) in mats.iter().zip(v) {
        out.add_scaled(m, C64::new(x, 0.0));
    }
    out
}

fn combine_vec(rows: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; rows[0].len()];
    for (r, &x) in rows.iter().zip(v) {
        out.iter_mut().zip(r).for_each(|(o, a)| *o += x * a);
    }
    out
}

impl Constraint {
    fn gauge(&self, v: &[f64], lipschitz: bool) -> f64 {
        match self {
            Constraint::Matrices { norm, lip } => {
                let e = hermitian_eigs(&combine(norm, v));
                let spread = 0.5 * (e[e.len() - 1] - e[0]);
                if !lipschitz {
                    return spread;
                }
                let l = hermitian_eigs(&combine(lip, v));
                spread.max(l[0].abs().max(l[l.len() - 1].abs()))
            }
            Constraint::Samples { norm, lip } => {
                let x = combine_vec(norm, v);
                let (lo, hi) = x.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &y| (a.min(y), b.max(y)));
                let spread = 0.5 * (hi - lo);
                if !lipschitz {
                    return spread;
                }
                spread.max(combine_vec(lip, v).iter().map(|y| y.abs()).fold(0.0, f64::max))
            }
        }
    }
}

/// Grid-search value of the distance between `phi` and `psi` on `triple`, for systems whose
/// coefficient space has dimension at most 6 once the unit is removed.
pub fn distance_oracle(phi: &UcpMap, psi: &UcpMap, cfg: &MetricConfig, triple: &Triple) -> Result<f64> {
    cfg.validate()?;
    if !triple.self_adjoint() || triple.unit_param() != Some(0) {
        return Err(invalid("oracle needs a self-adjoint system with the unit as first coordinate"));
    }
    let n = triple.nparams();
    if n < 2 || n - 1 > MAX_REDUCED_DIM {
        return Err(invalid(format!("oracle limited to {MAX_REDUCED_DIM} free coordinates, system has {}", n.saturating_sub(1))));
    }
    let kp = cfg.kp();
    let basis: Vec<Element> = (1..n)
        .map(|i| {
            let mut e = vec![0.0; n];
            e[i] = 1.0;
            triple.element(&e)
        })
        .collect();
    let mut funcs = vec![vec![0.0; n - 1]; kp.len()];
    for (i, x) in basis.iter().enumerate() {
        let d = phi.evaluate(x)?.sub(&psi.evaluate(x)?);
        for (p, k) in kp.iter().enumerate() {
            funcs[p][i] = 0.5f64.powi(p as i32 + 1) * d.quad_form(k).re;
        }
    }
    let constraint = match &basis[0] {
        Element::Op(_) => {
            let set = triple.index_set().expect("operator systems carry an index set").clone();
            let dirac = DiracTruncation::new(set)?;
            let mut norm = Vec::new();
            let mut lip = Vec::new();
            for x in &basis {
                let Element::Op(t) = x else { unreachable!() };
                norm.push(t.matrix());
                lip.push(commutator(&dirac, t)?.scale(I));
            }
            Constraint::Matrices { norm, lip }
        }
        Element::Poly(_) => {
            let m = triple.grid_nodes().ok_or_else(|| invalid("oracle needs a circle grid"))?;
            let h = 2.0 * std::f64::consts::PI / m as f64;
            let mut norm = Vec::new();
            let mut lip = Vec::new();
            for x in &basis {
                let Element::Poly(f) = x else { unreachable!() };
                let v: Vec<f64> = eval_grid(f, m, 0.0).iter().map(|z| z.re).collect();
                lip.push((0..m).map(|j| (v[(j + 1) % m] - v[j]) / h).collect());
                norm.push(v);
            }
            Constraint::Samples { norm, lip }
        }
        Element::Grid(_) => return Err(invalid("oracle does not handle grid systems")),
    };
    let r = n - 1;
    let steps = (2.0 / cfg.oracle_step).round() as usize;
    let coord = |j: usize| -1.0 + 2.0 * j as f64 / steps as f64;
    let total = (steps + 1).pow(r as u32 - 1);
    let mut best = 0.0f64;
    let mut v = vec![0.0; r];
    for face in 0..r {
        for idx in 0..total {
            let mut rest = idx;
            for (a, slot) in v.iter_mut().enumerate() {
                if a == face {
                    *slot = 1.0;
                } else {
                    *slot = coord(rest % (steps + 1));
                    rest /= steps + 1;
                }
            }
            let obj: f64 = funcs.iter().map(|c| c.iter().zip(&v).map(|(a, b)| a * b).sum::<f64>().abs()).sum();
            if obj <= best * 1e-12 {
                continue;
            }
            let g = constraint.gauge(&v, cfg.lipschitz);
            if g > 0.0 {
                best = best.max(obj / g);
            } else if obj > 0.0 {
                return Err(Error::NonFinite("oracle: unbounded objective"));
            }
        }
    }
    Ok(best)
}
