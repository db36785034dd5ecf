//! Adaptive product rule on a rectangle of a two-parameter chart.
//!
//! Every leaf is also integrated as two halves in `u` and as two halves in
//! `v`. The changes against its own rule measure the error in each
//! direction, and a leaf is split along the direction that dominates (or
//! both). Leaves whose parameter rectangle has a singular hint at an outer
//! corner use a Duffy split with power grading toward that corner.

use std::num::NonZeroUsize;

use gauss_quad::GaussLegendre;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::field::FieldError;

/// Exact offsets of a corner-cell node from its corner: `u₁ − u` and
/// `v − v_c`, plus `v_c` itself.
#[derive(Clone, Copy, Debug)]
pub(crate) struct CornerNode {
    pub du: f64,
    pub dv: f64,
    pub v_corner: f64,
}

pub(crate) type ChartFn<'a> =
    dyn Fn(f64, f64, Option<CornerNode>, &mut [Complex64]) -> Result<(), FieldError> + Sync + 'a;

#[derive(Clone, Copy, Debug, PartialEq)]
enum Corner {
    None,
    /// singular at `(u1, v0)`
    Low,
    /// singular at `(u1, v1)`
    High,
}

#[derive(Clone, Copy, Debug)]
struct Cell {
    u0: f64,
    u1: f64,
    v0: f64,
    v1: f64,
    corner: Corner,
}

impl Cell {
    fn with(
        &self,
        u0: f64,
        u1: f64,
        v0: f64,
        v1: f64,
        outer_u: bool,
        side: Option<Corner>,
    ) -> Cell {
        // a child keeps the corner when it still touches it
        let corner = match (self.corner, side) {
            (Corner::None, _) => Corner::None,
            (c, None) if outer_u => c,
            (c, Some(s)) if outer_u && c == s => c,
            _ => Corner::None,
        };
        Cell {
            u0,
            u1,
            v0,
            v1,
            corner,
        }
    }

    fn mid(&self) -> (f64, f64) {
        (0.5 * (self.u0 + self.u1), 0.5 * (self.v0 + self.v1))
    }

    /// Halves in `u`, inner half first.
    fn halves_u(&self) -> [Cell; 2] {
        let (um, _) = self.mid();
        [
            self.with(self.u0, um, self.v0, self.v1, false, None),
            self.with(um, self.u1, self.v0, self.v1, true, None),
        ]
    }

    /// Halves in `v`, lower half first.
    fn halves_v(&self) -> [Cell; 2] {
        let (_, vm) = self.mid();
        [
            self.with(self.u0, self.u1, self.v0, vm, true, Some(Corner::Low)),
            self.with(self.u0, self.u1, vm, self.v1, true, Some(Corner::High)),
        ]
    }

    fn quarters(&self) -> [Cell; 4] {
        let (um, vm) = self.mid();
        [
            self.with(self.u0, um, self.v0, vm, false, None),
            self.with(self.u0, um, vm, self.v1, false, None),
            self.with(um, self.u1, self.v0, vm, true, Some(Corner::Low)),
            self.with(um, self.u1, vm, self.v1, true, Some(Corner::High)),
        ]
    }
}

pub(crate) struct Region {
    pub u_breaks: Vec<f64>,
    pub v_breaks: Vec<f64>,
    /// Parameter points on the outer edge `u = u_max` that get graded corners.
    pub corners: Vec<f64>,
    /// Period in `v`, so a corner at `v = 0` also matches `v = period`.
    pub v_period: Option<f64>,
}

pub(crate) struct Settings {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_subdivisions: usize,
    pub order: usize,
    pub grading: f64,
}

pub(crate) struct Outcome {
    pub values: Vec<Complex64>,
    pub errors: Vec<f64>,
    pub cells: usize,
    pub evaluations: usize,
    pub converged: bool,
}

struct Leaf {
    cell: Cell,
    values: Vec<Complex64>,
    errors: Vec<f64>,
    /// Change from halving in `u`, and in `v`.
    change_u: Vec<f64>,
    change_v: Vec<f64>,
    /// Two halves in `u` then two in `v`; the four quarters for a graded
    /// corner cell.
    pieces: Vec<(Cell, Vec<Complex64>)>,
    evaluations: usize,
}

#[derive(Clone, Copy, PartialEq)]
enum Split {
    U,
    V,
    Both,
}

struct Rules {
    /// Nodes and weights mapped to `[0, 1]`.
    plain: Vec<(f64, f64)>,
    corner: Vec<(f64, f64)>,
    grading: f64,
}

fn unit_rule(order: usize) -> Vec<(f64, f64)> {
    let gl = GaussLegendre::new(NonZeroUsize::new(order).expect("order ≥ 1"));
    gl.as_node_weight_pairs()
        .iter()
        .map(|&(x, w)| (0.5 * (x + 1.0), 0.5 * w))
        .collect()
}

struct Engine<'a> {
    f: &'a ChartFn<'a>,
    width: usize,
    rules: Rules,
}

impl Engine<'_> {
    fn rule(&self, cell: &Cell) -> Result<(Vec<Complex64>, usize), FieldError> {
        let mut acc = vec![Complex64::new(0.0, 0.0); self.width];
        let mut buf = vec![Complex64::new(0.0, 0.0); self.width];
        let du = cell.u1 - cell.u0;
        let dv = cell.v1 - cell.v0;
        let mut n = 0;
        let mut add = |u: f64,
                       v: f64,
                       near: Option<CornerNode>,
                       w: f64,
                       acc: &mut [Complex64]|
         -> Result<(), FieldError> {
            (self.f)(u, v, near, &mut buf)?;
            for (a, b) in acc.iter_mut().zip(&buf) {
                *a += b * w;
            }
            n += 1;
            Ok(())
        };
        match cell.corner {
            Corner::None => {
                for &(a, wa) in &self.rules.plain {
                    for &(b, wb) in &self.rules.plain {
                        add(
                            cell.u0 + a * du,
                            cell.v0 + b * dv,
                            None,
                            wa * wb * du * dv,
                            &mut acc,
                        )?;
                    }
                }
            }
            corner => {
                let g = self.rules.grading;
                for &(sigma, ws) in &self.rules.corner {
                    let s = sigma.powf(g);
                    let jac = s * g * sigma.powf(g - 1.0) * ws * du * dv;
                    for &(t, wt) in &self.rules.corner {
                        // (a, b) = (s, st) and (st, s): distances from the corner
                        for (a, b) in [(s, s * t), (s * t, s)] {
                            let (off_v, v_corner) = match corner {
                                Corner::Low => (b * dv, cell.v0),
                                _ => (-b * dv, cell.v1),
                            };
                            let near = CornerNode {
                                du: a * du,
                                dv: off_v,
                                v_corner,
                            };
                            add(
                                cell.u1 - near.du,
                                v_corner + off_v,
                                Some(near),
                                jac * wt,
                                &mut acc,
                            )?;
                        }
                    }
                }
            }
        }
        Ok((acc, n))
    }

    fn process(&self, cell: Cell, coarse: Option<Vec<Complex64>>) -> Result<Leaf, FieldError> {
        let mut evaluations = 0;
        let mut rule = |c: &Cell| -> Result<Vec<Complex64>, FieldError> {
            let (q, n) = self.rule(c)?;
            evaluations += n;
            Ok(q)
        };
        let coarse = match coarse {
            Some(c) => c,
            None => rule(&cell)?,
        };
        if cell.corner != Corner::None {
            // graded cells refine by quarters; their error is not directional
            let mut quarters = Vec::with_capacity(4);
            for c in cell.quarters() {
                quarters.push((c, rule(&c)?));
            }
            let values: Vec<Complex64> = (0..self.width)
                .map(|l| quarters.iter().map(|(_, q)| q[l]).sum())
                .collect();
            let errors: Vec<f64> = values
                .iter()
                .zip(&coarse)
                .map(|(v, c)| (v - c).norm())
                .collect();
            return Ok(Leaf {
                cell,
                values,
                change_u: errors.clone(),
                change_v: errors.clone(),
                errors,
                pieces: quarters,
                evaluations,
            });
        }
        let mut pieces = Vec::with_capacity(4);
        for c in cell.halves_u().into_iter().chain(cell.halves_v()) {
            pieces.push((c, rule(&c)?));
        }
        let mut values = Vec::with_capacity(self.width);
        let mut errors = Vec::with_capacity(self.width);
        let mut change_u = Vec::with_capacity(self.width);
        let mut change_v = Vec::with_capacity(self.width);
        for (l, &q) in coarse.iter().enumerate().take(self.width) {
            let qu = pieces[0].1[l] + pieces[1].1[l];
            let qv = pieces[2].1[l] + pieces[3].1[l];
            let du = (qu - q).norm();
            let dv = (qv - q).norm();
            // errors of a tensor rule add up by direction; each halving
            // removes most of one of them
            values.push(qu + qv - q);
            errors.push(du + dv);
            change_u.push(du);
            change_v.push(dv);
        }
        Ok(Leaf {
            cell,
            values,
            errors,
            change_u,
            change_v,
            pieces,
            evaluations,
        })
    }

    /// New leaves replacing `leaf` after a split.
    fn split(&self, leaf: &Leaf, how: Split) -> Result<Vec<Leaf>, FieldError> {
        let reuse = |range: std::ops::Range<usize>| -> Result<Vec<Leaf>, FieldError> {
            leaf.pieces[range]
                .iter()
                .map(|(c, q)| self.process(*c, Some(q.clone())))
                .collect()
        };
        match how {
            _ if leaf.cell.corner != Corner::None => reuse(0..4),
            Split::U => reuse(0..2),
            Split::V => reuse(2..4),
            Split::Both => leaf
                .cell
                .quarters()
                .iter()
                .map(|c| self.process(*c, None))
                .collect(),
        }
    }
}

/// Compensated (Neumaier) sum, component-wise on real and imaginary parts.
pub fn compensated_sum<I: IntoIterator<Item = Complex64>>(xs: I) -> Complex64 {
    fn step(sum: &mut f64, comp: &mut f64, x: f64) {
        let t = *sum + x;
        if sum.abs() >= x.abs() {
            *comp += (*sum - t) + x;
        } else {
            *comp += (x - t) + *sum;
        }
        *sum = t;
    }
    let (mut re, mut cre, mut im, mut cim) = (0.0, 0.0, 0.0, 0.0);
    for x in xs {
        step(&mut re, &mut cre, x.re);
        step(&mut im, &mut cim, x.im);
    }
    Complex64::new(re + cre, im + cim)
}

/// Largest ratio of angular to radial length of an initial cell.
const MAX_ASPECT: f64 = 4.0;

fn initial_cells(region: &Region) -> Vec<Cell> {
    let u_max = *region.u_breaks.last().expect("non-empty breaks");
    let same_v = |a: f64, b: f64| {
        let d = (a - b).abs();
        d < 1e-9 || region.v_period.is_some_and(|p| (d - p).abs() < 1e-9)
    };
    let mut cells = Vec::new();
    for u in region.u_breaks.windows(2) {
        for v in region.v_breaks.windows(2) {
            // near-square pieces, so that the first splits refine both directions
            let pieces = (u[1] * (v[1] - v[0]) / (MAX_ASPECT * (u[1] - u[0])))
                .ceil()
                .max(1.0) as usize;
            let step = (v[1] - v[0]) / pieces as f64;
            for j in 0..pieces {
                let v0 = if j == 0 { v[0] } else { v[0] + j as f64 * step };
                let v1 = if j + 1 == pieces {
                    v[1]
                } else {
                    v[0] + (j + 1) as f64 * step
                };
                let outer = (u[1] - u_max).abs() < 1e-15;
                let corner = if outer && region.corners.iter().any(|&c| same_v(c, v0)) {
                    Corner::Low
                } else if outer && region.corners.iter().any(|&c| same_v(c, v1)) {
                    Corner::High
                } else {
                    Corner::None
                };
                cells.push(Cell {
                    u0: u[0],
                    u1: u[1],
                    v0,
                    v1,
                    corner,
                });
            }
        }
    }
    cells
}

pub(crate) fn integrate(
    width: usize,
    f: &ChartFn<'_>,
    region: &Region,
    s: &Settings,
) -> Result<Outcome, FieldError> {
    let engine = Engine {
        f,
        width,
        rules: Rules {
            plain: unit_rule(s.order),
            corner: unit_rule(2 * s.order),
            grading: s.grading,
        },
    };
    let mut leaves: Vec<Leaf> = initial_cells(region)
        .into_par_iter()
        .map(|c| engine.process(c, None))
        .collect::<Result<_, _>>()?;
    let mut evaluations: usize = leaves.iter().map(|l| l.evaluations).sum();
    let mut splits = 0usize;
    loop {
        let values: Vec<Complex64> = (0..width)
            .map(|l| compensated_sum(leaves.iter().map(|leaf| leaf.values[l])))
            .collect();
        let errors: Vec<f64> = (0..width)
            .map(|l| leaves.iter().map(|leaf| leaf.errors[l]).sum())
            .collect();
        let tols: Vec<f64> = values
            .iter()
            .map(|v| s.abs_tol.max(s.rel_tol * v.norm()))
            .collect();
        let converged = errors.iter().zip(&tols).all(|(e, t)| e <= t);
        let done = |converged| Outcome {
            values: values.clone(),
            errors: errors.clone(),
            cells: leaves.len(),
            evaluations,
            converged,
        };
        if converged || splits >= s.max_subdivisions {
            return Ok(done(converged));
        }
        let scaled = |xs: &[f64]| xs.iter().zip(&tols).map(|(e, t)| e / t).fold(0.0, f64::max);
        // cells narrower than this are final: their nodes would collide
        const MIN_WIDTH: f64 = 1e-12;
        let plans: Vec<(f64, Split)> = leaves
            .iter()
            .map(|leaf| {
                let c = &leaf.cell;
                let can_u = 0.5 * (c.u1 - c.u0) >= MIN_WIDTH;
                let can_v = 0.5 * (c.v1 - c.v0) >= MIN_WIDTH;
                let (su, sv) = (scaled(&leaf.change_u), scaled(&leaf.change_v));
                let how = if su > 4.0 * sv && can_u {
                    Split::U
                } else if sv > 4.0 * su && can_v {
                    Split::V
                } else if can_u && can_v {
                    Split::Both
                } else if can_u {
                    Split::U
                } else if can_v {
                    Split::V
                } else {
                    return (0.0, Split::Both);
                };
                (scaled(&leaf.errors), how)
            })
            .collect();
        let mut order: Vec<usize> = (0..leaves.len()).collect();
        order.sort_by(|&a, &b| plans[b].0.total_cmp(&plans[a].0).then(a.cmp(&b)));
        let top = plans[order[0]].0;
        if top <= 0.0 {
            return Ok(done(false));
        }
        let budget = s.max_subdivisions - splits;
        let chosen: Vec<usize> = order
            .into_iter()
            .take_while(|&i| plans[i].0 >= top / 8.0)
            .take(budget.max(1))
            .collect();
        let mut selected = vec![false; leaves.len()];
        for &i in &chosen {
            selected[i] = true;
        }
        let fresh: Vec<Leaf> = chosen
            .par_iter()
            .map(|&i| engine.split(&leaves[i], plans[i].1))
            .collect::<Result<Vec<_>, _>>()?
            .into_iter()
            .flatten()
            .collect();
        evaluations += fresh.iter().map(|l| l.evaluations).sum::<usize>();
        splits += chosen.len();
        let mut next: Vec<Leaf> = leaves
            .into_iter()
            .zip(selected)
            .filter_map(|(leaf, sel)| (!sel).then_some(leaf))
            .collect();
        next.extend(fresh);
        leaves = next;
    }
}
