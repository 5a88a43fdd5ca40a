use std::collections::BTreeMap;
use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::RenderError;
use crate::graph::{Graph, NodeId};

pub const CANVAS: f64 = 1024.0;
pub const NODE_RADIUS: f64 = 14.0;
pub const MARGIN: f64 = 12.0;
pub const MIN_SEPARATION: f64 = 24.0;
pub const MAX_LAYOUT_NODES: usize = 200;

const ITERATIONS: usize = 300;
const GRID: f64 = 2.0;
// spacing enforced before snapping, so snapping cannot push pairs below MIN_SEPARATION
const RESOLVE_TARGET: f64 = MIN_SEPARATION + 2.0 * GRID;
// leaves room for the circle and its label
const PAD: f64 = MARGIN + 2.0 * NODE_RADIUS;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layout {
    pub positions: BTreeMap<NodeId, (f64, f64)>,
    pub width: f64,
    pub height: f64,
    pub seed: u64,
}

impl Layout {
    pub fn position(&self, v: &NodeId) -> Option<(f64, f64)> {
        self.positions.get(v).copied()
    }

    pub fn min_separation(&self) -> f64 {
        let p: Vec<(f64, f64)> = self.positions.values().copied().collect();
        let mut best = f64::INFINITY;
        for i in 0..p.len() {
            for j in i + 1..p.len() {
                best = best.min((p[i].0 - p[j].0).hypot(p[i].1 - p[j].1));
            }
        }
        best
    }
}

fn dfs_preorder(g: &Graph) -> Vec<usize> {
    let n = g.node_count();
    let mut seen = vec![false; n];
    let mut order = Vec::with_capacity(n);
    for root in 0..n {
        if seen[root] {
            continue;
        }
        let mut stack = vec![root];
        while let Some(v) = stack.pop() {
            if seen[v] {
                continue;
            }
            seen[v] = true;
            order.push(v);
            for &w in g.neighbors(v).iter().rev() {
                if !seen[w] {
                    stack.push(w);
                }
            }
        }
    }
    order
}

fn fruchterman_reingold(g: &Graph, pos: &mut [(f64, f64)]) {
    let n = pos.len();
    let side = CANVAS - 2.0 * PAD;
    let k = (side * side / n as f64).sqrt() * 0.6;
    let t0 = CANVAS / 10.0;
    let mut disp = vec![(0.0, 0.0); n];
    for it in 0..ITERATIONS {
        disp.iter_mut().for_each(|d| *d = (0.0, 0.0));
        for i in 0..n {
            for j in i + 1..n {
                let (dx, dy) = (pos[i].0 - pos[j].0, pos[i].1 - pos[j].1);
                let d = dx.hypot(dy).max(0.01);
                let f = k * k / d;
                let (fx, fy) = (dx / d * f, dy / d * f);
                disp[i].0 += fx;
                disp[i].1 += fy;
                disp[j].0 -= fx;
                disp[j].1 -= fy;
            }
        }
        for (u, v, _) in g.edges() {
            let (dx, dy) = (pos[u].0 - pos[v].0, pos[u].1 - pos[v].1);
            let d = dx.hypot(dy).max(0.01);
            let f = d * d / k;
            let (fx, fy) = (dx / d * f, dy / d * f);
            disp[u].0 -= fx;
            disp[u].1 -= fy;
            disp[v].0 += fx;
            disp[v].1 += fy;
        }
        let t = t0 * (1.0 - it as f64 / ITERATIONS as f64);
        for (p, d) in pos.iter_mut().zip(&disp) {
            let len = d.0.hypot(d.1);
            if len > 0.0 {
                let step = len.min(t);
                p.0 += d.0 / len * step;
                p.1 += d.1 / len * step;
            }
        }
    }
}

fn fit_to_canvas(pos: &mut [(f64, f64)]) {
    let (mut x0, mut y0, mut x1, mut y1) = (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    for &(x, y) in pos.iter() {
        x0 = x0.min(x);
        y0 = y0.min(y);
        x1 = x1.max(x);
        y1 = y1.max(y);
    }
    let span = (x1 - x0).max(y1 - y0);
    let scale = if span > 1e-9 { (CANVAS - 2.0 * PAD) / span } else { 0.0 };
    let (cx, cy) = ((x0 + x1) / 2.0, (y0 + y1) / 2.0);
    for p in pos.iter_mut() {
        *p = (CANVAS / 2.0 + (p.0 - cx) * scale, CANVAS / 2.0 + (p.1 - cy) * scale);
    }
}

fn clamp(p: &mut (f64, f64)) {
    p.0 = p.0.clamp(PAD, CANVAS - PAD);
    p.1 = p.1.clamp(PAD, CANVAS - PAD);
}

fn resolve_overlaps(pos: &mut [(f64, f64)]) {
    let n = pos.len();
    for _ in 0..1000 {
        let mut moved = false;
        for i in 0..n {
            for j in i + 1..n {
                let (dx, dy) = (pos[j].0 - pos[i].0, pos[j].1 - pos[i].1);
                let d = dx.hypot(dy);
                if d >= RESOLVE_TARGET {
                    continue;
                }
                let (ux, uy) = if d > 1e-9 {
                    (dx / d, dy / d)
                } else {
                    let a = (i * 7 + j * 13) as f64;
                    (a.cos(), a.sin())
                };
                let push = (RESOLVE_TARGET - d) / 2.0 + 0.01;
                pos[i].0 -= ux * push;
                pos[i].1 -= uy * push;
                pos[j].0 += ux * push;
                pos[j].1 += uy * push;
                clamp(&mut pos[i]);
                clamp(&mut pos[j]);
                moved = true;
            }
        }
        if !moved {
            break;
        }
    }
}

/// Seeded force-directed layout snapped to a 2 px grid.
pub fn layout(g: &Graph, seed: u64) -> Result<Layout, RenderError> {
    let n = g.node_count();
    if n > MAX_LAYOUT_NODES {
        return Err(RenderError::Oversize(n));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pos = vec![(0.0, 0.0); n];
    let radius = CANVAS * 0.35;
    for (slot, &v) in dfs_preorder(g).iter().enumerate() {
        let a = 2.0 * PI * slot as f64 / n as f64 - PI / 2.0;
        pos[v] = (
            CANVAS / 2.0 + radius * a.cos() + rng.gen_range(-1.0..1.0),
            CANVAS / 2.0 + radius * a.sin() + rng.gen_range(-1.0..1.0),
        );
    }
    if n > 1 {
        fruchterman_reingold(g, &mut pos);
    }
    fit_to_canvas(&mut pos);
    resolve_overlaps(&mut pos);
    for p in pos.iter_mut() {
        *p = ((p.0 / GRID).round() * GRID, (p.1 / GRID).round() * GRID);
    }
    Ok(Layout {
        positions: pos.into_iter().enumerate().map(|(i, p)| (g.id(i).clone(), p)).collect(),
        width: CANVAS,
        height: CANVAS,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{generate_ba, generate_er};

    #[test]
    fn single_node_is_centred() {
        let g = Graph::from_edges(&["x"], &[]).unwrap();
        let l = layout(&g, 3).unwrap();
        assert_eq!(l.position(&NodeId::new("x").unwrap()), Some((512.0, 512.0)));
    }

    #[test]
    fn deterministic_per_seed() {
        let g = generate_er(25, 0.15, 5).unwrap();
        assert_eq!(layout(&g, 11).unwrap(), layout(&g, 11).unwrap());
    }

    #[test]
    fn hexagon_for_six_cycle() {
        let g = Graph::from_index_edges(6, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 0)]).unwrap();
        let l = layout(&g, 1).unwrap();
        let p: Vec<(f64, f64)> = l.positions.values().copied().collect();
        let (cx, cy) = (p.iter().map(|q| q.0).sum::<f64>() / 6.0, p.iter().map(|q| q.1).sum::<f64>() / 6.0);
        let r: Vec<f64> = p.iter().map(|q| (q.0 - cx).hypot(q.1 - cy)).collect();
        let mean = r.iter().sum::<f64>() / 6.0;
        assert!(r.iter().all(|x| (x - mean).abs() / mean < 0.05), "{r:?}");
        // neighbours sit 60 degrees apart
        let ang = |i: usize| (p[i].1 - cy).atan2(p[i].0 - cx);
        for i in 0..6 {
            let mut d = (ang((i + 1) % 6) - ang(i)).abs();
            if d > PI {
                d = 2.0 * PI - d;
            }
            assert!((d - PI / 3.0).abs() < 0.05 * PI / 3.0, "{d}");
        }
    }

    #[test]
    fn margins_and_separation_hold() {
        for seed in 0..20 {
            let g = if seed % 2 == 0 { generate_er(60, 0.05, seed).unwrap() } else { generate_ba(200, 2, seed).unwrap() };
            let l = layout(&g, seed).unwrap();
            assert!(l.min_separation() >= MIN_SEPARATION, "seed {seed}: {}", l.min_separation());
            for &(x, y) in l.positions.values() {
                assert!((MARGIN..=CANVAS - MARGIN).contains(&x) && (MARGIN..=CANVAS - MARGIN).contains(&y));
            }
        }
    }

    #[test]
    fn oversize_is_an_error() {
        let g = generate_er(201, 0.01, 0).unwrap();
        assert_eq!(layout(&g, 0), Err(RenderError::Oversize(201)));
    }
}
