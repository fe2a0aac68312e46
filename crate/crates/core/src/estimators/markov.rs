//! Markov partitions of hyperbolic automorphisms of T² and entropy bounds for the
//! subshift of orbits avoiding a ball.
//!
//! Cells are parallelograms with sides along the eigenlines, stored as boxes in eigen
//! coordinates. Transitions are labelled by the lattice shift m with B(R_i) ∩ (R_j + m) ≠ ∅.

use std::collections::{BTreeSet, HashMap};
use std::path::Path;

use nalgebra::{DMatrix, Matrix2, Vector2};
use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;
use serde::{Deserialize, Serialize};

use crate::homology::eigenvalues;
use crate::torus_maps::real_eigenbasis;
use crate::{Error, IntMatrix};

const TOL: f64 = 1e-9;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PartitionFile {
    pub matrix: IntMatrix,
    pub cells: Vec<CellPolygon>,
    /// (from, to, lattice shift).
    pub transitions: Vec<(usize, usize, [i64; 2])>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CellPolygon {
    pub vertices: Vec<[f64; 2]>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct EigenBox {
    u: [f64; 2],
    s: [f64; 2],
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct Edge {
    from: usize,
    to: usize,
    shift: [i64; 2],
    /// Eigen coordinates of the shift.
    shift_u: f64,
}

#[derive(Clone, Debug)]
pub struct MarkovPartition {
    b: IntMatrix,
    lambda: f64,
    mu: f64,
    basis: Matrix2<f64>,
    basis_inv: Matrix2<f64>,
    boxes: Vec<EigenBox>,
    edges: Vec<Edge>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MarkovBound {
    pub depth: usize,
    pub delta: f64,
    pub cells: usize,
    pub surviving: usize,
    /// log of the spectral radius of the pruned transition matrix; None for an empty subshift.
    pub entropy: Option<f64>,
}

fn scaled(iv: [f64; 2], k: f64) -> [f64; 2] {
    let (a, b) = (iv[0] * k, iv[1] * k);
    [a.min(b), a.max(b)]
}

fn overlap(a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
    [a[0].max(b[0]), a[1].min(b[1])]
}

fn close(a: [f64; 2], b: [f64; 2]) -> bool {
    (a[0] - b[0]).abs() < TOL && (a[1] - b[1]).abs() < TOL
}

impl MarkovPartition {
    /// The two-rectangle partition of [[2, 1], [1, 1]].
    pub fn cat() -> Self {
        let file: PartitionFile = serde_json::from_str(include_str!("cat_partition.json")).expect("shipped partition parses");
        Self::new(file).expect("shipped partition is Markov")
    }

    pub fn from_path(path: &Path) -> Result<Self, Error> {
        let text = std::fs::read_to_string(path)?;
        let file: PartitionFile = serde_json::from_str(&text).map_err(|e| Error::Input(format!("partition file: {e}")))?;
        Self::new(file)
    }

    pub fn new(file: PartitionFile) -> Result<Self, Error> {
        let b = file.matrix;
        if b.dim() != 2 || !b.is_unimodular() {
            return Err(Error::Input("partition matrix must be unimodular 2x2".into()));
        }
        let spec = eigenvalues(&b)?;
        let (l, m) = (spec.values[0], spec.values[1]);
        if l.im != 0.0 || l.re.abs() <= 1.0 {
            return Err(Error::Input("partition matrix must be hyperbolic".into()));
        }
        let bf = b.to_f64();
        let p = real_eigenbasis(&bf, &[l.re, m.re])?;
        let basis = Matrix2::new(p[(0, 0)], p[(0, 1)], p[(1, 0)], p[(1, 1)]);
        let basis_inv = basis.try_inverse().ok_or_else(|| Error::Numerical("singular eigenbasis".into()))?;
        let mut part = Self { b, lambda: l.re, mu: m.re, basis, basis_inv, boxes: Vec::new(), edges: Vec::new() };
        for (k, cell) in file.cells.iter().enumerate() {
            part.boxes.push(part.cell_box(k, cell)?);
        }
        part.check_tiling()?;
        let found = part.compute_edges()?;
        let claimed: BTreeSet<(usize, usize, [i64; 2])> = file.transitions.iter().copied().collect();
        let computed: BTreeSet<(usize, usize, [i64; 2])> = found.iter().map(|e| (e.from, e.to, e.shift)).collect();
        if claimed != computed {
            return Err(Error::Input(format!("claimed transitions {claimed:?} differ from the geometric ones {computed:?}")));
        }
        part.edges = found;
        Ok(part)
    }

    fn eigen(&self, x: [f64; 2]) -> Vector2<f64> {
        self.basis_inv * Vector2::new(x[0], x[1])
    }

    fn cell_box(&self, k: usize, cell: &CellPolygon) -> Result<EigenBox, Error> {
        if cell.vertices.len() != 4 {
            return Err(Error::Input(format!("cell {k} is not a quadrilateral")));
        }
        let pts: Vec<Vector2<f64>> = cell.vertices.iter().map(|&v| self.eigen(v)).collect();
        let u = [pts.iter().map(|p| p.x).fold(f64::INFINITY, f64::min), pts.iter().map(|p| p.x).fold(f64::NEG_INFINITY, f64::max)];
        let s = [pts.iter().map(|p| p.y).fold(f64::INFINITY, f64::min), pts.iter().map(|p| p.y).fold(f64::NEG_INFINITY, f64::max)];
        let corners = [(u[0], s[0]), (u[1], s[0]), (u[1], s[1]), (u[0], s[1])];
        for (cu, cs) in corners {
            if !pts.iter().any(|p| (p.x - cu).abs() < TOL && (p.y - cs).abs() < TOL) {
                return Err(Error::Input(format!("cell {k} is not a parallelogram along the eigenlines")));
            }
        }
        if u[1] - u[0] < TOL || s[1] - s[0] < TOL {
            return Err(Error::Input(format!("cell {k} is degenerate")));
        }
        Ok(EigenBox { u, s })
    }

    fn shift_eigen(&self, m: [i64; 2]) -> Vector2<f64> {
        self.eigen([m[0] as f64, m[1] as f64])
    }

    /// Lattice shifts that can bring a box of radius `r` near another.
    fn shifts(&self, r: f64) -> Vec<[i64; 2]> {
        let k = r.ceil() as i64 + 1;
        (-k..=k).flat_map(|a| (-k..=k).map(move |b| [a, b])).collect()
    }

    fn radius(&self, bx: &EigenBox) -> f64 {
        [(bx.u[0], bx.s[0]), (bx.u[1], bx.s[0]), (bx.u[0], bx.s[1]), (bx.u[1], bx.s[1])]
            .iter()
            .map(|&(a, b)| (self.basis * Vector2::new(a, b)).norm())
            .fold(0.0, f64::max)
    }

    fn check_tiling(&self) -> Result<(), Error> {
        let area: f64 = self.boxes.iter().map(|b| (b.u[1] - b.u[0]) * (b.s[1] - b.s[0])).sum::<f64>() * self.basis.determinant().abs();
        if (area - 1.0).abs() > 1e-8 {
            return Err(Error::Input(format!("cells have total area {area}, not 1")));
        }
        let r = self.boxes.iter().map(|b| self.radius(b)).fold(0.0, f64::max);
        for (i, a) in self.boxes.iter().enumerate() {
            for (j, c) in self.boxes.iter().enumerate() {
                for m in self.shifts(2.0 * r) {
                    if i == j && m == [0, 0] {
                        continue;
                    }
                    let me = self.shift_eigen(m);
                    let ou = overlap(a.u, [c.u[0] + me.x, c.u[1] + me.x]);
                    let os = overlap(a.s, [c.s[0] + me.y, c.s[1] + me.y]);
                    if ou[1] - ou[0] > TOL && os[1] - os[0] > TOL {
                        return Err(Error::Input(format!("cells {i} and {j} + {m:?} overlap")));
                    }
                }
            }
        }
        Ok(())
    }

    fn compute_edges(&self) -> Result<Vec<Edge>, Error> {
        let r = self.boxes.iter().map(|b| self.radius(b)).fold(0.0, f64::max);
        let mut out = Vec::new();
        for (i, a) in self.boxes.iter().enumerate() {
            let img = EigenBox { u: scaled(a.u, self.lambda), s: scaled(a.s, self.mu) };
            let reach = self.lambda.abs() * r + r;
            for (j, c) in self.boxes.iter().enumerate() {
                for m in self.shifts(reach) {
                    let me = self.shift_eigen(m);
                    let cu = [c.u[0] + me.x, c.u[1] + me.x];
                    let cs = [c.s[0] + me.y, c.s[1] + me.y];
                    let ou = overlap(img.u, cu);
                    let os = overlap(img.s, cs);
                    if ou[1] - ou[0] <= TOL || os[1] - os[0] <= TOL {
                        continue;
                    }
                    if !close(ou, cu) || !close(os, img.s) {
                        return Err(Error::Input(format!("image of cell {i} does not cross cell {j} + {m:?} fully")));
                    }
                    out.push(Edge { from: i, to: j, shift: m, shift_u: me.x });
                }
            }
        }
        Ok(out)
    }

    pub fn matrix(&self) -> &IntMatrix {
        &self.b
    }

    pub fn cell_count(&self) -> usize {
        self.boxes.len()
    }

    /// Transition counts between cells.
    pub fn transition_counts(&self) -> Vec<Vec<usize>> {
        let n = self.boxes.len();
        let mut t = vec![vec![0; n]; n];
        for e in &self.edges {
            t[e.from][e.to] += 1;
        }
        t
    }

    /// Index of the cell containing `x` (mod 1), if it lies in a cell interior.
    pub fn locate(&self, x: [f64; 2]) -> Option<usize> {
        let r = self.boxes.iter().map(|b| self.radius(b)).fold(0.0, f64::max);
        for m in self.shifts(r) {
            let e = self.eigen([x[0] + m[0] as f64, x[1] + m[1] as f64]);
            for (k, b) in self.boxes.iter().enumerate() {
                if e.x > b.u[0] && e.x < b.u[1] && e.y > b.s[0] && e.y < b.s[1] {
                    return Some(k);
                }
            }
        }
        None
    }

    /// Distance from `q` to the parallelogram with eigen box `bx`.
    fn distance_to(&self, q: Vector2<f64>, bx: &EigenBox) -> f64 {
        let e = self.basis_inv * q;
        if e.x >= bx.u[0] && e.x <= bx.u[1] && e.y >= bx.s[0] && e.y <= bx.s[1] {
            return 0.0;
        }
        let c = |a: f64, b: f64| self.basis * Vector2::new(a, b);
        let corners = [c(bx.u[0], bx.s[0]), c(bx.u[1], bx.s[0]), c(bx.u[1], bx.s[1]), c(bx.u[0], bx.s[1])];
        (0..4)
            .map(|k| {
                let (a, b) = (corners[k], corners[(k + 1) % 4]);
                let ab = b - a;
                let t = ((q - a).dot(&ab) / ab.norm_squared()).clamp(0.0, 1.0);
                (q - a - ab * t).norm()
            })
            .fold(f64::INFINITY, f64::min)
    }

    fn meets_ball(&self, bx: &EigenBox, p: [f64; 2], delta: f64) -> bool {
        let r = self.radius(bx) + delta;
        self.shifts(r).iter().any(|m| self.distance_to(Vector2::new(p[0] + m[0] as f64, p[1] + m[1] as f64), bx) <= delta)
    }
}

/// Spectral radius of a nonnegative sparse matrix given by successor lists: the largest
/// Perron root over strongly connected components.
fn spectral_radius(succ: &[Vec<usize>]) -> f64 {
    let mut g = DiGraph::<(), ()>::with_capacity(succ.len(), 0);
    let nodes: Vec<_> = (0..succ.len()).map(|_| g.add_node(())).collect();
    for (i, s) in succ.iter().enumerate() {
        for &j in s {
            g.add_edge(nodes[i], nodes[j], ());
        }
    }
    let comps = tarjan_scc(&g);
    let mut comp = vec![0; succ.len()];
    let mut local = vec![0; succ.len()];
    for (c, members) in comps.iter().enumerate() {
        for (k, n) in members.iter().enumerate() {
            comp[n.index()] = c;
            local[n.index()] = k;
        }
    }
    let mut best = 0.0f64;
    for (c, members) in comps.iter().enumerate() {
        let sub: Vec<Vec<usize>> = members
            .iter()
            .map(|n| succ[n.index()].iter().filter(|&&j| comp[j] == c).map(|&j| local[j]).collect())
            .collect();
        if sub.iter().any(|s| !s.is_empty()) {
            best = best.max(irreducible_radius(&sub));
        }
    }
    best
}

/// Power iteration on M + I (primitive for irreducible M), stopped when the
/// Collatz-Wielandt bounds agree.
fn irreducible_radius(succ: &[Vec<usize>]) -> f64 {
    let n = succ.len();
    let mut v = vec![1.0 / n as f64; n];
    let mut mid = f64::NAN;
    for _ in 0..100_000 {
        let mut w = v.clone();
        for (i, s) in succ.iter().enumerate() {
            for &j in s {
                w[i] += v[j];
            }
        }
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for (a, b) in w.iter().zip(&v) {
            lo = lo.min(a / b);
            hi = hi.max(a / b);
        }
        mid = 0.5 * (lo + hi);
        let total: f64 = w.iter().sum();
        w.iter_mut().for_each(|x| *x /= total);
        v = w;
        if hi - lo <= 1e-12 * mid {
            break;
        }
    }
    mid - 1.0
}

/// Lower bound for the entropy of B restricted to orbits avoiding the closed δ-ball at p.
///
/// The partition is refined `depth` times (cells are admissible words of length depth + 1
/// read forward), cells meeting the ball are deleted, and the bound is the log spectral
/// radius of the surviving transition graph.
pub fn markov_pruned_entropy(part: &MarkovPartition, p: [f64; 2], delta: f64, depth: usize) -> Result<MarkovBound, Error> {
    if !(delta > 0.0) {
        return Err(Error::Input("delta must be positive".into()));
    }
    let bp = part.b.mul_vec_f64(&p);
    if crate::torus_maps::torus_sup_dist(&bp, &p) > 1e-12 {
        return Err(Error::Input(format!("{p:?} is not fixed by the partition matrix")));
    }
    // Cells: (start cell, edge path of length depth).
    let mut paths: Vec<(usize, Vec<u32>)> = (0..part.boxes.len()).map(|i| (i, Vec::new())).collect();
    for _ in 0..depth {
        paths = paths
            .into_iter()
            .flat_map(|(start, path)| {
                let end = path.last().map_or(start, |&e| part.edges[e as usize].to);
                part.edges.iter().enumerate().filter(move |(_, e)| e.from == end).map(move |(k, _)| {
                    let mut q = path.clone();
                    q.push(k as u32);
                    (start, q)
                })
            })
            .collect();
    }
    let alive: Vec<bool> = paths
        .iter()
        .map(|(start, path)| {
            let end = path.last().map_or(*start, |&e| part.edges[e as usize].to);
            let mut iv = part.boxes[end].u;
            for &e in path.iter().rev() {
                let edge = &part.edges[e as usize];
                iv = overlap(scaled([iv[0] + edge.shift_u, iv[1] + edge.shift_u], 1.0 / part.lambda), part.boxes[edge.from].u);
            }
            let bx = EigenBox { u: iv, s: part.boxes[*start].s };
            !part.meets_ball(&bx, p, delta)
        })
        .collect();
    let index: HashMap<(usize, &[u32]), usize> = paths.iter().enumerate().map(|(k, (s, q))| ((*s, q.as_slice()), k)).collect();
    let mut succ: Vec<Vec<usize>> = vec![Vec::new(); paths.len()];
    for (k, (start, path)) in paths.iter().enumerate() {
        if !alive[k] {
            continue;
        }
        let end = path.last().map_or(*start, |&e| part.edges[e as usize].to);
        for (ek, e) in part.edges.iter().enumerate().filter(|(_, e)| e.from == end) {
            let target = if depth == 0 {
                index[&(e.to, &[][..])]
            } else {
                let mut q: Vec<u32> = path[1..].to_vec();
                q.push(ek as u32);
                let s = part.edges[q[0] as usize].from;
                index[&(s, q.as_slice())]
            };
            if alive[target] {
                succ[k].push(target);
            }
        }
    }
    let rho = spectral_radius(&succ);
    let surviving = alive.iter().filter(|&&a| a).count();
    Ok(MarkovBound {
        depth,
        delta,
        cells: paths.len(),
        surviving,
        entropy: if rho > 1e-12 { Some(rho.ln()) } else { None },
    })
}

/// Densities of a transition count matrix, used as an oracle in tests.
pub fn count_matrix_entropy(t: &[Vec<usize>]) -> f64 {
    let n = t.len();
    let m = DMatrix::from_fn(n, n, |i, j| t[i][j] as f64);
    m.complex_eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max).ln()
}
