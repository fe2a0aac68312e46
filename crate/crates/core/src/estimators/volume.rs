//! Growth of the u-volume of iterated disks (u ∈ {1, 2}), by adaptive refinement in the lift.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::torus_maps::{TorusMap, TorusPoint};
use crate::Error;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VolumeGrowthEstimate {
    /// Slope of log volume against n over the last half of the iterations.
    pub chi: f64,
    pub u: usize,
    /// Iterations completed.
    pub iterations: usize,
    /// Vertex count after each iteration (index 0 is the initial disk).
    pub vertices: Vec<usize>,
    pub log_volumes: Vec<f64>,
    /// RMS residual of the tail fit.
    pub fit_residual: f64,
    /// The vertex budget ran out before the requested iterations.
    pub partial: bool,
}

/// Least-squares slope and RMS residual.
fn fit_line(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let rms = (xs.iter().zip(ys).map(|(x, y)| (y - my - slope * (x - mx)).powi(2)).sum::<f64>() / n).sqrt();
    (slope, rms)
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn tri_area(a: &[f64], b: &[f64], c: &[f64]) -> f64 {
    let e1: Vec<f64> = b.iter().zip(a).map(|(x, y)| x - y).collect();
    let e2: Vec<f64> = c.iter().zip(a).map(|(x, y)| x - y).collect();
    let dot = |u: &[f64], v: &[f64]| u.iter().zip(v).map(|(x, y)| x * y).sum::<f64>();
    let g = dot(&e1, &e1) * dot(&e2, &e2) - dot(&e1, &e2).powi(2);
    0.5 * g.max(0.0).sqrt()
}

struct Disk<'a> {
    map: &'a dyn TorusMap,
    base: Vec<f64>,
    basis: Vec<Vec<f64>>,
    /// Parameter and current image of each vertex.
    params: Vec<[f64; 2]>,
    points: Vec<Vec<f64>>,
    step: usize,
}

impl Disk<'_> {
    /// Image under the current number of iterates of the disk point with parameter `p`.
    fn image(&self, p: [f64; 2]) -> Vec<f64> {
        let mut y: Vec<f64> = self.base.clone();
        for (k, v) in self.basis.iter().enumerate() {
            for (yi, vi) in y.iter_mut().zip(v) {
                *yi += p[k] * vi;
            }
        }
        for _ in 0..self.step {
            y = self.map.lift(&y);
        }
        y
    }

    fn add(&mut self, p: [f64; 2]) -> usize {
        let img = self.image(p);
        self.params.push(p);
        self.points.push(img);
        self.points.len() - 1
    }

    fn advance(&mut self) {
        self.step += 1;
        for y in self.points.iter_mut() {
            *y = self.map.lift(y);
        }
    }
}

/// Volume growth of the u-disk of radius `radius` around `base` spanned by `basis`.
///
/// Segments (u = 1) or triangles (u = 2) whose image edges exceed a quarter of
/// min(radius, feature scale) are bisected, with new vertices iterated from the
/// original disk.
pub fn volume_growth(
    map: &dyn TorusMap,
    base: &TorusPoint,
    basis: &[Vec<f64>],
    radius: f64,
    n: usize,
    max_vertices: usize,
) -> Result<VolumeGrowthEstimate, Error> {
    let u = basis.len();
    let d = map.dim();
    if !(u == 1 || u == 2) || basis.iter().any(|v| v.len() != d) || base.dim() != d {
        return Err(Error::Input("need one or two direction vectors of the map's dimension".into()));
    }
    if !(radius > 0.0) || n == 0 {
        return Err(Error::Input("radius and iteration count must be positive".into()));
    }
    let norms: Vec<f64> = basis.iter().map(|v| v.iter().map(|x| x * x).sum::<f64>().sqrt()).collect();
    if norms.iter().any(|&l| l == 0.0) {
        return Err(Error::Input("zero direction vector".into()));
    }
    let basis: Vec<Vec<f64>> = basis.iter().zip(&norms).map(|(v, l)| v.iter().map(|x| x / l).collect()).collect();
    if u == 2 {
        let c: f64 = basis[0].iter().zip(&basis[1]).map(|(a, b)| a * b).sum();
        if 1.0 - c * c < 1e-12 {
            return Err(Error::Input("direction vectors are linearly dependent".into()));
        }
    }
    let thr = 0.25 * radius.min(map.feature_scale());
    let mut disk = Disk { map, base: base.0.clone(), basis, params: Vec::new(), points: Vec::new(), step: 0 };
    let mut out = VolumeGrowthEstimate {
        chi: 0.0,
        u,
        iterations: 0,
        vertices: Vec::new(),
        log_volumes: Vec::new(),
        fit_residual: 0.0,
        partial: false,
    };
    if u == 1 {
        let mut order: Vec<usize> = vec![disk.add([-radius, 0.0]), disk.add([radius, 0.0])];
        for it in 0..=n {
            if it > 0 {
                disk.advance();
            }
            let mut i = 0;
            while i + 1 < order.len() {
                let (a, b) = (order[i], order[i + 1]);
                if dist(&disk.points[a], &disk.points[b]) > thr {
                    if disk.points.len() >= max_vertices {
                        out.partial = true;
                        break;
                    }
                    let mid = [(disk.params[a][0] + disk.params[b][0]) / 2.0, 0.0];
                    let m = disk.add(mid);
                    order.insert(i + 1, m);
                } else {
                    i += 1;
                }
            }
            if out.partial {
                break;
            }
            let len: f64 = order.windows(2).map(|w| dist(&disk.points[w[0]], &disk.points[w[1]])).sum();
            out.vertices.push(order.len());
            out.log_volumes.push(len.ln());
        }
    } else {
        let c = disk.add([0.0, 0.0]);
        let ring: Vec<usize> = (0..6)
            .map(|k| {
                let a = std::f64::consts::PI / 3.0 * k as f64;
                disk.add([radius * a.cos(), radius * a.sin()])
            })
            .collect();
        let mut tris: Vec<[usize; 3]> = (0..6).map(|k| [c, ring[k], ring[(k + 1) % 6]]).collect();
        let mut mids: HashMap<(usize, usize), usize> = HashMap::new();
        for it in 0..=n {
            if it > 0 {
                disk.advance();
            }
            let mut done: Vec<[usize; 3]> = Vec::with_capacity(tris.len());
            while let Some(t) = tris.pop() {
                let long = (0..3).any(|e| dist(&disk.points[t[e]], &disk.points[t[(e + 1) % 3]]) > thr);
                if !long {
                    done.push(t);
                    continue;
                }
                if disk.points.len() + 3 > max_vertices {
                    out.partial = true;
                    done.push(t);
                    done.append(&mut tris);
                    break;
                }
                let mut mid = |a: usize, b: usize, disk: &mut Disk| -> usize {
                    let key = (a.min(b), a.max(b));
                    if let Some(&m) = mids.get(&key) {
                        return m;
                    }
                    let p = [(disk.params[a][0] + disk.params[b][0]) / 2.0, (disk.params[a][1] + disk.params[b][1]) / 2.0];
                    let m = disk.add(p);
                    mids.insert(key, m);
                    m
                };
                let m01 = mid(t[0], t[1], &mut disk);
                let m12 = mid(t[1], t[2], &mut disk);
                let m20 = mid(t[2], t[0], &mut disk);
                tris.extend([[t[0], m01, m20], [m01, t[1], m12], [m20, m12, t[2]], [m01, m12, m20]]);
            }
            tris = done;
            if out.partial {
                break;
            }
            let area: f64 = tris.iter().map(|t| tri_area(&disk.points[t[0]], &disk.points[t[1]], &disk.points[t[2]])).sum();
            out.vertices.push(disk.points.len());
            out.log_volumes.push(area.ln());
        }
    }
    out.iterations = out.log_volumes.len().saturating_sub(1);
    if out.log_volumes.len() < 2 {
        return Err(Error::Numerical("vertex budget exhausted before the first iteration".into()));
    }
    let last = out.log_volumes.len() - 1;
    let start = last - last / 2;
    let xs: Vec<f64> = (start..=last).map(|k| k as f64).collect();
    let (slope, rms) = if xs.len() >= 2 {
        fit_line(&xs, &out.log_volumes[start..=last])
    } else {
        fit_line(&[0.0, 1.0], &out.log_volumes[0..2])
    };
    out.chi = slope;
    out.fit_residual = rms;
    Ok(out)
}
