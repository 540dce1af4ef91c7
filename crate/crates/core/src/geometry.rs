//! Planar polygon helpers on top of `geo` boolean operations.

use geo::{BooleanOps, Coord, LineString, MultiPolygon, Polygon};

use crate::error::{Error, Result};

pub type Pt = (f64, f64);

/// Signed shoelace area, positive for counter-clockwise rings.
pub fn shoelace(ring: &[Pt]) -> f64 {
    let n = ring.len();
    let mut s = 0.0;
    for i in 0..n {
        let (x0, y0) = ring[i];
        let (x1, y1) = ring[(i + 1) % n];
        s += x0 * y1 - x1 * y0;
    }
    0.5 * s
}

/// Even-odd point-in-polygon test.
pub fn contains(ring: &[Pt], p: Pt) -> bool {
    let n = ring.len();
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let (xi, yi) = ring[i];
        let (xj, yj) = ring[j];
        if (yi > p.1) != (yj > p.1) && p.0 < (xj - xi) * (p.1 - yi) / (yj - yi) + xi {
            inside = !inside;
        }
        j = i;
    }
    inside
}

fn orient(a: Pt, b: Pt, c: Pt) -> f64 {
    (b.0 - a.0) * (c.1 - a.1) - (b.1 - a.1) * (c.0 - a.0)
}

fn segments_cross(a: Pt, b: Pt, c: Pt, d: Pt) -> bool {
    let d1 = orient(c, d, a);
    let d2 = orient(c, d, b);
    let d3 = orient(a, b, c);
    let d4 = orient(a, b, d);
    (d1 > 0.0) != (d2 > 0.0) && (d3 > 0.0) != (d4 > 0.0) && d1 != 0.0 && d2 != 0.0 && d3 != 0.0 && d4 != 0.0
}

/// Index pairs of crossing non-adjacent edges of a closed ring.
pub fn self_intersections(ring: &[Pt]) -> Vec<(usize, usize)> {
    let n = ring.len();
    let mut edges: Vec<(usize, f64, f64)> = (0..n)
        .map(|i| {
            let (a, b) = (ring[i], ring[(i + 1) % n]);
            (i, a.0.min(b.0), a.0.max(b.0))
        })
        .collect();
    edges.sort_by(|x, y| x.1.total_cmp(&y.1));
    let mut out = Vec::new();
    for (k, &(i, _, hi)) in edges.iter().enumerate() {
        for &(j, lo2, _) in &edges[k + 1..] {
            if lo2 > hi {
                break;
            }
            let adjacent = i.abs_diff(j) <= 1 || i.abs_diff(j) == n - 1;
            if adjacent {
                continue;
            }
            if segments_cross(ring[i], ring[(i + 1) % n], ring[j], ring[(j + 1) % n]) {
                out.push((i.min(j), i.max(j)));
            }
        }
    }
    out
}

pub fn polygon(ring: &[Pt]) -> Polygon<f64> {
    let coords: Vec<Coord<f64>> = ring.iter().map(|&(x, y)| Coord { x, y }).collect();
    Polygon::new(LineString::new(coords), vec![])
}

pub fn rect(x0: f64, x1: f64, y0: f64, y1: f64) -> Polygon<f64> {
    polygon(&[(x0, y0), (x1, y0), (x1, y1), (x0, y1)])
}

pub fn multi(p: Polygon<f64>) -> MultiPolygon<f64> {
    MultiPolygon::new(vec![p])
}

/// Unsigned area of a multipolygon including holes.
pub fn area(mp: &MultiPolygon<f64>) -> f64 {
    mp.0.iter()
        .map(|p| {
            let ext: Vec<Pt> = p.exterior().0.iter().map(|c| (c.x, c.y)).collect();
            let holes: f64 = p
                .interiors()
                .iter()
                .map(|h| shoelace(&h.0.iter().map(|c| (c.x, c.y)).collect::<Vec<_>>()).abs())
                .sum();
            shoelace(&ext).abs() - holes
        })
        .sum::<f64>()
        + 0.0
}

// The sweep in `geo` can panic on degenerate input; surface that as an error.
fn guarded(op: &str, f: impl FnOnce() -> MultiPolygon<f64>) -> Result<MultiPolygon<f64>> {
    std::panic::catch_unwind(std::panic::AssertUnwindSafe(f))
        .map_err(|_| Error::Geometry(format!("polygon {op} failed on degenerate input")))
}

pub fn union(a: &MultiPolygon<f64>, b: &MultiPolygon<f64>) -> Result<MultiPolygon<f64>> {
    guarded("union", || a.union(b))
}

pub fn intersection(a: &MultiPolygon<f64>, b: &MultiPolygon<f64>) -> Result<MultiPolygon<f64>> {
    guarded("intersection", || a.intersection(b))
}

pub fn difference(a: &MultiPolygon<f64>, b: &MultiPolygon<f64>) -> Result<MultiPolygon<f64>> {
    guarded("difference", || a.difference(b))
}

/// Exterior and hole rings of a multipolygon.
pub fn rings(mp: &MultiPolygon<f64>) -> Vec<Vec<Pt>> {
    let mut out = Vec::new();
    for p in &mp.0 {
        out.push(p.exterior().0.iter().map(|c| (c.x, c.y)).collect());
        for h in p.interiors() {
            out.push(h.0.iter().map(|c| (c.x, c.y)).collect());
        }
    }
    out
}
