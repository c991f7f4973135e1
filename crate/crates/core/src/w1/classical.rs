//! Exact classical W1 distance with Hamming cost.

use crate::error::{Error, Result};

const DIST_TOL: f64 = 1e-9;
const FLOW_EPS: f64 = 1e-15;

fn validate(p: &[f64], name: &str) -> Result<()> {
    if p.iter().any(|x| !x.is_finite() || *x < -DIST_TOL) {
        return Err(Error::InvalidDistribution(format!("{name} has a negative or non-finite entry")));
    }
    let s: f64 = p.iter().sum();
    if (s - 1.0).abs() > DIST_TOL {
        return Err(Error::InvalidDistribution(format!("{name} sums to {s}")));
    }
    Ok(())
}

/// Number of sites `n` with `d^n = len`.
fn sites_for(len: usize, d: usize) -> Result<usize> {
    let mut n = 0;
    let mut m = 1usize;
    while m < len {
        m *= d;
        n += 1;
    }
    if m != len || n == 0 {
        return Err(Error::InvalidDistribution(format!("length {len} is not a positive power of {d}")));
    }
    Ok(n)
}

struct Arc {
    to: usize,
    cap: f64,
    cost: f64,
}

/// `min_π Σ π(x, y) d_H(x, y)` over couplings of `p` and `q` on `[d]^n`
/// (words in register order, first site most significant). Solved as a
/// min-cost flow on the Hamming graph by successive shortest paths.
pub fn classical_w1_oracle(p: &[f64], q: &[f64], d: usize) -> Result<f64> {
    if d < 2 {
        return Err(Error::InvalidArgument(format!("local dimension {d} < 2")));
    }
    if p.len() != q.len() {
        return Err(Error::DimensionMismatch { expected: p.len(), got: q.len() });
    }
    let n = sites_for(p.len(), d)?;
    validate(p, "p")?;
    validate(q, "q")?;
    let len = p.len();
    let (src, snk) = (len, len + 1);
    let mut arcs: Vec<Arc> = Vec::new();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); len + 2];
    let add = |arcs: &mut Vec<Arc>, adj: &mut Vec<Vec<usize>>, a: usize, b: usize, cap: f64, cost: f64| {
        adj[a].push(arcs.len());
        arcs.push(Arc { to: b, cap, cost });
        adj[b].push(arcs.len());
        arcs.push(Arc { to: a, cap: 0.0, cost: -cost });
    };
    let mut stride = 1;
    for _ in 0..n {
        for x in 0..len {
            let digit = (x / stride) % d;
            for k in 0..d {
                if k != digit {
                    let y = x - digit * stride + k * stride;
                    add(&mut arcs, &mut adj, x, y, f64::INFINITY, 1.0);
                }
            }
        }
        stride *= d;
    }
    let mut need = 0.0;
    for x in 0..len {
        let e = p[x].max(0.0) - q[x].max(0.0);
        if e > 0.0 {
            add(&mut arcs, &mut adj, src, x, e, 0.0);
            need += e;
        } else if e < 0.0 {
            add(&mut arcs, &mut adj, x, snk, -e, 0.0);
        }
    }
    let nodes = len + 2;
    let mut total = 0.0;
    let mut sent = 0.0;
    while need - sent > FLOW_EPS {
        // Bellman-Ford on the residual graph
        let mut dist = vec![f64::INFINITY; nodes];
        let mut via = vec![usize::MAX; nodes];
        dist[src] = 0.0;
        for _ in 0..nodes {
            let mut changed = false;
            for a in 0..nodes {
                if dist[a].is_infinite() {
                    continue;
                }
                for &ai in &adj[a] {
                    let arc = &arcs[ai];
                    if arc.cap > FLOW_EPS && dist[a] + arc.cost < dist[arc.to] - 1e-12 {
                        dist[arc.to] = dist[a] + arc.cost;
                        via[arc.to] = ai;
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
        if dist[snk].is_infinite() {
            break;
        }
        let mut push = f64::INFINITY;
        let mut v = snk;
        while v != src {
            let ai = via[v];
            push = push.min(arcs[ai].cap);
            v = arcs[ai ^ 1].to;
        }
        let mut v = snk;
        while v != src {
            let ai = via[v];
            arcs[ai].cap -= push;
            arcs[ai ^ 1].cap += push;
            v = arcs[ai ^ 1].to;
        }
        total += push * dist[snk];
        sent += push;
    }
    Ok(total)
}
