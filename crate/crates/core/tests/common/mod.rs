//! Independent oracles: tanh-sinh quadrature against Beta densities.
#![allow(dead_code)]

use std::f64::consts::PI;

/// One quadrature node on (0, 1), with both logs computed without
/// cancellation near the endpoints.
#[derive(Debug, Clone, Copy)]
pub struct Node {
    pub x: f64,
    pub omx: f64,
    pub ln_x: f64,
    pub ln_omx: f64,
}

const STEP: f64 = 1.0 / 64.0;
const T_MAX: f64 = 4.5;

fn nodes() -> impl Iterator<Item = (Node, f64)> {
    let k = (T_MAX / STEP) as i64;
    (-k..=k).map(|i| {
        let t = i as f64 * STEP;
        let u = PI * t.sinh();
        let ln_x = -(-u).exp().ln_1p();
        let ln_omx = -u.exp().ln_1p();
        let node = Node {
            x: ln_x.exp(),
            omx: ln_omx.exp(),
            ln_x,
            ln_omx,
        };
        // dx/dt = x (1 − x) π cosh t
        (node, PI * t.cosh())
    })
}

/// E[f(X)] for X ~ Be(a, b). The density is normalized by the same rule,
/// so no beta function is needed.
pub fn beta_expect(a: f64, b: f64, f: impl Fn(&Node) -> f64) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for (node, jac) in nodes() {
        let w = (a * node.ln_x + b * node.ln_omx).exp() * jac;
        if w == 0.0 {
            continue;
        }
        num += w * f(&node);
        den += w;
    }
    num / den
}

/// d(p ‖ q) from the logs of both arguments.
pub fn bern_kl(p: &Node, q: &Node) -> f64 {
    p.x * (p.ln_x - q.ln_x) + p.omx * (p.ln_omx - q.ln_omx)
}

/// Conditional moments of d(X ‖ v) for X ~ Be(1, θ):
/// (E d, E d², E[(1 − X) d]).
pub fn divergence_moments(theta: f64, v: &Node) -> (f64, f64, f64) {
    let m1 = beta_expect(1.0, theta, |x| bern_kl(x, v));
    let m2 = beta_expect(1.0, theta, |x| bern_kl(x, v).powi(2));
    let c = beta_expect(1.0, theta, |x| x.omx * bern_kl(x, v));
    (m1, m2, c)
}

/// Variance of Σ_n T_{n−1} d(v_n ‖ v) with v ~ Be(a, b) independent of the
/// Be(1, θ) lengths, by conditioning on v.
pub fn oracle_variance_uncoupled(theta: f64, a: f64, b: f64) -> f64 {
    let second = beta_expect(a, b, |v| {
        let (m1, m2, c) = divergence_moments(theta, v);
        (theta + 2.0) / 2.0 * (m2 + 2.0 * (theta + 1.0) * c * m1)
    });
    let mean = beta_expect(a, b, |v| (theta + 1.0) * divergence_moments(theta, v).0);
    second - mean * mean
}

/// Same with v = v₁: the series is (1 − v₁) times a fresh uncoupled series.
pub fn oracle_variance_coupled(theta: f64) -> (f64, f64) {
    let second = beta_expect(1.0, theta, |v| {
        let (m1, m2, c) = divergence_moments(theta, v);
        v.omx * v.omx * (theta + 2.0) / 2.0 * (m2 + 2.0 * (theta + 1.0) * c * m1)
    });
    let mean = beta_expect(1.0, theta, |v| v.omx * (theta + 1.0) * divergence_moments(theta, v).0);
    (mean, second - mean * mean)
}

/// E Σ_n (1 − v)^{n−1} d(v ‖ v_n) = E[d̄(v) / v] with v ~ Be(a, b).
pub fn oracle_reversed_mean(a: f64, b: f64, theta: f64) -> f64 {
    let l1 = beta_expect(1.0, theta, |x| x.ln_x);
    let l2 = beta_expect(1.0, theta, |x| x.ln_omx);
    beta_expect(a, b, |v| {
        (v.x * v.ln_x + v.omx * v.ln_omx - v.x * l1 - v.omx * l2) / v.x
    })
}
