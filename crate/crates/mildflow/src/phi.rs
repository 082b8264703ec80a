//! Exponential moments for the Duhamel quadrature.
//!
//! Within a solve window the nonlinearity is interpolated by the polynomial
//! through its values at the window nodes, and the integral
//! int_0^t exp(-(t-s) lambda) N(s) ds is evaluated exactly for that
//! interpolant using phi-functions, so the stiff exponential factor carries
//! no quadrature error. phi_j(w) = sum_{i>=0} w^i / (i+j)!.

/// phi_1(w) .. phi_q(w) for real w <= 0.
///
/// Series summation for small |w| (no cancellation: terms decay at least
/// geometrically with ratio |w|/(j+1)), upward recurrence from exp(w) for
/// large |w| where the subtraction phi_j - 1/j! is well separated.
pub fn phi_vector(w: f64, q: usize) -> Vec<f64> {
    debug_assert!(w <= 0.0);
    let mut out = vec![0.0; q];
    if w.abs() <= 8.0 {
        for (j_idx, slot) in out.iter_mut().enumerate() {
            let j = j_idx + 1;
            let mut term = 1.0 / factorial(j);
            let mut sum = term;
            for i in 1..80 {
                term *= w / (i + j) as f64;
                sum += term;
                if term.abs() < 1e-22 * sum.abs().max(1e-300) {
                    break;
                }
            }
            *slot = sum;
        }
    } else {
        let mut prev = w.exp(); // phi_0
        for (j_idx, slot) in out.iter_mut().enumerate() {
            let j = j_idx; // phi_{j+1} = (phi_j - 1/j!)/w
            let cur = (prev - 1.0 / factorial(j)) / w;
            *slot = cur;
            prev = cur;
        }
    }
    out
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product::<f64>().max(1.0)
}

/// Quadrature weights `W[i][j] = int_0^(t_i) exp(-(t_i - s) lambda) l_j(s) ds`
/// for the Lagrange cardinals l_j on the window nodes, tabulated per integer
/// |k|^2 so every spectral mode reuses its row.
pub struct ExpQuadrature {
    q: usize,
    /// weights[k2 * q * q + i * q + j]
    weights: Vec<f64>,
}

impl ExpQuadrature {
    /// `theta`: normalized node positions in [0, 1] (first must be 0, last 1,
    /// strictly increasing). `h`: window length. `lambda_scale`: physical
    /// |k|^2 per integer |k_int|^2. `k2_max`: largest integer |k_int|^2.
    pub fn new(theta: &[f64], h: f64, lambda_scale: f64, k2_max: usize) -> Self {
        let q = theta.len();
        assert!(q >= 2, "need at least two window nodes");
        let mono = lagrange_monomial_coeffs(theta);
        let mut weights = vec![0.0; (k2_max + 1) * q * q];
        let mut fact = vec![1.0; q];
        for m in 1..q {
            fact[m] = fact[m - 1] * m as f64;
        }
        for k2 in 0..=k2_max {
            let z = h * lambda_scale * k2 as f64;
            for (i, &th) in theta.iter().enumerate() {
                let base = k2 * q * q + i * q;
                if th == 0.0 {
                    continue; // integral over an empty interval
                }
                let phis = phi_vector(-z * th, q);
                // moments I_m = th^{m+1} m! phi_{m+1}(-z th)
                let mut moment = vec![0.0; q];
                let mut th_pow = th;
                for m in 0..q {
                    moment[m] = th_pow * fact[m] * phis[m];
                    th_pow *= th;
                }
                for j in 0..q {
                    let mut w = 0.0;
                    for m in 0..q {
                        w += mono[j][m] * moment[m];
                    }
                    weights[base + j] = h * w;
                }
            }
        }
        Self { q, weights }
    }

    /// Weight row for output node `i`, quadrature node `j`, integer |k|^2.
    #[inline]
    pub fn weight(&self, k2: usize, i: usize, j: usize) -> f64 {
        self.weights[k2 * self.q * self.q + i * self.q + j]
    }
}

/// Chebyshev-Lobatto nodes on [0, 1], endpoints included.
pub fn lobatto_nodes(q: usize) -> Vec<f64> {
    assert!(q >= 2);
    (0..q)
        .map(|j| 0.5 * (1.0 - (std::f64::consts::PI * j as f64 / (q - 1) as f64).cos()))
        .map(|x| x.clamp(0.0, 1.0))
        .collect()
}

/// Monomial coefficients a[j][m] of the Lagrange cardinal polynomials:
/// l_j(x) = sum_m a[j][m] x^m with l_j(theta_i) = delta_ij.
fn lagrange_monomial_coeffs(theta: &[f64]) -> Vec<Vec<f64>> {
    let q = theta.len();
    // solve V a_j = e_j with V[i][m] = theta_i^m, by LU with partial pivoting
    let mut v = vec![vec![0.0f64; q]; q];
    for (i, &th) in theta.iter().enumerate() {
        let mut p = 1.0;
        for m in 0..q {
            v[i][m] = p;
            p *= th;
        }
    }
    // augmented with identity, invert
    let mut aug: Vec<Vec<f64>> = v
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..q).map(|c| if c == i { 1.0 } else { 0.0 }));
            r
        })
        .collect();
    for col in 0..q {
        let piv = (col..q)
            .max_by(|&a, &b| aug[a][col].abs().partial_cmp(&aug[b][col].abs()).unwrap())
            .unwrap();
        aug.swap(col, piv);
        let p = aug[col][col];
        for x in aug[col].iter_mut() {
            *x /= p;
        }
        for r in 0..q {
            if r != col {
                let f = aug[r][col];
                if f != 0.0 {
                    for c in 0..2 * q {
                        let sub = f * aug[col][c];
                        aug[r][c] -= sub;
                    }
                }
            }
        }
    }
    // inverse columns -> a[j][m] = inv[m][j]
    (0..q)
        .map(|j| (0..q).map(|m| aug[m][q + j]).collect())
        .collect()
}

/// Barycentric weights for polynomial interpolation through `nodes`.
pub fn barycentric_weights(nodes: &[f64]) -> Vec<f64> {
    let q = nodes.len();
    let mut w = vec![1.0f64; q];
    for j in 0..q {
        for m in 0..q {
            if m != j {
                w[j] /= nodes[j] - nodes[m];
            }
        }
    }
    w
}

/// Evaluate the interpolant of (nodes, values) at x. Exact node hits return
/// the node value.
pub fn barycentric_eval(nodes: &[f64], weights: &[f64], values: &[f64], x: f64) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for ((&n, &w), &v) in nodes.iter().zip(weights).zip(values) {
        let dx = x - n;
        if dx == 0.0 {
            return v;
        }
        let c = w / dx;
        num += c * v;
        den += c;
    }
    num / den
}

/// Interpolation coefficients c_j such that p(x) = sum_j c_j values_j.
pub fn barycentric_coeffs(nodes: &[f64], weights: &[f64], x: f64) -> Vec<f64> {
    let q = nodes.len();
    let mut c = vec![0.0; q];
    for (j, &n) in nodes.iter().enumerate() {
        if x == n {
            c[j] = 1.0;
            return c;
        }
    }
    let mut den = 0.0;
    for (j, (&n, &w)) in nodes.iter().zip(weights).enumerate() {
        c[j] = w / (x - n);
        den += c[j];
    }
    for v in &mut c {
        *v /= den;
    }
    c
}
