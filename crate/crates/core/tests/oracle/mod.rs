//! Independent reference computations for tests. Nothing here calls into
//! the library's numerical code.

#![allow(dead_code)]

use std::collections::BTreeMap;

/// Double-double number: `hi + lo` with `|lo| <= ulp(hi) / 2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };

    pub fn new(x: f64) -> Self {
        Dd { hi: x, lo: 0.0 }
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    pub fn add(self, o: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, o.hi);
        let (t, f) = two_sum(self.lo, o.lo);
        let (s, e) = quick_two_sum(s, e + t);
        let (hi, lo) = quick_two_sum(s, e + f);
        Dd { hi, lo }
    }

    pub fn neg(self) -> Dd {
        Dd { hi: -self.hi, lo: -self.lo }
    }

    pub fn sub(self, o: Dd) -> Dd {
        self.add(o.neg())
    }

    pub fn mul(self, o: Dd) -> Dd {
        let (p, e) = two_prod(self.hi, o.hi);
        let e = e + (self.hi * o.lo + self.lo * o.hi);
        let (hi, lo) = quick_two_sum(p, e);
        Dd { hi, lo }
    }

    pub fn div(self, o: Dd) -> Dd {
        let q1 = self.hi / o.hi;
        let r = self.sub(o.mul(Dd::new(q1)));
        let q2 = r.hi / o.hi;
        let r = r.sub(o.mul(Dd::new(q2)));
        let q3 = r.hi / o.hi;
        let (hi, lo) = quick_two_sum(q1, q2);
        Dd { hi, lo }.add(Dd::new(q3))
    }

    pub fn sqrt(self) -> Dd {
        if self.hi <= 0.0 {
            return Dd::ZERO;
        }
        // One Newton step from the double estimate.
        let x = Dd::new(self.hi.sqrt());
        x.add(self.sub(x.mul(x)).div(x.mul(Dd::new(2.0))))
    }

    pub fn abs(self) -> Dd {
        if self.hi < 0.0 {
            self.neg()
        } else {
            self
        }
    }
}

fn dd_matrix(n: usize, m: usize) -> Vec<Vec<Dd>> {
    vec![vec![Dd::ZERO; m]; n]
}

/// `X'X` and `X'y` accumulated in double-double. `x` is row-major.
pub fn normal_equations(x: &[Vec<f64>], y: &[f64]) -> (Vec<Vec<Dd>>, Vec<Dd>) {
    let k = x.first().map_or(0, Vec::len);
    let mut a = dd_matrix(k, k);
    let mut b = vec![Dd::ZERO; k];
    for (row, &yi) in x.iter().zip(y) {
        for i in 0..k {
            b[i] = b[i].add(Dd::new(row[i]).mul(Dd::new(yi)));
            for j in 0..k {
                a[i][j] = a[i][j].add(Dd::new(row[i]).mul(Dd::new(row[j])));
            }
        }
    }
    (a, b)
}

/// Gauss-Jordan inverse with partial pivoting, in double-double.
pub fn dd_inverse(a: &[Vec<Dd>]) -> Vec<Vec<Dd>> {
    let k = a.len();
    let mut m: Vec<Vec<Dd>> = a.to_vec();
    let mut inv = dd_matrix(k, k);
    for (i, row) in inv.iter_mut().enumerate() {
        row[i] = Dd::new(1.0);
    }
    for c in 0..k {
        let p = (c..k)
            .max_by(|&i, &j| m[i][c].abs().to_f64().total_cmp(&m[j][c].abs().to_f64()))
            .unwrap();
        m.swap(c, p);
        inv.swap(c, p);
        let piv = m[c][c];
        for j in 0..k {
            m[c][j] = m[c][j].div(piv);
            inv[c][j] = inv[c][j].div(piv);
        }
        for r in 0..k {
            if r == c {
                continue;
            }
            let f = m[r][c];
            if f.hi == 0.0 {
                continue;
            }
            for j in 0..k {
                m[r][j] = m[r][j].sub(f.mul(m[c][j]));
                inv[r][j] = inv[r][j].sub(f.mul(inv[c][j]));
            }
        }
    }
    inv
}

/// OLS coefficients by solving the normal equations in double-double.
pub fn ols_normal_equations(x: &[Vec<f64>], y: &[f64]) -> Vec<f64> {
    let (a, b) = normal_equations(x, y);
    let inv = dd_inverse(&a);
    inv.iter()
        .map(|row| {
            row.iter()
                .zip(&b)
                .fold(Dd::ZERO, |acc, (r, bi)| acc.add(r.mul(*bi)))
                .to_f64()
        })
        .collect()
}

/// `(X'X)^{-1} [Σ_{i,j in same cluster} x_i x_j' e_i e_j] (X'X)^{-1}`
/// evaluated term by term, times the optional CR1 factor.
pub fn brute_sandwich(x: &[Vec<f64>], e: &[f64], clusters: &[&str], cr1: bool) -> Vec<Vec<f64>> {
    let n = x.len();
    let k = x[0].len();
    let (xtx, _) = normal_equations(x, &vec![0.0; n]);
    let bread = dd_inverse(&xtx);
    let mut meat = dd_matrix(k, k);
    for i in 0..n {
        for j in 0..n {
            if clusters[i] != clusters[j] {
                continue;
            }
            let w = Dd::new(e[i]).mul(Dd::new(e[j]));
            for a in 0..k {
                for b in 0..k {
                    let t = Dd::new(x[i][a]).mul(Dd::new(x[j][b])).mul(w);
                    meat[a][b] = meat[a][b].add(t);
                }
            }
        }
    }
    let mul = |p: &[Vec<Dd>], q: &[Vec<Dd>]| {
        let mut out = dd_matrix(k, k);
        for a in 0..k {
            for b in 0..k {
                let mut s = Dd::ZERO;
                for c in 0..k {
                    s = s.add(p[a][c].mul(q[c][b]));
                }
                out[a][b] = s;
            }
        }
        out
    };
    let v = mul(&mul(&bread, &meat), &bread);
    let g = clusters.iter().collect::<std::collections::BTreeSet<_>>().len() as f64;
    let factor = if cr1 {
        (g / (g - 1.0)) * ((n as f64 - 1.0) / (n as f64 - k as f64))
    } else {
        1.0
    };
    v.iter()
        .map(|row| row.iter().map(|d| d.to_f64() * factor).collect())
        .collect()
}

/// HC0: White's heteroskedasticity-robust covariance.
pub fn hc0(x: &[Vec<f64>], e: &[f64]) -> Vec<Vec<f64>> {
    let ids: Vec<String> = (0..x.len()).map(|i| i.to_string()).collect();
    let refs: Vec<&str> = ids.iter().map(String::as_str).collect();
    brute_sandwich(x, e, &refs, false)
}

/// ln Γ(x) for x > 0 by upward recurrence and the Stirling series.
pub fn ln_gamma(mut x: f64) -> f64 {
    let mut shift = 0.0;
    while x < 15.0 {
        shift -= x.ln();
        x += 1.0;
    }
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    let series = inv
        * (1.0 / 12.0
            - inv2 * (1.0 / 360.0 - inv2 * (1.0 / 1260.0 - inv2 * (1.0 / 1680.0 - inv2 / 1188.0))));
    shift + (x - 0.5) * x.ln() - x + 0.5 * (2.0 * std::f64::consts::PI).ln() + series
}

/// Student-t CDF by composite Simpson integration of the density after the
/// substitution `t = sqrt(nu) tan(theta)`, which gives the integrand
/// `c cos^{nu-1}(theta)` on a finite interval.
pub fn t_cdf_simpson(t: f64, nu: f64) -> f64 {
    let c = (ln_gamma((nu + 1.0) / 2.0) - ln_gamma(nu / 2.0)).exp() / std::f64::consts::PI.sqrt();
    let upper = (t / nu.sqrt()).atan();
    let f = |th: f64| th.cos().powf(nu - 1.0);
    let m = 20_000usize;
    let h = upper / m as f64;
    let mut s = f(0.0) + f(upper);
    for i in 1..m {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(i as f64 * h);
    }
    0.5 + c * s * h / 3.0
}

pub fn t_quantile_oracle(p: f64, nu: f64) -> f64 {
    let (mut lo, mut hi) = (-1e3, 1e3);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if t_cdf_simpson(mid, nu) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Robustness value from the closed form, in double-double.
pub fn rho_dd(t: f64, nu: f64) -> f64 {
    let t2 = Dd::new(t).mul(Dd::new(t));
    let nu = Dd::new(nu);
    let disc = t2.mul(t2).add(Dd::new(4.0).mul(nu).mul(t2)).sqrt();
    disc.sub(t2).div(Dd::new(2.0).mul(nu)).to_f64()
}

/// Exact-rational excess on a tiny panel given as `(referee, team, y)` rows.
pub fn excess_direct(rows: &[(&str, &str, f64)]) -> BTreeMap<(String, String), f64> {
    let mean = |pred: &dyn Fn(&(&str, &str, f64)) -> bool| {
        let v: Vec<f64> = rows.iter().filter(|r| pred(r)).map(|r| r.2).collect();
        v.iter().sum::<f64>() / v.len() as f64
    };
    let m = mean(&|_| true);
    let mut out = BTreeMap::new();
    for (r, t, _) in rows {
        let key = (r.to_string(), t.to_string());
        if out.contains_key(&key) {
            continue;
        }
        let y = mean(&|x| x.0 == *r && x.1 == *t);
        let a = mean(&|x| x.0 == *r);
        let b = mean(&|x| x.1 == *t);
        out.insert(key, y - (a + b - m));
    }
    out
}
