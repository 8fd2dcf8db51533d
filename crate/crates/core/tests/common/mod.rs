#![allow(dead_code)]

use nimpanel::panel::{Bank, Ownership, PanelDataset, PeriodStyle};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Solves `a x = b` by Gauss-Jordan elimination with partial pivoting.
pub fn gauss_jordan(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs())).unwrap();
        a.swap(c, p);
        b.swap(c, p);
        let d = a[c][c];
        assert!(d.abs() > 1e-14, "singular oracle system");
        for j in 0..n {
            a[c][j] /= d;
        }
        b[c] /= d;
        for r in 0..n {
            if r != c {
                let f = a[r][c];
                if f != 0.0 {
                    for j in 0..n {
                        a[r][j] -= f * a[c][j];
                    }
                    b[r] -= f * b[c];
                }
            }
        }
    }
    b
}

/// OLS through the normal equations. `x` is row-major.
pub fn normal_equations(x: &[Vec<f64>], y: &[f64]) -> Vec<f64> {
    let k = x[0].len();
    let mut xtx = vec![vec![0.0; k]; k];
    let mut xty = vec![0.0; k];
    for (row, yi) in x.iter().zip(y) {
        for a in 0..k {
            xty[a] += row[a] * yi;
            for b in 0..k {
                xtx[a][b] += row[a] * row[b];
            }
        }
    }
    gauss_jordan(xtx, xty)
}

pub fn ssr(x: &[Vec<f64>], y: &[f64], beta: &[f64]) -> f64 {
    x.iter()
        .zip(y)
        .map(|(r, yi)| {
            let f: f64 = r.iter().zip(beta).map(|(a, b)| a * b).sum();
            (yi - f).powi(2)
        })
        .sum()
}

/// Balanced panel with iid normal-ish columns `X1..Xk` and a dependent `Y`
/// that carries bank effects.
pub fn random_panel(seed: u64, n: usize, t: usize, k: usize) -> PanelDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cols: Vec<(String, Vec<f64>)> = (1..=k).map(|j| (format!("X{j}"), Vec::new())).collect();
    let mut y = Vec::new();
    for _ in 0..n {
        let mu: f64 = rng.gen_range(-1.0..1.0);
        for _ in 0..t {
            let mut v = 0.5 + mu;
            for (j, (_, c)) in cols.iter_mut().enumerate() {
                let x: f64 = rng.gen_range(-2.0..2.0) + 0.3 * mu;
                v += (j as f64 + 1.0) * 0.4 * x;
                c.push(x);
            }
            y.push(v + rng.gen_range(-1.0..1.0));
        }
    }
    cols.insert(0, ("Y".into(), y));
    build(n, t, cols)
}

pub fn build(n: usize, t: usize, cols: Vec<(String, Vec<f64>)>) -> PanelDataset {
    let banks = (1..=n)
        .map(|b| Bank { id: b.to_string(), ownership: Ownership::Private })
        .collect();
    PanelDataset::from_balanced(banks, (1..=t as i64).collect(), cols, PeriodStyle::Integer).unwrap()
}

pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

pub struct Design {
    pub n: usize,
    pub t: usize,
    pub y: Vec<f64>,
    pub x: Vec<Vec<f64>>,
}

impl Design {
    pub fn from(data: &PanelDataset, dep: &str, regs: &[&str]) -> Design {
        let y = data.column(dep).unwrap().to_vec();
        let cols: Vec<&[f64]> = regs.iter().map(|r| data.column(r).unwrap()).collect();
        let x = (0..y.len()).map(|i| cols.iter().map(|c| c[i]).collect()).collect();
        Design { n: data.n_banks(), t: data.n_periods(), y, x }
    }

    fn bank_mean(&self, v: &[f64], b: usize) -> f64 {
        v[b * self.t..(b + 1) * self.t].iter().sum::<f64>() / self.t as f64
    }

    fn column(&self, j: usize) -> Vec<f64> {
        self.x.iter().map(|r| r[j]).collect()
    }

    /// `v - theta * bank mean`.
    fn shrink(&self, v: &[f64], theta: f64) -> Vec<f64> {
        v.iter()
            .enumerate()
            .map(|(i, x)| x - theta * self.bank_mean(v, i / self.t))
            .collect()
    }

    /// Regressors then constant.
    pub fn pols(&self) -> Vec<f64> {
        let rows: Vec<Vec<f64>> = self.x.iter().map(|r| [r.as_slice(), &[1.0]].concat()).collect();
        normal_equations(&rows, &self.y)
    }

    /// Within slopes and a constant that fits the grand means.
    pub fn fe(&self) -> (Vec<f64>, f64) {
        let k = self.x[0].len();
        let cols: Vec<Vec<f64>> = (0..k).map(|j| self.shrink(&self.column(j), 1.0)).collect();
        let rows: Vec<Vec<f64>> = (0..self.y.len()).map(|i| cols.iter().map(|c| c[i]).collect()).collect();
        let yd = self.shrink(&self.y, 1.0);
        let mut beta = normal_equations(&rows, &yd);
        let s2 = ssr(&rows, &yd, &beta) / (self.y.len() - self.n - k) as f64;
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        let c = mean(&self.y) - (0..k).map(|j| beta[j] * mean(&self.column(j))).sum::<f64>();
        beta.push(c);
        (beta, s2)
    }

    /// Swamy-Arora GLS: regressors then constant, plus theta.
    pub fn re(&self) -> (Vec<f64>, f64) {
        let k = self.x[0].len();
        let (_, s2e) = self.fe();
        let ybar: Vec<f64> = (0..self.n).map(|b| self.bank_mean(&self.y, b)).collect();
        let xbar: Vec<Vec<f64>> = (0..self.n)
            .map(|b| {
                let mut r: Vec<f64> = (0..k).map(|j| self.bank_mean(&self.column(j), b)).collect();
                r.push(1.0);
                r
            })
            .collect();
        let bb = normal_equations(&xbar, &ybar);
        let s2b = ssr(&xbar, &ybar, &bb) / (self.n - k - 1) as f64;
        let s2mu = (s2b - s2e / self.t as f64).max(0.0);
        let theta = if s2mu == 0.0 { 0.0 } else { 1.0 - (s2e / (self.t as f64 * s2mu + s2e)).sqrt() };
        let cols: Vec<Vec<f64>> = (0..k).map(|j| self.shrink(&self.column(j), theta)).collect();
        let rows: Vec<Vec<f64>> = (0..self.y.len())
            .map(|i| {
                let mut r: Vec<f64> = cols.iter().map(|c| c[i]).collect();
                r.push(1.0 - theta);
                r
            })
            .collect();
        (normal_equations(&rows, &self.shrink(&self.y, theta)), theta)
    }
}

/// Just-identified difference GMM for a three-period AR(1): the only
/// equation is period 3 with the period-1 level as instrument.
pub fn iv_ratio(y: &[f64], n: usize) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for b in 0..n {
        let (y1, y2, y3) = (y[3 * b], y[3 * b + 1], y[3 * b + 2]);
        num += y1 * (y3 - y2);
        den += y1 * (y2 - y1);
    }
    num / den
}
