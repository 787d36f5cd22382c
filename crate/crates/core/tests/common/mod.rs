#![allow(dead_code)]

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rand::Rng;

use ctxkit::qstate::{SiteBasis, StateVector};
use ctxkit::scenario::EmpiricalModel;

pub fn random_amplitudes<R: Rng>(rng: &mut R, n: usize) -> Vec<Complex64> {
    let v: Vec<Complex64> = (0..n)
        .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect();
    let norm = v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    v.into_iter().map(|a| a / norm).collect()
}

pub fn random_state<R: Rng>(rng: &mut R, dims: &[usize]) -> StateVector {
    let n = dims.iter().product();
    StateVector::new(dims.to_vec(), random_amplitudes(rng, n)).unwrap()
}

/// Gram-Schmidt on random complex vectors.
pub fn random_vectors<R: Rng>(rng: &mut R, dim: usize) -> Vec<Vec<Complex64>> {
    let mut out: Vec<Vec<Complex64>> = Vec::new();
    while out.len() < dim {
        let mut v = random_amplitudes(rng, dim);
        for u in &out {
            let ip: Complex64 = u.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
            for (x, y) in v.iter_mut().zip(u) {
                *x -= ip * y;
            }
        }
        let norm = v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm > 1e-3 {
            out.push(v.into_iter().map(|a| a / norm).collect());
        }
    }
    out
}

pub fn random_basis<R: Rng>(rng: &mut R, site: usize, dim: usize) -> SiteBasis {
    let labels = (0..dim).map(|k| k.to_string()).collect();
    SiteBasis::new(vec![site], random_vectors(rng, dim), labels).unwrap()
}

fn q(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

/// Solves a square rational system by Gauss-Jordan elimination.
fn solve(mut a: Vec<Vec<BigRational>>, mut b: Vec<BigRational>) -> Option<Vec<BigRational>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).find(|&r| !a[r][col].is_zero())?;
        a.swap(col, pivot);
        b.swap(col, pivot);
        let p = a[col][col].clone();
        for x in a[col].iter_mut() {
            *x = &*x / &p;
        }
        b[col] = &b[col] / &p;
        for r in 0..n {
            if r != col && !a[r][col].is_zero() {
                let f = a[r][col].clone();
                for k in 0..n {
                    let d = &f * &a[col][k];
                    a[r][k] = &a[r][k] - d;
                }
                b[r] = &b[r] - &f * &b[col];
            }
        }
    }
    Some(b)
}

/// Floating-point screen for [`solve`]; pivots below 1e-9 count as singular.
fn solve_f64(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))?;
        if a[pivot][col].abs() < 1e-9 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for r in 0..n {
            if r != col {
                let f = a[r][col] / a[col][col];
                for k in 0..n {
                    a[r][k] -= f * a[col][k];
                }
                b[r] -= f * b[col];
            }
        }
    }
    Some((0..n).map(|i| b[i] / a[i][i]).collect())
}

/// Every assignment of values to observables, lexicographic.
pub fn all_assignments(outcomes: &[usize]) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for &k in outcomes {
        out = out
            .into_iter()
            .flat_map(|v: Vec<usize>| {
                (0..k).map(move |x| {
                    let mut w = v.clone();
                    w.push(x);
                    w
                })
            })
            .collect();
    }
    out
}

pub struct Vertex {
    pub value: BigRational,
    pub weights: Vec<(Vec<usize>, BigRational)>,
}

/// Maximizes the total weight of a sub-distribution on global assignments
/// under the exact tables by visiting every vertex of the feasible region.
/// Returns the optimum and all optimal vertices.
pub fn ncf_by_vertices(model: &EmpiricalModel) -> (BigRational, Vec<Vertex>) {
    let sc = model.scenario();
    let exact = model.exact_tables().expect("exact tables");
    let outcomes: Vec<usize> = sc.observables().iter().map(|o| o.outcomes().len()).collect();
    let restrict = |g: &[usize], c: usize| -> usize {
        let digits: Vec<usize> = sc.contexts()[c].members().iter().map(|&m| g[m]).collect();
        sc.tuple_index(c, &digits)
    };
    // An assignment hitting a zero entry has weight zero.
    let vars: Vec<Vec<usize>> = all_assignments(&outcomes)
        .into_iter()
        .filter(|g| (0..sc.contexts().len()).all(|c| exact[c][restrict(g, c)].is_positive()))
        .collect();
    let k = vars.len();
    if k == 0 {
        return (
            q(0),
            vec![Vertex {
                value: q(0),
                weights: Vec::new(),
            }],
        );
    }
    // Rows: a·w <= b.
    let mut rows: Vec<(Vec<BigRational>, BigRational)> = Vec::new();
    for c in 0..sc.contexts().len() {
        for t in 0..sc.tuple_count(c) {
            if exact[c][t].is_positive() {
                let a = vars
                    .iter()
                    .map(|g| if restrict(g, c) == t { q(1) } else { q(0) })
                    .collect();
                rows.push((a, exact[c][t].clone()));
            }
        }
    }
    for i in 0..k {
        let a = (0..k).map(|j| if i == j { q(-1) } else { q(0) }).collect();
        rows.push((a, q(0)));
    }
    let rows_f64: Vec<(Vec<f64>, f64)> = rows
        .iter()
        .map(|(a, b)| {
            (
                a.iter().map(ctxkit::rational::to_f64).collect(),
                ctxkit::rational::to_f64(b),
            )
        })
        .collect();
    let mut best: Option<BigRational> = None;
    let mut vertices: Vec<Vertex> = Vec::new();
    let mut pick: Vec<usize> = (0..k).collect();
    loop {
        let af = pick.iter().map(|&r| rows_f64[r].0.clone()).collect();
        let bf = pick.iter().map(|&r| rows_f64[r].1).collect();
        let screened = solve_f64(af, bf).is_some_and(|w| {
            rows_f64
                .iter()
                .all(|(a, b)| a.iter().zip(&w).map(|(x, y)| x * y).sum::<f64>() <= b + 1e-6)
        });
        let a = pick.iter().map(|&r| rows[r].0.clone()).collect();
        let b = pick.iter().map(|&r| rows[r].1.clone()).collect();
        if let Some(w) = screened.then(|| solve(a, b)).flatten() {
            let feasible = rows.iter().all(|(a, b)| {
                let lhs = a.iter().zip(&w).fold(q(0), |s, (x, y)| s + x * y);
                lhs <= *b
            });
            if feasible {
                let value = w.iter().fold(q(0), |s, x| s + x);
                let weights: Vec<(Vec<usize>, BigRational)> =
                    vars.iter().cloned().zip(w).filter(|(_, x)| !x.is_zero()).collect();
                match &best {
                    Some(b) if value < *b => {}
                    Some(b) if value == *b => {
                        if !vertices.iter().any(|v| v.weights == weights) {
                            vertices.push(Vertex {
                                value: value.clone(),
                                weights,
                            });
                        }
                    }
                    _ => {
                        best = Some(value.clone());
                        vertices = vec![Vertex { value, weights }];
                    }
                }
            }
        }
        // next k-subset
        let n = rows.len();
        let mut i = k;
        loop {
            if i == 0 {
                return (best.expect("origin is a vertex"), vertices);
            }
            i -= 1;
            if pick[i] < n - k + i {
                break;
            }
        }
        pick[i] += 1;
        for j in i + 1..k {
            pick[j] = pick[j - 1] + 1;
        }
    }
}

pub fn one() -> BigRational {
    BigRational::one()
}

pub fn ratio(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}
