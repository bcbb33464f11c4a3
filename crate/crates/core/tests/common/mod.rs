//! Independent reference computations and shared scenarios for the
//! integration tests. Nothing here calls the library's linear algebra.

#![allow(dead_code)]

use rank1_agc::agc::{AreaSpec, GeneratorSpec, NetworkSpec, TieLine};

pub type Dense = Vec<Vec<f64>>;

/// Characteristic polynomial `det(λI − A) = λⁿ + c₁λⁿ⁻¹ + … + cₙ` by
/// Faddeev–LeVerrier; returns `[1, c₁, …, cₙ]`.
pub fn char_poly(a: &Dense) -> Vec<f64> {
    let n = a.len();
    let mut coeffs = vec![1.0];
    let mut m = vec![vec![0.0; n]; n];
    for k in 1..=n {
        let c_prev = coeffs[k - 1];
        for (i, row) in m.iter_mut().enumerate() {
            row[i] += c_prev;
        }
        let am: Dense = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| (0..n).map(|l| a[i][l] * m[l][j]).sum())
                    .collect()
            })
            .collect();
        let tr: f64 = (0..n).map(|i| am[i][i]).sum();
        coeffs.push(-tr / k as f64);
        m = am;
    }
    coeffs
}

/// Routh–Hurwitz test on `p(λ) = Σ pᵢλⁿ⁻ⁱ` with `p₀ > 0`. `None` when a
/// zero pivot makes the test inconclusive.
pub fn routh_hurwitz(p: &[f64]) -> Option<bool> {
    let n = p.len() - 1;
    if n == 0 {
        return Some(true);
    }
    let mut r0: Vec<f64> = p.iter().step_by(2).copied().collect();
    let mut r1: Vec<f64> = p.iter().skip(1).step_by(2).copied().collect();
    let mut first = vec![r0[0]];
    for _ in 0..n {
        let lead = *r1.first()?;
        first.push(lead);
        if lead == 0.0 {
            return None;
        }
        let mut next = Vec::new();
        for j in 0..r0.len().saturating_sub(1) {
            let a = r0.get(j + 1).copied().unwrap_or(0.0);
            let b = r1.get(j + 1).copied().unwrap_or(0.0);
            next.push((lead * a - r0[0] * b) / lead);
        }
        r0 = r1;
        r1 = next;
        if r1.is_empty() {
            break;
        }
    }
    Some(first.iter().all(|&v| v > 0.0))
}

/// Coefficients of `p(λ + s)`.
pub fn shift_poly(p: &[f64], s: f64) -> Vec<f64> {
    // Horner-style Taylor shift.
    let mut q = p.to_vec();
    let n = q.len();
    for i in 0..n {
        for j in 1..n - i {
            q[j] += s * q[j - 1];
        }
    }
    q
}

/// Spectral abscissa `max Re λ(A)` by bisection on the shift `s` using the
/// Routh test of `p(λ + s)`.
pub fn spectral_abscissa(a: &Dense) -> f64 {
    let p = char_poly(a);
    let bound: f64 = 1.0 + a.iter().flatten().map(|v| v.abs()).sum::<f64>();
    let stable_at = |s: f64| routh_hurwitz(&shift_poly(&p, s)).unwrap_or(false);
    let (mut lo, mut hi) = (-bound, bound);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if stable_at(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo < 1e-13 * bound {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Number of eigenvalues of symmetric `a` below `lambda` (Sylvester inertia
/// of `A − λI` via unpivoted LDLᵀ).
pub fn count_below(a: &Dense, lambda: f64) -> usize {
    let n = a.len();
    let mut m: Dense = a.clone();
    for (i, row) in m.iter_mut().enumerate() {
        row[i] -= lambda;
    }
    let mut neg = 0;
    for k in 0..n {
        let mut piv = m[k][k];
        if piv == 0.0 {
            piv = -1e-300;
        }
        if piv < 0.0 {
            neg += 1;
        }
        for i in k + 1..n {
            let f = m[i][k] / piv;
            for j in k + 1..n {
                m[i][j] -= f * m[k][j];
            }
        }
    }
    neg
}

/// All eigenvalues of symmetric `a`, ascending, by inertia bisection.
pub fn sym_eigs_bisect(a: &Dense) -> Vec<f64> {
    let n = a.len();
    let r: f64 = a
        .iter()
        .map(|row| row.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
        + 1.0;
    (0..n)
        .map(|k| {
            let (mut lo, mut hi) = (-r, r);
            while hi - lo > 1e-14 * r {
                let mid = 0.5 * (lo + hi);
                if count_below(a, mid) > k {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            0.5 * (lo + hi)
        })
        .collect()
}

pub fn generator(alpha: f64, lo: f64, hi: f64, droop: f64) -> GeneratorSpec {
    GeneratorSpec {
        droop_r: droop,
        turbine_tc: 0.5,
        base_setpoint: 0.5,
        lower: 0.5 + lo,
        upper: 0.5 + hi,
        participation: alpha,
        in_agc: true,
    }
}

/// Area with two AGC units (default droop 0.05 × units) and damping 1.
pub fn area(load_dev: f64, bias_scale: f64, tau: f64) -> AreaSpec {
    let gens = vec![
        generator(0.6, -0.4, 0.4, 0.1),
        generator(0.4, -0.3, 0.3, 0.1),
    ];
    let mut a = AreaSpec {
        name: String::new(),
        inertia_m: 10.0,
        load_damping: 1.0,
        generators: gens,
        bias_b: 1.0,
        agc_tc: tau,
        sched_freq: 60.0,
        load_dev,
    };
    a.bias_b = bias_scale * a.beta();
    a
}

/// Areas on a chain plus, for three or more, a closing tie.
pub fn network(areas: Vec<AreaSpec>) -> NetworkSpec {
    let n = areas.len();
    let mut ties: Vec<TieLine> = (1..n)
        .map(|k| TieLine {
            from: k - 1,
            to: k,
            stiffness_t: 2.0,
        })
        .collect();
    if n >= 3 {
        ties.push(TieLine {
            from: n - 1,
            to: 0,
            stiffness_t: 1.0,
        });
    }
    NetworkSpec::new(areas, ties, vec![0.0; n], 1.0).expect("valid scenario")
}

pub fn two_area(tau: f64) -> NetworkSpec {
    network(vec![area(0.15, 1.0, tau), area(-0.05, 0.7, tau)])
}

pub fn three_area(tau: f64) -> NetworkSpec {
    network(vec![
        area(0.1, 1.5, tau),
        area(-0.08, 0.8, tau),
        area(0.2, 1.0, tau),
    ])
}
