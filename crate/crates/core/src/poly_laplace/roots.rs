//! Polynomial roots via companion-matrix eigenvalues.
//!
//! Eigenvalues of the balanced companion matrix give all roots at once and
//! are refined together by Aberth iteration with extended-precision
//! evaluation, which keeps close but distinct roots apart. Repeated roots
//! scatter into a small circle under rounding (radius roughly `eps^(1/m)`),
//! so clusters are detected and merged: a cluster is accepted as an `m`-fold
//! root when the first `m` Taylor coefficients of the polynomial at the
//! cluster centroid vanish to within rounding and the merged root fits the
//! polynomial no worse than its members.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::dd::horner;
use super::Polynomial;
use crate::error::{Error, Result};

/// Clusters tighter than this (after scaling) are always merged.
pub const CLUSTER_TOL: f64 = 1e-7;

/// Taylor coefficients below `MULTIPLICITY_ULPS * degree * eps` times their
/// rounding scale count as zero in the multiplicity test.
const MULTIPLICITY_ULPS: f64 = 100.0;

const ABERTH_ITERATIONS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Root {
    pub value: Complex64,
    pub multiplicity: usize,
}

/// All complex roots of `p` with multiplicities.
///
/// The returned list is conjugate-closed: every root with nonzero imaginary
/// part has its exact conjugate in the list with equal multiplicity.
pub fn roots(p: &Polynomial) -> Result<Vec<Root>> {
    if p.degree() == 0 {
        return Err(Error::ConstantPolynomial);
    }
    let lead = p.leading();
    let monic: Vec<f64> = p.coeffs().iter().map(|c| c / lead).collect();

    let zero_mult = monic.iter().take_while(|&&c| c == 0.0).count();
    let reduced = Polynomial::new(monic[zero_mult..].to_vec());
    let mut out = Vec::new();
    if zero_mult > 0 {
        out.push(Root {
            value: Complex64::new(0.0, 0.0),
            multiplicity: zero_mult,
        });
    }
    if reduced.degree() == 0 {
        return Ok(out);
    }

    let raw = companion_eigenvalues(&reduced)?;
    let refined = aberth(&reduced, raw.clone());
    let clusters = cluster(&reduced, &raw, &refined);
    out.extend(conjugate_close(clusters));
    out.sort_by(|a, b| {
        a.value
            .re
            .partial_cmp(&b.value.re)
            .unwrap()
            .then(a.value.im.partial_cmp(&b.value.im).unwrap())
    });
    Ok(out)
}

/// Roots expanded by multiplicity.
pub fn roots_flat(p: &Polynomial) -> Result<Vec<Complex64>> {
    Ok(roots(p)?
        .into_iter()
        .flat_map(|r| std::iter::repeat_n(r.value, r.multiplicity))
        .collect())
}

fn companion_eigenvalues(p: &Polynomial) -> Result<Vec<Complex64>> {
    let c = p.coeffs();
    let n = p.degree();
    let lead = p.leading();
    if n == 1 {
        return Ok(vec![Complex64::new(-c[0] / lead, 0.0)]);
    }
    if n == 2 {
        return Ok(quadratic(c[2], c[1], c[0]).to_vec());
    }
    let mut m = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        m[(0, i)] = -c[n - 1 - i] / lead;
    }
    for i in 1..n {
        m[(i, i - 1)] = 1.0;
    }
    balance(&mut m);
    let eig = m.complex_eigenvalues();
    let vals: Vec<Complex64> = eig.iter().copied().collect();
    if vals.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Numerical("eigenvalue iteration did not converge".into()));
    }
    Ok(vals)
}

/// Simultaneous Aberth-Ehrlich refinement of all root estimates. Falls back
/// to the input if the iteration produces non-finite values.
fn aberth(p: &Polynomial, start: Vec<Complex64>) -> Vec<Complex64> {
    let n = start.len();
    if n < 2 {
        return start;
    }
    let dp = p.derivative();
    let mut z = start.clone();
    // exact duplicates would make the repulsion term singular
    for j in 1..n {
        while z[..j].contains(&z[j]) {
            let nudge = Complex64::new(0.0, 1e-12 * (1.0 + z[j].norm()));
            z[j] += nudge;
        }
    }
    for _ in 0..ABERTH_ITERATIONS {
        let mut largest = 0.0f64;
        for j in 0..n {
            let pz = horner(p.coeffs(), z[j]);
            if pz.norm() == 0.0 {
                continue;
            }
            let ratio = pz / horner(dp.coeffs(), z[j]);
            let repulsion: Complex64 = (0..n).filter(|&k| k != j).map(|k| 1.0 / (z[j] - z[k])).sum();
            let step = ratio / (1.0 - ratio * repulsion);
            if !step.re.is_finite() || !step.im.is_finite() {
                continue;
            }
            z[j] -= step;
            largest = largest.max(step.norm() / (1.0 + z[j].norm()));
        }
        if largest <= 4.0 * f64::EPSILON {
            break;
        }
    }
    if z.iter().all(|w| w.re.is_finite() && w.im.is_finite()) {
        z
    } else {
        start
    }
}

fn quadratic(a: f64, b: f64, c: f64) -> [Complex64; 2] {
    let disc = b * b - 4.0 * a * c;
    if disc >= 0.0 {
        let s = disc.sqrt();
        // stable form: avoid cancellation in -b ± s
        let q = -0.5 * (b + b.signum() * s);
        if q == 0.0 {
            return [Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)];
        }
        let r1 = q / a;
        let r2 = c / q;
        [Complex64::new(r1, 0.0), Complex64::new(r2, 0.0)]
    } else {
        let re = -b / (2.0 * a);
        let im = (-disc).sqrt() / (2.0 * a.abs());
        [Complex64::new(re, im), Complex64::new(re, -im)]
    }
}

/// Diagonal similarity balancing (Parlett-Reinsch), radix 2.
fn balance(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    let radix = 2.0_f64;
    let sqrdx = radix * radix;
    let mut done = false;
    while !done {
        done = true;
        for i in 0..n {
            let mut r = 0.0;
            let mut c = 0.0;
            for j in 0..n {
                if j != i {
                    c += m[(j, i)].abs();
                    r += m[(i, j)].abs();
                }
            }
            if c != 0.0 && r != 0.0 {
                let mut g = r / radix;
                let mut f = 1.0;
                let s = c + r;
                while c < g {
                    f *= radix;
                    c *= sqrdx;
                }
                g = r * radix;
                while c > g {
                    f /= radix;
                    c /= sqrdx;
                }
                if (c + r) / f < 0.95 * s {
                    done = false;
                    let g = 1.0 / f;
                    for j in 0..n {
                        m[(i, j)] *= g;
                    }
                    for j in 0..n {
                        m[(j, i)] *= f;
                    }
                }
            }
        }
    }
}

fn newton_polish(p: &Polynomial, z0: Complex64) -> Complex64 {
    let dp = p.derivative();
    let mut z = z0;
    let mut fz = horner(p.coeffs(), z).norm();
    for _ in 0..8 {
        let d = horner(dp.coeffs(), z);
        if d.norm() == 0.0 {
            break;
        }
        let cand = z - horner(p.coeffs(), z) / d;
        let fc = horner(p.coeffs(), cand).norm();
        if fc < fz {
            z = cand;
            fz = fc;
        } else {
            break;
        }
    }
    z
}

fn is_multiple_root(p: &Polynomial, c: Complex64, m: usize) -> bool {
    let t = p.taylor_at(c);
    let s = p.taylor_scale(c);
    let tol = MULTIPLICITY_ULPS * (p.degree() + 1) as f64 * f64::EPSILON;
    (0..m).all(|j| t[j].norm() <= tol * s[j].max(f64::MIN_POSITIVE))
}

/// The refined `m`-fold root at `c` leaves a residual no larger than the
/// worst of the separate estimates it replaces.
fn merge_fits(p: &Polynomial, c: Complex64, m: usize, members: impl Iterator<Item = Complex64>) -> bool {
    let merged = horner(p.coeffs(), refine_multiple(p, c, m)).norm();
    let worst = members.map(|z| horner(p.coeffs(), z).norm()).fold(0.0, f64::max);
    merged <= worst
}

/// Groups are formed on the raw eigenvalues, whose scatter around a multiple
/// root is symmetric; roots left simple take their refined value.
fn cluster(p: &Polynomial, pts: &[Complex64], refined: &[Complex64]) -> Vec<Root> {
    let mut assigned = vec![false; pts.len()];
    let mut out = Vec::new();
    for i in 0..pts.len() {
        if assigned[i] {
            continue;
        }
        let scale = 1.0_f64.max(pts[i].norm());
        let mut cand: Vec<(f64, usize)> = (0..pts.len())
            .filter(|&j| !assigned[j])
            .map(|j| ((pts[j] - pts[i]).norm(), j))
            .filter(|(d, _)| *d <= 0.5 * scale)
            .collect();
        cand.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());

        let mut chosen = 1;
        let mut centroid = pts[i];
        for k in (2..=cand.len()).rev() {
            let members = &cand[..k];
            let c = members.iter().map(|&(_, j)| pts[j]).sum::<Complex64>() / k as f64;
            let tight = members.last().unwrap().0 <= CLUSTER_TOL * scale;
            if tight || (is_multiple_root(p, c, k) && merge_fits(p, c, k, members.iter().map(|&(_, j)| refined[j]))) {
                chosen = k;
                centroid = c;
                break;
            }
        }
        for &(_, j) in &cand[..chosen] {
            assigned[j] = true;
        }
        if chosen == 1 {
            assigned[i] = true;
            centroid = newton_polish(p, refined[i]);
        } else {
            centroid = refine_multiple(p, centroid, chosen);
        }
        out.push(Root {
            value: centroid,
            multiplicity: chosen,
        });
    }
    out
}

/// Newton on the `(m-1)`-th derivative, where an `m`-fold root is simple.
fn refine_multiple(p: &Polynomial, c0: Complex64, m: usize) -> Complex64 {
    let mut d = p.clone();
    for _ in 0..m - 1 {
        d = d.derivative();
    }
    let dd = d.derivative();
    let mut z = c0;
    let mut fz = horner(d.coeffs(), z).norm();
    for _ in 0..6 {
        let den = horner(dd.coeffs(), z);
        if den.norm() == 0.0 {
            break;
        }
        let cand = z - horner(d.coeffs(), z) / den;
        let fc = horner(d.coeffs(), cand).norm();
        if fc < fz && (cand - c0).norm() < 1e-3 * (1.0 + c0.norm()) {
            z = cand;
            fz = fc;
        } else {
            break;
        }
    }
    z
}

/// Snap near-real roots to the real axis and pair the rest exactly.
fn conjugate_close(rs: Vec<Root>) -> Vec<Root> {
    let mut real = Vec::new();
    let mut upper = Vec::new();
    let mut lower = Vec::new();
    for r in rs {
        let tol = 1e-10 * (1.0 + r.value.re.abs());
        if r.value.im.abs() <= tol {
            real.push(Root {
                value: Complex64::new(r.value.re, 0.0),
                multiplicity: r.multiplicity,
            });
        } else if r.value.im > 0.0 {
            upper.push(r);
        } else {
            lower.push(r);
        }
    }
    let mut used = vec![false; lower.len()];
    let mut out = real;
    for u in upper {
        // partner: closest unused lower root to conj(u)
        let best = lower
            .iter()
            .enumerate()
            .filter(|(j, l)| !used[*j] && l.multiplicity == u.multiplicity)
            .min_by(|a, b| {
                (a.1.value - u.value.conj())
                    .norm()
                    .partial_cmp(&(b.1.value - u.value.conj()).norm())
                    .unwrap()
            })
            .map(|(j, l)| (j, *l));
        let value = match best {
            Some((j, l)) => {
                used[j] = true;
                Complex64::new(0.5 * (u.value.re + l.value.re), 0.5 * (u.value.im - l.value.im))
            }
            None => u.value,
        };
        out.push(Root {
            value,
            multiplicity: u.multiplicity,
        });
        out.push(Root {
            value: value.conj(),
            multiplicity: u.multiplicity,
        });
    }
    for (j, l) in lower.into_iter().enumerate() {
        if !used[j] {
            out.push(l);
            out.push(Root {
                value: l.value.conj(),
                multiplicity: l.multiplicity,
            });
        }
    }
    out
}
