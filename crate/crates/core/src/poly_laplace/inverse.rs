use num_complex::Complex64;

use super::dd::{horner, taylor};
use super::exp_poly::{ExpPolynomial, ExpTerm};
use super::roots::Root;
use super::RationalFunction;
use crate::error::{Error, Result};

/// Poles closer than this fraction of their modulus are inverted as a group.
const GROUP_LINK: f64 = 0.1;
/// Highest power of `t` kept for a pole group.
const MAX_GROUP_POWER: usize = 96;
/// Group terms whose supremum over `t >= 0` falls below this fraction of the
/// largest one are dropped.
const GROUP_TRUNCATION: f64 = 1e-18;

/// Exact inverse Laplace transform of a strictly proper rational function.
///
/// An isolated simple pole `p` maps to `c e^{pt}` with `c` read off the
/// Laurent expansion. Repeated and nearly coincident poles are treated as a
/// group: their joint contribution is `e^{ct} sum_k M_k t^k / k!` around the
/// group centre `c`, with moments `M_k` of `(u-c)^k r(u)` computed by the
/// trapezoid rule on a circle separating the group from the other poles. On
/// that circle `r` is of moderate size, so nothing cancels, whereas
/// per-pole Laurent coefficients of a tight cluster are huge and of
/// alternating sign. Groups whose series would not converge fall back to
/// per-pole Laurent terms.
pub fn inverse_laplace(r: &RationalFunction) -> Result<ExpPolynomial> {
    if !r.is_strictly_proper() {
        return Err(Error::ImproperRational);
    }
    if r.is_zero() {
        return Ok(ExpPolynomial::default());
    }
    let poles = r.poles()?;
    let mut out = ExpPolynomial::default();
    for group in pole_groups(&poles) {
        let members: Vec<Root> = group.iter().map(|&i| poles[i]).collect();
        let centre = members
            .iter()
            .map(|p| p.value * p.multiplicity as f64)
            .sum::<Complex64>()
            / members.iter().map(|p| p.multiplicity).sum::<usize>() as f64;
        // conjugate groups are emitted together with their upper partner
        if centre.im < -1e-12 * (1.0 + centre.norm()) {
            continue;
        }
        let simple = members.len() == 1 && members[0].multiplicity == 1;
        let grouped = if simple {
            None
        } else {
            group_terms(r, &poles, &group, centre)
        };
        match grouped {
            Some(terms) => {
                for t in terms {
                    push_with_conjugate(&mut out, t);
                }
            }
            None => {
                for pole in members.iter().filter(|p| p.value.im >= 0.0) {
                    for t in laurent_terms(r, pole) {
                        push_with_conjugate(&mut out, t);
                    }
                }
            }
        }
    }
    Ok(out)
}

fn push_with_conjugate(out: &mut ExpPolynomial, term: ExpTerm) {
    if term.pole.im == 0.0 {
        out.push(ExpTerm {
            coeff: Complex64::new(term.coeff.re, 0.0),
            ..term
        });
    } else {
        out.push(term);
        out.push(ExpTerm {
            coeff: term.coeff.conj(),
            power: term.power,
            pole: term.pole.conj(),
        });
    }
}

fn laurent_terms(r: &RationalFunction, pole: &Root) -> Vec<ExpTerm> {
    let mut fact = 1.0;
    laurent_principal(r, pole.value, pole.multiplicity)
        .into_iter()
        .enumerate()
        .map(|(k, c)| {
            if k > 0 {
                fact *= k as f64;
            }
            ExpTerm {
                coeff: c / fact,
                power: k as u32,
                pole: pole.value,
            }
        })
        .collect()
}

/// Single-linkage groups of poles within `GROUP_LINK` relative distance.
fn pole_groups(poles: &[Root]) -> Vec<Vec<usize>> {
    let n = poles.len();
    let mut label: Vec<usize> = (0..n).collect();
    fn find(label: &mut [usize], i: usize) -> usize {
        let mut i = i;
        while label[i] != i {
            label[i] = label[label[i]];
            i = label[i];
        }
        i
    }
    for i in 0..n {
        for j in i + 1..n {
            let (a, b) = (poles[i].value, poles[j].value);
            if (a - b).norm() <= GROUP_LINK * a.norm().max(b.norm()) {
                let (ri, rj) = (find(&mut label, i), find(&mut label, j));
                label[ri] = rj;
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut index = vec![usize::MAX; n];
    for i in 0..n {
        let root = find(&mut label, i);
        if index[root] == usize::MAX {
            index[root] = groups.len();
            groups.push(Vec::new());
        }
        groups[index[root]].push(i);
    }
    groups
}

/// Joint contribution of the poles in `group` as powers of `t` times
/// `e^{centre t}`, or `None` when the circle geometry or the decay rate does
/// not allow a convergent, well-separated expansion.
fn group_terms(r: &RationalFunction, poles: &[Root], group: &[usize], centre: Complex64) -> Option<Vec<ExpTerm>> {
    let centre = if centre.im.abs() <= 1e-12 * (1.0 + centre.norm()) {
        Complex64::new(centre.re, 0.0)
    } else {
        centre
    };
    let decay = -centre.re;
    let spread = group
        .iter()
        .map(|&i| (poles[i].value - centre).norm())
        .fold(0.0, f64::max);
    let outside = (0..poles.len())
        .filter(|i| !group.contains(i))
        .map(|i| (poles[i].value - centre).norm())
        .fold(f64::INFINITY, f64::min);
    // as wide as aliasing and the decay rate allow: |r| on the circle, and
    // with it the rounding error of the moments, shrinks with the radius
    let rho = (0.4 * outside.min(decay)).max(1.5 * spread);
    if !(decay > 0.0) || rho > 0.5 * decay || rho * 1.5 > outside {
        return None;
    }
    // aliasing from poles inside and outside the circle decays like q^N
    let q = (spread / rho).max(rho / outside);
    let nodes = ((-40.0 / q.log10()).ceil() as usize + MAX_GROUP_POWER + 1).clamp(128, 4096);

    let (num, den) = (r.num().coeffs(), r.den().coeffs());
    let mut moments = vec![Complex64::new(0.0, 0.0); MAX_GROUP_POWER + 1];
    for l in 0..nodes {
        let w = Complex64::from_polar(rho, 2.0 * std::f64::consts::PI * l as f64 / nodes as f64);
        let f = horner(num, centre + w) / horner(den, centre + w);
        let mut wk = w;
        for m in moments.iter_mut() {
            *m += f * wk;
            wk *= w;
        }
    }
    // sup_t t^k e^{-a t} / k! = (k / (e a))^k / k!
    let mut fact = 1.0;
    let mut terms = Vec::with_capacity(moments.len());
    let mut bounds = Vec::with_capacity(moments.len());
    for (k, m) in moments.iter().enumerate() {
        if k > 0 {
            fact *= k as f64;
        }
        let coeff = m / nodes as f64 / fact;
        let peak = if k == 0 {
            1.0
        } else {
            (k as f64 / (std::f64::consts::E * decay)).powi(k as i32)
        };
        bounds.push(coeff.norm() * peak);
        terms.push(ExpTerm {
            coeff,
            power: k as u32,
            pole: centre,
        });
    }
    let top = bounds.iter().copied().fold(0.0, f64::max);
    let cut = GROUP_TRUNCATION * top;
    if bounds[MAX_GROUP_POWER - 2..].iter().any(|&b| b > cut) {
        return None;
    }
    let last = bounds.iter().rposition(|&b| b > cut).unwrap_or(0);
    terms.truncate(last + 1);
    Some(terms)
}

/// Coefficients of `(u-p)^{-1}, (u-p)^{-2}, ..., (u-p)^{-m}` in the Laurent
/// expansion of `r` at `p`.
fn laurent_principal(r: &RationalFunction, p: Complex64, m: usize) -> Vec<Complex64> {
    let nt = taylor(r.num().coeffs(), p);
    let dt = taylor(r.den().coeffs(), p);
    // D(p+x) = x^m (d_m + d_{m+1} x + ...); the first m entries are zero by
    // construction and dropped.
    let dshift: Vec<Complex64> = (0..m).map(|j| dt.get(m + j).copied().unwrap_or_default()).collect();
    let nser: Vec<Complex64> = (0..m).map(|j| nt.get(j).copied().unwrap_or_default()).collect();
    // series quotient g = N / Dshift up to x^{m-1}
    let mut g = vec![Complex64::new(0.0, 0.0); m];
    for i in 0..m {
        let mut acc = nser[i];
        for j in 1..=i {
            acc -= dshift[j] * g[i - j];
        }
        g[i] = acc / dshift[0];
    }
    // R = x^{-m} g(x): coefficient of x^{-k} is g[m-k]
    (1..=m).map(|k| g[m - k]).collect()
}
