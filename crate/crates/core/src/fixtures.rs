//! Standard maps and random generators shared by tests, the CLI and the
//! demos.

use std::f64::consts::PI;

use rand::Rng;

use crate::laurent::Laurent;
use crate::measure::{Atom, Piece, RMeasure};
use crate::transform::{interval_exchange, random_exchange_with, Form, PwMap, SampledForm, Segment};

/// `g₀`: slope ½ on `[0,½] → [0,¼]`, slope 3/2 on `[½,1] → [¼,1]`.
pub fn g0() -> PwMap {
    PwMap::new(vec![Segment::linear(0.0, 0.5, 0.0, 0.25), Segment::linear(0.5, 1.0, 0.25, 1.0)])
        .expect("g0 is valid")
}

/// The uniform law on `(½, 3/2]`.
pub fn uniform_nu() -> RMeasure {
    RMeasure::uniform(0.5, 1.5, 1.0)
}

/// `ψ_U(x) = x²/2 + x/2`, the convex section of the uniform law.
pub fn psi_u() -> PwMap {
    PwMap::new(vec![Segment::quantile(0.0, 1.0, 0.0, 1.0, uniform_nu(), 0.0, false)]).expect("psi_U is valid")
}

/// `m` rescaled copies of `ψ_U` side by side: each value of the derivative
/// is taken exactly `m` times.
pub fn copies_of_psi_u(m: usize) -> PwMap {
    let share = 1.0 / m as f64;
    let base = uniform_nu().scale(share);
    let segs = (0..m)
        .map(|k| {
            let (a, b) = (k as f64 * share, if k + 1 == m { 1.0 } else { (k + 1) as f64 * share });
            Segment::quantile(a, b, a, b, base.clone(), 0.0, false)
        })
        .collect();
    PwMap::new(segs).expect("copies of psi_U are valid")
}

/// `h₂`: two half-scale copies of `ψ_U`.
pub fn h2() -> PwMap {
    copies_of_psi_u(2)
}

/// `h₃`: three third-scale copies of `ψ_U`.
pub fn h3() -> PwMap {
    copies_of_psi_u(3)
}

/// `g_j(x) = x + sin(2πjx)/(2πj)`, built from `2j` sampled half-period
/// pieces that each fix their endpoints.
pub fn oscillation(j: usize) -> PwMap {
    assert!(j >= 1, "oscillation index starts at 1");
    let n = 2 * j;
    let w = 2.0 * PI * j as f64;
    let segs = (0..n)
        .map(|k| {
            let x0 = k as f64 / n as f64;
            let x1 = if k + 1 == n { 1.0 } else { (k + 1) as f64 / n as f64 };
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            // local coordinates keep identical pieces bit-identical
            let len = 1.0 / n as f64;
            let form = SampledForm::from_fn(|s| 1.0 + sign * (w * s).cos(), len, len)
                .expect("oscillation samples are positive somewhere");
            Segment { x0, x1, y0: x0, y1: x1, form: Form::Sampled(form) }
        })
        .collect();
    PwMap::new(segs).expect("oscillation map is valid")
}

/// Block permutation of the doubling exchange: block `k` of `2ⁿ` goes to
/// block `σ(k)`.
pub fn doubling_sigma(n: u32, k: usize) -> usize {
    let half = 1usize << (n - 1);
    if k < half {
        2 * k
    } else {
        2 * (k - half) + 1
    }
}

/// `g_n`: interval exchange of the `2ⁿ` dyadic blocks approximating
/// `x ↦ 2x mod 1`.
pub fn doubling(n: u32) -> PwMap {
    assert!(n >= 1, "doubling level starts at 1");
    let blocks = 1usize << n;
    let cuts: Vec<f64> = (1..blocks).map(|k| k as f64 / blocks as f64).collect();
    let mut perm = vec![0; blocks];
    for k in 0..blocks {
        perm[doubling_sigma(n, k)] = k;
    }
    interval_exchange(&cuts, &perm).expect("doubling exchange is valid")
}

/// Random law satisfying `∫dν = ∫t dν = 1`: up to three atoms and up to
/// three quadratic density pieces, normalized by scaling and dilation.
pub fn random_valid_measure<R: Rng>(rng: &mut R) -> RMeasure {
    let n_atoms = rng.gen_range(0..=3);
    let n_pieces = if n_atoms == 0 { rng.gen_range(1..=3) } else { rng.gen_range(0..=3) };
    let mut atoms: Vec<Atom> = Vec::new();
    while atoms.len() < n_atoms {
        let t = rng.gen_range(0.2..3.0);
        if atoms.iter().all(|a| a.t != t) {
            atoms.push(Atom { t, mass: rng.gen_range(0.1..1.0) });
        }
    }
    let mut ends: Vec<f64> = (0..2 * n_pieces).map(|_| rng.gen_range(0.25..4.0)).collect();
    ends.sort_by(f64::total_cmp);
    let pieces = ends
        .chunks(2)
        .filter(|w| w[1] > w[0])
        .map(|w| {
            let coeffs = vec![rng.gen_range(0.05..1.0), rng.gen_range(0.0..1.0), rng.gen_range(0.0..0.5)];
            Piece::new(w[0], w[1], Laurent::new(0, coeffs))
        })
        .collect();
    let nu = RMeasure::from_parts(atoms, pieces);
    let nu = nu.scale(1.0 / nu.mass());
    nu.dilate(1.0 / nu.moment())
}

/// Random continuous valid law (density pieces only).
pub fn random_continuous_measure<R: Rng>(rng: &mut R) -> RMeasure {
    loop {
        let (c, _) = random_valid_measure(rng).decompose();
        if !c.is_zero() {
            let c = c.scale(1.0 / c.mass());
            return c.dilate(1.0 / c.moment());
        }
    }
}

/// Random piecewise-linear element of the class: `n` domain pieces with
/// random lengths, laid out in a random order on random image lengths.
pub fn random_pl_map<R: Rng>(rng: &mut R, n: usize) -> PwMap {
    use rand::seq::SliceRandom;
    let dom = random_partition(rng, n);
    let img = random_partition(rng, n);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    // piece i lands on image slot order[i]
    let segs = (0..n)
        .map(|i| {
            let k = order[i];
            Segment::linear(dom[i], dom[i + 1], img[k], img[k + 1])
        })
        .collect();
    PwMap::new(segs).expect("random piecewise-linear map is valid")
}

/// Random convex piecewise-linear element of `𝒢`.
pub fn random_convex_pl<R: Rng>(rng: &mut R, n: usize) -> PwMap {
    let dom = random_partition(rng, n);
    let mut slopes: Vec<f64> = (0..n).map(|_| rng.gen_range(0.1..3.0)).collect();
    slopes.sort_by(f64::total_cmp);
    slopes.dedup();
    let dom = if slopes.len() < n { random_partition(rng, slopes.len()) } else { dom };
    let total: f64 = slopes.iter().zip(dom.windows(2)).map(|(s, w)| s * (w[1] - w[0])).sum();
    let mut y = 0.0;
    let mut segs = Vec::with_capacity(slopes.len());
    for (i, s) in slopes.iter().enumerate() {
        let (x0, x1) = (dom[i], dom[i + 1]);
        let y1 = if i + 1 == slopes.len() { 1.0 } else { y + s / total * (x1 - x0) };
        segs.push(Segment::linear(x0, x1, y, y1));
        y = y1;
    }
    PwMap::new(segs).expect("random convex map is valid")
}

/// Random exact-class map `u ∘ ψ ∘ v`: the convex section of a random law
/// between two random interval exchanges.
pub fn random_exact_map<R: Rng>(rng: &mut R) -> PwMap {
    let psi = PwMap::convex_section(&random_valid_measure(rng)).expect("random law is normalized");
    let (nu_pieces, nv_pieces) = (rng.gen_range(1..=4), rng.gen_range(1..=4));
    let u = random_exchange_with(rng, nu_pieces).expect("exchange");
    let v = random_exchange_with(rng, nv_pieces).expect("exchange");
    let inner = PwMap::compose(&psi, &v).expect("exact composition");
    PwMap::compose(&u, &inner).expect("exact composition")
}

/// `0 = p₀ < p₁ < … < p_n = 1` with random gaps.
fn random_partition<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..n).map(|_| rng.gen_range(0.2..1.0)).collect();
    let total: f64 = w.iter().sum();
    let mut out = Vec::with_capacity(n + 1);
    let mut acc = 0.0;
    out.push(0.0);
    for (i, x) in w.iter().enumerate() {
        acc += x;
        out.push(if i + 1 == n { 1.0 } else { acc / total });
    }
    out
}
