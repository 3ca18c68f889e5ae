//! Acceptance run: one PASS/FAIL line per criterion, non-zero exit when any
//! criterion fails. Runs without the libtest harness so the lines are
//! always printed.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use gms_core::approx::{self, find_bk, BlockMetric};
use gms_core::cosets::{canonical_form, invariants_from_label, label_from_invariants, rokhlin_invariants, same_double_coset, CanonicalLabel};
use gms_core::fixtures::{self, g0, h2, h3, psi_u, uniform_nu};
use gms_core::measure::Atom;
use gms_core::topology::{
    doubling_closure_demo, lp_norm, matrix_element, operator_apply, oscillation_lower_bound, weak_not_strong_demo,
    DemoConfig, GmsMetricConfig, GridFunction, DEFAULT_GRID_N,
};
use gms_core::transform::random_exchange_with;
use gms_core::{measure_distance, IntervalSet, PwMap, RMeasure, StripGrid, ValueInterval};

/// Outcome of one criterion: the checks that failed plus a short summary.
struct Verdict {
    failures: Vec<String>,
    summary: String,
}

impl Verdict {
    fn new() -> Self {
        Verdict { failures: Vec::new(), summary: String::new() }
    }

    fn check(&mut self, ok: bool, what: impl Into<String>) {
        if !ok {
            self.failures.push(what.into());
        }
    }

    fn note(&mut self, s: impl AsRef<str>) {
        if !self.summary.is_empty() {
            self.summary.push_str("; ");
        }
        self.summary.push_str(s.as_ref());
    }
}

fn random_dyadic_set(rng: &mut ChaCha8Rng) -> IntervalSet {
    let level = rng.gen_range(1..=6);
    let n = 1u64 << level;
    let mut parts: Vec<(f64, f64)> = Vec::new();
    for k in 0..n {
        if rng.gen_bool(0.4) {
            let w = 1.0 / n as f64;
            parts.push((k as f64 * w, (k + 1) as f64 * w));
        }
    }
    if parts.is_empty() {
        let k = rng.gen_range(0..n);
        let w = 1.0 / n as f64;
        parts.push((k as f64 * w, (k + 1) as f64 * w));
    }
    IntervalSet::new(parts).expect("dyadic parts are valid")
}

/// `μ(gA)` from segment endpoint values only.
fn image_measure(g: &PwMap, a: &IntervalSet) -> f64 {
    let mut total = 0.0;
    for seg in g.segments() {
        for part in a.parts() {
            let (lo, hi) = (part.lo.max(seg.x0), part.hi.min(seg.x1));
            if hi > lo {
                total += seg.eval(hi) - seg.eval(lo);
            }
        }
    }
    total
}

fn criterion_1() -> Verdict {
    let mut v = Verdict::new();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let (mut worst_mass, mut worst_moment) = (0.0f64, 0.0f64);
    for _ in 0..200 {
        let g = fixtures::random_exact_map(&mut rng);
        let a = random_dyadic_set(&mut rng);
        let k = g.rn_distribution(&a, &IntervalSet::full());
        worst_mass = worst_mass.max((k.mass() - a.measure()).abs());
        worst_moment = worst_moment.max((k.moment() - image_measure(&g, &a)).abs());
    }
    v.check(worst_mass <= 1e-12, format!("mass residual {worst_mass:e}"));
    v.check(worst_moment <= 1e-12, format!("moment residual {worst_moment:e}"));
    v.note(format!("200 maps, max |mass - μ(A)| = {worst_mass:.1e}, max |moment - μ(gA)| = {worst_moment:.1e}"));
    v
}

fn criterion_2() -> Verdict {
    let mut v = Verdict::new();
    let mut rng = ChaCha8Rng::seed_from_u64(102);
    let mut worst = 0.0f64;
    let mut location_mismatches = 0;
    for _ in 0..100 {
        let n = rng.gen_range(2..=6);
        let g = fixtures::random_pl_map(&mut rng, n);
        let (a, b) = (random_dyadic_set(&mut rng), random_dyadic_set(&mut rng));
        let forward = g.rn_distribution(&a, &b).weighted_reciprocal().expect("atomic law");
        let backward = g.invert().expect("invertible").rn_distribution(&b, &a);
        if forward.atoms().len() != backward.atoms().len() {
            location_mismatches += 1;
            continue;
        }
        for (x, y) in forward.atoms().iter().zip(backward.atoms()) {
            if x.t != y.t {
                location_mismatches += 1;
            }
            worst = worst.max((x.mass - y.mass).abs() / x.mass.max(1e-300));
        }
    }
    v.check(location_mismatches == 0, format!("{location_mismatches} atom location mismatches"));
    v.check(worst <= 1e-12, format!("relative mass mismatch {worst:e}"));
    // g₀: slopes ½ and 3/2 on halves, so g₀⁻¹ has slope 2 on a quarter and
    // 2/3 on three quarters
    let inv = g0().invert().unwrap().derivative_law();
    let want = [Atom { t: 2.0 / 3.0, mass: 0.75 }, Atom { t: 2.0, mass: 0.25 }];
    v.check(inv.atoms() == want, format!("g0 inverse law {:?}", inv.atoms()));
    v.note(format!("100 maps, exact atom locations, max relative mass gap {worst:.1e}; g0 case exact"));
    v
}

fn criterion_3() -> Verdict {
    let mut v = Verdict::new();
    let grid = StripGrid::default();
    let mut rng = ChaCha8Rng::seed_from_u64(103);
    let mut worst_law = 0.0f64;
    for _ in 0..50 {
        let nu = fixtures::random_valid_measure(&mut rng);
        let psi = PwMap::convex_section(&nu).expect("valid measure");
        worst_law = worst_law.max(measure_distance(&psi.derivative_law(), &nu, &grid).unwrap());
    }
    let mut worst_map = 0.0f64;
    for _ in 0..50 {
        let n = rng.gen_range(1..=6);
        let psi = fixtures::random_convex_pl(&mut rng, n);
        let back = PwMap::convex_section(&psi.derivative_law()).expect("derivative law is valid");
        worst_map = worst_map.max(back.sup_distance(&psi, 2000));
    }
    v.check(worst_law <= 1e-8, format!("law roundtrip {worst_law:e}"));
    v.check(worst_map <= 1e-8, format!("map roundtrip {worst_map:e}"));
    let id = PwMap::convex_section(&RMeasure::dirac(1.0, 1.0)).unwrap();
    let u = PwMap::convex_section(&uniform_nu()).unwrap();
    let (mut e_id, mut e_u) = (0.0f64, 0.0f64);
    for i in 0..=1000 {
        let x = i as f64 / 1000.0;
        e_id = e_id.max((id.evaluate(x).unwrap() - x).abs());
        e_u = e_u.max((u.evaluate(x).unwrap() - (x * x / 2.0 + x / 2.0)).abs());
    }
    v.check(e_id <= 1e-12 && e_u <= 1e-12, format!("worked cases {e_id:e}, {e_u:e}"));
    v.note(format!("law gap {worst_law:.1e}, map gap {worst_map:.1e}, worked cases {e_id:.1e}/{e_u:.1e}"));
    v
}

fn label_gap(a: &CanonicalLabel, b: &CanonicalLabel) -> f64 {
    if a.nu.len() != b.nu.len() {
        return f64::INFINITY;
    }
    let lines = a.nu.iter().zip(&b.nu).map(|(x, y)| x.cdf_distance(y)).fold(0.0, f64::max);
    lines.max(a.nu_inf.cdf_distance(&b.nu_inf))
}

fn criterion_4() -> Verdict {
    let mut v = Verdict::new();
    let mut rng = ChaCha8Rng::seed_from_u64(104);
    let mut mismatches = 0;
    for (name, g) in [("g0", g0()), ("psi_u", psi_u()), ("h2", h2())] {
        let label = canonical_form(&g).unwrap();
        for _ in 0..100 {
            let (nu_pieces, nv_pieces) = (rng.gen_range(1..=6), rng.gen_range(1..=6));
            let u = random_exchange_with(&mut rng, nu_pieces).unwrap();
            let w = random_exchange_with(&mut rng, nv_pieces).unwrap();
            let h = PwMap::compose(&u, &PwMap::compose(&g, &w).unwrap()).unwrap();
            if canonical_form(&h).unwrap() != label {
                mismatches += 1;
                v.check(false, format!("{name}: label changed under an exchange pair"));
            }
        }
    }
    let mut maps = vec![g0(), psi_u(), h2(), h3()];
    for _ in 0..20 {
        maps.push(fixtures::random_exact_map(&mut rng));
    }
    let (mut evaluated, mut lowest, mut roundtrip) = (0usize, f64::INFINITY, 0.0f64);
    for g in &maps {
        let inv = rokhlin_invariants(g).unwrap();
        for y in inv.sample_points(100) {
            for k in 1..=inv.k().saturating_sub(2) {
                let d = inv.second_difference(k, y);
                lowest = lowest.min(d);
                evaluated += 1;
            }
        }
        let label = canonical_form(g).unwrap();
        let back = label_from_invariants(&inv).unwrap();
        roundtrip = roundtrip.max(label_gap(&label, &back));
        let again = invariants_from_label(&label).unwrap();
        for (x, y) in again.cumulative.iter().zip(&inv.cumulative) {
            roundtrip = roundtrip.max(x.cdf_distance(y));
        }
    }
    v.check(evaluated > 0, "Rokhlin check was vacuous");
    v.check(lowest >= -1e-12, format!("second difference {lowest:e}"));
    v.check(roundtrip <= 1e-12, format!("roundtrip {roundtrip:e}"));
    v.note(format!(
        "300 exchange pairs, {mismatches} label changes; {evaluated} stored second differences, min {lowest:.1e}; roundtrip {roundtrip:.1e}"
    ));
    v
}

fn strictly_decreasing(xs: &[f64]) -> bool {
    xs.windows(2).all(|w| w[1] < w[0])
}

fn criterion_5() -> Verdict {
    let mut v = Verdict::new();
    let nu = uniform_nu();
    let half = nu.scale(0.5);
    let levels: Vec<u32> = (2..=10).collect();
    let rows = approx::run_split(&nu, &half, &half, &levels, &BlockMetric::default()).unwrap();
    let d: Vec<f64> = rows.iter().map(|(r, _)| r.distance).collect();
    v.check(strictly_decreasing(&d), format!("distances not strictly decreasing: {d:?}"));
    v.check(d[d.len() - 1] < 1e-2, format!("distance at n = 10 is {}", d[d.len() - 1]));
    // B = [z, z°]: ν has density 1, so z° − z = ν₁(C) and
    // (z°² − z²)/2 = (tν₁)(C), i.e. z + z° = 2 (tν₁)(C) / ν₁(C)
    let r = |p: i64, q: i64| Ratio::new(p, q);
    let (lo, hi) = (r(1, 2), r(1, 1));
    let m = r(1, 2) * (hi - lo);
    let w = r(1, 2) * (hi * hi - lo * lo) / r(2, 1);
    let sum = r(2, 1) * w / m;
    let (z, z_end) = ((sum - m) / r(2, 1), (sum + m) / r(2, 1));
    let f = |x: Ratio<i64>| *x.numer() as f64 / *x.denom() as f64;
    let b = find_bk(&nu, &half, ValueInterval::new(1.0 / 3.0, 1.0)).unwrap();
    let gap = (b.lo - f(z)).abs().max((b.hi - f(z_end)).abs());
    v.check(gap <= 1e-10, format!("B_k = [{}, {}]", b.lo, b.hi));
    v.note(format!("distance {:.3e} at n = 2 to {:.3e} at n = 10; B_k = [{:.12}, {:.12}]", d[0], d[d.len() - 1], b.lo, b.hi));
    v
}

fn criterion_6() -> Verdict {
    let mut v = Verdict::new();
    let nu = uniform_nu();
    let metric = BlockMetric::default();
    let stages: Vec<u32> = (1..=10).collect();
    let spread = approx::run_spread(&nu, &stages, &metric).unwrap();
    let d: Vec<f64> = spread.iter().map(|(r, _)| r.distance).collect();
    v.check(d.windows(2).all(|w| w[1] <= w[0]) && strictly_decreasing(&d[1..]), format!("spreading not decreasing: {d:?}"));
    v.check(d[9] < 1e-2, format!("spreading distance {}", d[9]));
    v.note(format!("spreading {:.3e} -> {:.3e}", d[0], d[9]));
    let targets = [
        ("(0;ν)", CanonicalLabel::new(vec![], nu.clone()).unwrap()),
        ("(½ν,½ν;0)", CanonicalLabel::new(vec![nu.scale(0.5), nu.scale(0.5)], RMeasure::zero()).unwrap()),
    ];
    let mut residual = 0.0f64;
    for (name, label) in &targets {
        let rows = approx::run_compose(&nu, label, &stages, &metric).unwrap();
        let d: Vec<f64> = rows.iter().map(|(r, _)| r.distance).collect();
        v.check(strictly_decreasing(&d), format!("composer {name} not decreasing: {d:?}"));
        v.check(d[9] < 1e-2, format!("composer {name} distance {}", d[9]));
        for (r, _) in &rows {
            residual = residual.max(r.mass_residual).max(r.moment_residual);
        }
        v.note(format!("composer {name} {:.3e} -> {:.3e}", d[0], d[9]));
    }
    v.check(residual <= 1e-10, format!("constraint residual {residual:e}"));
    v.note(format!("max residual {residual:.1e}"));
    v
}

fn criterion_7() -> Verdict {
    let mut v = Verdict::new();
    let rows = approx::discretize_sequence(&psi_u(), 8, &GmsMetricConfig::default()).unwrap();
    let d: Vec<f64> = rows.iter().map(|r| r.gms_distance).collect();
    v.check(strictly_decreasing(&d), format!("not decreasing: {d:?}"));
    v.check(d[7] < 1e-2, format!("distance at N = 8 is {}", d[7]));
    let res = rows.iter().map(|r| r.mass_residual.max(r.moment_residual)).fold(0.0, f64::max);
    v.check(res <= 1e-14, format!("per-bin residual {res:e}"));
    // barycenters of the uniform law on (½, 1] and (1, 3/2]
    let want = [Atom { t: (0.5 + 1.0) / 2.0, mass: 0.5 }, Atom { t: (1.0 + 1.5) / 2.0, mass: 0.5 }];
    let k1 = approx::discretize_gms(&psi_u(), 1).unwrap().derivative_law();
    v.check(k1.atoms() == want && k1.pieces().is_empty(), format!("κ_1 = {:?}", k1.atoms()));
    v.note(format!("distance {:.3e} at N = 1 to {:.3e} at N = 8; per-bin residual {res:.1e}; κ_1 exact", d[0], d[7]));
    v
}

fn criterion_8() -> Verdict {
    let mut v = Verdict::new();
    let n = DEFAULT_GRID_N;
    let mut rng = ChaCha8Rng::seed_from_u64(108);
    let modes: Vec<(f64, f64)> = (1..=3).map(|_| (rng.gen_range(-1.0..1.0), rng.gen_range(0.0..6.0))).collect();
    let f = GridFunction::from_fn(n, |x| {
        1.5 + modes.iter().enumerate().map(|(k, &(a, p))| a * ((k + 1) as f64 * 2.0 * PI * x + p).sin()).sum::<f64>()
    })
    .unwrap();
    let (mut iso, mut dual) = (0.0f64, 0.0f64);
    let pairs = IntervalSet::dyadic_partition(2);
    for g in [g0(), psi_u()] {
        for p in [1.0, 2.0, 3.0] {
            for s in [0.0, 0.7] {
                let tf = operator_apply(&g, &f, p, s).unwrap();
                iso = iso.max((lp_norm(&tf, p) - lp_norm(&f, p)).abs());
                for a in &pairs {
                    for b in &pairs {
                        dual = dual.max(matrix_element(&g, a, b, p, s, n).unwrap().discrepancy());
                    }
                }
            }
        }
    }
    v.check(iso <= 1e-3, format!("isometry defect {iso:e}"));
    v.check(dual <= 1e-6, format!("matrix-element disagreement {dual:e}"));

    let js = [1, 2, 4, 8, 16, 32];
    let cfg = DemoConfig::default();
    let rows = weak_not_strong_demo(&js, &cfg).unwrap();
    // ‖(1 + cos 2πjx) − 1‖₁ = ∫|cos| = 2/π; the depth-N bound comes from the
    // gap |E√(1 + cos 2πU) − 1| at z = ½, integrated here by brute force
    let m = 200_000;
    let mean_sqrt = (0..m).map(|i| (1.0 + (2.0 * PI * (i as f64 + 0.5) / m as f64).cos()).sqrt()).sum::<f64>() / m as f64;
    let bound = (1.0 - (-(cfg.metric.depth as f64)).exp2()) * (1.0 - mean_sqrt);
    v.check((oscillation_lower_bound(cfg.metric.depth) - bound).abs() < 1e-9, "lower bound disagrees with quadrature");
    let strong = rows.iter().map(|r| (r.strong_defect - 2.0 / PI).abs()).fold(0.0, f64::max);
    let weak: Vec<f64> = rows.iter().map(|r| r.matrix_element_error).collect();
    let gms_min = rows.iter().map(|r| r.gms_distance).fold(f64::INFINITY, f64::min);
    v.check(strong <= 1e-6, format!("strong defect off 2/π by {strong:e}"));
    v.check(weak.windows(2).all(|w| w[1] <= w[0]) && weak[weak.len() - 1] < 1e-10, format!("matrix-element errors {weak:?}"));
    v.check(gms_min >= bound, format!("oscillation distance {gms_min} below {bound}"));

    let lip = GridFunction::from_fn(n, |x| x * (1.0 - x)).unwrap();
    let dbl = doubling_closure_demo(10, &lip, 2.0).unwrap();
    let nd: Vec<f64> = dbl.iter().map(|r| r.norm_defect).collect();
    v.check(strictly_decreasing(&nd) && nd[9] < 1e-2, format!("doubling defects {nd:?}"));
    v.note(format!(
        "isometry {iso:.1e}, dual {dual:.1e}; oscillation weak {:.1e} -> {:.1e}, strong off 2/π by {strong:.1e}, gms ≥ {gms_min:.3}; doubling {:.1e} -> {:.1e}",
        weak[0],
        weak[weak.len() - 1],
        nd[0],
        nd[9]
    ));
    v
}

fn criterion_9() -> Verdict {
    let mut v = Verdict::new();
    let grid = StripGrid::default();
    let d = measure_distance(&psi_u().derivative_law(), &h2().derivative_law(), &grid).unwrap();
    let same = same_double_coset(&psi_u(), &h2()).unwrap();
    v.check(d <= 1e-10, format!("Φ(ψ_U) vs Φ(h₂) distance {d:e}"));
    v.check(!same, "ψ_U and h₂ reported in one coset");
    let z = Complex64::new(0.5, 0.0);
    let sep = (g0().derivative_law().char_fn(z).unwrap() - PwMap::identity().derivative_law().char_fn(z).unwrap()).norm();
    v.check(sep > 1e-3, format!("Φ(g₀) vs Φ(id) gap {sep:e}"));
    v.note(format!("Φ distance {d:.1e}, distinct cosets: {}; g0/identity gap {sep:.3}", !same));
    v
}

fn main() {
    type Criterion = (u32, &'static str, fn() -> Verdict, Duration);
    let criteria: [Criterion; 9] = [
        (1, "identity suite", criterion_1, Duration::from_secs(5)),
        (2, "inverse identity", criterion_2, Duration::from_secs(2)),
        (3, "section roundtrip", criterion_3, Duration::from_secs(10)),
        (4, "canonical-form biinvariance", criterion_4, Duration::from_secs(10)),
        (5, "splitting convergence", criterion_5, Duration::from_secs(30)),
        (6, "spreading and closure composer", criterion_6, Duration::from_secs(60)),
        (7, "finite-valued density", criterion_7, Duration::from_secs(10)),
        (8, "operator suite", criterion_8, Duration::from_secs(60)),
        (9, "quotient phenomenon", criterion_9, Duration::from_secs(2)),
    ];
    let mut failed = 0;
    for (id, name, run, budget) in criteria {
        let start = Instant::now();
        let mut verdict = run();
        let took = start.elapsed();
        verdict.check(took < budget, format!("took {took:.2?}, budget {budget:?}"));
        let status = if verdict.failures.is_empty() { "PASS" } else { "FAIL" };
        println!("criterion {id} [{name}]: {status} ({took:.2?}) {}", verdict.summary);
        for f in &verdict.failures {
            println!("    failed: {f}");
        }
        if !verdict.failures.is_empty() {
            failed += 1;
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
