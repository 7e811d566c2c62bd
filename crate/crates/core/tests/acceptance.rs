//! Acceptance suite: one test per criterion, each printing a single
//! pass/fail line (visible with `--nocapture`; the test name doubles as
//! the line in normal cargo output).

use std::time::Instant;

use ktt_core::{
    extract, fit_g1, fresnel, generate_synthetic, integrate_lobe, jarque_bera, mann_whitney_u,
    moments_to_params, numeric_moments, params_to_moments, plan_to_document, write_plan,
    ExtractorConfig, KernelKind, KernelParams, KernelShape, LinkKind, LinkSpec, Moments, Point,
    SynthSpec,
};

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

fn report(criterion: &str, pass: bool) {
    println!("[{}] {criterion}", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "{criterion}");
}

// ---------------------------------------------------------------------
// Double-double arithmetic: just enough precision (~31 digits) to sum
// the Fresnel Maclaurin series through its huge alternating terms.

#[derive(Clone, Copy)]
struct Dd {
    hi: f64,
    lo: f64,
}

fn two_sum(a: f64, b: f64) -> Dd {
    let s = a + b;
    let v = s - a;
    let e = (a - (s - v)) + (b - v);
    Dd { hi: s, lo: e }
}

fn quick_two_sum(a: f64, b: f64) -> Dd {
    let s = a + b;
    Dd { hi: s, lo: b - (s - a) }
}

fn two_prod(a: f64, b: f64) -> Dd {
    let p = a * b;
    Dd {
        hi: p,
        lo: f64::mul_add(a, b, -p),
    }
}

impl Dd {
    fn from(x: f64) -> Dd {
        Dd { hi: x, lo: 0.0 }
    }

    fn add(self, o: Dd) -> Dd {
        let s = two_sum(self.hi, o.hi);
        let e = s.lo + self.lo + o.lo;
        quick_two_sum(s.hi, e)
    }

    fn mul(self, o: Dd) -> Dd {
        let p = two_prod(self.hi, o.hi);
        let e = p.lo + self.hi * o.lo + self.lo * o.hi;
        quick_two_sum(p.hi, e)
    }

    fn div_f64(self, d: f64) -> Dd {
        let q1 = self.hi / d;
        let p = two_prod(q1, d);
        let r_hi = self.hi - p.hi;
        let r = (r_hi - p.lo) + self.lo;
        let q2 = r / d;
        quick_two_sum(q1, q2)
    }

    fn neg(self) -> Dd {
        Dd {
            hi: -self.hi,
            lo: -self.lo,
        }
    }
}

/// Maclaurin-series Fresnel oracle in double-double precision. Valid on
/// |u| <= 5 with absolute error far below 1e-12 (worst terms ~e^39, dd
/// keeps ~31 digits).
fn fresnel_dd_oracle(u: f64) -> (f64, f64) {
    if u == 0.0 {
        return (0.0, 0.0);
    }
    let a = u.abs();
    // pi/2 to double-double precision.
    let half_pi = Dd {
        hi: 1.570_796_326_794_896_6,
        lo: 6.123_233_995_736_766e-17,
    };
    let u2 = two_prod(a, a);
    let x = half_pi.mul(u2);
    let mut c = Dd::from(0.0);
    let mut s = Dd::from(0.0);
    // term = (-1)^n x^{2n} u / (2n)!  — advanced two factorial steps per
    // loop; the series for S inserts one extra factor of x.
    let mut term = Dd::from(a);
    for n in 0..400u32 {
        c = c.add(term.div_f64((4 * n + 1) as f64));
        let term_s = term.mul(x).div_f64((2 * n + 1) as f64);
        s = s.add(term_s.div_f64((4 * n + 3) as f64));
        term = term_s.mul(x).div_f64((2 * n + 2) as f64).neg();
        if term.hi.abs() < 1e-20 {
            break;
        }
    }
    let (c, s) = (c.hi + c.lo, s.hi + s.lo);
    if u < 0.0 {
        (-c, -s)
    } else {
        (c, s)
    }
}

#[test]
fn criterion_01_fresnel_accuracy() {
    let start = Instant::now();
    let mut worst = 0.0_f64;
    for i in 0..500 {
        let u = -5.0 + 10.0 * i as f64 / 499.0;
        let (c, s) = fresnel(u);
        let (co, so) = fresnel_dd_oracle(u);
        worst = worst.max((c - co).abs()).max((s - so).abs());
    }
    let elapsed = start.elapsed().as_secs_f64();
    report(
        &format!("criterion 1: Fresnel within 1e-12 of series oracle on [-5,5] (worst {worst:.2e}, {elapsed:.2}s)"),
        worst <= 1e-12 && elapsed < 1.0,
    );
}

#[test]
fn criterion_02_clothoid_g1_fitting() {
    let mut rng = StdRng::seed_from_u64(20_240_201);
    let mut failures = 0usize;
    let mut worst_pos = 0.0_f64;
    let mut worst_tan = 0.0_f64;
    for _ in 0..1000 {
        let p0 = Point::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let mut p1 = p0;
        while p1.dist(p0) < 0.05 {
            p1 = Point::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        }
        let chord = (p1 - p0).angle();
        let ts = chord + rng.gen_range(-2.8..2.8);
        let te = chord + rng.gen_range(-2.8..2.8);
        let spec = match LinkSpec::new(LinkKind::Clothoid, p0, p1, ts, te) {
            Ok(s) => s,
            Err(_) => continue,
        };
        match fit_g1(&spec) {
            Ok(seg) => {
                let pos_err = seg.end_point().dist(p1) / p0.dist(p1);
                let tan_err = wrap(seg.tangent_at(seg.length) - te).abs();
                worst_pos = worst_pos.max(pos_err);
                worst_tan = worst_tan.max(tan_err);
                if pos_err > 1e-8 || tan_err > 1e-8 {
                    failures += 1;
                }
            }
            Err(_) => failures += 1,
        }
    }
    report(
        &format!("criterion 2: G1 fit on 1000 random specs ({failures} failures, worst pos {worst_pos:.2e}, tan {worst_tan:.2e})"),
        failures <= 1,
    );
}

fn wrap(a: f64) -> f64 {
    let mut a = a % (2.0 * std::f64::consts::PI);
    if a > std::f64::consts::PI {
        a -= 2.0 * std::f64::consts::PI;
    }
    if a <= -std::f64::consts::PI {
        a += 2.0 * std::f64::consts::PI;
    }
    a
}

fn random_kernel(kind: KernelKind, rng: &mut StdRng) -> KernelParams {
    let t0 = rng.gen_range(-0.5..0.5);
    let d = rng.gen_range(0.1..5.0);
    let shape = match kind {
        KernelKind::Gaussian => KernelShape::Gaussian {
            mu: rng.gen_range(-1.0..1.0),
            sigma2: rng.gen_range(0.001..0.5),
        },
        KernelKind::Lognormal => KernelShape::Lognormal {
            mu: rng.gen_range(-2.0..0.5),
            sigma2: rng.gen_range(0.01..0.5),
        },
        KernelKind::Gamma => KernelShape::Gamma {
            alpha: rng.gen_range(1.2..10.0),
            beta: rng.gen_range(0.5..20.0),
        },
        KernelKind::Beta => KernelShape::Beta {
            alpha: rng.gen_range(1.2..8.0),
            beta: rng.gen_range(1.2..8.0),
        },
        KernelKind::DoubleBoundedLognormal => KernelShape::DoubleBoundedLognormal {
            mu: rng.gen_range(-0.5..0.8),
            sigma2: rng.gen_range(0.05..0.6),
            te: t0 + rng.gen_range(0.3..1.5),
        },
        KernelKind::Gev => KernelShape::Gev {
            xi: rng.gen_range(-0.4..0.45),
            mu: rng.gen_range(0.1..0.8),
            sigma: rng.gen_range(0.02..0.3),
        },
    };
    KernelParams::new(t0, d, shape).unwrap()
}

#[test]
fn criterion_03_kernel_mass() {
    let mut rng = StdRng::seed_from_u64(33);
    let mut ok = true;
    for kind in KernelKind::ALL {
        for _ in 0..200 {
            let p = random_kernel(kind, &mut rng);
            let (_, hi) = p.effective_support(1e-13);
            let closed = p.cumulative(hi + 1e-9);
            let quad = integrate_lobe(&p, |t| p.eval(t), 1e-13, 1e-10 * p.d).unwrap();
            if ((closed - p.d) / p.d).abs() > 1e-9 || ((quad - p.d) / p.d).abs() > 1e-7 {
                eprintln!("mass failure for {p:?}: closed {closed}, quad {quad}");
                ok = false;
            }
        }
    }
    report("criterion 3: kernel mass (closed form 1e-9, quadrature 1e-7)", ok);
}

fn shape_vec(shape: &KernelShape) -> Vec<f64> {
    match *shape {
        KernelShape::Gaussian { mu, sigma2 } => vec![mu, sigma2],
        KernelShape::Lognormal { mu, sigma2 } => vec![mu, sigma2],
        KernelShape::Gamma { alpha, beta } => vec![alpha, beta],
        KernelShape::Beta { alpha, beta } => vec![alpha, beta],
        KernelShape::DoubleBoundedLognormal { mu, sigma2, te } => vec![mu, sigma2, te],
        KernelShape::Gev { xi, mu, sigma } => vec![xi, mu, sigma],
    }
}

#[test]
fn criterion_04_moment_round_trips() {
    let mut rng = StdRng::seed_from_u64(44);
    let mut ok = true;
    // Analytic kinds: params -> moments -> params to 1e-10 relative.
    for kind in [
        KernelKind::Gaussian,
        KernelKind::Lognormal,
        KernelKind::Gamma,
        KernelKind::Beta,
    ] {
        for _ in 0..100 {
            let p = random_kernel(kind, &mut rng);
            let m = params_to_moments(&p).unwrap();
            let back = moments_to_params(kind, m, p.t0, p.t0 + 1.0).unwrap();
            let a = shape_vec(&p.shape);
            let b = shape_vec(&back);
            for (x, y) in a.iter().zip(&b) {
                if ((x - y) / x.abs().max(1e-12)).abs() > 1e-10 {
                    eprintln!("{kind:?} round trip {a:?} vs {b:?}");
                    ok = false;
                }
            }
        }
    }
    // GEV / DBL: hill-climb (or Gumbel inversion) reproduces the target
    // moments through independent numeric quadrature.
    for kind in [KernelKind::Gev, KernelKind::DoubleBoundedLognormal] {
        for i in 0..25 {
            let dur = 0.3 + 0.02 * i as f64;
            let m = Moments::new(0.45 * dur, (dur / rng.gen_range(5.0..9.0)).powi(2));
            let shape = match moments_to_params(kind, m, 0.0, dur) {
                Ok(s) => s,
                Err(e) => {
                    eprintln!("{kind:?} inversion failed for {m:?}: {e}");
                    ok = false;
                    continue;
                }
            };
            let p = KernelParams::new(0.0, 1.0, shape).unwrap();
            let got = numeric_moments(&p).unwrap();
            if ((got.m - m.m) / m.m).abs() > 1e-4 || ((got.v - m.v) / m.v).abs() > 1e-4 {
                eprintln!("{kind:?}: target {m:?} got {got:?}");
                ok = false;
            }
        }
    }
    report("criterion 4: moment round trips (analytic 1e-10, GEV/DBL 1e-4)", ok);
}

#[test]
fn criterion_05_synthetic_round_trip() {
    let start = Instant::now();
    let links = [LinkKind::Arc, LinkKind::Clothoid];
    let mut results: Vec<(f64, f64)> = Vec::new();
    let mut case = 0u64;
    'outer: for rep in 0.. {
        for &kind in KernelKind::ALL.iter() {
            for &link in &links {
                if results.len() == 50 {
                    break 'outer;
                }
                case += 1;
                let spec = SynthSpec {
                    n_strokes: 1 + ((case as usize + rep) % 6),
                    kernel_kind: kind,
                    link_kind: link,
                    overlap_fraction: 0.05 * ((case % 7) as f64),
                    seed: 9000 + case,
                };
                let (_, traj) = generate_synthetic(&spec).unwrap();
                let cfg = ExtractorConfig {
                    kernel_kind: kind,
                    link_kind: link,
                    ..ExtractorConfig::default()
                };
                let r = extract(&traj, &cfg).unwrap();
                results.push((r.report.snr_t, r.report.snr_v));
            }
        }
    }
    let hits = results
        .iter()
        .filter(|(t, v)| *t >= 15.0 && *v >= 15.0)
        .count();
    let mut snr_vs: Vec<f64> = results.iter().map(|(_, v)| *v).collect();
    snr_vs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median_v = 0.5 * (snr_vs[24] + snr_vs[25]);
    let elapsed = start.elapsed().as_secs_f64();
    report(
        &format!(
            "criterion 5: synthetic round trip ({hits}/50 over 15 dB, median SNR_v {median_v:.1} dB, {elapsed:.0}s)"
        ),
        hits >= 45 && median_v >= 20.0 && elapsed < 300.0,
    );
}

#[test]
fn criterion_06_inflexion_contrast() {
    use ktt_core::{reconstruct_trajectory, ActionPlan, Stroke};
    let mut rng = StdRng::seed_from_u64(66);
    let mut clothoid_wins = 0;
    for _ in 0..20 {
        // Single S-shaped stroke: equal same-sign tangent offsets force
        // an inflexion that no circular arc can follow.
        let p0 = Point::new(0.1, 0.5);
        let p1 = Point::new(0.1 + rng.gen_range(0.5..0.8), 0.5 + rng.gen_range(-0.1..0.1));
        let chord = (p1 - p0).angle();
        let dev = rng.gen_range(0.35..0.7);
        let link = LinkSpec::new(LinkKind::Clothoid, p0, p1, chord + dev, chord + dev).unwrap();
        let kernel = KernelParams::new(
            0.0,
            1.0,
            KernelShape::Gaussian {
                mu: 0.35,
                sigma2: rng.gen_range(0.002..0.004),
            },
        )
        .unwrap();
        let plan = ActionPlan::new(p0, vec![Stroke::new(kernel, link).unwrap()]).unwrap();
        let times: Vec<f64> = (0..141).map(|i| i as f64 / 200.0).collect();
        let traj = reconstruct_trajectory(&plan, &times).unwrap();
        let snr = |link_kind| {
            let cfg = ExtractorConfig {
                kernel_kind: KernelKind::Gaussian,
                link_kind,
                ..ExtractorConfig::default()
            };
            extract(&traj, &cfg).map(|r| r.report.snr_t).unwrap_or(0.0)
        };
        if snr(LinkKind::Clothoid) > snr(LinkKind::Arc) {
            clothoid_wins += 1;
        }
    }
    report(
        &format!("criterion 6: clothoid beats arc on S-curves ({clothoid_wins}/20)"),
        clothoid_wins >= 18,
    );
}

/// Independent brute force: iterate bitmasks choosing which pooled slots
/// belong to sample A, count U statistics at least as extreme.
fn mwu_brute_force(a: &[f64], b: &[f64]) -> f64 {
    let pooled: Vec<f64> = a.iter().chain(b).cloned().collect();
    let n = pooled.len();
    // Midranks with ties.
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&i, &j| pooled[i].partial_cmp(&pooled[j]).unwrap());
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && pooled[idx[j + 1]] == pooled[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for k in i..=j {
            ranks[idx[k]] = r;
        }
        i = j + 1;
    }
    let na = a.len();
    let u_of = |mask: u32| -> f64 {
        let mut rank_sum = 0.0;
        for k in 0..n {
            if mask & (1 << k) != 0 {
                rank_sum += ranks[k];
            }
        }
        rank_sum - (na * (na + 1)) as f64 / 2.0
    };
    let observed = u_of((1u32 << na) - 1);
    let mean = (na * b.len()) as f64 / 2.0;
    let obs_dev = (observed - mean).abs();
    let mut total = 0u64;
    let mut extreme = 0u64;
    for mask in 0u32..(1 << n) {
        if mask.count_ones() as usize == na {
            total += 1;
            if (u_of(mask) - mean).abs() >= obs_dev - 1e-12 {
                extreme += 1;
            }
        }
    }
    extreme as f64 / total as f64
}

#[test]
fn criterion_07_mwu_exactness() {
    let mut rng = StdRng::seed_from_u64(77);
    let mut ok = true;
    for na in 1..=11usize {
        for nb in 1..=(12 - na) {
            for tie_case in 0..2 {
                let gen = |rng: &mut StdRng, n: usize| -> Vec<f64> {
                    (0..n)
                        .map(|_| {
                            if tie_case == 1 {
                                (rng.gen_range(0..6) as f64) / 2.0
                            } else {
                                rng.gen_range(0.0..1.0)
                            }
                        })
                        .collect()
                };
                let a = gen(&mut rng, na);
                let b = gen(&mut rng, nb);
                let ours = mann_whitney_u(&a, &b).unwrap().p_value;
                let brute = mwu_brute_force(&a, &b);
                if ours != brute {
                    eprintln!("MWU mismatch na={na} nb={nb}: {ours} vs {brute}");
                    ok = false;
                }
            }
        }
    }
    report("criterion 7: exact Mann-Whitney equals brute force (n<=12)", ok);
}

#[test]
fn criterion_08_jb_calibration() {
    use rand_chacha::ChaCha8Rng;
    let mut rejections = 0;
    for seed in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        // Box-Muller normals.
        let sample: Vec<f64> = (0..250)
            .flat_map(|_| {
                let u1: f64 = rng.gen_range(1e-12..1.0);
                let u2: f64 = rng.gen_range(0.0..1.0);
                let r = (-2.0 * u1.ln()).sqrt();
                let th = 2.0 * std::f64::consts::PI * u2;
                [r * th.cos(), r * th.sin()]
            })
            .collect();
        if jarque_bera(&sample).unwrap().reject_at_5pct {
            rejections += 1;
        }
    }
    report(
        &format!("criterion 8: Jarque-Bera calibration ({rejections}% rejection)"),
        (1..=12).contains(&rejections),
    );
}

#[test]
fn criterion_09_classic_model_equivalence() {
    use ktt_core::{ActionPlan, Stroke};
    // Non-overlapping lognormal kernels on arc links vs the direct
    // circle-rotation closed form.
    let p0 = Point::new(0.0, 0.0);
    let p1 = Point::new(1.0, 0.4);
    let p2 = Point::new(1.2, 1.4);
    let mk = |a: Point, b: Point, dev: f64, t0: f64| {
        let chord = (b - a).angle();
        let link = LinkSpec::new(LinkKind::Arc, a, b, chord - dev, chord + dev).unwrap();
        let kernel = KernelParams::new(
            t0,
            1.0,
            KernelShape::Lognormal {
                mu: -1.5,
                sigma2: 0.04,
            },
        )
        .unwrap();
        Stroke::new(kernel, link).unwrap()
    };
    let plan = ActionPlan::new(p0, vec![mk(p0, p1, 0.5, 0.0), mk(p1, p2, -0.3, 1.0)]).unwrap();
    let lognormal_frac = |t: f64, t0: f64| -> f64 {
        if t <= t0 {
            0.0
        } else {
            ktt_core::normal_cdf((((t - t0).ln()) + 1.5) / 0.2)
        }
    };
    let arc_point = |a: Point, b: Point, dev: f64, frac: f64| -> Point {
        let chord_v = b - a;
        let r = chord_v.norm() / (2.0 * dev.sin());
        let mid = a + chord_v * 0.5;
        let n = Point::new(-chord_v.y, chord_v.x) * (1.0 / chord_v.norm());
        let center = mid + n * (r * dev.cos());
        (a - center).rotate(2.0 * dev * frac) + center
    };
    let mut worst = 0.0_f64;
    for i in 0..=400 {
        let t = i as f64 * 0.005;
        let oracle = p0
            + (arc_point(p0, p1, 0.5, lognormal_frac(t, 0.0)) - p0)
            + (arc_point(p1, p2, -0.3, lognormal_frac(t, 1.0)) - p1);
        worst = worst.max(plan.position_at(t).dist(oracle));
    }
    report(
        &format!("criterion 9: Sigma-Lognormal equivalence (worst {worst:.2e})"),
        worst < 1e-6,
    );
}

#[test]
fn criterion_10_determinism() {
    let (_, traj) = generate_synthetic(&SynthSpec {
        n_strokes: 3,
        kernel_kind: KernelKind::Lognormal,
        link_kind: LinkKind::Clothoid,
        overlap_fraction: 0.25,
        seed: 424_242,
    })
    .unwrap();
    let cfg = ExtractorConfig::default();
    let once = write_plan(&plan_to_document(&extract(&traj, &cfg).unwrap().plan));
    let twice = write_plan(&plan_to_document(&extract(&traj, &cfg).unwrap().plan));
    report(
        "criterion 10: repeated extraction yields byte-identical plans",
        once == twice && !once.is_empty(),
    );
}
