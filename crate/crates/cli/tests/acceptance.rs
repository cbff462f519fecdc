//! One PASS/FAIL line per acceptance criterion; exits nonzero if any fails.

// Negated comparisons `!(x < y)` also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::f64::consts::PI;
use std::process::Command;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use expray_core::conjugacy::{self, external_address_of, joint_contexts, potential_of};
use expray_core::endpoint::{self, SeriesVerdict};
use expray_core::model::{self, ModelError, ModelPoint, SpeedSpec};
use expray_core::paramspace::{self, kappa_lower_bound};
use expray_core::ray::{self, RayContext};
use expray_core::{Complex64, ExternalAddress, TWO_PI};

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn kappas() -> Vec<Complex64> {
    vec![
        Complex64::new(-2.0, 0.0),
        Complex64::new(0.0, 1.0),
        Complex64::new(1.0, 2.0),
        Complex64::new(TWO_PI.ln(), PI / 2.0),
    ]
}

fn addresses() -> Vec<(&'static str, ExternalAddress)> {
    vec![
        ("per(0)", ExternalAddress::periodic(&[0])),
        ("per(0,1)", ExternalAddress::periodic(&[0, 1])),
        ("per(0,1,2)", ExternalAddress::periodic(&[0, 1, 2])),
        ("poly(1,1)", ExternalAddress::poly(&[0], 1.0, 1.0, 1).unwrap()),
        ("tower(1)", ExternalAddress::tower(&[], 1.0).unwrap()),
    ]
}

/// Up to 20 potentials with both `(s, t)` and its model image in `Y_Q`.
fn grid(ctx: &RayContext, s: &ExternalAddress) -> Result<Vec<ModelPoint>, String> {
    let ts = model::t_s(s, 1e-9).map_err(|e| e.to_string())?;
    let mut points = Vec::new();
    for j in 0..80 {
        if points.len() == 20 {
            break;
        }
        let p = ModelPoint::new(s.clone(), ts + ctx.q + 0.05 + 0.25 * j as f64);
        let image = match model::model_step(&p) {
            Ok(q) => q,
            Err(_) => continue,
        };
        let inside = |q: &ModelPoint| matches!(model::in_y(q, ctx.q, ctx.horizon), Ok(true));
        if inside(&p) && inside(&image) {
            points.push(p);
        }
    }
    if points.len() < 20 {
        return Err(format!("only {} grid points in Y_Q for {s}", points.len()));
    }
    Ok(points)
}

fn functional_equation() -> Check {
    let mut worst: f64 = 0.0;
    for kappa in kappas() {
        let ctx = RayContext::new(kappa);
        for (name, s) in addresses() {
            for p in grid(&ctx, &s)? {
                let r = ray::functional_equation_residual(&ctx, &p).map_err(|e| format!("{name} at t={}: {e}", p.potential))?;
                if !(r < 1e-8) {
                    return Err(format!("kappa={kappa} {name} t={}: residual {r:e}", p.potential));
                }
                worst = worst.max(r);
            }
        }
    }
    Ok(format!("max residual {worst:.2e}"))
}

fn bounds() -> Check {
    let (mut re_gap, mut z_gap): (f64, f64) = (0.0, 0.0);
    let mut tail_points = 0;
    for kappa in kappas() {
        let ctx = RayContext::new(kappa);
        for (name, s) in addresses() {
            let s1 = s.value(1).unwrap();
            for p in grid(&ctx, &s)? {
                let g = ray::g_point(&ctx, &p).map_err(|e| format!("{name}: {e}"))?.point;
                let t = p.potential;
                let z = p.z().map_err(|e| e.to_string())?;
                let (a, b) = ((g.re - t).abs(), (g - z).norm());
                if !(a < 2.0 && b < PI + 2.0) {
                    return Err(format!("kappa={kappa} {name} t={t}: |Re g - t| = {a}, |g - Z| = {b}"));
                }
                re_gap = re_gap.max(a);
                z_gap = z_gap.max(b);
                if t >= 10.0 {
                    let d = (g - Complex64::new(t, TWO_PI * s1)).norm();
                    let allowed = (-t).exp() * ctx.seed_constant();
                    if d > allowed {
                        return Err(format!("kappa={kappa} {name} t={t}: {d:e} exceeds {allowed:e}"));
                    }
                    tail_points += 1;
                }
            }
        }
    }
    Ok(format!("max |Re g - t| {re_gap:.3}, max |g - Z| {z_gap:.3}, {tail_points} points with t >= 10"))
}

fn random_periodic(rng: &mut ChaCha8Rng, range: i64, max_period: usize) -> ExternalAddress {
    let period = rng.gen_range(1..=max_period);
    let block: Vec<i64> = (0..period).map(|_| rng.gen_range(-range..=range)).collect();
    ExternalAddress::periodic(&block)
}

fn sandwich() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let s = random_periodic(&mut rng, 10, 5);
        let lower = model::t_star(&s, 64).map_err(|e| e.to_string())?;
        let ts = model::t_s(&s, 1e-9).map_err(|e| e.to_string())?;
        if !(lower <= ts && ts <= lower + 1.0) {
            return Err(format!("{s}: t_s = {ts} outside [{lower}, {}]", lower + 1.0));
        }
        let next = model::t_s(&s.shift(), 1e-9).map_err(|e| e.to_string())?;
        let image = model::f(ts).map_err(|e| e.to_string())? - s.weight(2).unwrap();
        let d = (image - next).abs();
        if !(d < 1e-6) {
            return Err(format!("{s}: recurrence defect {d:e}"));
        }
        worst = worst.max(d);
    }
    Ok(format!("100 addresses, max recurrence defect {worst:.2e}"))
}

fn roundtrip() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst: f64 = 0.0;
    let mut done = 0;
    while done < 50 {
        let kappa = kappas()[done % 4];
        let ctx = RayContext::new(kappa);
        let s = random_periodic(&mut rng, 3, 3);
        let ts = model::t_s(&s, 1e-9).map_err(|e| e.to_string())?;
        let t = ts + ctx.q + 1.0 + rng.gen_range(0.0..4.0);
        let p = ModelPoint::new(s.clone(), t);
        if !matches!(model::in_y(&p, ctx.q, ctx.horizon), Ok(true)) {
            continue;
        }
        let z = ray::g_point(&ctx, &p).map_err(|e| e.to_string())?.point;
        let record = external_address_of(&ctx, z, ctx.horizon).map_err(|e| format!("{s} t={t}: {e}"))?;
        for (k, &strip) in record.prefix().iter().enumerate() {
            if strip != s.entry(k + 1).unwrap() {
                return Err(format!("{s} t={t}: entry {} recovered as {strip}", k + 1));
            }
        }
        let recovered = potential_of(&ctx, &record).map_err(|e| format!("{s} t={t}: {e}"))?;
        let d = (recovered - t).abs();
        if !(d < 1e-8) {
            return Err(format!("{s} t={t}: potential recovered as {recovered}"));
        }
        worst = worst.max(d);
        done += 1;
    }
    Ok(format!("50 points, max potential error {worst:.2e}"))
}

fn boettcher_analog() -> Check {
    let (c1, c2, _) = joint_contexts(Complex64::new(-2.0, 0.0), Complex64::new(0.0, 1.0));
    let mut worst: f64 = 0.0;
    let mut last_speed: f64 = 0.0;
    for i in 0..20 {
        let t = 8.0 + 0.1 * i as f64;
        let m = ((model::f(t).unwrap() - (t + 8.0)) / TWO_PI).floor() as i64;
        let s = ExternalAddress::preperiodic(&[(i % 3) as i64 - 1, m], &[0]);
        let z = ray::g_point(&c1, &ModelPoint::new(s, t)).map_err(|e| e.to_string())?.point;
        let residual = conjugacy::conjugacy_residual(&c1, &c2, z).map_err(|e| format!("z={z}: {e}"))?;
        if !(residual < 1e-8) {
            return Err(format!("z={z}: residual {residual:e}"));
        }
        worst = worst.max(residual);
        let table = conjugacy::phi(&c1, &c2, z).map_err(|e| e.to_string())?.speed_table();
        if table.len() < 2 || !table.windows(2).all(|w| w[1].1 < w[0].1) {
            return Err(format!("z={z}: speed table not strictly decreasing: {table:?}"));
        }
        last_speed = table.last().unwrap().1;
        if !(last_speed < 1e-6) {
            return Err(format!("z={z}: final distance {last_speed:e}"));
        }
    }
    Ok(format!("20 points, max residual {worst:.2e}, last final distance {last_speed:.2e}"))
}

fn escape_speed() -> Check {
    let ctx = RayContext::new(Complex64::new(-2.0, 0.0));
    let mut summary = Vec::new();
    for (spec, n_terms, n0) in [(SpeedSpec::Sqrt, 200, 40), (SpeedSpec::Log, 400, 300)] {
        let s = model::escape_speed_address(&spec, n_terms).map_err(|e| e.to_string())?;
        let mut checked = 0;
        let mut worst: f64 = 0.0;
        for n in n0..=n0 + 10 {
            // E^{n-1} of the endpoint at s is the endpoint at the shifted address.
            let Ok(w) = ray::g_endpoint(&ctx, &s.shift_by(n - 1)) else { continue };
            let d = (w.point.re - spec.r(n).unwrap()).abs();
            if d > 2.0 + TWO_PI {
                return Err(format!("{spec:?} n={n}: |Re - r_n| = {d}"));
            }
            worst = worst.max(d);
            checked += 1;
        }
        if checked == 0 {
            return Err(format!("{spec:?}: no checkable n"));
        }
        summary.push(format!("{spec:?} {checked} checked, max deviation {worst:.3}"));
    }
    Ok(summary.join("; "))
}

fn differentiability() -> Check {
    let spiral = ExternalAddress::poly(&[0], 1.0, 1.0, 1).unwrap();
    let v = endpoint::differentiability_series(&spiral, 60).map_err(|e| e.to_string())?.verdict;
    if v != SeriesVerdict::Divergent {
        return Err(format!("poly(1,1) gave {}", v.name()));
    }
    let tower = ExternalAddress::tower(&[], 1.0).unwrap();
    let verdicts: Vec<SeriesVerdict> = [1e-7, 1e-9, 1e-11]
        .iter()
        .map(|&tol| endpoint::differentiability_series_with_tol(&tower, 40, tol).map(|r| r.verdict))
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    if verdicts.iter().any(|&v| v != verdicts[0]) {
        return Err(format!("tower(1) verdict changes with tol: {verdicts:?}"));
    }
    match endpoint::differentiability_series(&ExternalAddress::periodic(&[0, 1]), 10) {
        Err(ModelError::PreconditionSlowAddress) => {}
        other => return Err(format!("periodic address gave {other:?}")),
    }
    Ok(format!("poly Divergent, tower {} at every tol, periodic refused", verdicts[0].name()))
}

fn parameter_rays() -> Check {
    let zero = ExternalAddress::periodic(&[0]);
    for t in [5.0, 10.0, 20.0] {
        let sol = paramspace::parameter_ray_point(&zero, t, 1e-11).map_err(|e| format!("t={t}: {e}"))?;
        if !(sol.kappa.im.abs() < 1e-7 && sol.residual < 1e-10) {
            return Err(format!("per(0) t={t}: kappa {} residual {:e}", sol.kappa, sol.residual));
        }
    }
    let one = paramspace::parameter_ray_point(&ExternalAddress::periodic(&[1]), 25.0, 1e-11).map_err(|e| e.to_string())?;
    if !((one.kappa.im - TWO_PI).abs() < 0.5 && one.residual < 1e-10) {
        return Err(format!("per(1) t=25: kappa {} residual {:e}", one.kappa, one.residual));
    }
    if kappa_lower_bound(1, 10.0) != Ok(4.0 * PI) {
        return Err(format!("kappa_lower_bound(1, 10) = {:?}", kappa_lower_bound(1, 10.0)));
    }
    Ok(format!("per(1) at t=25 gives {:.6}", one.kappa))
}

fn symmetry() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst: f64 = 0.0;
    let mut done = 0;
    while done < 20 {
        let kappa = Complex64::new(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
        let s = random_periodic(&mut rng, 3, 3);
        let (c, cbar) = (RayContext::new(kappa), RayContext::new(kappa.conj()));
        let ts = model::t_s(&s, 1e-9).map_err(|e| e.to_string())?;
        let t = ts + c.q + 0.5 + rng.gen_range(0.0..5.0);
        let p = ModelPoint::new(s.clone(), t);
        if !matches!(model::in_y(&p, c.q, c.horizon), Ok(true)) {
            continue;
        }
        let g = ray::g_point(&c, &p).map_err(|e| e.to_string())?.point;
        let h = ray::g_point(&cbar, &ModelPoint::new(s.negate(), t)).map_err(|e| e.to_string())?.point;
        let d = (g.conj() - h).norm();
        if !(d < 1e-9) {
            return Err(format!("kappa={kappa} {s} t={t}: defect {d:e}"));
        }
        worst = worst.max(d);
        done += 1;
    }
    Ok(format!("20 samples, max defect {worst:.2e}"))
}

fn cli_invocations() -> Vec<Vec<&'static str>> {
    vec![
        vec!["classify", "--address", "[|per:0,1]"],
        vec!["ts", "--address", "[|tower:1]", "--samples", "4"],
        vec!["ray", "--kappa", "-2", "--address", "[|per:0]", "--t-lo", "0", "--t-hi", "4", "--samples", "9"],
        vec!["ray", "--kappa", "1+2i", "--address", "[0|poly:1,1,+]", "--t-lo", "0", "--t-hi", "3", "--samples", "5", "--format", "json"],
        vec!["conjugate", "--kappa", "-2", "--kappa2", "i", "--point", "9+0.3i"],
        vec!["param-ray", "--address", "[|per:0]", "--t-lo", "5", "--t-hi", "10", "--samples", "3"],
        vec!["diff-endpoint", "--address", "[0|poly:1,1,+]", "--samples", "20"],
        vec!["escape-address", "--speed", "sqrt", "--samples", "30"],
        vec!["itinerary", "--address", "[|per:0,1]", "--ref", "[|per:-1,1]", "--address2", "[|per:1,0]", "--samples", "6"],
        vec!["escape-image", "--kappa", "-2", "--width", "64", "--height", "48", "--max-iter", "20"],
        vec!["classify", "--address", "not-an-address"],
    ]
}

fn determinism() -> Check {
    let exe = env!("CARGO_BIN_EXE_expray");
    let invocations = cli_invocations();
    for args in &invocations {
        let run = || Command::new(exe).args(args).env_remove("EXPRAY_CONFIG").output().map_err(|e| e.to_string());
        let (a, b) = (run()?, run()?);
        if a.stdout != b.stdout || a.status.code() != b.status.code() {
            return Err(format!("outputs differ for {args:?}"));
        }
    }
    Ok(format!("{} invocations byte-identical", invocations.len()))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("functional equation", functional_equation),
        ("bounds", bounds),
        ("sandwich", sandwich),
        ("roundtrip", roundtrip),
        ("conjugacy", boettcher_analog),
        ("escape speed", escape_speed),
        ("differentiability", differentiability),
        ("parameter rays", parameter_rays),
        ("symmetry", symmetry),
        ("determinism", determinism),
    ];
    let mut failed = Vec::new();
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("PASS {} {name}: {detail}", i + 1),
            Err(reason) => {
                println!("FAIL {} {name}: {reason}", i + 1);
                failed.push(i + 1);
            }
        }
    }
    if !failed.is_empty() {
        eprintln!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
