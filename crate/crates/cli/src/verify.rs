//! The invariant check battery behind `stargeo verify` and the
//! `verify_suite` scenario task.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use stargeo_core::{
    expected_gauge_mc, expected_gauge_quadrature, gaussian_mixture_body, hellinger_quadratic_roots,
    is_weakly_convex, max_radius_bound, moment_profile, moment_profile_numeric, w1_exact,
    AdversarialProblem, AlphaProblem, Density, HellingerProblem, HomogeneousNet, RadialShape,
    SphereGrid, StarBody,
};

#[derive(Debug, Clone)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

fn check(name: &str, pass: bool, detail: String) -> Check {
    Check {
        name: name.to_string(),
        pass,
        detail,
    }
}

/// Run the battery; `quick` shrinks grids and repetition counts.
pub fn run_suite(quick: bool, seed: u64) -> Vec<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = if quick { 512 } else { 2048 };
    let grid = Arc::new(SphereGrid::new(2, n).unwrap());
    let pairs = if quick { 10 } else { 50 };
    let mut checks = Vec::new();

    // Quadrature backbone.
    let w2 = (grid.total_weight() - 2.0 * PI).abs();
    checks.push(check(
        "grid/weight-sum-2d",
        w2 < 1e-9,
        format!("|sum w - 2pi| = {w2:.2e}"),
    ));
    let g3 = SphereGrid::new(3, if quick { 2000 } else { 20000 }).unwrap();
    let w3 = (g3.total_weight() - 4.0 * PI).abs() / (4.0 * PI);
    checks.push(check(
        "grid/weight-sum-3d",
        w3 < 1e-3,
        format!("rel err = {w3:.2e}"),
    ));
    let moment = grid.integrate(|u| u[0] * u[0]).unwrap();
    checks.push(check(
        "grid/trig-exactness",
        (moment - PI).abs() < 1e-11,
        format!("int cos^2 = {moment:.12}"),
    ));

    // Lutwak inequality and dilate equality.
    let mut worst_slack = f64::INFINITY;
    let mut worst_eq = 0.0f64;
    for _ in 0..pairs {
        let k = StarBody::random_smooth_2d(grid.clone(), 4, 0.3, &mut rng);
        let l = StarBody::random_smooth_2d(grid.clone(), 4, 0.3, &mut rng);
        let lhs = l.dual_mixed_volume(&k, -1.0).unwrap().powi(2);
        let rhs = l.volume().powi(3) / k.volume();
        worst_slack = worst_slack.min(lhs - rhs);
        let lam: f64 = rng.gen_range(0.5..2.0);
        let kd = k.dilate(lam);
        let lhs = kd.dual_mixed_volume(&k, -1.0).unwrap().powi(2);
        let rhs = kd.volume().powi(3) / k.volume();
        worst_eq = worst_eq.max(((lhs - rhs) / rhs).abs());
    }
    checks.push(check(
        "starbody/lutwak-inequality",
        worst_slack >= -1e-9,
        format!("worst slack = {worst_slack:.2e}"),
    ));
    checks.push(check(
        "starbody/lutwak-dilate-equality",
        worst_eq <= 1e-9,
        format!("worst rel gap = {worst_eq:.2e}"),
    ));

    // Gauge/radial duality on grid nodes.
    let k = StarBody::random_smooth_2d(grid.clone(), 4, 0.3, &mut rng);
    let mut worst = 0.0f64;
    for i in (0..grid.len()).step_by(7) {
        let u = grid.direction(i);
        let rho = k.radial_values()[i];
        worst = worst.max((k.gauge(&[rho * u[0], rho * u[1]]) - 1.0).abs());
    }
    checks.push(check(
        "starbody/gauge-radial-duality",
        worst < 1e-12,
        format!("worst |gauge - 1| = {worst:.2e}"),
    ));

    // Radius bound for unit-volume well-conditioned bodies.
    let bound_ok = max_radius_bound(2, 1.0).unwrap() == 1.5
        && (max_radius_bound(3, 1.0).unwrap() - 4.0 / PI).abs() < 1e-15;
    checks.push(check(
        "starbody/radius-bound-constants",
        bound_ok,
        "R_1 = 3/2 (d=2), 4/pi (d=3)".into(),
    ));

    // Moment profiles: closed form vs numeric integration.
    let small = Arc::new(SphereGrid::new(2, 16).unwrap());
    let gauss = Density::isotropic_gaussian(2, 0.8);
    let fast = moment_profile(&gauss, 1.0, &small).unwrap();
    let slow = moment_profile_numeric(&gauss, 1.0, &small).unwrap();
    let gap = fast
        .values()
        .iter()
        .zip(slow.values())
        .map(|(a, b)| (a - b).abs() / a)
        .fold(0.0f64, f64::max);
    checks.push(check(
        "density/gaussian-moment-closed-form",
        gap < 1e-8,
        format!("max rel gap = {gap:.2e}"),
    ));
    let gibbs = Density::gauge_gibbs(
        StarBody::lq_ball(small.clone(), 1.0, 1.0),
        1.0,
        RadialShape::Exp,
    );
    let fast = moment_profile(&gibbs, 1.0, &small).unwrap();
    let slow = moment_profile_numeric(&gibbs, 1.0, &small).unwrap();
    let gap = fast
        .values()
        .iter()
        .zip(slow.values())
        .map(|(a, b)| (a - b).abs() / a)
        .fold(0.0f64, f64::max);
    checks.push(check(
        "density/gibbs-fast-path",
        gap < 1e-8,
        format!("max rel gap = {gap:.2e}"),
    ));

    // Expectation identity: quadrature vs Monte Carlo.
    let disk = StarBody::ball(grid.clone(), 1.0);
    let quad = expected_gauge_quadrature(&gauss, &disk, &grid).unwrap();
    let (mc, se) = expected_gauge_mc(&gauss, &disk, if quick { 50_000 } else { 200_000 }, seed);
    checks.push(check(
        "density/expectation-identity",
        (quad - mc).abs() <= 4.0 * se,
        format!("quad {quad:.6}, mc {mc:.6}, se {se:.2e}"),
    ));

    // Adversarial loss identity and optimality certificate.
    let prob = AdversarialProblem::new(
        Density::isotropic_gaussian(2, 1.0),
        Density::isotropic_gaussian(2, 0.5),
        grid.clone(),
    )
    .unwrap();
    let lrn = prob.build_lrn().unwrap();
    let k_star = prob.optimal().unwrap();
    let best = prob.loss(&k_star).unwrap();
    let mut id_gap = 0.0f64;
    let mut certified = true;
    for _ in 0..pairs.min(20) {
        let k = StarBody::random_smooth_2d(grid.clone(), 4, 0.3, &mut rng);
        let direct = prob.loss(&k).unwrap();
        let dmv = 2.0 * lrn.dual_mixed_volume(&k, -1.0).unwrap();
        id_gap = id_gap.max(((direct - dmv) / direct).abs());
        let unit = k.normalized_to_unit_volume();
        certified &= best <= prob.loss(&unit).unwrap() + 1e-9;
    }
    checks.push(check(
        "adversarial/dual-mixed-volume-identity",
        id_gap <= 1e-10,
        format!("max rel gap = {id_gap:.2e}"),
    ));
    checks.push(check(
        "adversarial/optimality-certificate",
        certified,
        "K* beats random unit-volume bodies".into(),
    ));

    // Hellinger identity, lambda* guard, plug-in consistency.
    let l1 = StarBody::lq_ball(grid.clone(), 1.0, 1.0);
    let l2 = StarBody::ball(grid.clone(), 2.0_f64.sqrt());
    let hell = HellingerProblem::new(
        Density::gauge_gibbs(l1.clone(), 1.0, RadialShape::Exp),
        Density::gauge_gibbs(l2.clone(), 1.0, RadialShape::Exp),
        grid.clone(),
    )
    .unwrap();
    let l_r = hell.l_r();
    let k = StarBody::random_smooth_2d(grid.clone(), 3, 0.3, &mut rng);
    let loss = hell.loss(&k).unwrap();
    let krn = hell.build_krn(&k).unwrap();
    let gap = ((loss - 2.0 * l_r.dual_mixed_volume(&krn, -1.0).unwrap()) / loss).abs();
    checks.push(check(
        "hellinger/dual-mixed-volume-identity",
        gap <= 1e-10,
        format!("rel gap = {gap:.2e}"),
    ));
    let ls = hell.lambda_star();
    let above = hell.dilate_solutions(ls * (1.0 + 1e-6)).is_err();
    let at = hell.dilate_solutions(ls).is_ok();
    checks.push(check(
        "hellinger/lambda-star-guard",
        above && at,
        format!("lambda* = {ls:.6}"),
    ));
    let mut plug_gap = 0.0f64;
    for frac in [0.3, 0.7, 1.0] {
        let (kp, km) = hell.dilate_solutions(frac * ls).unwrap();
        for body in [kp, km] {
            let krn = hell.build_krn(&body).unwrap();
            match krn.is_dilate(&l_r, 1e-9) {
                Some(lam) => plug_gap = plug_gap.max(((lam - frac * ls) / (frac * ls)).abs()),
                None => plug_gap = f64::INFINITY,
            }
        }
    }
    checks.push(check(
        "hellinger/plug-in-consistency",
        plug_gap <= 1e-9,
        format!("max rel gap = {plug_gap:.2e}"),
    ));

    // Quadratic root counts match sign analysis.
    let mut roots_ok = true;
    for _ in 0..200 {
        let a: f64 = rng.gen_range(0.1..5.0);
        let b: f64 = rng.gen_range(0.1..5.0);
        let lambda: f64 = rng.gen_range(0.01..3.0);
        let d: usize = rng.gen_range(2..=6);
        let disc = 1.0 - 4.0 * lambda * lambda * (b / a).powi(d as i32 - 1);
        roots_ok &= hellinger_quadratic_roots(a, b, lambda, d).is_some() == (disc >= -1e-12);
    }
    checks.push(check(
        "hellinger/quadratic-root-count",
        roots_ok,
        "two positive roots iff discriminant nonnegative".into(),
    ));

    // Alpha-divergence identity across the sweep.
    let mut alpha_gap = 0.0f64;
    for alpha in [0.25, 0.5, 0.75] {
        let ap = AlphaProblem::new(
            Density::gauge_gibbs(l1.clone(), 1.0, RadialShape::Exp),
            Density::gauge_gibbs(l2.clone(), 1.0, RadialShape::Exp),
            grid.clone(),
            alpha,
        )
        .unwrap();
        let k = StarBody::random_smooth_2d(grid.clone(), 3, 0.3, &mut rng);
        let loss = ap.loss(&k).unwrap();
        let dmv = ap.dual_mixed_volume_form(&k).unwrap();
        alpha_gap = alpha_gap.max(((loss - dmv) / loss).abs());
    }
    checks.push(check(
        "alpha/dual-mixed-volume-identity",
        alpha_gap <= 1e-10,
        format!("max rel gap = {alpha_gap:.2e}"),
    ));

    // Lutwak chain instance: V_{-a}(L, K) >= vol(L)^{(d+a)/d} vol(K)^{-a/d}.
    let mut chain_slack = f64::INFINITY;
    for alpha in [0.25, 0.5, 0.75] {
        let k = StarBody::random_smooth_2d(grid.clone(), 3, 0.3, &mut rng);
        let l = StarBody::random_smooth_2d(grid.clone(), 3, 0.3, &mut rng);
        let lhs = l.dual_mixed_volume(&k, -alpha).unwrap();
        let rhs = l.volume().powf((2.0 + alpha) / 2.0) * k.volume().powf(-alpha / 2.0);
        chain_slack = chain_slack.min(lhs - rhs);
    }
    checks.push(check(
        "alpha/lutwak-chain",
        chain_slack >= -1e-9,
        format!("worst slack = {chain_slack:.2e}"),
    ));

    // Weak convexity of the mixture body.
    let wg = Arc::new(SphereGrid::new(2, if quick { 1024 } else { 4096 }).unwrap());
    let mixture = gaussian_mixture_body(&wg, 0.1).unwrap();
    let not_at_10 = !is_weakly_convex(&mixture, 10.0);
    let yes_at_100 = is_weakly_convex(&mixture, 100.0);
    checks.push(check(
        "weakconvex/mixture-transition",
        not_at_10 && yes_at_100,
        format!("convex@10 = {}, convex@100 = {}", !not_at_10, yes_at_100),
    ));

    // Transport: exact matching against brute force and empirical duality.
    let mut w1_ok = true;
    for trial in 0..10 {
        let n = 1 + (trial % 6);
        let xs: Vec<Vec<f64>> = (0..n)
            .map(|_| vec![rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)])
            .collect();
        let ys: Vec<Vec<f64>> = (0..n)
            .map(|_| vec![rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)])
            .collect();
        let fast = w1_exact(&xs, &ys).unwrap();
        let brute = brute_force_w1(&xs, &ys);
        w1_ok &= (fast - brute).abs() < 1e-10;
    }
    checks.push(check(
        "transport/brute-force-agreement",
        w1_ok,
        "exact matching equals factorial minimum for n <= 6".into(),
    ));
    let c = prob
        .w1_lower_bound_check(&StarBody::ball(grid.clone(), 1.5), 256, seed)
        .unwrap();
    checks.push(check(
        "transport/empirical-duality",
        c.holds,
        format!("|F| = {:.4} <= W1 = {:.4} + 3se", c.f_hat.abs(), c.w1_hat),
    ));

    // Network properties.
    let nets = if quick { 5 } else { 20 };
    let mut net_ok = true;
    for _ in 0..nets {
        let net = HomogeneousNet::random(&[2, 4, 8], rng.gen_range(0.1..0.9), &mut rng);
        net_ok &= net.validate().is_valid();
        for _ in 0..5 {
            let x: [f64; 2] = [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
            if x[0].abs() + x[1].abs() < 0.1 {
                continue;
            }
            let r1 = net.forward(&x).unwrap();
            let r2 = net.forward(&[2.0 * x[0], 2.0 * x[1]]).unwrap();
            net_ok &= (r2 - 2.0 * r1).abs() <= 1e-6 * r2.abs();
            let (r, grad) = net.forward_with_gradient(&x).unwrap();
            let dot: f64 = grad.iter().zip(&x).map(|(g, xi)| g * xi).sum();
            net_ok &= (dot - r).abs() <= 1e-5 * r.max(1e-9);
        }
    }
    checks.push(check(
        "starnet/homogeneity-euler",
        net_ok,
        format!("{nets} random nets"),
    ));

    checks
}

fn brute_force_w1(xs: &[Vec<f64>], ys: &[Vec<f64>]) -> f64 {
    fn permute(items: &mut Vec<usize>, k: usize, visit: &mut impl FnMut(&[usize])) {
        if k == items.len() {
            visit(items);
            return;
        }
        for i in k..items.len() {
            items.swap(k, i);
            permute(items, k + 1, visit);
            items.swap(k, i);
        }
    }
    let n = xs.len();
    let mut cols: Vec<usize> = (0..n).collect();
    let mut best = f64::INFINITY;
    permute(&mut cols, 0, &mut |perm| {
        let cost: f64 = perm
            .iter()
            .enumerate()
            .map(|(i, &j)| {
                xs[i]
                    .iter()
                    .zip(&ys[j])
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt()
            })
            .sum();
        best = best.min(cost);
    });
    best / n as f64
}
