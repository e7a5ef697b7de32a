//! Scenario-driven experiment runner: parses a JSON scenario, executes the
//! task, and writes `bodies.csv`, `figure.svg`, and `report.json` (plus
//! task-specific CSV/JSON extras) into `<out>/<name>/`.

pub mod scenario;
pub mod svg;
pub mod verify;

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Map, Value};

use stargeo_core::{
    erm_solve, train, weak_convexity_report, AdversarialProblem, AlphaProblem, CriticLoss, Density,
    ErmOptions, HellingerProblem, HomogeneousNet, Reweighting, RhoStar, SphereGrid, StarBody,
    TrainOptions,
};

pub use scenario::{BodySpec, CriticLossSpec, DensitySpec, Scenario, ShapeSpec, Task};

/// Errors mapped onto process exit codes: validation -> 2, numerical -> 3.
#[derive(Debug)]
pub enum CliError {
    Validation(String),
    Numerical(stargeo_core::Error),
    Io(std::io::Error),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Validation(msg) => write!(f, "validation error: {msg}"),
            CliError::Numerical(e) => write!(f, "numerical error: {e}"),
            CliError::Io(e) => write!(f, "io error: {e}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<stargeo_core::Error> for CliError {
    fn from(e: stargeo_core::Error) -> Self {
        CliError::Numerical(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) | CliError::Io(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

/// Result of one scenario run.
#[derive(Debug)]
pub struct RunSummary {
    pub out_dir: PathBuf,
    pub report: Value,
    /// False when the task carries pass/fail checks and at least one failed.
    pub all_checks_passed: bool,
}

struct TaskOutput {
    bodies: Vec<StarBody>,
    report: Map<String, Value>,
    extra_files: Vec<(String, String)>,
    all_checks_passed: bool,
}

/// Execute a parsed scenario and write its artifacts under `out_root`.
pub fn run_scenario(scenario: &Scenario, out_root: &Path) -> Result<RunSummary, CliError> {
    let grid = Arc::new(
        SphereGrid::new(scenario.dim, scenario.grid)
            .map_err(|e| CliError::Validation(e.to_string()))?,
    );
    let output = execute(scenario, &grid)?;

    let dir = out_root.join(&scenario.name);
    fs::create_dir_all(&dir)?;

    fs::write(dir.join("bodies.csv"), bodies_csv(&output.bodies, &grid))?;
    let refs: Vec<&StarBody> = output.bodies.iter().collect();
    fs::write(dir.join("figure.svg"), svg::render_bodies(&refs))?;

    let mut report = output.report;
    report.insert("schema".into(), json!(1));
    report.insert("name".into(), json!(scenario.name));
    report.insert("dim".into(), json!(scenario.dim));
    report.insert("grid".into(), json!(scenario.grid));
    report.insert("seed".into(), json!(scenario.seed));
    let report = Value::Object(report);
    let mut text = serde_json::to_string_pretty(&report).expect("report serialization");
    text.push('\n');
    fs::write(dir.join("report.json"), text)?;

    for (name, contents) in &output.extra_files {
        fs::write(dir.join(name), contents)?;
    }

    Ok(RunSummary {
        out_dir: dir,
        report,
        all_checks_passed: output.all_checks_passed,
    })
}

/// Aggregated boundary export: body label column plus the per-dimension
/// boundary columns, bodies in declaration order.
fn bodies_csv(bodies: &[StarBody], grid: &Arc<SphereGrid>) -> String {
    let mut out = String::new();
    if grid.dim() == 2 {
        out.push_str("body,theta,rho,x,y\n");
        for body in bodies {
            for i in 0..grid.len() {
                let theta = grid.angle(i);
                let rho = body.radial_values()[i];
                let u = grid.direction(i);
                out.push_str(&format!(
                    "{},{theta},{rho},{},{}\n",
                    body.label(),
                    rho * u[0],
                    rho * u[1]
                ));
            }
        }
    } else {
        out.push_str("body,x,y,z,rho\n");
        for body in bodies {
            for i in 0..grid.len() {
                let rho = body.radial_values()[i];
                let u = grid.direction(i);
                out.push_str(&format!(
                    "{},{},{},{},{rho}\n",
                    body.label(),
                    rho * u[0],
                    rho * u[1],
                    rho * u[2]
                ));
            }
        }
    }
    out
}

fn execute(scenario: &Scenario, grid: &Arc<SphereGrid>) -> Result<TaskOutput, CliError> {
    match &scenario.task {
        Task::AdversarialFigure {
            real,
            noise,
            noise_weight,
            reweight_margin,
            alpha,
        } => adversarial_figure(
            scenario,
            grid,
            real,
            noise,
            *noise_weight,
            *reweight_margin,
            *alpha,
        ),
        Task::HellingerFigure {
            real,
            noise,
            lambda_fractions,
        } => hellinger_figure(grid, real, noise, lambda_fractions),
        Task::AlphaSweep {
            real,
            noise,
            alphas,
        } => alpha_sweep(grid, real, noise, alphas),
        Task::ToyInverse {
            u,
            a,
            sigma2,
            reweight_margin,
        } => toy_inverse(grid, u, a, *sigma2, *reweight_margin),
        Task::WeakConvexSweep {
            epsilon,
            rhos,
            cap,
            tol,
        } => weak_convex_sweep(grid, *epsilon, rhos, *cap, *tol),
        Task::VerifySuite { quick } => verify_suite(*quick, scenario.seed),
        Task::ErmRun {
            real,
            noise,
            samples,
            steps,
            step_size,
            gamma_floor,
        } => erm_run(
            scenario,
            grid,
            real,
            noise,
            *samples,
            *steps,
            *step_size,
            *gamma_floor,
        ),
        Task::TrainRun {
            real,
            noise,
            samples,
            loss,
            widths,
            slope,
            steps,
            lr,
            batch,
            gp_weight,
        } => train_run(
            scenario, grid, real, noise, *samples, *loss, widths, *slope, *steps, *lr, *batch,
            *gp_weight,
        ),
    }
}

/// Composed moment-profile constant of a gauge-Gibbs density: the scalar c
/// with rho_p^{d+1} = c * rho_L^{d+1}.
fn gibbs_constant(density: &Density, dim: usize) -> Option<f64> {
    match density {
        Density::GaugeGibbs { q, shape, norm, .. } => {
            Some(shape.radial_constant(*q, dim as f64 + 1.0) / norm)
        }
        _ => None,
    }
}

#[allow(clippy::too_many_arguments)]
fn adversarial_figure(
    scenario: &Scenario,
    grid: &Arc<SphereGrid>,
    real: &DensitySpec,
    noise: &DensitySpec,
    noise_weight: Option<f64>,
    reweight_margin: Option<f64>,
    alpha: Option<f64>,
) -> Result<TaskOutput, CliError> {
    let d_r = real.build(grid)?;
    let d_n = noise.build(grid)?;
    let c_r = gibbs_constant(&d_r, grid.dim());
    let c_n = gibbs_constant(&d_n, grid.dim());
    let mut problem = AdversarialProblem::new(d_r, d_n, grid.clone())?;
    if let Some(w) = noise_weight {
        problem = problem.with_noise_weight(w);
    }
    let mut weight_used = problem.noise_weight();
    if problem.build_lrn().is_err() {
        if let Some(margin) = reweight_margin {
            if let Reweighting::Bounded(w) = problem.reweight_to_containment(margin) {
                weight_used = w;
                problem = problem.with_noise_weight(w);
            }
        }
    }
    let l_r = problem
        .clean_profile()
        .to_star_body("L_r")
        .map_err(CliError::Numerical)?;
    let l_n = problem
        .noise_profile()
        .to_star_body("L_n")
        .map_err(CliError::Numerical)?;
    let lrn = problem.build_lrn()?;
    let k_star = problem.optimal()?;
    let loss_star = problem.loss(&k_star)?;

    let mut report = Map::new();
    report.insert("task".into(), json!("adversarial_figure"));
    report.insert("noise_weight".into(), json!(weight_used));
    report.insert(
        "volumes".into(),
        json!({
            "L_r": l_r.volume(),
            "L_n": l_n.volume(),
            "L_rn": lrn.volume(),
            "K_star": k_star.volume(),
        }),
    );
    report.insert("loss_at_optimum".into(), json!(loss_star));
    if let Some(a) = alpha {
        report.insert("alpha".into(), json!(a));
    }
    if let Some(c) = c_r {
        report.insert("c_r".into(), json!(c));
    }
    if let Some(c) = c_n {
        report.insert("c_n".into(), json!(c));
    }
    let _ = scenario;
    Ok(TaskOutput {
        bodies: vec![l_r, l_n, lrn, k_star],
        report,
        extra_files: vec![],
        all_checks_passed: true,
    })
}

fn hellinger_figure(
    grid: &Arc<SphereGrid>,
    real: &DensitySpec,
    noise: &DensitySpec,
    fractions: &[f64],
) -> Result<TaskOutput, CliError> {
    let problem = HellingerProblem::new(real.build(grid)?, noise.build(grid)?, grid.clone())?;
    let l_r = problem.l_r();
    let l_n = problem.l_n_tilde();
    let lambda_star = problem.lambda_star();

    let mut bodies = vec![l_r.clone(), l_n];
    let mut entries = Vec::new();
    for &frac in fractions {
        let lambda = frac * lambda_star;
        let (kp, km) = problem.dilate_solutions(lambda)?;
        let kp = kp.with_label(format!("K_plus@{frac}"));
        let km = km.with_label(format!("K_minus@{frac}"));
        let plug = problem
            .build_krn(&kp)?
            .is_dilate(&l_r, 1e-9)
            .map(|lam| (lam - lambda).abs() <= 1e-9 * lambda)
            .unwrap_or(false);
        entries.push(json!({
            "fraction": frac,
            "lambda": lambda,
            "loss_plus": problem.loss(&kp)?,
            "loss_minus": problem.loss(&km)?,
            "vol_plus": kp.volume(),
            "vol_minus": km.volume(),
            "plug_in_consistent": plug,
        }));
        bodies.push(kp);
        bodies.push(km);
    }

    let all_ok = entries
        .iter()
        .all(|e| e["plug_in_consistent"].as_bool().unwrap_or(false));
    let mut report = Map::new();
    report.insert("task".into(), json!("hellinger_figure"));
    report.insert("lambda_star".into(), json!(lambda_star));
    report.insert("solutions".into(), Value::Array(entries));
    Ok(TaskOutput {
        bodies,
        report,
        extra_files: vec![],
        all_checks_passed: all_ok,
    })
}

fn alpha_sweep(
    grid: &Arc<SphereGrid>,
    real: &DensitySpec,
    noise: &DensitySpec,
    alphas: &[f64],
) -> Result<TaskOutput, CliError> {
    let mut bodies = Vec::new();
    let mut entries = Vec::new();
    let mut all_ok = true;
    let probe = StarBody::ball(grid.clone(), 1.0);
    for &alpha in alphas {
        let problem =
            AlphaProblem::new(real.build(grid)?, noise.build(grid)?, grid.clone(), alpha)?;
        let l_r = problem.l_r().with_label(format!("L_r@{alpha}"));
        let l_n = problem.l_n().with_label(format!("L_n@{alpha}"));
        let loss = problem.loss(&probe)?;
        let dmv = problem.dual_mixed_volume_form(&probe)?;
        let rel = ((loss - dmv) / loss).abs();
        all_ok &= rel <= 1e-10;
        // Largest lambda with fixed points, bisected on solvability.
        let (mut lo, mut hi): (f64, f64) = (1e-6, 1e6);
        for _ in 0..60 {
            let mid = (lo * hi).sqrt();
            if problem.fixed_point_solve(mid)?.is_empty() {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let lambda = 0.8 * lo;
        let solutions = problem.fixed_point_solve(lambda)?;
        for body in &solutions {
            bodies.push(body.clone().with_label(format!("{}@{alpha}", body.label())));
        }
        entries.push(json!({
            "alpha": alpha,
            "vol_L_r": l_r.volume(),
            "vol_L_n": l_n.volume(),
            "loss_identity_rel_err": rel,
            "lambda_used": lambda,
            "fixed_point_count": solutions.len(),
        }));
        bodies.push(l_r);
        bodies.push(l_n);
    }
    let mut report = Map::new();
    report.insert("task".into(), json!("alpha_sweep"));
    report.insert("entries".into(), Value::Array(entries));
    Ok(TaskOutput {
        bodies,
        report,
        extra_files: vec![],
        all_checks_passed: all_ok,
    })
}

fn toy_inverse(
    grid: &Arc<SphereGrid>,
    u: &[Vec<f64>],
    a: &[Vec<f64>],
    sigma2: f64,
    reweight_margin: Option<f64>,
) -> Result<TaskOutput, CliError> {
    if grid.dim() != 2 || u.len() != 2 || u.iter().any(|r| r.len() != 2) {
        return Err(CliError::Validation(
            "toy_inverse expects a 2x2 factor matrix at dim 2".into(),
        ));
    }
    // Sigma = U U^T.
    let cov = vec![
        vec![
            u[0][0] * u[0][0] + u[0][1] * u[0][1],
            u[0][0] * u[1][0] + u[0][1] * u[1][1],
        ],
        vec![
            u[0][0] * u[1][0] + u[0][1] * u[1][1],
            u[1][0] * u[1][0] + u[1][1] * u[1][1],
        ],
    ];
    let d_r = Density::gaussian(vec![0.0, 0.0], cov);
    let d_n = Density::pushforward_convolved(a.to_vec(), &d_r, sigma2)?;
    let mut problem = AdversarialProblem::new(d_r, d_n, grid.clone())?;
    let mut weight_used = 1.0;
    if problem.build_lrn().is_err() {
        if let Some(margin) = reweight_margin {
            if let Reweighting::Bounded(w) = problem.reweight_to_containment(margin) {
                weight_used = w;
                problem = problem.with_noise_weight(w);
            }
        }
    }
    let l_r = problem
        .clean_profile()
        .to_star_body("L_r")
        .map_err(CliError::Numerical)?;
    let l_n = problem
        .noise_profile()
        .to_star_body("L_n")
        .map_err(CliError::Numerical)?;
    let lrn = problem.build_lrn()?;

    // Axis comparison: the kernel direction of A = e1^T is e2; the claim is
    // that L_rn keeps its reach along ker(A) and loses it along the row
    // span. Report the global argmax direction as well.
    let n = grid.len();
    let rho_e1 = lrn.radial_values()[0];
    let rho_e2 = lrn.radial_values()[n / 4];
    let (argmax_idx, _) = lrn
        .radial_values()
        .iter()
        .enumerate()
        .max_by(|x, y| x.1.partial_cmp(y.1).unwrap())
        .unwrap();
    let argmax_angle = grid.angle(argmax_idx);
    let kernel_beats_rowspan = rho_e2 > rho_e1;

    let mut report = Map::new();
    report.insert("task".into(), json!("toy_inverse"));
    report.insert("noise_weight".into(), json!(weight_used));
    report.insert("sigma2".into(), json!(sigma2));
    report.insert("rho_along_e1".into(), json!(rho_e1));
    report.insert("rho_along_e2".into(), json!(rho_e2));
    report.insert("argmax_angle".into(), json!(argmax_angle));
    report.insert(
        "checks".into(),
        json!([{
            "name": "kernel_direction_beats_row_span",
            "pass": kernel_beats_rowspan,
            "detail": format!("rho(e2) = {rho_e2:.6} vs rho(e1) = {rho_e1:.6}"),
        }]),
    );
    Ok(TaskOutput {
        bodies: vec![l_r, l_n, lrn],
        report,
        extra_files: vec![],
        all_checks_passed: kernel_beats_rowspan,
    })
}

fn weak_convex_sweep(
    grid: &Arc<SphereGrid>,
    epsilon: f64,
    rhos: &[f64],
    cap: f64,
    tol: f64,
) -> Result<TaskOutput, CliError> {
    if grid.dim() != 2 {
        return Err(CliError::Validation("weak_convex_sweep is 2-D".into()));
    }
    let body = stargeo_core::gaussian_mixture_body(grid, epsilon)?;
    let report_data = weak_convexity_report(&body, rhos, cap, tol);
    let mut bodies = vec![body.clone().with_label("L_P_eps")];
    for &rho in rhos {
        bodies.push(stargeo_core::m2(&body, rho)?.with_label(format!("M2@{rho}")));
    }
    let mut report = Map::new();
    report.insert("task".into(), json!("weak_convex_sweep"));
    report.insert("epsilon".into(), json!(epsilon));
    report.insert(
        "probes".into(),
        Value::Array(
            report_data
                .rho_probes
                .iter()
                .map(|(rho, c)| json!({"rho": rho, "is_convex": c}))
                .collect(),
        ),
    );
    match report_data.rho_star {
        RhoStar::Found(r) => {
            report.insert("rho_star".into(), json!(r));
        }
        RhoStar::NotFoundBelowCap => {
            report.insert("rho_star".into(), json!("not found below cap"));
        }
    }
    report.insert("cap".into(), json!(cap));
    report.insert("tol".into(), json!(tol));
    report.insert("convexity_grid".into(), json!(report_data.grid_size));
    Ok(TaskOutput {
        bodies,
        report,
        extra_files: vec![("weakconvex.csv".into(), report_data.to_csv())],
        all_checks_passed: true,
    })
}

fn verify_suite(quick: bool, seed: u64) -> Result<TaskOutput, CliError> {
    let checks = verify::run_suite(quick, seed);
    let all = checks.iter().all(|c| c.pass);
    let mut report = Map::new();
    report.insert("task".into(), json!("verify_suite"));
    report.insert("quick".into(), json!(quick));
    report.insert("all_passed".into(), json!(all));
    report.insert(
        "checks".into(),
        Value::Array(
            checks
                .iter()
                .map(|c| json!({"name": c.name, "pass": c.pass, "detail": c.detail}))
                .collect(),
        ),
    );
    Ok(TaskOutput {
        bodies: vec![],
        report,
        extra_files: vec![],
        all_checks_passed: all,
    })
}

#[allow(clippy::too_many_arguments)]
fn erm_run(
    scenario: &Scenario,
    grid: &Arc<SphereGrid>,
    real: &DensitySpec,
    noise: &DensitySpec,
    samples: usize,
    steps: usize,
    step_size: f64,
    gamma_floor: f64,
) -> Result<TaskOutput, CliError> {
    if grid.dim() != 2 {
        return Err(CliError::Validation("erm_run is 2-D".into()));
    }
    let d_r = real.build(grid)?;
    let d_n = noise.build(grid)?;
    let problem = AdversarialProblem::new(d_r.clone(), d_n.clone(), grid.clone())?;
    let reference = problem.optimal().ok();

    let mut rng = ChaCha8Rng::seed_from_u64(scenario.seed);
    let xs: Vec<Vec<f64>> = (0..samples).map(|_| d_r.sample(&mut rng)).collect();
    let ys: Vec<Vec<f64>> = (0..samples).map(|_| d_n.sample(&mut rng)).collect();
    let opts = ErmOptions {
        steps,
        step_size,
        gamma_floor,
        reference: reference.clone(),
    };
    let solution = erm_solve(&xs, &ys, grid, &opts)?;

    let mut trace_csv = String::from("step,loss,volume,radial_gap\n");
    for step in &solution.trace {
        let gap = step.radial_gap.map(|g| g.to_string()).unwrap_or_default();
        trace_csv.push_str(&format!(
            "{},{},{},{gap}\n",
            step.step, step.loss, step.volume
        ));
    }

    let mut report = Map::new();
    report.insert("task".into(), json!("erm_run"));
    report.insert("samples".into(), json!(samples));
    report.insert(
        "final_loss".into(),
        json!(solution.trace.last().map(|s| s.loss)),
    );
    let mut bodies = vec![solution.body.clone()];
    if let Some(k_star) = reference {
        let gap = solution.body.radial_metric(&k_star)?;
        report.insert("radial_gap_to_optimal".into(), json!(gap));
        bodies.push(k_star);
    }
    Ok(TaskOutput {
        bodies,
        report,
        extra_files: vec![("erm_trace.csv".into(), trace_csv)],
        all_checks_passed: true,
    })
}

#[allow(clippy::too_many_arguments)]
fn train_run(
    scenario: &Scenario,
    grid: &Arc<SphereGrid>,
    real: &DensitySpec,
    noise: &DensitySpec,
    samples: usize,
    loss: CriticLossSpec,
    widths: &[usize],
    slope: f64,
    steps: usize,
    lr: f64,
    batch: usize,
    gp_weight: f64,
) -> Result<TaskOutput, CliError> {
    if grid.dim() != 2 {
        return Err(CliError::Validation("train_run is 2-D".into()));
    }
    if widths.first() != Some(&2) {
        return Err(CliError::Validation(
            "train_run widths must start at the ambient dimension 2".into(),
        ));
    }
    let d_r = real.build(grid)?;
    let d_n = noise.build(grid)?;
    let mut rng = ChaCha8Rng::seed_from_u64(scenario.seed);
    let xs: Vec<Vec<f64>> = (0..samples).map(|_| d_r.sample(&mut rng)).collect();
    let ys: Vec<Vec<f64>> = (0..samples).map(|_| d_n.sample(&mut rng)).collect();
    let net = HomogeneousNet::random(widths, slope, &mut rng);
    let core_loss = match loss {
        CriticLossSpec::Adversarial => CriticLoss::Adversarial,
        CriticLossSpec::Hellinger => CriticLoss::Hellinger,
    };
    let opts = TrainOptions {
        steps,
        lr,
        batch,
        gp_weight,
        seed: scenario.seed.wrapping_add(1),
    };
    let result = train(&net, &xs, &ys, core_loss, &opts)?;

    let mut trace_csv = String::from("step,loss\n");
    for (i, l) in result.trace.iter().enumerate() {
        trace_csv.push_str(&format!("{i},{l}\n"));
    }

    let body = result.net.to_star_body(grid)?.normalized_to_unit_volume();
    let mut report = Map::new();
    report.insert("task".into(), json!("train_run"));
    report.insert(
        "loss".into(),
        json!(match loss {
            CriticLossSpec::Adversarial => "adversarial",
            CriticLossSpec::Hellinger => "hellinger",
        }),
    );
    report.insert("final_batch_loss".into(), json!(result.trace.last()));
    let mut bodies = vec![body.clone().with_label("K_net")];
    if let Ok(problem) = AdversarialProblem::new(d_r, d_n, grid.clone()) {
        if let Ok(k_star) = problem.optimal() {
            report.insert(
                "radial_gap_to_optimal".into(),
                json!(body.radial_metric(&k_star)?),
            );
            bodies.push(k_star);
        }
    }
    Ok(TaskOutput {
        bodies,
        report,
        extra_files: vec![
            ("train_trace.csv".into(), trace_csv),
            ("net.json".into(), result.net.to_json()),
        ],
        all_checks_passed: true,
    })
}

/// Parse a scenario file, apply CLI overrides, and run it. The output root
/// is the `--out` flag when given, else the scenario's own `out` field,
/// else `out/`.
pub fn run_scenario_file(
    path: &Path,
    out: Option<&Path>,
    seed_override: Option<u64>,
    grid_override: Option<usize>,
) -> Result<RunSummary, CliError> {
    let text = fs::read_to_string(path)?;
    let mut scenario = Scenario::parse(&text)?;
    if let Some(seed) = seed_override {
        scenario.seed = seed;
    }
    if let Some(grid) = grid_override {
        if grid < 8 {
            return Err(CliError::Validation(format!(
                "grid must be at least 8, got {grid}"
            )));
        }
        scenario.grid = grid;
    }
    let out_root = out
        .map(Path::to_path_buf)
        .or_else(|| scenario.out.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));
    run_scenario(&scenario, &out_root)
}
