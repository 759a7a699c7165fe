use std::collections::HashMap;
use std::sync::Arc;
use std::time::Instant;

use crate::elasticity::{
    lame_from_moduli, solve_displacement, DisplacementField, ElasticityBvp, LamePair, MaterialField, RegionLabels,
};
use crate::error::{Error, Result};
use crate::harness::config::{ExperimentConfig, NoiseTarget};
use crate::harness::report::{ExperimentReport, ReportImages, RunRecord, TracePoint};
use crate::harness::seed::sub_seed;
use crate::harness::stats::trend;
use crate::iim::{relative_error, round_trip_floor, Bounds, Evaluation, IimContext, InversionMode};
use crate::imaging::warp::{push_forward, PixelProbes};
use crate::imaging::{add_relative_noise, generate_phantom, NoiseSpec, PhantomSpec, ScalarImage};
use crate::mesh::{build_uniform_mesh, Mesh};
use crate::optimizer::try_nelder_mead;

/// Noise-free data of one experiment: phantom, labels, true displacement and deformed image.
#[derive(Debug)]
pub struct ExperimentSetup {
    pub config: ExperimentConfig,
    pub mesh: Mesh<f64>,
    pub phantom: PhantomSpec<f64>,
    pub regions: Arc<RegionLabels<f64>>,
    pub truth: Vec<LamePair<f64>>,
    pub bvp: ElasticityBvp<f64>,
    pub reference: ScalarImage<f64>,
    pub displacement: DisplacementField<f64>,
    pub deformed: ScalarImage<f64>,
    /// [`round_trip_floor`] of the noise-free pair.
    pub interpolation_floor: f64,
}

impl ExperimentSetup {
    pub fn prepare(config: &ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let e = &config.experiment;
        let mesh = build_uniform_mesh(e.grid[0], e.grid[1], e.extent[0], e.extent[1])?;
        let phantom = config.phantom_spec()?;
        let (reference, regions) = generate_phantom(&phantom, &mesh)?;
        let truth = config.truth_pairs()?;
        let bvp = ElasticityBvp::compression(e.compression)?;
        let material = MaterialField::new(regions.clone(), truth.clone())?;
        let displacement = solve_displacement(&mesh, &material, &bvp)?;
        let probes = PixelProbes::new(&mesh, reference.width(), reference.height())?;
        let deformed = push_forward(&reference, &probes.displacements(&mesh, &displacement)?, e.fill)?;
        let interpolation_floor = round_trip_floor(&reference, &mesh, &displacement, e.fill, e.out_of_frame)?;
        Ok(ExperimentSetup {
            config: config.clone(),
            mesh,
            phantom,
            regions,
            truth,
            bvp,
            reference,
            displacement,
            deformed,
            interpolation_floor,
        })
    }

    /// Context for one run on (possibly noisy) images.
    pub fn context(&self, reference: ScalarImage<f64>, deformed: ScalarImage<f64>, alpha: f64) -> Result<IimContext<f64>> {
        let e = &self.config.experiment;
        let ctx = IimContext::new(self.mesh.clone(), self.regions.clone(), reference, deformed, self.bvp)?
            .with_alpha(alpha)?
            .with_bounds(Bounds::new(e.bounds[0], e.bounds[1])?)?
            .with_fill(e.fill)
            .with_out_of_frame(e.out_of_frame);
        match e.mode {
            InversionMode::MuOnly => ctx.with_fixed_lambda(self.truth.iter().map(|p| p.lambda).collect()),
            InversionMode::Full => Ok(ctx),
        }
    }

    fn empty_report(&self) -> ExperimentReport {
        ExperimentReport {
            config: self.config.clone(),
            truth: self.truth.clone(),
            region_areas: self.regions.areas().to_vec(),
            interpolation_floor: self.interpolation_floor,
            runs: Vec::new(),
            statistics: None,
            images: Some(ReportImages { reference: self.reference.clone(), deformed: self.deformed.clone() }),
        }
    }
}

pub fn run_id(delta: f64, seed: u64) -> String {
    format!("delta{delta}_seed{seed}")
}

/// One reconstruction at noise level `delta`; `level` indexes the noise list for sub-seeding.
pub fn run_case(setup: &ExperimentSetup, delta: f64, seed: u64, level: u64) -> Result<RunRecord> {
    let id = run_id(delta, seed);
    run_case_inner(setup, delta, seed, level, &id).map_err(|e| e.in_run(id))
}

fn run_case_inner(setup: &ExperimentSetup, delta: f64, seed: u64, level: u64, id: &str) -> Result<RunRecord> {
    let e = &setup.config.experiment;
    let started = Instant::now();
    let alpha = e.alpha_coefficient * delta;
    let reference_seed = sub_seed(seed, "reference", level);
    let deformed_seed = sub_seed(seed, "deformed", level);
    let reference = add_relative_noise(&setup.reference, NoiseSpec { delta, seed: reference_seed })?;
    let deformed = match e.noise_target {
        NoiseTarget::Both => add_relative_noise(&setup.deformed, NoiseSpec { delta, seed: deformed_seed })?,
        NoiseTarget::ReferenceOnly => setup.deformed.clone(),
    };
    let ctx = setup.context(reference, deformed, alpha)?;

    let guess = lame_from_moduli(e.initial_guess)?;
    let x0 = ctx.encode(&vec![guess; setup.regions.region_count()])?;
    let opts = setup.config.optimizer.options(x0.len(), e.bounds[0], e.bounds[1]);

    let key = |p: &[f64]| p.iter().map(|v| v.to_bits()).collect::<Vec<u64>>();
    let mut seen: HashMap<Vec<u64>, Evaluation<f64>> = HashMap::new();
    let mut residual_range = (f64::INFINITY, f64::NEG_INFINITY);
    let result = try_nelder_mead(
        |p| {
            let ev = ctx.evaluate(p)?;
            if ctx.in_bounds(p) {
                residual_range = (residual_range.0.min(ev.residual), residual_range.1.max(ev.residual));
            }
            seen.insert(key(p), ev);
            Ok(ev.objective)
        },
        &x0,
        &opts,
    )?;

    let areas = setup.regions.areas();
    let point = |p: &[f64]| -> Result<(Evaluation<f64>, Vec<LamePair<f64>>)> {
        let ev = *seen.get(&key(p)).ok_or_else(|| Error::InvalidInput("trace point was never evaluated".into()))?;
        Ok((ev, ctx.decode(p)?))
    };
    let mut trace = Vec::with_capacity(result.trace.len());
    for t in &result.trace {
        let (ev, params) = point(&t.best_point)?;
        let error = relative_error(areas, &params, &setup.truth)?;
        trace.push(TracePoint {
            iteration: t.iteration,
            step: t.step,
            objective: ev.objective,
            residual: ev.residual,
            penalty: ev.penalty,
            diameter: t.diameter,
            params,
            error,
        });
    }
    let (final_eval, final_params) = point(&result.best_point)?;
    let final_error = relative_error(areas, &final_params, &setup.truth)?;
    let (best_iteration, best_params, best_error) = trace
        .iter()
        .fold(None::<&TracePoint>, |acc, t| match acc {
            Some(b) if b.error.joint <= t.error.joint => Some(b),
            _ => Some(t),
        })
        .map_or((0, final_params.clone(), final_error), |t| (t.iteration, t.params.clone(), t.error));

    let spread = residual_range.1 - residual_range.0;
    let identifiable = spread > 1e-12 * residual_range.1.abs().max(f64::MIN_POSITIVE);
    let wall_ms = if e.record_wall_time { started.elapsed().as_millis() as u64 } else { 0 };
    Ok(RunRecord {
        run_id: id.to_string(),
        delta,
        alpha,
        seed,
        reference_noise_seed: reference_seed,
        deformed_noise_seed: deformed_seed,
        final_params,
        final_error,
        final_residual: final_eval.residual,
        final_objective: final_eval.objective,
        best_iteration,
        best_params,
        best_error,
        iterations: result.iterations,
        evaluations: result.evaluations,
        converged: result.converged,
        degenerate: result.degenerate,
        identifiable,
        trace,
        wall_ms,
    })
}

/// Noise-free reconstruction with `α = 0`, one run for the first master seed.
pub fn run_noise_free_suite(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    run_noise_free_suite_with(&ExperimentSetup::prepare(cfg)?)
}

pub fn run_noise_free_suite_with(setup: &ExperimentSetup) -> Result<ExperimentReport> {
    let e = &setup.config.experiment;
    if e.noise_levels.iter().any(|&d| d != 0.0) {
        return Err(Error::Config("the noise-free suite needs an empty noise list or only 0".into()));
    }
    let mut report = setup.empty_report();
    report.runs.push(run_case(setup, 0.0, e.seeds[0], 0)?);
    Ok(report)
}

/// Every configured noise level for every master seed, ordered by `(δ, seed)`.
pub fn run_noise_sweep(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    run_noise_sweep_with(&ExperimentSetup::prepare(cfg)?)
}

pub fn run_noise_sweep_with(setup: &ExperimentSetup) -> Result<ExperimentReport> {
    let e = &setup.config.experiment;
    if e.noise_levels.is_empty() {
        return Err(Error::Config("the noise sweep needs at least one noise level".into()));
    }
    let mut report = setup.empty_report();
    for (level, &delta) in e.noise_levels.iter().enumerate() {
        for &seed in &e.seeds {
            report.runs.push(run_case(setup, delta, seed, level as u64)?);
        }
    }
    report.runs.sort_by(|a, b| a.delta.total_cmp(&b.delta).then(a.seed.cmp(&b.seed)));
    let deltas: Vec<f64> = report.runs.iter().map(|r| r.delta).collect();
    let errors: Vec<f64> = report.runs.iter().map(|r| r.best_error.joint).collect();
    report.statistics = Some(trend(&deltas, &errors));
    Ok(report)
}

/// A single reconstruction at the first noise level (0 if none) and the first seed.
pub fn run_single(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let setup = ExperimentSetup::prepare(cfg)?;
    let delta = cfg.experiment.noise_levels.first().copied().unwrap_or(0.0);
    let mut report = setup.empty_report();
    report.runs.push(run_case(&setup, delta, cfg.experiment.seeds[0], 0)?);
    Ok(report)
}
