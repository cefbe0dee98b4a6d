//! Scenario runner: reproducible experiments tying the modules together
//! behind a TOML config, with machine-readable summaries.
//!
//! Every scalar in summary.json carries a provenance key: "paper" for
//! constants fixed by the underlying theory, "derived-oracle" for values
//! produced by an independent reference computation, "measured" for numbers
//! read off the simulation itself. Summaries are byte-identical across reruns
//! at a fixed seed.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::diagnostics::{morawetz_action, truncated_energy, virial_variance};
use crate::dynamics::{
    blowup_run, convergence_study, evolve, BlowupSeed, FlowOptions, Monitor, StepPolicy,
    StudyScenario,
};
use crate::error::{NlssError, Result};
use crate::field::{random_localized, FieldIndexing, FieldVec};
use crate::functionals::{
    cm_constant, energy, gn_constant, mass, weighted_mass, weinstein_j, SystemSize,
};
use crate::grid::Grid2D;
use crate::ground::{solve_ground_state, GroundState};
use crate::linop::{assemble, spectrum_report, OperatorKind};
use crate::modulation::{
    decompose, distance_to_orbit, lambda_monotonicity, track, ModulationContext,
    ModulationSeries,
};
use crate::nonlin::{apply_nonlinearity, apply_nonlinearity_resonance_sum};
use crate::oracle;
use crate::snapshot::{write_ground_state, write_snapshot};
use crate::symmetry::{
    apply_group, exact_pseudosoliton, exact_soliton, pseudo_conformal, GroupElement,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    GroundState,
    Spectrum,
    GnSweep,
    SolitonPropagation,
    PerturbedSoliton,
    PcBlowup,
    ResonantConservation,
    VirialCheck,
    ModulationRoundtrip,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub half_width: f64,
    pub points: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ParamConfig {
    pub n_comp: Option<usize>,
    pub jmax: Option<i32>,
    pub tol: Option<f64>,
    pub dt: Option<f64>,
    pub t_end: Option<f64>,
    pub lambda: Option<f64>,
    pub trials: Option<usize>,
    pub samples: Option<usize>,
    pub amplitude: Option<f64>,
    pub stop_width: Option<f64>,
    pub cadence: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario: ScenarioKind,
    pub seed: u64,
    pub output_dir: Option<PathBuf>,
    pub grid: GridConfig,
    #[serde(default)]
    pub params: ParamConfig,
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| NlssError::Usage(format!("config parse error: {e}")))
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text)
    }
}

/// One scalar with its provenance tag.
#[derive(Debug, Clone, Serialize)]
pub struct SummaryValue {
    pub value: f64,
    pub provenance: &'static str,
}

fn measured(value: f64) -> SummaryValue {
    SummaryValue {
        value,
        provenance: "measured",
    }
}

fn derived(value: f64) -> SummaryValue {
    SummaryValue {
        value,
        provenance: "derived-oracle",
    }
}

fn paper(value: f64) -> SummaryValue {
    SummaryValue {
        value,
        provenance: "paper",
    }
}

#[derive(Debug, Serialize)]
pub struct Summary {
    pub scenario: ScenarioKind,
    pub seed: u64,
    pub grid_half_width: f64,
    pub grid_points: usize,
    pub values: BTreeMap<String, SummaryValue>,
    pub assertions: Vec<AssertionOutcome>,
}

#[derive(Debug, Clone, Serialize)]
pub struct AssertionOutcome {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Summary {
    fn new(cfg: &ScenarioConfig) -> Self {
        Summary {
            scenario: cfg.scenario,
            seed: cfg.seed,
            grid_half_width: cfg.grid.half_width,
            grid_points: cfg.grid.points,
            values: BTreeMap::new(),
            assertions: Vec::new(),
        }
    }

    fn put(&mut self, key: &str, v: SummaryValue) {
        self.values.insert(key.to_string(), v);
    }

    fn check(&mut self, name: &str, passed: bool, detail: String) {
        self.assertions.push(AssertionOutcome {
            name: name.to_string(),
            passed,
            detail,
        });
    }

    pub fn all_passed(&self) -> bool {
        self.assertions.iter().all(|a| a.passed)
    }
}

fn write_summary(out_dir: &Path, summary: &Summary) -> Result<()> {
    std::fs::create_dir_all(out_dir)?;
    let json = serde_json::to_string_pretty(summary)
        .map_err(|e| NlssError::Config(format!("summary serialization: {e}")))?;
    std::fs::write(out_dir.join("summary.json"), json)?;
    Ok(())
}

fn write_conserved_csv(path: &Path, series: &[crate::dynamics::ConservedRecord]) -> Result<()> {
    let mut text = String::from(
        "t,mass,energy,m010,m001,centroid_x,centroid_y,width,spec_tail_frac\n",
    );
    for r in series {
        writeln!(
            text,
            "{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}",
            r.t, r.mass, r.energy, r.m010, r.m001, r.centroid[0], r.centroid[1], r.width,
            r.spec_tail_frac
        )
        .unwrap();
    }
    std::fs::write(path, text)?;
    Ok(())
}

fn write_modulation_csv(path: &Path, series: &ModulationSeries, alpha: &[f64]) -> Result<()> {
    let n_comp = series.states.first().map(|s| s.gamma.len()).unwrap_or(0);
    let mut header = String::from("t,s,lambda,xi_x,xi_y,xtilde_x,xtilde_y");
    for j in 1..=n_comp {
        write!(header, ",gamma_{j}").unwrap();
    }
    header.push_str(",eps_l2,alpha\n");
    let mut text = header;
    for (i, st) in series.states.iter().enumerate() {
        write!(
            text,
            "{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}",
            series.times[i],
            series.s_values[i],
            st.lambda,
            st.xi[0],
            st.xi[1],
            st.x_tilde[0],
            st.x_tilde[1]
        )
        .unwrap();
        for g in &st.gamma {
            write!(text, ",{g:.17e}").unwrap();
        }
        let a = alpha.get(i).copied().unwrap_or(f64::NAN);
        writeln!(text, ",{:.17e},{a:.17e}", st.eps_l2()).unwrap();
    }
    std::fs::write(path, text)?;
    Ok(())
}

/// Run a scenario, writing summary.json and artifacts into `out_dir`.
pub fn run_scenario(cfg: &ScenarioConfig, out_dir: &Path) -> Result<Summary> {
    std::fs::create_dir_all(out_dir)?;
    let mut summary = Summary::new(cfg);
    match cfg.scenario {
        ScenarioKind::GroundState => ground_state_scenario(cfg, out_dir, &mut summary)?,
        ScenarioKind::Spectrum => spectrum_scenario(cfg, out_dir, &mut summary)?,
        ScenarioKind::GnSweep => gn_sweep_scenario(cfg, out_dir, &mut summary)?,
        ScenarioKind::SolitonPropagation => soliton_scenario(cfg, out_dir, &mut summary)?,
        ScenarioKind::PerturbedSoliton => perturbed_scenario(cfg, out_dir, &mut summary)?,
        ScenarioKind::PcBlowup => pc_blowup_scenario(cfg, out_dir, &mut summary)?,
        ScenarioKind::ResonantConservation => resonant_scenario(cfg, out_dir, &mut summary)?,
        ScenarioKind::VirialCheck => virial_scenario(cfg, out_dir, &mut summary)?,
        ScenarioKind::ModulationRoundtrip => modulation_scenario(cfg, out_dir, &mut summary)?,
    }
    write_summary(out_dir, &summary)?;
    Ok(summary)
}

fn grid_of(cfg: &ScenarioConfig) -> Result<std::sync::Arc<Grid2D>> {
    Grid2D::new(cfg.grid.half_width, cfg.grid.points)
}

fn ground_state_scenario(cfg: &ScenarioConfig, out_dir: &Path, s: &mut Summary) -> Result<()> {
    let tol = cfg.params.tol.unwrap_or(1e-10);
    let grid = grid_of(cfg)?;
    let gs = solve_ground_state(grid, tol)?;
    let profile = oracle::shoot_ground_state(5e-4, 15.0);
    s.put("mass_sq", measured(gs.mass_sq));
    s.put("residual_inf", measured(gs.residual_inf));
    s.put("pohozaev_defect_mass", measured(gs.pohozaev_defects.0));
    s.put("pohozaev_defect_quartic", measured(gs.pohozaev_defects.1));
    s.put("oracle_mass_sq", derived(profile.mass_sq));
    s.put("oracle_amplitude", derived(profile.amplitude));
    let rel = (gs.mass_sq - profile.mass_sq).abs() / profile.mass_sq;
    s.put("mass_rel_err_vs_oracle", derived(rel));
    s.check(
        "residual_below_tol",
        gs.residual_inf <= tol,
        format!("{:.3e} <= {tol:.1e}", gs.residual_inf),
    );
    s.check(
        "pohozaev_defects_below_1e-8",
        gs.pohozaev_defects.0 < 1e-8 && gs.pohozaev_defects.1 < 1e-8,
        format!("{:?}", gs.pohozaev_defects),
    );
    s.check(
        "mass_matches_oracle_1e-6",
        rel < 1e-6,
        format!("relative error {rel:.3e}"),
    );
    write_ground_state(out_dir, "ground_state", &gs)?;
    Ok(())
}

fn spectrum_scenario(cfg: &ScenarioConfig, out_dir: &Path, s: &mut Summary) -> Result<()> {
    let grid = grid_of(cfg)?;
    let gs = solve_ground_state(grid.clone(), cfg.params.tol.unwrap_or(1e-10))?;
    let profile = oracle::shoot_ground_state(1e-3, 15.0);
    let lambda0_oracle = oracle::radial_lowest_eigenvalue(&profile, 3.0, 2000, 15.0);
    s.put("lambda0_oracle", derived(lambda0_oracle));
    let n_list: Vec<usize> = match cfg.params.n_comp {
        Some(n) => vec![n],
        None => vec![1, 2, 3],
    };
    for n_comp in n_list {
        let plus = assemble(OperatorKind::LPlus, n_comp, &gs, grid.clone())?;
        let rep = spectrum_report(&plus, &gs, 5, 1e-5)?;
        s.put(&format!("lambda0_n{n_comp}"), measured(rep.lambda0));
        s.put(
            &format!("negatives_n{n_comp}"),
            measured(rep.counts.0 as f64),
        );
        s.put(
            &format!("near_zeros_n{n_comp}"),
            measured(rep.counts.1 as f64),
        );
        s.put(&format!("gap_c0_n{n_comp}"), measured(rep.gap_c0));
        let overlap = translation_overlap(&gs, &rep.near_kernel);
        s.put(&format!("kernel_overlap_n{n_comp}"), measured(overlap));
        let rel = (rep.lambda0 - lambda0_oracle).abs() / lambda0_oracle.abs();
        s.check(
            &format!("unique_negative_n{n_comp}"),
            rep.counts.0 == 1,
            format!("negatives {}", rep.counts.0),
        );
        s.check(
            &format!("two_kernel_modes_n{n_comp}"),
            rep.counts.1 == 2,
            format!("near zeros {}", rep.counts.1),
        );
        s.check(
            &format!("kernel_overlap_n{n_comp}"),
            overlap > 0.999,
            format!("{overlap:.6}"),
        );
        s.check(
            &format!("gap_positive_n{n_comp}"),
            rep.gap_c0 > 0.0,
            format!("{:.6}", rep.gap_c0),
        );
        s.check(
            &format!("lambda0_matches_oracle_n{n_comp}"),
            rel < 1e-4,
            format!("relative {rel:.3e}"),
        );
        let minus = assemble(OperatorKind::LMinus, n_comp, &gs, grid.clone())?;
        let rep_m = spectrum_report(&minus, &gs, (n_comp + 3).max(4), 1e-5)?;
        s.check(
            &format!("minus_nonnegative_n{n_comp}"),
            rep_m.eigenvalues.iter().all(|v| *v > -1e-6),
            format!("lowest {:.3e}", rep_m.lambda0),
        );
        let q_overlap = q_direction_overlap(&gs, n_comp, &rep_m.near_kernel);
        s.check(
            &format!("minus_kernel_is_q_n{n_comp}"),
            q_overlap > 0.999,
            format!("{q_overlap:.6}"),
        );
        write_snapshot(&out_dir.join(format!("chi0_n{n_comp}.nlss")), &rep.chi0)?;
    }
    Ok(())
}

/// Projection of the near-kernel eigenspace onto the translation span.
pub fn translation_overlap(
    gs: &GroundState,
    near_kernel: &[(f64, FieldVec)],
) -> f64 {
    let (qx, qy) = gs.profile_gradient();
    let mut worst: f64 = 1.0;
    for (_, vec) in near_kernel {
        let n_comp = vec.n_components();
        let mk = |f: &crate::field::ComplexField2D| {
            let v = FieldVec {
                indexing: vec.indexing,
                components: vec![f.clone(); n_comp],
            };
            let norm = v.l2l2_norm_sq().sqrt();
            v.scaled(num_complex::Complex64::new(1.0 / norm, 0.0))
        };
        let bx = mk(&qx);
        let by = mk(&qy);
        let vn = vec.l2l2_norm_sq().sqrt();
        let px = vec.real_pairing(&bx) / vn;
        let py = vec.real_pairing(&by) / vn;
        worst = worst.min((px * px + py * py).sqrt());
    }
    if near_kernel.is_empty() {
        0.0
    } else {
        worst
    }
}

/// Projection of the Q vector onto the near-zero eigenspace of the minus
/// operator.
pub fn q_direction_overlap(
    gs: &GroundState,
    n_comp: usize,
    near_kernel: &[(f64, FieldVec)],
) -> f64 {
    let q = gs.q_vector(n_comp);
    let qn = q.l2l2_norm_sq().sqrt();
    let mut acc = 0.0;
    for (_, vec) in near_kernel {
        let vn = vec.l2l2_norm_sq().sqrt();
        let p = q.real_pairing(vec) / (qn * vn);
        acc += p * p;
    }
    acc.sqrt()
}

fn gn_sweep_scenario(cfg: &ScenarioConfig, out_dir: &Path, s: &mut Summary) -> Result<()> {
    let grid = grid_of(cfg)?;
    let gs = solve_ground_state(grid.clone(), cfg.params.tol.unwrap_or(1e-10))?;
    let trials = cfg.params.trials.unwrap_or(10_000);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut table = String::from("n_comp,j_q,gn_constant,rel_err,max_trial_ratio\n");
    for n_comp in [1usize, 2, 3, 5, 8] {
        let q = gs.q_vector(n_comp);
        let jq = weinstein_j(&q)?;
        let c = gn_constant(SystemSize::Finite(n_comp), gs.mass_sq);
        let rel = (jq - c).abs() / c;
        s.put(&format!("j_q_n{n_comp}"), measured(jq));
        s.put(&format!("gn_constant_n{n_comp}"), paper(c));
        s.put(&format!("gn_rel_err_n{n_comp}"), measured(rel));
        s.check(
            &format!("sharp_constant_attained_n{n_comp}"),
            rel < 1e-6,
            format!("relative error {rel:.3e}"),
        );
        // Random trial fields never exceed the constant.
        let mut max_ratio = 0.0f64;
        for _ in 0..trials {
            let mut comps = Vec::with_capacity(n_comp);
            for _ in 0..n_comp {
                let norm = rng.gen_range(0.2..2.0);
                comps.push(random_localized(
                    grid.clone(),
                    &mut rng,
                    2.0,
                    grid.half_width / 8.0,
                    norm,
                ));
            }
            let u = FieldVec::from_components(FieldIndexing::Finite { n_comp }, comps)?;
            let j = weinstein_j(&u)?;
            max_ratio = max_ratio.max(j / c);
        }
        s.put(&format!("max_trial_ratio_n{n_comp}"), measured(max_ratio));
        s.check(
            &format!("no_gn_violation_n{n_comp}"),
            max_ratio <= 1.0 + 1e-9,
            format!("max J/C = {max_ratio:.12}"),
        );
        writeln!(table, "{n_comp},{jq:.17e},{c:.17e},{rel:.3e},{max_ratio:.12}").unwrap();
    }
    // Infinite-system constant on resonant samples.
    let c_inf = gn_constant(SystemSize::Infinite, gs.mass_sq);
    s.put("gn_constant_infinite", paper(c_inf));
    let jmax = cfg.params.jmax.unwrap_or(3);
    let mut max_ratio = 0.0f64;
    for _ in 0..(trials / 10).max(10) {
        let mut comps = Vec::with_capacity((2 * jmax + 1) as usize);
        for _ in 0..(2 * jmax + 1) {
            let norm = rng.gen_range(0.2..1.0);
            comps.push(random_localized(
                grid.clone(),
                &mut rng,
                2.0,
                grid.half_width / 8.0,
                norm,
            ));
        }
        let u = FieldVec::from_components(FieldIndexing::Resonant { jmax }, comps)?;
        let j = weinstein_j(&u)?;
        max_ratio = max_ratio.max(j / c_inf);
    }
    s.put("max_resonant_trial_ratio", measured(max_ratio));
    s.check(
        "no_infinite_gn_violation",
        max_ratio <= 1.0 + 1e-9,
        format!("max J/C_inf = {max_ratio:.12}"),
    );
    std::fs::write(out_dir.join("gn_sweep.csv"), table)?;
    Ok(())
}

fn soliton_scenario(cfg: &ScenarioConfig, out_dir: &Path, s: &mut Summary) -> Result<()> {
    let grid = grid_of(cfg)?;
    let gs = solve_ground_state(grid, cfg.params.tol.unwrap_or(1e-10))?;
    let n_comp = cfg.params.n_comp.unwrap_or(2);
    let lambda = cfg.params.lambda.unwrap_or(0.7);
    let dt = cfg.params.dt.unwrap_or(1e-3);
    let t_end = cfg.params.t_end.unwrap_or(1.0);
    let gamma: Vec<f64> = (0..n_comp).map(|j| 0.2 * j as f64).collect();
    let u0 = exact_soliton(&gs, n_comp, lambda, &gamma, [0.0; 2], [0.0; 2], 0.0);
    let policy = StepPolicy {
        dt,
        ..Default::default()
    };
    let out = evolve(
        &u0,
        t_end,
        &policy,
        &FlowOptions::default(),
        ((t_end / dt) as usize / 50).max(1),
        &[Monitor::Moments, Monitor::SpectralTail],
    )?;
    let reference = exact_soliton(&gs, n_comp, lambda, &gamma, [0.0; 2], [0.0; 2], t_end);
    let err = out
        .snapshots
        .last()
        .unwrap()
        .1
        .sub(&reference)
        .l2l2_norm_sq()
        .sqrt();
    let mass_drift = out
        .series
        .iter()
        .map(|r| (r.mass - out.series[0].mass).abs() / out.series[0].mass)
        .fold(0.0, f64::max);
    let energy_drift = out
        .series
        .iter()
        .map(|r| (r.energy - out.series[0].energy).abs())
        .fold(0.0, f64::max);
    s.put("final_error", derived(err));
    s.put("mass_drift", measured(mass_drift));
    s.put("energy_drift", measured(energy_drift));
    s.check(
        "propagation_error_below_1e-6",
        err < 1e-6,
        format!("{err:.3e}"),
    );
    s.check(
        "mass_drift_below_1e-10",
        mass_drift < 1e-10,
        format!("{mass_drift:.3e}"),
    );
    let study = convergence_study(&gs, StudyScenario::Soliton, dt)?;
    for (i, o) in study.orders.iter().enumerate() {
        s.put(&format!("strang_order_{i}"), measured(*o));
        s.check(
            &format!("order_is_two_{i}"),
            (o - 2.0).abs() < 0.1,
            format!("{o:.3}"),
        );
    }
    write_conserved_csv(&out_dir.join("conserved.csv"), &out.series)?;
    Ok(())
}

fn perturbed_scenario(cfg: &ScenarioConfig, out_dir: &Path, s: &mut Summary) -> Result<()> {
    let grid = grid_of(cfg)?;
    let gs = solve_ground_state(grid.clone(), cfg.params.tol.unwrap_or(1e-10))?;
    let n_comp = cfg.params.n_comp.unwrap_or(2);
    let amplitude = cfg.params.amplitude.unwrap_or(1e-3);
    let ctx = modulation_context(&gs, n_comp)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let q = gs.q_vector(n_comp);
    let mut u0 = q.clone();
    for c in u0.components.iter_mut() {
        let noise = random_localized(grid.clone(), &mut rng, 2.0, grid.half_width / 8.0, 1.0);
        for (a, b) in c.samples.iter_mut().zip(noise.samples.iter()) {
            *a += b * amplitude / (n_comp as f64).sqrt();
        }
    }
    let dt = cfg.params.dt.unwrap_or(1e-3);
    let t_end = cfg.params.t_end.unwrap_or(1.0);
    let policy = StepPolicy {
        dt,
        ..Default::default()
    };
    let out = evolve(
        &u0,
        t_end,
        &policy,
        &FlowOptions::default(),
        cfg.params.cadence.unwrap_or(100),
        &[Monitor::Moments],
    )?;
    let series = track(&out.snapshots, 1e-8, &GroupElement::identity(n_comp), &ctx)?;
    let alphas: Vec<f64> = out
        .snapshots
        .iter()
        .take(series.states.len())
        .map(|(_, u)| distance_to_orbit(u, 1, &ctx))
        .collect();
    // Empirical shadow of the parameter-control bound: the s-integral of
    // |lambda_s/lambda| against the s-integral of ||eps||.
    let mut lam_variation = 0.0;
    let mut eps_integral = 0.0;
    for w in 1..series.states.len() {
        let ds = series.s_values[w] - series.s_values[w - 1];
        let lam_prev = series.states[w - 1].lambda;
        let lam = series.states[w].lambda;
        lam_variation += ((lam / lam_prev).ln()).abs();
        eps_integral += 0.5 * (series.states[w].eps_l2() + series.states[w - 1].eps_l2()) * ds;
    }
    let control_ratio = lam_variation / eps_integral.max(1e-300);
    let mono = lambda_monotonicity(&series)?;
    s.put("eps_initial", measured(series.states[0].eps_l2()));
    s.put("lambda_variation", measured(lam_variation));
    s.put("eps_s_integral", measured(eps_integral));
    s.put("parameter_control_ratio", measured(control_ratio));
    s.put("sup_lambda_ratio", measured(mono.sup_ratio));
    s.check(
        "lambda_ratio_below_e",
        mono.sup_ratio < std::f64::consts::E,
        format!("{:.6}", mono.sup_ratio),
    );
    s.check(
        "tracked_whole_horizon",
        series.exit_index.is_none(),
        format!("exit {:?}", series.exit_index),
    );
    write_modulation_csv(&out_dir.join("modulation.csv"), &series, &alphas)?;
    Ok(())
}

fn pc_blowup_scenario(cfg: &ScenarioConfig, out_dir: &Path, s: &mut Summary) -> Result<()> {
    let grid = grid_of(cfg)?;
    let gs = solve_ground_state(grid.clone(), cfg.params.tol.unwrap_or(1e-10))?;
    let n_comp = cfg.params.n_comp.unwrap_or(2);
    let ctx = modulation_context(&gs, n_comp)?;
    let seed = BlowupSeed {
        n_comp,
        lambda: cfg.params.lambda.unwrap_or(1.0),
        gamma: vec![0.0; n_comp],
        blowup_time: 0.0,
        t_start: -(cfg.params.t_end.unwrap_or(1.0)),
    };
    let policy = StepPolicy {
        dt: cfg.params.dt.unwrap_or(5e-4),
        adapt: true,
        cfl_like_cap: 0.1,
    };
    let stop_width = cfg
        .params
        .stop_width
        .unwrap_or(8.0 * grid.dx);
    let report = blowup_run(
        &gs,
        &ctx,
        &seed,
        stop_width,
        &policy,
        cfg.params.cadence.unwrap_or(50),
    )?;
    let mono = lambda_monotonicity(&report.series)?;
    let horizon = -seed.t_start;
    let t_fit_rel = (report.t_fit - seed.blowup_time).abs() / horizon;
    // lambda (T - t) should be the seed scale along the whole run.
    let mut worst_scale_dev = 0.0f64;
    for (t, st) in report.series.times.iter().zip(report.series.states.iter()) {
        let dev = (st.lambda * (seed.blowup_time - t) / seed.lambda - 1.0).abs();
        worst_scale_dev = worst_scale_dev.max(dev);
    }
    s.put("c_fit", measured(report.c));
    s.put("t_fit", measured(report.t_fit));
    s.put("t_fit_rel_err", derived(t_fit_rel));
    s.put("fit_residual", measured(report.fit_residual));
    s.put("max_mass_drift", measured(report.max_mass_drift));
    s.put("final_width", measured(report.final_width));
    s.put("sup_lambda_ratio", measured(mono.sup_ratio));
    s.put("scale_product_dev", derived(worst_scale_dev));
    s.check(
        "t_fit_within_2pc",
        t_fit_rel < 0.02,
        format!("relative {t_fit_rel:.3e}"),
    );
    s.check(
        "scale_product_constant_2pc",
        worst_scale_dev < 0.02,
        format!("max deviation {worst_scale_dev:.3e}"),
    );
    s.check(
        "mass_constant_1e-8",
        report.max_mass_drift < 1e-8,
        format!("{:.3e}", report.max_mass_drift),
    );
    s.check(
        "monotone_focusing",
        mono.sup_ratio < 1.0 + 1e-6,
        format!("{:.9}", mono.sup_ratio),
    );
    let alphas = vec![f64::NAN; report.series.states.len()];
    write_modulation_csv(&out_dir.join("modulation.csv"), &report.series, &alphas)?;
    Ok(())
}

fn resonant_scenario(cfg: &ScenarioConfig, out_dir: &Path, s: &mut Summary) -> Result<()> {
    let grid = grid_of(cfg)?;
    let jmax = cfg.params.jmax.unwrap_or(3);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let comps = (0..(2 * jmax + 1) as usize)
        .map(|_| {
            random_localized(
                grid.clone(),
                &mut rng,
                1.5,
                grid.half_width / 8.0,
                cfg.params.amplitude.unwrap_or(0.25),
            )
        })
        .collect();
    let u0 = FieldVec::from_components(FieldIndexing::Resonant { jmax }, comps)?;
    // Pointwise agreement of the resonance sum with the closed form.
    let f_closed = apply_nonlinearity(&u0, false);
    let f_sum = apply_nonlinearity_resonance_sum(&u0)?;
    let mut worst = 0.0f64;
    for (a, b) in f_closed.components.iter().zip(f_sum.components.iter()) {
        for (x, y) in a.samples.iter().zip(b.samples.iter()) {
            worst = worst.max((x - y).norm());
        }
    }
    s.put("resonance_sum_vs_closed_form", derived(worst));
    s.check(
        "resonance_sum_matches_1e-12",
        worst < 1e-12,
        format!("{worst:.3e}"),
    );
    let policy = StepPolicy {
        dt: cfg.params.dt.unwrap_or(1e-3),
        ..Default::default()
    };
    let out = evolve(
        &u0,
        cfg.params.t_end.unwrap_or(1.0),
        &policy,
        &FlowOptions::default(),
        cfg.params.cadence.unwrap_or(100),
        &[Monitor::WeightedMasses],
    )?;
    let first = &out.series[0];
    let mut drifts = [0.0f64; 3];
    for rec in &out.series {
        drifts[0] = drifts[0].max((rec.mass - first.mass).abs() / first.mass);
        drifts[1] = drifts[1].max((rec.m010 - first.m010).abs() / first.mass);
        drifts[2] = drifts[2].max((rec.m001 - first.m001).abs() / first.mass);
    }
    s.put("m100_drift", measured(drifts[0]));
    s.put("m010_drift", measured(drifts[1]));
    s.put("m001_drift", measured(drifts[2]));
    for (name, d) in ["m100", "m010", "m001"].iter().zip(drifts.iter()) {
        s.check(
            &format!("{name}_conserved_1e-10"),
            *d < 1e-10,
            format!("{d:.3e}"),
        );
    }
    write_conserved_csv(&out_dir.join("conserved.csv"), &out.series)?;
    Ok(())
}

fn virial_scenario(cfg: &ScenarioConfig, out_dir: &Path, s: &mut Summary) -> Result<()> {
    let grid = grid_of(cfg)?;
    let gs = solve_ground_state(grid, cfg.params.tol.unwrap_or(1e-10))?;
    let n_comp = cfg.params.n_comp.unwrap_or(2);
    let lambda = cfg.params.lambda.unwrap_or(0.8);
    let gamma = vec![0.0; n_comp];
    let u0 = exact_soliton(&gs, n_comp, lambda, &gamma, [0.0; 2], [0.9, 0.0], 0.0);
    let e = energy(&u0);
    let dt_probe = 5e-3;
    let policy = StepPolicy {
        dt: cfg.params.dt.unwrap_or(5e-4),
        ..Default::default()
    };
    let out = evolve(
        &u0,
        2.0 * dt_probe,
        &policy,
        &FlowOptions::default(),
        10,
        &[],
    )?;
    let v_of = |t: f64| {
        out.snapshots
            .iter()
            .min_by(|a, b| (a.0 - t).abs().partial_cmp(&(b.0 - t).abs()).unwrap())
            .map(|(_, u)| virial_variance(u).v)
            .unwrap()
    };
    let second = (v_of(2.0 * dt_probe) - 2.0 * v_of(dt_probe) + v_of(0.0)) / (dt_probe * dt_probe);
    let rel = (second - 16.0 * e).abs() / (16.0 * e).abs();
    s.put("virial_second_difference", measured(second));
    s.put("sixteen_energy", measured(16.0 * e));
    s.put("virial_identity_rel_err", derived(rel));
    s.check("virial_identity_1pc", rel < 0.01, format!("{rel:.3e}"));
    // Morawetz action and truncated-energy ladder on the initial state.
    let m = morawetz_action(&u0, grid_of(cfg)?.half_width / 4.0, 0.5, 5);
    s.put("morawetz_action", measured(m));
    let mut text = String::from("k0,truncated_energy\n");
    for k0 in -2..=6 {
        writeln!(text, "{k0},{:.17e}", truncated_energy(&u0, k0)).unwrap();
    }
    std::fs::write(out_dir.join("truncated_energy.csv"), text)?;
    Ok(())
}

fn modulation_scenario(cfg: &ScenarioConfig, out_dir: &Path, s: &mut Summary) -> Result<()> {
    let grid = grid_of(cfg)?;
    let gs = solve_ground_state(grid.clone(), cfg.params.tol.unwrap_or(1e-10))?;
    let n_comp = cfg.params.n_comp.unwrap_or(2);
    let ctx = modulation_context(&gs, n_comp)?;
    let q = gs.q_vector(n_comp);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let samples = cfg.params.samples.unwrap_or(100);
    let mut worst_recovery = 0.0f64;
    let mut worst_residual = 0.0f64;
    for _ in 0..samples {
        let g = GroupElement {
            lambda: rng.gen_range(-0.2..0.2f64).exp(),
            x0: [rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5)],
            xi0: [rng.gen_range(-0.2..0.2), rng.gen_range(-0.2..0.2)],
            gamma: (0..n_comp).map(|_| rng.gen_range(-0.5..0.5f64)).collect(),
            t0: 0.0,
        };
        let (u, _) = apply_group(&g, &q, 0.0);
        let st = decompose(&u, &GroupElement::identity(n_comp), 1e-11, &ctx)?;
        let mut err = (st.lambda - g.lambda).abs();
        for k in 0..2 {
            err += (st.xi[k] - g.xi0[k]).abs() + (st.x_tilde[k] - g.x0[k]).abs();
        }
        for (a, b) in st.gamma.iter().zip(g.gamma.iter()) {
            let tau = std::f64::consts::TAU;
            let mut d = (a - b).rem_euclid(tau);
            if d > tau / 2.0 {
                d -= tau;
            }
            err += d.abs();
        }
        worst_recovery = worst_recovery.max(err);
        worst_residual = worst_residual.max(
            st.ortho_residuals
                .iter()
                .map(|r| r.abs())
                .fold(0.0, f64::max),
        );
    }
    s.put("worst_recovery", measured(worst_recovery));
    s.put("worst_ortho_residual", measured(worst_residual));
    s.check(
        "recovery_1e-8",
        worst_recovery < 1e-8,
        format!("{worst_recovery:.3e}"),
    );
    s.check(
        "ortho_residuals_1e-10",
        worst_residual < 1e-10,
        format!("{worst_residual:.3e}"),
    );
    // Linear-bound constants at three perturbation amplitudes.
    let per_amp = (cfg.params.trials.unwrap_or(999) / 3).max(1);
    let mut ks = Vec::new();
    for amplitude in [1e-2, 1e-3, 1e-4] {
        let mut k_max = 0.0f64;
        for _ in 0..per_amp {
            let mut u = q.clone();
            for c in u.components.iter_mut() {
                let noise =
                    random_localized(grid.clone(), &mut rng, 2.0, grid.half_width / 8.0, 1.0);
                for (a, b) in c.samples.iter_mut().zip(noise.samples.iter()) {
                    *a += b * amplitude / (n_comp as f64).sqrt();
                }
            }
            let st = decompose(&u, &GroupElement::identity(n_comp), 1e-11, &ctx)?;
            let mut total = st.eps_l2() + (st.lambda - 1.0).abs();
            for k in 0..2 {
                total += st.xi[k].abs() + st.x_tilde[k].abs();
            }
            for g in &st.gamma {
                let w = g.min(std::f64::consts::TAU - g);
                total += w.abs();
            }
            k_max = k_max.max(total / amplitude);
        }
        s.put(&format!("linear_bound_k_amp{amplitude:e}"), measured(k_max));
        ks.push(k_max);
    }
    let k_spread = ks.iter().cloned().fold(0.0, f64::max)
        / ks.iter().cloned().fold(f64::INFINITY, f64::min);
    s.put("linear_bound_k_spread", measured(k_spread));
    s.check(
        "linear_bound_stable_2x",
        k_spread < 2.0,
        format!("spread {k_spread:.3}"),
    );
    // Orbit-distance sanity values.
    s.put("distance_at_q", measured(distance_to_orbit(&q, 2, &ctx)));
    let doubled = q.scaled(num_complex::Complex64::new(2.0, 0.0));
    s.put(
        "distance_at_2q",
        measured(distance_to_orbit(&doubled, 2, &ctx)),
    );
    let _ = out_dir;
    Ok(())
}

/// Shared helper: scalar chi0 and lambda0 for the modulation frame.
pub fn modulation_context(gs: &GroundState, n_comp: usize) -> Result<ModulationContext> {
    let grid = gs.profile.grid.clone();
    let op = assemble(OperatorKind::L0Plus, 1, gs, grid)?;
    let rep = spectrum_report(&op, gs, 4, 1e-6)?;
    ModulationContext::new(gs, n_comp, &rep.chi0.components[0], rep.lambda0)
}

// ---------------------------------------------------------------------------
// Selfcheck: the fast invariant suite.
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize)]
pub struct SelfcheckReport {
    pub checks: Vec<AssertionOutcome>,
}

impl SelfcheckReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// Fast machine-readable invariant sweep across the modules (< 60 s).
pub fn selfcheck() -> Result<SelfcheckReport> {
    let mut checks = Vec::new();
    let mut push = |name: &str, passed: bool, detail: String| {
        checks.push(AssertionOutcome {
            name: name.to_string(),
            passed,
            detail,
        });
    };
    let grid = Grid2D::new(8.0, 64)?;
    let mut rng = ChaCha8Rng::seed_from_u64(0x5e1f);

    // Transform round trip and Parseval.
    let f = random_localized(grid.clone(), &mut rng, 2.0, 1.0, 1.0);
    let back = crate::field::ComplexField2D::from_spectrum(grid.clone(), f.to_spectrum());
    let rt: f64 = f
        .samples
        .iter()
        .zip(back.samples.iter())
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    push("fft_round_trip", rt < 1e-12, format!("{rt:.3e}"));
    let parseval = (f.l2_norm_sq() - f.l2_norm_sq_spectral()).abs() / f.l2_norm_sq();
    push("parseval", parseval < 1e-12, format!("{parseval:.3e}"));

    // Projector partition of unity.
    let lo = crate::field::lp_project(&f, 1, crate::field::LpKind::Leq);
    let hi = crate::field::lp_project(&f, 1, crate::field::LpKind::Geq);
    let rec: f64 = f
        .samples
        .iter()
        .zip(lo.samples.iter().zip(hi.samples.iter()))
        .map(|(o, (a, b))| (o - (a + b)).norm())
        .fold(0.0, f64::max);
    push("lp_partition", rec < 1e-12, format!("{rec:.3e}"));

    // Resonance sets against brute force.
    let mut resonance_ok = true;
    for jmax in 0..=4 {
        for j in -jmax..=jmax {
            let fast = crate::nonlin::resonance_set(j, jmax)?;
            let mut brute = Vec::new();
            for j1 in -jmax..=jmax {
                for j2 in -jmax..=jmax {
                    for j3 in -jmax..=jmax {
                        if j1 - j2 + j3 == j && j1 * j1 - j2 * j2 + j3 * j3 == j * j {
                            brute.push((j1, j2, j3));
                        }
                    }
                }
            }
            brute.sort_unstable();
            resonance_ok &= fast.triples == brute;
        }
    }
    push("resonance_sets", resonance_ok, "j up to 4".into());

    // C(M) arithmetic.
    let cm_ok = cm_constant(2)? == 1.0
        && cm_constant(3)? == 2.0
        && cm_constant(4)? == 6.0
        && cm_constant(5)? == 10.0;
    push("cm_constants", cm_ok, "C(2..5) = 1,2,6,10".into());

    // Pointwise mass-flux compatibility of the nonlinearity.
    let comps = (0..3)
        .map(|_| random_localized(grid.clone(), &mut rng, 1.5, 1.0, 0.7))
        .collect();
    let u = FieldVec::from_components(FieldIndexing::Resonant { jmax: 1 }, comps)?;
    let fu = apply_nonlinearity(&u, false);
    let mut flux = 0.0f64;
    for p in 0..grid.n * grid.n {
        let s: f64 = u
            .components
            .iter()
            .zip(fu.components.iter())
            .map(|(a, b)| (a.samples[p].conj() * b.samples[p]).im)
            .sum();
        flux = flux.max(s.abs());
    }
    push("mass_flux_pointwise", flux < 1e-12, format!("{flux:.3e}"));

    // Coarse ground-state certificates.
    let ggrid = Grid2D::new(12.0, 128)?;
    let gs = solve_ground_state(ggrid, 1e-9)?;
    push(
        "ground_state_residual",
        gs.residual_inf <= 1e-9,
        format!("{:.3e}", gs.residual_inf),
    );
    push(
        "pohozaev",
        gs.pohozaev_defects.0 < 1e-8 && gs.pohozaev_defects.1 < 1e-8,
        format!("{:?}", gs.pohozaev_defects),
    );
    let e_q = energy(&gs.q_vector(3));
    push("energy_of_q_vanishes", e_q.abs() < 1e-8, format!("{e_q:.3e}"));
    let m3 = mass(&gs.q_vector(3));
    let expect = 3.0 / 5.0 * gs.mass_sq;
    push(
        "q_vector_mass_scaling",
        (m3 - expect).abs() / expect < 1e-12,
        format!("{:.3e}", (m3 - expect).abs() / expect),
    );

    // Weighted-mass oracle.
    let wm = weighted_mass(&u, 0.0, 0.0, 1.0)?;
    let direct: f64 = u
        .components
        .iter()
        .enumerate()
        .map(|(s, c)| {
            let j = u.indexing.label(s) as f64;
            j * j * c.l2_norm_sq()
        })
        .sum();
    push(
        "weighted_mass_oracle",
        (wm - direct).abs() <= 1e-12 * direct.max(1.0),
        format!("{:.3e}", (wm - direct).abs()),
    );

    // Symmetry identity.
    let q2 = gs.q_vector(2);
    let (idt, _) = apply_group(&GroupElement::identity(2), &q2, 0.3);
    let idd = idt.sub(&q2).l2l2_norm_sq().sqrt();
    push("group_identity", idd < 1e-12, format!("{idd:.3e}"));

    // Band-sensitive checks run on the finer grid: the pseudo-conformal
    // round trip re-interpolates chirped content and the cubic residual
    // is aliasing-limited.
    let fine_gs = solve_ground_state(Grid2D::new(12.0, 256)?, 1e-10)?;
    let fine_grid = fine_gs.profile.grid.clone();
    let pc_probe = {
        let comps = (0..2)
            .map(|_| random_localized(fine_grid.clone(), &mut rng, 1.0, 1.2, 1.0))
            .collect();
        FieldVec::from_components(FieldIndexing::Finite { n_comp: 2 }, comps)?
    };
    let (pc, tpc) = pseudo_conformal(&pc_probe, 1.25)?;
    let (back2, _) = pseudo_conformal(&pc, tpc)?;
    let inv = back2.sub(&pc_probe).l2l2_norm_sq().sqrt();
    push("pseudo_conformal_involution", inv < 1e-8, format!("{inv:.3e}"));
    let (us, dus) = crate::symmetry::exact_soliton_with_time_derivative(
        &fine_gs,
        2,
        0.9,
        &[0.1, -0.2],
        [0.0; 2],
        [0.0; 2],
        0.2,
    );
    let res = crate::symmetry::pde_residual_norm(&us, &dus);
    push("soliton_residual", res < 1e-7, format!("{res:.3e}"));

    // Snapshot round trip and corrupted-magic detection.
    let dir = std::env::temp_dir().join(format!("nlss-selfcheck-{}", std::process::id()));
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("probe.nlss");
    write_snapshot(&path, &q2)?;
    let rt_field = crate::snapshot::read_snapshot(&path)?;
    let snap_ok = rt_field.sub(&q2).l2l2_norm_sq() == 0.0;
    push("snapshot_round_trip", snap_ok, "bit-exact".into());
    let mut bytes = std::fs::read(&path)?;
    bytes[1] = b'?';
    std::fs::write(&path, &bytes)?;
    let magic_err = matches!(
        crate::snapshot::read_snapshot(&path),
        Err(NlssError::Format { offset: 0, .. })
    );
    push("snapshot_magic_detected", magic_err, "offset 0".into());

    // Short resonant evolution conserves the weighted masses.
    let policy = StepPolicy {
        dt: 2e-3,
        ..Default::default()
    };
    let out = evolve(
        &u,
        0.1,
        &policy,
        &FlowOptions::default(),
        10,
        &[Monitor::WeightedMasses],
    )?;
    let d001 = out
        .series
        .iter()
        .map(|r| (r.m001 - out.series[0].m001).abs())
        .fold(0.0, f64::max);
    push(
        "resonant_m001_conserved",
        d001 < 1e-10 * out.series[0].mass,
        format!("{d001:.3e}"),
    );

    // Pseudo-conformal family member (paper blowup case) carries the mass of
    // the ground state.
    let ps = exact_pseudosoliton(&gs, 2, 1.0, &[0.0, 0.0], [0.0; 2], [0.0; 2], 0.0, -1.0)?;
    let md = (ps.l2l2_norm_sq() - q2.l2l2_norm_sq()).abs() / q2.l2l2_norm_sq();
    push("pseudosoliton_mass", md < 1e-8, format!("{md:.3e}"));

    Ok(SelfcheckReport { checks })
}
