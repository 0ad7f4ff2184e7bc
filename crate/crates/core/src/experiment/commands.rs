use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::output::{join_lines, write_csv, write_json};
use super::{
    AlphaRow, CompareRow, ExperimentConfig, ExperimentError, GenerateRow, GuaranteeCsvRow, LoadRow, Partition,
    PartitionRow, ServiceLifeRow, StageRow, StateRow, SurfaceRow,
};
use crate::baselines::{ranking, run_strategy, solve_one_stage, StrategyInputs, StrategyKind};
use crate::cascade::{build_database, read_database, write_database, BuildOptions, ChainDatabase};
use crate::grid::Network;
use crate::risk::{RiskParams, StateRiskTable};
use crate::scg::{guarantee_report, guarantee_table, solve_scg, DtrPlan, GuaranteeReport};
use crate::submodular::{
    evaluate_placement, modular_decomposition, Decomposition, SetFunction, TssoProblem, DEFAULT_TSSO_BUDGET,
};
use crate::subset::Subset;

/// What `solve` runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStrategy {
    Scg,
    Baseline(StrategyKind),
    /// A single set operated in every state.
    OneStage,
    /// The SCG placement with one extra operated line per state.
    Flexible,
}

impl SolveStrategy {
    pub fn name(self) -> String {
        match self {
            SolveStrategy::Scg => "SCG".into(),
            SolveStrategy::Baseline(k) => k.name().into(),
            SolveStrategy::OneStage => "one-stage".into(),
            SolveStrategy::Flexible => "flexible".into(),
        }
    }

    fn file_stem(self) -> String {
        self.name().to_lowercase()
    }
}

impl fmt::Display for SolveStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl FromStr for SolveStrategy {
    type Err = ExperimentError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "scg" => Ok(SolveStrategy::Scg),
            "one-stage" | "onestage" => Ok(SolveStrategy::OneStage),
            "flexible" => Ok(SolveStrategy::Flexible),
            other => other
                .parse::<StrategyKind>()
                .map(SolveStrategy::Baseline)
                .map_err(|_| ExperimentError::Config(format!("unknown strategy `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    Alpha,
    Partition,
    Load,
    GuaranteeSurface,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::Alpha => "alpha",
            SweepAxis::Partition => "partition",
            SweepAxis::Load => "load",
            SweepAxis::GuaranteeSurface => "guarantee-surface",
        }
    }
}

impl FromStr for SweepAxis {
    type Err = ExperimentError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        [SweepAxis::Alpha, SweepAxis::Partition, SweepAxis::Load, SweepAxis::GuaranteeSurface]
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| ExperimentError::Config(format!("unknown sweep axis `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateOutcome {
    pub state: usize,
    pub f: f64,
    pub risk: f64,
    pub bpi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub round: usize,
    pub chosen: u32,
    pub gain_sum: f64,
    pub phi: f64,
    pub schedules: Vec<Vec<u32>>,
}

/// A solved plan in line ids, as written to `plan_<strategy>.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanRecord {
    pub strategy: String,
    pub alpha: f64,
    #[serde(rename = "F")]
    pub value: f64,
    pub bpi: f64,
    pub risk: f64,
    pub base_risk: f64,
    pub placement: Vec<u32>,
    pub schedules: Vec<Vec<u32>>,
    pub states: Vec<StateOutcome>,
    pub stopped_early: bool,
    pub trace: Vec<TraceRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub guarantee: Option<GuaranteeReport>,
}

impl PlanRecord {
    pub fn read(path: impl AsRef<Path>) -> Result<Self, ExperimentError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| ExperimentError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| ExperimentError::io(path, format!("invalid plan file: {e}")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOutcome {
    pub record: PlanRecord,
    pub plan_path: PathBuf,
}

/// Risk tables and the two-stage problem for one database and `α`.
pub struct Instance {
    pub params: RiskParams,
    pub tables: Vec<Arc<StateRiskTable>>,
    pub problem: TssoProblem,
    pub decomposition: Decomposition,
    /// Mean singleton value per line position.
    pub singletons: Vec<f64>,
}

impl Instance {
    pub fn build(
        network: &Network,
        db: &ChainDatabase,
        params: RiskParams,
        k: usize,
        k_c2: Vec<usize>,
        p: f64,
        partition: &Partition,
    ) -> Result<Self, ExperimentError> {
        let tables = db
            .states()
            .par_iter()
            .map(|chains| StateRiskTable::build(chains, network, &params).map(Arc::new))
            .collect::<Result<Vec<_>, _>>()?;
        let n = network.lines().len();
        let m = tables.len() as f64;
        let singletons: Vec<f64> = (0..n)
            .into_par_iter()
            .map(|e| tables.iter().map(|t| t.value(&Subset::singleton(e))).sum::<f64>() / m)
            .collect();
        let functions = tables.iter().map(|t| t.clone() as Arc<dyn SetFunction>).collect();
        let problem = TssoProblem::new(network.line_ids(), functions, k, k_c2, p, Subset::empty())?.memoized();
        let mut out = Self { params, tables, problem, decomposition: Decomposition { weights: Vec::new() }, singletons };
        let block = out.first_block(network, partition)?;
        out.set_first_block(block);
        Ok(out)
    }

    pub fn first_block(&self, network: &Network, partition: &Partition) -> Result<Subset, ExperimentError> {
        match partition {
            Partition::Size(0) => Err(ExperimentError::Config("partition size must be positive".into())),
            Partition::Size(s) => Ok(ranking(&self.singletons).into_iter().take(*s).collect()),
            Partition::Lines(ids) => ids
                .iter()
                .map(|&id| {
                    network.line_position(id).ok_or_else(|| ExperimentError::Config(format!("partition names unknown line {id}")))
                })
                .collect(),
        }
    }

    pub fn set_first_block(&mut self, block: Subset) {
        self.problem = self.problem.with_first_block(block);
        self.decomposition = modular_decomposition(&self.problem);
    }

    pub fn outcomes(&self, schedules: &[Subset]) -> Vec<StateOutcome> {
        self.tables
            .iter()
            .zip(schedules)
            .enumerate()
            .map(|(state, (t, s))| StateOutcome { state, f: t.value(s), risk: t.risk(s), bpi: t.bpi(s) })
            .collect()
    }

    pub fn record(&self, plan: &DtrPlan) -> PlanRecord {
        let states = self.outcomes(&plan.schedules);
        let m = states.len() as f64;
        let mean = |get: fn(&StateOutcome) -> f64| states.iter().map(get).sum::<f64>() / m;
        let labels = |s: &Subset| self.problem.labels_of(s);
        PlanRecord {
            strategy: plan.strategy.clone(),
            alpha: self.params.alpha,
            value: plan.value,
            bpi: mean(|s| s.bpi),
            risk: mean(|s| s.risk),
            base_risk: self.tables.iter().map(|t| t.base_risk()).sum::<f64>() / m,
            placement: labels(&plan.placement),
            schedules: plan.schedules.iter().map(labels).collect(),
            states,
            stopped_early: plan.stopped_early,
            trace: plan
                .trace
                .iter()
                .map(|s| TraceRecord {
                    round: s.round,
                    chosen: self.problem.labels[s.chosen],
                    gain_sum: s.gain_sum,
                    phi: s.phi,
                    schedules: s.schedules.iter().map(labels).collect(),
                })
                .collect(),
            guarantee: None,
        }
    }
}

/// Residual service life of every placed line: `1 - years · fraction / lifetime`
/// clamped to `[0, 1]`, where `fraction` is the summed duration of the states
/// that operate the line.
pub fn service_life(
    name: &str,
    placement: &[u32],
    schedules: &[Vec<u32>],
    durations: &[f64],
    lifetime_years: f64,
    horizons: &[f64],
) -> Result<Vec<ServiceLifeRow>, ExperimentError> {
    if schedules.len() != durations.len() {
        return Err(ExperimentError::Config(format!(
            "plan `{name}` has {} states but the configuration has {}",
            schedules.len(),
            durations.len()
        )));
    }
    let mut lines = placement.to_vec();
    lines.sort_unstable();
    let mut rows = Vec::new();
    for &years in horizons {
        for &line in &lines {
            let fraction: f64 = schedules.iter().zip(durations).filter(|(t, _)| t.contains(&line)).map(|(_, d)| d).sum();
            rows.push(ServiceLifeRow {
                plan: name.to_string(),
                line,
                operating_fraction: fraction,
                years,
                residual: (1.0 - years * fraction / lifetime_years).clamp(0.0, 1.0),
            });
        }
    }
    Ok(rows)
}

/// A loaded configuration together with its network.
pub struct Experiment {
    pub config: ExperimentConfig,
    pub network: Network,
}

impl Experiment {
    pub fn new(config: ExperimentConfig) -> Result<Self, ExperimentError> {
        let network = Network::from_path(&config.network)
            .map_err(|e| ExperimentError::Config(format!("network {}: {e}", config.network.display())))?;
        if config.k > network.lines().len() {
            return Err(ExperimentError::Config(format!("k = {} exceeds the {} lines", config.k, network.lines().len())));
        }
        config.system_states(network.buses().len(), 1.0)?;
        Ok(Self { config, network })
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self, ExperimentError> {
        Self::new(ExperimentConfig::from_path(path)?)
    }

    pub fn database_path(&self) -> PathBuf {
        self.config.output_dir.join("database.tsdb")
    }

    fn output(&self, name: &str) -> Result<PathBuf, ExperimentError> {
        let dir = &self.config.output_dir;
        fs::create_dir_all(dir).map_err(|e| ExperimentError::io(dir, e))?;
        Ok(dir.join(name))
    }

    /// Samples a database with every state scaled by `load_ratio`.
    pub fn generate(&self, load_ratio: f64) -> Result<ChainDatabase, ExperimentError> {
        let c = &self.config;
        let states = c.system_states(self.network.buses().len(), load_ratio)?;
        let options = BuildOptions { seed: c.seed, d_max: c.d_max, initiation: c.initiation };
        Ok(build_database(&self.network, &states, c.chains_per_state, &c.risk, &options)?)
    }

    pub fn cmd_generate(&self) -> Result<Vec<GenerateRow>, ExperimentError> {
        let db = self.generate(1.0)?;
        let path = self.output("database.tsdb")?;
        write_database(&db, &path)?;
        let y_ext = self.config.risk.y_ext;
        let rows: Vec<GenerateRow> = db
            .states()
            .iter()
            .enumerate()
            .map(|(state, chains)| {
                let n = chains.len() as f64;
                GenerateRow {
                    state,
                    chains: chains.len(),
                    mean_load_loss_mw: chains.iter().map(|c| c.load_loss_mw).sum::<f64>() / n,
                    exceed_fraction: chains.iter().filter(|c| c.load_loss_mw > y_ext).count() as f64 / n,
                    mean_depth: chains.iter().map(|c| c.depth() as f64).sum::<f64>() / n,
                }
            })
            .collect();
        write_csv(&self.output("generate_summary.csv")?, &rows)?;
        Ok(rows)
    }

    /// Reads the database written by [`Experiment::cmd_generate`].
    pub fn load_database(&self) -> Result<ChainDatabase, ExperimentError> {
        let path = self.database_path();
        if !path.exists() {
            return Err(ExperimentError::io(&path, "database not found, run `generate` first"));
        }
        let db = read_database(&path).map_err(|e| match ExperimentError::from(e) {
            ExperimentError::Io { message, .. } => ExperimentError::io(&path, message),
            other => other,
        })?;
        if let Some(w) = db.fingerprint_warning(&self.network) {
            log::warn!("{w}");
        }
        if db.params_fingerprint != self.config.risk.sampling_fingerprint() {
            log::warn!("database was sampled with different failure-probability parameters");
        }
        if db.state_count() != self.config.states.len() || db.line_count != self.network.lines().len() {
            return Err(ExperimentError::Config(format!(
                "database holds {} states over {} lines, configuration expects {} over {}",
                db.state_count(),
                db.line_count,
                self.config.states.len(),
                self.network.lines().len()
            )));
        }
        Ok(db)
    }

    pub fn instance(&self, db: &ChainDatabase, alpha: f64, k_c2: Vec<usize>) -> Result<Instance, ExperimentError> {
        let c = &self.config;
        Instance::build(&self.network, db, c.risk.with_alpha(alpha), c.k, k_c2, c.p, &c.partition)
    }

    fn flexible_k_c2(&self) -> Vec<usize> {
        self.config.k_c2.iter().map(|&kc| (kc + 1).min(self.config.k)).collect()
    }

    /// Runs `strategy` on a prepared instance.
    pub fn solve_plan(&self, instance: &Instance, db: &ChainDatabase, strategy: SolveStrategy) -> Result<DtrPlan, ExperimentError> {
        let problem = &instance.problem;
        Ok(match strategy {
            SolveStrategy::Scg => solve_scg(problem, &instance.decomposition),
            SolveStrategy::Baseline(kind) => {
                let inputs = StrategyInputs {
                    problem,
                    database: db,
                    network: &self.network,
                    params: &instance.params,
                    seed: self.config.seed,
                    ls_passes: self.config.ls_passes,
                };
                run_strategy(kind, &inputs)?
            }
            SolveStrategy::OneStage => solve_one_stage(problem, self.config.one_stage_k),
            SolveStrategy::Flexible => {
                let scg = solve_scg(problem, &instance.decomposition);
                let mut flex = problem.clone();
                flex.k_c2 = self.flexible_k_c2();
                let sol = evaluate_placement(&flex, &scg.placement)?;
                DtrPlan::from_sets("flexible", &flex, scg.placement, sol.schedules)
            }
        })
    }

    pub fn cmd_solve(&self, strategy: SolveStrategy) -> Result<SolveOutcome, ExperimentError> {
        let db = self.load_database()?;
        let instance = self.instance(&db, self.config.risk.alpha, self.config.k_c2.clone())?;
        let plan = self.solve_plan(&instance, &db, strategy)?;
        let mut record = instance.record(&plan);
        let stem = strategy.file_stem();

        if strategy == SolveStrategy::Scg {
            for (j, (lhs, rhs)) in plan.potential_identity(&instance.problem, &instance.decomposition).iter().enumerate() {
                if (lhs - rhs).abs() > 1e-9 {
                    log::warn!("round {}: potential recurrence off by {:e}", j + 1, lhs - rhs);
                }
            }
            let report = guarantee_report(
                &plan,
                &instance.problem,
                &instance.decomposition,
                self.config.guarantee_mode,
                DEFAULT_TSSO_BUDGET,
            )?;
            log::info!(
                "F = {:.3}, kappa_f1 = {:.3}, pure {:.3}, certified {:.3} ({:?} mode)",
                report.value,
                report.kappa_f1,
                report.pure,
                report.certified,
                report.mode
            );
            let row = GuaranteeCsvRow {
                f: report.value,
                kappa_f1: report.kappa_f1,
                pure_guarantee: report.pure,
                error_term: report.error,
                guarantee: report.certified,
            };
            write_csv(&self.output(&format!("guarantee_{stem}.csv"))?, &[row])?;
            record.guarantee = Some(report);
        }

        let state_rows: Vec<StateRow> = record
            .states
            .iter()
            .zip(&record.schedules)
            .map(|(s, t)| StateRow { state: s.state, f: s.f, risk: s.risk, bpi: s.bpi, lines: join_lines(t) })
            .collect();
        write_csv(&self.output(&format!("states_{stem}.csv"))?, &state_rows)?;
        let plan_path = self.output(&format!("plan_{stem}.json"))?;
        write_json(&plan_path, &record)?;
        Ok(SolveOutcome { record, plan_path })
    }

    /// Strategy table (with a No-DTR row first) and the per-state one-stage
    /// against two-stage table.
    pub fn cmd_compare(&self) -> Result<(Vec<CompareRow>, Vec<StageRow>), ExperimentError> {
        let db = self.load_database()?;
        let instance = self.instance(&db, self.config.risk.alpha, self.config.k_c2.clone())?;
        let m = instance.tables.len();

        let none = instance.outcomes(&vec![Subset::empty(); m]);
        let mut rows = vec![CompareRow {
            strategy: "No DTR".into(),
            f: none.iter().map(|s| s.f).sum::<f64>() / m as f64,
            bpi: none.iter().map(|s| s.bpi).sum::<f64>() / m as f64,
        }];
        let mut strategies = vec![SolveStrategy::Scg];
        strategies.extend(self.config.strategies.iter().map(|&k| SolveStrategy::Baseline(k)));
        let mut scg_record = None;
        for s in strategies {
            let record = instance.record(&self.solve_plan(&instance, &db, s)?);
            log::info!("{s}: F = {:.3}, BPI = {:.3}", record.value, record.bpi);
            rows.push(CompareRow { strategy: s.name(), f: record.value, bpi: record.bpi });
            if s == SolveStrategy::Scg {
                scg_record = Some(record);
            }
        }
        let two = scg_record.expect("SCG always runs");
        let one = instance.record(&self.solve_plan(&instance, &db, SolveStrategy::OneStage)?);
        let mut stages: Vec<StageRow> = (0..m)
            .map(|i| StageRow {
                state: (i + 1).to_string(),
                one_stage_f: one.states[i].f,
                one_stage_bpi: one.states[i].bpi,
                two_stage_f: two.states[i].f,
                two_stage_bpi: two.states[i].bpi,
                two_stage_lines: join_lines(&two.schedules[i]),
            })
            .collect();
        stages.push(StageRow {
            state: "mean".into(),
            one_stage_f: one.value,
            one_stage_bpi: one.bpi,
            two_stage_f: two.value,
            two_stage_bpi: two.bpi,
            two_stage_lines: String::new(),
        });
        write_csv(&self.output("compare.csv")?, &rows)?;
        write_csv(&self.output("stages.csv")?, &stages)?;
        Ok((rows, stages))
    }

    pub fn sweep_alpha(&self) -> Result<Vec<AlphaRow>, ExperimentError> {
        let db = self.load_database()?;
        self.config
            .alphas
            .iter()
            .map(|&alpha| {
                let instance = self.instance(&db, alpha, self.config.k_c2.clone())?;
                let record = instance.record(&solve_scg(&instance.problem, &instance.decomposition));
                log::info!("alpha {alpha}: F = {:.3}, RiskW = {:.3}", record.value, record.risk);
                Ok(AlphaRow { alpha, f: record.value, risk: record.risk, bpi: record.bpi })
            })
            .collect()
    }

    pub fn sweep_partition(&self) -> Result<Vec<PartitionRow>, ExperimentError> {
        let db = self.load_database()?;
        let mut instance = self.instance(&db, self.config.risk.alpha, self.config.k_c2.clone())?;
        let mut rows = Vec::new();
        for &size in &self.config.partition_sizes {
            let block = instance.first_block(&self.network, &Partition::Size(size))?;
            instance.set_first_block(block);
            let plan = solve_scg(&instance.problem, &instance.decomposition);
            let report = guarantee_report(
                &plan,
                &instance.problem,
                &instance.decomposition,
                self.config.guarantee_mode,
                DEFAULT_TSSO_BUDGET,
            )?;
            rows.push(PartitionRow {
                s_l1: size,
                f: plan.value,
                kappa_f1: report.kappa_f1,
                pure_guarantee: report.pure,
                error_term: report.error,
                guarantee: report.certified,
            });
        }
        Ok(rows)
    }

    pub fn sweep_load(&self) -> Result<Vec<LoadRow>, ExperimentError> {
        let mut rows = Vec::new();
        for &ratio in &self.config.load_ratios {
            let db = self.generate(ratio)?;
            let instance = self.instance(&db, self.config.risk.alpha, self.config.k_c2.clone())?;
            for s in [SolveStrategy::OneStage, SolveStrategy::Scg, SolveStrategy::Flexible] {
                let plan = self.solve_plan(&instance, &db, s)?;
                let record = instance.record(&plan);
                let model = if s == SolveStrategy::Scg { "two-stage".to_string() } else { s.name() };
                rows.push(LoadRow { load_ratio: ratio, model, f: record.value, bpi: record.bpi });
            }
        }
        Ok(rows)
    }

    pub fn sweep_surface(&self) -> Vec<SurfaceRow> {
        guarantee_table(&self.config.surface_kappas, &self.config.surface_ps)
            .into_iter()
            .map(|r| SurfaceRow { kappa: r.kappa, p: r.p, scg: r.scg, ls: r.ls, rg: r.rg, gpg: r.gpg, gcg: r.gcg })
            .collect()
    }

    /// Runs one sweep and writes `sweep_<axis>.csv`.
    pub fn cmd_sweep(&self, axis: SweepAxis) -> Result<PathBuf, ExperimentError> {
        let path = self.output(&format!("sweep_{}.csv", axis.name()))?;
        match axis {
            SweepAxis::Alpha => write_csv(&path, &self.sweep_alpha()?)?,
            SweepAxis::Partition => write_csv(&path, &self.sweep_partition()?)?,
            SweepAxis::Load => write_csv(&path, &self.sweep_load()?)?,
            SweepAxis::GuaranteeSurface => write_csv(&path, &self.sweep_surface())?,
        }
        Ok(path)
    }

    /// Service life of the given plan files; defaults to the SCG and
    /// one-stage plans in the output directory.
    pub fn cmd_service_life(&self, plans: &[PathBuf]) -> Result<Vec<ServiceLifeRow>, ExperimentError> {
        let defaults = [
            self.config.output_dir.join("plan_scg.json"),
            self.config.output_dir.join("plan_one-stage.json"),
        ];
        let plans: Vec<PathBuf> = if plans.is_empty() { defaults.to_vec() } else { plans.to_vec() };
        let durations = self.config.durations();
        let mut rows = Vec::new();
        for path in &plans {
            let record = PlanRecord::read(path)?;
            rows.extend(service_life(
                &record.strategy,
                &record.placement,
                &record.schedules,
                &durations,
                self.config.lifetime_years,
                &self.config.horizon_years,
            )?);
        }
        write_csv(&self.output("service_life.csv")?, &rows)?;
        Ok(rows)
    }
}
