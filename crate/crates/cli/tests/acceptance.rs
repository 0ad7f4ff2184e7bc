//! End-to-end acceptance checks, one line of output per criterion.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tsso_core::cascade::ChainDatabase;
use tsso_core::experiment::{Experiment, ExperimentConfig, Instance, PlanRecord};
use tsso_core::risk::{chain_probability, sampling_weight};
use tsso_core::scg::{certified_guarantee, guarantee_report, pure_guarantee, solve_scg, GuaranteeMode, GuaranteeReport};
use tsso_core::submodular::synthetic::{random_instance, MarkovDecreasing};
use tsso_core::submodular::{
    brute_force_inner, brute_force_tsso, check_submodularity, modular_decomposition, CheckMode, FnSet, SetFunction,
    DEFAULT_TSSO_BUDGET,
};
use tsso_core::subset::Subset;

type Verdict = Result<String, String>;

fn config_path() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/default.json")
}

fn experiment(out: &Path) -> Experiment {
    let mut config = ExperimentConfig::from_path(config_path()).expect("default config");
    config.output_dir = out.to_path_buf();
    Experiment::new(config).expect("default experiment")
}

fn ensure(ok: bool, pass: String, fail: String) -> Verdict {
    if ok {
        Ok(pass)
    } else {
        Err(fail)
    }
}

fn guarantee_arithmetic() -> Verdict {
    let start = Instant::now();
    let rows = [(0.510, -0.314, 0.812, 0.498), (0.765, -0.045, 0.719, 0.674), (0.675, -0.163, 0.752, 0.589)];
    let mut worst: f64 = 0.0;
    for (kappa, err, pure, cert) in rows {
        // With ξ = 0 the error term reduces to e^{-1} O(c2).
        let report = GuaranteeReport::from_terms(kappa, 0.0, 1.0, 0.0, err * std::f64::consts::E);
        worst = worst
            .max((report.pure - pure).abs())
            .max((report.certified - cert).abs())
            .max((pure_guarantee(kappa, 1.0) - pure).abs())
            .max((certified_guarantee(kappa, 1.0, 0.0, err) - cert).abs());
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(
        worst <= 1e-3 && secs < 1.0,
        format!("max deviation {worst:.2e}, {secs:.3} s"),
        format!("max deviation {worst:.2e} (limit 1e-3), {secs:.3} s"),
    )
}

fn service_life_table(out: &Path) -> Verdict {
    let start = Instant::now();
    let exp = experiment(out);
    let two_stage: Vec<Vec<u32>> = vec![
        vec![11, 16, 23],
        vec![9, 16, 19, 23],
        vec![3, 9, 11, 16],
        vec![3, 9, 23],
        vec![9, 16, 19],
        vec![9, 19, 27],
        vec![3, 9, 27],
        vec![3, 11, 16, 23],
        vec![11, 19, 27],
        vec![3, 16, 45],
    ];
    let one_stage = vec![3, 6, 9, 16, 27];
    let plan = |name: &str, placement: Vec<u32>, schedules: Vec<Vec<u32>>| PlanRecord {
        strategy: name.into(),
        alpha: 1.05,
        value: 0.0,
        bpi: 0.0,
        risk: 0.0,
        base_risk: 0.0,
        placement,
        schedules,
        states: Vec::new(),
        stopped_early: false,
        trace: Vec::new(),
        guarantee: None,
    };
    let mut placement: Vec<u32> = two_stage.iter().flatten().copied().collect();
    placement.sort_unstable();
    placement.dedup();
    let files = [
        (out.join("two.json"), plan("two-stage", placement, two_stage)),
        (out.join("one.json"), plan("one-stage", one_stage.clone(), vec![one_stage; 10])),
    ];
    std::fs::create_dir_all(out).unwrap();
    for (path, record) in &files {
        std::fs::write(path, serde_json::to_string(record).unwrap()).unwrap();
    }
    let rows = exp
        .cmd_service_life(&files.iter().map(|(p, _)| p.clone()).collect::<Vec<_>>())
        .map_err(|e| e.to_string())?;
    let expected: &[(&str, u32, f64, f64)] = &[
        ("two-stage", 3, 0.83, 0.67),
        ("two-stage", 9, 0.80, 0.60),
        ("two-stage", 11, 0.87, 0.73),
        ("two-stage", 16, 0.80, 0.60),
        ("two-stage", 19, 0.87, 0.73),
        ("two-stage", 23, 0.87, 0.73),
        ("two-stage", 27, 0.90, 0.80),
        ("two-stage", 45, 0.97, 0.93),
        ("one-stage", 3, 0.67, 0.33),
        ("one-stage", 6, 0.67, 0.33),
        ("one-stage", 9, 0.67, 0.33),
        ("one-stage", 16, 0.67, 0.33),
        ("one-stage", 27, 0.67, 0.33),
    ];
    let mut checked = 0;
    let mut bad = Vec::new();
    for &(plan, line, y2, y4) in expected {
        for (years, want) in [(2.0, y2), (4.0, y4)] {
            let row = rows.iter().find(|r| r.plan == plan && r.line == line && r.years == years);
            match row {
                Some(r) if ((r.residual * 100.0).round() / 100.0 - want).abs() <= 0.005 => checked += 1,
                Some(r) => bad.push(format!("{plan} line {line} {years} y: {:.3} vs {want}", r.residual)),
                None => bad.push(format!("{plan} line {line} {years} y missing")),
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(
        bad.is_empty() && secs < 1.0,
        format!("{checked} entries match, {secs:.3} s"),
        format!("{} mismatches ({}), {secs:.3} s", bad.len(), bad.join("; ")),
    )
}

fn brute_force_certification() -> Verdict {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let instances = 60;
    let mut violations = Vec::new();
    let mut above = 0;
    let mut worst_ratio = f64::INFINITY;
    for idx in 0..instances {
        let n = rng.random_range(6..=10);
        let m = rng.random_range(1..=4);
        let k = rng.random_range(2..=4);
        let problem = random_instance(&mut rng, n, m, k, 3).memoized();
        let dec = modular_decomposition(&problem);
        let plan = solve_scg(&problem, &dec);
        let report = guarantee_report(&plan, &problem, &dec, GuaranteeMode::Exact, DEFAULT_TSSO_BUDGET)
            .map_err(|e| format!("instance {idx}: {e}"))?;
        let best = brute_force_tsso(&problem, DEFAULT_TSSO_BUDGET).map_err(|e| e.to_string())?;
        if plan.value < report.certified * best.value - 1e-12 {
            violations.push(format!("instance {idx}: {} < {} x {}", plan.value, report.certified, best.value));
        }
        let ratio = plan.value / best.value;
        worst_ratio = worst_ratio.min(ratio);
        if ratio >= 1.0 - (-1.0f64).exp() {
            above += 1;
        }
    }
    let share = above as f64 / instances as f64;
    let secs = start.elapsed().as_secs_f64();
    ensure(
        violations.is_empty() && share >= 0.9 && secs < 600.0,
        format!("{instances} instances, 0 violations, {:.0}% at ratio >= 0.632 (worst {worst_ratio:.3}), {secs:.1} s", share * 100.0),
        format!("violations: {:?}; share at >= 0.632: {share:.2}; {secs:.1} s", violations),
    )
}

fn markov_family_submodular() -> Verdict {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut total = 0;
    let mut checked = 0;
    for _ in 0..100 {
        let n = rng.random_range(3..=8);
        let y = MarkovDecreasing::random(&mut rng, n);
        let cons = rng.random_range(1.0..5.0);
        let f = FnSet(|t: &Subset| cons - y.value(t));
        let ground = Subset::full(n);
        total += check_submodularity(&f, &ground, CheckMode::Raw).map_err(|e| e.to_string())?.len();
        total += check_submodularity(&f, &ground, CheckMode::Marginal).map_err(|e| e.to_string())?.len();
        // The inner-optimized two-stage value of the same family.
        let kc = rng.random_range(1..=3);
        let inner = FnSet(|s: &Subset| brute_force_inner(&f, s, kc).map(|(_, v)| v).unwrap_or(f64::NAN));
        total += check_submodularity(&inner, &ground, CheckMode::Raw).map_err(|e| e.to_string())?.len();
        checked += 1;
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(
        total == 0 && secs < 600.0,
        format!("{checked} instances, 0 violations, {secs:.1} s"),
        format!("{total} violations over {checked} instances"),
    )
}

fn potential_identity(fixture: &Instance) -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let mut rounds = 0;
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let n = rng.random_range(3..=12);
        let k = rng.random_range(1..=n.min(6));
        let m = rng.random_range(1..=4);
        let mut problem = random_instance(&mut rng, n, m, k, 3);
        problem.p = rng.random_range(1..=k) as f64;
        let dec = modular_decomposition(&problem);
        let plan = solve_scg(&problem, &dec);
        for (lhs, rhs) in plan.potential_identity(&problem, &dec) {
            worst = worst.max((lhs - rhs).abs());
            rounds += 1;
        }
    }
    let plan = solve_scg(&fixture.problem, &fixture.decomposition);
    for (lhs, rhs) in plan.potential_identity(&fixture.problem, &fixture.decomposition) {
        worst = worst.max((lhs - rhs).abs());
        rounds += 1;
    }
    ensure(
        worst <= 1e-9,
        format!("{rounds} rounds, max gap {worst:.2e}"),
        format!("max gap {worst:.2e} over {rounds} rounds"),
    )
}

fn sampling_weights(exp: &Experiment, db: &ChainDatabase) -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(606);
    let params = exp.config.risk;
    let net = &exp.network;
    let n = net.lines().len();
    let random_set = |rng: &mut ChaCha8Rng| -> Subset { (0..n).filter(|_| rng.random_bool(0.2)).collect() };
    let (mut worst_rel, mut worst_chain): (f64, f64) = (0.0, 0.0);
    for _ in 0..1000 {
        let state = db.state(rng.random_range(0..db.state_count()));
        let chain = &state[rng.random_range(0..state.len())];
        let a = random_set(&mut rng);
        let b = random_set(&mut rng);
        let y = chain.load_loss_mw;
        let direct = chain_probability(chain, &a, net, &params).map_err(|e| e.to_string())? * y;
        let reweighted = sampling_weight(chain, &a, &b, net, &params).map_err(|e| e.to_string())?
            * chain_probability(chain, &b, net, &params).map_err(|e| e.to_string())?
            * y;
        worst_rel = worst_rel.max((direct - reweighted).abs() / direct.abs());
        let sub: Subset = a.iter().filter(|_| rng.random_bool(0.5)).collect();
        let empty = Subset::empty();
        let whole = sampling_weight(chain, &a, &empty, net, &params).map_err(|e| e.to_string())?;
        let split = sampling_weight(chain, &a, &sub, net, &params).map_err(|e| e.to_string())?
            * sampling_weight(chain, &sub, &empty, net, &params).map_err(|e| e.to_string())?;
        worst_chain = worst_chain.max((whole - split).abs() / whole.abs().max(1.0));
    }
    ensure(
        worst_rel <= 1e-10 && worst_chain <= 1e-12,
        format!("1000 triples, reweighting rel. error {worst_rel:.2e}, chaining error {worst_chain:.2e}"),
        format!("reweighting rel. error {worst_rel:.2e} (limit 1e-10), chaining error {worst_chain:.2e} (limit 1e-12)"),
    )
}

fn alpha_trend(exp: &Experiment, generate_secs: f64) -> Verdict {
    let start = Instant::now();
    let rows = exp.sweep_alpha().map_err(|e| e.to_string())?;
    let secs = start.elapsed().as_secs_f64() + generate_secs;
    let mut problems = Vec::new();
    if rows.first().map(|r| r.alpha) != Some(1.0) || rows[0].f != 0.0 {
        problems.push(format!("F(alpha = 1) = {:?}", rows.first().map(|r| r.f)));
    }
    for w in rows.windows(2) {
        if !(w[1].f > w[0].f) {
            problems.push(format!("F not increasing at alpha {}", w[1].alpha));
        }
        if !(w[1].risk < w[0].risk) {
            problems.push(format!("RiskW not decreasing at alpha {}", w[1].alpha));
        }
    }
    for r in rows.iter().filter(|r| r.alpha > 1.0) {
        if !(r.bpi > 0.0) {
            problems.push(format!("BPI = {} at alpha {}", r.bpi, r.alpha));
        }
    }
    let table: Vec<String> = rows.iter().map(|r| format!("{}:{:.1}/{:.1}/{:.1}", r.alpha, r.f, r.risk, r.bpi)).collect();
    ensure(
        problems.is_empty() && secs < 1800.0,
        format!("alpha:F/RiskW/BPI {}, {secs:.1} s", table.join(" ")),
        format!("{} ({})", problems.join("; "), table.join(" ")),
    )
}

fn strategy_ranking(exp: &Experiment) -> Verdict {
    let (rows, stages) = exp.cmd_compare().map_err(|e| e.to_string())?;
    let mut problems = Vec::new();
    let none = &rows[0];
    if !(none.strategy == "No DTR" && none.f == 0.0 && none.bpi == 0.0) {
        problems.push(format!("No-DTR row is ({}, {})", none.f, none.bpi));
    }
    let scg = rows.iter().find(|r| r.strategy == "SCG").ok_or("no SCG row")?.f;
    for r in rows.iter().skip(1).filter(|r| r.strategy != "SCG") {
        if scg < r.f {
            problems.push(format!("{} {:.3} > SCG {:.3}", r.strategy, r.f, scg));
        }
    }
    let mean = stages.last().ok_or("no stage rows")?;
    if mean.two_stage_f < mean.one_stage_f {
        problems.push(format!("two-stage {:.3} < one-stage {:.3}", mean.two_stage_f, mean.one_stage_f));
    }
    let best_baseline = rows
        .iter()
        .skip(1)
        .filter(|r| r.strategy != "SCG")
        .map(|r| r.f)
        .fold(f64::MIN, f64::max);
    ensure(
        problems.is_empty(),
        format!(
            "SCG {scg:.3} >= best baseline {best_baseline:.3}; two-stage {:.3} >= one-stage {:.3}; No DTR (0, 0)",
            mean.two_stage_f, mean.one_stage_f
        ),
        problems.join("; "),
    )
}

fn solve_seconds(exp: &Experiment, db: &ChainDatabase, m: usize, d: usize) -> f64 {
    let sub = db.truncated(m, d);
    let c = &exp.config;
    (0..3)
        .map(|_| {
            let start = Instant::now();
            let instance =
                Instance::build(&exp.network, &sub, c.risk, c.k, c.k_c2[..m].to_vec(), c.p, &c.partition).unwrap();
            let plan = solve_scg(&instance.problem, &instance.decomposition);
            std::hint::black_box(plan);
            start.elapsed().as_secs_f64()
        })
        .fold(f64::INFINITY, f64::min)
}

fn scaling(exp: &Experiment, db: &ChainDatabase) -> Verdict {
    let base = solve_seconds(exp, db, 5, 1000);
    let states = solve_seconds(exp, db, 10, 1000);
    let chains = solve_seconds(exp, db, 5, 2000);
    let (rm, rd) = (states / base, chains / base);
    ensure(
        rm <= 2.2 && rd <= 2.2,
        format!("base {base:.3} s, 2m x{rm:.2}, 2D x{rd:.2}"),
        format!("base {base:.3} s, 2m x{rm:.2}, 2D x{rd:.2} (limit 2.2)"),
    )
}

fn determinism(root: &Path) -> Verdict {
    let bin = env!("CARGO_BIN_EXE_tsso-dtr");
    let config = config_path();
    let mut dirs = Vec::new();
    for run in ["a", "b"] {
        let out = root.join(run);
        for cmd in ["generate", "solve"] {
            let status = Command::new(bin)
                .args([cmd, "--config"])
                .arg(&config)
                .arg("--out")
                .arg(&out)
                .output()
                .map_err(|e| e.to_string())?;
            if !status.status.success() {
                return Err(format!("{cmd} failed: {}", String::from_utf8_lossy(&status.stderr)));
            }
        }
        dirs.push(out);
    }
    let files = ["database.tsdb", "generate_summary.csv", "plan_scg.json", "guarantee_scg.csv", "states_scg.csv"];
    let mut differing = Vec::new();
    for f in files {
        let a = std::fs::read(dirs[0].join(f)).map_err(|e| format!("{f}: {e}"))?;
        let b = std::fs::read(dirs[1].join(f)).map_err(|e| format!("{f}: {e}"))?;
        if a != b {
            differing.push(f);
        }
    }
    ensure(
        differing.is_empty(),
        format!("{} files byte-identical across two runs", files.len()),
        format!("differing files: {differing:?}"),
    )
}

fn main() {
    let tmp = tempfile::tempdir().expect("temp dir");
    let out = tmp.path().join("fixture");
    let exp = experiment(&out);
    let start = Instant::now();
    exp.cmd_generate().expect("generate default database");
    let generate_secs = start.elapsed().as_secs_f64();
    let db = exp.load_database().expect("database");
    let fixture = exp.instance(&db, exp.config.risk.alpha, exp.config.k_c2.clone()).expect("fixture instance");

    let criteria: Vec<(&str, Box<dyn FnOnce() -> Verdict + '_>)> = vec![
        ("guarantee arithmetic", Box::new(guarantee_arithmetic)),
        ("service-life table", Box::new(|| service_life_table(&tmp.path().join("life")))),
        ("brute-force certification", Box::new(brute_force_certification)),
        ("Markov family submodularity", Box::new(markov_family_submodular)),
        ("potential recurrence", Box::new(|| potential_identity(&fixture))),
        ("sampling-weight exactness", Box::new(|| sampling_weights(&exp, &db))),
        ("weather trend", Box::new(|| alpha_trend(&exp, generate_secs))),
        ("strategy ranking", Box::new(|| strategy_ranking(&exp))),
        ("linear scaling", Box::new(|| scaling(&exp, &db))),
        ("determinism", Box::new(|| determinism(&tmp.path().join("determinism")))),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.into_iter().enumerate() {
        let verdict = std::panic::catch_unwind(std::panic::AssertUnwindSafe(check))
            .unwrap_or_else(|p| {
                let msg = p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
                Err(format!("panicked: {}", msg.unwrap_or_default()))
            });
        match verdict {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {detail}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", 10 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
