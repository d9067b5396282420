//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::process::{Command, ExitCode};
use std::time::Instant;

use metaedge::baselines::{place, BaselineConfig, Scheme};
use metaedge::bench::{oracle_instance, run_sweep, Experiment, ExperimentResult, SchemeId, SweepSpec};
use metaedge::channel::{shannon_rate, sinr, transmit_power, ChannelSample, RadioParams};
use metaedge::evaluator::{Evaluator, Layout};
use metaedge::ilp::{export_lp, IlpModel};
use metaedge::instance::{generate, GeneratorParams};
use metaedge::solver::{random_assignment, solve_enumerate, solve_exact, Budget, SolveStatus};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const MUS: [f64; 5] = [0.0, 0.2, 0.5, 0.8, 1.0];
const BASELINES: [SchemeId; 3] = [SchemeId::RandS, SchemeId::Cfs, SchemeId::Util];

struct Report {
    failed: usize,
}

impl Report {
    fn line(&mut self, id: u32, name: &str, passed: bool, detail: String) {
        if !passed {
            self.failed += 1;
        }
        println!("{} [{id}] {name}: {detail}", if passed { "PASS" } else { "FAIL" });
    }
}

fn nondecreasing(xs: &[f64], tol: f64) -> bool {
    xs.windows(2).all(|w| w[1] >= w[0] - tol)
}

fn all_some(xs: Vec<Option<f64>>) -> Option<Vec<f64>> {
    xs.into_iter().collect()
}

fn fmt(xs: &[f64], digits: usize) -> String {
    xs.iter().map(|x| format!("{x:.digits$}")).collect::<Vec<_>>().join(" ")
}

fn oracle_equivalence(rep: &mut Report) {
    let started = Instant::now();
    let mut bad = Vec::new();
    let n = 24;
    for seed in 0..n {
        let inst = oracle_instance(seed);
        let mu = [0.0, 0.3, 0.5, 0.7, 1.0][seed as usize % 5];
        let e = solve_enumerate(&inst, mu).expect("desk instances fit the enumeration limit");
        let x = solve_exact(&IlpModel::build(&inst, mu).unwrap(), &Budget::default());
        let same = match (e.objective, x.objective) {
            (Some(a), Some(b)) => (a - b).abs() <= 1e-9,
            (None, None) => true,
            _ => false,
        };
        if !same || e.status != x.status {
            bad.push(seed);
        }
    }
    let secs = started.elapsed().as_secs_f64();
    rep.line(
        1,
        "oracle equivalence",
        bad.is_empty() && secs <= 60.0,
        format!("{n} desk instances, mismatches {bad:?}, {secs:.2} s"),
    );
}

fn linearization(rep: &mut Report) {
    let mut checked = 0;
    let mut worst: f64 = 0.0;
    let mut product_mismatch = 0;
    let mut row_violations = 0;
    for seed in 0..12u64 {
        let p = if seed % 2 == 0 {
            GeneratorParams::desk(2 + seed as usize % 3)
        } else {
            GeneratorParams { n_ecs: 3, n_requests: 5, ..GeneratorParams::default() }
        };
        let inst = generate(100 + seed, &p).unwrap();
        let mu = seed as f64 / 11.0;
        let model = IlpModel::build(&inst, mu).unwrap();
        let ev = Evaluator::<f64>::new(&inst).with_mu(mu);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..100 {
            let Some(a) = random_assignment(&inst, &model.layout, &mut rng, 200) else {
                continue;
            };
            checked += 1;
            let point = model.encode(&a);
            row_violations += model.violated_rows(&point, 1e-9).len();
            let want = ev.objective_unchecked(&a).unwrap();
            worst = worst.max((model.objective_at(&point) - want).abs() / want.abs().max(1e-12));
            for r in 0..inst.n_requests() {
                let (j, g) = (a.matching_ec(r).unwrap(), a.rate_index(r).unwrap());
                product_mismatch += usize::from(ev.matching_delay_ms(r, j, &a) != ev.matching_delay_linear_ms(r, &a));
                product_mismatch += usize::from(ev.wireless_delay_ms(r, g, &a) != ev.wireless_delay_linear_ms(r, &a));
            }
        }
    }
    rep.line(
        2,
        "linearization consistency",
        checked >= 1000 && worst <= 1e-9 && product_mismatch == 0 && row_violations == 0,
        format!(
            "{checked} assignments on 12 instances, worst relative gap {worst:.2e}, \
             product/linear mismatches {product_mismatch}, violated rows {row_violations}"
        ),
    );
}

fn sweep(experiment: Experiment, values: Vec<f64>, seeds: u64, mu: Option<f64>) -> ExperimentResult {
    let mut spec = SweepSpec::new(experiment, values, (0..seeds).collect());
    spec.mu = mu;
    run_sweep(&spec).expect("valid sweep")
}

/// Criterion 3 over sweep rows: Optim never loses where every baseline ran.
fn dominance_violations(res: &ExperimentResult) -> (usize, usize) {
    let (mut compared, mut violations) = (0, 0);
    for value in &res.spec.values {
        for seed in &res.spec.seeds {
            let rows: Vec<_> = res.rows.iter().filter(|r| r.value == *value && r.seed == *seed).collect();
            let optim = rows.iter().find(|r| r.scheme == SchemeId::Optim).and_then(|r| r.objective());
            let base: Option<Vec<f64>> =
                rows.iter().filter(|r| r.scheme != SchemeId::Optim).map(|r| r.objective()).collect();
            if let (Some(o), Some(base)) = (optim, base) {
                compared += 1;
                violations += usize::from(base.iter().any(|&b| o > b + 1e-9));
            }
        }
    }
    (compared, violations)
}

fn desk_dominance() -> (usize, usize, usize) {
    let (mut compared, mut violations, mut audits) = (0, 0, 0);
    for seed in 0..20 {
        let inst = oracle_instance(seed);
        let mu = inst.constants.mu;
        let layout = Layout::new(&inst);
        let ev = Evaluator::<f64>::new(&inst).with_mu(mu);
        let x = solve_exact(&IlpModel::build(&inst, mu).unwrap(), &Budget::default());
        let Some(a) = x.assignment.as_ref() else { continue };
        audits += a.audit(&inst, &layout).len();
        let base: Vec<_> =
            Scheme::ALL.iter().map(|&s| place(&inst, mu, &BaselineConfig { seed, ..BaselineConfig::new(s) })).collect();
        for b in base.iter().flatten() {
            audits += b.audit(&inst, &layout).len();
        }
        if base.iter().all(|b| b.is_ok()) {
            compared += 1;
            let o = x.objective.unwrap();
            violations += usize::from(base.iter().flatten().any(|b| o > ev.objective_unchecked(b).unwrap() + 1e-9));
        }
    }
    (compared, violations, audits)
}

fn channel_math(rep: &mut Report) {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let params = RadioParams {
            bandwidth_hz: rng.random_range(0.5e6..20e6),
            noise_w: 10f64.powf(rng.random_range(-13.0..-9.0)),
            pathloss_exp: rng.random_range(2.0..4.5),
            bs_power_w: rng.random_range(0.01..1.0),
        };
        let rate = rng.random_range(0.1e6..30e6);
        let gain = rng.random_range(0.05..3.0);
        let dist = rng.random_range(5.0..300.0);
        let interference = 10f64.powf(rng.random_range(-14.0..-9.0));
        let p = transmit_power(rate, &params, gain, dist, interference).unwrap();
        let back = shannon_rate(params.bandwidth_hz, sinr(p, gain, dist, &params, interference).unwrap());
        worst = worst.max((back - rate).abs() / rate);
    }
    let n = 100_000;
    let mean = (0..n).map(|_| ChannelSample::draw(&mut rng).gain().powi(2)).sum::<f64>() / n as f64;
    rep.line(
        7,
        "channel math",
        worst <= 1e-9 && (0.98..=1.02).contains(&mean),
        format!("round-trip worst relative error {worst:.2e} over 1000 draws, mean H^2 {mean:.4} over {n} draws"),
    );
}

fn lp_export(rep: &mut Report) {
    let inst = oracle_instance(5);
    let mu = 0.5;
    let model = IlpModel::build(&inst, mu).unwrap();
    let exact = solve_exact(&model, &Budget::default());
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.lp");
    std::fs::write(&path, export_lp(&model)).unwrap();
    let script = "import sys, highspy\n\
                  h = highspy.Highs()\n\
                  h.setOptionValue('output_flag', False)\n\
                  h.readModel(sys.argv[1])\n\
                  h.run()\n\
                  print(h.modelStatusToString(h.getModelStatus()))\n\
                  print(repr(h.getInfo().objective_function_value))\n";
    let out = Command::new("python3").arg("-c").arg(script).arg(&path).output();
    let text = match out {
        Ok(o) if o.status.success() => String::from_utf8_lossy(&o.stdout).to_string(),
        _ => {
            println!("SKIP [9] LP export: no external MILP solver (python3 + highspy) available");
            return;
        }
    };
    let mut lines = text.lines();
    let status = lines.next().unwrap_or_default().to_string();
    let external: Option<f64> = lines.next().and_then(|l| l.trim().parse().ok());
    let ours = exact.objective.unwrap();
    let ok = exact.status == SolveStatus::Optimal
        && status == "Optimal"
        && external.is_some_and(|e| (e - ours).abs() <= 1e-6);
    rep.line(9, "LP export vs external solver", ok, format!("HiGHS {status} {external:?}, branch-and-bound {ours}"));
}

fn main() -> ExitCode {
    let started = Instant::now();
    let mut rep = Report { failed: 0 };

    oracle_equivalence(&mut rep);
    linearization(&mut rep);

    let t = Instant::now();
    let mu_sweep = sweep(Experiment::MuSweep, MUS.to_vec(), 5, None);
    let mu_secs = t.elapsed().as_secs_f64();
    let no_mob = sweep(Experiment::NoMobility, vec![1.0], 10, Some(1.0));

    let (c1, v1) = dominance_violations(&mu_sweep);
    let (c2, v2) = dominance_violations(&no_mob);
    let (c3, v3, desk_audits) = desk_dominance();
    rep.line(
        3,
        "dominance",
        v1 + v2 + v3 == 0 && c1 + c2 + c3 > 0,
        format!("{} instances with all baselines feasible, {} violations", c1 + c2 + c3, v1 + v2 + v3),
    );

    let ssim = all_some(mu_sweep.series(SchemeId::Optim, "mean_ssim"));
    let power = all_some(mu_sweep.series(SchemeId::Optim, "power_w"));
    let ok4 = match (&ssim, &power) {
        (Some(s), Some(p)) => {
            nondecreasing(s, 1e-12)
                && (s[0] - 0.958).abs() <= 0.02
                && (s[4] - 0.992).abs() <= 0.02
                && nondecreasing(p, 1e-12)
                && mu_secs <= 600.0
        }
        _ => false,
    };
    rep.line(
        4,
        "SSIM and power trends in mu",
        ok4,
        format!(
            "mean SSIM [{}], mean power W [{}], {mu_secs:.1} s",
            fmt(ssim.as_deref().unwrap_or_default(), 4),
            fmt(power.as_deref().unwrap_or_default(), 3)
        ),
    );

    let optim = all_some(mu_sweep.series(SchemeId::Optim, "delay_ms"));
    let cfs = all_some(mu_sweep.series(SchemeId::Cfs, "delay_ms"));
    let ok5 = match (&optim, &cfs) {
        (Some(o), Some(c)) => o.windows(2).all(|w| w[1] <= w[0] + 1e-12) && o.iter().zip(c).all(|(o, c)| o <= c),
        _ => false,
    };
    let gains: Vec<f64> = match (&optim, &cfs) {
        (Some(o), Some(c)) => o.iter().zip(c).map(|(o, c)| 100.0 * (c - o) / c).collect(),
        _ => Vec::new(),
    };
    rep.line(
        5,
        "delay trend in mu",
        ok5,
        format!(
            "Optim delay ms [{}], CFS [{}], gain over CFS % [{}] (report only)",
            fmt(optim.as_deref().unwrap_or_default(), 2),
            fmt(cfs.as_deref().unwrap_or_default(), 2),
            fmt(&gains, 1)
        ),
    );

    let means: Vec<Option<f64>> = [SchemeId::Optim, SchemeId::Cfs, SchemeId::Util, SchemeId::RandS]
        .iter()
        .map(|&s| no_mob.series(s, "delay_ms")[0])
        .collect();
    let ok6 = match means[..] {
        [Some(o), Some(c), Some(u), Some(r)] => o <= c && o <= u && o < r,
        _ => false,
    };
    rep.line(
        6,
        "no-mobility ordering",
        ok6,
        format!(
            "mean delay ms over 10 seeds: optim {:.2} cfs {:.2} util {:.2} rands {:.2} (absolute values report only)",
            means[0].unwrap_or(f64::NAN),
            means[1].unwrap_or(f64::NAN),
            means[2].unwrap_or(f64::NAN),
            means[3].unwrap_or(f64::NAN)
        ),
    );

    channel_math(&mut rep);

    let sweep_audits = mu_sweep.audit_failures().len() + no_mob.audit_failures().len();
    let rows = mu_sweep.rows.len() + no_mob.rows.len();
    let failed_baselines =
        mu_sweep.rows.iter().chain(&no_mob.rows).filter(|r| BASELINES.contains(&r.scheme) && !r.ok()).count();
    rep.line(
        8,
        "feasibility audit",
        sweep_audits + desk_audits == 0,
        format!(
            "{rows} sweep rows plus desk runs, {} audit failures ({failed_baselines} baseline rows produced no assignment)",
            sweep_audits + desk_audits
        ),
    );

    lp_export(&mut rep);

    println!("{} criteria failed, {:.1} s", rep.failed, started.elapsed().as_secs_f64());
    if rep.failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
