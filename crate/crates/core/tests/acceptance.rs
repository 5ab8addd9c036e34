//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! The process exits non-zero only when a criterion cannot be evaluated at
//! all (an unexpected error). Set `ACCEPTANCE_STRICT=1` to also fail on any
//! FAIL line.

use std::sync::Arc;
use std::thread;
use std::time::Instant;

use oldroyd_dg::memory::{direct_sum, rectangle_rule};
use oldroyd_dg::stepper::discrete_energy;
use oldroyd_dg::study::run_mms;
use oldroyd_dg::{
    convergence_study, execute, verify_forms, ExactSolution, FormParams, KernelParams, MemoryAccumulator, RawConfig,
    Result, RunConfig, Scheme, SchemeParams, StudyReport, StudySpec, TriMesh,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const KERNEL: KernelParams = KernelParams { gamma: 0.1, eta: 0.1 };

struct Verdict {
    id: usize,
    name: &'static str,
    pass: bool,
    detail: String,
}

fn params(r: usize, tau: f64) -> Result<SchemeParams> {
    SchemeParams::new(1.0, KERNEL, tau, 1.0, FormParams::defaults_for(r))
}

fn within(x: f64, lo: f64, hi: f64) -> bool {
    (lo..=hi).contains(&x)
}

fn rates_line(rep: &StudyReport) -> String {
    let r = rep.final_rates().unwrap_or([f64::NAN; 3]);
    format!("rates u {:.3}, u_dG {:.3}, p {:.3}", r[0], r[1], r[2])
}

fn space_study(
    id: usize,
    name: &'static str,
    r: usize,
    ns: &[usize],
    tau: f64,
    bounds: [(f64, f64); 3],
) -> Result<Verdict> {
    let rep = convergence_study(&StudySpec::space(r, ns, tau, params(r, tau)?))?;
    let rates = rep.final_rates().unwrap_or([f64::NAN; 3]);
    let pass = rep.failure.is_none() && (0..3).all(|k| within(rates[k], bounds[k].0, bounds[k].1));
    Ok(Verdict { id, name, pass, detail: rates_line(&rep) })
}

fn criterion_1() -> Result<Verdict> {
    space_study(1, "space P1-P0, n 4..32, tau 2^-8", 1, &[4, 8, 16, 32], 1.0 / 256.0, [
        (1.8, 2.3),
        (0.85, 1.2),
        (0.85, 1.2),
    ])
}

/// Same final rung pair at a step fine enough that the temporal error no
/// longer masks the spatial one.
fn criterion_1_fine_step() -> Result<String> {
    let tau = 1.0 / 1024.0;
    let p = params(1, tau)?;
    let (a, b) = thread::scope(|s| {
        let a = s.spawn(|| run_mms(16, 1, p));
        let b = s.spawn(|| run_mms(32, 1, p));
        (a.join().expect("thread"), b.join().expect("thread"))
    });
    let (a, b) = (a?, b?);
    let rate = |x: f64, y: f64| (x / y).ln() / 2f64.ln();
    Ok(format!(
        "n 16 -> 32 at tau 2^-10: rates u {:.3}, u_dG {:.3}, p {:.3}",
        rate(a.u_l2, b.u_l2),
        rate(a.u_dg, b.u_dg),
        rate(a.p_l2, b.p_l2)
    ))
}

fn criterion_2() -> Result<Verdict> {
    space_study(2, "space P2-P1, n 2..16, tau 2^-9", 2, &[2, 4, 8, 16], 1.0 / 512.0, [
        (2.7, 3.2),
        (1.85, 2.2),
        (1.85, 2.2),
    ])
}

fn criterion_3() -> Result<Verdict> {
    let taus = [1.0 / 8.0, 1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0];
    let rep = convergence_study(&StudySpec::time(2, 64, &taus, params(2, taus[0])?))?;
    let rates = rep.final_rates().unwrap_or([f64::NAN; 3]);
    let pass = rep.failure.is_none() && rep.rows.len() >= 3 && rates[0] >= 1.5 && rates[2] >= 1.2;
    let detail = format!("{} rungs kept, {} dropped, {}", rep.rows.len(), rep.truncated, rates_line(&rep));
    Ok(Verdict { id: 3, name: "time P2-P1, n 64, tau 2^-3..2^-6", pass, detail })
}

fn criterion_4() -> Result<Verdict> {
    let rep = verify_forms(20240601, 200, 3)?;
    let pass = rep.all_passed() && rep.checks.iter().all(|c| c.samples >= 100);
    let failed: Vec<&str> = rep.checks.iter().filter(|c| !c.passed()).map(|c| c.name).collect();
    let detail = if failed.is_empty() {
        format!("{} invariants, {} samples each", rep.checks.len(), rep.checks[0].samples)
    } else {
        format!("failed: {}", failed.join(", "))
    };
    Ok(Verdict { id: 4, name: "structural invariants", pass, detail })
}

fn criterion_5() -> Result<Verdict> {
    let p = params(2, 1.0 / 32.0)?;
    let exact = ExactSolution::new(1.0, KERNEL);
    let mut scheme = Scheme::new(Arc::new(TriMesh::uniform(16)?), 2, p)?;
    let mut state = scheme.initialize(|x| exact.velocity(x, 0.0))?;
    let diags = scheme.run(&mut state, &|x, t| exact.forcing(x, t))?;
    let worst = diags.iter().map(|d| d.p_mean.abs()).fold(0.0, f64::max);
    Ok(Verdict {
        id: 5,
        name: "zero-mean pressure, n 16, r 2",
        pass: worst <= 1e-9 && diags.len() == 32,
        detail: format!("max |mean p| = {worst:.2e} over {} steps", diags.len()),
    })
}

fn criterion_6() -> Result<Verdict> {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let tau = 0.02;
    let mut acc = MemoryAccumulator::new(KERNEL, tau, 5)?;
    let mut history = Vec::new();
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let phi: Vec<f64> = (0..5).map(|_| rng.gen_range(-1.0..1.0)).collect();
        acc.push(&phi)?;
        history.push(phi);
        let direct = direct_sum(&KERNEL, tau, &history);
        for (a, b) in acc.q().iter().zip(&direct) {
            worst = worst.max((a - b).abs());
        }
    }
    let exact = KERNEL.linear_history_integral(1.0);
    let errs: Vec<f64> =
        [16, 32, 64, 128].iter().map(|&n| (rectangle_rule(&KERNEL, 1.0, n, |s| s + 1.0) - exact).abs()).collect();
    let ratios: Vec<f64> = errs.windows(2).map(|w| w[0] / w[1]).collect();
    let pass = worst <= 1e-12 && ratios.iter().all(|r| within(*r, 2.0 * 0.85, 2.0 * 1.15));
    Ok(Verdict {
        id: 6,
        name: "memory recursion and quadrature order",
        pass,
        detail: format!(
            "recursion error {worst:.1e}, error ratios {}",
            ratios.iter().map(|r| format!("{r:.3}")).collect::<Vec<_>>().join(" ")
        ),
    })
}

fn criterion_7() -> Result<Verdict> {
    let p = params(2, 0.01)?;
    let exact = ExactSolution::new(1.0, KERNEL);
    let mut scheme = Scheme::new(Arc::new(TriMesh::uniform(8)?), 2, p)?;
    let mut state = scheme.initialize(|x| exact.velocity(x, 0.0))?;
    let u0 = state.u.l2_norm();
    let diags = scheme.run(&mut state, &|_, _| [0.0, 0.0])?;
    let energy = discrete_energy(u0, &p, &diags);
    let peak = energy.iter().fold(0.0f64, |m, v| m.max(*v));
    Ok(Verdict {
        id: 7,
        name: "energy bounded without forcing",
        pass: diags.len() == 100 && peak <= 10.0 * energy[0],
        detail: format!("{} steps, peak/initial energy {:.4}", diags.len(), peak / energy[0]),
    })
}

fn criterion_8() -> Result<Verdict> {
    let configs = [
        "mode=run\nr=2\nn=4\ntau=1/16",
        "mode=study-space\nr=1\nn-ladder=2,4,8\ntau=1/16",
        "mode=verify-forms\nseed=7\nsamples=100",
    ];
    let mut same = 0;
    for text in configs {
        let cfg = RunConfig::resolve(&RawConfig::parse(text)?)?;
        let (a, b) = (execute(&cfg)?, execute(&cfg)?);
        if a.csv.as_bytes() == b.csv.as_bytes() {
            same += 1;
        }
    }
    Ok(Verdict {
        id: 8,
        name: "deterministic output",
        pass: same == configs.len(),
        detail: format!("{same} of {} configs reproduced byte for byte", configs.len()),
    })
}

type Job = fn() -> Result<Verdict>;

fn main() {
    let start = Instant::now();
    let jobs: [(usize, Job); 8] = [
        (1, criterion_1),
        (2, criterion_2),
        (3, criterion_3),
        (4, criterion_4),
        (5, criterion_5),
        (6, criterion_6),
        (7, criterion_7),
        (8, criterion_8),
    ];
    let (results, note) = thread::scope(|s| {
        let handles: Vec<_> = jobs.iter().map(|&(id, job)| (id, s.spawn(job))).collect();
        let note = s.spawn(criterion_1_fine_step);
        let results: Vec<(usize, Result<Verdict>)> =
            handles.into_iter().map(|(id, h)| (id, h.join().expect("criterion thread panicked"))).collect();
        (results, note.join().expect("thread panicked"))
    });

    let mut failed = 0;
    let mut errored = 0;
    for (id, res) in results {
        match res {
            Ok(v) => {
                println!("{} criterion {}: {} ({})", if v.pass { "PASS" } else { "FAIL" }, v.id, v.name, v.detail);
                if !v.pass {
                    failed += 1;
                }
            }
            Err(e) => {
                println!("FAIL criterion {id}: error: {e}");
                errored += 1;
            }
        }
    }
    match note {
        Ok(line) => println!("info criterion 1: {line}"),
        Err(e) => println!("info criterion 1: error: {e}"),
    }
    println!("{failed} failed, {errored} errored, {:.0} s", start.elapsed().as_secs_f64());

    let strict = std::env::var("ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    if errored > 0 || (strict && failed > 0) {
        std::process::exit(1);
    }
}
