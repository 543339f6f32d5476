//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on failure.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sqcka_cli::sweep::{threshold, write_figures, Slice, FIGURE_MODES};
use sqcka_core::attacks::{
    depolarizing_attack, depolarizing_backward_prob, depolarizing_forward_prob, depolarizing_gram,
    depolarizing_tables, eve_catalogue, eve_index, identity_attack, joint_az_analytic, p_ghz_analytic,
    random_table_attack, AnalyticAttack, DepolarizingParams, JointAzMode,
};
use sqcka_core::bits;
use sqcka_core::estimation::{
    alpha_aggregates, estimate_bob_disagreement, estimate_branch_norms, estimate_channel_conditionals,
    estimate_p_ghz, estimate_re_overlap_from_tallies,
};
use sqcka_core::keyrate::{
    conditional_entropy_from_branch_gram, depolarizing_entropy_lower, depolarizing_key_rate,
    depolarizing_lambda_star, exact_branch_gram, exact_entropy_oracle, pairing_maximize, plan_bound, BoundMode,
    PairingPlan, PairingStrategy,
};
use sqcka_core::protocol::{
    expand_theta_schedule, run_round_exact, run_session, ObservedStatistics, ProtocolParams, RoundStats,
};

const GRID: [f64; 4] = [0.0, 0.1, 0.3, 0.7];
const BOUND_SLACK: f64 = 1e-9;

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn e2s<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn a1_soundness() -> Outcome {
    let mut ghz = 0;
    let mut key_bits = 0;
    for n in 1..=3 {
        let schedule = expand_theta_schedule(format!("a1-{n}").as_bytes(), 1000, 200).map_err(e2s)?;
        let rec = run_session(&ProtocolParams::new(n).map_err(e2s)?, &identity_attack(n).map_err(e2s)?, &schedule, n as u64, 0.1)
            .map_err(e2s)?;
        ensure(rec.tallies.ghz_pass == rec.tallies.ghz_total, || format!("n={n}: a GHZ test failed"))?;
        ensure(rec.tallies.ghz_total > 0, || format!("n={n}: no GHZ tests ran"))?;
        for (j, key) in rec.raw_key_bobs.iter().enumerate() {
            ensure(key == &rec.raw_key_alice, || format!("n={n}: Bob {} disagrees with Alice", j + 1))?;
        }
        let disclosed_errors: u64 = (0..n)
            .map(|j| rec.tallies.sift_joint_counts.iter().enumerate().map(|(a, row)| {
                row.iter().enumerate().filter(|&(b, _)| bits::bit(b, j, n) as usize != a).map(|(_, &k)| k).sum::<u64>()
            }).sum::<u64>())
            .sum();
        ensure(disclosed_errors == 0, || format!("n={n}: disclosed rounds show errors"))?;
        ghz += rec.tallies.ghz_total;
        key_bits += rec.raw_key_alice.len();
    }
    Ok(format!("{ghz} GHZ tests all passed, {key_bits} raw-key bits with zero disagreements"))
}

fn a2_dilation() -> Outcome {
    let mut worst = 0.0f64;
    let mut note = |x: f64| worst = worst.max(x);
    for n in 1..=3 {
        let d = bits::dim(n);
        let params = ProtocolParams::new(n).map_err(e2s)?;
        for &q in &GRID {
            for &qt in &GRID {
                let p = DepolarizingParams::new(q, qt, n).map_err(e2s)?;
                let atk = depolarizing_attack(&p).map_err(e2s)?;
                let ctrl = run_round_exact(&params, &atk, 0).map_err(e2s)?;
                let sift = run_round_exact(&params, &atk, 1).map_err(e2s)?;
                let stats = ObservedStatistics::from_rounds(&ctrl, &sift).map_err(e2s)?;
                let RoundStats::Sift { joint_abc } = &sift.stats else { return Err("missing SIFT statistics".into()) };

                note((stats.p_ghz - p_ghz_analytic(&p)).abs());
                for a in 0..2u8 {
                    for b in 0..d {
                        let pab = stats.sift_joint_ab[a as usize][b];
                        note((2.0 * pab - depolarizing_forward_prob(b, a, &p)).abs());
                        if pab > 1e-12 {
                            for c in 0..d {
                                let cond = joint_abc[(a as usize * d + b) * d + c] / pab;
                                note((cond - depolarizing_backward_prob(c, b, &p)).abs());
                            }
                        }
                    }
                    for c in 0..d {
                        let corrected = joint_az_analytic(a, c, &p, JointAzMode::Corrected);
                        note((stats.sift_joint_ac[a as usize][c] - corrected).abs());
                    }
                }
                for b in 0..d {
                    let pb = 0.5 * (depolarizing_forward_prob(b, 0, &p) + depolarizing_forward_prob(b, 1, &p));
                    note((stats.p_b[b] - pb).abs());
                }
                let cat = eve_catalogue(&p);
                let g = exact_branch_gram(&atk).map_err(e2s)?;
                let (i0, i1) = (eve_index(n, 0, 0, 0), eve_index(n, 1, d - 1, d - 1));
                for a in 0..2 {
                    for b in 0..d {
                        for c in 0..d {
                            let k = eve_index(n, a, b, c);
                            note((g[(k, k)].re - cat.norm_of(a as u8, b, c, n)).abs());
                        }
                    }
                }
                note((g[(i0, i1)] - sqcka_core::qmath::Amplitude::new(cat.cross_overlap, 0.0)).norm());
                for i in 0..g.nrows() {
                    for j in 0..g.ncols() {
                        if i != j && !((i, j) == (i0, i1) || (i, j) == (i1, i0)) {
                            note(g[(i, j)].norm());
                        }
                    }
                }
            }
        }
    }
    ensure(worst <= 1e-10, || format!("largest deviation {worst:.3e} > 1e-10"))?;
    Ok(format!("48 (n, Q, Q̃) points, largest deviation {worst:.2e} ≤ 1e-10"))
}

fn permutations(d: usize) -> Vec<Vec<usize>> {
    if d == 1 {
        return vec![vec![0]];
    }
    let mut out = Vec::new();
    for p in permutations(d - 1) {
        for pos in 0..d {
            let mut q = p.clone();
            q.insert(pos, d - 1);
            out.push(q);
        }
    }
    out
}

/// Largest `bound − oracle` over every plan tried; exhaustive when `d ≤ 4`.
fn worst_plan_gap(an: &AnalyticAttack, oracle: f64) -> Result<(f64, usize), String> {
    let n = an.tables.n();
    let d = an.tables.dim();
    let mut worst = f64::NEG_INFINITY;
    let mut plans = 0;
    if d <= 4 {
        let perms = permutations(d);
        for p1 in &perms {
            for p2 in &perms {
                let plan = PairingPlan::new(p1.clone(), p2.clone(), PairingStrategy::Exhaustive).map_err(e2s)?;
                worst = worst.max(plan_bound(an, &plan).map_err(e2s)? - oracle);
                plans += 1;
            }
        }
    } else {
        worst = worst.max(plan_bound(an, &PairingPlan::identity(n)).map_err(e2s)? - oracle);
        let (_, v) = pairing_maximize(an, Some(PairingStrategy::GreedyTwoOpt)).map_err(e2s)?;
        worst = worst.max(v - oracle);
        plans += 2;
    }
    Ok((worst, plans))
}

fn a3_bound_soundness() -> Outcome {
    let mut worst = f64::NEG_INFINITY;
    let mut plans = 0;
    for n in 1..=3 {
        for &q in &GRID {
            for &qt in &GRID {
                let p = DepolarizingParams::new(q, qt, n).map_err(e2s)?;
                let atk = depolarizing_attack(&p).map_err(e2s)?;
                let oracle = conditional_entropy_from_branch_gram(&exact_branch_gram(&atk).map_err(e2s)?).map_err(e2s)?;
                for mode in [BoundMode::PaperLiteral, BoundMode::TheoremExact] {
                    worst = worst.max(depolarizing_entropy_lower(&p, mode).map_err(e2s)? - oracle);
                }
                let (w, k) = worst_plan_gap(atk.analytic().ok_or("depolarizing tables missing")?, oracle)?;
                worst = worst.max(w);
                plans += k;
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0xA3);
    for i in 0..100 {
        let r = random_table_attack(&mut rng, 1 + i % 2, 1 + i % 6).map_err(e2s)?;
        let oracle = exact_entropy_oracle(&r.attack).map_err(e2s)?;
        let (w, k) = worst_plan_gap(r.attack.analytic().ok_or("table form missing")?, oracle)?;
        worst = worst.max(w);
        plans += k;
    }
    ensure(worst <= BOUND_SLACK, || format!("a bound exceeds the oracle by {worst:.3e}"))?;
    let mut sat = 0.0f64;
    for n in 1..=3 {
        let atk = identity_attack(n).map_err(e2s)?;
        let an = atk.analytic().ok_or("identity tables missing")?;
        sat = sat
            .max((plan_bound(an, &PairingPlan::identity(n)).map_err(e2s)? - 1.0).abs())
            .max((exact_entropy_oracle(&atk).map_err(e2s)? - 1.0).abs());
        let p0 = DepolarizingParams::new(0.0, 0.0, n).map_err(e2s)?;
        sat = sat.max((depolarizing_entropy_lower(&p0, BoundMode::TheoremExact).map_err(e2s)? - 1.0).abs());
    }
    ensure(sat <= 1e-10, || format!("noiseless bound misses 1.0 by {sat:.3e}"))?;
    Ok(format!("{plans} plans checked, max(bound − oracle) = {worst:.2e}; noiseless saturation error {sat:.1e}"))
}

fn a4_normalization() -> Outcome {
    let mut worst = 0.0f64;
    for n in 1..=6 {
        for i in 0..20 {
            for j in 0..20 {
                let p = DepolarizingParams::new(i as f64 / 19.0, j as f64 / 19.0, n).map_err(e2s)?;
                let mass = eve_catalogue(&p).total_mass();
                ensure((mass - 1.0).abs() <= 1e-12, || format!("catalogue mass {mass} at n={n}"))?;
                worst = worst.max((mass - 1.0).abs());
                let d = bits::dim(n);
                for mode in [JointAzMode::PaperLiteral, JointAzMode::Corrected] {
                    let total: f64 = (0..2u8).map(|a| (0..d).map(|c| joint_az_analytic(a, c, &p, mode)).sum::<f64>()).sum();
                    worst = worst.max((total - 1.0).abs());
                }
                if n <= 5 && (i + j) % 3 == 0 {
                    let an = AnalyticAttack {
                        tables: depolarizing_tables(&p).map_err(e2s)?,
                        gram: depolarizing_gram(&p).map_err(e2s)?,
                    };
                    for row in alpha_aggregates(&an) {
                        worst = worst.max((row.iter().sum::<f64>() - 1.0).abs());
                    }
                }
            }
        }
    }
    ensure(worst <= 1e-12, || format!("normalization off by {worst:.3e}"))?;
    Ok(format!("catalogue mass, q_ac rows and p(a,c) (both modes) sum to 1 within {worst:.1e}"))
}

fn a5_estimation() -> Outcome {
    const ROUNDS: usize = 100_000;
    const CONF: f64 = 0.99;
    const RADII: f64 = 3.0;
    let mut checked = 0;
    let mut worst_ratio = 0.0f64;
    for n in 1..=3 {
        // (0, 0) runs the identity attack, whose statistics match the noiseless channel.
        for &(q, qt) in &[(0.1, 0.2), (0.2, 0.0), (0.0, 0.0)] {
            let p = DepolarizingParams::new(q, qt, n).map_err(e2s)?;
            let d = bits::dim(n);
            let atk = if q == 0.0 && qt == 0.0 { identity_attack(n) } else { depolarizing_attack(&p) }.map_err(e2s)?;
            let schedule = expand_theta_schedule(format!("a5-{n}-{q}").as_bytes(), ROUNDS, ROUNDS / 2).map_err(e2s)?;
            let rec = run_session(&ProtocolParams::new(n).map_err(e2s)?, &atk, &schedule, 1000 + n as u64, 0.5).map_err(e2s)?;
            let t = &rec.tallies;
            let mut check = |name: String, value: f64, radius: f64, target: f64| -> Result<(), String> {
                let ratio = (value - target).abs() / radius;
                worst_ratio = worst_ratio.max(ratio);
                checked += 1;
                ensure(ratio <= RADII, || format!("{name} at n={n}, Q={q}, Q̃={qt}: {value} vs {target} (±{radius})"))
            };
            let e = estimate_p_ghz(t, CONF).map_err(e2s)?;
            check("p_GHZ".into(), e.value, e.radius, p_ghz_analytic(&p))?;
            let q_ghz = p.q_ghz();
            let qn = estimate_branch_norms(t, CONF).map_err(e2s)?;
            for a in 0..2u8 {
                for c in 0..d {
                    let target = if c == bits::all(a, n) { (1.0 - q) * (1.0 - qt) } else { 0.0 } + q_ghz / d as f64;
                    let e = qn[a as usize][c];
                    check(format!("q[{a}][{c}]"), e.value, e.radius, target)?;
                }
            }
            let cond = estimate_channel_conditionals(t, CONF).map_err(e2s)?;
            for a in 0..2u8 {
                for b in 0..d {
                    let e = cond[a as usize][b];
                    check(format!("p({b}|{a})"), e.value, e.radius, depolarizing_forward_prob(b, a, &p))?;
                }
            }
            for j in 0..n {
                let e = estimate_bob_disagreement(t, j, CONF).map_err(e2s)?;
                check(format!("Q_Bob[{j}]"), e.value, e.radius, q / 2.0)?;
            }
            let o = estimate_re_overlap_from_tallies(t, CONF).map_err(e2s)?;
            check("Re overlap".into(), o.estimate.value, o.estimate.radius, (1.0 - q) * (1.0 - qt))?;
            ensure(o.cauchy_schwarz_ok, || "Cauchy–Schwarz sanity bound violated".into())?;
        }
    }
    Ok(format!("{checked} estimates within {RADII} radii (worst {worst_ratio:.2} radii) at 99% confidence"))
}

fn a6_figures() -> Outcome {
    let step = 0.005;
    for &n in &[3, 5, 7] {
        for mode in FIGURE_MODES {
            for k in 1..=19 {
                let qt = k as f64 * 0.05;
                let r = depolarizing_key_rate(&DepolarizingParams::new(0.0, qt, n).map_err(e2s)?, mode).map_err(e2s)?;
                ensure(r.r_min > 0.0, || format!("(a) {mode} n={n} Q̃={qt}: r_min = {}", r.r_min))?;
            }
        }
    }
    let mut summary = Vec::new();
    let mut in_window = false;
    for mode in FIGURE_MODES {
        let mut prev_b = 0.0;
        let mut prev_c = 0.0;
        let mut crossings = Vec::new();
        for &n in &[3, 5, 7] {
            let b = threshold("fig4b", n, mode, Slice::BackwardOff, 0.5, step).map_err(e2s)?;
            let x = b.crossing.value.ok_or_else(|| format!("(b) {mode} n={n}: no crossing in (0, 0.5)"))?;
            ensure(b.crossing.sign_changes == 1, || format!("(b) {mode} n={n}: {} crossings", b.crossing.sign_changes))?;
            ensure(x > 0.0 && x < 0.5, || format!("(b) {mode} n={n}: crossing {x}"))?;
            ensure(x >= prev_b, || format!("(b) {mode}: crossing decreases at n={n}"))?;
            prev_b = x;
            in_window |= (0.12..=0.32).contains(&x);

            let c = threshold("fig3", n, mode, Slice::Diagonal, 0.5, step).map_err(e2s)?;
            let y = c.crossing.value.ok_or_else(|| format!("(c) {mode} n={n}: no crossing"))?;
            ensure(y > 0.10 && y < 0.30, || format!("(c) {mode} n={n}: crossing {y} outside (0.10, 0.30)"))?;
            ensure(y >= prev_c, || format!("(c) {mode}: crossing decreases at n={n}"))?;
            prev_c = y;
            crossings.push(format!("n={n}: {x:.4}/{y:.4}"));
        }
        summary.push(format!("{mode} [Q̃=0 / Q=Q̃] {}", crossings.join(", ")));
    }
    ensure(in_window, || "(b) no mode has a Q̃=0 crossing within [0.12, 0.32]".into())?;
    let dir = std::env::temp_dir().join(format!("sqcka-acceptance-{}", std::process::id()));
    let th = write_figures(&dir, step).map_err(e2s)?;
    let text = std::fs::read_to_string(dir.join("thresholds.csv")).map_err(e2s)?;
    std::fs::remove_dir_all(&dir).ok();
    ensure(text.lines().count() == th.len() + 1, || "thresholds.csv is incomplete".into())?;
    for t in th.iter().filter(|t| t.figure == "fig4b" || t.figure == "fig3") {
        ensure(t.crossing.value.is_some(), || format!("thresholds.csv lacks a crossing for {}", t.csv_line()))?;
    }
    Ok(summary.join("; "))
}

fn a7_mode_relation() -> Outcome {
    let mut points = 0;
    for n in 1..=10 {
        for i in 0..=20 {
            for j in 0..=20 {
                let p = DepolarizingParams::new(i as f64 / 20.0, j as f64 / 20.0, n).map_err(e2s)?;
                let lit = depolarizing_entropy_lower(&p, BoundMode::PaperLiteral).map_err(e2s)?;
                let th = depolarizing_entropy_lower(&p, BoundMode::TheoremExact).map_err(e2s)?;
                ensure(lit == 0.5 * th, || format!("n={n} ({i},{j}): {lit} ≠ ½·{th}"))?;
                let lam = depolarizing_lambda_star(&p);
                let a = eve_catalogue(&p).aaa.norm;
                let core = 1.0 - sqcka_core::qmath::binary_entropy(lam).map_err(e2s)?;
                ensure(lit == a * core, || format!("n={n} ({i},{j}): λ* differs between modes"))?;
                points += 1;
            }
        }
    }
    Ok(format!("paper_literal = ½·theorem_exact exactly at {points} grid points"))
}

struct Criterion {
    id: &'static str,
    name: &'static str,
    limit: Duration,
    run: fn() -> Outcome,
}

fn main() -> ExitCode {
    let criteria = [
        Criterion { id: "A1", name: "soundness", limit: Duration::from_secs(10), run: a1_soundness },
        Criterion { id: "A2", name: "dilation equals closed forms", limit: Duration::from_secs(120), run: a2_dilation },
        Criterion { id: "A3", name: "bound below exact entropy", limit: Duration::from_secs(600), run: a3_bound_soundness },
        Criterion { id: "A4", name: "normalization identities", limit: Duration::from_secs(600), run: a4_normalization },
        Criterion { id: "A5", name: "estimation consistency", limit: Duration::from_secs(300), run: a5_estimation },
        Criterion { id: "A6", name: "figure-level claims", limit: Duration::from_secs(60), run: a6_figures },
        Criterion { id: "A7", name: "mode relation", limit: Duration::from_secs(600), run: a7_mode_relation },
    ];
    let mut failed = 0;
    for c in &criteria {
        let start = Instant::now();
        let outcome = (c.run)();
        let elapsed = start.elapsed();
        let outcome = match outcome {
            Ok(msg) if elapsed > c.limit => Err(format!("{msg}; took {elapsed:.1?}, limit {:?}", c.limit)),
            other => other,
        };
        match outcome {
            Ok(msg) => println!("{} PASS {}: {msg} [{elapsed:.2?}]", c.id, c.name),
            Err(msg) => {
                failed += 1;
                println!("{} FAIL {}: {msg} [{elapsed:.2?}]", c.id, c.name);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
