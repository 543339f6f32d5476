//! `simulate`: run a session, estimate the observables, and report a key rate.

use std::fmt::Write as _;

use anyhow::{Context, Result};
use sqcka_core::attacks::{depolarizing_attack, identity_attack, parse_attack_table, CollectiveAttack, DepolarizingParams};
use sqcka_core::bits;
use sqcka_core::estimation::{
    estimate_bob_disagreement, estimate_branch_norms, estimate_channel_conditionals, estimate_p_ghz,
    estimate_re_overlap_from_tallies, EstimateWithRadius,
};
use sqcka_core::keyrate::{depolarizing_entropy_lower, keyrate_lower, BoundMode};
use sqcka_core::protocol::{default_ctrl_count, expand_theta_schedule, run_session, ProtocolParams, SessionRecord};

use crate::config::{AttackSource, RunConfig};
use crate::format::sig9;

pub fn load_attack(cfg: &RunConfig) -> Result<CollectiveAttack> {
    Ok(match &cfg.attack {
        AttackSource::Depolarizing { q, q_tilde } => depolarizing_attack(&DepolarizingParams::new(*q, *q_tilde, cfg.n)?)?,
        AttackSource::Identity => identity_attack(cfg.n)?,
        AttackSource::TableFile(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            let atk = parse_attack_table(&text).with_context(|| format!("parsing {}", path.display()))?;
            anyhow::ensure!(atk.n() == cfg.n, "attack file is for {} Bobs but n = {}", atk.n(), cfg.n);
            atk
        }
    })
}

pub fn run(cfg: &RunConfig) -> Result<(SessionRecord, String)> {
    let attack = load_attack(cfg)?;
    let ctrl = cfg.ctrl_count.unwrap_or_else(|| default_ctrl_count(cfg.rounds));
    let schedule = expand_theta_schedule(cfg.seed.to_string().as_bytes(), cfg.rounds, ctrl)?;
    let rec = run_session(&ProtocolParams::new(cfg.n)?, &attack, &schedule, cfg.seed, cfg.cc_fraction)?;
    let report = report(cfg, &rec)?;
    Ok((rec, report))
}

fn pm(e: &EstimateWithRadius) -> String {
    format!("{} ± {}", sig9(e.value), sig9(e.radius))
}

/// Depolarizing fit of the estimates: `Q = 2·max_j Q̂_Bob,j`, `Q_GHZ` from
/// `p̂_GHZ`, then `Q̃ = (Q_GHZ − Q)/(1 − Q)`.
pub fn fit_depolarizing(n: usize, p_ghz: f64, worst_bob_error: f64) -> (f64, f64) {
    let q = (2.0 * worst_bob_error).clamp(0.0, 1.0);
    let q_ghz = ((1.0 - p_ghz) / (1.0 - 0.5f64.powi(n as i32 + 1))).clamp(0.0, 1.0);
    let qt = if q < 1.0 { ((q_ghz - q) / (1.0 - q)).clamp(0.0, 1.0) } else { 0.0 };
    (q, qt)
}

pub fn report(cfg: &RunConfig, rec: &SessionRecord) -> Result<String> {
    let n = cfg.n;
    let t = &rec.tallies;
    let conf = cfg.confidence;
    let mut out = String::new();
    let w = &mut out;
    writeln!(w, "session: n={n} rounds={} seed={} confidence={}", cfg.rounds, cfg.seed, sig9(conf))?;
    writeln!(
        w,
        "rounds: ghz_tests={} z_tests={} disclosed_sift={} raw_key_bits={}",
        t.ghz_total,
        t.z_ctrl_total(),
        t.sift_total,
        rec.raw_key_alice.len()
    )?;
    let p = estimate_p_ghz(t, conf).ok();
    match &p {
        Some(e) => writeln!(w, "p_ghz: {}", pm(e))?,
        None => writeln!(w, "p_ghz: no data")?,
    }
    match estimate_branch_norms(t, conf) {
        Ok(q) => {
            writeln!(w, "q_ac (a, c, estimate):")?;
            for (a, row) in q.iter().enumerate() {
                for (c, e) in row.iter().enumerate() {
                    writeln!(w, "  {a} {} {}", bits::format(c, n), pm(e))?;
                }
            }
        }
        Err(_) => writeln!(w, "q_ac: no data")?,
    }
    match estimate_re_overlap_from_tallies(t, conf) {
        Ok(o) => {
            writeln!(w, "re_overlap: {}", pm(&o.estimate))?;
            if !o.cauchy_schwarz_ok {
                writeln!(w, "warning: |Re| exceeds sqrt(q00*q11); tallies are inconsistent with a collective attack")?;
            }
        }
        Err(_) => writeln!(w, "re_overlap: no data")?,
    }
    match estimate_channel_conditionals(t, conf) {
        Ok(c) => {
            writeln!(w, "p(b|a) (a, b, estimate):")?;
            for (a, row) in c.iter().enumerate() {
                for (b, e) in row.iter().enumerate() {
                    writeln!(w, "  {a} {} {}", bits::format(b, n), pm(e))?;
                }
            }
        }
        Err(_) => writeln!(w, "p(b|a): no data")?,
    }
    let raw = rec.disagreement_rates();
    let mut worst: Option<f64> = None;
    for j in 0..n {
        let est = estimate_bob_disagreement(t, j, conf).ok();
        if let Some(e) = &est {
            worst = Some(worst.map_or(e.value, |x: f64| x.max(e.value)));
        }
        writeln!(
            w,
            "bob {}: disagreement disclosed={} raw_key={}",
            j + 1,
            est.as_ref().map_or_else(|| "no data".to_string(), pm),
            sig9(raw[j])
        )?;
    }
    match (p, worst) {
        (Some(p), Some(worst)) => {
            let (q, qt) = fit_depolarizing(n, p.value, worst);
            writeln!(w, "fit: q={} qtilde={}", sig9(q), sig9(qt))?;
            let params = DepolarizingParams::new(q, qt, n)?;
            let mut s_values = Vec::new();
            for mode in [BoundMode::PaperLiteral, BoundMode::TheoremExact] {
                let s = depolarizing_entropy_lower(&params, mode)?;
                let r = keyrate_lower(s, q, mode)?;
                s_values.push(s);
                writeln!(
                    w,
                    "key_rate {mode}: s_lower={} leakage={} r_min={}",
                    sig9(r.s_lower),
                    sig9(r.leakage),
                    sig9(r.r_min)
                )?;
            }
            writeln!(
                w,
                "discrepancy: theorem_exact - paper_literal = {} (printed closed form carries half the pair weight)",
                sig9(s_values[1] - s_values[0])
            )?;
        }
        _ => writeln!(w, "key_rate: not enough data")?,
    }
    Ok(out)
}
