//! `verify`: runs the invariant checks and reports the measured slack.

use std::path::Path;

use anyhow::Result;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sqcka_core::attacks::{
    depolarizing_attack, eve_catalogue, identity_attack, parse_attack_table, random_table_attack, DepolarizingParams,
};
use sqcka_core::keyrate::{
    depolarizing_entropy_lower, exact_entropy_oracle, pairing_maximize, plan_bound, BoundMode, PairingPlan,
};
use sqcka_core::protocol::{expand_theta_schedule, observe_exact, run_session, ObservedStatistics, ProtocolParams};

use crate::format::sig;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: String,
    pub pass: bool,
    /// Distance from the failure threshold, or the error message.
    pub detail: String,
}

impl CheckResult {
    fn measured(name: &str, worst: f64, limit: f64) -> Self {
        Self {
            name: name.into(),
            pass: worst <= limit,
            detail: format!("worst {} limit {} slack {}", sig(worst, 4), sig(limit, 4), sig(limit - worst, 4)),
        }
    }

    pub fn line(&self) -> String {
        format!("{} {}: {}", if self.pass { "PASS" } else { "FAIL" }, self.name, self.detail)
    }
}

fn max_abs_diff<'a>(x: impl IntoIterator<Item = &'a f64>, y: impl IntoIterator<Item = &'a f64>) -> f64 {
    x.into_iter().zip(y).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
}

fn stats_gap(a: &ObservedStatistics, b: &ObservedStatistics) -> f64 {
    let mut gap = (a.p_ghz - b.p_ghz).abs();
    gap = gap.max(max_abs_diff(a.ctrl_joint_ac.iter().flatten(), b.ctrl_joint_ac.iter().flatten()));
    gap = gap.max(max_abs_diff(a.sift_joint_ac.iter().flatten(), b.sift_joint_ac.iter().flatten()));
    gap = gap.max(max_abs_diff(a.sift_joint_ab.iter().flatten(), b.sift_joint_ab.iter().flatten()));
    gap.max(max_abs_diff(&a.p_b, &b.p_b))
}

fn check(name: &str, f: impl FnOnce() -> Result<CheckResult>) -> CheckResult {
    f().unwrap_or_else(|e| CheckResult { name: name.into(), pass: false, detail: format!("error: {e:#}") })
}

pub fn catalogue_mass() -> CheckResult {
    check("catalogue_mass", || {
        let mut worst = 0.0f64;
        for n in 1..=6 {
            for i in 0..20 {
                for j in 0..20 {
                    let p = DepolarizingParams::new(i as f64 / 19.0, j as f64 / 19.0, n)?;
                    worst = worst.max((eve_catalogue(&p).total_mass() - 1.0).abs());
                }
            }
        }
        Ok(CheckResult::measured("catalogue_mass", worst, 1e-12))
    })
}

pub fn dilation_matches_tables() -> CheckResult {
    check("dilation_matches_tables", || {
        let mut worst = 0.0f64;
        for n in 1..=2 {
            for &q in &[0.0, 0.3, 0.7] {
                for &qt in &[0.0, 0.3, 0.7] {
                    let atk = depolarizing_attack(&DepolarizingParams::new(q, qt, n)?)?;
                    let exact = observe_exact(&ProtocolParams::new(n)?, &atk)?;
                    let an = atk.analytic().expect("depolarizing attacks carry tables");
                    worst = worst.max(stats_gap(&exact, &ObservedStatistics::from_analytic(an)));
                }
            }
        }
        Ok(CheckResult::measured("dilation_matches_tables", worst, 1e-10))
    })
}

pub fn bound_below_oracle_depolarizing() -> CheckResult {
    check("bound_below_oracle_depolarizing", || {
        let mut worst = f64::NEG_INFINITY;
        for n in 1..=2 {
            for &q in &[0.0, 0.1, 0.3, 0.7] {
                for &qt in &[0.0, 0.1, 0.3, 0.7] {
                    let p = DepolarizingParams::new(q, qt, n)?;
                    let oracle = exact_entropy_oracle(&depolarizing_attack(&p)?)?;
                    let bound = depolarizing_entropy_lower(&p, BoundMode::TheoremExact)?;
                    worst = worst.max(bound - oracle);
                }
            }
        }
        Ok(CheckResult::measured("bound_below_oracle_depolarizing", worst, 1e-9))
    })
}

pub fn bound_below_oracle_random(cases: usize, seed: u64) -> CheckResult {
    check("bound_below_oracle_random", || {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst = f64::NEG_INFINITY;
        for i in 0..cases {
            let r = random_table_attack(&mut rng, 1 + i % 2, 1 + i % 5)?;
            let an = r.attack.analytic().expect("table attack");
            let oracle = exact_entropy_oracle(&r.attack)?;
            let (_, best) = pairing_maximize(an, None)?;
            let id = plan_bound(an, &PairingPlan::identity(an.tables.n()))?;
            worst = worst.max(best - oracle).max(id - oracle);
        }
        Ok(CheckResult::measured("bound_below_oracle_random", worst, 1e-9))
    })
}

pub fn mode_factor_two() -> CheckResult {
    check("mode_factor_two", || {
        let mut worst = 0.0f64;
        for n in [1, 3, 5, 10] {
            for i in 0..=20 {
                for j in 0..=20 {
                    let p = DepolarizingParams::new(i as f64 / 20.0, j as f64 / 20.0, n)?;
                    let lit = depolarizing_entropy_lower(&p, BoundMode::PaperLiteral)?;
                    let th = depolarizing_entropy_lower(&p, BoundMode::TheoremExact)?;
                    worst = worst.max((2.0 * lit - th).abs()).max(lit - th);
                }
            }
        }
        Ok(CheckResult::measured("mode_factor_two", worst, 0.0))
    })
}

pub fn monotonicity() -> CheckResult {
    check("monotonicity", || {
        let mut worst = f64::NEG_INFINITY;
        for n in [1, 3, 5, 10] {
            for mode in [BoundMode::PaperLiteral, BoundMode::TheoremExact] {
                let s = |i: usize, j: usize| -> Result<f64> {
                    Ok(depolarizing_entropy_lower(&DepolarizingParams::new(i as f64 * 0.05, j as f64 * 0.05, n)?, mode)?)
                };
                for i in 0..=18 {
                    for j in 0..=18 {
                        let here = s(i, j)?;
                        if i < 18 {
                            worst = worst.max(s(i + 1, j)? - here);
                        }
                        if j < 18 {
                            worst = worst.max(s(i, j + 1)? - here);
                        }
                    }
                }
            }
        }
        Ok(CheckResult::measured("monotonicity", worst, 1e-12))
    })
}

pub fn noiseless_saturation() -> CheckResult {
    check("noiseless_saturation", || {
        let mut worst = 0.0f64;
        for n in 1..=3 {
            let atk = identity_attack(n)?;
            let an = atk.analytic().expect("identity attack carries tables");
            worst = worst
                .max((plan_bound(an, &PairingPlan::identity(n))? - 1.0).abs())
                .max((exact_entropy_oracle(&atk)? - 1.0).abs());
        }
        Ok(CheckResult::measured("noiseless_saturation", worst, 1e-10))
    })
}

pub fn soundness() -> CheckResult {
    check("soundness", || {
        let mut failures = 0usize;
        for n in 1..=3 {
            let schedule = expand_theta_schedule(b"verify", 1000, 100)?;
            let rec = run_session(&ProtocolParams::new(n)?, &identity_attack(n)?, &schedule, n as u64, 0.1)?;
            failures += (rec.tallies.ghz_total - rec.tallies.ghz_pass) as usize;
            for key in &rec.raw_key_bobs {
                failures += key.iter().zip(&rec.raw_key_alice).filter(|(x, y)| x != y).count();
            }
        }
        Ok(CheckResult::measured("soundness", failures as f64, 0.0))
    })
}

/// Validates a user-supplied attack table and checks the bound against the
/// exact entropy for it.
pub fn attack_file(path: &Path) -> CheckResult {
    let name = format!("attack_file {}", path.display());
    check(&name.clone(), || {
        let text = std::fs::read_to_string(path)?;
        let atk = parse_attack_table(&text)?;
        let an = atk.analytic().expect("parsed attacks carry tables");
        let (_, bound) = pairing_maximize(an, None)?;
        let oracle = exact_entropy_oracle(&atk)?;
        Ok(CheckResult::measured(&name, bound - oracle, 1e-9))
    })
}

pub fn run_all(attack: Option<&Path>) -> Vec<CheckResult> {
    let mut checks = vec![
        catalogue_mass(),
        dilation_matches_tables(),
        bound_below_oracle_depolarizing(),
        bound_below_oracle_random(20, 2024),
        mode_factor_two(),
        monotonicity(),
        noiseless_saturation(),
        soundness(),
    ];
    if let Some(p) = attack {
        checks.push(attack_file(p));
    }
    checks
}
