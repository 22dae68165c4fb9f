//! Self-check suites behind `string-lab verify`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use string_lab::compat::{initial_jet, orthogonality_identity, tension_identity};
use string_lab::diagnostics::{convergence_study, energy_series, free_end_signal, mode_frequency};
use string_lab::dynamics::{quasilinear_residual, simulate, DtPolicy, ScenarioConfig};
use string_lab::grid::{integrate_from_fixed_end, make_grid, trapezoid};
use string_lab::norms::{averaging, disc_lift_norm, l2_norm, weighted_sq, xeps_norm, xm_norm, ym_norm};
use string_lab::scenarios::{equilibrium, gravity_down, hanging_mode, mode_frequency_exact, rotating, rotating_tension};
use string_lab::tension::{solve_tbvp, BvpInputs};
use string_lab::{DiffOps, Result, Vec3};

pub const SUITES: [&str; 5] = ["norms", "tension", "dynamics", "compatibility", "energy"];

const FUZZ_SAMPLES: usize = 200;
const XEPS_BRACKET: f64 = 1.52;
const DISC_BRACKET: [f64; 4] = [1.95, 3.88, 8.73, 26.8];

#[derive(Debug, Serialize)]
pub struct Check {
    pub suite: &'static str,
    pub name: String,
    pub pass: bool,
    pub value: f64,
    pub limit: f64,
}

#[derive(Debug, Serialize)]
pub struct Summary {
    pub suite: String,
    pub seed: u64,
    pub pass: bool,
    pub checks: Vec<Check>,
}

struct Recorder {
    suite: &'static str,
    checks: Vec<Check>,
}

impl Recorder {
    fn new(suite: &'static str) -> Self {
        Recorder { suite, checks: Vec::new() }
    }

    /// Passes when value ≤ limit.
    fn below(&mut self, name: &str, value: f64, limit: f64) {
        self.checks.push(Check { suite: self.suite, name: name.into(), pass: value <= limit, value, limit });
    }

    fn within(&mut self, name: &str, value: f64, range: (f64, f64)) {
        let pass = value >= range.0 && value <= range.1;
        self.checks.push(Check { suite: self.suite, name: name.into(), pass, value, limit: range.1 });
    }

    fn failed(&mut self, name: &str, err: string_lab::LabError) {
        eprintln!("{}: {name}: {err}", self.suite);
        self.checks.push(Check { suite: self.suite, name: name.into(), pass: false, value: f64::NAN, limit: f64::NAN });
    }

    fn run(&mut self, name: &str, f: impl FnOnce(&mut Self) -> Result<()>) {
        if let Err(e) = f(self) {
            self.failed(name, e);
        }
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn max_dev(a: &[Vec3], b: &[Vec3]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q).norm()).fold(0.0, f64::max)
}

fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// max(r, 1/r), so one number covers both sides of an equivalence bracket.
fn bracket(r: f64) -> f64 {
    r.max(r.recip())
}

fn random_quintic(rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..6).map(|_| rng.random_range(-1.0..1.0)).collect()
}

fn norms(seed: u64) -> Vec<Check> {
    let mut r = Recorder::new("norms");
    r.run("examples", |r| {
        let g = make_grid(1024)?;
        let pi = std::f64::consts::PI;
        r.below("xm(1, 0)", rel(xm_norm(&vec![1.0; 1025], 0, &g)?, 1.0), 1e-6);
        r.below("xm(s, 0)", rel(xm_norm(&g.sample(|s| s), 0, &g)?, 3f64.sqrt().recip()), 1e-6);
        r.below("xm(s^2, 2)", rel(xm_norm(&g.sample(|s| s * s), 2, &g)?, (0.2 + 8.0 / 3.0f64).sqrt()), 1e-6);
        r.below("ym(1, 0)", rel(ym_norm(&vec![1.0; 1025], 0, &g)?, 0.5f64.sqrt()), 1e-6);
        r.below("disc(s, 0)", rel(disc_lift_norm(&g.sample(|s| s), 0, &g)?, (pi / 3.0).sqrt()), 1e-6);
        Ok(())
    });
    r.run("fuzz", |r| {
        let g = make_grid(256)?;
        let ops = DiffOps::default();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (mut avg, mut hardy, mut xeps, mut disc) = (0.0_f64, 0.0_f64, 1.0_f64, [1.0_f64; 4]);
        for _ in 0..FUZZ_SAMPLES {
            let p = random_quintic(&mut rng);
            let u = g.sample(|s| p.iter().rev().fold(0.0, |acc, c| acc * s + c));
            let mu = averaging(&u, &g)?;
            for (m, d) in disc.iter_mut().enumerate() {
                let base = xm_norm(&u, m, &g)?;
                avg = avg.max(xm_norm(&mu, m, &g)? / base);
                *d = d.max(bracket(disc_lift_norm(&u, m, &g)? / base));
            }
            hardy = hardy.max(l2_norm(&integrate_from_fixed_end(&u, &g), &g) / weighted_sq(&u, 2, &g).sqrt());
            let du = ops.d1(&u, &g)?;
            let w: Vec<f64> = du.iter().enumerate().map(|(i, d)| g.node(i).powf(1.5) * d * d).collect();
            let base = (l2_norm(&u, &g).powi(2) + trapezoid(&w, &g)).sqrt();
            xeps = xeps.max(bracket(xeps_norm(&u, 1, 0.25, &g)? / base));
        }
        r.below("averaging ratio", avg, 2.0 + 1e-6);
        r.below("hardy ratio", hardy, 2.0);
        r.below("xeps bracket", xeps, XEPS_BRACKET);
        for (m, d) in disc.iter().enumerate() {
            r.below(&format!("disc lift bracket m={m}"), *d, DISC_BRACKET[m]);
        }
        Ok(())
    });
    r.checks
}

fn manufactured_error(n: usize) -> Result<f64> {
    let g = make_grid(n)?;
    let q = g.sample(|s| s * s);
    let h = g.sample(|s| (2.0 - s + s.powi(3)) * (-s).exp());
    let tf = solve_tbvp(&BvpInputs { q, h, a: 0.0 }, &g)?;
    Ok(tf.tau.iter().enumerate().map(|(i, t)| (t - g.node(i) * (-g.node(i)).exp()).abs()).fold(0.0, f64::max))
}

fn tension(seed: u64, jobs: usize) -> Vec<Check> {
    let mut r = Recorder::new("tension");
    r.run("manufactured order", |r| {
        let table = convergence_study(&[64, 128, 256, 512], jobs, manufactured_error)?;
        r.within("manufactured order", table.slope.unwrap_or(f64::NAN), (1.8, 2.2));
        Ok(())
    });
    r.run("closed forms", |r| {
        let g = make_grid(128)?;
        let lin = solve_tbvp(&BvpInputs { q: vec![0.0; 129], h: vec![0.0; 129], a: 1.0 }, &g)?;
        r.below("linear", lin.tau.iter().enumerate().map(|(i, t)| (t - g.node(i)).abs()).fold(0.0, f64::max), 1e-12);
        let rot = solve_tbvp(&BvpInputs { q: vec![0.0; 129], h: vec![1.0; 129], a: 0.0 }, &g)?;
        let err = rot.tau.iter().enumerate().map(|(i, t)| (t - rotating_tension(g.node(i), 1.0)).abs()).fold(0.0, f64::max);
        r.below("rotating", err, 1e-10);
        Ok(())
    });
    r.run("positivity", |r| {
        let g = make_grid(64)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut negative = 0;
        for _ in 0..FUZZ_SAMPLES {
            let q: Vec<f64> = (0..65).map(|_| rng.random_range(0.0..50.0)).collect();
            let h: Vec<f64> = (0..65).map(|_| rng.random_range(0.0..10.0)).collect();
            let a = rng.random_range(0.0..5.0);
            if solve_tbvp(&BvpInputs { q, h, a }, &g)?.tau.iter().any(|t| *t < 0.0) {
                negative += 1;
            }
        }
        r.below("negative solutions", negative as f64, 0.0);
        Ok(())
    });
    r.checks
}

fn dynamics(jobs: usize) -> Vec<Check> {
    let mut r = Recorder::new("dynamics");
    r.run("equilibrium", |r| {
        let g = make_grid(128)?;
        let eq = equilibrium(&g);
        let rec = simulate(&ScenarioConfig { n_cells: 128, ..Default::default() }, &eq).map_err(|a| a.cause)?;
        r.below("equilibrium deviation", max_dev(&rec.snapshots.last().unwrap().state.x, &eq.x), 1e-8);
        r.below("max step drift", rec.max_step_drift, 1e-10);
        Ok(())
    });
    r.run("rotating", |r| {
        let table = convergence_study(&[32, 64, 128], jobs, |n| {
            let g = make_grid(n)?;
            let cfg = ScenarioConfig { gravity: [0.0; 3], n_cells: n, ..Default::default() };
            let rec = simulate(&cfg, &rotating(&g, 1.0, 0.0)).map_err(|a| a.cause)?;
            Ok(max_dev(&rec.snapshots.last().unwrap().state.x, &rotating(&g, 1.0, 1.0).x))
        })?;
        r.below("rotating error n=128", table.rows[2].error, 1e-4);
        Ok(())
    });
    r.run("first mode", |r| {
        let g = make_grid(64)?;
        let cfg = ScenarioConfig { n_cells: 64, t_end: 20.0, ..Default::default() };
        let rec = simulate(&cfg, &hanging_mode(&g, 1, 1e-3)).map_err(|a| a.cause)?;
        let (t, x) = free_end_signal(&rec, 0);
        r.below("first mode frequency", rel(mode_frequency(&t, &x)?, mode_frequency_exact(1)), 0.01);
        Ok(())
    });
    r.checks
}

fn compatibility() -> Vec<Check> {
    let mut r = Recorder::new("compatibility");
    r.run("closed-form jets", |r| {
        let g = make_grid(256)?;
        let eq = equilibrium(&g);
        let rot = rotating(&g, 1.0, 0.0);
        for (name, st, grav) in [("equilibrium", &eq, gravity_down()), ("rotating", &rot, Vec3::zeros())] {
            let jet = initial_jet(&st.x, &st.v, &grav, 5, &g)?;
            r.below(&format!("{name} residuals"), jet.residuals[..4].iter().cloned().fold(0.0, f64::max), 1e-9);
            let mut worst = 0.0_f64;
            for j in 0..=2 {
                worst = worst.max(sup(&orthogonality_identity(&jet, j)?));
                worst = worst.max(sup(&tension_identity(&jet, j, &grav, &g)?));
            }
            r.below(&format!("{name} identities"), worst, 1e-8);
        }
        Ok(())
    });
    r.checks
}

fn energy(jobs: usize) -> Vec<Check> {
    let mut r = Recorder::new("energy");
    r.run("rotating energies", |r| {
        let g = make_grid(128)?;
        let cfg = ScenarioConfig { gravity: [0.0; 3], n_cells: 128, ..Default::default() };
        let rec = simulate(&cfg, &rotating(&g, 1.0, 0.0)).map_err(|a| a.cause)?;
        let series = energy_series(&rec, &g)?;
        r.below("script_E vs 2/3", series.iter().map(|e| rel(e.script_e, 2.0 / 3.0)).fold(0.0, f64::max), 0.02);
        r.below("E vs 13/6", series.iter().map(|e| rel(e.big_e, 13.0 / 6.0)).fold(0.0, f64::max), 0.05);
        Ok(())
    });
    r.run("quasilinear residual", |r| {
        let levels = [32usize, 64, 128];
        let table = convergence_study(&levels, jobs, |n| {
            let g = make_grid(n)?;
            let cfg = ScenarioConfig {
                gravity: [0.0; 3],
                n_cells: n,
                t_end: 0.2,
                snapshot_dt: 0.64 / n as f64,
                dt: DtPolicy::Cfl(0.5),
                ..Default::default()
            };
            let rec = simulate(&cfg, &rotating(&g, 1.0, 0.0)).map_err(|a| a.cause)?;
            Ok(quasilinear_residual(&rec, &g)?.iter().map(|x| x.1).fold(0.0, f64::max))
        })?;
        r.within("quasilinear order", table.slope.unwrap_or(f64::NAN), (1.7, 2.3));
        Ok(())
    });
    r.checks
}

/// Run one suite, or every suite for "all"; None for an unknown name.
pub fn run(suite: &str, seed: u64, jobs: usize) -> Option<Summary> {
    let names: Vec<&str> = match suite {
        "all" => SUITES.to_vec(),
        s if SUITES.contains(&s) => vec![s],
        _ => return None,
    };
    let mut checks = Vec::new();
    for name in names {
        checks.extend(match name {
            "norms" => norms(seed),
            "tension" => tension(seed, jobs),
            "dynamics" => dynamics(jobs),
            "compatibility" => compatibility(),
            _ => energy(jobs),
        });
    }
    Some(Summary { suite: suite.to_string(), seed, pass: checks.iter().all(|c| c.pass), checks })
}
