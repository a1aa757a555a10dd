use std::time::Instant;

use barw_core::bounds::{
    beta_hat, binomial_tail_bound, check_envelope, check_gamma_ratio, check_geometric,
    check_ratio_beta, check_ratio_kappa, check_tilted_dominance, make_bound_set, render_reports,
};
use barw_core::sim::{
    estimate_conditioned_time, estimate_hitting_prob, meanfield_step_pmf, particle_step_histogram,
    total_variation, EstimateWithCI,
};
use barw_core::solver::{
    conditional_expected_extinction, conditional_occupation_time, hitting_profile, tilted_kernel,
    unconditional_expected_extinction,
};
use barw_core::{
    equilibrium, threshold_u, BoundSet, GraphSpec, HittingProfile, LevelMode, ModelParams, Report,
    Workers,
};

use crate::cache::ProfileCache;
use crate::config::{Experiment, ExperimentConfig};
use crate::error::{config, CliResult};
use crate::output::{Artifacts, Csv, Summary};

/// Result of a completed run.
#[derive(Clone, Debug)]
pub struct Run {
    pub artifacts: Artifacts,
    pub summary: Summary,
}

/// Computes every output of the experiment, then writes them (and
/// `summary.json`) into the configured directory.
pub fn run_experiment(cfg: &ExperimentConfig) -> CliResult<Run> {
    let run = compute(cfg)?;
    run.artifacts.write_to(&cfg.out_dir)?;
    Ok(run)
}

/// Computes the outputs in memory without touching `out_dir`.
pub fn compute(cfg: &ExperimentConfig) -> CliResult<Run> {
    let start = Instant::now();
    let params = cfg.params()?;
    let bounds = make_bound_set(cfg.lambda, cfg.n, cfg.epsilon, None)?;
    let mut artifacts = Artifacts::default();
    let ctx = Ctx {
        cfg,
        params,
        cache: cfg.cache_dir.as_ref().map(ProfileCache::new),
    };
    let u = match cfg.experiment {
        Experiment::Profile => ctx.profile(&mut artifacts)?,
        Experiment::Figure1 => ctx.figure1(&mut artifacts)?,
        Experiment::Figure2 => ctx.figure2(&mut artifacts)?,
        Experiment::CondTime => ctx.cond_time(&mut artifacts)?,
        Experiment::UncondTime => ctx.uncond_time(&mut artifacts)?,
        Experiment::Occupation => ctx.occupation(&mut artifacts)?,
        Experiment::McHitting => ctx.mc_hitting(&mut artifacts)?,
        Experiment::McCondPath => ctx.mc_cond_path(&mut artifacts)?,
        Experiment::Equivalence => ctx.equivalence(&mut artifacts)?,
        Experiment::BoundsReport => ctx.bounds_report(&bounds, &mut artifacts)?,
    };
    let mut summary = summarize(cfg, &params, &bounds, u);
    summary.files = artifacts.files.iter().map(|(n, _)| n.clone()).collect();
    summary.wall_time_seconds = start.elapsed().as_secs_f64();
    artifacts.add(
        "summary.json",
        serde_json::to_string_pretty(&summary)? + "\n",
    );
    Ok(Run { artifacts, summary })
}

fn summarize(
    cfg: &ExperimentConfig,
    params: &ModelParams,
    b: &BoundSet,
    u: Option<usize>,
) -> Summary {
    Summary {
        experiment: cfg.experiment.id().to_string(),
        lambda: cfg.lambda,
        n: cfg.n,
        epsilon: cfg.epsilon,
        eq: equilibrium(params),
        u,
        q: b.q,
        q1: b.q1,
        q2: b.q2,
        theta: b.theta,
        kappa_n: b.kappa_n,
        files: Vec::new(),
        wall_time_seconds: 0.0,
    }
}

fn estimate_csv(est: &EstimateWithCI) -> String {
    let mut csv = Csv::new(&["estimate", "std_error", "trials", "seed"]);
    csv.row([
        est.mean.into(),
        est.std_error.into(),
        est.trials.into(),
        est.seed.into(),
    ]);
    csv.into_string()
}

struct Ctx<'a> {
    cfg: &'a ExperimentConfig,
    params: ModelParams,
    cache: Option<ProfileCache>,
}

impl Ctx<'_> {
    fn solve(&self, u: usize) -> CliResult<HittingProfile> {
        match &self.cache {
            Some(c) => c.get_or_solve(&self.params, u),
            None => Ok(hitting_profile(&self.params, u)?),
        }
    }

    fn level_u(&self) -> CliResult<usize> {
        Ok(self.cfg.level(&self.params)?.u)
    }

    fn x0(&self) -> CliResult<usize> {
        self.cfg
            .x0
            .ok_or_else(|| config(format!("{} needs --x0", self.cfg.experiment.id())))
    }

    fn workers(&self) -> Workers {
        Workers(self.cfg.workers)
    }

    fn seed_trials(&self) -> CliResult<(u64, u64)> {
        let seed = self.cfg.seed.ok_or_else(|| config("--seed is required"))?;
        let trials = self
            .cfg
            .trials
            .ok_or_else(|| config("--trials is required"))?;
        Ok((seed, trials))
    }

    fn profile(&self, out: &mut Artifacts) -> CliResult<Option<usize>> {
        let u = self.level_u()?;
        let prof = self.solve(u)?;
        let mut csv = Csv::new(&["x", "log_phi_natural", "phi_if_representable"]);
        for x in 0..u {
            let phi = prof.phi(x);
            let shown = (phi >= f64::MIN_POSITIVE).then_some(phi);
            csv.row([x.into(), prof.ln_phi(x).into(), shown.into()]);
        }
        out.add("phi.csv", csv.into_string());
        Ok(Some(u))
    }

    fn figure1(&self, out: &mut Artifacts) -> CliResult<Option<usize>> {
        let u = threshold_u(&self.params, self.cfg.epsilon, LevelMode::Window)?;
        let prof = self.solve(u)?;
        let mut csv = Csv::new(&["x", "log10_h"]);
        for x in 0..u {
            csv.row([x.into(), (prof.ln_phi(x) / std::f64::consts::LN_10).into()]);
        }
        out.add("logh.csv", csv.into_string());
        Ok(Some(u))
    }

    fn figure2(&self, out: &mut Artifacts) -> CliResult<Option<usize>> {
        let u = threshold_u(&self.params, self.cfg.epsilon, LevelMode::Window)?;
        let kernel = tilted_kernel(&self.solve(u)?)?;
        let mut csv = Csv::new(&["x", "y", "p_phi"]);
        for x in 1..u {
            for (y, &p) in kernel.row(x).iter().enumerate() {
                csv.row([x.into(), y.into(), p.into()]);
            }
        }
        out.add("kernel.csv", csv.into_string());
        Ok(Some(u))
    }

    fn cond_time(&self, out: &mut Artifacts) -> CliResult<Option<usize>> {
        let u = self.level_u()?;
        let t = conditional_expected_extinction(&tilted_kernel(&self.solve(u)?)?)?;
        let mut csv = Csv::new(&["x", "t", "t_over_ln_1_plus_x"]);
        for x in 1..u {
            let tx = t.get(x);
            csv.row([x.into(), tx.into(), (tx / (x as f64).ln_1p()).into()]);
        }
        out.add("t.csv", csv.into_string());
        Ok(Some(u))
    }

    fn uncond_time(&self, out: &mut Artifacts) -> CliResult<Option<usize>> {
        let mut csv = Csv::new(&["n", "x", "expected_t0", "ln_expected_t0"]);
        for &n in &self.cfg.n_sweep {
            let params = ModelParams::new(self.cfg.lambda, n)?;
            let xs: Vec<usize> = match self.cfg.x0 {
                Some(x) if x > n => return Err(config(format!("--x0 {x} exceeds n = {n}"))),
                Some(x) => vec![x],
                None => (1..=n).collect(),
            };
            let t = unconditional_expected_extinction(&params)?;
            for x in xs {
                csv.row([n.into(), x.into(), t.get(x).into(), t.get(x).ln().into()]);
            }
        }
        out.add("T.csv", csv.into_string());
        Ok(None)
    }

    fn occupation(&self, out: &mut Artifacts) -> CliResult<Option<usize>> {
        let delta = self
            .cfg
            .delta
            .ok_or_else(|| config("occupation needs --delta"))?;
        let u = self.level_u()?;
        let h = conditional_occupation_time(&tilted_kernel(&self.solve(u)?)?, delta)?;
        let mut csv = Csv::new(&["x", "expected_occupation"]);
        for x in 1..u {
            csv.row([x.into(), h.get(x).into()]);
        }
        out.add("h_occ.csv", csv.into_string());
        Ok(Some(u))
    }

    fn mc_hitting(&self, out: &mut Artifacts) -> CliResult<Option<usize>> {
        let u = self.level_u()?;
        let (seed, trials) = self.seed_trials()?;
        let est = estimate_hitting_prob(&self.params, u, self.x0()?, trials, seed, self.workers())?;
        out.add("est.csv", estimate_csv(&est));
        Ok(Some(u))
    }

    fn mc_cond_path(&self, out: &mut Artifacts) -> CliResult<Option<usize>> {
        let u = self.level_u()?;
        let (seed, trials) = self.seed_trials()?;
        let kernel = tilted_kernel(&self.solve(u)?)?;
        let est = estimate_conditioned_time(&kernel, self.x0()?, trials, seed, self.workers())?;
        out.add("est.csv", estimate_csv(&est));
        Ok(Some(u))
    }

    fn equivalence(&self, out: &mut Artifacts) -> CliResult<Option<usize>> {
        let spec = self
            .cfg
            .graph
            .clone()
            .unwrap_or_else(|| format!("complete:{}", self.cfg.n));
        let graph = GraphSpec::from_arg(&spec, self.cfg.self_loops)?;
        let (seed, trials) = self.seed_trials()?;
        let x = self.x0()?;
        let hist =
            particle_step_histogram(&graph, self.cfg.lambda, x, trials, seed, self.workers())?;
        let nv = graph.vertex_count();
        let tv = total_variation(
            &hist,
            &meanfield_step_pmf(&ModelParams::new(self.cfg.lambda, nv)?, x),
        );
        let mut csv = Csv::new(&["n", "lambda", "x", "trials", "tv_distance"]);
        csv.row([
            nv.into(),
            self.cfg.lambda.into(),
            x.into(),
            trials.into(),
            tv.into(),
        ]);
        out.add("tv.csv", csv.into_string());
        Ok(None)
    }

    fn bounds_report(&self, bounds: &BoundSet, out: &mut Artifacts) -> CliResult<Option<usize>> {
        let (lambda, n, eps) = (self.cfg.lambda, self.cfg.n, self.cfg.epsilon);
        let u = self.level_u()?;
        let mut reports = Vec::new();

        let low_u = threshold_u(&self.params, eps, LevelMode::Low)?;
        let low = self.solve(low_u)?;
        reports.push(check_envelope(&low, bounds));

        reports.push(match threshold_u(&self.params, eps, LevelMode::Window) {
            Ok(wu) => check_geometric(&self.solve(wu)?, bounds),
            Err(e) => Report::new("geometric-upper").inapplicable(e.to_string()),
        });

        reports.push(check_ratio_kappa(&self.solve(u)?, bounds));
        reports.push(check_ratio_beta(&low));

        reports.push(match check_gamma_ratio(&self.params, eps, bounds.alpha) {
            Ok(r) => r,
            Err(e) => Report::new("gamma-ratio").inapplicable(e.to_string()),
        });

        reports.push(match (beta_hat(&low), bounds.kappa_n) {
            (Some(beta), Some(kappa)) => check_tilted_dominance(&tilted_kernel(&low)?, beta, kappa),
            _ => Report::new("tilted-dominance").inapplicable("needs u ≥ 2 and a defined κ_n"),
        });

        let b = barw_core::branch_prob(&self.params, low_u)?;
        let xi = (-lambda * eps / 2.0).exp();
        let mut tail = Report::new("binomial-tail")
            .param("n", n)
            .param("x", low_u)
            .param("xi", xi);
        if b > 0.0 && b < 1.0 {
            let (bound, exact) = binomial_tail_bound(n, b, xi)?;
            tail.extreme("bound", bound);
            tail.extreme("exact", exact);
            if exact > bound {
                tail.violation(format!("exact {exact} exceeds bound {bound}"));
            }
        } else {
            tail = tail.inapplicable("b(x) outside (0, 1)");
        }
        reports.push(tail);

        out.add("report.txt", render_reports(&reports));
        Ok(Some(u))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::RawArgs;

    fn cfg(
        exp: Experiment,
        lambda: f64,
        n: usize,
        f: impl FnOnce(&mut RawArgs),
    ) -> ExperimentConfig {
        let mut raw = RawArgs {
            lambda: Some(lambda),
            n: Some(n),
            epsilon: 0.05,
            self_loops: true,
            ..Default::default()
        };
        f(&mut raw);
        ExperimentConfig::from_args(exp, raw).unwrap()
    }

    #[test]
    fn profile_with_u_one() {
        let run = compute(&cfg(Experiment::Profile, 2.0, 50, |r| r.u = Some(1))).unwrap();
        let csv = run.artifacts.get("phi.csv").unwrap();
        assert_eq!(
            csv,
            "x,log_phi_natural,phi_if_representable\n0,0.0000000000000000e0,1.0000000000000000e0\n"
        );
        assert_eq!(run.summary.u, Some(1));
    }

    #[test]
    fn summary_matches_core() {
        let run = compute(&cfg(Experiment::Profile, 1.5, 300, |_| {})).unwrap();
        let b = make_bound_set(1.5, 300, 0.05, None).unwrap();
        let s = &run.summary;
        assert_eq!(
            (s.q, s.q1, s.q2, s.theta, s.kappa_n),
            (b.q, b.q1, b.q2, b.theta, b.kappa_n)
        );
        assert_eq!(s.eq, equilibrium(&ModelParams::new(1.5, 300).unwrap()));
        assert_eq!(s.u, Some(67));
        let json = run.artifacts.get("summary.json").unwrap();
        let v: serde_json::Value = serde_json::from_str(json).unwrap();
        assert_eq!(v["u"], 67);
    }

    #[test]
    fn errors_leave_no_files() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("out");
        let mut c = cfg(Experiment::Occupation, 1.5, 300, |r| r.delta = Some(0.9));
        c.out_dir = out.clone();
        let err = run_experiment(&c).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(!out.exists());
    }

    #[test]
    fn uncond_sweep_rows() {
        let run = compute(&cfg(Experiment::UncondTime, 2.0, 20, |r| {
            r.n_sweep = vec![20, 30];
            r.x0 = Some(10);
        }))
        .unwrap();
        let csv = run.artifacts.get("T.csv").unwrap();
        assert_eq!(csv.lines().count(), 3);
        assert!(csv.lines().nth(2).unwrap().starts_with("30,10,"));
    }

    #[test]
    fn bounds_report_renders_all_checks() {
        let run = compute(&cfg(Experiment::BoundsReport, 2.0, 200, |_| {})).unwrap();
        let text = run.artifacts.get("report.txt").unwrap();
        for name in [
            "envelope",
            "geometric-upper",
            "kappa-ratio",
            "beta-ratio",
            "gamma-ratio",
            "tilted-dominance",
            "binomial-tail",
        ] {
            assert!(text.contains(&format!("check: {name}\n")), "{name} missing");
        }
    }
}
