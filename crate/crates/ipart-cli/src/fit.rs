//! `fit`: run the posterior sampler for one model and write the archive
//! plus summary reports.

use ipart::config::FitConfig;
use ipart::error::{Error, Result};
use ipart::likelihood::Dataset;
use ipart::mcmc::{run_chain, run_chain_cpp, run_chain_lsp, DrawsArchive};
use ipart::partition::Partition;
use ipart::priors::{AlphaModel, PriorSpec};
use ipart::summaries::{
    coclustering, expected_ari_vs, lpml, point_estimate_vi, posterior_lagged_ari, waic,
    PointEstimateConfig,
};
use ipart::temporal::{Dependence, SequenceModel};

use crate::output::{fmt, run_tasks, write_csv, write_json};
use crate::CommonArgs;

pub fn run(args: &CommonArgs) -> Result<()> {
    let mut cfg: FitConfig = args.load_config()?;
    if let Some(seed) = args.seed {
        cfg.mcmc.seed = seed;
    }
    cfg.mcmc.validate()?;
    let seed = cfg.mcmc.seed;
    let (data, rho_true) = cfg.data.load(seed)?;
    let spec = cfg
        .prior
        .build(data.num_units(), data.t_len(), rho_true.as_ref(), seed)?;

    args.say(&format!(
        "fit: m={} T={} iters={} chains={}",
        data.num_units(),
        data.t_len(),
        cfg.mcmc.iters,
        cfg.mcmc.chains
    ));
    let archive = run_fit(&data, &spec, &cfg, args.threads())?;
    write_outputs(args, &cfg, &spec, rho_true.as_ref(), &archive)
}

pub fn run_fit(
    data: &Dataset,
    spec: &PriorSpec,
    cfg: &FitConfig,
    threads: usize,
) -> Result<DrawsArchive> {
    let gauss = cfg.likelihood.build()?;
    let chains = cfg.mcmc.chains;
    let archives: Vec<DrawsArchive> = match spec {
        PriorSpec::Crp { mass } | PriorSpec::Icrp { mass, .. } => {
            let (rho0, alpha) = match spec {
                PriorSpec::Icrp { rho0, alpha, .. } => (Some(rho0.clone()), alpha.clone()),
                _ => (
                    None,
                    AlphaModel::fixed_global(0.0, data.t_len(), data.num_units())?,
                ),
            };
            let model = SequenceModel {
                dependence: cfg.dependence.unwrap_or(Dependence::Markovian),
                rho0,
                alpha,
                mass: *mass,
            };
            run_tasks(chains, threads, |c| {
                run_chain(Some(data), &model, &gauss, &cfg.mcmc, c as u32)
            })?
        }
        PriorSpec::Cpp { rho0, psi, mass } => {
            if data.t_len() != 1 {
                return Err(Error::Config(
                    "the penalized prior fits a single time point".into(),
                ));
            }
            run_tasks(chains, threads, |c| {
                run_chain_cpp(Some(data), rho0, *psi, *mass, &gauss, &cfg.mcmc, c as u32)
            })?
        }
        PriorSpec::Lsp { rho0, nu } => {
            if data.t_len() != 1 {
                return Err(Error::Config(
                    "the sequential prior fits a single time point".into(),
                ));
            }
            run_tasks(chains, threads, |c| {
                run_chain_lsp(Some(data), rho0, *nu, &gauss, &cfg.mcmc, c as u32)
            })?
        }
    };
    DrawsArchive::merge(archives)
}

fn write_outputs(
    args: &CommonArgs,
    cfg: &FitConfig,
    spec: &PriorSpec,
    rho_true: Option<&Partition>,
    archive: &DrawsArchive,
) -> Result<()> {
    std::fs::create_dir_all(&args.out)?;
    let config_echo = serde_json::to_value(cfg)?;
    archive.write_dir(&args.out, Some(&config_echo))?;

    let lp = lpml(archive)?;
    let w = waic(archive)?;
    let ari_rho0 = spec
        .center()
        .map(|r| expected_ari_vs(archive, r))
        .transpose()?;
    let ari_true = rho_true
        .map(|r| expected_ari_vs(archive, r))
        .transpose()?;
    let metrics = serde_json::json!({
        "lpml": lp.lpml,
        "lpml_flagged": lp.flagged,
        "waic": w,
        "expected_ari_vs_rho0": ari_rho0,
        "expected_ari_vs_truth": ari_true,
        "n_draws": archive.num_draws(),
    });
    write_json(&args.out.join("fit_metrics.json"), &metrics)?;

    let cc = coclustering(archive)?;
    let mut rows = Vec::new();
    for t in 0..archive.t_len {
        for i in 0..archive.m {
            for j in 0..archive.m {
                rows.push(vec![
                    archive.time_ids[t].clone(),
                    archive.unit_ids[i].clone(),
                    archive.unit_ids[j].clone(),
                    fmt(cc.at(t, i, j)),
                ]);
            }
        }
    }
    write_csv(
        &args.out.join("cocluster.csv"),
        &["t".into(), "unit_a".into(), "unit_b".into(), "prob".into()],
        &rows,
    )?;

    if cfg.point_estimate {
        let pe_cfg = PointEstimateConfig {
            restarts: cfg.restarts,
            seed: cfg.mcmc.seed,
            ..PointEstimateConfig::default()
        };
        let mut rows = Vec::new();
        for t in 0..archive.t_len {
            let p = point_estimate_vi(archive, t, &pe_cfg)?;
            rows.push(vec![archive.time_ids[t].clone(), p.to_label_string()]);
        }
        write_csv(
            &args.out.join("point_estimate.csv"),
            &["t".into(), "labels".into()],
            &rows,
        )?;
    }

    if archive.t_len >= 2 {
        let la = posterior_lagged_ari(archive)?;
        let mut rows = Vec::new();
        for t in 0..archive.t_len {
            for s in 0..archive.t_len {
                rows.push(vec![
                    archive.time_ids[t].clone(),
                    archive.time_ids[s].clone(),
                    fmt(la.at(t, s)),
                ]);
            }
        }
        write_csv(
            &args.out.join("lagged_ari.csv"),
            &["t".into(), "s".into(), "mean_ari".into()],
            &rows,
        )?;
    }
    args.say(&format!("fit: wrote {}", args.out.display()));
    Ok(())
}
