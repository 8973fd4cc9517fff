use rayon::prelude::*;
use serde_json::json;

use duetherm_core::entangle::{
    critical_temperature, gaussian_state, nu_from_works, nu_strong_closed, CriticalMode,
    EntangleError,
};
use duetherm_core::model::{validate_params, EngineParams, RawParams, Topology};
use duetherm_core::pareto::{
    attainable_ladder, build_forms, max_power_point, min_entropy_point, pareto_front,
    spectral_support, Norms,
};
use duetherm_core::response::{chi2, hybrid_frequency, normal_modes};
use duetherm_core::thermo::{max_power, power_map as map_cells, works_and_delta, GridSpec};

use crate::config::Config;
use crate::output::{Cell, Outputs};
use crate::{row, CliError, Profile, RunSummary};

pub struct Context {
    pub profile: Profile,
    pub seed: u64,
}

fn engine(raw: &RawParams, edit: impl FnOnce(&mut RawParams)) -> Result<EngineParams, CliError> {
    let mut r = raw.clone();
    edit(&mut r);
    Ok(validate_params(&r)?)
}

fn snapshot<T: serde::Serialize>(params: &EngineParams, section: &T) -> serde_json::Value {
    json!({ "params": params, "section": section })
}

pub fn response(cfg: &Config, _ctx: &Context, out: &mut Outputs) -> Result<RunSummary, CliError> {
    let sec = cfg.response.clone().unwrap_or_default();
    let base = engine(&cfg.params, |_| {})?;
    let mut rows = Vec::new();
    for &g in &sec.gamma2 {
        let p = engine(&cfg.params, |r| r.gamma2 = Some(g))?;
        for w in sec.omega.linear() {
            let m = chi2(&p, w)
                .map_err(|e| CliError::Numerics(e.to_string()))?
                .imag();
            rows.push(row![g, w, m[0][0], m[0][1], m[1][1], m[0][0] + m[1][1]]);
        }
    }
    out.csv(
        "response.csv",
        &["gamma2", "omega", "chi_aa", "chi_ab", "chi_bb", "lambda"],
        &rows,
    )?;
    Ok(RunSummary {
        config: snapshot(&base, &sec),
        seeds: Vec::new(),
        panels: 0,
        details: json!({ "hybrid_frequency": hybrid_frequency(&base) }),
    })
}

pub fn poles(cfg: &Config, _ctx: &Context, out: &mut Outputs) -> Result<RunSummary, CliError> {
    let sec = cfg.poles.clone().unwrap_or_default();
    let base = engine(&cfg.params, |_| {})?;
    let mut rows = Vec::new();
    for g in sec.gamma2.log() {
        let p = engine(&cfg.params, |r| r.gamma2 = Some(g))?;
        let z = normal_modes(&p).zeros;
        let mut r: Vec<Cell> = vec![g.into()];
        for zk in z {
            r.push(zk.re.into());
            r.push(zk.im.into());
        }
        rows.push(r);
    }
    out.csv(
        "poles.csv",
        &[
            "gamma2", "z1_re", "z1_im", "z2_re", "z2_im", "z3_re", "z3_im", "z4_re", "z4_im",
        ],
        &rows,
    )?;
    Ok(RunSummary {
        config: snapshot(&base, &sec),
        seeds: Vec::new(),
        panels: 0,
        details: json!({ "hybrid_frequency": hybrid_frequency(&base) }),
    })
}

pub fn power_map(cfg: &Config, ctx: &Context, out: &mut Outputs) -> Result<RunSummary, CliError> {
    let sec = cfg.power_map.clone().unwrap_or_default();
    let p = engine(&cfg.params, |_| {})?;
    let grid = GridSpec {
        omega: (0.0, sec.omega_max),
        omega1: (0.0, sec.omega1_max),
        resolution: sec.resolution.unwrap_or(ctx.profile.grid()),
    };
    let (cells, panels) = map_cells(&p, &grid, &sec.phis)?;
    let rows: Vec<Vec<Cell>> = cells
        .iter()
        .map(|c| row![c.omega1, c.omega, c.p_tilde, c.phi])
        .collect();
    out.csv(
        "power_map.csv",
        &["omega1", "Omega", "P_tilde", "phi_star"],
        &rows,
    )?;
    let best = cells.iter().min_by(|a, b| a.p_tilde.total_cmp(&b.p_tilde));
    Ok(RunSummary {
        config: snapshot(&p, &json!({ "section": sec, "grid": grid })),
        seeds: Vec::new(),
        panels,
        details: json!({ "best_cell": best }),
    })
}

pub fn power_max(cfg: &Config, ctx: &Context, out: &mut Outputs) -> Result<RunSummary, CliError> {
    let sec = cfg.power_max.clone().unwrap_or_default();
    let base = engine(&cfg.params, |_| {})?;
    let grid = GridSpec {
        omega: (0.0, sec.omega_max),
        omega1: (0.0, sec.omega1_max),
        resolution: sec.resolution.unwrap_or(ctx.profile.grid()),
    };
    let mut rows = Vec::new();
    for &topology in &sec.topologies {
        for &wb in &sec.omega_b {
            for g in sec.gamma2.log() {
                let p = engine(&cfg.params, |r| {
                    r.gamma2 = Some(g);
                    r.omega_b = Some(wb);
                    r.topology = Some(topology);
                })?;
                let m = max_power(&p, &grid, &sec.phis)?;
                rows.push(row![
                    topology.to_string(),
                    wb,
                    g,
                    m.p_tilde,
                    m.omega1,
                    m.omega,
                    m.phi
                ]);
            }
        }
    }
    out.csv(
        "power_max.csv",
        &[
            "topology",
            "omega_b",
            "gamma2",
            "P_tilde_max",
            "omega1_star",
            "Omega_star",
            "phi_star",
        ],
        &rows,
    )?;
    Ok(RunSummary {
        config: snapshot(&base, &json!({ "section": sec, "grid": grid })),
        seeds: Vec::new(),
        panels: 0,
        details: serde_json::Value::Null,
    })
}

/// `ω₁` of the monochromatic maximum power, on a coarse grid with refinement.
fn max_power_omega1(p: &EngineParams) -> Result<f64, CliError> {
    let grid = GridSpec {
        omega: (0.0, 0.5 * p.omega_a),
        omega1: (0.0, 2.0 * p.omega_a),
        resolution: (50, 100),
    };
    Ok(max_power(p, &grid, &[0.0, std::f64::consts::PI])?.omega1)
}

pub fn pareto(cfg: &Config, ctx: &Context, out: &mut Outputs) -> Result<RunSummary, CliError> {
    let sec = cfg.pareto.clone().unwrap_or_default();
    let (fundamental, n_max, settings) = sec.resolved(ctx.profile);
    let base = engine(&cfg.params, |_| {})?;
    let omega1 = match sec.omega1 {
        Some(w) => w,
        None => max_power_omega1(&base)?,
    };
    let norms = Norms {
        a: sec.norms.0,
        b: sec.norms.1,
    };
    let mut panels = 0;
    let mut seeds = Vec::new();
    let mut details = Vec::new();
    for &topology in &sec.topologies {
        let p = engine(&cfg.params, |r| {
            r.omega1 = Some(omega1);
            r.topology = Some(topology);
        })?;
        let forms = build_forms(&p, fundamental, n_max)?;
        panels += forms.panels;
        let top = max_power_point(&forms, norms, ctx.seed, &settings);
        let floor = min_entropy_point(&forms, norms, ctx.seed, &settings);
        let ladder = attainable_ladder(
            floor.sigma,
            top.sigma,
            sec.ladder_lo_fraction,
            sec.ladder_floor_margin,
            sec.ladder_points,
        );
        seeds.extend((0..ladder.len() as u64).map(|i| ctx.seed.wrapping_add(i)));
        let front = pareto_front(&forms, &ladder, norms, ctx.seed, &settings);
        let on_front =
            |c: &duetherm_core::pareto::FrontPoint| front.points.iter().position(|q| q == c);
        let carnot = p.carnot();
        let mut rows = Vec::new();
        let mut spectra = Vec::new();
        for (target, c) in ladder.iter().zip(&front.candidates) {
            let idx = on_front(c);
            let s = p.sigma_tilde(c.sigma);
            rows.push(row![
                *target,
                s,
                p.power_tilde(c.neg_power),
                c.eta / carnot,
                c.converged,
                idx.is_some(),
                idx.is_some_and(|i| front.eta_front.contains(&i)),
            ]);
            if idx.is_none() {
                continue;
            }
            for (l, name) in ["A", "B"].iter().enumerate() {
                for (k, g) in c.drive.coeffs[l].iter().enumerate() {
                    let g2 = 2.0 * g * g;
                    if g2 > 1e-12 {
                        spectra.push(row![s, *name, (k + 1) as f64 * fundamental, g2]);
                    }
                }
            }
        }
        out.csv(
            &format!("pareto_front_{topology}.csv"),
            &[
                "sigma_target",
                "sigma_tilde",
                "P_tilde_neg",
                "eta_over_etaC",
                "converged",
                "on_front",
                "on_eta_front",
            ],
            &rows,
        )?;
        out.csv(
            &format!("pareto_spectra_{topology}.csv"),
            &["sigma_tilde", "l", "omega", "g_squared"],
            &spectra,
        )?;
        let support = spectral_support(&top.drive, sec.support_mass);
        details.push(json!({
            "topology": topology,
            "max_power": { "P_tilde": p.power_tilde(top.power), "sigma_tilde": p.sigma_tilde(top.sigma), "support": support },
            "min_sigma_tilde": p.sigma_tilde(floor.sigma),
            "front_points": front.points.len(),
            "eta_front_points": front.eta_front.len(),
            "converged": front.candidates.iter().filter(|c| c.converged).count(),
        }));
    }
    Ok(RunSummary {
        config: snapshot(
            &base,
            &json!({
                "section": sec,
                "omega1": omega1,
                "fundamental": fundamental,
                "n_max": n_max,
                "optimizer": settings,
            }),
        ),
        seeds,
        panels,
        details: json!(details),
    })
}

fn nan_on_no_root(r: Result<f64, EntangleError>) -> Result<f64, CliError> {
    match r {
        Ok(t) => Ok(t),
        Err(EntangleError::NoRoot { .. }) => Ok(f64::NAN),
        Err(e) => Err(e.into()),
    }
}

pub fn entangle(
    cfg: &Config,
    _ctx: &Context,
    from_works: bool,
    out: &mut Outputs,
) -> Result<RunSummary, CliError> {
    let sec = cfg.entangle.clone().unwrap_or_default();
    let base = engine(&cfg.params, |_| {})?;
    let mut points = Vec::new();
    for &wb in &sec.omega_b {
        for &g in &sec.gamma2 {
            for t in sec.t2.linear() {
                points.push(engine(&cfg.params, |r| {
                    r.omega_b = Some(wb);
                    r.gamma2 = Some(g);
                    r.t2 = Some(t);
                })?);
            }
        }
    }
    let states: Vec<(f64, f64)> = points
        .par_iter()
        .map(|p| gaussian_state(p).map(|s| (s.nu_tilde, s.log_negativity)))
        .collect::<Result<_, _>>()?;
    let rows: Vec<Vec<Cell>> = points
        .iter()
        .zip(&states)
        .map(|(p, (nu, en))| row![p.omega_b, p.gamma2, p.t2, *nu, *en])
        .collect();
    out.csv(
        "entangle_sweep.csv",
        &["omega_b", "gamma2", "T2", "nu_tilde", "E_n"],
        &rows,
    )?;

    let mut curve = Vec::new();
    for &g in &sec.critical_gamma2 {
        for wb in sec.critical_omega_b.linear() {
            curve.push(engine(&cfg.params, |r| {
                r.omega_b = Some(wb);
                r.gamma2 = Some(g);
            })?);
        }
    }
    let temps: Vec<(f64, f64)> = curve
        .par_iter()
        .map(|p| {
            let tc = nan_on_no_root(critical_temperature(p, CriticalMode::Exact))?;
            let ts = nan_on_no_root(critical_temperature(p, CriticalMode::StrongLimit))?;
            Ok((tc, ts))
        })
        .collect::<Result<_, CliError>>()?;
    let rows: Vec<Vec<Cell>> = curve
        .iter()
        .zip(&temps)
        .map(|(p, (tc, ts))| row![p.gamma2, p.omega_b, *tc, *ts])
        .collect();
    out.csv(
        "entangle_critical.csv",
        &["gamma2", "omega_b", "T_c", "T_star"],
        &rows,
    )?;

    let mut details = serde_json::Value::Null;
    if from_works {
        let w = &sec.works;
        let p = engine(&cfg.params, |r| {
            r.gamma2 = Some(w.gamma2);
            r.gamma1 = Some(w.gamma1);
            r.omega1 = Some(w.omega1_star);
            r.topology = Some(Topology::Joint);
        })?;
        let h = hybrid_frequency(&p);
        if w.omega1_star >= h {
            return Err(CliError::Config {
                message: format!(
                    "entangle.works.omega1_star = {} must lie below the hybrid frequency {h}",
                    w.omega1_star
                ),
                missing_keys: Vec::new(),
            });
        }
        let w0 = works_and_delta(&p, w.omega1_star, 0.0)?;
        let wpi = works_and_delta(&p, w.omega1_star, std::f64::consts::PI)?;
        let nu2_works = nu_from_works(w0.delta, wpi.delta, p.t2, h)?;
        let nu2_closed = nu_strong_closed(&p).powi(2);
        let rel = (nu2_works - nu2_closed) / nu2_closed;
        details = json!({
            "nu2_works": nu2_works,
            "nu2_closed": nu2_closed,
            "relative_difference": rel,
            "delta_w_0": w0.delta,
            "delta_w_pi": wpi.delta,
        });
        println!("{details}");
    }
    Ok(RunSummary {
        config: snapshot(&base, &sec),
        seeds: Vec::new(),
        panels: 0,
        details,
    })
}
