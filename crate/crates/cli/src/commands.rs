//! One function per subcommand, each producing a [`Table`].

use rayon::prelude::*;

use phasedpc::achievable::{achievable_rate, low_sir_approx, optimize_sectors, sectoring_rate, PhaseBudget};
use phasedpc::bounds::{outage_lower_bound, rate_vs_outage, upper_bound_fade, upper_bound_phase, OutageQuery};
use phasedpc::feedback::{
    effective_rate, training_time, FeedbackMode, FeedbackPlan, QuantizerModel,
};
use phasedpc::mc_oracle::{mc_llse_error, mc_outage, mc_phase_estimator, SampleBatch};
use phasedpc::model::{db_to_linear, rate_ignore_interference, rate_no_interference};
use phasedpc::{achievable::llse_error, ChannelParams, FadeModel};

use crate::args::{BoundArgs, FeedbackArgs, ModeChoice, OutageArgs, SectorArgs, SimKind, SimulateArgs};
use crate::grid::Grid;
use crate::output::{fmt_sig, Table};
use crate::CliError;

const DEFAULT_LLSE_SAMPLES: u64 = 1_000_000;
const DEFAULT_PHASE_TRIALS: u64 = 100_000;
const DEFAULT_OUTAGE_SAMPLES: u64 = 1_000_000;

/// A named list of values, remembered both as typed and in linear units.
#[derive(Debug, Clone)]
struct Axis {
    label: String,
    flag: String,
    shown: Vec<f64>,
    linear: Vec<f64>,
}

impl Axis {
    fn power(name: &str, db: &Option<Grid>, linear: &Option<Grid>) -> Option<Axis> {
        match (db, linear) {
            (Some(g), _) => Some(Axis {
                label: format!("{name}_db"),
                flag: format!("--{}-db", name.replace('_', "-")),
                shown: g.0.clone(),
                linear: g.0.iter().map(|&x| db_to_linear(x)).collect(),
            }),
            (None, Some(g)) => Some(Axis {
                label: format!("{name}_linear"),
                flag: format!("--{}-linear", name.replace('_', "-")),
                shown: g.0.clone(),
                linear: g.0.clone(),
            }),
            (None, None) => None,
        }
    }

    fn plain(name: &str, grid: &Grid) -> Axis {
        Axis {
            label: name.to_string(),
            flag: format!("--{}", name.replace('_', "-")),
            shown: grid.0.clone(),
            linear: grid.0.clone(),
        }
    }

    fn constant(name: &str, x: f64) -> Axis {
        Axis::plain(name, &Grid::single(x))
    }

    fn len(&self) -> usize {
        self.linear.len()
    }

    fn single(&self) -> Result<f64, CliError> {
        if self.len() != 1 {
            return Err(CliError::Usage(format!("{} takes a single value here", self.flag)));
        }
        Ok(self.linear[0])
    }

    /// Value on row `i` of a sweep along `sweep`.
    fn at(&self, sweep: &Axis, i: usize) -> f64 {
        if self.label == sweep.label {
            self.linear[i]
        } else {
            self.linear[0]
        }
    }

    /// Column suffix for a per-value curve, e.g. `q_db_5`.
    fn tag(&self, j: usize) -> String {
        format!("{}_{}", self.label, fmt_sig(self.shown[j]))
    }
}

fn required(axis: Option<Axis>, flags: &str) -> Result<Axis, CliError> {
    axis.ok_or_else(|| CliError::Usage(format!("missing {flags}")))
}

/// The one axis listing several values, or the first axis if none does.
fn sweep_axis<'a>(axes: &[&'a Axis]) -> Result<&'a Axis, CliError> {
    let swept: Vec<&Axis> = axes.iter().copied().filter(|a| a.len() > 1).collect();
    match swept.as_slice() {
        [] => Ok(axes[0]),
        [one] => Ok(one),
        many => {
            let flags: Vec<&str> = many.iter().map(|a| a.flag.as_str()).collect();
            Err(CliError::Usage(format!(
                "only one of {} may list several values",
                flags.join(", ")
            )))
        }
    }
}

/// Evaluates rows in parallel and keeps them in input order.
fn build<F>(columns: Vec<String>, sweep: &Axis, row: F) -> Result<Table, CliError>
where
    F: Fn(usize) -> Result<Vec<f64>, CliError> + Sync + Send,
{
    let rows = (0..sweep.len())
        .into_par_iter()
        .map(|i| {
            let mut r = vec![sweep.shown[i]];
            r.extend(row(i)?);
            Ok(r)
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let mut table = Table::new(columns);
    for r in rows {
        table.push(r);
    }
    Ok(table)
}

fn columns(sweep: &Axis, curves: &[&str]) -> Vec<String> {
    std::iter::once(sweep.label.clone())
        .chain(curves.iter().map(|c| c.to_string()))
        .collect()
}

fn noise(n: Option<Axis>) -> Result<f64, CliError> {
    match n {
        Some(a) => a.single(),
        None => Ok(1.0),
    }
}

pub fn bound(args: &BoundArgs) -> Result<Table, CliError> {
    let p = required(Axis::power("p", &args.p.db, &args.p.linear), "--p-db or --p-linear")?;
    let q = required(Axis::power("q", &args.q.db, &args.q.linear), "--q-db or --q-linear")?;
    let n = noise(Axis::power("n", &args.n.db, &args.n.linear))?;
    let dphi = args.delta_phi.as_ref().map(|g| Axis::plain("delta_phi", g));
    let mut axes = vec![&p, &q];
    if let Some(d) = &dphi {
        axes.push(d);
    }
    let sweep = sweep_axis(&axes)?;
    let mut curves = vec!["upper_bound", "ignore_interference", "no_interference"];
    if dphi.is_some() {
        curves.push("achievable");
    }
    build(columns(sweep, &curves), sweep, |i| {
        let cp = ChannelParams::new(p.at(sweep, i), q.at(sweep, i), n)?;
        let mut row = vec![
            upper_bound_phase(&cp)?,
            rate_ignore_interference(&cp, 1.0)?,
            rate_no_interference(&cp),
        ];
        if let Some(d) = &dphi {
            let pb = PhaseBudget::new(d.at(sweep, i))?;
            row.push(achievable_rate(&cp.normalized(), &pb)?.rate);
        }
        Ok(row)
    })
}

pub fn outage(args: &OutageArgs) -> Result<Table, CliError> {
    let p = required(Axis::power("p", &args.p.db, &args.p.linear), "--p-db or --p-linear")?.single()?;
    let q = required(Axis::power("q", &args.q.db, &args.q.linear), "--q-db or --q-linear")?.single()?;
    let n = noise(Axis::power("n", &args.n.db, &args.n.linear))?;
    let cp = ChannelParams::new(p, q, n)?;
    let sigma2 = Axis::power("sigma2", &args.sigma2.db, &args.sigma2.linear);

    if let Some(g) = &args.gamma {
        let gamma = Axis::plain("gamma", g);
        let s2 = sigma2.map(|a| a.single()).transpose()?;
        let fade = s2.map(FadeModel::rayleigh).transpose()?;
        let mut curves = vec!["upper_bound", "ignore_interference", "no_interference"];
        if fade.is_some() {
            curves.push("rayleigh_pdf");
        }
        return build(columns(&gamma, &curves), &gamma, |i| {
            let gm = gamma.linear[i];
            let mut row = vec![
                upper_bound_fade(&cp, gm)?,
                rate_ignore_interference(&cp, gm)?,
                rate_no_interference(&cp),
            ];
            if let Some(f) = &fade {
                row.push(f.pdf(gm));
            }
            Ok(row)
        });
    }

    let sigma2 = required(sigma2, "--sigma2-db or --sigma2-linear")?;
    if let Some(g) = &args.rate {
        let rate = Axis::plain("rate", g);
        let s2 = sigma2.single()?;
        let curves = ["p_out_lower_bound", "gamma_lo", "gamma_hi"];
        return build(columns(&rate, &curves), &rate, |i| {
            let oq = OutageQuery::committed_rate(cp, s2, rate.linear[i])?;
            let ob = outage_lower_bound(&oq)?;
            let (lo, hi) = ob.interval.unwrap_or((f64::NAN, f64::NAN));
            Ok(vec![ob.probability, lo, hi])
        });
    }

    let p_out = Axis::plain("p_out", args.p_out.as_ref().expect("clap requires one mode"));
    if p_out.len() == 1 && sigma2.len() > 1 {
        let po = p_out.linear[0];
        return build(columns(&sigma2, &["upper_bound"]), &sigma2, |i| {
            let oq = OutageQuery::target_outage(cp, sigma2.linear[i], po)?;
            Ok(vec![rate_vs_outage(&oq)?.rate])
        });
    }
    let curves: Vec<String> = if sigma2.len() == 1 {
        vec!["upper_bound".into()]
    } else {
        (0..sigma2.len()).map(|j| format!("upper_bound_{}", sigma2.tag(j))).collect()
    };
    let cols = std::iter::once(p_out.label.clone()).chain(curves).collect();
    build(cols, &p_out, |i| {
        sigma2
            .linear
            .iter()
            .map(|&s2| {
                let oq = OutageQuery::target_outage(cp, s2, p_out.linear[i])?;
                Ok(rate_vs_outage(&oq)?.rate)
            })
            .collect()
    })
}

pub fn sector(args: &SectorArgs) -> Result<Table, CliError> {
    let p = required(Axis::power("p", &args.p.db, &args.p.linear), "--p-db or --p-linear")?;
    let q = required(Axis::power("q", &args.q.db, &args.q.linear), "--q-db or --q-linear")?;
    let n = noise(Axis::power("n", &args.n.db, &args.n.linear))?;
    let sweep = sweep_axis(&[&p, &q])?;
    let curves = [
        "ignore_interference",
        "sectoring",
        "optimal_k",
        "beats_ignore",
        "low_sir_approx",
    ];
    build(columns(sweep, &curves), sweep, |i| {
        let cp = ChannelParams::new(p.at(sweep, i), q.at(sweep, i), n)?.normalized();
        let ignore = rate_ignore_interference(&cp, 1.0)?;
        let (plan, beats) = match args.k {
            Some(k) => {
                let plan = sectoring_rate(&cp, k)?;
                (plan, plan.rate > ignore + 1e-12)
            }
            None => {
                let s = optimize_sectors(&cp, args.k_max)?;
                (s.best, s.beats_ignore)
            }
        };
        // Zero sectors stands for treating the interference as noise, where
        // the low-SIR approximation has nothing to approximate.
        let (k_shown, approx) = if beats || args.k.is_some() {
            (plan.k as f64, low_sir_approx(&cp, plan.k)?)
        } else {
            (0.0, f64::NAN)
        };
        Ok(vec![ignore, plan.rate, k_shown, if beats { 1.0 } else { 0.0 }, approx])
    })
}

fn coherence_lengths(grid: &Grid) -> Result<Vec<u64>, CliError> {
    grid.0
        .iter()
        .map(|&x| {
            if x >= 1.0 && x.fract() == 0.0 && x < 1e15 {
                Ok(x as u64)
            } else {
                Err(CliError::Usage(format!("--l-coh values must be positive integers, got {x}")))
            }
        })
        .collect()
}

pub fn feedback(args: &FeedbackArgs) -> Result<Table, CliError> {
    let p = required(Axis::power("p", &args.p.db, &args.p.linear), "--p-db or --p-linear")?.single()?;
    let q = required(Axis::power("q", &args.q.db, &args.q.linear), "--q-db or --q-linear")?;
    let l_axis = Axis::plain("l_coh", &args.l_coh);
    let lengths = coherence_lengths(&args.l_coh)?;
    let modes: Vec<(FeedbackMode, &str)> = match args.mode {
        ModeChoice::Contiguous => vec![(FeedbackMode::Contiguous, "r_eff_contiguous")],
        ModeChoice::Bursty => vec![(FeedbackMode::Bursty, "r_eff_bursty")],
        ModeChoice::Both => vec![
            (FeedbackMode::Contiguous, "r_eff_contiguous"),
            (FeedbackMode::Bursty, "r_eff_bursty"),
        ],
    };
    let single_q = q.len() == 1;
    let mut cols = vec![l_axis.label.clone()];
    for j in 0..q.len() {
        for (_, name) in &modes {
            cols.push(if single_q { name.to_string() } else { format!("{name}_{}", q.tag(j)) });
        }
    }
    if single_q {
        cols.extend(["no_interference", "tau", "delta_phi"].map(String::from));
    }
    let plan_for = |qv: f64, l: u64, mode: FeedbackMode| {
        let mut plan = FeedbackPlan::with_grid_points(qv, l, mode, args.grid_points);
        plan.confidence = args.confidence;
        plan.quantizer = args.quantizer.into();
        plan
    };
    build(cols, &l_axis, |i| {
        let l = lengths[i];
        let mut row = Vec::new();
        let mut first = None;
        for &qv in &q.linear {
            let cp = ChannelParams::with_unit_noise(p, qv)?;
            for (mode, _) in &modes {
                let report = effective_rate(&cp, &plan_for(qv, l, *mode))?;
                row.push(report.rate);
                first.get_or_insert((cp, report));
            }
        }
        if single_q {
            let (cp, report) = first.expect("at least one mode");
            row.push(rate_no_interference(&cp));
            row.push(report.get("tau").unwrap_or(f64::NAN));
            row.push(report.get("delta_phi").unwrap_or(f64::NAN));
        }
        Ok(row)
    })
}

fn optional(name: &str, grid: &Option<Grid>, default: f64) -> Axis {
    match grid {
        Some(g) => Axis::plain(name, g),
        None => Axis::constant(name, default),
    }
}

pub fn simulate(args: &SimulateArgs) -> Result<Table, CliError> {
    let p = required(Axis::power("p", &args.p.db, &args.p.linear), "--p-db or --p-linear")?.single()?;
    let q = required(Axis::power("q", &args.q.db, &args.q.linear), "--q-db or --q-linear")?.single()?;
    let n = noise(Axis::power("n", &args.n.db, &args.n.linear))?;
    let cp = ChannelParams::new(p, q, n)?;
    match args.kind {
        SimKind::Llse => simulate_llse(args, cp.normalized()),
        SimKind::Phase => simulate_phase(args, cp),
        SimKind::Outage => simulate_outage(args, cp),
    }
}

fn simulate_llse(args: &SimulateArgs, cp: ChannelParams) -> Result<Table, CliError> {
    let alpha = Axis::plain("alpha", args.alpha.as_ref().ok_or(CliError::Usage("missing --alpha".into()))?);
    let dphi = optional("delta_phi", &args.delta_phi, 0.0);
    let phi = args.phi.as_ref().map(|g| Axis::plain("phi", g));
    let mut axes = vec![&alpha, &dphi];
    if let Some(ph) = &phi {
        axes.push(ph);
    }
    let sweep = sweep_axis(&axes)?;
    let batch = SampleBatch::new(args.seed, args.samples.unwrap_or(DEFAULT_LLSE_SAMPLES));
    let curves = ["llse_error", "mc_llse_error", "mc_std_err", "z_score"];
    build(columns(sweep, &curves), sweep, |i| {
        let (a, d) = (alpha.at(sweep, i), dphi.at(sweep, i));
        let ph = phi.as_ref().map_or(d, |ph| ph.at(sweep, i));
        let exact = llse_error(&cp, a, d, ph)?;
        let mc = mc_llse_error(&cp, a, d, ph, &batch)?;
        Ok(vec![exact, mc.mean, mc.std_err, mc.z_score(exact)])
    })
}

fn simulate_phase(args: &SimulateArgs, cp: ChannelParams) -> Result<Table, CliError> {
    let distortion = Axis::power("distortion", &args.distortion.db, &args.distortion.linear)
        .map(|a| a.single())
        .transpose()?
        .unwrap_or(1.0);
    let dphi = required(args.delta_phi.as_ref().map(|g| Axis::plain("delta_phi", g)), "--delta-phi")?.single()?;
    let qm = QuantizerModel::new(cp.q(), distortion, args.quantizer.into())?;
    let tau = match args.tau {
        Some(t) => t,
        None => training_time(&cp, &qm, dphi, args.confidence)?,
    };
    let phi = optional("true_phi", &args.phi, 0.0);
    let batch = SampleBatch::new(args.seed, args.samples.unwrap_or(DEFAULT_PHASE_TRIALS));
    let curves = [
        "tau",
        "delta_phi",
        "confidence",
        "tail_linearized",
        "tail_exact",
        "tail_std_err",
        "abs_tail_exact",
        "std_linearized",
        "std_exact",
    ];
    build(columns(&phi, &curves), &phi, |i| {
        let s = mc_phase_estimator(&cp, &qm, tau, phi.linear[i], dphi, &batch)?;
        Ok(vec![
            tau as f64,
            dphi,
            args.confidence,
            s.linearized.tail,
            s.exact.tail,
            s.linearized.tail_std_err,
            s.exact.abs_tail,
            s.linearized.std_dev,
            s.exact.std_dev,
        ])
    })
}

fn simulate_outage(args: &SimulateArgs, cp: ChannelParams) -> Result<Table, CliError> {
    let s2 = required(
        Axis::power("sigma2", &args.sigma2.db, &args.sigma2.linear),
        "--sigma2-db or --sigma2-linear",
    )?
    .single()?;
    let rate = Axis::plain("rate", args.rate.as_ref().ok_or(CliError::Usage("missing --rate".into()))?);
    let batch = SampleBatch::new(args.seed, args.samples.unwrap_or(DEFAULT_OUTAGE_SAMPLES));
    let curves = ["p_out_lower_bound", "mc_p_out", "mc_std_err", "z_score"];
    build(columns(&rate, &curves), &rate, |i| {
        let r = rate.linear[i];
        let bound = outage_lower_bound(&OutageQuery::committed_rate(cp, s2, r)?)?.probability;
        let mc = mc_outage(&cp, s2, r, &batch)?;
        Ok(vec![bound, mc.mean, mc.std_err, mc.z_score(bound)])
    })
}
