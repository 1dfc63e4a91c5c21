use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Args;

use walklearn::engine::{parse_profiles_csv, RunSummary};
use walklearn::oracle::{sleeping_regret, RegretMode};

#[derive(Args, Debug)]
pub struct RegretArgs {
    /// A completed run directory with exact cost metrics enabled.
    #[arg(long)]
    pub run_dir: PathBuf,
    /// Output CSV path; defaults to <run-dir>/regret.csv.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Additionally emit a gnuplot script.
    #[arg(long)]
    pub gnuplot_script: bool,
    /// Additionally print the final regret rates.
    #[arg(long)]
    pub pretty: bool,
}

const REGRET_PLOT: &str = r#"set datafile separator ','
set key autotitle columnhead
set xlabel 'round'
set terminal pngcairo size 900,600
set output 'regret.png'
plot 'regret.csv' using 1:3 with lines title 'R(k)/k available-min', \
     'regret.csv' using 1:5 with lines title 'R(k)/k best-fixed'
"#;

pub fn execute(args: RegretArgs) -> Result<()> {
    let summary_path = args.run_dir.join("summary.json");
    let summary: RunSummary = serde_json::from_str(
        &std::fs::read_to_string(&summary_path)
            .with_context(|| format!("reading {}", summary_path.display()))?,
    )
    .with_context(|| format!("parsing {}", summary_path.display()))?;

    let profiles_path = args.run_dir.join("profiles.csv");
    if !profiles_path.exists() {
        anyhow::bail!(
            "{} has no profiles.csv; re-run with exact_cost_metrics enabled to record per-round costs",
            args.run_dir.display()
        );
    }
    let (visits, profiles) = parse_profiles_csv::<f64>(
        &std::fs::read_to_string(&profiles_path)
            .with_context(|| format!("reading {}", profiles_path.display()))?,
    )?;

    let graph = summary.config.graph.build()?;
    let min_series = sleeping_regret(&visits, &profiles, &graph, RegretMode::PerRoundAvailableMin)?;
    let fixed_series = sleeping_regret(&visits, &profiles, &graph, RegretMode::BestFixedNode)?;

    let mut csv = String::from(
        "k,regret_available_min,rate_available_min,regret_best_fixed,rate_best_fixed\n",
    );
    for ((visit, rmin), rfix) in visits.iter().zip(&min_series).zip(&fixed_series) {
        let k = visit.round as f64;
        csv.push_str(&format!(
            "{},{},{},{},{}\n",
            visit.round,
            rmin,
            rmin / k,
            rfix,
            rfix / k
        ));
    }
    let out_path = args
        .out
        .clone()
        .unwrap_or_else(|| args.run_dir.join("regret.csv"));
    std::fs::write(&out_path, &csv)?;
    if args.gnuplot_script {
        std::fs::write(args.run_dir.join("regret.gp"), REGRET_PLOT)?;
    }

    let final_round = visits.last().map_or(0, |v| v.round);
    let final_min = min_series.last().copied().unwrap_or(0.0);
    let final_fixed = fixed_series.last().copied().unwrap_or(0.0);
    println!(
        "{}",
        serde_json::json!({
            "command": "regret",
            "rounds": final_round,
            "regret_available_min": final_min,
            "rate_available_min": if final_round > 0 { final_min / final_round as f64 } else { 0.0 },
            "regret_best_fixed": final_fixed,
            "rate_best_fixed": if final_round > 0 { final_fixed / final_round as f64 } else { 0.0 },
            "out": out_path,
        })
    );
    if args.pretty {
        eprintln!("rounds                 : {final_round}");
        eprintln!("R(T) available-min     : {final_min:.6}");
        eprintln!("R(T) best-fixed        : {final_fixed:.6}");
    }
    Ok(())
}
