use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use etngen::bucket::{auto_periodicity, Bucketing, Periodicity};
use etngen::dynamics::{run_probes, DynConfig, DynError, DynReport};
use etngen::etn::{mine_counts, EtnCounts};
use etngen::gen::{expansion_alpha, generate, write_diagnostics_csv, GenConfig, Generated};
use etngen::metrics::{compare_reports, DistanceKind, MetricReport};
use etngen::model::{fit, LocalModel, ModelMeta};
use etngen::synthetic::{daily_sinusoid, weekly_office, ActivitySpec, MONDAY_EPOCH};
use etngen::tempgraph::{parse_edge_list, write_edge_list, TemporalGraph};
use log::{info, warn};

use crate::args::{Alpha, EvalArgs, FitArgs, GenerateArgs, PeriodicityArg, PipelineArgs, SynthArgs, SynthKind};
use crate::config::{gap, EvalSettings, FileConfig, FitSettings, GenSettings};
use crate::error::{CliError, CliResult};

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::output(dir, e))?;
    }
    File::create(path).map(BufWriter::new).map_err(|e| CliError::output(path, e))
}

fn write_with(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>) -> CliResult<()> {
    let mut sink = create(path)?;
    f(&mut sink).and_then(|_| sink.flush()).map_err(|e| CliError::output(path, e))
}

pub fn read_graph(path: &Path, gap: u64) -> CliResult<TemporalGraph> {
    let file = File::open(path).map_err(|e| CliError::input(path, e))?;
    let (g, stats) = parse_edge_list(BufReader::new(file), gap).map_err(|e| CliError::input(path, e))?;
    info!(
        "{}: {} nodes, {} snapshots of {} s, {} events ({} self-loops skipped, {} duplicates collapsed)",
        path.display(),
        g.node_count(),
        g.len(),
        g.gap(),
        stats.events,
        stats.self_loops_skipped,
        stats.duplicates_collapsed
    );
    Ok(g)
}

fn write_graph(path: &Path, g: &TemporalGraph) -> CliResult<()> {
    let sink = create(path)?;
    write_edge_list(g, sink).map_err(|e| CliError::output(path, e))
}

fn periodicity(arg: PeriodicityArg, g: &TemporalGraph) -> Periodicity {
    match arg {
        PeriodicityArg::Daily => Periodicity::Daily,
        PeriodicityArg::Weekly => Periodicity::Weekly,
        PeriodicityArg::Auto => {
            let p = auto_periodicity(g);
            info!("periodicity auto-detected as {p}");
            p
        }
    }
}

fn fit_graph(g: &TemporalGraph, settings: &FitSettings) -> CliResult<(LocalModel, EtnCounts)> {
    let p = periodicity(settings.periodicity, g);
    let counts = mine_counts(g, settings.k, &Bucketing::for_graph(g, p)).map_err(|e| CliError::data(e.to_string()))?;
    let model = fit(&counts, ModelMeta::of_graph(g, p))?;
    println!(
        "fitted k={} {}: {} buckets, {} prefixes, {} signatures",
        model.k(),
        model.periodicity(),
        model.bucket_count(),
        model.tables().len(),
        model.signature_count()
    );
    Ok((model, counts))
}

fn save_model(path: &Path, model: &LocalModel) -> CliResult<()> {
    let sink = create(path)?;
    model.save(sink).map_err(|e| CliError::output(path, e))
}

pub fn cmd_fit(args: &FitArgs, file: &FileConfig) -> CliResult<()> {
    let settings = FitSettings::resolve(&args.opts, file)?;
    let g = read_graph(&args.input, settings.gap)?;
    let (model, counts) = fit_graph(&g, &settings)?;
    save_model(&args.out, &model)?;
    if let Some(path) = &args.counts {
        write_with(path, |w| counts.write_dump(w))?;
    }
    Ok(())
}

fn read_degrees(path: &Path) -> CliResult<Vec<u32>> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::input(path, e))?;
    text.lines()
        .map(|l| l.split('#').next().unwrap_or(""))
        .flat_map(str::split_whitespace)
        .map(|tok| tok.parse::<u32>().map_err(|_| CliError::input(path, format!("bad degree {tok:?}"))))
        .collect()
}

fn gen_config(model: &LocalModel, settings: &GenSettings, default_snapshots: Option<usize>) -> CliResult<GenConfig> {
    let native = model.meta().node_count;
    let n = settings.nodes.unwrap_or(native);
    let m = settings
        .snapshots
        .or(default_snapshots)
        .ok_or_else(|| CliError::usage("--snapshots is required"))?;
    if n < 2 {
        return Err(CliError::usage(format!("--nodes must be at least 2, got {n}")));
    }
    let seed_degrees = match &settings.seed_degrees {
        Some(path) => Some(read_degrees(path)?),
        None if n != native && !settings.resample_degrees => {
            return Err(CliError::usage(format!(
                "--nodes {n} differs from the model's {native} nodes: pass --seed-degrees or --resample-degrees"
            )))
        }
        None => None,
    };
    let alpha = match settings.alpha {
        Alpha::Fixed(a) => a,
        Alpha::Auto => {
            let a = expansion_alpha(native, n);
            info!("alpha = {a:.2} (expanding {native} to {n} nodes)");
            a
        }
    };
    Ok(GenConfig { n_nodes: n, n_snapshots: m, k: model.k(), alpha, seed: settings.seed, epoch: None, seed_degrees })
}

fn write_generated(out: &Path, diagnostics: &Path, generated: &Generated) -> CliResult<()> {
    write_graph(out, &generated.graph)?;
    write_with(diagnostics, |w| write_diagnostics_csv(&generated.diagnostics, w))?;
    let total = generated.graph.total_edges();
    println!(
        "generated {} nodes x {} snapshots, {} edges ({:.3} per snapshot)",
        generated.graph.node_count(),
        generated.graph.len(),
        total,
        total as f64 / generated.graph.len() as f64
    );
    Ok(())
}

fn diagnostics_path(out: &Path) -> PathBuf {
    let mut name = out.file_name().unwrap_or_default().to_os_string();
    name.push(".diagnostics.csv");
    out.with_file_name(name)
}

pub fn cmd_generate(args: &GenerateArgs, file: &FileConfig) -> CliResult<()> {
    let settings = GenSettings::resolve(&args.opts, file)?;
    let source = File::open(&args.model).map_err(|e| CliError::input(&args.model, e))?;
    let model = LocalModel::load(BufReader::new(source)).map_err(|e| CliError::input(&args.model, e))?;
    let cfg = gen_config(&model, &settings, None)?;
    let generated = generate(&model, &cfg)?;
    let diagnostics = args.diagnostics.clone().unwrap_or_else(|| diagnostics_path(&args.out));
    write_generated(&args.out, &diagnostics, &generated)
}

fn dynamics_distances<'a>(
    rows: &mut Vec<String>,
    comparison: &str,
    a: &'a DynReport,
    b: &'a DynReport,
    kinds: &[DistanceKind],
) {
    let mut probes: Vec<(&str, String, &'a [f64], &'a [f64])> = vec![
        ("coverage", String::new(), a.coverage.as_slice(), b.coverage.as_slice()),
        ("mfpt", String::new(), a.mfpt.samples.as_slice(), b.mfpt.samples.as_slice()),
    ];
    let lambdas: Vec<f64> = a.r0.iter().chain(&b.r0).map(|(l, _, _)| *l).collect();
    let r0 = |r: &'a DynReport, lambda: f64| r.r0.iter().find(|(l, _, _)| *l == lambda).map_or(&[][..], |(_, s, _)| s.as_slice());
    for (i, &lambda) in lambdas.iter().enumerate() {
        if !lambdas[..i].contains(&lambda) {
            probes.push(("r0", lambda.to_string(), r0(a, lambda), r0(b, lambda)));
        }
    }
    for (probe, lambda, sa, sb) in probes {
        if sa.is_empty() && sb.is_empty() {
            continue;
        }
        for &kind in kinds {
            // one-sided samples have no defined distance
            let v = kind.apply(sa, sb).unwrap_or(f64::NAN);
            rows.push(format!("{comparison},{probe},{},{lambda},{kind},{v}", a.start));
        }
    }
}

/// Probes at one start; SIR is skipped with a warning when no node is in
/// contact at the start snapshot.
fn probes(g: &TemporalGraph, name: &str, cfg: &DynConfig, settings: &EvalSettings) -> CliResult<DynReport> {
    match run_probes(g, cfg, &settings.lambdas, settings.walk, settings.sir) {
        Err(DynError::NoConnectedNode(t)) if settings.sir => {
            warn!("{name}: no contacts at snapshot {t} (start {}), SIR skipped", cfg.start);
            Ok(run_probes(g, cfg, &settings.lambdas, settings.walk, false)?)
        }
        other => Ok(other?),
    }
}

fn evaluate(original: &TemporalGraph, surrogate: &TemporalGraph, settings: &EvalSettings, out_dir: &Path) -> CliResult<()> {
    if original.gap() != surrogate.gap() {
        return Err(CliError::data(format!("snapshot widths differ: {} s vs {} s", original.gap(), surrogate.gap())));
    }
    std::fs::create_dir_all(out_dir).map_err(|e| CliError::output(out_dir, e))?;

    let a = MetricReport::compute(original)?;
    let b = MetricReport::compute(surrogate)?;
    let report = compare_reports(&a, &b, &settings.distances);
    write_with(&out_dir.join("metrics_original.csv"), |w| a.write_samples_csv(w))?;
    write_with(&out_dir.join("metrics_surrogate.csv"), |w| b.write_samples_csv(w))?;
    write_with(&out_dir.join("topology_distances.csv"), |w| report.write_csv(w))?;
    write_with(&out_dir.join("topology_summary.csv"), |w| report.write_summary_csv(w))?;
    if let Some(&kind) = settings.distances.first() {
        let worst = report.values.iter().filter(|((_, k), v)| *k == kind && v.is_finite()).map(|(_, v)| *v).fold(0.0, f64::max);
        println!("topology: {} metrics, largest {kind} = {worst:.4}", a.samples.len());
    }

    if !settings.walk && !settings.sir {
        return Ok(());
    }
    let mut networks: Vec<(&str, Vec<DynReport>)> = vec![("original", Vec::new()), ("surrogate", Vec::new())];
    if settings.stability {
        networks.push(("resimulation", Vec::new()));
    }
    for &start in &settings.starts {
        let cfg = settings.dyn_config(start);
        networks[0].1.push(probes(original, "original", &cfg, settings)?);
        networks[1].1.push(probes(surrogate, "surrogate", &cfg, settings)?);
        if settings.stability {
            let cfg = DynConfig { seed: cfg.seed.wrapping_add(1), ..cfg };
            networks[2].1.push(probes(original, "original", &cfg, settings)?);
        }
    }
    for (name, reports) in &networks {
        write_with(&out_dir.join(format!("dynamics_samples_{name}.csv")), |w| {
            reports.iter().enumerate().try_for_each(|(i, r)| r.write_samples_csv(&mut *w, i == 0))
        })?;
        write_with(&out_dir.join(format!("dynamics_series_{name}.csv")), |w| {
            reports.iter().enumerate().try_for_each(|(i, r)| r.write_series_csv(&mut *w, i == 0))
        })?;
    }
    if settings.sir {
        for (i, start) in settings.starts.iter().enumerate() {
            for &lambda in &settings.lambdas {
                write_with(&out_dir.join(format!("r0_{start}_{lambda}.csv")), |w| {
                    writeln!(w, "network,run,r0")?;
                    for (name, reports) in &networks {
                        let samples = reports[i].r0.iter().find(|(l, _, _)| *l == lambda).map_or(&[][..], |(_, s, _)| s);
                        for (run, v) in samples.iter().enumerate() {
                            writeln!(w, "{name},{run},{v}")?;
                        }
                    }
                    Ok(())
                })?;
            }
        }
    }
    let mut rows = Vec::new();
    for i in 0..settings.starts.len() {
        dynamics_distances(&mut rows, "surrogate", &networks[0].1[i], &networks[1].1[i], &settings.distances);
        if settings.stability {
            dynamics_distances(&mut rows, "resimulation", &networks[0].1[i], &networks[2].1[i], &settings.distances);
        }
    }
    write_with(&out_dir.join("dynamics_distances.csv"), |w| {
        writeln!(w, "comparison,probe,start,lambda,distance,value")?;
        rows.iter().try_for_each(|r| writeln!(w, "{r}"))
    })?;
    for r in networks[0].1.iter().chain(&networks[1].1) {
        if r.mfpt.censored > 0 {
            warn!("{} first-passage walks from start {} never reached their target", r.mfpt.censored, r.start);
        }
    }
    println!("dynamics: {} starts, results in {}", settings.starts.len(), out_dir.display());
    Ok(())
}

pub fn cmd_eval(args: &EvalArgs, file: &FileConfig) -> CliResult<()> {
    let settings = EvalSettings::resolve(&args.opts, args.seed, file)?;
    let gap = gap(args.gap, file)?;
    for path in [&args.original, &args.surrogate] {
        if !path.exists() {
            return Err(CliError::usage(format!("no such file: {}", path.display())));
        }
    }
    let original = read_graph(&args.original, gap)?;
    let surrogate = read_graph(&args.surrogate, gap)?;
    evaluate(&original, &surrogate, &settings, &args.out_dir)
}

pub fn cmd_pipeline(args: &PipelineArgs, file: &FileConfig) -> CliResult<()> {
    let fit_settings = FitSettings::resolve(&args.fit, file)?;
    let gen_settings = GenSettings::resolve(&args.gen, file)?;
    let eval_settings = EvalSettings::resolve(&args.eval, Some(gen_settings.seed), file)?;
    let g = read_graph(&args.input, fit_settings.gap)?;
    let (model, counts) = fit_graph(&g, &fit_settings)?;
    save_model(&args.out_dir.join("model.json"), &model)?;
    write_with(&args.out_dir.join("counts.tsv"), |w| counts.write_dump(w))?;
    let cfg = gen_config(&model, &gen_settings, Some(g.len()))?;
    let generated = generate(&model, &cfg)?;
    write_generated(&args.out_dir.join("surrogate.tsv"), &args.out_dir.join("diagnostics.csv"), &generated)?;
    evaluate(&g, &generated.graph, &eval_settings, &args.out_dir)
}

pub fn cmd_synth(args: &SynthArgs) -> CliResult<()> {
    if args.nodes < 2 || args.gap == 0 {
        return Err(CliError::usage("synth needs at least 2 nodes and a positive gap"));
    }
    let per_day = (86_400 / args.gap).max(1) as usize;
    let spec = |days: usize| ActivitySpec {
        nodes: args.nodes,
        snapshots: args.snapshots.unwrap_or(days * per_day),
        gap: args.gap,
        epoch: MONDAY_EPOCH,
        persistence: 0.6,
        seed: args.seed,
    };
    let scale = args.nodes as f64 / 10.0;
    let g = match args.kind {
        SynthKind::Daily => daily_sinusoid(&spec(2), 0.05 * scale, 2.0 * scale),
        SynthKind::Weekly => weekly_office(&spec(14), 2.0 * scale, 0.4 * scale, 0.02 * scale),
    };
    write_graph(&args.out, &g)?;
    println!("wrote {} nodes x {} snapshots, {} edges", g.node_count(), g.len(), g.total_edges());
    Ok(())
}
