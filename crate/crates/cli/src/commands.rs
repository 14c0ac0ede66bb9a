use std::fs;
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{bail, ensure, Context, Result};
use cogrip::env::EnvConfig;
use cogrip::language::{vocab, PreferenceOrder};
use cogrip::oracle::{evaluate, evaluate_logged, EvalReport, FollowerKind};
use cogrip::taskfile::{read_benchmark, write_benchmark};
use cogrip::tasks::{build_benchmark, make_splits, Benchmark, TaskSelector};
use cogrip::trajectory::{replay as replay_log, Trajectory};
use cogrip::{CoGripEnv, Frame, Task, DEFAULT_SEED};
use cogrip_service::{ServiceConfig, TaskLibrary};

use crate::config::{pick, FileConfig};
use crate::{EvalArgs, GenTasksArgs, RenderArgs, ReplayArgs, ServeArgs};

pub const VOCAB_FILE: &str = "vocab.txt";

fn load_benchmark(dir: Option<&Path>, seed: u64) -> Result<Benchmark> {
    match dir {
        Some(dir) => read_benchmark(dir).with_context(|| format!("reading tasks from {}", dir.display())),
        None => Ok(build_benchmark(&make_splits(seed), seed)?),
    }
}

fn selector(split: &str, map_size: Option<usize>, pieces: Option<usize>) -> Result<TaskSelector> {
    let mut sel: TaskSelector = split.parse()?;
    if map_size.is_some() {
        sel.map_size = map_size;
    }
    if pieces.is_some() {
        sel.n_pieces = pieces;
    }
    Ok(sel)
}

fn select(bench: &Benchmark, sel: &TaskSelector) -> Result<Vec<Task>> {
    let tasks = bench.select(sel);
    ensure!(!tasks.is_empty(), "no tasks match {sel}");
    Ok(tasks)
}

pub fn gen_tasks(args: GenTasksArgs, file: &FileConfig) -> Result<ExitCode> {
    let seed = pick(args.seed, file.seed, DEFAULT_SEED);
    let out = pick(args.out, file.out.clone(), PathBuf::from("tasks"));
    let splits = make_splits(seed);
    let bench = build_benchmark(&splits, seed)?;
    let manifest = write_benchmark(&out, &bench).with_context(|| format!("writing {}", out.display()))?;
    fs::write(out.join(VOCAB_FILE), vocab::vocab_listing())?;

    println!("seed {seed} -> {}", out.display());
    println!(
        "symbols: train {} / val {} / test {} / holdout {}",
        splits.train.len(),
        splits.val.len(),
        splits.test.len(),
        splits.holdout.len()
    );
    for set in &manifest.sets {
        println!("  {:<14} {:>5}  {}", set.name, set.count, set.file);
    }
    let t = &manifest.totals;
    let get = |k: &str| t.get(k).copied().unwrap_or(0);
    println!(
        "tasks: train {} / val {} / test {} (+{} at 30x30) / holdout {}",
        get("train"),
        get("val"),
        get("test20"),
        get("test30"),
        get("holdout")
    );
    Ok(ExitCode::SUCCESS)
}

pub fn serve(args: ServeArgs, file: &FileConfig) -> Result<ExitCode> {
    let seed = pick(args.seed, file.seed, DEFAULT_SEED);
    let defaults = ServiceConfig::default();
    let port = pick(args.port, file.port, defaults.port);
    let secs = |flag: Option<u64>, f: Option<u64>, d: Duration| flag.or(f).map(Duration::from_secs).unwrap_or(d);
    let config = ServiceConfig {
        port,
        ws_port: Some(args.ws_port.or(file.ws_port).unwrap_or(port.wrapping_add(1))),
        idle_timeout: secs(args.idle_timeout, file.idle_timeout, defaults.idle_timeout),
        session_ttl: secs(args.session_ttl, file.session_ttl, defaults.session_ttl),
        grace: secs(args.grace, file.grace, defaults.grace),
        heartbeat: secs(args.heartbeat, file.heartbeat, defaults.heartbeat),
        ..defaults
    };
    let tasks = args.tasks.or(file.tasks.clone());
    let library = TaskLibrary::new(load_benchmark(tasks.as_deref(), seed)?);

    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(async {
        let handle = cogrip_service::start(&config, cogrip_service::Service::new(library)).await?;
        println!("tcp {}", handle.tcp_addr);
        if let Some(ws) = handle.ws_addr {
            println!("ws  ws://{ws}/ws");
        }
        tokio::select! {
            _ = tokio::signal::ctrl_c() => {}
            _ = handle.join() => {}
        }
        anyhow::Ok(())
    })?;
    Ok(ExitCode::SUCCESS)
}

fn parse_orders(s: &str) -> Result<Vec<PreferenceOrder>> {
    if s.eq_ignore_ascii_case("all") {
        return Ok(PreferenceOrder::ALL.to_vec());
    }
    s.split(',').map(|o| Ok(o.trim().parse::<PreferenceOrder>()?)).collect()
}

fn parse_feedback(s: &str) -> Result<Vec<bool>> {
    Ok(match s.to_ascii_lowercase().as_str() {
        "on" => vec![true],
        "off" => vec![false],
        "both" => vec![true, false],
        other => bail!("invalid --feedback {other:?}: expected on, off or both"),
    })
}

pub fn eval(args: EvalArgs, file: &FileConfig) -> Result<ExitCode> {
    let seed = pick(args.seed, file.seed, DEFAULT_SEED);
    let follower: FollowerKind = pick(args.follower, file.follower.clone(), "shortest-path".into()).parse()?;
    let split = pick(args.split, file.split.clone(), "test20".into());
    let sel = selector(&split, args.map_size.or(file.map_size), args.pieces.or(file.pieces))?;
    let orders = parse_orders(&pick(args.order, file.order.clone(), "PCS".into()))?;
    let feedback = parse_feedback(&pick(args.feedback, file.feedback.clone(), "on".into()))?;
    let traj_dir = args.trajectories.or(file.trajectories.clone());
    let out = args.out.or(file.out.clone());

    let bench = load_benchmark(args.tasks.or(file.tasks.clone()).as_deref(), seed)?;
    let tasks = select(&bench, &sel)?;
    if let Some(dir) = &traj_dir {
        fs::create_dir_all(dir)?;
    }

    let mut reports = Vec::new();
    for &order in &orders {
        for &fb in &feedback {
            let config = EnvConfig {
                order,
                feedback_enabled: fb,
            };
            let report = match &traj_dir {
                None => evaluate(follower, &tasks, config)?,
                Some(dir) => {
                    let (report, logs) = evaluate_logged(follower, &tasks, config)?;
                    let tag = format!("{}-{}", order.code(), if fb { "fb" } else { "nofb" });
                    for (task, log) in tasks.iter().zip(&logs) {
                        let path = dir.join(format!("{}-{tag}.jsonl", task.id));
                        log.write(BufWriter::new(fs::File::create(&path)?))
                            .with_context(|| format!("writing {}", path.display()))?;
                    }
                    report
                }
            };
            reports.push(report);
        }
    }

    print_table(follower, &sel, tasks.len(), &orders, &feedback, &reports);
    if let Some(out) = out {
        let json = serde_json::to_string_pretty(&reports)?;
        fs::write(&out, json).with_context(|| format!("writing {}", out.display()))?;
    }
    Ok(ExitCode::SUCCESS)
}

/// One row per preference order, one column pair per feedback setting.
fn print_table(
    follower: FollowerKind,
    sel: &TaskSelector,
    n: usize,
    orders: &[PreferenceOrder],
    feedback: &[bool],
    reports: &[EvalReport],
) {
    println!("follower {follower}, tasks {sel} (N={n})");
    let mut header = format!("{:<8}", "Pr.Or.");
    let mut rule = "-".repeat(8);
    for &fb in feedback {
        let label = if fb { "w/ FB" } else { "w/o FB" };
        header.push_str(&format!(" | {label:<6} {:>6} {:>6}", "mSR", "mEPL"));
        rule.push_str(&format!("-+-{}", "-".repeat(20)));
    }
    println!("{header}");
    println!("{rule}");
    for (i, order) in orders.iter().enumerate() {
        let mut row = format!("{:<8}", order.to_string());
        for j in 0..feedback.len() {
            let r = &reports[i * feedback.len() + j];
            row.push_str(&format!(" | {:<6} {:>6.1} {:>6.2}", "", r.msr * 100.0, r.mepl));
        }
        println!("{row}");
    }
    println!("mSR in %, mEPL in steps including the final GRIP.");
}

fn collect_logs(paths: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for p in paths {
        if p.is_dir() {
            let mut found: Vec<PathBuf> = fs::read_dir(p)?
                .map(|e| e.map(|e| e.path()))
                .collect::<Result<_, _>>()?;
            found.retain(|f| f.extension().is_some_and(|e| e == "jsonl"));
            found.sort();
            out.extend(found);
        } else {
            out.push(p.clone());
        }
    }
    ensure!(!out.is_empty(), "no trajectory logs found");
    Ok(out)
}

pub fn replay(args: ReplayArgs) -> Result<ExitCode> {
    let mut all = true;
    for path in collect_logs(&args.logs)? {
        let f = fs::File::open(&path).with_context(|| format!("opening {}", path.display()))?;
        let log = Trajectory::read(BufReader::new(f)).with_context(|| format!("reading {}", path.display()))?;
        let report = replay_log(&log).with_context(|| format!("replaying {}", path.display()))?;
        match report.first_mismatch {
            None => println!("MATCH {} ({} steps)", path.display(), report.steps),
            Some(step) => {
                all = false;
                println!("MISMATCH {} at record {step}", path.display());
            }
        }
    }
    Ok(if all { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}

fn scale_frame(frame: &Frame, scale: u32) -> Result<image::RgbImage> {
    let (w, h) = (frame.width() as u32, frame.height() as u32);
    let img = image::RgbImage::from_raw(w, h, frame.as_bytes().to_vec()).context("frame size mismatch")?;
    Ok(image::imageops::resize(&img, w * scale, h * scale, image::imageops::FilterType::Nearest))
}

pub fn render(args: RenderArgs, file: &FileConfig) -> Result<ExitCode> {
    let seed = pick(args.seed, file.seed, DEFAULT_SEED);
    let split = pick(args.split, file.split.clone(), "test20".into());
    let sel = selector(&split, args.map_size.or(file.map_size), args.pieces.or(file.pieces))?;
    let index = pick(args.index, file.index, 0);
    let scale = pick(args.scale, file.scale, 16);
    ensure!(scale > 0, "--scale must be positive");
    let out = pick(args.out, file.out.clone(), PathBuf::from("board.png"));

    let bench = load_benchmark(args.tasks.or(file.tasks.clone()).as_deref(), seed)?;
    let tasks = select(&bench, &sel)?;
    let task = tasks
        .get(index)
        .with_context(|| format!("{sel} has {} tasks; index {index} is out of range", tasks.len()))?;
    let (env, obs) = CoGripEnv::reset(task, EnvConfig::default())?;
    let frame = if args.view { obs.view } else { env.render_full() };
    scale_frame(&frame, scale)?
        .save(&out)
        .with_context(|| format!("writing {}", out.display()))?;
    println!("{} -> {} ({})", task.id, out.display(), env.initial_re().text);
    Ok(ExitCode::SUCCESS)
}
