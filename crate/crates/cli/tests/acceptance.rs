//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero when any criterion fails.

use std::collections::BTreeSet;
use std::io::{BufRead, BufReader, Write};
use std::net::{IpAddr, Ipv4Addr, TcpStream};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use cogrip::env::{terminal_reward, Action, EnvConfig, Status, T_MAX};
use cogrip::language::vocab::{self, tokenize, PAD};
use cogrip::language::{incremental_algorithm, initial_expression, realize, PreferenceOrder, Property, PropertyKind};
use cogrip::oracle::{evaluate, FollowerKind, RandomFollower};
use cogrip::taskfile::read_manifest;
use cogrip::tasks::{build_benchmark, enumerate_symbols, make_splits, Benchmark, Split, TaskSelector};
use cogrip::trajectory::{record, replay, Trajectory};
use cogrip::{Board, CoGripEnv, Color, Coord, PieceSymbol, Region, Rotation, Shape, Task, DEFAULT_SEED};
use cogrip_service::{Reply, Request, Service, ServiceConfig, SessionConfig, TaskRef};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(cond: bool, detail: String) -> Outcome {
    if cond {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn bench() -> Benchmark {
    build_benchmark(&make_splits(DEFAULT_SEED), DEFAULT_SEED).expect("benchmark builds")
}

fn sel(s: &str) -> TaskSelector {
    s.parse().unwrap()
}

// IA soundness ---------------------------------------------------------------

fn survives(symbol: &PieceSymbol, props: &[Property]) -> bool {
    props.iter().all(|p| match *p {
        Property::Color(c) => symbol.color == c,
        Property::Shape(s) => symbol.shape == s,
        Property::Position(r) => symbol.region == r,
    })
}

fn ia_soundness() -> Outcome {
    let start = Instant::now();
    let symbols = enumerate_symbols();
    let mut rng = ChaCha8Rng::seed_from_u64(0x1a);
    let (mut scenes, mut resolved, mut violations) = (0usize, 0usize, 0usize);
    while scenes < 10_000 {
        let n = rng.random_range(4..=18);
        let size = if rng.random_bool(0.5) { 20 } else { 30 };
        let symbol = symbols[rng.random_range(0..symbols.len())];
        let Ok(task) = Task::generate("ia", symbol, size, n, rng.random()) else {
            continue;
        };
        scenes += 1;
        let board = task.build_board().unwrap();
        let target = board.piece(task.target_id()).unwrap();
        let distractors: Vec<PieceSymbol> = board
            .pieces()
            .iter()
            .filter(|p| p.id != target.id)
            .map(|p| p.symbol)
            .collect();
        for order in PreferenceOrder::ALL {
            let sel = incremental_algorithm(&target.symbol, &distractors, order);
            if sel.remaining != 0 {
                continue;
            }
            resolved += 1;
            let survivors: Vec<_> = board.pieces().iter().filter(|p| survives(&p.symbol, &sel.properties)).collect();
            if survivors.len() != 1 || survivors[0].id != target.id {
                violations += 1;
            }
        }
    }
    let elapsed = start.elapsed();
    check(
        violations == 0 && elapsed < Duration::from_secs(60),
        format!("{scenes} scenes x 6 orders, {resolved} resolved runs, {violations} violations, {elapsed:.1?}"),
    )
}

// Preference-order divergence -----------------------------------------------

fn order_divergence() -> Outcome {
    let mut board = Board::new(20, 20);
    let blue_t = PieceSymbol::new(Shape::T, Color::Blue, Region::TopLeft);
    let target = board.place_piece(blue_t, Coord::new(1, 1), Rotation::R0).unwrap();
    board
        .place_piece(PieceSymbol::new(Shape::F, Color::Red, Region::TopLeft), Coord::new(1, 6), Rotation::R0)
        .unwrap();
    board
        .place_piece(PieceSymbol::new(Shape::P, Color::Green, Region::BottomRight), Coord::new(14, 14), Rotation::R0)
        .unwrap();
    board
        .place_piece(PieceSymbol::new(Shape::T, Color::Yellow, Region::TopRight), Coord::new(14, 1), Rotation::R0)
        .unwrap();
    let mut texts = Vec::new();
    let mut ok = true;
    for order in PreferenceOrder::ALL {
        let re = initial_expression(&board, target, order).unwrap();
        let first = order.kinds()[0];
        let good = match first {
            PropertyKind::Color => re.text == "Take the blue piece",
            PropertyKind::Shape => re.text.split(' ').any(|w| w == "T"),
            PropertyKind::Position => re.text.contains("top left"),
        };
        ok &= good;
        texts.push(format!("{order}: {:?}", re.text));
    }
    // Same scene, different orders, different expressions.
    let distinct: BTreeSet<_> = texts.iter().map(|t| t.split(": ").nth(1).unwrap().to_string()).collect();
    ok &= distinct.len() > 1;
    check(ok, texts.join("; "))
}

// Reward arithmetic ----------------------------------------------------------

fn reward_arithmetic() -> Outcome {
    let a = terminal_reward(Status::Correct, 10);
    let b = terminal_reward(Status::Wrong, 50);
    let c = terminal_reward(Status::Timeout, T_MAX);

    // And through real episodes.
    let task = bench().select(&sel("test20"))[0].clone();
    let (mut env, _) = CoGripEnv::reset(&task, EnvConfig::default()).unwrap();
    let mut last = None;
    for _ in 0..T_MAX {
        last = Some(env.step(Action::Wait).unwrap());
    }
    let timeout = last.unwrap();
    let ok = a == 1.91 && b == -0.45 && c == -0.9 && timeout.done && timeout.reward == -0.9;
    check(ok, format!("correct T=10 -> {a}, wrong T=50 -> {b}, timeout -> {c}, env timeout -> {}", timeout.reward))
}

// Benchmark counts -------------------------------------------------------------

fn file_digests(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().to_string(), std::fs::read(&p).unwrap())
        })
        .collect();
    files.sort();
    files
}

fn benchmark_counts() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let out = tmp.path().join(name);
        let o = Command::new(env!("CARGO_BIN_EXE_cogrip"))
            .args(["gen-tasks", "--seed", "49184", "--out"])
            .arg(&out)
            .output()
            .unwrap();
        (o.status.success(), String::from_utf8_lossy(&o.stdout).to_string(), out)
    };
    let (ok1, stdout, dir) = run("a");
    let (ok2, _, dir2) = run("b");
    if !(ok1 && ok2) {
        return Err("gen-tasks failed".into());
    }
    let m = read_manifest(&dir).unwrap();
    let s = &m.symbols;
    let symbols = [s.train.len(), s.val.len(), s.test.len(), s.holdout.len()];
    let t = |k: &str| m.totals.get(k).copied().unwrap_or(0);
    let totals = [t("train"), t("val"), t("test20"), t("test30"), t("holdout")];
    let per30: Vec<usize> = [4, 8, 12, 18]
        .iter()
        .map(|n| {
            m.sets
                .iter()
                .filter(|e| e.split == Split::Test && e.map_size == 30 && e.n_pieces == *n)
                .map(|e| e.count)
                .sum()
        })
        .collect();
    let reported = stdout.contains("train 3300 / val 300 / test 720 (+720 at 30x30) / holdout 864");
    let stable = file_digests(&dir) == file_digests(&dir2);
    check(
        symbols == [275, 25, 60, 72] && totals == [3300, 300, 720, 720, 864] && per30 == [180; 4] && reported && stable,
        format!(
            "symbols {symbols:?}, tasks train/val/test20/test30/holdout {totals:?}, 30x30 per N {per30:?}, \
             printed {reported}, identical files on rerun {stable}"
        ),
    )
}

// Oracle calibration ---------------------------------------------------------

fn oracle_calibration() -> Outcome {
    let start = Instant::now();
    let tasks = bench().select(&sel("test20"));
    let report = evaluate(FollowerKind::ShortestPath, &tasks, EnvConfig::default()).unwrap();
    let elapsed = start.elapsed();
    // On an open grid the shortest route is the Manhattan distance to the
    // nearest target tile, plus the GRIP.
    let bound: u64 = tasks
        .iter()
        .map(|t| {
            let board = t.build_board().unwrap();
            let start = Coord::new(t.map_size as i32 / 2, t.map_size as i32 / 2);
            let target = board.piece(t.target_id()).unwrap();
            let d = target.tiles.iter().map(|c| (c.x - start.x).abs() + (c.y - start.y).abs()).min().unwrap();
            d as u64 + 1
        })
        .sum();
    let manhattan = bound as f64 / tasks.len() as f64;

    let cli = Command::new(env!("CARGO_BIN_EXE_cogrip"))
        .args(["eval", "--follower", "shortest-path", "--split", "test20"])
        .output()
        .unwrap();
    let cli_out = String::from_utf8_lossy(&cli.stdout);
    let cli_mepl = format!("{:.2}", report.mepl);
    let cli_ok = cli.status.success() && cli_out.contains(&cli_mepl);

    check(
        tasks.len() == 720
            && report.msr == 1.0
            && (report.mepl - 10.96).abs() <= 1.5
            && (report.mepl - manhattan).abs() < 1e-12
            && cli_ok
            && elapsed < Duration::from_secs(10),
        format!(
            "N={} mEPL {:.2} (target 10.96 +- 1.5), Manhattan bound {manhattan:.2}, mSR {:.1}%, cli reports {cli_mepl}: {cli_ok}, {elapsed:.2?}",
            tasks.len(),
            report.mepl,
            report.msr * 100.0
        ),
    )
}

// Feedback conformance ---------------------------------------------------------

/// Literal restatement of the teacher's rules over float distances.
struct RefTeacher {
    anchor: (f64, f64),
    silence: u32,
    re: String,
}

impl RefTeacher {
    fn expect(&mut self, pos: (f64, f64), over: Option<bool>, goal: (f64, f64)) -> Option<String> {
        let dist = |a: (f64, f64), b: (f64, f64)| ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt();
        let said = match over {
            Some(true) => Some("Yes this piece".to_string()),
            Some(false) => Some("Not this piece".to_string()),
            None if dist(pos, self.anchor) > 3.0 => Some(
                if dist(pos, goal) < dist(self.anchor, goal) { "Yes this way" } else { "Not this way" }.to_string(),
            ),
            None if self.silence >= 6 => Some(self.re.clone()),
            None => None,
        };
        if said.is_some() {
            self.anchor = pos;
            self.silence = 0;
        } else {
            self.silence += 1;
        }
        said
    }
}

fn feedback_conformance() -> Outcome {
    let bench = bench();
    let mut tasks = bench.select(&sel("test20"));
    tasks.extend(bench.select(&sel("test30")));
    let mut rng = ChaCha8Rng::seed_from_u64(0xfeed);
    let (mut steps, mut violations, mut repeats, mut episodes) = (0u64, 0u64, 0u64, 0u64);
    let mut first_violation = None;
    let mut kinds = BTreeSet::new();
    while steps < 100_000 {
        let task = &tasks[rng.random_range(0..tasks.len())];
        // Mostly moves with some waiting, rarely a grip, so episodes run long.
        let weights = [(Action::Left, 22), (Action::Right, 22), (Action::Up, 22), (Action::Down, 22), (Action::Wait, 11), (Action::Grip, 1)];
        let (mut env, obs) = CoGripEnv::reset(task, EnvConfig::default()).unwrap();
        episodes += 1;
        let placed = &task.pieces[task.target];
        let goal = ((placed.anchor.x + 2) as f64, (placed.anchor.y + 2) as f64);
        let mid = (task.map_size / 2) as f64;
        let mut teacher = RefTeacher {
            anchor: (mid, mid),
            silence: 0,
            re: obs.re_text.clone(),
        };
        let board = env.board().clone();
        loop {
            let mut roll = rng.random_range(0..100);
            let action = weights
                .iter()
                .find(|(_, w)| {
                    if roll < *w {
                        true
                    } else {
                        roll -= *w;
                        false
                    }
                })
                .unwrap()
                .0;
            let tr = env.step(action).unwrap();
            steps += 1;
            let p = tr.info.position;
            let over = board.piece_at(p).map(|id| id == task.target_id());
            let want = teacher.expect((p.x as f64, p.y as f64), over, goal);
            if want.as_deref() == Some(obs.re_text.as_str()) {
                repeats += 1;
            }
            if let Some(w) = &want {
                kinds.insert(if *w == obs.re_text { "re".to_string() } else { w.clone() });
            }
            let tokens_ok = tr.observation.fb_tokens == tokenize(want.as_deref().unwrap_or(""));
            if tr.observation.fb_text != want || !tokens_ok {
                violations += 1;
                first_violation.get_or_insert(format!("task {} t={} got {:?} want {want:?}", task.id, tr.observation.t, tr.observation.fb_text));
            }
            if tr.done {
                break;
            }
        }
    }
    let detail = format!(
        "{steps} steps over {episodes} episodes, {violations} violations, {repeats} RE repeats, {} utterance kinds{}",
        kinds.len(),
        first_violation.map(|v| format!(", first: {v}")).unwrap_or_default()
    );
    check(violations == 0 && kinds.len() == 5 && repeats > 0, detail)
}

// Vocabulary -----------------------------------------------------------------

fn vocabulary() -> Outcome {
    let listing = vocab::vocab_listing();
    let words: Vec<&str> = listing.lines().map(|l| l.split('\t').nth(1).unwrap()).collect();
    let ids_ok = listing.lines().enumerate().all(|(i, l)| l.split('\t').next() == Some(&i.to_string()));
    let unique: BTreeSet<_> = words.iter().map(|w| w.to_ascii_lowercase()).collect();

    let mut texts: Vec<String> = vec![
        "Yes this way".into(),
        "Not this way".into(),
        "Yes this piece".into(),
        "Not this piece".into(),
    ];
    let colors = Color::ALL.iter().copied().map(Property::Color).collect::<Vec<_>>();
    let shapes = Shape::ALL.iter().copied().map(Property::Shape).collect::<Vec<_>>();
    let regions = Region::ALL.iter().copied().map(Property::Position).collect::<Vec<_>>();
    let opt = |v: &[Property]| std::iter::once(None).chain(v.iter().copied().map(Some)).collect::<Vec<_>>();
    for c in opt(&colors) {
        for s in opt(&shapes) {
            for r in opt(&regions) {
                let props: Vec<Property> = [c, s, r].into_iter().flatten().collect();
                if !props.is_empty() {
                    texts.push(realize(&props).unwrap().text);
                }
            }
        }
    }
    let mut longest = 0;
    let mut bad = Vec::new();
    for t in &texts {
        let toks = tokenize(t);
        let used = toks.iter().filter(|&&id| id != PAD).count();
        longest = longest.max(used);
        let n_words = t.split_whitespace().count();
        let unk = t.split_whitespace().any(|w| vocab::token_id(w).is_none());
        if n_words + 2 > vocab::MAX_LEN || used != n_words + 2 || unk || !vocab::detokenize(&toks).eq_ignore_ascii_case(t) {
            bad.push(t.clone());
        }
    }
    let red = tokenize("Take the red piece");
    let pads = red.iter().filter(|&&id| id == PAD).count();
    check(
        vocab::vocab_size() == 33 && words.len() == 33 && unique.len() == 33 && ids_ok && bad.is_empty() && pads == 5,
        format!(
            "size {}, {} utterances (7 templates + 4 feedback) checked, longest {longest} tokens incl. markers, \
             \"Take the red piece\" has {pads} pads, {} problems {:?}; `no` and `not` both listed",
            vocab::vocab_size(),
            texts.len(),
            bad.len(),
            &bad[..bad.len().min(5)]
        ),
    )
}

// Feedback follower direction -------------------------------------------------

fn follower_direction() -> Outcome {
    let bench = bench();
    let order: PreferenceOrder = "PCS".parse().unwrap();
    let msr = |set: &str, fb: bool| {
        let tasks = bench.select(&sel(set));
        evaluate(FollowerKind::Feedback, &tasks, EnvConfig { order, feedback_enabled: fb }).unwrap().msr * 100.0
    };
    let (on20, off20) = (msr("test20", true), msr("test20", false));
    let (on30, off30) = (msr("test30-18p", true), msr("test30-18p", false));
    let (gap20, gap30) = (on20 - off20, on30 - off30);
    check(
        on20 > off20 && gap30 >= gap20,
        format!(
            "{order}: test20 on {on20:.1}% / off {off20:.1}% (gap {gap20:.1}); test30-18p on {on30:.1}% / off {off30:.1}% (gap {gap30:.1})"
        ),
    )
}

// Determinism -----------------------------------------------------------------

fn remote_log(addr: std::net::SocketAddr, task: &Task, config: EnvConfig, actions: &[Action]) -> Trajectory {
    let stream = TcpStream::connect(addr).unwrap();
    let mut reader = BufReader::new(stream.try_clone().unwrap());
    let mut writer = stream;
    let mut call = |req: Request| -> Reply {
        writeln!(writer, "{}", serde_json::to_string(&req).unwrap()).unwrap();
        let mut line = String::new();
        reader.read_line(&mut line).unwrap();
        serde_json::from_str(&line).unwrap()
    };
    let Reply::Session { session, .. } = call(Request::NewSession {
        config: SessionConfig {
            order: config.order,
            feedback: config.feedback_enabled,
            ..SessionConfig::default()
        },
    }) else {
        panic!("no session")
    };
    let Reply::Reset { re, observation, .. } = call(Request::Reset {
        session,
        task: Some(TaskRef::Inline(task.clone())),
    }) else {
        panic!("reset failed")
    };
    let mut log = Trajectory::begin(task, config, &re.text, &observation);
    for &a in actions {
        match call(Request::Step { session, action: a }) {
            Reply::Step { transition, .. } => log.push(a, &transition),
            other => panic!("{other:?}"),
        }
    }
    call(Request::Close { session });
    log
}

fn determinism() -> Outcome {
    let bench = bench();
    let mut tasks = bench.select(&sel("test20"));
    tasks.truncate(60);
    tasks.extend(bench.select(&sel("test30-18p")).into_iter().take(20));

    let rt = tokio::runtime::Runtime::new().unwrap();
    let handle = rt
        .block_on(cogrip_service::start(
            &ServiceConfig {
                bind: IpAddr::V4(Ipv4Addr::LOCALHOST),
                port: 0,
                ws_port: None,
                ..ServiceConfig::default()
            },
            Service::default(),
        ))
        .unwrap();
    let addr = handle.tcp_addr;

    let dir = tempfile::tempdir().unwrap();
    let (mut replayed, mut remote_ok, mut steps) = (0, 0, 0);
    let mut problems = Vec::new();
    for (i, task) in tasks.iter().enumerate() {
        let config = EnvConfig {
            order: PreferenceOrder::ALL[i % 6],
            feedback_enabled: i % 5 != 0,
        };
        let mut follower = if i % 2 == 0 {
            FollowerKind::Feedback.build(task).unwrap()
        } else {
            Box::new(RandomFollower::new(i as u64))
        };
        let mut log = Trajectory { records: Vec::new() };
        cogrip::oracle::run_episode(follower.as_mut(), task, config, Some(&mut log)).unwrap();
        let actions = log.actions();
        steps += actions.len();

        let path = dir.path().join(format!("{i:03}.jsonl"));
        log.write(std::fs::File::create(&path).unwrap()).unwrap();
        let read = Trajectory::read(BufReader::new(std::fs::File::open(&path).unwrap())).unwrap();
        let again = record(task, config, &actions).unwrap();
        if read == log && replay(&read).unwrap().matched() && again.to_jsonl() == log.to_jsonl() {
            replayed += 1;
        } else {
            problems.push(format!("replay {}", task.id));
        }
        if remote_log(addr, task, config, &actions).to_jsonl() == log.to_jsonl() {
            remote_ok += 1;
        } else {
            problems.push(format!("remote {}", task.id));
        }
    }
    handle.shutdown();

    let cli = Command::new(env!("CARGO_BIN_EXE_cogrip")).arg("replay").arg(dir.path()).output().unwrap();
    let out = String::from_utf8_lossy(&cli.stdout);
    let cli_matches = out.lines().filter(|l| l.starts_with("MATCH")).count();
    let n = tasks.len();
    check(
        replayed == n && remote_ok == n && cli.status.success() && cli_matches == n,
        format!(
            "{n} logged episodes ({steps} steps): replay identical {replayed}/{n}, remote identical {remote_ok}/{n}, \
             `cogrip replay` MATCH {cli_matches}/{n}{}",
            if problems.is_empty() { String::new() } else { format!(", problems {problems:?}") }
        ),
    )
}

// Throughput -------------------------------------------------------------------

fn throughput() -> Outcome {
    let symbols = enumerate_symbols();
    let tasks: Vec<Task> = (0..64)
        .map(|i| Task::generate(format!("tp{i}"), symbols[i * 7 % 432], 20, 8, 900 + i as u64).unwrap())
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let moves = [Action::Left, Action::Right, Action::Up, Action::Down, Action::Wait];
    let mut steps = 0u64;
    let mut checksum = 0u64;
    let start = Instant::now();
    let mut k = 0;
    while start.elapsed() < Duration::from_secs(2) {
        let (mut env, _) = CoGripEnv::reset(&tasks[k % tasks.len()], EnvConfig::default()).unwrap();
        k += 1;
        loop {
            let a = moves[rng.random_range(0..moves.len())];
            let tr = env.step(a).unwrap();
            checksum = checksum.wrapping_add(tr.observation.view.as_bytes()[60] as u64);
            steps += 1;
            if tr.done {
                break;
            }
        }
    }
    let rate = steps as f64 / start.elapsed().as_secs_f64();
    std::hint::black_box(checksum);
    check(
        rate >= 50_000.0,
        format!("{rate:.0} steps/s single-threaded (20x20, 8 pieces, view rendered every step, resets included)"),
    )
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("ia-soundness", ia_soundness),
        ("preference-order-divergence", order_divergence),
        ("reward-arithmetic", reward_arithmetic),
        ("benchmark-counts", benchmark_counts),
        ("oracle-calibration", oracle_calibration),
        ("feedback-conformance", feedback_conformance),
        ("vocabulary-tokenization", vocabulary),
        ("feedback-follower-direction", follower_direction),
        ("determinism", determinism),
        ("throughput", throughput),
    ];
    println!("\nrunning {} acceptance criteria", criteria.len());
    let mut failed = 0;
    for (name, f) in criteria {
        let res = std::panic::catch_unwind(f).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match res {
            Ok(d) => println!("PASS {name}: {d}"),
            Err(d) => {
                failed += 1;
                println!("FAIL {name}: {d}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed\n", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
