//! Transport-independent session handling.

use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, MutexGuard};
use std::time::{Duration, Instant};

use cogrip::env::{Action, CoGripEnv, EnvConfig, EnvError};
use cogrip::tasks::{enumerate_symbols, task_seed, Benchmark, TaskSelector};
use cogrip::Task;

use crate::protocol::{ErrorCode, Event, Mode, Reply, Request, SessionConfig, SessionId, TaskRef, PROTOCOL_VERSION};

#[derive(Debug)]
pub struct Session {
    pub id: SessionId,
    pub config: SessionConfig,
    env: Option<CoGripEnv>,
    /// Resets performed; drives the default task source.
    cursor: usize,
    last_active: Instant,
}

impl Session {
    fn env_config(&self) -> EnvConfig {
        EnvConfig {
            order: self.config.order,
            feedback_enabled: self.config.feedback,
        }
    }
}

/// Task sets the server can hand out by selector.
#[derive(Debug, Default)]
pub struct TaskLibrary {
    benchmark: Option<Benchmark>,
}

impl TaskLibrary {
    pub fn new(benchmark: Benchmark) -> Self {
        Self {
            benchmark: Some(benchmark),
        }
    }

    pub fn select(&self, selector: &str) -> Option<Vec<Task>> {
        let sel: TaskSelector = selector.parse().ok()?;
        let tasks = self.benchmark.as_ref()?.select(&sel);
        (!tasks.is_empty()).then_some(tasks)
    }
}

pub struct Service {
    sessions: Mutex<HashMap<SessionId, Arc<Mutex<Session>>>>,
    next_id: AtomicU64,
    library: TaskLibrary,
}

fn lock<T>(m: &Mutex<T>) -> MutexGuard<'_, T> {
    m.lock().unwrap_or_else(|poisoned| poisoned.into_inner())
}

impl Default for Service {
    fn default() -> Self {
        Self::new(TaskLibrary::default())
    }
}

impl Service {
    pub fn new(library: TaskLibrary) -> Self {
        Self {
            sessions: Mutex::new(HashMap::new()),
            next_id: AtomicU64::new(1),
            library,
        }
    }

    pub fn session_count(&self) -> usize {
        lock(&self.sessions).len()
    }

    fn session(&self, id: SessionId) -> Option<Arc<Mutex<Session>>> {
        lock(&self.sessions).get(&id).cloned()
    }

    /// Parse one message and handle it. Unparseable input yields a
    /// `MALFORMED_MESSAGE` error reply.
    pub fn handle_line(&self, line: &str) -> (Reply, Vec<Event>) {
        match serde_json::from_str::<Request>(line) {
            Ok(req) => self.handle_with_events(req),
            Err(e) => (Reply::error(ErrorCode::MalformedMessage, e.to_string(), None), Vec::new()),
        }
    }

    pub fn handle(&self, req: Request) -> Reply {
        self.handle_with_events(req).0
    }

    /// Handle a request; human-mode sessions also get stream events, in the
    /// order they should be delivered after the reply.
    pub fn handle_with_events(&self, req: Request) -> (Reply, Vec<Event>) {
        match req {
            Request::Hello { .. } => (
                Reply::Hello {
                    version: PROTOCOL_VERSION,
                    server: format!("cogrip-service {}", env!("CARGO_PKG_VERSION")),
                    actions: Action::ALL.to_vec(),
                },
                Vec::new(),
            ),
            Request::NewSession { config } => {
                let id = self.next_id.fetch_add(1, Ordering::Relaxed);
                let session = Session {
                    id,
                    config: config.clone(),
                    env: None,
                    cursor: 0,
                    last_active: Instant::now(),
                };
                lock(&self.sessions).insert(id, Arc::new(Mutex::new(session)));
                (
                    Reply::Session {
                        session: id,
                        actions: Action::ALL.to_vec(),
                        config,
                    },
                    Vec::new(),
                )
            }
            Request::Close { session } => match lock(&self.sessions).remove(&session) {
                Some(_) => (Reply::Closed { session }, Vec::new()),
                None => (unknown(session), Vec::new()),
            },
            Request::Reset { session, task } => self.with_session(session, |s| self.reset(s, task)),
            Request::Step { session, action } => self.with_session(session, |s| step(s, action)),
            Request::RenderRequest { session } => self.with_session(session, |s| match &s.env {
                Some(env) => (
                    Reply::Render {
                        session: s.id,
                        t: env.t(),
                        board: env.render_full(),
                    },
                    Vec::new(),
                ),
                None => (no_episode(s.id), Vec::new()),
            }),
        }
    }

    fn with_session(
        &self,
        id: SessionId,
        f: impl FnOnce(&mut Session) -> (Reply, Vec<Event>),
    ) -> (Reply, Vec<Event>) {
        let Some(session) = self.session(id) else {
            return (unknown(id), Vec::new());
        };
        let mut s = lock(&session);
        s.last_active = Instant::now();
        f(&mut s)
    }

    fn resolve_task(&self, s: &Session, task: Option<TaskRef>) -> Result<Task, TaskFailure> {
        match task {
            Some(TaskRef::Inline(task)) => Ok(task),
            Some(TaskRef::Library { set, index }) => self
                .library
                .select(&set)
                .and_then(|tasks| tasks.get(index).cloned())
                .ok_or_else(|| (ErrorCode::UnknownTask, format!("no task {index} in {set:?}"))),
            Some(TaskRef::Generate {
                symbol,
                map_size,
                n_pieces,
                seed,
            }) => generate(symbol, map_size, n_pieces, seed),
            None => match &s.config.tasks {
                Some(set) => {
                    let tasks = self
                        .library
                        .select(set)
                        .ok_or_else(|| (ErrorCode::UnknownTask, format!("no task set {set:?}")))?;
                    Ok(tasks[s.cursor % tasks.len()].clone())
                }
                None => {
                    let seed = task_seed(s.config.seed, "session", s.cursor);
                    generate(None, s.config.map_size, s.config.n_pieces, seed)
                }
            },
        }
    }

    fn reset(&self, s: &mut Session, task: Option<TaskRef>) -> (Reply, Vec<Event>) {
        let task = match self.resolve_task(s, task) {
            Ok(t) => t,
            Err((code, message)) => return (Reply::error(code, message, Some(s.id)), Vec::new()),
        };
        let (env, observation) = match CoGripEnv::reset(&task, s.env_config()) {
            Ok(r) => r,
            Err(e) => return (Reply::error(ErrorCode::InvalidTask, e.to_string(), Some(s.id)), Vec::new()),
        };
        s.cursor += 1;
        let human = s.config.mode == Mode::Human;
        let mut events = Vec::new();
        if human {
            events.push(frame_event(s.id, &env));
            events.push(Event::Utterance {
                session: s.id,
                t: 0,
                utterance: env.initial_re().clone(),
            });
        }
        let reply = Reply::Reset {
            session: s.id,
            task_id: task.id.clone(),
            re: env.initial_re().clone(),
            board: human.then(|| env.render_full()),
            observation,
        };
        s.env = Some(env);
        (reply, events)
    }

    /// Drop sessions idle for longer than `max_idle`; returns how many went.
    pub fn reap_idle(&self, max_idle: Duration) -> usize {
        let now = Instant::now();
        let mut sessions = lock(&self.sessions);
        let before = sessions.len();
        sessions.retain(|_, s| {
            // A session busy with a request is by definition not idle.
            s.try_lock().map_or(true, |s| now.duration_since(s.last_active) <= max_idle)
        });
        before - sessions.len()
    }

    /// Remove `ids` unless they were used after `since`.
    pub fn teardown(&self, ids: &[SessionId], since: Instant) -> usize {
        let mut sessions = lock(&self.sessions);
        let before = sessions.len();
        sessions.retain(|id, s| !ids.contains(id) || lock(s).last_active > since);
        before - sessions.len()
    }
}

type TaskFailure = (ErrorCode, String);

fn generate(
    symbol: Option<cogrip::PieceSymbol>,
    map_size: usize,
    n_pieces: usize,
    seed: u64,
) -> Result<Task, TaskFailure> {
    let symbol = symbol.unwrap_or_else(|| {
        let all = enumerate_symbols();
        all[(seed % all.len() as u64) as usize]
    });
    Task::generate(format!("gen-{seed:016x}"), symbol, map_size, n_pieces, seed)
        .map_err(|e| (ErrorCode::InvalidTask, e.to_string()))
}

fn step(s: &mut Session, action: Action) -> (Reply, Vec<Event>) {
    let id = s.id;
    let Some(env) = s.env.as_mut() else {
        return (no_episode(id), Vec::new());
    };
    let transition = match env.step(action) {
        Ok(tr) => tr,
        Err(EnvError::EpisodeDone) => {
            return (
                Reply::error(ErrorCode::EpisodeDone, "episode finished; send reset to start another", Some(id)),
                Vec::new(),
            )
        }
        Err(e) => return (Reply::error(ErrorCode::InvalidTask, e.to_string(), Some(id)), Vec::new()),
    };
    let human = s.config.mode == Mode::Human;
    let mut events = Vec::new();
    if human {
        events.push(frame_event(id, env));
        if let Some(u) = &transition.info.feedback {
            events.push(Event::Utterance {
                session: id,
                t: env.t(),
                utterance: u.clone(),
            });
        }
        if let Some(outcome) = transition.info.outcome {
            events.push(Event::Outcome { session: id, outcome });
        }
    }
    let reply = Reply::Step {
        session: id,
        step: env.t(),
        board: human.then(|| env.render_full()),
        transition,
    };
    (reply, events)
}

fn frame_event(session: SessionId, env: &CoGripEnv) -> Event {
    Event::Frame {
        session,
        t: env.t(),
        board: env.render_full(),
        view: env.observe().view,
        gripper: env.gripper().position,
    }
}

fn unknown(session: SessionId) -> Reply {
    Reply::error(ErrorCode::UnknownSession, format!("no session {session}"), Some(session))
}

fn no_episode(session: SessionId) -> Reply {
    Reply::error(ErrorCode::NoEpisode, "no episode; send reset first", Some(session))
}
