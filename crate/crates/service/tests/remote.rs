use std::net::{IpAddr, Ipv4Addr};
use std::time::Duration;

use cogrip::env::{Action, EnvConfig};
use cogrip::language::PreferenceOrder;
use cogrip::oracle::oracle_actions;
use cogrip::tasks::enumerate_symbols;
use cogrip::trajectory::{record, Trajectory};
use cogrip::Task;
use cogrip_service::{start, Event, Mode, Reply, Request, ServerMessage, Service, ServiceConfig, SessionConfig, TaskRef};
use futures::{SinkExt, StreamExt};
use tokio::io::{AsyncBufReadExt, AsyncWriteExt, BufReader};
use tokio::net::TcpStream;
use tokio_tungstenite::tungstenite::Message;

fn test_config() -> ServiceConfig {
    ServiceConfig {
        bind: IpAddr::V4(Ipv4Addr::LOCALHOST),
        port: 0,
        ws_port: Some(0),
        idle_timeout: Duration::from_secs(10),
        session_ttl: Duration::from_secs(60),
        grace: Duration::from_millis(50),
        heartbeat: Duration::from_secs(5),
    }
}

fn task(i: u64) -> Task {
    let symbols = enumerate_symbols();
    Task::generate(format!("r{i}"), symbols[(i * 37 % 432) as usize], 20, 8, 1000 + i).unwrap()
}

/// Oracle path with a detour and some noise in front, so feedback fires.
fn actions_for(task: &Task, i: u64) -> Vec<Action> {
    let mut acts = Vec::new();
    for k in 0..(i % 5 + 3) {
        acts.push(Action::ALL[((i + k) % 4) as usize]);
    }
    acts.extend([Action::Wait; 7]);
    let rec = record(task, EnvConfig::default(), &acts).unwrap();
    // Continue from wherever the prefix left the gripper.
    let tail = cogrip::oracle::shortest_path(
        task.map_size,
        task.map_size,
        match rec.records.last().unwrap() {
            cogrip::trajectory::LogRecord::Step { gripper, .. } => *gripper,
            _ => unreachable!(),
        },
        &task.build_board().unwrap().piece(task.target_id()).unwrap().tiles,
    )
    .unwrap();
    acts.extend(tail);
    acts.push(Action::Grip);
    acts
}

struct LineClient {
    lines: tokio::io::Lines<BufReader<tokio::net::tcp::OwnedReadHalf>>,
    write: tokio::net::tcp::OwnedWriteHalf,
}

impl LineClient {
    async fn call(&mut self, req: &Request) -> Reply {
        let mut line = serde_json::to_string(req).unwrap();
        line.push('\n');
        self.write.write_all(line.as_bytes()).await.unwrap();
        let reply = self.lines.next_line().await.unwrap().unwrap();
        serde_json::from_str(&reply).unwrap()
    }
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn remote_episodes_match_in_process_logs() {
    let handle = start(&test_config(), Service::default()).await.unwrap();
    let addr = handle.tcp_addr;
    let mut joins = Vec::new();
    for client in 0..4u64 {
        joins.push(tokio::spawn(async move {
            let (r, w) = TcpStream::connect(addr).await.unwrap().into_split();
            let mut c = LineClient {
                lines: BufReader::new(r).lines(),
                write: w,
            };
            let order = PreferenceOrder::ALL[client as usize];
            let config = EnvConfig {
                order,
                feedback_enabled: client != 3,
            };
            let Reply::Session { session, .. } = c
                .call(&Request::NewSession {
                    config: SessionConfig {
                        order,
                        feedback: config.feedback_enabled,
                        ..SessionConfig::default()
                    },
                })
                .await
            else {
                panic!("no session")
            };
            for i in 0..5 {
                let t = task(client * 10 + i);
                let actions = actions_for(&t, i);
                let Reply::Reset { re, observation, .. } = c
                    .call(&Request::Reset {
                        session,
                        task: Some(TaskRef::Inline(t.clone())),
                    })
                    .await
                else {
                    panic!("reset failed")
                };
                let mut remote = Trajectory::begin(&t, config, &re.text, &observation);
                for a in &actions {
                    match c.call(&Request::Step { session, action: *a }).await {
                        Reply::Step { transition, .. } => remote.push(*a, &transition),
                        other => panic!("{other:?}"),
                    }
                }
                let local = record(&t, config, &actions).unwrap();
                assert_eq!(remote.to_jsonl(), local.to_jsonl());
            }
        }));
    }
    for j in joins {
        j.await.unwrap();
    }
    handle.shutdown();
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn websocket_streams_are_ordered_and_isolated() {
    let handle = start(&test_config(), Service::default()).await.unwrap();
    let url = format!("ws://{}/ws", handle.ws_addr.unwrap());
    let mut joins = Vec::new();
    for client in 0..3u64 {
        let url = url.clone();
        joins.push(tokio::spawn(async move {
            let (mut ws, _) = tokio_tungstenite::connect_async(url).await.unwrap();
            let send = async |ws: &mut tokio_tungstenite::WebSocketStream<_>, req: Request| {
                ws.send(Message::text(serde_json::to_string(&req).unwrap())).await.unwrap();
            };
            let next = async |ws: &mut tokio_tungstenite::WebSocketStream<_>| -> ServerMessage {
                loop {
                    match ws.next().await.unwrap().unwrap() {
                        Message::Text(t) => return serde_json::from_str(t.as_str()).unwrap(),
                        _ => continue,
                    }
                }
            };
            send(
                &mut ws,
                Request::NewSession {
                    config: SessionConfig {
                        mode: Mode::Human,
                        ..SessionConfig::default()
                    },
                },
            )
            .await;
            let ServerMessage::Reply(Reply::Session { session, .. }) = next(&mut ws).await else {
                panic!()
            };
            let t = task(100 + client);
            let actions = actions_for(&t, client);
            send(&mut ws, Request::Reset { session, task: Some(TaskRef::Inline(t.clone())) }).await;
            assert!(matches!(next(&mut ws).await, ServerMessage::Reply(Reply::Reset { board: Some(_), .. })));
            assert!(matches!(next(&mut ws).await, ServerMessage::Event(Event::Frame { .. })));
            assert!(matches!(next(&mut ws).await, ServerMessage::Event(Event::Utterance { t: 0, .. })));

            let mut utterances = 0;
            let mut final_outcome = None;
            for (k, a) in actions.iter().enumerate() {
                send(&mut ws, Request::Step { session, action: *a }).await;
                let ServerMessage::Reply(Reply::Step { session: s, transition, step, .. }) = next(&mut ws).await else {
                    panic!("reply must come first")
                };
                assert_eq!(s, session);
                assert_eq!(step as usize, k + 1);
                // Everything for this step arrives before the next input is
                // sent.
                match next(&mut ws).await {
                    ServerMessage::Event(Event::Frame { session: s, t, .. }) => {
                        assert_eq!(s, session);
                        assert_eq!(t, step);
                    }
                    other => panic!("{other:?}"),
                }
                if let Some(u) = &transition.info.feedback {
                    match next(&mut ws).await {
                        ServerMessage::Event(Event::Utterance { session: s, t, utterance }) => {
                            assert_eq!(s, session);
                            assert_eq!(t, step);
                            assert_eq!(&utterance, u);
                            utterances += 1;
                        }
                        other => panic!("{other:?}"),
                    }
                }
                if transition.done {
                    match next(&mut ws).await {
                        ServerMessage::Event(Event::Outcome { session: s, outcome }) => {
                            assert_eq!(s, session);
                            assert_eq!(outcome.reward, transition.reward);
                            final_outcome = Some(outcome);
                        }
                        other => panic!("{other:?}"),
                    }
                }
            }
            assert!(utterances > 0, "the detour should draw feedback");
            assert_eq!(final_outcome.unwrap().status, cogrip::Status::Correct);
            ws.close(None).await.unwrap();
            session
        }));
    }
    let mut ids = Vec::new();
    for j in joins {
        ids.push(j.await.unwrap());
    }
    ids.sort();
    ids.dedup();
    assert_eq!(ids.len(), 3);
    // Closed streams lose their sessions after the grace period.
    let mut waited = 0;
    while handle.service.session_count() > 0 && waited < 100 {
        tokio::time::sleep(Duration::from_millis(20)).await;
        waited += 1;
    }
    assert_eq!(handle.service.session_count(), 0);
    handle.shutdown();
}

#[tokio::test]
async fn oracle_over_tcp_and_errors() {
    let handle = start(&test_config(), Service::default()).await.unwrap();
    let (r, w) = TcpStream::connect(handle.tcp_addr).await.unwrap().into_split();
    let mut c = LineClient {
        lines: BufReader::new(r).lines(),
        write: w,
    };
    c.write.write_all(b"{\"type\":\"bogus\"}\n").await.unwrap();
    let reply: Reply = serde_json::from_str(&c.lines.next_line().await.unwrap().unwrap()).unwrap();
    assert!(matches!(reply, Reply::Error { code: cogrip_service::ErrorCode::MalformedMessage, .. }));
    let Reply::Session { session, .. } = c.call(&Request::NewSession { config: SessionConfig::default() }).await else {
        panic!()
    };
    let t = task(7);
    c.call(&Request::Reset { session, task: Some(TaskRef::Inline(t.clone())) }).await;
    let mut last = None;
    for a in oracle_actions(&t).unwrap() {
        last = Some(c.call(&Request::Step { session, action: a }).await);
    }
    let Some(Reply::Step { transition, .. }) = last else { panic!() };
    assert!(transition.done);
    assert!(transition.reward > 1.0);
    let after = c.call(&Request::Step { session, action: Action::Grip }).await;
    assert!(matches!(after, Reply::Error { code: cogrip_service::ErrorCode::EpisodeDone, .. }));
    assert!(matches!(c.call(&Request::Reset { session, task: None }).await, Reply::Reset { .. }));
    handle.shutdown();
}
