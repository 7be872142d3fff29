//! Session server: one session per connection, over TCP or stdio.

use std::io::{BufRead, BufReader, Write};
use std::net::{TcpListener, TcpStream};
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::thread;

use crate::config::SimConfig;
use crate::error::{Error, Result};
use crate::harness::{Arm, ProfileSource, SessionLog, SessionRunner, SignalPipeline};
use crate::profile::QuestionnaireResponse;

use super::wire::{Inbound, Outbound, SignalMode};

/// Environment variable holding the default listen address.
pub const LISTEN_ENV: &str = "JITAI_LISTEN";

#[derive(Debug)]
enum Stage {
    AwaitStart,
    AwaitQuestionnaire {
        mode: SignalMode,
        arm: Arm,
        seed: u64,
        autopilot: bool,
    },
    Resting {
        arm: Arm,
        seed: u64,
        questionnaire: QuestionnaireResponse,
        signals: Box<SignalPipeline>,
    },
    Running(Box<SessionRunner>),
    Closed,
}

/// Protocol state machine for a single connection, independent of the
/// transport.
#[derive(Debug)]
pub struct ServerSession {
    config: SimConfig,
    stage: Stage,
    log: Option<SessionLog>,
}

impl ServerSession {
    pub fn new(config: SimConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            config,
            stage: Stage::AwaitStart,
            log: None,
        })
    }

    pub fn is_closed(&self) -> bool {
        matches!(self.stage, Stage::Closed)
    }

    /// The session log, once the scenario has started. Available after the
    /// connection closes.
    pub fn log(&self) -> Option<SessionLog> {
        match &self.stage {
            Stage::Running(r) => Some(SessionLog {
                records: r.records().to_vec(),
            }),
            _ => self.log.clone(),
        }
    }

    /// Handle one inbound line. The reply always ends with exactly one ack
    /// or error.
    pub fn handle_line(&mut self, line: &str) -> Vec<Outbound> {
        if self.is_closed() {
            return vec![Outbound::error(None, "session closed", true)];
        }
        let msg = match Inbound::parse(line) {
            Ok(m) => m,
            Err(e) => {
                let of = serde_json::from_str::<serde_json::Value>(line)
                    .ok()
                    .and_then(|v| v.get("type").and_then(|t| t.as_str()).map(String::from));
                return vec![Outbound::error(of.as_deref(), format!("malformed message: {e}"), false)];
            }
        };
        let kind = msg.kind();
        let mut out = Vec::new();
        match self.handle(msg, &mut out) {
            Ok(ack) => out.push(ack),
            Err((fatal, e)) => {
                out.push(Outbound::error(Some(kind), e.to_string(), fatal));
                if fatal {
                    self.close();
                }
            }
        }
        out
    }

    fn close(&mut self) {
        if let Stage::Running(r) = std::mem::replace(&mut self.stage, Stage::Closed) {
            self.log = Some(SessionLog {
                records: r.records().to_vec(),
            });
        }
    }

    fn handle(&mut self, msg: Inbound, out: &mut Vec<Outbound>) -> std::result::Result<Outbound, (bool, Error)> {
        let order = |m: &str| (true, Error::Protocol(m.into()));
        let kind = msg.kind();
        match (&mut self.stage, msg) {
            (
                Stage::AwaitStart,
                Inbound::Start {
                    mode,
                    arm,
                    seed,
                    autopilot,
                },
            ) => {
                if mode == SignalMode::LiveSignals && autopilot == Some(true) {
                    return Err(order("autopilot needs agent-signals mode"));
                }
                self.stage = Stage::AwaitQuestionnaire {
                    mode,
                    arm,
                    seed,
                    autopilot: autopilot.unwrap_or(mode == SignalMode::AgentSignals),
                };
                Ok(Outbound::ack(kind))
            }
            (Stage::AwaitStart, _) => Err(order("expected start")),
            (
                &mut Stage::AwaitQuestionnaire {
                    mode,
                    arm,
                    seed,
                    autopilot,
                },
                Inbound::Questionnaire(q),
            ) => {
                let source = ProfileSource::Questionnaire(q.clone());
                let (_, profile) = source.resolve(&self.config, seed).map_err(|e| (true, e))?;
                match mode {
                    SignalMode::AgentSignals => {
                        let runner = SessionRunner::agent(&self.config, &source, arm, seed, autopilot)
                            .map_err(|e| (true, e))?;
                        out.extend(runner.records().iter().filter_map(Outbound::from_record));
                        self.stage = Stage::Running(Box::new(runner));
                    }
                    SignalMode::LiveSignals => {
                        let signals = SignalPipeline::live(&self.config).map_err(|e| (true, e))?;
                        self.stage = Stage::Resting {
                            arm,
                            seed,
                            questionnaire: q,
                            signals: Box::new(signals),
                        };
                    }
                }
                Ok(Outbound::Ack {
                    of: kind.into(),
                    t_ms: None,
                    profile: Some(profile),
                })
            }
            (Stage::AwaitQuestionnaire { .. }, _) => Err(order("expected questionnaire")),
            (Stage::Resting { signals, .. }, Inbound::Ppg(s)) => {
                signals.push_ppg(s).map_err(|e| (false, stale(e)))?;
                Ok(Outbound::ack(kind))
            }
            (Stage::Resting { signals, .. }, Inbound::Gsr(s)) => {
                signals.push_gsr(s).map_err(|e| (false, stale(e)))?;
                Ok(Outbound::ack(kind))
            }
            (Stage::Resting { .. }, Inbound::Tick { t_ms }) => {
                let Stage::Resting {
                    arm,
                    seed,
                    questionnaire,
                    signals,
                } = std::mem::replace(&mut self.stage, Stage::Closed)
                else {
                    unreachable!()
                };
                let source = ProfileSource::Questionnaire(questionnaire);
                let runner = SessionRunner::streamed(&self.config, &source, arm, seed, *signals)
                    .map_err(|e| (true, e))?;
                out.extend(runner.records().iter().filter_map(Outbound::from_record));
                self.stage = Stage::Running(Box::new(runner));
                self.advance(t_ms, out)
            }
            (Stage::Resting { .. }, _) => Err(order("scenario not started; stream resting samples then tick")),
            (Stage::Running(r), Inbound::Ppg(s)) => {
                if !r.streams_signals() {
                    return Err((false, Error::Protocol("agent-signals session takes no samples".into())));
                }
                r.push_ppg(s).map_err(|e| (false, stale(e)))?;
                Ok(Outbound::ack(kind))
            }
            (Stage::Running(r), Inbound::Gsr(s)) => {
                if !r.streams_signals() {
                    return Err((false, Error::Protocol("agent-signals session takes no samples".into())));
                }
                r.push_gsr(s).map_err(|e| (false, stale(e)))?;
                Ok(Outbound::ack(kind))
            }
            (Stage::Running(r), Inbound::Action { action }) => {
                if r.autopilot() {
                    return Err((false, Error::Protocol("autopilot session takes no actions".into())));
                }
                r.queue_action(action).map_err(|e| (true, e))?;
                Ok(Outbound::ack(kind))
            }
            (Stage::Running(_), Inbound::Tick { t_ms }) => self.advance(t_ms, out),
            (Stage::Running(_), _) => Err(order("session already started")),
            (Stage::Closed, _) => Err(order("session closed")),
        }
    }

    fn advance(&mut self, to_ms: i64, out: &mut Vec<Outbound>) -> std::result::Result<Outbound, (bool, Error)> {
        let Stage::Running(r) = &mut self.stage else {
            unreachable!()
        };
        if to_ms <= r.t_ms() {
            return Err((
                false,
                Error::Protocol(format!("stale tick {to_ms} ms, session is at {} ms", r.t_ms())),
            ));
        }
        let tick = r.core().header().config.tick_ms;
        while !r.is_finished() && r.t_ms() + tick <= to_ms {
            let from = r.tick().map_err(|e| (true, e))?;
            out.extend(r.records()[from..].iter().filter_map(Outbound::from_record));
        }
        let ack = Outbound::Ack {
            of: "tick".into(),
            t_ms: Some(r.t_ms()),
            profile: None,
        };
        if r.is_finished() {
            self.close();
        }
        Ok(ack)
    }
}

fn stale(e: Error) -> Error {
    match e {
        Error::NonMonotonicTimestamps { prev_ms, t_ms } => {
            Error::Protocol(format!("stale sample rejected: t={t_ms} ms after {prev_ms} ms"))
        }
        other => other,
    }
}

/// Where finished session logs go, if anywhere.
#[derive(Debug, Clone, Default)]
pub struct ServeOptions {
    pub log_dir: Option<PathBuf>,
}

/// Run one session over a line-oriented stream until the client
/// disconnects or the session closes. Returns the session log, if the
/// scenario started.
pub fn serve_stream(
    config: &SimConfig,
    reader: impl BufRead,
    mut writer: impl Write,
) -> Result<Option<SessionLog>> {
    let mut session = ServerSession::new(config.clone())?;
    for line in reader.lines() {
        // A read or write failure means the client went away.
        let Ok(line) = line else { break };
        if line.trim().is_empty() {
            continue;
        }
        let sent = session
            .handle_line(&line)
            .iter()
            .try_for_each(|m| writeln!(writer, "{}", m.to_line()))
            .and_then(|()| writer.flush());
        if sent.is_err() || session.is_closed() {
            break;
        }
    }
    Ok(session.log())
}

fn save_log(opts: &ServeOptions, id: u64, log: &SessionLog) -> Result<()> {
    if let Some(dir) = &opts.log_dir {
        let seed = log.header().map(|h| h.seed).unwrap_or_default();
        let path = dir.join(format!("session-{id:04}-seed-{seed}.ndjson"));
        std::fs::write(path, log.to_ndjson())?;
    }
    Ok(())
}

pub fn serve_stdio(config: &SimConfig, opts: &ServeOptions) -> Result<()> {
    let stdin = std::io::stdin();
    let log = serve_stream(config, stdin.lock(), std::io::stdout().lock())?;
    if let Some(log) = log {
        save_log(opts, 0, &log)?;
    }
    Ok(())
}

fn handle_connection(config: &SimConfig, opts: &ServeOptions, id: u64, stream: TcpStream) -> Result<()> {
    let reader = BufReader::new(stream.try_clone()?);
    if let Some(log) = serve_stream(config, reader, stream)? {
        save_log(opts, id, &log)?;
    }
    Ok(())
}

/// Accept connections forever, one thread and one session each.
pub fn serve_tcp(listener: TcpListener, config: &SimConfig, opts: &ServeOptions) -> Result<()> {
    config.validate()?;
    let config = Arc::new(config.clone());
    let opts = Arc::new(opts.clone());
    let next_id = Arc::new(AtomicU64::new(1));
    for stream in listener.incoming() {
        let stream = match stream {
            Ok(s) => s,
            Err(e) => {
                eprintln!("accept failed: {e}");
                continue;
            }
        };
        let (config, opts) = (Arc::clone(&config), Arc::clone(&opts));
        let id = next_id.fetch_add(1, Ordering::Relaxed);
        thread::spawn(move || {
            if let Err(e) = handle_connection(&config, &opts, id, stream) {
                eprintln!("session {id}: {e}");
            }
        });
    }
    Ok(())
}
