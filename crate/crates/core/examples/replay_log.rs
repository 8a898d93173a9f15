//! Record a single-agent session with user actions to a log file and
//! replay it to the same front.

use std::time::Duration;

use covermine::agent::AgentConfig;
use covermine::feedback::UserAction;
use covermine::fixtures;
use covermine::persist::{read_log, replay};
use covermine::session::{Session, SessionConfig};

pub fn main() {
    let dir = std::env::temp_dir().join(format!("covermine-replay-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("session.log");
    let (data, _) = fixtures::planted(300, 0.05, 5);
    let config = SessionConfig {
        agent: AgentConfig {
            max_iterations: Some(120),
            ..AgentConfig::default()
        },
        base_seed: 11,
        log_path: Some(path.clone()),
        ..SessionConfig::default()
    };
    let s = Session::new(data.clone(), config).unwrap();
    s.apply(UserAction::StartAgents { n: 1, seed: None }).unwrap();
    std::thread::sleep(Duration::from_millis(20));
    s.apply(UserAction::Reject {
        rule: None,
        pattern: Some("x3".into()),
    })
    .unwrap();
    s.wait_agents().unwrap();
    let recorded = s.board().digest();
    drop(s);

    let (header, entries) = read_log(&path).unwrap();
    let report = replay(&header, &entries, data).unwrap();
    println!("{} log entries, mode {:?}", entries.len(), report.mode);
    println!("recorded {}\nreplayed {}", &recorded[..16], &report.replayed_digest[..16]);
    assert!(report.matches(), "{:?}", report.divergences);
    std::fs::remove_dir_all(&dir).ok();
}
