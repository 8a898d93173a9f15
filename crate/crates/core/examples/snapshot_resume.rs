//! Save a session with a computed feature and a restriction, then resume
//! it from the snapshot.

use covermine::feedback::UserAction;
use covermine::fixtures;
use covermine::persist::Snapshot;
use covermine::session::{Session, SessionConfig};

pub fn main() {
    let dir = std::env::temp_dir().join(format!("covermine-snapshot-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("snapshot.json");

    let s = Session::new(fixtures::fig1(), SessionConfig::default()).unwrap();
    s.apply(UserAction::AddComputedFeature {
        name: "half".into(),
        expression: "size / 2".into(),
    })
    .unwrap();
    for t in ["(half <= 2)", "(lang = java)", "(false)"] {
        s.apply(UserAction::SubmitRuleset { ruleset: t.into() }).unwrap();
    }
    s.apply(UserAction::Reject {
        rule: Some("lang = java".into()),
        pattern: None,
    })
    .unwrap();
    s.save_snapshot(&path).unwrap();

    let resumed = Session::from_snapshot(&Snapshot::load(&path).unwrap(), SessionConfig::default()).unwrap();
    println!("saved   {} entries, digest {}", s.board().len(), &s.board().digest()[..16]);
    println!("resumed {} entries, digest {}", resumed.board().len(), &resumed.board().digest()[..16]);
    for e in resumed.board().entries() {
        println!("  {:?} {}", e.evaluation.objectives.0, e.ruleset);
    }
    // the undo cache survived, so the rejection can still be taken back
    resumed.apply(UserAction::Undo { id: None }).unwrap();
    println!("after undo: {} entries", resumed.board().len());
    std::fs::remove_dir_all(&dir).ok();
}
