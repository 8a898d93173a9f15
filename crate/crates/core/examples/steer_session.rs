//! Steer a running search: reject a feature, accept a rule, change the
//! target function, then undo.

use std::time::Duration;

use covermine::feedback::UserAction;
use covermine::fixtures;
use covermine::session::{Session, SessionConfig};

fn show(s: &Session, label: &str) {
    let st = s.status();
    println!("{label:<22} front {:>3}  digest {}", st.front_size, &st.digest[..12]);
}

pub fn main() {
    let (data, _) = fixtures::planted(400, 0.05, 2);
    let s = Session::new(data, SessionConfig::default()).unwrap();
    s.apply(UserAction::StartAgents { n: 1, seed: Some(3) }).unwrap();
    std::thread::sleep(Duration::from_millis(300));
    show(&s, "after warm-up");

    let rejected = s
        .apply(UserAction::Reject {
            rule: None,
            pattern: Some("x3".into()),
        })
        .unwrap();
    show(&s, "rejected x3");
    s.apply(UserAction::Accept {
        rule: "x2 >= 70".into(),
    })
    .unwrap();
    show(&s, "accepted x2 >= 70");
    s.apply(UserAction::SetTarget {
        target: "weighted:1,3,0.2".parse().unwrap(),
    })
    .unwrap();
    std::thread::sleep(Duration::from_millis(300));
    show(&s, "new target");

    s.apply(UserAction::StopAgents).unwrap();
    s.apply(UserAction::Undo { id: None }).unwrap();
    show(&s, "undid the accept");
    println!("the reject was log entry {}; the log now holds {} entries", rejected.seq, s.log().position());
    if let Some(best) = s.board().best(&s.board().target(), &s.board().bounds()) {
        println!("best: {}", best.ruleset);
    }
}
