//! One session of the hidden-basis protocol under each eavesdropper model.

use concordia::protocol::session::{run_session, EveMode, SessionConfig};
use concordia::protocol::Message;

fn main() -> concordia::Result<()> {
    let msg = Message::demo(3);
    println!("message {:?}", msg.table());
    for eve in [EveMode::None, EveMode::Quantum, EveMode::Measure, EveMode::Intercept] {
        let cfg = SessionConfig { eve, ..SessionConfig::new(msg.clone(), 6, 1729) };
        let r = run_session(&cfg)?.report;
        println!(
            "{eve:?}: bob TVD {:.4}, coherent {:?}, eve TVD {:?}, channel error {:?}",
            r.bob_tvd, r.bob_coherent_distance, r.eve_tvd, r.error_rate
        );
    }
    Ok(())
}
