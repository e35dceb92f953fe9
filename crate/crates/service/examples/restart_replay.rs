//! State survives a restart: the second platform rebuilds step locks and
//! mastery from the transaction log alone.

use apprentice_core::selector::Mode;
use apprentice_service::config::Config;
use apprentice_service::storage::DirStorage;

fn main() {
    let dir = std::env::temp_dir().join(format!("apprentice-replay-{}", std::process::id()));
    let config = Config { storage_dir: dir.clone(), ..Config::default() };

    let mut first = apprentice_service::open_platform(&config, Box::new(DirStorage::open(&dir).unwrap())).unwrap();
    let token = first.create_session("grace", true).unwrap().token;
    let problem = first.new_problem(&token, "radicals", Mode::Adaptive, None).unwrap().problem;
    let slot = problem.steps[0].slot.clone();
    let cat = first.catalog();
    let answer = cat.solve(&cat.regenerate(&problem.id).unwrap()).unwrap().preferred(&slot).unwrap().value.to_plain();
    first.attempt(&token, &problem.id, &slot, &answer).unwrap();
    let before = first.mastery_store().to_json();
    drop(first);

    let second = apprentice_service::open_platform(&config, Box::new(DirStorage::open(&dir).unwrap())).unwrap();
    let view = second.problem(&token, &problem.id).unwrap();
    println!("{} `{}` after restart: {:?}, locked = {}", problem.id, slot, view.steps[0].status, view.steps[0].locked);
    println!("mastery store identical after replay: {}", second.mastery_store().to_json() == before);
    std::fs::remove_dir_all(dir).ok();
}
