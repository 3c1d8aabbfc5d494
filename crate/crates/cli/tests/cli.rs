use infpast::format::{parse_game, serialize_game};
use infpast::gallery::{gallery_build, GALLERY_IDS};
use infpast_cli::{run, EXIT_COUNTEREXAMPLE, EXIT_INCONCLUSIVE, EXIT_INPUT, EXIT_VERIFIED};

fn games_dir() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../games")
}

fn game(name: &str) -> String {
    games_dir().join(name).display().to_string()
}

fn infpast(args: &[&str]) -> (i32, String, String) {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = run(std::iter::once("infpast").chain(args.iter().copied()), &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

#[test]
fn shipped_files_round_trip() {
    let mut seen = 0;
    for entry in std::fs::read_dir(games_dir()).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().and_then(|e| e.to_str()) != Some("game") {
            continue;
        }
        let doc = parse_game(&std::fs::read_to_string(&path).unwrap()).unwrap();
        let again = parse_game(&serialize_game(&doc).unwrap()).unwrap();
        assert_eq!(doc, again, "{}", path.display());
        seen += 1;
    }
    assert!(seen >= GALLERY_IDS.len());
}

#[test]
fn shipped_gallery_files_match_the_catalogue() {
    for id in GALLERY_IDS {
        let text = std::fs::read_to_string(games_dir().join(format!("{id}.game"))).unwrap();
        assert_eq!(parse_game(&text).unwrap(), gallery_build(id).unwrap(), "{id}");
    }
}

#[test]
fn gallery_print_parses_back() {
    for id in GALLERY_IDS {
        let (code, out, _) = infpast(&["gallery", id]);
        assert_eq!(code, EXIT_VERIFIED);
        assert_eq!(parse_game(&out).unwrap(), gallery_build(id).unwrap(), "{id}");
    }
}

#[test]
fn every_gallery_entry_verifies_at_small_depth() {
    for id in GALLERY_IDS {
        let (code, out, err) = infpast(&["gallery", id, "--verify", "--depth", "5"]);
        assert_eq!(code, EXIT_VERIFIED, "{id}: {out}{err}");
        assert!(out.contains(&format!("id = \"{id}\"")));
    }
}

#[test]
fn solve_winlose_reports_the_part_two_certificate() {
    let (code, out, _) = infpast(&["solve-winlose", &game("valueless.game")]);
    assert_eq!(code, EXIT_VERIFIED);
    assert!(out.contains("classification = \"Part2\""), "{out}");
    assert!(out.contains("winner = 2"));
    let (code, out, _) = infpast(&["solve-winlose", &game("rank2.game")]);
    assert_eq!(code, EXIT_VERIFIED, "{out}");
}

#[test]
fn solve_discounted_plays_one_throughout_the_window() {
    let (code, out, _) = infpast(&["solve-discounted", &game("oneplayer.game"), "--epsilon", "1/8"]);
    assert_eq!(code, EXIT_VERIFIED);
    assert!(out.contains("truncation_depth = 3"), "{out}");
    assert!(out.contains("window = [1, 1, 1, 1]"), "{out}");
}

#[test]
fn discontinuous_turns_are_inconclusive() {
    let (code, _, err) = infpast(&["solve-discounted", &game("discontinuous-turn.game"), "--epsilon", "1/8"]);
    assert_eq!(code, EXIT_INCONCLUSIVE);
    assert!(err.contains("no stage is optimal"), "{err}");
}

#[test]
fn segment_values_differ_on_the_valueless_game() {
    let (_, zero, _) = infpast(&["segment-value", &game("valueless.game"), "--tail", "0:0"]);
    let (_, one, _) = infpast(&["segment-value", &game("valueless.game"), "--tail", "1:1"]);
    assert!(zero.contains("value = 0") && zero.contains("winner = 2"), "{zero}");
    assert!(one.contains("value = 1") && one.contains("winner = 1"), "{one}");
}

#[test]
fn checks_of_the_files_own_profile() {
    assert_eq!(infpast(&["check-eq", &game("valueless.game")]).0, EXIT_VERIFIED);
    assert_eq!(infpast(&["check-strong", &game("valueless.game")]).0, EXIT_VERIFIED);
    let (code, out, _) = infpast(&["runs", &game("two-runs.game")]);
    assert_eq!(code, EXIT_VERIFIED);
    assert_eq!(out.matches("[[runs]]").count(), 2);
}

#[test]
fn a_profitable_deviation_exits_with_one() {
    // Player 2 plays 1 at stage -1 and hands player 1 the win.
    let text = r#"
players = 2
alphabet_size = 2
turn = "alternating"

[payoff]
kind = "winlose"
generators = [{ anchor = "odd", pattern = [1] }]

[[machines]]
kind = "finite_memory"
owner = 1
memory = 0
table = [0, 0]

[[machines]]
kind = "staged"
owner = 2
start = -1
before = [0, 0]
memory = 0
entries = [[-1, 0, 1]]

[run]
tail = "0:0"
window = [1, 0]
"#;
    let dir = std::env::temp_dir().join(format!("infpast-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("deviating.game");
    std::fs::write(&path, text).unwrap();
    let (code, out, err) = infpast(&["check-eq", path.to_str().unwrap()]);
    assert_eq!(code, EXIT_COUNTEREXAMPLE, "{out}{err}");
    assert!(out.contains("kind = \"counter-deviation\"") && out.contains("stage = -1") && out.contains("player = 2"), "{out}");
}

#[test]
fn input_errors_exit_with_three_and_a_location() {
    let dir = std::env::temp_dir().join(format!("infpast-cli-bad-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("bad.game");
    std::fs::write(&path, "players = 2\nalphabet_size = 2\nturn = \"alternating\"\n[payoff]\nkind = \"winlose\"\ngenerators = [{ anchor = \"odd\", pattern = [7] }]\n").unwrap();
    let (code, _, err) = infpast(&["solve-winlose", path.to_str().unwrap()]);
    assert_eq!(code, EXIT_INPUT);
    assert!(err.contains("bad.game") && err.contains("action 7"), "{err}");
    std::fs::write(&path, "players = 2\nalphabet_size = 2\nturn = 3\n").unwrap();
    let (code, _, err) = infpast(&["runs", path.to_str().unwrap()]);
    assert_eq!(code, EXIT_INPUT);
    assert!(err.contains("line"), "{err}");
    assert_eq!(infpast(&["gallery", "no-such-entry"]).0, EXIT_INPUT);
    assert_eq!(infpast(&["w-index"]).0, EXIT_INPUT);
    assert_eq!(infpast(&["runs", "/nonexistent/file.game"]).0, EXIT_INPUT);
}

#[test]
fn w_index_of_the_illustration() {
    let (code, out, _) =
        infpast(&["w-index", &game("illustration.game"), "--stage", "-1", "--tail", "1:1", "--window", "0"]);
    assert_eq!(code, EXIT_VERIFIED);
    assert!(out.contains("w = \"Stage(-1)\""), "{out}");
    let (_, out, _) = infpast(&["w-index", &game("illustration.game"), "--stage", "-1", "--tail", "1:1", "--window", "1"]);
    assert!(out.contains("MinusInfinity"), "{out}");
}
