mod common;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::random_program;
use tsogame::program::{parse_program, validate, ParseErrorKind};

proptest! {
    #[test]
    fn print_parse_round_trip(seed in any::<u64>(), procs in 1usize..4, states in 1usize..5, vars in 1usize..3, dom in 1usize..4) {
        let p = random_program(&mut ChaCha8Rng::seed_from_u64(seed), procs, states, vars, dom);
        prop_assert!(validate(&p).is_empty());
        let back = parse_program(&p.to_text()).unwrap();
        prop_assert_eq!(back, p);
    }

    #[test]
    fn parser_never_panics(text in "[a-z0-9 :>\\-\n]{0,120}") {
        let _ = parse_program(&text);
    }
}

#[test]
fn errors_carry_positions() {
    let e = parse_program("tsogame v1\ndomain 0\nvars x\nprocess p\n init s\n s -> s : w z 0\n").unwrap_err();
    assert_eq!((e.line, e.kind), (6, ParseErrorKind::UndeclaredVariable("z".into())));
    let e = parse_program("tsogame v1\ndomain 0\nvars x\nprocess p\n init s\n s -> s : r x 7\n").unwrap_err();
    assert_eq!(e.kind, ParseErrorKind::ValueOutsideDomain("7".into()));
}
