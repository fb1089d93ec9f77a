use tweezer_clock_oracles::verify;

fn assert_all(rows: Vec<verify::Outcome>) {
    for r in rows {
        assert!(r.pass, "{}: {}", r.name, r.detail);
    }
}

#[test]
fn stabilizers_agree() {
    assert_all(verify::stabilizer_census());
}

#[test]
fn spam_tree_agrees() {
    assert_all(verify::spam_tree());
}

#[test]
fn parity_agrees() {
    assert_all(verify::parity_fringes());
}

#[test]
fn gain_agrees() {
    assert_all(verify::small_gains());
}
