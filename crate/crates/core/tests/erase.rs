mod common;

use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn erasure_is_a_bisimulation(seed in any::<u64>()) {
        let s = common::sample(seed);
        let r = common::check_erase(&s);
        prop_assert!(r.is_ok(), "{}", r.unwrap_err());
    }
}
