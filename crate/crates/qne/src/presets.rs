//! Named plans. These are the reference compositions the rest of the crate
//! keeps reaching for: the 8-query exact NE^2 plan, its 4-query 0-computing
//! prefix, and the 2048-query exact NE^8 plan with its 1024-query prefix.

use crate::error::Error;
use crate::plan::{parse_plan, Plan};

/// A plan registered under a stable name.
pub struct PlanPreset {
    pub name: &'static str,
    pub description: &'static str,
    pub text: &'static str,
}

impl PlanPreset {
    pub fn plan(&self) -> Plan {
        // registry texts are covered by tests, so parsing cannot fail
        parse_plan(self.text).expect("preset text must parse")
    }
}

// The NE^8 ladder: three iterates, amplify, three iterates, amplify, two
// iterates land on p = -0.14353... at 1024 queries; the terminal lift-to-0
// plus amplify(2) lands exactly on -1 at 2048.
const EXACT_NE8: &str = "amplify(2, lift(0, iterate(iterate(amplify(2, iterate(iterate(iterate(amplify(2, iterate(iterate(iterate(base))))))))))))";
const ZERO_NE8: &str = "lift(0, iterate(iterate(amplify(2, iterate(iterate(iterate(amplify(2, iterate(iterate(iterate(base)))))))))))";

static PRESETS: [PlanPreset; 4] = [
    PlanPreset {
        name: "exact-ne2",
        description: "8-query plan that (-1)-computes NE^2 (exponent 8^(1/2) = 2.828...)",
        text: "amplify(2, lift(0, iterate(iterate(base))))",
    },
    PlanPreset {
        name: "zero-ne2",
        description: "4-query plan that 0-computes NE^2; decides NE^2 exactly",
        text: "lift(0, iterate(iterate(base)))",
    },
    PlanPreset {
        name: "exact-ne8",
        description: "2048-query plan that (-1)-computes NE^8 (exponent 2048^(1/8) = 2.593...)",
        text: EXACT_NE8,
    },
    PlanPreset {
        name: "zero-ne8",
        description: "1024-query plan that 0-computes NE^8",
        text: ZERO_NE8,
    },
];

pub fn all() -> &'static [PlanPreset] {
    &PRESETS
}

pub fn by_name(name: &str) -> Option<&'static PlanPreset> {
    PRESETS.iter().find(|p| p.name == name)
}

/// Accepts either a preset name or plan text.
pub fn resolve(text: &str) -> Result<Plan, Error> {
    match by_name(text.trim()) {
        Some(preset) => Ok(preset.plan()),
        None => parse_plan(text),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::int;
    use num::bigint::BigUint;

    #[test]
    fn preset_statistics() {
        let expect = [
            ("exact-ne2", 2u32, 8u32, -1i64, 10u32),
            ("zero-ne2", 2, 4, 0, 10),
            ("exact-ne8", 8, 2048, -1, 6562),
            ("zero-ne8", 8, 1024, 0, 6562),
        ];
        for (name, depth, queries, p, dim) in expect {
            let stats = by_name(name).unwrap().plan().stats().unwrap();
            assert_eq!(stats.depth, depth, "{name}");
            assert_eq!(stats.queries, BigUint::from(queries), "{name}");
            assert_eq!(stats.p, int(p), "{name}");
            assert_eq!(stats.dim, BigUint::from(dim), "{name}");
        }
    }

    #[test]
    fn resolve_accepts_names_and_text() {
        assert_eq!(
            resolve("exact-ne2").unwrap().to_string(),
            "amplify(2, lift(0, iterate(iterate(base))))"
        );
        assert_eq!(resolve("iterate(base)").unwrap().to_string(), "iterate(base)");
        assert!(resolve("no-such-preset(").is_err());
    }
}
