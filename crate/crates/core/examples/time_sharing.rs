//! Mixing two layouts to hit an arbitrary leakage target exactly.

use rsrc_fsl::codec::{fmt_rational, plan_time_sharing, realized_costs, theorem2_bounds, Rational};

fn main() {
    let (d, lambda) = (4, 2);
    for i in 0..=10 {
        let leak = Rational::new(i, 10);
        let plan = plan_time_sharing(d, lambda, leak).unwrap();
        let real = realized_costs(&plan);
        let bound = theorem2_bounds(d, lambda, leak).unwrap();
        let mix: Vec<String> = plan
            .components()
            .map(|(_, l, n)| format!("{n} x B={}", l.messages()))
            .collect();
        println!(
            "leak {:>5}: {:<16} C1/B {:>6} C2/B {:>6} S/B {:>6} realized leak {:>5} {}",
            fmt_rational(&leak),
            mix.join(" + "),
            fmt_rational(&real.c1),
            fmt_rational(&real.c2),
            fmt_rational(&real.s),
            fmt_rational(&plan.realized_leak()),
            if real == bound { "on the bound" } else { "above the bound" }
        );
    }
}
