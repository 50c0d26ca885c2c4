use num_integer::Integer;
use serde::Serialize;

use super::leakage::layout_leaked_symbols;
use super::{build_layout, CodecError, OmegaLayout, Rational};

/// Download, repair and storage costs, each normalized per message symbol.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct CostTriple {
    #[serde(serialize_with = "super::ser_rational")]
    pub c1: Rational,
    #[serde(serialize_with = "super::ser_rational")]
    pub c2: Rational,
    #[serde(serialize_with = "super::ser_rational")]
    pub s: Rational,
}

fn r(n: i64, d: i64) -> Rational {
    Rational::new(n, d)
}

fn check_params(dim: usize, lambda: usize, leak: Rational) -> Result<(), CodecError> {
    if lambda == 0 || lambda >= dim {
        return Err(CodecError::InvalidLambda { dim, lambda });
    }
    if leak < r(0, 1) || leak > r(1, 1) {
        return Err(CodecError::LeakOutOfRange(leak));
    }
    Ok(())
}

/// Leakage at which the lower-left strip is full.
pub fn strip_threshold(dim: usize, lambda: usize) -> Rational {
    let (d, l) = (dim as i64, lambda as i64);
    r(2 * l, d + l + 1)
}

/// Leakage of the all-message layout against `lambda` databases.
pub fn saturation_leak(dim: usize, lambda: usize) -> Rational {
    let (d, l) = (dim as i64, lambda as i64);
    r(2 * l * d - l * (l - 1), d * (d + 1))
}

/// Minimum normalized (download, repair, storage) costs at leakage `leak`.
pub fn theorem2_bounds(dim: usize, lambda: usize, leak: Rational) -> Result<CostTriple, CodecError> {
    check_params(dim, lambda, leak)?;
    let (d, l) = (dim as i64, lambda as i64);
    let one = r(1, 1);
    let c1 = if leak <= strip_threshold(dim, lambda) {
        r(d + l + 1, d - l + 1) * (one - leak)
    } else {
        one
    };
    let (c2, s) = if leak <= saturation_leak(dim, lambda) {
        let denom = (d - l) * (d - l + 1);
        (r(2 * d, denom) * (one - leak), r(2 * d * d, denom) * (one - leak))
    } else {
        (r(2, d + 1), r(2 * d, d + 1))
    };
    Ok(CostTriple { c1, c2, s })
}

/// Two layouts used in a fixed ratio. A count of zero drops that layout.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RsrcPlan {
    pub dim: usize,
    pub lambda: usize,
    pub target_leak: Rational,
    pub layout_a: OmegaLayout,
    pub count_a: u64,
    pub layout_b: OmegaLayout,
    pub count_b: u64,
}

/// Where each instance of a chunked submodel starts in the padded symbol
/// stream.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InstanceSlot {
    /// 0 for `layout_a`, 1 for `layout_b`.
    pub component: usize,
    pub offset: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Chunking {
    pub slots: Vec<InstanceSlot>,
    pub real_len: usize,
    pub padded_len: usize,
}

impl RsrcPlan {
    /// A plan that uses one layout only.
    pub fn single(layout: OmegaLayout, lambda: usize) -> Self {
        let mut plan = RsrcPlan {
            dim: layout.dim(),
            lambda,
            target_leak: r(0, 1),
            layout_a: layout.clone(),
            count_a: 1,
            layout_b: layout,
            count_b: 0,
        };
        plan.target_leak = plan.realized_leak();
        plan
    }

    pub fn layout(&self, component: usize) -> &OmegaLayout {
        if component == 0 {
            &self.layout_a
        } else {
            &self.layout_b
        }
    }

    /// `(component, layout, count)` for nonzero counts.
    pub fn components(&self) -> impl Iterator<Item = (usize, &OmegaLayout, u64)> {
        [(0, &self.layout_a, self.count_a), (1, &self.layout_b, self.count_b)]
            .into_iter()
            .filter(|c| c.2 > 0)
    }

    pub fn instances_per_pass(&self) -> usize {
        self.components().map(|(_, _, n)| n as usize).sum()
    }

    pub fn messages_per_pass(&self) -> usize {
        self.components().map(|(_, l, n)| n as usize * l.messages()).sum()
    }

    /// Fraction of message symbols any `lambda` databases learn.
    pub fn realized_leak(&self) -> Rational {
        if self.lambda == 0 {
            return r(0, 1);
        }
        let leaked: i64 = self
            .components()
            .map(|(_, l, n)| n as i64 * layout_leaked_symbols(l, self.lambda) as i64)
            .sum();
        r(leaked, self.messages_per_pass() as i64)
    }

    /// Splits a length-`len` submodel into whole passes over the plan,
    /// zero-padding the tail.
    pub fn chunking(&self, len: usize) -> Chunking {
        let per_pass = self.messages_per_pass();
        let passes = len.div_ceil(per_pass).max(1);
        let mut slots = Vec::new();
        let mut offset = 0;
        for _ in 0..passes {
            for (component, layout, count) in self.components() {
                for _ in 0..count {
                    slots.push(InstanceSlot { component, offset });
                    offset += layout.messages();
                }
            }
        }
        Chunking {
            slots,
            real_len: len,
            padded_len: offset,
        }
    }
}

/// Time-sharing between two adjacent layouts so that exactly a `leak`
/// fraction of messages is exposed to `lambda` databases (or as close as
/// the all-message layout allows). Counts are reduced by their gcd.
pub fn plan_time_sharing(dim: usize, lambda: usize, leak: Rational) -> Result<RsrcPlan, CodecError> {
    check_params(dim, lambda, leak)?;
    let (d, l) = (dim as i64, lambda as i64);
    let (p1, p2) = (*leak.numer(), *leak.denom());
    let strip = lambda * (dim - lambda) ;
    let full_extra = strip + lambda * (lambda + 1) / 2;
    let (extra_a, extra_b, qa, qb) = if leak <= strip_threshold(dim, lambda) {
        let qa = 2 * l * (d - l) * p2 - (d - l) * (d + l + 1) * p1;
        let qb = (d - l) * (d - l + 1) * p1;
        (0, strip, qa, qb)
    } else if leak <= saturation_leak(dim, lambda) {
        let qa = (2 * l * d - l * l + l) * p2 - d * (d + 1) * p1;
        let qb = (d - l) * (d + l + 1) * p1 - 2 * l * (d - l) * p2;
        (strip, full_extra, qa, qb)
    } else {
        (full_extra, full_extra, 1, 0)
    };
    debug_assert!(qa >= 0 && qb >= 0 && qa + qb > 0);
    let g = qa.gcd(&qb);
    Ok(RsrcPlan {
        dim,
        lambda,
        target_leak: leak,
        layout_a: build_layout(dim, lambda, extra_a)?,
        count_a: (qa / g) as u64,
        layout_b: build_layout(dim, lambda, extra_b)?,
        count_b: (qb / g) as u64,
    })
}

/// Costs actually incurred by a plan, normalized per message symbol.
pub fn realized_costs(plan: &RsrcPlan) -> CostTriple {
    let b = plan.messages_per_pass() as i64;
    let tot = |f: &dyn Fn(&OmegaLayout) -> usize| -> Rational {
        r(
            plan.components().map(|(_, l, n)| n as i64 * f(l) as i64).sum(),
            b,
        )
    };
    CostTriple {
        c1: tot(&|l| l.c1()),
        c2: tot(&|l| l.c2()),
        s: tot(&|l| l.storage()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quarter_leak_plan() {
        let plan = plan_time_sharing(3, 1, r(1, 4)).unwrap();
        assert_eq!((plan.count_a, plan.count_b), (1, 1));
        assert_eq!(plan.layout_a.messages(), 3);
        assert_eq!(plan.layout_b.messages(), 5);
        assert_eq!(plan.messages_per_pass(), 8);
        assert_eq!(plan.realized_leak(), r(1, 4));
        let c = realized_costs(&plan);
        assert_eq!((c.c1, c.c2, c.s), (r(5, 4), r(3, 4), r(9, 4)));
    }

    #[test]
    fn half_leak_lambda_two() {
        let plan = plan_time_sharing(3, 2, r(1, 2)).unwrap();
        let c = realized_costs(&plan);
        assert_eq!((c.c1, c.c2, c.s), (r(3, 2), r(3, 2), r(9, 2)));
        assert_eq!(plan.realized_leak(), r(1, 2));
    }

    #[test]
    fn above_saturation_uses_full_layout() {
        let plan = plan_time_sharing(3, 1, r(1, 1)).unwrap();
        assert_eq!(plan.count_b, 0);
        assert_eq!(plan.layout_a.randomness(), 0);
        assert_eq!(plan.realized_leak(), r(1, 2));
    }

    #[test]
    fn leak_out_of_range() {
        assert!(matches!(
            plan_time_sharing(3, 1, r(3, 2)),
            Err(CodecError::LeakOutOfRange(_))
        ));
        assert!(theorem2_bounds(3, 3, r(0, 1)).is_err());
    }

    #[test]
    fn chunking_pads_tail() {
        let plan = plan_time_sharing(3, 2, r(1, 2)).unwrap();
        let ch = plan.chunking(6);
        assert_eq!(ch.padded_len, 8);
        assert_eq!(ch.slots.len(), 4);
        assert_eq!(ch.slots[2].offset, 4);
    }
}
