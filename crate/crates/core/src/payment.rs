//! Equal-gain cost sharing for one vehicle.
//!
//! Every rider in a vehicle ends up with the same gain (inconvenience saved
//! relative to riding alone), and the payments exactly cover the vehicle's
//! operating cost. Both conditions are linear in the payments, which gives
//! the closed form used here:
//!
//! ```text
//! a(u) = alpha * (t_o(u) - t_P(u)) + beta * c_o(u)
//! g    = (sum_u a(u) - beta * total_cost) / k
//! c_P(u) = (a(u) - g) / beta
//! ```

use crate::error::{Error, Result};
use crate::satisfaction::EconParams;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BillEntry {
    /// Direct-ride time, including the waiting constant.
    pub t_o: f64,
    /// Direct-ride cost.
    pub c_o: f64,
    /// Actual time in the shared ride, including the waiting constant.
    pub t_p: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VehicleBill {
    pub passengers: Vec<BillEntry>,
    /// Operating cost of the whole route.
    pub total_cost: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PaymentResult {
    /// In the same order as the bill's passengers.
    pub payments: Vec<f64>,
    /// Common gain of every passenger.
    pub gain: f64,
    /// Set when some passenger would be paid rather than pay. Such payments
    /// are returned unclamped so they still sum to the total.
    pub has_negative: bool,
}

pub fn compute_equal_gain_payments(
    bill: &VehicleBill,
    params: &EconParams,
) -> Result<PaymentResult> {
    if bill.passengers.is_empty() {
        return Err(Error::input("a vehicle bill needs at least one passenger"));
    }
    if params.beta.is_nan() || params.beta <= 0.0 {
        return Err(Error::input("beta must be positive"));
    }
    let mut payments = vec![0.0; bill.passengers.len()];
    let gain = equal_gain_into(
        bill.passengers.iter().map(|p| (p.t_o, p.c_o, p.t_p)),
        bill.total_cost,
        params,
        &mut payments,
    );
    let has_negative = payments.iter().any(|&c| c < 0.0);
    Ok(PaymentResult {
        payments,
        gain,
        has_negative,
    })
}

/// Allocation-free core: writes payments into `out` and returns the common
/// gain. `riders` yields `(t_o, c_o, t_P)` and must have `out.len()` items.
pub(crate) fn equal_gain_into(
    riders: impl Iterator<Item = (f64, f64, f64)>,
    total_cost: f64,
    params: &EconParams,
    out: &mut [f64],
) -> f64 {
    let k = out.len() as f64;
    // Work with offsets from the first rider's `a`: c_P(u) = T/k + (d(u) - mean d) / beta.
    // Identical riders then pay exactly T/k.
    let mut first = None;
    let mut sum = 0.0;
    for (slot, (t_o, c_o, t_p)) in out.iter_mut().zip(riders) {
        // Keep the time difference first so a solo rider's gain is exactly zero.
        let a = params.alpha * (t_o - t_p) + params.beta * c_o;
        let d = a - *first.get_or_insert(a);
        *slot = d;
        sum += d;
    }
    let mean = sum / k;
    let share = total_cost / k;
    for slot in out.iter_mut() {
        *slot = share + (*slot - mean) / params.beta;
    }
    first.unwrap_or(0.0) + mean - params.beta * share
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;
    use crate::satisfaction::gain;

    fn bill(riders: &[(f64, f64, f64)], total_cost: f64) -> VehicleBill {
        VehicleBill {
            passengers: riders
                .iter()
                .map(|&(t_o, c_o, t_p)| BillEntry { t_o, c_o, t_p })
                .collect(),
            total_cost,
        }
    }

    #[test]
    fn solo_pays_direct_cost() {
        let p = EconParams::default();
        let r = compute_equal_gain_payments(&bill(&[(15.0, 10.0, 15.0)], 10.0), &p).unwrap();
        assert_eq!(r.payments, vec![10.0]);
        assert_eq!(r.gain, 0.0);
        assert!(!r.has_negative);
    }

    #[test]
    fn same_destination_splits_equally() {
        let p = EconParams::default();
        let r =
            compute_equal_gain_payments(&bill(&[(10.0, 10.0, 10.0), (10.0, 10.0, 10.0)], 10.0), &p)
                .unwrap();
        assert!((r.payments[0] - 5.0).abs() < 1e-12);
        assert!((r.payments[1] - 5.0).abs() < 1e-12);
        assert!((r.gain - 5.0).abs() < 1e-12);
    }

    #[test]
    fn later_drop_off_pays_less() {
        let p = EconParams::default();
        let r =
            compute_equal_gain_payments(&bill(&[(10.0, 10.0, 10.0), (10.0, 10.0, 14.0)], 14.0), &p)
                .unwrap();
        assert!((r.gain - 2.4).abs() < 1e-12);
        assert!((r.payments[0] - 7.6).abs() < 1e-12);
        assert!((r.payments[1] - 6.4).abs() < 1e-12);
    }

    #[test]
    fn empty_bill_rejected() {
        assert!(compute_equal_gain_payments(&bill(&[], 0.0), &EconParams::default()).is_err());
    }

    #[test]
    fn negative_payments_are_flagged_not_clamped() {
        let p = EconParams::default();
        // The second rider is badly delayed, so their equal-gain share goes negative.
        let r =
            compute_equal_gain_payments(&bill(&[(10.0, 10.0, 10.0), (10.0, 1.0, 200.0)], 11.0), &p)
                .unwrap();
        assert!(r.has_negative);
        assert!((r.payments.iter().sum::<f64>() - 11.0).abs() < 1e-9);
    }

    #[test]
    fn more_than_four_riders_supported() {
        let p = EconParams::default();
        let riders = vec![(10.0, 10.0, 10.0); 6];
        let r = compute_equal_gain_payments(&bill(&riders, 12.0), &p).unwrap();
        assert!(r.payments.iter().all(|c| (c - 2.0).abs() < 1e-12));
    }

    #[test]
    fn identical_riders_pay_exact_equal_shares() {
        let p = EconParams {
            alpha: 0.37,
            beta: 1.3,
            ..Default::default()
        };
        for k in 1..=4 {
            let riders = vec![(17.3, 11.1, 23.9); k];
            let r = compute_equal_gain_payments(&bill(&riders, 29.7), &p).unwrap();
            assert!(r.payments.iter().all(|&c| c == 29.7 / k as f64));
        }
    }

    proptest! {
        #[test]
        fn payments_cover_cost_and_equalise_gain(
            riders in prop::collection::vec((0.0..90.0f64, 0.0..90.0f64, 0.0..60.0f64), 1..=4),
            total in 0.0..150.0f64,
            alpha in 0.05..2.0f64,
            beta in 0.1..3.0f64,
        ) {
            let params = EconParams { alpha, beta, ..Default::default() };
            let riders: Vec<_> = riders.into_iter().map(|(t_o, c_o, extra)| (t_o, c_o, t_o + extra)).collect();
            let r = compute_equal_gain_payments(&bill(&riders, total), &params).unwrap();
            let sum: f64 = r.payments.iter().sum();
            prop_assert!((sum - total).abs() < 1e-9);
            for (&(t_o, c_o, t_p), &c_p) in riders.iter().zip(&r.payments) {
                prop_assert!((gain(t_o, c_o, t_p, c_p, &params) - r.gain).abs() < 1e-9);
            }
        }
    }
}
