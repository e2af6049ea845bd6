//! Passenger-to-vehicle assignment.
//!
//! An [`Instance`] binds passengers to a travel-time matrix and the economic
//! parameters. Everything a vehicle's riders experience (drop-off times,
//! seats, equal-gain payments) follows from its drop-off order, so solvers
//! only decide groups and orders and the instance derives the rest.

mod optimal;
mod oracle;
mod simsat;

use std::fmt::{self, Write as _};

use crate::error::{Error, Result};
use crate::graph::{NodeId, TravelTimeMatrix};
use crate::payment::equal_gain_into;
use crate::satisfaction::{EconParams, PassengerProfile, RideOffer, SatisfactionModel, Seat};

pub use optimal::{enumerate_capacity_partitions, optimal_assign, DEFAULT_EXACT_LIMIT};
pub use oracle::{brute_force_oracle, ORACLE_LIMIT};
pub use simsat::{simsat, InsertionRule, SimsatConfig};

/// Seats per vehicle.
pub const VEHICLE_CAPACITY: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PassengerId(pub u32);

impl fmt::Display for PassengerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Passenger {
    pub id: PassengerId,
    pub destination: NodeId,
    pub profile: PassengerProfile,
}

/// Greedy nearest-neighbour drop-off order.
///
/// From the current position the next stop is the closest remaining
/// destination; equal times go to the smaller passenger id.
pub fn nn_drop_off_order(
    matrix: &TravelTimeMatrix,
    origin: NodeId,
    stops: &[(PassengerId, NodeId)],
) -> Result<Vec<PassengerId>> {
    let start = matrix
        .position(origin)
        .ok_or_else(|| Error::input(format!("origin {origin} is not a terminal")))?;
    let mut positioned = stops
        .iter()
        .map(|&(id, node)| {
            matrix
                .position(node)
                .map(|pos| (id, pos))
                .ok_or_else(|| Error::input(format!("destination {node} is not a terminal")))
        })
        .collect::<Result<Vec<_>>>()?;
    positioned.sort_by_key(|&(id, _)| id);
    let order = nn_order(matrix, start, &positioned);
    Ok(order.into_iter().map(|i| positioned[i].0).collect())
}

/// Indices into `stops` in nearest-neighbour order. Ties go to the earlier
/// entry of `stops`.
fn nn_order<K>(matrix: &TravelTimeMatrix, start: usize, stops: &[(K, usize)]) -> Vec<usize> {
    let mut visited = [false; 64];
    assert!(stops.len() <= visited.len());
    let mut order = Vec::with_capacity(stops.len());
    let mut here = start;
    for _ in 0..stops.len() {
        let mut best: Option<(usize, f64)> = None;
        for (i, &(_, pos)) in stops.iter().enumerate() {
            if visited[i] {
                continue;
            }
            let t = matrix.time_at(here, pos);
            if best.is_none_or(|(_, bt)| t < bt) {
                best = Some((i, t));
            }
        }
        let (i, _) = best.unwrap();
        visited[i] = true;
        here = stops[i].1;
        order.push(i);
    }
    order
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PassengerOutcome {
    pub id: PassengerId,
    pub destination: NodeId,
    /// Minutes of driving until this passenger's drop-off.
    pub drop_time: f64,
    pub t_o: f64,
    pub d_o: f64,
    pub c_o: f64,
    pub t_p: f64,
    pub d_p: f64,
    pub c_p: f64,
    pub seat: Seat,
    pub co_passengers: u8,
    /// Objective value credited to this passenger.
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VehicleOutcome {
    /// Riders in drop-off order.
    pub riders: Vec<PassengerOutcome>,
    pub drive_time: f64,
    pub total_cost: f64,
    /// Sum of the riders' scores.
    pub satisfaction: f64,
    pub has_negative_payment: bool,
}

impl VehicleOutcome {
    pub fn order(&self) -> Vec<PassengerId> {
        self.riders.iter().map(|r| r.id).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    /// Sorted by smallest passenger id.
    pub vehicles: Vec<VehicleOutcome>,
    /// Sum of vehicle scores under the objective that built the assignment.
    pub objective: f64,
}

impl Assignment {
    pub fn passenger_count(&self) -> usize {
        self.vehicles.iter().map(|v| v.riders.len()).sum()
    }

    pub fn vehicle_count(&self) -> usize {
        self.vehicles.len()
    }

    pub fn total_cost(&self) -> f64 {
        self.vehicles.iter().map(|v| v.total_cost).sum()
    }

    /// Drop-off orders, one per vehicle.
    pub fn routes(&self) -> Vec<Vec<PassengerId>> {
        self.vehicles.iter().map(VehicleOutcome::order).collect()
    }

    /// `cab <k>: <pid@drop_min:pay_usd> ...` per vehicle, then `avg_sat <x>`.
    pub fn to_text(&self, avg_sat: f64) -> String {
        let mut out = String::new();
        for (k, v) in self.vehicles.iter().enumerate() {
            write!(out, "cab {}:", k + 1).unwrap();
            for r in &v.riders {
                write!(out, " {}@{:.2}:{:.2}", r.id, r.drop_time, r.c_p).unwrap();
            }
            out.push('\n');
        }
        writeln!(out, "avg_sat {avg_sat:.4}").unwrap();
        out
    }
}

/// Everything a vehicle's riders see, for up to one vehicle-load.
struct RideSheet {
    len: usize,
    drop: [f64; VEHICLE_CAPACITY],
    payments: [f64; VEHICLE_CAPACITY],
    drive_time: f64,
    total_cost: f64,
}

/// Passengers sorted by id, resolved against a travel-time matrix.
#[derive(Debug, Clone)]
pub struct Instance<'a> {
    matrix: &'a TravelTimeMatrix,
    origin_node: NodeId,
    origin: usize,
    passengers: Vec<Passenger>,
    dest: Vec<usize>,
    direct: Vec<f64>,
    params: EconParams,
}

impl<'a> Instance<'a> {
    pub fn new(
        matrix: &'a TravelTimeMatrix,
        origin: NodeId,
        passengers: &[Passenger],
        params: EconParams,
    ) -> Result<Self> {
        params.validate()?;
        if passengers.is_empty() {
            return Err(Error::input("at least one passenger is required"));
        }
        let origin_pos = matrix
            .position(origin)
            .ok_or_else(|| Error::input(format!("origin {origin} is not a terminal")))?;
        let mut passengers = passengers.to_vec();
        passengers.sort_by_key(|p| p.id);
        if let Some(w) = passengers.windows(2).find(|w| w[0].id == w[1].id) {
            return Err(Error::input(format!("duplicate passenger id {}", w[0].id)));
        }
        if passengers.len() > u16::MAX as usize {
            return Err(Error::input("too many passengers"));
        }
        let dest = passengers
            .iter()
            .map(|p| {
                matrix.position(p.destination).ok_or_else(|| {
                    Error::input(format!("destination {} is not a terminal", p.destination))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let direct = dest
            .iter()
            .map(|&d| matrix.time_at(origin_pos, d))
            .collect();
        Ok(Instance {
            matrix,
            origin_node: origin,
            origin: origin_pos,
            passengers,
            dest,
            direct,
            params,
        })
    }

    pub fn len(&self) -> usize {
        self.passengers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.passengers.is_empty()
    }

    pub fn passengers(&self) -> &[Passenger] {
        &self.passengers
    }

    pub fn params(&self) -> &EconParams {
        &self.params
    }

    pub fn matrix(&self) -> &TravelTimeMatrix {
        self.matrix
    }

    pub fn origin(&self) -> NodeId {
        self.origin_node
    }

    fn index_of(&self, id: PassengerId) -> Option<usize> {
        self.passengers.binary_search_by_key(&id, |p| p.id).ok()
    }

    /// Nearest-neighbour order of a group given by passenger indices.
    pub(crate) fn nn_route(&self, members: &[usize]) -> Vec<usize> {
        let mut sorted = members.to_vec();
        sorted.sort_unstable();
        let stops: Vec<(usize, usize)> = sorted.iter().map(|&i| (i, self.dest[i])).collect();
        nn_order(self.matrix, self.origin, &stops)
            .into_iter()
            .map(|k| sorted[k])
            .collect()
    }

    fn ride_sheet(&self, route: &[usize]) -> RideSheet {
        debug_assert!(!route.is_empty() && route.len() <= VEHICLE_CAPACITY);
        let p = &self.params;
        let mut sheet = RideSheet {
            len: route.len(),
            drop: [0.0; VEHICLE_CAPACITY],
            payments: [0.0; VEHICLE_CAPACITY],
            drive_time: 0.0,
            total_cost: 0.0,
        };
        let mut here = self.origin;
        let mut clock = 0.0;
        for (slot, &i) in route.iter().enumerate() {
            clock += self.matrix.time_at(here, self.dest[i]);
            // Summed legs can round an ulp below the direct time.
            sheet.drop[slot] = clock.max(self.direct[i]);
            here = self.dest[i];
        }
        sheet.drive_time = clock;
        sheet.total_cost = p.cost_per_minute * clock;
        let riders = route.iter().enumerate().map(|(slot, &i)| {
            (
                p.wait_const + self.direct[i],
                p.cost_per_minute * self.direct[i],
                p.wait_const + sheet.drop[slot],
            )
        });
        equal_gain_into(
            riders,
            sheet.total_cost,
            p,
            &mut sheet.payments[..route.len()],
        );
        sheet
    }

    fn offer(&self, sheet: &RideSheet, slot: usize, i: usize) -> RideOffer {
        let p = &self.params;
        RideOffer {
            private_time: p.wait_const + self.direct[i],
            private_cost: p.cost_per_minute * self.direct[i],
            shared_time: p.wait_const + sheet.drop[slot],
            shared_cost: sheet.payments[slot],
            n_additional: (sheet.len - 1) as u8,
            seat: Seat::PRIORITY[slot],
        }
    }

    /// Objective value of one vehicle driving `route` (passenger indices in
    /// drop-off order).
    pub(crate) fn route_score<M: SatisfactionModel + ?Sized>(
        &self,
        route: &[usize],
        model: &M,
    ) -> f64 {
        let sheet = self.ride_sheet(route);
        route
            .iter()
            .enumerate()
            .map(|(slot, &i)| {
                model.score(&self.passengers[i].profile, &self.offer(&sheet, slot, i))
            })
            .sum()
    }

    pub(crate) fn vehicle_outcome<M: SatisfactionModel + ?Sized>(
        &self,
        route: &[usize],
        model: &M,
    ) -> VehicleOutcome {
        let sheet = self.ride_sheet(route);
        let speed = self.params.speed;
        let riders: Vec<PassengerOutcome> = route
            .iter()
            .enumerate()
            .map(|(slot, &i)| {
                let offer = self.offer(&sheet, slot, i);
                PassengerOutcome {
                    id: self.passengers[i].id,
                    destination: self.passengers[i].destination,
                    drop_time: sheet.drop[slot],
                    t_o: offer.private_time,
                    d_o: self.direct[i] * speed,
                    c_o: offer.private_cost,
                    t_p: offer.shared_time,
                    d_p: sheet.drop[slot] * speed,
                    c_p: offer.shared_cost,
                    seat: offer.seat,
                    co_passengers: offer.n_additional,
                    score: model.score(&self.passengers[i].profile, &offer),
                }
            })
            .collect();
        VehicleOutcome {
            satisfaction: riders.iter().map(|r| r.score).sum(),
            has_negative_payment: riders.iter().any(|r| r.c_p < 0.0),
            riders,
            drive_time: sheet.drive_time,
            total_cost: sheet.total_cost,
        }
    }

    /// Builds an assignment from routes given as passenger indices. Vehicles
    /// are put in canonical order before the objective is summed, so equal
    /// groupings always report bit-identical objectives.
    pub(crate) fn assignment_from_routes<M: SatisfactionModel + ?Sized>(
        &self,
        mut routes: Vec<Vec<usize>>,
        model: &M,
    ) -> Assignment {
        routes.sort_by_key(|r| r.iter().copied().min());
        let vehicles: Vec<VehicleOutcome> = routes
            .iter()
            .map(|r| self.vehicle_outcome(r, model))
            .collect();
        Assignment {
            objective: vehicles.iter().map(|v| v.satisfaction).sum(),
            vehicles,
        }
    }

    fn route_indices(&self, ids: &[PassengerId]) -> Result<Vec<usize>> {
        ids.iter()
            .map(|&id| {
                self.index_of(id)
                    .ok_or_else(|| Error::input(format!("unknown passenger {id}")))
            })
            .collect()
    }

    /// Total satisfaction of a group with nearest-neighbour drop-offs.
    pub fn vehicle_satisfaction<M: SatisfactionModel + ?Sized>(
        &self,
        members: &[PassengerId],
        model: &M,
    ) -> Result<f64> {
        if members.is_empty() || members.len() > VEHICLE_CAPACITY {
            return Err(Error::input(format!(
                "a vehicle carries 1 to {VEHICLE_CAPACITY} passengers, got {}",
                members.len()
            )));
        }
        let idx = self.route_indices(members)?;
        let mut check = idx.clone();
        check.sort_unstable();
        if check.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::input("passenger listed twice in one vehicle"));
        }
        Ok(self.route_score(&self.nn_route(&idx), model))
    }

    /// Re-scores the routes of an assignment under another model, keeping
    /// its groups and drop-off orders.
    pub fn rescore<M: SatisfactionModel + ?Sized>(
        &self,
        assignment: &Assignment,
        model: &M,
    ) -> Result<Assignment> {
        let routes = assignment
            .vehicles
            .iter()
            .map(|v| self.route_indices(&v.order()))
            .collect::<Result<Vec<_>>>()?;
        let mut seen = vec![false; self.len()];
        for &i in routes.iter().flatten() {
            if std::mem::replace(&mut seen[i], true) {
                return Err(Error::input("passenger assigned twice"));
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::input("assignment does not cover every passenger"));
        }
        Ok(self.assignment_from_routes(routes, model))
    }
}

/// Mean per-passenger satisfaction of an assignment under the full model,
/// whatever objective produced it.
pub fn evaluate_assignment<M: SatisfactionModel + ?Sized>(
    instance: &Instance<'_>,
    assignment: &Assignment,
    full_model: &M,
) -> Result<f64> {
    let rescored = instance.rescore(assignment, full_model)?;
    Ok(rescored.objective / instance.len() as f64)
}
